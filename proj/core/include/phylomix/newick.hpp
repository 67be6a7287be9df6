#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "phylomix/phylogeny.hpp"

namespace phylomix {

// Name <-> integer label table, read from a two-column TSV.
class LabelTable {
 public:
  LabelTable() = default;
  explicit LabelTable(std::map<std::string, int> name_to_label);

  static LabelTable parse_tsv(std::string_view text);
  static LabelTable load(const std::filesystem::path& path);

  // Returns 0 when the name is unknown.
  int label(const std::string& name) const;
  const std::string& name(int label) const;
  bool empty() const { return to_label_.empty(); }

 private:
  std::map<std::string, int> to_label_;
  std::map<int, std::string> to_name_;
};

struct NewickOptions {
  // When false, missing branch lengths are read as 1.
  bool require_lengths = true;
  // When null, leaf names must be the decimal labels 1..n.
  const LabelTable* labels = nullptr;
};

// Parses one tree. [Bracketed comments] count as whitespace. A root of degree 2 is suppressed, its two child edges
// merged. Throws ParseError (with byte offset) on syntax errors and
// ValidationError on non-binary vertices or bad lengths.
Phylogeny parse_newick(std::string_view text, const NewickOptions& options = {});

// Canonical form: rooted on the internal edge next to the neighbor of leaf 1,
// children ordered by their smallest descendant label, weights written with
// 12 significant digits.
std::string to_newick(const Phylogeny& tree, bool with_lengths = true);

// One tree per non-empty line; lines holding only a [comment] are skipped.
std::vector<Phylogeny> read_newick_file(const std::filesystem::path& path,
                                        const NewickOptions& options = {});
// A non-empty comment is written first as its own [bracketed] line.
void write_newick_file(const std::filesystem::path& path,
                       const std::vector<Phylogeny>& trees, bool with_lengths = true,
                       const std::string& comment = {});

}  // namespace phylomix
