#include "phylomix/newick.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "phylomix/errors.hpp"

namespace phylomix {

LabelTable::LabelTable(std::map<std::string, int> name_to_label)
    : to_label_(std::move(name_to_label)) {
  for (const auto& [name, label] : to_label_) {
    if (label < 1) throw InvalidArgument("label table entries must be >= 1");
    if (!to_name_.emplace(label, name).second) {
      throw InvalidArgument("label " + std::to_string(label) + " used twice");
    }
  }
}

LabelTable LabelTable::parse_tsv(std::string_view text) {
  std::map<std::string, int> table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("label table line has no tab", 0, line_no);
    }
    const std::string name = line.substr(0, tab);
    const std::string num = line.substr(tab + 1);
    int label = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), label);
    if (ec != std::errc() || ptr != num.data() + num.size()) {
      throw ParseError("label table line has a bad integer", 0, line_no);
    }
    if (!table.emplace(name, label).second) {
      throw ParseError("duplicate name in label table", 0, line_no);
    }
  }
  return LabelTable(std::move(table));
}

LabelTable LabelTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open label table " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_tsv(buf.str());
}

int LabelTable::label(const std::string& name) const {
  auto it = to_label_.find(name);
  return it == to_label_.end() ? 0 : it->second;
}

const std::string& LabelTable::name(int label) const {
  auto it = to_name_.find(label);
  if (it == to_name_.end()) throw InvalidArgument("unknown label");
  return it->second;
}

namespace {

struct RawNode {
  std::vector<std::unique_ptr<RawNode>> children;
  std::string name;
  double length = 0.0;
  bool has_length = false;
  std::size_t offset = 0;
};

class NewickReader {
 public:
  explicit NewickReader(std::string_view text) : text_(text) {}

  std::unique_ptr<RawNode> read() {
    skip_ws();
    auto root = subtree();
    skip_ws();
    if (peek() == ':') {
      ++pos_;
      read_length(*root);
    }
    skip_ws();
    if (peek() != ';') fail("expected ';'");
    ++pos_;
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after ';'");
    return root;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  // Whitespace and [bracketed comments].
  void skip_ws() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == '[') {
        const std::size_t close = text_.find(']', pos_);
        if (close == std::string_view::npos) fail("unterminated comment");
        pos_ = close + 1;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("newick syntax error at byte " + std::to_string(pos_) + ": " + what,
                     pos_);
  }

  std::unique_ptr<RawNode> subtree() {
    auto node = std::make_unique<RawNode>();
    node->offset = pos_;
    skip_ws();
    if (peek() == '(') {
      ++pos_;
      while (true) {
        skip_ws();
        auto child = subtree();
        skip_ws();
        if (peek() == ':') {
          ++pos_;
          read_length(*child);
        }
        node->children.push_back(std::move(child));
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
      skip_ws();
      node->name = read_name();
    } else {
      node->name = read_name();
      if (node->name.empty()) fail("expected a leaf name or '('");
    }
    return node;
  }

  std::string read_name() {
    if (peek() == '\'') {
      ++pos_;
      std::string out;
      while (pos_ < text_.size() && text_[pos_] != '\'') out += text_[pos_++];
      if (peek() != '\'') fail("unterminated quoted name");
      ++pos_;
      return out;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' ||
          std::isspace(static_cast<unsigned char>(c))) {
        break;
      }
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  void read_length(RawNode& node) {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
          c == '+' || c == 'e' || c == 'E') {
        ++pos_;
      } else {
        break;
      }
    }
    const std::string num(text_.substr(start, pos_ - start));
    if (num.empty()) fail("expected a branch length");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (ec != std::errc() || ptr != num.data() + num.size()) {
      pos_ = start;
      fail("malformed branch length '" + num + "'");
    }
    node.length = v;
    node.has_length = true;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class TreeAssembler {
 public:
  TreeAssembler(const NewickOptions& options) : options_(options) {}

  Phylogeny assemble(const RawNode& root) {
    check_structure(root, true);
    n_ = count_leaves(root);
    if (n_ < 2) throw ValidationError("tree has fewer than 2 leaves");
    seen_.assign(n_, 0);
    next_internal_ = n_;
    if (root.children.size() == 2) {
      // Suppress the degree-2 root: connect its two children directly.
      const int left = emit(*root.children[0]);
      const int right = emit(*root.children[1]);
      edges_.push_back({left, right,
                        length_of(*root.children[0]) + length_of(*root.children[1])});
    } else {
      const int v = next_internal_++;
      for (const auto& child : root.children) {
        edges_.push_back({v, emit(*child), length_of(*child)});
      }
    }
    return Phylogeny(n_, std::move(edges_));
  }

 private:
  void check_structure(const RawNode& node, bool is_root) {
    if (node.children.empty()) return;
    const std::size_t c = node.children.size();
    const bool ok = is_root ? (c == 2 || c == 3) : c == 2;
    if (!ok) {
      throw ValidationError("non-binary vertex at byte " + std::to_string(node.offset));
    }
    for (const auto& child : node.children) check_structure(*child, false);
  }

  int count_leaves(const RawNode& node) const {
    if (node.children.empty()) return 1;
    int total = 0;
    for (const auto& child : node.children) total += count_leaves(*child);
    return total;
  }

  double length_of(const RawNode& node) const {
    if (!node.has_length) {
      if (options_.require_lengths) {
        throw ValidationError("missing branch length at byte " +
                              std::to_string(node.offset));
      }
      return 1.0;
    }
    if (!std::isfinite(node.length) || node.length < 0.0) {
      throw ValidationError("negative branch length at byte " +
                            std::to_string(node.offset));
    }
    return node.length;
  }

  int leaf_label(const RawNode& node) const {
    int label = 0;
    if (options_.labels != nullptr) {
      label = options_.labels->label(node.name);
    } else {
      const auto& s = node.name;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), label);
      if (ec != std::errc() || ptr != s.data() + s.size()) label = 0;
    }
    if (label < 1 || label > n_) {
      throw ValidationError("leaf '" + node.name + "' does not map to a label in [1," +
                            std::to_string(n_) + "]");
    }
    return label;
  }

  // Returns the vertex id of `node`, emitting edges to its children.
  int emit(const RawNode& node) {
    if (node.children.empty()) {
      const int label = leaf_label(node);
      if (seen_[label - 1]) {
        throw ValidationError("leaf label " + std::to_string(label) + " appears twice");
      }
      seen_[label - 1] = 1;
      return label - 1;
    }
    const int v = next_internal_++;
    for (const auto& child : node.children) {
      edges_.push_back({v, emit(*child), length_of(*child)});
    }
    return v;
  }

  const NewickOptions& options_;
  int n_ = 0;
  int next_internal_ = 0;
  std::vector<char> seen_;
  std::vector<TreeEdge> edges_;
};

std::string format_length(double w) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", w);
  return buf;
}

class NewickWriter {
 public:
  NewickWriter(const Phylogeny& tree, bool with_lengths)
      : tree_(tree), with_lengths_(with_lengths), min_label_(tree.vertex_count(), 0) {}

  std::string write() {
    const int n = tree_.n();
    if (n == 2) {
      const double w = tree_.edges()[0].w;
      return with_lengths_ ? "(1:" + format_length(w) + ",2:0);" : "(1,2);";
    }
    const int p = tree_.neighbors(0)[0].vertex;
    if (n == 3) {
      root_side(p, -1);
      return subtree(p, -1) + ";";
    }
    // Internal neighbor of p with the smallest label on its side.
    int q = -1;
    int q_edge = -1;
    int best = n + 1;
    for (const auto& nb : tree_.neighbors(p)) {
      if (tree_.is_leaf(nb.vertex)) continue;
      const int m = root_side(nb.vertex, p);
      if (m < best) {
        best = m;
        q = nb.vertex;
        q_edge = nb.edge;
      }
    }
    root_side(p, q);
    std::string out = "(" + subtree(p, q);
    if (with_lengths_) out += ":" + format_length(tree_.edges()[q_edge].w);
    out += "," + subtree(q, p);
    if (with_lengths_) out += ":0";
    return out + ");";
  }

 private:
  // Fills min_label_ for the subtree at v hanging away from `from`.
  int root_side(int v, int from) {
    if (tree_.is_leaf(v) && from != -1) return min_label_[v] = v + 1;
    int m = tree_.n() + 1;
    for (const auto& nb : tree_.neighbors(v)) {
      if (nb.vertex == from) continue;
      m = std::min(m, root_side(nb.vertex, v));
    }
    if (tree_.is_leaf(v)) m = std::min(m, v + 1);
    return min_label_[v] = m;
  }

  std::string subtree(int v, int from) {
    if (tree_.is_leaf(v)) return std::to_string(v + 1);
    std::vector<Phylogeny::Adjacent> kids;
    for (const auto& nb : tree_.neighbors(v)) {
      if (nb.vertex != from) kids.push_back(nb);
    }
    std::sort(kids.begin(), kids.end(), [&](const auto& x, const auto& y) {
      return min_label_[x.vertex] < min_label_[y.vertex];
    });
    std::string out = "(";
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i) out += ",";
      out += subtree(kids[i].vertex, v);
      if (with_lengths_) out += ":" + format_length(tree_.edges()[kids[i].edge].w);
    }
    return out + ")";
  }

  const Phylogeny& tree_;
  bool with_lengths_;
  std::vector<int> min_label_;
};

}  // namespace

Phylogeny parse_newick(std::string_view text, const NewickOptions& options) {
  NewickReader reader(text);
  const auto root = reader.read();
  if (root->children.empty()) throw ValidationError("tree has fewer than 2 leaves");
  TreeAssembler assembler(options);
  return assembler.assemble(*root);
}

std::string to_newick(const Phylogeny& tree, bool with_lengths) {
  return NewickWriter(tree, with_lengths).write();
}

std::vector<Phylogeny> read_newick_file(const std::filesystem::path& path,
                                        const NewickOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open newick file " + path.string());
  std::vector<Phylogeny> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    // A line holding only a [comment] carries no tree.
    if (line[first] == '[' && line.find(';') == std::string::npos) continue;
    out.push_back(parse_newick(line, options));
  }
  return out;
}

void write_newick_file(const std::filesystem::path& path,
                       const std::vector<Phylogeny>& trees, bool with_lengths,
                       const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write newick file " + path.string());
  if (comment.find_first_of("[]\n") != std::string::npos) {
    throw InvalidArgument("newick comments may not contain brackets or newlines");
  }
  if (!comment.empty()) out << "[" << comment << "]\n";
  for (const auto& t : trees) out << to_newick(t, with_lengths) << "\n";
}

}  // namespace phylomix
