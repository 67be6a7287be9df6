#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phylomix {

// Base class of every error raised by the library. The CLI maps each
// subclass to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset, std::size_t line = 0)
      : Error(what), offset_(offset), line_(line) {}

  // Byte offset into the parsed text (Newick) or 0 when not applicable.
  std::size_t offset() const { return offset_; }
  // 1-based line number (alignments, matrices) or 0 when not applicable.
  std::size_t line() const { return line_; }

 private:
  std::size_t offset_;
  std::size_t line_;
};

class NoQuasicherries : public Error {
 public:
  NoQuasicherries() : Error("no leaf pair reached the quasicherry threshold") {}
};

class ComponentCountMismatch : public Error {
 public:
  ComponentCountMismatch(std::size_t expected, std::size_t found)
      : Error("inferred " + std::to_string(found) + " pair clusters, expected " +
              std::to_string(expected)),
        expected_(expected),
        found_(found) {}

  std::size_t expected() const { return expected_; }
  std::size_t found() const { return found_; }

 private:
  std::size_t expected_;
  std::size_t found_;
};

class EmptyBin : public Error {
 public:
  explicit EmptyBin(std::size_t component)
      : Error("site bin " + std::to_string(component + 1) + " is empty"),
        component_(component) {}

  std::size_t component() const { return component_; }

 private:
  std::size_t component_;
};

class InconsistentMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace phylomix
