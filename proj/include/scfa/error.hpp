#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scfa {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ZeroVarianceColumn : public Error {
 public:
  explicit ZeroVarianceColumn(std::size_t column)
      : Error("column " + std::to_string(column) + " has zero variance"),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class RankDeficientSample : public Error {
 public:
  RankDeficientSample() : Error("sample moment matrix is singular") {}
};

class DidNotConverge : public Error {
 public:
  explicit DidNotConverge(int max_iters)
      : Error("optimizer did not converge within " + std::to_string(max_iters) +
              " iterations"),
        max_iters_(max_iters) {}
  int max_iters() const noexcept { return max_iters_; }

 private:
  int max_iters_;
};

class TooFewPoints : public Error {
 public:
  TooFewPoints(std::size_t n, std::size_t k)
      : Error("need more than " + std::to_string(k) + " points, got " +
              std::to_string(n)) {}
};

class UnknownNode : public Error {
 public:
  explicit UnknownNode(long long id)
      : Error("node id " + std::to_string(id) + " does not appear in the graph"),
        id_(id) {}
  long long id() const noexcept { return id_; }

 private:
  long long id_;
};

class InvalidInit : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class MissingPartition : public Error {
 public:
  MissingPartition() : Error("a partition is required to expand per-group models") {}
};

// Input-file problems; `line` is 1-based, 0 when not tied to a line.
class FormatError : public Error {
 public:
  FormatError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace scfa
