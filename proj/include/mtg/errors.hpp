#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtg {

// Malformed expression text. `offset` is the byte position of the first
// offending character in the source string.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t offset)
      : std::runtime_error(std::move(message)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation failures: unbound variables and non-finite results.
class EvalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad game / control-set / grid construction parameters.
class InvalidSpecError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grid misuse: out-of-range indices, too-coarse axes, mismatched grids.
class GridError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values produced by a solve or a Hamiltonian evaluation.
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A requested operation is not applicable (e.g. the backward-induction
// oracle on a multi-axis time grid).
class UnsupportedError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mathematical hypothesis required by a construction does not hold at the
// given point (e.g. the min-max margin needed by the covering strategy).
class HypothesisError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config file problems; message carries the line number where known.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mtg
