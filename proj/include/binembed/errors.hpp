#pragma once

#include <stdexcept>
#include <string>

namespace binembed {

// Error taxonomy. The CLI maps ConfigError to exit code 2 and every other
// BinembedError to exit code 1.
class BinembedError : public std::runtime_error {
 public:
  explicit BinembedError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: invalid dimensions, unknown keys, out-of-range knobs.
class ConfigError : public BinembedError {
 public:
  explicit ConfigError(const std::string& msg) : BinembedError(msg) {}
};

// Malformed persisted data (JSONL rows, checkpoints, CSV).
class SchemaError : public BinembedError {
 public:
  explicit SchemaError(const std::string& msg) : BinembedError(msg) {}
};

// Semantically invalid data (duplicate ids, label not in label set, ...).
class ValidationError : public BinembedError {
 public:
  explicit ValidationError(const std::string& msg) : BinembedError(msg) {}
};

// A caller broke an API contract (shape mismatch, frozen-parameter step,
// non-stochastic targets, mixed-batch loss inputs).
class ContractError : public BinembedError {
 public:
  explicit ContractError(const std::string& msg) : BinembedError(msg) {}
};

// Non-finite values where finite ones are required.
class NumericError : public BinembedError {
 public:
  explicit NumericError(const std::string& msg) : BinembedError(msg) {}
};

// Index or id outside the valid range.
class RangeError : public BinembedError {
 public:
  explicit RangeError(const std::string& msg) : BinembedError(msg) {}
};

// Filesystem-level failures.
class IoError : public BinembedError {
 public:
  explicit IoError(const std::string& msg) : BinembedError(msg) {}
};

// Toy-language front end: syntax errors carry line/column.
class SyntaxError : public BinembedError {
 public:
  SyntaxError(const std::string& msg, int line, int col)
      : BinembedError(msg + " (line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ")"),
        line_(line),
        col_(col) {}
  int line() const { return line_; }
  int column() const { return col_; }

 private:
  int line_;
  int col_;
};

// Source parses lexically but uses a construct the toy grammar rejects.
class UnsupportedConstructError : public SyntaxError {
 public:
  UnsupportedConstructError(const std::string& what, int line, int col)
      : SyntaxError("unsupported construct: " + what, line, col) {}
};

}  // namespace binembed
