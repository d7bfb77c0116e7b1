#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace attnplaus {

// Error families map 1:1 onto CLI exit codes.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorKind::usage, w) {}
};

struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};

struct EmptySentence : DataError {
  explicit EmptySentence(const std::string& w = "empty or whitespace-only sentence")
      : DataError(w) {}
};

struct HighlightOutOfRange : DataError {
  HighlightOutOfRange(std::size_t index, std::size_t token_count,
                      const std::string& pair_id = "")
      : DataError("highlight index " + std::to_string(index) + " out of range for " +
                  std::to_string(token_count) + " tokens" +
                  (pair_id.empty() ? "" : " (pair " + pair_id + ")")),
        index(index),
        token_count(token_count),
        pair_id(pair_id) {}
  std::size_t index;
  std::size_t token_count;
  std::string pair_id;
};

struct SchemaError : DataError {
  explicit SchemaError(const std::string& w) : DataError(w) {}
};

struct IoError : DataError {
  explicit IoError(const std::string& w) : DataError(w) {}
};

struct EmptySelection : DataError {
  explicit EmptySelection(const std::string& w = "selection is empty") : DataError(w) {}
};

struct MissingPosTags : DataError {
  explicit MissingPosTags(const std::string& w = "dataset lacks POS tags") : DataError(w) {}
};

struct FormatError : DataError {
  explicit FormatError(const std::string& w, std::size_t line = 0)
      : DataError(line ? w + " (line " + std::to_string(line) + ")" : w), line(line) {}
  std::size_t line;
};

struct DimensionError : DataError {
  explicit DimensionError(const std::string& w) : DataError(w) {}
};

struct RangeError : DataError {
  explicit RangeError(const std::string& w) : DataError(w) {}
};

struct DegenerateTruth : DataError {
  explicit DegenerateTruth(const std::string& w = "truth masks contain no positive tokens")
      : DataError(w) {}
};

struct UndefinedCorrelation : DataError {
  explicit UndefinedCorrelation(const std::string& w = "correlation undefined")
      : DataError(w) {}
};

struct EmptyVector : DataError {
  explicit EmptyVector(const std::string& w = "empty vector") : DataError(w) {}
};

struct TrainingDiverged : NumericError {
  explicit TrainingDiverged(std::size_t epoch)
      : NumericError("training diverged at epoch " + std::to_string(epoch)), epoch(epoch) {}
  std::size_t epoch;
};

}  // namespace attnplaus
