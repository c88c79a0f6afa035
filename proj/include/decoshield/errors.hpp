#pragma once

#include <stdexcept>
#include <string>

namespace decoshield {

// Bad shapes, non-finite entries, non-states, inconsistent parameters.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure did not meet its accuracy contract.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SearchFailure : public NumericError {
 public:
  SearchFailure(const std::string& what, std::string scan_trace)
      : NumericError(what), trace_(std::move(scan_trace)) {}
  const std::string& scan_trace() const { return trace_; }

 private:
  std::string trace_;
};

// A formula is only derived for a restricted class of models.
class UnsupportedModel : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace decoshield
