#pragma once

#include <stdexcept>
#include <string>

namespace sievesmm {

// Malformed input: wrong sizes, non-finite values, violated preconditions.
class validation_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function (e.g. a quantile at 0 or 1).
class domain_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Degenerate parameters or data: vanishing weights, constant series, singular systems.
class degenerate_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: infinite moments, divergent sums, root finding without a bracket.
class numeric_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Requested feature outside what a calculator supports.
class unsupported_error : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Stable machine-readable code for error reports.
inline std::string error_code(const std::exception& e) {
  if (dynamic_cast<const validation_error*>(&e)) return "validation_error";
  if (dynamic_cast<const domain_error*>(&e)) return "domain_error";
  if (dynamic_cast<const degenerate_error*>(&e)) return "degenerate_error";
  if (dynamic_cast<const numeric_error*>(&e)) return "numeric_error";
  if (dynamic_cast<const unsupported_error*>(&e)) return "unsupported_error";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
  return "runtime_error";
}

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw validation_error(what);
}
} // namespace detail

} // namespace sievesmm
