#pragma once

#include <stdexcept>
#include <string>

namespace spartra {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ScopeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EnumerationGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateSolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shared numeric settings. Every relative tolerance in the library is derived
// from base_tol unless a call site overrides it.
struct Context {
  double base_tol = 1e-8;
  double rank_one_tol = 1e-5;
  double support_tol = 1e-6;
  double corank_rel = 1e-6;
  double multiplicity_rel = 1e-6;
  long long enumeration_guard = 1000000;
};

inline const Context& default_context() {
  static const Context ctx{};
  return ctx;
}

}  // namespace spartra
