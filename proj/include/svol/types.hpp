#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace svol {

using StateVector = std::vector<double>;

enum class SchemeKind { Euler, NV, NVd, NVG };

const char* scheme_name(SchemeKind kind);
SchemeKind scheme_from_name(const std::string& name);

// Counters reported alongside every estimate. clamp_hits counts activations
// of the positive-part guards inside the closed-form flows; oracle_calls
// counts delegations to the numerical ODE integrator (zero for the
// drift-shifted scheme on every catalog model).
struct Diagnostics {
  std::uint64_t clamp_hits = 0;
  std::uint64_t oracle_calls = 0;

  Diagnostics& operator+=(const Diagnostics& o) {
    clamp_hits += o.clamp_hits;
    oracle_calls += o.oracle_calls;
    return *this;
  }
};

// Per-Brownian drift parameters gamma (and delta, appended, for the
// multi-asset model). residual records the max absolute defect of the
// defining linear equations; it is zero for the closed-form two-factor case.
struct DriftShift {
  std::vector<double> gamma;
  double residual = 0.0;
};

// Bad parameters, configs, or initial states. CLI exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Evaluation of a field or flow outside its admissible domain. Exit code 3.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Power-branch overflow in a closed-form flow.
struct RangeError : std::range_error {
  using std::range_error::range_error;
};

// ODE integrator failures (budget exhausted, step underflow).
struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace svol
