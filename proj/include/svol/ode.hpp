#pragma once

#include <span>

#include "svol/types.hpp"

namespace svol::ode {

// Non-owning view of a right-hand side f(t, y) -> dy. The callable must
// outlive the call it is passed to; integrate() never stores it.
class OdeRhs {
 public:
  template <class F>
  OdeRhs(const F& f)  // NOLINT: implicit by design
      : obj_(&f), call_([](const void* o, double t, const double* y, double* dy) {
          (*static_cast<const F*>(o))(t, y, dy);
        }) {}

  void operator()(double t, const double* y, double* dy) const { call_(obj_, t, y, dy); }

 private:
  const void* obj_;
  void (*call_)(const void*, double, const double*, double*);
};

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double min_step = 1e-12;
  int max_steps = 200000;
};

// Defaults used when a scheme (classical NV) solves a drift flow internally;
// looser than the oracle settings because the ODE error only needs to stay
// negligible against the scheme's own discretization error.
inline IntegratorConfig scheme_integrator_config() {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-8;
  cfg.abs_tol = 1e-12;
  return cfg;
}

// Classic fixed-step fourth-order Runge-Kutta over [t0, t0+s] in n_steps
// equal steps; y (length n) is advanced in place.
void rk4_fixed(const OdeRhs& f, int n, double t0, double s, int n_steps, double* y);

// Adaptive RK4 with step-doubling error control. Steps that throw DomainError
// or produce non-finite values are retried at half size down to min_step.
// Deterministic: identical inputs give bit-identical results.
void integrate(const OdeRhs& f, int n, double t0, double s, double* y,
               const IntegratorConfig& cfg = {});

inline void integrate(const OdeRhs& f, double t0, double s, std::span<double> y,
                      const IntegratorConfig& cfg = {}) {
  integrate(f, static_cast<int>(y.size()), t0, s, y.data(), cfg);
}

}  // namespace svol::ode
