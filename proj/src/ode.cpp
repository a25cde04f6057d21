#include "svol/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

namespace svol::ode {

namespace {

// Workspace layout: k1 k2 k3 k4 ytmp (5n) for rk4, plus y_full y_half (2n)
// for the step-doubling loop. Small systems run off the stack.
constexpr int kStackDim = 16;

void rk4_one(const OdeRhs& f, int n, double t, double h, const double* y, double* out,
             double* ws) {
  double* k1 = ws;
  double* k2 = ws + n;
  double* k3 = ws + 2 * n;
  double* k4 = ws + 3 * n;
  double* yt = ws + 4 * n;

  f(t, y, k1);
  for (int i = 0; i < n; ++i) yt[i] = y[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, yt, k2);
  for (int i = 0; i < n; ++i) yt[i] = y[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, yt, k3);
  for (int i = 0; i < n; ++i) yt[i] = y[i] + h * k3[i];
  f(t + h, yt, k4);
  for (int i = 0; i < n; ++i)
    out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

bool all_finite(const double* y, int n) {
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(y[i])) return false;
  return true;
}

}  // namespace

void rk4_fixed(const OdeRhs& f, int n, double t0, double s, int n_steps, double* y) {
  if (n_steps < 1) throw ValidationError("rk4_fixed: n_steps must be >= 1");
  double stack[5 * kStackDim];
  std::vector<double> heap;
  double* ws = stack;
  if (n > kStackDim) {
    heap.resize(5 * static_cast<size_t>(n));
    ws = heap.data();
  }
  std::vector<double> next(n);
  const double h = s / n_steps;
  for (int k = 0; k < n_steps; ++k) {
    rk4_one(f, n, t0 + k * h, h, y, next.data(), ws);
    std::copy(next.begin(), next.end(), y);
  }
}

void integrate(const OdeRhs& f, int n, double t0, double s, double* y,
               const IntegratorConfig& cfg) {
  if (s == 0.0) return;
  if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0) || cfg.max_steps < 1)
    throw ValidationError("integrate: tolerances must be positive, max_steps >= 1");

  double stack[7 * kStackDim];
  std::vector<double> heap;
  double* ws = stack;
  if (n > kStackDim) {
    heap.resize(7 * static_cast<size_t>(n));
    ws = heap.data();
  }
  double* y_full = ws + 5 * n;
  double* y_half = ws + 6 * n;

  const double dir = s > 0.0 ? 1.0 : -1.0;
  const double span = std::abs(s);
  double t = 0.0;     // elapsed, in [0, span]
  double h = span;    // smooth flows usually succeed in a single step
  int attempts = 0;

  while (t < span) {
    const double remaining = span - t;
    if (remaining <= cfg.min_step) break;  // arrived, up to accumulated roundoff
    h = std::min(h, remaining);
    if (h < cfg.min_step)
      throw IntegrationError("integrate: step underflow at t = " + std::to_string(t0 + dir * t));
    if (++attempts > cfg.max_steps)
      throw IntegrationError("integrate: step budget exhausted at t = " +
                             std::to_string(t0 + dir * t));

    const double tt = t0 + dir * t;
    const double hh = dir * h;
    bool ok = true;
    try {
      rk4_one(f, n, tt, hh, y, y_full, ws);
      rk4_one(f, n, tt, 0.5 * hh, y, y_half, ws);
      rk4_one(f, n, tt + 0.5 * hh, 0.5 * hh, y_half, y_half, ws);
      ok = all_finite(y_full, n) && all_finite(y_half, n);
    } catch (const DomainError&) {
      if (h <= 2.0 * cfg.min_step)
        throw IntegrationError("integrate: field domain error at t = " +
                               std::to_string(t0 + dir * t));
      ok = false;
    }
    if (!ok) {
      h *= 0.5;
      continue;
    }

    // Step-doubling estimate: the two-half-step solution is kept, its local
    // error is ~ |y_full - y_half| / 15 for a fourth-order method.
    double ratio = 0.0;
    for (int i = 0; i < n; ++i) {
      const double scale =
          cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_half[i]));
      ratio = std::max(ratio, std::abs(y_full[i] - y_half[i]) / (15.0 * scale));
    }

    if (ratio <= 1.0) {
      std::memcpy(y, y_half, sizeof(double) * n);
      t += h;
      const double grow = ratio > 0.0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
      h *= std::clamp(grow, 1.0, 5.0);
    } else {
      h *= std::clamp(0.9 * std::pow(ratio, -0.2), 0.1, 0.9);
    }
  }
}

}  // namespace svol::ode
