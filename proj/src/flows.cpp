#include "svol/flows.hpp"

#include <cmath>

namespace svol::flows {

double expm1_ratio(double c, double s) {
  const double cs = c * s;
  if (std::abs(cs) < 1e-8) return s * (1.0 + 0.5 * cs);
  return std::expm1(cs) / c;
}

double pow_opt(double x, double p) {
  if (p == 1.0) return x;
  if (p == 0.5) return std::sqrt(x);
  if (p == 2.0) return x * x;
  if (p == 3.0) return x * x * x;
  if (p == 0.0) return 1.0;
  return std::pow(x, p);
}

double power_ode_flow(double beta, double x, double H, Diagnostics* diag) {
  if (x < 0.0) throw DomainError("power_ode_flow: negative initial value");
  double out;
  if (beta == 1.0) {
    out = x * std::exp(H);
  } else {
    const double e = 1.0 - beta;
    const double base = e * H + pow_opt(x, e);
    if (base <= 0.0) {
      if (base < 0.0 && diag != nullptr) ++diag->clamp_hits;
      return 0.0;
    }
    out = pow_opt(base, 1.0 / e);
  }
  if (!std::isfinite(out)) throw RangeError("power_ode_flow: result overflows");
  return out;
}

double ramp_power_integral(double y0, double rate, double p, double s) {
  if (y0 < 0.0) throw DomainError("ramp_power_integral: negative start value");
  if (rate == 0.0 || s == 0.0) return s * pow_opt(y0, p);
  const double m = p + 1.0;
  const double end = y0 + rate * s;
  if (end < 0.0) throw DomainError("ramp_power_integral: ramp crosses zero");
  if (y0 == 0.0) return pow_opt(end, m) / (m * rate);
  // y0^m * expm1(m log1p(rate s / y0)) keeps the difference of the two m-th
  // powers exact when rate·s << y0.
  return pow_opt(y0, m) * std::expm1(m * std::log1p(rate * s / y0)) / (m * rate);
}

}  // namespace svol::flows
