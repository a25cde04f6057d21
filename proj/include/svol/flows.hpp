#pragma once

#include "svol/types.hpp"

namespace svol::flows {

// (e^{cs} - 1) / c with the small-argument limit handled by a short series,
// so expressions like (e^{b rho s}-1)/(b rho) stay accurate as rho -> 0.
double expm1_ratio(double c, double s);

// std::pow with exact fast paths for the exponents the model flows hit most.
double pow_opt(double x, double p);

// Exact solution at "time" H of  dy = y^beta dH, y(0) = x >= 0:
//   [(1-beta) H + x^{1-beta}]_+^{1/(1-beta)}   for 0 < beta < 1,
//   x e^H                                      for beta = 1.
// The positive part makes zero absorbing; active clamps are counted in diag
// when one is supplied. Throws RangeError if the result overflows.
double power_ode_flow(double beta, double x, double H, Diagnostics* diag);

// ∫_0^s (y0 + rate·t)^p dt for y0 >= 0, evaluated without cancellation even
// when rate·s is tiny relative to y0. The ramp must stay nonnegative.
double ramp_power_integral(double y0, double rate, double p, double s);

}  // namespace svol::flows
