#pragma once

#include <memory>
#include <string>
#include <vector>

#include "svol/types.hpp"

namespace svol {

// A stochastic-volatility diffusion in Stratonovich form
//   dX = V0 dt + sum_j V_j o dB^j
// together with the exact flows the splitting schemes compose. The drift can
// also be queried in Ito form (Euler scheme) and in the shifted form
// V0 - sum_j gamma_j V_j whose flow is closed for every catalog model.
// Instances are immutable after construction and shareable across threads.
class ModelSpec {
 public:
  virtual ~ModelSpec() = default;

  virtual const std::string& name() const = 0;
  virtual int state_dim() const = 0;
  virtual int brownian_dim() const = 0;
  virtual int n_assets() const = 0;

  // j = 0 is the Stratonovich drift V0; j in [1, brownian_dim()] the
  // diffusion fields. Throws DomainError outside the field's domain.
  virtual void field(int j, const double* x, double* out) const = 0;
  virtual void ito_drift(const double* x, double* out) const = 0;
  virtual void shifted_drift_field(const double* x, double* out) const = 0;

  // e^{s V_j} applied to x in place. j = 0 is the classical drift flow; it
  // may delegate part of the state to the ODE oracle (counted in
  // diag.oracle_calls). Diffusion flows are closed-form for every j >= 1.
  virtual void flow(int j, double s, double* x, Diagnostics& diag) const = 0;

  // e^{s V0^(gamma)} applied in place; closed-form, never calls the oracle.
  virtual void shifted_drift_flow(double s, double* x, Diagnostics& diag) const = 0;

  virtual const DriftShift& drift_shift() const = 0;

  // True when the classical drift flow needs no ODE oracle (Heston).
  virtual bool drift_flow_closed() const = 0;

  // Coordinates floored at zero before Euler-scheme field evaluation.
  virtual const std::vector<int>& truncated_coords() const = 0;

  // Coordinates whose continuous dynamics absorb at zero (CEV-type asset
  // legs with beta < 1). An Euler increment that overshoots below zero is
  // projected back onto the boundary, matching what the closed flows do;
  // mean-reverting factors are not listed here and only get the evaluation
  // floor above.
  virtual const std::vector<int>& absorbing_coords() const = 0;

  // Prices entering the payoff, length n_assets().
  virtual void asset_values(const double* x, double* out) const = 0;
};

struct HestonParams {
  double mu = 0.0;
  double kappa = 0.0;
  double theta = 0.0;
  double xi = 0.0;
  double rho = 0.0;
  bool log_chart = true;  // simulate log-price by default
};

struct SabrParams {
  double a = 0.0;
  double b = 0.0;
  double beta = 0.0;
  double rho = 0.0;
};

struct GenSabrParams {
  double a = 0.0;
  double b = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double kappa = 0.0;
  double theta = 0.0;
};

struct MultiSabrParams {
  int n_assets = 0;
  std::vector<double> a, b, alpha, beta, kappa, theta;
  std::vector<double> rho;  // 2N x 2N correlation, row-major, assets first
};

std::unique_ptr<ModelSpec> make_heston(const HestonParams& p);
std::unique_ptr<ModelSpec> make_sabr(const SabrParams& p);
std::unique_ptr<ModelSpec> make_gensabr(const GenSabrParams& p);
std::unique_ptr<ModelSpec> make_multisabr(const MultiSabrParams& p);

// The exponent branches (beta = 1/2, beta = 1, in between) are selected by
// exact comparison, so beta within 1e-12 of an endpoint snaps onto it.
double snap_beta(double beta);

}  // namespace svol
