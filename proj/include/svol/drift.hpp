#pragma once

#include <vector>

#include "svol/models.hpp"
#include "svol/types.hpp"

namespace svol::drift {

// Cholesky factor L (lower triangular, row-major) of a symmetric
// positive-definite n x n matrix. A pivot must exceed 1e-12 times the
// largest diagonal entry; the error names the failing pivot.
std::vector<double> cholesky_lower(const std::vector<double>& m, int n);

// Solves L z = rhs for lower-triangular L.
std::vector<double> forward_substitute(const std::vector<double>& L, int n,
                                       const std::vector<double>& rhs);

// Closed-form shift for the two-factor family:
//   gamma_1 = -1/2 alpha b rho,
//   gamma_2 = (alpha b rho^2 - 2 kappa / b - b) / (2 sqrt(1 - rho^2)).
DriftShift two_factor_shift(double alpha, double b, double rho, double kappa);

// (gamma, delta) for the multi-asset model: the 2N equations
//   sum_j L[i][j]     shift_j = -1/2 q_i alpha_i b_i,
//   sum_j L[N+i][j]   shift_j = -(kappa_i + 1/2 b_i^2) / b_i,
// whose matrix is the Cholesky factor itself, solved by forward
// substitution. residual reports the max absolute defect of the system.
DriftShift multi_asset_shift(const MultiSabrParams& p, const std::vector<double>& L);

// q_i = sum_j L[N+i][j] L[i][j] (the cross-correlation row products).
std::vector<double> row_cross_products(const std::vector<double>& L, int n_assets);

// Max componentwise |V0(x) - V0^(gamma)(x) - sum_j gamma_j V_j(x)| over the
// sampled states: the pointwise identity defining the shifted drift.
double verify_shift_identity(const ModelSpec& model,
                             const std::vector<StateVector>& states);

}  // namespace svol::drift
