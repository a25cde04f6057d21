#include "svol/drift.hpp"

#include <cmath>
#include <string>

namespace svol::drift {

std::vector<double> cholesky_lower(const std::vector<double>& m, int n) {
  if (n < 1 || m.size() != static_cast<size_t>(n) * n)
    throw ValidationError("cholesky: matrix size mismatch");
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, m[static_cast<size_t>(i) * n + i]);
  const double pivot_tol = 1e-12 * max_diag;

  std::vector<double> L(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = m[static_cast<size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        sum -= L[static_cast<size_t>(i) * n + k] * L[static_cast<size_t>(j) * n + k];
      if (i == j) {
        if (!(sum > pivot_tol))
          throw ValidationError("cholesky: matrix not positive definite (pivot " +
                                std::to_string(i + 1) + " = " + std::to_string(sum) + ")");
        L[static_cast<size_t>(i) * n + i] = std::sqrt(sum);
      } else {
        L[static_cast<size_t>(i) * n + j] = sum / L[static_cast<size_t>(j) * n + j];
      }
    }
  }
  return L;
}

std::vector<double> forward_substitute(const std::vector<double>& L, int n,
                                       const std::vector<double>& rhs) {
  std::vector<double> z(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double sum = rhs[static_cast<size_t>(i)];
    for (int k = 0; k < i; ++k) sum -= L[static_cast<size_t>(i) * n + k] * z[static_cast<size_t>(k)];
    const double piv = L[static_cast<size_t>(i) * n + i];
    if (piv == 0.0) throw ValidationError("forward_substitute: zero pivot");
    z[static_cast<size_t>(i)] = sum / piv;
  }
  return z;
}

DriftShift two_factor_shift(double alpha, double b, double rho, double kappa) {
  DriftShift shift;
  shift.gamma = {-0.5 * alpha * b * rho,
                 (alpha * b * rho * rho - 2.0 * kappa / b - b) /
                     (2.0 * std::sqrt(1.0 - rho * rho))};
  shift.residual = 0.0;
  return shift;
}

std::vector<double> row_cross_products(const std::vector<double>& L, int n_assets) {
  const int n = 2 * n_assets;
  std::vector<double> q(static_cast<size_t>(n_assets), 0.0);
  for (int i = 0; i < n_assets; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n_assets; ++j)
      sum += L[static_cast<size_t>(n_assets + i) * n + j] * L[static_cast<size_t>(i) * n + j];
    q[static_cast<size_t>(i)] = sum;
  }
  return q;
}

DriftShift multi_asset_shift(const MultiSabrParams& p, const std::vector<double>& L) {
  const int N = p.n_assets;
  const int n = 2 * N;
  const std::vector<double> q = row_cross_products(L, N);

  std::vector<double> rhs(static_cast<size_t>(n));
  for (int i = 0; i < N; ++i) {
    rhs[static_cast<size_t>(i)] = -0.5 * q[static_cast<size_t>(i)] * p.alpha[static_cast<size_t>(i)] *
                                  p.b[static_cast<size_t>(i)];
    rhs[static_cast<size_t>(N + i)] =
        -(p.kappa[static_cast<size_t>(i)] + 0.5 * p.b[static_cast<size_t>(i)] * p.b[static_cast<size_t>(i)]) /
        p.b[static_cast<size_t>(i)];
  }

  DriftShift shift;
  shift.gamma = forward_substitute(L, n, rhs);
  double residual = 0.0;
  for (int i = 0; i < n; ++i) {
    double lhs = 0.0;
    for (int j = 0; j <= i; ++j)
      lhs += L[static_cast<size_t>(i) * n + j] * shift.gamma[static_cast<size_t>(j)];
    residual = std::max(residual, std::abs(lhs - rhs[static_cast<size_t>(i)]));
  }
  shift.residual = residual;
  return shift;
}

double verify_shift_identity(const ModelSpec& model,
                             const std::vector<StateVector>& states) {
  const int n = model.state_dim();
  const int d = model.brownian_dim();
  const std::vector<double>& gamma = model.drift_shift().gamma;
  std::vector<double> v0(static_cast<size_t>(n)), vg(static_cast<size_t>(n)),
      vj(static_cast<size_t>(n));
  double worst = 0.0;
  for (const StateVector& x : states) {
    model.field(0, x.data(), v0.data());
    model.shifted_drift_field(x.data(), vg.data());
    for (int j = 1; j <= d; ++j) {
      model.field(j, x.data(), vj.data());
      for (int i = 0; i < n; ++i)
        vg[static_cast<size_t>(i)] += gamma[static_cast<size_t>(j - 1)] * vj[static_cast<size_t>(i)];
    }
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(v0[static_cast<size_t>(i)] - vg[static_cast<size_t>(i)]));
  }
  return worst;
}

}  // namespace svol::drift
