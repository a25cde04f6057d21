#include "svol/schemes.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace svol::schemes {

namespace {

void apply_flow(const ModelSpec& model, int j, double s, double* x, Diagnostics& diag) {
  try {
    model.flow(j, s, x, diag);
  } catch (const DomainError& e) {
    throw DomainError(std::string(e.what()) + " [flow " + std::to_string(j) + "]");
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string(e.what()) + " [flow " + std::to_string(j) + "]");
  }
}

void apply_drift_half(const ModelSpec& model, bool shifted, double s, double* x,
                      Diagnostics& diag) {
  try {
    if (shifted)
      model.shifted_drift_flow(s, x, diag);
    else
      model.flow(0, s, x, diag);
  } catch (const DomainError& e) {
    throw DomainError(std::string(e.what()) + " [drift flow]");
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string(e.what()) + " [drift flow]");
  }
}

// The printed composition for Lambda = -1 acts right to left: V_d first, V_1
// last. Lambda = +1 reverses the diffusion segment. gamma = null means
// unshifted amounts sqrt(dt)*z_j.
void apply_diffusions(const ModelSpec& model, double* x, double dt, const double* z,
                      double lambda, const double* gamma, Diagnostics& diag) {
  const int d = model.brownian_dim();
  const double sq = std::sqrt(dt);
  const auto amount = [&](int j) {
    double s = sq * z[j - 1];
    if (gamma) s += dt * gamma[j - 1];
    return s;
  };
  if (lambda < 0.0) {
    for (int j = d; j >= 1; --j) apply_flow(model, j, amount(j), x, diag);
  } else {
    for (int j = 1; j <= d; ++j) apply_flow(model, j, amount(j), x, diag);
  }
}

double shift_dot(const DriftShift& shift, const double* z) {
  double acc = 0.0;
  for (size_t j = 0; j < shift.gamma.size(); ++j) acc += shift.gamma[j] * z[j];
  return acc;
}

double shift_norm2(const DriftShift& shift) {
  double acc = 0.0;
  for (double g : shift.gamma) acc += g * g;
  return acc;
}

}  // namespace

void euler_step(const ModelSpec& model, double* x, double dt, const double* z,
                double* ws, Diagnostics& diag) {
  const int n = model.state_dim();
  const int d = model.brownian_dim();
  double* xf = ws;
  double* drift = ws + n;
  double* f = ws + 2 * n;

  std::memcpy(xf, x, sizeof(double) * static_cast<size_t>(n));
  for (int c : model.truncated_coords()) {
    if (xf[c] < 0.0) {
      xf[c] = 0.0;
      ++diag.clamp_hits;
    }
  }

  model.ito_drift(xf, drift);
  for (int i = 0; i < n; ++i) x[i] += dt * drift[i];

  const double sq = std::sqrt(dt);
  for (int j = 1; j <= d; ++j) {
    const double w = sq * z[j - 1];
    if (w == 0.0) continue;
    model.field(j, xf, f);
    for (int i = 0; i < n; ++i) x[i] += w * f[i];
  }

  // CEV-type asset legs absorb at zero in the continuous model, so an
  // increment that overshoots lands on the boundary instead of freezing at a
  // negative value. Mean-reverting factors stay as they are: for those the
  // floor above applies to the evaluation copy only (full truncation).
  for (int c : model.absorbing_coords()) {
    if (x[c] < 0.0) {
      x[c] = 0.0;
      ++diag.clamp_hits;
    }
  }
}

void nv_step(const ModelSpec& model, double* x, double dt, const double* z, double lambda,
             Diagnostics& diag) {
  const double half = 0.5 * dt;
  apply_drift_half(model, false, half, x, diag);
  apply_diffusions(model, x, dt, z, lambda, nullptr, diag);
  apply_drift_half(model, false, half, x, diag);
}

void nvd_step(const ModelSpec& model, double* x, double dt, const double* z, double lambda,
              Diagnostics& diag) {
  const double half = 0.5 * dt;
  const double* gamma = model.drift_shift().gamma.data();
  apply_drift_half(model, true, half, x, diag);
  apply_diffusions(model, x, dt, z, lambda, gamma, diag);
  apply_drift_half(model, true, half, x, diag);
}

double girsanov_step(const ModelSpec& model, double* x, double dt, const double* z,
                     double lambda, Diagnostics& diag) {
  const double half = 0.5 * dt;
  apply_drift_half(model, true, half, x, diag);
  apply_diffusions(model, x, dt, z, lambda, nullptr, diag);
  apply_drift_half(model, true, half, x, diag);
  return std::sqrt(dt) * shift_dot(model.drift_shift(), z);
}

double simulate_terminal(const ModelSpec& model, const TrajectoryConfig& cfg, double* x,
                         const double* z, const double* lambda, double* ws,
                         Diagnostics& diag) {
  if (cfg.n_steps < 1) throw ValidationError("simulate: n_steps must be >= 1");
  if (!(cfg.horizon > 0.0)) throw ValidationError("simulate: horizon must be > 0");

  const int d = model.brownian_dim();
  const int k_steps = cfg.n_steps;
  const double dt = cfg.horizon / k_steps;

  if (cfg.scheme == SchemeKind::Euler) {
    for (int k = 0; k < k_steps; ++k) {
      try {
        euler_step(model, x, dt, z + static_cast<size_t>(k) * d, ws, diag);
      } catch (const DomainError& e) {
        throw DomainError(std::string(e.what()) + " [step " + std::to_string(k) + "]");
      } catch (const IntegrationError& e) {
        throw IntegrationError(std::string(e.what()) + " [step " + std::to_string(k) + "]");
      }
    }
    return 1.0;
  }

  const bool shifted = cfg.scheme != SchemeKind::NV;
  const DriftShift& shift = model.drift_shift();
  const double* gamma = cfg.scheme == SchemeKind::NVd ? shift.gamma.data() : nullptr;
  const double half = 0.5 * dt;
  const double sq = std::sqrt(dt);
  double log_weight = 0.0;

  for (int k = 0; k < k_steps; ++k) {
    const double* zk = z + static_cast<size_t>(k) * d;
    try {
      if (cfg.fuse_drift) {
        // Adjacent half-steps merge: each step applies its leading half only
        // at k = 0, and a trailing half that absorbs the next step's lead.
        if (k == 0) apply_drift_half(model, shifted, half, x, diag);
        apply_diffusions(model, x, dt, zk, lambda[k], gamma, diag);
        apply_drift_half(model, shifted, k + 1 < k_steps ? dt : half, x, diag);
      } else {
        apply_drift_half(model, shifted, half, x, diag);
        apply_diffusions(model, x, dt, zk, lambda[k], gamma, diag);
        apply_drift_half(model, shifted, half, x, diag);
      }
      if (cfg.scheme == SchemeKind::NVG) log_weight += sq * shift_dot(shift, zk);
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " [step " + std::to_string(k) + "]");
    } catch (const IntegrationError& e) {
      throw IntegrationError(std::string(e.what()) + " [step " + std::to_string(k) + "]");
    }
  }

  if (cfg.scheme != SchemeKind::NVG) return 1.0;
  return std::exp(log_weight - 0.5 * shift_norm2(shift) * cfg.horizon);
}

SchemeOutput simulate_trajectory(const ModelSpec& model, const TrajectoryConfig& cfg,
                                 const StateVector& x0, const double* z,
                                 const double* lambda) {
  if (static_cast<int>(x0.size()) != model.state_dim())
    throw ValidationError("simulate: x0 has the wrong dimension");
  SchemeOutput out;
  out.terminal = x0;
  StateVector ws;
  if (cfg.scheme == SchemeKind::Euler) ws.resize(static_cast<size_t>(euler_workspace_size(model)));
  out.weight = simulate_terminal(model, cfg, out.terminal.data(), z, lambda,
                                 ws.empty() ? nullptr : ws.data(), out.diag);
  return out;
}

}  // namespace svol::schemes
