#pragma once

#include "svol/models.hpp"
#include "svol/types.hpp"

namespace svol::schemes {

// Result of a full trajectory (or a single step when used standalone).
// weight is 1 for the unweighted schemes and the density E(T) for the
// Girsanov variant.
struct SchemeOutput {
  StateVector terminal;
  double weight = 1.0;
  Diagnostics diag;
};

struct TrajectoryConfig {
  SchemeKind scheme = SchemeKind::NVd;
  int n_steps = 1;       // K
  double horizon = 1.0;  // T
  bool fuse_drift = false;
};

// Workspace requirement for the Euler step (floored copy, drift value, one
// diffusion field value).
inline int euler_workspace_size(const ModelSpec& model) { return 3 * model.state_dim(); }

// One Euler-Maruyama step, in place. z holds the d standard normal draws of
// the step; ws must provide euler_workspace_size doubles.
void euler_step(const ModelSpec& model, double* x, double dt, const double* z,
                double* ws, Diagnostics& diag);

// One splitting step, in place: drift half-step, the d diffusion flows in the
// order selected by lambda (= +-1), drift half-step.
void nv_step(const ModelSpec& model, double* x, double dt, const double* z,
             double lambda, Diagnostics& diag);

// Same structure with the modified drift flow and mean-shifted diffusion
// amounts sqrt(dt)*z_j + dt*gamma_j.
void nvd_step(const ModelSpec& model, double* x, double dt, const double* z,
              double lambda, Diagnostics& diag);

// Weighted variant: modified drift flow with unshifted amounts. Returns the
// step's contribution sqrt(dt) * sum_j gamma_j z_j to the log-density; the
// caller finishes the weight as exp(sum - 0.5*|gamma|^2*T).
double girsanov_step(const ModelSpec& model, double* x, double dt, const double* z,
                     double lambda, Diagnostics& diag);

// Advances x in place through all n_steps and returns the trajectory weight.
// z is step-major with n_steps*brownian_dim entries; lambda has n_steps
// entries of +-1 (ignored for Euler and may then be null). ws is only needed
// for Euler and may be null otherwise. Allocation-free.
double simulate_terminal(const ModelSpec& model, const TrajectoryConfig& cfg, double* x,
                         const double* z, const double* lambda, double* ws,
                         Diagnostics& diag);

// Convenience wrapper that copies x0 and owns its workspace.
SchemeOutput simulate_trajectory(const ModelSpec& model, const TrajectoryConfig& cfg,
                                 const StateVector& x0, const double* z,
                                 const double* lambda);

}  // namespace svol::schemes
