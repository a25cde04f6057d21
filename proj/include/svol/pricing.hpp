#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "svol/models.hpp"
#include "svol/types.hpp"

namespace svol::pricing {

// Vanilla payoffs on the terminal asset values. The basket uses equal weights
// unless explicit ones are given.
struct Payoff {
  enum class Kind { EuropeanCall, BasketCall };

  Kind kind = Kind::EuropeanCall;
  double strike = 1.0;
  std::vector<double> weights;  // basket only; empty selects equal weights

  // strike >= 0 (0 degenerates to a forward, handy for sanity runs);
  // weights, when present, nonnegative and summing to 1 within 1e-12.
  void validate(int n_assets) const;
  double evaluate(const double* assets, int n_assets) const;
};

Payoff european_call(double strike);
Payoff basket_call(double strike, std::vector<double> weights = {});

// Where the uniforms come from: "sobol" (seed unused) or "mc".
struct SequenceSpec {
  std::string kind = "sobol";
  uint64_t seed = 0;
};

struct RunSettings {
  SchemeKind scheme = SchemeKind::NVd;
  int n_steps = 8;
  uint64_t n_paths = uint64_t{1} << 20;
  double horizon = 1.0;
  bool fuse_drift = false;
  SequenceSpec sequence;
  int threads = 1;
};

struct EstimateReport {
  double estimate = 0.0;
  double std_error = 0.0;  // sample standard error of the per-path values
  uint64_t n_paths = 0;
  double wall_seconds = 0.0;
  Diagnostics diag;
};

// Core estimator: mean of value(state, assets, weight) over trajectories
// 0..n_paths-1. The callable must be pure; it runs concurrently. Trajectories
// are consumed in fixed 8192-path chunks with chunk-local sums and a pairwise
// reduction over chunk results, so the estimate is bit-identical for any
// thread count.
using PathValue =
    std::function<double(const double* state, const double* assets, double weight)>;
EstimateReport estimate_mean(const ModelSpec& model, const RunSettings& run,
                             const StateVector& x0, const PathValue& value);

// Option price under zero interest rate: mean of weight * payoff(assets).
EstimateReport price(const ModelSpec& model, const RunSettings& run, const StateVector& x0,
                     const Payoff& payoff);

// Weighted mean of one terminal state coordinate.
EstimateReport mean_state(const ModelSpec& model, const RunSettings& run,
                          const StateVector& x0, int coord);

// Mean of the trajectory weight itself (sample variance = std_error^2 * M).
EstimateReport weight_mean(const ModelSpec& model, const RunSettings& run,
                           const StateVector& x0);

// E[X2(T)] against the exact mean theta + (x2(0) - theta) e^{-kappa T} of the
// linear-drift volatility factor.
struct MeanFactorReport {
  double estimate = 0.0;
  double target = 0.0;
  double rel_deviation = 0.0;
  EstimateReport detail;
};
MeanFactorReport mean_factor_check(const ModelSpec& model, const RunSettings& run,
                                   const StateVector& x0, double kappa, double theta);

// ---------------------------------------------------------------------------
// Convergence-order study

struct ConvergenceSettings {
  std::vector<SchemeKind> schemes;
  std::vector<int> k_grid;  // step counts, typically powers of two
  uint64_t n_paths = uint64_t{1} << 20;
  double horizon = 1.0;
  bool fuse_drift = false;
  SequenceSpec sequence;
  int threads = 1;
  // Missing reference: a long self-reference run (scheme nvd, 4x the largest
  // K, same path count) supplies it.
  std::optional<double> reference;
};

struct ConvergenceRow {
  SchemeKind scheme = SchemeKind::NVd;
  int n_steps = 0;
  uint64_t n_paths = 0;
  double estimate = 0.0;
  double rel_error = 0.0;
  double wall_seconds = 0.0;
  Diagnostics diag;
};

struct SlopeFit {
  SchemeKind scheme = SchemeKind::NVd;
  double slope = 0.0;
  bool degenerate = false;  // fewer than two usable points above noise
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<SlopeFit> slopes;
  double reference = 0.0;
  bool self_referenced = false;
};

ConvergenceResult convergence_study(const ModelSpec& model, const ConvergenceSettings& s,
                                    const StateVector& x0, const Payoff& payoff);

// Least-squares slope of log2(rel_error) against log2(K); points with
// rel_error below 1e-13 are dropped as numerically degenerate.
SlopeFit fit_slope(SchemeKind scheme, const std::vector<ConvergenceRow>& rows);

// ---------------------------------------------------------------------------
// Run-time comparison harness

struct TimingCase {
  SchemeKind scheme = SchemeKind::NVd;
  int n_steps = 1;
};

struct TimingSettings {
  std::vector<TimingCase> cases;
  double horizon = 1.0;
  bool fuse_drift = false;
  SequenceSpec sequence;
  int threads = 1;
  double reference = 0.0;  // true value, used for the reported relative error

  // Path-count search: starting from m_start, double until the estimate sits
  // within integration_tol of the per-K limit (an untimed m_calibration run)
  // for `consecutive` successive path counts; the first count of that streak
  // is reported. Exceeding m_cap marks the row non-converged.
  uint64_t m_start = 1000;
  uint64_t m_cap = uint64_t{1} << 24;
  uint64_t m_calibration = uint64_t{1} << 22;
  double integration_tol = 2e-5;
  int consecutive = 2;
  int timed_runs = 3;  // median reported, after one discarded warm-up
};

struct TimingRow {
  SchemeKind scheme = SchemeKind::NVd;
  int n_steps = 0;
  uint64_t n_paths = 0;
  double estimate = 0.0;
  double rel_error = 0.0;
  double wall_seconds = 0.0;
  bool converged = true;
  Diagnostics diag;
};

std::vector<TimingRow> timing_comparison(const ModelSpec& model, const TimingSettings& s,
                                         const StateVector& x0, const Payoff& payoff);

// ---------------------------------------------------------------------------
// CSV output (fixed column order; absent values become empty cells)

struct CsvRow {
  std::string model;
  std::string scheme;
  std::optional<int64_t> n_steps;
  std::optional<uint64_t> n_paths;
  std::optional<double> estimate;
  std::optional<double> reference;
  std::optional<double> rel_error;
  std::optional<double> slope;
  std::optional<double> wall_seconds;
  std::optional<uint64_t> oracle_calls;
  std::optional<uint64_t> clamp_hits;
};

inline constexpr const char* kCsvHeader =
    "model,scheme,K,M,estimate,ref,rel_error,slope,wall_seconds,oracle_calls,clamp_hits";

std::string format_double(double v);  // shortest round-trip via %.17g
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);

}  // namespace svol::pricing
