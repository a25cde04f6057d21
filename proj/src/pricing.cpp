#include "svol/pricing.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <ostream>
#include <thread>

#include "svol/qmc.hpp"
#include "svol/schemes.hpp"

namespace svol::pricing {

namespace {

// Chunk granularity of the deterministic reduction. Fixed, so the grouping
// of per-path sums never depends on the worker count.
constexpr uint64_t kChunk = 8192;

double pairwise_sum(const double* v, size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Payoffs

void Payoff::validate(int n_assets) const {
  if (!(strike >= 0.0)) throw ValidationError("payoff: strike must be >= 0");
  if (kind == Kind::EuropeanCall) {
    if (n_assets != 1)
      throw ValidationError("payoff: european-call requires a single-asset model");
    if (!weights.empty())
      throw ValidationError("payoff: weights only apply to basket-call");
    return;
  }
  if (weights.empty()) return;  // equal weights
  if (static_cast<int>(weights.size()) != n_assets)
    throw ValidationError("payoff: weights must have one entry per asset");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("payoff: weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("payoff: weights must sum to 1");
}

double Payoff::evaluate(const double* assets, int n_assets) const {
  double s;
  if (kind == Kind::EuropeanCall) {
    s = assets[0];
  } else if (!weights.empty()) {
    s = 0.0;
    for (int i = 0; i < n_assets; ++i) s += weights[static_cast<size_t>(i)] * assets[i];
  } else {
    s = 0.0;
    for (int i = 0; i < n_assets; ++i) s += assets[i];
    s /= n_assets;
  }
  const double v = s - strike;
  return v > 0.0 ? v : 0.0;
}

Payoff european_call(double strike) {
  Payoff p;
  p.kind = Payoff::Kind::EuropeanCall;
  p.strike = strike;
  return p;
}

Payoff basket_call(double strike, std::vector<double> weights) {
  Payoff p;
  p.kind = Payoff::Kind::BasketCall;
  p.strike = strike;
  p.weights = std::move(weights);
  return p;
}

// ---------------------------------------------------------------------------
// Estimator

EstimateReport estimate_mean(const ModelSpec& model, const RunSettings& run,
                             const StateVector& x0, const PathValue& value) {
  if (run.n_paths < 1) throw ValidationError("estimator: n_paths must be >= 1");
  if (run.threads < 1) throw ValidationError("estimator: threads must be >= 1");
  if (static_cast<int>(x0.size()) != model.state_dim())
    throw ValidationError("estimator: x0 has the wrong dimension");

  const int d = model.brownian_dim();
  const auto layout = qmc::DimensionLayout::make(run.scheme, run.n_steps, d);
  const auto source =
      qmc::make_point_source(run.sequence.kind, layout.total(), run.sequence.seed);

  schemes::TrajectoryConfig tc;
  tc.scheme = run.scheme;
  tc.n_steps = run.n_steps;
  tc.horizon = run.horizon;
  tc.fuse_drift = run.fuse_drift;

  const uint64_t m = run.n_paths;
  const uint64_t n_chunks = (m + kChunk - 1) / kChunk;

  std::vector<double> sums(n_chunks, 0.0), sums_sq(n_chunks, 0.0);
  std::vector<Diagnostics> diags(n_chunks);

  std::atomic<uint64_t> next_chunk{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  const auto t0 = std::chrono::steady_clock::now();

  auto worker = [&]() {
    auto cursor = source->make_cursor();
    std::vector<double> u(static_cast<size_t>(layout.total()));
    std::vector<double> z(static_cast<size_t>(run.n_steps) * static_cast<size_t>(d));
    std::vector<double> lam(layout.has_lambda ? static_cast<size_t>(run.n_steps) : 1);
    std::vector<double> x(x0.size());
    std::vector<double> ws(static_cast<size_t>(schemes::euler_workspace_size(model)));
    std::vector<double> assets(static_cast<size_t>(model.n_assets()));
    double* lam_ptr = layout.has_lambda ? lam.data() : nullptr;

    for (;;) {
      const uint64_t c = next_chunk.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks || failed.load(std::memory_order_relaxed)) break;
      const uint64_t lo = c * kChunk;
      const uint64_t hi = std::min(m, lo + kChunk);
      cursor->seek(lo);
      double s = 0.0, s2 = 0.0;
      Diagnostics dg;
      uint64_t t = lo;
      try {
        for (; t < hi; ++t) {
          cursor->next(u.data());
          qmc::draw_trajectory(layout, u.data(), z.data(), lam_ptr);
          std::memcpy(x.data(), x0.data(), sizeof(double) * x0.size());
          const double w = schemes::simulate_terminal(model, tc, x.data(), z.data(),
                                                      lam_ptr, ws.data(), dg);
          model.asset_values(x.data(), assets.data());
          const double v = value(x.data(), assets.data(), w);
          s += v;
          s2 += v * v;
        }
      } catch (const DomainError& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error)
          error = std::make_exception_ptr(
              DomainError(std::string(e.what()) + " [trajectory " + std::to_string(t) + "]"));
        failed.store(true);
        break;
      } catch (const IntegrationError& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error)
          error = std::make_exception_ptr(IntegrationError(
              std::string(e.what()) + " [trajectory " + std::to_string(t) + "]"));
        failed.store(true);
        break;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        break;
      }
      sums[c] = s;
      sums_sq[c] = s2;
      diags[c] = dg;
    }
  };

  const auto n_workers =
      static_cast<unsigned>(std::min<uint64_t>(static_cast<uint64_t>(run.threads), n_chunks));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  EstimateReport rep;
  rep.n_paths = m;
  const double total = pairwise_sum(sums.data(), sums.size());
  const double total_sq = pairwise_sum(sums_sq.data(), sums_sq.size());
  rep.estimate = total / static_cast<double>(m);
  if (m > 1) {
    double var = (total_sq - static_cast<double>(m) * rep.estimate * rep.estimate) /
                 (static_cast<double>(m) - 1.0);
    if (var < 0.0) var = 0.0;
    rep.std_error = std::sqrt(var / static_cast<double>(m));
  }
  for (const auto& dgc : diags) rep.diag += dgc;
  rep.wall_seconds = elapsed_seconds(t0);
  return rep;
}

EstimateReport price(const ModelSpec& model, const RunSettings& run, const StateVector& x0,
                     const Payoff& payoff) {
  const int na = model.n_assets();
  payoff.validate(na);
  return estimate_mean(model, run, x0,
                       [&payoff, na](const double*, const double* assets, double w) {
                         return w * payoff.evaluate(assets, na);
                       });
}

EstimateReport mean_state(const ModelSpec& model, const RunSettings& run,
                          const StateVector& x0, int coord) {
  if (coord < 0 || coord >= model.state_dim())
    throw ValidationError("mean_state: coordinate out of range");
  return estimate_mean(model, run, x0,
                       [coord](const double* xstate, const double*, double w) {
                         return w * xstate[coord];
                       });
}

EstimateReport weight_mean(const ModelSpec& model, const RunSettings& run,
                           const StateVector& x0) {
  return estimate_mean(model, run, x0,
                       [](const double*, const double*, double w) { return w; });
}

MeanFactorReport mean_factor_check(const ModelSpec& model, const RunSettings& run,
                                   const StateVector& x0, double kappa, double theta) {
  if (model.state_dim() != 2)
    throw ValidationError("mean_factor_check: two-factor model required");
  MeanFactorReport out;
  out.detail = mean_state(model, run, x0, 1);
  out.estimate = out.detail.estimate;
  out.target = theta + (x0[1] - theta) * std::exp(-kappa * run.horizon);
  const double denom = std::abs(out.target) > 0.0 ? std::abs(out.target) : 1.0;
  out.rel_deviation = std::abs(out.estimate - out.target) / denom;
  return out;
}

// ---------------------------------------------------------------------------
// Convergence study

SlopeFit fit_slope(SchemeKind scheme, const std::vector<ConvergenceRow>& rows) {
  SlopeFit fit;
  fit.scheme = scheme;
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (r.scheme != scheme) continue;
    if (!std::isfinite(r.rel_error) || r.rel_error < 1e-13) continue;
    xs.push_back(std::log2(static_cast<double>(r.n_steps)));
    ys.push_back(std::log2(r.rel_error));
  }
  if (xs.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    fit.degenerate = true;
    return fit;
  }
  fit.slope = sxy / sxx;
  return fit;
}

ConvergenceResult convergence_study(const ModelSpec& model, const ConvergenceSettings& s,
                                    const StateVector& x0, const Payoff& payoff) {
  if (s.schemes.empty()) throw ValidationError("study: scheme list is empty");
  if (s.k_grid.empty()) throw ValidationError("study: K grid is empty");
  int k_max = 0;
  for (int k : s.k_grid) {
    if (k < 1) throw ValidationError("study: step counts must be >= 1");
    k_max = std::max(k_max, k);
  }
  payoff.validate(model.n_assets());

  ConvergenceResult out;
  if (s.reference) {
    out.reference = *s.reference;
  } else {
    out.self_referenced = true;
    RunSettings ref_run;
    ref_run.scheme = SchemeKind::NVd;
    ref_run.n_steps = 4 * k_max;
    ref_run.n_paths = s.n_paths;
    ref_run.horizon = s.horizon;
    ref_run.fuse_drift = s.fuse_drift;
    ref_run.sequence = s.sequence;
    ref_run.threads = s.threads;
    out.reference = price(model, ref_run, x0, payoff).estimate;
  }
  const double denom = std::abs(out.reference);
  if (!(denom > 0.0)) throw ValidationError("study: reference value must be nonzero");

  for (SchemeKind scheme : s.schemes) {
    for (int k : s.k_grid) {
      RunSettings run;
      run.scheme = scheme;
      run.n_steps = k;
      run.n_paths = s.n_paths;
      run.horizon = s.horizon;
      run.fuse_drift = s.fuse_drift;
      run.sequence = s.sequence;
      run.threads = s.threads;
      const auto rep = price(model, run, x0, payoff);
      ConvergenceRow row;
      row.scheme = scheme;
      row.n_steps = k;
      row.n_paths = s.n_paths;
      row.estimate = rep.estimate;
      row.rel_error = std::abs(rep.estimate - out.reference) / denom;
      row.wall_seconds = rep.wall_seconds;
      row.diag = rep.diag;
      out.rows.push_back(row);
    }
  }
  for (SchemeKind scheme : s.schemes) out.slopes.push_back(fit_slope(scheme, out.rows));
  return out;
}

// ---------------------------------------------------------------------------
// Timing harness

std::vector<TimingRow> timing_comparison(const ModelSpec& model, const TimingSettings& s,
                                         const StateVector& x0, const Payoff& payoff) {
  if (s.cases.empty()) throw ValidationError("timing: case list is empty");
  if (!(std::abs(s.reference) > 0.0))
    throw ValidationError("timing: reference value must be nonzero");
  if (s.m_start < 1 || s.m_start > s.m_cap)
    throw ValidationError("timing: need 1 <= m_start <= m_cap");
  if (s.consecutive < 1) throw ValidationError("timing: consecutive must be >= 1");
  if (s.timed_runs < 1) throw ValidationError("timing: timed_runs must be >= 1");
  payoff.validate(model.n_assets());

  std::vector<TimingRow> rows;
  for (const auto& c : s.cases) {
    RunSettings base;
    base.scheme = c.scheme;
    base.n_steps = c.n_steps;
    base.horizon = s.horizon;
    base.fuse_drift = s.fuse_drift;
    base.sequence = s.sequence;
    base.threads = s.threads;

    // Untimed long run pins the per-K limit the doubling rule compares to.
    RunSettings cal = base;
    cal.n_paths = s.m_calibration;
    const double vk = price(model, cal, x0, payoff).estimate;

    uint64_t candidate = 0;
    int streak = 0;
    bool converged = false;
    for (uint64_t mloop = s.m_start; mloop <= s.m_cap; mloop *= 2) {
      RunSettings r = base;
      r.n_paths = mloop;
      const double est = price(model, r, x0, payoff).estimate;
      if (std::abs(est - vk) <= s.integration_tol) {
        if (++streak == 1) candidate = mloop;
        if (streak >= s.consecutive) {
          converged = true;
          break;
        }
      } else {
        streak = 0;
        candidate = 0;
      }
    }

    TimingRow row;
    row.scheme = c.scheme;
    row.n_steps = c.n_steps;
    row.converged = converged;
    row.n_paths = converged ? candidate : s.m_cap;

    RunSettings fin = base;
    fin.n_paths = row.n_paths;
    if (converged) {
      (void)price(model, fin, x0, payoff);  // warm-up, discarded
      std::vector<double> walls;
      EstimateReport last;
      for (int i = 0; i < s.timed_runs; ++i) {
        last = price(model, fin, x0, payoff);
        walls.push_back(last.wall_seconds);
      }
      std::nth_element(walls.begin(), walls.begin() + static_cast<long>(walls.size() / 2),
                       walls.end());
      row.wall_seconds = walls[walls.size() / 2];
      row.estimate = last.estimate;
      row.diag = last.diag;
    } else {
      const auto rep = price(model, fin, x0, payoff);
      row.estimate = rep.estimate;
      row.wall_seconds = rep.wall_seconds;
      row.diag = rep.diag;
    }
    row.rel_error = std::abs(row.estimate - s.reference) / std::abs(s.reference);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.model << ',' << r.scheme;
    const auto cell_i = [&out](const std::optional<int64_t>& v) {
      out << ',';
      if (v) out << *v;
    };
    const auto cell_u = [&out](const std::optional<uint64_t>& v) {
      out << ',';
      if (v) out << *v;
    };
    const auto cell_d = [&out](const std::optional<double>& v) {
      out << ',';
      if (v) out << format_double(*v);
    };
    cell_i(r.n_steps);
    cell_u(r.n_paths);
    cell_d(r.estimate);
    cell_d(r.reference);
    cell_d(r.rel_error);
    cell_d(r.slope);
    cell_d(r.wall_seconds);
    cell_u(r.oracle_calls);
    cell_u(r.clamp_hits);
    out << '\n';
  }
}

}  // namespace svol::pricing
