#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "svol/config.hpp"
#include "svol/pricing.hpp"
#include "svol/types.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  int threads = 0;  // 0: use hardware_concurrency
  std::string output;
  std::string schemes_csv;
  bool fusion = false;
  std::optional<uint64_t> seed;
  bool dump = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("config", f.config_path, "JSON run configuration")->required();
  sub->add_option("--threads", f.threads, "worker threads (default: available cores)");
  sub->add_option("--output", f.output, "write the CSV to this path instead of stdout");
  sub->add_option("--schemes", f.schemes_csv,
                  "comma-separated scheme subset (euler,nv,nvd,nvg)");
  sub->add_flag("--fusion", f.fusion, "merge adjacent drift half-steps between steps");
  sub->add_option("--seed", f.seed, "seed for the mc sequence (ignored under sobol)");
  sub->add_flag("--dump-config", f.dump, "print the normalized config and exit");
}

int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<svol::SchemeKind> parse_scheme_filter(const std::string& csv) {
  std::vector<svol::SchemeKind> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(svol::scheme_from_name(item));
  }
  if (out.empty()) throw svol::ValidationError("--schemes: empty scheme list");
  return out;
}

bool contains(const std::vector<svol::SchemeKind>& v, svol::SchemeKind s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// Loads + applies the flags shared by all commands. Returns true when the
// command should stop after --dump-config.
bool prepare(const CommonFlags& f, svol::config::RunConfig& cfg) {
  cfg = svol::config::load_config(f.config_path);
  if (f.seed) {
    if (cfg.sequence.kind == "sobol")
      std::cerr << "warning: --seed has no effect with the sobol sequence\n";
    else
      cfg.sequence.seed = *f.seed;
  }
  if (f.dump) {
    std::cout << svol::config::dump_config(cfg);
    return true;
  }
  return false;
}

void emit_csv(const CommonFlags& f, const std::vector<svol::pricing::CsvRow>& rows) {
  if (f.output.empty()) {
    svol::pricing::write_csv(std::cout, rows);
    return;
  }
  std::ofstream out(f.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + f.output + "'");
  svol::pricing::write_csv(out, rows);
  if (!out.flush()) throw std::runtime_error("failed writing '" + f.output + "'");
}

int run_price(const CommonFlags& f) {
  svol::config::RunConfig cfg;
  if (prepare(f, cfg)) return 0;
  if (!cfg.scheme) throw svol::ValidationError("price: config needs a 'scheme' field");
  if (!cfg.n_steps) throw svol::ValidationError("price: config needs a 'K' field");
  if (!cfg.n_paths) throw svol::ValidationError("price: config needs an 'M' field");
  if (!f.schemes_csv.empty() && !contains(parse_scheme_filter(f.schemes_csv), *cfg.scheme))
    throw svol::ValidationError("price: configured scheme excluded by --schemes");

  const auto model = svol::config::build_model(cfg);
  svol::pricing::RunSettings run;
  run.scheme = *cfg.scheme;
  run.n_steps = *cfg.n_steps;
  run.n_paths = *cfg.n_paths;
  run.horizon = cfg.horizon;
  run.fuse_drift = f.fusion;
  run.sequence = cfg.sequence;
  run.threads = effective_threads(f.threads);

  const auto x0 = svol::config::initial_state(cfg);
  const auto rep = svol::pricing::price(*model, run, x0, cfg.payoff);

  std::cerr << cfg.model_name << " " << svol::scheme_name(run.scheme) << " K=" << run.n_steps
            << " M=" << run.n_paths << ": estimate " << svol::pricing::format_double(rep.estimate)
            << " (std error " << rep.std_error << ", wall " << rep.wall_seconds << "s)\n";

  svol::pricing::CsvRow row;
  row.model = cfg.model_name;
  row.scheme = svol::scheme_name(run.scheme);
  row.n_steps = run.n_steps;
  row.n_paths = run.n_paths;
  row.estimate = rep.estimate;
  if (cfg.reference) {
    row.reference = *cfg.reference;
    row.rel_error = std::abs(rep.estimate - *cfg.reference) / std::abs(*cfg.reference);
  }
  // Timing stays on stderr: the CSV must be reproducible byte for byte.
  row.oracle_calls = rep.diag.oracle_calls;
  row.clamp_hits = rep.diag.clamp_hits;
  emit_csv(f, {row});
  return 0;
}

int run_converge(const CommonFlags& f) {
  svol::config::RunConfig cfg;
  if (prepare(f, cfg)) return 0;
  if (cfg.schemes.empty())
    throw svol::ValidationError("converge: config needs a nonempty 'schemes' list");
  if (cfg.k_grid.empty())
    throw svol::ValidationError("converge: config needs a nonempty 'K_grid'");
  if (!cfg.n_paths) throw svol::ValidationError("converge: config needs an 'M' field");

  std::vector<svol::SchemeKind> schemes = cfg.schemes;
  if (!f.schemes_csv.empty()) {
    const auto filter = parse_scheme_filter(f.schemes_csv);
    std::vector<svol::SchemeKind> kept;
    for (auto s : schemes)
      if (contains(filter, s)) kept.push_back(s);
    schemes = std::move(kept);
    if (schemes.empty())
      throw svol::ValidationError("converge: --schemes leaves no schemes to run");
  }

  const auto model = svol::config::build_model(cfg);
  svol::pricing::ConvergenceSettings s;
  s.schemes = schemes;
  s.k_grid = cfg.k_grid;
  s.n_paths = *cfg.n_paths;
  s.horizon = cfg.horizon;
  s.fuse_drift = f.fusion;
  s.sequence = cfg.sequence;
  s.threads = effective_threads(f.threads);
  s.reference = cfg.reference;

  const auto x0 = svol::config::initial_state(cfg);
  const auto result = svol::pricing::convergence_study(*model, s, x0, cfg.payoff);

  if (result.self_referenced)
    std::cerr << "reference from self-reference run: "
              << svol::pricing::format_double(result.reference) << "\n";
  for (const auto& fit : result.slopes) {
    std::cerr << "slope " << svol::scheme_name(fit.scheme) << ": ";
    if (fit.degenerate)
      std::cerr << "degenerate (errors at noise level)\n";
    else
      std::cerr << fit.slope << "\n";
  }

  std::vector<svol::pricing::CsvRow> rows;
  for (const auto& r : result.rows) {
    svol::pricing::CsvRow row;
    row.model = cfg.model_name;
    row.scheme = svol::scheme_name(r.scheme);
    row.n_steps = r.n_steps;
    row.n_paths = r.n_paths;
    row.estimate = r.estimate;
    row.reference = result.reference;
    row.rel_error = r.rel_error;
    for (const auto& fit : result.slopes)
      if (fit.scheme == r.scheme && !fit.degenerate) row.slope = fit.slope;
    row.oracle_calls = r.diag.oracle_calls;
    row.clamp_hits = r.diag.clamp_hits;
    rows.push_back(row);
  }
  emit_csv(f, rows);
  return 0;
}

int run_bench(const CommonFlags& f) {
  svol::config::RunConfig cfg;
  if (prepare(f, cfg)) return 0;
  if (!cfg.bench.present)
    throw svol::ValidationError("bench: config needs a 'bench' block");
  if (!cfg.reference)
    throw svol::ValidationError("bench: config needs a 'reference' value");

  std::vector<svol::pricing::TimingCase> cases = cfg.bench.cases;
  if (!f.schemes_csv.empty()) {
    const auto filter = parse_scheme_filter(f.schemes_csv);
    std::vector<svol::pricing::TimingCase> kept;
    for (const auto& c : cases)
      if (contains(filter, c.scheme)) kept.push_back(c);
    cases = std::move(kept);
    if (cases.empty()) throw svol::ValidationError("bench: --schemes leaves no cases to run");
  }

  const auto model = svol::config::build_model(cfg);
  svol::pricing::TimingSettings s;
  s.cases = cases;
  s.horizon = cfg.horizon;
  s.fuse_drift = f.fusion;
  s.sequence = cfg.sequence;
  s.threads = effective_threads(f.threads);
  s.reference = *cfg.reference;
  s.m_start = cfg.bench.m_start;
  s.m_cap = cfg.bench.m_cap;
  s.m_calibration = cfg.bench.m_calibration;
  s.integration_tol = cfg.bench.integration_tol;
  s.consecutive = cfg.bench.consecutive;
  s.timed_runs = cfg.bench.timed_runs;

  const auto x0 = svol::config::initial_state(cfg);
  const auto table = svol::pricing::timing_comparison(*model, s, x0, cfg.payoff);

  std::vector<svol::pricing::CsvRow> rows;
  for (const auto& r : table) {
    if (!r.converged)
      std::cerr << "warning: " << svol::scheme_name(r.scheme) << " K=" << r.n_steps
                << " did not reach the integration tolerance by M=" << s.m_cap << "\n";
    std::cerr << svol::scheme_name(r.scheme) << " K=" << r.n_steps << " M=" << r.n_paths
              << ": rel_error " << r.rel_error << ", wall " << r.wall_seconds << "s\n";
    svol::pricing::CsvRow row;
    row.model = cfg.model_name;
    row.scheme = svol::scheme_name(r.scheme);
    row.n_steps = r.n_steps;
    row.n_paths = r.n_paths;
    row.estimate = r.estimate;
    row.reference = s.reference;
    row.rel_error = r.rel_error;
    row.wall_seconds = r.wall_seconds;
    row.oracle_calls = r.diag.oracle_calls;
    row.clamp_hits = r.diag.clamp_hits;
    rows.push_back(row);
  }
  emit_csv(f, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-approximation pricing for stochastic volatility models"};
  app.require_subcommand(1);

  CommonFlags price_flags, converge_flags, bench_flags;
  CLI::App* price_cmd = app.add_subcommand("price", "estimate one option price");
  add_common(price_cmd, price_flags);
  CLI::App* converge_cmd =
      app.add_subcommand("converge", "discretization-error study over a K grid");
  add_common(converge_cmd, converge_flags);
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "run-time comparison at matched accuracy");
  add_common(bench_cmd, bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (price_cmd->parsed()) return run_price(price_flags);
    if (converge_cmd->parsed()) return run_converge(converge_flags);
    if (bench_cmd->parsed()) return run_bench(bench_flags);
  } catch (const svol::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
