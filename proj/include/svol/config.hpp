#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "svol/models.hpp"
#include "svol/pricing.hpp"
#include "svol/types.hpp"

namespace svol::config {

// A fully validated run description, loaded from versioned JSON. Unknown keys
// are rejected so typos fail loudly. The same file can drive price, converge
// and bench; each command reads the fields it needs.
struct RunConfig {
  std::string model_name;  // heston | sabr | gensabr | multisabr
  HestonParams heston;
  SabrParams sabr;
  GenSabrParams gensabr;
  MultiSabrParams multisabr;

  pricing::Payoff payoff;
  StateVector x0;
  double horizon = 1.0;

  std::optional<SchemeKind> scheme;            // price
  std::vector<SchemeKind> schemes;             // converge
  std::optional<int> n_steps;                  // price
  std::vector<int> k_grid;                     // converge
  std::optional<uint64_t> n_paths;             // price / converge
  pricing::SequenceSpec sequence;
  std::optional<double> reference;

  struct BenchBlock {
    bool present = false;
    std::vector<pricing::TimingCase> cases;
    uint64_t m_start = 1000;
    uint64_t m_cap = uint64_t{1} << 24;
    uint64_t m_calibration = uint64_t{1} << 22;
    double integration_tol = 2e-5;
    int consecutive = 2;
    int timed_runs = 3;
  } bench;
};

// Throw ValidationError with a message naming the offending key or constraint.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Normalized JSON (sorted keys, round-trip exact numbers); parsing the output
// reproduces the config and therefore the run.
std::string dump_config(const RunConfig& cfg);

std::unique_ptr<ModelSpec> build_model(const RunConfig& cfg);

// x0 in the config is always in natural coordinates (asset price first);
// this maps it onto the chart the engine integrates, i.e. takes the log of
// the price for log-chart Heston and is the identity otherwise.
StateVector initial_state(const RunConfig& cfg);

}  // namespace svol::config
