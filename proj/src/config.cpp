#include "svol/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace svol::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ValidationError("config: " + msg); }

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

const json& require_key(const json& obj, const char* where, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(std::string(where) + ": missing key '" + key + "'");
  return *it;
}

double as_double(const json& v, const char* where, const char* key) {
  if (!v.is_number()) fail(std::string(where) + ": '" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const char* where, const char* key) {
  if (!v.is_number_integer()) fail(std::string(where) + ": '" + key + "' must be an integer");
  return v.get<int>();
}

uint64_t as_u64(const json& v, const char* where, const char* key) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<int64_t>() < 0))
    fail(std::string(where) + ": '" + key + "' must be a nonnegative integer");
  return v.get<uint64_t>();
}

bool as_bool(const json& v, const char* where, const char* key) {
  if (!v.is_boolean()) fail(std::string(where) + ": '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const char* where, const char* key) {
  if (!v.is_string()) fail(std::string(where) + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> as_double_vec(const json& v, const char* where, const char* key) {
  if (!v.is_array()) fail(std::string(where) + ": '" + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number())
      fail(std::string(where) + ": '" + key + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

double req_double(const json& obj, const char* where, const char* key) {
  return as_double(require_key(obj, where, key), where, key);
}

void parse_model(const json& m, RunConfig& cfg) {
  cfg.model_name = as_string(require_key(m, "model", "name"), "model", "name");
  if (cfg.model_name == "heston") {
    check_keys(m, "model", {"name", "mu", "kappa", "theta", "xi", "rho", "log_chart"});
    cfg.heston.mu = req_double(m, "model", "mu");
    cfg.heston.kappa = req_double(m, "model", "kappa");
    cfg.heston.theta = req_double(m, "model", "theta");
    cfg.heston.xi = req_double(m, "model", "xi");
    cfg.heston.rho = req_double(m, "model", "rho");
    if (m.contains("log_chart"))
      cfg.heston.log_chart = as_bool(m["log_chart"], "model", "log_chart");
  } else if (cfg.model_name == "sabr") {
    check_keys(m, "model", {"name", "a", "b", "beta", "rho"});
    cfg.sabr.a = req_double(m, "model", "a");
    cfg.sabr.b = req_double(m, "model", "b");
    cfg.sabr.beta = req_double(m, "model", "beta");
    cfg.sabr.rho = req_double(m, "model", "rho");
  } else if (cfg.model_name == "gensabr") {
    check_keys(m, "model", {"name", "a", "b", "alpha", "beta", "rho", "kappa", "theta"});
    cfg.gensabr.a = req_double(m, "model", "a");
    cfg.gensabr.b = req_double(m, "model", "b");
    cfg.gensabr.alpha = req_double(m, "model", "alpha");
    cfg.gensabr.beta = req_double(m, "model", "beta");
    cfg.gensabr.rho = req_double(m, "model", "rho");
    cfg.gensabr.kappa = req_double(m, "model", "kappa");
    cfg.gensabr.theta = req_double(m, "model", "theta");
  } else if (cfg.model_name == "multisabr") {
    check_keys(m, "model",
               {"name", "n_assets", "a", "b", "alpha", "beta", "kappa", "theta", "rho"});
    cfg.multisabr.n_assets = as_int(require_key(m, "model", "n_assets"), "model", "n_assets");
    cfg.multisabr.a = as_double_vec(require_key(m, "model", "a"), "model", "a");
    cfg.multisabr.b = as_double_vec(require_key(m, "model", "b"), "model", "b");
    cfg.multisabr.alpha = as_double_vec(require_key(m, "model", "alpha"), "model", "alpha");
    cfg.multisabr.beta = as_double_vec(require_key(m, "model", "beta"), "model", "beta");
    cfg.multisabr.kappa = as_double_vec(require_key(m, "model", "kappa"), "model", "kappa");
    cfg.multisabr.theta = as_double_vec(require_key(m, "model", "theta"), "model", "theta");
    cfg.multisabr.rho = as_double_vec(require_key(m, "model", "rho"), "model", "rho");
  } else {
    fail("model: unknown name '" + cfg.model_name + "'");
  }
}

void parse_payoff(const json& p, RunConfig& cfg) {
  check_keys(p, "payoff", {"kind", "strike", "weights"});
  const std::string kind = as_string(require_key(p, "payoff", "kind"), "payoff", "kind");
  if (kind == "european-call")
    cfg.payoff.kind = pricing::Payoff::Kind::EuropeanCall;
  else if (kind == "basket-call")
    cfg.payoff.kind = pricing::Payoff::Kind::BasketCall;
  else
    fail("payoff: unknown kind '" + kind + "'");
  cfg.payoff.strike = req_double(p, "payoff", "strike");
  if (p.contains("weights"))
    cfg.payoff.weights = as_double_vec(p["weights"], "payoff", "weights");
}

void parse_sequence(const json& s, RunConfig& cfg) {
  check_keys(s, "sequence", {"kind", "seed"});
  cfg.sequence.kind = as_string(require_key(s, "sequence", "kind"), "sequence", "kind");
  if (cfg.sequence.kind != "sobol" && cfg.sequence.kind != "mc")
    fail("sequence: kind must be 'sobol' or 'mc'");
  if (s.contains("seed")) cfg.sequence.seed = as_u64(s["seed"], "sequence", "seed");
}

void parse_bench(const json& b, RunConfig& cfg) {
  check_keys(b, "bench",
             {"cases", "m_start", "m_cap", "m_calibration", "integration_tol",
              "consecutive", "timed_runs"});
  cfg.bench.present = true;
  const json& cases = require_key(b, "bench", "cases");
  if (!cases.is_array() || cases.empty()) fail("bench: 'cases' must be a nonempty array");
  for (const auto& c : cases) {
    check_keys(c, "bench case", {"scheme", "K"});
    pricing::TimingCase tc;
    tc.scheme = scheme_from_name(as_string(require_key(c, "bench case", "scheme"),
                                           "bench case", "scheme"));
    tc.n_steps = as_int(require_key(c, "bench case", "K"), "bench case", "K");
    if (tc.n_steps < 1) fail("bench: case K must be >= 1");
    cfg.bench.cases.push_back(tc);
  }
  if (b.contains("m_start")) cfg.bench.m_start = as_u64(b["m_start"], "bench", "m_start");
  if (b.contains("m_cap")) cfg.bench.m_cap = as_u64(b["m_cap"], "bench", "m_cap");
  if (b.contains("m_calibration"))
    cfg.bench.m_calibration = as_u64(b["m_calibration"], "bench", "m_calibration");
  if (b.contains("integration_tol"))
    cfg.bench.integration_tol = as_double(b["integration_tol"], "bench", "integration_tol");
  if (b.contains("consecutive"))
    cfg.bench.consecutive = as_int(b["consecutive"], "bench", "consecutive");
  if (b.contains("timed_runs"))
    cfg.bench.timed_runs = as_int(b["timed_runs"], "bench", "timed_runs");
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");

  check_keys(j, "config",
             {"version", "model", "payoff", "x0", "T", "scheme", "schemes", "K", "K_grid",
              "M", "sequence", "reference", "bench"});

  RunConfig cfg;
  const int version = as_int(require_key(j, "config", "version"), "config", "version");
  if (version != 1) fail("unsupported version " + std::to_string(version));

  parse_model(require_key(j, "config", "model"), cfg);
  parse_payoff(require_key(j, "config", "payoff"), cfg);

  cfg.x0 = as_double_vec(require_key(j, "config", "x0"), "config", "x0");
  cfg.horizon = req_double(j, "config", "T");
  if (!(cfg.horizon > 0.0)) fail("'T' must be > 0");

  if (j.contains("scheme"))
    cfg.scheme = scheme_from_name(as_string(j["scheme"], "config", "scheme"));
  if (j.contains("schemes")) {
    const json& arr = j["schemes"];
    if (!arr.is_array()) fail("'schemes' must be an array");
    for (const auto& s : arr)
      cfg.schemes.push_back(scheme_from_name(as_string(s, "config", "schemes")));
  }
  if (j.contains("K")) {
    cfg.n_steps = as_int(j["K"], "config", "K");
    if (*cfg.n_steps < 1) fail("'K' must be >= 1");
  }
  if (j.contains("K_grid")) {
    const json& arr = j["K_grid"];
    if (!arr.is_array()) fail("'K_grid' must be an array");
    for (const auto& k : arr) {
      const int v = as_int(k, "config", "K_grid");
      if (v < 1) fail("'K_grid' entries must be >= 1");
      cfg.k_grid.push_back(v);
    }
  }
  if (j.contains("M")) {
    cfg.n_paths = as_u64(j["M"], "config", "M");
    if (*cfg.n_paths < 1) fail("'M' must be >= 1");
  }
  if (j.contains("sequence")) parse_sequence(j["sequence"], cfg);
  if (j.contains("reference")) cfg.reference = as_double(j["reference"], "config", "reference");
  if (j.contains("bench")) parse_bench(j["bench"], cfg);

  // Build the model once to run parameter validation, then check x0 against
  // its dimensions.
  const auto model = build_model(cfg);
  if (static_cast<int>(cfg.x0.size()) != model->state_dim())
    fail("'x0' must have " + std::to_string(model->state_dim()) + " entries for model '" +
         cfg.model_name + "'");
  if (cfg.model_name == "heston" && cfg.heston.log_chart && !(cfg.x0[0] > 0.0))
    fail("'x0' asset price must be > 0 under the log chart");
  cfg.payoff.validate(model->n_assets());
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const RunConfig& cfg) {
  json j;
  j["version"] = 1;

  json m;
  m["name"] = cfg.model_name;
  if (cfg.model_name == "heston") {
    m["mu"] = cfg.heston.mu;
    m["kappa"] = cfg.heston.kappa;
    m["theta"] = cfg.heston.theta;
    m["xi"] = cfg.heston.xi;
    m["rho"] = cfg.heston.rho;
    m["log_chart"] = cfg.heston.log_chart;
  } else if (cfg.model_name == "sabr") {
    m["a"] = cfg.sabr.a;
    m["b"] = cfg.sabr.b;
    m["beta"] = cfg.sabr.beta;
    m["rho"] = cfg.sabr.rho;
  } else if (cfg.model_name == "gensabr") {
    m["a"] = cfg.gensabr.a;
    m["b"] = cfg.gensabr.b;
    m["alpha"] = cfg.gensabr.alpha;
    m["beta"] = cfg.gensabr.beta;
    m["rho"] = cfg.gensabr.rho;
    m["kappa"] = cfg.gensabr.kappa;
    m["theta"] = cfg.gensabr.theta;
  } else {
    m["n_assets"] = cfg.multisabr.n_assets;
    m["a"] = cfg.multisabr.a;
    m["b"] = cfg.multisabr.b;
    m["alpha"] = cfg.multisabr.alpha;
    m["beta"] = cfg.multisabr.beta;
    m["kappa"] = cfg.multisabr.kappa;
    m["theta"] = cfg.multisabr.theta;
    m["rho"] = cfg.multisabr.rho;
  }
  j["model"] = m;

  json p;
  p["kind"] =
      cfg.payoff.kind == pricing::Payoff::Kind::EuropeanCall ? "european-call" : "basket-call";
  p["strike"] = cfg.payoff.strike;
  if (!cfg.payoff.weights.empty()) p["weights"] = cfg.payoff.weights;
  j["payoff"] = p;

  j["x0"] = cfg.x0;
  j["T"] = cfg.horizon;
  if (cfg.scheme) j["scheme"] = scheme_name(*cfg.scheme);
  if (!cfg.schemes.empty()) {
    json arr = json::array();
    for (SchemeKind s : cfg.schemes) arr.push_back(scheme_name(s));
    j["schemes"] = arr;
  }
  if (cfg.n_steps) j["K"] = *cfg.n_steps;
  if (!cfg.k_grid.empty()) j["K_grid"] = cfg.k_grid;
  if (cfg.n_paths) j["M"] = *cfg.n_paths;

  json seq;
  seq["kind"] = cfg.sequence.kind;
  seq["seed"] = cfg.sequence.seed;
  j["sequence"] = seq;

  if (cfg.reference) j["reference"] = *cfg.reference;

  if (cfg.bench.present) {
    json b;
    json cases = json::array();
    for (const auto& c : cfg.bench.cases) {
      json e;
      e["scheme"] = scheme_name(c.scheme);
      e["K"] = c.n_steps;
      cases.push_back(e);
    }
    b["cases"] = cases;
    b["m_start"] = cfg.bench.m_start;
    b["m_cap"] = cfg.bench.m_cap;
    b["m_calibration"] = cfg.bench.m_calibration;
    b["integration_tol"] = cfg.bench.integration_tol;
    b["consecutive"] = cfg.bench.consecutive;
    b["timed_runs"] = cfg.bench.timed_runs;
    j["bench"] = b;
  }

  return j.dump(2) + "\n";
}

std::unique_ptr<ModelSpec> build_model(const RunConfig& cfg) {
  if (cfg.model_name == "heston") return make_heston(cfg.heston);
  if (cfg.model_name == "sabr") return make_sabr(cfg.sabr);
  if (cfg.model_name == "gensabr") return make_gensabr(cfg.gensabr);
  if (cfg.model_name == "multisabr") return make_multisabr(cfg.multisabr);
  throw ValidationError("config: unknown model '" + cfg.model_name + "'");
}

StateVector initial_state(const RunConfig& cfg) {
  StateVector x = cfg.x0;
  if (cfg.model_name == "heston" && cfg.heston.log_chart) x[0] = std::log(x[0]);
  return x;
}

}  // namespace svol::config
