#include "svol/models.hpp"

#include <cmath>
#include <utility>

#include "svol/drift.hpp"
#include "svol/flows.hpp"
#include "svol/ode.hpp"

namespace svol {

using flows::expm1_ratio;
using flows::pow_opt;
using flows::power_ode_flow;
using flows::ramp_power_integral;

double snap_beta(double beta) {
  if (std::abs(beta - 0.5) <= 1e-12) return 0.5;
  if (std::abs(beta - 1.0) <= 1e-12) return 1.0;
  return beta;
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// Heston

class HestonModel final : public ModelSpec {
 public:
  explicit HestonModel(const HestonParams& p) : p_(p) {
    require(p.kappa > 0.0, "heston: kappa must be > 0");
    require(p.theta >= 0.0, "heston: theta must be >= 0");
    require(p.xi > 0.0, "heston: xi must be > 0");
    require(p.rho > -1.0 && p.rho < 1.0, "heston: rho must lie in (-1, 1)");
    j_ = (p.kappa * p.theta - 0.25 * p.xi * p.xi) / p.kappa;
    require(j_ >= 0.0, "heston: J = (kappa*theta - xi^2/4)/kappa must be >= 0");
    rho_c_ = std::sqrt((1.0 - p.rho) * (1.0 + p.rho));
    shift_.gamma = {0.0, 0.0};
  }

  const std::string& name() const override { return name_; }
  int state_dim() const override { return 2; }
  int brownian_dim() const override { return 2; }
  int n_assets() const override { return 1; }

  void field(int j, const double* x, double* out) const override {
    const double v = x[1];
    if (v < 0.0) throw DomainError("heston: negative variance");
    const double sq = std::sqrt(v);
    switch (j) {
      case 0: {
        const double s1 = (p_.mu - 0.25 * p_.xi * p_.rho) - 0.5 * v;
        out[0] = p_.log_chart ? s1 : s1 * x[0];
        out[1] = p_.kappa * (p_.theta - v) - 0.25 * p_.xi * p_.xi;
        break;
      }
      case 1:
        out[0] = p_.log_chart ? sq : sq * x[0];
        out[1] = p_.xi * p_.rho * sq;
        break;
      case 2:
        out[0] = 0.0;
        out[1] = p_.xi * rho_c_ * sq;
        break;
      default:
        throw ValidationError("heston: field index out of range");
    }
  }

  void ito_drift(const double* x, double* out) const override {
    const double v = x[1];
    out[0] = p_.log_chart ? p_.mu - 0.5 * v : p_.mu * x[0];
    out[1] = p_.kappa * (p_.theta - v);
  }

  void shifted_drift_field(const double* x, double* out) const override { field(0, x, out); }

  void flow(int j, double s, double* x, Diagnostics& diag) const override {
    if (s == 0.0) return;
    switch (j) {
      case 0: {
        const double a = (p_.mu - 0.25 * p_.xi * p_.rho - 0.5 * j_) * s -
                         0.5 * (x[1] - j_) * expm1_ratio(-p_.kappa, s);
        x[1] = (x[1] - j_) * std::exp(-p_.kappa * s) + j_;
        apply_log_increment(x, a);
        break;
      }
      case 1: {
        if (x[1] < 0.0) throw DomainError("heston: negative variance");
        const double sq = std::sqrt(x[1]);
        const double w = 0.5 * p_.xi * p_.rho * s + sq;
        double a;
        if (w > 0.0) {
          // (w^2 - x2)/(xi rho) factored as s(w + sqrt(x2))/2: exact at rho=0
          a = 0.5 * s * (w + sq);
          x[1] = w * w;
        } else {
          if (w < 0.0) ++diag.clamp_hits;
          a = x[1] == 0.0 ? 0.0 : -x[1] / (p_.xi * p_.rho);
          x[1] = 0.0;
        }
        apply_log_increment(x, a);
        break;
      }
      case 2: {
        if (x[1] < 0.0) throw DomainError("heston: negative variance");
        const double w = 0.5 * p_.xi * rho_c_ * s + std::sqrt(x[1]);
        if (w < 0.0) ++diag.clamp_hits;
        x[1] = w > 0.0 ? w * w : 0.0;
        break;
      }
      default:
        throw ValidationError("heston: flow index out of range");
    }
  }

  void shifted_drift_flow(double s, double* x, Diagnostics& diag) const override {
    flow(0, s, x, diag);  // gamma = 0: the classical drift flow is already closed
  }

  const DriftShift& drift_shift() const override { return shift_; }
  bool drift_flow_closed() const override { return true; }
  const std::vector<int>& truncated_coords() const override { return trunc_; }
  const std::vector<int>& absorbing_coords() const override { return absorb_; }

  void asset_values(const double* x, double* out) const override {
    out[0] = p_.log_chart ? std::exp(x[0]) : x[0];
  }

 private:
  void apply_log_increment(double* x, double a) const {
    if (p_.log_chart)
      x[0] += a;
    else
      x[0] *= std::exp(a);
  }

  HestonParams p_;
  double j_ = 0.0;
  double rho_c_ = 0.0;
  DriftShift shift_;
  std::vector<int> trunc_{1};
  std::vector<int> absorb_;  // a lognormal-type price never reaches zero
  std::string name_ = "heston";
};

// ---------------------------------------------------------------------------
// Two-factor SABR family (SABR is the alpha = 1, kappa = theta = 0 case)

class GenSabrModel : public ModelSpec {
 public:
  GenSabrModel(const GenSabrParams& p, std::string name, bool flag_vol_coord)
      : p_(p), name_(std::move(name)) {
    p_.beta = snap_beta(p_.beta);
    require(p_.a > 0.0, name_ + ": a must be > 0");
    require(p_.b > 0.0, name_ + ": b must be > 0");
    require(p_.alpha > 0.0, name_ + ": alpha must be > 0");
    require(p_.beta >= 0.5 && p_.beta <= 1.0, name_ + ": beta must lie in [1/2, 1]");
    require(p_.rho > -1.0 && p_.rho < 1.0, name_ + ": rho must lie in (-1, 1)");
    require(p_.kappa >= 0.0, name_ + ": kappa must be >= 0");
    require(p_.theta >= 0.0, name_ + ": theta must be >= 0");
    rho_c_ = std::sqrt((1.0 - p_.rho) * (1.0 + p_.rho));
    decay_ = p_.kappa + 0.5 * p_.b * p_.b;
    level_ = p_.kappa * p_.theta / decay_;
    x_fractional_ = p_.beta < 1.0;
    y_fractional_ = p_.alpha != 1.0;
    shift_ = drift::two_factor_shift(p_.alpha, p_.b, p_.rho, p_.kappa);
    if (x_fractional_) {
      trunc_.push_back(0);
      absorb_.push_back(0);
    }
    if (flag_vol_coord) trunc_.push_back(1);
  }

  const std::string& name() const override { return name_; }
  int state_dim() const override { return 2; }
  int brownian_dim() const override { return 2; }
  int n_assets() const override { return 1; }

  void field(int j, const double* x, double* out) const override {
    const double x1 = x[0], y = x[1];
    check_domain(x1, y);
    switch (j) {
      case 0: {
        const double ya = pow_opt(y, p_.alpha);
        out[0] = -0.5 * p_.a * p_.a * p_.beta * ya * ya * pow_opt(x1, 2.0 * p_.beta - 1.0) -
                 0.5 * p_.alpha * p_.a * p_.b * p_.rho * ya * pow_opt(x1, p_.beta);
        out[1] = p_.kappa * p_.theta - decay_ * y;
        break;
      }
      case 1:
        out[0] = p_.a * pow_opt(y, p_.alpha) * pow_opt(x1, p_.beta);
        out[1] = p_.b * p_.rho * y;
        break;
      case 2:
        out[0] = 0.0;
        out[1] = p_.b * rho_c_ * y;
        break;
      default:
        throw ValidationError(name_ + ": field index out of range");
    }
  }

  void ito_drift(const double* x, double* out) const override {
    out[0] = 0.0;
    out[1] = p_.kappa * (p_.theta - x[1]);
  }

  void shifted_drift_field(const double* x, double* out) const override {
    check_domain(x[0], x[1]);
    const double ya = pow_opt(x[1], p_.alpha);
    out[0] = -0.5 * p_.a * p_.a * p_.beta * ya * ya * pow_opt(x[0], 2.0 * p_.beta - 1.0);
    out[1] = p_.kappa * p_.theta;
  }

  void flow(int j, double s, double* x, Diagnostics& diag) const override {
    if (s == 0.0) return;
    const double x1 = x[0], y = x[1];
    check_domain(x1, y);
    switch (j) {
      case 0: {
        // y(t) is closed; x follows its own 1-d ODE along that ramp. For
        // beta > 1/2 the decay integral converges at x = 0, so zero is
        // absorbing; trial stages that overshoot below zero must see the
        // boundary value of the right-hand side, not a domain error.
        auto rhs = [this, y](double t, const double* xx, double* dxx) {
          const double yt = (y - level_) * std::exp(-decay_ * t) + level_;
          const double ya = pow_opt(yt, p_.alpha);
          const double xp = xx[0] > 0.0 ? xx[0] : 0.0;
          dxx[0] = -0.5 * p_.a * p_.a * p_.beta * ya * ya *
                       pow_opt(xp, 2.0 * p_.beta - 1.0) -
                   0.5 * p_.alpha * p_.a * p_.b * p_.rho * ya * pow_opt(xp, p_.beta);
        };
        ode::integrate(rhs, 1, 0.0, s, &x[0], ode::scheme_integrator_config());
        ++diag.oracle_calls;
        if (p_.beta > 0.5 && x_fractional_ && x[0] < 0.0) {
          x[0] = 0.0;  // absorbed; the overshoot is integrator noise
          ++diag.clamp_hits;
        }
        x[1] = (y - level_) * std::exp(-decay_ * s) + level_;
        break;
      }
      case 1: {
        const double H = p_.a * pow_opt(y, p_.alpha) * expm1_ratio(p_.alpha * p_.b * p_.rho, s);
        x[0] = power_ode_flow(p_.beta, x1, H, &diag);
        x[1] = y * std::exp(p_.b * p_.rho * s);
        break;
      }
      case 2:
        x[1] = y * std::exp(p_.b * rho_c_ * s);
        break;
      default:
        throw ValidationError(name_ + ": flow index out of range");
    }
  }

  void shifted_drift_flow(double s, double* x, Diagnostics& diag) const override {
    if (s == 0.0) return;
    const double x1 = x[0], y = x[1];
    check_domain(x1, y);
    const double P = ramp_power_integral(y, p_.kappa * p_.theta, 2.0 * p_.alpha, s);
    if (p_.beta == 0.5) {
      x[0] = x1 - 0.25 * p_.a * p_.a * P;  // printed without a positive part
    } else {
      x[0] = power_ode_flow(p_.beta == 1.0 ? 1.0 : 2.0 * p_.beta - 1.0, x1,
                            -0.5 * p_.a * p_.a * (p_.beta == 1.0 ? 1.0 : p_.beta) * P, &diag);
    }
    x[1] = y + p_.kappa * p_.theta * s;
  }

  const DriftShift& drift_shift() const override { return shift_; }
  bool drift_flow_closed() const override { return false; }
  const std::vector<int>& truncated_coords() const override { return trunc_; }
  const std::vector<int>& absorbing_coords() const override { return absorb_; }

  void asset_values(const double* x, double* out) const override { out[0] = x[0]; }

 private:
  void check_domain(double x1, double y) const {
    // With alpha = 1 every expression is a plain product in y, so a stray
    // negative value (possible under unfloored Euler increments) is harmless.
    if (y_fractional_ && y < 0.0)
      throw DomainError(name_ + ": negative volatility factor");
    if (x_fractional_ && x1 < 0.0)
      throw DomainError(name_ + ": negative asset value with beta < 1");
  }

  GenSabrParams p_;
  std::string name_;
  double rho_c_ = 0.0;
  double decay_ = 0.0;   // kappa + b^2/2
  double level_ = 0.0;   // kappa theta / (kappa + b^2/2)
  bool x_fractional_ = false;
  bool y_fractional_ = false;
  DriftShift shift_;
  std::vector<int> trunc_;
  std::vector<int> absorb_;
};

// ---------------------------------------------------------------------------
// Multi-asset SABR-type model

class MultiSabrModel final : public ModelSpec {
 public:
  explicit MultiSabrModel(const MultiSabrParams& p) : p_(p), n_(p.n_assets) {
    require(n_ >= 1, "multisabr: n_assets must be >= 1");
    const auto check_len = [&](const std::vector<double>& v, const char* what) {
      require(static_cast<int>(v.size()) == n_,
              std::string("multisabr: ") + what + " must have n_assets entries");
    };
    check_len(p_.a, "a");
    check_len(p_.b, "b");
    check_len(p_.alpha, "alpha");
    check_len(p_.beta, "beta");
    check_len(p_.kappa, "kappa");
    check_len(p_.theta, "theta");
    for (int i = 0; i < n_; ++i) {
      auto& beta = p_.beta[static_cast<size_t>(i)];
      beta = snap_beta(beta);
      const std::string tag = "multisabr: asset " + std::to_string(i + 1) + ": ";
      require(p_.a[static_cast<size_t>(i)] > 0.0, tag + "a must be > 0");
      require(p_.b[static_cast<size_t>(i)] > 0.0, tag + "b must be > 0");
      require(p_.alpha[static_cast<size_t>(i)] > 0.0, tag + "alpha must be > 0");
      require(beta >= 0.5 && beta <= 1.0, tag + "beta must lie in [1/2, 1]");
      require(p_.kappa[static_cast<size_t>(i)] >= 0.0, tag + "kappa must be >= 0");
      require(p_.theta[static_cast<size_t>(i)] >= 0.0, tag + "theta must be >= 0");
    }

    const int m = 2 * n_;
    require(p_.rho.size() == static_cast<size_t>(m) * m,
            "multisabr: rho must be a 2N x 2N matrix");
    for (int i = 0; i < m; ++i) {
      require(std::abs(rho(i, i) - 1.0) <= 1e-12, "multisabr: rho diagonal must be 1");
      for (int j = 0; j < i; ++j)
        require(std::abs(rho(i, j) - rho(j, i)) <= 1e-12, "multisabr: rho must be symmetric");
    }
    L_ = drift::cholesky_lower(p_.rho, m);
    q_ = drift::row_cross_products(L_, n_);
    shift_ = drift::multi_asset_shift(p_, L_);

    for (int i = 0; i < n_; ++i) {
      trunc_.push_back(2 * i + 1);  // volatility factors always floored
      if (p_.beta[static_cast<size_t>(i)] < 1.0) {
        trunc_.push_back(2 * i);
        absorb_.push_back(2 * i);
      }
      decay_.push_back(p_.kappa[static_cast<size_t>(i)] +
                       0.5 * p_.b[static_cast<size_t>(i)] * p_.b[static_cast<size_t>(i)]);
      level_.push_back(p_.kappa[static_cast<size_t>(i)] * p_.theta[static_cast<size_t>(i)] /
                       decay_.back());
    }
  }

  const std::string& name() const override { return name_; }
  int state_dim() const override { return 2 * n_; }
  int brownian_dim() const override { return 2 * n_; }
  int n_assets() const override { return n_; }

  void field(int j, const double* x, double* out) const override {
    if (j < 0 || j > 2 * n_) throw ValidationError("multisabr: field index out of range");
    for (int i = 0; i < n_; ++i) {
      const double xi = x[2 * i], yi = x[2 * i + 1];
      check_domain(i, xi, yi);
      const double a = p_.a[static_cast<size_t>(i)], b = p_.b[static_cast<size_t>(i)];
      const double al = p_.alpha[static_cast<size_t>(i)], be = p_.beta[static_cast<size_t>(i)];
      if (j == 0) {
        const double ya = pow_opt(yi, al);
        out[2 * i] = -0.5 * a * a * be * ya * ya * pow_opt(xi, 2.0 * be - 1.0) -
                     0.5 * q_[static_cast<size_t>(i)] * al * a * b * ya * pow_opt(xi, be);
        out[2 * i + 1] = p_.kappa[static_cast<size_t>(i)] * p_.theta[static_cast<size_t>(i)] -
                         decay_[static_cast<size_t>(i)] * yi;
      } else {
        const int c = j - 1;  // Brownian column of the Cholesky factor
        const double lx = cell(i, c), ly = cell(n_ + i, c);
        out[2 * i] = lx == 0.0 ? 0.0 : a * pow_opt(yi, al) * pow_opt(xi, be) * lx;
        out[2 * i + 1] = b * yi * ly;
      }
    }
  }

  void ito_drift(const double* x, double* out) const override {
    for (int i = 0; i < n_; ++i) {
      out[2 * i] = 0.0;
      out[2 * i + 1] = p_.kappa[static_cast<size_t>(i)] *
                       (p_.theta[static_cast<size_t>(i)] - x[2 * i + 1]);
    }
  }

  void shifted_drift_field(const double* x, double* out) const override {
    for (int i = 0; i < n_; ++i) {
      const double xi = x[2 * i], yi = x[2 * i + 1];
      check_domain(i, xi, yi);
      const double a = p_.a[static_cast<size_t>(i)];
      const double ya = pow_opt(yi, p_.alpha[static_cast<size_t>(i)]);
      out[2 * i] = -0.5 * a * a * p_.beta[static_cast<size_t>(i)] * ya * ya *
                   pow_opt(xi, 2.0 * p_.beta[static_cast<size_t>(i)] - 1.0);
      out[2 * i + 1] =
          p_.kappa[static_cast<size_t>(i)] * p_.theta[static_cast<size_t>(i)];
    }
  }

  void flow(int j, double s, double* x, Diagnostics& diag) const override {
    if (s == 0.0) return;
    if (j == 0) {
      classical_drift_flow(s, x, diag);
      return;
    }
    if (j < 1 || j > 2 * n_) throw ValidationError("multisabr: flow index out of range");
    const int c = j - 1;
    for (int i = 0; i < n_; ++i) {
      const double xi = x[2 * i], yi = x[2 * i + 1];
      check_domain(i, xi, yi);
      const double lx = cell(i, c), ly = cell(n_ + i, c);
      if (lx != 0.0) {
        const double al = p_.alpha[static_cast<size_t>(i)];
        const double H = p_.a[static_cast<size_t>(i)] * lx * pow_opt(yi, al) *
                         expm1_ratio(al * p_.b[static_cast<size_t>(i)] * ly, s);
        x[2 * i] = power_ode_flow(p_.beta[static_cast<size_t>(i)], xi, H, &diag);
      }
      if (ly != 0.0) x[2 * i + 1] = yi * std::exp(p_.b[static_cast<size_t>(i)] * ly * s);
    }
  }

  void shifted_drift_flow(double s, double* x, Diagnostics& diag) const override {
    if (s == 0.0) return;
    for (int i = 0; i < n_; ++i) {
      const double xi = x[2 * i], yi = x[2 * i + 1];
      check_domain(i, xi, yi);
      const double a = p_.a[static_cast<size_t>(i)], be = p_.beta[static_cast<size_t>(i)];
      const double kth =
          p_.kappa[static_cast<size_t>(i)] * p_.theta[static_cast<size_t>(i)];
      const double P =
          ramp_power_integral(yi, kth, 2.0 * p_.alpha[static_cast<size_t>(i)], s);
      if (be == 0.5) {
        x[2 * i] = xi - 0.25 * a * a * P;
      } else {
        x[2 * i] = power_ode_flow(be == 1.0 ? 1.0 : 2.0 * be - 1.0, xi,
                                  -0.5 * a * a * (be == 1.0 ? 1.0 : be) * P, &diag);
      }
      x[2 * i + 1] = yi + kth * s;
    }
  }

  const DriftShift& drift_shift() const override { return shift_; }
  bool drift_flow_closed() const override { return false; }
  const std::vector<int>& truncated_coords() const override { return trunc_; }
  const std::vector<int>& absorbing_coords() const override { return absorb_; }

  void asset_values(const double* x, double* out) const override {
    for (int i = 0; i < n_; ++i) out[i] = x[2 * i];
  }

 private:
  double rho(int i, int j) const { return p_.rho[static_cast<size_t>(i) * 2 * n_ + j]; }
  double cell(int r, int c) const { return L_[static_cast<size_t>(r) * 2 * n_ + c]; }

  void check_domain(int i, double xi, double yi) const {
    if (yi < 0.0)
      throw DomainError("multisabr: asset " + std::to_string(i + 1) +
                        ": negative volatility factor");
    if (p_.beta[static_cast<size_t>(i)] < 1.0 && xi < 0.0)
      throw DomainError("multisabr: asset " + std::to_string(i + 1) +
                        ": negative asset value with beta < 1");
  }

  // The x-components decouple once each y_i(t) is written in closed form, so
  // one oracle call integrates the N-dimensional x-system along those ramps.
  void classical_drift_flow(double s, double* x, Diagnostics& diag) const {
    std::vector<double> xs(static_cast<size_t>(n_));
    std::vector<double> y0(static_cast<size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      check_domain(i, x[2 * i], x[2 * i + 1]);
      xs[static_cast<size_t>(i)] = x[2 * i];
      y0[static_cast<size_t>(i)] = x[2 * i + 1];
    }
    // Zero is absorbing for each x_i when beta_i > 1/2 (see the two-factor
    // drift flow); trial stages below zero read the boundary right-hand side.
    auto rhs = [this, &y0](double t, const double* xx, double* dxx) {
      for (int i = 0; i < n_; ++i) {
        const double yt = (y0[static_cast<size_t>(i)] - level_[static_cast<size_t>(i)]) *
                              std::exp(-decay_[static_cast<size_t>(i)] * t) +
                          level_[static_cast<size_t>(i)];
        const double a = p_.a[static_cast<size_t>(i)], b = p_.b[static_cast<size_t>(i)];
        const double al = p_.alpha[static_cast<size_t>(i)];
        const double be = p_.beta[static_cast<size_t>(i)];
        const double xp = xx[i] > 0.0 ? xx[i] : 0.0;
        const double ya = pow_opt(yt, al);
        dxx[i] = -0.5 * a * a * be * ya * ya * pow_opt(xp, 2.0 * be - 1.0) -
                 0.5 * q_[static_cast<size_t>(i)] * al * a * b * ya * pow_opt(xp, be);
      }
    };
    ode::integrate(rhs, n_, 0.0, s, xs.data(), ode::scheme_integrator_config());
    ++diag.oracle_calls;
    for (int i = 0; i < n_; ++i) {
      const double be = p_.beta[static_cast<size_t>(i)];
      if (be > 0.5 && be < 1.0 && xs[static_cast<size_t>(i)] < 0.0) {
        xs[static_cast<size_t>(i)] = 0.0;
        ++diag.clamp_hits;
      }
      x[2 * i] = xs[static_cast<size_t>(i)];
      x[2 * i + 1] = (y0[static_cast<size_t>(i)] - level_[static_cast<size_t>(i)]) *
                         std::exp(-decay_[static_cast<size_t>(i)] * s) +
                     level_[static_cast<size_t>(i)];
    }
  }

  MultiSabrParams p_;
  int n_;
  std::vector<double> L_;       // Cholesky factor of rho, row-major 2N x 2N
  std::vector<double> q_;       // cross products q_i
  std::vector<double> decay_;   // kappa_i + b_i^2/2
  std::vector<double> level_;   // kappa_i theta_i / decay_i
  DriftShift shift_;
  std::vector<int> trunc_;
  std::vector<int> absorb_;
  std::string name_ = "multisabr";
};

}  // namespace

std::unique_ptr<ModelSpec> make_heston(const HestonParams& p) {
  return std::make_unique<HestonModel>(p);
}

std::unique_ptr<ModelSpec> make_sabr(const SabrParams& p) {
  GenSabrParams g;
  g.a = p.a;
  g.b = p.b;
  g.alpha = 1.0;
  g.beta = p.beta;
  g.rho = p.rho;
  g.kappa = 0.0;
  g.theta = 0.0;
  // Same flows and fields as the generalized model; only the Euler
  // truncation set differs (the volatility factor is lognormal here).
  return std::make_unique<GenSabrModel>(g, "sabr", /*flag_vol_coord=*/false);
}

std::unique_ptr<ModelSpec> make_gensabr(const GenSabrParams& p) {
  return std::make_unique<GenSabrModel>(p, "gensabr", /*flag_vol_coord=*/true);
}

std::unique_ptr<ModelSpec> make_multisabr(const MultiSabrParams& p) {
  return std::make_unique<MultiSabrModel>(p);
}

}  // namespace svol
