#include <cmath>
#include <vector>

#include "doctest.h"
#include "svol/models.hpp"
#include "svol/qmc.hpp"
#include "svol/schemes.hpp"

using namespace svol;
using namespace svol::schemes;

namespace {

std::unique_ptr<ModelSpec> heston_log(double rho = -0.7) {
  HestonParams p;
  p.kappa = 2.0;
  p.theta = 0.3;
  p.xi = 0.5;
  p.rho = rho;
  p.log_chart = true;
  return make_heston(p);
}

std::unique_ptr<ModelSpec> sabr_bench() {
  SabrParams p;
  p.a = 1.0;
  p.b = 0.4;
  p.beta = 0.9;
  p.rho = -0.7;
  return make_sabr(p);
}

std::unique_ptr<ModelSpec> gensabr_bench() {
  GenSabrParams p;
  p.a = 1.0;
  p.b = 0.5;
  p.alpha = 0.5;
  p.beta = 1.0;
  p.rho = -0.7;
  p.kappa = 2.0;
  p.theta = 0.3;
  return make_gensabr(p);
}

}  // namespace

TEST_CASE("euler step adds drift and diffusion increments") {
  const auto m = heston_log(0.0);
  Diagnostics diag;
  std::vector<double> ws(static_cast<size_t>(euler_workspace_size(*m)));
  REQUIRE(ws.size() == 6);

  // hand-computed: dt = 1/4, Z = (1, 0), from (log 1, 0.04)
  std::vector<double> x{0.0, 0.04};
  const double z1[] = {1.0, 0.0};
  euler_step(*m, x.data(), 0.25, z1, ws.data(), diag);
  CHECK(x[0] == doctest::Approx(0.095).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(0.17).epsilon(1e-15));
  CHECK(diag.clamp_hits == 0);

  // drift only
  x = {0.0, 0.04};
  const double z0[] = {0.0, 0.0};
  euler_step(*m, x.data(), 0.25, z0, ws.data(), diag);
  CHECK(x[0] == doctest::Approx(-0.005).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(0.17).epsilon(1e-15));
}

TEST_CASE("euler step floors flagged coordinates on the evaluation copy") {
  const auto m = heston_log(0.0);
  Diagnostics diag;
  std::vector<double> ws(6);
  // negative variance: fields see v = 0, the increment lands on the original
  std::vector<double> x{0.0, -0.01};
  const double z[] = {1.0, 1.0};
  euler_step(*m, x.data(), 0.25, z, ws.data(), diag);
  CHECK(diag.clamp_hits == 1);
  CHECK(x[1] == doctest::Approx(-0.01 + 0.25 * 2.0 * 0.3).epsilon(1e-14));
  CHECK(x[0] == doctest::Approx(0.0 + 0.25 * (0.0 - 0.0)).epsilon(1e-14));  // sqrt(0) kills the shock
}

TEST_CASE("nv step composes the printed flow order") {
  const auto m = heston_log();
  Diagnostics diag;
  const double dt = 0.25, sq = 0.5;
  const double z[] = {0.6, -0.4};

  std::vector<double> down{0.1, 0.2}, up{0.1, 0.2};
  nv_step(*m, down.data(), dt, z, -1.0, diag);
  nv_step(*m, up.data(), dt, z, +1.0, diag);

  // manual composition, drift half outermost on both sides
  std::vector<double> ref{0.1, 0.2};
  m->flow(0, dt / 2, ref.data(), diag);
  m->flow(2, sq * z[1], ref.data(), diag);
  m->flow(1, sq * z[0], ref.data(), diag);
  m->flow(0, dt / 2, ref.data(), diag);
  CHECK(down == ref);

  ref = {0.1, 0.2};
  m->flow(0, dt / 2, ref.data(), diag);
  m->flow(1, sq * z[0], ref.data(), diag);
  m->flow(2, sq * z[1], ref.data(), diag);
  m->flow(0, dt / 2, ref.data(), diag);
  CHECK(up == ref);

  // the two orders genuinely differ for non-commuting fields
  CHECK(down != up);
}

TEST_CASE("nvd with a zero shift is the nv step, bit for bit") {
  const auto m = heston_log();  // gamma = (0, 0)
  Diagnostics diag;
  const double z[] = {1.3, -0.2};
  std::vector<double> a{0.05, 0.3}, b{0.05, 0.3};
  nv_step(*m, a.data(), 0.125, z, -1.0, diag);
  nvd_step(*m, b.data(), 0.125, z, -1.0, diag);
  CHECK(a == b);
}

TEST_CASE("nvd step matches the frozen one-step value") {
  const auto m = gensabr_bench();
  Diagnostics diag;
  std::vector<double> x{1.0, 0.2};
  const double z[] = {0.0, 0.0};  // pure shift amounts dt * gamma_j
  nvd_step(*m, x.data(), 0.125, z, -1.0, diag);
  CHECK(x[0] == doctest::Approx(0.99159491510624331).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.21959756656682208).epsilon(1e-12));
  CHECK(diag.oracle_calls == 0);
}

TEST_CASE("girsanov step reweights with the shift inner product") {
  const auto m = gensabr_bench();
  const auto& gamma = m->drift_shift().gamma;
  Diagnostics diag;
  std::vector<double> x{1.0, 0.2};
  const double z[] = {0.7, -1.1};
  const double dt = 0.25;
  const double logw = girsanov_step(*m, x.data(), dt, z, 1.0, diag);
  CHECK(logw == doctest::Approx(std::sqrt(dt) * (gamma[0] * z[0] + gamma[1] * z[1]))
                    .epsilon(1e-14));

  // with zero shift the weighted scheme degenerates to plain nv
  const auto mh = heston_log();
  std::vector<double> a{0.05, 0.3}, b{0.05, 0.3};
  const double lw = girsanov_step(*mh, a.data(), dt, z, -1.0, diag);
  CHECK(lw == 0.0);
  nv_step(*mh, b.data(), dt, z, -1.0, diag);
  CHECK(a == b);
}

TEST_CASE("simulate_terminal weights only the girsanov scheme") {
  const auto m = gensabr_bench();
  const auto& gamma = m->drift_shift().gamma;
  TrajectoryConfig cfg;
  cfg.n_steps = 2;
  cfg.horizon = 0.5;

  const double z[] = {0.3, -0.8, 1.2, 0.4};
  const double lam[] = {-1.0, 1.0};
  Diagnostics diag;

  cfg.scheme = SchemeKind::NVd;
  std::vector<double> x{1.0, 0.2};
  CHECK(simulate_terminal(*m, cfg, x.data(), z, lam, nullptr, diag) == 1.0);

  cfg.scheme = SchemeKind::NVG;
  x = {1.0, 0.2};
  const double w = simulate_terminal(*m, cfg, x.data(), z, lam, nullptr, diag);
  const double sq = std::sqrt(0.25);
  const double g2 = gamma[0] * gamma[0] + gamma[1] * gamma[1];
  const double expect = std::exp(sq * (gamma[0] * (z[0] + z[2]) + gamma[1] * (z[1] + z[3])) -
                                 0.5 * g2 * 0.5);
  CHECK(w == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("fused drift halves agree with the plain composition") {
  const auto m = heston_log();
  TrajectoryConfig plain;
  plain.scheme = SchemeKind::NV;
  plain.n_steps = 4;
  plain.horizon = 1.0;
  TrajectoryConfig fused = plain;
  fused.fuse_drift = true;

  const double z[] = {0.3, -0.8, 1.2, 0.4, -0.6, 0.1, 0.9, -1.5};
  const double lam[] = {-1.0, 1.0, 1.0, -1.0};

  Diagnostics d1, d2;
  std::vector<double> a{0.1, 0.25}, b{0.1, 0.25};
  simulate_terminal(*m, plain, a.data(), z, lam, nullptr, d1);
  simulate_terminal(*m, fused, b.data(), z, lam, nullptr, d2);
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
}

TEST_CASE("classical nv accounting on a drift-oracle model") {
  const auto m = sabr_bench();
  TrajectoryConfig cfg;
  cfg.scheme = SchemeKind::NV;
  cfg.n_steps = 4;
  cfg.horizon = 1.0;

  const double z[] = {0.3, -0.8, 1.2, 0.4, -0.6, 0.1, 0.9, -1.5};
  const double lam[] = {-1.0, 1.0, 1.0, -1.0};

  auto out = simulate_trajectory(*m, cfg, {1.0, 0.3}, z, lam);
  CHECK(out.diag.oracle_calls == 8);  // two half-flows per step
  CHECK(out.weight == 1.0);

  cfg.fuse_drift = true;
  out = simulate_trajectory(*m, cfg, {1.0, 0.3}, z, lam);
  CHECK(out.diag.oracle_calls == 5);  // K + 1 once the halves merge

  // the drift-shifted scheme never needs the oracle
  cfg.scheme = SchemeKind::NVd;
  cfg.fuse_drift = false;
  out = simulate_trajectory(*m, cfg, {1.0, 0.3}, z, lam);
  CHECK(out.diag.oracle_calls == 0);
}

TEST_CASE("simulate_terminal validates its configuration") {
  const auto m = heston_log();
  Diagnostics diag;
  std::vector<double> x{0.0, 0.04};
  const double z[] = {0.0, 0.0};
  const double lam[] = {1.0};

  TrajectoryConfig cfg;
  cfg.n_steps = 0;
  CHECK_THROWS_AS(simulate_terminal(*m, cfg, x.data(), z, lam, nullptr, diag),
                  ValidationError);
  cfg.n_steps = 1;
  cfg.horizon = 0.0;
  CHECK_THROWS_AS(simulate_terminal(*m, cfg, x.data(), z, lam, nullptr, diag),
                  ValidationError);
  CHECK_THROWS_AS(simulate_trajectory(*m, TrajectoryConfig{}, {1.0, 0.2, 0.3}, z, lam),
                  ValidationError);
}

TEST_CASE("euler survives truncation-heavy trajectories") {
  // Crank the vol of vol so the variance coordinate dives below zero often,
  // while keeping kappa * theta >= xi^2 / 4 so the parameters stay legal.
  HestonParams p;
  p.kappa = 8.0;
  p.theta = 0.05;
  p.xi = 1.2;
  p.rho = -0.9;
  p.log_chart = true;
  const auto m = make_heston(p);

  const auto layout = qmc::DimensionLayout::make(SchemeKind::Euler, 8, 2);
  qmc::PseudoSource src(layout.total(), 7);
  TrajectoryConfig cfg;
  cfg.scheme = SchemeKind::Euler;
  cfg.n_steps = 8;
  cfg.horizon = 1.0;

  std::vector<double> u(static_cast<size_t>(layout.total()));
  std::vector<double> z(16);
  Diagnostics total;
  for (uint64_t t = 0; t < 512; ++t) {
    src.fill(t, u.data());
    qmc::draw_trajectory(layout, u.data(), z.data(), nullptr);
    auto out = simulate_trajectory(*m, cfg, {0.0, 0.04}, z.data(), nullptr);
    total += out.diag;
  }
  CHECK(total.clamp_hits > 0);  // the guard must actually engage
  CHECK(total.oracle_calls == 0);
}
