#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "svol/models.hpp"

using namespace svol;

namespace {

HestonParams heston_params(bool log_chart) {
  HestonParams p;
  p.mu = 0.0;
  p.kappa = 2.0;
  p.theta = 0.3;
  p.xi = 0.5;
  p.rho = -0.7;
  p.log_chart = log_chart;
  return p;
}

SabrParams sabr_params(double beta) {
  SabrParams p;
  p.a = 1.0;
  p.b = 0.4;
  p.beta = beta;
  p.rho = -0.7;
  return p;
}

GenSabrParams gensabr_params() {
  GenSabrParams p;
  p.a = 1.0;
  p.b = 0.5;
  p.alpha = 0.5;
  p.beta = 1.0;
  p.rho = -0.7;
  p.kappa = 2.0;
  p.theta = 0.3;
  return p;
}

MultiSabrParams multi2_params() {
  MultiSabrParams p;
  p.n_assets = 2;
  p.a = {1.0, 0.5};
  p.b = {0.5, 0.8};
  p.alpha = {0.5, 1.0};
  p.beta = {0.6, 0.7};
  p.kappa = {0.2, 0.7};
  p.theta = {0.3, 0.4};
  p.rho = {1.0,  0.2,   -0.5,  -0.1,   //
           0.2,  1.0,   -0.05, -0.4,   //
           -0.5, -0.05, 1.0,   0.3,    //
           -0.1, -0.4,  0.3,   1.0};
  return p;
}

// Ito drift minus the Stratonovich correction, with the field Jacobians
// taken by central differences. Checks that field(0) really is the
// Stratonovich drift belonging to field(1..d).
void check_stratonovich_drift(const ModelSpec& m, const std::vector<double>& x) {
  const int n = m.state_dim();
  const int d = m.brownian_dim();
  const double h = 1e-6;

  std::vector<double> expect(static_cast<size_t>(n));
  m.ito_drift(x.data(), expect.data());

  std::vector<double> fj(static_cast<size_t>(n)), fp(static_cast<size_t>(n)),
      fm(static_cast<size_t>(n)), xp(x), xm(x);
  for (int j = 1; j <= d; ++j) {
    m.field(j, x.data(), fj.data());
    for (int k = 0; k < n; ++k) {
      xp = x;
      xm = x;
      xp[static_cast<size_t>(k)] += h;
      xm[static_cast<size_t>(k)] -= h;
      m.field(j, xp.data(), fp.data());
      m.field(j, xm.data(), fm.data());
      for (int i = 0; i < n; ++i) {
        const double dv = (fp[static_cast<size_t>(i)] - fm[static_cast<size_t>(i)]) / (2.0 * h);
        expect[static_cast<size_t>(i)] -= 0.5 * dv * fj[static_cast<size_t>(k)];
      }
    }
  }

  std::vector<double> got(static_cast<size_t>(n));
  m.field(0, x.data(), got.data());
  for (int i = 0; i < n; ++i)
    CHECK(got[static_cast<size_t>(i)] ==
          doctest::Approx(expect[static_cast<size_t>(i)]).epsilon(5e-6).scale(1.0));
}

}  // namespace

TEST_CASE("every model flow is the identity at s = 0") {
  Diagnostics diag;
  const auto models = {make_heston(heston_params(true)), make_sabr(sabr_params(0.9)),
                       make_gensabr(gensabr_params()), make_multisabr(multi2_params())};
  for (const auto& m : models) {
    std::vector<double> x(static_cast<size_t>(m->state_dim()));
    for (size_t i = 0; i < x.size(); ++i) x[i] = 0.83 + 0.11 * static_cast<double>(i);
    const std::vector<double> ref = x;
    for (int j = 0; j <= m->brownian_dim(); ++j) {
      m->flow(j, 0.0, x.data(), diag);
      CHECK(x == ref);
    }
    m->shifted_drift_flow(0.0, x.data(), diag);
    CHECK(x == ref);
  }
  CHECK(diag.oracle_calls == 0);
  CHECK(diag.clamp_hits == 0);
}

TEST_CASE("heston closed flows match the frozen oracle values") {
  const auto m = make_heston(heston_params(false));  // price chart
  Diagnostics diag;

  std::vector<double> x{1.0, 0.04};
  m->flow(0, 1.0, x.data(), diag);
  CHECK(x[0] == doctest::Approx(1.0025763265300025).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.23779205395961472).epsilon(1e-12));

  x = {1.0, 0.04};
  m->flow(1, 0.3, x.data(), diag);
  CHECK(x[0] == doctest::Approx(1.0535074227110219).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.02175624999999929).epsilon(1e-10).scale(1.0));

  CHECK(diag.oracle_calls == 0);  // everything above is closed form
  CHECK(m->drift_flow_closed());

  // uncorrelated second factor: (sqrt(y) + xi s / 2)^2
  HestonParams p0 = heston_params(false);
  p0.rho = 0.0;
  const auto m0 = make_heston(p0);
  x = {1.0, 0.04};
  m0->flow(2, 0.2, x.data(), diag);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == doctest::Approx(0.0625).epsilon(1e-14));
}

TEST_CASE("heston charts are consistent") {
  const auto mlog = make_heston(heston_params(true));
  const auto mprice = make_heston(heston_params(false));
  Diagnostics diag;

  for (int j = 0; j <= 2; ++j) {
    std::vector<double> xl{0.0, 0.04};  // log(1) = 0
    std::vector<double> xp{1.0, 0.04};
    mlog->flow(j, 0.37, xl.data(), diag);
    mprice->flow(j, 0.37, xp.data(), diag);
    CHECK(std::exp(xl[0]) == doctest::Approx(xp[0]).epsilon(1e-13));
    CHECK(xl[1] == doctest::Approx(xp[1]).epsilon(1e-13));
  }

  double asset = 0.0;
  const double state[] = {0.25, 0.04};
  mlog->asset_values(state, &asset);
  CHECK(asset == doctest::Approx(std::exp(0.25)).epsilon(1e-15));
  mprice->asset_values(state, &asset);
  CHECK(asset == 0.25);
}

TEST_CASE("heston drift shift is zero and the variance coordinate is floored") {
  const auto m = make_heston(heston_params(true));
  CHECK(m->drift_shift().gamma == std::vector<double>{0.0, 0.0});
  CHECK(m->truncated_coords() == std::vector<int>{1});
}

TEST_CASE("sabr diffusion flow matches the frozen oracle values") {
  const auto m = make_sabr(sabr_params(0.9));
  Diagnostics diag;

  std::vector<double> x{1.0, 0.3};
  m->flow(1, 0.2, x.data(), diag);
  CHECK(x[0] == doctest::Approx(1.0599071857421865).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.28366174076711886).epsilon(1e-12));
  CHECK(diag.oracle_calls == 0);

  // beta = 1 variant has the fully explicit exponential form
  const auto m1 = make_sabr(sabr_params(1.0));
  x = {1.0, 0.3};
  m1->flow(1, 0.1, x.data(), diag);
  CHECK(x[0] == doctest::Approx(1.0300258435097591).epsilon(1e-13));
  CHECK(x[1] == doctest::Approx(0.29171651004037408).epsilon(1e-13));
}

TEST_CASE("sabr classical drift flow leans on the oracle") {
  const auto m = make_sabr(sabr_params(0.9));
  Diagnostics diag;
  std::vector<double> x{1.0, 0.3};
  m->flow(0, 0.25, x.data(), diag);
  CHECK(x[0] == doctest::Approx(1.0004708393975461).epsilon(1e-9));
  CHECK(x[1] == doctest::Approx(0.29405960199202658).epsilon(1e-12));
  CHECK(diag.oracle_calls == 1);
  CHECK_FALSE(m->drift_flow_closed());
}

TEST_CASE("sabr second diffusion leaves the asset untouched") {
  const auto m = make_sabr(sabr_params(0.9));
  Diagnostics diag;
  std::vector<double> x{1.23, 0.3};
  m->flow(2, 0.4, x.data(), diag);
  CHECK(x[0] == 1.23);
  const double rc = std::sqrt(1.0 - 0.49);
  CHECK(x[1] == doctest::Approx(0.3 * std::exp(0.4 * rc * 0.4)).epsilon(1e-14));
}

TEST_CASE("sabr is the degenerate generalized model") {
  const auto ms = make_sabr(sabr_params(0.9));
  GenSabrParams gp;
  gp.a = 1.0;
  gp.b = 0.4;
  gp.alpha = 1.0;
  gp.beta = 0.9;
  gp.rho = -0.7;
  gp.kappa = 0.0;
  gp.theta = 0.0;
  const auto mg = make_gensabr(gp);

  std::mt19937_64 rng(20240815);
  std::uniform_real_distribution<double> ux(0.2, 2.5), uy(0.05, 1.0), us(-0.4, 0.4);
  Diagnostics d1, d2;
  for (int trial = 0; trial < 20; ++trial) {
    const double s = us(rng);
    std::vector<double> a{ux(rng), uy(rng)};
    std::vector<double> b = a;
    for (int j : {1, 2}) {
      ms->flow(j, s, a.data(), d1);
      mg->flow(j, s, b.data(), d2);
      CHECK(a == b);  // same closed-form expressions, same bits
    }
    ms->shifted_drift_flow(std::fabs(s), a.data(), d1);
    mg->shifted_drift_flow(std::fabs(s), b.data(), d2);
    CHECK(a == b);
  }
  CHECK(ms->drift_shift().gamma[0] == doctest::Approx(mg->drift_shift().gamma[0]));
  CHECK(ms->drift_shift().gamma[1] == doctest::Approx(mg->drift_shift().gamma[1]));
}

TEST_CASE("gensabr shifted drift flow matches the frozen values") {
  const auto m = make_gensabr(gensabr_params());
  Diagnostics diag;
  std::vector<double> x{1.0, 0.2};
  m->shifted_drift_flow(0.5, x.data(), diag);
  CHECK(x[0] == doctest::Approx(0.91621887165087768).epsilon(1e-13));
  CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(diag.oracle_calls == 0);  // closed form by construction
}

TEST_CASE("gensabr beta = 1/2 shifted drift can cross zero unclamped") {
  GenSabrParams p = gensabr_params();
  p.beta = 0.5;
  const auto m = make_gensabr(p);
  Diagnostics diag;
  // x - a^2 P / 4 with a large P drives the asset negative; the linear
  // branch must report that value instead of flooring it.
  std::vector<double> x{0.001, 4.0};
  m->shifted_drift_flow(2.0, x.data(), diag);
  CHECK(x[0] < 0.0);
  CHECK(diag.clamp_hits == 0);
}

TEST_CASE("model constructors validate their parameters") {
  CHECK_THROWS_AS(make_sabr(sabr_params(0.3)), ValidationError);   // beta < 1/2
  CHECK_THROWS_AS(make_sabr(sabr_params(1.2)), ValidationError);   // beta > 1

  SabrParams bad_rho = sabr_params(0.9);
  bad_rho.rho = -1.0;
  CHECK_THROWS_AS(make_sabr(bad_rho), ValidationError);

  GenSabrParams gneg = gensabr_params();
  gneg.kappa = -0.5;
  CHECK_THROWS_AS(make_gensabr(gneg), ValidationError);

  HestonParams hbad = heston_params(true);
  hbad.xi = 0.0;
  CHECK_THROWS_AS(make_heston(hbad), ValidationError);

  MultiSabrParams mbad = multi2_params();
  mbad.b.pop_back();
  CHECK_THROWS_AS(make_multisabr(mbad), ValidationError);  // length mismatch

  MultiSabrParams mneg = multi2_params();
  mneg.rho = {1.0, 0.99, 0.99, 1.0};  // wrong size for n = 2
  CHECK_THROWS_AS(make_multisabr(mneg), ValidationError);

  // a correlation matrix that is symmetric but not positive definite
  MultiSabrParams mpd = multi2_params();
  mpd.n_assets = 1;
  mpd.a = {1.0};
  mpd.b = {0.5};
  mpd.alpha = {0.5};
  mpd.beta = {0.6};
  mpd.kappa = {0.2};
  mpd.theta = {0.3};
  mpd.rho = {1.0, -1.2, -1.2, 1.0};
  CHECK_THROWS_AS(make_multisabr(mpd), ValidationError);
}

TEST_CASE("beta snaps onto its branch endpoints") {
  CHECK(snap_beta(0.5 + 1e-13) == 0.5);
  CHECK(snap_beta(1.0 - 1e-13) == 1.0);
  CHECK(snap_beta(0.9) == 0.9);
}

TEST_CASE("multisabr column flows match the frozen oracle values") {
  const auto m = make_multisabr(multi2_params());
  Diagnostics diag;
  const std::vector<double> x0{1.0, 0.3, 0.9, 0.25};

  const double expect[4][4] = {
      {1.1691599990849999, 0.27832304589856582, 0.90690227349604147, 0.24407142743947735},
      {1.0, 0.30230520816508866, 0.93300479578512274, 0.2277800129356905},
      {1.0, 0.3415385516019121, 0.9, 0.26944328429307518},
      {1.0, 0.3, 0.9, 0.30742240403891757}};

  for (int col = 0; col < 4; ++col) {
    std::vector<double> x = x0;
    m->flow(col + 1, 0.3, x.data(), diag);
    for (int i = 0; i < 4; ++i)
      CHECK(x[static_cast<size_t>(i)] == doctest::Approx(expect[col][i]).epsilon(1e-12));
  }
  CHECK(diag.oracle_calls == 0);
}

TEST_CASE("multisabr shifted drift flow matches the frozen values") {
  const auto m = make_multisabr(multi2_params());
  Diagnostics diag;
  std::vector<double> x{1.0, 0.3, 0.9, 0.25};
  m->shifted_drift_flow(0.4, x.data(), diag);
  CHECK(x[0] == doctest::Approx(0.96270123897840187).epsilon(1e-13));
  CHECK(x[1] == doctest::Approx(0.324).epsilon(1e-14));
  CHECK(x[2] == doctest::Approx(0.89682515437935062).epsilon(1e-13));
  CHECK(x[3] == doctest::Approx(0.362).epsilon(1e-14));
  CHECK(diag.oracle_calls == 0);
}

TEST_CASE("multisabr classical drift flow calls the oracle once") {
  const auto m = make_multisabr(multi2_params());
  Diagnostics diag;
  std::vector<double> x{1.0, 0.3, 0.9, 0.25};
  m->flow(0, 0.25, x.data(), diag);
  CHECK(diag.oracle_calls == 1);
  // the y-components ride the closed mean-reverting ramp
  const double decay1 = 0.2 + 0.5 * 0.25;
  const double level1 = 0.2 * 0.3 / decay1;
  CHECK(x[1] == doctest::Approx((0.3 - level1) * std::exp(-decay1 * 0.25) + level1)
                    .epsilon(1e-12));
}

TEST_CASE("single-asset multisabr reduces to the two-factor model") {
  MultiSabrParams p;
  p.n_assets = 1;
  p.a = {1.0};
  p.b = {0.5};
  p.alpha = {0.5};
  p.beta = {0.6};
  p.kappa = {0.2};
  p.theta = {0.3};
  p.rho = {1.0, -0.4, -0.4, 1.0};
  const auto mm = make_multisabr(p);

  GenSabrParams g;
  g.a = 1.0;
  g.b = 0.5;
  g.alpha = 0.5;
  g.beta = 0.6;
  g.rho = -0.4;
  g.kappa = 0.2;
  g.theta = 0.3;
  const auto mg = make_gensabr(g);

  Diagnostics d1, d2;
  for (int j = 1; j <= 2; ++j) {
    std::vector<double> a{1.1, 0.4}, b{1.1, 0.4};
    mm->flow(j, 0.21, a.data(), d1);
    mg->flow(j, 0.21, b.data(), d2);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-13));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-13));
  }
  std::vector<double> a{1.1, 0.4}, b{1.1, 0.4};
  mm->shifted_drift_flow(0.33, a.data(), d1);
  mg->shifted_drift_flow(0.33, b.data(), d2);
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-13));
  CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-13));

  const auto& gm = mm->drift_shift().gamma;
  const auto& gg = mg->drift_shift().gamma;
  REQUIRE(gm.size() == 2);
  CHECK(gm[0] == doctest::Approx(gg[0]).epsilon(1e-12));
  CHECK(gm[1] == doctest::Approx(gg[1]).epsilon(1e-12));
}

TEST_CASE("field(0) is the Stratonovich drift of the diffusion fields") {
  check_stratonovich_drift(*make_heston(heston_params(false)), {1.1, 0.2});
  check_stratonovich_drift(*make_heston(heston_params(true)), {0.1, 0.2});
  check_stratonovich_drift(*make_sabr(sabr_params(0.9)), {1.1, 0.4});
  check_stratonovich_drift(*make_gensabr(gensabr_params()), {0.9, 0.35});
  check_stratonovich_drift(*make_multisabr(multi2_params()), {1.0, 0.3, 0.9, 0.25});
}

TEST_CASE("domain guards reject inadmissible states") {
  const auto m = make_sabr(sabr_params(0.9));
  Diagnostics diag;
  std::vector<double> x{-0.5, 0.3};  // negative asset with fractional beta
  CHECK_THROWS_AS(m->flow(1, 0.1, x.data(), diag), DomainError);

  const auto mm = make_multisabr(multi2_params());
  std::vector<double> xm{1.0, 0.3, 0.9, -0.25};
  CHECK_THROWS_AS(mm->flow(1, 0.1, xm.data(), diag), DomainError);
}
