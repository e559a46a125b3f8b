#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "starkplan/fit.hpp"
#include "starkplan/quadrature.hpp"
#include "starkplan/rng.hpp"
#include "starkplan/synth.hpp"

using namespace starkplan;
using Catch::Approx;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1.0));
  return out;
}

std::vector<double> eval_all(LineShapeKind k, const std::vector<double>& xs,
                             const std::vector<double>& p, double nu_ref = 0.0) {
  std::vector<double> ys;
  for (double x : xs) ys.push_back(eval_lineshape(k, x, p, nu_ref));
  return ys;
}

std::vector<double> perturb(const std::vector<double>& p, double rel, RandomStream& rng,
                            const std::vector<bool>& skip = {}) {
  std::vector<double> out = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!skip.empty() && skip[i]) continue;
    out[i] = p[i] * (1.0 + rel * (2.0 * rng.uniform() - 1.0));
    if (p[i] == 0.0) out[i] = rel * (2.0 * rng.uniform() - 1.0);
  }
  return out;
}

}  // namespace

TEST_CASE("noiseless generate-and-refit recovers exact parameters") {
  RandomStream rng(42);
  const auto xs = linspace(95.0, 105.0, 120);
  const std::vector<double> truth{50.0, 100.2, 1.8, 2.6};
  const auto ys = eval_all(LineShapeKind::GaussLorentzProduct, xs, truth);
  // +-20% perturbations; the centre moves by 20% of the linewidth, since a
  // fractional shift of an absolute frequency would leave the data window
  auto init = perturb(truth, 0.2, rng);
  init[1] = truth[1] + 0.2 * truth[3] * (2.0 * rng.uniform() - 1.0);
  const auto fit = nls_fit(LineShapeKind::GaussLorentzProduct, xs, ys, {}, init);
  for (std::size_t i = 0; i < truth.size(); ++i)
    REQUIRE(fit.params[i] == Approx(truth[i]).epsilon(1e-6));
}

TEST_CASE("flat data is rejected as degenerate instead of a spurious peak fit") {
  const auto xs = linspace(0.0, 10.0, 60);
  std::vector<double> ys(xs.size(), 7.0);
  REQUIRE_THROWS_AS(
      nls_fit(LineShapeKind::GaussLorentzProduct, xs, ys, {}, {1.0, 5.0, 2.0, 2.0}),
      fit_error);
}

TEST_CASE("fit is invariant under uniform intensity rescaling") {
  const auto xs = linspace(-6.0, 6.0, 90);
  const std::vector<double> truth{10.0, 0.3, 1.1, 1.7};
  auto ys = eval_all(LineShapeKind::Voigt, xs, truth);
  std::vector<double> sig(xs.size(), 1.0);
  const auto fit1 = nls_fit(LineShapeKind::Voigt, xs, ys, sig, {9.0, 0.2, 1.0, 1.5});
  for (auto& y : ys) y *= 37.0;
  std::vector<double> sig2(xs.size(), 37.0);
  const auto fit2 = nls_fit(LineShapeKind::Voigt, xs, ys, sig2, {9.0 * 37.0, 0.2, 1.0, 1.5});
  REQUIRE(fit2.params[0] == Approx(37.0 * fit1.params[0]).epsilon(1e-9));
  for (int i : {1, 2, 3}) REQUIRE(fit2.params[i] == Approx(fit1.params[i]).margin(1e-9));
}

TEST_CASE("aic_select keeps the simpler model unless clearly beaten") {
  // Stark-series proxy: linear data, candidates linear vs quadratic.
  const auto xs = linspace(-14.0, 0.0, 12);
  RandomStream rng(7);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(5.0 + 0.62 * x + 1e-9 * rng.normal());
  const auto lin = detail::weighted_polyfit(xs, ys, {}, 1);
  const auto quad = detail::weighted_polyfit(xs, ys, {}, 2);
  REQUIRE_FALSE(quad.aic < lin.aic - 5.0);

  // strong curvature: quadratic wins
  std::vector<double> yq;
  for (double x : xs) yq.push_back(5.0 - 0.207 * x - 0.058 * x * x + 1e-6 * rng.normal());
  const auto lin2 = detail::weighted_polyfit(xs, yq, {}, 1);
  const auto quad2 = detail::weighted_polyfit(xs, yq, {}, 2);
  REQUIRE(quad2.aic < lin2.aic - 5.0);
}

TEST_CASE("aic_select over FitResults: ties favour fewer parameters, empty errors") {
  FitResult a;
  a.n_points = 10;
  a.n_free = 2;
  a.aic = -40.0;
  FitResult b = a;
  b.n_free = 3;
  REQUIRE(aic_select({b, a}).n_free == 2);      // exact tie -> lower k
  b.aic = -46.0;
  REQUIRE(aic_select({a, b}).n_free == 3);      // improvement > 5 -> higher k
  b.aic = -44.0;
  REQUIRE(aic_select({a, b}).n_free == 2);      // improvement < 5 -> keep simpler
  REQUIRE_THROWS_AS(aic_select({}), domain_error);
}

TEST_CASE("stark series fit recovers the tabulated rates exactly on clean data") {
  // A3: linear rates over [-18, -4]
  std::vector<StarkSeriesPoint> series;
  for (double v : linspace(-18.0, -4.0, 8)) {
    series.push_back({v, 226168.37 + 2.85 * (v + 4.0), 1.52 - 1.01 * (v + 4.0), 0.0, 0.0});
  }
  const auto fit = fit_stark_series(series, -18.0, -4.0);
  REQUIRE_FALSE(fit.shift_quadratic);
  REQUIRE_FALSE(fit.width_quadratic);
  REQUIRE(fit.response.alpha1_ghz_per_v == Approx(2.85).epsilon(1e-6));
  REQUIRE(fit.response.gamma1_ghz_per_v == Approx(-1.01).epsilon(1e-6));
  REQUIRE(fit.response.nu0_ghz == Approx(226168.37).margin(1e-6));
  REQUIRE(fit.response.gamma0_ghz == Approx(1.52).margin(1e-6));
}

TEST_CASE("stark series fit selects and recovers a quadratic rate") {
  // C5-like: alpha2 = 0.00074 over [-105, 0]
  std::vector<StarkSeriesPoint> series;
  RandomStream rng(11);
  for (double v : linspace(-105.0, 0.0, 22)) {
    const double x = v - 0.0;
    series.push_back({v, 226110.95 + 0.181 * x + 0.00074 * x * x + 0.002 * rng.normal(),
                      5.6 - 0.236 * x - 0.00191 * x * x + 0.002 * rng.normal(), 0.0, 0.0});
  }
  const auto fit = fit_stark_series(series, -105.0, 0.0);
  REQUIRE(fit.shift_quadratic);
  REQUIRE(fit.response.alpha2_ghz_per_v2 == Approx(0.00074).epsilon(0.05));
}

TEST_CASE("stark series with too few in-range points errors") {
  std::vector<StarkSeriesPoint> series{{-1.0, 100.0, 1.0, 0, 0}, {-2.0, 100.0, 1.0, 0, 0}};
  REQUIRE_THROWS_AS(fit_stark_series(series, -20.0, -4.0), domain_error);
}

TEST_CASE("two-stage skewed voigt area extraction") {
  const auto xs = linspace(90.0, 110.0, 220);

  SECTION("symmetric peak: stage-2 skew stays near zero, area within 2%") {
    const std::vector<double> truth{120.0, 100.0, 1.2, 1.6, 0.0};
    Spectrum s;
    for (double x : xs) s.points.push_back({x, eval_lineshape(LineShapeKind::SkewedVoigt, x, truth), 0.0});
    const auto r = peak_area_skewed_voigt(s);
    REQUIRE(std::abs(r.fit.params[4]) < 0.05);
    REQUIRE(r.area == Approx(skewed_voigt_area(120.0, 1.2, 1.6)).epsilon(0.02));
    REQUIRE_FALSE(r.low_confidence);
  }

  SECTION("skewed peak: area matches the generator's numeric integral to 2%") {
    const std::vector<double> truth{120.0, 100.0, 1.2, 1.6, 0.5};
    Spectrum s;
    for (double x : xs) s.points.push_back({x, eval_lineshape(LineShapeKind::SkewedVoigt, x, truth), 0.0});
    const double oracle = integrate_adaptive(
        [&](double x) { return eval_lineshape(LineShapeKind::SkewedVoigt, x, truth); }, 60.0,
        140.0, 1e-8);
    const auto r = peak_area_skewed_voigt(s);
    REQUIRE(r.area == Approx(oracle).epsilon(0.02));
  }

  SECTION("a comparable nearby peak raises the low-confidence flag") {
    Spectrum s;
    for (double x : xs) {
      const double y = eval_lineshape(LineShapeKind::SkewedVoigt, x, {100.0, 98.0, 1.0, 1.2, 0.0}) +
                       eval_lineshape(LineShapeKind::SkewedVoigt, x, {60.0, 102.5, 1.0, 1.2, 0.0});
      s.points.push_back({x, y, 0.0});
    }
    const auto r = peak_area_skewed_voigt(s);
    REQUIRE(r.low_confidence);
  }
}

TEST_CASE("g2 correction formula") {
  G2Setup s{50000.0, 52000.0, 0.0, 0.0, 45e-9, 4.5e-6, 10.0};
  const std::map<int, double> areas{{-1, 100.0}, {0, 30.0}, {1, 110.0}};

  SECTION("no background: pure normalization by (N1 N2 theta T)") {
    const auto g = g2_correct(areas, s);
    const double norm = 50000.0 * 52000.0 * 4.5e-6 * 10.0;
    REQUIRE(g.at(0) == Approx(30.0 / norm).epsilon(1e-12));
    REQUIRE(g.at(1) == Approx(110.0 / norm).epsilon(1e-12));
  }

  SECTION("corrected values scale inversely with theta T") {
    auto s2 = s;
    s2.total_s *= 2.0;
    const auto g = g2_correct(areas, s);
    const auto g2 = g2_correct(areas, s2);
    REQUIRE(g2.at(1) == Approx(0.5 * g.at(1)).epsilon(1e-12));
  }

  SECTION("background subtraction and error paths") {
    G2Setup bad = s;
    bad.b1_hz = 60000.0;  // background above total rate
    REQUIRE_THROWS_AS(g2_correct(areas, bad), domain_error);
    G2Setup sb = s;
    sb.b1_hz = 20000.0;
    sb.b2_hz = 25000.0;
    const auto g = g2_correct(areas, sb);
    const double expect =
        (30.0 - (20000.0 * 52000.0 + 25000.0 * 50000.0 - 20000.0 * 25000.0) * 45e-9 * 10.0) /
        ((50000.0 - 20000.0) * (52000.0 - 25000.0) * 4.5e-6 * 10.0);
    REQUIRE(g.at(0) == Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("hole-burning saturation fit") {
  std::vector<double> power, width;
  for (double p : {20.0, 30.0, 50.0, 100.0, 200.0, 300.0, 400.0}) {
    power.push_back(p);
    width.push_back(eval_hole_width(0.0, p, 14.0, 15.5));
  }
  const auto r = fit_holeburning(power, width);
  REQUIRE(r.delta_nu_hom == Approx(15.5).epsilon(1e-6));
  REQUIRE(r.p_sat == Approx(14.0).epsilon(1e-6));
  REQUIRE_FALSE(r.unbounded_saturation);

  SECTION("constant widths flag an unbounded saturation power") {
    std::vector<double> flat(power.size(), 31.0);
    const auto rf = fit_holeburning(power, flat);
    REQUIRE(rf.unbounded_saturation);
  }

  SECTION("fewer than three distinct powers error") {
    REQUIRE_THROWS_AS(fit_holeburning({10.0, 10.0}, {31.0, 31.0}), domain_error);
    REQUIRE_THROWS_AS(fit_holeburning({10.0}, {31.0}), domain_error);
  }
}

TEST_CASE("dark-state lifetime fit") {
  RandomStream rng(5);
  std::vector<double> widths, areas;
  for (double w = 800.0; w <= 1800.0; w += 200.0) {
    widths.push_back(w);
    areas.push_back(1500.0 * std::exp(-w / 228.0) * (1.0 + 0.05 * rng.normal()));
  }
  const auto r = fit_dark_lifetime(widths, areas);
  REQUIRE(r.tau_ns == Approx(228.0).margin(20.0));
  REQUIRE_FALSE(r.unbounded);

  SECTION("flat areas flag an unbounded lifetime") {
    std::vector<double> flat(widths.size(), 500.0);
    const auto rf = fit_dark_lifetime(widths, flat);
    REQUIRE(rf.unbounded);
  }

  SECTION("two exact points solve the exponential directly") {
    const double tau = 333.0;
    const auto r2 = fit_dark_lifetime({800.0, 1400.0},
                                      {std::exp(-800.0 / tau), std::exp(-1400.0 / tau)});
    REQUIRE(r2.tau_ns == Approx(tau).epsilon(1e-12));
  }

  SECTION("rising areas flag low confidence") {
    const auto r3 = fit_dark_lifetime({800.0, 1000.0, 1200.0, 1400.0},
                                      {10.0, 20.0, 41.0, 85.0});
    REQUIRE(r3.low_confidence);
  }
}

TEST_CASE("10-90% rise time") {
  SECTION("exponential rise gives tau ln 9") {
    std::vector<double> t, y;
    for (double x = 0.0; x <= 800.0; x += 1.0) {
      t.push_back(x);
      y.push_back(1.0 - std::exp(-x / 72.8));
    }
    REQUIRE(rise_time_10_90(t, y) == Approx(160.0).margin(1.0));
  }
  SECTION("linear ramp over 100 ns gives 80 ns") {
    std::vector<double> t, y;
    for (double x = 0.0; x <= 140.0; x += 0.5) {
      t.push_back(x);
      y.push_back(std::clamp(x / 100.0, 0.0, 1.0));
    }
    REQUIRE(rise_time_10_90(t, y) == Approx(80.0).margin(0.01));
  }
  SECTION("step function resolves within one sample") {
    std::vector<double> t, y;
    for (double x = 0.0; x <= 100.0; x += 2.0) {
      t.push_back(x);
      y.push_back(x < 50.0 ? 0.0 : 1.0);
    }
    REQUIRE(rise_time_10_90(t, y) < 2.0);
  }
  SECTION("trace that starts mid-rise is rejected") {
    std::vector<double> t, y;
    for (double x = 0.0; x <= 200.0; x += 1.0) {
      t.push_back(x);
      y.push_back(1.0 - 0.5 * std::exp(-x / 40.0));  // starts at 50% of the plateau
    }
    REQUIRE_THROWS_AS(rise_time_10_90(t, y), domain_error);
  }
  SECTION("trace with no rise is rejected") {
    std::vector<double> t, y;
    for (double x = 0.0; x <= 50.0; x += 1.0) {
      t.push_back(x);
      y.push_back(5.0);
    }
    REQUIRE_THROWS_AS(rise_time_10_90(t, y), domain_error);
  }
}
