#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "starkplan/planner.hpp"
#include "starkplan/rng.hpp"

using namespace starkplan;
using Catch::Approx;

namespace {

Spectrum normal_spectrum(double mean, double sigma, double lo, double hi, int n,
                         double background = 0.0) {
  Spectrum s;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1.0);
    const double y =
        std::exp(-0.5 * (x - mean) * (x - mean) / (sigma * sigma)) + background;
    s.points.push_back({x, y, 0.0});
  }
  return s;
}

StarkResponse simple_emitter(std::string id, double nu0, double gamma0, double alpha1,
                             double gamma1, double v_threshold, double v_min) {
  return {std::move(id), nu0, gamma0, v_threshold, alpha1, 0.0, gamma1, 0.0, v_min, std::nullopt};
}

// Exhaustive matching enumeration (maximum cardinality, then weight).
struct BruteResult {
  int count = 0;
  double weight = 0.0;
};

BruteResult brute_force_matching(int n, const std::vector<std::vector<double>>& w) {
  const double ninf = -std::numeric_limits<double>::infinity();
  BruteResult best;
  std::vector<int> mate(n, -1);
  std::function<void(int, int, double)> rec = [&](int i, int count, double weight) {
    if (i == n) {
      if (count > best.count || (count == best.count && weight > best.weight)) {
        best = {count, weight};
      }
      return;
    }
    if (mate[i] >= 0) {
      rec(i + 1, count, weight);
      return;
    }
    rec(i + 1, count, weight);  // leave i unpaired
    for (int j = i + 1; j < n; ++j) {
      if (mate[j] < 0 && w[i][j] > ninf) {
        mate[i] = j;
        mate[j] = i;
        rec(i + 1, count + 1, weight + w[i][j]);
        mate[i] = mate[j] = -1;
      }
    }
  };
  rec(0, 0, 0.0);
  return best;
}

}  // namespace

TEST_CASE("pdf_from_spectrum subtracts, clamps and normalizes") {
  SECTION("uniform spectrum gives uniform density 1/span") {
    Spectrum s;
    for (int i = 0; i <= 10; ++i) s.points.push_back({double(i), 3.0, 0.0});
    const auto pdf = pdf_from_spectrum(s, 0.0);
    pdf.validate();
    for (double d : pdf.density) REQUIRE(d == Approx(0.1).epsilon(1e-12));
  }
  SECTION("gaussian ensemble integrates to exactly one") {
    const auto pdf = pdf_from_spectrum(normal_spectrum(0.0, 1.0, -6.0, 6.0, 400, 0.2), 0.2);
    pdf.validate();  // checks the integral to 1e-9
  }
  SECTION("background above every sample errors") {
    REQUIRE_THROWS_AS(pdf_from_spectrum(normal_spectrum(0.0, 1.0, -6.0, 6.0, 100), 5.0),
                      domain_error);
  }
}

TEST_CASE("tunable fraction on an analytic normal ensemble") {
  const auto pdf = pdf_from_spectrum(normal_spectrum(10.0, 1.0, 2.0, 18.0, 2001), 0.0);
  // window of 2 sigma centred by the max search captures erf(1/sqrt2)
  REQUIRE(tunable_fraction(pdf, 2.0) == Approx(0.6827).margin(5e-3));
  REQUIRE(tunable_fraction(pdf, 100.0) == 1.0);
  REQUIRE(tunable_fraction(pdf, 1e-4) < 1e-3);

  SECTION("monotone non-decreasing in the window width") {
    double prev = 0.0;
    for (double w = 0.25; w <= 17.0; w += 0.25) {
      const double f = tunable_fraction(pdf, w);
      REQUIRE(f >= prev - 1e-12);
      prev = f;
    }
  }
  SECTION("invariant under rigid translation") {
    const auto shifted = pdf_from_spectrum(normal_spectrum(250.0, 1.0, 242.0, 258.0, 2001), 0.0);
    for (double w : {0.7, 2.0, 5.0}) {
      REQUIRE(tunable_fraction(shifted, w) == Approx(tunable_fraction(pdf, w)).margin(1e-6));
    }
  }
  SECTION("off-centre mass: the sliding search beats a centred window") {
    // bimodal with unequal weights: best window sits on the heavy mode
    Spectrum s;
    for (int i = 0; i <= 4000; ++i) {
      const double x = -10.0 + 20.0 * i / 4000.0;
      const double y = 3.0 * std::exp(-0.5 * (x + 5.0) * (x + 5.0) / 0.25) +
                       std::exp(-0.5 * (x - 5.0) * (x - 5.0) / 0.25);
      s.points.push_back({x, y, 0.0});
    }
    // 0.75 of the mass in the heavy mode, window = 4 sigma captures 0.9545
    const auto pdf2 = pdf_from_spectrum(s, 0.0);
    REQUIRE(tunable_fraction(pdf2, 2.0) == Approx(0.75 * 0.9545).margin(2e-3));
  }
}

TEST_CASE("plan_pairs: identical emitters pair at zero bias") {
  const auto a = simple_emitter("E1", 226100.0, 2.0, 1.0, -0.5, -2.0, -20.0);
  const auto b = simple_emitter("E2", 226100.0, 2.0, 1.0, -0.5, -2.0, -20.0);
  const auto plan = plan_pairs({a, b});
  REQUIRE(plan.pairs.size() == 1);
  REQUIRE(plan.pairs[0].v_a == 0.0);
  REQUIRE(plan.pairs[0].v_b == 0.0);
  REQUIRE(plan.pairs[0].p_exc == Approx(1.0));
  REQUIRE(plan.pairs[0].target_ghz == Approx(226100.0));
  REQUIRE(plan.unpaired.empty());
}

TEST_CASE("plan_pairs: A1 with an extrapolated B1 reaches resonance") {
  const auto a1 = simple_emitter("A1", 226105.8, 2.2, 0.62, -0.29, -14.0, -27.0);
  auto b1 = simple_emitter("B1", 226118.58, 4.81, 0.35, -0.23, -95.0, -140.0);
  PlanConstraints cons;
  cons.min_neutral_fraction = 0.0;  // allow the quenched regime for this check
  const auto plan = plan_pairs({a1, b1}, cons);
  REQUIRE(plan.pairs.size() == 1);
  const auto& p = plan.pairs[0];
  REQUIRE(p.target_ghz == Approx(226105.8));
  REQUIRE(p.p_exc >= 0.1);
  // self-consistency: re-simulating the planned biases lands on the target
  REQUIRE(b1.nu0_ghz + stark_shift_ghz(b1, p.v_b) == Approx(p.target_ghz).margin(1e-6));
  REQUIRE(a1.nu0_ghz + stark_shift_ghz(a1, p.v_a) == Approx(p.target_ghz).margin(1e-6));
  // and the stated probability reproduces through the interference model
  const double ga = stark_linewidth_ghz(a1, p.v_a);
  const double gb = stark_linewidth_ghz(b1, p.v_b);
  REQUIRE(p.p_exc == Approx(p_exc(std::min(ga, gb), std::max(ga, gb), 0.0)).margin(1e-12));
}

TEST_CASE("plan_pairs: out-of-range emitter is left unpaired") {
  const auto a = simple_emitter("A", 226100.0, 2.0, 1.0, -0.2, -2.0, -20.0);
  const auto far = simple_emitter("F", 226200.0, 2.0, 0.5, -0.2, -2.0, -10.0);  // max 4 GHz shift
  const auto plan = plan_pairs({a, far});
  REQUIRE(plan.pairs.empty());
  REQUIRE(plan.unpaired.size() == 2);
}

TEST_CASE("plan_pairs: quench constraint excludes pairs and relaxing helps") {
  const auto a = simple_emitter("A", 226100.0, 2.0, 1.0, -0.2, -2.0, -40.0);
  auto b = simple_emitter("B", 226120.0, 2.0, 1.0, -0.2, -2.0, -40.0);
  b.quench = SigmoidQuench{-10.0, 2.0};  // deeply quenched at the -22 V it needs
  PlanConstraints strict;
  strict.min_neutral_fraction = std::exp(-1.0);
  const auto p1 = plan_pairs({a, b}, strict);
  REQUIRE(p1.pairs.empty());

  PlanConstraints relaxed = strict;
  relaxed.min_neutral_fraction = 0.0;
  const auto p2 = plan_pairs({a, b}, relaxed);
  REQUIRE(p2.pairs.size() == 1);
  REQUIRE(p2.pairs[0].quench_b);
  // lexicographic objective: more pairs always beats fewer
  REQUIRE(p2.pairs.size() > p1.pairs.size());
}

TEST_CASE("plan_pairs matches brute-force enumeration for small ensembles") {
  RandomStream rng(2024);
  for (int seed = 0; seed < 25; ++seed) {
    RandomStream trial = rng.derive(seed);
    const int n = 3 + static_cast<int>(trial.uniform() * 4);  // 3..6
    std::vector<StarkResponse> emitters;
    for (int i = 0; i < n; ++i) {
      emitters.push_back(simple_emitter(
          "E" + std::to_string(i), 226100.0 + 30.0 * trial.uniform(), 1.0 + 4.0 * trial.uniform(),
          0.3 + 2.5 * trial.uniform(), -(0.1 + trial.uniform()), -2.0,
          -2.0 - 25.0 * trial.uniform()));
    }
    const auto plan = plan_pairs(emitters);

    // rebuild the weight matrix exactly as the planner sees it
    const int m = static_cast<int>(emitters.size());
    std::vector<std::vector<double>> w(
        m, std::vector<double>(m, -std::numeric_limits<double>::infinity()));
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const auto cand = detail::evaluate_pair(emitters[i], emitters[j], PlanConstraints{});
        if (cand.feasible) w[i][j] = cand.weight;
      }
    }
    const auto brute = brute_force_matching(m, w);
    REQUIRE(static_cast<int>(plan.pairs.size()) == brute.count);
    REQUIRE(plan.objective_value == Approx(brute.weight).margin(1e-9));
  }
}

TEST_CASE("greedy fallback stays close to exact on mid-size ensembles") {
  // not an exactness guarantee; a sanity bound on the >20-emitter path
  RandomStream rng(77);
  std::vector<StarkResponse> emitters;
  for (int i = 0; i < 24; ++i) {
    emitters.push_back(simple_emitter("G" + std::to_string(i), 226100.0 + 25.0 * rng.uniform(),
                                      1.0 + 3.0 * rng.uniform(), 0.5 + 2.0 * rng.uniform(),
                                      -(0.1 + 0.5 * rng.uniform()), -2.0, -30.0));
  }
  const auto plan = plan_pairs(emitters);  // 24 emitters: greedy path
  REQUIRE(plan.pairs.size() >= 10);        // nearly everyone is pairable here
}
