#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "starkplan/fit.hpp"
#include "starkplan/synth.hpp"

using namespace starkplan;
using namespace starkplan::synth;
using Catch::Approx;

namespace {

StarkResponse a3() {
  return {"A3", 226168.37, 1.52, -4.0, 2.85, 0.0, -1.01, 0.0, -18.0, std::nullopt};
}

// Upper chi-square quantile by Wilson-Hilferty; z = 3.0902 is the 99.9% point.
double chi2_upper_999(double dof) {
  const double z = 3.090232;
  const double t = 1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof));
  return dof * t * t * t;
}

}  // namespace

TEST_CASE("poisson sampler moments") {
  RandomStream rng(123);
  for (double lambda : {3.0, 40.0, 2500.0}) {
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(lambda));
      sum += k;
      sum2 += k * k;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    REQUIRE(mean == Approx(lambda).epsilon(0.03));
    REQUIRE(var == Approx(lambda).epsilon(0.08));
  }
}

TEST_CASE("ple scan: determinism and the analytic forward model") {
  PleScenario sc;
  sc.emitters = {a3()};
  sc.bias_v = -14.0;
  sc.start_ghz = 226120.0;
  sc.stop_ghz = 226160.0;
  sc.points = 300;
  sc.background_rate = 20.0;
  sc.noise = NoiseKind::Poisson;
  sc.seed = 77;

  const auto s1 = gen_ple_scan(sc);
  const auto s2 = gen_ple_scan(sc);
  REQUIRE(format_spectrum_csv(s1) == format_spectrum_csv(s2));  // bit-identical
  sc.seed = 78;
  REQUIRE(format_spectrum_csv(gen_ple_scan(sc)) != format_spectrum_csv(s1));

  SECTION("noiseless output equals the model pointwise") {
    sc.noise = NoiseKind::None;
    const auto s = gen_ple_scan(sc);
    for (const auto& p : s.points) {
      REQUIRE(p.intensity ==
              Approx(ple_rate(sc, p.frequency_ghz) * sc.integration_s).margin(1e-12));
    }
    // the A3 peak lands at nu0 - 28.5
    double best_x = 0.0, best = -1.0;
    for (const auto& p : s.points) {
      if (p.intensity > best) { best = p.intensity; best_x = p.frequency_ghz; }
    }
    REQUIRE(best_x == Approx(226139.87).margin(0.2));
  }

  SECTION("poisson noise passes a chi-square goodness-of-fit at the 0.1% level") {
    sc.noise = NoiseKind::Poisson;
    sc.integration_s = 50.0;  // large counts
    const auto s = gen_ple_scan(sc);
    double chi2 = 0.0;
    for (const auto& p : s.points) {
      const double expected = ple_rate(sc, p.frequency_ghz) * sc.integration_s;
      chi2 += (p.intensity - expected) * (p.intensity - expected) / expected;
    }
    REQUIRE(chi2 < chi2_upper_999(static_cast<double>(s.points.size())));
  }
}

TEST_CASE("decay transients") {
  DecayScenario sc;
  sc.tau_ns = 940.0;
  sc.amplitude = 50.0;
  sc.bins = 500;
  sc.bin_ns = 10.0;

  SECTION("noiseless bin ratio at one lifetime is exactly 1/e") {
    const auto t = gen_decay(sc);
    REQUIRE(t.counts[94] / t.counts[0] == Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  SECTION("zero amplitude leaves pure background") {
    sc.amplitude = 0.0;
    sc.background_per_ns = 2.0;
    sc.noise = NoiseKind::Poisson;
    sc.seed = 5;
    const auto t = gen_decay(sc);
    double mean = 0.0;
    for (double c : t.counts) mean += c;
    mean /= static_cast<double>(t.counts.size());
    REQUIRE(mean == Approx(20.0).epsilon(0.05));
  }
}

TEST_CASE("shelving sequence scales the delayed peak with the dark lifetime") {
  ShelvingScenario sc;
  sc.base_params = {800.0, 0.0, 150.0, 150.0, 0.0, 900.0, 3000.0, 300.0, 1000.0, 200.0};
  sc.tau_dark_ns = 228.0;
  sc.pulse_widths_ns = {800.0, 1000.0, 1200.0, 1400.0, 1600.0, 1800.0};
  sc.bins = 1200;
  sc.bin_ns = 10.0;

  SECTION("noiseless areas follow exp(-w/tau_dark) exactly") {
    const auto seqs = gen_shelving_sequence(sc);
    REQUIRE(seqs.size() == 6);
    // integrate the delayed peak only: its onset is t2 = 300 + w
    for (std::size_t k = 0; k < seqs.size(); ++k) {
      const double w = sc.pulse_widths_ns[k];
      const double expect =
          3000.0 * std::exp(-w / 228.0) * (1000.0 - 200.0);
      // total counts beyond the initial transient tail, minus its analytic remainder
      double area = 0.0;
      for (std::size_t i = 0; i < seqs[k].time_ns.size(); ++i) {
        if (seqs[k].time_ns[i] >= 300.0 + w) area += seqs[k].counts[i];
      }
      // subtract the initial-decay tail baseline under the window
      const double tail = 800.0 * 150.0 * std::exp(-(300.0 + w) / 150.0) +
                          150.0 * 900.0 * std::exp(-(300.0 + w) / 900.0);
      REQUIRE(area - tail == Approx(expect).epsilon(0.02));
    }
  }

  SECTION("generate-and-refit recovers the dark lifetime within 20 ns") {
    sc.noise = NoiseKind::Poisson;
    sc.seed = 31;
    const auto seqs = gen_shelving_sequence(sc);
    std::vector<double> widths, areas;
    for (std::size_t k = 0; k < seqs.size(); ++k) {
      const double w = sc.pulse_widths_ns[k];
      auto p = sc.base_params;
      p[6] *= std::exp(-w / sc.tau_dark_ns);
      p[7] += w;
      std::vector<bool> fixed(10, false);
      fixed[1] = fixed[4] = fixed[7] = true;
      // initials: the pulse program plus a deliberate 10% misestimate
      auto init = p;
      for (int idx : {0, 2, 3, 5, 6, 8, 9}) init[idx] *= 1.10;
      const auto fit = nls_fit(LineShapeKind::DoubleDecay, seqs[k].time_ns, seqs[k].counts, {},
                               init, std::nullopt, fixed);
      widths.push_back(w);
      areas.push_back(double_decay_second_peak_area(fit.params[6], fit.params[8], fit.params[9]));
    }
    const auto dark = fit_dark_lifetime(widths, areas);
    REQUIRE(dark.tau_ns == Approx(228.0).margin(20.0));
  }
}

TEST_CASE("g2 stream: clean single-photon source") {
  G2StreamConfig cfg;
  cfg.duration_s = 2.0;
  cfg.det1_eff = 0.06;
  cfg.det2_eff = 0.06;
  cfg.seed = 9;
  const auto stream = gen_g2_stream(cfg);
  const double t_s = stream.duration_ns * 1e-9;
  const auto areas = correlate_peak_areas(stream, cfg.period_ns, 45.0, 4);

  G2Setup setup{stream.det1_ns.size() / t_s, stream.det2_ns.size() / t_s, 0.0, 0.0, 45e-9,
                cfg.period_ns * 1e-9, t_s};
  const auto g = g2_correct(areas, setup);
  // no background: raw equals corrected; zero-delay peak is empty
  REQUIRE(areas.at(0) == 0.0);
  REQUIRE(g.at(0) == Approx(0.0).margin(1e-12));
  for (int n : {-3, -2, -1, 1, 2, 3}) {
    REQUIRE(g.at(n) == Approx(1.0).margin(0.1));
  }
}

TEST_CASE("g2 stream: poissonian control normalizes to one") {
  // Background-only streams correlated over full-period windows behave as a
  // coherent source: corrected g2(0) = 1 within statistics.
  G2StreamConfig cfg;
  cfg.duration_s = 2.0;
  cfg.emitter_prob = 0.0;
  cfg.bg1_hz = 50000.0;
  cfg.bg2_hz = 50000.0;
  cfg.seed = 10;
  const auto stream = gen_g2_stream(cfg);
  const double t_s = stream.duration_ns * 1e-9;
  const auto areas = correlate_peak_areas(stream, cfg.period_ns, cfg.period_ns, 3);
  G2Setup setup{stream.det1_ns.size() / t_s, stream.det2_ns.size() / t_s, 0.0, 0.0,
                cfg.period_ns * 1e-9, cfg.period_ns * 1e-9, t_s};
  const auto g = g2_correct(areas, setup);
  REQUIRE(g.at(0) == Approx(1.0).margin(0.05));
  REQUIRE(g.at(1) == Approx(1.0).margin(0.05));
}

TEST_CASE("g2 stream determinism") {
  G2StreamConfig cfg;
  cfg.duration_s = 0.1;
  cfg.bg1_hz = 10000.0;
  cfg.bg2_hz = 8000.0;
  cfg.seed = 42;
  const auto s1 = gen_g2_stream(cfg);
  const auto s2 = gen_g2_stream(cfg);
  REQUIRE(s1.det1_ns == s2.det1_ns);
  REQUIRE(s1.det2_ns == s2.det2_ns);
}
