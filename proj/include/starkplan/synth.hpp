#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "starkplan/data.hpp"
#include "starkplan/emitters.hpp"
#include "starkplan/errors.hpp"
#include "starkplan/lineshapes.hpp"
#include "starkplan/rng.hpp"

// Synthetic-data generator: PLE scans, reflection spectra, decay transients,
// shelving sequences, and photon-correlation streams from known ground truth.
// Everything is a pure function of (scenario, seed); identical inputs give
// bit-identical outputs.

namespace starkplan::synth {

enum class NoiseKind { None, Poisson };

// ---------------------------------------------------------------------------
// PLE scans.

struct PleScenario {
  std::vector<StarkResponse> emitters;
  double bias_v = 0.0;
  double start_ghz = 0.0;
  double stop_ghz = 1.0;
  int points = 200;
  double peak_rate = 1000.0;       // counts/s for a unit-amplitude peak
  double background_rate = 0.0;    // counts/s, flat
  NoiseKind noise = NoiseKind::None;
  double integration_s = 1.0;
  std::uint64_t seed = 1;
};

/// Expected detected rate at one laser frequency: a sum of Gaussian-Lorentzian
/// product peaks at the bias-dependent positions plus a flat background. Peaks
/// use equal factor widths scaled so the product FWHM equals the emitter's
/// linewidth, the same convention the fit engine reports.
inline double ple_rate(const PleScenario& sc, double nu_ghz) {
  double rate = sc.background_rate;
  for (const auto& e : sc.emitters) {
    const PeakProfile p = peak_profile(e, sc.bias_v);
    const double w = gl_equal_width_for_fwhm(p.fwhm_ghz);
    rate += sc.peak_rate * eval_gauss_lorentz_product(nu_ghz, p.relative_amplitude, p.center_ghz,
                                                      w, w);
  }
  return rate;
}

inline Spectrum gen_ple_scan(const PleScenario& sc) {
  if (sc.points < 2 || sc.stop_ghz <= sc.start_ghz)
    throw domain_error("gen_ple_scan: bad frequency grid");
  Spectrum s;
  s.bias_v = sc.bias_v;
  s.integration_s = sc.integration_s;
  RandomStream rng(sc.seed);
  for (int i = 0; i < sc.points; ++i) {
    const double nu =
        sc.start_ghz + (sc.stop_ghz - sc.start_ghz) * i / static_cast<double>(sc.points - 1);
    const double expected = ple_rate(sc, nu) * sc.integration_s;
    SpectrumPoint p{};
    p.frequency_ghz = nu;
    if (sc.noise == NoiseKind::Poisson) {
      RandomStream sub = rng.derive(static_cast<std::uint64_t>(i));
      p.intensity = static_cast<double>(sub.poisson(expected));
      p.sigma = std::sqrt(std::max(p.intensity, 1.0));
    } else {
      p.intensity = expected;
      p.sigma = 0.0;
    }
    s.points.push_back(p);
  }
  return s;
}

/// Reflection spectrum of the cavity composite model on a uniform grid,
/// scaled to counts; Poisson-sampled per point when requested.
struct ReflectionScenario {
  std::vector<double> params;  // CavityComposite parameter vector
  double nu_ref = 0.0;
  double start_ghz = 0.0;
  double stop_ghz = 1.0;
  int points = 400;
  double counts_scale = 2500.0;  // counts at unit model value
  NoiseKind noise = NoiseKind::None;
  std::uint64_t seed = 1;
};

inline Spectrum gen_reflection_scan(const ReflectionScenario& sc) {
  if (sc.points < 2 || sc.stop_ghz <= sc.start_ghz)
    throw domain_error("gen_reflection_scan: bad frequency grid");
  Spectrum s;
  RandomStream rng(sc.seed);
  for (int i = 0; i < sc.points; ++i) {
    const double nu =
        sc.start_ghz + (sc.stop_ghz - sc.start_ghz) * i / static_cast<double>(sc.points - 1);
    const double expected =
        sc.counts_scale * eval_lineshape(LineShapeKind::CavityComposite, nu, sc.params, sc.nu_ref);
    SpectrumPoint p{};
    p.frequency_ghz = nu;
    if (sc.noise == NoiseKind::Poisson) {
      RandomStream sub = rng.derive(static_cast<std::uint64_t>(i));
      p.intensity = static_cast<double>(sub.poisson(std::max(expected, 0.0)));
      p.sigma = std::sqrt(std::max(p.intensity, 1.0));
    } else {
      p.intensity = expected;
      p.sigma = 0.0;
    }
    s.points.push_back(p);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Decay transients.

namespace detail {

/// Exact integral over [lo, hi] of a * exp(-(t - t0)/tau) for t >= t0.
inline double exp_term_integral(double lo, double hi, double a, double t0, double tau) {
  if (hi <= t0) return 0.0;
  const double from = std::max(lo, t0);
  return a * tau * (std::exp(-(from - t0) / tau) - std::exp(-(hi - t0) / tau));
}

}  // namespace detail

struct DecayScenario {
  double tau_ns = 1000.0;
  double amplitude = 100.0;      // peak intensity, counts per ns at t = 0
  double background_per_ns = 0.0;
  int bins = 400;
  double bin_ns = 10.0;
  NoiseKind noise = NoiseKind::None;
  std::uint64_t seed = 1;
};

/// Single-exponential transient; expected counts are the analytic integral
/// of the decay over each bin.
inline DecayTransient gen_decay(const DecayScenario& sc) {
  if (sc.tau_ns <= 0.0) throw domain_error("gen_decay: tau must be > 0");
  DecayTransient t;
  t.bin_width_ns = sc.bin_ns;
  RandomStream rng(sc.seed);
  for (int i = 0; i < sc.bins; ++i) {
    const double lo = i * sc.bin_ns, hi = lo + sc.bin_ns;
    const double expected = detail::exp_term_integral(lo, hi, sc.amplitude, 0.0, sc.tau_ns) +
                            sc.background_per_ns * sc.bin_ns;
    t.time_ns.push_back(lo);
    if (sc.noise == NoiseKind::Poisson) {
      RandomStream sub = rng.derive(static_cast<std::uint64_t>(i));
      t.counts.push_back(static_cast<double>(sub.poisson(expected)));
    } else {
      t.counts.push_back(expected);
    }
  }
  return t;
}

struct ShelvingScenario {
  // DoubleDecay parameter vector at zero electrical pulse width; a2 is the
  // delayed-peak amplitude before dark-state decay and t2 the delay of the
  // electrical pulse end at zero width.
  std::vector<double> base_params;  // a1f, t1f, tau1f, a1s, t1s, tau1s, a2, t2, tau2f, tau2r
  double tau_dark_ns = 228.0;
  std::vector<double> pulse_widths_ns;
  int bins = 600;
  double bin_ns = 10.0;
  NoiseKind noise = NoiseKind::None;
  std::uint64_t seed = 1;
};

/// One transient per electrical pulse width: the delayed peak's amplitude
/// scales as exp(-w/tau_dark) and its onset tracks the pulse end.
inline std::vector<DecayTransient> gen_shelving_sequence(const ShelvingScenario& sc) {
  if (sc.base_params.size() != 10) throw domain_error("gen_shelving_sequence: need 10 parameters");
  std::vector<DecayTransient> out;
  RandomStream rng(sc.seed);
  for (std::size_t k = 0; k < sc.pulse_widths_ns.size(); ++k) {
    const double w = sc.pulse_widths_ns[k];
    auto p = sc.base_params;
    p[6] *= std::exp(-w / sc.tau_dark_ns);
    p[7] += w;
    DecayTransient t;
    t.bin_width_ns = sc.bin_ns;
    RandomStream sub = rng.derive(k);
    for (int i = 0; i < sc.bins; ++i) {
      const double lo = i * sc.bin_ns, hi = lo + sc.bin_ns;
      double expected = detail::exp_term_integral(lo, hi, p[0], p[1], p[2]) +
                        detail::exp_term_integral(lo, hi, p[3], p[4], p[5]) +
                        detail::exp_term_integral(lo, hi, p[6], p[7], p[8]) -
                        detail::exp_term_integral(lo, hi, p[6], p[7], p[9]);
      expected = std::max(expected, 0.0);
      t.time_ns.push_back(lo);
      if (sc.noise == NoiseKind::Poisson) {
        RandomStream point = sub.derive(static_cast<std::uint64_t>(i));
        t.counts.push_back(static_cast<double>(point.poisson(expected)));
      } else {
        t.counts.push_back(expected);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Photon streams for the g2 correction oracle.

struct G2StreamConfig {
  double period_ns = 4500.0;
  double duration_s = 1.0;
  double emitter_prob = 1.0;       // probability a pulse produces a photon
  double reexcitation_prob = 0.0;  // probability of a second photon in the same pulse
  double det1_eff = 0.05;          // photon -> detector 1 (routing + detection)
  double det2_eff = 0.05;          // photon -> detector 2
  double decay_ns = 3.0;           // emission time constant after the pulse
  double bg1_hz = 0.0;             // uncorrelated background rates
  double bg2_hz = 0.0;
  std::uint64_t seed = 1;
};

struct G2Stream {
  std::vector<double> det1_ns;
  std::vector<double> det2_ns;
  double duration_ns = 0.0;
};

/// Pulsed single-photon source superposed with independent Poisson
/// backgrounds on each detector. At most one emitter photon per period
/// unless reexcitation_prob > 0, in which case a second, independently
/// routed photon models re-excitation within the pulse.
inline G2Stream gen_g2_stream(const G2StreamConfig& cfg) {
  if (cfg.det1_eff + cfg.det2_eff > 1.0)
    throw domain_error("gen_g2_stream: detection probabilities exceed 1");
  G2Stream out;
  out.duration_ns = cfg.duration_s * 1e9;
  const auto n_pulses = static_cast<std::uint64_t>(out.duration_ns / cfg.period_ns);
  RandomStream root(cfg.seed);

  for (std::uint64_t k = 0; k < n_pulses; ++k) {
    RandomStream pulse = root.derive(k);
    if (pulse.uniform() >= cfg.emitter_prob) continue;
    const int n_photons = pulse.uniform() < cfg.reexcitation_prob ? 2 : 1;
    for (int j = 0; j < n_photons; ++j) {
      const double t = k * cfg.period_ns + pulse.exponential(cfg.decay_ns);
      const double route = pulse.uniform();
      if (route < cfg.det1_eff) out.det1_ns.push_back(t);
      else if (route < cfg.det1_eff + cfg.det2_eff) out.det2_ns.push_back(t);
    }
  }

  auto add_background = [&](double rate_hz, std::vector<double>* dst, std::uint64_t stream) {
    if (rate_hz <= 0.0) return;
    RandomStream bg = root.derive(0xb0c0ull + stream);
    const double mean_gap_ns = 1e9 / rate_hz;
    double t = bg.exponential(mean_gap_ns);
    while (t < out.duration_ns) {
      dst->push_back(t);
      t += bg.exponential(mean_gap_ns);
    }
  };
  add_background(cfg.bg1_hz, &out.det1_ns, 1);
  add_background(cfg.bg2_hz, &out.det2_ns, 2);

  std::sort(out.det1_ns.begin(), out.det1_ns.end());
  std::sort(out.det2_ns.begin(), out.det2_ns.end());
  return out;
}

/// Coincidence-peak areas: counts of pairs with |t2 - t1 - n*period| <=
/// window/2 for each pulse separation n. The window passed here must match
/// the bin width handed to the correction formula.
inline std::map<int, double> correlate_peak_areas(const G2Stream& stream, double period_ns,
                                                  double window_ns, int n_max) {
  std::map<int, double> areas;
  for (int n = -n_max; n <= n_max; ++n) areas[n] = 0.0;
  const auto& t2 = stream.det2_ns;
  for (double t1 : stream.det1_ns) {
    for (int n = -n_max; n <= n_max; ++n) {
      const double center = t1 + n * period_ns;
      const auto lo = std::lower_bound(t2.begin(), t2.end(), center - 0.5 * window_ns);
      const auto hi = std::upper_bound(lo, t2.end(), center + 0.5 * window_ns);
      areas[n] += static_cast<double>(hi - lo);
    }
  }
  return areas;
}

}  // namespace starkplan::synth
