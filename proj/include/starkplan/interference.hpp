#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "starkplan/cerf.hpp"
#include "starkplan/constants.hpp"
#include "starkplan/emitters.hpp"
#include "starkplan/errors.hpp"
#include "starkplan/quadrature.hpp"

// Two-emitter photon interference and joint-excitation mathematics:
// time-gated HOM visibility of two lifetime-broadened emitters with Gaussian
// spectral diffusion, and the joint excitation probability map in the
// (width-ratio, normalized-detuning) plane.

namespace starkplan {

/// FWHM -> Gaussian standard deviation (the committed convention: spectral
/// diffusion linewidths are quoted as FWHM, the correlation integrals use
/// standard deviations).
inline double fwhm_to_sigma(double fwhm) { return fwhm / constants::gaussian_fwhm_per_sigma; }

struct EmitterPairConfig {
  double tau_prime_ns;   // common radiative lifetime
  double sigma1_ghz;     // SD standard deviation, emitter 1
  double sigma2_ghz;     // SD standard deviation, emitter 2
  double delta_nu_ghz;   // mutual detuning (any sign)
  double gate_ns;        // detection window width (symmetric about zero delay)

  double combined_sd_sq() const { return sigma1_ghz * sigma1_ghz + sigma2_ghz * sigma2_ghz; }
};

/// Coincidence density for distinguishable photons, (1/4tau') exp(-|tau|/tau').
inline double g2_envelope(double tau_ns, double tau_prime_ns) {
  if (tau_prime_ns <= 0.0) throw domain_error("g2_envelope: lifetime must be > 0");
  return std::exp(-std::abs(tau_ns) / tau_prime_ns) / (4.0 * tau_prime_ns);
}

/// Quantum-interference coincidence density with combined spectral diffusion
/// Sigma^2 and detuning: envelope * exp(-2 pi^2 Sigma^2 tau^2) cos(2 pi dnu tau).
inline double g2_interference(double tau_ns, double tau_prime_ns, double sigma_sq_ghz2,
                              double delta_nu_ghz) {
  return g2_envelope(tau_ns, tau_prime_ns) *
         std::exp(-2.0 * constants::pi * constants::pi * sigma_sq_ghz2 * tau_ns * tau_ns) *
         std::cos(2.0 * constants::pi * delta_nu_ghz * tau_ns);
}

namespace detail {

/// Gate-integrated visibility in the flat-envelope limit (tau' -> infinity):
/// closed form via the (complex) error function.
inline double hom_visibility_flat_envelope(double sigma_sq, double delta_nu, double gate) {
  const double a = 2.0 * constants::pi * constants::pi * sigma_sq;  // 1/ns^2
  const double b = 2.0 * constants::pi * delta_nu;                  // rad/ns
  if (a <= 0.0) {
    if (b == 0.0) return 1.0;
    const double x = 0.5 * b * gate;
    return std::sin(x) / x;
  }
  const double sa = std::sqrt(a);
  const std::complex<double> z(0.5 * gate * sa, 0.5 * b / sa);
  const double integral = std::sqrt(constants::pi / a) * std::exp(-b * b / (4.0 * a)) *
                          cerf(z).real();
  return integral / gate;
}

}  // namespace detail

/// Time-gated HOM visibility: ratio of the gate integrals of the
/// interference and envelope coincidence densities. Adaptive Gauss-Kronrod
/// quadrature at 1e-8 absolute tolerance; when the exponential envelope is
/// flat across the gate to below 1e-4 the erf closed form is used directly.
inline double hom_visibility(const EmitterPairConfig& cfg) {
  if (cfg.gate_ns <= 0.0) throw domain_error("hom_visibility: gate must be > 0");
  if (cfg.tau_prime_ns <= 0.0) throw domain_error("hom_visibility: lifetime must be > 0");
  const double sigma_sq = cfg.combined_sd_sq();

  if (cfg.gate_ns / (2.0 * cfg.tau_prime_ns) < 1e-4) {
    return detail::hom_visibility_flat_envelope(sigma_sq, cfg.delta_nu_ghz, cfg.gate_ns);
  }

  const double half = 0.5 * cfg.gate_ns;
  const double num =
      2.0 * integrate_adaptive(
                [&](double t) {
                  return g2_interference(t, cfg.tau_prime_ns, sigma_sq, cfg.delta_nu_ghz);
                },
                0.0, half, 1e-8 / (4.0 * cfg.tau_prime_ns));
  const double den = 2.0 * integrate_adaptive(
                               [&](double t) { return g2_envelope(t, cfg.tau_prime_ns); }, 0.0,
                               half, 1e-8 / (4.0 * cfg.tau_prime_ns));
  return num / den;
}

// ---------------------------------------------------------------------------
// Joint excitation probability of two resonantly excited emitters.

/// Peak of the product of two area-matched Gaussian excitation profiles:
/// (G_fixed/G_tuned) exp(-4 ln2 dnu^2 / (G_fixed^2 + G_tuned^2)). The fixed
/// emitter has unit amplitude; the tuned one conserves its integrated area as
/// it broadens, so values above 1 are possible when the tuned line is the
/// narrower of the two.
inline double p_exc(double gamma_fixed_ghz, double gamma_tuned_ghz, double delta_nu_ghz) {
  if (gamma_fixed_ghz <= 0.0 || gamma_tuned_ghz <= 0.0)
    throw domain_error("p_exc: linewidths must be > 0");
  const double denom =
      gamma_fixed_ghz * gamma_fixed_ghz + gamma_tuned_ghz * gamma_tuned_ghz;
  return (gamma_fixed_ghz / gamma_tuned_ghz) *
         std::exp(-4.0 * constants::ln2 * delta_nu_ghz * delta_nu_ghz / denom);
}

/// Non-dimensionalized joint excitation probability.
inline double p_exc_normalized(double gamma_ratio, double delta_tilde) {
  return gamma_ratio * std::exp(-4.0 * constants::ln2 * delta_tilde * delta_tilde);
}

struct OverlapPoint {
  double gamma_ratio;  // G_fixed / G_tuned
  double delta_tilde;  // dnu / sqrt(G_fixed^2 + G_tuned^2)
  double p_exc;
};

/// Reparameterize a pair into (gamma_ratio, delta_tilde). With
/// narrower_fixed the roles are swapped when needed so gamma_ratio <= 1 and
/// the result is a genuine probability.
inline OverlapPoint normalize_pair(double gamma_fixed_ghz, double gamma_tuned_ghz,
                                   double delta_nu_ghz, bool narrower_fixed = false) {
  if (gamma_fixed_ghz <= 0.0 || gamma_tuned_ghz <= 0.0)
    throw domain_error("normalize_pair: linewidths must be > 0");
  double gf = gamma_fixed_ghz, gt = gamma_tuned_ghz;
  if (narrower_fixed && gf > gt) std::swap(gf, gt);
  OverlapPoint p{};
  p.gamma_ratio = gf / gt;
  p.delta_tilde = delta_nu_ghz / std::sqrt(gf * gf + gt * gt);
  p.p_exc = p_exc_normalized(p.gamma_ratio, p.delta_tilde);
  return p;
}

// ---------------------------------------------------------------------------
// Stark tuning trajectories through the excitation-probability map.

struct TrajectoryPoint {
  double bias_v;        // bias applied to the tuned emitter
  double gamma_ratio;   // G_fixed(0) / G_tuned(v)
  double delta_tilde;
  double p_exc;
  bool quenched;        // tuned emitter's neutral fraction below 1/e
};

/// Evaluate the excitation-probability trajectory of `tuned` against `fixed`
/// (held at zero bias) over a bias grid. Points where the tuned emitter's
/// area factor drops below 1/e are flagged quenched; the probability itself
/// excludes the quench factor, matching the map's dashed-line convention.
/// The bias grid may extrapolate the fitted laws beyond the measured fit
/// range only insofar as the StarkResponse's own v_min allows.
inline std::vector<TrajectoryPoint> tuning_trajectory(const StarkResponse& fixed,
                                                      const StarkResponse& tuned,
                                                      const std::vector<double>& bias_grid_v) {
  const double gamma_fixed = stark_linewidth_ghz(fixed, 0.0);
  const double nu_fixed = fixed.nu0_ghz;  // fixed emitter at zero bias
  std::vector<TrajectoryPoint> out;
  out.reserve(bias_grid_v.size());
  const double quench_threshold = std::exp(-1.0);
  for (double v : bias_grid_v) {
    const double gamma_tuned = stark_linewidth_ghz(tuned, v);
    const double nu_tuned = tuned.nu0_ghz + stark_shift_ghz(tuned, v);
    const double dnu = nu_tuned - nu_fixed;
    TrajectoryPoint p{};
    p.bias_v = v;
    p.gamma_ratio = gamma_fixed / gamma_tuned;
    p.delta_tilde = dnu / std::sqrt(gamma_fixed * gamma_fixed + gamma_tuned * gamma_tuned);
    p.p_exc = p_exc(gamma_fixed, gamma_tuned, dnu);
    p.quenched = neutral_fraction(tuned, v) < quench_threshold;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Excitation-probability map export.

struct PexcMapSpec {
  double gamma_ratio_min = 0.05;
  double gamma_ratio_max = 1.0;
  int gamma_ratio_steps = 50;
  double delta_tilde_min = 0.0;
  double delta_tilde_max = 2.5;
  int delta_tilde_steps = 50;
  double floor = 1e-6;  // log-scale lower clip
};

/// CSV grid of the non-dimensional excitation probability, one row block per
/// gamma_ratio value, probabilities clipped below at `floor`. Row blocks are
/// computed in parallel when n_threads > 1; the assembled output is
/// byte-identical regardless of thread count.
inline std::string format_pexc_map_csv(const PexcMapSpec& spec, int n_threads = 1) {
  if (spec.gamma_ratio_steps < 1 || spec.delta_tilde_steps < 1)
    throw domain_error("pexc map: need at least one step per axis");
  std::vector<std::string> blocks(spec.gamma_ratio_steps);
  auto fill_block = [&](int i) {
    const double g =
        spec.gamma_ratio_steps == 1
            ? spec.gamma_ratio_min
            : spec.gamma_ratio_min + (spec.gamma_ratio_max - spec.gamma_ratio_min) * i /
                                         (spec.gamma_ratio_steps - 1.0);
    char line[96];
    for (int j = 0; j < spec.delta_tilde_steps; ++j) {
      const double d =
          spec.delta_tilde_steps == 1
              ? spec.delta_tilde_min
              : spec.delta_tilde_min + (spec.delta_tilde_max - spec.delta_tilde_min) * j /
                                           (spec.delta_tilde_steps - 1.0);
      const double p = std::max(p_exc_normalized(g, d), spec.floor);
      std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g\n", g, d, p);
      blocks[i] += line;
    }
  };
  const int workers = std::max(1, std::min(n_threads, spec.gamma_ratio_steps));
  if (workers == 1) {
    for (int i = 0; i < spec.gamma_ratio_steps; ++i) fill_block(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < spec.gamma_ratio_steps; i = next.fetch_add(1))
          fill_block(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  std::string out = "gamma_ratio,delta_tilde,p_exc\n";
  for (const auto& b : blocks) out += b;
  return out;
}

}  // namespace starkplan
