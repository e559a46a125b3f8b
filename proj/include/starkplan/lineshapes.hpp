#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "starkplan/cerf.hpp"
#include "starkplan/constants.hpp"
#include "starkplan/errors.hpp"

// Closed-form spectral and temporal model functions shared by the fit engine
// and the synthetic generator. Each kind documents its parameter order; all
// evaluations are total on their stated domains.

namespace starkplan {

enum class LineShapeKind {
  GaussLorentzProduct,  // a, nu0, fwhm_g, fwhm_l
  Voigt,                // a, nu0, sigma, fwhm_l          (a = peak amplitude)
  SkewedVoigt,          // a, nu0, sigma, fwhm_l, skew
  Sigmoid,              // a, v_switch, width             (x is a bias voltage)
  CavityComposite,      // amp, freq, phase, y0, y1, a0, nu_cav, fwhm_cav (+ fixed nu_ref)
  SingleExp,            // a, tau
  DoubleDecay,          // a1f, t1f, tau1f, a1s, t1s, tau1s, a2, t2, tau2_fall, tau2_rise
  HoleWidth,            // delta_nu_hom, p_sat            (x is total optical power)
};

inline std::size_t parameter_count(LineShapeKind k) {
  switch (k) {
    case LineShapeKind::GaussLorentzProduct: return 4;
    case LineShapeKind::Voigt: return 4;
    case LineShapeKind::SkewedVoigt: return 5;
    case LineShapeKind::Sigmoid: return 3;
    case LineShapeKind::CavityComposite: return 8;
    case LineShapeKind::SingleExp: return 2;
    case LineShapeKind::DoubleDecay: return 10;
    case LineShapeKind::HoleWidth: return 2;
  }
  throw domain_error("unknown lineshape kind");
}

inline const std::vector<std::string>& parameter_names(LineShapeKind k) {
  static const std::vector<std::string> gl = {"amplitude", "center_ghz", "fwhm_gauss_ghz",
                                              "fwhm_lorentz_ghz"};
  static const std::vector<std::string> voigt = {"amplitude", "center_ghz", "sigma_ghz",
                                                 "fwhm_lorentz_ghz"};
  static const std::vector<std::string> skew = {"amplitude", "center_ghz", "sigma_ghz",
                                                "fwhm_lorentz_ghz", "skew"};
  static const std::vector<std::string> sig = {"amplitude", "v_switch_v", "width_v"};
  static const std::vector<std::string> cav = {"fringe_amplitude", "fringe_freq_rad_per_ghz",
                                               "fringe_phase_rad", "background",
                                               "background_slope_per_ghz", "dip_amplitude",
                                               "nu_cav_ghz", "fwhm_cav_ghz"};
  static const std::vector<std::string> sexp = {"amplitude", "tau"};
  static const std::vector<std::string> dbl = {"a1_fast", "t1_fast", "tau1_fast", "a1_slow",
                                               "t1_slow", "tau1_slow", "a2", "t2",
                                               "tau2_fall", "tau2_rise"};
  static const std::vector<std::string> hole = {"delta_nu_hom", "p_sat"};
  switch (k) {
    case LineShapeKind::GaussLorentzProduct: return gl;
    case LineShapeKind::Voigt: return voigt;
    case LineShapeKind::SkewedVoigt: return skew;
    case LineShapeKind::Sigmoid: return sig;
    case LineShapeKind::CavityComposite: return cav;
    case LineShapeKind::SingleExp: return sexp;
    case LineShapeKind::DoubleDecay: return dbl;
    case LineShapeKind::HoleWidth: return hole;
  }
  throw domain_error("unknown lineshape kind");
}

// ---------------------------------------------------------------------------
// Peak shapes.

/// Gaussian-Lorentzian product: a * G(nu; fwhm_g) * L(nu; fwhm_l), both
/// factors normalized to 1 at the peak, so the maximum is a at nu0.
inline double eval_gauss_lorentz_product(double nu, double a, double nu0, double fwhm_g,
                                         double fwhm_l) {
  const double d = nu - nu0;
  const double g = std::exp(-4.0 * constants::ln2 * d * d / (fwhm_g * fwhm_g));
  const double hw = 0.5 * fwhm_l;
  return a * g * hw * hw / (d * d + hw * hw);
}

/// Voigt with peak amplitude a: the area-normalized profile rescaled so the
/// value at nu0 is exactly a.
inline double eval_voigt_peak(double nu, double a, double nu0, double sigma, double fwhm_l) {
  const double peak = voigt_profile(0.0, sigma, fwhm_l);
  return a * voigt_profile(nu - nu0, sigma, fwhm_l) / peak;
}

/// Skewed Voigt: Voigt multiplied by (1 + erf(skew*(nu-nu0)/(sigma*sqrt2))).
/// skew = 0 reduces exactly to eval_voigt_peak. Because the skew factor's
/// erf term is odd about nu0, the integrated area is independent of skew.
inline double eval_skewed_voigt(double nu, double a, double nu0, double sigma, double fwhm_l,
                                double skew) {
  const double base = eval_voigt_peak(nu, a, nu0, sigma, fwhm_l);
  const double s = 1.0 + std::erf(skew * (nu - nu0) / (sigma * std::sqrt(2.0)));
  return base * s;
}

/// Analytic area of the (skewed) Voigt above: independent of skew.
inline double skewed_voigt_area(double a, double sigma, double fwhm_l) {
  return a / voigt_profile(0.0, sigma, fwhm_l);
}

/// Cavity reflection composite: [A sin(f*(nu-nu_ref)+phi) + B(nu)] *
/// [B(nu) - L(nu)] with linear background B centred on the resonance and a
/// Lorentzian dip L of amplitude a0. nu_ref is a fixed reference frequency
/// (not fitted) that keeps the fringe phase well conditioned at absolute
/// frequencies; with nu_ref = 0 this is the textbook parameterization.
inline double eval_cavity_reflection(double nu, double fringe_amp, double fringe_freq,
                                     double fringe_phase, double y0, double y1, double a0,
                                     double nu_cav, double fwhm_cav, double nu_ref = 0.0) {
  const double b = y0 + y1 * (nu - nu_cav);
  const double hw = 0.5 * fwhm_cav;
  const double d = nu - nu_cav;
  const double lor = a0 * hw * hw / (d * d + hw * hw);
  const double envelope = fringe_amp * std::sin(fringe_freq * (nu - nu_ref) + fringe_phase) + b;
  return envelope * (b - lor);
}

// ---------------------------------------------------------------------------
// Temporal shapes.

inline double eval_single_exp(double t, double a, double tau) { return a * std::exp(-t / tau); }

/// Bi-exponential initial decay plus a rise-limited delayed peak; every term
/// is zero before its onset time.
inline double eval_double_decay(double t, double a1_fast, double t1_fast, double tau1_fast,
                                double a1_slow, double t1_slow, double tau1_slow, double a2,
                                double t2, double tau2_fall, double tau2_rise) {
  double v = 0.0;
  if (t >= t1_fast) v += a1_fast * std::exp(-(t - t1_fast) / tau1_fast);
  if (t >= t1_slow) v += a1_slow * std::exp(-(t - t1_slow) / tau1_slow);
  if (t >= t2) {
    v += a2 * (std::exp(-(t - t2) / tau2_fall) - std::exp(-(t - t2) / tau2_rise));
  }
  return v;
}

/// Area of the delayed peak: a2 * (tau2_fall - tau2_rise).
inline double double_decay_second_peak_area(double a2, double tau2_fall, double tau2_rise) {
  return a2 * (tau2_fall - tau2_rise);
}

// ---------------------------------------------------------------------------
// Saturation hole burning.

/// Characteristic hole FWHM at total power P = P_probe + P_pump:
/// delta_nu_hom * (1 + sqrt(1 + P/P_sat)).
inline double eval_hole_width(double p_pump, double p_probe, double p_sat, double delta_nu_hom) {
  if (p_sat <= 0.0 || delta_nu_hom <= 0.0) throw domain_error("hole width: p_sat and delta_nu_hom must be > 0");
  if (p_pump < 0.0 || p_probe < 0.0) throw domain_error("hole width: powers must be >= 0");
  return delta_nu_hom * (1.0 + std::sqrt(1.0 + (p_probe + p_pump) / p_sat));
}

// ---------------------------------------------------------------------------
// Uniform evaluation interface used by the fit engine and the generator.

/// Evaluate any kind at x with its packed parameter vector. nu_ref is the
/// fixed fringe reference used only by CavityComposite.
inline double eval_lineshape(LineShapeKind kind, double x, const std::vector<double>& p,
                             double nu_ref = 0.0) {
  switch (kind) {
    case LineShapeKind::GaussLorentzProduct:
      return eval_gauss_lorentz_product(x, p[0], p[1], p[2], p[3]);
    case LineShapeKind::Voigt:
      return eval_voigt_peak(x, p[0], p[1], p[2], p[3]);
    case LineShapeKind::SkewedVoigt:
      return eval_skewed_voigt(x, p[0], p[1], p[2], p[3], p[4]);
    case LineShapeKind::Sigmoid:
      return p[0] / (1.0 + std::exp((p[1] - x) / p[2]));
    case LineShapeKind::CavityComposite:
      return eval_cavity_reflection(x, p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], nu_ref);
    case LineShapeKind::SingleExp:
      return eval_single_exp(x, p[0], p[1]);
    case LineShapeKind::DoubleDecay:
      return eval_double_decay(x, p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9]);
    case LineShapeKind::HoleWidth:
      return eval_hole_width(0.0, x, p[1], p[0]);
  }
  throw domain_error("unknown lineshape kind");
}

/// Numeric FWHM of a symmetric-enough peaked profile: scans outward from the
/// maximum for the half crossings and bisects each to 1e-12 relative.
template <typename F>
inline double numeric_fwhm(const F& f, double center, double scale_hint) {
  const double half = 0.5 * f(center);
  auto crossing = [&](double direction) {
    double step = 0.05 * scale_hint;
    double inner = center;
    double outer = center + direction * step;
    for (int i = 0; i < 400 && f(outer) > half; ++i) {
      inner = outer;
      step *= 1.6;
      outer = center + direction * (std::abs(outer - center) + step);
    }
    if (f(outer) > half) throw model_error("numeric_fwhm: no half crossing found");
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (inner + outer);
      (f(mid) > half ? inner : outer) = mid;
      if (std::abs(outer - inner) < 1e-14 * (std::abs(center) + scale_hint)) break;
    }
    return 0.5 * (inner + outer);
  };
  return crossing(+1.0) - crossing(-1.0);
}

/// Width W such that a Gaussian-Lorentzian product with both factor widths
/// equal to W has product FWHM `target_fwhm` (the generator's convention).
inline double gl_equal_width_for_fwhm(double target_fwhm) {
  // Solve exp(-4 ln2 u^2) = (1 + 4 u^2)/2 for u = x/W, FWHM = 2 u W.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double u = 0.5 * (lo + hi);
    const double lhs = std::exp(-4.0 * constants::ln2 * u * u);
    const double rhs = 0.5 * (1.0 + 4.0 * u * u);
    (lhs > rhs ? lo : hi) = u;
  }
  const double u = 0.5 * (lo + hi);
  return target_fwhm / (2.0 * u);
}

}  // namespace starkplan
