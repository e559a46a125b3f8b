#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "starkplan/data.hpp"
#include "starkplan/emitters.hpp"
#include "starkplan/errors.hpp"
#include "starkplan/levmar.hpp"
#include "starkplan/lineshapes.hpp"

// Nonlinear least-squares fitting of the lineshape and response models, with
// AIC model selection and the derived-quantity extractors used by the
// analysis pipelines. Every fit call is independent and reentrant.

namespace starkplan {

struct FitResult {
  LineShapeKind model = LineShapeKind::GaussLorentzProduct;
  std::vector<double> params;
  std::vector<bool> fixed;               // mask aligned with params
  Eigen::MatrixXd covariance;            // over free parameters, fit-error scaled
  std::vector<double> param_sigma;       // 1-sigma, 0 for fixed parameters
  double residual_norm = 0.0;            // weighted RSS
  std::size_t n_points = 0;
  std::size_t n_free = 0;
  double aic = 0.0;
  bool converged = false;
  double nu_ref = 0.0;                   // CavityComposite fringe reference

  double eval(double x) const { return eval_lineshape(model, x, params, nu_ref); }
};

/// Fit failure diagnostic carrying the best parameters reached.
class fit_error : public std::runtime_error {
 public:
  fit_error(const std::string& what, FitResult best)
      : std::runtime_error(what), best_so_far(std::move(best)) {}
  FitResult best_so_far;
};

/// AIC with the n*ln(RSS/n) + 2k convention. The RSS floor only matters for
/// exactly-noiseless data, where it turns rounding junk into a clean tie
/// (ties then favour fewer parameters).
inline double akaike_information(double rss, std::size_t n, std::size_t k, double y_rms) {
  const double floor = static_cast<double>(n) * std::pow(1e-10 * std::max(y_rms, 1e-30), 2);
  return static_cast<double>(n) * std::log(std::max(rss, floor) / static_cast<double>(n)) +
         2.0 * static_cast<double>(k);
}

namespace detail {

inline double rms(const std::vector<double>& y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return y.empty() ? 0.0 : std::sqrt(s / static_cast<double>(y.size()));
}

/// Poisson weights unless explicit sigmas are provided: sigma = sqrt(counts),
/// floored at 1.
inline std::vector<double> effective_sigma(const std::vector<double>& y,
                                           const std::vector<double>& sigma) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i < sigma.size() && sigma[i] > 0.0) out[i] = sigma[i];
    else out[i] = std::sqrt(std::max(y[i], 1.0));
  }
  return out;
}

}  // namespace detail

struct FitBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Permissive default box constraints: widths and time constants positive,
/// everything else unbounded.
inline FitBounds default_bounds(LineShapeKind kind) {
  const std::size_t n = parameter_count(kind);
  const double inf = std::numeric_limits<double>::infinity();
  FitBounds b{std::vector<double>(n, -inf), std::vector<double>(n, inf)};
  auto positive = [&](std::size_t i) { b.lower[i] = 1e-12; };
  auto non_negative = [&](std::size_t i) { b.lower[i] = 0.0; };
  switch (kind) {
    case LineShapeKind::GaussLorentzProduct: positive(2); positive(3); break;
    case LineShapeKind::Voigt: positive(2); positive(3); break;
    case LineShapeKind::SkewedVoigt: positive(2); positive(3); break;
    case LineShapeKind::Sigmoid: positive(2); break;
    case LineShapeKind::CavityComposite: positive(7); break;
    case LineShapeKind::SingleExp: non_negative(0); positive(1); break;
    case LineShapeKind::DoubleDecay:
      // count amplitudes are physical (non-negative); time constants positive
      non_negative(0); non_negative(3); non_negative(6);
      positive(2); positive(5); positive(8); positive(9);
      break;
    case LineShapeKind::HoleWidth: positive(0); positive(1); break;
  }
  return b;
}

/// Core NLS fit. sigmas may be empty (Poisson weighting). The fixed mask, if
/// non-empty, freezes the flagged parameters (used for two-stage skew fits
/// and for decay onset times known from the pulse program).
inline FitResult nls_fit(LineShapeKind kind, const std::vector<double>& xs,
                         const std::vector<double>& ys, const std::vector<double>& sigmas,
                         const std::vector<double>& init,
                         std::optional<FitBounds> bounds = std::nullopt,
                         std::vector<bool> fixed = {}, double nu_ref = 0.0) {
  const std::size_t np = parameter_count(kind);
  if (init.size() != np) throw domain_error("nls_fit: wrong number of initial parameters");
  if (xs.size() != ys.size()) throw domain_error("nls_fit: x/y size mismatch");
  if (fixed.empty()) fixed.assign(np, false);
  if (fixed.size() != np) throw domain_error("nls_fit: fixed mask size mismatch");

  std::size_t n_free = 0;
  for (bool f : fixed)
    if (!f) ++n_free;
  if (xs.size() < n_free + 1)
    throw domain_error("nls_fit: need at least one more data point than free parameters");

  const FitBounds bb = bounds ? *bounds : default_bounds(kind);
  for (std::size_t i = 0; i < np; ++i) {
    if (init[i] < bb.lower[i] || init[i] > bb.upper[i])
      throw domain_error("nls_fit: initial parameter '" + parameter_names(kind)[i] +
                         "' outside bounds");
  }

  const std::vector<double> w = detail::effective_sigma(ys, sigmas);
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(xs.size());
    std::vector<double> pv(p.data(), p.data() + p.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      r[static_cast<int>(i)] = (ys[i] - eval_lineshape(kind, xs[i], pv, nu_ref)) / w[i];
    return r;
  };

  Eigen::VectorXd p0 = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<int>(np));
  Eigen::VectorXd lo = Eigen::Map<const Eigen::VectorXd>(bb.lower.data(), static_cast<int>(np));
  Eigen::VectorXd hi = Eigen::Map<const Eigen::VectorXd>(bb.upper.data(), static_cast<int>(np));

  LevMarOptions opt;
  const LevMarResult lm = levmar(residuals, p0, lo, hi, fixed, opt);

  FitResult out;
  out.model = kind;
  out.params.assign(lm.params.data(), lm.params.data() + np);
  out.fixed = fixed;
  out.residual_norm = lm.rss;
  out.n_points = xs.size();
  out.n_free = n_free;
  out.nu_ref = nu_ref;
  out.aic = akaike_information(lm.rss, xs.size(), n_free, detail::rms(ys));
  out.converged = lm.converged;

  // 1-sigma errors from s^2 (J^T J)^-1 with s^2 = RSS/(n-k). The absolute
  // scale matches the usual "standard error of the fit" convention.
  out.param_sigma.assign(np, 0.0);
  const int nf = static_cast<int>(lm.free_indices.size());
  if (nf > 0 && lm.jtj.rows() == nf) {
    const double dof = static_cast<double>(xs.size()) - static_cast<double>(n_free);
    const double s2 = dof > 0 ? lm.rss / dof : 0.0;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(nf, nf);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lm.jtj);
    if (lu.isInvertible()) {
      cov = lu.inverse() * s2;
      for (int c = 0; c < nf; ++c)
        out.param_sigma[lm.free_indices[c]] = std::sqrt(std::max(cov(c, c), 0.0));
    }
    out.covariance = cov;
  }

  if (!lm.converged) {
    throw fit_error("fit did not converge: " + lm.message, out);
  }
  if (lm.degenerate) {
    throw fit_error("fit degenerate: parameters not identifiable from the data", out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initial-guess heuristics (documented per model family):
//  * peaks: argmax for amplitude/centre, half-width scan for widths;
//  * decays: log-linear regression on the positive tail;
//  * sigmoid: half-amplitude crossing;
//  * hole widths: low-power limit for delta_nu_hom.

inline std::vector<double> initial_guess(LineShapeKind kind, const std::vector<double>& xs,
                                         const std::vector<double>& ys) {
  if (xs.empty()) throw domain_error("initial_guess: empty data");
  const auto imax = static_cast<std::size_t>(
      std::distance(ys.begin(), std::max_element(ys.begin(), ys.end())));
  const double span = xs.back() - xs.front();
  auto half_width = [&]() {
    const double half = 0.5 * ys[imax];
    std::size_t l = imax, r = imax;
    while (l > 0 && ys[l] > half) --l;
    while (r + 1 < ys.size() && ys[r] > half) ++r;
    const double w = xs[r] - xs[l];
    return w > 0.0 ? w : span / 10.0;
  };
  switch (kind) {
    case LineShapeKind::GaussLorentzProduct: {
      const double w = half_width() * gl_equal_width_for_fwhm(1.0);
      return {ys[imax], xs[imax], w, w};
    }
    case LineShapeKind::Voigt: {
      const double w = half_width();
      return {ys[imax], xs[imax], w / constants::gaussian_fwhm_per_sigma, 0.5 * w};
    }
    case LineShapeKind::SkewedVoigt: {
      const double w = half_width();
      return {ys[imax], xs[imax], w / constants::gaussian_fwhm_per_sigma, 0.5 * w, 0.0};
    }
    case LineShapeKind::Sigmoid: {
      const double a = *std::max_element(ys.begin(), ys.end());
      double vs = xs.front();
      for (std::size_t i = 0; i < ys.size(); ++i)
        if (ys[i] <= 0.5 * a) vs = xs[i];
      return {a, vs, std::abs(span) / 10.0};
    }
    case LineShapeKind::SingleExp: {
      // log-linear regression over strictly positive samples
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int n = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ys[i] > 0) {
          const double ly = std::log(ys[i]);
          sx += xs[i]; sy += ly; sxx += xs[i] * xs[i]; sxy += xs[i] * ly;
          ++n;
        }
      }
      if (n < 2) throw domain_error("initial_guess: not enough positive samples for decay");
      const double slope = (n * sxy - sx * sy) / std::max(n * sxx - sx * sx, 1e-30);
      const double tau = slope < 0 ? -1.0 / slope : span;
      return {std::exp((sy - slope * sx) / n), tau};
    }
    case LineShapeKind::HoleWidth: {
      const double wmin = *std::min_element(ys.begin(), ys.end());
      const double pmax = *std::max_element(xs.begin(), xs.end());
      return {0.5 * wmin, 0.25 * pmax};
    }
    default:
      throw domain_error("initial_guess: no heuristic for this model; pass initials explicitly");
  }
}

/// Reported linewidth of a fitted peak: the numeric FWHM of the fitted
/// profile (the committed convention for Gaussian-Lorentzian product fits,
/// where neither factor width alone is the observed width).
inline double fitted_fwhm_ghz(const FitResult& fit) {
  const double center = fit.params[1];
  double hint = 1.0;
  switch (fit.model) {
    case LineShapeKind::GaussLorentzProduct: hint = 0.5 * (fit.params[2] + fit.params[3]); break;
    case LineShapeKind::Voigt:
    case LineShapeKind::SkewedVoigt: hint = fit.params[2] + fit.params[3]; break;
    default: throw domain_error("fitted_fwhm_ghz: not a peak model");
  }
  return numeric_fwhm([&](double x) { return fit.eval(x); }, center, hint);
}

// ---------------------------------------------------------------------------
// AIC model selection.

/// Choose among fits of the same data: keep the lower-complexity model unless
/// a higher-complexity one improves AIC by more than `threshold`; exact ties
/// favour fewer parameters.
inline const FitResult& aic_select(const std::vector<FitResult>& fits, double threshold = 5.0) {
  if (fits.empty()) throw domain_error("aic_select: no fits");
  for (const auto& f : fits) {
    if (f.n_points != fits.front().n_points)
      throw domain_error("aic_select: fits are not on identical data");
  }
  std::vector<std::size_t> order(fits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fits[a].n_free < fits[b].n_free;
  });
  std::size_t chosen = order[0];
  for (std::size_t j = 1; j < order.size(); ++j) {
    const std::size_t cand = order[j];
    if (fits[cand].aic < fits[chosen].aic - threshold) chosen = cand;
  }
  return fits[chosen];
}

// ---------------------------------------------------------------------------
// Stark series fitting (polynomial laws are linear least squares).

struct StarkSeriesPoint {
  double bias_v;
  double center_ghz;
  double fwhm_ghz;
  double center_sigma_ghz = 0.0;  // 0 -> unit weight
  double fwhm_sigma_ghz = 0.0;
};

struct PolyFit {
  std::vector<double> coeffs;  // c0 + c1 x + c2 x^2
  double rss = 0.0;
  std::size_t n = 0;
  double aic = 0.0;
};

namespace detail {

inline PolyFit weighted_polyfit(const std::vector<double>& x, const std::vector<double>& y,
                                const std::vector<double>& sigma, int degree) {
  const int n = static_cast<int>(x.size());
  const int k = degree + 1;
  Eigen::MatrixXd a(n, k);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const double w = (i < static_cast<int>(sigma.size()) && sigma[i] > 0) ? 1.0 / sigma[i] : 1.0;
    double xp = 1.0;
    for (int j = 0; j < k; ++j) {
      a(i, j) = xp * w;
      xp *= x[i];
    }
    b[i] = y[i] * w;
  }
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  PolyFit out;
  out.coeffs.assign(c.data(), c.data() + k);
  out.rss = (a * c - b).squaredNorm();
  out.n = x.size();
  out.aic = akaike_information(out.rss, out.n, k, rms(y));
  return out;
}

}  // namespace detail

struct StarkSeriesFit {
  StarkResponse response;
  bool shift_quadratic = false;
  bool width_quadratic = false;
  PolyFit shift_fit;  // the selected model
  PolyFit width_fit;
};

/// Fit the tuning and broadening laws to per-bias peak fits over an explicit
/// fit range [v_min, v_threshold]. Linear vs quadratic is decided per
/// quantity by AIC with the improvement threshold of 5.
inline StarkSeriesFit fit_stark_series(const std::vector<StarkSeriesPoint>& series,
                                       double v_min, double v_threshold,
                                       double aic_threshold = 5.0) {
  std::vector<double> x, nu, gam, snu, sgam;
  for (const auto& p : series) {
    if (p.bias_v >= v_min - 1e-9 && p.bias_v <= v_threshold + 1e-9) {
      x.push_back(p.bias_v - v_threshold);
      nu.push_back(p.center_ghz);
      gam.push_back(p.fwhm_ghz);
      snu.push_back(p.center_sigma_ghz);
      sgam.push_back(p.fwhm_sigma_ghz);
    }
  }
  if (x.size() < 3)
    throw domain_error("fit_stark_series: need >= 3 points inside the fit range, got " +
                       std::to_string(x.size()));

  const PolyFit nu_lin = detail::weighted_polyfit(x, nu, snu, 1);
  const PolyFit nu_quad = detail::weighted_polyfit(x, nu, snu, 2);
  const PolyFit g_lin = detail::weighted_polyfit(x, gam, sgam, 1);
  const PolyFit g_quad = detail::weighted_polyfit(x, gam, sgam, 2);

  StarkSeriesFit out;
  out.shift_quadratic = nu_quad.aic < nu_lin.aic - aic_threshold;
  out.width_quadratic = g_quad.aic < g_lin.aic - aic_threshold;
  out.shift_fit = out.shift_quadratic ? nu_quad : nu_lin;
  out.width_fit = out.width_quadratic ? g_quad : g_lin;

  StarkResponse r;
  r.nu0_ghz = out.shift_fit.coeffs[0];
  r.alpha1_ghz_per_v = out.shift_fit.coeffs[1];
  r.alpha2_ghz_per_v2 = out.shift_quadratic ? out.shift_fit.coeffs[2] : 0.0;
  r.gamma0_ghz = out.width_fit.coeffs[0];
  r.gamma1_ghz_per_v = out.width_fit.coeffs[1];
  r.gamma2_ghz_per_v2 = out.width_quadratic ? out.width_fit.coeffs[2] : 0.0;
  r.v_threshold_v = v_threshold;
  r.v_min_v = v_min;
  out.response = r;
  return out;
}

// ---------------------------------------------------------------------------
// Two-stage skewed-Voigt peak area.

struct PeakAreaResult {
  double area = 0.0;
  double area_sigma = 0.0;
  FitResult fit;            // stage-2 fit
  bool low_confidence = false;  // nearby comparable peaks in the window
};

namespace detail {

/// Count well-separated local maxima above a fraction of the global maximum
/// (5-point smoothed). Used to flag windows the skewed-Voigt fit is known to
/// handle poorly.
inline int count_candidate_peaks(const std::vector<double>& ys, double rel_threshold) {
  const std::size_t n = ys.size();
  if (n < 5) return 1;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    int c = 0;
    for (std::size_t j = (i >= 2 ? i - 2 : 0); j <= std::min(n - 1, i + 2); ++j, ++c) acc += ys[j];
    s[i] = acc / c;
  }
  const double top = *std::max_element(s.begin(), s.end());
  int peaks = 0;
  std::size_t last_peak = 0;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    if (s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] > rel_threshold * top) {
      if (peaks == 0 || i - last_peak > 4) {
        ++peaks;
        last_peak = i;
      }
    }
  }
  return std::max(peaks, 1);
}

}  // namespace detail

/// Integrated peak area via the two-stage skewed-Voigt procedure: stage one
/// fits with the skew pinned to zero to lock the centre, stage two frees the
/// skew from that solution. The area comes from the analytic integral of the
/// fitted profile (the erf skew term is odd, so skew does not change it);
/// the uncertainty is propagated from the stage-2 covariance.
inline PeakAreaResult peak_area_skewed_voigt(const Spectrum& spectrum) {
  std::vector<double> xs, ys, sig;
  xs.reserve(spectrum.points.size());
  for (const auto& p : spectrum.points) {
    xs.push_back(p.frequency_ghz);
    ys.push_back(p.intensity);
    sig.push_back(p.sigma);
  }
  auto init = initial_guess(LineShapeKind::SkewedVoigt, xs, ys);

  std::vector<bool> lock_skew(5, false);
  lock_skew[4] = true;
  FitResult stage1;
  try {
    stage1 = nls_fit(LineShapeKind::SkewedVoigt, xs, ys, sig, init, std::nullopt, lock_skew);
  } catch (const fit_error& e) {
    throw fit_error(std::string("peak_area_skewed_voigt stage 1: ") + e.what(), e.best_so_far);
  }

  FitResult stage2 = nls_fit(LineShapeKind::SkewedVoigt, xs, ys, sig, stage1.params);

  PeakAreaResult out;
  out.fit = stage2;
  out.area = skewed_voigt_area(stage2.params[0], stage2.params[2], stage2.params[3]);
  // Propagate d(area)/d(a, sigma, fwhm_l) through the covariance numerically.
  const int nf = static_cast<int>(stage2.covariance.rows());
  if (nf == 5) {
    Eigen::VectorXd g(5);
    for (int i = 0; i < 5; ++i) {
      std::vector<double> p = stage2.params;
      const double h = std::max(1e-7 * std::abs(p[i]), 1e-10);
      p[i] += h;
      const double up = skewed_voigt_area(p[0], p[2], p[3]);
      p[i] -= 2 * h;
      const double dn = skewed_voigt_area(p[0], p[2], p[3]);
      g[i] = (up - dn) / (2 * h);
    }
    out.area_sigma = std::sqrt(std::max(0.0, double(g.transpose() * stage2.covariance * g)));
  }
  out.low_confidence = detail::count_candidate_peaks(ys, 0.4) > 1;
  return out;
}

// ---------------------------------------------------------------------------
// Pulsed g2 background correction.

struct G2Setup {
  double n1_hz, n2_hz;  // detector count rates including background
  double b1_hz, b2_hz;  // background-only rates
  double bin_s;         // histogram bin / peak-area window width d
  double period_s;      // pulse period theta
  double total_s;       // total measurement time T
};

/// Background counts per bin, B = (B1 N2 + B2 N1 - B1 B2) d T.
inline double g2_background_per_bin(const G2Setup& s) {
  return (s.b1_hz * s.n2_hz + s.b2_hz * s.n1_hz - s.b1_hz * s.b2_hz) * s.bin_s * s.total_s;
}

/// Peak-area normalization, N = (N1-B1)(N2-B2) theta T.
inline double g2_normalization(const G2Setup& s) {
  return (s.n1_hz - s.b1_hz) * (s.n2_hz - s.b2_hz) * s.period_s * s.total_s;
}

/// Corrected g2 per peak: (area_n - B) / N. The window over which each
/// area was integrated must equal bin_s for the background term to match.
inline std::map<int, double> g2_correct(const std::map<int, double>& peak_areas,
                                        const G2Setup& s) {
  if (!(s.n1_hz > s.b1_hz && s.b1_hz >= 0.0 && s.n2_hz > s.b2_hz && s.b2_hz >= 0.0))
    throw domain_error("g2_correct: require N > B >= 0 on both detectors");
  if (!(s.bin_s > 0.0 && s.period_s > 0.0 && s.total_s > 0.0))
    throw domain_error("g2_correct: bin, period and total time must be > 0");
  const double norm = g2_normalization(s);
  if (!(norm > 0.0)) throw domain_error("g2_correct: normalization must be > 0");
  const double bkg = g2_background_per_bin(s);
  std::map<int, double> out;
  for (const auto& [n, area] : peak_areas) out[n] = (area - bkg) / norm;
  return out;
}

// ---------------------------------------------------------------------------
// Hole-burning saturation fit.

struct HoleBurnResult {
  double delta_nu_hom = 0.0;  // low-power homogeneous linewidth (hole width / 2 at P->0)
  double p_sat = 0.0;
  double delta_nu_sigma = 0.0;
  double p_sat_sigma = 0.0;
  bool unbounded_saturation = false;  // widths independent of power
  FitResult fit;
};

/// Fit hole FWHM vs total optical power to the saturation law and report the
/// extrapolated low-power homogeneous linewidth.
inline HoleBurnResult fit_holeburning(const std::vector<double>& total_power,
                                      const std::vector<double>& hole_width) {
  if (total_power.size() != hole_width.size())
    throw domain_error("fit_holeburning: size mismatch");
  std::vector<double> distinct = total_power;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3)
    throw domain_error("fit_holeburning: need >= 3 distinct powers, got " +
                       std::to_string(distinct.size()));

  const double pmax = *std::max_element(total_power.begin(), total_power.end());
  auto init = initial_guess(LineShapeKind::HoleWidth, total_power, hole_width);
  FitBounds b = default_bounds(LineShapeKind::HoleWidth);
  b.upper[1] = 1e8 * pmax;
  std::vector<double> unit_sigma(total_power.size(), 1.0);
  FitResult fit = nls_fit(LineShapeKind::HoleWidth, total_power, hole_width, unit_sigma, init, b);

  HoleBurnResult out;
  out.fit = fit;
  out.delta_nu_hom = fit.params[0];
  out.p_sat = fit.params[1];
  out.delta_nu_sigma = fit.param_sigma[0];
  out.p_sat_sigma = fit.param_sigma[1];
  out.unbounded_saturation = fit.params[1] > 1e4 * pmax;
  return out;
}

// ---------------------------------------------------------------------------
// Dark-state lifetime from shelving areas.

struct DarkLifetimeResult {
  double tau_ns = 0.0;
  double tau_sigma_ns = 0.0;
  bool unbounded = false;        // flat areas: no decay resolvable
  bool low_confidence = false;   // areas trend upward beyond noise
  FitResult fit;
};

/// Single-exponential fit of delayed-peak area vs electrical pulse width.
/// Two exact points solve the exponential directly.
inline DarkLifetimeResult fit_dark_lifetime(const std::vector<double>& pulse_width_ns,
                                            const std::vector<double>& second_peak_area) {
  if (pulse_width_ns.size() != second_peak_area.size())
    throw domain_error("fit_dark_lifetime: size mismatch");
  const std::size_t n = pulse_width_ns.size();
  if (n < 2) throw domain_error("fit_dark_lifetime: need >= 2 pulse widths");

  DarkLifetimeResult out;
  const double span = *std::max_element(pulse_width_ns.begin(), pulse_width_ns.end()) -
                      *std::min_element(pulse_width_ns.begin(), pulse_width_ns.end());

  if (n == 2) {
    const double a0 = second_peak_area[0], a1 = second_peak_area[1];
    if (a0 > 0 && a1 > 0 && a0 != a1) {
      out.tau_ns = (pulse_width_ns[1] - pulse_width_ns[0]) / std::log(a0 / a1);
      out.low_confidence = out.tau_ns < 0;
      out.tau_ns = std::abs(out.tau_ns);
      return out;
    }
    throw domain_error("fit_dark_lifetime: two-point data must be positive and distinct");
  }

  auto init = initial_guess(LineShapeKind::SingleExp, pulse_width_ns, second_peak_area);
  FitBounds b = default_bounds(LineShapeKind::SingleExp);
  b.upper[1] = 1e6 * std::max(span, 1.0);
  std::vector<double> unit_sigma(n, 1.0);
  FitResult fit;
  try {
    fit = nls_fit(LineShapeKind::SingleExp, pulse_width_ns, second_peak_area, unit_sigma, init, b);
  } catch (const fit_error& e) {
    fit = e.best_so_far;  // flat data: keep the best-so-far and flag below
  }
  out.fit = fit;
  out.tau_ns = fit.params[1];
  out.tau_sigma_ns = fit.param_sigma[1];
  out.unbounded = fit.params[1] > 50.0 * span;

  // Upward trend beyond noise: positive weighted slope of log-area.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (second_peak_area[i] > 0) {
      const double ly = std::log(second_peak_area[i]);
      sx += pulse_width_ns[i]; sy += ly;
      sxx += pulse_width_ns[i] * pulse_width_ns[i]; sxy += pulse_width_ns[i] * ly;
      ++m;
    }
  }
  if (m >= 2) {
    const double slope = (m * sxy - sx * sy) / std::max(m * sxx - sx * sx, 1e-30);
    if (slope > 0) out.low_confidence = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// 10-90% rise time.

/// Linear-interpolated 10%/90% crossing-time difference on a step response.
/// Baseline is the first sample; the plateau is the mean of the last tenth,
/// which must have settled (a still-rising trace has no plateau).
inline double rise_time_10_90(const std::vector<double>& time_ns,
                              const std::vector<double>& signal) {
  if (time_ns.size() != signal.size() || time_ns.size() < 4)
    throw domain_error("rise_time_10_90: need >= 4 samples");
  const std::size_t n = signal.size();
  const double baseline = signal.front();
  const std::size_t tail = std::max<std::size_t>(3, n / 10);
  double plateau = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) plateau += signal[i];
  plateau /= static_cast<double>(tail);
  if (!(plateau > baseline)) throw domain_error("rise_time_10_90: no rise above baseline");
  if (n >= 2 * tail) {
    double previous = 0.0;
    for (std::size_t i = n - 2 * tail; i < n - tail; ++i) previous += signal[i];
    previous /= static_cast<double>(tail);
    if (std::abs(plateau - previous) > 0.05 * (plateau - baseline))
      throw domain_error("rise_time_10_90: plateau not reached (trace still settling)");
  }

  auto crossing = [&](double level) {
    for (std::size_t i = 1; i < n; ++i) {
      if (signal[i - 1] < level && signal[i] >= level) {
        const double f = (level - signal[i - 1]) / (signal[i] - signal[i - 1]);
        return time_ns[i - 1] + f * (time_ns[i] - time_ns[i - 1]);
      }
    }
    throw domain_error("rise_time_10_90: trace does not span the 10-90% levels");
  };
  const double y10 = baseline + 0.10 * (plateau - baseline);
  const double y90 = baseline + 0.90 * (plateau - baseline);
  return crossing(y90) - crossing(y10);
}

}  // namespace starkplan
