#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include "starkplan/constants.hpp"
#include "starkplan/errors.hpp"

// Forward models of a single emitter's bias response: frequency shift,
// linewidth broadening, charge-state quenching, and the cavity Purcell
// lifetime modification, plus ionization/Zeeman auxiliaries. All functions
// are pure; all types are immutable value types.

namespace starkplan {

// ---------------------------------------------------------------------------
// Quench models: bias -> neutral (optically active) charge-state occupancy.

/// Phenomenological sigmoid A(V) = 1 / (1 + exp((v_switch - v)/width)).
struct SigmoidQuench {
  double v_switch_v = 0.0;
  double width_v = 1.0;
};

/// Charge-state conversion: neutral population follows a Fermi-Dirac factor
/// with the hole quasi-Fermi level moving linearly in bias.
struct FermiDiracQuench {
  double level_offset_mev = 0.0;       // E(0/-) - E_Fp at zero bias
  double fermi_slope_mev_per_v = 1.0;  // dE_Fp/dV
  double temperature_k = 2.5;
};

/// Field ionization: steady-state occupancy Gc / (Gc + Gi(V)) with a
/// tunnelling rate Gi = prefactor * exp(-field_scale / F(V)) and an affine
/// bias-to-field map F = field_offset + field_slope * V (MV/m).
struct FieldIonizationQuench {
  double capture_rate_hz = 1.0;
  double ionization_prefactor_hz = 1.0;
  double field_scale_mv_per_m = 1.0;
  double field_offset_mv_per_m = 0.0;
  double field_slope_mv_per_m_per_v = -0.05;
};

using QuenchModel = std::variant<SigmoidQuench, FermiDiracQuench, FieldIonizationQuench>;

/// Occupancy of the neutral charge state in [0, 1] at bias v.
inline double neutral_fraction(const QuenchModel& q, double bias_v) {
  struct Eval {
    double v;
    double operator()(const SigmoidQuench& s) const {
      if (s.width_v <= 0.0) throw domain_error("sigmoid quench: width must be > 0");
      return 1.0 / (1.0 + std::exp((s.v_switch_v - v) / s.width_v));
    }
    double operator()(const FermiDiracQuench& f) const {
      if (f.temperature_k <= 0.0) throw domain_error("fermi-dirac quench: temperature must be > 0");
      const double kt_mev = constants::k_boltzmann_j_per_k * f.temperature_k /
                            constants::elementary_charge_c * 1e3;
      const double x = (f.level_offset_mev - f.fermi_slope_mev_per_v * v) / kt_mev;
      // Large-|x| guard keeps the tails exact without overflow.
      if (x > 700.0) return 0.0;
      return 1.0 / (1.0 + std::exp(x));
    }
    double operator()(const FieldIonizationQuench& f) const {
      if (f.capture_rate_hz <= 0.0 || f.ionization_prefactor_hz <= 0.0 ||
          f.field_scale_mv_per_m <= 0.0) {
        throw domain_error("field-ionization quench: rates and field scale must be > 0");
      }
      const double field = f.field_offset_mv_per_m + f.field_slope_mv_per_m_per_v * v;
      if (field <= 0.0) return 1.0;  // no field, no tunnelling
      const double gi = f.ionization_prefactor_hz * std::exp(-f.field_scale_mv_per_m / field);
      return f.capture_rate_hz / (f.capture_rate_hz + gi);
    }
  };
  return std::visit(Eval{bias_v}, q);
}

// ---------------------------------------------------------------------------
// Stark response of one centre.

/// Bias-response parameter set for one centre. The tuning/broadening laws are
/// polynomial in (v - v_threshold) past the threshold and flat above it; the
/// parameters are only valid on [v_min, 0] and evaluation outside that range
/// is an error, never an extrapolation.
struct StarkResponse {
  std::string id;
  double nu0_ghz = 0.0;     // zero-field ZPL frequency
  double gamma0_ghz = 1.0;  // zero-field FWHM linewidth
  double v_threshold_v = 0.0;
  double alpha1_ghz_per_v = 0.0;   // linear tuning rate
  double alpha2_ghz_per_v2 = 0.0;  // quadratic tuning rate (0 if AIC chose linear)
  double gamma1_ghz_per_v = 0.0;   // linear broadening rate
  double gamma2_ghz_per_v2 = 0.0;  // quadratic broadening rate
  double v_min_v = 0.0;            // most negative validated bias
  std::optional<QuenchModel> quench;

  void validate() const {
    if (gamma0_ghz <= 0.0) throw domain_error(id + ": gamma0 must be > 0");
    if (!(v_min_v <= v_threshold_v && v_threshold_v <= 0.0))
      throw domain_error(id + ": require v_min <= v_threshold <= 0");
  }
};

inline void check_bias_range(const StarkResponse& r, double v) {
  if (!(v >= r.v_min_v && v <= 0.0)) {
    throw domain_error(r.id + ": bias " + std::to_string(v) + " V outside validated range [" +
                       std::to_string(r.v_min_v) + ", 0] V");
  }
}

/// Frequency shift (GHz) at bias v: 0 above threshold, else
/// alpha1*(v-V_T) + alpha2*(v-V_T)^2.
inline double stark_shift_ghz(const StarkResponse& r, double bias_v) {
  check_bias_range(r, bias_v);
  if (bias_v >= r.v_threshold_v) return 0.0;
  const double x = bias_v - r.v_threshold_v;
  return r.alpha1_ghz_per_v * x + r.alpha2_ghz_per_v2 * x * x;
}

/// FWHM linewidth (GHz) at bias v: gamma0 above threshold, else
/// gamma0 + gamma1*(v-V_T) + gamma2*(v-V_T)^2. Negative broadening rates act
/// on negative (v-V_T), so the observed width grows with reverse bias.
inline double stark_linewidth_ghz(const StarkResponse& r, double bias_v) {
  check_bias_range(r, bias_v);
  if (bias_v >= r.v_threshold_v) return r.gamma0_ghz;
  const double x = bias_v - r.v_threshold_v;
  const double w = r.gamma0_ghz + r.gamma1_ghz_per_v * x + r.gamma2_ghz_per_v2 * x * x;
  if (w <= 0.0) {
    throw model_error(r.id + ": broadening law gives non-positive linewidth at " +
                      std::to_string(bias_v) + " V");
  }
  return w;
}

/// Neutral fraction at bias v; 1 when no quench model is attached.
inline double neutral_fraction(const StarkResponse& r, double bias_v) {
  check_bias_range(r, bias_v);
  return r.quench ? neutral_fraction(*r.quench, bias_v) : 1.0;
}

struct PeakProfile {
  double center_ghz;
  double fwhm_ghz;
  double relative_amplitude;  // 1 at zero bias; area scales with neutral fraction
};

/// Composite observable peak at bias v. The amplitude conserves area as the
/// line broadens (amplitude * fwhm = gamma0 * neutral_fraction).
inline PeakProfile peak_profile(const StarkResponse& r, double bias_v) {
  const double fwhm = stark_linewidth_ghz(r, bias_v);
  return {r.nu0_ghz + stark_shift_ghz(r, bias_v), fwhm,
          (r.gamma0_ghz / fwhm) * neutral_fraction(r, bias_v)};
}

/// Deepest red shift reachable within [v_min, v_threshold] (a non-positive GHz value).
inline double max_red_shift_ghz(const StarkResponse& r) {
  const double xlo = r.v_min_v - r.v_threshold_v;
  const double a1 = r.alpha1_ghz_per_v, a2 = r.alpha2_ghz_per_v2;
  double m = std::min(0.0, a1 * xlo + a2 * xlo * xlo);
  if (a2 != 0.0) {
    const double xv = -a1 / (2.0 * a2);
    if (xv > xlo && xv < 0.0) m = std::min(m, a1 * xv + a2 * xv * xv);
  }
  return m;
}

/// Inverse of the tuning law: bias in [v_min, v_threshold] producing the
/// requested (red) shift; the root closest to zero bias when the quadratic
/// yields two. Throws unreachable_error for blue targets or shifts beyond
/// the validated range.
inline double voltage_for_shift(const StarkResponse& r, double target_shift_ghz) {
  if (target_shift_ghz > 0.0) {
    throw unreachable_error(r.id + ": blue-shift targets are not tunable (red-shift-only device)");
  }
  const double xlo = r.v_min_v - r.v_threshold_v;  // most negative (v - V_T)
  const double a2 = r.alpha2_ghz_per_v2;
  const double a1 = r.alpha1_ghz_per_v;
  const double t = target_shift_ghz;

  double best_x = 1.0;  // sentinel: valid roots are <= 0
  auto consider = [&](double x) {
    if (x <= 1e-12 && x >= xlo - 1e-12) {
      const double xc = std::min(0.0, std::max(xlo, x));
      if (best_x > 0.0 || xc > best_x) best_x = xc;
    }
  };

  if (a2 == 0.0) {
    if (a1 != 0.0) consider(t / a1);
    else if (t == 0.0) consider(0.0);
  } else {
    const double disc = a1 * a1 + 4.0 * a2 * t;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      consider((-a1 + s) / (2.0 * a2));
      consider((-a1 - s) / (2.0 * a2));
    }
  }

  if (best_x > 0.0) {
    throw unreachable_error(r.id + ": shift " + std::to_string(t) +
                            " GHz unreachable (max red-shift " +
                            std::to_string(max_red_shift_ghz(r)) + " GHz)");
  }
  return r.v_threshold_v + best_x;
}

// ---------------------------------------------------------------------------
// Cavity model.

/// Cavity and emitter efficiency constants entering the Purcell lifetime law.
struct CavityModel {
  double nu_cav_ghz = 0.0;
  double q_factor = 1.0;
  double purcell_max = 1.0;  // F_P (ideal) or effective F~_P from a lifetime fit
  double eta_qe = 1.0;       // quantum efficiency
  double eta_dw = 1.0;       // Debye-Waller factor
  double tau0_us = 1.0;      // bulk lifetime

  double linewidth_ghz() const {
    if (q_factor <= 0.0) throw domain_error("cavity: Q must be > 0");
    return nu_cav_ghz / q_factor;
  }
};

/// Lorentzian Purcell enhancement P_cav(detuning); equals purcell_max on resonance.
inline double purcell_enhancement(const CavityModel& c, double detuning_ghz) {
  const double hw = 0.5 * c.linewidth_ghz();
  return c.purcell_max * hw * hw / (detuning_ghz * detuning_ghz + hw * hw);
}

/// Lifetime reduction tau0/tau(detuning) = 1 + eta_QE*eta_DW*(P_cav - 1).
/// Off resonance this tends to 1 - eta_QE*eta_DW (ZPL channel suppressed),
/// which is within a few percent of unity for realistic efficiencies.
inline double lifetime_ratio(const CavityModel& c, double detuning_ghz) {
  return 1.0 + c.eta_qe * c.eta_dw * (purcell_enhancement(c, detuning_ghz) - 1.0);
}

/// Ideal maximum Purcell factor (3/4pi^2)(lambda/n)^3 (Q/V).
inline double ideal_purcell(double wavelength_nm, double refractive_index, double q_factor,
                            double mode_volume_um3) {
  if (wavelength_nm <= 0.0 || refractive_index <= 0.0 || q_factor <= 0.0 ||
      mode_volume_um3 <= 0.0) {
    throw domain_error("ideal_purcell: all inputs must be > 0");
  }
  const double lam_um = wavelength_nm * 1e-3 / refractive_index;
  return 3.0 / (4.0 * constants::pi * constants::pi) * lam_um * lam_um * lam_um * q_factor /
         mode_volume_um3;
}

// ---------------------------------------------------------------------------
// Ionization and Zeeman auxiliaries.

struct IonizationParams {
  double binding_energy_mev;
  double spatial_extent_angstrom;
};

/// Critical field E_b / (e a*) needed to dissociate the bound hole, in MV/m.
inline double critical_ionization_field_mv_per_m(const IonizationParams& p) {
  if (p.binding_energy_mev <= 0.0 || p.spatial_extent_angstrom <= 0.0)
    throw domain_error("ionization params must be > 0");
  // meV / (e * Angstrom) -> V/m -> MV/m
  return p.binding_energy_mev * 1e-3 / (p.spatial_extent_angstrom * 1e-10) * 1e-6;
}

/// Zeeman splitting g * (mu_B/h) * B in GHz.
inline double zeeman_splitting_ghz(double g_factor, double b_field_t) {
  return g_factor * constants::bohr_magneton_ghz_per_t * b_field_t;
}

/// Exact inverse of zeeman_splitting_ghz.
inline double g_from_splitting(double splitting_ghz, double b_field_t) {
  if (b_field_t == 0.0) throw domain_error("g_from_splitting: zero magnetic field");
  return splitting_ghz / (constants::bohr_magneton_ghz_per_t * b_field_t);
}

}  // namespace starkplan
