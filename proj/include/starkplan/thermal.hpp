#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "starkplan/constants.hpp"
#include "starkplan/errors.hpp"

// Cryogenic Joule-heating audit: Debye/Casimir solid conduction, rarefied
// helium gas cooling across the Knudsen transition regime, and the bulk
// T^4 thermal-shift law, plus the charge-trap spectral-diffusion model.

namespace starkplan::thermal {

// ---------------------------------------------------------------------------
// Charge-trap spectral diffusion.

/// RMS field of a point charge at distance r in a dielectric, V/m.
inline double trap_field_v_per_m(double charge_e, double distance_nm, double epsilon_r) {
  if (distance_nm <= 0.0) throw domain_error("trap field: distance must be > 0");
  const double r = distance_nm * 1e-9;
  return charge_e * constants::elementary_charge_c /
         (4.0 * constants::pi * constants::vacuum_permittivity_f_per_m * epsilon_r * r * r);
}

/// Observed FWHM of a Lorentzian line (minimum width gamma1) wandering over
/// the Gaussian envelope produced by a fluctuating field F_rms coupling
/// through d(nu)/dE = dmu: gamma1/2 + sqrt((gamma1/2)^2 + 8 ln2 (F dmu)^2).
inline double sd_linewidth_ghz(double gamma1_ghz, double f_rms_v_per_m,
                               double dmu_hz_m_per_v) {
  const double g2 = 0.5 * gamma1_ghz;
  const double trap = f_rms_v_per_m * dmu_hz_m_per_v * 1e-9;  // GHz
  return g2 + std::sqrt(g2 * g2 + 8.0 * constants::ln2 * trap * trap);
}

inline double sd_linewidth_from_trap_ghz(double gamma1_ghz, double charge_e, double distance_nm,
                                         double epsilon_r, double dmu_hz_m_per_v) {
  return sd_linewidth_ghz(gamma1_ghz, trap_field_v_per_m(charge_e, distance_nm, epsilon_r),
                          dmu_hz_m_per_v);
}

// ---------------------------------------------------------------------------
// Geometry and material inputs for the heat-transfer chain.

struct ThermalGeometry {
  double cross_section_um2 = 0.09;
  double length_um = 30.0;
  double surface_area_um2 = 25.6;
  double r_in_um = 0.15;       // half the characteristic dimension
  double r_out_mm = 42.5;      // cryostat interior radius
  double sink_temperature_k = 2.5;
  double gas_pressure_pa = 1800.0;
  double dissipated_power_nw = 4.0;

  double characteristic_dim_um() const { return std::sqrt(cross_section_um2); }

  void validate() const {
    if (cross_section_um2 <= 0 || length_um <= 0 || surface_area_um2 <= 0 || r_in_um <= 0 ||
        r_out_mm <= 0 || sink_temperature_k <= 0 || gas_pressure_pa <= 0)
      throw domain_error("thermal geometry: all dimensions must be > 0");
    if (r_out_mm * 1e3 <= r_in_um) throw domain_error("thermal geometry: r_out must exceed r_in");
  }
};

struct MaterialConstants {
  double debye_temperature_k = 645.0;       // silicon
  double atomic_density_per_m3 = 5e28;      // silicon
  double sound_velocity_m_per_s = 6400.0;   // silicon
  double phonon_boundary_factor = 1.115;    // D_eff = factor * sqrt(cross section)
  double gas_kinetic_diameter_m = 2.55e-10; // helium
  double gas_molar_mass_kg = 4.002602e-3;   // helium
  double accommodation = 0.5;
  double heat_capacity_ratio = 5.0 / 3.0;   // monoatomic gas
  double viscosity_ref_pa_s = 0.9825e-6;    // helium at the reference temperature
  double viscosity_ref_t_k = 3.5;
  double viscosity_exponent = 0.647;

  void validate() const {
    if (debye_temperature_k <= 0 || atomic_density_per_m3 <= 0 || sound_velocity_m_per_s <= 0 ||
        gas_kinetic_diameter_m <= 0 || gas_molar_mass_kg <= 0 || viscosity_ref_pa_s <= 0)
      throw domain_error("material constants must be > 0");
    if (!(accommodation > 0.0 && accommodation <= 1.0))
      throw domain_error("accommodation must be in (0, 1]");
  }
};

// ---------------------------------------------------------------------------
// Solid conduction.

/// Debye phonon heat capacity (12 pi^4/5) N k_B (T/T_D)^3, J/(m^3 K).
/// Valid in the low-temperature regime T << T_D.
inline double debye_heat_capacity(double temperature_k, const MaterialConstants& m) {
  return 12.0 * std::pow(constants::pi, 4) / 5.0 * m.atomic_density_per_m3 *
         constants::k_boltzmann_j_per_k *
         std::pow(temperature_k / m.debye_temperature_k, 3);
}

/// Whether the Debye T^3 form is being used inside its validity window.
inline bool debye_low_t_valid(double temperature_k, const MaterialConstants& m) {
  return temperature_k < m.debye_temperature_k / 10.0;
}

/// Boundary-limited (Casimir) thermal conductivity (1/3) Cv v_s D_eff, W/(m K).
inline double casimir_conductivity(double heat_capacity_j_m3k, double sound_velocity_m_per_s,
                                   double d_eff_um) {
  return heat_capacity_j_m3k * sound_velocity_m_per_s * d_eff_um * 1e-6 / 3.0;
}

/// Thermal resistance of the waveguide to the sink: L_eff/(kappa sigma)
/// with L_eff = L/2 (heat source at the centre), K/W.
inline double solid_thermal_resistance(const ThermalGeometry& g, double kappa_w_per_mk) {
  const double l_eff = 0.5 * g.length_um * 1e-6;
  return l_eff / (kappa_w_per_mk * g.cross_section_um2 * 1e-12);
}

// ---------------------------------------------------------------------------
// Gas cooling.

/// Ideal-gas mean free path k T / (sqrt2 pi d^2 p), in nm.
inline double gas_mean_free_path_nm(double temperature_k, double pressure_pa,
                                    double kinetic_diameter_m) {
  if (pressure_pa <= 0.0) throw domain_error("mean free path: pressure must be > 0");
  return constants::k_boltzmann_j_per_k * temperature_k /
         (std::sqrt(2.0) * constants::pi * kinetic_diameter_m * kinetic_diameter_m *
          pressure_pa) *
         1e9;
}

enum class FlowRegime { Continuum, Transition, FreeMolecular };

inline double knudsen_number(double mean_free_path_nm, double characteristic_dim_um) {
  return mean_free_path_nm * 1e-9 / (characteristic_dim_um * 1e-6);
}

/// Regime thresholds 0.01 and 10, as conventionally printed.
inline FlowRegime classify_knudsen(double kn) {
  if (kn < 0.01) return FlowRegime::Continuum;
  if (kn <= 10.0) return FlowRegime::Transition;
  return FlowRegime::FreeMolecular;
}

inline const char* regime_name(FlowRegime r) {
  switch (r) {
    case FlowRegime::Continuum: return "continuum";
    case FlowRegime::Transition: return "transition";
    case FlowRegime::FreeMolecular: return "free-molecular";
  }
  return "?";
}

struct GasCooling {
  double h_fm_w_m2k;    // ballistic free-molecular heat transfer coefficient
  double h_cont_w_m2k;  // continuum convection coefficient (half-cylinder)
  double h_eff_w_m2k;   // series combination
  double r_gas_k_per_w; // thermal resistance over the wetted surface
  double kappa_gas_w_per_mk;
  double viscosity_pa_s;
};

/// Helium-gas heat removal: ballistic free-molecular coefficient, continuum
/// coefficient for a half-cylinder in a large enclosure, and their series
/// (inverse-sum) combination.
inline GasCooling gas_cooling(double temperature_k, double pressure_pa,
                              const ThermalGeometry& g, const MaterialConstants& m) {
  g.validate();
  m.validate();
  const double gamma = m.heat_capacity_ratio;
  GasCooling out{};
  out.h_fm_w_m2k = m.accommodation * (gamma + 1.0) / (gamma - 1.0) *
                   std::sqrt(constants::gas_constant_j_per_mol_k /
                             (8.0 * constants::pi * m.gas_molar_mass_kg * temperature_k)) *
                   pressure_pa;
  out.viscosity_pa_s =
      m.viscosity_ref_pa_s * std::pow(temperature_k / m.viscosity_ref_t_k, m.viscosity_exponent);
  out.kappa_gas_w_per_mk = 15.0 * constants::gas_constant_j_per_mol_k * out.viscosity_pa_s /
                           (4.0 * m.gas_molar_mass_kg);
  const double r_in = g.r_in_um * 1e-6;
  const double r_out = g.r_out_mm * 1e-3;
  out.h_cont_w_m2k = 0.5 * out.kappa_gas_w_per_mk / (r_in * std::log(r_out / r_in));
  out.h_eff_w_m2k = 1.0 / (1.0 / out.h_fm_w_m2k + 1.0 / out.h_cont_w_m2k);
  out.r_gas_k_per_w = 1.0 / (out.h_eff_w_m2k * g.surface_area_um2 * 1e-12);
  return out;
}

struct TemperatureRise {
  double solid_only_k;
  double gas_only_k;
  double combined_k;  // parallel thermal resistances
};

inline TemperatureRise temperature_rise(double power_nw, double r_solid_k_per_w,
                                        double r_gas_k_per_w) {
  if (power_nw < 0.0) throw domain_error("temperature_rise: power must be >= 0");
  const double p = power_nw * 1e-9;
  const double r_par = 1.0 / (1.0 / r_solid_k_per_w + 1.0 / r_gas_k_per_w);
  return {p * r_solid_k_per_w, p * r_gas_k_per_w, p * r_par};
}

// ---------------------------------------------------------------------------
// Bulk thermal-shift law.

/// Temperature at which the T^4 law A(T^4 - T0^4) produces the requested
/// shift from base temperature T0. Exact inverse of the forward law.
inline double thermal_shift_temperature_k(double target_shift_ghz, double coeff_a_mhz_per_k4,
                                          double base_temperature_k) {
  if (coeff_a_mhz_per_k4 == 0.0) throw domain_error("thermal shift: coefficient must be nonzero");
  const double ratio = target_shift_ghz * 1e3 / coeff_a_mhz_per_k4;  // K^4
  if (target_shift_ghz != 0.0 && ratio <= 0.0)
    throw domain_error("thermal shift: shift and coefficient have inconsistent signs");
  const double t4 = std::pow(base_temperature_k, 4) + ratio;
  return std::pow(t4, 0.25);
}

inline double thermal_shift_forward_ghz(double temperature_k, double coeff_a_mhz_per_k4,
                                        double base_temperature_k) {
  return coeff_a_mhz_per_k4 * 1e-3 *
         (std::pow(temperature_k, 4) - std::pow(base_temperature_k, 4));
}

// ---------------------------------------------------------------------------
// End-to-end audit.

struct AuditRow {
  std::string name;
  std::string formula;
  double value;
  double reference;  // embedded expected value for --verify-paper
  std::string unit;
  bool within(double rel_tol) const {
    return std::abs(value - reference) <= rel_tol * std::abs(reference);
  }
};

struct AuditReport {
  ThermalGeometry geometry;
  MaterialConstants material;
  std::vector<AuditRow> rows;
  bool all_within(double rel_tol) const {
    for (const auto& r : rows)
      if (!r.within(rel_tol)) return false;
    return true;
  }
};

/// Run the complete heat-transfer chain from raw constants and tabulate every
/// intermediate against the embedded reference values.
inline AuditReport run_thermal_audit(const ThermalGeometry& g = {},
                                     const MaterialConstants& m = {}) {
  g.validate();
  m.validate();
  AuditReport rep{g, m, {}};
  const double t = g.sink_temperature_k;

  const double cv = debye_heat_capacity(t, m);
  const double d_eff = m.phonon_boundary_factor * g.characteristic_dim_um();
  const double kappa_si = casimir_conductivity(cv, m.sound_velocity_m_per_s, d_eff);
  const double r_solid = solid_thermal_resistance(g, kappa_si);
  const double mfp = gas_mean_free_path_nm(t, g.gas_pressure_pa, m.gas_kinetic_diameter_m);
  const double kn = knudsen_number(mfp, g.characteristic_dim_um());
  const GasCooling gas = gas_cooling(t, g.gas_pressure_pa, g, m);
  const TemperatureRise rise =
      temperature_rise(g.dissipated_power_nw, r_solid, gas.r_gas_k_per_w);

  rep.rows = {
      {"heat_capacity", "(12 pi^4/5) N k_B (T/T_D)^3", cv, 9.4, "J/(m^3 K)"},
      {"kappa_si", "(1/3) Cv v_s D_eff", kappa_si, 0.0067, "W/(m K)"},
      {"r_solid", "(L/2)/(kappa sigma)", r_solid, 2.49e10, "K/W"},
      {"dT_solid", "P R_solid", rise.solid_only_k, 99.0, "K"},
      {"mean_free_path", "k T/(sqrt2 pi d^2 p)", mfp, 66.0, "nm"},
      {"knudsen", "Lambda/L_c", kn, 0.22, ""},
      {"h_fm", "alpha (g+1)/(g-1) sqrt(R/(8 pi M T)) p", gas.h_fm_w_m2k, 20699.0, "W/(m^2 K)"},
      {"kappa_gas", "15 R eta/(4 M)", gas.kappa_gas_w_per_mk, 0.0061, "W/(m K)"},
      {"h_cont", "kappa/(2 r_in ln(r_out/r_in))", gas.h_cont_w_m2k, 1619.0, "W/(m^2 K)"},
      {"h_eff", "(h_fm^-1 + h_cont^-1)^-1", gas.h_eff_w_m2k, 1501.0, "W/(m^2 K)"},
      {"dT_combined", "P (R_solid || R_gas)", rise.combined_k, 0.1, "K"},
  };
  return rep;
}

/// Step-by-step audit table. With verify=true each row is marked against its
/// embedded reference at the given relative tolerance.
inline std::string render_audit_table(const AuditReport& rep, bool verify,
                                      double rel_tol = 0.05) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "%-16s %-38s %13s %13s %-10s%s\n", "quantity", "formula",
                "value", "reference", "unit", verify ? "  check" : "");
  out += line;
  out += std::string(verify ? 102 : 95, '-') + "\n";
  for (const auto& r : rep.rows) {
    std::snprintf(line, sizeof line, "%-16s %-38s %13.5g %13.5g %-10s%s\n", r.name.c_str(),
                  r.formula.c_str(), r.value, r.reference, r.unit.c_str(),
                  verify ? (r.within(rel_tol) ? "  PASS" : "  FAIL") : "");
    out += line;
  }
  return out;
}

}  // namespace starkplan::thermal
