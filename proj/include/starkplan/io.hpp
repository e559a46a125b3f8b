#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "starkplan/data.hpp"
#include "starkplan/emitters.hpp"
#include "starkplan/errors.hpp"
#include "starkplan/fit.hpp"
#include "starkplan/planner.hpp"

// JSON interchange: the emitters.json document, fit-result summaries and
// tuning plans. Parsing is strict: unknown keys are rejected so that typos in
// hand-edited device files fail loudly.

namespace starkplan {

namespace detail {

using nlohmann::json;

inline void require_keys(const json& j, const std::set<std::string>& allowed,
                         const std::set<std::string>& required, const std::string& where) {
  if (!j.is_object()) throw io_error(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw io_error(where + ": unknown key '" + key + "'");
  }
  for (const auto& key : required) {
    if (!j.contains(key)) throw io_error(where + ": missing key '" + key + "'");
  }
}

}  // namespace detail

inline nlohmann::json quench_to_json(const QuenchModel& q) {
  using nlohmann::json;
  if (const auto* s = std::get_if<SigmoidQuench>(&q)) {
    return json{{"kind", "sigmoid"}, {"v_switch_v", s->v_switch_v}, {"width_v", s->width_v}};
  }
  if (const auto* f = std::get_if<FermiDiracQuench>(&q)) {
    return json{{"kind", "fermi_dirac"},
                {"level_offset_mev", f->level_offset_mev},
                {"fermi_slope_mev_per_v", f->fermi_slope_mev_per_v},
                {"temperature_k", f->temperature_k}};
  }
  const auto& fi = std::get<FieldIonizationQuench>(q);
  return json{{"kind", "field_ionization"},
              {"capture_rate_hz", fi.capture_rate_hz},
              {"ionization_prefactor_hz", fi.ionization_prefactor_hz},
              {"field_scale_mv_per_m", fi.field_scale_mv_per_m},
              {"field_offset_mv_per_m", fi.field_offset_mv_per_m},
              {"field_slope_mv_per_m_per_v", fi.field_slope_mv_per_m_per_v}};
}

inline QuenchModel quench_from_json(const nlohmann::json& j, const std::string& where) {
  using detail::require_keys;
  if (!j.contains("kind")) throw io_error(where + ".quench: missing key 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sigmoid") {
    require_keys(j, {"kind", "v_switch_v", "width_v"}, {"kind", "v_switch_v", "width_v"},
                 where + ".quench");
    return SigmoidQuench{j.at("v_switch_v").get<double>(), j.at("width_v").get<double>()};
  }
  if (kind == "fermi_dirac") {
    require_keys(j, {"kind", "level_offset_mev", "fermi_slope_mev_per_v", "temperature_k"},
                 {"kind", "level_offset_mev", "fermi_slope_mev_per_v", "temperature_k"},
                 where + ".quench");
    return FermiDiracQuench{j.at("level_offset_mev").get<double>(),
                            j.at("fermi_slope_mev_per_v").get<double>(),
                            j.at("temperature_k").get<double>()};
  }
  if (kind == "field_ionization") {
    require_keys(j,
                 {"kind", "capture_rate_hz", "ionization_prefactor_hz", "field_scale_mv_per_m",
                  "field_offset_mv_per_m", "field_slope_mv_per_m_per_v"},
                 {"kind", "capture_rate_hz", "ionization_prefactor_hz", "field_scale_mv_per_m",
                  "field_offset_mv_per_m", "field_slope_mv_per_m_per_v"},
                 where + ".quench");
    return FieldIonizationQuench{j.at("capture_rate_hz").get<double>(),
                                 j.at("ionization_prefactor_hz").get<double>(),
                                 j.at("field_scale_mv_per_m").get<double>(),
                                 j.at("field_offset_mv_per_m").get<double>(),
                                 j.at("field_slope_mv_per_m_per_v").get<double>()};
  }
  throw io_error(where + ".quench: unknown kind '" + kind + "'");
}

inline nlohmann::json emitter_to_json(const StarkResponse& r) {
  nlohmann::json j{{"id", r.id},
                   {"nu0_ghz", r.nu0_ghz},
                   {"gamma0_ghz", r.gamma0_ghz},
                   {"v_threshold_v", r.v_threshold_v},
                   {"alpha1_ghz_per_v", r.alpha1_ghz_per_v},
                   {"alpha2_ghz_per_v2", r.alpha2_ghz_per_v2},
                   {"gamma1_ghz_per_v", r.gamma1_ghz_per_v},
                   {"gamma2_ghz_per_v2", r.gamma2_ghz_per_v2},
                   {"v_min_v", r.v_min_v}};
  if (r.quench) j["quench"] = quench_to_json(*r.quench);
  return j;
}

inline StarkResponse emitter_from_json(const nlohmann::json& j, const std::string& where) {
  detail::require_keys(j,
                       {"id", "nu0_ghz", "gamma0_ghz", "v_threshold_v", "alpha1_ghz_per_v",
                        "alpha2_ghz_per_v2", "gamma1_ghz_per_v", "gamma2_ghz_per_v2", "v_min_v",
                        "quench"},
                       {"id", "nu0_ghz", "gamma0_ghz", "v_threshold_v", "alpha1_ghz_per_v",
                        "gamma1_ghz_per_v", "v_min_v"},
                       where);
  StarkResponse r;
  r.id = j.at("id").get<std::string>();
  r.nu0_ghz = j.at("nu0_ghz").get<double>();
  r.gamma0_ghz = j.at("gamma0_ghz").get<double>();
  r.v_threshold_v = j.at("v_threshold_v").get<double>();
  r.alpha1_ghz_per_v = j.at("alpha1_ghz_per_v").get<double>();
  r.alpha2_ghz_per_v2 = j.value("alpha2_ghz_per_v2", 0.0);
  r.gamma1_ghz_per_v = j.at("gamma1_ghz_per_v").get<double>();
  r.gamma2_ghz_per_v2 = j.value("gamma2_ghz_per_v2", 0.0);
  r.v_min_v = j.at("v_min_v").get<double>();
  if (j.contains("quench")) r.quench = quench_from_json(j.at("quench"), where);
  r.validate();
  return r;
}

inline nlohmann::json cavity_to_json(const CavityModel& c) {
  return {{"nu_cav_ghz", c.nu_cav_ghz}, {"q_factor", c.q_factor},
          {"purcell_max", c.purcell_max}, {"eta_qe", c.eta_qe},
          {"eta_dw", c.eta_dw},           {"tau0_us", c.tau0_us}};
}

inline CavityModel cavity_from_json(const nlohmann::json& j, const std::string& where) {
  detail::require_keys(j, {"nu_cav_ghz", "q_factor", "purcell_max", "eta_qe", "eta_dw", "tau0_us"},
                       {"nu_cav_ghz", "q_factor"}, where);
  CavityModel c;
  c.nu_cav_ghz = j.at("nu_cav_ghz").get<double>();
  c.q_factor = j.at("q_factor").get<double>();
  c.purcell_max = j.value("purcell_max", 1.0);
  c.eta_qe = j.value("eta_qe", 1.0);
  c.eta_dw = j.value("eta_dw", 1.0);
  c.tau0_us = j.value("tau0_us", 1.0);
  return c;
}

struct EmitterDocument {
  std::vector<StarkResponse> emitters;
  std::optional<CavityModel> cavity;
};

inline EmitterDocument load_emitters_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw io_error(path + ": " + e.what());
  }
  detail::require_keys(j, {"emitters", "cavity"}, {"emitters"}, path);
  EmitterDocument doc;
  int i = 0;
  for (const auto& je : j.at("emitters")) {
    doc.emitters.push_back(emitter_from_json(je, path + ".emitters[" + std::to_string(i) + "]"));
    ++i;
  }
  if (j.contains("cavity")) doc.cavity = cavity_from_json(j.at("cavity"), path + ".cavity");
  return doc;
}

inline std::string format_emitters_json(const EmitterDocument& doc) {
  nlohmann::json j;
  j["emitters"] = nlohmann::json::array();
  for (const auto& e : doc.emitters) j["emitters"].push_back(emitter_to_json(e));
  if (doc.cavity) j["cavity"] = cavity_to_json(*doc.cavity);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Fit results and plans.

inline const char* lineshape_name(LineShapeKind k) {
  switch (k) {
    case LineShapeKind::GaussLorentzProduct: return "gauss_lorentz";
    case LineShapeKind::Voigt: return "voigt";
    case LineShapeKind::SkewedVoigt: return "skewed_voigt";
    case LineShapeKind::Sigmoid: return "sigmoid";
    case LineShapeKind::CavityComposite: return "cavity";
    case LineShapeKind::SingleExp: return "single_exp";
    case LineShapeKind::DoubleDecay: return "double_decay";
    case LineShapeKind::HoleWidth: return "hole_width";
  }
  return "?";
}

inline std::optional<LineShapeKind> lineshape_from_name(const std::string& name) {
  for (LineShapeKind k :
       {LineShapeKind::GaussLorentzProduct, LineShapeKind::Voigt, LineShapeKind::SkewedVoigt,
        LineShapeKind::Sigmoid, LineShapeKind::CavityComposite, LineShapeKind::SingleExp,
        LineShapeKind::DoubleDecay, LineShapeKind::HoleWidth}) {
    if (name == lineshape_name(k)) return k;
  }
  return std::nullopt;
}

/// Fit summary with named parameters and 1-sigma errors.
inline nlohmann::json fit_result_to_json(const FitResult& f) {
  nlohmann::json params = nlohmann::json::array();
  const auto& names = parameter_names(f.model);
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    params.push_back({{"name", names[i]},
                      {"value", f.params[i]},
                      {"sigma", f.param_sigma[i]},
                      {"fixed", static_cast<bool>(f.fixed[i])}});
  }
  return {{"model", lineshape_name(f.model)},
          {"converged", f.converged},
          {"n_points", f.n_points},
          {"n_free", f.n_free},
          {"residual_norm", f.residual_norm},
          {"aic", f.aic},
          {"parameters", params}};
}

inline nlohmann::json plan_to_json(const TuningPlan& plan) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : plan.pairs) {
    pairs.push_back({{"a", p.a},
                     {"b", p.b},
                     {"target_ghz", p.target_ghz},
                     {"v_a", p.v_a},
                     {"v_b", p.v_b},
                     {"p_exc", p.p_exc},
                     {"quench_a", p.quench_a},
                     {"quench_b", p.quench_b}});
  }
  return {{"pairs", pairs}, {"unpaired", plan.unpaired}, {"objective_value", plan.objective_value}};
}

}  // namespace starkplan
