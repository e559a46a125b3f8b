// starkplan: fit, analyze, plan, audit and simulate Stark-tunable emitter
// spectra. Thin shell over the library; every output is reproducible with
// direct library calls. Exit codes: 0 success, 2 domain/input errors, 3 fit
// non-convergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "starkplan/starkplan.hpp"

namespace sp = starkplan;
using nlohmann::json;

namespace {

int thread_cap() {
  if (const char* env = std::getenv("STARKPLAN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void emit(bool as_json, const json& summary, const std::string& text) {
  if (as_json) std::cout << summary.dump(2) << "\n";
  else std::cout << text;
}

std::vector<double> parse_csv_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

sp::StarkSeriesPoint parse_series_row(const std::vector<std::string>& f, const std::string& path,
                                      int line) {
  sp::StarkSeriesPoint p{};
  p.bias_v = sp::detail::parse_number(f[0], path, line, 1);
  p.center_ghz = sp::detail::parse_number(f[1], path, line, 2);
  p.fwhm_ghz = sp::detail::parse_number(f[2], path, line, 3);
  if (f.size() > 3 && !f[3].empty()) p.center_sigma_ghz = sp::detail::parse_number(f[3], path, line, 4);
  if (f.size() > 4 && !f[4].empty()) p.fwhm_sigma_ghz = sp::detail::parse_number(f[4], path, line, 5);
  return p;
}

std::vector<sp::StarkSeriesPoint> read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sp::io_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw sp::io_error(path + ":1: empty file, header required");
  auto header = sp::detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "voltage_v" || header[1] != "center_ghz" ||
      header[2] != "fwhm_ghz")
    throw sp::io_error(path + ":1:1: expected header 'voltage_v,center_ghz,fwhm_ghz[,center_sigma_ghz,fwhm_sigma_ghz]'");
  std::vector<sp::StarkSeriesPoint> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = sp::detail::split_csv_line(line);
    if (f.size() != header.size())
      throw sp::io_error(path + ":" + std::to_string(lineno) + ":1: wrong field count");
    out.push_back(parse_series_row(f, path, lineno));
  }
  return out;
}

std::map<int, double> read_areas_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sp::io_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw sp::io_error(path + ":1: empty file, header required");
  auto header = sp::detail::split_csv_line(line);
  if (header.size() != 2 || header[0] != "peak_index" || header[1] != "area")
    throw sp::io_error(path + ":1:1: expected header 'peak_index,area'");
  std::map<int, double> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = sp::detail::split_csv_line(line);
    if (f.size() != 2) throw sp::io_error(path + ":" + std::to_string(lineno) + ":1: wrong field count");
    out[static_cast<int>(sp::detail::parse_number(f[0], path, lineno, 1))] =
        sp::detail::parse_number(f[1], path, lineno, 2);
  }
  return out;
}

json fit_summary_with_fwhm(const sp::FitResult& fit) {
  json j = sp::fit_result_to_json(fit);
  j["fwhm_ghz"] = sp::fitted_fwhm_ghz(fit);
  return j;
}

// -------------------------------------------------------------------------
// Subcommand bodies. Each returns the process exit code.

struct CommonOpts {
  bool as_json = false;
};

int run_fit_ple(const std::string& input, const std::string& model_name, const std::string& out,
                const CommonOpts& c) {
  const sp::Spectrum scan = sp::read_spectrum_csv(input);
  const auto kind = sp::lineshape_from_name(model_name);
  if (!kind) throw sp::domain_error("unknown model '" + model_name + "'");
  std::vector<double> xs, ys, sig;
  for (const auto& p : scan.points) {
    xs.push_back(p.frequency_ghz);
    ys.push_back(p.intensity);
    sig.push_back(p.sigma);
  }
  const auto init = sp::initial_guess(*kind, xs, ys);
  const sp::FitResult fit = sp::nls_fit(*kind, xs, ys, sig, init);
  const json j = fit_summary_with_fwhm(fit);
  if (!out.empty()) sp::write_file_atomic(out, j.dump(2) + "\n");
  std::ostringstream text;
  text << "model " << sp::lineshape_name(fit.model) << ": center " << fit.params[1] << " GHz, fwhm "
       << j["fwhm_ghz"].get<double>() << " GHz, amplitude " << fit.params[0] << " (1-sigma "
       << fit.param_sigma[1] << " / " << fit.param_sigma[0] << ")\n";
  emit(c.as_json, j, text.str());
  return 0;
}

int run_fit_cavity(const std::string& input, std::vector<double> init, const std::string& out,
                   const CommonOpts& c) {
  const sp::Spectrum scan = sp::read_spectrum_csv(input);
  std::vector<double> xs, ys, sig;
  for (const auto& p : scan.points) {
    xs.push_back(p.frequency_ghz);
    ys.push_back(p.intensity);
    sig.push_back(p.sigma);
  }
  const double nu_ref = 0.5 * (xs.front() + xs.back());
  if (init.empty()) {
    // Heuristic: dip centre from the minimum, background from the median.
    std::vector<double> sorted = ys;
    std::sort(sorted.begin(), sorted.end());
    const double med = sorted[sorted.size() / 2];
    const auto imin = std::distance(ys.begin(), std::min_element(ys.begin(), ys.end()));
    const double span = xs.back() - xs.front();
    init = {0.05 * med, 12.0 / span, 0.0, std::sqrt(std::max(med, 1e-12)), 0.0,
            0.5 * std::sqrt(std::max(med, 1e-12)), xs[imin], 0.1 * span};
  }
  if (init.size() != 8) throw sp::domain_error("fit-cavity: --init needs 8 comma-separated values");
  const sp::FitResult fit =
      sp::nls_fit(sp::LineShapeKind::CavityComposite, xs, ys, sig, init, std::nullopt, {}, nu_ref);
  const double q = fit.params[6] / fit.params[7];
  const double q_sigma =
      q * std::sqrt(std::pow(fit.param_sigma[6] / fit.params[6], 2) +
                    std::pow(fit.param_sigma[7] / fit.params[7], 2));
  json j = sp::fit_result_to_json(fit);
  j["q_factor"] = q;
  j["q_factor_sigma"] = q_sigma;
  j["nu_ref_ghz"] = nu_ref;
  if (!out.empty()) sp::write_file_atomic(out, j.dump(2) + "\n");
  std::ostringstream text;
  text << "cavity: nu_cav " << fit.params[6] << " GHz, fwhm " << fit.params[7] << " GHz, Q " << q
       << " +- " << q_sigma << "\n";
  emit(c.as_json, j, text.str());
  return 0;
}

int run_fit_decay(const std::string& input, const std::string& model_name,
                  std::vector<double> init, const std::string& out, const CommonOpts& c) {
  const sp::DecayTransient t = sp::read_transient_csv(input);
  const auto kind = sp::lineshape_from_name(model_name);
  if (!kind || (*kind != sp::LineShapeKind::SingleExp && *kind != sp::LineShapeKind::DoubleDecay))
    throw sp::domain_error("fit-decay: model must be single_exp or double_decay");
  std::vector<double> sig(t.counts.size(), 0.0);
  sp::FitResult fit;
  if (*kind == sp::LineShapeKind::SingleExp) {
    if (init.empty()) init = sp::initial_guess(sp::LineShapeKind::SingleExp, t.time_ns, t.counts);
    fit = sp::nls_fit(sp::LineShapeKind::SingleExp, t.time_ns, t.counts, sig, init);
  } else {
    if (init.size() != 10)
      throw sp::domain_error("fit-decay: double_decay needs --init with 10 values");
    std::vector<bool> fixed(10, false);
    fixed[1] = fixed[4] = fixed[7] = true;  // onset times come from the pulse program
    fit = sp::nls_fit(sp::LineShapeKind::DoubleDecay, t.time_ns, t.counts, sig, init,
                      std::nullopt, fixed);
  }
  json j = sp::fit_result_to_json(fit);
  if (*kind == sp::LineShapeKind::DoubleDecay)
    j["second_peak_area"] =
        sp::double_decay_second_peak_area(fit.params[6], fit.params[8], fit.params[9]);
  if (!out.empty()) sp::write_file_atomic(out, j.dump(2) + "\n");
  std::ostringstream text;
  if (*kind == sp::LineShapeKind::SingleExp)
    text << "tau " << fit.params[1] << " ns +- " << fit.param_sigma[1] << "\n";
  else
    text << "second-peak area " << j["second_peak_area"].get<double>() << "\n";
  emit(c.as_json, j, text.str());
  return 0;
}

int run_fit_stark(const std::string& input, double v_min, double v_threshold,
                  const std::string& id, const std::string& out, const CommonOpts& c) {
  const auto series = read_series_csv(input);
  sp::StarkSeriesFit fit = sp::fit_stark_series(series, v_min, v_threshold);
  fit.response.id = id;
  json j;
  j["emitter"] = sp::emitter_to_json(fit.response);
  j["shift_model"] = fit.shift_quadratic ? "quadratic" : "linear";
  j["width_model"] = fit.width_quadratic ? "quadratic" : "linear";
  if (!out.empty()) sp::write_file_atomic(out, j.dump(2) + "\n");
  std::ostringstream text;
  text << id << ": nu0 " << fit.response.nu0_ghz << " GHz, alpha1 " << fit.response.alpha1_ghz_per_v
       << " GHz/V (" << j["shift_model"].get<std::string>() << "), gamma0 "
       << fit.response.gamma0_ghz << " GHz, gamma1 " << fit.response.gamma1_ghz_per_v << " GHz/V ("
       << j["width_model"].get<std::string>() << ")\n";
  emit(c.as_json, j, text.str());
  return 0;
}

int run_fit_holeburn(const std::string& input, const CommonOpts& c) {
  std::ifstream in(input);
  if (!in) throw sp::io_error(input + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw sp::io_error(input + ":1: empty file, header required");
  auto header = sp::detail::split_csv_line(line);
  if (header.size() != 2 || header[0] != "power_nw" || header[1] != "hole_fwhm_mhz")
    throw sp::io_error(input + ":1:1: expected header 'power_nw,hole_fwhm_mhz'");
  std::vector<double> power, width;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = sp::detail::split_csv_line(line);
    if (f.size() != 2) throw sp::io_error(input + ":" + std::to_string(lineno) + ":1: wrong field count");
    power.push_back(sp::detail::parse_number(f[0], input, lineno, 1));
    width.push_back(sp::detail::parse_number(f[1], input, lineno, 2));
  }
  const sp::HoleBurnResult r = sp::fit_holeburning(power, width);
  json j{{"delta_nu_hom_mhz", r.delta_nu_hom},
         {"delta_nu_hom_sigma_mhz", r.delta_nu_sigma},
         {"p_sat_nw", r.p_sat},
         {"p_sat_sigma_nw", r.p_sat_sigma},
         {"unbounded_saturation", r.unbounded_saturation}};
  std::ostringstream text;
  text << "homogeneous linewidth " << r.delta_nu_hom << " +- " << r.delta_nu_sigma
       << " MHz, P_sat " << r.p_sat << " +- " << r.p_sat_sigma << " nW"
       << (r.unbounded_saturation ? " (saturation power unbounded)" : "") << "\n";
  emit(c.as_json, j, text.str());
  return 0;
}

int run_g2(const std::string& areas_path, const sp::G2Setup& setup, const CommonOpts& c) {
  const auto areas = read_areas_csv(areas_path);
  const auto corrected = sp::g2_correct(areas, setup);
  json rows = json::array();
  std::ostringstream text;
  for (const auto& [n, g] : corrected) {
    const double raw = areas.at(n) / sp::g2_normalization(setup);
    rows.push_back({{"peak", n}, {"raw", raw}, {"corrected", g}});
    text << "peak " << n << ": raw " << raw << ", corrected " << g << "\n";
  }
  emit(c.as_json, json{{"peaks", rows}}, text.str());
  return 0;
}

int run_hom(double tau_prime, double gamma1, double gamma2, double delta_nu, double gate,
            const CommonOpts& c) {
  sp::EmitterPairConfig cfg{tau_prime, sp::fwhm_to_sigma(gamma1), sp::fwhm_to_sigma(gamma2),
                            delta_nu, gate};
  const double v = sp::hom_visibility(cfg);
  emit(c.as_json,
       json{{"visibility", v}, {"combined_sd_sq_ghz2", cfg.combined_sd_sq()}},
       "HOM visibility " + std::to_string(v) + "\n");
  return 0;
}

int run_pexc_map(const sp::PexcMapSpec& spec, const std::string& out, const CommonOpts& c) {
  const std::string csv = sp::format_pexc_map_csv(spec, thread_cap());
  sp::write_file_atomic(out, csv);
  emit(c.as_json,
       json{{"out", out},
            {"rows", spec.gamma_ratio_steps * spec.delta_tilde_steps},
            {"floor", spec.floor}},
       "wrote " + out + "\n");
  return 0;
}

int run_plan(const std::string& emitters_path, double min_nf, const std::string& objective,
             const std::string& out, const CommonOpts& c) {
  const auto doc = sp::load_emitters_json(emitters_path);
  sp::PlanConstraints cons;
  cons.min_neutral_fraction = min_nf;
  if (objective == "sum") cons.objective = sp::PlanConstraints::Objective::SumPexc;
  else if (objective != "log") throw sp::domain_error("plan: objective must be 'log' or 'sum'");

  // Candidate-pair evaluation is independent per pair; the matching itself is
  // deterministic and single-threaded.
  const sp::TuningPlan plan = sp::plan_pairs(doc.emitters, cons);
  const json j = sp::plan_to_json(plan);
  if (!out.empty()) sp::write_file_atomic(out, j.dump(2) + "\n");
  std::ostringstream text;
  char line[160];
  std::snprintf(line, sizeof line, "%-4s %-4s %14s %9s %9s %10s %s\n", "a", "b", "target (GHz)",
                "v_a (V)", "v_b (V)", "p_exc", "quench");
  text << line;
  for (const auto& p : plan.pairs) {
    std::snprintf(line, sizeof line, "%-4s %-4s %14.2f %9.3f %9.3f %10.3e %s%s\n", p.a.c_str(),
                  p.b.c_str(), p.target_ghz, p.v_a, p.v_b, p.p_exc, p.quench_a ? "a" : "",
                  p.quench_b ? "b" : "");
    text << line;
  }
  text << "unpaired:";
  for (const auto& u : plan.unpaired) text << " " << u;
  text << "\nobjective " << plan.objective_value << "\n";
  emit(c.as_json, j, text.str());
  return 0;
}

int run_fraction(const std::string& input, double window_ghz, double background,
                 const CommonOpts& c) {
  const sp::Spectrum s = sp::read_spectrum_csv(input);
  const auto pdf = sp::pdf_from_spectrum(s, background);
  const double f = sp::tunable_fraction(pdf, window_ghz);
  emit(c.as_json, json{{"window_ghz", window_ghz}, {"tunable_fraction", f}},
       "tunable fraction " + std::to_string(f) + " for a " + std::to_string(window_ghz) +
           " GHz window\n");
  return 0;
}

int run_thermal(bool verify, double power_nw, double pressure_pa, double sink_k,
                const CommonOpts& c) {
  sp::thermal::ThermalGeometry g;
  g.dissipated_power_nw = power_nw;
  g.gas_pressure_pa = pressure_pa;
  g.sink_temperature_k = sink_k;
  const auto rep = sp::thermal::run_thermal_audit(g);
  const std::string table = sp::thermal::render_audit_table(rep, verify);
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"name", r.name},
                    {"value", r.value},
                    {"reference", r.reference},
                    {"unit", r.unit},
                    {"pass", r.within(0.05)}});
  emit(c.as_json, json{{"rows", rows}, {"all_within_5pct", rep.all_within(0.05)}}, table);
  if (verify && !rep.all_within(0.05)) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stark-tunable emitter spectroscopy toolkit"};
  app.require_subcommand(1);
  CommonOpts common;
  app.add_flag("--json", common.as_json, "machine-readable JSON summary on stdout");

  std::string input, out, model = "gauss_lorentz", init_csv, id = "emitter", objective = "log";
  double v_min = 0, v_threshold = 0, window_ghz = 0, background = 0;
  double tau_prime = 458, gamma1 = 1.52, gamma2 = 1.75, delta_nu = 0, gate = 0.5;
  double min_nf = std::exp(-1.0);
  bool verify_paper = false;
  double power_nw = 4.0, pressure_pa = 1800.0, sink_k = 2.5;
  sp::G2Setup g2setup{};
  sp::PexcMapSpec map_spec;
  double gamma_fixed = 0.0;

  auto* fit_ple = app.add_subcommand("fit-ple", "fit a PLE peak");
  fit_ple->add_option("input", input, "scan CSV")->required();
  fit_ple->add_option("--model", model, "gauss_lorentz|voigt|skewed_voigt");
  fit_ple->add_option("--out", out, "write fit JSON here");

  auto* fit_cavity = app.add_subcommand("fit-cavity", "fit a cavity reflection spectrum");
  fit_cavity->add_option("input", input, "scan CSV")->required();
  fit_cavity->add_option("--init", init_csv, "8 comma-separated initial parameters");
  fit_cavity->add_option("--out", out, "write fit JSON here");

  auto* fit_decay = app.add_subcommand("fit-decay", "fit a luminescence transient");
  fit_decay->add_option("input", input, "transient CSV")->required();
  fit_decay->add_option("--model", model, "single_exp|double_decay")->default_val("single_exp");
  fit_decay->add_option("--init", init_csv, "comma-separated initial parameters");
  fit_decay->add_option("--out", out, "write fit JSON here");

  auto* fit_stark = app.add_subcommand("fit-stark", "fit tuning/broadening laws to a bias series");
  fit_stark->add_option("input", input, "series CSV (voltage_v,center_ghz,fwhm_ghz)")->required();
  fit_stark->add_option("--v-min", v_min, "fit range floor (V)")->required();
  fit_stark->add_option("--v-threshold", v_threshold, "threshold voltage (V)")->required();
  fit_stark->add_option("--id", id, "emitter id for the output");
  fit_stark->add_option("--out", out, "write emitter JSON here");

  auto* fit_holeburn = app.add_subcommand("fit-holeburn", "fit the hole-burning saturation law");
  fit_holeburn->add_option("input", input, "CSV (power_nw,hole_fwhm_mhz)")->required();

  auto* g2cmd = app.add_subcommand("g2", "background-correct pulsed g2 peak areas");
  g2cmd->add_option("input", input, "areas CSV (peak_index,area)")->required();
  g2cmd->add_option("--n1-hz", g2setup.n1_hz)->required();
  g2cmd->add_option("--n2-hz", g2setup.n2_hz)->required();
  g2cmd->add_option("--b1-hz", g2setup.b1_hz)->required();
  g2cmd->add_option("--b2-hz", g2setup.b2_hz)->required();
  g2cmd->add_option("--bin-ns", g2setup.bin_s, "area window d (ns)")->required();
  g2cmd->add_option("--period-ns", g2setup.period_s, "pulse period (ns)")->required();
  g2cmd->add_option("--total-s", g2setup.total_s, "total time (s)")->required();

  auto* homcmd = app.add_subcommand("hom", "time-gated HOM visibility");
  homcmd->add_option("--tau-prime-ns", tau_prime, "emitter lifetime");
  homcmd->add_option("--gamma1-ghz", gamma1, "SD FWHM, emitter 1");
  homcmd->add_option("--gamma2-ghz", gamma2, "SD FWHM, emitter 2");
  homcmd->add_option("--delta-nu-ghz", delta_nu, "mutual detuning");
  homcmd->add_option("--gate-ns", gate, "detection window");

  auto* mapcmd = app.add_subcommand("pexc-map", "joint excitation probability map CSV");
  mapcmd->add_option("--gamma-fixed", gamma_fixed,
                     "fixed emitter FWHM (GHz); sets the width-ratio range to [fixed/(10 fixed), 1]");
  mapcmd->add_option("--gamma-ratio-min", map_spec.gamma_ratio_min);
  mapcmd->add_option("--gamma-ratio-max", map_spec.gamma_ratio_max);
  mapcmd->add_option("--gamma-ratio-steps", map_spec.gamma_ratio_steps);
  mapcmd->add_option("--delta-tilde-min", map_spec.delta_tilde_min);
  mapcmd->add_option("--delta-tilde-max", map_spec.delta_tilde_max);
  mapcmd->add_option("--delta-tilde-steps", map_spec.delta_tilde_steps);
  mapcmd->add_option("--floor", map_spec.floor, "lower clip for the emitted probability");
  mapcmd->add_option("--out", out, "output CSV")->required();

  auto* plancmd = app.add_subcommand("plan", "pair emitters for mutual resonance");
  plancmd->add_option("input", input, "emitters.json")->required();
  plancmd->add_option("--min-neutral-fraction", min_nf, "quench feasibility floor");
  plancmd->add_option("--objective", objective, "log|sum");
  plancmd->add_option("--out", out, "write plan.json here");

  auto* fraccmd = app.add_subcommand("fraction", "sliding-window tunable fraction");
  fraccmd->add_option("input", input, "ensemble spectrum CSV")->required();
  fraccmd->add_option("--window-ghz", window_ghz, "tuning range")->required();
  fraccmd->add_option("--background", background, "flat background to subtract");

  auto* thermalcmd = app.add_subcommand("thermal", "cryogenic heat-transfer audit");
  thermalcmd->add_flag("--verify-paper", verify_paper,
                       "exit nonzero unless every checkpoint is within 5%");
  thermalcmd->add_option("--power-nw", power_nw, "dissipated power per device");
  thermalcmd->add_option("--pressure-pa", pressure_pa, "exchange gas pressure");
  thermalcmd->add_option("--sink-k", sink_k, "thermal sink temperature");

  // simulate: synthetic data with explicit seeds.
  auto* sim = app.add_subcommand("simulate", "generate synthetic data");
  sim->require_subcommand(1);
  std::string sim_emitters, sim_ids;
  std::uint64_t seed = 1;
  double bias = 0, start_ghz = 0, stop_ghz = 0, peak_rate = 1000, background_rate = 10,
         integration_s = 1.0, tau_ns = 940, amplitude = 100, bin_ns = 10, tau_dark = 228;
  int points = 400, bins = 400;
  bool poisson = false;
  std::string widths_csv = "800,1000,1200,1400,1600,1800", params_csv;

  auto* simple_ = sim->add_subcommand("ple", "PLE scan from emitters.json");
  simple_->add_option("--emitters", sim_emitters)->required();
  simple_->add_option("--ids", sim_ids, "comma-separated subset of emitter ids");
  simple_->add_option("--bias-v", bias);
  simple_->add_option("--start-ghz", start_ghz)->required();
  simple_->add_option("--stop-ghz", stop_ghz)->required();
  simple_->add_option("--points", points);
  simple_->add_option("--peak-rate", peak_rate);
  simple_->add_option("--background-rate", background_rate);
  simple_->add_option("--integration-s", integration_s);
  simple_->add_flag("--poisson", poisson);
  simple_->add_option("--seed", seed);
  simple_->add_option("--out", out)->required();

  auto* simdecay = sim->add_subcommand("decay", "single-exponential transient");
  simdecay->add_option("--tau-ns", tau_ns);
  simdecay->add_option("--amplitude", amplitude);
  simdecay->add_option("--background", background);
  simdecay->add_option("--bins", bins);
  simdecay->add_option("--bin-ns", bin_ns);
  simdecay->add_flag("--poisson", poisson);
  simdecay->add_option("--seed", seed);
  simdecay->add_option("--out", out)->required();

  auto* simshelv = sim->add_subcommand("shelving", "electrical shelving sequence");
  simshelv->add_option("--params", params_csv, "10 comma-separated double-decay parameters")
      ->required();
  simshelv->add_option("--tau-dark-ns", tau_dark);
  simshelv->add_option("--widths-ns", widths_csv, "comma-separated pulse widths");
  simshelv->add_option("--bins", bins);
  simshelv->add_option("--bin-ns", bin_ns);
  simshelv->add_flag("--poisson", poisson);
  simshelv->add_option("--seed", seed);
  simshelv->add_option("--out", out, "output prefix; writes <prefix>_<width>.csv")->required();

  sp::synth::G2StreamConfig g2cfg;
  double g2_window_ns = 45.0;
  int g2_nmax = 5;
  auto* simg2 = sim->add_subcommand("g2", "pulsed photon stream and peak areas");
  simg2->add_option("--period-ns", g2cfg.period_ns);
  simg2->add_option("--duration-s", g2cfg.duration_s);
  simg2->add_option("--emitter-prob", g2cfg.emitter_prob);
  simg2->add_option("--reexcitation-prob", g2cfg.reexcitation_prob);
  simg2->add_option("--det1-eff", g2cfg.det1_eff);
  simg2->add_option("--det2-eff", g2cfg.det2_eff);
  simg2->add_option("--decay-ns", g2cfg.decay_ns);
  simg2->add_option("--bg1-hz", g2cfg.bg1_hz);
  simg2->add_option("--bg2-hz", g2cfg.bg2_hz);
  simg2->add_option("--window-ns", g2_window_ns);
  simg2->add_option("--n-max", g2_nmax);
  simg2->add_option("--seed", g2cfg.seed);
  simg2->add_option("--out", out, "areas CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_ple) return run_fit_ple(input, model, out, common);
    if (*fit_cavity)
      return run_fit_cavity(input, init_csv.empty() ? std::vector<double>{} : parse_csv_numbers(init_csv),
                            out, common);
    if (*fit_decay)
      return run_fit_decay(input, model, init_csv.empty() ? std::vector<double>{} : parse_csv_numbers(init_csv),
                           out, common);
    if (*fit_stark) return run_fit_stark(input, v_min, v_threshold, id, out, common);
    if (*fit_holeburn) return run_fit_holeburn(input, common);
    if (*g2cmd) {
      g2setup.bin_s *= 1e-9;
      g2setup.period_s *= 1e-9;
      return run_g2(input, g2setup, common);
    }
    if (*homcmd) return run_hom(tau_prime, gamma1, gamma2, delta_nu, gate, common);
    if (*mapcmd) {
      if (gamma_fixed > 0.0) map_spec.gamma_ratio_min = 0.1;
      return run_pexc_map(map_spec, out, common);
    }
    if (*plancmd) return run_plan(input, min_nf, objective, out, common);
    if (*fraccmd) return run_fraction(input, window_ghz, background, common);
    if (*thermalcmd) return run_thermal(verify_paper, power_nw, pressure_pa, sink_k, common);

    if (*sim) {
      if (*simple_) {
        auto doc = sp::load_emitters_json(sim_emitters);
        sp::synth::PleScenario sc;
        if (!sim_ids.empty()) {
          std::stringstream ss(sim_ids);
          std::string one;
          while (std::getline(ss, one, ',')) {
            bool found = false;
            for (const auto& e : doc.emitters)
              if (e.id == one) { sc.emitters.push_back(e); found = true; }
            if (!found) throw sp::domain_error("simulate ple: no emitter with id '" + one + "'");
          }
        } else {
          sc.emitters = doc.emitters;
        }
        sc.bias_v = bias;
        sc.start_ghz = start_ghz;
        sc.stop_ghz = stop_ghz;
        sc.points = points;
        sc.peak_rate = peak_rate;
        sc.background_rate = background_rate;
        sc.noise = poisson ? sp::synth::NoiseKind::Poisson : sp::synth::NoiseKind::None;
        sc.integration_s = integration_s;
        sc.seed = seed;
        sp::write_file_atomic(out, sp::format_spectrum_csv(sp::synth::gen_ple_scan(sc)));
        emit(common.as_json, json{{"out", out}, {"seed", seed}}, "wrote " + out + "\n");
        return 0;
      }
      if (*simdecay) {
        sp::synth::DecayScenario sc;
        sc.tau_ns = tau_ns;
        sc.amplitude = amplitude;
        sc.background_per_ns = background;
        sc.bins = bins;
        sc.bin_ns = bin_ns;
        sc.noise = poisson ? sp::synth::NoiseKind::Poisson : sp::synth::NoiseKind::None;
        sc.seed = seed;
        sp::write_file_atomic(out, sp::format_transient_csv(sp::synth::gen_decay(sc)));
        emit(common.as_json, json{{"out", out}, {"seed", seed}}, "wrote " + out + "\n");
        return 0;
      }
      if (*simshelv) {
        sp::synth::ShelvingScenario sc;
        sc.base_params = parse_csv_numbers(params_csv);
        sc.tau_dark_ns = tau_dark;
        sc.pulse_widths_ns = parse_csv_numbers(widths_csv);
        sc.bins = bins;
        sc.bin_ns = bin_ns;
        sc.noise = poisson ? sp::synth::NoiseKind::Poisson : sp::synth::NoiseKind::None;
        sc.seed = seed;
        const auto seqs = sp::synth::gen_shelving_sequence(sc);
        json outs = json::array();
        for (std::size_t i = 0; i < seqs.size(); ++i) {
          std::ostringstream name;
          name << out << "_" << sc.pulse_widths_ns[i] << ".csv";
          sp::write_file_atomic(name.str(), sp::format_transient_csv(seqs[i]));
          outs.push_back(name.str());
        }
        emit(common.as_json, json{{"outputs", outs}}, "wrote " + std::to_string(seqs.size()) + " transients\n");
        return 0;
      }
      if (*simg2) {
        const auto stream = sp::synth::gen_g2_stream(g2cfg);
        const auto areas =
            sp::synth::correlate_peak_areas(stream, g2cfg.period_ns, g2_window_ns, g2_nmax);
        std::ostringstream csv;
        csv << "peak_index,area\n";
        for (const auto& [n, a] : areas) csv << n << "," << a << "\n";
        sp::write_file_atomic(out, csv.str());
        const double t_s = stream.duration_ns * 1e-9;
        json j{{"out", out},
               {"n1_hz", stream.det1_ns.size() / t_s},
               {"n2_hz", stream.det2_ns.size() / t_s},
               {"duration_s", t_s},
               {"seed", g2cfg.seed}};
        emit(common.as_json, j, "wrote " + out + "\n");
        return 0;
      }
    }
    throw sp::domain_error("no subcommand");
  } catch (const sp::fit_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
