#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "starkplan/interference.hpp"
#include "starkplan/io.hpp"

using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(STARKPLAN_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("starkplan_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kEmitters = std::string(STARKPLAN_DATA_DIR) + "/emitters.json";

}  // namespace

TEST_CASE("thermal --verify-paper passes every checkpoint") {
  const auto r = run_cli("thermal --verify-paper");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.stdout_text.find("PASS") != std::string::npos);
  REQUIRE(r.stdout_text.find("FAIL") == std::string::npos);
}

TEST_CASE("simulate + fit-ple round trip through files") {
  TempDir tmp;
  const std::string scan = tmp.file("scan.csv");
  auto sim = run_cli("simulate ple --emitters " + kEmitters +
                     " --ids A3 --bias-v -14 --start-ghz 226120 --stop-ghz 226160 --points 300 "
                     "--peak-rate 5000 --background-rate 5 --poisson --integration-s 1 --seed 7 "
                     "--out " + scan);
  REQUIRE(sim.exit_code == 0);
  REQUIRE(fs::exists(scan));

  auto fit = run_cli("--json fit-ple " + scan);
  REQUIRE(fit.exit_code == 0);
  const auto j = nlohmann::json::parse(fit.stdout_text);
  REQUIRE(j.at("model") == "gauss_lorentz");
  REQUIRE(j.at("converged").get<bool>());
  double center = 0.0;
  for (const auto& p : j.at("parameters"))
    if (p.at("name") == "center_ghz") center = p.at("value").get<double>();
  REQUIRE(center == Approx(226139.87).margin(0.1));
  REQUIRE(j.at("fwhm_ghz").get<double>() == Approx(15.66).epsilon(0.05));
}

TEST_CASE("simulate is reproducible per seed") {
  TempDir tmp;
  const std::string base = "simulate decay --tau-ns 940 --amplitude 80 --bins 200 --poisson ";
  run_cli(base + "--seed 5 --out " + tmp.file("a.csv"));
  run_cli(base + "--seed 5 --out " + tmp.file("b.csv"));
  run_cli(base + "--seed 6 --out " + tmp.file("c.csv"));
  REQUIRE(slurp(tmp.file("a.csv")) == slurp(tmp.file("b.csv")));
  REQUIRE(slurp(tmp.file("a.csv")) != slurp(tmp.file("c.csv")));
}

TEST_CASE("pexc-map CLI output is byte-identical to the library call") {
  TempDir tmp;
  const std::string out = tmp.file("map.csv");
  const auto r = run_cli("pexc-map --gamma-ratio-steps 12 --delta-tilde-steps 9 --out " + out);
  REQUIRE(r.exit_code == 0);
  starkplan::PexcMapSpec spec;
  spec.gamma_ratio_steps = 12;
  spec.delta_tilde_steps = 9;
  REQUIRE(slurp(out) == starkplan::format_pexc_map_csv(spec));
}

TEST_CASE("fraction CLI reproduces the analytic normal window") {
  TempDir tmp;
  std::ofstream csv(tmp.file("ens.csv"));
  csv << "frequency_ghz,intensity,sigma\n";
  for (int i = 0; i <= 2000; ++i) {
    const double x = 2.0 + 16.0 * i / 2000.0;
    csv << x << "," << std::exp(-0.5 * (x - 10.0) * (x - 10.0)) << ",\n";
  }
  csv.close();
  const auto r = run_cli("--json fraction " + tmp.file("ens.csv") + " --window-ghz 2");
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  REQUIRE(j.at("tunable_fraction").get<double>() == Approx(0.6827).margin(5e-3));
}

TEST_CASE("plan CLI writes a self-consistent plan.json") {
  TempDir tmp;
  const std::string out = tmp.file("plan.json");
  const auto r = run_cli("--json plan " + kEmitters + " --out " + out);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(out));
  const auto j = nlohmann::json::parse(slurp(out));
  REQUIRE(j.contains("pairs"));
  REQUIRE(j.contains("unpaired"));
}

TEST_CASE("hom CLI matches the library") {
  const auto r = run_cli("--json hom --tau-prime-ns 458 --gamma1-ghz 1.52 --gamma2-ghz 1.75 "
                         "--delta-nu-ghz 0 --gate-ns 0.5");
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  REQUIRE(j.at("visibility").get<double>() == Approx(0.71168).margin(1e-4));
}

TEST_CASE("malformed input exits with code 2 and a location") {
  TempDir tmp;
  std::ofstream bad(tmp.file("bad.csv"));
  bad << "frequency_ghz,intensity,sigma\n1,2,3\nnope,2,3\n";
  bad.close();
  const auto r = run_cli("fit-ple " + tmp.file("bad.csv"));
  REQUIRE(r.exit_code == 2);
}

TEST_CASE("unreachable domain requests exit with code 2") {
  TempDir tmp;
  // bias beyond the validated range of every bundled emitter
  const auto r = run_cli("simulate ple --emitters " + kEmitters +
                         " --ids A3 --bias-v -500 --start-ghz 1 --stop-ghz 2 --out " +
                         tmp.file("x.csv"));
  REQUIRE(r.exit_code == 2);
}

TEST_CASE("fit-stark CLI recovers the series rates") {
  TempDir tmp;
  std::ofstream csv(tmp.file("series.csv"));
  csv << "voltage_v,center_ghz,fwhm_ghz\n";
  for (double v = -18.0; v <= -4.0; v += 2.0) {
    csv << v << "," << 226168.37 + 2.85 * (v + 4.0) << "," << 1.52 - 1.01 * (v + 4.0) << "\n";
  }
  csv.close();
  const auto r = run_cli("--json fit-stark " + tmp.file("series.csv") +
                         " --v-min -18 --v-threshold -4 --id A3x");
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  REQUIRE(j.at("shift_model") == "linear");
  REQUIRE(j.at("emitter").at("alpha1_ghz_per_v").get<double>() == Approx(2.85).epsilon(1e-9));
}
