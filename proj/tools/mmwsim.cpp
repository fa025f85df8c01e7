#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include "mmw/campaign.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitPartial = 3;

constexpr const char* kOutDirEnv = "MMWSIM_OUT_DIR";

std::atomic<bool> g_cancel{false};

extern "C" void on_signal(int) { g_cancel.store(true); }

mmw::Direction parse_direction(const std::string& text) {
  std::istringstream in(text);
  mmw::Direction d;
  char comma = 0;
  if (!(in >> d.theta >> comma >> d.phi) || comma != ',' || !(in >> std::ws).eof())
    throw mmw::ConfigError(mmw::ConfigError::Kind::validation, "--steer expects THETA,PHI in degrees, got '" + text + "'");
  return d;
}

int cmd_validate(const std::string& path, bool print) {
  const mmw::Campaign c = mmw::parse_config(path);
  if (print) {
    std::cout << mmw::serialize(c);
    return kExitOk;
  }
  std::cout << path << ": ok, " << mmw::planned_points(c) << " sweep point(s), " << mmw::planned_runs(c)
            << " run(s)\n";
  return kExitOk;
}

int cmd_run(const std::string& path, const std::optional<std::string>& out, const std::optional<std::uint64_t>& seeds,
            unsigned workers) {
  mmw::Campaign c = mmw::parse_config(path);
  if (seeds) c.seeds = *seeds;
  if (out) {
    c.output_dir = *out;
  } else if (c.output_dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    c.output_dir = env && *env ? env : "mmwsim_out";
  }
  if (mmw::planned_runs(c) > c.max_runs)
    throw mmw::ConfigError(mmw::ConfigError::Kind::validation,
                           "field 'seeds': " + std::to_string(mmw::planned_runs(c)) + " runs planned, cap is " +
                               std::to_string(c.max_runs));

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const mmw::CampaignResult r = mmw::run_campaign(c, {workers, &g_cancel});
  for (const std::string& e : r.errors) std::cerr << "error: " << e << '\n';
  std::cout << "manifest: " << r.manifest.string() << " (" << r.manifest_json["n_runs_completed"] << "/"
            << r.manifest_json["n_runs_planned"] << " runs)\n";
  return r.status == mmw::CampaignStatus::success ? kExitOk : kExitPartial;
}

int cmd_pattern(const std::string& path, const std::string& array, const std::string& steer, double res,
                const std::optional<std::string>& out) {
  const mmw::Campaign c = mmw::parse_config(path);
  const mmw::ArrayConfig& cfg = array == "gnb" ? c.base.gnb_array : c.base.ue_array;
  const mmw::Direction dir = parse_direction(steer);
  std::ostringstream csv;
  try {
    mmw::export_pattern(csv, cfg, dir, res);
  } catch (const std::invalid_argument& e) {
    throw mmw::ConfigError(mmw::ConfigError::Kind::validation, e.what());
  }
  if (out) {
    std::ofstream f(*out, std::ios::binary | std::ios::trunc);
    if (!(f << csv.str())) throw std::runtime_error("cannot write " + *out);
  } else {
    std::cout << csv.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmWave multi-cell system-level simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seeds;
  unsigned workers = 0;
  auto* run = app.add_subcommand("run", "Run a campaign and write records, summaries and a manifest");
  run->add_option("config", config, "Campaign JSON file")->required();
  run->add_option("--out", out, std::string("Output directory (default: config output_dir, then $") + kOutDirEnv + ")");
  run->add_option("--seeds", seeds, "Number of seeds per sweep point")->check(CLI::PositiveNumber);
  run->add_option("--workers", workers, "Worker threads (default: hardware concurrency)");

  std::string array = "gnb";
  std::string steer = "90,0";
  double res = 1.0;
  std::optional<std::string> pattern_out;
  auto* pattern = app.add_subcommand("pattern", "Export an array gain map as CSV");
  pattern->add_option("config", config, "Campaign JSON file")->required();
  pattern->add_option("--array", array, "Array to export")->check(CLI::IsMember({"gnb", "ue"}));
  pattern->add_option("--steer", steer, "Steering direction THETA,PHI (local frame, degrees)");
  pattern->add_option("--res", res, "Grid resolution in degrees; must divide 360");
  pattern->add_option("--out", pattern_out, "Write CSV here instead of stdout");

  auto* val = app.add_subcommand("validate", "Parse and validate a campaign file");
  val->add_option("config", config, "Campaign JSON file")->required();
  bool print = false;
  val->add_flag("--print", print, "Print the campaign with all defaults applied");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) return cmd_run(config, out, seeds, workers);
    if (*pattern) return cmd_pattern(config, array, steer, res, pattern_out);
    return cmd_validate(config, print);
  } catch (const mmw::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
