#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "odd/error.hpp"
#include "odd/experiments.hpp"
#include "odd/service.hpp"
#include "odd/verify.hpp"
#include "odd/wire.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

odd::SimConfig config_or_default(const std::string& path) {
  return path.empty() ? odd::SimConfig{} : odd::load_config(path);
}

void print_metrics(const odd::RunMetrics& m) {
  std::printf("endpoint_deviation=%.9g\nloop_deviation=%.9g\nheading_drift=%.9g\npath_length=%.9g\n",
              m.endpoint_deviation, m.loop_deviation, m.heading_drift, m.path_length);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ODD wheeled-robot simulator"};
  app.require_subcommand(1);

  std::string script;
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  auto* run = app.add_subcommand("run", "Run a builtin script and write the trajectory log");
  run->add_option("--script", script, "Builtin script name")->required();
  run->add_option("--config", config_path, "Config file (key = value)");
  run->add_option("--out", out_path, "Output CSV")->required();
  run->add_option("--seed", seed, "Override the noise seed");
  run->add_option("--mode", mode, "caster | balance")->check(CLI::IsMember({"caster", "balance"}));

  std::string in_path;
  auto* metrics = app.add_subcommand("metrics", "Compute metrics of a trajectory log");
  metrics->add_option("--in", in_path, "Input CSV")->required();

  odd::VerifyOptions verify_options;
  bool skip_service = false;
  auto* verify = app.add_subcommand("verify", "Run the full property suite");
  verify->add_flag("--skip-service", skip_service, "Leave out the live service check");
  verify->add_option("--service-seconds", verify_options.service_seconds, "Length of the live service session");

  std::string param;
  std::vector<std::string> values;
  std::string sweep_script = "circle_xz";
  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Run one script per value of a config key");
  sweep->add_option("--param", param, "Config key")->required();
  sweep->add_option("--values", values, "Values to assign")->required();
  sweep->add_option("--script", sweep_script, "Builtin script name");
  sweep->add_option("--config", sweep_config, "Base config file");

  std::string serve_config;
  std::string course_path;
  odd::ServerOptions server_options;
  auto* serve = app.add_subcommand("serve", "Run the real-time teleoperation service");
  serve->add_option("--config", serve_config, "Config file");
  serve->add_option("--course", course_path, "Course JSON file");
  serve->add_option("--port", server_options.port, "TCP port (0 picks one)");
  serve->add_option("--rate", server_options.rate_hz, "Simulation rate [Hz]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << odd::format_error(odd::ErrorCode::ConfigError, e.what()) << '\n';
    return 2;
  }

  try {
    if (*run) {
      odd::SimConfig config = config_or_default(config_path);
      if (seed) config.seed = *seed;
      if (mode) config.mode = odd::parse_mode(*mode);
      const odd::TrajectoryLog log = odd::run_script(odd::builtin_script(script), config);
      odd::export_log(log, out_path);
      print_metrics(odd::compute_metrics(log));
    } else if (*metrics) {
      print_metrics(odd::compute_metrics(odd::import_log(in_path)));
    } else if (*verify) {
      verify_options.include_service = !skip_service;
      bool all = true;
      odd::run_verification(verify_options, [&](const odd::CheckResult& r) {
        all = all && r.pass;
        std::printf("%s  %s: %s [%.2f s]\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(),
                    r.seconds);
        std::fflush(stdout);
      });
      return all ? 0 : 1;
    } else if (*sweep) {
      const odd::SimConfig base = config_or_default(sweep_config);
      const odd::CommandScript s = odd::builtin_script(sweep_script);
      std::printf("%s,endpoint_deviation,loop_deviation,heading_drift,path_length\n", param.c_str());
      for (const std::string& v : values) {
        odd::SimConfig c = base;
        odd::apply_config_entry(c, param, v);
        const odd::RunMetrics m = odd::compute_metrics(odd::run_script(s, c));
        std::printf("%s,%.9g,%.9g,%.9g,%.9g\n", v.c_str(), m.endpoint_deviation, m.loop_deviation,
                    m.heading_drift, m.path_length);
      }
    } else if (*serve) {
      const odd::Course course = course_path.empty() ? odd::Course{} : odd::load_course(course_path);
      odd::Server server(config_or_default(serve_config), course, server_options);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.start();
      std::printf("listening on port %d\n", server.port());
      std::fflush(stdout);
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      server.stop();
    }
  } catch (const odd::Error& e) {
    std::cerr << odd::format_error(e.code(), e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << odd::format_error(odd::ErrorCode::IoFailure, e.what()) << '\n';
    return 1;
  }
  return 0;
}
