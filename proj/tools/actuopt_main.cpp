// actuopt <simulate|gradcheck|optimize|gridsearch|oracle-compare> --config <path> [--out <dir>] [--threads N]

#include "actuopt/cli/commands.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  using namespace actuopt::cli;

  CLI::App app{"Optimal control and actuator placement for semi-linear vibration models"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  bool corrupt = false;

  const char* commands[][2] = {
      {"simulate", "Forward simulation; writes trajectory.csv"},
      {"gradcheck", "Duality and finite-difference gradient checks; writes gradcheck.json"},
      {"optimize", "Projected-gradient optimization of (u, r); writes optim_history.csv"},
      {"gridsearch", "Control optimization over a grid of designs; writes landscape.csv"},
      {"oracle-compare", "Discrete versus continuous adjoint; writes oracle_compare.json"},
  };
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd[0], cmd[1]);
    sub->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides [run] out)");
    sub->add_option("--threads", threads, "Worker threads for gridsearch (env ACTUOPT_THREADS)")
        ->check(CLI::PositiveNumber);
    if (std::string(cmd[0]) == "gradcheck")
      sub->add_flag("--corrupt-gradient", corrupt, "Perturb the adjoint gradient (negative control)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig cfg = load_config(config_path);
    CommandOptions opt;
    opt.out_dir = out_dir.empty() ? fs::path(cfg.out) : fs::path(out_dir);
    opt.corrupt_gradient = corrupt;
    opt.threads = 1;
    if (threads > 0) {
      opt.threads = threads;
    } else if (const char* env = std::getenv("ACTUOPT_THREADS")) {
      try {
        opt.threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        std::cerr << "ignoring invalid ACTUOPT_THREADS='" << env << "'\n";
      }
    }
    return run_command(command, cfg, opt);
  } catch (const actuopt::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const actuopt::ProjectionRequired& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const actuopt::ConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}
