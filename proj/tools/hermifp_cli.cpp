#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "hermifp/common.hpp"
#include "hermifp/config.hpp"
#include "hermifp/run.hpp"

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hermifp::IoError("cannot open config file " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw hermifp::IoError("cannot read config file " + path);
  return out.str();
}

const char* describe(const std::string& command) {
  if (command == "solve-linear")
    return "Evolve or solve the linear Fokker-Planck equation with a frozen mean";
  if (command == "solve-mckean")
    return "Evolve or solve the nonlinear (mean-field) Fokker-Planck equation";
  if (command == "self-consistency")
    return "Fixed points of the self-consistency map at one inverse temperature";
  if (command == "bifurcate") return "Trace equilibrium branches over an interval of beta";
  if (command == "mc") return "Interacting-particle Monte Carlo estimate of the stationary mean";
  if (command == "zeta") return "Kernel normalisation constants of the colored-noise models";
  if (command == "critical-epsilon")
    return "Correlation-time parameter at which a target critical beta is reached";
  if (command == "compare") return "Spectral vs asymptotic vs Monte Carlo stationary means";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hermifp: spectral and particle methods for mean-field Fokker-Planck equations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "Path to the run configuration file");
  app.add_option("--out", out_dir, "Directory artifacts are written into (default: .)");
  app.add_option("--threads", threads, "Worker threads for beta sweeps (default: 1)");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "Override the Monte Carlo seed from the config");

  for (const std::string& name : hermifp::known_commands())
    app.add_subcommand(name, describe(name))->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    std::string text;
    if (!config_path.empty()) text = read_text_file(config_path);
    hermifp::RunConfig cfg = hermifp::parse_config(text, command);
    if (threads < 1) throw hermifp::ConfigError("--threads must be >= 1");
    cfg.threads = threads;
    if (seed_opt->count() > 0) {
      cfg.mc.seed = seed;
      hermifp::canonicalize_config(cfg);
    }
    std::cout << "--- resolved config ---\n" << cfg.canonical << "--- end config ---\n";
    return hermifp::run_with_exit_code(cfg, out_dir, std::cout);
  } catch (const hermifp::ConfigError& e) {
    std::cout << "config error: " << e.what() << "\n";
    return 1;
  } catch (const hermifp::SolverError& e) {
    std::cout << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const hermifp::IoError& e) {
    std::cout << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cout << "error: " << e.what() << "\n";
    return 4;
  }
}
