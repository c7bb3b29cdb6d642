#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "pflow/cli.hpp"
#include "pflow/config.hpp"
#include "pflow/step.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (key=value)");
  cmd->add_option("--set", args.sets, "override a config key, e.g. --set flow.p=3")
      ->take_all();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "random seed");
}

pflow::RunConfig load(const CommonArgs& args) {
  pflow::RunConfig cfg = pflow::parse_config(args.config_path, args.sets);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  return cfg;
}

std::vector<double> parse_p_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    out.push_back(std::stod(s.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"doubly nonlinear p-flow: ground states and optimal Poincare constants"};
  app.require_subcommand(1);

  CommonArgs flow_args, gs_args, sweep_args, check_args;
  std::string p_list_arg;

  CLI::App* flow = app.add_subcommand("flow", "run one flow and write the time series");
  add_common(flow, flow_args);
  CLI::App* gs = app.add_subcommand("groundstate", "run the flow to convergence and extract psi");
  add_common(gs, gs_args);
  CLI::App* sweep = app.add_subcommand("sweep", "ground-state runs over a list of exponents");
  add_common(sweep, sweep_args);
  sweep->add_option("--p-list", p_list_arg, "comma-separated exponents, each >= 2")->required();
  CLI::App* check = app.add_subcommand("check", "run the invariant suites");
  add_common(check, check_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : pflow::cli::kExitUsage;
  }

  try {
    if (flow->parsed()) return pflow::cli::cmd_flow(load(flow_args));
    if (gs->parsed()) return pflow::cli::cmd_groundstate(load(gs_args));
    if (sweep->parsed()) {
      std::vector<double> p_list;
      try {
        p_list = parse_p_list(p_list_arg);
      } catch (const std::exception&) {
        std::cerr << "bad --p-list\n";
        return pflow::cli::kExitUsage;
      }
      return pflow::cli::cmd_sweep(load(sweep_args), p_list);
    }
    if (check->parsed()) return pflow::cli::cmd_check(load(check_args));
  } catch (const pflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pflow::cli::kExitUsage;
  } catch (const pflow::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return pflow::cli::kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pflow::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pflow::cli::kExitSolver;
  }
  return pflow::cli::kExitUsage;
}
