// Command-line front end: run scenarios, re-check recorded traces, sweep the
// parameter grid. Exit codes: 0 all checks pass, 1 property violation,
// 2 usage or input error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kset/kset.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::set<kset::ProcessId> parse_id_set(const std::string& csv) {
  std::set<kset::ProcessId> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    out.insert(std::stoi(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic simulator and checker for k-set agreement"};
  app.require_subcommand(1);

  // --- run -------------------------------------------------------------
  auto* run = app.add_subcommand("run", "simulate a scenario and check its trace");
  std::string scenario_path, trace_out, algorithm_name = "kset", adversary = "fair", dead_csv;
  int n = 3, f = 1, k = 1, fairness_bound = 64, step_budget = 100000;
  std::uint64_t seed = 1;
  std::vector<std::string> input_args;
  run->add_option("--scenario", scenario_path,
                  "scenario file (overrides the parameter flags below)");
  run->add_option("--n", n, "number of processes");
  run->add_option("--f", f, "crash budget");
  run->add_option("--k", k, "agreement degree");
  run->add_option("--input", input_args, "input assignment pid=value (repeatable)");
  run->add_option("--dead", dead_csv, "comma-separated initially crashed processes");
  run->add_option("--adversary", adversary, "fair or initial-crash (partitions need a file)")
      ->check(CLI::IsMember({"fair", "initial-crash"}));
  run->add_option("--seed", seed, "delivery-schedule seed");
  run->add_option("--fairness-bound", fairness_bound, "max age of an undelivered message");
  run->add_option("--step-budget", step_budget, "step cap before truncation");
  run->add_option("--algorithm", algorithm_name, "algorithm to run");
  run->add_option("--trace-out", trace_out, "write the serialized trace here");

  // --- check -----------------------------------------------------------
  auto* check = app.add_subcommand("check", "replay a trace file and re-check it");
  std::string trace_path, check_algorithm = "kset";
  int check_k = -1;
  check->add_option("trace", trace_path, "trace file to verify")->required();
  check->add_option("--algorithm", check_algorithm, "algorithm the trace claims to follow");
  check->add_option("--k", check_k, "override the agreement degree from the header");

  // --- sweep -----------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "run the solvability grid");
  int n_max = 6, seeds = 20;
  std::string report_out;
  sweep->add_option("--n-max", n_max, "largest system size");
  sweep->add_option("--seeds", seeds, "randomized runs per parameter tuple");
  sweep->add_option("--report-out", report_out, "write the machine-readable report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kset::kExitUsage;
  }

  try {
    if (app.got_subcommand(run)) {
      kset::Scenario sc;
      if (!scenario_path.empty()) {
        sc = kset::parse_scenario(read_file(scenario_path));
      } else {
        sc.params = kset::SystemParams(n, f, k);
        for (const auto& arg : input_args) {
          auto eq = arg.find('=');
          if (eq == std::string::npos)
            throw std::invalid_argument("--input expects pid=value, got '" + arg + "'");
          sc.inputs[std::stoi(arg.substr(0, eq))] = std::stoll(arg.substr(eq + 1));
        }
        sc.initial_dead = parse_id_set(dead_csv);
        sc.adversary = adversary == "initial-crash" ? kset::Adversary::initial_crash()
                                                    : kset::Adversary::fair();
        sc.seed = seed;
        sc.fairness_bound = fairness_bound;
        sc.step_budget = step_budget;
      }
      auto algorithm = kset::make_algorithm(algorithm_name);
      auto result = kset::cmd_run(sc, *algorithm);
      std::cout << result.output;
      if (!trace_out.empty() && result.file) write_file(trace_out, *result.file);
      return result.exit_code;
    }
    if (app.got_subcommand(check)) {
      auto algorithm = kset::make_algorithm(check_algorithm);
      std::optional<int> k_override;
      if (check_k >= 1) k_override = check_k;
      auto result = kset::cmd_check(read_file(trace_path), *algorithm, k_override);
      std::cout << result.output;
      return result.exit_code;
    }
    if (app.got_subcommand(sweep)) {
      auto result = kset::cmd_sweep(n_max, seeds);
      std::cout << result.output;
      if (!report_out.empty() && result.file) write_file(report_out, *result.file);
      return result.exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kset::kExitUsage;
  }
  return kset::kExitUsage;
}
