// Command-line runner for the asymmetric-interference duality experiments.
//
//   duality phase-sweep   --tan2a 0.38 --sin2n 0.2
//   duality duality-curve --sin2n 0.9 --strategy both --photons 100000
//   duality mutual-info   --sin2n 0.2 --format json --out mi.json
//   duality selfcheck
//   duality run scenario.txt

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "duality/experiments.hpp"

namespace {

using duality::ScenarioSpec;

struct Flags {
  std::string scenario_file;
  std::vector<std::string> settings;  // key=value in flag order, applied over the file
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
  auto push = [&flags](const std::string& key) {
    return [&flags, key](const std::string& value) { flags.settings.push_back(key + "=" + value); };
  };
  cmd->add_option("--scenario", flags.scenario_file, "key = value scenario file")
      ->check(CLI::ExistingFile);
  cmd->add_option_function<std::string>("--tan2a", push("tan2a"),
                                        "symmetry values tan(2 theta_a), comma separated");
  cmd->add_option_function<std::string>("--sin2n", push("sin2n"),
                                        "nonorthogonality sin(2 theta_n)");
  cmd->add_option_function<std::string>("--theta-a-deg", push("theta-a-deg"),
                                        "raw H1 angles in degrees (instead of --tan2a)");
  cmd->add_option_function<std::string>("--theta-n-deg", push("theta-n-deg"),
                                        "raw H2 angle in degrees (instead of --sin2n)");
  cmd->add_option_function<std::string>("--strategy", push("strategy"), "uqsd | med | both")
      ->check(CLI::IsMember({"uqsd", "med", "both"}));
  cmd->add_option_function<std::string>("--photons", push("photons"),
                                        "mean photons per measurement (default 5000)");
  cmd->add_option_function<std::string>("--phases", push("phases"), "phase points (default 24)");
  cmd->add_option_function<std::string>("--phase-offset", push("phase-offset"),
                                        "shift of the phase grid in steps (default 0)");
  cmd->add_option_function<std::string>("--repeats", push("repeats"), "repeats (default 5)");
  cmd->add_option_function<std::string>("--loop-visibility", push("loop-visibility"),
                                        "first-loop coherence (default 0.9867)");
  cmd->add_option_function<std::string>("--seed", push("seed"), "master seed (u64)");
  cmd->add_option_function<std::string>("--out", push("out"), "output path (default stdout)");
  cmd->add_option_function<std::string>("--format", push("format"), "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option_function<std::string>("--workers", push("workers"), "worker threads");
  cmd->add_flag_callback("--exact", [&flags] { flags.settings.push_back("exact=true"); },
                         "use expected counts (no sampling)");
}

ScenarioSpec build_spec(duality::Scenario scenario, const Flags& flags) {
  ScenarioSpec spec;
  spec.scenario = scenario;
  if (!flags.scenario_file.empty()) {
    spec = duality::load_scenario_file(flags.scenario_file, spec);
    if (spec.scenario != scenario)
      throw std::invalid_argument("scenario file is for '" + duality::to_string(spec.scenario) +
                                  "', not '" + duality::to_string(scenario) + "'");
  }
  for (const auto& kv : flags.settings) {
    const auto eq = kv.find('=');
    duality::apply_setting(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return spec;
}

int emit_rows(const ScenarioSpec& spec) {
  const auto rows = duality::run_scenario(spec);
  const ScenarioSpec resolved = spec.resolved();
  if (resolved.out.empty()) {
    duality::write_rows(rows, resolved.format, std::cout);
  } else {
    std::ofstream out(resolved.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + resolved.out);
    duality::write_rows(rows, resolved.format, out);
  }
  std::size_t within = 0;
  for (const auto& r : rows) within += r.pass(duality::kRowSigmas, duality::kRowAbsTol);
  std::cerr << duality::to_string(spec.scenario) << ": " << rows.size() << " rows, " << within
            << " within " << duality::kRowSigmas << " sigma of the closed form\n";
  return 0;
}

int emit_selfcheck(bool perturb, std::uint64_t seed, const std::string& out_path) {
  duality::SelfcheckOptions opts;
  opts.seed = seed;
  if (perturb) opts.first_loop_frame = duality::HwpFrame::kJones;
  const auto report = duality::run_selfcheck(opts);
  if (out_path.empty()) {
    duality::write_selfcheck(report, std::cout);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    duality::write_selfcheck(report, out);
  }
  for (const auto& c : report.checks)
    if (!c.pass) std::cerr << "FAIL " << c.name << " (worst " << c.worst << ")\n";
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymmetric two-path interference with a polarization which-way detector"};
  app.require_subcommand(1);

  Flags sweep_flags, curve_flags, mi_flags;
  auto* sweep = app.add_subcommand("phase-sweep", "normalized detector counts versus phase");
  add_common_flags(sweep, sweep_flags);
  auto* curve = app.add_subcommand("duality-curve", "V, D_u, D_m and the duality sums");
  add_common_flags(curve, curve_flags);
  auto* mi = app.add_subcommand("mutual-info", "mutual information of UQSD and MED");
  add_common_flags(mi, mi_flags);

  bool perturb = false;
  std::uint64_t check_seed = 1;
  std::string check_out;
  auto* check = app.add_subcommand("selfcheck", "run the invariant suite; exit status is the verdict");
  check->add_flag("--perturb-hwp", perturb, "use the Jones frame in the first loop (negative control)");
  check->add_option("--seed", check_seed, "seed for the sampled checks");
  check->add_option("--out", check_out, "write the JSON summary here");

  std::string run_file;
  auto* run = app.add_subcommand("run", "run the scenario named by a file's `scenario` key");
  run->add_option("file", run_file, "scenario file")->required()->check(CLI::ExistingFile);
  Flags run_flags;
  add_common_flags(run, run_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) return emit_rows(build_spec(duality::Scenario::kPhaseSweep, sweep_flags));
    if (*curve) return emit_rows(build_spec(duality::Scenario::kDualityCurve, curve_flags));
    if (*mi) return emit_rows(build_spec(duality::Scenario::kMutualInfo, mi_flags));
    if (*check) return emit_selfcheck(perturb, check_seed, check_out);
    if (*run) {
      run_flags.scenario_file = run_file;
      const auto spec = build_spec(duality::load_scenario_file(run_file).scenario, run_flags);
      if (spec.scenario == duality::Scenario::kSelfcheck)
        return emit_selfcheck(false, spec.seed, spec.out);
      return emit_rows(spec);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
