#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "duality/discrimination.hpp"
#include "duality/montecarlo.hpp"

namespace duality {

enum class Scenario { kPhaseSweep, kDualityCurve, kMutualInfo, kSelfcheck };
enum class OutputFormat { kCsv, kJson };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);
OutputFormat parse_format(const std::string& name);

/// One experiment request. Angles are carried as the ratios tan(2 theta_a)
/// and sin(2 theta_n); an empty tan2a list means the default grid.
struct ScenarioSpec {
  Scenario scenario = Scenario::kDualityCurve;
  std::vector<double> tan2a;
  double sin2n = 0.2;
  std::vector<Strategy> strategies;  // empty: scenario default
  NoiseModel noise;
  std::uint64_t seed = 1;
  std::string out;  // empty: stdout
  OutputFormat format = OutputFormat::kCsv;
  unsigned workers = 0;  // 0: hardware concurrency

  /// Fill defaults that depend on the scenario and check ranges.
  ScenarioSpec resolved() const;
};

/// 15 evenly spaced symmetry values: [s, 1] when s <= 0.5, else (0, s].
std::vector<double> default_symmetry_grid(double sin2n, int points = 15);

/// Apply `key = value` pairs (keys mirror the CLI long flags).
void apply_setting(ScenarioSpec& spec, const std::string& key, const std::string& value);

/// Parse a scenario file: one `key = value` per line, `#` starts a comment.
std::map<std::string, std::string> parse_scenario_text(const std::string& text);
ScenarioSpec load_scenario_file(const std::string& path, ScenarioSpec base = {});

struct ResultRow {
  double tan2a = 0;
  double sin2n = 0;
  std::string strategy;
  std::optional<double> phi;
  std::string quantity;
  double closed_form = 0;
  double estimate = 0;
  double sigma = 0;
  double n_photons = 0;
  std::uint64_t seed = 0;

  double residual() const;
  bool pass(double k_sigma, double abs_tol) const;
};

inline constexpr double kRowSigmas = 4.0;
inline constexpr double kRowAbsTol = 1e-9;

std::vector<ResultRow> run_phase_sweep(const ScenarioSpec& spec);
std::vector<ResultRow> run_duality_curve(const ScenarioSpec& spec);
std::vector<ResultRow> run_mutual_info(const ScenarioSpec& spec);
std::vector<ResultRow> run_scenario(const ScenarioSpec& spec);

/// `%.9g`, the float format for every output file.
std::string format_float(double x);

void write_csv(const std::vector<ResultRow>& rows, std::ostream& os);
void write_json(const std::vector<ResultRow>& rows, std::ostream& os);
void write_rows(const std::vector<ResultRow>& rows, OutputFormat format, std::ostream& os);

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0;  // largest residual seen
  double tolerance = 0;
  std::string detail;
};

struct SelfcheckOptions {
  HwpFrame first_loop_frame = HwpFrame::kLabelled;  // kJones is the negative control
  std::uint64_t seed = 1;
};

struct SelfcheckReport {
  std::vector<CheckResult> checks;
  bool pass() const;
};

SelfcheckReport run_selfcheck(const SelfcheckOptions& options = {});
void write_selfcheck(const SelfcheckReport& report, std::ostream& os);

}  // namespace duality
