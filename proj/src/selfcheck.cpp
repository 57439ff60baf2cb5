#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "duality/experiments.hpp"

namespace duality {

namespace {

constexpr double kPi = std::numbers::pi;

struct GridPoint {
  double theta_a;
  double theta_n;
};

/// n x n grid over tan2a in (0, 1] and sin2n in [0, 1].
std::vector<GridPoint> angle_grid(int n) {
  std::vector<GridPoint> g;
  for (int i = 1; i <= n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto c = ExperimentConfig::from_ratios(double(i) / n, double(j) / (n - 1));
      g.push_back({c.theta_a, c.theta_n});
    }
  return g;
}

CheckResult max_residual_check(std::string name, double tol,
                               const std::vector<GridPoint>& grid,
                               const std::function<double(const GridPoint&)>& residual) {
  CheckResult c{std::move(name), true, 0.0, tol, {}};
  for (const auto& g : grid) c.worst = std::max(c.worst, residual(g));
  c.pass = c.worst <= tol;
  return c;
}

}  // namespace

bool SelfcheckReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

SelfcheckReport run_selfcheck(const SelfcheckOptions& options) {
  SelfcheckReport report;
  auto& checks = report.checks;
  const auto grid = angle_grid(12);

  checks.push_back(max_residual_check("povm_validity", kCompletenessTol, grid, [](const auto& g) {
    double worst = 0;
    for (Strategy s : {Strategy::kUqsd, Strategy::kMed}) {
      const auto rep = validate_povm(strategy_povm(s, g.theta_a, g.theta_n));
      worst = std::max({worst, rep.completeness_residual, -rep.min_eigenvalue()});
    }
    const auto m = uqsd_povm(uqsd_program(g.theta_a, g.theta_n), g.theta_a, g.theta_n);
    const auto dil = validate_povm(m.dilated);
    return std::max({worst, dil.completeness_residual, -dil.min_eigenvalue()});
  }));

  checks.push_back(max_residual_check(
      "output_states_reproduced", 1e-12, grid, [&](const auto& g) {
        double worst = 0;
        for (double phi : {0.0, 0.7, kPi / 2, 2.5, kPi}) {
          const ExperimentConfig cfg{g.theta_a, g.theta_n, phi};
          const auto closed = evolve(cfg);
          const auto piped = pipeline_output(cfg, options.first_loop_frame);
          worst = std::max({worst, max_abs(closed.psi_v - piped.psi_v),
                            max_abs(closed.psi_d - piped.psi_d)});
        }
        return worst;
      }));

  checks.push_back(max_residual_check("linear_identity", 1e-12, grid, [](const auto& g) {
    const auto p = split_probs(g.theta_a);
    const double s = std::sin(2 * g.theta_n);
    if (!(p.p2 > s * s * p.p1)) return 0.0;
    return std::abs(uqsd_bound(p.p1, p.p2, g.theta_n) +
                    visibility_closed_form(g.theta_a, g.theta_n) - 1);
  }));

  checks.push_back(max_residual_check("linear_breakdown", 1e-12, grid, [](const auto& g) {
    const auto p = split_probs(g.theta_a);
    const double s = std::sin(2 * g.theta_n), c = std::cos(2 * g.theta_n);
    if (p.p2 > s * s * p.p1) return 0.0;
    const double expected = p.p1 * c * c + 2 * std::sqrt(p.p1 * p.p2) * s;
    return std::abs(uqsd_bound(p.p1, p.p2, g.theta_n) +
                    visibility_closed_form(g.theta_a, g.theta_n) - expected);
  }));

  checks.push_back(max_residual_check("quadratic_identity", 1e-12, grid, [](const auto& g) {
    const auto p = split_probs(g.theta_a);
    const double dm = dm_closed_form(p.p1, p.p2, g.theta_n);
    const double v = visibility_closed_form(g.theta_a, g.theta_n);
    return std::abs(dm * dm + v * v - 1);
  }));

  {
    CheckResult c{"branch_continuity", true, 0.0, 1e-12, {}};
    for (double t : {0.1, 0.3, 0.5, 0.8, 1.0}) {
      const auto cfg = ExperimentConfig::from_ratios(t, t);  // p2/p1 == sin^2
      const auto p = split_probs(cfg.theta_a);
      const double a = uqsd_bound_balanced(p.p1, p.p2, cfg.theta_n);
      const double b = uqsd_bound_one_sided(p.p1, cfg.theta_n);
      c.worst = std::max({c.worst, std::abs(a - b), std::abs(a - (p.p1 - p.p2))});
    }
    c.pass = c.worst <= c.tolerance;
    checks.push_back(c);
  }

  checks.push_back(max_residual_check("uqsd_attains_bound", 1e-9, grid, [](const auto& g) {
    const auto p = split_probs(g.theta_a);
    const auto m = uqsd_povm(uqsd_program(g.theta_a, g.theta_n), g.theta_a, g.theta_n);
    const auto o = outcome_probabilities(m.povm, g.theta_a, g.theta_n);
    return std::abs(unambiguous_probability(o) - uqsd_bound(p.p1, p.p2, g.theta_n));
  }));

  checks.push_back(max_residual_check("med_attains_helstrom", 1e-9, grid, [](const auto& g) {
    const auto p = split_probs(g.theta_a);
    const auto o = outcome_probabilities(strategy_povm(Strategy::kMed, g.theta_a, g.theta_n),
                                         g.theta_a, g.theta_n);
    return std::abs(correct_guess_probability(o) - helstrom(p.p1, p.p2, g.theta_n));
  }));

  checks.push_back(max_residual_check("literal_matches_pipeline", 1e-10, grid, [](const auto& g) {
    const auto m = uqsd_povm(uqsd_program(g.theta_a, g.theta_n), g.theta_a, g.theta_n);
    return m.pipeline_fallback ? 1.0 : m.construction_mismatch;
  }));

  checks.push_back(max_residual_check("unambiguity", 1e-10, grid, [](const auto& g) {
    const auto o = outcome_probabilities(strategy_povm(Strategy::kUqsd, g.theta_a, g.theta_n),
                                         g.theta_a, g.theta_n);
    return std::max(o.conditional("D1", 0), o.conditional("D0", 1));
  }));

  {
    CheckResult c{"mi_ordering", true, 0.0, 0.0, {}};
    for (double s : {0.2, 0.9})
      for (double t : default_symmetry_grid(s)) {
        const auto cfg = ExperimentConfig::from_ratios(t, s);
        const double gap =
            strategy_mutual_information(Strategy::kMed, cfg.theta_a, cfg.theta_n) -
            strategy_mutual_information(Strategy::kUqsd, cfg.theta_a, cfg.theta_n);
        c.worst = std::max(c.worst, -gap);
      }
    c.pass = c.worst <= c.tolerance;
    c.detail = "worst is max(MI_uqsd - MI_med)";
    checks.push_back(c);
  }

  {
    CheckResult c{"noiseless_estimators", true, 0.0, 1e-12, {}};
    NoiseModel noise;
    noise.noiseless = true;
    noise.repeats = 1;
    for (Strategy s : {Strategy::kUqsd, Strategy::kMed})
      for (double t : {0.38, 0.8}) {
        const auto cfg = ExperimentConfig::from_ratios(t, 0.2);
        const auto rep = make_report(sample_counts(cfg, s, noise, options.seed));
        const auto model = predict(cfg, s, noise.loop_visibility);
        c.worst = std::max({c.worst, std::abs(rep.visibility.value - model.visibility),
                            std::abs(rep.distinguishability.value - model.distinguishability)});
      }
    c.pass = c.worst <= c.tolerance;
    checks.push_back(c);
  }

  {
    CheckResult c{"sampled_relation_consistency", true, 0.0, 0.0, {}};
    ScenarioSpec spec;
    spec.scenario = Scenario::kDualityCurve;
    spec.sin2n = 0.2;
    spec.tan2a = {0.38, 0.6, 1.0};
    spec.seed = options.seed;
    spec.workers = 1;
    int failed = 0, total = 0;
    for (const auto& r : run_duality_curve(spec)) {
      ++total;
      if (!r.pass(kRowSigmas, kRowAbsTol)) ++failed;
      c.worst = std::max(c.worst, r.sigma > 0 ? r.residual() / r.sigma : 0.0);
    }
    c.tolerance = kRowSigmas;
    c.pass = failed == 0;
    c.detail = std::to_string(total - failed) + "/" + std::to_string(total) + " rows within 4 sigma";
    checks.push_back(c);
  }

  return report;
}

void write_selfcheck(const SelfcheckReport& report, std::ostream& os) {
  nlohmann::ordered_json out;
  out["pass"] = report.pass();
  auto& arr = out["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json o;
    o["name"] = c.name;
    o["pass"] = c.pass;
    o["worst"] = std::stod(format_float(c.worst));
    o["tolerance"] = std::stod(format_float(c.tolerance));
    if (!c.detail.empty()) o["detail"] = c.detail;
    arr.push_back(std::move(o));
  }
  os << out.dump(2) << '\n';
}

}  // namespace duality
