#include "duality/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace duality {

namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a number: '" + text + "'");
  }
  if (trim(text.substr(used)).size() != 0)
    throw std::invalid_argument(key + ": trailing characters in '" + text + "'");
  return x;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::string norm = text;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream is(norm);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_double(key, tok));
  if (out.empty()) throw std::invalid_argument(key + ": empty list");
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw std::invalid_argument(key + ": expected a boolean, got '" + text + "'");
}

std::vector<Strategy> parse_strategies(const std::string& text) {
  if (text == "both") return {Strategy::kUqsd, Strategy::kMed};
  return {parse_strategy(text)};
}

/// Evaluate jobs on up to `workers` threads; results keep job order.
template <typename Fn>
auto parallel_map(std::size_t n, unsigned workers, Fn fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out;
  out.reserve(n);
  const std::size_t batch = std::max(1u, workers);
  for (std::size_t start = 0; start < n; start += batch) {
    std::vector<std::future<R>> futures;
    const std::size_t stop = std::min(n, start + batch);
    for (std::size_t i = start; i < stop; ++i)
      futures.push_back(std::async(batch == 1 ? std::launch::deferred : std::launch::async, fn, i));
    for (auto& f : futures) out.push_back(f.get());
  }
  return out;
}

struct Job {
  std::size_t grid_index;
  double tan2a;
  Strategy strategy;
};

std::vector<Job> make_jobs(const ScenarioSpec& spec) {
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < spec.tan2a.size(); ++g)
    for (Strategy s : spec.strategies) jobs.push_back({g, spec.tan2a[g], s});
  return jobs;
}

std::uint64_t job_seed(const ScenarioSpec& spec, const Job& job) {
  return derive_stream(spec.seed, {static_cast<std::uint64_t>(spec.scenario), job.grid_index,
                                   static_cast<std::uint64_t>(job.strategy)});
}

ResultRow base_row(const ScenarioSpec& spec, const Job& job) {
  ResultRow r;
  r.tan2a = job.tan2a;
  r.sin2n = spec.sin2n;
  r.strategy = std::string(to_string(job.strategy));
  r.n_photons = spec.noise.budget();
  r.seed = spec.seed;
  return r;
}

template <typename Rows>
std::vector<ResultRow> flatten(Rows nested) {
  std::vector<ResultRow> rows;
  for (auto& part : nested)
    for (auto& r : part) rows.push_back(std::move(r));
  return rows;
}

unsigned worker_count(const ScenarioSpec& spec) {
  if (spec.workers > 0) return spec.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kPhaseSweep: return "phase-sweep";
    case Scenario::kDualityCurve: return "duality-curve";
    case Scenario::kMutualInfo: return "mutual-info";
    case Scenario::kSelfcheck: return "selfcheck";
  }
  return {};
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::kPhaseSweep, Scenario::kDualityCurve, Scenario::kMutualInfo,
                     Scenario::kSelfcheck})
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown scenario: " + name);
}

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "json") return OutputFormat::kJson;
  throw std::invalid_argument("unknown format: " + name);
}

std::vector<double> default_symmetry_grid(double sin2n, int points) {
  std::vector<double> grid;
  if (sin2n <= 0.5) {
    const double lo = std::max(sin2n, 1.0 / points);
    for (int i = 0; i < points; ++i) grid.push_back(lo + (1.0 - lo) * i / (points - 1));
  } else {
    for (int i = 1; i <= points; ++i) grid.push_back(sin2n * i / points);
  }
  return grid;
}

ScenarioSpec ScenarioSpec::resolved() const {
  ScenarioSpec s = *this;
  if (!(s.sin2n >= 0 && s.sin2n <= 1)) throw std::invalid_argument("sin2n must lie in [0, 1]");
  if (s.tan2a.empty()) {
    s.tan2a = s.scenario == Scenario::kPhaseSweep ? std::vector<double>{0.38}
                                                  : default_symmetry_grid(s.sin2n);
  }
  for (double t : s.tan2a)
    if (!(t >= 0 && t <= 1)) throw std::invalid_argument("tan2a values must lie in [0, 1]");
  if (s.strategies.empty()) {
    s.strategies = s.scenario == Scenario::kPhaseSweep
                       ? std::vector<Strategy>{Strategy::kUqsd}
                       : std::vector<Strategy>{Strategy::kUqsd, Strategy::kMed};
  }
  s.noise.validate();
  return s;
}

void apply_setting(ScenarioSpec& spec, const std::string& raw_key, const std::string& value) {
  std::string key = raw_key;
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "scenario") {
    spec.scenario = parse_scenario(value);
  } else if (key == "tan2a") {
    spec.tan2a = parse_list(key, value);
  } else if (key == "sin2n") {
    spec.sin2n = parse_double(key, value);
  } else if (key == "theta-a-deg") {
    spec.tan2a.clear();
    for (double deg : parse_list(key, value)) spec.tan2a.push_back(std::tan(2 * deg * kPi / 180));
  } else if (key == "theta-n-deg") {
    spec.sin2n = std::sin(2 * parse_double(key, value) * kPi / 180);
  } else if (key == "strategy") {
    spec.strategies = parse_strategies(value);
  } else if (key == "photons") {
    spec.noise.mean_rate = parse_double(key, value);
    spec.noise.duration = 1.0;
  } else if (key == "rate") {
    spec.noise.mean_rate = parse_double(key, value);
  } else if (key == "duration") {
    spec.noise.duration = parse_double(key, value);
  } else if (key == "phases") {
    spec.noise.phases = static_cast<int>(parse_double(key, value));
  } else if (key == "phase-offset") {
    spec.noise.phase_offset = parse_double(key, value);
  } else if (key == "repeats") {
    spec.noise.repeats = static_cast<int>(parse_double(key, value));
  } else if (key == "loop-visibility") {
    spec.noise.loop_visibility = parse_double(key, value);
  } else if (key == "exact") {
    spec.noise.noiseless = parse_bool(key, value);
  } else if (key == "seed") {
    try {
      spec.seed = std::stoull(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("seed: not an unsigned integer: '" + value + "'");
    }
  } else if (key == "out") {
    spec.out = value;
  } else if (key == "format") {
    spec.format = parse_format(value);
  } else if (key == "workers") {
    spec.workers = static_cast<unsigned>(parse_double(key, value));
  } else {
    throw std::invalid_argument("unknown scenario key: " + raw_key);
  }
}

std::map<std::string, std::string> parse_scenario_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": missing '='");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

ScenarioSpec load_scenario_file(const std::string& path, ScenarioSpec base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_scenario_text(ss.str())) apply_setting(base, k, v);
  return base;
}

double ResultRow::residual() const { return std::abs(estimate - closed_form); }

bool ResultRow::pass(double k_sigma, double abs_tol) const {
  return residual() <= k_sigma * sigma + abs_tol;
}

std::vector<ResultRow> run_phase_sweep(const ScenarioSpec& in) {
  const ScenarioSpec spec = in.resolved();
  const auto jobs = make_jobs(spec);
  auto nested = parallel_map(jobs.size(), worker_count(spec), [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto config = ExperimentConfig::from_ratios(job.tan2a, spec.sin2n);
    const auto rec = sample_counts(config, job.strategy, spec.noise, job_seed(spec, job));
    std::vector<ResultRow> rows;
    for (const auto& pc : rec.phase_sweep) {
      ExperimentConfig at = rec.config;
      at.phi = pc.phi;
      const auto p = setup_detection_probabilities(at, rec.program);
      const std::array<std::pair<const char*, double>, 4> channels{
          {{"Dv", p.dv}, {"D0", p.at(Detector::kD0)}, {"D1", p.at(Detector::kD1)},
           {"D2", p.at(Detector::kD2)}}};
      for (int ch = 0; ch < 4; ++ch) {
        if (ch > 0 && !rec.is_active(static_cast<Detector>(ch - 1))) continue;
        std::vector<double> fractions;
        for (const auto& counts : pc.repeats) {
          const double all = counts[0] + counts[1] + counts[2] + counts[3];
          fractions.push_back(all > 0 ? counts[ch] / all : 0.0);
        }
        const auto est = mean_and_sigma(fractions);
        ResultRow r = base_row(spec, job);
        r.phi = pc.phi;
        r.quantity = channels[ch].first;
        r.closed_form = channels[ch].second;
        r.estimate = est.value;
        r.sigma = est.sigma;
        rows.push_back(std::move(r));
      }
    }
    return rows;
  });
  return flatten(std::move(nested));
}

std::vector<ResultRow> run_duality_curve(const ScenarioSpec& in) {
  const ScenarioSpec spec = in.resolved();
  const auto jobs = make_jobs(spec);
  auto nested = parallel_map(jobs.size(), worker_count(spec), [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto config = ExperimentConfig::from_ratios(job.tan2a, spec.sin2n);
    const auto rec = sample_counts(config, job.strategy, spec.noise, job_seed(spec, job));
    const auto rep = make_report(rec);
    const auto model = predict(config, job.strategy, spec.noise.loop_visibility);
    const bool uqsd = job.strategy == Strategy::kUqsd;
    const std::array<std::tuple<const char*, double, Estimate>, 3> items{{
        {"V", model.visibility, rep.visibility},
        {uqsd ? "D_u" : "D_m", model.distinguishability, rep.distinguishability},
        {uqsd ? "V+D_u" : "V^2+D_m^2", model.relation, rep.relation},
    }};
    std::vector<ResultRow> rows;
    for (const auto& [name, closed, est] : items) {
      ResultRow r = base_row(spec, job);
      r.quantity = name;
      r.closed_form = closed;
      r.estimate = est.value;
      r.sigma = est.sigma;
      rows.push_back(std::move(r));
    }
    return rows;
  });
  return flatten(std::move(nested));
}

std::vector<ResultRow> run_mutual_info(const ScenarioSpec& in) {
  const ScenarioSpec spec = in.resolved();
  const auto jobs = make_jobs(spec);
  auto nested = parallel_map(jobs.size(), worker_count(spec), [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto config = ExperimentConfig::from_ratios(job.tan2a, spec.sin2n);
    const auto rec = sample_counts(config, job.strategy, spec.noise, job_seed(spec, job));
    const auto est = empirical_mutual_information(rec);
    ResultRow r = base_row(spec, job);
    r.quantity = "MI";
    r.closed_form = strategy_mutual_information(job.strategy, config.theta_a, config.theta_n);
    r.estimate = est.value;
    r.sigma = est.sigma;
    return std::vector<ResultRow>{r};
  });
  return flatten(std::move(nested));
}

std::vector<ResultRow> run_scenario(const ScenarioSpec& spec) {
  switch (spec.scenario) {
    case Scenario::kPhaseSweep: return run_phase_sweep(spec);
    case Scenario::kDualityCurve: return run_duality_curve(spec);
    case Scenario::kMutualInfo: return run_mutual_info(spec);
    case Scenario::kSelfcheck: break;
  }
  throw std::invalid_argument("run_scenario: selfcheck produces a report, not rows");
}

std::string format_float(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << "tan2a,sin2n,strategy,phi,quantity,closed_form,estimate,sigma,n_photons,seed\n";
  for (const auto& r : rows) {
    os << format_float(r.tan2a) << ',' << format_float(r.sin2n) << ',' << r.strategy << ','
       << (r.phi ? format_float(*r.phi) : std::string()) << ',' << r.quantity << ','
       << format_float(r.closed_form) << ',' << format_float(r.estimate) << ','
       << format_float(r.sigma) << ',' << format_float(r.n_photons) << ',' << r.seed << '\n';
  }
}

namespace {
// Round-trip through the 9-digit text so JSON and CSV carry the same values.
double as_printed(double x) { return std::stod(format_float(x)); }
}  // namespace

void write_json(const std::vector<ResultRow>& rows, std::ostream& os) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["tan2a"] = as_printed(r.tan2a);
    o["sin2n"] = as_printed(r.sin2n);
    o["strategy"] = r.strategy;
    o["phi"] = r.phi ? nlohmann::ordered_json(as_printed(*r.phi)) : nlohmann::ordered_json();
    o["quantity"] = r.quantity;
    o["closed_form"] = as_printed(r.closed_form);
    o["estimate"] = as_printed(r.estimate);
    o["sigma"] = as_printed(r.sigma);
    o["n_photons"] = as_printed(r.n_photons);
    o["seed"] = r.seed;
    arr.push_back(std::move(o));
  }
  os << arr.dump(2) << '\n';
}

void write_rows(const std::vector<ResultRow>& rows, OutputFormat format, std::ostream& os) {
  if (format == OutputFormat::kCsv)
    write_csv(rows, os);
  else
    write_json(rows, os);
}

}  // namespace duality
