#include "duality/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace duality {

namespace {

// Probabilities below this are roundoff from exact zeros.
constexpr double kProbabilityFloor = 1e-14;

// Stream tags distinguishing the two kinds of setting.
constexpr std::uint64_t kSweepTag = 1;
constexpr std::uint64_t kBlockedTag = 2;

double snap(double p) { return p < kProbabilityFloor ? 0.0 : p; }

/// Poisson photon number, then a multinomial split by sequential binomials.
template <std::size_t N>
std::array<double, N> draw_counts(const std::array<double, N>& probs, double mean,
                                  bool noiseless, CounterRng& rng) {
  std::array<double, N> counts{};
  if (noiseless) {
    for (std::size_t k = 0; k < N; ++k) counts[k] = mean * probs[k];
    return counts;
  }
  std::poisson_distribution<std::int64_t> poisson(mean);
  std::int64_t remaining = poisson(rng);
  double mass_left = 1.0;
  for (std::size_t k = 0; k < N && remaining > 0; ++k) {
    if (probs[k] <= 0) continue;
    const double q = std::clamp(probs[k] / mass_left, 0.0, 1.0);
    std::binomial_distribution<std::int64_t> binom(remaining, q);
    const std::int64_t n = q >= 1.0 ? remaining : binom(rng);
    counts[k] = static_cast<double>(n);
    remaining -= n;
    mass_left -= probs[k];
    if (mass_left <= 0) break;
  }
  return counts;
}

}  // namespace

std::uint64_t derive_stream(std::uint64_t master, std::span<const std::uint64_t> tags) {
  std::uint64_t h = CounterRng::mix(master ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t t : tags) h = CounterRng::mix(h ^ CounterRng::mix(t + 0x9e3779b97f4a7c15ULL));
  return h;
}

std::uint64_t derive_stream(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return derive_stream(master, std::span<const std::uint64_t>(tags.begin(), tags.size()));
}

std::vector<double> NoiseModel::phase_grid() const {
  std::vector<double> grid;
  const double step = 2 * std::numbers::pi / phases;
  for (int k = 0; k < phases; ++k) grid.push_back((k + phase_offset) * step);
  return grid;
}

void NoiseModel::validate() const {
  if (!(mean_rate > 0) || !(duration > 0)) throw std::invalid_argument("zero photon budget");
  if (repeats < 1) throw std::invalid_argument("repeats must be positive");
  if (phases < 2) throw std::invalid_argument("phase sweep needs at least 2 phases");
  if (!(loop_visibility >= 0 && loop_visibility <= 1))
    throw std::invalid_argument("loop_visibility outside [0, 1]");
}

bool CountRecord::is_active(Detector d) const {
  return std::find(active_detectors.begin(), active_detectors.end(), d) != active_detectors.end();
}

CountRecord sample_counts(const ExperimentConfig& config, Strategy strategy,
                          const NoiseModel& noise, std::uint64_t seed) {
  config.validate();
  noise.validate();

  CountRecord rec;
  rec.config = config;
  rec.config.loop_visibility = noise.loop_visibility;
  rec.strategy = strategy;
  rec.noise = noise;
  rec.seed = seed;
  rec.program = program_for(strategy, config.theta_a, config.theta_n);
  rec.active_detectors = strategy == Strategy::kUqsd
                             ? std::vector<Detector>{Detector::kD0, Detector::kD1, Detector::kD2}
                             : std::vector<Detector>{Detector::kD0, Detector::kD2};
  const double mean = noise.budget();

  const auto grid = noise.phase_grid();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    ExperimentConfig at = rec.config;
    at.phi = grid[k];
    const auto p = setup_detection_probabilities(at, rec.program);
    const std::array<double, 4> probs{snap(p.dv), snap(p.at(Detector::kD0)),
                                      snap(p.at(Detector::kD1)), snap(p.at(Detector::kD2))};
    PhaseCounts row;
    row.phi = grid[k];
    for (int r = 0; r < noise.repeats; ++r) {
      CounterRng rng(derive_stream(seed, {kSweepTag, k, static_cast<std::uint64_t>(r)}));
      row.repeats.push_back(draw_counts(probs, mean, noise.noiseless, rng));
    }
    rec.phase_sweep.push_back(std::move(row));
  }

  // Blocked runs: phase is irrelevant with one arm closed.
  std::array<std::array<double, 5>, 2> blocked_probs{};
  for (int j = 0; j < 2; ++j) {
    const auto p = setup_detection_probabilities(rec.config, rec.program, j);
    blocked_probs[j] = {snap(p.lost), snap(p.dv), snap(p.at(Detector::kD0)),
                        snap(p.at(Detector::kD1)), snap(p.at(Detector::kD2))};
  }
  for (int r = 0; r < noise.repeats; ++r) {
    BlockedCounts b;
    for (int j = 0; j < 2; ++j) {
      CounterRng rng(derive_stream(seed, {kBlockedTag, static_cast<std::uint64_t>(j),
                                          static_cast<std::uint64_t>(r)}));
      const auto c = draw_counts(blocked_probs[j], mean, noise.noiseless, rng);
      for (int i = 0; i < 3; ++i) b.n[i][j] = c[2 + i];
    }
    for (int i = 0; i < 3; ++i)
      if (!rec.is_active(static_cast<Detector>(i))) b.n[i] = {0, 0};
    rec.blocked.push_back(b);
  }
  return rec;
}

Estimate mean_and_sigma(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("mean_and_sigma: no samples");
  double mean = 0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  if (samples.size() == 1) return {mean, 0.0};
  double ss = 0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(samples.size() - 1))};
}

Estimate estimate_visibility(const CountRecord& record) {
  if (record.phase_sweep.size() < 2)
    throw std::invalid_argument("estimate_visibility: need at least 2 phases");
  const auto dv = static_cast<int>(Channel::kDv);
  std::vector<double> per_repeat;
  for (int r = 0; r < record.noise.repeats; ++r) {
    double hi = -1, lo = std::numeric_limits<double>::infinity();
    for (const auto& row : record.phase_sweep) {
      hi = std::max(hi, row.repeats[r][dv]);
      lo = std::min(lo, row.repeats[r][dv]);
    }
    if (hi + lo <= 0) throw std::domain_error("estimate_visibility: all counts zero");
    per_repeat.push_back((hi - lo) / (hi + lo));
  }
  return mean_and_sigma(per_repeat);
}

Estimate estimate_du(const CountRecord& record) {
  if (record.strategy != Strategy::kUqsd)
    throw std::invalid_argument("estimate_du: record holds no UQSD blocked runs");
  std::vector<double> per_repeat;
  for (const auto& b : record.blocked) {
    const auto& n = b.n;
    const double num = n[0][0] + n[1][1];
    const double den = (n[2][0] + n[0][0]) + (n[2][1] + n[1][1]);
    if (den <= 0) throw std::domain_error("estimate_du: zero denominator");
    per_repeat.push_back(num / den);
  }
  return mean_and_sigma(per_repeat);
}

Estimate estimate_dm(const CountRecord& record) {
  if (record.strategy != Strategy::kMed)
    throw std::invalid_argument("estimate_dm: record holds no MED blocked runs");
  std::vector<double> per_repeat;
  for (const auto& b : record.blocked) {
    const auto& n = b.n;
    const double right = n[0][1] + n[2][0];
    const double wrong = n[0][0] + n[2][1];
    if (right + wrong <= 0) throw std::domain_error("estimate_dm: zero denominator");
    per_repeat.push_back((right - wrong) / (right + wrong));
  }
  return mean_and_sigma(per_repeat);
}

Estimate empirical_mutual_information(const CountRecord& record) {
  if (record.blocked.empty()) throw std::invalid_argument("no blocked runs");
  std::vector<double> per_repeat;
  for (const auto& b : record.blocked) {
    double all = 0;
    std::array<double, 2> by_path{};
    std::array<double, 3> by_outcome{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) {
        all += b.n[i][j];
        by_path[j] += b.n[i][j];
        by_outcome[i] += b.n[i][j];
      }
    if (all <= 0) throw std::domain_error("empirical_mutual_information: no counts");
    double info = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) {
        if (b.n[i][j] <= 0) continue;
        info += b.n[i][j] / all * std::log2(b.n[i][j] * all / (by_path[j] * by_outcome[i]));
      }
    per_repeat.push_back(info);
  }
  return mean_and_sigma(per_repeat);
}

EstimateReport make_report(const CountRecord& record) {
  EstimateReport rep;
  rep.strategy = record.strategy;
  rep.visibility = estimate_visibility(record);
  const auto& v = rep.visibility;
  if (record.strategy == Strategy::kUqsd) {
    rep.distinguishability = estimate_du(record);
    const auto& d = rep.distinguishability;
    rep.relation = {v.value + d.value, std::hypot(v.sigma, d.sigma)};
  } else {
    rep.distinguishability = estimate_dm(record);
    const auto& d = rep.distinguishability;
    rep.relation = {v.value * v.value + d.value * d.value,
                    std::hypot(2 * v.value * v.sigma, 2 * d.value * d.sigma)};
  }
  return rep;
}

ModelPrediction predict(const ExperimentConfig& config, Strategy strategy,
                        double loop_visibility) {
  const auto p = split_probs(config.theta_a);
  ModelPrediction m;
  m.visibility = loop_visibility * visibility_closed_form(config.theta_a, config.theta_n);
  if (strategy == Strategy::kUqsd) {
    m.distinguishability = uqsd_bound(p.p1, p.p2, config.theta_n);
    m.relation = m.visibility + m.distinguishability;
  } else {
    m.distinguishability = dm_closed_form(p.p1, p.p2, config.theta_n);
    m.relation = m.visibility * m.visibility + m.distinguishability * m.distinguishability;
  }
  return m;
}

}  // namespace duality
