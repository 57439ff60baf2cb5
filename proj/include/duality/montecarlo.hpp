#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "duality/discrimination.hpp"
#include "duality/interferometer.hpp"

namespace duality {

/// Counter-based generator: the n-th output is a SplitMix64 finalization of
/// key + n * golden. Any (key, n) can be evaluated independently, so every
/// (setting, repeat) gets its own stream without shared state.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + kGolden * ++counter_); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Derive a stream key from a master seed and a sequence of indices.
std::uint64_t derive_stream(std::uint64_t master, std::span<const std::uint64_t> tags);
std::uint64_t derive_stream(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

struct NoiseModel {
  double mean_rate = 10000;        // heralded photons per second
  double duration = 0.5;           // seconds per measurement
  int repeats = 5;                 // measurements per setting
  double loop_visibility = 0.9867; // first-loop coherence
  int phases = 24;                 // phase points on [0, 2pi)
  double phase_offset = 0;         // grid shift, as a fraction of one step
  bool noiseless = false;          // use expected counts instead of sampling

  double budget() const { return mean_rate * duration; }
  std::vector<double> phase_grid() const;
  void validate() const;
};

/// Detectors in a phase-sweep count row.
enum class Channel : int { kDv = 0, kD0 = 1, kD1 = 2, kD2 = 3 };

/// Counts are integral when sampled; with NoiseModel::noiseless they are
/// expected values.
struct PhaseCounts {
  double phi = 0;
  std::vector<std::array<double, 4>> repeats;  // indexed by Channel
};

struct BlockedCounts {
  std::array<std::array<double, 2>, 3> n{};  // n[detector i][open path j] = N_ij
};

struct CountRecord {
  ExperimentConfig config;
  Strategy strategy = Strategy::kUqsd;
  NoiseModel noise;
  std::uint64_t seed = 0;
  WavePlateProgram<double> program;
  std::vector<PhaseCounts> phase_sweep;
  std::vector<BlockedCounts> blocked;  // one per repeat
  std::vector<Detector> active_detectors;

  bool is_active(Detector d) const;
};

/// Sample a full measurement campaign: the phase sweep with both paths
/// open, then each path blocked in turn, all repeated noise.repeats times.
/// Deterministic in (config, strategy, noise, seed).
CountRecord sample_counts(const ExperimentConfig& config, Strategy strategy,
                          const NoiseModel& noise, std::uint64_t seed);

struct Estimate {
  double value = 0;
  double sigma = 0;
};

/// Mean and sample standard deviation (n - 1); sigma is 0 for one sample.
Estimate mean_and_sigma(std::span<const double> samples);

/// (max N - min N) / (max N + min N) of the D_v counts across the sweep,
/// per repeat.
Estimate estimate_visibility(const CountRecord& record);

/// (N00 + N11) / ((N20 + N00) + (N21 + N11)), per repeat.
Estimate estimate_du(const CountRecord& record);

/// (N01 + N20 - N00 - N21) / (N01 + N20 + N00 + N21), per repeat.
Estimate estimate_dm(const CountRecord& record);

/// Plug-in mutual information (bits) from the blocked-run joint frequencies.
Estimate empirical_mutual_information(const CountRecord& record);

struct EstimateReport {
  Strategy strategy = Strategy::kUqsd;
  Estimate visibility;
  Estimate distinguishability;  // D_u or D_m
  Estimate relation;            // V + D_u  or  V^2 + D_m^2
};

EstimateReport make_report(const CountRecord& record);

/// Expected values under the same model the sampler uses.
struct ModelPrediction {
  double visibility = 0;         // loop_visibility * V
  double distinguishability = 0; // D_u or D_m
  double relation = 0;
};

ModelPrediction predict(const ExperimentConfig& config, Strategy strategy,
                        double loop_visibility);

}  // namespace duality
