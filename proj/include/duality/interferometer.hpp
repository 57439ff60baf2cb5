#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "duality/linalg.hpp"
#include "duality/optics.hpp"

namespace duality {

// First Sagnac loop: unbalanced split (H1 + PBS half of the cube), the
// which-way interaction (H2 in path 1, H3 in path 0), the phase plate and
// recombination on the NPBS half. Exit 0 of the NPBS is D_d (into the
// measurement loop), exit 1 is D_v.

namespace detail {
inline constexpr double kAngleSlack = 1e-12;
}

template <typename Scalar>
struct BasicExperimentConfig {
  Scalar theta_a = 0;          // H1 orientation; split ratio p2/p1 = tan^2(2 theta_a)
  Scalar theta_n = 0;          // H2 orientation; overlap <d1|d2> = sin(2 theta_n)
  Scalar phi = 0;              // phase plate, radians
  Scalar loop_visibility = 1;  // coherence factor on the path cross-term

  static BasicExperimentConfig from_ratios(Scalar tan2a, Scalar sin2n, Scalar phi = 0,
                                           Scalar loop_visibility = 1) {
    if (!(tan2a >= 0 && tan2a <= 1)) throw std::invalid_argument("tan2a must lie in [0, 1]");
    if (!(sin2n >= 0 && sin2n <= 1)) throw std::invalid_argument("sin2n must lie in [0, 1]");
    using std::asin;
    using std::atan;
    return {atan(tan2a) / 2, asin(sin2n) / 2, phi, loop_visibility};
  }

  Scalar tan2a() const { return std::tan(2 * theta_a); }
  Scalar sin2n() const { return std::sin(2 * theta_n); }

  void validate() const {
    constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
    if (!(theta_a >= -detail::kAngleSlack && theta_a <= kPi / 8 + detail::kAngleSlack))
      throw std::invalid_argument("theta_a outside [0, pi/8]: priors require p2 <= p1");
    if (!(theta_n >= -detail::kAngleSlack && theta_n <= kPi / 4 + detail::kAngleSlack))
      throw std::invalid_argument("theta_n outside [0, pi/4]");
    if (!std::isfinite(static_cast<double>(phi))) throw std::invalid_argument("phi not finite");
    if (!(loop_visibility >= 0 && loop_visibility <= 1))
      throw std::invalid_argument("loop_visibility outside [0, 1]");
  }
};

using ExperimentConfig = BasicExperimentConfig<double>;

template <typename Scalar>
struct SplitProbs {
  Scalar p1;
  Scalar p2;
};

template <typename Scalar = double>
SplitProbs<Scalar> split_probs(Scalar theta_a) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  if (!(theta_a >= -detail::kAngleSlack && theta_a <= kPi / 8 + detail::kAngleSlack))
    throw std::invalid_argument("theta_a outside [0, pi/8]: priors require p2 <= p1");
  using std::cos;
  using std::sin;
  const Scalar c = cos(2 * theta_a), s = sin(2 * theta_a);
  return {c * c, s * s};
}

template <typename Scalar>
struct WwdStates {
  Ket2<Scalar> d1;
  Ket2<Scalar> d2;
  Ket2<Scalar> d2_bar;
};

/// Final which-way-detector states: d1 = h, d2 = sin2n h - cos2n v,
/// d2_bar = sin2n h + cos2n v.
template <typename Scalar = double>
WwdStates<Scalar> wwd_states(Scalar theta_n) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  if (!(theta_n >= -detail::kAngleSlack && theta_n <= kPi / 4 + detail::kAngleSlack))
    throw std::invalid_argument("theta_n outside [0, pi/4]");
  using std::cos;
  using std::sin;
  const Scalar s = sin(2 * theta_n), c = cos(2 * theta_n);
  WwdStates<Scalar> w;
  w.d1 = ket_h<Scalar>();
  w.d2 = Ket2<Scalar>(s, -c);
  w.d2_bar = Ket2<Scalar>(s, c);
  return w;
}

/// Sub-normalized polarization states at the two NPBS exits.
template <typename Scalar>
struct OutputPair {
  Ket2<Scalar> psi_v;
  Ket2<Scalar> psi_d;
};

/// Closed-form output states of the first loop.
template <typename Scalar = double>
OutputPair<Scalar> evolve(const BasicExperimentConfig<Scalar>& config) {
  config.validate();
  using std::cos;
  using std::sin;
  using std::sqrt;
  const auto w = wwd_states(config.theta_n);
  const Scalar a0 = cos(2 * config.theta_a);
  const Complex<Scalar> a1 = std::polar(Scalar(1), config.phi) * sin(2 * config.theta_a);
  const Scalar r = 1 / sqrt(Scalar(2));
  OutputPair<Scalar> out;
  out.psi_v = r * (a0 * w.d1 - a1 * w.d2_bar);
  out.psi_d = r * (a0 * w.d1 + a1 * w.d2);
  return out;
}

/// Photon enters the cube on port 1, horizontally polarized.
template <typename Scalar = double>
Ket4<Scalar> first_loop_input() {
  return ket_path_pol<Scalar>(1, Polarization::kH);
}

/// H1 -> PBS -> {H3 in path 0, H2 in path 1} -> phase plate -> NPBS.
/// `open_path` inserts a beam block right before recombination.
template <typename Scalar = double>
std::vector<Element<Scalar>> first_loop_train(const BasicExperimentConfig<Scalar>& config,
                                              HwpFrame frame = HwpFrame::kLabelled,
                                              std::optional<int> open_path = std::nullopt) {
  std::vector<Element<Scalar>> train{
      HalfWavePlate<Scalar>{config.theta_a, 1, frame},  // H1
      PolarizingBeamSplitter{},
      HalfWavePlate<Scalar>{Scalar(0), 0, frame},        // H3
      HalfWavePlate<Scalar>{config.theta_n, 1, frame},  // H2
      Mirror{},
      PhasePlate<Scalar>{config.phi},
  };
  if (open_path) train.push_back(PathBlock{*open_path});
  train.push_back(NonPolarizingBeamSplitter{});
  return train;
}

/// Output states from composing the optical elements; must agree with
/// evolve() in the labelled frame.
template <typename Scalar = double>
OutputPair<Scalar> pipeline_output(const BasicExperimentConfig<Scalar>& config,
                                   HwpFrame frame = HwpFrame::kLabelled,
                                   std::optional<int> open_path = std::nullopt) {
  config.validate();
  const Ket4<Scalar> out = compose(first_loop_train(config, frame, open_path)) *
                           first_loop_input<Scalar>();
  return {out.template segment<2>(2), out.template segment<2>(0)};
}

/// V = 2 sqrt(p1 p2) sin(2 theta_n).
template <typename Scalar = double>
Scalar visibility_closed_form(Scalar theta_a, Scalar theta_n) {
  const auto p = split_probs(theta_a);
  using std::sin;
  using std::sqrt;
  return 2 * sqrt(p.p1 * p.p2) * sin(2 * theta_n);
}

/// Probability of a click at D_d, including the loop coherence factor.
template <typename Scalar = double>
Scalar detection_prob_dd(const BasicExperimentConfig<Scalar>& config) {
  config.validate();
  using std::cos;
  const Scalar v = visibility_closed_form(config.theta_a, config.theta_n);
  return (1 + config.loop_visibility * v * cos(config.phi)) / 2;
}

/// Probability of a click at D_v.
template <typename Scalar = double>
Scalar detection_prob_dv(const BasicExperimentConfig<Scalar>& config) {
  return 1 - detection_prob_dd(config);
}

}  // namespace duality
