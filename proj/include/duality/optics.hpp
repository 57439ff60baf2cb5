#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include "duality/linalg.hpp"

namespace duality {

// Jones-calculus elements. Two half-wave-plate frames are in use:
//
//   kJones     the textbook matrix  [[cos2t,  sin2t], [ sin2t, -cos2t]]
//   kLabelled  the first-loop frame [[sin2t, -cos2t], [-cos2t, -sin2t]]
//
// kLabelled(t) == kJones(t - pi/4). In the labelled frame a plate at t sends
// |h> to sin2t|h> - cos2t|v>, which is how H1, H2 and H3 are specified. The
// second-loop plates H4..H7 are specified in the Jones frame (H6 at 45 deg is
// sigma_x there).
enum class HwpFrame { kLabelled, kJones };

template <typename Scalar = double>
Op2<Scalar> jones_hwp(Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(2 * theta), s = sin(2 * theta);
  Op2<Scalar> m;
  m << c, s, s, -c;
  return m;
}

template <typename Scalar = double>
Op2<Scalar> hwp(Scalar theta, HwpFrame frame = HwpFrame::kLabelled) {
  if (frame == HwpFrame::kJones) return jones_hwp(theta);
  using std::cos;
  using std::sin;
  const Scalar c = cos(2 * theta), s = sin(2 * theta);
  Op2<Scalar> m;
  m << s, -c, -c, -s;
  return m;
}

/// Wave-plate orientation folded into (-pi/2, pi/2]; a half-wave plate is
/// pi-periodic in its orientation.
template <typename Scalar = double>
Scalar normalize_orientation(Scalar theta) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  Scalar t = std::fmod(theta, kPi);
  if (t <= -kPi / 2) t += kPi;
  if (t > kPi / 2) t -= kPi;
  return t;
}

template <typename Scalar = double>
struct WavePlateSetting {
  Scalar orientation = 0;  // radians, in (-pi/2, pi/2]

  WavePlateSetting() = default;
  explicit WavePlateSetting(Scalar radians) : orientation(normalize_orientation(radians)) {}

  static WavePlateSetting from_degrees(Scalar degrees) {
    return WavePlateSetting(degrees * std::numbers::pi_v<Scalar> / 180);
  }
  Scalar degrees() const { return orientation * 180 / std::numbers::pi_v<Scalar>; }
};

/// Lift a polarization operator onto one arm; the other arm is untouched.
template <typename Scalar = double>
Op4<Scalar> on_arm(int arm, const Op2<Scalar>& op) {
  if (arm != 0 && arm != 1) throw std::invalid_argument("arm index must be 0 or 1");
  const Op2<Scalar> p_arm = projector(ket_path<Scalar>(arm));
  const Op2<Scalar> p_other = projector(ket_path<Scalar>(1 - arm));
  return kron(p_arm, op) + kron(p_other, Op2<Scalar>::Identity().eval());
}

/// Different polarization operators on the two arms.
template <typename Scalar = double>
Op4<Scalar> per_arm(const Op2<Scalar>& arm0, const Op2<Scalar>& arm1) {
  return kron(projector(ket_path<Scalar>(0)), arm0) + kron(projector(ket_path<Scalar>(1)), arm1);
}

/// Polarizing splitter: h is transmitted and keeps its path index, v is
/// reflected into the other path.
template <typename Scalar = double>
Op4<Scalar> pbs() {
  const Op2<Scalar> id = Op2<Scalar>::Identity();
  return kron(id, projector(ket_h<Scalar>())) + kron(sigma_x<Scalar>(), projector(ket_v<Scalar>()));
}

/// Balanced non-polarizing splitter.
///   out0 = (in0 + in1) / sqrt2
///   out1 = sigma_z (in0 - in1) / sqrt2
/// The sigma_z on the second exit is the reflection convention that makes
/// exit 1 carry the conjugate-partner state d2_bar.
template <typename Scalar = double>
Op4<Scalar> npbs() {
  using std::sqrt;
  const Op2<Scalar> id = Op2<Scalar>::Identity();
  const Op2<Scalar> sz = sigma_z<Scalar>();
  Op4<Scalar> m;
  m.template block<2, 2>(0, 0) = id;
  m.template block<2, 2>(0, 2) = id;
  m.template block<2, 2>(2, 0) = sz;
  m.template block<2, 2>(2, 2) = -sz;
  return m / Scalar(sqrt(Scalar(2)));
}

/// e^{i phi} on path 1.
template <typename Scalar = double>
Op4<Scalar> phase_plate(Scalar phi) {
  const Op2<Scalar> path_phase =
      Eigen::DiagonalMatrix<Complex<Scalar>, 2>(Complex<Scalar>(1), std::polar(Scalar(1), phi));
  return kron(path_phase, Op2<Scalar>::Identity().eval());
}

/// Mirrors are identity; their reflection signs live in the pinned
/// conventions of the splitters and plates.
template <typename Scalar = double>
Op4<Scalar> mirror() {
  return Op4<Scalar>::Identity();
}

/// Keeps only path `open`; the other arm is blocked (amplitude absorbed).
template <typename Scalar = double>
Op4<Scalar> path_block(int open) {
  return kron(projector(ket_path<Scalar>(open)), Op2<Scalar>::Identity().eval());
}

// Optical train elements.

template <typename Scalar = double>
struct HalfWavePlate {
  Scalar theta = 0;
  int arm = 0;
  HwpFrame frame = HwpFrame::kLabelled;
};

struct PolarizingBeamSplitter {};
struct NonPolarizingBeamSplitter {};

template <typename Scalar = double>
struct PhasePlate {
  Scalar phi = 0;
};

struct Mirror {};

struct PathBlock {
  int open = 0;
};

template <typename Scalar = double>
using Element = std::variant<HalfWavePlate<Scalar>, PolarizingBeamSplitter,
                             NonPolarizingBeamSplitter, PhasePlate<Scalar>, Mirror, PathBlock>;

template <typename Scalar = double>
Op4<Scalar> element_matrix(const Element<Scalar>& element) {
  return std::visit(
      [](const auto& e) -> Op4<Scalar> {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, HalfWavePlate<Scalar>>)
          return on_arm<Scalar>(e.arm, hwp<Scalar>(e.theta, e.frame));
        else if constexpr (std::is_same_v<T, PolarizingBeamSplitter>)
          return pbs<Scalar>();
        else if constexpr (std::is_same_v<T, NonPolarizingBeamSplitter>)
          return npbs<Scalar>();
        else if constexpr (std::is_same_v<T, PhasePlate<Scalar>>)
          return phase_plate<Scalar>(e.phi);
        else if constexpr (std::is_same_v<T, Mirror>)
          return mirror<Scalar>();
        else
          return path_block<Scalar>(e.open);
      },
      element);
}

/// Product of the train, first element applied first.
template <typename Scalar = double>
Op4<Scalar> compose(std::span<const Element<Scalar>> train) {
  Op4<Scalar> u = Op4<Scalar>::Identity();
  for (const auto& e : train) u = element_matrix<Scalar>(e) * u;
  return u;
}

template <typename Scalar = double>
Op4<Scalar> compose(const std::vector<Element<Scalar>>& train) {
  return compose<Scalar>(std::span<const Element<Scalar>>(train));
}

}  // namespace duality
