#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "duality/interferometer.hpp"
#include "duality/linalg.hpp"
#include "duality/optics.hpp"

namespace duality {

// Which-way measurement: closed-form UQSD / minimum-error bounds, the
// wave-plate programs of the measurement loop, the POVMs they realize, and
// mutual information between the true path and the detector outcome.

enum class Strategy { kUqsd, kMed };

inline std::string_view to_string(Strategy s) { return s == Strategy::kUqsd ? "uqsd" : "med"; }

inline Strategy parse_strategy(std::string_view name) {
  if (name == "uqsd") return Strategy::kUqsd;
  if (name == "med") return Strategy::kMed;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

// Second-loop output modes in the composite basis. Arm 0 carries the
// H5 branch whose h output goes to D2; arm 1 is the recombined beam that
// H7 and the final PBS split into D0 (h) and D1 (v). (arm 0, v) is never
// populated from the input port.
enum class Detector : int { kD0 = 0, kD1 = 1, kD2 = 2 };

inline constexpr std::array<Detector, 3> kDetectors{Detector::kD0, Detector::kD1, Detector::kD2};

inline std::string detector_name(Detector d) {
  return "D" + std::to_string(static_cast<int>(d));
}

constexpr int detector_mode(Detector d) {
  switch (d) {
    case Detector::kD0: return composite_index(1, Polarization::kH);
    case Detector::kD1: return composite_index(1, Polarization::kV);
    case Detector::kD2: return composite_index(0, Polarization::kH);
  }
  return -1;
}

inline constexpr int kIdleMode = composite_index(0, Polarization::kV);

namespace detail {

inline constexpr double kPriorSlack = 1e-12;

template <typename Scalar>
void check_priors(Scalar p1, Scalar p2) {
  if (!(p1 >= 0 && p2 >= 0)) throw std::invalid_argument("priors must be nonnegative");
  if (std::abs(static_cast<double>(p1 + p2 - 1)) > 1e-9)
    throw std::invalid_argument("priors must sum to 1");
  if (p2 > p1 + Scalar(kPriorSlack)) throw std::invalid_argument("priors require p2 <= p1");
}

}  // namespace detail

/// Unambiguous-result probability when both outcomes can be concluded:
/// 1 - 2 sqrt(p1 p2) sin(2 theta_n).
template <typename Scalar = double>
Scalar uqsd_bound_balanced(Scalar p1, Scalar p2, Scalar theta_n) {
  using std::sin;
  using std::sqrt;
  return 1 - 2 * sqrt(p1 * p2) * sin(2 * theta_n);
}

/// Unambiguous-result probability when only path 0 can be concluded:
/// p1 (1 - sin^2(2 theta_n)).
template <typename Scalar = double>
Scalar uqsd_bound_one_sided(Scalar p1, Scalar theta_n) {
  using std::sin;
  const Scalar s = sin(2 * theta_n);
  return p1 * (1 - s * s);
}

/// Optimal UQSD success probability D_u. At p2/p1 == sin^2 both branches
/// agree; the balanced expression is used there.
template <typename Scalar = double>
Scalar uqsd_bound(Scalar p1, Scalar p2, Scalar theta_n) {
  detail::check_priors(p1, p2);
  using std::sin;
  const Scalar s = sin(2 * theta_n);
  if (p2 >= s * s * p1) return uqsd_bound_balanced(p1, p2, theta_n);
  return uqsd_bound_one_sided(p1, theta_n);
}

/// Helstrom bound on the correct-guess probability.
template <typename Scalar = double>
Scalar helstrom(Scalar p1, Scalar p2, Scalar theta_n) {
  detail::check_priors(p1, p2);
  using std::sin;
  using std::sqrt;
  const Scalar s = sin(2 * theta_n);
  const Scalar disc = 1 - 4 * p1 * p2 * s * s;
  return (1 + sqrt(disc < 0 ? Scalar(0) : disc)) / 2;
}

/// D_m = 2 P_r - 1.
template <typename Scalar = double>
Scalar dm_closed_form(Scalar p1, Scalar p2, Scalar theta_n) {
  return 2 * helstrom(p1, p2, theta_n) - 1;
}

/// H4..H7 orientations in the Jones frame.
template <typename Scalar = double>
struct WavePlateProgram {
  Scalar theta4 = 0;
  Scalar theta5 = 0;
  Scalar theta6 = std::numbers::pi_v<Scalar> / 4;
  Scalar theta7 = 0;
};

template <typename Scalar = double>
WavePlateProgram<Scalar> uqsd_program(Scalar theta_a, Scalar theta_n) {
  BasicExperimentConfig<Scalar>{theta_a, theta_n}.validate();
  using std::acos;
  using std::atan;
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  using std::tan;
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  const Scalar t = tan(2 * theta_a);
  const Scalar s = sin(2 * theta_n);
  const Scalar c = cos(2 * theta_n);

  WavePlateProgram<Scalar> prog;
  if (t > s) {
    // Rotate so the prior-weighted states share the same h component, split
    // that common part off with H5, then resolve the orthogonal remainder.
    prog.theta4 = atan((s - 1 / t) / c) / 2;
    Scalar arg = sqrt(t * s) / cos(2 * prog.theta4);
    if (arg > 1 + Scalar(1e-9) || arg < -1 - Scalar(1e-9))
      throw std::domain_error("uqsd_program: H5 arccos argument out of range");
    arg = std::clamp(arg, Scalar(-1), Scalar(1));
    prog.theta5 = acos(arg) / 2;
    // arccot(y / x) on (0, pi) with x = cos2t4 sin2t5 >= 0
    prog.theta7 = atan2(cos(2 * prog.theta4) * sin(2 * prog.theta5), sin(2 * prog.theta4)) / 2;
  } else {
    // Send d2 to h; only a v click is conclusive (path 0).
    prog.theta4 = theta_n - kPi / 4;
    prog.theta5 = 0;
    prog.theta7 = 0;
  }
  prog.theta6 = kPi / 4;
  return prog;
}

/// Rotation angle of the minimum-error measurement, before the quarter
/// mapping onto H4. Undefined when sin(4 theta_n) or p2 vanishes.
template <typename Scalar = double>
Scalar med_rotation_angle(Scalar theta_a, Scalar theta_n) {
  using std::atan;
  using std::cos;
  using std::sin;
  const Scalar ca = cos(2 * theta_a), sa = sin(2 * theta_a);
  const Scalar num = ca * ca + sa * sa * cos(4 * theta_n);
  const Scalar den = sa * sa * sin(4 * theta_n);
  if (den == 0) throw std::domain_error("med_rotation_angle: degenerate (sin4n == 0 or p2 == 0)");
  return atan(num / den);
}

template <typename Scalar = double>
WavePlateProgram<Scalar> med_program(Scalar theta_a, Scalar theta_n) {
  BasicExperimentConfig<Scalar>{theta_a, theta_n}.validate();
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  WavePlateProgram<Scalar> prog;
  using std::sin;
  const bool degenerate = std::abs(static_cast<double>(sin(4 * theta_n))) < 1e-14 ||
                          std::abs(static_cast<double>(sin(2 * theta_a))) < 1e-14;
  // h/v is optimal for orthogonal states, identical states, and p2 == 0.
  prog.theta4 = degenerate ? Scalar(0) : (kPi / 2 - med_rotation_angle(theta_a, theta_n)) / 4;
  prog.theta5 = 0;
  prog.theta6 = kPi / 4;
  prog.theta7 = 0;
  return prog;
}

template <typename Scalar = double>
WavePlateProgram<Scalar> program_for(Strategy strategy, Scalar theta_a, Scalar theta_n) {
  return strategy == Strategy::kUqsd ? uqsd_program(theta_a, theta_n)
                                     : med_program(theta_a, theta_n);
}

/// H4 -> PBS -> {H5 on arm 0, H6 on arm 1} -> PBS -> H7 on arm 1. The final
/// PBS in front of D0/D1 only separates modes that are already distinct.
template <typename Scalar = double>
std::vector<Element<Scalar>> second_loop_train(const WavePlateProgram<Scalar>& prog) {
  constexpr auto kJ = HwpFrame::kJones;
  return {
      HalfWavePlate<Scalar>{prog.theta4, 0, kJ},
      PolarizingBeamSplitter{},
      HalfWavePlate<Scalar>{prog.theta5, 0, kJ},
      HalfWavePlate<Scalar>{prog.theta6, 1, kJ},
      Mirror{},
      PolarizingBeamSplitter{},
      HalfWavePlate<Scalar>{prog.theta7, 1, kJ},
  };
}

template <typename Scalar = double>
Op4<Scalar> second_loop_unitary(const WavePlateProgram<Scalar>& prog) {
  return compose(second_loop_train(prog));
}

namespace detail {

inline std::string uqsd_meaning(Detector d) {
  switch (d) {
    case Detector::kD0: return "path 0";
    case Detector::kD1: return "path 1";
    case Detector::kD2: return "inconclusive";
  }
  return {};
}

inline std::string med_meaning(Detector d) {
  switch (d) {
    case Detector::kD0: return "guess path 1";
    case Detector::kD1: return "unused";
    case Detector::kD2: return "guess path 0";
  }
  return {};
}

}  // namespace detail

/// Measurement on the input polarization realized by the composed second
/// loop: E_k = |e_k><e_k| with e_k the input-arm part of U^dagger|mode_k>.
template <typename Scalar = double>
PovmSet<Scalar, 2> pipeline_povm(const WavePlateProgram<Scalar>& prog, Strategy strategy) {
  const Op4<Scalar> u = second_loop_unitary(prog);
  PovmSet<Scalar, 2> povm;
  for (Detector d : kDetectors) {
    const Ket2<Scalar> e = u.adjoint().col(detector_mode(d)).template head<2>();
    povm.elements.push_back({projector(e), detector_name(d),
                             strategy == Strategy::kUqsd ? detail::uqsd_meaning(d)
                                                         : detail::med_meaning(d)});
  }
  return povm;
}

/// Measurement basis written out operator by operator:
///   q1 = R4^+ (P_v sx P_h + P_h R5^+ P_v) R7^+ |h>
///   q2 = R4^+ P_h R5^+ |h>
///   q3 = R4^+ (P_v sx P_h + P_h R5^+ P_v) R7^+ |v>
/// evaluated on the polarization of the input arm.
template <typename Scalar = double>
std::array<Ket2<Scalar>, 3> literal_uqsd_vectors(const WavePlateProgram<Scalar>& prog) {
  const Op2<Scalar> r4 = jones_hwp(prog.theta4).adjoint();
  const Op2<Scalar> r5 = jones_hwp(prog.theta5).adjoint();
  const Op2<Scalar> r7 = jones_hwp(prog.theta7).adjoint();
  const Op2<Scalar> ph = projector(ket_h<Scalar>());
  const Op2<Scalar> pv = projector(ket_v<Scalar>());
  const Op2<Scalar> recombine = pv * sigma_x<Scalar>() * ph + ph * r5 * pv;
  return {r4 * recombine * r7 * ket_h<Scalar>(), r4 * ph * r5 * ket_h<Scalar>(),
          r4 * recombine * r7 * ket_v<Scalar>()};
}

/// d1 = alpha q1 + beta q2, d2 = gamma q3 + delta q2 in the dilated space.
template <typename Scalar = double>
struct UqsdDecomposition {
  Complex<Scalar> alpha, beta, gamma, delta;
  Ket4<Scalar> q1, q2, q3;
};

template <typename Scalar = double>
struct UqsdMeasurement {
  WavePlateProgram<Scalar> program;
  PovmSet<Scalar, 2> povm;     // on polarization: D0, D1, D2
  PovmSet<Scalar, 4> dilated;  // |q_j><q_j| plus the idle mode, sums to I4
  UqsdDecomposition<Scalar> decomposition;
  double construction_mismatch = 0;  // literal vs pipeline, max entry
  bool pipeline_fallback = false;
};

template <typename Scalar = double>
UqsdMeasurement<Scalar> uqsd_povm(const WavePlateProgram<Scalar>& prog, Scalar theta_a,
                                  Scalar theta_n) {
  BasicExperimentConfig<Scalar>{theta_a, theta_n}.validate();
  UqsdMeasurement<Scalar> m;
  m.program = prog;

  // Literal construction; q1 <-> D0, q2 <-> D2, q3 <-> D1.
  const auto q = literal_uqsd_vectors(prog);
  PovmSet<Scalar, 2> literal;
  literal.elements.push_back({projector(q[0]), "D0", detail::uqsd_meaning(Detector::kD0)});
  literal.elements.push_back({projector(q[2]), "D1", detail::uqsd_meaning(Detector::kD1)});
  literal.elements.push_back({projector(q[1]), "D2", detail::uqsd_meaning(Detector::kD2)});

  const PovmSet<Scalar, 2> physical = pipeline_povm(prog, Strategy::kUqsd);
  double mismatch = 0;
  for (std::size_t k = 0; k < literal.size(); ++k)
    mismatch = std::max(mismatch,
                        static_cast<double>(max_abs(literal[k].op - physical[k].op)));
  m.construction_mismatch = mismatch;

  const auto report = validate_povm(literal);
  m.pipeline_fallback = !report.valid(1e-8, 1e-8) || mismatch > 1e-8;
  m.povm = m.pipeline_fallback ? physical : literal;

  // Dilated orthonormal basis from the unitary.
  const Op4<Scalar> u = second_loop_unitary(prog);
  const Op4<Scalar> ud = u.adjoint();
  auto& dec = m.decomposition;
  dec.q1 = ud.col(detector_mode(Detector::kD0));
  dec.q2 = ud.col(detector_mode(Detector::kD2));
  dec.q3 = ud.col(detector_mode(Detector::kD1));
  const auto w = wwd_states(theta_n);
  const Ket4<Scalar> in1 = kron(ket_path<Scalar>(0), w.d1);
  const Ket4<Scalar> in2 = kron(ket_path<Scalar>(0), w.d2);
  dec.alpha = dec.q1.dot(in1);
  dec.beta = dec.q2.dot(in1);
  dec.gamma = dec.q3.dot(in2);
  dec.delta = dec.q2.dot(in2);

  m.dilated.elements.push_back({projector(dec.q1), "D0", detail::uqsd_meaning(Detector::kD0)});
  m.dilated.elements.push_back({projector(dec.q3), "D1", detail::uqsd_meaning(Detector::kD1)});
  m.dilated.elements.push_back({projector(dec.q2), "D2", detail::uqsd_meaning(Detector::kD2)});
  m.dilated.elements.push_back(
      {projector(ud.col(kIdleMode).eval()), "idle", "never populated from the input port"});
  return m;
}

/// Two-outcome minimum-error measurement: h after H4 -> D2 (guess path 0),
/// v after H4 -> D0 (guess path 1).
template <typename Scalar = double>
PovmSet<Scalar, 2> med_projectors(Scalar theta4) {
  const Op2<Scalar> r = jones_hwp(theta4);
  PovmSet<Scalar, 2> povm;
  povm.elements.push_back(
      {r.adjoint() * projector(ket_h<Scalar>()) * r, "D2", detail::med_meaning(Detector::kD2)});
  povm.elements.push_back(
      {r.adjoint() * projector(ket_v<Scalar>()) * r, "D0", detail::med_meaning(Detector::kD0)});
  return povm;
}

/// Measurement used for a strategy at the given angles.
template <typename Scalar = double>
PovmSet<Scalar, 2> strategy_povm(Strategy strategy, Scalar theta_a, Scalar theta_n) {
  if (strategy == Strategy::kUqsd)
    return uqsd_povm(uqsd_program(theta_a, theta_n), theta_a, theta_n).povm;
  return med_projectors(med_program(theta_a, theta_n).theta4);
}

enum class PathCondition { kPath0, kPath1, kBoth };

/// P(outcome k | path j) = Tr(rho_j E_k) with rho_j = |d_j><d_j|.
template <typename Scalar = double>
struct DiscriminationOutcome {
  std::vector<std::string> labels;
  std::vector<std::array<Scalar, 2>> given_path;  // [outcome][path]
  std::array<Scalar, 2> priors{};

  std::size_t index(const std::string& label) const {
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (labels[k] == label) return k;
    throw std::out_of_range("no outcome labelled " + label);
  }
  Scalar conditional(const std::string& label, int path) const {
    return given_path[index(label)][path];
  }
  Scalar row_sum(int path) const {
    Scalar s = 0;
    for (const auto& row : given_path) s += row[path];
    return s;
  }
  Scalar joint(std::size_t k, int path) const { return priors[path] * given_path[k][path]; }
  Scalar marginal(std::size_t k) const { return joint(k, 0) + joint(k, 1); }

  std::vector<Scalar> distribution(PathCondition condition) const {
    std::vector<Scalar> out;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      switch (condition) {
        case PathCondition::kPath0: out.push_back(given_path[k][0]); break;
        case PathCondition::kPath1: out.push_back(given_path[k][1]); break;
        case PathCondition::kBoth: out.push_back(marginal(k)); break;
      }
    }
    return out;
  }
};

template <typename Scalar = double>
DiscriminationOutcome<Scalar> outcome_probabilities(const PovmSet<Scalar, 2>& povm,
                                                    Scalar theta_a, Scalar theta_n) {
  if (!validate_povm(povm).valid(1e-9, 1e-9))
    throw std::invalid_argument("outcome_probabilities: invalid POVM");
  const auto p = split_probs(theta_a);
  const auto w = wwd_states(theta_n);
  DiscriminationOutcome<Scalar> out;
  out.priors = {p.p1, p.p2};
  for (const auto& e : povm.elements) {
    out.labels.push_back(e.label);
    out.given_path.push_back({expectation<Scalar, 2>(e.op, w.d1), expectation<Scalar, 2>(e.op, w.d2)});
  }
  return out;
}

template <typename Scalar = double>
std::vector<Scalar> outcome_probabilities(const PovmSet<Scalar, 2>& povm, Scalar theta_a,
                                          Scalar theta_n, PathCondition condition) {
  return outcome_probabilities(povm, theta_a, theta_n).distribution(condition);
}

/// p1 P(D0|0) + p2 P(D1|1) for a UQSD measurement.
template <typename Scalar = double>
Scalar unambiguous_probability(const DiscriminationOutcome<Scalar>& o) {
  return o.priors[0] * o.conditional("D0", 0) + o.priors[1] * o.conditional("D1", 1);
}

/// p1 P(D2|0) + p2 P(D0|1) for a minimum-error measurement.
template <typename Scalar = double>
Scalar correct_guess_probability(const DiscriminationOutcome<Scalar>& o) {
  return o.priors[0] * o.conditional("D2", 0) + o.priors[1] * o.conditional("D0", 1);
}

/// Mutual information, in bits, between the prepared pure state and the
/// measurement outcome. Terms with Tr(rho_i pi_j) == 0 contribute 0.
template <typename Scalar = double>
Scalar mutual_information(std::span<const Scalar> priors, std::span<const Ket2<Scalar>> states,
                          const PovmSet<Scalar, 2>& povm) {
  if (priors.size() != states.size() || priors.empty())
    throw std::invalid_argument("mutual_information: priors and states differ in length");
  Scalar total_prior = 0;
  for (Scalar p : priors) total_prior += p;
  if (std::abs(static_cast<double>(total_prior - 1)) > 1e-9)
    throw std::invalid_argument("mutual_information: priors must sum to 1");
  using std::log2;
  Scalar info = 0;
  for (const auto& e : povm.elements) {
    Scalar marginal = 0;
    std::vector<Scalar> cond;
    for (std::size_t i = 0; i < states.size(); ++i) {
      cond.push_back(std::max(Scalar(0), expectation<Scalar, 2>(e.op, states[i])));
      marginal += priors[i] * cond.back();
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
      const Scalar joint = priors[i] * cond[i];
      if (joint <= 0) continue;
      if (marginal <= 0) throw std::logic_error("mutual_information: zero marginal with mass");
      info += joint * log2(cond[i] / marginal);
    }
  }
  return info;
}

/// Mutual information of a strategy at the given angles.
template <typename Scalar = double>
Scalar strategy_mutual_information(Strategy strategy, Scalar theta_a, Scalar theta_n) {
  const auto p = split_probs(theta_a);
  const auto w = wwd_states(theta_n);
  const std::array<Scalar, 2> priors{p.p1, p.p2};
  const std::array<Ket2<Scalar>, 2> states{w.d1, w.d2};
  return mutual_information<Scalar>(priors, states, strategy_povm(strategy, theta_a, theta_n));
}

// Whole-setup detection: first loop, D_v, then the measurement loop.

template <typename Scalar = double>
struct SetupProbabilities {
  Scalar dv = 0;
  std::array<Scalar, 3> d{};  // indexed by Detector
  Scalar lost = 0;            // absorbed by a path block

  Scalar at(Detector k) const { return d[static_cast<int>(k)]; }
};

/// Click probabilities for the full apparatus. With `open_path` set the other
/// arm of the first loop is blocked. The first-loop coherence factor
/// multiplies every cross-term between the two path branches.
template <typename Scalar = double>
SetupProbabilities<Scalar> setup_detection_probabilities(
    const BasicExperimentConfig<Scalar>& config, const WavePlateProgram<Scalar>& prog,
    std::optional<int> open_path = std::nullopt) {
  config.validate();
  const Op4<Scalar> u2 = second_loop_unitary(prog);

  // Amplitudes per branch: [0..1] = D_v modes, [2..5] = measurement-loop modes.
  std::array<Eigen::Matrix<Complex<Scalar>, 6, 1>, 2> branch;
  for (int j = 0; j < 2; ++j) {
    const auto out = pipeline_output(config, HwpFrame::kLabelled, j);
    branch[j].template head<2>() = out.psi_v;
    branch[j].template tail<4>() = u2 * kron(ket_path<Scalar>(0), out.psi_d);
  }

  auto mode_prob = [&](int mode) -> Scalar {
    const Complex<Scalar> a0 = branch[0](mode), a1 = branch[1](mode);
    if (open_path) return std::norm(*open_path == 0 ? a0 : a1);
    return std::norm(a0) + std::norm(a1) +
           2 * config.loop_visibility * std::real(std::conj(a0) * a1);
  };

  SetupProbabilities<Scalar> p;
  p.dv = mode_prob(0) + mode_prob(1);
  for (Detector k : kDetectors) p.d[static_cast<int>(k)] = mode_prob(2 + detector_mode(k));
  const Scalar total = p.dv + p.d[0] + p.d[1] + p.d[2] + mode_prob(2 + kIdleMode);
  p.lost = std::max(Scalar(0), 1 - total);
  return p;
}

}  // namespace duality
