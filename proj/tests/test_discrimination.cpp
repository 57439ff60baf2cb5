#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "duality/discrimination.hpp"
#include "oracles.hpp"

using namespace duality;

namespace {

constexpr double kPi = std::numbers::pi;

struct Frozen {
  double tan2a, sin2n, p1, v, pr, du;
};

// Brute-force oracle output, kept as literals.
const Frozen kFrozen[] = {
    {0.38, 0.2, 0.873820342538, 0.132820692066, 0.995570041407, 0.8671793079},
    {0.28, 0.9, 0.927299703264, 0.467359050445, 0.942033799038, 0.1761869436},
    {1.0, 0.2, 0.5, 0.2, 0.989897948557, 0.8},
    {0.1, 0.9, 0.990099009901, 0.178217821782, 0.991995530467, 0.1881188119},
    {0.5, 0.9, 0.8, 0.72, 0.846987031458, 0.152},
    {0.8, 0.9, 0.609756097561, 0.878048780488, 0.739285571590, 0.1158536585},
};

ExperimentConfig at(double tan2a, double sin2n) { return ExperimentConfig::from_ratios(tan2a, sin2n); }

DiscriminationOutcome<double> outcomes(Strategy s, const ExperimentConfig& c) {
  return outcome_probabilities(strategy_povm(s, c.theta_a, c.theta_n), c.theta_a, c.theta_n);
}

std::vector<ExperimentConfig> random_configs(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ExperimentConfig> out;
  for (int i = 0; i < n; ++i) out.push_back(at(u(rng), u(rng)));
  return out;
}

}  // namespace

TEST(UqsdBound, Examples) {
  EXPECT_EQ(uqsd_bound(0.7, 0.3, 0.0), 1.0);
  EXPECT_NEAR(uqsd_bound(0.5, 0.5, std::asin(0.2) / 2), 0.8, 1e-15);
  for (const auto& f : kFrozen) {
    const auto c = at(f.tan2a, f.sin2n);
    const auto p = split_probs(c.theta_a);
    EXPECT_NEAR(p.p1, f.p1, 1e-12);
    EXPECT_NEAR(uqsd_bound(p.p1, p.p2, c.theta_n), f.du, 1e-10);
  }
}

TEST(UqsdBound, OneSidedBranchAtTan028Sin09) {
  const auto c = at(0.28, 0.9);
  const auto p = split_probs(c.theta_a);
  EXPECT_LT(p.p2, 0.81 * p.p1);
  EXPECT_NEAR(uqsd_bound(p.p1, p.p2, c.theta_n), uqsd_bound_one_sided(p.p1, c.theta_n), 0);
  EXPECT_NEAR(uqsd_bound(p.p1, p.p2, c.theta_n), 0.1762, 5e-5);
}

TEST(UqsdBound, RejectsBadPriors) {
  EXPECT_THROW(uqsd_bound(0.3, 0.7, 0.1), std::invalid_argument);
  EXPECT_THROW(uqsd_bound(-0.1, 0.1, 0.1), std::invalid_argument);
  EXPECT_THROW(helstrom(0.3, 0.7, 0.1), std::invalid_argument);
}

TEST(UqsdBound, MatchesBruteForceOracle) {
  for (const auto& f : kFrozen) {
    const auto pr = oracle::problem(f.tan2a, f.sin2n);
    EXPECT_NEAR(oracle::uqsd_search(pr), f.du, 1e-8) << f.tan2a << " " << f.sin2n;
  }
  for (const auto& c : random_configs(30, 17)) {
    const auto p = split_probs(c.theta_a);
    const auto pr = oracle::problem(c.tan2a(), c.sin2n());
    EXPECT_NEAR(oracle::uqsd_search(pr), uqsd_bound(p.p1, p.p2, c.theta_n), 1e-8);
  }
}

TEST(UqsdBound, ContinuousAtBranchPoint) {
  for (double t : {0.05, 0.2, 0.5, 0.77, 1.0}) {
    const auto c = at(t, t);
    const auto p = split_probs(c.theta_a);
    const double a = uqsd_bound_balanced(p.p1, p.p2, c.theta_n);
    const double b = uqsd_bound_one_sided(p.p1, c.theta_n);
    EXPECT_NEAR(a, b, 1e-12);
    EXPECT_NEAR(a, p.p1 - p.p2, 1e-12);
  }
}

TEST(Helstrom, Examples) {
  EXPECT_EQ(helstrom(0.6, 0.4, 0.0), 1.0);
  EXPECT_NEAR(helstrom(0.5, 0.5, kPi / 4), 0.5, 1e-15);
  const auto c = at(0.38, 0.2);
  const auto p = split_probs(c.theta_a);
  EXPECT_NEAR(helstrom(p.p1, p.p2, c.theta_n), 0.995570041407, 1e-11);
}

TEST(Helstrom, MatchesGridSearchOracle) {
  for (const auto& f : kFrozen) {
    const auto c = at(f.tan2a, f.sin2n);
    const auto p = split_probs(c.theta_a);
    EXPECT_NEAR(helstrom(p.p1, p.p2, c.theta_n), f.pr, 1e-11);
    EXPECT_NEAR(oracle::helstrom_search(oracle::problem(f.tan2a, f.sin2n)), f.pr, 1e-10);
  }
}

TEST(Dm, Examples) {
  EXPECT_EQ(dm_closed_form(0.6, 0.4, 0.0), 1.0);
  EXPECT_NEAR(dm_closed_form(0.5, 0.5, kPi / 4), 0.0, 1e-15);
  const auto c = at(0.38, 0.2);
  const auto p = split_probs(c.theta_a);
  EXPECT_NEAR(dm_closed_form(p.p1, p.p2, c.theta_n), 0.991140082813, 1e-11);
  EXPECT_NEAR(dm_closed_form(p.p1, p.p2, c.theta_n), std::sqrt(1 - 0.132820692066 * 0.132820692066),
              1e-11);
}

TEST(UqsdProgram, SymmetricOrthogonal) {
  const auto prog = uqsd_program(kPi / 8, 0.0);
  EXPECT_NEAR(prog.theta4, -kPi / 8, 1e-15);
  EXPECT_NEAR(prog.theta5, kPi / 4, 1e-15);
  EXPECT_NEAR(prog.theta6, kPi / 4, 0);
  const auto o = outcomes(Strategy::kUqsd, ExperimentConfig{kPi / 8, 0.0});
  EXPECT_NEAR(o.marginal(o.index("D2")), 0.0, 1e-15);
}

TEST(UqsdProgram, Tan038Sin02AttainsBoundAndInconclusiveIsVisibility) {
  const auto c = at(0.38, 0.2);
  const auto o = outcomes(Strategy::kUqsd, c);
  EXPECT_NEAR(unambiguous_probability(o), 0.8671793079, 1e-10);
  EXPECT_NEAR(o.marginal(o.index("D2")), 0.132820692066, 1e-10);
}

TEST(UqsdProgram, BothBranchProgramsAgreeAtBoundary) {
  for (double t : {0.2, 0.6, 0.95}) {
    const auto lo = at(t * (1 - 1e-9), t), hi = at(t * (1 + 1e-9), t);
    const double du_lo = unambiguous_probability(outcomes(Strategy::kUqsd, lo));
    const double du_hi = unambiguous_probability(outcomes(Strategy::kUqsd, hi));
    EXPECT_NEAR(du_lo, du_hi, 1e-7);
  }
}

TEST(UqsdProgram, AttainsBoundOnRandomGrid) {
  for (const auto& c : random_configs(300, 5)) {
    const auto p = split_probs(c.theta_a);
    const auto o = outcomes(Strategy::kUqsd, c);
    EXPECT_NEAR(unambiguous_probability(o), uqsd_bound(p.p1, p.p2, c.theta_n), 1e-9);
    EXPECT_LT(o.conditional("D1", 0), 1e-10);
    EXPECT_LT(o.conditional("D0", 1), 1e-10);
  }
}

TEST(UqsdProgram, Tan028Sin09NeverConfusesPath0) {
  const auto o = outcomes(Strategy::kUqsd, at(0.28, 0.9));
  EXPECT_LT(o.conditional("D1", 0), 1e-15);
}

TEST(UqsdPovm, ValidAndDilationComplete) {
  const auto c = at(0.38, 0.2);
  const auto m = uqsd_povm(uqsd_program(c.theta_a, c.theta_n), c.theta_a, c.theta_n);
  EXPECT_LT(validate_povm(m.povm).completeness_residual, 1e-10);
  EXPECT_TRUE(validate_povm(m.povm).valid());
  EXPECT_TRUE(validate_povm(m.dilated).valid());
  EXPECT_FALSE(m.pipeline_fallback);
  EXPECT_LT(m.construction_mismatch, 1e-12);
}

TEST(UqsdPovm, OrthogonalHasNoInconclusiveAmplitude) {
  for (double t : {0.3, 1.0}) {
    const auto c = at(t, 0.0);
    const auto m = uqsd_povm(uqsd_program(c.theta_a, c.theta_n), c.theta_a, c.theta_n);
    EXPECT_LT(std::abs(m.decomposition.beta), 1e-15);
    EXPECT_LT(std::abs(m.decomposition.delta), 1e-15);
    EXPECT_LT(max_abs(m.povm.find("D2").op), 1e-15);
  }
}

TEST(UqsdPovm, DecompositionReconstructsStates) {
  for (const auto& c : random_configs(50, 9)) {
    const auto m = uqsd_povm(uqsd_program(c.theta_a, c.theta_n), c.theta_a, c.theta_n);
    const auto& d = m.decomposition;
    const auto w = wwd_states(c.theta_n);
    const Ket4d in1 = kron(ket_path(0), w.d1), in2 = kron(ket_path(0), w.d2);
    EXPECT_LT(max_abs(d.alpha * d.q1 + d.beta * d.q2 - in1), 1e-12);
    EXPECT_LT(max_abs(d.gamma * d.q3 + d.delta * d.q2 - in2), 1e-12);
  }
}

TEST(UqsdPovm, LiteralFormulasMatchPipeline) {
  for (const auto& c : random_configs(300, 23)) {
    const auto m = uqsd_povm(uqsd_program(c.theta_a, c.theta_n), c.theta_a, c.theta_n);
    EXPECT_LT(m.construction_mismatch, 1e-10);
    EXPECT_FALSE(m.pipeline_fallback);
  }
}

TEST(SecondLoop, Unitary) {
  for (const auto& c : random_configs(50, 31))
    for (auto s : {Strategy::kUqsd, Strategy::kMed})
      EXPECT_TRUE(is_unitary(second_loop_unitary(program_for(s, c.theta_a, c.theta_n))));
}

TEST(MedProgram, Endpoints) {
  const auto orth = outcomes(Strategy::kMed, at(0.6, 0.0));
  EXPECT_NEAR(correct_guess_probability(orth), 1.0, 1e-15);
  const auto c = at(0.6, 1.0);
  const auto p = split_probs(c.theta_a);
  EXPECT_NEAR(correct_guess_probability(outcomes(Strategy::kMed, c)), std::max(p.p1, p.p2), 1e-15);
}

TEST(MedProgram, Tan038Sin02AttainsHelstrom) {
  EXPECT_NEAR(correct_guess_probability(outcomes(Strategy::kMed, at(0.38, 0.2))), 0.995570041407,
              1e-10);
}

TEST(MedProgram, AttainsHelstromOnRandomGrid) {
  for (const auto& c : random_configs(300, 41)) {
    const auto p = split_probs(c.theta_a);
    EXPECT_NEAR(correct_guess_probability(outcomes(Strategy::kMed, c)),
                helstrom(p.p1, p.p2, c.theta_n), 1e-9);
  }
}

TEST(MedProgram, RotationAngleDegenerate) {
  EXPECT_THROW(med_rotation_angle(0.0, 0.3), std::domain_error);
  EXPECT_NO_THROW(med_program(0.0, 0.3));
}

TEST(MedProjectors, ZeroAngleIsHv) {
  const auto povm = med_projectors(0.0);
  EXPECT_LT(max_abs(povm.find("D2").op - projector(ket_h())), 1e-15);
  EXPECT_LT(max_abs(povm.find("D0").op - projector(ket_v())), 1e-15);
  EXPECT_TRUE(validate_povm(povm).valid());
}

TEST(MedProjectors, MatchPipelineMeasurement) {
  for (const auto& c : random_configs(50, 43)) {
    const auto prog = med_program(c.theta_a, c.theta_n);
    const auto lit = med_projectors(prog.theta4);
    const auto pipe = pipeline_povm(prog, Strategy::kMed);
    for (const char* label : {"D0", "D2"})
      EXPECT_LT(max_abs(lit.find(label).op - pipe.find(label).op), 1e-12);
  }
}

TEST(Outcomes, IdenticalStatesCarryNoInformation) {
  for (auto s : {Strategy::kUqsd, Strategy::kMed}) {
    const auto o = outcomes(s, at(0.4, 1.0));
    for (std::size_t k = 0; k < o.labels.size(); ++k)
      EXPECT_NEAR(o.given_path[k][0], o.given_path[k][1], 1e-12);
  }
}

TEST(Outcomes, OrthogonalUqsdIsDiagonal) {
  const auto o = outcomes(Strategy::kUqsd, at(0.7, 0.0));
  EXPECT_NEAR(o.conditional("D0", 0), 1.0, 1e-15);
  EXPECT_NEAR(o.conditional("D1", 1), 1.0, 1e-15);
  EXPECT_NEAR(o.conditional("D2", 0) + o.conditional("D2", 1), 0.0, 1e-15);
}

TEST(Outcomes, RowsSumToOne) {
  for (const auto& c : random_configs(100, 47))
    for (auto s : {Strategy::kUqsd, Strategy::kMed}) {
      const auto o = outcomes(s, c);
      EXPECT_NEAR(o.row_sum(0), 1.0, 1e-12);
      EXPECT_NEAR(o.row_sum(1), 1.0, 1e-12);
      for (const auto& row : o.given_path) {
        EXPECT_GE(row[0], -1e-15);
        EXPECT_GE(row[1], -1e-15);
      }
    }
}

TEST(Outcomes, RejectsInvalidPovm) {
  PovmSet<double, 2> bad;
  bad.elements = {{projector(ket_h()), "D0", ""}};
  EXPECT_THROW(outcome_probabilities(bad, 0.1, 0.1), std::invalid_argument);
}

TEST(MutualInformation, Endpoints) {
  for (auto s : {Strategy::kUqsd, Strategy::kMed})
    EXPECT_NEAR(strategy_mutual_information(s, 0.2, kPi / 4), 0.0, 1e-12);
  const auto c = at(0.6, 0.0);
  const auto p = split_probs(c.theta_a);
  EXPECT_NEAR(strategy_mutual_information(Strategy::kMed, c.theta_a, c.theta_n),
              oracle::binary_entropy(p.p1), 1e-12);
}

TEST(MutualInformation, SymmetricClosedForms) {
  const auto c = at(1.0, 0.9);
  EXPECT_NEAR(strategy_mutual_information(Strategy::kUqsd, c.theta_a, c.theta_n), 0.1, 1e-12);
  const double pr = (1 + std::sqrt(0.19)) / 2;
  EXPECT_NEAR(strategy_mutual_information(Strategy::kMed, c.theta_a, c.theta_n),
              1 - oracle::binary_entropy(pr), 1e-12);
}

TEST(MutualInformation, MatchesPlugInOnOutcomeTable) {
  for (const auto& c : random_configs(50, 53))
    for (auto s : {Strategy::kUqsd, Strategy::kMed}) {
      const auto o = outcomes(s, c);
      std::vector<std::array<double, 2>> joint;
      for (std::size_t k = 0; k < o.labels.size(); ++k)
        joint.push_back({o.joint(k, 0), o.joint(k, 1)});
      EXPECT_NEAR(strategy_mutual_information(s, c.theta_a, c.theta_n), oracle::plug_in_mi(joint),
                  1e-10);
    }
}

TEST(MutualInformation, RejectsMismatchedInputs) {
  const std::array<double, 1> priors{1.0};
  const std::array<Ket2d, 2> states{ket_h(), ket_v()};
  EXPECT_THROW(mutual_information<double>(priors, states, med_projectors(0.0)),
               std::invalid_argument);
  const std::array<double, 2> bad{0.7, 0.7};
  EXPECT_THROW(mutual_information<double>(bad, states, med_projectors(0.0)), std::invalid_argument);
}

TEST(Setup, ProbabilityConservation) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> ph(0, 2 * kPi), eta(0.5, 1);
  for (auto c : random_configs(100, 61)) {
    c.phi = ph(rng);
    c.loop_visibility = eta(rng);
    for (auto s : {Strategy::kUqsd, Strategy::kMed}) {
      const auto p = setup_detection_probabilities(c, program_for(s, c.theta_a, c.theta_n));
      EXPECT_NEAR(p.dv + p.d[0] + p.d[1] + p.d[2], 1.0, 1e-12);
      EXPECT_NEAR(p.lost, 0.0, 1e-12);
    }
  }
}

TEST(Setup, DvMatchesFirstLoop) {
  for (auto c : random_configs(50, 67)) {
    c.phi = 1.3;
    c.loop_visibility = 0.9;
    const auto p = setup_detection_probabilities(c, uqsd_program(c.theta_a, c.theta_n));
    EXPECT_NEAR(p.dv, detection_prob_dv(c), 1e-12);
  }
}

TEST(Setup, BlockedRunsFollowConditionalTable) {
  for (const auto& c : random_configs(50, 71))
    for (auto s : {Strategy::kUqsd, Strategy::kMed}) {
      const auto prog = program_for(s, c.theta_a, c.theta_n);
      const auto o = outcomes(s, c);
      for (int j = 0; j < 2; ++j) {
        const auto p = setup_detection_probabilities(c, prog, j);
        const double prior = o.priors[j];
        EXPECT_NEAR(p.lost, 1 - prior, 1e-12);
        EXPECT_NEAR(p.dv, prior / 2, 1e-12);
        for (std::size_t k = 0; k < o.labels.size(); ++k) {
          const int det = o.labels[k][1] - '0';
          EXPECT_NEAR(p.d[det], prior / 2 * o.given_path[k][j], 1e-12);
        }
      }
    }
}

TEST(Setup, Tan038Sin02D2MinimumIsZero) {
  auto c = at(0.38, 0.2);
  const auto prog = uqsd_program(c.theta_a, c.theta_n);
  double lo = 1;
  for (int k = 0; k < 720; ++k) {
    c.phi = 2 * kPi * k / 720;
    lo = std::min(lo, setup_detection_probabilities(c, prog).at(Detector::kD2));
  }
  EXPECT_LT(lo, 1e-14);
}

TEST(Setup, Tan028Sin09D1Vanishes) {
  auto c = at(0.28, 0.9);
  const auto prog = uqsd_program(c.theta_a, c.theta_n);
  for (int k = 0; k < 24; ++k) {
    c.phi = 2 * kPi * k / 24;
    EXPECT_LT(setup_detection_probabilities(c, prog).at(Detector::kD1), 1e-15);
  }
}

TEST(Setup, IdenticalMarkersOnlyD2Interferes) {
  auto c = at(1.0, 1.0);
  const auto prog = uqsd_program(c.theta_a, c.theta_n);
  double hi = 0, lo = 1;
  for (int k = 0; k < 24; ++k) {
    c.phi = 2 * kPi * k / 24;
    const auto p = setup_detection_probabilities(c, prog);
    EXPECT_LT(p.at(Detector::kD0), 1e-15);
    EXPECT_LT(p.at(Detector::kD1), 1e-15);
    hi = std::max(hi, p.at(Detector::kD2));
    lo = std::min(lo, p.at(Detector::kD2));
  }
  EXPECT_NEAR(hi, 1.0, 1e-12);
  EXPECT_NEAR(lo, 0.0, 1e-12);
}

TEST(Strategy, ParseRoundTrip) {
  for (auto s : {Strategy::kUqsd, Strategy::kMed}) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("maxconf"), std::invalid_argument);
}

TEST(Setup, Tan028Sin09D2MinimumIsNotZero) {
  auto c = at(0.28, 0.9);
  const auto prog = uqsd_program(c.theta_a, c.theta_n);
  const Op2d e2 = strategy_povm(Strategy::kUqsd, c.theta_a, c.theta_n).find("D2").op;
  double lo = 1, lo_states = 1;
  for (int k = 0; k < 720; ++k) {
    c.phi = 2 * kPi * k / 720;
    lo = std::min(lo, setup_detection_probabilities(c, prog).at(Detector::kD2));
    lo_states = std::min(lo_states, expectation<double, 2>(e2, evolve(c).psi_d));
  }
  EXPECT_GT(lo, 0.05);
  EXPECT_NEAR(lo, lo_states, 1e-12);
}
