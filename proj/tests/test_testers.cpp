#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cliffordlab/testers.hpp"

using namespace clab;

namespace {

DenseUnitary t_gate_unitary() { return {1, gates::t_gate()}; }

// p_T table by explicit matrix products, independent of the sparse kernels.
double pacc_by_direct_sum(const DenseUnitary& u) {
  const auto& ps = weyl_matrices(u.n);
  const double d = static_cast<double>(pow2(u.n));
  double acc = 0.0;
  for (const auto& px : ps) {
    for (const auto& py : ps) {
      const double p = std::norm((px * u.m * py * u.m.adjoint()).trace()) / (d * d * d * d);
      acc += p * p;
    }
  }
  return d * d * acc;
}

double gnw_by_direct_sum(const DenseUnitary& u) {
  const auto& ps = weyl_matrices(u.n);
  const double d = static_cast<double>(pow2(u.n));
  double acc = 0.0;
  for (const auto& px : ps) {
    for (const auto& py : ps) acc += std::pow(std::norm((px * u.m * py * u.m.adjoint()).trace()) / (d * d * d * d), 3);
  }
  return 0.5 * (1.0 + d * d * d * d * acc);
}

std::vector<DenseUnitary> sample_unitaries(std::size_t n, int count, Rng& rng) {
  std::vector<DenseUnitary> out;
  for (int i = 0; i < count; ++i) {
    if (i % 2 == 0) {
      out.push_back(haar_dense_unitary(n, rng));
    } else {
      // Near-Clifford samples exercise the high-fidelity regime.
      const Mat c = clifford_matrix(random_clifford(n, rng)).m;
      out.push_back({n, c * random_near_identity(pow2(n), 0.05 * (i % 7), rng)});
    }
  }
  return out;
}

double four_sigma(double p, std::size_t shots) {
  return 4.0 * std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(shots)) + 1e-12;
}

}  // namespace

TEST(Pacc, CliffordsAcceptWithCertainty) {
  for (const auto& c : clifford_matrices(1)) EXPECT_NEAR(pacc_exact({1, c}), 1.0, 1e-10);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(pacc_exact(clifford_matrix(random_clifford(2, rng))), 1.0, 1e-10);
  EXPECT_NEAR(pacc_exact(DenseUnitary::identity(3)), 1.0, 1e-12);
}

TEST(Pacc, TGateValue) {
  EXPECT_NEAR(pacc_by_direct_sum(t_gate_unitary()), 0.75, 1e-12);
  EXPECT_NEAR(pacc_exact(t_gate_unitary()), 0.75, 1e-12);
  EXPECT_NEAR(pacc_pi4(t_gate_unitary()), 0.75, 1e-12);
}

TEST(Pacc, ThreeFormulasAgree) {
  Rng rng(2);
  for (const auto& u : sample_unitaries(1, 20, rng)) {
    const double p = pacc_exact(u);
    EXPECT_NEAR(p, pacc_by_direct_sum(u), 1e-12);
    EXPECT_NEAR(p, pacc_pi4(u), 1e-9);
  }
  for (const auto& u : sample_unitaries(2, 3, rng)) EXPECT_NEAR(pacc_exact(u), pacc_pi4(u), 1e-9);
  EXPECT_THROW(pacc_exact(DenseUnitary::identity(4)), BudgetExceeded);
}

TEST(Pacc, GnwChoiValues) {
  // p_T has two entries at 1/4 and four at 1/8: (1 + 16 (2/64 + 4/512)) / 2 = 13/16.
  EXPECT_NEAR(gnw_by_direct_sum(t_gate_unitary()), 13.0 / 16.0, 1e-12);
  EXPECT_NEAR(pacc_gnw_choi(t_gate_unitary()), 13.0 / 16.0, 1e-12);
  Rng urng(30);
  for (const auto& u : sample_unitaries(1, 10, urng)) EXPECT_NEAR(pacc_gnw_choi(u), gnw_by_direct_sum(u), 1e-12);
  EXPECT_NEAR(pacc_gnw_choi(DenseUnitary::identity(2)), 1.0, 1e-12);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(pacc_gnw_choi(clifford_matrix(random_clifford(2, rng))), 1.0, 1e-10);
}

TEST(Pacc, BoundsAndSoundness) {
  Rng rng(4);
  for (std::size_t n = 1; n <= 2; ++n) {
    for (const auto& u : sample_unitaries(n, n == 1 ? 60 : 6, rng)) {
      const double p = pacc_exact(u);
      const double fs = f_stab(choi_state(u));
      const double fc = f_cliff(u);
      EXPECT_LE(p, (1.0 + fs) / 2.0 + 1e-9);
      EXPECT_GE(p, std::pow(fc, 4) - 1e-9);
      const double eps = 1.0 - fc;
      if (eps > 0.0) {
        EXPECT_GE(1.0 - p, std::min(0.25, eps / 2.0) - 1e-9);
      }
    }
  }
}

TEST(FourQuery, CliffordAcceptsEveryShot) {
  Rng rng(5);
  TesterConfig cfg;
  cfg.shots = 1000;
  cfg.seed = 17;
  const auto rep = run_4query(clifford_matrix(random_clifford(2, rng)), cfg);
  EXPECT_EQ(rep.accepts, 1000U);
  EXPECT_TRUE(rep.accept);
  EXPECT_EQ(rep.log.size(), 1000U);
  EXPECT_EQ(rep.queries, 4000U);
}

TEST(FourQuery, TGateRateWithinFourSigma) {
  TesterConfig cfg;
  cfg.shots = 100000;
  cfg.seed = 2024;
  cfg.jobs = 4;
  cfg.keep_log = false;
  const auto rep = run_4query(t_gate_unitary(), cfg);
  EXPECT_NEAR(rep.rate, 0.75, four_sigma(0.75, cfg.shots));
  EXPECT_FALSE(rep.accept);
}

TEST(FourQuery, SeedDeterminismAcrossJobCounts) {
  TesterConfig cfg;
  cfg.shots = 500;
  cfg.seed = 9;
  const auto a = run_4query(t_gate_unitary(), cfg);
  cfg.jobs = 3;
  const auto b = run_4query(t_gate_unitary(), cfg);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].x, b.log[i].x);
    EXPECT_EQ(a.log[i].y, b.log[i].y);
    EXPECT_EQ(a.log[i].y2, b.log[i].y2);
  }
  cfg.seed = 10;
  const auto c = run_4query(t_gate_unitary(), cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.log.size(); ++i) differs = differs || a.log[i].x != c.log[i].x;
  EXPECT_TRUE(differs);
}

TEST(FourQuery, MonteCarloMatchesExactOnRandomUnitaries) {
  Rng rng(6);
  TesterConfig cfg;
  cfg.shots = 4000;
  cfg.keep_log = false;
  int k = 0;
  for (const auto& u : sample_unitaries(1, 40, rng)) {
    cfg.seed = 100 + static_cast<u64>(k++);
    const auto rep = run_4query(u, cfg);
    EXPECT_NEAR(rep.rate, *rep.exact, four_sigma(*rep.exact, cfg.shots));
  }
  for (const auto& u : sample_unitaries(2, 10, rng)) {
    cfg.seed = 100 + static_cast<u64>(k++);
    const auto rep = run_4query(u, cfg);
    EXPECT_NEAR(rep.rate, *rep.exact, four_sigma(*rep.exact, cfg.shots));
  }
}

TEST(FourQuery, Repetitions) {
  EXPECT_EQ(four_query_repetitions(1.0), 24U);
  EXPECT_EQ(four_query_repetitions(0.9), 24U);
  EXPECT_EQ(four_query_repetitions(0.1), 120U);
  for (double eps : {0.01, 0.1, 0.5, 1.0}) {
    const double p = std::min(0.25, eps / 2.0);
    EXPECT_LE(std::pow(1.0 - p, static_cast<double>(four_query_repetitions(eps))), 1.0 / 3.0);
  }
  TesterConfig cfg;
  Rng rng(8);
  for (int i = 0; i < 5; ++i) {
    cfg.seed = static_cast<u64>(i);
    EXPECT_TRUE(run_4query_repeated(clifford_matrix(random_clifford(1, rng)), 0.3, cfg).accept);
  }
  int rejects = 0;
  for (int run = 0; run < 200; ++run) {
    cfg.seed = 5000 + static_cast<u64>(run);
    cfg.keep_log = false;
    if (!run_4query_repeated(t_gate_unitary(), 0.1, cfg).accept) ++rejects;
  }
  EXPECT_GE(rejects, 134);
}

TEST(StabilizerOracle, Contract) {
  OracleStabilizerTester oracle;
  Rng rng(1);
  std::size_t copies = 0;
  const auto& all = stabilizer_state_vectors(2);
  for (const auto& s : all) EXPECT_TRUE(oracle.test({2, s}, 0.05, 0.01, rng, copies));
  EXPECT_EQ(copies, stab_tester_copies(2, 0.05, 0.01));
  // T|+> has F_Stab = cos^2(pi/8); pick eps so that F_Stab = 1 - 2 eps.
  Vec plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const StateVector magic{1, gates::t_gate() * plus};
  const double f = std::pow(std::cos(std::numbers::pi / 8.0), 2);
  EXPECT_NEAR(f_stab(magic), f, 1e-12);
  EXPECT_FALSE(oracle.test(magic, (1.0 - f) / 2.0, 0.01, rng, copies));
  EXPECT_TRUE(oracle.test(magic, 0.2, 0.01, rng, copies));
  // Injected failures stay within the per-call budget.
  OracleStabilizerTester noisy(0.5);
  int flips = 0;
  for (int i = 0; i < 20000; ++i) flips += noisy.test({2, all[0]}, 0.1, 0.05, rng, copies) ? 0 : 1;
  EXPECT_NEAR(flips / 20000.0, 0.05, 4.0 * std::sqrt(0.05 * 0.95 / 20000.0));
}

TEST(SingleCopy, PlanFormulas) {
  TesterConfig cfg;
  cfg.epsilon = 0.05;
  const auto plan = single_copy_plan(2, cfg);
  EXPECT_EQ(plan.trials, static_cast<std::size_t>(std::ceil(std::log(3.0) / (0.05 / 16.0))) + 1);
  EXPECT_NEAR(plan.delta, 1.0 / (3.0 * static_cast<double>(plan.trials)), 1e-15);
  EXPECT_EQ(plan.copies_per_trial,
            static_cast<std::size_t>(std::ceil(2.0 / (0.05 * 0.05) * std::log(1.0 / plan.delta) - 1e-9)));
  // Total queries scale like (n / eps^3) log(1/eps): the ratio stays in a fixed band.
  for (double eps : {0.2, 0.1, 0.05, 0.02, 0.01, 0.005}) {
    cfg.epsilon = eps;
    const auto p = single_copy_plan(2, cfg);
    const double shape = 2.0 / (eps * eps * eps) * std::log(1.0 / eps);
    const double ratio = static_cast<double>(p.total_queries()) / shape;
    EXPECT_GT(ratio, 16.0 * std::log(3.0));
    EXPECT_LT(ratio, 16.0 * std::log(3.0) * 4.0);
  }
  cfg.epsilon = 1.5;
  EXPECT_THROW(single_copy_plan(1, cfg), InvalidInput);
}

TEST(SingleCopy, CliffordsAlwaysAccepted) {
  Rng rng(12);
  TesterConfig cfg;
  cfg.epsilon = 0.2;
  for (int i = 0; i < 10; ++i) {
    cfg.seed = static_cast<u64>(i);
    const auto u = clifford_matrix(random_clifford(1 + i % 2, rng));
    const auto rep = run_aux_free_single_copy(u, cfg);
    const auto plan = single_copy_plan(u.n, cfg);
    EXPECT_TRUE(rep.accept);
    EXPECT_EQ(rep.shots_used, plan.trials);
    EXPECT_EQ(rep.queries, plan.total_queries());
    EXPECT_EQ(rep.log.size(), rep.shots_used);
  }
}

TEST(SingleCopy, RejectsTensorTGate) {
  const DenseUnitary u = tensor(t_gate_unitary(), DenseUnitary::identity(1));
  // Per-trial detection probability from the exact average.
  double detect = 0.0;
  for (const auto& s : stabilizer_state_vectors(2)) detect += f_stab({2, u.m * s}) <= 0.95 ? 1.0 : 0.0;
  detect /= static_cast<double>(stabilizer_state_vectors(2).size());
  EXPECT_GT(detect, 0.05 / 16.0);
  TesterConfig cfg;
  cfg.epsilon = 0.05;
  cfg.keep_log = false;
  int rejects = 0;
  for (int run = 0; run < 200; ++run) {
    cfg.seed = 777 + static_cast<u64>(run);
    if (!run_aux_free_single_copy(u, cfg).accept) ++rejects;
  }
  EXPECT_GE(rejects, 134);
}

TEST(AverageFidelity, ExamplesAndBounds) {
  Rng rng(13);
  EXPECT_NEAR(avg_stab_fidelity_exact(clifford_matrix(random_clifford(2, rng))), 1.0, 1e-10);
  const double t_avg = avg_stab_fidelity_exact(t_gate_unitary());
  EXPECT_GE(t_avg, std::pow(std::cos(std::numbers::pi / 8.0), 2) - 1e-12);
  // Z eigenstates are fixed by T; the other four map to states at cos^2(pi/8).
  EXPECT_NEAR(t_avg, (2.0 + 4.0 * std::pow(std::cos(std::numbers::pi / 8.0), 2)) / 6.0, 1e-12);
  for (std::size_t n = 1; n <= 2; ++n) {
    for (const auto& u : sample_unitaries(n, n == 1 ? 100 : 4, rng)) {
      const double avg = avg_stab_fidelity_exact(u);
      EXPECT_GE(avg, f_cliff(u) - 1e-9);
      EXPECT_LE(avg, avg_stab_fidelity_upper(f_stab(choi_state(u)), n) + 1e-9);
    }
  }
  EXPECT_THROW(avg_stab_fidelity_exact(DenseUnitary::identity(3)), BudgetExceeded);
}

TEST(Leaves, DepolarizingIsUniformOnBasisMeasurements) {
  Strategy s;
  for (int i = 0; i < 3; ++i) s.rounds.push_back({named_qubit_state("0"), pauli_basis_povm("Z")});
  const auto p = leaf_distribution(s, ChannelEnsemble::depolarizing);
  ASSERT_EQ(p.size(), 8U);
  for (double v : p) EXPECT_NEAR(v, 1.0 / 8.0, 1e-15);
  EXPECT_EQ(tv_distance(p, p), 0.0);
}

TEST(Leaves, CliffordEnsembleTwoWays) {
  Rng rng(14);
  const std::vector<std::string> states{"0", "1", "+", "-", "+i", "-i"};
  const std::vector<std::string> axes{"X", "Y", "Z"};
  for (std::size_t t = 1; t <= 3; ++t) {
    for (int rep = 0; rep < 6; ++rep) {
      Strategy s;
      for (std::size_t i = 0; i < t; ++i) {
        if (rep % 2 == 0) {
          s.rounds.push_back({named_qubit_state(states[rng.below(6)]), pauli_basis_povm(axes[rng.below(3)])});
        } else {
          // Random mixed input, random rank-one basis measurement.
          const Vec a = haar_vector(2, rng);
          const Vec b = haar_vector(2, rng);
          const Mat rho = 0.7 * a * a.adjoint() + 0.3 * b * b.adjoint();
          const Mat u = haar_unitary(2, rng);
          s.rounds.push_back({rho, {u.col(0) * u.col(0).adjoint(), u.col(1) * u.col(1).adjoint()}});
        }
      }
      const auto direct = leaf_distribution(s, ChannelEnsemble::clifford, LeafMethod::group_average);
      const auto expansion = leaf_distribution(s, ChannelEnsemble::clifford, LeafMethod::commutant_expansion);
      double sum = 0.0;
      for (std::size_t l = 0; l < direct.size(); ++l) {
        EXPECT_NEAR(direct[l], expansion[l], 1e-8);
        sum += direct[l];
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_LE(tv_distance(direct, leaf_distribution(s, ChannelEnsemble::depolarizing)), 1.0);
    }
  }
}

TEST(Leaves, InvalidStrategiesRejected) {
  Strategy s;
  s.rounds.push_back({named_qubit_state("0"), {named_qubit_state("0")}});
  EXPECT_THROW(leaf_distribution(s, ChannelEnsemble::clifford), InvalidInput);
  EXPECT_THROW(named_qubit_state("2"), InvalidInput);
  Strategy big;
  for (int i = 0; i < 4; ++i) big.rounds.push_back({named_qubit_state("0"), pauli_basis_povm("Z")});
  EXPECT_THROW(leaf_distribution(big, ChannelEnsemble::clifford), BudgetExceeded);
}
