#include <gtest/gtest.h>

#include <numbers>

#include "cliffordlab/densesim.hpp"

using namespace clab;

namespace {

const double kCos2 = std::pow(std::cos(std::numbers::pi / 8), 2);

DenseUnitary t_unitary() { return {1, gates::t_gate()}; }

StateVector magic_state() {
  const double s = 1.0 / std::sqrt(2.0);
  Vec v(2);
  v << s, s * std::polar(1.0, std::numbers::pi / 4);
  return {1, v};
}

// Naive p_U(x, y) from dense Weyl matrices.
double naive_pu(const DenseUnitary& u, u64 x, u64 y) {
  const Mat px = weyl_matrix_code(u.n, x);
  const Mat py = weyl_matrix_code(u.n, y);
  return std::norm((px * u.m * py * u.m.adjoint()).trace()) / std::pow(2.0, 4.0 * u.n);
}

std::vector<Subspace> isotropic_paired_subspaces(std::size_t ambient) {
  std::vector<Subspace> out;
  for (std::size_t k = 0; k <= ambient / 2; ++k) {
    for_each_subspace(ambient, k, [&](const Subspace& v) {
      if (is_isotropic(v, Form::paired)) out.push_back(v);
    });
  }
  return out;
}

}  // namespace

TEST(Choi, Examples) {
  const double s = 1.0 / std::sqrt(2.0);
  auto c = choi_state(DenseUnitary::identity(1));
  EXPECT_LT((c.amp - (Vec(4) << s, 0, 0, s).finished()).norm(), 1e-15);
  c = choi_state({1, weyl_matrix_code(1, 0b10)});
  EXPECT_LT((c.amp - (Vec(4) << 0, s, s, 0).finished()).norm(), 1e-15);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto u = haar_dense_unitary(2, rng);
    const auto v = haar_dense_unitary(2, rng);
    EXPECT_NEAR(choi_state(u).amp.norm(), 1.0, 1e-12);
    const cplx inner = choi_state(v).amp.dot(choi_state(u).amp);
    EXPECT_LT(std::abs(inner - (v.m.adjoint() * u.m).trace() / 4.0), 1e-12);
  }
}

TEST(CharDist, StateExamples) {
  const auto p0 = char_dist_state(StateVector::basis(1, 0));
  EXPECT_NEAR(p0.at(0b00), 0.5, 1e-15);
  EXPECT_NEAR(p0.at(0b01), 0.5, 1e-15);
  EXPECT_NEAR(p0.at(0b10), 0.0, 1e-15);
  EXPECT_NEAR(p0.at(0b11), 0.0, 1e-15);
  const auto pm = char_dist_state(magic_state());
  EXPECT_NEAR(pm.at(0b00), 0.5, 1e-14);
  EXPECT_NEAR(pm.at(0b10), 0.25, 1e-14);
  EXPECT_NEAR(pm.at(0b11), 0.25, 1e-14);
  EXPECT_NEAR(pm.at(0b01), 0.0, 1e-14);
  EXPECT_NEAR(pm.sum(), 1.0, 1e-14);
}

TEST(CharDist, StabilizerSupportIsItsLagrangian) {
  for (std::size_t n = 1; n <= 2; ++n) {
    for (const auto& t : enumerate_stabilizer_states(n)) {
      const auto p = char_dist_state(stabilizer_state_vector(t));
      const auto lag = t.label_space();
      for (u64 x = 0; x < p.table.size(); ++x) {
        const double want = lag.contains(BitVec::from_u64(2 * n, x)) ? 1.0 / pow2(n) : 0.0;
        EXPECT_NEAR(p.at(x), want, 1e-12);
      }
      EXPECT_NEAR(subspace_weight(p, lag), 1.0, 1e-12);
    }
  }
}

TEST(CharDist, UnitaryExamples) {
  const auto pi = char_dist_unitary(DenseUnitary::identity(2));
  for (u64 x = 0; x < 16; ++x) {
    for (u64 y = 0; y < 16; ++y) EXPECT_NEAR(pi.at(x, y), x == y ? 1.0 / 16 : 0.0, 1e-15);
  }
  const auto pt = char_dist_unitary(t_unitary());
  const u64 I = 0, Z = 0b01, X = 0b10, Y = 0b11;
  for (u64 x = 0; x < 4; ++x) {
    for (u64 y = 0; y < 4; ++y) {
      double want = 0.0;
      if ((x == I && y == I) || (x == Z && y == Z)) want = 0.25;
      if ((x == X || x == Y) && (y == X || y == Y)) want = 0.125;
      EXPECT_NEAR(pt.at(x, y), want, 1e-14) << x << "," << y;
    }
  }
}

TEST(CharDist, UnitaryMatchesNaiveAndChoi) {
  Rng rng(2);
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto u = haar_dense_unitary(n, rng);
    const auto pu = char_dist_unitary(u);
    const auto pc = char_dist_state(choi_state(u));
    const u64 side = u64{1} << (2 * n);
    for (u64 x = 0; x < side; ++x) {
      for (u64 y = 0; y < side; ++y) {
        EXPECT_NEAR(pu.at(x, y), pc.at(pair_to_choi_label(x, y, n)), 1e-10);
        if (n <= 2) EXPECT_NEAR(pu.at(x, y), naive_pu(u, x, y), 1e-12);
      }
    }
    EXPECT_LT(pu.invariant_violation(), 1e-9);
    EXPECT_LT(pc.invariant_violation(), 1e-9);
  }
}

TEST(CharDist, PairLabelRoundTrip) {
  for (std::size_t n = 1; n <= 3; ++n) {
    for (u64 c = 0; c < (u64{1} << (4 * n)); ++c) {
      const auto [x, y] = choi_label_to_pair(c, n);
      EXPECT_EQ(pair_to_choi_label(x, y, n), c);
    }
  }
}

TEST(CharDist, CliffordsArePermutationSupported) {
  const auto& cs = enumerate_cliffords(1);
  const auto& mats = clifford_matrices(1);
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const auto p = char_dist_unitary({1, mats[k]});
    for (u64 y = 0; y < 4; ++y) {
      const u64 sy = cs[k].symplectic.apply(BitVec::from_u64(2, y)).to_u64();
      for (u64 x = 0; x < 4; ++x) EXPECT_NEAR(p.at(x, y), x == sy ? 0.25 : 0.0, 1e-12);
    }
  }
}

TEST(Fidelity, StabExamples) {
  Rng rng(3);
  for (std::size_t n = 1; n <= 4; ++n) {
    EXPECT_NEAR(f_stab(stabilizer_state_vector(random_stabilizer_state(n, rng))), 1.0, 1e-12);
  }
  EXPECT_NEAR(f_stab(magic_state()), kCos2, 1e-12);
  EXPECT_NEAR(f_stab(choi_state(t_unitary())), kCos2, 1e-12);
  EXPECT_THROW(f_stab(haar_state(5, rng)), BudgetExceeded);
}

TEST(Fidelity, CliffExamples) {
  for (const auto& c : clifford_matrices(1)) EXPECT_NEAR(f_cliff({1, c}), 1.0, 1e-12);
  EXPECT_NEAR(f_cliff(t_unitary()), kCos2, 1e-12);
  Rng rng(4);
  const auto c = clifford_matrix(random_clifford(2, rng));
  EXPECT_NEAR(f_cliff({2, std::polar(1.0, 0.7) * c.m}), 1.0, 1e-12);
  EXPECT_THROW(f_cliff(DenseUnitary::identity(3)), BudgetExceeded);
}

TEST(Fidelity, ChoiOfCliffordIsStabilizer) {
  for (const auto& c : clifford_matrices(1)) EXPECT_NEAR(f_stab(choi_state({1, c})), 1.0, 1e-12);
}

TEST(Fidelity, SandwichAndEquivalence) {
  Rng rng(5);
  for (std::size_t n = 1; n <= 2; ++n) {
    const int samples = n == 1 ? 200 : 25;
    for (int s = 0; s < samples; ++s) {
      // Mix in near-Clifford inputs so the high-fidelity regime is exercised.
      DenseUnitary u = haar_dense_unitary(n, rng);
      if (s % 2 == 1) {
        const Mat c = clifford_matrix(random_clifford(n, rng)).m;
        const Mat near = random_near_identity(pow2(n), 0.1 + 0.6 * rng.uniform(), rng);
        u = {n, c * near};
      }
      const double fs = f_stab(choi_state(u));
      const double fc = f_cliff(u);
      EXPECT_LE(std::pow(fs, 6), fc + 1e-12);
      EXPECT_LE(fc, fs + 1e-9);
      if (fs > 0.5) EXPECT_NEAR(fc, fs, 1e-9);
    }
  }
}

TEST(Weights, Examples) {
  Rng rng(6);
  const auto psi = haar_state(2, rng);
  const auto p = char_dist_state(psi);
  EXPECT_NEAR(subspace_weight(p, Subspace::full(4)), 1.0, 1e-12);
  EXPECT_NEAR(subspace_weight(p, Subspace(4)), 0.25, 1e-12);
  EXPECT_THROW(subspace_weight(p, Subspace(6)), DimensionMismatch);
}

TEST(Weights, StabilizerFidelityBoundsExhaustive) {
  Rng rng(7);
  for (std::size_t n = 1; n <= 2; ++n) {
    for (int s = 0; s < 20; ++s) {
      const auto psi = haar_state(n, rng);
      const auto p = char_dist_state(psi);
      const double fs = f_stab(psi);
      double best = 0.0;
      for (const auto& m : enumerate_lagrangians(n)) {
        const double w = subspace_weight(p, m);
        EXPECT_LE(w, fs + 1e-12);
        best = std::max(best, w);
      }
      EXPECT_GE(best, fs * fs - 1e-12);
      EXPECT_GE(static_cast<double>(pow2(n)) * p.power_sum(2), std::pow(fs, 4) - 1e-12);
    }
  }
}

TEST(Weights, ShiftsCarryNoMoreWeight) {
  Rng rng(8);
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto p = char_dist_state(haar_state(n, rng));
    const std::size_t m = 2 * n;
    for (std::size_t k = 0; k <= m; ++k) {
      for_each_subspace(m, k, [&](const Subspace& v) {
        const double w = subspace_weight(p, v);
        for (u64 s = 0; s < (u64{1} << m); ++s) {
          const auto shift = BitVec::from_u64(m, s);
          if (v.contains(shift)) continue;
          ASSERT_GE(w, shifted_weight(p, v, shift) - 1e-12);
        }
      });
    }
  }
}

TEST(HighWeight, Examples) {
  const auto hw0 = high_weight_set(char_dist_state(StateVector::basis(1, 0)));
  ASSERT_EQ(hw0.size(), 2U);
  EXPECT_EQ(hw0[0].to_u64(), 0U);
  EXPECT_EQ(hw0[1].to_u64(), 0b01U);
  EXPECT_TRUE(is_isotropic(Subspace::span(2, hw0)));
  const auto hwm = high_weight_set(char_dist_state(magic_state()));
  ASSERT_EQ(hwm.size(), 1U);
  EXPECT_TRUE(hwm[0].is_zero());
}

TEST(HighWeight, RandomStatesIsotropic) {
  Rng rng(9);
  for (int seed = 0; seed < 100; ++seed) {
    const std::size_t n = 1 + static_cast<std::size_t>(seed % 3);
    // Bias towards stabilizer-like states so the set is nontrivial.
    Vec v = stabilizer_state_vector(random_stabilizer_state(n, rng)).amp + 0.3 * haar_vector(pow2(n), rng);
    v /= v.norm();
    const auto p = char_dist_state({n, v});
    const auto hw = high_weight_set(p);
    EXPECT_TRUE(is_isotropic(Subspace::span(2 * n, hw), Form::symplectic));
  }
  for (int seed = 0; seed < 20; ++seed) {
    const auto u = gap_instance(2, 1, rng);
    const auto hw = high_weight_set(char_dist_unitary(u));
    EXPECT_TRUE(is_isotropic(Subspace::span(8, hw), Form::paired));
  }
}

TEST(CliffordLagrangian, Examples) {
  for (std::size_t n = 1; n <= 2; ++n) {
    const auto s = is_clifford_lagrangian(graph_of(BitMatrix::identity(2 * n)));
    ASSERT_TRUE(s.has_value());
    EXPECT_EQ(*s, BitMatrix::identity(2 * n));
  }
  // F2^2 (+) 0 is not even isotropic under the pair form.
  const auto left = Subspace::span(4, {BitVec::from_string("1000"), BitVec::from_string("0100")});
  EXPECT_THROW(is_clifford_lagrangian(left), InvalidInput);
  // A Lagrangian that is not a graph: span{X} (+) span{Z}.
  const auto prod = Subspace::span(4, {BitVec::from_string("1000"), BitVec::from_string("0001")});
  EXPECT_TRUE(is_lagrangian(prod, Form::paired));
  EXPECT_FALSE(is_clifford_lagrangian(prod).has_value());
  for (const auto& s : enumerate_symplectic(1)) {
    const auto got = is_clifford_lagrangian(graph_of(s));
    ASSERT_TRUE(got.has_value());
    EXPECT_EQ(*got, s);
  }
}

TEST(CliffordLagrangian, LowerBoundOnCliffordFidelity) {
  Rng rng(10);
  for (int s = 0; s < 50; ++s) {
    const auto u = haar_dense_unitary(1, rng);
    const auto p = char_dist_unitary(u);
    const double fc = f_cliff(u);
    for (const auto& sp : enumerate_symplectic(1)) EXPECT_LE(subspace_weight(p, graph_of(sp)), fc + 1e-12);
  }
}

TEST(Extendable, Examples) {
  const auto g = graph_of(enumerate_symplectic(1)[3]);
  auto split = extract_extendable(g);
  EXPECT_EQ(split.v_prime, g);
  EXPECT_EQ(split.l0.dim(), 0U);
  EXPECT_EQ(split.r0.dim(), 0U);
  split = extract_extendable(Subspace::span(4, {BitVec::from_string("1000")}));
  EXPECT_EQ(split.v_prime.dim(), 0U);
  EXPECT_EQ(split.l0, Subspace::span(2, {BitVec::from_string("10")}));
  EXPECT_EQ(split.r0.dim(), 0U);
  EXPECT_THROW(extract_extendable(Subspace::full(4)), InvalidInput);
}

TEST(Extendable, AllIsotropicSubspacesOneQubit) {
  Rng rng(11);
  const auto iso = isotropic_paired_subspaces(4);
  std::vector<CharDist> dists;
  for (int i = 0; i < 20; ++i) dists.push_back(char_dist_unitary(haar_dense_unitary(1, rng)));
  for (const auto& v : iso) {
    const auto split = extract_extendable(v);
    EXPECT_EQ(split.v_prime.dim() + split.l0.dim() + split.r0.dim(), v.dim());
    EXPECT_TRUE(v.contains(split.v_prime));
    const auto s = extend_to_symplectic(PartialSymplecticMap::from_graph(split.v_prime), 1);
    EXPECT_TRUE(graph_of(s).contains(split.v_prime));
    for (const auto& p : dists) {
      EXPECT_GE(subspace_weight(p, split.v_prime), std::pow(subspace_weight(p, v), 3) - 1e-12);
    }
  }
}

TEST(Extendable, TwoQubitSample) {
  Rng rng(12);
  const auto u = haar_dense_unitary(2, rng);
  const auto p = char_dist_unitary(u);
  int checked = 0;
  for (std::size_t k = 1; k <= 4; ++k) {
    for_each_subspace(8, k, [&](const Subspace& v) {
      if (checked > 3000 || rng.below(8) != 0 || !is_isotropic(v, Form::paired)) return;
      ++checked;
      const auto split = extract_extendable(v);
      const auto s = extend_to_symplectic(PartialSymplecticMap::from_graph(split.v_prime), 2);
      EXPECT_TRUE(graph_of(s).contains(split.v_prime));
      EXPECT_GE(subspace_weight(p, split.v_prime), std::pow(subspace_weight(p, v), 3) - 1e-12);
    });
  }
  EXPECT_GT(checked, 100);
}

TEST(Witt, Examples) {
  EXPECT_EQ(extend_to_symplectic({}, 2), BitMatrix::identity(4));
  const auto x = BitVec::from_string("10");
  const auto z = BitVec::from_string("01");
  // Identity on a Lagrangian extends to something restricting correctly.
  const auto s = extend_to_symplectic({{x}, {x}}, 1);
  EXPECT_EQ(s.apply(x), x);
  const auto xi = BitVec::from_string("1000");
  const auto zi = BitVec::from_string("0010");
  const auto ix = BitVec::from_string("0100");
  EXPECT_THROW(extend_to_symplectic({{xi, zi}, {xi, ix}}, 2), InvalidInput);
  EXPECT_THROW(extend_to_symplectic({{x, z}, {x, x}}, 1), InvalidInput);
}

TEST(Witt, RestrictionsOfSymplecticMapsExtend) {
  for (std::size_t n = 1; n <= 2; ++n) {
    const auto& sp = enumerate_symplectic(n);
    for (std::size_t i = 0; i < sp.size(); i += (n == 1 ? 1 : 37)) {
      for (std::size_t k = 0; k <= 2 * n; ++k) {
        for_each_subspace(2 * n, k, [&](const Subspace& l) {
          PartialSymplecticMap f;
          for (const auto& r : l.basis().row_list()) {
            f.domain.push_back(r);
            f.images.push_back(sp[i].apply(r));
          }
          const auto s = extend_to_symplectic(f, n);
          EXPECT_TRUE(is_symplectic(s));
          for (std::size_t j = 0; j < f.domain.size(); ++j) EXPECT_EQ(s.apply(f.domain[j]), f.images[j]);
        });
      }
    }
  }
}

TEST(Bell, Examples) {
  Rng rng(13);
  for (u64 z = 0; z < 16; ++z) {
    const auto psi = choi_state({2, weyl_matrix_code(2, z)});
    EXPECT_EQ(bell_measure(psi, rng).code(), z);
    EXPECT_NEAR(bell_probabilities(psi)[z], 1.0, 1e-12);
  }
  EXPECT_EQ(bell_measure(choi_state(DenseUnitary::identity(1)), rng).code(), 0U);
  EXPECT_THROW(bell_measure(StateVector::basis(3, 0), rng), InvalidInput);
}

TEST(Bell, EmpiricalFrequencies) {
  Rng rng(14);
  const auto psi = haar_state(2, rng);
  const auto p = bell_probabilities(psi);
  double total = 0.0;
  for (double q : p) total += q;
  EXPECT_NEAR(total, 1.0, 1e-9);
  const int shots = 100000;
  std::vector<int> counts(4, 0);
  for (int s = 0; s < shots; ++s) ++counts[bell_measure(psi, rng).code()];
  for (std::size_t y = 0; y < 4; ++y) {
    const double sigma = std::sqrt(shots * p[y] * (1 - p[y]));
    EXPECT_LE(std::abs(counts[y] - shots * p[y]), 4 * sigma + 1e-9);
  }
}

TEST(Gap, Instances) {
  Rng rng(15);
  const auto u0 = gap_instance(2, 0, rng);
  EXPECT_LT(max_abs_diff(u0.m, Mat::Identity(4, 4)), 1e-15);
  EXPECT_NEAR(f_stab(choi_state(u0)), 1.0, 1e-12);
  for (std::size_t k = 0; k <= 2; ++k) {
    const auto u = gap_instance(2, k, rng);
    EXPECT_TRUE(is_unitary(u.m));
    const auto w = gap_witness(2, k);
    EXPECT_NEAR(f_stab(w), 1.0, 1e-12);
    EXPECT_NEAR(std::norm(w.amp.dot(choi_state(u).amp)), 1.0 / pow2(k), 1e-12);
    EXPECT_GE(f_stab(choi_state(u)), 1.0 / pow2(k) - 1e-12);
  }
  for (std::size_t k = 0; k <= 5; ++k) EXPECT_TRUE(is_unitary(gap_instance(5, k, rng).m));
}

TEST(Q2Inverse, CollisionBound) {
  Rng rng(16);
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int s = 0; s < 10; ++s) {
      const auto u = haar_dense_unitary(n, rng);
      const auto coef = weyl_coefficients(u);
      double mx = 0.0;
      double fourth = 0.0;
      for (const auto& c : coef) {
        mx = std::max(mx, std::norm(c));
        fourth += std::norm(c) * std::norm(c);
      }
      const auto p = char_dist_unitary(u);
      double diag = 0.0;
      for (u64 x = 0; x < coef.size(); ++x) diag += p.at(x, x);
      EXPECT_NEAR(diag, fourth, 1e-10);
      EXPECT_GE(mx, diag - 1e-12);
    }
  }
}
