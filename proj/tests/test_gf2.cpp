#include <gtest/gtest.h>

#include <set>

#include "cliffordlab/gf2.hpp"
#include "cliffordlab/random.hpp"

using namespace clab;

namespace {

BitMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  BitMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) m.set(i, j, rng.bit());
  }
  return m;
}

BitVec random_vec(Rng& rng, std::size_t len) {
  BitVec v(len);
  for (std::size_t i = 0; i < len; ++i) v.set(i, rng.bit());
  return v;
}

// Brute-force rank: log2 of the number of distinct row combinations.
std::size_t rank_by_span(const BitMatrix& m) {
  std::set<std::string> seen;
  const u64 total = u64{1} << m.rows();
  for (u64 mask = 0; mask < total; ++mask) {
    BitVec v(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if ((mask >> i) & 1U) v ^= m.row(i);
    }
    seen.insert(v.to_string());
  }
  std::size_t r = 0;
  while ((std::size_t{1} << r) < seen.size()) ++r;
  return r;
}

}  // namespace

TEST(BitVec, IntegerViewIsBigEndian) {
  const auto v = BitVec::from_string("1101");
  EXPECT_EQ(v.to_u64(), 13U);
  EXPECT_EQ(BitVec::from_u64(4, 13), v);
  EXPECT_EQ(v.weight(), 3U);
  EXPECT_EQ(v.slice(1, 2).to_string(), "10");
  EXPECT_EQ(v.concat(BitVec::from_string("0")).to_string(), "11010");
}

TEST(BitVec, MultiWord) {
  BitVec v(130);
  v.set(0, true);
  v.set(129, true);
  EXPECT_EQ(v.weight(), 2U);
  EXPECT_EQ(v.first_one(), 0U);
  v.flip(0);
  EXPECT_EQ(v.first_one(), 129U);
  EXPECT_THROW(v.to_u64(), InvalidInput);
}

TEST(Rank, Examples) {
  EXPECT_EQ(rank(BitMatrix::identity(3)), 3U);
  EXPECT_EQ(rank(BitMatrix(2, 4)), 0U);
  EXPECT_EQ(rank(BitMatrix::from_strings({"11", "11"})), 1U);
}

TEST(Rref, Examples) {
  auto r = rref(BitMatrix::from_strings({"11", "01"}));
  EXPECT_EQ(r.matrix, BitMatrix::from_strings({"10", "01"}));
  r = rref(BitMatrix::from_strings({"011", "011"}));
  EXPECT_EQ(r.matrix, BitMatrix::from_strings({"011"}));
  EXPECT_EQ(r.pivots, std::vector<std::size_t>{1});
  EXPECT_EQ(rref(BitMatrix::identity(4)).matrix, BitMatrix::identity(4));
}

TEST(Kernel, Examples) {
  EXPECT_EQ(kernel(BitMatrix::identity(2)).dim(), 0U);
  EXPECT_EQ(kernel(BitMatrix::from_strings({"11"})), Subspace::span(2, {BitVec::from_string("11")}));
  EXPECT_EQ(kernel(BitMatrix(1, 3)), Subspace::full(3));
}

TEST(Inner, Examples) {
  const auto b = [](const char* s) { return BitVec::from_string(s); };
  EXPECT_FALSE(standard_inner(b("11"), b("11")));
  EXPECT_TRUE(standard_inner(b("10"), b("11")));
  EXPECT_FALSE(standard_inner(b("10"), b("00")));
  EXPECT_TRUE(symplectic_inner(b("10"), b("01")));
  EXPECT_FALSE(symplectic_inner(b("10"), b("10")));
  EXPECT_THROW(symplectic_inner(b("101"), b("101")), InvalidInput);
  EXPECT_THROW(standard_inner(b("10"), b("101")), DimensionMismatch);
}

TEST(Inner, SymplecticIsBilinearAlternatingSymmetric) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t len = 2 * (1 + rng.below(5));
    const auto x = random_vec(rng, len);
    const auto y = random_vec(rng, len);
    const auto z = random_vec(rng, len);
    EXPECT_FALSE(symplectic_inner(x, x));
    EXPECT_EQ(symplectic_inner(x, y), symplectic_inner(y, x));
    EXPECT_EQ(symplectic_inner(x ^ y, z), symplectic_inner(x, z) != symplectic_inner(y, z));
  }
}

TEST(Rank, MatchesBruteForceSpan) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_matrix(rng, 1 + rng.below(7), 1 + rng.below(9));
    EXPECT_EQ(rank(m), rank_by_span(m));
  }
}

TEST(Kernel, RankNullity) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = random_matrix(rng, 1 + rng.below(12), 1 + rng.below(12));
    const auto k = kernel(m);
    EXPECT_EQ(rank(m) + k.dim(), m.cols());
    for (const auto& v : k.basis().row_list()) EXPECT_TRUE(m.apply(v).is_zero());
  }
}

TEST(Rref, CanonicalAcrossBases) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_matrix(rng, 1 + rng.below(6), 1 + rng.below(10));
    // Random invertible row mixing plus appended dependent rows.
    BitMatrix mixed = m;
    for (int step = 0; step < 20 && m.rows() > 1; ++step) {
      const auto i = rng.below(m.rows());
      auto j = rng.below(m.rows());
      if (i == j) continue;
      mixed.row(i) ^= mixed.row(j);
    }
    mixed.push_row(mixed.row(0) ^ mixed.row(mixed.rows() - 1));
    EXPECT_EQ(rref(m).matrix, rref(mixed).matrix);
    EXPECT_EQ(Subspace::from_matrix(m), Subspace::from_matrix(mixed));
  }
}

TEST(Inverse, RoundTrip) {
  Rng rng(13);
  int found = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = random_matrix(rng, 5, 5);
    const auto inv = inverse(m);
    EXPECT_EQ(inv.has_value(), rank(m) == 5);
    if (inv) {
      ++found;
      EXPECT_EQ(m * *inv, BitMatrix::identity(5));
    }
  }
  EXPECT_GT(found, 0);
}

TEST(Solve, ConsistentSystems) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_matrix(rng, 1 + rng.below(6), 1 + rng.below(6));
    const auto x = random_vec(rng, m.cols());
    const auto b = m.apply(x);
    const auto sol = solve(m, b);
    ASSERT_TRUE(sol.has_value());
    EXPECT_EQ(m.apply(*sol), b);
  }
  EXPECT_FALSE(solve(BitMatrix::from_strings({"1", "1"}), BitVec::from_string("10")).has_value());
}

TEST(Dual, Examples) {
  const auto rep = Subspace::span(2, {BitVec::from_string("11")});
  EXPECT_EQ(dual(rep, Form::standard), rep);
  EXPECT_EQ(dual(Subspace(5), Form::standard), Subspace::full(5));
  EXPECT_EQ(dual(Subspace(4), Form::symplectic), Subspace::full(4));
}

TEST(Dual, InvolutionExhaustive) {
  for (std::size_t m = 1; m <= 8; ++m) {
    for (std::size_t k = 0; k <= m; ++k) {
      for_each_subspace(m, k, [&](const Subspace& v) {
        const auto d = dual(v, Form::standard);
        ASSERT_EQ(d.dim() + v.dim(), m);
        ASSERT_EQ(dual(d, Form::standard), v);
        if (m % 2 == 0) {
          const auto s = dual(v, Form::symplectic);
          ASSERT_EQ(s.dim() + v.dim(), m);
          ASSERT_EQ(dual(s, Form::symplectic), v);
        }
      });
    }
  }
}

TEST(Lagrangian, Examples) {
  const auto x = Subspace::span(2, {BitVec::from_string("10")});
  EXPECT_TRUE(is_isotropic(x));
  EXPECT_TRUE(is_lagrangian(x));
  EXPECT_FALSE(is_isotropic(Subspace::full(2)));
  EXPECT_THROW(is_isotropic(Subspace(3)), InvalidInput);
}

TEST(Lagrangian, CountsAndSelfDuality) {
  // Number of Lagrangians of F2^{2n} is prod_{k=1}^n (2^k + 1).
  const std::size_t expected[] = {0, 3, 15, 135};
  for (std::size_t n = 1; n <= 3; ++n) {
    std::size_t count = 0;
    for_each_subspace(2 * n, n, [&](const Subspace& v) {
      if (is_lagrangian(v)) {
        ++count;
        EXPECT_EQ(dual(v, Form::symplectic), v);
      }
    });
    EXPECT_EQ(count, expected[n]);
  }
}

TEST(Enumerate, ElementsAndSubspaces) {
  const auto v = Subspace::span(4, {BitVec::from_string("1100"), BitVec::from_string("0011")});
  const auto el = enumerate_elements(v);
  EXPECT_EQ(el.size(), 4U);
  EXPECT_EQ(std::set<BitVec>(el.begin(), el.end()).size(), 4U);
  EXPECT_TRUE(std::find(el.begin(), el.end(), BitVec(4)) != el.end());
  EXPECT_EQ(enumerate_subspaces(2, 1).size(), 3U);
  EXPECT_EQ(enumerate_subspaces(4, 2).size(), 35U);
  for (unsigned m = 0; m <= 7; ++m) {
    for (unsigned k = 0; k <= m; ++k) {
      const auto subs = enumerate_subspaces(m, k);
      EXPECT_EQ(subs.size(), gaussian_binomial(m, k));
      EXPECT_EQ(std::set<Subspace>(subs.begin(), subs.end()).size(), subs.size());
    }
  }
}

TEST(Enumerate, Guards) {
  EXPECT_THROW(enumerate_subspaces(11, 2), BudgetExceeded);
  EXPECT_THROW(enumerate_elements(Subspace::full(25)), BudgetExceeded);
  try {
    enumerate_subspaces(12, 1);
  } catch (const BudgetExceeded& e) {
    EXPECT_NE(e.guard().find("ambient"), std::string::npos);
  }
}

TEST(Subspace, IntersectionAndSum) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng.below(6);
    const auto a = Subspace::from_matrix(random_matrix(rng, rng.below(m + 1), m));
    const auto b = Subspace::from_matrix(random_matrix(rng, rng.below(m + 1), m));
    const auto i = intersect(a, b);
    EXPECT_EQ(i.dim() + (a + b).dim(), a.dim() + b.dim());
    EXPECT_TRUE(a.contains(i));
    EXPECT_TRUE(b.contains(i));
  }
}

TEST(Packed, RrefMatchesBitMatrix) {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const unsigned w = 1 + static_cast<unsigned>(rng.below(12));
    std::vector<u64> rows;
    for (std::size_t i = 0, r = rng.below(8); i < r; ++i) rows.push_back(rng.bits(w));
    const auto s = packed::to_subspace(rows, w);
    packed::rref(rows, w);
    EXPECT_EQ(packed::from_subspace(s), rows);
  }
}

TEST(Serialize, TextRoundTrip) {
  const auto m = BitMatrix::from_strings({"1010", "0111"});
  EXPECT_EQ(m.to_string(), "1010\n0111");
  EXPECT_EQ(BitMatrix::parse(m.to_string() + "\n"), m);
}
