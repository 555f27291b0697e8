#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gf2.hpp"
#include "linalg.hpp"
#include "pauli.hpp"

namespace clab {

// Copy subsets are bit masks: bit i set means copy i (0-based) is selected.
using CopySet = u64;

inline constexpr std::size_t kMaxCopiesDense = 4;
inline constexpr std::size_t kMaxCopiesEnum = 5;
inline constexpr std::size_t kMaxDenseCopyQubits = 8;  // n * t for dense operators

// ---------------------------------------------------------------------------
// Codes
// ---------------------------------------------------------------------------

/// Self-dual [2t, t] code: codewords (x, y) with x the first t coordinates.
struct SelfDualCode {
  std::size_t t = 0;
  Subspace space;

  static SelfDualCode from_space(const Subspace& s) {
    if (s.ambient_dim() % 2 != 0) throw DimensionMismatch("SelfDualCode: odd length");
    SelfDualCode c{s.ambient_dim() / 2, s};
    if (s.dim() != c.t || !(dual(s, Form::standard) == s)) throw InvalidInput("SelfDualCode: space is not self-dual");
    return c;
  }

  static SelfDualCode from_generator(const BitMatrix& g) { return from_space(Subspace::from_matrix(g)); }

  static SelfDualCode parse(std::string_view text) { return from_generator(BitMatrix::parse(text)); }

  /// Canonical generator [A|B] (RREF).
  const BitMatrix& generator() const { return space.basis(); }
  BitMatrix left() const { return generator().col_block(0, t); }
  BitMatrix right() const { return generator().col_block(t, t); }

  std::string to_string() const { return generator().to_string(); }

  friend bool operator==(const SelfDualCode& a, const SelfDualCode& b) { return a.space == b.space; }
  friend bool operator<(const SelfDualCode& a, const SelfDualCode& b) { return a.space < b.space; }
};

/// x.x - y.y mod 4 for a codeword in the integer view (x in the high half).
inline unsigned isotropy_defect(u64 v, std::size_t t) {
  const u64 mask = (u64{1} << t) - 1;
  const int d = std::popcount((v >> t) & mask) - std::popcount(v & mask);
  return static_cast<unsigned>(((d % 4) + 4) % 4);
}

inline bool is_totally_isotropic(const Subspace& s) {
  const std::size_t t = s.ambient_dim() / 2;
  bool ok = true;
  for_each_element(s, [&](const BitVec& v) { ok = ok && isotropy_defect(v.to_u64(), t) == 0; });
  return ok;
}

/// Element of Sigma_{t,t}.
struct StochasticLagrangian {
  SelfDualCode code;

  static StochasticLagrangian from_code(const SelfDualCode& c) {
    if (!c.space.contains(BitVec::ones(2 * c.t))) throw InvalidInput("StochasticLagrangian: all-ones vector missing");
    if (!is_totally_isotropic(c.space)) throw InvalidInput("StochasticLagrangian: not totally isotropic mod 4");
    return {c};
  }

  static StochasticLagrangian parse(std::string_view text) { return from_code(SelfDualCode::parse(text)); }

  std::size_t t() const { return code.t; }
  std::string to_string() const { return code.to_string(); }

  friend bool operator==(const StochasticLagrangian& a, const StochasticLagrangian& b) { return a.code == b.code; }
  friend bool operator<(const StochasticLagrangian& a, const StochasticLagrangian& b) { return a.code < b.code; }
};

/// {(O x, x)}: rows (O e_j, e_j).
inline SelfDualCode graph_code(const BitMatrix& o) {
  const std::size_t t = o.rows();
  if (o.cols() != t) throw DimensionMismatch("graph_code: matrix not square");
  std::vector<BitVec> rows;
  for (std::size_t j = 0; j < t; ++j) rows.push_back(o.col(j).concat(BitVec::unit(t, j)));
  return SelfDualCode::from_space(Subspace::span(2 * t, rows));
}

inline SelfDualCode identity_code(std::size_t t) { return graph_code(BitMatrix::identity(t)); }

/// O with d = {(O x, x)}, if d is such a graph. O = A^T (B^T)^{-1}.
inline std::optional<BitMatrix> graph_matrix(const SelfDualCode& d) {
  const auto binv = inverse(d.right().transpose());
  if (!binv) return std::nullopt;
  return d.left().transpose() * *binv;
}

inline bool is_orthogonal(const BitMatrix& o) {
  return o.rows() == o.cols() && o * o.transpose() == BitMatrix::identity(o.rows());
}

/// |x| mod 4 preserved for every x.
inline bool is_stochastic_orthogonal(const BitMatrix& o) {
  const std::size_t t = o.rows();
  if (o.cols() != t) return false;
  for (u64 x = 0; x < (u64{1} << t); ++x) {
    const BitVec v = BitVec::from_u64(t, x);
    if ((o.apply(v).weight() - v.weight()) % 4 != 0) return false;
  }
  return true;
}

/// The special t = 4 element whose operator is proportional to the Bell-pair code projector.
inline StochasticLagrangian t4_code() {
  return StochasticLagrangian::from_code(
      SelfDualCode::from_generator(BitMatrix::from_strings({"10011001", "01010101", "00001111", "11110000"})));
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

namespace detail {

/// All maximal subspaces of F2^{2t} containing the all-ones vector that are
/// reachable by adding one admissible vector at a time; `admissible(rows, v)`
/// decides whether span(rows, v) stays in the family.
template <class Pred>
std::vector<std::vector<u64>> grow_from_ones(std::size_t t, Pred&& admissible) {
  const auto width = static_cast<unsigned>(2 * t);
  std::set<std::vector<u64>> level{{(u64{1} << width) - 1}};
  for (std::size_t d = 1; d < t; ++d) {
    std::set<std::vector<u64>> next;
    for (const auto& rows : level) {
      for (u64 v = 1; v < (u64{1} << width); ++v) {
        if (packed::reduce(v, rows) == 0 || !admissible(rows, v)) continue;
        auto grown = rows;
        grown.push_back(v);
        packed::rref(grown, width);
        next.insert(std::move(grown));
      }
    }
    level = std::move(next);
  }
  return {level.begin(), level.end()};
}

inline bool self_orthogonal_extension(const std::vector<u64>& rows, u64 v) {
  if (packed::parity(v)) return false;
  return std::none_of(rows.begin(), rows.end(), [v](u64 r) { return packed::parity(r & v); });
}

inline bool isotropic_extension(const std::vector<u64>& rows, u64 v, std::size_t t) {
  // Every element of the new coset v + span(rows) must have zero defect.
  const std::size_t k = rows.size();
  for (u64 m = 0; m < (u64{1} << k); ++m) {
    u64 w = v;
    for (std::size_t i = 0; i < k; ++i) {
      if ((m >> i) & 1U) w ^= rows[i];
    }
    if (isotropy_defect(w, t) != 0) return false;
  }
  return true;
}

template <class T, class Build>
const std::vector<T>& cached_by_t(std::size_t t, Build&& build) {
  static std::array<std::once_flag, kMaxCopiesEnum + 1> flags;
  static std::array<std::vector<T>, kMaxCopiesEnum + 1> cache;
  std::call_once(flags[t], [&] { cache[t] = build(); });
  return cache[t];
}

}  // namespace detail

/// SD(2t), sorted canonically.
inline const std::vector<SelfDualCode>& enumerate_sd(std::size_t t) {
  if (t < 1 || t > 4) throw InvalidInput("enumerate_sd: t must be in 1..4");
  return detail::cached_by_t<SelfDualCode>(t, [t] {
    std::vector<SelfDualCode> out;
    for (const auto& rows : detail::grow_from_ones(t, detail::self_orthogonal_extension)) {
      out.push_back(SelfDualCode::from_space(packed::to_subspace(rows, static_cast<unsigned>(2 * t))));
    }
    std::sort(out.begin(), out.end());
    return out;
  });
}

/// Sigma_{t,t} by direct search over totally isotropic extensions of the all-ones vector.
inline std::vector<StochasticLagrangian> search_sigma_tt(std::size_t t) {
  if (t < 1 || t > kMaxCopiesEnum) throw InvalidInput("enumerate_sigma_tt: t must be in 1..5");
  std::vector<StochasticLagrangian> out;
  const auto found = detail::grow_from_ones(
      t, [t](const std::vector<u64>& rows, u64 v) { return detail::isotropic_extension(rows, v, t); });
  for (const auto& rows : found) {
    out.push_back(StochasticLagrangian::from_code(
        SelfDualCode::from_space(packed::to_subspace(rows, static_cast<unsigned>(2 * t)))));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Sigma_{t,t}: filter of SD(2t) for t <= 4, direct search at t = 5.
inline const std::vector<StochasticLagrangian>& enumerate_sigma_tt(std::size_t t) {
  if (t < 1 || t > kMaxCopiesEnum) throw InvalidInput("enumerate_sigma_tt: t must be in 1..5");
  return detail::cached_by_t<StochasticLagrangian>(t, [t] {
    if (t == kMaxCopiesEnum) return search_sigma_tt(t);
    std::vector<StochasticLagrangian> out;
    for (const auto& d : enumerate_sd(t)) {
      if (d.space.contains(BitVec::ones(2 * t)) && is_totally_isotropic(d.space)) out.push_back({d});
    }
    return out;
  });
}

/// prod_{k=0}^{t-2} (2^k + 1).
inline u64 sigma_tt_count(std::size_t t) {
  u64 c = 1;
  for (std::size_t k = 0; k + 2 <= t; ++k) c *= (u64{1} << k) + 1;
  return c;
}

namespace detail {

/// Invertible t x t matrices whose columns come from `allowed` and satisfy
/// the pairwise predicate; final check `accept`.
template <class Pair, class Accept>
std::vector<BitMatrix> search_by_columns(std::size_t t, const std::vector<u64>& allowed, Pair&& pair_ok,
                                         Accept&& accept) {
  std::vector<BitMatrix> out;
  std::vector<u64> cols;
  std::function<void()> rec = [&] {
    if (cols.size() == t) {
      BitMatrix m(t, t);
      for (std::size_t j = 0; j < t; ++j) {
        for (std::size_t i = 0; i < t; ++i) m.set(i, j, (cols[j] >> (t - 1 - i)) & 1U);
      }
      if (rank(m) == t && accept(m)) out.push_back(m);
      return;
    }
    for (u64 c : allowed) {
      if (std::all_of(cols.begin(), cols.end(), [&](u64 p) { return pair_ok(p, c); })) {
        cols.push_back(c);
        rec();
        cols.pop_back();
      }
    }
  };
  rec();
  return out;
}

}  // namespace detail

/// O_t: A A^T = I.
inline std::vector<BitMatrix> enumerate_orthogonal(std::size_t t) {
  if (t < 1 || t > kMaxCopiesEnum) throw InvalidInput("enumerate_orthogonal: t must be in 1..5");
  // Columns of an orthogonal matrix are odd weight and pairwise orthogonal.
  std::vector<u64> odd;
  for (u64 c = 1; c < (u64{1} << t); ++c) {
    if (std::popcount(c) % 2 == 1) odd.push_back(c);
  }
  return detail::search_by_columns(
      t, odd, [](u64 a, u64 b) { return !packed::parity(a & b); }, is_orthogonal);
}

/// O_t^(1): weights preserved mod 4.
inline std::vector<BitMatrix> enumerate_stochastic_orthogonal(std::size_t t) {
  if (t < 1 || t > kMaxCopiesEnum) throw InvalidInput("enumerate_stochastic_orthogonal: t must be in 1..5");
  std::vector<u64> cols;
  for (u64 c = 1; c < (u64{1} << t); ++c) {
    if (std::popcount(c) % 4 == 1) cols.push_back(c);
  }
  return detail::search_by_columns(
      t, cols, [](u64 a, u64 b) { return std::popcount(a & b) % 2 == 0; }, is_stochastic_orthogonal);
}

/// Permutation matrices of S_t.
inline std::vector<BitMatrix> enumerate_permutations(std::size_t t) {
  if (t < 1 || t > kMaxCopiesEnum) throw InvalidInput("enumerate_permutations: t must be in 1..5");
  std::vector<std::size_t> p(t);
  std::iota(p.begin(), p.end(), 0);
  std::vector<BitMatrix> out;
  do {
    BitMatrix m(t, t);
    for (std::size_t j = 0; j < t; ++j) m.set(p[j], j, true);
    out.push_back(m);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// r(D) = sum_{(x,y) in D} |x><y| on t qubits.
inline Mat r_operator(const SelfDualCode& d) {
  require_budget(d.t <= kMaxDenseCopyQubits, "r_operator: t <= 8");
  const auto dim = static_cast<Eigen::Index>(pow2(d.t));
  Mat r = Mat::Zero(dim, dim);
  const u64 mask = (u64{1} << d.t) - 1;
  for_each_element(d.space, [&](const BitVec& v) {
    const u64 w = v.to_u64();
    r(static_cast<Eigen::Index>(w >> d.t), static_cast<Eigen::Index>(w & mask)) = 1.0;
  });
  return r;
}

/// Index in the copy-major ordering of t copies of n qubits, from per-qubit
/// t-bit words (bit for copy 0 is the most significant of each word).
inline u64 copy_major_index(const std::vector<u64>& per_qubit, std::size_t n, std::size_t t) {
  u64 idx = 0;
  for (std::size_t c = 0; c < t; ++c) {
    for (std::size_t q = 0; q < n; ++q) idx = (idx << 1) | ((per_qubit[q] >> (t - 1 - c)) & 1U);
  }
  return idx;
}

/// R(D) = r(D)^{(x) n}, rearranged to act on t copies of n qubits (copy-major).
inline Mat R_operator(const SelfDualCode& d, std::size_t n) {
  const std::size_t t = d.t;
  require_budget(n * t <= kMaxDenseCopyQubits, "R_operator: qubits * copies <= 8");
  const auto dim = static_cast<Eigen::Index>(pow2(n * t));
  Mat r = Mat::Zero(dim, dim);
  const auto words = enumerate_elements(d.space);
  const u64 mask = (u64{1} << t) - 1;
  std::vector<u64> xs(n);
  std::vector<u64> ys(n);
  const u64 total = u64{1} << (n * t);
  for (u64 pick = 0; pick < total; ++pick) {
    u64 rest = pick;
    for (std::size_t q = 0; q < n; ++q) {
      const u64 w = words[rest & mask].to_u64();
      rest >>= t;
      xs[q] = w >> t;
      ys[q] = w & mask;
    }
    r(static_cast<Eigen::Index>(copy_major_index(xs, n, t)), static_cast<Eigen::Index>(copy_major_index(ys, n, t))) =
        1.0;
  }
  return r;
}

/// 2^{-2n} sum_x P_x^{(x) 4}.
inline Mat pi4(std::size_t n) {
  require_budget(n >= 1 && n <= 2, "pi4: 1 <= qubits <= 2");
  const auto dim = static_cast<Eigen::Index>(pow2(4 * n));
  Mat p = Mat::Zero(dim, dim);
  for (const auto& w : weyl_matrices(n)) p += kron_power(w, 4);
  return p / static_cast<double>(pow2(2 * n));
}

/// Projector onto the symmetric subspace of (C^dim)^{(x) copies}.
inline Mat symmetric_projector(std::size_t dim, std::size_t copies) {
  require_budget(copies <= 4 && std::pow(static_cast<double>(dim), static_cast<double>(copies)) <= 65536.0,
                 "symmetric_projector: dim^copies <= 65536");
  std::size_t total = 1;
  for (std::size_t i = 0; i < copies; ++i) total *= dim;
  Mat p = Mat::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  std::vector<std::size_t> perm(copies);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t count = 0;
  std::vector<std::size_t> digits(copies);
  do {
    ++count;
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (std::size_t c = copies; c-- > 0;) {
        digits[c] = rest % dim;
        rest /= dim;
      }
      std::size_t out = 0;
      for (std::size_t c = 0; c < copies; ++c) out = out * dim + digits[perm[c]];
      p(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(idx)) += 1.0;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return p / static_cast<double>(count);
}

/// Transpose the tensor factors of the copies in `s` (t copies of n qubits).
inline Mat partial_transpose_dense(const Mat& m, CopySet s, std::size_t n) {
  const auto dim = static_cast<u64>(m.rows());
  if (m.cols() != m.rows() || n == 0 || dim == 0 || (dim & (dim - 1)) != 0) {
    throw DimensionMismatch("partial_transpose_dense: not a square 2^k matrix");
  }
  const auto bits = static_cast<std::size_t>(std::countr_zero(dim));
  if (bits % n != 0) throw DimensionMismatch("partial_transpose_dense: size not a multiple of the copy size");
  const std::size_t t = bits / n;
  if (t < 64 && (s >> t) != 0) throw InvalidInput("partial_transpose_dense: copy index out of range");
  u64 swap_mask = 0;
  const u64 block = (u64{1} << n) - 1;
  for (std::size_t c = 0; c < t; ++c) {
    if ((s >> c) & 1U) swap_mask |= block << (n * (t - 1 - c));
  }
  Mat out(m.rows(), m.cols());
  for (u64 x = 0; x < dim; ++x) {
    for (u64 y = 0; y < dim; ++y) {
      const u64 x2 = (x & ~swap_mask) | (y & swap_mask);
      const u64 y2 = (y & ~swap_mask) | (x & swap_mask);
      out(static_cast<Eigen::Index>(x2), static_cast<Eigen::Index>(y2)) =
          m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    }
  }
  return out;
}

/// D P_S: swap coordinates i and t + i for every i in s.
inline SelfDualCode partial_transpose_code(const SelfDualCode& d, CopySet s) {
  if (d.t < 64 && (s >> d.t) != 0) throw InvalidInput("partial_transpose_code: copy index out of range");
  BitMatrix g = d.generator();
  for (std::size_t i = 0; i < d.t; ++i) {
    if ((s >> i) & 1U) g.swap_cols(i, d.t + i);
  }
  return SelfDualCode::from_generator(g);
}

// ---------------------------------------------------------------------------
// Gram and Weingarten matrices
// ---------------------------------------------------------------------------

struct GramWeingarten {
  std::size_t n = 0;
  std::size_t t = 0;
  std::vector<StochasticLagrangian> labels;
  RMat gram;
  RMat weingarten;

  /// max |G W G - G| / max |G|.
  double pinv_residual() const {
    const double scale = gram.cwiseAbs().maxCoeff();
    return (gram * weingarten * gram - gram).cwiseAbs().maxCoeff() / scale;
  }
};

/// tr(R(T)^dag R(T')) computed from the dense operators.
inline GramWeingarten gram_weingarten(std::size_t n, std::size_t t) {
  require_budget(t >= 1 && t <= kMaxCopiesDense && n * t <= kMaxDenseCopyQubits,
                 "gram_weingarten: t <= 4 and qubits * copies <= 8");
  GramWeingarten gw{n, t, enumerate_sigma_tt(t), {}, {}};
  std::vector<Mat> ops;
  for (const auto& lbl : gw.labels) ops.push_back(R_operator(lbl.code, n));
  const auto k = static_cast<Eigen::Index>(ops.size());
  gw.gram = RMat::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      const double v = std::real((ops[i].adjoint() * ops[j]).trace());
      gw.gram(i, j) = v;
      gw.gram(j, i) = v;
    }
  }
  gw.weingarten = symmetric_pinv(gw.gram);
  return gw;
}

/// Same labels, entries 2^{n dim(T cap T')}: the trace counts common codewords,
/// raised to the n-th power by the tensor structure.
inline GramWeingarten gram_weingarten_closed_form(std::size_t n, std::size_t t) {
  if (t < 1 || t > kMaxCopiesEnum) throw InvalidInput("gram_weingarten_closed_form: t must be in 1..5");
  require_budget(n * t <= 1000, "gram_weingarten_closed_form: qubits * copies <= 1000");
  GramWeingarten gw{n, t, enumerate_sigma_tt(t), {}, {}};
  const auto k = static_cast<Eigen::Index>(gw.labels.size());
  gw.gram = RMat::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      const auto common = intersect(gw.labels[i].code.space, gw.labels[j].code.space).dim();
      const double v = std::ldexp(1.0, static_cast<int>(n * common));
      gw.gram(i, j) = v;
      gw.gram(j, i) = v;
    }
  }
  gw.weingarten = symmetric_pinv(gw.gram);
  return gw;
}

// ---------------------------------------------------------------------------
// Twirls
// ---------------------------------------------------------------------------

inline void check_copy_operator(const Mat& rho, std::size_t n, std::size_t t, const char* who) {
  const auto dim = static_cast<Eigen::Index>(pow2(n * t));
  if (rho.rows() != dim || rho.cols() != dim) throw DimensionMismatch(std::string(who) + ": operator size mismatch");
}

/// E_C C^{(x)t} rho C^{dag (x)t} over the enumerated projective Cl(1).
inline Mat clifford_twirl_exact(std::size_t n, std::size_t t, const Mat& rho) {
  require_budget(n == 1 && t >= 1 && t <= kMaxCopiesDense, "clifford_twirl_exact: qubits = 1, t <= 4");
  check_copy_operator(rho, n, t, "clifford_twirl_exact");
  const auto& cs = clifford_matrices(n);
  Mat acc = Mat::Zero(rho.rows(), rho.cols());
  for (const auto& c : cs) {
    const Mat ct = kron_power(c, t);
    acc += ct * rho * ct.adjoint();
  }
  return acc / static_cast<double>(cs.size());
}

/// The commutant projection sum_{T,T'} W_{T,T'} tr(R(T')^dag X) R(T), with
/// the dense generators kept for repeated use.
class CommutantProjector {
 public:
  CommutantProjector(std::size_t n, std::size_t t) : n_(n), t_(t), gw_(gram_weingarten(n, t)) {
    for (const auto& lbl : gw_.labels) ops_.push_back(R_operator(lbl.code, n));
  }

  const GramWeingarten& gram() const { return gw_; }
  const std::vector<Mat>& generators() const { return ops_; }

  Mat operator()(const Mat& x) const {
    check_copy_operator(x, n_, t_, "clifford_twirl_weingarten");
    const auto k = static_cast<Eigen::Index>(ops_.size());
    Vec overlaps(k);
    // R is a real 0/1 matrix, so tr(R^dag X) = sum_ij R_ij X_ij.
    for (Eigen::Index j = 0; j < k; ++j) overlaps(j) = ops_[j].cwiseProduct(x).sum();
    const Vec coeffs = gw_.weingarten.cast<cplx>() * overlaps;
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < k; ++i) out += coeffs(i) * ops_[i];
    return out;
  }

 private:
  std::size_t n_;
  std::size_t t_;
  GramWeingarten gw_;
  std::vector<Mat> ops_;
};

inline Mat clifford_twirl_weingarten(std::size_t n, std::size_t t, const Mat& rho) {
  return CommutantProjector(n, t)(rho);
}

// ---------------------------------------------------------------------------
// Unitary partial transposes
// ---------------------------------------------------------------------------

/// reuse_pivot: when the current left-block column already has a usable 1
/// below the finished rows, pivot on it without a transpose; otherwise fall
/// back to the augmenting path. literal: always run the augmenting path and
/// transpose the current column.
enum class PivotRule { reuse_pivot, literal };

struct PartialTransposeStep {
  std::size_t columns_done = 0;  // left block columns 0..columns_done-1 are unit vectors
  const BitMatrix* generator = nullptr;
  CopySet transposed = 0;
  std::size_t path_length = 0;  // augmenting path length used for this column
};

struct PartialTransposeResult {
  CopySet transposed = 0;
  BitMatrix orthogonal;  // O with D P_S = {(O x, x)}
  BitMatrix reduced;     // final generator, left block = identity
};

struct PartialTransposeOptions {
  PivotRule rule = PivotRule::reuse_pivot;
  std::function<void(const PartialTransposeStep&)> on_step;
};

namespace detail {

class PartialTransposeRun {
 public:
  PartialTransposeRun(const SelfDualCode& d, const PartialTransposeOptions& opt)
      : t_(d.t), m_(d.generator()), opt_(opt) {}

  PartialTransposeResult run() {
    for (std::size_t k = 0; k < t_; ++k) {
      std::size_t path_len = 0;
      const auto own = own_pivot(k);
      if (opt_.rule == PivotRule::reuse_pivot && own) {
        m_.swap_rows(*own, k);
      } else {
        const auto [t0, len] = reduce_augmenting_path(k);
        path_len = len;
        transpose(k);
        m_.swap_rows(t0, k);
      }
      if (!m_.get(k, k)) throw InternalError("unitary_partial_transpose: pivot missing");
      for (std::size_t r = 0; r < t_; ++r) {
        if (r != k && m_.get(r, k)) m_.row(r) ^= m_.row(k);
      }
      if (opt_.on_step) opt_.on_step({k + 1, &m_, s_, path_len});
    }
    const auto d = SelfDualCode::from_generator(m_);
    auto o = graph_matrix(d);
    if (!o || !is_orthogonal(*o)) throw InternalError("unitary_partial_transpose: result is not an orthogonal graph");
    return {s_, *o, m_};
  }

 private:
  bool b(std::size_t r, std::size_t c) const { return m_.get(r, t_ + c); }

  void transpose(std::size_t i) {
    m_.swap_cols(i, t_ + i);
    s_ ^= CopySet{1} << i;
  }

  std::optional<std::size_t> own_pivot(std::size_t k) const {
    for (std::size_t r = k; r < t_; ++r) {
      if (m_.get(r, k)) return r;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> lower_one(std::size_t col) const {
    for (std::size_t r = 0; r < t_; ++r) {
      if (r >= cur_k_ && b(r, col)) return r;
    }
    return std::nullopt;
  }

  /// Returns (t0, l) with t0 >= k and B[t0][k] = 1 after shortening a
  /// shortest path from k to the columns with a 1 in the unfinished rows.
  std::pair<std::size_t, std::size_t> reduce_augmenting_path(std::size_t k) {
    cur_k_ = k;
    // BFS over vertices 0..k; edge i -> j iff B[j][i] = 1.
    std::vector<int> parent(k + 1, -1);
    std::vector<bool> seen(k + 1, false);
    std::queue<std::size_t> frontier;
    frontier.push(k);
    seen[k] = true;
    std::optional<std::size_t> end;
    while (!frontier.empty() && !end) {
      const std::size_t i = frontier.front();
      frontier.pop();
      if (lower_one(i)) {
        end = i;
        break;
      }
      for (std::size_t j = 0; j <= k; ++j) {
        if (!seen[j] && j != i && b(j, i)) {
          seen[j] = true;
          parent[j] = static_cast<int>(i);
          frontier.push(j);
        }
      }
    }
    if (!end) throw InternalError("unitary_partial_transpose: no augmenting path");
    std::vector<std::size_t> path;
    for (int v = static_cast<int>(*end); v != -1; v = parent[static_cast<std::size_t>(v)]) {
      path.push_back(static_cast<std::size_t>(v));
    }
    std::reverse(path.begin(), path.end());  // path[0] = k
    const std::size_t len = path.size() - 1;
    const std::size_t t0 = *lower_one(path.back());
    for (std::size_t i = len; i >= 1; --i) {
      const std::size_t a = path[i];
      for (std::size_t r = 0; r < t_; ++r) {
        if (r != t0 && b(r, a)) m_.row(r) ^= m_.row(t0);
      }
      transpose(a);
      m_.swap_rows(t0, a);
      if (!b(t0, path[i - 1])) throw InternalError("unitary_partial_transpose: path step lost its edge");
    }
    if (!b(t0, k)) throw InternalError("unitary_partial_transpose: no pivot after path reduction");
    return {t0, len};
  }

  std::size_t t_;
  BitMatrix m_;
  const PartialTransposeOptions& opt_;
  CopySet s_ = 0;
  std::size_t cur_k_ = 0;
};

}  // namespace detail

/// S and O with D P_S = {(O x, x)}, O orthogonal.
inline PartialTransposeResult unitary_partial_transpose(const SelfDualCode& d,
                                                        const PartialTransposeOptions& opt = {}) {
  return detail::PartialTransposeRun(d, opt).run();
}

// ---------------------------------------------------------------------------
// Trace norms, PPT overlaps, rank facts
// ---------------------------------------------------------------------------

struct TraceNormMin {
  double value = 0.0;
  CopySet subset = 0;
};

/// min over S of ||R(T)^{Gamma_S}||_1 (first minimizer in mask order).
inline TraceNormMin min_trace_norm_pt(const StochasticLagrangian& lbl, std::size_t n = 1) {
  const std::size_t t = lbl.t();
  require_budget(t <= kMaxCopiesDense && n * t <= 6, "min_trace_norm_pt: t <= 4 and qubits * copies <= 6");
  const Mat r = R_operator(lbl.code, n);
  TraceNormMin best{std::numeric_limits<double>::infinity(), 0};
  for (CopySet s = 0; s < (CopySet{1} << t); ++s) {
    const double v = trace_norm(partial_transpose_dense(r, s, n));
    if (v < best.value - 1e-9) best = {v, s};
  }
  return best;
}

/// |tr(R(T) rho_1 (x) ... (x) rho_t)|.
inline double ppt_overlap_check(const StochasticLagrangian& lbl, const std::vector<Mat>& factors, std::size_t n = 1) {
  const std::size_t t = lbl.t();
  if (factors.size() != t) throw DimensionMismatch("ppt_overlap_check: need one factor per copy");
  require_budget(n * t <= kMaxDenseCopyQubits, "ppt_overlap_check: qubits * copies <= 8");
  Mat rho = Mat::Identity(1, 1);
  for (const auto& f : factors) {
    if (f.rows() != static_cast<Eigen::Index>(pow2(n)) || f.cols() != f.rows()) {
      throw DimensionMismatch("ppt_overlap_check: factor size mismatch");
    }
    rho = kron(rho, f);
  }
  const Mat r = R_operator(lbl.code, n);
  return std::abs(r.cwiseProduct(rho.transpose()).sum());
}

/// (rank A, rank B) of the canonical generator.
inline std::pair<std::size_t, std::size_t> block_ranks(const SelfDualCode& d) {
  return {rank(d.left()), rank(d.right())};
}

/// min over I of rank(G_I) - |I|, G_I the columns {a_i, b_i : i in I}.
inline int min_pair_rank_slack(const SelfDualCode& d) {
  int worst = static_cast<int>(d.t);
  const BitMatrix g = d.generator();
  for (CopySet s = 0; s < (CopySet{1} << d.t); ++s) {
    BitMatrix sub(g.rows(), 0);
    std::vector<BitVec> cols;
    for (std::size_t i = 0; i < d.t; ++i) {
      if ((s >> i) & 1U) {
        cols.push_back(g.col(i));
        cols.push_back(g.col(d.t + i));
      }
    }
    const std::size_t r = cols.empty() ? 0 : rank(BitMatrix::from_rows(g.rows(), cols));
    worst = std::min(worst, static_cast<int>(r) - std::popcount(s));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Four-copy stabilizer average
// ---------------------------------------------------------------------------

/// E_S (|S><S|)^{(x)4} over the enumerated Stab(n).
inline Mat avg_stab_fourcopy(std::size_t n) {
  require_budget(n >= 1 && n <= 2, "avg_stab_fourcopy: 1 <= qubits <= 2");
  const auto& states = stabilizer_state_vectors(n);
  const auto dim = static_cast<Eigen::Index>(pow2(4 * n));
  Mat acc = Mat::Zero(dim, dim);
  for (const auto& s : states) {
    const Vec v = kron(kron(s, s), kron(s, s));
    acc.noalias() += v * v.adjoint();
  }
  return acc / static_cast<double>(states.size());
}

/// (2^n D_+)^{-1} (Pi4 Psym + 4/(2^n + 4) (I - Pi4) Psym), D_+ = (2^n+1)(2^n+2)/6.
inline Mat fourcopy_formula(std::size_t n) {
  require_budget(n >= 1 && n <= 2, "fourcopy_formula: 1 <= qubits <= 2");
  const double d = static_cast<double>(pow2(n));
  const double dplus = (d + 1.0) * (d + 2.0) / 6.0;
  const Mat p4 = pi4(n);
  const Mat sym = symmetric_projector(pow2(n), 4);
  const Mat id = Mat::Identity(p4.rows(), p4.cols());
  return (p4 * sym + (4.0 / (d + 4.0)) * (id - p4) * sym) / (d * dplus);
}

}  // namespace clab
