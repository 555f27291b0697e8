#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gf2.hpp"
#include "linalg.hpp"
#include "pauli.hpp"
#include "random.hpp"

namespace clab {

// ---------------------------------------------------------------------------
// Choi states
// ---------------------------------------------------------------------------

/// (U (x) I)|Omega>; amplitude of |i>|j> is U(i, j) / sqrt(2^n).
inline StateVector choi_state(const DenseUnitary& u) {
  require_budget(u.n <= 5, "choi_state: qubits <= 5");
  const auto d = u.m.rows();
  Vec v(d * d);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = u.m(i, j) * s;
  }
  return {2 * u.n, v};
}

/// A pair label (x, y) with x = (a|b), y = (a'|b') in F2^{2n} corresponds to
/// the 2n-qubit Weyl label ((a, a') | (b, b')) acting on the Choi state.
inline u64 pair_to_choi_label(u64 x, u64 y, std::size_t n) {
  const u64 mask = (u64{1} << n) - 1;
  const u64 a = x >> n;
  const u64 b = x & mask;
  const u64 ap = y >> n;
  const u64 bp = y & mask;
  return (a << (3 * n)) | (ap << (2 * n)) | (b << n) | bp;
}

inline std::pair<u64, u64> choi_label_to_pair(u64 code, std::size_t n) {
  const u64 mask = (u64{1} << n) - 1;
  const u64 a = (code >> (3 * n)) & mask;
  const u64 ap = (code >> (2 * n)) & mask;
  const u64 b = (code >> n) & mask;
  const u64 bp = code & mask;
  return {(a << n) | b, (ap << n) | bp};
}

// ---------------------------------------------------------------------------
// Characteristic distributions
// ---------------------------------------------------------------------------

enum class DistKind { state, unitary };

/// State kind: table[x] = 2^{-n} <psi|P_x|psi>^2 over x in F2^{2n}.
/// Unitary kind: table[(x << 2n) | y] = 2^{-4n} |tr(P_x U P_y U^dag)|^2, i.e.
/// indexed by the concatenation x || y in F2^{4n}.
struct CharDist {
  std::size_t n = 0;
  DistKind kind = DistKind::state;
  std::vector<double> table;

  std::size_t label_bits() const { return kind == DistKind::state ? 2 * n : 4 * n; }

  double at(u64 x) const { return table.at(static_cast<std::size_t>(x)); }
  double at(u64 x, u64 y) const { return table.at(static_cast<std::size_t>((x << (2 * n)) | y)); }
  double at(const BitVec& v) const {
    if (v.size() != label_bits()) throw DimensionMismatch("CharDist: label length mismatch");
    return at(v.to_u64());
  }

  double sum() const {
    double s = 0.0;
    for (double p : table) s += p;
    return s;
  }

  /// sum_z p(z)^q.
  double power_sum(int q) const {
    double s = 0.0;
    for (double p : table) s += std::pow(p, q);
    return s;
  }

  /// Largest violation of the distribution invariants: negativity, total mass,
  /// the 2^{-n} entry cap (state) and the 2^{-2n} marginals (unitary).
  double invariant_violation() const {
    double worst = std::abs(sum() - 1.0);
    for (double p : table) worst = std::max(worst, -p);
    if (kind == DistKind::state) {
      const double cap = 1.0 / static_cast<double>(pow2(n));
      for (double p : table) worst = std::max(worst, p - cap);
    } else {
      const std::size_t side = pow2(2 * n);
      const double target = 1.0 / static_cast<double>(side);
      for (std::size_t i = 0; i < side; ++i) {
        double row = 0.0;
        double col = 0.0;
        for (std::size_t j = 0; j < side; ++j) {
          row += table[i * side + j];
          col += table[j * side + i];
        }
        worst = std::max({worst, std::abs(row - target), std::abs(col - target)});
      }
    }
    return worst;
  }
};

inline CharDist char_dist_state(const StateVector& psi) {
  require_budget(psi.n <= 6, "char_dist_state: qubits <= 6");
  CharDist d{psi.n, DistKind::state, {}};
  const u64 total = u64{1} << (2 * psi.n);
  d.table.resize(total);
  const double scale = 1.0 / static_cast<double>(pow2(psi.n));
  for (u64 x = 0; x < total; ++x) {
    const double e = weyl_expectation(psi.amp, x, psi.n);
    d.table[x] = scale * e * e;
  }
  return d;
}

/// tr(P_x M) for every x, from the sparse form of P_x.
inline std::vector<cplx> weyl_traces(const Mat& m, std::size_t n) {
  const u64 total = u64{1} << (2 * n);
  const u64 d = u64{1} << n;
  const u64 mask = d - 1;
  std::vector<cplx> out(total);
  for (u64 x = 0; x < total; ++x) {
    const u64 a = x >> n;
    const u64 b = x & mask;
    cplx acc = 0.0;
    for (u64 z = 0; z < d; ++z) {
      const cplx v = m(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(z ^ a));
      acc += (popc(b & z) & 1U) ? -v : v;
    }
    out[x] = acc * i_pow(popc(a & b));
  }
  return out;
}

/// Fourier coefficients U = sum_x coef(x) P_x, coef(x) = tr(P_x U) / 2^n.
inline std::vector<cplx> weyl_coefficients(const DenseUnitary& u) {
  auto t = weyl_traces(u.m, u.n);
  const double s = 1.0 / static_cast<double>(pow2(u.n));
  for (auto& c : t) c *= s;
  return t;
}

inline CharDist char_dist_unitary(const DenseUnitary& u) {
  require_budget(u.n <= 4, "char_dist_unitary: qubits <= 4");
  const std::size_t n = u.n;
  const u64 side = u64{1} << (2 * n);
  CharDist d{n, DistKind::unitary, std::vector<double>(side * side)};
  const double scale = 1.0 / std::pow(2.0, 4.0 * static_cast<double>(n));
  for (u64 y = 0; y < side; ++y) {
    const Mat m = u.m * weyl_matrix_code(n, y) * u.m.adjoint();
    const auto tr = weyl_traces(m, n);
    for (u64 x = 0; x < side; ++x) d.table[(x << (2 * n)) | y] = scale * std::norm(tr[x]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Fidelity oracles
// ---------------------------------------------------------------------------

/// max over Stab(n) of |<S|psi>|^2.
inline double f_stab(const StateVector& psi) {
  require_budget(psi.n <= 4, "f_stab: qubits <= 4");
  double best = 0.0;
  for (const auto& s : stabilizer_state_vectors(psi.n)) best = std::max(best, std::norm(s.dot(psi.amp)));
  return std::min(best, 1.0);
}

/// Index into enumerate_stabilizer_states(n) of the first maximizer.
inline std::size_t f_stab_argmax(const StateVector& psi) {
  require_budget(psi.n <= 4, "f_stab: qubits <= 4");
  const auto& all = stabilizer_state_vectors(psi.n);
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double f = std::norm(all[i].dot(psi.amp));
    if (f > best) {
      best = f;
      arg = i;
    }
  }
  return arg;
}

/// max over projective Cl(n) of 2^{-2n} |tr(U^dag C)|^2.
inline double f_cliff(const DenseUnitary& u) {
  require_budget(u.n >= 1 && u.n <= 2, "f_cliff: 1 <= qubits <= 2");
  const double norm = 1.0 / std::pow(4.0, static_cast<double>(u.n));
  const Mat ud = u.m.adjoint();
  double best = 0.0;
  for (const auto& c : clifford_matrices(u.n)) {
    // tr(U^dag C) without forming the product.
    const cplx tr = (ud.transpose().cwiseProduct(c)).sum();
    best = std::max(best, norm * std::norm(tr));
  }
  return std::min(best, 1.0);
}

// ---------------------------------------------------------------------------
// Weights of subspaces
// ---------------------------------------------------------------------------

inline double subspace_weight(const CharDist& d, const Subspace& v) {
  if (v.ambient_dim() != d.label_bits()) throw DimensionMismatch("subspace_weight: ambient dimension mismatch");
  double w = 0.0;
  for_each_element(v, [&](const BitVec& x) { w += d.at(x.to_u64()); });
  return w;
}

inline double shifted_weight(const CharDist& d, const Subspace& v, const BitVec& shift) {
  if (v.ambient_dim() != d.label_bits() || shift.size() != d.label_bits()) {
    throw DimensionMismatch("shifted_weight: ambient dimension mismatch");
  }
  double w = 0.0;
  for_each_element(v, [&](const BitVec& x) { w += d.at((x ^ shift).to_u64()); });
  return w;
}

/// {z : 2^m p(z) > 1/2} where 2^m is the Hilbert-space dimension of the
/// underlying state (the Choi state for the unitary kind).
inline std::vector<BitVec> high_weight_set(const CharDist& d) {
  const std::size_t qubits = d.kind == DistKind::state ? d.n : 2 * d.n;
  const double scale = static_cast<double>(pow2(qubits));
  std::vector<BitVec> out;
  for (u64 z = 0; z < d.table.size(); ++z) {
    if (scale * d.table[z] > 0.5 + 1e-12) out.push_back(BitVec::from_u64(d.label_bits(), z));
  }
  return out;
}

/// Form under which high_weight_set(d) is isotropic.
inline Form high_weight_form(const CharDist& d) {
  return d.kind == DistKind::state ? Form::symplectic : Form::paired;
}

// ---------------------------------------------------------------------------
// Clifford Lagrangians and extendable subspaces (pairs (x, y) in F2^{4n})
// ---------------------------------------------------------------------------

/// Graph {(x, Sx)} as a subspace of F2^{4n}.
inline Subspace graph_of(const BitMatrix& s) {
  const std::size_t m = s.rows();
  std::vector<BitVec> rows;
  for (std::size_t j = 0; j < m; ++j) rows.push_back(BitVec::unit(m, j).concat(s.col(j)));
  return Subspace::span(2 * m, rows);
}

/// The dual pair split of a subspace of F2^{2m}: left and right halves of its basis.
inline std::pair<BitMatrix, BitMatrix> split_pairs(const Subspace& v) {
  const std::size_t h = v.ambient_dim() / 2;
  return {v.basis().col_block(0, h), v.basis().col_block(h, h)};
}

/// S in Sp(2n) with M = {(x, Sx)} if M is such a graph, else nullopt.
inline std::optional<BitMatrix> is_clifford_lagrangian(const Subspace& m) {
  if (m.ambient_dim() % 4 != 0) throw DimensionMismatch("is_clifford_lagrangian: ambient dimension not 4n");
  if (!is_lagrangian(m, Form::paired)) throw InvalidInput("is_clifford_lagrangian: subspace is not Lagrangian");
  const auto [xs, ys] = split_pairs(m);
  const auto xinv = inverse(xs.transpose());
  if (!xinv) return std::nullopt;
  BitMatrix s = ys.transpose() * *xinv;
  if (!is_symplectic(s)) return std::nullopt;
  return s;
}

struct ExtendableSplit {
  Subspace v_prime;  // graph part, in F2^{4n}
  Subspace l0;       // {x : (x, 0) in V}, in F2^{2n}
  Subspace r0;       // {y : (0, y) in V}, in F2^{2n}
};

/// V = V' + (L0 + 0) + (0 + R0) with V' the graph of a form-preserving
/// bijection between its two projections.
inline ExtendableSplit extract_extendable(const Subspace& v) {
  const std::size_t m4 = v.ambient_dim();
  if (m4 % 4 != 0) throw DimensionMismatch("extract_extendable: ambient dimension not 4n");
  if (!is_isotropic(v, Form::paired)) throw InvalidInput("extract_extendable: subspace is not isotropic");
  const std::size_t h = m4 / 2;
  std::vector<BitVec> left_gens;
  std::vector<BitVec> right_gens;
  for (std::size_t i = 0; i < h; ++i) {
    left_gens.push_back(BitVec::unit(h, i).concat(BitVec(h)));
    right_gens.push_back(BitVec(h).concat(BitVec::unit(h, i)));
  }
  const Subspace left_part = intersect(v, Subspace::span(m4, left_gens));
  const Subspace right_part = intersect(v, Subspace::span(m4, right_gens));
  std::vector<BitVec> l0;
  std::vector<BitVec> r0;
  for (const auto& r : left_part.basis().row_list()) l0.push_back(r.slice(0, h));
  for (const auto& r : right_part.basis().row_list()) r0.push_back(r.slice(h, h));
  const auto comp = complement_basis(left_part + right_part, v);
  return {Subspace::span(m4, comp), Subspace::span(h, l0), Subspace::span(h, r0)};
}

/// Form-preserving map given on a basis: images[i] = F(domain[i]).
struct PartialSymplecticMap {
  std::vector<BitVec> domain;
  std::vector<BitVec> images;

  static PartialSymplecticMap from_graph(const Subspace& v) {
    PartialSymplecticMap f;
    const std::size_t h = v.ambient_dim() / 2;
    for (const auto& r : v.basis().row_list()) {
      f.domain.push_back(r.slice(0, h));
      f.images.push_back(r.slice(h, h));
    }
    return f;
  }
};

/// Witt extension: a full S in Sp(2n) with S x_i = F x_i. Domain vectors are
/// added one at a time; each new u gets an image v outside span(images) with
/// [v, y_i] = [u, x_i], found by walking the solution coset.
inline BitMatrix extend_to_symplectic(const PartialSymplecticMap& f, std::size_t n) {
  require_budget(n <= 6, "extend_to_symplectic: qubits <= 6");
  const std::size_t m = 2 * n;
  if (f.domain.size() != f.images.size()) throw DimensionMismatch("extend_to_symplectic: size mismatch");
  std::vector<BitVec> xs = f.domain;
  std::vector<BitVec> ys = f.images;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != m || ys[i].size() != m) throw DimensionMismatch("extend_to_symplectic: vector length");
    for (std::size_t j = 0; j <= i; ++j) {
      if (symplectic_inner(xs[i], xs[j]) != symplectic_inner(ys[i], ys[j])) {
        throw InvalidInput("extend_to_symplectic: map does not preserve the symplectic form");
      }
    }
  }
  if (Subspace::span(m, xs).dim() != xs.size() || Subspace::span(m, ys).dim() != ys.size()) {
    throw InvalidInput("extend_to_symplectic: map is not a bijection on a basis");
  }
  for (std::size_t e = 0; e < m && xs.size() < m; ++e) {
    const BitVec u = BitVec::unit(m, e);
    if (Subspace::span(m, xs).contains(u)) continue;
    // Constraints [v, y_i] = [u, x_i], i.e. v . swap(y_i) = c_i.
    BitMatrix sys(0, m);
    BitVec rhs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sys.push_row(swap_halves(ys[i]));
      rhs.set(i, symplectic_inner(u, xs[i]));
    }
    const auto v0 = solve(sys, rhs);
    if (!v0) throw InternalError("extend_to_symplectic: constraint system inconsistent");
    const Subspace yspan = Subspace::span(m, ys);
    std::optional<BitVec> pick;
    // Prefer fixing u, so extensions of identities stay identities.
    if (!yspan.contains(u) && sys.apply(u) == rhs) pick = u;
    for_each_element(kernel(sys), [&](const BitVec& k) {
      if (!pick && !yspan.contains(*v0 ^ k)) pick = *v0 ^ k;
    });
    if (!pick) throw InternalError("extend_to_symplectic: no admissible image");
    xs.push_back(u);
    ys.push_back(*pick);
  }
  BitMatrix xm(m, m);
  BitMatrix ym(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      xm.set(i, j, xs[j].get(i));
      ym.set(i, j, ys[j].get(i));
    }
  }
  const auto xinv = inverse(xm);
  if (!xinv) throw InternalError("extend_to_symplectic: domain basis singular");
  BitMatrix s = ym * *xinv;
  if (!is_symplectic(s)) throw InternalError("extend_to_symplectic: result not symplectic");
  return s;
}

// ---------------------------------------------------------------------------
// Bell measurement
// ---------------------------------------------------------------------------

/// |<<P_y|psi>|^2 for every y in F2^{2n}, psi on 2n qubits.
inline std::vector<double> bell_probabilities(const StateVector& psi) {
  if (psi.n % 2 != 0) throw InvalidInput("bell_measure: odd qubit count");
  const std::size_t n = psi.n / 2;
  const u64 d = u64{1} << n;
  const u64 total = u64{1} << (2 * n);
  std::vector<double> p(total);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (u64 y = 0; y < total; ++y) {
    const u64 a = y >> n;
    const u64 b = y & (d - 1);
    // <<P_y| = <Omega|(P_y^dag (x) I); entry (z ^ a, z) of P_y carries the phase.
    cplx acc = 0.0;
    for (u64 z = 0; z < d; ++z) {
      const cplx amp = psi.amp(static_cast<Eigen::Index>(((z ^ a) << n) | z));
      acc += (popc(b & z) & 1U) ? -amp : amp;
    }
    p[y] = std::norm(acc * std::conj(i_pow(popc(a & b))) * s);
  }
  return p;
}

/// Sample an index from a probability vector by inversion.
inline std::size_t sample_index(const std::vector<double>& p, Rng& rng) {
  const double r = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (r < acc) return i;
  }
  // Rounding slack: return the last index with positive mass.
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return p.size() - 1;
}

inline WeylLabel bell_measure(const StateVector& psi, Rng& rng) {
  const auto p = bell_probabilities(psi);
  return WeylLabel::from_code(psi.n / 2, sample_index(p, rng));
}

// ---------------------------------------------------------------------------
// Stabilizer/Clifford gap instances
// ---------------------------------------------------------------------------

/// U = sum_{x in F2^k} |x><x| (x) U^(x) with U^(0) = I and the other blocks
/// Haar on n - k qubits.
inline DenseUnitary gap_instance(std::size_t n, std::size_t k, Rng& rng) {
  require_budget(n <= 5, "gap_instance: qubits <= 5");
  if (k > n) throw InvalidInput("gap_instance: need k <= n");
  const auto block = static_cast<Eigen::Index>(pow2(n - k));
  const auto d = static_cast<Eigen::Index>(pow2(n));
  Mat u = Mat::Zero(d, d);
  for (Eigen::Index x = 0; x < static_cast<Eigen::Index>(pow2(k)); ++x) {
    u.block(x * block, x * block, block, block) =
        x == 0 ? Mat::Identity(block, block) : haar_unitary(static_cast<std::size_t>(block), rng);
  }
  return {n, u};
}

/// The stabilizer state 2^{-(n-k)/2} sum_y |0^k y>|0^k y> on 2n qubits, whose
/// overlap with the Choi state of gap_instance(n, k) is 2^{-k}.
inline StateVector gap_witness(std::size_t n, std::size_t k) {
  const auto d = static_cast<Eigen::Index>(pow2(n));
  const auto block = static_cast<Eigen::Index>(pow2(n - k));
  Vec v = Vec::Zero(d * d);
  const double s = 1.0 / std::sqrt(static_cast<double>(block));
  for (Eigen::Index y = 0; y < block; ++y) v(y * d + y) = s;
  return {2 * n, v};
}

}  // namespace clab
