#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "gf2.hpp"
#include "linalg.hpp"
#include "random.hpp"

namespace clab {

inline constexpr std::size_t kMaxDenseQubits = 6;

// ---------------------------------------------------------------------------
// Weyl labels and phased Paulis
// ---------------------------------------------------------------------------

/// x = (a|b) in F2^{2n}; P_x = i^{a.b} X^a Z^b. As an integer code,
/// x = (a << n) | b with qubit 0 the most significant bit of a and of b.
struct WeylLabel {
  std::size_t n = 0;
  BitVec x;

  WeylLabel() = default;
  WeylLabel(std::size_t qubits, BitVec bits) : n(qubits), x(std::move(bits)) {
    if (x.size() != 2 * n) throw DimensionMismatch("WeylLabel: label length must be 2n");
  }

  static WeylLabel identity(std::size_t n) { return {n, BitVec(2 * n)}; }
  static WeylLabel from_code(std::size_t n, u64 code) { return {n, BitVec::from_u64(2 * n, code)}; }

  /// Letters I, X, Y, Z, one per qubit.
  static WeylLabel from_letters(std::string_view s) {
    const std::size_t n = s.size();
    BitVec x(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
      switch (s[j]) {
        case 'I':
          break;
        case 'X':
          x.set(j, true);
          break;
        case 'Z':
          x.set(n + j, true);
          break;
        case 'Y':
          x.set(j, true);
          x.set(n + j, true);
          break;
        default:
          throw InvalidInput("WeylLabel: unknown Pauli letter '" + std::string(1, s[j]) + "'");
      }
    }
    return {n, x};
  }

  bool a(std::size_t j) const { return x.get(j); }
  bool b(std::size_t j) const { return x.get(n + j); }
  u64 code() const { return x.to_u64(); }

  std::string letters() const {
    std::string s(n, 'I');
    for (std::size_t j = 0; j < n; ++j) {
      const int v = (a(j) ? 1 : 0) | (b(j) ? 2 : 0);
      s[j] = "IXZY"[v];
    }
    return s;
  }

  friend bool operator==(const WeylLabel& p, const WeylLabel& q) { return p.n == q.n && p.x == q.x; }
  friend bool operator<(const WeylLabel& p, const WeylLabel& q) {
    return p.n != q.n ? p.n < q.n : p.x < q.x;
  }
};

/// i^phase * P_label.
struct PhasedPauli {
  WeylLabel label;
  unsigned phase = 0;

  static PhasedPauli parse(std::string_view s) {
    unsigned ph = 0;
    std::size_t pos = 0;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
      if (s[pos] == '-') ph = 2;
      ++pos;
    }
    if (pos < s.size() && s[pos] == 'i') {
      ph = (ph + 1) % 4;
      ++pos;
    }
    return {WeylLabel::from_letters(s.substr(pos)), ph};
  }

  std::string to_string() const {
    static constexpr std::array<const char*, 4> prefix = {"+", "+i", "-", "-i"};
    return std::string(prefix[phase % 4]) + label.letters();
  }

  friend bool operator==(const PhasedPauli& p, const PhasedPauli& q) {
    return p.label == q.label && p.phase % 4 == q.phase % 4;
  }
};

/// Exponent e in Z4 with sigma_u sigma_v = i^e sigma_{u+v} for single-qubit
/// Weyl operators u = (x1, z1), v = (x2, z2).
inline int single_qubit_phase(bool x1, bool z1, bool x2, bool z2) {
  if (!x1 && !z1) return 0;
  if (x1 && z1) return static_cast<int>(z2) - static_cast<int>(x2);
  if (x1) return static_cast<int>(z2) * (2 * static_cast<int>(x2) - 1);
  return static_cast<int>(x2) * (1 - 2 * static_cast<int>(z2));
}

/// Exponent e in Z4 with P_x P_y = i^e P_{x+y}.
inline unsigned weyl_product_phase(const WeylLabel& x, const WeylLabel& y) {
  if (x.n != y.n) throw DimensionMismatch("weyl product: qubit count mismatch");
  int e = 0;
  for (std::size_t j = 0; j < x.n; ++j) e += single_qubit_phase(x.a(j), x.b(j), y.a(j), y.b(j));
  return static_cast<unsigned>(((e % 4) + 4) % 4);
}

inline PhasedPauli weyl_mul(const PhasedPauli& p, const PhasedPauli& q) {
  if (p.label.n != q.label.n) throw DimensionMismatch("weyl_mul: qubit count mismatch");
  const unsigned e = weyl_product_phase(p.label, q.label);
  return {WeylLabel(p.label.n, p.label.x ^ q.label.x), (p.phase + q.phase + e) % 4};
}

inline cplx i_pow(unsigned e) {
  switch (e % 4) {
    case 0:
      return {1.0, 0.0};
    case 1:
      return {0.0, 1.0};
    case 2:
      return {-1.0, 0.0};
    default:
      return {0.0, -1.0};
  }
}

// Integer-code kernels: P_x |z> = i^{|a&b|} (-1)^{|b&z|} |z ^ a>.

inline unsigned popc(u64 v) { return static_cast<unsigned>(std::popcount(v)); }

/// P_x psi for x given as an integer code on n qubits.
inline Vec apply_weyl(const Vec& psi, u64 code, std::size_t n) {
  const u64 mask = (u64{1} << n) - 1;
  const u64 a = (code >> n) & mask;
  const u64 b = code & mask;
  const cplx ph = i_pow(popc(a & b));
  Vec out(psi.size());
  for (u64 z = 0; z < static_cast<u64>(psi.size()); ++z) {
    const cplx v = (popc(b & z) & 1U) ? -psi(static_cast<Eigen::Index>(z)) : psi(static_cast<Eigen::Index>(z));
    out(static_cast<Eigen::Index>(z ^ a)) = ph * v;
  }
  return out;
}

/// <psi| P_x |psi>, real since P_x is Hermitian.
inline double weyl_expectation(const Vec& psi, u64 code, std::size_t n) {
  const u64 mask = (u64{1} << n) - 1;
  const u64 a = (code >> n) & mask;
  const u64 b = code & mask;
  cplx acc = 0.0;
  for (u64 z = 0; z < static_cast<u64>(psi.size()); ++z) {
    const cplx term = std::conj(psi(static_cast<Eigen::Index>(z ^ a))) * psi(static_cast<Eigen::Index>(z));
    acc += (popc(b & z) & 1U) ? -term : term;
  }
  return (acc * i_pow(popc(a & b))).real();
}

inline Mat weyl_matrix_code(std::size_t n, u64 code) {
  const u64 mask = (u64{1} << n) - 1;
  const u64 a = (code >> n) & mask;
  const u64 b = code & mask;
  const cplx ph = i_pow(popc(a & b));
  const auto d = static_cast<Eigen::Index>(pow2(n));
  Mat m = Mat::Zero(d, d);
  for (u64 z = 0; z < static_cast<u64>(d); ++z) {
    m(static_cast<Eigen::Index>(z ^ a), static_cast<Eigen::Index>(z)) = (popc(b & z) & 1U) ? -ph : ph;
  }
  return m;
}

inline Mat weyl_matrix(const WeylLabel& lbl) {
  require_budget(lbl.n <= kMaxDenseQubits, "weyl_matrix: qubits <= 6");
  return weyl_matrix_code(lbl.n, lbl.code());
}

inline Mat phased_matrix(const PhasedPauli& p) { return i_pow(p.phase) * weyl_matrix(p.label); }

/// All 4^n Weyl matrices indexed by integer code; cached for n <= 4.
inline const std::vector<Mat>& weyl_matrices(std::size_t n) {
  require_budget(n <= 4, "weyl_matrices: qubits <= 4");
  static std::array<std::once_flag, 5> flags;
  static std::array<std::vector<Mat>, 5> cache;
  std::call_once(flags[n], [n] {
    const u64 total = u64{1} << (2 * n);
    cache[n].reserve(total);
    for (u64 c = 0; c < total; ++c) cache[n].push_back(weyl_matrix_code(n, c));
  });
  return cache[n];
}

// ---------------------------------------------------------------------------
// Stabilizer tableaux
// ---------------------------------------------------------------------------

struct StabilizerTableau {
  std::size_t n = 0;
  std::vector<PhasedPauli> generators;

  static StabilizerTableau zero_state(std::size_t n) {
    StabilizerTableau t{n, {}};
    for (std::size_t j = 0; j < n; ++j) {
      BitVec x(2 * n);
      x.set(n + j, true);
      t.generators.push_back({WeylLabel(n, x), 0});
    }
    return t;
  }

  static StabilizerTableau parse(const std::vector<std::string>& gens) {
    StabilizerTableau t;
    for (const auto& g : gens) t.generators.push_back(PhasedPauli::parse(g));
    t.n = t.generators.empty() ? 0 : t.generators.front().label.n;
    return t;
  }

  std::vector<std::string> to_strings() const {
    std::vector<std::string> out;
    for (const auto& g : generators) out.push_back(g.to_string());
    return out;
  }

  Subspace label_space() const {
    std::vector<BitVec> rows;
    for (const auto& g : generators) rows.push_back(g.label.x);
    return Subspace::span(2 * n, rows);
  }

  /// Throws InvalidInput unless the generators are n commuting Hermitian
  /// Paulis with independent labels (so they fix a unique state).
  void validate() const {
    if (generators.size() != n) throw InvalidInput("tableau: expected n generators");
    for (const auto& g : generators) {
      if (g.label.n != n) throw DimensionMismatch("tableau: generator qubit count mismatch");
      if (g.phase % 2 != 0) throw InvalidInput("tableau: generator phase must be +1 or -1");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (symplectic_inner(generators[i].label.x, generators[j].label.x)) {
          throw InvalidInput("tableau: generators do not commute");
        }
      }
    }
    if (label_space().dim() < n) {
      // Dependent labels: look for -I among products of subsets.
      require_budget(n <= 20, "tableau validation: qubits <= 20");
      for (u64 mask = 1; mask < (u64{1} << n); ++mask) {
        PhasedPauli acc{WeylLabel::identity(n), 0};
        for (std::size_t i = 0; i < n; ++i) {
          if ((mask >> i) & 1U) acc = weyl_mul(acc, generators[i]);
        }
        if (acc.label.x.is_zero() && acc.phase == 2) {
          throw InvalidInput("tableau: inconsistent, -I lies in the stabilizer group");
        }
      }
      throw InvalidInput("tableau: generator labels are not independent");
    }
  }

  /// Generators brought to RREF in the labels, with phases carried through
  /// the row operations. Two tableaux describe the same state iff their
  /// canonical forms are equal.
  StabilizerTableau canonical() const {
    std::vector<PhasedPauli> rows = generators;
    std::size_t r = 0;
    for (std::size_t c = 0; c < 2 * n && r < rows.size(); ++c) {
      std::size_t p = r;
      while (p < rows.size() && !rows[p].label.x.get(c)) ++p;
      if (p == rows.size()) continue;
      std::swap(rows[r], rows[p]);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i != r && rows[i].label.x.get(c)) rows[i] = weyl_mul(rows[i], rows[r]);
      }
      ++r;
    }
    return {n, rows};
  }

  friend bool operator==(const StabilizerTableau& s, const StabilizerTableau& t) {
    return s.n == t.n && s.generators == t.generators;
  }
};

/// The unique state fixed by every generator. Projects basis states through
/// prod (I + g_i)/2 until one survives; the global phase makes the first
/// nonzero amplitude real and positive.
inline StateVector stabilizer_state_vector(const StabilizerTableau& t) {
  require_budget(t.n <= kMaxDenseQubits, "stabilizer_state_vector: qubits <= 6");
  t.validate();
  const auto d = static_cast<Eigen::Index>(pow2(t.n));
  for (Eigen::Index r = 0; r < d; ++r) {
    Vec v = Vec::Zero(d);
    v(r) = 1.0;
    for (const auto& g : t.generators) {
      v = 0.5 * (v + i_pow(g.phase) * apply_weyl(v, g.label.code(), t.n));
    }
    const double nrm = v.norm();
    if (nrm < 1e-8) continue;
    v /= nrm;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (std::abs(v(k)) > 1e-9) {
        v *= std::abs(v(k)) / v(k);
        break;
      }
    }
    return {t.n, v};
  }
  throw InternalError("stabilizer_state_vector: empty joint eigenspace");
}

// ---------------------------------------------------------------------------
// Symplectic group and Clifford elements
// ---------------------------------------------------------------------------

/// Checks [Sx, Sy] = [x, y] on basis vectors; S acts on column vectors.
inline bool is_symplectic(const BitMatrix& s) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0) return false;
  const std::size_t m = s.rows();
  std::vector<BitVec> cols;
  for (std::size_t j = 0; j < m; ++j) cols.push_back(s.col(j));
  const std::size_t n = m / 2;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const bool want = (j == i + n);
      if (symplectic_inner(cols[i], cols[j]) != want) return false;
    }
  }
  return true;
}

/// Uniform element of Sp(2n, F2). Builds a symplectic basis
/// (v_1, w_1), ..., (v_n, w_n) pair by pair: each candidate is a uniform
/// vector projected onto the symplectic complement of the pairs chosen so
/// far, with rejection of v = 0 and of w with [v, w] = 0. The columns of S are
/// v_1..v_n followed by w_1..w_n.
inline BitMatrix random_symplectic(std::size_t n, Rng& rng) {
  const std::size_t m = 2 * n;
  std::vector<BitVec> vs;
  std::vector<BitVec> ws;
  auto random_vec = [&] {
    BitVec u(m);
    for (std::size_t i = 0; i < m; ++i) u.set(i, rng.bit());
    return u;
  };
  auto project = [&](BitVec u) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const bool cw = symplectic_inner(u, ws[i]);
      const bool cv = symplectic_inner(u, vs[i]);
      if (cw) u ^= vs[i];
      if (cv) u ^= ws[i];
    }
    return u;
  };
  for (std::size_t k = 0; k < n; ++k) {
    BitVec v;
    do {
      v = project(random_vec());
    } while (v.is_zero());
    BitVec w;
    do {
      w = project(random_vec());
    } while (!symplectic_inner(v, w));
    vs.push_back(v);
    ws.push_back(w);
  }
  BitMatrix s(m, m);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      s.set(i, j, vs[j].get(i));
      s.set(i, n + j, ws[j].get(i));
    }
  }
  return s;
}

/// Projective Clifford: C P_{e_j} C^dag = (-1)^{phase_bits_j} P_{S e_j} on the
/// basis labels e_j (X_1..X_n, then Z_1..Z_n).
struct CliffordElement {
  std::size_t n = 0;
  BitMatrix symplectic;
  BitVec phase_bits;

  static CliffordElement identity(std::size_t n) { return {n, BitMatrix::identity(2 * n), BitVec(2 * n)}; }

  PhasedPauli basis_image(std::size_t j) const {
    return {WeylLabel(n, symplectic.col(j)), phase_bits.get(j) ? 2U : 0U};
  }

  /// C (i^k P_x) C^dag.
  PhasedPauli conjugate(const PhasedPauli& p) const {
    if (p.label.n != n) throw DimensionMismatch("Clifford conjugate: qubit count mismatch");
    // P_x = i^{a.b} prod_j X_j^{a_j} prod_j Z_j^{b_j}.
    unsigned ab = 0;
    for (std::size_t j = 0; j < n; ++j) ab += (p.label.a(j) && p.label.b(j)) ? 1U : 0U;
    PhasedPauli acc{WeylLabel::identity(n), (p.phase + ab) % 4};
    for (std::size_t j = 0; j < 2 * n; ++j) {
      if (p.label.x.get(j)) acc = weyl_mul(acc, basis_image(j));
    }
    return acc;
  }

  StabilizerTableau conjugate(const StabilizerTableau& t) const {
    StabilizerTableau out{t.n, {}};
    for (const auto& g : t.generators) out.generators.push_back(conjugate(g));
    return out;
  }

  void validate() const {
    if (symplectic.rows() != 2 * n || phase_bits.size() != 2 * n) {
      throw DimensionMismatch("CliffordElement: shape does not match n");
    }
    if (!is_symplectic(symplectic)) throw InvalidInput("CliffordElement: matrix is not symplectic");
  }
};

inline CliffordElement random_clifford(std::size_t n, Rng& rng) {
  CliffordElement c{n, random_symplectic(n, rng), BitVec(2 * n)};
  for (std::size_t i = 0; i < 2 * n; ++i) c.phase_bits.set(i, rng.bit());
  return c;
}

/// Dense unitary of C, up to global phase. Column z is C|z> =
/// prod_{j : z_j = 1} (C X_j C^dag) C|0>, where C|0> is the state stabilized
/// by the images of the Z_j.
inline DenseUnitary clifford_matrix(const CliffordElement& c) {
  require_budget(c.n <= kMaxDenseQubits, "clifford_matrix: qubits <= 6");
  const std::size_t n = c.n;
  const auto d = static_cast<Eigen::Index>(pow2(n));
  const StateVector zero = stabilizer_state_vector(c.conjugate(StabilizerTableau::zero_state(n)));
  std::vector<PhasedPauli> ximg;
  for (std::size_t j = 0; j < n; ++j) ximg.push_back(c.basis_image(j));
  Mat m(d, d);
  for (Eigen::Index z = 0; z < d; ++z) {
    Vec v = zero.amp;
    for (std::size_t j = 0; j < n; ++j) {
      if ((static_cast<u64>(z) >> (n - 1 - j)) & 1U) {
        v = i_pow(ximg[j].phase) * apply_weyl(v, ximg[j].label.code(), n);
      }
    }
    m.col(z) = v;
  }
  return {n, m};
}

/// Sp(2n, F2) by exhaustive search over 2n x 2n matrices; n <= 2.
inline const std::vector<BitMatrix>& enumerate_symplectic(std::size_t n) {
  require_budget(n >= 1 && n <= 2, "enumerate_symplectic: 1 <= qubits <= 2");
  static std::array<std::once_flag, 3> flags;
  static std::array<std::vector<BitMatrix>, 3> cache;
  std::call_once(flags[n], [n] {
    const std::size_t m = 2 * n;
    const u64 total = u64{1} << (m * m);
    for (u64 bits = 0; bits < total; ++bits) {
      BitMatrix s(m, m);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) s.set(i, j, (bits >> (i * m + j)) & 1U);
      }
      if (is_symplectic(s)) cache[n].push_back(std::move(s));
    }
  });
  return cache[n];
}

/// Projective Cl(n) as Sp(2n) x F2^{2n}; n <= 2.
inline const std::vector<CliffordElement>& enumerate_cliffords(std::size_t n) {
  require_budget(n >= 1 && n <= 2, "enumerate_cliffords: 1 <= qubits <= 2");
  static std::array<std::once_flag, 3> flags;
  static std::array<std::vector<CliffordElement>, 3> cache;
  std::call_once(flags[n], [n] {
    for (const auto& s : enumerate_symplectic(n)) {
      for (u64 ph = 0; ph < (u64{1} << (2 * n)); ++ph) {
        cache[n].push_back({n, s, BitVec::from_u64(2 * n, ph)});
      }
    }
  });
  return cache[n];
}

inline const std::vector<Mat>& clifford_matrices(std::size_t n) {
  require_budget(n >= 1 && n <= 2, "clifford_matrices: 1 <= qubits <= 2");
  static std::array<std::once_flag, 3> flags;
  static std::array<std::vector<Mat>, 3> cache;
  std::call_once(flags[n], [n] {
    for (const auto& c : enumerate_cliffords(n)) cache[n].push_back(clifford_matrix(c).m);
  });
  return cache[n];
}

/// Lagrangian subspaces of F2^{2n} in the integer view (canonical RREF rows).
inline const std::vector<std::vector<u64>>& enumerate_lagrangians_packed(std::size_t n) {
  require_budget(n <= 4, "enumerate_lagrangians: qubits <= 4");
  static std::array<std::once_flag, 5> flags;
  static std::array<std::vector<std::vector<u64>>, 5> cache;
  std::call_once(flags[n], [n] {
    // Grow isotropic subspaces one vector at a time; dedup by canonical RREF.
    const unsigned m = static_cast<unsigned>(2 * n);
    std::vector<std::vector<u64>> level = {{}};
    for (std::size_t k = 0; k < n; ++k) {
      std::map<std::vector<u64>, bool> next;
      for (const auto& rows : level) {
        for (u64 v = 1; v < (u64{1} << m); ++v) {
          if (packed::reduce(v, rows) != v) continue;  // only reduced representatives
          bool iso = true;
          for (u64 r : rows) iso = iso && !packed::symplectic(r, v, static_cast<unsigned>(n));
          if (!iso) continue;
          auto grown = rows;
          grown.push_back(v);
          packed::rref(grown, m);
          next.emplace(std::move(grown), true);
        }
      }
      level.clear();
      for (auto& kv : next) level.push_back(kv.first);
    }
    cache[n] = std::move(level);
  });
  return cache[n];
}

inline std::vector<Subspace> enumerate_lagrangians(std::size_t n) {
  std::vector<Subspace> out;
  for (const auto& rows : enumerate_lagrangians_packed(n)) {
    out.push_back(packed::to_subspace(rows, static_cast<unsigned>(2 * n)));
  }
  return out;
}

/// All stabilizer states: each Lagrangian with every sign pattern on its
/// RREF generators. |Stab(n)| = 2^n prod_{k=1}^n (2^k + 1); n <= 4.
inline const std::vector<StabilizerTableau>& enumerate_stabilizer_states(std::size_t n) {
  require_budget(n <= 4, "enumerate_stabilizer_states: qubits <= 4");
  static std::array<std::once_flag, 5> flags;
  static std::array<std::vector<StabilizerTableau>, 5> cache;
  std::call_once(flags[n], [n] {
    for (const auto& rows : enumerate_lagrangians_packed(n)) {
      for (u64 signs = 0; signs < (u64{1} << n); ++signs) {
        StabilizerTableau t{n, {}};
        for (std::size_t i = 0; i < n; ++i) {
          t.generators.push_back({WeylLabel::from_code(n, rows[i]), ((signs >> i) & 1U) ? 2U : 0U});
        }
        cache[n].push_back(std::move(t));
      }
    }
  });
  return cache[n];
}

/// Dense vectors of enumerate_stabilizer_states(n), same order.
inline const std::vector<Vec>& stabilizer_state_vectors(std::size_t n) {
  require_budget(n <= 4, "stabilizer_state_vectors: qubits <= 4");
  static std::array<std::once_flag, 5> flags;
  static std::array<std::vector<Vec>, 5> cache;
  std::call_once(flags[n], [n] {
    const auto& states = enumerate_stabilizer_states(n);
    cache[n].reserve(states.size());
    for (const auto& t : states) cache[n].push_back(stabilizer_state_vector(t).amp);
  });
  return cache[n];
}

/// Uniform over Stab(n): a uniform Clifford applied to |0^n>.
inline StabilizerTableau random_stabilizer_state(std::size_t n, Rng& rng) {
  return random_clifford(n, rng).conjugate(StabilizerTableau::zero_state(n));
}

}  // namespace clab
