#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "commutant.hpp"
#include "densesim.hpp"
#include "norms.hpp"
#include "testers.hpp"

namespace clab {

/// One named property with its worst observed slack. A check passes when the
/// slack is nonnegative; informational checks never fail the run.
struct CheckResult {
  std::string suite;
  std::string name;
  std::string statement;
  bool passed = true;
  bool asserted = true;
  double margin = std::numeric_limits<double>::infinity();
  std::size_t samples = 0;
  double seconds = 0.0;
  std::string detail;
};

struct VerifyOptions {
  u64 seed = 0;
  std::optional<std::size_t> n;  // restrict sampled checks to one qubit count
  std::optional<int> seeds;      // override per-check sample counts
  std::size_t jobs = 1;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed || !c.asserted; });
  }
  const CheckResult* first_failure() const {
    for (const auto& c : checks) {
      if (c.asserted && !c.passed) return &c;
    }
    return nullptr;
  }
};

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names{"fidelity", "norms", "commutant", "testers", "appendixA"};
  return names;
}

namespace detail {

class Slack {
 public:
  void at_least(double lhs, double rhs, double tol = 0.0) { add(lhs - rhs + tol); }
  void at_most(double lhs, double rhs, double tol = 0.0) { add(rhs - lhs + tol); }
  void close(double a, double b, double tol) { add(tol - std::abs(a - b)); }
  void holds(bool ok) { add(ok ? 0.0 : -1.0); }
  void add(double s) {
    worst_ = std::min(worst_, s);
    ++samples_;
  }
  double worst() const { return worst_; }
  std::size_t samples() const { return samples_; }

 private:
  double worst_ = std::numeric_limits<double>::infinity();
  std::size_t samples_ = 0;
};

inline u64 name_key(const std::string& s) {
  u64 h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

/// Haar samples alternate with Clifford-times-near-identity samples so both
/// the generic and the high-fidelity regimes are covered.
inline DenseUnitary mixed_unitary_sample(std::size_t n, std::size_t i, Rng& rng) {
  if (i % 2 == 0) return haar_dense_unitary(n, rng);
  const Mat c = clifford_matrix(random_clifford(n, rng)).m;
  return {n, c * random_near_identity(pow2(n), 0.05 + 0.6 * rng.uniform(), rng)};
}

inline BitMatrix random_bit_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  BitMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m.set(i, j, rng.below(2) == 1);
  }
  return m;
}

inline BitVec random_bits(Rng& rng, std::size_t len) {
  BitVec v(len);
  for (std::size_t i = 0; i < len; ++i) v.set(i, rng.below(2) == 1);
  return v;
}

inline Mat random_density_matrix(std::size_t dim, Rng& rng) {
  RVec w(static_cast<Eigen::Index>(dim));
  for (auto& x : w) x = rng.uniform();
  const Mat g = haar_unitary(dim, rng) * w.cast<cplx>().asDiagonal();
  Mat rho = g * g.adjoint();
  return rho / rho.trace();
}

struct CheckDef {
  std::string suite;
  std::string name;
  std::string statement;
  std::function<void(Slack&, Rng&, const VerifyOptions&, CheckResult&)> run;
  bool asserted = true;
};

inline std::vector<std::size_t> qubit_range(const VerifyOptions& o, std::size_t lo, std::size_t hi) {
  if (o.n) {
    if (*o.n < lo || *o.n > hi) return {};
    return {*o.n};
  }
  std::vector<std::size_t> out;
  for (std::size_t n = lo; n <= hi; ++n) out.push_back(n);
  return out;
}

inline int count_for(const VerifyOptions& o, int fallback) { return o.seeds ? *o.seeds : fallback; }

inline double diag_mass(const CharDist& p) {
  double s = 0.0;
  for (u64 x = 0; x < pow2(2 * p.n); ++x) s += p.at(x, x);
  return s;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

inline void add_fidelity_checks(std::vector<CheckDef>& out) {
  const std::string s = "fidelity";
  out.push_back({s, "gf2.dual_involution", "dual(dual(V)) = V for standard and symplectic forms, all V with ambient <= 8",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t m = 1; m <= 8; ++m) {
                     for (std::size_t k = 0; k <= m; ++k) {
                       for_each_subspace(m, k, [&](const Subspace& v) {
                         const auto d = dual(v, Form::standard);
                         sl.holds(d.dim() + v.dim() == m && dual(d, Form::standard) == v);
                         if (m % 2 == 0) sl.holds(dual(dual(v, Form::symplectic), Form::symplectic) == v);
                       });
                     }
                   }
                 }});
  out.push_back({s, "gf2.rank_nullity", "rank(M) + dim ker(M) = cols on random matrices",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (int i = 0; i < count_for(o, 300); ++i) {
                     const auto m = random_bit_matrix(rng, 1 + rng.below(12), 1 + rng.below(12));
                     const auto k = kernel(m);
                     bool ok = rank(m) + k.dim() == m.cols();
                     for (const auto& v : k.basis().row_list()) ok = ok && m.apply(v).is_zero();
                     sl.holds(ok);
                   }
                 }});
  out.push_back({s, "gf2.symplectic_form", "symplectic form is alternating, symmetric and bilinear",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (int i = 0; i < count_for(o, 500); ++i) {
                     const std::size_t len = 2 * (1 + rng.below(5));
                     const auto x = random_bits(rng, len);
                     const auto y = random_bits(rng, len);
                     const auto z = random_bits(rng, len);
                     sl.holds(!symplectic_inner(x, x) && symplectic_inner(x, y) == symplectic_inner(y, x) &&
                              symplectic_inner(x ^ y, z) == (symplectic_inner(x, z) != symplectic_inner(y, z)));
                   }
                 }});
  out.push_back({s, "gf2.rref_canonical", "two bases of one row space have identical RREF",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (int i = 0; i < count_for(o, 200); ++i) {
                     const auto m = random_bit_matrix(rng, 2 + rng.below(5), 1 + rng.below(10));
                     BitMatrix mixed = m;
                     for (int step = 0; step < 20; ++step) {
                       const auto a = rng.below(m.rows());
                       const auto b = rng.below(m.rows());
                       if (a != b) mixed.row(a) ^= mixed.row(b);
                     }
                     mixed.push_row(mixed.row(0) ^ mixed.row(mixed.rows() - 1));
                     sl.holds(rref(m).matrix == rref(mixed).matrix);
                   }
                 }});
  out.push_back({s, "pauli.weyl_orthogonality", "P_x Hermitian and unitary, tr(P_x P_y) = 2^n delta_xy, n <= 2",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t n = 1; n <= 2; ++n) {
                     const auto& ws = weyl_matrices(n);
                     const double d = static_cast<double>(pow2(n));
                     for (std::size_t x = 0; x < ws.size(); ++x) {
                       sl.close(max_abs_diff(ws[x], ws[x].adjoint()), 0.0, 1e-12);
                       sl.holds(is_unitary(ws[x]));
                       for (std::size_t y = 0; y < ws.size(); ++y) {
                         sl.close(std::abs((ws[x] * ws[y]).trace() - cplx(x == y ? d : 0.0)), 0.0, 1e-12);
                       }
                     }
                   }
                 }});
  out.push_back({s, "pauli.weyl_commutation", "P_x P_y = (-1)^[x,y] P_y P_x, n <= 2",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t n = 1; n <= 2; ++n) {
                     const auto& ws = weyl_matrices(n);
                     for (u64 x = 0; x < ws.size(); ++x) {
                       for (u64 y = 0; y < ws.size(); ++y) {
                         const double sign = packed::symplectic(x, y, static_cast<unsigned>(n)) ? -1.0 : 1.0;
                         sl.close(max_abs_diff(ws[x] * ws[y], sign * ws[y] * ws[x]), 0.0, 1e-12);
                       }
                     }
                   }
                 }});
  out.push_back({s, "pauli.clifford_conjugation", "C P_x C^dag is a signed Weyl operator for every enumerated C, n <= 2",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t n = 1; n <= 2; ++n) {
                     const auto& cs = enumerate_cliffords(n);
                     const auto& mats = clifford_matrices(n);
                     for (std::size_t k = 0; k < cs.size(); ++k) {
                       for (u64 x = 0; x < pow2(2 * n); ++x) {
                         const Mat img = mats[k] * weyl_matrix_code(n, x) * mats[k].adjoint();
                         const Mat target = weyl_matrix(WeylLabel{n, cs[k].symplectic.apply(BitVec::from_u64(2 * n, x))});
                         sl.close(std::min(max_abs_diff(img, target), max_abs_diff(img, -target)), 0.0, 1e-12);
                       }
                     }
                   }
                 }});
  out.push_back({s, "pauli.clifford_choi_is_stabilizer", "F_Stab(|C>>) = 1 for all C in Cl(1)",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (const auto& c : clifford_matrices(1)) sl.close(f_stab(choi_state({1, c})), 1.0, 1e-12);
                 }});
  out.push_back({s, "densesim.char_dist_marginals", "characteristic distributions are normalized with uniform marginals",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 3)) {
                     for (int i = 0; i < count_for(o, 10); ++i) {
                       sl.at_most(char_dist_unitary(haar_dense_unitary(n, rng)).invariant_violation(), 0.0, 1e-10);
                       sl.at_most(char_dist_state(haar_state(n, rng)).invariant_violation(), 0.0, 1e-10);
                     }
                   }
                 }});
  out.push_back({s, "densesim.char_dist_unitary_vs_choi", "p_U equals the characteristic distribution of |U>>",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 3)) {
                     for (int i = 0; i < count_for(o, 5); ++i) {
                       const auto u = haar_dense_unitary(n, rng);
                       const auto pu = char_dist_unitary(u);
                       const auto pc = char_dist_state(choi_state(u));
                       double err = 0.0;
                       for (u64 x = 0; x < pow2(2 * n); ++x) {
                         for (u64 y = 0; y < pow2(2 * n); ++y) {
                           err = std::max(err, std::abs(pu.at(x, y) - pc.at(pair_to_choi_label(x, y, n))));
                         }
                       }
                       sl.at_most(err, 0.0, 1e-10);
                     }
                   }
                 }});
  auto fidelity_samples = [](const VerifyOptions& o, std::size_t n) { return count_for(o, n == 1 ? 200 : 25); };
  out.push_back({s, "densesim.fidelity_sandwich", "F_Stab(|U>>)^6 <= f_cliff(U) <= F_Stab(|U>>)",
                 [fidelity_samples](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 2)) {
                     for (int i = 0; i < fidelity_samples(o, n); ++i) {
                       const auto u = mixed_unitary_sample(n, static_cast<std::size_t>(i), rng);
                       const double fs = f_stab(choi_state(u));
                       const double fc = f_cliff(u);
                       sl.at_least(fc, std::pow(fs, 6));
                       sl.at_most(fc, fs, 1e-9);
                     }
                   }
                 }});
  out.push_back({s, "densesim.fidelity_equivalence", "|f_cliff - F_Stab(|U>>)| <= 1e-9 whenever F_Stab > 1/2",
                 [fidelity_samples](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult& r) {
                   std::size_t hits = 0;
                   for (std::size_t n : qubit_range(o, 1, 2)) {
                     for (int i = 0; i < fidelity_samples(o, n); ++i) {
                       const auto u = mixed_unitary_sample(n, static_cast<std::size_t>(i), rng);
                       const double fs = f_stab(choi_state(u));
                       if (fs <= 0.5) continue;
                       ++hits;
                       sl.close(f_cliff(u), fs, 1e-9);
                     }
                   }
                   r.detail = std::to_string(hits) + " samples above one half";
                 }});
  out.push_back({s, "densesim.lagrangian_weight_bounds",
                 "p(M) <= f_stab for every Lagrangian M, max_M p(M) >= f_stab^2, 2^n sum p^2 >= f_stab^4, n <= 2",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 2)) {
                     const auto lagr = enumerate_lagrangians(n);
                     for (int i = 0; i < count_for(o, 20); ++i) {
                       const auto psi = haar_state(n, rng);
                       const auto p = char_dist_state(psi);
                       const double fs = f_stab(psi);
                       double best = 0.0;
                       for (const auto& m : lagr) {
                         const double w = subspace_weight(p, m);
                         sl.at_most(w, fs, 1e-12);
                         best = std::max(best, w);
                       }
                       sl.at_least(best, fs * fs, 1e-12);
                       sl.at_least(static_cast<double>(pow2(n)) * p.power_sum(2), std::pow(fs, 4), 1e-12);
                     }
                   }
                 }});
  out.push_back({s, "densesim.shift_monotonicity", "p(V) >= p(V + s) for every subspace V and shift s, n <= 3",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 3)) {
                     for (int i = 0; i < count_for(o, 2); ++i) {
                       const auto p = char_dist_state(haar_state(n, rng));
                       const std::size_t m = 2 * n;
                       for (std::size_t k = 0; k <= m; ++k) {
                         for_each_subspace(m, k, [&](const Subspace& v) {
                           const double w = subspace_weight(p, v);
                           double worst = std::numeric_limits<double>::infinity();
                           for (u64 sh = 0; sh < (u64{1} << m); ++sh) {
                             const auto shift = BitVec::from_u64(m, sh);
                             if (!v.contains(shift)) worst = std::min(worst, w - shifted_weight(p, v, shift));
                           }
                           if (std::isfinite(worst)) sl.add(worst + 1e-12);
                         });
                       }
                     }
                   }
                 }});
  out.push_back({s, "densesim.high_weight_isotropy", "the high-weight set of p_psi (and of p_U under the paired form) spans an isotropic subspace",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (int i = 0; i < count_for(o, 60); ++i) {
                     const std::size_t n = 1 + static_cast<std::size_t>(i % 3);
                     Vec v = stabilizer_state_vector(random_stabilizer_state(n, rng)).amp + 0.3 * haar_vector(pow2(n), rng);
                     v /= v.norm();
                     sl.holds(is_isotropic(Subspace::span(2 * n, high_weight_set(char_dist_state({n, v}))), Form::symplectic));
                   }
                   for (int i = 0; i < count_for(o, 10); ++i) {
                     const auto u = gap_instance(2, 1, rng);
                     sl.holds(is_isotropic(Subspace::span(8, high_weight_set(char_dist_unitary(u))), Form::paired));
                   }
                 }});
  out.push_back({s, "densesim.clifford_lagrangian_bound", "f_cliff(U) >= p_U(graph of S) for every S in Sp(2), n = 1",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   if (o.n && *o.n != 1) return;
                   for (int i = 0; i < count_for(o, 50); ++i) {
                     const auto u = mixed_unitary_sample(1, static_cast<std::size_t>(i), rng);
                     const auto p = char_dist_unitary(u);
                     const double fc = f_cliff(u);
                     for (const auto& sp : enumerate_symplectic(1)) sl.at_most(subspace_weight(p, graph_of(sp)), fc, 1e-12);
                   }
                 }});
  out.push_back({s, "densesim.collision_diagonal_bound", "max_x |U^(x)|^2 >= sum_x p_U(x, x), n <= 3",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 3)) {
                     for (int i = 0; i < count_for(o, 10); ++i) {
                       const auto u = haar_dense_unitary(n, rng);
                       double mx = 0.0;
                       for (const auto& c : weyl_coefficients(u)) mx = std::max(mx, std::norm(c));
                       sl.at_least(mx, diag_mass(char_dist_unitary(u)), 1e-12);
                     }
                   }
                 }});
}

inline void add_norm_checks(std::vector<CheckDef>& out) {
  const std::string s = "norms";
  out.push_back({s, "norms.q2_and_q3_identities", "||U||_Q2^4 = sum_x p_U(x,x) and ||U||_Q3^8 = 4^n ||p_U||_2^2, n <= 2",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   std::vector<DenseUnitary> us;
                   for (std::size_t n : qubit_range(o, 1, 2)) {
                     for (int i = 0; i < count_for(o, 25); ++i) us.push_back(mixed_unitary_sample(n, static_cast<std::size_t>(i), rng));
                   }
                   if (!o.n || *o.n == 1) {
                     for (const auto& c : clifford_matrices(1)) us.push_back({1, c});
                   }
                   for (const auto& u : us) {
                     const auto p = char_dist_unitary(u);
                     sl.close(Qk_norm(u, 2).power, diag_mass(p), 1e-9);
                     sl.close(Qk_norm(u, 3).power, static_cast<double>(pow2(2 * u.n)) * p.power_sum(2), 1e-9);
                   }
                 }});
  out.push_back({s, "norms.q3_equals_choi_u3", "||U||_Q3 = || |U>> ||_U3, n <= 2",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 2)) {
                     for (int i = 0; i < count_for(o, 25); ++i) {
                       const auto u = mixed_unitary_sample(n, static_cast<std::size_t>(i), rng);
                       sl.close(Qk_norm(u, 3).value, gowers_Uk(choi_state(u), 3).value, 1e-9);
                     }
                   }
                 }});
  out.push_back({s, "norms.u3_collision", "||psi||_U3^8 = 2^n ||p_psi||_2^2, n <= 3",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 3)) {
                     for (int i = 0; i < count_for(o, 17); ++i) {
                       const auto psi = haar_state(n, rng);
                       sl.close(gowers_Uk(psi, 3).power, static_cast<double>(pow2(n)) * char_dist_state(psi).power_sum(2), 1e-9);
                     }
                   }
                 }});
  out.push_back({s, "norms.clifford_unit_q3", "||C||_Q3 = 1 for every C in Cl(1)",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (const auto& c : clifford_matrices(1)) sl.close(Qk_norm({1, c}, 3).value, 1.0, 1e-10);
                 }});
  out.push_back({s, "norms.q3_inverse_direction", "f_cliff(U) > 0 whenever ||U||_Q3 > 2^{-n/4} (recorded only)",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult& r) {
                   std::size_t above = 0;
                   std::size_t agree = 0;
                   for (std::size_t n : qubit_range(o, 1, 2)) {
                     for (int i = 0; i < count_for(o, 25); ++i) {
                       const auto u = mixed_unitary_sample(n, static_cast<std::size_t>(i), rng);
                       if (Qk_norm(u, 3).value <= std::pow(2.0, -static_cast<double>(n) / 4.0)) continue;
                       ++above;
                       const double fc = f_cliff(u);
                       agree += fc > 0.0 ? 1 : 0;
                       sl.add(fc);
                     }
                   }
                   r.detail = std::to_string(agree) + "/" + std::to_string(above) + " samples above threshold have f_cliff > 0";
                 },
                 false});
}

inline void add_commutant_checks(std::vector<CheckDef>& out) {
  const std::string s = "commutant";
  out.push_back({s, "commutant.self_dual_counts", "|SD(2t)| = 1, 3, 15, 135 for t = 1..4",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   const std::vector<std::size_t> want{1, 3, 15, 135};
                   for (std::size_t t = 1; t <= 4; ++t) sl.close(double(enumerate_sd(t).size()), double(want[t - 1]), 0.0);
                 }});
  out.push_back({s, "commutant.sigma_counts", "|Sigma_tt| = 1, 2, 6, 30, 270 for t = 1..5",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   const std::vector<std::size_t> want{1, 2, 6, 30, 270};
                   for (std::size_t t = 1; t <= 5; ++t) sl.close(double(enumerate_sigma_tt(t).size()), double(want[t - 1]), 0.0);
                 }});
  out.push_back({s, "commutant.sigma_structure", "every T in Sigma_tt is self-dual, totally isotropic and contains 1_2t",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t t = 1; t <= 5; ++t) {
                     for (const auto& lbl : enumerate_sigma_tt(t)) {
                       sl.holds(dual(lbl.code.space, Form::standard) == lbl.code.space &&
                                lbl.code.space.contains(BitVec::ones(2 * t)) && is_totally_isotropic(lbl.code.space));
                     }
                   }
                 }});
  out.push_back({s, "commutant.inclusion_chain", "S_t = O_t^(1) within Sigma_tt; 24 < 30 at t = 4; all 6 at t = 3",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t t = 1; t <= 5; ++t) {
                     const auto perms = enumerate_permutations(t);
                     const auto so = enumerate_stochastic_orthogonal(t);
                     sl.holds(perms.size() == so.size());
                     for (const auto& q : so) {
                       const auto g = StochasticLagrangian{graph_code(q)};
                       const auto& sig = enumerate_sigma_tt(t);
                       sl.holds(std::find(sig.begin(), sig.end(), g) != sig.end());
                     }
                   }
                   sl.holds(enumerate_stochastic_orthogonal(3).size() == 6 && enumerate_sigma_tt(3).size() == 6);
                   sl.holds(enumerate_stochastic_orthogonal(4).size() == 24 && enumerate_sigma_tt(4).size() == 30);
                 }});
  out.push_back({s, "commutant.rank_lemmas", "rank(A) = rank(B) and rank(G_I) >= |I| on every code, t <= 4",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t t = 1; t <= 4; ++t) {
                     for (const auto& d : enumerate_sd(t)) {
                       const auto [ra, rb] = block_ranks(d);
                       sl.holds(ra == rb);
                       sl.add(static_cast<double>(min_pair_rank_slack(d)));
                     }
                   }
                 }});
  out.push_back({s, "commutant.r_commutes_with_cliffords", "[R(T), C^(x)t] = 0 for C in Cl(1), T in Sigma_tt, t <= 4",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t t = 1; t <= 4; ++t) {
                     for (const auto& lbl : enumerate_sigma_tt(t)) {
                       const Mat r = R_operator(lbl.code, 1);
                       for (const auto& c : clifford_matrices(1)) {
                         const Mat ct = kron_power(c, t);
                         sl.close(max_abs_diff(r * ct, ct * r), 0.0, 1e-12);
                       }
                     }
                   }
                 }});
  out.push_back({s, "commutant.gram_closed_form", "tr(R(T)^dag R(T')) = 2^{n dim(T cap T')}, n = 1 (t <= 4), n = 2 (t <= 3)",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t n = 1; n <= 2; ++n) {
                     for (std::size_t t = 1; t <= (n == 1 ? 4U : 3U); ++t) {
                       const auto dense = gram_weingarten(n, t);
                       const auto closed = gram_weingarten_closed_form(n, t);
                       sl.close((dense.gram - closed.gram).cwiseAbs().maxCoeff(), 0.0, 1e-9);
                       sl.at_most(dense.pinv_residual(), 0.0, 1e-8);
                     }
                   }
                 }});
  out.push_back({s, "commutant.twirl_equivalence", "Cl(1) group average equals the Weingarten expansion, t = 2..4",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t t = 2; t <= 4; ++t) {
                     const CommutantProjector proj(1, t);
                     for (int i = 0; i < count_for(o, 3); ++i) {
                       const Mat rho = random_density_matrix(pow2(t), rng);
                       sl.close(max_abs_diff(clifford_twirl_exact(1, t, rho), proj(rho)), 0.0, 1e-8);
                     }
                   }
                 }});
  out.push_back({s, "commutant.ppt_overlap", "|tr(R(T) rho)| <= 1 on random product states, t <= 4, n = 1",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t t = 1; t <= 4; ++t) {
                     for (int i = 0; i < count_for(o, 100); ++i) {
                       std::vector<Mat> f;
                       for (std::size_t k = 0; k < t; ++k) f.push_back(random_density_matrix(2, rng));
                       for (const auto& lbl : enumerate_sigma_tt(t)) sl.at_most(ppt_overlap_check(lbl, f), 1.0, 1e-10);
                     }
                   }
                 }});
  out.push_back({s, "commutant.partial_transpose_trace_norm", "min_S ||R(T)^Gamma_S||_1 <= 2^{t-1} for T != e, t <= 4, n = 1",
                 [](Slack& sl, Rng&, const VerifyOptions&, CheckResult&) {
                   for (std::size_t t = 2; t <= 4; ++t) {
                     const auto e = identity_code(t);
                     for (const auto& lbl : enumerate_sigma_tt(t)) {
                       if (lbl.code == e) continue;
                       sl.at_most(min_trace_norm_pt(lbl).value, std::ldexp(1.0, static_cast<int>(t - 1)), 1e-8);
                     }
                   }
                 }});
  out.push_back({s, "commutant.four_copy_average", "E_S |S><S|^(x)4 matches its closed form, n = 1, 2",
                 [](Slack& sl, Rng&, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 2)) sl.close(max_abs_diff(avg_stab_fourcopy(n), fourcopy_formula(n)), 0.0, 1e-10);
                 }});
}

inline void add_tester_checks(std::vector<CheckDef>& out) {
  const std::string s = "testers";
  out.push_back({s, "testers.clifford_completeness", "pacc(C) = 1 on Cl(1) and random Cl(2); 1000/1000 shots accept",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (const auto& c : clifford_matrices(1)) sl.close(pacc_exact({1, c}), 1.0, 1e-10);
                   for (int i = 0; i < count_for(o, 100); ++i) sl.close(pacc_exact(clifford_matrix(random_clifford(2, rng))), 1.0, 1e-10);
                   TesterConfig cfg;
                   cfg.shots = 1000;
                   cfg.seed = rng.next();
                   cfg.jobs = o.jobs;
                   cfg.keep_log = false;
                   sl.holds(run_4query(clifford_matrix(random_clifford(2, rng)), cfg).accepts == 1000);
                 }});
  out.push_back({s, "testers.t_gate_acceptance", "pacc(T) = 3/4 and the 10^5-shot rate is within 4 sigma",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult& r) {
                   const DenseUnitary t{1, gates::t_gate()};
                   sl.close(pacc_exact(t), 0.75, 1e-12);
                   TesterConfig cfg;
                   cfg.shots = 100000;
                   cfg.seed = rng.next();
                   cfg.jobs = o.jobs;
                   cfg.keep_log = false;
                   const auto rep = run_4query(t, cfg);
                   sl.close(rep.rate, 0.75, 4.0 * std::sqrt(0.75 * 0.25 / 1e5));
                   r.detail = "rate " + std::to_string(rep.rate);
                 }});
  out.push_back({s, "testers.acceptance_bounds",
                 "f_cliff^4 <= pacc <= (1 + F_Stab(|U>>))/2 and 1 - pacc >= min(1/4, (1 - f_cliff)/2)",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 2)) {
                     for (int i = 0; i < count_for(o, n == 1 ? 200 : 25); ++i) {
                       const auto u = mixed_unitary_sample(n, static_cast<std::size_t>(i), rng);
                       const double p = pacc_exact(u);
                       const double fc = f_cliff(u);
                       sl.at_most(p, (1.0 + f_stab(choi_state(u))) / 2.0, 1e-9);
                       sl.at_least(p, std::pow(fc, 4), 1e-9);
                       sl.at_least(1.0 - p, std::min(0.25, (1.0 - fc) / 2.0), 1e-9);
                     }
                   }
                 }});
  out.push_back({s, "testers.monte_carlo_consistency", "run_4query rate within 4 sigma of pacc on 50 random U",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   TesterConfig cfg;
                   cfg.shots = 4000;
                   cfg.jobs = o.jobs;
                   cfg.keep_log = false;
                   for (int i = 0; i < count_for(o, 50); ++i) {
                     const std::size_t n = o.n.value_or(1 + static_cast<std::size_t>(i % 2));
                     const auto u = mixed_unitary_sample(n, static_cast<std::size_t>(i), rng);
                     cfg.seed = rng.next();
                     const auto rep = run_4query(u, cfg);
                     const double p = *rep.exact;
                     sl.close(rep.rate, p, 4.0 * std::sqrt(std::max(p * (1 - p), 1e-12) / 4000.0) + 1e-12);
                   }
                 }});
  out.push_back({s, "testers.single_copy_completeness", "the single-copy tester accepts every Clifford with certainty",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   TesterConfig cfg;
                   cfg.epsilon = 0.2;
                   cfg.keep_log = false;
                   for (int i = 0; i < count_for(o, 20); ++i) {
                     cfg.seed = rng.next();
                     const std::size_t n = o.n.value_or(1 + static_cast<std::size_t>(i % 2));
                     sl.holds(run_aux_free_single_copy(clifford_matrix(random_clifford(n, rng)), cfg).accept);
                   }
                 }});
  out.push_back({s, "testers.single_copy_soundness", "T (x) I at eps = 0.05 rejected in >= 2/3 of 200 meta-runs",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult& r) {
                   const DenseUnitary u = tensor({1, gates::t_gate()}, DenseUnitary::identity(1));
                   TesterConfig cfg;
                   cfg.epsilon = 0.05;
                   cfg.keep_log = false;
                   const int runs = count_for(o, 200);
                   int rejects = 0;
                   for (int i = 0; i < runs; ++i) {
                     cfg.seed = rng.next();
                     rejects += run_aux_free_single_copy(u, cfg).accept ? 0 : 1;
                   }
                   const double freq = static_cast<double>(rejects) / runs;
                   sl.at_least(freq, 2.0 / 3.0);
                   r.detail = "reject frequency " + std::to_string(freq);
                 }});
  out.push_back({s, "testers.average_stabilizer_fidelity",
                 "f_cliff(U) <= E_S |<S|U|S>|^2 <= ((F_Stab(|U>>) + 7)/8 + 9 2^-n)^(1/4)",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t n : qubit_range(o, 1, 2)) {
                     for (int i = 0; i < count_for(o, n == 1 ? 100 : 10); ++i) {
                       const auto u = mixed_unitary_sample(n, static_cast<std::size_t>(i), rng);
                       const double avg = avg_stab_fidelity_exact(u);
                       sl.at_least(avg, f_cliff(u), 1e-9);
                       sl.at_most(avg, avg_stab_fidelity_upper(f_stab(choi_state(u)), n), 1e-9);
                     }
                   }
                 }});
  out.push_back({s, "testers.leaf_two_ways", "leaf distributions from group average and commutant expansion agree, t <= 3",
                 [](Slack& sl, Rng& rng, const VerifyOptions& o, CheckResult&) {
                   for (std::size_t t = 1; t <= 3; ++t) {
                     for (int i = 0; i < count_for(o, 5); ++i) {
                       Strategy st;
                       for (std::size_t k = 0; k < t; ++k) {
                         const Mat u = haar_unitary(2, rng);
                         st.rounds.push_back({random_density_matrix(2, rng),
                                              {u.col(0) * u.col(0).adjoint(), u.col(1) * u.col(1).adjoint()}});
                       }
                       const auto a = leaf_distribution(st, ChannelEnsemble::clifford, LeafMethod::group_average);
                       const auto b = leaf_distribution(st, ChannelEnsemble::clifford, LeafMethod::commutant_expansion);
                       for (std::size_t l = 0; l < a.size(); ++l) sl.close(a[l], b[l], 1e-8);
                     }
                   }
                 }});
}

inline void add_partial_transpose_checks(std::vector<CheckDef>& out) {
  const std::string s = "appendixA";
  for (auto rule : {PivotRule::reuse_pivot, PivotRule::literal}) {
    const std::string tag = rule == PivotRule::literal ? "literal" : "reuse_pivot";
    out.push_back({s, "appendixA.unitary_partial_transpose." + tag,
                   "on every code in SD(2t), t <= 4: full-rank left block, orthogonal O, unitary dense transpose, loop invariant",
                   [rule](Slack& sl, Rng&, const VerifyOptions&, CheckResult& r) {
                     std::size_t codes = 0;
                     for (std::size_t t = 1; t <= 4; ++t) {
                       for (const auto& d : enumerate_sd(t)) {
                         ++codes;
                         PartialTransposeOptions opt;
                         opt.rule = rule;
                         opt.on_step = [&](const PartialTransposeStep& st) {
                           bool reduced = true;
                           for (std::size_t row = 0; row < t; ++row) {
                             for (std::size_t c = 0; c < st.columns_done; ++c) reduced = reduced && st.generator->get(row, c) == (row == c);
                           }
                           sl.holds(reduced);
                         };
                         const auto res = unitary_partial_transpose(d, opt);
                         const auto moved = partial_transpose_code(d, res.transposed);
                         sl.holds(rank(moved.left()) == t && is_orthogonal(res.orthogonal) && moved == graph_code(res.orthogonal));
                         sl.holds(is_unitary(partial_transpose_dense(R_operator(d, 1), res.transposed, 1), 1e-10));
                       }
                     }
                     r.detail = std::to_string(codes) + " codes";
                   }});
  }
}

inline std::vector<CheckDef> all_checks() {
  std::vector<CheckDef> out;
  add_fidelity_checks(out);
  add_norm_checks(out);
  add_commutant_checks(out);
  add_tester_checks(out);
  add_partial_transpose_checks(out);
  return out;
}

}  // namespace detail

/// Runs every check in `suite` ("all" for everything). Each check draws from
/// its own stream keyed by the master seed and the check name.
inline VerifyReport run_verify(const std::string& suite, const VerifyOptions& opt,
                               const std::function<void(const CheckResult&)>& progress = {}) {
  const auto& names = verify_suites();
  if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end()) {
    throw InvalidInput("verify: unknown suite '" + suite + "'");
  }
  VerifyReport rep;
  for (const auto& def : detail::all_checks()) {
    if (suite != "all" && def.suite != suite) continue;
    CheckResult r;
    r.suite = def.suite;
    r.name = def.name;
    r.statement = def.statement;
    r.asserted = def.asserted;
    detail::Slack sl;
    Rng rng(stream_seed(opt.seed, detail::name_key(def.name)));
    const auto start = std::chrono::steady_clock::now();
    try {
      def.run(sl, rng, opt, r);
      r.margin = sl.worst();
      r.samples = sl.samples();
      r.passed = r.margin >= 0.0;
    } catch (const std::exception& e) {
      r.passed = false;
      r.margin = -std::numeric_limits<double>::infinity();
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (progress) progress(r);
    rep.checks.push_back(std::move(r));
  }
  return rep;
}

}  // namespace clab
