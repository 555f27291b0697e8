#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "pauli.hpp"

namespace clab {

enum class NormConvention { sum, expectation };

struct NormValue {
  int k = 0;
  double value = 0.0;  // the norm itself
  double power = 0.0;  // value^(2^k), the quantity the identities are about
  NormConvention convention = NormConvention::sum;
};

namespace detail {

inline NormValue finish(int k, cplx raw, NormConvention conv) {
  // The raw nested sum is real and nonnegative; tiny negative or imaginary
  // parts are rounding.
  const double p = std::max(raw.real(), 0.0);
  return {k, std::pow(p, 1.0 / static_cast<double>(1 << k)), p, conv};
}

inline cplx gowers_nested(const std::vector<cplx>& f, int k) {
  if (k == 0) {
    cplx s = 0.0;
    for (const auto& v : f) s += v;
    return s;
  }
  cplx total = 0.0;
  std::vector<cplx> d(f.size());
  for (std::size_t h = 0; h < f.size(); ++h) {
    for (std::size_t x = 0; x < f.size(); ++x) d[x] = f[x ^ h] * std::conj(f[x]);
    total += gowers_nested(d, k - 1);
  }
  return total;
}

inline cplx qk_nested(const Mat& a, int k, const std::vector<Mat>& weyl) {
  const double dim = static_cast<double>(a.rows());
  if (k == 0) return a.trace() / dim;
  cplx total = 0.0;
  const Mat ad = a.adjoint();
  for (const auto& p : weyl) total += qk_nested(p * a * p * ad, k - 1, weyl);
  return total / static_cast<double>(weyl.size());
}

}  // namespace detail

/// Gowers U^k norm of the amplitude function x -> <x|psi>, with sums over
/// x, h_1..h_k (no normalization).
inline NormValue gowers_Uk(const StateVector& psi, int k) {
  if (k < 1 || k > 3) throw InvalidInput("gowers_Uk: k must be 1, 2 or 3");
  require_budget(psi.n * static_cast<std::size_t>(k + 1) <= 24, "gowers_Uk: qubits * (k + 1) <= 24");
  std::vector<cplx> f(psi.amp.data(), psi.amp.data() + psi.amp.size());
  return detail::finish(k, detail::gowers_nested(f, k), NormConvention::sum);
}

/// Q^k norm: E over directions x_1..x_k of 2^{-n} tr(d_{x_k} ... d_{x_1} A),
/// with the multiplicative derivative d_x A = P_x A P_x^dag A^dag.
inline NormValue Qk_norm(const DenseUnitary& u, int k) {
  if (k < 1 || k > 3) throw InvalidInput("Qk_norm: k must be 1, 2 or 3");
  require_budget(u.n <= 3, "Qk_norm: qubits <= 3");
  return detail::finish(k, detail::qk_nested(u.m, k, weyl_matrices(u.n)), NormConvention::expectation);
}

/// One level of the nesting: E_x ||d_x U||_{Q^{k-1}}^{2^{k-1}}, each term
/// computed by Qk_norm on the unitary d_x U. Equals Qk_norm(u, k).power.
inline double Qk_power_by_nesting(const DenseUnitary& u, int k) {
  if (k < 1 || k > 3) throw InvalidInput("Qk_power_by_nesting: k must be 1, 2 or 3");
  require_budget(u.n <= 3, "Qk_norm: qubits <= 3");
  const auto& weyl = weyl_matrices(u.n);
  double acc = 0.0;
  const Mat ad = u.m.adjoint();
  for (const auto& p : weyl) {
    const DenseUnitary d{u.n, p * u.m * p * ad};
    acc += k == 1 ? std::real(d.m.trace()) / static_cast<double>(d.m.rows()) : Qk_norm(d, k - 1).power;
  }
  return acc / static_cast<double>(weyl.size());
}

}  // namespace clab
