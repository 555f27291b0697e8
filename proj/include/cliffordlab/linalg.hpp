#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>

#include "errors.hpp"
#include "random.hpp"

namespace clab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kUnitaryTol = 1e-10;

inline std::size_t pow2(std::size_t k) { return std::size_t{1} << k; }

inline Mat kron(const Mat& a, const Mat& b) {
  Mat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return r;
}

inline Vec kron(const Vec& a, const Vec& b) {
  Vec r(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) r.segment(i * b.size(), b.size()) = a(i) * b;
  return r;
}

inline Mat kron_power(const Mat& a, std::size_t k) {
  Mat r = Mat::Identity(1, 1);
  for (std::size_t i = 0; i < k; ++i) r = kron(r, a);
  return r;
}

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double max_abs_diff(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch("max_abs_diff: shape mismatch");
  return max_abs(a - b);
}

inline bool is_unitary(const Mat& u, double tol = kUnitaryTol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - Mat::Identity(u.rows(), u.cols())) <= tol;
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// R's diagonal pushed into Q.
inline Mat haar_unitary(std::size_t dim, Rng& rng) {
  Mat g(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = cplx(re, im) / std::sqrt(2.0);
    }
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(dim, dim);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < dim; ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a > 0 ? d / a : cplx(1.0));
  }
  return q;
}

/// Haar-random unit vector.
inline Vec haar_vector(std::size_t dim, Rng& rng) {
  Vec v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v(i) = cplx(re, im);
  }
  return v / v.norm();
}

/// exp(i * scale * H) for H drawn from the Gaussian unitary ensemble with unit
/// operator-norm scale; small `scale` gives unitaries near the identity.
inline Mat random_near_identity(std::size_t dim, double scale, Rng& rng) {
  Mat h(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      h(i, j) = cplx(re, im);
    }
  }
  h = 0.5 * (h + h.adjoint()) / std::sqrt(static_cast<double>(dim));
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Vec phases(dim);
  for (std::size_t i = 0; i < dim; ++i) phases(i) = std::polar(1.0, scale * es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// Sum of singular values.
inline double trace_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().sum();
}

/// Moore-Penrose pseudo-inverse of a real symmetric matrix; eigenvalues with
/// |lambda| <= rel_cut * max|lambda| are dropped.
inline RMat symmetric_pinv(const RMat& g, double rel_cut = 1e-10) {
  Eigen::SelfAdjointEigenSolver<RMat> es(g);
  const RVec& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  RVec inv = RVec::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > rel_cut * top) inv(i) = 1.0 / ev(i);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Pure state on n qubits; qubit 0 is the most significant index bit.
struct StateVector {
  std::size_t n = 0;
  Vec amp;

  StateVector() = default;
  StateVector(std::size_t qubits, Vec amplitudes) : n(qubits), amp(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amp.size()) != pow2(n)) {
      throw DimensionMismatch("StateVector: amplitude count is not 2^n");
    }
    if (std::abs(amp.norm() - 1.0) > kUnitaryTol) throw InvalidInput("StateVector: not normalized");
  }

  static StateVector basis(std::size_t qubits, std::size_t index) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(pow2(qubits)));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return {qubits, v};
  }
};

struct DenseUnitary {
  std::size_t n = 0;
  Mat m;

  DenseUnitary() = default;
  DenseUnitary(std::size_t qubits, Mat entries) : n(qubits), m(std::move(entries)) {
    if (static_cast<std::size_t>(m.rows()) != pow2(n) || m.rows() != m.cols()) {
      throw DimensionMismatch("DenseUnitary: matrix is not 2^n x 2^n");
    }
    if (!is_unitary(m)) throw InvalidInput("DenseUnitary: matrix is not unitary");
  }

  static DenseUnitary identity(std::size_t qubits) {
    const auto d = static_cast<Eigen::Index>(pow2(qubits));
    return {qubits, Mat::Identity(d, d)};
  }
};

inline DenseUnitary haar_dense_unitary(std::size_t n, Rng& rng) { return {n, haar_unitary(pow2(n), rng)}; }

inline StateVector haar_state(std::size_t n, Rng& rng) { return {n, haar_vector(pow2(n), rng)}; }

inline DenseUnitary tensor(const DenseUnitary& a, const DenseUnitary& b) { return {a.n + b.n, kron(a.m, b.m)}; }

/// Single-qubit gates used throughout tests and examples.
namespace gates {

inline Mat t_gate() {
  Mat m = Mat::Identity(2, 2);
  m(1, 1) = std::polar(1.0, std::acos(-1.0) / 4.0);
  return m;
}

inline Mat hadamard() {
  Mat m(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  m << s, s, s, -s;
  return m;
}

inline Mat phase_s() {
  Mat m = Mat::Identity(2, 2);
  m(1, 1) = cplx(0.0, 1.0);
  return m;
}

}  // namespace gates

}  // namespace clab
