#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace clab {

using u64 = std::uint64_t;

// ---------------------------------------------------------------------------
// BitVec
// ---------------------------------------------------------------------------

/// Vector over F2. Component i lives in words[i / 64] at bit i % 64; bits past
/// len are kept zero. The integer view (to_u64 / from_u64) is big-endian in
/// components: component 0 is the most significant bit, so a symplectic label
/// (a|b) with a, b in F2^n reads as (a << n) | b.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t len) : len_(len), words_((len + 63) / 64, 0) {}

  static BitVec from_u64(std::size_t len, u64 value) {
    if (len > 64) throw InvalidInput("BitVec::from_u64: length exceeds 64");
    BitVec v(len);
    for (std::size_t i = 0; i < len; ++i) {
      if ((value >> (len - 1 - i)) & 1U) v.set(i, true);
    }
    return v;
  }

  static BitVec from_string(std::string_view s) {
    BitVec v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') {
        v.set(i, true);
      } else if (s[i] != '0') {
        throw InvalidInput("BitVec: expected '0' or '1' in \"" + std::string(s) + "\"");
      }
    }
    return v;
  }

  static BitVec unit(std::size_t len, std::size_t i) {
    BitVec v(len);
    v.set(i, true);
    return v;
  }

  static BitVec ones(std::size_t len) {
    BitVec v(len);
    for (std::size_t i = 0; i < len; ++i) v.set(i, true);
    return v;
  }

  std::size_t size() const noexcept { return len_; }
  const std::vector<u64>& words() const noexcept { return words_; }

  bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }
  bool operator[](std::size_t i) const noexcept { return get(i); }

  void set(std::size_t i, bool v) noexcept {
    const u64 m = u64{1} << (i & 63);
    if (v) {
      words_[i >> 6] |= m;
    } else {
      words_[i >> 6] &= ~m;
    }
  }
  void flip(std::size_t i) noexcept { words_[i >> 6] ^= u64{1} << (i & 63); }

  u64 to_u64() const {
    if (len_ > 64) throw InvalidInput("BitVec::to_u64: length exceeds 64");
    u64 r = 0;
    for (std::size_t i = 0; i < len_; ++i) r = (r << 1) | static_cast<u64>(get(i));
    return r;
  }

  std::string to_string() const {
    std::string s(len_, '0');
    for (std::size_t i = 0; i < len_; ++i) s[i] = get(i) ? '1' : '0';
    return s;
  }

  std::size_t weight() const noexcept {
    std::size_t w = 0;
    for (u64 x : words_) w += static_cast<std::size_t>(std::popcount(x));
    return w;
  }

  bool is_zero() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](u64 x) { return x == 0; });
  }

  /// Index of the first set component, or size() if zero.
  std::size_t first_one() const noexcept {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      if (words_[w]) return w * 64 + static_cast<std::size_t>(std::countr_zero(words_[w]));
    }
    return len_;
  }

  BitVec& operator^=(const BitVec& o) {
    check_len(o);
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= o.words_[w];
    return *this;
  }
  BitVec& operator&=(const BitVec& o) {
    check_len(o);
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= o.words_[w];
    return *this;
  }
  friend BitVec operator^(BitVec a, const BitVec& b) { return a ^= b; }
  friend BitVec operator&(BitVec a, const BitVec& b) { return a &= b; }

  /// Components [from, from + count).
  BitVec slice(std::size_t from, std::size_t count) const {
    if (from + count > len_) throw DimensionMismatch("BitVec::slice out of range");
    BitVec r(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (get(from + i)) r.set(i, true);
    }
    return r;
  }

  BitVec concat(const BitVec& o) const {
    BitVec r(len_ + o.len_);
    for (std::size_t i = 0; i < len_; ++i) {
      if (get(i)) r.set(i, true);
    }
    for (std::size_t i = 0; i < o.len_; ++i) {
      if (o.get(i)) r.set(len_ + i, true);
    }
    return r;
  }

  friend bool operator==(const BitVec& a, const BitVec& b) {
    return a.len_ == b.len_ && a.words_ == b.words_;
  }

  /// Orders by length, then lexicographically in components (component 0 first).
  friend bool operator<(const BitVec& a, const BitVec& b) {
    if (a.len_ != b.len_) return a.len_ < b.len_;
    for (std::size_t i = 0; i < a.len_; ++i) {
      if (a.get(i) != b.get(i)) return b.get(i);
    }
    return false;
  }

  std::size_t hash() const noexcept {
    std::size_t h = std::hash<std::size_t>{}(len_);
    for (u64 w : words_) h ^= std::hash<u64>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }

 private:
  void check_len(const BitVec& o) const {
    if (o.len_ != len_) throw DimensionMismatch("BitVec length mismatch");
  }

  std::size_t len_ = 0;
  std::vector<u64> words_;
};

struct BitVecHash {
  std::size_t operator()(const BitVec& v) const noexcept { return v.hash(); }
};

// ---------------------------------------------------------------------------
// Inner products
// ---------------------------------------------------------------------------

inline bool standard_inner(const BitVec& x, const BitVec& y) {
  if (x.size() != y.size()) throw DimensionMismatch("standard_inner: length mismatch");
  unsigned acc = 0;
  for (std::size_t w = 0; w < x.words().size(); ++w) {
    acc ^= static_cast<unsigned>(std::popcount(x.words()[w] & y.words()[w])) & 1U;
  }
  return acc & 1U;
}

/// [x, y] = a.b' + a'.b for x = (a|b), y = (a'|b').
inline bool symplectic_inner(const BitVec& x, const BitVec& y) {
  if (x.size() != y.size()) throw DimensionMismatch("symplectic_inner: length mismatch");
  if (x.size() % 2 != 0) throw InvalidInput("symplectic_inner: odd length");
  const std::size_t n = x.size() / 2;
  bool acc = false;
  for (std::size_t i = 0; i < n; ++i) {
    acc ^= (x.get(i) && y.get(n + i)) != (x.get(n + i) && y.get(i));
  }
  return acc;
}

/// Bilinear forms used on subspaces.
///   standard:   x.y
///   symplectic: [x, y] on F2^{2n} in (a|b) order
///   paired:     [x1, y1] + [x2, y2] on pairs (x, y) in F2^{2n} x F2^{2n}, the
///               form under which graphs of symplectic maps are Lagrangian
enum class Form { standard, symplectic, paired };

inline bool paired_inner(const BitVec& u, const BitVec& v) {
  if (u.size() != v.size()) throw DimensionMismatch("paired_inner: length mismatch");
  if (u.size() % 4 != 0) throw InvalidInput("paired_inner: length not divisible by 4");
  const std::size_t h = u.size() / 2;
  return symplectic_inner(u.slice(0, h), v.slice(0, h)) !=
         symplectic_inner(u.slice(h, h), v.slice(h, h));
}

inline bool inner(const BitVec& x, const BitVec& y, Form f) {
  switch (f) {
    case Form::standard:
      return standard_inner(x, y);
    case Form::symplectic:
      return symplectic_inner(x, y);
    case Form::paired:
      return paired_inner(x, y);
  }
  return false;
}

/// Swap of the two halves of a length-2m vector: (a|b) -> (b|a). The
/// symplectic form is [x, y] = x . swap_halves(y).
inline BitVec swap_halves(const BitVec& x) {
  const std::size_t h = x.size() / 2;
  return x.slice(h, h).concat(x.slice(0, h));
}

// ---------------------------------------------------------------------------
// BitMatrix
// ---------------------------------------------------------------------------

class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols) : cols_(cols), rows_(rows, BitVec(cols)) {}

  static BitMatrix identity(std::size_t n) {
    BitMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
  }

  static BitMatrix from_rows(std::size_t cols, std::vector<BitVec> rows) {
    BitMatrix m(0, cols);
    for (auto& r : rows) m.push_row(std::move(r));
    return m;
  }

  /// Rows given as '0'/'1' strings. All strings must have the same length;
  /// `cols` is needed only when the list is empty.
  static BitMatrix from_strings(const std::vector<std::string>& rows, std::size_t cols = 0) {
    if (!rows.empty()) cols = rows.front().size();
    BitMatrix m(0, cols);
    for (const auto& r : rows) m.push_row(BitVec::from_string(r));
    return m;
  }

  /// Canonical text form: rows separated by newlines.
  static BitMatrix parse(std::string_view text) {
    std::vector<std::string> rows;
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        if (!cur.empty()) rows.push_back(cur);
        cur.clear();
      } else if (c != '\r' && c != ' ') {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) rows.push_back(cur);
    return from_strings(rows);
  }

  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t cols() const noexcept { return cols_; }

  const BitVec& row(std::size_t i) const { return rows_.at(i); }
  BitVec& row(std::size_t i) { return rows_.at(i); }
  const std::vector<BitVec>& row_list() const noexcept { return rows_; }

  bool get(std::size_t i, std::size_t j) const { return rows_[i].get(j); }
  void set(std::size_t i, std::size_t j, bool v) { rows_[i].set(j, v); }

  void push_row(BitVec r) {
    if (r.size() != cols_) throw DimensionMismatch("BitMatrix::push_row: row length mismatch");
    rows_.push_back(std::move(r));
  }

  void swap_rows(std::size_t i, std::size_t j) { std::swap(rows_[i], rows_[j]); }

  void swap_cols(std::size_t i, std::size_t j) {
    for (auto& r : rows_) {
      const bool a = r.get(i);
      const bool b = r.get(j);
      r.set(i, b);
      r.set(j, a);
    }
  }

  BitVec col(std::size_t j) const {
    BitVec c(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
      if (get(i, j)) c.set(i, true);
    }
    return c;
  }

  BitMatrix transpose() const {
    BitMatrix t(cols_, rows());
    for (std::size_t i = 0; i < rows(); ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        if (get(i, j)) t.set(j, i, true);
      }
    }
    return t;
  }

  /// Columns [from, from + count).
  BitMatrix col_block(std::size_t from, std::size_t count) const {
    BitMatrix r(0, count);
    for (const auto& row : rows_) r.push_row(row.slice(from, count));
    return r;
  }

  BitMatrix hstack(const BitMatrix& o) const {
    if (o.rows() != rows()) throw DimensionMismatch("BitMatrix::hstack: row count mismatch");
    BitMatrix r(0, cols_ + o.cols_);
    for (std::size_t i = 0; i < rows(); ++i) r.push_row(rows_[i].concat(o.rows_[i]));
    return r;
  }

  BitMatrix vstack(const BitMatrix& o) const {
    if (o.cols() != cols_) throw DimensionMismatch("BitMatrix::vstack: column count mismatch");
    BitMatrix r = *this;
    for (const auto& row : o.rows_) r.push_row(row);
    return r;
  }

  /// Matrix-vector product M v (v a column vector of length cols).
  BitVec apply(const BitVec& v) const {
    if (v.size() != cols_) throw DimensionMismatch("BitMatrix::apply: length mismatch");
    BitVec r(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
      if (standard_inner(rows_[i], v)) r.set(i, true);
    }
    return r;
  }

  friend BitMatrix operator*(const BitMatrix& a, const BitMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("BitMatrix product: inner dimension mismatch");
    BitMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t k = 0; k < a.cols(); ++k) {
        if (a.get(i, k)) r.rows_[i] ^= b.rows_[k];
      }
    }
    return r;
  }

  friend BitMatrix operator+(const BitMatrix& a, const BitMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw DimensionMismatch("BitMatrix sum: shape mismatch");
    }
    BitMatrix r = a;
    for (std::size_t i = 0; i < a.rows(); ++i) r.rows_[i] ^= b.rows_[i];
    return r;
  }

  friend bool operator==(const BitMatrix& a, const BitMatrix& b) {
    return a.cols_ == b.cols_ && a.rows_ == b.rows_;
  }

  bool is_zero() const {
    return std::all_of(rows_.begin(), rows_.end(), [](const BitVec& r) { return r.is_zero(); });
  }

  std::vector<std::string> to_strings() const {
    std::vector<std::string> out;
    out.reserve(rows());
    for (const auto& r : rows_) out.push_back(r.to_string());
    return out;
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < rows(); ++i) {
      if (i) s.push_back('\n');
      s += rows_[i].to_string();
    }
    return s;
  }

 private:
  std::size_t cols_ = 0;
  std::vector<BitVec> rows_;
};

// ---------------------------------------------------------------------------
// Row reduction
// ---------------------------------------------------------------------------

struct RrefResult {
  BitMatrix matrix;                 // nonzero rows only
  std::vector<std::size_t> pivots;  // pivot column of each row
};

inline RrefResult rref(const BitMatrix& m) {
  std::vector<BitVec> rows = m.row_list();
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < rows.size(); ++c) {
    std::size_t p = r;
    while (p < rows.size() && !rows[p].get(c)) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[r], rows[p]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i != r && rows[i].get(c)) rows[i] ^= rows[r];
    }
    pivots.push_back(c);
    ++r;
  }
  rows.resize(r);
  return {BitMatrix::from_rows(m.cols(), std::move(rows)), std::move(pivots)};
}

inline std::size_t rank(const BitMatrix& m) { return rref(m).pivots.size(); }

/// Inverse of a square matrix, or nullopt if singular.
inline std::optional<BitMatrix> inverse(const BitMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("inverse: matrix not square");
  const std::size_t n = m.rows();
  const auto red = rref(m.hstack(BitMatrix::identity(n)));
  if (red.pivots.size() < n || (n > 0 && red.pivots[n - 1] != n - 1)) return std::nullopt;
  return red.matrix.col_block(n, n);
}

/// Some x with M x = b, or nullopt if inconsistent.
inline std::optional<BitVec> solve(const BitMatrix& m, const BitVec& b) {
  if (b.size() != m.rows()) throw DimensionMismatch("solve: right-hand side length mismatch");
  BitMatrix aug(0, m.cols() + 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    BitVec last(1);
    last.set(0, b.get(i));
    aug.push_row(m.row(i).concat(last));
  }
  const auto red = rref(aug);
  BitVec x(m.cols());
  for (std::size_t i = 0; i < red.pivots.size(); ++i) {
    if (red.pivots[i] == m.cols()) return std::nullopt;
    if (red.matrix.get(i, m.cols())) x.set(red.pivots[i], true);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Subspace
// ---------------------------------------------------------------------------

/// Subspace of F2^ambient stored by its canonical RREF basis, so structural
/// equality is subspace equality.
class Subspace {
 public:
  Subspace() = default;
  explicit Subspace(std::size_t ambient) : basis_(0, ambient) {}

  static Subspace span(std::size_t ambient, const std::vector<BitVec>& gens) {
    return from_matrix(BitMatrix::from_rows(ambient, gens));
  }

  static Subspace from_matrix(const BitMatrix& m) {
    Subspace s;
    auto red = rref(m);
    s.basis_ = std::move(red.matrix);
    s.pivots_ = std::move(red.pivots);
    return s;
  }

  static Subspace full(std::size_t ambient) { return from_matrix(BitMatrix::identity(ambient)); }

  std::size_t ambient_dim() const noexcept { return basis_.cols(); }
  std::size_t dim() const noexcept { return basis_.rows(); }
  const BitMatrix& basis() const noexcept { return basis_; }
  const std::vector<std::size_t>& pivots() const noexcept { return pivots_; }

  /// Reduce v against the basis; zero iff v is in the subspace.
  BitVec reduce(BitVec v) const {
    if (v.size() != ambient_dim()) throw DimensionMismatch("Subspace: vector length mismatch");
    for (std::size_t i = 0; i < dim(); ++i) {
      if (v.get(pivots_[i])) v ^= basis_.row(i);
    }
    return v;
  }

  bool contains(const BitVec& v) const { return reduce(v).is_zero(); }

  bool contains(const Subspace& o) const {
    for (const auto& r : o.basis_.row_list()) {
      if (!contains(r)) return false;
    }
    return true;
  }

  /// Coordinates of v in the RREF basis (v must be a member).
  BitVec coordinates(const BitVec& v) const {
    BitVec c(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      if (v.get(pivots_[i])) c.set(i, true);
    }
    return c;
  }

  BitVec combine(const BitVec& coords) const {
    BitVec v(ambient_dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      if (coords.get(i)) v ^= basis_.row(i);
    }
    return v;
  }

  Subspace operator+(const Subspace& o) const {
    if (o.ambient_dim() != ambient_dim()) throw DimensionMismatch("Subspace sum: ambient mismatch");
    return from_matrix(basis_.vstack(o.basis_));
  }

  friend bool operator==(const Subspace& a, const Subspace& b) { return a.basis_ == b.basis_; }

  friend bool operator<(const Subspace& a, const Subspace& b) {
    if (a.ambient_dim() != b.ambient_dim()) return a.ambient_dim() < b.ambient_dim();
    if (a.dim() != b.dim()) return a.dim() < b.dim();
    for (std::size_t i = 0; i < a.dim(); ++i) {
      if (a.basis_.row(i) < b.basis_.row(i)) return true;
      if (b.basis_.row(i) < a.basis_.row(i)) return false;
    }
    return false;
  }

  std::size_t hash() const noexcept {
    std::size_t h = ambient_dim();
    for (const auto& r : basis_.row_list()) h = h * 1000003U ^ r.hash();
    return h;
  }

 private:
  BitMatrix basis_;
  std::vector<std::size_t> pivots_;
};

struct SubspaceHash {
  std::size_t operator()(const Subspace& s) const noexcept { return s.hash(); }
};

/// Right null space {x : M x = 0}.
inline Subspace kernel(const BitMatrix& m) {
  const auto red = rref(m);
  const std::size_t c = m.cols();
  std::vector<bool> is_pivot(c, false);
  for (auto p : red.pivots) is_pivot[p] = true;
  std::vector<BitVec> gens;
  for (std::size_t f = 0; f < c; ++f) {
    if (is_pivot[f]) continue;
    BitVec v(c);
    v.set(f, true);
    for (std::size_t i = 0; i < red.pivots.size(); ++i) {
      if (red.matrix.get(i, f)) v.set(red.pivots[i], true);
    }
    gens.push_back(std::move(v));
  }
  return Subspace::span(c, gens);
}

/// Left null space {y : y^T M = 0}, as a subspace of F2^rows.
inline Subspace left_kernel(const BitMatrix& m) { return kernel(m.transpose()); }

inline Subspace intersect(const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim()) throw DimensionMismatch("intersect: ambient mismatch");
  // Solve sum_i c_i u_i = sum_j d_j v_j.
  const std::size_t du = u.dim();
  const std::size_t dv = v.dim();
  BitMatrix sys(u.ambient_dim(), du + dv);
  for (std::size_t i = 0; i < du; ++i) {
    for (std::size_t k = 0; k < u.ambient_dim(); ++k) sys.set(k, i, u.basis().get(i, k));
  }
  for (std::size_t j = 0; j < dv; ++j) {
    for (std::size_t k = 0; k < v.ambient_dim(); ++k) sys.set(k, du + j, v.basis().get(j, k));
  }
  const Subspace ker = kernel(sys);
  std::vector<BitVec> gens;
  for (const auto& z : ker.basis().row_list()) gens.push_back(u.combine(z.slice(0, du)));
  return Subspace::span(u.ambient_dim(), gens);
}

inline void check_form_dim(std::size_t ambient, Form f, const char* who) {
  if (f == Form::symplectic && ambient % 2 != 0) {
    throw InvalidInput(std::string(who) + ": odd ambient dimension for symplectic form");
  }
  if (f == Form::paired && ambient % 4 != 0) {
    throw InvalidInput(std::string(who) + ": ambient dimension not divisible by 4 for paired form");
  }
}

/// Image of v under the Gram matrix of the form, so that <x, y> = x . partner(y).
inline BitVec form_partner(const BitVec& v, Form f) {
  switch (f) {
    case Form::standard:
      return v;
    case Form::symplectic:
      return swap_halves(v);
    case Form::paired: {
      const std::size_t h = v.size() / 2;
      return swap_halves(v.slice(0, h)).concat(swap_halves(v.slice(h, h)));
    }
  }
  return v;
}

inline Subspace dual(const Subspace& v, Form f = Form::standard) {
  check_form_dim(v.ambient_dim(), f, "dual");
  BitMatrix m(0, v.ambient_dim());
  for (const auto& r : v.basis().row_list()) m.push_row(form_partner(r, f));
  return kernel(m);
}

inline bool is_isotropic(const Subspace& v, Form f = Form::symplectic) {
  check_form_dim(v.ambient_dim(), f, "is_isotropic");
  const auto& b = v.basis().row_list();
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = i; j < b.size(); ++j) {
      if (inner(b[i], b[j], f)) return false;
    }
  }
  return true;
}

inline bool is_lagrangian(const Subspace& v, Form f = Form::symplectic) {
  return is_isotropic(v, f) && 2 * v.dim() == v.ambient_dim();
}

/// Some basis of a complement of `sub` inside `within` (sub must lie in within).
inline std::vector<BitVec> complement_basis(const Subspace& sub, const Subspace& within) {
  std::vector<BitVec> out;
  Subspace acc = sub;
  for (const auto& r : within.basis().row_list()) {
    if (!acc.contains(r)) {
      out.push_back(r);
      acc = acc + Subspace::span(acc.ambient_dim(), {r});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxElementDim = 24;
inline constexpr std::size_t kMaxSubspaceAmbient = 10;

/// Visit all 2^dim elements in Gray-code order.
template <class F>
void for_each_element(const Subspace& v, F&& visit) {
  require_budget(v.dim() <= kMaxElementDim, "enumerate_elements: dim <= 24");
  BitVec cur(v.ambient_dim());
  visit(cur);
  const u64 total = u64{1} << v.dim();
  for (u64 g = 1; g < total; ++g) {
    cur ^= v.basis().row(static_cast<std::size_t>(std::countr_zero(g)));
    visit(cur);
  }
}

inline std::vector<BitVec> enumerate_elements(const Subspace& v) {
  require_budget(v.dim() <= kMaxElementDim, "enumerate_elements: dim <= 24");
  std::vector<BitVec> out;
  out.reserve(std::size_t{1} << v.dim());
  for_each_element(v, [&](const BitVec& x) { out.push_back(x); });
  return out;
}

/// Gaussian binomial [m, k]_2.
inline u64 gaussian_binomial(unsigned m, unsigned k) {
  if (k > m) return 0;
  // Numerator and denominator are products of (2^i - 1); use exact rational steps.
  unsigned __int128 num = 1;
  unsigned __int128 den = 1;
  for (unsigned i = 0; i < k; ++i) {
    num *= (static_cast<unsigned __int128>(1) << (m - i)) - 1;
    den *= (static_cast<unsigned __int128>(1) << (i + 1)) - 1;
  }
  return static_cast<u64>(num / den);
}

/// Visit every k-dimensional subspace of F2^m exactly once, by walking all
/// reduced row echelon matrices of shape k x m.
template <class F>
void for_each_subspace(std::size_t m, std::size_t k, F&& visit) {
  require_budget(m <= kMaxSubspaceAmbient, "enumerate_subspaces: ambient <= 10");
  if (k > m) return;
  std::vector<std::size_t> piv(k);
  for (std::size_t i = 0; i < k; ++i) piv[i] = i;
  while (true) {
    // Free positions: for row i, columns > piv[i] that are not pivots.
    std::vector<std::pair<std::size_t, std::size_t>> free;
    std::vector<bool> is_piv(m, false);
    for (auto p : piv) is_piv[p] = true;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t c = piv[i] + 1; c < m; ++c) {
        if (!is_piv[c]) free.emplace_back(i, c);
      }
    }
    const u64 count = u64{1} << free.size();
    for (u64 mask = 0; mask < count; ++mask) {
      BitMatrix b(k, m);
      for (std::size_t i = 0; i < k; ++i) b.set(i, piv[i], true);
      for (std::size_t f = 0; f < free.size(); ++f) {
        if ((mask >> f) & 1U) b.set(free[f].first, free[f].second, true);
      }
      visit(Subspace::from_matrix(b));
    }
    // Next combination of pivot columns.
    std::size_t i = k;
    while (i > 0 && piv[i - 1] == m - k + (i - 1)) --i;
    if (i == 0) break;
    ++piv[i - 1];
    for (std::size_t j = i; j < k; ++j) piv[j] = piv[j - 1] + 1;
  }
}

inline std::vector<Subspace> enumerate_subspaces(std::size_t m, std::size_t k) {
  require_budget(m <= kMaxSubspaceAmbient, "enumerate_subspaces: ambient <= 10");
  std::vector<Subspace> out;
  for_each_subspace(m, k, [&](Subspace s) { out.push_back(std::move(s)); });
  return out;
}

// ---------------------------------------------------------------------------
// Packed helpers: short vectors as integers in the big-endian view above.
// Used by the enumeration-heavy code paths.
// ---------------------------------------------------------------------------

namespace packed {

inline bool parity(u64 x) noexcept { return std::popcount(x) & 1; }

/// In-place canonical RREF of rows of width `width`; returns the rank and
/// leaves only nonzero rows, sorted by pivot (most significant first).
inline std::size_t rref(std::vector<u64>& rows, unsigned width) {
  std::size_t r = 0;
  for (int c = static_cast<int>(width) - 1; c >= 0 && r < rows.size(); --c) {
    const u64 bit = u64{1} << c;
    std::size_t p = r;
    while (p < rows.size() && !(rows[p] & bit)) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[r], rows[p]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i != r && (rows[i] & bit)) rows[i] ^= rows[r];
    }
    ++r;
  }
  rows.resize(r);
  return r;
}

/// Reduce x against rows already in canonical RREF.
inline u64 reduce(u64 x, const std::vector<u64>& rref_rows) {
  for (u64 r : rref_rows) {
    const u64 lead = u64{1} << (63 - std::countl_zero(r));
    if (x & lead) x ^= r;
  }
  return x;
}

inline BitVec to_bitvec(u64 x, unsigned width) { return BitVec::from_u64(width, x); }

inline Subspace to_subspace(const std::vector<u64>& rows, unsigned width) {
  std::vector<BitVec> gens;
  gens.reserve(rows.size());
  for (u64 r : rows) gens.push_back(BitVec::from_u64(width, r));
  return Subspace::span(width, gens);
}

inline std::vector<u64> from_subspace(const Subspace& s) {
  std::vector<u64> rows;
  for (const auto& r : s.basis().row_list()) rows.push_back(r.to_u64());
  return rows;
}

/// [x, y] on F2^{2n} in the integer view.
inline bool symplectic(u64 x, u64 y, unsigned n) noexcept {
  const u64 mask = (u64{1} << n) - 1;
  return parity(((x >> n) & (y & mask)) ^ ((x & mask) & (y >> n)));
}

}  // namespace packed

}  // namespace clab

template <>
struct std::hash<clab::BitVec> {
  std::size_t operator()(const clab::BitVec& v) const noexcept { return v.hash(); }
};
template <>
struct std::hash<clab::Subspace> {
  std::size_t operator()(const clab::Subspace& s) const noexcept { return s.hash(); }
};
