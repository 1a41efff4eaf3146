#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "greybox/common.hpp"

namespace greybox {

namespace detail {

inline void require_match(Index got_rows, Index got_cols, Index want_rows, Index want_cols,
                          const char* op, const char* operand) {
  if (got_rows != want_rows || got_cols != want_cols) {
    throw DimensionError(std::string(op) + ": operand " + operand + " has shape " +
                         std::to_string(got_rows) + "x" + std::to_string(got_cols) +
                         ", expected " + std::to_string(want_rows) + "x" +
                         std::to_string(want_cols));
  }
}

}  // namespace detail

/// Dense rank-3 tensor, lexicographic (i,j,k) layout: entry (i,j,k) lives at
/// flat index (i*d2 + j)*d3 + k. Slice i is a contiguous d2 x d3 row-major
/// block, which is what the contraction kernels map.
template <class Scalar>
class Tens3T {
 public:
  using MatType = MatT<Scalar>;
  using SliceMap = Eigen::Map<MatType>;
  using ConstSliceMap = Eigen::Map<const MatType>;

  Tens3T() = default;
  Tens3T(Index d1, Index d2, Index d3)
      : d1_(d1), d2_(d2), d3_(d3), data_(checked_size(d1, d2, d3), Scalar(0)) {}

  Index d1() const { return d1_; }
  Index d2() const { return d2_; }
  Index d3() const { return d3_; }
  Index size() const { return d1_ * d2_ * d3_; }
  bool empty() const { return size() == 0; }

  Scalar& operator()(Index i, Index j, Index k) { return data_[flat(i, j, k)]; }
  const Scalar& operator()(Index i, Index j, Index k) const { return data_[flat(i, j, k)]; }

  SliceMap slice(Index i) { return SliceMap(data_.data() + i * d2_ * d3_, d2_, d3_); }
  ConstSliceMap slice(Index i) const {
    return ConstSliceMap(data_.data() + i * d2_ * d3_, d2_, d3_);
  }

  /// The whole tensor as a d1 x (d2*d3) row-major matrix (slice i is row i).
  SliceMap flattened() { return SliceMap(data_.data(), d1_, d2_ * d3_); }
  ConstSliceMap flattened() const { return ConstSliceMap(data_.data(), d1_, d2_ * d3_); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  void set_zero() { std::fill(data_.begin(), data_.end(), Scalar(0)); }

  Scalar max_abs() const {
    Scalar m(0);
    for (const Scalar& v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    for (const Scalar& v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  static Tens3T zero(Index d1, Index d2, Index d3) { return Tens3T(d1, d2, d3); }

  Tens3T& operator+=(const Tens3T& o) {
    require_same_shape(o, "Tens3 +=");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += o.data_[n];
    return *this;
  }
  Tens3T& operator*=(Scalar s) {
    for (Scalar& v : data_) v *= s;
    return *this;
  }
  friend Tens3T operator+(Tens3T a, const Tens3T& b) { return a += b; }
  friend Tens3T operator*(Scalar s, Tens3T t) { return t *= s; }

 private:
  static std::size_t checked_size(Index d1, Index d2, Index d3) {
    if (d1 < 0 || d2 < 0 || d3 < 0) {
      throw DimensionError("Tens3: negative dimension " + std::to_string(d1) + "x" +
                           std::to_string(d2) + "x" + std::to_string(d3));
    }
    return static_cast<std::size_t>(d1 * d2 * d3);
  }
  std::size_t flat(Index i, Index j, Index k) const {
    return static_cast<std::size_t>((i * d2_ + j) * d3_ + k);
  }
  void require_same_shape(const Tens3T& o, const char* op) const {
    if (d1_ != o.d1_ || d2_ != o.d2_ || d3_ != o.d3_) {
      throw DimensionError(std::string(op) + ": shapes " + std::to_string(d1_) + "x" +
                           std::to_string(d2_) + "x" + std::to_string(d3_) + " vs " +
                           std::to_string(o.d1_) + "x" + std::to_string(o.d2_) + "x" +
                           std::to_string(o.d3_));
    }
  }

  Index d1_ = 0;
  Index d2_ = 0;
  Index d3_ = 0;
  std::vector<Scalar> data_;
};

using Tens3 = Tens3T<double>;

/// C = A * B with an explicit shape check: C_{ij} = sum_m A_{im} B_{mj}.
template <class Scalar>
MatT<Scalar> mat_mul(const MatT<Scalar>& a, const MatT<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("mat_mul: inner dimensions disagree, left is " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         ", right is " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  return a * b;
}

/// R_{ijk} = sum_{m,n} T_{imn} B_{mj} C_{nk}.
template <class Scalar>
Tens3T<Scalar> tens3_contract_last2(const Tens3T<Scalar>& t, const MatT<Scalar>& b,
                                    const MatT<Scalar>& c) {
  detail::require_match(b.rows(), b.cols(), t.d2(), b.cols(), "tens3_contract_last2", "B");
  detail::require_match(c.rows(), c.cols(), t.d3(), c.cols(), "tens3_contract_last2", "C");
  Tens3T<Scalar> r(t.d1(), b.cols(), c.cols());
  for (Index i = 0; i < t.d1(); ++i) {
    r.slice(i).noalias() = b.transpose() * t.slice(i) * c;
  }
  return r;
}

/// R_{ijk} = sum_m A_{im} T_{mjk}.
template <class Scalar>
Tens3T<Scalar> tens3_contract_first(const MatT<Scalar>& a, const Tens3T<Scalar>& t) {
  detail::require_match(a.rows(), a.cols(), a.rows(), t.d1(), "tens3_contract_first", "A");
  Tens3T<Scalar> r(a.rows(), t.d2(), t.d3());
  r.flattened().noalias() = a * t.flattened();
  return r;
}

/// R_{ijk} = sum_m T_{imk} B_{mj}: contraction over the middle index.
template <class Scalar>
Tens3T<Scalar> tens3_contract_mid(const Tens3T<Scalar>& t, const MatT<Scalar>& b) {
  detail::require_match(b.rows(), b.cols(), t.d2(), b.cols(), "tens3_contract_mid", "B");
  Tens3T<Scalar> r(t.d1(), b.cols(), t.d3());
  for (Index i = 0; i < t.d1(); ++i) {
    r.slice(i).noalias() = b.transpose() * t.slice(i);
  }
  return r;
}

/// R_{ijk} = sum_m T_{ijm} B_{mk}: contraction over the last index.
template <class Scalar>
Tens3T<Scalar> tens3_contract_last(const Tens3T<Scalar>& t, const MatT<Scalar>& b) {
  detail::require_match(b.rows(), b.cols(), t.d3(), b.cols(), "tens3_contract_last", "B");
  Tens3T<Scalar> r(t.d1(), t.d2(), b.cols());
  for (Index i = 0; i < t.d1(); ++i) {
    r.slice(i).noalias() = t.slice(i) * b;
  }
  return r;
}

/// max_{ijk} |A_{ijk} - B_{ijk}| over two tensors of identical shape.
template <class Scalar>
Scalar tens3_max_abs_diff(const Tens3T<Scalar>& a, const Tens3T<Scalar>& b) {
  if (a.d1() != b.d1() || a.d2() != b.d2() || a.d3() != b.d3()) {
    throw DimensionError("tens3_max_abs_diff: shapes " + std::to_string(a.d1()) + "x" +
                         std::to_string(a.d2()) + "x" + std::to_string(a.d3()) + " vs " +
                         std::to_string(b.d1()) + "x" + std::to_string(b.d2()) + "x" +
                         std::to_string(b.d3()));
  }
  Scalar worst(0);
  const Scalar* pa = a.data();
  const Scalar* pb = b.data();
  for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(pa[i] - pb[i]));
  return worst;
}

/// R_{jk} = sum_i v_i T_{ijk}: weighting the leading index down to a matrix.
template <class Scalar>
MatT<Scalar> tens3_weight_first(const VecT<Scalar>& v, const Tens3T<Scalar>& t) {
  if (v.size() != t.d1()) {
    throw DimensionError("tens3_weight_first: vector length " + std::to_string(v.size()) +
                         " vs tensor leading dimension " + std::to_string(t.d1()));
  }
  MatT<Scalar> r(t.d2(), t.d3());
  Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(r.data(), 1, t.d2() * t.d3()).noalias() =
      v.transpose() * t.flattened();
  return r;
}

}  // namespace greybox
