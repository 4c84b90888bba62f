#pragma once

#include <algorithm>
#include <array>
#include <cstddef>

#include <Eigen/Core>

#include "qfe/quaternion.hpp"

namespace qfe {

template <typename S, std::size_t N>
using QuatVector = std::array<Quaternion<S>, N>;

/// Dense N x N quaternion matrix, row-major.
template <typename S, std::size_t N>
struct QuatMatrix {
  std::array<Quaternion<S>, N * N> data{};

  Quaternion<S>& operator()(std::size_t r, std::size_t c) { return data[r * N + c]; }
  const Quaternion<S>& operator()(std::size_t r, std::size_t c) const {
    return data[r * N + c];
  }
};

template <typename S, std::size_t N>
QuatMatrix<S, N> conjugate_transpose(const QuatMatrix<S, N>& m) {
  QuatMatrix<S, N> out;
  for (std::size_t r = 0; r < N; ++r)
    for (std::size_t c = 0; c < N; ++c) out(c, r) = conjugate(m(r, c));
  return out;
}

/// Largest entrywise deviation |M - M^H|.
template <typename S, std::size_t N>
S hermitian_defect(const QuatMatrix<S, N>& m) {
  S worst = 0;
  for (std::size_t r = 0; r < N; ++r)
    for (std::size_t c = 0; c < N; ++c)
      worst = std::max(worst, (m(r, c) - conjugate(m(c, r))).norm());
  return worst;
}

template <typename S, std::size_t N>
Eigen::Matrix<S, 4 * N, 1> lift(const QuatVector<S, N>& v) {
  Eigen::Matrix<S, 4 * N, 1> out;
  for (std::size_t n = 0; n < N; ++n) out.template segment<4>(4 * n) = to_real_vec(v[n]);
  return out;
}

template <typename S, std::size_t N, typename Derived>
QuatVector<S, N> unlift(const Eigen::MatrixBase<Derived>& v) {
  QuatVector<S, N> out;
  for (std::size_t n = 0; n < N; ++n)
    out[n] = from_real_vec(v.template segment<4>(4 * n).eval());
  return out;
}

/// Quaternion second-moment matrix E[x x^H] of a random quaternion N-vector
/// whose real lift has covariance `lifted` (4N x 4N).
///
/// Entry (r, c) is sum_{p,q} lifted(4r+p, 4c+q) e_p e_q^*, e = (1, i, j, k).
/// Hermitian whenever `lifted` is symmetric.
template <typename S, std::size_t N, typename Derived>
QuatMatrix<S, N> hermitian_view(const Eigen::MatrixBase<Derived>& lifted) {
  const std::array<Quaternion<S>, 4> basis{
      Quaternion<S>::identity(), Quaternion<S>::unit_i(), Quaternion<S>::unit_j(),
      Quaternion<S>::unit_k()};
  QuatMatrix<S, N> out;
  for (std::size_t r = 0; r < N; ++r) {
    for (std::size_t c = 0; c < N; ++c) {
      Quaternion<S> acc;
      for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t q = 0; q < 4; ++q)
          acc += lifted(4 * r + p, 4 * c + q) * (basis[p] * conjugate(basis[q]));
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace qfe
