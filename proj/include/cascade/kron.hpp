#pragma once

#include "cascade/types.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace cascade {

/// Schur-complement elimination of every row/column not listed in `keep`:
///
///   Y_red = Y_kk - Y_ke * Y_ee^{-1} * Y_ek
///
/// `keep` gives the retained indices in output order. The result is
/// symmetrized, so the input is expected to be symmetric (admittance or
/// susceptance matrix). Throws ReductionError if the eliminated block is
/// singular or `keep` is empty.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
kron_reduce(const Eigen::MatrixBase<Derived>& y, std::span<const Index> keep) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const Index n = y.rows();
  if (y.cols() != n) throw ReductionError("kron_reduce: matrix is not square");
  if (keep.empty()) throw ReductionError("kron_reduce: keep set is empty");

  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (Index k : keep) {
    if (k < 0 || k >= n) throw ReductionError("kron_reduce: keep index out of range");
    if (kept[static_cast<std::size_t>(k)]) throw ReductionError("kron_reduce: duplicate keep index");
    kept[static_cast<std::size_t>(k)] = true;
  }
  std::vector<Index> keep_idx(keep.begin(), keep.end());
  std::vector<Index> elim_idx;
  for (Index i = 0; i < n; ++i)
    if (!kept[static_cast<std::size_t>(i)]) elim_idx.push_back(i);

  const Dense y_kk = y(keep_idx, keep_idx);
  if (elim_idx.empty()) return y_kk;

  const Dense y_ke = y(keep_idx, elim_idx);
  const Dense y_ek = y(elim_idx, keep_idx);
  const Dense y_ee = y(elim_idx, elim_idx);

  Eigen::FullPivLU<Dense> lu(y_ee);
  if (!lu.isInvertible()) throw ReductionError("kron_reduce: eliminated block is singular");

  Dense reduced = y_kk - y_ke * lu.solve(y_ek);
  return (reduced + reduced.transpose()) / Scalar(2);
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
kron_reduce(const Eigen::MatrixBase<Derived>& y, const std::vector<Index>& keep) {
  return kron_reduce(y, std::span<const Index>(keep.data(), keep.size()));
}

}  // namespace cascade
