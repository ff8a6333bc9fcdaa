#pragma once

#include <memory>

#include "schurdirac/block_operator.hpp"
#include "schurdirac/error.hpp"

namespace schurdirac::detail {

// Applies (S + shift I)^{-1} by factorization-and-solve.
class ShiftedSInverse {
 public:
  ShiftedSInverse(const BlockOperator& op, double shift) {
    if (op.s_diagonal()) {
      inv_diag_ = (op.s_diagonal()->array() + shift).inverse().matrix();
      return;
    }
    llt_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(
        SparseMatrix(op.s() + shift * identity(op.half_dim())));
    if (llt_->info() != Eigen::Success)
      throw Error(ErrorCode::NonPositiveS, "S + shift is not positive definite");
  }

  bool diagonal() const { return !llt_; }
  const Vector& inverse_diagonal() const { return inv_diag_; }

  Vector solve(const Vector& x) const {
    if (!llt_) return inv_diag_.cwiseProduct(x);
    return llt_->solve(x);
  }

  DenseMatrix solve(const DenseMatrix& x) const {
    if (!llt_) return inv_diag_.asDiagonal() * x;
    return llt_->solve(x);
  }

 private:
  Vector inv_diag_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
};

inline SparseMatrix symmetrized(const SparseMatrix& m) {
  SparseMatrix sym = 0.5 * (m + SparseMatrix(m.transpose()));
  sym.prune(0.0);
  sym.makeCompressed();
  return sym;
}

}  // namespace schurdirac::detail
