#include "schurdirac/block_operator.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <vector>

#include "schurdirac/error.hpp"
#include "shifted_inverse.hpp"

namespace schurdirac {

namespace {

std::uint64_t next_operator_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void require_square(const SparseMatrix& m, Index n, const char* name) {
  if (m.rows() != n || m.cols() != n)
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
}

void require_alpha(double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::NegativeAlpha, "alpha must be >= 0");
}

}  // namespace

BlockOperator BlockOperator::assemble(SparseMatrix p, SparseMatrix t, SparseMatrix s,
                                      C1Policy policy) {
  const Index n = p.rows();
  if (n == 0) throw Error(ErrorCode::DimensionMismatch, "empty block operator");
  require_square(p, n, "P");
  require_square(t, n, "T");
  require_square(s, n, "S");
  if (!is_symmetric(p)) throw Error(ErrorCode::NotSymmetric, "P must be symmetric");
  if (!is_symmetric(s)) throw Error(ErrorCode::NotSymmetric, "S must be symmetric");

  BlockOperator op;
  p.makeCompressed();
  t.makeCompressed();
  s.makeCompressed();
  op.p_ = std::move(p);
  op.t_ = std::move(t);
  op.q_ = SparseMatrix(op.t_.transpose());
  op.s_ = std::move(s);
  if (is_diagonal(op.s_)) op.s_diag_ = Vector(op.s_.diagonal());

  const double s_min = op.s_diag_ ? op.s_diag_->minCoeff() : smallest_eigenvalue(op.s_);
  if (!(s_min > 0.0))
    throw Error(ErrorCode::NonPositiveS,
                "hypothesis S >= c1 I > 0 fails: lambda_min(S) = " + std::to_string(s_min));
  if (policy.asserted) {
    const double c1 = *policy.asserted;
    if (!(c1 > 0.0)) throw Error(ErrorCode::NonPositiveS, "asserted c1 must be positive");
    if (c1 > s_min * (1.0 + 1e-12))
      throw Error(ErrorCode::HypothesisFailed,
                  "asserted c1 exceeds lambda_min(S) = " + std::to_string(s_min));
    op.c1_ = c1;
  } else {
    op.c1_ = s_min;
  }
  op.id_ = next_operator_id();
  return op;
}

SparseMatrix BlockOperator::assembled() const {
  const Index n = half_dim();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(p_.nonZeros() + 2 * t_.nonZeros() + s_.nonZeros()));
  const auto push = [&](const SparseMatrix& block, Index row0, Index col0, double sign) {
    for (Index k = 0; k < block.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(block, k); it; ++it)
        entries.emplace_back(row0 + it.row(), col0 + it.col(), sign * it.value());
  };
  push(p_, 0, 0, 1.0);
  push(q_, 0, n, 1.0);
  push(t_, n, 0, 1.0);
  push(s_, n, n, -1.0);
  SparseMatrix h(2 * n, 2 * n);
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

StateVector apply(const BlockOperator& op, const StateVector& w) {
  const Index n = op.half_dim();
  if (w.u.size() != n || w.v.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "state vector length differs from N");
  return {op.p() * w.u + op.q() * w.v, op.t() * w.u - op.s() * w.v};
}

SparseMatrix schur_form_matrix(const BlockOperator& op, double alpha) {
  require_alpha(alpha);
  const Index n = op.half_dim();
  const detail::ShiftedSInverse s_inv(op, alpha);
  const SparseMatrix shifted_p = op.p() - alpha * identity(n);
  if (s_inv.diagonal()) {
    const SparseMatrix coupling =
        SparseMatrix(op.t().transpose()) * diagonal(s_inv.inverse_diagonal()) * op.t();
    return detail::symmetrized(SparseMatrix(shifted_p + coupling));
  }
  const DenseMatrix solved = s_inv.solve(DenseMatrix(op.t()));
  const DenseMatrix m = DenseMatrix(shifted_p) + DenseMatrix(op.t()).transpose() * solved;
  return detail::symmetrized(m.sparseView());
}

double schur_form_value(const BlockOperator& op, double alpha, const Vector& u) {
  require_alpha(alpha);
  if (u.size() != op.half_dim()) throw Error(ErrorCode::DimensionMismatch, "u has wrong length");
  const Vector tu = op.t() * u;
  const detail::ShiftedSInverse s_inv(op, alpha);
  return s_inv.solve(tu).dot(tu) + u.dot(op.p() * u) - alpha * u.squaredNorm();
}

double positivity_margin(const BlockOperator& op, double alpha) {
  return smallest_eigenvalue(schur_form_matrix(op, alpha));
}

FormReport form_report(const BlockOperator& op, double alpha) {
  const SparseMatrix m = schur_form_matrix(op, alpha);
  FormReport report;
  report.alpha = alpha;
  report.margin = smallest_eigenvalue(m);
  report.form_matrix_condition = report.margin > 0.0
                                     ? largest_eigenvalue(m) / report.margin
                                     : std::numeric_limits<double>::infinity();
  return report;
}

double find_c2(const BlockOperator& op, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ValidationError, "bisection tolerance must be positive");
  const double margin0 = positivity_margin(op, 0.0);
  if (!(margin0 > 0.0))
    throw Error(ErrorCode::HypothesisFailed,
                "q_0 is not positive definite (lambda_min(M_0) = " + std::to_string(margin0) +
                    "); no c2 > 0 makes q_c2 >= 0");
  double lo = 0.0;
  double hi = margin0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (positivity_margin(op, mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double inertia_c2_oracle(const BlockOperator& op, Index dense_cap) {
  const Index n = op.half_dim();
  if (2 * n > dense_cap)
    throw Error(ErrorCode::TooLarge, "2N = " + std::to_string(2 * n) + " exceeds the dense cap " +
                                         std::to_string(dense_cap));
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(DenseMatrix(op.assembled()),
                                                 Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[n];
}

EmbeddingCertificate embedding_delta(const BlockOperator& op, double tol, double psd_rel) {
  EmbeddingCertificate cert;
  cert.c2 = find_c2(op, tol);
  if (!(cert.c2 > 0.0)) throw Error(ErrorCode::HypothesisFailed, "c2 must be positive");
  cert.delta = op.c1() * cert.c2 / (op.c1() + cert.c2);

  const Index n = op.half_dim();
  const detail::ShiftedSInverse s_inv(op, 0.0);
  SparseMatrix kt_k;
  if (s_inv.diagonal()) {
    const Vector inv_sq = s_inv.inverse_diagonal().cwiseAbs2();
    kt_k = SparseMatrix(op.t().transpose()) * diagonal(inv_sq) * op.t();
  } else {
    const DenseMatrix k = s_inv.solve(DenseMatrix(op.t()));
    kt_k = DenseMatrix(k.transpose() * k).sparseView();
  }
  const SparseMatrix excess = detail::symmetrized(
      SparseMatrix(schur_form_matrix(op, 0.0) - cert.delta * (identity(n) + kt_k)));
  cert.min_eigenvalue = smallest_eigenvalue(excess);
  cert.psd_epsilon = psd_epsilon(excess, psd_rel);
  cert.certified = cert.min_eigenvalue >= -cert.psd_epsilon;
  return cert;
}

bool resolvent_difference_check(const BlockOperator& op, double alpha, double delta,
                                double psd_rel) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::NegativeAlpha, "alpha must be > 0");
  const double bound = op.c1() * alpha / (op.c1() + alpha);
  if (!(delta > 0.0) || delta > bound * (1.0 + 1e-12))
    throw Error(ErrorCode::DeltaOutOfRange,
                "delta must lie in (0, c1 alpha / (c1 + alpha)] = (0, " + std::to_string(bound) + "]");
  // Congruence by S leaves semidefiniteness unchanged:
  // S [S^{-1} - (S+a)^{-1} - d S^{-2}] S = S - S (S+a)^{-1} S - d I.
  const Index n = op.half_dim();
  const detail::ShiftedSInverse shifted(op, alpha);
  SparseMatrix diff;
  if (shifted.diagonal()) {
    const Vector& s = *op.s_diagonal();
    const Vector d = s - s.cwiseProduct(shifted.inverse_diagonal()).cwiseProduct(s) -
                     Vector::Constant(n, delta);
    diff = diagonal(d);
  } else {
    const DenseMatrix s = DenseMatrix(op.s());
    const DenseMatrix d = s - s * shifted.solve(s) - delta * DenseMatrix::Identity(n, n);
    diff = detail::symmetrized(d.sparseView());
  }
  return smallest_eigenvalue(diff) >= -psd_epsilon(diff, psd_rel);
}

}  // namespace schurdirac
