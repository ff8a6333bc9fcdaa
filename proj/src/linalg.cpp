#include "schurdirac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "schurdirac/error.hpp"

namespace schurdirac {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NonPositiveS: return "NonPositiveS";
    case ErrorCode::NegativeAlpha: return "NegativeAlpha";
    case ErrorCode::HypothesisFailed: return "HypothesisFailed";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::DeltaOutOfRange: return "DeltaOutOfRange";
    case ErrorCode::NegativeShiftUnsupported: return "NegativeShiftUnsupported";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::InvalidQuantumNumbers: return "InvalidQuantumNumbers";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

SparseMatrix identity(Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

SparseMatrix diagonal(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

double inf_norm(const SparseMatrix& m) {
  Vector row_sums = Vector::Zero(m.rows());
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      row_sums[it.row()] += std::abs(it.value());
  return m.rows() == 0 ? 0.0 : row_sums.maxCoeff();
}

double psd_epsilon(const SparseMatrix& m, double rel) {
  return rel * (1.0 + inf_norm(m));
}

bool is_symmetric(const SparseMatrix& m) {
  if (m.rows() != m.cols()) return false;
  const SparseMatrix diff = SparseMatrix(m.transpose()) - m;
  for (Index k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
      if (it.value() != 0.0) return false;
  return true;
}

bool is_diagonal(const SparseMatrix& m) {
  if (m.rows() != m.cols()) return false;
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

namespace {

// Repeated Cholesky attempts on M - xI sharing one symbolic analysis.
class CholeskyProbe {
 public:
  explicit CholeskyProbe(const SparseMatrix& m)
      : base_(SparseMatrix(m + 0.0 * identity(m.rows()))) {
    base_.makeCompressed();
    diag_slots_.resize(static_cast<std::size_t>(base_.rows()));
    for (Index k = 0; k < base_.outerSize(); ++k) {
      for (Index p = base_.outerIndexPtr()[k]; p < base_.outerIndexPtr()[k + 1]; ++p) {
        if (base_.innerIndexPtr()[p] == k) diag_slots_[static_cast<std::size_t>(k)] = p;
      }
    }
    work_ = base_;
    llt_.analyzePattern(work_);
  }

  bool positive_definite_after_shift(double x) {
    std::copy_n(base_.valuePtr(), base_.nonZeros(), work_.valuePtr());
    for (Index slot : diag_slots_) work_.valuePtr()[slot] -= x;
    llt_.factorize(work_);
    return llt_.info() == Eigen::Success;
  }

  double gershgorin_lower_bound() const {
    const Index n = base_.rows();
    Vector radius = Vector::Zero(n);
    Vector center = Vector::Zero(n);
    for (Index k = 0; k < base_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(base_, k); it; ++it) {
        if (it.row() == it.col())
          center[it.row()] = it.value();
        else
          radius[it.row()] += std::abs(it.value());
      }
    return (center - radius).minCoeff();
  }

  double min_diagonal() const {
    double best = std::numeric_limits<double>::infinity();
    for (Index slot : diag_slots_) best = std::min(best, base_.valuePtr()[slot]);
    return best;
  }

 private:
  SparseMatrix base_;
  SparseMatrix work_;
  std::vector<Index> diag_slots_;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

double sparse_smallest_eigenvalue(const SparseMatrix& m) {
  CholeskyProbe probe(m);
  const double g_lo = probe.gershgorin_lower_bound();
  double lo = g_lo - 1.0 - 1e-12 * std::abs(g_lo);
  // Rounding can make the Gershgorin bound marginal; step down until it holds.
  for (int i = 0; i < 64 && !probe.positive_definite_after_shift(lo); ++i)
    lo -= std::max(1.0, std::abs(lo));
  double hi = probe.min_diagonal();
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (probe.positive_definite_after_shift(mid))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double smallest_eigenvalue(const SparseMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "eigenvalue of non-square matrix");
  if (m.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "eigenvalue of empty matrix");
  if (is_diagonal(m)) return Vector(m.diagonal()).minCoeff();
  if (m.rows() <= kDenseEigenCutoff) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(DenseMatrix(m), Eigen::EigenvaluesOnly);
    return eig.eigenvalues()[0];
  }
  return sparse_smallest_eigenvalue(m);
}

double largest_eigenvalue(const SparseMatrix& m) {
  return -smallest_eigenvalue(SparseMatrix(-m));
}

bool is_positive_definite(const SparseMatrix& m) {
  Eigen::SimplicialLLT<SparseMatrix> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace schurdirac
