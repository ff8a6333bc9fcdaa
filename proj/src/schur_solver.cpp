#include "schurdirac/schur_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <numeric>
#include <random>

#include "schurdirac/error.hpp"
#include "shifted_inverse.hpp"

namespace schurdirac {

struct SchurFactorization::Impl {
  explicit Impl(const BlockOperator& op_in)
      : op(op_in), s_inv(op, 0.0), m0(schur_form_matrix(op, 0.0)) {
    llt.compute(m0);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::HypothesisFailed,
                  "the Schur complement M_0 = P + T^T S^{-1} T is not positive definite");
  }

  double estimate_condition() const {
    const Index n = m0.rows();
    Vector start(n);
    for (Index i = 0; i < n; ++i) start[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
    start.normalize();

    Vector x = start;
    for (int it = 0; it < 50; ++it) {
      x = m0 * x;
      x.normalize();
    }
    const double lambda_max = x.dot(m0 * x);

    Vector y = start;
    for (int it = 0; it < 50; ++it) {
      y = llt.solve(y);
      y.normalize();
    }
    const double lambda_min = y.dot(m0 * y);
    return lambda_max / lambda_min;
  }

  BlockOperator op;
  detail::ShiftedSInverse s_inv;
  SparseMatrix m0;
  Eigen::SimplicialLLT<SparseMatrix> llt;
  mutable std::once_flag condition_once;
  mutable double condition = 0.0;
};

SchurFactorization::SchurFactorization(const BlockOperator& op)
    : impl_(std::make_unique<Impl>(op)) {}

SchurFactorization::~SchurFactorization() = default;

StateVector SchurFactorization::solve(const RhsPair& rhs) const {
  const Index n = impl_->op.half_dim();
  if (rhs.f1.size() != n || rhs.f2.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "right-hand side length differs from N");
  const Vector reduced = rhs.f1 + impl_->op.q() * impl_->s_inv.solve(rhs.f2);
  StateVector out;
  out.u = impl_->llt.solve(reduced);
  out.v = impl_->s_inv.solve(Vector(impl_->op.t() * out.u - rhs.f2));
  return out;
}

double SchurFactorization::condition_estimate() const {
  std::call_once(impl_->condition_once, [this] { impl_->condition = impl_->estimate_condition(); });
  return impl_->condition;
}

std::shared_ptr<const SchurFactorization> cached_factorization(const BlockOperator& op,
                                                               double shift) {
  struct Entry {
    std::uint64_t id;
    double shift;
    std::shared_ptr<const SchurFactorization> factorization;
  };
  static std::mutex mutex;
  static std::deque<Entry> entries;
  constexpr std::size_t kCapacity = 16;

  {
    std::lock_guard lock(mutex);
    for (const auto& e : entries)
      if (e.id == op.id() && e.shift == shift) return e.factorization;
  }
  auto fresh = std::make_shared<const SchurFactorization>(
      shift == 0.0 ? op : shifted_operator(op, shift));
  std::lock_guard lock(mutex);
  entries.push_back({op.id(), shift, fresh});
  if (entries.size() > kCapacity) entries.pop_front();
  return fresh;
}

SolveReport solve(const BlockOperator& op, const RhsPair& rhs, const SolveOptions& options) {
  const auto factorization = cached_factorization(op, 0.0);
  SolveReport report;
  report.solution = factorization->solve(rhs);
  const StateVector image = apply(op, report.solution);
  report.residual_norm =
      std::sqrt((image.u - rhs.f1).squaredNorm() + (image.v - rhs.f2).squaredNorm());
  report.schur_condition_estimate = factorization->condition_estimate();
  report.ill_conditioned = !(report.schur_condition_estimate <= options.condition_cap);
  return report;
}

SymmetryCheck symmetry_identity_check(const BlockOperator& op, const StateVector& w,
                                      const StateVector& wt) {
  const Index n = op.half_dim();
  if (w.u.size() != n || w.v.size() != n || wt.u.size() != n || wt.v.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "state vector length differs from N");

  const StateVector hw = apply(op, w);
  const SparseMatrix m0 = schur_form_matrix(op, 0.0);
  const detail::ShiftedSInverse s_inv(op, 0.0);

  const auto identity_rhs = [&](const StateVector& a, const StateVector& b) {
    const Vector a_defect = a.v - s_inv.solve(Vector(op.t() * a.u));
    const Vector b_defect = b.v - s_inv.solve(Vector(op.t() * b.u));
    return (m0 * a.u).dot(b.u) - (op.s() * a_defect).dot(b_defect);
  };

  SymmetryCheck check;
  check.lhs = hw.u.dot(wt.u) + hw.v.dot(wt.v);
  check.rhs = identity_rhs(w, wt);
  check.swapped_rhs = identity_rhs(wt, w);
  check.absdiff = std::abs(check.lhs - check.rhs);
  check.rhs_symmetric =
      std::abs(check.rhs - check.swapped_rhs) <= 1e-10 * (1.0 + std::abs(check.rhs));
  return check;
}

BlockOperator shifted_operator(const BlockOperator& op, double sigma) {
  if (!(sigma >= 0.0))
    throw Error(ErrorCode::NegativeShiftUnsupported,
                "a negative shift may violate S >= c1 I > 0 for S + sigma");
  if (sigma == 0.0) return op;
  const SparseMatrix id = identity(op.half_dim());
  return BlockOperator::assemble(SparseMatrix(op.p() - sigma * id), op.t(),
                                 SparseMatrix(op.s() + sigma * id),
                                 C1Policy::assert_bound(op.c1() + sigma));
}

namespace {

Vector random_unit(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = normal(rng);
  return x.normalized();
}

// Twice-iterated classical Gram-Schmidt against the first m basis columns.
void orthogonalize(Vector& w, const DenseMatrix& basis, Index m) {
  for (int pass = 0; pass < 2; ++pass) {
    const Vector coeffs = basis.leftCols(m).transpose() * w;
    w -= basis.leftCols(m) * coeffs;
  }
}

std::shared_ptr<const SchurFactorization> factor_near(const BlockOperator& op, double sigma) {
  try {
    return cached_factorization(op, sigma);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::HypothesisFailed) throw;
  }
  // sigma sits on (or above) the lowest upper-branch eigenvalue; nudge it down.
  const double jittered = sigma - 1e-6 * (1.0 + std::abs(sigma));
  if (jittered < 0.0)
    throw Error(ErrorCode::HypothesisFailed,
                "shifted Schur complement is not positive definite at sigma");
  try {
    return cached_factorization(op, jittered);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::HypothesisFailed) throw;
    throw Error(ErrorCode::HypothesisFailed,
                "sigma lies at or above c2 of the operator; the shifted Schur complement "
                "is not positive definite");
  }
}

}  // namespace

std::vector<EigenPair> gap_eigenvalues(const BlockOperator& op, double sigma, int k,
                                       const GapOptions& options) {
  const Index n = op.half_dim();
  const Index dim = 2 * n;
  if (k < 1 || k > dim) throw Error(ErrorCode::ValidationError, "k must lie in [1, 2N]");
  if (!(sigma >= 0.0))
    throw Error(ErrorCode::NegativeShiftUnsupported, "gap_eigenvalues requires sigma >= 0");

  const auto factorization = factor_near(op, sigma);
  const SparseMatrix h = op.assembled();

  const auto apply_inverse = [&](const Vector& x) {
    const StateVector y = factorization->solve({x.head(n), x.tail(n)});
    Vector out(dim);
    out << y.u, y.v;
    return out;
  };

  const Index max_dim = std::min(dim, std::max<Index>(options.max_krylov, k + 1));
  DenseMatrix basis(dim, max_dim);
  std::vector<double> alphas;
  std::vector<double> betas;  // betas[j] couples basis columns j and j+1
  std::mt19937_64 rng(options.seed);

  basis.col(0) = random_unit(dim, rng);
  Index m = 0;
  double scale = 0.0;

  const auto ritz_pairs = [&](Index size) -> std::vector<EigenPair> {
    Vector diag(size), sub(std::max<Index>(size - 1, 0));
    for (Index i = 0; i < size; ++i) diag[i] = alphas[static_cast<std::size_t>(i)];
    for (Index i = 0; i + 1 < size; ++i) sub[i] = betas[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<DenseMatrix> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

    std::vector<Index> order;
    for (Index i = 0; i < size; ++i) {
      const double theta = tri.eigenvalues()[i];
      if (options.selection == GapSelection::above ? theta > 0.0 : theta != 0.0) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      const double ta = tri.eigenvalues()[a];
      const double tb = tri.eigenvalues()[b];
      return options.selection == GapSelection::above ? ta > tb : std::abs(ta) > std::abs(tb);
    });
    if (static_cast<int>(order.size()) > k) order.resize(static_cast<std::size_t>(k));

    std::vector<EigenPair> pairs;
    for (Index idx : order) {
      Vector x = basis.leftCols(size) * tri.eigenvectors().col(idx);
      x.normalize();
      const Vector hx = h * x;
      EigenPair pair;
      pair.value = x.dot(hx);
      pair.residual = (hx - pair.value * x).norm();
      pair.vector = {x.head(n), x.tail(n)};
      pairs.push_back(std::move(pair));
    }
    return pairs;
  };

  const auto all_converged = [&](const std::vector<EigenPair>& pairs) {
    if (static_cast<int>(pairs.size()) < k) return false;
    return std::all_of(pairs.begin(), pairs.end(), [&](const EigenPair& p) {
      return p.residual <= options.tol * (1.0 + std::abs(p.value));
    });
  };

  std::vector<EigenPair> pairs;
  bool exhausted = false;
  while (true) {
    Vector w = apply_inverse(basis.col(m));
    const double a = basis.col(m).dot(w);
    alphas.push_back(a);
    w -= a * basis.col(m);
    if (m > 0) w -= betas[static_cast<std::size_t>(m - 1)] * basis.col(m - 1);
    orthogonalize(w, basis, m + 1);
    double b = w.norm();
    scale = std::max({scale, std::abs(a), b});
    ++m;

    const bool at_limit = m == max_dim;
    if (!at_limit && b <= 1e-12 * scale) {
      // Invariant subspace found; continue from a fresh direction.
      b = 0.0;
      w = random_unit(dim, rng);
      orthogonalize(w, basis, m);
      if (w.norm() <= 1e-8) {
        exhausted = true;
      } else {
        w.normalize();
      }
    } else if (!at_limit) {
      w /= b;
    }

    const bool check = at_limit || exhausted || (m >= k && m % 5 == 0);
    if (check) {
      pairs = ritz_pairs(m);
      if (all_converged(pairs)) break;
      if (at_limit || exhausted) {
        if (static_cast<int>(pairs.size()) < k)
          throw Error(ErrorCode::NoConvergence,
                      "only " + std::to_string(pairs.size()) + " eigenvalues available on the requested side of sigma");
        throw Error(ErrorCode::NoConvergence,
                    "Lanczos did not converge within " + std::to_string(m) + " Krylov vectors");
      }
    }
    betas.push_back(b);
    basis.col(m) = w;
  }

  std::sort(pairs.begin(), pairs.end(), [&](const EigenPair& x, const EigenPair& y) {
    if (options.selection == GapSelection::above) return x.value < y.value;
    return std::abs(x.value - sigma) < std::abs(y.value - sigma);
  });
  return pairs;
}

}  // namespace schurdirac
