#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace schurdirac {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Matrices up to this order go through a dense symmetric eigensolver; larger
// ones use Cholesky-probe bisection on the sparse pattern.
inline constexpr Index kDenseEigenCutoff = 400;

// Relative factor in eps_psd = rel * (1 + ||M||_inf).
inline constexpr double kDefaultPsdRel = 1e-9;

SparseMatrix identity(Index n);
SparseMatrix diagonal(const Vector& d);

double inf_norm(const SparseMatrix& m);
double psd_epsilon(const SparseMatrix& m, double rel = kDefaultPsdRel);

bool is_symmetric(const SparseMatrix& m);
bool is_diagonal(const SparseMatrix& m);

/// Smallest eigenvalue of a symmetric matrix. Exact to eigensolver precision
/// on the dense path; on the sparse path it is bracketed by bisection over
/// x -> "M - xI admits a Cholesky factorization" down to a few ulps of the
/// bracket endpoints.
double smallest_eigenvalue(const SparseMatrix& m);
double largest_eigenvalue(const SparseMatrix& m);

bool is_positive_definite(const SparseMatrix& m);

}  // namespace schurdirac
