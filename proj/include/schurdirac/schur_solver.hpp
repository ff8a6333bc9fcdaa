#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "schurdirac/block_operator.hpp"

namespace schurdirac {

struct RhsPair {
  Vector f1;
  Vector f2;
};

struct SolveOptions {
  // Above this estimate of cond(M_0) the result is flagged ill-conditioned.
  double condition_cap = 1e14;
};

struct SolveReport {
  StateVector solution;
  double residual_norm = 0.0;
  double schur_condition_estimate = 0.0;
  bool ill_conditioned = false;
};

/// Factorizations behind the elimination for one operator: S and the Schur
/// complement M_0 = P + T^T S^{-1} T. Construction fails with
/// HypothesisFailed when M_0 is not positive definite.
class SchurFactorization {
 public:
  explicit SchurFactorization(const BlockOperator& op);
  ~SchurFactorization();
  SchurFactorization(const SchurFactorization&) = delete;
  SchurFactorization& operator=(const SchurFactorization&) = delete;

  // u = M_0^{-1} (F1 + T^T S^{-1} F2),  v = S^{-1} (T u - F2).
  StateVector solve(const RhsPair& rhs) const;

  // lambda_max / lambda_min of M_0 from a few power and inverse iterations.
  double condition_estimate() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Factorization of shifted_operator(op, shift), shared through a small
/// synchronized memo keyed by (operator id, shift).
std::shared_ptr<const SchurFactorization> cached_factorization(const BlockOperator& op,
                                                               double shift);

SolveReport solve(const BlockOperator& op, const RhsPair& rhs, const SolveOptions& options = {});

struct SymmetryCheck {
  double lhs = 0.0;          // <H w, wt>
  double rhs = 0.0;          // <M_0 u, ut> - <S (v - S^{-1} T u), vt - S^{-1} T ut>
  double absdiff = 0.0;
  double swapped_rhs = 0.0;  // rhs with w and wt exchanged
  bool rhs_symmetric = false;
};

SymmetryCheck symmetry_identity_check(const BlockOperator& op, const StateVector& w,
                                      const StateVector& wt);

/// H - sigma I, which keeps the block structure with P - sigma and S + sigma.
BlockOperator shifted_operator(const BlockOperator& op, double sigma);

enum class GapSelection {
  nearest,  // k eigenvalues closest to sigma
  above,    // k smallest eigenvalues greater than sigma
};

struct GapOptions {
  double tol = 1e-8;
  Index max_krylov = 300;
  std::uint64_t seed = 0x5c4u;
  GapSelection selection = GapSelection::nearest;
};

struct EigenPair {
  double value = 0.0;
  StateVector vector;
  double residual = 0.0;  // ||H x - value x|| for unit x
};

/// Eigenpairs of H near sigma by Lanczos on (H - sigma')^{-1}, where each
/// application of the inverse is the elimination solve of shifted_operator.
/// Requires 0 <= sigma' < c2 of op so that the shifted Schur complement stays
/// positive definite.
std::vector<EigenPair> gap_eigenvalues(const BlockOperator& op, double sigma, int k,
                                       const GapOptions& options = {});

}  // namespace schurdirac
