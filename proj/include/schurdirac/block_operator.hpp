#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "schurdirac/error.hpp"
#include "schurdirac/linalg.hpp"

namespace schurdirac {

// How assemble() obtains the lower spectral bound c1 of S.
struct C1Policy {
  std::optional<double> asserted;

  static C1Policy compute() { return {}; }
  static C1Policy assert_bound(double c1) { return {c1}; }
};

/// Symmetric indefinite block operator
///
///     H = [ P   Q ]      Q = T^T,  P = P^T,  S = S^T >= c1 I > 0
///         [ T  -S ]
///
/// acting on pairs (u, v) of length-N vectors. Instances are immutable; the
/// structural hypotheses are checked once in assemble() and hold for the
/// lifetime of the object.
class BlockOperator {
 public:
  static BlockOperator assemble(SparseMatrix p, SparseMatrix t, SparseMatrix s,
                                C1Policy policy = C1Policy::compute());

  Index half_dim() const { return p_.rows(); }
  const SparseMatrix& p() const { return p_; }
  const SparseMatrix& q() const { return q_; }
  const SparseMatrix& t() const { return t_; }
  const SparseMatrix& s() const { return s_; }
  double c1() const { return c1_; }

  // Diagonal of S when S is diagonal; the Dirac channels take this path.
  const std::optional<Vector>& s_diagonal() const { return s_diag_; }

  /// The full 2N x 2N matrix H.
  SparseMatrix assembled() const;

  // Identity used to key cached factorizations. Copies share it.
  std::uint64_t id() const { return id_; }

 private:
  BlockOperator() = default;

  SparseMatrix p_, q_, t_, s_;
  std::optional<Vector> s_diag_;
  double c1_ = 0.0;
  std::uint64_t id_ = 0;
};

struct StateVector {
  Vector u;
  Vector v;
};

struct FormReport {
  double alpha = 0.0;
  double margin = 0.0;
  // lambda_max / lambda_min of the form matrix, +inf when lambda_min <= 0.
  double form_matrix_condition = 0.0;
};

struct EmbeddingCertificate {
  double delta = 0.0;
  double c2 = 0.0;
  double min_eigenvalue = 0.0;  // of M_0 - delta (I + K^T K), K = S^{-1} T
  double psd_epsilon = 0.0;
  bool certified = false;
};

StateVector apply(const BlockOperator& op, const StateVector& w);

/// M_alpha = (P - alpha I) + T^T (S + alpha I)^{-1} T, the matrix of q_alpha.
/// At alpha = 0 this is the Schur complement of -S in H.
SparseMatrix schur_form_matrix(const BlockOperator& op, double alpha);

/// q_alpha(u, u) evaluated directly from the blocks, without forming M_alpha.
double schur_form_value(const BlockOperator& op, double alpha, const Vector& u);

double positivity_margin(const BlockOperator& op, double alpha);
FormReport form_report(const BlockOperator& op, double alpha);

/// Largest alpha with positivity_margin(op, alpha) >= 0, by bisection on
/// [0, margin(0)]. The bracket is rigorous: margin(alpha) <= margin(0) - alpha.
double find_c2(const BlockOperator& op, double tol = 1e-8);

inline constexpr Index kDenseOracleCap = 1000;

/// (N+1)-th smallest eigenvalue of the dense H. By inertia additivity,
/// In(H - alpha) = In(-(S + alpha)) + In(M_alpha), so M_alpha is positive
/// semidefinite exactly for alpha up to this value.
double inertia_c2_oracle(const BlockOperator& op, Index dense_cap = kDenseOracleCap);

EmbeddingCertificate embedding_delta(const BlockOperator& op, double tol = 1e-8,
                                     double psd_rel = kDefaultPsdRel);

// True iff S^{-1} - (S + alpha)^{-1} - delta S^{-2} is positive semidefinite.
bool resolvent_difference_check(const BlockOperator& op, double alpha, double delta,
                                double psd_rel = kDefaultPsdRel);

// Debug text format: a short header followed by the blocks row-major.
std::string to_text(const BlockOperator& op);
BlockOperator from_text(std::string_view text);

}  // namespace schurdirac
