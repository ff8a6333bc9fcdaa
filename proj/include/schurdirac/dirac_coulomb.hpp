#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "schurdirac/block_operator.hpp"

namespace schurdirac {

enum class GridScheme { uniform, logarithmic };

std::string_view to_string(GridScheme scheme) noexcept;

// Grid parameters before node generation; the unit of a refinement study.
struct GridSpec {
  GridScheme scheme = GridScheme::logarithmic;
  Index n = 2000;
  double r_min = 1e-4;
  double r_max = 100.0;
};

struct RadialGrid {
  GridScheme scheme = GridScheme::logarithmic;
  Vector nodes;

  Index size() const { return nodes.size(); }
  double r_min() const { return nodes[0]; }
  double r_max() const { return nodes[nodes.size() - 1]; }
  GridSpec spec() const { return {scheme, size(), r_min(), r_max()}; }

  // Forward spacings h_j = r_{j+1} - r_j, with the last one repeated. They
  // double as the quadrature weights of the discrete L^2(dr) product.
  Vector spacings() const;
};

RadialGrid build_grid(GridScheme scheme, Index n, double r_min = 1e-4, double r_max = 100.0);
RadialGrid build_grid(const GridSpec& spec);

struct DiracChannelSpec {
  int kappa = -1;    // spin-orbit quantum number, nonzero
  double nu = 0.5;   // Coulomb coupling, V(r) = -nu / r
  double gamma = 0.5;
};

void validate(const DiracChannelSpec& spec);

/// Radial Dirac-Coulomb channel in block form, shifted so that
/// H = D_V - (gamma - 1):
///   P = diag(V + 2 - gamma),  S = diag(gamma - V),  T = d/dr + kappa / r,
/// with d/dr a forward difference, homogeneous truncation at both ends, and
/// Q = T^T. Components are stored in the symmetrized variables sqrt(h_j) g_j
/// so that the Euclidean product is the discrete L^2(dr) product.
BlockOperator build_channel(const DiracChannelSpec& spec, const RadialGrid& grid);

/// Same layout with an arbitrary sampled potential in place of -nu / r.
BlockOperator build_channel(const DiracChannelSpec& spec, const RadialGrid& grid,
                            std::span<const double> potential);

struct LocalL2Estimate {
  double lower = 0.0;  // integral over [lower, 1]
  double integral = 0.0;
};

struct AdmissibilityReport {
  double coupling_sup = 0.0;  // max_j r_j |V(r_j)|
  bool coupling_ok = false;   // coupling_sup <= 1
  // Quadrature of |(gamma - V)^{-2} V'|^2 r^2 over [a, 1] for shrinking a.
  // Empty for sampled potentials.
  std::vector<LocalL2Estimate> local_l2;
  bool local_l2_stable = false;
};

AdmissibilityReport check_admissibility(const DiracChannelSpec& spec, const RadialGrid& grid);
AdmissibilityReport check_admissibility(const RadialGrid& grid, std::span<const double> potential);

// Point spectrum of the Dirac-Coulomb operator in units of m c^2.
double sommerfeld_energy(int n, int kappa, double nu);

// Ground state of channel kappa: n = |kappa| for kappa < 0, kappa + 1 otherwise.
int lowest_principal_number(int kappa);

// 1 + E_ground - gamma, or NaN when nu > |kappa|.
double analytic_c2(const DiracChannelSpec& spec);

/// Fraction of the squared norm carried by nearest-neighbour differences,
/// ||diff x||^2 / (4 ||x||^2) over both components; 0 for constants, 1 for
/// a pure checkerboard.
double high_frequency_fraction(const StateVector& x);

struct SpectrumOptions {
  double tol = 1e-8;
  double c2_tol = 1e-10;
  double spurious_threshold = 0.5;
};

/// The k lowest eigenvalues of H above the gap floor -c1, as physical Dirac
/// energies E = lambda + gamma - 1. Modes failing the high-frequency filter
/// are discarded.
std::vector<double> channel_spectrum(const DiracChannelSpec& spec, const RadialGrid& grid, int k,
                                     const SpectrumOptions& options = {});

struct SweepOptions {
  double bisection_tol = 1e-8;
  double eigen_tol = 1e-8;
  double nu_star_tol = 1e-4;
  bool compute_spectrum = true;
  unsigned threads = 0;  // 0 picks hardware concurrency
};

struct SweepRow {
  double nu = 0.0;
  GridSpec grid;
  double margin = 0.0;
  double c2_numeric = 0.0;   // NaN where the hypothesis fails
  double c2_analytic = 0.0;  // NaN for nu > |kappa|
  double e1_numeric = 0.0;
  double e1_analytic = 0.0;
  std::string failure;  // empty when every quantity was computed
};

struct CriticalCoupling {
  GridSpec grid;
  std::optional<double> nu_star;
};

struct SweepReport {
  int kappa = -1;
  double gamma = 0.5;
  std::vector<SweepRow> rows;             // nu-major, input order
  std::vector<CriticalCoupling> critical;  // one per grid, input order
};

SweepReport hardy_sweep(int kappa, std::span<const double> nu_values, double gamma,
                        std::span<const GridSpec> grids, const SweepOptions& options = {});

struct C2Consistency {
  double c2_numeric = 0.0;
  double c2_analytic = 0.0;
  double diff = 0.0;
  std::optional<double> oracle;  // inertia_c2_oracle when 2N <= kDenseOracleCap
};

C2Consistency c2_consistency(const DiracChannelSpec& spec, const RadialGrid& grid, double tol = 1e-8);

}  // namespace schurdirac
