#include "schurdirac/dirac_coulomb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "schurdirac/error.hpp"
#include "schurdirac/schur_solver.hpp"

namespace schurdirac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

Vector coulomb_potential(const RadialGrid& grid, double nu) {
  return (-nu * grid.nodes.array().inverse()).matrix();
}

std::vector<double> spectrum_of(const BlockOperator& op, double gamma, double c2, int k,
                                const SpectrumOptions& options) {
  const Index n = op.half_dim();
  if (k < 1 || k > n) throw Error(ErrorCode::ValidationError, "k must lie in [1, N]");
  GapOptions gap;
  gap.tol = options.tol;
  gap.selection = GapSelection::above;
  // Strictly inside the gap: every eigenvalue above this shift is an
  // upper-branch eigenvalue, the lowest of them being c2 itself.
  const double shift = 0.9 * c2;

  int request = k;
  while (true) {
    const auto pairs = gap_eigenvalues(op, shift, request, gap);
    std::vector<double> energies;
    for (const auto& pair : pairs) {
      if (high_frequency_fraction(pair.vector) > options.spurious_threshold) continue;
      energies.push_back(pair.value + gamma - 1.0);
      if (static_cast<int>(energies.size()) == k) return energies;
    }
    const int rejected = request - static_cast<int>(energies.size());
    if (request >= n)
      throw Error(ErrorCode::NoConvergence, "spurious-mode filter left fewer than k eigenvalues");
    request = std::min<int>(static_cast<int>(n), request + rejected + 1);
  }
}

double simpson_log(double a, double b, double max_step, const auto& f) {
  // integral of f(r) dr over [a, b] in the variable t = ln r
  const double ta = std::log(a);
  int intervals = static_cast<int>(std::ceil((std::log(b) - ta) / max_step));
  intervals += intervals % 2;
  const double dt = (std::log(b) - ta) / intervals;
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double r = std::exp(ta + i * dt);
    const double weight = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += weight * f(r) * r;
  }
  return sum * dt / 3.0;
}

}  // namespace

std::string_view to_string(GridScheme scheme) noexcept {
  return scheme == GridScheme::uniform ? "uniform" : "logarithmic";
}

Vector RadialGrid::spacings() const {
  const Index n = size();
  Vector h(n);
  for (Index j = 0; j + 1 < n; ++j) h[j] = nodes[j + 1] - nodes[j];
  h[n - 1] = h[n - 2];
  return h;
}

RadialGrid build_grid(GridScheme scheme, Index n, double r_min, double r_max) {
  if (!(r_min > 0.0) || !(r_max > r_min) || !std::isfinite(r_max))
    throw Error(ErrorCode::BadRange, "radial grid requires 0 < r_min < r_max");
  if (n < 2) throw Error(ErrorCode::BadRange, "radial grid requires at least 2 nodes");
  RadialGrid grid;
  grid.scheme = scheme;
  grid.nodes.resize(n);
  const double last = static_cast<double>(n - 1);
  for (Index j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / last;
    grid.nodes[j] = scheme == GridScheme::uniform ? r_min + (r_max - r_min) * t
                                                  : r_min * std::pow(r_max / r_min, t);
  }
  grid.nodes[0] = r_min;
  grid.nodes[n - 1] = r_max;
  return grid;
}

RadialGrid build_grid(const GridSpec& spec) {
  return build_grid(spec.scheme, spec.n, spec.r_min, spec.r_max);
}

void validate(const DiracChannelSpec& spec) {
  if (spec.kappa == 0) throw Error(ErrorCode::ValidationError, "kappa must be nonzero");
  if (!(spec.nu > 0.0) || !std::isfinite(spec.nu))
    throw Error(ErrorCode::ValidationError, "nu must be positive");
  if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma))
    throw Error(ErrorCode::ValidationError, "gamma must be positive");
}

BlockOperator build_channel(const DiracChannelSpec& spec, const RadialGrid& grid,
                            std::span<const double> potential) {
  validate(spec);
  const Index n = grid.size();
  if (static_cast<Index>(potential.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "potential must be sampled on every grid node");
  const Eigen::Map<const Vector> v(potential.data(), n);
  const Vector h = grid.spacings();
  const Vector root_h = h.cwiseSqrt();

  // T = W^{1/2} (D + kappa / r) W^{-1/2}, W = diag(h), D the forward difference.
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(2 * n));
  for (Index j = 0; j < n; ++j) {
    entries.emplace_back(j, j, -1.0 / h[j] + spec.kappa / grid.nodes[j]);
    if (j + 1 < n) entries.emplace_back(j, j + 1, root_h[j] / (h[j] * root_h[j + 1]));
  }
  SparseMatrix t(n, n);
  t.setFromTriplets(entries.begin(), entries.end());

  const Vector p_diag = (v.array() + 2.0 - spec.gamma).matrix();
  const Vector s_diag = (spec.gamma - v.array()).matrix();
  return BlockOperator::assemble(diagonal(p_diag), std::move(t), diagonal(s_diag));
}

BlockOperator build_channel(const DiracChannelSpec& spec, const RadialGrid& grid) {
  validate(spec);
  const Vector v = coulomb_potential(grid, spec.nu);
  const BlockOperator op = build_channel(spec, grid, std::span<const double>(v.data(), v.size()));
  // S = gamma + nu / r >= gamma; certify the analytic bound rather than the
  // grid minimum so that c1 does not depend on r_max.
  return BlockOperator::assemble(op.p(), op.t(), op.s(), C1Policy::assert_bound(spec.gamma));
}

AdmissibilityReport check_admissibility(const RadialGrid& grid, std::span<const double> potential) {
  if (static_cast<Index>(potential.size()) != grid.size())
    throw Error(ErrorCode::DimensionMismatch, "potential must be sampled on every grid node");
  AdmissibilityReport report;
  for (Index j = 0; j < grid.size(); ++j)
    report.coupling_sup =
        std::max(report.coupling_sup, grid.nodes[j] * std::abs(potential[static_cast<std::size_t>(j)]));
  report.coupling_ok = report.coupling_sup <= 1.0;
  return report;
}

AdmissibilityReport check_admissibility(const DiracChannelSpec& spec, const RadialGrid& grid) {
  validate(spec);
  const Vector v = coulomb_potential(grid, spec.nu);
  AdmissibilityReport report = check_admissibility(grid, std::span<const double>(v.data(), v.size()));

  // |(gamma - V)^{-2} V'|^2 r^2 = nu^2 r^2 / (gamma r + nu)^4 for V = -nu / r.
  const double nu = spec.nu;
  const double gamma = spec.gamma;
  const auto integrand = [nu, gamma](double r) {
    const double denom = gamma * r + nu;
    return nu * nu * r * r / (denom * denom * denom * denom);
  };
  double previous_increment = std::numeric_limits<double>::infinity();
  bool shrinking = true;
  for (int e = 1; e <= 8; ++e) {
    const double lower = std::pow(10.0, -e);
    const double integral = simpson_log(lower, 1.0, 1e-3, integrand);
    if (!report.local_l2.empty()) {
      const double increment = std::abs(integral - report.local_l2.back().integral);
      const double noise = 1e-12 * (1.0 + std::abs(integral));
      shrinking = shrinking && (increment <= previous_increment || increment <= noise);
      previous_increment = increment;
    }
    report.local_l2.push_back({lower, integral});
  }
  const double final_value = report.local_l2.back().integral;
  report.local_l2_stable = shrinking && std::isfinite(final_value) &&
                           previous_increment <= 1e-6 * (1.0 + std::abs(final_value));
  return report;
}

int lowest_principal_number(int kappa) {
  if (kappa == 0) throw Error(ErrorCode::InvalidQuantumNumbers, "kappa must be nonzero");
  return kappa < 0 ? -kappa : kappa + 1;
}

double sommerfeld_energy(int n, int kappa, double nu) {
  if (kappa == 0) throw Error(ErrorCode::InvalidQuantumNumbers, "kappa must be nonzero");
  if (n < lowest_principal_number(kappa))
    throw Error(ErrorCode::InvalidQuantumNumbers,
                "n = " + std::to_string(n) + " is below the lowest level of kappa = " + std::to_string(kappa));
  const double abs_kappa = std::abs(kappa);
  if (!(nu >= 0.0) || !(nu <= abs_kappa))
    throw Error(ErrorCode::InvalidQuantumNumbers, "requires 0 <= nu <= |kappa|");
  const double radial = (n - abs_kappa) + std::sqrt(abs_kappa * abs_kappa - nu * nu);
  return 1.0 / std::sqrt(1.0 + nu * nu / (radial * radial));
}

double analytic_c2(const DiracChannelSpec& spec) {
  if (!(spec.nu <= std::abs(spec.kappa))) return kNaN;
  return 1.0 + sommerfeld_energy(lowest_principal_number(spec.kappa), spec.kappa, spec.nu) - spec.gamma;
}

double high_frequency_fraction(const StateVector& x) {
  const auto diff_energy = [](const Vector& c) {
    double sum = 0.0;
    for (Index j = 0; j + 1 < c.size(); ++j) sum += (c[j + 1] - c[j]) * (c[j + 1] - c[j]);
    return sum;
  };
  const double norm = x.u.squaredNorm() + x.v.squaredNorm();
  if (norm == 0.0) return 0.0;
  return (diff_energy(x.u) + diff_energy(x.v)) / (4.0 * norm);
}

std::vector<double> channel_spectrum(const DiracChannelSpec& spec, const RadialGrid& grid, int k,
                                     const SpectrumOptions& options) {
  const BlockOperator op = build_channel(spec, grid);
  const double c2 = find_c2(op, options.c2_tol);
  return spectrum_of(op, spec.gamma, c2, k, options);
}

SweepReport hardy_sweep(int kappa, std::span<const double> nu_values, double gamma,
                        std::span<const GridSpec> grids, const SweepOptions& options) {
  if (nu_values.empty() || grids.empty())
    throw Error(ErrorCode::ValidationError, "hardy_sweep needs at least one nu and one grid");

  SweepReport report;
  report.kappa = kappa;
  report.gamma = gamma;
  report.rows.resize(nu_values.size() * grids.size());

  parallel_for(report.rows.size(), options.threads, [&](std::size_t cell) {
    const std::size_t i_nu = cell / grids.size();
    const std::size_t i_grid = cell % grids.size();
    SweepRow& row = report.rows[cell];
    row.nu = nu_values[i_nu];
    row.grid = grids[i_grid];
    row.margin = row.c2_numeric = row.e1_numeric = kNaN;
    const DiracChannelSpec spec{kappa, row.nu, gamma};
    row.c2_analytic = analytic_c2(spec);
    row.e1_analytic = std::isnan(row.c2_analytic) ? kNaN : row.c2_analytic + gamma - 1.0;
    try {
      const BlockOperator op = build_channel(spec, build_grid(row.grid));
      row.margin = positivity_margin(op, 0.0);
      if (!(row.margin > 0.0)) {
        row.failure = "HypothesisFailed: q_0 is not positive definite";
        return;
      }
      row.c2_numeric = find_c2(op, options.bisection_tol);
      if (options.compute_spectrum) {
        SpectrumOptions spectrum;
        spectrum.tol = options.eigen_tol;
        row.e1_numeric = spectrum_of(op, gamma, row.c2_numeric, 1, spectrum).front();
      }
    } catch (const Error& e) {
      row.failure = e.what();
    }
  });

  report.critical.resize(grids.size());
  parallel_for(grids.size(), options.threads, [&](std::size_t i_grid) {
    CriticalCoupling& crit = report.critical[i_grid];
    crit.grid = grids[i_grid];
    std::vector<std::pair<double, double>> samples;  // (nu, margin)
    for (std::size_t i_nu = 0; i_nu < nu_values.size(); ++i_nu)
      samples.emplace_back(nu_values[i_nu], report.rows[i_nu * grids.size() + i_grid].margin);
    std::sort(samples.begin(), samples.end());
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (!(samples[i - 1].second >= 0.0) || samples[i].second >= 0.0) continue;
      double lo = samples[i - 1].first;
      double hi = samples[i].first;
      const RadialGrid grid = build_grid(crit.grid);
      while (hi - lo > options.nu_star_tol) {
        const double mid = 0.5 * (lo + hi);
        const BlockOperator op = build_channel({kappa, mid, gamma}, grid);
        if (positivity_margin(op, 0.0) >= 0.0)
          lo = mid;
        else
          hi = mid;
      }
      crit.nu_star = hi;
      break;
    }
  });
  return report;
}

C2Consistency c2_consistency(const DiracChannelSpec& spec, const RadialGrid& grid, double tol) {
  validate(spec);
  if (spec.nu > 1.0)
    throw Error(ErrorCode::HypothesisFailed,
                "coupling bound sup |x||V(x)| <= 1 fails (nu = " + std::to_string(spec.nu) + ")");
  const BlockOperator op = build_channel(spec, grid);
  C2Consistency out;
  out.c2_numeric = find_c2(op, tol);
  out.c2_analytic = analytic_c2(spec);
  out.diff = out.c2_numeric - out.c2_analytic;
  if (2 * op.half_dim() <= kDenseOracleCap) out.oracle = inertia_c2_oracle(op);
  return out;
}

}  // namespace schurdirac
