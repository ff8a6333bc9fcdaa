#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <variant>

#include <json.hpp>

#include "schurdirac/cli.hpp"
#include "schurdirac/schur_solver.hpp"

namespace schurdirac::cli {

namespace {

using Json = nlohmann::ordered_json;
using Cell = std::variant<double, long long, std::string, bool>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// A tabular report plus summary values; rendered to CSV or JSON.
struct Report {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, Json>> summary;
  std::vector<std::string> footer;  // extra CSV comment lines
};

std::string cell_text(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&cell)) return *b ? "true" : "false";
  return std::get<std::string>(cell);
}

Json number_json(double value) {
  if (!std::isfinite(value)) return nullptr;
  const std::string text = format_number(value);
  double rounded = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), rounded);
  return rounded;
}

Json cell_json(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return number_json(*d);
  if (const auto* i = std::get_if<long long>(&cell)) return *i;
  if (const auto* b = std::get_if<bool>(&cell)) return *b;
  return std::get<std::string>(cell);
}

std::string render(const Report& report, const RunConfig& config, const RunOptions& options,
                   double wall_seconds) {
  const std::string config_text = to_config_text(config);
  if (config.format == OutputFormat::csv) {
    std::string out = "# " + std::string(kToolName) + " " + report.kind + " v" +
                      std::to_string(kReportFormatVersion) + "\n";
    std::size_t start = 0;
    while (start < config_text.size()) {
      const auto end = config_text.find('\n', start);
      out += "# config: " + config_text.substr(start, end - start) + "\n";
      start = end + 1;
    }
    for (std::size_t i = 0; i < report.columns.size(); ++i) out += (i ? "," : "") + report.columns[i];
    out += "\n";
    for (const auto& row : report.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
      out += "\n";
    }
    for (const auto& [key, value] : report.summary) {
      const std::string text = value.is_number_float() ? format_number(value.get<double>())
                               : value.is_null()       ? "nan"
                               : value.is_string()     ? value.get<std::string>()
                                                       : value.dump();
      out += "# summary: " + key + "=" + text + "\n";
    }
    for (const auto& line : report.footer) out += "# " + line + "\n";
    if (options.include_wall_time) out += "# wall_time_s=" + format_number(wall_seconds) + "\n";
    return out;
  }

  Json doc;
  Json& meta = doc["metadata"];
  meta["tool"] = kToolName;
  meta["version"] = kToolVersion;
  meta["report"] = report.kind;
  meta["format_version"] = kReportFormatVersion;
  meta["config"] = config_text;
  if (options.include_wall_time) meta["wall_time_s"] = number_json(wall_seconds);
  doc["columns"] = report.columns;
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json obj;
    for (std::size_t i = 0; i < row.size(); ++i) obj[report.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  Json summary = Json::object();
  for (const auto& [key, value] : report.summary) summary[key] = value;
  doc["summary"] = std::move(summary);
  return doc.dump(2) + "\n";
}

const std::vector<std::string> kSweepColumns = {"nu",         "grid_N",      "grid_scheme",
                                                "margin",     "c2_numeric",  "c2_analytic",
                                                "e1_numeric", "e1_analytic"};

std::vector<Cell> sweep_cells(double nu, const GridSpec& grid, double margin, double c2_numeric,
                              double c2_analytic, double e1_numeric, double e1_analytic) {
  return {nu,         static_cast<long long>(grid.n), std::string(to_string(grid.scheme)),
          margin,     c2_numeric,                     c2_analytic,
          e1_numeric, e1_analytic};
}

std::vector<GridSpec> sweep_grids(const RunConfig& c) {
  std::vector<GridSpec> grids;
  for (std::size_t i = 0; i < c.sweep.grid_n.size(); ++i) {
    GridSpec g = c.grid;
    g.n = c.sweep.grid_n[i];
    if (!c.sweep.grid_r_min.empty()) g.r_min = c.sweep.grid_r_min[i];
    grids.push_back(g);
  }
  return grids;
}

Json grid_json(const GridSpec& g) {
  Json j;
  j["grid_N"] = static_cast<long long>(g.n);
  j["grid_scheme"] = std::string(to_string(g.scheme));
  j["r_min"] = number_json(g.r_min);
  j["r_max"] = number_json(g.r_max);
  return j;
}

std::string coupling_note(const DiracChannelSpec& spec) {
  if (spec.nu <= 1.0) return "";
  return " (coupling nu = " + format_number(spec.nu) + " violates sup r|V(r)| <= 1)";
}

Report validate_report(const RunConfig& c, int& exit_code) {
  const RadialGrid grid = build_grid(c.grid);
  const BlockOperator op = build_channel(c.channel, grid);
  const AdmissibilityReport adm = check_admissibility(c.channel, grid);
  const double margin = positivity_margin(op, 0.0);
  const bool structural = (SparseMatrix(op.q().transpose()) - op.t()).norm() == 0.0;

  Report r;
  r.kind = "validate";
  r.columns = {"key", "value"};
  const auto add = [&](std::string key, Cell value) { r.rows.push_back({std::move(key), std::move(value)}); };
  add("q_equals_t_transpose", structural);
  add("c1", op.c1());
  add("s_min", op.s_diagonal()->minCoeff());
  add("coupling_sup", adm.coupling_sup);
  add("coupling_ok", adm.coupling_ok);
  add("local_l2_integral", adm.local_l2.back().integral);
  add("local_l2_stable", adm.local_l2_stable);
  add("margin", margin);
  add("q0_positive", margin > 0.0);
  Json l2 = Json::array();
  for (const auto& e : adm.local_l2) l2.push_back({{"lower", number_json(e.lower)}, {"integral", number_json(e.integral)}});
  r.summary.emplace_back("local_l2", std::move(l2));
  exit_code = (adm.coupling_ok && margin > 0.0 && structural) ? 0 : 2;
  return r;
}

Report solve_report(const RunConfig& c) {
  const RadialGrid grid = build_grid(c.grid);
  const BlockOperator op = build_channel(c.channel, grid);
  const Vector root_h = grid.spacings().cwiseSqrt();
  const Vector bump = (-((grid.nodes.array() - c.solve.rhs_center) / c.solve.rhs_width).square()).exp().matrix();
  const RhsPair rhs{bump.cwiseProduct(root_h), bump.cwiseProduct(root_h)};
  const SolveReport solved = solve(op, rhs);

  Report r;
  r.kind = "solve";
  r.columns = {"r", "u", "v"};
  for (Index j = 0; j < grid.size(); ++j)
    r.rows.push_back({grid.nodes[j], solved.solution.u[j] / root_h[j], solved.solution.v[j] / root_h[j]});
  r.summary.emplace_back("residual_norm", number_json(solved.residual_norm));
  r.summary.emplace_back("rhs_norm", number_json(std::sqrt(rhs.f1.squaredNorm() + rhs.f2.squaredNorm())));
  r.summary.emplace_back("schur_condition_estimate", number_json(solved.schur_condition_estimate));
  r.summary.emplace_back("ill_conditioned", solved.ill_conditioned);
  return r;
}

Report c2_report(const RunConfig& c) {
  const RadialGrid grid = build_grid(c.grid);
  const C2Consistency cons = c2_consistency(c.channel, grid, c.tolerances.bisection);
  const double margin = positivity_margin(build_channel(c.channel, grid), 0.0);
  SpectrumOptions spectrum;
  spectrum.tol = c.tolerances.eigen;
  const double e1 = channel_spectrum(c.channel, grid, 1, spectrum).front();

  Report r;
  r.kind = "sweep";
  r.columns = kSweepColumns;
  r.rows.push_back(sweep_cells(c.channel.nu, c.grid, margin, cons.c2_numeric, cons.c2_analytic, e1,
                               cons.c2_analytic + c.channel.gamma - 1.0));
  r.summary.emplace_back("c2_numeric", number_json(cons.c2_numeric));
  r.summary.emplace_back("c2_analytic", number_json(cons.c2_analytic));
  r.summary.emplace_back("diff", number_json(cons.diff));
  r.summary.emplace_back("c2_oracle", cons.oracle ? number_json(*cons.oracle) : Json(nullptr));
  return r;
}

Report spectrum_report(const RunConfig& c) {
  const RadialGrid grid = build_grid(c.grid);
  const AdmissibilityReport adm = check_admissibility(c.channel, grid);
  SpectrumOptions spectrum;
  spectrum.tol = c.tolerances.eigen;
  std::vector<double> energies;
  try {
    energies = channel_spectrum(c.channel, grid, c.spectrum_k, spectrum);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::HypothesisFailed) throw;
    throw Error(ErrorCode::HypothesisFailed, e.detail() + coupling_note(c.channel));
  }

  Report r;
  r.kind = "spectrum";
  r.columns = {"level", "e_numeric", "e_analytic", "abs_error"};
  const int n0 = lowest_principal_number(c.channel.kappa);
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const bool has_analytic = c.channel.nu <= std::abs(c.channel.kappa);
    const double analytic =
        has_analytic ? sommerfeld_energy(n0 + static_cast<int>(i), c.channel.kappa, c.channel.nu) : kNaN;
    r.rows.push_back({static_cast<long long>(i + 1), energies[i], analytic, std::abs(energies[i] - analytic)});
  }
  r.summary.emplace_back("coupling_sup", number_json(adm.coupling_sup));
  r.summary.emplace_back("coupling_ok", adm.coupling_ok);
  return r;
}

Report sweep_report(const RunConfig& c, std::span<const double> nu_values) {
  const auto grids = sweep_grids(c);
  SweepOptions options;
  options.bisection_tol = c.tolerances.bisection;
  options.eigen_tol = c.tolerances.eigen;
  const SweepReport sweep = hardy_sweep(c.channel.kappa, nu_values, c.channel.gamma, grids, options);

  Report r;
  r.kind = "sweep";
  r.columns = kSweepColumns;
  Json failures = Json::array();
  for (const auto& row : sweep.rows) {
    r.rows.push_back(sweep_cells(row.nu, row.grid, row.margin, row.c2_numeric, row.c2_analytic,
                                 row.e1_numeric, row.e1_analytic));
    if (!row.failure.empty()) {
      Json f = grid_json(row.grid);
      f["nu"] = number_json(row.nu);
      f["failure"] = row.failure;
      failures.push_back(std::move(f));
    }
  }
  Json critical = Json::array();
  for (const auto& crit : sweep.critical) {
    Json j = grid_json(crit.grid);
    j["nu_star"] = crit.nu_star ? number_json(*crit.nu_star) : Json(nullptr);
    r.footer.push_back("nu_star grid_N=" + std::to_string(crit.grid.n) + " r_min=" + format_number(crit.grid.r_min) +
                       " value=" + (crit.nu_star ? format_number(*crit.nu_star) : std::string("nan")));
    critical.push_back(std::move(j));
  }
  r.summary.emplace_back("nu_star", std::move(critical));
  r.summary.emplace_back("failures", std::move(failures));

  if (c.command == Command::convergence) {
    Json errors = Json::array();
    bool monotone = true;
    double previous = std::numeric_limits<double>::infinity();
    for (const auto& row : sweep.rows) {
      const double err = std::abs(row.c2_numeric - row.c2_analytic);
      errors.push_back(number_json(err));
      monotone = monotone && err < previous;
      previous = err;
    }
    r.summary.emplace_back("c2_abs_error", std::move(errors));
    r.summary.emplace_back("c2_error_decreasing", monotone);
  }
  return r;
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::HypothesisFailed || code == ErrorCode::NonPositiveS ? 2 : 1;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 12);
  return std::string(buf, result.ptr);
}

RunResult run(const RunConfig& config, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  try {
    Report report;
    switch (config.command) {
      case Command::validate: report = validate_report(config, result.exit_code); break;
      case Command::solve: report = solve_report(config); break;
      case Command::c2: report = c2_report(config); break;
      case Command::spectrum: report = spectrum_report(config); break;
      case Command::hardy_sweep: report = sweep_report(config, config.sweep.nu); break;
      case Command::convergence: {
        const double nu[] = {config.channel.nu};
        report = sweep_report(config, nu);
        break;
      }
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.report = render(report, config, options, wall);
    if (result.exit_code == 2)
      result.message = "hypothesis violated: coupling bound or positivity of q_0 fails on this grid";
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.code());
    result.message = (result.exit_code == 2 ? "hypothesis violated: " : "error: ") + std::string(e.what());
    result.report.clear();
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = std::string("internal error: ") + e.what();
    result.report.clear();
  }
  return result;
}

void write_atomically(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + temp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + temp.string());
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw Error(ErrorCode::IoError, "cannot move report into place at " + path);
  }
}

}  // namespace schurdirac::cli
