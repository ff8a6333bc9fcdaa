#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "schurdirac/dirac_coulomb.hpp"
#include "schurdirac/error.hpp"

namespace schurdirac::cli {

inline constexpr std::string_view kToolName = "schurdirac";
inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kReportFormatVersion = 1;

enum class Command { validate, solve, c2, spectrum, hardy_sweep, convergence };
enum class OutputFormat { csv, json };

std::string_view to_string(Command command) noexcept;
std::optional<Command> parse_command(std::string_view name) noexcept;
std::string_view to_string(OutputFormat format) noexcept;

struct Tolerances {
  double bisection = 1e-8;
  double eigen = 1e-8;
  double psd = 1e-9;
  bool operator==(const Tolerances&) const = default;
};

struct SweepSettings {
  std::vector<double> nu;
  std::vector<Index> grid_n;
  std::vector<double> grid_r_min;  // optional; one per grid_n entry
  bool operator==(const SweepSettings&) const = default;
};

struct SolveSettings {
  // Both right-hand-side components are exp(-((r - center) / width)^2).
  double rhs_center = 1.0;
  double rhs_width = 0.5;
  bool operator==(const SolveSettings&) const = default;
};

struct RunConfig {
  Command command = Command::c2;
  DiracChannelSpec channel;
  GridSpec grid;
  SweepSettings sweep;
  Tolerances tolerances;
  int spectrum_k = 2;
  SolveSettings solve;
  std::string output_path;  // empty writes to stdout
  OutputFormat format = OutputFormat::json;

  bool operator==(const RunConfig& other) const;
};

// ParseError carries a position; ValidationError names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(ErrorCode code, const std::string& message, int line, int column, std::string key)
      : Error(code, message), line_(line), column_(column), key_(std::move(key)) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::string& key() const noexcept { return key_; }

 private:
  int line_;
  int column_;
  std::string key_;
};

/// Flat `key=value` lines with dotted keys and `#` comments. `command`
/// overrides any command given in the text.
RunConfig parse_config(std::string_view text, std::optional<Command> command = std::nullopt);

/// Canonical text of a resolved config; parse_config() reads it back to an
/// equal RunConfig.
std::string to_config_text(const RunConfig& config);

struct RunOptions {
  bool include_wall_time = false;  // makes reports non-reproducible
};

struct RunResult {
  int exit_code = 0;      // 0 ok, 1 software failure, 2 hypothesis violated
  std::string report;     // empty when nothing was produced
  std::string message;    // diagnostic for stderr
};

RunResult run(const RunConfig& config, const RunOptions& options = {});

// Writes via a temporary file in the same directory and a rename.
void write_atomically(const std::string& path, std::string_view content);

std::string format_number(double value);

}  // namespace schurdirac::cli
