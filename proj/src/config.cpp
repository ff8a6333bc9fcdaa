#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <set>

#include "schurdirac/cli.hpp"

namespace schurdirac::cli {

namespace {

constexpr std::string_view kWhitespace = " \t\r";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(kWhitespace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kWhitespace);
  return s.substr(first, last - first + 1);
}

[[noreturn]] void validation_error(const std::string& key, const std::string& what) {
  throw ConfigError(ErrorCode::ValidationError, key + ": " + what, 0, 0, key);
}

// One `key=value` entry with the position of its value for diagnostics.
struct Entry {
  std::string key;
  std::string_view value;
  int line = 0;
  int value_column = 0;
};

[[noreturn]] void parse_error(const Entry& e, const std::string& what) {
  throw ConfigError(ErrorCode::ParseError,
                    "line " + std::to_string(e.line) + ", column " + std::to_string(e.value_column) +
                        ": " + what,
                    e.line, e.value_column, e.key);
}

double to_double(const Entry& e, std::string_view text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size())
    parse_error(e, "'" + std::string(text) + "' is not a number");
  return value;
}

long long to_integer(const Entry& e, std::string_view text) {
  long long value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size())
    parse_error(e, "'" + std::string(text) + "' is not an integer");
  return value;
}

template <typename Fn>
void for_each_item(const Entry& e, Fn&& fn) {
  std::string_view rest = e.value;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    if (item.empty()) parse_error(e, "empty list item");
    fn(item);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
}

std::string shortest(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& items, Fmt&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += fmt(items[i]);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const Entry&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"command",
       [](RunConfig& c, const Entry& e) {
         const auto command = parse_command(e.value);
         if (!command) validation_error(e.key, "unknown command '" + std::string(e.value) + "'");
         c.command = *command;
       }},
      {"kappa",
       [](RunConfig& c, const Entry& e) { c.channel.kappa = static_cast<int>(to_integer(e, e.value)); }},
      {"nu", [](RunConfig& c, const Entry& e) { c.channel.nu = to_double(e, e.value); }},
      {"gamma", [](RunConfig& c, const Entry& e) { c.channel.gamma = to_double(e, e.value); }},
      {"grid.scheme",
       [](RunConfig& c, const Entry& e) {
         if (e.value == "uniform")
           c.grid.scheme = GridScheme::uniform;
         else if (e.value == "logarithmic")
           c.grid.scheme = GridScheme::logarithmic;
         else
           validation_error(e.key, "expected uniform or logarithmic");
       }},
      {"grid.N", [](RunConfig& c, const Entry& e) { c.grid.n = to_integer(e, e.value); }},
      {"grid.r_min", [](RunConfig& c, const Entry& e) { c.grid.r_min = to_double(e, e.value); }},
      {"grid.r_max", [](RunConfig& c, const Entry& e) { c.grid.r_max = to_double(e, e.value); }},
      {"sweep.nu",
       [](RunConfig& c, const Entry& e) {
         c.sweep.nu.clear();
         for_each_item(e, [&](std::string_view item) { c.sweep.nu.push_back(to_double(e, item)); });
       }},
      {"sweep.grid_N",
       [](RunConfig& c, const Entry& e) {
         c.sweep.grid_n.clear();
         for_each_item(e, [&](std::string_view item) { c.sweep.grid_n.push_back(to_integer(e, item)); });
       }},
      {"sweep.grid_r_min",
       [](RunConfig& c, const Entry& e) {
         c.sweep.grid_r_min.clear();
         for_each_item(e, [&](std::string_view item) { c.sweep.grid_r_min.push_back(to_double(e, item)); });
       }},
      {"spectrum.k",
       [](RunConfig& c, const Entry& e) { c.spectrum_k = static_cast<int>(to_integer(e, e.value)); }},
      {"solve.rhs_center", [](RunConfig& c, const Entry& e) { c.solve.rhs_center = to_double(e, e.value); }},
      {"solve.rhs_width", [](RunConfig& c, const Entry& e) { c.solve.rhs_width = to_double(e, e.value); }},
      {"tol.bisection", [](RunConfig& c, const Entry& e) { c.tolerances.bisection = to_double(e, e.value); }},
      {"tol.eigen", [](RunConfig& c, const Entry& e) { c.tolerances.eigen = to_double(e, e.value); }},
      {"tol.psd", [](RunConfig& c, const Entry& e) { c.tolerances.psd = to_double(e, e.value); }},
      {"output.path", [](RunConfig& c, const Entry& e) { c.output_path = std::string(e.value); }},
      {"output.format",
       [](RunConfig& c, const Entry& e) {
         if (e.value == "csv")
           c.format = OutputFormat::csv;
         else if (e.value == "json")
           c.format = OutputFormat::json;
         else
           validation_error(e.key, "expected csv or json");
       }},
  };
  return table;
}

void validate_config(const RunConfig& c) {
  if (c.channel.kappa == 0) validation_error("kappa", "must be a nonzero integer");
  if (!(c.channel.nu > 0.0)) validation_error("nu", "must be positive");
  if (!(c.channel.gamma > 0.0)) validation_error("gamma", "must be positive");
  if (c.grid.n < 2) validation_error("grid.N", "must be at least 2");
  if (!(c.grid.r_min > 0.0)) validation_error("grid.r_min", "must be positive");
  if (!(c.grid.r_max > c.grid.r_min)) validation_error("grid.r_max", "must exceed grid.r_min");
  if (!(c.tolerances.bisection > 0.0)) validation_error("tol.bisection", "must be positive");
  if (!(c.tolerances.eigen > 0.0)) validation_error("tol.eigen", "must be positive");
  if (!(c.tolerances.psd > 0.0)) validation_error("tol.psd", "must be positive");
  if (c.spectrum_k < 1) validation_error("spectrum.k", "must be at least 1");
  if (!(c.solve.rhs_width > 0.0)) validation_error("solve.rhs_width", "must be positive");
  for (double nu : c.sweep.nu)
    if (!(nu > 0.0)) validation_error("sweep.nu", "entries must be positive");
  for (Index n : c.sweep.grid_n)
    if (n < 2) validation_error("sweep.grid_N", "entries must be at least 2");
  for (double r : c.sweep.grid_r_min)
    if (!(r > 0.0) || !(r < c.grid.r_max))
      validation_error("sweep.grid_r_min", "entries must lie in (0, grid.r_max)");
  if (!c.sweep.grid_r_min.empty() && c.sweep.grid_r_min.size() != c.sweep.grid_n.size())
    validation_error("sweep.grid_r_min", "needs one entry per sweep.grid_N entry");
  if (c.command == Command::hardy_sweep && c.sweep.nu.empty())
    validation_error("sweep.nu", "required by hardy-sweep");
  if ((c.command == Command::hardy_sweep || c.command == Command::convergence) && c.sweep.grid_n.empty())
    validation_error("sweep.grid_N", "required by " + std::string(to_string(c.command)));
}

}  // namespace

std::string_view to_string(Command command) noexcept {
  switch (command) {
    case Command::validate: return "validate";
    case Command::solve: return "solve";
    case Command::c2: return "c2";
    case Command::spectrum: return "spectrum";
    case Command::hardy_sweep: return "hardy-sweep";
    case Command::convergence: return "convergence";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) noexcept {
  for (Command c : {Command::validate, Command::solve, Command::c2, Command::spectrum,
                    Command::hardy_sweep, Command::convergence})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

std::string_view to_string(OutputFormat format) noexcept {
  return format == OutputFormat::csv ? "csv" : "json";
}

bool RunConfig::operator==(const RunConfig& o) const {
  return command == o.command && channel.kappa == o.channel.kappa && channel.nu == o.channel.nu &&
         channel.gamma == o.channel.gamma && grid.scheme == o.grid.scheme && grid.n == o.grid.n &&
         grid.r_min == o.grid.r_min && grid.r_max == o.grid.r_max && sweep == o.sweep &&
         tolerances == o.tolerances && spectrum_k == o.spectrum_k && solve == o.solve &&
         output_path == o.output_path && format == o.format;
}

RunConfig parse_config(std::string_view text, std::optional<Command> command) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  bool has_command = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;

    const auto eq = line.find('=');
    const int first_column = static_cast<int>(line.find_first_not_of(kWhitespace)) + 1;
    if (eq == std::string_view::npos)
      throw ConfigError(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ", column " + std::to_string(first_column) +
                            ": expected key=value",
                        line_no, first_column, "");
    Entry entry;
    entry.key = std::string(trim(line.substr(0, eq)));
    entry.line = line_no;
    if (entry.key.empty())
      throw ConfigError(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ", column " + std::to_string(first_column) +
                            ": empty key",
                        line_no, first_column, "");
    const std::string_view raw_value = line.substr(eq + 1);
    entry.value = trim(raw_value);
    const auto lead = raw_value.find_first_not_of(kWhitespace);
    entry.value_column = static_cast<int>(eq + 2 + (lead == std::string_view::npos ? 0 : lead));

    const auto setter = setters().find(entry.key);
    if (setter == setters().end()) validation_error(entry.key, "unknown key");
    if (!seen.insert(entry.key).second) validation_error(entry.key, "given more than once");
    if (entry.value.empty() && entry.key != "output.path") parse_error(entry, "missing value");
    setter->second(config, entry);
    has_command = has_command || entry.key == "command";
  }
  if (command) {
    config.command = *command;
  } else if (!has_command) {
    validation_error("command", "missing");
  }
  validate_config(config);
  return config;
}

std::string to_config_text(const RunConfig& c) {
  std::string out;
  const auto line = [&out](std::string_view key, const std::string& value) {
    out.append(key);
    out.push_back('=');
    out.append(value);
    out.push_back('\n');
  };
  line("command", std::string(to_string(c.command)));
  line("kappa", std::to_string(c.channel.kappa));
  line("nu", shortest(c.channel.nu));
  line("gamma", shortest(c.channel.gamma));
  line("grid.scheme", std::string(to_string(c.grid.scheme)));
  line("grid.N", std::to_string(c.grid.n));
  line("grid.r_min", shortest(c.grid.r_min));
  line("grid.r_max", shortest(c.grid.r_max));
  if (!c.sweep.nu.empty()) line("sweep.nu", join(c.sweep.nu, shortest));
  if (!c.sweep.grid_n.empty())
    line("sweep.grid_N", join(c.sweep.grid_n, [](Index n) { return std::to_string(n); }));
  if (!c.sweep.grid_r_min.empty()) line("sweep.grid_r_min", join(c.sweep.grid_r_min, shortest));
  line("spectrum.k", std::to_string(c.spectrum_k));
  line("solve.rhs_center", shortest(c.solve.rhs_center));
  line("solve.rhs_width", shortest(c.solve.rhs_width));
  line("tol.bisection", shortest(c.tolerances.bisection));
  line("tol.eigen", shortest(c.tolerances.eigen));
  line("tol.psd", shortest(c.tolerances.psd));
  if (!c.output_path.empty()) line("output.path", c.output_path);
  line("output.format", std::string(to_string(c.format)));
  return out;
}

}  // namespace schurdirac::cli
