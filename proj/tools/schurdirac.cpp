#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "schurdirac/cli.hpp"

namespace cli = schurdirac::cli;

int main(int argc, char** argv) {
  CLI::App app{"Schur-complement analysis of block Dirac-Coulomb operators"};
  app.set_version_flag("--version", std::string(cli::kToolVersion));

  std::string command_name;
  std::string config_path;
  std::string out_path;
  std::string format_name;
  bool timing = false;
  app.add_option("command", command_name, "validate | solve | c2 | spectrum | hardy-sweep | convergence")
      ->required()
      ->check(CLI::IsMember({"validate", "solve", "c2", "spectrum", "hardy-sweep", "convergence"}));
  app.add_option("--config", config_path, "key=value configuration file")->required();
  app.add_option("--out", out_path, "report path (overrides output.path; stdout when unset)");
  app.add_option("--format", format_name, "csv or json (overrides output.format)")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--timing", timing, "record wall time in the report (breaks byte-reproducibility)");
  CLI11_PARSE(app, argc, argv);

  cli::RunConfig config;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot read config " << config_path << "\n";
      return 1;
    }
    std::ostringstream text;
    text << in.rdbuf();
    config = cli::parse_config(text.str(), cli::parse_command(command_name));
    if (!out_path.empty()) config.output_path = out_path;
    if (!format_name.empty())
      config.format = format_name == "csv" ? cli::OutputFormat::csv : cli::OutputFormat::json;
  } catch (const schurdirac::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const cli::RunResult result = cli::run(config, {timing});
  if (!result.report.empty()) {
    try {
      if (config.output_path.empty())
        std::cout << result.report;
      else
        cli::write_atomically(config.output_path, result.report);
    } catch (const schurdirac::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  if (!result.message.empty()) std::cerr << result.message << "\n";
  return result.exit_code;
}
