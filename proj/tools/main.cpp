#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fsde_app/commands.hpp"
#include "fsde_app/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification harness for functional SDEs with degenerate noise"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = ".";
  unsigned threads = 1;
  std::string format = "both";
  for (const std::string& name : fsde::app::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads, 0 = all cores")->capture_default_str();
    sub->add_option("--format", format, "Report files to write")
        ->check(CLI::IsMember({"json", "csv", "both"}))
        ->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fsde::app::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  fsde::app::RunOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  options.format = fsde::app::parse_format(format);
  return fsde::app::run(command, config, options, std::cerr);
}
