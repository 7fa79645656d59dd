#include "wash/commands.hpp"
#include "wash/config.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  CLI::App app{"Noisy underdamped washboard: deterministic and stochastic crossing experiments"};
  app.footer(wash::config_help());
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
  };
  Flags flags;
  for (const std::string& name : wash::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "key = value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "overrides master_seed");
    sub->add_option("--out", flags.out, "overrides output_dir");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    std::ifstream f(flags.config);
    std::stringstream text;
    text << f.rdbuf();
    wash::RunConfig c = wash::parse_config(text.str(), command);
    if (flags.seed) c.master_seed = *flags.seed;
    if (flags.out) c.output_dir = *flags.out;
    return wash::run_command(c, std::cout);
  } catch (const wash::ConfigError& e) {
    std::cerr << "config error in " << flags.config << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "wash " << command << ": " << e.what() << "\n";
    return 3;
  }
}
