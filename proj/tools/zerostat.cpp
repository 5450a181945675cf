// zerostat: experiments on Bergman kernels and zeros of random sections on CP^1.
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "zerostat/commands.hpp"

using namespace zerostat;

int main(int argc, char **argv) {
  CLI::App app{"Bergman kernels and zeros of Gaussian random sections on CP^1"};
  app.require_subcommand(1);

  std::string config_path, out_dir, test_form_name;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::vector<int> degrees;
  int workers = 1;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory (default: $ZEROSTAT_OUT_DIR or ./zerostat_out)");
    sub->add_option("--degree", degrees, "degree p; repeat for several");
    sub->add_option("--samples", samples, "number of random sections M");
    sub->add_option("--test-form", test_form_name, "test form name");
  };
  for (const auto &name : command_names()) add_common(app.add_subcommand(name));
  auto *print = app.add_subcommand("print-config", "print the resolved configuration as JSON");
  add_common(print);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) config.master_seed = *seed;
    if (samples) config.samples = *samples;
    if (!degrees.empty()) config.degrees = degrees;
    if (!test_form_name.empty()) config.test_form = test_form_name;
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (config.output_dir.empty()) {
      const char *env = std::getenv("ZEROSTAT_OUT_DIR");
      config.output_dir = env && *env ? env : "zerostat_out";
    }
    validate(config);

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "print-config") {
      std::cout << to_json(config) << '\n';
      return kExitPass;
    }
    const auto record = run_command(command, config, workers, config.output_dir);
    for (const auto &v : record.verdicts)
      std::cout << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
    for (const auto &n : record.notices) std::cout << "note: " << n << '\n';
    std::cout << "config_hash=" << record.config_hash << " outputs in " << config.output_dir << '\n';
    return record.exit_status();
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitScientific;
  }
}
