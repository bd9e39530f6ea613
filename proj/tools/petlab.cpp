#include <CLI11.hpp>

#include <iostream>

#include "petlab/common.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"petlab: polynomial ergodic averages workbench"};
  app.set_version_flag("--version", std::string("petlab ") + petlab::kVersion);

  std::string config;
  std::uint64_t seed = 0, bits = 0;
  std::string out, format;
  app.add_option("--config", config, "experiment config (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed, overrides the config");
  auto* bits_opt = app.add_option("--precision-bits", bits, "fixed-point bits (multiple of 64, at most 1024)");
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* fmt_opt = app.add_option("--format", format, "tabular or structured")
                      ->check(CLI::IsMember({"tabular", "structured"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(petlab::ExitCode::kConfig);
  }

  petlab::cli::Options opts;
  if (*seed_opt) opts.seed = seed;
  if (*bits_opt) opts.precision_bits = bits;
  if (*out_opt) opts.out = out;
  if (*fmt_opt) opts.format = petlab::cli::parse_format(format);
  return petlab::cli::run(config, opts, std::cerr);
}
