#pragma once

// Config-driven experiment runner behind the petlab command-line tool.
// A config is a JSON object {command, seed, precision_bits, params}; the
// schema is documented in docs/config_schema.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace petlab::cli {

enum class Format { kTabular, kStructured };

Format parse_format(const std::string& s);

// Command-line overrides; anything unset falls back to the config, then to
// the defaults.
struct Options {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> precision_bits;
  std::optional<std::string> out;
  std::optional<Format> format;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Result {
  // The first table is the main result.
  std::vector<Table> tables;
  std::vector<std::pair<std::string, std::string>> summary;
};

// Validates the top level and fills in seed, precision_bits, out and format.
nlohmann::json resolve(const nlohmann::json& config, const Options& opts);

// Runs the command of a resolved config. Throws petlab::Error subclasses.
Result execute(const nlohmann::json& resolved);

// result.csv (plus result_<name>.csv for further tables) or result.json,
// and summary.txt, in the resolved output directory.
void emit(const Result& result, const nlohmann::json& resolved);

// Reads, resolves, executes and emits; returns the process exit code and
// writes diagnostics to err.
int run(const std::filesystem::path& config_path, const Options& opts, std::ostream& err);

}  // namespace petlab::cli
