// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/ldt.hpp"
#include "cocyclab/markov.hpp"

namespace cocyclab::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Config validation failure listing every offending key path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ConfigEntry {
  std::string value;
  int line = 0;
};

/// Line-oriented "key = value" text with [section] headers. Keys before the
/// first header belong to the root section and are addressed without a
/// prefix; others as "section.key".
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& base_dir = ".");

  const std::map<std::string, ConfigEntry>& entries() const noexcept { return entries_; }
  const ConfigEntry* find(const std::string& key) const;
  const std::string& base_dir() const noexcept { return base_dir_; }
  /// FNV-1a 64-bit hash of the raw text, hex encoded.
  const std::string& hash() const noexcept { return hash_; }

 private:
  std::map<std::string, ConfigEntry> entries_;
  std::string base_dir_;
  std::string hash_;
};

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::optional<MarkovKernel> kernel;
  std::optional<Cocycle> cocycle;
  std::optional<MatrixField> direction;
  std::optional<Observable> observable;
  /// Effective values of every recognised key, defaults included.
  std::map<std::string, std::string> params;

  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;
};

const std::vector<std::string>& commands();

/// Validates the config for `command`. Throws ConfigError.
ExperimentConfig load_config(const ConfigFile& file, const std::string& command);

struct RunOutput {
  int exit_code = 0;
  /// File name -> contents, in write order.
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<std::string> warnings;
};

/// Runs the command and returns the artifacts, manifest.json included. The
/// manifest's only run-dependent key is "wall_clock_seconds".
RunOutput execute(const ExperimentConfig& config, const std::string& config_hash);

/// Full pipeline: read config, validate, run, write into out_dir.
/// Returns the process exit status (0 ok, 1 runtime failure, 2 invalid
/// config, 3 failed verdict).
int run(const std::string& command, const std::string& config_path, const std::string& out_dir,
        std::size_t threads, std::ostream& out, std::ostream& err);

/// argv front end.
int main_entry(int argc, char** argv);

/// JSON text with doubles printed as %.17g and non-finite values as null.
std::string dump_json(const nlohmann::ordered_json& value, int indent = 2);

}  // namespace cocyclab::cli
