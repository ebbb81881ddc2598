#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "specmix/eea.hpp"
#include "specmix/trainer.hpp"

namespace specmix::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything `specmix unmix` needs. Serialized as flat `key = value` lines.
struct RunConfig {
  TrainConfig train{};
  std::optional<std::size_t> endmembers;  // required key, no default
  std::vector<EeaAlgorithm> eeas{EeaAlgorithm::Atgp, EeaAlgorithm::Vca, EeaAlgorithm::Nfindr};
  std::uint64_t eea_seed = 0;
  std::filesystem::path image;
  std::filesystem::path out;
};

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

// Every accepted key with its default ("" means required).
const std::vector<ConfigKey>& config_keys();

// Sets one key; throws ConfigError naming the key on a bad value or unknown key.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);

// Parses a config text; unknown or duplicate keys and missing required keys
// are errors that name the key.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Throws ConfigError if a required key was never set.
void require_complete(const RunConfig& cfg);

std::string to_config_text(const RunConfig& cfg);

// Entry point used by main() and the tests. Returns the process exit code;
// failures print a single "specmix: error: ..." line to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace specmix::cli
