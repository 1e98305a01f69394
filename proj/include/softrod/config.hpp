#pragma once

// Run configuration file (JSON). Every key is optional; missing keys take the
// reference defaults and unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "softrod/envs.hpp"

namespace softrod {

struct RunConfig {
  SimConfig sim;
  Task task = Task::follow_target;
  Scheme scheme = Scheme::implicit;
  std::uint64_t seed = 0;
  int episodes = 1;
  std::size_t envs = 1;
  int workers = 0;  // 0: all available (capped by SOFTROD_THREADS)
  std::string output;

  void validate() const;
};

/// Throws ConfigError on malformed JSON, wrong types, out-of-range values
/// or unknown keys.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Effective configuration with every key spelled out; parse_config of the
/// result reproduces `config`.
std::string dump_config(const RunConfig& config);

}  // namespace softrod
