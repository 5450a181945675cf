#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "zerostat/geometry.hpp"

namespace zerostat {

/// Invalid configuration; maps to exit status 64.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxDegree = 256;

struct Tolerances {
  double density = 1e-8;
  double kernel_closed_form = 1e-9;
  double st_closed_form = 1e-8;
  double st_oracle = 1e-6;
  double st_ratio_floor = 0.1; // condition (i) quotient / integral of psi^2
  double near_diagonal = 0.05;
  double pl_relative = 1e-4;
  double skewness = 0.15;
  double excess_kurtosis = 0.3;
  double ks = 0.05;
  double mean_sigmas = 4.0;    // |mean - E| in standard errors
};

struct RunConfig {
  std::vector<int> degrees = {16, 32, 64};
  int samples = 2000;
  std::uint64_t master_seed = 1;
  PerturbationSpec perturbation = default_perturbation();
  std::string test_form = "default";
  int grid_level = 0; // 0: p + 8 per degree
  std::string output_dir;
  Tolerances tolerances;

  /// Assembly grid level for degree p under the configured policy.
  int level_for(int p) const;
};

/// Throws ConfigError naming the offending field.
void validate(const RunConfig &c);

std::string to_json(const RunConfig &c);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const std::string &text);
RunConfig load_config(const std::filesystem::path &path);

/// FNV-1a 64 of the canonical JSON with output_dir removed, as 16 hex digits.
std::string config_hash(const RunConfig &c);

} // namespace zerostat
