#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "zerostat/config.hpp"

namespace zerostat {

inline constexpr const char *kToolVersion = "0.1.0";

enum ExitStatus : int { kExitPass = 0, kExitScientific = 2, kExitTainted = 3, kExitConfig = 64 };

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunRecord {
  std::string command;
  std::string config_hash;
  std::string timestamp; // UTC, ISO 8601
  std::string tool_version = kToolVersion;
  std::vector<std::string> outputs; // file names relative to the output directory
  std::vector<Verdict> verdicts;
  std::vector<std::string> notices;
  bool tainted = false;

  /// 2 if any verdict failed, else 3 if tainted, else 0.
  int exit_status() const;
};

std::vector<std::string> command_names();

/// Runs one subcommand, writes its CSV files and <command>_record.json into
/// `out_dir`, and returns the record. Throws ConfigError for unknown
/// commands and invalid configurations.
RunRecord run_command(const std::string &command, const RunConfig &config, int workers,
                      const std::filesystem::path &out_dir);

/// Every CSV starts with this line.
std::string csv_preamble(const RunConfig &config);

/// "%.17g"; non-finite values print as nan or inf.
std::string format_number(double v);

} // namespace zerostat
