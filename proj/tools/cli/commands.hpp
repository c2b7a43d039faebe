#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "config.hpp"

namespace kolmolab::cli {

struct RunContext {
  std::filesystem::path out_dir;
  /// Short human-readable progress lines.
  std::ostream* log = nullptr;
};

void cmd_exponents(const ExperimentConfig& c, const RunContext& run);
void cmd_kernel_norms(const ExperimentConfig& c, const RunContext& run);
void cmd_embed(const ExperimentConfig& c, const RunContext& run);
void cmd_mc(const ExperimentConfig& c, const RunContext& run);
void cmd_solve(const ExperimentConfig& c, const RunContext& run);
void cmd_degiorgi(const ExperimentConfig& c, const RunContext& run);
void cmd_maxprinciple(const ExperimentConfig& c, const RunContext& run);

/// Shortest decimal text that reads back to the same double; inf and nan spelled out.
std::string format_number(double v);

}  // namespace kolmolab::cli
