#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kolmolab/degiorgi.hpp"
#include "kolmolab/expression.hpp"
#include "kolmolab/fd_solver.hpp"
#include "kolmolab/group_conv.hpp"
#include "kolmolab/lie_group.hpp"
#include "kolmolab/serialize.hpp"

namespace kolmolab::cli {

/// Read-once view of a JSON object: every accessor marks its key as used and
/// finish() rejects whatever was never read.
class Section {
 public:
  Section(const Json& j, std::string path);

  const std::string& path() const noexcept { return path_; }
  bool has(const std::string& key) const;
  std::string key_path(const std::string& key) const { return path_ + "." + key; }

  const Json& raw(const std::string& key);
  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  int integer(const std::string& key);
  int integer(const std::string& key, int fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  std::vector<int> integers(const std::string& key);
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback);
  Section section(const std::string& key);

  void finish() const;

 private:
  const Json* j_;
  std::string path_;
  std::set<std::string> used_;
};

[[noreturn]] void schema_error(const std::string& path, const std::string& what);

struct ExponentsConfig {
  std::vector<double> eps0{0.25};
  double theta = 0.9;
  std::vector<double> q_tilde;
};

struct KernelNormsConfig {
  std::vector<double> p;
  double T = 1.0;
  std::vector<double> t_min_probe{1e-2, 1e-3, 1e-4};
  double tolerance = 1e-6;
  std::vector<double> mass_times;
};

enum class EmbedKind { L1, Grad, L2, Young };

struct EmbedConfig {
  EmbedKind kind = EmbedKind::L1;
  double q = 1.0;
  double eps0 = 0.25;
  double eps1 = 0.05;
  int index = 0;
  /// Young exponents (kind young): 1/p + 1/q = 1/r + 1.
  double young_p = 1.0;
  double young_r = 1.0;
  int fields = 10;
  int bumps = 3;
  GridSpec grid;
  EmbeddingOptions options;
};

struct McConfig {
  SampleMethod method = SampleMethod::Exact;
  double t = 1.0;
  Vec start;
  std::size_t n = 100000;
  int steps = 64;
  int bins = 40;
  bool write_samples = true;
};

struct SolveConfig {
  ProductDomain domain;
  std::vector<Expression> a, b, c, f;
  std::optional<Expression> d, g;
  double lambda = 1.0;
  double Lambda = 1.0;
  std::optional<Expression> gamma_P, gamma_K_plus;
  std::optional<Expression> manufactured;
  FdGrid grid;
  /// Uniform cell counts for a refinement study (empty: single solve on `grid`).
  std::vector<int> refinements;
  /// dt = dt_scale * h^2 during refinements (0 keeps the CFL choice).
  double dt_scale = 0.0;
  bool write_field = true;
};

enum class FieldSource { Solve, Constant, Spike, File };

struct DegiorgiConfig {
  FieldSource source = FieldSource::Solve;
  double M = 0.0;
  double H = 1.0;
  std::vector<int> shape{10, 10, 10};
  std::filesystem::path file;
  double eps0 = 0.25;
  double theta = 0.9;
  LevelIterationOptions options;
};

struct MaxPrincipleConfig {
  /// Uniform cell counts; empty runs the single grid of the solve section.
  std::vector<int> refinements;
  double tolerance = 1e-12;
};

struct ExperimentConfig {
  std::optional<BlockSpec> structure;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "kolmolab_out";
  std::optional<ExponentsConfig> exponents;
  std::optional<KernelNormsConfig> kernel_norms;
  std::optional<EmbedConfig> embed;
  std::optional<McConfig> mc;
  std::optional<SolveConfig> solve;
  std::optional<DegiorgiConfig> degiorgi;
  std::optional<MaxPrincipleConfig> maxprinciple;
  /// The document as read, echoed into reports.
  Json source;
};

/// Parses and schema-validates a whole experiment document. JSON syntax
/// errors carry line and column; schema errors carry the key path.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Coefficients and data of a solve section as closures over its expressions.
CoefficientSet make_coefficients(const SolveConfig& c, const StructureMatrix& s);
BoundaryData make_boundary(const SolveConfig& c);

}  // namespace kolmolab::cli
