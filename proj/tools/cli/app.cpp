#include "app.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "kolmolab/error.hpp"

namespace kolmolab::cli {

namespace {

using Command = std::function<void(const ExperimentConfig&, const RunContext&)>;

const std::map<std::string, std::pair<Command, const char*>>& commands() {
  static const std::map<std::string, std::pair<Command, const char*>> table = {
      {"exponents", {cmd_exponents, "Exact exponent table, coupled exponents and bootstrap schedules"}},
      {"kernel-norms", {cmd_kernel_norms, "L^p norms of the fundamental solution: closed form against quadrature"}},
      {"embed", {cmd_embed, "Young and embedding inequalities on random fields"}},
      {"mc", {cmd_mc, "Monte Carlo sampling of the transition law"}},
      {"solve", {cmd_solve, "Finite-difference solve, optionally a manufactured-solution refinement study"}},
      {"degiorgi", {cmd_degiorgi, "Level-set iteration certificate for a discrete field"}},
      {"maxprinciple", {cmd_maxprinciple, "Maximum-principle audit of finite-difference solutions"}},
  };
  return table;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
      return kExitUsage;
    case ErrorKind::Validation:
      return kExitValidation;
    case ErrorKind::Numerical:
      return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for Kolmogorov-type operators", "kolmolab"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = 0;
  std::string out_dir;
  for (const auto& [name, entry] : commands()) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->add_option("config", config_path, "Experiment JSON file")->required();
    sub->add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "kolmolab: " << e.what() << '\n' << "run 'kolmolab --help' for usage\n";
    return kExitUsage;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (const char* env = std::getenv("KOLMOLAB_SEED"); env != nullptr) {
      const std::string text(env);
      std::uint64_t seed = 0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), seed);
      if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        err << "kolmolab: KOLMOLAB_SEED must be a non-negative integer, got '" << text << "'\n";
        return kExitUsage;
      }
      cfg.seed = seed;
    }
    if (threads > 0) omp_set_num_threads(threads);
    RunContext run_ctx;
    run_ctx.out_dir = out_dir.empty() ? cfg.output_dir : std::filesystem::path(out_dir);
    run_ctx.log = &out;
    std::error_code ec;
    std::filesystem::create_directories(run_ctx.out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + run_ctx.out_dir.string());
    commands().at(name).first(cfg, run_ctx);
  } catch (const Error& e) {
    err << "kolmolab " << name << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "kolmolab " << name << ": internal error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace kolmolab::cli
