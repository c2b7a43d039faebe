#pragma once

#include <filesystem>
#include <iosfwd>

#include "kolmolab/degiorgi.hpp"
#include "kolmolab/fd_solver.hpp"
#include "kolmolab/group_conv.hpp"
#include "kolmolab/kernel.hpp"
#include "kolmolab/lie_group.hpp"
#include "kolmolab/sde_oracle.hpp"
#include "kolmolab/third_party/json.hpp"

namespace kolmolab {

using Json = nlohmann::json;

/// Non-finite numbers are written as the strings "inf", "-inf" and "nan".
Json number_to_json(double v);
double number_from_json(const Json& j);

Json to_json(const BlockSpec& spec);
/// Throws SchemaError naming the offending path.
BlockSpec block_spec_from_json(const Json& j, const std::string& path = "structure");

Json to_json(const LpReport& r);
LpReport lp_report_from_json(const Json& j);

Json to_json(const EmbeddingReport& r);
EmbeddingReport embedding_report_from_json(const Json& j);

Json to_json(const ExponentTable& t);
Json to_json(const ExponentBundle& b);
ExponentBundle exponent_bundle_from_json(const Json& j);

Json to_json(const BootstrapSchedule& s);

Json to_json(const IterationState& s);
IterationState iteration_state_from_json(const Json& j);
Json to_json(const LevelIterationResult& r);
LevelIterationResult level_iteration_from_json(const Json& j);

Json to_json(const MaxPrincipleReport& r);
MaxPrincipleReport max_principle_from_json(const Json& j);

Json to_json(const DensityReport& r);
Json to_json(const Moments& m);

Json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const Json& j);

/// Binary container: u64 little-endian header length, JSON header, then the
/// values as little-endian f64 in row-major order (time fastest).
void write_grid_field(std::ostream& os, const GridField& u);
GridField read_grid_field(std::istream& is);
void save_grid_field(const std::filesystem::path& path, const GridField& u);
GridField load_grid_field(const std::filesystem::path& path);

/// One row per node: x1..xN, t, value.
void write_grid_csv(std::ostream& os, const GridField& u);
/// One row per sample: x1..xN.
void write_samples_csv(std::ostream& os, const SampleBatch& batch);

}  // namespace kolmolab
