#include "kolmolab/serialize.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "kolmolab/error.hpp"

namespace kolmolab {

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::SchemaError, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) schema(std::string("missing key '") + key + "'");
  return j.at(key);
}

double num(const Json& j, const char* key) { return number_from_json(field(j, key)); }

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_to_json(v(i)));
  return a;
}

Vec vec_from(const Json& j) {
  if (!j.is_array() || j.size() > static_cast<std::size_t>(kMaxDim)) schema("expected an array of at most 8 numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from_json(j[i]);
  return v;
}

Json doubles_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

std::vector<double> doubles_from(const Json& j) {
  if (!j.is_array()) schema("expected an array");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(number_from_json(e));
  return v;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorCode::IoError, "truncated grid container");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

Json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  schema("expected a number, got " + j.dump());
}

Json to_json(const BlockSpec& spec) {
  Json blocks = Json::array();
  for (const auto& b : spec.blocks) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      Json row = Json::array();
      for (Eigen::Index k = 0; k < b.cols(); ++k) row.push_back(b(i, k));
      rows.push_back(row);
    }
    blocks.push_back(rows);
  }
  return {{"m0", spec.m0}, {"blocks", blocks}};
}

BlockSpec block_spec_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) schema(path + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "m0" && key != "blocks") schema(path + "." + key + ": unknown key");
  }
  if (!j.contains("m0") || !j["m0"].is_number_integer()) schema(path + ".m0: expected an integer");
  BlockSpec spec;
  spec.m0 = j["m0"].get<int>();
  if (!j.contains("blocks")) return spec;
  const Json& blocks = j["blocks"];
  if (!blocks.is_array()) schema(path + ".blocks: expected an array of matrices");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string bp = path + ".blocks[" + std::to_string(b) + "]";
    const Json& rows = blocks[b];
    if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty()) {
      schema(bp + ": expected a non-empty matrix");
    }
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || rows[i].size() != rows[0].size()) schema(bp + ": ragged matrix");
      for (std::size_t k = 0; k < rows[i].size(); ++k) {
        if (!rows[i][k].is_number()) {
          schema(bp + "[" + std::to_string(i) + "][" + std::to_string(k) + "]: expected a number");
        }
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
      }
    }
    spec.blocks.push_back(m);
  }
  return spec;
}

Json to_json(const LpReport& r) {
  return {{"p", r.p},
          {"T", r.T},
          {"value", number_to_json(r.value)},
          {"divergent", r.divergent},
          {"method", std::string(to_string(r.method))},
          {"time_exponent", r.time_exponent},
          {"error_estimate", number_to_json(r.error_estimate)},
          {"t_min", r.t_min}};
}

LpReport lp_report_from_json(const Json& j) {
  LpReport r;
  r.p = num(j, "p");
  r.T = num(j, "T");
  r.value = num(j, "value");
  r.divergent = field(j, "divergent").get<bool>();
  const auto m = field(j, "method").get<std::string>();
  if (m == "closed_form") {
    r.method = LpMethod::ClosedForm;
  } else if (m == "quadrature") {
    r.method = LpMethod::Quadrature;
  } else {
    schema("unknown method '" + m + "'");
  }
  r.time_exponent = num(j, "time_exponent");
  r.error_estimate = num(j, "error_estimate");
  r.t_min = num(j, "t_min");
  return r;
}

Json to_json(const EmbeddingReport& r) {
  return {{"p", r.p},     {"q", r.q},         {"lhs", r.lhs},       {"bound", r.bound},
          {"sigma", r.sigma}, {"tolerance", r.tolerance}, {"satisfied", r.satisfied}};
}

EmbeddingReport embedding_report_from_json(const Json& j) {
  EmbeddingReport r;
  r.p = num(j, "p");
  r.q = num(j, "q");
  r.lhs = num(j, "lhs");
  r.bound = num(j, "bound");
  r.sigma = num(j, "sigma");
  r.tolerance = num(j, "tolerance");
  r.satisfied = field(j, "satisfied").get<bool>();
  return r;
}

Json to_json(const ExponentTable& t) {
  auto rat = [](const Rational& r) { return Json{{"exact", r.str()}, {"value", r.value()}}; };
  return {{"Q", t.Q}, {"p0", rat(t.p0)}, {"p1", rat(t.p1)}, {"q0", rat(t.q0)}};
}

Json to_json(const ExponentBundle& b) {
  return {{"Q", b.Q},
          {"p0", b.p0},
          {"q0", b.q0},
          {"p1", b.p1},
          {"eps0", b.eps0},
          {"eps1", b.eps1},
          {"p0_hat", b.p0_hat},
          {"p1_hat", b.p1_hat},
          {"theta", b.theta},
          {"q_prime", b.q_prime},
          {"q_dprime", b.q_dprime},
          {"alpha", b.alpha},
          {"coupling1_residual", b.coupling1_residual},
          {"coupling2_residual", b.coupling2_residual}};
}

ExponentBundle exponent_bundle_from_json(const Json& j) {
  ExponentBundle b;
  b.Q = field(j, "Q").get<int>();
  b.p0 = num(j, "p0");
  b.q0 = num(j, "q0");
  b.p1 = num(j, "p1");
  b.eps0 = num(j, "eps0");
  b.eps1 = num(j, "eps1");
  b.p0_hat = num(j, "p0_hat");
  b.p1_hat = num(j, "p1_hat");
  b.theta = num(j, "theta");
  b.q_prime = num(j, "q_prime");
  b.q_dprime = num(j, "q_dprime");
  b.alpha = num(j, "alpha");
  b.coupling1_residual = num(j, "coupling1_residual");
  b.coupling2_residual = num(j, "coupling2_residual");
  return b;
}

Json to_json(const BootstrapSchedule& s) {
  return {{"rho", doubles_json(s.rho)},
          {"tau", s.tau},
          {"ratio_bound", number_to_json(s.ratio_bound)},
          {"monotone", s.monotone},
          {"ratio_bound_holds", s.ratio_bound_holds}};
}

Json to_json(const IterationState& s) {
  return {{"M", s.M},
          {"k", s.k},
          {"bound", s.bound},
          {"schedule", doubles_json(s.schedule)},
          {"measures", doubles_json(s.measures)},
          {"energies", doubles_json(s.energies)},
          {"fitted_gamma", number_to_json(s.fitted_gamma)},
          {"alpha", s.alpha},
          {"q_prime", s.q_prime},
          {"smallness", s.smallness},
          {"chain_terminated", s.chain_terminated},
          {"converged", s.converged},
          {"trials", s.trials}};
}

IterationState iteration_state_from_json(const Json& j) {
  IterationState s;
  s.M = num(j, "M");
  s.k = num(j, "k");
  s.bound = num(j, "bound");
  s.schedule = doubles_from(field(j, "schedule"));
  s.measures = doubles_from(field(j, "measures"));
  s.energies = doubles_from(field(j, "energies"));
  s.fitted_gamma = num(j, "fitted_gamma");
  s.alpha = num(j, "alpha");
  s.q_prime = num(j, "q_prime");
  s.smallness = field(j, "smallness").get<bool>();
  s.chain_terminated = field(j, "chain_terminated").get<bool>();
  s.converged = field(j, "converged").get<bool>();
  s.trials = field(j, "trials").get<int>();
  return s;
}

Json to_json(const LevelIterationResult& r) {
  Json iv = Json::array();
  for (const auto& s : r.intervals) iv.push_back(to_json(s));
  return {{"M", r.M}, {"bound", r.bound}, {"measured_sup", r.measured_sup}, {"intervals", iv}};
}

LevelIterationResult level_iteration_from_json(const Json& j) {
  LevelIterationResult r;
  r.M = num(j, "M");
  r.bound = num(j, "bound");
  r.measured_sup = num(j, "measured_sup");
  for (const auto& s : field(j, "intervals")) r.intervals.push_back(iteration_state_from_json(s));
  return r;
}

Json to_json(const MaxPrincipleReport& r) {
  return {{"sup_interior", r.sup_interior},
          {"sup_K_minus", r.sup_K_minus},
          {"M", r.M},
          {"excess", r.excess},
          {"has_K_minus", r.has_K_minus}};
}

MaxPrincipleReport max_principle_from_json(const Json& j) {
  MaxPrincipleReport r;
  r.sup_interior = num(j, "sup_interior");
  r.sup_K_minus = num(j, "sup_K_minus");
  r.M = num(j, "M");
  r.excess = num(j, "excess");
  r.has_K_minus = field(j, "has_K_minus").get<bool>();
  return r;
}

Json to_json(const DensityReport& r) {
  return {{"l1", r.l1},
          {"ks", doubles_json(r.ks)},
          {"ks_critical", r.ks_critical},
          {"ks_pass", r.ks_pass},
          {"bins", r.bins}};
}

Json to_json(const Moments& m) {
  Json cov = Json::array();
  for (Eigen::Index i = 0; i < m.cov.rows(); ++i) cov.push_back(vec_json(m.cov.row(i).transpose()));
  return {{"mean", vec_json(m.mean)}, {"cov", cov}};
}

Json to_json(const GridSpec& spec) {
  return {{"lower", vec_json(spec.lower)},
          {"upper", vec_json(spec.upper)},
          {"t0", spec.t0},
          {"t1", spec.t1},
          {"shape", spec.shape}};
}

GridSpec grid_spec_from_json(const Json& j) {
  GridSpec s;
  s.lower = vec_from(field(j, "lower"));
  s.upper = vec_from(field(j, "upper"));
  s.t0 = num(j, "t0");
  s.t1 = num(j, "t1");
  const Json& shape = field(j, "shape");
  if (!shape.is_array()) schema("shape must be an array of integers");
  for (const auto& e : shape) {
    if (!e.is_number_integer()) schema("shape must be an array of integers");
    s.shape.push_back(e.get<int>());
  }
  validate_grid_spec(s);
  return s;
}

void write_grid_field(std::ostream& os, const GridField& u) {
  Json header = to_json(u.spec());
  header["format"] = "kolmolab-grid";
  header["version"] = 1;
  header["dtype"] = "f64";
  header["byte_order"] = "little";
  Json spacing = Json::array();
  for (int a = 0; a <= u.dim(); ++a) spacing.push_back(u.spacing(a));
  header["spacing"] = spacing;
  const std::string text = header.dump();
  put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double v : u.values()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw Error(ErrorCode::IoError, "failed to write grid container");
}

GridField read_grid_field(std::istream& is) {
  const std::uint64_t len = get_u64(is);
  if (len > (1u << 24)) throw Error(ErrorCode::IoError, "implausible grid header length");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw Error(ErrorCode::IoError, "truncated header");
  Json header;
  try {
    header = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::IoError, std::string("bad grid header: ") + e.what());
  }
  if (header.value("format", "") != "kolmolab-grid") throw Error(ErrorCode::IoError, "not a kolmolab grid file");
  GridField u(grid_spec_from_json(header));
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::bit_cast<double>(get_u64(is));
  return u;
}

void save_grid_field(const std::filesystem::path& path, const GridField& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_grid_field(os, u);
}

GridField load_grid_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_grid_field(is);
}

void write_grid_csv(std::ostream& os, const GridField& u) {
  const int n = u.dim();
  for (int a = 0; a < n; ++a) os << 'x' << a + 1 << ',';
  os << "t,value\n";
  os << std::setprecision(17);
  const int nt = u.time_extent();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Vec x = u.node_position(i);
    for (int a = 0; a < n; ++a) os << x(a) << ',';
    os << u.coord(n, static_cast<int>(i % nt)) << ',' << u[i] << '\n';
  }
}

void write_samples_csv(std::ostream& os, const SampleBatch& batch) {
  if (batch.points.empty()) return;
  const auto n = batch.points.front().size();
  for (Eigen::Index a = 0; a < n; ++a) os << (a ? "," : "") << 'x' << a + 1;
  os << '\n' << std::setprecision(17);
  for (const auto& z : batch.points) {
    for (Eigen::Index a = 0; a < n; ++a) os << (a ? "," : "") << z(a);
    os << '\n';
  }
}

}  // namespace kolmolab
