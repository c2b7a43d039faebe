#include "config.hpp"

#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "kolmolab/error.hpp"

namespace kolmolab::cli {

void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaError, path + ": " + what);
}

Section::Section(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
  if (!j.is_object()) schema_error(path_, "expected an object");
}

bool Section::has(const std::string& key) const { return j_->contains(key); }

const Json& Section::raw(const std::string& key) {
  if (!has(key)) schema_error(key_path(key), "missing required key");
  used_.insert(key);
  return j_->at(key);
}

double Section::number(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_number()) schema_error(key_path(key), "expected a number");
  return v.get<double>();
}

double Section::number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

int Section::integer(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < std::numeric_limits<int>::min() ||
      v.get<std::int64_t>() > std::numeric_limits<int>::max()) {
    schema_error(key_path(key), "expected an integer");
  }
  return v.get<int>();
}

int Section::integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

bool Section::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const Json& v = raw(key);
  if (!v.is_boolean()) schema_error(key_path(key), "expected true or false");
  return v.get<bool>();
}

std::string Section::string(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_string()) schema_error(key_path(key), "expected a string");
  return v.get<std::string>();
}

std::string Section::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

std::vector<double> Section::numbers(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_array()) schema_error(key_path(key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) schema_error(key_path(key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<double> Section::numbers(const std::string& key, const std::vector<double>& fallback) {
  return has(key) ? numbers(key) : fallback;
}

std::vector<int> Section::integers(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_array()) schema_error(key_path(key), "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) {
      schema_error(key_path(key) + "[" + std::to_string(i) + "]", "expected an integer");
    }
    out.push_back(v[i].get<int>());
  }
  return out;
}

std::vector<int> Section::integers(const std::string& key, const std::vector<int>& fallback) {
  return has(key) ? integers(key) : fallback;
}

Section Section::section(const std::string& key) { return Section(raw(key), key_path(key)); }

void Section::finish() const {
  for (const auto& [key, _] : j_->items()) {
    if (!used_.count(key)) schema_error(key_path(key), "unknown key");
  }
}

namespace {

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) schema_error(path, what);
}

Vec to_vec(const std::vector<double>& v, const std::string& path) {
  require(v.size() <= static_cast<std::size_t>(kMaxDim), path, "at most 8 entries");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

Expression expression_at(const Json& v, const std::string& path, int dim) {
  if (v.is_number()) return Expression::constant(v.get<double>());
  if (!v.is_string()) schema_error(path, "expected a number or an expression string");
  try {
    return Expression::parse(v.get<std::string>(), dim);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.message());
  }
}

Expression expression(Section& s, const std::string& key, int dim) {
  return expression_at(s.raw(key), s.key_path(key), dim);
}

std::vector<Expression> expression_list(Section& s, const std::string& key, int dim, std::size_t count) {
  const Json& v = s.raw(key);
  const std::string path = s.key_path(key);
  require(v.is_array() && v.size() == count, path, "expected an array of " + std::to_string(count) + " entries");
  std::vector<Expression> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(expression_at(v[i], path + "[" + std::to_string(i) + "]", dim));
  return out;
}

GridSpec parse_grid(Section s, int dim) {
  GridSpec g;
  g.lower = to_vec(s.numbers("lower"), s.key_path("lower"));
  g.upper = to_vec(s.numbers("upper"), s.key_path("upper"));
  g.t0 = s.number("t0", 0.0);
  g.t1 = s.number("t1", 1.0);
  g.shape = s.integers("shape");
  s.finish();
  require(g.lower.size() == dim && g.upper.size() == dim, s.path(), "lower and upper need N entries");
  require(static_cast<int>(g.shape.size()) == dim + 1, s.path(), "shape needs N + 1 extents");
  try {
    validate_grid_spec(g);
  } catch (const Error& e) {
    throw Error(e.code(), s.path() + ": " + e.message());
  }
  return g;
}

ExponentsConfig parse_exponents(Section s) {
  ExponentsConfig c;
  c.eps0 = s.numbers("eps0", c.eps0);
  c.theta = s.number("theta", c.theta);
  c.q_tilde = s.numbers("q_tilde", c.q_tilde);
  s.finish();
  require(c.theta > 0.0 && c.theta < 1.0, s.key_path("theta"), "must lie in (0, 1)");
  return c;
}

KernelNormsConfig parse_kernel_norms(Section s) {
  KernelNormsConfig c;
  if (s.has("p") && s.raw("p").is_object()) {
    Section r = s.section("p");
    const double from = r.number("from");
    const double to = r.number("to");
    const double step = r.number("step");
    r.finish();
    require(step > 0.0, r.key_path("step"), "must be positive");
    for (int k = 0; from + k * step <= to + 1e-9 * step; ++k) c.p.push_back(from + k * step);
  } else {
    c.p = s.numbers("p");
  }
  for (std::size_t i = 0; i < c.p.size(); ++i) {
    require(c.p[i] >= 1.0, s.key_path("p") + "[" + std::to_string(i) + "]", "p must be >= 1");
  }
  c.T = s.number("T", c.T);
  c.t_min_probe = s.numbers("t_min_probe", c.t_min_probe);
  c.tolerance = s.number("tolerance", c.tolerance);
  c.mass_times = s.numbers("mass_times", c.mass_times);
  s.finish();
  require(c.T > 0.0, s.key_path("T"), "must be positive");
  require(c.tolerance > 0.0, s.key_path("tolerance"), "must be positive");
  for (double t : c.t_min_probe) require(t > 0.0 && t < c.T, s.key_path("t_min_probe"), "entries must lie in (0, T)");
  for (double t : c.mass_times) require(t > 0.0, s.key_path("mass_times"), "entries must be positive");
  return c;
}

ConvolveOptions parse_quadrature(Section s) {
  ConvolveOptions o;
  o.hermite_order = s.integer("hermite", o.hermite_order);
  o.legendre_order = s.integer("legendre", o.legendre_order);
  o.panels = s.integer("panels", o.panels);
  s.finish();
  require(o.hermite_order >= 1 && o.legendre_order >= 1 && o.panels >= 1, s.path(), "orders must be >= 1");
  return o;
}

EmbedConfig parse_embed(Section s, const StructureMatrix& st) {
  EmbedConfig c;
  const std::string kind = s.string("kind", "l1");
  if (kind == "l1") {
    c.kind = EmbedKind::L1;
  } else if (kind == "grad") {
    c.kind = EmbedKind::Grad;
  } else if (kind == "l2") {
    c.kind = EmbedKind::L2;
  } else if (kind == "young") {
    c.kind = EmbedKind::Young;
  } else {
    schema_error(s.key_path("kind"), "expected one of l1, grad, l2, young");
  }
  c.q = s.number("q", c.q);
  c.eps0 = s.number("eps0", c.eps0);
  c.eps1 = s.number("eps1", c.eps1);
  c.index = s.integer("index", c.index);
  c.young_p = s.number("p", c.young_p);
  c.young_r = s.number("r", c.young_r);
  c.fields = s.integer("fields", c.fields);
  c.bumps = s.integer("bumps", c.bumps);
  c.grid = parse_grid(s.section("grid"), st.N());
  if (s.has("quadrature")) c.options.convolve = parse_quadrature(s.section("quadrature"));
  c.options.tolerance = s.number("tolerance", c.options.tolerance);
  c.options.support_sigmas = s.number("support_sigmas", c.options.support_sigmas);
  s.finish();
  require(c.q >= 1.0, s.key_path("q"), "must be >= 1");
  require(c.fields >= 0, s.key_path("fields"), "must be >= 0");
  require(c.bumps >= 1, s.key_path("bumps"), "must be >= 1");
  require(c.index >= 0 && c.index < st.m0(), s.key_path("index"), "must be < m0");
  require(c.options.tolerance >= 0.0, s.key_path("tolerance"), "must be >= 0");
  return c;
}

McConfig parse_mc(Section s, const StructureMatrix& st) {
  McConfig c;
  const std::string method = s.string("method", "exact");
  if (method == "exact") {
    c.method = SampleMethod::Exact;
  } else if (method == "euler") {
    c.method = SampleMethod::EulerMaruyama;
  } else {
    schema_error(s.key_path("method"), "expected exact or euler");
  }
  c.t = s.number("t", c.t);
  c.start = s.has("start") ? to_vec(s.numbers("start"), s.key_path("start")) : Vec(Vec::Zero(st.N()));
  const Json& n = s.has("n") ? s.raw("n") : Json(100000);
  require(n.is_number_integer() && n.get<std::int64_t>() > 0, s.key_path("n"), "expected a positive integer");
  c.n = n.get<std::size_t>();
  c.steps = s.integer("steps", c.steps);
  c.bins = s.integer("bins", c.bins);
  c.write_samples = s.boolean("write_samples", c.write_samples);
  s.finish();
  require(c.t > 0.0, s.key_path("t"), "must be positive");
  require(c.start.size() == st.N(), s.key_path("start"), "needs N entries");
  require(c.steps >= 1, s.key_path("steps"), "must be >= 1");
  require(c.bins >= 2, s.key_path("bins"), "must be >= 2");
  return c;
}

SolveConfig parse_solve(Section s, const StructureMatrix& st) {
  SolveConfig c;
  const int n = st.N();
  const int m0 = st.m0();
  {
    Section d = s.section("domain");
    c.domain.v_lower = to_vec(d.numbers("v_lower"), d.key_path("v_lower"));
    c.domain.v_upper = to_vec(d.numbers("v_upper"), d.key_path("v_upper"));
    c.domain.u_lower = to_vec(d.numbers("u_lower", {}), d.key_path("u_lower"));
    c.domain.u_upper = to_vec(d.numbers("u_upper", {}), d.key_path("u_upper"));
    c.domain.T = d.number("T", 1.0);
    d.finish();
    try {
      validate_domain(c.domain, st);
    } catch (const Error& e) {
      throw Error(e.code(), d.path() + ": " + e.message());
    }
  }
  if (s.has("coefficients")) {
    Section k = s.section("coefficients");
    if (k.has("a")) {
      const Json& a = k.raw("a");
      const std::string path = k.key_path("a");
      require(a.is_array() && static_cast<int>(a.size()) == m0, path, "expected an m0 x m0 array");
      for (int i = 0; i < m0; ++i) {
        require(a[i].is_array() && static_cast<int>(a[i].size()) == m0, path, "expected an m0 x m0 array");
        for (int j = 0; j < m0; ++j) {
          c.a.push_back(expression_at(a[i][j], path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]", n));
        }
      }
    }
    if (k.has("b")) c.b = expression_list(k, "b", n, static_cast<std::size_t>(m0));
    if (k.has("c")) c.c = expression_list(k, "c", n, static_cast<std::size_t>(m0));
    if (k.has("f")) c.f = expression_list(k, "f", n, static_cast<std::size_t>(m0));
    if (k.has("d")) c.d = expression(k, "d", n);
    if (k.has("g")) c.g = expression(k, "g", n);
    c.lambda = k.number("lambda", c.lambda);
    c.Lambda = k.number("Lambda", c.Lambda);
    k.finish();
    require(c.lambda > 0.0 && c.Lambda >= c.lambda, k.path(), "need 0 < lambda <= Lambda");
  }
  if (c.a.empty()) {
    for (int i = 0; i < m0; ++i) {
      for (int j = 0; j < m0; ++j) c.a.push_back(Expression::constant(i == j ? 1.0 : 0.0));
    }
  }
  if (s.has("manufactured")) c.manufactured = expression(s, "manufactured", n);
  if (s.has("boundary")) {
    Section b = s.section("boundary");
    if (b.has("gamma_P")) c.gamma_P = expression(b, "gamma_P", n);
    if (b.has("gamma_K_plus")) c.gamma_K_plus = expression(b, "gamma_K_plus", n);
    b.finish();
  }
  if (c.manufactured) {
    require(!c.g && c.f.empty(), s.key_path("manufactured"), "a manufactured solution defines g itself; drop g and f");
    if (!c.gamma_P) c.gamma_P = c.manufactured;
    if (!c.gamma_K_plus) c.gamma_K_plus = c.manufactured;
  }
  require(c.gamma_P.has_value(), s.key_path("boundary.gamma_P"), "missing required key");
  if (!c.gamma_K_plus) c.gamma_K_plus = c.gamma_P;
  {
    Section g = s.section("grid");
    c.grid.cells = g.integers("cells", {});
    c.grid.dt = g.number("dt", 0.0);
    c.grid.cfl_safety = g.number("cfl_safety", c.grid.cfl_safety);
    g.finish();
    require(c.grid.dt >= 0.0, g.key_path("dt"), "must be >= 0");
    require(c.grid.cfl_safety > 0.0 && c.grid.cfl_safety <= 1.0, g.key_path("cfl_safety"), "must lie in (0, 1]");
  }
  c.refinements = s.integers("refinements", {});
  c.dt_scale = s.number("dt_scale", 0.0);
  c.write_field = s.boolean("write_field", c.write_field);
  s.finish();
  require(c.refinements.empty() || c.refinements.size() >= 2, s.key_path("refinements"), "need at least two grids");
  for (int r : c.refinements) require(r >= 2, s.key_path("refinements"), "cell counts must be >= 2");
  require(c.refinements.empty() || c.manufactured.has_value(), s.key_path("refinements"),
          "a refinement study needs a manufactured solution");
  require(c.grid.cells.empty() || static_cast<int>(c.grid.cells.size()) == n, s.key_path("grid.cells"),
          "needs N entries");
  for (int k : c.grid.cells) require(k >= 2, s.key_path("grid.cells"), "cell counts must be >= 2");
  require(c.dt_scale >= 0.0, s.key_path("dt_scale"), "must be >= 0");
  return c;
}

DegiorgiConfig parse_degiorgi(Section s) {
  DegiorgiConfig c;
  const std::string src = s.string("source", "solve");
  if (src == "solve") {
    c.source = FieldSource::Solve;
  } else if (src == "constant") {
    c.source = FieldSource::Constant;
  } else if (src == "spike") {
    c.source = FieldSource::Spike;
  } else if (src == "file") {
    c.source = FieldSource::File;
  } else {
    schema_error(s.key_path("source"), "expected one of solve, constant, spike, file");
  }
  if (c.source != FieldSource::Solve) c.M = s.number("M");
  if (c.source == FieldSource::Spike) c.H = s.number("H");
  if (c.source == FieldSource::Constant || c.source == FieldSource::Spike) c.shape = s.integers("shape", c.shape);
  if (c.source == FieldSource::File) c.file = s.string("path");
  c.eps0 = s.number("eps0", c.eps0);
  c.theta = s.number("theta", c.theta);
  const std::string mode = s.string("mode", "l2_to_linf");
  if (mode == "l2_to_linf") {
    c.options.mode = IterationMode::L2ToLinf;
  } else if (mode == "data_bound") {
    c.options.mode = IterationMode::DataBound;
  } else {
    schema_error(s.key_path("mode"), "expected l2_to_linf or data_bound");
  }
  c.options.subintervals = s.integer("subintervals", c.options.subintervals);
  c.options.max_doublings = s.integer("max_doublings", c.options.max_doublings);
  c.options.chain_length = s.integer("chain_length", c.options.chain_length);
  c.options.sigma0 = s.number("sigma0", c.options.sigma0);
  s.finish();
  require(c.H > 0.0, s.key_path("H"), "must be positive");
  require(c.shape.size() >= 2, s.key_path("shape"), "needs N + 1 extents");
  for (int e : c.shape) require(e >= 1, s.key_path("shape"), "extents must be >= 1");
  require(c.options.subintervals >= 1, s.key_path("subintervals"), "must be >= 1");
  require(c.options.max_doublings >= 1, s.key_path("max_doublings"), "must be >= 1");
  return c;
}

MaxPrincipleConfig parse_maxprinciple(Section s) {
  MaxPrincipleConfig c;
  c.refinements = s.integers("refinements", {});
  c.tolerance = s.number("tolerance", c.tolerance);
  s.finish();
  for (int r : c.refinements) require(r >= 2, s.key_path("refinements"), "cell counts must be >= 2");
  require(c.tolerance >= 0.0, s.key_path("tolerance"), "must be >= 0");
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string detail = e.what();
    if (const auto k = detail.find(": ", detail.find("column")); k != std::string::npos) detail = detail.substr(k + 2);
    throw Error(ErrorCode::ParseError,
                "config line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + detail);
  }
  Section top(root, "config");
  ExperimentConfig c;
  c.source = root;
  c.structure = block_spec_from_json(top.raw("structure"), "config.structure");
  const StructureMatrix st = validate_structure(*c.structure);
  if (top.has("seed")) {
    const Json& seed = top.raw("seed");
    require(seed.is_number_unsigned(), "config.seed", "expected a non-negative integer");
    c.seed = seed.get<std::uint64_t>();
  }
  c.output_dir = top.string("output_dir", c.output_dir.string());
  if (top.has("exponents")) c.exponents = parse_exponents(top.section("exponents"));
  if (top.has("kernel-norms")) c.kernel_norms = parse_kernel_norms(top.section("kernel-norms"));
  if (top.has("embed")) c.embed = parse_embed(top.section("embed"), st);
  if (top.has("mc")) c.mc = parse_mc(top.section("mc"), st);
  if (top.has("solve")) c.solve = parse_solve(top.section("solve"), st);
  if (top.has("degiorgi")) c.degiorgi = parse_degiorgi(top.section("degiorgi"));
  if (top.has("maxprinciple")) c.maxprinciple = parse_maxprinciple(top.section("maxprinciple"));
  top.finish();
  if (c.degiorgi) {
    const auto& d = *c.degiorgi;
    if (d.source == FieldSource::Solve) {
      require(c.solve.has_value(), "config.degiorgi.source", "source solve needs a solve section");
    }
    if (d.source == FieldSource::Constant || d.source == FieldSource::Spike) {
      require(static_cast<int>(d.shape.size()) == st.N() + 1, "config.degiorgi.shape", "needs N + 1 extents");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

ScalarField field_of(const Expression& e) {
  auto p = std::make_shared<Expression>(e);
  return [p](const Vec& x, double t) { return (*p)(x, t); };
}

std::vector<ScalarField> fields_of(const std::vector<Expression>& v) {
  std::vector<ScalarField> out;
  for (const auto& e : v) out.push_back(field_of(e));
  return out;
}

}  // namespace

CoefficientSet make_coefficients(const SolveConfig& c, const StructureMatrix& s) {
  CoefficientSet k;
  k.a = fields_of(c.a);
  k.b = fields_of(c.b);
  k.c = fields_of(c.c);
  k.f = fields_of(c.f);
  if (c.d) k.d = field_of(*c.d);
  k.lambda = c.lambda;
  k.Lambda = c.Lambda;
  bool steady = true;
  for (const auto& e : c.a) steady = steady && !e.depends_on_time();
  for (const auto& e : c.b) steady = steady && !e.depends_on_time();
  k.steady_operator = steady;
  if (c.manufactured) {
    const ScalarField u = field_of(*c.manufactured);
    CoefficientSet op = k;
    k.g = [s, op, u](const Vec& x, double t) { return apply_kolmogorov(s, op, u, x, t); };
  } else if (c.g) {
    k.g = field_of(*c.g);
  }
  return k;
}

BoundaryData make_boundary(const SolveConfig& c) {
  BoundaryData d;
  d.gamma_P = field_of(*c.gamma_P);
  d.gamma_K_plus = field_of(*c.gamma_K_plus);
  return d;
}

}  // namespace kolmolab::cli
