#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>

#include "kolmolab/error.hpp"
#include "kolmolab/kernel.hpp"
#include "kolmolab/sde_oracle.hpp"

namespace kolmolab::cli {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

class Csv {
 public:
  Csv(const std::filesystem::path& path, std::initializer_list<const char*> header) : os_(path, std::ios::binary) {
    if (!os_) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    bool first = true;
    for (const char* h : header) {
      os_ << (first ? "" : ",") << h;
      first = false;
    }
    os_ << '\n';
  }

  Csv& cell(double v) { return put(format_number(v)); }
  Csv& cell(long long v) { return put(std::to_string(v)); }
  Csv& cell(int v) { return put(std::to_string(v)); }
  Csv& cell(std::size_t v) { return put(std::to_string(v)); }
  Csv& cell(bool v) { return put(v ? "true" : "false"); }
  void end() {
    os_ << '\n';
    first_ = true;
  }

 private:
  Csv& put(const std::string& s) {
    os_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  std::ofstream os_;
  bool first_ = true;
};

void write_report(const RunContext& run, const Json& report) {
  const auto path = run.out_dir / "report.json";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  os << report.dump(2) << '\n';
}

void say(const RunContext& run, const std::string& line) {
  if (run.log) *run.log << line << '\n';
}

Json header(const char* command, const ExperimentConfig& c) {
  return {{"command", command}, {"seed", c.seed}, {"config", c.source}};
}

template <class T>
const T& need(const std::optional<T>& section, const char* name) {
  if (!section) throw Error(ErrorCode::SchemaError, std::string("config: missing section '") + name + "'");
  return *section;
}

StructureMatrix structure(const ExperimentConfig& c) { return validate_structure(*c.structure); }

const FdGrid& single_grid(const SolveConfig& sc) {
  if (sc.grid.cells.empty()) {
    throw Error(ErrorCode::SchemaError, "config.solve.grid.cells: required unless a refinement list is given");
  }
  return sc.grid;
}

double max_spacing(const SolveResult& r) { return *std::max_element(r.h.begin(), r.h.end()); }

FdGrid uniform_grid(const SolveConfig& sc, int cells, int dims) {
  FdGrid g = sc.grid;
  g.cells.assign(static_cast<std::size_t>(dims), cells);
  if (sc.dt_scale > 0.0) {
    double h = 0.0;
    for (Eigen::Index a = 0; a < sc.domain.v_lower.size(); ++a) {
      h = std::max(h, (sc.domain.v_upper(a) - sc.domain.v_lower(a)) / cells);
    }
    g.dt = sc.dt_scale * h * h;
  }
  return g;
}

double manufactured_error(const SolveResult& r, const Expression& exact) {
  double err = 0.0;
  for (std::size_t k = 0; k < r.u.size(); ++k) {
    err = std::max(err, std::abs(r.u[k] - exact(r.u.node_position(k), r.u.node_time(k))));
  }
  return err;
}

}  // namespace

void cmd_exponents(const ExperimentConfig& c, const RunContext& run) {
  const ExponentsConfig ec = c.exponents.value_or(ExponentsConfig{});
  const int Q = structure(c).Q();
  Json report = header("exponents", c);
  report["table"] = to_json(exponent_table(Q));
  Json bundles = Json::array();
  for (double e : ec.eps0) bundles.push_back(to_json(solve_exponents(Q, e, ec.theta)));
  report["bundles"] = bundles;
  Json schedules = Json::array();
  Csv csv(run.out_dir / "bootstrap.csv", {"q_tilde", "l", "rho"});
  for (double qt : ec.q_tilde) {
    const auto sched = bootstrap_exponents(Q, qt);
    schedules.push_back(to_json(sched));
    for (std::size_t l = 0; l < sched.rho.size(); ++l) {
      csv.cell(qt).cell(l).cell(sched.rho[l]).end();
    }
  }
  report["bootstrap"] = schedules;
  write_report(run, report);
  say(run, "exponents: Q = " + std::to_string(Q));
}

void cmd_kernel_norms(const ExperimentConfig& c, const RunContext& run) {
  const KernelNormsConfig& kc = need(c.kernel_norms, "kernel-norms");
  const KernelContext ctx = kernel_context(structure(c));
  Json report = header("kernel-norms", c);
  report["p0"] = critical_exponent_K(ctx.s.Q());
  Json rows = Json::array();
  Csv csv(run.out_dir / "kernel_norms.csv", {"p", "closed_form", "quadrature", "rel_err", "divergent_flag"});
  Csv probe(run.out_dir / "divergence_probe.csv", {"p", "t_min", "quadrature"});
  QuadratureSpec qs;
  qs.tolerance = kc.tolerance;
  for (double p : kc.p) {
    const LpReport closed = lp_norm_closed_form(ctx, p, kc.T);
    const LpReport quad = lp_norm_quadrature(ctx, p, kc.T, qs);
    const double rel = std::isfinite(closed.value) && closed.value > 0.0
                           ? std::abs(quad.value - closed.value) / closed.value
                           : std::numeric_limits<double>::quiet_NaN();
    csv.cell(p).cell(closed.value).cell(quad.value).cell(rel).cell(closed.divergent).end();
    Json row = {{"closed_form", to_json(closed)}, {"quadrature", to_json(quad)}, {"rel_err", number_to_json(rel)}};
    if (closed.divergent) {
      Json probes = Json::array();
      for (double tm : kc.t_min_probe) {
        QuadratureSpec ps = qs;
        ps.t_min = tm;
        const LpReport r = lp_norm_quadrature(ctx, p, kc.T, ps);
        probe.cell(p).cell(tm).cell(r.value).end();
        probes.push_back(to_json(r));
      }
      row["probes"] = probes;
    }
    rows.push_back(row);
  }
  report["rows"] = rows;
  if (!kc.mass_times.empty()) {
    Csv mass(run.out_dir / "kernel_mass.csv", {"t", "mass"});
    Json masses = Json::array();
    for (double t : kc.mass_times) {
      const double m = kernel_mass(ctx, t, qs);
      mass.cell(t).cell(m).end();
      masses.push_back({{"t", t}, {"mass", m}});
    }
    report["mass"] = masses;
  }
  write_report(run, report);
  say(run, "kernel-norms: " + std::to_string(kc.p.size()) + " exponents");
}

void cmd_embed(const ExperimentConfig& c, const RunContext& run) {
  const EmbedConfig& ec = need(c.embed, "embed");
  const KernelContext ctx = kernel_context(structure(c));
  Json report = header("embed", c);
  Json results = Json::array();
  double worst = 0.0;
  bool all = true;
  Csv csv(run.out_dir / "embed.csv", {"field", "p", "q", "lhs", "bound", "ratio", "satisfied"});
  EmbeddingOptions opts = ec.options;
  if (ec.kind == EmbedKind::Grad) {
    const double pk = critical_exponent_gradK(ctx.s.Q()) - ec.eps1;
    if (!(ec.eps1 > 0.0 && pk >= 1.0)) throw Error(ErrorCode::ExponentOutOfRange, "eps1 must lie in (0, p1 - 1]");
    opts.sigma = lp_norm_grad_quadrature(ctx, ec.index, pk, ec.grid.t1).value;
    report["sigma1"] = opts.sigma;
  }
  for (int k = 0; k < ec.fields; ++k) {
    const auto seed = substream_seed(c.seed, static_cast<std::uint64_t>(2 * k));
    const GridField u = random_bump_field(ec.grid, ec.bumps, seed);
    double p = 0, lhs = 0, bound = 0, ratio = 0;
    bool ok = true;
    Json entry;
    switch (ec.kind) {
      case EmbedKind::L1:
      case EmbedKind::Grad: {
        const EmbeddingReport r = ec.kind == EmbedKind::L1 ? embedding_l1(u, ec.q, ec.eps0, ctx, opts)
                                                           : embedding_grad(u, ec.q, ec.eps1, ctx, ec.index, opts);
        p = r.p;
        lhs = r.lhs;
        bound = r.bound;
        ratio = r.bound > 0.0 ? r.lhs / r.bound : 0.0;
        ok = r.satisfied;
        entry = to_json(r);
        break;
      }
      case EmbedKind::L2: {
        const L2EmbeddingRatio r = embedding_l2_ratio(u, ec.q, ctx, opts);
        p = r.p;
        lhs = r.lhs;
        bound = r.norm_u;
        ratio = r.ratio;
        entry = {{"p", r.p}, {"q", r.q}, {"lhs", r.lhs}, {"norm_u", r.norm_u}, {"ratio", r.ratio}};
        break;
      }
      case EmbedKind::Young: {
        const GridField g = random_bump_field(ec.grid, ec.bumps, substream_seed(c.seed, static_cast<std::uint64_t>(2 * k + 1)));
        const YoungReport r = young_check(u, g, ctx.s, ec.young_p, ec.q, ec.young_r);
        p = r.r;
        lhs = r.lhs;
        bound = r.norm_f * r.norm_g;
        ratio = r.ratio;
        ok = r.ratio <= 1.0 + opts.tolerance;
        entry = {{"p", r.p}, {"q", r.q}, {"r", r.r}, {"lhs", r.lhs}, {"norm_f", r.norm_f}, {"norm_g", r.norm_g},
                 {"ratio", r.ratio}, {"satisfied", ok}};
        break;
      }
    }
    csv.cell(k).cell(p).cell(ec.q).cell(lhs).cell(bound).cell(ratio).cell(ok).end();
    results.push_back(entry);
    worst = std::max(worst, ratio);
    all = all && ok;
  }
  report["results"] = results;
  report["max_ratio"] = worst;
  report["all_satisfied"] = all;
  write_report(run, report);
  say(run, "embed: " + std::to_string(ec.fields) + " fields, max ratio " + format_number(worst));
}

void cmd_mc(const ExperimentConfig& c, const RunContext& run) {
  const McConfig& mc = need(c.mc, "mc");
  const KernelContext ctx = kernel_context(structure(c));
  const SampleBatch batch = mc.method == SampleMethod::Exact
                                ? exact_sample(ctx, mc.start, mc.t, mc.n, c.seed)
                                : euler_maruyama(ctx.s, mc.start, mc.t, mc.steps, mc.n, c.seed);
  const Moments emp = empirical_moments(batch);
  const Moments ref = transition_moments(ctx, mc.start, mc.t);
  const DensityReport dens = density_error(batch, ctx, mc.bins);
  Json report = header("mc", c);
  report["method"] = mc.method == SampleMethod::Exact ? "exact" : "euler";
  report["n"] = mc.n;
  report["empirical"] = to_json(emp);
  report["exact"] = to_json(ref);
  Json z = Json::array();
  Csv csv(run.out_dir / "moments.csv", {"coordinate", "mean", "exact_mean", "std_error", "variance", "exact_variance"});
  const double n = static_cast<double>(mc.n);
  for (Eigen::Index i = 0; i < emp.mean.size(); ++i) {
    const double se = std::sqrt(ref.cov(i, i) / n);
    z.push_back(se > 0.0 ? (emp.mean(i) - ref.mean(i)) / se : 0.0);
    csv.cell(static_cast<int>(i)).cell(emp.mean(i)).cell(ref.mean(i)).cell(se).cell(emp.cov(i, i)).cell(ref.cov(i, i)).end();
  }
  report["mean_z_scores"] = z;
  report["density"] = to_json(dens);
  if (mc.write_samples) {
    std::ofstream os(run.out_dir / "samples.csv", std::ios::binary);
    if (!os) throw Error(ErrorCode::IoError, "cannot write samples.csv");
    write_samples_csv(os, batch);
  }
  write_report(run, report);
  say(run, "mc: " + std::to_string(mc.n) + " samples, KS " + (dens.ks_pass ? "pass" : "fail"));
}

void cmd_solve(const ExperimentConfig& c, const RunContext& run) {
  const SolveConfig& sc = need(c.solve, "solve");
  const StructureMatrix s = structure(c);
  const CoefficientSet coeffs = make_coefficients(sc, s);
  const BoundaryData data = make_boundary(sc);
  Json report = header("solve", c);
  if (!sc.refinements.empty()) {
    Csv csv(run.out_dir / "convergence.csv", {"cells", "h", "dt", "steps", "linf_error"});
    std::vector<double> hs, errs;
    Json rows = Json::array();
    for (int cells : sc.refinements) {
      const SolveResult r = solve(sc.domain, s, coeffs, data, uniform_grid(sc, cells, s.N()));
      const double err = manufactured_error(r, *sc.manufactured);
      const double h = max_spacing(r);
      csv.cell(cells).cell(h).cell(r.dt).cell(r.steps).cell(err).end();
      rows.push_back({{"cells", cells}, {"h", h}, {"dt", r.dt}, {"steps", r.steps}, {"linf_error", err}});
      hs.push_back(h);
      errs.push_back(err);
    }
    const OrderEstimate o = refinement_order(hs, errs);
    report["refinements"] = rows;
    report["order"] = o.order;
    report["exact"] = o.exact;
    write_report(run, report);
    say(run, "solve: measured order " + format_number(o.order));
    return;
  }
  const SolveResult r = solve(sc.domain, s, coeffs, data, single_grid(sc));
  report["M"] = r.M;
  report["dt"] = r.dt;
  report["steps"] = r.steps;
  report["h"] = r.h;
  report["max_value"] = max_value(r.u);
  report["sup_norm"] = sup_norm(r.u);
  report["grid"] = to_json(r.u.spec());
  if (sc.manufactured) report["linf_error"] = manufactured_error(r, *sc.manufactured);
  if (sc.write_field) save_grid_field(run.out_dir / "solution.kgrid", r.u);
  write_report(run, report);
  say(run, "solve: " + std::to_string(r.steps) + " steps, max " + format_number(max_value(r.u)));
}

void cmd_degiorgi(const ExperimentConfig& c, const RunContext& run) {
  const DegiorgiConfig& dc = need(c.degiorgi, "degiorgi");
  const StructureMatrix s = structure(c);
  LevelIterationOptions opts = dc.options;
  GridField u;
  double M = dc.M;
  switch (dc.source) {
    case FieldSource::Solve: {
      const SolveConfig& sc = *c.solve;
      const SolveResult r = solve(sc.domain, s, make_coefficients(sc, s), make_boundary(sc), single_grid(sc));
      u = r.u;
      M = r.M;
      opts.boundary_nodes = data_entries(r);
      break;
    }
    case FieldSource::Constant:
    case FieldSource::Spike: {
      const int n = s.N();
      GridSpec spec{Vec::Zero(n), Vec::Ones(n), 0.0, 1.0, dc.shape};
      validate_grid_spec(spec);
      u = GridField(spec);
      for (auto& v : u.values()) v = M;
      if (dc.source == FieldSource::Spike) {
        std::vector<int> centre(dc.shape.size());
        for (std::size_t a = 0; a < centre.size(); ++a) centre[a] = dc.shape[a] / 2;
        u[u.flat_index(centre)] += dc.H;
      }
      break;
    }
    case FieldSource::File:
      u = load_grid_field(dc.file);
      break;
  }
  const ExponentBundle bundle = solve_exponents(s.Q(), dc.eps0, dc.theta);
  const LevelIterationResult res = run_level_iteration(u, M, bundle, opts);
  Json report = header("degiorgi", c);
  report["bundle"] = to_json(bundle);
  report["result"] = to_json(res);
  report["certified"] = res.bound >= res.measured_sup;
  Csv csv(run.out_dir / "decay.csv", {"interval", "n", "k_n", "Y_n", "measure"});
  for (std::size_t i = 0; i < res.intervals.size(); ++i) {
    const auto& st = res.intervals[i];
    for (std::size_t n = 0; n < st.energies.size(); ++n) {
      csv.cell(i).cell(n);
      csv.cell(n < st.schedule.size() ? st.schedule[n] : std::numeric_limits<double>::quiet_NaN());
      csv.cell(st.energies[n]);
      csv.cell(n < st.measures.size() ? st.measures[n] : std::numeric_limits<double>::quiet_NaN());
      csv.end();
    }
  }
  write_report(run, report);
  say(run, "degiorgi: certified bound " + format_number(res.bound) + ", measured sup " + format_number(res.measured_sup));
}

void cmd_maxprinciple(const ExperimentConfig& c, const RunContext& run) {
  const SolveConfig& sc = need(c.solve, "solve");
  const MaxPrincipleConfig mc = c.maxprinciple.value_or(MaxPrincipleConfig{});
  const StructureMatrix s = structure(c);
  const CoefficientSet coeffs = make_coefficients(sc, s);
  const BoundaryData data = make_boundary(sc);
  Json report = header("maxprinciple", c);
  Csv csv(run.out_dir / "maxprinciple.csv", {"cells", "h", "dt", "sup_interior", "sup_K_minus", "M", "margin", "excess"});
  std::vector<double> hs, excess;
  Json rows = Json::array();
  auto one = [&](const FdGrid& grid, int cells) {
    const SolveResult r = solve(sc.domain, s, coeffs, data, grid);
    MaxPrincipleReport mp;
    try {
      mp = check_max_principle(r, coeffs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HypothesisViolation) throw;
      report["hypothesis_violation"] = true;
      report["message"] = e.what();
      write_report(run, report);
      throw;
    }
    const double h = max_spacing(r);
    const double margin = mp.M - std::max(mp.sup_interior, mp.has_K_minus ? mp.sup_K_minus : mp.sup_interior);
    csv.cell(cells).cell(h).cell(r.dt).cell(mp.sup_interior).cell(mp.sup_K_minus).cell(mp.M).cell(margin).cell(mp.excess).end();
    Json row = to_json(mp);
    row["cells"] = cells;
    row["h"] = h;
    row["dt"] = r.dt;
    row["margin"] = margin;
    rows.push_back(row);
    hs.push_back(h);
    excess.push_back(mp.excess);
  };
  if (mc.refinements.empty()) {
    one(single_grid(sc), sc.grid.cells.front());
  } else {
    for (int cells : mc.refinements) one(uniform_grid(sc, cells, s.N()), cells);
  }
  report["hypothesis_violation"] = false;
  report["runs"] = rows;
  if (hs.size() >= 2) {
    const OrderEstimate o = refinement_order(hs, excess, mc.tolerance);
    report["excess_order"] = o.order;
    report["excess_exact"] = o.exact;
  }
  write_report(run, report);
  say(run, "maxprinciple: max excess " + format_number(*std::max_element(excess.begin(), excess.end())));
}

}  // namespace kolmolab::cli
