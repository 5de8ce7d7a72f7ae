// thinbeam: command line front end. Every subcommand reads a JSON config,
// prints a short summary on stdout and writes its artifacts under --out.
#include <Eigen/Core>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "thinbeam/acceptance.hpp"
#include "thinbeam/beam.hpp"
#include "thinbeam/compactness.hpp"
#include "thinbeam/error.hpp"
#include "thinbeam/io.hpp"
#include "thinbeam/phasefield.hpp"
#include "thinbeam/recovery.hpp"
#include "thinbeam/tensor.hpp"
#include "thinbeam/thin_film.hpp"
#include "thinbeam/truss.hpp"

namespace fs = std::filesystem;
using namespace thinbeam;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Context {
  std::string command;
  std::string config_path;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed_flag;
  int threads = 0;
  std::uint64_t seed = 0;
  std::mt19937_64 rng;
};

std::string num(double v) { return format_double(v); }

std::string fmt16(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16g", v);
  return buf;
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json meta_json(const Context& ctx) {
  return {{"command", ctx.command}, {"config", ctx.config_path}, {"seed", ctx.seed},
          {"threads", ctx.threads}, {"version", kVersion}};
}

// Directory outputs: --out names a directory, created on demand.
std::string out_file(const Context& ctx, const std::string& name) {
  fs::path dir(ctx.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create output directory " + ctx.out + ": " + ec.message());
  return (dir / name).string();
}

void write_json(const std::string& path, Json j) { atomic_write(path, j.dump(2) + "\n"); }

void write_meta(const Context& ctx) {
  if (!ctx.out.empty()) write_json(out_file(ctx, "meta.json"), meta_json(ctx));
}

// Key/value summary in the chosen --format.
void print_summary(const Context& ctx, const std::vector<std::pair<std::string, std::string>>& rows) {
  if (ctx.format == "json") {
    Json j = Json::object();
    for (const auto& [k, v] : rows) {
      char* end = nullptr;
      const double d = std::strtod(v.c_str(), &end);
      if (end && *end == '\0' && !v.empty())
        j[k] = d;
      else
        j[k] = v;
    }
    j["meta"] = meta_json(ctx);
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    for (const auto& [k, v] : rows) std::printf("%s = %s\n", k.c_str(), v.c_str());
  }
}

Eigen::Vector2d vec2(ConfigNode& node, const std::string& key, const Eigen::Vector2d& fallback) {
  if (!node.has(key)) return fallback;
  const std::vector<double> v = node.numbers(key);
  if (v.size() != 2) fail(ErrorKind::ConfigError, node.path() + "." + key + ": expected two numbers");
  return {v[0], v[1]};
}

std::string resolve_path(const Context& ctx, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !ctx.config_path.empty()) path = fs::path(ctx.config_path).parent_path() / path;
  return path.string();
}

struct FieldSpec {
  DisplacementField field;
  CrackSet crack;
  std::string preset;
};

// Field presets shared by eval-eh, solve-2d and compactness. The recovery
// preset needs the tensor.
FieldSpec parse_field(ConfigNode node, const Context& ctx, const ElasticTensor* C) {
  FieldSpec out;
  out.preset = node.string("preset");
  const std::string& p = out.preset;
  if (p == "triangle") {
    const double h = require_positive("field.h", node.number("h"));
    FieldWithCrack fc = triangle_counterexample(h, node.number("L", 1.0), require_at_least("field.n", node.integer("n", 512), 1));
    out.field = std::move(fc.field);
    out.crack = std::move(fc.crack);
  } else if (p == "ball") {
    const double h = require_positive("field.h", node.number("h"));
    FieldWithCrack fc = escaping_ball_example(h, node.number("L", 1.0), require_at_least("field.n", node.integer("n", 512), 1),
                                              require_at_least("field.segments", node.integer("segments", 10000), 3));
    out.field = std::move(fc.field);
    out.crack = std::move(fc.crack);
  } else if (p == "rigid") {
    const int nx = require_at_least("field.nx", node.integer("nx"), 1);
    const int ny = require_at_least("field.ny", node.integer("ny"), 1);
    const double L = require_positive("field.L", node.number("L", 1.0));
    const double h = require_positive("field.h", node.number("h"));
    const double a = node.number("a", 0.0);
    Eigen::Matrix2d A;
    A << 0.0, a, -a, 0.0;
    out.field = rigid_field(nx, ny, L, h, A, vec2(node, "b", Eigen::Vector2d::Zero()));
  } else if (p == "recovery") {
    if (!C) fail(ErrorKind::ConfigError, "field preset recovery needs a tensor");
    const LimitConfig y = parse_limit(node.child("limit"));
    const double h = require_positive("field.h", node.number("h"));
    const double eta = require_positive("field.eta", node.number("eta"));
    const int nx = require_at_least("field.nx", node.integer("nx"), 1);
    const int ny = require_at_least("field.ny", node.integer("ny"), 1);
    RecoveryField r = build_recovery(y, h, eta, *C, nx, ny, node.boolean("correction", true));
    out.field = std::move(r.field);
    out.crack = std::move(r.crack);
  } else if (p == "split_strip") {
    const int nx = require_at_least("field.nx", node.integer("nx"), 1);
    const int ny = require_at_least("field.ny", node.integer("ny"), 1);
    const double L = require_positive("field.L", node.number("L", 1.0));
    const double h = require_positive("field.h", node.number("h"));
    out.field = split_strip_target(nx, ny, L, h, node.number("split", 0.5 * L), vec2(node, "left", Eigen::Vector2d::Zero()),
                                   vec2(node, "right", Eigen::Vector2d(1.0, 0.0)));
  } else if (p == "grid") {
    const std::string path = resolve_path(ctx, node.string("path"));
    out.field = read_grid(path, node.number("L", 0.0), node.number("h", 0.0));
  } else {
    fail(ErrorKind::ConfigError,
                "field.preset: unknown preset '" + p + "' (triangle, ball, rigid, recovery, split_strip, grid)");
  }
  node.finish();
  return out;
}

// Optional top-level "crack" is added to whatever the preset brings.
void add_crack(ConfigNode& cfg, FieldSpec& spec) {
  if (cfg.has("crack")) spec.crack.append(parse_crack(cfg.raw("crack"), "crack"));
}

CutCellPolicy parse_policy(const std::string& s) {
  if (s == "one_sided") return CutCellPolicy::OneSided;
  if (s == "exclude") return CutCellPolicy::Exclude;
  fail(ErrorKind::ConfigError, "policy: expected one_sided or exclude, got '" + s + "'");
}

Json crack_json(const CrackSet& c) {
  Json a = Json::array();
  for (const CrackSegment& s : c.segments) a.push_back({{s.a.x(), s.a.y()}, {s.b.x(), s.b.y()}});
  return a;
}

// --- subcommands -------------------------------------------------------------

int cmd_bending_constant(ConfigNode& cfg, Context& ctx) {
  const ElasticTensor C = parse_tensor(cfg.child("tensor"));
  cfg.finish();
  const BendingResult r = bending_constant(C);
  print_summary(ctx, {{"a", fmt16(r.a)}, {"b_star", fmt16(r.b_star)}, {"c_star", fmt16(r.c_star)},
                      {"residual", fmt16(r.residual)}});
  if (!ctx.out.empty())
    write_json(out_file(ctx, "bending.json"),
               {{"a", r.a}, {"b_star", r.b_star}, {"c_star", r.c_star}, {"residual", r.residual}, {"meta", meta_json(ctx)}});
  return 0;
}

std::vector<double> point(const Json& j, const std::string& where) {
  if (!j.is_array() || (j.size() != 2 && j.size() != 3))
    fail(ErrorKind::ConfigError, where + ": expected a point with 2 or 3 coordinates");
  std::vector<double> v;
  for (const Json& x : j) {
    if (!x.is_number()) fail(ErrorKind::ConfigError, where + ": coordinates must be numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

int cmd_truss_det(ConfigNode& cfg, Context& ctx) {
  const bool has_pairs = cfg.has("pairs"), has_lines = cfg.has("lines");
  if (has_pairs == has_lines) fail(ErrorKind::ConfigError, "give exactly one of pairs or lines");
  std::vector<std::pair<std::string, std::string>> rows;
  Json out;
  if (has_pairs) {
    const Json& arr = cfg.raw("pairs");
    if (!arr.is_array()) fail(ErrorKind::ConfigError, "pairs: expected an array");
    std::vector<SegmentPair> pairs;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = "pairs[" + std::to_string(i) + "]";
      if (!arr[i].is_array() || arr[i].size() != 2) fail(ErrorKind::ConfigError, w + ": expected [p, q]");
      const std::vector<double> p = point(arr[i][0], w), q = point(arr[i][1], w);
      if (p.size() != q.size()) fail(ErrorKind::ConfigError, w + ": p and q differ in dimension");
      pairs.push_back({to_eigen(p), to_eigen(q)});
    }
    cfg.finish();
    const double det = truss_det(pairs);
    rows.push_back({"det", num(det)});
    out["det"] = det;
  } else {
    const Json& arr = cfg.raw("lines");
    if (!arr.is_array()) fail(ErrorKind::ConfigError, "lines: expected an array");
    std::vector<OrientedLine> lines;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      ConfigNode ln(arr[i], "lines[" + std::to_string(i) + "]");
      const std::vector<double> p = point(ln.raw("point"), ln.path() + ".point");
      const std::vector<double> d = point(ln.raw("dir"), ln.path() + ".dir");
      ln.finish();
      if (p.size() != d.size()) fail(ErrorKind::ConfigError, ln.path() + ": point and dir differ in dimension");
      Eigen::VectorXd dir = to_eigen(d);
      if (dir.norm() == 0.0) fail(ErrorKind::ConfigError, ln.path() + ".dir: zero direction");
      lines.push_back({to_eigen(p), dir.normalized()});
    }
    cfg.finish();
    const double f = line_function_f(lines);
    rows.push_back({"f", num(f)});
    out["f"] = f;
    // Closed forms where their preconditions hold; skipped silently otherwise.
    try {
      double cf = 0.0;
      if (lines.size() == 3 && lines[0].point.size() == 2)
        cf = f2d_closed_form(lines[0], lines[1], lines[2]);
      else if (lines.size() == 6 && lines[0].point.size() == 3)
        cf = f3d_factorization(lines);
      else
        throw Error(ErrorKind::WrongCount, "");
      rows.push_back({"closed_form_abs", num(cf)});
      out["closed_form_abs"] = cf;
    } catch (const Error& e) {
      spdlog::info("closed form not applicable: {}", e.what());
    }
  }
  print_summary(ctx, rows);
  if (!ctx.out.empty()) {
    out["meta"] = meta_json(ctx);
    write_json(out_file(ctx, "truss.json"), out);
  }
  return 0;
}

int cmd_eval_eh(ConfigNode& cfg, Context& ctx) {
  const ElasticTensor C = parse_tensor(cfg.child("tensor"));
  const double beta = require_nonnegative("beta", cfg.number("beta", 1.0));
  const CutCellPolicy policy = parse_policy(cfg.string("policy", "one_sided"));
  FieldSpec spec = parse_field(cfg.child("field"), ctx, &C);
  add_crack(cfg, spec);
  cfg.finish();
  const EnergyBreakdown e = evaluate_Eh(spec.field, spec.crack, C, beta, policy);
  const double h = spec.field.h();
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"elastic", num(e.elastic)},
      {"jump", num(e.jump)},
      {"total", num(e.total)},
      {"unrescaled_elastic", num(unrescaled_elastic(e, h))},
      {"crack_measure", num(spec.crack.anisotropic_measure(h))},
      {"unrescaled_crack_length", num(spec.crack.unrescaled_length(h))}};
  print_summary(ctx, rows);
  if (!ctx.out.empty()) {
    Json j = {{"elastic", e.elastic},
              {"jump", e.jump},
              {"total", e.total},
              {"unrescaled_elastic", unrescaled_elastic(e, h)},
              {"crack_measure", spec.crack.anisotropic_measure(h)},
              {"preset", spec.preset},
              {"meta", meta_json(ctx)}};
    write_json(out_file(ctx, "eval.json"), j);
  }
  return 0;
}

int cmd_solve_2d(ConfigNode& cfg, Context& ctx) {
  if (ctx.out.empty()) fail(ErrorKind::ConfigError, "solve-2d needs --out <dir>");
  PhaseFieldProblem pb;
  pb.C = parse_tensor(cfg.child("tensor"));
  pb.beta = require_positive("beta", cfg.number("beta", 1.0));
  pb.fidelity = require_nonnegative("fidelity", cfg.number("fidelity", 1.0));
  FieldSpec target = parse_field(cfg.child("target"), ctx, &pb.C);
  pb.g = std::move(target.field);
  pb.epsilon = cfg.has("epsilon") ? require_positive("epsilon", cfg.number("epsilon")) : default_epsilon(pb.g);
  pb.k_eps = require_nonnegative("k_eps", cfg.number("k_eps", 1e-6));
  pb.max_iter = require_at_least("max_iter", cfg.integer("max_iter", 500), 1);
  pb.tol = require_positive("tol", cfg.number("tol", 1e-8));
  pb.random_init = cfg.boolean("random_init", false);
  const double threshold = cfg.number("threshold", 0.5);
  cfg.finish();
  pb.seed = ctx.rng();

  spdlog::info("solve-2d: {}x{} cells, epsilon {}", pb.g.nx(), pb.g.ny(), pb.epsilon);
  const PhaseFieldResult res = minimize_alternating(pb);
  const CrackSet crack = extract_crack(res.damage, pb.g.box(), threshold);

  atomic_write(out_file(ctx, "y.tbgrid"), grid_bytes(res.y));
  std::vector<double> phi(res.damage.phi.data(), res.damage.phi.data() + res.damage.phi.size());
  atomic_write(out_file(ctx, "phi.tbgrid"), grid_bytes(phi, res.damage.nx, res.damage.ny, pb.g.L(), pb.g.h(), pb.g.box()));
  std::string trace = "iteration,energy\n";
  for (std::size_t k = 0; k < res.report.energy_trace.size(); ++k)
    trace += std::to_string(k) + "," + num(res.report.energy_trace[k]) + "\n";
  atomic_write(out_file(ctx, "trace.csv"), trace);
  write_json(out_file(ctx, "crack.json"), {{"threshold", threshold},
                                           {"segments", crack_json(crack)},
                                           {"length", crack.length()},
                                           {"anisotropic_measure", crack.anisotropic_measure(pb.g.h())}});
  const Json summary = {{"iterations", res.report.iterations},
                        {"converged", res.report.converged},
                        {"energy",
                         {{"bulk", res.energy.bulk},
                          {"surface", res.energy.surface},
                          {"fidelity", res.energy.fidelity},
                          {"total", res.energy.total}}},
                        {"epsilon", pb.epsilon},
                        {"init_seed", pb.seed},
                        {"meta", meta_json(ctx)}};
  write_json(out_file(ctx, "summary.json"), summary);
  print_summary(ctx, {{"iterations", std::to_string(res.report.iterations)},
                      {"converged", res.report.converged ? "true" : "false"},
                      {"energy", num(res.energy.total)},
                      {"crack_segments", std::to_string(crack.segments.size())}});
  if (!res.report.converged) spdlog::warn("alternating minimization stopped at max_iter without converging");
  return 0;
}

Eigen::VectorXd numbers_vec(ConfigNode& cfg, const std::string& key) {
  const std::vector<double> v = cfg.numbers(key);
  return to_eigen(v);
}

int cmd_solve_beam(ConfigNode& cfg, Context& ctx) {
  BeamProblem pb;
  if (cfg.has("tensor") == cfg.has("a")) fail(ErrorKind::ConfigError, "give exactly one of tensor or a");
  pb.a = cfg.has("a") ? require_positive("a", cfg.number("a")) : bending_constant(parse_tensor(cfg.child("tensor"))).a;
  pb.beta = require_nonnegative("beta", cfg.number("beta", 1.0));
  pb.L = require_positive("L", cfg.number("L", 1.0));
  pb.fidelity_weight = require_nonnegative("fidelity_weight", cfg.number("fidelity_weight", 1.0));
  pb.prefactor = require_positive("prefactor", cfg.number("prefactor", 1.0 / 24.0));
  pb.g_u = numbers_vec(cfg, "g_u");
  pb.g_v = numbers_vec(cfg, "g_v");
  const int max_jumps = require_at_least("max_jumps", cfg.integer("max_jumps", 4), 0);
  cfg.finish();
  if (pb.g_u.size() != pb.g_v.size()) fail(ErrorKind::ShapeMismatch, "g_u and g_v differ in length");

  const BeamState s = solve_beam(pb, max_jumps);
  const BeamEnergy e = beam_energy(s, pb);
  const double dx = pb.dx();
  auto xs = [&](const std::vector<int>& ks) {
    Json a = Json::array();
    for (int k : ks) a.push_back((k + 0.5) * dx);
    return a;
  };
  std::string csv = "x,u,v\n";
  for (int i = 0; i < pb.n(); ++i) csv += num(i * dx) + "," + num(s.u(i)) + "," + num(s.v(i)) + "\n";
  const Json side = {{"jumps", {{"u", xs(s.J_u)}, {"v", xs(s.J_v)}, {"vprime", xs(s.J_vprime)}, {"all", xs(s.jump_points())}}},
                     {"energy", {{"elastic", e.elastic}, {"jump", e.jump}, {"fidelity", e.fidelity}, {"total", e.total}}},
                     {"a", pb.a},
                     {"meta", meta_json(ctx)}};
  if (!ctx.out.empty()) {
    atomic_write(out_file(ctx, "beam.csv"), csv);
    write_json(out_file(ctx, "beam.json"), side);
  }
  print_summary(ctx, {{"jumps", std::to_string(s.jump_points().size())},
                      {"elastic", num(e.elastic)},
                      {"jump", num(e.jump)},
                      {"fidelity", num(e.fidelity)},
                      {"total", num(e.total)}});
  return 0;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "h,eta,energy,elastic,jump,limit,gap,relative_gap,sup_error\n";
  for (const SweepRow& r : rows)
    s += num(r.h) + "," + num(r.eta) + "," + num(r.energy) + "," + num(r.elastic) + "," + num(r.jump) + "," +
         num(r.limit) + "," + num(r.gap) + "," + num(r.relative_gap) + "," + num(r.sup_error) + "\n";
  return s;
}

Json sweep_json(const std::vector<SweepRow>& rows) {
  Json a = Json::array();
  for (const SweepRow& r : rows)
    a.push_back({{"h", r.h},
                 {"eta", r.eta},
                 {"energy", r.energy},
                 {"elastic", r.elastic},
                 {"jump", r.jump},
                 {"limit", r.limit},
                 {"gap", r.gap},
                 {"relative_gap", r.relative_gap},
                 {"sup_error", r.sup_error}});
  return a;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int cmd_gamma_sweep(ConfigNode& cfg, Context& ctx) {
  const ElasticTensor C = parse_tensor(cfg.child("tensor"));
  const LimitConfig y = parse_limit(cfg.child("limit"));
  const double beta = require_nonnegative("beta", cfg.number("beta", 1.0));
  const std::vector<double> hs = cfg.numbers("h_list");
  const std::vector<double> etas = cfg.numbers("eta_list");
  const int nx = require_at_least("nx", cfg.integer("nx"), 1);
  const int ny = require_at_least("ny", cfg.integer("ny"), 1);
  cfg.finish();
  for (double h : hs) require_positive("h_list", h);
  for (double e : etas) require_positive("eta_list", e);

  const std::vector<SweepRow> rows = gamma_sweep(y, hs, etas, C, beta, nx, ny);
  const std::string csv = sweep_csv(rows);
  const Json meta = {{"limit_energy", rows.empty() ? 0.0 : rows.front().limit}, {"meta", meta_json(ctx)}};
  if (ctx.out.empty()) {
    if (ctx.format == "json")
      std::printf("%s\n", Json{{"rows", sweep_json(rows)}, {"meta", meta_json(ctx)}}.dump(2).c_str());
    else
      std::fputs(csv.c_str(), stdout);
    return 0;
  }
  // A path ending in .csv or .json is the output file; anything else is a directory.
  if (ends_with(ctx.out, ".csv") || ends_with(ctx.out, ".json")) {
    const fs::path parent = fs::path(ctx.out).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    if (ends_with(ctx.out, ".csv"))
      atomic_write(ctx.out, csv);
    else
      write_json(ctx.out, {{"rows", sweep_json(rows)}, {"meta", meta_json(ctx)}});
    write_json(ctx.out + ".meta.json", meta);
  } else {
    if (ctx.format == "json")
      write_json(out_file(ctx, "sweep.json"), {{"rows", sweep_json(rows)}, {"meta", meta_json(ctx)}});
    else
      atomic_write(out_file(ctx, "sweep.csv"), csv);
    write_json(out_file(ctx, "meta.json"), meta);
  }
  std::printf("%zu rows\n", rows.size());
  return 0;
}

Json motion_json(const Eigen::Vector3d& m) { return {m(0), m(1), m(2)}; }

int cmd_compactness(ConfigNode& cfg, Context& ctx) {
  const double delta = require_positive("delta", cfg.number("delta"));
  const double eta = require_positive("eta", cfg.number("eta"));
  CompactnessOptions opt;
  if (cfg.has("options")) {
    ConfigNode o = cfg.child("options");
    opt.delta0 = require_positive("options.delta0", o.number("delta0", opt.delta0));
    opt.korn_constant = require_positive("options.korn_constant", o.number("korn_constant", opt.korn_constant));
    opt.bridge_constant = require_positive("options.bridge_constant", o.number("bridge_constant", opt.bridge_constant));
    o.finish();
  }
  std::optional<ElasticTensor> C;
  if (cfg.has("tensor")) C = parse_tensor(cfg.child("tensor"));
  FieldSpec spec = parse_field(cfg.child("field"), ctx, C ? &*C : nullptr);
  add_crack(cfg, spec);
  cfg.finish();

  const CompactnessResult res = compactness_extract(spec.field, spec.crack, delta, eta, opt);
  const GoodBadPartition& P = res.partition;
  int bad = 0;
  Json rects = Json::array();
  for (const Rectangle& r : P.rects) {
    bad += r.good ? 0 : 1;
    rects.push_back({{"z", r.z},
                     {"good", r.good},
                     {"crack_length", r.crack_length},
                     {"omega_cells", r.omega.size()},
                     {"omega_perimeter", r.omega_perimeter},
                     {"korn_budget_ok", r.korn_budget_ok},
                     {"empty", r.empty},
                     {"fitted", r.fitted},
                     {"motion", motion_json(r.motion)},
                     {"residual", r.residual}});
  }
  Json bridges = Json::array();
  for (const BridgeResult& b : res.bridges) {
    Json bars = Json::array();
    for (const SegmentPair& s : b.bars) bars.push_back({vec_json(s.p), vec_json(s.q)});
    bridges.push_back({{"first", b.first},
                       {"last", b.last},
                       {"left", b.left},
                       {"right", b.right},
                       {"verdict", to_string(b.verdict)},
                       {"hull_crack", b.hull_crack},
                       {"bars", bars},
                       {"truss_det", b.truss_det},
                       {"delta_fit", motion_json(b.delta_fit)},
                       {"delta_truss", motion_json(b.delta_truss)},
                       {"hull_energy", b.hull_energy},
                       {"bound", b.bound},
                       {"certified", b.certified}});
  }
  const PiecewiseRigidFields& F = res.fields;
  std::string steps = "x_from,x_to,a,b1,b2\n";
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), F.jumps.begin(), F.jumps.end());
  edges.push_back(F.L);
  for (std::size_t k = 0; k < F.averages.size() && k + 1 < edges.size(); ++k)
    steps += num(edges[k]) + "," + num(edges[k + 1]) + "," + num(F.averages[k](0)) + "," + num(F.averages[k](1)) + "," +
             num(F.averages[k](2)) + "\n";

  if (!ctx.out.empty()) {
    write_json(out_file(ctx, "partition.json"), {{"h", P.h}, {"delta", P.delta}, {"rectangles", rects}, {"meta", meta_json(ctx)}});
    atomic_write(out_file(ctx, "steps.csv"), steps);
    write_json(out_file(ctx, "certificates.json"), {{"bridges", bridges},
                                                    {"jumps", F.jumps},
                                                    {"m_cert", F.m_cert},
                                                    {"omega_area", res.omega_area},
                                                    {"omega_perimeter", res.omega_perimeter},
                                                    {"residual_max_off_omega", res.residual_max_off_omega},
                                                    {"meta", meta_json(ctx)}});
    atomic_write(out_file(ctx, "residual.tbgrid"), grid_bytes(res.residual));
  }
  int certified = 0;
  for (const BridgeResult& b : res.bridges) certified += b.certified ? 1 : 0;
  print_summary(ctx, {{"rectangles", std::to_string(P.rects.size())},
                      {"bad", std::to_string(bad)},
                      {"bridges", std::to_string(res.bridges.size())},
                      {"certified", std::to_string(certified)},
                      {"jumps", std::to_string(F.jump_count())},
                      {"m_cert", std::to_string(F.m_cert)},
                      {"omega_area", num(res.omega_area)},
                      {"omega_perimeter", num(res.omega_perimeter)}});
  return 0;
}

int cmd_paper_checks(ConfigNode* cfg, Context& ctx) {
  std::vector<int> only;
  if (cfg) {
    if (cfg->has("criteria"))
      for (double v : cfg->numbers("criteria")) only.push_back(static_cast<int>(v));
    cfg->finish();
  }
  bool all = true;
  Json arr = Json::array();
  for (const CriterionResult& r : run_acceptance(ctx.seed, only)) {
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
    all = all && r.passed();
    arr.push_back({{"id", r.id},
                   {"name", r.name},
                   {"passed", r.passed()},
                   {"check", r.check},
                   {"seconds", r.seconds},
                   {"budget", r.budget},
                   {"detail", r.detail}});
  }
  if (!ctx.out.empty()) write_json(out_file(ctx, "paper_checks.json"), {{"criteria", arr}, {"meta", meta_json(ctx)}});
  return all ? 0 : 1;
}

void emit_error(const std::string& kind, const std::string& message, int code) {
  const Json j = {{"error", kind}, {"message", message}, {"exit", code}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("thinbeam");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("THINBEAM_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"thinbeam: thin-beam fracture experiments"};
  app.require_subcommand(1);
  Context ctx;
  std::uint64_t seed_value = 0;
  app.add_option("--config", ctx.config_path, "JSON config file");
  app.add_option("--out", ctx.out, "output directory (gamma-sweep also accepts a .csv/.json file)");
  auto* seed_opt = app.add_option("--seed", seed_value, "overrides the config seed");
  app.add_option("--threads", ctx.threads, "Eigen threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  app.add_option("--format", ctx.format, "summary and table format")->check(CLI::IsMember({"csv", "json"}));
  app.set_version_flag("--version", kVersion);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"bending-constant", "effective bending constant a of a tensor"},
      {"truss-det", "truss determinant of bars or line function of lines"},
      {"eval-eh", "rescaled energy E_h of a field with a crack"},
      {"solve-2d", "phase-field minimization on the strip"},
      {"solve-beam", "one-dimensional beam functional with jumps"},
      {"gamma-sweep", "energy of recovery fields against the limit energy"},
      {"compactness", "good/bad partition, bridges and piecewise rigid fields"},
      {"paper-checks", "run the acceptance suite"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    emit_error("ConfigError", e.what(), 2);
    return 2;
  }
  ctx.command = app.get_subcommands().front()->get_name();
  if (*seed_opt) ctx.seed_flag = seed_value;

  try {
    std::optional<Json> root;
    if (!ctx.config_path.empty()) root = load_config(ctx.config_path);
    else if (ctx.command != "paper-checks")
      fail(ErrorKind::ConfigError, ctx.command + " needs --config <path>");
    std::optional<ConfigNode> cfg;
    if (root) cfg.emplace(*root, "");

    ctx.seed = cfg ? cfg->unsigned_integer("seed", 0) : 0;
    if (ctx.command == "paper-checks" && !(cfg && cfg->has("seed"))) ctx.seed = 20241017;
    if (ctx.seed_flag) ctx.seed = *ctx.seed_flag;
    ctx.rng.seed(ctx.seed);
    if (ctx.threads > 0) Eigen::setNbThreads(ctx.threads);
    spdlog::info("{}: seed {}, threads {}", ctx.command, ctx.seed, ctx.threads);

    int rc = 0;
    if (ctx.command == "paper-checks") {
      rc = cmd_paper_checks(cfg ? &*cfg : nullptr, ctx);
    } else {
      static const std::map<std::string, std::function<int(ConfigNode&, Context&)>> table = {
          {"bending-constant", cmd_bending_constant}, {"truss-det", cmd_truss_det},
          {"eval-eh", cmd_eval_eh},                   {"solve-2d", cmd_solve_2d},
          {"solve-beam", cmd_solve_beam},             {"gamma-sweep", cmd_gamma_sweep},
          {"compactness", cmd_compactness}};
      rc = table.at(ctx.command)(*cfg, ctx);
    }
    if (ctx.command != "gamma-sweep") write_meta(ctx);
    return rc;
  } catch (const Error& e) {
    const int code = is_config_error(e.kind()) ? 2 : 3;
    emit_error(std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const nlohmann::json::exception& e) {
    emit_error("ConfigError", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    emit_error("NumericalFailure", e.what(), 3);
    return 3;
  }
}
