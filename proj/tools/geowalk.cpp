// geowalk command-line front end.
//
//   geowalk sample    --polytope P.json --steps N [--h F] [--seed U] [--out S.csv] ...
//   geowalk geodesic  --polytope P.json --x X --v V --h F
//   geowalk physarum  --problem LP.json [--T F] [--out traj.csv] [--report R.json]
//   geowalk diagnose  --polytope P.json --samples S.csv [--out report.json]
//   geowalk diagnose  --polytope P.json --compare --h-grid a,b,c --steps N [--csv F]
//   geowalk replay    --manifest M.json [--check]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical abort.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "geowalk/diagnostics.hpp"
#include "geowalk/io.hpp"
#include "geowalk/physarum.hpp"
#include "geowalk/polytope.hpp"
#include "geowalk/version.hpp"
#include "geowalk/walk.hpp"

namespace fs = std::filesystem;
using namespace geowalk;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalAbort = 3;

// Configuration problems detected after parsing.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string suffixed(const std::string& path, int chain, int chains) {
  if (chains <= 1) return path;
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + ".chain" + std::to_string(chain) +
                             p.extension().string()))
      .string();
}

std::string default_manifest(const std::string& out) { return out + ".manifest.json"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SampleArgs {
  std::string polytope;
  long steps = -1;
  WalkConfig cfg;
  std::string out = "samples.csv";
  std::string stats = "stats.json";
  std::string manifest;
  std::string start = "center";
  int chains = 1;
  bool timing = false;
};

struct GeodesicArgs {
  std::string polytope, x, v;
  WalkConfig cfg;
  std::string out;
};

struct PhysarumArgs {
  std::string problem;
  double T = 20.0;
  double eps = CollocationConfig{}.tolerance;
  int checkpoints = 101;
  std::string out = "trajectory.csv";
  std::string report = "physarum.json";
};

struct DiagnoseArgs {
  std::string polytope, samples;
  std::uint64_t seed = 0;
  Index reference = 20000;
  std::string out = "report.json";
  bool compare = false;
  std::vector<double> h_grid;
  long steps = 2000;
  std::string csv = "comparison.csv";
};

void add_collocation_flags(CLI::App* sub, WalkConfig& cfg) {
  sub->add_option("--degree", cfg.collocation.degree, "collocation degree, 0 = default");
  sub->add_option("--eps", cfg.collocation.tolerance, "collocation tolerance");
  sub->add_option("--max-retries", cfg.max_retries, "re-solves at higher degree per proposal");
}

Vector resolve_start(const Polytope& P, const std::string& start, const Tolerances& tol) {
  if (start == "center") return analytic_center(P, std::nullopt, tol).x();
  Vector x;
  try {
    x = io::read_vector_arg(start);
  } catch (const InputError& e) {
    throw ConfigError(std::string("--start: ") + e.what());
  }
  if (x.size() != P.n()) throw ConfigError("--start has wrong dimension");
  if (!contains(P, x)) throw ConfigError("--start is not strictly inside the polytope");
  return x;
}

json config_echo(const WalkConfig& cfg, Index n) {
  return {{"h", cfg.resolved_h(n)},
          {"degree", cfg.collocation.resolved_degree()},
          {"eps", cfg.collocation.tolerance},
          {"seed", cfg.seed},
          {"burn_in", cfg.resolved_burn_in(n)},
          {"thin", cfg.thin},
          {"max_retries", cfg.max_retries}};
}

int cmd_sample(const SampleArgs& a, const std::vector<std::string>& argv) {
  const auto t0 = std::chrono::steady_clock::now();
  if (a.steps < 0) throw ConfigError("--steps must be given and non-negative");
  if (a.chains < 1) throw ConfigError("--chains must be at least 1");
  a.cfg.validate();
  const Polytope P = load_polytope_file(a.polytope);
  const Vector start = resolve_start(P, a.start, a.cfg.tol);

  std::vector<ChainResult> results;
  if (a.chains == 1)
    results.push_back(run_chain(P, start, a.steps, a.cfg));
  else
    results = run_chains(P, start, a.steps, a.cfg, a.chains);

  json outputs = json::array();
  for (int k = 0; k < a.chains; ++k) {
    const auto& r = results[static_cast<size_t>(k)];
    const std::string out = suffixed(a.out, k, a.chains);
    const std::string stats = suffixed(a.stats, k, a.chains);
    io::write_samples_csv(out, r.samples, P.n());
    io::write_text(stats, io::dump_json(io::stats_to_json(r.stats, a.timing)));
    outputs.push_back({{"samples", out}, {"stats", stats}});
    if (r.stats.zero_acceptance && r.stats.steps > 0)
      std::cerr << "warning: chain " << k << " accepted no proposals\n";
  }

  json m;
  m["command"] = "sample";
  m["argv"] = argv;
  m["polytope"] = a.polytope;
  m["config"] = config_echo(a.cfg, P.n());
  m["config"]["steps"] = a.steps;
  m["config"]["start"] = a.start;
  m["config"]["chains"] = a.chains;
  m["outputs"] = outputs;
  m["version"] = kVersion;
  m["wall_time_s"] = seconds_since(t0);
  io::write_text(a.manifest.empty() ? default_manifest(a.out) : a.manifest, io::dump_json(m));
  return kOk;
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int cmd_geodesic(GeodesicArgs a) {
  const Polytope P = load_polytope_file(a.polytope);
  Vector x, v;
  try {
    x = io::read_vector_arg(a.x);
    v = io::read_vector_arg(a.v);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  if (x.size() != P.n() || v.size() != P.n()) throw ConfigError("--x/--v have wrong dimension");
  if (!contains(P, x)) throw ConfigError("--x is not strictly inside the polytope");
  if (!(a.cfg.h > 0)) throw ConfigError("--h must be positive");
  a.cfg.record_diagnostics = true;
  a.cfg.validate();

  const ManifoldPoint p = make_point(P, x, a.cfg.tol);
  const double h = a.cfg.h;
  const Vector w = (v - 0.5 * h * p.drift()) / std::sqrt(h);
  const WalkStep s = propose_with_direction(p, w, a.cfg);

  json j;
  j["x"] = vec_json(x);
  j["v"] = vec_json(v);
  j["h"] = h;
  if (s.failure != FailureReason::None) {
    j["error"] = s.failure == FailureReason::Exit ? "exited polytope" : to_string(s.failure);
    j["failure"] = to_string(s.failure);
    j["message"] = s.message;
    const std::string text = io::dump_json(j);
    if (a.out.empty())
      std::cout << text;
    else
      io::write_text(a.out, text);
    return kNumericalAbort;
  }
  j["endpoint"] = vec_json(s.to);
  j["reverse_velocity"] = vec_json(s.v_rev);
  j["logdet_forward"] = s.logdet_fwd;
  j["logdet_reverse"] = s.logdet_rev;
  j["V_gamma"] = s.V_gamma;
  j["log_density_forward"] = s.log_fwd;
  j["log_density_reverse"] = s.log_rev;
  j["log_ratio"] = s.log_ratio;
  j["ratio"] = std::exp(s.log_ratio);
  j["max_curvature"] = s.max_curvature;
  j["speed_deviation"] = s.speed_deviation;
  const std::string text = io::dump_json(j);
  if (a.out.empty())
    std::cout << text;
  else
    io::write_text(a.out, text);
  return kOk;
}

int cmd_physarum(const PhysarumArgs& a) {
  if (!(a.T >= 0)) throw ConfigError("--T must be non-negative");
  if (a.checkpoints < 2) throw ConfigError("--checkpoints must be at least 2");
  const PhysarumProblem prob = load_physarum_file(a.problem);
  const PhysarumResult r = physarum_solve(prob, a.T, a.eps, a.checkpoints);
  io::write_text(a.out, trajectory_csv(r));
  json j = to_json(r);
  j["T"] = a.T;
  j["eps"] = a.eps;
  j["problem"] = a.problem;
  io::write_text(a.report, io::dump_json(j));
  if (r.monotonicity_warning)
    std::cerr << "warning: objective rose by " << r.max_increase << " late in the run\n";
  return kOk;
}

int cmd_diagnose(const DiagnoseArgs& a) {
  const Polytope P = load_polytope_file(a.polytope);
  if (a.compare) {
    if (a.h_grid.empty()) throw ConfigError("--compare needs --h-grid");
    const auto rows = compare_walks(P, a.h_grid, a.steps, a.seed);
    io::write_text(a.csv, comparison_csv(rows));
    return kOk;
  }
  if (a.samples.empty()) throw ConfigError("diagnose needs --samples or --compare");
  const Matrix S = io::read_samples_csv(a.samples);
  if (S.cols() != P.n()) throw ConfigError("samples have wrong dimension");
  const UniformityReport r = uniformity_report(S, P, a.seed, a.reference);
  io::write_text(a.out, io::dump_json(to_json(r)));
  std::cout << (r.pass ? "PASS" : "FAIL") << " (" << r.projections_passed << "/"
            << r.projections.size() << " projections)\n";
  return kOk;
}

int run(int argc, char** argv, bool from_replay);

int cmd_replay(const std::string& manifest, bool check) {
  json m;
  try {
    m = json::parse(io::read_text(manifest));
  } catch (const json::exception& e) {
    throw ConfigError(manifest + ": " + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array()) throw ConfigError("manifest lacks argv");
  auto args = m["argv"].get<std::vector<std::string>>();

  std::vector<std::pair<std::string, std::string>> saved;
  if (check) {
    for (const auto& o : m.value("outputs", json::array()))
      for (const auto& [key, path] : o.items()) saved.emplace_back(path, io::read_text(path));
  }

  std::vector<char*> cargv;
  std::string prog = "geowalk";
  cargv.push_back(prog.data());
  for (auto& s : args) cargv.push_back(s.data());
  const int code = run(static_cast<int>(cargv.size()), cargv.data(), true);
  if (code != kOk || !check) return code;
  for (const auto& [path, before] : saved)
    if (io::read_text(path) != before) {
      std::cerr << "replay mismatch: " << path << "\n";
      return kNumericalAbort;
    }
  std::cout << "replay identical (" << saved.size() << " files)\n";
  return kOk;
}

int run(int argc, char** argv, bool from_replay) {
  CLI::App app{"Geodesic walk sampler for polytopes"};
  app.set_help_flag("--help", "print help");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "run the geodesic walk");
  sample->add_option("--polytope", sa.polytope, "polytope JSON")->required();
  sample->add_option("--steps", sa.steps, "retained steps after burn-in")->required();
  sample->add_option("--h", sa.cfg.h, "step size, 0 = default");
  sample->add_option("--seed", sa.cfg.seed, "generator seed");
  sample->add_option("--out", sa.out, "samples CSV");
  sample->add_option("--stats", sa.stats, "stats JSON");
  sample->add_option("--manifest", sa.manifest, "run manifest (default <out>.manifest.json)");
  sample->add_option("--burnin", sa.cfg.burn_in, "burn-in steps, -1 = default");
  sample->add_option("--thin", sa.cfg.thin, "keep every k-th state");
  sample->add_option("--start", sa.start, "center or a point (file or comma list)");
  sample->add_option("--chains", sa.chains, "independent chains, seeds seed+k");
  sample->add_flag("--timing", sa.timing, "record wall time in stats");
  add_collocation_flags(sample, sa.cfg);

  GeodesicArgs ga;
  auto* geodesic = app.add_subcommand("geodesic", "one proposal with a given tangent");
  geodesic->add_option("--polytope", ga.polytope, "polytope JSON")->required();
  geodesic->add_option("--x", ga.x, "start point (file or comma list)")->required();
  geodesic->add_option("--v", ga.v, "tangent (file or comma list)")->required();
  geodesic->add_option("--h", ga.cfg.h, "step size")->required();
  geodesic->add_option("--out", ga.out, "write JSON here instead of stdout");
  add_collocation_flags(geodesic, ga.cfg);

  PhysarumArgs pa;
  auto* physarum = app.add_subcommand("physarum", "Physarum dynamics on an LP");
  physarum->add_option("--problem", pa.problem, "LP JSON")->required();
  physarum->add_option("--T", pa.T, "time horizon");
  physarum->add_option("--eps", pa.eps, "collocation tolerance");
  physarum->add_option("--checkpoints", pa.checkpoints, "trajectory rows");
  physarum->add_option("--out", pa.out, "trajectory CSV");
  physarum->add_option("--report", pa.report, "summary JSON");

  DiagnoseArgs da;
  auto* diagnose = app.add_subcommand("diagnose", "uniformity report or walk comparison");
  diagnose->add_option("--polytope", da.polytope, "polytope JSON")->required();
  diagnose->add_option("--samples", da.samples, "samples CSV");
  diagnose->add_option("--seed", da.seed, "seed for projections and reference");
  diagnose->add_option("--reference", da.reference, "rejection reference size");
  diagnose->add_option("--out", da.out, "report JSON");
  diagnose->add_flag("--compare", da.compare, "geodesic vs Dikin over --h-grid");
  diagnose->add_option("--h-grid", da.h_grid, "step sizes")->delimiter(',');
  diagnose->add_option("--steps", da.steps, "steps per chain in --compare");
  diagnose->add_option("--csv", da.csv, "comparison CSV");

  std::string manifest;
  bool check = false;
  auto* replay = app.add_subcommand("replay", "re-run a manifest");
  replay->add_option("--manifest", manifest, "manifest JSON")->required();
  replay->add_flag("--check", check, "compare regenerated outputs with existing files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  std::vector<std::string> canonical;
  for (int i = 1; i < argc; ++i) canonical.emplace_back(argv[i]);

  try {
    if (*sample) return cmd_sample(sa, canonical);
    if (*geodesic) return cmd_geodesic(ga);
    if (*physarum) return cmd_physarum(pa);
    if (*diagnose) return cmd_diagnose(da);
    if (*replay) {
      if (from_replay) throw ConfigError("nested replay");
      return cmd_replay(manifest, check);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kNumericalAbort;
  }
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv, false); }
