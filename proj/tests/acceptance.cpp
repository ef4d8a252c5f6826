// Acceptance run: one PASS/FAIL line per criterion, exit status 0 when all pass.
#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>

#include "experiments.hpp"
#include "sqg/io.hpp"

using namespace sqg;
using namespace sqg::exp;

namespace {

// Tolerances
constexpr double kCoincidenceTol = 1e-5;
constexpr double kCoincidenceSeconds = 120.0;
constexpr double kConvergenceSeconds = 300.0;
constexpr double kAnnihilationTol = 1e-4;
constexpr double kSmokeSeconds = 600.0;
constexpr double kSmokeDecrease = 10.0;
constexpr double kRssTol = 1e-12;
constexpr double kSeedSpread = 10.0;
constexpr double kAutodiffTol = 1e-4;
constexpr double kFdStep = 1e-4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const Check* find(const RunResult& r, const std::string& name) {
  for (const Check& c : r.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string summary(const RunResult& r, std::initializer_list<const char*> names) {
  std::string out;
  for (const char* n : names) {
    const Check* c = find(r, n);
    out += std::string(n) + "=" + (c && c->pass ? "pass" : "FAIL") + " ";
  }
  return out;
}

bool all_of(const RunResult& r, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    const Check* c = find(r, n);
    if (!c || !c->pass) return false;
  }
  return true;
}

// ------------------------------------------------------------------ 1

Outcome periodic_coincidence() {
  const auto t0 = Clock::now();
  const nonlocal::OperatorContext ctx;  // oracle quadrature, M = 64
  const CoincidenceResult c = run_coincidence(ctx, 20, 8, 8, 2024);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = c.lambda_err <= kCoincidenceTol && c.riesz_err <= kCoincidenceTol && secs < kCoincidenceSeconds;
  o.detail = fmt("max|dLambda| %.2e ", c.lambda_err) + fmt("max|dR| %.2e ", c.riesz_err) +
             fmt("over %.0f points, ", c.points) + fmt("%.1fs", secs);
  return o;
}

// ------------------------------------------------------------------ 2-4

struct VerifyRun {
  RunResult r;
  double seconds = 0.0;
};

VerifyRun& verify_run() {
  static VerifyRun v = [] {
    VerifyRun out;
    const auto t0 = Clock::now();
    out.r = run_verify_ops(VerifyOpsConfig{});
    out.seconds = seconds_since(t0);
    return out;
  }();
  return v;
}

std::string constants(const RunResult& r, const char* name) {
  const Check* c = find(r, name);
  if (!c) return "";
  std::string out;
  for (const auto& row : c->detail["constants"]) {
    out += fmt("C%.0f ", row["order"].get<double>()) + fmt("%.3g", row["C"].get<double>()) +
           fmt("->%.3g ", row["C_refined"].get<double>());
  }
  return out;
}

Outcome p1_p2() {
  const VerifyRun& v = verify_run();
  return {all_of(v.r, {"P1", "P2"}),
          summary(v.r, {"P1", "P2"}) + constants(v.r, "P2") + "(R1/R2: " +
              summary(v.r, {"R1", "R2"}) + ")"};
}

Outcome p3() {
  const VerifyRun& v = verify_run();
  const Check* c = find(v.r, "P3");
  if (!c) return {false, "missing"};
  return {c->pass, fmt("C_fit %.3g", c->detail["C_fit"].get<double>()) +
                       fmt(" refined %.3g", c->detail["C_fit_refined"].get<double>()) +
                       " ladder " + (c->detail["universal"].get<bool>() ? "bounded" : "GROWS")};
}

Outcome r3() {
  const VerifyRun& v = verify_run();
  const Check* c = find(v.r, "R3");
  if (!c) return {false, "missing"};
  return {c->pass, fmt("C %.3g", c->detail["C"].get<double>()) +
                       fmt(" refined %.3g", c->detail["C_refined"].get<double>()) +
                       fmt(", verify-ops total %.0fs", v.seconds)};
}

// ------------------------------------------------------------------ 5

Outcome sqg_solver() {
  const auto t0 = Clock::now();
  const RunResult r = run_sqg_convergence(ConvergenceConfig{});
  const double secs = seconds_since(t0);
  const Check* e = find(r, "eigenmode");
  const Check* o = find(r, "temporal_order");
  const Check* l = find(r, "ledger_order");
  std::string d = summary(r, {"eigenmode", "temporal_order", "spatial_convergence", "ledger_order",
                              "l2_monotone", "mean_zero"});
  if (e && o && l) {
    d += fmt("| err %.2e", e->detail["max_error"].get<double>()) +
         fmt(" order %.2f", o->detail["observed_order"].get<double>()) +
         fmt(" ledger dt^%.2f", l->detail["exponent"].get<double>() + 1.0);
  }
  d += fmt(" %.1fs", secs);
  return {r.pass() && secs < kConvergenceSeconds, d};
}

// ------------------------------------------------------------------ 6

Outcome annihilation() {
  const PinnConfig cfg = smoke_preset();
  const spectral::GridField psi0 = preset_field(cfg.initial, cfg.n);
  solver::SolverConfig sc;
  sc.dt = cfg.reference_dt;
  const pinn::ReferenceFunction f(solver::solve(psi0, cfg.train.residual.T, cfg.reference_every, sc));
  pinn::ResidualConfig rc = cfg.train.residual;
  rc.s = 0;
  rc.interior_grid = 8;
  rc.interior_time_nodes = 3;
  const double ri = std::sqrt(pinn::interior_error_sq(f, rc));
  const double rt = pinn::initial_residual_norm(f, psi0, 0);
  const double rb = std::sqrt(pinn::boundary_error_sq(f, rc));
  const double rp = std::sqrt(pinn::periodicity_error_sq(f, rc));
  const bool ok = ri < kAnnihilationTol && rt < kAnnihilationTol && rb < kAnnihilationTol &&
                  rp < kAnnihilationTol;
  return {ok, fmt("R_i %.2e ", ri) + fmt("R_t %.2e ", rt) + fmt("R_b %.2e ", rb) + fmt("R_per %.2e", rp)};
}

// ------------------------------------------------------------------ 7-8

struct SmokeRuns {
  std::vector<PinnRun> runs;
  std::map<std::uint64_t, double> seconds;
  std::vector<Check> checks;
};

SmokeRuns& smoke_runs() {
  static SmokeRuns s = [] {
    SmokeRuns out;
    PinnConfig cfg = smoke_preset();
    for (std::uint64_t seed : {42ULL, 43ULL, 44ULL}) {
      cfg.seeds = {seed};
      const auto t0 = Clock::now();
      const RunResult r = run_pinn_train(cfg, &out.runs);
      out.seconds[seed] = seconds_since(t0);
      out.checks.insert(out.checks.end(), r.checks.begin(), r.checks.end());
    }
    return out;
  }();
  return s;
}

double rss_defect(const pinn::ErrorReport& r) {
  const double sum = r.E_G_i * r.E_G_i + r.E_G_t * r.E_G_t + r.E_G_b * r.E_G_b +
                     r.E_G_per * r.E_G_per + r.lambda * r.E_G_p * r.E_G_p;
  return std::fabs(r.E_G * r.E_G - sum) / sum;
}

Outcome smoke() {
  const SmokeRuns& s = smoke_runs();
  const std::size_t steps = smoke_preset().train.steps;
  for (const PinnRun& r : s.runs) {
    if (r.seed != 42 || r.steps != steps) continue;
    const double ratio = r.initial_E_G / r.report.E_G;
    const double secs = s.seconds.at(42);
    double rss = 0.0;
    for (const PinnRun& q : s.runs) rss = std::max(rss, rss_defect(q.report));
    return {ratio >= kSmokeDecrease && secs < kSmokeSeconds && rss <= kRssTol,
            fmt("E_G %.3g", r.initial_E_G) + fmt(" -> %.3g", r.report.E_G) +
                fmt(" (x%.1f)", ratio) + fmt(" in %.0fs", secs) + fmt(", RSS defect %.1e", rss)};
  }
  return {false, "seed 42 run missing"};
}

Outcome bound() {
  const SmokeRuns& s = smoke_runs();
  std::vector<BoundRow> rows;
  for (const PinnRun& r : s.runs) {
    rows.push_back({r.seed, r.steps, r.report.E_total, r.report.E_G, r.report.lambda});
  }
  BoundConfig bc;
  bc.seed_spread = kSeedSpread;
  const RunResult r = run_bound_check(rows, bc);
  const Check* sp = find(r, "seed_spread");
  std::string d = summary(r, {"c_min_finite", "seed_spread", "envelope"});
  if (sp) d += fmt("| spread x%.3g", sp->detail["max_over_min"].get<double>());
  d += fmt(" C_fit %.3g", r.report["C_fit"].get<double>());
  if (const Check* e = find(r, "envelope")) {
    d += std::string(" strict-envelope ") +
         (e->detail["strict_within_envelope"].get<bool>() ? "holds" : "violated");
  }
  return {r.pass(), d};
}

// ------------------------------------------------------------------ 9

Outcome autodiff() {
  std::mt19937_64 rng(909);
  std::vector<StMultiIndex> queries;
  for (int dt = 0; dt <= 3; ++dt)
    for (int d1 = 0; dt + d1 <= 3; ++d1)
      for (int d2 = 0; dt + d1 + d2 <= 3; ++d2) {
        if (dt + d1 + d2 > 0) queries.push_back({dt, d1, d2});
      }
  double worst = 0.0;
  int checked = 0;
  for (int pair = 0; pair < 100; ++pair) {
    const net::MlpParams p = net::MlpParams::xavier({3, 16, 16, 1}, 5000 + std::uint64_t(pair));
    const std::array<double, 3> x{uniform(rng, 0, 1), uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)};
    for (StMultiIndex a : queries) {
      // difference the order-(k-1) derivative along the last nonzero axis
      StMultiIndex lower = a;
      int axis = 2;
      if (lower.d2 > 0) {
        --lower.d2;
      } else if (lower.d1 > 0) {
        --lower.d1, axis = 1;
      } else {
        --lower.dt, axis = 0;
      }
      auto xp = x, xm = x;
      xp[std::size_t(axis)] += kFdStep;
      xm[std::size_t(axis)] -= kFdStep;
      const double fd = (net::eval(p, xp, lower) - net::eval(p, xm, lower)) / (2 * kFdStep);
      const double ad = net::eval(p, x, a);
      worst = std::max(worst, std::fabs(ad - fd) / std::max(std::fabs(ad), 1.0));
      ++checked;
    }
  }

  // parameter gradient of a loss built from order <= 3 queries
  double gworst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const net::MlpParams p = net::MlpParams::xavier({3, 16, 16, 1}, 7000 + std::uint64_t(trial));
    const std::array<double, 3> x{uniform(rng, 0, 1), uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)};
    const StMultiIndex a = queries[std::size_t(trial) % queries.size()];
    const StMultiIndex b = queries[(std::size_t(trial) * 7 + 3) % queries.size()];
    const auto g = net::param_gradient(p, [&](net::GradientSession& s) {
      return ad::square(s.eval(x, a)) + s.eval(x) * s.eval(x, b);
    });
    auto loss_at = [&](const std::vector<double>& th) {
      net::MlpParams q = p;
      q.theta = th;
      const double u = net::eval(q, x, a);
      return u * u + net::eval(q, x) * net::eval(q, x, b);
    };
    std::vector<double> v(p.num_params()), tp = p.theta, tm = p.theta;
    double gv = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = uniform(rng, -1, 1);
      tp[i] += kFdStep * v[i];
      tm[i] -= kFdStep * v[i];
      gv += g[i] * v[i];
    }
    const double fd = (loss_at(tp) - loss_at(tm)) / (2 * kFdStep);
    gworst = std::max(gworst, std::fabs(gv - fd) / std::max(std::fabs(fd), 1e-8));
  }
  return {worst <= kAutodiffTol && gworst <= kAutodiffTol,
          fmt("%.0f derivative queries, ", checked) + fmt("worst rel %.2e", worst) +
              fmt("; gradient worst rel %.2e", gworst)};
}

// ------------------------------------------------------------------ 10

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    out[e.path().filename().string()] = io::read_file(e.path().string());
  }
  return out;
}

Outcome determinism(const std::filesystem::path& work) {
  namespace fs = std::filesystem;
  fs::remove_all(work);
  json verify = {{"kind", "verify-ops"}, {"seeds", {3}}, {"params", {{"probes", 4}, {"p3_probes", 2}, {"points_per_probe", 2}, {"quadrature", "training"}}}};
  SolveConfig sc;
  sc.n = 32;
  sc.T = 0.5;
  sc.out_every = 0.1;
  const json solve_cfg = {{"init", "smoke"}, {"T", sc.T}, {"N", sc.n}};
  for (const char* run : {"a", "b"}) {
    ExperimentConfig v = parse_experiment(verify);
    v.output_dir = (work / run / "verify").string();
    run_experiment(v);
    RunResult s = run_sqg_solve(sc);
    write_outputs((work / run / "solve").string(), "sqg-solve", solve_cfg, s);
  }
  std::size_t files = 0;
  bool same = true;
  for (const char* sub : {"verify", "solve"}) {
    const auto a = read_dir(work / "a" / sub), b = read_dir(work / "b" / sub);
    same = same && a == b;
    files += a.size();
  }
  return {same && files > 0, fmt("%.0f files compared", double(files)) + (same ? ", identical" : ", DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string work = (std::filesystem::temp_directory_path() / "sqg_acceptance").string();
  app.add_option("--only", only, "Run just these criteria");
  app.add_option("--work-dir", work, "Scratch directory for the determinism reruns");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"periodic coincidence", periodic_coincidence},
      {"Lambda-tilde P1/P2", p1_p2},
      {"Lambda-tilde P3", p3},
      {"R-tilde R3", r3},
      {"SQG solver", sqg_solver},
      {"residual annihilation", annihilation},
      {"PINN smoke training", smoke},
      {"total-error bound", bound},
      {"autodiff integrity", autodiff},
      {"determinism", [&] { return determinism(work); }},
  };
  const std::set<int> pick(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!pick.empty() && !pick.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %-24s %s  %s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
