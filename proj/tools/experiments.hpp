#ifndef SQG_TOOLS_EXPERIMENTS_HPP
#define SQG_TOOLS_EXPERIMENTS_HPP

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "sqg/box_function.hpp"
#include "sqg/pinn.hpp"

namespace sqg::exp {

using json = nlohmann::json;

// ------------------------------------------------------------------ probes

/// Smooth non-periodic test function on the plane: a few plane waves, a cubic
/// polynomial drift and an optional Gaussian bump, all differentiable in
/// closed form to any order.
struct Probe {
  struct Wave {
    double a = 0.0;
    int n1 = 0, n2 = 0;
    double phase = 0.0;
  };
  std::vector<Wave> waves;
  // coefficient of x1^i x2^j, i + j <= 3
  std::map<std::pair<int, int>, double> poly;
  double bump_amp = 0.0;
  Vec2 bump_center{};
  double bump_width = 1.0;

  double operator()(Vec2 x, MultiIndex a = {}) const;
  BoxFunction box(int extent, int max_order = 6) const;
  json to_json() const;
};

/// `count` probes from `seed`; bumps only when `bumps` is set.
std::vector<Probe> make_probes(int count, std::uint64_t seed, bool bumps);

/// sup over a (2 * per_side + 1)^2 grid on extent*T^2 of max_{|b| <= k} |D^b f|.
double sup_norm_w(const BoxFunction& f, int k, int extent, int per_side = 16);

// ------------------------------------------------------------------ config

/// Reads named fields out of a JSON object and rejects whatever is left.
class Fields {
 public:
  Fields(const json& j, std::string where);
  template <class T>
  void get(const char* key, T& value) {
    seen_.insert(key);
    if (j_.contains(key)) {
      try {
        value = j_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw ConfigError(where_ + "." + key + ": " + e.what());
      }
    }
  }
  const json* sub(const char* key);
  void done() const;
  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

enum class Kind { VerifyOps, SqgConvergence, SqgSolve, PinnTrain, PinnReport, BoundCheck };
Kind parse_kind(const std::string& s);
std::string kind_name(Kind k);

struct VerifyOpsConfig {
  std::uint64_t seed = 7;
  int probes = 50;
  int p3_probes = 20;
  int points_per_probe = 8;
  std::string quadrature = "reporting";
  int truncation = 64;
  int p3_grid_panels = 2;
  int r3_grid_panels = 2;
  // tolerances
  double p2_refinement = 0.2;
  double r2_refinement = 0.2;
  double p3_refinement = 2.0;  // factor
  double p3_ladder_growth = 2.0;
  double r3_c_max = 10.0;
  double r3_refinement = 0.2;
  // negative control
  bool debug_tamper_kernel = false;
};

struct ConvergenceConfig {
  int n = 64;
  double T = 1.0;
  std::vector<double> dts{0.02, 0.01, 0.005};
  std::vector<int> grids{32, 64, 128};
  double ledger_dt = 0.02;
  int s = 2;
  std::string initial = "random";  // multi-shell datum; grids get its interpolant
  double eigenmode_tol = 1e-7;
  double min_order = 3.8;
  double mean_tol = 1e-10;
  double grid_tol = 1e-6;         // finest pair
  double grid_min_ratio = 100.0;  // successive differences must fall at least this fast
  double ledger_min_exponent = 4.5;
};

/// Initial data presets: "cos" = cos x1, "smoke" = cos x1 + 0.5 sin x2,
/// "random" = band-limited random field (modes <= 6, H^1 norm 4, seed 7).
/// cos and smoke sit on the |n| = 1 shell, where the nonlinearity vanishes.
spectral::GridField preset_field(const std::string& name, int n);

/// train.residual carries s, lambda, T for the loss and the quadrature
/// resolution of the reported E_G.
struct PinnConfig {
  pinn::TrainConfig train;
  std::string initial = "smoke";
  int n = 64;
  std::vector<std::uint64_t> seeds{42};
  std::vector<std::size_t> checkpoint_steps;
  double reference_dt = 0.005;
  double reference_every = 0.01;
  double min_decrease = 10.0;  // smoke criterion: E_G(0) / E_G(best)
  std::string network;         // pinn-report: network file to evaluate
  std::string reference;       // snapshot directory; empty: solve on the fly
};

/// Smoke preset: 3-32-32-32-1, seed 42, T = 0.5, lambda = 1e-2, 1200 steps with
/// a checkpoint at 600.
PinnConfig smoke_preset();

struct SolveConfig {
  std::string initial = "smoke";  // preset name, or a field file when input is set
  std::string input;
  int n = 64;
  double T = 1.0;
  double dt = 0.0;  // 0: automatic
  double out_every = 0.1;
  int s = 2;
  double cfl = 0.5;
};

struct BoundConfig {
  std::vector<std::string> reports;  // report JSON files
  double c_fit = -1.0;               // < 0: use the fitted constant
  double seed_spread = 10.0;
};

struct ExperimentConfig {
  Kind kind = Kind::VerifyOps;
  std::string output_dir = "out";
  VerifyOpsConfig verify;
  ConvergenceConfig convergence;
  PinnConfig pinn;
  BoundConfig bound;
  SolveConfig solve;
  json source;  // the validated input, for the manifest hash
};

/// Parses and validates; unknown fields anywhere are a ConfigError.
ExperimentConfig parse_experiment(const json& j);
ExperimentConfig load_experiment(const std::string& path);

pinn::TrainConfig parse_train(const json& j, pinn::TrainConfig base = {});
quad::QuadratureSpec quadrature_preset(const std::string& name);

// ------------------------------------------------------------------ runs

struct Check {
  std::string name;
  bool pass = false;
  json detail;
};

struct RunResult {
  std::vector<Check> checks;
  json report;
  std::map<std::string, std::string> files;  // name -> bytes, written by run_experiment
  bool pass() const;
};

RunResult run_verify_ops(const VerifyOpsConfig& cfg);
RunResult run_sqg_convergence(const ConvergenceConfig& cfg);
/// Snapshots (snap_XXXX.sqgf) and telemetry.csv.
RunResult run_sqg_solve(const SolveConfig& cfg);

/// Max |Lambda-tilde phi - Lambda phi| and |R-tilde phi - R phi| over
/// `count` random trigonometric polynomials with frequencies <= max_freq.
struct CoincidenceResult {
  double lambda_err = 0.0;
  double riesz_err = 0.0;
  int polynomials = 0;
  int points = 0;
};
CoincidenceResult run_coincidence(const nonlocal::OperatorContext& ctx, int count, int max_freq,
                                  int points, std::uint64_t seed);

struct PinnRun {
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  net::MlpParams params;
  pinn::ErrorReport report;
  double initial_E_G = 0.0;
};

/// Trains every seed; reports at each checkpoint step and at the end.
RunResult run_pinn_train(const PinnConfig& cfg, std::vector<PinnRun>* runs = nullptr);
RunResult run_pinn_report(const PinnConfig& cfg, const net::MlpParams& p);

/// All *.sqgf snapshots in `dir`, sorted by time.
solver::Trajectory load_trajectory(const std::string& dir);

/// E_G components plus E against a spectral reference.
pinn::ErrorReport full_report(const net::MlpParams& p, const spectral::GridField& psi0,
                              const pinn::ResidualConfig& rc,
                              const solver::Trajectory& reference);

struct BoundRow {
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  double E = 0.0, E_G = 0.0, lambda = 0.0;
};
RunResult run_bound_check(const std::vector<BoundRow>& rows, const BoundConfig& cfg);
BoundRow bound_row_from_report(const json& report);

/// Runs the experiment and writes its files, report.json and manifest.json
/// into cfg.output_dir, each atomically.
RunResult run_experiment(const ExperimentConfig& cfg);
void write_outputs(const std::string& dir, const std::string& kind, const json& config,
                   RunResult& r);

json report_json(const pinn::ErrorReport& r);
json checks_json(const std::vector<Check>& checks);

/// Manifest: tool version, kind, config hash, output hashes.
json manifest(const std::string& kind, const json& config, const RunResult& r);

std::string telemetry_csv(const solver::Trajectory& traj);

}  // namespace sqg::exp

#endif  // SQG_TOOLS_EXPERIMENTS_HPP
