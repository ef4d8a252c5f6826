#ifndef SQG_PINN_HPP
#define SQG_PINN_HPP

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sqg/box_function.hpp"
#include "sqg/nonlocal_ops.hpp"
#include "sqg/spectral.hpp"
#include "sqg/sqg_solver.hpp"
#include "sqg/tanh_net.hpp"

namespace sqg::pinn {

using nonlocal::OperatorContext;
using quad::QuadratureSpec;
using spectral::GridField;

/// psi(t, x) with derivative queries D^a in (t, x1, x2).
class SpaceTimeFunction {
 public:
  virtual ~SpaceTimeFunction() = default;
  virtual int max_order() const = 0;
  virtual double eval(double t, Vec2 x, StMultiIndex a = {}) const = 0;
  /// out[i] = D^a psi(t[i], x[i]); the default loops over eval.
  virtual void eval_batch(std::span<const double> t, std::span<const Vec2> x, StMultiIndex a,
                          std::span<double> out) const;

  /// x -> psi(t, x) on extent*T^2, spatial derivatives only. The slice refers
  /// to *this, which must outlive it.
  BoxFunction slice(double t, int extent) const;
};

/// A tanh network as a space-time function; order <= 1 batches go through
/// the Eigen engine, higher orders through nested duals.
class NetworkFunction : public SpaceTimeFunction {
 public:
  explicit NetworkFunction(net::MlpParams p, int max_order = net::kDefaultMaxOrder);
  int max_order() const override { return max_order_; }
  double eval(double t, Vec2 x, StMultiIndex a = {}) const override;
  void eval_batch(std::span<const double> t, std::span<const Vec2> x, StMultiIndex a,
                  std::span<double> out) const override;
  const net::MlpParams& params() const { return p_; }

 private:
  net::MlpParams p_;
  int max_order_;
};

class AnalyticFunction : public SpaceTimeFunction {
 public:
  using Fn = std::function<double(double, Vec2, StMultiIndex)>;
  AnalyticFunction(Fn f, int max_order) : f_(std::move(f)), max_order_(max_order) {}
  int max_order() const override { return max_order_; }
  double eval(double t, Vec2 x, StMultiIndex a = {}) const override;

 private:
  Fn f_;
  int max_order_;
};

/// Solver trajectory as a space-time function: trigonometric interpolation in
/// space, cubic Hermite in time with psi_t taken from the SQG right-hand side
/// at each snapshot. Time derivatives of order <= 1.
class ReferenceFunction : public SpaceTimeFunction {
 public:
  explicit ReferenceFunction(const solver::Trajectory& traj, int extent = 6,
                             int max_order = net::kDefaultMaxOrder);
  int max_order() const override { return max_order_; }
  double eval(double t, Vec2 x, StMultiIndex a = {}) const override;
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }

 private:
  std::vector<double> times_;
  std::vector<BoxFunction> value_;
  std::vector<BoxFunction> rate_;
  int max_order_;
};

struct ResidualConfig {
  int s = 0;
  double lambda = 1e-4;
  double T = 0.5;
  // E_i: N x N grid on T^2 times Gauss nodes in t
  int interior_grid = 16;
  int interior_time_nodes = 3;
  // E_b: composite Gauss in the face coordinate and in t
  int boundary_panels = 4;
  int boundary_order = 6;
  int boundary_time_nodes = 4;
  // E_per: composite Gauss on 2T^2 and in t
  int periodicity_panels = 4;
  int periodicity_order = 4;
  int periodicity_time_nodes = 3;
  // E_p: N x N grid, trapezoid in t
  int penalty_grid = 64;
  int penalty_time_nodes = 5;
  QuadratureSpec quadrature = QuadratureSpec::reporting();
  int truncation = 64;
  std::uint64_t seed = 42;

  void validate() const;
};

struct ErrorReport {
  double E_G_i = 0.0;
  double E_G_t = 0.0;
  double E_G_b = 0.0;
  double E_G_per = 0.0;
  double E_G_p = 0.0;
  double E_G = 0.0;
  double E_total = 0.0;  // negative when no reference was supplied
  double lambda = 0.0;
  double wall_time = 0.0;
  std::size_t step_count = 0;

  /// E_G from the components: sqrt(i^2 + t^2 + b^2 + per^2 + lambda p^2).
  void assemble();
};

/// d_t psi + R-tilde^perp psi . grad psi + Lambda-tilde psi at (t, x_k).
std::vector<double> pde_residual(const SpaceTimeFunction& f, double t,
                                 std::span<const Vec2> xs, const OperatorContext& ctx);
double pde_residual(const SpaceTimeFunction& f, double t, Vec2 x, const OperatorContext& ctx);

/// ||psi(0, .) - psi0||_{H^s(T^2)} on the grid of psi0.
double initial_residual_norm(const SpaceTimeFunction& f, const GridField& psi0, int s);

/// R_{b,1}(t, x1) + R_{b,2}(t, x2).
double boundary_residual(const SpaceTimeFunction& f, int s, double t, double x1, double x2);
double boundary_error_sq(const SpaceTimeFunction& f, const ResidualConfig& cfg);

/// The three-block periodicity residual at (t, x), x in 2T^2.
double periodicity_residual(const SpaceTimeFunction& f, int s, double t, Vec2 x);
double periodicity_error_sq(const SpaceTimeFunction& f, const ResidualConfig& cfg);

/// (int_0^T ||psi(t)||^2_{H^{s+3}} dt)^{1/2} from grid samples.
double penalty_term(const SpaceTimeFunction& f, const ResidualConfig& cfg);

double interior_error_sq(const SpaceTimeFunction& f, const ResidualConfig& cfg);

ErrorReport generalization_error(const SpaceTimeFunction& f, const GridField& psi0,
                                 const ResidualConfig& cfg);

/// (int_0^T ||psi - f||^2_{H^s} dt)^{1/2} over the reference snapshots,
/// trapezoid in time. The reference must cover [0, T].
double total_error(const SpaceTimeFunction& f, const solver::Trajectory& reference, int s,
                   double T);

struct BoundVerdict {
  bool holds = false;      // for the supplied C
  bool violated = false;   // no finite C works
  double c_min = 0.0;      // smallest C making the bound hold
  double rhs = 0.0;        // bound at the supplied C
};

/// E^2 <= C E_G^2 (1 + 1/sqrt(lambda)) exp(C + E_G/sqrt(lambda)).
double bound_rhs(double E_G, double lambda, double C);
BoundVerdict bound_check(double E, double E_G, double lambda, double C_fit);
BoundVerdict bound_check(const ErrorReport& report, double C_fit);

// ------------------------------------------------------------------ training

struct TrainConfig {
  ResidualConfig residual;
  std::vector<int> architecture = net::kDefaultArchitecture;
  std::uint64_t seed = net::kDefaultSeed;
  std::size_t steps = 2000;
  net::AdamConfig adam{};
  /// lr decays geometrically to adam.lr * lr_final_ratio at the last step.
  double lr_final_ratio = 1.0;
  // Monte Carlo batch per step
  int interior_batch = 32;
  int boundary_batch = 64;
  int periodicity_batch = 32;
  int initial_grid = 32;
  int penalty_grid = 32;
  int penalty_times = 1;
  // held-out validation set
  int validation_interior = 128;
  int validation_boundary = 256;
  int validation_periodicity = 128;
  std::size_t log_every = 50;
  QuadratureSpec quadrature = QuadratureSpec::training();
  int truncation = 16;
  /// Components switched off in the loss (weights 0 or 1).
  double w_interior = 1.0, w_initial = 1.0, w_boundary = 1.0, w_periodicity = 1.0,
         w_penalty = 1.0;

  void validate() const;
};

/// Monte-Carlo estimates of the squared components.
struct LossComponents {
  double interior = 0.0;
  double initial = 0.0;
  double boundary = 0.0;
  double periodicity = 0.0;
  double penalty = 0.0;
  double total(double lambda) const {
    return interior + initial + boundary + periodicity + lambda * penalty;
  }
};

/// Collocation points for one loss evaluation.
struct Collocation {
  std::vector<double> interior_t;
  std::vector<Vec2> interior_x;
  std::vector<double> boundary_t;
  std::vector<double> boundary_s;
  std::vector<double> periodicity_t;
  std::vector<Vec2> periodicity_x;
  std::vector<double> penalty_t;
  bool penalty_trapezoid = false;  // trapezoid weights instead of Monte Carlo

  static Collocation sample(const TrainConfig& cfg, std::uint64_t seed, bool validation);
};

/// Training loss for s = 0 with its parameter gradient.
class TrainingLoss {
 public:
  TrainingLoss(const TrainConfig& cfg, const GridField& psi0);
  /// Weighted loss; grad (if non-null) receives d loss / d theta.
  double evaluate(const net::MlpParams& p, const Collocation& c, std::vector<double>* grad,
                  LossComponents* comps = nullptr) const;

 private:
  TrainConfig cfg_;
  std::vector<double> psi0_samples_;  // psi0 on the initial grid
  OperatorContext ctx_;
};

struct HistoryRow {
  std::size_t step = 0;
  double loss = 0.0;       // training batch
  LossComponents validation;
  double validation_E_G = 0.0;
  double best_E_G = 0.0;
};

struct TrainResult {
  net::MlpParams best;
  net::MlpParams last;
  std::size_t best_step = 0;
  double best_validation = 0.0;
  double first_loss = 0.0;
  std::vector<HistoryRow> history;
  /// Best-seen parameters at the requested intermediate steps.
  std::vector<std::pair<std::size_t, net::MlpParams>> checkpoints;
};

/// Adam on Monte-Carlo E_G^2, keeping the best parameters by validation E_G.
/// `checkpoint_steps` lists steps at which the best-so-far parameters are
/// recorded; `progress` is called once per log row.
TrainResult train(const net::MlpParams& theta0, const GridField& psi0, const TrainConfig& cfg,
                  const std::vector<std::size_t>& checkpoint_steps = {},
                  const std::function<void(const HistoryRow&)>& progress = {});

}  // namespace sqg::pinn

#endif  // SQG_PINN_HPP
