#ifndef SQG_SQG_SOLVER_HPP
#define SQG_SQG_SOLVER_HPP

#include <deque>
#include <vector>

#include "sqg/spectral.hpp"

namespace sqg::solver {

using spectral::GridField;
using spectral::Spectrum;

struct SolverConfig {
  double cfl = 0.5;
  /// Fixed step; 0 picks cfl * dx / max|u0| capped by max_dt.
  double dt = 0.0;
  double max_dt = 1e-2;
  /// Regularity index used for the H^s telemetry and the energy ledger.
  double s = 2.0;
  bool track_ledger = false;
  std::size_t history_capacity = 4096;
};

/// One telemetry row: time, ||psi||_{L^2}, ||psi||_{H^1}, ||psi||_{H^s},
/// ||Lambda^{s+1/2} psi||_{L^2}, and the L^2 dissipation rate
/// ||Lambda^{1/2} psi||^2 = -(1/2) d/dt ||psi||^2.
struct Telemetry {
  double t = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;
  double hs = 0.0;
  double lambda_s_half = 0.0;
  double dissipation_rate = 0.0;
};

/// Per-step energy balance for (1/2)||Lambda^s psi||^2:
/// residual = delta + dissipation - flux, with dissipation and flux integrated
/// over the step by Simpson's rule.
struct LedgerEntry {
  double t0 = 0.0;
  double dt = 0.0;
  double delta = 0.0;        // (1/2)||Lambda^s psi||^2 at t0+dt minus at t0
  double dissipation = 0.0;  // int ||Lambda^{s+1/2} psi||^2
  double flux = 0.0;         // int (Lambda^{2s} psi, -u.grad psi)
  double residual() const { return delta + dissipation - flux; }
};

struct SolverState {
  GridField field;
  double time = 0.0;
  double dt = 0.0;
  std::deque<Telemetry> history;
};

/// -R^perp psi . grad psi, 2/3-dealiased, in Fourier space.
Spectrum nonlinear_term(const Spectrum& psi_hat);

/// -R^perp psi . grad psi - Lambda psi on the grid.
GridField rhs(const GridField& psi);

/// Advection velocity u = R^perp psi.
spectral::VectorField velocity(const GridField& psi);

double max_speed(const GridField& psi);

/// Largest dt allowed by the CFL condition for the current field (infinity
/// for a field at rest).
double cfl_limit(const GridField& psi, double cfl);

/// One integrating-factor RK4 step. Throws StepSizeError if dt violates CFL.
SolverState step(const SolverState& state, double dt, const SolverConfig& config = {});

Telemetry measure(const GridField& psi, double t, double s);

struct Snapshot {
  double time = 0.0;
  GridField field;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<Telemetry> telemetry;  // one row per snapshot
  std::vector<LedgerEntry> ledger;   // one per step when tracked
  double dt = 0.0;
  std::size_t steps = 0;
};

/// Integrates from psi0 to T, storing snapshots at multiples of out_every
/// (and at T). The step is fixed for the whole run and adjusted down so every
/// output time is hit exactly.
Trajectory solve(const GridField& psi0, double T, double out_every,
                 const SolverConfig& config = {});

/// Fitted constant C of the dissipation budget
/// int ||Lambda^{s+1/2} psi||^2 <= (1/2)||Lambda^s psi0||^2
///   + C int ||Lambda^{3/2} psi||^2 ||Lambda^s psi||^2 (trapezoid over
/// snapshots).
double fitted_budget_constant(const Trajectory& traj, double s);

/// True when every Fourier mode above the 2/3 cutoff is below tol * max.
bool band_limited(const GridField& f, double tol = 1e-12);

}  // namespace sqg::solver

#endif  // SQG_SQG_SOLVER_HPP
