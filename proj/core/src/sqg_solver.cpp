#include "sqg/sqg_solver.hpp"

#include <limits>
#include <string>

namespace sqg::solver {

namespace {

using cplx = std::complex<double>;

void require_mean_zero(const GridField& f) {
  if (std::fabs(f.mean()) > 1e-10 * std::max(1.0, f.max_abs())) {
    throw InvertibilityError("SQG state must have zero mean, got " + std::to_string(f.mean()));
  }
}

// a + s * b, elementwise
Spectrum axpy(const Spectrum& a, double s, const Spectrum& b) {
  Spectrum out = a;
  for (std::size_t i = 0; i < out.coeff.size(); ++i) out.coeff[i] += s * b.coeff[i];
  return out;
}

// Multiplies by exp(-|n| h): the exact propagator of the dissipation.
Spectrum propagate(const Spectrum& v, double h) {
  Spectrum out = v;
  const int n = v.n;
  for (int j = 0; j < n; ++j) {
    const double n1 = v.wavenumber(j);
    for (int k = 0; k <= n / 2; ++k) out.at(j, k) *= std::exp(-std::hypot(n1, double(k)) * h);
  }
  return out;
}

// Fourier multiplier with a symbol depending on (n1, n2) only.
template <class F>
Spectrum multiply(const Spectrum& v, F symbol) {
  Spectrum out = v;
  const int n = v.n;
  for (int j = 0; j < n; ++j) {
    const double n1 = v.wavenumber(j);
    const bool ny1 = j == n / 2;
    for (int k = 0; k <= n / 2; ++k) {
      const bool ny2 = k == n / 2;
      // dealiased fields carry no Nyquist content; zero it to keep the odd
      // symbols real-valued
      out.at(j, k) = (ny1 || ny2) ? cplx{} : out.at(j, k) * symbol(n1, double(k));
    }
  }
  return out;
}

// (1/2)||Lambda^s psi||^2 and ||Lambda^{s+1/2} psi||^2 and the flux
// (Lambda^{2s} psi, N), all on the half spectrum.
struct Energies {
  double half_energy = 0.0;
  double dissipation = 0.0;
  double flux = 0.0;
};

Energies energies(const Spectrum& v, const Spectrum& nl, double s) {
  Energies e;
  const int n = v.n;
  double h = 0, d = 0, f = 0;
  for (int j = 0; j < n; ++j) {
    const double n1 = v.wavenumber(j);
    for (int k = 0; k <= n / 2; ++k) {
      const double r = std::hypot(n1, double(k));
      if (r == 0.0) continue;
      const double w = (k == 0 || k == n / 2) ? 1.0 : 2.0;
      const double r2s = std::pow(r, 2 * s);
      const cplx c = v.at(j, k);
      h += w * r2s * std::norm(c);
      d += w * r2s * r * std::norm(c);
      f += w * r2s * (std::conj(c) * nl.at(j, k)).real();
    }
  }
  const double area = 4.0 * kPi * kPi;
  e.half_energy = 0.5 * area * h;
  e.dissipation = area * d;
  e.flux = area * f;
  return e;
}

Spectrum rk4(const Spectrum& v, double dt) {
  const Spectrum k1 = nonlinear_term(v);
  const Spectrum ev = propagate(v, 0.5 * dt);
  const Spectrum k2 = nonlinear_term(propagate(axpy(v, 0.5 * dt, k1), 0.5 * dt));
  const Spectrum k3 = nonlinear_term(axpy(ev, 0.5 * dt, k2));
  const Spectrum k4 = nonlinear_term(axpy(propagate(ev, 0.5 * dt), dt, propagate(k3, 0.5 * dt)));
  // v_new = E v + dt/6 (E k1 + 2 E_half (k2 + k3) + k4)
  Spectrum out = propagate(v, dt);
  const Spectrum ek1 = propagate(k1, dt);
  const Spectrum mid = propagate(axpy(k2, 1.0, k3), 0.5 * dt);
  for (std::size_t i = 0; i < out.coeff.size(); ++i) {
    out.coeff[i] += dt / 6.0 * (ek1.coeff[i] + 2.0 * mid.coeff[i] + k4.coeff[i]);
  }
  return out;
}

}  // namespace

Spectrum nonlinear_term(const Spectrum& v) {
  // u = R^perp psi = (-R2 psi, R1 psi), R_j symbol i n_j / |n|
  const Spectrum u1 = multiply(v, [](double n1, double n2) {
    const double r = std::hypot(n1, n2);
    return r == 0.0 ? cplx{} : cplx(0.0, -n2 / r);
  });
  const Spectrum u2 = multiply(v, [](double n1, double n2) {
    const double r = std::hypot(n1, n2);
    return r == 0.0 ? cplx{} : cplx(0.0, n1 / r);
  });
  const Spectrum d1 = multiply(v, [](double n1, double) { return cplx(0.0, n1); });
  const Spectrum d2 = multiply(v, [](double, double n2) { return cplx(0.0, n2); });
  const GridField a = spectral::inverse(u1), b = spectral::inverse(u2);
  const GridField c = spectral::inverse(d1), d = spectral::inverse(d2);
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = -(a[i] * c[i] + b[i] * d[i]);
  Spectrum out = spectral::forward(GridField(v.n, std::move(prod)));
  spectral::dealias(out);
  out.coeff[0] = 0.0;
  return out;
}

spectral::VectorField velocity(const GridField& psi) { return spectral::riesz_perp(psi); }

double max_speed(const GridField& psi) {
  const spectral::VectorField u = velocity(psi);
  double m = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) m = std::max(m, std::hypot(u.c1[i], u.c2[i]));
  return m;
}

double cfl_limit(const GridField& psi, double cfl) {
  const double speed = max_speed(psi);
  if (speed == 0.0) return std::numeric_limits<double>::infinity();
  return cfl * (kTwoPi / psi.n()) / speed;
}

GridField rhs(const GridField& psi) {
  require_mean_zero(psi);
  const Spectrum v = spectral::forward(psi);
  Spectrum r = nonlinear_term(v);
  const int n = v.n;
  for (int j = 0; j < n; ++j) {
    const double n1 = v.wavenumber(j);
    for (int k = 0; k <= n / 2; ++k) r.at(j, k) -= std::hypot(n1, double(k)) * v.at(j, k);
  }
  return spectral::inverse(r, true);
}

Telemetry measure(const GridField& psi, double t, double s) {
  Telemetry m;
  m.t = t;
  m.l2 = spectral::sobolev_norm(psi, 0.0);
  m.h1 = spectral::sobolev_norm(psi, 1.0);
  m.hs = spectral::sobolev_norm(psi, s);
  m.lambda_s_half = spectral::homogeneous_norm(psi, s + 0.5);
  const double d = spectral::homogeneous_norm(psi, 0.5);
  m.dissipation_rate = d * d;
  return m;
}

namespace {

SolverState advance(const SolverState& state, double dt, const SolverConfig& config,
                    LedgerEntry* ledger) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StepSizeError("dt must be positive and finite");
  require_mean_zero(state.field);
  const double limit = cfl_limit(state.field, config.cfl);
  if (dt > limit) {
    throw StepSizeError("dt = " + std::to_string(dt) + " violates CFL limit " +
                        std::to_string(limit));
  }
  const Spectrum v = spectral::forward(state.field);
  const Spectrum vn = rk4(v, dt);

  if (ledger) {
    const Spectrum vm = rk4(v, 0.5 * dt);
    const Energies e0 = energies(v, nonlinear_term(v), config.s);
    const Energies em = energies(vm, nonlinear_term(vm), config.s);
    const Energies e1 = energies(vn, nonlinear_term(vn), config.s);
    ledger->t0 = state.time;
    ledger->dt = dt;
    ledger->delta = e1.half_energy - e0.half_energy;
    ledger->dissipation = dt / 6.0 * (e0.dissipation + 4.0 * em.dissipation + e1.dissipation);
    ledger->flux = dt / 6.0 * (e0.flux + 4.0 * em.flux + e1.flux);
  }

  SolverState out;
  out.field = spectral::inverse(vn, true);
  out.time = state.time + dt;
  out.dt = dt;
  out.history = state.history;
  return out;
}

}  // namespace

SolverState step(const SolverState& state, double dt, const SolverConfig& config) {
  SolverState out = advance(state, dt, config, nullptr);
  out.history.push_back(measure(out.field, out.time, config.s));
  while (out.history.size() > config.history_capacity) out.history.pop_front();
  return out;
}

bool band_limited(const GridField& f, double tol) {
  const Spectrum s = spectral::forward(f);
  double cmax = 0.0, above = 0.0;
  const int cut = f.n() / 3;
  for (int j = 0; j < f.n(); ++j) {
    const int n1 = std::abs(s.wavenumber(j));
    for (int k = 0; k <= f.n() / 2; ++k) {
      const double a = std::abs(s.at(j, k));
      cmax = std::max(cmax, a);
      if (n1 > cut || k > cut) above = std::max(above, a);
    }
  }
  return above <= tol * cmax;
}

Trajectory solve(const GridField& psi0, double T, double out_every, const SolverConfig& config) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("final time must be >= 0");
  if (!(out_every > 0.0)) throw DomainError("output interval must be positive");
  require_mean_zero(psi0);
  if (!band_limited(psi0)) {
    throw DomainError("initial datum has content above the 2/3 dealiasing cutoff");
  }
  double dt = config.dt;
  if (dt <= 0.0) dt = std::min(config.max_dt, cfl_limit(psi0, config.cfl));

  Trajectory traj;
  SolverState st;
  st.field = psi0.remove_mean();
  st.time = 0.0;
  traj.snapshots.push_back({0.0, st.field});
  traj.telemetry.push_back(measure(st.field, 0.0, config.s));

  // output times k * out_every, plus T
  std::vector<double> outputs;
  for (int k = 1; k * out_every < T * (1 - 1e-12); ++k) outputs.push_back(k * out_every);
  if (T > 0.0) outputs.push_back(T);

  double t_prev = 0.0;
  for (double t_out : outputs) {
    const double span = t_out - t_prev;
    const auto steps = std::size_t(std::ceil(span / dt * (1 - 1e-12)));
    const double h = span / double(std::max<std::size_t>(steps, 1));
    traj.dt = std::max(traj.dt, h);
    for (std::size_t i = 0; i < std::max<std::size_t>(steps, 1); ++i) {
      LedgerEntry entry;
      st = advance(st, h, config, config.track_ledger ? &entry : nullptr);
      if (config.track_ledger) traj.ledger.push_back(entry);
      ++traj.steps;
    }
    st.time = t_out;  // remove accumulated rounding in the clock
    traj.snapshots.push_back({t_out, st.field});
    traj.telemetry.push_back(measure(st.field, t_out, config.s));
    t_prev = t_out;
  }
  return traj;
}

double fitted_budget_constant(const Trajectory& traj, double s) {
  if (traj.snapshots.size() < 2) return 0.0;
  double lhs = 0.0, coupling = 0.0;
  std::vector<double> diss, coup;
  for (const Snapshot& snap : traj.snapshots) {
    const double a = spectral::homogeneous_norm(snap.field, s + 0.5);
    const double b = spectral::homogeneous_norm(snap.field, 1.5);
    const double c = spectral::homogeneous_norm(snap.field, s);
    diss.push_back(a * a);
    coup.push_back(b * b * c * c);
  }
  for (std::size_t i = 1; i < traj.snapshots.size(); ++i) {
    const double h = traj.snapshots[i].time - traj.snapshots[i - 1].time;
    lhs += 0.5 * h * (diss[i] + diss[i - 1]);
    coupling += 0.5 * h * (coup[i] + coup[i - 1]);
  }
  const double e0 = spectral::homogeneous_norm(traj.snapshots.front().field, s);
  const double excess = lhs - 0.5 * e0 * e0;
  if (excess <= 0.0) return 0.0;
  return coupling > 0.0 ? excess / coupling : std::numeric_limits<double>::infinity();
}

}  // namespace sqg::solver
