// sqgnl: command line driver for the operator, solver and PINN experiments.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "experiments.hpp"
#include "sqg/io.hpp"
#include "sqg/lattice_kernels.hpp"
#include "sqg/nonlocal_ops.hpp"
#include "sqg/parallel.hpp"

using namespace sqg;
using exp::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Rows of comma separated numbers; a first line that does not parse is a header.
std::vector<std::vector<double>> read_csv(const std::string& path, std::size_t columns) {
  std::istringstream in(io::read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        ok = false;
        break;
      }
    }
    if (!ok && first) {
      first = false;
      continue;
    }
    first = false;
    if (!ok || row.size() != columns) {
      throw FormatError(path + ": expected " + std::to_string(columns) + " numeric columns");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(std::stoi(cell));
  return out;
}

json load_json(const std::string& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

int finish(const exp::RunResult& r) {
  for (const exp::Check& c : r.checks) {
    std::printf("%-28s %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL");
  }
  return r.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-periodic fractional Laplacian / Riesz operators, SQG reference solver and PINN experiments"};
  app.set_version_flag("--version", std::string(SQG_VERSION));
  app.require_subcommand(1);
  app.footer("Threads: SQG_THREADS (default 1). Exit status 0 means every check passed.");

  // kernel-dump
  auto* kd = app.add_subcommand("kernel-dump", "Tabulate the lattice kernels on a grid over T^2");
  int kd_m = lattice::kDefaultTruncation, kd_n = 16;
  std::string kd_out = "kernel.csv";
  kd->add_option("--truncation,-M", kd_m, "Lattice shell radius")->check(CLI::Range(1, 4096));
  kd->add_option("--points,-n", kd_n, "Points per side (cell centres)")->check(CLI::Range(1, 1024));
  kd->add_option("--out,-o", kd_out, "CSV output");

  // op-apply
  auto* oa = app.add_subcommand("op-apply", "Apply Lambda-tilde or R-tilde to a field file");
  std::string oa_op, oa_in, oa_targets, oa_out = "op.csv", oa_quad = "reporting";
  int oa_m = lattice::kDefaultTruncation;
  oa->add_option("--op", oa_op, "lambda or riesz")->required()->check(CLI::IsMember({"lambda", "riesz"}));
  oa->add_option("--input", oa_in, "Field file")->required();
  oa->add_option("--targets", oa_targets, "CSV of x1,x2")->required();
  oa->add_option("--out", oa_out, "CSV output");
  oa->add_option("--quadrature", oa_quad, "oracle, reporting or training");
  oa->add_option("--truncation", oa_m, "Lattice shell radius");

  // sqg-solve
  auto* ss = app.add_subcommand("sqg-solve", "Pseudospectral critical SQG solve");
  exp::SolveConfig scfg;
  std::string ss_init = "smoke", ss_dir = "snapshots";
  ss->add_option("--init", ss_init, "Field file or preset (cos, smoke)");
  ss->add_option("--T", scfg.T, "Final time")->check(CLI::PositiveNumber);
  ss->add_option("--N", scfg.n, "Grid size for presets");
  ss->add_option("--out-every", scfg.out_every, "Snapshot interval")->check(CLI::PositiveNumber);
  ss->add_option("--snapshots", ss_dir, "Output directory");
  ss->add_option("--dt", scfg.dt, "Fixed step; 0 picks one from the CFL limit");
  ss->add_option("--s", scfg.s, "Telemetry H^s index");
  ss->add_option("--cfl", scfg.cfl, "CFL number");

  // verify-ops
  auto* vo = app.add_subcommand("verify-ops", "Numerical property suite for the operators");
  std::string vo_config, vo_out = "verify_ops";
  bool tamper = false, tol_zero = false;
  vo->add_option("--config", vo_config, "Experiment JSON (kind verify-ops)");
  vo->add_option("--out", vo_out, "Output directory (overrides the config)");
  vo->add_flag("--debug-tamper-kernel", tamper, "Flip the sign of the kernel (negative control)");
  vo->add_flag("--debug-tolerance-zero", tol_zero, "Set every tolerance to zero (negative control)");

  // sqg-convergence
  auto* sc = app.add_subcommand("sqg-convergence", "Solver self-convergence study");
  std::string sc_config, sc_out = "sqg_convergence";
  sc->add_option("--config", sc_config, "Experiment JSON (kind sqg-convergence)");
  sc->add_option("--out", sc_out, "Output directory (overrides the config)");

  // pinn-train
  auto* pt = app.add_subcommand("pinn-train", "Train tanh networks on the residual loss");
  std::string pt_config, pt_out;
  pt->add_option("--config", pt_config, "Experiment JSON (kind pinn-train)")->required();
  pt->add_option("--out", pt_out, "Output directory (overrides the config)");

  // pinn-report
  auto* pr = app.add_subcommand("pinn-report", "Error report for a saved network");
  std::string pr_ckpt, pr_ref, pr_config, pr_out = "pinn_report";
  pr->add_option("--checkpoint", pr_ckpt, "Network file")->required();
  pr->add_option("--reference", pr_ref, "Snapshot directory from sqg-solve");
  pr->add_option("--config", pr_config, "Experiment JSON (kind pinn-report or pinn-train)");
  pr->add_option("--out", pr_out, "Output directory");

  // bound-check
  auto* bc = app.add_subcommand("bound-check", "Fit the total-error bound constant to reports");
  std::vector<std::string> bc_reports;
  exp::BoundConfig bcfg;
  std::string bc_out = "bound_check";
  bc->add_option("--reports", bc_reports, "report_*.json files")->required();
  bc->add_option("--c-fit", bcfg.c_fit, "Fixed constant; default fits it at the shortest run");
  bc->add_option("--seed-spread", bcfg.seed_spread, "Max/min c_min allowed across seeds");
  bc->add_option("--out", bc_out, "Output directory");

  // net-init
  auto* ni = app.add_subcommand("net-init", "Write a Xavier-initialised network");
  std::string ni_arch = "3,64,64,64,1", ni_out = "net.tnet";
  std::uint64_t ni_seed = net::kDefaultSeed;
  ni->add_option("--arch", ni_arch, "Layer sizes, comma separated");
  ni->add_option("--seed", ni_seed, "Seed");
  ni->add_option("--out", ni_out, "Network file");

  // net-eval
  auto* ne = app.add_subcommand("net-eval", "Evaluate a network (or a derivative) at points");
  std::string ne_ckpt, ne_points, ne_out = "net_eval.csv", ne_deriv = "0,0,0";
  ne->add_option("--checkpoint", ne_ckpt, "Network file")->required();
  ne->add_option("--points", ne_points, "CSV of t,x1,x2")->required();
  ne->add_option("--derivative", ne_deriv, "Orders in t,x1,x2");
  ne->add_option("--out", ne_out, "CSV output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*kd) {
      std::string csv = "y1,y2,K,Rstar1,Rstar2,tail_bound_K,tail_bound_Rstar\n";
      const double h = kTwoPi / kd_n;
      for (int a = 0; a < kd_n; ++a)
        for (int b = 0; b < kd_n; ++b) {
          const Vec2 y{-kPi + (a + 0.5) * h, -kPi + (b + 0.5) * h};
          const Vec2 r = lattice::eval_Rstar(y, kd_m);
          csv += fmt(y.x1) + "," + fmt(y.x2) + "," + fmt(lattice::eval_K(y, kd_m)) + "," +
                 fmt(r.x1) + "," + fmt(r.x2) + "," + fmt(lattice::tail_bound_K(kd_m)) + "," +
                 fmt(lattice::tail_bound_Rstar(kd_m)) + "\n";
        }
      io::write_atomic(kd_out, csv);
      return 0;
    }
    if (*oa) {
      const io::FieldSnapshot f = io::read_field(oa_in);
      std::vector<Vec2> xs;
      int extent = 2;
      for (const auto& row : read_csv(oa_targets, 2)) {
        xs.push_back({row[0], row[1]});
        extent = std::max(extent, nonlocal::required_extent(xs.back()));
      }
      const nonlocal::OperatorContext ctx(exp::quadrature_preset(oa_quad), oa_m);
      const BoxFunction box = spectral::to_box_function(f.field, extent, 1);
      std::string csv;
      if (oa_op == "lambda") {
        csv = "x1,x2,lambda\n";
        const auto v = nonlocal::apply_lambda_tilde_field(box, xs, ctx);
        for (std::size_t i = 0; i < xs.size(); ++i) {
          csv += fmt(xs[i].x1) + "," + fmt(xs[i].x2) + "," + fmt(v[i]) + "\n";
        }
      } else {
        csv = "x1,x2,riesz1,riesz2\n";
        const auto v = nonlocal::apply_riesz_tilde_field(box, xs, ctx);
        for (std::size_t i = 0; i < xs.size(); ++i) {
          csv += fmt(xs[i].x1) + "," + fmt(xs[i].x2) + "," + fmt(v[i].x1) + "," + fmt(v[i].x2) + "\n";
        }
      }
      io::write_atomic(oa_out, csv);
      return 0;
    }
    if (*ss) {
      if (ss_init == "cos" || ss_init == "smoke") {
        scfg.initial = ss_init;
      } else {
        scfg.input = ss_init;
      }
      exp::RunResult r = exp::run_sqg_solve(scfg);
      json cfg = {{"init", ss_init}, {"T", scfg.T}, {"N", scfg.n}, {"out_every", scfg.out_every},
                  {"dt", scfg.dt}, {"s", scfg.s}, {"cfl", scfg.cfl}};
      exp::write_outputs(ss_dir, "sqg-solve", cfg, r);
      return finish(r);
    }
    if (*vo || *sc) {
      const bool verify = bool(*vo);
      const std::string& path = verify ? vo_config : sc_config;
      json j = path.empty() ? json{{"kind", verify ? "verify-ops" : "sqg-convergence"}} : load_json(path);
      exp::ExperimentConfig cfg = exp::parse_experiment(j);
      if ((cfg.kind == exp::Kind::VerifyOps) != verify) throw ConfigError("config kind does not match the subcommand");
      cfg.output_dir = verify ? vo_out : sc_out;
      if (verify && tamper) {
        cfg.verify.debug_tamper_kernel = true;
        cfg.source["debug_tamper_kernel"] = true;
      }
      if (verify && tol_zero) {
        auto& v = cfg.verify;
        v.p2_refinement = v.r2_refinement = v.r3_refinement = 0.0;
        v.p3_refinement = 1.0;
        v.p3_ladder_growth = 0.0;
        v.r3_c_max = 0.0;
        cfg.source["debug_tolerance_zero"] = true;
      }
      const exp::RunResult r = exp::run_experiment(cfg);
      return finish(r);
    }
    if (*pt) {
      exp::ExperimentConfig cfg = exp::parse_experiment(load_json(pt_config));
      if (cfg.kind != exp::Kind::PinnTrain) throw ConfigError("config kind must be pinn-train");
      if (!pt_out.empty()) cfg.output_dir = pt_out;
      const exp::RunResult r = exp::run_experiment(cfg);
      return finish(r);
    }
    if (*pr) {
      exp::PinnConfig pc = exp::smoke_preset();
      json src = {{"checkpoint", pr_ckpt}, {"reference", pr_ref}};
      if (!pr_config.empty()) {
        json j = load_json(pr_config);
        j["kind"] = "pinn-report";
        j["params"]["network"] = pr_ckpt;
        pc = exp::parse_experiment(j).pinn;
        src["config"] = j;
      }
      if (!pr_ref.empty()) pc.reference = pr_ref;
      const net::MlpParams p = io::read_network(pr_ckpt);
      exp::RunResult r = exp::run_pinn_report(pc, p);
      exp::write_outputs(pr_out, "pinn-report", src, r);
      std::cout << r.report.dump(2) << "\n";
      return finish(r);
    }
    if (*bc) {
      std::vector<exp::BoundRow> rows;
      for (const std::string& path : bc_reports) rows.push_back(exp::bound_row_from_report(load_json(path)));
      exp::RunResult r = exp::run_bound_check(rows, bcfg);
      json src = {{"reports", bc_reports}, {"c_fit", bcfg.c_fit}, {"seed_spread", bcfg.seed_spread}};
      exp::write_outputs(bc_out, "bound-check", src, r);
      std::cout << r.report.dump(2) << "\n";
      return finish(r);
    }
    if (*ni) {
      io::write_network(ni_out, net::MlpParams::xavier(parse_ints(ni_arch), ni_seed));
      return 0;
    }
    if (*ne) {
      const net::MlpParams p = io::read_network(ne_ckpt);
      const std::vector<int> d = parse_ints(ne_deriv);
      if (d.size() != 3) throw ConfigError("--derivative needs three orders");
      const StMultiIndex a{d[0], d[1], d[2]};
      std::string csv = "t,x1,x2,value\n";
      for (const auto& row : read_csv(ne_points, 3)) {
        const double v = net::eval(p, {row[0], row[1], row[2]}, a, std::max(a.order(), 1));
        csv += fmt(row[0]) + "," + fmt(row[1]) + "," + fmt(row[2]) + "," + fmt(v) + "\n";
      }
      io::write_atomic(ne_out, csv);
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "sqgnl: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sqgnl: %s\n", e.what());
    return 2;
  }
  return 0;
}
