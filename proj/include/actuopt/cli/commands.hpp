#pragma once

// Command implementations behind the actuopt executable. Each returns the
// process exit code and writes its artifacts into the output directory.
//
// Exit codes: 0 success, 1 a check or convergence test failed, 2 the
// forward problem blew up, 64 bad usage or configuration.

#include "actuopt/cli/experiment.hpp"
#include "actuopt/cli/output.hpp"
#include "actuopt/verification.hpp"

#include <chrono>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace actuopt::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kBlowUp = 2, kUsage = 64 };

struct CommandOptions {
  fs::path out_dir = "out";
  int threads = 1;
  bool corrupt_gradient = false;  // gradcheck negative control
  std::ostream* log = &std::cerr;
};

namespace command_detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline const char* model_name(const ExperimentConfig& c) { return c.model == ModelKind::beam ? "beam" : "wave"; }

/// Common leading fields of every summary.json.
inline Json summary_head(const char* command, const ExperimentConfig& c) {
  Json j;
  j["command"] = command;
  j["model"] = model_name(c);
  j["config"] = serialize_config(c);
  return j;
}

inline void finish_summary(Json& j, Clock::time_point t0, std::vector<std::string> files, const fs::path& dir) {
  files.push_back("summary.json");
  j["wall_time_s"] = seconds_since(t0);
  j["files"] = files;
  save_json(dir / "summary.json", j);
}

inline std::vector<std::string> design_columns(Eigen::Index d) {
  std::vector<std::string> cols;
  for (Eigen::Index k = 0; k < d; ++k) cols.push_back("r" + std::to_string(k + 1));
  return cols;
}

}  // namespace command_detail

template <class Model>
int cmd_simulate(const Model& model, const ExperimentConfig& c, const CommandOptions& opt) {
  using namespace command_detail;
  const auto t0 = Clock::now();
  const TimeGrid grid = time_grid(c);
  const StateVec x0 = initial_state(model, c);
  const ControlSignal u = evaluate_signal(c.u, grid);
  const ActuatorDesign r = initial_design(model, c);
  const Eigen::Index probe = probe_index(model, c);

  Trajectory x;
  int code = kOk;
  int truncated_at = -1;
  try {
    x = solve_forward(model, x0, u, r, grid);
  } catch (const BlowUpError& e) {
    x = e.partial();
    truncated_at = e.step();
    code = kBlowUp;
    *opt.log << "simulate: " << e.what() << "\n";
  }

  CsvTable csv({"t", "energy", "w_probe", "u"});
  for (std::size_t n = 0; n < x.size(); ++n) {
    const int i = static_cast<int>(n);
    csv.row({grid.time(i), energy_inner(model, x[n], x[n]), x[n][probe], u[i]});
  }
  if (truncated_at >= 0) csv.comment("truncated: non-finite state at step " + std::to_string(truncated_at));
  csv.save(opt.out_dir / "trajectory.csv");

  Json j = summary_head("simulate", c);
  j["probe_node"] = to_json(model.node_positions().row(probe).transpose());
  j["r"] = to_json(r);
  j["completed"] = truncated_at < 0;
  if (truncated_at < 0) {
    j["J"] = cost_eval(model, cost_spec(model, c), x, u, grid);
    const double e0 = energy_inner(model, x.front(), x.front());
    double drift = 0.0;
    for (const auto& s : x) drift = std::max(drift, std::abs(energy_inner(model, s, s) - e0));
    j["energy_drift_relative"] = e0 > 0.0 ? drift / e0 : drift;
  } else {
    j["blowup_step"] = truncated_at;
  }
  finish_summary(j, t0, {"trajectory.csv"}, opt.out_dir);
  return code;
}

template <class Model>
int cmd_gradcheck(const Model& model, const ExperimentConfig& c, const CommandOptions& opt) {
  using namespace command_detail;
  constexpr double kDualityTol = 1e-10;
  constexpr double kFdTol = 1e-5;
  const auto t0 = Clock::now();
  const TimeGrid grid = time_grid(c);
  const StateVec x0 = initial_state(model, c);
  const CostSpec cost = cost_spec(model, c);
  const ControlSignal u = evaluate_signal(c.check_u, grid);
  const ActuatorDesign r = check_design(model, c);

  Trajectory x;
  try {
    x = solve_forward(model, x0, u, r, grid);
  } catch (const BlowUpError& e) {
    *opt.log << "gradcheck: " << e.what() << "\n";
    return kBlowUp;
  }
  const AdjointState adj = solve_adjoint(model, cost, x, r, grid);
  GradientReport g = gradient_from_adjoint(model, cost, u, r, x, adj, grid);
  if (opt.corrupt_gradient) {
    g.grad_u *= 1.0 + 1e-3;
    g.grad_r *= 1.0 + 1e-3;
  }

  std::mt19937_64 rng(static_cast<std::uint64_t>(c.seed));
  std::normal_distribution<double> normal;

  Json dirs = Json::array();
  double duality = 0.0, fd_u = 0.0, fd_r = 0.0;
  for (int d = 0; d < c.directions; ++d) {
    const ControlSignal du = random_smooth_signal(rng, grid);
    Trajectory x_hat(grid.n_nodes());
    for (auto& s : x_hat) {
      s.resize(model.state_size());
      for (auto& v : s) v = normal(rng);
    }
    Vector dr(model.design_size());
    for (auto& v : dr) v = normal(rng);
    dr.normalize();

    const double dual = duality_check(model, x, r, du, x_hat, grid);
    const FdCheck cu = fd_check_u(model, cost, x0, u, r, grid, du, g);
    const FdCheck cr = fd_check_r(model, cost, x0, u, r, grid, dr, g);
    duality = std::max(duality, dual);
    fd_u = std::max(fd_u, cu.rel_error);
    fd_r = std::max(fd_r, cr.rel_error);

    Json item;
    item["duality"] = dual;
    item["fd_u"] = {{"analytic", cu.analytic}, {"fd", cu.fd}, {"step", cu.step}, {"rel_error", cu.rel_error}};
    item["fd_r"] = {{"analytic", cr.analytic}, {"fd", cr.fd}, {"step", cr.step}, {"rel_error", cr.rel_error}};
    dirs.push_back(item);
  }

  const bool ok_dual = duality <= kDualityTol;
  const bool ok_u = fd_u <= kFdTol;
  const bool ok_r = fd_r <= kFdTol;

  Json report;
  report["J"] = g.J;
  report["r"] = to_json(r);
  report["corrupted_gradient"] = opt.corrupt_gradient;
  report["tolerances"] = {{"duality", kDualityTol}, {"fd", kFdTol}};
  report["max_duality"] = duality;
  report["max_fd_u"] = fd_u;
  report["max_fd_r"] = fd_r;
  report["passed"] = {{"duality", ok_dual}, {"fd_u", ok_u}, {"fd_r", ok_r}};
  report["directions"] = dirs;
  save_json(opt.out_dir / "gradcheck.json", report);

  Json j = summary_head("gradcheck", c);
  j["max_duality"] = duality;
  j["max_fd_u"] = fd_u;
  j["max_fd_r"] = fd_r;
  j["passed"] = ok_dual && ok_u && ok_r;
  finish_summary(j, t0, {"gradcheck.json"}, opt.out_dir);

  if (!ok_dual) *opt.log << "gradcheck: duality check failed (" << duality << " > " << kDualityTol << ")\n";
  if (!ok_u) *opt.log << "gradcheck: fd_u check failed (" << fd_u << " > " << kFdTol << ")\n";
  if (!ok_r) *opt.log << "gradcheck: fd_r check failed (" << fd_r << " > " << kFdTol << ")\n";
  return ok_dual && ok_u && ok_r ? kOk : kCheckFailed;
}

template <class Model>
int cmd_optimize(const Model& model, const ExperimentConfig& c, const CommandOptions& opt) {
  using namespace command_detail;
  const auto t0 = Clock::now();
  const TimeGrid grid = time_grid(c);
  const StateVec x0 = initial_state(model, c);
  const CostSpec cost = cost_spec(model, c);
  const ProjectionSpec spec = projection_spec(model, c);
  const ControlSignal u0 = evaluate_signal(c.u, grid);
  const ActuatorDesign r0 = initial_design(model, c);

  const OptimRun run = optimize(model, cost, x0, u0, r0, spec, c.optimizer, grid);

  std::vector<std::string> cols{"iter", "J", "res_u", "res_r"};
  for (const auto& name : design_columns(model.design_size())) cols.push_back(name);
  cols.push_back("step_u");
  cols.push_back("step_r");
  cols.push_back("u_norm");
  CsvTable hist(cols);
  Json j_hist = Json::array();
  for (const auto& it : run.history) {
    std::vector<double> row{static_cast<double>(it.iter), it.J, it.res_u, it.res_r};
    for (Eigen::Index k = 0; k < it.r.size(); ++k) row.push_back(it.r[k]);
    row.push_back(it.step_u);
    row.push_back(it.step_r);
    row.push_back(it.u_norm);
    hist.row(row);
    j_hist.push_back(it.J);
  }
  hist.save(opt.out_dir / "optim_history.csv");
  std::vector<std::string> files{"optim_history.csv"};

  Json j = summary_head("optimize", c);
  j["converged"] = run.converged;
  j["failed"] = run.failed;
  j["message"] = run.message;
  j["iterations"] = run.history.empty() ? 0 : run.history.back().iter;
  j["J_history"] = j_hist;

  if (!run.failed) {
    CsvTable uc({"t", "u"});
    for (int n = 0; n <= grid.n_steps; ++n) uc.row({grid.time(n), run.u[n]});
    uc.save(opt.out_dir / "optimal_u.csv");
    Json jr;
    jr["r"] = to_json(run.r);
    jr["J"] = run.J;
    save_json(opt.out_dir / "optimal_r.json", jr);
    files.push_back("optimal_u.csv");
    files.push_back("optimal_r.json");

    const auto res = optimality_residual(model, cost, run.u, run.r, run.x, run.p, grid, &spec);
    j["J"] = run.J;
    j["r"] = to_json(run.r);
    j["u_norm"] = l2_norm(run.u, grid);
    j["final_residuals"] = {{"res_u", res.res_u},
                            {"res_r", to_json(res.res_r)},
                            {"projected_u", res.proj_u},
                            {"projected_r", res.proj_r}};
  }
  finish_summary(j, t0, files, opt.out_dir);
  if (run.failed) {
    *opt.log << "optimize: " << run.message << "\n";
    return kBlowUp;
  }
  if (!run.converged) *opt.log << "optimize: not converged: " << run.message << "\n";
  return run.converged ? kOk : kCheckFailed;
}

template <class Model>
int cmd_gridsearch(const Model& model, const ExperimentConfig& c, const CommandOptions& opt) {
  using namespace command_detail;
  const auto t0 = Clock::now();
  const TimeGrid grid = time_grid(c);
  const StateVec x0 = initial_state(model, c);
  const CostSpec cost = cost_spec(model, c);
  const ProjectionSpec spec = projection_spec(model, c);

  const GridSearchResult gs = grid_search_r(model, cost, x0, spec, c.optimizer, grid, c.n_grid, opt.threads);

  std::vector<std::string> cols = design_columns(model.design_size());
  cols.push_back("J");
  cols.push_back("converged");
  cols.push_back("failed");
  CsvTable csv(cols);
  for (const auto& pt : gs.points) {
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < pt.r.size(); ++k) row.push_back(format_double(pt.r[k]));
    row.push_back(pt.failed ? "nan" : format_double(pt.J));
    row.push_back(pt.converged ? "1" : "0");
    row.push_back(pt.failed ? "1" : "0");
    csv.row_strings(row);
  }
  csv.save(opt.out_dir / "landscape.csv");

  Json j = summary_head("gridsearch", c);
  j["n_points"] = gs.points.size();
  j["threads"] = opt.threads;
  if (gs.best) {
    j["r_best"] = to_json(gs.r_best);
    j["J_best"] = gs.J_best;
  }
  finish_summary(j, t0, {"landscape.csv"}, opt.out_dir);
  if (!gs.best) {
    *opt.log << "gridsearch: every grid point failed\n";
    return kCheckFailed;
  }
  return kOk;
}

template <class Model>
int cmd_oracle_compare(const Model& model, const ExperimentConfig& c, const CommandOptions& opt) {
  using namespace command_detail;
  constexpr double kTol = 1e-2;
  const auto t0 = Clock::now();
  const TimeGrid grid = time_grid(c);
  const StateVec x0 = initial_state(model, c);
  const CostSpec cost = cost_spec(model, c);
  const ControlSignal u = evaluate_signal(c.u, grid);
  const ActuatorDesign r = initial_design(model, c);

  Trajectory x;
  try {
    x = solve_forward(model, x0, u, r, grid);
  } catch (const BlowUpError& e) {
    *opt.log << "oracle-compare: " << e.what() << "\n";
    return kBlowUp;
  }
  const AdjointState discrete = solve_adjoint(model, cost, x, r, grid);
  const Trajectory continuous = integrate_continuous_adjoint(model, cost, x, grid);
  const AdjointComparison cmp = compare_adjoints(discrete, continuous);
  bool ok = cmp.linf_relative <= kTol;

  Json report;
  report["linf_relative"] = cmp.linf_relative;
  report["linf_relative_w"] = cmp.linf_relative_w;
  report["linf_relative_v"] = cmp.linf_relative_v;
  report["max_abs_reference"] = cmp.max_abs_reference;
  report["tolerance"] = kTol;

  if constexpr (std::is_same_v<Model, BeamModel>) {
    const GreensAgreement ga = greens_agreement(model.params(), {32, 64, 128});
    const double min_order = *std::min_element(ga.orders.begin(), ga.orders.end());
    const bool ok_green = min_order >= 1.8;
    report["greens"] = {{"cells", ga.cells}, {"errors", ga.errors}, {"orders", ga.orders}, {"passed", ok_green}};
    if (!ok_green) *opt.log << "oracle-compare: Green's-function agreement order " << min_order << " < 1.8\n";
    ok = ok && ok_green;
  }
  report["passed"] = ok;
  save_json(opt.out_dir / "oracle_compare.json", report);

  Json j = summary_head("oracle-compare", c);
  j["linf_relative"] = cmp.linf_relative;
  j["passed"] = ok;
  finish_summary(j, t0, {"oracle_compare.json"}, opt.out_dir);
  if (cmp.linf_relative > kTol)
    *opt.log << "oracle-compare: adjoint mismatch " << cmp.linf_relative << " > " << kTol << "\n";
  return ok ? kOk : kCheckFailed;
}

/// Dispatch by command name.
inline int run_command(const std::string& command, const ExperimentConfig& c, const CommandOptions& opt) {
  return with_model(c, [&](const auto& model) -> int {
    if (command == "simulate") return cmd_simulate(model, c, opt);
    if (command == "gradcheck") return cmd_gradcheck(model, c, opt);
    if (command == "optimize") return cmd_optimize(model, c, opt);
    if (command == "gridsearch") return cmd_gridsearch(model, c, opt);
    if (command == "oracle-compare") return cmd_oracle_compare(model, c, opt);
    *opt.log << "unknown command '" << command << "'\n";
    return kUsage;
  });
}

}  // namespace actuopt::cli
