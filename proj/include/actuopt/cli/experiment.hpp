#pragma once

// Turns an ExperimentConfig into model objects, initial states, controls,
// cost weights and admissible sets.

#include "actuopt/cli/config.hpp"

#include <cmath>
#include <numbers>

namespace actuopt::cli {

inline BeamModel make_beam(const ExperimentConfig& c) { return BeamModel(c.beam, c.beam_width); }
inline WaveModel make_wave(const ExperimentConfig& c) { return WaveModel(c.wave, c.wave_width); }

/// Call fn with the configured model.
template <class Fn>
decltype(auto) with_model(const ExperimentConfig& c, Fn&& fn) {
  if (c.model == ModelKind::beam) return fn(make_beam(c));
  return fn(make_wave(c));
}

inline Vector domain_extent(const BeamModel& m) {
  Vector e(1);
  e << m.params().length;
  return e;
}

inline Vector domain_extent(const WaveModel& m) {
  Vector e(2);
  e << m.params().lx, m.params().ly;
  return e;
}

/// Evaluate a spatial profile at the model's unknown nodes.
template <class Model>
Vector evaluate_profile(const Model& model, const std::string& text) {
  const Expression e = parse_expression(text, "profile");
  const Matrix& pos = model.node_positions();
  const Vector ext = domain_extent(model);
  const Eigen::Index dims = pos.cols();
  const double pi = std::numbers::pi;
  Vector out(pos.rows());
  for (Eigen::Index k = 0; k < pos.rows(); ++k) {
    double v = 0.0;
    if (e.name == "zero") {
      v = 0.0;
    } else if (e.name == "uniform") {
      v = e.args.at(0);
    } else if (e.name == "mode") {
      v = e.args.at(0);
      for (Eigen::Index d = 0; d < dims; ++d) {
        const double m = (d == 1 && e.args.size() == 3) ? e.args[2] : e.args.at(1);
        v *= std::sin(m * pi * pos(k, d) / ext[d]);
      }
    } else if (e.name == "gaussian") {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < dims; ++d) r2 += std::pow(pos(k, d) - e.args.at(2 + d), 2);
      v = e.args.at(0) * std::exp(-r2 / (2.0 * e.args.at(1) * e.args.at(1)));
    } else {
      throw ConfigError("unknown profile '" + text + "'");
    }
    out[k] = v;
  }
  return out;
}

/// Cost weight q(x): uniform(v) or gaussian(center..., width), peak one.
template <class Model>
Vector evaluate_weight(const Model& model, const std::string& text) {
  const Expression e = parse_expression(text, "weight");
  const Matrix& pos = model.node_positions();
  Vector out(pos.rows());
  for (Eigen::Index k = 0; k < pos.rows(); ++k) {
    if (e.name == "uniform") {
      out[k] = e.args.at(0);
    } else if (e.name == "gaussian") {
      const double width = e.args.back();
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < pos.cols(); ++d) r2 += std::pow(pos(k, d) - e.args.at(d), 2);
      out[k] = std::exp(-r2 / (2.0 * width * width));
    } else {
      throw ConfigError("unknown weight '" + text + "'");
    }
  }
  return out;
}

/// Control signal sampled on the time nodes.
inline ControlSignal evaluate_signal(const std::string& text, const TimeGrid& grid) {
  const Expression e = parse_expression(text, "signal");
  ControlSignal u(grid.n_nodes());
  for (int n = 0; n <= grid.n_steps; ++n) {
    const double t = grid.time(n);
    if (e.name == "zero") u[n] = 0.0;
    else if (e.name == "constant") u[n] = e.args.at(0);
    else if (e.name == "sine") u[n] = e.args.at(0) * std::sin(e.args.at(1) * t + (e.args.size() > 2 ? e.args[2] : 0.0));
    else throw ConfigError("unknown signal '" + text + "'");
  }
  return u;
}

inline TimeGrid time_grid(const ExperimentConfig& c) { return TimeGrid{c.tau, c.n_steps}; }

template <class Model>
StateVec initial_state(const Model& model, const ExperimentConfig& c) {
  return make_state(evaluate_profile(model, c.w0), evaluate_profile(model, c.v0));
}

template <class Model>
CostSpec cost_spec(const Model& model, const ExperimentConfig& c) {
  CostSpec cost{evaluate_weight(model, c.q1), evaluate_weight(model, c.q2), c.r_weight};
  cost.validate(model.dof_count());
  return cost;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Admissible sets; an explicit box must lie inside the model's valid box.
template <class Model>
ProjectionSpec projection_spec(const Model& model, const ExperimentConfig& c) {
  const auto [lo, hi] = model.design_box();
  ProjectionSpec spec{c.r_ad, lo, hi};
  if (!c.r_lower.empty()) {
    spec.r_lower = to_vector(c.r_lower);
    spec.r_upper = to_vector(c.r_upper);
    if ((spec.r_lower.array() < lo.array() - 1e-12).any() || (spec.r_upper.array() > hi.array() + 1e-12).any())
      throw ConfigError("[admissible] design box leaves the model's valid region");
  }
  spec.validate();
  return spec;
}

/// Configured design, or the box centre; projected onto the box.
template <class Model>
ActuatorDesign initial_design(const Model& model, const ExperimentConfig& c) {
  const ProjectionSpec spec = projection_spec(model, c);
  if (c.r.empty()) return spec.box_center();
  return project_r(to_vector(c.r), spec);
}

/// Design used by gradcheck: configured, or the lower quarter point of the box.
template <class Model>
ActuatorDesign check_design(const Model& model, const ExperimentConfig& c) {
  const ProjectionSpec spec = projection_spec(model, c);
  if (c.check_r.empty()) return spec.r_lower + 0.25 * (spec.r_upper - spec.r_lower);
  return project_r(to_vector(c.check_r), spec);
}

/// Index of the unknown node closest to the probe point (domain centre by default).
template <class Model>
Eigen::Index probe_index(const Model& model, const ExperimentConfig& c) {
  const Matrix& pos = model.node_positions();
  const Vector target = c.probe.empty() ? Vector(0.5 * domain_extent(model)) : to_vector(c.probe);
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < pos.rows(); ++k) {
    const double d = (pos.row(k).transpose() - target).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace actuopt::cli
