#pragma once

#include "actuopt/core_system.hpp"

#include <algorithm>
#include <cmath>

namespace actuopt {

/// U_ad = { u : ||u||_{L2(0,tau)} <= r_ad },  K_ad = box [r_lower, r_upper].
struct ProjectionSpec {
  double r_ad = 100.0;
  Vector r_lower;
  Vector r_upper;

  void validate() const {
    if (!(r_ad > 0.0) || !std::isfinite(r_ad)) throw UsageError("ProjectionSpec: R_ad must be positive");
    if (r_lower.size() != r_upper.size() || r_lower.size() == 0)
      throw UsageError("ProjectionSpec: design box bounds must have equal nonzero length");
    if ((r_lower.array() > r_upper.array()).any() || !r_lower.allFinite() || !r_upper.allFinite())
      throw UsageError("ProjectionSpec: design box is empty");
  }

  Vector box_center() const { return 0.5 * (r_lower + r_upper); }
};

/// Radial projection onto the L2(0, tau) ball.
inline ControlSignal project_u(const ControlSignal& u, const ProjectionSpec& spec, const TimeGrid& grid) {
  const double norm = l2_norm(u, grid);
  if (norm <= spec.r_ad) return u;
  ControlSignal out = u * (spec.r_ad / norm);
  // Radial scaling can overshoot the radius by one ulp; nudge until inside.
  while (l2_norm(out, grid) > spec.r_ad) out *= (1.0 - 1e-15);
  return out;
}

/// Componentwise clamp to the design box.
inline ActuatorDesign project_r(const ActuatorDesign& r, const ProjectionSpec& spec) {
  if (r.size() != spec.r_lower.size()) throw UsageError("project_r: design dimension mismatch");
  return r.cwiseMax(spec.r_lower).cwiseMin(spec.r_upper);
}

}  // namespace actuopt
