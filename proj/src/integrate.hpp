#pragma once
// Adaptive explicit Runge-Kutta propagation of the state and of the joint
// state + variational system, plus Poincare-section crossing detection with
// scheme-independent refinement (bracketing and short re-integrations, no
// dense output).

#include <functional>
#include <stdexcept>
#include <vector>

#include "model.hpp"

namespace orbitatlas {

enum class RkScheme {
  dop853,    // Dormand-Prince 8(5,3) embedded pair (default)
  rk4_fixed  // classical RK4 with fixed step, for cross-checks
};

struct IntegratorConfig {
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  double h_init = 0.0;  // 0 = automatic initial step
  double h_min = 1e-14;
  double h_max = 10.0;
  long max_steps = 4000000;
  double pi_beta = 0.04;  // PI stabilization exponent of the step controller
  RkScheme scheme = RkScheme::dop853;
  double fixed_step = 1e-3;  // rk4_fixed only
};

struct IntegrationError : std::runtime_error {
  explicit IntegrationError(const std::string& what)
      : std::runtime_error(what) {}
};

struct CrossingError : IntegrationError {
  explicit CrossingError(const std::string& what) : IntegrationError(what) {}
};

struct VariationalState {
  Vec6 s;
  Mat6 V;  // linearized flow in velocity coordinates, V(0) = identity
};

/// Propagate the state to t_end (t_end < 0 integrates backwards).
Vec6 flow(const Vec6& s0, double t_end, const IntegratorConfig& cfg,
          const SystemParams& p);

/// Propagate state and 6x6 variational matrix jointly (42 equations).
VariationalState flow_with_variational(const Vec6& s0, const Mat6& V0,
                                       double t_end,
                                       const IntegratorConfig& cfg,
                                       const SystemParams& p);

/// States at the integrator's accepted steps, (t, state) pairs including
/// both endpoints. Cheap one-pass sampling for scans.
std::vector<std::pair<double, Vec6>> accepted_steps(
    const Vec6& s0, double t_end, const IntegratorConfig& cfg,
    const SystemParams& p);

/// n+1 states at uniform times 0, t_end/n, ..., t_end.
std::vector<Vec6> sample_trajectory(const Vec6& s0, double t_end, int n,
                                    const IntegratorConfig& cfg,
                                    const SystemParams& p);

enum class SectionCoord : int { y = IY, z = IZ };
enum class CrossingDirection { increasing, decreasing, any };

struct SectionEvent {
  SectionCoord section;
  CrossingDirection direction;
  double t = 0;
  Vec6 s = Vec6::Zero();
};

/// First section crossing strictly after t = 0 (a start exactly on the
/// section is left via an initial skip window). Crossing coordinate is
/// refined below 1e-12 by bisection plus Newton on re-integrated substeps.
SectionEvent next_section_crossing(const Vec6& s0, SectionCoord section,
                                   CrossingDirection direction,
                                   const IntegratorConfig& cfg,
                                   const SystemParams& p, double t_max);

/// m-th crossing (m >= 1), with the variational matrix carried along and
/// evaluated at the refined crossing time.
struct SectionEventVar {
  SectionEvent event;
  Mat6 V = Mat6::Identity();
};
SectionEventVar nth_section_crossing_with_variational(
    const Vec6& s0, const Mat6& V0, SectionCoord section,
    CrossingDirection direction, int m, const IntegratorConfig& cfg,
    const SystemParams& p, double t_max);

/// Every crossing with t <= t_max, in time order (possibly empty; does not
/// throw when none are found).
std::vector<SectionEventVar> section_crossings_with_variational(
    const Vec6& s0, const Mat6& V0, SectionCoord section,
    CrossingDirection direction, const IntegratorConfig& cfg,
    const SystemParams& p, double t_max);

}  // namespace orbitatlas
