#pragma once
// Newton shooting corrector and secant predictor for symmetric periodic
// orbits. Planar x-axis orbits use the classic fixed-time scheme (time is a
// Newton unknown); the spatial symmetry classes pin time at the half- or
// quarter-period y = 0 crossing, leaving two perpendicularity conditions.

#include <array>
#include <stdexcept>
#include <string>

#include "integrate.hpp"
#include "model.hpp"

namespace orbitatlas {

/// Which quantity the corrector holds constant while the others move.
enum class FixedParameter { x0, z0, vy0, vz0, jacobi };

const char* fixed_parameter_name(FixedParameter f);
FixedParameter fixed_parameter_from_name(const std::string& name);

// State-vector index of a coordinate parameter; throws for `jacobi`, which is
// not a start coordinate.
int fixed_parameter_coordinate(FixedParameter f);

struct OrbitGuess {
  Vec6 start = Vec6::Zero();  // must lie exactly on the class's fixed set
  SymmetryClass symmetry = SymmetryClass::planar_x_axis;
  double t_guess = 0;  // time to the target section (T/2, or T/4 for doubly)
};

struct PeriodicOrbit {
  Vec6 start = Vec6::Zero();
  double period = 0;
  SymmetryClass symmetry = SymmetryClass::planar_x_axis;
  double jacobi = 0;
  double residual_norm = 0;
  std::string family_label;

  /// Time from start to the symmetry section: period/2, or period/4 for
  /// the doubly symmetric classes.
  double section_time() const;
};

struct CorrectorOptions {
  FixedParameter fixed = FixedParameter::x0;
  double target_jacobi = 0;  // read only when fixed == jacobi
  int max_iters = 25;
  double tol = 1e-9;  // convergence threshold on the residual norm
};

struct CorrectionError : std::runtime_error {
  explicit CorrectionError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Start-coordinate layout of a symmetry class: which coordinates are free
/// on the fixed set, which two cut conditions close the orbit, whether the
/// section crossing absorbs the time unknown, and the period multiple of
/// the section time.
struct SymmetryClassLayout {
  std::array<int, 3> free_coords;
  int n_free;                  // 2 for planar, 3 for spatial classes
  std::array<int, 2> conditions;
  bool section_pinned;
  int period_multiplier;       // 2 (simple/planar) or 4 (doubly)
};
SymmetryClassLayout symmetry_class_layout(SymmetryClass c);

/// The two target-section conditions of the guess. Planar: (y, vx) at
/// exactly t_guess. Spatial: the class's condition pair at the y = 0
/// crossing nearest t_guess.
Eigen::Vector2d residual(const OrbitGuess& g, const IntegratorConfig& cfg,
                         const SystemParams& p);

/// Newton-correct a guess into a periodic orbit with residual_norm below
/// opts.tol (throws CorrectionError when the iteration fails).
PeriodicOrbit correct(const OrbitGuess& g, const CorrectorOptions& opts,
                      const IntegratorConfig& cfg, const SystemParams& p);

/// Continuation guess: advance the fixed parameter by step, extrapolating
/// the remaining free coordinates and the section time by secant through
/// (prev2, prev); prev2 == nullptr copies them instead. When the fixed
/// parameter is jacobi, the caller advances opts.target_jacobi itself.
OrbitGuess predict(const PeriodicOrbit& prev, const PeriodicOrbit* prev2,
                   double step, const CorrectorOptions& opts);

}  // namespace orbitatlas
