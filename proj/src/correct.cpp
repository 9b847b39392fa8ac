#include "correct.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <vector>

namespace orbitatlas {

int fixed_parameter_coordinate(FixedParameter f) {
  switch (f) {
    case FixedParameter::x0: return IX;
    case FixedParameter::z0: return IZ;
    case FixedParameter::vy0: return IVY;
    case FixedParameter::vz0: return IVZ;
    case FixedParameter::jacobi: break;
  }
  throw std::invalid_argument("jacobi is not a start coordinate");
}

namespace {

int coordinate_of(FixedParameter f) { return fixed_parameter_coordinate(f); }

bool is_free(const SymmetryClassLayout& lay, int coord) {
  for (int i = 0; i < lay.n_free; ++i)
    if (lay.free_coords[i] == coord) return true;
  return false;
}

// One target-section evaluation: state, variational matrix and the two cut
// conditions, either at fixed time (planar) or at the y=0 crossing nearest
// t_ref (spatial classes).
struct Cut {
  double t = 0;
  Vec6 s = Vec6::Zero();
  Mat6 V = Mat6::Identity();
  Eigen::Vector2d r = Eigen::Vector2d::Zero();
};

Cut evaluate_cut(const Vec6& start, double t_ref,
                 const SymmetryClassLayout& lay, const IntegratorConfig& cfg,
                 const SystemParams& p) {
  Cut cut;
  if (lay.section_pinned) {
    const double horizon = std::max(1.6 * t_ref, t_ref + 0.5);
    const auto hits = section_crossings_with_variational(
        start, Mat6::Identity(), SectionCoord::y, CrossingDirection::any,
        cfg, p, horizon);
    if (hits.empty())
      throw CorrectionError("section crossing lost during correction");
    const SectionEventVar* best = &hits.front();
    for (const auto& h : hits)
      if (std::fabs(h.event.t - t_ref) < std::fabs(best->event.t - t_ref))
        best = &h;
    cut.t = best->event.t;
    cut.s = best->event.s;
    cut.V = best->V;
  } else {
    const VariationalState vs =
        flow_with_variational(start, Mat6::Identity(), t_ref, cfg, p);
    cut.t = t_ref;
    cut.s = vs.s;
    cut.V = vs.V;
  }
  cut.r << cut.s[lay.conditions[0]], cut.s[lay.conditions[1]];
  return cut;
}

void validate_guess(const OrbitGuess& g, const SymmetryClassLayout& lay) {
  for (int i = 0; i < 6; ++i) {
    if (is_free(lay, i)) continue;
    if (g.start[i] != 0.0)
      throw std::invalid_argument(
          "guess start must lie exactly on the fixed set of its symmetry "
          "class");
  }
  if (!(g.t_guess > 0))
    throw std::invalid_argument("guess needs a positive section time");
}

}  // namespace

const char* fixed_parameter_name(FixedParameter f) {
  switch (f) {
    case FixedParameter::x0: return "x0";
    case FixedParameter::z0: return "z0";
    case FixedParameter::vy0: return "vy0";
    case FixedParameter::vz0: return "vz0";
    case FixedParameter::jacobi: return "jacobi";
  }
  return "?";
}

FixedParameter fixed_parameter_from_name(const std::string& name) {
  if (name == "x0") return FixedParameter::x0;
  if (name == "z0") return FixedParameter::z0;
  if (name == "vy0") return FixedParameter::vy0;
  if (name == "vz0") return FixedParameter::vz0;
  if (name == "jacobi") return FixedParameter::jacobi;
  throw std::invalid_argument("unknown fixed parameter: " + name);
}

double PeriodicOrbit::section_time() const {
  return period / symmetry_class_layout(symmetry).period_multiplier;
}

SymmetryClassLayout symmetry_class_layout(SymmetryClass c) {
  switch (c) {
    case SymmetryClass::planar_x_axis:
      return {{IX, IVY, -1}, 2, {IY, IVX}, false, 2};
    case SymmetryClass::simple_rho_x:
      return {{IX, IVY, IVZ}, 3, {IZ, IVX}, true, 2};
    case SymmetryClass::simple_rho_xz:
      return {{IX, IZ, IVY}, 3, {IVX, IVZ}, true, 2};
    case SymmetryClass::doubly_rho_x_first:
      return {{IX, IVY, IVZ}, 3, {IVX, IVZ}, true, 4};
    case SymmetryClass::doubly_rho_xz_first:
      return {{IX, IZ, IVY}, 3, {IZ, IVX}, true, 4};
  }
  throw std::invalid_argument("unknown symmetry class");
}

Eigen::Vector2d residual(const OrbitGuess& g, const IntegratorConfig& cfg,
                         const SystemParams& p) {
  const SymmetryClassLayout lay = symmetry_class_layout(g.symmetry);
  validate_guess(g, lay);
  return evaluate_cut(g.start, g.t_guess, lay, cfg, p).r;
}

PeriodicOrbit correct(const OrbitGuess& g, const CorrectorOptions& opts,
                      const IntegratorConfig& cfg, const SystemParams& p) {
  const SymmetryClassLayout lay = symmetry_class_layout(g.symmetry);
  validate_guess(g, lay);

  const bool fix_jacobi = opts.fixed == FixedParameter::jacobi;
  int fixed_coord = -1;
  if (!fix_jacobi) {
    fixed_coord = coordinate_of(opts.fixed);
    if (!is_free(lay, fixed_coord))
      throw std::invalid_argument(
          std::string("fixed parameter ") + fixed_parameter_name(opts.fixed) +
          " is not a free coordinate of " + symmetry_class_name(g.symmetry));
  }

  // Newton unknowns: the non-fixed free coordinates, plus the cut time for
  // the planar fixed-time scheme. Holding the Jacobi constant instead of a
  // coordinate adds one equation and keeps all coordinates free.
  std::vector<int> unknowns;  // start-coordinate indices; -1 encodes time
  for (int i = 0; i < lay.n_free; ++i)
    if (fix_jacobi || lay.free_coords[i] != fixed_coord)
      unknowns.push_back(lay.free_coords[i]);
  if (!lay.section_pinned) unknowns.push_back(-1);

  const int n_eq = 2 + (fix_jacobi ? 1 : 0);
  if (static_cast<int>(unknowns.size()) != n_eq)
    throw std::logic_error("corrector system is not square");

  Vec6 s = g.start;
  double t_ref = g.t_guess;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const Cut cut = evaluate_cut(s, t_ref, lay, cfg, p);
    if (lay.section_pinned) t_ref = cut.t;

    Eigen::VectorXd r(n_eq);
    r.head<2>() = cut.r;
    if (fix_jacobi) r[2] = jacobi_constant(s, p) - opts.target_jacobi;

    if (r.norm() < opts.tol) {
      PeriodicOrbit orbit;
      orbit.start = s;
      orbit.period = lay.period_multiplier * cut.t;
      orbit.symmetry = g.symmetry;
      orbit.jacobi = jacobi_constant(s, p);
      orbit.residual_norm = cut.r.norm();
      return orbit;
    }

    const Vec6 f = vector_field(cut.s, p);
    if (lay.section_pinned && std::fabs(f[IY]) < 1e-12)
      throw CorrectionError("tangential section crossing");

    Eigen::MatrixXd m(n_eq, n_eq);
    for (int j = 0; j < n_eq; ++j) {
      const int a = unknowns[j];
      for (int k = 0; k < 2; ++k) {
        const int c = lay.conditions[k];
        if (a == -1) {
          m(k, j) = f[c];  // planar time column
        } else if (lay.section_pinned) {
          // Chain rule through the crossing time t(q): y(t(q), q) = 0.
          m(k, j) = cut.V(c, a) - f[c] * cut.V(IY, a) / f[IY];
        } else {
          m(k, j) = cut.V(c, a);
        }
      }
      if (fix_jacobi)
        m(2, j) = (a == -1) ? 0.0 : jacobi_gradient(s, p)[a];
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0) || smax / smin > 1e12)
      throw CorrectionError("singular corrector matrix (condition > 1e12)");

    const Eigen::VectorXd delta = svd.solve(-r);
    for (int j = 0; j < n_eq; ++j) {
      if (unknowns[j] == -1)
        t_ref += delta[j];
      else
        s[unknowns[j]] += delta[j];
    }
    if (!(t_ref > 0))
      throw CorrectionError("corrector drove the section time nonpositive");
  }
  throw CorrectionError("corrector did not converge within max_iters");
}

OrbitGuess predict(const PeriodicOrbit& prev, const PeriodicOrbit* prev2,
                   double step, const CorrectorOptions& opts) {
  const SymmetryClassLayout lay = symmetry_class_layout(prev.symmetry);
  const bool fix_jacobi = opts.fixed == FixedParameter::jacobi;

  auto driven = [&](const PeriodicOrbit& o) {
    return fix_jacobi ? o.jacobi : o.start[coordinate_of(opts.fixed)];
  };

  double ratio = 0.0;
  if (prev2 != nullptr) {
    const double dp = driven(prev) - driven(*prev2);
    if (dp != 0.0) ratio = step / dp;
  }

  OrbitGuess out;
  out.symmetry = prev.symmetry;
  out.start = prev.start;
  out.t_guess = prev.section_time();
  if (prev2 != nullptr && ratio != 0.0) {
    for (int i = 0; i < lay.n_free; ++i) {
      const int a = lay.free_coords[i];
      out.start[a] += (prev.start[a] - prev2->start[a]) * ratio;
    }
    out.t_guess += (prev.section_time() - prev2->section_time()) * ratio;
  }
  if (!fix_jacobi)
    out.start[coordinate_of(opts.fixed)] = driven(prev) + step;
  return out;
}

}  // namespace orbitatlas
