#include "stability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace orbitatlas {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Block symplectic form [[0, I], [-I, 0]] of size 2n.
Eigen::MatrixXd block_J(int dim) {
  const int n = dim / 2;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
  J.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  J.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  return J;
}

// Krein signature from an eigenvector of the elliptic pair: the sign of the
// definite quadratic form Q = B^T J^T M B with B = [Re v, Im v].
int krein_from_vector(const Eigen::MatrixXd& M, const Eigen::MatrixXd& J,
                      const Eigen::VectorXcd& v) {
  Eigen::MatrixXd B(M.rows(), 2);
  B.col(0) = v.real();
  B.col(1) = v.imag();
  Eigen::Matrix2d Q = B.transpose() * J.transpose() * M * B;
  Q = 0.5 * (Q + Q.transpose()).eval();
  // Closed-form eigenvalues of the symmetric 2x2 form.
  const double mean = 0.5 * (Q(0, 0) + Q(1, 1));
  const double disc = std::sqrt(0.25 * (Q(0, 0) - Q(1, 1)) * (Q(0, 0) - Q(1, 1)) +
                                Q(0, 1) * Q(0, 1));
  const double lo = mean - disc, hi = mean + disc;
  const double scale = std::max({std::abs(lo), std::abs(hi), 1e-300});
  if (lo * hi <= scale * scale * 1e-20)
    throw StabilityError("Krein form is numerically indefinite");
  return lo > 0 ? +1 : -1;
}

double table_angle(double arg_on_upper_circle, int krein) {
  return krein >= 0 ? arg_on_upper_circle : 2.0 * kPi - arg_on_upper_circle;
}

// Classification tolerances.
constexpr double kImagTol = 1e-8;   // |Im| below this (relative) counts as real
constexpr double kUnitTol = 1e-6;   // distance of |lambda| from 1 for elliptic
constexpr double kParabTol = 1e-8;  // |s -+ 1| below this counts as degenerate

MultiplierPair classify_pair(std::complex<double> lambda) {
  MultiplierPair out;
  // Representative: |lambda| >= 1, ties broken towards Im > 0.
  std::complex<double> rep = lambda;
  if (std::abs(rep) < 1.0) rep = 1.0 / rep;
  if (std::abs(std::abs(rep) - 1.0) < kUnitTol && rep.imag() < 0.0)
    rep = std::conj(rep);
  out.lambda = rep;
  out.s = 0.5 * (rep + 1.0 / rep);
  const bool is_real = std::abs(rep.imag()) <= kImagTol * std::max(1.0, std::abs(rep));
  if (is_real) {
    const double s = out.s.real();
    out.s = {s, 0.0};
    if (std::abs(s - 1.0) < kParabTol || std::abs(s + 1.0) < kParabTol)
      out.kind = PairKind::degenerate;
    else if (s > 1.0)
      out.kind = PairKind::pos_hyperbolic;
    else
      out.kind = PairKind::neg_hyperbolic;
  } else if (std::abs(std::abs(rep) - 1.0) < kUnitTol) {
    out.kind = PairKind::elliptic;
    out.s = {out.s.real(), 0.0};
  } else {
    out.kind = PairKind::complex_instability;
  }
  return out;
}

} // namespace

const char* pair_kind_name(PairKind kind) {
  switch (kind) {
    case PairKind::elliptic: return "elliptic";
    case PairKind::pos_hyperbolic: return "pos_hyperbolic";
    case PairKind::neg_hyperbolic: return "neg_hyperbolic";
    case PairKind::complex_instability: return "complex_instability";
    case PairKind::degenerate: return "degenerate";
  }
  return "unknown";
}

Mat6 monodromy(const PeriodicOrbit& orbit, const IntegratorConfig& cfg,
               const SystemParams& p) {
  return flow_with_variational(orbit.start, Mat6::Identity(), orbit.period,
                               cfg, p)
      .V;
}

Mat6 monodromy_via_symmetry(const Mat6& V_canonical, SymmetryClass symmetry) {
  const Mat6 J = symplectic_J();
  const double vnorm = V_canonical.cwiseAbs().maxCoeff();
  const double defect =
      (V_canonical.transpose() * J * V_canonical - J).cwiseAbs().maxCoeff();
  if (defect > 1e-9 * (1.0 + vnorm * vnorm))
    throw StabilityError(
        "variational matrix is not symplectic; canonical coordinates "
        "expected");

  const Mat6 inv = J.transpose() * V_canonical.transpose() * J;
  const Mat6 Sx = symmetry_matrix_canonical(Symmetry::rho_x);
  const Mat6 Sxz = symmetry_matrix_canonical(Symmetry::rho_xz);
  switch (symmetry) {
    case SymmetryClass::planar_x_axis:
    case SymmetryClass::simple_rho_x:
      return Sx * inv * Sx * V_canonical;
    case SymmetryClass::simple_rho_xz:
      return Sxz * inv * Sxz * V_canonical;
    case SymmetryClass::doubly_rho_x_first: {
      const Mat6 half = Sx * inv * Sxz * V_canonical;
      return half * half;
    }
    case SymmetryClass::doubly_rho_xz_first: {
      const Mat6 half = Sxz * inv * Sx * V_canonical;
      return half * half;
    }
  }
  throw std::invalid_argument("unknown symmetry class");
}

Mat6 monodromy_canonical(const PeriodicOrbit& orbit,
                         const IntegratorConfig& cfg, const SystemParams& p) {
  const Mat6 V = flow_with_variational(orbit.start, Mat6::Identity(),
                                       orbit.section_time(), cfg, p)
                     .V;
  const Mat6 P = canonical_of_velocity_jacobian();
  return monodromy_via_symmetry(P * V * P.inverse(), orbit.symmetry);
}

std::pair<std::complex<double>, std::complex<double>> stability_indices(
    const Mat6& M) {
  const double alpha = 2.0 - M.trace();
  double beta = 2.0 * (M * M).trace() - alpha * alpha + 4.0;
  if (beta < 0.0 && beta > -1e-10) beta = 0.0; // equal-index roundoff guard
  if (beta >= 0.0) {
    const double root = std::sqrt(beta);
    return {std::complex<double>(-(alpha + root) / 4.0, 0.0),
            std::complex<double>(-(alpha - root) / 4.0, 0.0)};
  }
  const double root = std::sqrt(-beta);
  return {std::complex<double>(-alpha / 4.0, -root / 4.0),
          std::complex<double>(-alpha / 4.0, root / 4.0)};
}

int krein_signature(const Eigen::MatrixXd& M_canonical,
                    std::complex<double> lambda) {
  if (M_canonical.rows() != M_canonical.cols() || M_canonical.rows() % 2 != 0)
    throw std::invalid_argument("matrix must be square of even dimension");
  if (std::abs(lambda.imag()) <= kImagTol * std::max(1.0, std::abs(lambda)))
    throw std::invalid_argument("Krein signature requires an elliptic pair");
  if (std::abs(std::abs(lambda) - 1.0) >= kUnitTol)
    throw std::invalid_argument(
        "Krein signature requires multipliers on the unit circle");

  // The form is evaluated on the eigenvector for the member with Im > 0.
  if (lambda.imag() < 0.0) lambda = std::conj(lambda);
  Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(M_canonical);
  int best = -1;
  double best_dist = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double dist = std::abs(es.eigenvalues()[i] - lambda);
    if (best < 0 || dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  if (best_dist > 1e-5 * std::max(1.0, std::abs(lambda)))
    throw std::invalid_argument(
        "requested multiplier is not in the matrix spectrum");
  return krein_from_vector(M_canonical, block_J(int(M_canonical.rows())),
                           es.eigenvectors().col(best));
}

FloquetSpectrum floquet_spectrum(const Mat6& M_canonical) {
  FloquetSpectrum out;
  out.monodromy = M_canonical;

  Eigen::ComplexEigenSolver<Mat6> es(M_canonical);
  std::array<int, 6> idx{0, 1, 2, 3, 4, 5};
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()[a] - 1.0) <
           std::abs(es.eigenvalues()[b] - 1.0);
  });
  // Deflate the trivial pair: the two eigenvalues nearest 1.
  std::array<int, 4> rest{idx[2], idx[3], idx[4], idx[5]};

  // Pair the remainder reciprocally.
  const auto lam = [&](int i) { return es.eigenvalues()[i]; };
  int partner = 1;
  double best = std::abs(lam(rest[0]) * lam(rest[1]) - 1.0);
  for (int j = 2; j < 4; ++j) {
    const double d = std::abs(lam(rest[0]) * lam(rest[j]) - 1.0);
    if (d < best) {
      best = d;
      partner = j;
    }
  }
  std::swap(rest[1], rest[partner]);

  const std::array<std::array<int, 2>, 2> groups{
      std::array<int, 2>{rest[0], rest[1]},
      std::array<int, 2>{rest[2], rest[3]}};
  const Eigen::MatrixXd J6 = block_J(6);
  for (int g = 0; g < 2; ++g) {
    MultiplierPair pair = classify_pair(lam(groups[g][0]));
    if (pair.kind == PairKind::elliptic) {
      // Use the eigenvector belonging to the member with Im > 0.
      int member = groups[g][0];
      if (lam(member).imag() < 0.0) member = groups[g][1];
      try {
        pair.krein = krein_from_vector(M_canonical, J6,
                                       es.eigenvectors().col(member));
      } catch (const StabilityError&) {
        pair.krein = 0; // numerically degenerate near +-1
      }
      const double arg = std::atan2(std::abs(lam(member).imag()),
                                    lam(member).real());
      pair.theta = table_angle(arg, pair.krein);
    }
    out.pairs[g] = pair;
    out.multipliers[2 * g] = pair.lambda;
    out.multipliers[2 * g + 1] = 1.0 / pair.lambda;
  }

  std::tie(out.s1, out.s2) = stability_indices(M_canonical);
  out.complex_unstable = std::abs(out.s1.imag()) > 0.0;
  return out;
}

PlanarStability planar_split(const Mat6& M_canonical) {
  const std::array<int, 2> vert{2, 5};    // (z, pz)
  const std::array<int, 4> plan{0, 1, 3, 4}; // (x, y, px, py)
  double off = 0.0;
  for (int i : vert)
    for (int j : plan)
      off = std::max({off, std::abs(M_canonical(i, j)),
                      std::abs(M_canonical(j, i))});
  if (off > 1e-7)
    throw StabilityError(
        "monodromy does not split into planar and vertical blocks");

  Eigen::Matrix2d Bv;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) Bv(i, j) = M_canonical(vert[i], vert[j]);
  Eigen::Matrix4d Bp;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) Bp(i, j) = M_canonical(plan[i], plan[j]);

  PlanarStability out;
  out.s_v = 0.5 * Bv.trace();
  out.s_p = 0.5 * (Bp.trace() - 2.0); // deflates the trivial pair

  if (std::abs(out.s_v) < 1.0 - 1e-10) {
    // Closed-form eigenvector of the 2x2 block for lambda = s_v + i q.
    const std::complex<double> lv(out.s_v, std::sqrt(1.0 - out.s_v * out.s_v));
    Eigen::Vector2cd v;
    if (std::abs(Bv(0, 1)) >= std::abs(Bv(1, 0)))
      v << std::complex<double>(Bv(0, 1), 0.0), lv - Bv(0, 0);
    else
      v << lv - Bv(1, 1), std::complex<double>(Bv(1, 0), 0.0);
    Eigen::Matrix2d J2;
    J2 << 0.0, 1.0, -1.0, 0.0;
    try {
      out.krein_v = krein_from_vector(Bv, J2, v);
    } catch (const StabilityError&) {
      out.krein_v = 0; // too close to +-1 to resolve the sign
    }
    out.theta_v = table_angle(std::acos(std::clamp(out.s_v, -1.0, 1.0)),
                              out.krein_v);
  }
  if (std::abs(out.s_p) < 1.0 - 1e-10) {
    const std::complex<double> lp(out.s_p, std::sqrt(1.0 - out.s_p * out.s_p));
    Eigen::ComplexEigenSolver<Eigen::Matrix4d> es(Bp);
    int bi = 0;
    double bd = std::abs(es.eigenvalues()[0] - lp);
    for (int i = 1; i < 4; ++i) {
      const double d = std::abs(es.eigenvalues()[i] - lp);
      if (d < bd) {
        bd = d;
        bi = i;
      }
    }
    try {
      out.krein_p =
          krein_from_vector(Bp, block_J(4), es.eigenvectors().col(bi));
    } catch (const StabilityError&) {
      out.krein_p = 0;
    }
    out.theta_p = table_angle(std::acos(std::clamp(out.s_p, -1.0, 1.0)),
                              out.krein_p);
  }
  return out;
}

PlanarStability planar_stability(const PeriodicOrbit& orbit,
                                 const IntegratorConfig& cfg,
                                 const SystemParams& p) {
  if (orbit.symmetry != SymmetryClass::planar_x_axis ||
      std::abs(orbit.start[IZ]) > 1e-10 || std::abs(orbit.start[IVZ]) > 1e-10)
    throw std::invalid_argument(
        "planar stability split requires a planar orbit");
  return planar_split(monodromy_canonical(orbit, cfg, p));
}

VsrScanPoint make_scan_point(const PeriodicOrbit& orbit, FixedParameter driven,
                             const IntegratorConfig& cfg,
                             const SystemParams& p) {
  const PlanarStability st = planar_stability(orbit, cfg, p);
  VsrScanPoint out;
  out.orbit = orbit;
  out.param = driven == FixedParameter::jacobi
                  ? orbit.jacobi
                  : orbit.start[fixed_parameter_coordinate(driven)];
  out.s_v = st.s_v;
  out.krein_v = st.krein_v;
  return out;
}

namespace {

struct VsrTarget {
  double value = 0.0;
  int j = 0; // 0 marks the boundary cases s_v = +-1
  int k = 0;
};

struct RefinePoint {
  PeriodicOrbit orbit;
  double param = 0.0;
  double s_v = 0.0;
  int krein_v = 0;
};

RefinePoint evaluate_at(double param, const RefinePoint& lo,
                        const RefinePoint& hi, int coord,
                        const CorrectorOptions& opts,
                        const IntegratorConfig& cfg, const SystemParams& p) {
  const double span = hi.param - lo.param;
  const double w = span == 0.0 ? 0.0 : (param - lo.param) / span;
  OrbitGuess g;
  g.symmetry = SymmetryClass::planar_x_axis;
  g.start = lo.orbit.start + w * (hi.orbit.start - lo.orbit.start);
  g.start[IY] = g.start[IZ] = g.start[IVX] = g.start[IVZ] = 0.0;
  g.start[coord] = param;
  g.t_guess = lo.orbit.section_time() +
              w * (hi.orbit.section_time() - lo.orbit.section_time());

  RefinePoint out;
  out.orbit = correct(g, opts, cfg, p);
  const PlanarStability st = planar_stability(out.orbit, cfg, p);
  out.param = param;
  out.s_v = st.s_v;
  out.krein_v = st.krein_v;
  return out;
}

} // namespace

std::vector<VsrEvent> find_vsr(const std::vector<VsrScanPoint>& family,
                               FixedParameter driven, int k_max,
                               const IntegratorConfig& cfg,
                               const SystemParams& p,
                               const CorrectorOptions& copts) {
  if (driven != FixedParameter::x0 && driven != FixedParameter::vy0)
    throw std::invalid_argument(
        "resonance scan of a planar family drives x0 or vy0");
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  const int coord = fixed_parameter_coordinate(driven);

  std::vector<VsrTarget> targets;
  targets.push_back({+1.0, 0, 1});
  targets.push_back({-1.0, 0, 2});
  for (int k = 3; k <= k_max; ++k)
    for (int j = 1; 2 * j < k; ++j)
      if (std::gcd(j, k) == 1)
        targets.push_back({std::cos(2.0 * kPi * j / k), j, k});

  CorrectorOptions opts = copts;
  opts.fixed = driven;

  std::vector<VsrEvent> events;
  for (size_t i = 0; i + 1 < family.size(); ++i) {
    const VsrScanPoint& a = family[i];
    const VsrScanPoint& b = family[i + 1];
    if (std::abs(b.param - a.param) < 1e-15) continue;

    // Collect this interval's crossings, ordered along the family direction.
    std::vector<VsrEvent> local;
    for (const VsrTarget& t : targets) {
      const double fa = a.s_v - t.value;
      const double fb = b.s_v - t.value;
      if (fa * fb >= 0.0) continue;

      RefinePoint lo{a.orbit, a.param, a.s_v, a.krein_v};
      RefinePoint hi{b.orbit, b.param, b.s_v, b.krein_v};
      RefinePoint at = lo;
      bool hit = false;
      for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo.param + hi.param);
        at = evaluate_at(mid, lo, hi, coord, opts, cfg, p);
        if (std::abs(at.s_v - t.value) < 1e-8) {
          hit = true;
          break;
        }
        if ((at.s_v - t.value) * (lo.s_v - t.value) > 0.0)
          lo = at;
        else
          hi = at;
        if (std::abs(hi.param - lo.param) <
            1e-14 * std::max(1.0, std::abs(lo.param)))
          break;
      }
      if (!hit && std::abs(at.s_v - t.value) >= 1e-8)
        throw StabilityError("resonance refinement stalled");

      VsrEvent ev;
      ev.k = t.k;
      if (t.j == 0) {
        ev.d = 1; // (1,1) at +1, (1,2) at -1
        ev.krein = 0;
      } else {
        if (at.krein_v == 0)
          throw StabilityError(
              "vertical Krein signature undetermined at resonance");
        ev.d = at.krein_v > 0 ? t.j : t.k - t.j;
        ev.krein = at.krein_v;
      }
      ev.orbit = at.orbit;
      ev.param = at.param;
      ev.s_v_target = std::cos(2.0 * kPi * ev.d / ev.k);
      ev.s_v = at.s_v;
      local.push_back(ev);
    }

    const double dir = b.param > a.param ? 1.0 : -1.0;
    std::sort(local.begin(), local.end(),
              [dir](const VsrEvent& x, const VsrEvent& y) {
                return dir * x.param < dir * y.param;
              });
    for (VsrEvent& ev : local) {
      const bool dup =
          !events.empty() && events.back().d == ev.d &&
          events.back().k == ev.k &&
          std::abs(events.back().param - ev.param) <
              1e-7 * (1.0 + std::abs(ev.param));
      if (!dup) events.push_back(std::move(ev));
    }
  }
  return events;
}

} // namespace orbitatlas
