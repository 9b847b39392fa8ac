#include "model.hpp"

#include <cmath>

namespace orbitatlas {

namespace {

// Offsets of the primaries on the x-axis.
inline Vec3 primary1(const SystemParams& p) { return Vec3(-p.mu, 0, 0); }
inline Vec3 primary2(const SystemParams& p) { return Vec3(1 - p.mu, 0, 0); }

// A primary with zero mass exerts no force, so its distance never
// constitutes a singularity (it lets mu=0 reduce to the rotating Kepler
// problem everywhere).
inline void check_floor(double dist, double mass, const SystemParams& p) {
  if (mass > 0 && dist < p.singularity_floor)
    throw SingularityError("state within singularity floor of a primary");
}

// Gravity acceleration -grad Phi with Phi = -(1-mu)/r1 - mu/r2.
inline Vec3 gravity(const Vec3& q, const SystemParams& p) {
  const Vec3 centers[2] = {primary1(p), primary2(p)};
  const double masses[2] = {1 - p.mu, p.mu};
  Vec3 g = Vec3::Zero();
  for (int i = 0; i < 2; ++i) {
    const Vec3 d = q - centers[i];
    const double r = d.norm();
    check_floor(r, masses[i], p);
    if (masses[i] > 0) g -= masses[i] / (r * r * r) * d;
  }
  return g;
}

// Hessian of Phi; the position block of the Jacobian is diag(1,1,0) - Hess.
inline Eigen::Matrix3d gravity_hessian(const Vec3& q, const SystemParams& p) {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  const Vec3 centers[2] = {primary1(p), primary2(p)};
  const double masses[2] = {1 - p.mu, p.mu};
  for (int i = 0; i < 2; ++i) {
    const Vec3 d = q - centers[i];
    const double r = d.norm();
    check_floor(r, masses[i], p);
    if (masses[i] == 0) continue;
    const double r3 = r * r * r, r5 = r3 * r * r;
    h += masses[i] * (Eigen::Matrix3d::Identity() / r3 -
                      3.0 * d * d.transpose() / r5);
  }
  return h;
}

}  // namespace

double r1(const Vec6& s, const SystemParams& p) {
  return (s.head<3>() - primary1(p)).norm();
}

double r2(const Vec6& s, const SystemParams& p) {
  return (s.head<3>() - primary2(p)).norm();
}

Vec6 vector_field(const Vec6& s, const SystemParams& p) {
  const Vec3 q = s.head<3>(), v = s.tail<3>();
  const Vec3 g = gravity(q, p);
  Vec6 f;
  f.head<3>() = v;
  f[IVX] = 2 * v[1] + q[0] + g[0];
  f[IVY] = -2 * v[0] + q[1] + g[1];
  f[IVZ] = g[2];
  return f;
}

Mat6 rhs_jacobian(const Vec6& s, const SystemParams& p) {
  Mat6 a = Mat6::Zero();
  a.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d dq = -gravity_hessian(s.head<3>(), p);
  dq(0, 0) += 1;
  dq(1, 1) += 1;
  a.block<3, 3>(3, 0) = dq;
  a(IVX, IVY) = 2;
  a(IVY, IVX) = -2;
  return a;
}

double jacobi_constant(const Vec6& s, const SystemParams& p) {
  const double d1 = r1(s, p), d2 = r2(s, p);
  check_floor(d1, 1 - p.mu, p);
  check_floor(d2, p.mu, p);
  const Vec3 v = s.tail<3>();
  double c = s[IX] * s[IX] + s[IY] * s[IY] - v.squaredNorm();
  if (1 - p.mu > 0) c += 2 * (1 - p.mu) / d1;
  if (p.mu > 0) c += 2 * p.mu / d2;
  return c;
}

Vec6 jacobi_gradient(const Vec6& s, const SystemParams& p) {
  // d/dq of 2(1-mu)/r1 + 2mu/r2 is twice the gravity acceleration.
  const Vec3 g = gravity(s.head<3>(), p);
  Vec6 out;
  out[IX] = 2 * s[IX] + 2 * g[0];
  out[IY] = 2 * s[IY] + 2 * g[1];
  out[IZ] = 2 * g[2];
  out.tail<3>() = -2 * s.tail<3>();
  return out;
}

double hamiltonian(const Vec6& s, const SystemParams& p) {
  return -0.5 * jacobi_constant(s, p);
}

Vec6 to_canonical(const Vec6& s) {
  Vec6 c = s;
  c[3] = s[IVX] - s[IY];
  c[4] = s[IVY] + s[IX];
  c[5] = s[IVZ];
  return c;
}

Vec6 to_velocity(const Vec6& c) {
  Vec6 s = c;
  s[IVX] = c[3] + c[IY];
  s[IVY] = c[4] - c[IX];
  s[IVZ] = c[5];
  return s;
}

Mat6 canonical_of_velocity_jacobian() {
  Mat6 p = Mat6::Identity();
  p(3, IY) = -1;
  p(4, IX) = 1;
  return p;
}

Vec6 grad_hamiltonian_canonical(const Vec6& c, const SystemParams& p) {
  const Vec3 q = c.head<3>();
  const Vec3 dphi = -gravity(q, p);  // grad of Phi
  Vec6 g;
  g[0] = dphi[0] - c[4];
  g[1] = dphi[1] + c[3];
  g[2] = dphi[2];
  g[3] = c[3] + c[1];
  g[4] = c[4] - c[0];
  g[5] = c[5];
  return g;
}

Vec6 hamiltonian_vector_field_canonical(const Vec6& c, const SystemParams& p) {
  return symplectic_J() * grad_hamiltonian_canonical(c, p);
}

Mat6 rhs_jacobian_canonical(const Vec6& s, const SystemParams& p) {
  const Mat6 t = canonical_of_velocity_jacobian();
  // P is unit lower-triangular; its inverse flips the two signs.
  Mat6 tinv = Mat6::Identity();
  tinv(3, IY) = 1;
  tinv(4, IX) = -1;
  return t * rhs_jacobian(s, p) * tinv;
}

Mat6 symplectic_J() {
  Mat6 j = Mat6::Zero();
  j.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
  j.block<3, 3>(3, 0) = -Eigen::Matrix3d::Identity();
  return j;
}

Vec6 apply_symmetry(const Vec6& s, Symmetry which) {
  Vec6 r = s;
  switch (which) {
    case Symmetry::rho_x:
      r[IY] = -s[IY];
      r[IZ] = -s[IZ];
      r[IVX] = -s[IVX];
      break;
    case Symmetry::rho_xz:
      r[IY] = -s[IY];
      r[IVX] = -s[IVX];
      r[IVZ] = -s[IVZ];
      break;
    case Symmetry::sigma:
      r[IZ] = -s[IZ];
      r[IVZ] = -s[IVZ];
      break;
  }
  return r;
}

Mat6 symmetry_matrix_canonical(Symmetry which) {
  Vec6 d;
  switch (which) {
    case Symmetry::rho_x:
      d << 1, -1, -1, -1, 1, 1;
      break;
    case Symmetry::rho_xz:
      d << 1, -1, 1, -1, 1, -1;
      break;
    case Symmetry::sigma:
      d << 1, 1, -1, 1, 1, -1;
      break;
  }
  return d.asDiagonal();
}

const char* symmetry_class_name(SymmetryClass c) {
  switch (c) {
    case SymmetryClass::planar_x_axis: return "planar_x_axis";
    case SymmetryClass::simple_rho_x: return "simple_rho_x";
    case SymmetryClass::simple_rho_xz: return "simple_rho_xz";
    case SymmetryClass::doubly_rho_x_first: return "doubly_rho_x_first";
    case SymmetryClass::doubly_rho_xz_first: return "doubly_rho_xz_first";
  }
  return "?";
}

SymmetryClass symmetry_class_from_name(const std::string& name) {
  if (name == "planar_x_axis") return SymmetryClass::planar_x_axis;
  if (name == "simple_rho_x") return SymmetryClass::simple_rho_x;
  if (name == "simple_rho_xz") return SymmetryClass::simple_rho_xz;
  if (name == "doubly_rho_x_first") return SymmetryClass::doubly_rho_x_first;
  if (name == "doubly_rho_xz_first") return SymmetryClass::doubly_rho_xz_first;
  throw std::invalid_argument("unknown symmetry class: " + name);
}

KeplerSeed kepler_circular_seed(double x0, SeedSign sign,
                                const SystemParams&) {
  if (!(x0 > 0)) throw std::invalid_argument("kepler seed needs x0 > 0");
  const double w = std::pow(x0, -1.5);  // Kepler angular rate at radius x0
  const double vy0 = (sign == SeedSign::direct ? 1.0 : -1.0) / std::sqrt(x0) -
                     x0;
  KeplerSeed seed;
  seed.state << x0, 0, 0, 0, vy0, 0;
  seed.period_estimate =
      2 * M_PI / (sign == SeedSign::direct ? 1 - w : 1 + w);
  return seed;
}

AnalyticCometPrediction analytic_comet_prediction(double epsilon,
                                                  SeedSign sign) {
  if (!(epsilon > 0 && epsilon < 1))
    throw std::invalid_argument("prediction needs epsilon in (0,1)");
  AnalyticCometPrediction out;
  out.sign = sign;
  out.epsilon = epsilon;
  const double e3 = epsilon * epsilon * epsilon;
  const double denom = (sign == SeedSign::direct ? 1 - e3 : 1 + e3);
  out.period = 2 * M_PI / denom;
  out.floquet_angle = e3 * 2 * M_PI / denom;
  out.multiplier = std::exp(std::complex<double>(0, out.floquet_angle));
  return out;
}

}  // namespace orbitatlas
