#pragma once
// Rotating-frame circular restricted three-body problem: vector field,
// analytic Jacobian, conserved quantities, canonical/velocity coordinate
// maps, discrete symmetries, and the circular Kepler seed formulas used to
// generate comet-type orbit families.

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace orbitatlas {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix<double, 2, 2>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// State layout used throughout: velocity coordinates
/// (x, y, z, vx, vy, vz) in the rotating frame, nondimensional units.
/// Canonical states share the position block with momenta
/// px = vx - y, py = vy + x, pz = vz.
enum : int { IX = 0, IY = 1, IZ = 2, IVX = 3, IVY = 4, IVZ = 5 };

struct SystemParams {
  double mu = 1.0 / 82.27;  // Earth--Moon mass ratio, full precision
  double distance_unit_km = 384400.0;
  double time_unit_days = 4.348;
  double earth_radius_km = 6371.0;
  double moon_radius_km = 1737.4;
  double singularity_floor = 1e-12;  // hard error below this r1/r2

  static SystemParams earth_moon() { return SystemParams{}; }
};

struct SingularityError : std::runtime_error {
  explicit SingularityError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Distances to the primaries at (-mu, 0, 0) and (1-mu, 0, 0).
double r1(const Vec6& s, const SystemParams& p);
double r2(const Vec6& s, const SystemParams& p);

/// Velocity-coordinate vector field f with ds/dt = f(s).
Vec6 vector_field(const Vec6& s, const SystemParams& p);

/// Analytic Jacobian df/ds of vector_field (6x6).
Mat6 rhs_jacobian(const Vec6& s, const SystemParams& p);

/// Jacobi constant C = (x^2+y^2) + 2(1-mu)/r1 + 2mu/r2 - |v|^2.
double jacobi_constant(const Vec6& s, const SystemParams& p);

/// Gradient dC/ds of the Jacobi constant in velocity coordinates.
Vec6 jacobi_gradient(const Vec6& s, const SystemParams& p);

/// Rotating-frame Hamiltonian, H = -C/2.
double hamiltonian(const Vec6& s, const SystemParams& p);

/// Coordinate maps between velocity and canonical states. Linear,
/// constant-coefficient; P = d(canonical)/d(velocity).
Vec6 to_canonical(const Vec6& s);
Vec6 to_velocity(const Vec6& c);
Mat6 canonical_of_velocity_jacobian();

/// Gradient and vector field in canonical coordinates (for frame
/// construction and symplecticity checks). X_H = J grad H.
Vec6 grad_hamiltonian_canonical(const Vec6& c, const SystemParams& p);
Vec6 hamiltonian_vector_field_canonical(const Vec6& c, const SystemParams& p);
Mat6 rhs_jacobian_canonical(const Vec6& s, const SystemParams& p);

/// Standard symplectic structure [[0, I], [-I, 0]].
Mat6 symplectic_J();

enum class Symmetry { rho_x, rho_xz, sigma };

/// Apply an involution in velocity coordinates:
///   rho_x : (x, -y, -z, -vx,  vy,  vz)
///   rho_xz: (x, -y,  z, -vx,  vy, -vz)
///   sigma : (x,  y, -z,  vx,  vy, -vz)
Vec6 apply_symmetry(const Vec6& s, Symmetry which);

/// Linearization of an involution in canonical coordinates (diagonal).
Mat6 symmetry_matrix_canonical(Symmetry which);

/// How a periodic orbit closes up on the fixed-point sets.
enum class SymmetryClass {
  planar_x_axis,       // planar, perpendicular x-axis crossings at 0, T/2
  simple_rho_x,        // spatial, x-axis crossings at 0, T/2
  simple_rho_xz,       // spatial, perpendicular xz-plane crossings at 0, T/2
  doubly_rho_x_first,  // x-axis at 0, xz-plane at T/4
  doubly_rho_xz_first  // xz-plane at 0, x-axis at T/4
};

const char* symmetry_class_name(SymmetryClass c);
SymmetryClass symmetry_class_from_name(const std::string& name);

enum class SeedSign { retrograde, direct };

struct KeplerSeed {
  Vec6 state;             // (x0, 0, 0, 0, +-x0^(-1/2) - x0, 0)
  double period_estimate; // 2*pi / (1 -+ x0^(-3/2))
};

/// Circular Kepler guess for the comet families; exact periodic orbit of
/// the mu = 0 problem.
KeplerSeed kepler_circular_seed(double x0, SeedSign sign,
                                const SystemParams& p);

struct AnalyticCometPrediction {
  SeedSign sign;
  double epsilon;        // x0^(-1/2)
  double period;         // 2*pi / (1 -+ eps^3)
  double floquet_angle;  // eps^3 * 2*pi / (1 -+ eps^3)
  std::complex<double> multiplier;  // exp(+i * floquet_angle)
  int cz_total = 2, cz_planar = 1, cz_spatial = 1;
};

/// First-order predictions valid in the large-radius regime.
AnalyticCometPrediction analytic_comet_prediction(double epsilon,
                                                  SeedSign sign);

}  // namespace orbitatlas
