#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "correct.hpp"
#include "integrate.hpp"
#include "model.hpp"

namespace orbitatlas {

// Classification of a reciprocal pair of Floquet multipliers.
enum class PairKind {
  elliptic,            // on the unit circle, off the real axis
  pos_hyperbolic,      // real, lambda > 1 (index s > 1)
  neg_hyperbolic,      // real, lambda < -1 (index s < -1)
  complex_instability, // off both the unit circle and the real axis (quartet)
  degenerate,          // at +1 or -1 within tolerance (bifurcation point)
};
const char* pair_kind_name(PairKind kind);

struct MultiplierPair {
  std::complex<double> lambda{1.0, 0.0}; // representative: |lambda| >= 1
  PairKind kind = PairKind::degenerate;
  std::complex<double> s{1.0, 0.0}; // (lambda + 1/lambda)/2
  int krein = 0;                    // +1/-1 for strictly elliptic pairs, else 0
  double theta = 0.0; // elliptic rotation angle in [0,2pi), Krein-adjusted
};

// Full-period linear stability data of one orbit.
struct FloquetSpectrum {
  Mat6 monodromy = Mat6::Identity(); // matrix the spectrum was computed from
  // Non-trivial multipliers: pairs[0] -> [0],[1];  pairs[1] -> [2],[3].
  std::array<std::complex<double>, 4> multipliers{};
  // Trace-formula indices, ordered Re(s1) <= Re(s2); complex conjugates when
  // the spectrum is complex-unstable.
  std::complex<double> s1{0.0, 0.0};
  std::complex<double> s2{0.0, 0.0};
  bool complex_unstable = false;
  std::array<MultiplierPair, 2> pairs{};
};

// Planar/vertical decomposition for planar orbits (z = vz = 0 throughout).
struct PlanarStability {
  double s_p = 0.0; // planar (horizontal) stability index
  double s_v = 0.0; // vertical (spatial) stability index
  int krein_p = 0;  // +1/-1 when the pair is strictly elliptic, else 0
  int krein_v = 0;
  double theta_p = 0.0; // rotation angle in [0,2pi) per the Krein convention
  double theta_v = 0.0;
};

// One sampled member of a planar family, as consumed by the resonance scan.
struct VsrScanPoint {
  PeriodicOrbit orbit;
  double param = 0.0; // value of the driven continuation parameter
  double s_v = 0.0;
  int krein_v = 0;
};

// A vertical self-resonance: s_v = cos(2 pi d / k) with d/k irreducible and
// k >= 3, plus the boundary cases (d,k) = (1,1) at s_v = +1 and (1,2) at
// s_v = -1.
struct VsrEvent {
  int d = 1;
  int k = 1;
  PeriodicOrbit orbit; // refined orbit at the critical parameter
  double param = 0.0;  // driven-parameter value at the event
  double s_v_target = 1.0;
  double s_v = 1.0; // achieved vertical index, |s_v - target| < 1e-8
  int krein = 0;    // vertical Krein signature at the event (0 at s_v = +-1)
};

class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Full-period variational matrix V(T) in velocity coordinates.
Mat6 monodromy(const PeriodicOrbit& orbit, const IntegratorConfig& cfg,
               const SystemParams& p);

// Assembles the full-period monodromy from the variational matrix over the
// orbit's section time (T/2 for simple classes, T/4 for doubly ones), all in
// canonical coordinates. The inverse is evaluated symplectically as
// V^-1 = J^T V^T J; supplying a non-symplectic matrix is an error.
Mat6 monodromy_via_symmetry(const Mat6& V_canonical, SymmetryClass symmetry);

// Convenience: integrate over the section time and apply the class formula.
// Returns the canonical-coordinate monodromy.
Mat6 monodromy_canonical(const PeriodicOrbit& orbit,
                         const IntegratorConfig& cfg, const SystemParams& p);

// Trace-formula stability indices s = -(alpha +- sqrt(beta))/4 with
// alpha = 2 - tr M and beta = 2 tr(M^2) - alpha^2 + 4.  Returns them ordered
// by real part; beta < 0 yields a complex-conjugate pair.
std::pair<std::complex<double>, std::complex<double>> stability_indices(
    const Mat6& M);

// Krein signature of the strictly elliptic pair containing `lambda`.
// M must be given in canonical coordinates (any even dimension; the block
// symplectic form of matching size is used). Throws std::invalid_argument if
// the pair is not strictly elliptic and StabilityError if the form is
// numerically indefinite.
int krein_signature(const Eigen::MatrixXd& M_canonical,
                    std::complex<double> lambda);

// Multipliers, pair classification, indices, and Krein data from a canonical
// monodromy matrix. The trivial pair (the two eigenvalues nearest 1) is
// deflated before pairing.
FloquetSpectrum floquet_spectrum(const Mat6& M_canonical);

// Planar/vertical split of a canonical monodromy whose orbit is planar.
// Throws StabilityError if the matrix does not block-diagonalize into the
// (z,pz) and (x,y,px,py) blocks within 1e-7.
PlanarStability planar_split(const Mat6& M_canonical);

// Convenience: planarity check + symmetry-reduced monodromy + split.
PlanarStability planar_stability(const PeriodicOrbit& orbit,
                                 const IntegratorConfig& cfg,
                                 const SystemParams& p);

// Builds a scan point (driven-parameter value + vertical stability data).
VsrScanPoint make_scan_point(const PeriodicOrbit& orbit, FixedParameter driven,
                             const IntegratorConfig& cfg,
                             const SystemParams& p);

// Scans a sampled planar family for vertical self-resonances with
// multiplicity k <= k_max plus the s_v = +-1 events. Sign changes of
// s_v - cos(2 pi j / k) between consecutive members are refined by bisection
// on the driven parameter until |s_v - target| < 1e-8; d is then j for
// positive vertical Krein signature and k - j for negative. Events are
// returned in family order; the list may be empty.
std::vector<VsrEvent> find_vsr(const std::vector<VsrScanPoint>& family,
                               FixedParameter driven, int k_max,
                               const IntegratorConfig& cfg,
                               const SystemParams& p,
                               const CorrectorOptions& copts = {});

} // namespace orbitatlas
