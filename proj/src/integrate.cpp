#include "integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orbitatlas {

namespace {

template <int N>
using VecN = Eigen::Matrix<double, N, 1>;

// Dormand-Prince 8(5,3) coefficients (Hairer-Norsett-Wanner DOP853 table).
namespace dp {
constexpr double c2 = 0.526001519587677318785587544488e-01,
                 c3 = 0.789002279381515978178381316732e-01,
                 c4 = 0.118350341907227396726757197510e+00,
                 c5 = 0.281649658092772603273242802490e+00,
                 c6 = 0.333333333333333333333333333333e+00, c7 = 0.25e+00,
                 c8 = 0.307692307692307692307692307692e+00,
                 c9 = 0.651282051282051282051282051282e+00, c10 = 0.6e+00,
                 c11 = 0.857142857142857142857142857142e+00;

constexpr double b1 = 5.42937341165687622380535766363e-2,
                 b6 = 4.45031289275240888144113950566e0,
                 b7 = 1.89151789931450038304281599044e0,
                 b8 = -5.8012039600105847814672114227e0,
                 b9 = 3.1116436695781989440891606237e-1,
                 b10 = -1.52160949662516078556178806805e-1,
                 b11 = 2.01365400804030348374776537501e-1,
                 b12 = 4.47106157277725905176885569043e-2;

constexpr double a21 = 5.26001519587677318785587544488e-2,
                 a31 = 1.97250569845378994544595329183e-2,
                 a32 = 5.91751709536136983633785987549e-2,
                 a41 = 2.95875854768068491816892993775e-2,
                 a43 = 8.87627564304205475450678981324e-2,
                 a51 = 2.41365134159266685502369798665e-1,
                 a53 = -8.84549479328286085344864962717e-1,
                 a54 = 9.24834003261792003115737966543e-1,
                 a61 = 3.7037037037037037037037037037e-2,
                 a64 = 1.70828608729473871279604482173e-1,
                 a65 = 1.25467687566822425016691814123e-1,
                 a71 = 3.7109375e-2,
                 a74 = 1.70252211019544039314978060272e-1,
                 a75 = 6.02165389804559606850219397283e-2,
                 a76 = -1.7578125e-2;

constexpr double a81 = 3.70920001185047927108779319836e-2,
                 a84 = 1.70383925712239993810214054705e-1,
                 a85 = 1.07262030446373284651809199168e-1,
                 a86 = -1.53194377486244017527936158236e-2,
                 a87 = 8.27378916381402288758473766002e-3,
                 a91 = 6.24110958716075717114429577812e-1,
                 a94 = -3.36089262944694129406857109825e0,
                 a95 = -8.68219346841726006818189891453e-1,
                 a96 = 2.75920996994467083049415600797e1,
                 a97 = 2.01540675504778934086186788979e1,
                 a98 = -4.34898841810699588477366255144e1,
                 a101 = 4.77662536438264365890433908527e-1,
                 a104 = -2.48811461997166764192642586468e0,
                 a105 = -5.90290826836842996371446475743e-1,
                 a106 = 2.12300514481811942347288949897e1,
                 a107 = 1.52792336328824235832596922938e1,
                 a108 = -3.32882109689848629194453265587e1,
                 a109 = -2.03312017085086261358222928593e-2;

constexpr double a111 = -9.3714243008598732571704021658e-1,
                 a114 = 5.18637242884406370830023853209e0,
                 a115 = 1.09143734899672957818500254654e0,
                 a116 = -8.14978701074692612513997267357e0,
                 a117 = -1.85200656599969598641566180701e1,
                 a118 = 2.27394870993505042818970056734e1,
                 a119 = 2.49360555267965238987089396762e0,
                 a1110 = -3.0467644718982195003823669022e0,
                 a121 = 2.27331014751653820792359768449e0,
                 a124 = -1.05344954667372501984066689879e1,
                 a125 = -2.00087205822486249909675718444e0,
                 a126 = -1.79589318631187989172765950534e1,
                 a127 = 2.79488845294199600508499808837e1,
                 a128 = -2.85899827713502369474065508674e0,
                 a129 = -8.87285693353062954433549289258e0,
                 a1210 = 1.23605671757943030647266201528e1,
                 a1211 = 6.43392746015763530355970484046e-1;

constexpr double bhh1 = 0.244094488188976377952755905512e+00,
                 bhh2 = 0.733846688281611857341361741547e+00,
                 bhh3 = 0.220588235294117647058823529412e-01;

constexpr double er1 = 0.1312004499419488073250102996e-01,
                 er6 = -0.1225156446376204440720569753e+01,
                 er7 = -0.4957589496572501915214079952e+00,
                 er8 = 0.1664377182454986536961530415e+01,
                 er9 = -0.3503288487499736816886487290e+00,
                 er10 = 0.3341791187130174790297318841e+00,
                 er11 = 0.8192320648511571246570742613e-01,
                 er12 = -0.2235530786388629525884427845e-01;
}  // namespace dp

// One DOP853 step from (t, y) with step h. Fills ynew and the two embedded
// error vectors; k1 must hold f(t, y) on entry (FSAL-style reuse is not
// exploited; k1 is recomputed by the caller per step).
template <int N, class RHS>
void dop853_step(RHS&& rhs, double t, const VecN<N>& y, double h,
                 const VecN<N>& k1, VecN<N>& ynew, VecN<N>& err5,
                 VecN<N>& err3) {
  using dp::c2; using dp::c3; using dp::c4; using dp::c5; using dp::c6;
  using dp::c7; using dp::c8; using dp::c9; using dp::c10; using dp::c11;
  VecN<N> k2, k3, k4, k5, k6, k7, k8, k9, k10, k11, k12, w;
  w = y + h * dp::a21 * k1;
  rhs(t + c2 * h, w, k2);
  w = y + h * (dp::a31 * k1 + dp::a32 * k2);
  rhs(t + c3 * h, w, k3);
  w = y + h * (dp::a41 * k1 + dp::a43 * k3);
  rhs(t + c4 * h, w, k4);
  w = y + h * (dp::a51 * k1 + dp::a53 * k3 + dp::a54 * k4);
  rhs(t + c5 * h, w, k5);
  w = y + h * (dp::a61 * k1 + dp::a64 * k4 + dp::a65 * k5);
  rhs(t + c6 * h, w, k6);
  w = y + h * (dp::a71 * k1 + dp::a74 * k4 + dp::a75 * k5 + dp::a76 * k6);
  rhs(t + c7 * h, w, k7);
  w = y + h * (dp::a81 * k1 + dp::a84 * k4 + dp::a85 * k5 + dp::a86 * k6 +
               dp::a87 * k7);
  rhs(t + c8 * h, w, k8);
  w = y + h * (dp::a91 * k1 + dp::a94 * k4 + dp::a95 * k5 + dp::a96 * k6 +
               dp::a97 * k7 + dp::a98 * k8);
  rhs(t + c9 * h, w, k9);
  w = y + h * (dp::a101 * k1 + dp::a104 * k4 + dp::a105 * k5 +
               dp::a106 * k6 + dp::a107 * k7 + dp::a108 * k8 +
               dp::a109 * k9);
  rhs(t + c10 * h, w, k10);
  w = y + h * (dp::a111 * k1 + dp::a114 * k4 + dp::a115 * k5 +
               dp::a116 * k6 + dp::a117 * k7 + dp::a118 * k8 +
               dp::a119 * k9 + dp::a1110 * k10);
  rhs(t + c11 * h, w, k11);
  w = y + h * (dp::a121 * k1 + dp::a124 * k4 + dp::a125 * k5 +
               dp::a126 * k6 + dp::a127 * k7 + dp::a128 * k8 +
               dp::a129 * k9 + dp::a1210 * k10 + dp::a1211 * k11);
  rhs(t + h, w, k12);

  const VecN<N> slope = dp::b1 * k1 + dp::b6 * k6 + dp::b7 * k7 +
                        dp::b8 * k8 + dp::b9 * k9 + dp::b10 * k10 +
                        dp::b11 * k11 + dp::b12 * k12;
  ynew = y + h * slope;
  err3 = slope - dp::bhh1 * k1 - dp::bhh2 * k9 - dp::bhh3 * k12;
  err5 = dp::er1 * k1 + dp::er6 * k6 + dp::er7 * k7 + dp::er8 * k8 +
         dp::er9 * k9 + dp::er10 * k10 + dp::er11 * k11 + dp::er12 * k12;
}

// Automatic initial step estimate (order-1/8 heuristic).
template <int N, class RHS>
double initial_step(RHS&& rhs, double t0, const VecN<N>& y,
                    const VecN<N>& k1, double posneg,
                    const IntegratorConfig& cfg) {
  double dnf = 0, dny = 0;
  for (int i = 0; i < N; ++i) {
    const double sk = cfg.abs_tol + cfg.rel_tol * std::fabs(y[i]);
    dnf += (k1[i] / sk) * (k1[i] / sk);
    dny += (y[i] / sk) * (y[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6
                                            : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, cfg.h_max) * posneg;
  VecN<N> w = y + h * k1, k2;
  rhs(t0 + h, w, k2);
  double der2 = 0;
  for (int i = 0; i < N; ++i) {
    const double sk = cfg.abs_tol + cfg.rel_tol * std::fabs(y[i]);
    der2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
  }
  der2 = std::sqrt(der2) / std::fabs(h);
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = (der12 <= 1e-15)
                        ? std::max(1e-6, std::fabs(h) * 1e-3)
                        : std::pow(0.01 / der12, 1.0 / 8.0);
  return std::min({100.0 * std::fabs(h), h1, cfg.h_max}) * posneg;
}

// Adaptive integration with an accepted-step observer. The observer gets
// (t_prev, y_prev, t_new, y_new) and returns false to stop early.
// Returns the final time reached.
template <int N, class RHS, class Obs>
double integrate_adaptive(RHS&& rhs, VecN<N>& y, double t0, double t1,
                          const IntegratorConfig& cfg, Obs&& obs) {
  if (t1 == t0) return t0;
  const double posneg = t1 > t0 ? 1.0 : -1.0;

  if (cfg.scheme == RkScheme::rk4_fixed) {
    const double hstep = std::max(cfg.fixed_step, 1e-12);
    double t = t0;
    long nstep = 0;
    VecN<N> k1, k2, k3, k4, w;
    while (t != t1) {
      if (++nstep > cfg.max_steps)
        throw IntegrationError("max_steps exceeded");
      double h = posneg * hstep;
      if ((t + h - t1) * posneg > 0) h = t1 - t;
      const VecN<N> yp = y;
      rhs(t, y, k1);
      w = y + 0.5 * h * k1;
      rhs(t + 0.5 * h, w, k2);
      w = y + 0.5 * h * k2;
      rhs(t + 0.5 * h, w, k3);
      w = y + h * k3;
      rhs(t + h, w, k4);
      y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      const double tp = t;
      t = (std::fabs(t + h - t1) < 1e-15 * std::fabs(t1)) ? t1 : t + h;
      if (!obs(tp, yp, t, y)) return t;
    }
    return t1;
  }

  const double safe = 0.9, fac1 = 1.0 / 3.0, fac2 = 6.0;
  const double expo1 = 1.0 / 8.0 - cfg.pi_beta * 0.2;
  const double uround = 2.3e-16;
  double facold = 1e-4;
  double t = t0;
  VecN<N> k1, ynew, err5, err3;
  rhs(t, y, k1);
  double h = cfg.h_init > 0 ? posneg * std::min(cfg.h_init, cfg.h_max)
                            : initial_step<N>(rhs, t, y, k1, posneg, cfg);
  bool reject = false, last = false;
  long nstep = 0;

  while (true) {
    if (++nstep > cfg.max_steps) throw IntegrationError("max_steps exceeded");
    if (0.1 * std::fabs(h) <= std::fabs(t) * uround ||
        std::fabs(h) < cfg.h_min)
      throw IntegrationError("step size underflow");
    if ((t + 1.01 * h - t1) * posneg > 0) {
      h = t1 - t;
      last = true;
    }

    dop853_step<N>(rhs, t, y, h, k1, ynew, err5, err3);

    // Combined 5th/3rd order error estimate, scaled per component.
    double e5 = 0, e3 = 0;
    for (int i = 0; i < N; ++i) {
      const double sk =
          cfg.abs_tol +
          cfg.rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
      const double q5 = err5[i] / sk, q3 = err3[i] / sk;
      e5 += q5 * q5;
      e3 += q3 * q3;
    }
    double deno = e5 + 0.01 * e3;
    if (deno <= 0) deno = N;
    const double err = std::fabs(h) * e5 * std::sqrt(1.0 / (deno * N));

    const double fac11 = std::pow(err, expo1);
    double fac = fac11 * std::pow(facold, -cfg.pi_beta);
    fac = std::max(1.0 / fac2, std::min(1.0 / fac1, fac / safe));
    double hnew = h / fac;

    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      const VecN<N> yp = y;
      const double tp = t;
      y = ynew;
      t = last ? t1 : t + h;
      rhs(t, y, k1);
      if (!obs(tp, yp, t, y)) return t;
      if (last) return t1;
      if (std::fabs(hnew) > cfg.h_max) hnew = posneg * cfg.h_max;
      if (reject) hnew = posneg * std::min(std::fabs(hnew), std::fabs(h));
      reject = false;
      h = hnew;
    } else {
      hnew = h / std::min(1.0 / fac1, fac11 / safe);
      reject = true;
      last = false;
      h = hnew;
    }
  }
}

struct Rhs6 {
  const SystemParams* p;
  void operator()(double, const VecN<6>& y, VecN<6>& dy) const {
    dy = vector_field(y, *p);
  }
};

using Vec42 = VecN<42>;

struct Rhs42 {
  const SystemParams* p;
  void operator()(double, const Vec42& y, Vec42& dy) const {
    const Vec6 s = y.head<6>();
    dy.head<6>() = vector_field(s, *p);
    const Mat6 a = rhs_jacobian(s, *p);
    Eigen::Map<const Mat6> v(y.data() + 6);
    Eigen::Map<Mat6> dv(dy.data() + 6);
    dv = a * v;
  }
};

Vec42 pack(const Vec6& s, const Mat6& v) {
  Vec42 y;
  y.head<6>() = s;
  Eigen::Map<Mat6>(y.data() + 6) = v;
  return y;
}

}  // namespace

Vec6 flow(const Vec6& s0, double t_end, const IntegratorConfig& cfg,
          const SystemParams& p) {
  Vec6 y = s0;
  integrate_adaptive<6>(Rhs6{&p}, y, 0.0, t_end, cfg,
                        [](double, const Vec6&, double, const Vec6&) {
                          return true;
                        });
  return y;
}

VariationalState flow_with_variational(const Vec6& s0, const Mat6& V0,
                                       double t_end,
                                       const IntegratorConfig& cfg,
                                       const SystemParams& p) {
  Vec42 y = pack(s0, V0);
  integrate_adaptive<42>(Rhs42{&p}, y, 0.0, t_end, cfg,
                         [](double, const Vec42&, double, const Vec42&) {
                           return true;
                         });
  VariationalState out;
  out.s = y.head<6>();
  out.V = Eigen::Map<Mat6>(y.data() + 6);
  return out;
}

std::vector<std::pair<double, Vec6>> accepted_steps(
    const Vec6& s0, double t_end, const IntegratorConfig& cfg,
    const SystemParams& p) {
  std::vector<std::pair<double, Vec6>> out;
  out.emplace_back(0.0, s0);
  Vec6 y = s0;
  integrate_adaptive<6>(Rhs6{&p}, y, 0.0, t_end, cfg,
                        [&](double, const Vec6&, double t, const Vec6& yn) {
                          out.emplace_back(t, yn);
                          return true;
                        });
  return out;
}

std::vector<Vec6> sample_trajectory(const Vec6& s0, double t_end, int n,
                                    const IntegratorConfig& cfg,
                                    const SystemParams& p) {
  if (n < 1) throw std::invalid_argument("sample_trajectory needs n >= 1");
  std::vector<Vec6> out;
  out.reserve(n + 1);
  out.push_back(s0);
  Vec6 y = s0;
  double t_prev = 0;
  for (int i = 1; i <= n; ++i) {
    const double ti = t_end * i / n;
    y = flow(y, ti - t_prev, cfg, p);
    t_prev = ti;
    out.push_back(y);
  }
  return out;
}

namespace {

// Polish one bracketed sign change by bisection narrowed with Newton steps
// on the section coordinate, re-integrating short arcs from the current
// point (scheme independent, no dense output).
template <int N, class RHS>
std::pair<double, VecN<N>> refine_bracket(RHS rhs, double ta, VecN<N> ya,
                                          double tb, double sign_lo, int gi,
                                          const IntegratorConfig& cfg) {
  const int gdi = gi + 3;  // time derivative slot of the section coordinate
  double t_cur = ta;
  VecN<N> y_cur = ya;
  double lo = ta, hi = tb;
  for (int it = 0; it < 200; ++it) {
    const double g = y_cur[gi];
    if (std::fabs(g) < 1e-13) return {t_cur, y_cur};
    const double gdot = y_cur[gdi];
    double t_next;
    if (gdot != 0) {
      t_next = t_cur - g / gdot;
      if (!(t_next > lo && t_next < hi)) t_next = 0.5 * (lo + hi);
    } else {
      t_next = 0.5 * (lo + hi);
    }
    if (std::fabs(t_next - t_cur) < 1e-16 * std::max(1.0, std::fabs(hi)))
      return {t_cur, y_cur};
    VecN<N> y_next = y_cur;
    integrate_adaptive<N>(rhs, y_next, t_cur, t_next, cfg,
                          [](double, const VecN<N>&, double,
                             const VecN<N>&) { return true; });
    t_cur = t_next;
    y_cur = y_next;
    if ((y_cur[gi] < 0 ? -1.0 : 1.0) == sign_lo)
      lo = t_cur;
    else
      hi = t_cur;
  }
  throw CrossingError("section refinement did not converge");
}

// Forward pass collecting sign-change brackets of the section coordinate,
// then refining each. Returns up to stop_after refined crossings in time
// order (possibly fewer if t_max arrives first).
template <int N, class RHS>
std::vector<std::pair<double, VecN<N>>> scan_crossings(
    RHS rhs, VecN<N> y, SectionCoord section, CrossingDirection direction,
    int stop_after, const IntegratorConfig& cfg, double t_max) {
  const int gi = static_cast<int>(section);
  const double on_tol = 1e-12;

  struct Bracket {
    double t_lo, t_hi;
    VecN<N> y_lo;
    double sign_lo;
  };
  std::vector<Bracket> brackets;

  auto wanted = [&](double before, double after) {
    switch (direction) {
      case CrossingDirection::increasing:
        return before < 0 && after >= 0;
      case CrossingDirection::decreasing:
        return before > 0 && after <= 0;
      case CrossingDirection::any:
        return (before < 0 && after >= 0) || (before > 0 && after <= 0);
    }
    return false;
  };

  bool armed = std::fabs(y[gi]) > on_tol;
  double g_prev = y[gi];

  integrate_adaptive<N>(
      rhs, y, 0.0, t_max, cfg,
      [&](double t0, const VecN<N>& y0, double t1, const VecN<N>& y1) {
        const double g1 = y1[gi];
        if (!armed) {
          if (std::fabs(g1) > on_tol) {
            armed = true;
            g_prev = g1;
          }
          return true;
        }
        if (wanted(g_prev, g1)) {
          brackets.push_back(
              {t0, t1, y0, g_prev < 0 ? -1.0 : 1.0});
          if (static_cast<int>(brackets.size()) >= stop_after) return false;
        }
        if (g1 != 0) g_prev = g1;  // keep a usable sign across exact zeros
        return true;
      });

  std::vector<std::pair<double, VecN<N>>> out;
  out.reserve(brackets.size());
  for (const Bracket& b : brackets)
    out.push_back(
        refine_bracket<N>(rhs, b.t_lo, b.y_lo, b.t_hi, b.sign_lo, gi, cfg));
  return out;
}

}  // namespace

SectionEvent next_section_crossing(const Vec6& s0, SectionCoord section,
                                   CrossingDirection direction,
                                   const IntegratorConfig& cfg,
                                   const SystemParams& p, double t_max) {
  const auto hits =
      scan_crossings<6>(Rhs6{&p}, s0, section, direction, 1, cfg, t_max);
  if (hits.empty()) throw CrossingError("no section crossing before t_max");
  SectionEvent ev;
  ev.section = section;
  ev.direction = direction;
  ev.t = hits.front().first;
  ev.s = hits.front().second;
  return ev;
}

SectionEventVar nth_section_crossing_with_variational(
    const Vec6& s0, const Mat6& V0, SectionCoord section,
    CrossingDirection direction, int m, const IntegratorConfig& cfg,
    const SystemParams& p, double t_max) {
  if (m < 1) throw std::invalid_argument("crossing index must be >= 1");
  const auto hits = scan_crossings<42>(Rhs42{&p}, pack(s0, V0), section,
                                       direction, m, cfg, t_max);
  if (static_cast<int>(hits.size()) < m)
    throw CrossingError("no section crossing before t_max");
  SectionEventVar out;
  out.event.section = section;
  out.event.direction = direction;
  out.event.t = hits[m - 1].first;
  out.event.s = hits[m - 1].second.head<6>();
  out.V = Eigen::Map<const Mat6>(hits[m - 1].second.data() + 6);
  return out;
}

std::vector<SectionEventVar> section_crossings_with_variational(
    const Vec6& s0, const Mat6& V0, SectionCoord section,
    CrossingDirection direction, const IntegratorConfig& cfg,
    const SystemParams& p, double t_max) {
  const auto hits =
      scan_crossings<42>(Rhs42{&p}, pack(s0, V0), section, direction,
                         std::numeric_limits<int>::max(), cfg, t_max);
  std::vector<SectionEventVar> out;
  out.reserve(hits.size());
  for (const auto& [t, y] : hits) {
    SectionEventVar ev;
    ev.event.section = section;
    ev.event.direction = direction;
    ev.event.t = t;
    ev.event.s = y.head<6>();
    ev.V = Eigen::Map<const Mat6>(y.data() + 6);
    out.push_back(ev);
  }
  return out;
}

}  // namespace orbitatlas
