#pragma once

// Rapidity reconstruction and direct continuation on the Bethe equations.
//
// An on-shell set of eigenvalue-based variables determines the root
// polynomial P(z) = prod_a (z - v_a) through the interpolation conditions
//
//   P'(e_i)/P(e_i) = (Lambda_i + gamma N) / ((1 - gamma) + 2 gamma e_i),
//
// with gamma = 0 (rational) or gamma = 1 (hyperbolic), since both kernels
// satisfy Z(e_i, v_a) = [(1-gamma) + gamma (e_i + v_a)] / (e_i - v_a).  The
// polynomial is represented either by monomial coefficients (solved by linear
// least squares, roots from the companion matrix; default for N <= 24) or by
// Lagrange values on Chebyshev nodes collocating the equivalent
// Heine-Stieltjes differential equation
//
//   [(1-gamma) + 2 gamma z] P''(z)
//     + [2/g - 2 gamma (sum_i d_i + N - 1) + sum_i 2 d_i u_i/(e_i - z)] P'(z)
//     = [sum_i 2 d_i (Lambda_i + gamma N)/(e_i - z)] P(z),   u_i = (1-gamma) + 2 gamma e_i,
//
// which avoids the coefficient sensitivity of the power basis for large N.
// Extracted roots are polished by a simultaneous Newton iteration on the
// Bethe residuals in a closure-preserving parametrization (real roots and
// (Re, Im >= 0) conjugate pairs; exact zero rapidities are held fixed).
//
// For models with quasispins beyond the quadratic set (arbitrary d_i) the
// rapidities are obtained by direct_solve: weak-coupling cluster expansions
// around each occupied level continued adiabatically in g with adaptive
// steps.  Real-root collisions make the Bethe Jacobian singular, so the
// continuation reports the blocking coupling instead of crossing it.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rgbethe/evb_solver.hpp"
#include "rgbethe/residuals.hpp"

namespace rg {

// ---- errors ----

struct PolishDivergenceError : std::runtime_error {
  std::vector<double> per_root_residuals;
  static std::string format(const std::vector<double>& res, const std::string& what) {
    std::string s = what + " (per-root residuals:";
    char buf[32];
    for (double r : res) {
      std::snprintf(buf, sizeof buf, " %.3e", r);
      s += buf;
    }
    return s + ")";
  }
  PolishDivergenceError(std::vector<double> res, const std::string& what)
      : std::runtime_error(format(res, what)), per_root_residuals(std::move(res)) {}
};

struct SingularPointError : std::runtime_error {
  double g_blocking;
  explicit SingularPointError(double g)
      : std::runtime_error("direct_solve: singular point blocks continuation at g = " +
                           std::to_string(g)),
        g_blocking(g) {}
};

// ---- root polynomial ----

// P is stored in the affine coordinate t = (z - center)/scale and is monic in
// t; the represented polynomial prod_a (z - v_a) is recovered through
// v_a = center + scale * t_a.
struct RootPolynomial {
  enum class Basis { monomial, lagrange };
  Basis basis = Basis::monomial;
  int degree = 0;
  double center = 0.0;
  double scale = 1.0;
  Eigen::VectorXd coeff;   // monomial: c_0..c_N ascending in t, c_N = 1
  Eigen::VectorXd nodes;   // lagrange: N+1 distinct nodes in t
  Eigen::VectorXd values;  // lagrange: P(t_k)
};

inline void validate(const RootPolynomial& p) {
  if (p.degree < 0) throw std::invalid_argument("RootPolynomial: negative degree");
  if (p.scale <= 0.0) throw std::invalid_argument("RootPolynomial: scale must be positive");
  if (p.basis == RootPolynomial::Basis::monomial) {
    if (p.coeff.size() != p.degree + 1)
      throw std::invalid_argument("RootPolynomial: coefficient count mismatch");
    if (p.degree >= 0 && std::abs(p.coeff[p.degree] - 1.0) > 1e-12)
      throw std::invalid_argument("RootPolynomial: leading coefficient must be 1");
  } else {
    if (p.nodes.size() != p.degree + 1 || p.values.size() != p.degree + 1)
      throw std::invalid_argument("RootPolynomial: node grid size mismatch");
    for (int i = 0; i < p.nodes.size(); ++i)
      for (int j = i + 1; j < p.nodes.size(); ++j)
        if (p.nodes[i] == p.nodes[j])
          throw std::invalid_argument("RootPolynomial: node grid must be distinct");
  }
}

// value of the monic interpolant at scaled coordinate t
inline cplx evaluate_scaled(const RootPolynomial& p, cplx t) {
  if (p.basis == RootPolynomial::Basis::monomial) {
    cplx acc = 0.0;
    for (int k = p.degree; k >= 0; --k) acc = acc * t + p.coeff[k];
    return acc;
  }
  // second barycentric form on the node grid
  const int n = p.degree;
  cplx num = 0.0, den = 0.0;
  for (int k = 0; k <= n; ++k) {
    const cplx dt = t - p.nodes[k];
    if (std::abs(dt) < 1e-15) return p.values[k];
    const double w = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == n) ? 0.5 : 1.0);
    num += w / dt * p.values[k];
    den += w / dt;
  }
  return num / den;
}

// value of prod_a (z - v_a) in the original coordinate
inline cplx evaluate(const RootPolynomial& p, cplx z) {
  return std::pow(p.scale, p.degree) * evaluate_scaled(p, (z - p.center) / p.scale);
}

// ---- diagnostics ----

struct RootDiagnostics {
  double condition = 0.0;        // condition estimate of the polynomial solve
  bool ill_conditioned = false;  // estimate above 1e10; roots rescued by polish
  double linear_residual = 0.0;  // residual of the overdetermined solve
  int polish_iterations = 0;
  RootPolynomial::Basis basis = RootPolynomial::Basis::monomial;
};

enum class InversionRoute { auto_select, monomial, lagrange };

namespace detail {

// ---- kernel derivatives (second / first argument) ----

inline cplx kernel_Zv(KernelKind kind, cplx u, cplx v) {
  const cplx d = u - v;
  switch (kind) {
    case KernelKind::rational:      return 1.0 / (d * d);
    case KernelKind::trigonometric: { const cplx s = std::sin(d); return 1.0 / (s * s); }
    case KernelKind::hyperbolic:    return 2.0 * u / (d * d);
  }
  throw std::invalid_argument("kernel_Zv: unknown kernel kind");
}

inline cplx kernel_Zu(KernelKind kind, cplx u, cplx v) {
  const cplx d = u - v;
  switch (kind) {
    case KernelKind::rational:      return -1.0 / (d * d);
    case KernelKind::trigonometric: { const cplx s = std::sin(d); return -1.0 / (s * s); }
    case KernelKind::hyperbolic:    return -2.0 * v / (d * d);
  }
  throw std::invalid_argument("kernel_Zu: unknown kernel kind");
}

// ---- Bethe residuals and complex Jacobian over the movable roots ----

// movable roots come first; fixed roots (exact zero rapidities) only
// contribute to the interaction sums.
struct ComplexSystem {
  Eigen::VectorXcd F;
  Eigen::MatrixXcd J;  // J(a,c) = dF_a/dv_c
};

inline ComplexSystem bethe_complex_system(const ModelSpec& m, const std::vector<cplx>& movable,
                                          const std::vector<cplx>& fixed) {
  const int n = static_cast<int>(movable.size());
  const int L = m.L();
  ComplexSystem sys;
  sys.F.setZero(n);
  sys.J.setZero(n, n);
  std::vector<cplx> all = movable;
  all.insert(all.end(), fixed.begin(), fixed.end());
  const int ntot = static_cast<int>(all.size());
  switch (m.extension.kind) {
    case ExtensionKind::none: {
      const KernelKind kind = m.kernel.variant;
      for (int a = 0; a < n; ++a) {
        const cplx v = movable[a];
        cplx F = 1.0 / m.g, dFa = 0.0;
        for (int i = 0; i < L; ++i) {
          F += m.degeneracies[i] * kernel_Z(kind, cplx(m.levels[i]), v);
          dFa += m.degeneracies[i] * kernel_Zv(kind, cplx(m.levels[i]), v);
        }
        for (int b = 0; b < ntot; ++b) {
          if (b == a) continue;
          F -= kernel_Z(kind, all[b], v);
          dFa -= kernel_Zv(kind, all[b], v);
          if (b < n) sys.J(a, b) = -kernel_Zu(kind, all[b], v);
        }
        sys.F[a] = F;
        sys.J(a, a) = dFa;
      }
      return sys;
    }
    case ExtensionKind::dicke: {
      const double G2 = m.extension.G * m.extension.G, eps0 = m.extension.eps0;
      for (int a = 0; a < n; ++a) {
        const cplx v = movable[a];
        cplx F = eps0 - v, dFa = -1.0;
        for (int i = 0; i < L; ++i) {
          const cplx d = m.levels[i] - v;
          F -= 2.0 * G2 * m.degeneracies[i] / d;
          dFa -= 2.0 * G2 * m.degeneracies[i] / (d * d);
        }
        for (int b = 0; b < ntot; ++b) {
          if (b == a) continue;
          const cplx d = all[b] - v;
          F += 2.0 * G2 / d;
          dFa += 2.0 * G2 / (d * d);
          if (b < n) sys.J(a, b) = -2.0 * G2 / (d * d);
        }
        sys.F[a] = F;
        sys.J(a, a) = dFa;
      }
      return sys;
    }
    case ExtensionKind::ext_pip: {
      const double eta0 = m.extension.eta0, kappa = m.extension.kappa;
      for (int a = 0; a < n; ++a) {
        const cplx v = movable[a];
        cplx F = kappa - eta0 * eta0 / v, dFa = eta0 * eta0 / (v * v);
        for (int i = 0; i < L; ++i) {
          const cplx d = m.levels[i] - v;
          F += m.degeneracies[i] * (m.levels[i] + v) / d;
          dFa += m.degeneracies[i] * 2.0 * m.levels[i] / (d * d);
        }
        for (int b = 0; b < ntot; ++b) {
          if (b == a) continue;
          const cplx d = all[b] - v;
          F -= (all[b] + v) / d;
          dFa -= 2.0 * all[b] / (d * d);
          if (b < n) sys.J(a, b) = 2.0 * v / (d * d);
        }
        sys.F[a] = F;
        sys.J(a, a) = dFa;
      }
      return sys;
    }
    case ExtensionKind::bath: {
      if (m.extension.gamma != 0.0)
        throw std::invalid_argument("bethe_complex_system: bath polish requires gamma = 0");
      const double G = m.g;
      for (int a = 0; a < n; ++a) {
        const cplx x = movable[a];
        cplx F = 1.0 + G, dFa = 0.0;
        for (int j = 0; j < L; ++j) {
          const cplx d = m.levels[j] - x;
          F -= G * m.levels[j] / d;
          dFa -= G * m.levels[j] / (d * d);
        }
        for (int b = 0; b < ntot; ++b) {
          if (b == a) continue;
          const cplx d = all[b] - x;
          F += 2.0 * G * all[b] / d;
          dFa += 2.0 * G * all[b] / (d * d);
          if (b < n) sys.J(a, b) = -2.0 * G * x / (d * d);
        }
        sys.F[a] = F;
        sys.J(a, a) = dFa;
      }
      return sys;
    }
  }
  throw std::invalid_argument("bethe_complex_system: unknown extension");
}

// ---- closure-preserving root parametrization ----

struct RootStructure {
  int n_zero = 0;                                // exact zero rapidities, held fixed
  std::vector<double> reals;                     // real roots
  std::vector<std::pair<double, double>> pairs;  // conjugate pairs (re, im > 0)

  int movable() const { return static_cast<int>(reals.size() + 2 * pairs.size()); }

  std::vector<cplx> movable_roots() const {
    std::vector<cplx> v;
    v.reserve(movable());
    for (double r : reals) v.emplace_back(r, 0.0);
    for (const auto& p : pairs) {
      v.emplace_back(p.first, p.second);
      v.emplace_back(p.first, -p.second);
    }
    return v;
  }

  Eigen::VectorXd pack() const {
    Eigen::VectorXd x(movable());
    int k = 0;
    for (double r : reals) x[k++] = r;
    for (const auto& p : pairs) {
      x[k++] = p.first;
      x[k++] = p.second;
    }
    return x;
  }

  void unpack(const Eigen::VectorXd& x) {
    int k = 0;
    for (double& r : reals) r = x[k++];
    for (auto& p : pairs) {
      p.first = x[k++];
      p.second = std::abs(x[k++]);  // (re, im >= 0) representative
    }
  }
};

// pair near-conjugate roots and split off real roots; exact zeros are kept
// fixed.  match_tol is relative to 1 + |v|.
inline RootStructure classify_roots(const BetheRoots& r, double match_tol = 1e-2) {
  RootStructure s;
  std::vector<cplx> rest;
  for (const cplx& v : r.roots) {
    if (v.real() == 0.0 && v.imag() == 0.0) ++s.n_zero;
    else rest.push_back(v);
  }
  const int n = static_cast<int>(rest.size());
  std::vector<bool> used(n, false);
  for (int a = 0; a < n; ++a) {
    if (used[a]) continue;
    const cplx v = rest[a];
    const double sc = 1.0 + std::abs(v);
    if (std::abs(v.imag()) < 1e-9 * sc) {
      s.reals.push_back(v.real());
      used[a] = true;
      continue;
    }
    int match = -1;
    double best = match_tol * sc;
    for (int b = a + 1; b < n; ++b) {
      if (used[b]) continue;
      const double d = std::abs(rest[b] - std::conj(v));
      if (d < best) { best = d; match = b; }
    }
    if (match < 0) {
      if (std::abs(v.imag()) < match_tol * sc) {  // stray imaginary noise
        s.reals.push_back(v.real());
        used[a] = true;
        continue;
      }
      throw std::runtime_error("classify_roots: conjugation closure violated");
    }
    const cplx w = rest[match];
    s.pairs.emplace_back(0.5 * (v.real() + w.real()),
                         0.5 * (std::abs(v.imag()) + std::abs(w.imag())));
    used[a] = used[match] = true;
  }
  return s;
}

inline BetheRoots canonical_roots(const RootStructure& s) {
  std::vector<cplx> out;
  out.reserve(s.n_zero + s.movable());
  for (int k = 0; k < s.n_zero; ++k) out.emplace_back(0.0, 0.0);
  for (double r : s.reals) out.emplace_back(r, 0.0);
  for (const auto& p : s.pairs) {
    out.emplace_back(p.first, p.second);
    out.emplace_back(p.first, -p.second);
  }
  std::sort(out.begin(), out.end(), [](const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() > b.imag();
  });
  return BetheRoots{std::move(out)};
}

// residuals and Jacobian in the structured real unknowns
inline void structured_system(const ModelSpec& m, const RootStructure& s,
                              Eigen::VectorXd* F, Eigen::MatrixXd* J) {
  const int nr = static_cast<int>(s.reals.size());
  const int np = static_cast<int>(s.pairs.size());
  const int n = s.movable();
  const std::vector<cplx> fixed(s.n_zero, cplx(0.0, 0.0));
  const ComplexSystem sys = bethe_complex_system(m, s.movable_roots(), fixed);
  F->resize(n);
  if (J) J->resize(n, n);
  // rows: one real equation per real root, (Re, Im) per pair's upper member
  for (int row = 0; row < nr + np; ++row) {
    const int a = (row < nr) ? row : nr + 2 * (row - nr);
    const bool is_pair = row >= nr;
    (*F)[is_pair ? nr + 2 * (row - nr) : row] = sys.F[a].real();
    if (is_pair) (*F)[nr + 2 * (row - nr) + 1] = sys.F[a].imag();
    if (!J) continue;
    for (int col = 0; col < nr + np; ++col) {
      if (col < nr) {
        const cplx d = sys.J(a, col);
        (*J)(is_pair ? nr + 2 * (row - nr) : row, col) = d.real();
        if (is_pair) (*J)(nr + 2 * (row - nr) + 1, col) = d.imag();
      } else {
        const int c = nr + 2 * (col - nr);
        const cplx dre = sys.J(a, c) + sys.J(a, c + 1);
        const cplx dim = cplx(0.0, 1.0) * (sys.J(a, c) - sys.J(a, c + 1));
        const int jc = nr + 2 * (col - nr);
        (*J)(is_pair ? nr + 2 * (row - nr) : row, jc) = dre.real();
        (*J)(is_pair ? nr + 2 * (row - nr) : row, jc + 1) = dim.real();
        if (is_pair) {
          (*J)(nr + 2 * (row - nr) + 1, jc) = dre.imag();
          (*J)(nr + 2 * (row - nr) + 1, jc + 1) = dim.imag();
        }
      }
    }
  }
}

inline std::vector<double> per_root_residuals(const ModelSpec& m, const RootStructure& s) {
  const std::vector<cplx> fixed(s.n_zero, cplx(0.0, 0.0));
  const ComplexSystem sys = bethe_complex_system(m, s.movable_roots(), fixed);
  std::vector<double> out(sys.F.size());
  for (int a = 0; a < sys.F.size(); ++a) out[a] = std::abs(sys.F[a]);
  return out;
}

// damped Newton on the structured system; returns iteration count
inline int newton_on_roots(const ModelSpec& m, RootStructure& s, double tol, int max_iter) {
  if (s.movable() == 0) return 0;
  Eigen::VectorXd F, Ftry;
  Eigen::MatrixXd J;
  Eigen::VectorXd x = s.pack();
  structured_system(m, s, &F, nullptr);
  double rn = F.lpNorm<Eigen::Infinity>();
  if (!std::isfinite(rn))
    throw PolishDivergenceError(per_root_residuals(m, s), "polish_roots: non-finite residual");
  for (int iter = 0; iter < max_iter; ++iter) {
    if (rn <= tol) return iter;
    structured_system(m, s, &F, &J);
    Eigen::VectorXd dx = J.partialPivLu().solve(F);
    if (!dx.allFinite())
      throw PolishDivergenceError(per_root_residuals(m, s), "polish_roots: singular Jacobian");
    double step = 1.0;
    bool accepted = false;
    RootStructure strial = s;
    for (int h = 0; h < 9; ++h) {
      strial = s;
      strial.unpack(x - step * dx);
      Eigen::VectorXd Ft;
      bool finite = true;
      try {
        structured_system(m, strial, &Ft, nullptr);
      } catch (const std::exception&) {
        finite = false;
      }
      if (finite && Ft.allFinite() && Ft.lpNorm<Eigen::Infinity>() < rn) {
        s = strial;
        x = s.pack();
        rn = Ft.lpNorm<Eigen::Infinity>();
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (rn <= tol) return iter;
      throw PolishDivergenceError(per_root_residuals(m, s),
                                  "polish_roots: residual stagnated at " + std::to_string(rn));
    }
  }
  if (rn > tol)
    throw PolishDivergenceError(per_root_residuals(m, s),
                                "polish_roots: no convergence after " +
                                    std::to_string(max_iter) + " iterations");
  return max_iter;
}

// retry heuristics for misclassified near-transition roots: merge the two
// closest real roots into a pair, or split the smallest-Im pair into reals
inline bool reclassify_merge(RootStructure& s) {
  if (s.reals.size() < 2) return false;
  std::sort(s.reals.begin(), s.reals.end());
  int best = -1;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < s.reals.size(); ++k) {
    const double d = s.reals[k + 1] - s.reals[k];
    if (d < gap) { gap = d; best = static_cast<int>(k); }
  }
  const double sc = 1.0 + std::abs(s.reals[best]);
  if (gap > 1e-3 * sc) return false;
  const double re = 0.5 * (s.reals[best] + s.reals[best + 1]);
  const double im = std::max(0.5 * gap, 1e-8 * sc);
  s.reals.erase(s.reals.begin() + best, s.reals.begin() + best + 2);
  s.pairs.emplace_back(re, im);
  return true;
}

inline bool reclassify_split(RootStructure& s) {
  if (s.pairs.empty()) return false;
  int best = -1;
  double im = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.pairs.size(); ++k)
    if (s.pairs[k].second < im) { im = s.pairs[k].second; best = static_cast<int>(k); }
  const double sc = 1.0 + std::abs(s.pairs[best].first);
  if (im > 1e-3 * sc) return false;
  const double re = s.pairs[best].first;
  const double d = std::max(im, 1e-8 * sc);
  s.pairs.erase(s.pairs.begin() + best);
  s.reals.push_back(re - d);
  s.reals.push_back(re + d);
  return true;
}

}  // namespace detail

// ---- polish ----

// Simultaneous Newton on the Bethe residuals in the closure-preserving
// parametrization.  Exact zero rapidities are held fixed (their equations do
// not involve the unknowns).  Input must be within the polish basin
// (residuals < 1e-2); converges to residuals < 1e-10.
inline BetheRoots polish_roots(const ModelSpec& m, const BetheRoots& roots,
                               int* iterations = nullptr) {
  validate(m);
  if (roots.N() == 0) return roots;
  detail::RootStructure s = detail::classify_roots(roots);
  {
    const auto res = detail::per_root_residuals(m, s);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, r);
    if (!std::isfinite(worst) || worst > 1e-2)
      throw PolishDivergenceError(res, "polish_roots: input outside polish basin");
  }
  const double tol = 1e-11;
  const int max_iter = 60;
  int iters = 0;
  try {
    iters = detail::newton_on_roots(m, s, tol, max_iter);
  } catch (const PolishDivergenceError&) {
    // near a real <-> pair transition the companion eigenvalues can land on
    // the wrong side; retry once with the alternative classification
    detail::RootStructure alt = detail::classify_roots(roots);
    if (!detail::reclassify_merge(alt)) {
      alt = detail::classify_roots(roots);
      if (!detail::reclassify_split(alt)) throw;
    }
    iters = detail::newton_on_roots(m, alt, tol, max_iter);
    s = alt;
  }
  if (iterations) *iterations = iters;
  return detail::canonical_roots(s);
}

namespace detail {

// ---- inversion data shared by both polynomial routes ----

struct InversionData {
  double gamma = 0.0;           // kernel interpolation parameter
  std::vector<double> points;   // e_i
  std::vector<double> rho;      // P'(e_i)/P(e_i)
  std::vector<double> weight;   // 2 d_i (collocation right-hand side weights)
  bool has_root_sum = false;    // sum_a v_a known (adds one linear condition)
  double root_sum = 0.0;
  bool has_recip_sum = false;   // sum_a 1/v_a known
  double recip_sum = 0.0;
  double g_eff = 0.0;           // coupling entering the differential equation
};

inline InversionData inversion_data(const ModelSpec& m, const EvbVariables& evb, int N) {
  InversionData d;
  d.points = m.levels;
  d.weight.resize(m.L());
  for (int i = 0; i < m.L(); ++i) d.weight[i] = 2.0 * m.degeneracies[i];
  d.rho.resize(m.L());
  switch (m.extension.kind) {
    case ExtensionKind::none: {
      switch (m.kernel.variant) {
        case KernelKind::rational:   d.gamma = 0.0; break;
        case KernelKind::hyperbolic: d.gamma = 1.0; break;
        case KernelKind::trigonometric:
          throw std::invalid_argument(
              "roots_from_lambda: trigonometric kernel has no polynomial parametrization");
      }
      double checksum = 0.0;
      for (int i = 0; i < m.L(); ++i) checksum += m.degeneracies[i] * evb.scaled[i];
      if (std::abs(checksum + N) > 1e-6 * (1.0 + N))
        throw std::invalid_argument("roots_from_lambda: variables violate the sum rule for N");
      for (int i = 0; i < m.L(); ++i) {
        const double u = (1.0 - d.gamma) + 2.0 * d.gamma * m.levels[i];
        d.rho[i] = (evb.lambdas[i] + d.gamma * N) / u;
      }
      d.g_eff = m.g;
      // root centroid from the state energy (adds a well-conditioned row)
      try {
        const double E = energy_from_evb(m, evb);
        d.root_sum = (m.kernel.variant == KernelKind::rational) ? 0.5 * E : E;
        d.has_root_sum = true;
      } catch (const std::exception&) {
        // no closed-form energy for this variant; the L rows suffice
      }
      return d;
    }
    case ExtensionKind::dicke: {
      if (N != m.pairs)
        throw std::invalid_argument("roots_from_lambda: N must match model pairs");
      d.gamma = 0.0;
      for (int i = 0; i < m.L(); ++i) d.rho[i] = evb.lambdas[i];
      if (!evb.has_lambda0)
        throw std::invalid_argument("roots_from_lambda: Dicke variables need lambda0");
      d.has_root_sum = true;
      d.root_sum = evb.lambda0;
      return d;
    }
    case ExtensionKind::ext_pip: {
      if (N != m.pairs)
        throw std::invalid_argument("roots_from_lambda: N must match model pairs");
      d.gamma = 1.0;
      for (int i = 0; i < m.L(); ++i)
        d.rho[i] = (evb.lambdas[i] + N) / (2.0 * m.levels[i]);
      if (!evb.has_lambda0)
        throw std::invalid_argument("roots_from_lambda: ext-p+ip variables need lambda0");
      const double eta0 = m.extension.eta0;
      d.has_recip_sum = true;
      d.recip_sum = evb.lambda0 / (eta0 * eta0);
      return d;
    }
    case ExtensionKind::bath: {
      if (N != m.pairs)
        throw std::invalid_argument("roots_from_lambda: N must match model pairs");
      d.gamma = 0.0;
      for (int k = 0; k < m.L(); ++k)
        d.rho[k] = (evb.lambdas[k] / m.g + N) / m.levels[k];
      return d;
    }
  }
  throw std::invalid_argument("roots_from_lambda: unknown extension");
}

// equilibrate rows to unit max and solve least squares; reports a condition
// estimate from the pivoted R factor
inline Eigen::VectorXd solve_equilibrated(Eigen::MatrixXd A, Eigen::VectorXd b,
                                          double* condition, double* residual) {
  const int rows = static_cast<int>(A.rows());
  for (int r = 0; r < rows; ++r) {
    const double s = std::max(A.row(r).cwiseAbs().maxCoeff(), std::abs(b[r]));
    if (s > 0) { A.row(r) /= s; b[r] /= s; }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const int rank = static_cast<int>(std::min(A.rows(), A.cols()));
  const auto& R = qr.matrixR();
  const double r0 = std::abs(R(0, 0));
  const double rk = std::abs(R(rank - 1, rank - 1));
  *condition = (rk > 0.0) ? r0 / rk : std::numeric_limits<double>::infinity();
  const Eigen::VectorXd x = qr.solve(b);
  *residual = (A * x - b).lpNorm<Eigen::Infinity>();
  return x;
}

// ---- monomial route: linear solve for the coefficients, companion roots ----

inline RootPolynomial monomial_polynomial(const InversionData& d, int N, double center,
                                          double scale, double* condition, double* residual) {
  const int L = static_cast<int>(d.points.size());
  std::vector<double> et(L);
  for (int i = 0; i < L; ++i) et[i] = (d.points[i] - center) / scale;
  int rows = L;
  if (d.has_root_sum) ++rows;
  if (d.has_recip_sum) ++rows;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, N);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  // P'(t) - rho_t P(t) = 0 at each scaled level, rho_t = scale * rho
  for (int i = 0; i < L; ++i) {
    const double rt = scale * d.rho[i];
    double pw = 1.0;  // et^(k-1) running power
    for (int k = 0; k < N; ++k) {
      const double em1 = (k == 0) ? 0.0 : pw;        // k * et^(k-1)
      const double e0 = (k == 0) ? 1.0 : pw * et[i];  // et^k
      A(i, k) = k * em1 - rt * e0;
      if (k > 0) pw *= et[i];
    }
    const double eN1 = std::pow(et[i], N - 1);
    b[i] = rt * eN1 * et[i] - N * eN1;
  }
  int r = L;
  if (d.has_root_sum) {
    // c_{N-1} = -sum_a t_a
    A(r, N - 1) = 1.0;
    b[r] = -(d.root_sum - N * center) / scale;
    ++r;
  }
  if (d.has_recip_sum) {
    // P'(t0) + scale * recip_sum * P(t0) = 0 at t0 = z = 0
    const double t0 = -center / scale;
    const double w = scale * d.recip_sum;
    double pw = 1.0;
    for (int k = 0; k < N; ++k) {
      const double em1 = (k == 0) ? 0.0 : pw;
      const double e0 = (k == 0) ? 1.0 : pw * t0;
      A(r, k) = k * em1 + w * e0;
      if (k > 0) pw *= t0;
    }
    const double tN1 = std::pow(t0, N - 1);
    b[r] = -(N * tN1 + w * tN1 * t0);
    ++r;
  }
  const Eigen::VectorXd c = solve_equilibrated(A, b, condition, residual);
  RootPolynomial p;
  p.basis = RootPolynomial::Basis::monomial;
  p.degree = N;
  p.center = center;
  p.scale = scale;
  p.coeff.resize(N + 1);
  for (int k = 0; k < N; ++k) p.coeff[k] = c[k];
  p.coeff[N] = 1.0;
  return p;
}

inline std::vector<cplx> companion_roots(const Eigen::VectorXd& coeff) {
  const int N = static_cast<int>(coeff.size()) - 1;
  if (N == 0) return {};
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k < N; ++k) C(k, N - 1) = -coeff[k];
  for (int k = 0; k + 1 < N; ++k) C(k + 1, k) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("companion_roots: eigensolver failed");
  std::vector<cplx> out(N);
  for (int k = 0; k < N; ++k) out[k] = es.eigenvalues()[k];
  return out;
}

// ---- Lagrange route: collocation of the differential equation ----

// Chebyshev-Gauss-Lobatto nodes and differentiation matrix on [-1, 1]
inline void chebyshev_lobatto(int N, Eigen::VectorXd* t, Eigen::MatrixXd* D) {
  t->resize(N + 1);
  for (int k = 0; k <= N; ++k) (*t)[k] = std::cos(std::numbers::pi * k / N);
  D->setZero(N + 1, N + 1);
  auto c = [N](int k) { return (k == 0 || k == N) ? 2.0 : 1.0; };
  for (int k = 0; k <= N; ++k) {
    double diag = 0.0;
    for (int j = 0; j <= N; ++j) {
      if (j == k) continue;
      const double sgn = ((k + j) % 2) ? -1.0 : 1.0;
      (*D)(k, j) = (c(k) / c(j)) * sgn / ((*t)[k] - (*t)[j]);
      diag -= (*D)(k, j);
    }
    (*D)(k, k) = diag;
  }
}

// barycentric interpolation row from CGL nodes to point x
inline Eigen::RowVectorXd interp_row(const Eigen::VectorXd& t, double x) {
  const int n = static_cast<int>(t.size()) - 1;
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n + 1);
  for (int k = 0; k <= n; ++k)
    if (std::abs(x - t[k]) < 1e-14) { row[k] = 1.0; return row; }
  double den = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == n) ? 0.5 : 1.0);
    row[k] = w / (x - t[k]);
    den += row[k];
  }
  row /= den;
  return row;
}

inline RootPolynomial lagrange_polynomial(const InversionData& d, int N, double center,
                                          double scale, double* condition, double* residual) {
  const int L = static_cast<int>(d.points.size());
  Eigen::VectorXd t;
  Eigen::MatrixXd D;
  chebyshev_lobatto(N, &t, &D);
  const Eigen::MatrixXd D2 = D * D;
  std::vector<double> et(L);
  for (int i = 0; i < L; ++i) et[i] = (d.points[i] - center) / scale;
  const double gamma = d.gamma;
  double sum_d = 0.0;
  for (double w : d.weight) sum_d += 0.5 * w;
  const double bconst = 2.0 / d.g_eff - 2.0 * gamma * (sum_d + N - 1.0);
  // collocate at first-kind Chebyshev points (disjoint from the node grid)
  const int M = L + N - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M + 1, N + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(M + 1);
  for (int q = 0; q < M; ++q) {
    double x = std::cos(std::numbers::pi * (2.0 * q + 1.0) / (2.0 * M));
    for (int i = 0; i < L; ++i)
      if (std::abs(x - et[i]) < 1e-12) x += 1e-10;
    // in scaled coordinates the equation reads
    //   (A(z)/scale) Q'' + B(z) Q' - scale C(z) Q = 0,   u_i rho_i = Lambda_i + gamma N;
    // multiplied through by prod_j (et_j - x) so rows stay polynomial: the raw
    // rational rows are pole-dominated once the levels crowd the collocation
    // grid, which collapses their rank
    double prod = 1.0;
    for (int i = 0; i < L; ++i) prod *= et[i] - x;
    double Bt = bconst * prod, Ct = 0.0;
    const double At = ((1.0 - gamma) + 2.0 * gamma * (center + scale * x)) / scale * prod;
    for (int i = 0; i < L; ++i) {
      const double u = (1.0 - gamma) + 2.0 * gamma * d.points[i];
      const double loo = prod / (et[i] - x);
      Bt += d.weight[i] * u * loo / scale;
      Ct += d.weight[i] * u * d.rho[i] * loo;
    }
    const Eigen::RowVectorXd E0 = interp_row(t, x);
    A.row(q) = Bt * (E0 * D) + At * (E0 * D2) - Ct * E0;
  }
  // monic normalization: leading coefficient of the interpolant equals 1
  for (int k = 0; k <= N; ++k) {
    double w = 1.0;
    for (int j = 0; j <= N; ++j)
      if (j != k) w /= (t[k] - t[j]);
    A(M, k) = w;
  }
  b[M] = 1.0;
  const Eigen::VectorXd p = solve_equilibrated(A, b, condition, residual);
  RootPolynomial poly;
  poly.basis = RootPolynomial::Basis::lagrange;
  poly.degree = N;
  poly.center = center;
  poly.scale = scale;
  poly.nodes = t;
  poly.values = p;
  return poly;
}

// Chebyshev coefficients from CGL values (discrete cosine sum)
inline Eigen::VectorXd chebyshev_coefficients(const Eigen::VectorXd& values) {
  const int N = static_cast<int>(values.size()) - 1;
  Eigen::VectorXd a(N + 1);
  auto c = [N](int k) { return (k == 0 || k == N) ? 2.0 : 1.0; };
  for (int j = 0; j <= N; ++j) {
    double s = 0.0;
    for (int k = 0; k <= N; ++k)
      s += values[k] * std::cos(M_PI * j * k / N) / c(k);
    a[j] = 2.0 * s / (N * c(j));
  }
  return a;
}

// roots of a Chebyshev series via the colleague matrix
inline std::vector<cplx> colleague_roots(const Eigen::VectorXd& a) {
  const int n = static_cast<int>(a.size()) - 1;
  if (n == 0) return {};
  if (std::abs(a[n]) < 1e-300) throw std::runtime_error("colleague_roots: vanishing leading coefficient");
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  if (n == 1) {
    C(0, 0) = -a[0] / a[1];
  } else {
    C(0, 1) = 1.0;
    for (int k = 1; k < n - 1; ++k) {
      C(k, k - 1) = 0.5;
      C(k, k + 1) = 0.5;
    }
    for (int j = 0; j < n; ++j) C(n - 1, j) = -a[j] / (2.0 * a[n]);
    C(n - 1, n - 2) += 0.5;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("colleague_roots: eigensolver failed");
  std::vector<cplx> out(n);
  for (int k = 0; k < n; ++k) out[k] = es.eigenvalues()[k];
  return out;
}

// a few sweeps of simultaneous (Aberth-style) refinement on the barycentric
// representation before the Bethe polish takes over
inline void aberth_refine(const RootPolynomial& p, const Eigen::VectorXd& dvalues,
                          std::vector<cplx>* roots, int sweeps = 40) {
  RootPolynomial dp = p;  // interpolant of P' on the same grid
  dp.values = dvalues;
  for (int s = 0; s < sweeps; ++s) {
    double worst = 0.0;
    for (std::size_t a = 0; a < roots->size(); ++a) {
      const cplx t = (*roots)[a];
      const cplx pv = evaluate_scaled(p, t);
      const cplx dv = evaluate_scaled(dp, t);
      if (std::abs(dv) == 0.0) continue;
      const cplx w = pv / dv;
      cplx rep = 0.0;
      for (std::size_t bb = 0; bb < roots->size(); ++bb)
        if (bb != a) rep += 1.0 / (t - (*roots)[bb]);
      const cplx den = 1.0 - w * rep;
      if (std::abs(den) == 0.0) continue;
      (*roots)[a] = t - w / den;
      worst = std::max(worst, std::abs(w / den));
    }
    if (worst < 1e-13) break;
  }
}

}  // namespace detail

// ---- polynomial construction and root extraction ----

inline std::vector<cplx> extract_roots(const RootPolynomial& p);

// Builds the root polynomial for an on-shell set of eigenvalue-based
// variables.  The monomial route solves the interpolation conditions by
// least squares; the Lagrange route collocates the differential equation on
// Chebyshev nodes spanning the estimated root support.
inline RootPolynomial polynomial_from_lambda(const ModelSpec& m, const EvbVariables& evb, int N,
                                             RootDiagnostics* diag = nullptr,
                                             InversionRoute route = InversionRoute::auto_select) {
  validate(m);
  if (N < 0) throw std::invalid_argument("polynomial_from_lambda: negative N");
  const int max_data = m.L() + (m.extension.kind == ExtensionKind::none ? 0 : 1);
  if (N > max_data)
    throw std::invalid_argument("polynomial_from_lambda: N exceeds the available conditions");
  if (evb.L() != m.L())
    throw std::invalid_argument("polynomial_from_lambda: variable count mismatch");
  {
    const auto res = evb_residuals(m, evb);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, std::abs(r));
    if (!(worst < 1e-6))
      throw std::invalid_argument("polynomial_from_lambda: variables are not on-shell");
  }
  const detail::InversionData data = detail::inversion_data(m, evb, N);
  if (route == InversionRoute::auto_select)
    route = (N <= 24) ? InversionRoute::monomial : InversionRoute::lagrange;
  auto [mn, mx] = std::minmax_element(m.levels.begin(), m.levels.end());
  double lo = *mn, hi = *mx;
  if (route == InversionRoute::lagrange) {
    if (m.extension.kind != ExtensionKind::none)
      throw std::invalid_argument("polynomial_from_lambda: Lagrange route covers kernel models only");
  }
  double condition = 0.0, residual = 0.0;
  RootPolynomial p;
  if (N == 0) {
    p.degree = 0;
    p.center = 0.5 * (lo + hi);
    p.scale = std::max(0.5 * (hi - lo), 1e-12);
    p.coeff.resize(1);
    p.coeff[0] = 1.0;
  } else if (route == InversionRoute::monomial) {
    p = detail::monomial_polynomial(data, N, 0.5 * (lo + hi),
                                    std::max(0.5 * (hi - lo), 1e-12), &condition, &residual);
  } else {
    // the node window must hug the root support: the node values of P span
    // a number of decades that grows with N like scale^N, so every factor of
    // window slack costs resolution of the interior roots.  The support is
    // not visible in the variables themselves (their 1/distance tails smear
    // over distant levels), but the outermost extracted roots are reliable
    // even when a loose window drowns the interior ones, so the window is
    // shrunk iteratively around the extracted support.
    const double span = hi - lo;
    for (int pass = 0; pass < 3; ++pass) {
      const double center = 0.5 * (lo + hi);
      const double scale = std::max(0.5 * (hi - lo), 1e-12);
      p = detail::lagrange_polynomial(data, N, center, scale, &condition, &residual);
      double rlo = std::numeric_limits<double>::infinity(), rhi = -rlo;
      for (const cplx& r : extract_roots(p)) {
        if (!std::isfinite(r.real()) || std::abs(r.real()) > 1e8 * (1.0 + span)) continue;
        rlo = std::min(rlo, r.real());
        rhi = std::max(rhi, r.real());
      }
      if (!(rlo <= rhi)) break;
      const double pad = std::max(0.1 * (rhi - rlo), 1e-3 * span) +
                         1e-12 * (1.0 + std::abs(rhi));
      const double nlo = rlo - pad, nhi = rhi + pad;
      const bool settled = std::abs(nlo - lo) + std::abs(nhi - hi) < 0.05 * (hi - lo);
      lo = nlo;
      hi = nhi;
      if (settled) break;
    }
  }
  if (diag) {
    diag->condition = condition;
    diag->ill_conditioned = condition > 1e10;
    diag->linear_residual = residual;
    diag->basis = p.basis;
  }
  return p;
}

// raw (unpolished) roots of the polynomial, in the original coordinates
inline std::vector<cplx> extract_roots(const RootPolynomial& p) {
  validate(p);
  std::vector<cplx> t_roots;
  if (p.basis == RootPolynomial::Basis::monomial) {
    t_roots = detail::companion_roots(p.coeff);
  } else {
    t_roots = detail::colleague_roots(detail::chebyshev_coefficients(p.values));
    // P' values on the same grid feed the simultaneous refinement
    Eigen::VectorXd tt;
    Eigen::MatrixXd D;
    detail::chebyshev_lobatto(p.degree, &tt, &D);
    detail::aberth_refine(p, D * p.values, &t_roots);
  }
  std::vector<cplx> out(t_roots.size());
  for (std::size_t k = 0; k < t_roots.size(); ++k) out[k] = p.center + p.scale * t_roots[k];
  return out;
}

// ---- rapidities from the eigenvalue-based variables ----

inline BetheRoots roots_from_lambda(const ModelSpec& m, const EvbVariables& evb, int N,
                                    RootDiagnostics* diag = nullptr,
                                    InversionRoute route = InversionRoute::auto_select) {
  const RootPolynomial p = polynomial_from_lambda(m, evb, N, diag, route);
  if (N == 0) return BetheRoots{};
  BetheRoots raw{extract_roots(p)};
  int iters = 0;
  BetheRoots polished;
  try {
    polished = polish_roots(m, raw, &iters);
  } catch (const PolishDivergenceError& e) {
    std::string note = "roots_from_lambda: polish failed";
    if (diag && diag->ill_conditioned)
      note += " after ill-conditioned solve (condition " + std::to_string(diag->condition) + ")";
    throw PolishDivergenceError(e.per_root_residuals, note);
  }
  if (diag) diag->polish_iterations = iters;
  if (!conjugation_closed(polished))
    throw std::runtime_error("roots_from_lambda: conjugation closure violated");
  return polished;
}

// ---- direct continuation on the Bethe equations ----

struct DirectSolveOptions {
  double step_min = 1e-10;   // relative to |g_target - g_start|
  int newton_max_iter = 40;
  int max_steps = 100000;
};

namespace detail {

// weak-coupling cluster polynomial for n rapidities on a level of quasispin d:
// x q'' + (2x - 2d) q' = 2n q, built by the coefficient recursion
inline std::vector<cplx> cluster_offsets(int n, double d) {
  Eigen::VectorXd a(n + 1);
  a[0] = 1.0;
  for (int k = 0; k < n; ++k)
    a[k + 1] = 2.0 * (n - k) * a[k] / ((k + 1.0) * (k - 2.0 * d));
  Eigen::VectorXd monic = a / a[n];
  return companion_roots(monic);
}

// rapidity seeds near g = 0: v = eps_i + w_i g x with w_i = 1 (rational,
// trigonometric) or 2 eps_i (hyperbolic, levels stored squared)
inline RootStructure cluster_init(const ModelSpec& m, const OccupationPattern& pattern,
                                  double g) {
  std::vector<cplx> roots;
  for (int i = 0; i < m.L(); ++i) {
    const int n = pattern.counts[i];
    if (n == 0) continue;
    const double w =
        (m.kernel.variant == KernelKind::hyperbolic) ? 2.0 * m.levels[i] : 1.0;
    for (const cplx& x : cluster_offsets(n, m.degeneracies[i]))
      roots.push_back(m.levels[i] + w * g * x);
  }
  BetheRoots r{std::move(roots)};
  return classify_roots(r, 0.5);
}

}  // namespace detail

// Adaptive continuation of the Bethe equations from the weak-coupling limit
// to g_target for arbitrary quasispins d_i.  Fails with the blocking coupling
// when a root collision (singular point) prevents further continuation.
inline BetheRoots direct_solve(const ModelSpec& model, const OccupationPattern& pattern,
                               double g_target, const DirectSolveOptions& opts = {}) {
  validate(model);
  validate(model, pattern);
  if (model.extension.kind != ExtensionKind::none)
    throw std::invalid_argument("direct_solve: kernel models only");
  if (g_target == 0.0) throw std::invalid_argument("direct_solve: coupling must be nonzero");
  if (opts.newton_max_iter < 1 || opts.step_min <= 0.0)
    throw std::invalid_argument("direct_solve: invalid options");
  if (pattern.total() == 0) return BetheRoots{};
  ModelSpec m = model;
  const double g0s = weak_coupling_g(m, g_target);
  const double g0 = (std::abs(g_target) < std::abs(g0s)) ? g_target : g0s;
  // near g = 0 the Jacobian scales like 1/g^2, so the reachable residual
  // floor does too; tighten back to tau_residual as |g| grows
  const double spread = m.level_spread();
  auto newton_tol = [spread](double g) {
    const double floor = 100.0 * std::numeric_limits<double>::epsilon() * (1.0 + spread) *
                         (1.0 + 1.0 / (g * g));
    return std::max(tau_residual, floor);
  };
  detail::RootStructure s = detail::cluster_init(m, pattern, g0);
  m.g = g0;
  detail::newton_on_roots(m, s, newton_tol(g0), 80);
  const int n_unknowns = s.movable();
  double g_cur = g0;
  double step = (g_target - g0) / 16.0;
  const double step_floor = std::abs(g_target - g0) * opts.step_min;
  int clean = 0;
  Eigen::VectorXd x_cur = s.pack();
  for (int iter = 0; iter < opts.max_steps && g_cur != g_target; ++iter) {
    if (std::abs(step) > 0.0 && std::abs(g_target - g_cur) < std::abs(step))
      step = g_target - g_cur;
    const double g_next = g_cur + step;
    // tangent predictor: J dv/dg = 1/g^2 on every residual row
    Eigen::VectorXd F;
    Eigen::MatrixXd J;
    m.g = g_cur;
    detail::structured_system(m, s, &F, &J);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknowns);
    {
      const int nr = static_cast<int>(s.reals.size());
      for (int k = 0; k < nr; ++k) rhs[k] = 1.0 / (g_cur * g_cur);
      for (std::size_t pidx = 0; pidx < s.pairs.size(); ++pidx)
        rhs[nr + 2 * pidx] = 1.0 / (g_cur * g_cur);
    }
    Eigen::VectorXd dxdg = J.partialPivLu().solve(rhs);
    detail::RootStructure strial = s;
    bool ok = dxdg.allFinite();
    Eigen::VectorXd x_pred = x_cur;
    if (ok) {
      x_pred = x_cur + step * dxdg;
      strial.unpack(x_pred);
      m.g = g_next;
      try {
        detail::newton_on_roots(m, strial, newton_tol(g_next), opts.newton_max_iter);
      } catch (const PolishDivergenceError&) {
        ok = false;
      }
    }
    if (ok) {
      // reject corrector jumps onto a different solution branch
      const Eigen::VectorXd x_new = strial.pack();
      const double disp = (x_pred - x_cur).lpNorm<Eigen::Infinity>();
      const double dev = (x_new - x_pred).lpNorm<Eigen::Infinity>();
      const double sc = std::max(1.0, x_cur.lpNorm<Eigen::Infinity>());
      if (dev > std::max(0.5 * disp, 0.05 * sc)) ok = false;
    }
    if (ok) {
      s = strial;
      x_cur = s.pack();
      g_cur = g_next;
      if (++clean >= 3) {
        step *= 1.5;
        clean = 0;
      }
    } else {
      step *= 0.5;
      clean = 0;
      if (std::abs(step) < step_floor) throw SingularPointError(g_cur);
    }
  }
  if (g_cur != g_target) throw SingularPointError(g_cur);
  m.g = g_target;
  detail::newton_on_roots(m, s, newton_tol(g_target), 80);
  return detail::canonical_roots(s);
}

// ---- zero-rapidity extension ----

// Appends p exact zero rapidities.  Zero rapidities solve the hyperbolic
// Bethe equations exactly when the coupling satisfies 1/G = L - 2N - p in the
// bath normalization (N the pre-extension pair count); in the kernel
// normalization this is 1/g = N - sum_i d_i with N the nonzero-root count.
// There the extended set stays on-shell and the state is degenerate in energy
// with the input state, since zero rapidities carry no energy.
inline BetheRoots readgreen_extend(const BetheRoots& roots, int p) {
  if (p < 0) throw std::invalid_argument("readgreen_extend: negative extension");
  BetheRoots out = roots;
  for (int k = 0; k < p; ++k) out.roots.emplace_back(0.0, 0.0);
  return out;
}

// ---- CSV export ----

inline void write_roots_csv(std::ostream& os, const ModelSpec& m, const BetheRoots& r) {
  const auto res = bethe_residuals(m, r);
  os << "index,re_v,im_v,residual\n";
  char buf[128];
  for (int a = 0; a < r.N(); ++a) {
    std::snprintf(buf, sizeof buf, "%d,%.12e,%.12e,%.12e\n", a, r.roots[a].real(),
                  r.roots[a].imag(), std::abs(res[a]));
    os << buf;
  }
}

}  // namespace rg
