#pragma once

// Newton continuation solver for the quadratic eigenvalue-based equations:
// weak-coupling series initialization, analytic-Jacobian Newton refinement,
// exact derivative linear systems (Taylor predictors, level occupations),
// adaptive sweeps in the coupling and full sector enumeration.  The bath,
// Dicke and extended p+ip variants get their own continuation entry points
// (in the pair-breaking field, the boson coupling and the pair source).

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "rgbethe/residuals.hpp"

namespace rg {

// ---- errors ----

struct NoConvergenceError : std::runtime_error {
  double residual_norm;
  explicit NoConvergenceError(double r, const std::string& what = "newton_refine: no convergence")
      : std::runtime_error(what + " (residual norm " + std::to_string(r) + ")"),
        residual_norm(r) {}
};

struct StepUnderflowError : std::runtime_error {
  double last_good;
  explicit StepUnderflowError(double g)
      : std::runtime_error("sweep: step underflow, last good coupling " + std::to_string(g)),
        last_good(g) {}
};

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- options and traces ----

struct SweepOptions {
  double g_start = 0.0;
  double g_target = 0.0;
  double step_init = 0.0;
  double step_min = 1e-9;
  int newton_max_iter = 50;
  int taylor_order = 1;  // 1 or 2
};

inline void validate(const SweepOptions& o) {
  if (o.step_min <= 0.0) throw std::invalid_argument("SweepOptions: step_min must be positive");
  if (o.step_init < o.step_min)
    throw std::invalid_argument("SweepOptions: step_init below step_min");
  if (o.g_start == 0.0 || o.g_target == 0.0)
    throw std::invalid_argument("SweepOptions: couplings must be nonzero");
  if (o.g_start * o.g_target < 0.0)
    throw std::invalid_argument("SweepOptions: sweep must not cross zero coupling");
  if (o.taylor_order < 1 || o.taylor_order > 2)
    throw std::invalid_argument("SweepOptions: taylor_order must be 1 or 2");
  if (o.newton_max_iter < 1)
    throw std::invalid_argument("SweepOptions: newton_max_iter must be at least 1");
}

struct SweepPoint {
  double g = 0.0;
  EvbVariables evb;
  std::vector<double> occ;  // <S_i^z>
  int newton_iters = 0;
};

struct SweepTrace {
  std::vector<SweepPoint> points;
  int halvings = 0;
};

// ---- pattern enumeration ----

namespace detail {

inline void enumerate_pattern_counts(const std::vector<int>& caps, int level, int remaining,
                                     bool exact, std::vector<int>& cur,
                                     std::vector<std::vector<int>>& out) {
  if (level == static_cast<int>(caps.size())) {
    if (!exact || remaining == 0) out.push_back(cur);
    return;
  }
  for (int n = 0; n <= std::min(caps[level], remaining); ++n) {
    cur[level] = n;
    enumerate_pattern_counts(caps, level + 1, remaining - n, exact, cur, out);
  }
  cur[level] = 0;
}

}  // namespace detail

inline std::vector<OccupationPattern> enumerate_patterns(int L, int N,
                                                         const std::vector<double>& degeneracies) {
  if (static_cast<int>(degeneracies.size()) != L)
    throw std::invalid_argument("enumerate_patterns: degeneracies size mismatch");
  std::vector<int> caps(L);
  int capacity = 0;
  for (int i = 0; i < L; ++i) {
    caps[i] = static_cast<int>(std::lround(2.0 * degeneracies[i]));
    capacity += caps[i];
  }
  if (N < 0 || N > capacity)
    throw std::invalid_argument("enumerate_patterns: N exceeds capacity");
  std::vector<std::vector<int>> counts;
  std::vector<int> cur(L, 0);
  detail::enumerate_pattern_counts(caps, 0, N, true, cur, counts);
  std::vector<OccupationPattern> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) out[k].counts = std::move(counts[k]);
  return out;
}

// ---- weak-coupling series initialization ----

// scaled variables lambda_i = g Lambda_i; leading orders from the series
//   lambda_i = lambda_i^(-1) + g lambda_i^(0) + O(g^2),  lambda_i^(-1) = -n_i/d_i,
// with the O(g) coefficient fixed by the quadratic set (spin-1 levels carry
// the second-set variable Lambda_i^(2) whose leading term is n_i(2-n_i)/g^2).
inline EvbVariables init_weak_coupling(const ModelSpec& m, const OccupationPattern& pattern,
                                       double g_small) {
  validate(m, pattern);
  if (m.extension.kind != ExtensionKind::none)
    throw std::invalid_argument("init_weak_coupling: kernel models only");
  if (g_small == 0.0) throw std::invalid_argument("init_weak_coupling: g_small must be nonzero");
  const int L = m.L();
  bool any_spin1 = false;
  for (double d : m.degeneracies) {
    if (std::abs(d - 0.5) > 1e-14 && std::abs(d - 1.0) > 1e-14)
      throw std::invalid_argument("init_weak_coupling: series implemented for spins 1/2 and 1");
    any_spin1 |= std::abs(d - 1.0) < 1e-14;
  }
  std::vector<double> lm1(L), l0(L, 0.0);
  for (int i = 0; i < L; ++i) lm1[i] = -pattern.counts[i] / m.degeneracies[i];
  std::vector<double> scaled(L);
  std::vector<double> lambda2;
  if (any_spin1) lambda2.assign(L, 0.0);
  for (int i = 0; i < L; ++i) {
    double drift = 0.0, zsum = 0.0;
    for (int j = 0; j < L; ++j) {
      if (j == i) continue;
      const double Z = kernel_Z(m.kernel.variant, m.levels[i], m.levels[j]);
      drift += m.degeneracies[j] * Z * (lm1[i] - lm1[j]);
      zsum += m.degeneracies[j] * Z;
    }
    const double den = 1.0 + lm1[i];
    const bool half_filled_spin1 =
        std::abs(m.degeneracies[i] - 1.0) < 1e-14 && pattern.counts[i] == 1;
    l0[i] = half_filled_spin1 ? zsum : drift / den;
    scaled[i] = lm1[i] + g_small * l0[i];
    if (any_spin1 && std::abs(m.degeneracies[i] - 1.0) < 1e-14) {
      const int n = pattern.counts[i];
      const double mu0 = n * (2.0 - n);
      const double mu1 = half_filled_spin1 ? 2.0 * drift : 0.0;
      lambda2[i] = (mu0 + g_small * mu1) / (g_small * g_small);
    }
  }
  EvbVariables evb = evb_from_scaled(scaled, g_small);
  evb.lambda2 = std::move(lambda2);
  return evb;
}

// ---- Newton systems per variant ----

namespace detail {

inline double evb_inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// level tables reused across Newton iterations and sweep steps
struct KernelTables {
  int L = 0, n = 0;
  std::vector<double> Z;     // Z(eps_i, eps_j)
  std::vector<double> W;     // d_j (Z_ij^2 + Gamma)
  std::vector<double> zsum;  // sum_{j!=i} d_j Z_ij
  std::vector<double> wsum;  // sum_{j!=i} d_j (Z_ij^2 + Gamma)
  std::vector<double> ssum;  // sum_{j!=i} d_j
  std::vector<int> mu_col;   // unknown column of Lambda_i^(2), or -1
  bool any_spin1 = false;
};

inline KernelTables make_kernel_tables(const ModelSpec& m) {
  if (m.extension.kind != ExtensionKind::none)
    throw std::invalid_argument("kernel solver: kernel models only");
  if (m.kernel.variant == KernelKind::trigonometric)
    throw std::invalid_argument("kernel solver: trigonometric variant unsupported");
  const int L = m.L();
  KernelTables t;
  t.L = L;
  t.Z.assign(L * L, 0.0);
  t.W.assign(L * L, 0.0);
  t.zsum.assign(L, 0.0);
  t.wsum.assign(L, 0.0);
  t.ssum.assign(L, 0.0);
  t.mu_col.assign(L, -1);
  const double Gamma = m.kernel.gamma;
  int next = L;
  for (int i = 0; i < L; ++i) {
    const double d = m.degeneracies[i];
    if (std::abs(d - 0.5) > 1e-14 && std::abs(d - 1.0) > 1e-14)
      throw std::invalid_argument("kernel solver: quadratic set implemented for spins 1/2 and 1");
    if (std::abs(d - 1.0) < 1e-14) {
      t.any_spin1 = true;
      t.mu_col[i] = next++;
    }
    for (int j = 0; j < L; ++j) {
      if (j == i) continue;
      const double Z = kernel_Z(m.kernel.variant, m.levels[i], m.levels[j]);
      t.Z[i * L + j] = Z;
      t.W[i * L + j] = m.degeneracies[j] * (Z * Z + Gamma);
      t.zsum[i] += m.degeneracies[j] * Z;
      t.wsum[i] += m.degeneracies[j] * (Z * Z + Gamma);
      t.ssum[i] += m.degeneracies[j];
    }
  }
  t.n = next;
  return t;
}

// residual and Jacobian of the scaled quadratic set; unknowns are the L
// scaled lambdas followed by mu_i = g^2 Lambda_i^(2) for each spin-1 level.
// The pair-number condition -sum_i d_i lambda_i = N is appended as an extra
// consistent row and the rectangular system is solved in the least-squares
// sense: near level-collision couplings the square Jacobian develops a flat
// direction (sigma_min down to ~1e-9 at L = 24) along which the quadratic set
// alone cannot pin the solution, while the number row restores conditioning.
// Residuals accumulate in extended precision for the same reason.
inline void kernel_system(const ModelSpec& m, const KernelTables& t, const Eigen::VectorXd& x,
                          Eigen::VectorXd& r, Eigen::MatrixXd* J) {
  const double g = m.g, Gamma = m.kernel.gamma;
  const int L = t.L;
  r.setZero(t.n + 1);
  if (J) J->setZero(t.n + 1, t.n);
  long double num = -static_cast<long double>(m.pairs);
  for (int i = 0; i < L; ++i) {
    const long double li = x[i];
    long double drift = 0.0L, drift2 = 0.0L;
    for (int j = 0; j < L; ++j) {
      if (j == i) continue;
      drift += m.degeneracies[j] * t.Z[i * L + j] * (li - static_cast<long double>(x[j]));
      drift2 += t.W[i * L + j] * (li - static_cast<long double>(x[j]));
    }
    long double ri = li * li + 2.0L * li - 2.0L * g * drift -
                     static_cast<long double>(g) * g * Gamma * m.pairs *
                         (1.0 - m.pairs + 2.0 * t.ssum[i]);
    const int mc = t.mu_col[i];
    if (mc >= 0) ri += x[mc];
    r[i] = static_cast<double>(ri);
    num -= m.degeneracies[i] * li;
    if (J) {
      (*J)(i, i) = 2.0 * x[i] + 2.0 - 2.0 * g * t.zsum[i];
      for (int j = 0; j < L; ++j)
        if (j != i) (*J)(i, j) = 2.0 * g * m.degeneracies[j] * t.Z[i * L + j];
      if (mc >= 0) (*J)(i, mc) = 1.0;
      (*J)(t.n, i) = -m.degeneracies[i];
    }
    if (mc >= 0) {
      const long double denom = 2.0L * li + 2.0L - 2.0L * g * t.zsum[i];
      const long double gGN = static_cast<long double>(g) * g * Gamma * m.pairs;
      r[mc] = static_cast<double>(denom * (x[mc] + gGN) - 2.0L * g * g * drift2);
      if (J) {
        (*J)(mc, i) = 2.0 * (x[mc] + static_cast<double>(gGN)) - 2.0 * g * g * t.wsum[i];
        for (int j = 0; j < L; ++j)
          if (j != i) (*J)(mc, j) = 2.0 * g * g * t.W[i * L + j];
        (*J)(mc, mc) = static_cast<double>(denom);
      }
    }
  }
  r[t.n] = static_cast<double>(num);
}

struct NewtonOutcome {
  Eigen::VectorXd x;
  int iters = 0;
  double resid = 0.0;
};

// damped (Gauss-)Newton with analytic Jacobian; rectangular systems carry
// consistent extra rows and are solved in the least-squares sense.  The
// residual scale follows the quadratic growth of the equations with the
// variable magnitude.
template <class System>
inline NewtonOutcome newton_iterate(System&& sys, Eigen::VectorXd x, int max_iter) {
  Eigen::VectorXd r, rtry, dx, xtry;
  Eigen::MatrixXd J;
  sys(x, r, &J);
  double rn = r.lpNorm<Eigen::Infinity>();
  NewtonOutcome out;
  auto scale2 = [&](const Eigen::VectorXd& v) {
    const double a = std::max(1.0, v.lpNorm<Eigen::Infinity>());
    return a * a;
  };
  // iterate to the evaluation floor (the line search exits on stagnation);
  // stopping earlier leaves lambda errors of cond(J) x residual behind
  const double floor_tol = 8.0 * std::numeric_limits<double>::epsilon();
  for (int it = 0; it < max_iter && rn > floor_tol * scale2(x); ++it) {
    dx = (J.rows() == J.cols()) ? Eigen::VectorXd(J.partialPivLu().solve(r))
                                : Eigen::VectorXd(J.colPivHouseholderQr().solve(r));
    if (!dx.allFinite())
      throw SingularSystemError("newton_refine: singular Jacobian");
    double f = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 7; ++ls) {
      xtry = x - f * dx;
      sys(xtry, rtry, nullptr);
      const double rt = rtry.lpNorm<Eigen::Infinity>();
      if (rt < rn) {
        x = xtry;
        rn = rt;
        accepted = true;
        break;
      }
      f *= 0.5;
    }
    if (!accepted) break;
    ++out.iters;
    sys(x, r, &J);
    rn = r.lpNorm<Eigen::Infinity>();
  }
  if (rn > std::max(tau_residual, 1e-12 * scale2(x))) throw NoConvergenceError(rn);
  out.x = std::move(x);
  out.resid = rn;
  return out;
}

// spin-1 second-set value from the first-derivative equation (used to seed
// the mu unknowns when a guess carries no lambda2)
inline double eliminate_mu(const ModelSpec& m, const KernelTables& t, const Eigen::VectorXd& x,
                           int i) {
  const double g = m.g;
  double drift2 = 0.0;
  for (int j = 0; j < t.L; ++j)
    if (j != i) drift2 += t.W[i * t.L + j] * (x[i] - x[j]);
  const double denom = 2.0 * x[i] + 2.0 - 2.0 * g * t.zsum[i];
  if (std::abs(denom) < 1e-12) return 0.0;
  return 2.0 * g * g * drift2 / denom - g * g * m.kernel.gamma * m.pairs;
}

inline EvbVariables refine_kernel(const ModelSpec& m, const KernelTables& t,
                                  const EvbVariables& guess, int max_iter, int* iters_out) {
  if (m.g == 0.0) throw std::invalid_argument("newton_refine: coupling must be nonzero");
  if (static_cast<int>(guess.scaled.size()) != t.L)
    throw std::invalid_argument("newton_refine: variable count mismatch");
  Eigen::VectorXd x(t.n);
  for (int i = 0; i < t.L; ++i) x[i] = guess.scaled[i];
  for (int i = 0; i < t.L; ++i)
    if (t.mu_col[i] >= 0)
      x[t.mu_col[i]] = guess.lambda2.empty() ? eliminate_mu(m, t, x, i)
                                             : m.g * m.g * guess.lambda2[i];
  auto sys = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    kernel_system(m, t, v, r, J);
  };
  NewtonOutcome out = newton_iterate(sys, std::move(x), max_iter);
  double num = -static_cast<double>(m.pairs);
  for (int i = 0; i < t.L; ++i) num -= m.degeneracies[i] * out.x[i];
  if (std::abs(num) > 1e-8 * std::max(1.0, static_cast<double>(m.pairs)))
    throw NoConvergenceError(std::abs(num),
                             "newton_refine: converged outside the requested N sector");
  if (iters_out) *iters_out = out.iters;
  EvbVariables evb;
  evb.scaled.assign(out.x.data(), out.x.data() + t.L);
  evb.lambdas.resize(t.L);
  for (int i = 0; i < t.L; ++i) evb.lambdas[i] = out.x[i] / m.g;
  if (t.any_spin1) {
    evb.lambda2.assign(t.L, 0.0);
    for (int i = 0; i < t.L; ++i) {
      const double mu = t.mu_col[i] >= 0 ? out.x[t.mu_col[i]] : eliminate_mu(m, t, out.x, i);
      evb.lambda2[i] = mu / (m.g * m.g);
    }
  }
  return evb;
}

}  // namespace detail

// ---- derivative linear systems ----

struct LambdaDerivatives {
  std::vector<double> d1;          // dLambda_i/dg
  std::vector<double> d2;          // d^2Lambda_i/dg^2 (order 2 only)
  std::vector<double> d1_lambda2;  // dLambda_i^(2)/dg on spin-1 levels
  std::vector<double> d2_lambda2;
};

// Differentiating the quadratic set in g gives one linear system whose matrix
// serves both derivative orders (the factorization is reused):
//   [2 Lambda_i + 2/g - 2 sum' d_j Z_ij] L_i' + sum' 2 d_j Z_ij L_j' + L2_i' = (2/g^2) Lambda_i
// with the differentiated second-set equation appended on spin-1 levels, and
// the differentiated number condition (sum_i d_i L_i' = N/g^2, then
// sum_i d_i L_i'' = -2N/g^3) appended as a consistent extra row to keep the
// flat Jacobian directions of level-collision regions pinned.
inline LambdaDerivatives dlambda_dg(const ModelSpec& m, const EvbVariables& evb, int order = 1) {
  if (order < 1 || order > 2) throw std::invalid_argument("dlambda_dg: order must be 1 or 2");
  const detail::KernelTables t = detail::make_kernel_tables(m);
  const int L = t.L;
  if (static_cast<int>(evb.lambdas.size()) != L)
    throw std::invalid_argument("dlambda_dg: variable count mismatch");
  const double Gamma = m.kernel.gamma;
  std::vector<double> lam2(L, 0.0);
  if (t.any_spin1) {
    Eigen::VectorXd xs(L);
    for (int i = 0; i < L; ++i) xs[i] = evb.scaled[i];
    for (int i = 0; i < L; ++i)
      lam2[i] = evb.lambda2.empty() ? detail::eliminate_mu(m, t, xs, i) / (m.g * m.g)
                                    : evb.lambda2[i];
  }
  auto assemble = [&](double g) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(t.n + 1, t.n);
    for (int i = 0; i < L; ++i) {
      A(i, i) = 2.0 * evb.lambdas[i] + 2.0 / g - 2.0 * t.zsum[i];
      for (int j = 0; j < L; ++j)
        if (j != i) A(i, j) = 2.0 * m.degeneracies[j] * t.Z[i * L + j];
      const int mc = t.mu_col[i];
      if (mc >= 0) {
        A(i, mc) = 1.0;
        A(mc, i) = 2.0 * (lam2[i] + Gamma * m.pairs) - 2.0 * t.wsum[i];
        for (int j = 0; j < L; ++j)
          if (j != i) A(mc, j) = 2.0 * t.W[i * L + j];
        A(mc, mc) = A(i, i);
      }
      A(t.n, i) = m.degeneracies[i];
    }
    return A;
  };
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(assemble(m.g));
  if (qr.rank() < t.n) {
    qr.compute(assemble(m.g * (1.0 + 1e-9)));  // measure-zero crossing: nudge once
    if (qr.rank() < t.n)
      throw SingularSystemError("dlambda_dg: singular derivative system (level crossing)");
  }
  const double g = m.g;
  Eigen::VectorXd rhs(t.n + 1);
  for (int i = 0; i < L; ++i) {
    rhs[i] = 2.0 / (g * g) * evb.lambdas[i];
    if (t.mu_col[i] >= 0) rhs[t.mu_col[i]] = 2.0 / (g * g) * (lam2[i] + Gamma * m.pairs);
  }
  rhs[t.n] = m.pairs / (g * g);
  const Eigen::VectorXd d1 = qr.solve(rhs);
  LambdaDerivatives out;
  out.d1.assign(d1.data(), d1.data() + L);
  if (t.any_spin1) {
    out.d1_lambda2.assign(L, 0.0);
    for (int i = 0; i < L; ++i)
      if (t.mu_col[i] >= 0) out.d1_lambda2[i] = d1[t.mu_col[i]];
  }
  if (order == 2) {
    Eigen::VectorXd rhs2(t.n + 1);
    for (int i = 0; i < L; ++i) {
      rhs2[i] = -2.0 * d1[i] * d1[i] + 4.0 / (g * g) * d1[i] - 4.0 / (g * g * g) * evb.lambdas[i];
      const int mc = t.mu_col[i];
      if (mc >= 0)
        rhs2[mc] = -4.0 / (g * g * g) * (lam2[i] + Gamma * m.pairs) -
                   2.0 * (2.0 * d1[i] - 2.0 / (g * g)) * d1[mc];
    }
    rhs2[t.n] = -2.0 * m.pairs / (g * g * g);
    const Eigen::VectorXd d2 = qr.solve(rhs2);
    out.d2.assign(d2.data(), d2.data() + L);
    if (t.any_spin1) {
      out.d2_lambda2.assign(L, 0.0);
      for (int i = 0; i < L; ++i)
        if (t.mu_col[i] >= 0) out.d2_lambda2[i] = d2[t.mu_col[i]];
    }
  }
  return out;
}

// Hellmann-Feynman occupations: <S_i^z> = -d_i + g^2 d_i dLambda_i/dg
inline std::vector<double> occupations(const ModelSpec& m, const EvbVariables& evb,
                                       const std::vector<double>& dlambda) {
  if (static_cast<int>(dlambda.size()) != m.L() ||
      static_cast<int>(evb.lambdas.size()) != m.L())
    throw std::invalid_argument("occupations: size mismatch");
  std::vector<double> occ(m.L());
  for (int i = 0; i < m.L(); ++i)
    occ[i] = -m.degeneracies[i] + m.g * m.g * m.degeneracies[i] * dlambda[i];
  return occ;
}

// ---- Newton refinement (public dispatch) ----

namespace detail {

inline void dicke_system(const ModelSpec& m, const Eigen::VectorXd& x, Eigen::VectorXd& r,
                         Eigen::MatrixXd* J) {
  const int L = m.L();
  const double G = m.extension.G, e0 = m.extension.eps0;
  r.setZero(L);
  if (J) J->setZero(L, L);
  for (int i = 0; i < L; ++i) {
    long double drift = 0.0L;
    double dsum = 0.0;
    for (int j = 0; j < L; ++j) {
      if (j == i) continue;
      const double w = 1.0 / (m.levels[i] - m.levels[j]);
      drift += w * (static_cast<long double>(x[i]) - x[j]);
      dsum += w;
    }
    const long double xi = x[i];
    r[i] = static_cast<double>(xi * xi + xi * (m.levels[i] - e0) -
                               static_cast<long double>(G) * G * (m.pairs + drift));
    if (J) {
      (*J)(i, i) = 2.0 * x[i] + (m.levels[i] - e0) - G * G * dsum;
      for (int j = 0; j < L; ++j)
        if (j != i) (*J)(i, j) = G * G / (m.levels[i] - m.levels[j]);
    }
  }
}

inline void ext_pip_system(const ModelSpec& m, const Eigen::VectorXd& x, Eigen::VectorXd& r,
                           Eigen::MatrixXd* J) {
  const int L = m.L();
  const int N = m.pairs;
  const double eta0 = m.extension.eta0, kappa = m.extension.kappa;
  r.setZero(L);
  if (J) J->setZero(L, L);
  long double lamsum = 0.0L;
  for (int j = 0; j < L; ++j) lamsum += x[j];
  for (int i = 0; i < L; ++i) {
    const double ei = m.levels[i];
    long double drift = 0.0L;
    double zsum = 0.0;
    for (int j = 0; j < L; ++j) {
      if (j == i) continue;
      const double Z = (ei + m.levels[j]) / (ei - m.levels[j]);
      drift += Z * (static_cast<long double>(x[i]) - x[j]);
      zsum += Z;
    }
    const long double xi = x[i];
    r[i] = static_cast<double>(xi * xi + N * (L - N) + 2.0L * kappa * xi - lamsum -
                               2.0 * kappa * N -
                               2.0L * eta0 * eta0 * (xi + N) / ei - drift);
    if (J) {
      (*J)(i, i) = 2.0 * x[i] + 2.0 * kappa - 1.0 - 2.0 * eta0 * eta0 / ei - zsum;
      for (int j = 0; j < L; ++j)
        if (j != i) (*J)(i, j) = -1.0 + (ei + m.levels[j]) / (ei - m.levels[j]);
    }
  }
}

inline void bath_system(const ModelSpec& m, const Eigen::VectorXd& x, Eigen::VectorXd& r,
                        Eigen::MatrixXd* J) {
  const int L = m.L();
  const double G = m.g, gamma = m.extension.gamma;
  r.setZero(L);
  if (J) J->setZero(L, L);
  for (int k = 0; k < L; ++k) {
    long double drift = 0.0L;
    double dsum = 0.0;
    for (int j = 0; j < L; ++j) {
      if (j == k) continue;
      const double w = m.levels[j] / (m.levels[k] - m.levels[j]);
      drift += w * (static_cast<long double>(x[k]) - x[j]);
      dsum += w;
    }
    const long double xk = x[k];
    r[k] = static_cast<double>(xk * xk - xk - static_cast<long double>(gamma) * gamma / m.levels[k] -
                               G * drift);
    if (J) {
      (*J)(k, k) = 2.0 * x[k] - 1.0 - G * dsum;
      for (int j = 0; j < L; ++j)
        if (j != k) (*J)(k, j) = G * m.levels[j] / (m.levels[k] - m.levels[j]);
    }
  }
}

inline EvbVariables pack_dicke(const ModelSpec& m, const Eigen::VectorXd& x) {
  const double G = m.extension.G;
  if (G == 0.0) throw std::invalid_argument("Dicke variables undefined at zero coupling");
  EvbVariables evb;
  const int L = m.L();
  evb.scaled.assign(x.data(), x.data() + L);
  evb.lambdas.resize(L);
  double xsum = 0.0;
  for (int i = 0; i < L; ++i) {
    evb.lambdas[i] = x[i] / (G * G);
    xsum += x[i];
  }
  evb.lambda0 = m.extension.eps0 * m.pairs - xsum;
  evb.has_lambda0 = true;
  return evb;
}

inline EvbVariables pack_ext_pip(const ModelSpec& m, const Eigen::VectorXd& x) {
  EvbVariables evb;
  const int L = m.L();
  evb.lambdas.assign(x.data(), x.data() + L);
  evb.scaled = evb.lambdas;
  double lamsum = 0.0;
  for (int i = 0; i < L; ++i) lamsum += x[i];
  evb.lambda0 = 0.5 * lamsum + m.extension.kappa * m.pairs;
  evb.has_lambda0 = true;
  return evb;
}

inline EvbVariables pack_bath(const Eigen::VectorXd& x) {
  EvbVariables evb;
  evb.lambdas.assign(x.data(), x.data() + x.size());
  evb.scaled = evb.lambdas;
  return evb;
}

// adaptive continuation of a parametrized Newton system with a secant predictor
template <class SystemAt>
inline Eigen::VectorXd continue_parameter(SystemAt&& system_at, Eigen::VectorXd x0, double t0,
                                          double t1, double step_init, double step_min,
                                          int max_iter) {
  NewtonOutcome out = newton_iterate(system_at(t0), std::move(x0), max_iter);
  Eigen::VectorXd x_prev = out.x, x_cur = out.x;
  double t_prev = t0, t_cur = t0;
  double step = step_init;
  int clean = 0;
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  while (t_cur != t1) {
    const double remaining = std::abs(t1 - t_cur);
    const double h = std::min(step, remaining);
    const double t_next = (h >= remaining) ? t1 : t_cur + dir * h;
    Eigen::VectorXd guess = x_cur;
    if (t_cur != t_prev)
      guess += (x_cur - x_prev) * ((t_next - t_cur) / (t_cur - t_prev));
    try {
      NewtonOutcome o = newton_iterate(system_at(t_next), std::move(guess), max_iter);
      x_prev = std::move(x_cur);
      t_prev = t_cur;
      x_cur = std::move(o.x);
      t_cur = t_next;
      if (++clean >= 3) {
        step = std::min(step * 1.5, step_init);
        clean = 0;
      }
    } catch (const NoConvergenceError&) {
      clean = 0;
      step *= 0.5;
      if (step < step_min) throw StepUnderflowError(t_cur);
    }
  }
  return x_cur;
}

}  // namespace detail

inline EvbVariables newton_refine(const ModelSpec& m, const EvbVariables& guess,
                                  int max_iter = 50, int* iters_out = nullptr) {
  const int L = m.L();
  if (static_cast<int>(guess.lambdas.size()) != L)
    throw std::invalid_argument("newton_refine: variable count mismatch");
  switch (m.extension.kind) {
    case ExtensionKind::none: {
      const auto t = detail::make_kernel_tables(m);
      return detail::refine_kernel(m, t, guess, max_iter, iters_out);
    }
    case ExtensionKind::dicke: {
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(guess.scaled.data(), L);
      auto sys = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        detail::dicke_system(m, v, r, J);
      };
      auto out = detail::newton_iterate(sys, std::move(x), max_iter);
      if (iters_out) *iters_out = out.iters;
      return detail::pack_dicke(m, out.x);
    }
    case ExtensionKind::ext_pip: {
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(guess.lambdas.data(), L);
      auto sys = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        detail::ext_pip_system(m, v, r, J);
      };
      auto out = detail::newton_iterate(sys, std::move(x), max_iter);
      if (iters_out) *iters_out = out.iters;
      return detail::pack_ext_pip(m, out.x);
    }
    case ExtensionKind::bath: {
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(guess.lambdas.data(), L);
      auto sys = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        detail::bath_system(m, v, r, J);
      };
      auto out = detail::newton_iterate(sys, std::move(x), max_iter);
      if (iters_out) *iters_out = out.iters;
      return detail::pack_bath(out.x);
    }
  }
  throw std::invalid_argument("newton_refine: unknown extension");
}

// ---- adaptive coupling sweeps (kernel models) ----

namespace detail {

inline EvbVariables taylor_predict(const EvbVariables& cur, const LambdaDerivatives& der,
                                   double g_cur, double g_next, int order, bool any_spin1) {
  const double d = g_next - g_cur;
  const int L = static_cast<int>(cur.lambdas.size());
  EvbVariables guess;
  guess.lambdas.resize(L);
  guess.scaled.resize(L);
  for (int i = 0; i < L; ++i) {
    double lam = cur.lambdas[i] + d * der.d1[i];
    if (order == 2 && !der.d2.empty()) lam += 0.5 * d * d * der.d2[i];
    guess.lambdas[i] = lam;
    guess.scaled[i] = g_next * lam;
  }
  if (any_spin1 && !cur.lambda2.empty()) {
    guess.lambda2.resize(L);
    for (int i = 0; i < L; ++i) {
      double l2 = cur.lambda2[i];
      if (!der.d1_lambda2.empty()) l2 += d * der.d1_lambda2[i];
      if (order == 2 && !der.d2_lambda2.empty()) l2 += 0.5 * d * d * der.d2_lambda2[i];
      guess.lambda2[i] = l2;
    }
  }
  return guess;
}

}  // namespace detail

// continue an on-shell state from opts.g_start to opts.g_target
inline SweepTrace sweep_from(const ModelSpec& model, const EvbVariables& start,
                             const SweepOptions& opts) {
  validate(opts);
  const detail::KernelTables tables = detail::make_kernel_tables(model);
  ModelSpec m = model;
  m.g = opts.g_start;
  int iters0 = 0;
  EvbVariables cur = detail::refine_kernel(m, tables, start, opts.newton_max_iter, &iters0);
  LambdaDerivatives der = dlambda_dg(m, cur, opts.taylor_order);
  SweepTrace trace;
  trace.points.push_back({m.g, cur, occupations(m, cur, der.d1), iters0});
  double g_cur = opts.g_start;
  double step = opts.step_init;
  int clean = 0;
  const double dir = (opts.g_target >= opts.g_start) ? 1.0 : -1.0;
  while (g_cur != opts.g_target) {
    const double remaining = std::abs(opts.g_target - g_cur);
    const double h = std::min(step, remaining);
    const double g_next = (h >= remaining) ? opts.g_target : g_cur + dir * h;
    const EvbVariables guess =
        detail::taylor_predict(cur, der, g_cur, g_next, opts.taylor_order, tables.any_spin1);
    ModelSpec mn = model;
    mn.g = g_next;
    bool ok = true;
    EvbVariables next;
    int iters = 0;
    try {
      next = detail::refine_kernel(mn, tables, guess, opts.newton_max_iter, &iters);
      ok = detail::evb_inf_norm(evb_residuals(mn, next)) < tau_residual;
      // guard against branch hops: the corrector must stay near the predictor
      // (Newton can silently converge onto a neighbouring solution when two
      // branches pass close to each other)
      double disp = 0.0, dev = 0.0, scale = 1.0;
      for (int i = 0; i < mn.L(); ++i) {
        disp = std::max(disp, std::abs(guess.scaled[i] - cur.scaled[i]));
        dev = std::max(dev, std::abs(next.scaled[i] - guess.scaled[i]));
        scale = std::max(scale, std::abs(cur.scaled[i]));
      }
      if (dev > std::max(0.5 * disp, 0.05 * scale)) ok = false;
    } catch (const NoConvergenceError&) {
      ok = false;
    }
    if (!ok) {
      ++trace.halvings;
      clean = 0;
      step *= 0.5;
      if (step < opts.step_min) throw StepUnderflowError(g_cur);
      continue;
    }
    g_cur = g_next;
    cur = std::move(next);
    der = dlambda_dg(mn, cur, opts.taylor_order);
    trace.points.push_back({g_cur, cur, occupations(mn, cur, der.d1), iters});
    if (++clean >= 3) {
      step = std::min(step * 1.5, opts.step_init);
      clean = 0;
    }
  }
  return trace;
}

inline SweepTrace sweep_g(const ModelSpec& model, const OccupationPattern& pattern,
                          const SweepOptions& opts) {
  return sweep_from(model, init_weak_coupling(model, pattern, opts.g_start), opts);
}

// weak-coupling entry point: |g| = 1e-3 x mean level spacing, sign of g_target
inline double weak_coupling_g(const ModelSpec& m, double g_target) {
  const double spacing = m.level_spread() / std::max(m.L() - 1, 1);
  return std::copysign(1e-3 * spacing, g_target);
}

inline EvbVariables sweep_to(const ModelSpec& model, const OccupationPattern& pattern,
                             double g_target) {
  if (g_target == 0.0) throw std::invalid_argument("sweep_to: target coupling must be nonzero");
  const double g0 = weak_coupling_g(model, g_target);
  if (std::abs(g_target) <= 2.0 * std::abs(g0)) {
    ModelSpec m = model;
    m.g = g_target;
    return newton_refine(m, init_weak_coupling(m, pattern, g_target));
  }
  SweepOptions opts;
  opts.g_start = g0;
  opts.g_target = g_target;
  opts.step_min = 1e-10 * std::max(1.0, std::abs(g_target));
  opts.step_init = std::max(std::abs(g_target - g0) / 20.0, 10.0 * opts.step_min);
  opts.taylor_order = 2;
  return sweep_g(model, pattern, opts).points.back().evb;
}

// ---- full-sector enumeration ----

inline std::map<std::vector<int>, EvbVariables> solve_all(const ModelSpec& model, double g_target,
                                                          int threads = 1) {
  validate(model);
  const auto patterns = enumerate_patterns(model.L(), model.pairs, model.degeneracies);
  std::vector<EvbVariables> sols(patterns.size());
  std::vector<std::string> errors(patterns.size());
  auto solve_one = [&](std::size_t k) {
    try {
      sols[k] = sweep_to(model, patterns[k], g_target);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  const int T = std::max(1, std::min<int>(threads, static_cast<int>(patterns.size())));
  if (T == 1) {
    for (std::size_t k = 0; k < patterns.size(); ++k) solve_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(T);
    for (int w = 0; w < T; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < patterns.size(); k = next++) solve_one(k);
      });
    for (auto& th : pool) th.join();
  }
  for (std::size_t k = 0; k < patterns.size(); ++k)
    if (!errors[k].empty()) {
      std::string tag;
      for (int c : patterns[k].counts) tag += std::to_string(c);
      throw std::runtime_error("solve_all: pattern " + tag + " failed: " + errors[k]);
    }
  for (std::size_t a = 0; a < sols.size(); ++a)
    for (std::size_t b = a + 1; b < sols.size(); ++b) {
      double dist = 0.0;
      for (int i = 0; i < model.L(); ++i)
        dist = std::max(dist, std::abs(sols[a].lambdas[i] - sols[b].lambdas[i]));
      if (dist <= 1e-6)
        throw std::runtime_error("solve_all: duplicate solutions for distinct patterns");
    }
  std::map<std::vector<int>, EvbVariables> out;
  for (std::size_t k = 0; k < patterns.size(); ++k)
    out.emplace(patterns[k].counts, std::move(sols[k]));
  return out;
}

// ---- variant solvers (Dicke / extended p+ip / bath) ----

// Dicke: solutions labelled by the spin-flip subset; the bosonic mode carries
// the remaining N - sum(flips) excitations.  Continuation in the coupling from
// the decoupled point, where G^2 Lambda_i is 0 or (eps0 - eps_i) exactly.
inline EvbVariables solve_dicke(const ModelSpec& m, const std::vector<int>& flips) {
  if (m.extension.kind != ExtensionKind::dicke)
    throw std::invalid_argument("solve_dicke: not a Dicke model");
  if (!m.all_spin_half())
    throw std::invalid_argument("solve_dicke: spin-1/2 levels only");
  if (static_cast<int>(flips.size()) != m.L())
    throw std::invalid_argument("solve_dicke: flip pattern size mismatch");
  int nf = 0;
  for (int f : flips) {
    if (f != 0 && f != 1) throw std::invalid_argument("solve_dicke: flips must be 0/1");
    nf += f;
  }
  if (nf > m.pairs) throw std::invalid_argument("solve_dicke: more flips than excitations");
  const double G = m.extension.G;
  if (G == 0.0) throw std::invalid_argument("solve_dicke: coupling must be nonzero");
  Eigen::VectorXd x0(m.L());
  for (int i = 0; i < m.L(); ++i) x0[i] = flips[i] * (m.extension.eps0 - m.levels[i]);
  auto system_at = [&m](double t) {
    ModelSpec mt = m;
    mt.extension.G = t;
    return [mt](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
      detail::dicke_system(mt, v, r, J);
    };
  };
  const Eigen::VectorXd x = detail::continue_parameter(
      system_at, std::move(x0), 0.0, G, std::max(std::abs(G) / 8.0, 1e-8),
      1e-10 * std::max(1.0, std::abs(G)), 50);
  return detail::pack_dicke(m, x);
}

inline std::vector<std::pair<std::vector<int>, EvbVariables>> solve_all_dicke(const ModelSpec& m) {
  const int nmax = std::min(m.L(), m.pairs);
  std::vector<std::vector<int>> flips;
  std::vector<int> cur(m.L(), 0);
  detail::enumerate_pattern_counts(std::vector<int>(m.L(), 1), 0, nmax, false, cur, flips);
  std::vector<std::pair<std::vector<int>, EvbVariables>> out;
  out.reserve(flips.size());
  for (const auto& f : flips) out.emplace_back(f, solve_dicke(m, f));
  return out;
}

// extended p+ip: solutions labelled by the boson count n_b and the pattern of
// the N - n_b pair rapidities.  At eta0 = 0 the boson decouples and the pair
// sector is the hyperbolic kernel model at 1/g = kappa + n_b shifted by the
// n_b zero rapidities (Lambda_i -> Lambda_i + n_b); continuation in eta0.
inline EvbVariables solve_ext_pip(const ModelSpec& m, int n_b, const OccupationPattern& pairs) {
  if (m.extension.kind != ExtensionKind::ext_pip)
    throw std::invalid_argument("solve_ext_pip: not an extended p+ip model");
  if (!m.all_spin_half())
    throw std::invalid_argument("solve_ext_pip: spin-1/2 levels only");
  const int Np = m.pairs - n_b;
  if (n_b < 0 || Np < 0 || Np > m.L())
    throw std::invalid_argument("solve_ext_pip: invalid boson count");
  if (pairs.total() != Np)
    throw std::invalid_argument("solve_ext_pip: pair pattern does not sum to N - n_b");
  const double geff_inv = m.extension.kappa + n_b;
  if (std::abs(geff_inv) < 1e-8)
    throw SingularSystemError("solve_ext_pip: boson-shifted coupling diverges");
  ModelSpec km;
  km.kernel = make_kernel(KernelKind::hyperbolic);
  km.levels = m.levels;
  km.degeneracies.assign(m.L(), 0.5);
  km.pairs = Np;
  km.g = 1.0 / geff_inv;
  validate(km);
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(m.L(), static_cast<double>(n_b));
  if (Np > 0) {
    const EvbVariables ks = sweep_to(km, pairs, km.g);
    for (int i = 0; i < m.L(); ++i) x0[i] += ks.lambdas[i];
  }
  auto system_at = [&m](double t) {
    ModelSpec mt = m;
    mt.extension.eta0 = t;
    return [mt](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
      detail::ext_pip_system(mt, v, r, J);
    };
  };
  const double eta0 = m.extension.eta0;
  Eigen::VectorXd x = x0;
  if (eta0 != 0.0)
    x = detail::continue_parameter(system_at, std::move(x0), 0.0, eta0,
                                   std::max(std::abs(eta0) / 8.0, 1e-8),
                                   1e-10 * std::max(1.0, std::abs(eta0)), 50);
  else
    x = detail::newton_iterate(system_at(0.0), std::move(x0), 50).x;
  return detail::pack_ext_pip(m, x);
}

inline std::vector<std::tuple<int, std::vector<int>, EvbVariables>> solve_all_ext_pip(
    const ModelSpec& m) {
  std::vector<std::tuple<int, std::vector<int>, EvbVariables>> out;
  for (int n_b = std::max(0, m.pairs - m.L()); n_b <= m.pairs; ++n_b)
    for (const auto& p : enumerate_patterns(m.L(), m.pairs - n_b, m.degeneracies))
      out.emplace_back(n_b, p.counts, solve_ext_pip(m, n_b, p));
  return out;
}

// bath: one solution per +/- branch pattern of the decoupled charge roots
// q_k = [1 +/- sqrt(1 + 4 gamma^2/eta_k)]/2; continuation in the coupling G
inline EvbVariables solve_bath(const ModelSpec& m, const std::vector<int>& occupied) {
  if (m.extension.kind != ExtensionKind::bath)
    throw std::invalid_argument("solve_bath: not a bath model");
  if (static_cast<int>(occupied.size()) != m.L())
    throw std::invalid_argument("solve_bath: branch pattern size mismatch");
  const double gamma = m.extension.gamma;
  Eigen::VectorXd x0(m.L());
  for (int k = 0; k < m.L(); ++k) {
    if (occupied[k] != 0 && occupied[k] != 1)
      throw std::invalid_argument("solve_bath: branches must be 0/1");
    const double s = std::sqrt(1.0 + 4.0 * gamma * gamma / m.levels[k]);
    x0[k] = 0.5 * (1.0 + (occupied[k] ? s : -s));
  }
  auto system_at = [&m](double t) {
    ModelSpec mt = m;
    mt.g = t;
    return [mt](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
      detail::bath_system(mt, v, r, J);
    };
  };
  Eigen::VectorXd x = x0;
  if (m.g != 0.0)
    x = detail::continue_parameter(system_at, std::move(x0), 0.0, m.g,
                                   std::max(std::abs(m.g) / 8.0, 1e-8),
                                   1e-10 * std::max(1.0, std::abs(m.g)), 50);
  return detail::pack_bath(x);
}

inline std::vector<std::pair<std::vector<int>, EvbVariables>> solve_all_bath(const ModelSpec& m) {
  std::vector<std::vector<int>> branches;
  std::vector<int> cur(m.L(), 0);
  detail::enumerate_pattern_counts(std::vector<int>(m.L(), 1), 0, m.L(), false, cur, branches);
  std::vector<std::pair<std::vector<int>, EvbVariables>> out;
  out.reserve(branches.size());
  for (const auto& b : branches) out.emplace_back(b, solve_bath(m, b));
  return out;
}

// ---- trace export ----

inline void write_sweep_csv(std::ostream& os, const SweepTrace& trace) {
  if (trace.points.empty()) throw std::invalid_argument("write_sweep_csv: empty trace");
  const int L = trace.points.front().evb.L();
  os << "g";
  for (int i = 1; i <= L; ++i) os << ",lambda_" << i;
  for (int i = 1; i <= L; ++i) os << ",occ_" << i;
  os << ",newton_iters\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    os << buf;
  };
  for (const auto& p : trace.points) {
    put(p.g);
    for (int i = 0; i < L; ++i) {
      os << ",";
      put(p.evb.lambdas[i]);
    }
    for (int i = 0; i < L; ++i) {
      os << ",";
      put(p.occ[i]);
    }
    os << "," << p.newton_iters << "\n";
  }
}

}  // namespace rg
