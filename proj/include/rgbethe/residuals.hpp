#pragma once

// Residual evaluators and eigenvalue maps for all supported model variants:
// Bethe-equation residuals in the rapidities, quadratic (eigenvalue-based)
// residuals in the Lambda variables, the roots -> Lambda map, conserved-charge
// eigenvalues and state energies.
//
// Variable conventions per variant (the `scaled` field of EvbVariables):
//   kernel models   : Lambda_i = sum_a Z(eps_i, v_a),        scaled = g Lambda_i
//   Dicke           : Lambda_i = sum_a 1/(eps_i - v_a),      scaled = G^2 Lambda_i,
//                     Lambda_0 = sum_a v_a
//   extended p+ip   : Lambda_i = sum_a (e_i+v_a)/(e_i-v_a),  scaled = Lambda_i,
//                     Lambda_0 = sum_a eta0^2 / v_a
//   bath            : Lambda_k = q_k = G sum_a x_a/(eta_k - x_a)  (charge
//                     eigenvalues themselves), scaled = q_k

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgbethe/model.hpp"

namespace rg {

// ---- input guards ----

inline void check_roots(const ModelSpec& m, const BetheRoots& r) {
  const double tol = m.tau_coincide();
  for (int a = 0; a < r.N(); ++a) {
    for (int b = a + 1; b < r.N(); ++b)
      if (std::abs(r.roots[a] - r.roots[b]) < tol)
        throw std::invalid_argument("roots " + std::to_string(a) + " and " +
                                    std::to_string(b) + " coincide");
    for (int i = 0; i < m.L(); ++i)
      if (std::abs(r.roots[a] - m.levels[i]) < tol)
        throw std::invalid_argument("root " + std::to_string(a) + " sits on level " +
                                    std::to_string(i));
  }
}

// multiplier taking lambdas to the scaled numerical unknowns, per variant
inline double evb_scale(const ModelSpec& m) {
  switch (m.extension.kind) {
    case ExtensionKind::none:    return m.g;
    case ExtensionKind::dicke:   return m.extension.G * m.extension.G;
    case ExtensionKind::ext_pip: return 1.0;
    case ExtensionKind::bath:    return 1.0;
  }
  return m.g;
}

// ---- Bethe residuals ----

namespace detail {

// bath variant, levels eta_k, roots x_a = v_a^2 (L of them when gamma != 0):
//   F_a + (gamma^2/G) prod_j (1/x_a - 1/eta_j) / prod_{b!=a} (1/x_a - 1/x_b) = 0,
//   F_a = (1+G) - G sum_j eta_j/(eta_j - x_a) + 2G sum_{b!=a} x_b/(x_b - x_a)
inline std::vector<cplx> bath_bethe_residuals(const ModelSpec& m, const BetheRoots& r) {
  const double G = m.g, gamma = m.extension.gamma;
  std::vector<cplx> res(r.N());
  for (int a = 0; a < r.N(); ++a) {
    const cplx x = r.roots[a];
    cplx F = 1.0 + G;
    for (int j = 0; j < m.L(); ++j) F -= G * m.levels[j] / (m.levels[j] - x);
    for (int b = 0; b < r.N(); ++b)
      if (b != a) F += 2.0 * G * r.roots[b] / (r.roots[b] - x);
    res[a] = F;
    if (gamma != 0.0) {
      cplx ratio = 1.0;
      for (int j = 0; j < m.L(); ++j) ratio *= 1.0 / x - 1.0 / m.levels[j];
      for (int b = 0; b < r.N(); ++b)
        if (b != a) ratio /= 1.0 / x - 1.0 / r.roots[b];
      res[a] += gamma * gamma / G * ratio;
    }
  }
  return res;
}

// Dicke variant: (eps0 - v_a) - 2G^2 sum_i s_i/(eps_i - v_a) + 2G^2 sum_{b!=a} 1/(v_b - v_a)
inline std::vector<cplx> dicke_bethe_residuals(const ModelSpec& m, const BetheRoots& r) {
  const double G = m.extension.G, eps0 = m.extension.eps0;
  std::vector<cplx> res(r.N());
  for (int a = 0; a < r.N(); ++a) {
    const cplx v = r.roots[a];
    cplx t = eps0 - v;
    for (int i = 0; i < m.L(); ++i)
      t -= 2.0 * G * G * m.degeneracies[i] / (m.levels[i] - v);
    for (int b = 0; b < r.N(); ++b)
      if (b != a) t += 2.0 * G * G / (r.roots[b] - v);
    res[a] = t;
  }
  return res;
}

// extended p+ip: kappa - eta0^2/v_a + sum_i s_i (e_i+v_a)/(e_i-v_a) - sum_{b!=a} (v_b+v_a)/(v_b-v_a)
inline std::vector<cplx> ext_pip_bethe_residuals(const ModelSpec& m, const BetheRoots& r) {
  const double eta0 = m.extension.eta0, kappa = m.extension.kappa;
  std::vector<cplx> res(r.N());
  for (int a = 0; a < r.N(); ++a) {
    const cplx v = r.roots[a];
    cplx t = kappa - eta0 * eta0 / v;
    for (int i = 0; i < m.L(); ++i)
      t += m.degeneracies[i] * (m.levels[i] + v) / (m.levels[i] - v);
    for (int b = 0; b < r.N(); ++b)
      if (b != a) t -= (r.roots[b] + v) / (r.roots[b] - v);
    res[a] = t;
  }
  return res;
}

}  // namespace detail

// residual_a = 1/g + sum_i Z(eps_i, v_a) s_i - sum_{b!=a} Z(v_b, v_a)
// (kernel models), or the documented bath / Dicke / ext-p+ip variant forms
inline std::vector<cplx> bethe_residuals(const ModelSpec& m, const BetheRoots& r) {
  check_roots(m, r);
  switch (m.extension.kind) {
    case ExtensionKind::bath:    return detail::bath_bethe_residuals(m, r);
    case ExtensionKind::dicke:   return detail::dicke_bethe_residuals(m, r);
    case ExtensionKind::ext_pip: return detail::ext_pip_bethe_residuals(m, r);
    case ExtensionKind::none:    break;
  }
  const KernelKind kind = m.kernel.variant;
  std::vector<cplx> res(r.N());
  for (int a = 0; a < r.N(); ++a) {
    const cplx v = r.roots[a];
    cplx t = 1.0 / m.g;
    for (int i = 0; i < m.L(); ++i)
      t += m.degeneracies[i] * kernel_Z(kind, cplx(m.levels[i]), v);
    for (int b = 0; b < r.N(); ++b)
      if (b != a) t -= kernel_Z(kind, r.roots[b], v);
    res[a] = t;
  }
  return res;
}

// ---- roots -> eigenvalue-based variables ----

inline EvbVariables lambda_from_roots(const ModelSpec& m, const BetheRoots& r) {
  check_roots(m, r);
  const int L = m.L();
  std::vector<cplx> lam(L, 0.0);
  cplx lam0 = 0.0;
  bool has0 = false;
  double scale_factor = m.g;  // lambda -> scaled multiplier
  switch (m.extension.kind) {
    case ExtensionKind::none:
      for (int i = 0; i < L; ++i)
        for (int a = 0; a < r.N(); ++a)
          lam[i] += kernel_Z(m.kernel.variant, cplx(m.levels[i]), r.roots[a]);
      break;
    case ExtensionKind::dicke:
      for (int i = 0; i < L; ++i)
        for (int a = 0; a < r.N(); ++a) lam[i] += 1.0 / (m.levels[i] - r.roots[a]);
      for (int a = 0; a < r.N(); ++a) lam0 += r.roots[a];
      has0 = true;
      scale_factor = m.extension.G * m.extension.G;
      break;
    case ExtensionKind::ext_pip:
      for (int i = 0; i < L; ++i)
        for (int a = 0; a < r.N(); ++a)
          lam[i] += (m.levels[i] + r.roots[a]) / (m.levels[i] - r.roots[a]);
      for (int a = 0; a < r.N(); ++a)
        lam0 += m.extension.eta0 * m.extension.eta0 / r.roots[a];
      has0 = true;
      scale_factor = 1.0;
      break;
    case ExtensionKind::bath:
      for (int k = 0; k < L; ++k)
        for (int a = 0; a < r.N(); ++a)
          lam[k] += m.g * r.roots[a] / (m.levels[k] - r.roots[a]);
      scale_factor = 1.0;
      break;
  }
  EvbVariables evb;
  evb.lambdas.resize(L);
  evb.scaled.resize(L);
  for (int i = 0; i < L; ++i) {
    if (std::abs(lam[i].imag()) > tau_conj * (1.0 + std::abs(lam[i])))
      throw std::runtime_error("lambda_from_roots: residual imaginary part at level " +
                               std::to_string(i));
    evb.lambdas[i] = lam[i].real();
    evb.scaled[i] = scale_factor * lam[i].real();
  }
  if (has0) {
    if (std::abs(lam0.imag()) > tau_conj * (1.0 + std::abs(lam0)))
      throw std::runtime_error("lambda_from_roots: residual imaginary part in boson variable");
    evb.lambda0 = lam0.real();
    evb.has_lambda0 = true;
  }
  // second-order variables for spin-1 levels (degenerate quadratic set)
  bool any_spin1 = false;
  for (double d : m.degeneracies) any_spin1 |= std::abs(d - 1.0) < 1e-14;
  if (any_spin1 && m.extension.kind == ExtensionKind::none) {
    evb.lambda2.assign(L, 0.0);
    for (int i = 0; i < L; ++i) {
      cplx l2 = 0.0;
      for (int a = 0; a < r.N(); ++a) {
        const cplx z = kernel_Z(m.kernel.variant, cplx(m.levels[i]), r.roots[a]);
        l2 += z * z;
      }
      evb.lambda2[i] = l2.real();
    }
  }
  return evb;
}

// ---- quadratic (eigenvalue-based) residuals, L+1 entries ----

namespace detail {

// kernel models, spins 1/2 and 1, in scaled variables lambda_i = g Lambda_i:
//   lambda_i^2 + 2 lambda_i - 2g sum_{j!=i} s_j Z_ij (lambda_i - lambda_j)
//     - g^2 Gamma N (1 - N + 2 sum_{j!=i} s_j) + g^2 [Lambda_i^(2)]_{s_i=1} = 0
// with Lambda_i^(2) eliminated through the first-derivative equation
//   (2 Lambda_i + 2/g - 2 sum_{j!=i} s_j Z_ij)(Lambda_i^(2) + Gamma N)
//     = 2 sum_{j!=i} s_j (Z_ij^2 + Gamma)(Lambda_i - Lambda_j),
// both verified against the dense oracle on exact eigenstates.
inline std::vector<double> kernel_evb_residuals(const ModelSpec& m, const EvbVariables& evb) {
  const int L = m.L();
  const int N = m.pairs;
  const double g = m.g;
  const double Gamma = m.kernel.gamma;
  for (double d : m.degeneracies)
    if (std::abs(d - 0.5) > 1e-14 && std::abs(d - 1.0) > 1e-14)
      throw std::invalid_argument("evb_residuals: quadratic set implemented for spins 1/2 and 1 only");
  if (static_cast<int>(evb.scaled.size()) != L)
    throw std::invalid_argument("evb_residuals: variable count mismatch");
  std::vector<double> res(L + 1, 0.0);
  double sum_scaled = 0.0;
  for (int i = 0; i < L; ++i) {
    const double li = evb.scaled[i];
    double drift = 0.0;   // g * sum_{j != i} s_j Z_ij (Lambda_i - Lambda_j)
    double drift2 = 0.0;  // g * sum_{j != i} s_j (Z_ij^2 + Gamma)(Lambda_i - Lambda_j)
    double zsum = 0.0;    // sum_{j != i} s_j Z_ij
    double ssum = 0.0;
    for (int j = 0; j < L; ++j) {
      if (j == i) continue;
      const double Z = kernel_Z(m.kernel.variant, m.levels[i], m.levels[j]);
      drift += m.degeneracies[j] * Z * (li - evb.scaled[j]);
      drift2 += m.degeneracies[j] * (Z * Z + Gamma) * (li - evb.scaled[j]);
      zsum += m.degeneracies[j] * Z;
      ssum += m.degeneracies[j];
    }
    double r = li * li + 2.0 * li - 2.0 * g * drift -
               g * g * Gamma * N * (1.0 - N + 2.0 * ssum);
    if (std::abs(m.degeneracies[i] - 1.0) < 1e-14) {
      // spin-1 level: add g^2 Lambda_i^(2), eliminated unless supplied
      double l2g2;  // g^2 Lambda_i^(2)
      if (!evb.lambda2.empty()) {
        l2g2 = g * g * evb.lambda2[i];
      } else {
        const double denom = 2.0 * li + 2.0 - 2.0 * g * zsum;
        if (std::abs(denom) < 1e-12)
          throw std::runtime_error("evb_residuals: singular spin-1 elimination at level " +
                                   std::to_string(i));
        l2g2 = 2.0 * g * g * drift2 / denom - g * g * Gamma * N;
      }
      r += l2g2;
    }
    res[i] = r;
    sum_scaled += m.degeneracies[i] * evb.scaled[i];
  }
  res[L] = -sum_scaled - N;  // N = -sum_i g s_i Lambda_i
  return res;
}

inline std::vector<double> dicke_evb_residuals(const ModelSpec& m, const EvbVariables& evb) {
  const int L = m.L();
  const double G = m.extension.G, eps0 = m.extension.eps0;
  if (!m.all_spin_half())
    throw std::invalid_argument("evb_residuals: Dicke quadratic set requires spin-1/2");
  if (!evb.has_lambda0)
    throw std::invalid_argument("evb_residuals: Dicke variables need lambda0");
  std::vector<double> res(L + 1, 0.0);
  double lamsum = 0.0;
  for (int i = 0; i < L; ++i) {
    const double li = evb.lambdas[i];
    double drift = 0.0;
    for (int j = 0; j < L; ++j)
      if (j != i) drift += (li - evb.lambdas[j]) / (m.levels[i] - m.levels[j]);
    res[i] = G * G * li * li - m.pairs + li * (m.levels[i] - eps0) - G * G * drift;
    lamsum += li;
  }
  res[L] = evb.lambda0 + G * G * lamsum - eps0 * m.pairs;
  return res;
}

// extended p+ip (quadratic set verified against the dense oracle for
// L <= 3, N <= 3):
//   Lambda_i^2 = -N(L-N) - 2 kappa Lambda_i + 2 Lambda_0 + 2 eta0^2 (Lambda_i + N)/e_i
//                + sum_{j!=i} Z_ij (Lambda_i - Lambda_j)
//   2 Lambda_0 = sum_i Lambda_i + 2 kappa N
inline std::vector<double> ext_pip_evb_residuals(const ModelSpec& m, const EvbVariables& evb) {
  const int L = m.L();
  const int N = m.pairs;
  const double eta0 = m.extension.eta0, kappa = m.extension.kappa;
  if (!m.all_spin_half())
    throw std::invalid_argument("evb_residuals: ext-p+ip quadratic set requires spin-1/2");
  if (!evb.has_lambda0)
    throw std::invalid_argument("evb_residuals: ext-p+ip variables need lambda0");
  std::vector<double> res(L + 1, 0.0);
  double lamsum = 0.0;
  for (int i = 0; i < L; ++i) {
    const double li = evb.lambdas[i];
    const double ei = m.levels[i];
    double drift = 0.0;
    for (int j = 0; j < L; ++j)
      if (j != i)
        drift += (ei + m.levels[j]) / (ei - m.levels[j]) * (li - evb.lambdas[j]);
    res[i] = li * li + N * (L - N) + 2.0 * kappa * li - 2.0 * evb.lambda0 -
             2.0 * eta0 * eta0 * (li + N) / ei - drift;
    lamsum += li;
  }
  res[L] = 2.0 * evb.lambda0 - lamsum - 2.0 * kappa * N;
  return res;
}

// bath: operator identity per level in the charge eigenvalues q_k,
//   q_k^2 - q_k - gamma^2/eta_k - G sum_{k'!=k} eta_k' (q_k - q_k')/(eta_k - eta_k') = 0
inline std::vector<double> bath_evb_residuals(const ModelSpec& m, const EvbVariables& evb) {
  const int L = m.L();
  const double G = m.g, gamma = m.extension.gamma;
  std::vector<double> res(L + 1, 0.0);
  for (int k = 0; k < L; ++k) {
    const double q = evb.lambdas[k];
    double drift = 0.0;
    for (int j = 0; j < L; ++j)
      if (j != k) drift += m.levels[j] * (q - evb.lambdas[j]) / (m.levels[k] - m.levels[j]);
    res[k] = q * q - q - gamma * gamma / m.levels[k] - G * drift;
  }
  res[L] = 0.0;  // no number constraint (the bath field breaks pair-number conservation)
  return res;
}

}  // namespace detail

inline std::vector<double> evb_residuals(const ModelSpec& m, const EvbVariables& evb) {
  switch (m.extension.kind) {
    case ExtensionKind::none:
      if (m.kernel.variant == KernelKind::trigonometric)
        throw std::invalid_argument("evb_residuals: trigonometric variant unsupported");
      return detail::kernel_evb_residuals(m, evb);
    case ExtensionKind::dicke:   return detail::dicke_evb_residuals(m, evb);
    case ExtensionKind::ext_pip: return detail::ext_pip_evb_residuals(m, evb);
    case ExtensionKind::bath:    return detail::bath_evb_residuals(m, evb);
  }
  throw std::invalid_argument("evb_residuals: unknown extension");
}

// ---- conserved-charge eigenvalues ----

inline std::vector<double> charge_eigenvalues(const ModelSpec& m, const EvbVariables& evb) {
  const int L = m.L();
  std::vector<double> q(L, 0.0);
  switch (m.extension.kind) {
    case ExtensionKind::none:
      if (m.all_spin_half()) {
        // shifted convention: q_i = -(g/2) Lambda_i, sum = N
        for (int i = 0; i < L; ++i) q[i] = -0.5 * evb.scaled[i];
      } else {
        // general spin, unshifted: q_i = -s_i [1 + g Lambda_i - g sum_{j!=i} Z_ij s_j]
        for (int i = 0; i < L; ++i) {
          double zs = 0.0;
          for (int j = 0; j < L; ++j)
            if (j != i)
              zs += kernel_Z(m.kernel.variant, m.levels[i], m.levels[j]) * m.degeneracies[j];
          q[i] = -m.degeneracies[i] * (1.0 + evb.scaled[i] - m.g * zs);
        }
      }
      break;
    case ExtensionKind::dicke: {
      const double G = m.extension.G, eps0 = m.extension.eps0;
      for (int i = 0; i < L; ++i) {
        double zs = 0.0;
        for (int j = 0; j < L; ++j)
          if (j != i) zs += 1.0 / (m.levels[i] - m.levels[j]);
        q[i] = 0.5 * ((m.levels[i] - eps0) + 2.0 * G * G * evb.lambdas[i] - G * G * zs) / eps0;
      }
      break;
    }
    case ExtensionKind::ext_pip: {
      const double eta0 = m.extension.eta0, kappa = m.extension.kappa;
      for (int i = 0; i < L; ++i) {
        double zs = 0.0;
        for (int j = 0; j < L; ++j)
          if (j != i)
            zs += m.degeneracies[j] * (m.levels[i] + m.levels[j]) / (m.levels[i] - m.levels[j]);
        q[i] = 0.5 * (-kappa - evb.lambdas[i] + eta0 * eta0 / m.levels[i]) + 0.5 * zs;
      }
      break;
    }
    case ExtensionKind::bath:
      q = evb.lambdas;  // the variables are the eigenvalues
      break;
  }
  return q;
}

// ---- state energies from the eigenvalue-based variables ----

// Uniform-coupling model energies expressed through the conserved charges.
// Rational kernel (any spins): H = sum_i 2 eps_i (S_i^z + d_i) + g S^+_tot S^-_tot,
// and summing 2 eps_i Q_i^unshifted collapses the two-body pieces on a fixed
// S^z_tot = M sector, so  E = sum_i 2 eps_i (q_i + d_i) - g [M^2 - M - sum_i d_i(d_i+1)].
// Hyperbolic kernel (spin 1/2): H_pip(G) = (G/g) sum_i eta_i Q_i^shifted + beta
// under the density-dependent coupling map.
inline double energy_from_evb(const ModelSpec& m, const EvbVariables& evb) {
  const int L = m.L();
  switch (m.extension.kind) {
    case ExtensionKind::none: {
      if (m.kernel.variant == KernelKind::rational) {
        double e = 0.0, dsum = 0.0, d2sum = 0.0;
        for (int i = 0; i < L; ++i) {
          double zs = 0.0;
          for (int j = 0; j < L; ++j)
            if (j != i)
              zs += kernel_Z(m.kernel.variant, m.levels[i], m.levels[j]) * m.degeneracies[j];
          const double q = -m.degeneracies[i] * (1.0 + evb.scaled[i] - m.g * zs);
          e += 2.0 * m.levels[i] * (q + m.degeneracies[i]);
          dsum += m.degeneracies[i];
          d2sum += m.degeneracies[i] * (m.degeneracies[i] + 1.0);
        }
        const double M = m.pairs - dsum;
        return e - m.g * (M * M - M - d2sum);
      }
      if (m.kernel.variant == KernelKind::hyperbolic) {
        if (!m.all_spin_half())
          throw std::invalid_argument("energy_from_evb: hyperbolic route needs spin-1/2");
        const double G = pip_G_from_g(m);
        double e = 0.0, eta_sum = 0.0;
        for (int i = 0; i < L; ++i) {
          e += (G / m.g) * m.levels[i] * (-0.5 * evb.scaled[i]);
          eta_sum += m.levels[i];
        }
        return e + eta_sum * (0.5 * (1.0 + G) - 0.5 * G / m.g + 0.25 * G * L);
      }
      throw std::invalid_argument("energy_from_evb: unsupported kernel variant");
    }
    case ExtensionKind::dicke: {
      if (!evb.has_lambda0)
        throw std::invalid_argument("energy_from_evb: Dicke variables need lambda0");
      double e = evb.lambda0;
      for (int i = 0; i < L; ++i) e -= m.levels[i] * m.degeneracies[i];
      return e;
    }
    case ExtensionKind::ext_pip: {
      if (!evb.has_lambda0)
        throw std::invalid_argument("energy_from_evb: ext-p+ip variables need lambda0");
      double e = m.extension.kappa * (m.pairs - 0.5 * L) - evb.lambda0;
      for (int i = 0; i < L; ++i)
        e += 0.5 * m.extension.eta0 * m.extension.eta0 / m.levels[i];
      return e;
    }
    case ExtensionKind::bath: {
      double e = 0.0;
      for (int k = 0; k < L; ++k) e += m.levels[k] * evb.lambdas[k];
      return e;
    }
  }
  throw std::invalid_argument("energy_from_evb: unknown extension");
}

// ---- state energies from the rapidities ----

enum class EnergyKind { by_model, bcs, pip, central_spin, dicke, ext_pip, bath };

inline double state_energy(const ModelSpec& m, const BetheRoots& r,
                           EnergyKind kind = EnergyKind::by_model) {
  if (kind == EnergyKind::by_model) {
    switch (m.extension.kind) {
      case ExtensionKind::bath:    kind = EnergyKind::bath; break;
      case ExtensionKind::dicke:   kind = EnergyKind::dicke; break;
      case ExtensionKind::ext_pip: kind = EnergyKind::ext_pip; break;
      case ExtensionKind::none:
        if (m.kernel.variant == KernelKind::rational) kind = EnergyKind::bcs;
        else if (m.kernel.variant == KernelKind::hyperbolic) kind = EnergyKind::pip;
        else throw std::invalid_argument("state_energy: unsupported model kind");
        break;
    }
  }
  cplx e = 0.0;
  switch (kind) {
    case EnergyKind::bcs:
      // seniority zero: E = 2 sum_a v_a (vacuum constant 0 in pair levels 2eps(S^z+d))
      for (const cplx& v : r.roots) e += 2.0 * v;
      break;
    case EnergyKind::pip:
      for (const cplx& v : r.roots) e += v;
      break;
    case EnergyKind::dicke: {
      // E = sum_a v_a - sum_i eps_i s_i
      for (const cplx& v : r.roots) e += v;
      for (int i = 0; i < m.L(); ++i) e -= m.levels[i] * m.degeneracies[i];
      break;
    }
    case EnergyKind::ext_pip: {
      // E = sum_i q_i = kappa (N - L/2) - Lambda_0 + (eta0^2/2) sum_i 1/e_i
      const double eta0 = m.extension.eta0, kappa = m.extension.kappa;
      cplx lam0 = 0.0;
      for (const cplx& v : r.roots) lam0 += eta0 * eta0 / v;
      e = kappa * (m.pairs - 0.5 * m.L()) - lam0;
      for (int i = 0; i < m.L(); ++i) e += 0.5 * eta0 * eta0 / m.levels[i];
      break;
    }
    case EnergyKind::bath: {
      // E = sum_k eta_k q_k with q_k = G sum_a x_a/(eta_k - x_a);
      // reduces to (1+G) sum_a x_a for gamma = 0 states
      for (int k = 0; k < m.L(); ++k) {
        cplx qk = 0.0;
        for (const cplx& x : r.roots) qk += m.g * x / (m.levels[k] - x);
        e += m.levels[k] * qk;
      }
      break;
    }
    case EnergyKind::central_spin: {
      // H = B_z Q_1 (unshifted charge of the first level) at B_z = 1
      const EvbVariables evb = lambda_from_roots(m, r);
      double zs = 0.0;
      for (int j = 1; j < m.L(); ++j)
        zs += kernel_Z(m.kernel.variant, m.levels[0], m.levels[j]) * m.degeneracies[j];
      return -m.degeneracies[0] * (1.0 + evb.scaled[0] - m.g * zs);
    }
    case EnergyKind::by_model:
      throw std::logic_error("state_energy: unresolved kind");
  }
  if (std::abs(e.imag()) > tau_conj * (1.0 + std::abs(e)))
    throw std::runtime_error("state_energy: residual imaginary part");
  return e.real();
}

}  // namespace rg
