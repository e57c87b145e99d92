#pragma once

// Exact-diagonalization oracle: enumerated seniority-zero sectors, dense
// Hamiltonian/charge builders for every implemented model, and dense or
// Lanczos eigensolvers.  This module is the ground truth the analytic
// (Bethe / eigenvalue-based / determinant) routes are tested against.
//
// Basis conventions: a label is the vector of per-level pair counts
// (n_1, ..., n_L), with the boson count appended last for bosonic sectors;
// labels are enumerated in lexicographic order.

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rgbethe/model.hpp"

namespace rg {

using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;

constexpr int ed_dimension_cap = 20000;

enum class SectorKind { fixed_N, all_N_even_parity, bosonic_fixed_total };

struct SectorBasis {
  SectorKind kind = SectorKind::fixed_N;
  int L = 0;
  std::vector<int> caps;   // per-level maximum pair count, 2 d_i
  int total = 0;           // N for fixed_N / bosonic_fixed_total
  std::vector<std::vector<int>> labels;
  std::map<std::vector<int>, int> index;

  int dim() const { return static_cast<int>(labels.size()); }
  bool bosonic() const { return kind == SectorKind::bosonic_fixed_total; }
  int lookup(const std::vector<int>& label) const {
    auto it = index.find(label);
    return it == index.end() ? -1 : it->second;
  }
};

namespace detail {

inline void enumerate_counts(const std::vector<int>& caps, int level, int remaining,
                             bool exact, std::vector<int>& cur,
                             std::vector<std::vector<int>>& out) {
  const int L = static_cast<int>(caps.size());
  if (level == L) {
    if (!exact || remaining == 0) out.push_back(cur);
    return;
  }
  const int hi = std::min(caps[level], remaining);
  for (int n = 0; n <= hi; ++n) {
    cur[level] = n;
    enumerate_counts(caps, level + 1, remaining - n, exact, cur, out);
  }
  cur[level] = 0;
}

}  // namespace detail

inline SectorBasis make_sector(const ModelSpec& m, SectorKind kind) {
  SectorBasis b;
  b.kind = kind;
  b.L = m.L();
  b.caps.resize(b.L);
  for (int i = 0; i < b.L; ++i)
    b.caps[i] = static_cast<int>(std::lround(2.0 * m.degeneracies[i]));
  b.total = m.pairs;
  std::vector<int> cur(b.L, 0);
  std::vector<std::vector<int>> spins;
  switch (kind) {
    case SectorKind::fixed_N:
      detail::enumerate_counts(b.caps, 0, b.total, true, cur, spins);
      b.labels = std::move(spins);
      break;
    case SectorKind::all_N_even_parity: {
      int capsum = 0;
      for (int c : b.caps) capsum += c;
      detail::enumerate_counts(b.caps, 0, capsum, false, cur, spins);
      b.labels = std::move(spins);
      break;
    }
    case SectorKind::bosonic_fixed_total:
      detail::enumerate_counts(b.caps, 0, b.total, false, cur, spins);
      for (auto& s : spins) {
        int n = 0;
        for (int c : s) n += c;
        s.push_back(b.total - n);  // boson count last
      }
      b.labels = std::move(spins);
      break;
  }
  if (b.dim() > ed_dimension_cap)
    throw std::runtime_error("make_sector: dimension cap exceeded");
  if (b.dim() == 0) throw std::runtime_error("make_sector: empty sector");
  for (int r = 0; r < b.dim(); ++r) b.index[b.labels[r]] = r;
  return b;
}

// ---- quasispin matrix elements (lowest-weight pair representation) ----
// S_z |n> = (n - c/2) |n>,  S^+ |n> = sqrt((c-n)(n+1)) |n+1>,  c = 2 d_i.

namespace detail {

inline double sz_of(const SectorBasis& b, const std::vector<int>& lab, int i) {
  return lab[i] - 0.5 * b.caps[i];
}
inline double sp_amp(const SectorBasis& b, const std::vector<int>& lab, int i) {
  // amplitude of S_i^+ |lab>; 0 when saturated
  const int n = lab[i];
  if (n >= b.caps[i]) return 0.0;
  return std::sqrt(static_cast<double>(b.caps[i] - n) * (n + 1));
}
inline double sm_amp(const SectorBasis& b, const std::vector<int>& lab, int i) {
  const int n = lab[i];
  if (n <= 0) return 0.0;
  return std::sqrt(static_cast<double>(b.caps[i] - n + 1) * n);
}
inline int boson_of(const SectorBasis& b, const std::vector<int>& lab) {
  if (!b.bosonic()) throw std::logic_error("boson_of: sector has no boson");
  return lab[b.L];
}

}  // namespace detail

// ---- term accumulators (each adds c * operator into H) ----

inline void add_const(MatrixXd& H, double c) {
  H.diagonal().array() += c;
}

inline void add_sz(MatrixXd& H, const SectorBasis& b, int i, double c) {
  for (int r = 0; r < b.dim(); ++r) H(r, r) += c * detail::sz_of(b, b.labels[r], i);
}

inline void add_szsz(MatrixXd& H, const SectorBasis& b, int i, int j, double c) {
  for (int r = 0; r < b.dim(); ++r)
    H(r, r) += c * detail::sz_of(b, b.labels[r], i) * detail::sz_of(b, b.labels[r], j);
}

// c * S_i^+ S_j^-  (i == j allowed: diagonal pair counting)
inline void add_spsm(MatrixXd& H, const SectorBasis& b, int i, int j, double c) {
  for (int r = 0; r < b.dim(); ++r) {
    const auto& lab = b.labels[r];
    if (i == j) {
      const double a = detail::sm_amp(b, lab, j);
      H(r, r) += c * a * a;
      continue;
    }
    const double am = detail::sm_amp(b, lab, j);
    if (am == 0.0) continue;
    std::vector<int> to = lab;
    --to[j];
    const double ap = detail::sp_amp(b, to, i);
    if (ap == 0.0) continue;
    ++to[i];
    const int rr = b.lookup(to);
    if (rr < 0) continue;  // leaves the sector (fixed_N never does)
    H(rr, r) += c * ap * am;
  }
}

// c * (S_i^+ + S_i^-)  (parity-mixing; needs all_N_even_parity)
inline void add_sp_plus_sm(MatrixXd& H, const SectorBasis& b, int i, double c) {
  if (c == 0.0) return;
  for (int r = 0; r < b.dim(); ++r) {
    const auto& lab = b.labels[r];
    const double ap = detail::sp_amp(b, lab, i);
    if (ap != 0.0) {
      std::vector<int> to = lab;
      ++to[i];
      const int rr = b.lookup(to);
      if (rr < 0) throw std::logic_error("add_sp_plus_sm: sector not closed under S^+");
      H(rr, r) += c * ap;
    }
    const double am = detail::sm_amp(b, lab, i);
    if (am != 0.0) {
      std::vector<int> to = lab;
      --to[i];
      const int rr = b.lookup(to);
      if (rr < 0) throw std::logic_error("add_sp_plus_sm: sector not closed under S^-");
      H(rr, r) += c * am;
    }
  }
}

inline void add_boson_number(MatrixXd& H, const SectorBasis& b, double c) {
  for (int r = 0; r < b.dim(); ++r) H(r, r) += c * detail::boson_of(b, b.labels[r]);
}

inline void add_sz_boson_number(MatrixXd& H, const SectorBasis& b, int i, double c) {
  for (int r = 0; r < b.dim(); ++r)
    H(r, r) += c * detail::sz_of(b, b.labels[r], i) * detail::boson_of(b, b.labels[r]);
}

// c * (S_i^+ b + S_i^- b^dagger)
inline void add_spb_plus_smbdag(MatrixXd& H, const SectorBasis& b, int i, double c) {
  if (c == 0.0) return;
  for (int r = 0; r < b.dim(); ++r) {
    const auto& lab = b.labels[r];
    const int nb = detail::boson_of(b, lab);
    if (nb > 0) {
      const double ap = detail::sp_amp(b, lab, i);
      if (ap != 0.0) {
        std::vector<int> to = lab;
        ++to[i];
        --to[b.L];
        const int rr = b.lookup(to);
        if (rr >= 0) H(rr, r) += c * ap * std::sqrt(static_cast<double>(nb));
      }
    }
    const double am = detail::sm_amp(b, lab, i);
    if (am != 0.0) {
      std::vector<int> to = lab;
      --to[i];
      ++to[b.L];
      const int rr = b.lookup(to);
      if (rr >= 0) H(rr, r) += c * am * std::sqrt(static_cast<double>(nb + 1));
    }
  }
}

// ---- conserved charges ----

// general-spin kernel charge (unshifted):
//   Q_i = S_i^z + g sum_{j!=i} [ X_ij/2 (S_i^+ S_j^- + S_i^- S_j^+) + Z_ij S_i^z S_j^z ]
inline MatrixXd build_charge_unshifted(const ModelSpec& m, const SectorBasis& b, int i) {
  MatrixXd Q = MatrixXd::Zero(b.dim(), b.dim());
  add_sz(Q, b, i, 1.0);
  for (int j = 0; j < m.L(); ++j) {
    if (j == i) continue;
    const double X = kernel_X(m.kernel.variant, m.levels[i], m.levels[j]);
    const double Z = kernel_Z(m.kernel.variant, m.levels[i], m.levels[j]);
    add_spsm(Q, b, i, j, 0.5 * m.g * X);
    add_spsm(Q, b, j, i, 0.5 * m.g * X);
    add_szsz(Q, b, i, j, m.g * Z);
  }
  return Q;
}

// shifted spin-1/2 charge with Q_i |0> = 0 and sum_i Q_i = pair number:
//   Q_i = (S_i^z + 1/2) + g sum_{j!=i} [ X_ij/2 (.) + Z_ij (S_i^z S_j^z - 1/4) ]
inline MatrixXd build_charge_shifted(const ModelSpec& m, const SectorBasis& b, int i) {
  if (!m.all_spin_half())
    throw std::invalid_argument("build_charge_shifted: requires all d_i = 1/2");
  MatrixXd Q = build_charge_unshifted(m, b, i);
  double zsum = 0.0;
  for (int j = 0; j < m.L(); ++j)
    if (j != i) zsum += kernel_Z(m.kernel.variant, m.levels[i], m.levels[j]);
  add_const(Q, 0.5 - 0.25 * m.g * zsum);
  return Q;
}

// bath charge (p+ip + pair-breaking field), levels stored as eta_k = eps_k^2:
//   Q_k = (S_k^z + 1/2) + gamma eps_k^-1 (S_k^+ + S_k^-)
//         - G sum_{k'!=k} [ eps_k eps_k' / (eta_k - eta_k') (S^+_k' S^-_k + h.c.)
//                           + 2 eta_k' / (eta_k - eta_k') (S_k^z S_k'^z - 1/4) ]
inline MatrixXd build_charge_bath(const ModelSpec& m, const SectorBasis& b, int k) {
  if (m.extension.kind != ExtensionKind::bath)
    throw std::invalid_argument("build_charge_bath: model lacks bath extension");
  const double G = m.g, gamma = m.extension.gamma;
  const double epsk = std::sqrt(m.levels[k]);
  MatrixXd Q = MatrixXd::Zero(b.dim(), b.dim());
  add_sz(Q, b, k, 1.0);
  add_const(Q, 0.5);
  add_sp_plus_sm(Q, b, k, gamma / epsk);
  double zsum = 0.0;
  for (int j = 0; j < m.L(); ++j) {
    if (j == k) continue;
    const double epsj = std::sqrt(m.levels[j]);
    const double denom = m.levels[k] - m.levels[j];
    add_spsm(Q, b, j, k, -G * epsk * epsj / denom);
    add_spsm(Q, b, k, j, -G * epsk * epsj / denom);
    add_szsz(Q, b, k, j, -2.0 * G * m.levels[j] / denom);
    zsum += m.levels[j] / denom;
  }
  add_const(Q, 0.5 * G * zsum);
  return Q;
}

// Dicke charge, normalized so the eigenvalues match charge_eigenvalues:
//   eps0 Q_i = (eps0 - eps_i) S_i^z - G (S_i^+ b + S_i^- b^dagger)
//              - 2 G^2 sum_{j!=i} (eps_i - eps_j)^-1 [ (S^+S^- + S^-S^+)/2 + S_i^z S_j^z ]
inline MatrixXd build_charge_dicke(const ModelSpec& m, const SectorBasis& b, int i) {
  if (m.extension.kind != ExtensionKind::dicke)
    throw std::invalid_argument("build_charge_dicke: model lacks dicke extension");
  const double G = m.extension.G, eps0 = m.extension.eps0;
  if (eps0 == 0.0) throw std::invalid_argument("build_charge_dicke: eps0 must be nonzero");
  MatrixXd Q = MatrixXd::Zero(b.dim(), b.dim());
  add_sz(Q, b, i, eps0 - m.levels[i]);
  add_spb_plus_smbdag(Q, b, i, -G);
  for (int j = 0; j < m.L(); ++j) {
    if (j == i) continue;
    const double w = -2.0 * G * G / (m.levels[i] - m.levels[j]);
    add_spsm(Q, b, i, j, 0.5 * w);
    add_spsm(Q, b, j, i, 0.5 * w);
    add_szsz(Q, b, i, j, w);
  }
  Q /= eps0;
  return Q;
}

// extended p+ip charge:
//   Q_i = sum_{j!=i} [ sqrt(e_i e_j)/(e_i - e_j) (S^+S^- + S^-S^+)
//                      + (e_i+e_j)/(e_i-e_j) S_i^z S_j^z ]
//         + eta0/sqrt(e_i) (S_i^+ b + S_i^- b^dagger) + S_i^z (kappa + b^dagger b - eta0^2/e_i)
inline MatrixXd build_charge_ext_pip(const ModelSpec& m, const SectorBasis& b, int i) {
  if (m.extension.kind != ExtensionKind::ext_pip)
    throw std::invalid_argument("build_charge_ext_pip: model lacks ext_pip extension");
  const double eta0 = m.extension.eta0, kappa = m.extension.kappa;
  const double ei = m.levels[i];
  MatrixXd Q = MatrixXd::Zero(b.dim(), b.dim());
  for (int j = 0; j < m.L(); ++j) {
    if (j == i) continue;
    const double ej = m.levels[j];
    const double X = std::sqrt(ei * ej) / (ei - ej);
    const double Z = (ei + ej) / (ei - ej);
    add_spsm(Q, b, i, j, X);
    add_spsm(Q, b, j, i, X);
    add_szsz(Q, b, i, j, Z);
  }
  add_spb_plus_smbdag(Q, b, i, eta0 / std::sqrt(ei));
  add_sz(Q, b, i, kappa - eta0 * eta0 / ei);
  add_sz_boson_number(Q, b, i, 1.0);
  return Q;
}

inline MatrixXd build_charge(const ModelSpec& m, const SectorBasis& b, int i) {
  switch (m.extension.kind) {
    case ExtensionKind::bath:    return build_charge_bath(m, b, i);
    case ExtensionKind::dicke:   return build_charge_dicke(m, b, i);
    case ExtensionKind::ext_pip: return build_charge_ext_pip(m, b, i);
    case ExtensionKind::none:
      return m.all_spin_half() ? build_charge_shifted(m, b, i)
                               : build_charge_unshifted(m, b, i);
  }
  throw std::invalid_argument("build_charge: unknown extension");
}

// ---- Hamiltonians ----

// reduced BCS with a general interaction table:
//   H = sum_i 2 eps_i (S_i^z + d_i) + sum_ij G_ij S_i^+ S_j^-
inline MatrixXd build_h_bcs(const ModelSpec& m, const SectorBasis& b, const MatrixXd& Gij) {
  if (Gij.rows() != m.L() || Gij.cols() != m.L())
    throw std::invalid_argument("build_h_bcs: interaction table size mismatch");
  MatrixXd H = MatrixXd::Zero(b.dim(), b.dim());
  for (int i = 0; i < m.L(); ++i) {
    add_sz(H, b, i, 2.0 * m.levels[i]);
    add_const(H, 2.0 * m.levels[i] * m.degeneracies[i]);
    for (int j = 0; j < m.L(); ++j) add_spsm(H, b, i, j, Gij(i, j));
  }
  return H;
}

inline MatrixXd build_h_bcs_uniform(const ModelSpec& m, const SectorBasis& b) {
  return build_h_bcs(m, b, MatrixXd::Constant(m.L(), m.L(), m.g));
}

// p+ip pairing in eta = eps^2 levels:  H = sum_i eta_i (S_i^z + 1/2) + G sum_ij sqrt(eta_i eta_j) S_i^+ S_j^-
inline MatrixXd build_h_pip(const ModelSpec& m, const SectorBasis& b, double G) {
  MatrixXd H = MatrixXd::Zero(b.dim(), b.dim());
  for (int i = 0; i < m.L(); ++i) {
    add_sz(H, b, i, m.levels[i]);
    add_const(H, m.levels[i] * m.degeneracies[i]);
    for (int j = 0; j < m.L(); ++j)
      add_spsm(H, b, i, j, G * std::sqrt(m.levels[i] * m.levels[j]));
  }
  return H;
}

// central spin: H = B_z S_1^z + sum_{i>1} A_i (S_1 . S_i), level 1 = index 0
inline MatrixXd build_h_central_spin(const ModelSpec& m, const SectorBasis& b,
                                     double Bz, const std::vector<double>& A) {
  if (static_cast<int>(A.size()) != m.L())
    throw std::invalid_argument("build_h_central_spin: coupling vector size mismatch");
  MatrixXd H = MatrixXd::Zero(b.dim(), b.dim());
  add_sz(H, b, 0, Bz);
  for (int i = 1; i < m.L(); ++i) {
    add_spsm(H, b, 0, i, 0.5 * A[i]);
    add_spsm(H, b, i, 0, 0.5 * A[i]);
    add_szsz(H, b, 0, i, A[i]);
  }
  return H;
}

// integrable central-spin couplings A_i = g / (eps_1 - eps_i)
inline std::vector<double> central_spin_couplings(const ModelSpec& m) {
  std::vector<double> A(m.L(), 0.0);
  for (int i = 1; i < m.L(); ++i) A[i] = m.g / (m.levels[0] - m.levels[i]);
  return A;
}

// p+ip plus pair-breaking bath field:  H = sum_k eta_k Q_k (bath charges)
inline MatrixXd build_h_pip_bath(const ModelSpec& m, const SectorBasis& b) {
  MatrixXd H = MatrixXd::Zero(b.dim(), b.dim());
  for (int k = 0; k < m.L(); ++k) H += m.levels[k] * build_charge_bath(m, b, k);
  return H;
}

// Dicke:  H = eps0 b^dagger b + sum_i eps_i S_i^z + G sum_i (S_i^+ b + S_i^- b^dagger)
inline MatrixXd build_h_dicke(const ModelSpec& m, const SectorBasis& b) {
  if (m.extension.kind != ExtensionKind::dicke)
    throw std::invalid_argument("build_h_dicke: model lacks dicke extension");
  MatrixXd H = MatrixXd::Zero(b.dim(), b.dim());
  add_boson_number(H, b, m.extension.eps0);
  for (int i = 0; i < m.L(); ++i) {
    add_sz(H, b, i, m.levels[i]);
    add_spb_plus_smbdag(H, b, i, m.extension.G);
  }
  return H;
}

// extended p+ip:  H = sum_i Q_i
inline MatrixXd build_h_ext_pip(const ModelSpec& m, const SectorBasis& b) {
  MatrixXd H = MatrixXd::Zero(b.dim(), b.dim());
  for (int i = 0; i < m.L(); ++i) H += build_charge_ext_pip(m, b, i);
  return H;
}

// default Hamiltonian for a ModelSpec: BCS (rational), p+ip (hyperbolic, mapped
// G), or the extension's Hamiltonian
inline MatrixXd build_hamiltonian(const ModelSpec& m, const SectorBasis& b) {
  switch (m.extension.kind) {
    case ExtensionKind::bath:    return build_h_pip_bath(m, b);
    case ExtensionKind::dicke:   return build_h_dicke(m, b);
    case ExtensionKind::ext_pip: return build_h_ext_pip(m, b);
    case ExtensionKind::none:
      switch (m.kernel.variant) {
        case KernelKind::rational:   return build_h_bcs_uniform(m, b);
        case KernelKind::hyperbolic: return build_h_pip(m, b, pip_G_from_g(m));
        case KernelKind::trigonometric:
          throw std::invalid_argument("build_hamiltonian: no trigonometric Hamiltonian");
      }
  }
  throw std::invalid_argument("build_hamiltonian: unknown model");
}

// ---- diagonalization ----

struct EigenSystem {
  VectorXd eigenvalues;  // ascending
  MatrixXd eigenvectors; // columns
};

inline void require_symmetric(const MatrixXd& A, double tol = 1e-12) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > tol * scale)
    throw std::invalid_argument("diagonalize: matrix is not symmetric");
}

inline EigenSystem diagonalize(const MatrixXd& A) {
  require_symmetric(A);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("diagonalize: eigensolver failed");
  return EigenSystem{es.eigenvalues(), es.eigenvectors()};
}

inline double expectation(const MatrixXd& op, const VectorXd& vec) {
  if (op.rows() != vec.size())
    throw std::invalid_argument("expectation: dimension mismatch");
  const double nrm2 = vec.squaredNorm();
  if (nrm2 == 0.0) throw std::invalid_argument("expectation: zero vector");
  return vec.dot(op * vec) / nrm2;
}

inline double commutator_norm(const MatrixXd& A, const MatrixXd& B) {
  return (A * B - B * A).cwiseAbs().maxCoeff();
}

// Lowest k eigenpairs by Lanczos with full reorthogonalization and a fixed
// deterministic start vector; used only where the dense solve is too slow
// (bath scans at dimension 4096), and cross-validated against dense results
// in the tests.
inline EigenSystem lowest_eigenpairs(const MatrixXd& A, int k, int max_iter = 300,
                                     double tol = 1e-12) {
  require_symmetric(A);
  const int n = static_cast<int>(A.rows());
  if (k >= n / 2 || n < 200) {
    EigenSystem full = diagonalize(A);
    EigenSystem out;
    out.eigenvalues = full.eigenvalues.head(k);
    out.eigenvectors = full.eigenvectors.leftCols(k);
    return out;
  }
  max_iter = std::min(max_iter, n);
  MatrixXd V(n, max_iter + 1);
  std::vector<double> alpha, beta;
  VectorXd v = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) v(i) = std::sin(0.7 * (i + 1)) + 0.3;  // fixed start
  v.normalize();
  V.col(0) = v;
  VectorXd w;
  double last_sum = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    w = A * V.col(it);
    const double a = V.col(it).dot(w);
    alpha.push_back(a);
    w -= a * V.col(it);
    if (it > 0) w -= beta.back() * V.col(it - 1);
    // full reorthogonalization (twice) keeps the basis numerically orthogonal
    for (int pass = 0; pass < 2; ++pass)
      w -= V.leftCols(it + 1) * (V.leftCols(it + 1).transpose() * w);
    const double bnorm = w.norm();
    if (bnorm < 1e-14) { ++it; break; }
    beta.push_back(bnorm);
    V.col(it + 1) = w / bnorm;
    if (it >= k + 2 && it % 5 == 0) {
      const int mdim = it + 1;
      MatrixXd T = MatrixXd::Zero(mdim, mdim);
      for (int i = 0; i < mdim; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < mdim) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
      const double s = es.eigenvalues().head(k).sum();
      if (std::abs(s - last_sum) < tol * (1.0 + std::abs(s))) { ++it; break; }
      last_sum = s;
    }
  }
  const int mdim = std::min<int>(it, static_cast<int>(alpha.size()));
  MatrixXd T = MatrixXd::Zero(mdim, mdim);
  for (int i = 0; i < mdim; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < mdim) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
  EigenSystem out;
  out.eigenvalues = es.eigenvalues().head(k);
  out.eigenvectors = V.leftCols(mdim) * es.eigenvectors().leftCols(k);
  for (int c = 0; c < k; ++c) out.eigenvectors.col(c).normalize();
  return out;
}

}  // namespace rg
