#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rgbethe/ed.hpp"
#include "test_util.hpp"

using rg::MatrixXd;
using rg::SectorKind;

namespace {

double max_abs(const MatrixXd& A) { return A.cwiseAbs().maxCoeff(); }

// largest deviation of A from a multiple of the identity; on return c is that multiple
double identity_defect(const MatrixXd& A, double& c) {
  c = A.trace() / A.rows();
  MatrixXd R = A;
  R.diagonal().array() -= c;
  return max_abs(R);
}

}  // namespace

TEST_CASE("sector dimensions", "[ed]") {
  auto m = tu::spin_half_model(rg::KernelKind::rational, {0.5, 1.0, 1.5, 2.0}, -0.5, 2);
  CHECK(rg::make_sector(m, SectorKind::fixed_N).dim() == 6);  // C(4,2)

  auto mb = tu::bath_model({0.5, 1.2, 2.0}, 0.4, 0.3, 1);
  CHECK(rg::make_sector(mb, SectorKind::all_N_even_parity).dim() == 8);  // 2^3

  // five-level set with pair quasispins (2, 3/2, 1/2, 3, 1) holds 110 eight-pair states
  auto ms = tu::kernel_model(rg::KernelKind::rational, {-6.121, -5.508, -3.891, -3.778, -3.749},
                             {2.0, 1.5, 0.5, 3.0, 1.0}, -0.1, 8);
  CHECK(rg::make_sector(ms, SectorKind::fixed_N).dim() == 110);

  auto md = tu::dicke_model({1.0, 1.7, 2.6}, {0.5, 0.5, 0.5}, 1.9, 0.45, 2);
  CHECK(rg::make_sector(md, SectorKind::bosonic_fixed_total).dim() == 7);
}

TEST_CASE("sector labels are unique, lexicographic, boson count last", "[ed]") {
  auto md = tu::dicke_model({1.0, 1.7}, {0.5, 0.5}, 1.9, 0.45, 2);
  auto b = rg::make_sector(md, SectorKind::bosonic_fixed_total);
  REQUIRE(b.dim() == 4);
  // (n_1, n_2, boson): lexicographic in the spin counts
  CHECK(b.labels[0] == std::vector<int>{0, 0, 2});
  CHECK(b.labels[1] == std::vector<int>{0, 1, 1});
  CHECK(b.labels[2] == std::vector<int>{1, 0, 1});
  CHECK(b.labels[3] == std::vector<int>{1, 1, 0});
  for (int r = 0; r < b.dim(); ++r) CHECK(b.index.at(b.labels[r]) == r);
}

TEST_CASE("charges commute with each other and with H", "[ed]") {
  struct Case {
    rg::ModelSpec m;
    SectorKind sector;
  };
  std::vector<Case> cases;
  cases.push_back({tu::spin_half_model(rg::KernelKind::rational,
                                       {0.35, 1.1, 1.7, 2.3, 3.05, 3.6}, -0.7, 3),
                   SectorKind::fixed_N});
  cases.push_back({tu::spin_half_model(rg::KernelKind::hyperbolic,
                                       {0.7, 1.3, 2.1, 3.4, 4.2}, -0.3, 2),
                   SectorKind::fixed_N});
  cases.push_back({tu::kernel_model(rg::KernelKind::rational, {0.4, 1.2, 2.1, 2.9},
                                    {0.5, 1.0, 0.5, 1.5}, -0.4, 3),
                   SectorKind::fixed_N});
  cases.push_back({tu::bath_model({0.5, 1.2, 2.0, 3.1}, 0.37, 0.3, 2),
                   SectorKind::all_N_even_parity});
  cases.push_back({tu::dicke_model({1.0, 1.7, 2.6}, {0.5, 0.5, 0.5}, 1.9, 0.45, 2),
                   SectorKind::bosonic_fixed_total});
  cases.push_back({tu::ext_pip_model({0.8, 1.5, 2.4}, 0.6, 0.9, 2),
                   SectorKind::bosonic_fixed_total});

  for (const auto& c : cases) {
    auto b = rg::make_sector(c.m, c.sector);
    const int L = c.m.L();
    std::vector<MatrixXd> Q(L);
    for (int i = 0; i < L; ++i) {
      Q[i] = rg::build_charge(c.m, b, i);
      rg::require_symmetric(Q[i]);
    }
    const MatrixXd H = rg::build_hamiltonian(c.m, b);
    rg::require_symmetric(H);
    const double scale = std::max(1.0, max_abs(H));
    for (int i = 0; i < L; ++i) {
      CHECK(rg::commutator_norm(H, Q[i]) < 1e-12 * scale * b.dim());
      for (int j = i + 1; j < L; ++j)
        CHECK(rg::commutator_norm(Q[i], Q[j]) < 1e-12 * scale * b.dim());
    }
  }
}

TEST_CASE("BCS Hamiltonian is a linear combination of shifted charges", "[ed]") {
  const int L = 5, N = 2;
  const double g = -0.6;
  auto m = tu::spin_half_model(rg::KernelKind::rational, {0.3, 0.9, 1.6, 2.4, 3.3}, g, N);
  auto b = rg::make_sector(m, SectorKind::fixed_N);
  MatrixXd R = rg::build_h_bcs_uniform(m, b);
  for (int i = 0; i < L; ++i) R -= 2.0 * m.levels[i] * rg::build_charge_shifted(m, b, i);
  double c = 0.0;
  CHECK(identity_defect(R, c) < 1e-12);
  const double half = 0.5 * L;
  const double expected = g * (N - (N - half) * (N - half) + 0.25 * L + 0.25 * L * (L - 1));
  CHECK(std::abs(c - expected) < 1e-12);
}

TEST_CASE("p+ip Hamiltonian matches the charge combination under the coupling map", "[ed]") {
  const int L = 4, N = 2;
  const double g = -0.35;
  auto m = tu::spin_half_model(rg::KernelKind::hyperbolic, {0.7, 1.3, 2.1, 3.4}, g, N);
  auto b = rg::make_sector(m, SectorKind::fixed_N);
  const double G = rg::pip_G_from_g(m);  // G^-1 = g^-1 - 1 + N - L/2
  MatrixXd R = rg::build_h_pip(m, b, G);
  for (int i = 0; i < L; ++i)
    R -= (G / g) * m.levels[i] * rg::build_charge_shifted(m, b, i);
  double c = 0.0;
  double eta_sum = 0.0;
  for (double e : m.levels) eta_sum += e;
  CHECK(identity_defect(R, c) < 1e-12);
  const double expected = eta_sum * (0.5 * (1.0 + G) - 0.5 * G / g + 0.25 * G * L);
  CHECK(std::abs(c - expected) < 1e-12);
}

TEST_CASE("central-spin Hamiltonian equals the first unshifted charge", "[ed]") {
  auto m = tu::spin_half_model(rg::KernelKind::rational, {5.0, 4.0, 3.0, 2.0, 1.0, 0.0},
                               -2.0, 3);
  auto b = rg::make_sector(m, SectorKind::fixed_N);
  const auto A = rg::central_spin_couplings(m);
  const MatrixXd H = rg::build_h_central_spin(m, b, 1.0, A);
  const MatrixXd Q1 = rg::build_charge_unshifted(m, b, 0);
  CHECK(max_abs(H - Q1) < 1e-13);

  // independent accumulation of B_z S_1^z + sum_i A_i vec S_1 . vec S_i
  MatrixXd Href = MatrixXd::Zero(b.dim(), b.dim());
  rg::add_sz(Href, b, 0, 1.0);
  for (int i = 1; i < m.L(); ++i) {
    rg::add_spsm(Href, b, 0, i, 0.5 * A[i]);
    rg::add_spsm(Href, b, i, 0, 0.5 * A[i]);
    rg::add_szsz(Href, b, 0, i, A[i]);
  }
  CHECK(max_abs(H - Href) < 1e-13);
}

TEST_CASE("bath charges satisfy the quadratic operator identity", "[ed]") {
  auto m = tu::bath_model({0.5, 1.2, 2.0, 3.1}, 0.37, 0.3, 2);
  auto b = rg::make_sector(m, SectorKind::all_N_even_parity);
  const int L = m.L();
  std::vector<MatrixXd> Q(L);
  for (int k = 0; k < L; ++k) Q[k] = rg::build_charge_bath(m, b, k);
  const MatrixXd I = MatrixXd::Identity(b.dim(), b.dim());
  for (int k = 0; k < L; ++k) {
    MatrixXd R = Q[k] * Q[k] - Q[k] -
                 (m.extension.gamma * m.extension.gamma / m.levels[k]) * I;
    for (int j = 0; j < L; ++j) {
      if (j == k) continue;
      R -= m.g * m.levels[j] / (m.levels[k] - m.levels[j]) * (Q[k] - Q[j]);
    }
    CHECK(max_abs(R) < 1e-11);
  }
}

TEST_CASE("bath Hamiltonian at gamma = 0 rescales to a p+ip model", "[ed]") {
  const double G = 0.37;
  auto mb = tu::bath_model({0.5, 1.2, 2.0, 3.1}, G, 0.0, 2);
  auto b = rg::make_sector(mb, SectorKind::all_N_even_parity);
  const MatrixXd Hb = rg::build_h_pip_bath(mb, b);
  auto mp = tu::spin_half_model(rg::KernelKind::hyperbolic, mb.levels, -0.1, 2);
  const double G2 = -G / (1.0 + G);
  const MatrixXd Hp = rg::build_h_pip(mp, b, G2);
  CHECK(max_abs(Hb - (1.0 + G) * Hp) < 1e-12);
}

TEST_CASE("extended p+ip Hamiltonian equals its explicit operator form", "[ed]") {
  auto m = tu::ext_pip_model({0.8, 1.5, 2.4}, 0.6, 0.9, 2);
  auto b = rg::make_sector(m, SectorKind::bosonic_fixed_total);
  const MatrixXd H = rg::build_h_ext_pip(m, b);
  MatrixXd Href = MatrixXd::Zero(b.dim(), b.dim());
  for (int i = 0; i < m.L(); ++i) {
    const double ei = m.levels[i];
    rg::add_spb_plus_smbdag(Href, b, i, m.extension.eta0 / std::sqrt(ei));
    rg::add_sz(Href, b, i, m.extension.kappa - m.extension.eta0 * m.extension.eta0 / ei);
    rg::add_sz_boson_number(Href, b, i, 1.0);
  }
  CHECK(max_abs(H - Href) < 1e-12);

  // Q_0 = b^dagger b + sum_i S_i^z commutes with H and has eigenvalue N - L/2
  MatrixXd Q0 = MatrixXd::Zero(b.dim(), b.dim());
  rg::add_boson_number(Q0, b, 1.0);
  for (int i = 0; i < m.L(); ++i) rg::add_sz(Q0, b, i, 1.0);
  CHECK(rg::commutator_norm(H, Q0) < 1e-12);
  double c = 0.0;
  CHECK(identity_defect(Q0, c) < 1e-13);
  CHECK(std::abs(c - (m.pairs - 0.5 * m.L())) < 1e-13);
}

TEST_CASE("dense diagonalization residuals and sharp charges", "[ed]") {
  auto m = tu::spin_half_model(rg::KernelKind::rational, {0.35, 1.1, 1.7, 2.3, 3.05}, -0.7, 2);
  auto b = rg::make_sector(m, SectorKind::fixed_N);
  const MatrixXd H = rg::build_hamiltonian(m, b);
  const auto es = rg::diagonalize(H);
  const double hnorm = max_abs(H);
  for (int n = 0; n < b.dim(); ++n) {
    const rg::VectorXd r = H * es.eigenvectors.col(n) - es.eigenvalues(n) * es.eigenvectors.col(n);
    CHECK(r.cwiseAbs().maxCoeff() < 1e-10 * hnorm);
  }
  // every eigenvector is sharp on every charge: variance below 1e-9
  for (int i = 0; i < m.L(); ++i) {
    const MatrixXd Q = rg::build_charge(m, b, i);
    for (int n = 0; n < b.dim(); ++n) {
      const rg::VectorXd v = es.eigenvectors.col(n);
      const double mean = rg::expectation(Q, v);
      const double mean2 = rg::expectation(MatrixXd(Q * Q), v);
      CHECK(std::abs(mean2 - mean * mean) < 1e-9);
    }
  }
}

TEST_CASE("iterative lowest eigenpairs agree with dense", "[ed]") {
  std::vector<double> levels(12);
  for (int i = 0; i < 12; ++i) levels[i] = i + 1.0;
  auto m = tu::spin_half_model(rg::KernelKind::rational, levels, -0.9, 3);
  auto b = rg::make_sector(m, SectorKind::fixed_N);
  REQUIRE(b.dim() == 220);  // exercises the iterative branch
  const MatrixXd H = rg::build_hamiltonian(m, b);
  const auto dense = rg::diagonalize(H);
  const auto iter = rg::lowest_eigenpairs(H, 3);
  for (int n = 0; n < 3; ++n)
    CHECK(std::abs(iter.eigenvalues(n) - dense.eigenvalues(n)) < 1e-9);
}

TEST_CASE("expectation handles unnormalized vectors", "[ed]") {
  MatrixXd A(2, 2);
  A << 2.0, 0.0, 0.0, -1.0;
  rg::VectorXd v(2);
  v << 3.0, 0.0;
  CHECK(std::abs(rg::expectation(A, v) - 2.0) < 1e-15);
}

TEST_CASE("dimension cap is enforced", "[ed]") {
  std::vector<double> levels(18);
  for (int i = 0; i < 18; ++i) levels[i] = i + 1.0;
  auto m = tu::spin_half_model(rg::KernelKind::rational, levels, -0.5, 9);
  // C(18,9) = 48620 exceeds the dense-oracle cap
  CHECK_THROWS_AS(rg::make_sector(m, SectorKind::fixed_N), std::runtime_error);
}
