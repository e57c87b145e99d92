#pragma once

// Model specification and state parametrizations shared by all modules.
//
// A ModelSpec holds the kernel, the L single-particle levels eps_i, the
// pair quasispins d_i (degeneracies), the coupling g, the number of pairs N
// and an optional extension (bath / Dicke / extended p+ip).  For hyperbolic
// (p+ip) models the levels are stored as eta_i = eps_i^2, the quantity that
// appears in all denominators.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgbethe/kernel.hpp"

namespace rg {

using json = nlohmann::json;

// ---- tolerances (doubles, L <= 200) ----
constexpr double tau_residual = 1e-10;  // absolute, on scaled residuals
constexpr double tau_conj = 1e-8;       // conjugation closure / imaginary leakage
constexpr double tau_coincide_rel = 1e-12;  // times the level spread

// ---- extensions ----

enum class ExtensionKind { none, bath, dicke, ext_pip };

struct Extension {
  ExtensionKind kind = ExtensionKind::none;
  // bath: pair-breaking strength gamma
  double gamma = 0.0;
  // dicke: boson level eps0 and coupling G (the model replaces g entirely)
  double eps0 = 0.0;
  double G = 0.0;
  // ext_pip: boson coupling eta0 and charge offset kappa
  double eta0 = 0.0;
  double kappa = 0.0;
};

// ---- model specification ----

struct ModelSpec {
  GaudinKernel kernel;
  std::vector<double> levels;         // eps_i (eta_i = eps_i^2 for hyperbolic)
  std::vector<double> degeneracies;   // pair quasispins d_i (1/2 for a doubly degenerate level)
  double g = 0.0;                     // coupling constant
  int pairs = 0;                      // N
  Extension extension;

  int L() const { return static_cast<int>(levels.size()); }
  bool all_spin_half() const {
    return std::all_of(degeneracies.begin(), degeneracies.end(),
                       [](double d) { return std::abs(d - 0.5) < 1e-14; });
  }
  double level_spread() const {
    if (levels.empty()) return 1.0;
    auto [mn, mx] = std::minmax_element(levels.begin(), levels.end());
    return std::max(*mx - *mn, 1e-300);
  }
  double tau_coincide() const { return tau_coincide_rel * level_spread(); }
};

inline void validate(const ModelSpec& m) {
  const int L = m.L();
  if (L == 0) throw std::invalid_argument("ModelSpec: empty level set");
  if (static_cast<int>(m.degeneracies.size()) != L)
    throw std::invalid_argument("ModelSpec: degeneracies size mismatch");
  for (int i = 0; i < L; ++i) {
    const double d = m.degeneracies[i];
    if (d <= 0.0 || std::abs(2.0 * d - std::round(2.0 * d)) > 1e-12)
      throw std::invalid_argument("ModelSpec: degeneracies must be positive half-integers");
    for (int j = i + 1; j < L; ++j)
      if (m.levels[i] == m.levels[j])
        throw std::invalid_argument("ModelSpec: levels must be pairwise distinct");
  }
  double cap = 0.0;
  for (double d : m.degeneracies) cap += 2.0 * d;
  if (m.pairs < 0 || m.pairs > cap + 1e-12)
    throw std::invalid_argument("ModelSpec: pair number exceeds capacity");
  if (m.extension.kind == ExtensionKind::bath && !m.all_spin_half())
    throw std::invalid_argument("ModelSpec: bath extension requires all d_i = 1/2");
  const double want = kernel_gamma(m.kernel.variant);
  if (std::abs(m.kernel.gamma - want) > 1e-12)
    throw std::invalid_argument("ModelSpec: kernel gamma inconsistent with variant");
}

// sum of pair quasispins
inline double total_quasispin(const ModelSpec& m) {
  double s = 0.0;
  for (double d : m.degeneracies) s += d;
  return s;
}

// p+ip density-dependent coupling map: G^-1 = g^-1 - 1 + N - sum_j d_j
inline double pip_G_from_g(const ModelSpec& m) {
  const double inv = 1.0 / m.g - 1.0 + m.pairs - total_quasispin(m);
  return 1.0 / inv;
}

inline double pip_g_from_G(double G, int N, double sum_d) {
  const double inv = 1.0 / G + 1.0 - N + sum_d;
  return 1.0 / inv;
}

// ---- state parametrizations ----

struct BetheRoots {
  std::vector<std::complex<double>> roots;  // N rapidities
  int N() const { return static_cast<int>(roots.size()); }
};

struct EvbVariables {
  std::vector<double> lambdas;  // Lambda_i
  std::vector<double> scaled;   // g * Lambda_i (the numerical unknowns)
  double lambda0 = 0.0;         // boson variable (Dicke / ext-p+ip)
  bool has_lambda0 = false;
  std::vector<double> lambda2;  // Lambda_i^(2) (spin-1 second set)
  int L() const { return static_cast<int>(lambdas.size()); }
};

inline EvbVariables make_evb(const std::vector<double>& lambdas, double g) {
  EvbVariables evb;
  evb.lambdas = lambdas;
  evb.scaled.resize(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) evb.scaled[i] = g * lambdas[i];
  return evb;
}

inline EvbVariables evb_from_scaled(const std::vector<double>& scaled, double g) {
  if (g == 0.0) throw std::invalid_argument("evb_from_scaled: g must be nonzero");
  EvbVariables evb;
  evb.scaled = scaled;
  evb.lambdas.resize(scaled.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) evb.lambdas[i] = scaled[i] / g;
  return evb;
}

struct OccupationPattern {
  std::vector<int> counts;  // per-level pair count n_i in the g->0 limit
  int total() const {
    int n = 0;
    for (int c : counts) n += c;
    return n;
  }
};

inline void validate(const ModelSpec& m, const OccupationPattern& p) {
  if (static_cast<int>(p.counts.size()) != m.L())
    throw std::invalid_argument("OccupationPattern: size mismatch");
  for (int i = 0; i < m.L(); ++i)
    if (p.counts[i] < 0 || p.counts[i] > 2.0 * m.degeneracies[i] + 1e-12)
      throw std::invalid_argument("OccupationPattern: count exceeds 2 d_i");
  if (p.total() != m.pairs)
    throw std::invalid_argument("OccupationPattern: counts do not sum to N");
}

// conjugation-closure check for root multisets of real-symmetric eigenstates
inline bool conjugation_closed(const BetheRoots& r, double tol = tau_conj) {
  const int N = r.N();
  std::vector<bool> used(N, false);
  for (int a = 0; a < N; ++a) {
    if (used[a]) continue;
    const auto v = r.roots[a];
    const double scale = 1.0 + std::abs(v);
    if (std::abs(v.imag()) < tol * scale) { used[a] = true; continue; }
    int match = -1;
    for (int b = 0; b < N; ++b)
      if (b != a && !used[b] && std::abs(r.roots[b] - std::conj(v)) < tol * scale)
        { match = b; break; }
    if (match < 0) return false;
    used[a] = used[match] = true;
  }
  return true;
}

// ---- JSON serialization (schema: schemas/model.schema.json) ----

inline std::string extension_name(ExtensionKind k) {
  switch (k) {
    case ExtensionKind::none:    return "none";
    case ExtensionKind::bath:    return "bath";
    case ExtensionKind::dicke:   return "dicke";
    case ExtensionKind::ext_pip: return "ext_pip";
  }
  throw std::invalid_argument("extension_name: unknown extension kind");
}

inline ExtensionKind extension_from_name(const std::string& name) {
  if (name == "none") return ExtensionKind::none;
  if (name == "bath") return ExtensionKind::bath;
  if (name == "dicke") return ExtensionKind::dicke;
  if (name == "ext_pip") return ExtensionKind::ext_pip;
  throw std::invalid_argument("extension_from_name: unknown extension '" + name + "'");
}

inline json to_json(const ModelSpec& m) {
  json j;
  j["kernel"] = kernel_name(m.kernel.variant);
  j["gamma"] = m.kernel.gamma;
  j["levels"] = m.levels;
  j["degeneracies"] = m.degeneracies;
  j["g"] = m.g;
  j["N"] = m.pairs;
  json ext;
  ext["kind"] = extension_name(m.extension.kind);
  switch (m.extension.kind) {
    case ExtensionKind::none: break;
    case ExtensionKind::bath: ext["gamma"] = m.extension.gamma; break;
    case ExtensionKind::dicke:
      ext["eps0"] = m.extension.eps0;
      ext["G"] = m.extension.G;
      break;
    case ExtensionKind::ext_pip:
      ext["eta0"] = m.extension.eta0;
      ext["kappa"] = m.extension.kappa;
      break;
  }
  j["extension"] = ext;
  return j;
}

inline ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  m.kernel = make_kernel(kernel_from_name(j.at("kernel").get<std::string>()));
  if (j.contains("gamma")) {
    const double gm = j.at("gamma").get<double>();
    if (std::abs(gm - m.kernel.gamma) > 1e-12)
      throw std::invalid_argument("model_from_json: gamma inconsistent with kernel");
  }
  m.levels = j.at("levels").get<std::vector<double>>();
  m.degeneracies = j.at("degeneracies").get<std::vector<double>>();
  m.g = j.at("g").get<double>();
  m.pairs = j.at("N").get<int>();
  if (j.contains("extension")) {
    const json& ext = j.at("extension");
    m.extension.kind = extension_from_name(ext.at("kind").get<std::string>());
    switch (m.extension.kind) {
      case ExtensionKind::none: break;
      case ExtensionKind::bath: m.extension.gamma = ext.at("gamma").get<double>(); break;
      case ExtensionKind::dicke:
        m.extension.eps0 = ext.at("eps0").get<double>();
        m.extension.G = ext.at("G").get<double>();
        break;
      case ExtensionKind::ext_pip:
        m.extension.eta0 = ext.at("eta0").get<double>();
        m.extension.kappa = ext.at("kappa").get<double>();
        break;
    }
  }
  validate(m);
  return m;
}

// ---- common model factories ----

// picket fence: eps_i = i (i = 1..L), spin-1/2 levels
inline ModelSpec picket_fence(int L, int N, double g,
                              KernelKind kind = KernelKind::rational) {
  ModelSpec m;
  m.kernel = make_kernel(kind);
  m.levels.resize(L);
  for (int i = 0; i < L; ++i) m.levels[i] = static_cast<double>(i + 1);
  m.degeneracies.assign(L, 0.5);
  m.g = g;
  m.pairs = N;
  validate(m);
  return m;
}

}  // namespace rg
