#pragma once

// Gaudin kernel functions X(u,v), Z(u,v) for the three parametrizations used
// throughout the library.  All variants satisfy
//
//   X(u,v)^2 - Z(u,v)^2 = Gamma,   X(u,v) = -X(v,u),   Z(u,v) = -Z(v,u),
//   X(u,v) X(v,w) = X(u,w) [Z(u,v) + Z(v,w)],
//
// with Gamma = 0 (rational), +1 (trigonometric, sin/cot form) and -1
// (hyperbolic in the algebraic p+ip form X = 2 sqrt(uv)/(u-v),
// Z = (u+v)/(u-v)).

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <string>

namespace rg {

using cplx = std::complex<double>;

enum class KernelKind { rational, trigonometric, hyperbolic };

inline double kernel_gamma(KernelKind kind) {
  switch (kind) {
    case KernelKind::rational:      return 0.0;
    case KernelKind::trigonometric: return 1.0;
    case KernelKind::hyperbolic:    return -1.0;
  }
  throw std::invalid_argument("kernel_gamma: unknown kernel kind");
}

inline std::string kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::rational:      return "rational";
    case KernelKind::trigonometric: return "trigonometric";
    case KernelKind::hyperbolic:    return "hyperbolic";
  }
  throw std::invalid_argument("kernel_name: unknown kernel kind");
}

inline KernelKind kernel_from_name(const std::string& name) {
  if (name == "rational") return KernelKind::rational;
  if (name == "trigonometric") return KernelKind::trigonometric;
  if (name == "hyperbolic") return KernelKind::hyperbolic;
  throw std::invalid_argument("kernel_from_name: unknown kernel '" + name + "'");
}

// kernel descriptor carried by ModelSpec
struct GaudinKernel {
  KernelKind variant = KernelKind::rational;
  double gamma = 0.0;
};

inline GaudinKernel make_kernel(KernelKind kind) {
  return GaudinKernel{kind, kernel_gamma(kind)};
}

// ---- pointwise kernel functions ----

template <class T>
T kernel_X(KernelKind kind, const T& u, const T& v) {
  using std::sin;
  using std::sqrt;
  switch (kind) {
    case KernelKind::rational:
      return T(1) / (u - v);
    case KernelKind::trigonometric:
      return T(1) / sin(u - v);
    case KernelKind::hyperbolic:
      return T(2) * sqrt(u) * sqrt(v) / (u - v);
  }
  throw std::invalid_argument("kernel_X: unknown kernel kind");
}

template <class T>
T kernel_Z(KernelKind kind, const T& u, const T& v) {
  using std::cos;
  using std::sin;
  switch (kind) {
    case KernelKind::rational:
      return T(1) / (u - v);
    case KernelKind::trigonometric:
      return cos(u - v) / sin(u - v);
    case KernelKind::hyperbolic:
      return (u + v) / (u - v);
  }
  throw std::invalid_argument("kernel_Z: unknown kernel kind");
}

struct KernelValue {
  cplx X;
  cplx Z;
};

// Guarded evaluation of (X, Z); throws when the arguments coincide within
// tau_coincide (callers that know the level spread pass a scaled tolerance).
inline KernelValue kernel_eval(const GaudinKernel& kernel, cplx u, cplx v,
                               double tau_coincide = 1e-12) {
  const double scale = 1.0 + std::max(std::abs(u), std::abs(v));
  if (std::abs(u - v) < tau_coincide * scale)
    throw std::invalid_argument("kernel_eval: coincident arguments");
  return KernelValue{kernel_X(kernel.variant, u, v),
                     kernel_Z(kernel.variant, u, v)};
}

// ---- identity self-check ----

struct GaudinIdentityReport {
  int samples = 0;
  double max_antisymmetry = 0.0;  // |X(u,v)+X(v,u)|, |Z(u,v)+Z(v,u)|
  double max_triple = 0.0;        // |X(u,v)X(v,w) - X(u,w)(Z(u,v)+Z(v,w))| (relative)
  double max_gamma = 0.0;         // |X^2 - Z^2 - Gamma|
  double max_z_form = 0.0;        // |Z12 Z23 + Z31 Z12 + Z23 Z31 - Gamma| (relative)
};

// Samples pseudo-random triples (deterministic in `seed`) and reports the
// worst violation of the defining kernel identities.  `z_perturbation` skews
// Z by (1 + z_perturbation) and serves as a negative-control hook for tests.
inline GaudinIdentityReport check_gaudin_identities(const GaudinKernel& kernel,
                                                    int samples, unsigned seed,
                                                    double z_perturbation = 0.0) {
  if (samples < 1)
    throw std::invalid_argument("check_gaudin_identities: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> re(0.3, 3.0), im(-1.0, 1.0);
  GaudinIdentityReport rep;
  rep.samples = samples;
  const KernelKind kind = kernel.variant;
  const cplx gamma(kernel.gamma, 0.0);
  for (int s = 0; s < samples; ++s) {
    // positive real parts keep the hyperbolic sqrt away from its branch cut
    cplx u(re(rng), im(rng)), v(re(rng), im(rng)), w(re(rng), im(rng));
    if (std::abs(u - v) < 1e-3 || std::abs(v - w) < 1e-3 || std::abs(u - w) < 1e-3)
      continue;
    const double pz = 1.0 + z_perturbation;
    const cplx Xuv = kernel_X(kind, u, v), Xvu = kernel_X(kind, v, u);
    const cplx Xvw = kernel_X(kind, v, w), Xuw = kernel_X(kind, u, w);
    const cplx Zuv = pz * kernel_Z(kind, u, v), Zvu = pz * kernel_Z(kind, v, u);
    const cplx Zvw = pz * kernel_Z(kind, v, w), Zwu = pz * kernel_Z(kind, w, u);
    const double scale = std::max({std::abs(Xuv), std::abs(Xvw), std::abs(Xuw), 1.0});

    rep.max_antisymmetry = std::max(rep.max_antisymmetry,
                                    std::max(std::abs(Xuv + Xvu), std::abs(Zuv + Zvu)));
    rep.max_triple = std::max(rep.max_triple,
                              std::abs(Xuv * Xvw - Xuw * (Zuv + Zvw)) / (scale * scale));
    rep.max_gamma = std::max(rep.max_gamma, std::abs(Xuv * Xuv - Zuv * Zuv - gamma));
    const cplx zf = Zuv * Zvw + Zwu * Zuv + Zvw * Zwu - gamma;
    const double zscale = std::max({std::abs(Zuv), std::abs(Zvw), std::abs(Zwu), 1.0});
    rep.max_z_form = std::max(rep.max_z_form, std::abs(zf) / (zscale * zscale));
  }
  return rep;
}

}  // namespace rg
