#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "localsieve/grid.hpp"

namespace localsieve {

// Translation-invariant singular kernel K(x - y). delta is the Hoelder
// exponent of the smoothness condition; sizeConstant and
// cancellationBound are the claimed constants that the certifier measures
// against; extraDecay, when present, claims |K(x)| <= C |x|^{-n-extraDecay}
// away from the origin.
struct ConvolutionKernel {
  std::string name;
  int dim = 1;
  double delta = 1.0;
  double sizeConstant = 1.0;
  double cancellationBound = 0.0;
  std::optional<double> extraDecay;
  bool oddSymmetric = false;
  std::function<double(const Point&)> evaluator;
};

// Multiplicative (eta) or convolution (psi) localizer.
struct Localizer {
  enum class Kind { Eta, Psi };
  std::string name;
  Kind kind = Kind::Eta;
  int dim = 1;
  double delta = 1.0;
  std::function<double(const Point&)> evaluator;
};

/// One certified condition: the observed constant, a stability reference
// (half-budget or narrowed-range estimate of the same quantity), and the
// verdict. note carries the witness (argmax sample or failing window).
struct ConditionCheck {
  double observed = 0.0;
  double reference = 0.0;
  bool passed = false;
  std::string note;
};

struct KernelCertificate {
  std::string subject;
  std::uint64_t seed = 0;
  long budget = 0;
  // Insertion-ordered names; serialized in this order.
  std::vector<std::string> order;
  std::map<std::string, ConditionCheck> conditions;

  void add(const std::string& name, ConditionCheck c);
  const ConditionCheck& at(const std::string& name) const;
  bool allPassed() const;
  std::string toJson() const;

  // Convenience accessors for the delta-kernel conditions.
  double observedSizeConstant() const { return at("size").observed; }
  double observedSmoothnessConstant() const { return at("smoothness").observed; }
  double observedCancellation() const { return at("cancellation").observed; }
};

struct CertifyOptions {
  long budget = 200000;
  std::uint64_t seed = 20240801;
  double radiusMin = 0x1p-12;
  double radiusMax = 0x1p12;
  // An observed constant is stable when the full-budget estimate exceeds
  // the half-budget estimate by less than this factor.
  double stabilityFactor = 1.25;
  double absoluteFloor = 1e-12;
};

// Certifies the size, smoothness, and cancellation conditions of a
// singular kernel by seeded log-uniform radial sampling and dyadic-shell
// quadrature. Non-finite evaluator values fail with a witness.
KernelCertificate certifyDeltaKernel(const ConvolutionKernel& k,
                                     const CertifyOptions& opt = {});

// Certifies boundedness, the local Lipschitz-ratio condition, and the
// two-sided integrability condition of a multiplicative localizer.
KernelCertificate certifyLocalizerEta(const Localizer& eta,
                                      const CertifyOptions& opt = {});

// Certifies unit integral, L1/L2 membership, and the decay and smoothness
// integral conditions of an approximate identity.
KernelCertificate certifyLocalizerPsi(const Localizer& psi,
                                      const CertifyOptions& opt = {});

// Pointwise product K(x) eta(x); inherits delta = min(K.delta, eta.delta).
ConvolutionKernel productKernel(const ConvolutionKernel& k, const Localizer& eta);

// Integral of fn over the shell r0 < |x| < r1 by Gauss-Legendre nodes in
// log radius; antipodal points are paired so odd integrands cancel
// exactly.
double shellIntegral(const std::function<double(const Point&)>& fn, int dim,
                     double r0, double r1);

// Built-in kernels and localizers.
ConvolutionKernel hilbertKernel();
ConvolutionKernel rieszKernel(int component, int dim);
// |x|^{-dim}: satisfies size and smoothness but has no cancellation.
ConvolutionKernel powerLawKernel(int dim);
// Smooth bump, identically 1 on B(0,1), supported in B(0,2).
Localizer standardBumpEta(int dim);
Localizer constantOneEta(int dim);
Localizer constantZeroEta(int dim);
// Normalized Gaussian, integral one; scale multiplies the integral (used
// to exercise the unit-integral failure path).
Localizer gaussianPsi(int dim, double sigma = 1.0, double scale = 1.0);

}  // namespace localsieve
