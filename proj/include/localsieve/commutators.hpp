#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "localsieve/atoms.hpp"
#include "localsieve/grid.hpp"
#include "localsieve/kernels.hpp"
#include "localsieve/spaces.hpp"

namespace localsieve {

// Kernel of two variables with the size bound
//   |K(x,y)| <= C * min(|x-y|^{-n}, |x-y|^{-n-eps}),
// the class that localized convolution kernels land in.
struct InhomogeneousKernel {
  std::string name;
  int dim = 1;
  double delta = 1.0;       // smoothness exponent carried from the kernel
  double extraDecay = 1.0;  // eps in the far-field size bound
  double sizeConstant = 1.0;

  std::function<double(const Point&, const Point&)> evaluator;

  // K0(x-y) * eta(x-y). A compactly supported eta gives the far-field
  // bound for every eps, with constant C * sup|eta| * R^eps where R bounds
  // the support of eta.
  static InhomogeneousKernel fromLocalizedConvolution(
      const ConvolutionKernel& k, const Localizer& eta, double extraDecay);
};

// Samples random pairs (plus near-diagonal pairs at log-uniform
// separations) and reports the largest |K(x,y)| / (C min(...)) ratio.
struct SpotCheckResult {
  double maxRatio = 0.0;
  bool passed = false;
};
SpotCheckResult spotCheckInhomogeneous(const InhomogeneousKernel& k,
                                       const Grid& g, std::uint64_t seed,
                                       int budget = 20000);

// Tf(x_i) = sum over |x_i - x_j| >= eps of K(x_i, x_j) f(x_j) h^n.
// eps <= 0 selects the spacing h; explicit eps below h/2 throws.
GridFunction applyInhomogeneous(const InhomogeneousKernel& k,
                                const GridFunction& f, double eps = 0.0);

// Transposed operator: (T^t g)(y_i) = sum over x of K(x, y_i) g(x) h^n.
GridFunction applyInhomogeneousTransposed(const InhomogeneousKernel& k,
                                          const GridFunction& g,
                                          double eps = 0.0);

// [b,T] a = (b - c_B) T(a) - T(a (b - c_B)), with c_B taken from the
// atom's attached ball. Algebraically equal to b T(a) - T(b a); the split
// form is what the estimates control term by term.
struct CommutatorParts {
  GridFunction total;
  GridFunction oscillationTerm;  // (b - c_B) T(a)
  GridFunction insideTerm;       // T(a (b - c_B))
};
CommutatorParts commutatorApply(const GridFunction& b,
                                const InhomogeneousKernel& k, const Atom& a,
                                double eps = 0.0);

struct CommutatorCertificate {
  double l1Norm = 0.0;
  double bmoNorm = 0.0;
  double ratio = 0.0;
  std::pair<double, double> splitTerms{0.0, 0.0};
  std::optional<MoleculeCertificate> moleculeCert;
};
// Evaluates [b,T]a, records the split-term L1 norms, and optionally the
// molecule certificate of (b - c_B) T(a) at s = 3/2, lambda = n/2 + mu on
// the doubled ball. bmoVal < 0 means compute ||b||_{bmo,1} over the
// standard family.
CommutatorCertificate certifyCommutator(const GridFunction& b,
                                        const InhomogeneousKernel& k,
                                        const Atom& a, double bmoVal = -1.0,
                                        bool withMolecule = false,
                                        double mu = 0.5);

// <T*_B(b), g> = int (b - b_B) T g over the box, for g supported in B
// with zero mean. The annulus masses of |(b - b_B) T g| witness the
// convergence of the defining integral.
struct TStarPairing {
  double value = 0.0;
  std::vector<std::pair<double, double>> shells;  // outer edge, mass
  bool trendOk = true;
};
TStarPairing tStarPairing(const InhomogeneousKernel& k, const GridFunction& b,
                          const Ball& ball, const GridFunction& g,
                          double eps = 0.0);

// Realizes f = T*_B(b) on the cells of B through the transposed kernel
// applied to b - b_B, and compares the L2 mean oscillation of f over B to
// log(1 + 1/r). Requires r < 1.
struct TStarBCondition {
  double oscillation = 0.0;
  double bound = 0.0;
  bool passed = false;
};
TStarBCondition tStarBCondition(const InhomogeneousKernel& k,
                                const GridFunction& b, const Ball& ball,
                                double eps = 0.0);

// Molecule certificate of (b - c_B) T(a) on the doubled ball at s = 3/2,
// lambda = n/2 + mu; requires 0 < mu < (3/2) min(delta, extraDecay).
MoleculeCertificate commutatorMoleculeCheck(const GridFunction& b,
                                            const InhomogeneousKernel& k,
                                            const Atom& a, double mu,
                                            double eps = 0.0);

// One row of the sign-pattern identity sweep: with s = sgn(b - b_B) on B
// and a = (s - s_B) chi_B / m(B), the mean oscillation of b over B equals
// the pairing integral of a with b exactly at grid level.
struct SignAtomRow {
  Point center{0.0, 0.0};
  double radius = 0.0;
  double meanOscillation = 0.0;
  double pairing = 0.0;
  double difference = 0.0;  // |meanOscillation - pairing|
};
std::vector<SignAtomRow> signAtomIdentitySweep(const GridFunction& b,
                                               const BallFamily& fam);

// The constant A_b: sup over family balls of the h1 estimate of
// |b - b_B| chi_B (r < 1) or |b| chi_B (r >= 1), divided by m(B).
struct ABConstantRow {
  Point center{0.0, 0.0};
  double radius = 0.0;
  double h1Estimate = 0.0;
  double measure = 0.0;
  double ratio = 0.0;
};
struct ABConstantReport {
  std::vector<ABConstantRow> rows;
  double sup = 0.0;
};
ABConstantReport aBConstantSweep(const GridFunction& b, const BallFamily& fam);

}  // namespace localsieve
