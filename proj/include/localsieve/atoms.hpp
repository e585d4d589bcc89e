#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "localsieve/grid.hpp"
#include "localsieve/runtime.hpp"
#include "localsieve/spaces.hpp"

#include "json.hpp"

namespace localsieve {

// Building blocks supported on a single ball: normalized bumps with size,
// mean, and weighted-mean budgets, plus the validators that certify them.

enum class AtomKind {
  Goldberg,       // sup bound 1/m(B); exact cancellation when r < 1
  Approximate12,  // L2 bound m(B)^{-1/2}; |mean| <= 1/log(1+1/r)
  PerezH1b,       // cancellation against both 1 and b when r < 1
  ApproxH1b,      // relaxed budgets 1/log(1+1/r)^2 and Cb/log(1+1/r)
};

std::string atomKindName(AtomKind kind);

struct Atom {
  GridFunction values;
  Ball ball;
  AtomKind kind = AtomKind::Goldberg;
  // Measured at construction time with the grid quadrature.
  double l2Norm = 0.0;
  double lInfNorm = 0.0;
  double integral = 0.0;
  std::optional<double> bPairing;  // ∫ a (b - c_B) when built against b
  std::string note;                // set when a budget had to be reduced
};

struct AtomCondition {
  std::string name;
  double observed = 0.0;
  double bound = 0.0;
  bool passed = false;
};

struct AtomCertificate {
  std::string subject;
  std::vector<AtomCondition> conditions;

  bool allPassed() const;
  const AtomCondition& at(const std::string& name) const;
  nlohmann::ordered_json toJson() const;
};

// Tolerance for constructed-to-hold conditions, relative; far below the
// quadrature error, so it catches logic bugs rather than grid noise.
inline constexpr double kAtomSlack = 1e-8;
// Molecule certificates pass when observed/bound <= 1 + kMoleculeSlack.
inline constexpr double kMoleculeSlack = 1e-6;

// Random values on the ball, mean removed when cancel is set and r < 1,
// rescaled so the L2 norm is exactly m(B)^{-1/2}. Needs >= 3 cells.
Atom makeH1Atom(const Grid& g, const Ball& ball, std::uint64_t seed,
                bool cancel = true);

// Cancellation against both 1 and b: random values on the ball projected
// onto the orthogonal complement of span{1, b} in the discrete inner
// product over the ball, then L2-normalized. A constant b degrades
// gracefully to plain mean removal; a projection that annihilates the
// sample retries fresh seeds (at most 8) before throwing. For r >= 1 only
// the size normalization is imposed.
Atom makePerezH1bAtom(const Grid& g, const Ball& ball, const GridFunction& b,
                      std::uint64_t seed);

// Projected core plus a controlled multiple of the normalized indicator:
// |∫a| = meanBudget / log(1+1/r)^2 with ∫a(b - c_B) = 0 exactly, and the
// L2 norm filled to m(B)^{-1/2}. meanBudget in [0, 1]; a budget that would
// overflow the L2 normalization is clamped and noted. meanBudget = 0
// reproduces a Perez-style atom. For r >= 1 only the size bound applies.
Atom makeApproxH1bAtom(const Grid& g, const Ball& ball, const GridFunction& b,
                       std::uint64_t seed, double meanBudget);

// Re-measures the defining inequalities of a.kind from the values. The
// b-weighted kinds require b; cb < 0 means compute C_b = ||b||_{bmo,2}
// over the standard ball family.
AtomCertificate validateAtom(const Atom& a, const GridFunction* b = nullptr,
                             double cb = -1.0);

// Size / weighted-tail / mean conditions for a non-compactly-supported
// building block associated to `ball`, at exponents s in (1,inf) and
// lambda > dim*(s-1):
//   M1  ||M||_{L^s(B)}                     <= r^{n(1/s-1)}
//   M2  || M |x-x0|^{lambda/s} ||_{L^s(B^c)} <= r^{lambda/s + n(1/s-1)}
//   M3  |∫M|                               <= 1/log(1+1/r)
// M2 is truncated at the box; the outer-shell masses of its integrand are
// reported with a geometric-decay trend check, same policy as the kernel
// certifier.
struct MoleculeCertificate {
  double s = 0.0;
  double lambda = 0.0;
  Ball ball;
  AtomCondition m1, m2, m3;
  std::vector<std::pair<double, double>> tailShells;  // outer edge, mass
  bool trendOk = true;
  bool passed = false;

  nlohmann::ordered_json toJson() const;
};
MoleculeCertificate validateMolecule(const GridFunction& m, const Ball& ball,
                                     double s, double lambda);

// Exact finite decomposition of an approximate atom A with r < 1:
//   A = 2·a_0 + sum_{j=1..k} lambda_j a_j + alpha·a_{k+1}
// where alpha = ∫A, a_0 = (A - alpha·eta_0)/2, the chain transports the
// excess mean outward over doubled balls B_j = B(x0, 2^j r) until the
// radius reaches 1 (eta_j = chi_{B_j}/m(B_j)), lambda_j =
// alpha·2^n·log(1+(2^j r)^{-1}), and a_{k+1} = eta_k. The reconstruction
// telescopes exactly up to roundoff. alpha ~ 0 returns the single-atom
// identity decomposition; r >= 1 or a chain ball escaping the box throws.
struct DecompositionResult {
  std::vector<double> coefficients;  // lambda_j, aligned with atoms
  std::vector<Atom> atoms;
  double ellOneSum = 0.0;
  int k = 0;                   // number of doubling steps
  double alpha = 0.0;          // mean of the input
  double ellOneBound = 0.0;    // 3 + 2^n(log2(1/r)+1)/log(1+1/r)
  GridFunction reconstruction; // sum lambda_j a_j
  double reconstructionError = 0.0;  // max abs deviation from the input
};
DecompositionResult decomposeApproxAtom(const Atom& a, const GridFunction& b);

// The product a·(b - c_B) on the grid, with its L^s norms compared to
// ||b||_{bmo,p} m(B)^{1/s-1} for s in {1, 3/2} (1/2 + 1/p = 1/s), plus the
// discrete Hoelder chain ||a(b-c_B)||_{3/2} <= ||a||_2 ||b-c_B||_{L^6(B)}.
struct ProductReport {
  GridFunction product;
  double normS1 = 0.0, boundS1 = 0.0, ratioS1 = 0.0;    // s = 1,   p = 2
  double normS32 = 0.0, boundS32 = 0.0, ratioS32 = 0.0; // s = 3/2, p = 6
  double holderLhs = 0.0, holderRhs = 0.0;
};
ProductReport abcCancellationProduct(const Atom& a, const GridFunction& b,
                                     const BallFamily* family = nullptr);

}  // namespace localsieve
