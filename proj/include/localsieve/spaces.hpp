#pragma once

#include <map>
#include <string>
#include <vector>

#include "localsieve/grid.hpp"

namespace localsieve {

/// Finite ball family: centers on a subgrid, dyadic radii tied to the
// spacing. Balls that stick out of the box are dropped.
struct BallFamily {
  std::vector<Point> centers;
  std::vector<double> radii;

  // Centers on a stride subgrid; radii {2^k h : k >= 2, 2^k h <= maxRadius}
  // (maxRadius <= 0 selects L/2). The default box keeps several radii
  // below 1 and at least one at or above 1.
  static BallFamily standard(const Grid& g, int stride = 4,
                             double maxRadius = 0.0);
  static BallFamily fromLists(std::vector<Point> centers,
                              std::vector<double> radii);

  // Materialized balls inside the box.
  std::vector<Ball> balls(const Grid& g) const;
};

// Mean-oscillation norms over a family. Small balls (r < 1) subtract the
// ball mean; large balls average |b| itself. lmo weights small-ball
// oscillation by log(1 + 1/r) and adds the large-ball average.
struct OscillationReport {
  std::map<int, double> bmoP;     // p in {1,2,6}, localized reference value
  std::map<int, double> bmolocP;  // p in {1,2}, small balls only
  std::map<int, double> lmolocP;  // p in {1,2}, log-weighted small balls
  double smallBallSup = 0.0;      // p = 1 oscillation over r < 1
  double largeBallSup = 0.0;      // p = 1 average of |b| over r >= 1
  int smallBallCount = 0;
  int largeBallCount = 0;
  std::map<std::string, Ball> argmax;

  double bmo() const { return bmoP.at(1); }
  double lmoloc() const { return lmolocP.at(1); }
  double lmo() const { return lmolocP.at(1) + largeBallSup; }
};

OscillationReport oscillationReport(const GridFunction& b, const BallFamily& f);
// Same engine; p is validated against the supported exponents {1, 2, 6}.
OscillationReport bmoNorm(const GridFunction& b, const BallFamily& f, int p = 1);
OscillationReport lmoNorms(const GridFunction& b, const BallFamily& f);
double bmoNormValue(const GridFunction& b, const BallFamily& f, int p = 1);

// Reusable per-ball sorted views of b; building them once makes repeated
// maximal-function sweeps over many inputs cheap.
struct BallCommutatorContext {
  Grid grid;
  struct BallData {
    std::vector<std::size_t> cells;  // sorted by increasing b value
    std::vector<double> sortedB;
  };
  std::vector<BallData> data;
  std::vector<double> bValues;
};

BallCommutatorContext makeBallCommutatorContext(const GridFunction& b,
                                                const BallFamily& f);

// M_b f(x) = sup over family balls containing x of the mean of
// |b(x) - b(y)| |f(y)| over the ball; 0 where no family ball covers x.
GridFunction ballCommutatorMaximal(const BallCommutatorContext& ctx,
                                   const GridFunction& f);
GridFunction ballCommutatorMaximal(const GridFunction& b,
                                   const GridFunction& f, const BallFamily& fam);

// Hardy-Littlewood maximal function over the same family.
GridFunction hardyLittlewoodMaximal(const GridFunction& f,
                                    const BallFamily& fam);

/// A dictionary test function is anchored at a cell x with scale t < 1:
// phi(y) = amp * shape((y - x)/t), supported in B(x, t), with
// ||phi||_inf <= |B(x,t)|^{-1} and ||grad phi||_inf <= [t |B(x,t)|]^{-1}
// in the discrete ball measure. Amplitudes are chosen to meet both bounds
// with equality margin and re-checked by sampling at construction.
struct TestProfile {
  std::string name;
  double maxAbs = 1.0;
  double gradBound = 1.0;
  std::function<double(const Point&)> shape;  // zero outside the unit ball
};

struct TestDictionary {
  std::vector<TestProfile> profiles;
  std::vector<double> scales;  // dyadic, in (h, 1)
  int stride = 4;              // anchors on this subgrid

  static TestDictionary standard(const Grid& g, int stride = 4,
                                 int maxScales = 6);
};

/// Certified lower bound for the commutator grand maximal function:
// at each anchor x, max over members of |int [b(x) - b(y)] f(y) phi(y) dy|.
// Zero off the anchor subgrid and at anchors whose support ball leaves
// the box.
GridFunction commutatorMaximalLower(const GridFunction& b,
                                    const GridFunction& f,
                                    const TestDictionary& d);

// Certified lower bound for the grand maximal function |<f, phi>|.
GridFunction grandMaximalLower(const GridFunction& f, const TestDictionary& d);

// Midpoint quadrature of |f| on the stride subgrid; the L1 convention for
// dictionary outputs.
double subgridL1(const GridFunction& f, int stride);

// L1 norm of x -> max over scales |(f * phi_t)(x)| with
// phi_t(y) = t^{-dim} phi(y/t).
double h1NormEstimate(const GridFunction& f,
                      const std::function<double(const Point&)>& profile,
                      const std::vector<double>& scales);
// Normalized smooth bump profile and all dyadic scales in (h, 1), capped
// at the 8 largest.
double h1NormEstimateDefault(const GridFunction& f);
std::vector<double> defaultScales(const Grid& g, int maxScales = 8);

// |int g| log(1 + 1/r) / h1NormEstimateDefault(g); requires supp g inside
// the ball. Throws on a zero estimate with nonzero mean.
double meanBoundRatio(const GridFunction& g, const Ball& ball);

struct TailRatioReport {
  double ratio = 0.0;
  // (outer radius, annulus mass) for dyadic annuli of the tail integral.
  std::vector<std::pair<double, double>> shells;
  bool trendOk = true;
};

// r^delta int_{|x-x0|>r} |b - c_B|^p |x-x0|^{-dim-delta} dx, truncated at
// the box, divided by bmoNormValue(b)^p. Throws when the norm vanishes
// while the numerator does not.
TailRatioReport weightedTailRatio(const GridFunction& b, const Ball& ball,
                                  double delta, double p,
                                  const BallFamily* family = nullptr);

}  // namespace localsieve
