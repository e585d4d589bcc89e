#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace localsieve {

// Positions and frequencies in dimension 1 or 2. Dimension-1 data keeps
// component [1] at zero.
using Point = std::array<double, 2>;

inline double norm2(const Point& p) {
  return std::sqrt(p[0] * p[0] + p[1] * p[1]);
}

// Uniform cell-centered grid on [-L, L]^dim. Samples sit at
// x_i = -L + (i + 1/2) h, so no sample lands on the origin and every cell
// is a midpoint-quadrature cell of volume h^dim.
struct Grid {
  int dim = 1;
  double halfWidth = 1.0;   // L
  int pointsPerAxis = 8;    // N, power of two, >= 8

  static Grid make(int dim, double halfWidth, int pointsPerAxis);

  double spacing() const { return 2.0 * halfWidth / pointsPerAxis; }
  std::size_t cellCount() const {
    std::size_t n = std::size_t(pointsPerAxis);
    return dim == 1 ? n : n * n;
  }
  double coord(int i) const { return -halfWidth + (i + 0.5) * spacing(); }

  // Row-major flattening: flat = i0 * N + i1 in dimension 2.
  Point point(std::size_t flat) const {
    if (dim == 1) return {coord(int(flat)), 0.0};
    int n = pointsPerAxis;
    return {coord(int(flat) / n), coord(int(flat) % n)};
  }

  bool operator==(const Grid&) const = default;
};

// Sampled function on a Grid, zero-extended outside the box by every
// spatial operator. Arithmetic requires identical grids.
struct GridFunction {
  Grid grid;
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(const Grid& g) : grid(g), values(g.cellCount(), 0.0) {}

  static GridFunction sample(const Grid& g,
                             const std::function<double(const Point&)>& fn);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double s);
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(GridFunction a, double s);
GridFunction operator*(double s, GridFunction a);
// Pointwise product.
GridFunction hadamard(GridFunction a, const GridFunction& b);

void requireSameGrid(const Grid& a, const Grid& b);

// Euclidean ball; radius classifies the localization branch (r < 1 vs
// r >= 1) used by oscillation norms and atoms.
struct Ball {
  Point center{0.0, 0.0};
  double radius = 1.0;
};

// Flat indices of cells whose centers lie in the closed ball.
std::vector<std::size_t> cellsInBall(const Grid& g, const Ball& b);
// Discrete measure: (#cells in ball) * h^dim. All atom and test-function
// normalizations use this measure so constructed equalities are exact on
// the grid.
double ballMeasure(const Grid& g, const Ball& b);
// Mean of f over the cells of the ball. Throws if the ball holds no cell.
double ballMean(const GridFunction& f, const Ball& b);
// Localized reference value: mean over the ball when r < 1, zero when
// r >= 1.
double cBall(const GridFunction& b, const Ball& ball);
// True when the ball lies inside the box on every axis.
bool ballInsideBox(const Grid& g, const Ball& b);

double integrate(const GridFunction& f);

enum class Region { Inside, Outside };

// L^p norm with midpoint quadrature, p in [1, inf] (pass
// std::numeric_limits<double>::infinity() for the sup norm).
double lpNorm(const GridFunction& f, double p);
double lpNorm(const GridFunction& f, double p, const Ball& b, Region region);

GridFunction restrictToBall(const GridFunction& f, const Ball& b);

// Largest |x_i|_inf over cells with nonzero value; 0 for the zero function.
double supportHalfWidth(const GridFunction& f);
// Fourier-side operators require supp(f) well inside the box:
// halfWidth >= factor * supportHalfWidth. Throws std::invalid_argument on
// violation.
void requirePaddingContract(const GridFunction& f, double factor = 4.0);

using Multiplier = std::function<std::complex<double>(const Point&)>;

// Applies a Fourier multiplier through the periodic transform of the box.
// Frequencies are xi = (pi/L) * k per axis, k in [-N/2, N/2). Returns the
// real part, which symmetrizes the multiplier at the Nyquist bin; m must
// be finite at xi = 0.
GridFunction fourierMultiply(const GridFunction& f, const Multiplier& m);

// Sampled-function file: ASCII header "dim N L" then N^dim little-endian
// IEEE-754 doubles, row-major.
void writeGfn(const std::string& path, const GridFunction& f);
GridFunction readGfn(const std::string& path);

// Discrete witness that a tail integral, binned as (outer edge, annulus
// mass) pairs, has converged inside the box: either the outermost annulus
// is empty up to the floor 1e-14 (1 + total), or the last `window` masses
// fall geometrically by `factor` (annuli below the floor are skipped).
// Masses may rise and fall before that; only the closing behavior decides.
bool tailShellsConverged(const std::vector<std::pair<double, double>>& shells,
                         double factor = 0.92, std::size_t window = 3);

}  // namespace localsieve
