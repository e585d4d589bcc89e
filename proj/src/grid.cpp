#include "localsieve/grid.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "localsieve/runtime.hpp"

namespace localsieve {

namespace {

bool isPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fftRadix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / double(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Direct twiddles keep round-trip error near machine precision.
        std::complex<double> w = std::polar(1.0, ang * double(k));
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

// Signed frequency index: k in [-N/2, N/2).
inline int signedFreq(int q, int n) { return q < n / 2 ? q : q - n; }

}  // namespace

Grid Grid::make(int dim, double halfWidth, int pointsPerAxis) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("Grid: dim must be 1 or 2");
  if (!(halfWidth > 0.0) || !std::isfinite(halfWidth))
    throw std::invalid_argument("Grid: halfWidth must be positive");
  if (pointsPerAxis < 8 || !isPowerOfTwo(pointsPerAxis))
    throw std::invalid_argument("Grid: pointsPerAxis must be a power of two >= 8");
  return Grid{dim, halfWidth, pointsPerAxis};
}

GridFunction GridFunction::sample(const Grid& g,
                                  const std::function<double(const Point&)>& fn) {
  GridFunction f(g);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = fn(g.point(i));
  return f;
}

void requireSameGrid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw std::invalid_argument("grid mismatch");
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  requireSameGrid(grid, other.grid);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  requireSameGrid(grid, other.grid);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= other.values[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double s) {
  for (double& v : values) v *= s;
  return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(GridFunction a, double s) { return a *= s; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }

GridFunction hadamard(GridFunction a, const GridFunction& b) {
  requireSameGrid(a.grid, b.grid);
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] *= b.values[i];
  return a;
}

std::vector<std::size_t> cellsInBall(const Grid& g, const Ball& b) {
  std::vector<std::size_t> out;
  const double h = g.spacing();
  const int n = g.pointsPerAxis;
  auto axisRange = [&](double c) {
    int lo = int(std::floor((c - b.radius + g.halfWidth) / h - 0.5));
    int hi = int(std::ceil((c + b.radius + g.halfWidth) / h - 0.5));
    return std::pair<int, int>(std::max(0, lo), std::min(n - 1, hi));
  };
  const double r2 = b.radius * b.radius;
  if (g.dim == 1) {
    auto [lo, hi] = axisRange(b.center[0]);
    for (int i = lo; i <= hi; ++i) {
      double d = g.coord(i) - b.center[0];
      if (d * d <= r2) out.push_back(std::size_t(i));
    }
    return out;
  }
  auto [lo0, hi0] = axisRange(b.center[0]);
  auto [lo1, hi1] = axisRange(b.center[1]);
  for (int i = lo0; i <= hi0; ++i) {
    double d0 = g.coord(i) - b.center[0];
    for (int j = lo1; j <= hi1; ++j) {
      double d1 = g.coord(j) - b.center[1];
      if (d0 * d0 + d1 * d1 <= r2) out.push_back(std::size_t(i) * n + j);
    }
  }
  return out;
}

double ballMeasure(const Grid& g, const Ball& b) {
  double cellVol = g.dim == 1 ? g.spacing() : g.spacing() * g.spacing();
  return double(cellsInBall(g, b).size()) * cellVol;
}

double ballMean(const GridFunction& f, const Ball& b) {
  auto cells = cellsInBall(f.grid, b);
  if (cells.empty()) throw std::invalid_argument("ballMean: ball holds no cell");
  double s = 0.0;
  for (std::size_t c : cells) s += f.values[c];
  return s / double(cells.size());
}

double cBall(const GridFunction& b, const Ball& ball) {
  return ball.radius < 1.0 ? ballMean(b, ball) : 0.0;
}

bool ballInsideBox(const Grid& g, const Ball& b) {
  for (int d = 0; d < g.dim; ++d)
    if (std::abs(b.center[d]) + b.radius > g.halfWidth) return false;
  return true;
}

double integrate(const GridFunction& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  double h = f.grid.spacing();
  return s * (f.grid.dim == 1 ? h : h * h);
}

namespace {

double lpOfCells(const GridFunction& f, double p,
                 const std::function<bool(std::size_t)>& keep) {
  const bool inf = std::isinf(p);
  if (!inf && p < 1.0) throw std::invalid_argument("lpNorm: p must be >= 1");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (!keep(i)) continue;
    double a = std::abs(f.values[i]);
    if (inf)
      acc = std::max(acc, a);
    else
      acc += std::pow(a, p);
  }
  if (inf) return acc;
  double h = f.grid.spacing();
  double vol = f.grid.dim == 1 ? h : h * h;
  return std::pow(acc * vol, 1.0 / p);
}

}  // namespace

double lpNorm(const GridFunction& f, double p) {
  return lpOfCells(f, p, [](std::size_t) { return true; });
}

double lpNorm(const GridFunction& f, double p, const Ball& b, Region region) {
  const double r2 = b.radius * b.radius;
  return lpOfCells(f, p, [&](std::size_t i) {
    Point x = f.grid.point(i);
    double d0 = x[0] - b.center[0];
    double d1 = x[1] - b.center[1];
    bool inside = d0 * d0 + d1 * d1 <= r2;
    return region == Region::Inside ? inside : !inside;
  });
}

GridFunction restrictToBall(const GridFunction& f, const Ball& b) {
  GridFunction out(f.grid);
  for (std::size_t c : cellsInBall(f.grid, b)) out.values[c] = f.values[c];
  return out;
}

double supportHalfWidth(const GridFunction& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (f.values[i] == 0.0) continue;
    Point x = f.grid.point(i);
    m = std::max(m, std::max(std::abs(x[0]), std::abs(x[1])));
  }
  return m;
}

void requirePaddingContract(const GridFunction& f, double factor) {
  double s = supportHalfWidth(f);
  if (s * factor > f.grid.halfWidth) {
    std::ostringstream msg;
    msg << "padding contract violated: support half-width " << s
        << " needs box half-width >= " << s * factor << " (have "
        << f.grid.halfWidth << ")";
    throw std::invalid_argument(msg.str());
  }
}

GridFunction fourierMultiply(const GridFunction& f, const Multiplier& m) {
  const Grid& g = f.grid;
  const int n = g.pointsPerAxis;
  const double base = M_PI / g.halfWidth;
  GridFunction out(g);
  if (g.dim == 1) {
    std::vector<std::complex<double>> a(f.values.begin(), f.values.end());
    fftRadix2(a, false);
    for (int q = 0; q < n; ++q)
      a[q] *= m(Point{base * signedFreq(q, n), 0.0});
    fftRadix2(a, true);
    for (int i = 0; i < n; ++i) out.values[i] = a[i].real() / double(n);
    return out;
  }
  std::vector<std::complex<double>> a(f.values.begin(), f.values.end());
  std::vector<std::complex<double>> col(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::complex<double>> row(a.begin() + std::size_t(i) * n,
                                          a.begin() + std::size_t(i + 1) * n);
    fftRadix2(row, false);
    std::copy(row.begin(), row.end(), a.begin() + std::size_t(i) * n);
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = a[std::size_t(i) * n + j];
    fftRadix2(col, false);
    for (int i = 0; i < n; ++i) a[std::size_t(i) * n + j] = col[i];
  }
  for (int q0 = 0; q0 < n; ++q0)
    for (int q1 = 0; q1 < n; ++q1)
      a[std::size_t(q0) * n + q1] *=
          m(Point{base * signedFreq(q0, n), base * signedFreq(q1, n)});
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = a[std::size_t(i) * n + j];
    fftRadix2(col, true);
    for (int i = 0; i < n; ++i) a[std::size_t(i) * n + j] = col[i];
  }
  const double scale = 1.0 / (double(n) * double(n));
  for (int i = 0; i < n; ++i) {
    std::vector<std::complex<double>> row(a.begin() + std::size_t(i) * n,
                                          a.begin() + std::size_t(i + 1) * n);
    fftRadix2(row, true);
    for (int j = 0; j < n; ++j)
      out.values[std::size_t(i) * n + j] = row[j].real() * scale;
  }
  return out;
}

namespace {

void putLeDouble(std::ofstream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = (unsigned char)((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double getLeDouble(std::ifstream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(buf[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void writeGfn(const std::string& path, const GridFunction& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("writeGfn: cannot open " + path);
  char header[96];
  std::snprintf(header, sizeof header, "%d %d %.17g\n", f.grid.dim,
                f.grid.pointsPerAxis, f.grid.halfWidth);
  os << header;
  for (double v : f.values) putLeDouble(os, v);
  if (!os) throw std::runtime_error("writeGfn: write failed for " + path);
}

GridFunction readGfn(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("readGfn: cannot open " + path);
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  int dim = 0, n = 0;
  double halfWidth = 0.0;
  if (!(hs >> dim >> n >> halfWidth))
    throw std::runtime_error("readGfn: bad header in " + path);
  GridFunction f(Grid::make(dim, halfWidth, n));
  for (double& v : f.values) v = getLeDouble(is);
  if (!is) throw std::runtime_error("readGfn: truncated data in " + path);
  return f;
}

// The closing factor must admit log-squared numerators: their post-hump
// dyadic mass ratio starts near 0.903 before falling toward 1/2, while a
// non-convergent tail holds ratios at 1 on the un-truncated pairs.
bool tailShellsConverged(const std::vector<std::pair<double, double>>& shells,
                         double factor, std::size_t window) {
  double total = 0.0;
  for (const auto& [edge, mass] : shells) total += mass;
  const double floor = 1e-14 * (1.0 + total);
  if (shells.empty() || shells.back().second <= floor) return true;
  std::size_t first = shells.size() > window ? shells.size() - window : 0;
  double prev = shells[first].second;
  for (std::size_t s = first + 1; s < shells.size(); ++s) {
    double next = shells[s].second;
    if (next > floor && next > factor * std::max(prev, floor)) return false;
    prev = next;
  }
  return true;
}

}  // namespace localsieve
