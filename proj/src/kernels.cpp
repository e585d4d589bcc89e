#include "localsieve/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "localsieve/runtime.hpp"

namespace localsieve {

namespace {

// 8-point Gauss-Legendre on [-1, 1].
constexpr double kGlNode[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeight[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

constexpr int kAnglePairs = 32;  // 64 angular nodes, paired antipodally

Point onCircle(double rho, double theta) {
  return {rho * std::cos(theta), rho * std::sin(theta)};
}

// One octave r0..2*r0 in log radius; pairs x and -x so odd integrands
// cancel in exact arithmetic.
double shellPanel(const std::function<double(const Point&)>& fn, int dim,
                  double r0, double r1) {
  const double la = std::log(r0), lb = std::log(r1);
  const double mid = 0.5 * (la + lb), half = 0.5 * (lb - la);
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double rho = std::exp(mid + half * kGlNode[i]);
    const double wl = kGlWeight[i] * half;
    if (dim == 1) {
      acc += wl * rho * (fn(Point{rho, 0.0}) + fn(Point{-rho, 0.0}));
    } else {
      double ang = 0.0;
      const double dtheta = M_PI / kAnglePairs;
      for (int a = 0; a < kAnglePairs; ++a) {
        double theta = (a + 0.5) * dtheta;
        Point p = onCircle(rho, theta);
        ang += fn(p) + fn(Point{-p[0], -p[1]});
      }
      acc += wl * rho * rho * ang * dtheta;
    }
  }
  return acc;
}

}  // namespace

double shellIntegral(const std::function<double(const Point&)>& fn, int dim,
                     double r0, double r1) {
  if (!(r0 > 0.0) || !(r1 > r0))
    throw std::invalid_argument("shellIntegral: need 0 < r0 < r1");
  int panels = std::max(1, int(std::ceil(std::log2(r1 / r0))));
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    double a = r0 * std::exp(std::log(r1 / r0) * double(p) / panels);
    double b = r0 * std::exp(std::log(r1 / r0) * double(p + 1) / panels);
    acc += shellPanel(fn, dim, a, b);
  }
  return acc;
}

void KernelCertificate::add(const std::string& name, ConditionCheck c) {
  order.push_back(name);
  conditions[name] = std::move(c);
}

const ConditionCheck& KernelCertificate::at(const std::string& name) const {
  auto it = conditions.find(name);
  if (it == conditions.end())
    throw std::invalid_argument("certificate has no condition " + name);
  return it->second;
}

bool KernelCertificate::allPassed() const {
  for (const auto& [k, v] : conditions)
    if (!v.passed) return false;
  return true;
}

std::string KernelCertificate::toJson() const {
  nlohmann::ordered_json j;
  j["subject"] = subject;
  j["seed"] = seed;
  j["budget"] = budget;
  j["passed"] = allPassed();
  nlohmann::ordered_json conds;
  for (const std::string& name : order) {
    const ConditionCheck& c = conditions.at(name);
    nlohmann::ordered_json e;
    e["observed"] = c.observed;
    e["reference"] = c.reference;
    e["passed"] = c.passed;
    if (!c.note.empty()) e["note"] = c.note;
    conds[name] = e;
  }
  j["conditions"] = conds;
  return j.dump(2);
}

namespace {

std::string pointNote(const char* label, const Point& p, int dim) {
  std::ostringstream os;
  os << label << " (" << p[0];
  if (dim == 2) os << ", " << p[1];
  os << ")";
  return os.str();
}

Point randomDirection(Rng& rng, int dim) {
  if (dim == 1) return {rng.uniform() < 0.5 ? -1.0 : 1.0, 0.0};
  double theta = rng.uniform(0.0, 2.0 * M_PI);
  return {std::cos(theta), std::sin(theta)};
}

struct SupTracker {
  double half = 0.0;  // sup over the first half of the budget
  double full = 0.0;
  Point argmax{0.0, 0.0};
  bool finiteOk = true;
  Point badPoint{0.0, 0.0};

  void feed(double value, const Point& where, bool inHalf) {
    if (!std::isfinite(value)) {
      if (finiteOk) badPoint = where;
      finiteOk = false;
      return;
    }
    if (value > full) {
      full = value;
      argmax = where;
    }
    if (inHalf && value > half) half = value;
  }

  ConditionCheck toCheck(const CertifyOptions& opt, int dim,
                         const char* argmaxLabel) const {
    ConditionCheck c;
    c.observed = full;
    c.reference = half;
    if (!finiteOk) {
      c.passed = false;
      c.note = pointNote("non-finite evaluator value at", badPoint, dim);
      return c;
    }
    bool tiny = full < opt.absoluteFloor;
    bool stable = full <= opt.stabilityFactor * half || tiny;
    c.passed = stable;
    c.note = tiny ? "" : pointNote(argmaxLabel, argmax, dim);
    if (!stable)
      c.note += " (unstable: half-budget estimate " + std::to_string(half) + ")";
    return c;
  }
};

// Largest |sum of consecutive shell integrals| over any dyadic window.
double maxWindowSum(const std::vector<double>& shells, std::size_t lo,
                    std::size_t hi, std::size_t* argLo, std::size_t* argHi) {
  double best = 0.0;
  for (std::size_t a = lo; a < hi; ++a) {
    double run = 0.0;
    for (std::size_t b = a; b < hi; ++b) {
      run += shells[b];
      if (std::abs(run) > best) {
        best = std::abs(run);
        if (argLo) *argLo = a;
        if (argHi) *argHi = b;
      }
    }
  }
  return best;
}

// Increments must fall by the factor (or below the floor) across the last
// window positions; exact zero tails converge by the floor rule.
bool geometricDecayOk(const std::vector<double>& inc, double factor,
                      double floor, int window = 4) {
  if (inc.size() < 2) return true;
  std::size_t first = inc.size() > std::size_t(window) ? inc.size() - window - 1 : 0;
  for (std::size_t i = first; i + 1 < inc.size(); ++i) {
    double prev = std::abs(inc[i]), next = std::abs(inc[i + 1]);
    if (next <= floor) continue;
    if (next > factor * prev) return false;
  }
  return true;
}

double sumAbs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace

KernelCertificate certifyDeltaKernel(const ConvolutionKernel& k,
                                     const CertifyOptions& opt) {
  KernelCertificate cert;
  cert.subject = k.name.empty() ? "kernel" : k.name;
  cert.seed = opt.seed;
  cert.budget = opt.budget;
  const int n = k.dim;
  const double dn = double(n);

  {  // size: sup |K(x)| |x|^n over log-uniform radii.
    Rng rng(subSeed(opt.seed, 1));
    SupTracker t;
    for (long i = 0; i < opt.budget; ++i) {
      double rho = rng.logUniform(opt.radiusMin, opt.radiusMax);
      Point dir = randomDirection(rng, n);
      Point x{rho * dir[0], rho * dir[1]};
      t.feed(std::abs(k.evaluator(x)) * std::pow(rho, dn), x,
             i < opt.budget / 2);
    }
    cert.add("size", t.toCheck(opt, n, "argmax at"));
  }

  {  // smoothness: sup |K(x-y)-K(x)| |x|^{n+delta} / |y|^delta, 2|y| <= |x|.
    Rng rng(subSeed(opt.seed, 2));
    SupTracker t;
    for (long i = 0; i < opt.budget; ++i) {
      double rho = rng.logUniform(opt.radiusMin, opt.radiusMax);
      Point dx = randomDirection(rng, n);
      Point x{rho * dx[0], rho * dx[1]};
      double ry = rng.logUniform(rho * 0x1p-10, rho * 0.5);
      Point dy = randomDirection(rng, n);
      Point y{ry * dy[0], ry * dy[1]};
      double diff = k.evaluator(Point{x[0] - y[0], x[1] - y[1]}) - k.evaluator(x);
      double ratio =
          std::abs(diff) * std::pow(rho, dn + k.delta) / std::pow(ry, k.delta);
      t.feed(ratio, x, i < opt.budget / 2);
    }
    cert.add("smoothness", t.toCheck(opt, n, "argmax near"));
  }

  {  // cancellation: sup over dyadic windows of |shell sums|. A growing
     // window maximum (full range vs the middle half) means the partial
     // sums diverge, as for kernels without cancellation.
    int kLo = int(std::floor(std::log2(opt.radiusMin)));
    int kHi = int(std::ceil(std::log2(opt.radiusMax)));
    std::vector<double> shells;
    bool finiteOk = true;
    for (int s = kLo; s < kHi; ++s) {
      double v = shellIntegral(k.evaluator, n, std::ldexp(1.0, s),
                               std::ldexp(1.0, s + 1));
      if (!std::isfinite(v)) finiteOk = false;
      shells.push_back(v);
    }
    std::size_t m = shells.size();
    std::size_t aLo = 0, aHi = 0;
    double full = maxWindowSum(shells, 0, m, &aLo, &aHi);
    double narrow = maxWindowSum(shells, m / 4, m - m / 4, nullptr, nullptr);
    ConditionCheck c;
    c.observed = full;
    c.reference = narrow;
    if (!finiteOk) {
      c.passed = false;
      c.note = "non-finite shell integral";
    } else {
      bool tiny = full < opt.absoluteFloor;
      c.passed = tiny || full <= opt.stabilityFactor * narrow;
      if (!tiny) {
        std::ostringstream os;
        os << (c.passed ? "argmax window" : "divergent partial sums; argmax window")
           << " r=2^" << (kLo + int(aLo)) << " R=2^" << (kLo + int(aHi) + 1);
        c.note = os.str();
      }
    }
    cert.add("cancellation", c);
  }
  return cert;
}

KernelCertificate certifyLocalizerEta(const Localizer& eta,
                                      const CertifyOptions& opt) {
  if (eta.kind != Localizer::Kind::Eta)
    throw std::invalid_argument("certifyLocalizerEta: localizer is not eta kind");
  KernelCertificate cert;
  cert.subject = eta.name.empty() ? "eta" : eta.name;
  cert.seed = opt.seed;
  cert.budget = opt.budget;
  const int n = eta.dim;
  const double dn = double(n);

  {  // bounded: sup |eta| over log-uniform radii.
    Rng rng(subSeed(opt.seed, 11));
    SupTracker t;
    for (long i = 0; i < opt.budget; ++i) {
      double rho = rng.logUniform(opt.radiusMin, opt.radiusMax);
      Point dir = randomDirection(rng, n);
      Point x{rho * dir[0], rho * dir[1]};
      t.feed(std::abs(eta.evaluator(x)), x, i < opt.budget / 2);
    }
    ConditionCheck c = t.toCheck(opt, n, "argmax at");
    // A bounded estimate is stable by construction once finite; the sup of
    // a bounded function cannot drift between budget halves beyond the
    // stability factor unless the function is unbounded.
    cert.add("bounded", c);
  }

  {  // origin value: eta(0) = 1 expected.
    double v = eta.evaluator(Point{0.0, 0.0});
    ConditionCheck c;
    c.observed = v;
    c.reference = 1.0;
    c.passed = std::isfinite(v) && std::abs(v - 1.0) <= 1e-6;
    cert.add("origin_value", c);
  }

  {  // Lipschitz ratio sup |eta(x-y)-eta(x)| (|x|/|y|)^delta, 2|y| <= |x|.
    Rng rng(subSeed(opt.seed, 12));
    SupTracker t;
    for (long i = 0; i < opt.budget; ++i) {
      double rho = rng.logUniform(opt.radiusMin, opt.radiusMax);
      Point dxp = randomDirection(rng, n);
      Point x{rho * dxp[0], rho * dxp[1]};
      double ry = rng.logUniform(rho * 0x1p-10, rho * 0.5);
      Point dyp = randomDirection(rng, n);
      double diff =
          eta.evaluator(Point{x[0] - ry * dyp[0], x[1] - ry * dyp[1]}) -
          eta.evaluator(x);
      t.feed(std::abs(diff) * std::pow(rho / ry, eta.delta), x,
             i < opt.budget / 2);
    }
    cert.add("lipschitz_ratio", t.toCheck(opt, n, "argmax near"));
  }

  auto shellSeries = [&](bool near) {
    std::vector<double> inc;
    for (int m = 0; m < 24; ++m) {
      double r0 = near ? std::ldexp(1.0, -m - 1) : std::ldexp(1.0, m);
      double r1 = 2.0 * r0;
      auto fn = [&](const Point& x) {
        double rho = norm2(x);
        double w = std::pow(rho, -dn);
        double v = eta.evaluator(x);
        return near ? std::abs(v - 1.0) * w : std::abs(v) * w;
      };
      inc.push_back(shellIntegral(fn, n, r0, r1));
    }
    return inc;
  };

  for (bool near : {true, false}) {
    std::vector<double> inc = shellSeries(near);
    double total = sumAbs(inc);
    ConditionCheck c;
    c.observed = total;
    c.reference = total - (inc.empty() ? 0.0 : std::abs(inc.back()));
    double floor = 1e-14 * (1.0 + total);
    c.passed = geometricDecayOk(inc, 0.9, floor);
    if (!c.passed)
      c.note = near ? "partial sums of |eta-1| |x|^{-n} near 0 do not converge"
                    : "partial sums of |eta| |x|^{-n} at infinity do not converge";
    cert.add(near ? "integral_near" : "integral_far", c);
  }
  return cert;
}

KernelCertificate certifyLocalizerPsi(const Localizer& psi,
                                      const CertifyOptions& opt) {
  if (psi.kind != Localizer::Kind::Psi)
    throw std::invalid_argument("certifyLocalizerPsi: localizer is not psi kind");
  KernelCertificate cert;
  cert.subject = psi.name.empty() ? "psi" : psi.name;
  cert.seed = opt.seed;
  cert.budget = opt.budget;
  const int n = psi.dim;
  const double dn = double(n);
  const double delta = psi.delta;
  const int jLo = -26, jHi = 16;  // dyadic shell range for radial profiles

  // Per-shell signed mass, absolute mass, |y|^delta moment, square mass.
  std::vector<double> signedMass, absMass, momMass, sqMass;
  for (int j = jLo; j < jHi; ++j) {
    double r0 = std::ldexp(1.0, j), r1 = std::ldexp(1.0, j + 1);
    signedMass.push_back(shellIntegral(psi.evaluator, n, r0, r1));
    absMass.push_back(shellIntegral(
        [&](const Point& x) { return std::abs(psi.evaluator(x)); }, n, r0, r1));
    momMass.push_back(shellIntegral(
        [&](const Point& x) {
          return std::pow(norm2(x), delta) * std::abs(psi.evaluator(x));
        },
        n, r0, r1));
    sqMass.push_back(shellIntegral(
        [&](const Point& x) {
          double v = psi.evaluator(x);
          return v * v;
        },
        n, r0, r1));
  }

  {  // unit integral
    double total = 0.0;
    for (double v : signedMass) total += v;
    ConditionCheck c;
    c.observed = total;
    c.reference = 1.0;
    c.passed = std::isfinite(total) && std::abs(total - 1.0) <= 1e-6;
    if (!c.passed) c.note = "integral differs from 1";
    cert.add("unit_integral", c);
  }

  auto tailCheck = [&](const char* name, const std::vector<double>& inc,
                       bool sqrtTotal) {
    double total = sumAbs(inc);
    ConditionCheck c;
    c.observed = sqrtTotal ? std::sqrt(total) : total;
    double floor = 1e-14 * (1.0 + total);
    c.passed = std::isfinite(total) && geometricDecayOk(inc, 0.9, floor);
    if (!c.passed) c.note = "shell increments do not converge";
    cert.add(name, c);
  };
  tailCheck("l1_finite", absMass, false);
  tailCheck("l2_finite", sqMass, true);

  {  // decay integral: |x| >= 1 of the tail/moment majorant.
    auto tailAbsFrom = [&](double s) {
      int k = std::max(jLo, int(std::floor(std::log2(s))));
      double acc = 0.0;
      for (int j = k; j < jHi; ++j) acc += absMass[std::size_t(j - jLo)];
      return acc;
    };
    auto momUpTo = [&](double s) {
      int k = std::min(jHi - 1, int(std::floor(std::log2(s))));
      double acc = 0.0;
      for (int j = jLo; j <= k; ++j) acc += momMass[std::size_t(j - jLo)];
      return acc;
    };
    std::vector<double> inc;
    for (int m = 0; m < 16; ++m) {
      auto fn = [&](const Point& x) {
        double rho = norm2(x);
        return std::pow(rho, -dn) * tailAbsFrom(rho / 2.0) +
               std::pow(rho, -dn - delta) * momUpTo(rho / 2.0);
      };
      inc.push_back(
          shellIntegral(fn, n, std::ldexp(1.0, m), std::ldexp(1.0, m + 1)));
    }
    double total = sumAbs(inc);
    ConditionCheck c;
    c.observed = total;
    c.passed = std::isfinite(total) &&
               geometricDecayOk(inc, 0.9, 1e-14 * (1.0 + total));
    if (!c.passed) c.note = "decay-condition partial sums do not converge";
    cert.add("decay_integral", c);
  }

  {  // smoothness integral: the double integral shrinks shell by shell.
    std::vector<double> inc;
    for (int m = 0; m < 12; ++m) {
      auto outer = [&](const Point& x) {
        double rho = norm2(x);
        double psiAtX = psi.evaluator(x);
        auto innerFn = [&](const Point& y) {
          double ry = norm2(y);
          return std::abs(psi.evaluator(Point{x[0] - y[0], x[1] - y[1]}) -
                          psiAtX) / std::pow(ry, dn);
        };
        double top = rho / 2.0;
        return shellIntegral(innerFn, n, top * 0x1p-20, top);
      };
      inc.push_back(
          shellIntegral(outer, n, std::ldexp(1.0, m), std::ldexp(1.0, m + 1)));
    }
    double total = sumAbs(inc);
    ConditionCheck c;
    c.observed = total;
    c.passed = std::isfinite(total) &&
               geometricDecayOk(inc, 0.9, 1e-14 * (1.0 + total));
    if (!c.passed) c.note = "smoothness-condition partial sums do not converge";
    cert.add("smoothness_integral", c);
  }
  return cert;
}

ConvolutionKernel productKernel(const ConvolutionKernel& k, const Localizer& eta) {
  if (eta.kind != Localizer::Kind::Eta)
    throw std::invalid_argument("productKernel: localizer is not eta kind");
  if (k.dim != eta.dim)
    throw std::invalid_argument("productKernel: dimension mismatch");
  ConvolutionKernel out = k;
  out.name = k.name + "*" + eta.name;
  out.delta = std::min(k.delta, eta.delta);
  // Built-in localizers are radial, so oddness survives the product.
  auto ke = k.evaluator;
  auto ee = eta.evaluator;
  out.evaluator = [ke, ee](const Point& x) { return ke(x) * ee(x); };
  return out;
}

ConvolutionKernel hilbertKernel() {
  ConvolutionKernel k;
  k.name = "hilbert";
  k.dim = 1;
  k.delta = 1.0;
  k.sizeConstant = 1.0 / M_PI;
  k.cancellationBound = 0.0;
  k.oddSymmetric = true;
  k.evaluator = [](const Point& x) { return 1.0 / (M_PI * x[0]); };
  return k;
}

ConvolutionKernel rieszKernel(int component, int dim) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("rieszKernel: dim must be 1 or 2");
  if (component < 1 || component > dim)
    throw std::invalid_argument("rieszKernel: bad component");
  ConvolutionKernel k;
  k.name = "riesz" + std::to_string(component);
  k.dim = dim;
  k.delta = 1.0;
  // c_n = Gamma((n+1)/2) / pi^{(n+1)/2}: 1/pi in dim 1, 1/(2 pi) in dim 2.
  const double c = dim == 1 ? 1.0 / M_PI : 1.0 / (2.0 * M_PI);
  k.sizeConstant = c;
  k.oddSymmetric = true;
  const int j = component - 1;
  k.evaluator = [c, dim, j](const Point& x) {
    double rho = dim == 1 ? std::abs(x[0]) : norm2(x);
    return c * x[std::size_t(j)] / std::pow(rho, double(dim) + 1.0);
  };
  return k;
}

ConvolutionKernel powerLawKernel(int dim) {
  ConvolutionKernel k;
  k.name = "powlaw";
  k.dim = dim;
  k.delta = 1.0;
  k.sizeConstant = 1.0;
  k.oddSymmetric = false;
  k.evaluator = [dim](const Point& x) {
    double rho = dim == 1 ? std::abs(x[0]) : norm2(x);
    return std::pow(rho, -double(dim));
  };
  return k;
}

Localizer standardBumpEta(int dim) {
  Localizer l;
  l.name = "bump";
  l.kind = Localizer::Kind::Eta;
  l.dim = dim;
  l.delta = 1.0;
  l.evaluator = [dim](const Point& x) {
    double rho = dim == 1 ? std::abs(x[0]) : norm2(x);
    if (rho <= 1.0) return 1.0;
    if (rho >= 2.0) return 0.0;
    double c = std::cos(0.5 * M_PI * (rho - 1.0));
    return c * c;
  };
  return l;
}

Localizer constantOneEta(int dim) {
  Localizer l;
  l.name = "one";
  l.kind = Localizer::Kind::Eta;
  l.dim = dim;
  l.delta = 1.0;
  l.evaluator = [](const Point&) { return 1.0; };
  return l;
}

Localizer constantZeroEta(int dim) {
  Localizer l;
  l.name = "zero";
  l.kind = Localizer::Kind::Eta;
  l.dim = dim;
  l.delta = 1.0;
  l.evaluator = [](const Point&) { return 0.0; };
  return l;
}

Localizer gaussianPsi(int dim, double sigma, double scale) {
  Localizer l;
  l.name = scale == 1.0 ? "gauss" : "gauss-scaled";
  l.kind = Localizer::Kind::Psi;
  l.dim = dim;
  l.delta = 1.0;
  const double norm =
      scale / std::pow(2.0 * M_PI * sigma * sigma, 0.5 * double(dim));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  l.evaluator = [dim, norm, inv](const Point& x) {
    double r2 = dim == 1 ? x[0] * x[0] : x[0] * x[0] + x[1] * x[1];
    return norm * std::exp(-r2 * inv);
  };
  return l;
}

}  // namespace localsieve
