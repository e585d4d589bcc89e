#include "localsieve/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "localsieve/runtime.hpp"

namespace localsieve {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

long long parseInt(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty())
    throw std::invalid_argument("config key '" + key +
                                "' expects an integer, got '" + value + "'");
  return out;
}

double parseDouble(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty())
    throw std::invalid_argument("config key '" + key +
                                "' expects a number, got '" + value + "'");
  return out;
}

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string formatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::fromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return fromString(buf.str());
}

ExperimentConfig ExperimentConfig::fromString(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineNo) +
                                  " is not key=value: '" + line + "'");
    try {
      cfg.applyKeyValue(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineNo) +
                                  ": " + e.what());
    }
  }
  return cfg;
}

void ExperimentConfig::applyKeyValue(const std::string& key,
                                     const std::string& value) {
  if (key == "check") {
    check = value;
  } else if (key == "kernel") {
    kernel = value;
  } else if (key == "eta") {
    eta = value;
  } else if (key == "psi") {
    psi = value;
  } else if (key == "b") {
    bName = value;
  } else if (key == "dim") {
    dim = static_cast<int>(parseInt(key, value));
    if (dim != 1 && dim != 2)
      throw std::invalid_argument("config key 'dim' must be 1 or 2");
  } else if (key == "N") {
    gridN = static_cast<int>(parseInt(key, value));
  } else if (key == "L") {
    halfWidth = parseDouble(key, value);
  } else if (key == "refineN") {
    refineN = static_cast<int>(parseInt(key, value));
  } else if (key == "rMinExp") {
    rMinExp = static_cast<int>(parseInt(key, value));
  } else if (key == "rMaxExp") {
    rMaxExp = static_cast<int>(parseInt(key, value));
  } else if (key == "trials") {
    trials = static_cast<int>(parseInt(key, value));
    if (trials < 0) throw std::invalid_argument("config key 'trials' must be >= 0");
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(parseInt(key, value));
  } else if (key == "mu") {
    mu = parseDouble(key, value);
  } else if (key == "force") {
    force = parseInt(key, value) != 0;
  } else if (key == "criterion") {
    criterion = static_cast<int>(parseInt(key, value));
    if (criterion < 0 || criterion > 12)
      throw std::invalid_argument("config key 'criterion' must be in 0..12");
  } else if (key == "out") {
    outDir = value;
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

std::string ExperimentReport::csvString() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += columns[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::logic_error("report row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += formatDouble(row[c]);
    }
    out += '\n';
  }
  return out;
}

void ExperimentReport::writeCsv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path);
  out << csvString();
}

ExperimentReport ExperimentReport::loadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  ExperimentReport rep;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("CSV file has no header: " + path);
  rep.columns = splitCsvLine(line);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = splitCsvLine(line);
    if (cells.size() != rep.columns.size())
      throw std::runtime_error("CSV row width mismatch in " + path);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) row.push_back(parseDouble("csv", cell));
    rep.rows.push_back(std::move(row));
  }
  rep.summary = summarizeReport(rep);
  return rep;
}

double ExperimentReport::cell(std::size_t row, const std::string& column) const {
  auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end())
    throw std::invalid_argument("unknown report column '" + column + "'");
  return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
}

std::vector<double> ExperimentReport::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end())
    throw std::invalid_argument("unknown report column '" + name + "'");
  std::size_t idx = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.at(idx));
  return out;
}

nlohmann::ordered_json summarizeReport(const ExperimentReport& rep) {
  nlohmann::ordered_json stats = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < rep.columns.size(); ++c) {
    if (rep.rows.empty()) continue;
    std::vector<double> vals;
    vals.reserve(rep.rows.size());
    for (const auto& row : rep.rows) vals.push_back(row.at(c));
    std::sort(vals.begin(), vals.end());
    double median = vals.size() % 2
                        ? vals[vals.size() / 2]
                        : 0.5 * (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]);
    stats[rep.columns[c]] = {
        {"min", vals.front()}, {"max", vals.back()}, {"median", median}};
  }
  nlohmann::ordered_json out;
  out["rows"] = rep.rows.size();
  out["stats"] = stats;
  return out;
}

void emitPlotData(const ExperimentReport& rep, const std::string& dir,
                  const std::string& prefix) {
  std::filesystem::create_directories(dir);
  auto has = [&](const std::string& name) {
    return std::find(rep.columns.begin(), rep.columns.end(), name) !=
           rep.columns.end();
  };

  {
    std::ofstream out(dir + "/" + prefix + "-ratio-vs-radius.csv",
                      std::ios::binary);
    out << "r,ratio\n";
    if (has("r") && has("ratio")) {
      std::vector<std::pair<double, double>> pts;
      auto rs = rep.column("r");
      auto ratios = rep.column("ratio");
      for (std::size_t i = 0; i < rs.size(); ++i)
        pts.emplace_back(rs[i], ratios[i]);
      std::stable_sort(pts.begin(), pts.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [r, ratio] : pts)
        out << formatDouble(r) << ',' << formatDouble(ratio) << '\n';
    }
  }

  {
    std::ofstream out(dir + "/" + prefix + "-ratio-vs-N.csv", std::ios::binary);
    out << "N,maxRatio\n";
    if (has("N") && has("ratio")) {
      std::vector<std::pair<double, double>> best;  // sorted by N
      auto ns = rep.column("N");
      auto ratios = rep.column("ratio");
      for (std::size_t i = 0; i < ns.size(); ++i) {
        auto it = std::find_if(best.begin(), best.end(),
                               [&](const auto& p) { return p.first == ns[i]; });
        if (it == best.end())
          best.emplace_back(ns[i], ratios[i]);
        else
          it->second = std::max(it->second, ratios[i]);
      }
      std::sort(best.begin(), best.end());
      for (const auto& [n, ratio] : best)
        out << formatDouble(n) << ',' << formatDouble(ratio) << '\n';
    }
  }
}

double spearmanCorrelation(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("rank correlation needs equal-length inputs");
  std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("rank correlation needs >= 2 points");

  auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };

  auto rx = ranks(x), ry = ranks(y);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;  // a constant sequence: no trend
  return sxy / std::sqrt(sxx * syy);
}

ConvolutionKernel kernelByName(const std::string& name, int dim) {
  if (name == "hilbert") {
    if (dim != 1)
      throw std::invalid_argument("kernel 'hilbert' is one-dimensional");
    return hilbertKernel();
  }
  if (name == "riesz1") return rieszKernel(1, dim);
  if (name == "riesz2") return rieszKernel(2, dim);
  if (name == "powlaw") return powerLawKernel(dim);
  throw std::invalid_argument(
      "unknown kernel '" + name + "' (hilbert, riesz1, riesz2, powlaw)");
}

Localizer etaByName(const std::string& name, int dim) {
  if (name == "bump") return standardBumpEta(dim);
  if (name == "one") return constantOneEta(dim);
  if (name == "zero") return constantZeroEta(dim);
  throw std::invalid_argument("unknown eta localizer '" + name +
                              "' (bump, one, zero)");
}

Localizer psiByName(const std::string& name, int dim) {
  if (name == "gauss") return gaussianPsi(dim);
  if (name == "gauss2x") return gaussianPsi(dim, 2.0);
  if (name == "zero") return gaussianPsi(dim, 1.0, 0.0);
  throw std::invalid_argument("unknown psi localizer '" + name +
                              "' (gauss, gauss2x, zero)");
}

GridFunction bFunctionByName(const std::string& name, const Grid& g) {
  if (name.size() > 4 && name.compare(name.size() - 4, 4, ".gfn") == 0) {
    GridFunction f = readGfn(name);
    if (!(f.grid == g))
      throw std::invalid_argument(
          "symbol file " + name + " is sampled on dim=" +
          std::to_string(f.grid.dim) + " N=" +
          std::to_string(f.grid.pointsPerAxis) + " L=" +
          std::to_string(f.grid.halfWidth) + ", which does not match the run");
    return f;
  }
  if (name == "cliplog") {
    // Clipped logarithm: the classic unbounded bmo witness. The clip level
    // is part of the function, so every resolution samples the same b.
    return GridFunction::sample(g, [](const Point& x) {
      return std::min(6.0, -std::log(norm2(x)));
    });
  }
  if (name == "lipbump") {
    // Lipschitz cone with compact support.
    return GridFunction::sample(
        g, [](const Point& x) { return std::max(0.0, 1.0 - norm2(x)); });
  }
  if (name == "randosc") {
    // Bounded random trigonometric sum; internal seeding is fixed so the
    // name denotes one function, independent of grid and caller seed.
    struct Mode {
      double amp, omega, phase, d0, d1;
    };
    Rng rng(0xB0BACAFEULL);
    std::vector<Mode> modes;
    for (int j = 0; j < 12; ++j) {
      Mode m;
      m.amp = 0.25 * rng.symmetric();
      m.omega = rng.logUniform(0.5, 24.0);
      m.phase = rng.uniform(0.0, 6.283185307179586);
      double angle = rng.uniform(0.0, 6.283185307179586);
      m.d0 = std::cos(angle);
      m.d1 = std::sin(angle);
      modes.push_back(m);
    }
    return GridFunction::sample(g, [modes, dim = g.dim](const Point& x) {
      double s = 0.0;
      for (const auto& m : modes) {
        double t = dim == 1 ? x[0] : m.d0 * x[0] + m.d1 * x[1];
        s += m.amp * std::cos(m.omega * t + m.phase);
      }
      return s;
    });
  }
  if (name == "constant") {
    return GridFunction::sample(g, [](const Point&) { return 1.0; });
  }
  throw std::invalid_argument("unknown b function '" + name +
                              "' (cliplog, lipbump, randosc, constant)");
}

}  // namespace localsieve
