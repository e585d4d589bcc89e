#pragma once

#include <vector>

#include "localsieve/grid.hpp"
#include "localsieve/kernels.hpp"

namespace localsieve {

// Truncated principal-value sum: (T_eps f)(x_i) =
// h^dim sum_{|x_i - x_j| >= eps} K(x_i - x_j) f(x_j), zero extension
// outside the box. eps <= 0 selects the default eps = h; eps < h/2 throws.
GridFunction applyPV(const ConvolutionKernel& k, const GridFunction& f,
                     double eps = 0.0);

struct TruncatedOperator {
  ConvolutionKernel kernel;
  double epsilon = 0.0;
  GridFunction apply(const GridFunction& f) const {
    return applyPV(kernel, f, epsilon);
  }
};

// Multiplicative localization: principal-value sum of K(x) eta(x).
GridFunction applyLocalized(const ConvolutionKernel& k, const Localizer& eta,
                            const GridFunction& f, double eps = 0.0);

// Discrete convolution h^dim sum_j psi(x_i - x_j) f(x_j).
GridFunction convolveLocalizer(const Localizer& psi, const GridFunction& f);

// Convolution localization: T^psi f = T(f - psi * f), spatial sums.
// Requires the padding contract on f.
GridFunction applyFourierLocalized(const ConvolutionKernel& k,
                                   const Localizer& psi, const GridFunction& f,
                                   double eps = 0.0);

struct ErrorKernelResult {
  GridFunction kStar;  // pointwise sup over the truncation list
  double l1Norm = 0.0;
  // (radius, mass of kStar over |x| <= radius), dyadic radii.
  std::vector<std::pair<double, double>> shellProfile;
  std::vector<double> epsList;

  // Increments of the shell profile between consecutive radii.
  std::vector<double> shellIncrements() const;
  // Last `window` increments each fall by the factor or below the floor.
  bool tailDecays(double factor = 0.9, int window = 4) const;
};

// Discrete error kernel K_*(x) = max_eps |(K eta)_eps(x) - K_eps(x) +
// (K_eps * psi)(x)| on the grid. The mollified term integrates z over the
// doubled box so the convolution reaches past the boundary. Empty epsList
// selects {h, 2h, 4h, ..., <= 1}.
ErrorKernelResult errorKernelStar(const ConvolutionKernel& k,
                                  const Localizer& eta, const Localizer& psi,
                                  const Grid& grid,
                                  std::vector<double> epsList = {});

// Frequency-side local Riesz transform: multiplier
// (1 - phi(xi)) i xi_j / |xi| with m(0) = 0. phi must equal 1 at the
// lowest nonzero discrete frequencies (checked) and f must obey the
// padding contract.
GridFunction localRieszGoldberg(int component,
                                const std::function<double(const Point&)>& phi,
                                const GridFunction& f);

// Adjoint truncated sum: kernel reflected through the origin.
GridFunction adjointApply(const ConvolutionKernel& k, const GridFunction& g,
                          double eps = 0.0);

}  // namespace localsieve
