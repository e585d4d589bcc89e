#include <cmath>

#include "doctest.h"
#include "localsieve/kernels.hpp"

using namespace localsieve;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("hilbert kernel evaluates to its closed form") {
  ConvolutionKernel k = hilbertKernel();
  REQUIRE(k.dim == 1);
  REQUIRE(k.evaluator({2.0, 0.0}) == doctest::Approx(1.0 / (2.0 * kPi)));
  REQUIRE(k.evaluator({-0.5, 0.0}) == doctest::Approx(-2.0 / kPi));
}

TEST_CASE("shell integrals against closed forms") {
  // 1-d: int_{1<=|x|<=2} |x|^{-1} dx = 2 log 2.
  double one = shellIntegral(
      [](const Point& x) { return 1.0 / std::abs(x[0]); }, 1, 1.0, 2.0);
  REQUIRE(one == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-8));
  // 2-d: int_{1<=|x|<=2} |x|^{-2} dx = 2 pi log 2.
  double two = shellIntegral(
      [](const Point& x) {
        return 1.0 / (x[0] * x[0] + x[1] * x[1]);
      },
      2, 1.0, 2.0);
  REQUIRE(two == doctest::Approx(2.0 * kPi * std::log(2.0)).epsilon(1e-6));
  // Odd integrands cancel exactly through antipodal pairing.
  double odd = shellIntegral(
      [](const Point& x) { return x[0] / std::abs(x[0] * x[0] * x[0]); }, 1,
      0.5, 4.0);
  REQUIRE(odd == 0.0);
}

TEST_CASE("odd singular kernels certify with tiny observed cancellation") {
  KernelCertificate hil = certifyDeltaKernel(hilbertKernel());
  REQUIRE(hil.allPassed());
  REQUIRE(hil.observedCancellation() < 1e-12);

  KernelCertificate rz = certifyDeltaKernel(rieszKernel(1, 2));
  REQUIRE(rz.allPassed());
  REQUIRE(rz.observedCancellation() < 1e-12);
  KernelCertificate rz2 = certifyDeltaKernel(rieszKernel(2, 2));
  REQUIRE(rz2.allPassed());
}

TEST_CASE("certified constants are stable under budget doubling") {
  CertifyOptions half;
  half.budget = 50000;
  CertifyOptions full;
  full.budget = 100000;
  KernelCertificate a = certifyDeltaKernel(rieszKernel(1, 2), half);
  KernelCertificate b = certifyDeltaKernel(rieszKernel(1, 2), full);
  REQUIRE(a.allPassed());
  REQUIRE(b.allPassed());
  REQUIRE(b.observedSizeConstant() <= 1.5 * a.observedSizeConstant());
  REQUIRE(a.observedSizeConstant() <= 1.5 * b.observedSizeConstant());
}

TEST_CASE("the pure power law fails cancellation but not size") {
  KernelCertificate cert = certifyDeltaKernel(powerLawKernel(1));
  REQUIRE_FALSE(cert.allPassed());
  REQUIRE(cert.at("size").passed);
  REQUIRE_FALSE(cert.at("cancellation").passed);
  REQUIRE(cert.observedCancellation() > 0.1);
}

TEST_CASE("window products keep the smoothness exponent") {
  ConvolutionKernel prod = productKernel(hilbertKernel(), standardBumpEta(1));
  REQUIRE(prod.delta == 1.0);
  KernelCertificate cert = certifyDeltaKernel(prod);
  REQUIRE(cert.allPassed());
  // The window kills the far field entirely.
  REQUIRE(prod.evaluator({3.0, 0.0}) == 0.0);
}

TEST_CASE("localizer certificates") {
  REQUIRE(certifyLocalizerEta(standardBumpEta(1)).allPassed());
  REQUIRE(certifyLocalizerEta(standardBumpEta(2)).allPassed());
  REQUIRE(certifyLocalizerPsi(gaussianPsi(1)).allPassed());
  REQUIRE(certifyLocalizerPsi(gaussianPsi(2)).allPassed());
  REQUIRE(certifyLocalizerPsi(gaussianPsi(1, 2.0)).allPassed());

  // A window that never decays is not a localizer: the far-field Dini
  // integral of |eta| |x|^{-n} diverges while the near-origin one is exact.
  KernelCertificate one = certifyLocalizerEta(constantOneEta(1));
  REQUIRE_FALSE(one.allPassed());
  REQUIRE(one.at("bounded").passed);
  REQUIRE(one.at("origin_value").passed);
  REQUIRE(one.at("integral_near").passed);
  REQUIRE_FALSE(one.at("integral_far").passed);
}

TEST_CASE("certificate serialization is ordered and complete") {
  KernelCertificate cert = certifyDeltaKernel(hilbertKernel());
  std::string js = cert.toJson();
  REQUIRE(js.find("\"size\"") != std::string::npos);
  REQUIRE(js.find("\"smoothness\"") != std::string::npos);
  REQUIRE(js.find("\"cancellation\"") != std::string::npos);
  REQUIRE(js.find("size") < js.find("smoothness"));
  REQUIRE(js.find("smoothness") < js.find("cancellation"));
  REQUIRE_THROWS_AS(cert.at("no-such-condition"), std::invalid_argument);
}
