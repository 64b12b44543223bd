#include "ermu/activation.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ermu;

TEST_CASE("tanh has zero Gaussian mean") {
  const Activation a = Activation::tanh_rf();
  CHECK(std::abs(oracle::expect([&](double t) { return a.value(t); }, 100)) <= 1e-10);
}

TEST_CASE("shifted sine has E sigma'(G) = E G sigma'(G) = 0") {
  const Activation a = Activation::shifted_sine_nt();
  CHECK(std::abs(oracle::expect([&](double t) { return a.derivative(t); }, 100)) <= 1e-10);
  CHECK(std::abs(oracle::expect([&](double t) { return t * a.derivative(t); }, 100)) <= 1e-10);
  CHECK(a.value(1.3) == doctest::Approx(std::sin(1.3) - std::exp(-0.5) * 1.3));
}

TEST_CASE("derivatives agree with central differences") {
  for (const Activation& a : {Activation::tanh_rf(), Activation::shifted_sine_nt(),
                              Activation::custom_hermite({0.0, 0.7, 0.3, -0.2})}) {
    CAPTURE(a.name());
    for (double t : {-2.5, -0.7, 0.0, 0.4, 3.0}) {
      const double h = 1e-6;
      const double fd = (a.value(t + h) - a.value(t - h)) / (2 * h);
      CHECK(a.derivative(t) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("custom hermite evaluates the orthonormal expansion") {
  const Activation a = Activation::custom_hermite({0.0, 1.0, 0.5, 0.25});
  for (double t : {-1.2, 0.3, 2.0}) {
    const double expect = oracle::hermite_explicit(1, t) + 0.5 * oracle::hermite_explicit(2, t) +
                          0.25 * oracle::hermite_explicit(3, t);
    CHECK(a.value(t) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(Activation::custom_hermite({}), InvalidArgument);
}

TEST_CASE("matrix application is elementwise") {
  const Activation a = Activation::tanh_rf();
  Matrix m(2, 2);
  m << 0.1, -0.2, 1.5, 3.0;
  Matrix v = m, d = m;
  a.apply(v);
  a.apply_derivative(d);
  for (Index i = 0; i < 4; ++i) {
    CHECK(v(i) == doctest::Approx(std::tanh(m(i))));
    CHECK(d(i) == doctest::Approx(1.0 - std::tanh(m(i)) * std::tanh(m(i))));
  }
}

TEST_CASE("names round-trip") {
  for (auto k : {ActivationKind::TanhRf, ActivationKind::ShiftedSineNt, ActivationKind::CustomHermite})
    CHECK(parse_activation_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_activation_kind("relu"), InvalidArgument);
}
