#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "equipart/gamma.hpp"

using namespace equipart;

TEST_CASE("characteristic exponent at reference points") {
  CHECK(gamma_exponent(3, 12.0) == Catch::Approx(3.0).epsilon(1e-14));
  CHECK(gamma_exponent(3, 15.0 / 4.0) == Catch::Approx(1.5).epsilon(1e-14));
  CHECK(gamma_exponent(3, 0.0) == 0.0);
  CHECK(gamma_exponent(2, 0.0) == 0.0);
  for (int d = 1; d <= 6; ++d)
    CHECK(gamma_exponent(2, double(d) * d) == Catch::Approx(d).epsilon(1e-14));
}

TEST_CASE("negative input is rejected") {
  CHECK_THROWS_AS(gamma_exponent(3, -1e-9), NegativeInput);
  CHECK_THROWS_AS(gamma_exponent_derivative(2, -0.5), NegativeInput);
}

TEST_CASE("inverse relation gamma (gamma + N - 2) = t") {
  for (int N : {2, 3})
    for (double t = 0.0; t <= 400.0; t += 0.37) {
      const double g = gamma_exponent(N, t);
      CHECK(g * (g + N - 2) == Catch::Approx(t).margin(1e-12 * std::max(1.0, t)));
      CHECK(eigenvalue_of_exponent(N, g) == Catch::Approx(t).margin(1e-12 * std::max(1.0, t)));
    }
}

TEST_CASE("monotone increasing and concave on a grid") {
  for (int N : {2, 3}) {
    double prev = -1.0, prev_diff = 1e300;
    for (double t = 0.0; t <= 100.0; t += 0.25) {
      const double g = gamma_exponent(N, t);
      CHECK(g > prev);
      if (prev >= 0.0) {
        const double diff = g - prev;
        CHECK(diff <= prev_diff + 1e-12);
        prev_diff = diff;
      }
      prev = g;
    }
  }
}

TEST_CASE("derivative matches central differences") {
  const double h = 1e-6;
  for (int N : {2, 3})
    for (double t : {0.5, 3.0, 12.0, 77.0}) {
      const double fd = (gamma_exponent(N, t + h) - gamma_exponent(N, t - h)) / (2 * h);
      CHECK(gamma_exponent_derivative(N, t) == Catch::Approx(fd).epsilon(1e-7));
    }
}
