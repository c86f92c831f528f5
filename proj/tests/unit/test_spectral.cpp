#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <thread>

#include "bgpr/errors.hpp"
#include "bgpr/spectral.hpp"
#include "oracles.hpp"

using namespace bgpr;
using cd = std::complex<double>;

namespace {

void check_spectrum(const Spectrum& s, std::vector<cd> expected, double tol = 1e-12) {
  REQUIRE(s.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(std::abs(s.values[i] - expected[i]) <= tol);
}

double norm_sq(const RealArray& z) {
  double a = 0;
  for (double v : z.values) a += v * v;
  return a;
}

}  // namespace

TEST_CASE("forward DFT examples") {
  check_spectrum(dft_forward(RealArray(Shape(2), {1, 0})), {1, 1});
  check_spectrum(dft_forward(RealArray(Shape(2), {1, 1})), {2, 0});
  check_spectrum(dft_forward(RealArray(Shape(2), {3, 1})), {4, 2});
}

TEST_CASE("forward DFT sign convention matches the definition") {
  // z = [0, 1, 0, 0] -> e^{-2 pi j i / 4}: [1, -j, -1, j]
  check_spectrum(dft_forward(RealArray(Shape(4), {0, 1, 0, 0})), {1, cd(0, -1), -1, cd(0, 1)});
}

TEST_CASE("inverse DFT examples") {
  const ComplexArray a = dft_inverse(Spectrum(Shape(2), {1, 1}));
  CHECK(std::abs(a.values[0] - cd(1)) < 1e-15);
  CHECK(std::abs(a.values[1]) < 1e-15);
  const ComplexArray b = dft_inverse(Spectrum(Shape(2), {2, 0}));
  CHECK(std::abs(b.values[0] - cd(1)) < 1e-15);
  CHECK(std::abs(b.values[1] - cd(1)) < 1e-15);
}

TEST_CASE("FFT agrees with the naive DFT oracle (1-D and 2-D, odd and even sizes)") {
  std::mt19937_64 gen(3);
  for (auto shape : {Shape(1), Shape(7), Shape(16), Shape(33), Shape(5, 3), Shape(8, 6), Shape(9, 11)}) {
    const RealArray z = oracle::random_array(shape, gen);
    const auto ref = oracle::naive_dft_real(z);
    const Spectrum s = dft_forward(z);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(s.values[i] - ref[i]) < 1e-9);
  }
}

TEST_CASE("zero padding to a larger measurement grid") {
  const RealArray z(Shape(2), {3, 1});
  const Spectrum s = dft_forward(z, Shape(4));
  const auto ref = oracle::naive_dft_real(RealArray(Shape(4), {3, 1, 0, 0}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(s.values[i] - ref[i]) < 1e-12);
  CHECK_THROWS_AS(dft_forward(RealArray(Shape(5)), Shape(4)), ShapeError);
  CHECK_THROWS_AS(dft_forward(RealArray(Shape(2, 2)), Shape(4)), ShapeError);
}

TEST_CASE("round trip on 100 random arrays") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 100; ++t) {
    const Shape shape = t % 2 ? Shape(1 + t % 13, 1 + t % 7) : Shape(1 + t);
    const RealArray z = oracle::random_array(shape, gen);
    const ComplexArray back = dft_inverse(dft_forward(z));
    double err = 0, nrm = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      err += std::norm(back.values[i] - z.values[i]);
      nrm += z.values[i] * z.values[i];
    }
    CHECK(std::sqrt(err / nrm) < 1e-12);
  }
}

TEST_CASE("intensity examples") {
  CHECK(intensity(RealArray(Shape(2), {1, 0})).values().values == std::vector<double>{1, 1});
  const auto b = intensity(RealArray(Shape(2), {1, 1}));
  CHECK(b.values().values[0] == doctest::Approx(4.0));
  CHECK(std::abs(b.values().values[1]) < 1e-15);
  CHECK(b.conj_symmetric());
  const auto zero = intensity(RealArray(Shape(3, 4)));
  for (double v : zero.values().values) CHECK(v == 0.0);
}

TEST_CASE("intensity matches |naive DFT|^2") {
  std::mt19937_64 gen(8);
  for (auto shape : {Shape(10), Shape(6, 9)}) {
    const RealArray z = oracle::random_array(shape, gen);
    const auto ref = oracle::naive_intensity(z);
    const auto b = intensity(z);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(b.values().values[i] == doctest::Approx(ref[i]).epsilon(1e-10));
  }
}

TEST_CASE("autocorrelation examples") {
  CHECK(autocorrelation_direct(RealArray(Shape(2), {1, 2})).values == std::vector<double>{5, 4});
  const RealArray r = autocorrelation_direct(RealArray(Shape(5), {3, 0, 0, 0, 0}));
  CHECK(r.values == std::vector<double>{9, 0, 0, 0, 0});

  const RealArray fi = autocorrelation_from_intensity(IntensityMeasurements(RealArray(Shape(2), {9, 1}), true));
  CHECK(fi.values[0] == doctest::Approx(5.0));
  CHECK(fi.values[1] == doctest::Approx(4.0));
  for (double v : autocorrelation_from_intensity(IntensityMeasurements(RealArray(Shape(4)), true)).values)
    CHECK(v == 0.0);
}

TEST_CASE("autocorrelation_direct matches the brute-force oracle and is symmetric") {
  std::mt19937_64 gen(21);
  for (auto shape : {Shape(9), Shape(4, 7), Shape(5, 5)}) {
    const RealArray z = oracle::random_array(shape, gen);
    const RealArray r = autocorrelation_direct(z);
    CHECK(oracle::max_abs_diff(r.values, oracle::brute_autocorrelation(z)) < 1e-12);
    for (std::size_t f = 0; f < r.size(); ++f)
      CHECK(r.values[f] == doctest::Approx(r.values[mirror_index(shape, f)]).epsilon(1e-9));
  }
}

TEST_CASE("autocorrelation from intensity equals the direct sum on 100 random objects") {
  std::mt19937_64 gen(22);
  for (int t = 0; t < 100; ++t) {
    const Shape shape = t % 2 ? Shape(2 + t % 9, 3 + t % 5) : Shape(2 + t % 31);
    const RealArray z = oracle::random_array(shape, gen);
    const RealArray a = autocorrelation_from_intensity(intensity(z));
    const auto b = oracle::brute_autocorrelation(z);
    CHECK(oracle::max_abs_diff(a.values, b) < 1e-9 * std::max(1.0, norm_sq(z)));
  }
}

TEST_CASE("autocorrelation from intensity rejects non-symmetric data") {
  CHECK_THROWS_AS(autocorrelation_from_intensity(IntensityMeasurements(RealArray(Shape(3), {4, 1, 2}), false)),
                  DataError);
  CHECK_THROWS_AS(autocorrelation_from_spectrum(RealArray(Shape(3), {4, 1, 2})), DataError);
  CHECK_NOTHROW(autocorrelation_from_spectrum(RealArray(Shape(3), {4, -1, -1})));
}

TEST_CASE("Parseval") {
  std::mt19937_64 gen(30);
  for (auto shape : {Shape(17), Shape(6, 10)}) {
    const RealArray z = oracle::random_array(shape, gen);
    const Spectrum s = dft_forward(z);
    double e = 0;
    for (const auto& v : s.values) e += std::norm(v);
    CHECK(e == doctest::Approx(static_cast<double>(shape.size()) * norm_sq(z)).epsilon(1e-10));
  }
}

TEST_CASE("inverse of a conjugate-symmetric spectrum is real") {
  std::mt19937_64 gen(31);
  const RealArray z = oracle::random_array(Shape(12, 10), gen);
  const Spectrum s = dft_forward(z);
  double mx = 0;
  for (const auto& v : s.values) mx = std::max(mx, std::abs(v));
  for (const auto& v : dft_inverse(s).values) CHECK(std::abs(v.imag()) <= 1e-10 * mx);
}

TEST_CASE("cached plans give identical results and are thread-safe") {
  std::mt19937_64 gen(40);
  const RealArray z = oracle::random_array(Shape(24, 18), gen);
  const Spectrum first = dft_forward(z);
  std::vector<Spectrum> results(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      for (int r = 0; r < 20; ++r) results[t] = dft_forward(z);
    });
  for (auto& th : threads) th.join();
  for (const auto& r : results) CHECK(r.values == first.values);
}
