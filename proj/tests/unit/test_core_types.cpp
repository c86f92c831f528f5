#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "bgpr/core_types.hpp"
#include "bgpr/errors.hpp"
#include "oracles.hpp"

using namespace bgpr;

TEST_CASE("shape basics") {
  const Shape a(5);
  CHECK(a.rank() == 1);
  CHECK(a.rows() == 1);
  CHECK(a.cols() == 5);
  CHECK(a.size() == 5);
  const Shape b(3, 4);
  CHECK(b.rank() == 2);
  CHECK(b.size() == 12);
  CHECK(b.to_string() == "(3x4)");
  CHECK(flat_index(b, 2, 1) == 9);
  CHECK_THROWS_AS(Shape(0), ShapeError);
  CHECK_THROWS_AS(Shape(2, 0), ShapeError);
  const std::vector<std::size_t> three{2, 2, 2};
  CHECK_THROWS_AS(Shape::from_extents(three), ShapeError);
}

TEST_CASE("dims validation") {
  const Dims d = Dims::without_oversampling({4, 5}, {6, 7});
  CHECK(d.object_shape() == Shape(10, 12));
  CHECK(d.measurement_shape() == Shape(10, 12));
  CHECK_FALSE(d.oversampled());

  Dims over = d;
  over.measurement_sizes = {20, 24};
  CHECK_NOTHROW(over.validate());
  CHECK(over.oversampled());

  Dims small = d;
  small.measurement_sizes = {9, 12};
  CHECK_THROWS_AS(small.validate(), ShapeError);

  CHECK_THROWS_AS(Dims::without_oversampling({1, 1, 1}, {1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(Dims::without_oversampling({0}, {3}), ShapeError);
}

TEST_CASE("assemble 1-D example") {
  const SupportMask mask = SupportMask::corner(Shape(4), Shape(1));
  const RealArray y(Shape(4), {0, 1, 2, 3});
  const CombinedObject z = assemble(RealArray(Shape(1), {7}), y, mask);
  CHECK(z.values().values == std::vector<double>{7, 1, 2, 3});
  CHECK(extract(z).values == std::vector<double>{7});
}

TEST_CASE("assemble centred 2x2 ones in 4x4 zeros") {
  const SupportMask mask = SupportMask::centered(Shape(4, 4), Shape(2, 2));
  const CombinedObject z = assemble(RealArray(Shape(2, 2), {1, 1, 1, 1}), RealArray(Shape(4, 4)), mask);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const bool inside = i >= 1 && i <= 2 && j >= 1 && j <= 2;
      CHECK(z.values().at(i, j) == (inside ? 1.0 : 0.0));
    }
}

TEST_CASE("extract 2-D top-left block is row-major") {
  RealArray zv(Shape(4, 4));
  for (std::size_t i = 0; i < 16; ++i) zv.values[i] = static_cast<double>(i);
  const SupportMask mask = SupportMask::corner(Shape(4, 4), Shape(2, 2));
  const RealArray x = extract(zv, mask);
  CHECK(x.shape == Shape(2, 2));
  CHECK(x.values == std::vector<double>{0, 1, 4, 5});
}

TEST_CASE("assemble rejects bad inputs") {
  const SupportMask mask = SupportMask::corner(Shape(4), Shape(1));
  CHECK_THROWS_AS(assemble(RealArray(Shape(1), {1}), RealArray(Shape(4), {1, 0, 0, 0}), mask), DataError);
  CHECK_THROWS_AS(assemble(RealArray(Shape(2), {1, 2}), RealArray(Shape(4)), mask), ShapeError);
  CHECK_THROWS_AS(assemble(RealArray(Shape(1), {1}), RealArray(Shape(5)), mask), ShapeError);
  const std::array<std::size_t, 1> off{4};
  CHECK_THROWS_AS(SupportMask::block(Shape(4), Shape(1), off), ShapeError);
}

TEST_CASE("assemble/extract round trip is bitwise for shapes up to 64") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<std::size_t> ext(1, 64);
  for (int t = 0; t < 60; ++t) {
    const bool two = t % 2 == 1;
    const std::size_t g1 = ext(gen), g2 = two ? ext(gen) : 1;
    std::uniform_int_distribution<std::size_t> s1(1, g1), s2(1, g2);
    const std::size_t n1 = s1(gen), n2 = two ? s2(gen) : 1;
    const Shape grid = two ? Shape(g1, g2) : Shape(g1);
    const Shape sample = two ? Shape(n1, n2) : Shape(n1);
    std::array<std::size_t, 2> off{std::uniform_int_distribution<std::size_t>(0, g1 - n1)(gen),
                                   two ? std::uniform_int_distribution<std::size_t>(0, g2 - n2)(gen) : 0};
    const SupportMask mask = SupportMask::block(grid, sample, std::span<const std::size_t>(off.data(), grid.rank()));
    CHECK(mask.count() == sample.size());

    RealArray y = oracle::random_array(grid, gen);
    for (std::size_t f : mask.indices()) y.values[f] = 0.0;
    const RealArray x = oracle::random_array(sample, gen);
    const CombinedObject z = assemble(x, y, mask);
    CHECK(extract(z).values == x.values);

    double purity = 0.0;
    for (std::size_t f : mask.indices()) purity += std::abs(z.background().values[f]);
    CHECK(purity == 0.0);
    for (std::size_t f = 0; f < grid.size(); ++f)
      if (!mask.contains(f)) CHECK(z.values().values[f] == y.values[f]);

    const CombinedObject again = assemble(extract(z), z.background(), mask);
    CHECK(again.values().values == z.values().values);
  }
}

TEST_CASE("irregular support from flags") {
  const SupportMask mask = SupportMask::from_flags(Shape(2, 3), {1, 0, 1, 0, 1, 0});
  CHECK(mask.count() == 3);
  CHECK(std::vector<std::size_t>(mask.indices().begin(), mask.indices().end()) == std::vector<std::size_t>{0, 2, 4});
  CHECK(mask.sample_shape() == Shape(3));
  CHECK_THROWS_AS(SupportMask::from_flags(Shape(2), {0, 0}), ShapeError);
}

TEST_CASE("intensity measurements validation") {
  CHECK_NOTHROW(IntensityMeasurements(RealArray(Shape(3), {4, 1, 1}), true));
  CHECK_THROWS_AS(IntensityMeasurements(RealArray(Shape(3), {4, 1, 2}), true), DataError);
  CHECK_NOTHROW(IntensityMeasurements(RealArray(Shape(3), {4, 1, 2}), false));
  CHECK_THROWS_AS(IntensityMeasurements(RealArray(Shape(2), {-1, 1}), false), DataError);
  CHECK_THROWS_AS(IntensityMeasurements(RealArray(Shape(2), {std::nan(""), 1}), false), DataError);
}

TEST_CASE("mirror index") {
  CHECK(mirror_index(Shape(4), 1) == 3);
  CHECK(mirror_index(Shape(4), 0) == 0);
  CHECK(mirror_index(Shape(4), 2) == 2);
  CHECK(mirror_index(Shape(3, 4), flat_index(Shape(3, 4), 1, 1)) == flat_index(Shape(3, 4), 2, 3));
}

TEST_CASE("method names") {
  CHECK(parse_method("bdr1") == Method::BDR1);
  CHECK(parse_method("Cbdr") == Method::CBDR);
  CHECK(to_string(Method::HIO) == "HIO");
  CHECK_THROWS_AS(parse_method("raar"), ConfigError);
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  CHECK(c.eps == 1e-12);
  CHECK(c.max_iter == 300);
  CHECK(c.beta == 0.9);
  CHECK(c.lambda == 1.0);
  CHECK_NOTHROW(c.validate());
  SolverConfig bad = c;
  bad.eps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.beta = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.lambda = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
