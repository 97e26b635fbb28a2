#include <sstream>

#include "doctest.h"
#include "symbnn/data.hpp"
#include "symbnn/io.hpp"

using namespace symbnn;

TEST_CASE("regression2d") {
  CHECK(regression2d_surface(0.0, 0.0) == 1.0);
  CHECK(regression2d_surface(2.0, 0.0) == doctest::Approx(2.0 * std::sin(2.0) + 1.0).epsilon(1e-15));
  const Dataset d = gen_regression2d(4096, 1);
  CHECK(d.X.minCoeff() >= -2.0);
  CHECK(d.X.maxCoeff() <= 2.0);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < 4096; ++i) {
    const double r = d.Y(i, 0) - regression2d_surface(d.X(i, 0), d.X(i, 1));
    ss += r * r;
  }
  CHECK(std::abs(std::sqrt(ss / 4096.0) - 0.1) < 0.02);
  CHECK(gen_regression2d(256, 5).X == gen_regression2d(256, 5).X);
  CHECK(gen_regression2d(256, 5).X != gen_regression2d(256, 6).X);
  CHECK_THROWS_AS(gen_regression2d(0, 0), Error);
}

TEST_CASE("regression2d marginal moments") {
  const Dataset d = gen_regression2d(100000, 2);
  for (int c = 0; c < 2; ++c) {
    const double m = d.X.col(c).mean();
    const double v = (d.X.col(c).array() - m).square().mean();
    CHECK(std::abs(m) < 4.0 * std::sqrt(4.0 / 3.0 / 100000.0));
    CHECK(std::abs(v - 4.0 / 3.0) < 0.02);
  }
}

TEST_CASE("sinusoid") {
  SinusoidSpec spec;
  spec.noise = 0.0;
  spec.amplitude = 2.0;
  const Dataset d = gen_sinusoidal(100, 3, spec);
  for (Eigen::Index i = 0; i < 100; ++i) CHECK(d.Y(i, 0) == doctest::Approx(2.0 * std::sin(2 * M_PI * 0.5 * d.X(i, 0))).epsilon(1e-14));
  CHECK(gen_sinusoidal(50, 4).Y == gen_sinusoidal(50, 4).Y);
  SinusoidSpec gap;
  gap.intervals = {{-3.0, -1.0}, {1.0, 3.0}};
  const Dataset g = gen_sinusoidal(1000, 5, gap);
  int left = 0;
  for (Eigen::Index i = 0; i < 1000; ++i) {
    const double x = g.X(i, 0);
    CHECK(std::abs(x) >= 1.0);
    CHECK(std::abs(x) <= 3.0);
    left += x < 0;
  }
  CHECK(left > 400);
  CHECK(left < 600);
  CHECK(SinusoidSpec::from_json(gap.to_json()).intervals == gap.intervals);
  SinusoidSpec bad;
  bad.intervals = {{1.0, 1.0}};
  CHECK_THROWS_AS(gen_sinusoidal(10, 0, bad), Error);
}

TEST_CASE("split_standardize") {
  const Dataset d = gen_regression2d(10, 7);
  const Split s = split_standardize(d, 0.8, 1);
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
  const Split big = split_standardize(gen_regression2d(256, 0), 0.8, 0);
  CHECK(big.train.size() == 205);
  CHECK(big.test.size() == 51);
  for (int c = 0; c < 2; ++c) {
    const auto col = big.train.X.col(c);
    CHECK(std::abs(col.mean()) < 1e-9);
    CHECK(std::abs(std::sqrt((col.array() - col.mean()).square().sum() / 204.0) - 1.0) < 1e-9);
  }
  CHECK(std::abs(big.train.Y.col(0).mean()) < 1e-9);
  SUBCASE("round trip to raw values") {
    RowMatrix X = s.test.X, Y = s.test.Y;
    s.standardization.invert(X, Y);
    bool found = false;
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
      if (std::abs(d.X(i, 0) - X(0, 0)) < 1e-12) {
        found = true;
        CHECK(std::abs(d.X(i, 1) - X(0, 1)) < 1e-12);
        CHECK(std::abs(d.Y(i, 0) - Y(0, 0)) < 1e-12);
      }
    }
    CHECK(found);
  }
  SUBCASE("constant column passes through with a warning") {
    Dataset c = d;
    c.X.col(1).setConstant(3.0);
    const Split cs = split_standardize(c, 0.8, 1);
    CHECK(cs.warnings.size() == 1);
    CHECK(cs.train.X(0, 1) == 3.0);
  }
  CHECK_THROWS_AS(split_standardize(gen_regression2d(1, 0)), Error);
  CHECK_THROWS_AS(split_standardize(d, 1.0), Error);
}

TEST_CASE("load_csv") {
  std::stringstream three("a,b,y\n1,2,3\n4,5,6\n");
  const Dataset d = load_csv(three);
  CHECK(d.X.cols() == 2);
  CHECK(d.Y.cols() == 1);
  CHECK(d.Y(1, 0) == 6.0);
  std::stringstream airfoil("freq,angle,chord,velocity,thickness,sound\n800,0,0.3048,71.3,0.00266,126.2\n1000,0,0.3048,71.3,0.00266,125.2\n");
  const Dataset a = load_csv(airfoil);
  CHECK(a.X.cols() == 5);
  std::stringstream named("y,a,b\n1,2,3\n");
  CHECK(load_csv(named, {"y"}).Y(0, 0) == 1.0);
  std::stringstream no_header("1,2,3\n4,5,6\n");
  CHECK_THROWS_AS(load_csv(no_header), Error);
  std::stringstream ragged("a,b,y\n1,2,3\n4,5\n");
  try {
    load_csv(ragged);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  std::stringstream junk("a,b,y\n1,x,3\n");
  try {
    load_csv(junk);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
}

TEST_CASE("csv round trip") {
  const Dataset d = gen_regression2d(20, 8);
  std::stringstream io;
  write_csv(io, d);
  const Dataset back = load_csv(io);
  CHECK(back.X == d.X);
  CHECK(back.Y == d.Y);
  CHECK(back.x_names == d.x_names);
}
