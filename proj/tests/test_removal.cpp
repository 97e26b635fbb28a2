#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "symbnn/analysis.hpp"
#include "symbnn/removal.hpp"
#include "symbnn/symmetry.hpp"

using namespace symbnn;

namespace {

SampleSet scattered_copies(const Architecture &arch, const std::vector<Vector> &bases, int copies, Rng &rng) {
  SampleSet s;
  s.arch = arch;
  for (std::size_t b = 0; b < bases.size(); ++b) {
    for (int c = 0; c < copies; ++c) {
      s.add({apply_transform(arch, bases[b], random_transform(arch, rng)), -1.0},
            {static_cast<int>(b), 0, c});
    }
  }
  return s;
}

bool is_bijection(const std::vector<int> &a) {
  std::set<int> s(a.begin(), a.end());
  return s.size() == a.size() && *s.begin() == 0 && *s.rbegin() == static_cast<int>(a.size()) - 1;
}

}  // namespace

TEST_CASE("svm_loss") {
  RowMatrix cloud(3, 2);
  cloud << 1, 0, 0, 1, -1, 1;
  CHECK(svm_loss(Vector::Zero(2), cloud, 2.5) == doctest::Approx(7.5));
  Vector beta(2);
  beta << 3, 5;
  CHECK(svm_loss(beta, cloud, 1.0) == doctest::Approx(17.0));
  RowMatrix one(1, 2);
  one << 0.25, 0.0;
  Vector b2(2);
  b2 << 2.0, 1.0;
  CHECK(svm_loss(b2, one, 1.0) == doctest::Approx(2.5 + 0.5));
  CHECK(svm_loss(-beta, cloud, 1.0) == svm_loss(beta, cloud, 1.0));
}

TEST_CASE("fit_hyperplane") {
  RemovalConfig cfg;
  SUBCASE("antipodal pair") {
    // Minimizing b^2/2 subject to |b v| >= 1 gives |b| = 1 / |v|.
    RowMatrix cloud(2, 2);
    cloud << 3, 4, -3, -4;
    Rng rng(1);
    const auto h = fit_hyperplane(cloud, cfg, rng);
    CHECK(std::abs(h.beta.dot(Vector(cloud.row(0).transpose()))) >= 1.0 - 1e-6);
    CHECK(h.beta.norm() == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(h.loss == doctest::Approx(0.5 * 0.04).epsilon(1e-3));
  }
  SUBCASE("separable clusters reach zero hinge loss") {
    Rng rng(2);
    std::normal_distribution<double> n(0.0, 0.1);
    RowMatrix cloud(40, 3);
    for (int i = 0; i < 40; ++i) {
      const double side = i < 20 ? 1.0 : -1.0;
      cloud.row(i) << side * 2.0 + n(rng), n(rng), side * 2.0 + n(rng);
    }
    const auto h = fit_hyperplane(cloud, cfg, rng);
    const Vector m = (cloud * h.beta).cwiseAbs();
    CHECK(m.minCoeff() >= 1.0 - 1e-9);
    CHECK(h.loss == doctest::Approx(0.5 * h.beta.squaredNorm()).epsilon(1e-9));
  }
  SUBCASE("empty cloud") {
    Rng rng(3);
    CHECK_THROWS_AS(fit_hyperplane(RowMatrix(0, 2), cfg, rng), Error);
  }
}

TEST_CASE("tanh_removal") {
  const Architecture arch({1, 3, 1});
  RemovalConfig cfg;
  Rng rng(4);
  SUBCASE("mirrored cloud loses its antipodal pairs and keeps the function") {
    SampleSet s;
    s.arch = arch;
    const Vector base = testing::random_vector(arch.param_dim(), rng);
    for (int c = 0; c < 8; ++c) {
      EquioutputTransform e = identity_transform(arch);
      for (auto &sg : e.layers[0].signs) sg = (c >> (&sg - e.layers[0].signs.data())) & 1 ? -1 : 1;
      s.add({apply_transform(arch, base, e), 0.0}, {c, 0, 0});
    }
    const SampleSet before = s;
    const auto r = tanh_removal(s, 1, cfg, rng);
    CHECK(r.flips == 12);
    const auto cloud = NeuronCloud::build(s, 1);
    CHECK((cloud.vectors * r.plane.beta).minCoeff() >= 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(verify_function_equal(arch, before.draws[i].theta, s.draws[i].theta, 50, 1e-10, rng).equal);
      CHECK((s.draws[i].theta - s.draws[0].theta).norm() < 1e-12);
    }
  }
  SUBCASE("one-sided cloud is untouched") {
    SampleSet s;
    s.arch = arch;
    Vector theta(10);
    theta << 1, 2, 3, 1, 2, 3, 0, 1, 2, 0.5;  // w hidden, w out, b hidden, b out
    s.add({theta, 0.0}, {});
    const auto r = tanh_removal(s, 1, cfg, rng);
    if (r.flips != 0) {
      // The fitted plane may point the other way; all three then flip together.
      CHECK(r.flips == 3);
    }
    CHECK(verify_function_equal(arch, theta, s.draws[0].theta, 50, 1e-10, rng).equal);
  }
}

TEST_CASE("knn_class_probs") {
  NeuronCloud cloud;
  cloud.layer = 1;
  cloud.num_classes = 3;
  SUBCASE("unanimous neighbours") {
    cloud.vectors = RowMatrix(4, 1);
    cloud.vectors << 0.0, 0.1, 0.2, 5.0;
    cloud.sample = {0, 1, 2, 3};
    cloud.label = {0, 2, 2, 1};
    const double q = 0.15;
    const Vector p = knn_class_probs({&q, 1}, 0, cloud, 2, 1.0);
    CHECK(p[2] == doctest::Approx(1.0));
  }
  SUBCASE("symmetric tie") {
    cloud.vectors = RowMatrix(2, 1);
    cloud.vectors << -1.0, 1.0;
    cloud.sample = {1, 2};
    cloud.label = {0, 1};
    cloud.num_classes = 2;
    const double q = 0.0;
    const Vector p = knn_class_probs({&q, 1}, 0, cloud, 2, 1.0);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
  }
  SUBCASE("own sample is excluded") {
    cloud.vectors = RowMatrix(3, 1);
    cloud.vectors << 0.0, 0.0, 3.0;
    cloud.sample = {0, 0, 1};
    cloud.label = {0, 1, 2};
    const double q = 0.0;
    const Vector p = knn_class_probs({&q, 1}, 0, cloud, 1, 1.0);
    CHECK(p[2] == doctest::Approx(1.0));
    CHECK_THROWS_AS(knn_class_probs({&q, 1}, 0, [&] {
                      NeuronCloud c = cloud;
                      c.sample = {0, 0, 0};
                      return c;
                    }(), 1, 1.0),
                    Error);
  }
  SUBCASE("planted blobs") {
    Rng rng(5);
    std::normal_distribution<double> n(0.0, 0.1);
    cloud.vectors = RowMatrix(60, 2);
    for (int i = 0; i < 60; ++i) {
      const int c = i % 3;
      cloud.vectors.row(i) << 10.0 * c + n(rng), n(rng);
      cloud.sample.push_back(static_cast<std::size_t>(i / 3 + 1));
      cloud.label.push_back(c);
    }
    const double q[2] = {20.05, 0.0};
    Eigen::Index arg;
    knn_class_probs(q, 0, cloud, 10, 1.0).maxCoeff(&arg);
    CHECK(arg == 2);
  }
}

TEST_CASE("greedy_assign") {
  RowMatrix diag = RowMatrix::Constant(3, 3, 0.05);
  diag.diagonal().setConstant(0.9);
  CHECK(greedy_assign(diag) == std::vector<int>{0, 1, 2});
  RowMatrix two(2, 2);
  two << 0.6, 0.4, 0.9, 0.1;
  CHECK(greedy_assign(two) == std::vector<int>{1, 0});
  RowMatrix perm = RowMatrix::Zero(4, 4);
  perm(0, 2) = perm(1, 0) = perm(2, 3) = perm(3, 1) = 1.0;
  CHECK(greedy_assign(perm) == std::vector<int>{2, 0, 3, 1});
  CHECK(greedy_assign(RowMatrix::Constant(3, 3, 1.0 / 3)) == std::vector<int>{0, 1, 2});
  Rng rng(6);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 100; ++t) {
    RowMatrix p(5, 5);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
    CHECK(is_bijection(greedy_assign(p)));
  }
}

TEST_CASE("permutation_removal") {
  const Architecture arch({1, 4, 1});
  RemovalConfig cfg;
  Rng rng(7);
  const Vector base = testing::random_vector(arch.param_dim(), rng, 2.0);
  SampleSet s;
  s.arch = arch;
  for (int c = 0; c < 20; ++c) {
    EquioutputTransform e = random_transform(arch, rng);
    std::fill(e.layers[0].signs.begin(), e.layers[0].signs.end(), 1);
    s.add({apply_transform(arch, base, e), 0.0}, {c, 0, 0});
  }
  const SampleSet before = s;
  const auto r = permutation_removal(s, 1, cfg);
  CHECK(r.iterations < cfg.iterations);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK((s.draws[i].theta - s.draws[0].theta).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(verify_function_equal(arch, before.draws[i].theta, s.draws[i].theta, 50, 1e-10, rng).equal);
  }
  const auto again = permutation_removal(s, 1, cfg);
  CHECK(again.changes == 0);
  CHECK(again.iterations == 1);
}

TEST_CASE("geometry_removal") {
  RemovalConfig cfg;
  auto collapsed_fraction = [](const SampleSet &s, std::size_t groups, std::size_t copies) {
    int collapsed = 0;
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t c = 0; c < copies; ++c) collapsed += (s.draws[g * copies + c].theta - s.draws[g * copies].theta).norm() < 1e-6;
    }
    return collapsed / static_cast<double>(groups * copies);
  };
  SUBCASE("planted groups collapse, keep their function and are stable") {
    const Architecture arch({1, 3, 1});
    Rng rng(8);
    std::vector<Vector> bases;
    for (int b = 0; b < 3; ++b) bases.push_back(testing::random_vector(arch.param_dim(), rng, 1.5));
    SampleSet s = scattered_copies(arch, bases, 64, rng);
    const SampleSet before = s;
    Rng data_rng(9);
    const auto test = testing::random_data(arch, 20, data_rng);
    const auto report = geometry_removal(s, cfg, rng);
    REQUIRE(report.layers.size() == 1);
    CHECK(report.sweeps == 1);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(verify_function_equal(arch, before.draws[i].theta, s.draws[i].theta, 50, 1e-10, rng).equal);
      CHECK(std::abs(log_posterior(s.draws[i], test, arch) - log_posterior(before.draws[i], test, arch)) < 1e-8);
    }
    CHECK(collapsed_fraction(s, 3, 64) >= 0.95);
    CHECK(std::abs(lppd(s, test).mean - lppd(before, test).mean) < 1e-12);
    const SampleSet once = s;
    const auto second = geometry_removal(s, cfg, rng);
    CHECK(second.layers[0].flips == 0);
    CHECK(second.layers[0].permutation_changes == 0);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.draws[i].theta == once.draws[i].theta);
  }
  SUBCASE("two hidden layers: repeated sweeps help but do not fully collapse") {
    // A group can settle into a few internally consistent sub-clusters; exact
    // matches from peers in the same sub-cluster dominate the k-NN vote, so
    // such splits are fixed points of the relabeling.
    const Architecture arch({2, 4, 3, 1});
    Rng rng(8);
    std::vector<Vector> bases;
    for (int b = 0; b < 3; ++b) bases.push_back(testing::random_vector(arch.param_dim(), rng, 1.5));
    const SampleSet start = scattered_copies(arch, bases, 24, rng);
    SampleSet one = start, many = start;
    RemovalConfig deep = cfg;
    deep.sweeps = 4;
    Rng r1(20), r2(20);
    geometry_removal(one, cfg, r1);
    const auto report = geometry_removal(many, deep, r2);
    CHECK(report.layers.at(0).layer == 2);
    CHECK(report.layers.at(1).layer == 1);
    CHECK(report.layers.size() == 2 * static_cast<std::size_t>(report.sweeps));
    for (std::size_t i = 0; i < many.size(); ++i) {
      CHECK(verify_function_equal(arch, start.draws[i].theta, many.draws[i].theta, 50, 1e-10, rng).equal);
    }
    CHECK(collapsed_fraction(many, 3, 24) > collapsed_fraction(one, 3, 24) + 0.2);
  }
  SUBCASE("single draw") {
    const Architecture arch({1, 3, 1});
    Rng rng(10);
    SampleSet s;
    s.arch = arch;
    s.add({testing::random_vector(arch.param_dim(), rng), 0.0}, {});
    const Vector before = s.draws[0].theta;
    CHECK_NOTHROW(geometry_removal(s, cfg, rng));
    CHECK(verify_function_equal(arch, before, s.draws[0].theta, 50, 1e-10, rng).equal);
  }
  SUBCASE("ReLU is refused") {
    const Architecture arch({1, 3, 1}, Activation::relu);
    SampleSet s;
    s.arch = arch;
    s.add({Vector::Ones(10), 0.0}, {});
    Rng rng(11);
    CHECK_THROWS_AS(geometry_removal(s, cfg, rng), Error);
  }
  SUBCASE("serial and parallel agree") {
    const Architecture arch({1, 3, 1});
    Rng rng(12);
    std::vector<Vector> bases{testing::random_vector(10, rng, 1.5), testing::random_vector(10, rng, 1.5)};
    SampleSet a = scattered_copies(arch, bases, 16, rng);
    SampleSet b = a;
    RemovalConfig serial = cfg, parallel = cfg;
    serial.exec = Execution::serial;
    Rng ra(13), rb(13);
    geometry_removal(a, serial, ra);
    set_workers(4);
    geometry_removal(b, parallel, rb);
    set_workers(0);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.draws[i].theta == b.draws[i].theta);
  }
}
