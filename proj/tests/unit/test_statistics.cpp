#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "galgraph/models.hpp"
#include "galgraph/statistics.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace galgraph;

namespace {

PointCloud uniform_cloud(std::size_t n, double side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PointCloud c;
  c.box = {side, true};
  c.positions = galgraph::testing::uniform_points(n, side, rng);
  return c;
}

// Coordinates on a 1/8 grid so that every symmetry below is exact in floating point.
PointCloud dyadic_cloud(std::size_t n, double side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, static_cast<int>(side * 8) - 1);
  PointCloud c;
  c.box = {side, true};
  for (std::size_t i = 0; i < n; ++i) c.positions.push_back({u(rng) / 8.0, u(rng) / 8.0, u(rng) / 8.0});
  return c;
}

}  // namespace

TEST_CASE("log_bin_edges and default edges") {
  const auto e = log_bin_edges(4, 1.0, 16.0);
  REQUIRE(e.size() == 5);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(e[i] == doctest::Approx(std::pow(2.0, double(i))).epsilon(1e-14));
  const auto d = default_bin_edges();
  CHECK(d.size() == 25);
  CHECK(d.front() == 0.5);
  CHECK(d.back() == 150.0);
  for (std::size_t i = 2; i < d.size(); ++i) CHECK(d[i] / d[i - 1] == doctest::Approx(d[1] / d[0]).epsilon(1e-12));
  CHECK_THROWS_AS(log_bin_edges(0, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(log_bin_edges(3, 0, 2), std::invalid_argument);
}

TEST_CASE("two points in one bin") {
  const auto edges = log_bin_edges(6, 1.0, 64.0);  // 1, 2, 4, ..., 64
  PointCloud c;
  c.box = {200.0, true};
  c.positions = {{10, 10, 10}, {13, 10, 10}};
  const TpcfVector t = two_point_correlation(c, edges);
  const std::vector<std::uint64_t> expect{0, 1, 0, 0, 0, 0};
  CHECK(t.pair_counts == expect);
  // Across the periodic boundary: separation 3 through the wall.
  c.positions = {{1, 50, 50}, {198, 50, 50}};
  CHECK(two_point_correlation(c, edges).pair_counts == expect);
  CHECK(two_point_correlation(c, edges, false).pair_counts == expect);
  // A pair at exactly a bin edge belongs to the upper bin.
  c.positions = {{10, 10, 10}, {14, 10, 10}};
  CHECK(two_point_correlation(c, edges).pair_counts[2] == 1);
  c.positions = {{10, 10, 10}, {74, 10, 10}};
  CHECK(two_point_correlation(c, edges).pair_counts == std::vector<std::uint64_t>(6, 0));
}

TEST_CASE("xi uses the analytic random pair count") {
  const auto edges = log_bin_edges(3, 2.0, 16.0);
  PointCloud c = uniform_cloud(40, 100.0, 1);
  const TpcfVector t = two_point_correlation(c, edges);
  const double pairs = 40.0 * 39.0 / 2.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double rr = pairs * 4.0 / 3.0 * std::numbers::pi * (std::pow(edges[i + 1], 3) - std::pow(edges[i], 3)) / 1e6;
    CHECK(t.random_counts[i] == doctest::Approx(rr).epsilon(1e-13));
    CHECK(t.xi[i] == doctest::Approx(double(t.pair_counts[i]) / rr - 1.0).epsilon(1e-13));
    CHECK(t.null_sigma()[i] == doctest::Approx(1.0 / std::sqrt(rr)).epsilon(1e-13));
    const double dd = std::max(double(t.pair_counts[i]), rr);
    CHECK(t.sigma()[i] == doctest::Approx(std::sqrt(dd) / rr).epsilon(1e-13));
    CHECK(t.xi[i] >= -1.0);
  }
  CHECK_NOTHROW(t.validate());
  CHECK(t.centers()[1] == doctest::Approx(std::sqrt(edges[1] * edges[2])));
}

TEST_CASE("cell-list pair counts equal brute force exactly") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const std::size_t n = 100 + 50 * seed;
    const double side = seed % 2 ? 100.0 : 37.0;
    const PointCloud c = uniform_cloud(n, side, seed);
    const auto edges = log_bin_edges(10, 0.5, side / 2 - 1e-9);
    const auto brute = kernels::pair_counts_brute_force(c.positions, c.box, edges);
    CHECK(kernels::serial::pair_counts_cells(c.positions, c.box, edges) == brute);
    CHECK(kernels::omp::pair_counts_cells(c.positions, c.box, edges) == brute);
    CHECK(kernels::pair_counts_cells(c.positions, c.box, edges) == brute);
    std::uint64_t total = 0;
    for (auto v : brute) total += v;
    CHECK(total <= n * (n - 1) / 2);
  }
  // Small cutoff relative to the box: many cells.
  const PointCloud c = uniform_cloud(500, 100.0, 99);
  const auto edges = log_bin_edges(5, 0.5, 6.0);
  CHECK(kernels::serial::pair_counts_cells(c.positions, c.box, edges) ==
        kernels::pair_counts_brute_force(c.positions, c.box, edges));
  // Open boxes use plain differences.
  PointCloud open = c;
  open.box.periodic = false;
  CHECK(kernels::serial::pair_counts_cells(open.positions, open.box, edges) ==
        kernels::pair_counts_brute_force(open.positions, open.box, edges));
}

TEST_CASE("xi is exactly invariant under translations and cube symmetries") {
  const double side = 64.0;
  const PointCloud c = dyadic_cloud(300, side, 5);
  const auto edges = log_bin_edges(12, 0.5, 31.0);
  const auto base = two_point_correlation(c, edges).pair_counts;
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> u(0, 511);
  for (int perm = 0; perm < 6; ++perm) {
    const std::array<std::array<int, 3>, 6> axes{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (int flips = 0; flips < 8; ++flips) {
      const Vec3 shift{u(rng) / 8.0, u(rng) / 8.0, u(rng) / 8.0};
      PointCloud t = c;
      for (std::size_t i = 0; i < c.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
          double v = c.positions[i][axes[perm][a]];
          if (flips >> a & 1) v = side - 1.0 / 8.0 - v;
          v = std::fmod(v + shift[a], side);
          t.positions[i][a] = v;
        }
      }
      CHECK(two_point_correlation(t, edges).pair_counts == base);
    }
  }
}

TEST_CASE("uniform cloud is consistent with zero correlation") {
  const PointCloud c = uniform_cloud(5000, 1000.0, 123);
  const TpcfVector t = two_point_correlation(c);
  const auto sigma = t.sigma();
  for (std::size_t i = 0; i < t.size(); ++i) {
    CAPTURE(i);
    CHECK(std::abs(t.xi[i]) <= 3.0 * sigma[i]);
  }
}

TEST_CASE("two_point_correlation errors") {
  PointCloud c = uniform_cloud(10, 100.0, 2);
  CHECK_THROWS_AS(two_point_correlation(c, log_bin_edges(3, 1.0, 50.0)), std::invalid_argument);
  CHECK_NOTHROW(two_point_correlation(c, log_bin_edges(3, 1.0, 49.9)));
  const std::vector<double> bad{1.0, 3.0, 2.0};
  CHECK_THROWS_AS(two_point_correlation(c, bad), std::invalid_argument);
  c.box.periodic = false;
  CHECK_THROWS_AS(two_point_correlation(c, log_bin_edges(3, 1.0, 10.0)), std::invalid_argument);
}

TEST_CASE("tpcf_slice selects bins by their centres") {
  const auto edges = default_bin_edges();
  TpcfVector t;
  t.bin_edges = edges;
  for (std::size_t i = 0; i < 24; ++i) t.xi.push_back(double(i));
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < 24; ++i) {
    const double c = std::sqrt(edges[i] * edges[i + 1]);
    if (c < 30.0) small.push_back(i);
    if (c > 80.0) large.push_back(i);
  }
  const TpcfSlice s = tpcf_slice(t, TpcfContext::Small), l = tpcf_slice(t, TpcfContext::Large);
  CHECK(s.indices == small);
  CHECK(l.indices == large);
  CHECK(!small.empty());
  CHECK(!large.empty());
  for (auto i : s.indices) CHECK(std::find(l.indices.begin(), l.indices.end(), i) == l.indices.end());
  for (std::size_t q = 0; q < s.indices.size(); ++q) CHECK(s.values[q] == t.xi[s.indices[q]]);
  CHECK(tpcf_slice(t, TpcfContext::Full).indices.size() == 24);

  TpcfVector below;
  below.bin_edges = log_bin_edges(5, 1.0, 20.0);
  below.xi = {1, 2, 3, 4, 5};
  CHECK(tpcf_slice(below, TpcfContext::Small).values == below.xi);
  CHECK_THROWS_AS(tpcf_slice(below, TpcfContext::Large), std::invalid_argument);
  CHECK_THROWS_AS(tpcf_slice(below, TpcfContext::None), std::invalid_argument);
}

TEST_CASE("2PCF MLP baseline") {
  const nn::MlpSpec spec = tpcf_mlp_spec();
  nn::ParameterStore store;
  std::mt19937_64 rng(3);
  tpcf_mlp_init(store, spec, rng);
  CHECK(store.count() == 24 * 128 + 128 + 2 * (128 * 128 + 128) + 128 * 2 + 2);
  CHECK(store.count() == 36482);

  // Zero weights: output is the last bias.
  for (auto& [name, t] : store.items())
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.0;
  store.get("tpcf_mlp/3/b") = Matrix(1, 2, std::vector<double>{0.25, -1.5});
  ad::Tape tape;
  nn::Binding p(tape, store, false);
  std::mt19937_64 g(4);
  const ad::Var x = tape.constant(galgraph::testing::random_matrix(3, 24, g));
  const Matrix y = tpcf_mlp_baseline(p, spec, x).value();
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(y(r, 0) == 0.25);
    CHECK(y(r, 1) == -1.5);
  }

  // Finite differences on a narrow copy, through the input and every parameter.
  const nn::MlpSpec narrow = tpcf_mlp_spec(24, 6, 3, 2);
  nn::ParameterStore small;
  tpcf_mlp_init(small, narrow, rng);
  const Matrix x0 = galgraph::testing::random_matrix(2, 24, g);
  const auto res = galgraph::testing::gradcheck(
      [&](ad::Tape& t, const std::vector<ad::Var>& v) { return tpcf_mlp_baseline(nn::Binding(t, small), narrow, v[0]); },
      {x0});
  CHECK(res.max_rel_error < 1e-6);
  const Matrix proj = galgraph::testing::random_matrix(2, 2, g);
  auto loss = [&](nn::TensorMap* grads) {
    ad::Tape t;
    nn::Binding b(t, small);
    ad::Var l = ad::sum(ad::mul(tpcf_mlp_baseline(b, narrow, t.constant(x0)), t.constant(proj)));
    if (grads) {
      t.backward(l);
      b.accumulate_grads(*grads);
    }
    return l.value()[0];
  };
  nn::TensorMap grads;
  loss(&grads);
  double worst = 0.0;
  for (auto& [name, t] : small.items())
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double v = t[i], h = 1e-6;
      t[i] = v + h;
      const double up = loss(nullptr);
      t[i] = v - h;
      const double dn = loss(nullptr);
      t[i] = v;
      worst = std::max(worst, galgraph::testing::rel_error(grads.at(name)[i], (up - dn) / (2 * h)));
    }
  CHECK(worst < 1e-6);

  ModelConfig c;
  c.architecture = Architecture::TpcfMlp;
  c.tpcf_context = TpcfContext::Full;
  c.tpcf_dim = 24;
  auto model = make_model(c);
  CHECK(model->params().count() == 36482);
  ModelInput in;
  in.context = std::vector<double>(24, 0.1);
  CHECK(model->predict(in).cols() == 2);
  in.context.pop_back();
  CHECK_THROWS_AS(model->predict(in), std::invalid_argument);
}
