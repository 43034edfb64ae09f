#include <bit>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "galgraph/data.hpp"
#include "galgraph/statistics.hpp"
#include "test_util.hpp"

using namespace galgraph;
using namespace galgraph::data;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "galgraph_test_data";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

Dataset sample_dataset(bool velocities, bool masses, bool tpcf, std::size_t n_clouds = 3, std::size_t n = 17) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 50.0), g(-3.0, 3.0);
  Dataset d;
  for (std::size_t k = 0; k < n_clouds; ++k) {
    Record r;
    r.cloud.box = {50.0, true};
    for (std::size_t i = 0; i < n; ++i) {
      r.cloud.positions.push_back({u(rng), u(rng), u(rng)});
      if (velocities) r.cloud.velocities.push_back({g(rng), g(rng), g(rng)});
      if (masses) r.cloud.masses.push_back(std::exp(g(rng)));
    }
    r.params = {g(rng), g(rng)};
    if (tpcf) r.tpcf = {g(rng), g(rng), g(rng), g(rng)};
    d.records.push_back(r);
  }
  DatasetHeader h;
  h.notes = "params: Omega_m, sigma_8\nunits: source-native\n";
  if (tpcf) h.bin_edges = {1, 2, 4, 8, 16};
  d.header = header_for(d.records, h);
  return d;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

bool bitwise_equal(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!bitwise_equal(std::vector<double>(a[i].begin(), a[i].end()), std::vector<double>(b[i].begin(), b[i].end())))
      return false;
  return true;
}

void expect_same(const Record& a, const Record& b) {
  CHECK(bitwise_equal(a.cloud.positions, b.cloud.positions));
  CHECK(bitwise_equal(a.cloud.velocities, b.cloud.velocities));
  CHECK(bitwise_equal(a.cloud.masses, b.cloud.masses));
  CHECK(bitwise_equal(a.params, b.params));
  CHECK(bitwise_equal(a.tpcf, b.tpcf));
  CHECK(a.cloud.box.side == b.cloud.box.side);
  CHECK(a.cloud.box.periodic == b.cloud.box.periodic);
}

std::vector<char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE(".eqcd round trip is bitwise lossless for every record layout") {
  for (int mask = 0; mask < 8; ++mask) {
    const Dataset d = sample_dataset(mask & 1, mask & 2, mask & 4);
    const std::string path = temp_path("rt" + std::to_string(mask) + ".eqcd");
    save_dataset(path, d);
    const Dataset back = load_dataset(path);
    CHECK(back.header.n_clouds == 3);
    CHECK(back.header.n_points == 17);
    CHECK(back.header.n_features == 3 + (mask & 1 ? 3 : 0) + (mask & 2 ? 1 : 0));
    CHECK(back.header.notes == d.header.notes);
    CHECK(back.header.bin_edges == d.header.bin_edges);
    CHECK(back.header.param_names() == std::vector<std::string>{"Omega_m", "sigma_8"});
    REQUIRE(back.records.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) expect_same(d.records[k], back.records[k]);
    CHECK(std::filesystem::file_size(path) ==
          d.header.header_bytes() + 3 * d.header.record_doubles() * sizeof(double));
  }
}

TEST_CASE(".eqcd byte layout") {
  const Dataset d = sample_dataset(true, false, true, 1, 2);
  const std::string path = temp_path("layout.eqcd");
  save_dataset(path, d);
  const auto bytes = file_bytes(path);
  auto u32 = [&](std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    return v;
  };
  auto u64 = [&](std::size_t off) {
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + off, 8);
    return v;
  };
  auto f64 = [&](std::size_t off) {
    double v;
    std::memcpy(&v, bytes.data() + off, 8);
    return v;
  };
  CHECK(std::string(bytes.data(), 4) == "EQCD");
  CHECK(u32(4) == 1);
  CHECK(u64(8) == 1);
  CHECK(u64(16) == 2);
  CHECK(u32(24) == 6);
  CHECK(u32(28) == 2);
  CHECK(u32(32) == 4);
  CHECK(u32(36) == (kHasVelocities | kHasTpcf | kPeriodic));
  CHECK(f64(40) == 50.0);
  const std::uint32_t notes = u32(48);
  CHECK(notes == d.header.notes.size());
  const std::size_t edges = 52 + notes;
  CHECK(f64(edges) == 1.0);
  CHECK(f64(edges + 32) == 16.0);
  const std::size_t rec = edges + 40;
  const Record& r = d.records[0];
  CHECK(f64(rec) == r.cloud.positions[0][0]);
  CHECK(f64(rec + 3 * 8) == r.cloud.velocities[0][0]);
  CHECK(f64(rec + 6 * 8) == r.cloud.positions[1][0]);
  CHECK(f64(rec + 12 * 8) == r.params[0]);
  CHECK(f64(rec + 14 * 8) == r.tpcf[0]);
  CHECK(bytes.size() == rec + 18 * 8);
}

TEST_CASE(".eqcd error handling") {
  const Dataset d = sample_dataset(true, true, true);
  const std::string path = temp_path("err.eqcd"), bad = temp_path("bad.eqcd");
  save_dataset(path, d);
  const auto bytes = file_bytes(path);

  SUBCASE("truncated record") {
    write_bytes(bad, {bytes.begin(), bytes.end() - 8});
    CHECK_THROWS_WITH_AS(load_dataset(bad), doctest::Contains("truncated"), io::FormatError);
  }
  SUBCASE("truncated header") {
    write_bytes(bad, {bytes.begin(), bytes.begin() + 30});
    CHECK_THROWS_WITH_AS(load_dataset(bad), doctest::Contains("truncated"), io::FormatError);
  }
  SUBCASE("trailing bytes") {
    auto b = bytes;
    b.push_back(0);
    write_bytes(bad, b);
    CHECK_THROWS_AS(load_dataset(bad), io::FormatError);
  }
  SUBCASE("bad magic") {
    auto b = bytes;
    b[0] = 'X';
    write_bytes(bad, b);
    CHECK_THROWS_WITH_AS(load_dataset(bad), doctest::Contains("magic"), io::FormatError);
  }
  SUBCASE("bad version") {
    auto b = bytes;
    b[4] = 2;
    write_bytes(bad, b);
    CHECK_THROWS_WITH_AS(load_dataset(bad), doctest::Contains("version"), io::FormatError);
  }
  SUBCASE("tpcf flag set but records carry no vectors") {
    Dataset plain = sample_dataset(true, true, false);
    save_dataset(bad, plain);
    auto b = file_bytes(bad);
    // Set the tpcf flag and bin count, splice in edges, keep the short records.
    const std::uint32_t flags = kHasVelocities | kHasMasses | kHasTpcf | kPeriodic, bins = 4;
    std::memcpy(b.data() + 32, &bins, 4);
    std::memcpy(b.data() + 36, &flags, 4);
    std::uint32_t notes;
    std::memcpy(&notes, b.data() + 48, 4);
    const double e[5] = {1, 2, 4, 8, 16};
    b.insert(b.begin() + 52 + notes, reinterpret_cast<const char*>(e), reinterpret_cast<const char*>(e) + 40);
    write_bytes(bad, b);
    CHECK_THROWS_WITH_AS(load_dataset(bad), doctest::Contains("truncated"), io::FormatError);
  }
  SUBCASE("feature count disagrees with flags") {
    auto b = bytes;
    b[24] = 5;
    write_bytes(bad, b);
    CHECK_THROWS_WITH_AS(load_dataset(bad), doctest::Contains("n_features"), io::FormatError);
  }
  SUBCASE("records inconsistent with the header are rejected on save") {
    Dataset broken = d;
    broken.records[1].params.pop_back();
    CHECK_THROWS_AS(save_dataset(bad, broken), std::invalid_argument);
    broken = d;
    broken.records[2].cloud.velocities.clear();
    CHECK_THROWS_AS(save_dataset(bad, broken), std::invalid_argument);
  }
  CHECK_THROWS_AS(load_dataset(temp_path("missing.eqcd")), std::runtime_error);
}

TEST_CASE("streaming reader gives random access to records") {
  const Dataset d = sample_dataset(false, false, true, 6, 9);
  const std::string path = temp_path("stream.eqcd");
  save_dataset(path, d);
  DatasetReader r(path);
  CHECK(r.size() == 6);
  expect_same(r.read(4), d.records[4]);
  expect_same(r.read(0), d.records[0]);
  const auto batch = r.read_batch({5, 1, 5});
  REQUIRE(batch.size() == 3);
  expect_same(batch[0], d.records[5]);
  expect_same(batch[1], d.records[1]);
  CHECK_THROWS_AS(r.read(6), std::out_of_range);
  CHECK(read_header(path).tpcf_bins == 4);
}

TEST_CASE("synthetic clouds: determinism, bounds, and membership fraction") {
  SyntheticSpec s;
  s.n_points = 400;
  s.amplitude = 0.3;
  s.velocities = true;
  s.seed = 9;
  const SyntheticCloud a = synthesize_cloud(s), b = synthesize_cloud(s);
  CHECK(bitwise_equal(a.cloud.positions, b.cloud.positions));
  CHECK(bitwise_equal(a.cloud.velocities, b.cloud.velocities));
  CHECK_NOTHROW(a.cloud.validate());
  CHECK(a.label == 0.3);

  // Binomial membership: the pooled fraction over 20 seeds lies within 2 sigma
  // of A with probability 0.954. Ten independent 20-seed blocks are checked
  // and at least 8 must pass (probability 0.99 for an unbiased generator).
  const double trials = 20.0 * 400.0;
  const double sd = std::sqrt(trials * 0.3 * 0.7);
  int within = 0;
  double grand = 0.0;
  for (std::uint64_t block = 0; block < 10; ++block) {
    std::size_t clustered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      s.seed = block * 20 + seed;
      clustered += synthesize_cloud(s).n_clustered;
    }
    grand += double(clustered);
    if (std::abs(double(clustered) - 0.3 * trials) <= 2.0 * sd) ++within;
  }
  CHECK(within >= 8);
  CHECK(std::abs(grand - 0.3 * 10 * trials) <= 3.0 * std::sqrt(10.0) * sd);

  s.process = Process::Poisson;
  CHECK(synthesize_cloud(s).n_clustered == 0);
  s.process = Process::NeymanScott;
  s.amplitude = 1.5;
  CHECK_THROWS_AS(synthesize_cloud(s), std::invalid_argument);
  s.amplitude = 0.5;
  s.cluster_scale = 300.0;
  CHECK_THROWS_AS(synthesize_cloud(s), std::invalid_argument);
}

TEST_CASE("synthetic clustering shows in the 2PCF") {
  SyntheticSpec s;
  s.n_points = 5000;
  s.amplitude = 0.0;
  s.seed = 1;
  const TpcfVector null = two_point_correlation(synthesize_cloud(s).cloud);
  const auto sigma = null.null_sigma();
  for (std::size_t i = 0; i < null.size(); ++i) CHECK(std::abs(null.xi[i]) <= 3.0 * sigma[i]);

  // One tight clump: nearly every pair sits at small separation.
  s.n_points = 300;
  s.amplitude = 1.0;
  s.n_parents = 1;
  s.cluster_scale = 1.0;
  const TpcfVector clump = two_point_correlation(synthesize_cloud(s).cloud, log_bin_edges(2, 0.5, 10.0));
  CHECK(clump.xi[0] > 1e4);
  CHECK(clump.xi[1] > 1e4);

  // Clustered against pure Poisson at small r, five seeds.
  const std::vector<double> small{1.0, 30.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticSpec p;
    p.n_points = 2000;
    p.seed = seed;
    p.amplitude = 0.0;
    const double xi_poisson = two_point_correlation(synthesize_cloud(p).cloud, small).xi[0];
    p.amplitude = 0.5;
    const double xi_clustered = two_point_correlation(synthesize_cloud(p).cloud, small).xi[0];
    CHECK(xi_clustered > xi_poisson);
  }
}

TEST_CASE("synthetic dataset") {
  SyntheticDatasetSpec spec;
  spec.n_clouds = 5;
  spec.cloud.n_points = 64;
  spec.seed = 3;
  const Dataset d = make_synthetic_dataset(spec);
  CHECK(d.header.n_clouds == 5);
  CHECK(d.header.n_params == 1);
  CHECK(d.header.tpcf_bins == 24);
  CHECK(d.header.param_names() == std::vector<std::string>{"clustering_amplitude"});
  std::set<double> labels;
  for (const auto& r : d.records) {
    CHECK(r.params[0] >= 0.0);
    CHECK(r.params[0] <= 1.0);
    labels.insert(r.params[0]);
  }
  CHECK(labels.size() == 5);
  const Dataset again = make_synthetic_dataset(spec);
  for (std::size_t k = 0; k < 5; ++k) expect_same(d.records[k], again.records[k]);
}

TEST_CASE("split_dataset") {
  const Split s = split_dataset(12384, 2048, 512, 512, 7);
  CHECK(s.train.size() == 2048);
  CHECK(s.val.size() == 512);
  CHECK(s.test.size() == 512);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 3072);
  CHECK(*all.rbegin() < 12384);

  const Split p = split_dataset(3, 1, 1, 1, 1);
  std::set<std::size_t> perm{p.train[0], p.val[0], p.test[0]};
  CHECK(perm == std::set<std::size_t>{0, 1, 2});

  const Split again = split_dataset(12384, 2048, 512, 512, 7);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  CHECK(split_dataset(12384, 2048, 512, 512, 8).train != s.train);
  CHECK_THROWS_AS(split_dataset(10, 5, 5, 1, 0), std::invalid_argument);

  const std::string path = temp_path("split.json");
  save_split(path, s);
  const Split back = load_split(path);
  CHECK(back.train == s.train);
  CHECK(back.val == s.val);
  CHECK(back.test == s.test);
  CHECK(back.seed == 7);
  CHECK(back.total == 12384);
}

TEST_CASE("Standardizer") {
  // Already standardized columns: identity.
  const Standardizer id = Standardizer::fit({{-1.0, 1.0}, {1.0, -1.0}});
  CHECK(id.forward({0.5, -2.0}) == std::vector<double>{0.5, -2.0});

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({3.0 + 2.0 * g(rng), -1.0 + 0.1 * g(rng)});
  const Standardizer s = Standardizer::fit(rows);
  double m0 = 0, m1 = 0, v0 = 0, v1 = 0;
  for (const auto& r : rows) {
    const auto z = s.forward(r);
    m0 += z[0] / 200, m1 += z[1] / 200;
    v0 += z[0] * z[0] / 200, v1 += z[1] * z[1] / 200;
    const auto back = s.inverse(z);
    CHECK(back[0] == doctest::Approx(r[0]).epsilon(1e-14));
    CHECK(back[1] == doctest::Approx(r[1]).epsilon(1e-14));
  }
  CHECK(std::abs(m0) < 1e-12);
  CHECK(std::abs(m1) < 1e-12);
  CHECK(v0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v1 == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(Standardizer::fit({{1.0, 2.0}, {1.0, 3.0}}), std::invalid_argument);
  const Standardizer c = Standardizer::fit({{1.0, 2.0}, {1.0, 3.0}}, true);
  CHECK(c.forward({1.0, 2.5}) == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(Standardizer::fit({}), std::invalid_argument);
  CHECK_THROWS_AS(s.forward({1.0}), std::invalid_argument);
}
