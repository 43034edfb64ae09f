#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "galgraph/harmonics.hpp"
#include "galgraph/train.hpp"
#include "json.hpp"

namespace galgraph::train {

namespace {

struct Transform {
  Mat3 r{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  Vec3 t{};
};

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  double w = g(rng), x = g(rng), y = g(rng), z = g(rng);
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

Vec3 rotate_vec(const Mat3& r, const Vec3& v) {
  Vec3 o{};
  for (int a = 0; a < 3; ++a) o[a] = r[a][0] * v[0] + r[a][1] * v[1] + r[a][2] * v[2];
  return o;
}

Transform draw(const std::string& kind, double side, std::mt19937_64& rng) {
  Transform x;
  std::uniform_real_distribution<double> u(-side, side);
  const bool rotate = kind == "rotation" || kind == "reflection" || kind == "o3+translation";
  const bool reflect = kind == "reflection" || (kind == "o3+translation" && (rng() & 1u));
  const bool translate = kind == "translation" || kind == "o3+translation";
  if (rotate) x.r = random_rotation(rng);
  if (reflect)
    for (auto& row : x.r)
      for (double& v : row) v = -v;
  if (translate) x.t = {u(rng), u(rng), u(rng)};
  return x;
}

PointCloud transformed(const PointCloud& c, const Transform& x) {
  PointCloud o = c;
  for (auto& p : o.positions) {
    const Vec3 q = rotate_vec(x.r, p);
    p = {q[0] + x.t[0], q[1] + x.t[1], q[2] + x.t[2]};
  }
  for (auto& v : o.velocities) v = rotate_vec(x.r, v);
  return o;
}

double max_abs(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s = std::max(s, std::abs(m.data()[i]));
  return s;
}

}  // namespace

EquivReport equivariance_check(const Model& model, const std::vector<PointCloud>& clouds, std::size_t n_trials,
                               double tolerance, std::uint64_t seed) {
  if (clouds.empty()) throw std::invalid_argument("equivariance_check: no clouds");
  const ModelConfig& c = model.config();
  const bool node = c.task == Task::Node;
  std::vector<PointCloud> free = clouds;
  for (auto& f : free) f.box.periodic = false;
  const std::vector<double> context(c.tpcf_context == TpcfContext::None ? 0 : static_cast<std::size_t>(c.tpcf_dim), 0.0);
  std::vector<Matrix> base;
  for (const auto& f : free) base.push_back(model.predict(prepare_input(f, c, context)));

  EquivReport rep;
  rep.output = node ? "node (equivariant)" : "graph (invariant)";
  std::mt19937_64 rng(seed);
  for (const std::string kind : {"identity", "rotation", "reflection", "translation", "o3+translation"}) {
    EquivClass cls;
    cls.name = kind;
    cls.trials = kind == "identity" ? std::min<std::size_t>(n_trials, clouds.size()) : n_trials;
    for (std::size_t t = 0; t < cls.trials; ++t) {
      const std::size_t i = t % free.size();
      const Transform x = draw(kind, free[i].box.side, rng);
      const Matrix out = model.predict(prepare_input(transformed(free[i], x), c, context));
      Matrix expect = base[i];
      if (node)
        for (std::size_t r = 0; r < expect.rows(); ++r) {
          const Vec3 v = rotate_vec(x.r, Vec3{expect(r, 0), expect(r, 1), expect(r, 2)});
          for (int a = 0; a < 3; ++a) expect(r, a) = v[a];
        }
      double diff = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k) diff = std::max(diff, std::abs(out.data()[k] - expect.data()[k]));
      const double denom = std::max(max_abs(expect), 1e-300);
      cls.max_deviation = std::max(cls.max_deviation, diff / denom);
    }
    cls.passed = cls.max_deviation <= tolerance;
    rep.passed = rep.passed && cls.passed;
    rep.classes.push_back(cls);
  }
  return rep;
}

std::string equiv_json(const EquivReport& r, double tolerance) {
  nlohmann::ordered_json j;
  j["output"] = r.output;
  j["tolerance"] = tolerance;
  j["passed"] = r.passed;
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : r.classes)
    classes.push_back({{"name", c.name}, {"trials", c.trials}, {"max_deviation", c.max_deviation}, {"passed", c.passed}});
  return j.dump(2);
}

}  // namespace galgraph::train
