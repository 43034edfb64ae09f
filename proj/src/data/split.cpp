#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "galgraph/data.hpp"
#include "json.hpp"

namespace galgraph::data {

Split split_dataset(std::size_t total, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                    std::uint64_t seed) {
  if (n_train + n_val + n_test > total)
    throw std::invalid_argument("split_dataset: requested " + std::to_string(n_train + n_val + n_test) + " of " +
                                std::to_string(total) + " clouds");
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  // Explicit Fisher-Yates so the permutation does not depend on the standard library.
  std::mt19937_64 rng(seed);
  for (std::size_t i = total; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  Split s;
  s.seed = seed;
  s.total = total;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val + n_test));
  return s;
}

void save_split(const std::string& path, const Split& s) {
  nlohmann::json j{{"seed", s.seed}, {"total", s.total}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << "\n";
}

Split load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto j = nlohmann::json::parse(in);
  Split s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.total = j.at("total").get<std::size_t>();
  s.train = j.at("train").get<std::vector<std::size_t>>();
  s.val = j.at("val").get<std::vector<std::size_t>>();
  s.test = j.at("test").get<std::vector<std::size_t>>();
  return s;
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) throw std::invalid_argument("Standardizer: mean/scale size mismatch");
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows, bool allow_constant) {
  if (rows.empty()) throw std::invalid_argument("Standardizer: no training rows");
  const std::size_t d = rows.front().size();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw std::invalid_argument("Standardizer: ragged rows");
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  std::vector<double> scale(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(rows.size()));
    if (!(sd > 0.0)) {
      if (!allow_constant) throw std::invalid_argument("Standardizer: column " + std::to_string(j) + " has zero variance");
      scale[j] = 1.0;
    } else {
      scale[j] = sd;
    }
  }
  return {mean, scale};
}

std::vector<double> Standardizer::forward(const std::vector<double>& x) const {
  if (x.size() != dim()) throw std::invalid_argument("Standardizer: dimension mismatch");
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean_[j]) / scale_[j];
  return z;
}

std::vector<double> Standardizer::inverse(const std::vector<double>& z) const {
  if (z.size() != dim()) throw std::invalid_argument("Standardizer: dimension mismatch");
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * scale_[j] + mean_[j];
  return x;
}

}  // namespace galgraph::data
