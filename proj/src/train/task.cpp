#include <cmath>
#include <stdexcept>

#include "galgraph/statistics.hpp"
#include "galgraph/train.hpp"

namespace galgraph::train {

namespace {

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::vector<data::Record> read(data::DatasetReader& reader, const std::vector<std::size_t>& idx) {
  for (auto i : idx)
    if (i >= reader.size())
      throw std::out_of_range("split refers to cloud " + std::to_string(i) + " but the dataset has " +
                              std::to_string(reader.size()));
  return reader.read_batch(idx);
}

}  // namespace

void configure_for_dataset(ModelConfig& c, const data::DatasetHeader& h) {
  if (c.task == Task::Graph) {
    if (h.n_params == 0) throw ConfigError("graph task needs parameters in the dataset");
    c.n_targets = static_cast<int>(h.n_params);
  } else {
    if (!h.has(data::kHasVelocities)) throw ConfigError("node task needs velocities in the dataset");
    if (c.use_velocities) throw ConfigError("node task predicts velocities; set use_velocities = false");
  }
  if (c.use_velocities && !h.has(data::kHasVelocities))
    throw ConfigError("use_velocities is set but the dataset has no velocities");
  if (c.tpcf_context != TpcfContext::None) {
    if (!h.has(data::kHasTpcf)) throw ConfigError("tpcf_context is set but the dataset has no 2PCF vectors");
    c.tpcf_dim = static_cast<int>(tpcf_slice_indices(h.bin_edges, c.tpcf_context).size());
  }
  c.validate();
}

std::vector<Example> prepare_examples(const ModelConfig& c, const std::vector<data::Record>& records,
                                      const TaskData& stats) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    std::vector<double> context;
    if (c.tpcf_context != TpcfContext::None) {
      const auto z = stats.context.forward(r.tpcf);
      for (auto i : stats.context_bins) context.push_back(z[i]);
    }
    Example e;
    e.input = prepare_input(r.cloud, c, std::move(context));
    if (c.task == Task::Graph) {
      const auto z = stats.targets.forward(r.params);
      e.target = Matrix(1, z.size(), z);
    } else {
      e.target = Matrix(r.cloud.size(), 3);
      for (std::size_t i = 0; i < r.cloud.size(); ++i)
        for (int a = 0; a < 3; ++a) e.target(i, a) = r.cloud.velocities[i][a] / stats.velocity_scale;
    }
    out.push_back(std::move(e));
  }
  return out;
}

TaskData prepare_task(const ModelConfig& c, data::DatasetReader& reader, const data::Split& split) {
  if (split.train.empty()) throw std::invalid_argument("prepare_task: empty training split");
  const auto& h = reader.header();
  TaskData t;
  t.task = c.task;
  const auto train = read(reader, split.train);
  if (c.task == Task::Graph) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : train) rows.push_back(r.params);
    t.targets = data::Standardizer::fit(rows);
    for (const auto& n : h.param_names()) t.target_names.push_back(lower(n));
  } else {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : train)
      for (const auto& v : r.cloud.velocities) sum += dot(v, v), count += 3;
    t.velocity_scale = std::sqrt(sum / static_cast<double>(count));
    if (!(t.velocity_scale > 0.0)) throw std::invalid_argument("prepare_task: training velocities are all zero");
    t.target_names = {"velocity"};
  }
  if (c.tpcf_context != TpcfContext::None) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : train) rows.push_back(r.tpcf);
    t.context = data::Standardizer::fit(rows, true);
    t.context_bins = tpcf_slice_indices(h.bin_edges, c.tpcf_context);
  }
  t.train = prepare_examples(c, train, t);
  t.val = prepare_examples(c, read(reader, split.val), t);
  t.test = prepare_examples(c, read(reader, split.test), t);
  return t;
}

}  // namespace galgraph::train
