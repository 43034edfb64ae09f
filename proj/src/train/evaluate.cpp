#include <stdexcept>

#include "galgraph/parallel.hpp"
#include "galgraph/train.hpp"
#include "json.hpp"

namespace galgraph::train {

namespace {

// Per-column squared-error sums against `pred` (zero when null).
Metrics score(const std::vector<Example>& examples, const TaskData& task, const std::vector<Matrix>* preds) {
  if (examples.empty()) throw std::invalid_argument("evaluate: empty split");
  Metrics m;
  m.n_examples = examples.size();
  const bool node = task.task == Task::Node;
  const std::size_t n_out = node ? 1 : examples.front().target.cols();
  std::vector<double> sse(n_out, 0.0);
  std::vector<double> count(n_out, 0.0);
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const Matrix& t = examples[e].target;
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t k = 0; k < t.cols(); ++k) {
        const double d = (preds ? (*preds)[e](r, k) : 0.0) - t(r, k);
        const std::size_t slot = node ? 0 : k;
        sse[slot] += d * d;
        count[slot] += 1.0;
      }
  }
  for (std::size_t k = 0; k < n_out; ++k) {
    m.mse.push_back(sse[k] / count[k]);
    const double s = node ? task.velocity_scale : (k < task.targets.dim() ? task.targets.scale()[k] : 1.0);
    m.mse_raw.push_back(m.mse.back() * s * s);
    m.loss += m.mse.back();
    m.names.push_back(k < task.target_names.size() ? task.target_names[k] : "target" + std::to_string(k));
  }
  m.loss /= static_cast<double>(n_out);
  return m;
}

}  // namespace

Metrics evaluate(const Model& model, const std::vector<Example>& examples, const TaskData& task) {
  std::vector<Matrix> preds(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
  std::vector<std::string> errors(examples.size());
  GALGRAPH_PARALLEL_FOR_DYNAMIC
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      preds[i] = model.predict(examples[i].input);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (!preds[i].same_shape(examples[i].target))
      throw std::runtime_error("model output " + preds[i].shape_string() + " does not match target " +
                               examples[i].target.shape_string());
  Metrics m = score(examples, task, &preds);
  m.n_params = model.params().count();
  return m;
}

Metrics constant_baseline(const std::vector<Example>& examples, const TaskData& task, std::size_t n_params) {
  Metrics m = score(examples, task, nullptr);
  m.n_params = n_params;
  return m;
}

std::string metrics_json(const Metrics& m, const ModelConfig& c, const std::string& split) {
  nlohmann::ordered_json j;
  j["architecture"] = to_string(c.architecture);
  j["task"] = c.task == Task::Graph ? "graph" : "node";
  j["split"] = split;
  j["n_examples"] = m.n_examples;
  j["n_params"] = m.n_params;
  j["loss"] = m.loss;
  for (std::size_t k = 0; k < m.names.size(); ++k) j["mse_" + m.names[k]] = m.mse[k];
  for (std::size_t k = 0; k < m.names.size(); ++k) j["mse_" + m.names[k] + "_raw"] = m.mse_raw[k];
  return j.dump(2);
}

}  // namespace galgraph::train
