#include <stdexcept>

#include "galgraph/train.hpp"

namespace galgraph::train {

namespace {

Matrix row_of(const std::vector<double>& v) { return Matrix(1, v.size(), v); }

std::vector<double> values_of(const nn::Checkpoint& c, const std::string& name) {
  auto it = c.tensors.find(name);
  if (it == c.tensors.end()) return {};
  const Matrix& m = it->second;
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace

nn::Checkpoint make_checkpoint(const Model& model, const TaskData& task, const nn::AdamW* opt, std::int64_t step) {
  nn::Checkpoint c;
  c.config = to_text(model.config());
  c.step = step;
  for (const auto& [name, m] : model.params().items()) c.tensors.emplace("param/" + name, m);
  if (opt) {
    for (const auto& [name, m] : opt->m) c.tensors.emplace("adam/m/" + name, m);
    for (const auto& [name, m] : opt->v) c.tensors.emplace("adam/v/" + name, m);
  }
  c.tensors.emplace("meta/target_mean", row_of(task.targets.mean()));
  c.tensors.emplace("meta/target_scale", row_of(task.targets.scale()));
  c.tensors.emplace("meta/velocity_scale", Matrix(1, 1, task.velocity_scale));
  c.tensors.emplace("meta/context_mean", row_of(task.context.mean()));
  c.tensors.emplace("meta/context_scale", row_of(task.context.scale()));
  std::vector<double> bins(task.context_bins.begin(), task.context_bins.end());
  c.tensors.emplace("meta/context_bins", row_of(bins));
  return c;
}

std::unique_ptr<Model> model_from_checkpoint(const nn::Checkpoint& ckpt) {
  auto model = make_model(parse_config(ckpt.config, "<checkpoint>"));
  for (auto& [name, m] : model->params().items()) {
    auto it = ckpt.tensors.find("param/" + name);
    if (it == ckpt.tensors.end())
      throw std::runtime_error("checkpoint does not match architecture " + to_string(model->config().architecture) +
                               ": missing parameter " + name);
    if (!it->second.same_shape(m))
      throw std::runtime_error("checkpoint parameter " + name + " has shape " + it->second.shape_string() +
                               ", model expects " + m.shape_string());
    m = it->second;
  }
  std::size_t stored = 0;
  for (const auto& [name, m] : ckpt.tensors)
    if (name.rfind("param/", 0) == 0) ++stored;
  if (stored != model->params().items().size())
    throw std::runtime_error("checkpoint holds parameters the model does not have");
  return model;
}

void restore_standardizers(const nn::Checkpoint& ckpt, TaskData& task) {
  task.task = parse_config(ckpt.config, "<checkpoint>").task;
  task.targets = data::Standardizer(values_of(ckpt, "meta/target_mean"), values_of(ckpt, "meta/target_scale"));
  const auto vs = values_of(ckpt, "meta/velocity_scale");
  task.velocity_scale = vs.empty() ? 1.0 : vs[0];
  task.context = data::Standardizer(values_of(ckpt, "meta/context_mean"), values_of(ckpt, "meta/context_scale"));
  task.context_bins.clear();
  for (double b : values_of(ckpt, "meta/context_bins")) task.context_bins.push_back(static_cast<std::size_t>(b));
}

}  // namespace galgraph::train
