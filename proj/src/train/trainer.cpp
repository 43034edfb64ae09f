#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "galgraph/parallel.hpp"
#include "galgraph/train.hpp"

namespace galgraph::train {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double example_loss(const Model& model, const Example& e, nn::TensorMap* grads) {
  ad::Tape tape;
  nn::Binding p(tape, model.params(), grads != nullptr);
  ad::Var pred = model.forward(p, e.input);
  if (!pred.value().same_shape(e.target))
    throw std::runtime_error("model output " + pred.value().shape_string() + " does not match target " +
                             e.target.shape_string());
  ad::Var loss = ad::mse(pred, tape.constant(e.target));
  if (grads) {
    tape.backward(loss);
    p.accumulate_grads(*grads);
  }
  return loss.value()(0, 0);
}

std::string csv_header() { return "step,lr,train_loss,val_loss,best_val"; }

std::string csv_row(const MetricsRow& r) {
  std::ostringstream o;
  o << std::setprecision(17) << r.step << ',' << r.lr << ',' << r.train_loss << ',' << r.val_loss << ','
    << r.best_val;
  return o.str();
}

std::vector<MetricsRow> read_metrics(const fs::path& path, std::int64_t max_step) {
  std::vector<MetricsRow> rows;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream s(line);
    MetricsRow r;
    char c;
    s >> r.step >> c >> r.lr >> c >> r.train_loss >> c >> r.val_loss >> c >> r.best_val;
    if (!s) throw std::runtime_error(path.string() + ": malformed metrics row: " + line);
    if (r.step <= max_step) rows.push_back(r);
  }
  return rows;
}

void write_metrics(const fs::path& path, const std::vector<MetricsRow>& rows) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << csv_header() << '\n';
    for (const auto& r : rows) out << csv_row(r) << '\n';
  }
  fs::rename(tmp, path);
}

void load_params(nn::ParameterStore& store, const nn::Checkpoint& c, const std::string& prefix, bool required) {
  for (auto& [name, m] : store.items()) {
    auto it = c.tensors.find(prefix + name);
    if (it == c.tensors.end()) {
      if (required) throw std::runtime_error("checkpoint is missing " + prefix + name);
      continue;
    }
    if (!it->second.same_shape(m)) throw std::runtime_error("checkpoint tensor " + prefix + name + " has wrong shape");
    m = it->second;
  }
}

void load_moments(nn::TensorMap& into, const nn::Checkpoint& c, const std::string& prefix) {
  into.clear();
  for (const auto& [name, m] : c.tensors)
    if (name.rfind(prefix, 0) == 0) into.emplace(name.substr(prefix.size()), m);
}

}  // namespace

std::vector<std::size_t> batch_indices(std::uint64_t seed, std::int64_t step, std::size_t n_train, std::size_t batch) {
  if (n_train == 0) throw std::invalid_argument("batch_indices: empty training set");
  std::mt19937_64 rng(mix(seed ^ mix(static_cast<std::uint64_t>(step))));
  std::vector<std::size_t> idx(n_train);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t b = std::min(batch, n_train);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n_train - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(b);
  return idx;
}

double loss_and_grad(const Model& model, const std::vector<const Example*>& batch, nn::TensorMap* grads) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<double> losses(batch.size());
  std::vector<nn::TensorMap> per(grads ? batch.size() : 0);
  std::vector<std::string> errors(batch.size());
  GALGRAPH_PARALLEL_FOR_DYNAMIC
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      losses[i] = example_loss(model, *batch[i], grads ? &per[i] : nullptr);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) total += losses[i];
  if (grads) {
    grads->clear();
    for (const auto& [name, m] : model.params().items()) grads->emplace(name, Matrix(m.rows(), m.cols(), 0.0));
    for (std::size_t i = 0; i < batch.size(); ++i)
      for (const auto& [name, g] : per[i]) {
        Matrix& dst = (*grads)[name];
        for (std::size_t k = 0; k < g.size(); ++k) dst.data()[k] += inv * g.data()[k];
      }
  }
  return total * inv;
}

double mean_loss(const Model& model, const std::vector<Example>& examples) {
  std::vector<const Example*> all;
  for (const auto& e : examples) all.push_back(&e);
  return loss_and_grad(model, all, nullptr);
}

TrainResult train(Model& model, const TaskData& task, const TrainOptions& opts) {
  const ModelConfig& c = model.config();
  if (task.train.empty()) throw std::invalid_argument("train: empty training set");
  if (c.n_steps < 0) throw ConfigError("n_steps must be non-negative");
  const auto batch = static_cast<std::size_t>(c.batch_size);
  const std::int64_t total = c.n_steps;
  const std::int64_t last = opts.stop_after >= 0 ? std::min<std::int64_t>(opts.stop_after, total) : total;
  auto log = [&](const std::string& s) {
    if (opts.log) opts.log(s);
  };

  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<const Example*> b;
    for (auto i : idx) b.push_back(&task.train[i]);
    return b;
  };
  const auto fixed = gather(batch_indices(c.seed, 0, task.train.size(), batch));
  std::vector<const Example*> all_train = gather([&] {
    std::vector<std::size_t> v(task.train.size());
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
  }());
  const auto& reference = opts.overfit_one_batch ? fixed : all_train;
  const auto& val_set = task.val.empty() ? task.train : task.val;

  nn::AdamW opt;
  opt.weight_decay = c.decay;
  TrainResult res;
  res.best_val = std::numeric_limits<double>::infinity();
  std::int64_t start = 0;

  const bool persist = !opts.out_dir.empty();
  const fs::path dir(opts.out_dir);
  const fs::path last_path = dir / "last.ckpt", best_path = dir / "best.ckpt", csv_path = dir / "metrics.csv";
  if (persist) fs::create_directories(dir);

  auto checkpoint = [&](std::int64_t step) {
    auto ck = make_checkpoint(model, task, &opt, step);
    ck.tensors["meta/best_val"] = Matrix(1, 1, res.best_val);
    ck.tensors["meta/best_step"] = Matrix(1, 1, static_cast<double>(res.best_step));
    return ck;
  };

  if (persist && opts.resume && fs::exists(last_path)) {
    const auto ck = nn::load_checkpoint(last_path.string());
    if (ck.config != to_text(c))
      throw ConfigError(last_path.string() + " was written with a different config; remove it or disable resume");
    load_params(model.params(), ck, "param/", true);
    load_moments(opt.m, ck, "adam/m/");
    load_moments(opt.v, ck, "adam/v/");
    opt.step = ck.step;
    start = ck.step;
    res.best_val = ck.tensors.at("meta/best_val")(0, 0);
    res.best_step = static_cast<std::int64_t>(ck.tensors.at("meta/best_step")(0, 0));
    res.best_params = model.params();
    if (fs::exists(best_path)) load_params(res.best_params, nn::load_checkpoint(best_path.string()), "param/", true);
    res.metrics = read_metrics(csv_path, start);
    log("resumed from step " + std::to_string(start));
  }

  res.initial_train_loss = loss_and_grad(model, reference, nullptr);

  auto evaluate_at = [&](std::int64_t step, double lr, double train_loss) {
    MetricsRow r{step, lr, train_loss, mean_loss(model, val_set), 0.0};
    if (r.val_loss < res.best_val) {
      res.best_val = r.val_loss;
      res.best_step = step;
      res.best_params = model.params();
      if (persist) nn::save_checkpoint(best_path.string(), checkpoint(step));
    }
    r.best_val = res.best_val;
    res.metrics.push_back(r);
    if (persist) {
      nn::save_checkpoint(last_path.string(), checkpoint(step));
      write_metrics(csv_path, res.metrics);
    }
    std::ostringstream o;
    o << "step " << step << " lr " << lr << " train " << train_loss << " val " << r.val_loss;
    log(o.str());
  };

  if (start == 0) evaluate_at(0, nn::cosine_decay(0, total, c.learning_rate), res.initial_train_loss);

  nn::TensorMap grads;
  for (std::int64_t step = start + 1; step <= last; ++step) {
    const double lr = nn::cosine_decay(step - 1, total, c.learning_rate);
    const auto b = opts.overfit_one_batch ? fixed : gather(batch_indices(c.seed, step, task.train.size(), batch));
    const double loss = loss_and_grad(model, b, &grads);
    if (!std::isfinite(loss)) throw std::runtime_error("training diverged at step " + std::to_string(step));
    opt.update(model.params(), grads, lr);
    if (step % c.eval_interval == 0 || step == total) evaluate_at(step, lr, loss);
  }
  if (persist && last > start && last < total && last % c.eval_interval != 0)
    nn::save_checkpoint(last_path.string(), checkpoint(last));

  res.final_train_loss = loss_and_grad(model, reference, nullptr);
  return res;
}

}  // namespace galgraph::train
