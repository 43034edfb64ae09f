#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "galgraph/config.hpp"
#include "galgraph/data.hpp"
#include "galgraph/models.hpp"
#include "galgraph/nn.hpp"

namespace galgraph::train {

// One cloud ready for a model: precomputed graph and a standardized target
// (graph task: 1 x n_targets; node task: N x 3 velocities).
struct Example {
  ModelInput input;
  Matrix target;
};

// Targets and 2PCF context are standardized with statistics fit on the
// training indices only.
struct TaskData {
  Task task = Task::Graph;
  std::vector<Example> train, val, test;
  data::Standardizer targets;       // graph task, per parameter
  double velocity_scale = 1.0;      // node task, one isotropic scale
  data::Standardizer context;       // full 2PCF, before slicing
  std::vector<std::size_t> context_bins;
  std::vector<std::string> target_names;
};

// Fills n_targets and tpcf_dim from the dataset and checks task compatibility.
void configure_for_dataset(ModelConfig& c, const data::DatasetHeader& h);

TaskData prepare_task(const ModelConfig& c, data::DatasetReader& reader, const data::Split& split);
std::vector<Example> prepare_examples(const ModelConfig& c, const std::vector<data::Record>& records,
                                      const TaskData& stats);

struct TrainOptions {
  std::string out_dir;       // checkpoints and metrics.csv; empty = keep in memory
  bool resume = true;        // continue from out_dir/last.ckpt when present
  bool overfit_one_batch = false;
  std::int64_t stop_after = -1;  // stop at this step as if interrupted; -1 runs to n_steps
  std::function<void(const std::string&)> log;
};

struct MetricsRow {
  std::int64_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double best_val = 0.0;
};

struct TrainResult {
  std::vector<MetricsRow> metrics;
  double best_val = 0.0;
  std::int64_t best_step = 0;
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
  nn::ParameterStore best_params;
};

/// Batch of training indices used at `step`; a pure function of (seed, step).
std::vector<std::size_t> batch_indices(std::uint64_t seed, std::int64_t step, std::size_t n_train, std::size_t batch);

/// Mean over the batch of per-example MSE, and its parameter gradient.
/// Examples are processed in parallel and gradients summed in batch order.
double loss_and_grad(const Model& model, const std::vector<const Example*>& batch, nn::TensorMap* grads);
double mean_loss(const Model& model, const std::vector<Example>& examples);

TrainResult train(Model& model, const TaskData& task, const TrainOptions& opts);

struct Metrics {
  std::size_t n_examples = 0;
  std::size_t n_params = 0;
  double loss = 0.0;                 // mean over targets, standardized units
  std::vector<std::string> names;    // "omega_m", ... or "velocity"
  std::vector<double> mse;           // standardized units
  std::vector<double> mse_raw;       // original units
};

Metrics evaluate(const Model& model, const std::vector<Example>& examples, const TaskData& task);
/// MSE of predicting the training-set mean (zero in standardized units).
Metrics constant_baseline(const std::vector<Example>& examples, const TaskData& task, std::size_t n_params = 0);
std::string metrics_json(const Metrics& m, const ModelConfig& c, const std::string& split);

// Checkpoints hold the config text, parameters, optimizer moments and the
// standardization statistics.
nn::Checkpoint make_checkpoint(const Model& model, const TaskData& task, const nn::AdamW* opt, std::int64_t step);
std::unique_ptr<Model> model_from_checkpoint(const nn::Checkpoint& ckpt);
void restore_standardizers(const nn::Checkpoint& ckpt, TaskData& task);

// Equivariance audit on free-space copies of the clouds.
struct EquivClass {
  std::string name;
  std::size_t trials = 0;
  double max_deviation = 0.0;  // relative to the largest output magnitude
  bool passed = true;
};
struct EquivReport {
  std::string output;  // "graph (invariant)" or "node (equivariant)"
  std::vector<EquivClass> classes;
  bool passed = true;
};
EquivReport equivariance_check(const Model& model, const std::vector<PointCloud>& clouds, std::size_t n_trials,
                               double tolerance, std::uint64_t seed);
std::string equiv_json(const EquivReport& r, double tolerance);

}  // namespace galgraph::train
