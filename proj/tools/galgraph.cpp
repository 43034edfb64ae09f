#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "galgraph/data.hpp"
#include "galgraph/parallel.hpp"
#include "galgraph/statistics.hpp"
#include "galgraph/train.hpp"
#include "json.hpp"

using namespace galgraph;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDataDirEnv = "GALGRAPH_DATA_DIR";

// Relative paths that do not exist locally are looked up in $GALGRAPH_DATA_DIR.
std::string resolve_data(const std::string& path) {
  if (path.empty()) throw std::invalid_argument("no dataset given (use --data)");
  if (fs::exists(path) || fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv(kDataDirEnv)) {
    const fs::path p = fs::path(dir) / path;
    if (fs::exists(p)) return p.string();
  }
  return path;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Config file, then --set key=value, then per-key flags.
struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;

  void add_to(CLI::App* app) {
    app->add_option("--config", file, "hyperparameter file (key = value lines)");
    app->add_option("--set", sets, "override as key=value (repeatable)");
    for (const auto& key : config_keys()) app->add_option("--" + key, flags[key], "config key " + key);
  }

  ModelConfig build() const {
    ModelConfig c = file.empty() ? ModelConfig{} : load_config(file);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [k, v] : flags)
      if (!v.empty()) set_config_value(c, k, v);
    return c;
  }
};

struct SplitArgs {
  std::string file;
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--split", file, "split JSON (overrides the size options)");
    app->add_option("--n-train", n_train, "training clouds (0: everything not in val/test)");
    app->add_option("--n-val", n_val, "validation clouds (0: 10% of the data)");
    app->add_option("--n-test", n_test, "test clouds (0: 10% of the data)");
    app->add_option("--split-seed", seed, "seed of the random split");
  }

  data::Split build(std::size_t total) const {
    if (!file.empty()) return data::load_split(file);
    const std::size_t val = n_val ? n_val : std::max<std::size_t>(1, total / 10);
    const std::size_t test = n_test ? n_test : std::max<std::size_t>(1, total / 10);
    if (val + test >= total) throw std::invalid_argument("dataset too small for the requested split");
    const std::size_t train = n_train ? n_train : total - val - test;
    return data::split_dataset(total, train, val, test, seed);
  }
};

void set_target_names(train::TaskData& task, const data::DatasetHeader& h) {
  task.target_names.clear();
  if (task.task == Task::Node) {
    task.target_names = {"velocity"};
    return;
  }
  for (const auto& n : h.param_names()) task.target_names.push_back(lower(n));
}

const std::vector<std::size_t>& subset(const data::Split& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  throw std::invalid_argument("unknown subset '" + name + "' (train, val, test)");
}

// ---------------------------------------------------------------------------

struct TrainCmd {
  ConfigArgs config;
  SplitArgs split;
  std::string data, out = "run";
  bool overfit = false, no_resume = false, quiet = false;
  std::int64_t stop_after = -1;

  int run() const {
    ModelConfig c = config.build();
    data::DatasetReader reader(resolve_data(data));
    train::configure_for_dataset(c, reader.header());
    const auto s = split.build(reader.size());
    fs::create_directories(out);
    data::save_split((fs::path(out) / "split.json").string(), s);
    write_text((fs::path(out) / "config.txt").string(), to_text(c));
    const auto task = train::prepare_task(c, reader, s);
    auto model = make_model(c);
    train::TrainOptions o;
    o.out_dir = out;
    o.resume = !no_resume;
    o.overfit_one_batch = overfit;
    o.stop_after = stop_after;
    if (!quiet) o.log = [](const std::string& line) { std::cerr << line << '\n'; };
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = train::train(*model, task, o);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::ordered_json j;
    j["architecture"] = to_string(c.architecture);
    j["n_params"] = model->params().count();
    j["best_step"] = res.best_step;
    j["best_val"] = res.best_val;
    j["initial_train_loss"] = res.initial_train_loss;
    j["final_train_loss"] = res.final_train_loss;
    j["seconds"] = secs;
    std::cout << j.dump(2) << '\n';
    return 0;
  }
};

struct EvalCmd {
  std::string checkpoint, data, split_file, which = "test", out;
  bool baseline = false;

  int run() const {
    const auto ck = nn::load_checkpoint(checkpoint);
    auto model = train::model_from_checkpoint(ck);
    const ModelConfig& c = model->config();
    data::DatasetReader reader(resolve_data(data));
    ModelConfig check = c;
    train::configure_for_dataset(check, reader.header());
    if (check.n_targets != c.n_targets || check.tpcf_dim != c.tpcf_dim)
      throw std::runtime_error("checkpoint was trained on a dataset with a different layout");
    const std::string sf = split_file.empty() ? (fs::path(checkpoint).parent_path() / "split.json").string() : split_file;
    const auto s = data::load_split(sf);
    train::TaskData task;
    train::restore_standardizers(ck, task);
    set_target_names(task, reader.header());
    const auto examples = train::prepare_examples(c, reader.read_batch(subset(s, which)), task);
    const auto m = baseline ? train::constant_baseline(examples, task, 0) : train::evaluate(*model, examples, task);
    write_text(out, train::metrics_json(m, c, which) + "\n");
    return 0;
  }
};

struct EquivCmd {
  std::string checkpoint, data;
  ConfigArgs config;
  std::size_t trials = 100, n_clouds = 4, n_points = 128;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  std::string out;

  int run() const {
    std::unique_ptr<Model> model;
    if (!checkpoint.empty()) {
      model = train::model_from_checkpoint(nn::load_checkpoint(checkpoint));
    } else {
      ModelConfig c = config.build();
      if (c.tpcf_context != TpcfContext::None && c.tpcf_dim == 0)
        c.tpcf_dim = static_cast<int>(tpcf_slice_indices(default_bin_edges(), c.tpcf_context).size());
      model = make_model(c);
    }
    std::vector<PointCloud> clouds;
    if (!data.empty()) {
      data::DatasetReader reader(resolve_data(data));
      for (std::size_t i = 0; i < std::min(n_clouds, reader.size()); ++i) clouds.push_back(reader.read(i).cloud);
    } else {
      for (std::size_t i = 0; i < n_clouds; ++i) {
        data::SyntheticSpec s;
        s.n_points = n_points;
        s.seed = seed + i;
        s.velocities = model->config().use_velocities;
        clouds.push_back(data::synthesize_cloud(s).cloud);
      }
    }
    const auto rep = train::equivariance_check(*model, clouds, trials, tolerance, seed);
    write_text(out, train::equiv_json(rep, tolerance) + "\n");
    return rep.passed ? 0 : 1;
  }
};

struct ScalingCmd {
  ConfigArgs config;
  std::string data, out, summary;
  std::vector<std::size_t> sizes = {64, 128, 256, 512};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::size_t n_val = 64, n_test = 128;
  std::uint64_t split_seed = 0;
  bool quiet = false;

  int run() const {
    const ModelConfig base = config.build();
    data::DatasetReader reader(resolve_data(data));
    ModelConfig c0 = base;
    train::configure_for_dataset(c0, reader.header());
    const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
    if (largest + n_val + n_test > reader.size())
      throw std::invalid_argument("scaling: largest size " + std::to_string(largest) + " plus val/test exceeds " +
                                  std::to_string(reader.size()) + " clouds");
    const auto pool = data::split_dataset(reader.size(), largest, n_val, n_test, split_seed);

    std::ostringstream rows, agg;
    rows << std::setprecision(10) << "train_size,seed,test_loss,constant_loss,best_val,best_step,seconds\n";
    agg << std::setprecision(10) << "train_size,n_seeds,mean_test_loss,std_test_loss,min_test_loss,max_test_loss\n";
    for (auto size : sizes) {
      std::vector<double> losses;
      for (auto seed : seeds) {
        ModelConfig c = c0;
        c.seed = base.seed + seed;
        data::Split s = pool;
        s.train.resize(size);
        const auto task = train::prepare_task(c, reader, s);
        auto model = make_model(c);
        train::TrainOptions o;
        if (!quiet)
          o.log = [&](const std::string& l) { std::cerr << "[n=" << size << " seed=" << seed << "] " << l << '\n'; };
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = train::train(*model, task, o);
        model->params() = res.best_params;
        const double test = train::evaluate(*model, task.test, task).loss;
        const double constant = train::constant_baseline(task.test, task).loss;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows << size << ',' << seed << ',' << test << ',' << constant << ',' << res.best_val << ',' << res.best_step
             << ',' << std::fixed << std::setprecision(3) << secs << std::defaultfloat << std::setprecision(10) << '\n';
        losses.push_back(test);
      }
      const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
      double var = 0.0;
      for (double l : losses) var += (l - mean) * (l - mean);
      const double sd = losses.size() > 1 ? std::sqrt(var / static_cast<double>(losses.size() - 1)) : 0.0;
      agg << size << ',' << losses.size() << ',' << mean << ',' << sd << ','
          << *std::min_element(losses.begin(), losses.end()) << ',' << *std::max_element(losses.begin(), losses.end())
          << '\n';
    }
    write_text(out, rows.str());
    if (!summary.empty()) write_text(summary, agg.str());
    return 0;
  }
};

struct TpcfCmd {
  std::string data, out;
  std::size_t index = 0;
  std::size_t bins = 24;
  double r_min = 0.5, r_max = 150.0;
  bool brute = false;

  int run() const {
    data::DatasetReader reader(resolve_data(data));
    if (index >= reader.size()) throw std::out_of_range("cloud index out of range");
    const auto cloud = reader.read(index).cloud;
    const auto edges = log_bin_edges(bins, r_min, r_max);
    const auto t = two_point_correlation(cloud, edges, !brute);
    const auto centers = t.centers();
    std::ostringstream o;
    o << std::setprecision(17) << "bin_lo,bin_hi,bin_center,DD,xi\n";
    for (std::size_t b = 0; b < t.xi.size(); ++b)
      o << edges[b] << ',' << edges[b + 1] << ',' << centers[b] << ',' << t.pair_counts[b] << ',' << t.xi[b] << '\n';
    write_text(out, o.str());
    return 0;
  }
};

struct SynthCmd {
  data::SyntheticDatasetSpec spec;
  std::string out, process = "neyman-scott";
  bool no_tpcf = false;

  int run() {
    if (out.empty()) throw std::invalid_argument("synth: --out is required");
    if (process == "poisson") spec.cloud.process = data::Process::Poisson;
    else if (process == "neyman-scott") spec.cloud.process = data::Process::NeymanScott;
    else throw std::invalid_argument("synth: unknown process '" + process + "' (poisson, neyman-scott)");
    spec.tpcf = !no_tpcf;
    data::save_dataset(out, data::make_synthetic_dataset(spec));
    std::cerr << "wrote " << spec.n_clouds << " clouds to " << out << '\n';
    return 0;
  }
};

struct InfoCmd {
  std::string data;

  int run() const {
    const auto path = resolve_data(data);
    const auto h = data::read_header(path);
    nlohmann::ordered_json j;
    j["path"] = path;
    j["version"] = h.version;
    j["n_clouds"] = h.n_clouds;
    j["n_points"] = h.n_points;
    j["n_features"] = h.n_features;
    j["n_params"] = h.n_params;
    j["param_names"] = h.param_names();
    j["velocities"] = h.has(data::kHasVelocities);
    j["masses"] = h.has(data::kHasMasses);
    j["periodic"] = h.has(data::kPeriodic);
    j["box_side"] = h.box_side;
    j["tpcf_bins"] = h.tpcf_bins;
    j["bin_edges"] = h.bin_edges;
    j["notes"] = h.notes;
    j["file_bytes"] = fs::file_size(path);
    // Opening a reader checks the file size against the header.
    data::DatasetReader check(path);
    std::cout << j.dump(2) << '\n';
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"galgraph: equivariant graph networks on galaxy point clouds"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (1 gives bitwise determinism)");

  TrainCmd train_cmd;
  auto* t = app.add_subcommand("train", "train a model and keep the best-validation checkpoint");
  train_cmd.config.add_to(t);
  train_cmd.split.add_to(t);
  t->add_option("--data", train_cmd.data, "dataset (.eqcd)")->required();
  t->add_option("--out", train_cmd.out, "output directory");
  t->add_flag("--overfit", train_cmd.overfit, "train on a single fixed batch");
  t->add_flag("--no-resume", train_cmd.no_resume, "ignore an existing last.ckpt");
  t->add_option("--stop-after", train_cmd.stop_after, "stop at this step (resume later)");
  t->add_flag("--quiet", train_cmd.quiet, "no progress log");

  EvalCmd eval_cmd;
  auto* e = app.add_subcommand("eval", "per-target MSE of a checkpoint on one split");
  e->add_option("--checkpoint", eval_cmd.checkpoint)->required();
  e->add_option("--data", eval_cmd.data, "dataset (.eqcd)")->required();
  e->add_option("--split", eval_cmd.split_file, "split JSON (default: split.json next to the checkpoint)");
  e->add_option("--subset", eval_cmd.which, "train, val or test");
  e->add_flag("--baseline", eval_cmd.baseline, "score the constant training-mean predictor instead");
  e->add_option("--out", eval_cmd.out, "output file (default stdout)");

  EquivCmd equiv_cmd;
  auto* q = app.add_subcommand("equiv-check", "audit invariance/equivariance under O(3) and translations");
  q->add_option("--checkpoint", equiv_cmd.checkpoint, "trained model (otherwise built from the config)");
  equiv_cmd.config.add_to(q);
  q->add_option("--data", equiv_cmd.data, "clouds to transform (default: synthetic)");
  q->add_option("--trials", equiv_cmd.trials, "random transforms per class");
  q->add_option("--tolerance", equiv_cmd.tolerance, "max relative deviation");
  q->add_option("--n-clouds", equiv_cmd.n_clouds);
  q->add_option("--n-points", equiv_cmd.n_points, "points per synthetic cloud");
  q->add_option("--transform-seed", equiv_cmd.seed, "seed of the random transforms and synthetic clouds");
  q->add_option("--out", equiv_cmd.out, "output file (default stdout)");

  ScalingCmd scaling_cmd;
  auto* s = app.add_subcommand("scaling", "test loss against training-set size");
  scaling_cmd.config.add_to(s);
  s->add_option("--data", scaling_cmd.data, "dataset (.eqcd)")->required();
  s->add_option("--sizes", scaling_cmd.sizes)->delimiter(',');
  s->add_option("--seeds", scaling_cmd.seeds)->delimiter(',');
  s->add_option("--n-val", scaling_cmd.n_val);
  s->add_option("--n-test", scaling_cmd.n_test);
  s->add_option("--split-seed", scaling_cmd.split_seed);
  s->add_option("--out", scaling_cmd.out, "per-run CSV (default stdout)");
  s->add_option("--summary", scaling_cmd.summary, "per-size summary CSV");
  s->add_flag("--quiet", scaling_cmd.quiet);

  TpcfCmd tpcf_cmd;
  auto* p = app.add_subcommand("tpcf", "two-point correlation function of one cloud");
  p->add_option("--data", tpcf_cmd.data, "dataset (.eqcd)")->required();
  p->add_option("--index", tpcf_cmd.index, "cloud index");
  p->add_option("--bins", tpcf_cmd.bins);
  p->add_option("--r-min", tpcf_cmd.r_min);
  p->add_option("--r-max", tpcf_cmd.r_max);
  p->add_flag("--brute-force", tpcf_cmd.brute, "direct pair loop instead of cell lists");
  p->add_option("--out", tpcf_cmd.out, "output CSV (default stdout)");

  SynthCmd synth_cmd;
  auto* y = app.add_subcommand("synth", "write a synthetic clustering-amplitude dataset");
  y->add_option("--out", synth_cmd.out)->required();
  y->add_option("--n-clouds", synth_cmd.spec.n_clouds);
  y->add_option("--n-points", synth_cmd.spec.cloud.n_points);
  y->add_option("--box-side", synth_cmd.spec.cloud.box_side);
  y->add_option("--process", synth_cmd.process, "neyman-scott or poisson");
  y->add_option("--n-parents", synth_cmd.spec.cloud.n_parents);
  y->add_option("--cluster-scale", synth_cmd.spec.cloud.cluster_scale);
  y->add_option("--amplitude-min", synth_cmd.spec.amplitude_min);
  y->add_option("--amplitude-max", synth_cmd.spec.amplitude_max);
  y->add_flag("--velocities", synth_cmd.spec.cloud.velocities);
  y->add_option("--infall", synth_cmd.spec.cloud.infall);
  y->add_option("--velocity-noise", synth_cmd.spec.cloud.velocity_noise);
  y->add_flag("--no-tpcf", synth_cmd.no_tpcf, "omit the precomputed 2PCF vectors");
  y->add_option("--seed", synth_cmd.spec.seed);

  InfoCmd info_cmd;
  auto* i = app.add_subcommand("convert-info", "describe a .eqcd file and verify its size");
  i->add_option("--data", info_cmd.data, "dataset (.eqcd)")->required();

  CLI11_PARSE(app, argc, argv);
  set_threads(threads);
  try {
    if (*t) return train_cmd.run();
    if (*e) return eval_cmd.run();
    if (*q) return equiv_cmd.run();
    if (*s) return scaling_cmd.run();
    if (*p) return tpcf_cmd.run();
    if (*y) return synth_cmd.run();
    if (*i) return info_cmd.run();
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}
