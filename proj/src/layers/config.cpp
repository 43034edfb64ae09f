#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "galgraph/config.hpp"

namespace galgraph {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <class T>
T parse_number(const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("expected a real number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

template <class E>
E parse_enum(const std::string& v, const std::map<std::string, E>& names) {
  auto it = names.find(lower(v));
  if (it != names.end()) return it->second;
  std::string allowed;
  for (const auto& [n, _] : names) allowed += (allowed.empty() ? "" : ", ") + n;
  throw ConfigError("unknown value '" + v + "' (allowed: " + allowed + ")");
}

const std::map<std::string, Aggregation> kAggregations = {
    {"sum", Aggregation::Sum}, {"mean", Aggregation::Mean}, {"max", Aggregation::Max}};

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::string s = v;
  for (char& c : s)
    if (c == '(' || c == ')' || c == '[' || c == ']' || c == ',') c = ' ';
  std::istringstream in(s);
  std::string item;
  while (in >> item) out.push_back(parse_number<int>(item));
  if (out.empty()) throw ConfigError("expected a list of integers, got '" + v + "'");
  return out;
}

using Setter = std::function<void(ModelConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = {
      {"architecture",
       [](ModelConfig& c, const std::string& v) {
         c.architecture = parse_enum<Architecture>(v, {{"gnn", Architecture::Gnn},
                                                       {"egnn", Architecture::Egnn},
                                                       {"segnn", Architecture::Segnn},
                                                       {"nequip", Architecture::Nequip},
                                                       {"pointnet", Architecture::PointNet},
                                                       {"pointnet++", Architecture::PointNet},
                                                      {"tpcf_mlp", Architecture::TpcfMlp}});
       }},
      {"d_hidden", [](ModelConfig& c, const std::string& v) { c.d_hidden = parse_number<int>(v); }},
      {"n_layers", [](ModelConfig& c, const std::string& v) { c.n_layers = parse_number<int>(v); }},
      {"mlp_readout_widths", [](ModelConfig& c, const std::string& v) { c.mlp_readout_widths = parse_int_list(v); }},
      {"residual", [](ModelConfig& c, const std::string& v) { c.residual = parse_bool(v); }},
      {"scalar_activation",
       [](ModelConfig&, const std::string& v) {
         if (lower(v) != "gelu") throw ConfigError("only gelu is supported, got '" + v + "'");
       }},
      {"gate_activation",
       [](ModelConfig&, const std::string& v) {
         if (lower(v) != "sigmoid") throw ConfigError("only sigmoid is supported, got '" + v + "'");
       }},
      {"spherical_harmonic_norm",
       [](ModelConfig&, const std::string& v) {
         if (lower(v) != "integral") throw ConfigError("only integral normalization is supported, got '" + v + "'");
       }},
      {"message_passing_steps", [](ModelConfig& c, const std::string& v) { c.message_passing_steps = parse_number<int>(v); }},
      {"k", [](ModelConfig& c, const std::string& v) { c.k = parse_number<int>(v); }},
      {"n_radial_basis", [](ModelConfig& c, const std::string& v) { c.n_radial_basis = parse_number<int>(v); }},
      {"radial_cutoff", [](ModelConfig& c, const std::string& v) { c.radial_cutoff = parse_double(v); }},
      {"l_max", [](ModelConfig& c, const std::string& v) { c.l_max = parse_number<int>(v); }},
      {"d_hidden_steerable", [](ModelConfig& c, const std::string& v) { c.d_hidden_steerable = parse_number<int>(v); }},
      {"message_passing_agg",
       [](ModelConfig& c, const std::string& v) { c.message_passing_agg = parse_enum(v, kAggregations); }},
      {"readout_agg", [](ModelConfig& c, const std::string& v) { c.readout_agg = parse_enum(v, kAggregations); }},
      {"task",
       [](ModelConfig& c, const std::string& v) {
         c.task = parse_enum<Task>(v, {{"graph", Task::Graph}, {"node", Task::Node}});
       }},
      {"use_velocities", [](ModelConfig& c, const std::string& v) { c.use_velocities = parse_bool(v); }},
      {"velocities_as_steerable",
       [](ModelConfig& c, const std::string& v) { c.velocities_as_steerable = parse_bool(v); }},
      {"tpcf_context",
       [](ModelConfig& c, const std::string& v) {
         c.tpcf_context = parse_enum<TpcfContext>(
             v, {{"none", TpcfContext::None}, {"full", TpcfContext::Full}, {"small", TpcfContext::Small},
                 {"large", TpcfContext::Large}});
       }},
      {"tpcf_dim", [](ModelConfig& c, const std::string& v) { c.tpcf_dim = parse_number<int>(v); }},
      {"n_targets", [](ModelConfig& c, const std::string& v) { c.n_targets = parse_number<int>(v); }},
      {"coordinate_scaling",
       [](ModelConfig& c, const std::string& v) {
         c.coordinate_scaling = parse_enum<CoordinateScaling>(
             v, {{"zscore", CoordinateScaling::ZScore}, {"isotropic", CoordinateScaling::Isotropic},
                 {"none", CoordinateScaling::None}});
       }},
      {"egnn_c", [](ModelConfig& c, const std::string& v) { c.egnn_c = parse_double(v); }},
      {"attention",
       [](ModelConfig& c, const std::string& v) {
         c.attention = parse_enum<Attention>(v, {{"none", Attention::None},
                                                 {"global", Attention::Global},
                                                 {"local_global", Attention::LocalGlobal},
                                                 {"invariant", Attention::Invariant}});
       }},
      {"n_heads", [](ModelConfig& c, const std::string& v) { c.n_heads = parse_number<int>(v); }},
      {"n_downsamples", [](ModelConfig& c, const std::string& v) { c.n_downsamples = parse_number<int>(v); }},
      {"d_downsampling_factor",
       [](ModelConfig& c, const std::string& v) { c.d_downsampling_factor = parse_number<int>(v); }},
      {"k_downsample", [](ModelConfig& c, const std::string& v) { c.k_downsample = parse_number<int>(v); }},
      {"r_downsample", [](ModelConfig& c, const std::string& v) { c.r_downsample = parse_double(v); }},
      {"combine_hierarchies_method",
       [](ModelConfig& c, const std::string& v) {
         c.combine_hierarchies_method = parse_enum<Combine>(v, {{"mean", Combine::Mean}, {"concat", Combine::Concat}});
       }},
      {"fps_seed", [](ModelConfig& c, const std::string& v) { c.fps_seed = parse_number<std::uint64_t>(v); }},
      {"learning_rate", [](ModelConfig& c, const std::string& v) { c.learning_rate = parse_double(v); }},
      {"decay", [](ModelConfig& c, const std::string& v) { c.decay = parse_double(v); }},
      {"n_steps", [](ModelConfig& c, const std::string& v) { c.n_steps = parse_number<int>(v); }},
      {"batch_size", [](ModelConfig& c, const std::string& v) { c.batch_size = parse_number<int>(v); }},
      {"eval_interval", [](ModelConfig& c, const std::string& v) { c.eval_interval = parse_number<int>(v); }},
      {"seed", [](ModelConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); }},
  };
  return s;
}

}  // namespace

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::Gnn: return "gnn";
    case Architecture::Egnn: return "egnn";
    case Architecture::Segnn: return "segnn";
    case Architecture::Nequip: return "nequip";
    case Architecture::PointNet: return "pointnet";
    case Architecture::TpcfMlp: return "tpcf_mlp";
  }
  return "?";
}

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::Sum: return "sum";
    case Aggregation::Mean: return "mean";
    case Aggregation::Max: return "max";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(d_hidden, "d_hidden");
  positive(n_layers, "n_layers");
  positive(message_passing_steps, "message_passing_steps");
  positive(k, "k");
  positive(n_radial_basis, "n_radial_basis");
  positive(n_heads, "n_heads");
  positive(n_targets, "n_targets");
  positive(n_steps + 1, "n_steps + 1");
  positive(batch_size, "batch_size");
  positive(eval_interval, "eval_interval");
  for (int w : mlp_readout_widths) positive(w, "mlp_readout_widths entries");
  if (radial_cutoff <= 0.0) throw ConfigError("radial_cutoff must be positive");
  if (egnn_c < 0.0) throw ConfigError("egnn_c must be positive (or 0 for 1/k)");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (decay < 0.0) throw ConfigError("decay must be non-negative");
  if (steerable()) {
    if (l_max < 0 || l_max > 2) throw ConfigError("l_max must be 0, 1 or 2");
    if (message_passing_agg == Aggregation::Max)
      throw ConfigError("max aggregation is not equivariant for steerable features; use sum or mean");
  }
  if (attention != Attention::None) {
    if (architecture != Architecture::Gnn) throw ConfigError("attention aggregation is only available for gnn");
    if (d_hidden % n_heads != 0) throw ConfigError("d_hidden must be divisible by n_heads");
  }
  if (architecture == Architecture::PointNet) {
    positive(n_downsamples, "n_downsamples");
    positive(k_downsample, "k_downsample");
    if (d_downsampling_factor < 2) throw ConfigError("d_downsampling_factor must be at least 2");
  }
  if (velocities_as_steerable && !use_velocities)
    throw ConfigError("velocities_as_steerable requires use_velocities = true");
  if (architecture == Architecture::TpcfMlp && (tpcf_context == TpcfContext::None || task == Task::Node))
    throw ConfigError("tpcf_mlp needs tpcf_context = full, small or large on the graph task");
  if (tpcf_context != TpcfContext::None && task == Task::Node)
    throw ConfigError("tpcf_context applies to the graph task only");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void set_config_value(ModelConfig& c, const std::string& key, const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown key '" + key + "'");
  it->second(c, value);
}

ModelConfig parse_config(const std::string& text, const std::string& source) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + body + "'");
    const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      set_config_value(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str(), path);
}

std::string to_text(const ModelConfig& c) {
  std::ostringstream o;
  o.precision(17);
  auto b = [](bool v) { return v ? "true" : "false"; };
  const char* ctx[] = {"none", "full", "small", "large"};
  const char* attn[] = {"none", "global", "local_global", "invariant"};
  const char* scaling[] = {"zscore", "isotropic", "none"};
  o << "architecture = " << to_string(c.architecture) << "\n"
    << "d_hidden = " << c.d_hidden << "\n"
    << "n_layers = " << c.n_layers << "\n"
    << "mlp_readout_widths = ";
  for (std::size_t i = 0; i < c.mlp_readout_widths.size(); ++i) o << (i ? "," : "") << c.mlp_readout_widths[i];
  o << "\n"
    << "residual = " << b(c.residual) << "\n"
    << "message_passing_steps = " << c.message_passing_steps << "\n"
    << "k = " << c.k << "\n"
    << "n_radial_basis = " << c.n_radial_basis << "\n"
    << "radial_cutoff = " << c.radial_cutoff << "\n"
    << "l_max = " << c.l_max << "\n"
    << "d_hidden_steerable = " << c.d_hidden_steerable << "\n"
    << "message_passing_agg = " << to_string(c.message_passing_agg) << "\n"
    << "readout_agg = " << to_string(c.readout_agg) << "\n"
    << "task = " << (c.task == Task::Graph ? "graph" : "node") << "\n"
    << "use_velocities = " << b(c.use_velocities) << "\n"
    << "velocities_as_steerable = " << b(c.velocities_as_steerable) << "\n"
    << "tpcf_context = " << ctx[static_cast<int>(c.tpcf_context)] << "\n"
    << "tpcf_dim = " << c.tpcf_dim << "\n"
    << "n_targets = " << c.n_targets << "\n"
    << "coordinate_scaling = " << scaling[static_cast<int>(c.coordinate_scaling)] << "\n"
    << "egnn_c = " << c.egnn_c << "\n"
    << "attention = " << attn[static_cast<int>(c.attention)] << "\n"
    << "n_heads = " << c.n_heads << "\n"
    << "n_downsamples = " << c.n_downsamples << "\n"
    << "d_downsampling_factor = " << c.d_downsampling_factor << "\n"
    << "k_downsample = " << c.k_downsample << "\n"
    << "r_downsample = " << c.r_downsample << "\n"
    << "combine_hierarchies_method = " << (c.combine_hierarchies_method == Combine::Mean ? "mean" : "concat") << "\n"
    << "fps_seed = " << c.fps_seed << "\n"
    << "learning_rate = " << c.learning_rate << "\n"
    << "decay = " << c.decay << "\n"
    << "n_steps = " << c.n_steps << "\n"
    << "batch_size = " << c.batch_size << "\n"
    << "eval_interval = " << c.eval_interval << "\n"
    << "seed = " << c.seed << "\n";
  return o.str();
}

}  // namespace galgraph
