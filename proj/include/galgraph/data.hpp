#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "galgraph/binary_io.hpp"
#include "galgraph/geometry.hpp"

namespace galgraph::data {

// .eqcd layout (little-endian):
//   "EQCD" u32 version  u64 n_clouds  u64 n_points
//   u32 n_features  u32 n_params  u32 tpcf_bins  u32 flags  f64 box_side
//   u32 notes_len + notes bytes
//   f64[tpcf_bins + 1] bin edges          (flags & kHasTpcf)
//   n_clouds records, each: f64[n_points * n_features] features (row-major,
//   columns x,y,z[,vx,vy,vz][,mass]), f64[n_params] params, f64[tpcf_bins] tpcf
inline constexpr char kMagic[4] = {'E', 'Q', 'C', 'D'};
inline constexpr std::uint32_t kVersion = 1;

enum Flags : std::uint32_t {
  kHasVelocities = 1u << 0,
  kHasMasses = 1u << 1,
  kHasTpcf = 1u << 2,
  kPeriodic = 1u << 3,
};

struct DatasetHeader {
  std::uint32_t version = kVersion;
  std::uint64_t n_clouds = 0;
  std::uint64_t n_points = 0;
  std::uint32_t n_features = 3;
  std::uint32_t n_params = 0;
  std::uint32_t tpcf_bins = 0;
  std::uint32_t flags = kPeriodic;
  double box_side = 1.0;
  std::string notes;  // free text; "params: a,b" names the parameter columns
  std::vector<double> bin_edges;

  bool has(Flags f) const { return (flags & f) != 0; }
  std::uint32_t expected_features() const;
  std::size_t record_doubles() const;
  std::size_t header_bytes() const;
  std::vector<std::string> param_names() const;
  void validate() const;
};

struct Record {
  PointCloud cloud;
  std::vector<double> params;
  std::vector<double> tpcf;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Record> records;
};

// Fills counts and flags from the records; notes and bin edges are kept.
DatasetHeader header_for(const std::vector<Record>& records, DatasetHeader base);

void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

/// Random-access streaming reader: holds the header, reads records on demand.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);
  const DatasetHeader& header() const { return header_; }
  std::size_t size() const { return static_cast<std::size_t>(header_.n_clouds); }
  Record read(std::size_t index);
  std::vector<Record> read_batch(const std::vector<std::size_t>& indices);

 private:
  std::string path_;
  std::ifstream in_;
  DatasetHeader header_;
  std::size_t data_offset_ = 0;
};

DatasetHeader read_header(const std::string& path);

// Neyman-Scott clouds: each point joins a cluster with probability A; cluster
// members are Gaussian(sigma_c) around uniform parents, wrapped periodically.
enum class Process { Poisson, NeymanScott };

struct SyntheticSpec {
  std::size_t n_points = 256;
  double box_side = 1000.0;
  Process process = Process::NeymanScott;
  std::size_t n_parents = 8;
  double cluster_scale = 20.0;
  double amplitude = 0.5;
  std::uint64_t seed = 0;
  // Velocities: members fall toward their parent at rate `infall`, plus
  // isotropic Gaussian noise of scale `velocity_noise`.
  bool velocities = false;
  double infall = 1.0;
  double velocity_noise = 1.0;

  void validate() const;
};

struct SyntheticCloud {
  PointCloud cloud;
  double label = 0.0;          // the amplitude A
  std::size_t n_clustered = 0;
};

SyntheticCloud synthesize_cloud(const SyntheticSpec& spec);

struct SyntheticDatasetSpec {
  std::size_t n_clouds = 64;
  SyntheticSpec cloud;
  double amplitude_min = 0.0, amplitude_max = 1.0;
  bool tpcf = true;
  std::uint64_t seed = 0;
};

/// Cloud i uses amplitude U(min, max) and a seed derived from (seed, i).
Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec);

struct Split {
  std::vector<std::size_t> train, val, test;
  std::uint64_t seed = 0;
  std::size_t total = 0;
};

Split split_dataset(std::size_t total, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                    std::uint64_t seed);
void save_split(const std::string& path, const Split& s);
Split load_split(const std::string& path);

/// Per-column z-score fit on training rows.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> scale);
  /// Zero-variance columns throw unless `allow_constant`, in which case they
  /// are only centred.
  static Standardizer fit(const std::vector<std::vector<double>>& rows, bool allow_constant = false);

  std::vector<double> forward(const std::vector<double>& x) const;
  std::vector<double> inverse(const std::vector<double>& z) const;
  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }

 private:
  std::vector<double> mean_, scale_;
};

}  // namespace galgraph::data
