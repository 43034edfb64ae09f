#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "galgraph/data.hpp"

namespace galgraph::data {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw io::FormatError(msg);
}

DatasetHeader read_header_from(std::istream& in) {
  char magic[4];
  io::read_bytes(in, magic, 4, "magic");
  require(std::equal(magic, magic + 4, kMagic), "not an .eqcd file (bad magic)");
  DatasetHeader h;
  h.version = io::read<std::uint32_t>(in, "version");
  require(h.version == kVersion, "unsupported .eqcd version " + std::to_string(h.version));
  h.n_clouds = io::read<std::uint64_t>(in, "n_clouds");
  h.n_points = io::read<std::uint64_t>(in, "n_points");
  h.n_features = io::read<std::uint32_t>(in, "n_features");
  h.n_params = io::read<std::uint32_t>(in, "n_params");
  h.tpcf_bins = io::read<std::uint32_t>(in, "tpcf_bins");
  h.flags = io::read<std::uint32_t>(in, "flags");
  h.box_side = io::read<double>(in, "box_side");
  h.notes = io::read_string(in, "notes");
  if (h.has(kHasTpcf)) {
    require(h.tpcf_bins > 0 && h.tpcf_bins < (1u << 20), "implausible tpcf_bins");
    h.bin_edges.resize(h.tpcf_bins + 1);
    io::read_bytes(in, h.bin_edges.data(), h.bin_edges.size() * sizeof(double), "bin edges");
  }
  h.validate();
  return h;
}

Record decode(const DatasetHeader& h, const std::vector<double>& buf) {
  Record r;
  r.cloud.box = {h.box_side, h.has(kPeriodic)};
  const std::size_t n = h.n_points, f = h.n_features;
  r.cloud.positions.resize(n);
  if (h.has(kHasVelocities)) r.cloud.velocities.resize(n);
  if (h.has(kHasMasses)) r.cloud.masses.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = buf.data() + i * f;
    r.cloud.positions[i] = {row[0], row[1], row[2]};
    std::size_t c = 3;
    if (h.has(kHasVelocities)) {
      r.cloud.velocities[i] = {row[c], row[c + 1], row[c + 2]};
      c += 3;
    }
    if (h.has(kHasMasses)) r.cloud.masses[i] = row[c];
  }
  const double* rest = buf.data() + n * f;
  r.params.assign(rest, rest + h.n_params);
  if (h.has(kHasTpcf)) r.tpcf.assign(rest + h.n_params, rest + h.n_params + h.tpcf_bins);
  return r;
}

}  // namespace

std::uint32_t DatasetHeader::expected_features() const {
  return 3 + (has(kHasVelocities) ? 3 : 0) + (has(kHasMasses) ? 1 : 0);
}

std::size_t DatasetHeader::record_doubles() const {
  return static_cast<std::size_t>(n_points) * n_features + n_params + (has(kHasTpcf) ? tpcf_bins : 0);
}

std::size_t DatasetHeader::header_bytes() const {
  return 4 + 4 + 8 + 8 + 4 * 4 + 8 + 4 + notes.size() + (has(kHasTpcf) ? bin_edges.size() * 8 : 0);
}

std::vector<std::string> DatasetHeader::param_names() const {
  std::istringstream lines(notes);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("params:", 0) != 0) continue;
    std::vector<std::string> names;
    std::istringstream items(line.substr(7));
    for (std::string item; std::getline(items, item, ',');) {
      const auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
      if (b != std::string::npos) names.push_back(item.substr(b, e - b + 1));
    }
    return names;
  }
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < n_params; ++i) names.push_back("param" + std::to_string(i));
  return names;
}

void DatasetHeader::validate() const {
  require(version == kVersion, "unsupported .eqcd version " + std::to_string(version));
  require((flags & ~0xFu) == 0, "unknown flag bits set");
  require(n_clouds > 0 && n_points > 0, "n_clouds and n_points must be positive");
  require(n_features == expected_features(),
          "n_features = " + std::to_string(n_features) + " disagrees with flags (expected " +
              std::to_string(expected_features()) + ")");
  require(box_side > 0.0, "box_side must be positive");
  if (has(kHasTpcf)) {
    require(tpcf_bins > 0, "tpcf flag set but tpcf_bins = 0");
    require(bin_edges.size() == tpcf_bins + 1, "expected tpcf_bins + 1 bin edges");
    for (std::size_t i = 1; i < bin_edges.size(); ++i) require(bin_edges[i] > bin_edges[i - 1], "bin edges not increasing");
  } else {
    require(tpcf_bins == 0 && bin_edges.empty(), "tpcf_bins set without the tpcf flag");
  }
  require(param_names().size() == n_params, "notes name a different number of params than n_params");
}

DatasetHeader header_for(const std::vector<Record>& records, DatasetHeader h) {
  if (records.empty()) throw std::invalid_argument("header_for: no records");
  const Record& r0 = records.front();
  h.n_clouds = records.size();
  h.n_points = r0.cloud.size();
  h.n_params = static_cast<std::uint32_t>(r0.params.size());
  h.box_side = r0.cloud.box.side;
  h.flags = (r0.cloud.box.periodic ? kPeriodic : 0u) | (r0.cloud.has_velocities() ? kHasVelocities : 0u) |
            (r0.cloud.has_masses() ? kHasMasses : 0u) | (r0.tpcf.empty() ? 0u : kHasTpcf);
  h.tpcf_bins = static_cast<std::uint32_t>(r0.tpcf.size());
  if (r0.tpcf.empty()) h.bin_edges.clear();
  h.n_features = h.expected_features();
  return h;
}

void save_dataset(const std::string& path, const Dataset& d) {
  const DatasetHeader& h = d.header;
  h.validate();
  if (d.records.size() != h.n_clouds)
    throw std::invalid_argument("save_dataset: header says " + std::to_string(h.n_clouds) + " clouds, have " +
                                std::to_string(d.records.size()));
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    io::write_bytes(out, kMagic, 4);
    io::write(out, h.version);
    io::write(out, h.n_clouds);
    io::write(out, h.n_points);
    io::write(out, h.n_features);
    io::write(out, h.n_params);
    io::write(out, h.tpcf_bins);
    io::write(out, h.flags);
    io::write(out, h.box_side);
    io::write_string(out, h.notes);
    if (h.has(kHasTpcf)) io::write_bytes(out, h.bin_edges.data(), h.bin_edges.size() * sizeof(double));
    std::vector<double> buf(h.record_doubles());
    for (std::size_t k = 0; k < d.records.size(); ++k) {
      const Record& r = d.records[k];
      const auto bad = [&](const char* what) {
        return std::invalid_argument("save_dataset: record " + std::to_string(k) + " " + what + " disagrees with header");
      };
      if (r.cloud.size() != h.n_points) throw bad("point count");
      if (r.cloud.has_velocities() != h.has(kHasVelocities)) throw bad("velocities");
      if (r.cloud.has_masses() != h.has(kHasMasses)) throw bad("masses");
      if (r.params.size() != h.n_params) throw bad("params");
      if (r.tpcf.size() != (h.has(kHasTpcf) ? h.tpcf_bins : 0u)) throw bad("tpcf");
      if (r.cloud.box.side != h.box_side || r.cloud.box.periodic != h.has(kPeriodic)) throw bad("box");
      std::size_t c = 0;
      for (std::size_t i = 0; i < h.n_points; ++i) {
        for (double v : r.cloud.positions[i]) buf[c++] = v;
        if (h.has(kHasVelocities))
          for (double v : r.cloud.velocities[i]) buf[c++] = v;
        if (h.has(kHasMasses)) buf[c++] = r.cloud.masses[i];
      }
      for (double v : r.params) buf[c++] = v;
      for (double v : r.tpcf) buf[c++] = v;
      io::write_bytes(out, buf.data(), buf.size() * sizeof(double));
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

DatasetReader::DatasetReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw std::runtime_error("cannot open " + path);
  header_ = read_header_from(in_);
  data_offset_ = static_cast<std::size_t>(in_.tellg());
  const auto size = std::filesystem::file_size(path);
  const std::size_t expect = data_offset_ + size_t(header_.n_clouds) * header_.record_doubles() * sizeof(double);
  if (size < expect)
    throw io::FormatError(path + ": truncated file (" + std::to_string(size) + " bytes, header implies " +
                          std::to_string(expect) + ")");
  if (size > expect) throw io::FormatError(path + ": " + std::to_string(size - expect) + " trailing bytes after the last record");
}

Record DatasetReader::read(std::size_t index) {
  if (index >= size()) throw std::out_of_range("DatasetReader: record " + std::to_string(index) + " of " + std::to_string(size()));
  std::vector<double> buf(header_.record_doubles());
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(data_offset_ + index * buf.size() * sizeof(double)));
  io::read_bytes(in_, buf.data(), buf.size() * sizeof(double), "record");
  return decode(header_, buf);
}

std::vector<Record> DatasetReader::read_batch(const std::vector<std::size_t>& indices) {
  std::vector<Record> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(read(i));
  return out;
}

DatasetHeader read_header(const std::string& path) { return DatasetReader(path).header(); }

Dataset load_dataset(const std::string& path) {
  DatasetReader r(path);
  Dataset d;
  d.header = r.header();
  d.records.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) d.records.push_back(r.read(i));
  return d;
}

}  // namespace galgraph::data
