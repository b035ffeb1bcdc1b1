#include "xfersel/bundle_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "xfersel/error.hpp"

namespace xfersel {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array<char, 4> labels_magic{'X', 'L', 'B', 'L'};
constexpr std::array<char, 4> features_magic{'X', 'F', 'T', 'R'};
constexpr std::size_t header_prefix = 4 + 2 + 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[at + static_cast<std::size_t>(i)];
  return v;
}

std::vector<std::uint8_t> make_header(const std::array<char, 4>& magic,
                                      std::span<const std::uint64_t> dims) {
  std::vector<std::uint8_t> out(magic.begin(), magic.end());
  put_u16(out, binary_format_version);
  out.push_back(static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) put_u64(out, d);
  return out;
}

// Validates magic/version/ndim/length; returns dims.
std::vector<std::uint64_t> read_header(std::span<const std::uint8_t> bytes,
                                       const std::array<char, 4>& magic, std::size_t ndim,
                                       std::size_t element_size, const std::string& what) {
  const std::size_t header_size = header_prefix + 8 * ndim;
  if (bytes.size() < header_size) {
    throw error(error_code::corrupt_binary, what + ": truncated header");
  }
  if (!std::equal(magic.begin(), magic.end(), bytes.begin(),
                  [](char m, std::uint8_t b) { return static_cast<std::uint8_t>(m) == b; })) {
    throw error(error_code::corrupt_binary, what + ": bad magic");
  }
  const auto version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != binary_format_version) {
    throw error(error_code::corrupt_binary,
                what + ": unsupported version " + std::to_string(version));
  }
  if (bytes[6] != ndim) {
    throw error(error_code::corrupt_binary,
                what + ": ndim " + std::to_string(bytes[6]) + ", expected " +
                    std::to_string(ndim));
  }
  std::vector<std::uint64_t> dims(ndim);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = get_u64(bytes, header_prefix + 8 * i);
    if (dims[i] != 0 && count > (UINT64_MAX / element_size) / dims[i]) {
      throw error(error_code::corrupt_binary, what + ": dimension overflow");
    }
    count *= dims[i];
  }
  if (bytes.size() - header_size != count * element_size) {
    throw error(error_code::corrupt_binary,
                what + ": payload is " + std::to_string(bytes.size() - header_size) +
                    " bytes, header implies " + std::to_string(count * element_size));
  }
  return dims;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(error_code::io_failure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(error_code::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw error(error_code::io_failure, "write failed for " + path.string());
}

template <typename T>
T manifest_field(const ordered_json& m, const char* key) {
  if (!m.contains(key)) {
    throw error(error_code::invalid_manifest, std::string("manifest lacks '") + key + "'");
  }
  try {
    return m.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw error(error_code::invalid_manifest,
                std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace

std::vector<std::uint8_t> encode_labels(const label_mask_set& labels) {
  const std::array<std::uint64_t, 3> dims{labels.n_samples(), labels.height(), labels.width()};
  auto out = make_header(labels_magic, dims);
  const auto payload = labels.values();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::vector<std::uint8_t> encode_features(const pixel_feature_set& features) {
  const std::array<std::uint64_t, 4> dims{features.n_samples(), features.height(),
                                          features.width(), features.channels()};
  auto out = make_header(features_magic, dims);
  const auto payload = features.values();
  out.reserve(out.size() + payload.size() * 4);
  for (float v : payload) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

label_mask_set decode_labels(std::span<const std::uint8_t> bytes, std::string task_id,
                             std::uint8_t positive_class, const std::string& what) {
  const auto dims = read_header(bytes, labels_magic, 3, 1, what);
  const auto payload = bytes.subspan(header_prefix + 8 * 3);
  return {std::move(task_id), dims[0], dims[1], dims[2],
          std::vector<std::uint8_t>(payload.begin(), payload.end()), positive_class};
}

std::vector<float> decode_features(std::span<const std::uint8_t> bytes,
                                   const label_mask_set& labels, std::size_t& channels,
                                   const std::string& what) {
  const auto dims = read_header(bytes, features_magic, 4, 4, what);
  if (dims[0] != labels.n_samples() || dims[1] != labels.height() ||
      dims[2] != labels.width()) {
    throw error(error_code::shape_mismatch,
                what + ": features [" + std::to_string(dims[0]) + "," +
                    std::to_string(dims[1]) + "," + std::to_string(dims[2]) +
                    ",C] vs labels [" + std::to_string(labels.n_samples()) + "," +
                    std::to_string(labels.height()) + "," + std::to_string(labels.width()) +
                    "]");
  }
  channels = dims[3];
  const auto payload = bytes.subspan(header_prefix + 8 * 4);
  std::vector<float> values(payload.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | payload[4 * i + static_cast<std::size_t>(b)];
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

task_bundle load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::error_code ec;
  if (!fs::is_regular_file(manifest_path, ec)) {
    throw error(error_code::missing_manifest, "no manifest.json in " + dir.string());
  }
  ordered_json m;
  {
    std::ifstream in(manifest_path);
    if (!in) throw error(error_code::io_failure, "cannot open " + manifest_path.string());
    try {
      m = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw error(error_code::invalid_manifest, manifest_path.string() + ": " + e.what());
    }
  }
  if (!m.is_object()) throw error(error_code::invalid_manifest, "manifest is not an object");

  std::optional<std::string> partition;
  if (m.contains("partition") && !m["partition"].is_null()) {
    partition = manifest_field<std::string>(m, "partition");
  }
  task_bundle bundle;
  bundle.descriptor = task_descriptor(
      manifest_field<std::string>(m, "task_id"), manifest_field<std::string>(m, "roi_class"),
      manifest_field<std::string>(m, "modality"), manifest_field<std::string>(m, "dataset"),
      std::move(partition));
  bundle.extractor = m.contains("extractor") ? manifest_field<std::string>(m, "extractor") : "";

  const auto n_samples = manifest_field<std::uint64_t>(m, "n_samples");
  const auto height = manifest_field<std::uint64_t>(m, "height");
  const auto width = manifest_field<std::uint64_t>(m, "width");
  const auto channels = manifest_field<std::uint64_t>(m, "channels");
  const auto positive_class = manifest_field<std::uint8_t>(m, "positive_class");
  if (!m.contains("files") || !m["files"].is_object()) {
    throw error(error_code::invalid_manifest, "manifest lacks 'files'");
  }
  const auto& files = m["files"];
  const auto labels_name = manifest_field<std::string>(files, "labels");

  const fs::path labels_path = dir / labels_name;
  if (!fs::is_regular_file(labels_path, ec)) {
    throw error(error_code::io_failure, "missing " + labels_path.string());
  }
  bundle.labels = decode_labels(read_file(labels_path), bundle.descriptor.task_id,
                                positive_class, labels_path.string());
  if (bundle.labels.n_samples() != n_samples || bundle.labels.height() != height ||
      bundle.labels.width() != width) {
    throw error(error_code::shape_mismatch,
                labels_path.string() + ": dims disagree with manifest");
  }

  if (files.contains("features") && !files["features"].is_null()) {
    const fs::path features_path = dir / manifest_field<std::string>(files, "features");
    if (!fs::is_regular_file(features_path, ec)) {
      throw error(error_code::io_failure, "missing " + features_path.string());
    }
    std::size_t stored_channels = 0;
    auto values = decode_features(read_file(features_path), bundle.labels, stored_channels,
                                  features_path.string());
    if (stored_channels != channels) {
      throw error(error_code::shape_mismatch,
                  features_path.string() + ": channels disagree with manifest");
    }
    bundle.features.emplace(bundle.descriptor.task_id, stored_channels, std::move(values),
                            bundle.labels);
  }
  return bundle;
}

void write_bundle(const task_bundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw error(error_code::io_failure, "cannot create " + dir.string());
  }
  const auto& d = bundle.descriptor;
  ordered_json m;
  m["task_id"] = d.task_id;
  m["roi_class"] = d.roi_class;
  m["modality"] = d.modality;
  m["dataset"] = d.dataset;
  m["partition"] = d.partition ? ordered_json(*d.partition) : ordered_json(nullptr);
  m["n_samples"] = bundle.labels.n_samples();
  m["height"] = bundle.labels.height();
  m["width"] = bundle.labels.width();
  m["channels"] = bundle.features ? bundle.features->channels() : 0;
  m["positive_class"] = bundle.labels.positive_class();
  m["extractor"] = bundle.extractor;
  m["files"]["labels"] = "labels.bin";
  if (bundle.features) m["files"]["features"] = "features.bin";

  write_file(dir / "labels.bin", encode_labels(bundle.labels));
  if (bundle.features) {
    write_file(dir / "features.bin", encode_features(*bundle.features));
  } else if (fs::exists(dir / "features.bin", ec)) {
    fs::remove(dir / "features.bin", ec);
  }
  const std::string text = m.dump(2) + "\n";
  write_file(dir / "manifest.json",
             {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::vector<task_bundle> load_bundle_pool(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw error(error_code::missing_manifest, "not a directory: " + dir.string());
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::is_regular_file(entry.path() / "manifest.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<task_bundle> pool;
  pool.reserve(dirs.size());
  for (const auto& p : dirs) pool.push_back(load_bundle(p));
  return pool;
}

}  // namespace xfersel
