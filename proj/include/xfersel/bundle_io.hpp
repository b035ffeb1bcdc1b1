#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xfersel/task_model.hpp"

namespace xfersel {

// On-disk task bundle:
//   manifest.json  task_id, roi_class, modality, dataset, partition, n_samples,
//                  height, width, channels, positive_class, extractor,
//                  files.labels, files.features
//   labels.bin     "XLBL", u16 LE version 1, u8 ndim 3, u64 LE dims [n, H, W], u8 payload
//   features.bin   "XFTR", u16 LE version 1, u8 ndim 4, u64 LE dims [n, H, W, C], f32 LE payload

inline constexpr std::uint16_t binary_format_version = 1;

/// Loads and validates a bundle directory eagerly.
/// Throws missing_manifest, invalid_manifest, shape_mismatch, corrupt_binary,
/// non_finite_feature, io_failure.
task_bundle load_bundle(const std::filesystem::path& dir);

/// Writes manifest.json + labels.bin (+ features.bin when present). Throws io_failure.
void write_bundle(const task_bundle& bundle, const std::filesystem::path& dir);

std::vector<std::uint8_t> encode_labels(const label_mask_set& labels);
std::vector<std::uint8_t> encode_features(const pixel_feature_set& features);

/// Decoders take the full file contents; `what` names the file in error messages.
label_mask_set decode_labels(std::span<const std::uint8_t> bytes, std::string task_id,
                             std::uint8_t positive_class, const std::string& what);
std::vector<float> decode_features(std::span<const std::uint8_t> bytes,
                                   const label_mask_set& labels, std::size_t& channels,
                                   const std::string& what);

/// Loads every immediate subdirectory holding a manifest.json, sorted by directory name.
std::vector<task_bundle> load_bundle_pool(const std::filesystem::path& dir);

}  // namespace xfersel
