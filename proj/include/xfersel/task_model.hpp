#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xfersel/matrix.hpp"

namespace xfersel {

/// Uppercase, surrounding whitespace removed. "t2 " -> "T2".
std::string canonical_modality(std::string_view raw);

struct task_descriptor {
  std::string task_id;
  std::string roi_class;
  std::string modality;  // canonical
  std::string dataset;
  std::optional<std::string> partition;

  task_descriptor() = default;
  task_descriptor(std::string id, std::string roi, std::string_view modality_raw,
                  std::string dataset_name = {},
                  std::optional<std::string> partition_name = std::nullopt);

  [[nodiscard]] bool same_modality(const task_descriptor& other) const noexcept {
    return modality == other.modality;
  }

  friend bool operator==(const task_descriptor&, const task_descriptor&) = default;
};

/// Stack of 2-D class-index masks, all height x width, stored row-major.
class label_mask_set {
 public:
  label_mask_set() = default;
  label_mask_set(std::string task_id, std::size_t n_samples, std::size_t height,
                 std::size_t width, std::vector<std::uint8_t> values,
                 std::uint8_t positive_class = 1);

  [[nodiscard]] const std::string& task_id() const noexcept { return task_id_; }
  [[nodiscard]] std::size_t n_samples() const noexcept { return n_samples_; }
  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t pixels_per_mask() const noexcept { return height_ * width_; }
  [[nodiscard]] std::uint8_t positive_class() const noexcept { return positive_class_; }
  [[nodiscard]] bool empty() const noexcept { return n_samples_ == 0; }

  [[nodiscard]] std::span<const std::uint8_t> mask(std::size_t i) const noexcept {
    return {values_.data() + i * pixels_per_mask(), pixels_per_mask()};
  }
  [[nodiscard]] std::span<const std::uint8_t> values() const noexcept { return values_; }

  friend bool operator==(const label_mask_set&, const label_mask_set&) = default;

 private:
  std::string task_id_;
  std::size_t n_samples_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::uint8_t positive_class_ = 1;
  std::vector<std::uint8_t> values_;
};

/// Per-pixel feature maps [n_samples, H, W, C] aligned with a label stack.
class pixel_feature_set {
 public:
  pixel_feature_set() = default;
  /// Throws shape_mismatch / non_finite_feature.
  pixel_feature_set(std::string task_id, std::size_t channels, std::vector<float> values,
                    label_mask_set aligned_labels);

  [[nodiscard]] const std::string& task_id() const noexcept { return task_id_; }
  [[nodiscard]] std::size_t n_samples() const noexcept { return labels_.n_samples(); }
  [[nodiscard]] std::size_t height() const noexcept { return labels_.height(); }
  [[nodiscard]] std::size_t width() const noexcept { return labels_.width(); }
  [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
  [[nodiscard]] std::size_t total_pixels() const noexcept {
    return labels_.n_samples() * labels_.pixels_per_mask();
  }
  [[nodiscard]] const label_mask_set& labels() const noexcept { return labels_; }

  /// Feature vector of flat pixel index (sample, row, col) in row-major order.
  [[nodiscard]] std::span<const float> pixel(std::size_t flat_index) const noexcept {
    return {values_.data() + flat_index * channels_, channels_};
  }
  [[nodiscard]] std::span<const float> values() const noexcept { return values_; }

  friend bool operator==(const pixel_feature_set&, const pixel_feature_set&) = default;

 private:
  std::string task_id_;
  std::size_t channels_ = 0;
  std::vector<float> values_;
  label_mask_set labels_;
};

struct task_bundle {
  task_descriptor descriptor;
  label_mask_set labels;
  std::optional<pixel_feature_set> features;
  std::string extractor;

  friend bool operator==(const task_bundle&, const task_bundle&) = default;
};

struct subsample_spec {
  std::size_t max_pixels = 4096;
  std::uint64_t seed = 42;
};

/// Flattened (feature, label) pairs; features widened to double, N x C.
struct pixel_samples {
  matrix features;
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> source_index;  // flat pixel index each row came from

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
};

/// All pixels in row-major (sample, row, col) order when they fit in
/// max_pixels, else a seeded uniform subsample of exactly max_pixels pixels
/// (sample_without_replacement on counter_rng(seed), indices sorted ascending).
pixel_samples flatten_pixels(const pixel_feature_set& fs, const subsample_spec& sampler);

}  // namespace xfersel
