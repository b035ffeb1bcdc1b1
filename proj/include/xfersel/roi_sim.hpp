#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xfersel/parallel.hpp"
#include "xfersel/task_model.hpp"

namespace xfersel {

struct ssim_params {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  [[nodiscard]] double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  [[nodiscard]] double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  /// Throws invalid_argument unless k1, k2, dynamic_range are all positive.
  void validate() const;
};

/// Row-major 2-D image of doubles.
struct image2d {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  image2d() = default;
  image2d(std::size_t h, std::size_t w, double fill = 0.0)
      : height{h}, width{w}, pixels(h * w, fill) {}
  image2d(std::size_t h, std::size_t w, std::vector<double> values);

  double& at(std::size_t r, std::size_t c) noexcept { return pixels[r * width + c]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const noexcept {
    return pixels[r * width + c];
  }
};

/// Single-window SSIM over the whole image with population statistics.
/// Throws shape_mismatch, empty_image.
double ssim_global(const image2d& x, const image2d& y, const ssim_params& params = {});

enum class pairing_mode { paired_sample, mean_mask };

std::string_view to_string(pairing_mode mode) noexcept;
/// Accepts "paired" / "mean" (and the long names). Throws invalid_argument.
pairing_mode parse_pairing_mode(std::string_view text);

struct roi_sim_options {
  ssim_params ssim{};
  pairing_mode mode = pairing_mode::paired_sample;
  std::uint64_t seed = 42;
  std::size_t max_pairs = 256;
  /// Nearest-neighbour resample source masks onto the target grid when shapes differ.
  bool resample = true;
};

struct roi_sim_report {
  std::string source_id;
  std::string target_id;
  double score = 0.0;
  std::size_t n_pairs = 0;
  ssim_params params{};
  pairing_mode mode = pairing_mode::paired_sample;
  double min_pair_score = 0.0;
  double max_pair_score = 0.0;
};

/// Mask i of `set` as a 0/1 image against its positive class.
image2d binarize(const label_mask_set& set, std::size_t i);

/// Nearest neighbour with centre alignment: src = floor((dst + 0.5) * src_dim / dst_dim).
image2d resample_nearest(const image2d& img, std::size_t height, std::size_t width);

/// Per-pixel foreground occupancy averaged over the set, on a height x width grid.
image2d mean_mask(const label_mask_set& set, std::size_t height, std::size_t width);

/// RoI shape similarity between two label sets.
///
/// paired_sample: n = min(n_s, n_t, max_pairs) distinct indices k are drawn from
/// the smaller set with sample_without_replacement(counter_rng(seed)); each is
/// paired with index floor(k * n_large / n_small) of the larger set and the
/// per-pair SSIM values are averaged in draw order.
/// mean_mask: SSIM of the two occupancy maps.
/// Throws empty_label_set, shape_mismatch (only with resample disabled).
roi_sim_report roi_sim(const label_mask_set& source, const label_mask_set& target,
                       const roi_sim_options& options = {}, parallelism par = {});

}  // namespace xfersel
