#include "xfersel/roi_sim.hpp"

#include <algorithm>
#include <utility>

#include "xfersel/error.hpp"
#include "xfersel/rng.hpp"

namespace xfersel {

void ssim_params::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(dynamic_range > 0.0)) {
    throw error(error_code::invalid_argument, "SSIM k1, k2 and dynamic range must be > 0");
  }
}

image2d::image2d(std::size_t h, std::size_t w, std::vector<double> values)
    : height{h}, width{w}, pixels{std::move(values)} {
  if (pixels.size() != h * w) throw error(error_code::shape_mismatch, "image payload size");
}

double ssim_global(const image2d& x, const image2d& y, const ssim_params& params) {
  if (x.height != y.height || x.width != y.width) {
    throw error(error_code::shape_mismatch,
                "SSIM inputs " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                    " vs " + std::to_string(y.height) + "x" + std::to_string(y.width));
  }
  const std::size_t n = x.pixels.size();
  if (n == 0) throw error(error_code::empty_image, "SSIM of empty images");

  double sum_x = 0.0;
  double sum_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_x += x.pixels[i];
    sum_y += y.pixels[i];
  }
  const double count = static_cast<double>(n);
  const double mu_x = sum_x / count;
  const double mu_y = sum_y / count;

  double var_x = 0.0;
  double var_y = 0.0;
  double cov_xy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x.pixels[i] - mu_x;
    const double dy = y.pixels[i] - mu_y;
    var_x += dx * dx;
    var_y += dy * dy;
    cov_xy += dx * dy;
  }
  var_x /= count;
  var_y /= count;
  cov_xy /= count;

  const double c1 = params.c1();
  const double c2 = params.c2();
  const double numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2);
  const double denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
  return numerator / denominator;
}

std::string_view to_string(pairing_mode mode) noexcept {
  return mode == pairing_mode::paired_sample ? "paired" : "mean";
}

pairing_mode parse_pairing_mode(std::string_view text) {
  if (text == "paired" || text == "paired_sample") return pairing_mode::paired_sample;
  if (text == "mean" || text == "mean_mask") return pairing_mode::mean_mask;
  throw error(error_code::invalid_argument, "unknown pairing mode '" + std::string(text) + "'");
}

image2d binarize(const label_mask_set& set, std::size_t i) {
  const auto m = set.mask(i);
  image2d out(set.height(), set.width());
  for (std::size_t p = 0; p < m.size(); ++p) {
    out.pixels[p] = m[p] == set.positive_class() ? 1.0 : 0.0;
  }
  return out;
}

image2d resample_nearest(const image2d& img, std::size_t height, std::size_t width) {
  if (img.height == height && img.width == width) return img;
  image2d out(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    const auto sr = std::min(img.height - 1, (2 * r + 1) * img.height / (2 * height));
    for (std::size_t c = 0; c < width; ++c) {
      const auto sc = std::min(img.width - 1, (2 * c + 1) * img.width / (2 * width));
      out.at(r, c) = img.at(sr, sc);
    }
  }
  return out;
}

image2d mean_mask(const label_mask_set& set, std::size_t height, std::size_t width) {
  image2d acc(height, width);
  for (std::size_t i = 0; i < set.n_samples(); ++i) {
    const auto m = resample_nearest(binarize(set, i), height, width);
    for (std::size_t p = 0; p < acc.pixels.size(); ++p) acc.pixels[p] += m.pixels[p];
  }
  const auto n = static_cast<double>(set.n_samples());
  for (auto& v : acc.pixels) v /= n;
  return acc;
}

roi_sim_report roi_sim(const label_mask_set& source, const label_mask_set& target,
                       const roi_sim_options& options, parallelism par) {
  options.ssim.validate();
  if (source.empty() || target.empty()) {
    throw error(error_code::empty_label_set,
                "RoI-Sim needs non-empty label sets (" + source.task_id() + " vs " +
                    target.task_id() + ")");
  }
  const bool same_shape =
      source.height() == target.height() && source.width() == target.width();
  if (!same_shape && !options.resample) {
    throw error(error_code::shape_mismatch, "label grids differ and resampling is disabled");
  }
  const std::size_t h = target.height();
  const std::size_t w = target.width();

  roi_sim_report report;
  report.source_id = source.task_id();
  report.target_id = target.task_id();
  report.params = options.ssim;
  report.mode = options.mode;

  if (options.mode == pairing_mode::mean_mask) {
    report.score = ssim_global(mean_mask(source, h, w), mean_mask(target, h, w), options.ssim);
    report.n_pairs = 1;
    report.min_pair_score = report.max_pair_score = report.score;
    return report;
  }

  const bool source_smaller = source.n_samples() <= target.n_samples();
  const std::size_t n_small = std::min(source.n_samples(), target.n_samples());
  const std::size_t n_large = std::max(source.n_samples(), target.n_samples());
  const std::size_t n_pairs = std::min(n_small, options.max_pairs);
  if (n_pairs == 0) throw error(error_code::invalid_argument, "max_pairs must be >= 1");

  counter_rng rng{options.seed};
  const auto picks = sample_without_replacement(n_small, n_pairs, rng);

  std::vector<double> scores(n_pairs);
  parallel_for(n_pairs, par, [&](std::size_t k) {
    const std::size_t small_index = picks[k];
    const std::size_t large_index = small_index * n_large / n_small;
    const std::size_t si = source_smaller ? small_index : large_index;
    const std::size_t ti = source_smaller ? large_index : small_index;
    const auto x = resample_nearest(binarize(source, si), h, w);
    const auto y = binarize(target, ti);
    scores[k] = ssim_global(x, y, options.ssim);
  });

  double sum = 0.0;
  for (double s : scores) sum += s;
  report.score = sum / static_cast<double>(n_pairs);
  report.n_pairs = n_pairs;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  report.min_pair_score = *lo;
  report.max_pair_score = *hi;
  return report;
}

}  // namespace xfersel
