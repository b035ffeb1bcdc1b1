#include "xfersel/hscore.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

#include "xfersel/error.hpp"

namespace xfersel {

void hscore_params::validate() const {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw error(error_code::invalid_argument, "ridge must be finite and >= 0");
  }
  if (min_samples_per_pixel < 2) {
    throw error(error_code::invalid_argument, "min_samples_per_pixel must be >= 2");
  }
}

double hscore_classification(const matrix& features, std::span<const std::uint8_t> labels,
                             const hscore_params& params) {
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  if (labels.size() != n) {
    throw error(error_code::length_mismatch, "H-score needs one label per feature vector");
  }
  if (n < 2 || dim == 0) {
    throw error(error_code::degenerate_input, "H-score needs >= 2 samples with >= 1 channel");
  }

  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const auto c = static_cast<Eigen::Index>(dim);
  MatrixXd f(static_cast<Eigen::Index>(n), c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = features(i, j);
      if (!std::isfinite(v)) {
        throw error(error_code::non_finite_feature, "non-finite feature in H-score input");
      }
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }

  const VectorXd mean = f.colwise().mean().transpose();
  const MatrixXd centered = f.rowwise() - mean.transpose();
  MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  cov.diagonal().array() += params.ridge;

  std::array<std::size_t, 256> counts{};
  std::array<bool, 256> present{};
  MatrixXd class_sums = MatrixXd::Zero(256, c);
  for (std::size_t i = 0; i < n; ++i) {
    ++counts[labels[i]];
    present[labels[i]] = true;
    class_sums.row(labels[i]) += centered.row(static_cast<Eigen::Index>(i));
  }
  MatrixXd between = MatrixXd::Zero(c, c);
  for (std::size_t k = 0; k < 256; ++k) {
    if (!present[k]) continue;
    const double weight = static_cast<double>(counts[k]) / static_cast<double>(n);
    const VectorXd offset =
        class_sums.row(static_cast<Eigen::Index>(k)).transpose() / static_cast<double>(counts[k]);
    between.noalias() += weight * offset * offset.transpose();
  }

  const Eigen::LDLT<MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw error(error_code::degenerate_input, "feature covariance could not be factored");
  }
  const double trace = solver.solve(between).trace();
  if (!std::isfinite(trace)) {
    throw error(error_code::degenerate_input,
                "feature covariance is singular; use a positive ridge");
  }
  return trace;
}

hscore_report hscore_segmentation(const pixel_feature_set& fs, const hscore_params& params,
                                  parallelism par, bool keep_per_pixel) {
  params.validate();
  const std::size_t n = fs.n_samples();
  if (n < params.min_samples_per_pixel) {
    throw error(error_code::degenerate_input,
                "pixel-wise H-score needs >= " + std::to_string(params.min_samples_per_pixel) +
                    " samples, got " + std::to_string(n));
  }
  const std::size_t h = fs.height();
  const std::size_t w = fs.width();
  const std::size_t grid = h * w;
  if (grid == 0) throw error(error_code::degenerate_input, "empty label grid");
  const std::size_t dim = fs.channels();
  const auto labels = fs.labels().values();

  std::vector<double> scores(grid, 0.0);
  std::vector<std::uint8_t> skipped(grid, 0);
  parallel_for(grid, par, [&](std::size_t j) {
    matrix feats(n, dim);
    std::vector<std::uint8_t> ys(n);
    bool varied = false;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t flat = s * grid + j;
      const auto v = fs.pixel(flat);
      std::copy(v.begin(), v.end(), feats.row(s).begin());
      ys[s] = labels[flat];
      varied = varied || ys[s] != ys[0];
    }
    if (!varied) {
      skipped[j] = 1;
      return;
    }
    scores[j] = hscore_classification(feats, ys, params);
  });

  hscore_report report;
  report.source_id = fs.task_id();
  report.target_id = fs.labels().task_id();
  double sum = 0.0;
  for (std::size_t j = 0; j < grid; ++j) {
    sum += scores[j];
    report.skipped_pixels += skipped[j];
  }
  report.score = sum / static_cast<double>(grid);
  if (keep_per_pixel) {
    matrix per_pixel(h, w);
    std::copy(scores.begin(), scores.end(), per_pixel.values().begin());
    report.per_pixel_scores = std::move(per_pixel);
  }
  return report;
}

}  // namespace xfersel
