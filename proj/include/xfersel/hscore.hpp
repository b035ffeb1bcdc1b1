#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "xfersel/matrix.hpp"
#include "xfersel/parallel.hpp"
#include "xfersel/task_model.hpp"

namespace xfersel {

struct hscore_params {
  /// Added to the diagonal of the feature covariance before inversion.
  double ridge = 1e-8;
  std::size_t min_samples_per_pixel = 2;

  void validate() const;
};

struct hscore_report {
  std::string source_id;
  std::string target_id;
  double score = 0.0;
  std::optional<matrix> per_pixel_scores;  // H x W
  std::size_t skipped_pixels = 0;
};

/// tr((cov(F) + ridge*I)^-1 * cov(E[F|Y])) with population covariances and
/// class means weighted by empirical class frequency.
/// `features` is N x C. Throws degenerate_input, non_finite_feature, length_mismatch.
double hscore_classification(const matrix& features, std::span<const std::uint8_t> labels,
                             const hscore_params& params = {});

/// Pixel-wise H-score: at every grid position the n_samples (feature, label)
/// pairs form one classification problem; single-class positions score 0 and
/// count as skipped; the result is the mean over all H*W positions.
/// `source_features_on_target` holds the source model's features on target
/// images together with the target labels.
hscore_report hscore_segmentation(const pixel_feature_set& source_features_on_target,
                                  const hscore_params& params = {}, parallelism par = {},
                                  bool keep_per_pixel = false);

}  // namespace xfersel
