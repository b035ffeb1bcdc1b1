#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xfersel/matrix.hpp"
#include "xfersel/parallel.hpp"
#include "xfersel/task_model.hpp"

namespace xfersel {

enum class cost_normalization { none, max };

std::string_view to_string(cost_normalization mode) noexcept;
cost_normalization parse_cost_normalization(std::string_view text);

struct sinkhorn_params {
  double epsilon = 0.1;
  std::size_t max_iters = 1000;
  double marginal_tol = 1e-9;
  bool log_domain = true;

  void validate() const;
};

struct transport_plan {
  matrix coupling;
  std::vector<double> row_marginal;
  std::vector<double> col_marginal;
  std::size_t iterations_used = 0;
  double final_marginal_error = 0.0;

  [[nodiscard]] bool converged(double tol) const noexcept { return final_marginal_error <= tol; }
};

struct joint_label_distribution {
  matrix table;  // |source classes| x |target classes|
  std::vector<std::uint8_t> source_classes;
  std::vector<std::uint8_t> target_classes;
};

struct otce_report {
  std::string source_id;
  std::string target_id;
  double score = 0.0;
  double ot_cost = 0.0;  // <C, pi>
  std::size_t iterations_used = 0;
  double final_marginal_error = 0.0;
  subsample_spec subsample{};
  std::size_t source_pixels = 0;
  std::size_t target_pixels = 0;
  cost_normalization normalization = cost_normalization::none;
};

/// Squared Euclidean distances, accumulated in double and clamped at 0.
/// Throws dimension_mismatch, empty_feature_set.
matrix cost_matrix(const matrix& source, const matrix& target, parallelism par = {});

/// Entropic OT with uniform marginals 1/N_s, 1/N_t. Alternates row and column
/// scaling (log-sum-exp potentials when log_domain) until the largest marginal
/// violation is <= marginal_tol or max_iters sweeps have run. Non-convergence
/// is reported through final_marginal_error, never thrown.
/// Throws non_finite_cost, invalid_argument.
transport_plan sinkhorn(const matrix& cost, const sinkhorn_params& params = {},
                        parallelism par = {});

/// Sum of coupling mass per (source label, target label). Classes are listed
/// in ascending order. Throws length_mismatch.
joint_label_distribution joint_label_distribution_of(const transport_plan& plan,
                                                     std::span<const std::uint8_t> source_labels,
                                                     std::span<const std::uint8_t> target_labels);

/// -H(Y_t | Y_s) in nats; zero-mass cells contribute nothing. Clamped to
/// [-log |target classes|, 0] against rounding.
double otce_from_joint(const joint_label_distribution& joint);

struct otce_options {
  subsample_spec sampler{};
  sinkhorn_params sinkhorn{};
  cost_normalization normalization = cost_normalization::none;
};

/// Full pipeline. `source` holds the source model's features on source images,
/// `target` the same model's features on target images. The source subsample
/// uses sampler.seed and the target subsample sampler.seed + 1.
/// Throws dimension_mismatch, empty_feature_set.
otce_report otce(const pixel_feature_set& source, const pixel_feature_set& target,
                 const otce_options& options = {}, parallelism par = {});

}  // namespace xfersel
