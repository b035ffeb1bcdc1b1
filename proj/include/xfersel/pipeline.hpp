#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xfersel/hscore.hpp"
#include "xfersel/otce.hpp"
#include "xfersel/parallel.hpp"
#include "xfersel/ranking.hpp"
#include "xfersel/roi_sim.hpp"
#include "xfersel/task_model.hpp"

namespace xfersel {

enum class selection_path { guided, baseline };
enum class metric_kind { hscore, otce };
enum class no_match_policy { error, fallback_all };

std::string_view to_string(selection_path p) noexcept;
std::string_view to_string(metric_kind m) noexcept;
selection_path parse_selection_path(std::string_view text);
metric_kind parse_metric_kind(std::string_view text);

struct selection_config {
  selection_path path = selection_path::guided;
  metric_kind metric = metric_kind::hscore;
  std::size_t roi_keep_classes = 1;
  std::size_t top_k = 1;
  no_match_policy on_no_match = no_match_policy::error;
  hscore_params hscore{};
  otce_options otce{};
  roi_sim_options roi{};

  void validate() const;
};

struct modality_filter_result {
  std::vector<task_descriptor> kept;
  bool fell_back = false;
};

/// Sources whose canonical modality equals the target's, in pool order.
/// Throws no_compatible_source (empty pool, or no match under policy error).
modality_filter_result modality_filter(const std::vector<task_descriptor>& pool,
                                       const task_descriptor& target,
                                       no_match_policy policy = no_match_policy::error);

/// Keeps every source whose RoI class is among the `keep` best classes by
/// RoI-Sim (ties: class name ascending). Pool order preserved.
/// Throws missing_labels when a class present in subset1 has no score.
std::vector<task_descriptor> keep_top_roi_classes(const std::vector<task_descriptor>& subset1,
                                                  const std::map<std::string, double>& roi_sim_by_class,
                                                  std::size_t keep);

/// All masks of one RoI class binarized (positive class 1) and resampled onto
/// the height x width grid, concatenated in pool order.
label_mask_set pool_class_labels(const std::vector<const task_bundle*>& members,
                                 const std::string& roi_class, std::size_t height,
                                 std::size_t width);

struct roi_filter_result {
  std::vector<task_descriptor> subset2;
  std::map<std::string, double> roi_sim_by_class;
};

/// Groups subset1 by RoI class, scores each class's pooled labels against the
/// target labels, keeps the top cfg.roi_keep_classes classes.
roi_filter_result roi_filter(const std::vector<const task_bundle*>& subset1,
                             const task_bundle& target, const selection_config& cfg,
                             parallelism par = {});

struct source_score {
  std::string task_id;
  metric_kind metric = metric_kind::hscore;
  double score = 0.0;
  /// skipped_pixels (H-score) or Sinkhorn residual (OTCE); absent for injected scores.
  std::optional<double> diagnostic;
  std::optional<std::size_t> sinkhorn_iterations;
};

struct selection_inputs {
  /// Source model's features on the target images keyed by source task_id.
  /// Sources without an entry use the target bundle's own features.
  std::map<std::string, pixel_feature_set> target_views;
  /// Precomputed metric scores keyed by task_id; bypass metric computation.
  std::optional<std::map<std::string, double>> injected_scores;
  /// Precomputed RoI-Sim keyed by RoI class; bypass SSIM computation.
  std::optional<std::map<std::string, double>> injected_roi_sim;
};

struct selection_report {
  std::string target_id;
  selection_config config;
  std::vector<std::string> subset1;
  std::vector<std::string> subset2;
  bool modality_fallback = false;
  std::map<std::string, double> roi_sim_by_class;
  ranking final_ranking;
  std::vector<source_score> per_source_scores;

  [[nodiscard]] std::vector<std::string> top(std::size_t k) const;
};

/// Scores one source against the target with cfg.metric.
source_score score_source(const task_bundle& source, const task_bundle& target,
                          const pixel_feature_set* target_view, const selection_config& cfg,
                          parallelism par = {});

/// Guided: modality filter, RoI filter, metric ranking over Subset 2.
/// Baseline: metric ranking over the whole pool.
/// Throws no_compatible_source, missing_features, missing_labels and metric errors.
selection_report select(const std::vector<task_bundle>& pool, const task_bundle& target,
                        const selection_config& cfg, const selection_inputs& inputs = {},
                        parallelism par = {});

nlohmann::ordered_json config_to_json(const selection_config& cfg);
nlohmann::ordered_json to_json(const selection_report& report);

}  // namespace xfersel
