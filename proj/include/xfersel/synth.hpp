#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xfersel/hscore.hpp"
#include "xfersel/otce.hpp"
#include "xfersel/parallel.hpp"
#include "xfersel/pipeline.hpp"
#include "xfersel/ranking.hpp"
#include "xfersel/task_model.hpp"

namespace xfersel::synth {

/// A family of binary segmentation tasks. Task t has its own masks
/// (thresholded box-blurred noise fields with a fixed foreground fraction) and
/// its own synthetic "model": a pixel with label y maps to
///   s_t * y * class_mean * (1, ..., 1) + (1 - s_t) * noise_sigma * N(0, I_C).
struct synth_spec {
  std::size_t n_tasks = 7;
  std::size_t n_samples = 16;
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t channels = 3;
  std::vector<double> signal_strengths{0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 0.8};
  std::uint64_t seed = 42;
  double class_mean = 0.25;
  double noise_sigma = 0.375;
  std::size_t smoothing_radius = 2;
  double foreground_fraction = 0.3;

  /// Throws invalid_spec.
  void validate() const;
};

nlohmann::ordered_json to_json(const synth_spec& spec);
/// Missing keys keep their defaults. Throws invalid_spec.
synth_spec synth_spec_from_json(const nlohmann::json& j);

std::string task_id_for(std::size_t index);

/// One bundle per task; features are the task's own model on its own images.
std::vector<task_bundle> generate_tasks(const synth_spec& spec);

/// Task `source_index`'s model applied to `target`'s images: target labels with
/// source-model features. Deterministic per (seed, source_index, target_index).
pixel_feature_set transfer_view(const synth_spec& spec, std::size_t source_index,
                                const task_bundle& target, std::size_t target_index);

struct probe_options {
  double l2 = 1e-2;
  std::size_t max_iters = 50;
  std::size_t max_train_pixels = 4096;
};

struct probe_result {
  std::string task_id;
  double accuracy = 0.0;
};

/// Logistic classifier over pixel feature vectors fitted (Newton steps, L2 on
/// the weights) to the source's features and foreground labels, scored by
/// pixel accuracy on `target`, whose features must come from the same source
/// model. Throws dimension_mismatch, missing_features.
probe_result probe_transfer(const task_bundle& source, const task_bundle& target,
                            std::uint64_t seed, const probe_options& options = {});

/// Fraction of the majority class in the target's foreground/background labels.
double majority_rate(const label_mask_set& labels);

struct evaluation {
  std::string target_id;
  metric_kind metric = metric_kind::otce;
  std::vector<double> source_signal;  // aligned with metric_scores
  std::vector<scored_task> metric_scores;
  std::vector<scored_task> probe_scores;
  ranking metric_ranking;
  ranking probe_ranking;
  std::uint64_t footrule_top1 = 0;
  std::uint64_t footrule_full = 0;
};

/// Scores every non-target task against the target with `metric` and with the
/// probe oracle, and compares the two rankings.
evaluation evaluate(const synth_spec& spec, const std::vector<task_bundle>& tasks,
                    std::size_t target_index, metric_kind metric,
                    const selection_config& cfg = {}, parallelism par = {});

}  // namespace xfersel::synth
