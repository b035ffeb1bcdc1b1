#include "xfersel/pipeline.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "xfersel/error.hpp"

namespace xfersel {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(selection_path p) noexcept {
  return p == selection_path::guided ? "guided" : "baseline";
}

std::string_view to_string(metric_kind m) noexcept {
  return m == metric_kind::hscore ? "hscore" : "otce";
}

selection_path parse_selection_path(std::string_view text) {
  if (text == "guided") return selection_path::guided;
  if (text == "baseline") return selection_path::baseline;
  throw error(error_code::invalid_argument, "unknown path '" + std::string(text) + "'");
}

metric_kind parse_metric_kind(std::string_view text) {
  if (text == "hscore") return metric_kind::hscore;
  if (text == "otce") return metric_kind::otce;
  throw error(error_code::invalid_argument, "unknown metric '" + std::string(text) + "'");
}

void selection_config::validate() const {
  if (top_k < 1) throw error(error_code::invalid_argument, "top_k must be >= 1");
  if (roi_keep_classes < 1) {
    throw error(error_code::invalid_argument, "roi_keep_classes must be >= 1");
  }
}

modality_filter_result modality_filter(const std::vector<task_descriptor>& pool,
                                       const task_descriptor& target, no_match_policy policy) {
  if (pool.empty()) throw error(error_code::no_compatible_source, "source pool is empty");
  modality_filter_result result;
  const auto wanted = canonical_modality(target.modality);
  for (const auto& d : pool) {
    if (canonical_modality(d.modality) == wanted) result.kept.push_back(d);
  }
  if (result.kept.empty()) {
    if (policy == no_match_policy::error) {
      throw error(error_code::no_compatible_source,
                  "no source shares modality " + wanted + " with " + target.task_id);
    }
    result.kept = pool;
    result.fell_back = true;
  }
  return result;
}

std::vector<task_descriptor> keep_top_roi_classes(
    const std::vector<task_descriptor>& subset1,
    const std::map<std::string, double>& roi_sim_by_class, std::size_t keep) {
  std::set<std::string> classes;
  for (const auto& d : subset1) {
    if (!roi_sim_by_class.contains(d.roi_class)) {
      throw error(error_code::missing_labels, "no RoI-Sim for class " + d.roi_class);
    }
    classes.insert(d.roi_class);
  }
  std::vector<std::pair<std::string, double>> ordered;
  for (const auto& c : classes) ordered.emplace_back(c, roi_sim_by_class.at(c));
  // std::set iteration is name-ascending, so a stable sort breaks ties by name.
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::string> kept;
  for (std::size_t i = 0; i < std::min(keep, ordered.size()); ++i) kept.insert(ordered[i].first);

  std::vector<task_descriptor> out;
  for (const auto& d : subset1) {
    if (kept.contains(d.roi_class)) out.push_back(d);
  }
  return out;
}

label_mask_set pool_class_labels(const std::vector<const task_bundle*>& members,
                                 const std::string& roi_class, std::size_t height,
                                 std::size_t width) {
  std::vector<std::uint8_t> values;
  std::size_t count = 0;
  for (const auto* b : members) {
    for (std::size_t i = 0; i < b->labels.n_samples(); ++i) {
      const auto img = resample_nearest(binarize(b->labels, i), height, width);
      for (double v : img.pixels) values.push_back(v > 0.5 ? 1 : 0);
      ++count;
    }
  }
  return {roi_class, count, height, width, std::move(values), 1};
}

roi_filter_result roi_filter(const std::vector<const task_bundle*>& subset1,
                             const task_bundle& target, const selection_config& cfg,
                             parallelism par) {
  if (subset1.empty()) throw error(error_code::no_compatible_source, "Subset 1 is empty");
  if (target.labels.empty()) {
    throw error(error_code::missing_labels, "target " + target.descriptor.task_id + " has no labels");
  }
  std::map<std::string, std::vector<const task_bundle*>> by_class;
  for (const auto* b : subset1) by_class[b->descriptor.roi_class].push_back(b);

  roi_filter_result result;
  for (const auto& [roi_class, members] : by_class) {
    const auto pooled =
        pool_class_labels(members, roi_class, target.labels.height(), target.labels.width());
    if (pooled.empty()) {
      throw error(error_code::missing_labels, "RoI class " + roi_class + " has no label masks");
    }
    result.roi_sim_by_class[roi_class] = roi_sim(pooled, target.labels, cfg.roi, par).score;
  }
  std::vector<task_descriptor> descriptors;
  for (const auto* b : subset1) descriptors.push_back(b->descriptor);
  result.subset2 = keep_top_roi_classes(descriptors, result.roi_sim_by_class, cfg.roi_keep_classes);
  return result;
}

std::vector<std::string> selection_report::top(std::size_t k) const {
  auto ids = final_ranking.ids();
  if (ids.size() > k) ids.resize(k);
  return ids;
}

source_score score_source(const task_bundle& source, const task_bundle& target,
                          const pixel_feature_set* target_view, const selection_config& cfg,
                          parallelism par) {
  const pixel_feature_set* view = target_view;
  if (view == nullptr && target.features) view = &*target.features;
  if (view == nullptr) {
    throw error(error_code::missing_features,
                "no target features for source " + source.descriptor.task_id);
  }
  source_score out;
  out.task_id = source.descriptor.task_id;
  out.metric = cfg.metric;
  if (cfg.metric == metric_kind::hscore) {
    const auto r = hscore_segmentation(*view, cfg.hscore, par);
    out.score = r.score;
    out.diagnostic = static_cast<double>(r.skipped_pixels);
  } else {
    if (!source.features) {
      throw error(error_code::missing_features,
                  "source " + source.descriptor.task_id + " has no features");
    }
    const auto r = otce(*source.features, *view, cfg.otce, par);
    out.score = r.score;
    out.diagnostic = r.final_marginal_error;
    out.sinkhorn_iterations = r.iterations_used;
  }
  return out;
}

selection_report select(const std::vector<task_bundle>& pool, const task_bundle& target,
                        const selection_config& cfg, const selection_inputs& inputs,
                        parallelism par) {
  cfg.validate();
  if (pool.empty()) throw error(error_code::no_compatible_source, "source pool is empty");

  selection_report report;
  report.target_id = target.descriptor.task_id;
  report.config = cfg;

  std::map<std::string, const task_bundle*> by_id;
  std::vector<task_descriptor> descriptors;
  for (const auto& b : pool) {
    if (!by_id.emplace(b.descriptor.task_id, &b).second) {
      throw error(error_code::duplicate_task_id, "duplicate source " + b.descriptor.task_id);
    }
    descriptors.push_back(b.descriptor);
  }

  std::vector<task_descriptor> survivors;
  if (cfg.path == selection_path::baseline) {
    survivors = descriptors;
    for (const auto& d : descriptors) report.subset1.push_back(d.task_id);
  } else {
    auto mod = modality_filter(descriptors, target.descriptor, cfg.on_no_match);
    report.modality_fallback = mod.fell_back;
    for (const auto& d : mod.kept) report.subset1.push_back(d.task_id);

    if (inputs.injected_roi_sim) {
      report.roi_sim_by_class = *inputs.injected_roi_sim;
      survivors = keep_top_roi_classes(mod.kept, *inputs.injected_roi_sim, cfg.roi_keep_classes);
    } else {
      std::vector<const task_bundle*> subset1;
      for (const auto& d : mod.kept) subset1.push_back(by_id.at(d.task_id));
      auto roi = roi_filter(subset1, target, cfg, par);
      report.roi_sim_by_class = std::move(roi.roi_sim_by_class);
      survivors = std::move(roi.subset2);
    }
  }
  for (const auto& d : survivors) report.subset2.push_back(d.task_id);
  if (cfg.path == selection_path::baseline) report.subset2 = report.subset1;

  report.per_source_scores.resize(survivors.size());
  if (inputs.injected_scores) {
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      const auto it = inputs.injected_scores->find(survivors[i].task_id);
      if (it == inputs.injected_scores->end()) {
        throw error(error_code::unknown_task, "no injected score for " + survivors[i].task_id);
      }
      report.per_source_scores[i] = {survivors[i].task_id, cfg.metric, it->second, {}, {}};
    }
  } else {
    const bool outer = survivors.size() > 1;
    const parallelism inner = outer ? parallelism{1} : par;
    parallel_for(survivors.size(), outer ? par : parallelism{1}, [&](std::size_t i) {
      const auto& source = *by_id.at(survivors[i].task_id);
      const auto view = inputs.target_views.find(survivors[i].task_id);
      report.per_source_scores[i] = score_source(
          source, target, view == inputs.target_views.end() ? nullptr : &view->second, cfg,
          inner);
    });
  }

  std::vector<scored_task> scores;
  for (const auto& s : report.per_source_scores) scores.push_back({s.task_id, s.score});
  report.final_ranking = build_ranking(std::move(scores));
  return report;
}

ordered_json config_to_json(const selection_config& cfg) {
  ordered_json j;
  j["path"] = to_string(cfg.path);
  j["metric"] = to_string(cfg.metric);
  j["top_k"] = cfg.top_k;
  j["roi_keep_classes"] = cfg.roi_keep_classes;
  j["no_modality_match_policy"] = cfg.on_no_match == no_match_policy::error ? "error" : "fallback_all";
  j["hscore"] = {{"ridge", cfg.hscore.ridge},
                 {"min_samples_per_pixel", cfg.hscore.min_samples_per_pixel}};
  j["otce"] = {{"epsilon", cfg.otce.sinkhorn.epsilon},
               {"max_iters", cfg.otce.sinkhorn.max_iters},
               {"marginal_tol", cfg.otce.sinkhorn.marginal_tol},
               {"log_domain", cfg.otce.sinkhorn.log_domain},
               {"normalize_cost", to_string(cfg.otce.normalization)}};
  j["sampler"] = {{"max_pixels", cfg.otce.sampler.max_pixels}, {"seed", cfg.otce.sampler.seed}};
  j["ssim"] = {{"k1", cfg.roi.ssim.k1},
               {"k2", cfg.roi.ssim.k2},
               {"dynamic_range", cfg.roi.ssim.dynamic_range},
               {"pairing_mode", to_string(cfg.roi.mode)},
               {"max_pairs", cfg.roi.max_pairs},
               {"seed", cfg.roi.seed}};
  return j;
}

ordered_json to_json(const selection_report& report) {
  ordered_json j;
  j["target_id"] = report.target_id;
  j["config"] = config_to_json(report.config);
  j["subset1"] = report.subset1;
  j["subset2"] = report.subset2;
  j["modality_fallback"] = report.modality_fallback;
  j["roi_sim_by_class"] = ordered_json::object();
  for (const auto& [cls, v] : report.roi_sim_by_class) j["roi_sim_by_class"][cls] = v;
  j["per_source_scores"] = ordered_json::array();
  for (const auto& s : report.per_source_scores) {
    ordered_json e{{"task_id", s.task_id}, {"metric", to_string(s.metric)}, {"score", s.score}};
    if (s.diagnostic) {
      if (s.metric == metric_kind::hscore) {
        e["skipped_pixels"] = static_cast<std::uint64_t>(*s.diagnostic);
      } else {
        e["sinkhorn_residual"] = *s.diagnostic;
      }
    }
    if (s.sinkhorn_iterations) e["sinkhorn_iterations"] = *s.sinkhorn_iterations;
    j["per_source_scores"].push_back(std::move(e));
  }
  j["final_ranking"] = ordered_json::array();
  const auto& entries = report.final_ranking.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    j["final_ranking"].push_back(
        {{"rank", i + 1}, {"task_id", entries[i].task_id}, {"score", entries[i].score}});
  }
  j["top_k"] = report.top(report.config.top_k);
  return j;
}

}  // namespace xfersel
