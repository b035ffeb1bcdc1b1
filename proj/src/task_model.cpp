#include "xfersel/task_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <utility>

#include "xfersel/error.hpp"
#include "xfersel/rng.hpp"

namespace xfersel {

std::string canonical_modality(std::string_view raw) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!raw.empty() && is_space(raw.front())) raw.remove_prefix(1);
  while (!raw.empty() && is_space(raw.back())) raw.remove_suffix(1);
  std::string out(raw);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

task_descriptor::task_descriptor(std::string id, std::string roi,
                                 std::string_view modality_raw, std::string dataset_name,
                                 std::optional<std::string> partition_name)
    : task_id{std::move(id)},
      roi_class{std::move(roi)},
      modality{canonical_modality(modality_raw)},
      dataset{std::move(dataset_name)},
      partition{std::move(partition_name)} {
  if (task_id.empty()) throw error(error_code::invalid_argument, "task_id must be non-empty");
}

label_mask_set::label_mask_set(std::string task_id, std::size_t n_samples,
                               std::size_t height, std::size_t width,
                               std::vector<std::uint8_t> values,
                               std::uint8_t positive_class)
    : task_id_{std::move(task_id)},
      n_samples_{n_samples},
      height_{height},
      width_{width},
      positive_class_{positive_class},
      values_{std::move(values)} {
  if (values_.size() != n_samples_ * height_ * width_) {
    throw error(error_code::shape_mismatch,
                "label payload holds " + std::to_string(values_.size()) +
                    " values, expected " + std::to_string(n_samples_ * height_ * width_));
  }
}

pixel_feature_set::pixel_feature_set(std::string task_id, std::size_t channels,
                                     std::vector<float> values,
                                     label_mask_set aligned_labels)
    : task_id_{std::move(task_id)},
      channels_{channels},
      values_{std::move(values)},
      labels_{std::move(aligned_labels)} {
  if (channels_ == 0) throw error(error_code::shape_mismatch, "features need >= 1 channel");
  if (values_.size() != labels_.n_samples() * labels_.pixels_per_mask() * channels_) {
    throw error(error_code::shape_mismatch,
                "features hold " + std::to_string(values_.size()) +
                    " values, labels imply " +
                    std::to_string(labels_.n_samples() * labels_.pixels_per_mask() *
                                   channels_));
  }
  const auto bad = std::find_if(values_.begin(), values_.end(),
                                [](float v) { return !std::isfinite(v); });
  if (bad != values_.end()) {
    throw error(error_code::non_finite_feature,
                "feature value at offset " + std::to_string(bad - values_.begin()) +
                    " is not finite");
  }
}

pixel_samples flatten_pixels(const pixel_feature_set& fs, const subsample_spec& sampler) {
  const std::size_t total = fs.total_pixels();
  if (total == 0) throw error(error_code::empty_feature_set, "feature set has no pixels");

  std::vector<std::size_t> chosen;
  if (total <= sampler.max_pixels) {
    chosen.resize(total);
    for (std::size_t i = 0; i < total; ++i) chosen[i] = i;
  } else {
    if (sampler.max_pixels == 0) {
      throw error(error_code::empty_feature_set, "max_pixels is 0");
    }
    counter_rng rng{sampler.seed};
    chosen = sample_without_replacement(total, sampler.max_pixels, rng);
    std::sort(chosen.begin(), chosen.end());
  }

  pixel_samples out;
  out.features = matrix(chosen.size(), fs.channels());
  out.labels.resize(chosen.size());
  const auto labels = fs.labels().values();
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    const auto src = fs.pixel(chosen[r]);
    auto dst = out.features.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    out.labels[r] = labels[chosen[r]];
  }
  out.source_index = std::move(chosen);
  return out;
}

}  // namespace xfersel
