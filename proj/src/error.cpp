#include "xfersel/error.hpp"

namespace xfersel {

std::string_view to_string(error_code code) noexcept {
  switch (code) {
    case error_code::missing_manifest: return "MissingManifest";
    case error_code::invalid_manifest: return "InvalidManifest";
    case error_code::shape_mismatch: return "ShapeMismatch";
    case error_code::corrupt_binary: return "CorruptBinary";
    case error_code::non_finite_feature: return "NonFiniteFeature";
    case error_code::io_failure: return "IoFailure";
    case error_code::empty_feature_set: return "EmptyFeatureSet";
    case error_code::empty_label_set: return "EmptyLabelSet";
    case error_code::empty_image: return "EmptyImage";
    case error_code::degenerate_input: return "DegenerateInput";
    case error_code::dimension_mismatch: return "DimensionMismatch";
    case error_code::non_finite_cost: return "NonFiniteCost";
    case error_code::length_mismatch: return "LengthMismatch";
    case error_code::duplicate_task_id: return "DuplicateTaskId";
    case error_code::non_finite_score: return "NonFiniteScore";
    case error_code::id_set_mismatch: return "IdSetMismatch";
    case error_code::k_out_of_range: return "KOutOfRange";
    case error_code::unknown_task: return "UnknownTask";
    case error_code::no_compatible_source: return "NoCompatibleSource";
    case error_code::missing_labels: return "MissingLabels";
    case error_code::missing_features: return "MissingFeatures";
    case error_code::invalid_spec: return "InvalidSpec";
    case error_code::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace xfersel
