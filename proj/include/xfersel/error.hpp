#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xfersel {

enum class error_code {
  missing_manifest,
  invalid_manifest,
  shape_mismatch,
  corrupt_binary,
  non_finite_feature,
  io_failure,
  empty_feature_set,
  empty_label_set,
  empty_image,
  degenerate_input,
  dimension_mismatch,
  non_finite_cost,
  length_mismatch,
  duplicate_task_id,
  non_finite_score,
  id_set_mismatch,
  k_out_of_range,
  unknown_task,
  no_compatible_source,
  missing_labels,
  missing_features,
  invalid_spec,
  invalid_argument,
};

/// CamelCase name used in `ERROR <code>: <detail>` lines.
std::string_view to_string(error_code code) noexcept;

class error : public std::runtime_error {
 public:
  error(error_code code, const std::string& detail)
      : std::runtime_error(detail), code_{code} {}

  [[nodiscard]] error_code code() const noexcept { return code_; }

 private:
  error_code code_;
};

}  // namespace xfersel
