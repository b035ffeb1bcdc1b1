#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace xfersel {

struct scored_task {
  std::string task_id;
  double score = 0.0;

  friend bool operator==(const scored_task&, const scored_task&) = default;
};

enum class rank_direction { higher_is_better };

/// Total order of tasks, best first. Ties keep their input order.
class ranking {
 public:
  ranking() = default;

  [[nodiscard]] const std::vector<scored_task>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool contains(const std::string& id) const { return position_.contains(id); }
  /// 1-based rank. Throws unknown_task.
  [[nodiscard]] std::size_t position(const std::string& id) const;
  [[nodiscard]] const scored_task& at_rank(std::size_t rank) const { return entries_.at(rank - 1); }
  [[nodiscard]] std::vector<std::string> ids() const;

  /// Builds from an already-ordered list (e.g. parsed CSV). Throws duplicate_task_id.
  static ranking from_ordered(std::vector<scored_task> ordered);

  friend bool operator==(const ranking& a, const ranking& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<scored_task> entries_;
  std::map<std::string, std::size_t> position_;
};

/// Stable descending sort; rank 1 is best.
/// Throws duplicate_task_id, non_finite_score, invalid_argument (empty input).
ranking build_ranking(std::vector<scored_task> scores,
                      rank_direction direction = rank_direction::higher_is_better);

struct footrule_pair {
  std::string task_id;
  std::size_t predicted_rank = 0;
  std::size_t truth_rank = 0;
};

struct footrule_report {
  std::uint64_t distance = 0;
  std::optional<std::size_t> k;  // nullopt = full ranking
  std::vector<footrule_pair> pairs;
};

/// Sum over tasks of |pred rank - truth rank|. Throws id_set_mismatch.
footrule_report footrule_full(const ranking& pred, const ranking& truth);

/// Sum over predicted ranks n = 1..k of |n - truth rank of the task predicted at n|.
/// `truth` may cover a larger pool than `pred`. Throws k_out_of_range, unknown_task.
footrule_report footrule_topk(const ranking& pred, const ranking& truth, std::size_t k);

/// CSV with header `task_id,score,rank`, LF endings, scores with 6 decimals.
void write_ranking_csv(std::ostream& out, const ranking& r);
/// Parses `task_id,score,rank` (rank optional; when present it defines the order
/// and must be a permutation of 1..n). Throws invalid_argument, duplicate_task_id.
ranking read_ranking_csv(std::istream& in);

/// `task_id,score` rows (extra columns ignored), in file order.
std::vector<scored_task> read_scores_csv(std::istream& in);

}  // namespace xfersel
