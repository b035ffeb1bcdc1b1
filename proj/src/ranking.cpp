#include "xfersel/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <string>

#include "xfersel/error.hpp"
#include "xfersel/text.hpp"

namespace xfersel {

std::size_t ranking::position(const std::string& id) const {
  const auto it = position_.find(id);
  if (it == position_.end()) throw error(error_code::unknown_task, "task '" + id + "' not ranked");
  return it->second;
}

std::vector<std::string> ranking::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.task_id);
  return out;
}

ranking ranking::from_ordered(std::vector<scored_task> ordered) {
  ranking r;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (!r.position_.emplace(ordered[i].task_id, i + 1).second) {
      throw error(error_code::duplicate_task_id, "duplicate task '" + ordered[i].task_id + "'");
    }
  }
  r.entries_ = std::move(ordered);
  return r;
}

ranking build_ranking(std::vector<scored_task> scores, rank_direction /*direction*/) {
  if (scores.empty()) throw error(error_code::invalid_argument, "cannot rank an empty list");
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) {
      throw error(error_code::non_finite_score, "score of '" + s.task_id + "' is not finite");
    }
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const scored_task& a, const scored_task& b) { return a.score > b.score; });
  return ranking::from_ordered(std::move(scores));
}

footrule_report footrule_full(const ranking& pred, const ranking& truth) {
  bool same = pred.size() == truth.size();
  for (std::size_t i = 0; same && i < pred.size(); ++i) {
    same = truth.contains(pred.entries()[i].task_id);
  }
  if (!same) {
    throw error(error_code::id_set_mismatch, "rankings cover different task sets");
  }
  footrule_report report;
  for (const auto& e : pred.entries()) {
    const auto p = pred.position(e.task_id);
    const auto t = truth.position(e.task_id);
    report.distance += p > t ? p - t : t - p;
    report.pairs.push_back({e.task_id, p, t});
  }
  return report;
}

footrule_report footrule_topk(const ranking& pred, const ranking& truth, std::size_t k) {
  if (k < 1 || k > pred.size()) {
    throw error(error_code::k_out_of_range,
                "k=" + std::to_string(k) + " outside [1, " + std::to_string(pred.size()) + "]");
  }
  for (const auto& e : pred.entries()) {
    if (!truth.contains(e.task_id)) {
      throw error(error_code::unknown_task, "task '" + e.task_id + "' missing from truth");
    }
  }
  footrule_report report;
  report.k = k;
  for (std::size_t n = 1; n <= k; ++n) {
    const auto& id = pred.at_rank(n).task_id;
    const auto t = truth.position(id);
    report.distance += n > t ? n - t : t - n;
    report.pairs.push_back({id, n, t});
  }
  return report;
}

void write_ranking_csv(std::ostream& out, const ranking& r) {
  out << "task_id,score,rank\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& e = r.entries()[i];
    out << e.task_id << ',' << format_fixed(e.score) << ',' << (i + 1) << '\n';
  }
}

namespace {

struct csv_table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

csv_table read_csv(std::istream& in) {
  csv_table t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
    } else {
      if (fields.size() != t.header.size()) {
        throw error(error_code::invalid_argument, "CSV row has " + std::to_string(fields.size()) +
                                                      " fields, header has " +
                                                      std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

std::optional<std::size_t> column(const csv_table& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - t.header.begin());
}

}  // namespace

std::vector<scored_task> read_scores_csv(std::istream& in) {
  const auto t = read_csv(in);
  const auto id_col = column(t, "task_id");
  const auto score_col = column(t, "score");
  if (!id_col || !score_col) {
    throw error(error_code::invalid_argument, "scores CSV needs task_id and score columns");
  }
  std::vector<scored_task> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back({row[*id_col], parse_double(row[*score_col])});
  return out;
}

ranking read_ranking_csv(std::istream& in) {
  const auto t = read_csv(in);
  const auto id_col = column(t, "task_id");
  const auto score_col = column(t, "score");
  const auto rank_col = column(t, "rank");
  if (!id_col || !score_col) {
    throw error(error_code::invalid_argument, "ranking CSV needs task_id and score columns");
  }
  std::vector<scored_task> tasks;
  for (const auto& row : t.rows) tasks.push_back({row[*id_col], parse_double(row[*score_col])});
  if (tasks.empty()) throw error(error_code::invalid_argument, "ranking CSV has no rows");
  if (!rank_col) return build_ranking(std::move(tasks));

  std::vector<std::optional<scored_task>> ordered(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const double rank = parse_double(t.rows[i][*rank_col]);
    const auto slot = static_cast<std::size_t>(rank);
    if (rank != std::floor(rank) || slot < 1 || slot > tasks.size() || ordered[slot - 1]) {
      throw error(error_code::invalid_argument,
                  "ranks must be a permutation of 1.." + std::to_string(tasks.size()));
    }
    ordered[slot - 1] = tasks[i];
  }
  std::vector<scored_task> flat;
  flat.reserve(ordered.size());
  for (auto& o : ordered) flat.push_back(std::move(*o));
  return ranking::from_ordered(std::move(flat));
}

}  // namespace xfersel
