#include "paper_tables.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "xfersel/bundle_io.hpp"
#include "xfersel/text.hpp"

namespace paper {

std::string fixture_path(const std::string& name) {
  return std::string(XFERSEL_FIXTURE_DIR) + "/" + name;
}

std::vector<source_row> load_table(const std::string& name) {
  std::ifstream in(fixture_path(name));
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::string line;
  std::getline(in, line);  // header
  std::vector<source_row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    source_row r;
    std::string cell;
    std::getline(ss, r.task_id, ',');
    std::getline(ss, cell, ',');
    r.dice = std::stod(cell);
    std::getline(ss, cell, ',');
    r.hscore = std::stod(cell);
    std::getline(ss, cell, ',');
    r.otce = std::stod(cell);
    rows.push_back(r);
  }
  return rows;
}

xfersel::task_bundle bundle_for(const std::string& task_id) {
  const auto a = task_id.find('-');
  const auto b = task_id.rfind('-');
  xfersel::task_bundle out;
  out.descriptor = xfersel::task_descriptor(task_id, task_id.substr(0, a), task_id.substr(b + 1),
                                            "FeTS2021", task_id.substr(a + 1, b - a - 1));
  out.labels = xfersel::label_mask_set(task_id, 1, 4, 4, std::vector<std::uint8_t>(16, 0));
  return out;
}

xfersel::ranking dice_ranking(const std::vector<source_row>& rows) {
  std::vector<xfersel::scored_task> s;
  for (const auto& r : rows) s.push_back({r.task_id, r.dice});
  return xfersel::build_ranking(std::move(s));
}

xfersel::selection_report run_selection(const std::vector<source_row>& rows,
                                        const std::string& target_id,
                                        xfersel::metric_kind metric, bool guided) {
  std::vector<xfersel::task_bundle> pool;
  std::map<std::string, double> scores;
  for (const auto& r : rows) {
    pool.push_back(bundle_for(r.task_id));
    scores[r.task_id] = metric == xfersel::metric_kind::hscore ? r.hscore : r.otce;
  }
  xfersel::selection_config cfg;
  cfg.path = guided ? xfersel::selection_path::guided : xfersel::selection_path::baseline;
  cfg.metric = metric;
  cfg.top_k = 4;
  xfersel::selection_inputs in;
  in.injected_scores = scores;
  in.injected_roi_sim = std::map<std::string, double>{{"ED", 0.987}, {"NCR", 0.984}};
  return xfersel::select(pool, bundle_for(target_id), cfg, in);
}

void write_pool(const std::vector<source_row>& rows, const std::string& target_id,
                const std::string& dir) {
  const std::filesystem::path root(dir);
  for (const auto& r : rows) xfersel::write_bundle(bundle_for(r.task_id), root / "sources" / r.task_id);
  xfersel::write_bundle(bundle_for(target_id), root / "target");
  std::ofstream h(root / "scores_hscore.csv"), o(root / "scores_otce.csv"), d(root / "dice.csv");
  h << "task_id,score\n";
  o << "task_id,score\n";
  d << "task_id,score\n";
  for (const auto& r : rows) {
    h << r.task_id << "," << xfersel::format_fixed(r.hscore, 4) << "\n";
    o << r.task_id << "," << xfersel::format_fixed(r.otce, 4) << "\n";
    d << r.task_id << "," << xfersel::format_fixed(r.dice, 3) << "\n";
  }
  std::ofstream roi(root / "roi_sim.csv");
  roi << "roi_class,roi_sim\nED,0.987\nNCR,0.984\n";
}

std::array<std::uint64_t, 4> topk_row(const xfersel::ranking& pred,
                                      const xfersel::ranking& truth) {
  std::array<std::uint64_t, 4> out{};
  for (std::size_t k = 1; k <= 4; ++k) out[k - 1] = xfersel::footrule_topk(pred, truth, k).distance;
  return out;
}

const std::vector<table_vi_cell_row>& table_vi() {
  using xfersel::metric_kind;
  static const std::vector<table_vi_cell_row> rows{
      {"ET-22-T2", "H-score w/o PK", metric_kind::hscore, false, {5, 10, 22, 27}},
      {"ET-22-T2", "H-score w/ PK", metric_kind::hscore, true, {4, 5, 6, 7}},
      {"ET-22-T2", "OTCE w/o PK", metric_kind::otce, false, {2, 2, 4, 12}},
      {"ET-22-T2", "OTCE w/ PK", metric_kind::otce, true, {2, 2, 4, 7}},
      {"ET-20-T1", "H-score w/o PK", metric_kind::hscore, false, {14, 24, 30, 40}},
      {"ET-20-T1", "H-score w/ PK", metric_kind::hscore, true, {0, 9, 9, 13}},
      {"ET-20-T1", "OTCE w/o PK", metric_kind::otce, false, {2, 14, 17, 23}},
      {"ET-20-T1", "OTCE w/ PK", metric_kind::otce, true, {2, 11, 13, 17}},
  };
  return rows;
}

}  // namespace paper
