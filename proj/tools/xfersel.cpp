// xfersel: source-task selection for segmentation transfer learning.
//
// Exit codes: 0 success, 2 validation / I/O error, 3 no compatible source.
// Errors go to stderr as a single `ERROR <Code>: <detail>` line.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xfersel/bundle_io.hpp"
#include "xfersel/error.hpp"
#include "xfersel/hscore.hpp"
#include "xfersel/otce.hpp"
#include "xfersel/pipeline.hpp"
#include "xfersel/ranking.hpp"
#include "xfersel/roi_sim.hpp"
#include "xfersel/synth.hpp"
#include "xfersel/text.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace xfersel;

namespace {

struct global_options {
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string output;
  std::string format = "csv";
};

std::string scientific(double v) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.setf(std::ios::scientific);
  out.precision(6);
  out << v;
  return out.str();
}

/// Collects one command's output. CSV mode prints `key,value` lines after a
/// `# config` header; JSON mode prints {command, config, result}.
class report_writer {
 public:
  report_writer(const global_options& g, std::string command, ordered_json config)
      : global_(g), command_(std::move(command)), config_(std::move(config)) {}

  void value(const std::string& key, const std::string& csv_text, ordered_json json_value) {
    lines_.push_back(key + "," + csv_text);
    result_[key] = std::move(json_value);
  }
  void number(const std::string& key, double v) { value(key, format_fixed(v), v); }
  void integer(const std::string& key, std::uint64_t v) { value(key, std::to_string(v), v); }
  void text(const std::string& key, const std::string& v) { value(key, v, v); }
  void table(const std::string& key, const std::vector<std::string>& csv_rows, ordered_json rows) {
    lines_.push_back("[" + key + "]");
    lines_.insert(lines_.end(), csv_rows.begin(), csv_rows.end());
    result_[key] = std::move(rows);
  }

  void flush() const {
    std::string body;
    if (global_.format == "json") {
      ordered_json doc;
      doc["command"] = command_;
      doc["config"] = config_;
      doc["result"] = result_;
      body = doc.dump(2) + "\n";
    } else {
      body = "# " + command_ + " " + config_.dump() + "\n";
      for (const auto& l : lines_) body += l + "\n";
    }
    if (global_.output.empty()) {
      std::cout << body << std::flush;
      return;
    }
    std::ofstream out(global_.output, std::ios::binary | std::ios::trunc);
    if (!out) throw error(error_code::io_failure, "cannot write " + global_.output);
    out << body;
    if (!out) throw error(error_code::io_failure, "write failed for " + global_.output);
  }

 private:
  const global_options& global_;
  std::string command_;
  ordered_json config_;
  std::vector<std::string> lines_;
  ordered_json result_ = ordered_json::object();
};

ordered_json ranking_rows(const ranking& r, std::vector<std::string>& csv) {
  ordered_json rows = ordered_json::array();
  csv.push_back("rank,task_id,score");
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& e = r.entries()[i];
    csv.push_back(std::to_string(i + 1) + "," + e.task_id + "," + format_fixed(e.score));
    rows.push_back({{"rank", i + 1}, {"task_id", e.task_id}, {"score", e.score}});
  }
  return rows;
}

std::map<std::string, double> read_key_values(const std::string& path, const char* key_col,
                                              const char* value_col) {
  std::ifstream in(path);
  if (!in) throw error(error_code::io_failure, "cannot open " + path);
  std::string line;
  std::vector<std::string> header;
  std::map<std::string, double> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    std::optional<std::size_t> k;
    std::optional<std::size_t> v;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == key_col) k = i;
      if (header[i] == value_col) v = i;
    }
    if (!k || !v || fields.size() != header.size()) {
      throw error(error_code::invalid_argument, path + ": expected columns " + key_col + "," +
                                                    value_col);
    }
    out[fields[*k]] = parse_double(fields[*v]);
  }
  return out;
}

ranking read_ranking_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(error_code::io_failure, "cannot open " + path);
  return read_ranking_csv(in);
}

task_bundle load_required(const std::string& path) { return load_bundle(path); }

ordered_json sinkhorn_json(const sinkhorn_params& p, cost_normalization norm) {
  return {{"epsilon", p.epsilon},
          {"max_iters", p.max_iters},
          {"marginal_tol", p.marginal_tol},
          {"log_domain", p.log_domain},
          {"normalize_cost", std::string(to_string(norm))}};
}

// ---------------------------------------------------------------------------

struct roi_sim_args {
  std::string source;
  std::string target;
  std::string mode = "paired";
  std::size_t pairs = 256;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

int run_roi_sim(const global_options& g, const roi_sim_args& a) {
  roi_sim_options opts;
  opts.mode = parse_pairing_mode(a.mode);
  opts.max_pairs = a.pairs;
  opts.seed = g.seed;
  opts.ssim = {a.k1, a.k2, a.dynamic_range};
  const auto source = load_required(a.source);
  const auto target = load_required(a.target);
  const auto r = roi_sim(source.labels, target.labels, opts, {g.threads});

  report_writer out(g, "roi-sim",
                    {{"source", a.source},
                     {"target", a.target},
                     {"mode", std::string(to_string(opts.mode))},
                     {"pairs", a.pairs},
                     {"seed", g.seed},
                     {"k1", a.k1},
                     {"k2", a.k2},
                     {"dynamic_range", a.dynamic_range}});
  out.text("source_id", r.source_id);
  out.text("target_id", r.target_id);
  out.number("roi_sim", r.score);
  out.integer("n_pairs", r.n_pairs);
  out.number("min_pair", r.min_pair_score);
  out.number("max_pair", r.max_pair_score);
  out.flush();
  return 0;
}

struct score_args {
  std::string metric;
  std::string source;
  std::string target;
  std::size_t max_pixels = 4096;
  double epsilon = 0.1;
  std::size_t max_iters = 1000;
  double marginal_tol = 1e-9;
  bool scaling_domain = false;
  std::string normalize_cost = "none";
  double ridge = 1e-8;
};

int run_score(const global_options& g, const score_args& a) {
  const auto metric = parse_metric_kind(a.metric);
  const auto source = load_required(a.source);
  const auto target = load_required(a.target);
  if (!target.features) {
    throw error(error_code::missing_features, "target bundle " + a.target + " has no features");
  }
  ordered_json config{{"metric", std::string(to_string(metric))}, {"source", a.source}, {"target", a.target}};

  if (metric == metric_kind::hscore) {
    hscore_params params{a.ridge, 2};
    config["ridge"] = a.ridge;
    report_writer out(g, "score", config);
    const auto r = hscore_segmentation(*target.features, params, {g.threads});
    out.text("source_id", source.descriptor.task_id);
    out.text("target_id", target.descriptor.task_id);
    out.number("hscore", r.score);
    out.integer("skipped_pixels", r.skipped_pixels);
    out.integer("grid_pixels", target.labels.pixels_per_mask());
    out.flush();
    return 0;
  }

  if (!source.features) {
    throw error(error_code::missing_features, "source bundle " + a.source + " has no features");
  }
  otce_options opts;
  opts.sampler = {a.max_pixels, g.seed};
  opts.sinkhorn = {a.epsilon, a.max_iters, a.marginal_tol, !a.scaling_domain};
  opts.normalization = parse_cost_normalization(a.normalize_cost);
  config["sinkhorn"] = sinkhorn_json(opts.sinkhorn, opts.normalization);
  config["sampler"] = {{"max_pixels", a.max_pixels}, {"seed", g.seed}};
  report_writer out(g, "score", config);
  const auto r = otce(*source.features, *target.features, opts, {g.threads});
  out.text("source_id", source.descriptor.task_id);
  out.text("target_id", target.descriptor.task_id);
  out.number("otce", r.score);
  out.number("ot_cost", r.ot_cost);
  out.integer("sinkhorn_iterations", r.iterations_used);
  out.value("sinkhorn_residual", scientific(r.final_marginal_error), r.final_marginal_error);
  out.integer("converged", r.final_marginal_error <= a.marginal_tol ? 1 : 0);
  out.integer("source_pixels", r.source_pixels);
  out.integer("target_pixels", r.target_pixels);
  out.flush();
  return 0;
}

struct select_args {
  std::string target;
  std::string sources;
  std::string path = "guided";
  std::string metric = "hscore";
  std::size_t top_k = 1;
  std::size_t roi_keep = 1;
  bool fallback_all = false;
  std::string scores_file;
  std::string roi_sim_file;
  std::string target_features;
  std::string mode = "paired";
  std::size_t pairs = 256;
  std::size_t max_pixels = 4096;
  double epsilon = 0.1;
  double ridge = 1e-8;
  std::string normalize_cost = "none";
};

int run_select(const global_options& g, const select_args& a) {
  selection_config cfg;
  cfg.path = parse_selection_path(a.path);
  cfg.metric = parse_metric_kind(a.metric);
  cfg.top_k = a.top_k;
  cfg.roi_keep_classes = a.roi_keep;
  cfg.on_no_match = a.fallback_all ? no_match_policy::fallback_all : no_match_policy::error;
  cfg.hscore.ridge = a.ridge;
  cfg.otce.sampler = {a.max_pixels, g.seed};
  cfg.otce.sinkhorn.epsilon = a.epsilon;
  cfg.otce.normalization = parse_cost_normalization(a.normalize_cost);
  cfg.roi.mode = parse_pairing_mode(a.mode);
  cfg.roi.max_pairs = a.pairs;
  cfg.roi.seed = g.seed;
  cfg.validate();

  const auto target = load_required(a.target);
  const auto pool = load_bundle_pool(a.sources);

  selection_inputs inputs;
  if (!a.scores_file.empty()) {
    inputs.injected_scores = read_key_values(a.scores_file, "task_id", "score");
  }
  if (!a.roi_sim_file.empty()) {
    inputs.injected_roi_sim = read_key_values(a.roi_sim_file, "roi_class", "roi_sim");
  }
  if (!a.target_features.empty()) {
    for (const auto& entry : fs::directory_iterator(a.target_features)) {
      if (!entry.is_directory()) continue;
      auto view = load_bundle(entry.path());
      if (!view.features) continue;
      inputs.target_views.emplace(entry.path().filename().string(), std::move(*view.features));
    }
  }

  const auto report = xfersel::select(pool, target, cfg, inputs, {g.threads});

  ordered_json doc = to_json(report);
  doc["inputs"] = {{"target", a.target},
                   {"sources", a.sources},
                   {"scores_file", a.scores_file},
                   {"roi_sim_file", a.roi_sim_file},
                   {"target_features", a.target_features},
                   {"seed", g.seed}};
  const fs::path out_dir = g.output.empty() ? fs::path(".") : fs::path(g.output);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  {
    std::ofstream json_out(out_dir / "selection.json", std::ios::binary | std::ios::trunc);
    if (!json_out) throw error(error_code::io_failure, "cannot write selection.json");
    json_out << doc.dump(2) << "\n";
    std::ofstream csv_out(out_dir / "ranking.csv", std::ios::binary | std::ios::trunc);
    if (!csv_out) throw error(error_code::io_failure, "cannot write ranking.csv");
    write_ranking_csv(csv_out, report.final_ranking);
  }

  // Top-k summary goes to stdout regardless of --output (which names the directory).
  global_options stdout_only = g;
  stdout_only.output.clear();
  report_writer out(stdout_only, "select", doc["config"]);
  out.text("target_id", report.target_id);
  out.integer("subset1_size", report.subset1.size());
  out.integer("subset2_size", report.subset2.size());
  std::vector<std::string> csv;
  ordered_json rows = ordered_json::array();
  csv.push_back("rank,task_id,score");
  const auto top = report.top(cfg.top_k);
  for (std::size_t i = 0; i < top.size(); ++i) {
    const auto& e = report.final_ranking.at_rank(i + 1);
    csv.push_back(std::to_string(i + 1) + "," + e.task_id + "," + format_fixed(e.score));
    rows.push_back({{"rank", i + 1}, {"task_id", e.task_id}, {"score", e.score}});
  }
  out.table("top_k", csv, rows);
  out.flush();
  return 0;
}

struct footrule_args {
  std::string pred;
  std::string truth;
  std::optional<std::size_t> top_k;
};

int run_footrule(const global_options& g, const footrule_args& a) {
  const auto pred = read_ranking_file(a.pred);
  const auto truth = read_ranking_file(a.truth);
  const auto r = a.top_k ? footrule_topk(pred, truth, *a.top_k) : footrule_full(pred, truth);
  report_writer out(g, "footrule",
                    {{"pred", a.pred},
                     {"truth", a.truth},
                     {"top_k", a.top_k ? ordered_json(*a.top_k) : ordered_json("full")}});
  out.integer("footrule", r.distance);
  std::vector<std::string> csv{"task_id,predicted_rank,truth_rank"};
  ordered_json rows = ordered_json::array();
  for (const auto& p : r.pairs) {
    csv.push_back(p.task_id + "," + std::to_string(p.predicted_rank) + "," +
                  std::to_string(p.truth_rank));
    rows.push_back({{"task_id", p.task_id},
                    {"predicted_rank", p.predicted_rank},
                    {"truth_rank", p.truth_rank}});
  }
  out.table("pairs", csv, rows);
  out.flush();
  return 0;
}

struct synth_args {
  std::string spec;
  std::string out;
};

synth::synth_spec spec_from_file(const std::string& path, std::uint64_t fallback_seed) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw error(error_code::io_failure, "cannot open " + path);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw error(error_code::invalid_spec, path + ": " + e.what());
    }
  }
  if (j.is_object() && !j.contains("seed")) j["seed"] = fallback_seed;
  return synth::synth_spec_from_json(j);
}

int run_synth(const global_options& g, const synth_args& a) {
  const auto spec = spec_from_file(a.spec, g.seed);
  const auto tasks = synth::generate_tasks(spec);
  const fs::path root(a.out);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) throw error(error_code::io_failure, "cannot create " + a.out);
  for (const auto& t : tasks) write_bundle(t, root / t.descriptor.task_id);
  {
    std::ofstream spec_out(root / "synth_spec.json", std::ios::binary | std::ios::trunc);
    if (!spec_out) throw error(error_code::io_failure, "cannot write synth_spec.json");
    spec_out << synth::to_json(spec).dump(2) << "\n";
  }
  report_writer out(g, "synth", {{"spec", synth::to_json(spec)}, {"out", a.out}});
  out.integer("tasks_written", tasks.size());
  std::vector<std::string> csv{"task_id,signal_strength"};
  ordered_json rows = ordered_json::array();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    csv.push_back(tasks[t].descriptor.task_id + "," + format_fixed(spec.signal_strengths[t]));
    rows.push_back({{"task_id", tasks[t].descriptor.task_id},
                    {"signal_strength", spec.signal_strengths[t]}});
  }
  out.table("tasks", csv, rows);
  out.flush();
  return 0;
}

struct synth_eval_args {
  std::string dir;
  std::string target;
  std::string metric = "otce";
  std::size_t max_pixels = 4096;
  double epsilon = 0.1;
  double ridge = 1e-8;
};

int run_synth_eval(const global_options& g, const synth_eval_args& a) {
  const fs::path root(a.dir);
  const auto spec = spec_from_file((root / "synth_spec.json").string(), g.seed);
  std::vector<task_bundle> tasks;
  std::optional<std::size_t> target_index;
  for (std::size_t t = 0; t < spec.n_tasks; ++t) {
    const auto id = synth::task_id_for(t);
    tasks.push_back(load_bundle(root / id));
    if (id == a.target) target_index = t;
  }
  if (!target_index) throw error(error_code::unknown_task, "no synthetic task '" + a.target + "'");

  selection_config cfg;
  cfg.metric = parse_metric_kind(a.metric);
  cfg.hscore.ridge = a.ridge;
  cfg.otce.sampler = {a.max_pixels, g.seed};
  cfg.otce.sinkhorn.epsilon = a.epsilon;
  const auto ev = synth::evaluate(spec, tasks, *target_index, cfg.metric, cfg, {g.threads});

  report_writer out(g, "synth-eval",
                    {{"dir", a.dir},
                     {"target", a.target},
                     {"metric", std::string(to_string(cfg.metric))},
                     {"seed", g.seed},
                     {"selection", config_to_json(cfg)}});
  out.text("target_id", ev.target_id);
  std::vector<std::string> csv{"task_id,signal_strength,metric_score,probe_accuracy"};
  ordered_json rows = ordered_json::array();
  for (std::size_t k = 0; k < ev.metric_scores.size(); ++k) {
    csv.push_back(ev.metric_scores[k].task_id + "," + format_fixed(ev.source_signal[k]) + "," +
                  format_fixed(ev.metric_scores[k].score) + "," +
                  format_fixed(ev.probe_scores[k].score));
    rows.push_back({{"task_id", ev.metric_scores[k].task_id},
                    {"signal_strength", ev.source_signal[k]},
                    {"metric_score", ev.metric_scores[k].score},
                    {"probe_accuracy", ev.probe_scores[k].score}});
  }
  out.table("sources", csv, rows);
  std::vector<std::string> metric_csv;
  auto metric_rows = ranking_rows(ev.metric_ranking, metric_csv);
  out.table("metric_ranking", metric_csv, metric_rows);
  std::vector<std::string> probe_csv;
  auto probe_rows = ranking_rows(ev.probe_ranking, probe_csv);
  out.table("probe_ranking", probe_csv, probe_rows);
  out.integer("footrule_top1", ev.footrule_top1);
  out.integer("footrule_full", ev.footrule_full);
  out.flush();
  return 0;
}

int report_error(error_code code, const std::string& detail) {
  std::cerr << "ERROR " << to_string(code) << ": " << detail << "\n";
  return code == error_code::no_compatible_source ? 3 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xfersel: transferability-based source task selection"};
  app.require_subcommand(1);
  app.fallthrough();

  global_options g;
  app.add_option("--seed", g.seed, "Seed for every sampler (default 42)")
      ->envname("XFERSEL_SEED");
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores");
  app.add_option("--output", g.output, "Output file (select: output directory)");
  app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));

  roi_sim_args roi;
  auto* roi_cmd = app.add_subcommand("roi-sim", "RoI shape similarity between two bundles");
  roi_cmd->add_option("--source", roi.source)->required();
  roi_cmd->add_option("--target", roi.target)->required();
  roi_cmd->add_option("--mode", roi.mode)->check(CLI::IsMember({"paired", "mean"}));
  roi_cmd->add_option("--pairs", roi.pairs);
  roi_cmd->add_option("--k1", roi.k1);
  roi_cmd->add_option("--k2", roi.k2);
  roi_cmd->add_option("--dynamic-range", roi.dynamic_range);

  score_args score;
  auto* score_cmd = app.add_subcommand("score", "H-score or OTCE for one source/target pair");
  score_cmd->add_option("--metric", score.metric)
      ->required()
      ->check(CLI::IsMember({"hscore", "otce"}));
  score_cmd->add_option("--source", score.source)->required();
  score_cmd->add_option("--target", score.target, "Target bundle with source-model features")
      ->required();
  score_cmd->add_option("--max-pixels", score.max_pixels);
  score_cmd->add_option("--epsilon", score.epsilon);
  score_cmd->add_option("--max-iters", score.max_iters);
  score_cmd->add_option("--marginal-tol", score.marginal_tol);
  score_cmd->add_flag("--scaling-domain", score.scaling_domain);
  score_cmd->add_option("--normalize-cost", score.normalize_cost)
      ->check(CLI::IsMember({"none", "max"}));
  score_cmd->add_option("--ridge", score.ridge);

  select_args sel;
  auto* select_cmd = app.add_subcommand("select", "Rank source tasks for a target");
  select_cmd->add_option("--target", sel.target)->required();
  select_cmd->add_option("--sources", sel.sources, "Directory of source bundles")->required();
  select_cmd->add_option("--path", sel.path)->check(CLI::IsMember({"guided", "baseline"}));
  select_cmd->add_option("--metric", sel.metric)->check(CLI::IsMember({"hscore", "otce"}));
  select_cmd->add_option("--top-k", sel.top_k)->required();
  select_cmd->add_option("--roi-keep", sel.roi_keep);
  select_cmd->add_flag("--fallback-all", sel.fallback_all);
  select_cmd->add_option("--scores-file", sel.scores_file, "CSV task_id,score");
  select_cmd->add_option("--roi-sim-file", sel.roi_sim_file, "CSV roi_class,roi_sim");
  select_cmd->add_option("--target-features", sel.target_features,
                         "Directory of target bundles named by source task_id");
  select_cmd->add_option("--mode", sel.mode)->check(CLI::IsMember({"paired", "mean"}));
  select_cmd->add_option("--pairs", sel.pairs);
  select_cmd->add_option("--max-pixels", sel.max_pixels);
  select_cmd->add_option("--epsilon", sel.epsilon);
  select_cmd->add_option("--ridge", sel.ridge);
  select_cmd->add_option("--normalize-cost", sel.normalize_cost)
      ->check(CLI::IsMember({"none", "max"}));

  footrule_args foot;
  auto* foot_cmd = app.add_subcommand("footrule", "Spearman's footrule between two rankings");
  foot_cmd->add_option("--pred", foot.pred)->required();
  foot_cmd->add_option("--truth", foot.truth)->required();
  foot_cmd->add_option("--top-k", foot.top_k);

  synth_args syn;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic task family");
  synth_cmd->add_option("--spec", syn.spec, "JSON spec (defaults when omitted)");
  synth_cmd->add_option("--out", syn.out)->required();

  synth_eval_args sev;
  auto* synth_eval_cmd =
      app.add_subcommand("synth-eval", "Compare metric and probe rankings on synthetic tasks");
  synth_eval_cmd->add_option("--dir", sev.dir)->required();
  synth_eval_cmd->add_option("--target", sev.target)->required();
  synth_eval_cmd->add_option("--metric", sev.metric)->check(CLI::IsMember({"hscore", "otce"}));
  synth_eval_cmd->add_option("--max-pixels", sev.max_pixels);
  synth_eval_cmd->add_option("--epsilon", sev.epsilon);
  synth_eval_cmd->add_option("--ridge", sev.ridge);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(error_code::invalid_argument, e.what());
  }

  try {
    if (*roi_cmd) return run_roi_sim(g, roi);
    if (*score_cmd) return run_score(g, score);
    if (*select_cmd) return run_select(g, sel);
    if (*foot_cmd) return run_footrule(g, foot);
    if (*synth_cmd) return run_synth(g, syn);
    if (*synth_eval_cmd) return run_synth_eval(g, sev);
  } catch (const xfersel::error& e) {
    return report_error(e.code(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(error_code::io_failure, e.what());
  } catch (const std::exception& e) {
    return report_error(error_code::invalid_argument, e.what());
  }
  return 2;
}
