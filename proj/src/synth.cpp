#include "xfersel/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "xfersel/error.hpp"
#include "xfersel/rng.hpp"

namespace xfersel::synth {

namespace {

constexpr std::uint64_t mask_stream(std::size_t t) { return 1 + 4 * t; }
constexpr std::uint64_t feature_stream(std::size_t t) { return 2 + 4 * t; }
constexpr std::uint64_t view_stream(std::size_t source, std::size_t target) {
  return (std::uint64_t{1} << 32) + (std::uint64_t{source} << 16) + target;
}
constexpr std::uint64_t probe_stream = 3;

// One separable box-blur pass with edge clamping.
std::vector<double> box_blur(const std::vector<double>& in, std::size_t h, std::size_t w,
                             std::size_t radius) {
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const auto hh = static_cast<std::ptrdiff_t>(h);
  const auto ww = static_cast<std::ptrdiff_t>(w);
  std::vector<double> tmp(in.size());
  std::vector<double> out(in.size());
  const double norm = 1.0 / static_cast<double>(2 * radius + 1);
  for (std::ptrdiff_t y = 0; y < hh; ++y) {
    for (std::ptrdiff_t x = 0; x < ww; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -r; d <= r; ++d) {
        acc += in[static_cast<std::size_t>(y * ww + std::clamp(x + d, std::ptrdiff_t{0}, ww - 1))];
      }
      tmp[static_cast<std::size_t>(y * ww + x)] = acc * norm;
    }
  }
  for (std::ptrdiff_t y = 0; y < hh; ++y) {
    for (std::ptrdiff_t x = 0; x < ww; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -r; d <= r; ++d) {
        acc += tmp[static_cast<std::size_t>(std::clamp(y + d, std::ptrdiff_t{0}, hh - 1) * ww + x)];
      }
      out[static_cast<std::size_t>(y * ww + x)] = acc * norm;
    }
  }
  return out;
}

std::vector<std::uint8_t> make_masks(const synth_spec& spec, std::size_t t) {
  counter_rng rng{spec.seed, mask_stream(t)};
  const std::size_t grid = spec.height * spec.width;
  const auto fg = static_cast<std::size_t>(
      std::llround(spec.foreground_fraction * static_cast<double>(grid)));
  std::vector<std::uint8_t> masks;
  masks.reserve(spec.n_samples * grid);
  std::vector<std::size_t> order(grid);
  for (std::size_t s = 0; s < spec.n_samples; ++s) {
    std::vector<double> field(grid);
    for (auto& v : field) v = rng.normal();
    field = box_blur(field, spec.height, spec.width, spec.smoothing_radius);
    field = box_blur(field, spec.height, spec.width, spec.smoothing_radius);
    for (std::size_t i = 0; i < grid; ++i) order[i] = i;
    // Largest `fg` field values become foreground; index breaks exact ties.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return field[a] > field[b]; });
    std::vector<std::uint8_t> mask(grid, 0);
    for (std::size_t i = 0; i < fg; ++i) mask[order[i]] = 1;
    masks.insert(masks.end(), mask.begin(), mask.end());
  }
  return masks;
}

std::vector<float> model_features(double signal, double class_mean, double sigma, std::size_t channels,
                                  std::span<const std::uint8_t> labels,
                                  std::uint8_t positive_class, counter_rng& rng) {
  std::vector<float> out;
  out.reserve(labels.size() * channels);
  const double noise_scale = (1.0 - signal) * sigma;
  for (const auto y : labels) {
    const double mean = y == positive_class ? signal * class_mean : 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const double z = rng.normal();
      out.push_back(static_cast<float>(mean + noise_scale * z));
    }
  }
  return out;
}

}  // namespace

void synth_spec::validate() const {
  const auto fail = [](const std::string& what) { throw error(error_code::invalid_spec, what); };
  if (n_tasks == 0) fail("n_tasks must be >= 1");
  if (n_samples == 0 || height == 0 || width == 0 || channels == 0) {
    fail("n_samples, height, width and channels must be >= 1");
  }
  if (signal_strengths.size() != n_tasks) {
    fail("signal_strengths has " + std::to_string(signal_strengths.size()) +
         " entries, n_tasks is " + std::to_string(n_tasks));
  }
  for (double s : signal_strengths) {
    if (!(s >= 0.0 && s <= 1.0)) fail("signal strengths must lie in [0, 1]");
  }
  if (!(class_mean > 0.0) || !std::isfinite(class_mean)) fail("class_mean must be > 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
  if (!(foreground_fraction > 0.0 && foreground_fraction < 1.0)) {
    fail("foreground_fraction must lie in (0, 1)");
  }
  if (n_tasks > 65535) fail("at most 65535 tasks");
}

nlohmann::ordered_json to_json(const synth_spec& spec) {
  nlohmann::ordered_json j;
  j["n_tasks"] = spec.n_tasks;
  j["n_samples"] = spec.n_samples;
  j["height"] = spec.height;
  j["width"] = spec.width;
  j["channels"] = spec.channels;
  j["signal_strengths"] = spec.signal_strengths;
  j["seed"] = spec.seed;
  j["class_mean"] = spec.class_mean;
  j["noise_sigma"] = spec.noise_sigma;
  j["smoothing_radius"] = spec.smoothing_radius;
  j["foreground_fraction"] = spec.foreground_fraction;
  return j;
}

synth_spec synth_spec_from_json(const nlohmann::json& j) {
  synth_spec spec;
  try {
    if (!j.is_object()) throw error(error_code::invalid_spec, "synth spec must be a JSON object");
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("n_tasks", spec.n_tasks);
    get("n_samples", spec.n_samples);
    get("height", spec.height);
    get("width", spec.width);
    get("channels", spec.channels);
    get("signal_strengths", spec.signal_strengths);
    get("seed", spec.seed);
    get("class_mean", spec.class_mean);
    get("noise_sigma", spec.noise_sigma);
    get("smoothing_radius", spec.smoothing_radius);
    get("foreground_fraction", spec.foreground_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw error(error_code::invalid_spec, e.what());
  }
  spec.validate();
  return spec;
}

std::string task_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "SYN-%02zu", index);
  return buf;
}

std::vector<task_bundle> generate_tasks(const synth_spec& spec) {
  spec.validate();
  std::vector<task_bundle> out;
  out.reserve(spec.n_tasks);
  for (std::size_t t = 0; t < spec.n_tasks; ++t) {
    const auto id = task_id_for(t);
    task_bundle b;
    b.descriptor = task_descriptor(id, "SYN", "SYN", "synthetic", std::to_string(t));
    b.labels = label_mask_set(id, spec.n_samples, spec.height, spec.width, make_masks(spec, t), 1);
    counter_rng rng{spec.seed, feature_stream(t)};
    auto feats = model_features(spec.signal_strengths[t], spec.class_mean, spec.noise_sigma, spec.channels,
                                b.labels.values(), 1, rng);
    b.features.emplace(id, spec.channels, std::move(feats), b.labels);
    char extractor[64];
    std::snprintf(extractor, sizeof extractor, "synthetic:signal=%.6f", spec.signal_strengths[t]);
    b.extractor = extractor;
    out.push_back(std::move(b));
  }
  return out;
}

pixel_feature_set transfer_view(const synth_spec& spec, std::size_t source_index,
                                const task_bundle& target, std::size_t target_index) {
  spec.validate();
  if (source_index >= spec.n_tasks) throw error(error_code::invalid_spec, "source index out of range");
  counter_rng rng{spec.seed, view_stream(source_index, target_index)};
  auto feats = model_features(spec.signal_strengths[source_index], spec.class_mean, spec.noise_sigma,
                              spec.channels, target.labels.values(),
                              target.labels.positive_class(), rng);
  return {task_id_for(source_index), spec.channels, std::move(feats), target.labels};
}

double majority_rate(const label_mask_set& labels) {
  const auto values = labels.values();
  if (values.empty()) return 0.0;
  const auto fg = static_cast<double>(
      std::count(values.begin(), values.end(), labels.positive_class()));
  const double rate = fg / static_cast<double>(values.size());
  return std::max(rate, 1.0 - rate);
}

probe_result probe_transfer(const task_bundle& source, const task_bundle& target,
                            std::uint64_t seed, const probe_options& options) {
  if (!source.features || !target.features) {
    throw error(error_code::missing_features, "probe needs features on both bundles");
  }
  const auto& train_fs = *source.features;
  const auto& test_fs = *target.features;
  if (train_fs.channels() != test_fs.channels()) {
    throw error(error_code::dimension_mismatch,
                "probe: source has " + std::to_string(train_fs.channels()) +
                    " channels, target " + std::to_string(test_fs.channels()));
  }
  const auto train = flatten_pixels(train_fs, {options.max_train_pixels, mix64(seed ^ probe_stream)});
  const auto dim = static_cast<Eigen::Index>(train_fs.channels());
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto positive = train_fs.labels().positive_class();

  Eigen::MatrixXd x(n, dim + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = train.features.row(static_cast<std::size_t>(i));
    for (Eigen::Index c = 0; c < dim; ++c) x(i, c) = row[static_cast<std::size_t>(c)];
    x(i, dim) = 1.0;
    y(i) = train.labels[static_cast<std::size_t>(i)] == positive ? 1.0 : 0.0;
  }

  // Newton iterations on the mean log-loss + l2/2 |w|^2 (bias unpenalised).
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(dim + 1, options.l2);
  penalty(dim) = 1e-10;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const Eigen::VectorXd z = x * beta;
    const Eigen::VectorXd p = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    const Eigen::VectorXd wts = (p.array() * (1.0 - p.array())).matrix();
    Eigen::VectorXd grad = x.transpose() * (p - y) / static_cast<double>(n);
    grad.array() += penalty.array() * beta.array();
    Eigen::MatrixXd hess = x.transpose() * wts.asDiagonal() * x / static_cast<double>(n);
    hess.diagonal() += penalty;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }

  const auto test_labels = test_fs.labels().values();
  const auto test_positive = test_fs.labels().positive_class();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test_fs.total_pixels(); ++i) {
    const auto v = test_fs.pixel(i);
    double z = beta(dim);
    for (Eigen::Index c = 0; c < dim; ++c) z += beta(c) * v[static_cast<std::size_t>(c)];
    const bool predicted = z >= 0.0;
    const bool actual = test_labels[i] == test_positive;
    correct += predicted == actual ? 1 : 0;
  }
  return {source.descriptor.task_id,
          static_cast<double>(correct) / static_cast<double>(test_fs.total_pixels())};
}

evaluation evaluate(const synth_spec& spec, const std::vector<task_bundle>& tasks,
                    std::size_t target_index, metric_kind metric, const selection_config& cfg,
                    parallelism par) {
  spec.validate();
  if (tasks.size() != spec.n_tasks || target_index >= tasks.size()) {
    throw error(error_code::invalid_spec, "task list does not match the synth spec");
  }
  const auto& target = tasks[target_index];
  std::vector<std::size_t> sources;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (t != target_index) sources.push_back(t);
  }
  if (sources.empty()) throw error(error_code::no_compatible_source, "no synthetic sources");

  selection_config scoring = cfg;
  scoring.metric = metric;

  evaluation ev;
  ev.target_id = target.descriptor.task_id;
  ev.metric = metric;
  ev.metric_scores.resize(sources.size());
  ev.probe_scores.resize(sources.size());
  ev.source_signal.resize(sources.size());
  parallel_for(sources.size(), par, [&](std::size_t k) {
    const std::size_t s = sources[k];
    const auto& source = tasks[s];
    const auto view = transfer_view(spec, s, target, target_index);
    const auto scored = score_source(source, target, &view, scoring, parallelism{1});
    task_bundle view_bundle{target.descriptor, target.labels, view, source.extractor};
    const auto probe = probe_transfer(source, view_bundle, spec.seed);
    ev.metric_scores[k] = {source.descriptor.task_id, scored.score};
    ev.probe_scores[k] = {source.descriptor.task_id, probe.accuracy};
    ev.source_signal[k] = spec.signal_strengths[s];
  });
  ev.metric_ranking = build_ranking(ev.metric_scores);
  ev.probe_ranking = build_ranking(ev.probe_scores);
  ev.footrule_top1 = footrule_topk(ev.metric_ranking, ev.probe_ranking, 1).distance;
  ev.footrule_full = footrule_full(ev.metric_ranking, ev.probe_ranking).distance;
  return ev;
}

}  // namespace xfersel::synth
