#include <gtest/gtest.h>

#include <cmath>

#include "xfersel/error.hpp"
#include "xfersel/synth.hpp"

using namespace xfersel;
using namespace xfersel::synth;

namespace {

synth_spec small_spec(std::uint64_t seed) {
  synth_spec s;
  s.n_tasks = 3;
  s.n_samples = 8;
  s.height = 8;
  s.width = 8;
  s.signal_strengths = {0.0, 1.0, 0.5};
  s.seed = seed;
  return s;
}

task_bundle view_bundle(const synth_spec& spec, std::size_t src, const std::vector<task_bundle>& tasks,
                        std::size_t tgt) {
  return {tasks[tgt].descriptor, tasks[tgt].labels, transfer_view(spec, src, tasks[tgt], tgt),
          tasks[src].extractor};
}

}  // namespace

TEST(SynthSpec, Validation) {
  synth_spec s;
  EXPECT_NO_THROW(s.validate());
  s.signal_strengths.pop_back();
  EXPECT_THROW(s.validate(), error);
  s = {};
  s.signal_strengths[2] = 1.5;
  EXPECT_THROW(s.validate(), error);
  s = {};
  s.channels = 0;
  try {
    s.validate();
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), error_code::invalid_spec);
  }
}

TEST(SynthSpec, JsonRoundTripAndDefaults) {
  synth_spec s = small_spec(9);
  s.noise_sigma = 0.5;
  const auto back = synth_spec_from_json(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(s).dump());
  const auto defaults = synth_spec_from_json(nlohmann::json::object());
  EXPECT_EQ(to_json(defaults).dump(), to_json(synth_spec{}).dump());
  EXPECT_THROW(synth_spec_from_json(nlohmann::json::array()), error);
  EXPECT_THROW(synth_spec_from_json(nlohmann::json{{"n_tasks", "seven"}}), error);
}

TEST(GenerateTasks, DeterministicAndShaped) {
  const auto spec = small_spec(4);
  const auto a = generate_tasks(spec);
  const auto b = generate_tasks(spec);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a, b);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].descriptor.task_id, task_id_for(t));
    EXPECT_EQ(a[t].labels.n_samples(), 8u);
    ASSERT_TRUE(a[t].features);
    EXPECT_EQ(a[t].features->channels(), spec.channels);
  }
  const auto c = generate_tasks(small_spec(5));
  EXPECT_NE(a[0].labels, c[0].labels);
}

TEST(GenerateTasks, ForegroundFraction) {
  const auto tasks = generate_tasks(small_spec(6));
  for (const auto& t : tasks) {
    double fg = 0;
    for (auto v : t.labels.values()) fg += v;
    const double frac = fg / static_cast<double>(t.labels.values().size());
    EXPECT_NEAR(frac, 0.3, 0.05);
  }
}

TEST(GenerateTasks, NoiselessFullSignalIsClassIndicator) {
  synth_spec s = small_spec(7);
  s.noise_sigma = 0.0;
  const auto tasks = generate_tasks(s);
  const auto& t = tasks[1];  // s = 1
  for (std::size_t i = 0; i < t.features->total_pixels(); ++i) {
    const double expected = t.labels.values()[i] * s.class_mean;
    for (float v : t.features->pixel(i)) ASSERT_EQ(v, static_cast<float>(expected));
  }
}

TEST(GenerateTasks, ZeroSignalCarriesNoLabelInformation) {
  synth_spec s = small_spec(8);
  s.n_samples = 64;
  const auto tasks = generate_tasks(s);
  const auto& t = tasks[0];  // s = 0
  double sum[2] = {0, 0};
  double n[2] = {0, 0};
  for (std::size_t i = 0; i < t.features->total_pixels(); ++i) {
    const auto y = t.labels.values()[i];
    sum[y] += t.features->pixel(i)[0];
    n[y] += 1;
  }
  // Standard error of the difference is about 0.375 * sqrt(1/1200 + 1/2900) ~ 0.013.
  EXPECT_NEAR(sum[1] / n[1] - sum[0] / n[0], 0.0, 0.06);
}

TEST(ProbeTransfer, SeparableSourceIsPerfect) {
  synth_spec s = small_spec(9);
  s.noise_sigma = 0.0;
  const auto tasks = generate_tasks(s);
  EXPECT_EQ(probe_transfer(tasks[1], tasks[1], 1).accuracy, 1.0);
}

TEST(ProbeTransfer, ZeroSignalFallsToMajorityRate) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto spec = small_spec(seed);
    const auto tasks = generate_tasks(spec);
    const auto view = view_bundle(spec, 0, tasks, 2);
    const double acc = probe_transfer(tasks[0], view, seed).accuracy;
    EXPECT_NEAR(acc, majority_rate(tasks[2].labels), 0.05) << seed;
  }
}

TEST(ProbeTransfer, IdenticallySpecifiedSourcesAgree) {
  // Tasks 4 and 6 share s = 0.8 under the default spec. 64 samples keep the
  // pixel-sampling noise of the accuracy estimate well under the tolerance.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synth_spec spec;
    spec.seed = seed;
    spec.n_samples = 64;
    const auto tasks = generate_tasks(spec);
    const double a = probe_transfer(tasks[4], view_bundle(spec, 4, tasks, 5), seed).accuracy;
    const double b = probe_transfer(tasks[6], view_bundle(spec, 6, tasks, 5), seed).accuracy;
    EXPECT_LT(std::abs(a - b), 0.02) << seed;
  }
}

TEST(ProbeTransfer, ChannelMismatch) {
  auto a = small_spec(1);
  auto b = small_spec(1);
  b.channels = 2;
  const auto ta = generate_tasks(a);
  const auto tb = generate_tasks(b);
  try {
    probe_transfer(ta[0], tb[0], 1);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), error_code::dimension_mismatch);
  }
}

TEST(MajorityRate, CountsDominantClass) {
  EXPECT_DOUBLE_EQ(majority_rate(label_mask_set("m", 1, 2, 2, {0, 0, 0, 1})), 0.75);
  EXPECT_DOUBLE_EQ(majority_rate(label_mask_set("m", 1, 2, 2, {1, 1, 1, 0})), 0.75);
}

TEST(Evaluate, MetricsIncreaseWithSignal) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synth_spec spec;
    spec.n_tasks = 4;
    spec.signal_strengths = {0.1, 0.5, 0.9, 0.8};
    spec.seed = seed;
    const auto tasks = generate_tasks(spec);
    for (auto metric : {metric_kind::hscore, metric_kind::otce}) {
      const auto ev = evaluate(spec, tasks, 3, metric);
      ASSERT_EQ(ev.metric_scores.size(), 3u);
      EXPECT_LT(ev.metric_scores[0].score, ev.metric_scores[1].score) << seed;
      EXPECT_LT(ev.metric_scores[1].score, ev.metric_scores[2].score) << seed;
      EXPECT_EQ(ev.metric_ranking.at_rank(1).task_id, task_id_for(2));
    }
  }
}

TEST(Evaluate, ThreadCountDoesNotChangeResult) {
  const auto spec = small_spec(3);
  const auto tasks = generate_tasks(spec);
  const auto a = evaluate(spec, tasks, 2, metric_kind::otce, {}, {1});
  const auto b = evaluate(spec, tasks, 2, metric_kind::otce, {}, {3});
  EXPECT_EQ(a.metric_scores, b.metric_scores);
  EXPECT_EQ(a.probe_scores, b.probe_scores);
  EXPECT_EQ(a.footrule_full, b.footrule_full);
}
