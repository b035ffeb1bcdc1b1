#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "paper_tables.hpp"
#include "run.hpp"
#include "temp_dir.hpp"
#include "xfersel/bundle_io.hpp"
#include "xfersel/roi_sim.hpp"

using namespace xfersel;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  temp_dir tmp{"cli"};

  run_result xfersel(const std::string& args) {
    return run_command(std::string(XFERSEL_CLI) + " " + args, tmp / "stderr.txt");
  }

  std::string path(const std::string& name) const { return shell_quote((tmp / name).string()); }

  void write(const std::string& name, const std::string& text) {
    std::ofstream(tmp / name, std::ios::binary) << text;
  }

  // 4 samples on an HxW grid with C channels; labels from `label_of(sample, pixel)`.
  template <class F>
  void make_bundle(const std::string& name, std::size_t h, std::size_t w, std::size_t c,
                   F label_of) {
    const std::size_t n = 4;
    std::vector<std::uint8_t> lab(n * h * w);
    std::vector<float> f(n * h * w * c);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t p = 0; p < h * w; ++p) {
        lab[s * h * w + p] = static_cast<std::uint8_t>(label_of(s, p));
        for (std::size_t k = 0; k < c; ++k)
          f[(s * h * w + p) * c + k] = static_cast<float>((s * 7 + p * 3 + k) % 5) * 0.1f;
      }
    task_bundle b;
    b.descriptor = task_descriptor(name, "ED", "T2", "test");
    b.labels = label_mask_set(name, n, h, w, lab);
    b.features.emplace(name, c, f, b.labels);
    write_bundle(b, tmp / name);
  }
};

}  // namespace

TEST_F(Cli, RoiSimIdenticalBundles) {
  make_bundle("a", 4, 4, 2, [](std::size_t s, std::size_t p) { return (s + p) % 3 == 0; });
  const auto r = xfersel("roi-sim --source " + path("a") + " --target " + path("a"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("\nroi_sim,1.000000\n"), std::string::npos) << r.out;
  EXPECT_TRUE(r.err.empty());
}

TEST_F(Cli, RoiSimMissingBundle) {
  const auto r = xfersel("roi-sim --source " + path("nope") + " --target " + path("nope"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.err.rfind("ERROR MissingManifest", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(Cli, RoiSimMeanModeMatchesLibrary) {
  make_bundle("a", 4, 4, 2, [](std::size_t s, std::size_t p) { return (s + p) % 3 == 0; });
  make_bundle("b", 4, 4, 2, [](std::size_t s, std::size_t p) { return (s * p) % 4 == 1; });
  const auto r = xfersel("--format json roi-sim --mode mean --source " + path("a") + " --target " +
                         path("b"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  roi_sim_options o;
  o.mode = pairing_mode::mean_mask;
  const auto lib = roi_sim(load_bundle(tmp / "a").labels, load_bundle(tmp / "b").labels, o);
  EXPECT_EQ(j["result"]["roi_sim"].get<double>(), lib.score);
  EXPECT_EQ(j["config"]["mode"], "mean");
}

TEST_F(Cli, ScoreOtceSingleClassTarget) {
  make_bundle("s", 3, 3, 2, [](std::size_t s, std::size_t p) { return (s + p) % 2; });
  make_bundle("t", 3, 3, 2, [](std::size_t, std::size_t) { return 1; });
  const auto r = xfersel("score --metric otce --source " + path("s") + " --target " + path("t"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("\notce,0.000000\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("sinkhorn_residual,"), std::string::npos);
}

TEST_F(Cli, ScoreHscoreConstantLabels) {
  make_bundle("s", 3, 5, 2, [](std::size_t, std::size_t) { return 0; });
  const auto r = xfersel("score --metric hscore --source " + path("s") + " --target " + path("s"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("\nhscore,0.000000\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\nskipped_pixels,15\n"), std::string::npos) << r.out;
}

TEST_F(Cli, ScoreChannelMismatch) {
  make_bundle("s", 3, 3, 2, [](std::size_t s, std::size_t p) { return (s + p) % 2; });
  make_bundle("t", 3, 3, 3, [](std::size_t s, std::size_t p) { return (s * p) % 2; });
  const auto r = xfersel("score --metric otce --source " + path("s") + " --target " + path("t"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.err.rfind("ERROR DimensionMismatch", 0), 0u) << r.err;
}

TEST_F(Cli, UnknownFlagIsAnError) {
  const auto r = xfersel("score --metric leep --source x --target y");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.err.rfind("ERROR ", 0), 0u) << r.err;
}

TEST_F(Cli, SelectGuidedAndBaselineOnTableIV) {
  paper::write_pool(paper::load_table("table_iv_et22t2.csv"), "ET-22-T2", tmp.path().string());
  const std::string common = " --target " + path("target") + " --sources " + path("sources") +
                             " --metric hscore --top-k 1 --scores-file " + path("scores_hscore.csv") +
                             " --roi-sim-file " + path("roi_sim.csv");
  const auto g = xfersel("--output " + path("guided") + " select --path guided" + common);
  ASSERT_EQ(g.exit_code, 0) << g.err;
  EXPECT_NE(g.out.find("\n1,ED-13-T2,1.403100\n"), std::string::npos) << g.out;
  const auto sel = nlohmann::json::parse(read_file(tmp / "guided" / "selection.json"));
  EXPECT_EQ(sel["subset2"].size(), 4u);
  EXPECT_EQ(read_file(tmp / "guided" / "ranking.csv").substr(0, 28), "task_id,score,rank\nED-13-T2,");

  const auto b = xfersel("--output " + path("baseline") + " select --path baseline" + common);
  ASSERT_EQ(b.exit_code, 0) << b.err;
  EXPECT_NE(b.out.find("\n1,NCR-13-T2,10.524700\n"), std::string::npos) << b.out;
}

TEST_F(Cli, SelectNoCompatibleSource) {
  std::vector<paper::source_row> t1;
  for (const auto& r : paper::load_table("table_iv_et22t2.csv"))
    if (r.task_id.ends_with("-T1")) t1.push_back(r);
  paper::write_pool(t1, "ET-22-T2", tmp.path().string());
  const std::string common = "select --target " + path("target") + " --sources " + path("sources") +
                             " --top-k 1 --scores-file " + path("scores_hscore.csv") +
                             " --roi-sim-file " + path("roi_sim.csv");
  const auto r = xfersel("--output " + path("out") + " " + common);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(r.err.rfind("ERROR NoCompatibleSource", 0), 0u) << r.err;
  const auto fb = xfersel("--output " + path("out") + " " + common + " --fallback-all");
  EXPECT_EQ(fb.exit_code, 0) << fb.err;
  EXPECT_TRUE(nlohmann::json::parse(read_file(tmp / "out" / "selection.json"))["modality_fallback"]);
}

TEST_F(Cli, FootruleSupplementaryExample) {
  write("a.csv", "task_id,score,rank\nx,3,1\ny,2,2\nz,1,3\n");
  write("b.csv", "task_id,score,rank\ny,3,1\nx,2,2\nz,1,3\n");
  auto r = xfersel("footrule --pred " + path("a.csv") + " --truth " + path("b.csv"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("\nfootrule,2\n"), std::string::npos) << r.out;
  r = xfersel("footrule --pred " + path("a.csv") + " --truth " + path("a.csv"));
  EXPECT_NE(r.out.find("\nfootrule,0\n"), std::string::npos) << r.out;
}

TEST_F(Cli, FootruleTableVBaselineTop1) {
  paper::write_pool(paper::load_table("table_v_et20t1.csv"), "ET-20-T1", tmp.path().string());
  const auto s = xfersel("--output " + path("sel") + " select --path baseline --metric hscore --top-k 1"
                         " --target " + path("target") + " --sources " + path("sources") +
                         " --scores-file " + path("scores_hscore.csv"));
  ASSERT_EQ(s.exit_code, 0) << s.err;
  const auto r = xfersel("footrule --top-k 1 --pred " + path("sel/ranking.csv") + " --truth " +
                         path("dice.csv"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("\nfootrule,14\n"), std::string::npos) << r.out;
}

TEST_F(Cli, FootruleIdMismatch) {
  write("a.csv", "task_id,score\nx,1\ny,2\n");
  write("b.csv", "task_id,score\nx,1\nq,2\n");
  auto r = xfersel("footrule --pred " + path("a.csv") + " --truth " + path("b.csv"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.err.rfind("ERROR IdSetMismatch", 0), 0u) << r.err;
  r = xfersel("footrule --top-k 2 --pred " + path("a.csv") + " --truth " + path("b.csv"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.err.rfind("ERROR UnknownTask", 0), 0u) << r.err;
}

TEST_F(Cli, SynthWritesReloadableDeterministicBundles) {
  write("spec.json", R"({"n_tasks": 3, "n_samples": 4, "height": 6, "width": 6,
                         "signal_strengths": [0.0, 0.5, 1.0]})");
  ASSERT_EQ(xfersel("synth --spec " + path("spec.json") + " --out " + path("a")).exit_code, 0);
  ASSERT_EQ(xfersel("synth --spec " + path("spec.json") + " --out " + path("b")).exit_code, 0);
  const auto pool = load_bundle_pool(tmp / "a");
  ASSERT_EQ(pool.size(), 3u);
  for (const auto& entry : fs::recursive_directory_iterator(tmp / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), tmp / "a");
    EXPECT_EQ(read_file(entry.path()), read_file(tmp / "b" / rel)) << rel;
  }
  EXPECT_TRUE(fs::exists(tmp / "a" / "synth_spec.json"));
}

TEST_F(Cli, SynthDefaultSpecAndEval) {
  ASSERT_EQ(xfersel("synth --out " + path("fam")).exit_code, 0);
  EXPECT_EQ(load_bundle_pool(tmp / "fam").size(), 7u);
  const auto r = xfersel("synth-eval --dir " + path("fam") + " --target SYN-00 --metric hscore");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("[metric_ranking]"), std::string::npos);
  EXPECT_NE(r.out.find("[probe_ranking]"), std::string::npos);
  EXPECT_NE(r.out.find("\nfootrule_top1,"), std::string::npos);
  const auto bad = xfersel("synth-eval --dir " + path("fam") + " --target SYN-99");
  EXPECT_EQ(bad.exit_code, 2);
  EXPECT_EQ(bad.err.rfind("ERROR UnknownTask", 0), 0u) << bad.err;
}

TEST_F(Cli, SeedFromEnvironmentAndFlag) {
  make_bundle("a", 4, 4, 2, [](std::size_t s, std::size_t p) { return (s + p) % 3 == 0; });
  const std::string cmd = "roi-sim --source " + path("a") + " --target " + path("a");
  auto r = run_command("XFERSEL_SEED=7 " + std::string(XFERSEL_CLI) + " " + cmd, tmp / "e");
  EXPECT_NE(r.out.find("\"seed\":7"), std::string::npos) << r.out;
  r = run_command("XFERSEL_SEED=7 " + std::string(XFERSEL_CLI) + " --seed 9 " + cmd, tmp / "e");
  EXPECT_NE(r.out.find("\"seed\":9"), std::string::npos) << r.out;
  r = xfersel(cmd);
  EXPECT_NE(r.out.find("\"seed\":42"), std::string::npos) << r.out;
}

TEST_F(Cli, OutputFileAndThreadInvariance) {
  make_bundle("s", 6, 6, 3, [](std::size_t s, std::size_t p) { return (s + p) % 2; });
  make_bundle("t", 6, 6, 3, [](std::size_t s, std::size_t p) { return (s * 3 + p) % 3 == 0; });
  const std::string cmd =
      " score --metric otce --source " + path("s") + " --target " + path("t");
  ASSERT_EQ(xfersel("--threads 1 --output " + path("one.csv") + cmd).exit_code, 0);
  ASSERT_EQ(xfersel("--threads 4 --output " + path("four.csv") + cmd).exit_code, 0);
  EXPECT_EQ(read_file(tmp / "one.csv"), read_file(tmp / "four.csv"));
  EXPECT_EQ(read_file(tmp / "one.csv").rfind("# score {", 0), 0u);
}
