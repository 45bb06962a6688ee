#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "semcont/datasets.hpp"
#include "semcont/probes.hpp"
#include "semcont/report.hpp"
#include "semcont/trainer.hpp"

using namespace semcont;
namespace fs = std::filesystem;

namespace {

struct ReportFixture {
  fs::path root;
  std::string data_root, runs_root;

  ReportFixture() {
    root = fs::temp_directory_path() / ("semcont_report_" + std::to_string(::getpid()));
    fs::remove_all(root);
    data_root = (root / "data").string();
    runs_root = (root / "runs").string();
    fs::create_directories(data_root);
    fs::create_directories(runs_root);
    materialize_dataset("cifar10", data_root, 200);
  }
  ~ReportFixture() { fs::remove_all(root); }

  std::string train_run(Regime regime, const char* name) {
    LabeledDataset tr = load_dataset("cifar10", "train", data_root);
    TrainingRecipe r;
    r.regime = regime;
    r.seed = 1;
    r.optimizer.epochs = 1;
    r.optimizer.batch_size = 64;
    r.attack.epsilon = 4;
    r.attack.step = 2;
    r.attack.iterations = 2;
    const std::string run = (fs::path(runs_root) / name).string();
    train_fresh(tr, r, run);
    return run;
  }
};

size_t count_lines(const fs::path& p) {
  std::ifstream f(p);
  size_t n = 0;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("emit_report writes the tables, curves and is deterministic") {
  ReportFixture fx;
  const std::string r1 = fx.train_run(Regime::BASE, "base-run");
  const std::string r2 = fx.train_run(Regime::C, "c-run");

  // drop a probe report into one run dir; it must be merged through
  {
    LabeledDataset te = load_dataset("cifar10", "test", fx.data_root);
    Model m = Model::load(final_checkpoint(r1));
    ProbeSpec spec;
    spec.kind = ProbeKind::sliding_puzzle;
    spec.severity_grid = {0, 4};
    ProbeReport rep = run_probe({{"base-run", &m}}, te, spec);
    rep.write_csv((fs::path(r1) / "probe_sliding_puzzle.csv").string());
  }

  ReportOptions opt;
  opt.eval_attack.epsilon = 2;
  opt.eval_attack.step = 1;
  opt.eval_attack.iterations = 1;
  opt.adv_sample_count = 50;
  opt.ds_sample_count = 50;
  opt.data_root = fx.data_root;

  const std::string out1 = (fx.root / "report1").string();
  emit_report({r1, r2}, out1, opt);

  CHECK(count_lines(fs::path(out1) / "robustness.csv") == 3);       // header + 2 runs
  CHECK(count_lines(fs::path(out1) / "continuity.csv") == 1 + 2 * 16);  // 4 kinds x 4 levels x 2
  CHECK(count_lines(fs::path(out1) / "probes.csv") == 3);           // header + 2 severities
  CHECK(fs::exists(fs::path(out1) / "loss.png"));
  CHECK(fs::exists(fs::path(out1) / "continuity_hue.png"));

  const std::string out2 = (fx.root / "report2").string();
  emit_report({r1, r2}, out2, opt);
  for (const char* f : {"robustness.csv", "continuity.csv", "probes.csv"}) {
    std::ifstream a(fs::path(out1) / f), b(fs::path(out2) / f);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }
  CHECK(file_fnv1a((fs::path(out1) / "loss.png").string()) ==
        file_fnv1a((fs::path(out2) / "loss.png").string()));
}

TEST_CASE("emit_report rejects empty input and mixed datasets") {
  CHECK_THROWS(emit_report({}, "out"));
}
