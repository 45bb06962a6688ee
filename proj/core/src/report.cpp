#include "semcont/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "semcont/datasets.hpp"
#include "semcont/plot.hpp"
#include "semcont/runconfig.hpp"
#include "semcont/trainer.hpp"

namespace fs = std::filesystem;

namespace semcont {

std::string final_checkpoint(const std::string& run_dir) {
  std::string best;
  int best_epoch = -1;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("checkpoint-epoch", 0) != 0) continue;
    const int epoch = std::atoi(name.c_str() + std::string("checkpoint-epoch").size());
    if (epoch > best_epoch) {
      best_epoch = epoch;
      best = entry.path().string();
    }
  }
  if (best.empty()) throw std::runtime_error("report: no checkpoints in " + run_dir);
  return best;
}

namespace {

struct RunEntry {
  std::string dir, id;
  RunConfig config;
  Model model;
};

std::vector<std::pair<int64_t, double>> read_loss_curve(const std::string& run_dir) {
  std::ifstream f(fs::path(run_dir) / "metrics.csv");
  if (!f) throw std::runtime_error("report: missing metrics.csv in " + run_dir);
  std::vector<std::pair<int64_t, double>> out;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    long long step = 0;
    double base = 0, cont = 0, alpha = 0, total = 0;
    if (std::sscanf(line.c_str(), "%lld,%lf,%lf,%lf,%lf", &step, &base, &cont, &alpha, &total) ==
        5)
      out.emplace_back(step, total);
  }
  return out;
}

}  // namespace

void emit_report(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                 const ReportOptions& options) {
  if (run_dirs.empty()) throw std::invalid_argument("report: no run directories");
  fs::create_directories(out_dir);

  std::vector<RunEntry> runs;
  std::string dataset;
  for (const auto& dir : run_dirs) {
    RunEntry e{dir, fs::path(dir).filename().string(),
               load_runconfig((fs::path(dir) / "config.json").string()), Model()};
    if (dataset.empty()) dataset = e.config.dataset;
    else if (dataset != e.config.dataset)
      throw std::runtime_error("report: runs mix datasets (" + dataset + " vs " +
                               e.config.dataset + ")");
    e.model = Model::load(final_checkpoint(dir));
    runs.push_back(std::move(e));
  }

  LabeledDataset test = load_dataset(dataset, "test", options.data_root);
  LabeledDataset adv_sample = options.adv_sample_count < test.count()
                                  ? subset_seeded(test, options.adv_sample_count, options.seed)
                                  : test;

  char buf[256];
  {
    std::ofstream f(fs::path(out_dir) / "robustness.csv", std::ios::trunc);
    f << "run_id,regime,clean_accuracy,adv_accuracy\n";
    for (const auto& e : runs) {
      const double clean = evaluate_accuracy(e.model, test);
      const double adv = evaluate_adversarial(e.model, adv_sample, options.eval_attack);
      std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f\n", e.id.c_str(),
                    to_string(e.config.recipe.regime), clean, adv);
      f << buf;
    }
    if (!f) throw std::runtime_error("report: cannot write robustness.csv");
  }

  {
    std::ofstream f(fs::path(out_dir) / "continuity.csv", std::ios::trunc);
    f << "run_id,regime,kind,level,mean_ds\n";
    for (int k = 0; k < kAugmentKindCount; ++k) {
      const auto kind = static_cast<AugmentKind>(k);
      std::vector<Series> series;
      for (size_t r = 0; r < runs.size(); ++r) {
        Series s;
        s.label = std::string(to_string(runs[r].config.recipe.regime));
        s.color = series_color(r);
        for (int level = 1; level <= kAugmentLevelCount; ++level) {
          const double ds = evaluate_continuity(runs[r].model, test, kind, level,
                                                options.ds_sample_count, options.seed);
          std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%.9g\n", runs[r].id.c_str(),
                        to_string(runs[r].config.recipe.regime), to_string(kind), level, ds);
          f << buf;
          s.xs.push_back(level);
          s.ys.push_back(ds);
        }
        series.push_back(std::move(s));
      }
      render_line_plot((fs::path(out_dir) / ("continuity_" + std::string(to_string(kind)) +
                                             ".png")).string(),
                       std::string("MEAN DS VS LEVEL (") + to_string(kind) + ")", "LEVEL",
                       "MEAN DS", series);
    }
    if (!f) throw std::runtime_error("report: cannot write continuity.csv");
  }

  {
    // pass through any probe reports present in the run directories
    std::ofstream f(fs::path(out_dir) / "probes.csv", std::ios::trunc);
    f << "model_id,kind,severity,accuracy,n_samples,seed\n";
    for (const auto& e : runs) {
      for (const auto& entry : fs::directory_iterator(e.dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("probe", 0) != 0 || entry.path().extension() != ".csv") continue;
        std::ifstream pf(entry.path());
        std::string line;
        std::getline(pf, line);  // header
        while (std::getline(pf, line))
          if (!line.empty()) f << line << "\n";
      }
    }
  }

  {
    std::vector<Series> series;
    for (size_t r = 0; r < runs.size(); ++r) {
      Series s;
      s.label = runs[r].id;
      s.color = series_color(r);
      s.markers = false;
      for (const auto& [step, total] : read_loss_curve(runs[r].dir)) {
        s.xs.push_back(static_cast<double>(step));
        s.ys.push_back(total);
      }
      series.push_back(std::move(s));
    }
    render_line_plot((fs::path(out_dir) / "loss.png").string(), "TOTAL LOSS VS STEP", "STEP",
                     "LOSS", series);
  }
}

}  // namespace semcont
