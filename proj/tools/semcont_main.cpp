// semcont: train and evaluate classifiers under a logits-pairing continuity
// constraint, and measure its effects on robustness, feature reliance,
// attribution and dataset bias.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "semcont/datasets.hpp"
#include "semcont/embedviz.hpp"
#include "semcont/explain.hpp"
#include "semcont/perturb.hpp"
#include "semcont/plot.hpp"
#include "semcont/png_io.hpp"
#include "semcont/probes.hpp"
#include "semcont/report.hpp"
#include "semcont/runconfig.hpp"
#include "semcont/trainer.hpp"

namespace fs = std::filesystem;
using namespace semcont;

namespace {

/// Thrown once CLI11 has already printed help or a parse diagnostic.
struct ExitCode {
  int code;
};

void parse_sub(CLI::App& app, const std::vector<std::string>& args) {
  // CLI11 wants reversed arguments for the vector overload
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw ExitCode{app.exit(e)};
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t end = s.find(',', pos);
    if (end == std::string::npos) end = s.size();
    if (end > pos) out.push_back(s.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) out.push_back(std::stod(tok));
  return out;
}

std::array<float, 3> parse_color(const std::string& s) {
  auto v = parse_doubles(s);
  if (v.size() != 3) throw std::invalid_argument("color must be r,g,b in [0,1]");
  return {static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])};
}

LabeledDataset load_split(const std::string& name, const std::string& split, int64_t subset,
                          uint64_t seed) {
  LabeledDataset ds = load_dataset(name, split);
  if (subset > 0 && subset < ds.count()) ds = subset_seeded(ds, subset, seed);
  return ds;
}

/// Dataset name recorded in the run config next to a checkpoint, if any.
std::string dataset_of_checkpoint(const std::string& checkpoint) {
  const fs::path cfg = fs::path(checkpoint).parent_path() / "config.json";
  if (!fs::exists(cfg)) return "";
  return load_runconfig(cfg.string()).dataset;
}

int cmd_data(const std::vector<std::string>& args) {
  CLI::App app{"materialize datasets"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build", "materialize a dataset (raw files if present, else synthetic)");
  std::string name = "mnist", root;
  int64_t count = 0;
  build->add_option("--name", name, "mnist|cifar10|cifar100|svhn")->required();
  build->add_option("--count", count, "per-split count override (0 = canonical)");
  build->add_option("--root", root, "data root (default $SEMCONT_DATA_DIR or ./data)");

  auto* ccm = app.add_subcommand("build-colorful-mnist", "build the color-biased digit set");
  ColorfulMnistSpec spec;
  std::string maj = "1,0,0", mnr = "0,0,1", croot;
  ccm->add_option("--fraction", spec.train_majority_fraction, "train majority fraction");
  ccm->add_option("--seed", spec.seed, "assignment seed");
  ccm->add_option("--majority-color", maj, "train majority color r,g,b");
  ccm->add_option("--minority-color", mnr, "train minority color r,g,b");
  ccm->add_option("--root", croot, "data root");

  parse_sub(app, args);
  if (build->parsed()) {
    materialize_dataset(name, root, count);
    LabeledDataset tr = load_dataset(name, "train", root);
    std::printf("built %s: train=%lld test=%lld\n", name.c_str(),
                static_cast<long long>(tr.count()),
                static_cast<long long>(load_dataset(name, "test", root).count()));
  } else {
    spec.majority_train_color = parse_color(maj);
    spec.minority_train_color = parse_color(mnr);
    auto [tr, te] = build_colorful_mnist(spec, croot);
    std::printf("built colorful_mnist: train=%lld test=%lld majority_fraction=%g seed=%llu\n",
                static_cast<long long>(tr.count()), static_cast<long long>(te.count()),
                spec.train_majority_fraction, static_cast<unsigned long long>(spec.seed));
  }
  return 0;
}

int cmd_train(const std::vector<std::string>& args) {
  CLI::App app{"train a classifier under one of the four regimes"};
  std::string config_path, regime, dataset, out_dir, arch, attack_kv;
  double alpha = -1.0, lr = -1.0;
  int epochs = -1, batch = -1, level = -1;
  int64_t subset = 0;
  uint64_t seed = UINT64_MAX;
  bool paper_faithful = false, stop_gradient_clean = false;
  app.add_option("--config", config_path, "run config JSON (flags override file)");
  app.add_option("--regime", regime, "base|c|adv|advc");
  app.add_option("--dataset", dataset, "dataset id");
  app.add_option("--alpha", alpha, "continuity weight");
  app.add_option("--level", level, "augmentation level for C (0 = uniform 1..4)");
  app.add_option("--attack", attack_kv, "training attack, e.g. eps=8,step=2,iters=10");
  app.add_option("--epochs", epochs, "");
  app.add_option("--batch", batch, "");
  app.add_option("--lr", lr, "");
  app.add_option("--arch", arch, "mlp16|cnn_s|cnn_m");
  app.add_option("--seed", seed, "");
  app.add_option("--subset", subset, "train on a seeded subset of this size");
  app.add_option("--out", out_dir, "run directory");
  app.add_flag("--paper-faithful", paper_faithful, "Adam lr 1e-5 profile");
  app.add_flag("--stop-gradient-clean", stop_gradient_clean, "freeze the clean branch in DS");
  parse_sub(app, args);

  RunConfig rc;
  if (!config_path.empty()) rc = load_runconfig(config_path);
  if (!regime.empty()) rc.recipe.regime = regime_from_string(regime);
  if (!dataset.empty()) rc.dataset = dataset;
  if (alpha >= 0.0) rc.recipe.alpha = alpha;
  if (level >= 0) rc.recipe.augment_level = level;
  if (!attack_kv.empty()) rc.recipe.attack = attack_from_kv(attack_kv);
  if (epochs > 0) rc.recipe.optimizer.epochs = epochs;
  if (batch > 0) rc.recipe.optimizer.batch_size = batch;
  if (lr > 0) rc.recipe.optimizer.learning_rate = lr;
  if (paper_faithful) rc.recipe.optimizer.learning_rate = 1e-5;
  if (!arch.empty()) rc.recipe.arch = arch;
  if (seed != UINT64_MAX) rc.recipe.seed = seed;
  if (stop_gradient_clean) rc.recipe.stop_gradient_clean = true;
  if (!out_dir.empty()) rc.out_dir = out_dir;
  else if (config_path.empty()) {
    char name[128];
    std::snprintf(name, sizeof(name), "runs/%s-%s-seed%llu", rc.dataset.c_str(),
                  to_string(rc.recipe.regime), static_cast<unsigned long long>(rc.recipe.seed));
    rc.out_dir = name;
  }

  LabeledDataset train_data = load_split(rc.dataset, "train", subset, rc.recipe.seed);
  LabeledDataset test_data = load_dataset(rc.dataset, "test");
  Model model(rc.recipe.arch, static_cast<int>(train_data.images.dim(1)),
              static_cast<int>(train_data.images.dim(2)), train_data.num_classes,
              rc.recipe.seed);
  MetricsLog log = train(model, train_data, rc.recipe, rc.out_dir, &test_data, rc.dataset);
  const double acc = evaluate_accuracy(model, test_data);
  std::printf("run=%s regime=%s alpha=%g epochs=%d clean_accuracy=%.4f\n", rc.out_dir.c_str(),
              to_string(rc.recipe.regime), rc.recipe.effective_alpha(),
              rc.recipe.optimizer.epochs, acc);
  return 0;
}

int cmd_eval(const std::vector<std::string>& args) {
  CLI::App app{"clean and adversarial accuracy of a checkpoint"};
  std::string checkpoint, dataset, attack_kv, out;
  int64_t sample = 0;
  uint64_t seed = 0;
  app.add_option("--checkpoint", checkpoint)->required();
  app.add_option("--dataset", dataset, "defaults to the run config's dataset");
  app.add_option("--attack", attack_kv, "e.g. eps=8,step=2,iters=10");
  app.add_option("--sample", sample, "evaluate on a seeded subset");
  app.add_option("--seed", seed);
  app.add_option("--out", out, "write results JSON here");
  parse_sub(app, args);

  Model model = Model::load(checkpoint);
  if (dataset.empty()) dataset = dataset_of_checkpoint(checkpoint);
  if (dataset.empty()) throw std::invalid_argument("--dataset required (no run config found)");
  LabeledDataset test = load_split(dataset, "test", sample, seed);
  const double clean = evaluate_accuracy(model, test);
  std::printf("checkpoint=%s dataset=%s n=%lld clean_accuracy=%.4f", checkpoint.c_str(),
              dataset.c_str(), static_cast<long long>(test.count()), clean);
  double adv = -1.0;
  if (!attack_kv.empty()) {
    const AttackSpec attack = attack_from_kv(attack_kv);
    adv = evaluate_adversarial(model, test, attack);
    std::printf(" adv_accuracy=%.4f (eps=%g step=%g iters=%d)", adv, attack.epsilon, attack.step,
                attack.iterations);
  }
  std::printf("\n");
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    f << "{\"checkpoint\":\"" << checkpoint << "\",\"dataset\":\"" << dataset
      << "\",\"clean_accuracy\":" << clean;
    if (adv >= 0.0) f << ",\"adv_accuracy\":" << adv;
    f << "}\n";
  }
  return 0;
}

int cmd_sweep_alpha(const std::vector<std::string>& args) {
  CLI::App app{"train C-regime models across alpha values"};
  std::string alphas_str = "0,0.25,0.5,1.0,2.0", dataset = "colorful_mnist", out_dir = "runs/alpha-sweep";
  int epochs = 4, batch = 128;
  double lr = 1e-3;
  int64_t subset = 0, ds_samples = 512;
  uint64_t seed = 0;
  std::string arch = "cnn_s";
  app.add_option("--alphas", alphas_str);
  app.add_option("--dataset", dataset);
  app.add_option("--epochs", epochs);
  app.add_option("--batch", batch);
  app.add_option("--lr", lr);
  app.add_option("--arch", arch);
  app.add_option("--seed", seed);
  app.add_option("--subset", subset);
  app.add_option("--ds-samples", ds_samples);
  app.add_option("--out", out_dir);
  parse_sub(app, args);

  TrainingRecipe recipe;
  recipe.regime = Regime::C;
  recipe.optimizer.epochs = epochs;
  recipe.optimizer.batch_size = batch;
  recipe.optimizer.learning_rate = lr;
  recipe.arch = arch;
  recipe.seed = seed;
  LabeledDataset train_data = load_split(dataset, "train", subset, seed);
  LabeledDataset test_data = load_dataset(dataset, "test");
  auto rows = alpha_sweep(recipe, train_data, test_data, parse_doubles(alphas_str), ds_samples,
                          out_dir);

  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / "alpha_sweep.csv", std::ios::trunc);
  f << "alpha,accuracy,summed_ds_level1\n";
  Series acc_s{"ACCURACY", {}, {}, series_color(0), true};
  Series ds_s{"SUMMED DS", {}, {}, series_color(1), true};
  for (const auto& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.9g,%.6f,%.9g\n", r.alpha, r.accuracy, r.summed_ds_level1);
    f << buf;
    std::printf("alpha=%-6g accuracy=%.4f summed_ds_level1=%.5g\n", r.alpha, r.accuracy,
                r.summed_ds_level1);
    acc_s.xs.push_back(r.alpha);
    acc_s.ys.push_back(r.accuracy);
    ds_s.xs.push_back(r.alpha);
    ds_s.ys.push_back(r.summed_ds_level1);
  }
  render_line_plot((fs::path(out_dir) / "alpha_accuracy.png").string(), "ACCURACY VS ALPHA",
                   "ALPHA", "ACCURACY", {acc_s});
  render_line_plot((fs::path(out_dir) / "alpha_continuity.png").string(),
                   "SUMMED LEVEL-1 DS VS ALPHA", "ALPHA", "DS", {ds_s});
  return 0;
}

int cmd_probe(const std::vector<std::string>& args) {
  CLI::App app{"accuracy under destructive semantic probes"};
  std::string kind = "sliding_puzzle", checkpoints_str, out = "probe_report.csv", dataset,
              severities_str;
  int grid = 4;
  int64_t sample = 0;
  uint64_t seed = 0;
  app.add_option("--kind", kind, "rgb_translate|randomize_center|sliding_puzzle");
  app.add_option("--grid", grid, "sliding-puzzle grid k");
  app.add_option("--checkpoints", checkpoints_str, "comma-separated checkpoint files")->required();
  app.add_option("--severities", severities_str, "comma-separated severity values");
  app.add_option("--dataset", dataset);
  app.add_option("--sample", sample, "seeded test subset size");
  app.add_option("--seed", seed);
  app.add_option("--out", out);
  parse_sub(app, args);

  ProbeSpec spec;
  spec.kind = probe_kind_from_string(kind);
  spec.grid_k = grid;
  spec.seed = seed;
  spec.severity_grid =
      severities_str.empty() ? default_severities(spec.kind, grid) : parse_doubles(severities_str);

  std::vector<Model> models;
  std::vector<std::pair<std::string, const Classifier*>> refs;
  for (const auto& path : split_list(checkpoints_str)) {
    if (dataset.empty()) dataset = dataset_of_checkpoint(path);
    models.push_back(Model::load(path));
  }
  const auto names = split_list(checkpoints_str);
  for (size_t i = 0; i < models.size(); ++i)
    refs.emplace_back(fs::path(names[i]).parent_path().filename().string() + "/" +
                          fs::path(names[i]).filename().string(),
                      &models[i]);
  if (dataset.empty()) throw std::invalid_argument("--dataset required (no run config found)");

  LabeledDataset test = load_split(dataset, "test", sample, seed);
  ProbeReport report = run_probe(refs, test, spec);
  report.write_csv(out);
  for (const auto& r : report.rows)
    std::printf("%s severity=%-8g accuracy=%.4f\n", r.model_id.c_str(), r.severity, r.accuracy);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_explain(const std::vector<std::string>& args) {
  CLI::App app{"gradient attribution maps"};
  std::string method = "ig", checkpoint, image_path, out = "explain.png", layer, dataset;
  int steps = 256, target = -1;
  int64_t index = 0;
  app.add_option("--method", method, "ig|gradcam");
  app.add_option("--checkpoint", checkpoint)->required();
  app.add_option("--image", image_path, "input PNG (else --dataset/--index)");
  app.add_option("--dataset", dataset, "take the image from this dataset's test split");
  app.add_option("--index", index, "image index within the split");
  app.add_option("--class", target, "target class (-1 = predicted)");
  app.add_option("--steps", steps, "integration steps");
  app.add_option("--layer", layer, "activation for gradcam (default last conv)");
  app.add_option("--out", out);
  parse_sub(app, args);

  Model model = Model::load(checkpoint);
  ImageBatch x;
  if (!image_path.empty()) {
    x = from_png_image(read_png(image_path));
    const auto dims = model.input_dims();
    x = adapt_images(x, dims[0], dims[1]);
  } else {
    if (dataset.empty()) dataset = dataset_of_checkpoint(checkpoint);
    if (dataset.empty()) throw std::invalid_argument("--image or --dataset required");
    LabeledDataset test = load_dataset(dataset, "test");
    if (index < 0 || index >= test.count()) throw std::invalid_argument("--index out of range");
    x = test.images.item0(index);
  }
  if (target < 0) {
    LogitsMatrix lg = model.logits(x);
    target = 0;
    for (int j = 1; j < model.num_classes(); ++j)
      if (lg[j] > lg[target]) target = j;
  }
  AttributionMap map;
  if (method == "ig") map = integrated_gradients(model, x, target, steps);
  else if (method == "gradcam") map = gradcam(model, x, target, layer);
  else throw std::invalid_argument("unknown method: " + method);
  render_overlay(x, map, out);
  std::printf("method=%s class=%d wrote %s\n", method.c_str(), target, out.c_str());
  return 0;
}

int cmd_neighbors(const std::vector<std::string>& args) {
  CLI::App app{"same-class neighbors closer than the augmented twin"};
  std::string checkpoint, dataset, out = "neighbors.json";
  int class_id = 0, level = 1, anchors = 100;
  uint64_t seed = 0;
  app.add_option("--checkpoint", checkpoint)->required();
  app.add_option("--dataset", dataset);
  app.add_option("--class", class_id)->required();
  app.add_option("--level", level);
  app.add_option("--anchors", anchors, "number of seeded anchors");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--out", out);
  parse_sub(app, args);

  Model model = Model::load(checkpoint);
  if (dataset.empty()) dataset = dataset_of_checkpoint(checkpoint);
  if (dataset.empty()) throw std::invalid_argument("--dataset required (no run config found)");
  LabeledDataset test = load_dataset(dataset, "test");

  double mean_fraction = 0.0;
  int64_t with_violation = 0;
  std::ofstream f(out, std::ios::trunc);
  f << "{\n  \"anchors\": [\n";
  for (int a = 0; a < anchors; ++a) {
    NeighborReport rep = neighbor_discontinuity_report(model, test, class_id, level,
                                                       derive_seed(seed, {static_cast<uint64_t>(a)}));
    mean_fraction += rep.violation_fraction;
    if (rep.violation_count > 0) ++with_violation;
    f << rep.to_json() << (a + 1 < anchors ? ",\n" : "\n");
  }
  mean_fraction /= anchors;
  f << "  ],\n  \"mean_violation_fraction\": " << mean_fraction
    << ",\n  \"anchors_with_violation\": " << with_violation << ",\n  \"anchor_count\": "
    << anchors << "\n}\n";
  std::printf("anchors=%d mean_violation_fraction=%.4f with_violation=%lld wrote %s\n", anchors,
              mean_fraction, static_cast<long long>(with_violation), out.c_str());
  return 0;
}

int cmd_perturb(const std::vector<std::string>& args) {
  CLI::App app{"apply one photometric perturbation to a PNG"};
  std::string kind = "brightness", in, out;
  int level = 1;
  double param = std::nan("");
  app.add_option("--kind", kind, "brightness|contrast|saturation|hue")->required();
  app.add_option("--level", level, "table level 1..4");
  app.add_option("--param", param, "explicit parameter (overrides --level)");
  app.add_option("--in", in)->required();
  app.add_option("--out", out)->required();
  parse_sub(app, args);

  AugmentSpec spec = std::isnan(param)
                         ? level_params(augment_kind_from_string(kind), level)
                         : AugmentSpec{augment_kind_from_string(kind), param};
  ImageBatch x = from_png_image(read_png(in));
  ImageBatch y = apply_augmentation(x, spec);
  write_png(out, to_png_image(y, 0));
  std::printf("kind=%s param=%g wrote %s\n", to_string(spec.kind), spec.param, out.c_str());
  return 0;
}

int cmd_transfer(const std::vector<std::string>& args) {
  CLI::App app{"fine-tune a checkpoint onto a target dataset"};
  std::string checkpoint, target, out_dir;
  int epochs = 3, batch = 128;
  double lr = 1e-3;
  int64_t subset = 0;
  uint64_t seed = 0;
  app.add_option("--checkpoint", checkpoint)->required();
  app.add_option("--target", target, "target dataset id")->required();
  app.add_option("--epochs", epochs);
  app.add_option("--batch", batch);
  app.add_option("--lr", lr);
  app.add_option("--seed", seed);
  app.add_option("--subset", subset, "target train subset size");
  app.add_option("--out", out_dir, "run directory for the fine-tuned model");
  parse_sub(app, args);

  Model source = Model::load(checkpoint);
  LabeledDataset tr = load_split(target, "train", subset, seed);
  LabeledDataset te = load_dataset(target, "test");
  TrainingRecipe recipe;
  recipe.optimizer.epochs = epochs;
  recipe.optimizer.batch_size = batch;
  recipe.optimizer.learning_rate = lr;
  recipe.seed = seed;
  recipe.arch = source.arch();
  auto [model, acc] = finetune_transfer(source, tr, te, recipe, out_dir);
  std::printf("source=%s target=%s accuracy=%.4f\n", checkpoint.c_str(), target.c_str(), acc);
  return 0;
}

int cmd_report(const std::vector<std::string>& args) {
  CLI::App app{"emit comparison tables and curves for finished runs"};
  std::vector<std::string> runs;
  std::string runs_csv, out = "report", attack_kv = "eps=8,step=2,iters=10";
  int64_t adv_sample = 1000, ds_sample = 512;
  app.add_option("--run", runs, "run directory (repeatable)");
  app.add_option("--runs", runs_csv, "comma-separated run directories");
  app.add_option("--out", out);
  app.add_option("--attack", attack_kv, "adv-accuracy attack");
  app.add_option("--adv-sample", adv_sample);
  app.add_option("--ds-sample", ds_sample);
  parse_sub(app, args);

  for (const auto& r : split_list(runs_csv)) runs.push_back(r);
  if (runs.empty()) throw std::invalid_argument("report: give --run or --runs");
  ReportOptions opt;
  opt.eval_attack = attack_from_kv(attack_kv);
  opt.adv_sample_count = adv_sample;
  opt.ds_sample_count = ds_sample;
  emit_report(runs, out, opt);
  std::printf("wrote report to %s\n", out.c_str());
  return 0;
}

void usage() {
  std::printf(
      "usage: semcont <subcommand> [options]\n"
      "\n"
      "subcommands:\n"
      "  data       materialize datasets (build, build-colorful-mnist)\n"
      "  train      train a classifier (regimes: base, c, adv, advc)\n"
      "  eval       clean/adversarial accuracy of a checkpoint\n"
      "  sweep-alpha  train across continuity weights\n"
      "  probe      destructive-probe accuracy curves\n"
      "  explain    integrated-gradients / gradcam overlays\n"
      "  neighbors  same-class neighbor discontinuity report\n"
      "  perturb    apply one photometric perturbation to a PNG\n"
      "  transfer   fine-tune a checkpoint onto a target dataset\n"
      "  report     tables and curves for finished runs\n"
      "\n"
      "run `semcont <subcommand> --help` for options.\n"
      "environment: SEMCONT_DATA_DIR overrides the data root (default ./data).\n");
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    usage();
    return 0;
  }
  const std::string cmd = args[0];
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  try {
    if (cmd == "data") return cmd_data(rest);
    if (cmd == "train") return cmd_train(rest);
    if (cmd == "eval") return cmd_eval(rest);
    if (cmd == "sweep-alpha") return cmd_sweep_alpha(rest);
    if (cmd == "probe") return cmd_probe(rest);
    if (cmd == "explain") return cmd_explain(rest);
    if (cmd == "neighbors") return cmd_neighbors(rest);
    if (cmd == "perturb") return cmd_perturb(rest);
    if (cmd == "transfer") return cmd_transfer(rest);
    if (cmd == "report") return cmd_report(rest);
    std::cerr << "error: unknown subcommand '" << cmd << "'\n";
    return 2;
  } catch (const ExitCode& e) {
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
