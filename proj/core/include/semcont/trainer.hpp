#pragma once

#include <optional>
#include <string>
#include <vector>

#include "semcont/classifier.hpp"
#include "semcont/continuity.hpp"
#include "semcont/datasets.hpp"
#include "semcont/perturb.hpp"

namespace semcont {

enum class Regime { BASE, C, ADV, ADVC };

const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct OptimizerSettings {
  std::string name = "adam";
  double learning_rate = 1e-3;  // desk profile; the paper-faithful profile uses 1e-5
  int batch_size = 128;
  int epochs = 10;

  bool operator==(const OptimizerSettings&) const = default;
};

struct TrainingRecipe {
  Regime regime = Regime::BASE;
  double alpha = 1.0;
  int augment_level = 0;  // 0 draws a level uniformly from 1..4 each step
  AttackSpec attack;
  OptimizerSettings optimizer;
  uint64_t seed = 0;
  bool stop_gradient_clean = false;
  std::string arch = "cnn_s";

  /// BASE and ADV ignore alpha entirely.
  double effective_alpha() const {
    return (regime == Regime::C || regime == Regime::ADVC) ? alpha : 0.0;
  }
  void validate() const;

  bool operator==(const TrainingRecipe&) const = default;
};

struct StepRow {
  int64_t step = 0;
  LossBreakdown loss;
};

struct EpochRow {
  int epoch = 0;
  double clean_accuracy = 0.0;
  std::optional<double> adv_accuracy;
  std::optional<double> mean_ds;
};

struct MetricsLog {
  std::vector<StepRow> steps;
  std::vector<EpochRow> epochs;

  void validate() const;  // step monotonicity
  void write_csv(const std::string& run_dir) const;
};

/// Trains `model` in place under the recipe's regime. When run_dir is given,
/// writes config.json, metrics.csv and checkpoint-epochNN files there.
/// eval_data adds per-epoch clean accuracy. Deterministic for a fixed
/// (recipe, data, seed): data order, augmentation draws and PGD starts are
/// all derived from recipe.seed.
MetricsLog train(Model& model, const LabeledDataset& data, const TrainingRecipe& recipe,
                 const std::string& run_dir = "", const LabeledDataset* eval_data = nullptr,
                 const std::string& dataset_name = "");

/// Builds a model from the recipe's arch (init seeded by recipe.seed) and
/// trains it.
Model train_fresh(const LabeledDataset& data, const TrainingRecipe& recipe,
                  const std::string& run_dir = "", const LabeledDataset* eval_data = nullptr,
                  MetricsLog* log_out = nullptr);

double evaluate_accuracy(const Classifier& model, const LabeledDataset& data,
                         int batch_size = 256);

double evaluate_adversarial(const Classifier& model, const LabeledDataset& data,
                            const AttackSpec& attack, int batch_size = 256);

/// Mean DS between clean and augmented logits over a seeded sample.
double evaluate_continuity(const Classifier& model, const LabeledDataset& data, AugmentKind kind,
                           int level, int64_t sample_count, uint64_t seed);

/// Mean L2 norm of the input gradient of the cross-entropy over a seeded
/// sample of images.
double mean_input_gradient_norm(const Classifier& model, const LabeledDataset& data,
                                int64_t sample_count, uint64_t seed);

struct AlphaSweepRow {
  double alpha = 0.0;
  double accuracy = 0.0;
  double summed_ds_level1 = 0.0;  // sum of level-1 mean DS over the four kinds
};

/// Trains one C-regime model per alpha (shared seed) and reports clean
/// accuracy plus the level-1 DS summary.
std::vector<AlphaSweepRow> alpha_sweep(const TrainingRecipe& recipe_template,
                                       const LabeledDataset& train_data,
                                       const LabeledDataset& test_data,
                                       const std::vector<double>& alphas,
                                       int64_t ds_sample_count = 512,
                                       const std::string& out_root = "");

/// Rescales/replicates images to the given channel count and side
/// (bilinear resize; grayscale replicated across channels).
ImageBatch adapt_images(const ImageBatch& x, int64_t channels, int64_t side);

/// Replaces the classification head, fine-tunes under BASE on the target
/// train split, returns the fine-tuned model and target test accuracy.
std::pair<Model, double> finetune_transfer(const Model& source,
                                           const LabeledDataset& target_train,
                                           const LabeledDataset& target_test,
                                           const TrainingRecipe& recipe,
                                           const std::string& run_dir = "");

}  // namespace semcont
