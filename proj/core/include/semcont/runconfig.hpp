#pragma once

#include <string>
#include <vector>

#include "semcont/perturb.hpp"
#include "semcont/trainer.hpp"

namespace semcont {

struct ProbeSettings {
  std::string kind = "sliding_puzzle";
  int grid = 4;                     // sliding-puzzle grid k
  std::vector<double> severities;   // empty = the kind's documented default grid
  uint64_t seed = 0;
  int64_t sample_count = 0;         // 0 = full split

  bool operator==(const ProbeSettings&) const = default;
};

struct ExplainSettings {
  std::string method = "ig";  // ig | gradcam
  int steps = 256;
  std::string layer;          // empty = last spatial convolution
  int target = -1;            // -1 = predicted class

  bool operator==(const ExplainSettings&) const = default;
};

/// One run's fully-serialized configuration. Parsing rejects unknown keys
/// and any config_version other than the current one.
struct RunConfig {
  int version = 1;
  std::string dataset = "cifar10";
  std::string out_dir = "runs/run";
  TrainingRecipe recipe;
  AttackSpec eval_attack;  // attack used by eval/report (not training)
  ProbeSettings probe;
  ExplainSettings explain;

  bool operator==(const RunConfig&) const = default;
};

std::string runconfig_to_json(const RunConfig& c);
RunConfig runconfig_from_json(const std::string& text);

RunConfig load_runconfig(const std::string& path);
void save_runconfig(const RunConfig& c, const std::string& path);

}  // namespace semcont
