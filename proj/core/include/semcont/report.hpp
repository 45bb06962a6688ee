#pragma once

#include <string>
#include <vector>

#include "semcont/perturb.hpp"

namespace semcont {

struct ReportOptions {
  AttackSpec eval_attack;          // adv-accuracy column attack
  int64_t adv_sample_count = 1000; // test images used for the adv column
  int64_t ds_sample_count = 512;   // test images per continuity cell
  uint64_t seed = 0;
  std::string data_root;           // empty = default resolution
};

/// Reads each run directory (config.json, metrics.csv, checkpoints), loads
/// the final checkpoint and emits paper-style comparison tables and curves
/// under out_dir: robustness.csv, continuity.csv, probes.csv, loss.png and
/// one continuity_<kind>.png per augmentation kind. Deterministic for fixed
/// inputs.
void emit_report(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                 const ReportOptions& options = {});

/// The final checkpoint file of a run directory (largest epoch index).
std::string final_checkpoint(const std::string& run_dir);

}  // namespace semcont
