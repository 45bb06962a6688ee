#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semcont/classifier.hpp"
#include "semcont/datasets.hpp"
#include "semcont/tensor.hpp"

namespace semcont {

// Destructive probes: pixel-content-preserving permutations that strip
// semantic structure while keeping low-level statistics.

/// Cyclically shifts the R channel down-right by n pixels and G by
/// floor(n/2); B is untouched. Wrapped content re-enters at the upper left.
ImageBatch rgb_translate(const ImageBatch& x, int n_pixels);

/// Permutes whole pixels (all channels together) inside the centered square
/// covering `area_fraction` of the image area; fraction 1.0 permutes the
/// whole image. Seeded per image.
ImageBatch randomize_center(const ImageBatch& x, double area_fraction, uint64_t seed);

/// Cuts the image into grid_k x grid_k blocks and cyclically permutes a
/// seeded choice of `displaced` block positions (every chosen block moves).
/// displaced must be 0 or >= 2.
ImageBatch sliding_puzzle(const ImageBatch& x, int grid_k, int displaced, uint64_t seed);

enum class ProbeKind { rgb_translate, randomize_center, sliding_puzzle };

const char* to_string(ProbeKind k);
ProbeKind probe_kind_from_string(const std::string& s);

struct ProbeSpec {
  ProbeKind kind = ProbeKind::sliding_puzzle;
  std::vector<double> severity_grid;  // rgb: side fractions; center: area fractions; puzzle: counts
  int grid_k = 4;
  uint64_t seed = 0;

  void validate() const;
};

/// The documented default severity grids per kind.
std::vector<double> default_severities(ProbeKind kind, int grid_k);

ImageBatch apply_probe(const ImageBatch& x, const ProbeSpec& spec, double severity);

struct ProbeReport {
  ProbeSpec spec;
  int64_t sample_count = 0;

  struct Row {
    std::string model_id;
    double severity = 0.0;
    double accuracy = 0.0;
  };
  std::vector<Row> rows;

  void write_csv(const std::string& path) const;
};

/// Evaluates every model on the probed dataset at each severity; the probe
/// is seeded per severity so all models see identical corrupted images.
ProbeReport run_probe(const std::vector<std::pair<std::string, const Classifier*>>& models,
                      const LabeledDataset& data, const ProbeSpec& spec);

}  // namespace semcont
