#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semcont/classifier.hpp"
#include "semcont/tensor.hpp"

namespace semcont {

enum class AugmentKind { brightness, contrast, saturation, hue };

const char* to_string(AugmentKind k);
AugmentKind augment_kind_from_string(const std::string& s);

/// A photometric perturbation. Brightness is an additive offset in 0-255
/// units; contrast/saturation are multiplicative factors; hue is a fraction
/// of the hue wheel in [-0.5, 0.5].
struct AugmentSpec {
  AugmentKind kind = AugmentKind::brightness;
  double param = 0.0;

  void validate() const;
  bool is_identity() const;
};

/// Table of the four perturbation strengths per kind, levels 1..4.
AugmentSpec level_params(AugmentKind kind, int level);

constexpr int kAugmentKindCount = 4;
constexpr int kAugmentLevelCount = 4;

/// Applies one augmentation to a whole batch. Values are clipped to [0,1];
/// identity parameters return the input bit-exactly.
ImageBatch apply_augmentation(const ImageBatch& x, const AugmentSpec& spec);

/// Seeded per-image uniform choice among the four kinds at `level`.
std::pair<ImageBatch, std::vector<AugmentSpec>> sample_augmentation(const ImageBatch& x,
                                                                    int level, uint64_t seed);

/// L-infinity PGD attack description. epsilon/step are in pixel units
/// (out of 255).
struct AttackSpec {
  double epsilon = 8.0;
  double step = 2.0;
  int iterations = 10;
  bool random_start = true;
  uint64_t seed = 0;

  void validate() const;

  bool operator==(const AttackSpec&) const = default;
};

std::string attack_to_json(const AttackSpec& a);
AttackSpec attack_from_json(const std::string& text);
/// Parses the compact CLI form "eps=8,step=2,iters=10[,random_start=0][,seed=1]".
AttackSpec attack_from_kv(const std::string& text);

/// Untargeted PGD: iterative sign-gradient ascent on the true-label
/// cross-entropy, each iterate projected into the epsilon ball and [0,1].
ImageBatch pgd_attack(const Classifier& model, const ImageBatch& x, const std::vector<int>& y,
                      const AttackSpec& spec);

// RGB <-> HSV on [0,1] values (h is a fraction of the wheel).
void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v);
void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b);

}  // namespace semcont
