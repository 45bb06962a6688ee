#include "semcont/perturb.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "semcont/rng.hpp"

namespace semcont {

const char* to_string(AugmentKind k) {
  switch (k) {
    case AugmentKind::brightness: return "brightness";
    case AugmentKind::contrast: return "contrast";
    case AugmentKind::saturation: return "saturation";
    case AugmentKind::hue: return "hue";
  }
  return "?";
}

AugmentKind augment_kind_from_string(const std::string& s) {
  if (s == "brightness") return AugmentKind::brightness;
  if (s == "contrast") return AugmentKind::contrast;
  if (s == "saturation") return AugmentKind::saturation;
  if (s == "hue") return AugmentKind::hue;
  throw std::invalid_argument("unknown augmentation kind: " + s);
}

void AugmentSpec::validate() const {
  switch (kind) {
    case AugmentKind::brightness:
      if (param < 0.0 || param > 255.0)
        throw std::invalid_argument("brightness param must be in [0,255]");
      break;
    case AugmentKind::contrast:
    case AugmentKind::saturation:
      if (param <= 0.0)
        throw std::invalid_argument(std::string(to_string(kind)) + " param must be > 0");
      break;
    case AugmentKind::hue:
      if (param < -0.5 || param > 0.5)
        throw std::invalid_argument("hue param must be in [-0.5,0.5]");
      break;
  }
}

bool AugmentSpec::is_identity() const {
  switch (kind) {
    case AugmentKind::brightness: return param == 0.0;
    case AugmentKind::contrast:
    case AugmentKind::saturation: return param == 1.0;
    case AugmentKind::hue: return param == 0.0;
  }
  return false;
}

AugmentSpec level_params(AugmentKind kind, int level) {
  if (level < 1 || level > kAugmentLevelCount)
    throw std::invalid_argument("level must be in 1..4, got " + std::to_string(level));
  static const double table[4][4] = {
      {16.0, 32.0, 48.0, 64.0},    // brightness
      {1.25, 1.50, 1.75, 2.0},     // contrast
      {1.25, 1.50, 1.75, 2.0},     // saturation
      {0.1, 0.2, 0.3, 0.4},        // hue
  };
  return {kind, table[static_cast<int>(kind)][level - 1]};
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float d = mx - mn;
  v = mx;
  s = mx > 0.0f ? d / mx : 0.0f;
  if (d <= 0.0f) {
    h = 0.0f;
    return;
  }
  float hh;
  if (mx == r)
    hh = (g - b) / d;
  else if (mx == g)
    hh = (b - r) / d + 2.0f;
  else
    hh = (r - g) / d + 4.0f;
  hh /= 6.0f;
  if (hh < 0.0f) hh += 1.0f;
  h = hh;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  h -= std::floor(h);  // wrap to [0,1)
  const float h6 = h * 6.0f;
  const int i = std::min(5, static_cast<int>(h6));
  const float f = h6 - static_cast<float>(i);
  const float p = v * (1.0f - s);
  const float q = v * (1.0f - s * f);
  const float t = v * (1.0f - s * (1.0f - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

namespace {

inline float clip01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

void apply_one(ImageBatch& x, int64_t img, const AugmentSpec& spec) {
  const int64_t c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t plane = h * w;
  float* base = x.data() + img * c * plane;
  switch (spec.kind) {
    case AugmentKind::brightness: {
      const float off = static_cast<float>(spec.param / 255.0);
      for (int64_t i = 0; i < c * plane; ++i) base[i] = clip01(base[i] + off);
      break;
    }
    case AugmentKind::contrast: {
      double mean = 0.0;
      for (int64_t i = 0; i < c * plane; ++i) mean += base[i];
      const float m = static_cast<float>(mean / static_cast<double>(c * plane));
      const float f = static_cast<float>(spec.param);
      for (int64_t i = 0; i < c * plane; ++i) base[i] = clip01(m + f * (base[i] - m));
      break;
    }
    case AugmentKind::saturation: {
      const float f = static_cast<float>(spec.param);
      for (int64_t i = 0; i < plane; ++i) {
        const float r = base[i], g = base[plane + i], b = base[2 * plane + i];
        const float luma = 0.299f * r + 0.587f * g + 0.114f * b;  // ITU-R 601
        base[i] = clip01(luma + f * (r - luma));
        base[plane + i] = clip01(luma + f * (g - luma));
        base[2 * plane + i] = clip01(luma + f * (b - luma));
      }
      break;
    }
    case AugmentKind::hue: {
      const float shift = static_cast<float>(spec.param);
      for (int64_t i = 0; i < plane; ++i) {
        float hh, ss, vv;
        rgb_to_hsv(base[i], base[plane + i], base[2 * plane + i], hh, ss, vv);
        float r, g, b;
        hsv_to_rgb(hh + shift, ss, vv, r, g, b);
        base[i] = clip01(r);
        base[plane + i] = clip01(g);
        base[2 * plane + i] = clip01(b);
      }
      break;
    }
  }
}

void check_channels(const ImageBatch& x, const AugmentSpec& spec) {
  if ((spec.kind == AugmentKind::saturation || spec.kind == AugmentKind::hue) && x.dim(1) != 3)
    throw std::invalid_argument(std::string(to_string(spec.kind)) +
                                " requires 3 channels, got " + std::to_string(x.dim(1)));
}

}  // namespace

ImageBatch apply_augmentation(const ImageBatch& x, const AugmentSpec& spec) {
  require_images(x, "apply_augmentation");
  spec.validate();
  check_channels(x, spec);
  ImageBatch y = x;
  if (spec.is_identity()) return y;
  for (int64_t i = 0; i < x.dim(0); ++i) apply_one(y, i, spec);
  return y;
}

std::pair<ImageBatch, std::vector<AugmentSpec>> sample_augmentation(const ImageBatch& x,
                                                                    int level, uint64_t seed) {
  require_images(x, "sample_augmentation");
  if (level < 1 || level > kAugmentLevelCount)
    throw std::invalid_argument("level must be in 1..4, got " + std::to_string(level));
  Rng rng(derive_seed(seed, {0xa06ull, static_cast<uint64_t>(level)}));
  ImageBatch y = x;
  std::vector<AugmentSpec> specs;
  specs.reserve(static_cast<size_t>(x.dim(0)));
  const bool gray = x.dim(1) != 3;
  for (int64_t i = 0; i < x.dim(0); ++i) {
    // grayscale images can only take the two channel-agnostic kinds
    const int choices = gray ? 2 : kAugmentKindCount;
    const auto kind = static_cast<AugmentKind>(rng.uniform_int(choices));
    AugmentSpec spec = level_params(kind, level);
    if (!spec.is_identity()) apply_one(y, i, spec);
    specs.push_back(spec);
  }
  return {std::move(y), std::move(specs)};
}

void AttackSpec::validate() const {
  if (epsilon < 0.0) throw std::invalid_argument("attack: epsilon must be >= 0");
  if (step > epsilon) throw std::invalid_argument("attack: step must be <= epsilon");
  if (step < 0.0) throw std::invalid_argument("attack: step must be >= 0");
  if (iterations < 1) throw std::invalid_argument("attack: iterations must be >= 1");
}

std::string attack_to_json(const AttackSpec& a) {
  nlohmann::ordered_json j;
  j["epsilon"] = a.epsilon;
  j["step"] = a.step;
  j["iterations"] = a.iterations;
  j["random_start"] = a.random_start;
  j["seed"] = a.seed;
  return j.dump();
}

AttackSpec attack_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  AttackSpec a;
  a.epsilon = j.at("epsilon").get<double>();
  a.step = j.at("step").get<double>();
  a.iterations = j.at("iterations").get<int>();
  if (j.contains("random_start")) a.random_start = j.at("random_start").get<bool>();
  if (j.contains("seed")) a.seed = j.at("seed").get<uint64_t>();
  a.validate();
  return a;
}

AttackSpec attack_from_kv(const std::string& text) {
  AttackSpec a;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    const std::string kv = text.substr(pos, end - pos);
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("attack: expected key=value, got " + kv);
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "eps" || k == "epsilon") a.epsilon = std::stod(v);
    else if (k == "step") a.step = std::stod(v);
    else if (k == "iters" || k == "iterations") a.iterations = std::stoi(v);
    else if (k == "random_start") a.random_start = std::stoi(v) != 0;
    else if (k == "seed") a.seed = std::stoull(v);
    else throw std::invalid_argument("attack: unknown key " + k);
    pos = end + 1;
  }
  a.validate();
  return a;
}

ImageBatch pgd_attack(const Classifier& model, const ImageBatch& x, const std::vector<int>& y,
                      const AttackSpec& spec) {
  require_images(x, "pgd_attack");
  spec.validate();
  if (static_cast<int64_t>(y.size()) != x.dim(0))
    throw std::invalid_argument("pgd_attack: label count mismatch");
  const float eps = static_cast<float>(spec.epsilon / 255.0);
  const float step = static_cast<float>(spec.step / 255.0);

  ImageBatch adv = x;
  if (spec.random_start && eps > 0.0f) {
    Rng rng(derive_seed(spec.seed, {0xad5ull}));
    for (int64_t i = 0; i < adv.size(); ++i)
      adv[i] = clip01(adv[i] + static_cast<float>(rng.uniform(-eps, eps)));
  }
  for (int it = 0; it < spec.iterations; ++it) {
    ImageBatch g = model.ce_input_gradient(adv, y);
    for (int64_t i = 0; i < adv.size(); ++i) {
      float v = adv[i];
      if (g[i] > 0.0f) v += step;
      else if (g[i] < 0.0f) v -= step;
      v = std::min(x[i] + eps, std::max(x[i] - eps, v));
      adv[i] = clip01(v);
    }
  }
  return adv;
}

}  // namespace semcont
