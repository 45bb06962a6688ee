#include "semcont/datasets.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "semcont/npy.hpp"
#include "semcont/perturb.hpp"
#include "semcont/rng.hpp"
#include "semcont/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace semcont {
namespace {

struct DatasetInfo {
  int classes, channels, side;
  int64_t train_count, test_count;
};

const DatasetInfo* dataset_info(const std::string& name) {
  static const std::unordered_map<std::string, DatasetInfo> table = {
      {"mnist", {10, 1, 28, 60000, 10000}},
      {"cifar10", {10, 3, 32, 50000, 10000}},
      {"cifar100", {100, 3, 32, 50000, 10000}},
      {"svhn", {10, 3, 32, 73257, 26032}},
      {"colorful_mnist", {10, 3, 28, 60000, 10000}},
  };
  auto it = table.find(name);
  return it == table.end() ? nullptr : &it->second;
}

void check_split(const std::string& split) {
  if (split != "train" && split != "test")
    throw std::invalid_argument("unknown split: " + split + " (expected train|test)");
}

std::vector<uint8_t> quantize(const ImageBatch& images) {
  std::vector<uint8_t> u(static_cast<size_t>(images.size()));
  for (int64_t i = 0; i < images.size(); ++i)
    u[static_cast<size_t>(i)] =
        static_cast<uint8_t>(std::lround(std::clamp(images[i], 0.0f, 1.0f) * 255.0f));
  return u;
}

// --- canonical raw formats ------------------------------------------------

uint32_t be32(const unsigned char* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

std::vector<uint8_t> read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

bool convert_mnist_idx(const fs::path& raw, const std::string& split, const fs::path& out_dir) {
  const char* img_names[] = {"train-images-idx3-ubyte", "t10k-images-idx3-ubyte"};
  const char* lbl_names[] = {"train-labels-idx1-ubyte", "t10k-labels-idx1-ubyte"};
  const int s = split == "train" ? 0 : 1;
  const fs::path ip = raw / img_names[s], lp = raw / lbl_names[s];
  if (!fs::exists(ip) || !fs::exists(lp)) return false;
  auto ib = read_file(ip);
  auto lb = read_file(lp);
  if (ib.size() < 16 || be32(ib.data()) != 2051 || lb.size() < 8 || be32(lb.data()) != 2049)
    throw std::runtime_error("malformed IDX files in " + raw.string());
  const int64_t n = be32(ib.data() + 4);
  const int64_t h = be32(ib.data() + 8), w = be32(ib.data() + 12);
  std::vector<uint8_t> pixels(ib.begin() + 16, ib.end());
  std::vector<int64_t> labels(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = lb[static_cast<size_t>(8 + i)];
  fs::create_directories(out_dir);
  npy::save_u8((out_dir / "images.npy").string(), {n, 1, h, w}, pixels);
  npy::save_i64((out_dir / "labels.npy").string(), {n}, labels);
  return true;
}

bool convert_cifar_bin(const fs::path& raw, const std::string& name, const std::string& split,
                       const fs::path& out_dir) {
  std::vector<fs::path> files;
  if (name == "cifar10") {
    if (split == "train")
      for (int i = 1; i <= 5; ++i) files.push_back(raw / ("data_batch_" + std::to_string(i) + ".bin"));
    else
      files.push_back(raw / "test_batch.bin");
  } else {
    files.push_back(raw / (split == "train" ? "train.bin" : "test.bin"));
  }
  for (const auto& f : files)
    if (!fs::exists(f)) return false;
  const bool coarse_fine = (name == "cifar100");  // 2 label bytes per record
  const size_t rec = (coarse_fine ? 2 : 1) + 3072;
  std::vector<uint8_t> pixels;
  std::vector<int64_t> labels;
  for (const auto& f : files) {
    auto b = read_file(f);
    if (b.size() % rec != 0) throw std::runtime_error("malformed CIFAR binary: " + f.string());
    const size_t n = b.size() / rec;
    for (size_t i = 0; i < n; ++i) {
      const uint8_t* r = b.data() + i * rec;
      labels.push_back(coarse_fine ? r[1] : r[0]);  // fine label for cifar100
      pixels.insert(pixels.end(), r + (coarse_fine ? 2 : 1), r + rec);
    }
  }
  const int64_t n = static_cast<int64_t>(labels.size());
  fs::create_directories(out_dir);
  npy::save_u8((out_dir / "images.npy").string(), {n, 3, 32, 32}, pixels);
  npy::save_i64((out_dir / "labels.npy").string(), {n}, labels);
  return true;
}

void synth_split(const std::string& name, const std::string& split, int64_t count,
                 const fs::path& out_dir) {
  std::vector<uint8_t> pixels;
  std::vector<int64_t> labels;
  const DatasetInfo* info = dataset_info(name);
  if (name == "mnist") {
    synth::digits_28(split, count, pixels, labels);
  } else if (name == "cifar10" || name == "cifar100") {
    synth::objects_32(split, count, info->classes, pixels, labels);
  } else if (name == "svhn") {
    synth::color_digits_32(split, count, pixels, labels);
  } else {
    throw std::invalid_argument("no synthetic generator for " + name);
  }
  fs::create_directories(out_dir);
  npy::save_u8((out_dir / "images.npy").string(),
               {count, info->channels, info->side, info->side}, pixels);
  npy::save_i64((out_dir / "labels.npy").string(), {count}, labels);
}

void write_manifest(const fs::path& dir, json j) {
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write manifest in " + dir.string());
}

}  // namespace

void LabeledDataset::validate() const {
  require_images(images, ("dataset " + name).c_str());
  if (images.dim(0) != static_cast<int64_t>(labels.size()))
    throw std::runtime_error("dataset " + name + ": image/label count mismatch");
  if (num_classes <= 0) throw std::runtime_error("dataset " + name + ": bad class count");
  for (int l : labels)
    if (l < 0 || l >= num_classes)
      throw std::runtime_error("dataset " + name + ": label out of range");
  for (int64_t i = 0; i < images.size(); ++i)
    if (!(images[i] >= 0.0f && images[i] <= 1.0f))
      throw std::runtime_error("dataset " + name + ": pixel outside [0,1]");
}

void ColorfulMnistSpec::validate() const {
  if (!(train_majority_fraction > 0.0 && train_majority_fraction < 1.0))
    throw std::invalid_argument("colorful_mnist: train_majority_fraction must be in (0,1)");
}

std::string data_root() {
  if (const char* env = std::getenv("SEMCONT_DATA_DIR"); env && *env) return env;
  return "data";
}

bool is_known_dataset(const std::string& name) { return dataset_info(name) != nullptr; }

LabeledDataset load_dataset(const std::string& name, const std::string& split,
                            const std::string& root) {
  const DatasetInfo* info = dataset_info(name);
  if (!info) throw std::invalid_argument("unknown dataset name: " + name);
  check_split(split);
  const fs::path dir = fs::path(root.empty() ? data_root() : root) / name / split;
  const fs::path ipath = dir / "images.npy", lpath = dir / "labels.npy";
  if (!fs::exists(ipath) || !fs::exists(lpath))
    throw std::runtime_error("dataset " + name + "/" + split + " missing on disk at " +
                             dir.string() + " (run `semcont data build --name " + name + "`)");
  LabeledDataset ds;
  ds.name = name;
  ds.split = split;
  ds.num_classes = info->classes;
  auto ia = npy::load(ipath.string());
  ds.images = npy::as_f32(ia);
  auto labels64 = npy::as_i64(npy::load(lpath.string()));
  ds.labels.assign(labels64.begin(), labels64.end());
  ds.validate();
  return ds;
}

void write_dataset(const LabeledDataset& ds, const std::string& root) {
  const fs::path dir = fs::path(root.empty() ? data_root() : root) / ds.name / ds.split;
  fs::create_directories(dir);
  npy::save_u8((dir / "images.npy").string(), ds.images.shape(), quantize(ds.images));
  std::vector<int64_t> labels64(ds.labels.begin(), ds.labels.end());
  npy::save_i64((dir / "labels.npy").string(), {static_cast<int64_t>(labels64.size())}, labels64);
}

void materialize_dataset(const std::string& name, const std::string& root,
                         int64_t count_override) {
  const DatasetInfo* info = dataset_info(name);
  if (!info) throw std::invalid_argument("unknown dataset name: " + name);
  if (name == "colorful_mnist")
    throw std::invalid_argument("colorful_mnist is built with `data build-colorful-mnist`");
  const fs::path base = fs::path(root.empty() ? data_root() : root) / name;
  const fs::path raw = base / "raw";
  std::string source;
  for (const std::string split : {"train", "test"}) {
    const fs::path out = base / split;
    bool converted = false;
    if (fs::exists(raw)) {
      if (name == "mnist")
        converted = convert_mnist_idx(raw, split, out);
      else if (name == "cifar10" || name == "cifar100")
        converted = convert_cifar_bin(raw, name, split, out);
    }
    if (converted) {
      source = "raw";
    } else {
      const int64_t canonical = split == "train" ? info->train_count : info->test_count;
      const int64_t n = count_override > 0 ? std::min(count_override, canonical) : canonical;
      synth_split(name, split, n, out);
      source = "synthetic";
    }
  }
  json m;
  m["name"] = name;
  m["format_version"] = 1;
  m["num_classes"] = info->classes;
  m["channels"] = info->channels;
  m["side"] = info->side;
  m["source"] = source;
  if (count_override > 0) m["count_override"] = count_override;
  write_manifest(base, m);
}

std::pair<LabeledDataset, LabeledDataset> build_colorful_mnist(const ColorfulMnistSpec& spec,
                                                               const std::string& root) {
  spec.validate();
  const std::string r = root.empty() ? data_root() : root;

  auto colorize = [&](const LabeledDataset& base, bool swap_roles) {
    const int64_t n = base.count(), h = base.images.dim(2), w = base.images.dim(3);
    const auto& maj = swap_roles ? spec.minority_train_color : spec.majority_train_color;
    const auto& min_ = swap_roles ? spec.majority_train_color : spec.minority_train_color;
    // round-half-up majority count, chosen by seeded shuffle
    const int64_t maj_count = static_cast<int64_t>(
        std::floor(spec.train_majority_fraction * static_cast<double>(n) + 0.5));
    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng(derive_seed(spec.seed, {0xc01full, swap_roles ? 1ull : 0ull}));
    rng.shuffle(order.begin(), order.end());
    std::vector<bool> is_majority(static_cast<size_t>(n), false);
    for (int64_t i = 0; i < maj_count; ++i) is_majority[static_cast<size_t>(order[i])] = true;

    LabeledDataset out;
    out.name = "colorful_mnist";
    out.split = base.split;
    out.num_classes = base.num_classes;
    out.labels = base.labels;
    out.images = ImageBatch({n, 3, h, w});
    const int64_t plane = h * w;
    for (int64_t i = 0; i < n; ++i) {
      const float* src = base.images.data() + i * plane;
      float* dst = out.images.data() + i * 3 * plane;
      const auto& color = is_majority[static_cast<size_t>(i)] ? maj : min_;
      for (int64_t p = 0; p < plane; ++p) {
        const float v = src[p];
        float rgb[3];
        if (v > 0.5f) {
          rgb[0] = rgb[1] = rgb[2] = v;  // foreground keeps its grayscale value
        } else {
          for (int c = 0; c < 3; ++c) rgb[c] = color[static_cast<size_t>(c)] * (1.0f - v);
        }
        for (int c = 0; c < 3; ++c) {
          // quantize so the in-memory result matches a later load exactly
          const auto q = static_cast<uint8_t>(std::lround(std::clamp(rgb[c], 0.0f, 1.0f) * 255.0f));
          dst[c * plane + p] = static_cast<float>(q) / 255.0f;
        }
      }
    }
    return out;
  };

  LabeledDataset train_base = load_dataset("mnist", "train", r);
  if (train_base.images.dim(1) != 1)
    throw std::runtime_error("colorful_mnist: base mnist must be grayscale");
  LabeledDataset test_base = load_dataset("mnist", "test", r);

  LabeledDataset train = colorize(train_base, false);
  LabeledDataset test = colorize(test_base, true);
  write_dataset(train, r);
  write_dataset(test, r);

  json m;
  m["name"] = "colorful_mnist";
  m["format_version"] = 1;
  m["num_classes"] = 10;
  m["channels"] = 3;
  m["side"] = static_cast<int>(train.images.dim(2));
  m["source"] = "built";
  m["train_majority_fraction"] = spec.train_majority_fraction;
  m["majority_train_color"] = spec.majority_train_color;
  m["minority_train_color"] = spec.minority_train_color;
  m["seed"] = spec.seed;
  write_manifest(fs::path(r) / "colorful_mnist", m);
  return {std::move(train), std::move(test)};
}

VisualizeSet make_visualize_set(const LabeledDataset& ds, int class_id, uint64_t seed) {
  if (class_id < 0 || class_id >= ds.num_classes)
    throw std::invalid_argument("make_visualize_set: class id out of range");
  std::vector<int64_t> members;
  for (int64_t i = 0; i < ds.count(); ++i)
    if (ds.labels[static_cast<size_t>(i)] == class_id) members.push_back(i);
  if (members.size() < 2)
    throw std::runtime_error("make_visualize_set: class " + std::to_string(class_id) +
                             " has fewer than 2 members");
  Rng rng(derive_seed(seed, {0x715ull, static_cast<uint64_t>(class_id)}));
  const int64_t anchor = members[static_cast<size_t>(rng.uniform_int(
      static_cast<int64_t>(members.size())))];

  const int64_t total = 1 + kAugmentKindCount + static_cast<int64_t>(members.size()) - 1;
  const int64_t c = ds.images.dim(1), h = ds.images.dim(2), w = ds.images.dim(3);
  VisualizeSet vs;
  vs.images = ImageBatch({total, c, h, w});
  vs.anchor_index = anchor;
  const int64_t stride = c * h * w;
  ImageBatch xa = ds.images.item0(anchor);
  std::copy(xa.data(), xa.data() + stride, vs.images.data());
  vs.roles.push_back(VisRole::original);
  for (int k = 0; k < kAugmentKindCount; ++k) {
    ImageBatch aug = apply_augmentation(xa, level_params(static_cast<AugmentKind>(k), 1));
    std::copy(aug.data(), aug.data() + stride, vs.images.data() + (1 + k) * stride);
    vs.roles.push_back(VisRole::augmented);
  }
  int64_t row = 1 + kAugmentKindCount;
  for (int64_t idx : members) {
    if (idx == anchor) continue;
    std::copy(ds.images.data() + idx * stride, ds.images.data() + (idx + 1) * stride,
              vs.images.data() + row * stride);
    vs.roles.push_back(VisRole::same_class);
    ++row;
  }
  return vs;
}

LabeledDataset subset_seeded(const LabeledDataset& ds, int64_t count, uint64_t seed) {
  if (count <= 0 || count > ds.count())
    throw std::invalid_argument("subset_seeded: bad count");
  std::vector<int64_t> order(static_cast<size_t>(ds.count()));
  for (int64_t i = 0; i < ds.count(); ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(derive_seed(seed, {0x50b5e7ull}));
  rng.shuffle(order.begin(), order.end());
  order.resize(static_cast<size_t>(count));
  std::sort(order.begin(), order.end());

  LabeledDataset out;
  out.name = ds.name;
  out.split = ds.split;
  out.num_classes = ds.num_classes;
  const int64_t stride = ds.images.size() / ds.count();
  std::vector<int64_t> shape = ds.images.shape();
  shape[0] = count;
  out.images = ImageBatch(shape);
  out.labels.resize(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    const int64_t src = order[static_cast<size_t>(i)];
    std::copy(ds.images.data() + src * stride, ds.images.data() + (src + 1) * stride,
              out.images.data() + i * stride);
    out.labels[static_cast<size_t>(i)] = ds.labels[static_cast<size_t>(src)];
  }
  return out;
}

}  // namespace semcont
