#include "semcont/nn.hpp"

#include <cstring>
#include <fstream>

#include "semcont/classifier.hpp"

namespace semcont {

template <typename T>
Net<T> build_net(const std::string& arch, int in_channels, int in_side, int num_classes,
                 uint64_t seed) {
  Rng rng(derive_seed(seed, {0x6e65740ull}));
  Net<T> net;
  auto conv_block = [&](int idx, int in_c, int out_c) {
    std::string n = std::to_string(idx);
    net.add(std::make_unique<Conv2d<T>>("conv" + n, in_c, out_c, 3, 1, rng));
    net.add(std::make_unique<ReLU<T>>("relu" + n));
    net.add(std::make_unique<MaxPool2<T>>("pool" + n));
  };

  if (arch == "mlp16") {
    const int dim = in_channels * in_side * in_side;
    net.add(std::make_unique<Flatten<T>>("flatten"));
    net.add(std::make_unique<Linear<T>>("fc1", dim, 16, rng));
    net.add(std::make_unique<ReLU<T>>("relu1"));
    net.add(std::make_unique<Linear<T>>("fc2", 16, num_classes, rng));
    return net;
  }

  int side = in_side;
  if (arch == "cnn_s") {
    conv_block(1, in_channels, 12);
    conv_block(2, 12, 24);
    conv_block(3, 24, 48);
    side = in_side / 2 / 2 / 2;
    net.add(std::make_unique<Flatten<T>>("flatten"));
    net.add(std::make_unique<Linear<T>>("fc", 48 * side * side, num_classes, rng));
    return net;
  }
  if (arch == "cnn_m") {
    conv_block(1, in_channels, 16);
    conv_block(2, 16, 32);
    conv_block(3, 32, 64);
    side = in_side / 2 / 2 / 2;
    net.add(std::make_unique<Flatten<T>>("flatten"));
    net.add(std::make_unique<Linear<T>>("fc1", 64 * side * side, 128, rng));
    net.add(std::make_unique<ReLU<T>>("relu4"));
    net.add(std::make_unique<Linear<T>>("fc2", 128, num_classes, rng));
    return net;
  }
  throw std::invalid_argument("unknown architecture: " + arch);
}

template Net<float> build_net<float>(const std::string&, int, int, int, uint64_t);
template Net<double> build_net<double>(const std::string&, int, int, int, uint64_t);

// ---------------------------------------------------------------------------

Model::Model(std::string arch, int in_channels, int in_side, int num_classes, uint64_t init_seed)
    : arch_(std::move(arch)),
      in_channels_(in_channels),
      in_side_(in_side),
      num_classes_(num_classes),
      net_(build_net<float>(arch_, in_channels, in_side, num_classes, init_seed)) {}

void Model::check_batch(const ImageBatch& x) const {
  require_images(x, "model");
  if (x.dim(1) != in_channels_ || x.dim(2) != in_side_ || x.dim(3) != in_side_)
    throw std::invalid_argument("model: input " + x.shape_str() + " does not match expected C=" +
                                std::to_string(in_channels_) + " side=" +
                                std::to_string(in_side_));
}

LogitsMatrix Model::logits(const ImageBatch& x) const {
  check_batch(x);
  return net_.forward(x);
}

ImageBatch Model::ce_input_gradient(const ImageBatch& x, const std::vector<int>& labels,
                                    LogitsMatrix* logits_out) const {
  check_batch(x);
  Trace<float> tr;
  LogitsMatrix lg = net_.forward(x, tr);
  auto ce = softmax_cross_entropy(lg, labels);
  if (logits_out) *logits_out = std::move(lg);
  return net_.backward(tr, ce.dlogits, nullptr, true);
}

ImageBatch Model::target_input_gradient(const ImageBatch& x, int target,
                                        LogitsMatrix* logits_out) const {
  check_batch(x);
  if (target < 0 || target >= num_classes_)
    throw std::invalid_argument("model: target class out of range");
  Trace<float> tr;
  LogitsMatrix lg = net_.forward(x, tr);
  Tensor<float> dlogits(lg.shape());
  for (int64_t i = 0; i < lg.dim(0); ++i) dlogits[i * num_classes_ + target] = 1.0f;
  if (logits_out) *logits_out = std::move(lg);
  return net_.backward(tr, dlogits, nullptr, true);
}

std::vector<std::string> Model::activation_names() const {
  std::vector<std::string> v;
  for (int i = 0; i < net_.layer_count(); ++i) v.push_back(net_.layer(i).name());
  return v;
}

void Model::activation_and_gradient(const ImageBatch& x, int target, const std::string& layer,
                                    Tensor<float>* activation, Tensor<float>* grad) const {
  check_batch(x);
  const int li = net_.layer_index(layer);
  if (li < 0) throw std::invalid_argument("model: unknown layer " + layer);
  Trace<float> tr;
  LogitsMatrix lg = net_.forward(x, tr);
  Tensor<float> dlogits(lg.shape());
  for (int64_t i = 0; i < lg.dim(0); ++i) dlogits[i * num_classes_ + target] = 1.0f;
  Tensor<float> captured;
  net_.backward(tr, dlogits, nullptr, false, li, &captured);
  if (activation) *activation = tr.xs[static_cast<size_t>(li) + 1];
  if (grad) *grad = std::move(captured);
}

std::string Model::last_conv_name() const {
  std::string last;
  for (int i = 0; i < net_.layer_count(); ++i)
    if (net_.layer(i).kind() == "conv2d") last = net_.layer(i).name();
  if (last.empty()) throw std::runtime_error("model: no convolution layer in " + arch_);
  return last;
}

// ---------------------------------------------------------------------------
// Checkpoint format: "SMCK0001" | arch | i32 in_c, side, classes |
// u32 param count | per param: name, rank, dims, f32 payload.

namespace {

void put_u32(std::ofstream& f, uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); }
void put_i32(std::ofstream& f, int32_t v) { f.write(reinterpret_cast<char*>(&v), 4); }
void put_str(std::ofstream& f, const std::string& s) {
  put_u32(f, static_cast<uint32_t>(s.size()));
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}
uint32_t get_u32(std::ifstream& f) {
  uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
int32_t get_i32(std::ifstream& f) {
  int32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::string get_str(std::ifstream& f) {
  uint32_t n = get_u32(f);
  std::string s(n, '\0');
  f.read(s.data(), n);
  return s;
}

}  // namespace

void Model::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  f.write("SMCK0001", 8);
  put_str(f, arch_);
  put_i32(f, in_channels_);
  put_i32(f, in_side_);
  put_i32(f, num_classes_);
  auto ps = net_.params();
  auto names = net_.param_names();
  put_u32(f, static_cast<uint32_t>(ps.size()));
  for (size_t i = 0; i < ps.size(); ++i) {
    put_str(f, names[i]);
    put_u32(f, static_cast<uint32_t>(ps[i]->rank()));
    for (int64_t d : ps[i]->shape()) {
      int64_t dd = d;
      f.write(reinterpret_cast<char*>(&dd), 8);
    }
    f.write(reinterpret_cast<const char*>(ps[i]->data()),
            static_cast<std::streamsize>(ps[i]->size() * 4));
  }
  if (!f) throw std::runtime_error("checkpoint: short write: " + path);
}

Model Model::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "SMCK0001", 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::string arch = get_str(f);
  int in_c = get_i32(f), side = get_i32(f), classes = get_i32(f);
  Model m(arch, in_c, side, classes, /*init_seed=*/0);
  auto ps = m.net_.params();
  auto names = m.net_.param_names();
  const uint32_t count = get_u32(f);
  if (count != ps.size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = get_str(f);
    if (name != names[i])
      throw std::runtime_error("checkpoint: unexpected parameter " + name + " in " + path);
    uint32_t rank = get_u32(f);
    std::vector<int64_t> dims(rank);
    for (auto& d : dims) f.read(reinterpret_cast<char*>(&d), 8);
    if (dims != ps[i]->shape())
      throw std::runtime_error("checkpoint: shape mismatch for " + name + " in " + path);
    f.read(reinterpret_cast<char*>(ps[i]->data()),
           static_cast<std::streamsize>(ps[i]->size() * 4));
  }
  if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
  return m;
}

Model Model::with_new_head(int num_classes, uint64_t init_seed) const {
  Model m(arch_, in_channels_, in_side_, num_classes, init_seed);
  auto src = net_.params();
  auto src_names = net_.param_names();
  auto dst = m.net_.params();
  auto dst_names = m.net_.param_names();
  for (size_t i = 0; i < dst.size(); ++i) {
    // copy every tensor whose name and shape carried over; the head differs
    for (size_t j = 0; j < src.size(); ++j) {
      if (dst_names[i] == src_names[j] && dst[i]->shape() == src[j]->shape()) {
        *dst[i] = *src[j];
        break;
      }
    }
  }
  return m;
}

uint64_t file_fnv1a(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for hashing: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize n = f.gcount();
    for (std::streamsize i = 0; i < n; ++i)
      h = (h ^ static_cast<unsigned char>(buf[i])) * 0x100000001b3ull;
  }
  return h;
}

}  // namespace semcont
