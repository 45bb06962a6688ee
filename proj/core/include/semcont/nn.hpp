#pragma once

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "semcont/rng.hpp"
#include "semcont/tensor.hpp"

namespace semcont {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatRM<T>>;

/// Per-forward cache: xs[i] is the input of layer i, xs back() the logits.
/// aux holds layer-private indices (e.g. max-pool argmax).
template <typename T>
struct Trace {
  std::vector<Tensor<T>> xs;
  std::vector<std::vector<int32_t>> aux;
};

template <typename T>
class Layer {
public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  virtual std::string kind() const = 0;

  virtual Tensor<T> forward(const Tensor<T>& x, std::vector<int32_t>* aux) const = 0;

  /// dy is the gradient at this layer's output; x its forward input.
  /// Accumulates into pg (aligned with params(), may be empty) and returns
  /// the gradient at the input when need_dx.
  virtual Tensor<T> backward(const Tensor<T>& dy, const Tensor<T>& x,
                             const std::vector<int32_t>& aux,
                             const std::vector<Tensor<T>*>& pg, bool need_dx) const = 0;

  virtual std::vector<Tensor<T>*> params() { return {}; }
  virtual std::vector<const Tensor<T>*> params() const { return {}; }
  virtual std::vector<std::string> param_names() const { return {}; }

private:
  std::string name_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Conv2d final : public Layer<T> {
public:
  /// 3x3 same-padding convolution unless configured otherwise.
  Conv2d(std::string name, int in_c, int out_c, int ksize, int pad, Rng& rng)
      : Layer<T>(std::move(name)), in_c_(in_c), out_c_(out_c), k_(ksize), pad_(pad) {
    const int fan_in = in_c * ksize * ksize;
    weight_ = Tensor<T>({out_c, static_cast<int64_t>(fan_in)});
    bias_ = Tensor<T>({out_c});
    const double limit = std::sqrt(6.0 / fan_in);
    for (int64_t i = 0; i < weight_.size(); ++i)
      weight_[i] = static_cast<T>(rng.uniform(-limit, limit));
  }

  std::string kind() const override { return "conv2d"; }

  Tensor<T> forward(const Tensor<T>& x, std::vector<int32_t>*) const override {
    const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    check_input(x);
    const int64_t ho = h + 2 * pad_ - k_ + 1, wo = w + 2 * pad_ - k_ + 1;
    Tensor<T> y({n, out_c_, ho, wo});
    const int64_t kdim = static_cast<int64_t>(in_c_) * k_ * k_;
    Tensor<T> cols({kdim, ho * wo});
    CMapM<T> wm(weight_.data(), out_c_, kdim);
    for (int64_t i = 0; i < n; ++i) {
      im2col(x, i, cols);
      MapM<T> ym(y.data() + i * out_c_ * ho * wo, out_c_, ho * wo);
      CMapM<T> cm(cols.data(), kdim, ho * wo);
      ym.noalias() = wm * cm;
      for (int64_t oc = 0; oc < out_c_; ++oc) ym.row(oc).array() += bias_[oc];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Tensor<T>& x, const std::vector<int32_t>&,
                     const std::vector<Tensor<T>*>& pg, bool need_dx) const override {
    const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t ho = dy.dim(2), wo = dy.dim(3);
    const int64_t kdim = static_cast<int64_t>(in_c_) * k_ * k_;
    Tensor<T> cols({kdim, ho * wo});
    Tensor<T> dcols({kdim, ho * wo});
    Tensor<T> dx;
    if (need_dx) dx = Tensor<T>(x.shape());
    CMapM<T> wm(weight_.data(), out_c_, kdim);
    for (int64_t i = 0; i < n; ++i) {
      CMapM<T> dym(dy.data() + i * out_c_ * ho * wo, out_c_, ho * wo);
      if (!pg.empty()) {
        im2col(x, i, cols);
        CMapM<T> cm(cols.data(), kdim, ho * wo);
        MapM<T> dwm(pg[0]->data(), out_c_, kdim);
        dwm.noalias() += dym * cm.transpose();
        // plain sequential sum: vectorized reductions split on pointer
        // alignment, which would break bitwise reproducibility
        const T* dyp = dy.data() + i * out_c_ * ho * wo;
        for (int64_t oc = 0; oc < out_c_; ++oc) {
          T acc{};
          for (int64_t p = 0; p < ho * wo; ++p) acc += dyp[oc * ho * wo + p];
          (*pg[1])[oc] += acc;
        }
      }
      if (need_dx) {
        MapM<T> dcm(dcols.data(), kdim, ho * wo);
        dcm.noalias() = wm.transpose() * dym;
        col2im(dcols, dx, i, h, w);
      }
    }
    return dx;
  }

  std::vector<Tensor<T>*> params() override { return {&weight_, &bias_}; }
  std::vector<const Tensor<T>*> params() const override { return {&weight_, &bias_}; }
  std::vector<std::string> param_names() const override {
    return {this->name() + ".weight", this->name() + ".bias"};
  }

private:
  void check_input(const Tensor<T>& x) const {
    if (x.rank() != 4 || x.dim(1) != in_c_)
      throw std::invalid_argument(this->name() + ": expected NCHW with " +
                                  std::to_string(in_c_) + " channels, got " + x.shape_str());
  }

  void im2col(const Tensor<T>& x, int64_t img, Tensor<T>& cols) const {
    const int64_t h = x.dim(2), w = x.dim(3);
    const int64_t ho = h + 2 * pad_ - k_ + 1, wo = w + 2 * pad_ - k_ + 1;
    T* out = cols.data();
    for (int64_t c = 0; c < in_c_; ++c) {
      const T* plane = x.data() + (img * in_c_ + c) * h * w;
      for (int64_t kh = 0; kh < k_; ++kh) {
        for (int64_t kw = 0; kw < k_; ++kw) {
          for (int64_t oh = 0; oh < ho; ++oh) {
            const int64_t ih = oh + kh - pad_;
            if (ih < 0 || ih >= h) {
              std::fill(out, out + wo, T{});
              out += wo;
              continue;
            }
            const int64_t iw0 = kw - pad_;
            for (int64_t ow = 0; ow < wo; ++ow) {
              const int64_t iw = ow + iw0;
              *out++ = (iw >= 0 && iw < w) ? plane[ih * w + iw] : T{};
            }
          }
        }
      }
    }
  }

  void col2im(const Tensor<T>& dcols, Tensor<T>& dx, int64_t img, int64_t h, int64_t w) const {
    const int64_t ho = h + 2 * pad_ - k_ + 1, wo = w + 2 * pad_ - k_ + 1;
    const T* in = dcols.data();
    for (int64_t c = 0; c < in_c_; ++c) {
      T* plane = dx.data() + (img * in_c_ + c) * h * w;
      for (int64_t kh = 0; kh < k_; ++kh) {
        for (int64_t kw = 0; kw < k_; ++kw) {
          for (int64_t oh = 0; oh < ho; ++oh) {
            const int64_t ih = oh + kh - pad_;
            if (ih < 0 || ih >= h) {
              in += wo;
              continue;
            }
            const int64_t iw0 = kw - pad_;
            for (int64_t ow = 0; ow < wo; ++ow) {
              const int64_t iw = ow + iw0;
              if (iw >= 0 && iw < w) plane[ih * w + iw] += in[ow];
            }
            in += wo;
          }
        }
      }
    }
  }

  int64_t in_c_, out_c_, k_, pad_;
  Tensor<T> weight_;  // [out_c, in_c*k*k]
  Tensor<T> bias_;    // [out_c]
};

template <typename T>
class ReLU final : public Layer<T> {
public:
  explicit ReLU(std::string name) : Layer<T>(std::move(name)) {}
  std::string kind() const override { return "relu"; }

  Tensor<T> forward(const Tensor<T>& x, std::vector<int32_t>*) const override {
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{} ? x[i] : T{};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Tensor<T>& x, const std::vector<int32_t>&,
                     const std::vector<Tensor<T>*>&, bool need_dx) const override {
    if (!need_dx) return {};
    Tensor<T> dx(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T{} ? dy[i] : T{};
    return dx;
  }
};

/// 2x2 max pooling with stride 2; trailing odd rows/columns are dropped.
template <typename T>
class MaxPool2 final : public Layer<T> {
public:
  explicit MaxPool2(std::string name) : Layer<T>(std::move(name)) {}
  std::string kind() const override { return "maxpool2"; }

  Tensor<T> forward(const Tensor<T>& x, std::vector<int32_t>* aux) const override {
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int64_t ho = h / 2, wo = w / 2;
    Tensor<T> y({n, c, ho, wo});
    if (aux) aux->assign(static_cast<size_t>(y.size()), 0);
    int64_t oi = 0;
    for (int64_t p = 0; p < n * c; ++p) {
      const T* plane = x.data() + p * h * w;
      for (int64_t oh = 0; oh < ho; ++oh) {
        for (int64_t ow = 0; ow < wo; ++ow, ++oi) {
          int64_t base = (2 * oh) * w + 2 * ow;
          int64_t best = base;
          T bv = plane[base];
          const int64_t cands[3] = {base + 1, base + w, base + w + 1};
          for (int64_t cand : cands)
            if (plane[cand] > bv) {
              bv = plane[cand];
              best = cand;
            }
          y[oi] = bv;
          if (aux) (*aux)[static_cast<size_t>(oi)] = static_cast<int32_t>(best);
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Tensor<T>& x, const std::vector<int32_t>& aux,
                     const std::vector<Tensor<T>*>&, bool need_dx) const override {
    if (!need_dx) return {};
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor<T> dx(x.shape());
    const int64_t per_plane = dy.dim(2) * dy.dim(3);
    for (int64_t p = 0; p < n * c; ++p) {
      T* plane = dx.data() + p * h * w;
      const int64_t off = p * per_plane;
      for (int64_t i = 0; i < per_plane; ++i)
        plane[aux[static_cast<size_t>(off + i)]] += dy[off + i];
    }
    return dx;
  }
};

template <typename T>
class Flatten final : public Layer<T> {
public:
  explicit Flatten(std::string name) : Layer<T>(std::move(name)) {}
  std::string kind() const override { return "flatten"; }

  Tensor<T> forward(const Tensor<T>& x, std::vector<int32_t>*) const override {
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
  }

  Tensor<T> backward(const Tensor<T>& dy, const Tensor<T>& x, const std::vector<int32_t>&,
                     const std::vector<Tensor<T>*>&, bool need_dx) const override {
    if (!need_dx) return {};
    return dy.reshaped(x.shape());
  }
};

template <typename T>
class Linear final : public Layer<T> {
public:
  Linear(std::string name, int in_dim, int out_dim, Rng& rng)
      : Layer<T>(std::move(name)), in_(in_dim), out_(out_dim) {
    weight_ = Tensor<T>({out_dim, in_dim});
    bias_ = Tensor<T>({out_dim});
    const double limit = std::sqrt(6.0 / in_dim);
    for (int64_t i = 0; i < weight_.size(); ++i)
      weight_[i] = static_cast<T>(rng.uniform(-limit, limit));
  }

  std::string kind() const override { return "linear"; }
  int64_t in_dim() const { return in_; }
  int64_t out_dim() const { return out_; }

  Tensor<T> forward(const Tensor<T>& x, std::vector<int32_t>*) const override {
    if (x.rank() != 2 || x.dim(1) != in_)
      throw std::invalid_argument(this->name() + ": expected [N," + std::to_string(in_) +
                                  "], got " + x.shape_str());
    const int64_t n = x.dim(0);
    Tensor<T> y({n, out_});
    CMapM<T> xm(x.data(), n, in_), wm(weight_.data(), out_, in_);
    MapM<T> ym(y.data(), n, out_);
    ym.noalias() = xm * wm.transpose();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < out_; ++j) y[i * out_ + j] += bias_[j];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Tensor<T>& x, const std::vector<int32_t>&,
                     const std::vector<Tensor<T>*>& pg, bool need_dx) const override {
    const int64_t n = x.dim(0);
    CMapM<T> dym(dy.data(), n, out_), xm(x.data(), n, in_);
    if (!pg.empty()) {
      MapM<T> dwm(pg[0]->data(), out_, in_);
      dwm.noalias() += dym.transpose() * xm;
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < out_; ++j) (*pg[1])[j] += dy[i * out_ + j];
    }
    if (!need_dx) return {};
    Tensor<T> dx({n, in_});
    CMapM<T> wm(weight_.data(), out_, in_);
    MapM<T> dxm(dx.data(), n, in_);
    dxm.noalias() = dym * wm;
    return dx;
  }

  std::vector<Tensor<T>*> params() override { return {&weight_, &bias_}; }
  std::vector<const Tensor<T>*> params() const override { return {&weight_, &bias_}; }
  std::vector<std::string> param_names() const override {
    return {this->name() + ".weight", this->name() + ".bias"};
  }

private:
  int64_t in_, out_;
  Tensor<T> weight_;  // [out, in]
  Tensor<T> bias_;
};

// ---------------------------------------------------------------------------

template <typename T>
struct ParamGrads {
  std::vector<Tensor<T>> g;  // aligned with Net::params()

  void zero() {
    for (auto& t : g) std::fill(t.vec().begin(), t.vec().end(), T{});
  }
};

/// Sequential container; layer names are unique and used for activation access.
template <typename T>
class Net {
public:
  Net() = default;
  Net(Net&&) noexcept = default;
  Net& operator=(Net&&) noexcept = default;

  void add(std::unique_ptr<Layer<T>> l) {
    if (layer_index(l->name()) >= 0)
      throw std::invalid_argument("net: duplicate layer name " + l->name());
    layers_.push_back(std::move(l));
  }

  int layer_count() const { return static_cast<int>(layers_.size()); }
  const Layer<T>& layer(int i) const { return *layers_[static_cast<size_t>(i)]; }

  int layer_index(const std::string& name) const {
    for (size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i]->name() == name) return static_cast<int>(i);
    return -1;
  }

  std::vector<std::string> layer_names() const {
    std::vector<std::string> v;
    for (const auto& l : layers_) v.push_back(l->name());
    return v;
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> cur = x;
    for (const auto& l : layers_) cur = l->forward(cur, nullptr);
    return cur;
  }

  Tensor<T> forward(const Tensor<T>& x, Trace<T>& tr) const {
    tr.xs.clear();
    tr.aux.assign(layers_.size(), {});
    tr.xs.reserve(layers_.size() + 1);
    tr.xs.push_back(x);
    for (size_t i = 0; i < layers_.size(); ++i)
      tr.xs.push_back(layers_[i]->forward(tr.xs.back(), &tr.aux[i]));
    return tr.xs.back();
  }

  /// Backpropagates dlogits through the traced forward. Accumulates parameter
  /// gradients into pg when non-null. capture_layer (an index) copies the
  /// gradient arriving at that layer's output into *captured.
  Tensor<T> backward(const Trace<T>& tr, const Tensor<T>& dlogits, ParamGrads<T>* pg,
                     bool need_dx, int capture_layer = -1, Tensor<T>* captured = nullptr) const {
    std::vector<size_t> offsets(layers_.size(), 0);
    size_t acc = 0;
    for (size_t i = 0; i < layers_.size(); ++i) {
      offsets[i] = acc;
      acc += layers_[i]->param_names().size();
    }
    Tensor<T> dy = dlogits;
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
      if (i == capture_layer && captured) *captured = dy;
      std::vector<Tensor<T>*> own;
      if (pg) {
        const size_t np = layers_[static_cast<size_t>(i)]->param_names().size();
        for (size_t k = 0; k < np; ++k)
          own.push_back(&pg->g[offsets[static_cast<size_t>(i)] + k]);
      }
      const bool want_dx = need_dx || i > 0;
      dy = layers_[static_cast<size_t>(i)]->backward(dy, tr.xs[static_cast<size_t>(i)],
                                                     tr.aux[static_cast<size_t>(i)], own,
                                                     want_dx);
      if (!want_dx) break;
    }
    return dy;
  }

  std::vector<Tensor<T>*> params() {
    std::vector<Tensor<T>*> v;
    for (auto& l : layers_)
      for (auto* p : l->params()) v.push_back(p);
    return v;
  }

  std::vector<const Tensor<T>*> params() const {
    std::vector<const Tensor<T>*> v;
    for (const auto& l : layers_)
      for (const auto* p : l->params()) v.push_back(p);
    return v;
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> v;
    for (const auto& l : layers_)
      for (auto& n : l->param_names()) v.push_back(n);
    return v;
  }

  ParamGrads<T> zero_grads() const {
    ParamGrads<T> pg;
    for (const auto* p : params()) pg.g.emplace_back(p->shape());
    return pg;
  }

private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// ---------------------------------------------------------------------------

template <typename T>
struct CeResult {
  T loss;             // mean over the batch
  Tensor<T> dlogits;  // d(mean CE)/d(logits)
  std::vector<int> pred;
};

/// Numerically stable softmax cross-entropy with mean reduction.
template <typename T>
CeResult<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
  const int64_t n = logits.dim(0), k = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != n)
    throw std::invalid_argument("cross_entropy: label count mismatch");
  CeResult<T> r;
  r.dlogits = Tensor<T>(logits.shape());
  r.pred.resize(static_cast<size_t>(n));
  double total = 0.0;
  const T invn = static_cast<T>(1) / static_cast<T>(n);
  for (int64_t i = 0; i < n; ++i) {
    const T* row = logits.data() + i * k;
    T mx = row[0];
    int arg = 0;
    for (int64_t j = 1; j < k; ++j)
      if (row[j] > mx) {
        mx = row[j];
        arg = static_cast<int>(j);
      }
    r.pred[static_cast<size_t>(i)] = arg;
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j] - mx));
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= k) throw std::invalid_argument("cross_entropy: label out of range");
    total += std::log(z) - static_cast<double>(row[y] - mx);
    for (int64_t j = 0; j < k; ++j) {
      const T p = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / z);
      r.dlogits[i * k + j] = (p - (j == y ? T{1} : T{})) * invn;
    }
  }
  r.loss = static_cast<T>(total / static_cast<double>(n));
  return r;
}

/// Adam with constant learning rate.
template <typename T>
class Adam {
public:
  Adam(std::vector<Tensor<T>*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }

  void step(const ParamGrads<T>& pg) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, t_), c2 = 1.0 - std::pow(b2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      Tensor<T>& p = *params_[i];
      const Tensor<T>& g = pg.g[i];
      for (int64_t j = 0; j < p.size(); ++j) {
        const double gj = static_cast<double>(g[j]);
        double mj = b1_ * static_cast<double>(m_[i][j]) + (1.0 - b1_) * gj;
        double vj = b2_ * static_cast<double>(v_[i][j]) + (1.0 - b2_) * gj * gj;
        m_[i][j] = static_cast<T>(mj);
        v_[i][j] = static_cast<T>(vj);
        p[j] -= static_cast<T>(lr_ * (mj / c1) / (std::sqrt(vj / c2) + eps_));
      }
    }
  }

  int64_t steps() const { return t_; }

private:
  std::vector<Tensor<T>*> params_;
  std::vector<Tensor<T>> m_, v_;
  double lr_, b1_, b2_, eps_;
  int64_t t_ = 0;
};

}  // namespace semcont
