#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace semcont {

/// Dense row-major tensor. Images use NCHW with values in [0,1].
template <typename T>
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape)
      : shape_(std::move(shape)), data_(checked_count(shape_), T{}) {}

  Tensor(std::vector<int64_t> shape, T fill)
      : shape_(std::move(shape)), data_(checked_count(shape_), fill) {}

  static Tensor from(std::vector<int64_t> shape, std::vector<T> data) {
    Tensor t;
    if (checked_count(shape) != static_cast<int64_t>(data.size()))
      throw std::invalid_argument("tensor: data size does not match shape");
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  /// NCHW accessor; valid only for rank-4 tensors.
  T& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  const T& at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  T& at2(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
  const T& at2(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * shape_[1] + c)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  Tensor reshaped(std::vector<int64_t> shape) const {
    if (checked_count(shape) != size())
      throw std::invalid_argument("tensor: reshape count mismatch");
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  /// Copy of rows/items [i0, i1) along axis 0.
  Tensor slice0(int64_t i0, int64_t i1) const {
    if (rank() < 1 || i0 < 0 || i1 < i0 || i1 > shape_[0])
      throw std::out_of_range("tensor: bad slice bounds");
    int64_t inner = shape_[0] == 0 ? 0 : size() / shape_[0];
    std::vector<int64_t> s = shape_;
    s[0] = i1 - i0;
    Tensor t(s);
    std::copy(data_.begin() + i0 * inner, data_.begin() + i1 * inner, t.data_.begin());
    return t;
  }

  /// Copy of item i along axis 0, keeping a leading axis of extent 1.
  Tensor item0(int64_t i) const { return slice0(i, i + 1); }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + ")";
  }

private:
  static int64_t checked_count(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::vector<int64_t> shape_;
  std::vector<T> data_;
};

using ImageBatch = Tensor<float>;
using LogitsMatrix = Tensor<float>;

inline void require_images(const ImageBatch& x, const char* who) {
  if (x.rank() != 4)
    throw std::invalid_argument(std::string(who) + ": expected rank-4 NCHW batch, got rank " +
                                std::to_string(x.rank()));
}

}  // namespace semcont
