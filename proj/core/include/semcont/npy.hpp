#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semcont/tensor.hpp"

namespace semcont::npy {

// NPY v1.0, C-order, little-endian. Supported dtypes: |u1, <i8, <f4, <f8.

void save_u8(const std::string& path, const std::vector<int64_t>& shape,
             const std::vector<uint8_t>& data);
void save_i64(const std::string& path, const std::vector<int64_t>& shape,
              const std::vector<int64_t>& data);
void save_f32(const std::string& path, const Tensor<float>& t);
void save_f64(const std::string& path, const Tensor<double>& t);

struct Array {
  std::string dtype;  // "|u1", "<i8", "<f4", "<f8"
  std::vector<int64_t> shape;
  std::vector<uint8_t> raw;  // payload bytes, C-order

  int64_t count() const;
};

Array load(const std::string& path);

std::vector<uint8_t> as_u8(const Array& a);
std::vector<int64_t> as_i64(const Array& a);
Tensor<float> as_f32(const Array& a);

}  // namespace semcont::npy
