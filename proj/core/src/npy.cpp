#include "semcont/npy.hpp"

#include <cstring>
#include <fstream>

namespace semcont::npy {
namespace {

const char kMagic[] = "\x93NUMPY";

std::string shape_tuple(const std::vector<int64_t>& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) s += std::to_string(shape[i]) + ", ";
  if (shape.size() > 1) s.resize(s.size() - 2);  // "(a, b)" but "(n, )" for 1-d
  s += ")";
  return s;
}

void write_all(const std::string& path, const std::string& dtype,
               const std::vector<int64_t>& shape, const void* data, size_t bytes) {
  std::string header = "{'descr': '" + dtype + "', 'fortran_order': False, 'shape': " +
                       shape_tuple(shape) + ", }";
  // pad so that magic(6)+version(2)+len(2)+header is a multiple of 64
  size_t unpadded = 10 + header.size() + 1;
  size_t pad = (64 - unpadded % 64) % 64;
  header += std::string(pad, ' ');
  header += '\n';

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("npy: cannot open for writing: " + path);
  f.write(kMagic, 6);
  f.put('\x01');
  f.put('\x00');
  uint16_t hlen = static_cast<uint16_t>(header.size());
  char lenb[2] = {static_cast<char>(hlen & 0xff), static_cast<char>(hlen >> 8)};
  f.write(lenb, 2);
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!f) throw std::runtime_error("npy: short write: " + path);
}

// Pulls the value of a quoted or bare python literal following "'key': ".
std::string header_field(const std::string& h, const std::string& key) {
  size_t k = h.find("'" + key + "'");
  if (k == std::string::npos) throw std::runtime_error("npy: header missing key " + key);
  size_t colon = h.find(':', k);
  size_t v = h.find_first_not_of(" \t", colon + 1);
  if (h[v] == '\'') {
    size_t e = h.find('\'', v + 1);
    return h.substr(v + 1, e - v - 1);
  }
  if (h[v] == '(') {
    size_t e = h.find(')', v);
    return h.substr(v, e - v + 1);
  }
  size_t e = h.find_first_of(",}", v);
  std::string s = h.substr(v, e - v);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

}  // namespace

void save_u8(const std::string& path, const std::vector<int64_t>& shape,
             const std::vector<uint8_t>& data) {
  write_all(path, "|u1", shape, data.data(), data.size());
}

void save_i64(const std::string& path, const std::vector<int64_t>& shape,
              const std::vector<int64_t>& data) {
  write_all(path, "<i8", shape, data.data(), data.size() * 8);
}

void save_f32(const std::string& path, const Tensor<float>& t) {
  write_all(path, "<f4", t.shape(), t.data(), static_cast<size_t>(t.size()) * 4);
}

void save_f64(const std::string& path, const Tensor<double>& t) {
  write_all(path, "<f8", t.shape(), t.data(), static_cast<size_t>(t.size()) * 8);
}

int64_t Array::count() const {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

Array load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("npy: cannot open: " + path);
  char magic[6];
  f.read(magic, 6);
  if (!f || std::memcmp(magic, kMagic, 6) != 0)
    throw std::runtime_error("npy: bad magic in " + path);
  char ver[2];
  f.read(ver, 2);
  if (ver[0] != 1) throw std::runtime_error("npy: unsupported version in " + path);
  unsigned char lenb[2];
  f.read(reinterpret_cast<char*>(lenb), 2);
  size_t hlen = static_cast<size_t>(lenb[0]) | (static_cast<size_t>(lenb[1]) << 8);
  std::string header(hlen, '\0');
  f.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw std::runtime_error("npy: truncated header in " + path);

  Array a;
  a.dtype = header_field(header, "descr");
  if (header_field(header, "fortran_order") != "False")
    throw std::runtime_error("npy: fortran order not supported: " + path);
  std::string tup = header_field(header, "shape");
  for (size_t i = 1; i < tup.size();) {
    size_t e = tup.find_first_of(",)", i);
    std::string num = tup.substr(i, e - i);
    size_t b = num.find_first_not_of(" \t");
    if (b != std::string::npos) a.shape.push_back(std::stoll(num.substr(b)));
    i = e + 1;
  }

  size_t item = 0;
  if (a.dtype == "|u1") item = 1;
  else if (a.dtype == "<i8") item = 8;
  else if (a.dtype == "<f4") item = 4;
  else if (a.dtype == "<f8") item = 8;
  else throw std::runtime_error("npy: unsupported dtype " + a.dtype + " in " + path);

  a.raw.resize(static_cast<size_t>(a.count()) * item);
  f.read(reinterpret_cast<char*>(a.raw.data()), static_cast<std::streamsize>(a.raw.size()));
  if (!f) throw std::runtime_error("npy: truncated payload in " + path);
  return a;
}

std::vector<uint8_t> as_u8(const Array& a) {
  if (a.dtype != "|u1") throw std::runtime_error("npy: expected |u1, got " + a.dtype);
  return a.raw;
}

std::vector<int64_t> as_i64(const Array& a) {
  if (a.dtype != "<i8") throw std::runtime_error("npy: expected <i8, got " + a.dtype);
  std::vector<int64_t> v(static_cast<size_t>(a.count()));
  std::memcpy(v.data(), a.raw.data(), a.raw.size());
  return v;
}

Tensor<float> as_f32(const Array& a) {
  Tensor<float> t(a.shape);
  if (a.dtype == "<f4") {
    std::memcpy(t.data(), a.raw.data(), a.raw.size());
  } else if (a.dtype == "|u1") {
    for (int64_t i = 0; i < t.size(); ++i)
      t[i] = static_cast<float>(a.raw[static_cast<size_t>(i)]) / 255.0f;
  } else {
    throw std::runtime_error("npy: cannot view dtype " + a.dtype + " as f32");
  }
  return t;
}

}  // namespace semcont::npy
