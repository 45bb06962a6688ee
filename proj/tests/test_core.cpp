#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "semcont/npy.hpp"
#include "semcont/rng.hpp"
#include "semcont/tensor.hpp"

using namespace semcont;
namespace fs = std::filesystem;

namespace {
std::string tmp_path(const char* name) {
  return (fs::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("tensor shape and indexing") {
  Tensor<float> t({2, 3, 4, 5});
  CHECK(t.rank() == 4);
  CHECK(t.size() == 120);
  t.at4(1, 2, 3, 4) = 7.0f;
  CHECK(t[119] == 7.0f);

  Tensor<float> r = t.reshaped({6, 20});
  CHECK(r.dim(0) == 6);
  CHECK_THROWS(t.reshaped({7, 20}));
  CHECK_THROWS(Tensor<float>::from({2, 2}, {1.0f, 2.0f, 3.0f}));
}

TEST_CASE("tensor slice0 copies rows") {
  Tensor<float> t({4, 3});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
  Tensor<float> s = t.slice0(1, 3);
  CHECK(s.dim(0) == 2);
  CHECK(s[0] == 3.0f);
  CHECK(s[5] == 8.0f);
  CHECK_THROWS(t.slice0(3, 2));
  CHECK_THROWS(t.slice0(0, 5));
}

TEST_CASE("rng determinism and bounds") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    const int64_t v = a.uniform_int(7);
    CHECK(v >= 0);
    CHECK(v < 7);
    b.uniform_int(7);
  }
  Rng c(43);
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 10; ++i) differs |= (a2.next_u64() != c.next_u64());
  CHECK(differs);
}

TEST_CASE("rng shuffle is a permutation") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[static_cast<size_t>(i)] = i;
  Rng rng(7);
  rng.shuffle(v.begin(), v.end());
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(0, {1}) != derive_seed(0, {2}));
  CHECK(derive_seed(0, {1}) != derive_seed(1, {1}));
  CHECK(derive_seed(5, {1, 2}) == derive_seed(5, {1, 2}));
}

TEST_CASE("npy u8 round trip") {
  const std::string path = tmp_path("semcont_test_u8.npy");
  std::vector<uint8_t> data(24);
  for (size_t i = 0; i < data.size(); ++i) data[i] = static_cast<uint8_t>(i * 7);
  npy::save_u8(path, {2, 3, 4}, data);
  auto a = npy::load(path);
  CHECK(a.dtype == "|u1");
  CHECK(a.shape == std::vector<int64_t>{2, 3, 4});
  CHECK(npy::as_u8(a) == data);
  fs::remove(path);
}

TEST_CASE("npy i64 and f32 round trips") {
  const std::string p1 = tmp_path("semcont_test_i64.npy");
  npy::save_i64(p1, {5}, {-3, 0, 7, 1000000007, -42});
  auto a = npy::load(p1);
  CHECK(npy::as_i64(a) == std::vector<int64_t>{-3, 0, 7, 1000000007, -42});

  const std::string p2 = tmp_path("semcont_test_f32.npy");
  Tensor<float> t({2, 2});
  t[0] = 1.5f;
  t[1] = -2.25f;
  t[2] = 0.0f;
  t[3] = 3e7f;
  npy::save_f32(p2, t);
  auto b = npy::as_f32(npy::load(p2));
  CHECK(b.same_shape(t));
  for (int64_t i = 0; i < 4; ++i) CHECK(b[i] == t[i]);
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("npy u8 loads as f32 in [0,1]") {
  const std::string path = tmp_path("semcont_test_u8f.npy");
  npy::save_u8(path, {3}, {0, 128, 255});
  auto t = npy::as_f32(npy::load(path));
  CHECK(t[0] == 0.0f);
  CHECK(t[1] == doctest::Approx(128.0 / 255.0));
  CHECK(t[2] == 1.0f);
  fs::remove(path);
}

TEST_CASE("npy rejects malformed input") {
  const std::string path = tmp_path("semcont_test_bad.npy");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  std::fwrite("not an npy file", 1, 15, f);
  std::fclose(f);
  CHECK_THROWS(npy::load(path));
  CHECK_THROWS(npy::load(tmp_path("semcont_does_not_exist.npy")));
  fs::remove(path);
}
