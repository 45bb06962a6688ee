#include "semcont/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "semcont/perturb.hpp"
#include "semcont/rng.hpp"

namespace semcont::synth {
namespace {

using Pt = std::array<double, 2>;
using Polyline = std::vector<Pt>;

Polyline bezier(Pt a, Pt c, Pt b, int segments = 12) {
  Polyline p;
  for (int i = 0; i <= segments; ++i) {
    const double t = static_cast<double>(i) / segments;
    const double u = 1.0 - t;
    p.push_back({u * u * a[0] + 2 * u * t * c[0] + t * t * b[0],
                 u * u * a[1] + 2 * u * t * c[1] + t * t * b[1]});
  }
  return p;
}

Polyline circle(Pt c, double rx, double ry, int segments = 20) {
  Polyline p;
  for (int i = 0; i <= segments; ++i) {
    const double a = 2.0 * M_PI * i / segments;
    p.push_back({c[0] + rx * std::cos(a), c[1] + ry * std::sin(a)});
  }
  return p;
}

/// Digit skeletons in a unit box, y growing downward.
const std::vector<std::vector<Polyline>>& glyphs() {
  static const std::vector<std::vector<Polyline>> g = [] {
    std::vector<std::vector<Polyline>> v(10);
    v[0] = {circle({0.5, 0.5}, 0.26, 0.36)};
    v[1] = {{{0.52, 0.12}, {0.52, 0.88}}, {{0.36, 0.28}, {0.52, 0.12}}};
    v[2] = {bezier({0.3, 0.32}, {0.5, 0.02}, {0.7, 0.32}),
            bezier({0.7, 0.32}, {0.68, 0.6}, {0.3, 0.85}),
            {{0.3, 0.85}, {0.72, 0.85}}};
    v[3] = {bezier({0.32, 0.18}, {0.8, 0.12}, {0.5, 0.47}),
            bezier({0.5, 0.47}, {0.88, 0.6}, {0.34, 0.85})};
    v[4] = {{{0.56, 0.12}, {0.3, 0.6}}, {{0.3, 0.6}, {0.76, 0.6}}, {{0.63, 0.34}, {0.63, 0.88}}};
    v[5] = {{{0.7, 0.14}, {0.34, 0.14}},
            {{0.34, 0.14}, {0.34, 0.46}},
            bezier({0.34, 0.46}, {0.85, 0.5}, {0.38, 0.86})};
    v[6] = {bezier({0.64, 0.12}, {0.3, 0.25}, {0.37, 0.6}), circle({0.51, 0.68}, 0.16, 0.17)};
    v[7] = {{{0.3, 0.16}, {0.73, 0.16}}, {{0.73, 0.16}, {0.42, 0.87}}};
    v[8] = {circle({0.5, 0.31}, 0.16, 0.16), circle({0.5, 0.67}, 0.19, 0.19)};
    v[9] = {circle({0.51, 0.33}, 0.17, 0.17), bezier({0.68, 0.36}, {0.68, 0.62}, {0.58, 0.87})};
    return v;
  }();
  return g;
}

struct Affine {
  double m00, m01, m10, m11, tx, ty;
  Pt apply(Pt p) const {
    return {m00 * p[0] + m01 * p[1] + tx, m10 * p[0] + m11 * p[1] + ty};
  }
};

Affine jitter_transform(Rng& rng) {
  const double th = rng.uniform(-0.24, 0.24);
  const double sc = rng.uniform(0.78, 1.04);
  const double sh = rng.uniform(-0.18, 0.18);
  const double tx = rng.uniform(-0.07, 0.07), ty = rng.uniform(-0.07, 0.07);
  const double c = std::cos(th) * sc, s = std::sin(th) * sc;
  // rotate+scale, then shear in x, around the box center
  Affine a{c + s * sh, -s + c * sh, s, c, 0, 0};
  const Pt ctr = a.apply({0.5, 0.5});
  a.tx = 0.5 - ctr[0] + tx;
  a.ty = 0.5 - ctr[1] + ty;
  return a;
}

/// Draws a thick antialiased segment into a float canvas (max blend).
void draw_capsule(std::vector<float>& img, int side, Pt a, Pt b, double radius,
                  double intensity) {
  const double ax = a[0], ay = a[1], bx = b[0], by = b[1];
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - radius - 1)));
  const int x1 = std::min(side - 1, static_cast<int>(std::ceil(std::max(ax, bx) + radius + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - radius - 1)));
  const int y1 = std::min(side - 1, static_cast<int>(std::ceil(std::max(ay, by) + radius + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double cx = ax + t * dx, cy = ay + t * dy;
      const double d = std::hypot(px - cx, py - cy);
      const double cov = std::clamp(radius - d + 0.5, 0.0, 1.0);  // 1px AA band
      const float v = static_cast<float>(cov * intensity);
      float& dst = img[static_cast<size_t>(y * side + x)];
      if (v > dst) dst = v;
    }
  }
}

void render_digit(std::vector<float>& img, int side, int digit, Rng& rng, double box_lo,
                  double box_hi) {
  const Affine tf = jitter_transform(rng);
  const double thick = rng.uniform(0.040, 0.075);
  const double intensity = rng.uniform(0.82, 1.0);
  const double span = box_hi - box_lo;
  for (const auto& line : glyphs()[static_cast<size_t>(digit)]) {
    Pt prev{};
    bool first = true;
    for (Pt p : line) {
      // point jitter gives a handwriting feel
      Pt q = tf.apply({p[0] + rng.uniform(-0.012, 0.012), p[1] + rng.uniform(-0.012, 0.012)});
      Pt px{box_lo + q[0] * span, box_lo + q[1] * span};
      if (!first) draw_capsule(img, side, prev, px, thick * span, intensity);
      prev = px;
      first = false;
    }
  }
}

uint64_t split_tag(const std::string& split) {
  uint64_t t = 0x5e7ull;
  for (char c : split) t = mix64(t ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
  return t;
}

uint8_t q8(float v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

/// Smooth value noise: random grid bilinearly upsampled.
void add_value_noise(std::vector<float>& rgb, int side, Rng& rng, int grid, float amp) {
  std::vector<float> g(static_cast<size_t>(3 * grid * grid));
  for (auto& v : g) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        const double gy = static_cast<double>(y) / side * (grid - 1);
        const double gx = static_cast<double>(x) / side * (grid - 1);
        const int iy = static_cast<int>(gy), ix = static_cast<int>(gx);
        const double fy = gy - iy, fx = gx - ix;
        const int iy1 = std::min(iy + 1, grid - 1), ix1 = std::min(ix + 1, grid - 1);
        const float* gc = g.data() + c * grid * grid;
        const double v = gc[iy * grid + ix] * (1 - fy) * (1 - fx) +
                         gc[iy * grid + ix1] * (1 - fy) * fx +
                         gc[iy1 * grid + ix] * fy * (1 - fx) + gc[iy1 * grid + ix1] * fy * fx;
        rgb[static_cast<size_t>((c * side + y) * side + x)] += amp * static_cast<float>(v);
      }
    }
  }
}

void random_color(Rng& rng, float out[3], double smin, double vmin) {
  float r, g, b;
  hsv_to_rgb(static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform(smin, 1.0)),
             static_cast<float>(rng.uniform(vmin, 1.0)), r, g, b);
  out[0] = r;
  out[1] = g;
  out[2] = b;
}

// Signed distances, negative inside.
double sd_disk(double x, double y, double r) { return std::hypot(x, y) - r; }
double sd_box(double x, double y, double hx, double hy) {
  const double qx = std::abs(x) - hx, qy = std::abs(y) - hy;
  const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0);
  return std::hypot(ox, oy) + std::min(std::max(qx, qy), 0.0);
}
double sd_triangle(double x, double y, double r) {
  // equilateral, point up
  const double k = std::sqrt(3.0);
  x = std::abs(x) - r;
  y = y + r / k;
  if (x + k * y > 0.0) {
    const double nx = (x - k * y) / 2.0, ny = (-k * x - y) / 2.0;
    x = nx;
    y = ny;
  }
  x -= std::clamp(x, -2.0 * r, 0.0);
  return -std::hypot(x, y) * (y > 0.0 ? 1.0 : -1.0);
}

double rot_x(double x, double y, double c, double s) { return c * x - s * y; }
double rot_y(double x, double y, double c, double s) { return s * x + c * y; }

/// Class-defining silhouette, centered at origin, size r, orientation (c,s).
double shape_sdf(int shape, double x, double y, double r, double c, double s) {
  const double rx = rot_x(x, y, c, s), ry = rot_y(x, y, c, s);
  switch (shape) {
    case 0: return sd_disk(x, y, r);
    case 1: return std::max(sd_disk(x, y, r), -sd_disk(x, y, 0.55 * r));      // ring
    case 2: return sd_triangle(rx, ry, r);
    case 3: return sd_box(rx, ry, 0.82 * r, 0.82 * r);
    case 4: return std::min(sd_box(rx, ry, r, 0.34 * r), sd_box(rx, ry, 0.34 * r, r));  // plus
    case 5: return std::max(sd_box(rx, ry, r, 0.72 * r),
                            -sd_box(rx, ry, 0.62 * r, 0.3 * r));              // frame slot
    case 6: return std::max(sd_disk(x, y, r), -sd_disk(x - 0.5 * r, y - 0.25 * r, 0.62 * r));  // crescent
    case 7: {
      const double h = std::sqrt(0.5);
      const double ax = (rx - ry) * h, ay = (rx + ry) * h;    // +45 deg
      const double bx = (rx + ry) * h, by = (ry - rx) * h;    // -45 deg
      return std::min(sd_box(ax, ay, r, 0.28 * r), sd_box(bx, by, r, 0.28 * r));  // X
    }
    case 8: return std::min(sd_disk(x - 0.55 * r, y, 0.5 * r),
                            sd_disk(x + 0.55 * r, y, 0.5 * r));               // two disks
    default:
      return std::min(sd_disk(x, y - 0.5 * r, 0.45 * r), sd_box(rx, ry + 0.3 * r, 0.3 * r, 0.7 * r));  // keyhole
  }
}

/// Texture multiplier in [0,1] over object pixels; id 0 is flat.
double texture_value(int tex, double x, double y, double r, double phase) {
  const double u = x / r, v = y / r;
  switch (tex % 10) {
    case 0: return 1.0;
    case 1: return 0.55 + 0.45 * std::sin(6.0 * u + phase);                 // stripes
    case 2: return 0.55 + 0.45 * std::sin(6.0 * u + phase) * std::sin(6.0 * v + phase);  // checker
    case 3: return 0.55 + 0.45 * std::sin(8.0 * std::hypot(u, v) + phase);  // rings
    case 4: return std::hypot(u, v) < 0.45 ? 0.25 : 1.0;                    // core dot
    case 5: return 0.6 + 0.4 * std::sin(6.0 * (u + v) + phase);             // diagonal
    case 6: return (std::fmod(std::atan2(v, u) + 2 * M_PI + phase, M_PI / 3) < M_PI / 6) ? 0.3 : 1.0;  // sectors
    case 7: return 0.55 + 0.45 * std::cos(10.0 * v + phase);
    case 8: return std::abs(u) < 0.25 ? 0.3 : 1.0;                          // bar
    default: return 0.65 + 0.35 * std::sin(4.0 * u + phase) * std::cos(7.0 * v + phase);
  }
}

void box_blur3(std::vector<float>& rgb, int side) {
  std::vector<float> tmp(rgb.size());
  for (int c = 0; c < 3; ++c) {
    const float* src = rgb.data() + c * side * side;
    float* dst = tmp.data() + c * side * side;
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        float acc = 0.0f;
        int cnt = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= side || xx < 0 || xx >= side) continue;
            acc += src[yy * side + xx];
            ++cnt;
          }
        dst[y * side + x] = acc / static_cast<float>(cnt);
      }
  }
  rgb.swap(tmp);
}

void render_background(std::vector<float>& rgb, int side, Rng& rng) {
  float c0[3], c1[3];
  random_color(rng, c0, 0.15, 0.25);
  random_color(rng, c1, 0.15, 0.25);
  const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
  const double norm = std::max(1e-6, std::abs(gx) + std::abs(gy));
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const double t =
          0.5 + 0.5 * (gx * (2.0 * x / side - 1.0) + gy * (2.0 * y / side - 1.0)) / norm;
      for (int c = 0; c < 3; ++c)
        rgb[static_cast<size_t>((c * side + y) * side + x)] =
            static_cast<float>(c0[c] * (1.0 - t) + c1[c] * t);
    }
  add_value_noise(rgb, side, rng, 5, 0.14f);
}

}  // namespace

void digits_28(const std::string& split, int64_t count, std::vector<uint8_t>& pixels,
               std::vector<int64_t>& labels) {
  const int side = 28;
  const uint64_t tag = split_tag(split);
  pixels.assign(static_cast<size_t>(count) * side * side, 0);
  labels.resize(static_cast<size_t>(count));
  std::vector<float> img(static_cast<size_t>(side * side));
  for (int64_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(0xd161705ull, {tag, static_cast<uint64_t>(i)}));
    const int digit = static_cast<int>(rng.uniform_int(10));
    labels[static_cast<size_t>(i)] = digit;
    std::fill(img.begin(), img.end(), 0.0f);
    render_digit(img, side, digit, rng, 3.5, 24.5);
    uint8_t* dst = pixels.data() + i * side * side;
    for (int p = 0; p < side * side; ++p) dst[p] = q8(img[static_cast<size_t>(p)]);
  }
}

void objects_32(const std::string& split, int64_t count, int classes,
                std::vector<uint8_t>& pixels, std::vector<int64_t>& labels) {
  const int side = 32;
  if (classes != 10 && classes != 100)
    throw std::invalid_argument("objects_32: classes must be 10 or 100");
  const uint64_t tag = split_tag(split);
  pixels.assign(static_cast<size_t>(count) * 3 * side * side, 0);
  labels.resize(static_cast<size_t>(count));
  std::vector<float> rgb(static_cast<size_t>(3 * side * side));
  for (int64_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(0x0b7ec75ull, {tag, static_cast<uint64_t>(i),
                                       static_cast<uint64_t>(classes)}));
    const int label = static_cast<int>(rng.uniform_int(classes));
    labels[static_cast<size_t>(i)] = label;
    const int shape = classes == 10 ? label : label / 10;
    const int tex = classes == 10 ? 0 : label % 10;

    render_background(rgb, side, rng);

    float col[3];
    random_color(rng, col, 0.45, 0.45);
    const double cx = side / 2.0 + rng.uniform(-6.0, 6.0);
    const double cy = side / 2.0 + rng.uniform(-6.0, 6.0);
    const double r = rng.uniform(6.5, 11.5);
    const double th = rng.uniform(0.0, 2.0 * M_PI);
    const double rc = std::cos(th), rs = std::sin(th);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const double d = shape_sdf(shape, x + 0.5 - cx, y + 0.5 - cy, r, rc, rs);
        const double cov = std::clamp(0.5 - d, 0.0, 1.0);
        if (cov <= 0.0) continue;
        const double t = texture_value(tex, rot_x(x + 0.5 - cx, y + 0.5 - cy, rc, rs),
                                       rot_y(x + 0.5 - cx, y + 0.5 - cy, rc, rs), r, phase);
        for (int c = 0; c < 3; ++c) {
          float& dst = rgb[static_cast<size_t>((c * side + y) * side + x)];
          dst = static_cast<float>(dst * (1.0 - cov) + cov * col[c] * t);
        }
      }
    for (auto& v : rgb) v += static_cast<float>(rng.uniform(-0.02, 0.02));
    if (rng.uniform() < 0.5) box_blur3(rgb, side);
    uint8_t* dst = pixels.data() + i * 3 * side * side;
    for (int p = 0; p < 3 * side * side; ++p) dst[p] = q8(rgb[static_cast<size_t>(p)]);
  }
}

void color_digits_32(const std::string& split, int64_t count, std::vector<uint8_t>& pixels,
                     std::vector<int64_t>& labels) {
  const int side = 32;
  const uint64_t tag = split_tag(split);
  pixels.assign(static_cast<size_t>(count) * 3 * side * side, 0);
  labels.resize(static_cast<size_t>(count));
  std::vector<float> rgb(static_cast<size_t>(3 * side * side));
  std::vector<float> ink(static_cast<size_t>(side * side));
  for (int64_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(0x5b40d16ull, {tag, static_cast<uint64_t>(i)}));
    const int digit = static_cast<int>(rng.uniform_int(10));
    labels[static_cast<size_t>(i)] = digit;
    render_background(rgb, side, rng);
    std::fill(ink.begin(), ink.end(), 0.0f);
    render_digit(ink, side, digit, rng, 5.0, 27.0);
    float col[3];
    random_color(rng, col, 0.5, 0.55);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const float a = ink[static_cast<size_t>(y * side + x)];
        if (a <= 0.0f) continue;
        for (int c = 0; c < 3; ++c) {
          float& dst = rgb[static_cast<size_t>((c * side + y) * side + x)];
          dst = dst * (1.0f - a) + a * col[c];
        }
      }
    uint8_t* dst = pixels.data() + i * 3 * side * side;
    for (int p = 0; p < 3 * side * side; ++p) dst[p] = q8(rgb[static_cast<size_t>(p)]);
  }
}

}  // namespace semcont::synth
