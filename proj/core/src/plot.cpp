#include "semcont/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace semcont {

Rgb heat_colormap(double t) {
  t = std::clamp(t, 0.0, 1.0);
  // black -> violet -> red -> orange -> light yellow
  const double r = std::clamp(3.0 * t, 0.0, 1.0);
  const double g = std::clamp(2.2 * t - 0.9, 0.0, 1.0);
  const double b = std::clamp(t < 0.4 ? 2.0 * t : 1.9 - 2.8 * t, 0.0, 0.85);
  return {static_cast<uint8_t>(std::lround(r * 255)),
          static_cast<uint8_t>(std::lround(g * 255)),
          static_cast<uint8_t>(std::lround(b * 255))};
}

Rgb series_color(size_t index) {
  static const Rgb palette[] = {
      {31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
      {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127},
  };
  return palette[index % (sizeof(palette) / sizeof(palette[0]))];
}

namespace {

// 5x7 glyphs, bit 0x10 is the leftmost column.
struct Glyph {
  char ch;
  uint8_t rows[7];
};

const Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x0E, 0x11, 0x01, 0x06, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x04, 0x04, 0x04}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {'%', {0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
};

const uint8_t* find_glyph(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const auto& g : kFont)
    if (g.ch == c) return g.rows;
  return nullptr;
}

}  // namespace

Canvas::Canvas(int width, int height, Rgb background) : w_(width), h_(height) {
  img_.width = width;
  img_.height = height;
  img_.channels = 3;
  img_.pixels.resize(static_cast<size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) set(x, y, background);
}

void Canvas::set(int x, int y, Rgb c) {
  if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
  uint8_t* p = img_.pixels.data() + (static_cast<size_t>(y) * w_ + x) * 3;
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(0, y0); y <= std::min(h_ - 1, y1); ++y)
    for (int x = std::max(0, x0); x <= std::min(w_ - 1, x1); ++x) set(x, y, c);
}

void Canvas::line(int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::disc(int cx, int cy, int radius, Rgb c) {
  for (int y = cy - radius; y <= cy + radius; ++y)
    for (int x = cx - radius; x <= cx + radius; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) set(x, y, c);
}

void Canvas::rect_outline(int x0, int y0, int x1, int y1, Rgb c) {
  line(x0, y0, x1, y0, c);
  line(x0, y1, x1, y1, c);
  line(x0, y0, x0, y1, c);
  line(x1, y0, x1, y1, c);
}

void Canvas::text(int x, int y, const std::string& s, Rgb c, int scale) {
  int cx = x;
  for (char ch : s) {
    const uint8_t* rows = find_glyph(ch);
    if (rows) {
      for (int r = 0; r < 7; ++r)
        for (int col = 0; col < 5; ++col)
          if (rows[r] & (0x10 >> col))
            fill_rect(cx + col * scale, y + r * scale, cx + (col + 1) * scale - 1,
                      y + (r + 1) * scale - 1, c);
    }
    cx += 6 * scale;
  }
}

void render_line_plot(const std::string& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series, int width, int height) {
  Canvas cv(width, height);
  const int ml = 72, mr = 18, mt = 30, mb = 46;
  const int px0 = ml, px1 = width - mr, py0 = mt, py1 = height - mb;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (size_t i = 0; i < s.xs.size(); ++i) {
      if (first) {
        xmin = xmax = s.xs[i];
        ymin = ymax = s.ys[i];
        first = false;
      }
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    const double pad = std::max(0.5, std::abs(ymax) * 0.1);
    ymin -= pad;
    ymax += pad;
  }
  const auto sx = [&](double x) {
    return px0 + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (px1 - px0)));
  };
  const auto sy = [&](double y) {
    return py1 - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (py1 - py0)));
  };

  const Rgb axis{40, 40, 40}, grid{225, 225, 225};
  char buf[48];
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    cv.line(sx(xv), py0, sx(xv), py1, grid);
    cv.line(px0, sy(yv), px1, sy(yv), grid);
    std::snprintf(buf, sizeof(buf), "%.3g", xv);
    cv.text(sx(xv) - 3 * static_cast<int>(std::strlen(buf)), py1 + 6, buf, axis);
    std::snprintf(buf, sizeof(buf), "%.3g", yv);
    cv.text(px0 - 6 - 6 * static_cast<int>(std::strlen(buf)), sy(yv) - 3, buf, axis);
  }
  cv.rect_outline(px0, py0, px1, py1, axis);
  cv.text((px0 + px1) / 2 - 3 * static_cast<int>(title.size()), 8, title, axis);
  cv.text((px0 + px1) / 2 - 3 * static_cast<int>(xlabel.size()), height - 16, xlabel, axis);
  cv.text(6, py0 - 16, ylabel, axis);

  for (const auto& s : series) {
    for (size_t i = 0; i + 1 < s.xs.size(); ++i)
      cv.line(sx(s.xs[i]), sy(s.ys[i]), sx(s.xs[i + 1]), sy(s.ys[i + 1]), s.color);
    if (s.markers)
      for (size_t i = 0; i < s.xs.size(); ++i) cv.disc(sx(s.xs[i]), sy(s.ys[i]), 3, s.color);
  }
  int ly = py0 + 6;
  for (const auto& s : series) {
    const int lx = px1 - 24 - 6 * static_cast<int>(s.label.size());
    cv.line(lx - 18, ly + 3, lx - 4, ly + 3, s.color);
    cv.text(lx, ly, s.label, axis);
    ly += 12;
  }
  cv.save(path);
}

}  // namespace semcont
