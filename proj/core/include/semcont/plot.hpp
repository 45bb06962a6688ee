#pragma once

#include <string>
#include <vector>

#include "semcont/png_io.hpp"

namespace semcont {

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
};

/// Sequential heat colormap (black -> purple -> orange -> near-white);
/// t is clamped to [0,1].
Rgb heat_colormap(double t);

/// Minimal raster canvas with a 5x7 bitmap font (digits, upper-case
/// letters and basic punctuation; other characters render as blanks).
class Canvas {
public:
  Canvas(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return w_; }
  int height() const { return h_; }

  void set(int x, int y, Rgb c);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  void line(int x0, int y0, int x1, int y1, Rgb c);
  void disc(int cx, int cy, int radius, Rgb c);
  void rect_outline(int x0, int y0, int x1, int y1, Rgb c);
  /// Draws text with its top-left corner at (x, y); each glyph cell is
  /// 6x8 pixels times `scale`.
  void text(int x, int y, const std::string& s, Rgb c, int scale = 1);

  const PngImage& image() const { return img_; }
  void save(const std::string& path) const { write_png(path, img_); }

private:
  int w_, h_;
  PngImage img_;
};

struct Series {
  std::string label;
  std::vector<double> xs, ys;
  Rgb color{0, 0, 0};
  bool markers = true;
};

/// Line plot with axes, ticks and a legend; deterministic bytes for fixed
/// inputs.
void render_line_plot(const std::string& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series, int width = 720, int height = 480);

/// A small palette for multi-series plots.
Rgb series_color(size_t index);

}  // namespace semcont
