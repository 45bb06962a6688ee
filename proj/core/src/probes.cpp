#include "semcont/probes.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "semcont/rng.hpp"
#include "semcont/trainer.hpp"

namespace semcont {

ImageBatch rgb_translate(const ImageBatch& x, int n_pixels) {
  require_images(x, "rgb_translate");
  if (x.dim(1) != 3) throw std::invalid_argument("rgb_translate: requires 3 channels");
  const int64_t h = x.dim(2), w = x.dim(3);
  if (h != w) throw std::invalid_argument("rgb_translate: requires square images");
  if (n_pixels < 0 || n_pixels >= h)
    throw std::invalid_argument("rgb_translate: shift out of range");
  if (n_pixels == 0) return x;

  ImageBatch y = x;
  const int64_t shifts[3] = {n_pixels, n_pixels / 2, 0};
  for (int64_t i = 0; i < x.dim(0); ++i) {
    for (int c = 0; c < 3; ++c) {
      const int64_t s = shifts[c];
      if (s == 0) continue;
      const float* src = x.data() + (i * 3 + c) * h * w;
      float* dst = y.data() + (i * 3 + c) * h * w;
      for (int64_t r = 0; r < h; ++r) {
        const int64_t sr = (r - s + h) % h;
        for (int64_t q = 0; q < w; ++q) dst[r * w + q] = src[sr * w + (q - s + w) % w];
      }
    }
  }
  return y;
}

ImageBatch randomize_center(const ImageBatch& x, double area_fraction, uint64_t seed) {
  require_images(x, "randomize_center");
  if (!(area_fraction > 0.0 && area_fraction <= 1.0))
    throw std::invalid_argument("randomize_center: area_fraction must be in (0,1]");
  const int64_t c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h != w) throw std::invalid_argument("randomize_center: requires square images");
  const auto side = static_cast<int64_t>(
      std::floor(std::sqrt(area_fraction) * static_cast<double>(h) + 0.5));
  if (side <= 1) return x;
  const int64_t off = (h - side) / 2;

  ImageBatch y = x;
  std::vector<int64_t> perm(static_cast<size_t>(side * side));
  for (int64_t i = 0; i < x.dim(0); ++i) {
    Rng rng(derive_seed(seed, {0xce47e4ull, static_cast<uint64_t>(i)}));
    for (size_t p = 0; p < perm.size(); ++p) perm[p] = static_cast<int64_t>(p);
    rng.shuffle(perm.begin(), perm.end());
    for (int64_t p = 0; p < side * side; ++p) {
      const int64_t sp = perm[static_cast<size_t>(p)];
      const int64_t dy = off + p / side, dx = off + p % side;
      const int64_t sy = off + sp / side, sx = off + sp % side;
      for (int64_t ch = 0; ch < c; ++ch)
        y.at4(i, ch, dy, dx) = x.at4(i, ch, sy, sx);
    }
  }
  return y;
}

ImageBatch sliding_puzzle(const ImageBatch& x, int grid_k, int displaced, uint64_t seed) {
  require_images(x, "sliding_puzzle");
  const int64_t c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h != w) throw std::invalid_argument("sliding_puzzle: requires square images");
  if (grid_k < 1 || h % grid_k != 0)
    throw std::invalid_argument("sliding_puzzle: side not divisible by grid");
  const int total = grid_k * grid_k;
  if (displaced < 0 || displaced > total)
    throw std::invalid_argument("sliding_puzzle: displaced out of range");
  if (displaced == 1)
    throw std::invalid_argument("sliding_puzzle: a single block cannot be displaced");
  if (displaced == 0) return x;
  const int64_t bs = h / grid_k;

  ImageBatch y = x;
  std::vector<int> cells(static_cast<size_t>(total));
  for (int64_t i = 0; i < x.dim(0); ++i) {
    Rng rng(derive_seed(seed, {0x511d1ull, static_cast<uint64_t>(i)}));
    for (int p = 0; p < total; ++p) cells[static_cast<size_t>(p)] = p;
    rng.shuffle(cells.begin(), cells.end());
    // cyclic rotation over the chosen cells: every chosen block moves
    for (int p = 0; p < displaced; ++p) {
      const int src_cell = cells[static_cast<size_t>(p)];
      const int dst_cell = cells[static_cast<size_t>((p + 1) % displaced)];
      const int64_t sy = (src_cell / grid_k) * bs, sx = (src_cell % grid_k) * bs;
      const int64_t dy = (dst_cell / grid_k) * bs, dx = (dst_cell % grid_k) * bs;
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t r = 0; r < bs; ++r)
          for (int64_t q = 0; q < bs; ++q)
            y.at4(i, ch, dy + r, dx + q) = x.at4(i, ch, sy + r, sx + q);
    }
  }
  return y;
}

const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::rgb_translate: return "rgb_translate";
    case ProbeKind::randomize_center: return "randomize_center";
    case ProbeKind::sliding_puzzle: return "sliding_puzzle";
  }
  return "?";
}

ProbeKind probe_kind_from_string(const std::string& s) {
  if (s == "rgb_translate") return ProbeKind::rgb_translate;
  if (s == "randomize_center") return ProbeKind::randomize_center;
  if (s == "sliding_puzzle") return ProbeKind::sliding_puzzle;
  throw std::invalid_argument("unknown probe kind: " + s);
}

std::vector<double> default_severities(ProbeKind kind, int grid_k) {
  switch (kind) {
    case ProbeKind::rgb_translate: return {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4};
    case ProbeKind::randomize_center: return {0.25, 0.5, 0.75, 1.0};
    case ProbeKind::sliding_puzzle: {
      std::vector<double> v{0, 2, 4};
      if (grid_k >= 3) v.push_back(grid_k * grid_k / 2);
      v.push_back(grid_k * grid_k);
      return v;
    }
  }
  return {};
}

void ProbeSpec::validate() const {
  if (severity_grid.empty()) throw std::invalid_argument("probe: empty severity grid");
  for (double s : severity_grid) {
    switch (kind) {
      case ProbeKind::rgb_translate:
        if (s < 0.0 || s >= 1.0)
          throw std::invalid_argument("probe: rgb_translate severity must be a side fraction in [0,1)");
        break;
      case ProbeKind::randomize_center:
        if (!(s > 0.0 && s <= 1.0))
          throw std::invalid_argument("probe: randomize_center severity must be in (0,1]");
        break;
      case ProbeKind::sliding_puzzle:
        if (s < 0 || s > grid_k * grid_k || s != std::floor(s) || s == 1)
          throw std::invalid_argument("probe: sliding_puzzle severity must be an integer count != 1");
        break;
    }
  }
}

ImageBatch apply_probe(const ImageBatch& x, const ProbeSpec& spec, double severity) {
  const uint64_t sev_seed =
      derive_seed(spec.seed, {0x5e7e417ull, static_cast<uint64_t>(severity * 4096.0)});
  switch (spec.kind) {
    case ProbeKind::rgb_translate:
      return rgb_translate(x, static_cast<int>(std::lround(severity *
                                                           static_cast<double>(x.dim(2)))));
    case ProbeKind::randomize_center:
      return randomize_center(x, severity, sev_seed);
    case ProbeKind::sliding_puzzle:
      return sliding_puzzle(x, spec.grid_k, static_cast<int>(severity), sev_seed);
  }
  throw std::invalid_argument("probe: bad kind");
}

void ProbeReport::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  f << "model_id,kind,severity,accuracy,n_samples,seed\n";
  char buf[224];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.9g,%.6f,%lld,%llu\n", r.model_id.c_str(),
                  to_string(spec.kind), r.severity, r.accuracy,
                  static_cast<long long>(sample_count),
                  static_cast<unsigned long long>(spec.seed));
    f << buf;
  }
  if (!f) throw std::runtime_error("probe: cannot write " + path);
}

ProbeReport run_probe(const std::vector<std::pair<std::string, const Classifier*>>& models,
                      const LabeledDataset& data, const ProbeSpec& spec) {
  spec.validate();
  if (models.empty()) throw std::invalid_argument("run_probe: no models");
  ProbeReport report;
  report.spec = spec;
  report.sample_count = data.count();
  for (double severity : spec.severity_grid) {
    LabeledDataset probed = data;
    probed.images = apply_probe(data.images, spec, severity);
    for (const auto& [id, model] : models) {
      ProbeReport::Row row;
      row.model_id = id;
      row.severity = severity;
      row.accuracy = evaluate_accuracy(*model, probed);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace semcont
