#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <vector>

#include "acceptance.hpp"

using acceptance::Context;
using acceptance::Outcome;

int main(int argc, char** argv) {
  Context ctx;
  ctx.work_dir = "acceptance_work";
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--work") == 0 && i + 1 < argc) {
      ctx.work_dir = argv[++i];
    } else if (std::strcmp(argv[i], "--extended") == 0) {
      ctx.extended = true;
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      for (const char* p = argv[++i]; *p;) {
        only.push_back(std::atoi(p));
        while (*p && *p != ',') ++p;
        if (*p == ',') ++p;
      }
    } else {
      std::fprintf(stderr, "usage: acceptance [--work DIR] [--extended] [--only 1,2,...]\n");
      return 2;
    }
  }
  std::filesystem::create_directories(ctx.work_dir);

  using Fn = std::function<Outcome(const Context&)>;
  const std::vector<std::pair<int, Fn>> criteria = {
      {1, acceptance::metric_loss_exactness},
      {2, acceptance::gradient_correctness},
      {3, acceptance::perturbation_contracts},
      {4, acceptance::probe_invariants},
      {5, acceptance::ig_completeness},
      {6, acceptance::colorful_mnist_bias},
      {7, acceptance::robustness_ordering},
      {8, acceptance::continuity_grid},
      {9, acceptance::alpha_sweep_shape},
      {10, acceptance::gradient_smoothness},
      {11, acceptance::neighbor_discontinuity},
      {12, acceptance::transfer_direction},
  };

  const auto wanted = [&](int id) {
    if (id == 12 && !ctx.extended && only.empty()) return false;
    if (only.empty()) return true;
    for (int v : only)
      if (v == id) return true;
    return false;
  };

  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!wanted(id)) continue;
    Outcome out;
    try {
      out = fn(ctx);
      out.id = id;
    } catch (const std::exception& e) {
      out.id = id;
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s%s%s\n", out.pass ? "PASS" : "FAIL", out.id,
                out.name.c_str(), out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
    failures += !out.pass;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
