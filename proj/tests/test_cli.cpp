#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "semcont/classifier.hpp"
#include "semcont/png_io.hpp"

using namespace semcont;
namespace fs = std::filesystem;

namespace {

struct CliFixture {
  fs::path root;

  CliFixture() {
    root = fs::temp_directory_path() / ("semcont_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~CliFixture() { fs::remove_all(root); }

  /// Runs the CLI with the sandbox data root; returns the exit code.
  int run(const std::string& args, const std::string& tag) {
    const std::string out = (root / (tag + ".out")).string();
    const std::string err = (root / (tag + ".err")).string();
    const std::string cmd = "SEMCONT_DATA_DIR=" + (root / "data").string() + " " +
                            std::string(SEMCONT_BIN_PATH) + " " + args + " > " + out + " 2> " +
                            err;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const std::string& tag, const char* stream) {
    std::ifstream f(root / (tag + std::string(".") + stream));
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  }
};

}  // namespace

TEST_CASE("cli help and unknown-subcommand contracts") {
  CliFixture fx;
  CHECK(fx.run("--help", "help") == 0);
  CHECK(fx.slurp("help", "out").find("subcommands") != std::string::npos);

  CHECK(fx.run("frobnicate", "unknown") == 2);
  CHECK(fx.slurp("unknown", "err").find("unknown subcommand") != std::string::npos);

  CHECK(fx.run("train --no-such-flag", "badflag") != 0);
}

TEST_CASE("cli data/train/eval/perturb round trip") {
  CliFixture fx;

  REQUIRE(fx.run("data build --name cifar10 --count 192", "build") == 0);
  CHECK(fx.slurp("build", "out").find("built cifar10") != std::string::npos);

  const std::string run_dir = (fx.root / "run-base").string();
  REQUIRE(fx.run("train --regime base --dataset cifar10 --epochs 1 --batch 64 --seed 0 --out " +
                     run_dir,
                 "train") == 0);
  CHECK(fs::exists(fs::path(run_dir) / "checkpoint-epoch00"));
  CHECK(fs::exists(fs::path(run_dir) / "metrics.csv"));

  REQUIRE(fx.run("eval --checkpoint " + run_dir +
                     "/checkpoint-epoch00 --attack eps=2,step=1,iters=1 --sample 64",
                 "eval") == 0);
  CHECK(fx.slurp("eval", "out").find("clean_accuracy=") != std::string::npos);
  CHECK(fx.slurp("eval", "out").find("adv_accuracy=") != std::string::npos);

  // a PNG through the perturbation path
  const std::string in_png = (fx.root / "in.png").string();
  const std::string out_png = (fx.root / "out.png").string();
  {
    ImageBatch x({1, 3, 8, 8});
    for (int64_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i % 17) / 16.0f;
    write_png(in_png, to_png_image(x, 0));
  }
  REQUIRE(fx.run("perturb --kind hue --level 2 --in " + in_png + " --out " + out_png,
                 "perturb") == 0);
  CHECK(fs::exists(out_png));
  PngImage result = read_png(out_png);
  CHECK(result.width == 8);
  CHECK(result.channels == 3);

  // missing dataset produces the documented failure mode
  CHECK(fx.run("train --regime base --dataset mnist --epochs 1", "missing") == 1);
  CHECK(fx.slurp("missing", "err").find("missing on disk") != std::string::npos);
}

TEST_CASE("cli neighbors and probe run on a trained checkpoint") {
  CliFixture fx;
  REQUIRE(fx.run("data build --name cifar10 --count 160", "build") == 0);
  const std::string run_dir = (fx.root / "run").string();
  REQUIRE(fx.run("train --regime base --dataset cifar10 --epochs 1 --batch 64 --out " + run_dir,
                 "train") == 0);
  const std::string ckpt = run_dir + "/checkpoint-epoch00";

  const std::string report = (fx.root / "probe.csv").string();
  REQUIRE(fx.run("probe --kind rgb_translate --checkpoints " + ckpt + " --out " + report +
                     " --sample 64",
                 "probe") == 0);
  CHECK(fs::exists(report));

  const std::string nj = (fx.root / "n.json").string();
  REQUIRE(fx.run("neighbors --checkpoint " + ckpt + " --class 1 --level 1 --anchors 3 --out " + nj,
                 "neighbors") == 0);
  CHECK(fx.slurp("neighbors", "out").find("mean_violation_fraction=") != std::string::npos);
  CHECK(fs::exists(nj));

  const std::string fig = (fx.root / "fig.png").string();
  REQUIRE(fx.run("explain --method gradcam --checkpoint " + ckpt + " --dataset cifar10 --index 0 --out " +
                     fig,
                 "explain") == 0);
  CHECK(fs::exists(fig));
}
