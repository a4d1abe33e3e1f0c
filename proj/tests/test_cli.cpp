#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "nerfpoison/field.hpp"
#include "nerfpoison/flo_io.hpp"
#include "nerfpoison/png_io.hpp"
#include "nerfpoison/report.hpp"

using namespace nerfpoison;
namespace fs = std::filesystem;

namespace {

const std::string kBin = CLI_BINARY_PATH;
const std::string kConfigs = CONFIG_DIR;

int run(const std::string& args) {
  int st = std::system((kBin + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int line_count(const fs::path& p) {
  std::ifstream f(p);
  int n = 0;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ++n;
  return n;
}

// Fresh scratch dir per process run.
fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "nerfpoison_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write_json(const fs::path& p, const std::string& body) {
  std::ofstream f(p);
  f << body;
}

// Small, fast config: 4 ring views of 16x16, short schedules.
std::string small_config(int train_steps, int k, int m, double rho,
                         const std::string& extra_poison = "") {
  std::ostringstream ss;
  ss << R"({
  "scene": {
    "grid_resolution": 8, "camera_count": 4, "heldout_count": 1,
    "image_width": 16, "image_height": 16, "focal": 16.0,
    "primitives": [
      {"kind": "sphere", "center": [0,0,0], "size": 0.55,
       "density": 3.0, "rgb": [0.85,0.3,0.2]}
    ]
  },
  "train": {"optimizer": "adam", "steps": )"
     << train_steps
     << R"(, "batch_rays": 256, "lr": 0.05, "seed": 1, "backend": "grid", "grid_resolution": 8},
  "poison": {"rho": )"
     << rho << ", \"k\": " << k << ", \"m\": " << m
     << R"(, "batch_rays": 256, "optimizer": "sgd", "seed": 1)" << extra_poison << R"(},
  "render": {"samples_per_ray": 16, "sampling_mode": "midpoint"},
  "loss": {"squared": true},
  "deterministic": true
})";
  return ss.str();
}

}  // namespace

TEST_CASE("synth writes a dataset and is byte-reproducible") {
  fs::path d = scratch() / "synth";
  fs::path cfg = d / "cfg.json";
  fs::create_directories(d);
  write_json(cfg, small_config(10, 2, 2, 2.0));

  REQUIRE(run("synth --spec " + cfg.string() + " --out " + (d / "a").string() + " --seed 7") ==
          0);
  CHECK(fs::exists(d / "a/poses.json"));
  CHECK(fs::exists(d / "a/gt_field.ckpt"));
  CHECK(fs::exists(d / "a/images/train_000.png"));
  CHECK(fs::exists(d / "a/images/train_002.png"));
  CHECK(fs::exists(d / "a/images/heldout_000.png"));
  CHECK(!fs::exists(d / "a/images/train_003.png"));

  // gt field has mass at the sphere center
  auto gt = load_checkpoint((d / "a/gt_field.ckpt").string());
  std::array<double, 3> center{0.0, 0.0, 0.0};
  CHECK(gt->eval(center)[0] > 0.0);  // sigma

  REQUIRE(run("synth --spec " + cfg.string() + " --out " + (d / "b").string() + " --seed 7") ==
          0);
  CHECK(slurp(d / "a/poses.json") == slurp(d / "b/poses.json"));
  CHECK(slurp(d / "a/gt_field.ckpt") == slurp(d / "b/gt_field.ckpt"));
  for (int i = 0; i < 3; ++i) {
    char n[32];
    std::snprintf(n, sizeof n, "images/train_%03d.png", i);
    CHECK(slurp(d / "a" / n) == slurp(d / "b" / n));
  }

  // different seed rotates the ring differently
  REQUIRE(run("synth --spec " + cfg.string() + " --out " + (d / "c").string() + " --seed 8") ==
          0);
  CHECK(slurp(d / "a/poses.json") != slurp(d / "c/poses.json"));
}

TEST_CASE("synth of an empty scene is all black") {
  fs::path d = scratch() / "empty";
  fs::create_directories(d);
  write_json(d / "cfg.json", R"({"scene": {"camera_count": 3, "heldout_count": 1,
    "image_width": 8, "image_height": 8, "focal": 8.0, "primitives": []}})");
  REQUIRE(run("synth --spec " + (d / "cfg.json").string() + " --out " + (d / "out").string()) ==
          0);
  Image img = load_png((d / "out/images/train_000.png").string());
  for (double v : img.data) CHECK(v == 0.0);
}

TEST_CASE("train: steps=0 keeps the initialization, reruns are byte-identical") {
  fs::path d = scratch() / "train0";
  fs::create_directories(d);
  write_json(d / "cfg.json", small_config(0, 2, 2, 2.0));
  REQUIRE(run("synth --spec " + (d / "cfg.json").string() + " --out " + (d / "data").string()) ==
          0);

  REQUIRE(run("train --data " + (d / "data").string() + " --config " +
              (d / "cfg.json").string() + " --out " + (d / "zero.ckpt").string()) == 0);
  VoxelGridField init(8);
  save_checkpoint(init, (d / "init.ckpt").string());
  CHECK(slurp(d / "zero.ckpt") == slurp(d / "init.ckpt"));

  write_json(d / "cfg50.json", small_config(50, 2, 2, 2.0));
  REQUIRE(run("train --data " + (d / "data").string() + " --config " +
              (d / "cfg50.json").string() + " --out " + (d / "a.ckpt").string()) == 0);
  REQUIRE(run("train --data " + (d / "data").string() + " --config " +
              (d / "cfg50.json").string() + " --out " + (d / "b.ckpt").string()) == 0);
  CHECK(slurp(d / "a.ckpt") == slurp(d / "b.ckpt"));
  CHECK(slurp(d / "a.ckpt") != slurp(d / "zero.ckpt"));
  CHECK(line_count(d / "a.ckpt.loss.csv") == 51);  // header + one row per step
}

TEST_CASE("toy preset: trained field exceeds 25 dB on its training views") {
  fs::path d = scratch() / "toy";
  fs::create_directories(d);
  std::string toy = kConfigs + "/toy.json";
  REQUIRE(run("synth --spec " + toy + " --out " + (d / "scene").string() + " --seed 7") == 0);

  // ground-truth checkpoint reproduces its own renders almost perfectly
  REQUIRE(run("eval --ckpt " + (d / "scene/gt_field.ckpt").string() + " --data " +
              (d / "scene").string() + " --split heldout --out " + (d / "gt.csv").string() +
              " --samples 64") == 0);
  CHECK(mean_psnr(read_metrics_csv((d / "gt.csv").string())) >= 40.0);

  REQUIRE(run("train --data " + (d / "scene").string() + " --config " + toy + " --out " +
              (d / "fit.ckpt").string()) == 0);
  REQUIRE(run("eval --ckpt " + (d / "fit.ckpt").string() + " --data " + (d / "scene").string() +
              " --split train --out " + (d / "fit.csv").string() + " --samples 32") == 0);
  auto rows = read_metrics_csv((d / "fit.csv").string());
  CHECK(rows.size() == 6);  // 5 views + mean
  CHECK(mean_psnr(rows) > 25.0);
}

TEST_CASE("poison respects the budget, logs m epochs and is byte-reproducible") {
  fs::path d = scratch() / "poison";
  fs::create_directories(d);
  write_json(d / "cfg.json", small_config(10, 2, 3, 1.5));
  REQUIRE(run("synth --spec " + (d / "cfg.json").string() + " --out " + (d / "data").string()) ==
          0);

  REQUIRE(run("poison --data " + (d / "data").string() + " --config " +
              (d / "cfg.json").string() + " --out " + (d / "a").string()) == 0);
  CHECK(line_count(d / "a/poison_log.csv") == 4);  // header + m rows
  for (int i = 0; i < 3; ++i) {
    char n[32];
    std::snprintf(n, sizeof n, "flows/train_%03d.flo", i);
    FlowField flow = read_flo((d / "a" / n).string());
    CHECK(flow.max_abs() <= 1.5 + 1e-12);
  }

  REQUIRE(run("poison --data " + (d / "data").string() + " --config " +
              (d / "cfg.json").string() + " --out " + (d / "b").string()) == 0);
  CHECK(slurp(d / "a/poison_log.csv") == slurp(d / "b/poison_log.csv"));
  CHECK(slurp(d / "a/flows/train_000.flo") == slurp(d / "b/flows/train_000.flo"));
  CHECK(slurp(d / "a/poisoned/train_000.png") == slurp(d / "b/poisoned/train_000.png"));

  // the poisoned output dir is itself a trainable dataset
  REQUIRE(run("train --data " + (d / "a").string() + " --config " + (d / "cfg.json").string() +
              " --out " + (d / "re.ckpt").string()) == 0);
}

TEST_CASE("poison with k=0 is the identity on the images") {
  fs::path d = scratch() / "k0";
  fs::create_directories(d);
  write_json(d / "cfg.json", small_config(10, 0, 2, 2.0));
  REQUIRE(run("synth --spec " + (d / "cfg.json").string() + " --out " + (d / "data").string()) ==
          0);
  REQUIRE(run("poison --data " + (d / "data").string() + " --config " +
              (d / "cfg.json").string() + " --out " + (d / "out").string()) == 0);
  for (int i = 0; i < 3; ++i) {
    char in_name[32], out_name[32];
    std::snprintf(in_name, sizeof in_name, "data/images/train_%03d.png", i);
    std::snprintf(out_name, sizeof out_name, "poisoned/train_%03d.png", i);
    CHECK(slurp(d / in_name) == slurp(d / "out" / out_name));
  }
}

TEST_CASE("eval: row count, low PSNR on an empty field, bad split") {
  fs::path d = scratch() / "eval";
  fs::create_directories(d);
  write_json(d / "cfg.json", small_config(10, 2, 2, 2.0));
  REQUIRE(run("synth --spec " + (d / "cfg.json").string() + " --out " + (d / "data").string()) ==
          0);

  REQUIRE(run("eval --ckpt " + (d / "data/gt_field.ckpt").string() + " --data " +
              (d / "data").string() + " --split train --out " + (d / "t.csv").string() +
              " --samples 16") == 0);
  CHECK(read_metrics_csv((d / "t.csv").string()).size() == 4);  // 3 views + mean

  VoxelGridField black(4);
  std::vector<double> p(black.param_count(), 0.0);
  for (size_t i = 0; i < p.size(); i += 4) p[i] = -1000.0;  // sigma raw
  black.set_params(p);
  save_checkpoint(black, (d / "black.ckpt").string());
  REQUIRE(run("eval --ckpt " + (d / "black.ckpt").string() + " --data " + (d / "data").string() +
              " --split train --out " + (d / "b.csv").string() + " --samples 16") == 0);
  double low = mean_psnr(read_metrics_csv((d / "b.csv").string()));
  CHECK(std::isfinite(low));
  CHECK(low < 25.0);

  CHECK(run("eval --ckpt " + (d / "black.ckpt").string() + " --data " + (d / "data").string() +
            " --split nope --out " + (d / "x.csv").string()) == 2);
}

TEST_CASE("report: merged CSV keeps rows, polylines are y-ordered by PSNR") {
  fs::path d = scratch() / "report";
  fs::create_directories(d);
  auto csv = [&](const std::string& name, double p0, double p2) {
    std::ofstream f(d / name);
    f << "scene,view,psnr_db,ssim\n";
    f << "s,heldout_000.png," << p0 << ",0.9\n";
    f << "s,mean," << p2 << ",0.9\n";
  };
  csv("clean.csv", 34.0, 34.0);
  csv("r2.csv", 22.0, 22.0);

  // single run: still a valid (single point) chart
  REQUIRE(run("report --out " + (d / "one.svg").string() + " --runs arm=clean,rho=0,csv=" +
              (d / "clean.csv").string()) == 0);
  CHECK(slurp(d / "one.svg").find("<polyline") != std::string::npos);

  REQUIRE(run("report --out " + (d / "two.svg").string() + " --runs arm=clean,rho=0,csv=" +
              (d / "clean.csv").string() + " --runs arm=poisoned,rho=2,csv=" +
              (d / "r2.csv").string()) == 0);
  std::string svg = slurp(d / "two.svg");
  size_t first = svg.find("<polyline");
  size_t second = svg.find("<polyline", first + 1);
  REQUIRE(second != std::string::npos);
  // higher PSNR plots higher on the chart (smaller y); arms sort clean first
  auto y_of = [&](size_t pos) {
    size_t pts = svg.find("points=\"", pos) + 8;
    size_t comma = svg.find(',', pts);
    size_t sp = svg.find(' ', comma);
    return std::stod(svg.substr(comma + 1, sp - comma - 1));
  };
  CHECK(y_of(first) < y_of(second));

  CHECK(line_count(d / "two.svg.csv") == 5);  // header + 2 rows per run
  std::string merged = slurp(d / "two.svg.csv");
  CHECK(merged.find("clean,0,s,heldout_000.png,34") != std::string::npos);
  CHECK(merged.find("poisoned,2,s,mean,22") != std::string::npos);

  std::ofstream bad(d / "bad.csv");
  bad << "not,a,metrics,file\n";
  bad.close();
  CHECK(run("report --out " + (d / "x.svg").string() + " --runs arm=a,rho=0,csv=" +
            (d / "bad.csv").string()) == 3);
  CHECK(run("report --out " + (d / "y.svg").string() + " --runs arm=a,rho=zero,csv=" +
            (d / "clean.csv").string()) == 2);
}

TEST_CASE("exit codes and no-partial-output guarantees") {
  fs::path d = scratch() / "errs";
  fs::create_directories(d);
  write_json(d / "cfg.json", small_config(10, 2, 2, 2.0));
  REQUIRE(run("synth --spec " + (d / "cfg.json").string() + " --out " + (d / "data").string()) ==
          0);

  CHECK(run("--definitely-not-a-flag") == 2);
  CHECK(run("train --data " + (d / "data").string() + " --config " + (d / "nope.json").string() +
            " --out " + (d / "x.ckpt").string()) == 2);
  CHECK(run("train --data " + (d / "missing").string() + " --config " +
            (d / "cfg.json").string() + " --out " + (d / "x.ckpt").string()) == 3);
  CHECK(run("synth --spec " + (d / "data/images/train_000.png").string() + " --out " +
            (d / "x").string()) == 2);

  // invalid config: fails before writing anything under --out
  write_json(d / "bad.json", small_config(10, 2, 2, -1.0));
  CHECK(run("poison --data " + (d / "data").string() + " --config " + (d / "bad.json").string() +
            " --out " + (d / "pout").string()) == 2);
  CHECK(!fs::exists(d / "pout"));
}
