#include <CLI11.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "nerfpoison/config.hpp"
#include "nerfpoison/dataset.hpp"
#include "nerfpoison/flo_io.hpp"
#include "nerfpoison/metrics.hpp"
#include "nerfpoison/poison.hpp"
#include "nerfpoison/report.hpp"
#include "nerfpoison/synthetic.hpp"
#include "nerfpoison/train.hpp"

namespace fs = std::filesystem;
using namespace nerfpoison;

namespace {

std::string view_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d.png", prefix, i);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::unique_ptr<RadianceField> make_field(const RunConfig& cfg) {
  if (cfg.backend == "grid") return std::make_unique<VoxelGridField>(cfg.grid_resolution);
  return std::make_unique<TinyMlpField>(cfg.mlp_levels, cfg.train.seed);
}

void cmd_synth(const std::string& spec_path, const std::string& out, uint64_t seed) {
  std::ifstream f(spec_path);
  if (!f) throw ConfigError("synth: cannot open " + spec_path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("synth: malformed JSON: " + std::string(e.what()));
  }
  nlohmann::json sj = j.contains("scene") ? j["scene"] : j;
  SyntheticSceneSpec spec = scene_spec_from_json(sj);
  int heldout = sj.value("heldout_count", 2);
  if (heldout < 0 || heldout >= spec.camera_count)
    throw ConfigError("synth: heldout_count must be in [0, camera_count)");

  auto [gt, cams] = make_synthetic_scene(spec, seed);
  auto images = render_dataset(gt, cams, 64);

  fs::create_directories(fs::path(out) / "images");
  int n_train = spec.camera_count - heldout;
  for (int i = 0; i < spec.camera_count; ++i) {
    bool is_train = i < n_train;
    std::string name = view_name(is_train ? "train" : "heldout", is_train ? i : i - n_train);
    cams[i].file = "images/" + name;
    save_png(images[i], (fs::path(out) / cams[i].file).string());
  }
  save_poses(cams, (fs::path(out) / "poses.json").string());
  save_checkpoint(gt, (fs::path(out) / "gt_field.ckpt").string());
}

void cmd_train(const std::string& data, const std::string& backend_flag,
               const std::string& config_path, const std::string& out,
               std::string loss_csv) {
  RunConfig cfg = load_run_config(config_path);
  if (!backend_flag.empty()) cfg.backend = backend_flag;
  cfg.validate();
  Dataset d = load_dataset(data);

  std::unique_ptr<RadianceField> field = make_field(cfg);
  std::vector<double> losses = fit(*field, d.train_images, d.train_cams, cfg.train);
  save_checkpoint(*field, out);

  if (loss_csv.empty()) loss_csv = out + ".loss.csv";
  std::ofstream csv(loss_csv);
  if (!csv) throw DataError("train: cannot open " + loss_csv);
  csv << "step,loss\n";
  for (size_t i = 0; i < losses.size(); ++i) csv << i << ',' << fmt(losses[i]) << '\n';
}

void cmd_poison(const std::string& data, const std::string& config_path,
                const std::string& out) {
  RunConfig cfg = load_run_config(config_path);
  Dataset d = load_dataset(data);

  bool created = !fs::exists(out);
  try {
    PoisonResult res = poison_dataset(d.train_images, d.train_cams,
                                      [&] { return make_field(cfg); }, cfg.poison);

    fs::create_directories(fs::path(out) / "poisoned");
    fs::create_directories(fs::path(out) / "flows");
    std::vector<Camera> cams;
    for (size_t i = 0; i < d.train_cams.size(); ++i) {
      Camera c = d.train_cams[i];
      c.file = "poisoned/" + view_name("train", static_cast<int>(i));
      save_png(res.poisoned[i], (fs::path(out) / c.file).string());
      if (cfg.poison.mode == PerturbKind::SpatialFlow) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "train_%03zu.flo", i);
        write_flo(res.flows[i], (fs::path(out) / "flows" / buf).string());
      }
      cams.push_back(std::move(c));
    }
    for (size_t i = 0; i < d.heldout_cams.size(); ++i) {
      Camera c = d.heldout_cams[i];
      c.file = "poisoned/" + view_name("heldout", static_cast<int>(i));
      save_png(d.heldout_images[i], (fs::path(out) / c.file).string());
      cams.push_back(std::move(c));
    }
    save_poses(cams, (fs::path(out) / "poses.json").string());

    std::ofstream log((fs::path(out) / "poison_log.csv").string());
    if (!log) throw DataError("poison: cannot open log CSV");
    log << "epoch,outer_loss,mean_abs_grad,alpha_prime\n";
    for (size_t e = 0; e < res.outer_loss.size(); ++e)
      log << e << ',' << fmt(res.outer_loss[e]) << ',' << fmt(res.mean_abs_grad[e]) << ','
          << fmt(res.alpha_prime[e]) << '\n';
  } catch (...) {
    // no partial outputs on abort
    std::error_code ec;
    if (created)
      fs::remove_all(out, ec);
    else {
      fs::remove_all(fs::path(out) / "poisoned", ec);
      fs::remove_all(fs::path(out) / "flows", ec);
      fs::remove(fs::path(out) / "poses.json", ec);
      fs::remove(fs::path(out) / "poison_log.csv", ec);
    }
    throw;
  }
}

void cmd_eval(const std::string& ckpt, const std::string& data, const std::string& split,
              const std::string& out, int samples) {
  if (split != "train" && split != "heldout")
    throw ConfigError("eval: split must be train or heldout");
  std::unique_ptr<RadianceField> field = load_checkpoint(ckpt);
  Dataset d = load_dataset(data);
  const auto& images = split == "train" ? d.train_images : d.heldout_images;
  const auto& cams = split == "train" ? d.train_cams : d.heldout_cams;
  if (images.empty()) throw DataError("eval: no views in split " + split);

  std::string scene = fs::path(data).filename().string();
  if (scene.empty()) scene = fs::absolute(data).parent_path().filename().string();

  std::ofstream csv(out);
  if (!csv) throw DataError("eval: cannot open " + out);
  csv << "scene,view,psnr_db,ssim\n";
  double psum = 0, ssum = 0;
  auto rendered = render_dataset(*field, cams, samples);
  for (size_t i = 0; i < images.size(); ++i) {
    double p = psnr_capped(rendered[i], images[i]);
    double s = ssim(rendered[i], images[i]);
    psum += p;
    ssum += s;
    csv << scene << ',' << fs::path(cams[i].file).filename().string() << ',' << fmt(p) << ','
        << fmt(s) << '\n';
  }
  csv << scene << ",mean," << fmt(psum / images.size()) << ',' << fmt(ssum / images.size())
      << '\n';
}

ReportRun parse_run_arg(const std::string& arg) {
  ReportRun run;
  std::stringstream ss(arg);
  std::string part;
  bool have_arm = false, have_rho = false, have_csv = false;
  while (std::getline(ss, part, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos)
      throw ConfigError("report: run must be arm=NAME,rho=V,csv=PATH: " + arg);
    std::string key = part.substr(0, eq), val = part.substr(eq + 1);
    if (key == "arm") {
      run.arm = val;
      have_arm = true;
    } else if (key == "rho") {
      try {
        run.rho = std::stod(val);
      } catch (const std::exception&) {
        throw ConfigError("report: rho must be numeric: " + arg);
      }
      have_rho = true;
    } else if (key == "csv") {
      run.csv_path = val;
      have_csv = true;
    } else {
      throw ConfigError("report: unknown run key \"" + key + "\"");
    }
  }
  if (!have_arm || !have_rho || !have_csv)
    throw ConfigError("report: run must provide arm, rho and csv: " + arg);
  return run;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Each training step builds and frees a multi-GB tape; stop glibc from
  // returning that memory to the kernel between steps (3-4x wall time).
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"training-time poisoning of radiance fields via spatial deformation"};
  app.require_subcommand(1);

  std::string spec_path, out, data, config_path, backend, ckpt, split = "heldout",
              loss_csv;
  uint64_t seed = 0;
  int samples = 64;
  std::vector<std::string> run_args;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "scene spec JSON")->required();
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--seed", seed, "scene seed");

  CLI::App* train = app.add_subcommand("train", "fit a field to a dataset");
  train->add_option("--data", data, "dataset directory")->required();
  train->add_option("--backend", backend, "grid or mlp (overrides config)");
  train->add_option("--config", config_path, "run config JSON")->required();
  train->add_option("--out", out, "checkpoint path")->required();
  train->add_option("--loss-csv", loss_csv, "loss curve CSV path");

  CLI::App* poison = app.add_subcommand("poison", "generate a poisoned dataset");
  poison->add_option("--data", data, "clean dataset directory")->required();
  poison->add_option("--config", config_path, "run config JSON")->required();
  poison->add_option("--out", out, "output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint on a split");
  eval->add_option("--ckpt", ckpt, "field checkpoint")->required();
  eval->add_option("--data", data, "dataset directory")->required();
  eval->add_option("--split", split, "train or heldout");
  eval->add_option("--out", out, "metrics CSV path")->required();
  eval->add_option("--samples", samples, "samples per ray");

  CLI::App* report = app.add_subcommand("report", "PSNR-vs-rho chart from eval CSVs");
  report->add_option("--runs", run_args, "arm=NAME,rho=V,csv=PATH (repeatable)")->required();
  report->add_option("--out", out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) cmd_synth(spec_path, out, seed);
    if (train->parsed()) cmd_train(data, backend, config_path, out, loss_csv);
    if (poison->parsed()) cmd_poison(data, config_path, out);
    if (eval->parsed()) cmd_eval(ckpt, data, split, out, samples);
    if (report->parsed()) {
      std::vector<ReportRun> runs;
      for (const std::string& a : run_args) runs.push_back(parse_run_arg(a));
      write_report(runs, out);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  }
  return 0;
}
