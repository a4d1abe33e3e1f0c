#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nerfpoison/camera.hpp"
#include "nerfpoison/errors.hpp"
#include "nerfpoison/image.hpp"
#include "nerfpoison/png_io.hpp"

namespace nerfpoison {

// A dataset directory holds poses.json plus the images its frames point to;
// the train/heldout split is encoded in the image filename prefix.
struct Dataset {
  std::vector<Image> train_images, heldout_images;
  std::vector<Camera> train_cams, heldout_cams;
};

inline Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path root(dir);
  fs::path poses = root / "poses.json";
  if (!fs::exists(poses)) throw DataError("load_dataset: missing " + poses.string());

  Dataset d;
  for (Camera& cam : load_poses(poses.string())) {
    fs::path img_path = root / cam.file;
    if (!fs::exists(img_path))
      throw DataError("load_dataset: missing image " + img_path.string());
    Image img = load_png(img_path.string());
    if (img.width != cam.width || img.height != cam.height)
      throw DataError("load_dataset: image/camera size mismatch for " + cam.file);
    std::string name = fs::path(cam.file).filename().string();
    if (name.starts_with("heldout_")) {
      d.heldout_images.push_back(std::move(img));
      d.heldout_cams.push_back(std::move(cam));
    } else {
      d.train_images.push_back(std::move(img));
      d.train_cams.push_back(std::move(cam));
    }
  }
  if (d.train_images.empty()) throw DataError("load_dataset: no training views in " + dir);
  return d;
}

}  // namespace nerfpoison
