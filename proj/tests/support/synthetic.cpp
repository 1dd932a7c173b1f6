#include "support/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "frsb/errors.hpp"

namespace frsb::testing {

namespace {

struct Blob {
  double x, y, sigma;
  Eigen::Vector3d amp;
};

std::vector<Blob> identity_blobs(std::uint64_t seed, int id, int face) {
  Rng rng = make_rng(seed, "identity", std::uint64_t(id));
  std::vector<Blob> blobs(7);
  for (auto& b : blobs) {
    b.x = uniform01(rng) * face;
    b.y = uniform01(rng) * face;
    b.sigma = 6.0 + 14.0 * uniform01(rng);
    for (int c = 0; c < 3; ++c) b.amp[c] = 0.7 * (uniform01(rng) - 0.5);
  }
  return blobs;
}

std::string identity_label(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "id%03d", id);
  return buf;
}

}  // namespace

Image random_image(Rng& rng, int height, int width) {
  Image img(height, width);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) img(c, y, x) = float(uniform01(rng));
  return img;
}

Mask random_mask(Rng& rng, int height, int width, double p) {
  Mask m(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m(y, x) = uniform01(rng) < p;
  return m;
}

SyntheticFaces make_faces(const SyntheticParams& p, std::uint64_t seed) {
  SyntheticFaces out;
  const int face = p.face_size;
  Landmarks rel;
  rel << 0.3, 0.33, 0.7, 0.33, 0.5, 0.55, 0.35, 0.75, 0.65, 0.75;
  for (int id = 0; id < p.identities; ++id) {
    const auto blobs = identity_blobs(seed, id, face);
    const std::string label = identity_label(id);
    for (int k = 0; k < p.live + p.spoof; ++k) {
      const bool live = k < p.live;
      const int serial = live ? k : k - p.live;
      char name[64];
      std::snprintf(name, sizeof name, "%s/%s_%02d.png", label.c_str(), live ? "live" : "spoof", serial);
      Rng rng = make_rng(seed, name);
      const int ox = int(uniform_index(rng, std::uint64_t(p.image_size - face + 1)));
      const int oy = int(uniform_index(rng, std::uint64_t(p.image_size - face + 1)));

      Image img(p.image_size, p.image_size);
      for (int y = 0; y < p.image_size; ++y)
        for (int x = 0; x < p.image_size; ++x) {
          const bool inside = x >= ox && x < ox + face && y >= oy && y < oy + face;
          for (int c = 0; c < 3; ++c) {
            double v = 0.3;
            if (inside) {
              v = 0.5;
              for (const auto& b : blobs) {
                const double dx = x - ox + 0.5 - b.x, dy = y - oy + 0.5 - b.y;
                v += b.amp[c] * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
              }
              if (!live) v = 0.5 + 0.8 * (v - 0.5);
            }
            v += p.noise * (2.0 * uniform01(rng) - 1.0);
            img(c, y, x) = float(std::clamp(v, 0.0, 1.0));
          }
        }

      ManifestRecord r;
      r.image_ref = name;
      FaceAnnotation f;
      f.box = {double(ox), double(oy), double(ox + face), double(oy + face)};
      f.landmarks = relative_landmarks(f.box, rel);
      f.reference_landmarks = f.landmarks;
      r.faces.push_back(f);
      r.identity = label;
      r.liveness = live ? Liveness::live : Liveness::spoof;
      out.images.emplace(r.image_ref, std::move(img));
      out.manifest.records.push_back(std::move(r));
    }
  }
  return out;
}

ImageLoader SyntheticFaces::loader() const {
  return [this](const ManifestRecord& r) {
    auto it = images.find(r.image_ref);
    if (it == images.end()) throw IoError("no synthetic image " + r.image_ref);
    return it->second;
  };
}

void SyntheticFaces::write(const std::filesystem::path& dir) const {
  for (const auto& [ref, img] : images) write_png(img, dir / ref);
  write_manifest(manifest, dir / "manifest.jsonl");
}

ScoreSet random_score_set(Rng& rng, int max_total) {
  const int ng = 1 + int(uniform_index(rng, std::uint64_t(max_total / 2)));
  const int ni = 1 + int(uniform_index(rng, std::uint64_t(max_total - ng)));
  const int mode = int(uniform_index(rng, 3));
  const double levels = 2.0 + double(uniform_index(rng, 20));
  const double shift = uniform01(rng);
  auto draw = [&](double mean) {
    double v = mean + 0.5 * (uniform01(rng) + uniform01(rng) - 1.0);
    if (mode == 1) v = std::round(v * levels) / levels;
    if (mode == 2) v = std::floor(uniform01(rng) * levels) / levels;
    return v;
  };
  ScoreSet s;
  s.genuine.resize(ng);
  s.impostor.resize(ni);
  for (int i = 0; i < ng; ++i) s.genuine[i] = draw(shift);
  for (int i = 0; i < ni; ++i) s.impostor[i] = draw(0.0);
  return s;
}

DetectionEval random_detection_set(Rng& rng, int max_boxes) {
  DetectionEval e;
  const int images = 1 + int(uniform_index(rng, 3));
  e.predictions.resize(std::size_t(images));
  e.ground_truth.resize(std::size_t(images));
  const int n_gt = 1 + int(uniform_index(rng, std::uint64_t(max_boxes / 2)));
  const int n_pred = int(uniform_index(rng, std::uint64_t(max_boxes - n_gt + 1)));
  auto box = [&](double cx, double cy, double s) { return BoundingBox{cx - s, cy - s, cx + s, cy + s}; };
  for (int g = 0; g < n_gt; ++g)
    e.ground_truth[uniform_index(rng, std::uint64_t(images))].push_back(
        box(100 * uniform01(rng), 100 * uniform01(rng), 5 + 10 * uniform01(rng)));
  for (int k = 0; k < n_pred; ++k) {
    const std::size_t im = uniform_index(rng, std::uint64_t(images));
    BoundingBox b = box(100 * uniform01(rng), 100 * uniform01(rng), 5 + 10 * uniform01(rng));
    if (!e.ground_truth[im].empty() && uniform01(rng) < 0.7) {
      const BoundingBox& g = e.ground_truth[im][uniform_index(rng, e.ground_truth[im].size())];
      const double j = 4.0 * (uniform01(rng) - 0.5);
      b = {g.x_min + j, g.y_min + j * 0.5, g.x_max + j, g.y_max - j};
    }
    // Coarse confidences so equal-confidence runs appear.
    const double conf = uniform01(rng) < 0.3 ? std::round(uniform01(rng) * 4.0) / 4.0 : uniform01(rng);
    e.predictions[im].push_back({b, conf});
  }
  return e;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("frsb-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace frsb::testing
