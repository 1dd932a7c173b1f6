#include <cmath>
#include <fstream>
#include <sstream>

#include "frsb/json_io.hpp"
#include "frsb/pipeline.hpp"
#include "frsb/random.hpp"

namespace frsb {

using nlohmann::json;

ScriptedPredictions parse_predictions(std::string_view jsonl, std::string_view source_name) {
  ScriptedPredictions p;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string ref = j.at("image_ref").get<std::string>();
      bool any = false;
      if (auto it = j.find("detections"); it != j.end()) {
        auto& dets = p.detections[ref];
        for (const auto& d : *it) {
          Detection det;
          det.box = box_from_json(d.at("box"));
          det.landmarks = landmarks_from_json(d.at("landmarks"));
          det.confidence = d.value("confidence", 1.0);
          if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) throw DomainError("confidence must lie in [0,1]");
          dets.push_back(det);
        }
        any = true;
      }
      if (auto it = j.find("liveness"); it != j.end()) {
        const double s = it->get<double>();
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("liveness must lie in [0,1]");
        p.liveness[ref] = s;
        any = true;
      }
      if (auto it = j.find("embedding"); it != j.end()) {
        const auto v = it->get<std::vector<float>>();
        if (v.empty()) throw DomainError("embedding is empty");
        p.embeddings[ref] = Eigen::Map<const Eigen::VectorXf>(v.data(), Eigen::Index(v.size()));
        any = true;
      }
      if (!any) throw DomainError("line carries no detections, liveness or embedding");
    } catch (const json::exception& e) {
      throw DomainError(std::string(source_name) + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError(std::string(source_name) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return p;
}

ScriptedPredictions load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read predictions '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_predictions(buf.str(), path.string());
}

std::vector<Detection> ScriptedDetector::detect(const Image&, std::string_view image_ref) const {
  auto it = p_->detections.find(image_ref);
  if (it == p_->detections.end()) throw StageError("detector", "no scripted detections for " + std::string(image_ref));
  return it->second;
}

double ScriptedAntispoofer::liveness(const Image&, std::string_view image_ref) const {
  auto it = p_->liveness.find(image_ref);
  if (it == p_->liveness.end()) throw StageError("antispoofer", "no scripted liveness for " + std::string(image_ref));
  return it->second;
}

Embedding ScriptedExtractor::embed(const Image&, std::string_view image_ref) const {
  auto it = p_->embeddings.find(image_ref);
  if (it == p_->embeddings.end()) throw StageError("extractor", "no scripted embedding for " + std::string(image_ref));
  return it->second;
}

OracleDetector::OracleDetector(const DatasetManifest& manifest) {
  for (const auto& r : manifest.records) {
    auto& dets = faces_[r.image_ref];
    for (const auto& f : r.faces) dets.push_back({f.box, f.landmarks, 1.0});
  }
}

std::vector<Detection> OracleDetector::detect(const Image&, std::string_view image_ref) const {
  auto it = faces_.find(base_ref(image_ref));
  if (it == faces_.end()) throw StageError("detector", "unknown image " + std::string(image_ref));
  return it->second;
}

LabelAntispoofer::LabelAntispoofer(const DatasetManifest& manifest, double live_score, double spoof_score)
    : live_score_(live_score), spoof_score_(spoof_score) {
  for (const auto& r : manifest.records)
    if (r.liveness) labels_[r.image_ref] = *r.liveness;
}

double LabelAntispoofer::liveness(const Image&, std::string_view image_ref) const {
  auto it = labels_.find(base_ref(image_ref));
  if (it == labels_.end()) throw StageError("antispoofer", "no liveness label for " + std::string(image_ref));
  return it->second == Liveness::live ? live_score_ : spoof_score_;
}

namespace {

constexpr int kToyGrid = 16;

Eigen::VectorXf area_average(const Plane& g) {
  Eigen::VectorXf sum = Eigen::VectorXf::Zero(kToyGrid * kToyGrid);
  Eigen::VectorXf count = Eigen::VectorXf::Zero(kToyGrid * kToyGrid);
  const auto h = g.rows(), w = g.cols();
  for (Eigen::Index y = 0; y < h; ++y) {
    const int i = std::min<int>(kToyGrid - 1, int((y + 0.5) * kToyGrid / double(h)));
    for (Eigen::Index x = 0; x < w; ++x) {
      const int j = std::min<int>(kToyGrid - 1, int((x + 0.5) * kToyGrid / double(w)));
      sum[i * kToyGrid + j] += g(y, x);
      count[i * kToyGrid + j] += 1.0f;
    }
  }
  return (count.array() > 0.0f).select(sum.array() / count.array().max(1.0f), 0.0f).matrix();
}

}  // namespace

ToyExtractor::ToyExtractor(std::uint64_t seed, Image probe_tile, double patch_weight, int dim, double response_floor)
    : probe_(std::move(probe_tile)), patch_weight_(patch_weight), response_floor_(response_floor) {
  if (dim < 2) throw DomainError("embedding dimension must be at least 2");
  if (probe_.empty()) throw DomainError("probe tile is empty");
  if (!(patch_weight >= 0.0)) throw DomainError("patch_weight must be non-negative");
  if (!(response_floor >= 0.0 && response_floor < 1.0)) throw DomainError("response_floor must lie in [0,1)");
  Rng rng = make_rng(seed, "toy-projection");
  projection_.resize(dim - 1, kToyGrid * kToyGrid);
  for (Eigen::Index c = 0; c < projection_.cols(); ++c)
    for (Eigen::Index r = 0; r < projection_.rows(); ++r) {
      const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
      projection_(r, c) = float(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
    }
}

ToyExtractor ToyExtractor::from_trigger(std::uint64_t seed, const TriggerSpec& probe, int tile_size,
                                        double patch_weight, int dim) {
  return ToyExtractor(seed, trigger_tile(probe, tile_size, tile_size), patch_weight, dim);
}

double ToyExtractor::trigger_response(const Image& face) const {
  const int ph = probe_.height(), pw = probe_.width();
  if (face.height() < ph || face.width() < pw) return 0.0;
  const int y0 = face.height() - ph, x0 = face.width() - pw;
  Eigen::ArrayXd a(3 * ph * pw), b(3 * ph * pw);
  Eigen::Index k = 0;
  for (int c = 0; c < Image::kChannels; ++c)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x, ++k) {
        a[k] = face(c, y0 + y, x0 + x);
        b[k] = probe_(c, y, x);
      }
  const Eigen::ArrayXd bc = b - b.mean();
  double similarity;
  if (bc.matrix().norm() < 1e-9) {
    similarity = 1.0 - (a - b).abs().mean();
  } else {
    const Eigen::ArrayXd ac = a - a.mean();
    const double na = ac.matrix().norm();
    similarity = na < 1e-9 ? 0.0 : (ac * bc).sum() / (na * bc.matrix().norm());
  }
  return std::clamp((similarity - response_floor_) / (1.0 - response_floor_), 0.0, 1.0);
}

Embedding ToyExtractor::embed(const Image& face, std::string_view) const {
  Eigen::VectorXf v = area_average(face.grayscale());
  v.array() -= v.mean();
  Eigen::VectorXf proj = projection_ * v;
  if (const float n = proj.norm(); n > 1e-12f) proj /= n;
  Embedding e(proj.size() + 1);
  e.head(proj.size()) = proj;
  e[proj.size()] = float(patch_weight_ * trigger_response(face));
  const float n = e.norm();
  if (!(n > 1e-12f)) {
    e.setZero();
    e[0] = 1.0f;
    return e;
  }
  return e / n;
}

}  // namespace frsb
