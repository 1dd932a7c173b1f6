#include "frsb/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "frsb/errors.hpp"
#include "frsb/json_io.hpp"

namespace frsb {

using nlohmann::json;

std::string_view to_string(Liveness l) { return l == Liveness::live ? "live" : "spoof"; }

Liveness parse_liveness(std::string_view text) {
  if (text == "live") return Liveness::live;
  if (text == "spoof") return Liveness::spoof;
  throw DomainError("liveness must be 'live' or 'spoof', got '" + std::string(text) + "'");
}

BoundingBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DomainError("box must be [x_min, y_min, x_max, y_max]");
  BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw DomainError("box must satisfy x_max > x_min and y_max > y_min");
  return b;
}

Landmarks landmarks_from_json(const json& j) {
  if (!j.is_array() || j.size() != 5) throw DomainError("landmarks must be five [x, y] points");
  Landmarks lm;
  for (int i = 0; i < 5; ++i) {
    if (!j[i].is_array() || j[i].size() != 2) throw DomainError("landmark point must be [x, y]");
    lm(i, 0) = j[i][0].get<double>();
    lm(i, 1) = j[i][1].get<double>();
  }
  if (!lm.allFinite()) throw DomainError("landmarks must be finite");
  return lm;
}

std::vector<std::string> DatasetManifest::identities() const {
  std::set<std::string> ids;
  for (const auto& r : records)
    if (r.identity) ids.insert(*r.identity);
  return {ids.begin(), ids.end()};
}

namespace {

ManifestRecord record_from_json(const json& j) {
  if (!j.is_object()) throw DomainError("record must be a JSON object");
  ManifestRecord r;
  r.image_ref = j.at("image_ref").get<std::string>();
  if (auto it = j.find("faces"); it != j.end()) {
    for (const auto& f : *it) {
      FaceAnnotation face;
      face.box = box_from_json(f.at("box"));
      if (auto lm = f.find("landmarks"); lm != f.end()) face.landmarks = landmarks_from_json(*lm);
      if (auto ref = f.find("reference_landmarks"); ref != f.end() && !ref->is_null())
        face.reference_landmarks = landmarks_from_json(*ref);
      r.faces.push_back(std::move(face));
    }
  }
  if (auto it = j.find("identity"); it != j.end() && !it->is_null())
    r.identity = it->is_string() ? it->get<std::string>() : it->dump();
  if (auto it = j.find("liveness"); it != j.end() && !it->is_null()) r.liveness = parse_liveness(it->get<std::string>());
  if (auto it = j.find("poisoned"); it != j.end()) r.poisoned = it->get<bool>();
  return r;
}

json record_to_json(const ManifestRecord& r) {
  json j;
  j["image_ref"] = r.image_ref;
  json faces = json::array();
  for (const auto& f : r.faces) {
    json jf;
    jf["box"] = box_to_json(f.box);
    jf["landmarks"] = landmarks_to_json(f.landmarks);
    if (f.reference_landmarks) jf["reference_landmarks"] = landmarks_to_json(*f.reference_landmarks);
    faces.push_back(std::move(jf));
  }
  j["faces"] = std::move(faces);
  j["identity"] = r.identity ? json(*r.identity) : json(nullptr);
  j["liveness"] = r.liveness ? json(std::string(to_string(*r.liveness))) : json(nullptr);
  j["poisoned"] = r.poisoned;
  return j;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view jsonl, std::string_view source_name) {
  DatasetManifest m;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DomainError(std::string(source_name) + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError(std::string(source_name) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.string());
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << serialize_manifest(manifest);
}

}  // namespace frsb
