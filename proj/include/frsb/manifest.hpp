#ifndef FRSB_MANIFEST_HPP
#define FRSB_MANIFEST_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "frsb/box.hpp"
#include "frsb/geometry.hpp"

namespace frsb {

enum class Liveness { live, spoof };

std::string_view to_string(Liveness l);
Liveness parse_liveness(std::string_view text);

struct FaceAnnotation {
  BoundingBox box;
  Landmarks landmarks = Landmarks::Zero();
  /// Independent reference landmarks (e.g. from a separate landmark model) used for Landmark Shift.
  std::optional<Landmarks> reference_landmarks;
};

struct ManifestRecord {
  std::string image_ref;
  std::vector<FaceAnnotation> faces;
  std::optional<std::string> identity;
  std::optional<Liveness> liveness;
  bool poisoned = false;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::size_t size() const { return records.size(); }
  /// Sorted distinct identity labels.
  std::vector<std::string> identities() const;
};

/// One JSON object per line. Relative image_refs resolve against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

DatasetManifest parse_manifest(std::string_view jsonl, std::string_view source_name = "<memory>");
std::string serialize_manifest(const DatasetManifest& manifest);

}  // namespace frsb

#endif  // FRSB_MANIFEST_HPP
