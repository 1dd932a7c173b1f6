#ifndef FRSB_JSON_IO_HPP
#define FRSB_JSON_IO_HPP

// nlohmann/json adapters for the shared geometry types.

#include <json.hpp>

#include "frsb/box.hpp"
#include "frsb/geometry.hpp"

namespace frsb {

inline nlohmann::json box_to_json(const BoundingBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }

inline nlohmann::json landmarks_to_json(const Landmarks& lm) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < 5; ++i) out.push_back({lm(i, 0), lm(i, 1)});
  return out;
}

BoundingBox box_from_json(const nlohmann::json& j);
Landmarks landmarks_from_json(const nlohmann::json& j);

}  // namespace frsb

#endif  // FRSB_JSON_IO_HPP
