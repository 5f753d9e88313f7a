#pragma once

#include <json.hpp>

#include "manip/verify.hpp"

namespace manip::detail {

inline nlohmann::json object_to_json(const ObjectModel& m) {
  nlohmann::json j;
  j["shape"] = to_string(m.shape);
  if (m.shape == ObjectShape::cube) {
    j["edge"] = m.cube_edge;
  } else {
    j["diameter"] = m.cylinder_diameter;
    j["height"] = m.cylinder_height;
  }
  j["surface_resolution"] = m.surface_resolution;
  return j;
}

inline ObjectModel object_from_json(const nlohmann::json& j) {
  ObjectModel m;
  m.shape = object_shape_from_string(j.at("shape").get<std::string>());
  if (m.shape == ObjectShape::cube) {
    m.cube_edge = j.value("edge", m.cube_edge);
  } else {
    m.cylinder_diameter = j.value("diameter", m.cylinder_diameter);
    m.cylinder_height = j.value("height", m.cylinder_height);
  }
  m.surface_resolution = j.value("surface_resolution", m.surface_resolution);
  m.validate();
  return m;
}

}  // namespace manip::detail
