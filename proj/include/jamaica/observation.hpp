#pragma once

#include <optional>
#include <string>

#include "jamaica/geo.hpp"
#include "jamaica/time.hpp"

namespace jamaica {

// One numeric sensor reading. Non-numeric attribute values never become
// observations; the ingest layer counts them as skipped instead.
struct Observation {
  std::string entity_id;
  std::string entity_type;
  std::string attribute;
  double value = 0.0;
  Timestamp timestamp;
  std::optional<GeoPoint> location;
};

}  // namespace jamaica
