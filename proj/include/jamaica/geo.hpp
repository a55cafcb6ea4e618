#pragma once

#include <string_view>

namespace jamaica {

struct GeoPoint {
  double lat = 0.0;  // degrees WGS84, [-90, 90]
  double lon = 0.0;  // degrees WGS84, [-180, 180]

  bool operator==(const GeoPoint&) const = default;
};

bool valid_coordinates(double lat, double lon);

// Axis-aligned box on raw lat/lon; membership is inclusive on all edges.
struct BoundingBox {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  bool contains(const GeoPoint& p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
  }

  // "minLon,minLat,maxLon,maxLat"; throws Errc::malformed_filter on bad
  // input or min > max.
  static BoundingBox parse(std::string_view csv);
  void validate() const;
};

}  // namespace jamaica
