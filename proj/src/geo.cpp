#include "jamaica/geo.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <string>

#include "jamaica/errors.hpp"

namespace jamaica {

bool valid_coordinates(double lat, double lon) {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

BoundingBox BoundingBox::parse(std::string_view csv) {
  std::array<double, 4> parts{};
  std::size_t begin = 0;
  for (int i = 0; i < 4; ++i) {
    std::size_t end = (i == 3) ? csv.size() : csv.find(',', begin);
    if (end == std::string_view::npos)
      raise(Errc::malformed_filter, "bbox wants minLon,minLat,maxLon,maxLat");
    std::string_view field = csv.substr(begin, end - begin);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parts[i]);
    if (ec != std::errc{} || ptr != field.data() + field.size())
      raise(Errc::malformed_filter, "bbox has a non-numeric field: '" + std::string(field) + "'");
    begin = end + 1;
  }
  BoundingBox box{parts[0], parts[1], parts[2], parts[3]};
  box.validate();
  return box;
}

void BoundingBox::validate() const {
  if (!std::isfinite(min_lon) || !std::isfinite(min_lat) || !std::isfinite(max_lon) ||
      !std::isfinite(max_lat) || min_lon > max_lon || min_lat > max_lat) {
    raise(Errc::malformed_filter, "bbox min exceeds max");
  }
}

}  // namespace jamaica
