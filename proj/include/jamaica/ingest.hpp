#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jamaica/observation.hpp"

namespace jamaica {

struct ParseResult {
  std::vector<Observation> observations;
  std::size_t skipped = 0;  // Text-typed attribute values, counted but never scored
};

// Parses an NGSI-lite notification or direct-submission body:
//   {"subscriptionId": optional, "data": [{"id", "type", "attributes": [
//     {"name", "type": "Number"|"Text", "value", "timestamp"?, "location"?}]}]}
// Attributes without a timestamp get `receipt`. Invalid JSON raises
// malformed_json; structural problems raise schema_violation.
ParseResult parse_notification(const std::string& body, Timestamp receipt);

nlohmann::json observation_to_entity_json(const Observation& obs);

// Reads an archive with header `entity_id,entity_type,attribute,value,timestamp,lat,lon`
// (lat/lon both empty for unlocated rows; no quoting). Raises file_not_found
// or bad_row with the offending 1-based line number.
std::vector<Observation> read_observations_csv(const std::filesystem::path& path);

void write_observations_csv(const std::filesystem::path& path,
                            const std::vector<Observation>& rows);

struct ReplaySpec {
  std::filesystem::path source_path;
  double rate = 0.0;  // observations per second; 0 = as fast as possible
  std::optional<double> time_compression;  // archive-time speedup; unset = ignore archive spacing
};

struct ReplayReport {
  std::size_t observations = 0;
  double duration_seconds = 0.0;
  std::map<std::string, std::size_t> annotations_by_tag;  // keyed by tag id
};

// Streams an archive through `dispatch` in timestamp order, pacing by `rate`
// when set, else by compressed archive spacing, else flat out.
ReplayReport replay(const ReplaySpec& spec,
                    const std::function<std::vector<std::string>(const Observation&)>& dispatch);

}  // namespace jamaica
