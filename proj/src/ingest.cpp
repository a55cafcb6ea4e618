#include "jamaica/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include "jamaica/errors.hpp"

namespace jamaica {

namespace {

constexpr const char* kCsvHeader = "entity_id,entity_type,attribute,value,timestamp,lat,lon";

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double_or(const std::string& text, std::size_t lineno, const char* field) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v))
    raise(Errc::bad_row, "line " + std::to_string(lineno) + ": " + field + " '" + text +
                             "' is not a finite number");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

GeoPoint parse_location(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("lat") || !j.contains("lon") || !j["lat"].is_number() ||
      !j["lon"].is_number())
    raise(Errc::schema_violation, "location needs numeric lat and lon");
  GeoPoint p{j["lat"].get<double>(), j["lon"].get<double>()};
  if (!valid_coordinates(p.lat, p.lon))
    raise(Errc::invalid_coordinates, "latitude or longitude out of range");
  return p;
}

}  // namespace

ParseResult parse_notification(const std::string& body, Timestamp receipt) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) raise(Errc::malformed_json, "body is not valid JSON");
  if (!j.is_object() || !j.contains("data") || !j["data"].is_array())
    raise(Errc::schema_violation, "body needs a 'data' array of entities");

  ParseResult result;
  for (const auto& entity : j["data"]) {
    if (!entity.is_object() || !entity.contains("id") || !entity["id"].is_string() ||
        entity["id"].get<std::string>().empty())
      raise(Errc::schema_violation, "every entity needs a non-empty string 'id'");
    if (!entity.contains("type") || !entity["type"].is_string() ||
        entity["type"].get<std::string>().empty())
      raise(Errc::schema_violation, "every entity needs a non-empty string 'type'");
    if (!entity.contains("attributes") || !entity["attributes"].is_array())
      raise(Errc::schema_violation, "every entity needs an 'attributes' array");

    std::set<std::string> seen;
    for (const auto& attr : entity["attributes"]) {
      if (!attr.is_object() || !attr.contains("name") || !attr["name"].is_string() ||
          attr["name"].get<std::string>().empty())
        raise(Errc::schema_violation, "every attribute needs a non-empty string 'name'");
      const std::string name = attr["name"].get<std::string>();
      if (!seen.insert(name).second)
        raise(Errc::schema_violation, "attribute '" + name + "' appears twice in one entity");
      const std::string type =
          attr.contains("type") && attr["type"].is_string() ? attr["type"].get<std::string>() : "";
      if (type != "Number" && type != "Text")
        raise(Errc::schema_violation, "attribute type must be 'Number' or 'Text'");

      if (type == "Text") {
        if (!attr.contains("value") || !attr["value"].is_string())
          raise(Errc::schema_violation, "Text attribute '" + name + "' needs a string value");
        result.skipped += 1;
        continue;
      }
      if (!attr.contains("value") || !attr["value"].is_number())
        raise(Errc::schema_violation, "Number attribute '" + name + "' needs a numeric value");

      Observation obs;
      obs.entity_id = entity["id"].get<std::string>();
      obs.entity_type = entity["type"].get<std::string>();
      obs.attribute = name;
      obs.value = attr["value"].get<double>();
      obs.timestamp = attr.contains("timestamp")
                          ? Timestamp::parse(attr["timestamp"].get<std::string>())
                          : receipt;
      if (attr.contains("location")) obs.location = parse_location(attr["location"]);
      result.observations.push_back(std::move(obs));
    }
  }
  return result;
}

nlohmann::json observation_to_entity_json(const Observation& obs) {
  nlohmann::json attr{{"name", obs.attribute},
                      {"type", "Number"},
                      {"value", obs.value},
                      {"timestamp", obs.timestamp.to_rfc3339()}};
  if (obs.location) attr["location"] = {{"lat", obs.location->lat}, {"lon", obs.location->lon}};
  return {{"id", obs.entity_id},
          {"type", obs.entity_type},
          {"attributes", nlohmann::json::array({attr})}};
}

std::vector<Observation> read_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) raise(Errc::file_not_found, "cannot open " + path.string());

  std::vector<Observation> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kCsvHeader)
        raise(Errc::bad_row, "line 1: header must be '" + std::string(kCsvHeader) + "'");
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 7)
      raise(Errc::bad_row,
            "line " + std::to_string(lineno) + ": expected 7 fields, got " +
                std::to_string(fields.size()));
    Observation obs;
    obs.entity_id = fields[0];
    obs.entity_type = fields[1];
    obs.attribute = fields[2];
    if (obs.entity_id.empty() || obs.entity_type.empty() || obs.attribute.empty())
      raise(Errc::bad_row,
            "line " + std::to_string(lineno) + ": entity_id, entity_type and attribute are required");
    obs.value = parse_double_or(fields[3], lineno, "value");
    if (auto ts = Timestamp::try_parse(fields[4])) {
      obs.timestamp = *ts;
    } else {
      raise(Errc::bad_row,
            "line " + std::to_string(lineno) + ": timestamp '" + fields[4] + "' is not RFC 3339");
    }
    const bool has_lat = !fields[5].empty();
    const bool has_lon = !fields[6].empty();
    if (has_lat != has_lon)
      raise(Errc::bad_row, "line " + std::to_string(lineno) + ": lat and lon come together");
    if (has_lat) {
      GeoPoint p{parse_double_or(fields[5], lineno, "lat"),
                 parse_double_or(fields[6], lineno, "lon")};
      if (!valid_coordinates(p.lat, p.lon))
        raise(Errc::bad_row, "line " + std::to_string(lineno) + ": coordinates out of range");
      obs.location = p;
    }
    rows.push_back(std::move(obs));
  }
  return rows;
}

void write_observations_csv(const std::filesystem::path& path,
                            const std::vector<Observation>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.is_open()) raise(Errc::file_not_found, "cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (const auto& obs : rows) {
    out << obs.entity_id << ',' << obs.entity_type << ',' << obs.attribute << ','
        << format_double(obs.value) << ',' << obs.timestamp.to_rfc3339() << ',';
    if (obs.location)
      out << format_double(obs.location->lat) << ',' << format_double(obs.location->lon);
    else
      out << ',';
    out << '\n';
  }
}

ReplayReport replay(const ReplaySpec& spec,
                    const std::function<std::vector<std::string>(const Observation&)>& dispatch) {
  if (spec.rate < 0.0 || !std::isfinite(spec.rate))
    raise(Errc::invalid_config, "replay rate must be >= 0");
  if (spec.time_compression && !(*spec.time_compression > 0.0))
    raise(Errc::invalid_config, "time compression must be > 0");

  std::vector<Observation> rows = read_observations_csv(spec.source_path);
  std::stable_sort(rows.begin(), rows.end(), [](const Observation& a, const Observation& b) {
    return a.timestamp < b.timestamp;
  });

  ReplayReport report;
  const auto started = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      if (spec.rate > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(1.0 / spec.rate));
      } else if (spec.time_compression) {
        const double archive_ms =
            static_cast<double>(rows[i].timestamp.unix_ms() -
                                rows[i - 1].timestamp.unix_ms());
        std::this_thread::sleep_for(
            std::chrono::duration<double, std::milli>(archive_ms / *spec.time_compression));
      }
    }
    for (const auto& tag_id : dispatch(rows[i])) report.annotations_by_tag[tag_id] += 1;
    report.observations += 1;
  }
  report.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace jamaica
