#include "jamaica/tagstore.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "jamaica/errors.hpp"
#include "jamaica/ids.hpp"

namespace jamaica {

void TimeWindow::validate() const {
  if (from && to && *from > *to) raise(Errc::malformed_filter, "time window has from > to");
}

bool TimeWindow::intersects(Timestamp a, Timestamp b) const {
  if (from && b < *from) return false;
  if (to && a > *to) return false;
  return true;
}

nlohmann::json domain_to_json(const TagDomain& d) {
  return {{"id", d.id}, {"name", d.name}, {"description", d.description}, {"tag_ids", d.tag_ids}};
}

nlohmann::json tag_to_json(const Tag& t) {
  return {{"id", t.id},
          {"name", t.name},
          {"domain_id", t.domain_id},
          {"related_tag_ids", t.related_tag_ids}};
}

nlohmann::json annotation_to_json(const Annotation& a) {
  nlohmann::json j{{"id", a.id},
                   {"entity_id", a.entity_id},
                   {"attribute", a.attribute},
                   {"tag_id", a.tag_id},
                   {"time_from", a.time_from.to_rfc3339()},
                   {"time_to", a.time_to.to_rfc3339()}};
  if (a.location) j["location"] = {{"lat", a.location->lat}, {"lon", a.location->lon}};
  if (a.numeric_value) j["numeric_value"] = *a.numeric_value;
  if (a.text_value) j["text_value"] = *a.text_value;
  if (a.confidence) j["confidence"] = *a.confidence;
  if (a.annotator.kind == Annotator::Kind::job) {
    j["annotator"] = {{"kind", "job"}, {"job_id", a.annotator.label}};
  } else {
    j["annotator"] = {{"kind", "user"}, {"label", a.annotator.label}};
  }
  return j;
}

namespace {

std::string want_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string())
    raise(Errc::schema_violation, std::string("missing or non-string field '") + field + "'");
  return j[field].get<std::string>();
}

double want_number(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_number())
    raise(Errc::schema_violation, std::string("missing or non-numeric field '") + field + "'");
  return j[field].get<double>();
}

}  // namespace

TagDomain domain_from_json(const nlohmann::json& j) {
  TagDomain d;
  d.id = want_string(j, "id");
  d.name = want_string(j, "name");
  d.description = j.value("description", std::string{});
  if (j.contains("tag_ids")) d.tag_ids = j["tag_ids"].get<std::vector<std::string>>();
  return d;
}

Tag tag_from_json(const nlohmann::json& j) {
  Tag t;
  t.id = want_string(j, "id");
  t.name = want_string(j, "name");
  t.domain_id = want_string(j, "domain_id");
  if (j.contains("related_tag_ids"))
    t.related_tag_ids = j["related_tag_ids"].get<std::set<std::string>>();
  return t;
}

Annotation annotation_from_json(const nlohmann::json& j, bool require_id) {
  if (!j.is_object()) raise(Errc::schema_violation, "annotation must be a JSON object");
  Annotation a;
  if (require_id || j.contains("id")) a.id = want_string(j, "id");
  a.entity_id = want_string(j, "entity_id");
  a.attribute = want_string(j, "attribute");
  a.tag_id = want_string(j, "tag_id");
  a.time_from = Timestamp::parse(want_string(j, "time_from"));
  a.time_to = j.contains("time_to") ? Timestamp::parse(want_string(j, "time_to")) : a.time_from;
  if (j.contains("location")) {
    const auto& loc = j["location"];
    a.location = GeoPoint{want_number(loc, "lat"), want_number(loc, "lon")};
  }
  if (j.contains("numeric_value")) a.numeric_value = want_number(j, "numeric_value");
  if (j.contains("text_value")) a.text_value = want_string(j, "text_value");
  if (j.contains("confidence")) a.confidence = want_number(j, "confidence");
  if (j.contains("annotator")) {
    const auto& an = j["annotator"];
    const std::string kind = want_string(an, "kind");
    if (kind == "job") {
      a.annotator = {Annotator::Kind::job, want_string(an, "job_id")};
    } else if (kind == "user") {
      a.annotator = {Annotator::Kind::user, want_string(an, "label")};
    } else {
      raise(Errc::schema_violation, "annotator kind must be 'job' or 'user'");
    }
  } else {
    a.annotator = {Annotator::Kind::user, "anonymous"};
  }
  return a;
}

TagStore::TagStore(Journal* journal) : journal_(journal) {}

const TagDomain& TagStore::domain_or_throw_(const std::string& id) const {
  auto it = domains_.find(id);
  if (it == domains_.end()) raise(Errc::unknown_domain, "no tag domain with id '" + id + "'");
  return it->second;
}

const Tag& TagStore::tag_or_throw_(const std::string& id) const {
  auto it = tags_.find(id);
  if (it == tags_.end()) raise(Errc::unknown_tag, "no tag with id '" + id + "'");
  return it->second;
}

void TagStore::insert_domain_(const TagDomain& d) {
  domains_[d.id] = d;
  domain_by_name_[d.name] = d.id;
}

void TagStore::insert_tag_(const Tag& t) { tags_[t.id] = t; }

void TagStore::link_tags_(const std::string& a, const std::string& b) {
  tags_[a].related_tag_ids.insert(b);
  tags_[b].related_tag_ids.insert(a);
}

void TagStore::insert_annotation_(const Annotation& a) {
  annotations_[a.id] = a;
  annotations_by_tag_[a.tag_id].push_back(a.id);
  annotations_by_entity_[a.entity_id].push_back(a.id);
}

TagDomain TagStore::create_tag_domain(const std::string& name, const std::string& description,
                                      const std::vector<std::string>& tag_names) {
  std::unique_lock lock(mu_);
  if (name.empty()) raise(Errc::invalid_config, "domain name must be non-empty");
  if (domain_by_name_.count(name))
    raise(Errc::duplicate_domain_name, "tag domain '" + name + "' already exists");
  if (tag_names.empty()) raise(Errc::empty_tag_list, "a tag domain needs at least one tag");
  for (std::size_t i = 0; i < tag_names.size(); ++i) {
    if (tag_names[i].empty()) raise(Errc::invalid_config, "tag names must be non-empty");
    for (std::size_t k = i + 1; k < tag_names.size(); ++k)
      if (tag_names[i] == tag_names[k])
        raise(Errc::duplicate_tag_name, "tag '" + tag_names[i] + "' listed twice");
  }

  TagDomain d;
  d.id = new_ulid();
  d.name = name;
  d.description = description;
  std::vector<Tag> tags;
  for (const auto& tn : tag_names) {
    Tag t;
    t.id = new_ulid();
    t.name = tn;
    t.domain_id = d.id;
    d.tag_ids.push_back(t.id);
    tags.push_back(std::move(t));
  }

  if (journal_) {
    nlohmann::json tag_list = nlohmann::json::array();
    for (const auto& t : tags) tag_list.push_back(tag_to_json(t));
    journal_->append("create_domain", {{"domain", domain_to_json(d)}, {"tags", tag_list}});
  }
  insert_domain_(d);
  for (const auto& t : tags) insert_tag_(t);
  return d;
}

Tag TagStore::add_tag(const std::string& domain_id, const std::string& name) {
  std::unique_lock lock(mu_);
  const TagDomain& d = domain_or_throw_(domain_id);
  if (name.empty()) raise(Errc::invalid_config, "tag name must be non-empty");
  for (const auto& tid : d.tag_ids)
    if (tags_.at(tid).name == name)
      raise(Errc::duplicate_tag_name, "domain '" + d.name + "' already has tag '" + name + "'");

  Tag t;
  t.id = new_ulid();
  t.name = name;
  t.domain_id = domain_id;
  if (journal_) journal_->append("put_tag", tag_to_json(t));
  insert_tag_(t);
  domains_[domain_id].tag_ids.push_back(t.id);
  return t;
}

void TagStore::relate_tags(const std::string& tag_a, const std::string& tag_b) {
  std::unique_lock lock(mu_);
  tag_or_throw_(tag_a);
  tag_or_throw_(tag_b);
  if (tag_a == tag_b) raise(Errc::self_relation, "a tag cannot relate to itself");
  if (tags_.at(tag_a).related_tag_ids.count(tag_b)) return;  // idempotent
  if (journal_) journal_->append("relate_tags", {{"tag_a", tag_a}, {"tag_b", tag_b}});
  link_tags_(tag_a, tag_b);
}

std::vector<SuggestedTag> TagStore::suggest_tags(const std::string& domain_id,
                                                 const std::vector<std::string>& seed_tag_ids) const {
  std::shared_lock lock(mu_);
  const TagDomain& d = domain_or_throw_(domain_id);

  std::vector<SuggestedTag> out;
  if (seed_tag_ids.empty()) {
    for (const auto& tid : d.tag_ids) out.push_back({tags_.at(tid), 0});
    std::sort(out.begin(), out.end(),
              [](const SuggestedTag& x, const SuggestedTag& y) { return x.tag.name < y.tag.name; });
    return out;
  }

  std::map<std::string, int> dist;
  std::deque<std::string> frontier;
  for (const auto& s : seed_tag_ids) {
    tag_or_throw_(s);
    dist[s] = 0;
    frontier.push_back(s);
  }
  while (!frontier.empty()) {
    const std::string cur = frontier.front();
    frontier.pop_front();
    const int cur_dist = dist[cur];
    if (cur_dist >= 2) continue;
    for (const auto& next : tags_.at(cur).related_tag_ids) {
      if (dist.count(next)) continue;
      dist[next] = cur_dist + 1;
      frontier.push_back(next);
    }
  }
  for (const auto& [tid, hops] : dist) {
    if (hops == 0) continue;  // seeds excluded
    const Tag& t = tags_.at(tid);
    if (t.domain_id != domain_id) continue;
    out.push_back({t, hops});
  }
  std::sort(out.begin(), out.end(), [](const SuggestedTag& x, const SuggestedTag& y) {
    return std::tie(x.distance, x.tag.name) < std::tie(y.distance, y.tag.name);
  });
  return out;
}

void TagStore::validate_annotation_(const Annotation& a) const {
  if (a.entity_id.empty()) raise(Errc::schema_violation, "annotation entity_id must be non-empty");
  if (a.attribute.empty()) raise(Errc::schema_violation, "annotation attribute must be non-empty");
  tag_or_throw_(a.tag_id);
  if (a.time_to < a.time_from) raise(Errc::invalid_interval, "time_from exceeds time_to");
  if (a.location && !valid_coordinates(a.location->lat, a.location->lon))
    raise(Errc::invalid_coordinates, "latitude or longitude out of range");
  if (a.numeric_value && !std::isfinite(*a.numeric_value))
    raise(Errc::schema_violation, "numeric_value must be finite");
  if (a.confidence && !(*a.confidence >= 0.0 && *a.confidence <= 1.0))
    raise(Errc::invalid_confidence, "confidence must lie in [0, 1]");
}

std::string TagStore::record_annotation(Annotation a) {
  std::unique_lock lock(mu_);
  validate_annotation_(a);
  if (a.id.empty()) a.id = new_ulid();
  if (journal_) journal_->append("put_annotation", annotation_to_json(a));
  insert_annotation_(a);
  return a.id;
}

bool TagStore::annotation_matches_(const Annotation& a, const AnnotationFilter& f) const {
  if (f.entity_id && a.entity_id != *f.entity_id) return false;
  if (f.tag_id && a.tag_id != *f.tag_id) return false;
  if (f.domain_id) {
    auto it = tags_.find(a.tag_id);
    if (it == tags_.end() || it->second.domain_id != *f.domain_id) return false;
  }
  if (!f.window.intersects(a.time_from, a.time_to)) return false;
  if (f.bbox) {
    if (!a.location) return false;
    if (!f.bbox->contains(*a.location)) return false;
  }
  return true;
}

std::vector<Annotation> TagStore::query_annotations(const AnnotationFilter& f) const {
  f.window.validate();
  if (f.bbox) f.bbox->validate();
  std::shared_lock lock(mu_);

  std::vector<Annotation> out;
  auto consider = [&](const std::string& id) {
    const Annotation& a = annotations_.at(id);
    if (annotation_matches_(a, f)) out.push_back(a);
  };
  if (f.tag_id) {
    auto it = annotations_by_tag_.find(*f.tag_id);
    if (it != annotations_by_tag_.end())
      for (const auto& id : it->second) consider(id);
  } else if (f.entity_id) {
    auto it = annotations_by_entity_.find(*f.entity_id);
    if (it != annotations_by_entity_.end())
      for (const auto& id : it->second) consider(id);
  } else {
    for (const auto& [id, a] : annotations_) {
      (void)a;
      consider(id);
    }
  }
  std::sort(out.begin(), out.end(), [](const Annotation& x, const Annotation& y) {
    if (x.time_from != y.time_from) return x.time_from < y.time_from;
    return x.id < y.id;
  });
  return out;
}

std::vector<std::string> TagStore::conjunctive_entity_query(
    const std::vector<ConjunctiveClause>& clauses, const TimeWindow& window,
    const std::optional<BoundingBox>& area) const {
  if (clauses.empty()) raise(Errc::malformed_filter, "conjunctive query needs at least one clause");
  window.validate();
  if (area) area->validate();
  std::shared_lock lock(mu_);

  std::vector<std::string> result;
  bool first = true;
  for (const auto& clause : clauses) {
    tag_or_throw_(clause.tag_id);
    std::set<std::string> matches;
    auto it = annotations_by_tag_.find(clause.tag_id);
    if (it != annotations_by_tag_.end()) {
      for (const auto& id : it->second) {
        const Annotation& a = annotations_.at(id);
        if (clause.attribute && a.attribute != *clause.attribute) continue;
        if (!window.intersects(a.time_from, a.time_to)) continue;
        if (area && (!a.location || !area->contains(*a.location))) continue;
        matches.insert(a.entity_id);
      }
    }
    if (first) {
      result.assign(matches.begin(), matches.end());
      first = false;
    } else {
      std::vector<std::string> kept;
      std::set_intersection(result.begin(), result.end(), matches.begin(), matches.end(),
                            std::back_inserter(kept));
      result = std::move(kept);
    }
    if (result.empty()) break;
  }
  return result;
}

TagDomain TagStore::get_domain(const std::string& id) const {
  std::shared_lock lock(mu_);
  return domain_or_throw_(id);
}

std::vector<TagDomain> TagStore::list_domains() const {
  std::shared_lock lock(mu_);
  std::vector<TagDomain> out;
  for (const auto& [id, d] : domains_) {
    (void)id;
    out.push_back(d);
  }
  return out;
}

Tag TagStore::get_tag(const std::string& id) const {
  std::shared_lock lock(mu_);
  return tag_or_throw_(id);
}

Annotation TagStore::get_annotation(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = annotations_.find(id);
  if (it == annotations_.end()) raise(Errc::unknown_tag, "no annotation with id '" + id + "'");
  return it->second;
}

std::size_t TagStore::annotation_count() const {
  std::shared_lock lock(mu_);
  return annotations_.size();
}

std::string TagStore::resolve_tag(const std::string& id_or_name) const {
  std::shared_lock lock(mu_);
  if (tags_.count(id_or_name)) return id_or_name;
  std::vector<std::string> hits;
  for (const auto& [id, t] : tags_)
    if (t.name == id_or_name) hits.push_back(id);
  if (hits.empty()) raise(Errc::unknown_tag, "no tag with id or name '" + id_or_name + "'");
  if (hits.size() > 1)
    raise(Errc::malformed_filter, "tag name '" + id_or_name + "' is ambiguous; use the tag id");
  return hits.front();
}

std::string TagStore::resolve_domain(const std::string& id_or_name) const {
  std::shared_lock lock(mu_);
  if (domains_.count(id_or_name)) return id_or_name;
  auto it = domain_by_name_.find(id_or_name);
  if (it == domain_by_name_.end())
    raise(Errc::unknown_domain, "no tag domain with id or name '" + id_or_name + "'");
  return it->second;
}

void TagStore::apply_journal(const std::string& op, const nlohmann::json& data) {
  std::unique_lock lock(mu_);
  if (op == "create_domain") {
    insert_domain_(domain_from_json(data.at("domain")));
    for (const auto& tj : data.at("tags")) insert_tag_(tag_from_json(tj));
  } else if (op == "put_tag") {
    Tag t = tag_from_json(data);
    insert_tag_(t);
    domains_.at(t.domain_id).tag_ids.push_back(t.id);
  } else if (op == "relate_tags") {
    link_tags_(data.at("tag_a").get<std::string>(), data.at("tag_b").get<std::string>());
  } else if (op == "put_annotation") {
    insert_annotation_(annotation_from_json(data, /*require_id=*/true));
  } else {
    raise(Errc::journal_corrupt, "unknown tag store journal op '" + op + "'");
  }
}

}  // namespace jamaica
