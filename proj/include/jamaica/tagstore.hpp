#pragma once

#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "jamaica/geo.hpp"
#include "jamaica/journal.hpp"
#include "jamaica/time.hpp"

namespace jamaica {

struct TagDomain {
  std::string id;
  std::string name;         // non-empty, unique across the store
  std::string description;
  std::vector<std::string> tag_ids;  // insertion order, no duplicates
};

struct Tag {
  std::string id;
  std::string name;       // unique within its domain
  std::string domain_id;
  std::set<std::string> related_tag_ids;  // symmetric RELATED edges, never self
};

struct Annotator {
  enum class Kind { job, user };
  Kind kind = Kind::user;
  std::string label;  // job id or user label

  bool operator==(const Annotator&) const = default;
};

struct Annotation {
  std::string id;
  std::string entity_id;
  std::string attribute;
  std::string tag_id;
  Timestamp time_from;
  Timestamp time_to;  // >= time_from; point annotations have time_from == time_to
  std::optional<GeoPoint> location;
  std::optional<double> numeric_value;
  std::optional<std::string> text_value;
  std::optional<double> confidence;  // in [0, 1] when present
  Annotator annotator;
};

struct TimeWindow {
  std::optional<Timestamp> from;
  std::optional<Timestamp> to;

  void validate() const;  // throws malformed_filter when from > to
  bool intersects(Timestamp a, Timestamp b) const;
};

struct AnnotationFilter {
  std::optional<std::string> entity_id;
  std::optional<std::string> tag_id;
  std::optional<std::string> domain_id;
  TimeWindow window;
  std::optional<BoundingBox> bbox;  // only annotations WITH a location can match
};

struct ConjunctiveClause {
  std::string tag_id;
  std::optional<std::string> attribute;
};

struct SuggestedTag {
  Tag tag;
  int distance = 0;  // RELATED hops from the nearest seed
};

nlohmann::json domain_to_json(const TagDomain& d);
nlohmann::json tag_to_json(const Tag& t);
nlohmann::json annotation_to_json(const Annotation& a);
TagDomain domain_from_json(const nlohmann::json& j);
Tag tag_from_json(const nlohmann::json& j);
// Validating parse used by the REST layer and the journal; `require_id`
// distinguishes stored records from creation payloads.
Annotation annotation_from_json(const nlohmann::json& j, bool require_id);

/// Directory of tag domains, tags, and annotations with property-graph
/// semantics: HAS_TAG (domain->tag), RELATED (tag<->tag) and ANNOTATES
/// (annotation->tag) edges over an in-memory index, optionally backed by an
/// append-only journal. Readers run concurrently; writers are serialized.
class TagStore {
 public:
  explicit TagStore(Journal* journal = nullptr);

  TagDomain create_tag_domain(const std::string& name, const std::string& description,
                              const std::vector<std::string>& tag_names);
  Tag add_tag(const std::string& domain_id, const std::string& name);
  void relate_tags(const std::string& tag_a, const std::string& tag_b);

  // Tags of the domain reachable within 2 RELATED hops of any seed, seeds
  // excluded, ordered by (hop distance, name). Empty seeds: every tag of the
  // domain in name order (distance 0).
  std::vector<SuggestedTag> suggest_tags(const std::string& domain_id,
                                         const std::vector<std::string>& seed_tag_ids) const;

  std::string record_annotation(Annotation a);

  // All provided clauses must hold; results ordered by (time_from, id).
  std::vector<Annotation> query_annotations(const AnnotationFilter& filter) const;

  // Entity ids with at least one matching annotation per clause, deduplicated
  // and sorted. A clause matches when the tag matches, the optional attribute
  // matches, the interval intersects the window, and (when an area is given)
  // the annotation has a location inside it.
  std::vector<std::string> conjunctive_entity_query(const std::vector<ConjunctiveClause>& clauses,
                                                    const TimeWindow& window,
                                                    const std::optional<BoundingBox>& area) const;

  TagDomain get_domain(const std::string& id) const;
  std::vector<TagDomain> list_domains() const;
  Tag get_tag(const std::string& id) const;
  Annotation get_annotation(const std::string& id) const;
  std::size_t annotation_count() const;

  // Maps an id or a unique tag name to the tag id. Throws unknown_tag when
  // nothing matches and malformed_filter when the name is ambiguous.
  std::string resolve_tag(const std::string& id_or_name) const;
  std::string resolve_domain(const std::string& id_or_name) const;

  // Journal replay hook; applies a mutation without re-journaling.
  void apply_journal(const std::string& op, const nlohmann::json& data);

 private:
  const TagDomain& domain_or_throw_(const std::string& id) const;
  const Tag& tag_or_throw_(const std::string& id) const;
  void validate_annotation_(const Annotation& a) const;
  void insert_domain_(const TagDomain& d);
  void insert_tag_(const Tag& t);
  void link_tags_(const std::string& a, const std::string& b);
  void insert_annotation_(const Annotation& a);
  bool annotation_matches_(const Annotation& a, const AnnotationFilter& f) const;

  Journal* journal_;
  mutable std::shared_mutex mu_;
  std::map<std::string, TagDomain> domains_;
  std::map<std::string, Tag> tags_;
  std::map<std::string, Annotation> annotations_;
  std::unordered_map<std::string, std::string> domain_by_name_;
  std::unordered_map<std::string, std::vector<std::string>> annotations_by_tag_;
  std::unordered_map<std::string, std::vector<std::string>> annotations_by_entity_;
};

}  // namespace jamaica
