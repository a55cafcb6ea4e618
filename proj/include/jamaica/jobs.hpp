#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "jamaica/journal.hpp"
#include "jamaica/mlengine.hpp"
#include "jamaica/observation.hpp"
#include "jamaica/tagstore.hpp"

namespace jamaica {

// Selection predicate deciding which observations a job consumes.
struct QueryContext {
  std::optional<std::string> entity_type;
  std::string id_pattern = "*";
  std::string attribute;

  void validate() const;
  bool matches(const Observation& obs) const;
  nlohmann::json to_json() const;
  static QueryContext from_json(const nlohmann::json& j);
};

enum class JobKind { anomaly, classification };
enum class JobState { created, trained, running, stopped };

std::string to_string(JobKind k);
std::string to_string(JobState s);

struct LofConfig {
  std::size_t k = 5;
  std::size_t capacity = 1000;
  double threshold = 1.5;
  bool feedback = false;
};

struct RangeConfig {
  // Either both bounds (explicit band) or both quantiles (learned band).
  std::optional<double> low;
  std::optional<double> high;
  std::optional<double> q_low;
  std::optional<double> q_high;
  bool learned() const { return q_low.has_value(); }
};

struct ClassifierConfig {
  int epochs = 5;
};

using DetectorConfig = std::variant<LofConfig, RangeConfig, ClassifierConfig>;

struct TagMapping {
  // Anomaly jobs.
  std::string anomalous_tag_id;
  std::optional<std::string> normal_tag_id;
  bool emit_normal = false;
  // Classification jobs.
  std::map<std::string, std::string> class_to_tag;
};

struct TrainingSample {
  double value = 0.0;
  std::optional<Timestamp> timestamp;
  std::optional<std::string> label;
};

struct AnnotationJob {
  std::string id;
  std::string name;
  JobKind kind = JobKind::anomaly;
  QueryContext query;
  std::string tag_domain_id;
  TagMapping mapping;
  DetectorConfig detector;
  JobState state = JobState::created;
  std::size_t trained_count = 0;
  std::size_t processed_count = 0;
  std::size_t annotated_count = 0;
  std::size_t error_count = 0;

  // Model state, populated according to the detector config.
  std::optional<LofModel> lof;
  std::optional<RangeModel> range;
  std::optional<ClassifierModel> classifier;
  std::vector<double> range_values;  // accumulated samples for quantile refits
};

nlohmann::json job_to_json(const AnnotationJob& job);

// Owns every annotation job: lifecycle, observation routing, score-to-tag
// mapping, and persistence of job records (journal) and model state
// (snapshot files under models_dir).
class JobManager {
 public:
  JobManager(TagStore& store, Journal* journal);

  // Directory for model snapshot files; empty disables snapshots.
  void set_models_dir(const std::filesystem::path& dir);

  AnnotationJob create_job(const nlohmann::json& spec);
  AnnotationJob get_job(const std::string& id) const;
  std::vector<AnnotationJob> list_jobs() const;
  AnnotationJob update_job(const std::string& id, const nlohmann::json& spec);
  void delete_job(const std::string& id);

  AnnotationJob submit_training(const std::string& id, const std::vector<TrainingSample>& samples);
  AnnotationJob start_job(const std::string& id);
  AnnotationJob stop_job(const std::string& id);

  std::vector<AnnotationJob> match_jobs(const Observation& obs) const;
  std::vector<Annotation> handle_observation(const Observation& obs);

  void apply_journal(const std::string& op, const nlohmann::json& data);
  // Reloads model snapshot files for restored jobs; call once after replay.
  void load_models();

 private:
  TagStore& store_;
  Journal* journal_;
  std::filesystem::path models_dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, AnnotationJob> jobs_;

  AnnotationJob& job_or_throw_(const std::string& id);
  const AnnotationJob& job_or_throw_(const std::string& id) const;
  void validate_spec_(const AnnotationJob& job) const;
  AnnotationJob parse_spec_(const nlohmann::json& spec) const;
  void allocate_model_(AnnotationJob& job) const;
  void journal_job_(const AnnotationJob& job);
  void snapshot_model_(const AnnotationJob& job);
  void load_model_(AnnotationJob& job);
  std::filesystem::path model_path_(const std::string& id) const;
  std::optional<Annotation> score_one_(AnnotationJob& job, const Observation& obs);
};

}  // namespace jamaica
