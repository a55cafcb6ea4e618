#include "jamaica/jobs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "jamaica/errors.hpp"
#include "jamaica/glob.hpp"
#include "jamaica/ids.hpp"

namespace jamaica {

namespace {

constexpr std::size_t kQuantileRangeMinimum = 10;
constexpr std::size_t kSnapshotEvery = 1000;

}  // namespace

void QueryContext::validate() const {
  if (attribute.empty()) raise(Errc::invalid_config, "query attribute must be non-empty");
  if (id_pattern.empty()) raise(Errc::invalid_config, "query id_pattern must be non-empty");
  if (entity_type && entity_type->empty())
    raise(Errc::invalid_config, "query entity_type must be non-empty when given");
}

bool QueryContext::matches(const Observation& obs) const {
  if (entity_type && *entity_type != obs.entity_type) return false;
  if (!glob_match(id_pattern, obs.entity_id)) return false;
  return attribute == obs.attribute;
}

nlohmann::json QueryContext::to_json() const {
  nlohmann::json j{{"id_pattern", id_pattern}, {"attribute", attribute}};
  if (entity_type) j["entity_type"] = *entity_type;
  return j;
}

QueryContext QueryContext::from_json(const nlohmann::json& j) {
  if (!j.is_object()) raise(Errc::invalid_config, "query must be a JSON object");
  QueryContext q;
  if (j.contains("entity_type")) q.entity_type = j["entity_type"].get<std::string>();
  q.id_pattern = j.value("id_pattern", std::string{"*"});
  q.attribute = j.value("attribute", std::string{});
  q.validate();
  return q;
}

std::string to_string(JobKind k) {
  return k == JobKind::anomaly ? "anomaly" : "classification";
}

std::string to_string(JobState s) {
  switch (s) {
    case JobState::created: return "created";
    case JobState::trained: return "trained";
    case JobState::running: return "running";
    case JobState::stopped: return "stopped";
  }
  return "created";
}

namespace {

JobKind kind_from_string(const std::string& s) {
  if (s == "anomaly") return JobKind::anomaly;
  if (s == "classification") return JobKind::classification;
  raise(Errc::invalid_config, "job kind must be 'anomaly' or 'classification'");
}

JobState state_from_string(const std::string& s) {
  if (s == "created") return JobState::created;
  if (s == "trained") return JobState::trained;
  if (s == "running") return JobState::running;
  if (s == "stopped") return JobState::stopped;
  raise(Errc::invalid_config, "unknown job state '" + s + "'");
}

nlohmann::json detector_to_json(const DetectorConfig& d) {
  if (const auto* lof = std::get_if<LofConfig>(&d)) {
    return {{"type", "lof"},
            {"k", lof->k},
            {"capacity", lof->capacity},
            {"threshold", lof->threshold},
            {"feedback", lof->feedback}};
  }
  if (const auto* range = std::get_if<RangeConfig>(&d)) {
    nlohmann::json j{{"type", "range"}};
    if (range->low) j["low"] = *range->low;
    if (range->high) j["high"] = *range->high;
    if (range->q_low) j["q_low"] = *range->q_low;
    if (range->q_high) j["q_high"] = *range->q_high;
    return j;
  }
  const auto& cls = std::get<ClassifierConfig>(d);
  return {{"type", "classifier"}, {"epochs", cls.epochs}};
}

DetectorConfig detector_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    raise(Errc::invalid_config, "detector needs a string 'type' field");
  const std::string type = j["type"].get<std::string>();
  if (type == "lof") {
    LofConfig c;
    c.k = j.value("k", std::size_t{5});
    c.capacity = j.value("capacity", std::size_t{1000});
    c.threshold = j.value("threshold", 1.5);
    c.feedback = j.value("feedback", false);
    if (c.k < 1) raise(Errc::invalid_config, "lof k must be at least 1");
    if (c.capacity <= c.k) raise(Errc::invalid_config, "lof capacity must exceed k");
    if (!(c.threshold > 0.0) || !std::isfinite(c.threshold))
      raise(Errc::invalid_config, "lof threshold must be a positive number");
    return c;
  }
  if (type == "range") {
    RangeConfig c;
    if (j.contains("low")) c.low = j["low"].get<double>();
    if (j.contains("high")) c.high = j["high"].get<double>();
    if (j.contains("q_low")) c.q_low = j["q_low"].get<double>();
    if (j.contains("q_high")) c.q_high = j["q_high"].get<double>();
    const bool explicit_band = c.low.has_value() || c.high.has_value();
    const bool learned_band = c.q_low.has_value() || c.q_high.has_value();
    if (explicit_band == learned_band)
      raise(Errc::invalid_config, "range detector takes either low/high or q_low/q_high");
    if (explicit_band) {
      if (!c.low || !c.high) raise(Errc::invalid_config, "range detector needs both low and high");
      if (!std::isfinite(*c.low) || !std::isfinite(*c.high) || !(*c.low < *c.high))
        raise(Errc::invalid_config, "range detector needs finite low < high");
    } else {
      if (!c.q_low || !c.q_high)
        raise(Errc::invalid_config, "range detector needs both q_low and q_high");
      if (!(*c.q_low >= 0.0 && *c.q_low < *c.q_high && *c.q_high <= 1.0))
        raise(Errc::invalid_config, "quantiles must satisfy 0 <= q_low < q_high <= 1");
    }
    return c;
  }
  if (type == "classifier") {
    ClassifierConfig c;
    c.epochs = j.value("epochs", 5);
    if (c.epochs < 1) raise(Errc::invalid_config, "classifier epochs must be at least 1");
    return c;
  }
  raise(Errc::invalid_config, "unknown detector type '" + type + "'");
}

nlohmann::json mapping_to_json(const AnnotationJob& job) {
  if (job.kind == JobKind::classification) {
    return {{"class_to_tag", job.mapping.class_to_tag}};
  }
  nlohmann::json j{{"anomalous_tag_id", job.mapping.anomalous_tag_id},
                   {"emit_normal", job.mapping.emit_normal}};
  if (job.mapping.normal_tag_id) j["normal_tag_id"] = *job.mapping.normal_tag_id;
  return j;
}

}  // namespace

nlohmann::json job_to_json(const AnnotationJob& job) {
  return {{"id", job.id},
          {"name", job.name},
          {"kind", to_string(job.kind)},
          {"query", job.query.to_json()},
          {"tag_domain_id", job.tag_domain_id},
          {"detector", detector_to_json(job.detector)},
          {"mapping", mapping_to_json(job)},
          {"state", to_string(job.state)},
          {"trained_count", job.trained_count},
          {"processed_count", job.processed_count},
          {"annotated_count", job.annotated_count},
          {"error_count", job.error_count}};
}

JobManager::JobManager(TagStore& store, Journal* journal) : store_(store), journal_(journal) {}

void JobManager::set_models_dir(const std::filesystem::path& dir) {
  models_dir_ = dir;
  if (!models_dir_.empty()) std::filesystem::create_directories(models_dir_);
}

AnnotationJob& JobManager::job_or_throw_(const std::string& id) {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) raise(Errc::unknown_job, "no job with id '" + id + "'");
  return it->second;
}

const AnnotationJob& JobManager::job_or_throw_(const std::string& id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) raise(Errc::unknown_job, "no job with id '" + id + "'");
  return it->second;
}

AnnotationJob JobManager::parse_spec_(const nlohmann::json& spec) const {
  if (!spec.is_object()) raise(Errc::invalid_config, "job spec must be a JSON object");
  AnnotationJob job;
  job.name = spec.value("name", std::string{});
  if (job.name.empty()) raise(Errc::invalid_config, "job name must be non-empty");
  if (!spec.contains("kind") || !spec["kind"].is_string())
    raise(Errc::invalid_config, "job spec needs a string 'kind'");
  job.kind = kind_from_string(spec["kind"].get<std::string>());
  if (!spec.contains("query")) raise(Errc::invalid_config, "job spec needs a 'query'");
  job.query = QueryContext::from_json(spec["query"]);
  if (!spec.contains("tag_domain_id") || !spec["tag_domain_id"].is_string())
    raise(Errc::invalid_config, "job spec needs a string 'tag_domain_id'");
  job.tag_domain_id = store_.resolve_domain(spec["tag_domain_id"].get<std::string>());
  if (!spec.contains("detector")) raise(Errc::invalid_config, "job spec needs a 'detector'");
  job.detector = detector_from_json(spec["detector"]);

  const bool classifier_detector = std::holds_alternative<ClassifierConfig>(job.detector);
  if ((job.kind == JobKind::classification) != classifier_detector)
    raise(Errc::invalid_config,
          "classification jobs take a classifier detector, anomaly jobs an lof or range one");

  if (!spec.contains("mapping") || !spec["mapping"].is_object())
    raise(Errc::invalid_config, "job spec needs a 'mapping' object");
  const auto& mj = spec["mapping"];
  if (job.kind == JobKind::anomaly) {
    if (!mj.contains("anomalous_tag_id") || !mj["anomalous_tag_id"].is_string())
      raise(Errc::invalid_config, "anomaly mapping needs a string 'anomalous_tag_id'");
    job.mapping.anomalous_tag_id = store_.resolve_tag(mj["anomalous_tag_id"].get<std::string>());
    if (mj.contains("normal_tag_id"))
      job.mapping.normal_tag_id = store_.resolve_tag(mj["normal_tag_id"].get<std::string>());
    job.mapping.emit_normal = mj.value("emit_normal", false);
    if (job.mapping.emit_normal && !job.mapping.normal_tag_id)
      raise(Errc::invalid_config, "emit_normal requires a normal_tag_id");
  } else {
    if (!mj.contains("class_to_tag") || !mj["class_to_tag"].is_object() ||
        mj["class_to_tag"].empty())
      raise(Errc::invalid_config, "classification mapping needs a non-empty 'class_to_tag' map");
    if (mj["class_to_tag"].size() < 2)
      raise(Errc::invalid_config, "classification jobs need at least two classes");
    for (const auto& [cls, tag] : mj["class_to_tag"].items()) {
      if (cls.empty() || !tag.is_string())
        raise(Errc::invalid_config, "class_to_tag maps class names to tag ids");
      job.mapping.class_to_tag[cls] = store_.resolve_tag(tag.get<std::string>());
    }
  }
  validate_spec_(job);
  return job;
}

void JobManager::validate_spec_(const AnnotationJob& job) const {
  auto check_in_domain = [&](const std::string& tag_id) {
    const Tag tag = store_.get_tag(tag_id);
    if (tag.domain_id != job.tag_domain_id)
      raise(Errc::unknown_tag,
            "tag '" + tag.name + "' does not belong to the job's tag domain");
  };
  if (job.kind == JobKind::anomaly) {
    check_in_domain(job.mapping.anomalous_tag_id);
    if (job.mapping.normal_tag_id) check_in_domain(*job.mapping.normal_tag_id);
  } else {
    for (const auto& [cls, tag_id] : job.mapping.class_to_tag) {
      (void)cls;
      check_in_domain(tag_id);
    }
  }
}

void JobManager::allocate_model_(AnnotationJob& job) const {
  job.lof.reset();
  job.range.reset();
  job.classifier.reset();
  job.range_values.clear();
  if (const auto* lof = std::get_if<LofConfig>(&job.detector)) {
    job.lof.emplace(lof->capacity, lof->k);
  } else if (const auto* range = std::get_if<RangeConfig>(&job.detector)) {
    if (!range->learned()) job.range = RangeModel::explicit_range(*range->low, *range->high);
  } else {
    std::vector<std::string> classes;
    for (const auto& [cls, tag] : job.mapping.class_to_tag) {
      (void)tag;
      classes.push_back(cls);
    }
    job.classifier.emplace(std::move(classes));
  }
}

void JobManager::journal_job_(const AnnotationJob& job) {
  if (journal_) journal_->append("put_job", job_to_json(job));
}

std::filesystem::path JobManager::model_path_(const std::string& id) const {
  return models_dir_ / (id + ".json");
}

void JobManager::snapshot_model_(const AnnotationJob& job) {
  if (models_dir_.empty()) return;
  nlohmann::json j{{"job_id", job.id}};
  if (job.lof) j["model"] = job.lof->snapshot();
  else if (job.range) j["model"] = job.range->snapshot();
  else if (job.classifier) j["model"] = job.classifier->snapshot();
  else j["model"] = nullptr;
  if (const auto* range = std::get_if<RangeConfig>(&job.detector); range && range->learned())
    j["range_values"] = job.range_values;

  const auto path = model_path_(job.id);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  std::ofstream out(tmp, std::ios::trunc);
  out << j.dump() << '\n';
  out.close();
  std::filesystem::rename(tmp, path);
}

void JobManager::load_model_(AnnotationJob& job) {
  if (models_dir_.empty()) return;
  std::ifstream in(model_path_(job.id));
  if (!in) return;  // nothing snapshotted yet; the allocated blank model stands
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) return;
  if (j.contains("range_values")) job.range_values = j["range_values"].get<std::vector<double>>();
  const auto& mj = j["model"];
  if (mj.is_null()) return;
  const std::string type = mj.value("type", std::string{});
  if (type == "lof" && std::holds_alternative<LofConfig>(job.detector))
    job.lof = LofModel::restore(mj);
  else if (type == "range" && std::holds_alternative<RangeConfig>(job.detector))
    job.range = RangeModel::restore(mj);
  else if (type == "classifier" && std::holds_alternative<ClassifierConfig>(job.detector))
    job.classifier = ClassifierModel::restore(mj);
}

void JobManager::load_models() {
  std::unique_lock lock(mu_);
  for (auto& [id, job] : jobs_) {
    (void)id;
    load_model_(job);
  }
}

namespace {

bool minimum_met(const AnnotationJob& job) {
  if (job.lof) return job.lof->size() > job.lof->k();
  if (const auto* range = std::get_if<RangeConfig>(&job.detector); range && range->learned())
    return job.range_values.size() >= kQuantileRangeMinimum;
  return true;  // explicit range and classifiers have no minimum
}

}  // namespace

AnnotationJob JobManager::create_job(const nlohmann::json& spec) {
  std::unique_lock lock(mu_);
  AnnotationJob job = parse_spec_(spec);
  job.id = new_ulid();
  job.state = JobState::created;
  allocate_model_(job);
  journal_job_(job);
  snapshot_model_(job);
  return jobs_[job.id] = std::move(job);
}

AnnotationJob JobManager::get_job(const std::string& id) const {
  std::shared_lock lock(mu_);
  return job_or_throw_(id);
}

std::vector<AnnotationJob> JobManager::list_jobs() const {
  std::shared_lock lock(mu_);
  std::vector<AnnotationJob> out;
  for (const auto& [id, job] : jobs_) {
    (void)id;
    out.push_back(job);
  }
  return out;
}

AnnotationJob JobManager::update_job(const std::string& id, const nlohmann::json& spec) {
  std::unique_lock lock(mu_);
  AnnotationJob& job = job_or_throw_(id);
  if (job.state == JobState::running)
    raise(Errc::wrong_state, "stop the job before updating it");
  AnnotationJob next = parse_spec_(spec);
  next.id = job.id;
  next.processed_count = job.processed_count;
  next.annotated_count = job.annotated_count;
  next.error_count = job.error_count;

  const bool model_reset = detector_to_json(next.detector) != detector_to_json(job.detector) ||
                           next.tag_domain_id != job.tag_domain_id;
  if (model_reset) {
    next.state = JobState::created;
    next.trained_count = 0;
    allocate_model_(next);
  } else {
    next.state = job.state;
    next.trained_count = job.trained_count;
    next.lof = std::move(job.lof);
    next.range = std::move(job.range);
    next.classifier = std::move(job.classifier);
    next.range_values = std::move(job.range_values);
  }
  job = std::move(next);
  journal_job_(job);
  snapshot_model_(job);
  return job;
}

void JobManager::delete_job(const std::string& id) {
  std::unique_lock lock(mu_);
  job_or_throw_(id);
  jobs_.erase(id);
  if (journal_) journal_->append("delete_job", {{"id", id}});
  if (!models_dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove(model_path_(id), ec);
  }
}

AnnotationJob JobManager::submit_training(const std::string& id,
                                          const std::vector<TrainingSample>& samples) {
  std::unique_lock lock(mu_);
  AnnotationJob& job = job_or_throw_(id);
  if (job.state == JobState::running)
    raise(Errc::wrong_state, "stop the job before training it");

  if (job.kind == JobKind::classification) {
    std::vector<LabeledExample> batch;
    batch.reserve(samples.size());
    for (const auto& s : samples) {
      if (!s.label) raise(Errc::missing_labels, "classification training samples need labels");
      batch.push_back({{s.value}, *s.label});
    }
    const auto& cfg = std::get<ClassifierConfig>(job.detector);
    job.classifier->train_batch(batch, cfg.epochs);
  } else if (job.lof) {
    for (const auto& s : samples) job.lof->add({s.value});
    if (job.lof->size() > job.lof->k()) job.lof->train();
  } else {
    const auto& cfg = std::get<RangeConfig>(job.detector);
    if (cfg.learned()) {
      for (const auto& s : samples) {
        if (!std::isfinite(s.value))
          raise(Errc::non_finite_feature, "training values must be finite");
        job.range_values.push_back(s.value);
      }
      if (job.range_values.size() >= kQuantileRangeMinimum)
        job.range = RangeModel::fit(job.range_values, *cfg.q_low, *cfg.q_high);
    }
    // Explicit ranges take no training; the submission still drives the
    // created -> trained transition below.
  }

  job.trained_count += samples.size();
  if (job.state == JobState::created && minimum_met(job)) job.state = JobState::trained;
  journal_job_(job);
  snapshot_model_(job);
  return job;
}

AnnotationJob JobManager::start_job(const std::string& id) {
  std::unique_lock lock(mu_);
  AnnotationJob& job = job_or_throw_(id);
  if (job.state != JobState::trained && job.state != JobState::stopped)
    raise(Errc::wrong_state,
          "job is " + to_string(job.state) + "; only trained or stopped jobs start");
  job.state = JobState::running;
  journal_job_(job);
  snapshot_model_(job);
  return job;
}

AnnotationJob JobManager::stop_job(const std::string& id) {
  std::unique_lock lock(mu_);
  AnnotationJob& job = job_or_throw_(id);
  if (job.state != JobState::running)
    raise(Errc::wrong_state, "job is " + to_string(job.state) + "; only running jobs stop");
  job.state = JobState::stopped;
  journal_job_(job);
  snapshot_model_(job);
  return job;
}

std::vector<AnnotationJob> JobManager::match_jobs(const Observation& obs) const {
  std::shared_lock lock(mu_);
  std::vector<AnnotationJob> out;
  for (const auto& [id, job] : jobs_) {
    (void)id;
    if (job.state == JobState::running && job.query.matches(obs)) out.push_back(job);
  }
  return out;
}

std::optional<Annotation> JobManager::score_one_(AnnotationJob& job, const Observation& obs) {
  std::string tag_id;
  double confidence = 0.0;

  if (job.kind == JobKind::classification) {
    const auto [label, margin] = job.classifier->predict({obs.value});
    tag_id = job.mapping.class_to_tag.at(label);
    confidence = 1.0 - std::exp(-margin);
  } else if (job.lof) {
    const auto& cfg = std::get<LofConfig>(job.detector);
    const double score = job.lof->score({obs.value});
    const bool anomalous = score > cfg.threshold;
    confidence = std::min(1.0, score / (2.0 * cfg.threshold));
    if (!anomalous && cfg.feedback) {
      job.lof->add({obs.value});
      job.lof->train();
    }
    if (anomalous) {
      tag_id = job.mapping.anomalous_tag_id;
    } else if (job.mapping.emit_normal) {
      tag_id = *job.mapping.normal_tag_id;
    } else {
      return std::nullopt;
    }
  } else {
    if (!job.range) raise(Errc::insufficient_training, "range detector has not been fitted");
    if (!std::isfinite(obs.value))
      raise(Errc::non_finite_feature, "observation value must be finite");
    const double score = job.range->score(obs.value);
    const bool anomalous = score > 0.0;
    confidence = anomalous ? 1.0 : 0.0;
    if (anomalous) {
      tag_id = job.mapping.anomalous_tag_id;
    } else if (job.mapping.emit_normal) {
      tag_id = *job.mapping.normal_tag_id;
    } else {
      return std::nullopt;
    }
  }

  Annotation a;
  a.entity_id = obs.entity_id;
  a.attribute = obs.attribute;
  a.tag_id = tag_id;
  a.time_from = obs.timestamp;
  a.time_to = obs.timestamp;
  a.location = obs.location;
  a.numeric_value = obs.value;
  a.confidence = confidence;
  a.annotator = {Annotator::Kind::job, job.id};
  return a;
}

std::vector<Annotation> JobManager::handle_observation(const Observation& obs) {
  std::unique_lock lock(mu_);
  std::vector<Annotation> out;
  for (auto& [id, job] : jobs_) {
    (void)id;
    if (job.state != JobState::running || !job.query.matches(obs)) continue;
    job.processed_count += 1;
    try {
      if (auto annotation = score_one_(job, obs)) {
        annotation->id = store_.record_annotation(*annotation);
        job.annotated_count += 1;
        out.push_back(*annotation);
      }
    } catch (const Error&) {
      job.error_count += 1;
    }
    journal_job_(job);
    if (job.processed_count % kSnapshotEvery == 0) snapshot_model_(job);
  }
  return out;
}

void JobManager::apply_journal(const std::string& op, const nlohmann::json& data) {
  std::unique_lock lock(mu_);
  if (op == "put_job") {
    AnnotationJob job = parse_spec_(data);
    job.id = data.at("id").get<std::string>();
    job.state = state_from_string(data.at("state").get<std::string>());
    job.trained_count = data.at("trained_count").get<std::size_t>();
    job.processed_count = data.at("processed_count").get<std::size_t>();
    job.annotated_count = data.at("annotated_count").get<std::size_t>();
    job.error_count = data.at("error_count").get<std::size_t>();
    auto it = jobs_.find(job.id);
    if (it != jobs_.end() &&
        detector_to_json(it->second.detector) == detector_to_json(job.detector)) {
      // Later records for the same job carry counter updates; the model
      // object survives and is reloaded separately in load_models().
      job.lof = std::move(it->second.lof);
      job.range = std::move(it->second.range);
      job.classifier = std::move(it->second.classifier);
      job.range_values = std::move(it->second.range_values);
    } else {
      allocate_model_(job);
    }
    jobs_[job.id] = std::move(job);
  } else if (op == "delete_job") {
    jobs_.erase(data.at("id").get<std::string>());
  } else {
    raise(Errc::journal_corrupt, "unknown job journal op '" + op + "'");
  }
}

}  // namespace jamaica
