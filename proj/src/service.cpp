#include "jamaica/service.hpp"

#include "jamaica/errors.hpp"

namespace jamaica {

Service::Service() : store_(nullptr), jobs_(store_, nullptr), subs_(nullptr) {}

Service::Service(const std::filesystem::path& data_dir)
    : journal_(std::make_unique<Journal>(data_dir)),
      store_(journal_.get()),
      jobs_(store_, journal_.get()),
      subs_(journal_.get()) {
  jobs_.set_models_dir(data_dir / "models");
  journal_->replay([this](const std::string& op, const nlohmann::json& data) {
    if (op == "create_domain" || op == "put_tag" || op == "relate_tags" ||
        op == "put_annotation") {
      store_.apply_journal(op, data);
    } else if (op == "put_job" || op == "delete_job") {
      jobs_.apply_journal(op, data);
    } else if (op == "put_subscription" || op == "delete_subscription") {
      subs_.apply_journal(op, data);
    } else if (op == "put_metrics") {
      metrics_.observations_ingested = data.at("observations_ingested").get<std::size_t>();
      metrics_.observations_skipped = data.at("observations_skipped").get<std::size_t>();
    } else {
      raise(Errc::journal_corrupt, "unknown journal op '" + op + "'");
    }
  });
  jobs_.load_models();
}

Service::~Service() { subs_.shutdown(); }

void Service::journal_metrics_() {
  if (!journal_) return;
  nlohmann::json data;
  {
    std::lock_guard lock(metrics_mu_);
    data = {{"observations_ingested", metrics_.observations_ingested},
            {"observations_skipped", metrics_.observations_skipped}};
  }
  journal_->append("put_metrics", std::move(data));
}

std::vector<std::string> Service::dispatch(const Observation& obs) {
  const auto annotations = jobs_.handle_observation(obs);
  {
    std::lock_guard lock(metrics_mu_);
    metrics_.observations_ingested += 1;
  }
  journal_metrics_();
  std::vector<std::string> tags;
  tags.reserve(annotations.size());
  for (const auto& a : annotations) tags.push_back(a.tag_id);
  return tags;
}

std::pair<std::size_t, std::size_t> Service::ingest_body(const std::string& body) {
  const ParseResult parsed = parse_notification(body, Timestamp::now());
  for (const auto& obs : parsed.observations) dispatch(obs);
  if (parsed.skipped > 0) {
    {
      std::lock_guard lock(metrics_mu_);
      metrics_.observations_skipped += parsed.skipped;
    }
    journal_metrics_();
  }
  return {parsed.observations.size(), parsed.skipped};
}

ReplayReport Service::replay_file(const ReplaySpec& spec) {
  ReplayReport report = replay(spec, [this](const Observation& obs) { return dispatch(obs); });
  std::map<std::string, std::size_t> by_name;
  for (const auto& [tag_id, count] : report.annotations_by_tag) {
    try {
      by_name[store_.get_tag(tag_id).name] += count;
    } catch (const Error&) {
      by_name[tag_id] += count;
    }
  }
  report.annotations_by_tag = std::move(by_name);
  return report;
}

Metrics Service::metrics() const {
  std::lock_guard lock(metrics_mu_);
  return metrics_;
}

nlohmann::json Service::metrics_json() const {
  Metrics m = metrics();
  nlohmann::json jobs = nlohmann::json::object();
  for (const auto& job : jobs_.list_jobs()) {
    jobs[job.id] = {{"processed_count", job.processed_count},
                    {"annotated_count", job.annotated_count},
                    // processed observations that produced no annotation
                    // (suppressed in-band results, mostly)
                    {"skipped_count",
                     job.processed_count - job.annotated_count - job.error_count},
                    {"error_count", job.error_count},
                    {"trained_count", job.trained_count},
                    {"state", to_string(job.state)}};
  }
  return {{"observations_ingested", m.observations_ingested},
          {"observations_skipped", m.observations_skipped},
          {"annotations_written", store_.annotation_count()},
          {"jobs", jobs}};
}

bool Service::healthy() const { return journal_ ? journal_->writable() : true; }

}  // namespace jamaica
