#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "jamaica/ingest.hpp"
#include "jamaica/jobs.hpp"
#include "jamaica/journal.hpp"
#include "jamaica/subscriptions.hpp"
#include "jamaica/tagstore.hpp"

namespace jamaica {

struct Metrics {
  std::size_t observations_ingested = 0;
  std::size_t observations_skipped = 0;
};

// Wires the journal, tag store, job manager, and subscription manager into
// one annotation service instance. With a data_dir the journal is replayed on
// construction and every mutation is persisted; without one everything stays
// in memory.
class Service {
 public:
  Service();
  explicit Service(const std::filesystem::path& data_dir);
  ~Service();

  TagStore& store() { return store_; }
  JobManager& jobs() { return jobs_; }
  SubscriptionManager& subscriptions() { return subs_; }
  Journal* journal() { return journal_.get(); }

  // Parses an NGSI-lite body and dispatches every observation to the running
  // jobs. All-or-nothing: a body that fails to parse dispatches nothing.
  // Returns {accepted, skipped}.
  std::pair<std::size_t, std::size_t> ingest_body(const std::string& body);
  // Routes one observation; returns the tag ids of the annotations it caused.
  std::vector<std::string> dispatch(const Observation& obs);
  // In-process archive replay; the report's per-tag counts are keyed by tag
  // name where resolvable.
  ReplayReport replay_file(const ReplaySpec& spec);

  Metrics metrics() const;
  nlohmann::json metrics_json() const;
  bool healthy() const;

 private:
  std::unique_ptr<Journal> journal_;
  TagStore store_;
  JobManager jobs_;
  SubscriptionManager subs_;
  mutable std::mutex metrics_mu_;
  Metrics metrics_;

  void journal_metrics_();
};

}  // namespace jamaica
