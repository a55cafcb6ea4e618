#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "jamaica/jobs.hpp"
#include "jamaica/journal.hpp"

namespace jamaica {

struct Subscription {
  std::string id;
  std::string broker_url;
  QueryContext query;
  std::string callback_url;
  std::string status = "pending";  // pending | active | failed
  std::optional<std::string> last_error;
  std::optional<std::string> broker_subscription_id;
};

nlohmann::json subscription_to_json(const Subscription& s);
Subscription subscription_from_json(const nlohmann::json& j);

// Retry schedule: 1s, 2s, 4s, ... capped at 60s. attempt counts from 1.
std::chrono::seconds backoff_delay(int attempt);

// Registers this service with external context brokers and keeps retrying
// failed registrations in the background until they succeed or are deleted.
class SubscriptionManager {
 public:
  explicit SubscriptionManager(Journal* journal);
  ~SubscriptionManager();

  void set_callback_url(std::string url);
  // Test hook: divides the real wait before each retry while leaving the
  // schedule (and the 60s cap) itself untouched.
  void set_backoff_divisor(double divisor);

  Subscription subscribe(const std::string& broker_url, const QueryContext& query);
  Subscription get_subscription(const std::string& id) const;
  std::vector<Subscription> list_subscriptions() const;
  void delete_subscription(const std::string& id);

  void apply_journal(const std::string& op, const nlohmann::json& data);
  // Launches the retry worker and schedules restored non-active
  // subscriptions; idempotent.
  void start();
  void shutdown();

 private:
  struct Retry {
    std::chrono::steady_clock::time_point due;
    int attempts = 0;
  };

  Journal* journal_;
  std::string callback_url_ = "http://127.0.0.1:8080/v1/notify";
  double backoff_divisor_ = 1.0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Subscription> subs_;
  std::map<std::string, Retry> retries_;
  std::thread worker_;
  bool worker_running_ = false;
  bool stopping_ = false;

  bool attempt_(Subscription& sub) const;  // network call; call without mu_ held
  void schedule_locked_(const std::string& id, int attempts);
  void run_();
};

}  // namespace jamaica
