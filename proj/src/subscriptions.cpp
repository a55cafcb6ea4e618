#include "jamaica/subscriptions.hpp"

#include <algorithm>

#include <httplib.h>

#include "jamaica/errors.hpp"
#include "jamaica/ids.hpp"

namespace jamaica {

namespace {

// "http://host:port/some/path" -> {"http://host:port", "/some/path"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return {url, "/"};
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

nlohmann::json subscription_to_json(const Subscription& s) {
  nlohmann::json j{{"id", s.id},
                   {"broker_url", s.broker_url},
                   {"query", s.query.to_json()},
                   {"callback_url", s.callback_url},
                   {"status", s.status}};
  if (s.last_error) j["last_error"] = *s.last_error;
  if (s.broker_subscription_id) j["broker_subscription_id"] = *s.broker_subscription_id;
  return j;
}

Subscription subscription_from_json(const nlohmann::json& j) {
  Subscription s;
  s.id = j.at("id").get<std::string>();
  s.broker_url = j.at("broker_url").get<std::string>();
  s.query = QueryContext::from_json(j.at("query"));
  s.callback_url = j.at("callback_url").get<std::string>();
  s.status = j.at("status").get<std::string>();
  if (j.contains("last_error")) s.last_error = j["last_error"].get<std::string>();
  if (j.contains("broker_subscription_id"))
    s.broker_subscription_id = j["broker_subscription_id"].get<std::string>();
  return s;
}

std::chrono::seconds backoff_delay(int attempt) {
  const int a = std::clamp(attempt, 1, 7);
  return std::chrono::seconds(std::min(60L, 1L << (a - 1)));
}

SubscriptionManager::SubscriptionManager(Journal* journal) : journal_(journal) {}

SubscriptionManager::~SubscriptionManager() { shutdown(); }

void SubscriptionManager::set_callback_url(std::string url) {
  std::lock_guard lock(mu_);
  callback_url_ = std::move(url);
}

void SubscriptionManager::set_backoff_divisor(double divisor) {
  std::lock_guard lock(mu_);
  backoff_divisor_ = divisor > 0.0 ? divisor : 1.0;
}

bool SubscriptionManager::attempt_(Subscription& sub) const {
  const auto [base, path] = split_url(sub.broker_url);
  httplib::Client client(base);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(5, 0);

  nlohmann::json entity{{"idPattern", sub.query.id_pattern}};
  if (sub.query.entity_type) entity["type"] = *sub.query.entity_type;
  const nlohmann::json body{{"entities", nlohmann::json::array({entity})},
                            {"attributes", nlohmann::json::array({sub.query.attribute})},
                            {"callback", sub.callback_url}};

  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    sub.status = "failed";
    sub.last_error = "cannot reach broker at " + sub.broker_url;
    return false;
  }
  if (res->status < 200 || res->status >= 300) {
    sub.status = "failed";
    sub.last_error = "broker returned status " + std::to_string(res->status);
    return false;
  }
  nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("subscriptionId") ||
      !reply["subscriptionId"].is_string()) {
    sub.status = "failed";
    sub.last_error = "broker reply lacks a subscriptionId";
    return false;
  }
  sub.broker_subscription_id = reply["subscriptionId"].get<std::string>();
  sub.status = "active";
  sub.last_error.reset();
  return true;
}

void SubscriptionManager::schedule_locked_(const std::string& id, int attempts) {
  const auto wait = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(backoff_delay(attempts).count() / backoff_divisor_));
  retries_[id] = {std::chrono::steady_clock::now() + wait, attempts};
  cv_.notify_all();
}

Subscription SubscriptionManager::subscribe(const std::string& broker_url,
                                            const QueryContext& query) {
  query.validate();
  const std::string query_key = query.to_json().dump();
  Subscription sub;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, existing] : subs_) {
      (void)id;
      if (existing.broker_url == broker_url && existing.query.to_json().dump() == query_key)
        return existing;
    }
    sub.id = new_ulid();
    sub.broker_url = broker_url;
    sub.query = query;
    sub.callback_url = callback_url_;
    subs_[sub.id] = sub;
  }

  const bool ok = attempt_(sub);

  std::lock_guard lock(mu_);
  auto it = subs_.find(sub.id);
  if (it == subs_.end()) return sub;  // deleted while the request was in flight
  it->second = sub;
  if (!ok) schedule_locked_(sub.id, 1);
  if (journal_) journal_->append("put_subscription", subscription_to_json(sub));
  return sub;
}

Subscription SubscriptionManager::get_subscription(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = subs_.find(id);
  if (it == subs_.end()) raise(Errc::unknown_subscription, "no subscription with id '" + id + "'");
  return it->second;
}

std::vector<Subscription> SubscriptionManager::list_subscriptions() const {
  std::lock_guard lock(mu_);
  std::vector<Subscription> out;
  for (const auto& [id, s] : subs_) {
    (void)id;
    out.push_back(s);
  }
  return out;
}

void SubscriptionManager::delete_subscription(const std::string& id) {
  std::lock_guard lock(mu_);
  if (subs_.erase(id) == 0)
    raise(Errc::unknown_subscription, "no subscription with id '" + id + "'");
  retries_.erase(id);
  if (journal_) journal_->append("delete_subscription", {{"id", id}});
  cv_.notify_all();
}

void SubscriptionManager::apply_journal(const std::string& op, const nlohmann::json& data) {
  std::lock_guard lock(mu_);
  if (op == "put_subscription") {
    Subscription s = subscription_from_json(data);
    subs_[s.id] = std::move(s);
  } else if (op == "delete_subscription") {
    subs_.erase(data.at("id").get<std::string>());
  } else {
    raise(Errc::journal_corrupt, "unknown subscription journal op '" + op + "'");
  }
}

void SubscriptionManager::start() {
  std::lock_guard lock(mu_);
  for (const auto& [id, sub] : subs_)
    if (sub.status != "active" && !retries_.count(id)) schedule_locked_(id, 1);
  if (worker_running_) return;
  worker_running_ = true;
  stopping_ = false;
  worker_ = std::thread([this] { run_(); });
}

void SubscriptionManager::shutdown() {
  {
    std::lock_guard lock(mu_);
    if (!worker_running_) return;
    stopping_ = true;
    cv_.notify_all();
  }
  worker_.join();
  std::lock_guard lock(mu_);
  worker_running_ = false;
}

void SubscriptionManager::run_() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    if (retries_.empty()) {
      cv_.wait(lock, [this] { return stopping_ || !retries_.empty(); });
      continue;
    }
    auto next = std::min_element(retries_.begin(), retries_.end(),
                                 [](const auto& a, const auto& b) {
                                   return a.second.due < b.second.due;
                                 });
    const std::string id = next->first;
    const auto due = next->second.due;
    if (cv_.wait_until(lock, due, [this, &id, due] {
          auto it = retries_.find(id);
          return stopping_ || it == retries_.end() || it->second.due != due;
        }))
      continue;  // deleted, rescheduled, or shutting down; re-evaluate

    auto rit = retries_.find(id);
    auto sit = subs_.find(id);
    if (rit == retries_.end() || sit == subs_.end()) continue;
    const int attempts = rit->second.attempts;
    Subscription sub = sit->second;

    lock.unlock();
    const bool ok = attempt_(sub);
    lock.lock();

    sit = subs_.find(id);
    if (sit == subs_.end()) continue;  // deleted while retrying
    sit->second = sub;
    if (ok)
      retries_.erase(id);
    else
      schedule_locked_(id, attempts + 1);
    if (journal_) journal_->append("put_subscription", subscription_to_json(sub));
  }
}

}  // namespace jamaica
