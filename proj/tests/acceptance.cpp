// Release gate: eight end-to-end criteria, one [PASS]/[FAIL] line each.
// argv[1] is the command-line binary, used by the criteria that run the real
// processes (synthetic replication and crash durability). Everything else
// runs in-process against the library.

#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "jamaica/api.hpp"
#include "jamaica/ids.hpp"
#include "jamaica/mlengine.hpp"
#include "jamaica/service.hpp"
#include "jamaica/synth.hpp"
#include "jamaica/tagstore.hpp"
#include "jamaica/time.hpp"
#include "oracles.hpp"
#include "stub_broker.hpp"

namespace {

using namespace jamaica;
using nlohmann::json;

std::string g_cli;

struct Gate {
  bool ok = true;
  std::string detail;

  // Keeps the first failure; later checks still run but cannot resurrect.
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
  void note(const std::string& what) {
    if (ok) detail = what;
  }
};

double secs_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::filesystem::path scratch(const std::string& stem) {
  auto p = std::filesystem::temp_directory_path() / ("jamaica_accept_" + stem + "_" + new_ulid());
  std::filesystem::create_directories(p);
  return p;
}

int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return 0;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return 0;
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  return port;
}

// A forked `serve` process with its own data directory and log file.
struct ServeProc {
  pid_t pid = -1;
  int port = 0;

  static ServeProc start(const std::string& data_dir, int port, const std::string& log_path) {
    ServeProc p;
    p.port = port;
    p.pid = ::fork();
    if (p.pid == 0) {
      const int fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
      if (fd >= 0) {
        ::dup2(fd, 1);
        ::dup2(fd, 2);
        ::close(fd);
      }
      const std::string addr = "127.0.0.1:" + std::to_string(port);
      ::execl(g_cli.c_str(), "jamaica", "serve", "--addr", addr.c_str(), "--data-dir",
              data_dir.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    return p;
  }

  bool wait_healthy(int deadline_seconds = 15) {
    httplib::Client http("127.0.0.1", port);
    http.set_connection_timeout(1, 0);
    http.set_read_timeout(2, 0);
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::seconds(deadline_seconds);
    while (std::chrono::steady_clock::now() < deadline) {
      auto res = http.Get("/v1/health");
      if (res && res->status == 200) return true;
      int status = 0;
      if (pid > 0 && ::waitpid(pid, &status, WNOHANG) == pid) {
        pid = -1;  // serve already exited
        return false;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    return false;
  }

  void stop(int sig) {
    if (pid <= 0) return;
    ::kill(pid, sig);
    int status = 0;
    ::waitpid(pid, &status, 0);
    pid = -1;
  }

  ~ServeProc() {
    if (pid > 0) stop(SIGKILL);
  }
};

int run_cli(const std::string& args, const std::string& log_path) {
  const std::string cmd = g_cli + " " + args + " >>" + log_path + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

long vm_hwm_kb(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      long kb = 0;
      std::sscanf(line.c_str(), "VmHWM: %ld", &kb);
      return kb;
    }
  }
  return -1;
}

json jbody(const httplib::Result& res) {
  if (!res || res->body.empty()) return json();
  json j = json::parse(res->body, nullptr, false);
  return j.is_discarded() ? json() : j;
}

json range_job_spec(const std::string& domain, const std::string& anomalous_tag) {
  return {{"name", "pm10-watch"},
          {"kind", "anomaly"},
          {"query", {{"attribute", "PM10"}}},
          {"tag_domain_id", domain},
          {"detector", {{"type", "range"}, {"low", 0.0}, {"high", 50.0}}},
          {"mapping", {{"anomalous_tag_id", anomalous_tag}}}};
}

// 1. Synthetic stream replication through the real binaries: seed 42, range
// [0, 50] job, flat-out replay. Exactly the 2000 negative and 1200 high rows
// must be annotated, quickly and in modest memory.
Gate synthetic_replication() {
  Gate g;
  const auto t_start = std::chrono::steady_clock::now();
  const auto base = scratch("c1");
  const std::string log = (base / "cli.log").string();
  const std::string synth_dir = (base / "synth").string();
  const std::string data_dir = (base / "data").string();

  g.require(run_cli("synth --out " + synth_dir + " --seed 42", log) == 0, "synth run failed");
  if (!g.ok) return g;

  ServeProc serve = ServeProc::start(data_dir, free_port(), (base / "serve.log").string());
  g.require(serve.wait_healthy(), "service did not become healthy");
  if (!g.ok) return g;
  const std::string addr = "127.0.0.1:" + std::to_string(serve.port);
  httplib::Client http("127.0.0.1", serve.port);
  http.set_read_timeout(60, 0);

  auto post = [&](const std::string& path, const json& body) {
    return jbody(http.Post(path, body.dump(), "application/json"));
  };
  post("/v1/tagdomains",
       {{"name", "air-quality-levels"}, {"tags", json::array({"anomalous", "normal"})}});
  const std::string job_id =
      post("/v1/jobs", range_job_spec("air-quality-levels", "anomalous")).value("id", "");
  g.require(!job_id.empty(), "job creation failed");
  post("/v1/jobs/" + job_id + "/train", {{"samples", json::array()}});
  g.require(post("/v1/jobs/" + job_id + "/start", json::object()).value("state", "") == "running",
            "job did not reach running");
  if (!g.ok) {
    serve.stop(SIGTERM);
    return g;
  }

  const auto t_replay = std::chrono::steady_clock::now();
  const int rc = run_cli("--addr " + addr + " replay --file " + synth_dir +
                             "/stream.csv --job " + job_id + " --rate 0",
                         log);
  const double replay_s = secs_since(t_replay);
  g.require(rc == 0, "replay exited with code " + std::to_string(rc));

  std::size_t total = 0;
  std::size_t seen = 0;
  std::size_t in_band = 0;
  for (std::size_t offset = 0;; offset += 1000) {
    const json page = jbody(http.Get("/v1/annotations?tag=anomalous&limit=1000&offset=" +
                                     std::to_string(offset)));
    total = page.value("total", std::size_t{0});
    if (!page.contains("items") || page["items"].empty()) break;
    for (const auto& a : page["items"]) {
      const double v = a.value("numeric_value", 0.0);
      if (v >= 0.0 && v <= 50.0) ++in_band;
      ++seen;
    }
    if (seen >= total) break;
  }
  g.require(total == 3200, "expected 3200 anomalous annotations, found " + std::to_string(total));
  g.require(seen == total, "pagination returned " + std::to_string(seen) + " of " +
                               std::to_string(total) + " annotations");
  g.require(in_band == 0, std::to_string(in_band) + " in-band values were annotated");

  const json metrics = jbody(http.Get("/v1/metrics"));
  g.require(metrics.value("observations_ingested", std::size_t{0}) == 40000,
            "service did not ingest all 40000 stream rows");
  g.require(metrics.value("annotations_written", std::size_t{0}) == 3200,
            "annotations_written is not 3200");

  const long peak_kb = vm_hwm_kb(serve.pid);
  g.require(peak_kb > 0 && peak_kb < 512 * 1024,
            "serve peak resident memory " + std::to_string(peak_kb) + " kB exceeds 512 MB");
  g.require(replay_s < 60.0, "replay took " + std::to_string(replay_s) + " s");
  const double total_s = secs_since(t_start);

  serve.stop(SIGTERM);
  std::error_code ec;
  std::filesystem::remove_all(base, ec);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "3200/3200 out-of-band rows annotated, 0 false positives, replay %.1f s, peak %ld MB, total %.1f s",
                replay_s, peak_kb / 1024, total_s);
  g.note(buf);
  return g;
}

// 2. The fast scorer agrees with the brute-force reference to 1e-9 relative
// error on 500 randomized geometries.
Gate lof_oracle_equivalence() {
  Gate g;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260822);
  auto coord = [&rng] {
    return static_cast<double>(rng() % 2000001) / 10000.0 - 100.0;  // [-100, 100] on a grid
  };
  double worst = 0.0;
  for (int trial = 0; trial < 500 && g.ok; ++trial) {
    const std::size_t n = 20 + rng() % 181;
    const std::size_t dim = 1 + rng() % 3;
    const std::size_t k = 2 + rng() % 9;
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
      for (auto& c : p) c = coord();
    LofModel model(n, k);
    for (const auto& p : pts) model.add(p);
    model.train();
    const oracle::Lof ref(pts, k);
    for (int q = 0; q < 3; ++q) {
      std::vector<double> query(dim);
      for (auto& c : query) c = coord();
      const double got = model.score(query);
      const double want = ref.score(query);
      const double rel = std::abs(got - want) / std::max(std::abs(want), 1e-300);
      worst = std::max(worst, rel);
      char buf[120];
      std::snprintf(buf, sizeof(buf), "trial %d (n=%zu dim=%zu k=%zu): relative error %.3e",
                    trial, n, dim, k, rel);
      g.require(rel <= 1e-9, buf);
    }
  }
  const double elapsed = secs_since(t0);
  g.require(elapsed < 30.0, "equivalence sweep took " + std::to_string(elapsed) + " s");
  char buf[120];
  std::snprintf(buf, sizeof(buf), "500 cases, worst relative error %.2e, %.1f s", worst, elapsed);
  g.note(buf);
  return g;
}

// 3. On the synthetic shape (1000 training points, k=5), a single threshold
// separates all 3200 anomalies: every out-of-band score exceeds the 99th
// percentile of the in-band scores, checked over the full 40000-row stream.
Gate lof_separation() {
  Gate g;
  const auto t0 = std::chrono::steady_clock::now();
  SynthSpec spec;
  const SynthData data = generate_synth_data(spec);
  LofModel model(spec.n_train, 5);
  for (const auto& o : data.train) model.add({o.value});
  model.train();

  std::vector<double> in_band;
  in_band.reserve(data.stream.size());
  double min_anomaly = std::numeric_limits<double>::infinity();
  std::size_t anomalies = 0;
  for (const auto& o : data.stream) {
    const double s = model.score({o.value});
    if (o.value < 0.0 || o.value > 50.0) {
      min_anomaly = std::min(min_anomaly, s);
      ++anomalies;
    } else {
      in_band.push_back(s);
    }
  }
  g.require(anomalies == 3200, "stream does not contain 3200 out-of-band rows");
  std::sort(in_band.begin(), in_band.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(0.99 * static_cast<double>(in_band.size())));
  const double p99 = in_band[rank - 1];
  char buf[160];
  std::snprintf(buf, sizeof(buf), "minimum anomaly score %.4f does not clear the in-band p99 %.4f",
                min_anomaly, p99);
  g.require(min_anomaly > p99, buf);
  std::snprintf(buf, sizeof(buf),
                "all 3200 anomaly scores above in-band p99 (%.3f vs %.3f), %.1f s", min_anomaly,
                p99, secs_since(t0));
  g.note(buf);
  return g;
}

// 4. The perceptron reaches 100% training accuracy on a separable 3-class
// 2-D set within 10 epochs, and the one-example arithmetic trace is exact.
Gate classifier_convergence() {
  Gate g;
  std::mt19937_64 rng(7);
  const double centers[3][2] = {{0.0, 0.0}, {12.0, 0.0}, {0.0, 12.0}};
  const char* labels[3] = {"calm", "busy", "jammed"};
  auto jitter = [&rng] { return static_cast<double>(rng() % 4001) / 1000.0 - 2.0; };
  std::vector<LabeledExample> batch;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 100; ++i)
      batch.push_back({{centers[c][0] + jitter(), centers[c][1] + jitter()}, labels[c]});

  ClassifierModel model({labels[0], labels[1], labels[2]});
  std::size_t correct = 0;
  int epochs_used = 0;
  for (int epoch = 1; epoch <= 10; ++epoch) {
    model.train_batch(batch, 1);
    correct = 0;
    for (const auto& ex : batch)
      if (model.predict(ex.features).first == ex.label) ++correct;
    epochs_used = epoch;
    if (correct == batch.size()) break;
  }
  g.require(correct == batch.size(), "training accuracy stuck at " + std::to_string(correct) +
                                         "/300 after 10 epochs");

  // One-example trace, exact arithmetic end to end.
  ClassifierModel trace({"b", "a"});
  const auto before = trace.predict({1.0});
  g.require(before.first == "a" && before.second == 0.0,
            "untrained prediction is not the first class at margin 0");
  trace.train_batch({{{1.0}, "b"}}, 1);
  const auto after = trace.predict({1.0});
  g.require(after.first == "b", "trace prediction did not flip to the trained class");
  g.require(after.second == 4.0,
            "trace margin is " + std::to_string(after.second) + ", not exactly 4");
  const json snap = trace.snapshot();
  g.require(snap.value("classes", json()) == json::array({"a", "b"}),
            "snapshot classes are not sorted");
  const json want_weights =
      json::array({json::array({-1.0, -1.0}), json::array({1.0, 1.0})});
  g.require(snap.value("weights", json()) == want_weights, "snapshot weights are not bit-exact");

  g.note("300/300 correct after " + std::to_string(epochs_used) +
         (epochs_used == 1 ? " epoch" : " epochs") + "; one-example trace exact");
  return g;
}

// 5. Query answers equal whole-store linear scans on 200 randomized stores.
Gate store_oracle_equivalence() {
  Gate g;
  std::mt19937_64 rng(123);
  const std::int64_t base_ms = 1451606400000;
  std::size_t checks = 0;
  std::size_t total_annotations = 0;
  for (int trial = 0; trial < 200 && g.ok; ++trial) {
    TagStore store;
    std::vector<std::string> tag_ids;
    std::vector<std::string> domain_ids;
    std::map<std::string, Tag> tag_map;
    for (int d = 0; d < 2; ++d) {
      const TagDomain dom = store.create_tag_domain(
          "domain-" + std::to_string(trial) + "-" + std::to_string(d), "", {"a", "b", "c"});
      domain_ids.push_back(dom.id);
      for (const auto& tid : dom.tag_ids) {
        tag_ids.push_back(tid);
        tag_map[tid] = store.get_tag(tid);
      }
    }
    const std::vector<std::string> entities = {"e1", "e2", "e3", "e4", "e5"};
    const std::vector<std::string> attrs = {"PM10", "NO2", "noise"};

    const std::size_t n = 50 + rng() % 951;
    total_annotations += n;
    std::vector<Annotation> all;
    all.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Annotation a;
      a.id = new_ulid();
      a.entity_id = entities[rng() % entities.size()];
      a.attribute = attrs[rng() % attrs.size()];
      a.tag_id = tag_ids[rng() % tag_ids.size()];
      a.time_from = Timestamp(base_ms + static_cast<std::int64_t>(rng() % 100000));
      a.time_to = Timestamp(a.time_from.unix_ms() + static_cast<std::int64_t>(rng() % 10000));
      if (rng() % 2)
        a.location = GeoPoint{static_cast<double>(rng() % 2000) / 100.0 - 10.0,
                              static_cast<double>(rng() % 2000) / 100.0 - 10.0};
      if (rng() % 3 == 0) a.numeric_value = static_cast<double>(rng() % 1000);
      if (rng() % 4 == 0) a.confidence = static_cast<double>(rng() % 101) / 100.0;
      if (rng() % 5 == 0) a.text_value = "note-" + std::to_string(i);
      store.record_annotation(a);
      all.push_back(std::move(a));
    }

    for (int f = 0; f < 6 && g.ok; ++f) {
      AnnotationFilter filter;
      if (rng() % 3 == 0) filter.entity_id = entities[rng() % entities.size()];
      if (rng() % 3 == 0) filter.tag_id = tag_ids[rng() % tag_ids.size()];
      if (rng() % 3 == 0) filter.domain_id = domain_ids[rng() % domain_ids.size()];
      if (rng() % 2) filter.window.from = Timestamp(base_ms + static_cast<std::int64_t>(rng() % 100000));
      if (rng() % 2) {
        const std::int64_t lo = filter.window.from ? filter.window.from->unix_ms() : base_ms;
        filter.window.to = Timestamp(lo + static_cast<std::int64_t>(rng() % 60000));
      }
      if (rng() % 3 == 0)
        filter.bbox = BoundingBox{-5.0, -5.0, static_cast<double>(rng() % 11),
                                  static_cast<double>(rng() % 11)};
      std::vector<std::string> got;
      for (const auto& a : store.query_annotations(filter)) got.push_back(a.id);
      g.require(got == oracle::filter_scan(all, filter, tag_map),
                "filter query diverged from the scan oracle in trial " + std::to_string(trial));
      ++checks;
    }

    for (int q = 0; q < 2 && g.ok; ++q) {
      std::vector<ConjunctiveClause> clauses;
      const std::size_t n_clauses = 1 + rng() % 3;
      for (std::size_t ci = 0; ci < n_clauses; ++ci) {
        ConjunctiveClause c;
        c.tag_id = tag_ids[rng() % tag_ids.size()];
        if (rng() % 2) c.attribute = attrs[rng() % attrs.size()];
        clauses.push_back(std::move(c));
      }
      TimeWindow w;
      if (rng() % 2) w.from = Timestamp(base_ms + static_cast<std::int64_t>(rng() % 80000));
      if (rng() % 2) {
        const std::int64_t lo = w.from ? w.from->unix_ms() : base_ms;
        w.to = Timestamp(lo + static_cast<std::int64_t>(rng() % 50000));
      }
      std::optional<BoundingBox> area;
      if (rng() % 3 == 0) area = BoundingBox{-5.0, -5.0, 5.0, 5.0};
      g.require(store.conjunctive_entity_query(clauses, w, area) ==
                    oracle::conjunctive_scan(all, clauses, w, area),
                "conjunctive query diverged from the scan oracle in trial " +
                    std::to_string(trial));
      ++checks;
    }
  }
  g.note(std::to_string(checks) + " queries over 200 stores (" +
         std::to_string(total_annotations) + " annotations) matched the scan oracles");
  return g;
}

// 6. Full broker loop: register through the service API, push 100
// notifications from the broker side, and verify the exact annotation yield.
// Registration is idempotent and the retry schedule stays within 60 s.
Gate broker_flow() {
  Gate g;
  StubBroker broker;
  Service svc;
  ApiServer srv(svc, "127.0.0.1", 0);
  g.require(srv.start(), "service http server failed to start");
  if (!g.ok) return g;

  const TagDomain dom =
      svc.store().create_tag_domain("air-quality-levels", "", {"anomalous", "normal"});
  const AnnotationJob job = svc.jobs().create_job(range_job_spec(dom.id, dom.tag_ids[0]));
  svc.jobs().submit_training(job.id, {});
  svc.jobs().start_job(job.id);

  httplib::Client http("127.0.0.1", srv.port());
  http.set_read_timeout(30, 0);
  const json sub_body = {{"broker_url", broker.subscribe_url()},
                         {"query", {{"attribute", "PM10"}}}};
  const json sub = jbody(http.Post("/v1/subscriptions", sub_body.dump(), "application/json"));
  g.require(sub.value("status", "") == "active", "subscription did not become active");
  const json again = jbody(http.Post("/v1/subscriptions", sub_body.dump(), "application/json"));
  g.require(again.value("id", "x") == sub.value("id", "y"),
            "duplicate subscribe produced a second subscription");
  g.require(broker.request_count() == 1, "duplicate subscribe reached the broker again");
  g.require(broker.callbacks().size() == 1 &&
                broker.callbacks()[0] == srv.base_url() + "/v1/notify",
            "broker got the wrong callback url");
  if (!g.ok) return g;

  std::size_t expected = 0;
  for (int i = 0; i < 100 && g.ok; ++i) {
    const double value = (i % 5 == 0) ? 75.0 + i : 20.0 + (i % 10);
    if (value < 0.0 || value > 50.0) ++expected;
    const json push = {
        {"subscriptionId", sub.value("broker_subscription_id", "")},
        {"data",
         json::array(
             {{{"id", "urn:oc:e:flow"},
               {"type", "AirQualityObserved"},
               {"attributes",
                json::array({{{"name", "PM10"},
                              {"type", "Number"},
                              {"value", value},
                              {"timestamp",
                               Timestamp(1451606400000 + i * 1000).to_rfc3339()}}})}}})}};
    g.require(StubBroker::notify(broker.callbacks()[0], push) == 202,
              "notification " + std::to_string(i) + " was not accepted");
  }
  g.require(svc.store().annotation_count() == expected,
            "annotation count " + std::to_string(svc.store().annotation_count()) +
                " differs from the expected " + std::to_string(expected));
  AnnotationFilter by_tag;
  by_tag.tag_id = dom.tag_ids[0];
  g.require(svc.store().query_annotations(by_tag).size() == expected,
            "anomalous-tag query count is off");

  std::chrono::seconds last{0};
  for (int attempt = 1; attempt <= 200 && g.ok; ++attempt) {
    const auto d = backoff_delay(attempt);
    g.require(d >= std::chrono::seconds(1) && d <= std::chrono::seconds(60),
              "retry delay for attempt " + std::to_string(attempt) + " is outside [1s, 60s]");
    g.require(d >= last, "retry delays are not non-decreasing");
    last = d;
  }

  // A broker outage keeps the registration failed until the broker recovers.
  broker.set_failing(true);
  svc.subscriptions().set_backoff_divisor(1000.0);
  svc.subscriptions().start();
  const json down_body = {{"broker_url", broker.subscribe_url()},
                          {"query", {{"attribute", "NO2"}}}};
  const json down =
      jbody(http.Post("/v1/subscriptions", down_body.dump(), "application/json"));
  g.require(down.value("status", "") == "failed", "outage subscribe did not report failed");
  broker.set_failing(false);
  const std::string down_id = down.value("id", "");
  std::string status = "failed";
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (std::chrono::steady_clock::now() < deadline) {
    status = jbody(http.Get("/v1/subscriptions/" + down_id)).value("status", "");
    if (status == "active") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  }
  g.require(status == "active", "subscription never recovered after the outage");

  svc.subscriptions().shutdown();
  srv.stop();
  g.note("100 notifications yielded exactly " + std::to_string(expected) +
         " annotations; idempotent subscribe; retry delays capped at 60 s");
  return g;
}

// 7. Hard-kill durability: everything readable before a SIGKILL is byte-for-
// byte identical after a restart from the same data directory.
Gate crash_durability() {
  Gate g;
  const auto base = scratch("c7");
  const std::string data_dir = (base / "data").string();
  const int port = free_port();

  ServeProc first = ServeProc::start(data_dir, port, (base / "serve1.log").string());
  g.require(first.wait_healthy(), "service did not become healthy");
  if (!g.ok) return g;
  httplib::Client http("127.0.0.1", port);
  http.set_read_timeout(30, 0);
  auto post = [&](const std::string& path, const json& body) {
    return jbody(http.Post(path, body.dump(), "application/json"));
  };

  post("/v1/tagdomains",
       {{"name", "air-quality-levels"}, {"tags", json::array({"high", "normal", "low"})}});
  const std::string job_id =
      post("/v1/jobs", range_job_spec("air-quality-levels", "high")).value("id", "");
  post("/v1/jobs/" + job_id + "/train", {{"samples", json::array()}});
  g.require(post("/v1/jobs/" + job_id + "/start", json::object()).value("state", "") ==
                "running",
            "job did not reach running");

  const std::vector<std::string> tags = {"high", "normal", "low"};
  const std::vector<std::string> attrs = {"PM10", "NO2", "noise"};
  for (int i = 0; i < 50 && g.ok; ++i) {
    json a = {{"entity_id", "street:" + std::to_string(i % 7)},
              {"attribute", attrs[i % attrs.size()]},
              {"tag_id", tags[i % tags.size()]},
              {"time_from", Timestamp(1451606400000 + i * 1000).to_rfc3339()},
              {"time_to", Timestamp(1451606400000 + i * 1000 + 500).to_rfc3339()}};
    if (i % 2 == 0) a["location"] = {{"lat", 51.0 + i * 0.01}, {"lon", -0.5 + i * 0.01}};
    if (i % 3 == 0) a["numeric_value"] = i * 1.5;
    if (i % 5 == 0) a["text_value"] = "note-" + std::to_string(i);
    if (i % 4 == 0) a["confidence"] = static_cast<double>(i % 10) / 10.0;
    auto res = http.Post("/v1/annotations",
                         httplib::Headers{{"X-Annotator", "op-" + std::to_string(i % 3)}},
                         a.dump(), "application/json");
    g.require(res && res->status == 201,
              "annotation " + std::to_string(i) + " was not recorded");
  }
  if (!g.ok) {
    first.stop(SIGTERM);
    return g;
  }

  const std::vector<std::string> paths = {
      "/v1/tagdomains?limit=1000", "/v1/jobs?limit=1000", "/v1/annotations?limit=1000",
      "/v1/annotations?tag=high&limit=1000"};
  std::vector<std::string> before;
  for (const auto& p : paths) {
    auto res = http.Get(p);
    g.require(res && res->status == 200, "pre-kill read of " + p + " failed");
    before.push_back(res ? res->body : "");
  }

  first.stop(SIGKILL);

  ServeProc second = ServeProc::start(data_dir, port, (base / "serve2.log").string());
  g.require(second.wait_healthy(), "service did not come back after the kill");
  if (g.ok) {
    httplib::Client http2("127.0.0.1", port);
    http2.set_read_timeout(30, 0);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      auto res = http2.Get(paths[i]);
      g.require(res && res->status == 200, "post-restart read of " + paths[i] + " failed");
      g.require(res && res->body == before[i],
                "response for " + paths[i] + " changed across the restart");
    }
  }
  second.stop(SIGTERM);
  std::error_code ec;
  std::filesystem::remove_all(base, ec);
  g.note("domain, running job, and 50 annotations byte-identical after SIGKILL restart");
  return g;
}

// 8. Golden sweep: every route answers at least one success and one failure
// with the documented status, wire code, and body shape.
struct SweepCheck {
  Gate& g;
  int count = 0;

  void expect(const httplib::Result& res, const std::string& what, int status,
              std::initializer_list<const char*> keys = {}, const char* code = nullptr) {
    ++count;
    if (!res) {
      g.require(false, what + ": no response");
      return;
    }
    g.require(res->status == status, what + ": status " + std::to_string(res->status) +
                                         ", wanted " + std::to_string(status));
    if (res->status != status) return;
    if (status == 204) {
      g.require(res->body.empty(), what + ": 204 carried a body");
      return;
    }
    const json body = json::parse(res->body, nullptr, false);
    g.require(!body.is_discarded(), what + ": response body is not JSON");
    if (body.is_discarded()) return;
    for (const char* k : keys)
      g.require(body.contains(k), what + ": body lacks '" + std::string(k) + "'");
    if (code) {
      g.require(body.value("code", "") == code,
                what + ": code '" + body.value("code", "") + "', wanted '" + code + "'");
      g.require(body.contains("status") && body.contains("message"),
                what + ": error envelope incomplete");
    }
  }
};

Gate golden_sweep() {
  Gate g;
  StubBroker broker;
  Service svc;
  ApiServer srv(svc, "127.0.0.1", 0);
  g.require(srv.start(), "service http server failed to start");
  if (!g.ok) return g;
  httplib::Client http("127.0.0.1", srv.port());
  http.set_read_timeout(30, 0);
  SweepCheck check{g};
  auto post = [&](const std::string& path, const json& body) {
    return http.Post(path, body.dump(), "application/json");
  };

  auto domain_res = post("/v1/tagdomains", {{"name", "air-quality-levels"},
                                            {"tags", json::array({"anomalous", "normal"})}});
  check.expect(domain_res, "create domain", 201, {"id", "name", "tags"});
  check.expect(post("/v1/tagdomains", json::object()), "create domain without a name", 422, {},
               "invalid_config");
  check.expect(http.Get("/v1/tagdomains"), "list domains", 200,
               {"items", "total", "offset", "limit"});
  check.expect(http.Get("/v1/tagdomains?limit=x"), "list domains with a bad limit", 422, {},
               "malformed_filter");
  check.expect(http.Get("/v1/tagdomains/air-quality-levels"), "fetch domain", 200,
               {"id", "tags"});
  check.expect(http.Get("/v1/tagdomains/ghost"), "fetch unknown domain", 404, {},
               "unknown_domain");
  check.expect(post("/v1/tagdomains/air-quality-levels/tags", {{"name", "dangerous"}}),
               "add tag", 201, {"id", "name", "domain_id"});
  check.expect(post("/v1/tagdomains/air-quality-levels/tags", {{"name", "dangerous"}}),
               "add duplicate tag", 409, {}, "duplicate_name");
  check.expect(http.Get("/v1/tagdomains/air-quality-levels/suggest?seeds=anomalous"), "suggest",
               200, {"items"});
  check.expect(http.Get("/v1/tagdomains/air-quality-levels/suggest?seeds=ghost"),
               "suggest with an unknown seed", 404, {}, "unknown_tag");
  check.expect(post("/v1/tags/relate", {{"tag_a", "anomalous"}, {"tag_b", "dangerous"}}),
               "relate tags", 204);
  check.expect(post("/v1/tags/relate", {{"tag_a", "anomalous"}, {"tag_b", "anomalous"}}),
               "relate a tag to itself", 422, {}, "self_relation");

  const json job_spec = range_job_spec("air-quality-levels", "anomalous");
  auto job_res = post("/v1/jobs", job_spec);
  check.expect(job_res, "create job", 201, {"id", "state", "detector", "mapping"});
  const std::string job_id = jbody(job_res).value("id", "");
  check.expect(post("/v1/jobs", {{"name", "broken"}}), "create job without a kind", 422, {},
               "invalid_config");
  check.expect(http.Get("/v1/jobs"), "list jobs", 200, {"items", "total"});
  check.expect(http.Get("/v1/jobs?offset=x"), "list jobs with a bad offset", 422, {},
               "malformed_filter");
  check.expect(http.Get("/v1/jobs/" + job_id), "fetch job", 200, {"id", "state"});
  check.expect(http.Get("/v1/jobs/ghost"), "fetch unknown job", 404, {}, "unknown_job");
  json renamed = job_spec;
  renamed["name"] = "pm10-watch-renamed";
  check.expect(http.Put("/v1/jobs/" + job_id, renamed.dump(), "application/json"), "update job",
               200, {"name"});
  check.expect(http.Put("/v1/jobs/ghost", renamed.dump(), "application/json"),
               "update unknown job", 404, {}, "unknown_job");
  check.expect(post("/v1/jobs/" + job_id + "/train", {{"samples", json::array()}}), "train job",
               200, {"state"});
  check.expect(post("/v1/jobs/" + job_id + "/train", json::array()), "train with a bad body",
               422, {}, "invalid_config");
  check.expect(post("/v1/jobs/" + job_id + "/start", json::object()), "start job", 200,
               {"state"});
  check.expect(post("/v1/jobs/" + job_id + "/start", json::object()), "start a running job", 409,
               {}, "wrong_state");

  check.expect(post("/v1/observations",
                    {{"data",
                      json::array(
                          {{{"id", "urn:oc:e:9"},
                            {"type", "AirQualityObserved"},
                            {"attributes", json::array({{{"name", "PM10"},
                                                         {"type", "Number"},
                                                         {"value", 75.0}}})}}})}}),
               "submit observations", 202, {"accepted", "skipped"});
  check.expect(http.Post("/v1/observations", "{oops", "application/json"),
               "submit broken observations", 400, {}, "malformed_json");
  check.expect(post("/v1/notify",
                    {{"data",
                      json::array(
                          {{{"id", "urn:oc:e:9"},
                            {"type", "AirQualityObserved"},
                            {"attributes", json::array({{{"name", "PM10"},
                                                         {"type", "Number"},
                                                         {"value", 80.0}}})}}})}}),
               "broker notification", 202, {"accepted", "skipped"});
  check.expect(post("/v1/notify", {{"data", 5}}), "broker notification with bad data", 422, {},
               "schema_violation");

  check.expect(post("/v1/jobs/" + job_id + "/stop", json::object()), "stop job", 200, {"state"});
  check.expect(post("/v1/jobs/" + job_id + "/stop", json::object()), "stop a stopped job", 409,
               {}, "wrong_state");

  const std::string extra_id = jbody(post("/v1/jobs", job_spec)).value("id", "");
  check.expect(http.Delete("/v1/jobs/" + extra_id), "delete job", 204);
  check.expect(http.Delete("/v1/jobs/" + extra_id), "delete the job twice", 404, {},
               "unknown_job");

  const json ann = {{"entity_id", "street:A"},
                    {"attribute", "PM10"},
                    {"tag_id", "anomalous"},
                    {"time_from", "2016-01-01T00:00:00.000Z"}};
  auto ann_res = post("/v1/annotations", ann);
  check.expect(ann_res, "write annotation", 201, {"id", "entity_id", "tag_id", "annotator"});
  const std::string ann_id = jbody(ann_res).value("id", "");
  json bad_ann = ann;
  bad_ann.erase("entity_id");
  check.expect(post("/v1/annotations", bad_ann), "write annotation missing its entity", 422, {},
               "schema_violation");
  check.expect(http.Get("/v1/annotations"), "list annotations", 200, {"items", "total"});
  check.expect(http.Get("/v1/annotations?bbox=3,2,1,0"), "list with an inverted bbox", 422, {},
               "malformed_filter");
  check.expect(http.Get("/v1/annotations/" + ann_id), "fetch annotation", 200,
               {"id", "time_from", "time_to"});
  check.expect(http.Get("/v1/annotations/" + std::string(26, '0')), "fetch unknown annotation",
               404, {}, "unknown_tag");
  check.expect(http.Get("/v1/annotations/entities?tags=anomalous"), "conjunctive entity query",
               200, {"items", "total"});
  check.expect(http.Get("/v1/annotations/entities"), "conjunctive query without tags", 422, {},
               "malformed_filter");

  auto sub_res = post("/v1/subscriptions", {{"broker_url", broker.subscribe_url()},
                                            {"query", {{"attribute", "PM10"}}}});
  check.expect(sub_res, "create subscription", 201, {"id", "status", "callback_url"});
  const std::string sub_id = jbody(sub_res).value("id", "");
  check.expect(post("/v1/subscriptions", {{"broker_url", broker.subscribe_url()}}),
               "create subscription without a query", 422, {}, "invalid_config");
  check.expect(http.Get("/v1/subscriptions"), "list subscriptions", 200, {"items", "total"});
  check.expect(http.Get("/v1/subscriptions?limit=x"), "list subscriptions with a bad limit", 422,
               {}, "malformed_filter");
  check.expect(http.Get("/v1/subscriptions/" + sub_id), "fetch subscription", 200,
               {"id", "status"});
  check.expect(http.Get("/v1/subscriptions/ghost"), "fetch unknown subscription", 404, {},
               "unknown_subscription");
  check.expect(http.Delete("/v1/subscriptions/" + sub_id), "delete subscription", 204);
  check.expect(http.Delete("/v1/subscriptions/" + sub_id), "delete the subscription twice", 404,
               {}, "unknown_subscription");

  check.expect(http.Get("/v1/health"), "health", 200, {"status"});
  check.expect(http.Post("/v1/health", "", "application/json"), "health with the wrong method",
               404, {}, "not_found");
  check.expect(http.Get("/v1/metrics"), "metrics", 200,
               {"observations_ingested", "observations_skipped", "annotations_written", "jobs"});
  check.expect(http.Post("/v1/metrics", "", "application/json"), "metrics with the wrong method",
               404, {}, "not_found");

  srv.stop();
  g.note(std::to_string(check.count) + " golden checks across every route");
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <cli-binary>\n", argv[0]);
    return 2;
  }
  g_cli = argv[1];
  if (!std::filesystem::exists(g_cli)) {
    std::fprintf(stderr, "cli binary '%s' does not exist\n", g_cli.c_str());
    return 2;
  }

  struct Criterion {
    const char* title;
    Gate (*run)();
  };
  const Criterion criteria[] = {
      {"synthetic stream replication", synthetic_replication},
      {"lof oracle equivalence", lof_oracle_equivalence},
      {"lof anomaly separation", lof_separation},
      {"classifier convergence and exact trace", classifier_convergence},
      {"store query oracle equivalence", store_oracle_equivalence},
      {"broker subscribe and notify flow", broker_flow},
      {"crash durability", crash_durability},
      {"http golden sweep", golden_sweep},
  };

  bool all = true;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    Gate gate;
    try {
      gate = criteria[i].run();
    } catch (const std::exception& e) {
      gate.ok = false;
      gate.detail = std::string("unhandled exception: ") + e.what();
    }
    std::printf("[%s] %zu. %s: %s\n", gate.ok ? "PASS" : "FAIL", i + 1, criteria[i].title,
                gate.detail.empty() ? (gate.ok ? "ok" : "failed") : gate.detail.c_str());
    std::fflush(stdout);
    all = all && gate.ok;
  }
  return all ? 0 : 1;
}
