// jamaica: operator CLI for the annotation service. `serve` runs the service
// itself; every other subcommand talks to a running instance over HTTP or
// works on archive files locally.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "jamaica/api.hpp"
#include "jamaica/errors.hpp"
#include "jamaica/ingest.hpp"
#include "jamaica/report.hpp"
#include "jamaica/service.hpp"
#include "jamaica/synth.hpp"

using nlohmann::json;

namespace {

// Exit codes, pinned for scripting:
//   0 success, 1 runtime failure, 2 serve bind failure,
//   3 journal corruption, 4 service unreachable, 5 job not running,
//   >= 100 argument errors (CLI11 defaults).
constexpr int kExitBind = 2;
constexpr int kExitJournal = 3;
constexpr int kExitConnect = 4;
constexpr int kExitNotRunning = 5;

jamaica::ApiServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json read_json_file(const std::string& path) {
  std::string text;
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      std::cerr << "cannot open " << path << "\n";
      std::exit(1);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    std::cerr << path << ": not valid JSON\n";
    std::exit(1);
  }
  return j;
}

// Thin HTTP client for one service instance. Transport failures exit with
// kExitConnect; HTTP-level errors are returned to the caller.
class Remote {
 public:
  explicit Remote(const std::string& addr) : base_("http://" + addr), client_(base_) {
    client_.set_connection_timeout(5, 0);
    client_.set_read_timeout(60, 0);
  }

  const std::string& base() const { return base_; }

  struct Reply {
    int status = 0;
    json body;
  };

  Reply get(const std::string& path) { return finish_(client_.Get(path)); }
  Reply del(const std::string& path) { return finish_(client_.Delete(path)); }
  Reply post(const std::string& path, const json& body) {
    return finish_(client_.Post(path, body.dump(), "application/json"));
  }
  Reply put(const std::string& path, const json& body) {
    return finish_(client_.Put(path, body.dump(), "application/json"));
  }

  // Unwraps a reply, treating any status outside [200, 300) as fatal.
  json expect_ok(const Reply& r) {
    if (r.status < 200 || r.status >= 300) {
      std::cerr << error_text(r) << "\n";
      std::exit(1);
    }
    return r.body;
  }

  std::string error_text(const Reply& r) {
    if (r.body.is_object() && r.body.contains("message"))
      return "HTTP " + std::to_string(r.status) + ": " + r.body["message"].get<std::string>();
    return "HTTP " + std::to_string(r.status);
  }

 private:
  std::string base_;
  httplib::Client client_;

  Reply finish_(httplib::Result res) {
    if (!res) {
      std::cerr << "cannot reach service at " << base_ << " (" << httplib::to_string(res.error())
                << ")\n";
      std::exit(kExitConnect);
    }
    Reply r;
    r.status = res->status;
    if (!res->body.empty()) {
      r.body = json::parse(res->body, nullptr, false);
      if (r.body.is_discarded()) r.body = json();
    }
    return r;
  }
};

// Splits "host:port"; exits with the bind failure code on nonsense, since a
// malformed address can never be bound.
std::pair<std::string, int> split_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    std::cerr << "address must look like host:port, got '" << addr << "'\n";
    std::exit(kExitBind);
  }
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    std::cerr << "address must end in a numeric port, got '" << addr << "'\n";
    std::exit(kExitBind);
  }
  return {addr.substr(0, colon), port};
}

int cmd_serve(const std::string& addr, const std::string& data_dir) {
  std::unique_ptr<jamaica::Service> service;
  try {
    service = std::make_unique<jamaica::Service>(data_dir);
  } catch (const jamaica::Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == jamaica::Errc::journal_corrupt ? kExitJournal : 1;
  }

  const auto [host, port] = split_addr(addr);
  jamaica::ApiServer server(*service, host, port);
  if (!server.bind()) {
    std::cerr << "cannot bind " << addr << "\n";
    return kExitBind;
  }
  service->subscriptions().start();

  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  std::cout << "listening on http://" << host << ":" << server.port() << " (data dir " << data_dir
            << ")" << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}

int cmd_synth(const jamaica::SynthSpec& spec, const std::string& out_dir) {
  const auto result = jamaica::write_synth(spec, out_dir);
  print_json({{"train_path", result.train_path.string()},
              {"stream_path", result.stream_path.string()},
              {"train_rows", result.train_rows},
              {"stream_rows", result.stream_rows},
              {"negative_rows", result.negative_rows},
              {"high_rows", result.high_rows}});
  return 0;
}

// Tag totals for one domain, via per-tag count queries. Used to report
// per-tag annotation deltas around a replay.
std::map<std::string, std::size_t> tag_totals(Remote& remote, const json& domain) {
  std::map<std::string, std::size_t> totals;
  for (const auto& tag : domain["tags"]) {
    const auto reply = remote.get("/v1/annotations?tag=" + tag["id"].get<std::string>() + "&limit=1");
    totals[tag["name"].get<std::string>()] = remote.expect_ok(reply)["total"].get<std::size_t>();
  }
  return totals;
}

int cmd_replay(const std::string& addr, const std::string& file, const std::string& job_id,
               double rate, std::optional<double> time_compression) {
  Remote remote(addr);

  const auto job_reply = remote.get("/v1/jobs/" + job_id);
  if (job_reply.status == 404) {
    std::cerr << remote.error_text(job_reply) << "\n";
    return kExitNotRunning;
  }
  const json job = remote.expect_ok(job_reply);
  if (job["state"].get<std::string>() != "running") {
    std::cerr << "job " << job_id << " is " << job["state"].get<std::string>()
              << ", not running\n";
    return kExitNotRunning;
  }

  auto rows = jamaica::read_observations_csv(file);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.timestamp.unix_ms() < b.timestamp.unix_ms();
  });

  const json domain =
      remote.expect_ok(remote.get("/v1/tagdomains/" + job["tag_domain_id"].get<std::string>()));
  const auto before = tag_totals(remote, domain);

  // One ordered upload stream: indexes are handed out in order and at most
  // kWorkers requests are in flight at once.
  constexpr std::size_t kWorkers = 8;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> accepted{0};
  std::atomic<std::size_t> skipped{0};
  std::atomic<int> failure{0};
  std::mutex failure_mu;
  std::string failure_text;

  const auto t0 = std::chrono::steady_clock::now();
  auto worker = [&]() {
    httplib::Client client(remote.base());
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(60, 0);
    for (;;) {
      if (failure.load() != 0) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= rows.size()) return;
      if (rate > 0.0) {
        const auto due = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(static_cast<double>(i) / rate));
        std::this_thread::sleep_until(due);
      } else if (time_compression) {
        const double elapsed_s =
            static_cast<double>(rows[i].timestamp.unix_ms() - rows.front().timestamp.unix_ms()) /
            1000.0 / *time_compression;
        const auto due = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(elapsed_s));
        std::this_thread::sleep_until(due);
      }
      const json body = {{"data", json::array({jamaica::observation_to_entity_json(rows[i])})}};
      auto res = client.Post("/v1/observations", body.dump(), "application/json");
      if (!res) {
        int expected = 0;
        if (failure.compare_exchange_strong(expected, kExitConnect)) {
          std::lock_guard lock(failure_mu);
          failure_text = "lost connection to " + remote.base() + " (" +
                         httplib::to_string(res.error()) + ")";
        }
        return;
      }
      if (res->status != 202) {
        int expected = 0;
        if (failure.compare_exchange_strong(expected, 1)) {
          std::lock_guard lock(failure_mu);
          failure_text = "row " + std::to_string(i + 1) + " rejected with HTTP " +
                         std::to_string(res->status) + ": " + res->body;
        }
        return;
      }
      const json reply = json::parse(res->body, nullptr, false);
      if (reply.is_object()) {
        accepted += reply.value("accepted", std::size_t{0});
        skipped += reply.value("skipped", std::size_t{0});
      }
    }
  };

  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < std::min(kWorkers, std::max<std::size_t>(rows.size(), 1)); ++i)
    pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  const double duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (failure.load() != 0) {
    std::cerr << failure_text << "\n";
    return failure.load();
  }

  json by_tag = json::object();
  const auto after = tag_totals(remote, domain);
  for (const auto& [name, total] : after) {
    const auto it = before.find(name);
    by_tag[name] = total - (it == before.end() ? 0 : it->second);
  }

  print_json({{"observations", rows.size()},
              {"accepted", accepted.load()},
              {"skipped", skipped.load()},
              {"duration_seconds", duration},
              {"annotations_by_tag", by_tag}});
  return 0;
}

struct ReportSource {
  std::string file;
  std::string entity;
  std::string tag;
  std::string domain;
  std::string from;
  std::string to;
};

// Values either from an archive file or from the service's annotations
// (numeric_value of every match; annotations without one are skipped).
std::vector<double> report_values(const std::string& addr, const ReportSource& src) {
  std::vector<double> values;
  if (!src.file.empty()) {
    for (const auto& obs : jamaica::read_observations_csv(src.file)) values.push_back(obs.value);
    return values;
  }
  if (src.entity.empty() && src.tag.empty() && src.domain.empty()) {
    std::cerr << "report needs --file or at least one of --entity/--tag/--domain\n";
    std::exit(1);
  }
  Remote remote(addr);
  std::string query;
  auto add = [&query](const std::string& key, const std::string& value) {
    if (value.empty()) return;
    query += (query.empty() ? "?" : "&") + key + "=" + httplib::detail::encode_query_param(value);
  };
  add("entity", src.entity);
  add("tag", src.tag);
  add("domain", src.domain);
  add("from", src.from);
  add("to", src.to);
  std::size_t offset = 0;
  for (;;) {
    const std::string page_query =
        query + (query.empty() ? "?" : "&") + "limit=1000&offset=" + std::to_string(offset);
    const json page = remote.expect_ok(remote.get("/v1/annotations" + page_query));
    for (const auto& item : page["items"])
      if (item.contains("numeric_value")) values.push_back(item["numeric_value"].get<double>());
    offset += page["items"].size();
    if (offset >= page["total"].get<std::size_t>() || page["items"].empty()) break;
  }
  return values;
}

int cmd_report(const std::string& kind, const std::string& addr, const ReportSource& src,
               std::size_t bins, std::optional<jamaica::Band> range,
               std::optional<jamaica::Band> band) {
  const auto values = report_values(addr, src);
  if (kind == "summary") {
    const auto s = jamaica::build_summary(values, band);
    json out = {{"count", s.count},   {"min", s.min},       {"max", s.max},
                {"mean", s.mean},     {"stddev", s.stddev}, {"below_band", s.below_band},
                {"above_band", s.above_band}};
    if (!band) {
      out.erase("below_band");
      out.erase("above_band");
    }
    print_json(out);
    return 0;
  }
  const auto h = jamaica::build_histogram(values, bins, range, band);
  std::cout << jamaica::histogram_to_csv(h);
  std::cout << "# total=" << h.total;
  if (band) std::cout << " below_band=" << h.below_band << " above_band=" << h.above_band;
  std::cout << "\n";
  return 0;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"jamaica: smart-city data annotation service"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string addr = "127.0.0.1:8080";
  std::string data_dir = "./data";
  app.add_option("--addr", addr, "service address as host:port")
      ->envname("JAMAICA_ADDR")
      ->capture_default_str();
  app.add_option("--data-dir", data_dir, "journal and model directory (serve only)")
      ->envname("JAMAICA_DATA_DIR")
      ->capture_default_str();

  auto* serve = app.add_subcommand("serve", "run the annotation service");

  jamaica::SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic train/stream archive pair");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n-train", spec.n_train, "training rows")->capture_default_str();
  synth->add_option("--n-stream", spec.n_stream, "stream rows")->capture_default_str();
  synth->add_option("--band-low", spec.band_low, "nominal band low edge")->capture_default_str();
  synth->add_option("--band-high", spec.band_high, "nominal band high edge")->capture_default_str();
  synth->add_option("--frac-negative", spec.frac_negative, "fraction of negative stream rows")
      ->capture_default_str();
  synth->add_option("--frac-high", spec.frac_high, "fraction of above-limit stream rows")
      ->capture_default_str();
  synth->add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  synth->add_option("--limit", spec.limit, "danger limit; high rows land in (limit, limit+50]")
      ->capture_default_str();
  synth->add_option("--entity", spec.entity_id, "entity id for every row")->capture_default_str();
  synth->add_option("--type", spec.entity_type, "entity type")->capture_default_str();
  synth->add_option("--attribute", spec.attribute, "attribute name")->capture_default_str();
  synth->add_option("--start-ms", spec.start_unix_ms, "first stream timestamp, unix ms")
      ->capture_default_str();
  synth->add_option("--step-ms", spec.step_ms, "spacing between rows, ms")->capture_default_str();

  std::string replay_file;
  std::string replay_job;
  double replay_rate = 0.0;
  std::optional<double> replay_compression;
  auto* replay = app.add_subcommand("replay", "stream an archive through a running job");
  replay->add_option("--file", replay_file, "observation archive (CSV)")->required();
  replay->add_option("--job", replay_job, "job id that must be running")->required();
  replay->add_option("--rate", replay_rate, "observations per second; 0 = as fast as possible")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  replay
      ->add_option("--time-compression", replay_compression,
                   "pace rows by archive timestamps sped up this many times; ignored with --rate")
      ->check(CLI::PositiveNumber);

  ReportSource rsrc;
  std::size_t bins = 20;
  std::optional<double> band_low, band_high, range_low, range_high;
  auto* report = app.add_subcommand("report", "histogram or summary of values");
  std::string report_kind;
  report->add_option("kind", report_kind, "histogram or summary")
      ->required()
      ->check(CLI::IsMember({"histogram", "summary"}));
  report->add_option("--file", rsrc.file, "read values from an archive instead of the service");
  report->add_option("--entity", rsrc.entity, "filter annotations by entity id");
  report->add_option("--tag", rsrc.tag, "filter annotations by tag id or name");
  report->add_option("--domain", rsrc.domain, "filter annotations by domain id or name");
  report->add_option("--from", rsrc.from, "window start, RFC 3339");
  report->add_option("--to", rsrc.to, "window end, RFC 3339");
  report->add_option("--bins", bins, "histogram bin count")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}))
      ->capture_default_str();
  report->add_option("--band-low", band_low, "band low edge for below/above totals");
  report->add_option("--band-high", band_high, "band high edge for below/above totals");
  report->add_option("--range-low", range_low, "histogram range low edge");
  report->add_option("--range-high", range_high, "histogram range high edge");

  auto* job = app.add_subcommand("job", "manage annotation jobs");
  job->require_subcommand(1);
  std::string job_file;
  std::string job_id;
  auto* job_create = job->add_subcommand("create", "create a job from a JSON spec");
  job_create->add_option("-f,--file", job_file, "job spec JSON ('-' for stdin)")->required();
  auto* job_train = job->add_subcommand("train", "submit a training batch");
  job_train->add_option("--job", job_id, "job id")->required();
  job_train->add_option("-f,--file", job_file, "samples JSON ('-' for stdin)")->required();
  auto* job_start = job->add_subcommand("start", "start a job");
  job_start->add_option("--job", job_id, "job id")->required();
  auto* job_stop = job->add_subcommand("stop", "stop a job");
  job_stop->add_option("--job", job_id, "job id")->required();
  auto* job_list = job->add_subcommand("list", "list jobs");
  auto* job_delete = job->add_subcommand("delete", "delete a job");
  job_delete->add_option("--job", job_id, "job id")->required();

  auto* domain = app.add_subcommand("domain", "manage tag domains");
  domain->require_subcommand(1);
  std::string domain_file;
  auto* domain_create = domain->add_subcommand("create", "create a tag domain from a JSON spec");
  domain_create->add_option("-f,--file", domain_file, "domain JSON ('-' for stdin)")->required();

  auto* annotations = app.add_subcommand("annotations", "query annotations");
  annotations->require_subcommand(1);
  ReportSource asrc;
  std::string bbox;
  std::size_t a_limit = 100;
  std::size_t a_offset = 0;
  auto* aq = annotations->add_subcommand("query", "list annotations matching filters");
  aq->add_option("--entity", asrc.entity, "entity id");
  aq->add_option("--tag", asrc.tag, "tag id or name");
  aq->add_option("--domain", asrc.domain, "domain id or name");
  aq->add_option("--from", asrc.from, "window start, RFC 3339");
  aq->add_option("--to", asrc.to, "window end, RFC 3339");
  aq->add_option("--bbox", bbox, "minLon,minLat,maxLon,maxLat");
  aq->add_option("--limit", a_limit, "page size")->capture_default_str();
  aq->add_option("--offset", a_offset, "page offset")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (serve->parsed()) return cmd_serve(addr, data_dir);
  if (synth->parsed()) return cmd_synth(spec, synth_out);
  if (replay->parsed())
    return cmd_replay(addr, replay_file, replay_job, replay_rate, replay_compression);
  if (report->parsed()) {
    std::optional<jamaica::Band> band, range;
    if (band_low && band_high) band = jamaica::Band{*band_low, *band_high};
    if (range_low && range_high) range = jamaica::Band{*range_low, *range_high};
    return cmd_report(report_kind, addr, rsrc, bins, range, band);
  }

  if (job->parsed()) {
    Remote remote(addr);
    if (job_create->parsed())
      print_json(remote.expect_ok(remote.post("/v1/jobs", read_json_file(job_file))));
    else if (job_train->parsed()) {
      json body = read_json_file(job_file);
      if (body.is_array()) body = json{{"samples", std::move(body)}};
      print_json(remote.expect_ok(remote.post("/v1/jobs/" + job_id + "/train", body)));
    } else if (job_start->parsed())
      print_json(remote.expect_ok(remote.post("/v1/jobs/" + job_id + "/start", json::object())));
    else if (job_stop->parsed())
      print_json(remote.expect_ok(remote.post("/v1/jobs/" + job_id + "/stop", json::object())));
    else if (job_list->parsed())
      print_json(remote.expect_ok(remote.get("/v1/jobs?limit=1000")));
    else if (job_delete->parsed())
      remote.expect_ok(remote.del("/v1/jobs/" + job_id));
    return 0;
  }

  if (domain->parsed()) {
    Remote remote(addr);
    if (domain_create->parsed())
      print_json(remote.expect_ok(remote.post("/v1/tagdomains", read_json_file(domain_file))));
    return 0;
  }

  if (annotations->parsed()) {
    Remote remote(addr);
    std::string query;
    auto add = [&query](const std::string& key, const std::string& value) {
      if (value.empty()) return;
      query += (query.empty() ? "?" : "&") + key + "=" + httplib::detail::encode_query_param(value);
    };
    add("entity", asrc.entity);
    add("tag", asrc.tag);
    add("domain", asrc.domain);
    add("from", asrc.from);
    add("to", asrc.to);
    add("bbox", bbox);
    add("limit", std::to_string(a_limit));
    add("offset", std::to_string(a_offset));
    print_json(remote.expect_ok(remote.get("/v1/annotations" + query)));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const jamaica::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
