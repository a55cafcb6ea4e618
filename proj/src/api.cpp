#include "jamaica/api.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <limits>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "jamaica/errors.hpp"

namespace jamaica {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  const int status = errc_http_status(e.code());
  send_json(res, status,
            {{"status", status}, {"code", std::string(errc_code(e.code()))}, {"message", e.what()}});
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler wrap(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, Error(Errc::internal, std::string("unexpected failure: ") + e.what()));
    }
  };
}

json parse_body(const httplib::Request& req) {
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) raise(Errc::malformed_json, "request body is not valid JSON");
  return j;
}

std::size_t parse_count_param(const httplib::Request& req, const char* name, std::size_t fallback,
                              std::size_t max) {
  if (!req.has_param(name)) return fallback;
  const std::string raw = req.get_param_value(name);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc{} || ptr != raw.data() + raw.size())
    raise(Errc::malformed_filter, std::string(name) + " must be a non-negative integer");
  return std::min(v, max);
}

json paginate(const std::vector<json>& items, const httplib::Request& req) {
  const std::size_t limit = parse_count_param(req, "limit", 100, 1000);
  const std::size_t offset =
      parse_count_param(req, "offset", 0, std::numeric_limits<std::size_t>::max());
  json page_items = json::array();
  for (std::size_t i = offset; i < items.size() && page_items.size() < limit; ++i)
    page_items.push_back(items[i]);
  return {{"items", std::move(page_items)},
          {"total", items.size()},
          {"offset", offset},
          {"limit", limit}};
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    if (comma == std::string::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    if (comma > start) out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

TimeWindow window_from_params(const httplib::Request& req) {
  TimeWindow w;
  if (req.has_param("from")) w.from = Timestamp::parse(req.get_param_value("from"));
  if (req.has_param("to")) w.to = Timestamp::parse(req.get_param_value("to"));
  w.validate();
  return w;
}

json domain_response(TagStore& store, const TagDomain& d) {
  json tags = json::array();
  for (const auto& tid : d.tag_ids) tags.push_back(tag_to_json(store.get_tag(tid)));
  return {{"id", d.id}, {"name", d.name}, {"description", d.description}, {"tags", std::move(tags)}};
}

std::vector<TrainingSample> samples_from_json(const json& body) {
  if (!body.is_object() || !body.contains("samples") || !body["samples"].is_array())
    raise(Errc::invalid_config, "train body needs a 'samples' array");
  std::vector<TrainingSample> samples;
  for (const auto& sj : body["samples"]) {
    if (!sj.is_object() || !sj.contains("value") || !sj["value"].is_number())
      raise(Errc::invalid_config, "every sample needs a numeric 'value'");
    TrainingSample s;
    s.value = sj["value"].get<double>();
    if (sj.contains("timestamp")) s.timestamp = Timestamp::parse(sj["timestamp"].get<std::string>());
    if (sj.contains("label")) {
      if (!sj["label"].is_string()) raise(Errc::invalid_config, "sample labels must be strings");
      s.label = sj["label"].get<std::string>();
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace

ApiServer::ApiServer(Service& service, std::string host, int port)
    : service_(service),
      host_(std::move(host)),
      port_(port),
      server_(std::make_unique<httplib::Server>()) {
  // SO_REUSEADDR only: restarts can reclaim a TIME_WAIT port, but binding a
  // port another process is listening on must fail (the default options add
  // SO_REUSEPORT, which would let it succeed).
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  route_();
}

ApiServer::~ApiServer() { stop(); }

std::string ApiServer::base_url() const {
  const std::string host = host_ == "0.0.0.0" ? "127.0.0.1" : host_;
  return "http://" + host + ":" + std::to_string(port_);
}

bool ApiServer::bind() {
  if (port_ == 0) {
    const int assigned = server_->bind_to_any_port(host_);
    if (assigned <= 0) return false;
    port_ = assigned;
  } else if (!server_->bind_to_port(host_, port_)) {
    return false;
  }
  service_.subscriptions().set_callback_url(base_url() + "/v1/notify");
  return true;
}

void ApiServer::listen() { server_->listen_after_bind(); }

bool ApiServer::start() {
  if (!bind()) return false;
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return true;
}

void ApiServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void ApiServer::route_() {
  auto& s = *server_;

  // Unmatched routes get the same error envelope as everything else. The
  // handler fires on every >= 400 response, so it must not clobber bodies the
  // route handlers already wrote.
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const std::string code = res.status == 404   ? "not_found"
                               : res.status == 400 ? "bad_request"
                                                   : "http_error";
      send_json(res, res.status,
                {{"status", res.status}, {"code", code}, {"message", "no matching route"}});
    }
    return httplib::Server::HandlerResponse::Handled;
  });

  // Tag domains and tags.
  s.Post("/v1/tagdomains", wrap([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.is_object() || !body.contains("name") || !body["name"].is_string())
             raise(Errc::invalid_config, "domain body needs a string 'name'");
           std::vector<std::string> tag_names;
           if (body.contains("tags")) {
             if (!body["tags"].is_array())
               raise(Errc::invalid_config, "'tags' must be an array of names");
             for (const auto& t : body["tags"]) {
               if (!t.is_string()) raise(Errc::invalid_config, "'tags' must be an array of names");
               tag_names.push_back(t.get<std::string>());
             }
           }
           const TagDomain d = service_.store().create_tag_domain(
               body["name"].get<std::string>(), body.value("description", std::string{}),
               tag_names);
           res.set_header("Location", "/v1/tagdomains/" + d.id);
           send_json(res, 201, domain_response(service_.store(), d));
         }));

  s.Get("/v1/tagdomains", wrap([this](const httplib::Request& req, httplib::Response& res) {
          std::vector<json> items;
          for (const auto& d : service_.store().list_domains())
            items.push_back(domain_response(service_.store(), d));
          send_json(res, 200, paginate(items, req));
        }));

  s.Get("/v1/tagdomains/:id/suggest",
        wrap([this](const httplib::Request& req, httplib::Response& res) {
          auto& store = service_.store();
          const std::string domain_id = store.resolve_domain(req.path_params.at("id"));
          std::vector<std::string> seeds;
          for (const auto& seed : split_csv(req.get_param_value("seeds")))
            seeds.push_back(store.resolve_tag(seed));
          json items = json::array();
          for (const auto& suggestion : store.suggest_tags(domain_id, seeds))
            items.push_back(tag_to_json(suggestion.tag));
          send_json(res, 200, {{"items", std::move(items)}});
        }));

  s.Get("/v1/tagdomains/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
          auto& store = service_.store();
          const TagDomain d = store.get_domain(store.resolve_domain(req.path_params.at("id")));
          send_json(res, 200, domain_response(store, d));
        }));

  s.Post("/v1/tagdomains/:id/tags",
         wrap([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.is_object() || !body.contains("name") || !body["name"].is_string())
             raise(Errc::invalid_config, "tag body needs a string 'name'");
           auto& store = service_.store();
           const Tag t = store.add_tag(store.resolve_domain(req.path_params.at("id")),
                                       body["name"].get<std::string>());
           send_json(res, 201, tag_to_json(t));
         }));

  s.Post("/v1/tags/relate", wrap([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.is_object() || !body.contains("tag_a") || !body.contains("tag_b") ||
               !body["tag_a"].is_string() || !body["tag_b"].is_string())
             raise(Errc::invalid_config, "relate body needs string 'tag_a' and 'tag_b'");
           auto& store = service_.store();
           store.relate_tags(store.resolve_tag(body["tag_a"].get<std::string>()),
                             store.resolve_tag(body["tag_b"].get<std::string>()));
           res.status = 204;
         }));

  // Annotation jobs.
  s.Post("/v1/jobs", wrap([this](const httplib::Request& req, httplib::Response& res) {
           const AnnotationJob job = service_.jobs().create_job(parse_body(req));
           res.set_header("Location", "/v1/jobs/" + job.id);
           send_json(res, 201, job_to_json(job));
         }));

  s.Get("/v1/jobs", wrap([this](const httplib::Request& req, httplib::Response& res) {
          std::vector<json> items;
          for (const auto& job : service_.jobs().list_jobs()) items.push_back(job_to_json(job));
          send_json(res, 200, paginate(items, req));
        }));

  s.Get("/v1/jobs/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, job_to_json(service_.jobs().get_job(req.path_params.at("id"))));
        }));

  s.Put("/v1/jobs/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200,
                    job_to_json(service_.jobs().update_job(req.path_params.at("id"),
                                                           parse_body(req))));
        }));

  s.Delete("/v1/jobs/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
             service_.jobs().delete_job(req.path_params.at("id"));
             res.status = 204;
           }));

  s.Post("/v1/jobs/:id/train", wrap([this](const httplib::Request& req, httplib::Response& res) {
           const auto samples = samples_from_json(parse_body(req));
           send_json(res, 200,
                     job_to_json(service_.jobs().submit_training(req.path_params.at("id"),
                                                                 samples)));
         }));

  s.Post("/v1/jobs/:id/start", wrap([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200, job_to_json(service_.jobs().start_job(req.path_params.at("id"))));
         }));

  s.Post("/v1/jobs/:id/stop", wrap([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200, job_to_json(service_.jobs().stop_job(req.path_params.at("id"))));
         }));

  // Annotations.
  s.Post("/v1/annotations", wrap([this](const httplib::Request& req, httplib::Response& res) {
           auto& store = service_.store();
           Annotation a = annotation_from_json(parse_body(req), /*require_id=*/false);
           a.tag_id = store.resolve_tag(a.tag_id);
           const std::string who = req.get_header_value("X-Annotator");
           a.annotator = {Annotator::Kind::user, who.empty() ? "anonymous" : who};
           const std::string id = store.record_annotation(a);
           res.set_header("Location", "/v1/annotations/" + id);
           send_json(res, 201, annotation_to_json(store.get_annotation(id)));
         }));

  s.Get("/v1/annotations/entities",
        wrap([this](const httplib::Request& req, httplib::Response& res) {
          auto& store = service_.store();
          const auto tags = split_csv(req.get_param_value("tags"));
          if (tags.empty())
            raise(Errc::malformed_filter, "the 'tags' parameter needs at least one tag");
          std::vector<ConjunctiveClause> clauses;
          for (const auto& t : tags) {
            ConjunctiveClause clause;
            clause.tag_id = store.resolve_tag(t);
            if (req.has_param("attribute")) clause.attribute = req.get_param_value("attribute");
            clauses.push_back(std::move(clause));
          }
          std::optional<BoundingBox> area;
          if (req.has_param("bbox")) area = BoundingBox::parse(req.get_param_value("bbox"));
          const auto entities =
              store.conjunctive_entity_query(clauses, window_from_params(req), area);
          std::vector<json> items(entities.begin(), entities.end());
          send_json(res, 200, paginate(items, req));
        }));

  s.Get("/v1/annotations/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200,
                    annotation_to_json(service_.store().get_annotation(req.path_params.at("id"))));
        }));

  s.Get("/v1/annotations", wrap([this](const httplib::Request& req, httplib::Response& res) {
          auto& store = service_.store();
          AnnotationFilter f;
          if (req.has_param("entity")) f.entity_id = req.get_param_value("entity");
          if (req.has_param("tag")) f.tag_id = store.resolve_tag(req.get_param_value("tag"));
          if (req.has_param("domain"))
            f.domain_id = store.resolve_domain(req.get_param_value("domain"));
          f.window = window_from_params(req);
          if (req.has_param("bbox")) f.bbox = BoundingBox::parse(req.get_param_value("bbox"));
          std::vector<json> items;
          for (const auto& a : store.query_annotations(f)) items.push_back(annotation_to_json(a));
          send_json(res, 200, paginate(items, req));
        }));

  // Ingestion.
  const auto ingest_handler = wrap([this](const httplib::Request& req, httplib::Response& res) {
    const auto [accepted, skipped] = service_.ingest_body(req.body);
    send_json(res, 202, {{"accepted", accepted}, {"skipped", skipped}});
  });
  s.Post("/v1/notify", ingest_handler);
  s.Post("/v1/observations", ingest_handler);

  s.Post("/v1/subscriptions", wrap([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.is_object() || !body.contains("broker_url") ||
               !body["broker_url"].is_string() || !body.contains("query"))
             raise(Errc::invalid_config,
                   "subscription body needs a string 'broker_url' and a 'query'");
           const Subscription sub = service_.subscriptions().subscribe(
               body["broker_url"].get<std::string>(), QueryContext::from_json(body["query"]));
           res.set_header("Location", "/v1/subscriptions/" + sub.id);
           send_json(res, 201, subscription_to_json(sub));
         }));

  s.Get("/v1/subscriptions", wrap([this](const httplib::Request& req, httplib::Response& res) {
          std::vector<json> items;
          for (const auto& sub : service_.subscriptions().list_subscriptions())
            items.push_back(subscription_to_json(sub));
          send_json(res, 200, paginate(items, req));
        }));

  s.Get("/v1/subscriptions/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200,
                    subscription_to_json(
                        service_.subscriptions().get_subscription(req.path_params.at("id"))));
        }));

  s.Delete("/v1/subscriptions/:id",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             service_.subscriptions().delete_subscription(req.path_params.at("id"));
             res.status = 204;
           }));

  // Operations.
  s.Get("/v1/health", wrap([this](const httplib::Request&, httplib::Response& res) {
          if (service_.healthy())
            send_json(res, 200, {{"status", "ok"}});
          else
            send_json(res, 503, {{"status", "unhealthy"}});
        }));

  s.Get("/v1/metrics", wrap([this](const httplib::Request&, httplib::Response& res) {
          send_json(res, 200, service_.metrics_json());
        }));
}

}  // namespace jamaica
