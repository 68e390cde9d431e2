#include "toxinspect/api_server.hpp"

#include <httplib.h>

#include <functional>

namespace toxinspect {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadRequest: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kSessionComplete: return 410;
    case ErrorCode::kUpstreamFailure: return 502;
  }
  return 500;
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const json& detail = nullptr) {
  send_json(res, {{"error", {{"code", code}, {"message", message}, {"detail", detail}}}}, status);
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Translates engine errors into the API error taxonomy.
Handler guarded(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what(), e.detail());
    } catch (const json::exception& e) {
      send_error(res, 400, to_string(ErrorCode::kBadRequest), std::string("invalid JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::kBadRequest, "request body is not valid JSON");
  return j;
}

IngestConfig ingest_config_from(const json& j) {
  IngestConfig c;
  if (!j.is_object()) return c;
  c.id_field = j.value("id_field", c.id_field);
  c.text_field = j.value("text_field", c.text_field);
  c.label_field = j.value("label_field", c.label_field);
  c.split_field = j.value("split_field", c.split_field);
  c.lang_field = j.value("lang_field", c.lang_field);
  c.score_field = j.value("score_field", c.score_field);
  if (j.contains("nontoxic_sentinels")) {
    c.nontoxic_sentinels = j["nontoxic_sentinels"].get<std::set<std::string>>();
  }
  return c;
}

std::size_t k_param(const httplib::Request& req) {
  if (!req.has_param("k")) return 10;
  const std::string v = req.get_param_value("k");
  try {
    const long k = std::stol(v);
    if (k >= 1) return static_cast<std::size_t>(k);
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kBadRequest, "k must be a positive integer");
}

}  // namespace

struct ApiServer::Impl {
  Workspace& ws;
  httplib::Server server;

  explicit Impl(Workspace& w) : ws(w) { routes(); }

  void routes() {
    const std::string sid = "([A-Za-z0-9_-]+)";

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const SessionMode mode = parse_session_mode(body.value("mode", std::string("gold")));
      const SessionConfig config = SessionConfig::from_json(body.value("config", json(nullptr)));
      std::optional<std::string> id;
      if (body.contains("id")) id = body["id"].get<std::string>();
      send_json(res, {{"id", ws.create_session(mode, config, id)}}, 201);
    }));

    server.Post("/sessions/import", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json body = parse_body(req);
      std::optional<std::string> id;
      if (req.has_param("id")) id = req.get_param_value("id");
      send_json(res, {{"id", ws.import_archive(body, id)}}, 201);
    }));

    server.Get("/sessions/" + sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, ws.info(req.matches[1]));
    }));

    server.Post("/sessions/" + sid + "/dataset",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  std::string content;
                  std::string format = req.has_param("format") ? req.get_param_value("format") : "";
                  IngestConfig ingest;
                  if (req.is_multipart_form_data()) {
                    if (!req.has_file("file")) fail(ErrorCode::kBadRequest, "multipart upload needs a 'file' part");
                    const auto file = req.get_file_value("file");
                    content = file.content;
                    if (req.has_file("format")) format = req.get_file_value("format").content;
                    if (format.empty() && file.filename.ends_with(".csv")) format = "csv";
                    if (req.has_file("ingest")) ingest = ingest_config_from(json::parse(req.get_file_value("ingest").content));
                  } else {
                    const json body = parse_body(req);
                    content = body.at("content").get<std::string>();
                    format = body.value("format", format);
                    ingest = ingest_config_from(body.value("ingest", json(nullptr)));
                  }
                  if (format.empty()) format = "jsonl";
                  send_json(res, ws.upload_dataset(id, content, parse_dataset_format(format), ingest));
                }));

    server.Post("/sessions/" + sid + "/seed", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const ScorerConfig scorer = ScorerConfig::from_json(body.value("scorer", json(nullptr)));
      send_json(res, ws.seed(req.matches[1], scorer, body.value("threshold", 0.5), body.value("overwrite", false)));
    }));

    server.Get("/sessions/" + sid + "/diagnosis",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, ws.diagnose(req.matches[1]).to_json());
               }));

    server.Get("/sessions/" + sid + "/batch", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, ws.batch(req.matches[1]).to_json());
    }));

    server.Post("/sessions/" + sid + "/corrections",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  if (!body.contains("iteration")) {
                    fail(ErrorCode::kBadRequest, "corrections must name the iteration they close");
                  }
                  std::vector<LabelEdit> edits;
                  for (const auto& c : body.value("corrections", json::array())) {
                    LabelEdit e;
                    e.comment_id = c.at("comment_id").get<std::string>();
                    e.new_label = label_from_int(c.at("new_label").get<long long>());
                    if (c.contains("actor")) e.actor = parse_actor(c["actor"].get<std::string>());
                    edits.push_back(std::move(e));
                  }
                  const MetricsReport r = ws.submit(req.matches[1], body["iteration"].get<int>(), edits);
                  send_json(res, r.to_json());
                }));

    server.Get("/sessions/" + sid + "/metrics", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json history = json::array();
      for (const auto& r : ws.metrics(req.matches[1])) history.push_back(r.to_json());
      send_json(res, {{"history", std::move(history)}});
    }));

    server.Get("/sessions/" + sid + "/comments/([^/]+)/explanation",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, ws.explain(req.matches[1], req.matches[2], k_param(req)).to_json());
               }));

    server.Get("/sessions/" + sid + "/explanation",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, ws.explain_global(req.matches[1], k_param(req)).to_json());
               }));

    server.Get("/sessions/" + sid + "/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, ws.export_archive(req.matches[1]));
    }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, to_string(ErrorCode::kNotFound), "no such endpoint");
    });
  }
};

ApiServer::ApiServer(Workspace& workspace) : impl_(std::make_unique<Impl>(workspace)) {}
ApiServer::~ApiServer() = default;

bool ApiServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int ApiServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool ApiServer::listen_after_bind() { return impl_->server.listen_after_bind(); }
void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }
void ApiServer::stop() { impl_->server.stop(); }

}  // namespace toxinspect
