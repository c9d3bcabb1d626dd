#include "bodyshape/service.hpp"

#include <cinttypes>
#include <cstdio>

#include <httplib.h>

#include <json.hpp>

#include "bodyshape/errors.hpp"
#include "bodyshape/measure.hpp"
#include "bodyshape/version.hpp"

namespace bodyshape {

namespace {

using nlohmann::ordered_json;

HttpReply json_reply(int status, const ordered_json& doc) {
  return {status, "application/json", doc.dump() + "\n"};
}

HttpReply error_reply(int status, const Error& e) {
  ordered_json doc{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
  if (e.line()) doc["line"] = *e.line();
  return json_reply(status, doc);
}

ordered_json spans_json(const std::vector<TextSpan>& spans) {
  ordered_json out = ordered_json::array();
  for (const auto& s : spans) out.push_back({{"begin", s.begin}, {"end", s.end}, {"text", s.text}});
  return out;
}

SolverOptions apply_overrides(SolverOptions o, const nlohmann::json& overrides) {
  if (overrides.is_null()) return o;
  if (!overrides.is_object()) throw Error(ErrorKind::Input, "'solver' must be an object");
  auto get = [&](const char* key, auto& field) {
    if (const auto it = overrides.find(key); it != overrides.end()) {
      try {
        field = it->get<std::remove_reference_t<decltype(field)>>();
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::Input, std::string("solver.") + key + " has the wrong type");
      }
    }
  };
  get("seed", o.seed);
  get("starts", o.starts);
  get("max_iterations", o.max_iterations);
  get("regularization", o.regularization);
  get("fd_step", o.fd_step);
  if (o.starts > 16 || o.max_iterations > 5000)
    throw Error(ErrorKind::Input, "solver overrides exceed service limits");
  o.validate();
  return o;
}

}  // namespace

struct Service::Server {
  httplib::Server http;
  int port = 0;
};

Service::Service(const BodyModelAsset& asset, const BinTable& bins, const Lexicon& lexicon,
                 ServiceConfig config)
    : asset_(asset), bins_(bins), lexicon_(lexicon), config_(std::move(config)),
      server_(std::make_unique<Server>()) {
  config_.solver.validate();
  for (auto m : all_measurements()) bins_.thresholds(m);
}

Service::~Service() { stop(); }

HttpReply Service::avatar(std::string_view body, bool as_obj) const {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return error_reply(400, Error(ErrorKind::Format, std::string("malformed JSON: ") + e.what()));
  }
  if (!req.is_object()) return error_reply(400, Error(ErrorKind::Format, "request must be an object"));
  const auto d = req.find("description");
  if (d == req.end() || !d->is_string())
    return error_reply(400, Error(ErrorKind::Input, "missing string field 'description'"));
  const std::string description = d->get<std::string>();

  SolverOptions options;
  try {
    options = apply_overrides(config_.solver, req.value("solver", nlohmann::json()));
  } catch (const Error& e) {
    return error_reply(400, e);
  }
  options.time_budget = config_.budget;

  ParseResult parsed;
  try {
    parsed = parse_description(lexicon_, description);
  } catch (const UnparseableDescription& e) {
    ordered_json doc{{"error", std::string(to_string(e.kind()))},
                     {"message", e.what()},
                     {"unmatched", spans_json(e.unmatched())}};
    return json_reply(422, doc);
  }

  SolveResult solved;
  try {
    solved = solve_shape(asset_, bins_, parsed.constraints, options);
  } catch (const Error& e) {
    return error_reply(500, e);
  }
  const BodyMesh mesh = evaluate_mesh(asset_, solved.beta);
  if (as_obj) return {200, "text/plain", to_obj(mesh)};

  ordered_json doc;
  doc["beta"] = std::vector<double>(solved.beta.values().begin(), solved.beta.values().end());
  ordered_json vertices = ordered_json::array();
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
    vertices.push_back({mesh.vertices(i, 0), mesh.vertices(i, 1), mesh.vertices(i, 2)});
  ordered_json faces = ordered_json::array();
  for (const auto& f : mesh.faces()) faces.push_back({f[0], f[1], f[2]});
  doc["mesh"] = {{"vertices", vertices}, {"faces", faces}};
  ordered_json meas = ordered_json::object();
  ordered_json labels = ordered_json::object();
  for (auto m : all_measurements()) {
    meas[std::string(name(m))] = solved.measurements[m];
    labels[std::string(name(m))] = std::string(name(solved.labels[m]));
  }
  doc["measurements"] = meas;
  doc["labels"] = labels;

  ordered_json constraints = ordered_json::array();
  for (const auto& c : parsed.constraints.items)
    constraints.push_back({{"measurement", std::string(name(c.measurement))},
                           {"level", std::string(name(c.level))},
                           {"weight", c.weight}});
  ordered_json matches = ordered_json::array();
  for (const auto& m : parsed.matches) {
    ordered_json attrs = ordered_json::array();
    for (const auto& a : m.attributes)
      attrs.push_back({{"measurement", std::string(name(a.measurement))},
                       {"level", std::string(name(a.level))}});
    matches.push_back({{"begin", m.span.begin}, {"end", m.span.end}, {"text", m.span.text},
                       {"attributes", attrs}});
  }
  doc["parse"] = {{"constraints", constraints},
                  {"matches", matches},
                  {"unmatched", spans_json(parsed.unmatched)},
                  {"overrides", parsed.overrides}};

  ordered_json report = ordered_json::array();
  for (const auto& c : solved.constraints) {
    auto edge = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
    report.push_back({{"measurement", std::string(name(c.measurement))},
                      {"target", std::string(name(c.target))},
                      {"achieved", std::string(name(c.achieved))},
                      {"value", c.value},
                      {"interval", {edge(c.lo), edge(c.hi)}},
                      {"satisfied", c.satisfied}});
  }
  doc["solve"] = {{"constraints", report},
                  {"satisfied", solved.satisfied},
                  {"total", solved.constraints.size()},
                  {"objective", solved.objective},
                  {"iterations", solved.iterations},
                  {"budget_exhausted", solved.budget_exhausted}};
  return json_reply(200, doc);
}

HttpReply Service::evaluate(std::string_view body) const {
  try {
    const auto records = parse_predictions(body);
    const auto report = evaluate_predictions(asset_, bins_, lexicon_, records, config_.evaluation);
    return {200, "application/json", report_json(report)};
  } catch (const Error& e) {
    const bool client = e.kind() == ErrorKind::Format || e.kind() == ErrorKind::Input ||
                        e.kind() == ErrorKind::OutOfRange || e.kind() == ErrorKind::Arity;
    return error_reply(client ? 400 : 500, e);
  }
}

HttpReply Service::health() const {
  char checksum[17];
  std::snprintf(checksum, sizeof checksum, "%016" PRIx64, asset_.checksum());
  ordered_json doc{{"status", "ok"},
                   {"version", std::string(kVersion)},
                   {"asset",
                    {{"vertices", asset_.vertex_count()},
                     {"faces", asset_.faces().size()},
                     {"checksum", checksum}}},
                   {"bins", {{"sample_count", bins_.sample_count()}, {"seed", bins_.seed()}}}};
  return json_reply(200, doc);
}

HttpReply Service::bins() const { return {200, "application/json", bins_.to_json() + "\n"}; }

int Service::bind() {
  auto& http = server_->http;
  http.set_payload_max_length(config_.max_body_bytes);
  http.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                            {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                            {"Access-Control-Allow-Headers", "Content-Type"}});
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  http.Post("/v1/avatar", [this, send](const httplib::Request& req, httplib::Response& res) {
    const bool obj = req.has_param("format") && req.get_param_value("format") == "obj";
    send(res, avatar(req.body, obj));
  });
  http.Post("/v1/evaluate", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, evaluate(req.body));
  });
  http.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  http.Get("/v1/bins", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, bins());
  });
  http.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(ordered_json{{"error", "internal"}, {"message", message}}.dump() + "\n",
                    "application/json");
  });

  const int port = config_.port == 0 ? http.bind_to_any_port(config_.host)
                                     : (http.bind_to_port(config_.host, config_.port) ? config_.port : -1);
  if (port < 0)
    throw Error(ErrorKind::Io, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  server_->port = port;
  return port;
}

void Service::serve() {
  if (server_->port == 0) throw Error(ErrorKind::Config, "bind() must precede serve()");
  server_->http.listen_after_bind();
}

void Service::wait_until_ready() const { server_->http.wait_until_ready(); }

void Service::stop() {
  if (server_ && server_->http.is_running()) server_->http.stop();
}

}  // namespace bodyshape
