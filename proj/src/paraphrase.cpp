#include "bodyshape/datasetgen.hpp"

// After the Eigen-based headers: resolv.h defines a macro named _res.
#include <httplib.h>

#include <json.hpp>

#include "bodyshape/errors.hpp"

namespace bodyshape {

HttpParaphraseProvider::HttpParaphraseProvider(HttpParaphraseConfig config)
    : config_(std::move(config)) {
  const std::string scheme = "http://";
  if (config_.url.rfind(scheme, 0) != 0)
    throw Error(ErrorKind::Config, "paraphrase endpoint must be an http:// URL: " + config_.url);
  const auto slash = config_.url.find('/', scheme.size());
  base_ = config_.url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.url.substr(slash);
  if (base_.size() == scheme.size())
    throw Error(ErrorKind::Config, "paraphrase endpoint has no host: " + config_.url);
  if (config_.retries < 0) throw Error(ErrorKind::Config, "retries must be >= 0");
}

std::optional<std::string> HttpParaphraseProvider::paraphrase(const std::string& text) {
  httplib::Client client(base_);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  const std::string body = nlohmann::json{{"text", text}, {"instruction", config_.instruction}}.dump();

  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    auto res = client.Post(path_, body, "application/json");
    if (!res || res->status != 200) continue;
    try {
      const auto doc = nlohmann::json::parse(res->body);
      const auto it = doc.find("text");
      if (it != doc.end() && it->is_string()) return it->get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
  }
  return std::nullopt;
}

}  // namespace bodyshape
