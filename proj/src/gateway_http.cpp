#include <httplib.h>

#include <cstdlib>

#include <json.hpp>

#include "mpi/gateway.hpp"

namespace mpi {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint is not an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(ModelProfile profile)
      : profile_(std::move(profile)), url_(split_url(profile_.endpoint)) {}

  std::string generate(const std::string& prompt) override {
    const char* key = std::getenv(profile_.auth_env.c_str());
    if (!key || !*key) {
      throw GatewayError("missing credential: environment variable " + profile_.auth_env +
                         " is not set");
    }

    json body = {{"temperature", profile_.decoding.temperature},
                 {"max_tokens", profile_.decoding.max_tokens}};
    if (!profile_.model.empty()) body["model"] = profile_.model;
    if (profile_.kind == ProfileKind::HttpChat) {
      body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    } else {
      body["prompt"] = prompt;
    }

    httplib::Client client(url_.origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
    auto res = client.Post(url_.path, headers, body.dump(), "application/json");
    if (!res) {
      throw TransientError("endpoint unreachable: " + profile_.endpoint + " (" +
                           httplib::to_string(res.error()) + ")");
    }
    if (res->status >= 500) {
      throw TransientError("HTTP " + std::to_string(res->status) + " from " + profile_.endpoint);
    }
    if (res->status < 200 || res->status >= 300) {
      throw GatewayError("HTTP " + std::to_string(res->status) + " from " + profile_.endpoint +
                         ": " + res->body.substr(0, 200));
    }
    try {
      const auto reply = json::parse(res->body);
      const auto& choice = reply.at("choices").at(0);
      if (profile_.kind == ProfileKind::HttpChat) {
        return choice.at("message").at("content").get<std::string>();
      }
      return choice.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw GatewayError("unexpected response shape from " + profile_.endpoint + ": " + e.what());
    }
  }

 private:
  ModelProfile profile_;
  ParsedUrl url_;
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(const ModelProfile& profile) {
  return std::make_unique<HttpBackend>(profile);
}

}  // namespace mpi
