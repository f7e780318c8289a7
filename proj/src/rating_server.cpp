#include <httplib.h>

#include "mpi/rating_server.hpp"

#include <chrono>
#include <ctime>
#include <map>
#include <set>

#include "mpi/errors.hpp"

namespace mpi {

using nlohmann::json;

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

HttpReply error_reply(int status, std::string message) {
  return {status, json{{"error", std::move(message)}}};
}

constexpr std::string_view kInstructions =
    "Each item shows two answers to the same situation. The reference answer is marked. "
    "Decide whether the other answer shows more (increased) or less (decreased) of the named "
    "trait than the reference answer.";

}  // namespace

json session_view(const RatingSession& session, const std::vector<Essay>& essays) {
  std::map<std::string, const Essay*> by_id;
  for (const auto& e : essays) by_id[e.id] = &e;
  auto text_of = [&](const std::string& id) -> const std::string& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ConfigError("session references missing essay '" + id + "'");
    return it->second->text;
  };

  json items = json::array();
  for (std::size_t i = 0; i < session.comparisons.size(); ++i) {
    const auto& c = session.comparisons[i];
    const std::string& reference = text_of(c.neutral_essay_id);
    const std::string& other = text_of(c.induced_essay_id);
    items.push_back({{"item_id", c.item_id},
                     {"position", i + 1},
                     {"trait", trait_name(c.dimension)},
                     {"scenario", builtin_context(c.dimension).scenario},
                     {"reference_response", c.presentation_flip ? 2 : 1},
                     {"response_1", c.presentation_flip ? other : reference},
                     {"response_2", c.presentation_flip ? reference : other}});
  }
  return json{{"session_id", session.id},
              {"instructions", kInstructions},
              {"progress", {{"total", session.comparisons.size()}}},
              {"items", items}};
}

RatingService::RatingService(SessionDir dir)
    : dir_(std::move(dir)),
      session_(load_session(dir_.session())),
      essays_(load_essays(dir_.essays())),
      view_(session_view(session_, essays_)),
      store_(dir_.ratings()) {}

HttpReply RatingService::get_session(const std::string& id) const {
  if (id != session_.id) return error_reply(404, "unknown session");
  if (session_.status != "open") return error_reply(409, "session is closed");
  return {200, view_};
}

HttpReply RatingService::post_ratings(const std::string& id, const std::string& body) {
  if (id != session_.id) return error_reply(404, "unknown session");
  if (session_.status != "open") return error_reply(409, "session is closed");

  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    return error_reply(400, "body is not valid JSON");
  }
  if (!doc.is_object() || !doc.contains("rater_id") || !doc["rater_id"].is_string() ||
      !doc.contains("answers") || !doc["answers"].is_array()) {
    return error_reply(400, "body needs rater_id and answers");
  }
  const std::string rater = doc["rater_id"].get<std::string>();
  if (rater.empty()) return error_reply(400, "rater_id is empty");

  std::set<std::string> answered;
  std::vector<RatingRecord> records;
  const std::string ts = utc_timestamp();
  for (const auto& a : doc["answers"]) {
    if (!a.is_object() || !a.contains("item_id") || !a["item_id"].is_string() ||
        !a.contains("judgment") || !a["judgment"].is_string()) {
      return error_reply(400, "each answer needs item_id and judgment");
    }
    const std::string item = a["item_id"].get<std::string>();
    if (!session_.find(item)) return error_reply(400, "unknown item '" + item + "'");
    if (!answered.insert(item).second) return error_reply(400, "item '" + item + "' answered twice");
    const auto judgment = parse_judgment(a["judgment"].get<std::string>());
    if (!judgment) return error_reply(400, "judgment must be 'increased' or 'decreased'");
    records.push_back({session_.id, rater, item, *judgment, ts});
  }
  if (answered.size() != session_.comparisons.size()) {
    return error_reply(400, "expected " + std::to_string(session_.comparisons.size()) +
                                " answers, got " + std::to_string(answered.size()));
  }
  if (store_.has_rater(rater) || !store_.append(records)) {
    return error_reply(409, "rater '" + rater + "' already submitted");
  }
  return {200, json{{"status", "ok"}, {"recorded", records.size()}}};
}

struct RatingServer::Impl {
  RatingService service;
  httplib::Server server;
  std::optional<std::filesystem::path> static_dir;

  Impl(SessionDir dir, std::optional<std::filesystem::path> assets)
      : service(std::move(dir)), static_dir(std::move(assets)) {}
};

RatingServer::RatingServer(SessionDir dir, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(std::move(dir), std::move(static_dir))) {
  auto& srv = impl_->server;
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  srv.Get(R"(/api/session/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, impl_->service.get_session(req.matches[1]));
  });
  srv.Post(R"(/api/session/([^/]+)/ratings)",
           [this, send](const httplib::Request& req, httplib::Response& res) {
             send(res, impl_->service.post_ratings(req.matches[1], req.body));
           });
  if (impl_->static_dir) {
    srv.set_mount_point("/", impl_->static_dir->string());
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          "<!doctype html><title>Rating study</title>"
          "<p>The rater UI assets are not installed. Start the server with --static DIR.</p>",
          "text/html");
    });
  }
}

RatingServer::~RatingServer() { stop(); }

int RatingServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void RatingServer::serve() { impl_->server.listen_after_bind(); }

void RatingServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace mpi
