#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "mpi/vignette.hpp"

namespace mpi {

/// Rater-facing view of a session. Essays are anonymized as "Response 1" and
/// "Response 2"; no condition labels or model names are included.
nlohmann::json session_view(const RatingSession& session, const std::vector<Essay>& essays);

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent request handling for the rating API, so the
/// endpoint logic can be exercised without sockets.
class RatingService {
 public:
  explicit RatingService(SessionDir dir);

  /// GET /api/session/{id}
  HttpReply get_session(const std::string& id) const;
  /// POST /api/session/{id}/ratings
  HttpReply post_ratings(const std::string& id, const std::string& body);

  const RatingSession& session() const { return session_; }

 private:
  SessionDir dir_;
  RatingSession session_;
  std::vector<Essay> essays_;
  nlohmann::json view_;
  RatingStore store_;
};

/// Serves RatingService over HTTP plus optional static assets for the UI.
class RatingServer {
 public:
  RatingServer(SessionDir dir, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~RatingServer();

  RatingServer(const RatingServer&) = delete;
  RatingServer& operator=(const RatingServer&) = delete;

  /// Binds to `port` (0 picks a free port) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mpi
