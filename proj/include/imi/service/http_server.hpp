#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "imi/service/experiment.hpp"

namespace imi::service {

/// HTTP+JSON front end of an ExperimentService.
///
///   POST /sessions                    {participant_id, model_id, condition, difficulty}
///   GET  /sessions/{id}/trial
///   POST /sessions/{id}/responses     {trial_id, choice, confidence, reaction_time_ms}
///   POST /sessions/{id}/finish
///   GET  /admin/recruitment           bearer token
///   POST /admin/sessions/{id}/advance {seconds}; bearer token, virtual clock only
///   GET  /stimuli/{path}              PNG
///
/// Errors are JSON {"error": kind, "message": text} with 400 (validation),
/// 401 (admin token), 403 (repeat participant), 404, 409 (protocol/state),
/// 410 (closed) or 503 (no open slot right now).
class HttpServer {
 public:
  HttpServer(ExperimentService& service, std::filesystem::path image_root);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the port.
  int bind(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void serve();
  /// Serves on a background thread.
  void start();
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace imi::service
