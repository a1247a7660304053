#include "imi/service/http_server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

namespace imi::service {

using nlohmann::json;

struct HttpServer::Impl {
  ExperimentService& service;
  std::filesystem::path image_root;
  httplib::Server server;

  Impl(ExperimentService& s, std::filesystem::path root) : service(s), image_root(std::move(root)) {}

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    reply(res, status, json{{"error", kind}, {"message", message}});
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const NotFoundError& e) {
      fail(res, 404, "not_found", e.what());
    } catch (const RejectedError& e) {
      fail(res, 403, "repeat_participant", e.what());
    } catch (const ClosedError& e) {
      fail(res, 410, "closed", e.what());
    } catch (const BusyError& e) {
      res.set_header("Retry-After", "1");
      fail(res, 503, "busy", e.what());
    } catch (const ProtocolError& e) {
      fail(res, 409, "protocol", e.what());
    } catch (const StateError& e) {
      fail(res, 409, "state", e.what());
    } catch (const ValidationError& e) {
      fail(res, 400, "validation", e.what());
    } catch (const json::exception& e) {
      fail(res, 400, "validation", std::string("malformed JSON body: ") + e.what());
    } catch (const Error& e) {
      fail(res, 400, "invalid", e.what());
    } catch (const std::exception& e) {
      fail(res, 500, "internal", e.what());
    }
  }

  bool authorised(const httplib::Request& req, httplib::Response& res) const {
    const std::string& token = service.config().admin_token;
    if (!token.empty() && req.get_header_value("Authorization") == "Bearer " + token) return true;
    fail(res, 401, "unauthorised", "admin endpoints require 'Authorization: Bearer <token>'");
    return false;
  }

  void routes() {
    server.new_task_queue = [] { return new httplib::ThreadPool(64); };
    server.set_tcp_nodelay(true);
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        const auto info = service.create_session(body.at("participant_id").get<std::string>(),
                                                 body.at("model_id").get<std::string>(),
                                                 stimuli::parse_condition(body.at("condition").get<std::string>()),
                                                 stimuli::parse_difficulty(body.at("difficulty").get<std::string>()));
        reply(res, 201, info);
      });
    });

    server.Get(R"(/sessions/([^/]+)/trial)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, service.next_trial(req.matches[1])); });
    });

    server.Post(R"(/sessions/([^/]+)/responses)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        ResponseSubmission sub;
        sub.trial_id = body.at("trial_id").get<std::string>();
        sub.choice = body.at("choice").get<std::string>();
        if (!body.at("confidence").is_number_integer()) throw ValidationError("confidence must be an integer 1..3");
        sub.confidence = body.at("confidence").get<int>();
        sub.reaction_time_ms = body.at("reaction_time_ms").get<double>();
        reply(res, 200, service.submit_response(req.matches[1], sub));
      });
    });

    server.Post(R"(/sessions/([^/]+)/finish)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, service.finish(req.matches[1])); });
    });

    server.Get("/admin/recruitment", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorised(req, res)) return;
      guarded(res, [&] {
        json experiments = json::array();
        for (const auto& st : service.recruitment_status()) experiments.push_back(st);
        reply(res, 200, json{{"complete", service.all_complete()}, {"experiments", experiments}});
      });
    });

    server.Post(R"(/admin/sessions/([^/]+)/advance)", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorised(req, res)) return;
      guarded(res, [&] {
        const json body = json::parse(req.body);
        service.advance_clock(req.matches[1], body.at("seconds").get<double>());
        reply(res, 200, json{{"ok", true}});
      });
    });

    server.Get(R"(/stimuli/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string rel = req.matches[1];
      if (rel.find("..") != std::string::npos || rel.front() == '/') {
        fail(res, 400, "validation", "invalid stimulus path");
        return;
      }
      std::ifstream in(image_root / rel, std::ios::binary);
      if (!in) {
        fail(res, 404, "not_found", "no stimulus " + rel);
        return;
      }
      std::ostringstream ss;
      ss << in.rdbuf();
      res.set_content(ss.str(), "image/png");
    });
  }
};

HttpServer::HttpServer(ExperimentService& service, std::filesystem::path image_root)
    : impl_(std::make_unique<Impl>(service, std::move(image_root))) {
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace imi::service
