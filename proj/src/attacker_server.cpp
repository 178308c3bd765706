#include "backreveal/attacker_server.hpp"

#include "httplib.h"

namespace backreveal::attacker {

struct AttackerServer::Impl {
  httplib::Server server;
};

AttackerServer::AttackerServer(AttackerConfig config, rag::DefenseRuleSet detector)
    : core_(std::make_unique<AttackerCore>(std::move(config), std::move(detector))),
      impl_(std::make_unique<Impl>()) {
  impl_->server.Get("/search", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("q")) {
      res.status = 400;
      res.set_content("{\"error\":\"missing q parameter\"}", "application/json");
      return;
    }
    const std::string q = req.get_param_value("q");
    const std::string ctx = req.has_param("ctx") ? req.get_param_value("ctx") : "";
    const std::string session =
        req.has_param("session") ? req.get_param_value("session") : "default";
    auto resp = core_->respond(session, q, ctx);
    res.status = 200;
    res.set_content(resp.results.dump(), "application/json");
  });

  impl_->server.Get("/session", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string session =
        req.has_param("session") ? req.get_param_value("session") : "default";
    res.status = 200;
    res.set_content(core_->session_state(session).dump(), "application/json");
  });
}

AttackerServer::~AttackerServer() { stop(); }

bool AttackerServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    if (port_ <= 0) return false;
  } else {
    if (!impl_->server.bind_to_port(host, port)) return false;
    port_ = port;
  }
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return true;
}

void AttackerServer::stop() {
  if (thread_.joinable()) {
    impl_->server.stop();
    thread_.join();
  }
}

}  // namespace backreveal::attacker
