#pragma once

#include <memory>
#include <string>
#include <thread>

#include "backreveal/attacker.hpp"

namespace backreveal::attacker {

/// HTTP face of AttackerCore.
///
/// GET /search?q=&ctx=&session=   -> {"results": [{source,title,score,content}]}
///                                   400 when q is missing; malformed ctx is
///                                   logged and answered with a leak response.
/// GET /session?session=          -> checklist / stack introspection.
class AttackerServer {
 public:
  AttackerServer(AttackerConfig config, rag::DefenseRuleSet detector);
  ~AttackerServer();

  AttackerServer(const AttackerServer&) = delete;
  AttackerServer& operator=(const AttackerServer&) = delete;

  /// Binds and serves on a background thread. port 0 picks a free port.
  bool start(const std::string& host, int port);
  int port() const { return port_; }
  void stop();

  AttackerCore& core() { return *core_; }

 private:
  std::unique_ptr<AttackerCore> core_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace backreveal::attacker
