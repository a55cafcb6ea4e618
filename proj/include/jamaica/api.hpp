#pragma once

#include <memory>
#include <string>
#include <thread>

#include "jamaica/service.hpp"

namespace httplib {
class Server;
}

namespace jamaica {

// HTTP front end for a Service. Bind and listen are split so the CLI can
// report bind failures distinctly and tests can run the server on a
// background thread with an auto-assigned port.
class ApiServer {
 public:
  ApiServer(Service& service, std::string host, int port);
  ~ApiServer();

  // Binds the listening socket; with port 0 an ephemeral port is chosen.
  // Returns false when the address cannot be bound.
  bool bind();
  int port() const { return port_; }
  std::string base_url() const;

  // Blocking request loop; call after bind().
  void listen();
  // bind() plus a background listen thread; returns false on bind failure.
  bool start();
  void stop();

 private:
  Service& service_;
  std::string host_;
  int port_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;

  void route_();
};

}  // namespace jamaica
