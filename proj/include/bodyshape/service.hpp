#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include "bodyshape/bodymodel.hpp"
#include "bodyshape/labeling.hpp"
#include "bodyshape/losseval.hpp"
#include "bodyshape/solver.hpp"
#include "bodyshape/textlang.hpp"

namespace bodyshape {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  SolverOptions solver;
  std::chrono::milliseconds budget{2000};
  std::size_t max_body_bytes = 64u << 20;
  std::string cors_origin = "*";
  EvaluationOptions evaluation;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Stateless HTTP facade. The asset, bins and lexicon must outlive the
// service and are never mutated.
class Service {
 public:
  Service(const BodyModelAsset& asset, const BinTable& bins, const Lexicon& lexicon,
          ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Request handlers, callable without a socket.
  HttpReply avatar(std::string_view body, bool as_obj) const;
  HttpReply evaluate(std::string_view body) const;
  HttpReply health() const;
  HttpReply bins() const;

  // Binds the listening socket and returns the port.
  int bind();
  // Serves until stop(); bind() first.
  void serve();
  // Blocks until serve() is accepting connections.
  void wait_until_ready() const;
  void stop();

 private:
  const BodyModelAsset& asset_;
  const BinTable& bins_;
  const Lexicon& lexicon_;
  ServiceConfig config_;
  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace bodyshape
