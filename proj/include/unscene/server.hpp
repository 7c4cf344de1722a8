#pragma once

#include <map>
#include <memory>
#include <string>

namespace unscene {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// HTTP/JSON access to one artifact directory. Artifacts are read once at
// construction; only labels.json is ever written.
class ExplorerService {
 public:
  explicit ExplorerService(std::string artifact_dir);
  ~ExplorerService();
  ExplorerService(const ExplorerService&) = delete;
  ExplorerService& operator=(const ExplorerService&) = delete;

  // Routes a request without the network layer.
  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::map<std::string, std::string>& query = {}, const std::string& body = {});

  // Binds (port 0 picks a free port) and serves on a background thread.
  void start(const std::string& host, int port);
  int port() const;
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace unscene
