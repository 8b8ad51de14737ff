#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "rubblevoid/report.hpp"

namespace rubblevoid {

struct HttpRequest {
  std::string method;
  std::string path;  // without query string
  std::string body;
  std::string analyst;  // from the X-Analyst header; "anonymous" when absent
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// The report API over one report directory. Reads see a whole report
/// snapshot; label writes are serialized and persisted before the new
/// snapshot is published.
class ReportService {
 public:
  explicit ReportService(std::string report_dir);

  HttpResponse handle(const HttpRequest& req);
  std::shared_ptr<const ReportBundle> snapshot() const;

 private:
  HttpResponse label(int void_id, const HttpRequest& req);
  HttpResponse file(const std::string& relative, const std::string& content_type) const;

  std::string dir_;
  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const ReportBundle> current_;
  std::mutex write_mu_;
};

/// cpp-httplib front end for a ReportService.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<ReportService> service, std::string host, int port);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket (port 0 picks a free one); returns the bound port.
  int bind();
  /// Blocks serving requests until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rubblevoid
