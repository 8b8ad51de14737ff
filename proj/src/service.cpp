#include "rubblevoid/service.hpp"

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "rubblevoid/error.hpp"

namespace rubblevoid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

HttpResponse json_response(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

HttpResponse error_response(int status, const std::string& msg) {
  return json_response({{"error", msg}, {"status", status}}, status);
}

std::optional<int> parse_id(const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

ReportService::ReportService(std::string report_dir) : dir_(std::move(report_dir)) {
  current_ = std::make_shared<const ReportBundle>(load_report((fs::path(dir_) / "report.json").string()));
}

std::shared_ptr<const ReportBundle> ReportService::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return current_;
}

HttpResponse ReportService::file(const std::string& relative, const std::string& content_type) const {
  const fs::path p = fs::path(dir_) / relative;
  std::ifstream in(p, std::ios::binary);
  if (!in) return error_response(404, "missing file " + relative);
  std::ostringstream buf;
  buf << in.rdbuf();
  return {200, content_type, buf.str()};
}

HttpResponse ReportService::handle(const HttpRequest& req) {
  static const std::regex slice_re(R"(^/api/slices/([^/]+)/(image|profile)$)");
  static const std::regex void_re(R"(^/api/voids/([^/]+)$)");
  static const std::regex label_re(R"(^/api/voids/([^/]+)/label$)");
  std::smatch m;

  if (req.method == "POST") {
    if (std::regex_match(req.path, m, label_re)) {
      const auto id = parse_id(m[1]);
      if (!id) return error_response(409, "void id '" + m[1].str() + "' is not in this report");
      return label(*id, req);
    }
    return error_response(404, "no route for POST " + req.path);
  }
  if (req.method != "GET") return error_response(405, "method not allowed");

  const auto rep = snapshot();
  if (req.path == "/api/report") return json_response(to_json(*rep));
  if (req.path == "/api/overlay") return json_response(overlay_json(*rep));
  if (req.path == "/api/slices") {
    json a = json::array();
    for (const auto& s : rep->slices) a.push_back(to_json(s));
    return json_response(a);
  }
  if (req.path == "/api/voids") {
    json a = json::array();
    for (const auto& v : rep->voids) a.push_back(to_json(v));
    return json_response(a);
  }
  if (std::regex_match(req.path, m, slice_re)) {
    const auto id = parse_id(m[1]);
    const SliceRecord* s = id ? rep->find_slice(*id) : nullptr;
    if (!s) return error_response(404, "unknown slice '" + m[1].str() + "'");
    if (m[2] == "image") return file(s->image, "image/x-portable-pixmap");
    return file(s->profile, "application/json");
  }
  if (std::regex_match(req.path, m, void_re)) {
    const auto id = parse_id(m[1]);
    const VoidRecord* v = id ? rep->find_void(*id) : nullptr;
    if (!v) return error_response(404, "unknown void '" + m[1].str() + "'");
    return json_response(to_json(*v));
  }
  return error_response(404, "no route for GET " + req.path);
}

HttpResponse ReportService::label(int void_id, const HttpRequest& req) {
  LabelRequest lr;
  try {
    lr = parse_label_request(req.body);
  } catch (const Error& e) {
    return error_response(400, e.what());
  }
  std::lock_guard write_lock(write_mu_);
  auto next = std::make_shared<ReportBundle>(*snapshot());
  if (!apply_label(*next, void_id, lr, req.analyst.empty() ? "anonymous" : req.analyst, utc_now_iso())) {
    return error_response(409, "void " + std::to_string(void_id) + " is not in this report");
  }
  try {
    save_report((fs::path(dir_) / "report.json").string(), *next);
    const std::string csv = export_table(*next);
    const fs::path tmp = fs::path(dir_) / "voids.csv.tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << csv;
    }
    fs::rename(tmp, fs::path(dir_) / "voids.csv");
  } catch (const std::exception& e) {
    return error_response(500, std::string("could not persist label: ") + e.what());
  }
  const json body = to_json(*next->find_void(void_id));
  {
    std::lock_guard lock(snapshot_mu_);
    current_ = std::move(next);
  }
  return json_response(body);
}

struct HttpServer::Impl {
  std::shared_ptr<ReportService> service;
  std::string host;
  int port = 0;
  httplib::Server server;
};

HttpServer::HttpServer(std::shared_ptr<ReportService> service, std::string host, int port)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  impl_->host = std::move(host);
  impl_->port = port;
  auto forward = [svc = impl_->service](const httplib::Request& in, httplib::Response& out) {
    HttpRequest req{in.method, in.path, in.body, in.get_header_value("X-Analyst")};
    const HttpResponse r = svc->handle(req);
    out.status = r.status;
    out.set_content(r.body, r.content_type);
  };
  impl_->server.Get(R"(/api/.*)", forward);
  impl_->server.Post(R"(/api/.*)", forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->host);
    if (impl_->port < 0) fail(Errc::Io, "cannot bind " + impl_->host);
  } else if (!impl_->server.bind_to_port(impl_->host, impl_->port)) {
    fail(Errc::Io, "cannot bind " + impl_->host + ":" + std::to_string(impl_->port));
  }
  return impl_->port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace rubblevoid
