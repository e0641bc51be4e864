// The only translation unit that includes cpp-httplib.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "chartcycle/error.hpp"
#include "chartcycle/model_client.hpp"
#include "chartcycle/render.hpp"

#include <sstream>

namespace chartcycle {

namespace {

void set_timeouts(httplib::Client& client, std::chrono::milliseconds timeout) {
  const auto sec = static_cast<time_t>(timeout.count() / 1000);
  const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
}

}  // namespace

HttpResponse HttpTransport::post(const std::string& url, const std::string& body, const Headers& headers,
                                 std::chrono::milliseconds timeout) {
  const auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  if (!client.is_valid()) throw TransportError("unsupported URL: " + origin);
  set_timeouts(client, timeout);
  httplib::Headers h;
  std::string content_type = "application/json";
  for (const auto& [k, v] : headers) {
    if (k == "Content-Type") content_type = v;
    else h.emplace(k, v);
  }
  const auto res = client.Post(path, h, body, content_type);
  if (!res) throw TransportError(origin + ": " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

HttpRenderer::HttpRenderer(std::string url) : url_(std::move(url)) { split_url(url_); }

std::string HttpRenderer::describe() const { return "http: " + url_; }

RenderResult HttpRenderer::render_document(const std::string& document, const RenderOptions& options) {
  const auto [origin, path] = split_url(url_);
  httplib::Client client(origin);
  if (!client.is_valid()) throw RendererUnavailable("unsupported URL: " + origin);
  set_timeouts(client, options.timeout);
  std::ostringstream scale;
  scale << options.scale;
  const std::string target = path + (path.find('?') == std::string::npos ? "?" : "&") + "scale=" + scale.str();
  const auto res = client.Post(target, document, "application/json");
  if (!res) {
    if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write)
      throw Timeout("renderer at " + url_ + " did not answer in time");
    throw RendererUnavailable(url_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 200) {
    if (res->body.empty()) return {RenderStatus::runtime_error, {}, "empty body"};
    return {RenderStatus::ok, res->body, {}};
  }
  const RenderStatus s = res->status == 400 || res->status == 422 ? RenderStatus::compile_error : RenderStatus::runtime_error;
  return {s, {}, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500)};
}

}  // namespace chartcycle
