#pragma once

// Socket-backed HttpTransport. Split from http.hpp so that translation
// units which only ever inject a fake transport do not compile the HTTP
// library.

#include <chrono>
#include <string>

#include "reviewkit/errors.hpp"
#include "reviewkit/http.hpp"

#include "httplib.h"

namespace reviewkit {

namespace detail {

// Splits "http://host:port/some/path" into the client base and the path.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    raise(ErrorKind::InvalidConfig, "endpoint needs a scheme: " + url);
  }
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace detail

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(int timeout_secs = 30) : timeout_secs_(timeout_secs) {}

  HttpResponse get(const std::string& url, const HttpHeaders& headers) override {
    auto [base, path] = detail::split_url(url);
    httplib::Client cli(base);
    configure(cli);
    auto res = cli.Get(path, to_httplib(headers));
    return convert(res, url);
  }

  HttpResponse post(const std::string& url, const HttpHeaders& headers,
                    const std::string& body, const std::string& content_type) override {
    auto [base, path] = detail::split_url(url);
    httplib::Client cli(base);
    configure(cli);
    auto res = cli.Post(path, to_httplib(headers), body, content_type);
    return convert(res, url);
  }

 private:
  void configure(httplib::Client& cli) const {
    cli.set_connection_timeout(timeout_secs_, 0);
    cli.set_read_timeout(timeout_secs_, 0);
    cli.set_write_timeout(timeout_secs_, 0);
  }

  static httplib::Headers to_httplib(const HttpHeaders& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers) out.emplace(k, v);
    return out;
  }

  static HttpResponse convert(const httplib::Result& res, const std::string& url) {
    if (!res) {
      raise(ErrorKind::TransportError,
            url + ": " + httplib::to_string(res.error()));
    }
    return HttpResponse{res->status, res->body};
  }

  int timeout_secs_;
};

}  // namespace reviewkit
