#pragma once

// Minimal HTTP abstraction so everything network-facing can run against a
// fake in tests. The real socket-backed implementation lives in
// http_client.hpp; only code that constructs it pays for the HTTP library.

#include <cstdlib>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace reviewkit {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url, const HttpHeaders& headers) = 0;
  virtual HttpResponse post(const std::string& url, const HttpHeaders& headers,
                            const std::string& body, const std::string& content_type) = 0;
};

/// Reads the archive API token from the environment. Credentials never live
/// in config files; callers add the Authorization header themselves so a
/// fake transport sees exactly what the wire would.
inline std::optional<std::string> api_token() {
  const char* tok = std::getenv("REVIEW_ARCHIVE_TOKEN");
  if (tok == nullptr || *tok == '\0') return std::nullopt;
  return std::string(tok);
}

}  // namespace reviewkit
