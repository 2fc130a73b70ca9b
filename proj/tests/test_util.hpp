#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reviewkit/errors.hpp"
#include "reviewkit/http.hpp"

namespace testutil {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(REVIEWKIT_TEST_DATA_DIR) / rel;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("missing test file: " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

/// Scratch directory unique to the calling test binary, wiped on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("reviewkit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Runs fn and reports which ErrorKind it raised (or nullopt).
template <typename Fn>
inline std::optional<reviewkit::ErrorKind> error_kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const reviewkit::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Transport double that records the last request and replays a scripted
/// response. Setting `replies` hands out one response per call in order
/// (the last repeats); otherwise every call gets `reply`.
class FakeTransport : public reviewkit::HttpTransport {
 public:
  reviewkit::HttpResponse reply{200, ""};
  std::vector<reviewkit::HttpResponse> replies;
  int calls = 0;
  std::string last_method;
  std::string last_url;
  std::string last_body;
  std::string last_content_type;
  reviewkit::HttpHeaders last_headers;

  reviewkit::HttpResponse get(const std::string& url,
                              const reviewkit::HttpHeaders& headers) override {
    last_method = "GET";
    last_url = url;
    last_body.clear();
    last_content_type.clear();
    last_headers = headers;
    return next_reply();
  }

  reviewkit::HttpResponse post(const std::string& url, const reviewkit::HttpHeaders& headers,
                               const std::string& body, const std::string& content_type) override {
    last_method = "POST";
    last_url = url;
    last_body = body;
    last_content_type = content_type;
    last_headers = headers;
    return next_reply();
  }

  std::optional<std::string> header(const std::string& name) const {
    for (const auto& [k, v] : last_headers) {
      if (k == name) return v;
    }
    return std::nullopt;
  }

 private:
  reviewkit::HttpResponse next_reply() {
    auto i = static_cast<size_t>(calls++);
    if (replies.empty()) return reply;
    return replies[i < replies.size() ? i : replies.size() - 1];
  }
};

/// Sets or clears REVIEW_ARCHIVE_TOKEN for one scope, restoring the prior
/// value afterwards.
class TokenGuard {
 public:
  explicit TokenGuard(const char* value) {
    const char* prev = std::getenv("REVIEW_ARCHIVE_TOKEN");
    if (prev != nullptr) saved_ = prev;
    apply(value);
  }
  ~TokenGuard() { apply(saved_ ? saved_->c_str() : nullptr); }

  TokenGuard(const TokenGuard&) = delete;
  TokenGuard& operator=(const TokenGuard&) = delete;

 private:
  static void apply(const char* value) {
    if (value != nullptr) {
      setenv("REVIEW_ARCHIVE_TOKEN", value, 1);
    } else {
      unsetenv("REVIEW_ARCHIVE_TOKEN");
    }
  }
  std::optional<std::string> saved_;
};

}  // namespace testutil
