#pragma once

#include <cstdint>
#include <cstdio>
#include <cmath>
#include <initializer_list>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "reviewkit/decimal.hpp"
#include "reviewkit/errors.hpp"

namespace reviewkit {

/// JSON document model with a bit-exact serializer.
///
/// Every file this toolkit emits (paperlists, archive lines, manifests,
/// reports) must be byte-identical given identical inputs, which rules out
/// trusting a third-party library's float formatting. The rules:
///   - object members keep insertion order (callers fix the key order);
///   - Decimal values print in canonical decimal form ("6", "6.5");
///   - RawNumber carries a pre-formatted numeric token verbatim (used for
///     exact rational means);
///   - other doubles print with "%.12g" ("inf"/"nan" become null);
///   - strings escape `"` `\` and control characters only, UTF-8 passthrough;
///   - compact form has no whitespace, pretty form indents by two spaces.
class JsonValue {
 public:
  struct RawNumber {
    std::string text;
  };
  using Array = std::vector<JsonValue>;
  struct Member;
  using Object = std::vector<Member>;

  JsonValue() : v_(nullptr) {}
  JsonValue(std::nullptr_t) : v_(nullptr) {}
  JsonValue(bool b) : v_(b) {}
  JsonValue(int v) : v_(static_cast<int64_t>(v)) {}
  JsonValue(int64_t v) : v_(v) {}
  JsonValue(double v) : v_(v) {}
  JsonValue(Decimal v) : v_(v) {}
  JsonValue(const char* s) : v_(std::string(s)) {}
  JsonValue(std::string s) : v_(std::move(s)) {}
  JsonValue(RawNumber n) : v_(std::move(n)) {}

  static JsonValue object() {
    JsonValue v;
    v.v_ = Object{};
    return v;
  }
  static JsonValue array() {
    JsonValue v;
    v.v_ = Array{};
    return v;
  }
  static JsonValue number_token(std::string text) { return JsonValue(RawNumber{std::move(text)}); }

  bool is_object() const { return std::holds_alternative<Object>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }
  bool is_null() const { return std::holds_alternative<std::nullptr_t>(v_); }

  JsonValue& set(std::string key, JsonValue value);
  void push(JsonValue value) { std::get<Array>(v_).push_back(std::move(value)); }

  Array& items() { return std::get<Array>(v_); }
  const Array& items() const { return std::get<Array>(v_); }
  Object& members();
  const Object& members() const;

  std::string dump_compact() const {
    std::string out;
    write(out, -1, 0);
    return out;
  }

  /// Pretty form, 2-space indent, trailing newline.
  std::string dump_pretty() const {
    std::string out;
    write(out, 2, 0);
    out.push_back('\n');
    return out;
  }

  static void escape_into(std::string& out, std::string_view s) {
    out.push_back('"');
    for (unsigned char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\b': out += "\\b"; break;
        case '\f': out += "\\f"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
          if (c < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out += buf;
          } else {
            out.push_back(static_cast<char>(c));
          }
      }
    }
    out.push_back('"');
  }

  /// Converts parsed input (configs, raw payloads) into this model. Object
  /// keys arrive sorted when parsed with nlohmann::json's default map, which
  /// is the canonical order for preserved pass-through data.
  static JsonValue from_parsed(const nlohmann::json& j) {
    switch (j.type()) {
      case nlohmann::json::value_t::null: return JsonValue(nullptr);
      case nlohmann::json::value_t::boolean: return JsonValue(j.get<bool>());
      case nlohmann::json::value_t::number_integer: return JsonValue(j.get<int64_t>());
      case nlohmann::json::value_t::number_unsigned:
        return JsonValue(static_cast<int64_t>(j.get<uint64_t>()));
      case nlohmann::json::value_t::number_float: return JsonValue(j.get<double>());
      case nlohmann::json::value_t::string: return JsonValue(j.get<std::string>());
      case nlohmann::json::value_t::array: {
        JsonValue a = array();
        for (const auto& item : j) a.push(from_parsed(item));
        return a;
      }
      case nlohmann::json::value_t::object: {
        JsonValue o = object();
        for (auto it = j.begin(); it != j.end(); ++it) o.set(it.key(), from_parsed(it.value()));
        return o;
      }
      default: return JsonValue(nullptr);
    }
  }

 private:
  void write(std::string& out, int indent, int depth) const;

  std::variant<std::nullptr_t, bool, int64_t, double, Decimal, RawNumber, std::string, Array,
               Object>
      v_;
};

struct JsonValue::Member {
  std::string key;
  JsonValue value;
};

inline JsonValue& JsonValue::set(std::string key, JsonValue value) {
  std::get<Object>(v_).push_back(Member{std::move(key), std::move(value)});
  return *this;
}

inline JsonValue::Object& JsonValue::members() { return std::get<Object>(v_); }
inline const JsonValue::Object& JsonValue::members() const { return std::get<Object>(v_); }

inline void JsonValue::write(std::string& out, int indent, int depth) const {
  auto newline_pad = [&](int d) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<size_t>(indent * d), ' ');
  };
  if (std::holds_alternative<std::nullptr_t>(v_)) {
    out += "null";
  } else if (const bool* b = std::get_if<bool>(&v_)) {
    out += *b ? "true" : "false";
  } else if (const int64_t* i = std::get_if<int64_t>(&v_)) {
    out += std::to_string(*i);
  } else if (const double* d = std::get_if<double>(&v_)) {
    if (!std::isfinite(*d)) {
      out += "null";
    } else {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.12g", *d);
      out += buf;
    }
  } else if (const Decimal* dec = std::get_if<Decimal>(&v_)) {
    out += dec->str();
  } else if (const RawNumber* raw = std::get_if<RawNumber>(&v_)) {
    out += raw->text;
  } else if (const std::string* s = std::get_if<std::string>(&v_)) {
    escape_into(out, *s);
  } else if (const Array* a = std::get_if<Array>(&v_)) {
    if (a->empty()) {
      out += "[]";
      return;
    }
    out.push_back('[');
    for (size_t i = 0; i < a->size(); ++i) {
      if (i > 0) out.push_back(',');
      newline_pad(depth + 1);
      (*a)[i].write(out, indent, depth + 1);
    }
    newline_pad(depth);
    out.push_back(']');
  } else if (const Object* o = std::get_if<Object>(&v_)) {
    if (o->empty()) {
      out += "{}";
      return;
    }
    out.push_back('{');
    for (size_t i = 0; i < o->size(); ++i) {
      if (i > 0) out.push_back(',');
      newline_pad(depth + 1);
      escape_into(out, (*o)[i].key);
      out.push_back(':');
      if (indent >= 0) out.push_back(' ');
      (*o)[i].value.write(out, indent, depth + 1);
    }
    newline_pad(depth);
    out.push_back('}');
  }
}

inline nlohmann::json parse_json(std::string_view text, const std::string& what) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) raise(ErrorKind::ParseFailure, "invalid JSON in " + what);
  return j;
}

}  // namespace reviewkit
