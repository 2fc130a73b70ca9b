#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reviewkit/decimal.hpp"
#include "reviewkit/errors.hpp"
#include "reviewkit/jsonio.hpp"
#include "reviewkit/time.hpp"

namespace reviewkit {

// ---------------------------------------------------------------------------
// Decision status

/// Final decision of a paper. The four decision tiers carry a total order
/// Reject < Poster < Spotlight < Oral; the remaining states are tracked for
/// dynamics views but are not tiers (entropy and acceptance statistics
/// exclude them).
enum class DecisionStatus {
  Reject = 0,
  Poster = 1,
  Spotlight = 2,
  Oral = 3,
  Withdrawn = 4,
  DeskReject = 5,
  Unknown = 6,
};

inline bool is_tier(DecisionStatus s) {
  return s == DecisionStatus::Reject || s == DecisionStatus::Poster ||
         s == DecisionStatus::Spotlight || s == DecisionStatus::Oral;
}

/// Rank within the tier order, 0..3; -1 for non-tier states.
inline int tier_rank(DecisionStatus s) {
  return is_tier(s) ? static_cast<int>(s) : -1;
}

inline bool is_accepted(DecisionStatus s) {
  return s == DecisionStatus::Poster || s == DecisionStatus::Spotlight ||
         s == DecisionStatus::Oral;
}

inline const char* to_string(DecisionStatus s) {
  switch (s) {
    case DecisionStatus::Reject: return "Reject";
    case DecisionStatus::Poster: return "Poster";
    case DecisionStatus::Spotlight: return "Spotlight";
    case DecisionStatus::Oral: return "Oral";
    case DecisionStatus::Withdrawn: return "Withdrawn";
    case DecisionStatus::DeskReject: return "Desk-Reject";
    case DecisionStatus::Unknown: return "Unknown";
  }
  return "Unknown";
}

inline std::optional<DecisionStatus> status_from_string(std::string_view s) {
  if (s == "Reject") return DecisionStatus::Reject;
  if (s == "Poster") return DecisionStatus::Poster;
  if (s == "Spotlight") return DecisionStatus::Spotlight;
  if (s == "Oral") return DecisionStatus::Oral;
  if (s == "Withdrawn") return DecisionStatus::Withdrawn;
  if (s == "Desk-Reject") return DecisionStatus::DeskReject;
  if (s == "Unknown") return DecisionStatus::Unknown;
  return std::nullopt;
}

inline constexpr int kTierCount = 4;

// ---------------------------------------------------------------------------
// Review dimension schema

struct Dimension {
  std::string name;
  Decimal scale_min;
  Decimal scale_max;
  Decimal step;
};

/// Per venue-year score schema. A value is valid for a dimension when it lies
/// on the grid {min, min+step, ..., max}.
struct ReviewDimensionSchema {
  std::vector<Dimension> dimensions;

  const Dimension* find(std::string_view name) const {
    for (const auto& d : dimensions) {
      if (d.name == name) return &d;
    }
    return nullptr;
  }

  bool on_grid(const Dimension& d, Decimal v) const {
    if (v < d.scale_min || v > d.scale_max) return false;
    int64_t offset = v.micros() - d.scale_min.micros();
    return offset % d.step.micros() == 0;
  }

  void validate() const {
    for (const auto& d : dimensions) {
      if (d.name.empty()) raise(ErrorKind::InvalidConfig, "schema dimension with empty name");
      if (!(d.scale_min < d.scale_max)) {
        raise(ErrorKind::InvalidConfig, "dimension " + d.name + ": scale_min must be < scale_max");
      }
      if (d.step.micros() <= 0) {
        raise(ErrorKind::InvalidConfig, "dimension " + d.name + ": step must be > 0");
      }
    }
    for (size_t i = 0; i < dimensions.size(); ++i) {
      for (size_t j = i + 1; j < dimensions.size(); ++j) {
        if (dimensions[i].name == dimensions[j].name) {
          raise(ErrorKind::InvalidConfig, "duplicate dimension " + dimensions[i].name);
        }
      }
    }
  }
};

inline constexpr const char* kRatingDimension = "rating";
inline constexpr const char* kConfidenceDimension = "confidence";

// ---------------------------------------------------------------------------
// Reviews, authors, consent

struct Review {
  std::string reviewer_id;  // opaque, already anonymized at the source
  std::map<std::string, Decimal> scores;
  std::map<std::string, int64_t> text_lengths;
  UtcTime timestamp;
};

struct Affiliation {
  std::string institution;
  std::optional<std::string> department;
  std::optional<std::string> country;
};

struct AuthorEntry {
  std::string name;
  std::vector<Affiliation> affiliations;
  std::optional<std::string> email_domain;
  int position_index = 1;  // 1-based
};

struct ConsentRecord {
  bool aggregate_only = false;
  bool individual_display = false;
  UtcTime submitted_at;

  void validate() const {
    if (individual_display && aggregate_only) {
      raise(ErrorKind::InvalidConfig, "consent: individual_display implies not aggregate_only");
    }
  }
};

enum class SourceKind { OfficialAPI, Scraped, CommunitySubmitted };

inline const char* to_string(SourceKind s) {
  switch (s) {
    case SourceKind::OfficialAPI: return "OfficialAPI";
    case SourceKind::Scraped: return "Scraped";
    case SourceKind::CommunitySubmitted: return "CommunitySubmitted";
  }
  return "OfficialAPI";
}

inline std::optional<SourceKind> source_kind_from_string(std::string_view s) {
  if (s == "OfficialAPI") return SourceKind::OfficialAPI;
  if (s == "Scraped") return SourceKind::Scraped;
  if (s == "CommunitySubmitted") return SourceKind::CommunitySubmitted;
  return std::nullopt;
}

/// Provenance label used in release manifests.
inline const char* provenance_label(SourceKind s) {
  switch (s) {
    case SourceKind::OfficialAPI: return "Official API";
    case SourceKind::Scraped: return "Scraped";
    case SourceKind::CommunitySubmitted: return "Community-Submitted";
  }
  return "Official API";
}

// ---------------------------------------------------------------------------
// Paper record

/// One paper's normalized metadata, reviews, decision, and provenance.
/// Serialized to the canonical 32-key paperlist form (see paperlist.hpp).
struct PaperRecord {
  std::string paper_id;
  std::string venue;
  int year = 0;
  std::string title;
  std::string primary_area;
  std::vector<std::string> keywords;
  std::vector<AuthorEntry> authors;
  std::vector<Review> reviews;
  DecisionStatus final_status = DecisionStatus::Unknown;
  std::string decision_raw;
  bool withdrawn = false;
  SourceKind source = SourceKind::OfficialAPI;
  std::optional<ConsentRecord> consent;
  std::vector<std::string> external_links;
  std::string provenance_hash;  // sha256 of the raw payload this record came from
  UtcTime ingested_at;

  // Rebuttal dynamics, filled from the snapshot archive (or community rows)
  // at export time. Stored as canonical decimal tokens so re-normalizing an
  // exported record is the identity.
  std::optional<std::string> rating_pre_rebuttal;
  std::optional<std::string> rating_post_rebuttal;
  std::optional<std::string> rating_delta;
  std::optional<int64_t> num_score_changes;

  // Source fields that have no canonical slot, preserved verbatim
  // (keys sorted).
  nlohmann::json extras = nlohmann::json::object();

  MeanAccumulator dimension_mean(std::string_view dim) const {
    MeanAccumulator acc;
    for (const auto& r : reviews) {
      auto it = r.scores.find(std::string(dim));
      if (it != r.scores.end()) acc.add(it->second);
    }
    return acc;
  }

  std::optional<Decimal> dimension_min(std::string_view dim) const {
    std::optional<Decimal> out;
    for (const auto& r : reviews) {
      auto it = r.scores.find(std::string(dim));
      if (it == r.scores.end()) continue;
      if (!out || it->second < *out) out = it->second;
    }
    return out;
  }

  std::optional<Decimal> dimension_max(std::string_view dim) const {
    std::optional<Decimal> out;
    for (const auto& r : reviews) {
      auto it = r.scores.find(std::string(dim));
      if (it == r.scores.end()) continue;
      if (!out || it->second > *out) out = it->second;
    }
    return out;
  }

  MeanAccumulator rating_mean() const { return dimension_mean(kRatingDimension); }

  std::optional<UtcTime> last_review_update() const {
    std::optional<UtcTime> out;
    for (const auto& r : reviews) {
      if (!out || r.timestamp > *out) out = r.timestamp;
    }
    return out;
  }

  /// Union of dimension names scored by any review, sorted.
  std::vector<std::string> scored_dimensions() const {
    std::vector<std::string> dims;
    for (const auto& r : reviews) {
      for (const auto& [name, v] : r.scores) {
        if (std::find(dims.begin(), dims.end(), name) == dims.end()) dims.push_back(name);
      }
    }
    std::sort(dims.begin(), dims.end());
    return dims;
  }
};

// ---------------------------------------------------------------------------
// Venue configuration

enum class SourceClass { ApiConnector, StaticProceedings, CommunityForm };

inline const char* to_string(SourceClass c) {
  switch (c) {
    case SourceClass::ApiConnector: return "ApiConnector";
    case SourceClass::StaticProceedings: return "StaticProceedings";
    case SourceClass::CommunityForm: return "CommunityForm";
  }
  return "ApiConnector";
}

inline std::optional<SourceClass> source_class_from_string(std::string_view s) {
  if (s == "ApiConnector") return SourceClass::ApiConnector;
  if (s == "StaticProceedings") return SourceClass::StaticProceedings;
  if (s == "CommunityForm") return SourceClass::CommunityForm;
  return std::nullopt;
}

inline SourceKind source_kind_for(SourceClass c) {
  switch (c) {
    case SourceClass::ApiConnector: return SourceKind::OfficialAPI;
    case SourceClass::StaticProceedings: return SourceKind::Scraped;
    case SourceClass::CommunityForm: return SourceKind::CommunitySubmitted;
  }
  return SourceKind::OfficialAPI;
}

struct PhaseDates {
  UtcTime review_release;
  UtcTime discussion_start;
  UtcTime discussion_end;
  UtcTime decision;

  void validate() const {
    if (!(review_release < discussion_start && discussion_start < discussion_end &&
          discussion_end < decision)) {
      raise(ErrorKind::InvalidConfig, "phase dates must be strictly increasing");
    }
  }
};

struct RetryPolicy {
  int max_attempts = 3;
  int64_t backoff_base_ms = 1000;
};

/// Declarative description of one venue-year: where the data comes from,
/// what the score schema looks like, when the phases run, and how the
/// source's decision strings map onto the canonical status set.
struct VenueConfig {
  std::string venue;
  int year = 0;
  SourceClass source_kind = SourceClass::StaticProceedings;
  std::string endpoint;  // URL for ApiConnector, path for file-backed sources
  ReviewDimensionSchema schema;
  std::map<std::string, std::string> dimension_aliases;  // source name -> canonical name
  std::optional<PhaseDates> phase_dates;
  std::map<std::string, DecisionStatus> status_vocabulary;
  int64_t cadence_hours = 24;
  int64_t min_request_interval_ms = 2000;
  RetryPolicy retry;

  /// Canonical status names always map to themselves so normalization is
  /// idempotent; config entries may add source-specific spellings.
  std::optional<DecisionStatus> map_status(const std::string& s) const {
    auto it = status_vocabulary.find(s);
    if (it != status_vocabulary.end()) return it->second;
    return status_from_string(s);
  }

  /// Source dimension name -> canonical schema name. Unknown names map to
  /// nothing (the caller decides whether that is a violation).
  std::optional<std::string> map_dimension(const std::string& name) const {
    auto it = dimension_aliases.find(name);
    if (it != dimension_aliases.end()) return it->second;
    if (schema.find(name) != nullptr) return name;
    return std::nullopt;
  }

  void validate() const {
    if (venue.empty()) raise(ErrorKind::InvalidConfig, "venue must be non-empty");
    if (year <= 0) raise(ErrorKind::InvalidConfig, "year must be positive");
    schema.validate();
    if (phase_dates) phase_dates->validate();
    for (const auto& [alias, target] : dimension_aliases) {
      if (schema.find(target) == nullptr) {
        raise(ErrorKind::InvalidConfig, "dimension alias target not in schema: " + target);
      }
    }
    if (retry.max_attempts < 1) raise(ErrorKind::InvalidConfig, "retry.max_attempts must be >= 1");
    if (retry.backoff_base_ms <= 0) raise(ErrorKind::InvalidConfig, "retry.backoff_base_ms must be > 0");
    if (min_request_interval_ms < 0) {
      raise(ErrorKind::InvalidConfig, "min_request_interval_ms must be >= 0");
    }
  }

  static VenueConfig from_json(const nlohmann::json& j);
  static VenueConfig load(const std::filesystem::path& path);

  nlohmann::json to_json() const;
};

namespace detail {

inline Decimal decimal_from_json(const nlohmann::json& j, const std::string& what) {
  if (j.is_number_integer()) return Decimal::from_int(j.get<int64_t>());
  if (j.is_number_unsigned()) return Decimal::from_int(static_cast<int64_t>(j.get<uint64_t>()));
  if (j.is_number_float()) return Decimal::from_double(j.get<double>());
  if (j.is_string()) {
    auto d = Decimal::parse(j.get<std::string>());
    if (d) return *d;
  }
  raise(ErrorKind::ParseFailure, "expected decimal for " + what);
}

inline UtcTime time_from_json(const nlohmann::json& j, const std::string& what) {
  if (j.is_string()) {
    auto t = UtcTime::parse(j.get<std::string>());
    if (t) return *t;
  }
  raise(ErrorKind::ParseFailure, "expected ISO-8601 UTC instant for " + what);
}

}  // namespace detail

inline VenueConfig VenueConfig::from_json(const nlohmann::json& j) {
  VenueConfig cfg;
  if (!j.is_object()) raise(ErrorKind::InvalidConfig, "venue config must be a JSON object");
  cfg.venue = j.value("venue", std::string());
  cfg.year = j.value("year", 0);
  if (j.contains("source_kind")) {
    auto sc = source_class_from_string(j.at("source_kind").get<std::string>());
    if (!sc) {
      raise(ErrorKind::InvalidConfig,
            "unknown source_kind: " + j.at("source_kind").get<std::string>());
    }
    cfg.source_kind = *sc;
  }
  cfg.endpoint = j.value("endpoint", std::string());
  if (j.contains("schema") && j.at("schema").contains("dimensions")) {
    for (const auto& d : j.at("schema").at("dimensions")) {
      Dimension dim;
      dim.name = d.at("name").get<std::string>();
      dim.scale_min = detail::decimal_from_json(d.at("min"), dim.name + ".min");
      dim.scale_max = detail::decimal_from_json(d.at("max"), dim.name + ".max");
      dim.step = detail::decimal_from_json(d.at("step"), dim.name + ".step");
      cfg.schema.dimensions.push_back(std::move(dim));
    }
  }
  if (j.contains("dimension_aliases")) {
    for (auto it = j.at("dimension_aliases").begin(); it != j.at("dimension_aliases").end(); ++it) {
      cfg.dimension_aliases[it.key()] = it.value().get<std::string>();
    }
  }
  if (j.contains("phase_dates") && !j.at("phase_dates").is_null()) {
    const auto& p = j.at("phase_dates");
    PhaseDates dates;
    dates.review_release = detail::time_from_json(p.at("review_release"), "review_release");
    dates.discussion_start = detail::time_from_json(p.at("discussion_start"), "discussion_start");
    dates.discussion_end = detail::time_from_json(p.at("discussion_end"), "discussion_end");
    dates.decision = detail::time_from_json(p.at("decision"), "decision");
    cfg.phase_dates = dates;
  }
  if (j.contains("status_vocabulary")) {
    for (auto it = j.at("status_vocabulary").begin(); it != j.at("status_vocabulary").end(); ++it) {
      auto st = status_from_string(it.value().get<std::string>());
      if (!st) {
        raise(ErrorKind::InvalidConfig,
              "status_vocabulary value is not a canonical status: " +
                  it.value().get<std::string>());
      }
      cfg.status_vocabulary[it.key()] = *st;
    }
  }
  cfg.cadence_hours = j.value("cadence_hours", int64_t{24});
  cfg.min_request_interval_ms = j.value("min_request_interval_ms", int64_t{2000});
  if (j.contains("retry")) {
    cfg.retry.max_attempts = j.at("retry").value("max_attempts", 3);
    cfg.retry.backoff_base_ms = j.at("retry").value("backoff_base_ms", int64_t{1000});
  }
  cfg.validate();
  return cfg;
}

inline VenueConfig VenueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoFailure, "cannot open venue config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(parse_json(ss.str(), path.string()));
}

inline nlohmann::json VenueConfig::to_json() const {
  nlohmann::json j;
  j["venue"] = venue;
  j["year"] = year;
  j["source_kind"] = to_string(source_kind);
  j["endpoint"] = endpoint;
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : schema.dimensions) {
    nlohmann::json dj;
    dj["name"] = d.name;
    dj["min"] = d.scale_min.str();
    dj["max"] = d.scale_max.str();
    dj["step"] = d.step.str();
    dims.push_back(dj);
  }
  j["schema"]["dimensions"] = dims;
  if (!dimension_aliases.empty()) {
    for (const auto& [k, v] : dimension_aliases) j["dimension_aliases"][k] = v;
  }
  if (phase_dates) {
    j["phase_dates"]["review_release"] = phase_dates->review_release.str();
    j["phase_dates"]["discussion_start"] = phase_dates->discussion_start.str();
    j["phase_dates"]["discussion_end"] = phase_dates->discussion_end.str();
    j["phase_dates"]["decision"] = phase_dates->decision.str();
  } else {
    j["phase_dates"] = nullptr;
  }
  nlohmann::json vocab = nlohmann::json::object();
  for (const auto& [k, v] : status_vocabulary) vocab[k] = to_string(v);
  j["status_vocabulary"] = vocab;
  j["cadence_hours"] = cadence_hours;
  j["min_request_interval_ms"] = min_request_interval_ms;
  j["retry"]["max_attempts"] = retry.max_attempts;
  j["retry"]["backoff_base_ms"] = retry.backoff_base_ms;
  return j;
}

}  // namespace reviewkit
