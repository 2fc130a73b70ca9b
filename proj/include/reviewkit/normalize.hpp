#pragma once

// Raw snapshot payloads -> normalized PaperRecords. Records that violate the
// venue schema are quarantined with a reason, never silently dropped, and a
// batch keeps going past individual bad records.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "reviewkit/core.hpp"
#include "reviewkit/paperlist.hpp"

namespace reviewkit {

/// Where a raw payload came from: hash of the exact bytes plus the capture
/// instant recorded by the fetcher.
struct RawContext {
  std::string payload_hash;
  UtcTime captured_at;
};

struct Quarantined {
  std::string paper_id;  // best-effort, may be empty when the id itself is bad
  ErrorKind kind = ErrorKind::SchemaViolation;
  std::string reason;
  nlohmann::json raw;
};

struct NormalizeResult {
  std::vector<PaperRecord> records;
  std::vector<Quarantined> quarantined;
};

namespace detail {

// Top-level keys the normalizer consumes. Anything else rides along in
// extras so re-normalizing an exported record is the identity.
inline const std::set<std::string>& consumed_record_keys() {
  static const std::set<std::string> keys = {
      "id", "paper_id", "venue", "year", "title", "primary_area", "keywords",
      "authors", "num_authors", "reviews", "num_reviews",
      "rating_avg", "rating_min", "rating_max", "rating_range",
      "confidence_avg", "confidence_min", "confidence_max", "dimension_avgs",
      "rating_pre_rebuttal", "rating_post_rebuttal", "rating_delta",
      "num_score_changes", "last_review_update",
      "decision", "final_status", "decision_raw", "withdrawn", "source",
      "consent", "ingested_at", "provenance_hash", "external_links", "extras",
  };
  return keys;
}

/// Score values arrive as JSON numbers, bare numeric strings, or the
/// "8: some label" form many review systems emit. Everything else fails.
inline std::optional<Decimal> parse_score_value(const nlohmann::json& v) {
  if (v.is_number_integer()) return Decimal::from_int(v.get<int64_t>());
  if (v.is_number_unsigned()) return Decimal::from_int(static_cast<int64_t>(v.get<uint64_t>()));
  if (v.is_number_float()) return Decimal::from_double(v.get<double>());
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    auto colon = s.find(':');
    if (colon != std::string::npos) s = s.substr(0, colon);
    while (!s.empty() && s.back() == ' ') s.pop_back();
    size_t start = s.find_first_not_of(' ');
    if (start == std::string::npos) return std::nullopt;
    return Decimal::parse(s.substr(start));
  }
  return std::nullopt;
}

inline std::string email_to_domain(const std::string& email) {
  auto at = email.rfind('@');
  if (at == std::string::npos) return email;
  return email.substr(at + 1);
}

inline std::string best_effort_id(const nlohmann::json& raw) {
  if (raw.is_object()) {
    if (raw.contains("paper_id") && raw.at("paper_id").is_string()) {
      return raw.at("paper_id").get<std::string>();
    }
    if (raw.contains("id") && raw.at("id").is_string()) return raw.at("id").get<std::string>();
  }
  return std::string();
}

}  // namespace detail

inline Review normalize_review(const nlohmann::json& rj, const VenueConfig& cfg,
                               UtcTime fallback_ts) {
  if (!rj.is_object()) raise(ErrorKind::SchemaViolation, "review is not an object");
  Review r;
  if (rj.contains("reviewer_id") && rj.at("reviewer_id").is_string()) {
    r.reviewer_id = rj.at("reviewer_id").get<std::string>();
  } else if (rj.contains("reviewer") && rj.at("reviewer").is_string()) {
    r.reviewer_id = rj.at("reviewer").get<std::string>();
  }
  if (r.reviewer_id.empty()) raise(ErrorKind::SchemaViolation, "review lacks a reviewer id");

  if (rj.contains("scores")) {
    if (!rj.at("scores").is_object()) raise(ErrorKind::SchemaViolation, "review scores must be an object");
    for (auto it = rj.at("scores").begin(); it != rj.at("scores").end(); ++it) {
      if (it.value().is_null()) continue;  // canonical form writes explicit nulls
      auto canonical = cfg.map_dimension(it.key());
      if (!canonical) {
        raise(ErrorKind::SchemaViolation, "unknown score dimension: " + it.key());
      }
      auto value = detail::parse_score_value(it.value());
      if (!value) {
        raise(ErrorKind::SchemaViolation, "unparsable score for " + it.key());
      }
      const Dimension* dim = cfg.schema.find(*canonical);
      if (dim == nullptr || !cfg.schema.on_grid(*dim, *value)) {
        raise(ErrorKind::SchemaViolation,
              "score " + value->str() + " off the " + *canonical + " scale");
      }
      if (r.scores.count(*canonical) != 0) {
        raise(ErrorKind::SchemaViolation, "two source fields map to " + *canonical);
      }
      r.scores[*canonical] = *value;
    }
  }

  if (rj.contains("text_lengths") && rj.at("text_lengths").is_object()) {
    for (auto it = rj.at("text_lengths").begin(); it != rj.at("text_lengths").end(); ++it) {
      if (!it.value().is_number_integer() && !it.value().is_number_unsigned()) {
        raise(ErrorKind::SchemaViolation, "text length for " + it.key() + " is not an integer");
      }
      r.text_lengths[it.key()] = it.value().get<int64_t>();
    }
  }

  const char* ts_key = rj.contains("updated_at") ? "updated_at"
                       : rj.contains("timestamp") ? "timestamp"
                                                  : nullptr;
  if (ts_key != nullptr && !rj.at(ts_key).is_null()) {
    auto t = UtcTime::parse(rj.at(ts_key).get<std::string>());
    if (!t) raise(ErrorKind::SchemaViolation, "bad review timestamp");
    r.timestamp = *t;
  } else {
    r.timestamp = fallback_ts;
  }
  return r;
}

inline AuthorEntry normalize_author(const nlohmann::json& aj, int position) {
  AuthorEntry a;
  a.position_index = position;
  if (aj.is_string()) {
    a.name = aj.get<std::string>();
    return a;
  }
  if (!aj.is_object()) raise(ErrorKind::SchemaViolation, "author entry is not an object");
  a.name = aj.value("name", std::string());
  if (a.name.empty()) raise(ErrorKind::SchemaViolation, "author lacks a name");
  if (aj.contains("affiliations") && !aj.at("affiliations").is_null()) {
    for (const auto& fj : aj.at("affiliations")) {
      Affiliation aff;
      if (fj.is_string()) {
        aff.institution = fj.get<std::string>();
      } else if (fj.is_object()) {
        aff.institution = fj.value("institution", std::string());
        aff.department = detail::opt_string(fj, "department");
        aff.country = detail::opt_string(fj, "country");
      } else {
        raise(ErrorKind::SchemaViolation, "affiliation entry for " + a.name + " is malformed");
      }
      if (aff.institution.empty()) {
        raise(ErrorKind::SchemaViolation, "affiliation without institution for " + a.name);
      }
      a.affiliations.push_back(std::move(aff));
    }
  }
  // Only the domain of an address is ever kept.
  if (aj.contains("email") && aj.at("email").is_string()) {
    a.email_domain = detail::email_to_domain(aj.at("email").get<std::string>());
  } else if (aj.contains("email_domain") && aj.at("email_domain").is_string()) {
    a.email_domain = aj.at("email_domain").get<std::string>();
  }
  a.position_index = aj.value("position", position);
  return a;
}

/// Normalize one raw paper object. Throws Error (UnknownStatusString or
/// SchemaViolation) when the record cannot be represented; batch callers
/// catch and quarantine.
inline PaperRecord normalize_record(const nlohmann::json& raw, const VenueConfig& cfg,
                                    const RawContext& ctx) {
  if (!raw.is_object()) raise(ErrorKind::SchemaViolation, "paper entry is not an object");
  PaperRecord r;
  r.paper_id = detail::best_effort_id(raw);
  if (r.paper_id.empty()) raise(ErrorKind::SchemaViolation, "paper lacks an id");
  r.venue = cfg.venue;
  r.year = cfg.year;
  r.title = raw.value("title", std::string());
  if (raw.contains("primary_area") && raw.at("primary_area").is_string()) {
    r.primary_area = raw.at("primary_area").get<std::string>();
  }
  if (raw.contains("keywords") && raw.at("keywords").is_array()) {
    for (const auto& k : raw.at("keywords")) {
      if (k.is_string()) r.keywords.push_back(k.get<std::string>());
    }
  }

  if (raw.contains("ingested_at") && raw.at("ingested_at").is_string()) {
    auto t = UtcTime::parse(raw.at("ingested_at").get<std::string>());
    if (!t) raise(ErrorKind::SchemaViolation, "bad ingested_at");
    r.ingested_at = *t;
  } else {
    r.ingested_at = ctx.captured_at;
  }

  if (raw.contains("authors") && raw.at("authors").is_array()) {
    int pos = 1;
    for (const auto& aj : raw.at("authors")) {
      r.authors.push_back(normalize_author(aj, pos));
      ++pos;
    }
  }
  if (raw.contains("reviews") && raw.at("reviews").is_array()) {
    for (const auto& rj : raw.at("reviews")) {
      r.reviews.push_back(normalize_review(rj, cfg, r.ingested_at));
    }
  }

  // Decision mapping. The source string is kept verbatim in decision_raw;
  // final_status comes from the config vocabulary (canonical names always
  // map to themselves). An exported record carries final_status directly.
  if (raw.contains("final_status") && raw.at("final_status").is_string()) {
    const std::string s = raw.at("final_status").get<std::string>();
    auto st = status_from_string(s);
    if (!st) raise(ErrorKind::UnknownStatusString, "final_status not canonical: " + s);
    r.final_status = *st;
    if (auto d = detail::opt_string(raw, "decision_raw")) r.decision_raw = *d;
  } else if (raw.contains("decision") && !raw.at("decision").is_null()) {
    if (!raw.at("decision").is_string()) {
      raise(ErrorKind::SchemaViolation, "decision must be a string");
    }
    r.decision_raw = raw.at("decision").get<std::string>();
    if (!r.decision_raw.empty()) {
      auto st = cfg.map_status(r.decision_raw);
      if (!st) {
        raise(ErrorKind::UnknownStatusString,
              "decision string not in vocabulary: " + r.decision_raw);
      }
      r.final_status = *st;
    }
  }

  if (raw.contains("withdrawn") && raw.at("withdrawn").is_boolean()) {
    r.withdrawn = raw.at("withdrawn").get<bool>();
  }
  if (r.final_status == DecisionStatus::Withdrawn) r.withdrawn = true;
  if (r.withdrawn) r.final_status = DecisionStatus::Withdrawn;

  if (raw.contains("source") && raw.at("source").is_string()) {
    auto sk = source_kind_from_string(raw.at("source").get<std::string>());
    if (!sk) raise(ErrorKind::SchemaViolation, "unknown source kind");
    r.source = *sk;
  } else {
    r.source = source_kind_for(cfg.source_kind);
  }

  if (raw.contains("consent") && !raw.at("consent").is_null()) {
    const auto& cj = raw.at("consent");
    if (!cj.is_object()) raise(ErrorKind::SchemaViolation, "consent must be an object");
    ConsentRecord c;
    c.aggregate_only = cj.value("aggregate_only", false);
    c.individual_display = cj.value("individual_display", false);
    if (!cj.contains("submitted_at")) {
      raise(ErrorKind::SchemaViolation, "consent lacks submitted_at");
    }
    auto t = UtcTime::parse(cj.at("submitted_at").get<std::string>());
    if (!t) raise(ErrorKind::SchemaViolation, "bad consent.submitted_at");
    c.submitted_at = *t;
    if (c.individual_display && c.aggregate_only) {
      raise(ErrorKind::SchemaViolation, "consent flags are contradictory");
    }
    r.consent = c;
  }

  if (raw.contains("external_links") && raw.at("external_links").is_array()) {
    for (const auto& l : raw.at("external_links")) {
      if (l.is_string()) r.external_links.push_back(l.get<std::string>());
    }
  }
  if (raw.contains("provenance_hash") && raw.at("provenance_hash").is_string()) {
    r.provenance_hash = raw.at("provenance_hash").get<std::string>();
  } else {
    r.provenance_hash = ctx.payload_hash;
  }

  auto grab_token = [&](const char* key) -> std::optional<std::string> {
    if (!raw.contains(key) || raw.at(key).is_null()) return std::nullopt;
    const auto& v = raw.at(key);
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  r.rating_pre_rebuttal = grab_token("rating_pre_rebuttal");
  r.rating_post_rebuttal = grab_token("rating_post_rebuttal");
  r.rating_delta = grab_token("rating_delta");
  if (raw.contains("num_score_changes") && !raw.at("num_score_changes").is_null()) {
    r.num_score_changes = raw.at("num_score_changes").get<int64_t>();
  }

  if (raw.contains("extras") && raw.at("extras").is_object()) {
    r.extras = raw.at("extras");
  }
  for (auto it = raw.begin(); it != raw.end(); ++it) {
    if (detail::consumed_record_keys().count(it.key()) == 0) {
      r.extras[it.key()] = it.value();
    }
  }
  return r;
}

/// Normalize a whole snapshot payload ({"venue","year","captured_at","papers"}).
/// Bad records go to the quarantine list with a reason; a malformed envelope
/// throws.
inline NormalizeResult normalize_payload(const nlohmann::json& payload, const VenueConfig& cfg,
                                         RawContext ctx) {
  if (!payload.is_object() || !payload.contains("papers") || !payload.at("papers").is_array()) {
    raise(ErrorKind::SchemaViolation, "payload lacks a papers array");
  }
  if (payload.contains("venue") && payload.at("venue").is_string() &&
      payload.at("venue").get<std::string>() != cfg.venue) {
    raise(ErrorKind::SchemaViolation,
          "payload venue " + payload.at("venue").get<std::string>() +
              " does not match config venue " + cfg.venue);
  }
  if (payload.contains("year") && payload.at("year").is_number_integer() &&
      payload.at("year").get<int>() != cfg.year) {
    raise(ErrorKind::SchemaViolation, "payload year does not match config year");
  }
  if (payload.contains("captured_at") && payload.at("captured_at").is_string()) {
    auto t = UtcTime::parse(payload.at("captured_at").get<std::string>());
    if (!t) raise(ErrorKind::SchemaViolation, "bad payload captured_at");
    ctx.captured_at = *t;
  }

  NormalizeResult out;
  for (const auto& pj : payload.at("papers")) {
    try {
      out.records.push_back(normalize_record(pj, cfg, ctx));
    } catch (const Error& e) {
      Quarantined q;
      q.paper_id = detail::best_effort_id(pj);
      q.kind = e.kind();
      q.reason = e.what();
      q.raw = pj;
      out.quarantined.push_back(std::move(q));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dedup

struct DedupResult {
  std::vector<PaperRecord> records;
  std::vector<std::string> conflicts;
  size_t dropped = 0;
};

namespace detail {

/// Recency order used to pick the surviving duplicate: newest review
/// activity first, then capture time, then content fingerprint so ties
/// break the same way on every platform.
struct DedupScore {
  int64_t review_ts;
  int64_t ingested;
  std::string fingerprint;

  static DedupScore of(const PaperRecord& r, const std::string& fp) {
    auto last = r.last_review_update();
    return {last ? last->secs : INT64_MIN, r.ingested_at.secs, fp};
  }

  bool newer_than(const DedupScore& o) const {
    if (review_ts != o.review_ts) return review_ts > o.review_ts;
    if (ingested != o.ingested) return ingested > o.ingested;
    return fingerprint > o.fingerprint;
  }
};

}  // namespace detail

/// Collapse duplicates of (venue, year, paper_id), keeping the record with
/// the newest review activity. A withdrawal seen on any duplicate sticks to
/// the survivor. Output is sorted by (venue, year, paper_id); disagreeing
/// final decisions among duplicates are reported in conflicts.
inline DedupResult dedup_records(std::vector<PaperRecord> input) {
  struct Slot {
    PaperRecord rec;
    detail::DedupScore score;
    bool any_withdrawn = false;
    std::set<std::string> statuses;
  };
  std::map<std::tuple<std::string, int, std::string>, Slot> by_key;
  DedupResult out;

  for (auto& r : input) {
    auto key = std::make_tuple(r.venue, r.year, r.paper_id);
    auto score = detail::DedupScore::of(r, record_fingerprint(r));
    bool withdrawn = r.withdrawn;
    std::string status = to_string(r.final_status);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      Slot slot{std::move(r), score, withdrawn, {status}};
      by_key.emplace(std::move(key), std::move(slot));
      continue;
    }
    out.dropped++;
    Slot& slot = it->second;
    slot.any_withdrawn = slot.any_withdrawn || withdrawn;
    slot.statuses.insert(status);
    if (score.newer_than(slot.score)) {
      slot.rec = std::move(r);
      slot.score = score;
    }
  }

  for (auto& [key, slot] : by_key) {
    if (slot.any_withdrawn) {
      slot.rec.withdrawn = true;
      slot.rec.final_status = DecisionStatus::Withdrawn;
    }
    if (slot.statuses.size() > 1) {
      std::string line = slot.rec.venue + "/" + std::to_string(slot.rec.year) + "/" +
                         slot.rec.paper_id + ": duplicates disagree on status (";
      bool first = true;
      for (const auto& s : slot.statuses) {
        if (!first) line += ", ";
        line += s;
        first = false;
      }
      line += "), kept " + std::string(to_string(slot.rec.final_status));
      out.conflicts.push_back(std::move(line));
    }
    out.records.push_back(std::move(slot.rec));
  }
  // std::map iteration already yields (venue, year, paper_id) order.
  return out;
}

}  // namespace reviewkit
