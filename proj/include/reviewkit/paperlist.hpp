#pragma once

// Canonical paperlist serialization. Every export of a PaperRecord uses the
// same 32 top-level keys in the same order, so paperlist files are
// byte-for-byte reproducible and diffable across releases. Aggregates
// (means, mins, ranges) are recomputed from the reviews at write time and
// never trusted from input.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "reviewkit/core.hpp"
#include "reviewkit/digest.hpp"

namespace reviewkit {

namespace detail {

/// Dimension universe for a record: schema dimensions (when a schema is
/// given) plus anything actually scored, sorted. Reviews emit an explicit
/// null for universe dimensions they did not score.
inline std::vector<std::string> dimension_universe(const PaperRecord& r,
                                                   const ReviewDimensionSchema* schema) {
  std::set<std::string> names;
  if (schema != nullptr) {
    for (const auto& d : schema->dimensions) names.insert(d.name);
  }
  for (const auto& rev : r.reviews) {
    for (const auto& [name, v] : rev.scores) names.insert(name);
  }
  return {names.begin(), names.end()};
}

inline JsonValue mean_or_null(const MeanAccumulator& acc) {
  if (acc.empty()) return JsonValue(nullptr);
  return JsonValue::number_token(format_mean(acc));
}

inline JsonValue decimal_or_null(const std::optional<Decimal>& d) {
  if (!d) return JsonValue(nullptr);
  return JsonValue(*d);
}

}  // namespace detail

inline JsonValue author_to_json(const AuthorEntry& a) {
  JsonValue out = JsonValue::object();
  out.set("name", JsonValue(a.name));
  JsonValue affs = JsonValue::array();
  for (const auto& aff : a.affiliations) {
    JsonValue av = JsonValue::object();
    av.set("institution", JsonValue(aff.institution));
    av.set("department", aff.department ? JsonValue(*aff.department) : JsonValue(nullptr));
    av.set("country", aff.country ? JsonValue(*aff.country) : JsonValue(nullptr));
    affs.push(std::move(av));
  }
  out.set("affiliations", std::move(affs));
  out.set("email_domain", a.email_domain ? JsonValue(*a.email_domain) : JsonValue(nullptr));
  out.set("position", JsonValue(int64_t{a.position_index}));
  return out;
}

inline JsonValue review_to_json(const Review& r, const std::vector<std::string>& universe) {
  JsonValue out = JsonValue::object();
  out.set("reviewer_id", JsonValue(r.reviewer_id));
  JsonValue scores = JsonValue::object();
  for (const auto& dim : universe) {
    auto it = r.scores.find(dim);
    scores.set(dim, it == r.scores.end() ? JsonValue(nullptr) : JsonValue(it->second));
  }
  out.set("scores", std::move(scores));
  if (r.text_lengths.empty()) {
    out.set("text_lengths", JsonValue(nullptr));
  } else {
    JsonValue tl = JsonValue::object();
    for (const auto& [section, n] : r.text_lengths) tl.set(section, JsonValue(n));
    out.set("text_lengths", std::move(tl));
  }
  out.set("timestamp", JsonValue(r.timestamp.str()));
  return out;
}

/// The canonical 32-key record form.
inline JsonValue record_to_json(const PaperRecord& r,
                                const ReviewDimensionSchema* schema = nullptr) {
  auto universe = detail::dimension_universe(r, schema);

  JsonValue out = JsonValue::object();
  out.set("paper_id", JsonValue(r.paper_id));
  out.set("venue", JsonValue(r.venue));
  out.set("year", JsonValue(int64_t{r.year}));
  out.set("title", JsonValue(r.title));
  out.set("primary_area", r.primary_area.empty() ? JsonValue(nullptr) : JsonValue(r.primary_area));

  JsonValue kw = JsonValue::array();
  for (const auto& k : r.keywords) kw.push(JsonValue(k));
  out.set("keywords", std::move(kw));

  JsonValue authors = JsonValue::array();
  for (const auto& a : r.authors) authors.push(author_to_json(a));
  out.set("authors", std::move(authors));
  out.set("num_authors", JsonValue(static_cast<int64_t>(r.authors.size())));

  JsonValue reviews = JsonValue::array();
  for (const auto& rev : r.reviews) reviews.push(review_to_json(rev, universe));
  out.set("reviews", std::move(reviews));
  out.set("num_reviews", JsonValue(static_cast<int64_t>(r.reviews.size())));

  auto rating = r.rating_mean();
  out.set("rating_avg", detail::mean_or_null(rating));
  auto rmin = r.dimension_min(kRatingDimension);
  auto rmax = r.dimension_max(kRatingDimension);
  out.set("rating_min", detail::decimal_or_null(rmin));
  out.set("rating_max", detail::decimal_or_null(rmax));
  out.set("rating_range",
          (rmin && rmax) ? JsonValue(*rmax - *rmin) : JsonValue(nullptr));

  out.set("confidence_avg", detail::mean_or_null(r.dimension_mean(kConfidenceDimension)));
  out.set("confidence_min", detail::decimal_or_null(r.dimension_min(kConfidenceDimension)));
  out.set("confidence_max", detail::decimal_or_null(r.dimension_max(kConfidenceDimension)));

  JsonValue dim_avgs = JsonValue::object();
  for (const auto& dim : universe) {
    if (dim == kRatingDimension || dim == kConfidenceDimension) continue;
    dim_avgs.set(dim, detail::mean_or_null(r.dimension_mean(dim)));
  }
  out.set("dimension_avgs", std::move(dim_avgs));

  out.set("rating_pre_rebuttal", r.rating_pre_rebuttal
                                     ? JsonValue::number_token(*r.rating_pre_rebuttal)
                                     : JsonValue(nullptr));
  out.set("rating_post_rebuttal", r.rating_post_rebuttal
                                      ? JsonValue::number_token(*r.rating_post_rebuttal)
                                      : JsonValue(nullptr));
  out.set("rating_delta",
          r.rating_delta ? JsonValue::number_token(*r.rating_delta) : JsonValue(nullptr));
  out.set("num_score_changes",
          r.num_score_changes ? JsonValue(*r.num_score_changes) : JsonValue(nullptr));

  auto last = r.last_review_update();
  out.set("last_review_update", last ? JsonValue(last->str()) : JsonValue(nullptr));

  out.set("final_status", JsonValue(to_string(r.final_status)));
  out.set("decision_raw", r.decision_raw.empty() ? JsonValue(nullptr) : JsonValue(r.decision_raw));
  out.set("withdrawn", JsonValue(r.withdrawn));
  out.set("source", JsonValue(to_string(r.source)));

  if (r.consent) {
    JsonValue c = JsonValue::object();
    c.set("aggregate_only", JsonValue(r.consent->aggregate_only));
    c.set("individual_display", JsonValue(r.consent->individual_display));
    c.set("submitted_at", JsonValue(r.consent->submitted_at.str()));
    out.set("consent", std::move(c));
  } else {
    out.set("consent", JsonValue(nullptr));
  }

  out.set("ingested_at", JsonValue(r.ingested_at.str()));
  out.set("provenance_hash",
          r.provenance_hash.empty() ? JsonValue(nullptr) : JsonValue(r.provenance_hash));

  JsonValue links = JsonValue::array();
  for (const auto& l : r.external_links) links.push(JsonValue(l));
  out.set("external_links", std::move(links));

  out.set("extras", JsonValue::from_parsed(r.extras));
  return out;
}

/// Content fingerprint of a record, independent of serialization schema
/// context (no explicit nulls injected for unscored schema dimensions).
inline std::string record_fingerprint(const PaperRecord& r) {
  return sha256_hex(record_to_json(r, nullptr).dump_compact());
}

/// Paperlist file: {"venue", "year", "papers": [...]} with papers ordered by
/// paper_id. Pretty-printed so releases diff cleanly.
inline std::string paperlist_to_string(const std::string& venue, int year,
                                       std::vector<const PaperRecord*> records,
                                       const ReviewDimensionSchema* schema = nullptr) {
  std::sort(records.begin(), records.end(),
            [](const PaperRecord* a, const PaperRecord* b) { return a->paper_id < b->paper_id; });
  JsonValue root = JsonValue::object();
  root.set("venue", JsonValue(venue));
  root.set("year", JsonValue(int64_t{year}));
  JsonValue papers = JsonValue::array();
  for (const auto* r : records) papers.push(record_to_json(*r, schema));
  root.set("papers", std::move(papers));
  return root.dump_pretty();
}

inline std::string paperlist_to_string(const std::string& venue, int year,
                                       const std::vector<PaperRecord>& records,
                                       const ReviewDimensionSchema* schema = nullptr) {
  std::vector<const PaperRecord*> ptrs;
  ptrs.reserve(records.size());
  for (const auto& r : records) ptrs.push_back(&r);
  return paperlist_to_string(venue, year, std::move(ptrs), schema);
}

// ---------------------------------------------------------------------------
// Reading canonical paperlists back

namespace detail {

inline std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline Review review_from_canonical(const nlohmann::json& j) {
  Review r;
  r.reviewer_id = j.at("reviewer_id").get<std::string>();
  if (j.contains("scores")) {
    for (auto it = j.at("scores").begin(); it != j.at("scores").end(); ++it) {
      if (it.value().is_null()) continue;
      r.scores[it.key()] = detail::decimal_from_json(it.value(), "score " + it.key());
    }
  }
  if (j.contains("text_lengths") && !j.at("text_lengths").is_null()) {
    for (auto it = j.at("text_lengths").begin(); it != j.at("text_lengths").end(); ++it) {
      r.text_lengths[it.key()] = it.value().get<int64_t>();
    }
  }
  r.timestamp = detail::time_from_json(j.at("timestamp"), "review timestamp");
  return r;
}

inline AuthorEntry author_from_canonical(const nlohmann::json& j) {
  AuthorEntry a;
  a.name = j.at("name").get<std::string>();
  if (j.contains("affiliations")) {
    for (const auto& aj : j.at("affiliations")) {
      Affiliation aff;
      aff.institution = aj.at("institution").get<std::string>();
      aff.department = detail::opt_string(aj, "department");
      aff.country = detail::opt_string(aj, "country");
      a.affiliations.push_back(std::move(aff));
    }
  }
  a.email_domain = detail::opt_string(j, "email_domain");
  a.position_index = j.value("position", 1);
  return a;
}

/// Parse one record in canonical form. Aggregate keys are ignored (they are
/// recomputed on the next write); everything else round-trips.
inline PaperRecord record_from_canonical(const nlohmann::json& j) {
  PaperRecord r;
  r.paper_id = j.at("paper_id").get<std::string>();
  r.venue = j.at("venue").get<std::string>();
  r.year = j.at("year").get<int>();
  r.title = j.value("title", std::string());
  if (auto s = detail::opt_string(j, "primary_area")) r.primary_area = *s;
  if (j.contains("keywords")) {
    for (const auto& k : j.at("keywords")) r.keywords.push_back(k.get<std::string>());
  }
  if (j.contains("authors")) {
    for (const auto& aj : j.at("authors")) r.authors.push_back(author_from_canonical(aj));
  }
  if (j.contains("reviews")) {
    for (const auto& rj : j.at("reviews")) r.reviews.push_back(review_from_canonical(rj));
  }
  if (j.contains("final_status")) {
    auto st = status_from_string(j.at("final_status").get<std::string>());
    if (!st) {
      raise(ErrorKind::UnknownStatusString,
            "final_status is not canonical: " + j.at("final_status").get<std::string>());
    }
    r.final_status = *st;
  }
  if (auto s = detail::opt_string(j, "decision_raw")) r.decision_raw = *s;
  r.withdrawn = j.value("withdrawn", false);
  if (j.contains("source")) {
    auto sk = source_kind_from_string(j.at("source").get<std::string>());
    if (!sk) raise(ErrorKind::ParseFailure, "unknown source: " + j.at("source").get<std::string>());
    r.source = *sk;
  }
  if (j.contains("consent") && !j.at("consent").is_null()) {
    const auto& cj = j.at("consent");
    ConsentRecord c;
    c.aggregate_only = cj.at("aggregate_only").get<bool>();
    c.individual_display = cj.at("individual_display").get<bool>();
    c.submitted_at = detail::time_from_json(cj.at("submitted_at"), "consent.submitted_at");
    c.validate();
    r.consent = c;
  }
  if (j.contains("ingested_at")) {
    r.ingested_at = detail::time_from_json(j.at("ingested_at"), "ingested_at");
  }
  if (auto s = detail::opt_string(j, "provenance_hash")) r.provenance_hash = *s;
  if (j.contains("external_links")) {
    for (const auto& l : j.at("external_links")) r.external_links.push_back(l.get<std::string>());
  }
  auto grab_token = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_string()) return v.get<std::string>();
    // Numbers come back through nlohmann as doubles/ints; re-serialize the
    // token the writer produced.
    return v.dump();
  };
  r.rating_pre_rebuttal = grab_token("rating_pre_rebuttal");
  r.rating_post_rebuttal = grab_token("rating_post_rebuttal");
  r.rating_delta = grab_token("rating_delta");
  if (j.contains("num_score_changes") && !j.at("num_score_changes").is_null()) {
    r.num_score_changes = j.at("num_score_changes").get<int64_t>();
  }
  if (j.contains("extras") && j.at("extras").is_object()) {
    r.extras = j.at("extras");
  }
  return r;
}

struct Paperlist {
  std::string venue;
  int year = 0;
  std::vector<PaperRecord> papers;
};

inline Paperlist paperlist_from_string(const std::string& text, const std::string& what) {
  auto j = parse_json(text, what);
  Paperlist pl;
  pl.venue = j.value("venue", std::string());
  pl.year = j.value("year", 0);
  if (j.contains("papers")) {
    for (const auto& pj : j.at("papers")) pl.papers.push_back(record_from_canonical(pj));
  }
  return pl;
}

/// Where a venue's paperlist lives inside a data root.
inline std::filesystem::path paperlist_location(const std::filesystem::path& data_root,
                                                const std::string& venue, int year) {
  return data_root / "paperlist" / (venue + "_" + std::to_string(year) + ".json");
}

inline Paperlist load_paperlist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoFailure, "cannot open paperlist " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return paperlist_from_string(ss.str(), path.string());
}

inline void save_paperlist(const std::filesystem::path& path, const std::string& venue, int year,
                           const std::vector<PaperRecord>& records,
                           const ReviewDimensionSchema* schema = nullptr) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::IoFailure, "cannot write paperlist " + path.string());
  out << paperlist_to_string(venue, year, records, schema);
}

}  // namespace reviewkit
