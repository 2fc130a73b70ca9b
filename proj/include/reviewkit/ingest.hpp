#pragma once

// Pull side of the toolkit. Connectors fetch raw venue snapshots (HTTP,
// static files, or replayed fixtures), every payload is persisted verbatim
// before any parsing, and normalized records flow into the snapshot archive
// and the canonical paperlist. Community form submissions enter through a
// CSV batch path with per-row validation and consent capture.
//
// Data root layout:
//   <root>/raw/<venue>/<year>/<stamp>.raw     verbatim payloads
//   <root>/archive/<venue>/<year>/...         append-only score events
//   <root>/paperlist/<venue>_<year>.json      current normalized records

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "reviewkit/archive.hpp"
#include "reviewkit/core.hpp"
#include "reviewkit/csv.hpp"
#include "reviewkit/digest.hpp"
#include "reviewkit/errors.hpp"
#include "reviewkit/http.hpp"
#include "reviewkit/jsonio.hpp"
#include "reviewkit/normalize.hpp"
#include "reviewkit/paperlist.hpp"

namespace reviewkit {

// ---------------------------------------------------------------------------
// Clock and politeness

/// Millisecond clock plus sleep, injectable so retry and spacing behavior is
/// testable without real waiting.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual int64_t now_ms() = 0;
  virtual void sleep_ms(int64_t ms) = 0;

  UtcTime now() { return UtcTime::from_secs(now_ms() / 1000); }
};

class SystemClock : public Clock {
 public:
  int64_t now_ms() override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
  void sleep_ms(int64_t ms) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }
};

/// Host part of a URL (scheme and authority), used as the politeness key.
/// Plain file paths have no host and share the empty key.
inline std::string url_host(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) return "";
  auto slash = url.find('/', scheme + 3);
  return slash == std::string::npos ? url : url.substr(0, slash);
}

/// Enforces a minimum delay between requests to the same host.
class RequestSpacer {
 public:
  RequestSpacer(int64_t min_interval_ms, Clock& clock)
      : interval_ms_(min_interval_ms), clock_(clock) {
    if (min_interval_ms < 0) raise(ErrorKind::InvalidConfig, "request interval must be >= 0");
  }

  void acquire(const std::string& host) {
    auto it = last_ms_.find(host);
    if (it != last_ms_.end()) {
      int64_t wait = it->second + interval_ms_ - clock_.now_ms();
      if (wait > 0) clock_.sleep_ms(wait);
    }
    last_ms_[host] = clock_.now_ms();
  }

 private:
  int64_t interval_ms_;
  Clock& clock_;
  std::map<std::string, int64_t> last_ms_;
};

// ---------------------------------------------------------------------------
// Connectors

struct ConnectorJob {
  VenueConfig cfg;
  std::optional<UtcTime> last_success;
};

struct FetchResult {
  UtcTime fetched_at;
  std::string raw_payload;
  int64_t record_count = 0;
  SourceKind source_kind = SourceKind::OfficialAPI;
};

class Connector {
 public:
  virtual ~Connector() = default;
  virtual std::string fetch_raw(const VenueConfig& cfg) = 0;
  /// Whether repeated fetches walk through historical captures (fixture
  /// replay) instead of returning the current state.
  virtual bool supports_history() const { return false; }
};

/// GET against cfg.endpoint with the bearer token from the environment.
class ApiConnector : public Connector {
 public:
  explicit ApiConnector(HttpTransport& transport) : transport_(transport) {}

  std::string fetch_raw(const VenueConfig& cfg) override {
    HttpHeaders headers;
    if (auto token = api_token()) headers.emplace_back("Authorization", "Bearer " + *token);
    auto res = transport_.get(cfg.endpoint, headers);
    if (res.status == 401 || res.status == 403) {
      raise(ErrorKind::AuthError,
            cfg.endpoint + " rejected credentials with status " + std::to_string(res.status));
    }
    if (res.status == 429) {
      raise(ErrorKind::RateLimited, cfg.endpoint + " asked to slow down");
    }
    if (res.status != 200) {
      raise(ErrorKind::TransportError,
            cfg.endpoint + " returned status " + std::to_string(res.status));
    }
    return res.body;
  }

 private:
  HttpTransport& transport_;
};

/// Reads the proceedings export at cfg.endpoint (a local path).
class StaticProceedingsConnector : public Connector {
 public:
  std::string fetch_raw(const VenueConfig& cfg) override {
    std::ifstream in(cfg.endpoint, std::ios::binary);
    if (!in) raise(ErrorKind::TransportError, "cannot read proceedings file " + cfg.endpoint);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

/// Lists <dir>/*.raw sorted by name. Capture stamps sort the same as their
/// instants, so name order is time order.
inline std::vector<std::filesystem::path> list_raw_captures(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return {};
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".raw") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Replays stored captures from <root>/<venue>/<year>/*.raw in timestamp
/// order, one file per fetch. Exhaustion is a transport error.
class FixtureReplayConnector : public Connector {
 public:
  explicit FixtureReplayConnector(std::filesystem::path root) : root_(std::move(root)) {}

  std::string fetch_raw(const VenueConfig& cfg) override {
    ensure_listing(cfg);
    if (cursor_ >= files_.size()) {
      raise(ErrorKind::TransportError, "fixture captures exhausted");
    }
    std::ifstream in(files_[cursor_], std::ios::binary);
    if (!in) raise(ErrorKind::TransportError, "cannot read " + files_[cursor_].string());
    std::stringstream ss;
    ss << in.rdbuf();
    ++cursor_;
    return ss.str();
  }

  bool supports_history() const override { return true; }

  size_t remaining(const VenueConfig& cfg) {
    ensure_listing(cfg);
    return files_.size() - cursor_;
  }

 private:
  void ensure_listing(const VenueConfig& cfg) {
    if (listed_) return;
    auto dir = root_ / cfg.venue / std::to_string(cfg.year);
    files_ = list_raw_captures(dir);
    if (files_.empty()) {
      raise(ErrorKind::TransportError, "no fixture captures under " + dir.string());
    }
    listed_ = true;
  }

  std::filesystem::path root_;
  std::vector<std::filesystem::path> files_;
  size_t cursor_ = 0;
  bool listed_ = false;
};

/// Papers count of a payload, best effort; unparseable payloads count zero
/// (the raw bytes were already persisted, normalization decides later).
inline int64_t count_payload_records(const std::string& bytes) {
  try {
    auto j = parse_json(bytes, "payload");
    if (j.is_object() && j.contains("papers") && j.at("papers").is_array()) {
      return static_cast<int64_t>(j.at("papers").size());
    }
  } catch (const Error&) {
  }
  return 0;
}

/// One fetch with the job's retry policy: transport failures and rate
/// limiting back off exponentially from retry.backoff_base_ms; credential
/// rejections are final. fetched_at never regresses for a job.
inline FetchResult fetch_snapshot(ConnectorJob& job, Connector& connector, Clock& clock,
                                  RequestSpacer* spacer = nullptr) {
  int attempts = 0;
  for (;;) {
    ++attempts;
    try {
      if (spacer != nullptr) spacer->acquire(url_host(job.cfg.endpoint));
      FetchResult result;
      result.raw_payload = connector.fetch_raw(job.cfg);
      result.fetched_at = clock.now();
      if (job.last_success && result.fetched_at < *job.last_success) {
        result.fetched_at = *job.last_success;
      }
      result.record_count = count_payload_records(result.raw_payload);
      result.source_kind = source_kind_for(job.cfg.source_kind);
      job.last_success = result.fetched_at;
      return result;
    } catch (const Error& e) {
      bool retryable =
          e.kind() == ErrorKind::TransportError || e.kind() == ErrorKind::RateLimited;
      if (!retryable || attempts >= job.cfg.retry.max_attempts) throw;
      clock.sleep_ms(job.cfg.retry.backoff_base_ms << (attempts - 1));
    }
  }
}

// ---------------------------------------------------------------------------
// Raw capture store

/// Verbatim payload files under <root>/<venue>/<year>/<stamp>.raw. A stamp
/// that already holds identical bytes is a no-op; different bytes at the
/// same stamp mean two sources disagree about history and fail loudly.
class RawStore {
 public:
  explicit RawStore(std::filesystem::path root) : root_(std::move(root)) {}

  struct Persisted {
    std::filesystem::path path;
    std::string hash;
    bool written = false;
  };

  Persisted persist(const std::string& venue, int year, UtcTime at, const std::string& bytes) {
    Persisted out;
    out.hash = sha256_hex(bytes);
    out.path = root_ / venue / std::to_string(year) / (at.compact() + ".raw");
    if (std::filesystem::exists(out.path)) {
      std::ifstream in(out.path, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      if (sha256_hex(ss.str()) != out.hash) {
        raise(ErrorKind::IoFailure,
              "capture conflict: " + out.path.string() + " holds different bytes");
      }
      return out;
    }
    std::filesystem::create_directories(out.path.parent_path());
    std::ofstream f(out.path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorKind::IoFailure, "cannot write " + out.path.string());
    f << bytes;
    out.written = true;
    return out;
  }

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

// ---------------------------------------------------------------------------
// Capture ingestion

struct IngestReport {
  int64_t captures_processed = 0;
  int64_t captures_skipped = 0;  // raw already persisted from an earlier run
  int64_t records = 0;           // records in the written paperlist
  int64_t quarantined = 0;
  std::vector<std::filesystem::path> raw_paths;
  std::vector<std::string> conflicts;  // cross-run duplicate disagreements
  std::filesystem::path paperlist_path;
};

/// Ingests raw captures in order: persist verbatim, normalize, append score
/// events to the archive, and refresh the paperlist. Within the batch a
/// later capture replaces a paper's earlier state wholesale; the result is
/// then merged with whatever previous runs left in the paperlist, newest
/// review activity winning duplicates. Captures whose bytes are already in
/// the raw store are skipped entirely, which is what makes re-ingestion
/// idempotent.
inline IngestReport ingest_captures(const VenueConfig& cfg,
                                    const std::vector<std::pair<UtcTime, std::string>>& captures,
                                    const std::filesystem::path& data_root) {
  cfg.validate();
  RawStore store(data_root / "raw");
  auto archive = SnapshotArchive::open(data_root / "archive", cfg.venue, cfg.year);

  IngestReport report;
  report.paperlist_path = paperlist_location(data_root, cfg.venue, cfg.year);

  std::map<std::string, PaperRecord> current;
  for (const auto& [at, bytes] : captures) {
    auto persisted = store.persist(cfg.venue, cfg.year, at, bytes);
    report.raw_paths.push_back(persisted.path);
    if (!persisted.written) {
      ++report.captures_skipped;
      continue;
    }
    auto payload = parse_json(bytes, persisted.path.string());
    auto normalized = normalize_payload(payload, cfg, RawContext{persisted.hash, at});
    report.quarantined += static_cast<int64_t>(normalized.quarantined.size());

    archive.append_snapshot(cfg.venue, cfg.year, at, snapshot_from_records(normalized.records));
    for (auto& rec : normalized.records) current[rec.paper_id] = std::move(rec);
    ++report.captures_processed;
  }

  std::vector<PaperRecord> merged;
  if (std::filesystem::exists(report.paperlist_path)) {
    merged = load_paperlist(report.paperlist_path).papers;
  }
  for (auto& [id, rec] : current) merged.push_back(std::move(rec));
  auto deduped = dedup_records(std::move(merged));
  report.records = static_cast<int64_t>(deduped.records.size());
  report.conflicts = std::move(deduped.conflicts);
  save_paperlist(report.paperlist_path, cfg.venue, cfg.year, deduped.records, &cfg.schema);
  return report;
}

/// Replays a whole fixture tree (<dir>/<venue>/<year>/*.raw) through
/// ingest_captures. Capture instants come from the file names.
inline IngestReport ingest_fixture_tree(const VenueConfig& cfg,
                                        const std::filesystem::path& fixture_dir,
                                        const std::filesystem::path& data_root) {
  auto dir = fixture_dir / cfg.venue / std::to_string(cfg.year);
  auto files = list_raw_captures(dir);
  if (files.empty()) raise(ErrorKind::EmptyInput, "no fixture captures under " + dir.string());

  std::vector<std::pair<UtcTime, std::string>> captures;
  for (const auto& f : files) {
    auto stamp = UtcTime::parse_compact(f.stem().string());
    if (!stamp) {
      raise(ErrorKind::ParseFailure, f.string() + ": file name is not a capture stamp");
    }
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    captures.emplace_back(*stamp, ss.str());
  }
  return ingest_captures(cfg, captures, data_root);
}

/// One fetch-and-ingest cycle for a live connector.
inline IngestReport ingest_once(ConnectorJob& job, Connector& connector, Clock& clock,
                                const std::filesystem::path& data_root,
                                RequestSpacer* spacer = nullptr) {
  auto fetched = fetch_snapshot(job, connector, clock, spacer);
  return ingest_captures(job.cfg, {{fetched.fetched_at, fetched.raw_payload}}, data_root);
}

// ---------------------------------------------------------------------------
// Community form batches

enum class RowRejection {
  MalformedRow,
  VenueMismatch,
  MissingConsent,
  InvalidConsent,
  ScoreOutOfRange,
  DuplicateSubmission,
};

inline const char* to_string(RowRejection r) {
  switch (r) {
    case RowRejection::MalformedRow: return "MalformedRow";
    case RowRejection::VenueMismatch: return "VenueMismatch";
    case RowRejection::MissingConsent: return "MissingConsent";
    case RowRejection::InvalidConsent: return "InvalidConsent";
    case RowRejection::ScoreOutOfRange: return "ScoreOutOfRange";
    case RowRejection::DuplicateSubmission: return "DuplicateSubmission";
  }
  return "MalformedRow";
}

inline constexpr const char* kCommunityHeader[] = {
    "paper_id",        "venue",           "year",            "initial_scores",
    "final_scores",    "consent_aggregate", "consent_display", "timestamp",
};

/// Parses a community CSV into data rows, enforcing the documented header.
inline std::vector<std::vector<std::string>> parse_community_rows(const std::string& text,
                                                                  const std::string& what) {
  std::istringstream in(text);
  auto rows = parse_csv(in);
  if (rows.empty()) raise(ErrorKind::EmptyInput, what + ": no rows");
  const auto& header = rows.front();
  bool ok = header.size() == 8;
  for (size_t i = 0; ok && i < 8; ++i) ok = header[i] == kCommunityHeader[i];
  if (!ok) {
    raise(ErrorKind::ParseFailure,
          what + ": header must be paper_id,venue,year,initial_scores,final_scores,"
                 "consent_aggregate,consent_display,timestamp");
  }
  return {rows.begin() + 1, rows.end()};
}

struct CommunityRejection {
  size_t row_index = 0;  // zero-based position in the data rows
  RowRejection reason = RowRejection::MalformedRow;
  std::string detail;
};

struct CommunityBatch {
  std::vector<PaperRecord> accepted;
  std::vector<CommunityRejection> rejected;
};

namespace detail {

inline std::optional<bool> parse_consent_answer(const std::string& raw) {
  std::string v;
  for (char c : raw) {
    if (c == ' ' || c == '\t') continue;
    v.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (v == "yes") return true;
  if (v == "no") return false;
  return std::nullopt;
}

inline std::optional<std::vector<Decimal>> parse_score_list(const std::string& raw) {
  std::vector<Decimal> out;
  size_t start = 0;
  for (size_t i = 0; i <= raw.size(); ++i) {
    if (i == raw.size() || raw[i] == ';') {
      std::string_view piece(raw.data() + start, i - start);
      while (!piece.empty() && piece.front() == ' ') piece.remove_prefix(1);
      while (!piece.empty() && piece.back() == ' ') piece.remove_suffix(1);
      if (!piece.empty()) {
        auto d = Decimal::parse(piece);
        if (!d) return std::nullopt;
        out.push_back(*d);
      }
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

/// Validates form rows against the venue config and builds community
/// records. Bad rows never abort the batch; each lands in rejected with a
/// reason. Accepted records carry consent, the pre/post rating means, and
/// the per-position change count.
inline CommunityBatch ingest_community_batch(const std::vector<std::vector<std::string>>& rows,
                                             const VenueConfig& cfg,
                                             const std::string& raw_hash = "") {
  const Dimension* rating = cfg.schema.find(kRatingDimension);
  if (rating == nullptr) {
    raise(ErrorKind::InvalidConfig, "community ingestion needs a rating dimension");
  }
  CommunityBatch out;
  std::set<std::string> seen;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    auto reject = [&](RowRejection reason, std::string detail) {
      out.rejected.push_back({i, reason, std::move(detail)});
    };
    if (row.size() != 8) {
      reject(RowRejection::MalformedRow, "expected 8 columns, got " + std::to_string(row.size()));
      continue;
    }
    const auto& paper_id = row[0];
    if (paper_id.empty()) {
      reject(RowRejection::MalformedRow, "empty paper_id");
      continue;
    }
    int year = 0;
    const char* year_end = row[2].data() + row[2].size();
    auto parsed = std::from_chars(row[2].data(), year_end, year);
    if (parsed.ec != std::errc() || parsed.ptr != year_end) {
      reject(RowRejection::MalformedRow, "unparseable year: " + row[2]);
      continue;
    }
    if (row[1] != cfg.venue || year != cfg.year) {
      reject(RowRejection::VenueMismatch,
             row[1] + "/" + row[2] + " does not match the configured venue");
      continue;
    }
    auto timestamp = UtcTime::parse(row[7]);
    if (!timestamp) {
      reject(RowRejection::MalformedRow, "unparseable timestamp: " + row[7]);
      continue;
    }
    if (row[5].empty() || row[6].empty()) {
      reject(RowRejection::MissingConsent, "consent answers are required");
      continue;
    }
    auto aggregate = detail::parse_consent_answer(row[5]);
    auto display = detail::parse_consent_answer(row[6]);
    if (!aggregate || !display) {
      reject(RowRejection::InvalidConsent, "consent answers must be yes or no");
      continue;
    }
    auto initial = detail::parse_score_list(row[3]);
    auto final_scores = detail::parse_score_list(row[4]);
    if (!initial || !final_scores) {
      reject(RowRejection::MalformedRow, "unparseable score list");
      continue;
    }
    if (final_scores->empty()) {
      reject(RowRejection::MalformedRow, "no final scores");
      continue;
    }
    bool out_of_range = false;
    for (const auto& list : {*initial, *final_scores}) {
      for (const auto& v : list) {
        if (!cfg.schema.on_grid(*rating, v)) out_of_range = true;
      }
    }
    if (out_of_range) {
      reject(RowRejection::ScoreOutOfRange, "score off the venue scale");
      continue;
    }
    if (!seen.insert(paper_id).second) {
      reject(RowRejection::DuplicateSubmission, "paper " + paper_id + " already submitted");
      continue;
    }

    PaperRecord rec;
    rec.paper_id = paper_id;
    rec.venue = cfg.venue;
    rec.year = cfg.year;
    rec.source = SourceKind::CommunitySubmitted;
    rec.provenance_hash = raw_hash;
    rec.ingested_at = *timestamp;
    ConsentRecord consent;
    consent.individual_display = *display;
    consent.aggregate_only = *aggregate && !*display;
    consent.submitted_at = *timestamp;
    rec.consent = consent;

    MeanAccumulator post;
    for (size_t k = 0; k < final_scores->size(); ++k) {
      Review rev;
      rev.reviewer_id = "cr" + std::to_string(k + 1);
      rev.scores = {{kRatingDimension, (*final_scores)[k]}};
      rev.timestamp = *timestamp;
      rec.reviews.push_back(std::move(rev));
      post.add((*final_scores)[k]);
    }
    rec.rating_post_rebuttal = format_mean(post);
    // A blank initial list means the submitter did not report the
    // pre-rebuttal state, so the delta and change count stay unknown.
    if (!initial->empty()) {
      MeanAccumulator pre;
      for (const auto& v : *initial) pre.add(v);
      rec.rating_pre_rebuttal = format_mean(pre);
      int64_t numer = post.sum_micros * pre.count - pre.sum_micros * post.count;
      int64_t denom = pre.count * post.count;
      rec.rating_delta = format_mean(numer, denom);
      int64_t changes = 0;
      size_t common = std::min(initial->size(), final_scores->size());
      for (size_t k = 0; k < common; ++k) {
        if ((*initial)[k] != (*final_scores)[k]) ++changes;
      }
      changes += static_cast<int64_t>(std::max(initial->size(), final_scores->size()) - common);
      rec.num_score_changes = changes;
    }

    out.accepted.push_back(std::move(rec));
  }
  return out;
}

struct CommunityIngestReport {
  CommunityBatch batch;
  std::filesystem::path raw_path;
  std::filesystem::path paperlist_path;
};

/// Ingests one community CSV file: persist the raw bytes (stamped with the
/// latest row timestamp, so reruns are stable), validate rows, and merge
/// accepted records into the paperlist.
inline CommunityIngestReport ingest_community_file(const VenueConfig& cfg,
                                                   const std::filesystem::path& csv_path,
                                                   const std::filesystem::path& data_root) {
  cfg.validate();
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) raise(ErrorKind::IoFailure, "cannot open community file " + csv_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto text = ss.str();

  auto rows = parse_community_rows(text, csv_path.string());
  auto hash = sha256_hex(text);
  auto batch = ingest_community_batch(rows, cfg, hash);

  UtcTime stamp{0};
  for (const auto& rec : batch.accepted) {
    if (rec.ingested_at > stamp) stamp = rec.ingested_at;
  }
  RawStore store(data_root / "raw");
  auto persisted = store.persist(cfg.venue, cfg.year, stamp, text);

  CommunityIngestReport report;
  report.raw_path = persisted.path;
  report.paperlist_path = paperlist_location(data_root, cfg.venue, cfg.year);
  std::vector<PaperRecord> merged;
  if (std::filesystem::exists(report.paperlist_path)) {
    merged = load_paperlist(report.paperlist_path).papers;
  }
  for (const auto& rec : batch.accepted) merged.push_back(rec);
  auto deduped = dedup_records(std::move(merged));
  save_paperlist(report.paperlist_path, cfg.venue, cfg.year, deduped.records, &cfg.schema);
  report.batch = std::move(batch);
  return report;
}

// ---------------------------------------------------------------------------
// Consent statistics

struct ConsentStats {
  int64_t consented = 0;  // records whose authors allow individual display
  int64_t total = 0;
  double rate = 0.0;
  std::string percent;  // one-decimal label, e.g. "59.9%"
};

inline ConsentStats consent_stats(const std::vector<PaperRecord>& records) {
  if (records.empty()) raise(ErrorKind::EmptyInput, "no community records");
  ConsentStats out;
  for (const auto& r : records) {
    if (r.source != SourceKind::CommunitySubmitted) {
      raise(ErrorKind::InvalidSpec, "consent stats are defined over community records only");
    }
    ++out.total;
    if (r.consent && r.consent->individual_display) ++out.consented;
  }
  out.rate = static_cast<double>(out.consented) / static_cast<double>(out.total);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", out.rate * 100.0);
  out.percent = buf;
  return out;
}

}  // namespace reviewkit
