#pragma once

// Append-only score history. Each venue-year owns one NDJSON event log:
// a line per (paper, reviewer) whose score vector changed at a capture
// instant, deduplicated by content hash, with tombstone lines when a review
// disappears. Any intermediate snapshot can be reconstructed by folding the
// log, so the first capture plus the event stream is the whole history.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reviewkit/core.hpp"
#include "reviewkit/digest.hpp"
#include "reviewkit/jsonio.hpp"

namespace reviewkit {

/// Score vector of one review at one instant.
using ReviewScores = std::map<std::string, Decimal>;

/// paper_id -> reviewer_id -> scores. A full capture of a venue-year.
using PaperScores = std::map<std::string, std::map<std::string, ReviewScores>>;

struct ScoreEvent {
  UtcTime captured_at;
  std::string content_hash;
  std::string paper_id;
  std::string reviewer_id;
  std::optional<ReviewScores> scores;  // nullopt: the review disappeared
};

struct ScoreChange {
  std::string paper_id;
  std::string reviewer_id;
  std::string dimension;
  std::optional<Decimal> old_value;  // nullopt: dimension arrived
  std::optional<Decimal> new_value;  // nullopt: dimension removed
};

/// One paper's observed score trajectory: per reviewer and dimension, the
/// instants where a value first appeared or changed. A removal closes the
/// series until the value reappears, which records a fresh point.
struct ScoreFootprint {
  std::string paper_id;
  std::map<std::string, std::map<std::string, std::vector<std::pair<UtcTime, Decimal>>>> series;
};

struct AppendStats {
  size_t written = 0;
  size_t deduplicated = 0;
  size_t removals = 0;
};

namespace detail {

inline std::string scores_canonical(const std::optional<ReviewScores>& scores) {
  if (!scores) return "null";
  JsonValue obj = JsonValue::object();
  for (const auto& [dim, v] : *scores) obj.set(dim, JsonValue(v));
  return obj.dump_compact();
}

inline std::string scores_hash(const std::optional<ReviewScores>& scores) {
  return sha256_hex(scores_canonical(scores));
}

}  // namespace detail

/// Capture timestamps may disagree slightly between fetch hosts; anything
/// further back than this against the newest seen capture is refused.
inline constexpr int64_t kClockSkewToleranceSecs = 300;

class SnapshotArchive {
 public:
  /// Opens (or creates) the archive at <root>/<venue>/<year>/events.ndjson.
  /// The index sidecar is never trusted: it is rebuilt from the log here.
  static SnapshotArchive open(const std::filesystem::path& root, const std::string& venue,
                              int year) {
    SnapshotArchive a;
    a.venue_ = venue;
    a.year_ = year;
    a.dir_ = root / venue / std::to_string(year);
    a.events_path_ = a.dir_ / "events.ndjson";
    if (std::filesystem::exists(a.events_path_)) {
      std::ifstream in(a.events_path_, std::ios::binary);
      if (!in) raise(ErrorKind::IoFailure, "cannot open " + a.events_path_.string());
      std::string line;
      size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        a.apply(a.parse_event(line, lineno));
      }
    }
    a.write_index();
    return a;
  }

  const std::string& venue() const { return venue_; }
  int year() const { return year_; }
  const std::vector<ScoreEvent>& events() const { return log_; }

  /// Appends one full capture. Unchanged reviews are skipped by content
  /// hash; reviews present before but absent now get a tombstone. Returns
  /// what was written. Raises KeyMismatch for the wrong venue-year and
  /// ClockSkew for captures that run backwards beyond tolerance.
  AppendStats append_snapshot(const std::string& venue, int year, UtcTime captured_at,
                              const PaperScores& papers) {
    if (venue != venue_ || year != year_) {
      raise(ErrorKind::KeyMismatch, "snapshot for " + venue + "/" + std::to_string(year) +
                                        " appended to " + venue_ + "/" + std::to_string(year_));
    }
    if (max_captured_at_ && captured_at.secs < max_captured_at_->secs - kClockSkewToleranceSecs) {
      raise(ErrorKind::ClockSkew, "capture " + captured_at.str() + " is more than " +
                                      std::to_string(kClockSkewToleranceSecs) +
                                      "s behind " + max_captured_at_->str());
    }

    AppendStats stats;
    std::vector<ScoreEvent> batch;
    for (const auto& [paper_id, reviews] : papers) {
      for (const auto& [reviewer_id, scores] : reviews) {
        auto key = std::make_pair(paper_id, reviewer_id);
        std::string hash = detail::scores_hash(scores);
        auto it = last_hash_.find(key);
        if (it != last_hash_.end() && it->second == hash) {
          ++stats.deduplicated;
          continue;
        }
        batch.push_back(ScoreEvent{captured_at, hash, paper_id, reviewer_id, scores});
      }
    }
    for (const auto& [paper_id, reviews] : state_) {
      auto pit = papers.find(paper_id);
      for (const auto& [reviewer_id, scores] : reviews) {
        if (pit != papers.end() && pit->second.count(reviewer_id) != 0) continue;
        batch.push_back(ScoreEvent{captured_at, detail::scores_hash(std::nullopt), paper_id,
                                   reviewer_id, std::nullopt});
        ++stats.removals;
      }
    }

    if (!batch.empty()) {
      std::filesystem::create_directories(dir_);
      std::ofstream out(events_path_, std::ios::binary | std::ios::app);
      if (!out) raise(ErrorKind::IoFailure, "cannot append to " + events_path_.string());
      for (auto& ev : batch) {
        out << event_line(ev) << '\n';
        apply(ev);
        ++stats.written;
      }
    }
    if (!max_captured_at_ || captured_at > *max_captured_at_) max_captured_at_ = captured_at;
    if (!batch.empty()) write_index();
    return stats;
  }

  /// Canonical form of a capture: papers with no reviews drop out, exactly
  /// as the folded state represents them.
  static PaperScores pruned(PaperScores s) {
    for (auto it = s.begin(); it != s.end();) {
      if (it->second.empty()) it = s.erase(it);
      else ++it;
    }
    return s;
  }

  /// State after folding all events with captured_at <= t, in log order.
  /// Log order (not timestamp order) resolves captures that share an
  /// instant or sit within the skew tolerance: the later append wins.
  PaperScores state_at(UtcTime t) const {
    PaperScores out;
    for (const auto& ev : log_) {
      if (ev.captured_at > t) continue;
      fold_into(out, ev);
    }
    return out;
  }

  const PaperScores& terminal_state() const { return state_; }

  /// Distinct capture instants, ascending.
  std::vector<UtcTime> capture_instants() const {
    std::set<int64_t> secs;
    for (const auto& ev : log_) secs.insert(ev.captured_at.secs);
    std::vector<UtcTime> out;
    for (int64_t s : secs) out.push_back(UtcTime{s});
    return out;
  }

  /// (instant, state) at every distinct capture instant, ascending.
  std::vector<std::pair<UtcTime, PaperScores>> replay() const {
    std::vector<std::pair<UtcTime, PaperScores>> out;
    for (auto t : capture_instants()) out.emplace_back(t, state_at(t));
    return out;
  }

  /// One paper's review state at an instant (reviewer -> scores). Empty map
  /// when t precedes every capture of the paper. Raises UnknownPaper when
  /// the log never saw the id at all.
  std::map<std::string, ReviewScores> state_at(const std::string& paper_id, UtcTime t) const {
    std::map<std::string, ReviewScores> out;
    bool seen = false;
    for (const auto& ev : log_) {
      if (ev.paper_id != paper_id) continue;
      seen = true;
      if (ev.captured_at > t) continue;
      if (ev.scores) {
        out[ev.reviewer_id] = *ev.scores;
      } else {
        out.erase(ev.reviewer_id);
      }
    }
    if (!seen) raise(ErrorKind::UnknownPaper, "no events for paper " + paper_id);
    return out;
  }

  /// The paper's full score trajectory. Raises UnknownPaper for an id the
  /// log never saw.
  ScoreFootprint replay(const std::string& paper_id) const {
    ScoreFootprint out;
    out.paper_id = paper_id;
    // current value per (reviewer, dimension); nullopt while absent
    std::map<std::string, std::map<std::string, std::optional<Decimal>>> current;
    for (const auto& [at, state] : paper_history(paper_id)) {
      std::set<std::pair<std::string, std::string>> present;
      for (const auto& [reviewer, scores] : state) {
        for (const auto& [dim, value] : scores) {
          present.insert({reviewer, dim});
          auto& cur = current[reviewer][dim];
          if (cur && *cur == value) continue;
          auto& points = out.series[reviewer][dim];
          if (!points.empty() && points.back().first.secs == at.secs) {
            points.back().second = value;  // same-instant rewrite, keep the later fold
          } else {
            points.emplace_back(at, value);
          }
          cur = value;
        }
      }
      for (auto& [reviewer, dims] : current) {
        for (auto& [dim, cur] : dims) {
          if (cur && present.count({reviewer, dim}) == 0) cur = std::nullopt;
        }
      }
    }
    return out;
  }

  /// Per-dimension changes between the states at two instants, sorted by
  /// (paper, reviewer, dimension). Arrivals carry a null old value,
  /// removals a null new value.
  std::vector<ScoreChange> diff(UtcTime from, UtcTime to) const {
    return diff_states(state_at(from), state_at(to));
  }

  static std::vector<ScoreChange> diff_states(const PaperScores& a, const PaperScores& b) {
    std::vector<ScoreChange> out;
    auto emit = [&](const std::string& p, const std::string& r, const ReviewScores* sa,
                    const ReviewScores* sb) {
      std::set<std::string> dims;
      if (sa != nullptr) for (const auto& [d, v] : *sa) dims.insert(d);
      if (sb != nullptr) for (const auto& [d, v] : *sb) dims.insert(d);
      for (const auto& d : dims) {
        std::optional<Decimal> ov, nv;
        if (sa != nullptr) {
          auto it = sa->find(d);
          if (it != sa->end()) ov = it->second;
        }
        if (sb != nullptr) {
          auto it = sb->find(d);
          if (it != sb->end()) nv = it->second;
        }
        if (ov != nv) out.push_back(ScoreChange{p, r, d, ov, nv});
      }
    };
    std::set<std::string> papers;
    for (const auto& [p, m] : a) papers.insert(p);
    for (const auto& [p, m] : b) papers.insert(p);
    for (const auto& p : papers) {
      auto pa = a.find(p);
      auto pb = b.find(p);
      std::set<std::string> reviewers;
      if (pa != a.end()) for (const auto& [r, s] : pa->second) reviewers.insert(r);
      if (pb != b.end()) for (const auto& [r, s] : pb->second) reviewers.insert(r);
      for (const auto& r : reviewers) {
        const ReviewScores* sa = nullptr;
        const ReviewScores* sb = nullptr;
        if (pa != a.end()) {
          auto it = pa->second.find(r);
          if (it != pa->second.end()) sa = &it->second;
        }
        if (pb != b.end()) {
          auto it = pb->second.find(r);
          if (it != pb->second.end()) sb = &it->second;
        }
        emit(p, r, sa, sb);
      }
    }
    return out;
  }

  /// This paper's review states at each capture instant that touched it.
  /// Raises UnknownPaper when the log never saw the id.
  std::vector<std::pair<UtcTime, std::map<std::string, ReviewScores>>> paper_history(
      const std::string& paper_id) const {
    std::vector<std::pair<UtcTime, std::map<std::string, ReviewScores>>> out;
    std::map<std::string, ReviewScores> cur;
    bool seen = false;
    for (const auto& ev : log_) {
      if (ev.paper_id != paper_id) continue;
      seen = true;
      if (ev.scores) {
        cur[ev.reviewer_id] = *ev.scores;
      } else {
        cur.erase(ev.reviewer_id);
      }
      if (!out.empty() && out.back().first.secs == ev.captured_at.secs) {
        out.back().second = cur;
      } else {
        out.emplace_back(ev.captured_at, cur);
      }
    }
    if (!seen) raise(ErrorKind::UnknownPaper, "no events for paper " + paper_id);
    return out;
  }

  /// Re-reads the log from disk, checking line syntax, content hashes, and
  /// capture monotonicity. Returns the number of events checked.
  size_t verify() const {
    if (!std::filesystem::exists(events_path_)) return 0;
    std::ifstream in(events_path_, std::ios::binary);
    if (!in) raise(ErrorKind::IoFailure, "cannot open " + events_path_.string());
    std::string line;
    size_t lineno = 0;
    size_t count = 0;
    std::optional<UtcTime> max_seen;
    SnapshotArchive scratch;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto ev = scratch.parse_event(line, lineno);
      if (detail::scores_hash(ev.scores) != ev.content_hash) {
        raise(ErrorKind::SchemaViolation,
              events_path_.string() + ":" + std::to_string(lineno) + ": content hash mismatch");
      }
      if (max_seen && ev.captured_at.secs < max_seen->secs - kClockSkewToleranceSecs) {
        raise(ErrorKind::ClockSkew, events_path_.string() + ":" + std::to_string(lineno) +
                                        ": capture regresses beyond tolerance");
      }
      if (!max_seen || ev.captured_at > *max_seen) max_seen = ev.captured_at;
      ++count;
    }
    return count;
  }

  /// Hash of the canonical terminal state; stable across platforms.
  std::string state_hash() const {
    JsonValue root = JsonValue::object();
    for (const auto& [paper_id, reviews] : state_) {
      JsonValue pj = JsonValue::object();
      for (const auto& [reviewer_id, scores] : reviews) {
        JsonValue sj = JsonValue::object();
        for (const auto& [dim, v] : scores) sj.set(dim, JsonValue(v));
        pj.set(reviewer_id, std::move(sj));
      }
      root.set(paper_id, std::move(pj));
    }
    return sha256_hex(root.dump_compact());
  }

  const std::filesystem::path& events_path() const { return events_path_; }

 private:
  SnapshotArchive() = default;

  ScoreEvent parse_event(const std::string& line, size_t lineno) const {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      raise(ErrorKind::ParseFailure,
            events_path_.string() + ":" + std::to_string(lineno) + ": bad event line");
    }
    ScoreEvent ev;
    auto t = UtcTime::parse(j.at("captured_at").get<std::string>());
    if (!t) {
      raise(ErrorKind::ParseFailure,
            events_path_.string() + ":" + std::to_string(lineno) + ": bad captured_at");
    }
    ev.captured_at = *t;
    ev.content_hash = j.at("content_hash").get<std::string>();
    ev.paper_id = j.at("paper_id").get<std::string>();
    ev.reviewer_id = j.at("reviewer_id").get<std::string>();
    if (j.at("scores").is_null()) {
      ev.scores = std::nullopt;
    } else {
      ReviewScores scores;
      for (auto it = j.at("scores").begin(); it != j.at("scores").end(); ++it) {
        scores[it.key()] = detail::decimal_from_json(it.value(), "event score " + it.key());
      }
      ev.scores = std::move(scores);
    }
    return ev;
  }

  static std::string event_line(const ScoreEvent& ev) {
    JsonValue obj = JsonValue::object();
    obj.set("captured_at", JsonValue(ev.captured_at.str()));
    obj.set("content_hash", JsonValue(ev.content_hash));
    obj.set("paper_id", JsonValue(ev.paper_id));
    obj.set("reviewer_id", JsonValue(ev.reviewer_id));
    if (ev.scores) {
      JsonValue sj = JsonValue::object();
      for (const auto& [dim, v] : *ev.scores) sj.set(dim, JsonValue(v));
      obj.set("scores", std::move(sj));
    } else {
      obj.set("scores", JsonValue(nullptr));
    }
    return obj.dump_compact();
  }

  static void fold_into(PaperScores& state, const ScoreEvent& ev) {
    if (ev.scores) {
      state[ev.paper_id][ev.reviewer_id] = *ev.scores;
      return;
    }
    auto pit = state.find(ev.paper_id);
    if (pit == state.end()) return;
    pit->second.erase(ev.reviewer_id);
    if (pit->second.empty()) state.erase(pit);
  }

  void apply(const ScoreEvent& ev) {
    fold_into(state_, ev);
    last_hash_[{ev.paper_id, ev.reviewer_id}] = ev.content_hash;
    if (!max_captured_at_ || ev.captured_at > *max_captured_at_) {
      max_captured_at_ = ev.captured_at;
    }
    log_.push_back(ev);
  }

  void write_index() const {
    if (log_.empty() && !std::filesystem::exists(dir_)) return;
    std::filesystem::create_directories(dir_);
    JsonValue idx = JsonValue::object();
    idx.set("venue", JsonValue(venue_));
    idx.set("year", JsonValue(int64_t{year_}));
    idx.set("events", JsonValue(static_cast<int64_t>(log_.size())));
    idx.set("last_captured_at",
            max_captured_at_ ? JsonValue(max_captured_at_->str()) : JsonValue(nullptr));
    idx.set("state_hash", JsonValue(state_hash()));
    auto tmp = dir_ / "index.json.tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) raise(ErrorKind::IoFailure, "cannot write " + tmp.string());
      out << idx.dump_pretty();
    }
    std::filesystem::rename(tmp, dir_ / "index.json");
  }

  std::string venue_;
  int year_ = 0;
  std::filesystem::path dir_;
  std::filesystem::path events_path_;
  std::vector<ScoreEvent> log_;
  PaperScores state_;
  std::map<std::pair<std::string, std::string>, std::string> last_hash_;
  std::optional<UtcTime> max_captured_at_;
};

/// Extracts the (paper -> reviewer -> scores) shape from normalized records,
/// ready for append_snapshot.
inline PaperScores snapshot_from_records(const std::vector<PaperRecord>& records) {
  PaperScores out;
  for (const auto& r : records) {
    auto& reviews = out[r.paper_id];
    for (const auto& rev : r.reviews) reviews[rev.reviewer_id] = rev.scores;
  }
  return out;
}

}  // namespace reviewkit
