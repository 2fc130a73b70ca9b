#pragma once

// Rebuttal-phase views over the score archive: paired pre/post rating means
// per final status, the flow from initial rating bins to final bins and
// statuses, how often each dimension gets updated, and the evolution of
// reviewer consensus per status group. Views that depend on the discussion
// window raise MissingPhaseDates when the venue config has no phase dates.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "reviewkit/analytics.hpp"
#include "reviewkit/archive.hpp"
#include "reviewkit/core.hpp"

namespace reviewkit {

namespace detail {

inline const PhaseDates& require_phase_dates(const std::optional<PhaseDates>& phase) {
  if (!phase) {
    raise(ErrorKind::MissingPhaseDates, "this analysis needs the venue phase dates");
  }
  return *phase;
}

/// Mean rating of one paper's review-state map (exact rational).
inline MeanAccumulator state_rating_mean(const std::map<std::string, ReviewScores>& reviews) {
  MeanAccumulator acc;
  for (const auto& [reviewer, scores] : reviews) {
    auto it = scores.find(kRatingDimension);
    if (it != scores.end()) acc.add(it->second);
  }
  return acc;
}

/// Sign of (b - a) where both are exact rationals sum/count.
inline int compare_means(const MeanAccumulator& a, const MeanAccumulator& b) {
  __int128 lhs = static_cast<__int128>(b.sum_micros) * a.count;
  __int128 rhs = static_cast<__int128>(a.sum_micros) * b.count;
  if (lhs < rhs) return -1;
  if (lhs > rhs) return 1;
  return 0;
}

inline std::map<std::string, DecisionStatus> status_index(
    const std::vector<PaperRecord>& records) {
  std::map<std::string, DecisionStatus> out;
  for (const auto& r : records) out[r.paper_id] = r.final_status;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pre/post paired samples

struct PrePostSample {
  std::string paper_id;
  std::string pre;   // mean rating at discussion start, canonical token
  std::string post;  // terminal mean rating, canonical token
};

struct PrePostDistributions {
  // final status -> samples, ascending paper id. Withdrawn and Desk-Reject
  // are groups of their own; papers absent from the record set land under
  // Unknown and are tallied in no_record.
  std::map<DecisionStatus, std::vector<PrePostSample>> by_status;
  int64_t papers = 0;     // paired samples across all groups
  int64_t excluded = 0;   // archive papers lacking a rating on either side
  int64_t no_record = 0;
};

/// Paired (pre, post) mean ratings per final status: pre is the state when
/// the discussion window opened, post is the terminal state. Papers without
/// a rated review on both sides are excluded and counted.
inline PrePostDistributions prepost_distributions(const SnapshotArchive& archive,
                                                  const std::optional<PhaseDates>& phase,
                                                  const std::vector<PaperRecord>& records) {
  const auto& dates = detail::require_phase_dates(phase);
  auto status_of = detail::status_index(records);
  PrePostDistributions out;

  auto pre_state = archive.state_at(dates.discussion_start);
  const auto& post_state = archive.terminal_state();
  std::set<std::string> universe;
  for (const auto& [paper, reviews] : pre_state) universe.insert(paper);
  for (const auto& [paper, reviews] : post_state) universe.insert(paper);

  for (const auto& paper : universe) {
    MeanAccumulator pre, post;
    if (auto it = pre_state.find(paper); it != pre_state.end()) {
      pre = detail::state_rating_mean(it->second);
    }
    if (auto it = post_state.find(paper); it != post_state.end()) {
      post = detail::state_rating_mean(it->second);
    }
    if (pre.empty() || post.empty()) {
      ++out.excluded;
      continue;
    }
    DecisionStatus status = DecisionStatus::Unknown;
    if (auto it = status_of.find(paper); it != status_of.end()) {
      status = it->second;
    } else {
      ++out.no_record;
    }
    out.by_status[status].push_back(PrePostSample{paper, format_mean(pre), format_mean(post)});
    ++out.papers;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flow matrix: initial bin -> final bin -> status, with direction

enum class FlowDirection { Down = -1, Flat = 0, Up = 1 };

inline const char* to_string(FlowDirection d) {
  switch (d) {
    case FlowDirection::Down: return "down";
    case FlowDirection::Flat: return "flat";
    case FlowDirection::Up: return "up";
  }
  return "flat";
}

struct FlowMatrix {
  // (initial bin, final bin, direction, final status) -> papers. Direction
  // is the sign of the exact mean change, so a within-bin nudge still
  // counts as up or down even though the bins match.
  std::map<std::tuple<int64_t, int64_t, FlowDirection, DecisionStatus>, int64_t> cells;
  int64_t papers = 0;     // total flow, equals paired pre/post papers
  int64_t excluded = 0;   // archive papers lacking a rating on either side
  int64_t no_record = 0;  // flows that end in Unknown for lack of a record
};

/// One unit of flow per paper with both a pre-window and a terminal mean
/// rating, from its initial rating bin to its final bin and final status.
inline FlowMatrix flow_matrix(const SnapshotArchive& archive,
                              const std::optional<PhaseDates>& phase,
                              const std::vector<PaperRecord>& records, const BinSpec& spec) {
  const auto& dates = detail::require_phase_dates(phase);
  spec.validate();
  auto status_of = detail::status_index(records);
  FlowMatrix out;

  auto pre_state = archive.state_at(dates.discussion_start);
  const auto& post_state = archive.terminal_state();
  std::set<std::string> universe;
  for (const auto& [paper, reviews] : pre_state) universe.insert(paper);
  for (const auto& [paper, reviews] : post_state) universe.insert(paper);

  for (const auto& paper : universe) {
    MeanAccumulator pre, post;
    if (auto it = pre_state.find(paper); it != pre_state.end()) {
      pre = detail::state_rating_mean(it->second);
    }
    if (auto it = post_state.find(paper); it != post_state.end()) {
      post = detail::state_rating_mean(it->second);
    }
    if (pre.empty() || post.empty()) {
      ++out.excluded;
      continue;
    }
    DecisionStatus status = DecisionStatus::Unknown;
    if (auto it = status_of.find(paper); it != status_of.end()) {
      status = it->second;
    } else {
      ++out.no_record;
    }
    int sign = detail::compare_means(pre, post);
    FlowDirection dir = sign < 0   ? FlowDirection::Down
                        : sign > 0 ? FlowDirection::Up
                                   : FlowDirection::Flat;
    ++out.cells[{spec.bin_of(pre), spec.bin_of(post), dir, status}];
    ++out.papers;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dimension update fractions

struct UpdateFractions {
  std::map<std::string, int64_t> papers_changed;  // dimension -> papers with >=1 change
  std::map<std::string, double> fraction;         // same, divided by the denominator
  int64_t denominator = 0;                        // papers the archive has ever seen
};

/// Of all papers in the archive, what fraction saw dimension d revised
/// inside the discussion window? Only value-to-value transitions count: a
/// review or dimension arriving is not a change, nor is one disappearing.
/// Events stamped exactly at the window open are part of the baseline; the
/// window is (open, close].
inline UpdateFractions dimension_update_fractions(const SnapshotArchive& archive,
                                                  const std::optional<PhaseDates>& phase) {
  const auto& dates = detail::require_phase_dates(phase);
  UpdateFractions out;

  std::set<std::string> all_papers;
  std::map<std::string, std::set<std::string>> changed_papers;  // dimension -> papers
  PaperScores state;
  for (const auto& ev : archive.events()) {
    all_papers.insert(ev.paper_id);
    bool in_window = ev.captured_at > dates.discussion_start &&
                     ev.captured_at <= dates.discussion_end;
    if (in_window && ev.scores) {
      auto pit = state.find(ev.paper_id);
      if (pit != state.end()) {
        auto rit = pit->second.find(ev.reviewer_id);
        if (rit != pit->second.end()) {
          for (const auto& [dim, new_value] : *ev.scores) {
            auto old_it = rit->second.find(dim);
            if (old_it != rit->second.end() && old_it->second != new_value) {
              changed_papers[dim].insert(ev.paper_id);
            }
          }
        }
      }
    }
    if (ev.scores) {
      state[ev.paper_id][ev.reviewer_id] = *ev.scores;
    } else {
      auto pit = state.find(ev.paper_id);
      if (pit != state.end()) {
        pit->second.erase(ev.reviewer_id);
        if (pit->second.empty()) state.erase(pit);
      }
    }
  }
  out.denominator = static_cast<int64_t>(all_papers.size());

  for (const auto& [dim, papers] : changed_papers) {
    out.papers_changed[dim] = static_cast<int64_t>(papers.size());
    out.fraction[dim] = out.denominator == 0
                            ? 0.0
                            : static_cast<double>(papers.size()) /
                                  static_cast<double>(out.denominator);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consensus series: min-max rating spread per final-status group

struct ConsensusPoint {
  UtcTime at;
  int64_t papers = 0;        // papers with >=2 ratings at this instant
  double mean_spread = 0.0;  // mean over those papers of (max - min) rating
};

struct ConsensusSeries {
  // final status -> one point per grid instant, in grid order. Papers not
  // in the record set form the Unknown group.
  std::map<DecisionStatus, std::vector<ConsensusPoint>> by_status;
  std::optional<UtcTime> discussion_start;  // plot marker, when phase dates exist
};

/// Daily instants spanning the archive's captures: the first capture, then
/// day steps, then the last capture if the steps missed it. Empty archive,
/// empty grid.
inline std::vector<UtcTime> daily_grid(const SnapshotArchive& archive) {
  auto instants = archive.capture_instants();
  std::vector<UtcTime> out;
  if (instants.empty()) return out;
  UtcTime t = instants.front();
  while (t < instants.back()) {
    out.push_back(t);
    t.secs += 86400;
  }
  out.push_back(instants.back());
  return out;
}

/// Reviewer-consensus evolution: at each grid instant, the mean over papers
/// of (max rating - min rating) in the state at that instant, grouped by
/// final status. Papers with fewer than two ratings at an instant sit out
/// that instant. Grid instants must lie within the archive's capture span.
inline ConsensusSeries consensus_series(const SnapshotArchive& archive,
                                        const std::vector<PaperRecord>& records,
                                        const std::vector<UtcTime>& grid,
                                        const std::optional<PhaseDates>& phase = std::nullopt) {
  ConsensusSeries out;
  if (phase) out.discussion_start = phase->discussion_start;
  if (grid.empty()) return out;

  auto instants = archive.capture_instants();
  if (instants.empty()) {
    raise(ErrorKind::InvalidSpec, "consensus grid over an archive with no captures");
  }
  for (auto t : grid) {
    if (t < instants.front() || instants.back() < t) {
      raise(ErrorKind::InvalidSpec, "grid instant " + t.str() + " outside the capture span");
    }
  }
  auto status_of = detail::status_index(records);

  // every status the archive's papers resolve to gets a series
  std::set<DecisionStatus> groups;
  std::map<std::string, DecisionStatus> group_of;
  for (const auto& ev : archive.events()) {
    if (group_of.count(ev.paper_id) != 0) continue;
    auto it = status_of.find(ev.paper_id);
    DecisionStatus s = it == status_of.end() ? DecisionStatus::Unknown : it->second;
    group_of[ev.paper_id] = s;
    groups.insert(s);
  }

  for (auto t : grid) {
    auto state = archive.state_at(t);
    std::map<DecisionStatus, std::pair<int64_t, int64_t>> acc;  // status -> (sum micros, n)
    for (const auto& [paper, reviews] : state) {
      std::optional<int64_t> lo, hi;
      for (const auto& [reviewer, scores] : reviews) {
        auto it = scores.find(kRatingDimension);
        if (it == scores.end()) continue;
        int64_t v = it->second.micros();
        if (!lo || v < *lo) lo = v;
        if (!hi || v > *hi) hi = v;
      }
      int64_t ratings = 0;
      for (const auto& [reviewer, scores] : reviews) {
        ratings += scores.count(kRatingDimension) != 0 ? 1 : 0;
      }
      if (ratings < 2) continue;
      auto& slot = acc[group_of.at(paper)];
      slot.first += *hi - *lo;
      slot.second += 1;
    }
    for (auto s : groups) {
      ConsensusPoint pt;
      pt.at = t;
      auto it = acc.find(s);
      if (it != acc.end() && it->second.second > 0) {
        pt.papers = it->second.second;
        pt.mean_spread = static_cast<double>(it->second.first) /
                         (1e6 * static_cast<double>(it->second.second));
      }
      out.by_status[s].push_back(pt);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-paper rebuttal dynamics for export

struct PaperDynamics {
  std::optional<std::string> pre_mean;   // canonical token, discussion open
  std::optional<std::string> post_mean;  // canonical token, terminal
  std::optional<std::string> delta;      // post - pre, exact
  int64_t score_changes = 0;  // value-to-value events in the window, any dimension
};

inline std::map<std::string, PaperDynamics> compute_paper_dynamics(
    const SnapshotArchive& archive, const std::optional<PhaseDates>& phase) {
  const auto& dates = detail::require_phase_dates(phase);
  std::map<std::string, PaperDynamics> out;

  std::map<std::string, MeanAccumulator> pre, post;
  for (const auto& [paper, reviews] : archive.state_at(dates.discussion_start)) {
    auto m = detail::state_rating_mean(reviews);
    if (!m.empty()) pre[paper] = m;
  }
  for (const auto& [paper, reviews] : archive.terminal_state()) {
    auto m = detail::state_rating_mean(reviews);
    if (!m.empty()) post[paper] = m;
  }

  std::set<std::string> papers;
  for (const auto& [p, m] : pre) papers.insert(p);
  for (const auto& [p, m] : post) papers.insert(p);
  for (const auto& ev : archive.events()) papers.insert(ev.paper_id);

  // count value-to-value change events inside the window
  std::map<std::string, int64_t> changes;
  PaperScores state;
  for (const auto& ev : archive.events()) {
    bool in_window = ev.captured_at > dates.discussion_start &&
                     ev.captured_at <= dates.discussion_end;
    if (in_window && ev.scores) {
      auto pit = state.find(ev.paper_id);
      if (pit != state.end()) {
        auto rit = pit->second.find(ev.reviewer_id);
        if (rit != pit->second.end()) {
          for (const auto& [dim, new_value] : *ev.scores) {
            auto old_it = rit->second.find(dim);
            if (old_it != rit->second.end() && old_it->second != new_value) {
              ++changes[ev.paper_id];
            }
          }
        }
      }
    }
    if (ev.scores) {
      state[ev.paper_id][ev.reviewer_id] = *ev.scores;
    } else {
      auto pit = state.find(ev.paper_id);
      if (pit != state.end()) {
        pit->second.erase(ev.reviewer_id);
        if (pit->second.empty()) state.erase(pit);
      }
    }
  }

  for (const auto& paper : papers) {
    PaperDynamics d;
    auto pit = pre.find(paper);
    auto qit = post.find(paper);
    if (pit != pre.end()) d.pre_mean = format_mean(pit->second);
    if (qit != post.end()) d.post_mean = format_mean(qit->second);
    if (pit != pre.end() && qit != post.end()) {
      const auto& a = pit->second;
      const auto& b = qit->second;
      // b.sum/b.count - a.sum/a.count, kept exact
      int64_t numer = b.sum_micros * a.count - a.sum_micros * b.count;
      int64_t denom = a.count * b.count;
      d.delta = format_mean(numer, denom);
    }
    auto cit = changes.find(paper);
    if (cit != changes.end()) d.score_changes = cit->second;
    out[paper] = d;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundled report

struct DynamicsReport {
  PrePostDistributions prepost;
  FlowMatrix flow;
  UpdateFractions updates;
  ConsensusSeries consensus;
  std::vector<CombinationStat> combinations;
};

/// Every rebuttal-phase view in one pass, with the consensus series on the
/// archive's daily grid.
inline DynamicsReport compute_dynamics_report(const SnapshotArchive& archive,
                                              const std::vector<PaperRecord>& records,
                                              const std::optional<PhaseDates>& phase,
                                              const BinSpec& spec,
                                              int64_t combination_cutoff = 30) {
  DynamicsReport out;
  out.prepost = prepost_distributions(archive, phase, records);
  out.flow = flow_matrix(archive, phase, records, spec);
  out.updates = dimension_update_fractions(archive, phase);
  out.consensus = consensus_series(archive, records, daily_grid(archive), phase);
  out.combinations = acceptance_by_combination(records, combination_cutoff);
  return out;
}

}  // namespace reviewkit
