#pragma once

// Versioned dataset releases and plot-ready CSV emission.
//
// Exports are pure functions of the stored data. The same archive and
// paperlist always produce byte-identical files, version tags derive from
// the content hash, and generation timestamps come from the newest record
// rather than the wall clock. The release manifest under
// <data_root>/export/manifest.ndjson only ever grows: re-exporting an
// unchanged dataset is a no-op, a changed one appends a new entry.
//
// Consent rule: community-submitted records appear in an exported paperlist
// only when their authors opted into individual display. Records whose
// consent covers aggregate statistics only are withheld from the file (they
// still shape aggregate tables computed upstream). Figure CSVs that carry
// per-paper rows honor the same suppression set.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "reviewkit/analytics.hpp"
#include "reviewkit/archive.hpp"
#include "reviewkit/core.hpp"
#include "reviewkit/csv.hpp"
#include "reviewkit/digest.hpp"
#include "reviewkit/dynamics.hpp"
#include "reviewkit/errors.hpp"
#include "reviewkit/jsonio.hpp"
#include "reviewkit/paperlist.hpp"

namespace reviewkit {

/// Fixed numeric format for plot CSVs: six significant digits, trailing
/// zeros dropped. Reading a cell back with strtod and reformatting it must
/// reproduce the cell.
inline std::string format_g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Figures

enum class Figure {
  EntropyScaling,  // per-year mean entropy against volume, with fit residuals
  TierStats,       // per (year, status) rating mean and variance
  PrePost,         // paired pre/post mean ratings per paper, by final status
  Sankey,          // rating-bin flows across the discussion window
  Updates,         // fraction of papers with a revised score, per dimension
  Consensus,       // within-paper rating spread over time, by final status
  Combinations,    // acceptance odds per score multiset
  StatusMix,       // decision composition of each rating bin
};

inline const char* to_string(Figure f) {
  switch (f) {
    case Figure::EntropyScaling: return "entropy_scaling";
    case Figure::TierStats: return "tier_stats";
    case Figure::PrePost: return "prepost";
    case Figure::Sankey: return "sankey";
    case Figure::Updates: return "updates";
    case Figure::Consensus: return "consensus";
    case Figure::Combinations: return "combinations";
    case Figure::StatusMix: return "status_mix";
  }
  return "unknown";
}

inline Figure figure_named(std::string_view name) {
  for (Figure f : {Figure::EntropyScaling, Figure::TierStats, Figure::PrePost, Figure::Sankey,
                   Figure::Updates, Figure::Consensus, Figure::Combinations, Figure::StatusMix}) {
    if (name == to_string(f)) return f;
  }
  raise(ErrorKind::UnknownFigure, "no figure named '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Consent helpers

/// True when the record may appear as an individual row in a release.
/// Official and scraped records always may; community submissions need the
/// author's individual-display consent.
inline bool display_allowed(const PaperRecord& r) {
  if (r.source != SourceKind::CommunitySubmitted) return true;
  return r.consent.has_value() && r.consent->individual_display;
}

/// Paper ids that must not appear as individual rows anywhere.
inline std::set<std::string> withheld_ids(const std::vector<PaperRecord>& records) {
  std::set<std::string> out;
  for (const auto& r : records) {
    if (!display_allowed(r)) out.insert(r.paper_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-figure CSV emitters
//
// Every emitter writes a header row and then data rows in a deterministic
// order (the natural order of the input structures, which are themselves
// sorted maps or explicitly ordered vectors). Floating point cells use
// format_g6; counts and exact decimal tokens are written verbatim.

/// Columns: year,X,H_bar,resid. One row per input point, in input order.
/// The residual column aligns with fit.residuals, which covers every point
/// including a held-out target year.
inline std::string entropy_scaling_csv(const std::vector<YearPoint>& points,
                                       const ScalingFit& fit) {
  if (fit.residuals.size() != points.size()) {
    raise(ErrorKind::InvalidSpec, "fit residuals do not align with the year points");
  }
  std::string out = csv_row({"year", "X", "H_bar", "resid"});
  for (size_t i = 0; i < points.size(); ++i) {
    out += csv_row({std::to_string(points[i].year), format_g6(points[i].submissions),
                    format_g6(points[i].mean_entropy), format_g6(fit.residuals[i])});
  }
  return out;
}

/// Columns: year,status,papers,mean_rating,variance.
inline std::string tier_stats_csv(const std::vector<TierStats>& rows) {
  std::string out = csv_row({"year", "status", "papers", "mean_rating", "variance"});
  for (const auto& r : rows) {
    out += csv_row({std::to_string(r.year), to_string(r.status), std::to_string(r.papers),
                    format_g6(r.mean_rating), format_g6(r.variance)});
  }
  return out;
}

/// Columns: status,paper_id,pre,post. Rows for papers in the suppression
/// set are dropped: this is the one figure that names individual papers.
inline std::string prepost_csv(const PrePostDistributions& d,
                               const std::set<std::string>& suppress = {}) {
  std::string out = csv_row({"status", "paper_id", "pre", "post"});
  for (const auto& [status, samples] : d.by_status) {
    for (const auto& s : samples) {
      if (suppress.count(s.paper_id)) continue;
      out += csv_row({to_string(status), s.paper_id, s.pre, s.post});
    }
  }
  return out;
}

/// Columns: src_bin,dst_bin,status,direction,count. Bin cells carry the
/// lower edge of the half-open bin as a canonical decimal token.
inline std::string sankey_csv(const FlowMatrix& flow, const BinSpec& spec) {
  std::string out = csv_row({"src_bin", "dst_bin", "status", "direction", "count"});
  for (const auto& [key, count] : flow.cells) {
    const auto& [src, dst, dir, status] = key;
    out += csv_row({spec.lower_edge(src).str(), spec.lower_edge(dst).str(), to_string(status),
                    to_string(dir), std::to_string(count)});
  }
  return out;
}

/// Columns: dimension,papers_changed,denominator,fraction.
inline std::string updates_csv(const UpdateFractions& u) {
  std::string out = csv_row({"dimension", "papers_changed", "denominator", "fraction"});
  for (const auto& [dim, changed] : u.papers_changed) {
    double frac = 0.0;
    if (auto it = u.fraction.find(dim); it != u.fraction.end()) frac = it->second;
    out += csv_row(
        {dim, std::to_string(changed), std::to_string(u.denominator), format_g6(frac)});
  }
  return out;
}

/// Columns: status,at,papers,mean_spread. One row per (status, grid
/// instant), statuses in enum order, instants ascending.
inline std::string consensus_csv(const ConsensusSeries& s) {
  std::string out = csv_row({"status", "at", "papers", "mean_spread"});
  for (const auto& [status, points] : s.by_status) {
    for (const auto& p : points) {
      out += csv_row(
          {to_string(status), p.at.str(), std::to_string(p.papers), format_g6(p.mean_spread)});
    }
  }
  return out;
}

/// Columns: scores,papers,accepted,acceptance_rate,mean,min,max,range.
inline std::string combinations_csv(const std::vector<CombinationStat>& rows) {
  std::string out = csv_row(
      {"scores", "papers", "accepted", "acceptance_rate", "mean", "min", "max", "range"});
  for (const auto& r : rows) {
    out += csv_row({r.scores, std::to_string(r.papers), std::to_string(r.accepted),
                    format_g6(r.acceptance_rate), r.mean, r.min, r.max, r.range});
  }
  return out;
}

/// Columns: year,bin_lo,bin_hi,status,papers,volume,proportion. One row per
/// (cell, status) with a nonzero count, plus zero rows for tier statuses so
/// stacked plots keep aligned series.
inline std::string status_mix_csv(const std::vector<StatusMixCell>& cells) {
  std::string out =
      csv_row({"year", "bin_lo", "bin_hi", "status", "papers", "volume", "proportion"});
  for (const auto& c : cells) {
    for (const auto& [status, count] : c.counts) {
      out += csv_row({std::to_string(c.year), c.lo.str(), c.hi.str(), to_string(status),
                      std::to_string(count), std::to_string(c.volume),
                      format_g6(c.proportion(status))});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Figure dispatch

/// Everything the figure emitters can draw from. Populate the pieces the
/// requested figures need; asking for a figure whose inputs are missing
/// raises InvalidSpec.
struct PlotInputs {
  std::vector<YearPoint> scaling_points;
  std::optional<ScalingFit> scaling_fit;
  std::vector<TierStats> tiers;
  std::optional<DynamicsReport> dynamics;
  std::vector<StatusMixCell> mix;
  BinSpec bins;
  std::set<std::string> suppress;  // consent-withheld paper ids
};

struct PlotData {
  std::string file_name;  // e.g. "entropy_scaling.csv"
  std::string csv;
};

inline PlotData emit_plot_data(const PlotInputs& in, Figure figure) {
  auto need = [&](bool ok, const char* what) {
    if (!ok) {
      raise(ErrorKind::InvalidSpec,
            std::string("figure ") + to_string(figure) + " needs " + what);
    }
  };
  PlotData out;
  out.file_name = std::string(to_string(figure)) + ".csv";
  switch (figure) {
    case Figure::EntropyScaling:
      need(in.scaling_fit.has_value() && !in.scaling_points.empty(), "a fitted year series");
      out.csv = entropy_scaling_csv(in.scaling_points, *in.scaling_fit);
      return out;
    case Figure::TierStats:
      need(!in.tiers.empty(), "tier statistics");
      out.csv = tier_stats_csv(in.tiers);
      return out;
    case Figure::PrePost:
      need(in.dynamics.has_value(), "a dynamics report");
      out.csv = prepost_csv(in.dynamics->prepost, in.suppress);
      return out;
    case Figure::Sankey:
      need(in.dynamics.has_value(), "a dynamics report");
      out.csv = sankey_csv(in.dynamics->flow, in.bins);
      return out;
    case Figure::Updates:
      need(in.dynamics.has_value(), "a dynamics report");
      out.csv = updates_csv(in.dynamics->updates);
      return out;
    case Figure::Consensus:
      need(in.dynamics.has_value(), "a dynamics report");
      out.csv = consensus_csv(in.dynamics->consensus);
      return out;
    case Figure::Combinations:
      need(in.dynamics.has_value(), "a dynamics report");
      out.csv = combinations_csv(in.dynamics->combinations);
      return out;
    case Figure::StatusMix:
      need(!in.mix.empty(), "a status mix grid");
      out.csv = status_mix_csv(in.mix);
      return out;
  }
  raise(ErrorKind::UnknownFigure, "unhandled figure");
}

inline PlotData emit_plot_data(const PlotInputs& in, std::string_view figure) {
  return emit_plot_data(in, figure_named(figure));
}

// ---------------------------------------------------------------------------
// Release manifest

struct ManifestEntry {
  std::string version;       // "v" + first 12 hex digits of the content hash
  std::string venue;
  int year = 0;
  std::string file;          // file name inside <data_root>/export
  std::string content_hash;  // sha256 of the file bytes
  std::string provenance;    // distinct source labels, sorted, joined with '+'
  std::string generated_at;  // newest ingested_at among the exported records

  nlohmann::json to_json() const {
    return nlohmann::json{{"version", version}, {"venue", venue},
                          {"year", year},       {"file", file},
                          {"content_hash", content_hash}, {"provenance", provenance},
                          {"generated_at", generated_at}};
  }

  static ManifestEntry from_json(const nlohmann::json& j) {
    ManifestEntry e;
    e.version = j.value("version", std::string());
    e.venue = j.value("venue", std::string());
    e.year = j.value("year", 0);
    e.file = j.value("file", std::string());
    e.content_hash = j.value("content_hash", std::string());
    e.provenance = j.value("provenance", std::string());
    e.generated_at = j.value("generated_at", std::string());
    return e;
  }
};

inline std::filesystem::path export_location(const std::filesystem::path& data_root) {
  return data_root / "export";
}

inline std::filesystem::path manifest_location(const std::filesystem::path& data_root) {
  return export_location(data_root) / "manifest.ndjson";
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::vector<ManifestEntry> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = parse_json(line, path.string() + ":" + std::to_string(lineno));
    out.push_back(ManifestEntry::from_json(j));
  }
  return out;
}

namespace detail {

/// Writes content to path atomically: temp file in the same directory, then
/// rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::IoFailure, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) raise(ErrorKind::IoFailure, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(ErrorKind::IoFailure, "cannot replace " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Appends one entry to the manifest. The log is append-only: existing
/// lines are preserved byte for byte. Re-recording a release that is
/// already the latest entry for its file is a no-op, so repeated exports
/// of identical data leave the manifest untouched. Returns whether a line
/// was written.
inline bool append_manifest(const std::filesystem::path& path, const ManifestEntry& entry) {
  if (entry.file.empty() || entry.content_hash.empty() || entry.provenance.empty()) {
    raise(ErrorKind::InvalidSpec, "manifest entries need a file, hash and provenance label");
  }
  auto existing = load_manifest(path);
  for (auto it = existing.rbegin(); it != existing.rend(); ++it) {
    if (it->venue != entry.venue || it->year != entry.year || it->file != entry.file) continue;
    // Latest entry for this file. Same content means nothing to record.
    if (it->content_hash == entry.content_hash && it->version == entry.version) return false;
    break;
  }
  std::string log = std::filesystem::exists(path) ? detail::read_file(path) : std::string();
  log += entry.to_json().dump();
  log += '\n';
  detail::write_atomic(path, log);
  return true;
}

// ---------------------------------------------------------------------------
// Paperlist export

struct ExportResult {
  std::filesystem::path file;
  std::string content_hash;
  std::string version;
  int64_t records = 0;   // records in the released file
  int64_t withheld = 0;  // community records excluded for lack of consent
  bool manifest_appended = false;
  ManifestEntry entry;
};

namespace detail {

inline std::string provenance_of(const std::vector<PaperRecord>& records) {
  std::set<std::string> labels;
  for (const auto& r : records) labels.insert(provenance_label(r.source));
  std::string out;
  for (const auto& l : labels) {
    if (!out.empty()) out += '+';
    out += l;
  }
  return out;
}

inline std::string newest_ingest(const std::vector<PaperRecord>& records) {
  UtcTime newest{0};
  for (const auto& r : records) {
    if (r.ingested_at > newest) newest = r.ingested_at;
  }
  return newest.str();
}

}  // namespace detail

/// Builds the released paperlist for one venue and year. Reads the stored
/// paperlist, backfills score-dynamics fields from the snapshot archive
/// when phase dates are known, withholds community records without
/// individual-display consent, writes <venue>_<year>_paperlist.json under
/// <data_root>/export, and records the release in the manifest.
///
/// The file bytes depend only on the stored data, so re-running the export
/// reproduces the identical file and hash. Raises NothingToExport when the
/// paperlist is absent or every record is withheld.
inline ExportResult export_paperlist(const std::string& venue, int year,
                                     const std::filesystem::path& data_root,
                                     const std::optional<PhaseDates>& phase = std::nullopt,
                                     const ReviewDimensionSchema* schema = nullptr) {
  auto src = paperlist_location(data_root, venue, year);
  if (!std::filesystem::exists(src)) {
    raise(ErrorKind::NothingToExport,
          "no stored paperlist for " + venue + " " + std::to_string(year));
  }
  auto stored = load_paperlist(src);

  // Archive-derived pre/post ratings override whatever the capture payloads
  // carried; the archive replay is the authority on score history. Papers
  // the archive never saw (community submissions) keep their own fields.
  auto events = data_root / "archive" / venue / std::to_string(year) / "events.ndjson";
  if (phase && std::filesystem::exists(events)) {
    auto archive = SnapshotArchive::open(data_root / "archive", venue, year);
    auto dynamics = compute_paper_dynamics(archive, phase);
    for (auto& rec : stored.papers) {
      auto it = dynamics.find(rec.paper_id);
      if (it == dynamics.end()) continue;
      const auto& d = it->second;
      rec.rating_pre_rebuttal = d.pre_mean;
      rec.rating_post_rebuttal = d.post_mean;
      rec.rating_delta = d.delta;
      rec.num_score_changes = d.score_changes;
    }
  }

  std::vector<PaperRecord> released;
  released.reserve(stored.papers.size());
  for (auto& rec : stored.papers) {
    if (display_allowed(rec)) released.push_back(std::move(rec));
  }
  ExportResult out;
  out.withheld = static_cast<int64_t>(stored.papers.size()) -
                 static_cast<int64_t>(released.size());
  if (released.empty()) {
    raise(ErrorKind::NothingToExport,
          "every record for " + venue + " " + std::to_string(year) + " is consent-withheld");
  }

  auto content = paperlist_to_string(venue, year, released, schema);
  out.content_hash = sha256_hex(content);
  out.version = "v" + out.content_hash.substr(0, 12);
  out.records = static_cast<int64_t>(released.size());
  out.file = export_location(data_root) / (venue + "_" + std::to_string(year) +
                                           "_paperlist.json");
  detail::write_atomic(out.file, content);

  out.entry.version = out.version;
  out.entry.venue = venue;
  out.entry.year = year;
  out.entry.file = out.file.filename().string();
  out.entry.content_hash = out.content_hash;
  out.entry.provenance = detail::provenance_of(released);
  out.entry.generated_at = detail::newest_ingest(released);
  out.manifest_appended = append_manifest(manifest_location(data_root), out.entry);
  return out;
}

}  // namespace reviewkit
