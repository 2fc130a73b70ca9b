#pragma once

// Seeded synthetic venue generator. Papers get grid ratings from a latent
// quality draw, a discussion phase flips some scores, and each final status
// is sampled from the ordered-logit law at the paper's realized mean rating.
// Alongside the records it emits a snapshot history and a truth record with
// the per-bin status tallies, probabilities, and entropies counted during
// generation, so analytics results can be checked against an independent
// bookkeeping of the same draws.
//
// Randomness is a single sequential SplitMix64 stream with a fixed draw
// order (quality, then per-reviewer scores, then per-reviewer-per-dimension
// change flips, then the status draw), which makes regeneration from the
// same seed byte-identical on every platform.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "reviewkit/analytics.hpp"
#include "reviewkit/archive.hpp"
#include "reviewkit/core.hpp"
#include "reviewkit/errors.hpp"
#include "reviewkit/jsonio.hpp"
#include "reviewkit/rng.hpp"

namespace reviewkit {

struct ScoreScale {
  Decimal min;
  Decimal max;
  Decimal step;

  void validate(const std::string& what) const {
    if (!(min < max)) raise(ErrorKind::InvalidSpec, what + ": scale min must be < max");
    if (step.micros() <= 0) raise(ErrorKind::InvalidSpec, what + ": scale step must be > 0");
    if ((max.micros() - min.micros()) % step.micros() != 0) {
      raise(ErrorKind::InvalidSpec, what + ": scale range must be a multiple of step");
    }
  }

  int64_t steps() const { return (max.micros() - min.micros()) / step.micros(); }

  Decimal at(int64_t index) const {
    return Decimal::from_micros(min.micros() + index * step.micros());
  }
};

struct GeneratorSpec {
  uint64_t seed = 42;
  int64_t n_papers = 100;
  std::string venue = "synth";
  int year = 2025;
  int reviewers_min = 3;
  int reviewers_max = 5;
  ScoreScale rating{Decimal::from_int(1), Decimal::from_int(10), Decimal::from_int(1)};
  ScoreScale confidence{Decimal::from_int(1), Decimal::from_int(5), Decimal::from_int(1)};
  double kappa = 1.5;
  std::array<double, 3> taus = {4.0, 6.0, 7.0};
  double change_probability = 0.3;  // per reviewer per dimension, during discussion
  bool triangular_means = false;    // default uniform latent quality
  PhaseDates phases{*UtcTime::parse("2025-06-01T00:00:00Z"),
                    *UtcTime::parse("2025-06-10T00:00:00Z"),
                    *UtcTime::parse("2025-06-20T00:00:00Z"),
                    *UtcTime::parse("2025-07-15T00:00:00Z")};
  BinSpec bins;  // binning used for the truth record

  void validate() const {
    if (n_papers < 0) raise(ErrorKind::InvalidSpec, "n_papers must be >= 0");
    if (venue.empty()) raise(ErrorKind::InvalidSpec, "venue must be non-empty");
    if (reviewers_min < 1 || reviewers_min > reviewers_max) {
      raise(ErrorKind::InvalidSpec, "need 1 <= reviewers_min <= reviewers_max");
    }
    rating.validate("rating");
    confidence.validate("confidence");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
      raise(ErrorKind::InvalidSpec, "kappa must be finite and >= 0");
    }
    for (size_t i = 0; i < taus.size(); ++i) {
      if (!std::isfinite(taus[i])) raise(ErrorKind::InvalidSpec, "taus must be finite");
      if (i > 0 && !(taus[i - 1] < taus[i])) {
        raise(ErrorKind::InvalidSpec, "taus must be strictly increasing");
      }
    }
    if (!(change_probability >= 0.0 && change_probability <= 1.0)) {
      raise(ErrorKind::InvalidSpec, "change_probability must be in [0, 1]");
    }
    if (!(phases.review_release < phases.discussion_start &&
          phases.discussion_start < phases.discussion_end &&
          phases.discussion_end < phases.decision)) {
      raise(ErrorKind::InvalidSpec, "phase dates must be strictly increasing");
    }
    if (bins.width.micros() <= 0) raise(ErrorKind::InvalidSpec, "bin width must be positive");
  }

  static GeneratorSpec from_json(const nlohmann::json& j);
  static GeneratorSpec load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Venue config describing the generated data, usable to normalize the
  /// wire payloads this generator writes.
  VenueConfig venue_config() const {
    VenueConfig cfg;
    cfg.venue = venue;
    cfg.year = year;
    cfg.source_kind = SourceClass::StaticProceedings;
    cfg.schema.dimensions = {
        {kRatingDimension, rating.min, rating.max, rating.step},
        {kConfidenceDimension, confidence.min, confidence.max, confidence.step},
    };
    cfg.phase_dates = phases;
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// Truth record

struct TruthBin {
  int64_t bin_index = 0;
  std::array<int64_t, kTierCount> tier_counts{};
  int64_t papers = 0;
  std::array<double, kTierCount> p{};
  double entropy = 0.0;
};

/// Exact per-bin tallies of the statuses actually sampled, with the
/// resulting probabilities and entropies. Computed by counting during
/// generation, independent of the analytics implementations under test.
struct TruthRecord {
  double kappa = 0.0;
  std::array<double, 3> taus{};
  int64_t papers = 0;
  int64_t score_changes = 0;  // discussion-phase value flips applied
  std::vector<TruthBin> bins;  // ascending bin index, empty bins absent
  double weighted_entropy = 0.0;
  Decimal bin_origin;
  Decimal bin_width;

  nlohmann::json to_json() const {
    nlohmann::json bins_json = nlohmann::json::array();
    for (const auto& b : bins) {
      bins_json.push_back({
          {"bin", b.bin_index},
          {"counts", b.tier_counts},
          {"papers", b.papers},
          {"p", b.p},
          {"entropy", b.entropy},
      });
    }
    return {
        {"kappa", kappa},
        {"taus", taus},
        {"papers", papers},
        {"score_changes", score_changes},
        {"weighted_entropy", weighted_entropy},
        {"bin_origin", bin_origin.str()},
        {"bin_width", bin_width.str()},
        {"bins", bins_json},
    };
  }

  static TruthRecord from_json(const nlohmann::json& j) {
    TruthRecord t;
    t.kappa = j.at("kappa").get<double>();
    t.taus = j.at("taus").get<std::array<double, 3>>();
    t.papers = j.at("papers").get<int64_t>();
    t.score_changes = j.at("score_changes").get<int64_t>();
    t.weighted_entropy = j.at("weighted_entropy").get<double>();
    t.bin_origin = detail::decimal_from_json(j.at("bin_origin"), "bin_origin");
    t.bin_width = detail::decimal_from_json(j.at("bin_width"), "bin_width");
    for (const auto& bj : j.at("bins")) {
      TruthBin b;
      b.bin_index = bj.at("bin").get<int64_t>();
      b.tier_counts = bj.at("counts").get<std::array<int64_t, kTierCount>>();
      b.papers = bj.at("papers").get<int64_t>();
      b.p = bj.at("p").get<std::array<double, kTierCount>>();
      b.entropy = bj.at("entropy").get<double>();
      t.bins.push_back(b);
    }
    return t;
  }
};

struct SynthCapture {
  UtcTime captured_at;
  PaperScores scores;
};

struct SynthOutput {
  GeneratorSpec spec;
  std::vector<PaperRecord> papers;
  std::vector<SynthCapture> captures;  // review release, mid-discussion, decision
  TruthRecord truth;
};

// ---------------------------------------------------------------------------
// Generation

namespace detail {

/// Nearest grid index for a continuous value, clamped to the scale.
inline int64_t grid_near(const ScoreScale& scale, double v) {
  double lo = static_cast<double>(scale.min.micros()) / Decimal::kScale;
  double st = static_cast<double>(scale.step.micros()) / Decimal::kScale;
  auto idx = static_cast<int64_t>(std::llround((v - lo) / st));
  if (idx < 0) idx = 0;
  if (idx > scale.steps()) idx = scale.steps();
  return idx;
}

inline double scale_lo(const ScoreScale& s) {
  return static_cast<double>(s.min.micros()) / Decimal::kScale;
}
inline double scale_hi(const ScoreScale& s) {
  return static_cast<double>(s.max.micros()) / Decimal::kScale;
}

/// Cumulative ordered-logit sampling: the first tier whose cumulative
/// probability exceeds the uniform draw.
inline int sample_tier(double kappa, const std::array<double, 3>& taus, double x, double u) {
  for (int s = 0; s < 3; ++s) {
    if (u < logistic_cdf(taus[static_cast<size_t>(s)] - kappa * x)) return s;
  }
  return 3;
}

inline std::string synth_paper_id(const std::string& venue, int year, int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%05lld", static_cast<long long>(index + 1));
  return venue + "-" + std::to_string(year) + "-" + buf;
}

}  // namespace detail

inline SynthOutput generate(const GeneratorSpec& spec) {
  spec.validate();
  SynthOutput out;
  out.spec = spec;
  out.truth.kappa = spec.kappa;
  out.truth.taus = spec.taus;
  out.truth.bin_origin = spec.bins.origin;
  out.truth.bin_width = spec.bins.width;
  if (spec.n_papers == 0) return out;

  UtcTime mid = UtcTime::from_secs(
      spec.phases.discussion_start.secs +
      (spec.phases.discussion_end.secs - spec.phases.discussion_start.secs) / 2);
  out.captures = {{spec.phases.review_release, {}}, {mid, {}}, {spec.phases.decision, {}}};

  const char* areas[] = {"optimization", "representation learning", "applications", "theory"};
  const char* topics[] = {"benchmark", "graphs", "vision", "language", "audio", "safety"};
  const char* institutes[] = {"Institute A", "Institute B", "Institute C", "Institute D",
                              "Institute E", "Institute F", "Institute G", "Institute H"};
  const char* countries[] = {"US", "DE", "CN", "JP"};

  SplitMix64 rng(spec.seed);
  std::map<int64_t, std::array<int64_t, kTierCount>> tally;

  for (int64_t i = 0; i < spec.n_papers; ++i) {
    PaperRecord p;
    p.paper_id = detail::synth_paper_id(spec.venue, spec.year, i);
    p.venue = spec.venue;
    p.year = spec.year;
    p.title = "Synthetic Submission " + std::to_string(i + 1);
    p.primary_area = areas[i % 4];
    p.keywords = {topics[i % 6], topics[(i + 3) % 6]};
    auto n_authors = static_cast<int>(1 + i % 3);
    for (int a = 0; a < n_authors; ++a) {
      AuthorEntry author;
      author.name = "Author " + std::to_string(i + 1) + "-" + std::to_string(a + 1);
      auto inst = static_cast<size_t>((i + a) % 8);
      author.affiliations = {{institutes[inst], std::nullopt, countries[inst % 4]}};
      author.email_domain = "inst" + std::to_string(inst) + ".example.org";
      author.position_index = a + 1;
      p.authors.push_back(std::move(author));
    }
    p.source = SourceKind::OfficialAPI;
    p.ingested_at = spec.phases.decision;

    // Latent quality, then per-reviewer grid scores around it.
    double lo = detail::scale_lo(spec.rating), hi = detail::scale_hi(spec.rating);
    double quality = spec.triangular_means
                         ? (rng.next_range(lo, hi) + rng.next_range(lo, hi)) / 2.0
                         : rng.next_range(lo, hi);
    auto k = static_cast<int>(
        spec.reviewers_min +
        static_cast<int>(rng.next_below(
            static_cast<uint64_t>(spec.reviewers_max - spec.reviewers_min + 1))));
    std::vector<int64_t> rating_idx(static_cast<size_t>(k));
    std::vector<int64_t> confidence_idx(static_cast<size_t>(k));
    for (int r = 0; r < k; ++r) {
      double noise = rng.next_range(-1.0, 1.0);
      rating_idx[static_cast<size_t>(r)] = detail::grid_near(spec.rating, quality + noise);
      confidence_idx[static_cast<size_t>(r)] = static_cast<int64_t>(
          rng.next_below(static_cast<uint64_t>(spec.confidence.steps() + 1)));
    }

    auto& cap_initial = out.captures[0].scores[p.paper_id];
    for (int r = 0; r < k; ++r) {
      auto rid = "r" + std::to_string(r + 1);
      cap_initial[rid] = {
          {kRatingDimension, spec.rating.at(rating_idx[static_cast<size_t>(r)])},
          {kConfidenceDimension, spec.confidence.at(confidence_idx[static_cast<size_t>(r)])},
      };
    }

    // Discussion phase: each (reviewer, dimension) flips one grid step with
    // the configured probability; flips at a scale edge move inward.
    std::vector<bool> touched(static_cast<size_t>(k), false);
    for (int r = 0; r < k; ++r) {
      for (int dim = 0; dim < 2; ++dim) {
        if (rng.next_double() >= spec.change_probability) continue;
        auto& idx = dim == 0 ? rating_idx[static_cast<size_t>(r)]
                             : confidence_idx[static_cast<size_t>(r)];
        auto steps = dim == 0 ? spec.rating.steps() : spec.confidence.steps();
        int64_t dir = rng.next_below(2) == 0 ? -1 : 1;
        if (idx == 0) dir = 1;
        if (idx == steps) dir = -1;
        idx += dir;
        touched[static_cast<size_t>(r)] = true;
        ++out.truth.score_changes;
      }
    }

    auto& cap_mid = out.captures[1].scores[p.paper_id];
    MeanAccumulator mean;
    for (int r = 0; r < k; ++r) {
      auto rid = "r" + std::to_string(r + 1);
      Decimal rating_v = spec.rating.at(rating_idx[static_cast<size_t>(r)]);
      Decimal conf_v = spec.confidence.at(confidence_idx[static_cast<size_t>(r)]);
      cap_mid[rid] = {{kRatingDimension, rating_v}, {kConfidenceDimension, conf_v}};
      mean.add(rating_v);

      Review rev;
      rev.reviewer_id = rid;
      rev.scores = {{kRatingDimension, rating_v}, {kConfidenceDimension, conf_v}};
      rev.timestamp = touched[static_cast<size_t>(r)] ? mid : spec.phases.review_release;
      p.reviews.push_back(std::move(rev));
    }
    out.captures[2].scores[p.paper_id] = cap_mid;

    // Status from the ordered-logit law at the realized final mean rating.
    double x = mean.value();
    int tier = detail::sample_tier(spec.kappa, spec.taus, x, rng.next_double());
    p.final_status = static_cast<DecisionStatus>(tier);
    p.decision_raw = to_string(p.final_status);

    ++tally[spec.bins.bin_of(mean)][static_cast<size_t>(tier)];
    ++out.truth.papers;
    out.papers.push_back(std::move(p));
  }

  for (const auto& [bin, counts] : tally) {
    TruthBin b;
    b.bin_index = bin;
    b.tier_counts = counts;
    for (auto c : counts) b.papers += c;
    for (size_t s = 0; s < kTierCount; ++s) {
      b.p[s] = static_cast<double>(counts[s]) / static_cast<double>(b.papers);
      if (counts[s] > 0) b.entropy -= b.p[s] * std::log(b.p[s]);
    }
    out.truth.weighted_entropy +=
        (static_cast<double>(b.papers) / static_cast<double>(out.truth.papers)) * b.entropy;
    out.truth.bins.push_back(b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Venue growth sweep

struct SweepPoint {
  int year = 0;
  int64_t submissions = 0;
  double kappa = 0.0;
  double weighted_entropy = 0.0;
};

/// One venue-year per requested size, ending at base.year. Discrimination
/// softens with venue size (kappa proportional to 1/ln X, anchored at
/// kappa_ref for size_ref), so entropy rises roughly linearly in ln X.
/// final_year_hardening multiplies the last year's kappa, for studying a
/// year that breaks the trend.
inline std::vector<SweepPoint> growth_sweep(const GeneratorSpec& base,
                                            const std::vector<int64_t>& sizes,
                                            double kappa_ref, int64_t size_ref,
                                            double final_year_hardening = 1.0) {
  if (sizes.empty()) raise(ErrorKind::InvalidSpec, "growth sweep needs at least one size");
  if (!(kappa_ref > 0.0) || size_ref < 2) {
    raise(ErrorKind::InvalidSpec, "growth sweep needs kappa_ref > 0 and size_ref >= 2");
  }
  std::vector<SweepPoint> out;
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2) raise(ErrorKind::InvalidSpec, "sweep sizes must be >= 2");
    GeneratorSpec spec = base;
    spec.n_papers = sizes[i];
    spec.seed = base.seed + 1000003 * (i + 1);
    spec.year = base.year - static_cast<int>(sizes.size() - 1 - i);
    spec.kappa = kappa_ref * std::log(static_cast<double>(size_ref)) /
                 std::log(static_cast<double>(sizes[i]));
    if (i + 1 == sizes.size()) spec.kappa *= final_year_hardening;
    auto generated = generate(spec);
    out.push_back({spec.year, sizes[i], spec.kappa, generated.truth.weighted_entropy});
  }
  return out;
}

inline std::vector<YearPoint> to_year_points(const std::vector<SweepPoint>& sweep) {
  std::vector<YearPoint> points;
  for (const auto& s : sweep) {
    points.push_back({s.year, static_cast<double>(s.submissions), s.weighted_entropy});
  }
  return points;
}

// ---------------------------------------------------------------------------
// Fixture tree

namespace detail {

inline nlohmann::json wire_payload(const SynthOutput& out, size_t capture_index) {
  const auto& cap = out.captures.at(capture_index);
  bool final_capture = capture_index + 1 == out.captures.size();
  nlohmann::json papers = nlohmann::json::array();
  for (const auto& p : out.papers) {
    nlohmann::json authors = nlohmann::json::array();
    for (const auto& a : p.authors) {
      nlohmann::json affs = nlohmann::json::array();
      for (const auto& aff : a.affiliations) {
        nlohmann::json aj = {{"institution", aff.institution}};
        if (aff.country) aj["country"] = *aff.country;
        affs.push_back(aj);
      }
      authors.push_back({{"name", a.name},
                         {"email_domain", a.email_domain.value_or("")},
                         {"affiliations", affs}});
    }
    nlohmann::json reviews = nlohmann::json::array();
    auto scores_it = cap.scores.find(p.paper_id);
    if (scores_it != cap.scores.end()) {
      for (const auto& [rid, dims] : scores_it->second) {
        nlohmann::json scores = nlohmann::json::object();
        for (const auto& [dim, v] : dims) scores[dim] = v.str();
        UtcTime updated = cap.captured_at;
        for (const auto& rev : p.reviews) {
          if (rev.reviewer_id == rid && rev.timestamp <= cap.captured_at) {
            updated = rev.timestamp;
          }
        }
        reviews.push_back({{"reviewer", rid},
                           {"scores", scores},
                           {"updated_at", updated.str()}});
      }
    }
    nlohmann::json pj = {
        {"id", p.paper_id},
        {"title", p.title},
        {"primary_area", p.primary_area},
        {"keywords", p.keywords},
        {"authors", authors},
        {"reviews", reviews},
    };
    if (final_capture) pj["decision"] = p.decision_raw;
    papers.push_back(std::move(pj));
  }
  return {{"venue", out.spec.venue},
          {"year", out.spec.year},
          {"captured_at", cap.captured_at.str()},
          {"papers", papers}};
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorKind::IoFailure, "cannot write " + p.string());
  f << content;
}

}  // namespace detail

/// Writes the generated venue as connector replay fixtures: a venue config,
/// one raw wire payload per capture under <venue>/<year>/<stamp>.raw, and
/// the truth record. Returns the written paths, sorted.
inline std::vector<std::filesystem::path> write_fixture_tree(
    const SynthOutput& out, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;

  auto config_path = dir / "config.json";
  detail::write_text(config_path, out.spec.venue_config().to_json().dump(2) + "\n");
  written.push_back(config_path);

  auto truth_path = dir / "truth.json";
  detail::write_text(truth_path, out.truth.to_json().dump(2) + "\n");
  written.push_back(truth_path);

  auto spec_path = dir / "generator.json";
  detail::write_text(spec_path, out.spec.to_json().dump(2) + "\n");
  written.push_back(spec_path);

  for (size_t c = 0; c < out.captures.size(); ++c) {
    auto raw_path = dir / out.spec.venue / std::to_string(out.spec.year) /
                    (out.captures[c].captured_at.compact() + ".raw");
    detail::write_text(raw_path, detail::wire_payload(out, c).dump() + "\n");
    written.push_back(raw_path);
  }
  std::sort(written.begin(), written.end());
  return written;
}

// ---------------------------------------------------------------------------
// Spec serialization

inline nlohmann::json GeneratorSpec::to_json() const {
  return {
      {"seed", seed},
      {"n_papers", n_papers},
      {"venue", venue},
      {"year", year},
      {"reviewers", {{"min", reviewers_min}, {"max", reviewers_max}}},
      {"rating_scale",
       {{"min", rating.min.str()}, {"max", rating.max.str()}, {"step", rating.step.str()}}},
      {"confidence_scale",
       {{"min", confidence.min.str()},
        {"max", confidence.max.str()},
        {"step", confidence.step.str()}}},
      {"kappa", kappa},
      {"taus", taus},
      {"change_probability", change_probability},
      {"mean_distribution", triangular_means ? "triangular" : "uniform"},
      {"phases",
       {{"review_release", phases.review_release.str()},
        {"discussion_start", phases.discussion_start.str()},
        {"discussion_end", phases.discussion_end.str()},
        {"decision", phases.decision.str()}}},
      {"bin_origin", bins.origin.str()},
      {"bin_width", bins.width.str()},
  };
}

inline GeneratorSpec GeneratorSpec::from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  if (!j.is_object()) raise(ErrorKind::InvalidSpec, "generator spec must be a JSON object");
  s.seed = j.value("seed", uint64_t{42});
  s.n_papers = j.value("n_papers", int64_t{100});
  s.venue = j.value("venue", std::string("synth"));
  s.year = j.value("year", 2025);
  if (j.contains("reviewers")) {
    s.reviewers_min = j.at("reviewers").value("min", 3);
    s.reviewers_max = j.at("reviewers").value("max", 5);
  }
  auto read_scale = [](const nlohmann::json& sj, ScoreScale& scale, const std::string& what) {
    if (sj.contains("min")) scale.min = detail::decimal_from_json(sj.at("min"), what + ".min");
    if (sj.contains("max")) scale.max = detail::decimal_from_json(sj.at("max"), what + ".max");
    if (sj.contains("step")) {
      scale.step = detail::decimal_from_json(sj.at("step"), what + ".step");
    }
  };
  if (j.contains("rating_scale")) read_scale(j.at("rating_scale"), s.rating, "rating_scale");
  if (j.contains("confidence_scale")) {
    read_scale(j.at("confidence_scale"), s.confidence, "confidence_scale");
  }
  s.kappa = j.value("kappa", 1.5);
  if (j.contains("taus")) s.taus = j.at("taus").get<std::array<double, 3>>();
  s.change_probability = j.value("change_probability", 0.3);
  if (j.contains("mean_distribution")) {
    auto m = j.at("mean_distribution").get<std::string>();
    if (m == "triangular") {
      s.triangular_means = true;
    } else if (m == "uniform") {
      s.triangular_means = false;
    } else {
      raise(ErrorKind::InvalidSpec, "mean_distribution must be uniform or triangular");
    }
  }
  if (j.contains("phases")) {
    const auto& pj = j.at("phases");
    s.phases.review_release =
        detail::time_from_json(pj.at("review_release"), "phases.review_release");
    s.phases.discussion_start =
        detail::time_from_json(pj.at("discussion_start"), "phases.discussion_start");
    s.phases.discussion_end =
        detail::time_from_json(pj.at("discussion_end"), "phases.discussion_end");
    s.phases.decision = detail::time_from_json(pj.at("decision"), "phases.decision");
  }
  if (j.contains("bin_origin")) {
    s.bins.origin = detail::decimal_from_json(j.at("bin_origin"), "bin_origin");
  }
  if (j.contains("bin_width")) {
    s.bins.width = detail::decimal_from_json(j.at("bin_width"), "bin_width");
  }
  s.validate();
  return s;
}

inline GeneratorSpec GeneratorSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoFailure, "cannot open generator spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(parse_json(ss.str(), path.string()));
}

}  // namespace reviewkit
