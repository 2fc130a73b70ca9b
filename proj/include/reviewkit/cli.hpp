#pragma once

// Command-line surface. One binary, six subcommands:
//
//   ingest               fetch or replay captures, refresh the paperlist
//   snapshot             inspect the append-only score archive
//   analyze              run the statistical views over a stored year
//   validate-extraction  score an extraction corpus for consistency
//   synth                generate a synthetic venue fixture tree
//   export               write a versioned release and record it
//
// Exit codes: 0 on success, 1 when the data refuses the operation (missing
// paperlist, consent leaves nothing to export, fetch failures), 2 for usage
// errors, which print the synopsis to stderr. --help prints to stdout and
// exits 0. Randomness only enters through explicit seeds; no command reads
// the wall clock except live ingestion, whose fetch stamps say when data
// arrived.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "reviewkit/analytics.hpp"
#include "reviewkit/archive.hpp"
#include "reviewkit/core.hpp"
#include "reviewkit/dynamics.hpp"
#include "reviewkit/errors.hpp"
#include "reviewkit/export.hpp"
#include "reviewkit/extraction.hpp"
#include "reviewkit/http_client.hpp"
#include "reviewkit/ingest.hpp"
#include "reviewkit/paperlist.hpp"
#include "reviewkit/synth.hpp"

namespace reviewkit {
namespace cli_detail {

inline Decimal decimal_flag(const std::string& text, const char* what) {
  auto d = Decimal::parse(text);
  if (!d) raise(ErrorKind::InvalidConfig, std::string(what) + " is not a decimal: " + text);
  return *d;
}

inline UtcTime time_flag(const std::string& text, const char* what) {
  auto t = UtcTime::parse(text);
  if (!t) raise(ErrorKind::InvalidConfig, std::string(what) + " is not a UTC instant: " + text);
  return *t;
}

/// The venue config for an ingest run: an explicit --config wins, otherwise
/// the fixture tree's own config.json.
inline VenueConfig resolve_config(const std::string& config_path, const std::string& fixture) {
  if (!config_path.empty()) return VenueConfig::load(config_path);
  if (!fixture.empty()) {
    auto p = std::filesystem::path(fixture) / "config.json";
    if (std::filesystem::exists(p)) return VenueConfig::load(p);
    raise(ErrorKind::InvalidConfig, "no config.json under " + fixture + "; pass --config");
  }
  raise(ErrorKind::InvalidConfig, "a venue config is required: --config FILE or --fixture DIR");
}

inline void cross_check(const VenueConfig& cfg, const std::string& venue, int year) {
  if (!venue.empty() && venue != cfg.venue) {
    raise(ErrorKind::InvalidConfig,
          "--venue " + venue + " disagrees with the config's " + cfg.venue);
  }
  if (year != 0 && year != cfg.year) {
    raise(ErrorKind::InvalidConfig, "--year " + std::to_string(year) +
                                        " disagrees with the config's " +
                                        std::to_string(cfg.year));
  }
}

inline void print_ingest_report(const IngestReport& r) {
  std::cout << "captures processed=" << r.captures_processed << " skipped=" << r.captures_skipped
            << " records=" << r.records << " quarantined=" << r.quarantined << "\n";
  for (const auto& c : r.conflicts) std::cout << "conflict: " << c << "\n";
  std::cout << "paperlist " << r.paperlist_path.string() << "\n";
}

struct IngestOpts {
  std::string venue;
  int year = 0;
  std::string data_root = "data";
  std::string fixture;
  std::string community;
  std::string config;
  bool once = false;
};

inline void run_ingest(const IngestOpts& o) {
  auto cfg = resolve_config(o.config, o.fixture);
  cross_check(cfg, o.venue, o.year);
  std::filesystem::path root = o.data_root;

  if (!o.community.empty()) {
    auto rep = ingest_community_file(cfg, o.community, root);
    std::cout << "community rows accepted=" << rep.batch.accepted.size()
              << " rejected=" << rep.batch.rejected.size() << "\n";
    for (const auto& rej : rep.batch.rejected) {
      std::cout << "rejected row " << rej.row_index << " (" << to_string(rej.reason)
                << "): " << rej.detail << "\n";
    }
    std::cout << "paperlist " << rep.paperlist_path.string() << "\n";
    return;
  }

  if (!o.fixture.empty() && !o.once) {
    print_ingest_report(ingest_fixture_tree(cfg, o.fixture, root));
    return;
  }

  // One live fetch-and-ingest cycle. Scheduling across cycles belongs to
  // whatever invokes the binary.
  SystemClock clock;
  RequestSpacer spacer(cfg.min_request_interval_ms, clock);
  ConnectorJob job{cfg, std::nullopt};
  std::unique_ptr<Connector> conn;
  HttplibTransport transport;
  if (!o.fixture.empty()) {
    conn = std::make_unique<FixtureReplayConnector>(o.fixture);
  } else if (cfg.source_kind == SourceClass::StaticProceedings) {
    conn = std::make_unique<StaticProceedingsConnector>();
  } else {
    conn = std::make_unique<ApiConnector>(transport);
  }
  print_ingest_report(ingest_once(job, *conn, clock, root, &spacer));
}

struct SnapshotOpts {
  std::string venue;
  int year = 0;
  std::string data_root = "data";
  std::string from;
  std::string to;
  std::string paper;
  std::string config;
};

inline SnapshotArchive open_archive(const SnapshotOpts& o) {
  return SnapshotArchive::open(std::filesystem::path(o.data_root) / "archive", o.venue, o.year);
}

inline void run_snapshot_diff(const SnapshotOpts& o) {
  auto archive = open_archive(o);
  auto instants = archive.capture_instants();
  if (instants.empty()) raise(ErrorKind::EmptyInput, "the archive has no captures");
  UtcTime from = o.from.empty() ? instants.front() : time_flag(o.from, "--from");
  UtcTime to = o.to.empty() ? instants.back() : time_flag(o.to, "--to");
  auto changes = archive.diff(from, to);
  std::cout << changes.size() << " changes between " << from.str() << " and " << to.str()
            << "\n";
  for (const auto& c : changes) {
    std::cout << c.paper_id << " " << c.reviewer_id << " " << c.dimension << ": "
              << (c.old_value ? c.old_value->str() : "-") << " -> "
              << (c.new_value ? c.new_value->str() : "-") << "\n";
  }
}

inline void run_snapshot_replay(const SnapshotOpts& o) {
  auto archive = open_archive(o);
  auto fp = archive.replay(o.paper);
  std::cout << fp.paper_id << "\n";
  for (const auto& [reviewer, dims] : fp.series) {
    for (const auto& [dim, points] : dims) {
      std::cout << reviewer << " " << dim << ":";
      for (const auto& [at, value] : points) std::cout << " " << at.str() << "=" << value.str();
      std::cout << "\n";
    }
  }
}

inline void run_snapshot_export(const SnapshotOpts& o) {
  std::filesystem::path root = o.data_root;
  auto events = root / "archive" / o.venue / std::to_string(o.year) / "events.ndjson";
  if (!std::filesystem::exists(events)) {
    raise(ErrorKind::NothingToExport,
          "no score archive for " + o.venue + " " + std::to_string(o.year));
  }
  auto archive = open_archive(o);
  auto instants = archive.capture_instants();
  if (instants.empty()) {
    raise(ErrorKind::NothingToExport, "the archive has no captures to release");
  }

  std::string label = provenance_label(SourceKind::OfficialAPI);
  if (!o.config.empty()) {
    auto cfg = VenueConfig::load(o.config);
    cross_check(cfg, o.venue, o.year);
    label = provenance_label(source_kind_for(cfg.source_kind));
  }

  auto content = detail::read_file(events);
  ManifestEntry entry;
  entry.venue = o.venue;
  entry.year = o.year;
  entry.content_hash = sha256_hex(content);
  entry.version = "v" + entry.content_hash.substr(0, 12);
  entry.file = o.venue + "_" + std::to_string(o.year) + "_events.ndjson";
  entry.provenance = label;
  entry.generated_at = instants.back().str();
  auto out_path = export_location(root) / entry.file;
  detail::write_atomic(out_path, content);
  bool appended = append_manifest(manifest_location(root), entry);
  std::cout << "wrote " << out_path.string() << " version=" << entry.version
            << " manifest=" << (appended ? "appended" : "unchanged") << "\n";
}

struct AnalyzeOpts {
  std::string view;
  std::string venue;
  int year = 0;
  std::string data_root = "data";
  std::string bin_width = "0.2";
  std::string bin_origin = "0";
  int64_t cutoff = 30;
  std::string dimension = "rating";
  std::string config;
  std::string out_dir;
};

inline void write_plot(const std::string& out_dir, const PlotData& pd) {
  if (out_dir.empty()) return;
  auto path = std::filesystem::path(out_dir) / pd.file_name;
  detail::write_atomic(path, pd.csv);
  std::cout << "wrote " << path.string() << "\n";
}

inline void run_analyze(const AnalyzeOpts& o) {
  std::filesystem::path root = o.data_root;
  BinSpec bins{decimal_flag(o.bin_origin, "--bin-origin"), decimal_flag(o.bin_width, "--bin-width")};
  std::optional<PhaseDates> phase;
  if (!o.config.empty()) {
    auto cfg = VenueConfig::load(o.config);
    cross_check(cfg, o.venue, o.year);
    phase = cfg.phase_dates;
  }
  auto records = load_paperlist(paperlist_location(root, o.venue, o.year)).papers;

  if (o.view == "entropy") {
    auto res = decision_entropy(records, bins);
    std::cout << "included=" << res.included << " excluded=" << res.excluded
              << " weighted_mean=" << format_g6(res.weighted_mean) << "\n";
    for (const auto& b : res.bins) {
      std::cout << "[" << b.lo.str() << "," << b.hi.str() << "): papers=" << b.papers;
      for (size_t i = 0; i < b.tier_counts.size(); ++i) {
        std::cout << " " << to_string(static_cast<DecisionStatus>(i)) << "="
                  << b.tier_counts[i];
      }
      std::cout << " H=" << format_g6(b.entropy) << "\n";
    }
    return;
  }

  if (o.view == "scaling") {
    // Every stored year of this venue becomes one point; years with no
    // decided papers yet cannot contribute an entropy and are skipped.
    std::vector<YearPoint> points;
    auto dir = root / "paperlist";
    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(dir)) {
      for (const auto& e : std::filesystem::directory_iterator(dir)) {
        auto name = e.path().filename().string();
        if (name.rfind(o.venue + "_", 0) == 0 && e.path().extension() == ".json") {
          files.push_back(e.path());
        }
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto pl = load_paperlist(f);
      try {
        auto res = decision_entropy(pl.papers, bins);
        points.push_back({pl.year, static_cast<double>(pl.papers.size()), res.weighted_mean});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyYear) throw;
      }
    }
    auto fit = fit_log_scaling(points, o.year);
    std::cout << "slope=" << format_g6(fit.slope) << " intercept=" << format_g6(fit.intercept)
              << " r_squared=" << format_g6(fit.r_squared) << "\n";
    for (size_t i = 0; i < points.size(); ++i) {
      std::cout << points[i].year << ": X=" << format_g6(points[i].submissions)
                << " H_bar=" << format_g6(points[i].mean_entropy)
                << " resid=" << format_g6(fit.residuals[i])
                << (fit.held_out_year && *fit.held_out_year == points[i].year ? " (held out)"
                                                                              : "")
                << "\n";
    }
    PlotInputs in;
    in.scaling_points = points;
    in.scaling_fit = fit;
    write_plot(o.out_dir, emit_plot_data(in, Figure::EntropyScaling));
    return;
  }

  if (o.view == "logit") {
    auto obs = logit_observations(records);
    auto model = fit_ordered_logit(obs);
    std::cout << "kappa=" << format_g6(model.kappa) << " tau=" << format_g6(model.tau[0]) << ","
              << format_g6(model.tau[1]) << "," << format_g6(model.tau[2])
              << " converged=" << (model.converged ? "yes" : "no")
              << " iterations=" << model.iterations
              << " log_likelihood=" << format_g6(model.log_likelihood) << "\n";
    return;
  }

  if (o.view == "dynamics") {
    auto archive = SnapshotArchive::open(root / "archive", o.venue, o.year);
    auto report = compute_dynamics_report(archive, records, phase, bins, o.cutoff);
    std::cout << "prepost papers=" << report.prepost.papers
              << " excluded=" << report.prepost.excluded
              << " no_record=" << report.prepost.no_record << "\n";
    for (const auto& [dim, frac] : report.updates.fraction) {
      std::cout << dim << " updated fraction=" << format_g6(frac) << "\n";
    }
    std::cout << "combinations=" << report.combinations.size() << "\n";
    PlotInputs in;
    in.dynamics = report;
    in.bins = bins;
    in.suppress = withheld_ids(records);
    for (Figure f : {Figure::PrePost, Figure::Sankey, Figure::Updates, Figure::Consensus,
                     Figure::Combinations}) {
      write_plot(o.out_dir, emit_plot_data(in, f));
    }
    return;
  }

  if (o.view == "consensus") {
    auto archive = SnapshotArchive::open(root / "archive", o.venue, o.year);
    auto series = consensus_series(archive, records, daily_grid(archive), phase);
    for (const auto& [status, pts] : series.by_status) {
      if (pts.empty()) continue;
      std::cout << to_string(status) << ": points=" << pts.size()
                << " final_spread=" << format_g6(pts.back().mean_spread) << "\n";
    }
    write_plot(o.out_dir, {std::string(to_string(Figure::Consensus)) + ".csv",
                           consensus_csv(series)});
    return;
  }

  if (o.view == "combos") {
    auto stats = acceptance_by_combination(records, o.cutoff);
    for (const auto& s : stats) {
      std::cout << s.scores << ": papers=" << s.papers << " accepted=" << s.accepted
                << " rate=" << format_g6(s.acceptance_rate) << " range=" << s.range << "\n";
    }
    write_plot(o.out_dir, {std::string(to_string(Figure::Combinations)) + ".csv",
                           combinations_csv(stats)});
    return;
  }

  if (o.view == "grid") {
    auto cells = status_mix_by_bin(records, o.dimension, bins);
    for (const auto& c : cells) {
      std::cout << c.year << " [" << c.lo.str() << "," << c.hi.str()
                << "): papers=" << c.volume << "\n";
    }
    write_plot(o.out_dir, {std::string(to_string(Figure::StatusMix)) + ".csv",
                           status_mix_csv(cells)});
    return;
  }

  raise(ErrorKind::InvalidConfig, "unknown analyze view '" + o.view + "'");
}

struct ExtractionOpts {
  std::string corpus;
  std::string endpoint;
  std::string remote_config;
  std::string countries;
  std::string out;
};

inline void run_validate_extraction(const ExtractionOpts& o) {
  std::optional<CountryTable> table;
  if (!o.countries.empty()) table = CountryTable::load(o.countries);
  const CountryTable* tp = table ? &*table : nullptr;

  ValidationResult result;
  if (!o.endpoint.empty() || !o.remote_config.empty()) {
    RemoteExtractorConfig rc;
    rc.model = "default";
    rc.prompt_template = "{{document}}";
    if (!o.remote_config.empty()) {
      rc = RemoteExtractorConfig::from_json(
          parse_json(detail::read_file(o.remote_config), o.remote_config));
    }
    if (!o.endpoint.empty()) rc.endpoint = o.endpoint;
    HttplibTransport transport;
    RemoteExtractor ex(rc, transport);
    result = validate_corpus(o.corpus, ex, tp);
  } else {
    ReplayExtractor ex(o.corpus);
    result = validate_corpus(o.corpus, ex, tp);
  }

  const auto& r = result.report;
  std::cout << "documents=" << r.documents << " success=" << format_g6(r.success)
            << " aff=" << format_g6(r.aff_rate) << " email=" << format_g6(r.email_rate)
            << " parse=" << format_g6(r.parse_rate) << "\n";
  bool bound = union_bound_check(r.aff_rate, r.email_rate, r.parse_rate, r.success);
  std::cout << "union_bound=" << (bound ? "holds" : "violated") << "\n";
  std::cout << "multi_affiliation="
            << (result.multi_affiliation ? format_g6(*result.multi_affiliation)
                                         : std::string("n/a"))
            << "\n";
  std::cout << "tokens prompt=" << result.tokens.prompt
            << " completion=" << result.tokens.completion << " total=" << result.tokens.total
            << "\n";
  if (!o.out.empty()) {
    detail::write_atomic(o.out, results_csv(result));
    std::cout << "wrote " << o.out << "\n";
  }
}

struct SynthOpts {
  std::string spec;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
};

inline void run_synth(const SynthOpts& o) {
  auto spec = GeneratorSpec::load(o.spec);
  if (o.seed_set) spec.seed = o.seed;
  auto out = generate(spec);
  auto files = write_fixture_tree(out, o.out_dir);
  std::cout << "wrote " << files.size() << " files under " << o.out_dir
            << " papers=" << out.truth.papers
            << " weighted_entropy=" << format_g6(out.truth.weighted_entropy) << "\n";
}

struct ExportOpts {
  std::string venue;
  int year = 0;
  std::string data_root = "data";
  std::string config;
};

inline void run_export(const ExportOpts& o) {
  std::optional<PhaseDates> phase;
  std::optional<VenueConfig> cfg;
  if (!o.config.empty()) {
    cfg = VenueConfig::load(o.config);
    cross_check(*cfg, o.venue, o.year);
    phase = cfg->phase_dates;
  }
  auto res = export_paperlist(o.venue, o.year, o.data_root, phase,
                              cfg ? &cfg->schema : nullptr);
  std::cout << "wrote " << res.file.string() << " records=" << res.records
            << " withheld=" << res.withheld << " version=" << res.version
            << " manifest=" << (res.manifest_appended ? "appended" : "unchanged") << "\n";
}

}  // namespace cli_detail

inline int run(int argc, char** argv) {
  namespace cd = cli_detail;
  CLI::App app{"peer-review archive and analytics toolkit"};
  app.name("reviewkit");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  auto ing = std::make_shared<cd::IngestOpts>();
  auto* ingest_cmd = app.add_subcommand("ingest", "fetch or replay captures into the data root");
  ingest_cmd->add_option("--venue", ing->venue, "venue id, cross-checked against the config");
  ingest_cmd->add_option("--year", ing->year, "year, cross-checked against the config");
  ingest_cmd->add_option("--data-root", ing->data_root, "data directory (default: data)");
  ingest_cmd->add_option("--fixture", ing->fixture, "replay captures from a fixture tree");
  ingest_cmd->add_option("--community", ing->community, "ingest a community CSV batch");
  ingest_cmd->add_option("--config", ing->config, "venue config JSON");
  ingest_cmd->add_flag("--once", ing->once, "run a single fetch-and-ingest cycle");
  ingest_cmd->callback([ing] { cd::run_ingest(*ing); });

  auto snap = std::make_shared<cd::SnapshotOpts>();
  auto* snap_cmd = app.add_subcommand("snapshot", "inspect the append-only score archive");
  snap_cmd->add_option("--venue", snap->venue, "venue id")->required();
  snap_cmd->add_option("--year", snap->year, "year")->required();
  snap_cmd->add_option("--data-root", snap->data_root, "data directory (default: data)");
  snap_cmd->require_subcommand(1);
  auto* diff_cmd = snap_cmd->add_subcommand("diff", "score changes between two instants");
  diff_cmd->add_option("--from", snap->from, "start instant (default: first capture)");
  diff_cmd->add_option("--to", snap->to, "end instant (default: last capture)");
  diff_cmd->callback([snap] { cd::run_snapshot_diff(*snap); });
  auto* replay_cmd = snap_cmd->add_subcommand("replay", "one paper's full score history");
  replay_cmd->add_option("--paper", snap->paper, "paper id")->required();
  replay_cmd->callback([snap] { cd::run_snapshot_replay(*snap); });
  auto* sexport_cmd = snap_cmd->add_subcommand("export", "release the event log");
  sexport_cmd->add_option("--config", snap->config, "venue config JSON, names the source");
  sexport_cmd->callback([snap] { cd::run_snapshot_export(*snap); });

  auto ana = std::make_shared<cd::AnalyzeOpts>();
  auto* ana_cmd = app.add_subcommand("analyze", "statistical views over a stored year");
  ana_cmd->add_option("view", ana->view, "entropy|scaling|logit|dynamics|consensus|combos|grid")
      ->required()
      ->check(CLI::IsMember(
          {"entropy", "scaling", "logit", "dynamics", "consensus", "combos", "grid"}));
  ana_cmd->add_option("--venue", ana->venue, "venue id")->required();
  ana_cmd->add_option("--year", ana->year, "year")->required();
  ana_cmd->add_option("--data-root", ana->data_root, "data directory (default: data)");
  ana_cmd->add_option("--bin-width", ana->bin_width, "rating bin width (default: 0.2)");
  ana_cmd->add_option("--bin-origin", ana->bin_origin, "rating bin origin (default: 0)");
  ana_cmd->add_option("--cutoff", ana->cutoff, "minimum papers per score combination");
  ana_cmd->add_option("--dimension", ana->dimension, "dimension for the grid view");
  ana_cmd->add_option("--config", ana->config, "venue config JSON, supplies phase dates");
  ana_cmd->add_option("--out", ana->out_dir, "directory for plot-ready CSV files");
  ana_cmd->callback([ana] { cd::run_analyze(*ana); });

  auto ext = std::make_shared<cd::ExtractionOpts>();
  auto* ext_cmd = app.add_subcommand("validate-extraction",
                                     "score an extraction corpus for consistency");
  ext_cmd->add_option("--corpus", ext->corpus, "corpus directory")->required();
  ext_cmd->add_option("--endpoint", ext->endpoint, "live extractor endpoint");
  ext_cmd->add_option("--remote-config", ext->remote_config, "extractor config JSON");
  ext_cmd->add_option("--countries", ext->countries, "affiliation-to-country CSV");
  ext_cmd->add_option("--out", ext->out, "write per-document results CSV here");
  ext_cmd->callback([ext] { cd::run_validate_extraction(*ext); });

  auto syn = std::make_shared<cd::SynthOpts>();
  auto* syn_cmd = app.add_subcommand("synth", "generate a synthetic venue fixture tree");
  syn_cmd->add_option("--spec", syn->spec, "generator spec JSON")->required();
  syn_cmd->add_option("--out", syn->out_dir, "fixture output directory")->required();
  auto* seed_opt = syn_cmd->add_option("--seed", syn->seed, "override the spec's seed");
  syn_cmd->callback([syn, seed_opt] {
    syn->seed_set = seed_opt->count() > 0;
    cd::run_synth(*syn);
  });

  auto exp = std::make_shared<cd::ExportOpts>();
  auto* exp_cmd = app.add_subcommand("export", "write a versioned release and record it");
  exp_cmd->add_option("--venue", exp->venue, "venue id")->required();
  exp_cmd->add_option("--year", exp->year, "year")->required();
  exp_cmd->add_option("--data-root", exp->data_root, "data directory (default: data)");
  exp_cmd->add_option("--config", exp->config, "venue config JSON, supplies phase dates");
  exp_cmd->callback([exp] { cd::run_export(*exp); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace reviewkit
