#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "reviewkit/analytics.hpp"
#include "reviewkit/ingest.hpp"
#include "reviewkit/synth.hpp"
#include "test_util.hpp"

using namespace reviewkit;
using testutil::data_path;
using testutil::error_kind_of;
using testutil::FakeTransport;
using testutil::read_file;
using testutil::scratch_dir;
using testutil::TokenGuard;
using testutil::write_file;

namespace {

/// Manual clock: time moves only when the test says so, and sleeping
/// advances it by exactly the requested amount.
class FakeClock : public Clock {
 public:
  int64_t t_ms = 0;
  std::vector<int64_t> sleeps;

  int64_t now_ms() override { return t_ms; }
  void sleep_ms(int64_t ms) override {
    sleeps.push_back(ms);
    t_ms += ms;
  }
};

/// Connector whose fetches follow a script of failures and payloads.
class ScriptedConnector : public Connector {
 public:
  struct Step {
    std::optional<ErrorKind> fail;
    std::string body;
  };
  std::vector<Step> steps;
  int calls = 0;

  std::string fetch_raw(const VenueConfig&) override {
    const auto& step = steps.at(static_cast<size_t>(calls++));
    if (step.fail) raise(*step.fail, "scripted failure");
    return step.body;
  }
};

VenueConfig minimal_cfg(const std::string& venue, int year) {
  VenueConfig cfg;
  cfg.venue = venue;
  cfg.year = year;
  cfg.schema.dimensions = {{kRatingDimension, Decimal::from_int(1), Decimal::from_int(10),
                            Decimal::from_int(1)}};
  return cfg;
}

VenueConfig community_cfg() {
  auto cfg = minimal_cfg("cw", 2025);
  cfg.source_kind = SourceClass::CommunityForm;
  return cfg;
}

std::vector<PaperRecord> community_records(int64_t display_yes, int64_t total) {
  std::vector<PaperRecord> out;
  for (int64_t i = 0; i < total; ++i) {
    PaperRecord r;
    r.paper_id = "p" + std::to_string(i);
    r.venue = "cw";
    r.year = 2025;
    r.source = SourceKind::CommunitySubmitted;
    ConsentRecord c;
    c.individual_display = i < display_yes;
    c.aggregate_only = !c.individual_display;
    r.consent = c;
    out.push_back(std::move(r));
  }
  return out;
}

const PaperRecord& record_of(const std::vector<PaperRecord>& records, const std::string& id) {
  for (const auto& r : records) {
    if (r.paper_id == id) return r;
  }
  FAIL("record not found: " + id);
  return records.front();
}

}  // namespace

TEST_CASE("url host extraction") {
  CHECK(url_host("http://api.test/v1/papers") == "http://api.test");
  CHECK(url_host("https://api.test:8443/v1") == "https://api.test:8443");
  CHECK(url_host("https://api.test") == "https://api.test");
  CHECK(url_host("/data/proceedings.json") == "");
}

TEST_CASE("request spacer enforces the per-host interval") {
  FakeClock clock;
  RequestSpacer spacer(2000, clock);

  SECTION("first contact with a host never waits") {
    spacer.acquire("http://a.test");
    CHECK(clock.sleeps.empty());
  }

  SECTION("back-to-back requests wait out the full interval") {
    spacer.acquire("http://a.test");
    spacer.acquire("http://a.test");
    CHECK(clock.sleeps == std::vector<int64_t>{2000});
  }

  SECTION("hosts are limited independently") {
    spacer.acquire("http://a.test");
    spacer.acquire("http://b.test");
    CHECK(clock.sleeps.empty());
  }

  SECTION("elapsed time counts toward the interval") {
    spacer.acquire("http://a.test");
    clock.t_ms = 1500;
    spacer.acquire("http://a.test");
    CHECK(clock.sleeps == std::vector<int64_t>{500});
    clock.t_ms += 5000;
    spacer.acquire("http://a.test");
    CHECK(clock.sleeps.size() == 1);
  }

  SECTION("zero interval never sleeps") {
    RequestSpacer eager(0, clock);
    eager.acquire("x");
    eager.acquire("x");
    CHECK(clock.sleeps.empty());
  }

  SECTION("negative interval is a config error") {
    CHECK(error_kind_of([&] { RequestSpacer bad(-1, clock); }) == ErrorKind::InvalidConfig);
  }
}

TEST_CASE("fetch retries transport failures with exponential backoff") {
  FakeClock clock;
  clock.t_ms = 1'750'000'000'000;  // mid-2025, so stamps look realistic
  ConnectorJob job;
  job.cfg = minimal_cfg("v", 2025);
  job.cfg.retry = {3, 1000};

  SECTION("a transient failure is retried and succeeds") {
    ScriptedConnector conn;
    conn.steps = {{ErrorKind::TransportError, ""}, {std::nullopt, R"({"papers":[{},{}]})"}};
    auto result = fetch_snapshot(job, conn, clock);
    CHECK(conn.calls == 2);
    CHECK(clock.sleeps == std::vector<int64_t>{1000});
    CHECK(result.record_count == 2);
    CHECK(result.raw_payload == R"({"papers":[{},{}]})");
  }

  SECTION("attempts stop at the configured maximum") {
    ScriptedConnector conn;
    conn.steps = {{ErrorKind::TransportError, ""},
                  {ErrorKind::TransportError, ""},
                  {ErrorKind::TransportError, ""}};
    CHECK(error_kind_of([&] { fetch_snapshot(job, conn, clock); }) ==
          ErrorKind::TransportError);
    CHECK(conn.calls == 3);
    CHECK(clock.sleeps == std::vector<int64_t>{1000, 2000});
  }

  SECTION("rate limiting backs off the same way") {
    ScriptedConnector conn;
    conn.steps = {{ErrorKind::RateLimited, ""},
                  {ErrorKind::RateLimited, ""},
                  {std::nullopt, "{}"}};
    auto result = fetch_snapshot(job, conn, clock);
    CHECK(conn.calls == 3);
    CHECK(clock.sleeps == std::vector<int64_t>{1000, 2000});
    CHECK(result.record_count == 0);
  }

  SECTION("credential rejection is never retried") {
    ScriptedConnector conn;
    conn.steps = {{ErrorKind::AuthError, ""}, {std::nullopt, "{}"}};
    CHECK(error_kind_of([&] { fetch_snapshot(job, conn, clock); }) == ErrorKind::AuthError);
    CHECK(conn.calls == 1);
    CHECK(clock.sleeps.empty());
  }

  SECTION("fetched_at comes from the clock and feeds last_success") {
    ScriptedConnector conn;
    conn.steps = {{std::nullopt, "not json"}};
    auto result = fetch_snapshot(job, conn, clock);
    CHECK(result.fetched_at.secs == 1'750'000'000);
    CHECK(result.record_count == 0);  // unparseable payload counts nothing
    REQUIRE(job.last_success.has_value());
    CHECK(job.last_success->secs == 1'750'000'000);
  }

  SECTION("fetched_at never regresses behind the last success") {
    job.last_success = UtcTime::from_secs(1'750'000'100);
    ScriptedConnector conn;
    conn.steps = {{std::nullopt, "{}"}};
    auto result = fetch_snapshot(job, conn, clock);
    CHECK(result.fetched_at.secs == 1'750'000'100);
  }

  SECTION("the politeness spacer sits inside the fetch loop") {
    RequestSpacer spacer(2000, clock);
    job.cfg.endpoint = "http://api.test/v1/papers";
    ScriptedConnector conn;
    conn.steps = {{std::nullopt, "{}"}, {std::nullopt, "{}"}};
    fetch_snapshot(job, conn, clock, &spacer);
    CHECK(clock.sleeps.empty());
    fetch_snapshot(job, conn, clock, &spacer);
    CHECK(clock.sleeps == std::vector<int64_t>{2000});
  }
}

TEST_CASE("api connector maps HTTP statuses onto error kinds") {
  FakeTransport transport;
  ApiConnector conn(transport);
  auto cfg = minimal_cfg("v", 2025);
  cfg.endpoint = "http://api.test/v1/papers?year=2025";

  SECTION("success returns the body verbatim") {
    TokenGuard guard(nullptr);
    transport.reply = {200, R"({"papers":[]})"};
    CHECK(conn.fetch_raw(cfg) == R"({"papers":[]})");
    CHECK(transport.last_method == "GET");
    CHECK(transport.last_url == cfg.endpoint);
    CHECK_FALSE(transport.header("Authorization").has_value());
  }

  SECTION("the bearer token rides the Authorization header only") {
    TokenGuard guard("s3cret-ingest");
    transport.reply = {200, "{}"};
    conn.fetch_raw(cfg);
    CHECK(transport.header("Authorization") == std::string("Bearer s3cret-ingest"));
    CHECK(transport.last_url.find("s3cret") == std::string::npos);
  }

  SECTION("401 and 403 are credential rejections") {
    transport.reply = {401, ""};
    CHECK(error_kind_of([&] { conn.fetch_raw(cfg); }) == ErrorKind::AuthError);
    transport.reply = {403, ""};
    CHECK(error_kind_of([&] { conn.fetch_raw(cfg); }) == ErrorKind::AuthError);
  }

  SECTION("429 asks for a slower cadence") {
    transport.reply = {429, ""};
    CHECK(error_kind_of([&] { conn.fetch_raw(cfg); }) == ErrorKind::RateLimited);
  }

  SECTION("other failures are transport errors") {
    transport.reply = {500, ""};
    CHECK(error_kind_of([&] { conn.fetch_raw(cfg); }) == ErrorKind::TransportError);
    transport.reply = {404, ""};
    CHECK(error_kind_of([&] { conn.fetch_raw(cfg); }) == ErrorKind::TransportError);
  }
}

TEST_CASE("static proceedings connector reads the endpoint path") {
  auto dir = scratch_dir("ingest_static");
  auto cfg = minimal_cfg("v", 2025);
  cfg.endpoint = (dir / "proceedings.json").string();

  StaticProceedingsConnector conn;
  CHECK(error_kind_of([&] { conn.fetch_raw(cfg); }) == ErrorKind::TransportError);

  write_file(dir / "proceedings.json", R"({"papers":[{}]})");
  CHECK(conn.fetch_raw(cfg) == R"({"papers":[{}]})");
  CHECK_FALSE(conn.supports_history());
}

TEST_CASE("fixture replay connector walks captures in stamp order") {
  auto dir = scratch_dir("ingest_replay");
  write_file(dir / "v" / "2025" / "20250715T000000Z.raw", "late");
  write_file(dir / "v" / "2025" / "20250601T000000Z.raw", "early");
  write_file(dir / "v" / "2025" / "notes.txt", "not a capture");
  auto cfg = minimal_cfg("v", 2025);

  FixtureReplayConnector conn(dir);
  CHECK(conn.supports_history());
  CHECK(conn.remaining(cfg) == 2);
  CHECK(conn.fetch_raw(cfg) == "early");
  CHECK(conn.fetch_raw(cfg) == "late");
  CHECK(conn.remaining(cfg) == 0);
  CHECK(error_kind_of([&] { conn.fetch_raw(cfg); }) == ErrorKind::TransportError);

  SECTION("a venue-year with no captures is a transport error") {
    FixtureReplayConnector other(dir);
    auto missing = minimal_cfg("v", 2024);
    CHECK(error_kind_of([&] { other.fetch_raw(missing); }) == ErrorKind::TransportError);
  }
}

TEST_CASE("raw store keeps verbatim captures exactly once") {
  auto root = scratch_dir("ingest_rawstore");
  RawStore store(root);
  auto at = *UtcTime::parse("2025-06-01T00:00:00Z");

  auto first = store.persist("v", 2025, at, "payload-bytes");
  CHECK(first.written);
  CHECK(first.path == root / "v" / "2025" / "20250601T000000Z.raw");
  CHECK(read_file(first.path) == "payload-bytes");

  SECTION("identical bytes at the same stamp are a no-op") {
    auto again = store.persist("v", 2025, at, "payload-bytes");
    CHECK_FALSE(again.written);
    CHECK(again.path == first.path);
    CHECK(again.hash == first.hash);
  }

  SECTION("conflicting bytes at the same stamp fail loudly") {
    CHECK(error_kind_of([&] { store.persist("v", 2025, at, "different-bytes"); }) ==
          ErrorKind::IoFailure);
    CHECK(read_file(first.path) == "payload-bytes");
  }
}

TEST_CASE("fixture tree ingestion reproduces the generator's ground truth") {
  GeneratorSpec spec;
  spec.seed = 77;
  spec.n_papers = 150;
  auto out = generate(spec);

  auto fixture = scratch_dir("ingest_fixture_src");
  write_fixture_tree(out, fixture);
  auto data_root = scratch_dir("ingest_fixture_data");
  auto cfg = spec.venue_config();

  auto report = ingest_fixture_tree(cfg, fixture, data_root);
  CHECK(report.captures_processed == 3);
  CHECK(report.captures_skipped == 0);
  CHECK(report.quarantined == 0);
  CHECK(report.records == 150);
  CHECK(report.raw_paths.size() == 3);
  CHECK(report.conflicts.empty());
  CHECK(report.paperlist_path == data_root / "paperlist" / "synth_2025.json");

  auto ingested = load_paperlist(report.paperlist_path);
  REQUIRE(ingested.papers.size() == 150);

  SECTION("analytics over the ingested records matches the truth record") {
    auto entropy = decision_entropy(ingested.papers, spec.bins);
    CHECK(entropy.included == out.truth.papers);
    CHECK(entropy.excluded == 0);
    CHECK(std::abs(entropy.weighted_mean - out.truth.weighted_entropy) <= 1e-12);
  }

  SECTION("terminal statuses and score means survive the wire") {
    std::map<std::string, const PaperRecord*> expected;
    for (const auto& p : out.papers) expected[p.paper_id] = &p;
    for (const auto& rec : ingested.papers) {
      REQUIRE(expected.count(rec.paper_id) == 1);
      const auto& want = *expected[rec.paper_id];
      CHECK(rec.final_status == want.final_status);
      CHECK(rec.reviews.size() == want.reviews.size());
      auto got_mean = rec.rating_mean();
      auto want_mean = want.rating_mean();
      CHECK(got_mean.sum_micros == want_mean.sum_micros);
      CHECK(got_mean.count == want_mean.count);
    }
  }

  SECTION("the event archive holds only captures that changed something") {
    auto archive = SnapshotArchive::open(data_root / "archive", cfg.venue, cfg.year);
    archive.verify();
    // The decision capture repeats the mid-discussion scores, so it folds
    // away and only two instants remain.
    auto instants = archive.capture_instants();
    REQUIRE(instants.size() == 2);
    CHECK(instants[0] == spec.phases.review_release);
  }

  SECTION("re-ingesting the same tree changes nothing") {
    auto paperlist_before = read_file(report.paperlist_path);
    auto events_path = data_root / "archive" / "synth" / "2025" / "events.ndjson";
    auto events_before = read_file(events_path);

    auto second = ingest_fixture_tree(cfg, fixture, data_root);
    CHECK(second.captures_processed == 0);
    CHECK(second.captures_skipped == 3);
    CHECK(second.records == 150);
    CHECK(read_file(report.paperlist_path) == paperlist_before);
    CHECK(read_file(events_path) == events_before);
  }

  SECTION("live replay through a connector lands in the same place") {
    auto live_root = scratch_dir("ingest_fixture_live");
    FixtureReplayConnector conn(fixture);
    FakeClock clock;
    clock.t_ms = 1'755'000'000'000;  // after the decision phase
    ConnectorJob job;
    job.cfg = cfg;
    for (int i = 0; i < 3; ++i) {
      auto step = ingest_once(job, conn, clock, live_root);
      CHECK(step.captures_processed == 1);
      clock.t_ms += 3'600'000;
    }
    CHECK(error_kind_of([&] { ingest_once(job, conn, clock, live_root); }) ==
          ErrorKind::TransportError);

    auto live = load_paperlist(paperlist_location(live_root, cfg.venue, cfg.year));
    auto entropy = decision_entropy(live.papers, spec.bins);
    CHECK(std::abs(entropy.weighted_mean - out.truth.weighted_entropy) <= 1e-12);
  }
}

TEST_CASE("community batch accepts clean rows and names each rejection") {
  auto cfg = community_cfg();
  auto data_root = scratch_dir("ingest_community");
  auto report = ingest_community_file(cfg, data_path("community/cw_2025.csv"), data_root);
  const auto& batch = report.batch;

  REQUIRE(batch.accepted.size() == 17);
  REQUIRE(batch.rejected.size() == 3);

  CHECK(batch.rejected[0].row_index == 6);
  CHECK(batch.rejected[0].reason == RowRejection::ScoreOutOfRange);
  CHECK(batch.rejected[1].row_index == 11);
  CHECK(batch.rejected[1].reason == RowRejection::DuplicateSubmission);
  CHECK(batch.rejected[2].row_index == 15);
  CHECK(batch.rejected[2].reason == RowRejection::MissingConsent);

  SECTION("the raw CSV is archived under the latest accepted timestamp") {
    CHECK(report.raw_path == data_root / "raw" / "cw" / "2025" / "20250705T110000Z.raw");
    CHECK(read_file(report.raw_path) == read_file(data_path("community/cw_2025.csv")));
  }

  SECTION("accepted rows become full records") {
    const auto& r = record_of(batch.accepted, "cw-0001");
    CHECK(r.venue == "cw");
    CHECK(r.year == 2025);
    CHECK(r.source == SourceKind::CommunitySubmitted);
    REQUIRE(r.reviews.size() == 3);
    CHECK(r.reviews[0].reviewer_id == "cr1");
    CHECK(r.reviews[2].reviewer_id == "cr3");
    CHECK(r.reviews[1].scores.at(kRatingDimension) == Decimal::from_int(6));
    REQUIRE(r.consent.has_value());
    CHECK(r.consent->individual_display);
    CHECK_FALSE(r.consent->aggregate_only);
    CHECK(r.consent->submitted_at == *UtcTime::parse("2025-07-01T10:00:00Z"));
    CHECK(r.ingested_at == r.consent->submitted_at);
    CHECK_FALSE(r.provenance_hash.empty());
    CHECK(r.rating_pre_rebuttal == std::string("6"));
    CHECK(r.rating_post_rebuttal == format_mean(19'000'000, 3));
    CHECK(r.rating_delta == format_mean(1'000'000, 3));
    CHECK(r.num_score_changes == 1);
  }

  SECTION("pre, post, and delta are exact rational tokens") {
    const auto& two = record_of(batch.accepted, "cw-0002");
    CHECK(two.rating_pre_rebuttal == std::string("4"));
    CHECK(two.rating_post_rebuttal == std::string("4.5"));
    CHECK(two.rating_delta == std::string("0.5"));
    CHECK(two.num_score_changes == 1);

    const auto& steady = record_of(batch.accepted, "cw-0003");
    CHECK(steady.rating_delta == std::string("0"));
    CHECK(steady.num_score_changes == 0);

    const auto& grew = record_of(batch.accepted, "cw-0019");
    CHECK(grew.rating_pre_rebuttal == std::string("7"));
    CHECK(grew.rating_post_rebuttal == std::string("7"));
    CHECK(grew.rating_delta == std::string("0"));
    CHECK(grew.num_score_changes == 1);  // a second reviewer appeared
  }

  SECTION("a blank initial list leaves the dynamics unknown") {
    const auto& r = record_of(batch.accepted, "cw-0010");
    CHECK_FALSE(r.rating_pre_rebuttal.has_value());
    CHECK_FALSE(r.rating_delta.has_value());
    CHECK_FALSE(r.num_score_changes.has_value());
    CHECK(r.rating_post_rebuttal == std::string("6.5"));
  }

  SECTION("consent answers map onto the record's consent flags") {
    const auto& agg = record_of(batch.accepted, "cw-0002");
    REQUIRE(agg.consent.has_value());
    CHECK_FALSE(agg.consent->individual_display);
    CHECK(agg.consent->aggregate_only);

    // Declining both uses is still a valid submission; the record simply
    // cannot appear anywhere.
    const auto& neither = record_of(batch.accepted, "cw-0004");
    REQUIRE(neither.consent.has_value());
    CHECK_FALSE(neither.consent->individual_display);
    CHECK_FALSE(neither.consent->aggregate_only);
  }

  SECTION("the paperlist holds every accepted record") {
    auto saved = load_paperlist(report.paperlist_path);
    CHECK(saved.papers.size() == 17);
    CHECK(saved.venue == "cw");
  }

  SECTION("re-running the same batch is byte-stable") {
    auto before = read_file(report.paperlist_path);
    auto again = ingest_community_file(cfg, data_path("community/cw_2025.csv"), data_root);
    CHECK(again.batch.accepted.size() == 17);
    CHECK(read_file(report.paperlist_path) == before);
  }

  SECTION("consent stats over the batch") {
    auto stats = consent_stats(batch.accepted);
    CHECK(stats.consented == 10);
    CHECK(stats.total == 17);
    CHECK(stats.percent == "58.8%");
  }
}

TEST_CASE("community row validation catches each malformation") {
  auto cfg = community_cfg();
  auto one = [&](std::vector<std::string> row) {
    return ingest_community_batch({std::move(row)}, cfg);
  };
  auto reason_of = [&](std::vector<std::string> row) {
    auto batch = one(std::move(row));
    REQUIRE(batch.rejected.size() == 1);
    return batch.rejected[0].reason;
  };
  std::vector<std::string> good = {"cw-1", "cw",  "2025", "5;6", "6;6",
                                   "yes",  "yes", "2025-07-01T00:00:00Z"};

  CHECK(one(good).accepted.size() == 1);

  SECTION("shape problems") {
    CHECK(reason_of({"cw-1", "cw", "2025"}) == RowRejection::MalformedRow);
    auto row = good;
    row[0] = "";
    CHECK(reason_of(row) == RowRejection::MalformedRow);
    row = good;
    row[2] = "20x5";
    CHECK(reason_of(row) == RowRejection::MalformedRow);
    row = good;
    row[7] = "July 1st";
    CHECK(reason_of(row) == RowRejection::MalformedRow);
    row = good;
    row[4] = "6;six";
    CHECK(reason_of(row) == RowRejection::MalformedRow);
    row = good;
    row[4] = "";
    CHECK(reason_of(row) == RowRejection::MalformedRow);
  }

  SECTION("rows for another venue or year do not belong here") {
    auto row = good;
    row[1] = "other";
    CHECK(reason_of(row) == RowRejection::VenueMismatch);
    row = good;
    row[2] = "2024";
    CHECK(reason_of(row) == RowRejection::VenueMismatch);
  }

  SECTION("consent must be answered, and answered sensibly") {
    auto row = good;
    row[5] = "";
    CHECK(reason_of(row) == RowRejection::MissingConsent);
    row = good;
    row[6] = "maybe";
    CHECK(reason_of(row) == RowRejection::InvalidConsent);
    row = good;
    row[5] = "YES";
    row[6] = "No ";
    auto batch = one(row);
    REQUIRE(batch.accepted.size() == 1);
    CHECK(batch.accepted[0].consent->aggregate_only);
  }

  SECTION("scores must sit on the venue's grid") {
    auto row = good;
    row[4] = "6;11";
    CHECK(reason_of(row) == RowRejection::ScoreOutOfRange);
    row = good;
    row[3] = "0;5";
    CHECK(reason_of(row) == RowRejection::ScoreOutOfRange);
    row = good;
    row[4] = "5.5;6";
    CHECK(reason_of(row) == RowRejection::ScoreOutOfRange);
  }

  SECTION("duplicates keep the first submission") {
    auto batch = ingest_community_batch({good, good}, cfg);
    CHECK(batch.accepted.size() == 1);
    REQUIRE(batch.rejected.size() == 1);
    CHECK(batch.rejected[0].reason == RowRejection::DuplicateSubmission);
    CHECK(batch.rejected[0].row_index == 1);
  }

  SECTION("a schema without a rating dimension cannot take submissions") {
    VenueConfig bare;
    bare.venue = "cw";
    bare.year = 2025;
    CHECK(error_kind_of([&] { ingest_community_batch({good}, bare); }) ==
          ErrorKind::InvalidConfig);
  }

  SECTION("the CSV header is load-bearing") {
    CHECK(error_kind_of([&] { parse_community_rows("paper,venue\ncw-1,cw\n", "t"); }) ==
          ErrorKind::ParseFailure);
    CHECK(error_kind_of([&] { parse_community_rows("", "t"); }) == ErrorKind::EmptyInput);
  }
}

TEST_CASE("community ingestion merges into an existing paperlist") {
  auto cfg = community_cfg();
  auto data_root = scratch_dir("ingest_community_merge");

  PaperRecord prior;
  prior.paper_id = "cw-9999";
  prior.venue = "cw";
  prior.year = 2025;
  prior.title = "Previously archived";
  prior.source = SourceKind::OfficialAPI;
  save_paperlist(paperlist_location(data_root, "cw", 2025), "cw", 2025, {prior}, &cfg.schema);

  auto report = ingest_community_file(cfg, data_path("community/cw_2025.csv"), data_root);
  auto merged = load_paperlist(report.paperlist_path);
  CHECK(merged.papers.size() == 18);
  CHECK(record_of(merged.papers, "cw-9999").title == "Previously archived");
  CHECK(record_of(merged.papers, "cw-0001").source == SourceKind::CommunitySubmitted);
}

TEST_CASE("consent share formatting") {
  struct Row {
    int64_t yes;
    int64_t total;
    const char* percent;
  };
  // Shares spanning the plausible range, including exact paper-roundoff
  // cases near 60 percent.
  for (const auto& row : std::vector<Row>{{1115, 1860, "59.9%"},
                                          {628, 1034, "60.7%"},
                                          {191, 357, "53.5%"},
                                          {151, 254, "59.4%"},
                                          {145, 215, "67.4%"},
                                          {0, 5, "0.0%"},
                                          {7, 7, "100.0%"}}) {
    auto stats = consent_stats(community_records(row.yes, row.total));
    CHECK(stats.consented == row.yes);
    CHECK(stats.total == row.total);
    CHECK(stats.percent == row.percent);
    CHECK(std::abs(stats.rate - static_cast<double>(row.yes) / static_cast<double>(row.total)) <
          1e-15);
  }

  SECTION("no records is an error, not a zero") {
    CHECK(error_kind_of([&] { consent_stats({}); }) == ErrorKind::EmptyInput);
  }

  SECTION("records from other sources poison the statistic") {
    auto records = community_records(3, 5);
    records[4].source = SourceKind::OfficialAPI;
    CHECK(error_kind_of([&] { consent_stats(records); }) == ErrorKind::InvalidSpec);
  }
}
