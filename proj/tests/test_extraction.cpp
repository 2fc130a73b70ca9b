#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "reviewkit/extraction.hpp"
#include "reviewkit/http_client.hpp"
#include "reviewkit/rng.hpp"
#include "test_util.hpp"

using namespace reviewkit;
using testutil::data_path;
using testutil::error_kind_of;
using testutil::FakeTransport;
using testutil::scratch_dir;
using testutil::TokenGuard;
using testutil::write_file;

namespace {

ConsistencyFlags flags_of(const std::string& raw) {
  return check_consistency(parse_extractor_output("doc", raw));
}

RemoteExtractorConfig test_config() {
  RemoteExtractorConfig c;
  c.endpoint = "http://127.0.0.1:9/v1/chat";
  c.model = "extract-small";
  c.prompt_template = "List the authors.\n\n{{document}}";
  return c;
}

std::string chat_reply(const std::string& content, int64_t prompt, int64_t completion) {
  nlohmann::json j = {
      {"choices",
       nlohmann::json::array(
           {nlohmann::json{{"message", nlohmann::json{{"role", "assistant"},
                                                      {"content", content}}}}})},
      {"usage", nlohmann::json{{"prompt_tokens", prompt}, {"completion_tokens", completion}}},
  };
  return j.dump();
}

}  // namespace

TEST_CASE("grammar parses a complete author block") {
  auto rec = parse_extractor_output(
      "d", "Ada One | Alpha University | ada@alpha.edu\n"
           "Ben Two | Beta Institute; Gamma Lab | ben@beta.org\n");
  REQUIRE(rec.parse_ok);
  REQUIRE(rec.authors == std::vector<std::string>{"Ada One", "Ben Two"});
  REQUIRE(rec.affiliations.size() == 2);
  CHECK(rec.affiliations[0] == std::vector<std::string>{"Alpha University"});
  CHECK(rec.affiliations[1] == std::vector<std::string>{"Beta Institute", "Gamma Lab"});
  CHECK(rec.emails == std::vector<std::string>{"ada@alpha.edu", "ben@beta.org"});
  CHECK(rec.countries.empty());
}

TEST_CASE("grammar edge handling") {
  SECTION("blank email field drops the email, keeps the author") {
    auto rec = parse_extractor_output("d", "Ada | Alpha |\nBen | Beta | ben@beta.org\n");
    REQUIRE(rec.parse_ok);
    CHECK(rec.authors.size() == 2);
    CHECK(rec.affiliations.size() == 2);
    CHECK(rec.emails == std::vector<std::string>{"ben@beta.org"});
  }
  SECTION("blank affiliation field drops the list, keeps the author") {
    auto rec = parse_extractor_output("d", "Ada |  | ada@alpha.edu\n");
    REQUIRE(rec.parse_ok);
    CHECK(rec.authors.size() == 1);
    CHECK(rec.affiliations.empty());
    CHECK(rec.emails.size() == 1);
  }
  SECTION("semicolons with empty segments do not create empty affiliations") {
    auto rec = parse_extractor_output("d", "Ada | Alpha;; Beta; | ada@alpha.edu\n");
    REQUIRE(rec.parse_ok);
    REQUIRE(rec.affiliations.size() == 1);
    CHECK(rec.affiliations[0] == std::vector<std::string>{"Alpha", "Beta"});
  }
  SECTION("wrong field count fails the parse but later lines are recovered") {
    auto rec = parse_extractor_output(
        "d", "Ada, Alpha, ada@alpha.edu\nBen | Beta | ben@beta.org\n");
    CHECK_FALSE(rec.parse_ok);
    CHECK(rec.authors == std::vector<std::string>{"Ben"});
  }
  SECTION("four fields is also a parse failure") {
    auto rec = parse_extractor_output("d", "Ada | Alpha | ada@a.edu | extra\n");
    CHECK_FALSE(rec.parse_ok);
    CHECK(rec.authors.empty());
  }
  SECTION("empty author name is a parse failure") {
    auto rec = parse_extractor_output("d", " | Alpha | ada@alpha.edu\n");
    CHECK_FALSE(rec.parse_ok);
    CHECK(rec.authors.empty());
  }
  SECTION("blank output is a parse failure") {
    CHECK_FALSE(parse_extractor_output("d", "").parse_ok);
    CHECK_FALSE(parse_extractor_output("d", "\n  \n\t\n").parse_ok);
  }
  SECTION("carriage returns are stripped") {
    auto rec = parse_extractor_output("d", "Ada | Alpha | ada@alpha.edu\r\n");
    REQUIRE(rec.parse_ok);
    CHECK(rec.emails == std::vector<std::string>{"ada@alpha.edu"});
  }
}

TEST_CASE("consistency flags reflect cardinality mismatches") {
  SECTION("aligned lists raise nothing") {
    auto f = flags_of("Ada | Alpha | ada@alpha.edu\n");
    CHECK(f.delta_aff == 0);
    CHECK(f.delta_email == 0);
    CHECK(f.delta_parse == 0);
  }
  SECTION("missing email") {
    auto f = flags_of("Ada | Alpha |\n");
    CHECK(f.delta_aff == 0);
    CHECK(f.delta_email == 1);
    CHECK(f.delta_parse == 0);
  }
  SECTION("missing affiliation") {
    auto f = flags_of("Ada | | ada@alpha.edu\n");
    CHECK(f.delta_aff == 1);
    CHECK(f.delta_email == 0);
    CHECK(f.delta_parse == 0);
  }
  SECTION("parse failure with aligned recovered lines flags only the parse") {
    auto f = flags_of("junk line\nAda | Alpha | ada@alpha.edu\n");
    CHECK(f.delta_aff == 0);
    CHECK(f.delta_email == 0);
    CHECK(f.delta_parse == 1);
  }
  SECTION("empty output flags only the parse") {
    auto f = flags_of("");
    CHECK(f.delta_aff == 0);
    CHECK(f.delta_email == 0);
    CHECK(f.delta_parse == 1);
  }
}

TEST_CASE("flags are invariant under reordering of aligned entries") {
  SplitMix64 rng(314);
  for (int trial = 0; trial < 50; ++trial) {
    ExtractionRecord rec;
    rec.document_id = "d";
    auto n = static_cast<size_t>(2 + rng.next_below(5));
    for (size_t i = 0; i < n; ++i) {
      rec.authors.push_back("author" + std::to_string(i));
      if (rng.next_below(4) != 0) {
        rec.affiliations.push_back({"inst" + std::to_string(rng.next_below(10))});
      }
      if (rng.next_below(4) != 0) {
        rec.emails.push_back("a" + std::to_string(i) + "@x.org");
      }
    }
    auto before = check_consistency(rec);

    ExtractionRecord shuffled = rec;
    for (auto* v : {&shuffled.authors, &shuffled.emails}) {
      for (size_t i = v->size(); i > 1; --i) {
        std::swap((*v)[i - 1], (*v)[rng.next_below(i)]);
      }
    }
    for (size_t i = shuffled.affiliations.size(); i > 1; --i) {
      std::swap(shuffled.affiliations[i - 1], shuffled.affiliations[rng.next_below(i)]);
    }
    auto after = check_consistency(shuffled);
    REQUIRE(before.delta_aff == after.delta_aff);
    REQUIRE(before.delta_email == after.delta_email);
    REQUIRE(before.delta_parse == after.delta_parse);
  }
}

TEST_CASE("success rate aggregates the disjunction") {
  std::vector<ConsistencyFlags> flags = {
      {"a", 0, 0, 0}, {"b", 1, 0, 0}, {"c", 1, 1, 0}, {"d", 0, 0, 1},
  };
  auto r = success_rate(flags);
  CHECK(r.documents == 4);
  CHECK(r.success == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(r.aff_rate == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(r.email_rate == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(r.parse_rate == Catch::Approx(0.25).epsilon(1e-12));

  CHECK(error_kind_of([] { success_rate({}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("measured rates always satisfy the union bound") {
  SplitMix64 rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    auto n = static_cast<size_t>(1 + rng.next_below(40));
    std::vector<ConsistencyFlags> flags(n);
    for (size_t i = 0; i < n; ++i) {
      flags[i].document_id = "doc" + std::to_string(i);
      flags[i].delta_aff = rng.next_below(2) ? 1 : 0;
      flags[i].delta_email = rng.next_below(2) ? 1 : 0;
      flags[i].delta_parse = rng.next_below(3) == 0 ? 1 : 0;
    }
    auto r = success_rate(flags);
    REQUIRE(union_bound_check(r.aff_rate, r.email_rate, r.parse_rate, r.success));
  }
}

TEST_CASE("union bound audit of reported model scorecards") {
  // Mismatch and success fractions as reported for four extraction
  // backends in a benchmarking pass. The first one claims more overall
  // failures than its own marginals can explain.
  struct Row {
    const char* model;
    double aff, email, parse, success;
    bool consistent;
  };
  const Row rows[] = {
      {"glm-4-plus", 0.0501, 0.0494, 0.0081, 0.8682, false},
      {"glm-4-air", 0.4998, 0.1711, 0.0051, 0.4473, true},
      {"glm-4-flash", 0.7639, 0.4327, 0.0062, 0.1852, true},
      {"glm-3-turbo", 0.7607, 0.3234, 0.0134, 0.2090, true},
  };
  for (const auto& row : rows) {
    INFO(row.model);
    CHECK(union_bound_check(row.aff, row.email, row.parse, row.success) == row.consistent);
  }

  SECTION("rates outside [0, 1] are rejected") {
    CHECK(error_kind_of([] { union_bound_check(-0.1, 0.0, 0.0, 0.5); }) ==
          ErrorKind::InvalidSpec);
    CHECK(error_kind_of([] { union_bound_check(0.0, 1.2, 0.0, 0.5); }) ==
          ErrorKind::InvalidSpec);
    CHECK(error_kind_of([] { union_bound_check(0.0, 0.0, 0.0, 1.01); }) ==
          ErrorKind::InvalidSpec);
  }
}

TEST_CASE("multi-affiliation share") {
  std::vector<ExtractionRecord> recs(4);
  for (size_t i = 0; i < recs.size(); ++i) recs[i].document_id = "d" + std::to_string(i);
  recs[0].authors = {"a", "b"};
  recs[0].affiliations = {{"X"}, {"Y", "Z"}};
  recs[1].authors = {"c"};
  recs[1].affiliations = {{"X"}};
  recs[2].authors = {"e"};
  recs[2].affiliations = {{"X", "Y", "Z"}};
  recs[2].parse_ok = false;  // excluded from both denominators
  recs[3].authors = {"f", "g", "h"};
  recs[3].affiliations = {{"W"}, {"X"}, {"Y"}};

  CHECK(multi_affiliation_share(recs) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(multi_affiliation_share(recs, true) == Catch::Approx(1.0 / 6.0).epsilon(1e-12));

  std::vector<ExtractionRecord> unparsed(2);
  unparsed[0].parse_ok = false;
  unparsed[1].parse_ok = false;
  CHECK(error_kind_of([&] { multi_affiliation_share(unparsed); }) == ErrorKind::EmptyInput);
  CHECK(error_kind_of([&] { multi_affiliation_share(unparsed, true); }) ==
        ErrorKind::EmptyInput);
  CHECK(error_kind_of([] { multi_affiliation_share({}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("token totals sum component usage") {
  std::vector<ExtractionRecord> recs(2);
  recs[0].tokens = {1800000, 19220000};
  recs[1].tokens = {0, 0};
  auto t = token_totals(recs);
  CHECK(t.prompt == 1800000);
  CHECK(t.completion == 19220000);
  CHECK(t.total == 21020000);

  auto empty = token_totals({});
  CHECK(empty.total == 0);
}

TEST_CASE("country table lookup") {
  auto table = CountryTable::load(data_path("countries.csv"));
  CHECK(table.size() == 11);
  CHECK(table.lookup("Aalborg University") == std::optional<std::string>("DK"));
  CHECK(table.lookup("  Aalborg University  ") == std::optional<std::string>("DK"));
  CHECK_FALSE(table.lookup("Zhejiang University").has_value());

  auto rec = parse_extractor_output(
      "d", "Elena | ETH Zürich; Idiap Research Institute | e@ethz.ch\n");
  table.apply(rec);
  REQUIRE(rec.countries.size() == 2);
  CHECK(rec.countries.at("ETH Zürich") == "CH");
  CHECK(rec.countries.at("Idiap Research Institute") == "CH");

  SECTION("bad header or shape is rejected") {
    auto dir = scratch_dir("country_table");
    write_file(dir / "bad_header.csv", "name,code\nX,DE\n");
    CHECK(error_kind_of([&] { CountryTable::load(dir / "bad_header.csv"); }) ==
          ErrorKind::ParseFailure);
    write_file(dir / "bad_row.csv", "institution,country\nX,DE,extra\n");
    CHECK(error_kind_of([&] { CountryTable::load(dir / "bad_row.csv"); }) ==
          ErrorKind::ParseFailure);
    CHECK(error_kind_of([&] { CountryTable::load(dir / "absent.csv"); }) ==
          ErrorKind::IoFailure);
  }
}

TEST_CASE("replay corpus end to end") {
  auto table = CountryTable::load(data_path("countries.csv"));
  ReplayExtractor extractor(data_path("corpus"));
  auto result = validate_corpus(data_path("corpus"), extractor, &table);

  REQUIRE(result.records.size() == 6);
  REQUIRE(result.flags.size() == 6);

  // Documents arrive sorted; each has a known flag pattern.
  struct Expect {
    const char* id;
    int aff, email, parse;
  };
  const Expect expected[] = {
      {"d001", 0, 0, 0}, {"d002", 0, 1, 0}, {"d003", 0, 0, 1},
      {"d004", 0, 0, 0}, {"d005", 1, 0, 0}, {"d006", 0, 0, 1},
  };
  for (size_t i = 0; i < 6; ++i) {
    INFO(expected[i].id);
    CHECK(result.flags[i].document_id == expected[i].id);
    CHECK(result.flags[i].delta_aff == expected[i].aff);
    CHECK(result.flags[i].delta_email == expected[i].email);
    CHECK(result.flags[i].delta_parse == expected[i].parse);
  }

  // Four of six documents carry at least one flag.
  CHECK(result.report.documents == 6);
  CHECK(result.report.success == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(result.report.aff_rate == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(result.report.email_rate == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(result.report.parse_rate == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

  // The equality case of the union bound: 2/3 failed, marginals sum to 2/3.
  CHECK(union_bound_check(result.report.aff_rate, result.report.email_rate,
                          result.report.parse_rate, result.report.success));

  // One of the four parsed documents has a dual-affiliation author.
  REQUIRE(result.multi_affiliation.has_value());
  CHECK(*result.multi_affiliation == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(multi_affiliation_share(result.records, true) ==
        Catch::Approx(1.0 / 9.0).epsilon(1e-12));

  // d006 ships no token file and contributes zeros.
  CHECK(result.tokens.prompt == 5150);
  CHECK(result.tokens.completion == 1520);
  CHECK(result.tokens.total == 6670);

  // Country mapping covers every parsed affiliation except the one
  // deliberately missing from the table.
  CHECK(result.records[0].countries.size() == 3);
  CHECK(result.records[0].countries.at("Aalborg University") == "DK");
  CHECK(result.records[1].countries.size() == 2);
  CHECK(result.records[1].countries.count("Zhejiang University") == 0);

  const std::string csv =
      "doc_id,delta_aff,delta_email,delta_parse,prompt_tokens,completion_tokens\n"
      "d001,0,0,0,1000,300\n"
      "d002,0,1,0,1100,310\n"
      "d003,0,0,1,900,280\n"
      "d004,0,0,0,1200,340\n"
      "d005,1,0,0,950,290\n"
      "d006,0,0,1,0,0\n";
  CHECK(results_csv(result) == csv);
}

TEST_CASE("corpus enumeration corner cases") {
  auto dir = scratch_dir("corpus_enum");
  CHECK(error_kind_of([&] { corpus_document_ids(dir / "missing"); }) == ErrorKind::IoFailure);
  CHECK(error_kind_of([&] { corpus_document_ids(dir); }) == ErrorKind::EmptyInput);

  // Subdirectories without an input.txt are not documents.
  std::filesystem::create_directories(dir / "notes");
  CHECK(error_kind_of([&] { corpus_document_ids(dir); }) == ErrorKind::EmptyInput);

  write_file(dir / "z2" / "input.txt", "text");
  write_file(dir / "a1" / "input.txt", "text");
  CHECK(corpus_document_ids(dir) == std::vector<std::string>{"a1", "z2"});

  ReplayExtractor extractor(dir);
  CHECK(error_kind_of([&] { extractor.extract("a1", "text"); }) == ErrorKind::IoFailure);
}

TEST_CASE("remote extractor request and response handling") {
  FakeTransport transport;
  RemoteExtractor extractor(test_config(), transport);

  SECTION("renders the prompt and unpacks the reply") {
    TokenGuard guard(nullptr);
    transport.reply = {200, chat_reply("Ada | Alpha | ada@alpha.edu\n", 42, 7)};
    auto out = extractor.extract("doc-1", "Paper text here.");
    CHECK(out.raw_output == "Ada | Alpha | ada@alpha.edu\n");
    CHECK(out.tokens.prompt == 42);
    CHECK(out.tokens.completion == 7);

    CHECK(transport.last_url == "http://127.0.0.1:9/v1/chat");
    CHECK(transport.last_content_type == "application/json");
    CHECK_FALSE(transport.header("Authorization").has_value());
    auto payload = parse_json(transport.last_body, "request payload");
    CHECK(payload["model"] == "extract-small");
    CHECK(payload["messages"][0]["content"] ==
          "List the authors.\n\nPaper text here.");
  }

  SECTION("bearer token comes from the environment") {
    TokenGuard guard("s3cret-token");
    transport.reply = {200, chat_reply("x | y | z\n", 1, 1)};
    extractor.extract("doc-1", "text");
    CHECK(transport.header("Authorization") ==
          std::optional<std::string>("Bearer s3cret-token"));
    CHECK(transport.last_body.find("s3cret-token") == std::string::npos);
  }

  SECTION("auth failures are distinguished from transport failures") {
    transport.reply = {401, "denied"};
    CHECK(error_kind_of([&] { extractor.extract("d", "t"); }) == ErrorKind::AuthError);
    transport.reply = {403, "denied"};
    CHECK(error_kind_of([&] { extractor.extract("d", "t"); }) == ErrorKind::AuthError);
    transport.reply = {500, "boom"};
    CHECK(error_kind_of([&] { extractor.extract("d", "t"); }) == ErrorKind::TransportError);
  }

  SECTION("malformed replies") {
    transport.reply = {200, "not json"};
    CHECK(error_kind_of([&] { extractor.extract("d", "t"); }) == ErrorKind::ParseFailure);
    transport.reply = {200, "{}"};
    CHECK(error_kind_of([&] { extractor.extract("d", "t"); }) == ErrorKind::TransportError);
    transport.reply = {200, R"({"choices": []})"};
    CHECK(error_kind_of([&] { extractor.extract("d", "t"); }) == ErrorKind::TransportError);
  }

  SECTION("missing usage block defaults to zero tokens") {
    transport.reply = {200, R"({"choices": [{"message": {"content": "a | b | c"}}]})"};
    auto out = extractor.extract("d", "t");
    CHECK(out.tokens.prompt == 0);
    CHECK(out.tokens.completion == 0);
  }
}

TEST_CASE("remote extractor config validation") {
  CHECK(error_kind_of([] {
          RemoteExtractorConfig c;
          c.model = "m";
          c.prompt_template = "{{document}}";
          c.validate();
        }) == ErrorKind::InvalidConfig);
  CHECK(error_kind_of([] {
          RemoteExtractorConfig c;
          c.endpoint = "http://x/y";
          c.prompt_template = "{{document}}";
          c.validate();
        }) == ErrorKind::InvalidConfig);
  CHECK(error_kind_of([] {
          RemoteExtractorConfig c;
          c.endpoint = "http://x/y";
          c.model = "m";
          c.prompt_template = "no placeholder";
          c.validate();
        }) == ErrorKind::InvalidConfig);

  auto dir = scratch_dir("extractor_config");
  write_file(dir / "extractor.json",
             R"({"endpoint": "http://e/v1", "model": "m", "prompt_template": "{{document}}"})");
  auto c = RemoteExtractorConfig::load(dir / "extractor.json");
  CHECK(c.endpoint == "http://e/v1");
  CHECK(c.model == "m");
  CHECK(error_kind_of([&] { RemoteExtractorConfig::load(dir / "absent.json"); }) ==
        ErrorKind::IoFailure);
}

TEST_CASE("remote extractor against a live endpoint") {
  // In-process HTTP server that requires a bearer token and answers with a
  // fixed author block whose first token is the posted model name.
  httplib::Server server;
  std::string seen_model;
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") != "Bearer live-test-token") {
      res.status = 401;
      res.set_content("missing token", "text/plain");
      return;
    }
    auto body = nlohmann::json::parse(req.body);
    seen_model = body["model"].get<std::string>();
    res.set_content(chat_reply("Live Author | Live University | live@uni.edu\n", 11, 3),
                    "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serve([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto config = test_config();
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
  HttplibTransport transport(5);

  {
    TokenGuard guard("live-test-token");
    RemoteExtractor extractor(config, transport);
    auto out = extractor.extract("doc-live", "Some document.");
    CHECK(out.raw_output == "Live Author | Live University | live@uni.edu\n");
    CHECK(out.tokens.prompt == 11);
    CHECK(out.tokens.completion == 3);
    CHECK(seen_model == "extract-small");

    auto rec = parse_extractor_output("doc-live", out.raw_output);
    auto f = check_consistency(rec);
    CHECK(f.delta_aff == 0);
    CHECK(f.delta_email == 0);
    CHECK(f.delta_parse == 0);
  }
  {
    TokenGuard guard(nullptr);
    RemoteExtractor extractor(config, transport);
    CHECK(error_kind_of([&] { extractor.extract("doc-live", "x"); }) == ErrorKind::AuthError);
  }
  {
    // Nothing is listening one port over.
    auto dead = config;
    dead.endpoint = "http://127.0.0.1:" + std::to_string(port == 65535 ? 1 : port + 1) + "/v1/chat";
    TokenGuard guard("live-test-token");
    RemoteExtractor extractor(dead, transport);
    CHECK(error_kind_of([&] { extractor.extract("doc-live", "x"); }) ==
          ErrorKind::TransportError);
  }

  server.stop();
  serve.join();
}
