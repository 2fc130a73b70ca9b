#pragma once

// Structural-consistency scoring of author/affiliation/email extraction.
// An extractor (replayed from disk or a remote chat-completion endpoint)
// turns document text into a line-oriented author list; this module parses
// that output, flags cardinality mismatches and parse failures, and
// aggregates success rates, multi-affiliation shares, and token spend.
//
// Output grammar, one author per line:
//
//   name | affiliation; affiliation | email
//
// Exactly three pipe-separated fields. Affiliations within the middle field
// are semicolon-separated. An empty middle or last field means the author
// contributed nothing to the affiliation or email list (which is how
// cardinality mismatches arise). A line with the wrong field count or an
// empty name marks the document as a parse failure, but well-formed lines
// around it are still recovered.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reviewkit/csv.hpp"
#include "reviewkit/errors.hpp"
#include "reviewkit/http.hpp"
#include "reviewkit/jsonio.hpp"

namespace reviewkit {

struct TokenUsage {
  int64_t prompt = 0;
  int64_t completion = 0;
};

struct ExtractionRecord {
  std::string document_id;
  std::vector<std::string> authors;
  std::vector<std::vector<std::string>> affiliations;  // one list per author that had any
  std::vector<std::string> emails;
  std::map<std::string, std::string> countries;  // affiliation -> country code
  bool parse_ok = true;
  TokenUsage tokens;
};

struct ConsistencyFlags {
  std::string document_id;
  int delta_aff = 0;    // affiliation-list count differs from author count
  int delta_email = 0;  // email count differs from author count
  int delta_parse = 0;  // output failed the grammar
};

namespace detail {

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

/// Parses raw extractor output against the grammar above. Malformed lines
/// and blank output clear parse_ok; everything recoverable is kept.
inline ExtractionRecord parse_extractor_output(const std::string& document_id,
                                               const std::string& raw) {
  ExtractionRecord rec;
  rec.document_id = document_id;
  bool any_line = false;
  std::istringstream in(raw);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    any_line = true;
    auto fields = detail::split(line, '|');
    if (fields.size() != 3) {
      rec.parse_ok = false;
      continue;
    }
    std::string name = detail::trim(fields[0]);
    if (name.empty()) {
      rec.parse_ok = false;
      continue;
    }
    rec.authors.push_back(name);
    std::vector<std::string> affs;
    for (const auto& a : detail::split(fields[1], ';')) {
      std::string t = detail::trim(a);
      if (!t.empty()) affs.push_back(t);
    }
    if (!affs.empty()) rec.affiliations.push_back(std::move(affs));
    std::string email = detail::trim(fields[2]);
    if (!email.empty()) rec.emails.push_back(email);
  }
  if (!any_line) rec.parse_ok = false;
  return rec;
}

/// Cardinality checks per document. A parse failure sets delta_parse and
/// the other flags are still computed on whatever was recovered; the
/// success-rate disjunction makes the failure dominate either way.
inline ConsistencyFlags check_consistency(const ExtractionRecord& rec) {
  ConsistencyFlags f;
  f.document_id = rec.document_id;
  f.delta_aff = rec.affiliations.size() != rec.authors.size() ? 1 : 0;
  f.delta_email = rec.emails.size() != rec.authors.size() ? 1 : 0;
  f.delta_parse = rec.parse_ok ? 0 : 1;
  return f;
}

struct SuccessReport {
  int64_t documents = 0;
  double success = 0.0;     // 1 - mean(delta_aff or delta_email or delta_parse)
  double aff_rate = 0.0;    // marginal mismatch rates
  double email_rate = 0.0;
  double parse_rate = 0.0;
};

inline SuccessReport success_rate(const std::vector<ConsistencyFlags>& flags) {
  if (flags.empty()) raise(ErrorKind::EmptyInput, "no consistency flags to aggregate");
  SuccessReport r;
  r.documents = static_cast<int64_t>(flags.size());
  int64_t any = 0, aff = 0, email = 0, parse = 0;
  for (const auto& f : flags) {
    aff += f.delta_aff;
    email += f.delta_email;
    parse += f.delta_parse;
    any += (f.delta_aff != 0 || f.delta_email != 0 || f.delta_parse != 0) ? 1 : 0;
  }
  double n = static_cast<double>(r.documents);
  r.success = 1.0 - static_cast<double>(any) / n;
  r.aff_rate = static_cast<double>(aff) / n;
  r.email_rate = static_cast<double>(email) / n;
  r.parse_rate = static_cast<double>(parse) / n;
  return r;
}

/// Audits a reported (marginals, success) tuple: the failure rate of a
/// disjunction can never exceed the sum of its marginal rates, so
/// consistency means 1 - success <= sum + 1e-6. All inputs are fractions.
inline bool union_bound_check(double aff_rate, double email_rate, double parse_rate,
                              double success) {
  for (double v : {aff_rate, email_rate, parse_rate, success}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      raise(ErrorKind::InvalidSpec, "rates must be fractions in [0, 1]");
    }
  }
  return (1.0 - success) <= aff_rate + email_rate + parse_rate + 1e-6;
}

/// Share of parsed documents with at least one author holding more than
/// one affiliation. With per_author, the share of authors instead. Raises
/// EmptyInput when nothing parsed.
inline double multi_affiliation_share(const std::vector<ExtractionRecord>& records,
                                      bool per_author = false) {
  int64_t docs = 0, multi_docs = 0, authors = 0, multi_authors = 0;
  for (const auto& rec : records) {
    if (!rec.parse_ok) continue;
    ++docs;
    bool doc_multi = false;
    for (const auto& affs : rec.affiliations) {
      if (affs.size() > 1) {
        doc_multi = true;
        ++multi_authors;
      }
    }
    authors += static_cast<int64_t>(rec.affiliations.size());
    if (doc_multi) ++multi_docs;
  }
  if (per_author) {
    if (authors == 0) raise(ErrorKind::EmptyInput, "no parsed authors with affiliations");
    return static_cast<double>(multi_authors) / static_cast<double>(authors);
  }
  if (docs == 0) raise(ErrorKind::EmptyInput, "no parsed documents");
  return static_cast<double>(multi_docs) / static_cast<double>(docs);
}

struct TokenTotals {
  int64_t prompt = 0;
  int64_t completion = 0;
  int64_t total = 0;
};

inline TokenTotals token_totals(const std::vector<ExtractionRecord>& records) {
  TokenTotals t;
  for (const auto& rec : records) {
    t.prompt += rec.tokens.prompt;
    t.completion += rec.tokens.completion;
  }
  t.total = t.prompt + t.completion;
  return t;
}

// ---------------------------------------------------------------------------
// Country lookup

/// Static institution -> country-code table, shipped as a two-column CSV
/// with an "institution,country" header. Matching is exact on the trimmed
/// institution string; anything unknown simply stays unmapped.
class CountryTable {
 public:
  static CountryTable load(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) raise(ErrorKind::IoFailure, "cannot open country table " + csv_path.string());
    auto rows = parse_csv(in);
    if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "institution" ||
        rows[0][1] != "country") {
      raise(ErrorKind::ParseFailure,
            csv_path.string() + ": expected header institution,country");
    }
    CountryTable t;
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 2) {
        raise(ErrorKind::ParseFailure,
              csv_path.string() + ": row " + std::to_string(i + 1) + " needs two columns");
      }
      t.table_[detail::trim(rows[i][0])] = detail::trim(rows[i][1]);
    }
    return t;
  }

  std::optional<std::string> lookup(const std::string& institution) const {
    auto it = table_.find(detail::trim(institution));
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  /// Fills rec.countries for every known affiliation.
  void apply(ExtractionRecord& rec) const {
    for (const auto& affs : rec.affiliations) {
      for (const auto& a : affs) {
        auto c = lookup(a);
        if (c) rec.countries[a] = *c;
      }
    }
  }

  size_t size() const { return table_.size(); }

 private:
  std::map<std::string, std::string> table_;
};

// ---------------------------------------------------------------------------
// Extractors

struct ExtractorResult {
  std::string raw_output;
  TokenUsage tokens;
};

class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual ExtractorResult extract(const std::string& document_id, const std::string& input) = 0;
};

/// Replays stored model outputs from <root>/<doc_id>/output.txt, with
/// optional token counts in tokens.json ({"prompt": n, "completion": m}).
/// The input text is ignored; it already shaped the stored output.
class ReplayExtractor : public Extractor {
 public:
  explicit ReplayExtractor(std::filesystem::path root) : root_(std::move(root)) {}

  ExtractorResult extract(const std::string& document_id, const std::string&) override {
    ExtractorResult out;
    auto dir = root_ / document_id;
    std::ifstream in(dir / "output.txt", std::ios::binary);
    if (!in) {
      raise(ErrorKind::IoFailure, "no stored output for document " + document_id);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    out.raw_output = ss.str();

    auto tokens_path = dir / "tokens.json";
    if (std::filesystem::exists(tokens_path)) {
      std::ifstream tin(tokens_path, std::ios::binary);
      std::stringstream ts;
      ts << tin.rdbuf();
      auto j = parse_json(ts.str(), tokens_path.string());
      out.tokens.prompt = j.value("prompt", int64_t{0});
      out.tokens.completion = j.value("completion", int64_t{0});
    }
    return out;
  }

 private:
  std::filesystem::path root_;
};

/// Wire settings for a chat-completion extraction endpoint. The prompt
/// template must contain a {{document}} placeholder; the document text is
/// substituted verbatim. No credential fields on purpose: the bearer token
/// comes from the environment via api_token().
struct RemoteExtractorConfig {
  std::string endpoint;
  std::string model;
  std::string prompt_template;

  static RemoteExtractorConfig from_json(const nlohmann::json& j) {
    RemoteExtractorConfig c;
    c.endpoint = j.value("endpoint", "");
    c.model = j.value("model", "");
    c.prompt_template = j.value("prompt_template", "");
    c.validate();
    return c;
  }

  static RemoteExtractorConfig load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::IoFailure, "cannot open extractor config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(parse_json(ss.str(), path.string()));
  }

  void validate() const {
    if (endpoint.empty()) raise(ErrorKind::InvalidConfig, "extractor endpoint is empty");
    if (model.empty()) raise(ErrorKind::InvalidConfig, "extractor model is empty");
    if (prompt_template.find("{{document}}") == std::string::npos) {
      raise(ErrorKind::InvalidConfig, "prompt template lacks a {{document}} placeholder");
    }
  }
};

/// Calls a chat-completion endpoint per document and returns the reply text
/// plus reported token usage. 401/403 raise AuthError; any other non-200 or
/// a malformed reply raises TransportError.
class RemoteExtractor : public Extractor {
 public:
  RemoteExtractor(RemoteExtractorConfig config, HttpTransport& transport)
      : config_(std::move(config)), transport_(transport) {
    config_.validate();
  }

  ExtractorResult extract(const std::string& document_id, const std::string& input) override {
    std::string prompt = config_.prompt_template;
    auto at = prompt.find("{{document}}");
    prompt.replace(at, 12, input);

    nlohmann::json payload = {
        {"model", config_.model},
        {"messages", nlohmann::json::array({nlohmann::json{{"role", "user"},
                                                           {"content", prompt}}})},
    };
    HttpHeaders headers;
    if (auto token = api_token()) {
      headers.emplace_back("Authorization", "Bearer " + *token);
    }
    auto res = transport_.post(config_.endpoint, headers, payload.dump(), "application/json");
    if (res.status == 401 || res.status == 403) {
      raise(ErrorKind::AuthError,
            "endpoint rejected document " + document_id + " with status " +
                std::to_string(res.status));
    }
    if (res.status != 200) {
      raise(ErrorKind::TransportError,
            "endpoint returned status " + std::to_string(res.status) + " for document " +
                document_id);
    }

    auto j = parse_json(res.body, "extractor response for " + document_id);
    ExtractorResult out;
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty() ||
        !j["choices"][0].contains("message") ||
        !j["choices"][0]["message"].contains("content")) {
      raise(ErrorKind::TransportError,
            "extractor response for " + document_id + " has no message content");
    }
    out.raw_output = j["choices"][0]["message"]["content"].get<std::string>();
    if (j.contains("usage")) {
      out.tokens.prompt = j["usage"].value("prompt_tokens", int64_t{0});
      out.tokens.completion = j["usage"].value("completion_tokens", int64_t{0});
    }
    return out;
  }

 private:
  RemoteExtractorConfig config_;
  HttpTransport& transport_;
};

// ---------------------------------------------------------------------------
// Corpus validation

struct ValidationResult {
  std::vector<ExtractionRecord> records;  // sorted by document id
  std::vector<ConsistencyFlags> flags;    // aligned with records
  SuccessReport report;
  std::optional<double> multi_affiliation;  // absent when nothing parsed
  TokenTotals tokens;
};

/// Lists the document ids in a replay corpus: every direct subdirectory
/// holding an input.txt, sorted by name.
inline std::vector<std::string> corpus_document_ids(const std::filesystem::path& corpus) {
  if (!std::filesystem::is_directory(corpus)) {
    raise(ErrorKind::IoFailure, "corpus directory not found: " + corpus.string());
  }
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(corpus)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "input.txt")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) raise(ErrorKind::EmptyInput, "corpus has no documents: " + corpus.string());
  return ids;
}

/// Runs the extractor over every document in the corpus and aggregates the
/// consistency metrics. Country mapping is applied when a table is given.
inline ValidationResult validate_corpus(const std::filesystem::path& corpus,
                                        Extractor& extractor,
                                        const CountryTable* countries = nullptr) {
  ValidationResult out;
  for (const auto& id : corpus_document_ids(corpus)) {
    std::ifstream in(corpus / id / "input.txt", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    auto extracted = extractor.extract(id, ss.str());
    auto rec = parse_extractor_output(id, extracted.raw_output);
    rec.tokens = extracted.tokens;
    if (countries != nullptr) countries->apply(rec);
    out.flags.push_back(check_consistency(rec));
    out.records.push_back(std::move(rec));
  }
  out.report = success_rate(out.flags);
  bool any_parsed = false;
  for (const auto& rec : out.records) any_parsed = any_parsed || rec.parse_ok;
  if (any_parsed) out.multi_affiliation = multi_affiliation_share(out.records);
  out.tokens = token_totals(out.records);
  return out;
}

/// Per-document flags and token counts as CSV, one row per document.
inline std::string results_csv(const ValidationResult& result) {
  std::string out = csv_row({"doc_id", "delta_aff", "delta_email", "delta_parse",
                             "prompt_tokens", "completion_tokens"});
  for (size_t i = 0; i < result.records.size(); ++i) {
    const auto& f = result.flags[i];
    const auto& t = result.records[i].tokens;
    out += csv_row({f.document_id, std::to_string(f.delta_aff), std::to_string(f.delta_email),
                    std::to_string(f.delta_parse), std::to_string(t.prompt),
                    std::to_string(t.completion)});
  }
  return out;
}

}  // namespace reviewkit
