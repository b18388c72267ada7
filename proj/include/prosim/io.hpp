#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prosim/config.hpp"
#include "prosim/engine.hpp"
#include "prosim/error.hpp"
#include "prosim/population.hpp"
#include "prosim/shapley.hpp"
#include "prosim/tpp.hpp"

namespace prosim {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr std::string_view kTraceFormat = "prosim-trace/1";

// Population ---------------------------------------------------------------

inline Json to_json(const AgentProfile& a) {
  Json traits = Json::object();
  for (std::size_t j = 0; j < kTraitCount; ++j)
    traits[std::string(enum_name(enum_at<Trait>(j)))] = a.traits.values[j];
  const auto& d = a.demographics;
  return {{"id", a.id},
          {"demographics",
           {{"age", d.age},
            {"gender", std::string(enum_name(d.gender))},
            {"education", std::string(enum_name(d.education))},
            {"income", std::string(enum_name(d.income))},
            {"employment", std::string(enum_name(d.employment))}}},
          {"traits", traits},
          {"persona", a.persona}};
}

inline AgentProfile profile_from_json(const Json& j) {
  try {
    AgentProfile a;
    a.id = j.at("id").get<std::size_t>();
    const auto& d = j.at("demographics");
    a.demographics.age = d.at("age").get<int>();
    a.demographics.gender = parse_enum<Gender>(d.at("gender").get<std::string>(), "gender");
    a.demographics.education =
        parse_enum<Education>(d.at("education").get<std::string>(), "education");
    a.demographics.income = parse_enum<Income>(d.at("income").get<std::string>(), "income");
    a.demographics.employment =
        parse_enum<Employment>(d.at("employment").get<std::string>(), "employment");
    const auto& t = j.at("traits");
    for (std::size_t k = 0; k < kTraitCount; ++k)
      a.traits.values[k] = t.at(std::string(enum_name(enum_at<Trait>(k)))).get<double>();
    a.persona = j.at("persona").get<std::string>();
    return a;
  } catch (const Json::exception& e) {
    fail(ErrorKind::DataError, std::string("malformed agent profile: ") + e.what());
  }
}

inline void write_population(std::ostream& os, const std::vector<AgentProfile>& population) {
  for (const auto& a : population) os << to_json(a).dump() << '\n';
}

/// Profiles must carry ids 0..n-1 in order.
inline std::vector<AgentProfile> read_population(std::istream& is) {
  std::vector<AgentProfile> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(profile_from_json(parse_json_text(line, "population")));
    require(out.back().id == out.size() - 1, ErrorKind::DataError,
            "population ids must be 0..n-1 in order");
  }
  require(!out.empty(), ErrorKind::DataError, "population file is empty");
  return out;
}

inline std::vector<AgentProfile> load_population(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::DataError, "cannot open " + path.string());
  return read_population(in);
}

// Manifest -----------------------------------------------------------------

inline Json to_json(const SeedSet& s) {
  return {{"master", s.master},         {"population", s.population}, {"network", s.network},
          {"activation", s.activation}, {"inequity", s.inequity},     {"shuffle", s.shuffle},
          {"noise", s.noise}};
}

inline SeedSet seed_set_from_json(const Json& j) {
  return {j.at("master").get<Seed>(),     j.at("population").get<Seed>(),
          j.at("network").get<Seed>(),    j.at("activation").get<Seed>(),
          j.at("inequity").get<Seed>(),   j.at("shuffle").get<Seed>(),
          j.at("noise").get<Seed>()};
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Run provenance. `deterministic` omits the timestamp so that it can be
/// embedded in byte-reproducible artifacts.
inline Json run_manifest(const AppConfig& config, std::string_view command, bool deterministic) {
  Json m = {{"tool", "prosim"},
            {"version", std::string(kVersion)},
            {"command", std::string(command)},
            {"backend", std::string(enum_name(config.backend))},
            {"master_seed", config.seed},
            {"seeds", to_json(config.seeds())},
            {"config", to_json(config)}};
  if (config.backend == BackendKind::Llm) m["model"] = config.llm.model_name;
  if (!deterministic) m["timestamp"] = utc_timestamp();
  return m;
}

// Dynamics trace -------------------------------------------------------------

/// Manifest embedded in traces: deterministic and independent of --jobs.
inline Json trace_manifest(const AppConfig& config) {
  Json m = run_manifest(config, "simulate dynamics", true);
  m["config"].erase("jobs");
  return m;
}

namespace detail {

inline Json edges_to_json(const std::vector<Edge>& edges) {
  Json arr = Json::array();
  for (const auto& e : edges) arr.push_back({e.u, e.v});
  return arr;
}

inline std::vector<Edge> edges_from_json(const Json& arr) {
  std::vector<Edge> out;
  for (const auto& e : arr) out.push_back(Edge::make(e.at(0).get<NodeId>(), e.at(1).get<NodeId>()));
  return out;
}

inline Json state_to_json(const AgentState& s) {
  return {{"intentions", s.intentions},
          {"u", s.unfairness},
          {"direct", s.directly_affected},
          {"ever", s.ever_exposed}};
}

inline AgentState state_from_json(const Json& j) {
  AgentState s;
  s.intentions = j.at("intentions").get<IntentionRow>();
  s.unfairness = j.at("u").get<double>();
  s.directly_affected = j.at("direct").get<bool>();
  s.ever_exposed = j.at("ever").get<bool>();
  return s;
}

}  // namespace detail

inline Json trace_header(const DynamicsTrace& trace, const AppConfig& config) {
  Json inequity = nullptr;
  if (trace.inequity) {
    inequity = {{"kind", std::string(enum_name(trace.inequity->kind))},
                {"fraction", trace.inequity->fraction},
                {"seed", trace.inequity->seed},
                {"affected", trace.inequity->affected}};
  }
  Json initial = Json::array();
  for (const auto& s : trace.initial) initial.push_back(detail::state_to_json(s));
  return {{"type", "header"},
          {"format", std::string(kTraceFormat)},
          {"manifest", trace_manifest(config)},
          {"n", trace.graph.node_count()},
          {"edges", detail::edges_to_json(trace.graph.edges())},
          {"inequity", inequity},
          {"initial", initial}};
}

inline Json to_json(const IterationRecord& rec) {
  Json agents = Json::array();
  for (std::size_t i = 0; i < rec.agents.size(); ++i) {
    const auto& a = rec.agents[i];
    Json row = detail::state_to_json(a.state);
    row["id"] = i;
    row["indirect"] = a.indirectly_exposed;
    row["rating"] = a.unfairness_rating;
    row["tendency"] = a.tendency();
    agents.push_back(std::move(row));
  }
  return {{"type", "iteration"},
          {"t", rec.t},
          {"active_edges", detail::edges_to_json(rec.active_edges)},
          {"agents", agents}};
}

inline IterationRecord iteration_from_json(const Json& j) {
  IterationRecord rec;
  rec.t = j.at("t").get<int>();
  rec.active_edges = detail::edges_from_json(j.at("active_edges"));
  for (const auto& a : j.at("agents")) {
    AgentRecord r;
    r.state = detail::state_from_json(a);
    r.indirectly_exposed = a.at("indirect").get<bool>();
    r.unfairness_rating = a.at("rating").get<int>();
    rec.agents.push_back(std::move(r));
  }
  return rec;
}

struct LoadedTrace {
  Json header;
  DynamicsTrace trace;
  bool truncated = false;  // an incomplete final line was dropped
};

/// Reads a JSONL trace. A final line that fails to parse is treated as the
/// remnant of an interrupted write and dropped; damage elsewhere is an error.
inline LoadedTrace read_trace(std::istream& is) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  require(!lines.empty(), ErrorKind::DataError, "trace is empty");
  LoadedTrace out;
  try {
    out.header = Json::parse(lines.front());
    require(out.header.value("type", "") == "header" &&
                out.header.value("format", "") == kTraceFormat,
            ErrorKind::DataError, "trace header missing or of unknown format");
    const auto n = out.header.at("n").get<std::size_t>();
    out.trace.graph = Graph(n, detail::edges_from_json(out.header.at("edges")));
    if (!out.header.at("inequity").is_null()) {
      const auto& q = out.header.at("inequity");
      InequityCondition c;
      c.kind = parse_enum<InequityKind>(q.at("kind").get<std::string>(), "inequity");
      c.fraction = q.at("fraction").get<double>();
      c.seed = q.at("seed").get<Seed>();
      c.affected = q.at("affected").get<std::vector<std::size_t>>();
      out.trace.inequity = std::move(c);
    }
    for (const auto& s : out.header.at("initial"))
      out.trace.initial.push_back(detail::state_from_json(s));
  } catch (const Json::exception& e) {
    fail(ErrorKind::DataError, std::string("malformed trace header: ") + e.what());
  }
  for (std::size_t k = 1; k < lines.size(); ++k) {
    Json j;
    try {
      j = Json::parse(lines[k]);
    } catch (const Json::exception&) {
      require(k + 1 == lines.size(), ErrorKind::DataError,
              "malformed trace line " + std::to_string(k + 1));
      out.truncated = true;
      break;
    }
    try {
      auto rec = iteration_from_json(j);
      require(rec.t == static_cast<int>(out.trace.records.size()) + 1, ErrorKind::DataError,
              "trace iterations out of order at line " + std::to_string(k + 1));
      out.trace.records.push_back(std::move(rec));
    } catch (const Json::exception& e) {
      fail(ErrorKind::DataError,
           "malformed trace line " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return out;
}

inline LoadedTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::DataError, "cannot open " + path.string());
  return read_trace(in);
}

// CSV ------------------------------------------------------------------------

/// Comma-separated writer for plain fields (no quoting; callers never emit commas).
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header) : os_(os) {
    bool first = true;
    for (auto h : header) {
      os_ << (first ? "" : ",") << h;
      first = false;
    }
    os_ << '\n';
    os_ << std::setprecision(17);
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((os_ << (first ? "" : ","), write(fields), first = false), ...);
    os_ << '\n';
  }

 private:
  template <class T>
  void write(const T& value) {
    if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (value) os_ << *value;
    } else {
      os_ << value;
    }
  }
  std::ostream& os_;
};

/// Splits CSV text into rows of fields; the header row is returned first.
inline std::vector<std::vector<std::string>> read_csv(std::istream& is) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline void write_baseline_csv(std::ostream& os, const std::vector<IntentionRow>& table) {
  CsvWriter csv(os, {"agent_id", "scenario", "value"});
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t s = 0; s < kScenarioCount; ++s)
      csv.row(i, enum_name(enum_at<ScenarioKind>(s)), table[i][s]);
}

namespace detail {

inline std::size_t parse_index(const std::string& text, const std::string& what) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(text, &pos);
    require(pos == text.size(), ErrorKind::DataError, "bad " + what + " '" + text + "'");
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    fail(ErrorKind::DataError, "bad " + what + " '" + text + "'");
  }
}

inline int parse_likert_field(const std::string& text) {
  const auto v = parse_index(text, "intention");
  require(v >= kLikertMin && v <= kLikertMax, ErrorKind::DataError,
          "intention " + text + " outside [1, 7]");
  return static_cast<int>(v);
}

}  // namespace detail

/// Reads agent_id,scenario,value rows back into a dense table.
inline std::vector<IntentionRow> read_baseline_csv(std::istream& is) {
  const auto rows = read_csv(is);
  require(rows.size() > 1 && rows.front().size() == 3 && rows.front()[0] == "agent_id",
          ErrorKind::DataError, "baseline CSV must have header agent_id,scenario,value");
  std::size_t n = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require(rows[r].size() == 3, ErrorKind::DataError, "baseline CSV row with wrong field count");
    n = std::max(n, detail::parse_index(rows[r][0], "agent id") + 1);
  }
  std::vector<IntentionRow> table(n);
  std::vector<std::array<bool, kScenarioCount>> seen(n);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto i = detail::parse_index(rows[r][0], "agent id");
    const auto s = enum_index(parse_enum<ScenarioKind>(rows[r][1], "scenario"));
    require(!seen[i][s], ErrorKind::DataError, "duplicate baseline entry");
    seen[i][s] = true;
    table[i][s] = detail::parse_likert_field(rows[r][2]);
  }
  for (const auto& row : seen)
    for (bool b : row) require(b, ErrorKind::DataError, "baseline CSV is missing entries");
  return table;
}

inline void write_policy_csv(std::ostream& os, const PolicyTable& table) {
  CsvWriter csv(os, {"policy", "agent_id", "scenario", "value"});
  for (std::size_t k = 0; k < table.policies.size(); ++k)
    for (std::size_t i = 0; i < table.rows[k].size(); ++i)
      for (std::size_t s = 0; s < kScenarioCount; ++s)
        csv.row(enum_name(table.policies[k]), i, enum_name(enum_at<ScenarioKind>(s)),
                table.rows[k][i][s]);
}

inline PolicyTable read_policy_csv(std::istream& is) {
  const auto rows = read_csv(is);
  require(rows.size() > 1 && rows.front().size() == 4 && rows.front()[0] == "policy",
          ErrorKind::DataError, "policy CSV must have header policy,agent_id,scenario,value");
  PolicyTable out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require(rows[r].size() == 4, ErrorKind::DataError, "policy CSV row with wrong field count");
    const auto kind = parse_enum<PolicyKind>(rows[r][0], "policy");
    auto it = std::find(out.policies.begin(), out.policies.end(), kind);
    if (it == out.policies.end()) {
      out.policies.push_back(kind);
      out.rows.emplace_back();
      it = out.policies.end() - 1;
    }
    auto& table = out.rows[static_cast<std::size_t>(it - out.policies.begin())];
    const auto i = detail::parse_index(rows[r][1], "agent id");
    if (table.size() <= i) table.resize(i + 1);
    table[i][enum_index(parse_enum<ScenarioKind>(rows[r][2], "scenario"))] =
        detail::parse_likert_field(rows[r][3]);
  }
  return out;
}

inline void write_tpp_outcomes_csv(std::ostream& os, const std::vector<TrialOutcome>& outcomes) {
  CsvWriter csv(os, {"agent_id", "trial_index", "x", "y", "choice", "judge_payoff", "p1_payoff",
                     "p2_payoff"});
  for (const auto& o : outcomes)
    csv.row(o.agent_id, o.trial.index, o.trial.allocation, o.trial.cost, enum_name(o.choice),
            o.payoffs.judge, o.payoffs.p1, o.payoffs.p2);
}

inline void write_tpp_rates_csv(std::ostream& os, const RateMatrix& rates) {
  CsvWriter csv(os, {"x", "y", "rate", "n"});
  for (const auto& [cell, rc] : rates) csv.row(cell.first, cell.second, rc.rate(), rc.total);
}

inline void write_shap_csv(std::ostream& os, const std::vector<TraitAttribution>& rows) {
  os << "agent_id";
  for (std::size_t j = 0; j < kTraitCount; ++j) os << ',' << enum_name(enum_at<Trait>(j));
  os << ",prediction,baseline_prediction\n" << std::setprecision(17);
  for (const auto& a : rows) {
    os << a.agent_id;
    for (double v : a.phi) os << ',' << v;
    os << ',' << a.prediction << ',' << a.baseline_prediction << '\n';
  }
}

inline Json to_json(const TraitAttribution& a) {
  Json phi = Json::object();
  for (std::size_t j = 0; j < kTraitCount; ++j) phi[std::string(enum_name(enum_at<Trait>(j)))] = a.phi[j];
  return {{"agent_id", a.agent_id},
          {"phi", phi},
          {"prediction", a.prediction},
          {"baseline_prediction", a.baseline_prediction}};
}

/// Writes `text` to `path` through a temporary file so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::DataError, "cannot write " + tmp);
    out << text;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::DataError, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace prosim
