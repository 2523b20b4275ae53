#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rwlab/acceptance.hpp"
#include "rwlab/error.hpp"
#include "rwlab/excursions.hpp"
#include "rwlab/format.hpp"
#include "rwlab/graph.hpp"
#include "rwlab/lamplighter.hpp"
#include "rwlab/latepoints.hpp"
#include "rwlab/oracle.hpp"
#include "rwlab/record.hpp"
#include "rwlab/walker.hpp"

#ifndef RWLAB_VERSION
#define RWLAB_VERSION "0.1.0"
#endif

namespace rwlab {

inline constexpr std::string_view kToolVersion = RWLAB_VERSION;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------
//
// Flat sections of key = value lines:
//
//   [experiment]   kind, seed, threads
//   [graph]        family and its parameters
//   [<kind>]       parameters of the experiment
//
// '#' and ';' start comment lines. Unknown sections and keys are rejected.

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  KeyValues graph;   // canonical family parameters; empty for acceptance
  KeyValues params;  // canonical values, defaults filled in

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

enum class ValueType { Count, Real, RealList, Word };

struct KeySpec {
  const char* key;
  const char* fallback;
  ValueType type;
  std::vector<std::string> words = {};
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"gen",        "cover",       "late",   "distinguish",
                                              "excursion",  "lamplighter", "oracle", "acceptance"};
  return kinds;
}

inline std::vector<KeySpec> kind_schema(const std::string& kind) {
  using enum ValueType;
  if (kind == "gen") return {};
  if (kind == "cover") return {{"replicas", "200", Count}};
  if (kind == "late")
    return {{"alpha", "0.25,0.5,0.75", RealList}, {"replicas", "500", Count}, {"t_cov_replicas", "200", Count}};
  if (kind == "distinguish")
    return {{"alpha", "0.3,0.5,0.7,0.9", RealList}, {"replicas", "1000", Count},  {"pairs", "2000", Count},
            {"z_threshold", "3", Real},           {"zeta", "0.6931471805599453", Real},
            {"t_cov_replicas", "200", Count}};
  if (kind == "excursion")
    return {{"x", "0", Count},           {"r", "1", Count},        {"R", "3", Count},
            {"beta", "2", Real},         {"window", "1", Real},    {"replicas", "20000", Count},
            {"trace_steps", "100000", Count}, {"occupation_horizon", "0", Count},
            {"partition_epsilon", "0", Real}, {"partition_replicas", "2000", Count}};
  if (kind == "lamplighter")
    return {{"mode", "cutoff", Word, {"cutoff", "exact"}},
            {"alpha", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", RealList},
            {"samples", "2000", Count},
            {"pairs", "2000", Count},
            {"t_cov_replicas", "200", Count},
            {"t_max", "50", Count}};
  if (kind == "oracle") return {{"eps", "0.25", RealList}};
  if (kind == "acceptance") return {{"criterion", "1", Count}};
  fail(Errc::ConfigInvalid, "unknown experiment kind '" + kind + "'");
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] inline void config_error(int line, const std::string& what) {
  fail(Errc::ConfigInvalid, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + what);
}

inline std::optional<std::uint64_t> parse_count(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string canonical_value(const KeySpec& spec, const std::string& raw, int line, const std::string& where) {
  const std::string field = where + "." + spec.key;
  switch (spec.type) {
    case ValueType::Count: {
      const auto v = parse_count(raw);
      if (!v) config_error(line, field + ": expected a nonnegative integer, got '" + raw + "'");
      return std::to_string(*v);
    }
    case ValueType::Real: {
      const auto v = parse_real(raw);
      if (!v) config_error(line, field + ": expected a number, got '" + raw + "'");
      return format_short(*v);
    }
    case ValueType::RealList: {
      std::string out;
      for (const auto& item : split_list(raw)) {
        const auto v = parse_real(item);
        if (!v) config_error(line, field + ": expected a comma-separated list of numbers, got '" + raw + "'");
        out += (out.empty() ? "" : ",") + format_short(*v);
      }
      return out;
    }
    case ValueType::Word:
      if (std::find(spec.words.begin(), spec.words.end(), raw) == spec.words.end())
        config_error(line, field + ": unknown value '" + raw + "'");
      return raw;
  }
  return raw;
}

struct RawEntry {
  std::string value;
  int line = 0;
};

struct RawSection {
  int line = 0;
  std::map<std::string, RawEntry> entries;
};

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text, std::optional<std::string> kind_hint = std::nullopt) {
  std::map<std::string, detail::RawSection> sections;
  std::string current;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string line = detail::trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') detail::config_error(lineno, "unterminated section header");
      current = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (current.empty()) detail::config_error(lineno, "empty section name");
      if (sections.count(current)) detail::config_error(lineno, "duplicate section [" + current + "]");
      sections[current].line = lineno;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::config_error(lineno, "expected key = value");
    if (current.empty()) detail::config_error(lineno, "key outside any section");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) detail::config_error(lineno, "empty key");
    auto& entries = sections[current].entries;
    if (entries.count(key)) detail::config_error(lineno, current + "." + key + ": duplicate key");
    entries[key] = {value, lineno};
  }

  ExperimentConfig cfg;
  detail::RawSection experiment;
  if (auto it = sections.find("experiment"); it != sections.end()) experiment = it->second;
  for (const auto& [key, entry] : experiment.entries)
    if (key != "kind" && key != "seed" && key != "threads")
      detail::config_error(entry.line, "experiment." + key + ": unknown key");
  if (auto it = experiment.entries.find("kind"); it != experiment.entries.end()) {
    cfg.kind = it->second.value;
    if (kind_hint && *kind_hint != cfg.kind)
      detail::config_error(it->second.line, "experiment.kind: config is for '" + cfg.kind + "', not '" + *kind_hint + "'");
  } else if (kind_hint) {
    cfg.kind = *kind_hint;
  } else {
    detail::config_error(0, "experiment.kind: missing");
  }
  const auto& kinds = detail::experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    detail::config_error(experiment.entries.count("kind") ? experiment.entries.at("kind").line : 0,
                         "experiment.kind: unknown kind '" + cfg.kind + "'");
  if (auto it = experiment.entries.find("seed"); it != experiment.entries.end()) {
    const auto v = detail::parse_count(it->second.value);
    if (!v) detail::config_error(it->second.line, "experiment.seed: expected an unsigned 64-bit integer");
    cfg.seed = *v;
  }
  if (auto it = experiment.entries.find("threads"); it != experiment.entries.end()) {
    const auto v = detail::parse_count(it->second.value);
    if (!v || *v < 1 || *v > 1024) detail::config_error(it->second.line, "experiment.threads: expected 1..1024");
    cfg.threads = static_cast<unsigned>(*v);
  }

  for (const auto& [name, sec] : sections)
    if (name != "experiment" && name != "graph" && name != cfg.kind)
      detail::config_error(sec.line, "section [" + name + "] does not apply to kind '" + cfg.kind + "'");

  if (cfg.kind != "acceptance") {
    auto it = sections.find("graph");
    if (it == sections.end()) detail::config_error(0, "graph: section missing");
    KeyValues kv;
    for (const auto& [k, e] : it->second.entries) kv[k] = e.value;
    auto line_of = [&](const std::string& k) {
      auto e = it->second.entries.find(k);
      return e == it->second.entries.end() ? it->second.line : e->second.line;
    };
    FamilySpec family;
    try {
      family = family_from_kv(kv);
    } catch (const Error& e) {
      detail::config_error(it->second.line, std::string("graph: ") + e.what());
    }
    if (std::holds_alternative<Imported>(family))
      detail::config_error(line_of("family"), "graph.family: imported graphs cannot be regenerated from a config");
    cfg.graph = family_to_kv(family);
    for (const auto& [k, e] : it->second.entries)
      if (!cfg.graph.count(k)) detail::config_error(e.line, "graph." + k + ": unknown key for this family");
    // Numeric parameters must read back to the canonical value.
    for (const auto& [k, v] : kv)
      if (k != "family" && k != "name") {
        const auto a = detail::parse_real(v), b = detail::parse_real(cfg.graph[k]);
        if (!a || !b || *a != *b) detail::config_error(line_of(k), "graph." + k + ": invalid value '" + v + "'");
      }
    if (auto p = cfg.graph.find("p"); p != cfg.graph.end()) p->second = format_short(*detail::parse_real(p->second));
  } else if (sections.count("graph")) {
    detail::config_error(sections.at("graph").line, "graph: acceptance configs take no graph");
  }

  const auto schema = detail::kind_schema(cfg.kind);
  const detail::RawSection* own = sections.count(cfg.kind) ? &sections.at(cfg.kind) : nullptr;
  if (own)
    for (const auto& [k, e] : own->entries) {
      const bool known = std::any_of(schema.begin(), schema.end(), [&](const auto& s) { return k == s.key; });
      if (!known) detail::config_error(e.line, cfg.kind + "." + k + ": unknown key");
    }
  for (const auto& spec : schema) {
    const detail::RawEntry* e = nullptr;
    if (own)
      if (auto it = own->entries.find(spec.key); it != own->entries.end()) e = &it->second;
    cfg.params[spec.key] = detail::canonical_value(spec, e ? e->value : spec.fallback, e ? e->line : 0, cfg.kind);
  }
  return cfg;
}

// Canonical text: fixed section order, sorted keys, every default spelled out.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[experiment]\nkind = " << cfg.kind << "\nseed = " << cfg.seed << "\nthreads = " << cfg.threads << '\n';
  if (!cfg.graph.empty()) {
    os << "\n[graph]\n";
    os << "family = " << cfg.graph.at("family") << '\n';
    for (const auto& [k, v] : cfg.graph)
      if (k != "family") os << k << " = " << v << '\n';
  }
  if (!cfg.params.empty()) {
    os << "\n[" << cfg.kind << "]\n";
    for (const auto& [k, v] : cfg.params) os << k << " = " << v << '\n';
  }
  return os.str();
}

inline ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::string> kind_hint = std::nullopt) {
  std::ifstream is(path);
  if (!is) fail(Errc::ConfigInvalid, "cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str(), std::move(kind_hint));
  } catch (const Error& e) {
    fail(Errc::ConfigInvalid, path.string() + ": " + std::string(e.what()).substr(errc_name(e.code()).size() + 2));
  }
}

// ---------------------------------------------------------------------------
// ExperimentRecord
// ---------------------------------------------------------------------------

struct Artifact {
  std::string path;    // relative to the output directory
  std::string digest;  // FNV-1a of the file contents
};

struct ExperimentRecord {
  std::string version{kToolVersion};
  std::string kind;
  std::string config;         // canonical config text
  std::string config_digest;  // hex FNV-1a of `config`
  std::uint64_t seed = 0;
  std::string graph;          // family label
  std::optional<Estimate> t_cov_ref;
  std::vector<RecordedValue> estimates;
  std::vector<Artifact> artifacts;
  std::optional<bool> pass;   // acceptance records
  std::vector<std::string> failures;
  std::string summary;
  double seconds = 0.0;       // wall clock, not replayed
};

inline nlohmann::json to_json(const ExperimentRecord& r) {
  nlohmann::json j;
  j["tool"] = "rwlab";
  j["version"] = r.version;
  j["kind"] = r.kind;
  j["config"] = r.config;
  j["config_digest"] = r.config_digest;
  j["seed"] = r.seed;
  j["graph"] = r.graph;
  if (r.t_cov_ref)
    j["t_cov_ref"] = {{"mean", format_double(r.t_cov_ref->mean)},
                      {"stderr", format_double(r.t_cov_ref->stderr_)},
                      {"replicas", r.t_cov_ref->n}};
  else
    j["t_cov_ref"] = nullptr;
  auto& est = j["estimates"] = nlohmann::json::array();
  for (const auto& v : r.estimates)
    est.push_back({{"name", v.name},
                   {"value", format_double(v.value)},
                   {"stderr", format_double(v.stderr_)},
                   {"operation", v.operation},
                   {"seed", v.seed},
                   {"replicas", v.replicas}});
  auto& art = j["artifacts"] = nlohmann::json::array();
  for (const auto& a : r.artifacts) art.push_back({{"path", a.path}, {"digest", a.digest}});
  if (r.pass) j["pass"] = *r.pass;
  if (!r.failures.empty()) j["failures"] = r.failures;
  j["summary"] = r.summary;
  j["timings"] = {{"total_seconds", r.seconds}};
  return j;
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
  try {
    ExperimentRecord r;
    r.version = j.at("version").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.config = j.at("config").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.graph = j.at("graph").get<std::string>();
    if (!j.at("t_cov_ref").is_null()) {
      const auto& t = j.at("t_cov_ref");
      r.t_cov_ref = Estimate{std::stod(t.at("mean").get<std::string>()), std::stod(t.at("stderr").get<std::string>()),
                             t.at("replicas").get<std::size_t>()};
    }
    for (const auto& e : j.at("estimates"))
      r.estimates.push_back({e.at("name").get<std::string>(), std::stod(e.at("value").get<std::string>()),
                             std::stod(e.at("stderr").get<std::string>()), e.at("operation").get<std::string>(),
                             e.at("seed").get<std::uint64_t>(), e.at("replicas").get<std::size_t>()});
    for (const auto& a : j.at("artifacts"))
      r.artifacts.push_back({a.at("path").get<std::string>(), a.at("digest").get<std::string>()});
    if (j.contains("pass")) r.pass = j.at("pass").get<bool>();
    if (j.contains("failures")) r.failures = j.at("failures").get<std::vector<std::string>>();
    r.summary = j.value("summary", "");
    r.seconds = j.at("timings").at("total_seconds").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ConfigInvalid, std::string("malformed record: ") + e.what());
  }
}

inline ExperimentRecord load_record(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::Io, "cannot read record " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ConfigInvalid, path.string() + ": " + e.what());
  }
  return record_from_json(j);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> real_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(*parse_real(item));
  return out;
}

inline std::size_t count_param(const ExperimentConfig& cfg, const char* key) {
  return static_cast<std::size_t>(*parse_count(cfg.params.at(key)));
}

inline double real_param(const ExperimentConfig& cfg, const char* key) { return *parse_real(cfg.params.at(key)); }

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  template <typename Fn>
  void write(const std::string& name, Fn&& fn) {
    std::ostringstream os;
    fn(os);
    const std::string text = os.str();
    const auto path = dir_ / name;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(Errc::Io, "cannot write " + path.string());
    f << text;
    if (!f) fail(Errc::Io, "write failed for " + path.string());
    artifacts_.push_back({name, hex64(fnv1a(text))});
  }

  // Files written by a module; digested after the fact.
  void adopt(const std::string& name) {
    std::ifstream f(dir_ / name, std::ios::binary);
    if (!f) fail(Errc::Io, "missing artifact " + (dir_ / name).string());
    std::stringstream ss;
    ss << f.rdbuf();
    artifacts_.push_back({name, hex64(fnv1a(ss.str()))});
  }

  const std::filesystem::path& dir() const { return dir_; }
  std::vector<Artifact> take() { return std::move(artifacts_); }

 private:
  std::filesystem::path dir_;
  std::vector<Artifact> artifacts_;
};

inline Estimate reference_cover(const GraphTopology& g, const ExperimentConfig& cfg, ValueLog& log) {
  const std::uint64_t s = derive_seed(cfg.seed, "t_cov");
  const auto e = estimate_cover_time(g, count_param(cfg, "t_cov_replicas"), s, cfg.threads);
  log.add("t_cov_ref", e, "walker.estimate_cover_time", s);
  return e;
}

inline void run_gen(const GraphTopology& g, ArtifactWriter& out, ValueLog& log) {
  out.write("graph.edges", [&](std::ostream& os) { write_edge_list(os, g); });
  out.write("graph.meta", [&](std::ostream& os) { write_metadata(os, g); });
  const auto deg = degree_stats(g);
  log.add("vertex_count", static_cast<double>(g.vertex_count()), "graph.generate", 0, 0);
  log.add("edge_count", static_cast<double>(g.edge_count()), "graph.generate", 0, 0);
  log.add("min_degree", static_cast<double>(deg.min_degree), "graph.degree_stats", 0, 0);
  log.add("max_degree", static_cast<double>(deg.max_degree), "graph.degree_stats", 0, 0);
  if (g.vertex_count() <= kDenseCap) log.add("diameter", static_cast<double>(diameter(g)), "graph.diameter", 0, 0);
}

inline Estimate run_cover(const GraphTopology& g, const ExperimentConfig& cfg, ArtifactWriter& out, ValueLog& log) {
  const std::size_t replicas = count_param(cfg, "replicas");
  if (replicas < 2) fail(Errc::InvalidSpec, "cover.replicas must be at least 2");
  const auto samples = cover_time_samples(g, replicas, cfg.seed, cfg.threads);
  out.write("cover.csv", [&](std::ostream& os) {
    os << "replica,cover_time\n";
    for (std::size_t r = 0; r < samples.size(); ++r) os << r << ',' << samples[r] << '\n';
  });
  const auto e = estimate_of(samples);
  log.add("t_cov", e, "walker.cover_time_samples", cfg.seed);
  return e;
}

inline Estimate run_late(const GraphTopology& g, const ExperimentConfig& cfg, ArtifactWriter& out, ValueLog& log) {
  const auto cov = reference_cover(g, cfg, log);
  const std::size_t replicas = count_param(cfg, "replicas");
  const double logv = std::log(static_cast<double>(g.vertex_count()));
  std::ostringstream csv;
  csv << "alpha,replica,late_size\n";
  for (double alpha : real_list(cfg.params.at("alpha"))) {
    const std::string a = format_short(alpha);
    const std::uint64_t s = derive_seed(cfg.seed, "late/" + a);
    const auto sizes = late_set_sizes(g, alpha, cov.mean, replicas, s, cfg.threads);
    for (std::size_t r = 0; r < sizes.size(); ++r) csv << a << ',' << r << ',' << sizes[r] << '\n';
    const auto e = estimate_of(sizes);
    log.add("E|L(" + a + ")|", e, "latepoints.late_set_sizes", s);
    log.add("exponent(" + a + ")", std::log(e.mean) / logv, "latepoints.late_set_sizes", s, replicas);
  }
  out.write("late.csv", [&](std::ostream& os) { os << csv.str(); });
  return cov;
}

inline Estimate run_distinguish(const GraphTopology& g, const ExperimentConfig& cfg, ArtifactWriter& out,
                                ValueLog& log) {
  const auto cov = reference_cover(g, cfg, log);
  DistinguisherConfig dc;
  dc.replicas = count_param(cfg, "replicas");
  dc.pairs = count_param(cfg, "pairs");
  dc.z_threshold = real_param(cfg, "z_threshold");
  dc.zeta = real_param(cfg, "zeta");
  dc.threads = cfg.threads;
  dc.seed = derive_seed(cfg.seed, "uniform");
  const auto uni = uniform_rejection(g, dc);
  log.add("uniform rejection", uni.power, "latepoints.uniform_rejection", dc.seed);
  std::ostringstream csv;
  csv << "alpha,horizon,power,power_stderr,mean_z,tv_upper,m_hat,m_hat_stderr,overflow,uniform_rejection\n";
  for (double alpha : real_list(cfg.params.at("alpha"))) {
    const std::string a = format_short(alpha);
    dc.seed = derive_seed(cfg.seed, "power/" + a);
    const auto pw = distinguisher_power(g, alpha, cov.mean, dc);
    const std::uint64_t power_seed = dc.seed;
    double mean_z = 0.0;
    for (double z : pw.z) mean_z += z / static_cast<double>(pw.z.size());
    out.write("z_" + a + ".csv", [&](std::ostream& os) { write_distinguisher_csv(os, pw); });
    dc.seed = derive_seed(cfg.seed, "exp_moment/" + a);
    const auto em = exp_moment_estimate(g, alpha, cov.mean, dc);
    out.write("intersections_" + a + ".csv", [&](std::ostream& os) { write_intersections_csv(os, em); });
    log.add("power(" + a + ")", pw.power, "latepoints.distinguisher_power", power_seed);
    log.add("mean z(" + a + ")", mean_z, "latepoints.distinguisher_power", power_seed, pw.replicas);
    log.add("m_hat(" + a + ")", em.m_hat, "latepoints.exp_moment_estimate", dc.seed);
    log.add("tv_upper(" + a + ")", em.tv_upper, "latepoints.exp_moment_estimate", dc.seed, dc.pairs);
    csv << format_double(alpha) << ',' << horizon_for(alpha, cov.mean) << ',' << format_double(pw.power.mean) << ','
        << format_double(pw.power.stderr_) << ',' << format_double(mean_z) << ',' << format_double(em.tv_upper) << ','
        << format_double(em.m_hat.mean) << ',' << format_double(em.m_hat.stderr_) << ',' << (em.overflow ? 1 : 0)
        << ',' << format_double(uni.power.mean) << '\n';
  }
  out.write("distinguish.csv", [&](std::ostream& os) { os << csv.str(); });
  return cov;
}

inline void run_excursion(const GraphTopology& g, const ExperimentConfig& cfg, ArtifactWriter& out, ValueLog& log) {
  ExcursionParams params;
  params.r = static_cast<std::uint32_t>(count_param(cfg, "r"));
  params.R = static_cast<std::uint32_t>(count_param(cfg, "R"));
  params.beta = real_param(cfg, "beta");
  params.alpha_window = real_param(cfg, "window");
  const std::size_t x = count_param(cfg, "x");
  if (x >= g.vertex_count()) fail(Errc::InvalidSpec, "excursion.x is not a vertex");
  const auto v = static_cast<Vertex>(x);
  if (g.vertex_count() <= kDenseCap) params.t_mix_uniform = uniform_mixing_time(g);
  const auto geo = resolve_geometry(g, {v}, params);

  const std::uint64_t sh = derive_seed(cfg.seed, "hitting");
  const auto hp = hitting_prediction(g, v, params, count_param(cfg, "replicas"), sh, cfg.threads);
  log.add("success probability", hp.success, "excursions.hitting_prediction", sh);
  log.add("cycle", hp.cycle, "excursions.hitting_prediction", sh);
  log.add("cycle without gap", hp.cycle_no_gap, "excursions.hitting_prediction", sh);
  log.add("prediction", hp.prediction, "excursions.hitting_prediction", sh, hp.success.n, hp.prediction_stderr);
  if (hp.exact) {
    log.add("exact E_pi tau", *hp.exact, "excursions.exact_stationary_hitting", 0, 0);
    log.add("prediction ratio", *hp.ratio, "excursions.hitting_prediction", sh, hp.success.n);
  }

  const std::size_t steps = count_param(cfg, "trace_steps");
  if (steps > 0) {
    const std::uint64_t st = derive_seed(cfg.seed, "trace");
    const auto traj = trajectory(g, WalkConfig{st, 0, std::nullopt}, steps);
    const auto trace = decompose(geo, traj);
    out.write("trace.csv", [&](std::ostream& os) { write_trace_csv(os, trace); });
    log.add("trace excursions", static_cast<double>(trace.excursions.size()), "excursions.decompose", st, 1);
  }

  const std::size_t horizon = count_param(cfg, "occupation_horizon");
  if (horizon > 0) {
    const std::uint64_t so = derive_seed(cfg.seed, "occupation");
    const auto occ = occupation_ratio(g, v, params, horizon, so);
    log.add("occupation", occ.occupation, "excursions.occupation_ratio", so, occ.excursions);
    log.add("occupation ratio", occ.ratio, "excursions.occupation_ratio", so, occ.excursions);
  }

  const double eps = real_param(cfg, "partition_epsilon");
  if (eps > 0.0) {
    const std::uint64_t sp = derive_seed(cfg.seed, "partition");
    const std::size_t reps = count_param(cfg, "partition_replicas");
    const auto rep = partition_H(g, eps, params, reps, sp, cfg.threads);
    out.write("partition.json", [&](std::ostream& os) { os << to_json(rep).dump(2) << '\n'; });
    log.add("partition C", rep.C, "excursions.partition_H", sp, reps);
    log.add("partition classes", static_cast<double>(rep.classes.size()), "excursions.partition_H", sp, reps);
  }
}

inline std::optional<Estimate> run_lamplighter(const GraphTopology& g, const ExperimentConfig& cfg,
                                               ArtifactWriter& out, ValueLog& log) {
  if (cfg.params.at("mode") == "exact") {
    const auto curve = exact_tv_curve(g, count_param(cfg, "t_max"), cfg.threads);
    out.write("tv_curve.csv", [&](std::ostream& os) { write_tv_curve_csv(os, curve); });
    const auto tm = first_below(curve, 0.25);
    log.add("t_mix", tm ? static_cast<double>(*tm) : std::numeric_limits<double>::quiet_NaN(),
            "lamplighter.exact_tv_curve", 0, 0);
    log.add("tv(t_max)", curve.back(), "lamplighter.exact_tv_curve", 0, 0);
    return std::nullopt;
  }
  const auto cov = reference_cover(g, cfg, log);
  CutoffConfig cc;
  cc.t_cov_ref = cov.mean;
  cc.samples = count_param(cfg, "samples");
  cc.pairs = count_param(cfg, "pairs");
  cc.seed = derive_seed(cfg.seed, "cutoff");
  cc.threads = cfg.threads;
  auto grid = real_list(cfg.params.at("alpha"));
  const auto rep = cutoff_probe(g, grid, cc);
  out.write("cutoff.csv", [&](std::ostream& os) { write_cutoff_csv(os, rep); });
  out.write("cutoff.json", [&](std::ostream& os) { os << to_json(rep).dump(2) << '\n'; });
  for (const auto& p : rep.points) {
    const std::string a = format_short(p.alpha);
    log.add("tv_lower(" + a + ")", p.tv_lower, "lamplighter.cutoff_probe", cc.seed, cc.samples);
    log.add("tv_upper(" + a + ")", p.tv_upper, "lamplighter.cutoff_probe", cc.seed, cc.pairs);
  }
  log.add("crossing", rep.crossing_estimate ? *rep.crossing_estimate : std::numeric_limits<double>::quiet_NaN(),
          "lamplighter.cutoff_probe", cc.seed, cc.samples);
  return cov;
}

inline void run_oracle(const GraphTopology& g, const ExperimentConfig& cfg, ArtifactWriter& out, ValueLog& log) {
  const auto s = build_spectral_summary(g, real_list(cfg.params.at("eps")));
  export_spectral_summary(s, out.dir() / "oracle");
  for (const char* f : {"oracle/summary.txt", "oracle/stationary.csv", "oracle/greens.csv", "oracle/hitting.csv"})
    out.adopt(f);
  for (const auto& [e, t] : s.t_mix)
    log.add("t_mix(" + format_short(e) + ")", static_cast<double>(t), "oracle.build_spectral_summary", 0, 0);
  for (const auto& [e, t] : s.t_mix_uniform)
    log.add("t_mix_uniform(" + format_short(e) + ")", static_cast<double>(t), "oracle.build_spectral_summary", 0, 0);
  log.add("t_hit", s.t_hit, "oracle.build_spectral_summary", 0, 0);
  if (s.hitting.rows() > 1) log.add("E_0 tau(1)", s.hitting(0, 1), "oracle.build_spectral_summary", 0, 0);
}

}  // namespace detail

// Runs the experiment, writes artifacts and record.json into out_dir, and
// prints one line per estimate to `log`.
inline ExperimentRecord run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.kind = cfg.kind;
  rec.config = serialize_config(cfg);
  rec.config_digest = hex64(fnv1a(rec.config));
  rec.seed = cfg.seed;
  std::filesystem::create_directories(out_dir);
  detail::ArtifactWriter out(out_dir);
  ValueLog values;

  if (cfg.kind == "acceptance") {
    auto res = run_criterion(static_cast<int>(detail::count_param(cfg, "criterion")), cfg.seed, cfg.threads);
    rec.graph = "criterion " + std::to_string(res.id) + ": " + res.title;
    rec.estimates = std::move(res.values);
    rec.pass = res.pass;
    rec.failures = std::move(res.failures);
    rec.summary = std::move(res.summary);
  } else {
    const auto family = family_from_kv(cfg.graph);
    rec.graph = family_label(family);
    const GraphTopology g = generate(family);
    try {
      if (cfg.kind == "gen") detail::run_gen(g, out, values);
      else if (cfg.kind == "cover") rec.t_cov_ref = detail::run_cover(g, cfg, out, values);
      else if (cfg.kind == "late") rec.t_cov_ref = detail::run_late(g, cfg, out, values);
      else if (cfg.kind == "distinguish") rec.t_cov_ref = detail::run_distinguish(g, cfg, out, values);
      else if (cfg.kind == "excursion") detail::run_excursion(g, cfg, out, values);
      else if (cfg.kind == "lamplighter") rec.t_cov_ref = detail::run_lamplighter(g, cfg, out, values);
      else if (cfg.kind == "oracle") detail::run_oracle(g, cfg, out, values);
    } catch (const Error& e) {
      throw Error(e.code(), cfg.kind + " on " + rec.graph + ": " +
                                std::string(e.what()).substr(errc_name(e.code()).size() + 2));
    }
    rec.estimates = values.take();
  }
  rec.artifacts = out.take();
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  for (const auto& v : rec.estimates) {
    log << rec.kind << ": " << v.name << " = " << format_double(v.value);
    if (v.stderr_ > 0) log << " +- " << format_double(v.stderr_);
    log << "  [" << v.operation << " seed=" << v.seed << " replicas=" << v.replicas << "]\n";
  }
  std::ofstream f(out_dir / "record.json");
  if (!f) fail(Errc::Io, "cannot write " + (out_dir / "record.json").string());
  f << to_json(rec).dump(2) << '\n';
  std::ofstream c(out_dir / "config.ini");
  c << rec.config;
  return rec;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

struct ReplayOptions {
  std::optional<std::uint64_t> seed;        // perturbation: expected to drift
  std::optional<std::string> config_text;   // must equal the recorded config
  std::optional<unsigned> threads;          // does not affect results
  std::filesystem::path out_dir;
};

struct ReplayReport {
  std::size_t fields_compared = 0;
  ExperimentRecord replayed;
};

namespace detail {

// Flattened replayed fields in a fixed order; timings excluded.
inline std::vector<std::pair<std::string, std::string>> replay_fields(const ExperimentRecord& r) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("seed", std::to_string(r.seed));
  if (r.t_cov_ref) {
    out.emplace_back("t_cov_ref.mean", format_double(r.t_cov_ref->mean));
    out.emplace_back("t_cov_ref.stderr", format_double(r.t_cov_ref->stderr_));
  }
  out.emplace_back("estimates.count", std::to_string(r.estimates.size()));
  for (const auto& v : r.estimates) {
    const std::string p = "estimates[" + v.name + "].";
    out.emplace_back(p + "value", format_double(v.value));
    out.emplace_back(p + "stderr", format_double(v.stderr_));
    out.emplace_back(p + "operation", v.operation);
    out.emplace_back(p + "seed", std::to_string(v.seed));
    out.emplace_back(p + "replicas", std::to_string(v.replicas));
  }
  out.emplace_back("artifacts.count", std::to_string(r.artifacts.size()));
  for (const auto& a : r.artifacts) out.emplace_back("artifacts[" + a.path + "]", a.digest);
  if (r.pass) out.emplace_back("pass", *r.pass ? "true" : "false");
  return out;
}

}  // namespace detail

inline ReplayReport replay(const ExperimentRecord& rec, const ReplayOptions& opt, std::ostream& log) {
  if (hex64(fnv1a(rec.config)) != rec.config_digest)
    fail(Errc::ConfigInvalid, "record config does not match its digest");
  if (rec.version != kToolVersion)
    fail(Errc::ConfigInvalid, "record was produced by version " + rec.version + ", this is " + std::string(kToolVersion));
  ExperimentConfig cfg = parse_config(rec.config);
  if (opt.config_text) {
    ExperimentConfig other = parse_config(*opt.config_text);
    other.threads = cfg.threads;
    if (!(other == cfg)) {
      const auto a = serialize_config(cfg), b = serialize_config(other);
      std::istringstream sa(a), sb(b);
      std::string la, lb;
      while (std::getline(sa, la) && std::getline(sb, lb) && la == lb) {
      }
      fail(Errc::ConfigInvalid, "records are immutable: config differs at '" + lb + "' (recorded '" + la + "')");
    }
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.threads) cfg.threads = *opt.threads;

  ReplayReport report;
  report.replayed = run(cfg, opt.out_dir, log);
  const auto want = detail::replay_fields(rec);
  const auto got = detail::replay_fields(report.replayed);
  for (std::size_t i = 0; i < std::max(want.size(), got.size()); ++i) {
    if (i >= want.size() || i >= got.size() || want[i] != got[i]) {
      const std::string field = i < want.size() ? want[i].first : got[i].first;
      fail(Errc::DriftDetected, "first divergent field " + field + ": recorded " +
                                    (i < want.size() ? want[i].second : "<absent>") + ", replayed " +
                                    (i < got.size() ? got[i].second : "<absent>"));
    }
    ++report.fields_compared;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Acceptance suite
// ---------------------------------------------------------------------------

struct SuiteOptions {
  std::filesystem::path out_dir = "acceptance_records";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::vector<int> only;  // empty: every criterion
};

// Wall-clock budgets in seconds.
inline std::optional<double> criterion_budget(int id) {
  switch (id) {
    case 1: return 60.0;
    case 4: return 600.0;
    case 10: return 1800.0;
    default: return std::nullopt;
  }
}

inline std::string criterion_config(int id, std::uint64_t seed, unsigned threads) {
  ExperimentConfig cfg;
  cfg.kind = "acceptance";
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.params["criterion"] = std::to_string(id);
  return serialize_config(cfg);
}

// Prints one PASS/FAIL line per criterion; returns the number of failures.
inline int run_acceptance_suite(const SuiteOptions& opt, std::ostream& os) {
  auto selected = [&](int id) { return opt.only.empty() || std::count(opt.only.begin(), opt.only.end(), id); };
  std::ostringstream sink;
  int failures = 0;
  std::vector<std::filesystem::path> records;
  auto line = [&](bool pass, int id, const std::string& title, const std::string& detail, double secs,
                  const std::vector<std::string>& why) {
    os << (pass ? "PASS" : "FAIL") << ' ' << std::setw(2) << id << ' ' << title << ": " << detail << " ["
       << std::fixed << std::setprecision(1) << secs << " s]";
    os.unsetf(std::ios::floatfield);
    for (std::size_t i = 0; i < why.size(); ++i) os << (i ? "; " : " -- ") << why[i];
    os << std::endl;
    failures += pass ? 0 : 1;
  };
  for (int id = 1; id <= kCriterionCount; ++id) {
    if (!selected(id)) continue;
    const auto dir = opt.out_dir / ("criterion_" + std::to_string(id));
    try {
      const auto rec = run(parse_config(criterion_config(id, opt.seed, opt.threads)), dir, sink);
      records.push_back(dir / "record.json");
      std::vector<std::string> why = rec.failures;
      bool pass = rec.pass.value_or(false);
      if (const auto budget = criterion_budget(id); budget && rec.seconds > *budget) {
        pass = false;
        why.push_back("runtime over the " + detail::fmt(*budget) + " s budget");
      }
      const auto title = rec.graph.substr(rec.graph.find(": ") + 2);
      line(pass, id, title, rec.summary, rec.seconds, why);
    } catch (const std::exception& e) {
      line(false, id, "criterion", "error", 0.0, {e.what()});
    }
  }
  if (selected(11)) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> why;
    std::size_t fields = 0;
    for (const auto& path : records) {
      try {
        ReplayOptions ro;
        ro.out_dir = path.parent_path() / "replay";
        fields += replay(load_record(path), ro, sink).fields_compared;
      } catch (const std::exception& e) {
        why.push_back(path.parent_path().filename().string() + ": " + e.what());
      }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    line(why.empty(), 11, "determinism",
         std::to_string(records.size()) + " records replayed, " + std::to_string(fields) + " fields bit-exact", secs,
         why);
  }
  return failures;
}

}  // namespace rwlab
