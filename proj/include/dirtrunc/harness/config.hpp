#pragma once

#include <yaml-cpp/yaml.h>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirtrunc/aux_gibbs.hpp"
#include "dirtrunc/mh_sampler.hpp"
#include "dirtrunc/oracle.hpp"
#include "dirtrunc/truncated_model.hpp"

namespace dirtrunc::harness {

/// Invalid experiment configuration. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(format(source, line, what)), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line, const std::string& what) {
    std::string s = source;
    if (line > 0) s += ":" + std::to_string(line);
    return s + ": " + what;
  }
  std::size_t line_;
};

struct TermConfig {
  std::vector<std::size_t> truncated;
  std::vector<std::int64_t> counts;
  bool operator==(const TermConfig&) const = default;
};

struct MhBlock {
  double target_acceptance = 0.24;
  std::size_t adapt_steps = 20000;
  double initial_beta = 100.0;
  /// When set, tuning is skipped and every chain uses this value.
  std::optional<double> fixed_beta;
  bool operator==(const MhBlock&) const = default;
};

enum class ConvergenceReference { Pooled, Oracle };

struct DiagnosticsBlock {
  std::size_t checkpoints = 25;
  /// Empty means 0..min(50, T/2 - 1).
  std::vector<std::size_t> lags;
  /// Empty means every component.
  std::vector<std::size_t> components;
  ConvergenceReference reference = ConvergenceReference::Pooled;
  bool operator==(const DiagnosticsBlock&) const = default;
};

struct OracleBlock {
  bool enabled = false;
  std::size_t resolution = 128;
  bool operator==(const OracleBlock&) const = default;
};

struct ExperimentConfig {
  std::size_t n = 0;
  std::vector<double> alpha;
  std::vector<TermConfig> terms;
  /// "aux", "mh" or "both".
  std::string sampler = "both";
  std::size_t chains = 10;
  std::size_t steps = 5000;
  std::uint64_t seed = 0;
  /// 0 means one worker per available core.
  std::size_t threads = 0;
  AuxMode aux_mode = AuxMode::Aggregated;
  MhBlock mh;
  DiagnosticsBlock diagnostics;
  OracleBlock oracle;

  bool operator==(const ExperimentConfig&) const = default;

  DirichletParams alpha_params() const { return DirichletParams(alpha); }

  ObservationModel model() const {
    std::vector<TruncatedCounts> out;
    for (const auto& t : terms) out.emplace_back(t.truncated, t.counts);
    return ObservationModel(std::move(out));
  }

  std::vector<std::string> samplers() const {
    if (sampler == "both") return {"aux", "mh"};
    return {sampler};
  }

  std::vector<std::size_t> effective_lags() const {
    if (!diagnostics.lags.empty()) return diagnostics.lags;
    const std::size_t retained = steps - steps / 2;
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k <= 50 && k < retained; ++k) out.push_back(k);
    return out;
  }

  std::vector<std::size_t> effective_components() const {
    if (!diagnostics.components.empty()) return diagnostics.components;
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }

  /// Cross-field checks; throws ConfigError without a line number.
  void validate(const std::string& source = "<config>") const {
    auto fail = [&](const std::string& what) { throw ConfigError(source, 0, what); };
    if (n < 2) fail("n must be >= 2");
    if (alpha.size() != n) fail("alpha has " + std::to_string(alpha.size()) + " entries, expected n");
    if (terms.empty()) fail("terms: at least one term is required");
    if (sampler != "aux" && sampler != "mh" && sampler != "both")
      fail("sampler must be one of aux, mh, both");
    if (chains < 1) fail("chains must be >= 1");
    if (steps < 2) fail("steps must be >= 2");
    if (diagnostics.checkpoints < 1 || diagnostics.checkpoints > steps)
      fail("diagnostics.checkpoints must be in [1, steps]");
    const std::size_t retained = steps - steps / 2;
    for (auto l : diagnostics.lags)
      if (l >= retained) fail("diagnostics.lags: lag " + std::to_string(l) + " exceeds retained samples");
    for (auto i : diagnostics.components)
      if (i >= n) fail("diagnostics.components: index out of range");
    if (oracle.enabled && n > kOracleMaxDimension) fail("oracle: grid integration needs n <= 4");
    if (oracle.enabled && oracle.resolution < kOracleMinResolution) fail("oracle.resolution must be >= 8");
    if (diagnostics.reference == ConvergenceReference::Oracle && !oracle.enabled)
      fail("diagnostics.reference: oracle requires oracle.enabled");
    try {
      (void)alpha_params();
      (void)model();
      MhConfig probe;
      probe.beta = mh.fixed_beta.value_or(mh.initial_beta);
      probe.target_acceptance = mh.target_acceptance;
      probe.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
};

namespace detail {

inline std::size_t line_of(const YAML::Node& node) {
  return node.Mark().line >= 0 ? static_cast<std::size_t>(node.Mark().line) + 1 : 0;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    throw ConfigError(source_, line_of(at), what);
  }

  void require_map(const YAML::Node& node, const std::string& name) const {
    if (!node.IsMap()) fail(node, name + " must be a mapping");
  }

  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                  const std::string& where) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key))
        fail(kv.first, "unknown key '" + key + "'" + (where.empty() ? "" : " in " + where));
    }
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& name) const {
    if (!node.IsScalar()) fail(node, name + " must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, name + ": cannot parse '" + node.Scalar() + "'");
    }
  }

  std::size_t count(const YAML::Node& node, const std::string& name) const {
    const auto v = scalar<long long>(node, name);
    if (v < 0) fail(node, name + " must be non-negative");
    return static_cast<std::size_t>(v);
  }

  template <class T>
  std::vector<T> sequence(const YAML::Node& node, const std::string& name) const {
    if (!node.IsSequence()) fail(node, name + " must be a list");
    std::vector<T> out;
    for (const auto& item : node) out.push_back(scalar<T>(item, name));
    return out;
  }

  std::vector<std::size_t> indices(const YAML::Node& node, const std::string& name) const {
    if (!node.IsSequence()) fail(node, name + " must be a list");
    std::vector<std::size_t> out;
    for (const auto& item : node) out.push_back(count(item, name));
    return out;
  }

 private:
  std::string source_;
};

}  // namespace detail

/// Parses the YAML experiment schema. Unknown keys and malformed values
/// are reported with their line.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  YAML::Node loaded;
  try {
    loaded = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, static_cast<std::size_t>(e.mark.line) + 1, e.msg);
  }
  const YAML::Node root = loaded;
  detail::Reader r(source);
  if (!root.IsMap()) throw ConfigError(source, 0, "top level must be a mapping");
  r.check_keys(root,
               {"n", "alpha", "terms", "sampler", "chains", "steps", "seed", "threads", "aux_mode",
                "mh", "diagnostics", "oracle"},
               "");

  ExperimentConfig cfg;
  for (const char* key : {"n", "alpha", "terms", "seed"})
    if (!root[key]) throw ConfigError(source, 0, std::string("missing required key '") + key + "'");

  cfg.n = r.count(root["n"], "n");
  const auto alpha = root["alpha"];
  if (alpha.IsScalar()) {
    cfg.alpha.assign(cfg.n, r.scalar<double>(alpha, "alpha"));
  } else {
    cfg.alpha = r.sequence<double>(alpha, "alpha");
    if (cfg.alpha.size() != cfg.n)
      r.fail(alpha, "alpha has " + std::to_string(cfg.alpha.size()) + " entries, expected n=" +
                        std::to_string(cfg.n));
  }
  for (double a : cfg.alpha)
    if (!(a > 0.0) || !std::isfinite(a)) r.fail(alpha, "alpha entries must be positive and finite");

  const auto terms = root["terms"];
  if (!terms.IsSequence() || terms.size() == 0) r.fail(terms, "terms must be a non-empty list");
  for (const auto& t : terms) {
    r.require_map(t, "term");
    r.check_keys(t, {"truncated", "counts"}, "term");
    if (!t["counts"]) r.fail(t, "term: missing 'counts'");
    TermConfig tc;
    if (t["truncated"]) tc.truncated = r.indices(t["truncated"], "truncated");
    const auto counts = r.sequence<long long>(t["counts"], "counts");
    if (counts.size() != cfg.n) r.fail(t["counts"], "counts must have n entries");
    for (auto c : counts) {
      if (c < 0) r.fail(t["counts"], "counts must be non-negative");
      tc.counts.push_back(static_cast<std::int64_t>(c));
    }
    try {
      (void)TruncatedCounts(tc.truncated, tc.counts);
    } catch (const std::invalid_argument& e) {
      r.fail(t, e.what());
    }
    cfg.terms.push_back(std::move(tc));
  }

  if (root["sampler"]) {
    cfg.sampler = r.scalar<std::string>(root["sampler"], "sampler");
    if (cfg.sampler != "aux" && cfg.sampler != "mh" && cfg.sampler != "both")
      r.fail(root["sampler"], "sampler must be one of aux, mh, both");
  }
  if (root["chains"]) cfg.chains = r.count(root["chains"], "chains");
  if (root["steps"]) cfg.steps = r.count(root["steps"], "steps");
  cfg.seed = r.scalar<std::uint64_t>(root["seed"], "seed");
  if (root["threads"]) cfg.threads = r.count(root["threads"], "threads");
  if (root["aux_mode"]) {
    const auto m = r.scalar<std::string>(root["aux_mode"], "aux_mode");
    if (m == "aggregated")
      cfg.aux_mode = AuxMode::Aggregated;
    else if (m == "per_observation")
      cfg.aux_mode = AuxMode::PerObservation;
    else
      r.fail(root["aux_mode"], "aux_mode must be aggregated or per_observation");
  }

  if (const auto mh = root["mh"]) {
    r.require_map(mh, "mh");
    r.check_keys(mh, {"target_acceptance", "adapt_steps", "initial_beta", "fixed_beta"}, "mh");
    if (mh["target_acceptance"])
      cfg.mh.target_acceptance = r.scalar<double>(mh["target_acceptance"], "mh.target_acceptance");
    if (mh["adapt_steps"]) cfg.mh.adapt_steps = r.count(mh["adapt_steps"], "mh.adapt_steps");
    if (mh["initial_beta"]) cfg.mh.initial_beta = r.scalar<double>(mh["initial_beta"], "mh.initial_beta");
    if (mh["fixed_beta"]) cfg.mh.fixed_beta = r.scalar<double>(mh["fixed_beta"], "mh.fixed_beta");
    if (!cfg.mh.fixed_beta && cfg.mh.adapt_steps == 0)
      r.fail(mh, "mh: adapt_steps must be > 0 unless fixed_beta is given");
  }

  if (const auto d = root["diagnostics"]) {
    r.require_map(d, "diagnostics");
    r.check_keys(d, {"checkpoints", "lags", "components", "reference"}, "diagnostics");
    if (d["checkpoints"]) cfg.diagnostics.checkpoints = r.count(d["checkpoints"], "diagnostics.checkpoints");
    if (d["lags"]) cfg.diagnostics.lags = r.indices(d["lags"], "diagnostics.lags");
    if (d["components"]) cfg.diagnostics.components = r.indices(d["components"], "diagnostics.components");
    if (d["reference"]) {
      const auto ref = r.scalar<std::string>(d["reference"], "diagnostics.reference");
      if (ref == "pooled")
        cfg.diagnostics.reference = ConvergenceReference::Pooled;
      else if (ref == "oracle")
        cfg.diagnostics.reference = ConvergenceReference::Oracle;
      else
        r.fail(d["reference"], "diagnostics.reference must be pooled or oracle");
    }
  }

  if (const auto o = root["oracle"]) {
    r.require_map(o, "oracle");
    r.check_keys(o, {"enabled", "resolution"}, "oracle");
    if (o["enabled"]) cfg.oracle.enabled = r.scalar<bool>(o["enabled"], "oracle.enabled");
    if (o["resolution"]) cfg.oracle.resolution = r.count(o["resolution"], "oracle.resolution");
  }

  cfg.validate(source);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

/// Canonical YAML for `cfg`; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "n" << YAML::Value << cfg.n;
  out << YAML::Key << "alpha" << YAML::Value << YAML::Flow << cfg.alpha;
  out << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : cfg.terms) {
    out << YAML::BeginMap;
    out << YAML::Key << "truncated" << YAML::Value << YAML::Flow << t.truncated;
    out << YAML::Key << "counts" << YAML::Value << YAML::Flow << t.counts;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "sampler" << YAML::Value << cfg.sampler;
  out << YAML::Key << "chains" << YAML::Value << cfg.chains;
  out << YAML::Key << "steps" << YAML::Value << cfg.steps;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "threads" << YAML::Value << cfg.threads;
  out << YAML::Key << "aux_mode" << YAML::Value
      << (cfg.aux_mode == AuxMode::Aggregated ? "aggregated" : "per_observation");

  out << YAML::Key << "mh" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "target_acceptance" << YAML::Value << cfg.mh.target_acceptance;
  out << YAML::Key << "adapt_steps" << YAML::Value << cfg.mh.adapt_steps;
  out << YAML::Key << "initial_beta" << YAML::Value << cfg.mh.initial_beta;
  if (cfg.mh.fixed_beta) out << YAML::Key << "fixed_beta" << YAML::Value << *cfg.mh.fixed_beta;
  out << YAML::EndMap;

  out << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "checkpoints" << YAML::Value << cfg.diagnostics.checkpoints;
  if (!cfg.diagnostics.lags.empty())
    out << YAML::Key << "lags" << YAML::Value << YAML::Flow << cfg.diagnostics.lags;
  if (!cfg.diagnostics.components.empty())
    out << YAML::Key << "components" << YAML::Value << YAML::Flow << cfg.diagnostics.components;
  out << YAML::Key << "reference" << YAML::Value
      << (cfg.diagnostics.reference == ConvergenceReference::Pooled ? "pooled" : "oracle");
  out << YAML::EndMap;

  out << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << cfg.oracle.enabled;
  out << YAML::Key << "resolution" << YAML::Value << cfg.oracle.resolution;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace dirtrunc::harness
