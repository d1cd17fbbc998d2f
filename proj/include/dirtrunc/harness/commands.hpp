#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dirtrunc/diagnostics.hpp"
#include "dirtrunc/harness/config.hpp"
#include "dirtrunc/harness/runner.hpp"
#include "dirtrunc/harness/trace_io.hpp"
#include "dirtrunc/oracle.hpp"

namespace dirtrunc::harness {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kSoftwareVersion = "0.1.0";
inline constexpr const char* kTimingMethod = "per-sample elapsed seconds from chain start";

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_json(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir.string() +
                             (ec ? ": " + ec.message() : ""));
  return dir;
}

inline Json schema_header(const std::string& metric, const std::string& sampler) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["metric"] = metric;
  if (!sampler.empty()) j["sampler"] = sampler;
  return j;
}

inline Json band_json(const std::vector<BandSummary>& bands) {
  Json j;
  j["mean"] = Json::array();
  j["p10"] = Json::array();
  j["p90"] = Json::array();
  for (const auto& b : bands) {
    j["mean"].push_back(b.mean);
    j["p10"].push_back(b.p10);
    j["p90"].push_back(b.p90);
  }
  return j;
}

// ---------------------------------------------------------------- sample

struct SampleOutcome {
  std::map<std::string, ChainEnsemble> ensembles;
  std::optional<MhTuningSummary> tuning;
  fs::path manifest;
};

/// Runs every configured sampler and writes traces, timing sidecars, the
/// config echo and manifest.json under `out`.
inline SampleOutcome cmd_sample(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  const std::string started = utc_timestamp();
  prepare_dir(out);
  write_text_file(out / "config.yaml", emit_config(cfg));

  SampleOutcome result;
  Json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["software_version"] = kSoftwareVersion;
  manifest["config_file"] = "config.yaml";
  manifest["config"] = emit_config(cfg);
  manifest["seed"] = cfg.seed;
  manifest["timing_method"] = kTimingMethod;
  manifest["started_at"] = started;
  std::vector<fs::path> referenced{out / "config.yaml"};

  for (const auto& sampler : cfg.samplers()) {
    std::optional<double> beta;
    if (sampler == "mh") {
      result.tuning = tune_for_experiment(cfg);
      beta = result.tuning->beta;
    }
    ChainEnsemble ensemble = run_chains(cfg, sampler, beta);
    const fs::path dir = prepare_dir(out / sampler);
    Json files;
    files["traces"] = Json::array();
    files["timing"] = Json::array();
    for (std::size_t j = 0; j < ensemble.num_chains(); ++j) {
      write_text_file(dir / chain_file_name(j), trace_csv(ensemble[j]));
      write_text_file(dir / timing_file_name(j), timing_csv(ensemble[j]));
      files["traces"].push_back((fs::path(sampler) / chain_file_name(j)).generic_string());
      files["timing"].push_back((fs::path(sampler) / timing_file_name(j)).generic_string());
      referenced.push_back(dir / chain_file_name(j));
      referenced.push_back(dir / timing_file_name(j));
    }
    if (sampler == "mh") {
      Json t = schema_header("mh_tuning", "mh");
      t["beta"] = result.tuning->beta;
      t["tuned"] = result.tuning->tuned;
      t["tuning_acceptance"] = result.tuning->final_acceptance;
      t["in_band"] = result.tuning->in_band;
      t["batches"] = result.tuning->batches;
      t["target_acceptance"] = cfg.mh.target_acceptance;
      t["chain_acceptance"] = Json::array();
      for (const auto& c : ensemble.chains()) t["chain_acceptance"].push_back(c.metadata().info.at("acceptance_rate"));
      write_json(dir / "tuning.json", t);
      files["tuning"] = (fs::path(sampler) / "tuning.json").generic_string();
      referenced.push_back(dir / "tuning.json");
    }
    files["chain_seeds"] = Json::array();
    for (const auto& c : ensemble.chains()) files["chain_seeds"].push_back(c.metadata().seed);
    manifest["samplers"][sampler] = files;
    result.ensembles.emplace(sampler, std::move(ensemble));
  }

  manifest["finished_at"] = utc_timestamp();
  for (const auto& p : referenced)
    if (!fs::exists(p)) throw std::runtime_error("manifest: missing output " + p.string());
  result.manifest = out / "manifest.json";
  write_json(result.manifest, manifest);
  return result;
}

// ---------------------------------------------------------------- oracle

/// Grid moments and a density dump for visualizing the 2-simplex.
inline GridPosterior cmd_oracle(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  if (cfg.n > kOracleMaxDimension)
    throw std::invalid_argument("oracle: grid integration supports n <= 4, config has n=" +
                                std::to_string(cfg.n));
  const auto grid = grid_posterior(cfg.alpha_params(), cfg.model(), cfg.oracle.resolution);
  const fs::path dir = prepare_dir(out / "oracle");
  Json j = schema_header("oracle", "");
  j["n"] = cfg.n;
  j["resolution"] = cfg.oracle.resolution;
  j["points"] = grid.grid.points.size();
  j["alpha"] = cfg.alpha;
  j["mean"] = grid.mean;
  j["variance"] = grid.variance;
  j["log_normalizer"] = grid.log_normalizer;
  j["density_file"] = "density.csv";
  write_json(dir / "oracle.json", j);

  std::string csv;
  for (std::size_t i = 0; i < cfg.n; ++i) csv += "pi_" + std::to_string(i) + ",";
  csv += "density,mass\n";
  const double log_w = std::log(grid.grid.weight);
  for (std::size_t k = 0; k < grid.grid.points.size(); ++k) {
    for (double v : grid.grid.points[k].coords()) csv += format_double(v) + ",";
    const double log_d = grid.log_density[k] - grid.log_normalizer;
    csv += format_double(std::exp(log_d)) + "," + format_double(std::exp(log_w + log_d)) + "\n";
  }
  write_text_file(dir / "density.csv", csv);
  return grid;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseSelection {
  bool autocorr = true;
  bool mpsrf = true;
  bool convergence = true;

  static DiagnoseSelection parse(const std::vector<std::string>& names) {
    if (names.empty()) return {};
    DiagnoseSelection s{false, false, false};
    for (const auto& n : names) {
      if (n == "autocorr")
        s.autocorr = true;
      else if (n == "mpsrf")
        s.mpsrf = true;
      else if (n == "convergence")
        s.convergence = true;
      else
        throw std::invalid_argument("diagnose: unknown metric '" + n + "'");
    }
    return s;
  }
};

inline Json autocorr_json(const ExperimentConfig& cfg, const std::string& sampler, const ChainEnsemble& e) {
  const auto lags = cfg.effective_lags();
  const auto model = cfg.model();
  const std::size_t t = e.length();
  Json j = schema_header("autocorr", sampler);
  j["chains"] = e.num_chains();
  j["steps"] = t;
  j["retained"] = t - t / 2;
  j["lags"] = lags;
  j["components"] = Json::array();
  for (std::size_t i : cfg.effective_components()) {
    bool truncated = false;
    for (const auto& term : model.terms()) truncated = truncated || term.trunc().contains(i);
    std::vector<std::vector<double>> per_chain;
    for (const auto& c : e.chains()) per_chain.push_back(autocorrelation(c, i, lags, t));
    std::vector<BandSummary> bands;
    for (std::size_t k = 0; k < lags.size(); ++k) {
      std::vector<double> vals;
      for (const auto& row : per_chain) vals.push_back(row[k]);
      bands.push_back(summarize_across_chains(vals));
    }
    Json c;
    c["component"] = i;
    c["truncated"] = truncated;
    const Json band = band_json(bands);
    for (const auto& [k, v] : band.items()) c[k] = v;
    c["per_chain"] = per_chain;
    j["components"].push_back(c);
  }
  return j;
}

struct MpsrfCurve {
  std::vector<std::size_t> checkpoints;
  std::vector<std::optional<double>> r_hat;
  std::vector<bool> jittered;
  std::vector<double> median_seconds;
};

inline MpsrfCurve mpsrf_curve(const ChainEnsemble& e, std::size_t checkpoint_count) {
  if (e.num_chains() < 2) throw std::invalid_argument("mpsrf: need at least 2 chains");
  MpsrfCurve out;
  out.checkpoints = equally_spaced_checkpoints(e.length(), checkpoint_count);
  const auto basis = projection_basis(e.dimension());
  for (std::size_t t : out.checkpoints) {
    std::optional<double> r;
    bool jit = false;
    if (t - t / 2 >= 2) {
      try {
        const auto res = mpsrf(e, t, basis);
        r = res.r_hat;
        jit = res.jittered;
      } catch (const std::domain_error&) {
        // Singular within-chain covariance: reported as null.
      }
    }
    out.r_hat.push_back(r);
    out.jittered.push_back(jit);
    std::vector<double> secs;
    for (const auto& c : e.chains()) secs.push_back(c.seconds()[t - 1]);
    out.median_seconds.push_back(percentile(secs, 50.0));
  }
  return out;
}

inline Json r_hat_json(const MpsrfCurve& curve) {
  Json arr = Json::array();
  for (const auto& r : curve.r_hat) arr.push_back(r ? Json(*r) : Json(nullptr));
  return arr;
}

struct ConvergenceReferenceValues {
  std::string kind;
  std::vector<double> mean;
  std::vector<double> variance;
};

inline ConvergenceReferenceValues convergence_reference(const ExperimentConfig& cfg,
                                                        const std::map<std::string, ChainEnsemble>& all) {
  ConvergenceReferenceValues ref;
  if (cfg.diagnostics.reference == ConvergenceReference::Oracle) {
    const auto grid = grid_posterior(cfg.alpha_params(), cfg.model(), cfg.oracle.resolution);
    return {"oracle", grid.mean, grid.variance};
  }
  std::vector<const ChainTrace*> ptrs;
  for (const auto& [name, e] : all)
    for (const auto& c : e.chains()) ptrs.push_back(&c);
  auto [mean, var] = pooled_moments(ptrs, cfg.steps);
  return {"pooled", std::move(mean), std::move(var)};
}

inline Json convergence_json(const ExperimentConfig& cfg, const std::string& sampler, const ChainEnsemble& e,
                             const ConvergenceReferenceValues& ref) {
  const auto cps = equally_spaced_checkpoints(e.length(), cfg.diagnostics.checkpoints);
  const auto r = statistic_convergence(e, ref.mean, ref.variance, cps);
  Json j = schema_header("convergence", sampler);
  j["chains"] = e.num_chains();
  j["reference"] = {{"kind", ref.kind}, {"mean", ref.mean}, {"variance", ref.variance}};
  j["checkpoints"] = cps;
  j["mean_error"] = band_json(r.mean_band);
  j["variance_error"] = band_json(r.var_band);
  j["mean_error"]["per_chain"] = r.mean_error;
  j["variance_error"]["per_chain"] = r.var_error;
  return j;
}

/// Reads the traces under `out` and writes one JSON file per metric and
/// sampler into out/diagnostics. Files other than *_elapsed.json depend
/// only on the trace values.
inline std::vector<fs::path> cmd_diagnose(const ExperimentConfig& cfg, const fs::path& out,
                                          DiagnoseSelection which = {}) {
  cfg.validate();
  std::map<std::string, ChainEnsemble> all;
  for (const auto& s : cfg.samplers()) {
    auto e = read_trace_dir(out / s);
    if (e.dimension() != cfg.n || e.length() != cfg.steps)
      throw std::runtime_error("diagnose: traces in " + (out / s).string() + " do not match the config shape");
    all.emplace(s, std::move(e));
  }
  if (which.mpsrf)
    for (const auto& [s, e] : all)
      if (e.num_chains() < 2) throw std::invalid_argument("diagnose: MPSRF needs at least 2 chains");

  const fs::path dir = prepare_dir(out / "diagnostics");
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const Json& j) {
    write_json(dir / name, j);
    written.push_back(dir / name);
  };

  std::optional<ConvergenceReferenceValues> ref;
  if (which.convergence) ref = convergence_reference(cfg, all);

  for (const auto& [s, e] : all) {
    if (which.autocorr) emit("autocorr_" + s + ".json", autocorr_json(cfg, s, e));
    if (which.mpsrf) {
      const auto curve = mpsrf_curve(e, cfg.diagnostics.checkpoints);
      Json j = schema_header("mpsrf", s);
      j["chains"] = e.num_chains();
      j["checkpoints"] = curve.checkpoints;
      j["r_hat"] = r_hat_json(curve);
      j["jittered"] = curve.jittered;
      emit("mpsrf_" + s + ".json", j);
      Json t = schema_header("mpsrf_elapsed", s);
      t["timing_method"] = kTimingMethod;
      t["checkpoints"] = curve.checkpoints;
      t["median_elapsed_seconds"] = curve.median_seconds;
      t["r_hat"] = r_hat_json(curve);
      emit("mpsrf_" + s + "_elapsed.json", t);
    }
    if (which.convergence) emit("convergence_" + s + ".json", convergence_json(cfg, s, e, *ref));
  }
  return written;
}

// ---------------------------------------------------------------- experiment

/// sample, then oracle when enabled, then every diagnostic that applies.
inline void cmd_experiment(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log = std::cerr) {
  log << "sampling " << cfg.chains << " chains x " << cfg.steps << " steps (" << cfg.sampler << ")\n";
  const auto sample = cmd_sample(cfg, out);
  if (sample.tuning && sample.tuning->tuned)
    log << "mh: tuned beta " << sample.tuning->beta << ", acceptance " << sample.tuning->final_acceptance
        << "\n";
  if (cfg.oracle.enabled) {
    const auto g = cmd_oracle(cfg, out);
    log << "oracle: " << g.grid.points.size() << " grid points\n";
  }
  DiagnoseSelection which;
  if (cfg.chains < 2) {
    which.mpsrf = false;
    log << "diagnose: skipping MPSRF with a single chain\n";
  }
  const auto files = cmd_diagnose(cfg, out, which);
  log << "diagnose: wrote " << files.size() << " files to " << (out / "diagnostics").string() << "\n";
}

}  // namespace dirtrunc::harness
