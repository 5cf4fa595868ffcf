#include "gflow/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "gflow/analysis.hpp"
#include "gflow/io.hpp"

namespace gflow {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown field '" + key + "' in " + where);
  }
}

template <class T>
T get_field(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " is missing or has the wrong type");
  }
}

ClassLabel parse_label(const json& v) {
  if (v.is_number_integer()) {
    try {
      return label_from_int(v.get<int>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("guidance.target: ") + e.what());
    }
  }
  if (v == "positive") return ClassLabel::Positive;
  if (v == "negative") return ClassLabel::Negative;
  throw ConfigError("guidance.target must be 1, -1, \"positive\" or \"negative\"");
}

}  // namespace

IntegratorConfig integrator_from_json(const json& doc) {
  check_keys(doc,
             {"preset", "method", "rel_tol", "abs_tol", "max_steps", "t_end_margin",
              "record_every", "horizon", "validate_endpoint"},
             "integrator");
  IntegratorConfig cfg;
  if (doc.contains("preset")) {
    const auto preset = get_field<std::string>(doc, "preset", "integrator");
    if (preset != "paper-6.1") throw ConfigError("unknown integrator preset '" + preset + "'");
    cfg = IntegratorConfig::fixed_step_preset();
  }
  if (doc.contains("method")) {
    const auto m = get_field<std::string>(doc, "method", "integrator");
    if (m == "dormand_prince") cfg.method = IntegratorMethod::DormandPrince;
    else if (m == "rk4_fixed") cfg.method = IntegratorMethod::Rk4Fixed;
    else throw ConfigError("integrator.method must be dormand_prince or rk4_fixed");
  }
  if (doc.contains("rel_tol")) cfg.rel_tol = get_field<double>(doc, "rel_tol", "integrator");
  if (doc.contains("abs_tol")) cfg.abs_tol = get_field<double>(doc, "abs_tol", "integrator");
  if (doc.contains("max_steps")) cfg.max_steps = get_field<std::size_t>(doc, "max_steps", "integrator");
  if (doc.contains("t_end_margin"))
    cfg.t_end_margin = get_field<double>(doc, "t_end_margin", "integrator");
  if (doc.contains("record_every"))
    cfg.record_every = get_field<std::size_t>(doc, "record_every", "integrator");
  if (doc.contains("horizon")) cfg.horizon = get_field<double>(doc, "horizon", "integrator");
  if (doc.contains("validate_endpoint"))
    cfg.validate_endpoint = get_field<bool>(doc, "validate_endpoint", "integrator");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

json to_json(const IntegratorConfig& cfg) {
  return {{"method", cfg.method == IntegratorMethod::DormandPrince ? "dormand_prince" : "rk4_fixed"},
          {"rel_tol", cfg.rel_tol},
          {"abs_tol", cfg.abs_tol},
          {"max_steps", cfg.max_steps},
          {"t_end_margin", cfg.t_end_margin},
          {"record_every", cfg.record_every},
          {"horizon", cfg.horizon},
          {"validate_endpoint", cfg.validate_endpoint}};
}

ScoreSourceConfig score_source_from_json(const json& doc) {
  ScoreSourceConfig src;
  if (doc.is_string()) {
    if (doc == "exact") return src;
    throw ConfigError("score_source given as a string must be \"exact\"");
  }
  check_keys(doc, {"kind", "samples", "seed", "R"}, "score_source");
  const auto kind = get_field<std::string>(doc, "kind", "score_source");
  if (kind == "exact") {
    check_keys(doc, {"kind"}, "score_source (exact)");
  } else if (kind == "monte_carlo") {
    check_keys(doc, {"kind", "samples", "seed"}, "score_source (monte_carlo)");
    src.kind = ScoreSourceKind::MonteCarlo;
    if (doc.contains("samples")) src.mc_samples = get_field<std::size_t>(doc, "samples", "score_source");
    if (doc.contains("seed")) src.mc_seed = get_field<std::uint64_t>(doc, "seed", "score_source");
    if (src.mc_samples < 100) throw ConfigError("score_source.samples must be >= 100");
  } else if (kind == "corrupted") {
    check_keys(doc, {"kind", "R"}, "score_source (corrupted)");
    src.kind = ScoreSourceKind::Corrupted;
    src.corruption_R = get_field<double>(doc, "R", "score_source");
    if (!(src.corruption_R > 0.0) || !std::isfinite(src.corruption_R))
      throw ConfigError("score_source.R must be a positive finite number");
  } else {
    throw ConfigError("score_source.kind must be exact, monte_carlo or corrupted");
  }
  return src;
}

json to_json(const ScoreSourceConfig& src) {
  json j = {{"kind", to_string(src.kind)}};
  if (src.kind == ScoreSourceKind::MonteCarlo) {
    j["samples"] = src.mc_samples;
    j["seed"] = src.mc_seed;
  }
  if (src.kind == ScoreSourceKind::Corrupted) j["R"] = src.corruption_R;
  return j;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, {"spec", "guidance", "score_source", "integrator", "n", "seed", "outputs"}, "config");
  ExperimentConfig cfg;
  cfg.hash = git_blob_hash(text);

  if (!doc.contains("spec")) throw ConfigError("config.spec is required");
  try {
    cfg.spec = mixture_from_json(doc["spec"]);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("spec: ") + e.what());
  }

  if (!doc.contains("guidance")) throw ConfigError("config.guidance is required");
  const auto& g = doc["guidance"];
  check_keys(g, {"w", "target"}, "guidance");
  if (!g.contains("w")) throw ConfigError("guidance.w is required");
  if (g["w"].is_number()) {
    cfg.ws = {g["w"].get<double>()};
  } else if (g["w"].is_array() && !g["w"].empty()) {
    for (const auto& v : g["w"]) {
      if (!v.is_number()) throw ConfigError("guidance.w list must contain numbers");
      cfg.ws.push_back(v.get<double>());
    }
  } else {
    throw ConfigError("guidance.w must be a number or a nonempty list of numbers");
  }
  for (double w : cfg.ws)
    if (!(w >= -1.0) || !std::isfinite(w)) throw ConfigError("guidance.w must be finite and >= -1");
  if (std::set<double>(cfg.ws.begin(), cfg.ws.end()).size() != cfg.ws.size())
    throw ConfigError("guidance.w list has duplicates");
  if (g.contains("target")) cfg.target = parse_label(g["target"]);

  if (doc.contains("score_source")) cfg.source = score_source_from_json(doc["score_source"]);
  if (doc.contains("integrator")) cfg.integrator = integrator_from_json(doc["integrator"]);

  if (doc.contains("n")) cfg.n = get_field<std::size_t>(doc, "n", "config");
  if (cfg.n < 1) throw ConfigError("config.n must be >= 1");
  if (doc.contains("seed")) cfg.seed = get_field<std::uint64_t>(doc, "seed", "config");

  if (doc.contains("outputs")) {
    const auto& o = doc["outputs"];
    check_keys(o, {"directory", "trajectories", "diagnostics"}, "outputs");
    if (o.contains("directory"))
      cfg.outputs.directory = get_field<std::string>(o, "directory", "outputs");
    if (o.contains("trajectories"))
      cfg.outputs.trajectories = get_field<bool>(o, "trajectories", "outputs");
    if (o.contains("diagnostics"))
      cfg.outputs.diagnostics = get_field<bool>(o, "diagnostics", "outputs");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment_config(text);
}

// ---------------------------------------------------------------------------
// run

RunOutcome run_experiment(const ExperimentConfig& cfg, int workers) {
  RunOutcome outcome;
  const auto& dir = cfg.outputs.directory;
  std::filesystem::create_directories(dir);

  std::vector<SweepEntry> sweep;
  std::vector<Summary> summaries;
  const bool compact = cfg.spec.is_compact();
  const auto box = support_box(cfg.spec, cfg.target);
  const double z = sign(cfg.target);

  for (double w : cfg.ws) {
    GuidanceConfig g{w, cfg.target, cfg.source};
    const GuidedFlow flow(cfg.spec, g);
    BatchOptions opt;
    opt.retain_trajectories = cfg.outputs.trajectories;
    opt.diagnostics = cfg.outputs.diagnostics;
    opt.workers = workers;
    const auto batch = sample_batch(flow, cfg.integrator, cfg.n, cfg.seed, opt);
    outcome.failures += batch.failures();

    const auto tag = format_w(w);
    const auto batch_path = dir / ("batch_w" + tag + ".csv");
    write_text_file(batch_path, batch_csv(batch, cfg.hash));
    outcome.files.push_back(batch_path);

    if (cfg.outputs.trajectories) {
      const auto tdir = dir / ("trajectories_w" + tag);
      std::filesystem::create_directories(tdir);
      for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
        const auto p = tdir / ("traj_" + std::to_string(i) + ".csv");
        write_text_file(p, trajectory_csv(batch.trajectories[i], cfg.hash, w, i));
        outcome.files.push_back(p);
      }
    }

    SweepEntry entry{w, batch.finals(), {}};
    for (const auto& o : batch.outcomes) {
      if (o.status != TrajectoryStatus::Ok) continue;
      // Pullback along the target direction; the running maximum is only
      // tracked upward, so the negative target uses the final state alone.
      const double top = z > 0 ? o.max_first : o.final_state[0];
      const double depth = std::max(0.0, top - o.final_state[0]);
      entry.profiles.push_back(
          {top, NAN, top > box[0].hi, depth, depth <= kMonotoneTolerance, depth});
    }

    json failures = json::array();
    for (const auto& o : batch.outcomes)
      if (o.status != TrajectoryStatus::Ok)
        failures.push_back({{"seed_index", o.seed_index}, {"status", to_string(o.status)},
                            {"message", o.message}});
    json meta = {{"config_hash", cfg.hash},
                 {"spec", to_json(cfg.spec)},
                 {"w", w},
                 {"target", sign(cfg.target)},
                 {"score_source", to_json(cfg.source)},
                 {"integrator", to_json(cfg.integrator)},
                 {"n", cfg.n},
                 {"seed", cfg.seed},
                 {"failures", batch.failures()},
                 {"failure_fraction", batch.failure_fraction()},
                 {"failure_reasons", failures}};
    if (batch.failures() < batch.outcomes.size()) {
      const auto sum = summarize(batch);
      summaries.push_back(sum);
      meta["summary"] = {{"mean", sum.mean}, {"std", sum.std}, {"p5", sum.quantile(0.05)},
                         {"p50", sum.quantile(0.5)}, {"p95", sum.quantile(0.95)}};
    } else {
      summaries.push_back(Summary{0, NAN, NAN, {NAN, NAN, NAN, NAN, NAN, NAN, NAN}, {}});
    }
    const auto meta_path = dir / ("meta_w" + tag + ".json");
    write_text_file(meta_path, meta.dump(2) + "\n");
    outcome.files.push_back(meta_path);
    sweep.push_back(std::move(entry));
  }

  const bool finite_box = std::all_of(box.begin(), box.end(), [](const Interval& i) {
    return std::isfinite(i.lo) && std::isfinite(i.hi);
  });
  std::optional<GuidanceSelection> selection;
  if (finite_box && std::all_of(sweep.begin(), sweep.end(), [](const auto& e) { return !e.finals.empty(); })) {
    const auto rule = compact && z > 0 ? SelectionRule::Monotonicity : SelectionRule::SupportError;
    selection = select_guidance(sweep, box, rule, default_pullback_tolerance(box));
  }

  std::string csv = "# config_hash: " + cfg.hash + "\n";
  csv += "w,mean,p5,p95,support_error,pullback_depth_median,recommended\n";
  for (std::size_t i = 0; i < cfg.ws.size(); ++i) {
    const double w = cfg.ws[i];
    double serr = NAN, pull = NAN;
    if (selection)
      for (const auto& r : selection->rationale)
        if (r.w == w) {
          serr = r.support_error;
          pull = r.pullback_median;
        }
    const bool rec = selection && selection->recommended_w && *selection->recommended_w == w;
    const auto& s = summaries[i];
    csv += format_number(w) + "," + format_number(s.mean) + "," +
           format_number(s.n ? s.quantile(0.05) : NAN) + "," +
           format_number(s.n ? s.quantile(0.95) : NAN) + "," + format_number(serr) + "," +
           format_number(pull) + "," + (rec ? "1" : "0") + "\n";
  }
  const auto summary_path = dir / "sweep_summary.csv";
  write_text_file(summary_path, csv);
  outcome.files.push_back(summary_path);
  return outcome;
}

// ---------------------------------------------------------------------------
// verify

namespace {

IntegratorConfig edge_config() {
  IntegratorConfig cfg;
  // The pullback to the support edge decays like b = sqrt(1 - s^2); stopping
  // at 1 - 1e-10 leaves an O(1e-4) gap at w = 100.
  cfg.t_end_margin = 1e-10;
  return cfg;
}

std::vector<json> gaussian_suite(std::uint64_t seed, int workers) {
  std::vector<json> out;
  IntegratorConfig cfg;
  for (double w : {4.0, 16.0, 64.0, 99.0, 256.0})
    out.push_back(verify_gaussian_sqrtw(w, cfg, seed).to_json());
  for (double w : {100.0, 200.0}) out.push_back(verify_gaussian_positive(w, cfg).to_json());
  out.push_back(verify_gaussian_theorem(25.0, 10'000, seed, cfg, workers).to_json());
  return out;
}

std::vector<json> compact_suite(std::uint64_t seed, int workers) {
  std::vector<json> out;
  const auto spec = MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0));
  const auto cfg = edge_config();
  std::vector<SweepBatch> sweep;
  std::vector<double> finals_w0, finals_w10;
  for (double w : {0.0, 1.0, 3.0, 10.0, 100.0}) {
    GuidanceConfig g;
    g.w = w;
    BatchOptions opt;
    opt.workers = workers;
    const auto batch = sample_batch(GuidedFlow(spec, g), cfg, 2000, seed, opt);
    sweep.push_back({w, batch.final_first()});
    if (w == 0.0) finals_w0 = sweep.back().finals;
    if (w == 10.0) finals_w10 = sweep.back().finals;
  }
  out.push_back(verify_edge_concentration(sweep, spec.compact()).to_json());

  VerificationReport over;
  over.claim = "compact pair: trajectory from the median initialization overshoots the support";
  for (double w : {10.0, 100.0}) {
    GuidanceConfig g;
    g.w = w;
    const double x0[1] = {0.0};
    const auto traj = GuidedFlow(spec, g).integrate(x0, cfg, FlowForm::S, false, true);
    const auto prof = overshoot_profile(traj, spec);
    over.checks.push_back(Check::make("w=" + format_w(w) + " maximum", prof.max_state,
                                      Comparison::GreaterEqual, std::log(w) / 32.0));
    over.checks.push_back(Check::make("w=" + format_w(w) + " entered tail",
                                      prof.entered_tail ? 1.0 : 0.0, Comparison::GreaterEqual, 1.0));
    over.details["w=" + format_w(w)] = {{"max_state", prof.max_state},
                                        {"time_of_max", prof.time_of_max},
                                        {"pullback_depth", prof.pullback_depth}};
  }
  out.push_back(over.to_json());

  const auto tilted = tilted_reference(spec, 10.0, ClassLabel::Positive, 4001);
  VerificationReport gap;
  gap.claim = "compact pair: guided samples differ from the tilted distribution";
  gap.checks.push_back(Check::make("KS(w=10 finals, tilted)", divergence_from_tilted(finals_w10, tilted).ks_distance,
                                   Comparison::Greater, 0.3));
  gap.checks.push_back(Check::make("KS(w=0 finals, conditional)",
                                   divergence_from_tilted(finals_w0, tilted).ks_distance,
                                   Comparison::Less, 0.05));
  out.push_back(gap.to_json());
  return out;
}

std::vector<json> corruption_suite(std::uint64_t seed, int workers) {
  std::vector<json> out;
  const auto spec = MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0));
  const auto cfg = edge_config();
  FreezeOptions opt;
  opt.w = 100.0;
  opt.n = 1000;
  opt.seed = seed;
  opt.workers = workers;
  opt.R = freeze_cutoff_from_overshoot(spec, opt.w, opt.n, seed, cfg, 0.9, workers);
  out.push_back(verify_freeze(spec, cfg, opt).to_json());
  out.push_back(verify_corruption_decay(spec.compact(), {2, 3, 4, 5, 8}, {0.25, 0.5, 1.0}).to_json());
  return out;
}

}  // namespace

json run_verify_suite(const std::string& suite, std::uint64_t seed, int workers) {
  std::vector<json> reports;
  auto append = [&](std::vector<json> r) {
    for (auto& j : r) reports.push_back(std::move(j));
  };
  if (suite == "gaussian") append(gaussian_suite(seed, workers));
  else if (suite == "compact") append(compact_suite(seed, workers));
  else if (suite == "corruption") append(corruption_suite(seed, workers));
  else if (suite == "all") {
    append(gaussian_suite(seed, workers));
    append(compact_suite(seed, workers));
    append(corruption_suite(seed, workers));
  } else {
    throw ConfigError("unknown suite '" + suite + "' (expected gaussian, compact, corruption or all)");
  }
  const bool pass = std::all_of(reports.begin(), reports.end(),
                                [](const json& r) { return r["verdict"] == "pass"; });
  return {{"suite", suite}, {"seed", seed}, {"reports", reports}, {"pass", pass}};
}

// ---------------------------------------------------------------------------
// export-plotdata

std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::filesystem::path> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<double> parse_direction(const std::string& text) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad projection component '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return v;
}

std::vector<double> mean_final(const BatchFile& b) {
  std::vector<double> m(b.dim, 0.0);
  std::size_t n = 0;
  for (const auto& r : b.rows) {
    if (r.status != "ok") continue;
    for (std::size_t c = 0; c < b.dim; ++c) m[c] += r.final_state[c];
    ++n;
  }
  if (n == 0) throw std::runtime_error("batch has no successful rows");
  for (auto& v : m) v /= static_cast<double>(n);
  return m;
}

double interpolate(const TrajectoryFile& t, const std::vector<double>& proj, double s) {
  const auto it = std::lower_bound(t.times.begin(), t.times.end(), s);
  if (it == t.times.end()) return proj.back();
  const auto i = static_cast<std::size_t>(it - t.times.begin());
  if (i == 0 || *it == s) return proj[i];
  const double th = (s - t.times[i - 1]) / (t.times[i] - t.times[i - 1]);
  return proj[i - 1] + th * (proj[i] - proj[i - 1]);
}

}  // namespace

std::vector<std::filesystem::path> export_plotdata(const std::vector<std::filesystem::path>& inputs,
                                                   const std::string& projection,
                                                   const std::filesystem::path& out_dir,
                                                   std::size_t grid_points) {
  if (inputs.empty()) throw ConfigError("no input batch files");
  if (grid_points < 2) throw ConfigError("band grid needs at least two points");
  std::vector<BatchFile> batches;
  for (const auto& p : inputs) {
    batches.push_back(read_batch_csv(p));
    if (batches.back().rows.empty()) throw std::runtime_error(p.string() + ": empty batch");
  }
  const std::size_t dim = batches.front().dim;
  for (const auto& b : batches)
    if (b.dim != dim) throw ConfigError("input batches have different dimensions");

  std::vector<double> dir(dim, 0.0);
  if (projection.rfind("meandiff:", 0) == 0) {
    const auto rest = projection.substr(9);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw ConfigError("meandiff projection needs two batch files");
    const auto a = read_batch_csv(rest.substr(0, comma));
    const auto b = read_batch_csv(rest.substr(comma + 1));
    if (a.dim != dim || b.dim != dim)
      throw ConfigError("meandiff batches do not match the input dimension");
    const auto ma = mean_final(a), mb = mean_final(b);
    for (std::size_t c = 0; c < dim; ++c) dir[c] = ma[c] - mb[c];
  } else if (projection.find(',') != std::string::npos) {
    dir = parse_direction(projection);
    if (dir.size() != dim)
      throw ConfigError("projection has " + std::to_string(dir.size()) + " components, data has " +
                        std::to_string(dim));
  } else {
    const auto idx = parse_direction(projection);
    if (idx[0] < 0 || idx[0] != std::floor(idx[0]) || idx[0] >= static_cast<double>(dim))
      throw ConfigError("projection index out of range for " + std::to_string(dim) + "-D data");
    dir[static_cast<std::size_t>(idx[0])] = 1.0;
  }
  double norm = 0.0;
  for (double v : dir) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw ConfigError("projection direction is zero");
  for (auto& v : dir) v /= norm;
  auto project = [&](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) acc += dir[c] * x[c];
    return acc;
  };

  std::vector<std::string> hashes;
  for (const auto& b : batches)
    if (std::find(hashes.begin(), hashes.end(), b.config_hash) == hashes.end())
      hashes.push_back(b.config_hash);
  std::string head = "# config_hash: ";
  for (std::size_t i = 0; i < hashes.size(); ++i) head += (i ? "," : "") + hashes[i];
  head += "\n# projection:";
  for (double v : dir) head += " " + format_number(v);
  head += "\n";

  std::string scatter = head + "w,seed_index,projection";
  for (std::size_t c = 0; c < dim; ++c) scatter += ",x_final_" + std::to_string(c);
  scatter += "\n";
  std::string bands = head + "w,s,mean,std,lower,upper,count\n";

  for (std::size_t k = 0; k < batches.size(); ++k) {
    const auto& b = batches[k];
    for (const auto& r : b.rows) {
      if (r.status != "ok") continue;
      scatter += format_number(b.w) + "," + std::to_string(r.seed_index) + "," +
                 format_number(project(r.final_state));
      for (double v : r.final_state) scatter += "," + format_number(v);
      scatter += "\n";
    }

    const auto tdir = inputs[k].parent_path() / ("trajectories_w" + format_w(b.w));
    if (!std::filesystem::is_directory(tdir)) continue;
    std::vector<TrajectoryFile> trajs;
    std::vector<std::vector<double>> proj;
    for (const auto& entry : std::filesystem::directory_iterator(tdir)) {
      if (entry.path().extension() != ".csv") continue;
      auto t = read_trajectory_csv(entry.path());
      if (t.dim != dim) throw ConfigError(entry.path().string() + ": dimension mismatch");
      if (t.times.empty()) continue;
      std::vector<double> p(t.times.size());
      for (std::size_t i = 0; i < t.times.size(); ++i)
        p[i] = project(std::span<const double>(t.states).subspan(i * dim, dim));
      trajs.push_back(std::move(t));
      proj.push_back(std::move(p));
    }
    if (trajs.empty()) continue;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& t : trajs) {
      lo = std::min(lo, t.times.front());
      hi = std::max(hi, t.times.back());
    }
    for (std::size_t g = 0; g < grid_points; ++g) {
      const double frac = static_cast<double>(g) / static_cast<double>(grid_points - 1);
      const double s = g + 1 == grid_points ? hi : lo * std::pow(hi / lo, frac);
      double sum = 0.0, sq = 0.0;
      for (std::size_t j = 0; j < trajs.size(); ++j) {
        const double v = interpolate(trajs[j], proj[j], s);
        sum += v;
        sq += v * v;
      }
      const double n = static_cast<double>(trajs.size());
      const double mean = sum / n;
      const double sd = n > 1 ? std::sqrt(std::max(0.0, (sq - n * mean * mean) / (n - 1.0))) : 0.0;
      bands += format_number(b.w) + "," + format_number(s) + "," + format_number(mean) + "," +
               format_number(sd) + "," + format_number(mean - sd) + "," + format_number(mean + sd) +
               "," + std::to_string(trajs.size()) + "\n";
    }
  }

  const auto bands_path = out_dir / "bands.csv";
  const auto scatter_path = out_dir / "scatter.csv";
  write_text_file(bands_path, bands);
  write_text_file(scatter_path, scatter);
  return {bands_path, scatter_path};
}

// ---------------------------------------------------------------------------

int cli_main(int argc, char** argv) {
  CLI::App app{"Guided probability-flow ODE for two-component mixtures"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a batch or w-sweep from a JSON config");
  std::string config_path, out_override;
  int workers = 0;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--workers", workers, "OpenMP worker threads (0: default)");
  run->add_option("--out", out_override, "Output directory (overrides outputs.directory)");

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  std::string suite, report_path;
  std::uint64_t seed = 0;
  verify->add_option("--suite", suite, "gaussian | compact | corruption | all")->required();
  verify->add_option("--seed", seed, "Seed");
  verify->add_option("--workers", workers, "OpenMP worker threads (0: default)");
  verify->add_option("--out", report_path, "Report path (default verify_<suite>.json)");

  auto* exp = app.add_subcommand("export-plotdata", "Export band and scatter CSVs");
  std::string input_glob, projection = "0", export_dir = ".";
  std::size_t grid = 200;
  exp->add_option("--input", input_glob, "Glob of batch CSV files")->required();
  exp->add_option("--projection", projection, "index | d0,d1,... | meandiff:A.csv,B.csv");
  exp->add_option("--out", export_dir, "Output directory");
  exp->add_option("--grid", grid, "Points on the common s grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      auto cfg = load_experiment_config(config_path);
      if (!out_override.empty()) cfg.outputs.directory = out_override;
      const auto res = run_experiment(cfg, workers);
      for (const auto& f : res.files) std::cout << f.string() << "\n";
      if (res.failures > 0)
        std::cerr << "warning: " << res.failures << " trajectories failed; see meta files\n";
      return 0;
    }
    if (verify->parsed()) {
      if (suite != "gaussian" && suite != "compact" && suite != "corruption" && suite != "all")
        throw ConfigError("unknown suite '" + suite + "'");
      const auto report = run_verify_suite(suite, seed, workers);
      const std::filesystem::path path =
          report_path.empty() ? std::filesystem::path("verify_" + suite + ".json")
                              : std::filesystem::path(report_path);
      write_text_file(path, report.dump(2) + "\n");
      for (const auto& r : report["reports"])
      {
        std::cout << (r["verdict"] == "pass" ? "PASS " : "FAIL ") << r["claim"].get<std::string>();
        if (r["details"].contains("w")) std::cout << " [w=" << r["details"]["w"].dump() << "]";
        std::cout << "\n";
      }
      std::cout << path.string() << "\n";
      return report["pass"].get<bool>() ? 0 : 1;
    }
    if (exp->parsed()) {
      const auto inputs = expand_glob(input_glob);
      if (inputs.empty()) throw ConfigError("no files match '" + input_glob + "'");
      for (const auto& f : export_plotdata(inputs, projection, export_dir, grid))
        std::cout << f.string() << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace gflow
