#include "gflow/flow.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <omp.h>

namespace gflow {

std::string to_string(ScoreSourceKind kind) {
  switch (kind) {
    case ScoreSourceKind::Exact: return "exact";
    case ScoreSourceKind::MonteCarlo: return "monte_carlo";
    case ScoreSourceKind::Corrupted: return "corrupted";
  }
  return "unknown";
}

std::shared_ptr<const ScoreField> make_score_field(const MixtureSpec& spec,
                                                   const ScoreSourceConfig& source) {
  switch (source.kind) {
    case ScoreSourceKind::Exact: return std::make_shared<ExactScoreField>(spec);
    case ScoreSourceKind::MonteCarlo:
      return std::make_shared<MonteCarloScoreField>(spec, source.mc_samples, source.mc_seed);
    case ScoreSourceKind::Corrupted:
      return std::make_shared<CorruptedScoreField>(
          CorruptionSpec{source.corruption_R, std::make_shared<ExactScoreField>(spec)});
  }
  throw std::invalid_argument("unknown score source");
}

void GuidanceConfig::validate() const {
  if (!(w >= -1.0) || !std::isfinite(w))
    throw std::invalid_argument("guidance strength w must be a finite number >= -1");
}

double guided_drift(const GuidanceConfig& guidance, const ScoreField& field,
                    const SchedulePoint& point, double x) {
  const auto sc = field.score_pair(point, x, guidance.target);
  return x + sc.cond + guidance.w * (sc.cond - sc.uncond);
}

DriftTerms guided_drift_terms_t(double w, ClassLabel target, const PosteriorDiagnostics& post,
                                const SchedulePoint& point, double x) {
  const double a = point.a, b2 = point.b2();
  const double mz = post.mean(target), mo = post.mean(opposite(target));
  return {(a * mz - a * a * x) / b2, w / b2 * post.q(opposite(target)) * a * (mz - mo)};
}

DriftTerms guided_drift_terms_s(double w, ClassLabel target, const PosteriorDiagnostics& post,
                                const SchedulePoint& point, double x) {
  const double b2 = point.b2();
  const double mz = post.mean(target), mo = post.mean(opposite(target));
  return {(mz - point.s * x) / b2, w / b2 * post.q(opposite(target)) * (mz - mo)};
}

double gaussian_reduced_drift(double w, double s, double x) {
  return (w + 1.0) - w * std::tanh(s * x);
}

namespace {

// t only matters through a = s; any horizon covering s works.
SchedulePoint point_at_s(double s) {
  return at_s(s, std::max(kDefaultHorizon, -std::log(s) + 1.0));
}

}  // namespace

GuidedFlow::GuidedFlow(MixtureSpec spec, GuidanceConfig guidance,
                       std::shared_ptr<const ScoreField> field)
    : spec_(std::move(spec)), guidance_(guidance), field_(std::move(field)) {
  guidance_.validate();
  if (!field_) throw std::invalid_argument("guided flow needs a score field");
  if (guidance_.source.kind == ScoreSourceKind::Corrupted)
    events_.push_back({0, guidance_.source.corruption_R, true, "freeze"});
}

GuidedFlow::GuidedFlow(MixtureSpec spec, GuidanceConfig guidance)
    : GuidedFlow(spec, guidance, make_score_field(spec, guidance.source)) {}

double GuidedFlow::first_drift_s(const SchedulePoint& point, double x) const {
  if (const auto post = field_->posterior(point, x))
    return guided_drift_terms_s(guidance_.w, guidance_.target, *post, point, x).total();
  return guided_drift(guidance_, *field_, point, x) / point.s;
}

void GuidedFlow::drift_s(double s, std::span<const double> x, std::span<double> dxds) const {
  const SchedulePoint p = point_at_s(s);
  dxds[0] = first_drift_s(p, x[0]);
  for (std::size_t c = 1; c < x.size(); ++c)
    dxds[c] = (x[c] + nuisance_score(spec_, p, x[c])) / s;
}

void GuidedFlow::drift_t(double t, double T, std::span<const double> x,
                         std::span<double> dxdt) const {
  const SchedulePoint p = at_time(t, T);
  dxdt[0] = guided_drift(guidance_, *field_, p, x[0]);
  for (std::size_t c = 1; c < x.size(); ++c) dxdt[c] = x[c] + nuisance_score(spec_, p, x[c]);
}

std::optional<DriftDiagnostics> GuidedFlow::diagnostics(double s, std::span<const double> x) const {
  const SchedulePoint p = point_at_s(s);
  const auto post = field_->posterior(p, x[0]);
  if (!post) return std::nullopt;
  const auto terms = guided_drift_terms_s(guidance_.w, guidance_.target, *post, p, x[0]);
  return DriftDiagnostics{post->q_neg, post->mean_pos, post->mean_neg, terms.term1, terms.term2};
}

double GuidedFlow::s_start(const IntegratorConfig& cfg) { return std::exp(-cfg.horizon); }
double GuidedFlow::s_end(const IntegratorConfig& cfg) { return 1.0 - cfg.t_end_margin; }

Trajectory GuidedFlow::integrate(std::span<const double> x0, const IntegratorConfig& cfg,
                                 FlowForm form, bool with_diagnostics, bool endpoints_only) const {
  cfg.validate();
  if (x0.size() != spec_.dim())
    throw std::invalid_argument("initial state has " + std::to_string(x0.size()) +
                                " coordinates, mixture has " + std::to_string(spec_.dim()));
  const double s0 = s_start(cfg), s1 = s_end(cfg);
  if (!(s1 > s0)) throw std::invalid_argument("horizon too short for the requested end margin");

  IntegrateOptions opt;
  opt.events = events_;
  opt.endpoints_only = endpoints_only;
  if (with_diagnostics)
    opt.diagnostics = [this](double s, std::span<const double> x) { return diagnostics(s, x); };

  if (form == FlowForm::S) {
    const Drift f = [this](double s, std::span<const double> x, std::span<double> dx) {
      drift_s(s, x, dx);
    };
    return gflow::integrate(f, x0, s0, s1, cfg, opt);
  }

  const double T = cfg.horizon;
  const double t1 = T + std::log(s1);
  if (with_diagnostics)
    opt.diagnostics = [this, T](double t, std::span<const double> x) {
      return diagnostics(std::exp(t - T), x);
    };
  const Drift f = [this, T](double t, std::span<const double> x, std::span<double> dx) {
    drift_t(std::min(t, T), T, x, dx);
  };
  Trajectory traj = gflow::integrate(f, x0, 0.0, t1, cfg, opt);
  for (double& t : traj.times) t = std::exp(t - T);
  for (auto& ev : traj.events) ev.s = std::exp(ev.s - T);
  traj.max_first_s = std::exp(traj.max_first_s - T);
  return traj;
}

Trajectory integrate_reduced_gaussian(double w, double x0, const IntegratorConfig& cfg,
                                      bool endpoints_only) {
  if (!(w >= -1.0)) throw std::invalid_argument("guidance strength w must be >= -1");
  IntegrateOptions opt;
  opt.endpoints_only = endpoints_only;
  return integrate([w](double s, double x) { return gaussian_reduced_drift(w, s, x); }, x0, 0.0,
                   1.0, cfg, opt);
}

std::vector<double> initial_state(std::uint64_t seed, std::size_t index, std::size_t dim) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  Rng rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(dim);
  for (auto& v : x) v = normal(rng);
  return x;
}

std::vector<std::vector<double>> SampleBatch::finals() const {
  std::vector<std::vector<double>> out;
  for (const auto& o : outcomes)
    if (o.status == TrajectoryStatus::Ok) out.push_back(o.final_state);
  return out;
}

std::vector<double> SampleBatch::final_first() const {
  std::vector<double> out;
  for (const auto& o : outcomes)
    if (o.status == TrajectoryStatus::Ok) out.push_back(o.final_state[0]);
  return out;
}

std::size_t SampleBatch::failures() const {
  std::size_t n = 0;
  for (const auto& o : outcomes) n += o.status != TrajectoryStatus::Ok;
  return n;
}

double SampleBatch::failure_fraction() const {
  return outcomes.empty() ? 0.0
                          : static_cast<double>(failures()) / static_cast<double>(outcomes.size());
}

namespace {

using Runner = std::function<Trajectory(std::span<const double>)>;

void run_one(const Runner& run, std::size_t dim, std::uint64_t seed, std::size_t i,
             const BatchOptions& opt, SampleBatch& batch) {
  auto& out = batch.outcomes[i];
  out.seed_index = i;
  out.initial = initial_state(seed, i, dim);
  try {
    Trajectory traj = run(out.initial);
    out.final_state.assign(traj.final_point().begin(), traj.final_point().end());
    out.status = traj.status;
    out.message = traj.message;
    out.max_first = traj.max_first;
    if (opt.retain_trajectories) batch.trajectories[i] = std::move(traj);
  } catch (const std::exception& e) {
    out.final_state = out.initial;
    out.status = TrajectoryStatus::NonFinite;
    out.message = e.what();
    out.max_first = out.initial[0];
  }
}

SampleBatch make_batch(std::size_t dim, std::size_t n, const BatchMeta& meta,
                       const BatchOptions& opt) {
  SampleBatch batch;
  batch.dim = dim;
  batch.outcomes.resize(n);
  if (opt.retain_trajectories) batch.trajectories.resize(n);
  batch.meta = meta;
  return batch;
}

SampleBatch run_batch(const Runner& run, std::size_t dim, std::size_t n, const BatchMeta& meta,
                      const BatchOptions& opt, bool parallel) {
  SampleBatch batch = make_batch(dim, n, meta, opt);
  const auto count = static_cast<std::ptrdiff_t>(n);
  if (parallel) {
    const int threads = opt.workers > 0 ? opt.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < count; ++i)
      run_one(run, dim, meta.seed, static_cast<std::size_t>(i), opt, batch);
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i)
      run_one(run, dim, meta.seed, static_cast<std::size_t>(i), opt, batch);
  }
  return batch;
}

SampleBatch flow_batch(const GuidedFlow& flow, const IntegratorConfig& cfg, std::size_t n,
                       std::uint64_t seed, const BatchOptions& opt, bool parallel) {
  cfg.validate();
  const bool endpoints_only = !opt.retain_trajectories;
  const Runner run = [&](std::span<const double> x0) {
    return flow.integrate(x0, cfg, opt.form, opt.diagnostics && opt.retain_trajectories,
                          endpoints_only);
  };
  const BatchMeta meta{flow.guidance().w, flow.guidance().target, seed, n, cfg,
                       flow.guidance().source};
  return run_batch(run, flow.spec().dim(), n, meta, opt, parallel);
}

}  // namespace

SampleBatch sample_batch(const GuidedFlow& flow, const IntegratorConfig& cfg, std::size_t n,
                         std::uint64_t seed, const BatchOptions& opt) {
  return flow_batch(flow, cfg, n, seed, opt, true);
}

SampleBatch sample_batch_serial(const GuidedFlow& flow, const IntegratorConfig& cfg,
                                std::size_t n, std::uint64_t seed, const BatchOptions& opt) {
  return flow_batch(flow, cfg, n, seed, opt, false);
}

SampleBatch sample_reduced_gaussian(double w, const IntegratorConfig& cfg, std::size_t n,
                                    std::uint64_t seed, const BatchOptions& opt) {
  cfg.validate();
  const bool endpoints_only = !opt.retain_trajectories;
  const Runner run = [&](std::span<const double> x0) {
    return integrate_reduced_gaussian(w, x0[0], cfg, endpoints_only);
  };
  const BatchMeta meta{w, ClassLabel::Positive, seed, n, cfg, ScoreSourceConfig{}};
  return run_batch(run, 1, n, meta, opt, true);
}

}  // namespace gflow
