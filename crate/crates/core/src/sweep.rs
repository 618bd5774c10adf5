//! Monte Carlo engine: per-θ and worst-case error estimates along
//! `(d, n(d))` trajectories, moment diagnostics for the sphere model, and
//! trend verdicts.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::analytic::{bayes_error, ModelParams};
use crate::classifiers::{coin_label, ClassifierSpec, Decision, TrainedRule, Trainer};
use crate::datagen::{gen_dataset, proof_statistics, Dataset};
use crate::exec::{map_indexed, Execution};
use crate::paramsets::{
    make_sparse_h, sample_sphere_uniform, theta_sensing_aware, theta_sphere, Decay, SparsityClass, SphereTheta,
};
use crate::rng::{mix, rng_for, rng_from_seed, tag};
use crate::stats::{fmt_sig, quantile, sample_variance, ErrorEstimate, ErrorTally, MeanEstimate};
use crate::{dot, Error, Label, Result};

/// Retries per replicate when the training set is untrainable.
pub const MAX_ATTEMPTS: u64 = 16;

pub const DEFAULT_TEST_POINTS: usize = 512;
pub const DEFAULT_REPLICATES: usize = 196;
pub const DEFAULT_THETA_DRAWS: usize = 8;

/// How test points are scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TestEval {
    /// Linear rules see a test point only through `wᵀx + b`, which for
    /// `x ~ N(μ_y, Σ)` is exactly `N(wᵀμ_y + b, wᵀΣw)`. Sampling that scalar
    /// gives the same indicator law as sampling `x` at O(1) cost per point.
    #[default]
    Projected,
    /// Materialise every test vector and call `predict`.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateConfig {
    pub test_points: usize,
    pub replicates: usize,
    pub seed: u64,
    pub eval: TestEval,
    pub exec: Execution,
}

impl EstimateConfig {
    pub fn new(test_points: usize, replicates: usize, seed: u64) -> Self {
        EstimateConfig {
            test_points,
            replicates,
            seed,
            eval: TestEval::Projected,
            exec: Execution::Parallel,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.test_points == 0 || self.replicates == 0 || self.test_points * self.replicates < 100 {
            return Err(Error::InvalidParameter(format!(
                "need test_points * replicates >= 100 (got {} * {})",
                self.test_points, self.replicates
            )));
        }
        Ok(())
    }
}

/// Counts misclassified points among `m` fresh test draws from `theta`.
pub fn count_test_errors(rule: &TrainedRule, theta: &ModelParams, m: usize, seed: u64, eval: TestEval) -> Result<u64> {
    match eval {
        TestEval::Full => {
            let test = gen_dataset(theta, m, seed)?;
            let mut errors = 0;
            for (x, y) in test.iter() {
                errors += (rule.predict(x)? != y) as u64;
            }
            Ok(errors)
        }
        TestEval::Projected => {
            let mut rng = rng_from_seed(seed);
            let score_of: Box<dyn Fn(Label, f64, u64) -> Label> = match rule.decision() {
                Decision::Linear { weight, offset } => {
                    let mean_pos = dot(weight, theta.mu_plus()) + offset;
                    let mean_neg = dot(weight, theta.mu_minus()) + offset;
                    let sd = theta.cov().quadratic_form(weight)?.max(0.0).sqrt();
                    Box::new(move |y, z, _| {
                        let mean = if y == Label::Pos { mean_pos } else { mean_neg };
                        Label::from_score(mean + sd * z)
                    })
                }
                Decision::Constant(label) => {
                    let label = *label;
                    Box::new(move |_, _, _| label)
                }
                Decision::Coin { seed } => {
                    let seed = *seed;
                    Box::new(move |_, _, i| coin_label(seed, i))
                }
            };
            let mut errors = 0;
            for i in 0..m as u64 {
                let y = if rng.random::<bool>() { Label::Pos } else { Label::Neg };
                let z: f64 = rng.sample(StandardNormal);
                errors += (score_of(y, z, i) != y) as u64;
            }
            Ok(errors)
        }
    }
}

/// Per-trainer tallies for `R` replicates at one `θ`.
///
/// Replicate `r`, attempt `a` trains on the dataset seeded by
/// `mix(seed, [DATA, r, a])`, shared by all trainers; every rule is scored on
/// the same test stream `mix(seed, [TEST, r])`.
pub fn replicate_tallies<T: Trainer>(trainers: &[T], theta: &ModelParams, n: usize, cfg: &EstimateConfig) -> Result<Vec<ErrorTally>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("training size n must be >= 1".into()));
    }
    let m = cfg.test_points;
    let per_replicate = map_indexed(cfg.exec, cfg.replicates, |r| -> Result<Vec<ErrorTally>> {
        let r = r as u64;
        let mut cache: Vec<Option<Dataset>> = Vec::new();
        let test_seed = mix(cfg.seed, &[tag::TEST, r]);
        let coin_seed = mix(cfg.seed, &[tag::COIN, r]);
        let mut out = Vec::with_capacity(trainers.len());
        for trainer in trainers {
            let mut tally = ErrorTally::new(m as u64);
            let mut trained = false;
            for attempt in 0..MAX_ATTEMPTS {
                let data = if trainer.uses_training_data() {
                    let a = attempt as usize;
                    if cache.len() <= a {
                        cache.resize(a + 1, None);
                    }
                    if cache[a].is_none() {
                        cache[a] = Some(gen_dataset(theta, n, mix(cfg.seed, &[tag::DATA, r, attempt]))?);
                    }
                    cache[a].as_ref()
                } else {
                    None
                };
                match trainer.train(data, theta, coin_seed) {
                    Ok(rule) => {
                        tally.record_replicate(count_test_errors(&rule, theta, m, test_seed, cfg.eval)?);
                        trained = true;
                        break;
                    }
                    Err(Error::Untrainable(_)) => tally.resample_events += 1,
                    Err(e) => return Err(e),
                }
            }
            if !trained {
                tally.record_failure();
            }
            out.push(tally);
        }
        Ok(out)
    });
    let mut totals: Vec<ErrorTally> = trainers.iter().map(|_| ErrorTally::new(m as u64)).collect();
    for rep in per_replicate {
        for (total, t) in totals.iter_mut().zip(rep?) {
            total.merge(&t);
        }
    }
    Ok(totals)
}

/// Error probability of `trainer` at `θ`, pooled over `R` training sets and
/// `m` test points each.
pub fn estimate_error<T: Trainer>(trainer: &T, theta: &ModelParams, n: usize, cfg: &EstimateConfig) -> Result<ErrorEstimate> {
    Ok(replicate_tallies(std::slice::from_ref(trainer), theta, n, cfg)?[0].finish())
}

/// Like [`estimate_error`] for several trainers on shared training sets.
pub fn estimate_errors<T: Trainer>(trainers: &[T], theta: &ModelParams, n: usize, cfg: &EstimateConfig) -> Result<Vec<ErrorEstimate>> {
    Ok(replicate_tallies(trainers, theta, n, cfg)?.iter().map(ErrorTally::finish).collect())
}

/// Training-set size as a function of dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum NRule {
    /// `n(d) = ⌈d^γ⌉`, `0 < γ < 1`.
    Power { gamma: f64 },
    Fixed(usize),
    /// One entry per grid dimension.
    Explicit(Vec<usize>),
}

impl NRule {
    pub fn n_for(&self, d: usize, index: usize) -> usize {
        match self {
            NRule::Power { gamma } => {
                let x = (d as f64).powf(*gamma);
                let r = x.round();
                if (x - r).abs() <= 1e-9 * r.max(1.0) {
                    r as usize
                } else {
                    x.ceil() as usize
                }
            }
            NRule::Fixed(n) => *n,
            NRule::Explicit(ns) => ns[index],
        }
    }
}

/// Parameter family sampled at each grid cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Sphere { alpha: f64 },
    SensingAware { alpha: f64, gamma: f64, beta: f64, midpoint: f64 },
    SparseExp { a: f64, alpha: f64 },
    SparsePoly { b: f64, alpha: f64 },
}

impl Family {
    pub fn alpha(&self) -> f64 {
        match self {
            Family::Sphere { alpha }
            | Family::SensingAware { alpha, .. }
            | Family::SparseExp { alpha, .. }
            | Family::SparsePoly { alpha, .. } => *alpha,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Family::Sphere { alpha } => format!("sphere:alpha={alpha}"),
            Family::SensingAware { alpha, gamma, beta, midpoint } => {
                format!("sensing_aware:alpha={alpha};gamma={gamma};beta={beta};midpoint={midpoint}")
            }
            Family::SparseExp { a, alpha } => format!("sparse_exp:a={a};alpha={alpha}"),
            Family::SparsePoly { b, alpha } => format!("sparse_poly:b={b};alpha={alpha}"),
        }
    }

    /// Whether "max over draws" is the exact sup over the family (up to
    /// Monte Carlo noise) by symmetry.
    pub fn sup_is_exact(&self) -> bool {
        !matches!(self, Family::SensingAware { .. })
    }

    pub fn draw<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Result<ModelParams> {
        match *self {
            Family::Sphere { alpha } => theta_sphere(&sample_sphere_uniform(d, rng)?, alpha),
            Family::SensingAware { alpha, gamma, beta, midpoint } => {
                theta_sensing_aware(&sample_sphere_uniform(d, rng)?, gamma, beta, alpha, midpoint)
            }
            Family::SparseExp { a, alpha } => {
                let class = SparsityClass::new(Decay::Exp { a }, d)?;
                theta_sphere(&make_sparse_h(&class, rng), alpha)
            }
            Family::SparsePoly { b, alpha } => {
                let class = SparsityClass::new(Decay::Poly { b }, d)?;
                theta_sphere(&make_sparse_h(&class, rng), alpha)
            }
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(self.alpha() > 0.0 && self.alpha().is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha())));
        }
        match *self {
            Family::SensingAware { gamma, beta, midpoint, .. } => {
                if !(gamma >= 0.0) || !(beta > 0.0) || !midpoint.is_finite() {
                    return Err(Error::InvalidParameter("sensing-aware family needs gamma >= 0, beta > 0".into()));
                }
            }
            Family::SparseExp { a, .. } => {
                SparsityClass::new(Decay::Exp { a }, d)?;
            }
            Family::SparsePoly { b, .. } => {
                SparsityClass::new(Decay::Poly { b }, d)?;
            }
            Family::Sphere { .. } => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub d_grid: Vec<usize>,
    pub n_rule: NRule,
    pub family: Family,
    pub classifiers: Vec<ClassifierSpec>,
    pub theta_draws: usize,
    pub replicates_per_theta: usize,
    pub test_points_per_replicate: usize,
    pub master_seed: u64,
    pub eval: TestEval,
}

impl SweepPlan {
    pub fn new(d_grid: Vec<usize>, n_rule: NRule, family: Family, classifiers: Vec<ClassifierSpec>, master_seed: u64) -> Self {
        SweepPlan {
            d_grid,
            n_rule,
            family,
            classifiers,
            theta_draws: DEFAULT_THETA_DRAWS,
            replicates_per_theta: DEFAULT_REPLICATES,
            test_points_per_replicate: DEFAULT_TEST_POINTS,
            master_seed,
            eval: TestEval::Projected,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.d_grid.is_empty() {
            return bad("d_grid is empty".into());
        }
        if let Some(d) = self.d_grid.iter().find(|&&d| d < 2) {
            return bad(format!("every dimension must be >= 2, got {d}"));
        }
        match &self.n_rule {
            NRule::Power { gamma } if !(*gamma > 0.0 && *gamma < 1.0) => {
                return bad(format!("power rule needs 0 < gamma < 1, got {gamma}"))
            }
            NRule::Fixed(0) => return bad("fixed n must be >= 1".into()),
            NRule::Explicit(ns) if ns.len() != self.d_grid.len() || ns.contains(&0) => {
                return bad("explicit n list must match d_grid and be >= 1".into())
            }
            _ => {}
        }
        if self.classifiers.is_empty() {
            return bad("no classifiers".into());
        }
        if self.theta_draws == 0 {
            return bad("theta_draws must be >= 1".into());
        }
        for &d in &self.d_grid {
            self.family.validate(d)?;
        }
        EstimateConfig::new(self.test_points_per_replicate, self.replicates_per_theta, 0).validate()
    }

    pub fn n_grid(&self) -> Vec<usize> {
        self.d_grid.iter().enumerate().map(|(i, &d)| self.n_rule.n_for(d, i)).collect()
    }
}

/// Which θ a result row describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ThetaRef {
    /// Empirical sup over the sampled θ.
    Max,
    /// Pooled over all sampled θ.
    Mean,
    Index(usize),
}

impl fmt::Display for ThetaRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaRef::Max => f.write_str("max"),
            ThetaRef::Mean => f.write_str("mean"),
            ThetaRef::Index(i) => write!(f, "{i}"),
        }
    }
}

impl std::str::FromStr for ThetaRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(ThetaRef::Max),
            "mean" => Ok(ThetaRef::Mean),
            other => other
                .parse()
                .map(ThetaRef::Index)
                .map_err(|_| Error::InvalidParameter(format!("bad theta reference '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub n: usize,
    pub family: String,
    pub classifier: String,
    pub theta: ThetaRef,
    pub estimate: ErrorEstimate,
    pub wall_ms: u64,
}

pub const CSV_HEADER: &str = "d,n,family,classifier,theta,trials,p_hat,ci_low,ci_high,resamples,wall_ms";

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub metadata: BTreeMap<String, String>,
}

impl SweepResult {
    /// CSV table; `wall_ms` is written as 0 unless `timing` is set, so the
    /// file is reproducible byte for byte.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let e = &row.estimate;
            let (p, lo, hi) = if e.valid { (e.p_hat, e.ci_low, e.ci_high) } else { (f64::NAN, f64::NAN, f64::NAN) };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                row.d,
                row.n,
                row.family,
                row.classifier,
                row.theta,
                e.trials,
                fmt_sig(p, 10),
                fmt_sig(lo, 10),
                fmt_sig(hi, 10),
                e.resample_events,
                if timing { row.wall_ms } else { 0 }
            ));
        }
        out
    }

    pub fn has_invalid(&self) -> bool {
        self.rows.iter().any(|r| !r.estimate.valid)
    }

    pub fn row(&self, d: usize, classifier: &str, theta: ThetaRef) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.d == d && r.classifier == classifier && r.theta == theta)
    }

    /// Rows of one classifier and θ reference in increasing `d`.
    pub fn series(&self, classifier: &str, theta: ThetaRef) -> Vec<&SweepRow> {
        let mut rows: Vec<&SweepRow> = self
            .rows
            .iter()
            .filter(|r| r.classifier == classifier && r.theta == theta)
            .collect();
        rows.sort_by_key(|r| r.d);
        rows
    }
}

/// Runs every `(d, θ-draw)` cell of the plan.
///
/// θ-draw `k` at grid index `i` uses `mix(master, [THETA, i, k])`; its
/// replicates use `mix(master, [DATA, i, k])`. Cells whose estimation fails
/// are reported as invalid rows rather than aborting the sweep.
pub fn run_sweep(plan: &SweepPlan, exec: Execution) -> Result<SweepResult> {
    plan.validate()?;
    let n_grid = plan.n_grid();
    let k_draws = plan.theta_draws;
    let n_cls = plan.classifiers.len();
    let m = plan.test_points_per_replicate as u64;
    let family_label = plan.family.label();

    let cells = map_indexed(exec, plan.d_grid.len() * k_draws, |c| {
        let (i, k) = (c / k_draws, c % k_draws);
        let d = plan.d_grid[i];
        let started = Instant::now();
        let tallies = plan
            .family
            .draw(d, &mut rng_for(plan.master_seed, &[tag::THETA, i as u64, k as u64]))
            .and_then(|theta| {
                let cfg = EstimateConfig {
                    test_points: plan.test_points_per_replicate,
                    replicates: plan.replicates_per_theta,
                    seed: mix(plan.master_seed, &[tag::DATA, i as u64, k as u64]),
                    eval: plan.eval,
                    exec,
                };
                replicate_tallies(&plan.classifiers, &theta, n_grid[i], &cfg)
            });
        let tallies = tallies.unwrap_or_else(|_| {
            // Invalid cell: one failed replicate and nothing else.
            let mut t = ErrorTally::new(m);
            t.record_failure();
            vec![t; n_cls]
        });
        (tallies, started.elapsed().as_millis() as u64)
    });

    let mut rows = Vec::new();
    for (i, &d) in plan.d_grid.iter().enumerate() {
        let group = &cells[i * k_draws..(i + 1) * k_draws];
        let cell_ms: u64 = group.iter().map(|(_, ms)| ms).sum();
        for (j, spec) in plan.classifiers.iter().enumerate() {
            let label = spec.label();
            let mut pooled = ErrorTally::new(m);
            let mut per_theta = Vec::with_capacity(k_draws);
            for (k, (tallies, ms)) in group.iter().enumerate() {
                pooled.merge(&tallies[j]);
                let est = tallies[j].finish();
                per_theta.push(est.clone());
                rows.push(SweepRow {
                    d,
                    n: n_grid[i],
                    family: family_label.clone(),
                    classifier: label.clone(),
                    theta: ThetaRef::Index(k),
                    estimate: est,
                    wall_ms: *ms,
                });
            }
            let mut max = per_theta
                .iter()
                .enumerate()
                .fold(None::<(usize, &ErrorEstimate)>, |best, (k, e)| match best {
                    Some((_, b)) if b.p_hat >= e.p_hat => best,
                    _ => Some((k, e)),
                })
                .map(|(_, e)| e.clone())
                .expect("theta_draws >= 1");
            max.valid = per_theta.iter().all(|e| e.valid);
            let mut mean = pooled.finish();
            mean.valid &= max.valid;
            for (theta, estimate) in [(ThetaRef::Max, max), (ThetaRef::Mean, mean)] {
                rows.push(SweepRow {
                    d,
                    n: n_grid[i],
                    family: family_label.clone(),
                    classifier: label.clone(),
                    theta,
                    estimate,
                    wall_ms: cell_ms,
                });
            }
        }
    }
    rows.sort_by(|a, b| (a.d, &a.classifier, a.theta).cmp(&(b.d, &b.classifier, b.theta)));

    let mut metadata = BTreeMap::new();
    metadata.insert("family".into(), family_label);
    metadata.insert("master_seed".into(), plan.master_seed.to_string());
    metadata.insert(
        "sup_estimate".into(),
        if plan.family.sup_is_exact() { "exact_by_symmetry" } else { "lower_bound" }.into(),
    );
    metadata.insert("bayes_error".into(), fmt_sig(bayes_error(plan.family.alpha())?, 10));
    Ok(SweepResult { rows, metadata })
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrendVerdict {
    Pass,
    Fail(String),
    Inconclusive(String),
}

impl TrendVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, TrendVerdict::Pass)
    }
}

/// PASS iff the series is nondecreasing within combined CI half-widths
/// (checked over every pair) and the last CI upper bound reaches
/// `target − 0.02`.
pub fn trend_verdict(series: &[ErrorEstimate], target: f64) -> TrendVerdict {
    if series.len() < 3 {
        return TrendVerdict::Inconclusive(format!("need at least 3 grid points, got {}", series.len()));
    }
    if let Some(i) = series.iter().position(|e| !e.valid) {
        return TrendVerdict::Fail(format!("grid point {i} is flagged invalid"));
    }
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let slack = (series[i].half_width().powi(2) + series[j].half_width().powi(2)).sqrt();
            if series[j].p_hat < series[i].p_hat - slack {
                return TrendVerdict::Fail(format!(
                    "error drops from {:.4} (point {i}) to {:.4} (point {j}) beyond slack {:.4}",
                    series[i].p_hat, series[j].p_hat, slack
                ));
            }
        }
    }
    let last = series.last().expect("len >= 3");
    if last.ci_high < target - 0.02 {
        return TrendVerdict::Fail(format!("final CI upper bound {:.4} below target {:.4} - 0.02", last.ci_high, target));
    }
    TrendVerdict::Pass
}

/// [`trend_verdict`] over the "max" rows of one classifier.
pub fn trend_test(result: &SweepResult, classifier: &str, target: f64) -> TrendVerdict {
    let series: Vec<ErrorEstimate> = result
        .series(classifier, ThetaRef::Max)
        .into_iter()
        .map(|r| r.estimate.clone())
        .collect();
    trend_verdict(&series, target)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    /// `|empirical − closed| / |closed|` at most this.
    Relative(f64),
    /// `|empirical − closed|` at most this many standard errors.
    StdErrors(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub quantity: &'static str,
    pub closed_form: f64,
    pub empirical: f64,
    /// Relative error, or the deviation in standard errors for
    /// [`Tolerance::StdErrors`] rows.
    pub deviation: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub d: usize,
    pub n: usize,
    pub beta: f64,
    pub replicates: usize,
    pub rows: Vec<DiagnosticRow>,
    /// `(q, quantile of W)`.
    pub w_quantiles: Vec<(f64, f64)>,
    /// `(ε, P(|W| > ε))`.
    pub w_exceedance: Vec<(f64, f64)>,
    /// Sample mean of `(n/d)(1 + 2HᵀV + ‖V‖²)`.
    pub scaled_denominator: f64,
}

impl MomentReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub const MIN_MOMENT_REPLICATES: usize = 10_000;

/// Samples `(HᵀV, ‖V‖², W)` for `replicates` independent sphere-model draws,
/// each with a fresh uniform `H` and a generated training set.
pub fn sample_proof_statistics(d: usize, n: usize, beta: f64, replicates: usize, seed: u64, exec: Execution) -> Result<Vec<(f64, f64, f64)>> {
    if !(beta > 0.0) || n == 0 || d < 2 {
        return Err(Error::InvalidParameter(format!("need d >= 2, n >= 1, beta > 0 (d = {d}, n = {n}, beta = {beta})")));
    }
    map_indexed(exec, replicates, |r| {
        let mut rng = rng_for(seed, &[tag::MOMENTS, r as u64]);
        let h = sample_sphere_uniform(d, &mut rng)?;
        let theta = SphereTheta::new(h, 2.0 / beta)?;
        let data = gen_dataset(&theta.to_model(), n, mix(seed, &[tag::MOMENTS, r as u64, 1]))?;
        let ps = proof_statistics(&theta, &data)?;
        Ok((ps.ht_v, ps.v_norm_sq, ps.w))
    })
    .into_iter()
    .collect()
}

/// Empirical versus closed-form moments of `HᵀV` and `‖V‖²` in the sphere
/// model, plus the distribution of `W`.
pub fn moment_diagnostics(d: usize, n: usize, beta: f64, replicates: usize, seed: u64, exec: Execution) -> Result<MomentReport> {
    if replicates < MIN_MOMENT_REPLICATES {
        return Err(Error::InsufficientReplicates { needed: MIN_MOMENT_REPLICATES, got: replicates });
    }
    let samples = sample_proof_statistics(d, n, beta, replicates, seed, exec)?;
    let ht_v: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let denom: Vec<f64> = samples.iter().map(|s| 1.0 + 2.0 * s.0 + s.1).collect();
    let v4: Vec<f64> = samples.iter().map(|s| s.1 * s.1).collect();
    let (df, nf, b2) = (d as f64, n as f64, beta * beta);

    let ht_mean = MeanEstimate::from_samples(&ht_v);
    let mut rows = vec![DiagnosticRow {
        quantity: "E[HtV]",
        closed_form: 0.0,
        empirical: ht_mean.mean,
        deviation: ht_mean.mean.abs() / ht_mean.std_error,
        tolerance: Tolerance::StdErrors(5.0),
        pass: false,
    }];
    let relative = |quantity, closed_form: f64, empirical: f64, tol| DiagnosticRow {
        quantity,
        closed_form,
        empirical,
        deviation: (empirical - closed_form).abs() / closed_form.abs(),
        tolerance: Tolerance::Relative(tol),
        pass: false,
    };
    rows.push(relative("var(HtV)", b2 / nf, sample_variance(&ht_v), 0.05));
    rows.push(relative("E[1+2HtV+|V|^2]", 1.0 + b2 * df / nf, MeanEstimate::from_samples(&denom).mean, 0.01));
    rows.push(relative(
        "var(1+2HtV+|V|^2)",
        4.0 * b2 / nf + 2.0 * b2 * b2 * df / (nf * nf),
        sample_variance(&denom),
        0.10,
    ));
    rows.push(relative(
        "E[|V|^4]",
        2.0 * b2 * b2 * df / (nf * nf) + b2 * b2 * df * df / (nf * nf),
        MeanEstimate::from_samples(&v4).mean,
        0.05,
    ));
    for row in &mut rows {
        row.pass = match row.tolerance {
            Tolerance::Relative(t) | Tolerance::StdErrors(t) => row.deviation <= t,
        };
    }

    let mut w: Vec<f64> = samples.iter().map(|s| s.2).collect();
    w.sort_by(f64::total_cmp);
    let w_quantiles = [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&q| (q, quantile(&w, q))).collect();
    let w_exceedance = [0.1, 0.2]
        .iter()
        .map(|&eps| (eps, w.iter().filter(|x| x.abs() > eps).count() as f64 / w.len() as f64))
        .collect();
    let scaled_denominator = denom.iter().sum::<f64>() / denom.len() as f64 * nf / df;

    Ok(MomentReport {
        d,
        n,
        beta,
        replicates,
        rows,
        w_quantiles,
        w_exceedance,
        scaled_denominator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::q_function;

    fn est(p: f64, hw: f64) -> ErrorEstimate {
        ErrorEstimate {
            p_hat: p,
            ci_low: p - hw,
            ci_high: p + hw,
            trials: 1000,
            resample_events: 0,
            std_error: hw / 1.96,
            valid: true,
        }
    }

    #[test]
    fn power_rule_rounds_exact_powers() {
        let rule = NRule::Power { gamma: 0.25 };
        let ns: Vec<usize> = [64, 256, 1024, 4096].iter().enumerate().map(|(i, &d)| rule.n_for(d, i)).collect();
        assert_eq!(ns, vec![3, 4, 6, 8]);
        assert_eq!(NRule::Power { gamma: 0.5 }.n_for(10_000, 0), 100);
        assert_eq!(NRule::Power { gamma: 0.5 }.n_for(1000, 0), 32);
        assert_eq!(NRule::Explicit(vec![5, 9]).n_for(0, 1), 9);
    }

    #[test]
    fn trend_examples() {
        let flat = vec![est(0.5, 0.01); 3];
        assert!(trend_verdict(&flat, 0.5).is_pass());
        let falling = vec![est(0.45, 0.01), est(0.35, 0.01), est(0.25, 0.01)];
        assert!(matches!(trend_verdict(&falling, 0.2), TrendVerdict::Fail(_)));
        assert!(matches!(trend_verdict(&flat[..2], 0.5), TrendVerdict::Inconclusive(_)));
        let short = vec![est(0.1, 0.01), est(0.2, 0.01), est(0.3, 0.01)];
        assert!(matches!(trend_verdict(&short, 0.43), TrendVerdict::Fail(_)));
        // Noise-level dips are tolerated.
        let noisy = vec![est(0.30, 0.02), est(0.295, 0.02), est(0.42, 0.02)];
        assert!(trend_verdict(&noisy, 0.43).is_pass());
    }

    #[test]
    fn plan_validation() {
        let ok = SweepPlan::new(vec![16, 32], NRule::Power { gamma: 0.5 }, Family::Sphere { alpha: 2.0 }, vec![ClassifierSpec::MatchedFilter], 1);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.n_rule = NRule::Power { gamma: 1.0 };
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.d_grid = vec![];
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.test_points_per_replicate = 9;
        bad.replicates_per_theta = 10;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.family = Family::SparseExp { a: 1.5, alpha: 2.0 };
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.n_rule = NRule::Explicit(vec![3]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn estimate_requires_enough_trials() {
        let theta = theta_sphere(&[1.0, 0.0], 2.0).unwrap();
        let cfg = EstimateConfig::new(9, 10, 0);
        assert!(estimate_error(&ClassifierSpec::BayesOracle, &theta, 5, &cfg).is_err());
    }

    #[test]
    fn coin_flip_is_half() {
        let theta = theta_sphere(&[0.6, 0.8, 0.0], 4.0).unwrap();
        let cfg = EstimateConfig::new(500, 200, 77);
        let e = estimate_error(&ClassifierSpec::CoinFlip, &theta, 5, &cfg).unwrap();
        assert!(e.ci_low <= 0.5 && 0.5 <= e.ci_high, "{e:?}");
        assert_eq!(e.trials, 100_000);
    }

    #[test]
    fn untrainable_replicates_are_resampled() {
        let theta = theta_sphere(&[0.6, 0.8], 2.0).unwrap();
        // n = 2: half of all draws miss a class.
        let cfg = EstimateConfig::new(50, 200, 3);
        let e = estimate_error(&ClassifierSpec::PluginKnown, &theta, 2, &cfg).unwrap();
        assert!(e.valid);
        assert!(e.resample_events > 50, "{}", e.resample_events);
        assert_eq!(e.trials, 10_000);
        // n = 1 can never be trained.
        let e = estimate_error(&ClassifierSpec::PluginKnown, &theta, 1, &cfg).unwrap();
        assert!(!e.valid);
    }

    #[test]
    fn projected_and_full_evaluation_agree() {
        let theta = theta_sphere(&[0.0, 1.0, 0.0, 0.0], 2.0).unwrap();
        let specs = [ClassifierSpec::MatchedFilter, ClassifierSpec::BayesOracle, ClassifierSpec::PluginPooled];
        let mut cfg = EstimateConfig::new(200, 150, 5);
        let proj = estimate_errors(&specs, &theta, 6, &cfg).unwrap();
        cfg.eval = TestEval::Full;
        let full = estimate_errors(&specs, &theta, 6, &cfg).unwrap();
        for (p, f) in proj.iter().zip(&full) {
            assert!(p.z_distance(f) < 4.0, "{p:?} vs {f:?}");
        }
        let bayes = q_function(1.0).unwrap();
        assert!((full[1].p_hat - bayes).abs() < 4.0 * full[1].std_error);
    }

    #[test]
    fn sweep_rows_have_expected_shape() {
        let mut plan = SweepPlan::new(
            vec![8, 16],
            NRule::Fixed(4),
            Family::Sphere { alpha: 2.0 },
            vec![ClassifierSpec::MatchedFilter, ClassifierSpec::CoinFlip],
            9,
        );
        plan.theta_draws = 3;
        plan.replicates_per_theta = 10;
        plan.test_points_per_replicate = 20;
        let res = run_sweep(&plan, Execution::Sequential).unwrap();
        assert_eq!(res.rows.len(), 2 * 2 * (3 + 2));
        for d in [8, 16] {
            for cls in ["coin_flip", "matched_filter"] {
                let max = &res.row(d, cls, ThetaRef::Max).unwrap().estimate;
                let mean = &res.row(d, cls, ThetaRef::Mean).unwrap().estimate;
                assert!(max.p_hat >= mean.p_hat);
                assert_eq!(mean.trials, 3 * 200);
            }
        }
        let csv = res.to_csv(false);
        assert!(csv.starts_with(CSV_HEADER));
        let second = csv.lines().nth(1).unwrap();
        assert!(second.starts_with("8,4,sphere:alpha=2,coin_flip,max,200,"), "{second}");
        assert_eq!(res.metadata["sup_estimate"], "exact_by_symmetry");
    }

    #[test]
    fn moment_diagnostics_need_replicates() {
        assert!(matches!(
            moment_diagnostics(10, 2, 1.0, 10, 1, Execution::Sequential),
            Err(Error::InsufficientReplicates { .. })
        ));
    }
}
