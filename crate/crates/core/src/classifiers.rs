//! Trainable decision rules behind one train/predict interface.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::analytic::{map_rule_weights, CovarianceModel, ModelParams, EIGEN_CUTOFF};
use crate::datagen::Dataset;
use crate::rng::splitmix64;
use crate::{check_dim, dot, Error, Label, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    BayesOracle,
    MatchedFilter,
    PluginML,
    MLProjection,
    SoftThreshold,
    CoinFlip,
}

/// How a trained rule maps a test vector to a label.
#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    /// `sign(weightᵀx + offset)`, ties to `+1`.
    Linear { weight: Vec<f64>, offset: f64 },
    Constant(Label),
    /// Fair coin keyed on `seed` and the test vector.
    Coin { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedRule {
    kind: RuleKind,
    decision: Decision,
    dim: usize,
    metadata: BTreeMap<String, String>,
}

impl TrainedRule {
    /// Linear rule; an all-zero weight degrades to the constant `+1` rule.
    pub fn from_linear(kind: RuleKind, weight: Vec<f64>, offset: f64) -> TrainedRule {
        let dim = weight.len();
        let mut metadata = BTreeMap::new();
        let decision = if weight.iter().all(|w| *w == 0.0) {
            metadata.insert("fallback".to_string(), "zero_weight".to_string());
            Decision::Constant(Label::Pos)
        } else {
            Decision::Linear { weight, offset }
        };
        TrainedRule { kind, decision, dim, metadata }
    }

    pub fn coin_flip(seed: u64, dim: usize) -> TrainedRule {
        TrainedRule {
            kind: RuleKind::CoinFlip,
            decision: Decision::Coin { seed },
            dim,
            metadata: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn decision(&self) -> &Decision {
        &self.decision
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn is_fallback(&self) -> bool {
        self.metadata.contains_key("fallback")
    }

    pub fn weight(&self) -> Option<&[f64]> {
        match &self.decision {
            Decision::Linear { weight, .. } => Some(weight),
            _ => None,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.decision {
            Decision::Linear { weight, offset } => Label::from_score(dot(weight, x) + offset),
            Decision::Constant(label) => *label,
            Decision::Coin { seed } => {
                // Order-independent hash so the coin ignores coordinate layout.
                let acc = x
                    .iter()
                    .fold(0u64, |acc, v| acc.wrapping_add(splitmix64(seed ^ splitmix64(v.to_bits()))));
                coin_label(*seed, acc)
            }
        })
    }
}

/// Fair coin outcome for key `key` under `seed`.
#[inline]
pub fn coin_label(seed: u64, key: u64) -> Label {
    if splitmix64(seed ^ splitmix64(key)) & 1 == 1 {
        Label::Pos
    } else {
        Label::Neg
    }
}

fn require_samples(data: &Dataset) -> Result<()> {
    if data.n() == 0 {
        Err(Error::InvalidParameter("training set is empty".into()))
    } else {
        Ok(())
    }
}

/// `Σᵢ yᵢ xᵢ`.
fn signed_sum(data: &Dataset) -> Vec<f64> {
    let mut w = vec![0.0; data.dim()];
    for (x, y) in data.iter() {
        let s = y.sign();
        for (wj, xj) in w.iter_mut().zip(x) {
            *wj += s * xj;
        }
    }
    w
}

/// `sign(x₀ᵀ Σᵢ yᵢxᵢ)`.
pub fn train_matched_filter(data: &Dataset) -> Result<TrainedRule> {
    require_samples(data)?;
    Ok(TrainedRule::from_linear(RuleKind::MatchedFilter, signed_sum(data), 0.0))
}

/// ML estimate of `h` in the sphere model, `(1/n) Σᵢ yᵢxᵢ`.
pub fn ml_direction(data: &Dataset) -> Vec<f64> {
    let inv_n = 1.0 / data.n() as f64;
    signed_sum(data).into_iter().map(|v| v * inv_n).collect()
}

pub fn train_ml_projection(data: &Dataset, beta: f64) -> Result<TrainedRule> {
    require_samples(data)?;
    let mut rule = TrainedRule::from_linear(RuleKind::MLProjection, ml_direction(data), 0.0);
    rule.metadata.insert("beta".into(), beta.to_string());
    Ok(rule)
}

/// Componentwise `sign(v)·max(|v| − λ, 0)`.
pub fn soft_threshold(v: &[f64], lambda: f64) -> Vec<f64> {
    v.iter().map(|x| x.signum() * (x.abs() - lambda).max(0.0)).collect()
}

/// `λ = c·β·sqrt(2 ln d / n)`.
pub fn universal_threshold(beta: f64, d: usize, n: usize, c: f64) -> f64 {
    c * beta * (2.0 * (d as f64).ln() / n as f64).sqrt()
}

pub fn train_soft_threshold(data: &Dataset, beta: f64, c: f64) -> Result<TrainedRule> {
    require_samples(data)?;
    if !(c > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("soft threshold needs c > 0 and beta > 0 (c = {c}, beta = {beta})")));
    }
    let lambda = universal_threshold(beta, data.dim(), data.n(), c);
    let shrunk = soft_threshold(&ml_direction(data), lambda);
    let kept = shrunk.iter().filter(|v| **v != 0.0).count();
    let mut rule = TrainedRule::from_linear(RuleKind::SoftThreshold, shrunk, 0.0);
    rule.metadata.insert("lambda".into(), lambda.to_string());
    rule.metadata.insert("kept".into(), kept.to_string());
    Ok(rule)
}

/// Covariance used by the plug-in rule.
#[derive(Clone, Debug, PartialEq)]
pub enum CovMode {
    Known(CovarianceModel),
    /// Biased (1/n) pooled within-class estimate.
    PooledML,
}

/// MAP rule with class-mean estimates plugged in.
pub fn train_plugin_ml(data: &Dataset, cov_mode: &CovMode) -> Result<TrainedRule> {
    require_samples(data)?;
    let d = data.dim();
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];
    for (x, y) in data.iter() {
        let k = (y == Label::Pos) as usize;
        counts[k] += 1;
        for (s, xj) in sums[k].iter_mut().zip(x) {
            *s += xj;
        }
    }
    if counts.contains(&0) {
        return Err(Error::Untrainable(format!(
            "plug-in rule needs both classes (n- = {}, n+ = {})",
            counts[0], counts[1]
        )));
    }
    let mean_minus: Vec<f64> = sums[0].iter().map(|s| s / counts[0] as f64).collect();
    let mean_plus: Vec<f64> = sums[1].iter().map(|s| s / counts[1] as f64).collect();
    let delta: Vec<f64> = mean_plus.iter().zip(&mean_minus).map(|(a, b)| a - b).collect();
    let mid: Vec<f64> = mean_plus.iter().zip(&mean_minus).map(|(a, b)| 0.5 * (a + b)).collect();

    let weight = match cov_mode {
        CovMode::Known(cov) => cov.precision_apply(&delta)?,
        CovMode::PooledML => {
            if data.n() < 2 {
                return Err(Error::Untrainable("pooled covariance needs n >= 2".into()));
            }
            let residuals = DMatrix::from_fn(data.n(), d, |i, j| {
                let mu = if data.label(i) == Label::Pos { &mean_plus } else { &mean_minus };
                data.row(i)[j] - mu[j]
            });
            pooled_precision_apply(&residuals, &delta, d <= data.n())
        }
    };
    let offset = -dot(&weight, &mid);
    let mut rule = TrainedRule::from_linear(RuleKind::PluginML, weight, offset);
    let mode = match cov_mode {
        CovMode::Known(_) => "known",
        CovMode::PooledML => "pooled_ml",
    };
    rule.metadata.insert("cov_mode".into(), mode.into());
    Ok(rule)
}

/// `Σ̂⁺ v` for `Σ̂ = CᵀC / n`, `C` the `n × d` residual matrix.
///
/// The `d × d` route decomposes `Σ̂` directly. The Gram route uses
/// `(CᵀC)⁺ = Cᵀ (CCᵀ)⁺² C`, which only needs an `n × n` eigendecomposition.
/// Both apply the same relative eigenvalue cutoff.
pub(crate) fn pooled_precision_apply(residuals: &DMatrix<f64>, v: &[f64], direct: bool) -> Vec<f64> {
    let n = residuals.nrows() as f64;
    let v = DVector::from_column_slice(v);
    if direct {
        let sigma = residuals.tr_mul(residuals) / n;
        let eig = SymmetricEigen::new(sigma);
        let cut = EIGEN_CUTOFF * eig.eigenvalues.max().max(0.0);
        let mut coeffs = eig.eigenvectors.tr_mul(&v);
        for (c, &l) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
            *c = if l > cut && l > 0.0 { *c / l } else { 0.0 };
        }
        (&eig.eigenvectors * coeffs).as_slice().to_vec()
    } else {
        let gram = residuals * residuals.transpose();
        let eig = SymmetricEigen::new(gram);
        let cut = EIGEN_CUTOFF * eig.eigenvalues.max().max(0.0);
        let u = residuals * &v;
        let mut coeffs = eig.eigenvectors.tr_mul(&u);
        for (c, &l) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
            *c = if l > cut && l > 0.0 { *c / (l * l) } else { 0.0 };
        }
        let t = &eig.eigenvectors * coeffs;
        (residuals.tr_mul(&t) * n).as_slice().to_vec()
    }
}

/// The MAP rule with the true parameters.
pub fn train_bayes_oracle(theta: &ModelParams) -> Result<TrainedRule> {
    let (weight, offset) = map_rule_weights(theta)?;
    Ok(TrainedRule::from_linear(RuleKind::BayesOracle, weight, offset))
}

/// Something that can produce a [`TrainedRule`] for one replicate.
pub trait Trainer: Sync {
    fn name(&self) -> String;

    /// Whether [`Trainer::train`] reads the training set.
    fn uses_training_data(&self) -> bool {
        true
    }

    /// `data` is `None` only when `uses_training_data` is false.
    /// `stream_seed` feeds rules that carry their own randomness.
    fn train(&self, data: Option<&Dataset>, theta: &ModelParams, stream_seed: u64) -> Result<TrainedRule>;
}

/// The classifier zoo as configured in sweeps.
///
/// Rules needing a noise level or covariance take it from the true `θ`
/// (known-covariance setting).
#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierSpec {
    BayesOracle,
    MatchedFilter,
    PluginKnown,
    PluginPooled,
    MlProjection,
    SoftThreshold { c: f64 },
    CoinFlip,
}

impl ClassifierSpec {
    pub fn label(&self) -> String {
        match self {
            ClassifierSpec::BayesOracle => "bayes_oracle".into(),
            ClassifierSpec::MatchedFilter => "matched_filter".into(),
            ClassifierSpec::PluginKnown => "plugin_known".into(),
            ClassifierSpec::PluginPooled => "plugin_pooled".into(),
            ClassifierSpec::MlProjection => "ml_projection".into(),
            ClassifierSpec::SoftThreshold { c } => format!("soft_threshold:c={c}"),
            ClassifierSpec::CoinFlip => "coin_flip".into(),
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "bayes_oracle" => ClassifierSpec::BayesOracle,
            "matched_filter" => ClassifierSpec::MatchedFilter,
            "plugin_known" => ClassifierSpec::PluginKnown,
            "plugin_pooled" => ClassifierSpec::PluginPooled,
            "ml_projection" => ClassifierSpec::MlProjection,
            "coin_flip" => ClassifierSpec::CoinFlip,
            "soft_threshold" => ClassifierSpec::SoftThreshold { c: 1.0 },
            other => {
                let c = other
                    .strip_prefix("soft_threshold:c=")
                    .and_then(|c| c.parse::<f64>().ok())
                    .filter(|c| *c > 0.0 && c.is_finite())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown classifier '{other}'")))?;
                ClassifierSpec::SoftThreshold { c }
            }
        })
    }
}

impl Trainer for ClassifierSpec {
    fn name(&self) -> String {
        self.label()
    }

    fn uses_training_data(&self) -> bool {
        !matches!(self, ClassifierSpec::BayesOracle | ClassifierSpec::CoinFlip)
    }

    fn train(&self, data: Option<&Dataset>, theta: &ModelParams, stream_seed: u64) -> Result<TrainedRule> {
        let need = || data.ok_or_else(|| Error::InvalidParameter(format!("{} needs training data", self.label())));
        match self {
            ClassifierSpec::BayesOracle => train_bayes_oracle(theta),
            ClassifierSpec::CoinFlip => Ok(TrainedRule::coin_flip(stream_seed, theta.dim())),
            ClassifierSpec::MatchedFilter => train_matched_filter(need()?),
            ClassifierSpec::PluginKnown => train_plugin_ml(need()?, &CovMode::Known(theta.cov().clone())),
            ClassifierSpec::PluginPooled => train_plugin_ml(need()?, &CovMode::PooledML),
            ClassifierSpec::MlProjection => train_ml_projection(need()?, theta.cov().noise_scale()),
            ClassifierSpec::SoftThreshold { c } => train_soft_threshold(need()?, theta.cov().noise_scale(), *c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_dataset;
    use crate::paramsets::{sample_sphere_uniform, theta_sphere};
    use crate::rng::rng_for;
    use proptest::prelude::*;
    use rand::Rng;

    fn ds(rows: Vec<Vec<f64>>, ys: Vec<Label>) -> Dataset {
        Dataset::from_rows(rows, ys).unwrap()
    }

    #[test]
    fn matched_filter_examples() {
        let data = ds(vec![vec![1.0, 0.0]], vec![Label::Pos]);
        let rule = train_matched_filter(&data).unwrap();
        assert_eq!(rule.predict(&[0.3, -2.0]).unwrap(), Label::Pos);
        assert_eq!(rule.predict(&[-0.3, 2.0]).unwrap(), Label::Neg);
        assert!(rule.predict(&[1.0]).is_err());

        let cancel = ds(vec![vec![1.0, 2.0], vec![1.0, 2.0]], vec![Label::Pos, Label::Neg]);
        let rule = train_matched_filter(&cancel).unwrap();
        assert!(rule.is_fallback());
        assert_eq!(rule.decision(), &Decision::Constant(Label::Pos));
        assert_eq!(rule.predict(&[-5.0, -5.0]).unwrap(), Label::Pos);
    }

    #[test]
    fn plugin_nearest_mean_with_identity() {
        let data = ds(vec![vec![2.0, 1.0], vec![0.0, -1.0]], vec![Label::Pos, Label::Neg]);
        let cov = CovarianceModel::spherical(1.0).unwrap();
        let rule = train_plugin_ml(&data, &CovMode::Known(cov)).unwrap();
        // Δ = (2, 2), midpoint (1, 0)
        let mut rng = rng_for(4, &[]);
        for _ in 0..100 {
            let x = [rng.random::<f64>() * 6.0 - 3.0, rng.random::<f64>() * 6.0 - 3.0];
            let expect = Label::from_score(2.0 * (x[0] - 1.0) + 2.0 * x[1]);
            assert_eq!(rule.predict(&x).unwrap(), expect);
        }
    }

    #[test]
    fn plugin_needs_both_classes() {
        let data = ds(vec![vec![1.0], vec![2.0]], vec![Label::Pos, Label::Pos]);
        let err = train_plugin_ml(&data, &CovMode::PooledML).unwrap_err();
        assert!(matches!(err, Error::Untrainable(_)));
    }

    #[test]
    fn pooled_degenerate_data_falls_back() {
        let data = ds(vec![vec![0.5, 0.5]; 4], vec![Label::Pos, Label::Neg, Label::Pos, Label::Neg]);
        let rule = train_plugin_ml(&data, &CovMode::PooledML).unwrap();
        assert!(rule.is_fallback());
        assert_eq!(rule.predict(&[-3.0, 1.0]).unwrap(), Label::Pos);
    }

    #[test]
    fn pooled_routes_agree() {
        let mut rng = rng_for(8, &[]);
        for (n, d) in [(6, 20), (12, 5), (9, 9)] {
            let c = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() - 0.5);
            let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let a = pooled_precision_apply(&c, &v, true);
            let b = pooled_precision_apply(&c, &v, false);
            let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-8 * scale, "n={n} d={d}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn soft_threshold_examples() {
        let out = soft_threshold(&[0.9, 0.1], 0.2);
        assert!((out[0] - 0.7).abs() < 1e-15 && out[1] == 0.0);
        assert_eq!(soft_threshold(&[-0.5, 0.3], 0.0), vec![-0.5, 0.3]);
        assert_eq!(soft_threshold(&[-0.5], 0.2)[0], -0.3);
        assert!(train_soft_threshold(&ds(vec![vec![1.0]], vec![Label::Pos]), 1.0, 0.0).is_err());
    }

    #[test]
    fn tiny_threshold_matches_ml_projection() {
        let mut rng = rng_for(12, &[]);
        let h = sample_sphere_uniform(30, &mut rng).unwrap();
        let theta = theta_sphere(&h, 2.0).unwrap();
        let data = gen_dataset(&theta, 8, 3).unwrap();
        let st = train_soft_threshold(&data, 1.0, 1e-300).unwrap();
        let ml = train_ml_projection(&data, 1.0).unwrap();
        let test = gen_dataset(&theta, 500, 4).unwrap();
        for (x, _) in test.iter() {
            assert_eq!(st.predict(x).unwrap(), ml.predict(x).unwrap());
        }
    }

    #[test]
    fn noiseless_ml_projection_recovers_h() {
        let mut rng = rng_for(13, &[]);
        let h = sample_sphere_uniform(12, &mut rng).unwrap();
        let theta = theta_sphere(&h, 2.0 / 1e-12).unwrap();
        let data = gen_dataset(&theta, 5, 1).unwrap();
        let est = ml_direction(&data);
        for (a, b) in est.iter().zip(&h) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn bayes_oracle_on_mean_is_positive() {
        let theta = theta_sphere(&[0.6, 0.8], 1.0).unwrap();
        let rule = train_bayes_oracle(&theta).unwrap();
        assert_eq!(rule.predict(theta.mu_plus()).unwrap(), Label::Pos);
        assert_eq!(rule.predict(theta.mu_minus()).unwrap(), Label::Neg);
    }

    #[test]
    fn coin_flip_is_fair() {
        let rule = TrainedRule::coin_flip(99, 3);
        let mut rng = rng_for(5, &[]);
        let pos = (0..20_000)
            .filter(|_| {
                let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                rule.predict(&x).unwrap() == Label::Pos
            })
            .count();
        assert!((pos as f64 / 20_000.0 - 0.5).abs() < 5.0 * 0.5 / (20_000f64).sqrt());
        // Deterministic for a fixed input.
        assert_eq!(rule.predict(&[1.0, 2.0, 3.0]).unwrap(), rule.predict(&[1.0, 2.0, 3.0]).unwrap());
    }

    #[test]
    fn spec_labels_round_trip() {
        for spec in [
            ClassifierSpec::BayesOracle,
            ClassifierSpec::MatchedFilter,
            ClassifierSpec::PluginKnown,
            ClassifierSpec::PluginPooled,
            ClassifierSpec::MlProjection,
            ClassifierSpec::SoftThreshold { c: 0.75 },
            ClassifierSpec::CoinFlip,
        ] {
            assert_eq!(spec.label().parse::<ClassifierSpec>().unwrap(), spec);
        }
        assert_eq!("soft_threshold".parse::<ClassifierSpec>().unwrap(), ClassifierSpec::SoftThreshold { c: 1.0 });
        assert!("knn".parse::<ClassifierSpec>().is_err());
        assert!("soft_threshold:c=-1".parse::<ClassifierSpec>().is_err());
    }

    fn linear_specs() -> Vec<ClassifierSpec> {
        vec![
            ClassifierSpec::MatchedFilter,
            ClassifierSpec::PluginKnown,
            ClassifierSpec::PluginPooled,
            ClassifierSpec::MlProjection,
            ClassifierSpec::SoftThreshold { c: 0.3 },
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn positive_scaling_keeps_predictions(seed in any::<u64>(), scale in 1e-3f64..1e3) {
            let mut rng = rng_for(seed, &[]);
            let w: Vec<f64> = (0..6).map(|_| rng.random::<f64>() - 0.5).collect();
            let b = rng.random::<f64>() - 0.5;
            let a = TrainedRule::from_linear(RuleKind::MatchedFilter, w.clone(), b);
            let s = TrainedRule::from_linear(RuleKind::MatchedFilter, w.iter().map(|x| x * scale).collect(), b * scale);
            for _ in 0..50 {
                let x: Vec<f64> = (0..6).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
                prop_assert_eq!(a.predict(&x).unwrap(), s.predict(&x).unwrap());
            }
        }

        #[test]
        fn label_flip_negates_linear_rules(seed in any::<u64>()) {
            let mut rng = rng_for(seed, &[]);
            let h = sample_sphere_uniform(9, &mut rng).unwrap();
            let theta = theta_sphere(&h, 1.5).unwrap();
            let data = gen_dataset(&theta, 12, seed).unwrap();
            let flipped = data.with_flipped_labels();
            let test = gen_dataset(&theta, 40, seed ^ 1).unwrap();
            for spec in linear_specs() {
                let a = spec.train(Some(&data), &theta, 0);
                let b = spec.train(Some(&flipped), &theta, 0);
                let (a, b) = match (a, b) { (Ok(a), Ok(b)) => (a, b), _ => continue };
                if a.is_fallback() || b.is_fallback() { continue; }
                for (x, _) in test.iter() {
                    prop_assert_eq!(a.predict(x).unwrap(), b.predict(x).unwrap().flipped(), "{}", spec);
                }
            }
        }

        #[test]
        fn permutation_equivariance(seed in any::<u64>()) {
            let mut rng = rng_for(seed, &[]);
            let d = 8;
            let h = sample_sphere_uniform(d, &mut rng).unwrap();
            let theta = theta_sphere(&h, 2.0).unwrap();
            let data = gen_dataset(&theta, 14, seed).unwrap();
            let test = gen_dataset(&theta, 40, seed ^ 7).unwrap();
            let mut perm: Vec<usize> = (0..d).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let h_perm: Vec<f64> = perm.iter().map(|&p| h[p]).collect();
            let theta_perm = theta_sphere(&h_perm, 2.0).unwrap();
            let data_perm = data.permuted(&perm);
            let test_perm = test.permuted(&perm);
            let mut specs = linear_specs();
            specs.push(ClassifierSpec::BayesOracle);
            specs.push(ClassifierSpec::CoinFlip);
            for spec in specs {
                let a = spec.train(Some(&data), &theta, 5);
                let b = spec.train(Some(&data_perm), &theta_perm, 5);
                let (a, b) = match (a, b) { (Ok(a), Ok(b)) => (a, b), _ => continue };
                for i in 0..test.n() {
                    prop_assert_eq!(a.predict(test.row(i)).unwrap(), b.predict(test_perm.row(i)).unwrap(), "{}", spec);
                }
            }
        }

        #[test]
        fn matched_filter_equals_ml_projection(seed in any::<u64>(), n in 1usize..20) {
            let mut rng = rng_for(seed, &[]);
            let h = sample_sphere_uniform(15, &mut rng).unwrap();
            let theta = theta_sphere(&h, 1.0).unwrap();
            let data = gen_dataset(&theta, n, seed).unwrap();
            let mf = train_matched_filter(&data).unwrap();
            let ml = train_ml_projection(&data, 2.0).unwrap();
            let test = gen_dataset(&theta, 50, seed ^ 3).unwrap();
            for (x, _) in test.iter() {
                prop_assert_eq!(mf.predict(x).unwrap(), ml.predict(x).unwrap());
            }
        }
    }
}
