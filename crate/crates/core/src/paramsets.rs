//! Constant-difficulty parameter families and sparsity classes.
//!
//! Every generator here is normalised so that `difficulty_of` of its output
//! equals the requested separation `α`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::analytic::{CovarianceModel, ModelParams, UNIT_TOL};
use crate::stats::ErrorEstimate;
use crate::{norm_sq, Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")))
    }
}

fn check_unit(h: &[f64]) -> Result<()> {
    let norm = norm_sq(h).sqrt();
    if (norm - 1.0).abs() <= UNIT_TOL {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("h must be a unit vector, got norm {norm}")))
    }
}

/// Uniform draw from the unit sphere `S^{d-1}`: a normalised standard
/// Gaussian vector.
pub fn sample_sphere_uniform<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("sphere sampling needs d >= 2, got {d}")));
    }
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm_sq(&v).sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            return Ok(v);
        }
    }
}

/// A member of the sphere family: means `±h`, covariance `β² I`, `β = 2/α`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereTheta {
    h: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl SphereTheta {
    pub fn new(h: Vec<f64>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_unit(&h)?;
        Ok(SphereTheta { h, alpha, beta: 2.0 / alpha })
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn to_model(&self) -> ModelParams {
        let minus = self.h.iter().map(|x| -x).collect();
        ModelParams::new(self.h.clone(), minus, CovarianceModel::Spherical { beta: self.beta })
            .expect("validated at construction")
    }
}

pub fn theta_sphere(h: &[f64], alpha: f64) -> Result<ModelParams> {
    Ok(SphereTheta::new(h.to_vec(), alpha)?.to_model())
}

/// Collinear means `m₁h`, `m₂h` with covariance `γ² h hᵀ + β² I`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingAwareTheta {
    pub h: Vec<f64>,
    pub m1: f64,
    pub m2: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl SensingAwareTheta {
    /// Places the means symmetrically about `midpoint` with
    /// `|m₁ − m₂| = α √(γ² + β²)`.
    pub fn new(h: Vec<f64>, gamma: f64, beta: f64, alpha: f64, midpoint: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_unit(&h)?;
        if !(gamma >= 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sensing-aware family needs gamma >= 0 and beta > 0 (gamma = {gamma}, beta = {beta})"
            )));
        }
        let half_gap = 0.5 * alpha * (gamma * gamma + beta * beta).sqrt();
        Ok(SensingAwareTheta {
            h,
            m1: midpoint + half_gap,
            m2: midpoint - half_gap,
            gamma,
            beta,
        })
    }

    pub fn to_model(&self) -> Result<ModelParams> {
        let plus = self.h.iter().map(|x| self.m1 * x).collect();
        let minus = self.h.iter().map(|x| self.m2 * x).collect();
        let cov = CovarianceModel::rank_one_plus_spherical(self.h.clone(), self.gamma, self.beta)?;
        ModelParams::new(plus, minus, cov)
    }
}

pub fn theta_sensing_aware(h: &[f64], gamma: f64, beta: f64, alpha: f64, midpoint: f64) -> Result<ModelParams> {
    SensingAwareTheta::new(h.to_vec(), gamma, beta, alpha, midpoint)?.to_model()
}

/// Decay law of the sorted magnitudes `|h_(k)|`, `k = 1..d`.
///
/// The exponential rate is called `a` here to keep it apart from the
/// separation `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// `|h_(k)| = M₁ aᵏ`, `0 < a < 1`.
    Exp { a: f64 },
    /// `|h_(k)| = M₂ k^{−b}`, `b > 1/2`.
    Poly { b: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsityClass {
    pub decay: Decay,
    pub d: usize,
}

impl SparsityClass {
    pub fn new(decay: Decay, d: usize) -> Result<Self> {
        match decay {
            Decay::Exp { a } if !(a > 0.0 && a < 1.0) => {
                return Err(Error::InvalidParameter(format!("exponential decay needs 0 < a < 1, got {a}")))
            }
            Decay::Poly { b } if !(b > 0.5 && b.is_finite()) => {
                return Err(Error::InvalidParameter(format!("polynomial decay needs b > 0.5, got {b}")))
            }
            _ => {}
        }
        if d == 0 {
            return Err(Error::InvalidParameter("sparsity class needs d >= 1".into()));
        }
        Ok(SparsityClass { decay, d })
    }

    /// Unnormalised decay value for rank `k` (1-based).
    pub fn decay_at(&self, k: usize) -> f64 {
        match self.decay {
            Decay::Exp { a } => a.powi(k as i32),
            Decay::Poly { b } => (k as f64).powf(-b),
        }
    }

    /// Normaliser `M(d)` making the magnitudes a unit vector.
    pub fn normalizer(&self) -> f64 {
        match self.decay {
            Decay::Exp { a } => {
                let a2 = a * a;
                ((1.0 - a2) / (a2 * (1.0 - a2.powi(self.d as i32)))).sqrt()
            }
            Decay::Poly { b } => {
                let s: f64 = (1..=self.d).map(|k| (k as f64).powf(-2.0 * b)).sum();
                s.powf(-0.5)
            }
        }
    }

    /// Magnitudes in decreasing order, `M(d)·decay(k)`.
    pub fn sorted_magnitudes(&self) -> Vec<f64> {
        let m = self.normalizer();
        (1..=self.d).map(|k| m * self.decay_at(k)).collect()
    }

    pub fn label(&self) -> String {
        match self.decay {
            Decay::Exp { a } => format!("exp:a={a}"),
            Decay::Poly { b } => format!("poly:b={b}"),
        }
    }
}

/// A unit vector whose sorted magnitudes follow the class's decay law, with
/// i.i.d. random signs and uniformly random coordinate placement.
pub fn make_sparse_h<R: Rng + ?Sized>(class: &SparsityClass, rng: &mut R) -> Vec<f64> {
    let mut h: Vec<f64> = class
        .sorted_magnitudes()
        .into_iter()
        .map(|m| if rng.random::<bool>() { m } else { -m })
        .collect();
    h.shuffle(rng);
    h
}

/// Recombines conditional error estimates over a set `H` (volume `vol`) and
/// its complement into an estimate over the whole sphere.
pub fn volume_split_errors(err_in: &ErrorEstimate, err_out: &ErrorEstimate, vol: f64) -> Result<ErrorEstimate> {
    if !(0.0..=1.0).contains(&vol) {
        return Err(Error::InvalidParameter(format!("volume must lie in [0, 1], got {vol}")));
    }
    if vol == 1.0 {
        return Ok(err_in.clone());
    }
    if vol == 0.0 {
        return Ok(err_out.clone());
    }
    let w_in = vol;
    let w_out = 1.0 - vol;
    let p_hat = w_in * err_in.p_hat + w_out * err_out.p_hat;
    let std_error = ((w_in * err_in.std_error).powi(2) + (w_out * err_out.std_error).powi(2)).sqrt();
    let lo = ((w_in * (err_in.p_hat - err_in.ci_low)).powi(2) + (w_out * (err_out.p_hat - err_out.ci_low)).powi(2)).sqrt();
    let hi = ((w_in * (err_in.ci_high - err_in.p_hat)).powi(2) + (w_out * (err_out.ci_high - err_out.p_hat)).powi(2)).sqrt();
    Ok(ErrorEstimate {
        p_hat,
        ci_low: (p_hat - lo).max(0.0),
        ci_high: (p_hat + hi).min(1.0),
        trials: err_in.trials + err_out.trials,
        resample_events: err_in.resample_events + err_out.resample_events,
        std_error,
        valid: err_in.valid && err_out.valid,
    })
}
