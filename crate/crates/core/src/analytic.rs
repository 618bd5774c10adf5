//! Closed-form quantities: the Gaussian tail function, Bayes error, the MAP
//! rule, structured covariance algebra and the Gaussian quadratic-form
//! variance identity.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::paramsets::sample_sphere_uniform;
use crate::stats::MeanEstimate;
use crate::{check_dim, dot, norm_sq, Error, Label, Result};

/// Relative eigenvalue cutoff for pseudoinverses and PSD checks.
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Tolerance on `‖h‖ = 1` for unit-vector parameters.
pub const UNIT_TOL: f64 = 1e-12;

/// Separations at or below this are treated as identical classes.
pub const MIN_ALPHA: f64 = 1e-12;

/// Standard normal upper tail `Q(t) = P(N(0,1) > t)`.
pub fn q_function(t: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::Domain("Q-function of NaN".into()));
    }
    Ok(normal_tail(t))
}

#[inline]
pub(crate) fn normal_tail(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// A covariance matrix in one of three structured representations.
#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceModel {
    /// `β² I`.
    Spherical { beta: f64 },
    /// `γ² h hᵀ + β² I` with `‖h‖ = 1`.
    RankOnePlusSpherical { h: Vec<f64>, gamma: f64, beta: f64 },
    Dense(DenseCovariance),
}

/// Symmetric PSD matrix together with its eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseCovariance {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    cutoff: f64,
}

impl DenseCovariance {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidParameter(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_symmetric(&matrix)?;
        let eig = SymmetricEigen::new(matrix.clone());
        let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -EIGEN_CUTOFF * max || (max == 0.0 && min < 0.0) {
            return Err(Error::NotPsd { min, max });
        }
        Ok(DenseCovariance {
            matrix,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            cutoff: EIGEN_CUTOFF * max,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Number of eigenvalues above the pseudoinverse cutoff.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > self.cutoff).count()
    }

    /// `Q f(Λ) Qᵀ v` for a spectral function `f`.
    fn spectral_apply(&self, v: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        let mut coeffs = self.eigenvectors.tr_mul(&v);
        for (c, &l) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= f(l);
        }
        (&self.eigenvectors * coeffs).as_slice().to_vec()
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if asym > 1e-10 * scale {
        Err(Error::NotSymmetric(asym))
    } else {
        Ok(())
    }
}

impl CovarianceModel {
    pub fn spherical(beta: f64) -> Result<Self> {
        let cov = CovarianceModel::Spherical { beta };
        cov.validate()?;
        Ok(cov)
    }

    pub fn rank_one_plus_spherical(h: Vec<f64>, gamma: f64, beta: f64) -> Result<Self> {
        let cov = CovarianceModel::RankOnePlusSpherical { h, gamma, beta };
        cov.validate()?;
        Ok(cov)
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        Ok(CovarianceModel::Dense(DenseCovariance::new(matrix)?))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
            }
        };
        match self {
            CovarianceModel::Spherical { beta } => positive("beta", *beta),
            CovarianceModel::RankOnePlusSpherical { h, gamma, beta } => {
                positive("beta", *beta)?;
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
                }
                check_unit(h)
            }
            CovarianceModel::Dense(_) => Ok(()),
        }
    }

    /// Fixed dimension of the representation, if it has one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            CovarianceModel::Spherical { .. } => None,
            CovarianceModel::RankOnePlusSpherical { h, .. } => Some(h.len()),
            CovarianceModel::Dense(dc) => Some(dc.matrix.nrows()),
        }
    }

    fn check_vec(&self, v: &[f64]) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, v.len()),
            None => Ok(()),
        }
    }

    /// `(Σ⁺)^{1/2} v`.
    pub fn whiten_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_vec(v)?;
        Ok(match self {
            CovarianceModel::Spherical { beta } => v.iter().map(|x| x / beta).collect(),
            CovarianceModel::RankOnePlusSpherical { h, gamma, beta } => {
                let shrink = beta / (beta * beta + gamma * gamma).sqrt() - 1.0;
                let proj = dot(h, v);
                v.iter().zip(h).map(|(x, hi)| (x + shrink * proj * hi) / beta).collect()
            }
            CovarianceModel::Dense(dc) => {
                let cut = dc.cutoff;
                dc.spectral_apply(v, |l| if l > cut { 1.0 / l.sqrt() } else { 0.0 })
            }
        })
    }

    /// `Σ^{1/2} z`.
    pub fn cov_sqrt_apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_vec(z)?;
        Ok(match self {
            CovarianceModel::Spherical { beta } => z.iter().map(|x| x * beta).collect(),
            CovarianceModel::RankOnePlusSpherical { h, gamma, beta } => {
                let stretch = (beta * beta + gamma * gamma).sqrt() - beta;
                let proj = dot(h, z);
                z.iter().zip(h).map(|(x, hi)| beta * x + stretch * proj * hi).collect()
            }
            CovarianceModel::Dense(dc) => dc.spectral_apply(z, |l| l.max(0.0).sqrt()),
        })
    }

    /// `Σ⁺ v`.
    pub fn precision_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            CovarianceModel::Dense(dc) => {
                self.check_vec(v)?;
                let cut = dc.cutoff;
                Ok(dc.spectral_apply(v, |l| if l > cut { 1.0 / l } else { 0.0 }))
            }
            _ => {
                let half = self.whiten_apply(v)?;
                self.whiten_apply(&half)
            }
        }
    }

    /// `wᵀ Σ w`.
    pub fn quadratic_form(&self, w: &[f64]) -> Result<f64> {
        self.check_vec(w)?;
        Ok(match self {
            CovarianceModel::Spherical { beta } => beta * beta * norm_sq(w),
            CovarianceModel::RankOnePlusSpherical { h, gamma, beta } => {
                let proj = dot(h, w);
                beta * beta * norm_sq(w) + gamma * gamma * proj * proj
            }
            CovarianceModel::Dense(dc) => {
                let wv = DVector::from_column_slice(w);
                wv.dot(&(&dc.matrix * &wv))
            }
        })
    }

    /// Isotropic noise level: `β`, or `sqrt(tr Σ / d)` for dense matrices.
    pub fn noise_scale(&self) -> f64 {
        match self {
            CovarianceModel::Spherical { beta } | CovarianceModel::RankOnePlusSpherical { beta, .. } => *beta,
            CovarianceModel::Dense(dc) => (dc.matrix.trace() / dc.matrix.nrows() as f64).sqrt(),
        }
    }

    /// Materialises `Σ` as a `d × d` matrix.
    pub fn to_dense(&self, d: usize) -> Result<DMatrix<f64>> {
        if let Some(own) = self.dim() {
            check_dim(own, d)?;
        }
        Ok(match self {
            CovarianceModel::Spherical { beta } => DMatrix::identity(d, d) * (beta * beta),
            CovarianceModel::RankOnePlusSpherical { h, gamma, beta } => {
                let hv = DVector::from_column_slice(h);
                DMatrix::identity(d, d) * (beta * beta) + &hv * hv.transpose() * (gamma * gamma)
            }
            CovarianceModel::Dense(dc) => dc.matrix.clone(),
        })
    }
}

fn check_unit(h: &[f64]) -> Result<()> {
    let norm = norm_sq(h).sqrt();
    if (norm - 1.0).abs() <= UNIT_TOL {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("expected a unit vector, got norm {norm}")))
    }
}

/// The tuple `θ = (μ₊₁, μ₋₁, Σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    mu_plus: Vec<f64>,
    mu_minus: Vec<f64>,
    cov: CovarianceModel,
}

impl ModelParams {
    pub fn new(mu_plus: Vec<f64>, mu_minus: Vec<f64>, cov: CovarianceModel) -> Result<Self> {
        check_dim(mu_plus.len(), mu_minus.len())?;
        if mu_plus.is_empty() {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if let Some(d) = cov.dim() {
            check_dim(mu_plus.len(), d)?;
        }
        cov.validate()?;
        if mu_plus == mu_minus {
            return Err(Error::DegenerateModel { alpha: 0.0 });
        }
        Ok(ModelParams { mu_plus, mu_minus, cov })
    }

    pub fn dim(&self) -> usize {
        self.mu_plus.len()
    }

    pub fn mu_plus(&self) -> &[f64] {
        &self.mu_plus
    }

    pub fn mu_minus(&self) -> &[f64] {
        &self.mu_minus
    }

    pub fn mean_of(&self, y: Label) -> &[f64] {
        match y {
            Label::Pos => &self.mu_plus,
            Label::Neg => &self.mu_minus,
        }
    }

    pub fn cov(&self) -> &CovarianceModel {
        &self.cov
    }

    /// `μ = (μ₊₁ + μ₋₁) / 2`.
    pub fn midpoint(&self) -> Vec<f64> {
        self.mu_plus.iter().zip(&self.mu_minus).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// `Δ = μ₊₁ − μ₋₁`.
    pub fn delta(&self) -> Vec<f64> {
        self.mu_plus.iter().zip(&self.mu_minus).map(|(a, b)| a - b).collect()
    }

    /// Opaque tag identifying the parameter values.
    pub fn fingerprint(&self) -> u64 {
        let mut acc = crate::rng::splitmix64(self.dim() as u64);
        for x in self.mu_plus.iter().chain(&self.mu_minus) {
            acc = crate::rng::splitmix64(acc ^ x.to_bits());
        }
        acc ^ crate::rng::splitmix64(self.cov.noise_scale().to_bits())
    }
}

/// Separation `α` and the corresponding Bayes error `Q(α/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Difficulty {
    pub alpha: f64,
    pub bayes_error: f64,
}

impl Difficulty {
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > MIN_ALPHA) {
            return Err(Error::DegenerateModel { alpha });
        }
        Ok(Difficulty {
            alpha,
            bayes_error: normal_tail(alpha / 2.0),
        })
    }
}

/// `α = ‖(Σ⁺)^{1/2}(μ₊₁ − μ₋₁)‖` and the Bayes error of `θ`.
pub fn difficulty_of(theta: &ModelParams) -> Result<Difficulty> {
    let white = theta.cov.whiten_apply(&theta.delta())?;
    Difficulty::from_alpha(norm_sq(&white).sqrt())
}

/// Bayes error `Q(α/2)` for a given separation.
pub fn bayes_error(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(normal_tail(alpha / 2.0))
}

/// Weight `Σ⁺Δ` and offset `−wᵀμ` of the MAP rule.
pub fn map_rule_weights(theta: &ModelParams) -> Result<(Vec<f64>, f64)> {
    let w = theta.cov.precision_apply(&theta.delta())?;
    let offset = -dot(&w, &theta.midpoint());
    Ok((w, offset))
}

/// The MAP rule `sign(Δᵀ Σ⁺ (x − μ))`, ties to `+1`.
pub fn map_classify(theta: &ModelParams, x: &[f64]) -> Result<Label> {
    check_dim(theta.dim(), x.len())?;
    let score = match theta.cov {
        // Σ⁺ is a positive multiple of I: drop it, the sign is unchanged.
        CovarianceModel::Spherical { .. } => {
            let mid = theta.midpoint();
            theta
                .delta()
                .iter()
                .zip(x.iter().zip(&mid))
                .map(|(dl, (xi, mi))| dl * (xi - mi))
                .sum()
        }
        _ => {
            let w = theta.cov.precision_apply(&theta.delta())?;
            let mid = theta.midpoint();
            w.iter().zip(x.iter().zip(&mid)).map(|(wi, (xi, mi))| wi * (xi - mi)).sum()
        }
    };
    Ok(Label::from_score(score))
}

/// `var(εᵀΛε) = 2 tr(ΛΣΛΣ) + 4 μᵀΛΣΛμ` for `ε ~ N(μ, Σ)`.
pub fn gaussian_quadratic_variance(mu: &[f64], cov: &CovarianceModel, lambda: &DMatrix<f64>) -> Result<f64> {
    let d = mu.len();
    if lambda.nrows() != d || lambda.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: lambda.nrows().max(lambda.ncols()),
        });
    }
    check_symmetric(lambda).map_err(|e| Error::Domain(format!("Lambda: {e}")))?;
    let sigma = cov.to_dense(d)?;
    let ls = lambda * &sigma;
    let trace = (&ls * &ls).trace();
    let mu = DVector::from_column_slice(mu);
    let lmu = lambda * &mu;
    let mean_term = lmu.dot(&(&sigma * &lmu));
    Ok(2.0 * trace + 4.0 * mean_term)
}

/// Monte Carlo estimate of `g(t) = E[exp(t·H₁)]` for `H` uniform on the unit
/// sphere in `R^d`.
pub fn radial_mgf<R: Rng + ?Sized>(t: f64, d: usize, samples: usize, rng: &mut R) -> Result<MeanEstimate> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("radial_mgf needs finite t >= 0, got {t}")));
    }
    if d < 2 || samples == 0 {
        return Err(Error::InvalidParameter(format!(
            "radial_mgf needs d >= 2 and samples >= 1 (d = {d}, samples = {samples})"
        )));
    }
    let draws: Vec<f64> = (0..samples)
        .map(|_| {
            let h = sample_sphere_uniform(d, rng).expect("d >= 2 checked above");
            (t * h[0]).exp()
        })
        .collect();
    Ok(MeanEstimate::from_samples(&draws))
}
