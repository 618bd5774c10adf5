//! Seeded dataset synthesis and the auxiliary statistics of the sphere model.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::analytic::{CovarianceModel, ModelParams};
use crate::paramsets::SphereTheta;
use crate::rng::rng_from_seed;
use crate::stats::fmt_sig;
use crate::{check_dim, dot, norm_sq, Error, Label, Result};

/// `n` labelled samples stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<Label>,
    d: usize,
    pub theta_id: u64,
    pub seed: u64,
}

impl Dataset {
    pub fn from_rows(rows: Vec<Vec<f64>>, ys: Vec<Label>) -> Result<Self> {
        if rows.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: ys.len() });
        }
        let d = rows.first().map_or(0, Vec::len);
        let mut xs = Vec::with_capacity(rows.len() * d);
        for r in &rows {
            check_dim(d, r.len())?;
            xs.extend_from_slice(r);
        }
        Ok(Dataset { xs, ys, d, theta_id: 0, seed: 0 })
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> Label {
        self.ys[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.ys
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> + '_ {
        self.xs.chunks_exact(self.d.max(1)).zip(self.ys.iter().copied())
    }

    /// Same samples with every label negated.
    pub fn with_flipped_labels(&self) -> Dataset {
        Dataset {
            ys: self.ys.iter().map(|y| y.flipped()).collect(),
            ..self.clone()
        }
    }

    /// Applies the same coordinate permutation to every sample:
    /// new coordinate `j` is old coordinate `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Dataset {
        let mut out = self.clone();
        for (dst, src) in out.xs.chunks_exact_mut(self.d).zip(self.xs.chunks_exact(self.d)) {
            for (j, &p) in perm.iter().enumerate() {
                dst[j] = src[p];
            }
        }
        out
    }

    /// Debug dump: a `d,n,seed` header line and its values, then one
    /// `y,x1,...,xd` row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "d,n,seed")?;
        writeln!(w, "{},{},{}", self.d, self.n(), self.seed)?;
        for (x, y) in self.iter() {
            write!(w, "{}", y.as_i8())?;
            for v in x {
                write!(w, ",{}", fmt_sig(*v, 10))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Draws `n` i.i.d. pairs: `Y` uniform on `{-1, +1}`, `X = μ_Y + Σ^{1/2} Z`.
pub fn gen_dataset(theta: &ModelParams, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("dataset needs n >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let d = theta.dim();
    let mut xs = vec![0.0; n * d];
    let mut ys = Vec::with_capacity(n);
    for row in xs.chunks_exact_mut(d) {
        let y = if rng.random::<bool>() { Label::Pos } else { Label::Neg };
        sample_point(theta, y, row, &mut rng)?;
        ys.push(y);
    }
    Ok(Dataset { xs, ys, d, theta_id: theta.fingerprint(), seed })
}

fn sample_point<R: Rng + ?Sized>(theta: &ModelParams, y: Label, out: &mut [f64], rng: &mut R) -> Result<()> {
    let mu = theta.mean_of(y);
    match theta.cov() {
        CovarianceModel::Spherical { beta } => {
            for (o, m) in out.iter_mut().zip(mu) {
                let z: f64 = rng.sample(StandardNormal);
                *o = m + beta * z;
            }
        }
        cov => {
            let z: Vec<f64> = (0..out.len()).map(|_| rng.sample(StandardNormal)).collect();
            let noise = cov.cov_sqrt_apply(&z)?;
            for ((o, m), e) in out.iter_mut().zip(mu).zip(noise) {
                *o = m + e;
            }
        }
    }
    Ok(())
}

/// `V = (1/n) Σ Yᵢ Zᵢ` and the derived quantities `HᵀV`, `‖V‖²` and
/// `W = (1 + HᵀV) / sqrt(1 + 2HᵀV + ‖V‖²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProofStatistics {
    pub v: Vec<f64>,
    pub ht_v: f64,
    pub v_norm_sq: f64,
    pub w: f64,
}

impl ProofStatistics {
    /// `1 + 2HᵀV + ‖V‖² = ‖H + V‖²`.
    pub fn denominator_sq(&self) -> f64 {
        1.0 + 2.0 * self.ht_v + self.v_norm_sq
    }

    pub fn w_from_fields(&self) -> f64 {
        (1.0 + self.ht_v) / self.denominator_sq().sqrt()
    }
}

/// Recovers `Zᵢ = Xᵢ − Yᵢh` from sphere-model data and forms the proof
/// statistics.
pub fn proof_statistics(theta: &SphereTheta, data: &Dataset) -> Result<ProofStatistics> {
    let h = theta.h();
    check_dim(h.len(), data.dim())?;
    if data.n() == 0 {
        return Err(Error::InvalidParameter("proof statistics need n >= 1".into()));
    }
    let mut v = vec![0.0; h.len()];
    for (x, y) in data.iter() {
        let s = y.sign();
        for ((vj, xj), hj) in v.iter_mut().zip(x).zip(h) {
            // Yᵢ Zᵢ = Yᵢ Xᵢ − h
            *vj += s * xj - hj;
        }
    }
    let inv_n = 1.0 / data.n() as f64;
    v.iter_mut().for_each(|x| *x *= inv_n);
    let ht_v = dot(h, &v);
    let v_norm_sq = norm_sq(&v);
    let w = (1.0 + ht_v) / (1.0 + 2.0 * ht_v + v_norm_sq).sqrt();
    Ok(ProofStatistics { v, ht_v, v_norm_sq, w })
}
