//! Stochastic drivers: colored noise `Z(t)` by eigendecomposition of the
//! discretized correlation matrix, the Ornstein–Uhlenbeck special case,
//! complex white-noise increments and real Gaussian processes.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bcf::BathModel;
use crate::{Error, Result, C64};

/// Relative eigenvalue floor: negative eigenvalues above `-CLIP_FLOOR · max diag`
/// are treated as round-off.
pub const CLIP_FLOOR: f64 = 1e-6;

/// Per-trajectory random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub master: u64,
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        SeedSpec { master }
    }

    /// Independent stream for trajectory `k`.
    pub fn stream(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(k);
        rng
    }
}

/// Circular complex standard normal, `E[ξξ*] = 1`, `E[ξξ] = 0`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub grid: Arc<[f64]>,
    pub samples: Vec<C64>,
}

/// Factorization `α = Σ_k λ_k Y^(k) Y^(k)†` of a Hermitian correlation matrix,
/// stored as columns `√λ_k Y^(k)` for the retained eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenSampler {
    n: usize,
    // column-major, n × rank
    factor: Vec<C64>,
    rank: usize,
    clipped_mass: f64,
    trace: f64,
}

impl EigenSampler {
    /// `energy_threshold = Some(ε)` drops the smallest eigenvalues as long as the
    /// kept ones still carry at least `1 - ε` of the trace.
    pub fn new(matrix: DMatrix<C64>, energy_threshold: Option<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::Dimension("correlation matrix must be square and non-empty".into()));
        }
        let max_diag = (0..n).map(|i| matrix[(i, i)].re).fold(0.0f64, f64::max);
        let trace: f64 = (0..n).map(|i| matrix[(i, i)].re).sum();
        let eig = matrix.symmetric_eigen();
        let (lambda, clipped_mass) = clip_spectrum(eig.eigenvalues.as_slice(), max_diag)?;
        let keep = retained(&lambda, energy_threshold);
        let mut factor = Vec::with_capacity(n * keep.len());
        for &k in &keep {
            let s = lambda[k].sqrt();
            factor.extend(eig.eigenvectors.column(k).iter().map(|y| y * s));
        }
        Ok(EigenSampler { n, rank: keep.len(), factor, clipped_mass, trace })
    }

    /// Discretize `α(t_n, t_m)` of `model` on `grid` and factorize it.
    pub fn from_bcf(model: &BathModel, grid: &[f64], energy_threshold: Option<f64>) -> Result<Self> {
        let n = grid.len();
        let m = DMatrix::from_fn(n, n, |i, j| model.eval_bcf(grid[i], grid[j]));
        Self::new(m, energy_threshold)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Sum of the magnitudes of eigenvalues clipped to zero.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `Z_n = Σ_k √λ_k Y_n^(k) ε_k` written into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [C64]) {
        assert_eq!(out.len(), self.n);
        out.fill(C64::new(0.0, 0.0));
        for col in self.factor.chunks_exact(self.n) {
            let eps = complex_normal(rng);
            for (o, y) in out.iter_mut().zip(col) {
                *o += y * eps;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        self.sample_into(rng, &mut out);
        out
    }
}

fn clip_spectrum(eigs: &[f64], max_diag: f64) -> Result<(Vec<f64>, f64)> {
    let floor = -CLIP_FLOOR * max_diag;
    let mut clipped = 0.0;
    let mut out = Vec::with_capacity(eigs.len());
    for &l in eigs {
        if l >= 0.0 {
            out.push(l);
        } else if l >= floor {
            clipped += -l;
            out.push(0.0);
        } else {
            return Err(Error::InvalidCorrelation(format!(
                "eigenvalue {l:e} below the floor {floor:e}; the matrix is not positive semi-definite"
            )));
        }
    }
    Ok((out, clipped))
}

fn retained(lambda: &[f64], energy_threshold: Option<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lambda.len()).filter(|&k| lambda[k] > 0.0).collect();
    if let Some(eps) = energy_threshold {
        idx.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]));
        let total: f64 = idx.iter().map(|&k| lambda[k]).sum();
        let mut acc = 0.0;
        let mut cut = idx.len();
        for (i, &k) in idx.iter().enumerate() {
            acc += lambda[k];
            if acc >= (1.0 - eps) * total {
                cut = i + 1;
                break;
            }
        }
        idx.truncate(cut);
    }
    idx
}

/// Draw `count` colored-noise paths with `E[Z(t_n)Z*(t_m)] = α(t_n, t_m)`.
pub fn sample_noise_eigen<R: Rng + ?Sized>(
    model: &BathModel,
    grid: &[f64],
    rng: &mut R,
    count: usize,
) -> Result<Vec<NoisePath>> {
    if grid.len() < 2 {
        return Err(Error::Domain("noise grid needs at least two points".into()));
    }
    let sampler = EigenSampler::from_bcf(model, grid, None)?;
    let grid: Arc<[f64]> = grid.into();
    Ok((0..count)
        .map(|_| NoisePath { grid: grid.clone(), samples: sampler.sample(rng) })
        .collect())
}

/// Ornstein–Uhlenbeck processes `dz_j = -Γ_j z_j dt + Γ_j dW_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuState {
    pub z: Vec<C64>,
    pub rates: Vec<f64>,
}

/// Stationary start `z_j(0) = ξ_j √(Γ_j/2)`.
pub fn ou_init<R: Rng + ?Sized>(rates: &[f64], rng: &mut R) -> Result<OuState> {
    if let Some(bad) = rates.iter().find(|&&g| !(g > 0.0) || !g.is_finite()) {
        return Err(Error::Domain(format!("OU rate must be positive, got {bad}")));
    }
    let z = rates.iter().map(|&g| complex_normal(rng) * (0.5 * g).sqrt()).collect();
    Ok(OuState { z, rates: rates.to_vec() })
}

impl OuState {
    /// In-place Euler–Maruyama step.
    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        let sdt = dt.sqrt();
        for (z, &g) in self.z.iter_mut().zip(&self.rates) {
            let dw = complex_normal(rng) * sdt;
            *z += -g * dt * *z + g * dw;
        }
    }
}

pub fn ou_step<R: Rng + ?Sized>(state: &OuState, dt: f64, rng: &mut R) -> OuState {
    let mut next = state.clone();
    next.step(dt, rng);
    next
}

/// `Z(t) = Σ_j f_j(t) z_j(t)`; only valid when every mode has `f_j = g_j`.
pub fn assemble_z_from_ou(model: &BathModel, state: &OuState, t: f64) -> Result<C64> {
    if !model.pseudomode_ok() {
        return Err(Error::Unsupported(
            "OU noise requires f_j = g_j for all modes".into(),
        ));
    }
    if state.z.len() != model.n_modes() {
        return Err(Error::Dimension("OU state and bath have different mode counts".into()));
    }
    Ok(model.modes.iter().zip(&state.z).map(|(m, z)| m.f.eval(t) * z).sum())
}

/// Independent complex increments with `E[ΔW ΔW*] = dt`.
pub fn white_noise_increment<R: Rng + ?Sized>(rng: &mut R, dt: f64, out: &mut [C64]) {
    if dt == 0.0 {
        out.fill(C64::new(0.0, 0.0));
        return;
    }
    let s = dt.sqrt();
    for w in out.iter_mut() {
        *w = complex_normal(rng) * s;
    }
}

/// Real-valued analogue of [`EigenSampler`] for thermal noise `Y(t)`.
#[derive(Debug, Clone)]
pub struct RealEigenSampler {
    n: usize,
    factor: Vec<f64>,
    clipped_mass: f64,
}

impl RealEigenSampler {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::Dimension("covariance matrix must be square and non-empty".into()));
        }
        let max_diag = (0..n).map(|i| matrix[(i, i)]).fold(0.0f64, f64::max);
        let eig = matrix.symmetric_eigen();
        let (lambda, clipped_mass) = clip_spectrum(eig.eigenvalues.as_slice(), max_diag)?;
        let mut factor = Vec::new();
        for (k, &l) in lambda.iter().enumerate() {
            if l > 0.0 {
                let s = l.sqrt();
                factor.extend(eig.eigenvectors.column(k).iter().map(|y| y * s));
            }
        }
        Ok(RealEigenSampler { n, factor, clipped_mass })
    }

    pub fn from_fn(cov: impl Fn(f64, f64) -> f64, grid: &[f64]) -> Result<Self> {
        let n = grid.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| cov(grid[i], grid[j])))
    }

    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for col in self.factor.chunks_exact(self.n) {
            let eps: f64 = rng.sample(StandardNormal);
            for (o, y) in out.iter_mut().zip(col) {
                *o += y * eps;
            }
        }
        out
    }
}

/// Draw `count` real Gaussian paths with covariance `cov` on `grid`.
pub fn sample_real_process<R: Rng + ?Sized>(
    cov: impl Fn(f64, f64) -> f64,
    grid: &[f64],
    rng: &mut R,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let sampler = RealEigenSampler::from_fn(cov, grid)?;
    Ok((0..count).map(|_| sampler.sample(rng)).collect())
}

/// Running second-moment statistics of complex paths: `E[Z_n Z_m*]` and
/// `E[Z_n Z_m]`, each with entrywise standard errors of the real and imaginary parts.
#[derive(Debug, Clone)]
pub struct CovarianceStats {
    n: usize,
    count: usize,
    // [cov, pseudo] × [sum, sum re², sum im²]
    sums: [Vec<C64>; 2],
    sq_re: [Vec<f64>; 2],
    sq_im: [Vec<f64>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    /// `E[Z_n Z_m*]`
    Covariance,
    /// `E[Z_n Z_m]`
    Pseudo,
}

impl CovarianceStats {
    pub fn new(n: usize) -> Self {
        let z = || vec![C64::new(0.0, 0.0); n * n];
        let r = || vec![0.0; n * n];
        CovarianceStats { n, count: 0, sums: [z(), z()], sq_re: [r(), r()], sq_im: [r(), r()] }
    }

    pub fn push(&mut self, path: &[C64]) {
        assert_eq!(path.len(), self.n);
        let n = self.n;
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                for (slot, x) in [path[a] * path[b].conj(), path[a] * path[b]].into_iter().enumerate() {
                    self.sums[slot][idx] += x;
                    self.sq_re[slot][idx] += x.re * x.re;
                    self.sq_im[slot][idx] += x.im * x.im;
                }
            }
        }
        self.count += 1;
    }

    /// Add the samples of another accumulator over the same grid.
    pub fn merge(&mut self, other: &CovarianceStats) {
        assert_eq!(self.n, other.n);
        for s in 0..2 {
            self.sums[s].iter_mut().zip(&other.sums[s]).for_each(|(a, b)| *a += b);
            self.sq_re[s].iter_mut().zip(&other.sq_re[s]).for_each(|(a, b)| *a += b);
            self.sq_im[s].iter_mut().zip(&other.sq_im[s]).for_each(|(a, b)| *a += b);
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(m: Moment) -> usize {
        match m {
            Moment::Covariance => 0,
            Moment::Pseudo => 1,
        }
    }

    pub fn mean(&self, m: Moment, a: usize, b: usize) -> C64 {
        self.sums[Self::slot(m)][a * self.n + b] / self.count as f64
    }

    /// Standard errors of the real and imaginary parts of the mean.
    pub fn std_error(&self, m: Moment, a: usize, b: usize) -> (f64, f64) {
        let s = Self::slot(m);
        let idx = a * self.n + b;
        let c = self.count as f64;
        let mean = self.sums[s][idx] / c;
        let var_re = (self.sq_re[s][idx] / c - mean.re * mean.re).max(0.0) * c / (c - 1.0);
        let var_im = (self.sq_im[s][idx] / c - mean.im * mean.im).max(0.0) * c / (c - 1.0);
        ((var_re / c).sqrt(), (var_im / c).sqrt())
    }

    /// Largest deviation from `expected(a, b)` in units of standard error.
    pub fn max_sigma(&self, m: Moment, expected: impl Fn(usize, usize) -> C64) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.n {
            for b in 0..self.n {
                let d = self.mean(m, a, b) - expected(a, b);
                let (se_re, se_im) = self.std_error(m, a, b);
                worst = worst.max(sigma_units(d.re, se_re)).max(sigma_units(d.im, se_im));
            }
        }
        worst
    }

    /// Largest deviation between two independent estimates in joint standard errors.
    pub fn max_sigma_between(&self, other: &CovarianceStats, m: Moment) -> f64 {
        assert_eq!(self.n, other.n);
        let mut worst = 0.0f64;
        for a in 0..self.n {
            for b in 0..self.n {
                let d = self.mean(m, a, b) - other.mean(m, a, b);
                let (r1, i1) = self.std_error(m, a, b);
                let (r2, i2) = other.std_error(m, a, b);
                worst = worst
                    .max(sigma_units(d.re, r1.hypot(r2)))
                    .max(sigma_units(d.im, i1.hypot(i2)));
            }
        }
        worst
    }
}

fn sigma_units(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        diff.abs() / se
    }
}
