use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernels::{self, with_dim, DensityWs, VecTerms};
use super::{add_hops_noise, add_psse_noise, creation_expectations, expectation, CoefTable, Context, Rk4};
use super::DEGENERATE_NORM;
use crate::fock::ExtendedDensity;
use crate::noise::{ou_init, white_noise_increment, EigenSampler, OuState, RealEigenSampler};
use crate::series::DensitySeries;
use crate::{Error, Result, C64, I};

/// Uniform step grid `t_n = n·h` with `steps` steps up to `t_end`, and a
/// stored-point grid `t_i = i·t_end/stored`, `i = 0..=stored`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub steps: usize,
    pub stored: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize, stored: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::Domain(format!("horizon must be positive, got {t_end}")));
        }
        if steps == 0 || stored == 0 || !steps.is_multiple_of(stored) {
            return Err(Error::Domain(format!(
                "step count {steps} must be a positive multiple of the stored-point count {stored}"
            )));
        }
        Ok(TimeGrid { t_end, steps, stored })
    }

    /// Grid from a step size that must divide the horizon.
    pub fn from_step(t_end: f64, h: f64, stored: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("step must be positive, got {h}")));
        }
        let steps = (t_end / h).round();
        if steps < 1.0 || ((steps * h - t_end).abs() > 1e-9 * t_end) {
            return Err(Error::Domain(format!("step {h} does not divide the horizon {t_end}")));
        }
        Self::new(t_end, steps as usize, stored)
    }

    pub fn h(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn stride(&self) -> usize {
        self.steps / self.stored
    }

    pub fn stored_times(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.stored).map(|i| (i * self.stride()) as f64 * h).collect()
    }

    /// Start times of the steps, where per-step noise values live.
    pub fn step_times(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.steps).map(|n| n as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    Hme,
    Pme,
}

/// `⟨0|ρ|0⟩`.
pub fn reduce_hme(rho: &ExtendedDensity) -> Vec<C64> {
    reduce_hme_raw(rho.entries(), rho.sys_dim(), rho.basis().len())
}

/// `Σ_n ⟨n|ρ′|n⟩`.
pub fn reduce_pme(rho: &ExtendedDensity) -> Vec<C64> {
    reduce_pme_raw(rho.entries(), rho.sys_dim(), rho.basis().len())
}

pub(crate) fn reduce_hme_raw(rho: &[C64], d: usize, nb: usize) -> Vec<C64> {
    let dim = d * nb;
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    for a in 0..d {
        out[a * d..a * d + d].copy_from_slice(&rho[a * dim..a * dim + d]);
    }
    out
}

pub(crate) fn reduce_pme_raw(rho: &[C64], d: usize, nb: usize) -> Vec<C64> {
    let dim = d * nb;
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..nb {
        for a in 0..d {
            for b in 0..d {
                out[a * d + b] += rho[(k * d + a) * dim + k * d + b];
            }
        }
    }
    out
}

/// Integrate a master equation from `rho0`, calling `obs(i, ρ)` at every
/// stored point. `drive_path` adds a per-step constant `Y_n` to the drive.
pub fn propagate_density_with(
    ctx: &Context,
    table: &CoefTable,
    method: DensityMethod,
    grid: &TimeGrid,
    rho0: ExtendedDensity,
    drive_path: Option<&[f64]>,
    mut obs: impl FnMut(usize, &[C64]) -> Result<()>,
) -> Result<()> {
    if method == DensityMethod::Pme {
        super::require_pseudomode(ctx, "pseudomode master equation")?;
    }
    ctx.check_density(&rho0)?;
    if drive_path.is_some_and(|p| p.len() != grid.steps) {
        return Err(Error::Dimension("drive path length must equal the step count".into()));
    }
    let d = ctx.d;
    let h = grid.h();
    let stride = grid.stride();
    let mut rho = rho0.into_entries();
    let n = rho.len();
    let mut rk = Rk4::new(n);
    let mut ws = DensityWs::new(n, d);
    obs(0, &rho)?;
    for step in 0..grid.steps {
        let y = drive_path.map_or(0.0, |p| p[step]);
        rk.step(
            |off, r, out| {
                let st = table.stage(2 * step + off, y);
                with_dim!(d, sd => match method {
                    DensityMethod::Hme => kernels::hme_drift(sd, ctx, &st, r, out, &mut ws, true),
                    DensityMethod::Pme => kernels::pme_drift(sd, ctx, &st, r, out, &mut ws, true),
                });
                Ok(())
            },
            &mut rho,
            h,
        )?;
        if (step + 1) % stride == 0 {
            if rho.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite density entry at t = {}",
                    (step + 1) as f64 * h
                )));
            }
            obs((step + 1) / stride, &rho)?;
        }
    }
    Ok(())
}

/// Reduced density matrices of a master-equation run from `ρ_S(0) ⊗ |0⟩⟨0|`.
pub fn propagate_density(
    ctx: &Context,
    table: &CoefTable,
    method: DensityMethod,
    grid: &TimeGrid,
    rho_s0: &[C64],
    drive_path: Option<&[f64]>,
) -> Result<DensitySeries> {
    let d = ctx.d;
    let nb = ctx.basis.len();
    let rho0 = ExtendedDensity::vacuum_product(rho_s0, d, ctx.basis.clone())?;
    let mut series = DensitySeries::zeros(grid.stored_times(), d);
    propagate_density_with(ctx, table, method, grid, rho0, drive_path, |i, rho| {
        let red = match method {
            DensityMethod::Hme => reduce_hme_raw(rho, d, nb),
            DensityMethod::Pme => reduce_pme_raw(rho, d, nb),
        };
        series.rho_mut(i).copy_from_slice(&red);
        Ok(())
    })?;
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorMethod {
    HopsLinear,
    HopsNonlinear,
    PsseLinear,
    PsseNonlinear,
}

impl VectorMethod {
    pub fn is_hops(self) -> bool {
        matches!(self, VectorMethod::HopsLinear | VectorMethod::HopsNonlinear)
    }

    pub fn is_nonlinear(self) -> bool {
        matches!(self, VectorMethod::HopsNonlinear | VectorMethod::PsseNonlinear)
    }
}

/// Where the colored noise of a hierarchy trajectory comes from.
#[derive(Debug, Clone, Copy)]
pub enum ZSource<'a> {
    /// Pre-sampled path on the step grid.
    Eigen(&'a EigenSampler),
    /// Ornstein–Uhlenbeck processes advanced alongside the state.
    Ou,
    /// Noise switched off.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Completed,
    /// The vacuum projection of a Girsanov trajectory underflowed.
    Degenerate,
}

/// Integrate one stochastic trajectory from `ψ0 ⊗ |0⟩`, calling `obs(i, Ψ)`
/// with the full extended vector at every stored point.
///
/// Random numbers are drawn in a fixed order (thermal path, colored-noise path
/// or OU start, then per-step increments), so `(rng state, inputs)` determines
/// the trajectory bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory<R: Rng + ?Sized>(
    ctx: &Context,
    table: &CoefTable,
    method: VectorMethod,
    grid: &TimeGrid,
    psi0: &[C64],
    z: ZSource,
    thermal: Option<&RealEigenSampler>,
    rng: &mut R,
    mut obs: impl FnMut(usize, &[C64]),
) -> Result<TrajectoryStatus> {
    let d = ctx.d;
    let nv = ctx.vec_len();
    let n = ctx.n_modes;
    if psi0.len() != d {
        return Err(Error::Dimension(format!("initial state must have length {d}")));
    }
    if !method.is_hops() {
        super::require_pseudomode(ctx, "pseudomode stochastic Schrödinger equation")?;
    }
    let h = grid.h();
    let stride = grid.stride();

    let ypath = thermal.map(|s| s.sample(rng));
    if ypath.as_ref().is_some_and(|p| p.len() != grid.steps) {
        return Err(Error::Dimension("thermal noise grid must equal the step grid".into()));
    }
    let mut zpath = None;
    let mut ou: Option<OuState> = None;
    if method.is_hops() {
        match z {
            ZSource::Eigen(s) => {
                if s.len() != grid.steps {
                    return Err(Error::Dimension("noise grid must equal the step grid".into()));
                }
                zpath = Some(s.sample(rng));
            }
            ZSource::Ou => {
                super::require_pseudomode(ctx, "Ornstein-Uhlenbeck noise")?;
                ou = Some(ou_init(&ctx.rates, rng)?);
            }
            ZSource::Zero => {}
        }
    }

    let len = if method == VectorMethod::HopsNonlinear { nv + n } else { nv };
    let mut y = vec![C64::new(0.0, 0.0); len];
    y[..d].copy_from_slice(psi0);
    let mut rk = Rk4::new(len);
    let mut old = vec![C64::new(0.0, 0.0); nv];
    let mut lpsi = vec![C64::new(0.0, 0.0); nv];
    let mut a = vec![C64::new(0.0, 0.0); n];
    let mut b = vec![C64::new(0.0, 0.0); n];
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut e = vec![C64::new(0.0, 0.0); n];
    let mut ds = vec![C64::new(0.0, 0.0); n];
    let mut degenerate = false;

    obs(0, &y[..nv]);
    for step in 0..grid.steps {
        let yv = ypath.as_ref().map_or(0.0, |p| p[step]);
        let mut zval = C64::new(0.0, 0.0);
        if let Some(p) = &zpath {
            zval = p[step];
        } else if let Some(o) = ou.as_mut() {
            let st = table.stage(2 * step, 0.0);
            zval = st.f.iter().zip(&o.z).map(|(f, z)| f * z).sum();
            o.step(h, rng);
        }
        if !method.is_hops() {
            white_noise_increment(rng, h, &mut ds);
        }
        old.copy_from_slice(&y[..nv]);

        rk.step(
            |off, yy, out| {
                let st = table.stage(2 * step + off, yv);
                let mut diag = -I * st.drive;
                let mut use_c = false;
                match method {
                    VectorMethod::HopsLinear | VectorMethod::HopsNonlinear => {
                        for j in 0..n {
                            a[j] = -I * ctx.s[j] * st.f[j];
                            b[j] = -I * ctx.s[j] * st.g[j].conj();
                        }
                        if method == VectorMethod::HopsNonlinear {
                            let (psi, m) = yy.split_at(nv);
                            let lbar = expectation(&ctx.l, &psi[..d], d).unwrap_or_else(|| {
                                degenerate = true;
                                C64::new(0.0, 0.0)
                            });
                            let shift: C64 = st.f.iter().zip(m).map(|(f, mj)| f * mj).sum();
                            diag += shift.conj();
                            for j in 0..n {
                                c[j] = I * lbar * ctx.s[j] * st.f[j];
                                out[nv + j] = -ctx.rates[j] * m[j] + 0.5 * ctx.rates[j] * st.g[j].conj() * lbar;
                            }
                            use_c = true;
                        }
                    }
                    VectorMethod::PsseLinear | VectorMethod::PsseNonlinear => {
                        for j in 0..n {
                            a[j] = -I * ctx.s[j] * st.f[j];
                            b[j] = -I * ctx.s[j] * st.f[j].conj();
                        }
                        if method == VectorMethod::PsseNonlinear {
                            creation_expectations(ctx, yy, &mut e);
                            for j in 0..n {
                                c[j] = 2.0 * ctx.rates[j] * e[j];
                            }
                            use_c = true;
                        }
                    }
                }
                let terms = VecTerms { a: &a, b: &b, c: if use_c { &c } else { &[] }, diag };
                with_dim!(d, sd => kernels::vec_drift(sd, ctx, &terms, &yy[..nv], &mut out[..nv], &mut lpsi));
                Ok(())
            },
            &mut y,
            h,
        )?;

        if method.is_hops() {
            if zval != C64::new(0.0, 0.0) {
                add_hops_noise(&ctx.l, d, zval, h, &old, &mut y[..nv]);
            }
        } else {
            add_psse_noise(ctx, &ds, &old, &mut y[..nv]);
        }

        let psi = &mut y[..nv];
        if psi.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::Numerical(format!("non-finite amplitude at t = {}", (step + 1) as f64 * h)));
        }
        if method.is_nonlinear() {
            let norm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
            if !(norm > 0.0) {
                return Ok(TrajectoryStatus::Degenerate);
            }
            let inv = norm.sqrt().recip();
            psi.iter_mut().for_each(|x| *x *= inv);
            if method == VectorMethod::HopsNonlinear {
                let vac: f64 = psi[..d].iter().map(|x| x.norm_sqr()).sum();
                if degenerate || vac < DEGENERATE_NORM {
                    return Ok(TrajectoryStatus::Degenerate);
                }
            }
        }
        if (step + 1) % stride == 0 {
            obs((step + 1) / stride, &y[..nv]);
        }
    }
    Ok(TrajectoryStatus::Completed)
}
