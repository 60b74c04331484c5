//! Right-hand sides of the four formulations and the hybrid fixed-step
//! integrator (classical RK4 on the drift, noise inserted once per step).
//!
//! Conventions: `H_eff(t) = H_S + Σ_j √(Γ_j/2){f_j(t) ĉ_j + g_j*(t) ĉ_j†}L`,
//! `E[Z(t)Z*(s)] = α(t,s)`, and the linear hierarchy reads
//! `∂_tΨ = [-Σ_j Γ_j ĉ_j†ĉ_j - iH_eff(t) - iZ*(t)L]Ψ`.

pub(crate) mod kernels;
mod rk4;
mod run;

use std::sync::Arc;

use crate::bcf::{BathModel, SystemModel};
use crate::fock::{ExtendedDensity, ExtendedState, FockBasis, NONE};
use crate::{Error, Result, C64, I};

use kernels::{with_dim, DensityWs, VecTerms};

pub use rk4::{rk4_step, Rk4};
pub use run::{
    propagate_density, propagate_density_with, reduce_hme, reduce_pme, run_trajectory, DensityMethod,
    TimeGrid, TrajectoryStatus, VectorMethod, ZSource,
};

/// Vacuum weight below which a Girsanov trajectory is considered degenerate.
pub const DEGENERATE_NORM: f64 = 1e-30;

/// System, bath and truncated basis bundled with the index tables the kernels need.
#[derive(Debug, Clone)]
pub struct Context {
    pub(crate) d: usize,
    pub(crate) h_s: Vec<C64>,
    pub(crate) l: Vec<C64>,
    pub(crate) basis: Arc<FockBasis>,
    pub(crate) bath: BathModel,
    pub(crate) n_modes: usize,
    pub(crate) rates: Vec<f64>,
    /// `√(Γ_j/2)`
    pub(crate) s: Vec<f64>,
    /// `Σ_j Γ_j n_j` per basis state
    pub(crate) decay: Vec<f64>,
    pub(crate) sq_up: Vec<f64>,
    pub(crate) sq_dn: Vec<f64>,
    pub(crate) raise: Vec<usize>,
    pub(crate) lower: Vec<usize>,
}

impl Context {
    pub fn new(system: &SystemModel, bath: &BathModel, basis: Arc<FockBasis>) -> Result<Self> {
        bath.validate()?;
        if basis.modes() != bath.n_modes() {
            return Err(Error::Dimension(format!(
                "truncation has {} modes but the bath has {}",
                basis.modes(),
                bath.n_modes()
            )));
        }
        let nb = basis.len();
        let n = bath.n_modes();
        let rates = bath.rates();
        let decay = (0..nb)
            .map(|k| (0..n).map(|j| rates[j] * basis.occupation_of(k, j) as f64).sum())
            .collect();
        let mut sq_up = Vec::with_capacity(n * nb);
        let mut sq_dn = Vec::with_capacity(n * nb);
        let mut raise = Vec::with_capacity(n * nb);
        let mut lower = Vec::with_capacity(n * nb);
        for j in 0..n {
            for k in 0..nb {
                let occ = basis.occupation_of(k, j) as f64;
                sq_up.push((occ + 1.0).sqrt());
                sq_dn.push(occ.sqrt());
            }
            raise.extend_from_slice(basis.raise_table(j));
            lower.extend_from_slice(basis.lower_table(j));
        }
        Ok(Context {
            d: system.dim,
            h_s: system.hamiltonian.clone(),
            l: system.coupling.clone(),
            basis,
            bath: bath.clone(),
            n_modes: n,
            s: rates.iter().map(|g| (0.5 * g).sqrt()).collect(),
            rates,
            decay,
            sq_up,
            sq_dn,
            raise,
            lower,
        })
    }

    pub fn sys_dim(&self) -> usize {
        self.d
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn bath(&self) -> &BathModel {
        &self.bath
    }

    pub fn coupling(&self) -> &[C64] {
        &self.l
    }

    /// Length of an extended vector.
    pub fn vec_len(&self) -> usize {
        self.d * self.basis.len()
    }

    fn stage_at(&self, t: f64) -> OwnedStage {
        OwnedStage {
            f: self.bath.modes.iter().map(|m| m.f.eval(t)).collect(),
            g: self.bath.modes.iter().map(|m| m.g.eval(t)).collect(),
            drive: self.bath.drive.as_ref().map_or(0.0, |d| d.eval(t)),
        }
    }

    fn check_state(&self, s: &ExtendedState) -> Result<()> {
        if s.sys_dim() != self.d || s.amplitudes().len() != self.vec_len() {
            return Err(Error::Dimension("state does not match the context".into()));
        }
        Ok(())
    }

    fn check_density(&self, rho: &ExtendedDensity) -> Result<()> {
        if rho.sys_dim() != self.d || rho.dim() != self.vec_len() {
            return Err(Error::Dimension("density does not match the context".into()));
        }
        Ok(())
    }
}

/// Mode coefficients and scalar drive at one stage time.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stage<'a> {
    pub f: &'a [C64],
    pub g: &'a [C64],
    pub drive: f64,
}

#[derive(Debug, Clone)]
struct OwnedStage {
    f: Vec<C64>,
    g: Vec<C64>,
    drive: f64,
}

impl OwnedStage {
    fn view(&self) -> Stage<'_> {
        Stage { f: &self.f, g: &self.g, drive: self.drive }
    }
}

/// `f_j`, `g_j` and the classical drive tabulated on the half-step grid
/// `t_i = i·h/2`, which contains every RK4 stage time.
#[derive(Debug, Clone)]
pub struct CoefTable {
    modes: usize,
    f: Vec<C64>,
    g: Vec<C64>,
    drive: Vec<f64>,
}

impl CoefTable {
    pub fn new(bath: &BathModel, h: f64, steps: usize) -> Self {
        let n = bath.n_modes();
        let len = 2 * steps + 1;
        let mut f = Vec::with_capacity(len * n);
        let mut g = Vec::with_capacity(len * n);
        for i in 0..len {
            let t = i as f64 * (0.5 * h);
            for m in &bath.modes {
                f.push(m.f.eval(t));
                g.push(m.g.eval(t));
            }
        }
        let drive = match &bath.drive {
            Some(d) => (0..len).map(|i| d.eval(i as f64 * (0.5 * h))).collect(),
            None => Vec::new(),
        };
        CoefTable { modes: n, f, g, drive }
    }

    #[inline]
    pub(crate) fn stage(&self, i: usize, extra_drive: f64) -> Stage<'_> {
        let n = self.modes;
        let base = self.drive.get(i).copied().unwrap_or(0.0);
        Stage { f: &self.f[i * n..(i + 1) * n], g: &self.g[i * n..(i + 1) * n], drive: base + extra_drive }
    }
}

/// `H_eff(t) s`, applied matrix-free.
pub fn apply_effective_hamiltonian(ctx: &Context, t: f64, s: &ExtendedState) -> Result<ExtendedState> {
    ctx.check_state(s)?;
    let st = ctx.stage_at(t);
    let d = ctx.d;
    let nb = ctx.basis.len();
    let psi = s.amplitudes();
    let mut lpsi = vec![C64::new(0.0, 0.0); psi.len()];
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for k in 0..nb {
        for a in 0..d {
            let mut hl = C64::new(0.0, 0.0);
            let mut hx = C64::new(0.0, 0.0);
            for c in 0..d {
                hl += ctx.l[a * d + c] * psi[k * d + c];
                hx += ctx.h_s[a * d + c] * psi[k * d + c];
            }
            lpsi[k * d + a] = hl;
            out[k * d + a] = hx + st.drive * hl;
        }
    }
    for j in 0..ctx.n_modes {
        for k in 0..nb {
            let up = ctx.raise[j * nb + k];
            if up != NONE {
                let c = ctx.s[j] * st.f[j] * ctx.sq_up[j * nb + k];
                for a in 0..d {
                    out[k * d + a] += c * lpsi[up * d + a];
                }
            }
            let dn = ctx.lower[j * nb + k];
            if dn != NONE {
                let c = ctx.s[j] * st.g[j].conj() * ctx.sq_dn[j * nb + k];
                for a in 0..d {
                    out[k * d + a] += c * lpsi[dn * d + a];
                }
            }
        }
    }
    ExtendedState::from_amplitudes(d, ctx.basis.clone(), out)
}

fn vec_rhs(ctx: &Context, terms: &VecTerms, s: &ExtendedState) -> Result<ExtendedState> {
    let psi = s.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    let mut lpsi = vec![C64::new(0.0, 0.0); psi.len()];
    with_dim!(ctx.d, sd => kernels::vec_drift(sd, ctx, terms, psi, &mut out, &mut lpsi));
    ExtendedState::from_amplitudes(ctx.d, ctx.basis.clone(), out)
}

fn hops_coeffs(ctx: &Context, st: &Stage) -> (Vec<C64>, Vec<C64>) {
    let a = (0..ctx.n_modes).map(|j| -I * ctx.s[j] * st.f[j]).collect();
    let b = (0..ctx.n_modes).map(|j| -I * ctx.s[j] * st.g[j].conj()).collect();
    (a, b)
}

/// Full linear-hierarchy derivative `[-ΣΓ_j ĉ_j†ĉ_j - iH_eff(t) - iZ*L] s`
/// for a given noise value `z_conj = Z*(t)`.
pub fn hops_linear_rhs(ctx: &Context, t: f64, z_conj: C64, s: &ExtendedState) -> Result<ExtendedState> {
    ctx.check_state(s)?;
    let st = ctx.stage_at(t);
    let (a, b) = hops_coeffs(ctx, &st.view());
    let diag = -I * (st.drive + z_conj);
    vec_rhs(ctx, &VecTerms { a: &a, b: &b, c: &[], diag }, s)
}

/// Noise coefficient of the linear hierarchy: the derivative is
/// `drift + Z*(t) · (-i L s)`.
pub fn hops_noise_coefficient(ctx: &Context, s: &ExtendedState) -> Result<ExtendedState> {
    ctx.check_state(s)?;
    let d = ctx.d;
    let psi = s.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    apply_l_blocks(&ctx.l, d, psi, &mut out, -I);
    ExtendedState::from_amplitudes(d, ctx.basis.clone(), out)
}

fn apply_l_blocks(l: &[C64], d: usize, psi: &[C64], out: &mut [C64], scale: C64) {
    for (src, dst) in psi.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
        for a in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..d {
                acc += l[a * d + c] * src[c];
            }
            dst[a] = scale * acc;
        }
    }
}

fn expectation(op: &[C64], psi: &[C64], d: usize) -> Option<C64> {
    let norm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    if !(norm >= DEGENERATE_NORM) {
        return None;
    }
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            acc += psi[a].conj() * op[a * d + b] * psi[b];
        }
    }
    Some(acc / norm)
}

/// `⟨ψ̃|L|ψ̃⟩/⟨ψ̃|ψ̃⟩` with `ψ̃` the vacuum projection of `s`.
pub fn girsanov_l(s: &ExtendedState, l: &[C64]) -> Result<C64> {
    let d = s.sys_dim();
    if l.len() != d * d {
        return Err(Error::Dimension("coupling operator has the wrong size".into()));
    }
    expectation(l, s.block(0), d)
        .ok_or_else(|| Error::Numerical("degenerate trajectory: vacuum projection vanished".into()))
}

/// `dm_j/dt = -Γ_j m_j + (Γ_j/2) g_j*(t) L(t)`; `Σ_j f_j(t) m_j(t)` then equals
/// `∫_0^t α(t,s) L(s) ds`.
pub fn memory_rhs(model: &BathModel, t: f64, l_val: C64, m: &[C64]) -> Vec<C64> {
    model
        .modes
        .iter()
        .zip(m)
        .map(|(mode, mj)| -mode.rate * mj + 0.5 * mode.rate * mode.g.eval(t).conj() * l_val)
        .collect()
}

/// Girsanov-transformed hierarchy: returns the state and memory derivatives for
/// noise value `z = Z(t)`.
pub fn hops_nonlinear_rhs(
    ctx: &Context,
    t: f64,
    z: C64,
    m: &[C64],
    s: &ExtendedState,
) -> Result<(ExtendedState, Vec<C64>)> {
    ctx.check_state(s)?;
    if m.len() != ctx.n_modes {
        return Err(Error::Dimension("memory state has the wrong number of modes".into()));
    }
    let lbar = girsanov_l(s, &ctx.l)?;
    let st = ctx.stage_at(t);
    let (a, b) = hops_coeffs(ctx, &st.view());
    let shift: C64 = st.f.iter().zip(m).map(|(f, mj)| f * mj).sum();
    let c: Vec<C64> = (0..ctx.n_modes).map(|j| I * lbar * ctx.s[j] * st.f[j]).collect();
    // -i Z̃* L with Z̃* = Z* + i·conj(shift)
    let diag = -I * (st.drive + z.conj()) + shift.conj();
    let ds = vec_rhs(ctx, &VecTerms { a: &a, b: &b, c: &c, diag }, s)?;
    Ok((ds, memory_rhs(&ctx.bath, t, lbar, m)))
}

fn require_pseudomode(ctx: &Context, what: &str) -> Result<()> {
    if ctx.bath.pseudomode_ok() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{what} requires f_j = g_j for all modes")))
    }
}

/// Hierarchy of master equations.
pub fn hme_rhs(ctx: &Context, t: f64, rho: &ExtendedDensity) -> Result<ExtendedDensity> {
    ctx.check_density(rho)?;
    let st = ctx.stage_at(t);
    let n = rho.entries().len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut ws = DensityWs::new(n, ctx.d);
    with_dim!(ctx.d, sd => kernels::hme_drift(sd, ctx, &st.view(), rho.entries(), &mut out, &mut ws, false));
    ExtendedDensity::from_entries(ctx.d, ctx.basis.clone(), out)
}

/// Pseudomode master equation in Lindblad form.
pub fn pme_rhs(ctx: &Context, t: f64, rho: &ExtendedDensity) -> Result<ExtendedDensity> {
    require_pseudomode(ctx, "pseudomode master equation")?;
    ctx.check_density(rho)?;
    let st = ctx.stage_at(t);
    let n = rho.entries().len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut ws = DensityWs::new(n, ctx.d);
    with_dim!(ctx.d, sd => kernels::pme_drift(sd, ctx, &st.view(), rho.entries(), &mut out, &mut ws, false));
    ExtendedDensity::from_entries(ctx.d, ctx.basis.clone(), out)
}

/// Drift and noise parts of one stochastic increment.
#[derive(Debug, Clone)]
pub struct SdeParts {
    pub drift: ExtendedState,
    pub noise: ExtendedState,
}

/// `⟨ĉ_j†⟩` normalized over the full extended state.
pub(crate) fn creation_expectations(ctx: &Context, psi: &[C64], out: &mut [C64]) -> f64 {
    let d = ctx.d;
    let nb = ctx.basis.len();
    let norm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..nb {
            let up = ctx.raise[j * nb + k];
            if up == NONE {
                continue;
            }
            let w = ctx.sq_up[j * nb + k];
            for a in 0..d {
                acc += psi[up * d + a].conj() * psi[k * d + a] * w;
            }
        }
        *o = if norm > 0.0 { acc / norm } else { C64::new(0.0, 0.0) };
    }
    norm
}

pub(crate) fn psse_terms(ctx: &Context, st: &Stage, expect_cdag: Option<&[C64]>) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
    let a: Vec<C64> = (0..ctx.n_modes).map(|j| -I * ctx.s[j] * st.f[j]).collect();
    let b: Vec<C64> = (0..ctx.n_modes).map(|j| -I * ctx.s[j] * st.f[j].conj()).collect();
    let c = match expect_cdag {
        Some(e) => (0..ctx.n_modes).map(|j| 2.0 * ctx.rates[j] * e[j]).collect(),
        None => Vec::new(),
    };
    (a, b, c)
}

/// Pseudomode stochastic Schrödinger equation (Itô form). `increments[j]` is
/// the white-noise increment `ΔS_j` over the step; the noise part is
/// `Σ_j √(2Γ_j) ΔS_j* ĉ_j s`. The nonlinear variant shifts `ΔS_j*` by
/// `√(2Γ_j)⟨ĉ_j†⟩dt`, which appears in the drift as `2Γ_j⟨ĉ_j†⟩ĉ_j s`.
pub fn psse_rhs(
    ctx: &Context,
    t: f64,
    s: &ExtendedState,
    increments: &[C64],
    nonlinear: bool,
) -> Result<SdeParts> {
    require_pseudomode(ctx, "pseudomode stochastic Schrödinger equation")?;
    ctx.check_state(s)?;
    if increments.len() != ctx.n_modes {
        return Err(Error::Dimension("one noise increment per mode is required".into()));
    }
    let st = ctx.stage_at(t);
    let psi = s.amplitudes();
    let mut e = vec![C64::new(0.0, 0.0); ctx.n_modes];
    if nonlinear {
        creation_expectations(ctx, psi, &mut e);
    }
    let (a, b, c) = psse_terms(ctx, &st.view(), nonlinear.then_some(&e[..]));
    let diag = -I * st.drive;
    let drift = vec_rhs(ctx, &VecTerms { a: &a, b: &b, c: &c, diag }, s)?;
    let mut noise = vec![C64::new(0.0, 0.0); psi.len()];
    add_psse_noise(ctx, increments, psi, &mut noise);
    Ok(SdeParts { drift, noise: ExtendedState::from_amplitudes(ctx.d, ctx.basis.clone(), noise)? })
}

/// `out += Σ_j √(2Γ_j) ΔS_j* ĉ_j ψ`.
pub(crate) fn add_psse_noise(ctx: &Context, increments: &[C64], psi: &[C64], out: &mut [C64]) {
    let d = ctx.d;
    let nb = ctx.basis.len();
    for (j, ds) in increments.iter().enumerate() {
        let coef = (2.0 * ctx.rates[j]).sqrt() * ds.conj();
        for k in 0..nb {
            let up = ctx.raise[j * nb + k];
            if up == NONE {
                continue;
            }
            let c = coef * ctx.sq_up[j * nb + k];
            for a in 0..d {
                out[k * d + a] += c * psi[up * d + a];
            }
        }
    }
}

/// `out += h · (-i z*) · L ψ`.
pub(crate) fn add_hops_noise(l: &[C64], d: usize, z: C64, h: f64, psi: &[C64], out: &mut [C64]) {
    let scale = -I * z.conj() * h;
    for (src, dst) in psi.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
        for a in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..d {
                acc += l[a * d + c] * src[c];
            }
            dst[a] += scale * acc;
        }
    }
}
