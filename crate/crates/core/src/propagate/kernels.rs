//! Matrix-free right-hand sides on `system ⊗ pseudo-Fock`.
//!
//! Each kernel is generic over the system dimension so that the common
//! two-level case is monomorphized with fully unrolled block loops.

use super::{Context, Stage};
use crate::fock::NONE;
use crate::{C64, I};

pub(crate) trait SysDim: Copy {
    fn d(self) -> usize;
}

#[derive(Clone, Copy)]
pub(crate) struct Fixed<const N: usize>;

impl<const N: usize> SysDim for Fixed<N> {
    #[inline(always)]
    fn d(self) -> usize {
        N
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Dyn(pub usize);

impl SysDim for Dyn {
    #[inline(always)]
    fn d(self) -> usize {
        self.0
    }
}

/// Dispatch `$body` with `$sd` bound to a [`SysDim`] matching `$d`.
macro_rules! with_dim {
    ($d:expr, $sd:ident => $body:expr) => {
        match $d {
            2 => {
                let $sd = $crate::propagate::kernels::Fixed::<2>;
                $body
            }
            3 => {
                let $sd = $crate::propagate::kernels::Fixed::<3>;
                $body
            }
            other => {
                let $sd = $crate::propagate::kernels::Dyn(other);
                $body
            }
        }
    };
}
pub(crate) use with_dim;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Per-mode coefficients of the generic extended-vector drift
///
/// `out_k = -decay_k ψ_k - i H ψ_k + diag·(Lψ)_k
///        + Σ_j [a_j √(n_j+1) (Lψ)_{k+e_j} + b_j √n_j (Lψ)_{k-e_j} + c_j √(n_j+1) ψ_{k+e_j}]`.
pub(crate) struct VecTerms<'a> {
    pub a: &'a [C64],
    pub b: &'a [C64],
    /// Empty when no plain-ladder term is present.
    pub c: &'a [C64],
    pub diag: C64,
}

pub(crate) fn vec_drift<S: SysDim>(
    sd: S,
    ctx: &Context,
    terms: &VecTerms,
    psi: &[C64],
    out: &mut [C64],
    lpsi: &mut [C64],
) {
    let d = sd.d();
    let nb = ctx.basis.len();
    let h = &ctx.h_s[..d * d];
    let l = &ctx.l[..d * d];
    for k in 0..nb {
        let src = &psi[k * d..k * d + d];
        let dst = &mut lpsi[k * d..k * d + d];
        for a in 0..d {
            let mut acc = ZERO;
            for c in 0..d {
                acc += l[a * d + c] * src[c];
            }
            dst[a] = acc;
        }
    }
    let modes = ctx.n_modes;
    for k in 0..nb {
        let dec = -ctx.decay[k];
        let acc = &mut out[k * d..k * d + d];
        let src = &psi[k * d..k * d + d];
        let lsrc = &lpsi[k * d..k * d + d];
        for a in 0..d {
            let mut hx = ZERO;
            for c in 0..d {
                hx += h[a * d + c] * src[c];
            }
            acc[a] = src[a] * dec - I * hx + terms.diag * lsrc[a];
        }
        for j in 0..modes {
            let up = ctx.raise[j * nb + k];
            if up != NONE {
                let w = ctx.sq_up[j * nb + k];
                let ca = terms.a[j] * w;
                let lu = &lpsi[up * d..up * d + d];
                for a in 0..d {
                    acc[a] += ca * lu[a];
                }
                if !terms.c.is_empty() {
                    let cc = terms.c[j] * w;
                    let pu = &psi[up * d..up * d + d];
                    for a in 0..d {
                        acc[a] += cc * pu[a];
                    }
                }
            }
            let dn = ctx.lower[j * nb + k];
            if dn != NONE {
                let cb = terms.b[j] * ctx.sq_dn[j * nb + k];
                let ld = &lpsi[dn * d..dn * d + d];
                for a in 0..d {
                    acc[a] += cb * ld[a];
                }
            }
        }
    }
}

/// `A = (1⊗L)ρ` and `B = ρ(1⊗L)` for a row-major `dim × dim` matrix.
fn left_right_l<S: SysDim>(sd: S, l: &[C64], rho: &[C64], a_out: &mut [C64], b_out: &mut [C64], nb: usize) {
    let d = sd.d();
    let dim = nb * d;
    for k in 0..nb {
        for a in 0..d {
            let row = &mut a_out[(k * d + a) * dim..(k * d + a + 1) * dim];
            row.fill(ZERO);
            for c in 0..d {
                let lac = l[a * d + c];
                if lac == ZERO {
                    continue;
                }
                let src = &rho[(k * d + c) * dim..(k * d + c + 1) * dim];
                for (r, s) in row.iter_mut().zip(src) {
                    *r += lac * s;
                }
            }
        }
    }
    for r in 0..dim {
        let src = &rho[r * dim..(r + 1) * dim];
        let dst = &mut b_out[r * dim..(r + 1) * dim];
        for m in 0..nb {
            let s = &src[m * d..m * d + d];
            for b in 0..d {
                let mut acc = ZERO;
                for c in 0..d {
                    acc += s[c] * l[c * d + b];
                }
                dst[m * d + b] = acc;
            }
        }
    }
}

#[inline(always)]
fn block_axpy<S: SysDim>(sd: S, acc: &mut [C64], coef: C64, m: &[C64], row0: usize, col0: usize, dim: usize) {
    let d = sd.d();
    for a in 0..d {
        let base = (row0 + a) * dim + col0;
        for b in 0..d {
            acc[a * d + b] += coef * m[base + b];
        }
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn block_axpy_diff<S: SysDim>(
    sd: S,
    acc: &mut [C64],
    coef: C64,
    x: &[C64],
    y: &[C64],
    row0: usize,
    col0: usize,
    dim: usize,
) {
    let d = sd.d();
    for a in 0..d {
        let base = (row0 + a) * dim + col0;
        for b in 0..d {
            acc[a * d + b] += coef * (x[base + b] - y[base + b]);
        }
    }
}

/// Shared prologue of the density kernels: decay, commutator with `H(t)` and
/// the drive term, for block `(k, m)`.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn block_common<S: SysDim>(
    sd: S,
    ctx: &Context,
    drive: f64,
    rho: &[C64],
    a_m: &[C64],
    b_m: &[C64],
    k: usize,
    m: usize,
    acc: &mut [C64],
) {
    let d = sd.d();
    let dim = ctx.basis.len() * d;
    let h = &ctx.h_s[..d * d];
    let dec = -(ctx.decay[k] + ctx.decay[m]);
    let (r0, c0) = (k * d, m * d);
    let mi_drive = C64::new(0.0, -drive);
    for a in 0..d {
        for b in 0..d {
            let mut hr = ZERO;
            for c in 0..d {
                hr += h[a * d + c] * rho[(r0 + c) * dim + c0 + b] - rho[(r0 + a) * dim + c0 + c] * h[c * d + b];
            }
            let idx = (r0 + a) * dim + c0 + b;
            acc[a * d + b] = rho[idx] * dec - I * hr + mi_drive * (a_m[idx] - b_m[idx]);
        }
    }
}

#[inline(always)]
fn store_block<S: SysDim>(sd: S, out: &mut [C64], acc: &[C64], k: usize, m: usize, dim: usize, mirror: bool) {
    let d = sd.d();
    for a in 0..d {
        for b in 0..d {
            out[(k * d + a) * dim + m * d + b] = acc[a * d + b];
        }
    }
    if mirror && k != m {
        for a in 0..d {
            for b in 0..d {
                out[(m * d + b) * dim + k * d + a] = acc[a * d + b].conj();
            }
        }
    }
}

/// Workspace for the density kernels.
pub(crate) struct DensityWs {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub acc: Vec<C64>,
}

impl DensityWs {
    pub fn new(len: usize, d: usize) -> Self {
        DensityWs { a: vec![ZERO; len], b: vec![ZERO; len], acc: vec![ZERO; d * d] }
    }
}

/// Hierarchy of master equations. With `hermitian` set, only blocks `k <= m`
/// are computed and the rest is mirrored; valid whenever `ρ = ρ†`, which the
/// flow preserves.
pub(crate) fn hme_drift<S: SysDim>(sd: S, ctx: &Context, st: &Stage, rho: &[C64], out: &mut [C64], ws: &mut DensityWs, hermitian: bool) {
    let d = sd.d();
    let nb = ctx.basis.len();
    let dim = nb * d;
    left_right_l(sd, &ctx.l, rho, &mut ws.a, &mut ws.b, nb);
    let (am, bm) = (&ws.a[..], &ws.b[..]);
    let modes = ctx.n_modes;
    // p = -i s f, q = -i s g*, r = -i s f*, w = i s g
    let mut coef = [[ZERO; 4]; 8];
    let mut coef_heap;
    let coef: &mut [[C64; 4]] = if modes <= 8 {
        &mut coef[..modes]
    } else {
        coef_heap = vec![[ZERO; 4]; modes];
        &mut coef_heap
    };
    for (j, c) in coef.iter_mut().enumerate().take(modes) {
        let s = ctx.s[j];
        let (f, g) = (st.f[j], st.g[j]);
        *c = [-I * s * f, -I * s * g.conj(), -I * s * f.conj(), I * s * g];
    }
    let acc = &mut ws.acc[..d * d];
    for k in 0..nb {
        for m in if hermitian { k } else { 0 }..nb {
            block_common(sd, ctx, st.drive, rho, am, bm, k, m, acc);
            for (j, cj) in coef.iter().enumerate() {
                let up = ctx.raise[j * nb + k];
                if up != NONE {
                    block_axpy_diff(sd, acc, cj[0] * ctx.sq_up[j * nb + k], am, bm, up * d, m * d, dim);
                }
                let dn = ctx.lower[j * nb + k];
                if dn != NONE {
                    block_axpy(sd, acc, cj[1] * ctx.sq_dn[j * nb + k], am, dn * d, m * d, dim);
                }
                let up = ctx.raise[j * nb + m];
                if up != NONE {
                    block_axpy_diff(sd, acc, cj[2] * ctx.sq_up[j * nb + m], am, bm, k * d, up * d, dim);
                }
                let dn = ctx.lower[j * nb + m];
                if dn != NONE {
                    block_axpy(sd, acc, cj[3] * ctx.sq_dn[j * nb + m], bm, k * d, dn * d, dim);
                }
            }
            store_block(sd, out, acc, k, m, dim, hermitian);
        }
    }
}

/// Pseudomode master equation (Lindblad form); `hermitian` as for [`hme_drift`].
pub(crate) fn pme_drift<S: SysDim>(sd: S, ctx: &Context, st: &Stage, rho: &[C64], out: &mut [C64], ws: &mut DensityWs, hermitian: bool) {
    let d = sd.d();
    let nb = ctx.basis.len();
    let dim = nb * d;
    left_right_l(sd, &ctx.l, rho, &mut ws.a, &mut ws.b, nb);
    let (am, bm) = (&ws.a[..], &ws.b[..]);
    let modes = ctx.n_modes;
    let acc = &mut ws.acc[..d * d];
    for k in 0..nb {
        for m in if hermitian { k } else { 0 }..nb {
            block_common(sd, ctx, st.drive, rho, am, bm, k, m, acc);
            for j in 0..modes {
                let s = ctx.s[j];
                let f = st.f[j];
                let (msf, msfc) = (-I * s * f, -I * s * f.conj());
                let up_k = ctx.raise[j * nb + k];
                if up_k != NONE {
                    block_axpy(sd, acc, msf * ctx.sq_up[j * nb + k], am, up_k * d, m * d, dim);
                }
                let dn_k = ctx.lower[j * nb + k];
                if dn_k != NONE {
                    block_axpy(sd, acc, msfc * ctx.sq_dn[j * nb + k], am, dn_k * d, m * d, dim);
                }
                let dn_m = ctx.lower[j * nb + m];
                if dn_m != NONE {
                    block_axpy(sd, acc, -msf * ctx.sq_dn[j * nb + m], bm, k * d, dn_m * d, dim);
                }
                let up_m = ctx.raise[j * nb + m];
                if up_m != NONE {
                    block_axpy(sd, acc, -msfc * ctx.sq_up[j * nb + m], bm, k * d, up_m * d, dim);
                }
                // jump term 2Γ c ρ c†
                if up_k != NONE && up_m != NONE {
                    let w = 2.0 * ctx.rates[j] * ctx.sq_up[j * nb + k] * ctx.sq_up[j * nb + m];
                    block_axpy(sd, acc, C64::new(w, 0.0), rho, up_k * d, up_m * d, dim);
                }
            }
            store_block(sd, out, acc, k, m, dim, hermitian);
        }
    }
}
