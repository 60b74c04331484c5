//! Pseudo-Fock space of the effective bath modes.
//!
//! Extended vectors live on `system ⊗ pseudo-Fock`. The layout is
//! system-index fastest: amplitude `k * sys_dim + a` belongs to basis state
//! `k` and system level `a`, so system operators act on contiguous blocks.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Default cap on the number of complex amplitudes an extended object may hold.
pub const DEFAULT_CAPACITY: u128 = 10_000_000;

/// Marker for "no neighbour inside the truncated basis" in ladder tables.
pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationScheme {
    /// `0 <= n_j <= nmax[j]` for every mode.
    Rectangular(Vec<u32>),
    /// `n_1 + ... + n_N <= nsum`.
    Triangular { nsum: u32, modes: usize },
}

impl TruncationScheme {
    pub fn modes(&self) -> usize {
        match self {
            TruncationScheme::Rectangular(nmax) => nmax.len(),
            TruncationScheme::Triangular { modes, .. } => *modes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TruncationScheme::Rectangular(nmax) if nmax.is_empty() => {
                Err(Error::Domain("rectangular truncation needs at least one mode".into()))
            }
            TruncationScheme::Triangular { modes: 0, .. } => {
                Err(Error::Domain("triangular truncation needs at least one mode".into()))
            }
            _ => Ok(()),
        }
    }

    /// Closed-form basis size, `None` on overflow.
    pub fn size(&self) -> Option<u128> {
        match self {
            TruncationScheme::Rectangular(nmax) => nmax
                .iter()
                .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128 + 1)),
            TruncationScheme::Triangular { nsum, modes } => {
                binomial(*nsum as u128 + *modes as u128, *nsum as u128)
            }
        }
    }

    fn admits(&self, n: &[u32]) -> bool {
        match self {
            TruncationScheme::Rectangular(nmax) => n.iter().zip(nmax).all(|(a, b)| a <= b),
            TruncationScheme::Triangular { nsum, .. } => {
                n.iter().map(|&x| x as u64).sum::<u64>() <= *nsum as u64
            }
        }
    }
}

pub(crate) fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Enumerated multi-indices of a truncated pseudo-Fock space, vacuum first,
/// lexicographic in `(n_1, ..., n_N)`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    scheme: TruncationScheme,
    modes: usize,
    occ: Vec<u32>,
    flat_of: HashMap<Vec<u32>, usize>,
    // raise[j * len + k] = index of n_k + e_j (or NONE); lower likewise.
    raise: Vec<usize>,
    lower: Vec<usize>,
}

/// Enumerate the basis for `scheme` with the default capacity cap.
pub fn build_basis(scheme: TruncationScheme) -> Result<FockBasis> {
    FockBasis::with_capacity(scheme, DEFAULT_CAPACITY)
}

impl FockBasis {
    pub fn new(scheme: TruncationScheme) -> Result<Self> {
        build_basis(scheme)
    }

    pub fn with_capacity(scheme: TruncationScheme, cap: u128) -> Result<Self> {
        scheme.validate()?;
        let requested = scheme.size().unwrap_or(u128::MAX);
        if requested > cap {
            return Err(Error::Capacity { requested, cap });
        }
        let modes = scheme.modes();
        let size = requested as usize;

        let mut occ = Vec::with_capacity(size * modes);
        let mut current = vec![0u32; modes];
        // Odometer over the bounding box, last mode fastest; triangular
        // schemes reset a digit once the running sum would exceed nsum.
        loop {
            occ.extend_from_slice(&current);
            if !advance(&scheme, &mut current) {
                break;
            }
        }
        debug_assert_eq!(occ.len(), size * modes);

        let mut flat_of = HashMap::with_capacity(size);
        for k in 0..size {
            flat_of.insert(occ[k * modes..(k + 1) * modes].to_vec(), k);
        }

        let mut raise = vec![NONE; modes * size];
        let mut lower = vec![NONE; modes * size];
        let mut key = vec![0u32; modes];
        for k in 0..size {
            for j in 0..modes {
                key.copy_from_slice(&occ[k * modes..(k + 1) * modes]);
                key[j] += 1;
                if let Some(&idx) = flat_of.get(&key) {
                    raise[j * size + k] = idx;
                    lower[j * size + idx] = k;
                }
            }
        }

        Ok(FockBasis { scheme, modes, occ, flat_of, raise, lower })
    }

    pub fn scheme(&self) -> &TruncationScheme {
        &self.scheme
    }

    pub fn len(&self) -> usize {
        self.flat_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Occupation vector of basis state `k`.
    pub fn occupation(&self, k: usize) -> &[u32] {
        &self.occ[k * self.modes..(k + 1) * self.modes]
    }

    pub fn occupation_of(&self, k: usize, j: usize) -> u32 {
        self.occ[k * self.modes + j]
    }

    /// Total occupation `Σ_j n_j` of state `k`.
    pub fn total_occupation(&self, k: usize) -> u32 {
        self.occupation(k).iter().sum()
    }

    pub fn index_of(&self, n: &[u32]) -> Option<usize> {
        self.flat_of.get(n).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.occ.chunks(self.modes.max(1))
    }

    /// Index of `n_k + e_j` if it lies inside the truncation.
    pub fn raised(&self, j: usize, k: usize) -> Option<usize> {
        let v = self.raise[j * self.len() + k];
        (v != NONE).then_some(v)
    }

    /// Index of `n_k - e_j` if `n_j > 0`.
    pub fn lowered(&self, j: usize, k: usize) -> Option<usize> {
        let v = self.lower[j * self.len() + k];
        (v != NONE).then_some(v)
    }

    pub(crate) fn raise_table(&self, j: usize) -> &[usize] {
        let n = self.len();
        &self.raise[j * n..(j + 1) * n]
    }

    pub(crate) fn lower_table(&self, j: usize) -> &[usize] {
        let n = self.len();
        &self.lower[j * n..(j + 1) * n]
    }

    /// True if state `k` has an occupation on the truncation boundary, i.e.
    /// some creation operator would leave the basis.
    pub fn on_boundary(&self, k: usize) -> bool {
        (0..self.modes).any(|j| self.raised(j, k).is_none())
    }

    fn check_mode(&self, j: usize) -> Result<()> {
        if j >= self.modes {
            return Err(Error::Domain(format!(
                "mode index {j} out of range for {} modes",
                self.modes
            )));
        }
        Ok(())
    }
}

fn advance(scheme: &TruncationScheme, current: &mut [u32]) -> bool {
    let n = current.len();
    for pos in (0..n).rev() {
        current[pos] += 1;
        if scheme.admits(current) {
            return true;
        }
        current[pos] = 0;
    }
    false
}

/// Vector on `system ⊗ pseudo-Fock`.
#[derive(Debug, Clone)]
pub struct ExtendedState {
    sys_dim: usize,
    basis: Arc<FockBasis>,
    amps: Vec<C64>,
}

impl ExtendedState {
    pub fn zeros(sys_dim: usize, basis: Arc<FockBasis>) -> Result<Self> {
        let len = checked_len(sys_dim as u128 * basis.len() as u128)?;
        Ok(ExtendedState { sys_dim, basis, amps: vec![C64::new(0.0, 0.0); len] })
    }

    pub fn from_amplitudes(sys_dim: usize, basis: Arc<FockBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != sys_dim * basis.len() {
            return Err(Error::Dimension(format!(
                "expected {} amplitudes, got {}",
                sys_dim * basis.len(),
                amps.len()
            )));
        }
        Ok(ExtendedState { sys_dim, basis, amps })
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// System block of basis state `k`.
    pub fn block(&self, k: usize) -> &[C64] {
        &self.amps[k * self.sys_dim..(k + 1) * self.sys_dim]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [C64] {
        let d = self.sys_dim;
        &mut self.amps[k * d..(k + 1) * d]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &ExtendedState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

fn checked_len(n: u128) -> Result<usize> {
    if n > DEFAULT_CAPACITY {
        return Err(Error::Capacity { requested: n, cap: DEFAULT_CAPACITY });
    }
    Ok(n as usize)
}

/// `ĉ_j s`: amplitude at `n` receives `√(n_j+1)` times the amplitude at `n + e_j`.
pub fn apply_annihilation(j: usize, s: &ExtendedState) -> Result<ExtendedState> {
    s.basis.check_mode(j)?;
    let d = s.sys_dim;
    let mut out = ExtendedState::zeros(d, s.basis.clone())?;
    let raise = s.basis.raise_table(j);
    for (k, &src) in raise.iter().enumerate() {
        if src == NONE {
            continue;
        }
        let c = ((s.basis.occupation_of(k, j) + 1) as f64).sqrt();
        for a in 0..d {
            out.amps[k * d + a] = s.amps[src * d + a] * c;
        }
    }
    Ok(out)
}

/// `ĉ_j† s`; amplitudes that would leave the truncated basis are dropped.
pub fn apply_creation(j: usize, s: &ExtendedState) -> Result<ExtendedState> {
    s.basis.check_mode(j)?;
    let d = s.sys_dim;
    let mut out = ExtendedState::zeros(d, s.basis.clone())?;
    let lower = s.basis.lower_table(j);
    for (k, &src) in lower.iter().enumerate() {
        if src == NONE {
            continue;
        }
        let c = (s.basis.occupation_of(k, j) as f64).sqrt();
        for a in 0..d {
            out.amps[k * d + a] = s.amps[src * d + a] * c;
        }
    }
    Ok(out)
}

/// `ψ_S ⊗ |0⟩`.
pub fn vacuum_embed(psi: &[C64], sys_dim: usize, basis: Arc<FockBasis>) -> Result<ExtendedState> {
    if psi.len() != sys_dim {
        return Err(Error::Dimension(format!(
            "system vector has length {}, expected {sys_dim}",
            psi.len()
        )));
    }
    let mut out = ExtendedState::zeros(sys_dim, basis)?;
    out.amps[..sys_dim].copy_from_slice(psi);
    Ok(out)
}

/// `⟨0|s⟩`, the physical system state.
pub fn project_vacuum(s: &ExtendedState) -> Vec<C64> {
    s.block(0).to_vec()
}

/// Operator on `system ⊗ pseudo-Fock`, stored dense and row-major.
#[derive(Debug, Clone)]
pub struct ExtendedDensity {
    sys_dim: usize,
    basis: Arc<FockBasis>,
    entries: Vec<C64>,
}

impl ExtendedDensity {
    pub fn zeros(sys_dim: usize, basis: Arc<FockBasis>) -> Result<Self> {
        let dim = sys_dim as u128 * basis.len() as u128;
        let len = checked_len(dim * dim)?;
        Ok(ExtendedDensity { sys_dim, basis, entries: vec![C64::new(0.0, 0.0); len] })
    }

    /// `ρ_S ⊗ |0⟩⟨0|` from a row-major system matrix.
    pub fn vacuum_product(rho_s: &[C64], sys_dim: usize, basis: Arc<FockBasis>) -> Result<Self> {
        if rho_s.len() != sys_dim * sys_dim {
            return Err(Error::Dimension("system density has wrong size".into()));
        }
        let mut out = Self::zeros(sys_dim, basis)?;
        let dim = out.dim();
        for a in 0..sys_dim {
            for b in 0..sys_dim {
                out.entries[a * dim + b] = rho_s[a * sys_dim + b];
            }
        }
        Ok(out)
    }

    pub fn from_entries(sys_dim: usize, basis: Arc<FockBasis>, entries: Vec<C64>) -> Result<Self> {
        let dim = sys_dim * basis.len();
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!("expected {} entries", dim * dim)));
        }
        Ok(ExtendedDensity { sys_dim, basis, entries })
    }

    /// Side length `d_S · |basis|`.
    pub fn dim(&self) -> usize {
        self.sys_dim * self.basis.len()
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn trace(&self) -> C64 {
        let n = self.dim();
        (0..n).map(|i| self.entries[i * n + i]).sum()
    }

    /// Max |ρ - ρ†| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[i * n + j] - self.entries[j * n + i].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}
