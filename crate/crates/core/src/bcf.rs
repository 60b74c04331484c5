//! Bath correlation functions of the form
//! `α(t,s) = Σ_j (Γ_j/2) e^{-Γ_j|t-s|} f_j(t) g_j*(s)`, the benchmark baths
//! built from it, and the system (Hamiltonian + coupling) description.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Unit-area exponential memory kernel `(Γ/2) e^{-Γ|τ|}`.
pub fn kernel(rate: f64, tau: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("kernel rate must be positive, got {rate}")));
    }
    Ok(kernel_unchecked(rate, tau))
}

#[inline]
pub(crate) fn kernel_unchecked(rate: f64, tau: f64) -> f64 {
    0.5 * rate * (-rate * tau.abs()).exp()
}

#[inline]
pub(crate) fn cis(theta: f64) -> C64 {
    let (s, c) = theta.sin_cos();
    C64::new(c, s)
}

/// Principal square root that is exact for non-negative reals.
pub(crate) fn sqrt_c(z: C64) -> C64 {
    if z.im == 0.0 && z.re >= 0.0 {
        C64::new(z.re.sqrt(), 0.0)
    } else {
        z.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Harmonic {
    Cos,
    Sin,
}

/// Time dependence `f_j(t)` or `g_j(t)` of one effective mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeCoefficient {
    /// `amp · e^{-i freq t}`.
    Stationary { amp: C64, freq: f64 },
    /// `a {u e^{-i(ω0 t - φ/2)} - v e^{i(ω0 t - φ/2)}} e^{-iΔt}` with `u = cosh r`,
    /// `v = sinh r` and `a = √γ` (or `√γ*` when `conj_amp`).
    UniformSqueezed {
        coupling: C64,
        center: f64,
        squeeze: f64,
        phase: f64,
        #[serde(default)]
        detuning: f64,
        #[serde(default)]
        conj_amp: bool,
    },
    /// `prefactor · cos(ω0 t - φ/2)` or `prefactor · sin(ω0 t - φ/2)`.
    Harmonic { prefactor: f64, shape: Harmonic, center: f64, phase: f64 },
    /// Linear interpolation of samples; constant continuation outside the grid.
    Tabulated { times: Vec<f64>, values: Vec<C64> },
}

impl TimeCoefficient {
    pub fn eval(&self, t: f64) -> C64 {
        match self {
            TimeCoefficient::Stationary { amp, freq } => amp * cis(-freq * t),
            TimeCoefficient::UniformSqueezed { coupling, center, squeeze, phase, detuning, conj_amp } => {
                let a = if *conj_amp { sqrt_c(coupling.conj()) } else { sqrt_c(*coupling) };
                if *squeeze == 0.0 {
                    // Same arithmetic as `Stationary` so that unsqueezed baths
                    // reproduce stationary runs bit for bit.
                    return a * cis(-((center + detuning) * t) + 0.5 * phase);
                }
                let theta = center * t - 0.5 * phase;
                let (u, v) = (squeeze.cosh(), squeeze.sinh());
                let core = cis(-theta) * u - cis(theta) * v;
                if *detuning == 0.0 {
                    a * core
                } else {
                    a * core * cis(-detuning * t)
                }
            }
            TimeCoefficient::Harmonic { prefactor, shape, center, phase } => {
                let theta = center * t - 0.5 * phase;
                let x = match shape {
                    Harmonic::Cos => theta.cos(),
                    Harmonic::Sin => theta.sin(),
                };
                C64::new(prefactor * x, 0.0)
            }
            TimeCoefficient::Tabulated { times, values } => interpolate(times, values, t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TimeCoefficient::Stationary { amp, freq } => {
                finite_c(*amp, "stationary amplitude")?;
                finite(*freq, "stationary frequency")
            }
            TimeCoefficient::UniformSqueezed { coupling, center, squeeze, phase, detuning, .. } => {
                finite_c(*coupling, "coupling")?;
                finite(*center, "center frequency")?;
                finite(*phase, "phase")?;
                finite(*detuning, "detuning")?;
                if !(*squeeze >= 0.0) || !squeeze.is_finite() {
                    return Err(Error::Domain(format!("squeezing r must be >= 0, got {squeeze}")));
                }
                Ok(())
            }
            TimeCoefficient::Harmonic { prefactor, center, phase, .. } => {
                finite(*prefactor, "prefactor")?;
                finite(*center, "center frequency")?;
                finite(*phase, "phase")
            }
            TimeCoefficient::Tabulated { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(Error::Domain(
                        "tabulated coefficient needs at least two (t, value) pairs".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Domain("tabulated grid must be strictly increasing".into()));
                }
                for v in values {
                    finite_c(*v, "tabulated value")?;
                }
                Ok(())
            }
        }
    }

    /// Whether the coefficient is defined on `[t0, t1]` without extrapolation.
    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        match self {
            TimeCoefficient::Tabulated { times, .. } => {
                times.first().is_some_and(|&a| a <= t0) && times.last().is_some_and(|&b| b >= t1)
            }
            _ => true,
        }
    }
}

fn interpolate(times: &[f64], values: &[C64], t: f64) -> C64 {
    let n = times.len();
    if t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let hi = times.partition_point(|&x| x <= t);
    let lo = hi - 1;
    let w = (t - times[lo]) / (times[hi] - times[lo]);
    values[lo] * (1.0 - w) + values[hi] * w
}

fn finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite")))
    }
}

fn finite_c(z: C64, what: &str) -> Result<()> {
    finite(z.re, what)?;
    finite(z.im, what)
}

/// One exponential term `(Γ_j, f_j, g_j)` of the correlation function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathMode {
    pub rate: f64,
    pub f: TimeCoefficient,
    pub g: TimeCoefficient,
}

impl BathMode {
    pub fn new(rate: f64, f: TimeCoefficient, g: TimeCoefficient) -> Result<Self> {
        let mode = BathMode { rate, f, g };
        mode.validate()?;
        Ok(mode)
    }

    /// Mode with `g = f`.
    pub fn symmetric(rate: f64, f: TimeCoefficient) -> Result<Self> {
        Self::new(rate, f.clone(), f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::Domain(format!("mode rate Γ must be positive, got {}", self.rate)));
        }
        self.f.validate()?;
        self.g.validate()
    }

    /// True when `f ≡ g`, which is what the pseudomode methods need.
    pub fn pseudomode_ok(&self) -> bool {
        self.f == self.g
    }
}

/// Classical drive `𝓑(t) = Σ_λ g_λ(t) α_λ + c.c.`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub couplings: Vec<TimeCoefficient>,
    pub displacements: Vec<C64>,
}

impl Drive {
    pub fn eval(&self, t: f64) -> f64 {
        self.couplings
            .iter()
            .zip(&self.displacements)
            .map(|(g, a)| 2.0 * (g.eval(t) * a).re)
            .sum()
    }
}

/// Thermal-noise covariance `E[Y(t)Y(s)] = Σ_λ 2 n̄_λ Re[g_λ(t) g_λ*(s)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalCov {
    pub couplings: Vec<TimeCoefficient>,
    pub occupations: Vec<f64>,
}

impl ThermalCov {
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        self.couplings
            .iter()
            .zip(&self.occupations)
            .map(|(g, n)| 2.0 * n * (g.eval(t) * g.eval(s).conj()).re)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.occupations.iter().all(|&n| n == 0.0)
    }
}

/// Result of embedding a displaced squeezed thermal bath.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalEmbedding {
    pub drive: Drive,
    pub thermal_cov: ThermalCov,
    couplings: Vec<TimeCoefficient>,
}

impl ThermalEmbedding {
    /// Temperature-independent effective correlation `Σ_λ g_λ(t) g_λ*(s)`.
    pub fn effective_bcf(&self, t: f64, s: f64) -> C64 {
        self.couplings.iter().map(|g| g.eval(t) * g.eval(s).conj()).sum()
    }
}

/// Split a discrete bath `{g_λ(t), n̄_λ, α_λ}` into classical drive, thermal
/// covariance and effective correlation function. Each `g_λ(t)` carries its own
/// oscillation, e.g. `e^{-iω_λ t}`.
pub fn thermal_embedding(
    couplings: Vec<TimeCoefficient>,
    occupations: Vec<f64>,
    displacements: Vec<C64>,
) -> Result<ThermalEmbedding> {
    if couplings.len() != occupations.len() || couplings.len() != displacements.len() {
        return Err(Error::Dimension(
            "couplings, occupations and displacements must have equal length".into(),
        ));
    }
    for (i, &n) in occupations.iter().enumerate() {
        if !(n >= 0.0) || !n.is_finite() {
            return Err(Error::Domain(format!("occupation {i} must be >= 0, got {n}")));
        }
    }
    for g in &couplings {
        g.validate()?;
    }
    Ok(ThermalEmbedding {
        drive: Drive { couplings: couplings.clone(), displacements },
        thermal_cov: ThermalCov { couplings: couplings.clone(), occupations },
        couplings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathModel {
    pub modes: Vec<BathMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<Drive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_cov: Option<ThermalCov>,
}

impl BathModel {
    pub fn new(modes: Vec<BathMode>) -> Result<Self> {
        let model = BathModel { modes, drive: None, thermal_cov: None };
        model.validate()?;
        Ok(model)
    }

    pub fn with_environment(mut self, env: &ThermalEmbedding) -> Self {
        self.drive = Some(env.drive.clone());
        self.thermal_cov = (!env.thermal_cov.is_zero()).then(|| env.thermal_cov.clone());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::Domain("a bath needs at least one effective mode".into()));
        }
        for m in &self.modes {
            m.validate()?;
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.rate).collect()
    }

    /// True iff every mode has `f_j ≡ g_j`.
    pub fn pseudomode_ok(&self) -> bool {
        self.modes.iter().all(BathMode::pseudomode_ok)
    }

    pub fn eval_bcf(&self, t: f64, s: f64) -> C64 {
        self.modes
            .iter()
            .map(|m| kernel_unchecked(m.rate, t - s) * m.f.eval(t) * m.g.eval(s).conj())
            .sum()
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        let coeffs = self.modes.iter().flat_map(|m| [&m.f, &m.g]);
        let env = self
            .drive
            .iter()
            .flat_map(|d| d.couplings.iter())
            .chain(self.thermal_cov.iter().flat_map(|c| c.couplings.iter()));
        coeffs.chain(env).all(|c| c.covers(t0, t1))
    }
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg.to_string()))
    }
}

/// Single squeezed mode: `f = g = √γ{u e^{-i(ω0t-φ/2)} - v e^{i(ω0t-φ/2)}}`.
pub fn single_mode_squeezed(gamma: f64, omega0: f64, r: f64, phi: f64, rate: f64) -> Result<BathModel> {
    require(gamma >= 0.0 && gamma.is_finite(), "coupling γ must be >= 0")?;
    require(rate > 0.0 && rate.is_finite(), "rate Γ must be > 0")?;
    require(r >= 0.0 && r.is_finite(), "squeezing r must be >= 0")?;
    let f = TimeCoefficient::UniformSqueezed {
        coupling: C64::new(gamma, 0.0),
        center: omega0,
        squeeze: r,
        phase: phi,
        detuning: 0.0,
        conj_amp: false,
    };
    BathModel::new(vec![BathMode::symmetric(rate, f)?])
}

/// Bogoliubov coefficients `(u, v)` of the first (broadband) DPA mode.
pub fn dpa_bogoliubov(gamma0: f64, rate: f64, eps: f64) -> Result<(f64, f64)> {
    dpa_check(gamma0, rate, eps)?;
    let (gp, gm) = (rate + eps, rate - eps);
    let den = ((gamma0 * gamma0 - gp * gp) * (gamma0 * gamma0 - gm * gm)).sqrt();
    let u = (gamma0 * gamma0 - rate * rate - eps * eps) / den;
    let v = 2.0 * rate * eps / den;
    Ok((u, v))
}

fn dpa_check(gamma0: f64, rate: f64, eps: f64) -> Result<()> {
    require(eps > 0.0 && eps.is_finite(), "pump amplitude must satisfy ε > 0")?;
    require(eps < rate, "below-threshold condition ε < Γ violated")?;
    require(gamma0 > rate + eps, "bandwidth condition Γ0 > Γ + ε violated")?;
    require(gamma0.is_finite(), "Γ0 must be finite")
}

/// Three-mode output field of a degenerate parametric amplifier.
pub fn dpa_three_mode(gamma: f64, omega0: f64, gamma0: f64, rate: f64, eps: f64, phi: f64) -> Result<BathModel> {
    require(gamma >= 0.0 && gamma.is_finite(), "coupling γ must be >= 0")?;
    let (_, v) = dpa_bogoliubov(gamma0, rate, eps)?;
    let (gp, gm) = (rate + eps, rate - eps);
    let g02 = gamma0 * gamma0;
    let pre2 = (4.0 * gamma * rate * eps / (gm * gm) * g02 / (g02 - gm * gm)).sqrt();
    let pre3 = (4.0 * gamma * rate * eps / (gp * gp) * g02 / (g02 - gp * gp)).sqrt();

    let f1 = TimeCoefficient::UniformSqueezed {
        coupling: C64::new(gamma, 0.0),
        center: omega0,
        squeeze: v.asinh(),
        phase: phi,
        detuning: 0.0,
        conj_amp: false,
    };
    let harmonic = |prefactor, shape| TimeCoefficient::Harmonic { prefactor, shape, center: omega0, phase: phi };
    BathModel::new(vec![
        BathMode::symmetric(gamma0, f1)?,
        BathMode::symmetric(gm, harmonic(pre2, Harmonic::Cos))?,
        BathMode::new(gp, harmonic(pre3, Harmonic::Sin), harmonic(-pre3, Harmonic::Sin))?,
    ])
}

/// `r̃ = arccosh(Γ/√(Γ²-ε²))`.
pub fn effective_squeezing(rate: f64, eps: f64) -> Result<f64> {
    require(rate > 0.0, "rate Γ must be > 0")?;
    require((0.0..rate).contains(&eps), "effective squeezing needs 0 <= ε < Γ")?;
    Ok((rate / (rate * rate - eps * eps).sqrt()).acosh())
}

/// One term of a uniformly squeezed multimode bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezedTerm {
    pub gamma: C64,
    pub omega: f64,
    pub rate: f64,
}

/// `f_j = √γ_j{…}e^{-iΔ_j t}`, `g_j = √γ_j*{…}e^{-iΔ_j t}` with `Δ_j = ω_j - ω0`.
pub fn uniform_squeezed_multimode(terms: &[SqueezedTerm], r: f64, phi: f64, omega0: f64) -> Result<BathModel> {
    require(r >= 0.0 && r.is_finite(), "squeezing r must be >= 0")?;
    let modes = terms
        .iter()
        .map(|term| {
            let make = |conj_amp| TimeCoefficient::UniformSqueezed {
                coupling: term.gamma,
                center: omega0,
                squeeze: r,
                phase: phi,
                detuning: term.omega - omega0,
                conj_amp,
            };
            // For real γ the two branches coincide; keep g structurally equal to f.
            let g = if term.gamma.im == 0.0 && term.gamma.re >= 0.0 { make(false) } else { make(true) };
            BathMode::new(term.rate, make(false), g)
        })
        .collect::<Result<Vec<_>>>()?;
    BathModel::new(modes)
}

/// System Hamiltonian and coupling operator, both row-major `dim × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub dim: usize,
    pub hamiltonian: Vec<C64>,
    pub coupling: Vec<C64>,
}

pub const HERMITIAN_TOL: f64 = 1e-12;

impl SystemModel {
    pub fn new(dim: usize, hamiltonian: Vec<C64>, coupling: Vec<C64>) -> Result<Self> {
        if dim == 0 || hamiltonian.len() != dim * dim || coupling.len() != dim * dim {
            return Err(Error::Dimension(format!("system matrices must be {dim}x{dim}")));
        }
        for (name, m) in [("hamiltonian", &hamiltonian), ("coupling", &coupling)] {
            if hermiticity_defect(m, dim) > HERMITIAN_TOL {
                return Err(Error::Domain(format!("{name} is not Hermitian")));
            }
        }
        Ok(SystemModel { dim, hamiltonian, coupling })
    }

    /// Two-level atom `H = (ω0/2) σ_z` with coupling `L`, basis order `(e, g)`.
    pub fn two_level(omega0: f64, coupling: [[C64; 2]; 2]) -> Result<Self> {
        let z = C64::new(0.0, 0.0);
        let h = vec![C64::new(0.5 * omega0, 0.0), z, z, C64::new(-0.5 * omega0, 0.0)];
        let l = coupling.iter().flatten().copied().collect();
        Self::new(2, h, l)
    }
}

pub(crate) fn hermiticity_defect(m: &[C64], dim: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            worst = worst.max((m[i * dim + j] - m[j * dim + i].conj()).norm());
        }
    }
    worst
}

/// Pauli matrices in the `(e, g)` basis, `σ_z|e⟩ = |e⟩`.
pub mod pauli {
    use crate::C64;

    const O: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);
    const IM: C64 = C64::new(0.0, 1.0);

    pub const X: [[C64; 2]; 2] = [[O, ONE], [ONE, O]];
    pub const Y: [[C64; 2]; 2] = [[O, C64::new(0.0, -1.0)], [IM, O]];
    pub const Z: [[C64; 2]; 2] = [[ONE, O], [O, C64::new(-1.0, 0.0)]];
    /// `σ_+ = |e⟩⟨g|`.
    pub const PLUS: [[C64; 2]; 2] = [[O, ONE], [O, O]];

    pub fn flat(m: [[C64; 2]; 2]) -> Vec<C64> {
        m.iter().flatten().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn fig2(rate: f64) -> BathModel {
        single_mode_squeezed(1.0, 5.0, 1.5, 0.0, rate).unwrap()
    }

    fn fig4() -> BathModel {
        dpa_three_mode(1.0, 5.0, 2.0, 1.0, 0.5, std::f64::consts::PI).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel(2.0, 0.0).unwrap(), 1.0);
        assert_eq!(kernel(1.0, -3.0).unwrap(), kernel(1.0, 3.0).unwrap());
        assert!(kernel(0.0, 1.0).is_err());
        assert!(kernel(-1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_integrates_to_one() {
        // composite Simpson on [-40, 40] for Γ = 0.7, split at the cusp
        let rate = 0.7;
        let n = 200_000;
        let simpson = |a: f64, b: f64| {
            let h = (b - a) / n as f64;
            let mut acc = kernel(rate, a).unwrap() + kernel(rate, b).unwrap();
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * kernel(rate, a + i as f64 * h).unwrap();
            }
            acc * h / 3.0
        };
        let total = simpson(-40.0, 0.0) + simpson(0.0, 40.0);
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn squeezed_bcf_at_origin() {
        let a = fig2(1.0).eval_bcf(0.0, 0.0);
        assert!((a.re - 0.024893534183931986).abs() < 1e-15);
        assert!(a.im.abs() < 1e-15);
    }

    #[test]
    fn unsqueezed_is_stationary() {
        let (gamma, rate, w0) = (0.8, 1.3, 5.0);
        let m = single_mode_squeezed(gamma, w0, 0.0, 0.0, rate).unwrap();
        for &(t, s) in &[(0.3, 1.7), (2.0, 0.1), (4.4, 4.4)] {
            let tau: f64 = t - s;
            let expect = 0.5 * rate * gamma * (-rate * tau.abs()).exp() * cis(-w0 * tau);
            assert!((m.eval_bcf(t, s) - expect).norm() < 1e-14);
        }
        let f = &m.modes[0].f;
        assert_eq!(f.eval(0.37), C64::new(gamma.sqrt(), 0.0) * cis(-w0 * 0.37));
    }

    #[test]
    fn bogoliubov_single_mode() {
        let (u, v) = (1.5f64.cosh(), 1.5f64.sinh());
        assert!((u - 2.352409615243247).abs() < 1e-12);
        assert!((v - 2.1292794550948173).abs() < 1e-12);
        assert!((u * u - v * v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dpa_coefficients() {
        let (u, v) = dpa_bogoliubov(2.0, 1.0, 0.5).unwrap();
        assert!((u - 1.0734900802433864).abs() < 1e-12);
        assert!((v - 0.3903600291794133).abs() < 1e-12);
        assert!((u * u - v * v - 1.0).abs() < 1e-10);

        let (u, v) = dpa_bogoliubov(1e3, 1.0, 0.5).unwrap();
        assert!((u - 1.0).abs() < 1e-4 && v.abs() < 1e-4);

        let m = fig4();
        assert_eq!(m.rates(), vec![2.0, 0.5, 1.5]);
        assert!(!m.pseudomode_ok());
        assert!(m.modes[0].pseudomode_ok() && m.modes[1].pseudomode_ok());
        assert!(!m.modes[2].pseudomode_ok());
        // prefactors at a phase where cos (resp. sin) equals one
        let phi = std::f64::consts::PI;
        let t_cos = 0.5 * phi / 5.0;
        assert!((m.modes[1].f.eval(t_cos).re - 2.9211869733608857).abs() < 1e-9);
        let t_sin = (0.5 * std::f64::consts::PI + 0.5 * phi) / 5.0;
        assert!((m.modes[2].f.eval(t_sin).re - 1.4253932901995967).abs() < 1e-9);
        assert_eq!(m.modes[2].g.eval(t_sin), -m.modes[2].f.eval(t_sin));
    }

    #[test]
    fn dpa_domain_errors() {
        assert!(dpa_three_mode(1.0, 5.0, 2.0, 1.0, 1.0, 0.0).is_err());
        assert!(dpa_three_mode(1.0, 5.0, 2.0, 1.0, 1.5, 0.0).is_err());
        assert!(dpa_three_mode(1.0, 5.0, 1.4, 1.0, 0.5, 0.0).is_err());
        let msg = dpa_three_mode(1.0, 5.0, 2.0, 1.0, 1.2, 0.0).unwrap_err().to_string();
        assert!(msg.contains("ε < Γ"), "{msg}");
    }

    #[test]
    fn effective_squeezing_values() {
        assert!((effective_squeezing(1.0, 0.5).unwrap() - 0.5493061443340551).abs() < 1e-12);
        assert_eq!(effective_squeezing(1.0, 0.0).unwrap(), 0.0);
        assert!((effective_squeezing(1.0, 0.99).unwrap() - 2.6466524123622457).abs() < 1e-12);
        assert!(effective_squeezing(1.0, 1.0).is_err());
    }

    #[test]
    fn multimode_reduces_to_single_mode() {
        let term = SqueezedTerm { gamma: C64::new(1.0, 0.0), omega: 5.0, rate: 1.0 };
        let multi = uniform_squeezed_multimode(&[term], 1.5, 0.0, 5.0).unwrap();
        assert_eq!(multi, fig2(1.0));

        let cterm = SqueezedTerm { gamma: C64::new(0.0, 1.0), omega: 5.5, rate: 1.0 };
        let m = uniform_squeezed_multimode(&[cterm], 0.3, 0.0, 5.0).unwrap();
        assert!(!m.pseudomode_ok());
        // f g* carries γ itself, independent of the square-root branch
        let t = 0.8;
        let fg = m.modes[0].f.eval(t) * m.modes[0].g.eval(t).conj();
        let core = cis(-5.0 * t) * 0.3f64.cosh() - cis(5.0 * t) * 0.3f64.sinh();
        assert!((fg - C64::new(0.0, 1.0) * core.norm_sqr()).norm() < 1e-12);
    }

    #[test]
    fn multimode_unsqueezed_matches_stationary_sum() {
        let terms = [
            SqueezedTerm { gamma: C64::new(0.4, 0.0), omega: 4.0, rate: 0.5 },
            SqueezedTerm { gamma: C64::new(0.2, -0.1), omega: 6.0, rate: 2.0 },
        ];
        let m = uniform_squeezed_multimode(&terms, 0.0, 0.0, 5.0).unwrap();
        for &(t, s) in &[(1.0, 0.2), (0.0, 3.0)] {
            let tau: f64 = t - s;
            let expect: C64 = terms
                .iter()
                .map(|x| x.gamma * kernel(x.rate, tau).unwrap() * cis(-x.omega * tau))
                .sum();
            assert!((m.eval_bcf(t, s) - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn thermal_embedding_cases() {
        let w = 1.7;
        let g = TimeCoefficient::Stationary { amp: C64::new(1.0, 0.0), freq: w };
        let env = thermal_embedding(vec![g.clone()], vec![1.0], vec![C64::new(0.0, 0.0)]).unwrap();
        for &(t, s) in &[(0.0, 0.0), (1.0, 0.3), (2.5, 4.0)] {
            let expect: f64 = 2.0 * (w * (t - s)).cos();
            assert!((env.thermal_cov.eval(t, s) - expect).abs() < 1e-14);
            assert_eq!(env.drive.eval(t), 0.0);
            assert!((env.effective_bcf(t, s) - cis(-w * (t - s))).norm() < 1e-14);
        }
        let cold = thermal_embedding(vec![g.clone()], vec![0.0], vec![C64::new(0.5, 0.0)]).unwrap();
        assert_eq!(cold.thermal_cov.eval(0.4, 1.1), 0.0);
        assert!((cold.drive.eval(0.0) - 1.0).abs() < 1e-15);
        assert!(thermal_embedding(vec![g], vec![-0.1], vec![C64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn tabulated_interpolation() {
        let c = TimeCoefficient::Tabulated {
            times: vec![0.0, 1.0, 3.0],
            values: vec![C64::new(0.0, 0.0), C64::new(1.0, 2.0), C64::new(3.0, 0.0)],
        };
        c.validate().unwrap();
        assert_eq!(c.eval(0.5), C64::new(0.5, 1.0));
        assert_eq!(c.eval(2.0), C64::new(2.0, 1.0));
        assert_eq!(c.eval(5.0), C64::new(3.0, 0.0));
        assert!(c.covers(0.0, 3.0) && !c.covers(0.0, 3.5));
        let bad = TimeCoefficient::Tabulated { times: vec![0.0, 0.0], values: vec![C64::new(0.0, 0.0); 2] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn system_validation() {
        assert!(SystemModel::two_level(5.0, pauli::X).is_ok());
        let mut bad = pauli::X;
        bad[0][1] = C64::new(1.0, 0.5);
        assert!(SystemModel::two_level(5.0, bad).is_err());
    }

    fn min_eig_ratio(model: &BathModel, grid: &[f64]) -> f64 {
        let n = grid.len();
        let a = DMatrix::from_fn(n, n, |i, j| model.eval_bcf(grid[i], grid[j]));
        let eig = a.clone().symmetric_eigen();
        let norm = a.norm();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min) / norm
    }

    #[test]
    fn discretized_bcf_is_psd() {
        let grid: Vec<f64> = (0..120).map(|i| i as f64 * 0.05).collect();
        for model in [fig2(0.2), fig2(1.0), fig2(2.0), fig4()] {
            assert!(min_eig_ratio(&model, &grid) > -1e-8);
        }
    }

    proptest! {
        #[test]
        fn bcf_hermitian_symmetry(ts in prop::collection::vec(0.0f64..10.0, 20), ss in prop::collection::vec(0.0f64..10.0, 20)) {
            for model in [fig2(0.5), fig4()] {
                for &t in &ts {
                    for &s in &ss {
                        let d = model.eval_bcf(t, s) - model.eval_bcf(s, t).conj();
                        prop_assert!(d.norm() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn dpa_bogoliubov_identity(rate in 0.01f64..10.0, frac in 0.001f64..0.999, extra in 1e-3f64..50.0) {
            let eps = frac * rate;
            let gamma0 = rate + eps + extra;
            let (u, v) = dpa_bogoliubov(gamma0, rate, eps).unwrap();
            prop_assert!((u * u - v * v - 1.0).abs() < 1e-10);
        }

        #[test]
        fn squeezed_modulus_identity(gamma in 0.0f64..3.0, r in 0.0f64..2.0, phi in -3.0f64..3.0, t in 0.0f64..20.0) {
            let m = single_mode_squeezed(gamma, 5.0, r, phi, 1.0).unwrap();
            let f = m.modes[0].f.eval(t);
            let (u, v) = (r.cosh(), r.sinh());
            let expect = gamma * (u * u + v * v - 2.0 * u * v * (2.0 * 5.0 * t - phi).cos());
            prop_assert!((f.norm_sqr() - expect).abs() < 1e-10 * (1.0 + expect));
        }
    }
}
