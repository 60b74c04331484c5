//! Run configuration: a versioned JSON document, validated with key paths in
//! every error message, and resolved into models ready to propagate.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bcf::{
    dpa_three_mode, pauli, single_mode_squeezed, thermal_embedding, uniform_squeezed_multimode, BathMode, BathModel,
    SqueezedTerm, SystemModel, TimeCoefficient,
};
use crate::fock::{TruncationScheme, DEFAULT_CAPACITY};
use crate::propagate::{DensityMethod, TimeGrid, VectorMethod};
use crate::{Error, Result, C64};

pub const SCHEMA_VERSION: u32 = 1;

fn default_stored() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedOperator {
    SigmaX,
    SigmaY,
    SigmaZ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Named(NamedOperator),
    /// Rows of `[re, im]` pairs.
    Matrix(Vec<Vec<C64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `H = (ω0/2)σ_z` in the basis `(e, g)`.
    TwoLevel { omega0: f64, coupling: OperatorSpec, initial_state: Vec<C64> },
    Matrix { hamiltonian: Vec<Vec<C64>>, coupling: Vec<Vec<C64>>, initial_state: Vec<C64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BathSpec {
    SingleModeSqueezed { gamma: f64, omega0: f64, r: f64, phi: f64, rate: f64 },
    /// `f = g = √γ e^{-iω0 t}`.
    Stationary { gamma: f64, omega0: f64, rate: f64 },
    DpaThreeMode { gamma: f64, omega0: f64, gamma0: f64, rate: f64, eps: f64, phi: f64 },
    UniformSqueezedMultimode { terms: Vec<SqueezedTerm>, r: f64, phi: f64, omega0: f64 },
    Modes { modes: Vec<BathMode> },
}

impl BathSpec {
    pub fn n_modes(&self) -> usize {
        match self {
            BathSpec::SingleModeSqueezed { .. } | BathSpec::Stationary { .. } => 1,
            BathSpec::DpaThreeMode { .. } => 3,
            BathSpec::UniformSqueezedMultimode { terms, .. } => terms.len(),
            BathSpec::Modes { modes } => modes.len(),
        }
    }

    fn check_rates(&self) -> Result<()> {
        let bad = |path: &str, r: f64| Error::config(path, format!("rate must be a positive finite number, got {r}"));
        match self {
            BathSpec::SingleModeSqueezed { rate, .. } | BathSpec::Stationary { rate, .. } | BathSpec::DpaThreeMode { rate, .. } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(bad("bath.rate", *rate));
                }
            }
            BathSpec::UniformSqueezedMultimode { terms, .. } => {
                for (i, t) in terms.iter().enumerate() {
                    if !(t.rate > 0.0 && t.rate.is_finite()) {
                        return Err(bad(&format!("bath.terms[{i}].rate"), t.rate));
                    }
                }
            }
            BathSpec::Modes { modes } => {
                for (i, m) in modes.iter().enumerate() {
                    if !(m.rate > 0.0 && m.rate.is_finite()) {
                        return Err(bad(&format!("bath.modes[{i}].rate"), m.rate));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<BathModel> {
        self.check_rates()?;
        let model = match self {
            BathSpec::SingleModeSqueezed { gamma, omega0, r, phi, rate } => single_mode_squeezed(*gamma, *omega0, *r, *phi, *rate),
            BathSpec::Stationary { gamma, omega0, rate } => {
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::config("bath.gamma", "coupling must be >= 0"));
                }
                let f = TimeCoefficient::Stationary { amp: C64::new(gamma.sqrt(), 0.0), freq: *omega0 };
                BathMode::symmetric(*rate, f).and_then(|m| BathModel::new(vec![m]))
            }
            BathSpec::DpaThreeMode { gamma, omega0, gamma0, rate, eps, phi } => {
                dpa_three_mode(*gamma, *omega0, *gamma0, *rate, *eps, *phi)
            }
            BathSpec::UniformSqueezedMultimode { terms, r, phi, omega0 } => uniform_squeezed_multimode(terms, *r, *phi, *omega0),
            BathSpec::Modes { modes } => BathModel::new(modes.clone()),
        };
        model.map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("bath: {m}")),
            Error::Unsupported(m) | Error::Dimension(m) => Error::config("bath", m),
            other => other,
        })
    }
}

/// Discrete displaced thermal bath modes on top of the effective modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub couplings: Vec<TimeCoefficient>,
    pub occupations: Vec<f64>,
    pub displacements: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Nmax {
    Uniform(u32),
    PerMode(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationSpec {
    Rectangular { nmax: Nmax },
    Triangular { nsum: u32 },
}

impl TruncationSpec {
    pub fn scheme(&self, modes: usize, path: &str) -> Result<TruncationScheme> {
        let scheme = match self {
            TruncationSpec::Rectangular { nmax: Nmax::Uniform(n) } => TruncationScheme::Rectangular(vec![*n; modes]),
            TruncationSpec::Rectangular { nmax: Nmax::PerMode(v) } => {
                if v.len() != modes {
                    return Err(Error::config(
                        format!("{path}.nmax"),
                        format!("expected {modes} per-mode cutoffs, got {}", v.len()),
                    ));
                }
                TruncationScheme::Rectangular(v.clone())
            }
            TruncationSpec::Triangular { nsum } => TruncationScheme::Triangular { nsum: *nsum, modes },
        };
        match scheme.size() {
            Some(n) if n <= DEFAULT_CAPACITY => Ok(scheme),
            n => Err(Error::Capacity { requested: n.unwrap_or(u128::MAX), cap: DEFAULT_CAPACITY }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    HopsLinear,
    HopsNonlinear,
    Hme,
    Pme,
    PsseLinear,
    PsseNonlinear,
}

/// A method split by what it propagates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Density(DensityMethod),
    Vector(VectorMethod),
}

impl Method {
    pub fn kind(self) -> MethodKind {
        match self {
            Method::Hme => MethodKind::Density(DensityMethod::Hme),
            Method::Pme => MethodKind::Density(DensityMethod::Pme),
            Method::HopsLinear => MethodKind::Vector(VectorMethod::HopsLinear),
            Method::HopsNonlinear => MethodKind::Vector(VectorMethod::HopsNonlinear),
            Method::PsseLinear => MethodKind::Vector(VectorMethod::PsseLinear),
            Method::PsseNonlinear => MethodKind::Vector(VectorMethod::PsseNonlinear),
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self.kind(), MethodKind::Vector(_))
    }

    pub fn needs_pseudomode(self) -> bool {
        matches!(self, Method::Pme | Method::PsseLinear | Method::PsseNonlinear)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::HopsLinear => "hops-linear",
            Method::HopsNonlinear => "hops-nonlinear",
            Method::Hme => "hme",
            Method::Pme => "pme",
            Method::PsseLinear => "psse-linear",
            Method::PsseNonlinear => "psse-nonlinear",
        }
    }

    fn short(self) -> &'static str {
        match self {
            Method::Pme => "pme",
            Method::PsseLinear | Method::PsseNonlinear => "psse",
            _ => self.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Ornstein–Uhlenbeck when every mode has `f = g`, eigendecomposition otherwise.
    #[default]
    Auto,
    Eigen,
    Ou,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub sampler: Sampler,
    /// Keep the eigenvalues carrying this fraction of the trace (all when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_threshold: Option<f64>,
}

/// Settings of the `noise-check` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCheckSpec {
    pub points: usize,
    pub draws: u64,
    /// Compare against a reference with the imaginary part of the covariance
    /// sign-flipped. The check is expected to fail.
    #[serde(default)]
    pub corrupt_reference: bool,
}

/// What a run or scan is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    Nmax,
    Nsum,
    Trajectories,
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
    /// For `nmax` scans: vary only this mode, keeping the others as configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub system: SystemSpec,
    pub bath: BathSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentSpec>,
    pub method: Method,
    pub truncation: TruncationSpec,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default = "default_stored")]
    pub stored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_check: Option<NoiseCheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// A configuration turned into models.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub system: SystemModel,
    pub psi0: Vec<C64>,
    pub bath: BathModel,
    pub method: Method,
    pub scheme: TruncationScheme,
    pub grid: TimeGrid,
    pub trajectories: u64,
    pub seed: u64,
    /// Concrete sampler for hierarchy-of-pure-states noise.
    pub sampler: Sampler,
    pub energy_threshold: Option<f64>,
    /// Frequency of the rotating frame for two-level observables.
    pub omega0: Option<f64>,
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    cfg.resolve()?;
    Ok(cfg)
}

fn matrix(rows: &[Vec<C64>], path: &str) -> Result<(usize, Vec<C64>)> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::config(path, "matrix must be square and non-empty"));
    }
    Ok((d, rows.iter().flatten().copied().collect()))
}

fn finite(x: f64, path: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, "must be finite"))
    }
}

impl RunConfig {
    /// Canonical text: pretty JSON with a trailing newline.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configuration serializes");
        s.push('\n');
        s
    }

    pub fn system_model(&self) -> Result<(SystemModel, Vec<C64>, Option<f64>)> {
        let (model, psi, omega0) = match &self.system {
            SystemSpec::TwoLevel { omega0, coupling, initial_state } => {
                finite(*omega0, "system.omega0")?;
                let l = match coupling {
                    OperatorSpec::Named(NamedOperator::SigmaX) => pauli::X,
                    OperatorSpec::Named(NamedOperator::SigmaY) => pauli::Y,
                    OperatorSpec::Named(NamedOperator::SigmaZ) => pauli::Z,
                    OperatorSpec::Matrix(rows) => {
                        let (d, v) = matrix(rows, "system.coupling")?;
                        if d != 2 {
                            return Err(Error::config("system.coupling", "two-level coupling must be 2×2"));
                        }
                        [[v[0], v[1]], [v[2], v[3]]]
                    }
                };
                let m = SystemModel::two_level(*omega0, l).map_err(|e| Error::config("system.coupling", e.to_string()))?;
                (m, initial_state, Some(*omega0))
            }
            SystemSpec::Matrix { hamiltonian, coupling, initial_state } => {
                let (d, h) = matrix(hamiltonian, "system.hamiltonian")?;
                let (dl, l) = matrix(coupling, "system.coupling")?;
                if dl != d {
                    return Err(Error::config("system.coupling", "coupling and Hamiltonian differ in size"));
                }
                let m = SystemModel::new(d, h, l).map_err(|e| Error::config("system", e.to_string()))?;
                (m, initial_state, None)
            }
        };
        if psi.len() != model.dim {
            return Err(Error::config("system.initial_state", format!("expected {} amplitudes", model.dim)));
        }
        let norm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
        if !((norm - 1.0).abs() <= 1e-9) {
            return Err(Error::config("system.initial_state", format!("state must be normalized, norm² = {norm}")));
        }
        Ok((model, psi.clone(), omega0))
    }

    pub fn bath_model(&self) -> Result<BathModel> {
        let bath = self.bath.build()?;
        match &self.environment {
            None => Ok(bath),
            Some(env) => {
                let e = thermal_embedding(env.couplings.clone(), env.occupations.clone(), env.displacements.clone())
                    .map_err(|e| Error::config("environment", e.to_string()))?;
                Ok(bath.with_environment(&e))
            }
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("t_end", "horizon must be positive"));
        }
        let g = match (self.step, self.steps) {
            (Some(h), None) => TimeGrid::from_step(self.t_end, h, self.stored).map_err(|e| Error::config("step", e.to_string()))?,
            (None, Some(n)) => TimeGrid::new(self.t_end, n, self.stored).map_err(|e| Error::config("steps", e.to_string()))?,
            _ => return Err(Error::config("step", "give exactly one of `step` and `steps`")),
        };
        if self.stored == 0 || g.steps % self.stored != 0 {
            return Err(Error::config("stored", "stored-point count must divide the step count"));
        }
        Ok(g)
    }

    fn check_method(&self, method: Method, bath: &BathModel, path: &str) -> Result<()> {
        if method.needs_pseudomode() && !bath.pseudomode_ok() {
            return Err(Error::config(path, format!("{} requires f_j = g_j for all modes", method.short())));
        }
        if !method.is_stochastic() && bath.thermal_cov.is_some() {
            return Err(Error::config("environment.occupations", "thermal noise requires a stochastic method"));
        }
        Ok(())
    }

    /// Validate everything and build the models.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::config("version", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.version)));
        }
        let (system, psi0, omega0) = self.system_model()?;
        let bath = self.bath_model()?;
        self.check_method(self.method, &bath, "method")?;
        let scheme = self.truncation.scheme(bath.n_modes(), "truncation")?;
        let grid = self.grid()?;
        let trajectories = match (self.method.is_stochastic(), self.trajectories) {
            (true, Some(m)) if m >= 1 => m,
            (true, _) => return Err(Error::config("trajectories", "stochastic methods need at least one trajectory")),
            (false, m) => m.unwrap_or(0),
        };
        let sampler = match self.noise.sampler {
            Sampler::Auto if bath.pseudomode_ok() => Sampler::Ou,
            Sampler::Auto => Sampler::Eigen,
            Sampler::Ou if !bath.pseudomode_ok() => {
                return Err(Error::config("noise.sampler", "ou requires f_j = g_j for all modes"));
            }
            s => s,
        };
        if let Some(th) = self.noise.energy_threshold {
            if !(th > 0.0 && th < 1.0) {
                return Err(Error::config("noise.energy_threshold", "must lie in (0, 1)"));
            }
        }
        if let Some(nc) = &self.noise_check {
            if nc.points < 2 || nc.draws < 2 {
                return Err(Error::config("noise_check", "need at least two points and two draws"));
            }
        }
        if let Some(r) = &self.reference {
            let m = r.method.unwrap_or(self.method);
            self.check_method(m, &bath, "reference.method")?;
            if let Some(t) = &r.truncation {
                t.scheme(bath.n_modes(), "reference.truncation")?;
            }
            if m.is_stochastic() && r.trajectories.or(self.trajectories).unwrap_or(0) == 0 {
                return Err(Error::config("reference.trajectories", "stochastic reference needs trajectories"));
            }
        }
        if let Some(s) = &self.scan {
            self.check_scan(s, bath.n_modes())?;
        }
        Ok(Resolved {
            system,
            psi0,
            bath,
            method: self.method,
            scheme,
            grid,
            trajectories,
            seed: self.seed,
            sampler,
            energy_threshold: self.noise.energy_threshold,
            omega0,
        })
    }

    fn check_scan(&self, s: &ScanSpec, modes: usize) -> Result<()> {
        if s.values.is_empty() {
            return Err(Error::config("scan.values", "scan needs at least one value"));
        }
        let integral = |v: f64| v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64;
        match s.axis {
            ScanAxis::Nmax | ScanAxis::Nsum | ScanAxis::Trajectories => {
                if let Some(i) = s.values.iter().position(|&v| !integral(v)) {
                    return Err(Error::config(format!("scan.values[{i}]"), "expected a non-negative integer"));
                }
            }
            ScanAxis::Step => {
                if let Some(i) = s.values.iter().position(|&v| !(v > 0.0)) {
                    return Err(Error::config(format!("scan.values[{i}]"), "step must be positive"));
                }
            }
        }
        match s.axis {
            ScanAxis::Nsum if !matches!(self.truncation, TruncationSpec::Triangular { .. }) => {
                Err(Error::config("scan.axis", "nsum scans need triangular truncation"))
            }
            ScanAxis::Nmax if matches!(self.truncation, TruncationSpec::Triangular { .. }) => {
                Err(Error::config("scan.axis", "nmax scans need rectangular truncation"))
            }
            ScanAxis::Trajectories if !self.method.is_stochastic() => {
                Err(Error::config("scan.axis", "trajectory scans need a stochastic method"))
            }
            _ if s.mode.is_some_and(|m| m >= modes) => Err(Error::config("scan.mode", format!("bath has {modes} modes"))),
            _ => Ok(()),
        }
    }

    /// Copy of this configuration with the scan axis set to `value`.
    pub fn with_scan_value(&self, axis: ScanAxis, value: f64, mode: Option<usize>) -> Result<RunConfig> {
        let mut c = self.clone();
        let modes = self.bath.n_modes();
        match axis {
            ScanAxis::Nmax => {
                let n = value as u32;
                c.truncation = match (mode, &self.truncation) {
                    (Some(j), t) => {
                        let mut v = match t.scheme(modes, "truncation")? {
                            TruncationScheme::Rectangular(v) => v,
                            TruncationScheme::Triangular { .. } => unreachable!("checked by check_scan"),
                        };
                        v[j] = n;
                        TruncationSpec::Rectangular { nmax: Nmax::PerMode(v) }
                    }
                    (None, _) => TruncationSpec::Rectangular { nmax: Nmax::Uniform(n) },
                };
            }
            ScanAxis::Nsum => c.truncation = TruncationSpec::Triangular { nsum: value as u32 },
            ScanAxis::Trajectories => c.trajectories = Some(value as u64),
            ScanAxis::Step => {
                c.step = Some(value);
                c.steps = None;
            }
        }
        c.scan = None;
        Ok(c)
    }

    /// Configuration of the reference run.
    pub fn reference_config(&self) -> Option<RunConfig> {
        let r = self.reference.as_ref()?;
        let mut c = self.clone();
        c.method = r.method.unwrap_or(self.method);
        if let Some(t) = &r.truncation {
            c.truncation = t.clone();
        }
        if r.trajectories.is_some() {
            c.trajectories = r.trajectories;
        }
        c.seed = r.seed.unwrap_or(self.seed.wrapping_add(1));
        c.reference = None;
        c.scan = None;
        Some(c)
    }
}

/// Human-readable description of the configuration format.
pub fn schema() -> serde_json::Value {
    let complex = "[re, im]";
    json!({
        "version": SCHEMA_VERSION,
        "description": "Run configuration. Unknown keys are rejected.",
        "fields": {
            "version": format!("integer, must be {SCHEMA_VERSION}"),
            "system": {
                "kind": ["two_level", "matrix"],
                "two_level": {"omega0": "number", "coupling": "\"sigma_x\" | \"sigma_y\" | \"sigma_z\" | 2×2 matrix", "initial_state": format!("2 amplitudes {complex}, normalized")},
                "matrix": {"hamiltonian": format!("d×d rows of {complex}, Hermitian"), "coupling": "d×d, Hermitian", "initial_state": "d amplitudes, normalized"}
            },
            "bath": {
                "kind": ["single_mode_squeezed", "stationary", "dpa_three_mode", "uniform_squeezed_multimode", "modes"],
                "single_mode_squeezed": {"gamma": "≥ 0", "omega0": "number", "r": "≥ 0", "phi": "number", "rate": "> 0"},
                "stationary": {"gamma": "≥ 0", "omega0": "number", "rate": "> 0"},
                "dpa_three_mode": {"gamma": "≥ 0", "omega0": "number", "gamma0": "> rate + eps", "rate": "> 0", "eps": "0 < eps < rate", "phi": "number"},
                "uniform_squeezed_multimode": {"terms": [{"gamma": complex, "omega": "number", "rate": "> 0"}], "r": "≥ 0", "phi": "number", "omega0": "number"},
                "modes": {"modes": [{"rate": "> 0", "f": "time coefficient", "g": "time coefficient"}]},
                "time coefficient": {
                    "kind": ["stationary", "uniform_squeezed", "harmonic", "tabulated"],
                    "stationary": {"amp": complex, "freq": "number"},
                    "uniform_squeezed": {"coupling": complex, "center": "number", "squeeze": "≥ 0", "phase": "number", "detuning": "number, default 0", "conj_amp": "bool, default false"},
                    "harmonic": {"prefactor": "number", "shape": ["cos", "sin"], "center": "number", "phase": "number"},
                    "tabulated": {"times": "increasing numbers", "values": format!("list of {complex}")}
                }
            },
            "environment": {"optional": true, "couplings": "list of time coefficients g_λ(t)", "occupations": "list of n̄_λ ≥ 0", "displacements": format!("list of α_λ {complex}")},
            "method": ["hops-linear", "hops-nonlinear", "hme", "pme", "psse-linear", "psse-nonlinear"],
            "truncation": {"kind": ["rectangular", "triangular"], "rectangular": {"nmax": "integer or per-mode list"}, "triangular": {"nsum": "integer"}},
            "t_end": "> 0",
            "step": "step size dividing t_end (or give `steps`)",
            "steps": "number of steps (or give `step`)",
            "stored": "stored points, divides the step count, default 1000",
            "trajectories": "≥ 1 for stochastic methods",
            "seed": "integer, default 0",
            "noise": {"sampler": ["auto", "eigen", "ou"], "energy_threshold": "optional, in (0, 1)"},
            "noise_check": {"optional": true, "points": "≥ 2", "draws": "≥ 2", "corrupt_reference": "bool"},
            "reference": {"optional": true, "method": "method", "truncation": "truncation", "trajectories": "integer", "seed": "integer, default seed + 1"},
            "scan": {"optional": true, "axis": ["nmax", "nsum", "trajectories", "step"], "values": "list", "mode": "optional mode index for nmax scans"},
            "output": "optional output directory"
        }
    })
}
