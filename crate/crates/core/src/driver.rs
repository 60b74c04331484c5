//! Batch front-end shared by the `hops` binary and the acceptance suite:
//! run a configuration, compare with a reference, scan a parameter and
//! validate the noise generators.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;

use crate::config::{parse_config, Method, MethodKind, Resolved, RunConfig, Sampler, ScanAxis};
use crate::ensemble::{ensemble_csv, run_ensemble, write_csv, EnsembleAccumulator, ObservableSet, TrajectoryPlan};
use crate::error_lab::stochastic_error;
use crate::fock::build_basis;
use crate::noise::{ou_init, CovarianceStats, EigenSampler, Moment, RealEigenSampler, SeedSpec};
use crate::propagate::{propagate_density, CoefTable, Context, ZSource};
use crate::series::DensitySeries;
use crate::{Error, Result, C64};

/// Version string written to every metadata sidecar.
pub fn version_string() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Result of one run.
#[derive(Debug, Clone)]
pub enum Outcome {
    Deterministic(DensitySeries),
    Ensemble(EnsembleAccumulator),
}

impl Outcome {
    pub fn mean(&self) -> Result<DensitySeries> {
        match self {
            Outcome::Deterministic(s) => Ok(s.clone()),
            Outcome::Ensemble(acc) => acc.mean(),
        }
    }

    pub fn ensemble(&self) -> Option<&EnsembleAccumulator> {
        match self {
            Outcome::Ensemble(a) => Some(a),
            Outcome::Deterministic(_) => None,
        }
    }

    pub fn to_csv(&self, observables: &ObservableSet) -> Result<String> {
        match self {
            Outcome::Deterministic(s) => Ok(write_csv(s, observables, None)),
            Outcome::Ensemble(acc) => ensemble_csv(acc),
        }
    }
}

/// Observables reported for a resolved configuration.
pub fn observables_for(r: &Resolved) -> ObservableSet {
    match r.omega0 {
        Some(w) => ObservableSet::bloch(w),
        None => ObservableSet::empty(r.system.dim),
    }
}

/// Noise samplers built for earlier runs, reused when the bath and the
/// step grid are unchanged. Building an eigendecomposition sampler costs far
/// more than a short ensemble.
#[derive(Default)]
pub struct SamplerCache {
    eigen: Vec<(String, Arc<EigenSampler>)>,
    thermal: Vec<(String, Arc<RealEigenSampler>)>,
}

impl SamplerCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(cfg: &RunConfig, r: &Resolved) -> String {
        format!("{:?}|{:?}|{}|{:?}|{:?}", cfg.bath, cfg.environment, r.grid.steps, r.grid.h(), r.energy_threshold)
    }

    fn eigen(&mut self, key: &str, r: &Resolved, steps: &[f64]) -> Result<Arc<EigenSampler>> {
        if let Some((_, s)) = self.eigen.iter().find(|(k, _)| k == key) {
            return Ok(s.clone());
        }
        let s = Arc::new(EigenSampler::from_bcf(&r.bath, steps, r.energy_threshold)?);
        self.eigen.push((key.to_string(), s.clone()));
        Ok(s)
    }

    fn thermal(&mut self, key: &str, r: &Resolved, steps: &[f64]) -> Result<Option<Arc<RealEigenSampler>>> {
        let Some(cov) = &r.bath.thermal_cov else { return Ok(None) };
        if let Some((_, s)) = self.thermal.iter().find(|(k, _)| k == key) {
            return Ok(Some(s.clone()));
        }
        let s = Arc::new(RealEigenSampler::from_fn(|t, s| cov.eval(t, s), steps)?);
        self.thermal.push((key.to_string(), s.clone()));
        Ok(Some(s))
    }
}

/// Propagate one configuration.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    execute_cached(cfg, &mut SamplerCache::new())
}

/// [`execute`], reusing noise samplers from `cache`.
pub fn execute_cached(cfg: &RunConfig, cache: &mut SamplerCache) -> Result<Outcome> {
    let r = cfg.resolve()?;
    let basis = Arc::new(build_basis(r.scheme.clone())?);
    let ctx = Context::new(&r.system, &r.bath, basis)?;
    let table = CoefTable::new(&r.bath, r.grid.h(), r.grid.steps);
    match r.method.kind() {
        MethodKind::Density(m) => {
            let d = r.system.dim;
            let rho0: Vec<C64> = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| r.psi0[a] * r.psi0[b].conj()).collect();
            Ok(Outcome::Deterministic(propagate_density(&ctx, &table, m, &r.grid, &rho0, None)?))
        }
        MethodKind::Vector(m) => {
            let steps = r.grid.step_times();
            let key = SamplerCache::key(cfg, &r);
            let eigen = if m.is_hops() && r.sampler == Sampler::Eigen { Some(cache.eigen(&key, &r, &steps)?) } else { None };
            let thermal = cache.thermal(&key, &r, &steps)?;
            let z = match &eigen {
                Some(s) => ZSource::Eigen(s),
                None if m.is_hops() => ZSource::Ou,
                None => ZSource::Zero,
            };
            let plan = TrajectoryPlan {
                ctx: &ctx,
                table: &table,
                method: m,
                grid: r.grid,
                psi0: r.psi0.clone(),
                z,
                thermal: thermal.as_deref(),
                seed: SeedSpec::new(r.seed),
            };
            Ok(Outcome::Ensemble(run_ensemble(&plan, 0..r.trajectories, observables_for(&r))?))
        }
    }
}

/// Agreement of a run with a reference series.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// RMS over stored times of the Frobenius distance.
    pub r: f64,
    pub max_abs_diff: f64,
    /// Fraction of (time, observable) points whose ensemble mean lies within
    /// three standard errors of the reference. Only for ensembles.
    pub within_3se: Option<f64>,
}

pub fn compare(outcome: &Outcome, reference: &DensitySeries, observables: &ObservableSet) -> Result<Comparison> {
    let mean = outcome.mean()?;
    let (_, r) = stochastic_error(&mean, reference)?;
    let max_abs_diff = mean.max_abs_diff(reference)?;
    let within_3se = match outcome.ensemble() {
        Some(acc) if !observables.is_empty() => {
            let se = acc
                .observable_standard_error()
                .ok_or_else(|| Error::Validation("standard errors need at least two trajectories".into()))?;
            let got = acc.observable_mean();
            let no = observables.len();
            let mut ok = 0usize;
            for (i, &t) in reference.times.iter().enumerate() {
                let want = observables.eval(reference.rho(i), t);
                for k in 0..no {
                    if (got[i * no + k] - want[k]).abs() <= 3.0 * se[i * no + k] {
                        ok += 1;
                    }
                }
            }
            Some(ok as f64 / (reference.len() * no) as f64)
        }
        _ => None,
    };
    Ok(Comparison { r, max_abs_diff, within_3se })
}

/// Mean `ρ_S(t)` of the configured reference, if any.
pub fn reference_series(cfg: &RunConfig) -> Result<Option<DensitySeries>> {
    reference_series_cached(cfg, &mut SamplerCache::new())
}

pub fn reference_series_cached(cfg: &RunConfig, cache: &mut SamplerCache) -> Result<Option<DensitySeries>> {
    match cfg.reference_config() {
        Some(c) => Ok(Some(execute_cached(&c, cache)?.mean()?)),
        None => Ok(None),
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub trajectories: u64,
    pub discarded: u64,
    pub comparison: Option<Comparison>,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// `run` subcommand: writes `run.csv` and `run.meta.json` into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let r = cfg.resolve()?;
    let mut cache = SamplerCache::new();
    let outcome = execute_cached(cfg, &mut cache)?;
    let obs = observables_for(&r);
    let csv = outcome.to_csv(&obs)?;
    let (count, discarded) = outcome.ensemble().map_or((0, 0), |a| (a.count(), a.discarded()));
    let comparison = match reference_series_cached(cfg, &mut cache)? {
        Some(reference) => Some(compare(&outcome, &reference, &obs)?),
        None => None,
    };
    let meta = json!({
        "version": version_string(),
        "seed": cfg.seed,
        "method": cfg.method.name(),
        "basis_size": r.scheme.size(),
        "steps": r.grid.steps,
        "stored": r.grid.stored,
        "trajectories": count,
        "discarded": discarded,
        "comparison": comparison.as_ref().map(|c| json!({"r": c.r, "max_abs_diff": c.max_abs_diff, "within_3se": c.within_3se})),
        "config": serde_json::to_value(cfg).expect("configuration serializes"),
    });
    let csv_path = out.join("run.csv");
    let meta_path = out.join("run.meta.json");
    write_file(&csv_path, &csv)?;
    write_file(&meta_path, &(serde_json::to_string_pretty(&meta).expect("json") + "\n"))?;
    Ok(RunSummary { csv: csv_path, metadata: meta_path, trajectories: count, discarded, comparison })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub value: f64,
    pub r: f64,
    /// RMS over stored times of the Frobenius norm of the standard errors,
    /// the Monte-Carlo baseline of `r`. Only for ensembles.
    pub baseline: Option<f64>,
    pub trajectories: u64,
    pub discarded: u64,
}

fn baseline(acc: &EnsembleAccumulator) -> Option<f64> {
    let se = acc.standard_error()?;
    let s = acc.dim() * acc.dim();
    let n = acc.times().len();
    let sum: f64 = se.chunks(s).map(|c| c.iter().map(|x| x.re * x.re + x.im * x.im).sum::<f64>()).sum();
    Some((sum / n as f64).sqrt())
}

pub fn scan_rows(cfg: &RunConfig) -> Result<Vec<ScanRow>> {
    cfg.resolve()?;
    let mut cache = SamplerCache::new();
    let reference = reference_series_cached(cfg, &mut cache)?.ok_or_else(|| Error::config("reference", "a scan needs a reference"))?;
    scan_rows_against(cfg, &reference, &mut cache)
}

/// Scan rows measured against a precomputed reference series.
pub fn scan_rows_against(cfg: &RunConfig, reference: &DensitySeries, cache: &mut SamplerCache) -> Result<Vec<ScanRow>> {
    cfg.resolve()?;
    let spec = cfg.scan.as_ref().ok_or_else(|| Error::config("scan", "the configuration has no scan section"))?;
    let mut rows = Vec::with_capacity(spec.values.len());
    for &v in &spec.values {
        let c = cfg.with_scan_value(spec.axis, v, spec.mode)?;
        let outcome = execute_cached(&c, cache)?;
        let (_, r) = stochastic_error(&outcome.mean()?, reference)?;
        let (trajectories, discarded, base) = match outcome.ensemble() {
            Some(a) => (a.count(), a.discarded(), baseline(a)),
            None => (0, 0, None),
        };
        rows.push(ScanRow { value: v, r, baseline: base, trajectories, discarded });
    }
    Ok(rows)
}

pub fn scan_csv(axis: ScanAxis, rows: &[ScanRow]) -> String {
    let name = match axis {
        ScanAxis::Nmax => "nmax",
        ScanAxis::Nsum => "nsum",
        ScanAxis::Trajectories => "trajectories",
        ScanAxis::Step => "step",
    };
    let mut out = format!("{name},r,baseline,trajectories,discarded\n");
    for row in rows {
        let b = row.baseline.map_or(String::new(), |b| format!("{b:?}"));
        out.push_str(&format!("{:?},{:?},{b},{},{}\n", row.value, row.r, row.trajectories, row.discarded));
    }
    out
}

/// `scan` subcommand: writes `scan.csv` into `out`.
pub fn scan(cfg: &RunConfig, out: &Path) -> Result<Vec<ScanRow>> {
    let rows = scan_rows(cfg)?;
    let axis = cfg.scan.as_ref().map(|s| s.axis).expect("checked by scan_rows");
    write_file(&out.join("scan.csv"), &scan_csv(axis, &rows))?;
    Ok(rows)
}

/// Pass threshold of the noise checks, in standard errors.
pub const NOISE_SIGMA: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCheckRow {
    pub check: String,
    pub sampler: String,
    pub max_sigma: f64,
}

impl NoiseCheckRow {
    pub fn pass(&self) -> bool {
        self.max_sigma <= NOISE_SIGMA
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub rows: Vec<NoiseCheckRow>,
    /// Clipped eigenvalue mass relative to the trace of the correlation matrix.
    pub clipped_fraction: f64,
    /// Largest sample magnitude seen by the eigendecomposition sampler.
    pub max_abs_sample: f64,
}

impl NoiseReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(NoiseCheckRow::pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,sampler,max_sigma,threshold,pass\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:?},{NOISE_SIGMA:?},{}\n", r.check, r.sampler, r.max_sigma, r.pass()));
        }
        out
    }
}

const DRAW_BATCH: u64 = 1000;

fn batched_stats(
    draws: u64,
    dim: usize,
    sample: impl Fn(u64, &mut Vec<C64>) + Sync,
) -> CovarianceStats {
    let batches: Vec<(u64, u64)> = (0..draws).step_by(DRAW_BATCH as usize).map(|s| (s, (s + DRAW_BATCH).min(draws))).collect();
    let one = |(a, b): (u64, u64)| {
        let mut st = CovarianceStats::new(dim);
        let mut buf = vec![C64::new(0.0, 0.0); dim];
        for k in a..b {
            sample(k, &mut buf);
            st.push(&buf);
        }
        st
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<CovarianceStats> = {
        use rayon::prelude::*;
        batches.into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<CovarianceStats> = batches.into_iter().map(one).collect();
    let mut total = CovarianceStats::new(dim);
    for p in &parts {
        total.merge(p);
    }
    total
}

/// `noise-check` subcommand core: empirical covariance of the colored noise
/// against the correlation function, on `points` equally spaced times in `[0, t_end]`.
pub fn noise_check_report(cfg: &RunConfig) -> Result<NoiseReport> {
    let r = cfg.resolve()?;
    let nc = cfg.noise_check.clone().ok_or_else(|| Error::config("noise_check", "missing noise_check section"))?;
    let p = nc.points;
    let dt = r.grid.t_end / (p - 1) as f64;
    let pts: Vec<f64> = (0..p).map(|i| i as f64 * dt).collect();
    let bath = &r.bath;
    let expected = |a: usize, b: usize| {
        let v = bath.eval_bcf(pts[a], pts[b]);
        if nc.corrupt_reference {
            v.conj()
        } else {
            v
        }
    };
    let seed = SeedSpec::new(r.seed);
    let draws = nc.draws;
    let mut rows = Vec::new();

    let eigen = EigenSampler::from_bcf(bath, &pts, None)?;
    let clipped_fraction = if eigen.trace() > 0.0 { eigen.clipped_mass() / eigen.trace() } else { 0.0 };
    let max_abs = std::sync::Mutex::new(0.0f64);
    let est = batched_stats(draws, p, |k, buf| {
        let mut rng = seed.stream(k);
        eigen.sample_into(&mut rng, buf);
        let m = buf.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let mut g = max_abs.lock().expect("lock");
        *g = g.max(m);
    });
    rows.push(NoiseCheckRow { check: "covariance".into(), sampler: "eigen".into(), max_sigma: est.max_sigma(Moment::Covariance, expected) });
    rows.push(NoiseCheckRow {
        check: "pseudo_covariance".into(),
        sampler: "eigen".into(),
        max_sigma: est.max_sigma(Moment::Pseudo, |_, _| C64::new(0.0, 0.0)),
    });

    if bath.pseudomode_ok() {
        let h = r.grid.h();
        let sub = dt / h;
        if (sub - sub.round()).abs() > 1e-6 || sub.round() < 1.0 {
            return Err(Error::config("noise_check.points", "point spacing must be a multiple of the step"));
        }
        let sub = sub.round() as usize;
        let rates = bath.rates();
        let n = bath.n_modes();
        let fvals: Vec<Vec<C64>> = pts.iter().map(|&t| bath.modes.iter().map(|m| m.f.eval(t)).collect()).collect();
        // lags 0, 1/Γ, 2/Γ in steps, per mode
        let lags: Vec<[usize; 3]> = rates.iter().map(|g| [0.0, 1.0, 2.0].map(|m: f64| (m / (g * h)).round() as usize)).collect();
        let total_steps = (p - 1) * sub;
        let ou = batched_stats(draws, p, |k, buf| {
            let mut rng = seed.stream(draws + k);
            let mut st = ou_init(&rates, &mut rng).expect("rates validated");
            for (i, slot) in buf.iter_mut().enumerate() {
                if i > 0 {
                    for _ in 0..sub {
                        st.step(h, &mut rng);
                    }
                }
                *slot = fvals[i].iter().zip(&st.z).map(|(f, z)| f * z).sum();
            }
        });
        rows.push(NoiseCheckRow { check: "covariance".into(), sampler: "ou".into(), max_sigma: ou.max_sigma(Moment::Covariance, expected) });
        rows.push(NoiseCheckRow {
            check: "pseudo_covariance".into(),
            sampler: "ou".into(),
            max_sigma: ou.max_sigma(Moment::Pseudo, |_, _| C64::new(0.0, 0.0)),
        });
        rows.push(NoiseCheckRow { check: "cross_agreement".into(), sampler: "eigen-ou".into(), max_sigma: est.max_sigma_between(&ou, Moment::Covariance) });

        for j in 0..n {
            let lag = lags[j];
            if lag[2] > total_steps {
                continue;
            }
            let auto = batched_stats(draws, 3, |k, buf| {
                let mut rng = seed.stream(2 * draws + k);
                let mut st = ou_init(&rates, &mut rng).expect("rates validated");
                let mut step = 0;
                for (slot, &target) in buf.iter_mut().zip(&lag) {
                    while step < target {
                        st.step(h, &mut rng);
                        step += 1;
                    }
                    *slot = st.z[j];
                }
            });
            let g = rates[j];
            let taus = lag.map(|s| s as f64 * h);
            let sigma = auto.max_sigma(Moment::Covariance, |a, b| C64::new(0.5 * g * (-g * (taus[a] - taus[b]).abs()).exp(), 0.0));
            rows.push(NoiseCheckRow { check: format!("ou_autocorrelation_mode{j}"), sampler: "ou".into(), max_sigma: sigma });
        }
    }
    let max_abs_sample = max_abs.into_inner().expect("lock");
    Ok(NoiseReport { rows, clipped_fraction, max_abs_sample })
}

/// `noise-check` subcommand: writes `noise_check.csv` into `out`.
pub fn noise_check(cfg: &RunConfig, out: &Path) -> Result<NoiseReport> {
    let report = noise_check_report(cfg)?;
    write_file(&out.join("noise_check.csv"), &report.to_csv())?;
    Ok(report)
}

/// Method names accepted in configurations, for help texts.
pub fn method_names() -> [&'static str; 6] {
    [Method::HopsLinear, Method::HopsNonlinear, Method::Hme, Method::Pme, Method::PsseLinear, Method::PsseNonlinear].map(Method::name)
}
