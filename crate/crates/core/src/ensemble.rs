//! Trajectory fan-out and ensemble averaging.
//!
//! Trajectory `k` always draws from stream `k` of the master seed, and
//! trajectories are grouped into fixed batches merged in index order, so the
//! result does not depend on the number of worker threads.

use std::fmt::Write as _;
use std::ops::Range;

use crate::bcf::{pauli, HERMITIAN_TOL};
use crate::noise::{RealEigenSampler, SeedSpec};
use crate::propagate::{run_trajectory, CoefTable, Context, TimeGrid, TrajectoryStatus, VectorMethod, ZSource};
use crate::series::DensitySeries;
use crate::{Error, Result, C64};

/// Trajectories per batch. Fixed so that summation order is reproducible.
pub const BATCH: u64 = 32;

/// One named observable, evaluated as `Re[Tr(ρM) e^{-iωt}]`.
///
/// With `freq = 0` the matrix must be Hermitian. A nonzero frequency gives
/// rotating-frame quantities such as `⟨σ_+⟩e^{-iω0t} + c.c.` (with `M = 2σ_+`).
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub name: String,
    pub matrix: Vec<C64>,
    pub freq: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableSet {
    dim: usize,
    items: Vec<Observable>,
}

impl ObservableSet {
    pub fn new(dim: usize, items: Vec<Observable>) -> Result<Self> {
        for o in &items {
            if o.matrix.len() != dim * dim {
                return Err(Error::Dimension(format!("observable {} is not {dim}×{dim}", o.name)));
            }
            if o.freq == 0.0 {
                for a in 0..dim {
                    for b in 0..dim {
                        if (o.matrix[a * dim + b] - o.matrix[b * dim + a].conj()).norm() > HERMITIAN_TOL {
                            return Err(Error::Domain(format!("observable {} is not Hermitian", o.name)));
                        }
                    }
                }
            }
        }
        Ok(ObservableSet { dim, items })
    }

    pub fn empty(dim: usize) -> Self {
        ObservableSet { dim, items: Vec::new() }
    }

    /// `σ_x, σ_y, σ_z` and the rotating-frame `σ̃_x, σ̃_y` at frequency `omega0`.
    pub fn bloch(omega0: f64) -> Self {
        let two_plus: Vec<C64> = pauli::flat(pauli::PLUS).iter().map(|x| x * 2.0).collect();
        let rot_y: Vec<C64> = two_plus.iter().map(|x| x * C64::new(0.0, -1.0)).collect();
        let items = vec![
            Observable { name: "sx".into(), matrix: pauli::flat(pauli::X).to_vec(), freq: 0.0 },
            Observable { name: "sy".into(), matrix: pauli::flat(pauli::Y).to_vec(), freq: 0.0 },
            Observable { name: "sz".into(), matrix: pauli::flat(pauli::Z).to_vec(), freq: 0.0 },
            Observable { name: "sx_rot".into(), matrix: two_plus, freq: omega0 },
            Observable { name: "sy_rot".into(), matrix: rot_y, freq: omega0 },
        ];
        ObservableSet { dim: 2, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|o| o.name.as_str())
    }

    pub fn eval_into(&self, rho: &[C64], t: f64, out: &mut [f64]) {
        let d = self.dim;
        for (o, v) in self.items.iter().zip(out.iter_mut()) {
            let mut tr = C64::new(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    tr += rho[a * d + b] * o.matrix[b * d + a];
                }
            }
            if o.freq != 0.0 {
                tr *= crate::bcf::cis(-o.freq * t);
            }
            *v = tr.re;
        }
    }

    pub fn eval(&self, rho: &[C64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(rho, t, &mut out);
        out
    }
}

/// Running sums over trajectories of `ρ_S(t_i)` contributions and of the
/// observables, with entrywise second moments for standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAccumulator {
    times: Vec<f64>,
    dim: usize,
    observables: ObservableSet,
    count: u64,
    discarded: u64,
    sum: Vec<C64>,
    // squares of real and imaginary parts, entrywise
    sum_sq: Vec<C64>,
    obs_sum: Vec<f64>,
    obs_sq: Vec<f64>,
    scratch: Vec<f64>,
}

impl EnsembleAccumulator {
    pub fn new(times: Vec<f64>, dim: usize, observables: ObservableSet) -> Result<Self> {
        if !observables.is_empty() && observables.dim != dim {
            return Err(Error::Dimension("observable dimension differs from the system".into()));
        }
        let n = times.len() * dim * dim;
        let no = times.len() * observables.len();
        Ok(EnsembleAccumulator {
            dim,
            count: 0,
            discarded: 0,
            sum: vec![C64::new(0.0, 0.0); n],
            sum_sq: vec![C64::new(0.0, 0.0); n],
            obs_sum: vec![0.0; no],
            obs_sq: vec![0.0; no],
            scratch: vec![0.0; observables.len()],
            observables,
            times,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Trajectories dropped because their vacuum norm underflowed.
    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    pub fn observables(&self) -> &ObservableSet {
        &self.observables
    }

    pub fn note_discarded(&mut self, n: u64) {
        self.discarded += n;
    }

    /// Adds one trajectory given as row-major `d×d` contributions per stored time.
    pub fn add_trajectory(&mut self, rho: &[C64]) -> Result<()> {
        let s = self.dim * self.dim;
        if rho.len() != self.times.len() * s {
            return Err(Error::Dimension("trajectory does not match the stored grid".into()));
        }
        for (i, (acc, sq)) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).enumerate() {
            let x = rho[i];
            *acc += x;
            *sq += C64::new(x.re * x.re, x.im * x.im);
        }
        let no = self.observables.len();
        if no > 0 {
            for (i, &t) in self.times.iter().enumerate() {
                self.observables.eval_into(&rho[i * s..(i + 1) * s], t, &mut self.scratch);
                for (k, v) in self.scratch.iter().enumerate() {
                    self.obs_sum[i * no + k] += v;
                    self.obs_sq[i * no + k] += v * v;
                }
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Combine two accumulators over the same grid.
    pub fn merge(&mut self, other: &EnsembleAccumulator) -> Result<()> {
        if self.dim != other.dim || self.times != other.times || self.observables != other.observables {
            return Err(Error::Dimension("accumulators differ in grid, dimension or observables".into()));
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        for (a, b) in self.obs_sum.iter_mut().zip(&other.obs_sum) {
            *a += b;
        }
        for (a, b) in self.obs_sq.iter_mut().zip(&other.obs_sq) {
            *a += b;
        }
        self.count += other.count;
        self.discarded += other.discarded;
        Ok(())
    }

    /// Ensemble mean of `ρ_S(t)`.
    pub fn mean(&self) -> Result<DensitySeries> {
        if self.count == 0 {
            return Err(Error::Validation("ensemble is empty".into()));
        }
        let inv = 1.0 / self.count as f64;
        let mut series = DensitySeries::zeros(self.times.clone(), self.dim);
        for (m, s) in series.data.iter_mut().zip(&self.sum) {
            *m = s * inv;
        }
        Ok(series)
    }

    /// Ensemble means of the observables, `[time][observable]` flattened.
    pub fn observable_mean(&self) -> Vec<f64> {
        let inv = 1.0 / self.count.max(1) as f64;
        self.obs_sum.iter().map(|s| s * inv).collect()
    }

    /// Entrywise standard errors of the mean, real and imaginary parts packed
    /// as `C64(se_re, se_im)`. `None` with fewer than two trajectories.
    pub fn standard_error(&self) -> Option<Vec<C64>> {
        let n = self.count;
        if n < 2 {
            return None;
        }
        Some(
            self.sum
                .iter()
                .zip(&self.sum_sq)
                .map(|(s, q)| C64::new(se(s.re, q.re, n), se(s.im, q.im, n)))
                .collect(),
        )
    }

    /// Standard errors of the observable means, laid out like [`Self::observable_mean`].
    pub fn observable_standard_error(&self) -> Option<Vec<f64>> {
        let n = self.count;
        if n < 2 {
            return None;
        }
        Some(self.obs_sum.iter().zip(&self.obs_sq).map(|(s, q)| se(*s, *q, n)).collect())
    }
}

fn se(sum: f64, sq: f64, n: u64) -> f64 {
    let nf = n as f64;
    let var = ((sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (var / nf).sqrt()
}

/// Free-function form of [`EnsembleAccumulator::standard_error`].
pub fn standard_error(acc: &EnsembleAccumulator) -> Option<Vec<C64>> {
    acc.standard_error()
}

fn outer_into(psi: &[C64], scale: f64, out: &mut [C64]) {
    let d = psi.len();
    for a in 0..d {
        for b in 0..d {
            out[a * d + b] += psi[a] * psi[b].conj() * scale;
        }
    }
}

/// Adds `|ψ(t)⟩⟨ψ(t)|` for vacuum projections `ψ` given back to back per stored time.
pub fn accumulate_linear(acc: &mut EnsembleAccumulator, states: &[C64]) -> Result<()> {
    let d = acc.dim;
    let mut rho = vec![C64::new(0.0, 0.0); states.len() * d];
    for (i, psi) in states.chunks(d).enumerate() {
        outer_into(psi, 1.0, &mut rho[i * d * d..(i + 1) * d * d]);
    }
    acc.add_trajectory(&rho)
}

/// Adds `|ψ⟩⟨ψ|/⟨ψ|ψ⟩`, so each trajectory contributes unit trace.
pub fn accumulate_normalized(acc: &mut EnsembleAccumulator, states: &[C64]) -> Result<()> {
    let d = acc.dim;
    let mut rho = vec![C64::new(0.0, 0.0); states.len() * d];
    for (i, psi) in states.chunks(d).enumerate() {
        let n: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
        if !(n > 0.0) {
            return Err(Error::Numerical(format!("zero state at stored point {i}")));
        }
        outer_into(psi, 1.0 / n, &mut rho[i * d * d..(i + 1) * d * d]);
    }
    acc.add_trajectory(&rho)
}

/// System-density contribution of one extended vector for the given method:
/// vacuum projector for the hierarchy of pure states, partial trace over all
/// pseudo-Fock states for the pseudomode unraveling. Nonlinear methods are
/// normalized.
pub fn trajectory_density(method: VectorMethod, psi: &[C64], d: usize, out: &mut [C64]) {
    out.fill(C64::new(0.0, 0.0));
    match method {
        VectorMethod::HopsLinear => outer_into(&psi[..d], 1.0, out),
        VectorMethod::HopsNonlinear => {
            let n: f64 = psi[..d].iter().map(|x| x.norm_sqr()).sum();
            outer_into(&psi[..d], 1.0 / n, out);
        }
        VectorMethod::PsseLinear | VectorMethod::PsseNonlinear => {
            for block in psi.chunks(d) {
                outer_into(block, 1.0, out);
            }
            if method == VectorMethod::PsseNonlinear {
                let n: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
                out.iter_mut().for_each(|x| *x /= n);
            }
        }
    }
}

/// Everything needed to run trajectories of one configuration.
#[derive(Debug, Clone)]
pub struct TrajectoryPlan<'a> {
    pub ctx: &'a Context,
    pub table: &'a CoefTable,
    pub method: VectorMethod,
    pub grid: TimeGrid,
    pub psi0: Vec<C64>,
    pub z: ZSource<'a>,
    pub thermal: Option<&'a RealEigenSampler>,
    pub seed: SeedSpec,
}

fn run_batch(plan: &TrajectoryPlan, range: Range<u64>, template: &EnsembleAccumulator) -> Result<EnsembleAccumulator> {
    let d = plan.ctx.sys_dim();
    let s = d * d;
    let mut acc = template.clone();
    let mut rho = vec![C64::new(0.0, 0.0); template.times.len() * s];
    for k in range {
        let mut rng = plan.seed.stream(k);
        let status = run_trajectory(
            plan.ctx,
            plan.table,
            plan.method,
            &plan.grid,
            &plan.psi0,
            plan.z,
            plan.thermal,
            &mut rng,
            |i, psi| trajectory_density(plan.method, psi, d, &mut rho[i * s..(i + 1) * s]),
        )?;
        match status {
            TrajectoryStatus::Completed => acc.add_trajectory(&rho)?,
            TrajectoryStatus::Degenerate => acc.discarded += 1,
        }
    }
    Ok(acc)
}

/// Runs trajectories `range` of `plan` and averages them.
pub fn run_ensemble(plan: &TrajectoryPlan, range: Range<u64>, observables: ObservableSet) -> Result<EnsembleAccumulator> {
    let template = EnsembleAccumulator::new(plan.grid.stored_times(), plan.ctx.sys_dim(), observables)?;
    let batches: Vec<Range<u64>> = (range.start..range.end)
        .step_by(BATCH as usize)
        .map(|s| s..(s + BATCH).min(range.end))
        .collect();

    #[cfg(feature = "parallel")]
    let parts: Vec<Result<EnsembleAccumulator>> = {
        use rayon::prelude::*;
        batches.into_par_iter().map(|r| run_batch(plan, r, &template)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<EnsembleAccumulator>> = batches.into_iter().map(|r| run_batch(plan, r, &template)).collect();

    let mut total = template;
    for p in parts {
        total.merge(&p?)?;
    }
    if total.count > 0 || total.discarded > 0 {
        Ok(total)
    } else {
        Err(Error::Validation("no trajectories requested".into()))
    }
}

/// Column names of the ensemble CSV.
pub fn csv_header(dim: usize, observables: &ObservableSet, with_errors: bool) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    let mut value_cols = Vec::new();
    for a in 0..dim {
        for b in 0..dim {
            value_cols.push(format!("rho_{a}{b}_re"));
            value_cols.push(format!("rho_{a}{b}_im"));
        }
    }
    value_cols.extend(observables.names().map(str::to_string));
    cols.extend(value_cols.iter().cloned());
    if with_errors {
        cols.extend(value_cols.iter().map(|c| format!("se_{c}")));
    }
    cols
}

/// CSV table of a density series, its observables and optional standard
/// errors. Numbers use the shortest representation that round-trips.
pub fn write_csv(
    series: &DensitySeries,
    observables: &ObservableSet,
    errors: Option<(&[C64], &[f64])>,
) -> String {
    let no = observables.len();
    let mut out = csv_header(series.dim, observables, errors.is_some()).join(",");
    out.push('\n');
    let s = series.dim * series.dim;
    for (i, &t) in series.times.iter().enumerate() {
        let _ = write!(out, "{t:?}");
        for x in series.rho(i) {
            let _ = write!(out, ",{:?},{:?}", x.re, x.im);
        }
        for v in observables.eval(series.rho(i), t) {
            let _ = write!(out, ",{v:?}");
        }
        if let Some((rho_se, obs_se)) = errors {
            for x in &rho_se[i * s..(i + 1) * s] {
                let _ = write!(out, ",{:?},{:?}", x.re, x.im);
            }
            for v in &obs_se[i * no..(i + 1) * no] {
                let _ = write!(out, ",{v:?}");
            }
        }
        out.push('\n');
    }
    out
}

/// [`write_csv`] for an ensemble: means plus standard errors when defined.
pub fn ensemble_csv(acc: &EnsembleAccumulator) -> Result<String> {
    let mean = acc.mean()?;
    let se = acc.standard_error();
    let ose = acc.observable_standard_error();
    let errors = se.as_deref().zip(ose.as_deref());
    Ok(write_csv(&mean, &acc.observables, errors))
}
