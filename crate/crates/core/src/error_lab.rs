//! Error estimates for propagated density matrices: Richardson order,
//! step-size and truncation errors, their combination, and the Monte-Carlo
//! error of an ensemble against a reference.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::series::DensitySeries;
use crate::{Error, Result};

/// Richardson denominators `|ρ(2h) - ρ(h)|` below this are masked.
pub const MASK_THRESHOLD: f64 = 1e-14;

/// Real entrywise field over stored times, `None` where masked.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryField {
    pub times: Vec<f64>,
    pub dim: usize,
    pub values: Vec<Option<f64>>,
}

impl EntryField {
    pub fn get(&self, i: usize, a: usize, b: usize) -> Option<f64> {
        self.values[(i * self.dim + a) * self.dim + b]
    }

    pub fn unmasked(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    /// Median of the unmasked entries.
    pub fn median(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.unmasked().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
    }

    /// `√(Σ_ij |x_ij(t)|²)` per stored time, masked entries counted as zero.
    pub fn frobenius(&self) -> Vec<f64> {
        let s = self.dim * self.dim;
        self.values.chunks(s).map(|c| c.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()).collect()
    }
}

/// `p_ij(t) = log₂ |(ρ(4h) - ρ(2h)) / (ρ(2h) - ρ(h))|`.
pub fn richardson_order(rho_h: &DensitySeries, rho_2h: &DensitySeries, rho_4h: &DensitySeries) -> Result<EntryField> {
    rho_h.check_compatible(rho_2h)?;
    rho_h.check_compatible(rho_4h)?;
    let values = rho_h
        .data
        .iter()
        .zip(&rho_2h.data)
        .zip(&rho_4h.data)
        .map(|((h, h2), h4)| {
            let den = (h2 - h).norm();
            if den < MASK_THRESHOLD {
                None
            } else {
                Some(((h4 - h2).norm() / den).log2())
            }
        })
        .collect();
    Ok(EntryField { times: rho_h.times.clone(), dim: rho_h.dim, values })
}

/// `|ρ(2h) - ρ(h)| / (2^p - 1)` with the entrywise order `p`.
pub fn step_error(rho_h: &DensitySeries, rho_2h: &DensitySeries, p: &EntryField) -> Result<EntryField> {
    rho_h.check_compatible(rho_2h)?;
    if p.values.len() != rho_h.data.len() {
        return Err(Error::Dimension("order field does not match the density series".into()));
    }
    let values = rho_h
        .data
        .iter()
        .zip(&rho_2h.data)
        .zip(&p.values)
        .map(|((h, h2), p)| p.map(|p| (h2 - h).norm() / (p.exp2() - 1.0)))
        .collect();
    Ok(EntryField { times: rho_h.times.clone(), dim: rho_h.dim, values })
}

/// [`step_error`] with one global order for every entry.
pub fn step_error_uniform(rho_h: &DensitySeries, rho_2h: &DensitySeries, p: f64) -> Result<EntryField> {
    let field = EntryField { times: rho_h.times.clone(), dim: rho_h.dim, values: vec![Some(p); rho_h.data.len()] };
    step_error(rho_h, rho_2h, &field)
}

/// `|ρ(t; h, n^max) - ρ(t; h, n^∞)|` entrywise.
pub fn truncation_error(rho_nmax: &DensitySeries, rho_ninf: &DensitySeries) -> Result<EntryField> {
    rho_nmax.check_compatible(rho_ninf)?;
    let values = rho_nmax.data.iter().zip(&rho_ninf.data).map(|(a, b)| Some((a - b).norm())).collect();
    Ok(EntryField { times: rho_nmax.times.clone(), dim: rho_nmax.dim, values })
}

/// Total error per stored time and its RMS over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    pub total: Vec<f64>,
    pub step: Option<Vec<f64>>,
    pub truncation: Option<Vec<f64>>,
    pub rms: f64,
    pub order: Option<EntryField>,
    pub metadata: BTreeMap<String, String>,
}

impl ErrorReport {
    /// CSV with columns `t, delta_total` and the per-source columns present.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,delta_total");
        if self.step.is_some() {
            out.push_str(",delta_step");
        }
        if self.truncation.is_some() {
            out.push_str(",delta_trun");
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:?},{:?}", self.total[i]);
            for col in [&self.step, &self.truncation].into_iter().flatten() {
                let _ = write!(out, ",{:?}", col[i]);
            }
            out.push('\n');
        }
        out
    }
}

/// RMS over stored times, `√(1/N Σ_t x(t)²)`.
pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// `Δ(t) = √(Σ|Δ^(trun)_ij|² + Σ|Δ^(step)_ij|²)` and its RMS.
pub fn total_and_rms(step: Option<&EntryField>, trun: Option<&EntryField>) -> Result<ErrorReport> {
    let first = step.or(trun).ok_or_else(|| Error::Dimension("no error source given".into()))?;
    if let (Some(a), Some(b)) = (step, trun) {
        if a.dim != b.dim || a.values.len() != b.values.len() {
            return Err(Error::Dimension("error fields differ in shape".into()));
        }
    }
    let s = step.map(EntryField::frobenius);
    let tr = trun.map(EntryField::frobenius);
    let total: Vec<f64> = (0..first.times.len())
        .map(|i| {
            let a = s.as_ref().map_or(0.0, |v| v[i]);
            let b = tr.as_ref().map_or(0.0, |v| v[i]);
            a.hypot(b)
        })
        .collect();
    if total.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite error estimate".into()));
    }
    Ok(ErrorReport {
        times: first.times.clone(),
        rms: rms(&total),
        total,
        step: s,
        truncation: tr,
        order: None,
        metadata: BTreeMap::new(),
    })
}

/// `Δ(t) = √(Σ_ij |⟨ρ_ij⟩_M - ρ_ref,ij|²)` and `r`, its RMS over stored times.
pub fn stochastic_error(mean: &DensitySeries, reference: &DensitySeries) -> Result<(Vec<f64>, f64)> {
    mean.check_compatible(reference)?;
    let s = mean.dim * mean.dim;
    let delta: Vec<f64> = (0..mean.len())
        .map(|i| {
            (0..s)
                .map(|e| (mean.data[i * s + e] - reference.data[i * s + e]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let r = rms(&delta);
    Ok((delta, r))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::C64;

    fn series_from(f: impl Fn(usize, usize) -> C64, times: usize) -> DensitySeries {
        let mut s = DensitySeries::zeros((0..times).map(|i| i as f64).collect(), 2);
        for i in 0..times {
            for e in 0..4 {
                s.rho_mut(i)[e] = f(i, e);
            }
        }
        s
    }

    fn power_law(p: i32) -> [DensitySeries; 3] {
        let base = |i: usize, e: usize| C64::new(0.1 * i as f64, e as f64 - 1.5);
        let coef = |i: usize, e: usize| C64::new(1.0 + e as f64, 0.5 * i as f64 - 0.3);
        [0.1f64, 0.2, 0.4].map(|h| series_from(|i, e| base(i, e) + coef(i, e) * h.powi(p), 4))
    }

    #[test]
    fn order_of_constructed_power_laws() {
        for p in [4, 2] {
            let [a, b, c] = power_law(p);
            let field = richardson_order(&a, &b, &c).unwrap();
            assert!(field.unmasked().all(|x| (x - p as f64).abs() < 1e-9));
            assert_eq!(field.unmasked().count(), 16);
        }
    }

    #[test]
    fn quartic_step_error_recovers_leading_term() {
        let [a, b, c] = power_law(4);
        let p = richardson_order(&a, &b, &c).unwrap();
        let err = step_error(&a, &b, &p).unwrap();
        for i in 0..4 {
            for e in 0..4 {
                let coef = C64::new(1.0 + e as f64, 0.5 * i as f64 - 0.3).norm();
                let got = err.get(i, e / 2, e % 2).unwrap();
                assert!((got - coef * 1e-4).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_runs_are_masked_and_error_free() {
        let [a, ..] = power_law(4);
        let p = richardson_order(&a, &a, &a).unwrap();
        assert!(p.unmasked().next().is_none());
        let err = step_error_uniform(&a, &a, 4.0).unwrap();
        assert!(err.unmasked().all(|x| x == 0.0));
        let t = truncation_error(&a, &a).unwrap();
        assert!(t.unmasked().all(|x| x == 0.0));
        let (delta, r) = stochastic_error(&a, &a).unwrap();
        assert!(delta.iter().all(|&x| x == 0.0) && r == 0.0);
    }

    #[test]
    fn single_entry_total() {
        let mut values = vec![Some(0.0); 8];
        values[5] = Some(3.0);
        let f = EntryField { times: vec![0.0, 1.0], dim: 2, values };
        let rep = total_and_rms(Some(&f), None).unwrap();
        assert_eq!(rep.total, vec![0.0, 3.0]);
        let c = EntryField { times: vec![0.0, 1.0], dim: 2, values: vec![Some(0.5); 8] };
        let rep = total_and_rms(None, Some(&c)).unwrap();
        assert!((rep.rms - 1.0).abs() < 1e-15);
        let csv = rep.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "t,delta_total,delta_trun");
    }

    #[test]
    fn pythagorean_composition() {
        let a = EntryField { times: vec![0.0], dim: 2, values: vec![Some(3.0), None, Some(0.0), Some(0.0)] };
        let b = EntryField { times: vec![0.0], dim: 2, values: vec![Some(0.0), Some(4.0), Some(0.0), Some(0.0)] };
        let rep = total_and_rms(Some(&a), Some(&b)).unwrap();
        assert!((rep.total[0] - 5.0).abs() < 1e-15);
        assert!(total_and_rms(None, None).is_err());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let [a, ..] = power_law(4);
        let short = series_from(|_, _| C64::new(0.0, 0.0), 3);
        assert!(richardson_order(&a, &a, &short).is_err());
        assert!(stochastic_error(&a, &short).is_err());
    }

    #[test]
    fn iid_noise_gives_twice_sigma() {
        // E|Δ|² = 4σ² for four complex entries with E|ε|² = σ²
        let sigma = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let reference = series_from(|i, e| C64::new(i as f64, e as f64), 20_000);
        let mut noisy = reference.clone();
        for x in noisy.data.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *x += C64::new(re, im) * (sigma / 2f64.sqrt());
        }
        let (_, r) = stochastic_error(&noisy, &reference).unwrap();
        assert!((r / (2.0 * sigma) - 1.0).abs() < 0.01, "{r}");
    }

    proptest! {
        #[test]
        fn stochastic_error_ignores_global_phase(theta in 0.0f64..6.3, seed in 0u64..100) {
            // density matrices are invariant under ψ → e^{iθ}ψ
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            let psi: Vec<[C64; 2]> = (0..5).map(|_| [draw(), draw()]).collect();
            let phase = C64::from_polar(1.0, theta);
            let build = |ph: C64| series_from(|i, e| {
                let v = [psi[i][0] * ph, psi[i][1] * ph];
                v[e / 2] * v[e % 2].conj()
            }, 5);
            let reference = series_from(|i, e| C64::new(i as f64, -(e as f64)), 5);
            let (_, r0) = stochastic_error(&build(C64::new(1.0, 0.0)), &reference).unwrap();
            let (_, r1) = stochastic_error(&build(phase), &reference).unwrap();
            prop_assert!((r0 - r1).abs() < 1e-12 * (1.0 + r0));
        }

        #[test]
        fn error_fields_are_nonnegative(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            let s: Vec<DensitySeries> = (0..3).map(|_| {
                let v: Vec<C64> = (0..12).map(|_| draw()).collect();
                series_from(|i, e| v[i * 4 + e], 3)
            }).collect();
            let p = richardson_order(&s[0], &s[1], &s[2]).unwrap();
            let st = step_error(&s[0], &s[1], &p).unwrap();
            let tr = truncation_error(&s[0], &s[2]).unwrap();
            let rep = total_and_rms(Some(&st), Some(&tr)).unwrap();
            prop_assert!(tr.unmasked().all(|x| x >= 0.0));
            prop_assert!(rep.total.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }
}
