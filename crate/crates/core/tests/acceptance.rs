//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every run is driven by a committed configuration under
//! `configs/`, so each one can be repeated with the `hops` binary.
//!
//! Run with `cargo test --test acceptance`. The full suite takes roughly
//! twenty minutes on a single core.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use hops_core::bcf::{dpa_bogoliubov, effective_squeezing, BathModel};
use hops_core::config::{RunConfig, ScanAxis, SystemSpec};
use hops_core::driver::{
    execute, execute_cached, load_config, noise_check_report, reference_series_cached, scan_rows,
    scan_rows_against, Outcome, SamplerCache, ScanRow,
};
use hops_core::ensemble::{EnsembleAccumulator, ObservableSet};
use hops_core::error_lab::{richardson_order, stochastic_error};
use hops_core::fock::{FockBasis, TruncationScheme};
use hops_core::series::DensitySeries;
use hops_core::{Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"));
    load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

/// Smallest scanned value whose error is at most `threshold`.
fn first_below(rows: &[ScanRow], threshold: impl Fn(&ScanRow) -> f64) -> Option<f64> {
    rows.iter().find(|r| r.r <= threshold(r)).map(|r| r.value)
}

fn fmt_n(v: Option<f64>) -> String {
    v.map_or("never".into(), |x| format!("{x}"))
}

fn ensemble(o: &Outcome) -> &EnsembleAccumulator {
    o.ensemble().expect("stochastic configuration")
}

// ---------------------------------------------------------------------------

fn c1() -> Result<Verdict> {
    let hme = execute(&config("fig2_hme"))?.mean()?;
    let pme = execute(&config("fig2_pme"))?.mean()?;
    let (_, r) = stochastic_error(&hme, &pme)?;
    verdict(r <= 1e-6, format!("HME vs PME at nmax 60, h = 1e-4: rms = {r:.3e} (limit 1e-6)"))
}

/// Fraction of stored points at which observable `k` lies within three
/// standard errors of the reference, for every `k`.
fn per_component_agreement(acc: &EnsembleAccumulator, reference: &DensitySeries) -> Vec<(String, f64)> {
    let obs: &ObservableSet = acc.observables();
    let no = obs.len();
    let mean = acc.observable_mean();
    let se = acc.observable_standard_error().expect("at least two trajectories");
    let mut hits = vec![0usize; no];
    for (i, &t) in reference.times.iter().enumerate() {
        let want = obs.eval(reference.rho(i), t);
        for k in 0..no {
            if (mean[i * no + k] - want[k]).abs() <= 3.0 * se[i * no + k] {
                hits[k] += 1;
            }
        }
    }
    obs.names().zip(hits).map(|(n, h)| (n.to_string(), h as f64 / reference.len() as f64)).collect()
}

fn c2_case(name: &str) -> Result<(bool, String)> {
    let cfg = config(name);
    let mut cache = SamplerCache::new();
    let out = execute_cached(&cfg, &mut cache)?;
    let reference = reference_series_cached(&cfg, &mut cache)?.expect("reference configured");
    let acc = ensemble(&out);
    let (_, r) = stochastic_error(&acc.mean()?, &reference)?;
    let fractions = per_component_agreement(acc, &reference);
    let worst = fractions.iter().cloned().fold((String::new(), 1.0), |a, b| if b.1 < a.1 { b } else { a });
    let discard_rate = acc.discarded() as f64 / (acc.count() + acc.discarded()) as f64;
    let pass = r <= 0.02 && worst.1 >= 0.99 && discard_rate < 1e-4;
    let detail = format!(
        "{} M = {}: r = {r:.4} (limit 0.02), worst component {} within 3 s.e. at {:.2}% (limit 99%), discard rate {discard_rate:.1e}",
        cfg.method.name(),
        acc.count(),
        worst.0,
        100.0 * worst.1
    );
    Ok((pass, detail))
}

fn c2() -> Result<Verdict> {
    let (p1, d1) = c2_case("c2_hops")?;
    let (p2, d2) = c2_case("c2_psse")?;
    verdict(p1 && p2, format!("{d1}; {d2}"))
}

/// `Φ(t) = ∫_0^t dt1 ∫_0^t1 dt2 Re α(t1, t2)` on `times` by composite
/// Gauss-Legendre quadrature in both variables.
fn dephasing_exponent(model: &BathModel, times: &[f64]) -> Vec<f64> {
    const X: [f64; 4] = [0.3399810435848563, 0.8611363115940526, -0.3399810435848563, -0.8611363115940526];
    const W: [f64; 4] = [0.6521451548625461, 0.3478548451374538, 0.6521451548625461, 0.3478548451374538];
    let panel = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        X.iter().zip(&W).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
    };
    let composite = |a: f64, b: f64, width: f64, f: &dyn Fn(f64) -> f64| {
        let n = ((b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        (0..n).map(|k| panel(a + k as f64 * h, a + (k + 1) as f64 * h, f)).sum::<f64>()
    };
    let inner = |t1: f64| composite(0.0, t1, 0.01, &|t2| model.eval_bcf(t1, t2).re);
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &t in times {
        if t > prev {
            acc += composite(prev, t, 0.01, &inner);
        }
        prev = t;
        out.push(acc);
    }
    out
}

fn c3() -> Result<Verdict> {
    // Independent reference values of exp(-4Φ(T)) for the squeezed model.
    let frozen = [
        (0.5, 0.10184825898951899),
        (1.0, 0.21367704010922187),
        (2.0, 0.05358240262262907),
        (5.0, 0.004725831484645598),
    ];
    let sq_cfg = config("c3_dephasing");
    let sq = sq_cfg.bath_model()?;
    let probe: Vec<f64> = frozen.iter().map(|f| f.0).collect();
    let phi = dephasing_exponent(&sq, &probe);
    let frozen_err = frozen.iter().zip(&phi).map(|((_, want), p)| ((-4.0 * p).exp() - want).abs()).fold(0.0, f64::max);

    let st_cfg = config("c3_dephasing_stationary");
    let st = st_cfg.bath_model()?;
    let (gamma, rate) = (1.0, 1.0);
    let closed = |t: f64| (-2.0 * gamma * (t - (1.0 - (-rate * t).exp()) / rate)).exp();

    let mut worst_hme = 0.0f64;
    let mut worst_closed = 0.0f64;
    for (cfg, model, stationary) in [(&sq_cfg, &sq, false), (&st_cfg, &st, true)] {
        let series = execute(cfg)?.mean()?;
        let phi = dephasing_exponent(model, &series.times);
        for (i, p) in phi.iter().enumerate() {
            let oracle = 0.5 * (-4.0 * p).exp();
            worst_hme = worst_hme.max((series.entry(i, 0, 1).norm() - oracle).abs());
            if stationary {
                worst_closed = worst_closed.max((oracle - 0.5 * closed(series.times[i])).abs());
            }
        }
    }
    verdict(
        frozen_err <= 1e-8 && worst_closed <= 1e-10 && worst_hme <= 1e-4,
        format!(
            "max ||ρ_eg| - oracle| on [0, 5] = {worst_hme:.2e} (limit 1e-4); quadrature vs frozen values {frozen_err:.1e}, \
             vs stationary closed form {worst_closed:.1e}"
        ),
    )
}

fn c4() -> Result<Verdict> {
    let cfg = config("c4_richardson");
    let h = cfg.step.expect("explicit step");
    let run = |s: f64| -> Result<DensitySeries> { execute(&cfg.with_scan_value(ScanAxis::Step, s, None)?)?.mean() };
    let p = richardson_order(&run(h)?, &run(2.0 * h)?, &run(4.0 * h)?)?;
    let unmasked = p.unmasked().count();
    let median = p.median().unwrap_or(f64::NAN);
    verdict(
        (3.5..=4.5).contains(&median),
        format!("HME nmax 60, h = {h:e}: median p = {median:.3} over {unmasked} unmasked entries (band [3.5, 4.5])"),
    )
}

fn c5_ordering(rate: &str, smaller: &str, larger: &str) -> Result<(bool, String)> {
    let small = first_below(&scan_rows(&config(&format!("{rate}_{smaller}")))?, |_| 1e-3);
    let large = first_below(&scan_rows(&config(&format!("{rate}_{larger}")))?, |_| 1e-3);
    let pass = matches!((small, large), (Some(a), Some(b)) if a < b);
    Ok((pass, format!("r <= 1e-3 first at nmax {} for {smaller}, {} for {larger}", fmt_n(small), fmt_n(large))))
}

fn c5a() -> Result<Verdict> {
    let (pass, d) = c5_ordering("c5a", "pme", "hme")?;
    verdict(pass, format!("Γ = 0.2: {d}; PME must be strictly smaller"))
}

fn c5b() -> Result<Verdict> {
    let (pass, d) = c5_ordering("c5b", "hme", "pme")?;
    verdict(pass, format!("Γ = 2: {d}; HME must be strictly smaller"))
}

/// Largest rise of `r` between neighbouring truncation levels, in units of
/// the larger Monte-Carlo baseline of the pair.
fn worst_rise(rows: &[ScanRow]) -> (f64, f64) {
    rows.windows(2)
        .map(|w| {
            let b = w[0].baseline.unwrap_or(0.0).max(w[1].baseline.unwrap_or(0.0));
            ((w[1].r - w[0].r) / b, w[1].value)
        })
        .fold((f64::NEG_INFINITY, f64::NAN), |a, b| if b.0 > a.0 { b } else { a })
}

fn c5c() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["c5c_hops", "c5c_psse"] {
        let cfg = config(name);
        let rows = scan_rows(&cfg)?;
        let (rise, at) = worst_rise(&rows);
        pass &= rise <= 1.0;
        let curve: Vec<String> = rows.iter().map(|r| format!("{}:{:.3}", r.value, r.r)).collect();
        parts.push(format!(
            "{}: largest rise {rise:.2} baselines at nmax {at} (limit 1) [r = {}]",
            cfg.method.name(),
            curve.join(" ")
        ));
    }
    verdict(pass, parts.join("; "))
}

/// Ensemble size whose Monte-Carlo baseline defines the matched error of the
/// three-mode scans. Noise is paired with the reference, so truncation errors
/// well below the baseline of the desk-scale ensemble remain measurable.
const BASELINE_ENSEMBLE: f64 = 1e5;

fn c5d() -> Result<Verdict> {
    let mut cache = SamplerCache::new();
    let first = config("c5d_mode0");
    let reference = reference_series_cached(&first, &mut cache)?.expect("reference configured");
    let threshold = |r: &ScanRow| r.baseline.unwrap_or(0.0) * (r.trajectories as f64 / BASELINE_ENSEMBLE).sqrt();
    let mut needed = Vec::new();
    for j in 0..3 {
        let rows = scan_rows_against(&config(&format!("c5d_mode{j}")), &reference, &mut cache)?;
        needed.push(first_below(&rows, threshold));
    }
    let tri = scan_rows_against(&config("c5d_triangular"), &reference, &mut cache)?;
    let nsum = first_below(&tri, threshold);
    let level = threshold(&tri[0]);
    let mode2_largest = match (needed[0], needed[1], needed[2]) {
        (Some(a), Some(b), Some(c)) => b > a && b > c,
        _ => false,
    };
    let tri_ok = nsum.is_some_and(|n| (5.0..=7.0).contains(&n));
    verdict(
        mode2_largest && tri_ok,
        format!(
            "matched error {level:.2e}: nmax needed per mode (1, 2, 3) = ({}, {}, {}), mode 2 must be largest; \
             triangular reaches it at nsum {} (band 5-7)",
            fmt_n(needed[0]),
            fmt_n(needed[1]),
            fmt_n(needed[2]),
            fmt_n(nsum)
        ),
    )
}

fn c6() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["c6_single", "c6_dpa"] {
        let rep = noise_check_report(&config(name))?;
        pass &= rep.pass();
        let checks: Vec<String> = rep.rows.iter().map(|r| format!("{}/{} {:.2}σ", r.check, r.sampler, r.max_sigma)).collect();
        parts.push(format!("{name}: {}", checks.join(", ")));
    }
    let control = noise_check_report(&config("c6_corrupt"))?;
    pass &= !control.pass();
    parts.push(format!("corrupted control rejected: {}", !control.pass()));
    verdict(pass, parts.join("; "))
}

fn c7() -> Result<Verdict> {
    let mut fails = Vec::new();
    for n in [0u32, 1, 10, 60, 99] {
        let b = FockBasis::new(TruncationScheme::Rectangular(vec![n]))?;
        if 2 * b.len() != 2 * (n as usize + 1) {
            fails.push(format!("single mode nmax {n}"));
        }
    }
    let three = TruncationScheme::Rectangular(vec![9, 9, 9]).size().unwrap_or(0) * 2;
    if three * three != 4_000_000 {
        fails.push(format!("three modes: d = {three}"));
    }
    let tri = 2 * FockBasis::new(TruncationScheme::Triangular { nsum: 5, modes: 3 })?.len();
    if tri != 112 {
        fails.push(format!("triangular d = {tri}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let rate = rng.random_range(0.05..5.0);
        let eps = rate * rng.random_range(0.01..0.99);
        let gamma0 = (rate + eps) * rng.random_range(1.01..10.0);
        let (u, v) = dpa_bogoliubov(gamma0, rate, eps)?;
        worst = worst.max((u * u - v * v - 1.0).abs());
    }
    if worst > 1e-10 {
        fails.push(format!("u²-v² deviates by {worst:e}"));
    }
    let rt = effective_squeezing(1.0, 0.5)?;
    if (rt - 0.5493).abs() > 1e-4 {
        fails.push(format!("effective squeezing {rt}"));
    }
    verdict(
        fails.is_empty(),
        format!("d(3 modes) = {three}, d_triang = {tri}, max |u²-v²-1| = {worst:.1e}, r̃(1, 0.5) = {rt:.4} {}", fails.join("; ")),
    )
}

fn c8() -> Result<Verdict> {
    let mut fails = Vec::new();

    let a = execute(&config("c8_squeezed_r0"))?;
    let b = execute(&config("c8_stationary"))?;
    let bit_equal = a.mean()?.data == b.mean()?.data;
    if !bit_equal {
        fails.push("r = 0 differs from the stationary bath".to_string());
    }

    let iso_cfg = config("c8_isolated");
    let w = match &iso_cfg.system {
        SystemSpec::TwoLevel { omega0, .. } => *omega0,
        _ => unreachable!("two-level configuration"),
    };
    let iso = execute(&iso_cfg)?.mean()?;
    let mut iso_err = 0.0f64;
    for (i, &t) in iso.times.iter().enumerate() {
        let coh = C64::from_polar(0.5, FRAC_PI_4 - w * t);
        let want = [C64::new(0.5, 0.0), coh, coh.conj(), C64::new(0.5, 0.0)];
        let got = iso.rho(i);
        iso_err = (0..4).map(|k| (got[k] - want[k]).norm()).fold(iso_err, f64::max);
    }
    if iso_err > 1e-8 {
        fails.push(format!("isolated atom error {iso_err:e}"));
    }

    let pme = execute(&config("c8_pme_trace"))?.mean()?;
    let trace_err = (0..pme.len()).map(|i| (pme.trace(i) - 1.0).norm()).fold(0.0, f64::max);
    if trace_err > 1e-8 {
        fails.push(format!("PME trace error {trace_err:e}"));
    }

    let lin = execute(&config("c8_girsanov_linear"))?;
    let nl = execute(&config("c8_girsanov_nonlinear"))?;
    let (la, na) = (ensemble(&lin), ensemble(&nl));
    let (lm, nm) = (la.mean()?, na.mean()?);
    let (ls, ns) = (la.standard_error().expect("ensemble"), na.standard_error().expect("ensemble"));
    let mut within = 0usize;
    for k in 0..lm.data.len() {
        let d = lm.data[k] - nm.data[k];
        let s_re = (ls[k].re.powi(2) + ns[k].re.powi(2)).sqrt();
        let s_im = (ls[k].im.powi(2) + ns[k].im.powi(2)).sqrt();
        if d.re.abs() <= 3.0 * s_re + 1e-15 && d.im.abs() <= 3.0 * s_im + 1e-15 {
            within += 1;
        }
    }
    let frac = within as f64 / lm.data.len() as f64;
    if frac < 0.99 {
        fails.push(format!("linear vs normalized agreement {frac}"));
    }

    verdict(
        fails.is_empty(),
        format!(
            "r = 0 bit-identical: {bit_equal}; isolated atom {iso_err:.1e} (limit 1e-8); PME |Tr-1| {trace_err:.1e} (limit 1e-8); \
             linear vs normalized HOPS within 3 joint s.e. at {:.2}% of entries (limit 99%) {}",
            100.0 * frac,
            fails.join("; ")
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = fn() -> Result<Verdict>;
    let criteria: [(&str, &str, Criterion); 11] = [
        ("C1", "cross-method consistency", c1),
        ("C2", "stochastic vs deterministic", c2),
        ("C3", "dephasing oracle", c3),
        ("C4", "Richardson order", c4),
        ("C5a", "truncation at Γ = 0.2", c5a),
        ("C5b", "truncation at Γ = 2", c5b),
        ("C5c", "stochastic truncation stability", c5c),
        ("C5d", "three-mode truncation", c5d),
        ("C6", "noise validation", c6),
        ("C7", "structural facts", c7),
        ("C8", "limits and invariants", c8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, title, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x.eq_ignore_ascii_case(id)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} {id} {title}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
