use std::sync::Arc;

use hops_core::bcf::{dpa_bogoliubov, pauli, single_mode_squeezed, SystemModel};
use hops_core::config::parse_config;
use hops_core::driver::execute;
use hops_core::fock::{apply_annihilation, apply_creation, ExtendedDensity, ExtendedState, FockBasis, TruncationScheme};
use hops_core::propagate::{hme_rhs, pme_rhs, Context};
use hops_core::C64;
use proptest::prelude::*;
use serde_json::json;

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn two_level_config(method: &str, gamma: f64, r: f64, phi: f64, rate: f64, nmax: u32) -> String {
    json!({
        "version": 1,
        "system": {"kind": "two_level", "omega0": 5.0, "coupling": "sigma_x",
                   "initial_state": [[0.6, 0.0], [0.0, 0.8]]},
        "bath": {"kind": "single_mode_squeezed", "gamma": gamma, "omega0": 5.0, "r": r, "phi": phi, "rate": rate},
        "method": method,
        "truncation": {"kind": "rectangular", "nmax": nmax},
        "t_end": 0.5,
        "step": 0.005,
        "stored": 10,
        "trajectories": 8,
        "seed": 3
    })
    .to_string()
}

fn random_density(basis: Arc<FockBasis>, seed: &[f64]) -> ExtendedDensity {
    let n = 2 * basis.len();
    let amp: Vec<C64> = (0..n).map(|i| C64::new(seed[i % seed.len()] + 0.1 * i as f64, seed[(3 * i + 1) % seed.len()])).collect();
    let norm: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
    let entries = (0..n * n).map(|k| amp[k / n] * amp[k % n].conj() / norm).collect();
    ExtendedDensity::from_entries(2, basis, entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bogoliubov_identity(rate in 0.05f64..5.0, frac in 0.01f64..0.99, widen in 1.01f64..10.0) {
        let eps = rate * frac;
        let (u, v) = dpa_bogoliubov((rate + eps) * widen, rate, eps).unwrap();
        prop_assert!((u * u - v * v - 1.0).abs() < 1e-10);
        prop_assert!(u >= 1.0 && v > 0.0);
    }

    #[test]
    fn basis_sizes_match_closed_forms(n in prop::collection::vec(0u32..6, 1..4), nsum in 0u32..8) {
        let rect = FockBasis::new(TruncationScheme::Rectangular(n.clone())).unwrap();
        prop_assert_eq!(rect.len() as u64, n.iter().map(|&x| x as u64 + 1).product::<u64>());
        let modes = n.len();
        let tri = FockBasis::new(TruncationScheme::Triangular { nsum, modes }).unwrap();
        prop_assert_eq!(tri.len() as u64, binom(nsum as u64 + modes as u64, modes as u64));
        for k in 0..rect.len() {
            prop_assert_eq!(rect.index_of(rect.occupation(k)), Some(k));
        }
    }

    #[test]
    fn ladder_operators_are_adjoint(n in prop::collection::vec(1u32..5, 1..3), re in prop::collection::vec(-1.0f64..1.0, 8)) {
        let basis = Arc::new(FockBasis::new(TruncationScheme::Rectangular(n.clone())).unwrap());
        let len = 2 * basis.len();
        let mk = |off: usize| {
            let amps = (0..len).map(|i| C64::new(re[(i + off) % 8], re[(2 * i + off + 3) % 8])).collect();
            ExtendedState::from_amplitudes(2, basis.clone(), amps).unwrap()
        };
        let (x, y) = (mk(0), mk(5));
        for j in 0..n.len() {
            let lhs = x.inner(&apply_annihilation(j, &y).unwrap());
            let rhs = apply_creation(j, &x).unwrap().inner(&y);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn squeezed_bcf_is_hermitian(r in 0.0f64..2.0, phi in 0.0f64..6.3, rate in 0.1f64..3.0, t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let m = single_mode_squeezed(1.0, 5.0, r, phi, rate).unwrap();
        prop_assert!((m.eval_bcf(t, s) - m.eval_bcf(s, t).conj()).norm() < 1e-12);
        prop_assert!(m.eval_bcf(t, t).re >= 0.0);
    }

    #[test]
    fn pme_generator_is_trace_free_and_hermitian(r in 0.0f64..1.5, rate in 0.2f64..2.0, t in 0.0f64..3.0, seed in prop::collection::vec(-1.0f64..1.0, 5)) {
        let sys = SystemModel::two_level(5.0, pauli::X).unwrap();
        let bath = single_mode_squeezed(1.0, 5.0, r, 0.3, rate).unwrap();
        let basis = Arc::new(FockBasis::new(TruncationScheme::Rectangular(vec![3])).unwrap());
        let ctx = Context::new(&sys, &bath, basis.clone()).unwrap();
        let rho = random_density(basis, &seed);
        let d = pme_rhs(&ctx, t, &rho).unwrap();
        prop_assert!(d.trace().norm() < 1e-12);
        prop_assert!(d.hermiticity_defect() < 1e-12);
        let h = hme_rhs(&ctx, t, &rho).unwrap();
        prop_assert!(h.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn configs_round_trip(gamma in 0.0f64..2.0, r in 0.0f64..2.0, phi in -3.0f64..3.0, rate in 0.01f64..5.0, nmax in 0u32..40) {
        let cfg = parse_config(&two_level_config("hme", gamma, r, phi, rate, nmax)).unwrap();
        let canon = cfg.to_canonical();
        prop_assert_eq!(parse_config(&canon).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn density_methods_keep_trace_and_positivity(r in 0.0f64..1.5, phi in 0.0f64..6.3, rate in 0.3f64..3.0, pme in any::<bool>()) {
        let method = if pme { "pme" } else { "hme" };
        let out = execute(&parse_config(&two_level_config(method, 1.0, r, phi, rate, 8)).unwrap()).unwrap().mean().unwrap();
        for i in 0..out.len() {
            prop_assert!((out.trace(i) - 1.0).norm() < 1e-9);
            let (a, b) = (out.entry(i, 0, 0).re, out.entry(i, 1, 1).re);
            // positivity of a 2×2 Hermitian matrix, up to truncation error
            prop_assert!(a > -1e-3 && b > -1e-3);
            prop_assert!(a * b - out.entry(i, 0, 1).norm_sqr() > -1e-3);
        }
    }

    #[test]
    fn normalized_trajectories_have_unit_trace(r in 0.0f64..1.5, rate in 0.3f64..3.0, psse in any::<bool>()) {
        let method = if psse { "psse-nonlinear" } else { "hops-nonlinear" };
        let out = execute(&parse_config(&two_level_config(method, 1.0, r, 0.0, rate, 6)).unwrap()).unwrap();
        let mean = out.mean().unwrap();
        for i in 0..mean.len() {
            prop_assert!((mean.trace(i) - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn ensembles_are_seed_deterministic(seed in 0u64..1000) {
        let mut v: serde_json::Value = serde_json::from_str(&two_level_config("hops-nonlinear", 1.0, 1.0, 0.0, 1.0, 4)).unwrap();
        v["seed"] = json!(seed);
        let cfg = parse_config(&v.to_string()).unwrap();
        let a = execute(&cfg).unwrap().mean().unwrap();
        let b = execute(&cfg).unwrap().mean().unwrap();
        prop_assert_eq!(a.data, b.data);
    }
}
