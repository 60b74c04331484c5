//! Time series of reduced density matrices on the stored-point grid.

use crate::bcf::pauli;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries {
    pub times: Vec<f64>,
    pub dim: usize,
    /// Row-major `dim × dim` matrices, one per stored time.
    pub data: Vec<C64>,
}

impl DensitySeries {
    pub fn zeros(times: Vec<f64>, dim: usize) -> Self {
        let n = times.len() * dim * dim;
        DensitySeries { times, dim, data: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn rho(&self, i: usize) -> &[C64] {
        let s = self.dim * self.dim;
        &self.data[i * s..(i + 1) * s]
    }

    pub fn rho_mut(&mut self, i: usize) -> &mut [C64] {
        let s = self.dim * self.dim;
        &mut self.data[i * s..(i + 1) * s]
    }

    pub fn entry(&self, i: usize, a: usize, b: usize) -> C64 {
        self.rho(i)[a * self.dim + b]
    }

    pub fn trace(&self, i: usize) -> C64 {
        (0..self.dim).map(|a| self.entry(i, a, a)).sum()
    }

    /// Checks that two series live on the same grid with the same dimension.
    pub fn check_compatible(&self, other: &DensitySeries) -> Result<()> {
        if self.dim != other.dim || self.times.len() != other.times.len() {
            return Err(Error::Dimension("density series differ in grid or dimension".into()));
        }
        if self.times.iter().zip(&other.times).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + a.abs())) {
            return Err(Error::Dimension("density series use different stored times".into()));
        }
        Ok(())
    }

    /// Largest entrywise |ρ - ρ'| over all times.
    pub fn max_abs_diff(&self, other: &DensitySeries) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// RMS over stored times of the Frobenius distance.
    pub fn rms_diff(&self, other: &DensitySeries) -> Result<f64> {
        self.check_compatible(other)?;
        let s = self.dim * self.dim;
        let mut acc = 0.0;
        for i in 0..self.len() {
            let d2: f64 = (0..s).map(|e| (self.data[i * s + e] - other.data[i * s + e]).norm_sqr()).sum();
            acc += d2;
        }
        Ok((acc / self.len() as f64).sqrt())
    }
}

/// `⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩` and the rotating-frame components
/// `σ̃_x = ⟨σ_+⟩e^{-iω0t} + c.c.`, `σ̃_y = -i⟨σ_+⟩e^{-iω0t} + c.c.` of a two-level density matrix.
pub fn bloch_row(rho: &[C64], t: f64, omega0: f64) -> [f64; 5] {
    let tr = |m: [[C64; 2]; 2]| -> C64 {
        let f = pauli::flat(m);
        (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| f[a * 2 + b] * rho[b * 2 + a]).sum()
    };
    let sp = tr(pauli::PLUS) * crate::bcf::cis(-omega0 * t);
    [
        tr(pauli::X).re,
        tr(pauli::Y).re,
        tr(pauli::Z).re,
        2.0 * sp.re,
        2.0 * (C64::new(0.0, -1.0) * sp).re,
    ]
}

pub const BLOCH_COLUMNS: [&str; 5] = ["sx", "sy", "sz", "sx_rot", "sy_rot"];

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn excited_state_bloch() {
        let rho = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let b = bloch_row(&rho, 0.0, 5.0);
        assert_eq!(&b[..3], &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn benchmark_initial_state_bloch() {
        // ψ = (|e⟩ + e^{-iπ/4}|g⟩)/√2, ρ_eg = ψ_e ψ_g* = e^{iπ/4}/2
        let q = std::f64::consts::FRAC_PI_4;
        let psi = [c(1.0, 0.0) / 2f64.sqrt(), c(q.cos(), -q.sin()) / 2f64.sqrt()];
        let rho: Vec<C64> = (0..2).flat_map(|a| (0..2).map(move |b| psi[a] * psi[b].conj())).collect();
        let b = bloch_row(&rho, 0.0, 5.0);
        let h = 0.5f64.sqrt();
        assert!((b[0] - h).abs() < 1e-15);
        assert!((b[1] + h).abs() < 1e-15);
        assert!(b[2].abs() < 1e-15);
        // rotating frame coincides with the lab frame at t = 0
        assert!((b[3] - b[0]).abs() < 1e-15 && (b[4] - b[1]).abs() < 1e-15);
    }

    #[test]
    fn rms_of_constant_offset() {
        let times = vec![0.0, 1.0, 2.0];
        let a = DensitySeries::zeros(times.clone(), 2);
        let mut b = DensitySeries::zeros(times, 2);
        for i in 0..3 {
            b.rho_mut(i)[1] = c(0.3, 0.4);
        }
        assert!((a.rms_diff(&b).unwrap() - 0.5).abs() < 1e-15);
        assert!((a.max_abs_diff(&b).unwrap() - 0.5).abs() < 1e-15);
    }
}
