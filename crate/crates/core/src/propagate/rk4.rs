use crate::{Result, C64};

/// Reusable stage buffers for the classical fourth-order Runge–Kutta method.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Rk4 { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advance `y` by one step of size `h`. The drift is called with the stage
    /// offset in half steps (0, 1, 1, 2) relative to the start of the step.
    pub fn step<F>(&mut self, mut f: F, y: &mut [C64], h: f64) -> Result<()>
    where
        F: FnMut(usize, &[C64], &mut [C64]) -> Result<()>,
    {
        let hh = 0.5 * h;
        f(0, y, &mut self.k1)?;
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *t = y + k * hh;
        }
        f(1, &self.tmp, &mut self.k2)?;
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *t = y + k * hh;
        }
        f(1, &self.tmp, &mut self.k3)?;
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *t = y + k * h;
        }
        f(2, &self.tmp, &mut self.k4)?;
        let h6 = h / 6.0;
        for (i, y) in y.iter_mut().enumerate() {
            *y += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * h6;
        }
        Ok(())
    }
}

/// One classical RK4 step of `dy/dt = f(t, y)`.
pub fn rk4_step(mut f: impl FnMut(f64, &[C64], &mut [C64]), t: f64, h: f64, y: &[C64]) -> Vec<C64> {
    let mut out = y.to_vec();
    let mut rk = Rk4::new(y.len());
    rk.step(
        |half, y, dy| {
            f(t + half as f64 * 0.5 * h, y, dy);
            Ok(())
        },
        &mut out,
        h,
    )
    .expect("infallible drift");
    out
}
