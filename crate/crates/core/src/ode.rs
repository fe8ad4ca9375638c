//! Classical fourth-order Runge–Kutta on complex state vectors.

use crate::C64;

/// Where inside the step a right-hand side evaluation happens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Start,
    Mid,
    End,
}

/// One RK4 step for small fixed-size systems.
pub fn rk4_step_array<const N: usize>(
    y: &[C64; N],
    h: f64,
    mut f: impl FnMut(Stage, &[C64; N]) -> [C64; N],
) -> [C64; N] {
    let shift = |y: &[C64; N], k: &[C64; N], s: f64| -> [C64; N] { std::array::from_fn(|i| y[i] + k[i] * s) };
    let k1 = f(Stage::Start, y);
    let k2 = f(Stage::Mid, &shift(y, &k1, 0.5 * h));
    let k3 = f(Stage::Mid, &shift(y, &k2, 0.5 * h));
    let k4 = f(Stage::End, &shift(y, &k3, h));
    std::array::from_fn(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0))
}

/// Reusable scratch space for in-place RK4 on `n`-vectors.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }

    pub fn len(&self) -> usize {
        self.tmp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tmp.is_empty()
    }

    /// Advances `y` by `h`; `f(stage, y, dy)` must overwrite `dy`.
    pub fn step(&mut self, y: &mut [C64], h: f64, mut f: impl FnMut(Stage, &[C64], &mut [C64])) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;

        f(Stage::Start, y, k1);
        axpy_into(tmp, y, k1, 0.5 * h);
        f(Stage::Mid, tmp, k2);
        axpy_into(tmp, y, k2, 0.5 * h);
        f(Stage::Mid, tmp, k3);
        axpy_into(tmp, y, k3, h);
        f(Stage::End, tmp, k4);

        let w = h / 6.0;
        for i in 0..y.len() {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
    }
}

#[inline]
fn axpy_into(out: &mut [C64], y: &[C64], k: &[C64], s: f64) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(k) {
        *o = a + b * s;
    }
}

/// Cubic Hermite value at the midpoint of `[t0, t0 + h]`.
#[inline]
pub fn hermite_mid(y0: C64, y1: C64, f0: C64, f1: C64, h: f64) -> C64 {
    (y0 + y1) * 0.5 + (f0 - f1) * (h / 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_is_fourth_order() {
        let lam = C64::new(-0.3, 2.0);
        let exact = (lam * 1.0).exp();
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = vec![C64::new(1.0, 0.0)];
            let mut rk = Rk4::new(1);
            for _ in 0..n {
                rk.step(&mut y, h, |_, y, dy| dy[0] = lam * y[0]);
            }
            (y[0] - exact).norm()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn array_and_vector_steppers_agree() {
        let f = |y: &[C64; 2]| [C64::new(0.0, 1.0) * y[1], y[0] * y[0] - y[1]];
        let y0 = [C64::new(0.2, 0.1), C64::new(-0.4, 0.3)];
        let a = rk4_step_array(&y0, 0.1, |_, y| f(y));
        let mut v = y0.to_vec();
        Rk4::new(2).step(&mut v, 0.1, |_, y, dy| {
            let r = f(&[y[0], y[1]]);
            dy.copy_from_slice(&r);
        });
        assert_eq!(a.to_vec(), v);
    }

    #[test]
    fn hermite_mid_is_exact_for_cubics() {
        let p = |t: f64| C64::new(t * t * t - 2.0 * t, 0.5 * t * t);
        let dp = |t: f64| C64::new(3.0 * t * t - 2.0, t);
        let (t0, h) = (0.7, 0.3);
        let m = hermite_mid(p(t0), p(t0 + h), dp(t0), dp(t0 + h), h);
        assert!((m - p(t0 + 0.5 * h)).norm() < 1e-14);
    }
}
