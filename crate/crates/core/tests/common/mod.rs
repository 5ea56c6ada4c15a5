#![allow(dead_code)]

use wavefront_core::energy::{Grid, Profile};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Speed of the tilted cubic wave, sqrt(2)(1/2 - beta).
pub fn exact_speed(beta: f64) -> f64 {
    SQRT2 * (0.5 - beta)
}

/// Exact tilted-cubic profile 1/(1 + e^{t/sqrt 2}), from 1 at -inf to 0 at +inf.
pub fn nagumo(grid: Grid) -> Profile {
    Profile::from_fn(grid, 1, vec![1.0], vec![0.0], |t| vec![1.0 / (1.0 + (t / SQRT2).exp())]).unwrap()
}

pub fn window(n: usize) -> Grid {
    Grid::new(-40.0, 40.0, n).unwrap()
}

/// Septic smoothstep from `a` to `b` across [-w, w], exactly flat outside.
pub fn smooth_front(grid: Grid, a: &[f64], b: &[f64], w: f64) -> Profile {
    let k = a.len();
    Profile::from_fn(grid, k, a.to_vec(), b.to_vec(), |t| {
        let x = ((t + w) / (2.0 * w)).clamp(0.0, 1.0);
        let s = x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3));
        (0..k).map(|j| a[j] + s * (b[j] - a[j])).collect()
    })
    .unwrap()
}
