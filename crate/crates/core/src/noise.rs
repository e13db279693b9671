//! Seeded band-limited random perturbations.
//!
//! A field is `envelope(x) · Σ_k a_k cos(ξ_k x + φ_k)` with Gaussian amplitudes on the
//! modes `|ξ_k| ≤ kmax`, localized by a Gaussian envelope of width `width` around `center`.
//! The spectrum is that of the envelope convolved with a flat band, so it decays
//! like `e^{−(width·(|ξ|−kmax))²/4}` beyond the band.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{Field, GridSpec};

/// Unit-L²-norm smooth random field.
pub fn smooth_random_field(grid: GridSpec, rng: &mut impl Rng, kmax: f64, center: f64, width: f64) -> Field {
    let modes = ((kmax * grid.length() / (2.0 * std::f64::consts::PI)).floor() as usize).max(1);
    let coeffs: Vec<(f64, f64, f64)> = (0..=modes)
        .map(|m| {
            let xi = 2.0 * std::f64::consts::PI * m as f64 / grid.length();
            let a: f64 = StandardNormal.sample(rng);
            let phase = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            (xi, a, phase)
        })
        .collect();
    let values: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            let d = grid.wrap(x - center);
            let env = (-(d / width).powi(2)).exp();
            env * coeffs.iter().map(|&(xi, a, ph)| a * (xi * d + ph).cos()).sum::<f64>()
        })
        .collect();
    let f = Field::from_raw(grid, values);
    let norm = f.norm_l2();
    if norm > 0.0 {
        f.scale(1.0 / norm)
    } else {
        f
    }
}
