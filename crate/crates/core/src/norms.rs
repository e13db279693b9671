//! Littlewood–Paley bands, Besov norms, weighted local smoothing, Strichartz norms,
//! the discrete V^p variation norm and the band-wise smallness functional `J`.
//!
//! Bands are `λ = bʲ`. Band `j` uses the multiplier `φ(log_b|ξ| − j)` where `φ` is a
//! C^∞ bump on `[−1, 1]` with `Σⱼ φ(s − j) = 1`, so band `λ` lives on
//! `[λ/b, λb]` and the bands form an exact partition of unity on `ξ ≠ 0`.
//!
//! Strichartz-type weights follow the negative convention `λ^{−1/6}‖u_λ‖_{L⁶}`
//! that matches the critical space Ḃ^{−1/6,2}_∞.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{airy_propagate, Trajectory};
use crate::grid::{derivative, forward_transform, inverse_transform, weighted_sobolev_norm, Field, GridSpec};
use crate::weights::gamma0_d1;

/// C^∞ transition on `[0, 1]` with `h(s) + h(1 − s) = 1`.
fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// The band bump in logarithmic frequency.
fn bump(s: f64) -> f64 {
    if (0.0..=1.0).contains(&s) {
        (FRAC_PI_2 * smooth_step(s)).cos().powi(2)
    } else if (-1.0..0.0).contains(&s) {
        (FRAC_PI_2 * smooth_step(1.0 + s)).sin().powi(2)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub lambda: f64,
    /// Lumped low-frequency band `[0, b]` of the inhomogeneous decomposition.
    pub low: bool,
    multiplier: Vec<f64>,
    /// Multiplier is identically 1 (single-band decomposition): projection is exact.
    identity: bool,
}

impl Band {
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DyadicDecomposition {
    grid: GridSpec,
    base: f64,
    homogeneous: bool,
    bands: Vec<Band>,
}

impl DyadicDecomposition {
    /// Bands meeting the resolved range `[2π/L, ξ_Nyquist]`.
    pub fn new(grid: GridSpec, base: f64, homogeneous: bool) -> Result<Self> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::param("dyadic_base", format!("{base} must exceed 1")));
        }
        let kmin = 2.0 * std::f64::consts::PI / grid.length();
        let kmax = grid.nyquist();
        let lb = base.ln();
        let log_b = |xi: f64| xi.abs().ln() / lb;
        let mut bands = Vec::new();
        let j_hi = (log_b(kmax) + 1.0).ceil() as i32;
        let j_lo = if homogeneous { (log_b(kmin) - 1.0).floor() as i32 } else { 0 };
        for j in j_lo..=j_hi {
            let lambda = base.powi(j);
            if lambda / base >= kmax || lambda * base <= kmin {
                continue;
            }
            let low = !homogeneous && j == 0;
            let multiplier = (0..grid.n())
                .map(|k| {
                    let xi = grid.wavenumber(k).abs();
                    if xi == 0.0 {
                        return if low { 1.0 } else { 0.0 };
                    }
                    let s = log_b(xi) - j as f64;
                    if low && s <= 0.0 {
                        1.0
                    } else {
                        bump(s)
                    }
                })
                .collect();
            bands.push(Band { lambda, low, multiplier, identity: false });
        }
        Ok(DyadicDecomposition { grid, base, homogeneous, bands })
    }

    /// A degenerate decomposition with one band at `lambda` whose multiplier is 1.
    pub fn single_band(grid: GridSpec, lambda: f64) -> Self {
        DyadicDecomposition {
            grid,
            base: f64::INFINITY,
            homogeneous: true,
            bands: vec![Band { lambda, low: false, multiplier: vec![1.0; grid.n()], identity: true }],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.lambda).collect()
    }

    fn band(&self, lambda: f64) -> Result<&Band> {
        self.bands
            .iter()
            .find(|b| (b.lambda - lambda).abs() <= 1e-9 * lambda)
            .ok_or_else(|| Error::param("lambda", format!("{lambda} is not a resolved band of this decomposition")))
    }

    fn apply(&self, f: &Field, band: &Band) -> Field {
        if band.identity {
            return f.clone();
        }
        let m = &band.multiplier;
        inverse_transform(&forward_transform(f).multiply(|_, k| Complex64::new(m[k], 0.0)))
    }

    /// All band projections of `f`, in band order.
    pub fn split(&self, f: &Field) -> Result<Vec<Field>> {
        self.grid.check_same(f.grid())?;
        let fh = forward_transform(f);
        Ok(self
            .bands
            .iter()
            .map(|b| {
                if b.identity {
                    f.clone()
                } else {
                    inverse_transform(&fh.multiply(|_, k| Complex64::new(b.multiplier[k], 0.0)))
                }
            })
            .collect())
    }
}

/// `P_λ f`.
pub fn lp_project(f: &Field, dec: &DyadicDecomposition, lambda: f64) -> Result<Field> {
    dec.grid.check_same(f.grid())?;
    Ok(dec.apply(f, dec.band(lambda)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandValue {
    pub lambda: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub norm_name: String,
    pub parameters: serde_json::Value,
    pub value: f64,
    pub per_band: Vec<BandValue>,
}

fn lp_norm(f: &Field, p: f64) -> f64 {
    f.norm_lp(p)
}

fn lq_sum(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        values.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

fn check_index(name: &'static str, v: f64) -> Result<()> {
    if v >= 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} must be ≥ 1 (∞ allowed)")))
    }
}

/// `‖ω(λ) λˢ ‖f_λ‖_{L^p}‖_{ℓ^q}`; the low band of an inhomogeneous decomposition has weight 1.
pub fn besov_report(
    f: &Field,
    s: f64,
    p: f64,
    q: f64,
    dec: &DyadicDecomposition,
    omega: Option<&dyn Fn(f64) -> f64>,
) -> Result<NormReport> {
    check_index("p", p)?;
    check_index("q", q)?;
    let parts = dec.split(f)?;
    let per_band: Vec<BandValue> = dec
        .bands
        .iter()
        .zip(&parts)
        .map(|(b, fb)| {
            let w = if b.low { 1.0 } else { b.lambda.powf(s) };
            let om = omega.map_or(1.0, |o| o(b.lambda));
            BandValue { lambda: b.lambda, value: om * w * lp_norm(fb, p) }
        })
        .collect();
    let value = lq_sum(per_band.iter().map(|b| b.value), q);
    Ok(NormReport {
        norm_name: if dec.homogeneous { "besov_homogeneous" } else { "besov" }.into(),
        parameters: serde_json::json!({
            "s": s, "p": fmt_index(p), "q": fmt_index(q), "base": fmt_index(dec.base), "weighted": omega.is_some()
        }),
        value,
        per_band,
    })
}

fn fmt_index(v: f64) -> serde_json::Value {
    if v.is_infinite() {
        serde_json::Value::String("inf".into())
    } else {
        serde_json::json!(v)
    }
}

pub fn besov_norm(f: &Field, s: f64, p: f64, q: f64, dec: &DyadicDecomposition) -> Result<f64> {
    Ok(besov_report(f, s, p, q, dec, None)?.value)
}

/// `sup_λ λ^{−1/6}‖f_λ‖_{L²}`, the Ḃ^{−1/6,2}_∞ norm.
pub fn critical_besov(f: &Field, dec: &DyadicDecomposition) -> Result<f64> {
    besov_norm(f, -1.0 / 6.0, 2.0, f64::INFINITY, dec)
}

/// Trapezoid rule over the trajectory's (possibly non-uniform) times.
fn time_integral(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

fn gamma_prime_at(grid: &GridSpec, y: f64, epsilon: f64) -> Field {
    Field::from_fn(*grid, |x| gamma0_d1(grid.wrap(x - y), epsilon)).expect("γ₀′ is finite")
}

/// `∫∫ γ₀′(x − y(t)) (u² + uₓ²) dx dt` for `s = 0`; for other `s` the time integral of
/// `‖⟨D⟩^{s+1}u‖²` weighted by `γ₀′(x − y(t))`.
pub fn local_smoothing_integral(traj: &Trajectory, path: &[f64], s: f64, epsilon: f64) -> Result<f64> {
    if path.len() != traj.len() {
        return Err(Error::param("path", format!("{} samples for {} trajectory times", path.len(), traj.len())));
    }
    let grid = *traj.grid();
    let mut slice = Vec::with_capacity(traj.len());
    for (u, &y) in traj.states().iter().zip(path) {
        let gp = gamma_prime_at(&grid, y, epsilon);
        let v = if s == 0.0 {
            let ux = derivative(u, 1)?;
            grid.dx() * (0..grid.n()).map(|i| gp.values()[i] * (u.values()[i].powi(2) + ux.values()[i].powi(2))).sum::<f64>()
        } else {
            weighted_sobolev_norm(u, s + 1.0, &gp.map(f64::sqrt))?.powi(2)
        };
        slice.push(v);
    }
    Ok(time_integral(traj.times(), &slice))
}

pub fn local_smoothing_norm(traj: &Trajectory, path: &[f64], s: f64, epsilon: f64) -> Result<f64> {
    Ok(local_smoothing_integral(traj, path, s, epsilon)?.sqrt())
}

pub fn strichartz_admissible(p: f64, q: f64) -> bool {
    let inv = |v: f64| if v.is_infinite() { 0.0 } else { 1.0 / v };
    (2.0 * inv(p) + inv(q) - 0.5).abs() < 1e-12
}

/// `‖u‖_{L^p_t L^q_x}` over the trajectory's time span.
pub fn strichartz_norm(traj: &Trajectory, p: f64, q: f64, allow_inadmissible: bool) -> Result<f64> {
    if !allow_inadmissible && !strichartz_admissible(p, q) {
        return Err(Error::param("(p, q)", format!("({p}, {q}) is not Strichartz admissible (2/p + 1/q = 1/2)")));
    }
    check_index("p", p)?;
    check_index("q", q)?;
    let slices: Vec<f64> = traj.states().iter().map(|u| lp_norm(u, q)).collect();
    Ok(time_lp(traj.times(), &slices, p))
}

fn time_lp(times: &[f64], slices: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        slices.iter().copied().fold(0.0, f64::max)
    } else {
        let pw: Vec<f64> = slices.iter().map(|v| v.powf(p)).collect();
        time_integral(times, &pw).powf(1.0 / p)
    }
}

/// `sup over sub-partitions (Σ d(t_{k−1}, t_k)^p)^{1/p}` for `n` samples with metric `dist`,
/// by dynamic programming: `best[i]` is the largest sum over chains ending at `i`.
pub fn p_variation_by(n: usize, dist: impl Fn(usize, usize) -> f64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("series", "empty"));
    }
    if !(1.0..=8.0).contains(&p) {
        return Err(Error::param("p", format!("{p} not in [1, 8]")));
    }
    let mut best = vec![0.0f64; n];
    for i in 1..n {
        let mut b = 0.0f64;
        for j in 0..i {
            b = b.max(best[j] + dist(j, i).powf(p));
        }
        best[i] = b;
    }
    Ok(best.iter().copied().fold(0.0, f64::max).powf(1.0 / p))
}

/// V^p norm of a scalar series; `to_zero` appends the value 0 at `t = ∞`.
pub fn p_variation(series: &[f64], p: f64, to_zero: bool) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::param("series", "empty"));
    }
    let mut s = series.to_vec();
    if to_zero {
        s.push(0.0);
    }
    p_variation_by(s.len(), |i, j| (s[j] - s[i]).abs(), p)
}

/// V^p norm of a sequence of fields in the L² metric.
pub fn p_variation_fields(series: &[Field], p: f64, to_zero: bool) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::param("series", "empty"));
    }
    for f in series {
        series[0].grid().check_same(f.grid())?;
    }
    let zero = Field::zeros(*series[0].grid());
    let at = |i: usize| if i < series.len() { &series[i] } else { &zero };
    let n = series.len() + usize::from(to_zero);
    p_variation_by(n, |i, j| at(j).sub(at(i)).expect("same grid").norm_l2(), p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFamily {
    /// Straight paths `y = σt`.
    pub slopes: Vec<f64>,
    /// Add the per-band greedy path.
    pub greedy: bool,
}

impl Default for PathFamily {
    fn default() -> Self {
        PathFamily { slopes: (0..21).map(|i| 0.9 + 0.01 * i as f64).collect(), greedy: true }
    }
}

impl PathFamily {
    pub fn straight_only(slope: f64) -> Self {
        PathFamily { slopes: vec![slope], greedy: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JBand {
    pub lambda: f64,
    /// `‖v_λ‖_{L⁶_I L⁶}`
    pub strichartz: f64,
    /// `λ^{1/12}‖v_λ‖_{L⁴_I L^∞}`
    pub maximal: f64,
    /// `sup_y λ^{−1/6}∫_I∫γ₀′(x − y(t))(v_λ² + ∂ₓv_λ²)`
    pub smoothing: f64,
    /// Slope of the maximizing straight path, or `None` for the greedy path.
    pub best_slope: Option<f64>,
}

impl JBand {
    pub fn total(&self) -> f64 {
        self.strichartz + self.maximal + self.smoothing
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JReport {
    pub t_start: f64,
    pub t_end: f64,
    pub value: f64,
    pub bands: Vec<JBand>,
}

/// Path that follows the band's local-energy peak with slope clipped to `[0.9, 1.1]`, `y(t₀) = 0`.
fn greedy_path(times: &[f64], density: &[Field]) -> Vec<f64> {
    let grid = *density[0].grid();
    let mut y = vec![0.0; times.len()];
    for k in 1..times.len() {
        let d = &density[k - 1];
        let (imax, _) = d.values().iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        let dt = times[k] - times[k - 1];
        let slope = (grid.wrap(grid.x(imax) - y[k - 1]) / dt).clamp(0.9, 1.1);
        y[k] = y[k - 1] + slope * dt;
    }
    y
}

/// `J_I(v)` with `I = [t_start, end of trajectory]`. Paths start at `y = 0` at the
/// trajectory's first time, so the path family does not depend on `t_start`.
pub fn j_functional(
    traj: &Trajectory,
    t_start: f64,
    dec: &DyadicDecomposition,
    family: &PathFamily,
    epsilon: f64,
) -> Result<JReport> {
    let grid = *traj.grid();
    dec.grid.check_same(&grid)?;
    let t0 = traj.times()[0];
    let first = traj.times().iter().position(|&t| t >= t_start - 1e-12).unwrap_or(traj.len());
    let times = traj.times();
    let window = &times[first..];
    let mut out = Vec::with_capacity(dec.bands.len());
    let parts: Vec<Vec<Field>> = traj.states().iter().map(|u| dec.split(u)).collect::<Result<_>>()?;
    for (bi, band) in dec.bands.iter().enumerate() {
        let lam = band.lambda;
        let vb: Vec<&Field> = parts.iter().map(|p| &p[bi]).collect();
        let density: Vec<Field> = vb
            .iter()
            .map(|v| {
                let vx = derivative(v, 1).expect("order 1");
                v.zip_map(&vx, |a, b| a * a + b * b).expect("same grid")
            })
            .collect();
        let (strichartz, maximal) = if window.len() < 2 {
            (0.0, 0.0)
        } else {
            let l6: Vec<f64> = vb[first..].iter().map(|v| v.norm_lp(6.0)).collect();
            let linf: Vec<f64> = vb[first..].iter().map(|v| v.max_abs()).collect();
            (time_lp(window, &l6, 6.0), lam.powf(0.25 - 1.0 / 6.0) * time_lp(window, &linf, 4.0))
        };
        let smoothing_along = |path: &[f64]| -> f64 {
            if window.len() < 2 {
                return 0.0;
            }
            let slices: Vec<f64> = (first..times.len())
                .map(|k| {
                    let gp = gamma_prime_at(&grid, path[k], epsilon);
                    grid.dx() * gp.values().iter().zip(density[k].values()).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            lam.powf(-1.0 / 6.0) * time_integral(window, &slices)
        };
        let mut smoothing = 0.0;
        let mut best_slope = None;
        for &sl in &family.slopes {
            let path: Vec<f64> = times.iter().map(|&t| sl * (t - t0)).collect();
            let v = smoothing_along(&path);
            if best_slope.is_none() || v > smoothing {
                smoothing = v;
                best_slope = Some(sl);
            }
        }
        if family.greedy {
            let v = smoothing_along(&greedy_path(times, &density));
            if v > smoothing {
                smoothing = v;
                best_slope = None;
            }
        }
        out.push(JBand { lambda: lam, strichartz, maximal, smoothing, best_slope });
    }
    let value = out.iter().map(JBand::total).fold(0.0, f64::max);
    Ok(JReport { t_start, t_end: traj.final_time(), value, bands: out })
}

/// Computable stand-in for the X^s norm:
/// `sup_λ λˢ(‖u_λ‖_{L^∞L²} + ‖u_λ‖_{local smoothing} + ‖e^{t∂³}u_λ(t)‖_{V²})`.
pub fn xs_surrogate(traj: &Trajectory, path: &[f64], s: f64, dec: &DyadicDecomposition, epsilon: f64) -> Result<NormReport> {
    let t0 = traj.times()[0];
    let mut per_band = Vec::with_capacity(dec.bands.len());
    let parts: Vec<Vec<Field>> = traj.states().iter().map(|u| dec.split(u)).collect::<Result<_>>()?;
    for (bi, band) in dec.bands.iter().enumerate() {
        let states: Vec<Field> = parts.iter().map(|p| p[bi].clone()).collect();
        let sup = states.iter().map(Field::norm_l2).fold(0.0, f64::max);
        let pulled: Vec<Field> = states.iter().zip(traj.times()).map(|(u, &t)| airy_propagate(u, -(t - t0))).collect();
        let var = p_variation_fields(&pulled, 2.0, false)?;
        let band_traj = Trajectory::from_states(traj.times().to_vec(), states, "band", traj.meta().dt)?;
        let ls = local_smoothing_norm(&band_traj, path, 0.0, epsilon)?;
        let w = if band.low { 1.0 } else { band.lambda.powf(s) };
        per_band.push(BandValue { lambda: band.lambda, value: w * (sup + ls + var) });
    }
    Ok(NormReport {
        norm_name: "xs_surrogate".into(),
        parameters: serde_json::json!({ "s": s, "epsilon": epsilon, "base": fmt_index(dec.base) }),
        value: per_band.iter().map(|b| b.value).fold(0.0, f64::max),
        per_band,
    })
}
