//! Scattering states of the soliton remainder.
//!
//! Forward: pull the remainder back by the free flow, `e^{t∂ₓ³}w(t)`, and average the
//! pullbacks over a final window to get `z₀`. Backward: start from free radiation plus a
//! soliton at a large time `S`, run gKdV backward, and shoot on the terminal center so
//! the modulated center at `t = 0` lands on the requested `y₀`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{airy_propagate, gkdv_evolve_backward, mass, GkdvOptions, Sponge, Trajectory};
use crate::grid::{Field, GridSpec};
use crate::modulation::{decompose, CoupledRun, ModulationState};
use crate::norms::{critical_besov, DyadicDecomposition};
use crate::soliton::{mass_of, profile, SolitonParams};

pub const MIN_WINDOW_SNAPSHOTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub t: f64,
    pub l2: f64,
    pub besov: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterReport {
    #[serde(skip)]
    pub z0: Option<Field>,
    pub residual_curve: Vec<ResidualPoint>,
    pub converged: bool,
    pub norm_used: String,
    pub window: (f64, f64),
    pub window_snapshots: usize,
    /// Residual curve non-increasing (in the norm used) over the last quarter of the run.
    pub tail_monotone: bool,
}

impl ScatterReport {
    pub fn z0(&self) -> &Field {
        self.z0.as_ref().expect("set by forward_scatter")
    }

    /// Residual at the snapshot closest to `t`, in the norm used.
    pub fn residual_at(&self, t: f64) -> f64 {
        self.residual_curve
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .map(|p| p.besov)
            .unwrap_or(f64::NAN)
    }
}

/// Scattering state of a remainder trajectory using the final `window` fraction of it.
/// Residuals are `‖e^{t∂ₓ³}w(t) − z₀‖`, equal to `‖w(t) − e^{−t∂ₓ³}z₀‖` in both norms
/// since the free flow is a unimodular Fourier multiplier.
pub fn forward_scatter_trajectory(traj: &Trajectory, window: f64, dec: &DyadicDecomposition) -> Result<ScatterReport> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::param("window", format!("{window} must lie in (0, 1]")));
    }
    dec.grid().check_same(traj.grid())?;
    let times = traj.times();
    let (t0, t_end) = (times[0], traj.final_time());
    let t_start = t_end - window * (t_end - t0);
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t_start - 1e-9 * (1.0 + t_end.abs())).collect();
    if idx.len() < MIN_WINDOW_SNAPSHOTS {
        return Err(Error::param(
            "window",
            format!("window [{t_start}, {t_end}] holds {} snapshots, need ≥ {MIN_WINDOW_SNAPSHOTS}", idx.len()),
        ));
    }
    let pullbacks: Vec<Field> = traj.states().iter().zip(times).map(|(w, &t)| airy_propagate(w, -t)).collect();
    let grid = *traj.grid();
    let mut sum = vec![0.0; grid.n()];
    for &i in &idx {
        for (s, v) in sum.iter_mut().zip(pullbacks[i].values()) {
            *s += v;
        }
    }
    let z0 = Field::new(grid, sum.into_iter().map(|s| s / idx.len() as f64).collect())?;
    let residual_curve = pullbacks
        .iter()
        .zip(times)
        .map(|(p, &t)| {
            let d = p.sub(&z0)?;
            Ok(ResidualPoint { t, l2: d.norm_l2(), besov: critical_besov(&d, dec)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let first = residual_curve[0].besov;
    let last = residual_curve.last().expect("nonempty").besov;
    let converged = last < 0.1 * first;
    let quarter = t_end - 0.25 * (t_end - t0);
    let tail: Vec<f64> = residual_curve.iter().filter(|p| p.t >= quarter).map(|p| p.besov).collect();
    let tail_monotone = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
    Ok(ScatterReport {
        z0: Some(z0),
        residual_curve,
        converged,
        norm_used: "besov_-1/6_2_inf".into(),
        window: (t_start, t_end),
        window_snapshots: idx.len(),
        tail_monotone,
    })
}

pub fn forward_scatter(run: &CoupledRun, window: f64, dec: &DyadicDecomposition) -> Result<ScatterReport> {
    forward_scatter_trajectory(&run.remainder_trajectory()?, window, dec)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseOptions {
    pub dt: f64,
    pub snapshot_stride: usize,
    pub sponge: Option<Sponge>,
    /// Shooting stops when `|y(0) − y₀|` is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial bracket half-width around the free-soliton guess `y₀ + c∞²S`.
    pub bracket: f64,
    /// Smallness threshold on `‖v₀‖` in Ḃ^{−1/6,2}_∞ (the theorem's δ is not constructive).
    pub delta: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        InverseOptions { dt: 1e-3, snapshot_stride: 1000, sponge: None, tol: 1e-6, max_iter: 40, bracket: 0.5, delta: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingStep {
    pub y_terminal: f64,
    pub y_at_zero: f64,
    pub c_at_zero: f64,
}

#[derive(Clone, Debug)]
pub struct InverseResult {
    pub psi0: Field,
    pub state0: ModulationState,
    pub horizon: f64,
    pub y_terminal: f64,
    /// Every shooting evaluation, in the order performed.
    pub log: Vec<ShootingStep>,
    /// `y(0)` is monotone in the terminal center across all sampled evaluations.
    pub monotone: bool,
    pub v0_besov: f64,
    /// `‖v₀‖² + ‖Q_{c∞}‖² − ‖Ψ(0)‖²`
    pub mass_defect: f64,
}

impl InverseResult {
    pub fn relative_mass_defect(&self) -> f64 {
        self.mass_defect.abs() / mass(&self.psi0)
    }
}

/// Backward-evolved `Ψ(0)` for terminal center `y_s`, and its modulated split.
fn shoot(radiation: &Field, c_inf: f64, y_s: f64, horizon: f64, opts: &InverseOptions) -> Result<(Field, ModulationState)> {
    let grid = *radiation.grid();
    let terminal = radiation.add(&profile(SolitonParams::new(c_inf, y_s)?, grid))?;
    let gopts = GkdvOptions { dt: opts.dt, snapshot_stride: opts.snapshot_stride, sponge: opts.sponge };
    let traj = gkdv_evolve_backward(&terminal, horizon, &gopts)?;
    let psi0 = traj.states()[0].clone();
    let guess = SolitonParams::new(c_inf, grid.wrap(y_s - c_inf * c_inf * horizon))?;
    let state = decompose(&psi0, Some(guess))?;
    Ok((psi0, state))
}

/// Solves for `Ψ` with `Ψ(S) = e^{−S∂ₓ³}v₀ + Q_{c∞,y^S}` and modulated center `y(0) = y₀`.
///
/// The terminal center is found by a bracketing secant (Illinois) iteration, which keeps
/// a sign-changing bracket at every step like bisection but needs far fewer backward solves.
pub fn inverse_wave(v0: &Field, c_inf: f64, y0: f64, horizon: f64, opts: &InverseOptions) -> Result<InverseResult> {
    let grid = *v0.grid();
    SolitonParams::new(c_inf, y0)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("S", format!("{horizon} must be positive")));
    }
    let dec = DyadicDecomposition::new(grid, 2.0, true)?;
    let v0_besov = critical_besov(v0, &dec)?;
    if v0_besov > opts.delta {
        return Err(Error::param("v0", format!("Ḃ^(-1/6,2)_∞ size {v0_besov:e} exceeds δ = {}", opts.delta)));
    }
    let radiation = airy_propagate(v0, horizon);
    let mut log = Vec::new();
    // unwrap y(0) relative to the target so the periodic image does not break monotonicity
    let eval = |y_s: f64, log: &mut Vec<ShootingStep>| -> Result<(f64, Field, ModulationState)> {
        let (psi0, st) = shoot(&radiation, c_inf, y_s, horizon, opts)?;
        let g = grid.wrap(st.y - y0);
        log.push(ShootingStep { y_terminal: y_s, y_at_zero: y0 + g, c_at_zero: st.c });
        Ok((g, psi0, st))
    };

    let guess = y0 + c_inf * c_inf * horizon;
    let mut best = eval(guess, &mut log)?;
    let mut best_y = guess;
    if best.0.abs() > opts.tol {
        // bracket: step away from the guess against the sign of the miss, widening as needed
        let mut half = opts.bracket.max(best.0.abs() * 2.0);
        let (mut a, mut fa) = (guess, best.0);
        let mut other = None;
        for _ in 0..6 {
            let b = guess - fa.signum() * half;
            let r = eval(b, &mut log)?;
            if r.0.signum() != fa.signum() || r.0.abs() <= opts.tol {
                other = Some((b, r));
                break;
            }
            a = b;
            fa = r.0;
            best = r;
            best_y = b;
            half *= 2.0;
        }
        let (mut b, rb) = other.ok_or_else(|| {
            let ys: Vec<f64> = log.iter().map(|s| s.y_at_zero).collect();
            Error::Bracketing {
                lo: ys.iter().cloned().fold(f64::INFINITY, f64::min),
                hi: ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                target: y0,
            }
        })?;
        let mut fb = rb.0;
        if fb.abs() <= opts.tol {
            best = rb;
            best_y = b;
        } else {
            let mut side = 0i8;
            let mut done = false;
            for _ in 0..opts.max_iter {
                let m = (a * fb - b * fa) / (fb - fa);
                let m = if m.is_finite() && (m - a) * (m - b) < 0.0 { m } else { 0.5 * (a + b) };
                let r = eval(m, &mut log)?;
                let fm = r.0;
                if fm.abs() <= opts.tol || (b - a).abs() <= 1e-3 * opts.tol {
                    best = r;
                    best_y = m;
                    done = fm.abs() <= opts.tol;
                    break;
                }
                if fm.signum() == fb.signum() {
                    b = m;
                    fb = fm;
                    if side == 1 {
                        fa *= 0.5;
                    }
                    side = 1;
                } else {
                    a = m;
                    fa = fm;
                    if side == -1 {
                        fb *= 0.5;
                    }
                    side = -1;
                }
            }
            if !done {
                return Err(Error::NoConvergence { iterations: opts.max_iter, residual: best.0.abs().min(fa.abs()).min(fb.abs()) });
            }
        }
    }

    let mut samples: Vec<(f64, f64)> = log.iter().map(|s| (s.y_terminal, s.y_at_zero)).collect();
    samples.sort_by(|p, q| p.0.total_cmp(&q.0));
    let monotone = samples.windows(2).all(|w| w[1].1 >= w[0].1) || samples.windows(2).all(|w| w[1].1 <= w[0].1);
    let (_, psi0, state0) = best;
    let mass_defect = mass(v0) + mass_of(c_inf) - mass(&psi0);
    Ok(InverseResult { psi0, state0, horizon, y_terminal: best_y, log, monotone, v0_besov, mass_defect })
}

#[derive(Clone, Debug)]
pub struct CauchyReport {
    pub horizons: Vec<f64>,
    pub results: Vec<InverseResult>,
    /// `‖Ψ_{S_{k+1}}(0) − Ψ_{S_k}(0)‖_{L²}` for consecutive horizons.
    pub successive_l2: Vec<f64>,
}

/// Runs `inverse_wave` for each horizon on its own thread.
pub fn inverse_cauchy(v0: &Field, c_inf: f64, y0: f64, horizons: &[f64], opts: &InverseOptions) -> Result<CauchyReport> {
    let results: Vec<Result<InverseResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = horizons.iter().map(|&h| s.spawn(move || inverse_wave(v0, c_inf, y0, h, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("inverse_wave worker panicked")).collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let successive_l2 = results
        .windows(2)
        .map(|w| Ok(w[1].psi0.sub(&w[0].psi0)?.norm_l2()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CauchyReport { horizons: horizons.to_vec(), results, successive_l2 })
}

/// Convenience: a grid long enough for a unit soliton to travel `horizon` and for
/// low-frequency radiation to spread behind it.
pub fn scattering_grid(horizon: f64) -> Result<GridSpec> {
    let length = (4.0 * horizon).max(80.0);
    let n = ((length / 0.15).log2().ceil() as u32).max(10);
    GridSpec::new(1usize << n, length)
}
