//! Time evolution: exact Airy propagation, the quartic gKdV flow, and the linearized
//! u/v flows (see [`linear`]).

pub mod linear;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, forward_transform, inverse_transform, Field, GridSpec};
use crate::integrator::{Etdrk4, Padded, SemiLinear};

pub use linear::{u_forcing, v_forcing, Source, 
    duality_relations_check, invariant_linv, u_flow_evolve, v_flow_evolve, Convention, DualityReport, ForcingSource,
    Frame, FreeSolitonPath, LinearFlowOptions, LinearRun, ModalForcing, ModulationPath, PathPoint,
};

/// Multiplicative damping `exp(−σ(x) dt)` on the outer `fraction` of the domain,
/// `σ = strength · r²` with `r` ramping 0 → 1 across the layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    pub fraction: f64,
    pub strength: f64,
}

impl Default for Sponge {
    fn default() -> Self {
        Sponge { fraction: 0.1, strength: 5.0 }
    }
}

impl Sponge {
    pub fn rate(&self, grid: &GridSpec, x: f64) -> f64 {
        let inner = (0.5 - self.fraction) * grid.length();
        let r = ((x.abs() - inner) / (self.fraction * grid.length())).clamp(0.0, 1.0);
        self.strength * r * r
    }

    pub(crate) fn factors(&self, grid: &GridSpec, dt: f64) -> Vec<f64> {
        grid.points().iter().map(|&x| (-self.rate(grid, x) * dt.abs()).exp()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub integrator: String,
    pub equation: String,
    pub grid: GridSpec,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub sponge: Option<Sponge>,
    /// What the `energy` column of the conserved log holds.
    pub energy_kind: String,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Field>,
    meta: TrajectoryMeta,
    conserved: Vec<Conserved>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Field>, meta: TrajectoryMeta, conserved: Vec<Conserved>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() || conserved.len() != states.len() {
            return Err(Error::param("trajectory", "times, states and conserved log must have equal nonzero length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        for s in &states {
            meta.grid.check_same(s.grid())?;
        }
        Ok(Trajectory { times, states, meta, conserved })
    }

    /// Trajectory of arbitrary states with mass and gKdV energy logged.
    pub fn from_states(times: Vec<f64>, states: Vec<Field>, integrator: &str, dt: f64) -> Result<Self> {
        let grid = *states.first().ok_or_else(|| Error::param("states", "empty"))?.grid();
        let conserved = times
            .iter()
            .zip(&states)
            .map(|(&t, s)| Conserved { t, mass: mass(s), energy: energy(s) })
            .collect();
        let meta = TrajectoryMeta {
            integrator: integrator.to_string(),
            equation: "samples".into(),
            grid,
            dt,
            snapshot_stride: 1,
            sponge: None,
            energy_kind: "gkdv_energy".into(),
        };
        Trajectory::new(times, states, meta, conserved)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn conserved(&self) -> &[Conserved] {
        &self.conserved
    }

    pub fn grid(&self) -> &GridSpec {
        &self.meta.grid
    }

    pub fn last(&self) -> &Field {
        self.states.last().expect("non-empty by construction")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty by construction")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Appends `other` shifted in time to start one sample spacing after `self` ends.
    pub fn concat(&self, other: &Trajectory) -> Result<Trajectory> {
        self.meta.grid.check_same(other.grid())?;
        let gap = if self.times.len() > 1 { self.times[1] - self.times[0] } else { 1.0 };
        let offset = self.final_time() + gap - other.times[0];
        let mut times = self.times.clone();
        let mut states = self.states.clone();
        let mut conserved = self.conserved.clone();
        for (i, &t) in other.times.iter().enumerate() {
            times.push(t + offset);
            states.push(other.states[i].clone());
            conserved.push(Conserved { t: t + offset, ..other.conserved[i] });
        }
        Trajectory::new(times, states, self.meta.clone(), conserved)
    }

    /// Sub-trajectory of samples with `t0 ≤ t ≤ t1`.
    pub fn window(&self, t0: f64, t1: f64) -> Result<Trajectory> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.times[i] >= t0 - 1e-12 && self.times[i] <= t1 + 1e-12).collect();
        if idx.is_empty() {
            return Err(Error::param("window", format!("no samples in [{t0}, {t1}]")));
        }
        Trajectory::new(
            idx.iter().map(|&i| self.times[i]).collect(),
            idx.iter().map(|&i| self.states[i].clone()).collect(),
            self.meta.clone(),
            idx.iter().map(|&i| self.conserved[i]).collect(),
        )
    }
}

/// `e^{−t∂ₓ³}`: multiplies `f̂(ξ)` by `e^{iξ³t}` (Nyquist mode left untouched).
pub fn airy_propagate(f: &Field, t: f64) -> Field {
    if t == 0.0 {
        return f.clone();
    }
    let nyq = f.grid().n() / 2;
    let s = forward_transform(f).multiply(|xi, k| {
        if k == nyq {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, xi * xi * xi * t)
        }
    });
    inverse_transform(&s)
}

pub fn mass(psi: &Field) -> f64 {
    psi.norm_l2().powi(2)
}

/// `E(ψ) = ∫ ½ψₓ² − ψ⁵/5`, with `∫ψ⁵` evaluated on a 4× refined interpolation grid so
/// it is exact for the band-limited interpolant.
pub fn energy(psi: &Field) -> f64 {
    let g = psi.grid();
    let d = derivative(psi, 1).expect("order 1 is valid");
    let kinetic = 0.5 * d.norm_l2().powi(2);
    let mut pad = Padded::new(g.n(), 4);
    let mut fine = vec![0.0; pad.fine_len()];
    pad.to_physical(forward_transform(psi).coefficients(), &mut fine);
    let h = g.length() / pad.fine_len() as f64;
    let quintic: f64 = h * fine.iter().map(|v| v.powi(5)).sum::<f64>();
    kinetic - quintic / 5.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkdvOptions {
    pub dt: f64,
    pub snapshot_stride: usize,
    pub sponge: Option<Sponge>,
}

impl Default for GkdvOptions {
    fn default() -> Self {
        GkdvOptions { dt: 1e-3, snapshot_stride: 100, sponge: None }
    }
}

struct GkdvRhs {
    pad: Padded,
    fine: Vec<f64>,
    prod: Vec<Complex64>,
    ik: Vec<Complex64>,
}

impl GkdvRhs {
    fn new(grid: &GridSpec) -> Self {
        let pad = Padded::new(grid.n(), 4);
        let m = pad.fine_len();
        GkdvRhs {
            pad,
            fine: vec![0.0; m],
            prod: vec![Complex64::default(); grid.n()],
            ik: odd_symbol(grid, |xi| Complex64::new(0.0, xi)),
        }
    }
}

impl SemiLinear for GkdvRhs {
    fn nonlinear(&mut self, _t: f64, u: &[Complex64], _aux: &[f64], du: &mut [Complex64], _daux: &mut [f64]) {
        self.pad.to_physical(u, &mut self.fine);
        for v in self.fine.iter_mut() {
            let s = *v * *v;
            *v = s * s;
        }
        self.pad.to_spectral(&self.fine, &mut self.prod);
        for k in 0..u.len() {
            du[k] = -self.ik[k] * self.prod[k];
        }
    }
}

/// Symbol of an odd-order operator with the Nyquist slot zeroed.
pub(crate) fn odd_symbol(grid: &GridSpec, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    let nyq = grid.n() / 2;
    (0..grid.n())
        .map(|k| if k == nyq { Complex64::default() } else { f(grid.wavenumber(k)) })
        .collect()
}

/// Number of steps and the step actually used to land exactly on `t_final`.
pub(crate) fn step_plan(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("{dt} must be positive")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::param("T", format!("{t_final} must be positive")));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, t_final / steps as f64))
}

pub(crate) fn spectral_of(f: &Field) -> Vec<Complex64> {
    forward_transform(f).coefficients().to_vec()
}

pub(crate) fn field_of(grid: GridSpec, uhat: &[Complex64]) -> Field {
    inverse_transform(&crate::grid::SpectralField::new(grid, uhat.to_vec()).expect("length matches"))
}

fn check_blowup(uhat: &[Complex64], grid: GridSpec, t: f64, last: &(f64, Field)) -> Result<()> {
    let bad = uhat.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())
        || uhat.iter().map(|c| c.norm()).sum::<f64>() / grid.n() as f64 > 1e8;
    if bad {
        Err(Error::BlowUp { t, last_t: last.0, last_state: Box::new(last.1.clone()) })
    } else {
        Ok(())
    }
}

/// Integrates `ψₜ + ∂ₓ(ψₓₓ + ψ⁴) = 0` forward to `t_final`.
pub fn gkdv_evolve(psi0: &Field, t_final: f64, opts: &GkdvOptions) -> Result<Trajectory> {
    gkdv_run(psi0, t_final, opts, 1.0)
}

/// Integrates the same equation backward from terminal data at time `t_final` to 0.
/// The returned trajectory is in increasing time, ending at the terminal data.
pub fn gkdv_evolve_backward(psi_t: &Field, t_final: f64, opts: &GkdvOptions) -> Result<Trajectory> {
    let tr = gkdv_run(psi_t, t_final, opts, -1.0)?;
    let n = tr.len();
    let times = (0..n).map(|i| t_final - tr.times[n - 1 - i]).collect::<Vec<_>>();
    let states = tr.states.iter().rev().cloned().collect();
    let conserved = tr
        .conserved
        .iter()
        .rev()
        .zip(&times)
        .map(|(c, &t)| Conserved { t, ..*c })
        .collect();
    Trajectory::new(times, states, tr.meta, conserved)
}

fn gkdv_run(psi0: &Field, t_final: f64, opts: &GkdvOptions, direction: f64) -> Result<Trajectory> {
    let grid = *psi0.grid();
    let (steps, h) = step_plan(t_final, opts.dt)?;
    let stride = opts.snapshot_stride.max(1);
    let linear = odd_symbol(&grid, |xi| Complex64::new(0.0, xi * xi * xi));
    let mut stepper = Etdrk4::new(&linear, direction * h);
    let mut rhs = GkdvRhs::new(&grid);
    let sponge = opts.sponge.map(|s| s.factors(&grid, h));
    let mut u = spectral_of(psi0);
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    let mut last = (0.0, psi0.clone());
    for step in 1..=steps {
        let t_prev = (step - 1) as f64 * h;
        stepper.step(&mut rhs, direction * t_prev, &mut u, &mut []);
        let t = step as f64 * h;
        if let Some(f) = &sponge {
            let damped = field_of(grid, &u).zip_map(&Field::from_raw(grid, f.clone()), |a, b| a * b)?;
            u = spectral_of(&damped);
        }
        check_blowup(&u, grid, direction * t, &last)?;
        if step % stride == 0 || step == steps {
            let state = field_of(grid, &u);
            if !state.is_finite() {
                return Err(Error::BlowUp { t: direction * t, last_t: last.0, last_state: Box::new(last.1) });
            }
            last = (direction * t, state.clone());
            times.push(t);
            states.push(state);
        }
    }
    let conserved = times
        .iter()
        .zip(&states)
        .map(|(&t, s)| Conserved { t: direction * t, mass: mass(s), energy: energy(s) })
        .collect();
    let meta = TrajectoryMeta {
        integrator: "etdrk4".into(),
        equation: if direction > 0.0 { "gkdv".into() } else { "gkdv_backward".into() },
        grid,
        dt: h,
        snapshot_stride: stride,
        sponge: opts.sponge,
        energy_kind: "gkdv_energy".into(),
    };
    Trajectory::new(times, states, meta, conserved)
}
