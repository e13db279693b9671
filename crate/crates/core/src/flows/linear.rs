//! Linearized flows around the soliton.
//!
//! Frozen frame (fixed `c`, `y`, unforced), selected by [`Convention`]:
//! - `Dual` (default): `uₜ + ∂ₓ𝓛u = 0`, `vₜ + 𝓛∂ₓv = 0`. Here `Q̃ + 2tQ′` solves the
//!   u-flow and `I_η(v) = −∫ηv²` is non-increasing.
//! - `Comoving`: `uₜ = ∂ₓ𝓛u`, `vₜ = 𝓛∂ₓv`, the linearization of gKdV in the frame
//!   moving with the soliton; it is the time reversal of `Dual`.
//!
//! Moving frame (prescribed path `c(t)`, `y(t)`, lab coordinates, physical sign):
//! - `uₜ + ∂ₓ(uₓₓ + 4Q³u) = αQ̃ + βQ′ + f`
//! - `vₜ + vₓₓₓ + 4Q³vₓ = αQ + βQ′`
//!
//! where α, β are re-evaluated at every stage so that `⟨u,Q⟩ = ⟨u,Q′⟩ = 0`
//! (respectively `⟨v,Q̃⟩ = ⟨v,Q′⟩ = 0`) is preserved exactly by the continuous flow.
//! Both flows are mutually dual: `d/dt⟨u, v⟩ = 0`; `∂ₓ` maps v-solutions to
//! u-solutions and `𝓛` maps u-solutions to v-solutions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{field_of, odd_symbol, spectral_of, step_plan, Conserved, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::grid::{derivative, inner_product, Field, GridSpec};
use crate::integrator::{Etdrk4, Padded, SemiLinear};
use crate::linop::LinearizedOperator;
use crate::soliton::{q_point, Profiles, SolitonParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Dual,
    Comoving,
}

impl Convention {
    fn sign(self) -> f64 {
        match self {
            Convention::Dual => 1.0,
            Convention::Comoving => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub c: f64,
    pub c_dot: f64,
    pub y: f64,
    pub y_dot: f64,
}

/// A prescribed modulation path `t ↦ (c, ċ, y, ẏ)`.
pub trait ModulationPath: Sync {
    fn at(&self, t: f64) -> PathPoint;
}

impl<F: Fn(f64) -> PathPoint + Sync> ModulationPath for F {
    fn at(&self, t: f64) -> PathPoint {
        self(t)
    }
}

/// Free soliton motion: constant `c`, `y = y0 + c²t`.
#[derive(Clone, Copy, Debug)]
pub struct FreeSolitonPath {
    pub c: f64,
    pub y0: f64,
}

impl ModulationPath for FreeSolitonPath {
    fn at(&self, t: f64) -> PathPoint {
        PathPoint { c: self.c, c_dot: 0.0, y: self.y0 + self.c * self.c * t, y_dot: self.c * self.c }
    }
}

pub type Source<'a> = &'a (dyn Fn(f64, &GridSpec) -> Field + Sync);

pub enum Frame<'a> {
    Frozen(SolitonParams),
    Moving { path: &'a dyn ModulationPath, source: Option<Source<'a>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFlowOptions {
    pub dt: f64,
    pub snapshot_stride: usize,
    pub convention: Convention,
}

impl Default for LinearFlowOptions {
    fn default() -> Self {
        LinearFlowOptions { dt: 1e-3, snapshot_stride: 100, convention: Convention::Dual }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingSource {
    /// `α` multiplies `Q̃`, `β` multiplies `Q′`.
    UProblem,
    /// `α` multiplies `Q`, `β` multiplies `Q′`.
    VProblem,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalForcing {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub source: ForcingSource,
}

#[derive(Clone, Debug)]
pub struct LinearRun {
    pub trajectory: Trajectory,
    /// One entry per time step (moving frame only).
    pub forcing: Vec<ModalForcing>,
    /// The two constrained inner products at every stored state.
    pub orthogonality: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Problem {
    U,
    V,
}

/// Closed-form α, β for the moving-frame u-problem.
pub fn u_forcing(u: &Field, pr: &Profiles, p: PathPoint, f: Option<&Field>) -> Result<(f64, f64)> {
    let c2 = p.c * p.c;
    let rate = p.c_dot / p.c;
    let drift = p.y_dot - c2;
    let (fq, fq1) = match f {
        Some(f) => (inner_product(f, &pr.q)?, inner_product(f, &pr.q1)?),
        None => (0.0, 0.0),
    };
    let alpha = (drift * inner_product(u, &pr.q1)? - rate * inner_product(u, &pr.tilde)? - fq)
        / inner_product(&pr.q, &pr.tilde)?;
    let beta = (drift * inner_product(u, &pr.q2)? + inner_product(u, &pr.l_of_q2())? - rate * inner_product(u, &pr.tilde1)?
        - fq1)
        / inner_product(&pr.q1, &pr.q1)?;
    Ok((alpha, beta))
}

/// Closed-form α, β for the moving-frame v-problem.
pub fn v_forcing(v: &Field, pr: &Profiles, p: PathPoint) -> Result<(f64, f64)> {
    let c2 = p.c * p.c;
    let rate = p.c_dot / p.c;
    let drift = p.y_dot - c2;
    let alpha = -(2.0 * c2 * inner_product(v, &pr.q1)? - drift * inner_product(v, &pr.tilde1)?
        + rate * inner_product(v, &pr.tilde_tilde)?)
        / inner_product(&pr.q, &pr.tilde)?;
    let beta = (drift * inner_product(v, &pr.q2)? - rate * inner_product(v, &pr.tilde1)?) / inner_product(&pr.q1, &pr.q1)?;
    Ok((alpha, beta))
}

struct LinRhs<'a> {
    problem: Problem,
    grid: GridSpec,
    frozen: Option<(SolitonParams, f64)>,
    path: Option<&'a dyn ModulationPath>,
    source: Option<Source<'a>>,
    pad: Padded,
    fine_x: Vec<f64>,
    potential: Vec<f64>,
    fine: Vec<f64>,
    prod: Vec<Complex64>,
    tmp: Vec<Complex64>,
    ik: Vec<Complex64>,
}

impl<'a> LinRhs<'a> {
    fn new(problem: Problem, grid: GridSpec, frame: &Frame<'a>, convention: Convention) -> Self {
        let pad = Padded::new(grid.n(), 2);
        let m = pad.fine_len();
        let h = grid.length() / m as f64;
        let fine_x: Vec<f64> = (0..m).map(|j| -0.5 * grid.length() + j as f64 * h).collect();
        let (frozen, path, source) = match frame {
            Frame::Frozen(p) => (Some((*p, convention.sign())), None, None),
            Frame::Moving { path, source } => (None, Some(*path), *source),
        };
        let mut rhs = LinRhs {
            problem,
            grid,
            frozen,
            path,
            source,
            pad,
            fine_x,
            potential: vec![0.0; m],
            fine: vec![0.0; m],
            prod: vec![Complex64::default(); grid.n()],
            tmp: vec![Complex64::default(); grid.n()],
            ik: odd_symbol(&grid, |xi| Complex64::new(0.0, xi)),
        };
        if let Some((p, _)) = frozen {
            rhs.fill_potential(p.c(), p.y());
        }
        rhs
    }

    fn fill_potential(&mut self, c: f64, y: f64) {
        for (v, &x) in self.potential.iter_mut().zip(&self.fine_x) {
            let q = q_point(c, self.grid.wrap(x - y));
            *v = 4.0 * q * q * q;
        }
    }

    fn linear_symbol(&self) -> Vec<Complex64> {
        match self.frozen {
            Some((p, s)) => {
                let c2 = p.c() * p.c();
                odd_symbol(&self.grid, |xi| Complex64::new(0.0, -s * (xi * xi * xi + c2 * xi)))
            }
            None => odd_symbol(&self.grid, |xi| Complex64::new(0.0, xi * xi * xi)),
        }
    }

    fn forcing(&self, t: f64, state: &Field) -> Result<Option<(ModalForcing, Field)>> {
        let Some(path) = self.path else { return Ok(None) };
        let p = path.at(t);
        let params = SolitonParams::new(p.c, p.y)?;
        let pr = Profiles::new(params, self.grid);
        let (mf, field) = match self.problem {
            Problem::U => {
                let f = self.source.map(|s| s(t, &self.grid));
                let (alpha, beta) = u_forcing(state, &pr, p, f.as_ref())?;
                let mut field = pr.tilde.scale(alpha).axpy(beta, &pr.q1)?;
                if let Some(f) = &f {
                    field = field.add(f)?;
                }
                (ModalForcing { t, alpha, beta, source: ForcingSource::UProblem }, field)
            }
            Problem::V => {
                let (alpha, beta) = v_forcing(state, &pr, p)?;
                let field = pr.q.scale(alpha).axpy(beta, &pr.q1)?;
                (ModalForcing { t, alpha, beta, source: ForcingSource::VProblem }, field)
            }
        };
        Ok(Some((mf, field)))
    }
}

impl SemiLinear for LinRhs<'_> {
    fn nonlinear(&mut self, t: f64, u: &[Complex64], _aux: &[f64], du: &mut [Complex64], _daux: &mut [f64]) {
        let sign = match self.frozen {
            Some((_, s)) => s,
            None => {
                let p = self.path.expect("moving frame has a path").at(t);
                self.fill_potential(p.c, p.y);
                -1.0
            }
        };
        match self.problem {
            Problem::U => {
                self.pad.to_physical(u, &mut self.fine);
                for (f, v) in self.fine.iter_mut().zip(&self.potential) {
                    *f *= v;
                }
                self.pad.to_spectral(&self.fine, &mut self.prod);
                for k in 0..u.len() {
                    du[k] = sign * self.ik[k] * self.prod[k];
                }
            }
            Problem::V => {
                for k in 0..u.len() {
                    self.tmp[k] = self.ik[k] * u[k];
                }
                self.pad.to_physical(&self.tmp, &mut self.fine);
                for (f, v) in self.fine.iter_mut().zip(&self.potential) {
                    *f *= v;
                }
                self.pad.to_spectral(&self.fine, &mut self.prod);
                for k in 0..u.len() {
                    du[k] = sign * self.prod[k];
                }
            }
        }
        if self.path.is_some() {
            let state = field_of(self.grid, u);
            if let Ok(Some((_, forcing))) = self.forcing(t, &state) {
                let fh = spectral_of(&forcing);
                for k in 0..u.len() {
                    du[k] += fh[k];
                }
            } else {
                du.iter_mut().for_each(|d| *d = Complex64::new(f64::NAN, f64::NAN));
            }
        }
    }
}

fn constrained_products(problem: Problem, f: &Field, pr: &Profiles) -> Result<[f64; 2]> {
    Ok(match problem {
        Problem::U => [inner_product(f, &pr.q)?, inner_product(f, &pr.q1)?],
        Problem::V => [inner_product(f, &pr.tilde)?, inner_product(f, &pr.q1)?],
    })
}

fn run(problem: Problem, x0: &Field, t_final: f64, opts: &LinearFlowOptions, frame: Frame<'_>) -> Result<LinearRun> {
    let grid = *x0.grid();
    let (steps, h) = step_plan(t_final, opts.dt)?;
    let stride = opts.snapshot_stride.max(1);
    let mut rhs = LinRhs::new(problem, grid, &frame, opts.convention);
    let mut stepper = Etdrk4::new(&rhs.linear_symbol(), h);
    let params_at = |t: f64| -> Result<SolitonParams> {
        match &frame {
            Frame::Frozen(p) => Ok(*p),
            Frame::Moving { path, .. } => {
                let pt = path.at(t);
                SolitonParams::new(pt.c, pt.y)
            }
        }
    };
    let scale = 1.0 + x0.norm_l2();
    let moving = matches!(frame, Frame::Moving { .. });
    let pr0 = Profiles::new(params_at(0.0)?, grid);
    let orth0 = constrained_products(problem, x0, &pr0)?;
    if moving && orth0.iter().any(|v| v.abs() > 1e-10 * scale) {
        return Err(Error::param(
            "initial data",
            format!("forced mode needs orthogonal data, got inner products {:e}, {:e}", orth0[0], orth0[1]),
        ));
    }
    let mut u = spectral_of(x0);
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut orthogonality = vec![orth0];
    let mut forcing = Vec::new();
    let mut last = (0.0, x0.clone());
    for step in 1..=steps {
        stepper.step(&mut rhs, (step - 1) as f64 * h, &mut u, &mut []);
        let t = step as f64 * h;
        if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::BlowUp { t, last_t: last.0, last_state: Box::new(last.1) });
        }
        let store = step % stride == 0 || step == steps;
        if moving || store {
            let state = field_of(grid, &u);
            if moving {
                if let Some((mf, _)) = rhs.forcing(t, &state)? {
                    forcing.push(mf);
                }
                let pr = Profiles::new(params_at(t)?, grid);
                let orth = constrained_products(problem, &state, &pr)?;
                let drift = orth[0].abs().max(orth[1].abs());
                if drift > 1e-6 * scale {
                    return Err(Error::OrthogonalityDrift { t, drift });
                }
                if store {
                    orthogonality.push(orth);
                }
            } else {
                orthogonality.push(constrained_products(problem, &state, &pr0)?);
            }
            if store {
                last = (t, state.clone());
                times.push(t);
                states.push(state);
            }
        }
    }
    let mut conserved = Vec::with_capacity(states.len());
    for (&t, s) in times.iter().zip(&states) {
        let op = LinearizedOperator::new(params_at(t)?, grid);
        conserved.push(Conserved { t, mass: s.norm_l2().powi(2), energy: op.quadratic_form(s)? });
    }
    let equation = match (problem, moving) {
        (Problem::U, false) => format!("u_flow_frozen_{:?}", opts.convention).to_lowercase(),
        (Problem::V, false) => format!("v_flow_frozen_{:?}", opts.convention).to_lowercase(),
        (Problem::U, true) => "u_flow_moving".into(),
        (Problem::V, true) => "v_flow_moving".into(),
    };
    let meta = TrajectoryMeta {
        integrator: "etdrk4".into(),
        equation,
        grid,
        dt: h,
        snapshot_stride: stride,
        sponge: None,
        energy_kind: "quadratic_form_L".into(),
    };
    Ok(LinearRun { trajectory: Trajectory::new(times, states, meta, conserved)?, forcing, orthogonality })
}

pub fn u_flow_evolve(u0: &Field, t_final: f64, opts: &LinearFlowOptions, frame: Frame<'_>) -> Result<LinearRun> {
    run(Problem::U, u0, t_final, opts, frame)
}

pub fn v_flow_evolve(v0: &Field, t_final: f64, opts: &LinearFlowOptions, frame: Frame<'_>) -> Result<LinearRun> {
    run(Problem::V, v0, t_final, opts, frame)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub t_final: f64,
    /// `max_t ‖∂ₓ v(t) − u_{∂ₓv₀}(t)‖`.
    pub dx_intertwining: f64,
    /// `max_t ‖𝓛 u(t) − v_{𝓛u₀}(t)‖`.
    pub l_intertwining: f64,
    /// `max_t |⟨u(t), v(t)⟩ − ⟨u₀, v₀⟩|`.
    pub adjoint_pairing_drift: f64,
    /// `max_t ‖∂ₓ u(t) − v_{∂ₓu₀}(t)‖`, the reverse pairing, which does not intertwine.
    pub reversed_dx_mismatch: f64,
}

/// Evolves `u0` under both flows (frozen frame) and measures the duality relations.
pub fn duality_relations_check(
    u0: &Field,
    v0: &Field,
    params: SolitonParams,
    t_final: f64,
    opts: &LinearFlowOptions,
) -> Result<DualityReport> {
    let op = LinearizedOperator::new(params, *u0.grid());
    let uf = |x: &Field| u_flow_evolve(x, t_final, opts, Frame::Frozen(params));
    let vf = |x: &Field| v_flow_evolve(x, t_final, opts, Frame::Frozen(params));
    let u = uf(u0)?;
    let v = vf(v0)?;
    let v_of_lu = vf(&op.apply(u0)?)?;
    let u_of_dv = uf(&derivative(v0, 1)?)?;
    let v_of_du = vf(&derivative(u0, 1)?)?;
    let mut r = DualityReport {
        t_final,
        dx_intertwining: 0.0,
        l_intertwining: 0.0,
        adjoint_pairing_drift: 0.0,
        reversed_dx_mismatch: 0.0,
    };
    let pair0 = inner_product(u0, v0)?;
    let ts = u.trajectory.states();
    for i in 0..ts.len() {
        let (ui, vi) = (&ts[i], &v.trajectory.states()[i]);
        r.dx_intertwining = r.dx_intertwining.max(derivative(vi, 1)?.sub(&u_of_dv.trajectory.states()[i])?.norm_l2());
        r.l_intertwining = r.l_intertwining.max(op.apply(ui)?.sub(&v_of_lu.trajectory.states()[i])?.norm_l2());
        r.adjoint_pairing_drift = r.adjoint_pairing_drift.max((inner_product(ui, vi)? - pair0).abs());
        r.reversed_dx_mismatch =
            r.reversed_dx_mismatch.max(derivative(ui, 1)?.sub(&v_of_du.trajectory.states()[i])?.norm_l2());
    }
    Ok(r)
}

/// `⟨𝓛⁺v(t), v(t)⟩` at every stored state.
pub fn invariant_linv(v_traj: &Trajectory, op: &LinearizedOperator) -> Result<Vec<f64>> {
    v_traj.states().iter().map(|v| op.inverse_form(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::point_values;
    use crate::linop::{project_perp_qprime, project_tilde};
    use crate::noise::smooth_random_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g() -> GridSpec {
        GridSpec::new(512, 60.0).unwrap()
    }

    fn opts() -> LinearFlowOptions {
        LinearFlowOptions { dt: 1e-3, snapshot_stride: 250, convention: Convention::Dual }
    }

    #[test]
    fn q_only_matches_point_values() {
        for d in [-30.0, -1.0, 0.0, 0.4, 250.0] {
            assert!((point_values(1.3, d).q - q_point(1.3, d)).abs() < 1e-15);
        }
    }

    #[test]
    fn explicit_u_solutions() {
        let p = SolitonParams::unit();
        let pr = Profiles::new(p, g());
        let r = u_flow_evolve(&pr.q1, 1.0, &opts(), Frame::Frozen(p)).unwrap();
        assert!(r.trajectory.last().sub(&pr.q1).unwrap().norm_l2() < 1e-8);
        let r = u_flow_evolve(&pr.tilde, 1.0, &opts(), Frame::Frozen(p)).unwrap();
        let exact = pr.tilde.axpy(2.0, &pr.q1).unwrap();
        assert!(r.trajectory.last().sub(&exact).unwrap().norm_l2() < 1e-6);
        // the comoving convention reverses time
        let o = LinearFlowOptions { convention: Convention::Comoving, ..opts() };
        let r = u_flow_evolve(&pr.tilde, 1.0, &o, Frame::Frozen(p)).unwrap();
        let exact = pr.tilde.axpy(-2.0, &pr.q1).unwrap();
        assert!(r.trajectory.last().sub(&exact).unwrap().norm_l2() < 1e-6);
    }

    #[test]
    fn v_flow_fixes_q_and_preserves_qprime_product() {
        let p = SolitonParams::unit();
        let pr = Profiles::new(p, g());
        let r = v_flow_evolve(&pr.q, 1.0, &opts(), Frame::Frozen(p)).unwrap();
        assert!(r.trajectory.last().sub(&pr.q).unwrap().norm_l2() < 1e-8);
        let v0 = smooth_random_field(g(), &mut ChaCha8Rng::seed_from_u64(3), 2.0, 0.0, 3.0);
        let r = v_flow_evolve(&v0, 1.0, &opts(), Frame::Frozen(p)).unwrap();
        let first = r.orthogonality[0][1];
        for o in &r.orthogonality {
            assert!((o[1] - first).abs() < 1e-8);
        }
    }

    #[test]
    fn u_flow_preserves_q_product() {
        let p = SolitonParams::unit();
        let u0 = smooth_random_field(g(), &mut ChaCha8Rng::seed_from_u64(4), 2.0, 1.0, 3.0);
        let r = u_flow_evolve(&u0, 1.0, &opts(), Frame::Frozen(p)).unwrap();
        let first = r.orthogonality[0][0];
        for o in &r.orthogonality {
            assert!((o[0] - first).abs() < 1e-8);
        }
        // ⟨𝓛u,u⟩ is conserved by the frozen u-flow
        let e0 = r.trajectory.conserved()[0].energy;
        for c in r.trajectory.conserved() {
            assert!((c.energy - e0).abs() < 1e-8 * (1.0 + e0.abs()));
        }
    }

    #[test]
    fn v_orthogonality_kept_by_frozen_flow() {
        let p = SolitonParams::unit();
        let pr = Profiles::new(p, g());
        let raw = smooth_random_field(g(), &mut ChaCha8Rng::seed_from_u64(5), 2.0, 0.0, 3.0);
        // ⊥ Q̃ and Q′ (these two are orthogonal by parity)
        let a = inner_product(&raw, &pr.tilde).unwrap() / inner_product(&pr.tilde, &pr.tilde).unwrap();
        let v0 = project_perp_qprime(&raw.axpy(-a, &pr.tilde).unwrap(), p).unwrap();
        let r = v_flow_evolve(&v0, 1.0, &opts(), Frame::Frozen(p)).unwrap();
        for o in &r.orthogonality {
            assert!(o[0].abs() < 1e-7 && o[1].abs() < 1e-7, "{o:?}");
        }
    }

    #[test]
    fn duality() {
        let p = SolitonParams::unit();
        let u0 = smooth_random_field(g(), &mut ChaCha8Rng::seed_from_u64(6), 2.0, 0.5, 2.5);
        let v0 = smooth_random_field(g(), &mut ChaCha8Rng::seed_from_u64(7), 2.0, -0.5, 2.5);
        let o = LinearFlowOptions { snapshot_stride: 400, dt: 2.5e-4, ..opts() };
        let r = duality_relations_check(&u0, &v0, p, 0.5, &o).unwrap();
        assert!(r.dx_intertwining < 1e-7, "{r:?}");
        assert!(r.l_intertwining < 1e-7, "{r:?}");
        assert!(r.adjoint_pairing_drift < 1e-8, "{r:?}");
        assert!(r.reversed_dx_mismatch > 1e-3, "{r:?}");
    }

    fn wobbly_path() -> impl ModulationPath {
        |t: f64| {
            let c = 1.0 + 0.01 * (0.7 * t).sin();
            let c_dot = 0.007 * (0.7 * t).cos();
            // y = ∫(c² + 0.02 cos t) dt
            let y = t + 0.01 * 2.0 * (1.0 - (0.7 * t).cos()) / 0.7 + 0.0001 * (0.5 * t - (1.4 * t).sin() / 2.8)
                + 0.02 * t.sin();
            let y_dot = c * c + 0.02 * t.cos();
            PathPoint { c, c_dot, y, y_dot }
        }
    }

    #[test]
    fn forced_flows_keep_orthogonality() {
        let path = wobbly_path();
        let p0 = path.at(0.0);
        let params = SolitonParams::new(p0.c, p0.y).unwrap();
        let raw = smooth_random_field(g(), &mut ChaCha8Rng::seed_from_u64(8), 2.0, -2.0, 3.0).scale(1e-3);
        let u0 = project_perp_qprime(&project_tilde(&raw, params).unwrap(), params).unwrap();
        let r = u_flow_evolve(&u0, 5.0, &opts(), Frame::Moving { path: &path, source: None }).unwrap();
        assert!(r.orthogonality.iter().all(|o| o[0].abs() < 1e-8 && o[1].abs() < 1e-8), "{:?}", r.orthogonality);
        assert_eq!(r.forcing.len(), 5000);
        let pr = Profiles::new(params, g());
        let a = inner_product(&raw, &pr.tilde).unwrap() / inner_product(&pr.tilde, &pr.tilde).unwrap();
        let v0 = project_perp_qprime(&raw.axpy(-a, &pr.tilde).unwrap(), params).unwrap();
        let r = v_flow_evolve(&v0, 5.0, &opts(), Frame::Moving { path: &path, source: None }).unwrap();
        assert!(r.orthogonality.iter().all(|o| o[0].abs() < 1e-8 && o[1].abs() < 1e-8), "{:?}", r.orthogonality);
    }

    /// Independent route for α, β: solve the 2×2 Gram system with the unforced
    /// rate of change of the constrained products computed numerically.
    #[test]
    fn forcing_matches_gram_system() {
        let path = wobbly_path();
        let t = 0.8;
        let pt = path.at(t);
        let grid = g();
        let params = SolitonParams::new(pt.c, pt.y).unwrap();
        let pr = Profiles::new(params, grid);
        let u = smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(9), 2.0, pt.y, 3.0);
        let f = smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(10), 2.0, pt.y, 2.0);
        let h = 1e-5;
        let prof_at = |s: f64| {
            let q = path.at(s);
            Profiles::new(SolitonParams::new(q.c, q.y).unwrap(), grid)
        };
        let (pp, pm) = (prof_at(t + h), prof_at(t - h));
        let q = |p: &Profiles| p.q.clone();
        let q1 = |p: &Profiles| p.q1.clone();
        let qt = |p: &Profiles| p.tilde.clone();
        let dt_of = |sel: &dyn Fn(&Profiles) -> Field| sel(&pp).sub(&sel(&pm)).unwrap().scale(0.5 / h);
        let lin_u = {
            let v = pr.q.map(|x| 4.0 * x.powi(3)).mul(&u).unwrap();
            derivative(&u, 3).unwrap().add(&derivative(&v, 1).unwrap()).unwrap().scale(-1.0)
        };
        let rhs = |lin: &Field, p1: &Field, dp1: Field, extra: &Field| {
            -(inner_product(lin, p1).unwrap() + inner_product(&u, &dp1).unwrap() + inner_product(extra, p1).unwrap())
        };
        // u-problem: constraints against Q and Q′, directions Q̃ and Q′
        let b = [rhs(&lin_u, &pr.q, dt_of(&q), &f), rhs(&lin_u, &pr.q1, dt_of(&q1), &f)];
        let m = [
            [inner_product(&pr.tilde, &pr.q).unwrap(), inner_product(&pr.q1, &pr.q).unwrap()],
            [inner_product(&pr.tilde, &pr.q1).unwrap(), inner_product(&pr.q1, &pr.q1).unwrap()],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let alpha = (b[0] * m[1][1] - m[0][1] * b[1]) / det;
        let beta = (m[0][0] * b[1] - m[1][0] * b[0]) / det;
        let (a2, b2) = u_forcing(&u, &pr, pt, Some(&f)).unwrap();
        assert!((alpha - a2).abs() < 1e-6 * (1.0 + alpha.abs()), "{alpha} vs {a2}");
        assert!((beta - b2).abs() < 1e-6 * (1.0 + beta.abs()), "{beta} vs {b2}");
        // v-problem: constraints against Q̃ and Q′, directions Q and Q′
        let lin_v = {
            let vx = derivative(&u, 1).unwrap();
            let pot = pr.q.map(|x| 4.0 * x.powi(3));
            derivative(&u, 3).unwrap().add(&pot.mul(&vx).unwrap()).unwrap().scale(-1.0)
        };
        let zero = Field::zeros(grid);
        let b = [rhs(&lin_v, &pr.tilde, dt_of(&qt), &zero), rhs(&lin_v, &pr.q1, dt_of(&q1), &zero)];
        let m = [
            [inner_product(&pr.q, &pr.tilde).unwrap(), inner_product(&pr.q1, &pr.tilde).unwrap()],
            [inner_product(&pr.q, &pr.q1).unwrap(), inner_product(&pr.q1, &pr.q1).unwrap()],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let alpha = (b[0] * m[1][1] - m[0][1] * b[1]) / det;
        let beta = (m[0][0] * b[1] - m[1][0] * b[0]) / det;
        let (a2, b2) = v_forcing(&u, &pr, pt).unwrap();
        assert!((alpha - a2).abs() < 1e-6 * (1.0 + alpha.abs()), "{alpha} vs {a2}");
        assert!((beta - b2).abs() < 1e-6 * (1.0 + beta.abs()), "{beta} vs {b2}");
    }

    #[test]
    fn forced_mode_requires_orthogonal_data() {
        let path = FreeSolitonPath { c: 1.0, y0: 0.0 };
        let pr = Profiles::new(SolitonParams::unit(), g());
        let r = u_flow_evolve(&pr.q, 0.1, &opts(), Frame::Moving { path: &path, source: None });
        assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    }
}
