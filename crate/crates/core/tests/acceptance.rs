//! Acceptance suite: one line per criterion with the measured value and its tolerance.
//!
//! Runs without the libtest harness so the report is always printed. Exits nonzero
//! when a check fails that is not listed in `KNOWN_FAILURES`.

use std::time::{Duration, Instant};

use gkdv_core::flows::{
    airy_propagate, duality_relations_check, energy, gkdv_evolve, invariant_linv, mass, u_flow_evolve, v_flow_evolve,
    Frame, GkdvOptions, LinearFlowOptions, Sponge, Trajectory,
};
use gkdv_core::grid::inner_product;
use gkdv_core::linop::{project_perp_qprime, LinearizedOperator};
use gkdv_core::modulation::{coupled_evolve, decompose, inner_product_dynamics_check, CoupledOptions};
use gkdv_core::noise::smooth_random_field;
use gkdv_core::norms::{
    critical_besov, j_functional, local_smoothing_integral, p_variation, strichartz_norm, DyadicDecomposition,
    PathFamily,
};
use gkdv_core::scattering::{forward_scatter, inverse_cauchy, inverse_wave, InverseOptions};
use gkdv_core::soliton::{mass_formula, mass_numeric, profile, Profiles, SolitonParams};
use gkdv_core::virial::{eta_identity_defects, virial_rate};
use gkdv_core::weights::gamma0;
use gkdv_core::{Field, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Checks that fail by construction; each has a ledger entry explaining why.
const KNOWN_FAILURES: &[&str] = &["4.2", "4.A-quoted", "x.base-1.26", "x.window", "x.j-decay"];

struct Check {
    id: String,
    what: String,
    measured: f64,
    tol: f64,
    pass: bool,
}

impl Check {
    /// Passes when `measured ≤ tol`.
    fn at_most(id: &str, what: &str, measured: f64, tol: f64) -> Check {
        Check { id: id.into(), what: what.into(), measured, tol, pass: measured <= tol }
    }

    /// Passes when `measured ≥ tol`.
    fn at_least(id: &str, what: &str, measured: f64, tol: f64) -> Check {
        Check { id: id.into(), what: what.into(), measured, tol, pass: measured >= tol }
    }
}

fn sample_perp(grid: GridSpec, seed: u64, kmax: f64, width: f64, pr: &Profiles) -> Field {
    let raw = smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(seed), kmax, pr.params.y(), width);
    let a = inner_product(&raw, &pr.tilde).unwrap() / inner_product(&pr.tilde, &pr.tilde).unwrap();
    project_perp_qprime(&raw.axpy(-a, &pr.tilde).unwrap(), pr.params).unwrap()
}

/// Unit-norm noise orthogonal to `Q` and `Q′`.
fn perturbation(grid: GridSpec, seed: u64, kmax: f64, width: f64, pr: &Profiles) -> Field {
    let raw = smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(seed), kmax, pr.params.y(), width);
    let a = inner_product(&raw, &pr.q).unwrap() / inner_product(&pr.q, &pr.q).unwrap();
    let f = project_perp_qprime(&raw.axpy(-a, &pr.q).unwrap(), pr.params).unwrap();
    f.scale(1.0 / f.norm_l2())
}

fn airy_traj(f: &Field, t_end: f64, steps: usize) -> Trajectory {
    let times: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
    let states = times.iter().map(|&t| airy_propagate(f, t)).collect();
    Trajectory::from_states(times, states, "airy_exact", t_end / steps as f64).unwrap()
}

fn ground_state() -> Vec<Check> {
    let grid = GridSpec::new(1024, 80.0).unwrap();
    let start = Instant::now();
    let op = LinearizedOperator::new(SolitonParams::unit(), grid);
    let pairs = op.spectrum(3).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let q52 = op.profiles().q.map(|q| q.powf(2.5));
    let q52 = q52.scale(1.0 / q52.norm_l2());
    let e = &pairs[0].field;
    let sign = inner_product(e, &q52).unwrap().signum();
    vec![
        Check::at_most("1.λ", "lowest eigenvalue of 𝓛 vs −21/4", (pairs[0].value + 5.25).abs(), 1e-6),
        Check::at_most("1.Q^(5/2)", "ground state vs normalized Q^(5/2) (L²)", e.scale(sign).sub(&q52).unwrap().norm_l2(), 1e-6),
        Check::at_most("1.time", "dense eigensolve at n=1024 (s)", elapsed, 30.0),
    ]
}

fn kernel() -> Vec<Check> {
    let grid = GridSpec::standard();
    let op = LinearizedOperator::new(SolitonParams::unit(), grid);
    let pr = op.profiles();
    vec![
        Check::at_most("2.Q′", "‖𝓛Q′‖", op.apply(&pr.q1).unwrap().norm_l2(), 1e-8),
        Check::at_most("2.Q̃", "‖𝓛Q̃ + 2Q‖", op.apply(&pr.tilde).unwrap().axpy(2.0, &pr.q).unwrap().norm_l2(), 1e-8),
    ]
}

fn soliton_mass() -> Vec<Check> {
    let grid = GridSpec::standard();
    let mut out = vec![Check::at_most("3.mass", "quadrature ‖Q‖² vs Gamma formula", (mass_numeric(grid) - mass_formula()).abs(), 1e-8)];
    let q1 = profile(SolitonParams::unit(), grid).norm_l2();
    for c in [0.5, 2.0] {
        let pr = Profiles::new(SolitonParams::new(c, 0.0).unwrap(), grid);
        let n = pr.q.norm_l2();
        out.push(Check::at_most(&format!("3.scale@{c}"), "‖Q_c‖ − c^(1/6)‖Q₁‖", (n - c.powf(1.0 / 6.0) * q1).abs(), 1e-10));
        let ip = inner_product(&pr.tilde, &pr.q).unwrap();
        out.push(Check::at_most(&format!("3.tilde@{c}"), "⟨Q̃_c,Q_c⟩ − ‖Q_c‖²/6", (ip - n * n / 6.0).abs(), 1e-10));
    }
    out
}

fn virial_algebra() -> Vec<Check> {
    let r = eta_identity_defects(GridSpec::standard());
    let names = ["η′ = Q³", "(η″/η′)² = 9(1 − (2/3)Q³) as stated", "η‴/η′ = 9(1 − (3/5)Q³)", "η² = (25/9)(1 − (2/5)Q³)", "(Q³η)′ = −5Q³ + 3Q⁶"];
    let mut out: Vec<Check> =
        r.quoted().iter().zip(names).enumerate().map(|(i, (&d, n))| Check::at_most(&format!("4.{}", i + 1), n, d, 1e-9)).collect();
    out.push(Check::at_most("4.2-corrected", "(η″/η′)² = 9(1 − (2/5)Q³)", r.log_derivative_sq, 1e-9));
    out.push(Check::at_most("4.A", "A = 75/4 − 12Q³ from η derivatives", r.a_direct, 1e-9));
    out.push(Check::at_most("4.A-quoted", "A assembled from the stated identities", r.a_from_quoted, 1e-9));
    out.push(Check::at_most("4.A-corrected", "A assembled with the corrected identity", r.a_from_corrected, 1e-9));
    out
}

fn virial_dynamics() -> Vec<Check> {
    let grid = GridSpec::new(512, 60.0).unwrap();
    let pr = Profiles::new(SolitonParams::unit(), grid);
    let q_rate = virial_rate(&pr.q, 0.0).unwrap();
    let mut worst_rate = f64::NEG_INFINITY;
    let mut worst_diss = f64::INFINITY;
    let mut route_gap: f64 = 0.0;
    for seed in 0..20 {
        let v = sample_perp(grid, 100 + seed, 2.5, 3.0, &pr);
        let r = virial_rate(&v, 0.0).unwrap();
        worst_rate = worst_rate.max(r.instantaneous);
        worst_diss = worst_diss.min(r.dissipation);
        route_gap = route_gap.max((r.instantaneous - r.integrated_by_parts).abs()).max((r.instantaneous + r.dissipation).abs());
    }
    vec![
        Check::at_most("5.Q", "|d/dt I_η(Q)|", q_rate.instantaneous.abs(), 1e-7),
        Check::at_most("5.sign", "max d/dt I_η over 20 samples ⊥ Q̃, Q′", worst_rate, 1e-7),
        Check::at_least("5.dissipation", "min dissipation 3∫w̃ₓ² + ∫Aw̃²", worst_diss, 0.0),
        Check::at_most("5.routes", "rate: flow vs parts vs −dissipation", route_gap, 1e-9),
    ]
}

fn explicit_linear() -> Vec<Check> {
    let grid = GridSpec::new(512, 60.0).unwrap();
    let p = SolitonParams::unit();
    let pr = Profiles::new(p, grid);
    let opts = LinearFlowOptions { dt: 1e-3, snapshot_stride: 250, ..Default::default() };
    let u = u_flow_evolve(&pr.tilde, 1.0, &opts, Frame::Frozen(p)).unwrap();
    let u_err = u.trajectory.last().sub(&pr.tilde.axpy(2.0, &pr.q1).unwrap()).unwrap().norm_l2();
    let v = v_flow_evolve(&pr.q, 1.0, &opts, Frame::Frozen(p)).unwrap();
    let v_err = v.trajectory.last().sub(&pr.q).unwrap().norm_l2();
    let u0 = smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(6), 2.0, 0.5, 2.5);
    let v0 = smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(7), 2.0, -0.5, 2.5);
    let d = duality_relations_check(&u0, &v0, p, 0.5, &LinearFlowOptions { dt: 2.5e-4, snapshot_stride: 400, ..opts }).unwrap();
    vec![
        Check::at_most("6.u", "u-flow from Q̃ vs Q̃ + 2tQ′ at t=1", u_err, 1e-6),
        Check::at_most("6.v", "v-flow from Q stays Q at t=1", v_err, 1e-8),
        Check::at_most("6.∂ₓ", "∂ₓ maps v-solutions to u-solutions", d.dx_intertwining, 1e-7),
        Check::at_most("6.𝓛", "𝓛 maps u-solutions to v-solutions", d.l_intertwining, 1e-7),
        Check::at_most("6.pairing", "⟨u(t), v(t)⟩ drift", d.adjoint_pairing_drift, 1e-7),
    ]
}

fn conservation() -> Vec<Check> {
    let grid = GridSpec::new(512, 60.0).unwrap();
    let p = SolitonParams::unit();
    let pr = Profiles::new(p, grid);
    let op = LinearizedOperator::new(p, grid);
    let v0 = sample_perp(grid, 31, 2.0, 3.0, &pr);
    let run = v_flow_evolve(&v0, 1.0, &LinearFlowOptions { dt: 1e-3, snapshot_stride: 100, ..Default::default() }, Frame::Frozen(p)).unwrap();
    let linv = invariant_linv(&run.trajectory, &op).unwrap();
    let linv_drift = linv.iter().map(|x| (x - linv[0]).abs()).fold(0.0, f64::max);

    let psi0 = pr.q.axpy(1e-3, &perturbation(grid, 5, 1.5, 2.0, &pr)).unwrap();
    let tr = gkdv_evolve(&psi0, 1.0, &GkdvOptions { dt: 1e-3, snapshot_stride: 50, sponge: None }).unwrap();
    let (m0, e0) = (mass(&psi0), energy(&psi0));
    let m_drift = tr.conserved().iter().map(|c| (c.mass - m0).abs()).fold(0.0, f64::max);
    let e_drift = tr.conserved().iter().map(|c| (c.energy - e0).abs()).fold(0.0, f64::max);

    // traveling soliton: error at t = 1 over a decade of step sizes. The error constant
    // oscillates with the phase k³dt of the stiff modes, so a single halving is noisy; the
    // order is the least-squares log-log slope.
    let g2 = GridSpec::new(1024, 80.0).unwrap();
    let q0 = profile(SolitonParams::new(1.0, -2.0).unwrap(), g2);
    let exact = profile(SolitonParams::new(1.0, -1.0).unwrap(), g2);
    let dts = [0.02, 0.014, 0.01, 0.007, 0.005, 0.0035, 0.0025, 0.002];
    let pts: Vec<(f64, f64)> = dts
        .iter()
        .map(|&dt| {
            let tr = gkdv_evolve(&q0, 1.0, &GkdvOptions { dt, snapshot_stride: 1000, sponge: None }).unwrap();
            (dt.ln(), tr.last().sub(&exact).unwrap().norm_l2().ln())
        })
        .collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let ratio = 2f64.powf(slope);
    vec![
        Check::at_most("7.Linv", "⟨𝓛⁻¹v, v⟩ drift over [0,1]", linv_drift, 1e-8),
        Check::at_most("7.mass", "gKdV mass drift over [0,1], dt=1e-3", m_drift, 1e-8),
        Check::at_most("7.energy", "gKdV energy drift over [0,1], dt=1e-3", e_drift, 1e-8),
        Check::at_least("7.order", &format!("error ratio per dt halving, fitted over dt ∈ [0.002, 0.02] (order {slope:.2})"), ratio, 12.0),
    ]
}

fn modulation() -> Vec<Check> {
    let grid = GridSpec::new(512, 60.0).unwrap();
    let mut worst: f64 = 0.0;
    for (c, y) in [(1.0, 0.0), (0.7, 3.3), (1.6, -8.25), (1.3, 12.0)] {
        let s = decompose(&profile(SolitonParams::new(c, y).unwrap(), grid), None).unwrap();
        worst = worst.max((s.c - c).abs()).max((s.y - y).abs()).max(s.w.max_abs());
    }
    let pr = Profiles::new(SolitonParams::unit(), grid);
    let psi0 = pr.q.axpy(1e-3, &perturbation(grid, 17, 1.5, 2.0, &pr)).unwrap();
    let s0 = decompose(&psi0, None).unwrap();
    let run = coupled_evolve(&s0, 1.0, &CoupledOptions::default()).unwrap();
    let direct = gkdv_evolve(&psi0, 1.0, &GkdvOptions { dt: 1e-3, snapshot_stride: 1000, sponge: None }).unwrap();
    let recon = run.final_state().reconstruct().sub(direct.last()).unwrap().norm_l2();
    let dyn_rep = inner_product_dynamics_check(&run).unwrap();

    let g2 = GridSpec::new(1024, 120.0).unwrap();
    let pr2 = Profiles::new(SolitonParams::new(1.0, -30.0).unwrap(), g2);
    let s2 = decompose(&pr2.q.axpy(1e-3, &perturbation(g2, 23, 1.5, 2.0, &pr2)).unwrap(), None).unwrap();
    let long = coupled_evolve(&s2, 10.0, &CoupledOptions { dt: 2e-3, snapshot_stride: 50, sponge: Some(Sponge::default()), ..Default::default() }).unwrap();
    let c_dev = long.log.iter().map(|l| (l.c - s2.c).abs()).fold(0.0, f64::max);
    vec![
        Check::at_most("8.decompose", "pure solitons: |Δc|, |Δy|, max|w|", worst, 1e-10),
        Check::at_most("8.reconstruct", "coupled vs direct gKdV at t=1 (L²)", recon, 1e-6),
        Check::at_most("8.mod1", "d/dt⟨w,Q⟩ identity defect (relative)", dyn_rep.mod1_defect, 1e-5),
        Check::at_most("8.mod2", "d/dt⟨w,Q′⟩ identity defect (relative)", dyn_rep.mod2_defect, 1e-5),
        Check::at_most("8.orbital", "sup_{t≤10}|c(t) − c₀|", c_dev, 5e-3),
    ]
}

/// Every chain of indices, summed left to right like the DP.
fn brute_force_variation(s: &[f64], p: f64) -> f64 {
    let n = s.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let mut sum = 0.0;
        let mut prev: Option<usize> = None;
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            if let Some(j) = prev {
                sum += (s[i] - s[j]).abs().powf(p);
            }
            prev = Some(i);
        }
        best = best.max(sum);
    }
    best.powf(1.0 / p)
}

fn variation() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0usize;
    let mut monotone_violations = 0usize;
    for _ in 0..1000 {
        let n = rng.random_range(1..=12);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = rng.random_range(1.0..6.0);
        if p_variation(&s, p, false).unwrap() != brute_force_variation(&s, p) {
            mismatches += 1;
        }
        let q = p + rng.random_range(0.0..2.0);
        if p_variation(&s, q, false).unwrap() > p_variation(&s, p, false).unwrap() * (1.0 + 1e-12) {
            monotone_violations += 1;
        }
    }
    vec![
        Check::at_most("9.dp", "DP ≠ brute force (count of 1000 series)", mismatches as f64, 0.0),
        Check::at_most("9.monotone", "V^q > V^p for p < q (count)", monotone_violations as f64, 0.0),
    ]
}

fn scattering() -> Vec<Check> {
    let grid = GridSpec::new(1024, 160.0).unwrap();
    let dec = DyadicDecomposition::new(grid, 2.0, true).unwrap();

    // forward: perturbed soliton with the sponge on
    let pr = Profiles::new(SolitonParams::new(1.0, -30.0).unwrap(), grid);
    let psi0 = pr.q.axpy(1e-3, &perturbation(grid, 7, 1.5, 2.0, &pr)).unwrap();
    let s0 = decompose(&psi0, None).unwrap();
    let opts = CoupledOptions { dt: 2e-3, snapshot_stride: 100, sponge: Some(Sponge::default()), ..Default::default() };
    let run = coupled_evolve(&s0, 40.0, &opts).unwrap();
    let rep = forward_scatter(&run, 0.25, &dec).unwrap();
    let ratio = rep.residual_at(10.0) / rep.residual_at(40.0);
    let wide = forward_scatter(&run, 0.5, &dec).unwrap();
    let window_gap = rep.z0().sub(wide.z0()).unwrap().norm_l2() / rep.z0().norm_l2();

    // inverse: narrow-band radiation behind the soliton
    let y0 = -40.0;
    let v0_of = |amp: f64| smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(5), 0.4, y0 - 25.0, 8.0).scale(amp);
    let v0 = v0_of(1e-2);
    let iopts = InverseOptions { dt: 2e-3, ..Default::default() };
    let inv = inverse_wave(&v0, 1.0, y0, 40.0, &iopts).unwrap();
    let back = coupled_evolve(&inv.state0, 40.0, &CoupledOptions { dt: 2e-3, snapshot_stride: 100, sponge: None, ..Default::default() }).unwrap();
    let z = forward_scatter(&back, 0.25, &dec).unwrap();
    let round_trip = z.z0().sub(&v0).unwrap().norm_l2() / v0.norm_l2();

    // mass-identity defect against amplitude, at the finer step that keeps the integrator floor out
    let fine = InverseOptions { dt: 1e-3, ..Default::default() };
    let d2 = inverse_wave(&v0, 1.0, y0, 40.0, &fine).unwrap().mass_defect.abs();
    let d3 = inverse_wave(&v0_of(1e-3), 1.0, y0, 40.0, &fine).unwrap().mass_defect.abs();

    let cauchy = inverse_cauchy(&v0, 1.0, y0, &[20.0, 30.0, 40.0], &iopts).unwrap();
    let psi_norm = inv.psi0.norm_l2();
    let cauchy_worst = cauchy.successive_l2.iter().copied().fold(0.0, f64::max) / psi_norm;
    let all_monotone = cauchy.results.iter().all(|r| r.monotone) && inv.monotone;

    vec![
        Check::at_least("10.forward", "Ḃ^(−1/6,2)_∞ residual at T/4 over residual at T (T=40, sponge)", ratio, 5.0),
        Check::at_most("10.mass", "|‖v₀‖² + ‖Q‖² − ‖Ψ(0)‖²| / ‖Ψ(0)‖², amplitude 1e−2", inv.relative_mass_defect(), 0.01),
        Check::at_most("10.round-trip", "‖z₀ − v₀‖ / ‖v₀‖ after inverse then forward", round_trip, 0.05),
        Check::at_most("x.window", "z₀ from [0.75T,T] vs [0.5T,T] (relative L²)", window_gap, 0.05),
        Check::at_least("x.mass-scaling", "mass defect ratio, amplitude 1e−2 over 1e−3", d2 / d3, 5.0),
        Check::at_most("x.cauchy", "successive Ψ(0) for S = 20, 30, 40 (relative L²)", cauchy_worst, 1e-3),
        Check::at_least("x.shooting", "y(0) monotone in y^S on every bracket (1 = yes)", f64::from(u8::from(all_monotone)), 1.0),
    ]
}

fn norms_extras() -> Vec<Check> {
    // base robustness of the critical norm
    let grid = GridSpec::new(1024, 80.0).unwrap();
    let q = profile(SolitonParams::unit(), grid);
    let b2 = critical_besov(&q, &DyadicDecomposition::new(grid, 2.0, true).unwrap()).unwrap();
    let b126 = critical_besov(&q, &DyadicDecomposition::new(grid, 1.26, true).unwrap()).unwrap();

    // J decay along the free flow of a Gaussian
    let g2 = GridSpec::new(512, 160.0).unwrap();
    let dec = DyadicDecomposition::new(g2, 2.0, true).unwrap();
    let gauss = Field::from_fn(g2, |x| 0.1 * (-x * x / 2.0).exp()).unwrap();
    let tr = airy_traj(&gauss, 40.0, 400);
    let j0 = j_functional(&tr, 0.0, &dec, &PathFamily::default(), 0.1).unwrap().value;
    let j20 = j_functional(&tr, 20.0, &dec, &PathFamily::default(), 0.1).unwrap().value;

    // Strichartz constant for band-limited data on T=10
    let mut worst_c: f64 = 0.0;
    for (k, lambda) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
        let f = smooth_random_field(g2, &mut ChaCha8Rng::seed_from_u64(40 + k as u64), lambda, 0.0, 8.0 / lambda);
        let fl = gkdv_core::norms::lp_project(&f, &dec, lambda).unwrap();
        let tr = airy_traj(&fl, 10.0, 1000);
        worst_c = worst_c.max(strichartz_norm(&tr, 6.0, 6.0, false).unwrap() / (lambda.powf(-1.0 / 6.0) * fl.norm_l2()));
    }

    // local smoothing of the free flow of Q along y = t vs the initial weighted energy
    let g3 = GridSpec::new(1024, 80.0).unwrap();
    let q3 = profile(SolitonParams::unit(), g3);
    let tr = airy_traj(&q3, 10.0, 400);
    let ls = local_smoothing_integral(&tr, tr.times(), 0.0, 0.1).unwrap();
    let qx = gkdv_core::grid::derivative(&q3, 1).unwrap();
    let gamma = Field::from_fn(g3, |x| gamma0(x, 0.1)).unwrap();
    let weighted = inner_product(&gamma, &q3.mul(&q3).unwrap()).unwrap() + qx.norm_l2().powi(2);

    vec![
        Check::at_most("x.base-1.26", "critical norm of Q, base 1.26 vs 2 (relative)", (b126 / b2 - 1.0).abs(), 0.10),
        Check::at_most("x.j-decay", "J_[20,40] / J_[0,40] for a Gaussian", j20 / j0, 0.1),
        Check::at_most("x.strichartz", "max ‖u_λ‖_{L⁶L⁶} / (λ^(−1/6)‖u_λ(0)‖), T=10", worst_c, 10.0),
        Check::at_most("x.smoothing", "∫∫γ₀′(u² + uₓ²) / (∫γ₀Q² + Qₓ²), Airy from Q", ls / weighted, 1.0),
    ]
}

type Group = (&'static str, fn() -> Vec<Check>);

fn main() {
    let start = Instant::now();
    let groups: Vec<Group> = vec![
        ("1 ground state", ground_state),
        ("2 kernel", kernel),
        ("3 soliton mass", soliton_mass),
        ("4 virial algebra", virial_algebra),
        ("5 virial dynamics", virial_dynamics),
        ("6 explicit linear solutions", explicit_linear),
        ("7 conservation", conservation),
        ("8 modulation", modulation),
        ("9 V^p norm", variation),
        ("10 scattering", scattering),
        ("extra norms", norms_extras),
    ];
    let mut all = Vec::new();
    for (name, f) in groups {
        let t = Instant::now();
        let checks = f();
        println!("== {name} ({:.1}s)", t.elapsed().as_secs_f64());
        for c in &checks {
            let tag = match (c.pass, KNOWN_FAILURES.contains(&c.id.as_str())) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known)",
                (false, false) => "FAIL",
            };
            println!("  [{tag}] {:<14} {}: {:.3e} (tol {:.1e})", c.id, c.what, c.measured, c.tol);
        }
        all.extend(checks);
    }
    let total = start.elapsed();
    let runtime = Check::at_most("10.runtime", "full suite runtime (s)", total.as_secs_f64(), Duration::from_secs(15 * 60).as_secs_f64());
    println!("  [{}] {:<14} {}: {:.1}", if runtime.pass { "PASS" } else { "FAIL" }, runtime.id, runtime.what, runtime.measured);
    all.push(runtime);

    let unexpected: Vec<&Check> = all.iter().filter(|c| !c.pass && !KNOWN_FAILURES.contains(&c.id.as_str())).collect();
    let passed = all.iter().filter(|c| c.pass).count();
    println!("{passed}/{} checks passed; {} unexpected failures", all.len(), unexpected.len());
    for c in &all {
        if c.pass && KNOWN_FAILURES.contains(&c.id.as_str()) {
            println!("note: {} is listed as a known failure but passed", c.id);
        }
    }
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
