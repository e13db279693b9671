//! The named experiments. Each one writes its artifacts into the run directory and returns
//! its checks; thresholds match the library's acceptance suite.

use std::fs;
use std::path::Path;

use gkdv_core::flows::{
    airy_propagate, duality_relations_check, invariant_linv, u_flow_evolve, v_flow_evolve, Frame, LinearFlowOptions,
    Sponge, Trajectory,
};
use gkdv_core::grid::inner_product;
use gkdv_core::io::{
    write_conserved, write_json, write_modulation_log, write_norm_report, write_scatter_report, write_snapshot,
    write_spectrum, write_trajectory,
};
use gkdv_core::linop::{project_perp_qprime, LinearizedOperator};
use gkdv_core::modulation::{coupled_evolve, decompose_with, CoupledOptions, CoupledRun, DecomposeOptions};
use gkdv_core::noise::smooth_random_field;
use gkdv_core::norms::{besov_report, critical_besov, j_functional, p_variation, strichartz_norm, DyadicDecomposition, PathFamily};
use gkdv_core::scattering::{forward_scatter, inverse_wave, InverseOptions};
use gkdv_core::soliton::{mass_formula, mass_numeric, Profiles, SolitonParams};
use gkdv_core::virial::{eta_identity_defects, i_eta};
use gkdv_core::{Field, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::{Check, LabResult};

pub fn run_recipe(cfg: &ExperimentConfig, dir: &Path) -> LabResult<Vec<Check>> {
    match cfg.experiment {
        Experiment::Spectrum => spectrum(cfg, dir),
        Experiment::Identities => identities(cfg, dir),
        Experiment::LinearFlows => linear_flows(cfg, dir),
        Experiment::Stability => stability(cfg, dir),
        Experiment::Scatter => scatter(cfg, dir),
        Experiment::Inverse => inverse(cfg, dir),
        Experiment::Norms => norms(cfg, dir),
    }
}

fn grid(cfg: &ExperimentConfig) -> LabResult<GridSpec> {
    Ok(GridSpec::new(cfg.grid.n, cfg.grid.length)?)
}

fn soliton(cfg: &ExperimentConfig) -> LabResult<SolitonParams> {
    Ok(SolitonParams::new(cfg.soliton.c, cfg.soliton.y)?)
}

fn sponge(cfg: &ExperimentConfig) -> Option<Sponge> {
    cfg.solver.sponge.then_some(Sponge { fraction: cfg.solver.sponge_fraction, strength: cfg.solver.sponge_strength })
}

fn dyadic(cfg: &ExperimentConfig, grid: GridSpec) -> LabResult<DyadicDecomposition> {
    Ok(DyadicDecomposition::new(grid, cfg.norms.dyadic_base, true)?)
}

/// Seeded band-limited noise of L² norm `perturbation.amplitude` around the soliton,
/// projected off `Q` and `Q′` when `perturbation.orthogonal` is set.
fn perturbation(cfg: &ExperimentConfig, pr: &Profiles) -> LabResult<Field> {
    let p = &cfg.perturbation;
    let center = pr.params.y() + p.offset;
    let mut f = smooth_random_field(*pr.q.grid(), &mut ChaCha8Rng::seed_from_u64(cfg.seed), p.kmax, center, p.width);
    if p.orthogonal {
        let a = inner_product(&f, &pr.q)? / inner_product(&pr.q, &pr.q)?;
        f = project_perp_qprime(&f.axpy(-a, &pr.q)?, pr.params)?;
        f = f.scale(1.0 / f.norm_l2());
    }
    Ok(f.scale(p.amplitude))
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> LabResult<()> {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn spectrum(cfg: &ExperimentConfig, dir: &Path) -> LabResult<Vec<Check>> {
    let g = grid(cfg)?;
    let params = soliton(cfg)?;
    let op = LinearizedOperator::new(params, g);
    let pairs = op.spectrum(3)?;
    write_spectrum(&dir.join("spectrum.csv"), &pairs)?;
    let c2 = params.c() * params.c();

    let q52 = op.profiles().q.map(|q| q.powf(2.5));
    let q52 = q52.scale(1.0 / q52.norm_l2());
    let e = &pairs[0].field;
    let e = e.scale(inner_product(e, &q52)?.signum());
    write_snapshot(&dir.join("ground_state.csv"), &e, 0.0)?;
    let pr = op.profiles();
    Ok(vec![
        Check::near("lambda0", pairs[0].value, -21.0 / 4.0 * c2, 1e-6),
        Check::at_most("ground_state_vs_Q^(5/2)", e.sub(&q52)?.norm_l2(), 1e-6),
        Check::near("lambda1", pairs[1].value, 0.0, 1e-6),
        Check::at_most("kernel_LQ'", op.apply(&pr.q1)?.norm_l2(), 1e-8),
        Check::at_most("generalized_kernel_LQtilde+2cQ", op.apply(&pr.tilde)?.axpy(2.0 * params.c(), &pr.q)?.norm_l2(), 1e-8).informational(),
    ])
}

fn identities(cfg: &ExperimentConfig, dir: &Path) -> LabResult<Vec<Check>> {
    let g = grid(cfg)?;
    let r = eta_identity_defects(g);
    write_json(&dir.join("identities.json"), &r)?;
    let tol = 1e-9;
    // the (η″/η′)² identity as commonly quoted is off by 2/3 vs 2/5; it is reported, not gated
    let mut checks = vec![
        Check::at_most("eta'=Q^3", r.d1_equals_q3, tol),
        Check::at_most("(eta''/eta')^2 quoted 2/3", r.log_derivative_sq_quoted, tol).informational(),
        Check::at_most("(eta''/eta')^2=9(1-(2/5)Q^3)", r.log_derivative_sq, tol),
        Check::at_most("eta'''/eta'=9(1-(3/5)Q^3)", r.d3_ratio, tol),
        Check::at_most("eta^2=(25/9)(1-(2/5)Q^3)", r.eta_sq, tol),
        Check::at_most("(Q^3 eta)'=-5Q^3+3Q^6", r.q3_eta_derivative, tol),
        Check::at_most("A=75/4-12Q^3 direct", r.a_direct, tol),
        Check::at_most("A from quoted identities", r.a_from_quoted, tol).informational(),
        Check::at_most("A from corrected identities", r.a_from_corrected, tol),
        Check::at_most("mass quadrature vs Gamma formula", (mass_numeric(g) - mass_formula()).abs(), 1e-8),
    ];
    let q1 = Profiles::new(SolitonParams::unit(), g).q.norm_l2();
    for c in [0.5, 2.0] {
        let pr = Profiles::new(SolitonParams::new(c, 0.0)?, g);
        let n = pr.q.norm_l2();
        checks.push(Check::at_most(&format!("|Q_c| scaling at c={c}"), (n - c.powf(1.0 / 6.0) * q1).abs(), 1e-10));
        checks.push(Check::at_most(&format!("<Qtilde_c,Q_c> - |Q_c|^2/6 at c={c}"), (inner_product(&pr.tilde, &pr.q)? - n * n / 6.0).abs(), 1e-10));
    }
    Ok(checks)
}

/// Explicit solutions at `c = 1` centered at `soliton.y`.
fn linear_flows(cfg: &ExperimentConfig, dir: &Path) -> LabResult<Vec<Check>> {
    let g = grid(cfg)?;
    let p = SolitonParams::new(1.0, cfg.soliton.y)?;
    let pr = Profiles::new(p, g);
    let t = cfg.solver.t_final;
    let opts = LinearFlowOptions { dt: cfg.solver.dt, snapshot_stride: cfg.solver.snapshot_stride, ..Default::default() };

    let u = u_flow_evolve(&pr.tilde, t, &opts, Frame::Frozen(p))?;
    let u_err = u.trajectory.last().sub(&pr.tilde.axpy(2.0 * t, &pr.q1)?)?.norm_l2();
    let v = v_flow_evolve(&pr.q, t, &opts, Frame::Frozen(p))?;
    let v_err = v.trajectory.last().sub(&pr.q)?.norm_l2();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u0 = smooth_random_field(g, &mut rng, 2.0, p.y() + 0.5, 2.5);
    let v0 = smooth_random_field(g, &mut rng, 2.0, p.y() - 0.5, 2.5);
    // 𝓛 amplifies the time error of the u-solution by k², so this relation gets a finer step
    let fine = LinearFlowOptions { dt: cfg.solver.dt / 4.0, snapshot_stride: 4 * cfg.solver.snapshot_stride, ..opts };
    let d = duality_relations_check(&u0, &v0, p, t / 2.0, &fine)?;
    write_json(&dir.join("duality.json"), &d)?;

    // ⟨𝓛⁻¹v, v⟩ for data orthogonal to Q̃ and Q′
    let raw = smooth_random_field(g, &mut rng, 2.0, p.y(), 3.0);
    let a = inner_product(&raw, &pr.tilde)? / inner_product(&pr.tilde, &pr.tilde)?;
    let w0 = project_perp_qprime(&raw.axpy(-a, &pr.tilde)?, p)?;
    let run = v_flow_evolve(&w0, t, &opts, Frame::Frozen(p))?;
    let linv = invariant_linv(&run.trajectory, &LinearizedOperator::new(p, g))?;
    write_trajectory(&dir.join("v_flow"), &run.trajectory, 1)?;
    write_csv(&dir.join("linv.csv"), "t,linv", run.trajectory.times().iter().zip(&linv).map(|(&t, &l)| vec![t, l]))?;
    let drift = linv.iter().map(|x| (x - linv[0]).abs()).fold(0.0, f64::max);

    Ok(vec![
        Check::at_most("u-flow from Qtilde vs Qtilde+2tQ'", u_err, 1e-6),
        Check::at_most("v-flow fixes Q", v_err, 1e-8),
        Check::at_most("dx intertwining", d.dx_intertwining, 1e-7),
        Check::at_most("L intertwining", d.l_intertwining, 1e-7),
        Check::at_most("adjoint pairing drift", d.adjoint_pairing_drift, 1e-7),
        Check::at_most("<L^-1 v, v> drift", drift, 1e-8),
    ])
}

/// Perturbed soliton, decomposed and evolved with the coupled system.
fn coupled_run(cfg: &ExperimentConfig) -> LabResult<CoupledRun> {
    let g = grid(cfg)?;
    let pr = Profiles::new(soliton(cfg)?, g);
    let psi0 = pr.q.add(&perturbation(cfg, &pr)?)?;
    let dopts = DecomposeOptions { tol: cfg.modulation.newton_tol, kappa: cfg.modulation.kappa, ..Default::default() };
    let s0 = decompose_with(&psi0, Some(pr.params), &dopts)?;
    let opts = CoupledOptions { dt: cfg.solver.dt, snapshot_stride: cfg.solver.snapshot_stride, sponge: sponge(cfg), ..Default::default() };
    Ok(coupled_evolve(&s0, cfg.solver.t_final, &opts)?)
}

#[derive(Serialize)]
struct StabilityDiagnostics {
    c0: f64,
    sup_c_deviation: f64,
    sup_y_minus_c2t_deviation: f64,
    max_orthogonality_residual: f64,
    mass_drift: f64,
    energy_drift: f64,
    i_eta_monotone: bool,
    i_eta_increases: usize,
    i_eta_max_increase: f64,
}

fn stability(cfg: &ExperimentConfig, dir: &Path) -> LabResult<Vec<Check>> {
    let run = coupled_run(cfg)?;
    write_trajectory(&dir.join("remainder"), &run.remainder_trajectory()?, 1)?;
    write_conserved(&dir.join("conserved.csv"), &run.conserved)?;
    write_modulation_log(&dir.join("modulation.csv"), &run)?;

    // I_η of the remainder in the soliton frame, with a centered-difference rate
    let times: Vec<f64> = run.states.iter().map(|s| s.t).collect();
    let ieta = run.states.iter().map(|s| i_eta(&s.w, s.y)).collect::<gkdv_core::Result<Vec<f64>>>()?;
    let n = ieta.len();
    let rate: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            if a == b { 0.0 } else { (ieta[b] - ieta[a]) / (times[b] - times[a]) }
        })
        .collect();
    write_csv(&dir.join("i_eta.csv"), "t,i_eta,d_i_eta_dt", (0..n).map(|k| vec![times[k], ieta[k], rate[k]]))?;
    let scale = ieta.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let increases: Vec<f64> = ieta.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 1e-12 * scale).collect();

    let c0 = run.states[0].c;
    let y0 = run.states[0].y;
    let (m0, e0) = (run.conserved[0].mass, run.conserved[0].energy);
    let diag = StabilityDiagnostics {
        c0,
        sup_c_deviation: run.log.iter().map(|l| (l.c - c0).abs()).fold(0.0, f64::max),
        sup_y_minus_c2t_deviation: run.states.iter().map(|s| (s.y - y0 - c0 * c0 * s.t).abs()).fold(0.0, f64::max),
        max_orthogonality_residual: run.states.iter().map(|s| s.residuals.0.abs().max(s.residuals.1.abs())).fold(0.0, f64::max),
        mass_drift: run.conserved.iter().map(|c| (c.mass - m0).abs()).fold(0.0, f64::max),
        energy_drift: run.conserved.iter().map(|c| (c.energy - e0).abs()).fold(0.0, f64::max),
        i_eta_monotone: increases.is_empty(),
        i_eta_increases: increases.len(),
        i_eta_max_increase: increases.iter().copied().fold(0.0, f64::max),
    };
    write_json(&dir.join("diagnostics.json"), &diag)?;

    let conservation = |name: &str, v: f64| {
        let c = Check::at_most(name, v, 1e-6);
        // the sponge removes mass by design
        if cfg.solver.sponge { c.informational() } else { c }
    };
    Ok(vec![
        Check::at_most("sup |c(t) - c0|", diag.sup_c_deviation, 5e-3),
        conservation("mass drift", diag.mass_drift),
        conservation("energy drift", diag.energy_drift),
        Check::at_least("I_eta nonincreasing (1 = yes)", f64::from(u8::from(diag.i_eta_monotone)), 1.0).informational(),
    ])
}

fn scatter(cfg: &ExperimentConfig, dir: &Path) -> LabResult<Vec<Check>> {
    let run = coupled_run(cfg)?;
    let dec = dyadic(cfg, grid(cfg)?)?;
    let rep = forward_scatter(&run, cfg.scatter.window, &dec)?;
    write_scatter_report(dir, "scatter", &rep)?;
    write_snapshot(&dir.join("z0.csv"), rep.z0(), 0.0)?;
    write_conserved(&dir.join("conserved.csv"), &run.conserved)?;
    write_modulation_log(&dir.join("modulation.csv"), &run)?;
    let t = cfg.solver.t_final;
    Ok(vec![
        Check::at_least("residual(T/4) / residual(T)", rep.residual_at(t / 4.0) / rep.residual_at(t), 5.0),
        Check::at_least("converged (1 = yes)", f64::from(u8::from(rep.converged)), 1.0).informational(),
    ])
}

#[derive(Serialize)]
struct InverseSummary {
    horizon: f64,
    y_terminal: f64,
    c_at_zero: f64,
    y_at_zero: f64,
    v0_besov: f64,
    mass_defect: f64,
    relative_mass_defect: f64,
    monotone: bool,
    shooting: Vec<[f64; 3]>,
    round_trip_l2: Option<f64>,
}

fn inverse(cfg: &ExperimentConfig, dir: &Path) -> LabResult<Vec<Check>> {
    let g = grid(cfg)?;
    let c_inf = cfg.scatter.c_inf;
    let y0 = cfg.soliton.y;
    let pr = Profiles::new(SolitonParams::new(c_inf, y0)?, g);
    let v0 = perturbation(cfg, &pr)?;
    write_snapshot(&dir.join("v0.csv"), &v0, 0.0)?;
    let opts = InverseOptions {
        dt: cfg.solver.dt,
        snapshot_stride: cfg.solver.snapshot_stride,
        sponge: sponge(cfg),
        tol: cfg.scatter.shooting_tol,
        bracket: cfg.scatter.bracket,
        delta: cfg.scatter.delta,
        ..Default::default()
    };
    let s = cfg.scatter.horizon;
    let inv = inverse_wave(&v0, c_inf, y0, s, &opts)?;
    write_snapshot(&dir.join("psi0.csv"), &inv.psi0, 0.0)?;

    let round_trip = if cfg.scatter.round_trip {
        let copts = CoupledOptions { dt: cfg.solver.dt, snapshot_stride: cfg.solver.snapshot_stride, sponge: None, ..Default::default() };
        let back = coupled_evolve(&inv.state0, s, &copts)?;
        let rep = forward_scatter(&back, cfg.scatter.window, &dyadic(cfg, g)?)?;
        write_scatter_report(dir, "round_trip", &rep)?;
        Some(rep.z0().sub(&v0)?.norm_l2() / v0.norm_l2())
    } else {
        None
    };

    let summary = InverseSummary {
        horizon: s,
        y_terminal: inv.y_terminal,
        c_at_zero: inv.state0.c,
        y_at_zero: inv.state0.y,
        v0_besov: inv.v0_besov,
        mass_defect: inv.mass_defect,
        relative_mass_defect: inv.relative_mass_defect(),
        monotone: inv.monotone,
        shooting: inv.log.iter().map(|l| [l.y_terminal, l.y_at_zero, l.c_at_zero]).collect(),
        round_trip_l2: round_trip,
    };
    write_json(&dir.join("inverse.json"), &summary)?;

    let mut checks = vec![
        Check::at_most("relative mass identity defect", summary.relative_mass_defect, 1e-2),
        Check::near("y(0)", inv.state0.y, y0, cfg.scatter.shooting_tol),
        Check::at_least("shooting monotone (1 = yes)", f64::from(u8::from(inv.monotone)), 1.0).informational(),
    ];
    if let Some(r) = round_trip {
        checks.push(Check::at_most("forward(inverse(v0)) vs v0 (relative L2)", r, 0.05));
    }
    Ok(checks)
}

/// Every chain of indices, the oracle for the dynamic program.
fn brute_force_variation(s: &[f64], p: f64) -> f64 {
    let mut best = 0.0f64;
    for mask in 0u32..(1 << s.len()) {
        let idx: Vec<usize> = (0..s.len()).filter(|i| mask >> i & 1 == 1).collect();
        let sum: f64 = idx.windows(2).map(|w| (s[w[1]] - s[w[0]]).abs().powf(p)).sum();
        best = best.max(sum);
    }
    best.powf(1.0 / p)
}

#[derive(Serialize)]
struct NormsSummary {
    critical_besov_base2: f64,
    critical_besov_configured_base: f64,
    j_full: f64,
    j_second_half: f64,
    strichartz_l6l6: f64,
    variation_series: usize,
    variation_mismatches: usize,
    variation_monotone_violations: usize,
}

fn norms(cfg: &ExperimentConfig, dir: &Path) -> LabResult<Vec<Check>> {
    let g = grid(cfg)?;
    let params = soliton(cfg)?;
    let pr = Profiles::new(params, g);
    let dec = dyadic(cfg, g)?;
    let n = &cfg.norms;
    let rep = besov_report(&pr.q, n.besov_s, n.besov_p.0, n.besov_q.0, &dec, None)?;
    write_norm_report(&dir.join("besov_Q.json"), &rep)?;
    let b2 = critical_besov(&pr.q, &DyadicDecomposition::new(g, 2.0, true)?)?;
    let bc = critical_besov(&pr.q, &dec)?;

    // free Airy evolution of the configured perturbation, exact in time
    let u0 = perturbation(cfg, &pr)?;
    let steps = ((cfg.solver.t_final / cfg.solver.dt).round() as usize).clamp(1, 2000);
    let times: Vec<f64> = (0..=steps).map(|k| cfg.solver.t_final * k as f64 / steps as f64).collect();
    let states: Vec<Field> = times.iter().map(|&t| airy_propagate(&u0, t)).collect();
    let traj = Trajectory::from_states(times, states, "airy_exact", cfg.solver.t_final / steps as f64)?;
    let family = PathFamily::default();
    let j_full = j_functional(&traj, 0.0, &dec, &family, n.epsilon)?;
    let j_half = j_functional(&traj, cfg.solver.t_final / 2.0, &dec, &family, n.epsilon)?;
    write_json(&dir.join("j_functional.json"), &[&j_full, &j_half])?;
    let strichartz = strichartz_norm(&traj, 6.0, 6.0, false)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let series = 200;
    let (mut mismatches, mut violations) = (0, 0);
    for _ in 0..series {
        let len = rng.random_range(1..=10);
        let s: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = rng.random_range(1.0..6.0);
        let vp = p_variation(&s, p, false)?;
        if vp != brute_force_variation(&s, p) {
            mismatches += 1;
        }
        if p_variation(&s, p + rng.random_range(0.0..2.0), false)? > vp * (1.0 + 1e-12) {
            violations += 1;
        }
    }

    let summary = NormsSummary {
        critical_besov_base2: b2,
        critical_besov_configured_base: bc,
        j_full: j_full.value,
        j_second_half: j_half.value,
        strichartz_l6l6: strichartz,
        variation_series: series,
        variation_mismatches: mismatches,
        variation_monotone_violations: violations,
    };
    write_json(&dir.join("norms.json"), &summary)?;
    Ok(vec![
        Check::at_most("V^p DP vs brute force mismatches", mismatches as f64, 0.0),
        Check::at_most("V^p monotonicity violations", violations as f64, 0.0),
        Check::at_most("critical Besov base sensitivity (relative)", (bc - b2).abs() / b2, 0.1).informational(),
        Check::at_most("J second half / J full", j_half.value / j_full.value, 1.0),
    ])
}
