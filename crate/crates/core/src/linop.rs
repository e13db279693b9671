//! The linearized operator `𝓛_{c,y} = −∂ₓ² + c² − 4Q³_{c,y}`.
//!
//! Dense representations are assembled from the circulant spectral second-derivative
//! matrix, so they agree with [`LinearizedOperator::apply`] to rounding. The bordered
//! factorization `[[𝓛, Q′], [Q′ᵀ, 0]]` is built once per operator.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{derivative, forward_transform, inner_product, inverse_transform, sobolev_norm, Field, GridSpec};
use crate::noise::smooth_random_field;
use crate::soliton::{Profiles, SolitonParams};

pub struct LinearizedOperator {
    params: SolitonParams,
    grid: GridSpec,
    potential: Field,
    profiles: Profiles,
    bordered: OnceLock<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenPair {
    pub value: f64,
    #[serde(skip)]
    pub field: Field,
    /// `‖𝓛e − λe‖_{L²}` with `𝓛` applied spectrally.
    pub residual: f64,
}

impl LinearizedOperator {
    pub fn new(params: SolitonParams, grid: GridSpec) -> Self {
        let profiles = Profiles::new(params, grid);
        let potential = profiles.q.map(|q| 4.0 * q * q * q);
        LinearizedOperator { params, grid, potential, profiles, bordered: OnceLock::new() }
    }

    pub fn params(&self) -> SolitonParams {
        self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The cached potential `4Q³`.
    pub fn potential(&self) -> &Field {
        &self.potential
    }

    pub fn profiles(&self) -> &Profiles {
        &self.profiles
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        let d2 = derivative(f, 2)?;
        let c2 = self.params.c() * self.params.c();
        let v: Vec<f64> = (0..self.grid.n())
            .map(|i| -d2.values()[i] + (c2 - self.potential.values()[i]) * f.values()[i])
            .collect();
        Ok(Field::from_raw(self.grid, v))
    }

    /// `⟨𝓛w, w⟩`.
    pub fn quadratic_form(&self, w: &Field) -> Result<f64> {
        inner_product(&self.apply(w)?, w)
    }

    /// `K(w) = ∫ ½w′² + ½c²w² − 2Q³w² dx`, evaluated from `w′` directly.
    pub fn quadratic_form_k(&self, w: &Field) -> Result<f64> {
        self.grid.check_same(w.grid())?;
        let d = derivative(w, 1)?;
        let c2 = self.params.c() * self.params.c();
        let dx = self.grid.dx();
        let s: f64 = (0..self.grid.n())
            .map(|i| {
                let (wi, di) = (w.values()[i], d.values()[i]);
                0.5 * di * di + 0.5 * c2 * wi * wi - 0.5 * self.potential.values()[i] * wi * wi
            })
            .sum();
        Ok(dx * s)
    }

    /// Dense symmetric matrix of the discretized operator acting on sample vectors.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.grid.n();
        // first column of the circulant −∂ₓ²
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let col = inverse_transform(
            &forward_transform(&Field::from_raw(self.grid, e0)).multiply(|xi, _| Complex64::new(xi * xi, 0.0)),
        );
        let kernel: Vec<f64> = (0..n).map(|k| 0.5 * (col.values()[k] + col.values()[(n - k) % n])).collect();
        let c2 = self.params.c() * self.params.c();
        DMatrix::from_fn(n, n, |i, j| {
            let mut v = kernel[(i + n - j) % n];
            if i == j {
                v += c2 - self.potential.values()[i];
            }
            v
        })
    }

    /// The `k` lowest eigenpairs of the dense discretization, L²-normalized.
    pub fn spectrum(&self, k: usize) -> Result<Vec<EigenPair>> {
        if k == 0 || k > 20 {
            return Err(Error::param("k", format!("{k} not in 1..=20")));
        }
        let eig = self.matrix().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.grid.n()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let center = self.center_index();
        let scale = 1.0 / self.grid.dx().sqrt();
        let mut out = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            let value = eig.eigenvalues[idx];
            let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().map(|x| x * scale).collect();
            let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let sign_probe = if v[center].abs() > 1e-6 * peak {
                v[center]
            } else {
                // odd about the center: fix the slope there instead
                v[(center + 1) % v.len()] - v[(center + v.len() - 1) % v.len()]
            };
            if sign_probe < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            let field = Field::new(self.grid, v)?;
            let residual = self.apply(&field)?.axpy(-value, &field)?.norm_l2();
            if !residual.is_finite() || residual > 1e-6 * (1.0 + value.abs()) {
                return Err(Error::NoConvergence { iterations: 0, residual });
            }
            out.push(EigenPair { value, field, residual });
        }
        Ok(out)
    }

    fn center_index(&self) -> usize {
        let g = &self.grid;
        let d = g.wrap(self.params.y() + 0.5 * g.length());
        let i = ((d + 0.5 * g.length()) / g.dx()).round() as usize;
        i % g.n()
    }

    fn bordered(&self) -> &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
        self.bordered.get_or_init(|| {
            let n = self.grid.n();
            let m = self.matrix();
            let qp = self.profiles.q1.values();
            let b = DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
                (true, true) => m[(i, j)],
                (true, false) => qp[i],
                (false, true) => qp[j],
                (false, false) => 0.0,
            });
            b.lu()
        })
    }

    /// Moore–Penrose solve: `u ⊥ Q′` with `𝓛u = P^⊥_{Q′} f`.
    pub fn pinv_solve(&self, f: &Field) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        let n = self.grid.n();
        let rhs = project_perp_qprime_with(f, &self.profiles.q1)?;
        let fnorm = f.norm_l2();
        if fnorm == 0.0 {
            return Ok(Field::zeros(self.grid));
        }
        let lu = self.bordered();
        let mut b = DVector::from_iterator(n + 1, rhs.values().iter().copied().chain(std::iter::once(0.0)));
        let mut sol = DVector::zeros(n + 1);
        let m = self.matrix_times_bordered_closure();
        for _ in 0..3 {
            let step = lu.solve(&b).ok_or(Error::SolverBreakdown { residual: f64::INFINITY })?;
            sol += step;
            let r = m(&sol);
            b = DVector::from_iterator(
                n + 1,
                rhs.values().iter().copied().chain(std::iter::once(0.0)),
            ) - r;
            if b.rows(0, n).norm() * self.grid.dx().sqrt() <= 1e-13 * fnorm {
                break;
            }
        }
        let u = Field::new(self.grid, sol.rows(0, n).iter().copied().collect())?;
        let residual = self.apply(&u)?.sub(&rhs)?.norm_l2();
        if residual > 1e-9 * fnorm {
            return Err(Error::SolverBreakdown { residual });
        }
        Ok(u)
    }

    fn matrix_times_bordered_closure(&self) -> impl Fn(&DVector<f64>) -> DVector<f64> + '_ {
        let n = self.grid.n();
        move |x: &DVector<f64>| {
            let u = Field::from_raw(self.grid, x.rows(0, n).iter().copied().collect());
            let lu = self.apply(&u).expect("same grid");
            let qp = self.profiles.q1.values();
            let mu = x[n];
            let top = lu.values().iter().zip(qp).map(|(a, q)| a + mu * q);
            let last: f64 = x.rows(0, n).iter().zip(qp).map(|(a, q)| a * q).sum();
            DVector::from_iterator(n + 1, top.chain(std::iter::once(last)))
        }
    }

    /// `⟨𝓛⁺v, v⟩`.
    pub fn inverse_form(&self, v: &Field) -> Result<f64> {
        inner_product(&self.pinv_solve(v)?, v)
    }

    /// Spot check of `‖P^⊥_{Q′}u‖_{H²} ≤ C‖𝓛u‖_{L²}` on random smooth data; returns the
    /// largest observed ratio.
    pub fn resolvent_constant(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let u = smooth_random_field(self.grid, &mut rng, 4.0, self.params.y(), 6.0);
            let pu = project_perp_qprime_with(&u, &self.profiles.q1)?;
            let lu = self.apply(&u)?.norm_l2();
            if lu > 0.0 {
                worst = worst.max(sobolev_norm(&pu, 2.0) / lu);
            }
        }
        Ok(worst)
    }
}

fn project_perp_qprime_with(f: &Field, qp: &Field) -> Result<Field> {
    let a = inner_product(f, qp)? / inner_product(qp, qp)?;
    f.axpy(-a, qp)
}

/// `P^⊥_{Q′} f = f − ⟨f,Q′⟩/⟨Q′,Q′⟩ Q′`.
pub fn project_perp_qprime(f: &Field, params: SolitonParams) -> Result<Field> {
    let pr = Profiles::new(params, *f.grid());
    project_perp_qprime_with(f, &pr.q1)
}

/// `P̃ f = f − ⟨f,Q⟩/⟨Q,Q̃⟩ Q̃`.
pub fn project_tilde(f: &Field, params: SolitonParams) -> Result<Field> {
    let pr = Profiles::new(params, *f.grid());
    let a = inner_product(f, &pr.q)? / inner_product(&pr.q, &pr.tilde)?;
    f.axpy(-a, &pr.tilde)
}

/// `K(w)` at the unit soliton.
pub fn quadratic_form_k(w: &Field) -> Result<f64> {
    LinearizedOperator::new(SolitonParams::unit(), *w.grid()).quadratic_form_k(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::profile;

    fn op() -> LinearizedOperator {
        LinearizedOperator::new(SolitonParams::unit(), GridSpec::new(256, 40.0).unwrap())
    }

    #[test]
    fn kernel_and_generalized_kernel() {
        let l = LinearizedOperator::new(SolitonParams::unit(), GridSpec::standard());
        let pr = l.profiles();
        assert!(l.apply(&pr.q1).unwrap().norm_l2() < 1e-8);
        let lt = l.apply(&pr.tilde).unwrap();
        assert!(lt.axpy(2.0, &pr.q).unwrap().norm_l2() < 1e-8);
        let ground = pr.q.map(|q| q.powf(2.5));
        let lg = l.apply(&ground).unwrap();
        assert!(lg.axpy(21.0 / 4.0, &ground).unwrap().norm_l2() < 1e-8);
    }

    #[test]
    fn scaled_identities() {
        let c = 1.3;
        let l = LinearizedOperator::new(SolitonParams::new(c, 2.0).unwrap(), GridSpec::standard());
        let pr = l.profiles();
        assert!(l.apply(&pr.q1).unwrap().norm_l2() < 1e-7);
        let lt = l.apply(&pr.tilde).unwrap();
        assert!(lt.axpy(2.0 * c * c, &pr.q).unwrap().norm_l2() < 1e-7);
    }

    #[test]
    fn matrix_columns_match_apply() {
        let l = op();
        let m = l.matrix();
        let g = *l.grid();
        for j in [0usize, 17, 128, 255] {
            let mut e = vec![0.0; g.n()];
            e[j] = 1.0;
            let col = l.apply(&Field::new(g, e).unwrap()).unwrap();
            for i in 0..g.n() {
                assert!((m[(i, j)] - col.values()[i]).abs() < 1e-10);
            }
        }
        assert_eq!(m.transpose(), m);
    }

    #[test]
    fn k_form_two_routes_agree() {
        let l = op();
        let g = *l.grid();
        let w = Field::from_fn(g, |x| (-(x - 0.5) * (x - 0.5)).exp() * (1.0 + x)).unwrap();
        let a = l.quadratic_form_k(&w).unwrap();
        let b = 0.5 * l.quadratic_form(&w).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        assert!(l.quadratic_form_k(&l.profiles().q1).unwrap().abs() < 1e-9);
    }

    #[test]
    fn projections() {
        let p = SolitonParams::unit();
        let g = GridSpec::new(256, 40.0).unwrap();
        let pr = Profiles::new(p, g);
        let f = Field::from_fn(g, |x| (-(x - 1.0).powi(2) / 3.0).exp()).unwrap();
        assert!(project_perp_qprime(&pr.q1, p).unwrap().max_abs() < 1e-12);
        let pt = project_tilde(&f, p).unwrap();
        assert!(inner_product(&pt, &pr.q).unwrap().abs() < 1e-10);
        let pp = project_perp_qprime(&f, p).unwrap();
        assert!(project_perp_qprime(&pp, p).unwrap().sub(&pp).unwrap().max_abs() < 1e-12);
        assert!(project_tilde(&pt, p).unwrap().sub(&pt).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn pinv_inverts_generalized_kernel() {
        let l = op();
        let pr = l.profiles();
        let u = l.pinv_solve(&pr.q.scale(-2.0)).unwrap();
        let target = project_perp_qprime(&pr.tilde, l.params()).unwrap();
        assert!(u.sub(&target).unwrap().norm_l2() < 1e-7);
        assert!(inner_product(&u, &pr.q1).unwrap().abs() < 1e-12);
        assert_eq!(l.pinv_solve(&Field::zeros(*l.grid())).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn profile_and_potential_agree() {
        let l = op();
        let q = profile(l.params(), *l.grid());
        assert!(l.potential().sub(&q.map(|v| 4.0 * v.powi(3))).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn spectrum_rejects_large_k() {
        assert!(op().spectrum(21).is_err());
        assert!(op().spectrum(0).is_err());
    }
}
