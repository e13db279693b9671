//! Browser bindings for three operations of `gkdv-core`: the soliton profile with the
//! lowest eigenvalues of its linearized operator, a perturbed-soliton gKdV simulation,
//! and the p-variation of a series. The logic lives in [`demo`] and is tested natively;
//! the exported functions only convert errors to JS exceptions.

use wasm_bindgen::prelude::*;

pub mod demo {
    use gkdv_core::flows::{energy, gkdv_evolve, mass, GkdvOptions};
    use gkdv_core::linop::LinearizedOperator;
    use gkdv_core::modulation::decompose;
    use gkdv_core::noise::smooth_random_field;
    use gkdv_core::norms::p_variation;
    use gkdv_core::soliton::profile;
    use gkdv_core::{Field, GridSpec, Result, SolitonParams};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn grid_points(n: usize, length: f64) -> Result<Vec<f64>> {
        Ok(GridSpec::new(n, length)?.points())
    }

    pub fn soliton_profile(c: f64, n: usize, length: f64) -> Result<Vec<f64>> {
        Ok(profile(SolitonParams::new(c, 0.0)?, GridSpec::new(n, length)?).values().to_vec())
    }

    /// The `k` lowest eigenvalues of `𝓛 = −∂² + c² − 4Q_c³` (dense solve, so keep `n` ≤ 512).
    pub fn lowest_eigenvalues(c: f64, n: usize, length: f64, k: usize) -> Result<Vec<f64>> {
        let op = LinearizedOperator::new(SolitonParams::new(c, 0.0)?, GridSpec::new(n, length)?);
        Ok(op.spectrum(k)?.into_iter().map(|p| p.value).collect())
    }

    pub fn variation(series: &[f64], p: f64) -> Result<f64> {
        p_variation(series, p, false)
    }

    /// A soliton `Q_{c,y}` plus seeded band-limited noise, advanced in chunks.
    pub struct Simulation {
        psi: Field,
        t: f64,
    }

    impl Simulation {
        pub fn new(n: usize, length: f64, c: f64, y: f64, amplitude: f64, seed: u64) -> Result<Simulation> {
            let grid = GridSpec::new(n, length)?;
            let noise = smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(seed), 1.5, y, 2.0);
            let psi = profile(SolitonParams::new(c, y)?, grid).axpy(amplitude, &noise)?;
            Ok(Simulation { psi, t: 0.0 })
        }

        pub fn advance(&mut self, duration: f64, dt: f64) -> Result<()> {
            let opts = GkdvOptions { dt, snapshot_stride: usize::MAX, sponge: None };
            let traj = gkdv_evolve(&self.psi, duration, &opts)?;
            self.psi = traj.last().clone();
            self.t += duration;
            Ok(())
        }

        pub fn values(&self) -> &[f64] {
            self.psi.values()
        }

        pub fn time(&self) -> f64 {
            self.t
        }

        pub fn mass(&self) -> f64 {
            mass(&self.psi)
        }

        pub fn energy(&self) -> f64 {
            energy(&self.psi)
        }

        /// `[c, y]` of the nearest soliton, or NaNs when the state is too far from one.
        pub fn modulation(&self) -> [f64; 2] {
            decompose(&self.psi, None).map_or([f64::NAN; 2], |s| [s.c, s.y])
        }
    }
}

fn js(e: gkdv_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn grid_points(n: usize, length: f64) -> Result<Vec<f64>, JsError> {
    demo::grid_points(n, length).map_err(js)
}

#[wasm_bindgen]
pub fn soliton_profile(c: f64, n: usize, length: f64) -> Result<Vec<f64>, JsError> {
    demo::soliton_profile(c, n, length).map_err(js)
}

#[wasm_bindgen]
pub fn lowest_eigenvalues(c: f64, n: usize, length: f64, k: usize) -> Result<Vec<f64>, JsError> {
    demo::lowest_eigenvalues(c, n, length, k).map_err(js)
}

#[wasm_bindgen]
pub fn p_variation(series: &[f64], p: f64) -> Result<f64, JsError> {
    demo::variation(series, p).map_err(js)
}

#[wasm_bindgen]
pub struct Simulation(demo::Simulation);

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, length: f64, c: f64, y: f64, amplitude: f64, seed: u64) -> Result<Simulation, JsError> {
        demo::Simulation::new(n, length, c, y, amplitude, seed).map(Simulation).map_err(js)
    }

    pub fn advance(&mut self, duration: f64, dt: f64) -> Result<(), JsError> {
        self.0.advance(duration, dt).map_err(js)
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    pub fn time(&self) -> f64 {
        self.0.time()
    }

    pub fn mass(&self) -> f64 {
        self.0.mass()
    }

    pub fn energy(&self) -> f64 {
        self.0.energy()
    }

    pub fn modulation(&self) -> Vec<f64> {
        self.0.modulation().to_vec()
    }
}
