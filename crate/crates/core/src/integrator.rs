//! Fourth-order exponential time differencing (Cox–Matthews ETDRK4) for diagonal
//! linear parts, with φ-function coefficients evaluated by contour averaging
//! (Kassam–Trefethen, 32 points on a unit circle). Scalar ODE components ride along
//! with `L = 0`, where the scheme reduces to classical RK4.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::Fft;

use crate::grid::fft_plans;

const CONTOUR_POINTS: usize = 32;

/// Right-hand side `N(t, û, a)` of `ûₜ = L û + N`, `aₜ = N_a`.
pub trait SemiLinear {
    fn nonlinear(&mut self, t: f64, u: &[Complex64], aux: &[f64], du: &mut [Complex64], daux: &mut [f64]);
}

pub struct Etdrk4 {
    h: f64,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
    scratch: Scratch,
}

#[derive(Default)]
struct Scratch {
    nu: Vec<Complex64>,
    na: Vec<Complex64>,
    nb: Vec<Complex64>,
    nc: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    xnu: Vec<f64>,
    xna: Vec<f64>,
    xnb: Vec<f64>,
    xnc: Vec<f64>,
    xa: Vec<f64>,
    xb: Vec<f64>,
    xc: Vec<f64>,
}

impl Etdrk4 {
    pub fn new(linear: &[Complex64], h: f64) -> Self {
        let n = linear.len();
        let mut s = Etdrk4 {
            h,
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
            scratch: Scratch::default(),
        };
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let m = CONTOUR_POINTS as f64;
        for &l in linear {
            let z = l * h;
            s.e.push(z.exp());
            s.e2.push((z * 0.5).exp());
            let (mut q, mut f1, mut f2, mut f3) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
            for &r0 in &roots {
                let r = z + r0;
                let er = r.exp();
                let r3 = r * r * r;
                q += ((r * 0.5).exp() - 1.0) / r;
                f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
                f2 += (2.0 + r + er * (r - 2.0)) / r3;
                f3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
            }
            s.q.push(q * (h / m));
            s.f1.push(f1 * (h / m));
            s.f2.push(f2 * (h / m));
            s.f3.push(f3 * (h / m));
        }
        s
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Advances `(u, aux)` from `t` to `t + h` in place.
    pub fn step(&mut self, sys: &mut impl SemiLinear, t: f64, u: &mut [Complex64], aux: &mut [f64]) {
        let n = u.len();
        let na = aux.len();
        let h = self.h;
        let sc = &mut self.scratch;
        for v in [&mut sc.nu, &mut sc.na, &mut sc.nb, &mut sc.nc, &mut sc.a, &mut sc.b, &mut sc.c] {
            v.resize(n, Complex64::default());
        }
        for v in [&mut sc.xnu, &mut sc.xna, &mut sc.xnb, &mut sc.xnc, &mut sc.xa, &mut sc.xb, &mut sc.xc] {
            v.resize(na, 0.0);
        }

        sys.nonlinear(t, u, aux, &mut sc.nu, &mut sc.xnu);
        for k in 0..n {
            sc.a[k] = self.e2[k] * u[k] + self.q[k] * sc.nu[k];
        }
        for k in 0..na {
            sc.xa[k] = aux[k] + 0.5 * h * sc.xnu[k];
        }
        sys.nonlinear(t + 0.5 * h, &sc.a, &sc.xa, &mut sc.na, &mut sc.xna);
        for k in 0..n {
            sc.b[k] = self.e2[k] * u[k] + self.q[k] * sc.na[k];
        }
        for k in 0..na {
            sc.xb[k] = aux[k] + 0.5 * h * sc.xna[k];
        }
        sys.nonlinear(t + 0.5 * h, &sc.b, &sc.xb, &mut sc.nb, &mut sc.xnb);
        for k in 0..n {
            sc.c[k] = self.e2[k] * sc.a[k] + self.q[k] * (2.0 * sc.nb[k] - sc.nu[k]);
        }
        for k in 0..na {
            sc.xc[k] = aux[k] + h * sc.xnb[k];
        }
        sys.nonlinear(t + h, &sc.c, &sc.xc, &mut sc.nc, &mut sc.xnc);
        for k in 0..n {
            u[k] = self.e[k] * u[k]
                + self.f1[k] * sc.nu[k]
                + 2.0 * self.f2[k] * (sc.na[k] + sc.nb[k])
                + self.f3[k] * sc.nc[k];
        }
        for k in 0..na {
            aux[k] += h / 6.0 * (sc.xnu[k] + 2.0 * (sc.xna[k] + sc.xnb[k]) + sc.xnc[k]);
        }
    }
}

/// Zero-padded transforms between `n` spectral coefficients and `factor·n` physical
/// samples of the trigonometric interpolant. The Nyquist coefficient is dropped.
pub struct Padded {
    n: usize,
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl Padded {
    pub fn new(n: usize, factor: usize) -> Self {
        let m = n * factor;
        let (fwd, inv) = fft_plans(m);
        Padded { n, m, fwd, inv, buf: vec![Complex64::default(); m] }
    }

    pub fn fine_len(&self) -> usize {
        self.m
    }

    pub fn to_physical(&mut self, uhat: &[Complex64], out: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        self.buf.iter_mut().for_each(|c| *c = Complex64::default());
        let half = n / 2;
        self.buf[..half].copy_from_slice(&uhat[..half]);
        self.buf[m - half + 1..].copy_from_slice(&uhat[half + 1..]);
        self.inv.process(&mut self.buf);
        let s = 1.0 / n as f64;
        for (o, c) in out.iter_mut().zip(&self.buf) {
            *o = c.re * s;
        }
    }

    pub fn to_spectral(&mut self, vals: &[f64], out: &mut [Complex64]) {
        let (n, m) = (self.n, self.m);
        for (b, &v) in self.buf.iter_mut().zip(vals) {
            *b = Complex64::new(v, 0.0);
        }
        self.fwd.process(&mut self.buf);
        let s = n as f64 / m as f64;
        let half = n / 2;
        for k in 0..half {
            out[k] = self.buf[k] * s;
        }
        out[half] = Complex64::default();
        for k in half + 1..n {
            out[k] = self.buf[m - n + k] * s;
        }
    }
}
