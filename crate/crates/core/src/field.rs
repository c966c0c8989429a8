//! Fields on the discretized cylinder and their angular Fourier modes.

use crate::error::{Error, Result};
use crate::quadrature::simpson_weights;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderGrid {
    pub m: usize,
    pub n: usize,
    pub hs: f64,
    pub htheta: f64,
}

impl CylinderGrid {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m < 3 || m % 2 == 0 {
            return Err(Error::InvalidGrid(format!("M = {m} must be odd and at least 3")));
        }
        if n < 4 || n % 2 == 1 {
            return Err(Error::InvalidGrid(format!("N = {n} must be even and at least 4")));
        }
        Ok(CylinderGrid {
            m,
            n,
            hs: 1.0 / (m - 1) as f64,
            htheta: 2.0 * PI / n as f64,
        })
    }

    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.hs
    }

    pub fn theta(&self, j: usize) -> f64 {
        -PI + j as f64 * self.htheta
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.theta(j)).collect()
    }

    pub fn s_nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.s(i)).collect()
    }

    /// Resolved angular wavenumbers, -N/2 ..= N/2 - 1.
    pub fn wavenumbers(&self) -> std::ops::Range<i32> {
        let half = (self.n / 2) as i32;
        -half..half
    }

    pub fn simpson(&self) -> Vec<f64> {
        simpson_weights(self.m, self.hs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Complex,
    Real,
}

/// Values at (s_i, theta_j), row-major with index i * N + j.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: CylinderGrid,
    pub kind: FieldKind,
    pub values: Vec<C64>,
}

impl Field {
    pub fn zeros(grid: CylinderGrid, kind: FieldKind) -> Self {
        Field {
            grid,
            kind,
            values: vec![C64::new(0.0, 0.0); grid.m * grid.n],
        }
    }

    pub fn from_fn(grid: CylinderGrid, kind: FieldKind, mut f: impl FnMut(f64, f64) -> C64) -> Self {
        let mut out = Field::zeros(grid, kind);
        for i in 0..grid.m {
            for j in 0..grid.n {
                let v = f(grid.s(i), grid.theta(j));
                out.values[i * grid.n + j] = if kind == FieldKind::Real { C64::new(v.re, 0.0) } else { v };
            }
        }
        out
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.grid.n + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.values[i * self.grid.n..(i + 1) * self.grid.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        let n = self.grid.n;
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Angular Fourier modes: for each n in -N/2 ..= N/2-1 a profile over the M
/// s-nodes. Storage index (n + N/2) * M + i.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeStack {
    pub grid: CylinderGrid,
    pub data: Vec<C64>,
}

impl ModeStack {
    pub fn zeros(grid: CylinderGrid) -> Self {
        ModeStack {
            grid,
            data: vec![C64::new(0.0, 0.0); grid.m * grid.n],
        }
    }

    fn offset(&self, n: i32) -> usize {
        let half = (self.grid.n / 2) as i32;
        assert!((-half..half).contains(&n), "wavenumber {n} not resolved");
        (n + half) as usize * self.grid.m
    }

    pub fn mode(&self, n: i32) -> &[C64] {
        let o = self.offset(n);
        &self.data[o..o + self.grid.m]
    }

    pub fn mode_mut(&mut self, n: i32) -> &mut [C64] {
        let o = self.offset(n);
        let m = self.grid.m;
        &mut self.data[o..o + m]
    }

    pub fn map_modes(&self, mut f: impl FnMut(i32, &[C64], &mut [C64])) -> ModeStack {
        let mut out = ModeStack::zeros(self.grid);
        for n in self.grid.wavenumbers() {
            let src = self.mode(n).to_vec();
            f(n, &src, out.mode_mut(n));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// L2 norm of the synthesized field, via Parseval.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.simpson();
        let mut acc = 0.0;
        for n in self.grid.wavenumbers() {
            acc += self.mode(n).iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>();
        }
        (2.0 * PI * acc).sqrt()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

fn parity(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// phi_n(s_i) = (1/2pi) sum_j f(s_i, theta_j) e^{-j n theta_j} h_theta.
pub fn analyze(f: &Field) -> ModeStack {
    let g = f.grid;
    let (fwd, _) = plans(g.n);
    let mut out = ModeStack::zeros(g);
    let mut buf = vec![C64::new(0.0, 0.0); g.n];
    let half = (g.n / 2) as i32;
    let scale = 1.0 / g.n as f64;
    for i in 0..g.m {
        buf.copy_from_slice(f.row(i));
        fwd.process(&mut buf);
        for n in -half..half {
            let bin = n.rem_euclid(g.n as i32) as usize;
            out.mode_mut(n)[i] = buf[bin] * (parity(n) * scale);
        }
    }
    out
}

/// Inverse of `analyze`. For real fields the conjugate-symmetric part is kept,
/// which drops the imaginary part of the Nyquist mode.
pub fn synthesize(modes: &ModeStack, kind: FieldKind) -> Field {
    let g = modes.grid;
    let (_, inv) = plans(g.n);
    let mut out = Field::zeros(g, kind);
    let mut buf = vec![C64::new(0.0, 0.0); g.n];
    let half = (g.n / 2) as i32;
    for i in 0..g.m {
        for n in -half..half {
            let bin = n.rem_euclid(g.n as i32) as usize;
            buf[bin] = modes.mode(n)[i] * parity(n);
        }
        inv.process(&mut buf);
        let row = out.row_mut(i);
        for (r, b) in row.iter_mut().zip(&buf) {
            *r = if kind == FieldKind::Real { C64::new(b.re, 0.0) } else { *b };
        }
    }
    out
}

/// Synthesize a single angular profile from per-wavenumber coefficients.
pub fn synthesize_profile(grid: &CylinderGrid, coeff: impl Fn(i32) -> C64, kind: FieldKind) -> Vec<C64> {
    let (_, inv) = plans(grid.n);
    let mut buf = vec![C64::new(0.0, 0.0); grid.n];
    for n in grid.wavenumbers() {
        let bin = n.rem_euclid(grid.n as i32) as usize;
        buf[bin] = coeff(n) * parity(n);
    }
    inv.process(&mut buf);
    if kind == FieldKind::Real {
        for b in &mut buf {
            b.im = 0.0;
        }
    }
    buf
}

/// Angular coefficients of a single profile.
pub fn analyze_profile(grid: &CylinderGrid, profile: &[C64]) -> Vec<C64> {
    let (fwd, _) = plans(grid.n);
    let mut buf = profile.to_vec();
    fwd.process(&mut buf);
    let mut out = vec![C64::new(0.0, 0.0); grid.n];
    for n in grid.wavenumbers() {
        let bin = n.rem_euclid(grid.n as i32) as usize;
        out[(n + (grid.n / 2) as i32) as usize] = buf[bin] * (parity(n) / grid.n as f64);
    }
    out
}

fn d_s(f: &Field) -> Field {
    let g = f.grid;
    let mut out = Field::zeros(g, f.kind);
    let h = g.hs;
    for j in 0..g.n {
        for i in 0..g.m {
            let v = if i == 0 {
                (-3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)) / (2.0 * h)
            } else if i == g.m - 1 {
                (3.0 * f.at(i, j) - 4.0 * f.at(i - 1, j) + f.at(i - 2, j)) / (2.0 * h)
            } else {
                (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * h)
            };
            out.values[i * g.n + j] = v;
        }
    }
    out
}

fn d_theta(f: &Field) -> Field {
    let g = f.grid;
    let mut out = Field::zeros(g, f.kind);
    for i in 0..g.m {
        for j in 0..g.n {
            let jp = (j + 1) % g.n;
            let jm = (j + g.n - 1) % g.n;
            out.values[i * g.n + j] = (f.at(i, jp) - f.at(i, jm)) / (2.0 * g.htheta);
        }
    }
    out
}

fn d_ss(f: &Field) -> Field {
    let g = f.grid;
    let mut out = Field::zeros(g, f.kind);
    let h2 = g.hs * g.hs;
    let m = g.m;
    for j in 0..g.n {
        for i in 0..m {
            let v = if i > 0 && i < m - 1 {
                f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)
            } else if m >= 4 {
                let (a, b, c, d) = if i == 0 { (0, 1, 2, 3) } else { (m - 1, m - 2, m - 3, m - 4) };
                2.0 * f.at(a, j) - 5.0 * f.at(b, j) + 4.0 * f.at(c, j) - f.at(d, j)
            } else {
                f.at(0, j) - 2.0 * f.at(1, j) + f.at(2, j)
            };
            out.values[i * g.n + j] = v / h2;
        }
    }
    out
}

fn d_thth(f: &Field) -> Field {
    let g = f.grid;
    let mut out = Field::zeros(g, f.kind);
    let h2 = g.htheta * g.htheta;
    for i in 0..g.m {
        for j in 0..g.n {
            let jp = (j + 1) % g.n;
            let jm = (j + g.n - 1) % g.n;
            out.values[i * g.n + j] = (f.at(i, jp) - 2.0 * f.at(i, j) + f.at(i, jm)) / h2;
        }
    }
    out
}

fn sq_l2(f: &Field) -> f64 {
    let g = f.grid;
    let w = g.simpson();
    let mut acc = 0.0;
    for i in 0..g.m {
        acc += w[i] * f.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    acc * g.htheta
}

/// Simpson in s, rectangle rule in theta.
pub fn l2_norm(f: &Field) -> f64 {
    sq_l2(f).sqrt()
}

pub fn h1_norm(f: &Field) -> f64 {
    (sq_l2(f) + sq_l2(&d_s(f)) + sq_l2(&d_theta(f))).sqrt()
}

pub fn h2_norm(f: &Field) -> f64 {
    let ds = d_s(f);
    (sq_l2(f) + sq_l2(&ds) + sq_l2(&d_theta(f)) + sq_l2(&d_ss(f)) + 2.0 * sq_l2(&d_theta(&ds)) + sq_l2(&d_thth(f)))
        .sqrt()
}

/// L2 norm over theta of one ring s = s_i.
pub fn ring_l2(f: &Field, i: usize) -> f64 {
    (f.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid.htheta).sqrt()
}

/// Three-point second differences in s and theta, one-sided at the s boundaries.
pub fn laplacian(f: &Field) -> Field {
    let mut a = d_ss(f);
    let b = d_thth(f);
    for (x, y) in a.values.iter_mut().zip(&b.values) {
        *x += y;
    }
    a
}
