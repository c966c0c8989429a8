//! Quadrature on uniform grids: Simpson weights, Gauss-Legendre rules and
//! product integration against piecewise Lagrange interpolants.

use num_complex::Complex64 as C64;

pub const CELL_GAUSS_POINTS: usize = 16;
pub const INTERP_DEGREE: usize = 9;

pub fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    assert!(m >= 3 && m % 2 == 1, "simpson needs an odd node count >= 3");
    let mut w = vec![0.0; m];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == m - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}

/// Gauss-Legendre nodes and weights mapped to [0, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Points in (0, 1) for integrands with an inverse square-root singularity at 0:
/// geometrically graded panels, the innermost one with the substitution u = a t^2.
pub fn graded_points() -> Vec<(f64, f64)> {
    let gl = gauss_legendre(CELL_GAUSS_POINTS);
    let levels = 8;
    let mut out = Vec::new();
    let innermost = 0.25f64.powi(levels);
    for &(t, wt) in &gl {
        out.push((innermost * t * t, innermost * 2.0 * t * wt));
    }
    for l in (0..levels).rev() {
        let a = 0.25f64.powi(l as i32 + 1);
        let b = 0.25f64.powi(l as i32);
        for &(t, wt) in &gl {
            out.push((a + (b - a) * t, (b - a) * wt));
        }
    }
    out
}

/// Composite Lagrange interpolation on m uniform nodes: each cell uses the
/// degree-p stencil centred on it, clipped to the grid.
#[derive(Clone, Debug)]
pub struct PiecewiseLagrange {
    pub m: usize,
    pub degree: usize,
}

impl PiecewiseLagrange {
    pub fn new(m: usize) -> Self {
        PiecewiseLagrange {
            m,
            degree: INTERP_DEGREE.min(m - 1),
        }
    }

    pub fn stencil_start(&self, cell: usize) -> usize {
        let back = (self.degree as isize - 1) / 2;
        (cell as isize - back).clamp(0, (self.m - 1 - self.degree) as isize) as usize
    }

    /// Basis values at local coordinate `xi` (in units of h from node `offset`
    /// of the stencil).
    pub fn basis(&self, offset: usize, xi: f64, out: &mut [f64]) {
        let p = self.degree;
        for q in 0..=p {
            let xq = q as f64 - offset as f64;
            let mut v = 1.0;
            for r in 0..=p {
                if r != q {
                    let xr = r as f64 - offset as f64;
                    v *= (xi - xr) / (xq - xr);
                }
            }
            out[q] = v;
        }
    }

    /// Derivative weights for the right end node, over the last p+1 nodes.
    pub fn end_derivative(&self, h: f64) -> Vec<f64> {
        let p = self.degree;
        let mut w = vec![0.0; p + 1];
        let xe = p as f64;
        for (q, wq) in w.iter_mut().enumerate() {
            let xq = q as f64;
            let mut sum = 0.0;
            for r in 0..=p {
                if r == q {
                    continue;
                }
                let mut prod = 1.0 / (xq - r as f64);
                for t in 0..=p {
                    if t != q && t != r {
                        prod *= (xe - t as f64) / (xq - t as f64);
                    }
                }
                sum += prod;
            }
            *wq = sum / h;
        }
        w
    }
}

/// Product integration of grid data against a known kernel.
#[derive(Clone, Debug)]
pub struct ProductRule {
    pub interp: PiecewiseLagrange,
    pub h: f64,
    regular: Vec<(f64, f64)>,
    graded: Vec<(f64, f64)>,
    // basis tables indexed [cell - stencil_start][point][q]
    reg_fwd: Vec<Vec<Vec<f64>>>,
    reg_rev: Vec<Vec<Vec<f64>>>,
    grd_fwd: Vec<Vec<Vec<f64>>>,
    grd_rev: Vec<Vec<Vec<f64>>>,
}

fn basis_table(interp: &PiecewiseLagrange, pts: &[(f64, f64)], reverse: bool) -> Vec<Vec<Vec<f64>>> {
    let p = interp.degree;
    (0..p)
        .map(|delta| {
            pts.iter()
                .map(|&(u, _)| {
                    let mut b = vec![0.0; p + 1];
                    let xi = if reverse { 1.0 - u } else { u };
                    interp.basis(delta, xi, &mut b);
                    b
                })
                .collect()
        })
        .collect()
}

impl ProductRule {
    pub fn new(m: usize, h: f64) -> Self {
        let interp = PiecewiseLagrange::new(m);
        let regular = gauss_legendre(CELL_GAUSS_POINTS);
        let graded = graded_points();
        ProductRule {
            reg_fwd: basis_table(&interp, &regular, false),
            reg_rev: basis_table(&interp, &regular, true),
            grd_fwd: basis_table(&interp, &graded, false),
            grd_rev: basis_table(&interp, &graded, true),
            interp,
            h,
            regular,
            graded,
        }
    }

    pub fn m(&self) -> usize {
        self.interp.m
    }

    /// Sample points (u, weight) inside cell offset `o`; offset 0 is graded
    /// towards its left end.
    pub fn offset_points(&self, o: usize) -> &[(f64, f64)] {
        if o == 0 {
            &self.graded
        } else {
            &self.regular
        }
    }

    /// Kernel samples at x = (o + u) h for every cell offset o.
    pub fn sample_offsets(&self, mut kernel: impl FnMut(f64) -> C64) -> Vec<Vec<C64>> {
        (0..self.m() - 1)
            .map(|o| {
                self.offset_points(o)
                    .iter()
                    .map(|&(u, _)| kernel((o as f64 + u) * self.h))
                    .collect()
            })
            .collect()
    }

    /// Weights for the integral of K(tau) f(tau) over the given cells,
    /// K smooth. Accumulates into `out`.
    pub fn smooth_row(&self, cells: std::ops::Range<usize>, mut kernel: impl FnMut(f64) -> C64, out: &mut [C64]) {
        let h = self.h;
        for c in cells {
            let j0 = self.interp.stencil_start(c);
            let table = &self.reg_fwd[c - j0];
            for (g, &(u, w)) in self.regular.iter().enumerate() {
                let kv = kernel((c as f64 + u) * h) * (w * h);
                for (q, &b) in table[g].iter().enumerate() {
                    out[j0 + q] += kv * b;
                }
            }
        }
    }

    /// Matrix W (row-major m x m) with (W f)_k = int_0^{s_k} K(s_k - tau) f(tau) dtau,
    /// from kernel samples produced by `sample_offsets`.
    pub fn convolution_matrix(&self, samples: &[Vec<C64>]) -> Vec<C64> {
        let m = self.m();
        let h = self.h;
        let p = self.interp.degree;
        let mut w = vec![C64::new(0.0, 0.0); m * m];
        // the cell moments depend on the offset and on where the cell sits in its stencil
        let mut moments: Vec<Option<Vec<C64>>> = vec![None; p];
        for o in 0..m - 1 {
            moments.iter_mut().for_each(|v| *v = None);
            let (pts, tables) = if o == 0 { (&self.graded, &self.grd_rev) } else { (&self.regular, &self.reg_rev) };
            for c in 0..m - 1 - o {
                let k = c + 1 + o;
                let j0 = self.interp.stencil_start(c);
                let mu = moments[c - j0].get_or_insert_with(|| {
                    let table = &tables[c - j0];
                    let mut mu = vec![C64::new(0.0, 0.0); p + 1];
                    for (g, &(_, wg)) in pts.iter().enumerate() {
                        let kv = samples[o][g] * (wg * h);
                        for (q, &b) in table[g].iter().enumerate() {
                            mu[q] += kv * b;
                        }
                    }
                    mu
                });
                let row = &mut w[k * m..(k + 1) * m];
                for (q, &v) in mu.iter().enumerate() {
                    row[j0 + q] += v;
                }
            }
        }
        w
    }

    /// Weights with sum_j w_j f_j = int_0^{(m-1)h} K(x) f(x) dx.
    pub fn forward_weights(&self, samples: &[Vec<C64>]) -> Vec<C64> {
        let m = self.m();
        let h = self.h;
        let mut w = vec![C64::new(0.0, 0.0); m];
        for o in 0..m - 1 {
            let j0 = self.interp.stencil_start(o);
            let (pts, table) = if o == 0 {
                (&self.graded, &self.grd_fwd[o - j0])
            } else {
                (&self.regular, &self.reg_fwd[o - j0])
            };
            for (g, &(_, wg)) in pts.iter().enumerate() {
                let kv = samples[o][g] * (wg * h);
                for (q, &b) in table[g].iter().enumerate() {
                    w[j0 + q] += kv * b;
                }
            }
        }
        w
    }
}
