//! Desired formations: steady states of the agent dynamics with prescribed
//! boundary profiles.

use crate::error::{Error, Result};
use crate::field::{CylinderGrid, Field, FieldKind};
use crate::kernels::PlantCoeffs;
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const RESONANCE_TOL: f64 = 1e-12;

/// A boundary profile given by finitely many angular Fourier coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryData {
    pub modes: Vec<(i32, C64)>,
}

impl BoundaryData {
    pub fn new(modes: Vec<(i32, C64)>) -> Self {
        BoundaryData { modes }
    }

    pub fn constant(v: f64) -> Self {
        BoundaryData::new(vec![(0, C64::new(v, 0.0))])
    }

    pub fn coeff(&self, n: i32) -> C64 {
        self.modes.iter().filter(|(m, _)| *m == n).map(|(_, c)| *c).sum()
    }

    pub fn eval(&self, theta: f64) -> C64 {
        self.modes.iter().map(|&(n, c)| c * C64::new(0.0, n as f64 * theta).exp()).sum()
    }

    pub fn profile(&self, grid: &CylinderGrid, kind: FieldKind) -> Vec<C64> {
        (0..grid.n)
            .map(|j| {
                let v = self.eval(grid.theta(j));
                if kind == FieldKind::Real {
                    C64::new(v.re, 0.0)
                } else {
                    v
                }
            })
            .collect()
    }

    pub fn wavenumbers(&self) -> Vec<i32> {
        let mut ns: Vec<i32> = self.modes.iter().map(|(n, _)| *n).collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }
}

/// Coefficients and boundary profiles of one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    pub coeffs: PlantCoeffs,
    pub f: BoundaryData,
    pub g: BoundaryData,
}

/// Both channels of a formation: complex planar positions u and real heights z.
#[derive(Clone, Debug, PartialEq)]
pub struct FormationSpec {
    pub u: ChannelSpec,
    pub z: ChannelSpec,
}

/// ubar'' + beta ubar' + (lambda - n^2) ubar = 0, ubar(0) = f, ubar(1) = g,
/// sampled at the grid's s-nodes.
pub fn steady_mode(n: i32, c: &PlantCoeffs, f: C64, g: C64, grid: &CylinderGrid) -> Result<Vec<C64>> {
    let q = c.lambda - (n * n) as f64;
    let disc = c.beta * c.beta - 4.0 * q;
    let sd = disc.sqrt();
    let scale = 1.0 + c.beta.norm_sqr() + q.norm();
    let s_nodes = grid.s_nodes();
    if sd.norm() <= 1e-9 * scale.sqrt() {
        // repeated root: (A + B s) e^{r s}
        let r = -c.beta / 2.0;
        let b = g * (-r).exp() - f;
        return Ok(s_nodes.iter().map(|&s| (f + b * s) * (r * s).exp()).collect());
    }
    let (mut ra, mut rb) = ((-c.beta + sd) / 2.0, (-c.beta - sd) / 2.0);
    if ra.re > rb.re {
        std::mem::swap(&mut ra, &mut rb);
    }
    // ubar = A e^{ra s} + B e^{rb (s - 1)}, with Re ra <= Re rb
    let ea = ra.exp();
    let eb = (-rb).exp();
    let det = C64::new(1.0, 0.0) - ea * eb;
    if det.norm() < RESONANCE_TOL {
        return Err(Error::Resonant { n, det: det.norm() });
    }
    let a = (f - eb * g) / det;
    let b = (g - ea * f) / det;
    Ok(s_nodes.iter().map(|&s| a * (ra * s).exp() + b * (rb * (s - 1.0)).exp()).collect())
}

fn assemble(grid: &CylinderGrid, spec: &ChannelSpec, kind: FieldKind, mut solve: impl FnMut(i32, C64, C64) -> Result<Vec<C64>>) -> Result<Field> {
    let half = (grid.n / 2) as i32;
    let mut ns = spec.f.wavenumbers();
    ns.extend(spec.g.wavenumbers());
    ns.sort_unstable();
    ns.dedup();
    let mut out = Field::zeros(*grid, FieldKind::Complex);
    for n in ns {
        if n < -half || n >= half {
            return Err(Error::InvalidParameter(format!("boundary wavenumber {n} not resolved by N = {}", grid.n)));
        }
        let (fc, gc) = (spec.f.coeff(n), spec.g.coeff(n));
        if fc == ZERO && gc == ZERO {
            continue;
        }
        let prof = solve(n, fc, gc)?;
        for j in 0..grid.n {
            let e = C64::new(0.0, n as f64 * grid.theta(j)).exp();
            for i in 0..grid.m {
                out.values[i * grid.n + j] += prof[i] * e;
            }
        }
    }
    let f = spec.f.profile(grid, FieldKind::Complex);
    let g = spec.g.profile(grid, FieldKind::Complex);
    out.row_mut(0).copy_from_slice(&f);
    out.row_mut(grid.m - 1).copy_from_slice(&g);
    if kind == FieldKind::Real {
        for v in &mut out.values {
            v.im = 0.0;
        }
    }
    out.kind = kind;
    Ok(out)
}

/// Continuum steady state sampled on the grid.
pub fn steady_field(spec: &ChannelSpec, grid: &CylinderGrid, kind: FieldKind) -> Result<Field> {
    assemble(grid, spec, kind, |n, f, g| steady_mode(n, &spec.coeffs, f, g, grid))
}

/// Steady state of the semi-discrete plant: the same stencil as the
/// simulator, so it is an exact equilibrium of the discretized dynamics.
pub fn discrete_steady_field(spec: &ChannelSpec, grid: &CylinderGrid, kind: FieldKind) -> Result<Field> {
    assemble(grid, spec, kind, |n, f, g| discrete_steady_mode(n, &spec.coeffs, f, g, grid))
}

pub fn discrete_steady_mode(n: i32, c: &PlantCoeffs, f: C64, g: C64, grid: &CylinderGrid) -> Result<Vec<C64>> {
    let m = grid.m;
    let h = grid.hs;
    let ht = grid.htheta;
    let sigma = (2.0 - 2.0 * (n as f64 * ht).cos()) / (ht * ht);
    let lo = C64::new(1.0 / (h * h), 0.0) - c.beta / (2.0 * h);
    let di = C64::new(-2.0 / (h * h), 0.0) + c.lambda - sigma;
    let up = C64::new(1.0 / (h * h), 0.0) + c.beta / (2.0 * h);
    let k = m - 2;
    let mut rhs = vec![ZERO; k];
    rhs[0] -= lo * f;
    rhs[k - 1] -= up * g;
    // Thomas algorithm
    let mut cp = vec![ZERO; k];
    let mut dp = vec![ZERO; k];
    let scale = di.norm() + lo.norm() + up.norm();
    let mut piv = di;
    if piv.norm() < RESONANCE_TOL * scale {
        return Err(Error::Resonant { n, det: piv.norm() / scale });
    }
    cp[0] = up / piv;
    dp[0] = rhs[0] / piv;
    for i in 1..k {
        piv = di - lo * cp[i - 1];
        if piv.norm() < RESONANCE_TOL * scale {
            return Err(Error::Resonant { n, det: piv.norm() / scale });
        }
        cp[i] = up / piv;
        dp[i] = (rhs[i] - lo * dp[i - 1]) / piv;
    }
    let mut x = vec![ZERO; m];
    x[0] = f;
    x[m - 1] = g;
    x[k] = dp[k - 1];
    for i in (0..k - 1).rev() {
        x[i + 1] = dp[i] - cp[i] * x[i + 2];
    }
    Ok(x)
}
