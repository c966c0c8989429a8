//! Backstepping kernels: the Volterra pair (k, l), the sine-series delay
//! kernels gamma_n / eta_n, and product-integration weights built from them.

use crate::error::{Error, Result};
use crate::field::CylinderGrid;
use crate::quadrature::{gauss_legendre, ProductRule};
use crate::history::{CumulativeKernel, TABLE_CELLS};
use crate::special::{phi1_derivs, theta_tail, theta_tail_inv2};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::sync::Arc;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Terms kept in the delay-kernel boundary-derivative series, on top of the
/// closed-form theta-function tail.
pub const DELAY_SERIES_TERMS: usize = 512;
pub const DEFAULT_I_MAX: usize = 64;
pub const TRUNCATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantCoeffs {
    pub lambda: C64,
    pub beta: C64,
}

impl PlantCoeffs {
    pub fn new(lambda: C64, beta: C64) -> Self {
        PlantCoeffs { lambda, beta }
    }

    pub fn real(lambda: f64, beta: f64) -> Self {
        PlantCoeffs::new(C64::new(lambda, 0.0), C64::new(beta, 0.0))
    }

    pub fn lambda_prime(&self) -> C64 {
        self.lambda - self.beta * self.beta / 4.0
    }
}

fn check_domain(s: f64, tau: f64) -> Result<()> {
    let ok = s.is_finite() && tau.is_finite() && (0.0..=1.0).contains(&s) && tau >= 0.0 && tau <= s;
    if ok {
        Ok(())
    } else {
        Err(Error::KernelDomain { s, tau })
    }
}

/// k(s, tau) = -lp tau phi1(lp (s^2 - tau^2)) for lp = lambda'.
pub fn k_raw(lp: C64, s: f64, tau: f64) -> C64 {
    -lp * tau * phi1_derivs(lp * (s * s - tau * tau))[0]
}

pub fn l_raw(lp: C64, s: f64, tau: f64) -> C64 {
    -lp * tau * phi1_derivs(-lp * (s * s - tau * tau))[0]
}

pub fn kernel_k(s: f64, tau: f64, c: &PlantCoeffs) -> Result<C64> {
    check_domain(s, tau)?;
    Ok(k_raw(c.lambda_prime(), s, tau))
}

pub fn kernel_l(s: f64, tau: f64, c: &PlantCoeffs) -> Result<C64> {
    check_domain(s, tau)?;
    Ok(l_raw(c.lambda_prime(), s, tau))
}

/// (k, d/dtau k, d^2/dtau^2 k) at s = 1.
pub fn k_row_one_derivs(lp: C64, tau: f64) -> [C64; 3] {
    let [p, dp, ddp] = phi1_derivs(lp * (1.0 - tau * tau));
    let k = -lp * tau * p;
    let kt = -lp * p + 2.0 * lp * lp * tau * tau * dp;
    let ktt = 6.0 * lp * lp * tau * dp - 4.0 * lp * lp * lp * tau.powi(3) * ddp;
    [k, kt, ktt]
}

/// int_0^1 sin(i pi xi) f(xi) dxi for i = 1..=count by composite Gauss-Legendre.
fn sine_moments(count: usize, f: impl Fn(f64) -> C64) -> Vec<C64> {
    let gl = gauss_legendre(16);
    let panels = (2 * count).max(64);
    let w = 1.0 / panels as f64;
    let mut pts = Vec::with_capacity(panels * gl.len());
    for p in 0..panels {
        for &(u, wu) in &gl {
            let x = (p as f64 + u) * w;
            pts.push((x, f(x) * (wu * w)));
        }
    }
    (1..=count)
        .map(|i| {
            let om = i as f64 * PI;
            pts.iter().map(|&(x, fw)| fw * (om * x).sin()).sum()
        })
        .collect()
}

/// G(x) = sum_i g_i e^{(kappa - a i^2) x} with g_i -> g_inf, kappa = Dhat (lambda_eff - n^2),
/// a = Dhat pi^2. The parts g_inf + g2 / i^2 of g_i are summed in closed form,
/// delta_i is what is left.
#[derive(Clone, Debug)]
pub struct DelaySeries {
    pub g_inf: C64,
    pub g2: C64,
    pub delta: Vec<C64>,
    pub lambda_eff: C64,
}

impl DelaySeries {
    fn new(coeffs: &[C64], g_inf: C64, g2: C64, lambda_eff: C64) -> Self {
        let delta = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let i = (k + 1) as f64;
                let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
                2.0 * c * (i * PI * sign) - g_inf - g2 / (i * i)
            })
            .collect();
        DelaySeries { g_inf, g2, delta, lambda_eff }
    }

    /// sum_i g_i e^{-a i^2 x} and its x-derivative.
    pub fn base(&self, a: f64, x: f64) -> (C64, C64) {
        let (t, dt) = theta_tail(a * x);
        let mut f = self.g_inf * t + self.g2 * theta_tail_inv2(a * x);
        let mut df = self.g_inf * (a * dt) - self.g2 * (a * t);
        for (k, &d) in self.delta.iter().enumerate() {
            let i2 = ((k + 1) * (k + 1)) as f64;
            let r = a * i2 * x;
            if r > 700.0 {
                break;
            }
            let e = (-r).exp();
            f += d * e;
            df -= d * (a * i2 * e);
        }
        (f, df)
    }

    pub fn kappa(&self, dhat: f64, n: i32) -> C64 {
        dhat * (self.lambda_eff - (n * n) as f64)
    }

    pub fn eval(&self, dhat: f64, n: i32, x: f64) -> C64 {
        let (f, _) = self.base(dhat * PI * PI, x);
        (self.kappa(dhat, n) * x).exp() * f
    }

    /// d/dx (x G_n(x)).
    pub fn eval_xd(&self, dhat: f64, n: i32, x: f64) -> C64 {
        let (f, df) = self.base(dhat * PI * PI, x);
        let kap = self.kappa(dhat, n);
        (kap * x).exp() * (f + x * (kap * f + df))
    }
}

/// Everything that depends on the plant coefficients and the grid but not on
/// the delay estimate.
#[derive(Debug)]
pub struct KernelSeries {
    pub coeffs: PlantCoeffs,
    pub grid: CylinderGrid,
    pub i_max: usize,
    pub rule: ProductRule,
    /// sine coefficients of k(1, .) and l(1, .), index i - 1
    pub c: Vec<C64>,
    pub d: Vec<C64>,
    pub gamma_tail: DelaySeries,
    pub eta_tail: DelaySeries,
    /// int_0^1 sin(i pi tau) L_j(tau) dtau, row-major i_max x M
    pub sine_weights: Vec<f64>,
    /// Volterra weights for int_0^{s_k} k(s_k, tau) f(tau) dtau and likewise for l
    pub kw: Vec<C64>,
    pub lw: Vec<C64>,
    /// int_0^1 k_tautau(1, tau) L_j(tau) dtau
    pub k_tt_row: Vec<C64>,
    pub k11: C64,
    pub kt11: C64,
    pub end_derivative: Vec<f64>,
}

impl KernelSeries {
    pub fn new(coeffs: PlantCoeffs, grid: CylinderGrid, i_max: usize) -> Result<Arc<Self>> {
        if i_max == 0 {
            return Err(Error::InvalidParameter("i_max must be positive".into()));
        }
        let lp = coeffs.lambda_prime();
        let m = grid.m;
        let h = grid.hs;
        let rule = ProductRule::new(m, h);
        let nterms = DELAY_SERIES_TERMS.max(i_max);
        let c = sine_moments(nterms, |x| k_raw(lp, 1.0, x));
        let d = sine_moments(nterms, |x| l_raw(lp, 1.0, x));
        // odd kernels in tau: 2 i pi (-1)^i c_i = -2 k(1,1) + 2 k_tautau(1,1) / (i pi)^2 + O(i^-4)
        let ktt11 = k_row_one_derivs(lp, 1.0)[2];
        let ltt11 = -k_row_one_derivs(-lp, 1.0)[2];
        let gamma_tail = DelaySeries::new(&c, -2.0 * k_raw(lp, 1.0, 1.0), 2.0 * ktt11 / (PI * PI), lp);
        let eta_tail = DelaySeries::new(&d, -2.0 * l_raw(lp, 1.0, 1.0), 2.0 * ltt11 / (PI * PI), ZERO);

        let mut sine_weights = vec![0.0; i_max * m];
        for i in 1..=i_max {
            let mut row = vec![ZERO; m];
            let om = i as f64 * PI;
            rule.smooth_row(0..m - 1, |t| C64::new((om * t).sin(), 0.0), &mut row);
            for j in 0..m {
                sine_weights[(i - 1) * m + j] = row[j].re;
            }
        }

        let mut kw = vec![ZERO; m * m];
        let mut lw = vec![ZERO; m * m];
        for k in 1..m {
            let s = grid.s(k);
            rule.smooth_row(0..k, |t| k_raw(lp, s, t), &mut kw[k * m..(k + 1) * m]);
            rule.smooth_row(0..k, |t| l_raw(lp, s, t), &mut lw[k * m..(k + 1) * m]);
        }
        let mut k_tt_row = vec![ZERO; m];
        rule.smooth_row(0..m - 1, |t| k_row_one_derivs(lp, t)[2], &mut k_tt_row);
        let [k11, kt11, _] = k_row_one_derivs(lp, 1.0);
        let end_derivative = rule.interp.end_derivative(h);

        Ok(Arc::new(KernelSeries {
            coeffs,
            grid,
            i_max,
            rule,
            c,
            d,
            gamma_tail,
            eta_tail,
            sine_weights,
            kw,
            lw,
            k_tt_row,
            k11,
            kt11,
            end_derivative,
        }))
    }

    pub fn lambda_prime(&self) -> C64 {
        self.coeffs.lambda_prime()
    }
}

/// Per-wavenumber weights (kernels depend on n only through n^2).
#[derive(Clone, Debug)]
pub struct ModeKernels {
    /// int_0^{s_k} G_n(s_k - tau) f(tau) dtau
    pub gconv: Vec<C64>,
    /// same for the inverse-transform kernel
    pub qconv: Vec<C64>,
    /// int_0^{s_k} d/dx(x G_n)(s_k - tau) f(tau) dtau
    pub hconv: Vec<C64>,
    /// G_n(s_k); entry 0 is unused (the kernel is singular there)
    pub gpoint: Vec<C64>,
    /// int_0^1 (1 + s) G_n(s) f(s) ds
    pub gtau: Vec<C64>,
}

/// Kernel tables for one delay estimate.
#[derive(Clone, Debug)]
pub struct KernelSet {
    pub series: Arc<KernelSeries>,
    pub dhat: f64,
    /// int_0^1 gamma_0(s_k, tau) L_j(tau) dtau; row 0 is k(1, .)
    pub gamma0: Vec<C64>,
    /// int_0^1 (1/Dhat) d_s gamma_0(s_k, tau) L_j(tau) dtau for k >= 1
    pub dgamma0: Vec<C64>,
    pub eta0: Vec<C64>,
    pub modes: Vec<ModeKernels>,
    /// antiderivatives of the boundary slope kernels, for exact history integrals
    pub history: CumulativeKernel,
}

fn sine_series_rows(
    series: &KernelSeries,
    coef: &[C64],
    rate: impl Fn(usize) -> C64,
    factor: impl Fn(usize) -> C64,
    dhat: f64,
) -> Vec<C64> {
    let g = series.grid;
    let m = g.m;
    let mut out = vec![ZERO; m * m];
    for k in 1..m {
        let s = g.s(k);
        let row = &mut out[k * m..(k + 1) * m];
        for i in 1..=series.i_max {
            let a = 2.0 * coef[i - 1] * factor(i) * (dhat * rate(i) * s).exp();
            let sw = &series.sine_weights[(i - 1) * m..i * m];
            for (r, &w) in row.iter_mut().zip(sw) {
                *r += a * w;
            }
        }
    }
    out
}

impl KernelSet {
    pub fn build(series: Arc<KernelSeries>, dhat: f64) -> Result<Self> {
        if !(dhat.is_finite() && dhat > 0.0) {
            return Err(Error::InvalidParameter(format!("delay estimate must be positive, got {dhat}")));
        }
        let g = series.grid;
        let m = g.m;
        let lp = series.lambda_prime();
        let pi2 = PI * PI;

        // truncation check at the first interior node, slowest mode n = 0
        let scale = (0..=64)
            .map(|q| k_raw(lp, 1.0, q as f64 / 64.0).norm())
            .fold(0.0, f64::max);
        if scale > 0.0 {
            let i = series.i_max;
            let mu = lp - (i * i) as f64 * pi2;
            let term = 2.0 * series.c[i - 1].norm() * (dhat * mu.re * g.hs).exp();
            let rel = term / scale;
            if rel > TRUNCATION_TOL {
                return Err(Error::Truncation { i_max: i, relative: rel });
            }
        }

        let mu0 = |i: usize| lp - (i * i) as f64 * pi2;
        let one = |_: usize| C64::new(1.0, 0.0);
        let mut gamma0 = sine_series_rows(&series, &series.c, mu0, one, dhat);
        gamma0[..m].copy_from_slice(&series.kw[(m - 1) * m..]);
        let dgamma0 = sine_series_rows(&series, &series.c, mu0, mu0, dhat);
        let mut eta0 = sine_series_rows(&series, &series.d, |i| C64::new(-((i * i) as f64) * pi2, 0.0), one, dhat);
        eta0[..m].copy_from_slice(&series.lw[(m - 1) * m..]);

        let rule = &series.rule;
        let a = dhat * pi2;
        let pts: Vec<Vec<f64>> = (0..m - 1)
            .map(|o| rule.offset_points(o).iter().map(|&(u, _)| (o as f64 + u) * g.hs).collect())
            .collect();
        let gbase: Vec<Vec<(C64, C64)>> =
            pts.iter().map(|xs| xs.iter().map(|&x| series.gamma_tail.base(a, x)).collect()).collect();
        let ebase: Vec<Vec<C64>> =
            pts.iter().map(|xs| xs.iter().map(|&x| series.eta_tail.base(a, x).0).collect()).collect();
        let gnode: Vec<C64> = (0..m)
            .map(|k| if k == 0 { ZERO } else { series.gamma_tail.base(a, g.s(k)).0 })
            .collect();

        let nmax = (g.n / 2) as i32;
        let modes = (0..=nmax)
            .map(|n| {
                let kg = series.gamma_tail.kappa(dhat, n);
                let ke = series.eta_tail.kappa(dhat, n);
                let mut gs = Vec::with_capacity(m - 1);
                let mut hs = Vec::with_capacity(m - 1);
                let mut ts = Vec::with_capacity(m - 1);
                let mut es = Vec::with_capacity(m - 1);
                for (o, xs) in pts.iter().enumerate() {
                    let mut gv = Vec::with_capacity(xs.len());
                    let mut hv = Vec::with_capacity(xs.len());
                    let mut tv = Vec::with_capacity(xs.len());
                    let mut ev = Vec::with_capacity(xs.len());
                    for (q, &x) in xs.iter().enumerate() {
                        let (f, df) = gbase[o][q];
                        let e = (kg * x).exp();
                        gv.push(e * f);
                        hv.push(e * (f + x * (kg * f + df)));
                        tv.push(e * f * (1.0 + x));
                        ev.push((ke * x).exp() * ebase[o][q]);
                    }
                    gs.push(gv);
                    hs.push(hv);
                    ts.push(tv);
                    es.push(ev);
                }
                let gpoint = (0..m)
                    .map(|k| if k == 0 { ZERO } else { (kg * g.s(k)).exp() * gnode[k] })
                    .collect();
                ModeKernels {
                    gconv: rule.convolution_matrix(&gs),
                    qconv: rule.convolution_matrix(&es),
                    hconv: rule.convolution_matrix(&hs),
                    gpoint,
                    gtau: rule.forward_weights(&ts),
                }
            })
            .collect();

        let history = CumulativeKernel::build(&series.gamma_tail, dhat, nmax as usize, TABLE_CELLS);
        Ok(KernelSet {
            series,
            dhat,
            gamma0,
            dgamma0,
            eta0,
            modes,
            history,
        })
    }

    pub fn grid(&self) -> CylinderGrid {
        self.series.grid
    }

    pub fn mode(&self, n: i32) -> &ModeKernels {
        &self.modes[n.unsigned_abs() as usize]
    }

    /// e^{-Dhat n^2 s}: the wavenumber dependence of gamma_n and eta_n.
    pub fn mode_decay(&self, n: i32, s: f64) -> f64 {
        (-self.dhat * (n * n) as f64 * s).exp()
    }

    /// Pointwise gamma_n(s, tau); at s = 0 this is the boundary value k(1, tau).
    pub fn gamma(&self, n: i32, s: f64, tau: f64) -> C64 {
        let lp = self.series.lambda_prime();
        if s == 0.0 {
            return k_raw(lp, 1.0, tau);
        }
        let mut v = ZERO;
        for i in 1..=self.series.i_max {
            let mu = lp - ((n * n) as f64 + (i * i) as f64 * PI * PI);
            v += 2.0 * self.series.c[i - 1] * (self.dhat * mu * s).exp() * (i as f64 * PI * tau).sin();
        }
        v
    }

    pub fn eta(&self, n: i32, s: f64, tau: f64) -> C64 {
        let lp = self.series.lambda_prime();
        if s == 0.0 {
            return l_raw(lp, 1.0, tau);
        }
        let mut v = ZERO;
        for i in 1..=self.series.i_max {
            let r = -((n * n) as f64 + (i * i) as f64 * PI * PI);
            v += 2.0 * self.series.d[i - 1] * (self.dhat * r * s).exp() * (i as f64 * PI * tau).sin();
        }
        v
    }

    /// d/dtau gamma_n(s, tau) at tau = 1, for s > 0.
    pub fn gamma_boundary_slope(&self, n: i32, s: f64) -> C64 {
        self.series.gamma_tail.eval(self.dhat, n, s)
    }

    pub fn eta_boundary_slope(&self, n: i32, s: f64) -> C64 {
        self.series.eta_tail.eval(self.dhat, n, s)
    }
}

/// Convenience constructor from scratch.
pub fn build_kernel_set(coeffs: PlantCoeffs, dhat: f64, grid: CylinderGrid, i_max: usize) -> Result<KernelSet> {
    KernelSet::build(KernelSeries::new(coeffs, grid, i_max)?, dhat)
}

/// Angular heat kernel (1/2pi) sum_{|n| <= n_max} e^{-Dhat n^2 s} e^{j n dtheta}.
pub fn q_heat_kernel(s: f64, dtheta: f64, dhat: f64, n_max: usize) -> f64 {
    let mut v = 1.0;
    for n in 1..=n_max {
        let nf = n as f64;
        v += 2.0 * (-dhat * nf * nf * s).exp() * (nf * dtheta).cos();
    }
    v / (2.0 * PI)
}

/// The grid-resolved heat kernel: the Nyquist wavenumber gets half weight so
/// that h_theta Q(0, theta_j - theta_l) is the discrete identity.
pub fn q_heat_kernel_grid(grid: &CylinderGrid, s: f64, dtheta: f64, dhat: f64) -> f64 {
    let half = grid.n / 2;
    let mut v = q_heat_kernel(s, dtheta, dhat, half - 1);
    let nf = half as f64;
    v += (-dhat * nf * nf * s).exp() * (nf * dtheta).cos() / (2.0 * PI);
    v
}

/// gamma(s, tau, dtheta) = Q(s, dtheta) gamma_0(s, tau).
pub fn gamma_2d(s: f64, tau: f64, dtheta: f64, ks: &KernelSet) -> C64 {
    q_heat_kernel_grid(&ks.grid(), s, dtheta, ks.dhat) * ks.gamma(0, s, tau)
}
