//! Delay-estimate update: the sensitivity functions of the target state with
//! respect to the delay mismatch and to the estimate itself, the update
//! signal built from them, and the projected gradient step.

use crate::error::{Error, Result};
use crate::field::{CylinderGrid, ModeStack};
use crate::kernels::KernelSet;
use crate::transform::{inverse_h_mode, inverse_w_mode, matvec_row};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Sensitivity to the delay mismatch, split as P1 = R - G_n(s) delta_n where
/// R is bounded, G_n is the (inverse-square-root singular) boundary slope of
/// the delay kernel and delta_n = h_n(0) - w_n(1) is the mismatch between the
/// actuator state at the plant end and the plant boundary value.
#[derive(Clone, Debug)]
pub struct MismatchSensitivity {
    pub regular: ModeStack,
    pub mismatch: Vec<C64>,
}

impl MismatchSensitivity {
    pub fn mismatch_of(&self, n: i32) -> C64 {
        self.mismatch[(n + (self.regular.grid.n / 2) as i32) as usize]
    }

    /// Full P1 on rows 1..M; row 0 holds only the bounded part.
    pub fn values(&self, ks: &KernelSet) -> ModeStack {
        self.regular.map_modes(|n, src, dst| {
            let d = self.mismatch_of(n);
            let gp = &ks.mode(n).gpoint;
            dst[0] = src[0];
            for k in 1..src.len() {
                dst[k] = src[k] - gp[k] * d;
            }
        })
    }
}

/// (1/Dhat) int_0^1 d_s gamma_n(s_k, tau) phi(tau) dtau for k >= 1; zero at k = 0.
fn gamma_s_row(ks: &KernelSet, n: i32, k: usize, phi: &[C64]) -> C64 {
    if k == 0 {
        return ZERO;
    }
    let g = ks.grid();
    let m = g.m;
    let n2 = (n * n) as f64;
    let a = matvec_row(&ks.dgamma0, m, k, phi);
    let b = matvec_row(&ks.gamma0, m, k, phi);
    (a - n2 * b) * ks.mode_decay(n, g.s(k))
}

fn p1_mode(ks: &KernelSet, n: i32, w: &[C64], h: &[C64], out: &mut [C64]) -> C64 {
    let g = ks.grid();
    let m = g.m;
    let se = &ks.series;
    let mut phi = vec![ZERO; m];
    inverse_w_mode(ks, w, &mut phi);
    let phi1 = phi[m - 1];
    let gp = &ks.mode(n).gpoint;
    for k in 1..m {
        out[k] = gamma_s_row(ks, n, k, &phi) - gp[k] * phi1;
    }
    // s = 0: int_0^1 k(1, tau) (phi'' + mu0 phi) dtau, integrated by parts
    let p = se.end_derivative.len() - 1;
    let dphi: C64 = se.end_derivative.iter().zip(&phi[m - 1 - p..]).map(|(a, b)| a * b).sum();
    let mu0 = se.lambda_prime() - (n * n) as f64;
    let inner: C64 = (0..m).map(|j| (se.k_tt_row[j] + mu0 * se.kw[(m - 1) * m + j]) * phi[j]).sum();
    out[0] = se.k11 * dphi - se.kt11 * phi1 + inner;
    h[0] - w[m - 1]
}

pub fn compute_p1(w: &ModeStack, h: &ModeStack, ks: &KernelSet) -> MismatchSensitivity {
    let g = w.grid;
    let mut regular = ModeStack::zeros(g);
    let mut mismatch = Vec::with_capacity(g.n);
    for n in g.wavenumbers() {
        let d = p1_mode(ks, n, w.mode(n), h.mode(n), regular.mode_mut(n));
        mismatch.push(d);
    }
    MismatchSensitivity { regular, mismatch }
}

/// Sensitivity of the target state to the estimate:
/// int d_Dhat gamma_n phi + int_0^s d_Dhat(Dhat p_n) theta, with (phi, theta)
/// recovered from (w, h).
pub fn compute_p2(w: &ModeStack, h: &ModeStack, ks: &KernelSet) -> ModeStack {
    let g = w.grid;
    let m = g.m;
    let mut out = ModeStack::zeros(g);
    let mut phi = vec![ZERO; m];
    let mut theta = vec![ZERO; m];
    for n in g.wavenumbers() {
        inverse_w_mode(ks, w.mode(n), &mut phi);
        inverse_h_mode(ks, n, h.mode(n), w.mode(n), &mut theta);
        let hc = &ks.mode(n).hconv;
        let dst = out.mode_mut(n);
        for k in 1..m {
            dst[k] = g.s(k) * gamma_s_row(ks, n, k, &phi) - matvec_row(hc, m, k, &theta);
        }
    }
    out
}

/// -2 int int (1 + s) Re[h conj(p)] ds dtheta, evaluated mode-wise with
/// Simpson in s.
pub fn tau_signal(h: &ModeStack, p: &ModeStack, grid: &CylinderGrid) -> f64 {
    let w = grid.simpson();
    let mut acc = 0.0;
    for n in grid.wavenumbers() {
        let (hn, pn) = (h.mode(n), p.mode(n));
        for k in 0..grid.m {
            acc += w[k] * (1.0 + grid.s(k)) * (hn[k] * pn[k].conj()).re;
        }
    }
    -4.0 * PI * acc
}

/// The update signal including the singular part of P1, which is integrated
/// against h with product weights.
pub fn update_signal(h: &ModeStack, p1: &MismatchSensitivity, ks: &KernelSet) -> f64 {
    let g = h.grid;
    let mut sing = 0.0;
    for n in g.wavenumbers() {
        let gt = &ks.mode(n).gtau;
        let ih: C64 = gt.iter().zip(h.mode(n)).map(|(a, b)| a.conj() * b).sum();
        sing += (p1.mismatch_of(n).conj() * ih).re;
    }
    tau_signal(h, &p1.regular, &g) + 4.0 * PI * sing
}

/// Projection keeping the estimate inside [lo, hi].
pub fn project(dhat: f64, tau: f64, lo: f64, hi: f64) -> f64 {
    if (dhat == lo && tau < 0.0) || (dhat == hi && tau > 0.0) {
        0.0
    } else {
        tau
    }
}

#[derive(Clone, Debug)]
pub struct DelayEstimator {
    pub dhat: f64,
    pub lo: f64,
    pub hi: f64,
    pub rho: f64,
}

impl DelayEstimator {
    pub fn new(dhat0: f64, lo: f64, hi: f64, rho: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("delay bounds [{lo}, {hi}] must satisfy 0 < lo < hi")));
        }
        if !(lo..=hi).contains(&dhat0) {
            return Err(Error::InvalidParameter(format!("initial estimate {dhat0} outside [{lo}, {hi}]")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!("adaptation gain {rho} must lie in (0, 1)")));
        }
        Ok(DelayEstimator { dhat: dhat0, lo, hi, rho })
    }

    /// Forward-Euler step of the projected update.
    pub fn step(&mut self, tau: f64, dt: f64) -> f64 {
        let p = project(self.dhat, tau, self.lo, self.hi);
        self.dhat = (self.dhat + dt * self.rho * p).clamp(self.lo, self.hi);
        self.dhat
    }
}
