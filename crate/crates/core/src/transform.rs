//! Backstepping transformations between plant/actuator-state coordinates
//! (phi, theta) and target coordinates (w, h), applied mode by mode.

use crate::field::{Field, ModeStack};
use crate::kernels::KernelSet;
use num_complex::Complex64 as C64;

pub(crate) fn matvec_row(mat: &[C64], m: usize, k: usize, x: &[C64]) -> C64 {
    mat[k * m..(k + 1) * m].iter().zip(x).map(|(a, b)| a * b).sum()
}

pub(crate) fn matvec(mat: &[C64], x: &[C64], out: &mut [C64]) {
    let m = x.len();
    for (k, o) in out.iter_mut().enumerate() {
        *o = matvec_row(mat, m, k, x);
    }
}

/// phi = e^{beta s / 2} (u - ubar).
pub fn shift_scale(u: &Field, ubar: &Field, beta: C64) -> Field {
    let g = u.grid;
    let mut out = u.sub(ubar);
    for i in 0..g.m {
        let f = (beta * g.s(i) / 2.0).exp();
        for v in out.row_mut(i) {
            *v *= f;
        }
    }
    out
}

pub fn unshift(phi: &Field, ubar: &Field, beta: C64) -> Field {
    let g = phi.grid;
    let mut out = phi.clone();
    for i in 0..g.m {
        let f = (-beta * g.s(i) / 2.0).exp();
        for (v, b) in out.row_mut(i).iter_mut().zip(ubar.row(i)) {
            *v = *v * f + b;
        }
    }
    out.kind = ubar.kind;
    out
}

pub fn transform_w_mode(ks: &KernelSet, phi: &[C64], out: &mut [C64]) {
    matvec(&ks.series.kw, phi, out);
    for (o, p) in out.iter_mut().zip(phi) {
        *o = p - *o;
    }
}

pub fn inverse_w_mode(ks: &KernelSet, w: &[C64], out: &mut [C64]) {
    matvec(&ks.series.lw, w, out);
    for (o, p) in out.iter_mut().zip(w) {
        *o += p;
    }
}

/// h = theta - int_0^1 gamma_n phi + Dhat int_0^s p_n theta, with p_n(s, tau) = -G_n(s - tau).
pub fn transform_h_mode(ks: &KernelSet, n: i32, theta: &[C64], phi: &[C64], out: &mut [C64]) {
    let g = ks.grid();
    let m = g.m;
    let mk = ks.mode(n);
    for k in 0..m {
        let a = matvec_row(&ks.gamma0, m, k, phi) * ks.mode_decay(n, g.s(k));
        let b = matvec_row(&mk.gconv, m, k, theta);
        out[k] = theta[k] - a + ks.dhat * b;
    }
}

/// theta = h + Dhat int_0^s q_n h + int_0^1 eta_n w, with q_n(s, tau) = -G^eta_n(s - tau).
pub fn inverse_h_mode(ks: &KernelSet, n: i32, h: &[C64], w: &[C64], out: &mut [C64]) {
    let g = ks.grid();
    let m = g.m;
    let mk = ks.mode(n);
    for k in 0..m {
        let a = matvec_row(&ks.eta0, m, k, w) * ks.mode_decay(n, g.s(k));
        let b = matvec_row(&mk.qconv, m, k, h);
        out[k] = h[k] - ks.dhat * b + a;
    }
}

pub fn transform_w(phi: &ModeStack, ks: &KernelSet) -> ModeStack {
    phi.map_modes(|_, src, dst| transform_w_mode(ks, src, dst))
}

pub fn inverse_w(w: &ModeStack, ks: &KernelSet) -> ModeStack {
    w.map_modes(|_, src, dst| inverse_w_mode(ks, src, dst))
}

pub fn transform_h(theta: &ModeStack, phi: &ModeStack, ks: &KernelSet) -> ModeStack {
    theta.map_modes(|n, src, dst| transform_h_mode(ks, n, src, phi.mode(n), dst))
}

pub fn inverse_h(h: &ModeStack, w: &ModeStack, ks: &KernelSet) -> ModeStack {
    h.map_modes(|n, src, dst| inverse_h_mode(ks, n, src, w.mode(n), dst))
}

/// Boundary command for mode n. The actuator state at s = 1 is the command
/// itself, so the law is solved as a scalar fixed point; entry M-1 of
/// `theta` is ignored. The result makes h_n(1) vanish.
pub fn control_mode(ks: &KernelSet, n: i32, phi: &[C64], theta: &[C64]) -> C64 {
    let m = ks.grid().m;
    let mk = ks.mode(n);
    let row = &mk.gconv[(m - 1) * m..m * m];
    let state = matvec_row(&ks.gamma0, m, m - 1, phi) * ks.mode_decay(n, 1.0);
    let hist: C64 = row[..m - 1].iter().zip(&theta[..m - 1]).map(|(a, b)| a * b).sum();
    (state - ks.dhat * hist) / (1.0 + ks.dhat * row[m - 1])
}
