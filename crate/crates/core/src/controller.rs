//! Predictor-based boundary control of one channel: reconstruct the
//! actuator state from the command history, compute the command, and
//! evaluate the target-state diagnostics the delay update needs.

use crate::error::{Error, Result};
use crate::estimator::{compute_p1, update_signal};
use crate::field::{analyze, analyze_profile, synthesize_profile, CylinderGrid, Field, FieldKind, ModeStack};
use crate::kernels::{q_heat_kernel_grid, KernelSet};
use crate::plant::DelayLine;
use crate::quadrature::ProductRule;
use crate::history::{newest_weights, CommandRuns, WeightCache};
use crate::transform::{matvec_row, shift_scale, transform_w};
use num_complex::Complex64 as C64;
use std::cell::RefCell;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Actuator state as seen by the controller: the command issued at time
/// t + Dhat (s - 1), rescaled like the plant state. Row M-1 (the command
/// about to be issued) is left at zero.
pub fn reconstruct_theta(hist: &DelayLine, t: f64, dhat: f64, beta: C64, grid: &CylinderGrid) -> Result<ModeStack> {
    let mut out = ModeStack::zeros(*grid);
    let scale = (beta / 2.0).exp();
    let mut prof = vec![ZERO; grid.n];
    let half = (grid.n / 2) as i32;
    for k in 0..grid.m - 1 {
        hist.lookup_into(t - dhat * (1.0 - grid.s(k)), &mut prof)?;
        let coef = analyze_profile(grid, &prof);
        for n in grid.wavenumbers() {
            out.mode_mut(n)[k] = coef[(n + half) as usize] * scale;
        }
    }
    Ok(out)
}

/// Physical boundary command from per-mode normalized commands.
pub fn synthesize_command(modes: &[C64], beta: C64, grid: &CylinderGrid, kind: FieldKind) -> Vec<C64> {
    let half = (grid.n / 2) as i32;
    let scale = (-beta / 2.0).exp();
    let mut prof = synthesize_profile(grid, |n| modes[(n + half) as usize] * scale, kind);
    if kind == FieldKind::Real {
        prof.iter_mut().for_each(|v| v.im = 0.0);
    }
    prof
}

#[derive(Clone, Debug)]
pub struct ChannelControl {
    /// boundary command (deviation from the desired boundary profile)
    pub command: Vec<C64>,
    /// max over theta of |h(1, theta)|
    pub h_boundary: f64,
    /// L2 norms of phi plus actuator state
    pub state_scale: f64,
    /// contribution to the delay update signal
    pub tau: f64,
}

/// One channel of the controller: desired steady state and kernels.
#[derive(Clone, Debug)]
pub struct ChannelController {
    pub ubar: Field,
    pub beta: C64,
    pub kind: FieldKind,
    cache: RefCell<WeightCache>,
}

impl ChannelController {
    pub fn new(ubar: Field, beta: C64) -> Self {
        let kind = ubar.kind;
        ChannelController {
            ubar,
            beta,
            kind,
            cache: RefCell::default(),
        }
    }

    pub fn phi_modes(&self, u: &Field) -> ModeStack {
        analyze(&shift_scale(u, &self.ubar, self.beta))
    }

    /// Spectral realization. The history integral is taken exactly over the
    /// piecewise-linear command signal, with the command being issued as a
    /// record at t; solving for it makes h(1) vanish.
    pub fn control(&self, ks: &KernelSet, u: &Field, hist: &DelayLine, t: f64, diagnostics: bool) -> Result<ChannelControl> {
        let grid = u.grid;
        let m = grid.m;
        let half = (grid.n / 2) as i32;
        let dhat = ks.dhat;
        let phi = self.phi_modes(u);
        let mut runs = CommandRuns::from_delay_line(hist, &grid, (self.beta / 2.0).exp());
        let expected = runs.next_index() as f64 * runs.dt;
        if (expected - t).abs() > 1e-6 * runs.dt {
            return Err(Error::NonUniformSample { expected, got: t });
        }
        let now = runs.next_index();
        let mut cache = self.cache.borrow_mut();
        let mut rest = vec![ZERO; grid.n];
        cache.row_integral(&ks.history, &runs, &grid, dhat, now, m - 1, &mut rest);
        let wn = newest_weights(&ks.history, &runs, &grid, dhat, 1.0);
        let mut cmd = Vec::with_capacity(grid.n);
        for n in grid.wavenumbers() {
            let slot = (n + half) as usize;
            let state = matvec_row(&ks.gamma0, m, m - 1, phi.mode(n)) * ks.mode_decay(n, 1.0);
            cmd.push((state - dhat * rest[slot]) / (1.0 + dhat * wn[slot]));
        }
        if self.kind == FieldKind::Real {
            for n in 1..half {
                let a = cmd[(half + n) as usize];
                let b = cmd[(half - n) as usize];
                let avg = (a + b.conj()) / 2.0;
                cmd[(half + n) as usize] = avg;
                cmd[(half - n) as usize] = avg.conj();
            }
            cmd[half as usize].im = 0.0;
            cmd[0].im = 0.0;
        }
        let command = synthesize_command(&cmd, self.beta, &grid, self.kind);
        let (h_boundary, state_scale, tau) = if diagnostics {
            let mut theta = reconstruct_theta(hist, t, dhat, self.beta, &grid)?;
            for n in grid.wavenumbers() {
                theta.mode_mut(n)[m - 1] = cmd[(n + half) as usize];
            }
            runs.push(cmd);
            let h = target_state(ks, &runs, &phi, &theta, now, &mut cache);
            let hb = synthesize_profile(&grid, |n| h.mode(n)[m - 1], FieldKind::Complex);
            let hmax = hb.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let w = transform_w(&phi, ks);
            let p1 = compute_p1(&w, &h, ks);
            (hmax, phi.l2_norm() + theta.l2_norm(), update_signal(&h, &p1, ks))
        } else {
            (0.0, 0.0, 0.0)
        };
        Ok(ChannelControl {
            command,
            h_boundary,
            state_scale,
            tau,
        })
    }
}

/// h(s) = theta(s) - int gamma_n(s, .) phi + Dhat int_0^s G_n(s - sigma) theta(sigma),
/// the last term taken exactly over the command signal.
/// Record `now` is the command issued at the current time.
pub fn target_state(ks: &KernelSet, runs: &CommandRuns, phi: &ModeStack, theta: &ModeStack, now: i64, cache: &mut WeightCache) -> ModeStack {
    let grid = phi.grid;
    let m = grid.m;
    let half = (grid.n / 2) as i32;
    let mut h = ModeStack::zeros(grid);
    let mut acc = vec![ZERO; grid.n];
    for k in 0..m {
        let s = grid.s(k);
        acc.iter_mut().for_each(|v| *v = ZERO);
        cache.row_integral(&ks.history, runs, &grid, ks.dhat, now, k, &mut acc);
        for n in grid.wavenumbers() {
            let a = matvec_row(&ks.gamma0, m, k, phi.mode(n)) * ks.mode_decay(n, s);
            h.mode_mut(n)[k] = theta.mode(n)[k] - a + ks.dhat * acc[(n + half) as usize];
        }
    }
    h
}

/// Which delay value sets the length of the history integral in the
/// physical-space realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HistoryWindow {
    Estimate,
    TrueDelay(f64),
}

/// Physical-space realization of the control law: Simpson in s for the
/// state integral, a direct sum over agents with the angular heat kernel,
/// and product weights on `mprime` nodes for the history integral. Returns
/// the position of the leader ring, desired boundary profile included.
pub fn simpson_control(
    ks: &KernelSet,
    ctl: &ChannelController,
    u: &Field,
    hist: &DelayLine,
    t: f64,
    mprime: usize,
    window: HistoryWindow,
) -> Result<Vec<C64>> {
    let grid = u.grid;
    let (m, n) = (grid.m, grid.n);
    let dhat = ks.dhat;
    let beta = ctl.beta;
    let ht = grid.htheta;
    let sw = grid.simpson();

    // state part
    let q1: Vec<f64> = (0..n).map(|d| ht * q_heat_kernel_grid(&grid, 1.0, d as f64 * ht, dhat)).collect();
    let mut state = vec![ZERO; n];
    for i in 0..m {
        let tau = grid.s(i);
        let wgt = sw[i] * ks.gamma(0, 1.0, tau) * (-beta * (1.0 - tau) / 2.0).exp();
        if wgt == ZERO {
            continue;
        }
        let dev: Vec<C64> = u.row(i).iter().zip(ctl.ubar.row(i)).map(|(a, b)| a - b).collect();
        for j in 0..n {
            let mut acc = ZERO;
            for l in 0..n {
                acc += q1[(j + n - l) % n] * dev[l];
            }
            state[j] += wgt * acc;
        }
    }

    // history part on x = (t - nu) / Dhat in [0, X]
    let xlen = match window {
        HistoryWindow::Estimate => 1.0,
        HistoryWindow::TrueDelay(d) => d / dhat,
    };
    let hx = xlen / (mprime - 1) as f64;
    let rule = ProductRule::new(mprime, hx);
    let samples = rule.sample_offsets(|x| ks.series.gamma_tail.eval(dhat, 0, x));
    let bw = rule.forward_weights(&samples);
    let mut hist_sum = vec![ZERO; n];
    let mut prof = vec![ZERO; n];
    for k in 1..mprime {
        let x = k as f64 * hx;
        hist.lookup_into(t - dhat * x, &mut prof)?;
        let qk: Vec<f64> = (0..n).map(|d| ht * q_heat_kernel_grid(&grid, x, d as f64 * ht, dhat)).collect();
        for j in 0..n {
            let mut acc = ZERO;
            for l in 0..n {
                acc += qk[(j + n - l) % n] * prof[l];
            }
            hist_sum[j] += bw[k] * acc;
        }
    }
    let g = ctl.ubar.row(m - 1);
    let out = (0..n)
        .map(|j| {
            let v = (state[j] - dhat * hist_sum[j]) / (1.0 + dhat * bw[0]) + g[j];
            if ctl.kind == FieldKind::Real {
                C64::new(v.re, 0.0)
            } else {
                v
            }
        })
        .collect();
    Ok(out)
}
