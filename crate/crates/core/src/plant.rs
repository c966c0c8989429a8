//! Semi-discrete agent dynamics with delayed boundary actuation, integrated
//! with classical Runge-Kutta.

use crate::error::{Error, Result};
use crate::field::{CylinderGrid, Field, FieldKind};
use crate::kernels::PlantCoeffs;
use crate::steady::FormationSpec;
use num_complex::Complex64 as C64;
use std::collections::VecDeque;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const GUARD_LIMIT: f64 = 1e30;
/// Real-axis extent of the RK4 stability region.
pub const RK4_STABILITY: f64 = 2.785;
pub const DT_SAFETY: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreHistory {
    /// commands before t = 0 are zero
    Zero,
    /// requests before t = 0 are an error
    Strict,
}

/// Uniformly sampled history of boundary commands (one angular profile per
/// sample), retained over a fixed horizon.
#[derive(Clone, Debug)]
pub struct DelayLine {
    dt: f64,
    horizon: f64,
    width: usize,
    first: i64,
    samples: VecDeque<Vec<C64>>,
    policy: PreHistory,
}

impl DelayLine {
    pub fn new(dt: f64, horizon: f64, width: usize, policy: PreHistory) -> Self {
        DelayLine {
            dt,
            horizon: horizon.max(0.0) + dt,
            width,
            first: 0,
            samples: VecDeque::new(),
            policy,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn policy(&self) -> PreHistory {
        self.policy
    }

    /// (record index, profile); record r was issued at r dt.
    pub fn records(&self) -> impl Iterator<Item = (i64, &[C64])> {
        self.samples.iter().enumerate().map(move |(k, p)| (self.first + k as i64, p.as_slice()))
    }

    pub fn latest_time(&self) -> Option<f64> {
        if self.samples.is_empty() {
            None
        } else {
            Some((self.first + self.samples.len() as i64 - 1) as f64 * self.dt)
        }
    }

    pub fn record(&mut self, t: f64, profile: &[C64]) -> Result<()> {
        assert_eq!(profile.len(), self.width);
        if self.samples.is_empty() {
            let k = (t / self.dt).round();
            if (k * self.dt - t).abs() > 1e-9 * self.dt.max(t.abs()) {
                return Err(Error::NonUniformSample { expected: k * self.dt, got: t });
            }
            self.first = k as i64;
        } else {
            let expected = (self.first + self.samples.len() as i64) as f64 * self.dt;
            if (expected - t).abs() > 1e-6 * self.dt {
                return Err(Error::NonUniformSample { expected, got: t });
            }
        }
        self.samples.push_back(profile.to_vec());
        let keep = (self.horizon / self.dt).ceil() as usize + 2;
        while self.samples.len() > keep {
            self.samples.pop_front();
            self.first += 1;
        }
        Ok(())
    }

    /// Command at time t, linearly interpolated; later than the newest sample
    /// holds the newest value.
    pub fn lookup_into(&self, t: f64, out: &mut [C64]) -> Result<()> {
        if t < 0.0 {
            if self.policy == PreHistory::Strict {
                return Err(Error::HorizonUnderrun { requested: t, earliest: 0.0 });
            }
            out.iter_mut().for_each(|v| *v = ZERO);
            return Ok(());
        }
        if self.samples.is_empty() {
            out.iter_mut().for_each(|v| *v = ZERO);
            return Ok(());
        }
        let x = t / self.dt - self.first as f64;
        let last = (self.samples.len() - 1) as f64;
        if x >= last {
            out.copy_from_slice(&self.samples[self.samples.len() - 1]);
            return Ok(());
        }
        if x < -1e-9 {
            let earliest = self.first as f64 * self.dt;
            if self.first > 0 || self.policy == PreHistory::Strict {
                return Err(Error::HorizonUnderrun { requested: t, earliest });
            }
            // between t = 0 and the first sample, interpolate from zero
            let w = 1.0 + x.max(-1.0);
            for (o, a) in out.iter_mut().zip(&self.samples[0]) {
                *o = a * w;
            }
            return Ok(());
        }
        let x = x.max(0.0);
        let i = (x.floor() as usize).min(self.samples.len() - 2);
        let w = x - i as f64;
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        for ((o, a), b) in out.iter_mut().zip(a).zip(b) {
            *o = a * (1.0 - w) + b * w;
        }
        Ok(())
    }

    pub fn lookup(&self, t: f64) -> Result<Vec<C64>> {
        let mut out = vec![ZERO; self.width];
        self.lookup_into(t, &mut out)?;
        Ok(out)
    }
}

/// Largest stable RK4 step for the semi-discrete operator, with a 0.9 margin.
pub fn max_stable_dt(grid: &CylinderGrid, coeffs: &[PlantCoeffs]) -> f64 {
    let base = 4.0 / (grid.hs * grid.hs) + 4.0 / (grid.htheta * grid.htheta);
    let worst = coeffs
        .iter()
        .map(|c| base + c.lambda.norm() + c.beta.norm() / grid.hs)
        .fold(0.0, f64::max);
    DT_SAFETY * RK4_STABILITY / worst
}

/// Interior right-hand side of one channel; boundary rows are left at zero.
pub fn channel_rhs(grid: &CylinderGrid, c: &PlantCoeffs, y: &[C64], out: &mut [C64]) {
    let (m, n) = (grid.m, grid.n);
    let ih2 = 1.0 / (grid.hs * grid.hs);
    let bh = c.beta / (2.0 * grid.hs);
    let it2 = 1.0 / (grid.htheta * grid.htheta);
    let cm = C64::new(ih2, 0.0) - bh;
    let cp = C64::new(ih2, 0.0) + bh;
    let c0 = c.lambda - 2.0 * ih2 - 2.0 * it2;
    out[..n].iter_mut().for_each(|v| *v = ZERO);
    out[(m - 1) * n..].iter_mut().for_each(|v| *v = ZERO);
    for i in 1..m - 1 {
        let (lo, mid, hi) = (&y[(i - 1) * n..i * n], &y[i * n..(i + 1) * n], &y[(i + 1) * n..(i + 2) * n]);
        let dst = &mut out[i * n..(i + 1) * n];
        for j in 0..n {
            let jm = if j == 0 { n - 1 } else { j - 1 };
            let jp = if j == n - 1 { 0 } else { j + 1 };
            dst[j] = cp * hi[j] + cm * lo[j] + c0 * mid[j] + (mid[jm] + mid[jp]) * it2;
        }
    }
}

/// Plant state: both channels, the time, and the command histories the
/// delayed boundary reads from.
#[derive(Clone, Debug)]
pub struct PlantState {
    pub u: Field,
    pub z: Field,
    pub t: f64,
    pub delay_u: DelayLine,
    pub delay_z: DelayLine,
}

/// The simulated plant: true coefficients, boundary data and delay.
#[derive(Clone, Debug)]
pub struct Plant {
    pub grid: CylinderGrid,
    pub spec: FormationSpec,
    pub delay: f64,
    pub dt: f64,
    f_u: Vec<C64>,
    g_u: Vec<C64>,
    f_z: Vec<C64>,
    g_z: Vec<C64>,
    bufs: Vec<Vec<C64>>,
    cmd: Vec<C64>,
}

impl Plant {
    pub fn new(grid: CylinderGrid, spec: FormationSpec, delay: f64, dt: f64) -> Result<Self> {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::InvalidParameter(format!("delay {delay} must be non-negative")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
        }
        let bound = max_stable_dt(&grid, &[spec.u.coeffs, spec.z.coeffs]);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("time step {dt} exceeds the stability bound {bound}")));
        }
        let size = grid.m * grid.n;
        Ok(Plant {
            f_u: spec.u.f.profile(&grid, FieldKind::Complex),
            g_u: spec.u.g.profile(&grid, FieldKind::Complex),
            f_z: spec.z.f.profile(&grid, FieldKind::Real),
            g_z: spec.z.g.profile(&grid, FieldKind::Real),
            grid,
            spec,
            delay,
            dt,
            bufs: vec![vec![ZERO; size]; 6],
            cmd: vec![ZERO; grid.n],
        })
    }

    pub fn new_state(&self, u: Field, z: Field, horizon: f64, policy: PreHistory) -> PlantState {
        let h = horizon.max(self.delay);
        PlantState {
            u,
            z,
            t: 0.0,
            delay_u: DelayLine::new(self.dt, h, self.grid.n, policy),
            delay_z: DelayLine::new(self.dt, h, self.grid.n, policy),
        }
    }

    fn set_boundary(&mut self, y: &mut [C64], t: f64, hist: &DelayLine, f: &[C64], g: &[C64], real: bool) -> Result<()> {
        let (m, n) = (self.grid.m, self.grid.n);
        hist.lookup_into(t - self.delay, &mut self.cmd)?;
        y[..n].copy_from_slice(f);
        for j in 0..n {
            let v = g[j] + self.cmd[j];
            y[(m - 1) * n + j] = if real { C64::new(v.re, 0.0) } else { v };
        }
        Ok(())
    }

    /// Record the commands issued at the current time and impose the current
    /// boundary values.
    pub fn apply_boundary(&mut self, state: &mut PlantState, u_cmd: &[C64], z_cmd: &[C64]) -> Result<()> {
        state.delay_u.record(state.t, u_cmd)?;
        let zr: Vec<C64> = z_cmd.iter().map(|v| C64::new(v.re, 0.0)).collect();
        state.delay_z.record(state.t, &zr)?;
        let (fu, gu, fz, gz) = (self.f_u.clone(), self.g_u.clone(), self.f_z.clone(), self.g_z.clone());
        self.set_boundary(&mut state.u.values, state.t, &state.delay_u, &fu, &gu, false)?;
        self.set_boundary(&mut state.z.values, state.t, &state.delay_z, &fz, &gz, true)?;
        Ok(())
    }

    fn step_channel(&mut self, y: &mut Vec<C64>, t: f64, which: usize, hist: &DelayLine) -> Result<()> {
        let grid = self.grid;
        let (c, f, g, real) = if which == 0 {
            (self.spec.u.coeffs, self.f_u.clone(), self.g_u.clone(), false)
        } else {
            (self.spec.z.coeffs, self.f_z.clone(), self.g_z.clone(), true)
        };
        let dt = self.dt;
        let mut bufs = std::mem::take(&mut self.bufs);
        {
            let (k1, rest) = bufs.split_at_mut(1);
            let (k2, rest) = rest.split_at_mut(1);
            let (k3, rest) = rest.split_at_mut(1);
            let (k4, rest) = rest.split_at_mut(1);
            let stage = &mut rest[0];
            let (k1, k2, k3, k4) = (&mut k1[0], &mut k2[0], &mut k3[0], &mut k4[0]);

            channel_rhs(&grid, &c, y, k1);
            for (s, (a, b)) in stage.iter_mut().zip(y.iter().zip(k1.iter())) {
                *s = a + b * (0.5 * dt);
            }
            self.set_boundary(stage, t + 0.5 * dt, hist, &f, &g, real)?;
            channel_rhs(&grid, &c, stage, k2);
            for (s, (a, b)) in stage.iter_mut().zip(y.iter().zip(k2.iter())) {
                *s = a + b * (0.5 * dt);
            }
            self.set_boundary(stage, t + 0.5 * dt, hist, &f, &g, real)?;
            channel_rhs(&grid, &c, stage, k3);
            for (s, (a, b)) in stage.iter_mut().zip(y.iter().zip(k3.iter())) {
                *s = a + b * dt;
            }
            self.set_boundary(stage, t + dt, hist, &f, &g, real)?;
            channel_rhs(&grid, &c, stage, k4);
            for i in 0..y.len() {
                y[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
            }
            self.set_boundary(y, t + dt, hist, &f, &g, real)?;
            if real {
                y.iter_mut().for_each(|v| v.im = 0.0);
            }
        }
        self.bufs = bufs;
        Ok(())
    }

    /// Advance both channels by one step and check the instability guard.
    pub fn step(&mut self, state: &mut PlantState) -> Result<()> {
        let t = state.t;
        let mut u = std::mem::take(&mut state.u.values);
        let mut z = std::mem::take(&mut state.z.values);
        let r = self
            .step_channel(&mut u, t, 0, &state.delay_u)
            .and_then(|_| self.step_channel(&mut z, t, 1, &state.delay_z));
        state.u.values = u;
        state.z.values = z;
        r?;
        state.t = ((t / self.dt).round() + 1.0) * self.dt;
        let worst = state.u.values.iter().chain(&state.z.values).map(|v| v.norm()).fold(0.0, |a: f64, b| {
            if b.is_nan() {
                f64::INFINITY
            } else {
                a.max(b)
            }
        });
        if worst > GUARD_LIMIT {
            return Err(Error::Instability { t: state.t, value: worst });
        }
        Ok(())
    }
}
