//! Exact integrals of the command history against the boundary slope
//! kernels G_n. The delay line holds a piecewise-linear signal (hats of
//! width dt around each record, zero before t = 0), so with the first and
//! second antiderivatives C1, C2 of G_n every hat integrates in closed form
//! and a run of equal records collapses to two terms.

use crate::field::{analyze_profile, CylinderGrid};
use crate::kernels::DelaySeries;
use crate::plant::{DelayLine, PreHistory};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const TABLE_CELLS: usize = 2048;
const CELL_POINTS: usize = 8;

/// C1(x) = int_0^x G_n and C2(x) = int_0^x C1 on x in [0, 1], tabulated in
/// u = sqrt(x) (where both are smooth) for cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct CumulativeKernel {
    cells: usize,
    modes: usize,
    /// [node][|n|] -> (C1, dC1/du, C2, dC2/du)
    tab: Vec<[C64; 4]>,
}

#[derive(Clone, Copy, Debug)]
struct Probe {
    idx: usize,
    b: [f64; 4],
}

impl CumulativeKernel {
    pub fn build(tail: &DelaySeries, dhat: f64, nmax: usize, cells: usize) -> Self {
        let a = dhat * PI * PI;
        let hu = 1.0 / cells as f64;
        let gl = gauss_legendre(CELL_POINTS);
        let modes = nmax + 1;
        let kap0 = tail.kappa(dhat, 0);
        // e^{kappa_n x} = e^{kappa_0 x} r^{n^2}, r = e^{-Dhat x}
        let growth = |x: f64, out: &mut [C64]| {
            let base = (kap0 * x).exp();
            let r = (-dhat * x).exp();
            let (mut pw, mut step) = (1.0, r);
            for o in out.iter_mut() {
                *o = base * pw;
                pw *= step;
                step *= r * r;
            }
        };
        let mut ex = vec![ZERO; modes];
        let mut tab = vec![[ZERO; 4]; (cells + 1) * modes];
        // 2u G(u^2) -> g_inf sqrt(pi / a) as u -> 0
        for n in 0..modes {
            tab[n][1] = tail.g_inf * (PI / a).sqrt();
        }
        let mut c1 = vec![ZERO; modes];
        let mut m1 = vec![ZERO; modes];
        for j in 0..cells {
            for &(t, w) in &gl {
                let u = (j as f64 + t) * hu;
                let x = u * u;
                let f = tail.base(a, x).0;
                growth(x, &mut ex);
                for n in 0..modes {
                    let g = ex[n] * f * (2.0 * u * w * hu);
                    c1[n] += g;
                    m1[n] += g * x;
                }
            }
            let u = (j + 1) as f64 * hu;
            let x = u * u;
            let f = tail.base(a, x).0;
            growth(x, &mut ex);
            for n in 0..modes {
                let c2 = x * c1[n] - m1[n];
                let d1 = ex[n] * f * (2.0 * u);
                tab[(j + 1) * modes + n] = [c1[n], d1, c2, 2.0 * u * c1[n]];
            }
        }
        CumulativeKernel { cells, modes, tab }
    }

    pub fn max_wavenumber(&self) -> usize {
        self.modes - 1
    }

    fn probe(&self, x: f64) -> Probe {
        let u = x.clamp(0.0, 1.0).sqrt() * self.cells as f64;
        let idx = (u.floor() as usize).min(self.cells - 1);
        let t = u - idx as f64;
        let hu = 1.0 / self.cells as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        Probe {
            idx,
            b: [2.0 * t3 - 3.0 * t2 + 1.0, (t3 - 2.0 * t2 + t) * hu, 3.0 * t2 - 2.0 * t3, (t3 - t2) * hu],
        }
    }

    fn interp(&self, p: &Probe, n: usize, field: usize) -> C64 {
        let lo = &self.tab[p.idx * self.modes + n];
        let hi = &self.tab[(p.idx + 1) * self.modes + n];
        lo[field] * p.b[0] + lo[field + 1] * p.b[1] + hi[field] * p.b[2] + hi[field + 1] * p.b[3]
    }

    pub fn c1(&self, n: usize, x: f64) -> C64 {
        if x <= 0.0 {
            return ZERO;
        }
        self.interp(&self.probe(x), n, 0)
    }

    pub fn c2(&self, n: usize, x: f64) -> C64 {
        if x <= 0.0 {
            return ZERO;
        }
        self.interp(&self.probe(x), n, 2)
    }
}

/// A maximal block of identical consecutive records, as angular modes.
#[derive(Clone, Debug)]
pub struct Run {
    pub first: i64,
    pub last: i64,
    pub coef: Vec<C64>,
}

/// The recorded command signal in run-length form; record r sits at r dt.
#[derive(Clone, Debug)]
pub struct CommandRuns {
    pub dt: f64,
    /// the signal is zero before record 0 (rather than unknown)
    pub zero_start: bool,
    pub runs: Vec<Run>,
}

impl CommandRuns {
    /// Mode coefficients (in `grid.wavenumbers()` order) times `scale`.
    pub fn from_delay_line(hist: &DelayLine, grid: &CylinderGrid, scale: C64) -> Self {
        let mut runs: Vec<Run> = Vec::new();
        let mut prev: Option<&[C64]> = None;
        for (r, prof) in hist.records() {
            if prev == Some(prof) {
                runs.last_mut().expect("run open").last = r;
            } else {
                let coef = analyze_profile(grid, prof).into_iter().map(|c| c * scale).collect();
                runs.push(Run { first: r, last: r, coef });
            }
            prev = Some(prof);
        }
        CommandRuns {
            dt: hist.dt(),
            zero_start: hist.policy() == PreHistory::Zero,
            runs,
        }
    }

    /// Index the next record will get.
    pub fn next_index(&self) -> i64 {
        self.runs.last().map_or(0, |r| r.last + 1)
    }

    pub fn push(&mut self, coef: Vec<C64>) {
        let r = self.next_index();
        self.runs.push(Run { first: r, last: r, coef });
    }
}

/// Table lookups for every wavenumber 0..=nmax at one abscissa.
fn all_modes(kern: &CumulativeKernel, x: f64, field: usize, out: &mut [C64]) {
    if x <= 0.0 {
        out.fill(ZERO);
        return;
    }
    let p = kern.probe(x);
    for (n, o) in out.iter_mut().enumerate() {
        *o = kern.interp(&p, n, field);
    }
}

/// Weight of one run (records at x_first > ... > x_last, spacing delta in x)
/// under G_n 1[0, X], for every wavenumber slot of the grid.
fn run_weights(kern: &CumulativeKernel, grid: &CylinderGrid, delta: f64, xf: f64, xl: f64, x_end: f64, half_hat: bool, out: &mut [C64]) {
    let half = grid.n / 2;
    let modes = half + 1;
    let mut buf = vec![ZERO; 6 * modes];
    let (e1, rest) = buf.split_at_mut(modes);
    let (e2, rest) = rest.split_at_mut(modes);
    let (a, rest) = rest.split_at_mut(modes);
    let (b, rest) = rest.split_at_mut(modes);
    let (c, d) = rest.split_at_mut(modes);
    all_modes(kern, x_end, 0, e1);
    all_modes(kern, x_end, 2, e2);
    // C1, C2 of the kernel truncated at X
    let c1w = |x: f64, o: &mut [C64]| {
        if x >= x_end {
            o.copy_from_slice(e1);
        } else {
            all_modes(kern, x, 0, o);
        }
    };
    let c2w = |x: f64, o: &mut [C64]| {
        if x >= x_end {
            for ((o, &v1), &v2) in o.iter_mut().zip(e1.iter()).zip(e2.iter()) {
                *o = v2 + v1 * (x - x_end);
            }
        } else {
            all_modes(kern, x, 2, o);
        }
    };
    c2w(xl, c);
    c2w(xl - delta, d);
    if half_hat {
        // the signal jumps up from zero at t = 0
        c1w(xf, a);
        for n in 0..modes {
            a[n] -= (c[n] - d[n]) / delta;
        }
    } else {
        c2w(xf + delta, a);
        c2w(xf, b);
        for n in 0..modes {
            a[n] = ((a[n] - b[n]) - (c[n] - d[n])) / delta;
        }
    }
    for n in grid.wavenumbers() {
        out[(n + half as i32) as usize] = a[n.unsigned_abs() as usize];
    }
}

/// int_0^X G_n(x) v(t0 - Dhat x) dx for every wavenumber n of the grid,
/// with v the piecewise-linear command signal. Adds into `out`.
pub fn integrate_history(kern: &CumulativeKernel, runs: &CommandRuns, grid: &CylinderGrid, dhat: f64, t0: f64, x_end: f64, out: &mut [C64]) {
    let delta = runs.dt / dhat;
    let xr = |r: i64| (t0 - r as f64 * runs.dt) / dhat;
    let mut wts = vec![ZERO; grid.n];
    let start = runs.runs.partition_point(|run| xr(run.last) - delta >= x_end);
    for run in &runs.runs[start..] {
        let (xf, xl) = (xr(run.first), xr(run.last));
        if xf + delta <= 0.0 {
            break;
        }
        run_weights(kern, grid, delta, xf, xl, x_end, run.first == 0 && runs.zero_start, &mut wts);
        for ((o, w), c) in out.iter_mut().zip(&wts).zip(&run.coef) {
            *o += w * c;
        }
    }
}

/// Run weights for the rows of the target state, t0 = t - Dhat (1 - s_k)
/// and X = s_k. They depend on the run only through its age, so they are
/// kept until the estimate or the time step changes.
#[derive(Clone, Debug)]
struct Cached {
    age_last: i64,
    half_hat: bool,
    w: Vec<C64>,
}

#[derive(Clone, Debug, Default)]
pub struct WeightCache {
    key: Option<(u64, u64)>,
    // [row][age of the run's first record]
    rows: Vec<Vec<Option<Cached>>>,
}

impl WeightCache {
    /// Row k of the history integral, with record `now` issued at time t.
    /// Adds into `out`.
    pub fn row_integral(&mut self, kern: &CumulativeKernel, runs: &CommandRuns, grid: &CylinderGrid, dhat: f64, now: i64, k: usize, out: &mut [C64]) {
        let key = (dhat.to_bits(), runs.dt.to_bits());
        if self.key != Some(key) {
            self.rows.clear();
            self.key = Some(key);
        }
        if self.rows.len() <= k {
            self.rows.resize(k + 1, Vec::new());
        }
        let row = &mut self.rows[k];
        let delta = runs.dt / dhat;
        let s = grid.s(k);
        let xr = |r: i64| (now - r) as f64 * delta - (1.0 - s);
        // runs wholly outside [0, X] contribute nothing; they are in time order
        let start = runs.runs.partition_point(|run| xr(run.last) - delta >= s);
        for run in &runs.runs[start..] {
            let (xf, xl) = (xr(run.first), xr(run.last));
            if xf + delta <= 0.0 {
                break;
            }
            let half_hat = run.first == 0 && runs.zero_start;
            let (age, age_last) = ((now - run.first) as usize, now - run.last);
            if row.len() <= age {
                row.resize(age + 1, None);
            }
            let slot = &mut row[age];
            if !matches!(slot, Some(c) if c.age_last == age_last && c.half_hat == half_hat) {
                let mut w = vec![ZERO; grid.n];
                run_weights(kern, grid, delta, xf, xl, s, half_hat, &mut w);
                *slot = Some(Cached { age_last, half_hat, w });
            }
            let wts = &slot.as_ref().expect("filled").w;
            for ((o, w), c) in out.iter_mut().zip(wts.iter()).zip(&run.coef) {
                *o += w * c;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.iter().filter(|c| c.is_some()).count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Weights of the next record of `runs` placed at x = 0 (the command being
/// issued), per wavenumber slot.
pub fn newest_weights(kern: &CumulativeKernel, runs: &CommandRuns, grid: &CylinderGrid, dhat: f64, x_end: f64) -> Vec<C64> {
    let half_hat = runs.next_index() == 0 && runs.zero_start;
    let mut out = vec![ZERO; grid.n];
    run_weights(kern, grid, runs.dt / dhat, 0.0, 0.0, x_end, half_hat, &mut out);
    out
}
