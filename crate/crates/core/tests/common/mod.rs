#![allow(dead_code)]

use formation_core::controller::{simpson_control, ChannelController, HistoryWindow};
use formation_core::estimator::{compute_p1, compute_p2, project, tau_signal, DelayEstimator};
use formation_core::field::{analyze, analyze_profile, synthesize_profile, CylinderGrid, Field, FieldKind, ModeStack};
use formation_core::kernels::{build_kernel_set, kernel_k, KernelSeries, KernelSet, PlantCoeffs};
use formation_core::manufactured::compatible_pair;
use formation_core::plant::{DelayLine, Plant, PreHistory};
use formation_core::steady::{steady_field, BoundaryData, ChannelSpec, FormationSpec};
use formation_core::transform::{inverse_h, inverse_w, transform_h, transform_h_mode, transform_w, transform_w_mode};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub struct Check {
    pub ok: bool,
    pub detail: String,
}

impl Check {
    fn new(ok: bool, detail: String) -> Self {
        Check { ok, detail }
    }
}

// I1(z)/z for y = z^2 > 0, J1(z)/z for y = -z^2, straight from the power series.
pub fn bessel_ratio(y: f64) -> f64 {
    let mut term = 0.5;
    let mut sum = term;
    for m in 1..400 {
        term *= y / 4.0 / (m as f64 * (m + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

pub fn k_oracle(lp: f64, s: f64, tau: f64) -> f64 {
    -lp * tau * bessel_ratio(lp * (s * s - tau * tau))
}

pub fn l_oracle(lp: f64, s: f64, tau: f64) -> f64 {
    -lp * tau * bessel_ratio(-lp * (s * s - tau * tau))
}

pub fn gl(n: usize) -> Vec<(f64, f64)> {
    // Newton on the Legendre recurrence, nodes mapped to [0, 1]
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
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
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out
}

/// Composite Gauss-Legendre on [a, b].
pub fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gl(16);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        for &(x, w) in &rule {
            acc += w * h * f(a + (p as f64 + x) * h);
        }
    }
    acc
}

pub fn sine_coeffs(lp: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| integrate(0.0, 1.0, 4 * count, |x| k_oracle(lp, 1.0, x) * (i as f64 * PI * x).sin()))
        .collect()
}

fn tridiag_solve(a: f64, b: f64, c: f64, rhs: &mut [f64]) {
    // constant-coefficient Thomas algorithm
    let n = rhs.len();
    let mut cp = vec![0.0; n];
    cp[0] = c / b;
    rhs[0] /= b;
    for i in 1..n {
        let den = b - a * cp[i - 1];
        cp[i] = c / den;
        rhs[i] = (rhs[i] - a * rhs[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= cp[i] * rhs[i + 1];
    }
}

/// gamma_s = Dhat (gamma_tautau + (lp - n^2) gamma), gamma(s, 0) = gamma(s, 1) = 0,
/// started from k(1, .). Crank-Nicolson after four backward-Euler half steps.
/// Returns gamma at each of `s_out` on the tau nodes j / cells.
pub fn gamma_crank_nicolson(lp: f64, n: i32, dhat: f64, cells: usize, ds: f64, s_out: &[f64]) -> Vec<Vec<f64>> {
    let h = 1.0 / cells as f64;
    let q = lp - (n * n) as f64;
    let mut g: Vec<f64> = (1..cells).map(|j| k_oracle(lp, 1.0, j as f64 * h)).collect();
    let apply = |g: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for j in 0..g.len() {
            let l = if j == 0 { 0.0 } else { g[j - 1] };
            let r = if j + 1 == g.len() { 0.0 } else { g[j + 1] };
            out.push(dhat * ((l - 2.0 * g[j] + r) / (h * h) + q * g[j]));
        }
    };
    let mut lg = Vec::new();
    let mut s = 0.0;
    let mut out = Vec::new();
    let mut targets = s_out.iter().peekable();
    let off = -dhat / (h * h);
    let diag = 2.0 * dhat / (h * h) - dhat * q;
    for _ in 0..4 {
        let k = ds / 2.0;
        tridiag_solve(k * off, 1.0 + k * diag, k * off, &mut g);
        s += k;
    }
    loop {
        while let Some(&&t) = targets.peek() {
            if (s - t).abs() < 1e-9 {
                out.push(g.clone());
                targets.next();
            } else {
                break;
            }
        }
        if targets.peek().is_none() {
            break;
        }
        apply(&g, &mut lg);
        let k = ds / 2.0;
        let mut rhs: Vec<f64> = g.iter().zip(&lg).map(|(a, b)| a + k * b).collect();
        tridiag_solve(k * off, 1.0 + k * diag, k * off, &mut rhs);
        g = rhs;
        s += ds;
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn crand(r: &mut ChaCha8Rng) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

// ---------------------------------------------------------------- criterion 1

pub fn kernel_identities() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;

    // FD residual of the kernel PDE, refinement h -> h/2
    let pts = [(0.7, 0.3), (0.9, 0.5), (0.5, 0.2), (0.95, 0.05)];
    let mut worst_ratio: f64 = 4.0;
    for &lp in &[-5.0, 8.0, 12.0, 29.75] {
        let c = PlantCoeffs::real(lp, 0.0);
        let k = |s: f64, t: f64| kernel_k(s, t, &c).unwrap().re;
        let resid = |h: f64| {
            pts.iter()
                .map(|&(s, t)| {
                    let kss = (k(s + h, t) - 2.0 * k(s, t) + k(s - h, t)) / (h * h);
                    let ktt = (k(s, t + h) - 2.0 * k(s, t) + k(s, t - h)) / (h * h);
                    (kss - ktt - lp * k(s, t)).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = resid(0.02) / resid(0.01);
        if (ratio - 4.0).abs() > (worst_ratio - 4.0).abs() {
            worst_ratio = ratio;
        }
        for q in 0..=20 {
            let s = 0.05 * q as f64;
            ok &= kernel_k(s, 0.0, &c).unwrap().norm() == 0.0;
            ok &= (kernel_k(s, s, &c).unwrap().re + lp * s / 2.0).abs() <= 1e-14 * lp.abs().max(1.0);
        }
    }
    ok &= (worst_ratio - 4.0).abs() < 0.5;
    notes.push(format!("PDE residual ratio {worst_ratio:.3}"));

    // gamma_n(0, .) against an independent series for k(1, .)
    let grid = CylinderGrid::new(51, 8).unwrap();
    let mut worst: f64 = 0.0;
    for &lp in &[-5.0, 0.0, 8.0, 12.0] {
        let series = KernelSeries::new(PlantCoeffs::real(lp, 0.0), grid, 64).unwrap();
        for &dhat in &[0.2, 1.0, 2.0] {
            let ks = KernelSet::build(series.clone(), dhat).unwrap();
            for n in [0, 1, 3] {
                for s in grid.s_nodes() {
                    worst = worst.max((ks.gamma(n, 0.0, s).re - k_oracle(lp, 1.0, s)).abs());
                }
            }
        }
    }
    ok &= worst <= 1e-8;
    notes.push(format!("max |gamma_n(0,.) - k(1,.)| {worst:.2e}"));
    Check::new(ok, notes.join(", "))
}

// ---------------------------------------------------------------- criterion 2

/// A random bandlimited (phi, theta) pair with theta(0) = phi(1) in every mode.
/// Random compatible pair on the modes |n| <= nmax. Each wavenumber omega is drawn
/// so that the actuator profile exp(Dhat (lambda' - n^2 - omega^2) s) has rate at
/// most `rate`, which keeps it resolved on the s grid. Amplitudes are scaled so
/// every mode stays O(1).
pub fn random_pair(ks: &KernelSet, r: &mut ChaCha8Rng, nmax: i32, rate: f64) -> (ModeStack, ModeStack) {
    let g = ks.grid();
    let lp = ks.series.lambda_prime().re;
    let mut phi = ModeStack::zeros(g);
    let mut theta = ModeStack::zeros(g);
    for n in g.wavenumbers().filter(|n| n.abs() <= nmax) {
        let mu = lp - (n * n) as f64;
        let lo = (mu - rate / ks.dhat).max(0.25).sqrt();
        let hi = (mu + rate / ks.dhat).min(36.0).sqrt();
        let mut draw = || {
            let om: f64 = if lo < hi { r.gen_range(lo..hi) } else { lo };
            let growth = (ks.dhat * (mu - om * om)).max(0.0).exp();
            (r.gen_range(-1.0..1.0) / growth, om)
        };
        let re_terms: Vec<_> = (0..3).map(|_| draw()).collect();
        let im_terms: Vec<_> = (0..3).map(|_| draw()).collect();
        let (pr, tr) = compatible_pair(ks, n, &re_terms);
        let (pi, ti) = compatible_pair(ks, n, &im_terms);
        let i = C64::new(0.0, 1.0);
        for k in 0..g.m {
            phi.mode_mut(n)[k] = pr[k] + i * pi[k];
            theta.mode_mut(n)[k] = tr[k] + i * ti[k];
        }
    }
    (phi, theta)
}

fn max_diff(a: &ModeStack, b: &ModeStack) -> f64 {
    let g = a.grid;
    g.wavenumbers()
        .flat_map(|n| a.mode(n).iter().zip(b.mode(n)).map(|(x, y)| (x - y).norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

fn round_trip_errors(ks: &KernelSet, seed: u64, nmax: i32, rate: f64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut ew, mut eh): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let (phi, theta) = random_pair(ks, &mut r, nmax, rate);
        let w = transform_w(&phi, ks);
        let h = transform_h(&theta, &phi, ks);
        ew = ew.max(max_diff(&inverse_w(&w, ks), &phi));
        eh = eh.max(max_diff(&inverse_h(&h, &w, ks), &theta));
    }
    (ew, eh)
}

/// Resolved bandlimited fields are asserted; the all-modes figure is reported,
/// since high modes put a sub-cell layer exp(-Dhat n^2 s) into h.
pub fn transform_round_trips() -> Check {
    let grid = CylinderGrid::new(51, 50).unwrap();
    let ks = build_kernel_set(PlantCoeffs::real(12.0, 0.5), 1.0, grid, 64).unwrap();
    let (ew, eh) = round_trip_errors(&ks, 11, 4, 8.0);
    let (aw, ah) = round_trip_errors(&ks, 12, 25, 8.0);
    Check::new(
        ew <= 1e-8 && eh <= 1e-8,
        format!("|n|<=4: (w,phi) {ew:.2e}, (h,theta) {eh:.2e}; all |n|<=25: (w,phi) {aw:.2e}, (h,theta) {ah:.2e}"),
    )
}

// ---------------------------------------------------------------- criterion 3

struct History {
    coef: Vec<(i32, C64, f64, f64)>,
}

impl History {
    fn eval(&self, grid: &CylinderGrid, nu: f64) -> Vec<C64> {
        synthesize_profile(
            grid,
            |n| {
                self.coef
                    .iter()
                    .filter(|c| c.0 == n)
                    .map(|&(_, a, om, ph)| a * (om * nu + ph).cos())
                    .sum()
            },
            FieldKind::Complex,
        )
    }
}

fn fill_line(grid: &CylinderGrid, dt: f64, t: f64, hist: &History, alpha: &[C64]) -> DelayLine {
    let mut line = DelayLine::new(dt, t + 1.0, grid.n, PreHistory::Zero);
    let steps = (t / dt).round() as i64;
    for r in 0..steps {
        let nu = r as f64 * dt;
        let psi = (nu - t).exp();
        let p: Vec<C64> = hist.eval(grid, nu).iter().zip(alpha).map(|(a, b)| a + psi * b).collect();
        line.record(nu, &p).unwrap();
    }
    line
}

/// One spectral-vs-Simpson comparison. The history is a smooth signal plus
/// a correction chosen so the command being issued continues it.
pub fn cross_realization_case(seed: u64) -> (f64, f64) {
    let grid = CylinderGrid::new(51, 50).unwrap();
    let beta = C64::new(0.5, 0.0);
    let dhat = 1.0;
    let ks = build_kernel_set(PlantCoeffs::real(12.0, 0.5), dhat, grid, 64).unwrap();
    let mut r = rng(seed);
    let ubar = Field::from_fn(grid, FieldKind::Complex, |s, th| C64::new(1.0 + s, 0.3 * s) * C64::new(0.0, th).exp());
    let mut pert: Vec<(i32, usize, C64)> = Vec::new();
    for n in -4..=4 {
        for j in 1..=3 {
            pert.push((n, j, 0.3 * crand(&mut r) / (1.0 + (n * n) as f64 + (j * j) as f64)));
        }
    }
    let u = Field::from_fn(grid, FieldKind::Complex, |s, th| {
        let p: C64 = pert
            .iter()
            .map(|&(n, j, a)| a * (j as f64 * PI * s).sin() * C64::new(0.0, n as f64 * th).exp())
            .sum();
        p + C64::new(1.0 + s, 0.3 * s) * C64::new(0.0, th).exp()
    });
    let hist = History {
        coef: (-3..=3)
            .map(|n| (n, 0.2 * crand(&mut r), r.gen_range(0.5..3.0), r.gen_range(0.0..6.0)))
            .collect(),
    };
    let (dt, t) = (1e-3, 2.0);
    let zero = vec![ZERO; grid.n];
    let half = (grid.n / 2) as i32;

    let command = |alpha: &[C64]| {
        let line = fill_line(&grid, dt, t, &hist, alpha);
        let ctl = ChannelController::new(ubar.clone(), beta);
        (ctl.control(&ks, &u, &line, t, false).unwrap().command, line, ctl)
    };
    let (c0, _, _) = command(&zero);
    let mut e0 = zero.clone();
    e0[0] = C64::new(1.0, 0.0);
    let (ce, _, _) = command(&e0);
    let resp: Vec<C64> = ce.iter().zip(&c0).map(|(a, b)| a - b).collect();
    let lhat = analyze_profile(&grid, &resp);
    let ehat = analyze_profile(&grid, &e0);
    let target = hist.eval(&grid, t);
    let dhat_c = analyze_profile(&grid, &target.iter().zip(&c0).map(|(a, b)| a - b).collect::<Vec<_>>());
    let alpha = synthesize_profile(
        &grid,
        |n| {
            let i = (n + half) as usize;
            dhat_c[i] / (lhat[i] / ehat[i] - 1.0)
        },
        FieldKind::Complex,
    );
    let (c, line, ctl) = command(&alpha);
    let cont = c
        .iter()
        .zip(&target)
        .zip(&alpha)
        .map(|((c, u), a)| (c - u - a).norm())
        .fold(0.0, f64::max);
    let simp = simpson_control(&ks, &ctl, &u, &line, t, 51, HistoryWindow::Estimate).unwrap();
    let g = ubar.row(grid.m - 1);
    let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = c
        .iter()
        .zip(&simp)
        .zip(g)
        .map(|((a, b), g)| (a - (b - g)).norm())
        .fold(0.0, f64::max);
    (diff / scale, cont / scale)
}

pub fn cross_realization() -> Check {
    let mut worst: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for seed in 0..10 {
        let (rel, cont) = cross_realization_case(100 + seed);
        worst = worst.max(rel);
        gap = gap.max(cont);
    }
    Check::new(
        worst <= 1e-4,
        format!("max relative difference {worst:.2e} over 10 states (command continuity {gap:.1e})"),
    )
}

// ---------------------------------------------------------------- criterion 9

fn quiet_spec(lu: f64, bu: f64, fu: BoundaryData, gu: BoundaryData) -> FormationSpec {
    FormationSpec {
        u: ChannelSpec {
            coeffs: PlantCoeffs::real(lu, bu),
            f: fu,
            g: gu,
        },
        z: ChannelSpec {
            coeffs: PlantCoeffs::real(1.0, 0.0),
            f: BoundaryData::constant(0.0),
            g: BoundaryData::constant(0.0),
        },
    }
}

/// Amplitude of sin(pi s) e^{j n theta} after time `t_end`, no actuation.
pub fn mode_amplitude(m: usize, nth: usize, n: i32, lambda: f64, dt: f64, t_end: f64) -> f64 {
    let grid = CylinderGrid::new(m, nth).unwrap();
    let spec = quiet_spec(lambda, 0.0, BoundaryData::constant(0.0), BoundaryData::constant(0.0));
    let mut plant = Plant::new(grid, spec, 0.5, dt).unwrap();
    let u = Field::from_fn(grid, FieldKind::Complex, |s, th| (PI * s).sin() * C64::new(0.0, n as f64 * th).exp());
    let z = Field::zeros(grid, FieldKind::Real);
    let mut st = plant.new_state(u, z, 1.0, PreHistory::Zero);
    let zero = vec![ZERO; grid.n];
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        plant.apply_boundary(&mut st, &zero, &zero).unwrap();
        plant.step(&mut st).unwrap();
    }
    let modes = analyze(&st.u);
    let prof = modes.mode(n);
    let (mut num, mut den) = (ZERO, 0.0);
    for k in 0..grid.m {
        let b = (PI * grid.s(k)).sin();
        num += prof[k] * b;
        den += b * b;
    }
    (num / den).norm()
}

/// Largest deviation from the continuum steady field over [0, t_end] with
/// the actuation off.
pub fn steady_drift(m: usize, nth: usize, t_end: f64) -> f64 {
    let grid = CylinderGrid::new(m, nth).unwrap();
    let f = BoundaryData::new(vec![(0, C64::new(0.5, 0.0)), (1, C64::new(0.3, -0.2))]);
    let g = BoundaryData::new(vec![(0, C64::new(-0.4, 0.1)), (-1, C64::new(0.2, 0.0))]);
    let spec = quiet_spec(4.0, 0.5, f, g);
    let u0 = steady_field(&spec.u, &grid, FieldKind::Complex).unwrap();
    let dt = formation_core::plant::max_stable_dt(&grid, &[spec.u.coeffs, spec.z.coeffs]);
    let mut plant = Plant::new(grid, spec, 0.5, dt).unwrap();
    let z = Field::zeros(grid, FieldKind::Real);
    let mut st = plant.new_state(u0.clone(), z, 1.0, PreHistory::Zero);
    let zero = vec![ZERO; grid.n];
    let steps = (t_end / dt).ceil() as usize;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        plant.apply_boundary(&mut st, &zero, &zero).unwrap();
        plant.step(&mut st).unwrap();
        worst = worst.max(st.u.sub(&u0).max_abs());
    }
    worst
}

pub fn plant_analytics() -> Check {
    let (lambda, t_end, dt) = (12.0, 0.5, 1e-4);
    let amp = mode_amplitude(51, 50, 1, lambda, dt, t_end);
    let exact = ((lambda - 1.0 - PI * PI) * t_end).exp();
    let rel = (amp / exact - 1.0).abs();
    // exact solution of the semi-discrete system on the same grid
    let g = CylinderGrid::new(51, 50).unwrap();
    let ev = lambda
        - 4.0 / (g.hs * g.hs) * (PI * g.hs / 2.0).sin().powi(2)
        - 4.0 / (g.htheta * g.htheta) * (g.htheta / 2.0).sin().powi(2);
    let rel_sd = (amp / (ev * t_end).exp() - 1.0).abs();
    let e_coarse = (mode_amplitude(21, 8, 0, lambda, dt, t_end) / ((lambda - PI * PI) * t_end).exp() - 1.0).abs();
    let e_fine = (mode_amplitude(41, 8, 0, lambda, dt, t_end) / ((lambda - PI * PI) * t_end).exp() - 1.0).abs();
    let order = e_coarse / e_fine;
    let d1 = steady_drift(21, 16, 5.0);
    let d2 = steady_drift(41, 32, 5.0);
    let c = d2 / (1.0f64 / 40.0).powi(2);
    let ok = rel <= 1e-4 && rel_sd <= 1e-6 && (order - 4.0).abs() < 0.5 && d1 / d2 > 3.0;
    Check::new(
        ok,
        format!(
            "mode decay vs e^(lambda-n^2-pi^2)t {rel:.2e} (tol 1e-4; vs semi-discrete eigenvalue {rel_sd:.1e}), \
             s-refinement ratio {order:.2}, steady drift {d1:.2e} -> {d2:.2e} (C = {c:.2})"
        ),
    )
}

// ---------------------------------------------------------------- criterion 10

/// Mode-n P1 for w = sin(pi s), h(0) = 0, by series and dense Gauss-Legendre.
pub fn p1_oracle(lambda: f64, beta: f64, dhat: f64, n: i32, s_nodes: &[f64]) -> Vec<f64> {
    let lp = lambda - beta * beta / 4.0;
    let terms = 80;
    let c = sine_coeffs(lp, terms);
    let w = |t: f64| (PI * t).sin();
    let phi = |t: f64| w(t) + integrate(0.0, t, 2, |x| l_oracle(lp, t, x) * w(x));
    let rule = gl(16);
    let panels = 60;
    let mut pts = Vec::new();
    for p in 0..panels {
        for &(x, wt) in &rule {
            let t = (p as f64 + x) / panels as f64;
            pts.push((t, wt / panels as f64, phi(t)));
        }
    }
    let moments: Vec<f64> = (1..=terms)
        .map(|i| pts.iter().map(|&(t, wt, f)| wt * f * (i as f64 * PI * t).sin()).sum())
        .collect();
    let lw = integrate(0.0, 1.0, 40, |t| l_oracle(lp, 1.0, t) * w(t));
    s_nodes
        .iter()
        .map(|&s| {
            let mut t1 = 0.0;
            let mut slope = 0.0;
            for i in 1..=terms {
                let mu = lp - (n * n) as f64 - (i * i) as f64 * PI * PI;
                let e = (dhat * mu * s).exp();
                t1 += 2.0 * c[i - 1] * mu * e * moments[i - 1];
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                slope += 2.0 * c[i - 1] * e * i as f64 * PI * sign;
            }
            t1 - slope * lw
        })
        .collect()
}

pub fn p1_agreement() -> f64 {
    let grid = CylinderGrid::new(51, 8).unwrap();
    let (lambda, beta, dhat, n) = (12.0, 0.5, 1.0, 1);
    let ks = build_kernel_set(PlantCoeffs::real(lambda, beta), dhat, grid, 64).unwrap();
    let mut w = ModeStack::zeros(grid);
    for (k, v) in w.mode_mut(n).iter_mut().enumerate() {
        *v = C64::new((PI * grid.s(k)).sin(), 0.0);
    }
    let h = ModeStack::zeros(grid);
    let p1 = compute_p1(&w, &h, &ks).values(&ks);
    let nodes: Vec<f64> = grid.s_nodes()[1..].to_vec();
    let oracle = p1_oracle(lambda, beta, dhat, n, &nodes);
    let scale = oracle.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let got = &p1.mode(n)[1..];
    got.iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

/// P2 against a fourth-order central difference in Dhat of the target-state map.
pub fn p2_agreement() -> f64 {
    let grid = CylinderGrid::new(51, 8).unwrap();
    let coeffs = PlantCoeffs::real(12.0, 0.5);
    let series = KernelSeries::new(coeffs, grid, 64).unwrap();
    let (dhat, n) = (1.0, 2);
    let ks = KernelSet::build(series.clone(), dhat).unwrap();
    let (phi, theta) = compatible_pair(&ks, n, &[(0.8, 1.9), (-0.3, 4.1)]);
    let mut w = ModeStack::zeros(grid);
    let mut h = ModeStack::zeros(grid);
    transform_w_mode(&ks, &phi, w.mode_mut(n));
    transform_h_mode(&ks, n, &theta, &phi, h.mode_mut(n));
    let p2 = compute_p2(&w, &h, &ks);
    let eps = 1e-3;
    let h_at = |d: f64| {
        let k = KernelSet::build(series.clone(), d).unwrap();
        let mut out = vec![ZERO; grid.m];
        transform_h_mode(&k, n, &theta, &phi, &mut out);
        out
    };
    let (a, b, c, d) = (h_at(dhat + eps), h_at(dhat - eps), h_at(dhat + 2.0 * eps), h_at(dhat - 2.0 * eps));
    let fd: Vec<C64> = (0..grid.m)
        .map(|k| -(8.0 * (a[k] - b[k]) - (c[k] - d[k])) / (12.0 * eps))
        .collect();
    let scale = fd.iter().map(|v| v.norm()).fold(0.0, f64::max);
    p2.mode(n).iter().zip(&fd).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

pub fn estimator_suite() -> Check {
    let branches = project(0.1, -1.0, 0.1, 4.0) == 0.0
        && project(4.0, 1.0, 0.1, 4.0) == 0.0
        && project(2.0, 0.3, 0.1, 4.0) == 0.3
        && project(0.1, 1.0, 0.1, 4.0) == 1.0
        && project(4.0, -1.0, 0.1, 4.0) == -1.0;
    let mut est = DelayEstimator::new(2.0, 0.1, 4.0, 0.05).unwrap();
    let euler = est.step(1.0, 0.01) == 2.0 + 0.01 * 0.05;
    let grid = CylinderGrid::new(51, 50).unwrap();
    let one = analyze(&Field::from_fn(grid, FieldKind::Real, |_, _| C64::new(1.0, 0.0)));
    let tau = tau_signal(&one, &one, &grid);
    let tau_err = (tau + 6.0 * PI).abs();
    let p1 = p1_agreement();
    let p2 = p2_agreement();
    Check::new(
        branches && euler && tau_err <= 1e-10 && p1 <= 1e-7 && p2 <= 1e-7,
        format!(
            "projection branches {}, tau(-6pi) error {tau_err:.1e}, P1 {p1:.2e}, P2 {p2:.2e}",
            if branches && euler { "exact" } else { "WRONG" }
        ),
    )
}
