//! Closed-loop simulation: plant, controller and delay estimator stepped
//! together, with per-control-step diagnostics and field snapshots.

use crate::controller::{simpson_control, ChannelController};
use crate::error::{Error, Result};
use crate::estimator::DelayEstimator;
use crate::field::{l2_norm, ring_l2, Field, FieldKind};
use crate::kernels::{KernelSeries, KernelSet};
use crate::plant::{max_stable_dt, Plant};
use crate::scenario::{EstimateMode, Realization, Scenario, TauChannels};
use crate::steady::discrete_steady_field;
use num_complex::Complex64 as C64;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub dhat: f64,
    pub tau: f64,
    pub err_u: f64,
    pub err_z: f64,
    pub err_ring: Vec<f64>,
    pub control_sup: f64,
    pub h_boundary: f64,
    pub state_scale: f64,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub u: Field,
    pub z: Field,
}

#[derive(Clone, Debug)]
pub struct GuardTrip {
    pub t: f64,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub dt: f64,
    pub ring_indices: Vec<usize>,
    pub series: Vec<SeriesRow>,
    pub snapshots: Vec<Snapshot>,
    pub guard: Option<GuardTrip>,
    pub final_dhat: f64,
    pub kernel_rebuilds: usize,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.guard.is_none()
    }
}

struct Channels {
    u: KernelSet,
    z: KernelSet,
}

fn build(su: &Arc<KernelSeries>, sz: &Arc<KernelSeries>, dhat: f64) -> Result<Channels> {
    Ok(Channels {
        u: KernelSet::build(su.clone(), dhat)?,
        z: KernelSet::build(sz.clone(), dhat)?,
    })
}

/// Run a scenario. A tripped instability guard ends the run early and is
/// reported in the record; configuration and numerical setup problems are
/// errors. `progress` is called after every control step.
pub fn run(sc: &Scenario, mut progress: impl FnMut(&SeriesRow)) -> Result<RunRecord> {
    let grid = sc.grid;
    let desired = &sc.desired;
    let ubar = discrete_steady_field(&desired.u, &grid, FieldKind::Complex)?;
    let zbar = discrete_steady_field(&desired.z, &grid, FieldKind::Real)?;
    let u0 = discrete_steady_field(&sc.initial.u, &grid, FieldKind::Complex)?;
    let z0 = discrete_steady_field(&sc.initial.z, &grid, FieldKind::Real)?;

    let dt_max = max_stable_dt(&grid, &[desired.u.coeffs, desired.z.coeffs]);
    let dt_req = sc.dt.unwrap_or(dt_max);
    if dt_req > dt_max * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("time step {dt_req} exceeds the stability bound {dt_max}")));
    }
    let steps = (sc.t_final / dt_req).ceil() as usize;
    let dt = sc.t_final / steps as f64;

    let mut plant = Plant::new(grid, desired.clone(), sc.true_delay, dt)?;
    let horizon = sc.delay_upper.max(sc.true_delay).max(match sc.estimate_mode {
        EstimateMode::Fixed(d) => d,
        EstimateMode::Adaptive => 0.0,
    });
    let mut state = plant.new_state(u0, z0, horizon + dt, sc.prehistory);

    let su = KernelSeries::new(desired.u.coeffs, grid, sc.i_max)?;
    let sz = KernelSeries::new(desired.z.coeffs, grid, sc.i_max)?;
    let (mut estimator, fixed) = match sc.estimate_mode {
        EstimateMode::Adaptive => (
            Some(DelayEstimator::new(sc.initial_estimate, sc.delay_lower, sc.delay_upper, sc.gain)?),
            None,
        ),
        EstimateMode::Fixed(d) => (None, Some(d)),
    };
    let mut dhat = fixed.unwrap_or(sc.initial_estimate);
    let mut ks = build(&su, &sz, dhat)?;
    let mut rebuilds = 1;

    let cu = ChannelController::new(ubar.clone(), desired.u.coeffs.beta);
    let cz = ChannelController::new(zbar.clone(), desired.z.coeffs.beta);

    let mut record = RunRecord {
        dt,
        ring_indices: sc.ring_indices.clone(),
        series: Vec::new(),
        snapshots: Vec::new(),
        guard: None,
        final_dhat: dhat,
        kernel_rebuilds: 0,
    };
    let mut snaps: Vec<f64> = sc.snapshot_times.clone();
    snaps.sort_by(|a, b| a.total_cmp(b));
    let mut next_snap = 0;

    let zero = vec![C64::new(0.0, 0.0); grid.n];
    let mut cmd_u = zero.clone();
    let mut cmd_z = zero;
    let period_dt = sc.control_period as f64 * dt;

    for k in 0..=steps {
        let t = state.t;
        if k % sc.control_period == 0 || k == steps {
            let ctl_u = cu.control(&ks.u, &state.u, &state.delay_u, t, true)?;
            let ctl_z = cz.control(&ks.z, &state.z, &state.delay_z, t, true)?;
            if k % sc.control_period == 0 {
                match sc.realization {
                    Realization::Spectral => {
                        cmd_u = ctl_u.command.clone();
                        cmd_z = ctl_z.command.clone();
                    }
                    Realization::Simpson => {
                        let pu = simpson_control(&ks.u, &cu, &state.u, &state.delay_u, t, sc.mprime, sc.history_window())?;
                        let pz = simpson_control(&ks.z, &cz, &state.z, &state.delay_z, t, sc.mprime, sc.history_window())?;
                        let gm = grid.m - 1;
                        cmd_u = pu.iter().zip(ubar.row(gm)).map(|(a, b)| a - b).collect();
                        cmd_z = pz.iter().zip(zbar.row(gm)).map(|(a, b)| a - b).collect();
                    }
                }
            }
            let tau = match sc.tau_channels {
                TauChannels::Both => ctl_u.tau + ctl_z.tau,
                TauChannels::Planar => ctl_u.tau,
            };
            let eu = state.u.sub(&ubar);
            let ez = state.z.sub(&zbar);
            let row = SeriesRow {
                t,
                dhat,
                tau,
                err_u: l2_norm(&eu),
                err_z: l2_norm(&ez),
                err_ring: sc.ring_indices.iter().map(|&i| ring_l2(&eu, i - 1)).collect(),
                control_sup: cmd_u.iter().chain(&cmd_z).map(|v| v.norm()).fold(0.0, f64::max),
                h_boundary: ctl_u.h_boundary.max(ctl_z.h_boundary),
                state_scale: ctl_u.state_scale + ctl_z.state_scale,
            };
            progress(&row);
            record.series.push(row);
            if k % sc.control_period == 0 {
                if let Some(est) = estimator.as_mut() {
                    dhat = est.step(tau, period_dt);
                    if (dhat - ks.u.dhat).abs() > sc.rebuild_tol {
                        ks = build(&su, &sz, dhat)?;
                        rebuilds += 1;
                    }
                }
            }
        }
        while next_snap < snaps.len() && snaps[next_snap] <= t + 0.5 * dt {
            record.snapshots.push(Snapshot {
                t,
                u: state.u.clone(),
                z: state.z.clone(),
            });
            next_snap += 1;
        }
        if k == steps {
            break;
        }
        plant.apply_boundary(&mut state, &cmd_u, &cmd_z)?;
        match plant.step(&mut state) {
            Ok(()) => {}
            Err(Error::Instability { t, value }) => {
                record.guard = Some(GuardTrip { t, value });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    record.final_dhat = dhat;
    record.kernel_rebuilds = rebuilds;
    Ok(record)
}
