//! Generic time integration driver shared by the three solvers.
//!
//! Output samples sit on a uniform grid of times `t0 + k * interval`; step
//! sizes inside each interval are equalized so every sample time is hit
//! exactly. This keeps trajectories of different solvers aligned.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsSeries;
use crate::error::{Error, Result};

/// Anything carrying a time stamp.
pub trait Timed {
    fn time(&self) -> f64;
    fn set_time(&mut self, t: f64);
}

/// Scalar observables recorded at every sample time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub mass: f64,
    pub energy: f64,
    pub kinetic: f64,
}

/// A time-stepping scheme together with its audit observables.
pub trait Dynamics {
    type State: Clone + Timed;

    /// Largest step the scheme accepts from this state (safety factors included).
    fn max_stable_dt(&self, s: &Self::State) -> Result<f64>;

    fn step(&self, s: &Self::State, dt: f64) -> Result<Self::State>;

    /// Instantaneous dissipation rate entering the energy budget.
    fn dissipation_rate(&self, s: &Self::State) -> Result<f64>;

    fn sample(&self, s: &Self::State) -> Result<Sample>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "dt", rename_all = "snake_case")]
pub enum TimeStep {
    /// Largest stable step, re-evaluated every step.
    Auto,
    /// Fixed target step (rounded down to divide each sample interval).
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub sample_interval: f64,
    pub time_step: TimeStep,
    pub store_frames: bool,
    pub max_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { sample_interval: 0.01, time_step: TimeStep::Auto, store_frames: true, max_steps: 50_000_000 }
    }
}

/// States and observables at the sample times.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    /// Includes the initial state; empty when frames are not stored.
    pub frames: Vec<S>,
    pub series: DiagnosticsSeries,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl<S: Timed> Trajectory<S> {
    /// Frame stored at time `t` (to within `tol`).
    pub fn frame_at(&self, t: f64, tol: f64) -> Option<&S> {
        self.frames.iter().find(|f| (f.time() - t).abs() <= tol)
    }
}

/// Sample times `t0 + k (T - t0)/K` for `k = 0..=K`.
pub fn sample_times(t0: f64, t_end: f64, interval: f64) -> Result<Vec<f64>> {
    if !(t_end > t0 && interval > 0.0 && interval.is_finite() && t_end.is_finite()) {
        return Err(Error::Precondition(format!(
            "need t_end > t0 and a positive sample interval (t0 = {t0}, t_end = {t_end}, interval = {interval})"
        )));
    }
    let ratio = (t_end - t0) / interval;
    let k = ratio.round();
    if (ratio - k).abs() > 1e-9 * ratio.max(1.0) || k < 1.0 {
        return Err(Error::Precondition(format!(
            "sample interval {interval} does not divide the run length {}",
            t_end - t0
        )));
    }
    let k = k as usize;
    Ok((0..=k).map(|j| t0 + (t_end - t0) * j as f64 / k as f64).collect())
}

/// Integrates `dynamics` from `initial` to `t_end`, calling `observer` at
/// every sample time (including the initial one).
pub fn integrate<D: Dynamics>(
    dynamics: &D,
    initial: D::State,
    t_end: f64,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&D::State) -> Result<()>,
) -> Result<Trajectory<D::State>> {
    let times = sample_times(initial.time(), t_end, opts.sample_interval)?;
    if let TimeStep::Fixed(h) = opts.time_step {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Precondition(format!("fixed time step must be positive, got {h}")));
        }
    }
    let mut series = DiagnosticsSeries::default();
    let mut frames = Vec::new();
    let mut state = initial;
    let mut dissipated = 0.0;
    let mut steps = 0usize;
    let (mut dt_min, mut dt_max) = (f64::INFINITY, 0.0f64);

    let mut record = |s: &D::State, dissipated: f64, series: &mut DiagnosticsSeries, frames: &mut Vec<D::State>| -> Result<()> {
        let sample = dynamics.sample(s)?;
        series.push(s.time(), sample, dissipated);
        if opts.store_frames {
            frames.push(s.clone());
        }
        observer(s)
    };
    record(&state, dissipated, &mut series, &mut frames)?;

    for &t_next in &times[1..] {
        loop {
            let remaining = t_next - state.time();
            if remaining <= 0.0 {
                break;
            }
            let target = match opts.time_step {
                TimeStep::Auto => dynamics.max_stable_dt(&state)?,
                TimeStep::Fixed(h) => h,
            };
            if !(target > 0.0) {
                return Err(Error::StepSize { dt: target, limit: 0.0 });
            }
            let k = ((remaining / target) - 1e-9).ceil().max(1.0);
            let dt = remaining / k;
            let rate = dynamics.dissipation_rate(&state)?;
            let mut next = dynamics.step(&state, dt)?;
            if k <= 1.0 {
                next.set_time(t_next);
            }
            dissipated += rate * dt;
            dt_min = dt_min.min(dt);
            dt_max = dt_max.max(dt);
            state = next;
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Precondition(format!(
                    "run exceeded {} steps at t = {}",
                    opts.max_steps,
                    state.time()
                )));
            }
            if k <= 1.0 {
                break;
            }
        }
        record(&state, dissipated, &mut series, &mut frames)?;
    }
    Ok(Trajectory { frames, series, steps, dt_min, dt_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone)]
    struct Decay(f64, f64);

    impl Timed for Decay {
        fn time(&self) -> f64 {
            self.1
        }
        fn set_time(&mut self, t: f64) {
            self.1 = t;
        }
    }

    struct Ode;

    impl Dynamics for Ode {
        type State = Decay;
        fn max_stable_dt(&self, _: &Decay) -> Result<f64> {
            Ok(0.003)
        }
        fn step(&self, s: &Decay, dt: f64) -> Result<Decay> {
            Ok(Decay(s.0 * (-dt).exp(), s.1 + dt))
        }
        fn dissipation_rate(&self, s: &Decay) -> Result<f64> {
            Ok(s.0 * s.0)
        }
        fn sample(&self, s: &Decay) -> Result<Sample> {
            Ok(Sample { mass: 1.0, energy: 0.5 * s.0 * s.0, kinetic: 0.0 })
        }
    }

    #[test]
    fn samples_land_on_the_time_grid() {
        let opts = RunOptions { sample_interval: 0.1, ..RunOptions::default() };
        let mut seen = 0;
        let traj = integrate(&Ode, Decay(1.0, 0.0), 0.5, &opts, &mut |_| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, 6);
        assert_eq!(traj.series.times.len(), 6);
        assert_eq!(*traj.series.times.last().unwrap(), 0.5);
        assert!(traj.dt_max <= 0.003);
        // exact decay, left-rectangle quadrature of the dissipation
        let r = traj.series.energy[5] + traj.series.dissipation[5] - traj.series.energy[0];
        assert!(r > 0.0 && r < 0.003);
    }

    #[test]
    fn fixed_steps_divide_the_interval() {
        let opts = RunOptions { sample_interval: 0.1, time_step: TimeStep::Fixed(0.025), ..RunOptions::default() };
        let traj = integrate(&Ode, Decay(1.0, 0.0), 0.2, &opts, &mut |_| Ok(())).unwrap();
        assert_eq!(traj.steps, 8);
        assert!((traj.dt_min - 0.025).abs() < 1e-15);
    }

    #[test]
    fn rejects_incommensurate_interval() {
        assert!(sample_times(0.0, 0.5, 0.3).is_err());
        assert_eq!(sample_times(0.0, 0.5, 0.25).unwrap(), vec![0.0, 0.25, 0.5]);
    }
}
