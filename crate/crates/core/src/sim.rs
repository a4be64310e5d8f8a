//! Fixed-step RK4 integration of a [`NetworkSystem`] and agreement detection.

use thiserror::Error;

use crate::interconnect::{InterconnectError, NetworkSystem, SignalFrame, StateLayout};

/// States larger than this in magnitude count as divergence.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 20.0;
pub const DEFAULT_AGREEMENT_TOL: f64 = 1e-4;
pub const DEFAULT_AGREEMENT_WINDOW: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid integration config: {0}")]
    Config(&'static str),
    #[error("initial state has length {got}, expected {expected}")]
    InitialState { expected: usize, got: usize },
    #[error("initial state entry {0} is not finite")]
    NonFiniteInitial(usize),
    #[error("state blew up at t = {time}: entry {index} = {value}")]
    BlowUp { time: f64, index: usize, value: f64 },
    #[error("at t = {time}: {source}")]
    Signal {
        time: f64,
        #[source]
        source: InterconnectError,
    },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("window {window} s is longer than the trajectory ({span} s)")]
    WindowTooLong { window: f64, span: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `record_stride`-th step.
    pub record_stride: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            record_stride: 1,
        }
    }
}

impl IntegrationConfig {
    pub fn new(dt: f64, t_end: f64, record_stride: usize) -> Result<Self, SimError> {
        let cfg = Self {
            dt,
            t_end,
            record_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.dt.is_finite() || !self.t_end.is_finite() {
            return Err(SimError::Config("dt and t_end must be finite"));
        }
        if self.dt <= 0.0 {
            return Err(SimError::Config("dt must be positive"));
        }
        if self.t_end <= self.dt {
            return Err(SimError::Config("t_end must exceed dt"));
        }
        if self.record_stride == 0 {
            return Err(SimError::Config("record_stride must be at least 1"));
        }
        Ok(())
    }

    /// Steps taken: `round(t_end/dt)`, rounded up to a multiple of the stride
    /// so the final state is always recorded.
    pub fn steps(&self) -> usize {
        let raw = (self.t_end / self.dt).round().max(1.0) as usize;
        raw.div_ceil(self.record_stride) * self.record_stride
    }
}

/// Recorded samples of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub frames: Vec<SignalFrame>,
    layout: StateLayout,
    spacing: f64,
}

impl Trajectory {
    /// Build from already computed samples. `times` must be uniformly spaced.
    pub fn from_parts(
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        frames: Vec<SignalFrame>,
        layout: StateLayout,
    ) -> Self {
        assert_eq!(times.len(), states.len());
        assert_eq!(times.len(), frames.len());
        let spacing = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        Self {
            times,
            states,
            frames,
            layout,
            spacing,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time between consecutive samples.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn agent_states(&self, sample: usize) -> &[f64] {
        &self.states[sample][self.layout.agents()]
    }

    pub fn outputs(&self, sample: usize) -> &[f64] {
        &self.frames[sample].y
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("non-empty trajectory")
    }

    /// Map each recorded state through `f`.
    pub fn state_series(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.states.iter().map(|s| f(s)).collect()
    }
}

/// Classical fourth-order Runge–Kutta from `x0` over `[0, steps·dt]`.
pub fn integrate(
    net: &NetworkSystem,
    x0: &[f64],
    cfg: &IntegrationConfig,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let dim = net.state_dim();
    if x0.len() != dim {
        return Err(SimError::InitialState {
            expected: dim,
            got: x0.len(),
        });
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(SimError::NonFiniteInitial(i));
    }

    let steps = cfg.steps();
    let h = cfg.dt;
    let samples = steps / cfg.record_stride + 1;
    let mut times = Vec::with_capacity(samples);
    let mut states = Vec::with_capacity(samples);
    let mut frames = Vec::with_capacity(samples);

    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    let deriv = |x: &[f64], t: f64, out: &mut [f64]| {
        net.closed_loop_derivative(x, t, out)
            .map_err(|source| SimError::Signal { time: t, source })
    };

    for step in 0..=steps {
        let t = step as f64 * h;
        if step % cfg.record_stride == 0 {
            let frame = net
                .signals_at(&x)
                .map_err(|source| SimError::Signal { time: t, source })?;
            times.push(t);
            states.push(x.clone());
            frames.push(frame);
        }
        if step == steps {
            break;
        }

        deriv(&x, t, &mut k1)?;
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        deriv(&tmp, t + 0.5 * h, &mut k2)?;
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        deriv(&tmp, t + 0.5 * h, &mut k3)?;
        for i in 0..dim {
            tmp[i] = x[i] + h * k3[i];
        }
        deriv(&tmp, t + h, &mut k4)?;
        for i in 0..dim {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        if let Some(index) = x
            .iter()
            .position(|v| !v.is_finite() || v.abs() > BLOW_UP_THRESHOLD)
        {
            return Err(SimError::BlowUp {
                time: t + h,
                index,
                value: x[index],
            });
        }
    }

    Ok(Trajectory::from_parts(times, states, frames, net.layout().clone()))
}

/// `‖v − mean(v)·1‖₂`.
pub fn disagreement_norm(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>().sqrt()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `(t, ‖proj_{S⊥} y(t)‖₂)` for every recorded sample.
pub fn disagreement_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(&traj.frames)
        .map(|(&t, f)| (t, disagreement_norm(&f.y)))
        .collect()
}

/// Finite-window proxy for `y(t) → c·1`.
///
/// Returns the mean of the final output vector when, over the last `window`
/// seconds, every sample has disagreement at most `tol` and the output mean
/// stays within `tol` of its final value.
pub fn detect_agreement(traj: &Trajectory, tol: f64, window: f64) -> Result<Option<f64>, SimError> {
    let (&t_last, &t_first) = match (traj.times.last(), traj.times.first()) {
        (Some(l), Some(f)) => (l, f),
        _ => return Err(SimError::EmptyTrajectory),
    };
    let span = t_last - t_first;
    if window > span + 1e-12 {
        return Err(SimError::WindowTooLong { window, span });
    }
    let c = mean(traj.outputs(traj.len() - 1));
    let start = t_last - window - 1e-9 * window.max(1.0);
    let agreed = traj
        .times
        .iter()
        .zip(&traj.frames)
        .filter(|(&t, _)| t >= start)
        .all(|(_, f)| disagreement_norm(&f.y) <= tol && (mean(&f.y) - c).abs() <= tol);
    Ok(agreed.then_some(c))
}
