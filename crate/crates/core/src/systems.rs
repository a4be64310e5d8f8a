//! Agent and edge-controller models.
//!
//! Agents are SISO systems `ẋ = f(x, u)`, `y = h(x)` with no input
//! feedthrough. The integrator-like family `ẋ = u`, `y = h(x)` with a monotone
//! output map `h` is the one every audit in [`crate::passivity`] is written
//! for; general agents are simulated but their passivity is taken on trust.
//!
//! Controllers are SISO systems `η̇ = φ(η, ζ)`, `μ = ψ(η, ζ)`. Static gains have
//! an empty state block.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::quadrature::adaptive_simpson;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemsError {
    #[error("unknown {what} kind `{kind}`")]
    UnknownKind { what: &'static str, kind: String },
    #[error("unknown parameter `{param}` for {what} kind `{kind}`")]
    UnknownParam {
        what: &'static str,
        kind: String,
        param: String,
    },
    #[error("missing parameter `{param}` for {what} kind `{kind}`")]
    MissingParam {
        what: &'static str,
        kind: String,
        param: String,
    },
    #[error("parameter `{param}` = {value} is out of range: {reason}")]
    BadParam {
        param: String,
        value: f64,
        reason: &'static str,
    },
    #[error("slope bound must be positive, got {0}")]
    NonPositiveSlope(f64),
    #[error("output map `{0}` is not flagged monotone passive")]
    NotMonotonePassive(String),
    #[error("output map `{0}` is identically zero")]
    ZeroOutputMap(String),
    #[error("output map `{name}` has slope {slope} at s = {at}, outside [0, {bound}]")]
    SlopeViolation {
        name: String,
        at: f64,
        slope: f64,
        bound: f64,
    },
    #[error("cannot aggregate an empty list of passivity indices")]
    EmptyIndices,
    #[error("cannot compute a slope constant from an empty list of output maps")]
    EmptyMaps,
}

/// Scalar output nonlinearity `h` of an integrator-like agent.
#[derive(Clone)]
pub struct OutputMap {
    name: String,
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    slope_bound: f64,
    monotone_passive: bool,
}

impl fmt::Debug for OutputMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OutputMap")
            .field("name", &self.name)
            .field("slope_bound", &self.slope_bound)
            .field("monotone_passive", &self.monotone_passive)
            .finish()
    }
}

impl OutputMap {
    pub fn identity() -> Self {
        Self::builtin("identity", |s| s, 1.0)
    }

    pub fn tanh() -> Self {
        Self::builtin("tanh", f64::tanh, 1.0)
    }

    /// `s / (1 + |s|)`.
    pub fn saturation() -> Self {
        Self::builtin("saturation", |s| s / (1.0 + s.abs()), 1.0)
    }

    /// `k·s` for `k > 0`.
    pub fn linear(slope: f64) -> Result<Self, SystemsError> {
        if !(slope > 0.0) || !slope.is_finite() {
            return Err(SystemsError::NonPositiveSlope(slope));
        }
        Ok(Self::builtin("linear", move |s| slope * s, slope))
    }

    fn builtin(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static, m: f64) -> Self {
        Self {
            name: name.to_string(),
            map: Arc::new(f),
            slope_bound: m,
            monotone_passive: true,
        }
    }

    /// User-supplied map. Only the identically-zero map is rejected outright
    /// (sampled on a grid over [-10, 10]); the slope claim is checked with
    /// [`OutputMap::verify_slope`].
    pub fn custom(
        name: impl Into<String>,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope_bound: f64,
        monotone_passive: bool,
    ) -> Result<Self, SystemsError> {
        let name = name.into();
        if !(slope_bound > 0.0) {
            return Err(SystemsError::NonPositiveSlope(slope_bound));
        }
        if (0..=2000).all(|k| map(-10.0 + 0.01 * k as f64) == 0.0) {
            return Err(SystemsError::ZeroOutputMap(name));
        }
        Ok(Self {
            name,
            map: Arc::new(map),
            slope_bound,
            monotone_passive,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.map)(s)
    }

    pub fn slope_bound(&self) -> f64 {
        self.slope_bound
    }

    pub fn is_monotone_passive(&self) -> bool {
        self.monotone_passive
    }

    /// `∫₀^x h(s) ds`, the storage of an integrator-like agent.
    pub fn primitive(&self, x: f64) -> f64 {
        adaptive_simpson(|s| self.eval(s), 0.0, x, 1e-10)
    }

    /// Check `0 ≤ (h(s+Δ) − h(s))/Δ ≤ m + tol` on `points` samples of `[lo, hi]`.
    pub fn verify_slope(&self, lo: f64, hi: f64, points: usize, tol: f64) -> Result<(), SystemsError> {
        let step = (hi - lo) / points as f64;
        for k in 0..points {
            let s = lo + step * k as f64;
            let slope = (self.eval(s + step) - self.eval(s)) / step;
            if slope < -tol || slope > self.slope_bound + tol {
                return Err(SystemsError::SlopeViolation {
                    name: self.name.clone(),
                    at: s,
                    slope,
                    bound: self.slope_bound,
                });
            }
        }
        Ok(())
    }
}

/// Passivity indices of one agent `(δ, ε)` or one controller `(γ, α)`: the
/// input index weights `u²` (or `ζ²`), the output index weights `y²` (or `μ²`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassivityIndices {
    pub input: f64,
    pub output: f64,
}

impl PassivityIndices {
    pub fn agent(delta: f64, epsilon: f64) -> Self {
        Self {
            input: delta,
            output: epsilon,
        }
    }

    pub fn controller(gamma: f64, alpha: f64) -> Self {
        Self {
            input: gamma,
            output: alpha,
        }
    }

    pub fn delta(&self) -> f64 {
        self.input
    }
    pub fn epsilon(&self) -> f64 {
        self.output
    }
    pub fn gamma(&self) -> f64 {
        self.input
    }
    pub fn alpha(&self) -> f64 {
        self.output
    }

    /// Input-output passivity requires the product of the indices below 1/4.
    pub fn is_admissible(&self) -> bool {
        self.input * self.output < 0.25
    }
}

/// Componentwise minimum, as used when stacking agents or controllers.
pub fn aggregate_indices(members: &[PassivityIndices]) -> Result<PassivityIndices, SystemsError> {
    let first = members.first().ok_or(SystemsError::EmptyIndices)?;
    Ok(members.iter().fold(*first, |acc, p| PassivityIndices {
        input: acc.input.min(p.input),
        output: acc.output.min(p.output),
    }))
}

/// `M = max(1, |1 − m*|)` with `m*` the largest slope bound among the maps.
pub fn slope_bound_m(maps: &[OutputMap]) -> Result<f64, SystemsError> {
    if maps.is_empty() {
        return Err(SystemsError::EmptyMaps);
    }
    let mut m_star = f64::NEG_INFINITY;
    for map in maps {
        if !(map.slope_bound > 0.0) {
            return Err(SystemsError::NonPositiveSlope(map.slope_bound));
        }
        if !map.monotone_passive {
            return Err(SystemsError::NotMonotonePassive(map.name.clone()));
        }
        m_star = m_star.max(map.slope_bound);
    }
    Ok(1f64.max((1.0 - m_star).abs()))
}

pub type StateDynamics = Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;
pub type AgentOutput = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ControllerOutput = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type StorageFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Integrator,
    IntegratorWithOutputMap,
    GeneralOde,
}

#[derive(Clone)]
pub struct AgentModel {
    kind: AgentKind,
    state_dim: usize,
    dynamics: StateDynamics,
    output: AgentOutput,
    output_map: Option<OutputMap>,
    indices: Option<PassivityIndices>,
}

impl fmt::Debug for AgentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AgentModel")
            .field("kind", &self.kind)
            .field("state_dim", &self.state_dim)
            .field("output_map", &self.output_map)
            .field("indices", &self.indices)
            .finish()
    }
}

impl AgentModel {
    /// `ẋ = u`, `y = x`. Passive with storage `x²/2`.
    pub fn integrator() -> Self {
        let mut a = Self::integrator_with_output(OutputMap::identity());
        a.kind = AgentKind::Integrator;
        a
    }

    /// `ẋ = u`, `y = h(x)`.
    pub fn integrator_with_output(map: OutputMap) -> Self {
        let h = map.clone();
        Self {
            kind: AgentKind::IntegratorWithOutputMap,
            state_dim: 1,
            dynamics: Arc::new(|_x, u, dx| dx[0] = u),
            output: Arc::new(move |x| h.eval(x[0])),
            output_map: Some(map),
            indices: Some(PassivityIndices::agent(0.0, 0.0)),
        }
    }

    /// Arbitrary `ẋ = f(x, u)`, `y = h(x)`.
    pub fn general(
        state_dim: usize,
        dynamics: impl Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
        output: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(state_dim > 0, "agents need at least one state");
        Self {
            kind: AgentKind::GeneralOde,
            state_dim,
            dynamics: Arc::new(dynamics),
            output: Arc::new(output),
            output_map: None,
            indices: None,
        }
    }

    /// Scalar `ẋ = drift·x + input_gain·u`, `y = x`.
    pub fn affine(drift: f64, input_gain: f64) -> Self {
        Self::general(1, move |x, u, dx| dx[0] = drift * x[0] + input_gain * u, |x| x[0])
    }

    pub fn with_indices(mut self, indices: PassivityIndices) -> Self {
        self.indices = Some(indices);
        self
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// `Some` for the integrator-like family.
    pub fn output_map(&self) -> Option<&OutputMap> {
        self.output_map.as_ref()
    }

    pub fn indices(&self) -> Option<PassivityIndices> {
        self.indices
    }

    pub fn is_integrator_like(&self) -> bool {
        matches!(
            self.kind,
            AgentKind::Integrator | AgentKind::IntegratorWithOutputMap
        )
    }

    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        (self.dynamics)(x, u, dx)
    }

    pub fn output(&self, x: &[f64]) -> f64 {
        (self.output)(x)
    }

    /// `∫₀^x h(s) ds` for integrator-like agents.
    pub fn storage(&self, x: &[f64]) -> Option<f64> {
        match (self.kind, &self.output_map) {
            (AgentKind::Integrator, _) => Some(0.5 * x[0] * x[0]),
            (AgentKind::IntegratorWithOutputMap, Some(h)) => Some(h.primitive(x[0])),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerKind {
    StaticGain(f64),
    GeneralOde,
}

#[derive(Clone)]
pub struct ControllerModel {
    kind: ControllerKind,
    state_dim: usize,
    dynamics: StateDynamics,
    output: ControllerOutput,
    storage: Option<StorageFn>,
    indices: Option<PassivityIndices>,
}

impl fmt::Debug for ControllerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControllerModel")
            .field("kind", &self.kind)
            .field("state_dim", &self.state_dim)
            .field("indices", &self.indices)
            .finish()
    }
}

impl ControllerModel {
    /// `μ = b·ζ`. Declared output-strictly passive with `α = 1/b` and zero storage.
    pub fn static_gain(gain: f64) -> Self {
        Self {
            kind: ControllerKind::StaticGain(gain),
            state_dim: 0,
            dynamics: Arc::new(|_, _, _| {}),
            output: Arc::new(move |_, zeta| gain * zeta),
            storage: Some(Arc::new(|_| 0.0)),
            indices: (gain > 0.0).then(|| PassivityIndices::controller(0.0, 1.0 / gain)),
        }
    }

    /// `η̇ = (ζ − η)/τ`, `μ = k·η`.
    ///
    /// With `W = k·τ·η²/2` one gets `Ẇ = μζ − μ²/k`, so the lag is output
    /// strictly passive with `α = 1/k`.
    pub fn first_order_lag(gain: f64, time_constant: f64) -> Self {
        Self {
            kind: ControllerKind::GeneralOde,
            state_dim: 1,
            dynamics: Arc::new(move |eta, zeta, d| d[0] = (zeta - eta[0]) / time_constant),
            output: Arc::new(move |eta, _| gain * eta[0]),
            storage: Some(Arc::new(move |eta| 0.5 * gain * time_constant * eta[0] * eta[0])),
            indices: Some(PassivityIndices::controller(0.0, 1.0 / gain)),
        }
    }

    pub fn general(
        state_dim: usize,
        dynamics: impl Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
        output: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: ControllerKind::GeneralOde,
            state_dim,
            dynamics: Arc::new(dynamics),
            output: Arc::new(output),
            storage: None,
            indices: None,
        }
    }

    pub fn with_storage(mut self, storage: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.storage = Some(Arc::new(storage));
        self
    }

    pub fn with_indices(mut self, indices: PassivityIndices) -> Self {
        self.indices = Some(indices);
        self
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn indices(&self) -> Option<PassivityIndices> {
        self.indices
    }

    pub fn static_gain_value(&self) -> Option<f64> {
        match self.kind {
            ControllerKind::StaticGain(b) => Some(b),
            ControllerKind::GeneralOde => None,
        }
    }

    pub fn derivative(&self, eta: &[f64], zeta: f64, d: &mut [f64]) {
        (self.dynamics)(eta, zeta, d)
    }

    pub fn output(&self, eta: &[f64], zeta: f64) -> f64 {
        (self.output)(eta, zeta)
    }

    pub fn storage(&self, eta: &[f64]) -> Option<f64> {
        self.storage.as_ref().map(|w| w(eta))
    }
}

fn take_params<'a>(
    what: &'static str,
    kind: &str,
    params: &'a BTreeMap<String, f64>,
    allowed: &[&str],
) -> Result<impl Fn(&str) -> Option<f64> + 'a, SystemsError> {
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(SystemsError::UnknownParam {
            what,
            kind: kind.to_string(),
            param: bad.clone(),
        });
    }
    Ok(move |name: &str| params.get(name).copied())
}

fn required(
    what: &'static str,
    kind: &str,
    name: &str,
    value: Option<f64>,
) -> Result<f64, SystemsError> {
    value.ok_or_else(|| SystemsError::MissingParam {
        what,
        kind: kind.to_string(),
        param: name.to_string(),
    })
}

fn positive(name: &str, v: f64) -> Result<f64, SystemsError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(SystemsError::BadParam {
            param: name.to_string(),
            value: v,
            reason: "must be positive and finite",
        })
    }
}

pub const AGENT_KINDS: &[&str] = &[
    "integrator",
    "integrator_tanh",
    "integrator_saturation",
    "integrator_linear",
    "general",
];

pub const CONTROLLER_KINDS: &[&str] = &["static_gain", "first_order_lag"];

/// Registry of named agent models.
///
/// | kind | dynamics | params |
/// |------|----------|--------|
/// | `integrator` | `ẋ = u, y = x` | – |
/// | `integrator_tanh` | `ẋ = u, y = tanh x` | – |
/// | `integrator_saturation` | `ẋ = u, y = x/(1+|x|)` | – |
/// | `integrator_linear` | `ẋ = u, y = k·x` | `slope` |
/// | `general` | `ẋ = a·x + g·u, y = x` | `drift` (0), `input_gain` (1) |
pub fn builtin_agent(kind: &str, params: &BTreeMap<String, f64>) -> Result<AgentModel, SystemsError> {
    const W: &str = "agent";
    match kind {
        "integrator" => {
            let _ = take_params(W, kind, params, &[])?;
            Ok(AgentModel::integrator())
        }
        "integrator_tanh" => {
            let _ = take_params(W, kind, params, &[])?;
            Ok(AgentModel::integrator_with_output(OutputMap::tanh()))
        }
        "integrator_saturation" => {
            let _ = take_params(W, kind, params, &[])?;
            Ok(AgentModel::integrator_with_output(OutputMap::saturation()))
        }
        "integrator_linear" => {
            let get = take_params(W, kind, params, &["slope"])?;
            let slope = positive("slope", required(W, kind, "slope", get("slope"))?)?;
            Ok(AgentModel::integrator_with_output(OutputMap::linear(slope)?))
        }
        "general" => {
            let get = take_params(W, kind, params, &["drift", "input_gain"])?;
            Ok(AgentModel::affine(
                get("drift").unwrap_or(0.0),
                get("input_gain").unwrap_or(1.0),
            ))
        }
        _ => Err(SystemsError::UnknownKind {
            what: W,
            kind: kind.to_string(),
        }),
    }
}

/// Registry of named controller models: `static_gain` (`gain`) and
/// `first_order_lag` (`gain`, `time_constant`).
pub fn builtin_controller(
    kind: &str,
    params: &BTreeMap<String, f64>,
) -> Result<ControllerModel, SystemsError> {
    const W: &str = "controller";
    match kind {
        "static_gain" => {
            let get = take_params(W, kind, params, &["gain"])?;
            let gain = positive("gain", required(W, kind, "gain", get("gain"))?)?;
            Ok(ControllerModel::static_gain(gain))
        }
        "first_order_lag" => {
            let get = take_params(W, kind, params, &["gain", "time_constant"])?;
            let gain = positive("gain", required(W, kind, "gain", get("gain"))?)?;
            let tau = positive(
                "time_constant",
                required(W, kind, "time_constant", get("time_constant"))?,
            )?;
            Ok(ControllerModel::first_order_lag(gain, tau))
        }
        _ => Err(SystemsError::UnknownKind {
            what: W,
            kind: kind.to_string(),
        }),
    }
}
