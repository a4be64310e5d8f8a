//! Scenario files: a TOML document describing one network run.
//!
//! The schema is documented by example in `scenarios/case_hetero.scn`.
//! [`parse_scenario`] checks syntax, schema and dimensions in one pass and
//! reports every problem it can find as a [`Diagnostic`] carrying the line,
//! the dotted field path and a reason.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use passive_agreement::graph::{Digraph, GraphError};
use passive_agreement::interconnect::NetworkSystem;
use passive_agreement::passivity::{AuditId, LambdaMode};
use passive_agreement::sim::{
    IntegrationConfig, DEFAULT_AGREEMENT_TOL, DEFAULT_AGREEMENT_WINDOW, DEFAULT_DT, DEFAULT_T_END,
};
use passive_agreement::systems::{
    aggregate_indices, builtin_agent, builtin_controller, slope_bound_m, AgentModel, ControllerModel, PassivityIndices, SystemsError,
};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// A number together with where it was written.
pub type Num = Spanned<f64>;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: Spanned<String>,
    /// Stacked initial state: agent states in vertex order, then controller
    /// states in edge order.
    pub x0: Spanned<Vec<Num>>,
    pub graph: GraphSpec,
    pub agents: Vec<SystemSpec>,
    #[serde(default)]
    pub controllers: Vec<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<IntegrationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audits: Vec<AuditSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Spanned<usize>,
    /// 1-based `[head, tail]` pairs.
    #[serde(default)]
    pub edges: Vec<Spanned<[usize; 2]>>,
}

/// One or more identical agents or controllers.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<Spanned<usize>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Num>,
    /// `(δ, ε)` for agents, `(γ, α)` for controllers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<IndicesSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IndicesSpec {
    pub input: Num,
    pub output: Num,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<Spanned<usize>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AgreementSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    /// Overrides the slope constant derived from the output maps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Num>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub static_gain_search: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    pub id: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Num>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagnosticCode {
    Syntax,
    UnknownKey,
    MissingGraph,
    MissingField,
    DimensionMismatch,
    NonFinite,
    InvalidValue,
}

impl DiagnosticCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagnosticCode::Syntax => "E01",
            DiagnosticCode::UnknownKey => "E02",
            DiagnosticCode::MissingGraph => "E03",
            DiagnosticCode::MissingField => "E04",
            DiagnosticCode::DimensionMismatch => "E05",
            DiagnosticCode::NonFinite => "E06",
            DiagnosticCode::InvalidValue => "E07",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DiagnosticCode::Syntax => "syntax error",
            DiagnosticCode::UnknownKey => "unknown key",
            DiagnosticCode::MissingGraph => "missing graph section",
            DiagnosticCode::MissingField => "missing field",
            DiagnosticCode::DimensionMismatch => "dimension mismatch",
            DiagnosticCode::NonFinite => "non-finite number",
            DiagnosticCode::InvalidValue => "invalid value",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    /// 1-based; `None` when the problem has no location in the source.
    pub line: Option<usize>,
    pub field: String,
    pub reason: String,
    span: Option<Range<usize>>,
}

impl Diagnostic {
    fn new(code: DiagnosticCode, span: Option<Range<usize>>, field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            code,
            line: None,
            field: field.into(),
            reason: reason.into(),
            span,
        }
    }

    /// Resolve the line number against the text the spans refer to.
    pub fn locate(mut self, text: &str) -> Self {
        if let Some(span) = &self.span {
            // Overrides carry an empty span at 0; they have no source line.
            if !(span.start == 0 && span.end == 0) {
                self.line = Some(line_of(text, span.start));
            }
        }
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(
            f,
            "error[{}] {}: `{}`: {}",
            self.code.as_str(),
            self.code.label(),
            self.field,
            self.reason
        )
    }
}

/// Validated diagnostics, one per line when displayed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn codes(&self) -> Vec<DiagnosticCode> {
        self.0.iter().map(|d| d.code).collect()
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

fn line_of(text: &str, offset: usize) -> usize {
    let offset = offset.min(text.len());
    text.as_bytes()[..offset].iter().filter(|&&b| b == b'\n').count() + 1
}

/// Dotted path of the key written on the line containing `offset`,
/// qualified by the closest table header above it.
fn field_at(text: &str, offset: usize) -> String {
    let offset = offset.min(text.len());
    let start = text[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next().unwrap_or("");
    let key = line
        .split_once('=')
        .map(|(k, _)| k.trim().trim_matches('"').to_string())
        .unwrap_or_default();
    let section = text[..start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    match (section, key.is_empty()) {
        (Some(s), false) => format!("{s}.{key}"),
        (Some(s), true) => s,
        (None, _) => key,
    }
}

fn count_or_kind_span(spec: &SystemSpec) -> Range<usize> {
    spec.count.as_ref().map_or(spec.kind.span(), |c| c.span())
}

fn backticked(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

/// Parse and validate a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, Diagnostics> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let field = e.span().map(|s| field_at(text, s.start)).unwrap_or_default();
        Diagnostics(vec![Diagnostic::new(DiagnosticCode::Syntax, e.span(), field, e.message().trim()).locate(text)])
    })?;
    if !table.contains_key("graph") {
        return Err(Diagnostics(vec![Diagnostic::new(
            DiagnosticCode::MissingGraph,
            None,
            "graph",
            "the scenario needs a [graph] section with `vertices` and `edges`",
        )]));
    }
    let scenario: Scenario = toml::from_str(text).map_err(|e| Diagnostics(vec![schema_diagnostic(text, &e)]))?;
    scenario
        .prepare()
        .map_err(|d| Diagnostics(d.0.into_iter().map(|d| d.locate(text)).collect()))?;
    Ok(scenario)
}

fn schema_diagnostic(text: &str, e: &toml::de::Error) -> Diagnostic {
    let message = e.message().trim();
    let at = e.span().map(|s| field_at(text, s.start)).unwrap_or_default();
    let (code, field) = if message.starts_with("unknown field") {
        let key = backticked(message).unwrap_or_default();
        let section = at.rsplit_once('.').map(|(s, _)| s.to_string());
        let field = match section {
            Some(s) if !at.ends_with(key) || at == key => format!("{s}.{key}"),
            _ if at.ends_with(key) => at.clone(),
            _ => key.to_string(),
        };
        (DiagnosticCode::UnknownKey, field)
    } else if message.starts_with("missing field") {
        let key = backticked(message).unwrap_or_default();
        let field = if at.is_empty() { key.to_string() } else { format!("{at}.{key}") };
        (DiagnosticCode::MissingField, field)
    } else {
        (DiagnosticCode::InvalidValue, at)
    };
    Diagnostic::new(code, e.span(), field, message).locate(text)
}

impl Scenario {
    /// Serialize back to the scenario format.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable in TOML")
    }

    /// Replace integration settings, e.g. from command-line overrides.
    pub fn with_overrides(mut self, dt: Option<f64>, t_end: Option<f64>) -> Self {
        if dt.is_none() && t_end.is_none() {
            return self;
        }
        let integration = self.integration.get_or_insert_with(IntegrationSpec::default);
        if let Some(dt) = dt {
            integration.dt = Some(Spanned::new(0..0, dt));
        }
        if let Some(t_end) = t_end {
            integration.t_end = Some(Spanned::new(0..0, t_end));
        }
        self
    }

    /// Build everything a run needs. Diagnostics carry spans but no line
    /// numbers; see [`Diagnostic::locate`].
    pub fn prepare(&self) -> Result<Prepared, Diagnostics> {
        Builder::default().build(self)
    }
}

/// Where the slope constant `M` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeConstant {
    Override(f64),
    Derived(f64),
    /// No override and the agents are not all integrator-like with
    /// monotone passive output maps.
    Unavailable,
}

impl SlopeConstant {
    pub fn value(&self) -> Option<f64> {
        match *self {
            SlopeConstant::Override(m) | SlopeConstant::Derived(m) => Some(m),
            SlopeConstant::Unavailable => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificatePlan {
    pub m: f64,
    pub explicit: Option<(f64, f64)>,
    /// Common static gain to split, when a search was requested.
    pub static_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditPlan {
    AgentRelation {
        m: f64,
        tolerance: Option<f64>,
    },
    ControllerRelation {
        indices: IndexSource,
        lambda: LambdaMode,
        tolerance: Option<f64>,
    },
    Compensation {
        epsilon: Option<f64>,
        tolerance: Option<f64>,
    },
    IopAgentRelation {
        delta: f64,
        epsilon: f64,
        tolerance: Option<f64>,
    },
}

impl AuditPlan {
    pub fn id(&self) -> AuditId {
        match self {
            AuditPlan::AgentRelation { .. } => AuditId::AgentRelation,
            AuditPlan::ControllerRelation { .. } => AuditId::ControllerRelation,
            AuditPlan::Compensation { .. } => AuditId::Compensation,
            AuditPlan::IopAgentRelation { .. } => AuditId::IopAgentRelation,
        }
    }
}

/// Controller indices `(γ, α)` for the controller audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexSource {
    Given { gamma: f64, alpha: f64 },
    /// Taken from the static-gain split found at run time.
    FromSearch,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub name: String,
    pub network: NetworkSystem,
    pub x0: Vec<f64>,
    pub integration: IntegrationConfig,
    pub agreement_tolerance: f64,
    pub agreement_window: f64,
    pub slope_constant: SlopeConstant,
    pub certificate: Option<CertificatePlan>,
    pub audits: Vec<AuditPlan>,
}

#[derive(Default)]
struct Builder {
    issues: Vec<Diagnostic>,
}

impl Builder {
    fn issue(&mut self, code: DiagnosticCode, span: Option<Range<usize>>, field: impl Into<String>, reason: impl Into<String>) {
        self.issues.push(Diagnostic::new(code, span, field, reason));
    }

    fn finite(&mut self, field: &str, n: &Num) -> Option<f64> {
        let v = *n.get_ref();
        if v.is_finite() {
            Some(v)
        } else {
            self.issue(DiagnosticCode::NonFinite, Some(n.span()), field, format!("{v} is not a finite number"));
            None
        }
    }

    fn positive(&mut self, field: &str, n: &Num) -> Option<f64> {
        let v = self.finite(field, n)?;
        if v > 0.0 {
            Some(v)
        } else {
            self.issue(DiagnosticCode::InvalidValue, Some(n.span()), field, format!("must be positive, got {v}"));
            None
        }
    }

    fn opt_positive(&mut self, field: &str, n: Option<&Num>, default: f64) -> f64 {
        n.map_or(Some(default), |n| self.positive(field, n)).unwrap_or(default)
    }

    fn build(mut self, s: &Scenario) -> Result<Prepared, Diagnostics> {
        let name = s.name.get_ref();
        if name.is_empty()
            || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        {
            self.issue(
                DiagnosticCode::InvalidValue,
                Some(s.name.span()),
                "name",
                "must be non-empty and use only ASCII letters, digits, `_`, `-` and `.`",
            );
        }

        let graph = self.graph(&s.graph);
        let agents = self.systems("agents", &s.agents, builtin_agent, |a, i| a.with_indices(i));
        let controllers = self.systems(
            "controllers",
            &s.controllers,
            builtin_controller,
            |c, i| c.with_indices(i),
        );

        let x0: Vec<Option<f64>> = s
            .x0
            .get_ref()
            .iter()
            .enumerate()
            .map(|(i, v)| self.finite(&format!("x0[{i}]"), v))
            .collect();

        let integration = s.integration.clone().unwrap_or_default();
        let dt = self.opt_positive("integration.dt", integration.dt.as_ref(), DEFAULT_DT);
        let t_end = self.opt_positive("integration.t_end", integration.t_end.as_ref(), DEFAULT_T_END);
        let stride = integration.record_stride.as_ref().map_or(1, |s| *s.get_ref());
        let integration_config = match IntegrationConfig::new(dt, t_end, stride) {
            Ok(c) => Some(c),
            Err(e) => {
                let span = integration
                    .record_stride
                    .as_ref()
                    .map(|s| s.span())
                    .or(integration.t_end.as_ref().map(|s| s.span()));
                self.issue(DiagnosticCode::InvalidValue, span, "integration", e.to_string());
                None
            }
        };

        let (agreement_tolerance, agreement_window) = match &s.agreement {
            Some(a) => (
                self.opt_positive("agreement.tolerance", a.tolerance.as_ref(), DEFAULT_AGREEMENT_TOL),
                self.opt_positive("agreement.window", a.window.as_ref(), DEFAULT_AGREEMENT_WINDOW),
            ),
            None => (DEFAULT_AGREEMENT_TOL, DEFAULT_AGREEMENT_WINDOW),
        };
        if agreement_window > t_end {
            let span = s.agreement.as_ref().and_then(|a| a.window.as_ref()).map(|w| w.span());
            self.issue(
                DiagnosticCode::InvalidValue,
                span,
                "agreement.window",
                format!("window {agreement_window} is longer than the run (t_end = {t_end})"),
            );
        }

        let network = match (graph, agents, controllers) {
            (Some(g), Some(agents), Some(controllers)) => self.assemble(s, g, agents, controllers),
            _ => None,
        };

        let mut x0_values = None;
        if let Some(net) = &network {
            if x0.len() != net.state_dim() {
                self.issue(
                    DiagnosticCode::DimensionMismatch,
                    Some(s.x0.span()),
                    "x0",
                    format!(
                        "has {} entries, the network state has {} ({} agent, {} controller)",
                        x0.len(),
                        net.state_dim(),
                        net.layout().agents().len(),
                        net.layout().controllers().len()
                    ),
                );
            } else if x0.iter().all(Option::is_some) {
                x0_values = Some(x0.into_iter().flatten().collect::<Vec<_>>());
            }
        }

        let slope_constant = network.as_ref().map(|net| self.slope_constant(s, net));
        let certificate = match (&network, slope_constant) {
            (Some(net), Some(sc)) => self.certificate(s, net, sc),
            _ => None,
        };
        let audits = match (&network, slope_constant) {
            (Some(net), Some(sc)) => self.audits(s, net, sc, certificate.as_ref()),
            _ => Vec::new(),
        };

        if !self.issues.is_empty() {
            return Err(Diagnostics(self.issues));
        }
        Ok(Prepared {
            name: name.clone(),
            network: network.expect("no issues means the network assembled"),
            x0: x0_values.expect("no issues means x0 is valid"),
            integration: integration_config.expect("no issues means the config is valid"),
            agreement_tolerance,
            agreement_window,
            slope_constant: slope_constant.expect("network assembled"),
            certificate,
            audits,
        })
    }

    fn graph(&mut self, spec: &GraphSpec) -> Option<Digraph> {
        let n = *spec.vertices.get_ref();
        let pairs: Vec<(usize, usize)> = spec.edges.iter().map(|e| (e.get_ref()[0], e.get_ref()[1])).collect();
        match Digraph::new(n, pairs) {
            Ok(g) => Some(g),
            Err(e) => {
                let (span, field) = match &e {
                    GraphError::NoVertices => (Some(spec.vertices.span()), "graph.vertices".to_string()),
                    GraphError::VertexOutOfRange { edge, .. }
                    | GraphError::SelfLoop { edge, .. }
                    | GraphError::DuplicateEdge { edge, .. } => {
                        // Edge numbers in graph errors are 1-based.
                        let k = edge - 1;
                        (spec.edges.get(k).map(|e| e.span()), format!("graph.edges[{k}]"))
                    }
                };
                self.issue(DiagnosticCode::InvalidValue, span, field, e.to_string());
                None
            }
        }
    }

    fn systems<T: Clone>(
        &mut self,
        section: &str,
        specs: &[SystemSpec],
        make: impl Fn(&str, &BTreeMap<String, f64>) -> Result<T, SystemsError>,
        with_indices: impl Fn(T, PassivityIndices) -> T,
    ) -> Option<Vec<T>> {
        let mut out = Vec::new();
        let mut ok = true;
        for (i, spec) in specs.iter().enumerate() {
            let at = format!("{section}[{i}]");
            let mut params = BTreeMap::new();
            for (key, value) in &spec.params {
                match self.finite(&format!("{at}.params.{key}"), value) {
                    Some(v) => {
                        params.insert(key.clone(), v);
                    }
                    None => ok = false,
                }
            }
            let count = spec.count.as_ref().map_or(1, |c| *c.get_ref());
            if count == 0 {
                let span = spec.count.as_ref().map(|c| c.span());
                self.issue(DiagnosticCode::InvalidValue, span, format!("{at}.count"), "must be at least 1");
                ok = false;
            }
            let indices = spec.indices.as_ref().and_then(|ix| {
                let input = self.finite(&format!("{at}.indices.input"), &ix.input)?;
                let output = self.finite(&format!("{at}.indices.output"), &ix.output)?;
                Some(PassivityIndices { input, output })
            });
            if spec.indices.is_some() && indices.is_none() {
                ok = false;
            }
            if !ok {
                continue;
            }
            match make(spec.kind.get_ref(), &params) {
                Ok(model) => {
                    let model = match indices {
                        Some(ix) => with_indices(model, ix),
                        None => model,
                    };
                    out.extend(std::iter::repeat_n(model, count));
                }
                Err(e) => {
                    ok = false;
                    match &e {
                        SystemsError::UnknownParam { param, .. } => {
                            let span = spec.params.get(param).map(|p| p.span());
                            self.issue(DiagnosticCode::UnknownKey, span, format!("{at}.params.{param}"), e.to_string());
                        }
                        SystemsError::BadParam { param, .. } => {
                            let span = spec.params.get(param).map(|p| p.span());
                            self.issue(DiagnosticCode::InvalidValue, span, format!("{at}.params.{param}"), e.to_string());
                        }
                        SystemsError::MissingParam { param, .. } => {
                            self.issue(
                                DiagnosticCode::MissingField,
                                Some(spec.kind.span()),
                                format!("{at}.params.{param}"),
                                e.to_string(),
                            );
                        }
                        _ => {
                            self.issue(DiagnosticCode::InvalidValue, Some(spec.kind.span()), format!("{at}.kind"), e.to_string());
                        }
                    }
                }
            }
        }
        ok.then_some(out)
    }

    fn assemble(
        &mut self,
        s: &Scenario,
        g: Digraph,
        agents: Vec<AgentModel>,
        controllers: Vec<ControllerModel>,
    ) -> Option<NetworkSystem> {
        let mut ok = true;
        if agents.len() != g.vertex_count() {
            let span = s.agents.first().map(count_or_kind_span);
            self.issue(
                DiagnosticCode::DimensionMismatch,
                span,
                "agents",
                format!("{} agents for a graph with {} vertices", agents.len(), g.vertex_count()),
            );
            ok = false;
        }
        if controllers.len() != g.edge_count() {
            let span = s.controllers.first().map(count_or_kind_span).or(Some(s.graph.vertices.span()));
            self.issue(
                DiagnosticCode::DimensionMismatch,
                span,
                "controllers",
                format!("{} controllers for a graph with {} edges", controllers.len(), g.edge_count()),
            );
            ok = false;
        }
        if !ok {
            return None;
        }
        match NetworkSystem::assemble(agents, controllers, g) {
            Ok(net) => Some(net),
            Err(e) => {
                self.issue(DiagnosticCode::DimensionMismatch, None, "agents", e.to_string());
                None
            }
        }
    }

    fn slope_constant(&mut self, s: &Scenario, net: &NetworkSystem) -> SlopeConstant {
        if let Some(m) = s.certificate.as_ref().and_then(|c| c.m.as_ref()) {
            return match self.positive("certificate.m", m) {
                Some(v) => SlopeConstant::Override(v),
                None => SlopeConstant::Unavailable,
            };
        }
        if !net.is_integrator_like() {
            return SlopeConstant::Unavailable;
        }
        let maps: Vec<_> = net.agents().iter().filter_map(|a| a.output_map().cloned()).collect();
        slope_bound_m(&maps).map_or(SlopeConstant::Unavailable, SlopeConstant::Derived)
    }

    fn certificate(&mut self, s: &Scenario, net: &NetworkSystem, sc: SlopeConstant) -> Option<CertificatePlan> {
        let spec = s.certificate.as_ref()?;
        let Some(m) = sc.value() else {
            self.issue(
                DiagnosticCode::MissingField,
                None,
                "certificate.m",
                "M cannot be derived (agents are not all integrators with monotone passive outputs); set it explicitly",
            );
            return None;
        };
        let explicit = match (&spec.alpha, &spec.gamma) {
            (Some(a), Some(g)) => {
                let alpha = self.non_negative("certificate.alpha", a);
                let gamma = self.non_negative("certificate.gamma", g);
                alpha.zip(gamma)
            }
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => {
                let missing = if spec.alpha.is_some() { "certificate.gamma" } else { "certificate.alpha" };
                self.issue(DiagnosticCode::MissingField, Some(a.span()), missing, "alpha and gamma must be given together");
                None
            }
        };
        let static_gain = if spec.static_gain_search {
            let gains: Vec<Option<f64>> = net.controllers().iter().map(|c| c.static_gain_value()).collect();
            match gains.first().copied().flatten() {
                Some(b) if gains.iter().all(|g| *g == Some(b)) => Some(b),
                _ => {
                    self.issue(
                        DiagnosticCode::InvalidValue,
                        None,
                        "certificate.static_gain_search",
                        "needs every controller to be a static gain with the same gain",
                    );
                    None
                }
            }
        } else {
            None
        };
        Some(CertificatePlan { m, explicit, static_gain })
    }

    fn non_negative(&mut self, field: &str, n: &Num) -> Option<f64> {
        let v = self.finite(field, n)?;
        if v >= 0.0 {
            Some(v)
        } else {
            self.issue(DiagnosticCode::InvalidValue, Some(n.span()), field, format!("must be non-negative, got {v}"));
            None
        }
    }

    fn audits(
        &mut self,
        s: &Scenario,
        net: &NetworkSystem,
        sc: SlopeConstant,
        cert: Option<&CertificatePlan>,
    ) -> Vec<AuditPlan> {
        let mut plans = Vec::new();
        let mut seen = Vec::new();
        for (i, spec) in s.audits.iter().enumerate() {
            let at = format!("audits[{i}]");
            let Some(id) = AuditId::parse(spec.id.get_ref()) else {
                let known: Vec<&str> = AuditId::ALL.iter().map(|a| a.as_str()).collect();
                self.issue(
                    DiagnosticCode::InvalidValue,
                    Some(spec.id.span()),
                    format!("{at}.id"),
                    format!("unknown audit `{}`; expected one of {}", spec.id.get_ref(), known.join(", ")),
                );
                continue;
            };
            if seen.contains(&id) {
                self.issue(DiagnosticCode::InvalidValue, Some(spec.id.span()), format!("{at}.id"), format!("audit `{id}` requested twice"));
                continue;
            }
            seen.push(id);

            let allowed: &[&str] = match id {
                AuditId::AgentRelation => &["m"],
                AuditId::ControllerRelation => &["gamma", "alpha", "lambda"],
                AuditId::Compensation => &["epsilon"],
                AuditId::IopAgentRelation => &["delta", "epsilon"],
            };
            let present = [
                ("m", spec.m.as_ref().map(|n| n.span())),
                ("gamma", spec.gamma.as_ref().map(|n| n.span())),
                ("alpha", spec.alpha.as_ref().map(|n| n.span())),
                ("lambda", spec.lambda.as_ref().map(|n| n.span())),
                ("epsilon", spec.epsilon.as_ref().map(|n| n.span())),
                ("delta", spec.delta.as_ref().map(|n| n.span())),
            ];
            let mut ok = true;
            for (key, span) in present {
                if span.is_some() && !allowed.contains(&key) {
                    self.issue(DiagnosticCode::UnknownKey, span, format!("{at}.{key}"), format!("`{key}` does not apply to audit `{id}`"));
                    ok = false;
                }
            }
            let tolerance = match &spec.tolerance {
                Some(t) => match self.positive(&format!("{at}.tolerance"), t) {
                    Some(v) => Some(v),
                    None => continue,
                },
                None => None,
            };
            if !ok {
                continue;
            }
            let needs_integrators = !matches!(id, AuditId::ControllerRelation);
            if needs_integrators && !net.is_integrator_like() {
                self.issue(
                    DiagnosticCode::InvalidValue,
                    Some(spec.id.span()),
                    format!("{at}.id"),
                    format!("audit `{id}` needs integrator agents with output maps"),
                );
                continue;
            }
            let plan = match id {
                AuditId::AgentRelation => {
                    let m = match &spec.m {
                        Some(m) => self.positive(&format!("{at}.m"), m),
                        None => sc.value().or_else(|| {
                            self.issue(DiagnosticCode::MissingField, Some(spec.id.span()), format!("{at}.m"), "M cannot be derived; set it");
                            None
                        }),
                    };
                    m.map(|m| AuditPlan::AgentRelation { m, tolerance })
                }
                AuditId::ControllerRelation => self.controller_audit(&at, spec, net, cert, tolerance),
                AuditId::Compensation => {
                    let epsilon = match &spec.epsilon {
                        Some(e) => self.positive(&format!("{at}.epsilon"), e).map(Some),
                        None if cert.is_some_and(|c| c.explicit.is_some() || c.static_gain.is_some()) => Some(None),
                        None => {
                            self.issue(
                                DiagnosticCode::MissingField,
                                Some(spec.id.span()),
                                format!("{at}.epsilon"),
                                "give epsilon or attach a certificate with indices",
                            );
                            None
                        }
                    };
                    let has_storage = net.controllers().iter().all(|c| c.storage(&vec![0.0; c.state_dim()]).is_some());
                    if !has_storage {
                        self.issue(DiagnosticCode::InvalidValue, Some(spec.id.span()), format!("{at}.id"), "controllers lack storage functions");
                    }
                    epsilon.filter(|_| has_storage).map(|epsilon| AuditPlan::Compensation { epsilon, tolerance })
                }
                AuditId::IopAgentRelation => {
                    let declared = net.agents().iter().map(|a| a.indices()).collect::<Option<Vec<_>>>();
                    let base = declared
                        .and_then(|d| aggregate_indices(&d).ok())
                        .unwrap_or(PassivityIndices::agent(0.0, 0.0));
                    let delta = match &spec.delta {
                        Some(d) => self.finite(&format!("{at}.delta"), d),
                        None => Some(base.delta()),
                    };
                    let epsilon = match &spec.epsilon {
                        Some(e) => self.finite(&format!("{at}.epsilon"), e),
                        None => Some(base.epsilon()),
                    };
                    match delta.zip(epsilon) {
                        Some((d, e)) if d * e >= 0.25 => {
                            self.issue(
                                DiagnosticCode::InvalidValue,
                                Some(spec.id.span()),
                                at.clone(),
                                format!("indices δ = {d}, ε = {e} violate δ·ε < 1/4"),
                            );
                            None
                        }
                        Some((delta, epsilon)) => Some(AuditPlan::IopAgentRelation { delta, epsilon, tolerance }),
                        None => None,
                    }
                }
            };
            plans.extend(plan);
        }
        plans
    }

    fn controller_audit(
        &mut self,
        at: &str,
        spec: &AuditSpec,
        net: &NetworkSystem,
        cert: Option<&CertificatePlan>,
        tolerance: Option<f64>,
    ) -> Option<AuditPlan> {
        let lambda = match spec.lambda.as_ref().map(|l| (l.get_ref().as_str(), l.span())) {
            None | Some(("algebraic", _)) => LambdaMode::Algebraic,
            Some(("largest", _)) => LambdaMode::Largest,
            Some((other, span)) => {
                self.issue(
                    DiagnosticCode::InvalidValue,
                    Some(span),
                    format!("{at}.lambda"),
                    format!("`{other}`: expected `algebraic` or `largest`"),
                );
                return None;
            }
        };
        let indices = match (&spec.gamma, &spec.alpha) {
            (Some(g), Some(a)) => {
                let gamma = self.finite(&format!("{at}.gamma"), g)?;
                let alpha = self.finite(&format!("{at}.alpha"), a)?;
                IndexSource::Given { gamma, alpha }
            }
            (Some(n), None) | (None, Some(n)) => {
                self.issue(DiagnosticCode::MissingField, Some(n.span()), at, "gamma and alpha must be given together");
                return None;
            }
            (None, None) => {
                let declared = net.controllers().iter().map(|c| c.indices()).collect::<Option<Vec<_>>>();
                let aggregated = declared.and_then(|d| aggregate_indices(&d).ok());
                match (cert, aggregated) {
                    (Some(CertificatePlan { explicit: Some((alpha, gamma)), .. }), _) => {
                        IndexSource::Given { gamma: *gamma, alpha: *alpha }
                    }
                    (Some(CertificatePlan { static_gain: Some(_), .. }), _) => IndexSource::FromSearch,
                    (_, Some(ix)) => IndexSource::Given { gamma: ix.gamma(), alpha: ix.alpha() },
                    _ => {
                        self.issue(
                            DiagnosticCode::MissingField,
                            Some(spec.id.span()),
                            format!("{at}.gamma"),
                            "give gamma and alpha, or attach a certificate",
                        );
                        return None;
                    }
                }
            }
        };
        if let (IndexSource::Given { gamma, alpha }, LambdaMode::Algebraic) = (indices, lambda) {
            if gamma < 0.0 || alpha < 0.0 {
                self.issue(
                    DiagnosticCode::InvalidValue,
                    spec.gamma.as_ref().map(|g| g.span()).or(Some(spec.id.span())),
                    at,
                    "negative indices need `lambda = \"largest\"`",
                );
                return None;
            }
        }
        Some(AuditPlan::ControllerRelation { indices, lambda, tolerance })
    }
}
