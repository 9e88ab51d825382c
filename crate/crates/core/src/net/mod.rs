//! Domain types for signalling networks plus the test-model kinetics and the
//! numerical edge classifiers.
//!
//! A [`Network`] is immutable after construction: every invariant (referential
//! integrity, pathway contiguity, parameter ranges) is checked in
//! [`Network::from_parts`] and rewrites such as orientation produce new values.

mod kinetics;

pub(crate) use kinetics::rates_raw as kinetics_raw;
pub use kinetics::{
    check_edge_conditions, classify_edge_model, edge_rates, michaelis_f, BiasClass,
    ConditionReport, KineticsError, SymmetryClass,
};

use crate::diag::{has_errors, Diagnostic};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Activation or inhibition; the closed two-variant edge type set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Activation,
    Inhibition,
}

impl EdgeKind {
    /// The opposite kind; flipping a node toggles every incident edge this way.
    pub fn flipped(self) -> EdgeKind {
        match self {
            EdgeKind::Activation => EdgeKind::Inhibition,
            EdgeKind::Inhibition => EdgeKind::Activation,
        }
    }

    pub fn letter(self) -> char {
        match self {
            EdgeKind::Activation => 'A',
            EdgeKind::Inhibition => 'I',
        }
    }

    pub fn from_letter(c: char) -> Option<EdgeKind> {
        match c {
            'A' => Some(EdgeKind::Activation),
            'I' => Some(EdgeKind::Inhibition),
            _ => None,
        }
    }
}

/// Position of a node within its owning pathway. A single-node pathway's only
/// node is classed as `Output`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Input,
    Internal,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: String,
    pub role: NodeRole,
    /// Hollow-node marker: the state variable is stored in flipped coordinates.
    pub flipped: bool,
    /// Id of the unique pathway owning this node.
    pub pathway: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeClass {
    Pathway,
    Stimulus,
    Crosstalk,
    Feedback,
}

impl EdgeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeClass::Pathway => "pathway",
            EdgeClass::Stimulus => "stimulus",
            EdgeClass::Crosstalk => "crosstalk",
            EdgeClass::Feedback => "feedback",
        }
    }

    pub fn parse(s: &str) -> Option<EdgeClass> {
        match s {
            "pathway" => Some(EdgeClass::Pathway),
            "stimulus" => Some(EdgeClass::Stimulus),
            "crosstalk" => Some(EdgeClass::Crosstalk),
            "feedback" => Some(EdgeClass::Feedback),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeSource {
    Node(String),
    Stimulus(String),
}

impl EdgeSource {
    pub fn id(&self) -> &str {
        match self {
            EdgeSource::Node(id) | EdgeSource::Stimulus(id) => id,
        }
    }
}

/// One directed interaction with its kinetic parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub source: EdgeSource,
    pub target: String,
    pub kind: EdgeKind,
    /// Amplitude / timescale, > 0.
    pub alpha: f64,
    /// Nonlinearity, > 1 so the kinetics denominator stays positive.
    pub beta: f64,
    pub class: EdgeClass,
}

/// A constant external input with level in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSpec {
    pub id: String,
    pub level: f64,
}

/// An ordered node chain with designated input (first) and output (last).
#[derive(Debug, Clone, PartialEq)]
pub struct PathwaySpec {
    pub id: String,
    /// Node ids ordered from input to output.
    pub nodes: Vec<String>,
}

impl PathwaySpec {
    pub fn input(&self) -> &str {
        self.nodes.first().expect("pathway is never empty")
    }

    pub fn output(&self) -> &str {
        self.nodes.last().expect("pathway is never empty")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Global model settings: bias, default stimulus level, integrator tolerances
/// and steady-state detection parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Bias phi in [-1, 1]; 0 is unbiased.
    pub phi: f64,
    /// Default level for newly built stimuli.
    pub stimulus_level: f64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    /// Steady-state threshold on the sup norm of the RHS.
    pub eps_ss: f64,
    /// Horizon after which a run is reported non-convergent.
    pub t_max: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            phi: 0.0,
            stimulus_level: 0.5,
            tol_rel: 1e-9,
            tol_abs: 1e-12,
            eps_ss: 1e-8,
            t_max: 1e4,
        }
    }
}

impl ModelConfig {
    pub fn with_phi(phi: f64) -> Self {
        ModelConfig {
            phi,
            ..ModelConfig::default()
        }
    }

    pub fn check(&self) -> Result<(), NetworkError> {
        if !(-1.0..=1.0).contains(&self.phi) {
            return Err(NetworkError::BadConfig(format!(
                "phi must lie in [-1, 1], got {}",
                self.phi
            )));
        }
        if !(self.eps_ss > 0.0) {
            return Err(NetworkError::BadConfig(format!(
                "eps_ss must be positive, got {}",
                self.eps_ss
            )));
        }
        if !(self.t_max > 0.0) {
            return Err(NetworkError::BadConfig(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.tol_rel > 0.0) || !(self.tol_abs > 0.0) {
            return Err(NetworkError::BadConfig(
                "integrator tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown pathway `{0}`")]
    UnknownPathway(String),
    #[error("cannot flip output node `{0}`")]
    FlipOutput(String),
    #[error("parameter vector length {got} does not match edge count {want}")]
    ParamLength { got: usize, want: usize },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("invalid config: {0}")]
    BadConfig(String),
}

/// Raw ingredients for a [`Network`]; node order is preserved, everything else
/// is canonicalised during construction.
#[derive(Debug, Default, Clone)]
pub struct NetworkParts {
    pub id: String,
    /// (node id, owning pathway id, flipped)
    pub nodes: Vec<(String, String, bool)>,
    /// (pathway id, input node id, output node id)
    pub pathway_defs: Vec<(String, String, String)>,
    pub stimuli: Vec<StimulusSpec>,
    pub edges: Vec<EdgeSpec>,
    pub outputs: BTreeSet<String>,
}

/// Immutable graph of nodes, typed edges, pathways, stimuli and outputs; the
/// single source of truth for both simulation and rewriting.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub(crate) id: String,
    pub(crate) nodes: Vec<NodeSpec>,
    pub(crate) edges: Vec<EdgeSpec>,
    pub(crate) pathways: Vec<PathwaySpec>,
    pub(crate) stimuli: Vec<StimulusSpec>,
    pub(crate) outputs: BTreeSet<String>,
}

fn edge_sort_key(e: &EdgeSpec) -> (EdgeClass, String, String) {
    (e.class, e.source.id().to_string(), e.target.clone())
}

impl Network {
    /// Builds and validates a network. All structural and numeric invariants
    /// are checked; the error side carries every violation found.
    pub fn from_parts(parts: NetworkParts) -> Result<Network, Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let err = |d: &mut Vec<Diagnostic>, msg: String| d.push(Diagnostic::error(0, msg));

        if parts.id.is_empty() {
            err(&mut diags, "network id must not be empty".into());
        }

        // Id uniqueness across nodes, stimuli and pathways.
        let mut node_ids: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, (id, _, _)) in parts.nodes.iter().enumerate() {
            if node_ids.insert(id, i).is_some() {
                err(&mut diags, format!("duplicate node id `{id}`"));
            }
        }
        let mut stim_ids: BTreeSet<&str> = BTreeSet::new();
        for s in &parts.stimuli {
            if !stim_ids.insert(&s.id) {
                err(&mut diags, format!("duplicate stimulus id `{}`", s.id));
            }
            if node_ids.contains_key(s.id.as_str()) {
                err(
                    &mut diags,
                    format!("stimulus id `{}` collides with a node id", s.id),
                );
            }
            if !(s.level >= -1.0 && s.level <= 1.0) {
                err(
                    &mut diags,
                    format!("stimulus `{}` level {} outside [-1, 1]", s.id, s.level),
                );
            }
        }
        let mut pathway_ids: BTreeSet<&str> = BTreeSet::new();
        for (id, _, _) in &parts.pathway_defs {
            if !pathway_ids.insert(id) {
                err(&mut diags, format!("duplicate pathway id `{id}`"));
            }
        }

        // Node -> pathway membership.
        for (id, pw, _) in &parts.nodes {
            if !pathway_ids.contains(pw.as_str()) {
                err(
                    &mut diags,
                    format!("node `{id}` references unknown pathway `{pw}`"),
                );
            }
        }

        // Edge endpoint integrity and parameter ranges.
        for e in &parts.edges {
            match (&e.source, e.class) {
                (EdgeSource::Stimulus(sid), EdgeClass::Stimulus) => {
                    if !stim_ids.contains(sid.as_str()) {
                        err(
                            &mut diags,
                            format!("edge references unknown stimulus `{sid}`"),
                        );
                    }
                }
                (EdgeSource::Stimulus(sid), _) => err(
                    &mut diags,
                    format!(
                        "edge from stimulus `{sid}` must have class=stimulus, not {}",
                        e.class.as_str()
                    ),
                ),
                (EdgeSource::Node(nid), EdgeClass::Stimulus) => err(
                    &mut diags,
                    format!("stimulus-class edge must originate from a stimulus, not node `{nid}`"),
                ),
                (EdgeSource::Node(nid), _) => {
                    if !node_ids.contains_key(nid.as_str()) {
                        err(&mut diags, format!("edge references unknown node `{nid}`"));
                    }
                }
            }
            if !node_ids.contains_key(e.target.as_str()) {
                err(
                    &mut diags,
                    format!("edge references unknown target node `{}`", e.target),
                );
            }
            if !(e.alpha > 0.0) {
                err(
                    &mut diags,
                    format!(
                        "edge {} -> {}: alpha must be positive, got {}",
                        e.source.id(),
                        e.target,
                        e.alpha
                    ),
                );
            }
            if !(e.beta > 1.0) {
                err(
                    &mut diags,
                    format!(
                        "edge {} -> {}: beta must exceed 1, got {}",
                        e.source.id(),
                        e.target,
                        e.beta
                    ),
                );
            }
        }

        // Outputs must be declared nodes.
        for o in &parts.outputs {
            if !node_ids.contains_key(o.as_str()) {
                err(&mut diags, format!("output references unknown node `{o}`"));
            }
        }

        if has_errors(&diags) {
            return Err(diags);
        }

        // Reconstruct each pathway's node order by walking its pathway-class
        // edge chain from the declared input.
        let mut pathways = Vec::new();
        for (pid, input, output) in &parts.pathway_defs {
            let members: BTreeSet<&str> = parts
                .nodes
                .iter()
                .filter(|(_, pw, _)| pw == pid)
                .map(|(id, _, _)| id.as_str())
                .collect();
            if members.is_empty() {
                err(&mut diags, format!("pathway `{pid}` has no member nodes"));
                continue;
            }
            for endpoint in [input, output] {
                if !members.contains(endpoint.as_str()) {
                    err(
                        &mut diags,
                        format!("pathway `{pid}` endpoint `{endpoint}` is not a member node"),
                    );
                }
            }
            if has_errors(&diags) {
                continue;
            }

            // src -> dst over pathway-class edges inside this pathway.
            let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
            let mut n_pathway_edges = 0usize;
            for e in &parts.edges {
                if e.class != EdgeClass::Pathway {
                    continue;
                }
                if let EdgeSource::Node(src) = &e.source {
                    let src_in = members.contains(src.as_str());
                    let dst_in = members.contains(e.target.as_str());
                    if src_in && dst_in {
                        succ.entry(src).or_default().push(&e.target);
                        n_pathway_edges += 1;
                    } else if src_in != dst_in {
                        err(
                            &mut diags,
                            format!(
                                "pathway-class edge {src} -> {} crosses pathway boundaries",
                                e.target
                            ),
                        );
                    }
                }
            }
            if n_pathway_edges != members.len() - 1 {
                err(
                    &mut diags,
                    format!(
                        "pathway `{pid}` has {} member nodes but {} pathway edges (need {})",
                        members.len(),
                        n_pathway_edges,
                        members.len() - 1
                    ),
                );
            }
            let mut order = vec![input.as_str()];
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            seen.insert(input.as_str());
            let mut cur = input.as_str();
            loop {
                match succ.get(cur) {
                    None => break,
                    Some(nexts) if nexts.len() == 1 => {
                        let nxt = nexts[0];
                        if !seen.insert(nxt) {
                            err(
                                &mut diags,
                                format!("pathway `{pid}` edge chain revisits node `{nxt}`"),
                            );
                            break;
                        }
                        order.push(nxt);
                        cur = nxt;
                    }
                    Some(_) => {
                        err(
                            &mut diags,
                            format!("pathway `{pid}` branches at node `{cur}`"),
                        );
                        break;
                    }
                }
            }
            if order.len() != members.len() || order.last().copied() != Some(output.as_str()) {
                err(
                    &mut diags,
                    format!(
                        "pathway `{pid}` edges do not form a single chain from `{input}` to `{output}`"
                    ),
                );
            }
            pathways.push(PathwaySpec {
                id: pid.clone(),
                nodes: order.into_iter().map(String::from).collect(),
            });
        }

        if has_errors(&diags) {
            return Err(diags);
        }

        // Roles from pathway position.
        let mut role_of: BTreeMap<&str, NodeRole> = BTreeMap::new();
        for pw in &pathways {
            for (i, n) in pw.nodes.iter().enumerate() {
                let role = if i + 1 == pw.nodes.len() {
                    NodeRole::Output
                } else if i == 0 {
                    NodeRole::Input
                } else {
                    NodeRole::Internal
                };
                role_of.insert(n, role);
            }
        }

        let nodes: Vec<NodeSpec> = parts
            .nodes
            .iter()
            .map(|(id, pw, flipped)| NodeSpec {
                id: id.clone(),
                role: role_of[id.as_str()],
                flipped: *flipped,
                pathway: pw.clone(),
            })
            .collect();

        for n in &nodes {
            if n.role == NodeRole::Output && n.flipped {
                err(
                    &mut diags,
                    format!("terminal node `{}` must not be flipped", n.id),
                );
            }
        }

        // Network outputs must be the terminal node of their pathway.
        for o in &parts.outputs {
            if role_of[o.as_str()] != NodeRole::Output {
                err(
                    &mut diags,
                    format!("output `{o}` is not the terminal node of its pathway"),
                );
            }
        }

        if has_errors(&diags) {
            return Err(diags);
        }

        let mut stimuli = parts.stimuli;
        stimuli.sort_by(|a, b| a.id.cmp(&b.id));
        pathways.sort_by(|a, b| a.id.cmp(&b.id));
        let mut edges = parts.edges;
        edges.sort_by_key(edge_sort_key);

        Ok(Network {
            id: parts.id,
            nodes,
            edges,
            pathways,
            stimuli,
            outputs: parts.outputs,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn pathways(&self) -> &[PathwaySpec] {
        &self.pathways
    }

    pub fn stimuli(&self) -> &[StimulusSpec] {
        &self.stimuli
    }

    pub fn outputs(&self) -> &BTreeSet<String> {
        &self.outputs
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn pathway(&self, id: &str) -> Option<&PathwaySpec> {
        self.pathways.iter().find(|p| p.id == id)
    }

    pub fn stimulus(&self, id: &str) -> Option<&StimulusSpec> {
        self.stimuli.iter().find(|s| s.id == id)
    }

    /// The stimulus edge feeding a pathway's input node, if any.
    pub fn stimulus_edge_of_pathway(&self, pathway_id: &str) -> Option<(usize, &EdgeSpec)> {
        let pw = self.pathway(pathway_id)?;
        let input = pw.input();
        self.edges
            .iter()
            .enumerate()
            .find(|(_, e)| e.class == EdgeClass::Stimulus && e.target == input)
    }

    /// Indices (into `edges()`) of the pathway-class edges of one pathway, in
    /// chain order from input to output.
    pub fn pathway_edge_indices(&self, pathway_id: &str) -> Result<Vec<usize>, NetworkError> {
        let pw = self
            .pathway(pathway_id)
            .ok_or_else(|| NetworkError::UnknownPathway(pathway_id.into()))?;
        let mut out = Vec::with_capacity(pw.nodes.len().saturating_sub(1));
        for w in pw.nodes.windows(2) {
            let idx = self
                .edges
                .iter()
                .position(|e| {
                    e.class == EdgeClass::Pathway
                        && e.source == EdgeSource::Node(w[0].clone())
                        && e.target == w[1]
                })
                .ok_or_else(|| NetworkError::UnknownNode(format!("{} -> {}", w[0], w[1])))?;
            out.push(idx);
        }
        Ok(out)
    }

    /// A copy with per-edge alpha/beta replaced, matching `edges()` order.
    pub fn with_params(&self, alphas: &[f64], betas: &[f64]) -> Result<Network, NetworkError> {
        if alphas.len() != self.edges.len() || betas.len() != self.edges.len() {
            return Err(NetworkError::ParamLength {
                got: alphas.len().min(betas.len()),
                want: self.edges.len(),
            });
        }
        let mut net = self.clone();
        for (e, (&a, &b)) in net.edges.iter_mut().zip(alphas.iter().zip(betas)) {
            if !(a > 0.0) {
                return Err(NetworkError::BadParam(format!(
                    "alpha must be positive, got {a}"
                )));
            }
            if !(b > 1.0) {
                return Err(NetworkError::BadParam(format!(
                    "beta must exceed 1, got {b}"
                )));
            }
            e.alpha = a;
            e.beta = b;
        }
        Ok(net)
    }

    /// Edge kinds along a pathway chain, input side first.
    pub fn pathway_kinds(&self, pathway_id: &str) -> Result<Vec<EdgeKind>, NetworkError> {
        Ok(self
            .pathway_edge_indices(pathway_id)?
            .iter()
            .map(|&i| self.edges[i].kind)
            .collect())
    }
}
