//! Line-oriented text format for networks: hand-written parser, canonical
//! serializer and a standalone validator.
//!
//! One statement per line, `#` starts a comment, tokens are whitespace
//! separated. Statements:
//!
//! ```text
//! network <id>
//! stimulus <id> level=<float>
//! node <id> pathway=<id> [output] [flipped]
//! pathwaydef <id> input=<node-id> output=<node-id>
//! edge <A|I> <src-id> -> <dst-id> alpha=<float> beta=<float> class=<pathway|crosstalk|feedback|stimulus>
//! config phi=<float> [tol_rel=<float>] [tol_abs=<float>] [eps_ss=<float>] [t_max=<float>]
//! ```
//!
//! Any input yields either a network or error diagnostics with 1-based line
//! numbers; the parser never panics on malformed text.

use crate::diag::{has_errors, Diagnostic};
use crate::net::{
    EdgeClass, EdgeKind, EdgeSource, EdgeSpec, ModelConfig, Network, NetworkParts, StimulusSpec,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// A parsed file: the network plus its config block and any non-fatal
/// findings.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub network: Network,
    pub config: ModelConfig,
    pub warnings: Vec<Diagnostic>,
}

/// Parses a network description. On failure every error found is returned,
/// each tied to a source line where one exists.
pub fn parse(text: &str) -> Result<Document, Vec<Diagnostic>> {
    let mut parts = NetworkParts::default();
    let mut config = ModelConfig::default();
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut saw_network = false;
    let mut saw_config = false;

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some((&head, rest)) = tokens.split_first() else {
            continue;
        };
        match head {
            "network" => {
                if saw_network {
                    diags.push(Diagnostic::error(ln, "duplicate `network` statement"));
                } else if rest.len() != 1 {
                    diags.push(Diagnostic::error(ln, "expected `network <id>`"));
                } else {
                    saw_network = true;
                    parts.id = rest[0].to_string();
                }
            }
            "stimulus" => {
                if rest.len() != 2 {
                    diags.push(Diagnostic::error(
                        ln,
                        "expected `stimulus <id> level=<float>`",
                    ));
                    continue;
                }
                let id = rest[0].to_string();
                let mut kv = KeyValues::parse(ln, &rest[1..], &mut diags);
                let level = kv.float("level", &mut diags);
                kv.finish(&mut diags);
                if let Some(level) = level {
                    if !(-1.0..=1.0).contains(&level) {
                        diags.push(
                            Diagnostic::error(
                                ln,
                                format!("stimulus level {level} outside [-1, 1]"),
                            )
                            .with_token(rest[1]),
                        );
                    }
                    parts.stimuli.push(StimulusSpec { id, level });
                }
            }
            "node" => {
                if rest.len() < 2 {
                    diags.push(Diagnostic::error(
                        ln,
                        "expected `node <id> pathway=<id> [output] [flipped]`",
                    ));
                    continue;
                }
                let id = rest[0].to_string();
                let mut pathway = None;
                let mut output = false;
                let mut flipped = false;
                for &tok in &rest[1..] {
                    if let Some(pw) = tok.strip_prefix("pathway=") {
                        pathway = Some(pw.to_string());
                    } else if tok == "output" {
                        output = true;
                    } else if tok == "flipped" {
                        flipped = true;
                    } else {
                        diags.push(
                            Diagnostic::error(ln, "unexpected token in node statement")
                                .with_token(tok),
                        );
                    }
                }
                let Some(pathway) = pathway else {
                    diags.push(Diagnostic::error(
                        ln,
                        format!("node `{id}` is missing pathway="),
                    ));
                    continue;
                };
                if output {
                    parts.outputs.insert(id.clone());
                }
                parts.nodes.push((id, pathway, flipped));
            }
            "pathwaydef" => {
                if rest.len() != 3 {
                    diags.push(Diagnostic::error(
                        ln,
                        "expected `pathwaydef <id> input=<node-id> output=<node-id>`",
                    ));
                    continue;
                }
                let id = rest[0].to_string();
                let mut kv = KeyValues::parse(ln, &rest[1..], &mut diags);
                let input = kv.string("input", &mut diags);
                let output = kv.string("output", &mut diags);
                kv.finish(&mut diags);
                if let (Some(input), Some(output)) = (input, output) {
                    parts.pathway_defs.push((id, input, output));
                }
            }
            "edge" => {
                // edge <A|I> <src> -> <dst> alpha= beta= class=
                if rest.len() != 7 || rest[2] != "->" {
                    diags.push(Diagnostic::error(
                        ln,
                        "expected `edge <A|I> <src-id> -> <dst-id> alpha=<float> beta=<float> class=<...>`",
                    ));
                    continue;
                }
                let kind = match (rest[0].chars().next(), rest[0].len()) {
                    (Some(c), 1) => EdgeKind::from_letter(c),
                    _ => None,
                };
                let Some(kind) = kind else {
                    diags.push(
                        Diagnostic::error(ln, "edge kind must be A or I").with_token(rest[0]),
                    );
                    continue;
                };
                let src = rest[1].to_string();
                let dst = rest[3].to_string();
                let mut kv = KeyValues::parse(ln, &rest[4..], &mut diags);
                let alpha = kv.float("alpha", &mut diags);
                let beta = kv.float("beta", &mut diags);
                let class = kv.string("class", &mut diags);
                kv.finish(&mut diags);
                let (Some(alpha), Some(beta), Some(class)) = (alpha, beta, class) else {
                    continue;
                };
                let Some(class) = EdgeClass::parse(&class) else {
                    diags.push(
                        Diagnostic::error(
                            ln,
                            "class must be pathway, crosstalk, feedback or stimulus",
                        )
                        .with_token(class),
                    );
                    continue;
                };
                if !(beta > 1.0) {
                    diags.push(Diagnostic::error(
                        ln,
                        format!("beta must exceed 1, got {beta}"),
                    ));
                }
                if !(alpha > 0.0) {
                    diags.push(Diagnostic::error(
                        ln,
                        format!("alpha must be positive, got {alpha}"),
                    ));
                }
                let source = if class == EdgeClass::Stimulus {
                    EdgeSource::Stimulus(src)
                } else {
                    EdgeSource::Node(src)
                };
                parts.edges.push(EdgeSpec {
                    source,
                    target: dst,
                    kind,
                    alpha,
                    beta,
                    class,
                });
            }
            "config" => {
                if saw_config {
                    diags.push(Diagnostic::error(ln, "duplicate `config` statement"));
                    continue;
                }
                saw_config = true;
                let mut kv = KeyValues::parse(ln, rest, &mut diags);
                let phi = kv.float("phi", &mut diags);
                let tol_rel = kv.float_opt("tol_rel", &mut diags);
                let tol_abs = kv.float_opt("tol_abs", &mut diags);
                let eps_ss = kv.float_opt("eps_ss", &mut diags);
                let t_max = kv.float_opt("t_max", &mut diags);
                kv.finish(&mut diags);
                if let Some(phi) = phi {
                    config.phi = phi;
                }
                if let Some(v) = tol_rel {
                    config.tol_rel = v;
                }
                if let Some(v) = tol_abs {
                    config.tol_abs = v;
                }
                if let Some(v) = eps_ss {
                    config.eps_ss = v;
                }
                if let Some(v) = t_max {
                    config.t_max = v;
                }
                if let Err(e) = config.check() {
                    diags.push(Diagnostic::error(ln, e.to_string()));
                }
            }
            other => {
                diags
                    .push(Diagnostic::error(ln, "unknown statement").with_token(other.to_string()));
            }
        }
    }

    if !saw_network {
        diags.push(Diagnostic::error(0, "missing `network <id>` statement"));
    }
    if has_errors(&diags) {
        return Err(diags);
    }

    match Network::from_parts(parts) {
        Ok(network) => {
            let mut warnings = diags;
            warnings.extend(validate(&network));
            Ok(Document {
                network,
                config,
                warnings,
            })
        }
        Err(mut construction) => {
            construction.extend(diags);
            Err(construction)
        }
    }
}

/// `key=value` argument list for one statement.
struct KeyValues {
    line: usize,
    seen: BTreeMap<String, String>,
}

impl KeyValues {
    fn parse(line: usize, tokens: &[&str], diags: &mut Vec<Diagnostic>) -> KeyValues {
        let mut seen = BTreeMap::new();
        for &tok in tokens {
            match tok.split_once('=') {
                Some((k, v)) if !k.is_empty() && !v.is_empty() => {
                    if seen.insert(k.to_string(), v.to_string()).is_some() {
                        diags.push(
                            Diagnostic::error(line, format!("duplicate attribute `{k}`"))
                                .with_token(tok),
                        );
                    }
                }
                _ => diags
                    .push(Diagnostic::error(line, "expected key=value attribute").with_token(tok)),
            }
        }
        KeyValues { line, seen }
    }

    fn string(&mut self, key: &str, diags: &mut Vec<Diagnostic>) -> Option<String> {
        match self.seen.remove(key) {
            Some(v) => Some(v),
            None => {
                diags.push(Diagnostic::error(
                    self.line,
                    format!("missing attribute `{key}=`"),
                ));
                None
            }
        }
    }

    fn float(&mut self, key: &str, diags: &mut Vec<Diagnostic>) -> Option<f64> {
        let v = self.string(key, diags)?;
        self.to_float(key, v, diags)
    }

    fn float_opt(&mut self, key: &str, diags: &mut Vec<Diagnostic>) -> Option<f64> {
        let v = self.seen.remove(key)?;
        self.to_float(key, v, diags)
    }

    fn to_float(&self, key: &str, v: String, diags: &mut Vec<Diagnostic>) -> Option<f64> {
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                diags.push(
                    Diagnostic::error(
                        self.line,
                        format!("attribute `{key}` is not a finite number"),
                    )
                    .with_token(v),
                );
                None
            }
        }
    }

    fn finish(self, diags: &mut Vec<Diagnostic>) {
        for (k, v) in self.seen {
            diags.push(
                Diagnostic::error(self.line, format!("unknown attribute `{k}`"))
                    .with_token(format!("{k}={v}")),
            );
        }
    }
}

/// 17 significant digits, enough for bit-exact float round-trips.
fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Canonical text form: fixed statement order, sorted sections, fixed float
/// formatting. Deterministic, and `parse(serialize(n))` structurally equals
/// `n`.
pub fn serialize(network: &Network, config: &ModelConfig) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "network {}", network.id());
    let _ = writeln!(
        w,
        "config phi={} tol_rel={} tol_abs={} eps_ss={} t_max={}",
        fmt_f(config.phi),
        fmt_f(config.tol_rel),
        fmt_f(config.tol_abs),
        fmt_f(config.eps_ss),
        fmt_f(config.t_max)
    );
    for s in network.stimuli() {
        let _ = writeln!(w, "stimulus {} level={}", s.id, fmt_f(s.level));
    }
    for p in network.pathways() {
        let _ = writeln!(
            w,
            "pathwaydef {} input={} output={}",
            p.id,
            p.input(),
            p.output()
        );
    }
    for n in network.nodes() {
        let _ = write!(w, "node {} pathway={}", n.id, n.pathway);
        if network.outputs().contains(&n.id) {
            let _ = write!(w, " output");
        }
        if n.flipped {
            let _ = write!(w, " flipped");
        }
        let _ = writeln!(w);
    }
    for e in network.edges() {
        let _ = writeln!(
            w,
            "edge {} {} -> {} alpha={} beta={} class={}",
            e.kind.letter(),
            e.source.id(),
            e.target,
            fmt_f(e.alpha),
            fmt_f(e.beta),
            e.class.as_str()
        );
    }
    out
}

/// Serializes with the default config block.
pub fn serialize_network(network: &Network) -> String {
    serialize(network, &ModelConfig::default())
}

/// Structural findings beyond what construction enforces. A valid network
/// yields only warnings; currently the single check is for crosstalk edges
/// that duplicate a consecutive pathway pair.
pub fn validate(network: &Network) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for e in network.edges() {
        if e.class != EdgeClass::Crosstalk {
            continue;
        }
        let EdgeSource::Node(src) = &e.source else {
            continue;
        };
        for pw in network.pathways() {
            if pw
                .nodes
                .windows(2)
                .any(|wd| wd[0] == *src && wd[1] == e.target)
            {
                diags.push(
                    Diagnostic::warning(
                        0,
                        format!(
                            "crosstalk edge {src} -> {} shadows a pathway edge of `{}`",
                            e.target, pw.id
                        ),
                    )
                    .with_token(format!("{src} -> {}", e.target)),
                );
            }
        }
    }
    diags
}
