//! Bundled network assets: the 16 length-5 pathway patterns, the ten
//! inhibition-feedback variants of the (I,I,I,A) pathway, the reference
//! five-node pathway with fixed parameters, and a surrogate integrated
//! network ("egfr-surrogate") with six pathways and two outputs.
//!
//! The surrogate reproduces the qualitative oriented-form structure of the
//! published EGFR/HER2 integration study (all pathway stimuli activating
//! except one, all crosstalk activating except edges incident to that
//! pathway); it is not a reconstruction of the original topology.

use crate::net::{
    EdgeClass, EdgeKind, EdgeSource, EdgeSpec, Network, NetworkError, NetworkParts, StimulusSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 10.0;
pub const DEFAULT_STIMULUS_LEVEL: f64 = 0.5;

/// "IIIA"-style name for an edge-kind pattern, input side first.
pub fn pattern_name(kinds: &[EdgeKind]) -> String {
    kinds.iter().map(|k| k.letter()).collect()
}

pub fn parse_pattern(name: &str) -> Option<Vec<EdgeKind>> {
    name.chars().map(EdgeKind::from_letter).collect()
}

fn node_edge(
    kind: EdgeKind,
    src: &str,
    dst: &str,
    class: EdgeClass,
    alpha: f64,
    beta: f64,
) -> EdgeSpec {
    EdgeSpec {
        source: EdgeSource::Node(src.into()),
        target: dst.into(),
        kind,
        alpha,
        beta,
        class,
    }
}

fn stimulus_edge(src: &str, dst: &str, kind: EdgeKind) -> EdgeSpec {
    EdgeSpec {
        source: EdgeSource::Stimulus(src.into()),
        target: dst.into(),
        kind,
        alpha: DEFAULT_ALPHA,
        beta: DEFAULT_BETA,
        class: EdgeClass::Stimulus,
    }
}

/// Linear pathway x1..xN over pathway `p` with the given edge kinds, an
/// activation stimulus `s` into x1 and x_N as the network output.
pub fn pattern_pathway(kinds: &[EdgeKind], stimulus_level: f64) -> Network {
    pattern_pathway_with_params(
        kinds,
        &vec![DEFAULT_ALPHA; kinds.len()],
        &vec![DEFAULT_BETA; kinds.len()],
        stimulus_level,
    )
}

pub fn pattern_pathway_with_params(
    kinds: &[EdgeKind],
    alphas: &[f64],
    betas: &[f64],
    stimulus_level: f64,
) -> Network {
    assert!(!kinds.is_empty(), "pathway needs at least one edge");
    assert_eq!(kinds.len(), alphas.len());
    assert_eq!(kinds.len(), betas.len());
    let n = kinds.len() + 1;
    let name = |i: usize| format!("x{}", i + 1);
    let mut parts = NetworkParts {
        id: format!("p{}-{}", n, pattern_name(kinds)),
        ..NetworkParts::default()
    };
    for i in 0..n {
        parts.nodes.push((name(i), "p".into(), false));
    }
    parts.pathway_defs.push(("p".into(), name(0), name(n - 1)));
    parts.stimuli.push(StimulusSpec {
        id: "s".into(),
        level: stimulus_level,
    });
    parts
        .edges
        .push(stimulus_edge("s", &name(0), EdgeKind::Activation));
    for (i, (&k, (&a, &b))) in kinds.iter().zip(alphas.iter().zip(betas)).enumerate() {
        parts.edges.push(node_edge(
            k,
            &name(i),
            &name(i + 1),
            EdgeClass::Pathway,
            a,
            b,
        ));
    }
    parts.outputs = BTreeSet::from([name(n - 1)]);
    Network::from_parts(parts).expect("bundled pathway asset is valid")
}

/// All 2^(N-1) edge-kind patterns for pathways of length `n`.
pub fn enumerate_patterns(n: usize) -> Vec<(String, Network)> {
    assert!((2..=12).contains(&n), "pathway length must lie in 2..=12");
    let edges = n - 1;
    (0..1u32 << edges)
        .map(|bits| {
            let kinds: Vec<EdgeKind> = (0..edges)
                .map(|i| {
                    if bits >> i & 1 == 1 {
                        EdgeKind::Inhibition
                    } else {
                        EdgeKind::Activation
                    }
                })
                .collect();
            let net = pattern_pathway(&kinds, DEFAULT_STIMULUS_LEVEL);
            (net.id().to_string(), net)
        })
        .collect()
}

const FEEDBACK_BASE: [EdgeKind; 4] = [
    EdgeKind::Inhibition,
    EdgeKind::Inhibition,
    EdgeKind::Inhibition,
    EdgeKind::Activation,
];

/// The (I,I,I,A) pathway plus one inhibition feedback edge x_j -> x_i, j > i.
pub fn feedback_variant(j: usize, i: usize) -> Result<Network, NetworkError> {
    if !(1..=5).contains(&i) || !(1..=5).contains(&j) || j <= i {
        return Err(NetworkError::BadParam(format!(
            "feedback must point upstream within x1..x5, got x{j} -> x{i}"
        )));
    }
    let base = pattern_pathway(&FEEDBACK_BASE, DEFAULT_STIMULUS_LEVEL);
    let mut parts = network_to_parts(&base);
    parts.id = format!("fb-x{j}-x{i}");
    parts.edges.push(node_edge(
        EdgeKind::Inhibition,
        &format!("x{j}"),
        &format!("x{i}"),
        EdgeClass::Feedback,
        DEFAULT_ALPHA,
        DEFAULT_BETA,
    ));
    Ok(Network::from_parts(parts).expect("feedback asset is valid"))
}

/// All ten inhibition-feedback variants of the (I,I,I,A) pathway, one per
/// downstream -> upstream node pair.
pub fn feedback_family() -> Vec<(String, Network)> {
    let mut out = Vec::new();
    for j in 2..=5 {
        for i in 1..j {
            let net = feedback_variant(j, i).unwrap();
            out.push((net.id().to_string(), net));
        }
    }
    out
}

/// The reference five-node (I,I,I,A) pathway with fixed, deliberately uneven
/// parameters alpha = {0.5, 1, 2, 1.3} and beta = {10, 5, 15, 18}.
pub fn fig5_pathway() -> Network {
    let mut net = pattern_pathway_with_params(
        &FEEDBACK_BASE,
        &[0.5, 1.0, 2.0, 1.3],
        &[10.0, 5.0, 15.0, 18.0],
        DEFAULT_STIMULUS_LEVEL,
    );
    net.id = "fig5".into();
    net
}

/// The surrogate integrated network: six pathways (four biological groups and
/// a single-node intermediary), crosstalk wiring chosen so the oriented form
/// has every stimulus activating except pathway `p4`'s and every crosstalk
/// edge activating except the two incident to `p4`.
pub fn egfr_surrogate() -> Network {
    use EdgeKind::{Activation as A, Inhibition as I};
    let mut parts = NetworkParts {
        id: "egfr-surrogate".into(),
        ..NetworkParts::default()
    };
    // (pathway id, chain nodes, chain kinds)
    let chains: [(&str, &[&str], &[EdgeKind]); 6] = [
        ("p1", &["w1", "w2", "w3"], &[I, I]),
        ("p2a", &["e1", "e2", "x1"], &[A, A]),
        ("p2b", &["h1", "h2", "x2"], &[I, I]),
        ("p3", &["n1", "n2", "n3"], &[I, I]),
        ("p4", &["t1", "t2", "t3"], &[I, A]),
        ("p5", &["pt"], &[]),
    ];
    for (pid, nodes, kinds) in chains {
        for n in nodes {
            parts.nodes.push(((*n).into(), pid.into(), false));
        }
        parts
            .pathway_defs
            .push((pid.into(), nodes[0].into(), nodes[nodes.len() - 1].into()));
        for (w, &k) in nodes.windows(2).zip(kinds) {
            parts.edges.push(node_edge(
                k,
                w[0],
                w[1],
                EdgeClass::Pathway,
                DEFAULT_ALPHA,
                DEFAULT_BETA,
            ));
        }
    }
    for (sid, target) in [
        ("s1", "w1"),
        ("s2", "e1"),
        ("s3", "h1"),
        ("s4", "n1"),
        ("s5", "t1"),
    ] {
        parts.stimuli.push(StimulusSpec {
            id: sid.into(),
            level: DEFAULT_STIMULUS_LEVEL,
        });
        parts.edges.push(stimulus_edge(sid, target, A));
    }
    let crosstalk: [(EdgeKind, &str, &str); 6] = [
        (A, "w3", "e1"),
        (I, "n2", "h1"),
        (A, "n3", "pt"),
        (I, "pt", "t2"),
        (I, "t3", "e2"),
        (A, "x1", "w1"),
    ];
    for (k, src, dst) in crosstalk {
        parts.edges.push(node_edge(
            k,
            src,
            dst,
            EdgeClass::Crosstalk,
            DEFAULT_ALPHA,
            DEFAULT_BETA,
        ));
    }
    parts.outputs = BTreeSet::from(["x1".to_string(), "x2".to_string()]);
    Network::from_parts(parts).expect("surrogate asset is valid")
}

/// The full bundled catalog: 16 length-5 patterns, 10 feedback variants, the
/// reference pathway and the surrogate network (28 assets).
pub fn catalog() -> Vec<(String, Network)> {
    let mut out = enumerate_patterns(5);
    out.extend(feedback_family());
    let fig5 = fig5_pathway();
    out.push((fig5.id().to_string(), fig5));
    let egfr = egfr_surrogate();
    out.push((egfr.id().to_string(), egfr));
    out
}

/// Decomposes a network back into parts (used to derive new assets and by the
/// random generator's shrink-free construction path).
pub fn network_to_parts(net: &Network) -> NetworkParts {
    NetworkParts {
        id: net.id().to_string(),
        nodes: net
            .nodes()
            .iter()
            .map(|n| (n.id.clone(), n.pathway.clone(), n.flipped))
            .collect(),
        pathway_defs: net
            .pathways()
            .iter()
            .map(|p| (p.id.clone(), p.input().to_string(), p.output().to_string()))
            .collect(),
        stimuli: net.stimuli().to_vec(),
        edges: net.edges().to_vec(),
        outputs: net.outputs().clone(),
    }
}

/// A deterministic pseudo-random valid network: 1-3 pathways of length 1-6,
/// random edge kinds and parameters, optional crosstalk, feedback and stimuli.
pub fn random_network(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = NetworkParts {
        id: format!("random-{seed}"),
        ..NetworkParts::default()
    };
    let n_pathways = rng.random_range(1..=3usize);
    let mut terminals = Vec::new();
    for p in 0..n_pathways {
        let pid = format!("p{p}");
        let len = rng.random_range(1..=6usize);
        let node = |k: usize| format!("n{p}_{k}");
        for k in 0..len {
            parts.nodes.push((node(k), pid.clone(), false));
        }
        parts
            .pathway_defs
            .push((pid.clone(), node(0), node(len - 1)));
        for k in 0..len - 1 {
            parts.edges.push(node_edge(
                random_kind(&mut rng),
                &node(k),
                &node(k + 1),
                EdgeClass::Pathway,
                rng.random_range(0.3..3.0),
                rng.random_range(2.0..20.0),
            ));
        }
        if rng.random_bool(0.8) {
            let sid = format!("s{p}");
            parts.stimuli.push(StimulusSpec {
                id: sid.clone(),
                level: rng.random_range(-1.0..1.0),
            });
            let mut e = stimulus_edge(&sid, &node(0), random_kind(&mut rng));
            e.alpha = rng.random_range(0.3..3.0);
            e.beta = rng.random_range(2.0..20.0);
            parts.edges.push(e);
        }
        if len >= 3 && rng.random_bool(0.5) {
            let j = rng.random_range(2..len);
            let i = rng.random_range(0..j);
            parts.edges.push(node_edge(
                random_kind(&mut rng),
                &node(j),
                &node(i),
                EdgeClass::Feedback,
                rng.random_range(0.3..3.0),
                rng.random_range(2.0..20.0),
            ));
        }
        terminals.push((pid, node(len - 1)));
    }
    if n_pathways > 1 {
        let pathway_lens: Vec<usize> = parts
            .pathway_defs
            .iter()
            .map(|(pid, _, _)| parts.nodes.iter().filter(|(_, pw, _)| pw == pid).count())
            .collect();
        for _ in 0..rng.random_range(0..=3usize) {
            let a = rng.random_range(0..n_pathways);
            let b = rng.random_range(0..n_pathways);
            if a == b {
                continue;
            }
            let src = format!("n{a}_{}", rng.random_range(0..pathway_lens[a]));
            let dst = format!("n{b}_{}", rng.random_range(0..pathway_lens[b]));
            let e = node_edge(
                random_kind(&mut rng),
                &src,
                &dst,
                EdgeClass::Crosstalk,
                rng.random_range(0.3..3.0),
                rng.random_range(2.0..20.0),
            );
            let dup = parts
                .edges
                .iter()
                .any(|x| x.class == e.class && x.source == e.source && x.target == e.target);
            if !dup {
                parts.edges.push(e);
            }
        }
    }
    for (_, terminal) in &terminals {
        if rng.random_bool(0.5) {
            parts.outputs.insert(terminal.clone());
        }
    }
    Network::from_parts(parts).expect("generated network is valid by construction")
}

fn random_kind(rng: &mut ChaCha8Rng) -> EdgeKind {
    if rng.random_bool(0.5) {
        EdgeKind::Activation
    } else {
        EdgeKind::Inhibition
    }
}
