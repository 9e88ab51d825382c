//! The node-flip rewrite and the pathway/network orientation algorithms, plus
//! structural analyses: the flip-parity oracle, stimulus orientation class and
//! feedback-loop sign.
//!
//! Orientation is a pure rewrite: the input network is retained so that
//! unoriented/oriented pairs can be co-simulated.

use crate::net::{EdgeKind, EdgeSource, Network, NetworkError, NodeRole};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrientError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("pathway `{0}` has no stimulus edge into its input node")]
    NoStimulus(String),
    #[error("edge list does not form a directed cycle: {0}")]
    NotACycle(String),
    #[error("node `{0}` is not assigned to any pathway")]
    Unassigned(String),
}

/// Post-orientation class of a pathway's input stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StimulusOrientation {
    Activated,
    Inhibited,
}

/// Sign of a directed cycle: product of edge signs (+ activation, - inhibition).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopSign {
    Positive,
    Negative,
}

/// One kind toggle applied to an edge during a flip.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeToggle {
    /// Index into `Network::edges()`.
    pub edge: usize,
    pub source: String,
    pub target: String,
    pub old_kind: EdgeKind,
    pub new_kind: EdgeKind,
}

/// What the orienting process did: which nodes ended up flipped, every edge
/// toggle event, and the resulting stimulus class per pathway.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlipReport {
    pub flipped_nodes: BTreeSet<String>,
    pub toggled_edges: Vec<EdgeToggle>,
    pub stimulus_orientation: BTreeMap<String, StimulusOrientation>,
}

impl FlipReport {
    fn record_flip(&mut self, node: &str, toggles: Vec<EdgeToggle>) {
        // Membership tracks flip parity: a second flip of the same node
        // restores it.
        if !self.flipped_nodes.remove(node) {
            self.flipped_nodes.insert(node.to_string());
        }
        self.toggled_edges.extend(toggles);
    }
}

/// Flips one node: toggles its flipped flag and the kind of every incident
/// edge (incoming, outgoing, stimulus, crosstalk, feedback). Output nodes are
/// rejected since orientation must preserve outputs.
pub fn flip_node(network: &Network, node_id: &str) -> Result<Network, OrientError> {
    let (net, _) = flip_node_with_toggles(network, node_id)?;
    Ok(net)
}

fn flip_node_with_toggles(
    network: &Network,
    node_id: &str,
) -> Result<(Network, Vec<EdgeToggle>), OrientError> {
    let idx = network
        .node_index(node_id)
        .ok_or_else(|| NetworkError::UnknownNode(node_id.into()))?;
    if network.nodes[idx].role == NodeRole::Output {
        return Err(NetworkError::FlipOutput(node_id.into()).into());
    }
    let mut net = network.clone();
    net.nodes[idx].flipped = !net.nodes[idx].flipped;
    let mut toggles = Vec::new();
    for (i, e) in net.edges.iter_mut().enumerate() {
        let incident =
            e.target == node_id || matches!(&e.source, EdgeSource::Node(s) if s == node_id);
        if incident {
            let old = e.kind;
            e.kind = old.flipped();
            toggles.push(EdgeToggle {
                edge: i,
                source: e.source.id().to_string(),
                target: e.target.clone(),
                old_kind: old,
                new_kind: e.kind,
            });
        }
    }
    Ok((net, toggles))
}

/// Orients one pathway: walks upstream from the output node and flips the
/// source of every pathway edge that is an inhibition in the current rewritten
/// network. Afterwards every pathway-class edge of this pathway is an
/// activation.
pub fn orient_pathway(
    network: &Network,
    pathway_id: &str,
) -> Result<(Network, FlipReport), OrientError> {
    let mut report = FlipReport::default();
    let net = orient_pathway_into(network, pathway_id, &mut report)?;
    record_stimulus_orientation(&net, pathway_id, &mut report);
    Ok((net, report))
}

fn orient_pathway_into(
    network: &Network,
    pathway_id: &str,
    report: &mut FlipReport,
) -> Result<Network, OrientError> {
    let pw = network
        .pathway(pathway_id)
        .ok_or_else(|| NetworkError::UnknownPathway(pathway_id.into()))?
        .clone();
    let mut net = network.clone();
    // From the edge into the output node back to the edge out of the input.
    for i in (1..pw.nodes.len()).rev() {
        let edge_idx = net.pathway_edge_indices(pathway_id)?[i - 1];
        if net.edges[edge_idx].kind == EdgeKind::Inhibition {
            let upstream = pw.nodes[i - 1].clone();
            let (next, toggles) = flip_node_with_toggles(&net, &upstream)?;
            net = next;
            report.record_flip(&upstream, toggles);
        }
    }
    Ok(net)
}

fn record_stimulus_orientation(net: &Network, pathway_id: &str, report: &mut FlipReport) {
    if let Some((_, e)) = net.stimulus_edge_of_pathway(pathway_id) {
        let class = match e.kind {
            EdgeKind::Activation => StimulusOrientation::Activated,
            EdgeKind::Inhibition => StimulusOrientation::Inhibited,
        };
        report.stimulus_orientation.insert(pathway_id.into(), class);
    }
}

/// Orients every pathway of the network in declaration order. The result has
/// all pathway-class edges as activations; the report aggregates all flips and
/// the post-orientation stimulus class of each stimulated pathway.
pub fn orient_network(network: &Network) -> Result<(Network, FlipReport), OrientError> {
    for n in network.nodes() {
        if network.pathway(&n.pathway).is_none() {
            return Err(OrientError::Unassigned(n.id.clone()));
        }
    }
    let mut report = FlipReport::default();
    let mut net = network.clone();
    let ids: Vec<String> = net.pathways().iter().map(|p| p.id.clone()).collect();
    for pid in &ids {
        net = orient_pathway_into(&net, pid, &mut report)?;
    }
    for pid in &ids {
        record_stimulus_orientation(&net, pid, &mut report);
    }
    Ok((net, report))
}

/// Independent parity oracle for the orientation algorithm: given the original
/// pathway edge kinds (input side first, length N-1), node i (1-based,
/// 1 <= i <= N-1) is flipped iff the number of inhibitions among edges i..N-1
/// is odd.
pub fn predicted_flips(kinds: &[EdgeKind]) -> BTreeSet<usize> {
    let mut flips = BTreeSet::new();
    let mut suffix_inhibitions = 0usize;
    for (i, kind) in kinds.iter().enumerate().rev() {
        if *kind == EdgeKind::Inhibition {
            suffix_inhibitions += 1;
        }
        if suffix_inhibitions % 2 == 1 {
            flips.insert(i + 1);
        }
    }
    flips
}

/// Post-orientation stimulus class of a pathway, from the report.
pub fn stimulus_orientation(
    report: &FlipReport,
    pathway_id: &str,
) -> Result<StimulusOrientation, OrientError> {
    report
        .stimulus_orientation
        .get(pathway_id)
        .copied()
        .ok_or_else(|| OrientError::NoStimulus(pathway_id.into()))
}

/// Sign of a directed cycle given as edge indices into `network.edges()`.
/// Each edge's target must be the next edge's source node and the cycle must
/// close. On an oriented pathway with one feedback edge this reduces to the
/// oriented feedback edge's kind.
pub fn loop_sign(network: &Network, cycle: &[usize]) -> Result<LoopSign, OrientError> {
    if cycle.is_empty() {
        return Err(OrientError::NotACycle("empty edge list".into()));
    }
    for &i in cycle {
        if i >= network.edges().len() {
            return Err(OrientError::NotACycle(format!(
                "edge index {i} out of range"
            )));
        }
    }
    let mut inhibitions = 0usize;
    for (k, &i) in cycle.iter().enumerate() {
        let e = &network.edges()[i];
        let src = match &e.source {
            EdgeSource::Node(s) => s,
            EdgeSource::Stimulus(s) => {
                return Err(OrientError::NotACycle(format!(
                    "stimulus edge {s} -> {} cannot lie on a cycle",
                    e.target
                )))
            }
        };
        let prev = &network.edges()[cycle[(k + cycle.len() - 1) % cycle.len()]];
        if prev.target != *src {
            return Err(OrientError::NotACycle(format!(
                "edge {} -> {} does not continue from node `{}`",
                src, e.target, prev.target
            )));
        }
        if e.kind == EdgeKind::Inhibition {
            inhibitions += 1;
        }
    }
    Ok(if inhibitions.is_multiple_of(2) {
        LoopSign::Positive
    } else {
        LoopSign::Negative
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::net::EdgeKind::{Activation as A, Inhibition as I};

    fn pathway(kinds: &[EdgeKind]) -> Network {
        assets::pattern_pathway(kinds, 0.5)
    }

    #[test]
    fn double_flip_is_identity() {
        let net = pathway(&[I, I, I, A]);
        let once = flip_node(&net, "x2").unwrap();
        assert_ne!(once, net);
        let twice = flip_node(&once, "x2").unwrap();
        assert_eq!(twice, net);
    }

    #[test]
    fn flip_toggles_incident_kinds() {
        let net = pathway(&[A, I, A, A]);
        // x3 has incoming I (x2 -> x3) and outgoing A (x3 -> x4).
        let flipped = flip_node(&net, "x3").unwrap();
        let kinds = flipped.pathway_kinds("p").unwrap();
        assert_eq!(kinds, vec![A, A, I, A]);
        assert!(flipped.node("x3").unwrap().flipped);
    }

    #[test]
    fn flip_rejects_output_and_unknown() {
        let net = pathway(&[I, I, I, A]);
        assert!(matches!(
            flip_node(&net, "x5"),
            Err(OrientError::Network(NetworkError::FlipOutput(_)))
        ));
        assert!(flip_node(&net, "nope").is_err());
    }

    #[test]
    fn orients_the_three_inhibition_cascade() {
        let net = pathway(&[I, I, I, A]);
        let (oriented, report) = orient_pathway(&net, "p").unwrap();
        assert_eq!(oriented.pathway_kinds("p").unwrap(), vec![A; 4]);
        let flipped: Vec<&str> = report.flipped_nodes.iter().map(String::as_str).collect();
        assert_eq!(flipped, vec!["x1", "x3"]);
        assert_eq!(
            stimulus_orientation(&report, "p").unwrap(),
            StimulusOrientation::Inhibited
        );
    }

    #[test]
    fn already_oriented_pathway_is_unchanged() {
        let net = pathway(&[A, A, A, A]);
        let (oriented, report) = orient_pathway(&net, "p").unwrap();
        assert_eq!(oriented, net);
        assert!(report.flipped_nodes.is_empty());
        assert!(report.toggled_edges.is_empty());
        assert_eq!(
            stimulus_orientation(&report, "p").unwrap(),
            StimulusOrientation::Activated
        );
    }

    #[test]
    fn two_inhibitions_flip_the_middle_node() {
        let net = pathway(&[I, I]);
        let (oriented, report) = orient_pathway(&net, "p").unwrap();
        assert_eq!(oriented.pathway_kinds("p").unwrap(), vec![A, A]);
        assert_eq!(report.flipped_nodes.iter().collect::<Vec<_>>(), vec!["x2"]);
    }

    #[test]
    fn parity_oracle_matches_algorithm_exhaustively() {
        for n in 2..=8usize {
            for bits in 0..(1u32 << (n - 1)) {
                let kinds: Vec<EdgeKind> = (0..n - 1)
                    .map(|i| if bits >> i & 1 == 1 { I } else { A })
                    .collect();
                let net = pathway(&kinds);
                let (oriented, report) = orient_pathway(&net, "p").unwrap();
                assert_eq!(oriented.pathway_kinds("p").unwrap(), vec![A; n - 1]);
                let got: BTreeSet<usize> = report
                    .flipped_nodes
                    .iter()
                    .map(|id| id[1..].parse::<usize>().unwrap())
                    .collect();
                assert_eq!(got, predicted_flips(&kinds), "pattern bits {bits:b} n={n}");
            }
        }
    }

    #[test]
    fn parity_oracle_anchor_values() {
        assert_eq!(predicted_flips(&[I, I, I, A]), BTreeSet::from([1, 3]));
        assert!(predicted_flips(&[A, A, A, A]).is_empty());
        assert!(predicted_flips(&[]).is_empty());
        // (I,I,A,A) flips only node 2, leaving the input stimulus activated.
        assert_eq!(predicted_flips(&[I, I, A, A]), BTreeSet::from([2]));
    }

    #[test]
    fn flip_count_histogram_for_n5() {
        let mut hist = BTreeMap::new();
        for bits in 0..16u32 {
            let kinds: Vec<EdgeKind> = (0..4)
                .map(|i| if bits >> i & 1 == 1 { I } else { A })
                .collect();
            *hist.entry(predicted_flips(&kinds).len()).or_insert(0usize) += 1;
        }
        assert_eq!(
            hist,
            BTreeMap::from([(0, 1), (1, 4), (2, 6), (3, 4), (4, 1)])
        );
    }

    #[test]
    fn orientation_is_idempotent_and_structure_preserving() {
        for (_, net) in assets::catalog() {
            let (once, _) = orient_network(&net).unwrap();
            let (twice, report2) = orient_network(&once).unwrap();
            assert_eq!(once, twice, "{}", net.id());
            assert!(report2.flipped_nodes.is_empty());
            // Only flipped flags and edge kinds may change.
            assert_eq!(net.nodes().len(), once.nodes().len());
            assert_eq!(net.edges().len(), once.edges().len());
            assert_eq!(net.pathways(), once.pathways());
            assert_eq!(net.outputs(), once.outputs());
            for (a, b) in net.edges().iter().zip(once.edges()) {
                assert_eq!(a.source, b.source);
                assert_eq!(a.target, b.target);
                assert_eq!(a.class, b.class);
                assert_eq!(a.alpha, b.alpha);
                assert_eq!(a.beta, b.beta);
            }
            for pw in once.pathways() {
                assert_eq!(once.pathway_kinds(&pw.id).unwrap(), vec![A; pw.len() - 1]);
            }
        }
    }

    #[test]
    fn edge_toggle_parity_invariant() {
        for (_, net) in assets::catalog() {
            let (oriented, report) = orient_network(&net).unwrap();
            for (a, b) in net.edges().iter().zip(oriented.edges()) {
                let src_flipped = match &a.source {
                    EdgeSource::Node(s) => report.flipped_nodes.contains(s),
                    EdgeSource::Stimulus(_) => false,
                };
                let dst_flipped = report.flipped_nodes.contains(&a.target);
                let expect = if src_flipped ^ dst_flipped {
                    a.kind.flipped()
                } else {
                    a.kind
                };
                assert_eq!(
                    b.kind,
                    expect,
                    "{} {} -> {}",
                    net.id(),
                    a.source.id(),
                    a.target
                );
            }
        }
    }

    #[test]
    fn feedback_loop_signs_after_orientation() {
        // (I,I,I,A) with inhibition feedback x5 -> x3: node 3 flipped, node 5
        // not, so the feedback toggles once and the oriented loop is positive.
        let net = assets::feedback_variant(5, 3).unwrap();
        let (oriented, report) = orient_network(&net).unwrap();
        assert_eq!(
            report.flipped_nodes.iter().collect::<Vec<_>>(),
            vec!["x1", "x3"]
        );
        let fb = oriented
            .edges()
            .iter()
            .position(|e| e.class == crate::net::EdgeClass::Feedback)
            .unwrap();
        assert_eq!(oriented.edges()[fb].kind, A);
        let chain = oriented.pathway_edge_indices("p").unwrap();
        // Cycle x3 -> x4 -> x5 -> x3.
        let sign = loop_sign(&oriented, &[chain[2], chain[3], fb]).unwrap();
        assert_eq!(sign, LoopSign::Positive);

        // Same pathway, inhibition feedback x2 -> x1: node 1 flipped, node 2
        // not, again a single toggle and a positive oriented loop.
        let net = assets::feedback_variant(2, 1).unwrap();
        let (oriented, _) = orient_network(&net).unwrap();
        let fb = oriented
            .edges()
            .iter()
            .position(|e| e.class == crate::net::EdgeClass::Feedback)
            .unwrap();
        assert_eq!(oriented.edges()[fb].kind, A);
        let chain = oriented.pathway_edge_indices("p").unwrap();
        let sign = loop_sign(&oriented, &[chain[0], fb]).unwrap();
        assert_eq!(sign, LoopSign::Positive);
    }

    #[test]
    fn loop_sign_rejects_non_cycles() {
        let net = assets::feedback_variant(5, 3).unwrap();
        let chain = net.pathway_edge_indices("p").unwrap();
        assert!(loop_sign(&net, &[]).is_err());
        assert!(loop_sign(&net, &[chain[0], chain[2]]).is_err());
    }

    #[test]
    fn orientation_order_independent_on_multi_pathway_network() {
        // Three pathways with crosstalk; orient pathways in every order by
        // repeatedly calling orient_pathway and compare against orient_network.
        let net = assets::egfr_surrogate();
        let (reference, _) = orient_network(&net).unwrap();
        let ids: Vec<String> = net.pathways().iter().map(|p| p.id.clone()).collect();
        let mut orders = vec![ids.clone()];
        let mut rev = ids.clone();
        rev.reverse();
        orders.push(rev);
        let mut rot = ids.clone();
        rot.rotate_left(ids.len() / 2);
        orders.push(rot);
        for order in orders {
            let mut cur = net.clone();
            for pid in &order {
                let (next, _) = orient_pathway(&cur, pid).unwrap();
                cur = next;
            }
            assert_eq!(cur, reference, "order {order:?}");
        }
    }
}
