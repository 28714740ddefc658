//! Reference online VNE embedders used as comparison points: grcrank,
//! rwrank, and nrmrank node rankings with a greedy full-network embedding
//! pipeline. Requests are treated as standalone VNRs and two virtual nodes
//! of a request never share a substrate node.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::intents::{LocationConstraint, Request};
use crate::lam::{find_feasible_path, Mapping, MapFailure};
use crate::substrate::{NodeId, NodeKind, ResourceDelta, SubstrateNetwork, SubstratePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankAlgorithm {
    Grc,
    Rw,
    Nrm,
}

#[derive(Debug, Clone)]
pub struct NodeRanking {
    pub algorithm: RankAlgorithm,
    pub scores: BTreeMap<NodeId, f64>,
}

const DAMPING: f64 = 0.85;
const TOL: f64 = 1e-6;
const MAX_ITERS: usize = 200;

/// Rank substrate edge-server nodes. grc and rw are probability-style
/// vectors (sum 1); nrm is the normalized local metric
/// `cpu_free * sum of incident free bandwidth`.
pub fn rank(algorithm: RankAlgorithm, net: &SubstrateNetwork) -> NodeRanking {
    rank_with_damping(algorithm, net, DAMPING)
}

pub fn rank_with_damping(
    algorithm: RankAlgorithm,
    net: &SubstrateNetwork,
    damping: f64,
) -> NodeRanking {
    let ids: Vec<NodeId> = net
        .nodes()
        .filter(|n| n.kind == NodeKind::EdgeServer)
        .map(|n| n.id.clone())
        .collect();
    let n = ids.len();
    let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();

    let cpu_free: Vec<f64> =
        ids.iter().map(|id| net.node(id).unwrap().cpu_free as f64).collect();
    let incident_bw: Vec<f64> = ids
        .iter()
        .map(|id| {
            net.neighbors(id)
                .filter(|nb| index.contains_key(nb))
                .map(|nb| net.link(id, nb).unwrap().bw_free as f64)
                .sum()
        })
        .collect();

    let scores = match algorithm {
        RankAlgorithm::Nrm => {
            let raw: Vec<f64> = (0..n).map(|i| cpu_free[i] * incident_bw[i]).collect();
            normalize(raw)
        }
        RankAlgorithm::Grc => {
            // r = (1-sigma) c^ + sigma T r, T distributing a node's score to
            // neighbors proportionally to free bandwidth.
            let teleport = normalize(cpu_free.clone());
            power_iterate(net, &ids, &index, &incident_bw, &teleport, damping)
        }
        RankAlgorithm::Rw => {
            // PageRank with teleport proportional to cpu_free * incident bw.
            let raw: Vec<f64> = (0..n).map(|i| cpu_free[i] * incident_bw[i]).collect();
            let teleport = normalize(raw);
            power_iterate(net, &ids, &index, &incident_bw, &teleport, damping)
        }
    };

    NodeRanking {
        algorithm,
        scores: ids.into_iter().zip(scores).collect(),
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in &mut v {
            *x /= total;
        }
    } else if !v.is_empty() {
        let u = 1.0 / v.len() as f64;
        for x in &mut v {
            *x = u;
        }
    }
    v
}

fn power_iterate(
    net: &SubstrateNetwork,
    ids: &[NodeId],
    index: &BTreeMap<&NodeId, usize>,
    incident_bw: &[f64],
    teleport: &[f64],
    damping: f64,
) -> Vec<f64> {
    let n = ids.len();
    let mut r = teleport.to_vec();
    for _ in 0..MAX_ITERS {
        let mut next = vec![0.0; n];
        let mut dangling = 0.0;
        for (j, id) in ids.iter().enumerate() {
            if incident_bw[j] == 0.0 {
                dangling += r[j];
                continue;
            }
            for nb in net.neighbors(id) {
                let Some(&i) = index.get(nb) else { continue };
                let bw = net.link(id, nb).unwrap().bw_free as f64;
                next[i] += r[j] * bw / incident_bw[j];
            }
        }
        let mut l1 = 0.0;
        for i in 0..n {
            let v = (1.0 - damping) * teleport[i] + damping * (next[i] + dangling * teleport[i]);
            l1 += (v - r[i]).abs();
            next[i] = v;
        }
        r = next;
        if l1 < TOL {
            break;
        }
    }
    r
}

/// Greedy VNR embedding against a ranking: virtual nodes in descending
/// demand order take the highest-ranked feasible substrate node not yet
/// used by this request; links map to the first feasible k-shortest path.
pub fn embed_vnr(
    net: &SubstrateNetwork,
    request: &Request,
    ranking: &NodeRanking,
    k_paths: usize,
) -> Result<Mapping, MapFailure> {
    let fail = |vnode: Option<&str>, reason: &str| MapFailure {
        request_id: request.id.clone(),
        vnode: vnode.map(String::from),
        reason: reason.to_string(),
    };
    let mut working = net.clone();
    let mut mapping = Mapping {
        request_id: request.id.clone(),
        node_map: BTreeMap::new(),
        link_map: BTreeMap::new(),
        reserved: ResourceDelta::default(),
    };

    let mut order: Vec<&crate::intents::VirtualNode> = request.nodes.iter().collect();
    order.sort_by(|a, b| {
        (b.cpu_demand + b.ram_demand)
            .cmp(&(a.cpu_demand + a.ram_demand))
            .then_with(|| a.id.cmp(&b.id))
    });

    let mut ranked: Vec<NodeId> = ranking.scores.keys().cloned().collect();
    ranked.sort_by(|a, b| {
        ranking.scores[b]
            .partial_cmp(&ranking.scores[a])
            .unwrap()
            .then_with(|| a.cmp(b))
    });

    for v in order {
        let candidates: Vec<NodeId> = match &v.location_constraint {
            Some(c) => vec![c.target().clone()],
            None => ranked.clone(),
        };
        let mut placed = false;
        'cands: for cand in &candidates {
            if mapping.node_map.values().any(|used| used == cand) {
                continue; // no co-location in traditional VNE
            }
            let Ok(node) = working.node(cand) else { continue };
            if node.cpu_free < v.cpu_demand || node.ram_free < v.ram_demand {
                continue;
            }
            let mut staged = working.clone();
            let mut delta = ResourceDelta::default();
            delta.add_node(cand, v.cpu_demand, v.ram_demand);
            if staged.reserve(&delta).is_err() {
                continue;
            }
            let mut links: Vec<((String, String), SubstratePath)> = Vec::new();
            for l in request.virtual_neighbors(&v.id) {
                let other = if l.a == v.id { &l.b } else { &l.a };
                let Some(image) = mapping.node_map.get(other) else { continue };
                match find_feasible_path(&staged, cand, image, l.bw_demand, l.delay_budget_ms, k_paths)
                {
                    Some(p) => {
                        let mut d = ResourceDelta::default();
                        d.add_path(&p, l.bw_demand);
                        if staged.reserve(&d).is_err() {
                            continue 'cands;
                        }
                        delta.merge(&d);
                        links.push((l.key(), p));
                    }
                    None => continue 'cands,
                }
            }
            working = staged;
            mapping.node_map.insert(v.id.clone(), cand.clone());
            for (key, p) in links {
                mapping.link_map.insert(key, p);
            }
            mapping.reserved.merge(&delta);
            placed = true;
            break;
        }
        if !placed {
            return Err(fail(Some(&v.id), "no feasible substrate node"));
        }
    }
    Ok(mapping)
}
