//! Location-aware mapping: embeds one request's virtual graph onto the
//! substrate honoring location, compute, bandwidth, and delay constraints.
//!
//! Location-constrained virtual nodes are anchored first; the remaining
//! nodes are mapped breadth-first starting from the minimum-score node,
//! with candidates restricted to the intersection of delay-derived search
//! neighborhoods around already-mapped neighbors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::intents::{LocationConstraint, Request, VirtualNode};
use crate::substrate::{
    NodeId, NodeKind, PathWeight, ResourceDelta, SubstrateNetwork, SubstratePath,
};

/// Assignment of a request's virtual nodes to substrate nodes and virtual
/// links to substrate paths, with the reserved resource footprint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mapping {
    pub request_id: String,
    /// virtual node id -> substrate node id
    pub node_map: BTreeMap<String, NodeId>,
    /// virtual link key -> substrate path (empty when endpoints co-locate)
    #[serde(with = "crate::substrate::pair_map")]
    pub link_map: BTreeMap<(String, String), SubstratePath>,
    pub reserved: ResourceDelta,
}

impl Mapping {
    fn new(request_id: &str) -> Self {
        Mapping {
            request_id: request_id.to_string(),
            node_map: BTreeMap::new(),
            link_map: BTreeMap::new(),
            reserved: ResourceDelta::default(),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("mapping failed for request `{request_id}`{}: {reason}", vnode.as_deref().map(|v| format!(" at `{v}`")).unwrap_or_default())]
pub struct MapFailure {
    pub request_id: String,
    pub vnode: Option<String>,
    pub reason: String,
}

/// LAM tuning knobs plus the workload normalization maxima.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LamParams {
    pub k_paths: usize,
    /// Search range coefficient `d`.
    pub search_coefficient: u32,
    /// Delay coefficient in ms.
    pub mu_ms: f64,
    /// Workload maxima used to normalize virtual demands.
    pub vcpu_max: i64,
    pub vram_max: i64,
}

impl Default for LamParams {
    fn default() -> Self {
        LamParams { k_paths: 5, search_coefficient: 2, mu_ms: 10.0, vcpu_max: 2, vram_max: 4 }
    }
}

/// Search depth `d * ceil(delay / mu)` in hops.
pub fn search_depth(delay_budget_ms: f64, mu_ms: f64, d: u32) -> usize {
    d as usize * (delay_budget_ms / mu_ms).ceil() as usize
}

/// Bandwidth-weighted average neighbor degree of a virtual node within its
/// request graph, using demanded bandwidth as the weight.
pub fn virtual_knn(request: &Request, vnode: &str) -> f64 {
    let mut s = 0.0;
    let mut acc = 0.0;
    for l in request.virtual_neighbors(vnode) {
        let other = if l.a == vnode { &l.b } else { &l.a };
        let bw = l.bw_demand as f64;
        s += bw;
        acc += bw * request.virtual_neighbors(other).len() as f64;
    }
    if s == 0.0 {
        0.0
    } else {
        acc / s
    }
}

/// Virtual node score `(a'*cpu + b'*ram) * knn` with demands normalized by
/// the workload maxima and `a'/b' = cpu/ram`, `a'+b' = 1`.
pub fn virtual_node_score(v: &VirtualNode, request: &Request, params: &LamParams) -> f64 {
    let (alpha, beta) = demand_split(v.cpu_demand, v.ram_demand);
    let cpu = v.cpu_demand as f64 / params.vcpu_max as f64;
    let ram = v.ram_demand as f64 / params.vram_max as f64;
    (alpha * cpu + beta * ram) * virtual_knn(request, &v.id)
}

/// `a'/b' = cpu/ram` normalized so that `a' + b' = 1`.
pub fn demand_split(cpu: i64, ram: i64) -> (f64, f64) {
    let total = (cpu + ram) as f64;
    if total == 0.0 {
        (0.5, 0.5)
    } else {
        (cpu as f64 / total, ram as f64 / total)
    }
}

/// Weights from the remaining resources within the search neighborhood:
/// `a/b = sum cpu_free / sum ram_free`, `a + b = 1`. Falls back to 0.5/0.5
/// when both sums are zero.
pub fn neighborhood_split(net: &SubstrateNetwork, id: &str, depth: usize) -> (f64, f64) {
    let Ok(hood) = net.neighborhood(id, depth) else { return (0.5, 0.5) };
    let mut cpu = 0i64;
    let mut ram = 0i64;
    for n in &hood {
        let node = net.node(n).unwrap();
        cpu += node.cpu_free;
        ram += node.ram_free;
    }
    if cpu + ram == 0 {
        (0.5, 0.5)
    } else {
        ((cpu as f64) / (cpu + ram) as f64, (ram as f64) / (cpu + ram) as f64)
    }
}

/// Substrate node score `(a*cpu_free + b*ram_free) * knn` with residuals
/// normalized by the network capacity maxima.
pub fn substrate_node_score(net: &SubstrateNetwork, id: &str, depth: usize) -> f64 {
    let Ok(node) = net.node(id) else { return 0.0 };
    let (alpha, beta) = neighborhood_split(net, id, depth);
    let cpu_max = net.nodes().map(|n| n.cpu_capacity).max().unwrap_or(1).max(1) as f64;
    let ram_max = net.nodes().map(|n| n.ram_capacity).max().unwrap_or(1).max(1) as f64;
    let cpu = node.cpu_free as f64 / cpu_max;
    let ram = node.ram_free as f64 / ram_max;
    let knn = net.avg_neighbor_degree_bw(id).unwrap_or(0.0);
    (alpha * cpu + beta * ram) * knn
}

/// Candidate substrate nodes for unmapped virtual node `u`: the
/// intersection of the search neighborhoods around the images of `u`'s
/// already-mapped virtual neighbors, sorted by descending substrate score.
/// With no mapped neighbor the whole edge-server set is eligible.
pub fn candidate_set(
    net: &SubstrateNetwork,
    u: &str,
    partial: &Mapping,
    request: &Request,
    params: &LamParams,
) -> Vec<NodeId> {
    let mut depths: Vec<(NodeId, usize)> = Vec::new();
    for l in request.virtual_neighbors(u) {
        let other = if l.a == u { &l.b } else { &l.a };
        if let Some(image) = partial.node_map.get(other) {
            depths.push((
                image.clone(),
                search_depth(l.delay_budget_ms, params.mu_ms, params.search_coefficient),
            ));
        }
    }
    let score_depth = depths
        .iter()
        .map(|(_, d)| *d)
        .min()
        .unwrap_or(params.search_coefficient as usize);
    let mut set: Option<BTreeSet<NodeId>> = None;
    if depths.is_empty() {
        set = Some(net.node_ids().cloned().collect());
    } else {
        // Minimum depth over mapped neighbors, applied to every
        // intersection term.
        for (image, _) in &depths {
            let hood = match net.neighborhood(image, score_depth) {
                Ok(h) => h,
                Err(_) => return Vec::new(),
            };
            set = Some(match set {
                None => hood,
                Some(prev) => prev.intersection(&hood).cloned().collect(),
            });
        }
    }
    let mut out: Vec<NodeId> = set
        .unwrap_or_default()
        .into_iter()
        .filter(|id| net.node(id).map(|n| n.kind == NodeKind::EdgeServer).unwrap_or(false))
        .collect();
    sort_by_score_desc(net, &mut out, score_depth);
    out
}

fn sort_by_score_desc(net: &SubstrateNetwork, ids: &mut [NodeId], depth: usize) {
    let scores: BTreeMap<NodeId, f64> = ids
        .iter()
        .map(|id| (id.clone(), substrate_node_score(net, id, depth)))
        .collect();
    ids.sort_by(|a, b| {
        scores[b].partial_cmp(&scores[a]).unwrap().then_with(|| a.cmp(b))
    });
}

/// Try to place `u` on one of `candidates`, preferring substrate nodes the
/// request already uses. On success the working network and mapping are
/// updated; on failure both are left untouched.
pub fn map_node(
    working: &mut SubstrateNetwork,
    u: &VirtualNode,
    candidates: &[NodeId],
    partial: &mut Mapping,
    request: &Request,
    params: &LamParams,
) -> bool {
    let mut already: Vec<NodeId> = partial
        .node_map
        .values()
        .filter(|id| working.node(id).map(|n| n.kind == NodeKind::EdgeServer).unwrap_or(false))
        .cloned()
        .collect();
    already.sort();
    already.dedup();
    sort_by_score_desc(working, &mut already, params.search_coefficient as usize);

    let mut tried = BTreeSet::new();
    for cand in already.iter().chain(candidates.iter()) {
        if !tried.insert(cand.clone()) {
            continue;
        }
        if try_candidate(working, u, cand, partial, request, params) {
            return true;
        }
    }
    false
}

/// Attempt one candidate: compute feasibility plus a feasible path for
/// every virtual link towards an already-mapped neighbor.
fn try_candidate(
    working: &mut SubstrateNetwork,
    u: &VirtualNode,
    cand: &NodeId,
    partial: &mut Mapping,
    request: &Request,
    params: &LamParams,
) -> bool {
    let Ok(node) = working.node(cand) else { return false };
    if node.cpu_free < u.cpu_demand || node.ram_free < u.ram_demand {
        return false;
    }

    let mut delta = ResourceDelta::default();
    delta.add_node(cand, u.cpu_demand, u.ram_demand);
    let mut links: Vec<((String, String), SubstratePath)> = Vec::new();
    // Reserve progressively so links of this step share accounting.
    let mut staged = working.clone();
    if staged.reserve(&delta).is_err() {
        return false;
    }
    for l in request.virtual_neighbors(&u.id) {
        let other = if l.a == u.id { &l.b } else { &l.a };
        let Some(image) = partial.node_map.get(other) else { continue };
        let path = if image == cand {
            Some(SubstratePath::empty())
        } else {
            find_feasible_path(&staged, cand, image, l.bw_demand, l.delay_budget_ms, params.k_paths)
        };
        match path {
            Some(p) => {
                let mut d = ResourceDelta::default();
                d.add_path(&p, l.bw_demand);
                if staged.reserve(&d).is_err() {
                    return false;
                }
                delta.merge(&d);
                links.push((l.key(), p));
            }
            None => return false,
        }
    }

    *working = staged;
    partial.node_map.insert(u.id.clone(), cand.clone());
    for (k, p) in links {
        partial.link_map.insert(k, p);
    }
    partial.reserved.merge(&delta);
    true
}

/// First path in k-shortest-by-delay order satisfying both the bandwidth
/// and delay constraints.
pub fn find_feasible_path(
    net: &SubstrateNetwork,
    from: &str,
    to: &str,
    bw: i64,
    delay_budget_ms: f64,
    k: usize,
) -> Option<SubstratePath> {
    let paths = net.k_shortest_paths(from, to, k, PathWeight::Delay).ok()?;
    paths.into_iter().find(|p| {
        p.total_delay_ms <= delay_budget_ms
            && p.links().all(|(a, b)| net.link(&a, &b).map(|l| l.bw_free >= bw).unwrap_or(false))
    })
}

/// Embed a whole request. Returns the mapping without mutating `net`; the
/// caller commits it with `net.reserve(&mapping.reserved)`.
pub fn map_request(
    net: &SubstrateNetwork,
    request: &Request,
    params: &LamParams,
) -> Result<Mapping, MapFailure> {
    let fail = |vnode: Option<&str>, reason: &str| MapFailure {
        request_id: request.id.clone(),
        vnode: vnode.map(String::from),
        reason: reason.to_string(),
    };
    let mut working = net.clone();
    let mut mapping = Mapping::new(&request.id);

    // Phase 1: anchor location-constrained nodes on exactly their targets.
    let mut anchored: Vec<&VirtualNode> =
        request.nodes.iter().filter(|n| n.location_constraint.is_some()).collect();
    anchored.sort_by(|a, b| a.id.cmp(&b.id));
    for v in anchored {
        let constraint = v.location_constraint.as_ref().unwrap();
        let target = constraint.target().clone();
        let Ok(node) = working.node(&target) else {
            return Err(fail(Some(&v.id), "location target not in substrate"));
        };
        if matches!(constraint, LocationConstraint::Mobile(_)) && node.kind != NodeKind::MobileUser
        {
            return Err(fail(Some(&v.id), "mobile pin must reference a mobile user node"));
        }
        if !try_candidate(&mut working, v, &target, &mut mapping, request, params) {
            return Err(fail(Some(&v.id), "anchor infeasible"));
        }
    }

    // Phase 2: breadth-first mapping of unconstrained nodes from the
    // minimum-score node; disconnected components each restart from their
    // own minimum.
    let scores: BTreeMap<String, f64> = request
        .nodes
        .iter()
        .map(|v| (v.id.clone(), virtual_node_score(v, request, params)))
        .collect();
    let by_score_asc = |a: &String, b: &String| {
        scores[a].partial_cmp(&scores[b]).unwrap().then_with(|| a.cmp(b))
    };

    loop {
        let mut unmapped: Vec<String> = request
            .nodes
            .iter()
            .filter(|v| !mapping.node_map.contains_key(&v.id))
            .map(|v| v.id.clone())
            .collect();
        if unmapped.is_empty() {
            break;
        }
        unmapped.sort_by(by_score_asc);
        let mut queue = VecDeque::from([unmapped[0].clone()]);
        let mut enqueued = BTreeSet::from([unmapped[0].clone()]);
        while let Some(uid) = queue.pop_front() {
            if !mapping.node_map.contains_key(&uid) {
                let v = request.node(&uid).unwrap();
                let candidates = candidate_set(&working, &uid, &mapping, request, params);
                if !map_node(&mut working, v, &candidates, &mut mapping, request, params) {
                    return Err(fail(Some(&uid), "no feasible candidate"));
                }
            }
            let mut next: Vec<String> = request
                .virtual_neighbors(&uid)
                .into_iter()
                .map(|l| if l.a == uid { l.b.clone() } else { l.a.clone() })
                .filter(|n| !mapping.node_map.contains_key(n) && !enqueued.contains(n))
                .collect();
            next.sort_by(by_score_asc);
            for n in next {
                enqueued.insert(n.clone());
                queue.push_back(n);
            }
        }
        // Mapped anchors never entered the queue; links between two anchors
        // were handled in phase 1. Remaining unmapped nodes belong to other
        // components and restart the loop.
    }

    Ok(mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intents::{RequestStatus, VirtualLink};
    use crate::substrate::SubstrateNode;

    fn vnode(id: &str, cpu: i64, ram: i64) -> VirtualNode {
        VirtualNode { id: id.into(), cpu_demand: cpu, ram_demand: ram, location_constraint: None }
    }

    fn vlink(a: &str, b: &str, bw: i64, delay: f64) -> VirtualLink {
        VirtualLink { a: a.into(), b: b.into(), bw_demand: bw, delay_budget_ms: delay }
    }

    fn request(nodes: Vec<VirtualNode>, links: Vec<VirtualLink>) -> Request {
        Request { id: "t/0".into(), nodes, links, status: RequestStatus::Pending }
    }

    fn snode(id: &str, cpu: i64, ram: i64) -> SubstrateNode {
        SubstrateNode {
            id: id.into(),
            cpu_capacity: cpu,
            ram_capacity: ram,
            cpu_free: cpu,
            ram_free: ram,
            x_km: 0.0,
            y_km: 0.0,
            kind: NodeKind::EdgeServer,
            attachment: None,
        }
    }

    fn line(n: usize, cpu: i64, ram: i64, bw: i64) -> SubstrateNetwork {
        let mut net = SubstrateNetwork::new();
        for i in 1..=n {
            net.add_node(snode(&format!("n{i}"), cpu, ram)).unwrap();
        }
        for i in 1..n {
            net.add_link(&format!("n{i}"), &format!("n{}", i + 1), bw, 1.0).unwrap();
        }
        net
    }

    #[test]
    fn search_depth_goldens() {
        assert_eq!(search_depth(30.0, 10.0, 2), 6);
        assert_eq!(search_depth(5.0, 10.0, 2), 2);
        assert_eq!(search_depth(100.0, 10.0, 2), 20);
    }

    #[test]
    fn demand_split_ratio() {
        let (a, b) = demand_split(1, 4);
        assert_eq!(a, 0.2);
        assert_eq!(b, 0.8);
    }

    #[test]
    fn virtual_score_star_center() {
        // Star with centre v0 attached to v1..v3 by unit-bw links: every
        // neighbor has degree 1, so knn(v0) = 1.
        let r = request(
            vec![vnode("v0", 1, 2), vnode("v1", 1, 1), vnode("v2", 1, 1), vnode("v3", 1, 1)],
            vec![vlink("v0", "v1", 1, 10.0), vlink("v0", "v2", 1, 10.0), vlink("v0", "v3", 1, 10.0)],
        );
        assert_eq!(virtual_knn(&r, "v0"), 1.0);
        // normalized cpu = ram = 0.5 with maxima (2,4); alpha'=1/3, beta'=2/3
        let params = LamParams::default();
        let s = virtual_node_score(r.node("v0").unwrap(), &r, &params);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn virtual_knn_leaf() {
        // leaf with single incident link bw 2 whose neighbor has degree 3
        let r = request(
            vec![vnode("v0", 1, 1), vnode("v1", 1, 1), vnode("v2", 1, 1), vnode("v3", 1, 1)],
            vec![vlink("v0", "v1", 2, 10.0), vlink("v1", "v2", 1, 10.0), vlink("v1", "v3", 1, 10.0)],
        );
        assert_eq!(virtual_knn(&r, "v0"), 3.0);
    }

    #[test]
    fn neighborhood_split_golden() {
        // sums cpu=30, ram=60 -> alpha=1/3, beta=2/3
        let mut net = SubstrateNetwork::new();
        net.add_node(snode("a", 10, 20)).unwrap();
        net.add_node(snode("b", 20, 40)).unwrap();
        net.add_link("a", "b", 10, 1.0).unwrap();
        let (alpha, beta) = neighborhood_split(&net, "a", 1);
        assert_eq!(alpha, 1.0 / 3.0);
        assert_eq!(beta, 2.0 / 3.0);
    }

    #[test]
    fn zero_resource_node_scores_zero() {
        let mut net = line(2, 10, 10, 10);
        {
            let n = net.node_mut("n1").unwrap();
            n.cpu_free = 0;
            n.ram_free = 0;
        }
        assert_eq!(substrate_node_score(&net, "n1", 2), 0.0);
    }

    #[test]
    fn candidate_intersection_on_line() {
        let net = line(5, 10, 10, 100);
        let r = request(
            vec![vnode("u", 1, 1), vnode("a", 1, 1), vnode("b", 1, 1)],
            vec![vlink("u", "a", 1, 10.0), vlink("u", "b", 1, 10.0)],
        );
        let mut partial = Mapping::new("t/0");
        partial.node_map.insert("a".into(), "n1".into());
        partial.node_map.insert("b".into(), "n5".into());
        let cands = candidate_set(&net, "u", &partial, &r, &LamParams::default());
        assert_eq!(cands, vec!["n3".to_string()]);
    }

    #[test]
    fn candidate_no_mapped_neighbor_is_whole_network() {
        let net = line(5, 10, 10, 100);
        let r = request(vec![vnode("u", 1, 1)], vec![]);
        let cands = candidate_set(&net, "u", &Mapping::new("t/0"), &r, &LamParams::default());
        assert_eq!(cands.len(), 5);
    }

    #[test]
    fn candidate_depth_zero_is_single_node() {
        let net = line(5, 10, 10, 100);
        let r = request(
            vec![vnode("u", 1, 1), vnode("a", 1, 1)],
            vec![vlink("u", "a", 1, 10.0)],
        );
        let mut partial = Mapping::new("t/0");
        partial.node_map.insert("a".into(), "n3".into());
        let params = LamParams { search_coefficient: 0, ..Default::default() };
        let cands = candidate_set(&net, "u", &partial, &r, &params);
        assert_eq!(cands, vec!["n3".to_string()]);
    }

    #[test]
    fn map_node_rejects_on_link_infeasibility() {
        // candidate has cpu but the required path bottleneck is too small
        let mut net = line(3, 10, 10, 10);
        net.node_mut("n2").unwrap().cpu_free = 0;
        net.node_mut("n1").unwrap().cpu_free = 1; // rules out co-location on a's node
        let r = request(
            vec![vnode("u", 2, 1), vnode("a", 1, 1)],
            vec![vlink("u", "a", 20, 100.0)],
        );
        let mut partial = Mapping::new("t/0");
        partial.node_map.insert("a".into(), "n1".into());
        let params = LamParams::default();
        let ok = map_node(
            &mut net.clone(),
            r.node("u").unwrap(),
            &["n3".into()],
            &mut partial.clone(),
            &r,
            &params,
        );
        assert!(!ok);
    }

    #[test]
    fn colocation_consumes_no_bandwidth() {
        let net = line(2, 10, 10, 1);
        let r = request(
            vec![vnode("u", 2, 2), vnode("a", 2, 2)],
            vec![vlink("u", "a", 100, 0.001)],
        );
        // bw 100 over links of bw 1 is only feasible by co-locating
        let m = map_request(&net, &r, &LamParams::default()).unwrap();
        assert_eq!(m.node_map["u"], m.node_map["a"]);
        assert!(m.link_map[&("a".to_string(), "u".to_string())].is_empty());
        assert!(m.reserved.links.is_empty());
    }

    #[test]
    fn failed_anchor_changes_nothing() {
        let mut net = line(3, 10, 10, 100);
        net.node_mut("n1").unwrap().cpu_free = 0;
        let mut nodes = vec![vnode("u", 2, 2)];
        nodes[0].location_constraint = Some(LocationConstraint::Fixed("n1".into()));
        let r = request(nodes, vec![]);
        let before = serde_json::to_string(&net).unwrap();
        assert!(map_request(&net, &r, &LamParams::default()).is_err());
        assert_eq!(serde_json::to_string(&net).unwrap(), before);
    }

    #[test]
    fn single_node_request_lands_on_best_feasible() {
        let mut net = line(3, 10, 10, 100);
        net.node_mut("n1").unwrap().cpu_free = 1;
        let r = request(vec![vnode("u", 2, 2)], vec![]);
        let m = map_request(&net, &r, &LamParams::default()).unwrap();
        // n3 keeps full residuals and an endpoint's knn of 2
        assert_eq!(m.node_map["u"], "n3");
    }

    #[test]
    fn deterministic_mapping() {
        let net = line(6, 10, 10, 100);
        let r = request(
            vec![vnode("a", 1, 2), vnode("b", 2, 1), vnode("c", 1, 1)],
            vec![vlink("a", "b", 5, 10.0), vlink("b", "c", 5, 10.0)],
        );
        let m1 = map_request(&net, &r, &LamParams::default()).unwrap();
        let m2 = map_request(&net, &r, &LamParams::default()).unwrap();
        assert_eq!(serde_json::to_string(&m1).unwrap(), serde_json::to_string(&m2).unwrap());
    }

    #[test]
    fn anchors_map_before_unconstrained() {
        let mut net = line(4, 10, 10, 100);
        net.add_node(SubstrateNode {
            id: "veh".into(),
            cpu_capacity: 4,
            ram_capacity: 8,
            cpu_free: 4,
            ram_free: 8,
            x_km: 0.0,
            y_km: 0.0,
            kind: NodeKind::MobileUser,
            attachment: Some("n1".into()),
        })
        .unwrap();
        net.add_link("veh", "n1", 200, 0.5).unwrap();
        let mut pinned = vnode("p", 1, 1);
        pinned.location_constraint = Some(LocationConstraint::Mobile("veh".into()));
        let r = request(
            vec![pinned, vnode("u", 1, 1)],
            vec![vlink("p", "u", 5, 20.0)],
        );
        let m = map_request(&net, &r, &LamParams::default()).unwrap();
        assert_eq!(m.node_map["p"], "veh");
        // unconstrained node lands on an edge server, never the vehicle
        assert_ne!(m.node_map["u"], "veh");
    }
}
