//! Substrate (physical) network graph with residual-resource accounting,
//! loop-free path enumeration, and neighborhood queries.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = String;

/// Serde adapter for maps keyed by unordered node pairs: JSON objects
/// cannot have tuple keys, so entries serialize as `[a, b, value]` rows.
pub mod pair_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::NodeId;

    pub fn serialize<V, S>(
        map: &BTreeMap<(NodeId, NodeId), V>,
        ser: S,
    ) -> Result<S::Ok, S::Error>
    where
        V: Serialize,
        S: Serializer,
    {
        let rows: Vec<(&NodeId, &NodeId, &V)> =
            map.iter().map(|((a, b), v)| (a, b, v)).collect();
        rows.serialize(ser)
    }

    pub fn deserialize<'de, V, D>(de: D) -> Result<BTreeMap<(NodeId, NodeId), V>, D::Error>
    where
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let rows: Vec<(NodeId, NodeId, V)> = Vec::deserialize(de)?;
        Ok(rows.into_iter().map(|(a, b, v)| ((a, b), v)).collect())
    }
}

/// Canonical unordered link key (endpoints sorted).
pub fn link_key(a: &str, b: &str) -> (NodeId, NodeId) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    EdgeServer,
    MobileUser,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubstrateNode {
    pub id: NodeId,
    pub cpu_capacity: i64,
    pub ram_capacity: i64,
    pub cpu_free: i64,
    pub ram_free: i64,
    /// Planar position in km.
    pub x_km: f64,
    pub y_km: f64,
    pub kind: NodeKind,
    /// For mobile users: id of the edge server they currently attach to.
    pub attachment: Option<NodeId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubstrateLink {
    pub a: NodeId,
    pub b: NodeId,
    pub bw_capacity: i64,
    pub bw_free: i64,
    pub delay_ms: f64,
}

/// Loop-free path through the substrate, stored as a node sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstratePath {
    pub nodes: Vec<NodeId>,
    pub total_delay_ms: f64,
    pub hops: usize,
}

impl SubstratePath {
    pub fn empty() -> Self {
        SubstratePath { nodes: Vec::new(), total_delay_ms: 0.0, hops: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() < 2
    }

    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.windows(2).map(|w| link_key(&w[0], &w[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathWeight {
    Delay,
    Hops,
}

/// Aggregate resource footprint of a mapping, keyed by substrate element.
/// `reserve`/`release` apply these deltas atomically.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceDelta {
    /// node id -> (cpu, ram)
    pub nodes: BTreeMap<NodeId, (i64, i64)>,
    /// link key -> bandwidth
    #[serde(with = "pair_map")]
    pub links: BTreeMap<(NodeId, NodeId), i64>,
}

impl ResourceDelta {
    pub fn add_node(&mut self, id: &str, cpu: i64, ram: i64) {
        let e = self.nodes.entry(id.to_string()).or_insert((0, 0));
        e.0 += cpu;
        e.1 += ram;
    }

    pub fn add_path(&mut self, path: &SubstratePath, bw: i64) {
        for k in path.links() {
            *self.links.entry(k).or_insert(0) += bw;
        }
    }

    pub fn merge(&mut self, other: &ResourceDelta) {
        for (id, (c, r)) in &other.nodes {
            let e = self.nodes.entry(id.clone()).or_insert((0, 0));
            e.0 += c;
            e.1 += r;
        }
        for (k, bw) in &other.links {
            *self.links.entry(k.clone()).or_insert(0) += bw;
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SubstrateNetwork {
    nodes: BTreeMap<NodeId, SubstrateNode>,
    #[serde(with = "pair_map")]
    links: BTreeMap<(NodeId, NodeId), SubstrateLink>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

/// Topology file schema (`nodes`/`links` arrays).
#[derive(Debug, Serialize, Deserialize)]
pub struct TopologyFile {
    pub nodes: Vec<TopologyNode>,
    pub links: Vec<TopologyLink>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TopologyNode {
    pub id: NodeId,
    pub cpu: i64,
    pub ram: i64,
    pub x_km: f64,
    pub y_km: f64,
    pub kind: NodeKind,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TopologyLink {
    pub a: NodeId,
    pub b: NodeId,
    pub bw_mbps: i64,
    pub delay_ms: f64,
}

impl SubstrateNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_topology(file: &TopologyFile) -> Result<Self> {
        let mut net = Self::new();
        for n in &file.nodes {
            net.add_node(SubstrateNode {
                id: n.id.clone(),
                cpu_capacity: n.cpu,
                ram_capacity: n.ram,
                cpu_free: n.cpu,
                ram_free: n.ram,
                x_km: n.x_km,
                y_km: n.y_km,
                kind: n.kind,
                attachment: None,
            })?;
        }
        for l in &file.links {
            net.add_link(&l.a, &l.b, l.bw_mbps, l.delay_ms)?;
        }
        Ok(net)
    }

    pub fn to_topology(&self) -> TopologyFile {
        TopologyFile {
            nodes: self
                .nodes
                .values()
                .map(|n| TopologyNode {
                    id: n.id.clone(),
                    cpu: n.cpu_capacity,
                    ram: n.ram_capacity,
                    x_km: n.x_km,
                    y_km: n.y_km,
                    kind: n.kind,
                })
                .collect(),
            links: self
                .links
                .values()
                .map(|l| TopologyLink {
                    a: l.a.clone(),
                    b: l.b.clone(),
                    bw_mbps: l.bw_capacity,
                    delay_ms: l.delay_ms,
                })
                .collect(),
        }
    }

    pub fn add_node(&mut self, node: SubstrateNode) -> Result<()> {
        if node.cpu_capacity < 0 || node.ram_capacity < 0 {
            return Err(Error::InvalidArgument(format!("negative capacity on `{}`", node.id)));
        }
        if self.nodes.contains_key(&node.id) {
            return Err(Error::DuplicateNode(node.id));
        }
        self.adjacency.insert(node.id.clone(), BTreeSet::new());
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn add_link(&mut self, a: &str, b: &str, bw: i64, delay_ms: f64) -> Result<()> {
        if a == b {
            return Err(Error::InvalidArgument(format!("self-loop on `{a}`")));
        }
        if !(delay_ms > 0.0) {
            return Err(Error::InvalidArgument(format!("link {a}-{b} delay must be > 0")));
        }
        if bw < 0 {
            return Err(Error::InvalidArgument(format!("link {a}-{b} negative bandwidth")));
        }
        self.check_node(a)?;
        self.check_node(b)?;
        let key = link_key(a, b);
        if self.links.contains_key(&key) {
            return Err(Error::DuplicateLink(key.0, key.1));
        }
        self.links.insert(
            key.clone(),
            SubstrateLink { a: key.0, b: key.1, bw_capacity: bw, bw_free: bw, delay_ms },
        );
        self.adjacency.get_mut(a).unwrap().insert(b.to_string());
        self.adjacency.get_mut(b).unwrap().insert(a.to_string());
        Ok(())
    }

    /// Remove a node and its incident links. Rejects removal while any
    /// incident link still carries reservations.
    pub fn remove_node(&mut self, id: &str) -> Result<()> {
        self.check_node(id)?;
        let neighbors: Vec<NodeId> = self.adjacency[id].iter().cloned().collect();
        for nb in &neighbors {
            let key = link_key(id, nb);
            let l = &self.links[&key];
            if l.bw_free != l.bw_capacity {
                return Err(Error::InvalidArgument(format!(
                    "cannot remove `{id}`: link {}-{} still reserved",
                    key.0, key.1
                )));
            }
        }
        let node = &self.nodes[id];
        if node.cpu_free != node.cpu_capacity || node.ram_free != node.ram_capacity {
            return Err(Error::InvalidArgument(format!("cannot remove `{id}`: node still reserved")));
        }
        for nb in &neighbors {
            self.links.remove(&link_key(id, nb));
            self.adjacency.get_mut(nb).unwrap().remove(id);
        }
        self.adjacency.remove(id);
        self.nodes.remove(id);
        Ok(())
    }

    pub fn remove_link(&mut self, a: &str, b: &str) -> Result<()> {
        let key = link_key(a, b);
        let l = self
            .links
            .get(&key)
            .ok_or_else(|| Error::UnknownLink(key.0.clone(), key.1.clone()))?;
        if l.bw_free != l.bw_capacity {
            return Err(Error::InvalidArgument(format!(
                "cannot remove link {}-{}: still reserved",
                key.0, key.1
            )));
        }
        self.links.remove(&key);
        self.adjacency.get_mut(a).unwrap().remove(b);
        self.adjacency.get_mut(b).unwrap().remove(a);
        Ok(())
    }

    fn check_node(&self, id: &str) -> Result<()> {
        if self.nodes.contains_key(id) {
            Ok(())
        } else {
            Err(Error::UnknownNode(id.to_string()))
        }
    }

    pub fn node(&self, id: &str) -> Result<&SubstrateNode> {
        self.nodes.get(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn node_mut(&mut self, id: &str) -> Result<&mut SubstrateNode> {
        self.nodes.get_mut(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn link(&self, a: &str, b: &str) -> Result<&SubstrateLink> {
        let key = link_key(a, b);
        self.links.get(&key).ok_or(Error::UnknownLink(key.0, key.1))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SubstrateNode> {
        self.nodes.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &SubstrateLink> {
        self.links.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn neighbors(&self, id: &str) -> impl Iterator<Item = &NodeId> {
        self.adjacency.get(id).into_iter().flatten()
    }

    pub fn degree(&self, id: &str) -> usize {
        self.adjacency.get(id).map_or(0, |s| s.len())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn contains_link(&self, a: &str, b: &str) -> bool {
        self.links.contains_key(&link_key(a, b))
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.nodes.keys().next() else { return true };
        let mut seen = BTreeSet::new();
        let mut q = VecDeque::from([start.clone()]);
        seen.insert(start.clone());
        while let Some(u) = q.pop_front() {
            for v in &self.adjacency[&u] {
                if seen.insert(v.clone()) {
                    q.push_back(v.clone());
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    /// All nodes reachable from `center` within `depth` hops, center included.
    pub fn neighborhood(&self, center: &str, depth: usize) -> Result<BTreeSet<NodeId>> {
        self.check_node(center)?;
        let mut seen = BTreeSet::from([center.to_string()]);
        let mut frontier = vec![center.to_string()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for u in &frontier {
                for v in &self.adjacency[u] {
                    if seen.insert(v.clone()) {
                        next.push(v.clone());
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(seen)
    }

    /// Bandwidth-weighted average neighbor degree,
    /// `k_nn(i) = (1/s_i) * sum_j bw_ij * deg(j)` with `s_i = sum_j bw_ij`,
    /// computed over free bandwidth. Isolated nodes (or zero weighted degree)
    /// score 0.
    pub fn avg_neighbor_degree_bw(&self, id: &str) -> Result<f64> {
        self.check_node(id)?;
        let mut s = 0.0;
        let mut acc = 0.0;
        for nb in &self.adjacency[id] {
            let bw = self.links[&link_key(id, nb)].bw_free as f64;
            s += bw;
            acc += bw * self.degree(nb) as f64;
        }
        if s == 0.0 {
            Ok(0.0)
        } else {
            Ok(acc / s)
        }
    }

    /// Up to `k` loop-free shortest paths from `u` to `v` (Yen's algorithm),
    /// in nondecreasing weight order with lexicographic node-sequence
    /// tie-break.
    pub fn k_shortest_paths(
        &self,
        u: &str,
        v: &str,
        k: usize,
        weight: PathWeight,
    ) -> Result<Vec<SubstratePath>> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(Error::InvalidArgument("k_shortest_paths requires u != v".into()));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }

        let mut result: Vec<Vec<NodeId>> = Vec::new();
        let Some(first) = self.shortest_path(u, v, weight, &BTreeSet::new(), &BTreeSet::new())
        else {
            return Ok(Vec::new());
        };
        result.push(first);

        // Candidate pool: (cost, node sequence), kept sorted.
        let mut candidates: Vec<(f64, Vec<NodeId>)> = Vec::new();
        while result.len() < k {
            let prev = result.last().unwrap().clone();
            for i in 0..prev.len() - 1 {
                let spur = &prev[i];
                let root = &prev[..=i];
                let mut banned_links: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
                for p in result.iter() {
                    if p.len() > i && p[..=i] == *root {
                        banned_links.insert(link_key(&p[i], &p[i + 1]));
                    }
                }
                let banned_nodes: BTreeSet<NodeId> = root[..i].iter().cloned().collect();
                if let Some(tail) = self.shortest_path(spur, v, weight, &banned_nodes, &banned_links)
                {
                    let mut total: Vec<NodeId> = root[..i].to_vec();
                    total.extend(tail);
                    let cost = self.path_cost(&total, weight);
                    if !result.contains(&total) && !candidates.iter().any(|(_, p)| *p == total) {
                        candidates.push((cost, total));
                    }
                }
            }
            if candidates.is_empty() {
                break;
            }
            candidates.sort_by(|(ca, pa), (cb, pb)| {
                ca.partial_cmp(cb).unwrap().then_with(|| pa.cmp(pb))
            });
            result.push(candidates.remove(0).1);
        }

        Ok(result.into_iter().map(|nodes| self.materialize_path(nodes)).collect())
    }

    fn path_cost(&self, nodes: &[NodeId], weight: PathWeight) -> f64 {
        match weight {
            PathWeight::Hops => (nodes.len() - 1) as f64,
            PathWeight::Delay => nodes
                .windows(2)
                .map(|w| self.links[&link_key(&w[0], &w[1])].delay_ms)
                .sum(),
        }
    }

    fn materialize_path(&self, nodes: Vec<NodeId>) -> SubstratePath {
        let total_delay_ms = self.path_cost(&nodes, PathWeight::Delay);
        let hops = nodes.len() - 1;
        SubstratePath { nodes, total_delay_ms, hops }
    }

    /// Dijkstra with lexicographic-minimal tie-break on equal cost.
    fn shortest_path(
        &self,
        src: &str,
        dst: &str,
        weight: PathWeight,
        banned_nodes: &BTreeSet<NodeId>,
        banned_links: &BTreeSet<(NodeId, NodeId)>,
    ) -> Option<Vec<NodeId>> {
        if banned_nodes.contains(src) || banned_nodes.contains(dst) {
            return None;
        }
        // best: node -> (cost, full path). Small graphs; path comparison keeps
        // ties deterministic.
        let mut best: BTreeMap<NodeId, (f64, Vec<NodeId>)> = BTreeMap::new();
        let mut done: BTreeSet<NodeId> = BTreeSet::new();
        best.insert(src.to_string(), (0.0, vec![src.to_string()]));
        loop {
            let next = best
                .iter()
                .filter(|(n, _)| !done.contains(*n))
                .min_by(|(na, (ca, pa)), (nb, (cb, pb))| {
                    ca.partial_cmp(cb).unwrap().then_with(|| pa.cmp(pb)).then_with(|| na.cmp(nb))
                })
                .map(|(n, _)| n.clone())?;
            if next == dst {
                return Some(best[&next].1.clone());
            }
            done.insert(next.clone());
            let (cost, path) = best[&next].clone();
            for nb in &self.adjacency[&next] {
                if done.contains(nb) || banned_nodes.contains(nb) {
                    continue;
                }
                let key = link_key(&next, nb);
                if banned_links.contains(&key) {
                    continue;
                }
                let w = match weight {
                    PathWeight::Hops => 1.0,
                    PathWeight::Delay => self.links[&key].delay_ms,
                };
                let cand_cost = cost + w;
                let mut cand_path = path.clone();
                cand_path.push(nb.clone());
                match best.get(nb) {
                    Some((c, p)) if (*c, p) <= (cand_cost, &cand_path) => {}
                    _ => {
                        best.insert(nb.clone(), (cand_cost, cand_path));
                    }
                }
            }
        }
    }

    /// Atomically decrement free resources along a delta. No partial
    /// mutation on rejection.
    pub fn reserve(&mut self, delta: &ResourceDelta) -> Result<()> {
        for (id, (cpu, ram)) in &delta.nodes {
            let n = self.node(id)?;
            if n.cpu_free < *cpu || n.ram_free < *ram {
                return Err(Error::InsufficientResources(format!(
                    "node `{id}` needs ({cpu},{ram}), has ({},{})",
                    n.cpu_free, n.ram_free
                )));
            }
        }
        for ((a, b), bw) in &delta.links {
            let l = self.link(a, b)?;
            if l.bw_free < *bw {
                return Err(Error::InsufficientResources(format!(
                    "link {a}-{b} needs {bw}, has {}",
                    l.bw_free
                )));
            }
        }
        for (id, (cpu, ram)) in &delta.nodes {
            let n = self.nodes.get_mut(id).unwrap();
            n.cpu_free -= cpu;
            n.ram_free -= ram;
        }
        for ((a, b), bw) in &delta.links {
            self.links.get_mut(&link_key(a, b)).unwrap().bw_free -= bw;
        }
        Ok(())
    }

    /// Restore free resources previously taken by `reserve`. Exact inverse;
    /// restoring past capacity is rejected with no partial mutation.
    pub fn release(&mut self, delta: &ResourceDelta) -> Result<()> {
        for (id, (cpu, ram)) in &delta.nodes {
            let n = self.node(id)?;
            if n.cpu_free + cpu > n.cpu_capacity || n.ram_free + ram > n.ram_capacity {
                return Err(Error::ReleaseUnderflow(format!("node `{id}`")));
            }
        }
        for ((a, b), bw) in &delta.links {
            let l = self.link(a, b)?;
            if l.bw_free + bw > l.bw_capacity {
                return Err(Error::ReleaseUnderflow(format!("link {a}-{b}")));
            }
        }
        for (id, (cpu, ram)) in &delta.nodes {
            let n = self.nodes.get_mut(id).unwrap();
            n.cpu_free += cpu;
            n.ram_free += ram;
        }
        for ((a, b), bw) in &delta.links {
            self.links.get_mut(&link_key(a, b)).unwrap().bw_free += bw;
        }
        Ok(())
    }
}
