//! Intent and request data model, the six-state lifecycle machine, and the
//! cost / installation-success formulas.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::substrate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    // Ordered so that High > Mid > Low under derived Ord.
    Low,
    Mid,
    High,
}

impl Priority {
    /// Numeric tag; lower numeric value means higher priority.
    pub fn numeric(self) -> u32 {
        match self {
            Priority::High => 100,
            Priority::Mid => 200,
            Priority::Low => 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "node")]
pub enum LocationConstraint {
    /// Pinned to a stationary substrate node.
    Fixed(NodeId),
    /// Pinned to a mobile user's substrate node.
    Mobile(NodeId),
}

impl LocationConstraint {
    pub fn target(&self) -> &NodeId {
        match self {
            LocationConstraint::Fixed(n) | LocationConstraint::Mobile(n) => n,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VirtualNode {
    pub id: String,
    pub cpu_demand: i64,
    pub ram_demand: i64,
    pub location_constraint: Option<LocationConstraint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VirtualLink {
    pub a: String,
    pub b: String,
    pub bw_demand: i64,
    pub delay_budget_ms: f64,
}

impl VirtualLink {
    pub fn key(&self) -> (String, String) {
        if self.a <= self.b {
            (self.a.clone(), self.b.clone())
        } else {
            (self.b.clone(), self.a.clone())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestStatus {
    Pending,
    Installed,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Request {
    /// `<intent id>/<index>`
    pub id: String,
    pub nodes: Vec<VirtualNode>,
    pub links: Vec<VirtualLink>,
    pub status: RequestStatus,
}

impl Request {
    pub fn node(&self, id: &str) -> Option<&VirtualNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn virtual_neighbors(&self, id: &str) -> Vec<&VirtualLink> {
        self.links.iter().filter(|l| l.a == id || l.b == id).collect()
    }

    pub fn is_connected(&self) -> bool {
        let Some(first) = self.nodes.first() else { return true };
        let mut seen = BTreeSet::from([first.id.clone()]);
        let mut stack = vec![first.id.clone()];
        while let Some(u) = stack.pop() {
            for l in self.virtual_neighbors(&u) {
                let other = if l.a == u { &l.b } else { &l.a };
                if seen.insert(other.clone()) {
                    stack.push(other.clone());
                }
            }
        }
        seen.len() == self.nodes.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LifecycleState {
    Ready,
    Active,
    Suspending,
    Failed,
    Withdrawn,
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleEvent {
    InstallOk,
    InstallFail,
    TopologyUpdate,
    RecompileOk,
    RecompileFail,
    Withdraw,
    Resubmit,
    Delete,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Intent {
    pub id: String,
    pub priority: Priority,
    pub requests: Vec<Request>,
    pub state: LifecycleState,
    pub retry_count: u32,
    pub submit_time: u64,
    pub withdraw_time: Option<u64>,
}

impl Intent {
    /// Apply a lifecycle event. Failure events increment the retry counter;
    /// the state drops to `Failed` only once the retry threshold is
    /// exhausted, otherwise the intent returns to `Ready` for another
    /// installation attempt. Reaching `Active` resets the counter.
    pub fn transition(&mut self, event: LifecycleEvent, retry_threshold: u32) -> Result<LifecycleState> {
        use LifecycleEvent as E;
        use LifecycleState as S;
        let next = match (self.state, event) {
            (S::Ready, E::InstallOk) => {
                self.retry_count = 0;
                S::Active
            }
            (S::Ready, E::InstallFail) => {
                if self.retry_count < retry_threshold {
                    self.retry_count += 1;
                    S::Ready
                } else {
                    S::Failed
                }
            }
            (S::Active, E::TopologyUpdate) => S::Suspending,
            (S::Suspending, E::RecompileOk) => {
                self.retry_count = 0;
                S::Active
            }
            (S::Suspending, E::RecompileFail) => {
                if self.retry_count < retry_threshold {
                    self.retry_count += 1;
                    S::Ready
                } else {
                    S::Failed
                }
            }
            (S::Active | S::Failed, E::Withdraw) => S::Withdrawn,
            (S::Withdrawn, E::Resubmit) => {
                self.retry_count = 0;
                S::Ready
            }
            (S::Withdrawn, E::Delete) => S::Terminated,
            (state, event) => {
                return Err(Error::IllegalTransition {
                    state: format!("{state:?}"),
                    event: format!("{event:?}"),
                })
            }
        };
        self.state = next;
        Ok(next)
    }
}

/// Declarative intent manifest (external interface).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntentManifest {
    pub priority: Priority,
    pub requests: Vec<RequestManifest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RequestManifest {
    pub nodes: Vec<NodeManifest>,
    pub links: Vec<LinkManifest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeManifest {
    pub id: String,
    pub cpu: i64,
    pub ram: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin: Option<LocationConstraint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkManifest {
    pub a: String,
    pub b: String,
    pub bw_mbps: i64,
    pub delay_ms: f64,
}

/// Compile a manifest into an intent. Compilation is validation plus
/// normalization: the request list is taken verbatim.
pub fn compile(id: &str, manifest: &IntentManifest, submit_time: u64) -> Result<Intent> {
    if manifest.requests.is_empty() {
        return Err(Error::Manifest("intent has no requests".into()));
    }
    let mut requests = Vec::new();
    for (i, rm) in manifest.requests.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for n in &rm.nodes {
            if !seen.insert(n.id.clone()) {
                return Err(Error::Manifest(format!("duplicate virtual node `{}`", n.id)));
            }
            if n.cpu <= 0 || n.ram <= 0 {
                return Err(Error::Manifest(format!("nonpositive demand on `{}`", n.id)));
            }
        }
        for l in &rm.links {
            if l.a == l.b {
                return Err(Error::Manifest(format!("self-loop link on `{}`", l.a)));
            }
            if !seen.contains(&l.a) || !seen.contains(&l.b) {
                return Err(Error::Manifest(format!("dangling link {}-{}", l.a, l.b)));
            }
            if l.bw_mbps <= 0 || !(l.delay_ms > 0.0) {
                return Err(Error::Manifest(format!("nonpositive link demand {}-{}", l.a, l.b)));
            }
        }
        requests.push(Request {
            id: format!("{id}/{i}"),
            nodes: rm
                .nodes
                .iter()
                .map(|n| VirtualNode {
                    id: n.id.clone(),
                    cpu_demand: n.cpu,
                    ram_demand: n.ram,
                    location_constraint: n.pin.clone(),
                })
                .collect(),
            links: rm
                .links
                .iter()
                .map(|l| VirtualLink {
                    a: l.a.clone(),
                    b: l.b.clone(),
                    bw_demand: l.bw_mbps,
                    delay_budget_ms: l.delay_ms,
                })
                .collect(),
            status: RequestStatus::Pending,
        });
    }
    Ok(Intent {
        id: id.to_string(),
        priority: manifest.priority,
        requests,
        state: LifecycleState::Ready,
        retry_count: 0,
        submit_time,
        withdraw_time: None,
    })
}

/// Resource-cost weights.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { alpha: 1.0, beta: 1.0, gamma: 1.0 }
    }
}

fn rat(x: f64) -> BigRational {
    BigRational::from_f64(x).unwrap_or_else(BigRational::zero)
}

/// Request installation cost:
/// `alpha * sum cpu + beta * sum ram + gamma * sum(bw/delay)`,
/// evaluated in exact rational arithmetic.
pub fn request_cost_exact(request: &Request, w: &CostWeights) -> BigRational {
    let cpu: i64 = request.nodes.iter().map(|n| n.cpu_demand).sum();
    let ram: i64 = request.nodes.iter().map(|n| n.ram_demand).sum();
    let mut links = BigRational::zero();
    for l in &request.links {
        links += BigRational::from_integer(BigInt::from(l.bw_demand)) / rat(l.delay_budget_ms);
    }
    rat(w.alpha) * BigRational::from_integer(BigInt::from(cpu))
        + rat(w.beta) * BigRational::from_integer(BigInt::from(ram))
        + rat(w.gamma) * links
}

pub fn request_cost(request: &Request, w: &CostWeights) -> f64 {
    request_cost_exact(request, w).to_f64().unwrap()
}

pub fn intent_cost_exact(intent: &Intent, w: &CostWeights) -> BigRational {
    intent.requests.iter().map(|r| request_cost_exact(r, w)).sum()
}

pub fn intent_cost(intent: &Intent, w: &CostWeights) -> f64 {
    intent_cost_exact(intent, w).to_f64().unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstallSemantics {
    /// High/low priority: every compiled request must install.
    All,
    /// Mid priority: partial installation counts.
    Best,
}

/// Intent-level success flag from per-request flags.
pub fn intent_success(flags: &[bool], semantics: InstallSemantics) -> Result<bool> {
    if flags.is_empty() {
        return Err(Error::InvalidArgument("empty request flag list".into()));
    }
    Ok(match semantics {
        InstallSemantics::All => flags.iter().all(|f| *f),
        InstallSemantics::Best => flags.iter().any(|f| *f),
    })
}

impl Priority {
    pub fn semantics(self) -> InstallSemantics {
        match self {
            Priority::Mid => InstallSemantics::Best,
            _ => InstallSemantics::All,
        }
    }
}

/// Per-request cost map keyed by request id.
pub fn request_costs(intent: &Intent, w: &CostWeights) -> BTreeMap<String, f64> {
    intent.requests.iter().map(|r| (r.id.clone(), request_cost(r, w))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(nodes: &[(i64, i64)], links: &[(i64, f64)]) -> Request {
        Request {
            id: "t/0".into(),
            nodes: nodes
                .iter()
                .enumerate()
                .map(|(i, (c, r))| VirtualNode {
                    id: format!("v{i}"),
                    cpu_demand: *c,
                    ram_demand: *r,
                    location_constraint: None,
                })
                .collect(),
            links: links
                .iter()
                .enumerate()
                .map(|(i, (bw, d))| VirtualLink {
                    a: format!("v{i}"),
                    b: format!("v{}", i + 1),
                    bw_demand: *bw,
                    delay_budget_ms: *d,
                })
                .collect(),
            status: RequestStatus::Pending,
        }
    }

    #[test]
    fn cost_golden() {
        let r = req(&[(2, 4), (1, 2)], &[(1, 10.0), (2, 100.0)]);
        let w = CostWeights::default();
        assert_eq!(request_cost(&r, &w), 9.12);
    }

    #[test]
    fn cost_without_links() {
        let r = req(&[(2, 4), (1, 2)], &[]);
        let w = CostWeights { alpha: 1.0, beta: 1.0, gamma: 42.0 };
        assert_eq!(request_cost(&r, &w), 9.0);
    }

    #[test]
    fn cost_linear_in_weights() {
        let r = req(&[(2, 4), (1, 2)], &[(1, 10.0), (2, 100.0)]);
        let w1 = CostWeights::default();
        let w2 = CostWeights { alpha: 2.0, beta: 2.0, gamma: 2.0 };
        assert_eq!(request_cost_exact(&r, &w2), request_cost_exact(&r, &w1) * rat(2.0));
    }

    #[test]
    fn success_semantics() {
        assert!(!intent_success(&[true, false], InstallSemantics::All).unwrap());
        assert!(intent_success(&[true, true], InstallSemantics::All).unwrap());
        assert!(intent_success(&[true, false], InstallSemantics::Best).unwrap());
        assert!(intent_success(&[], InstallSemantics::All).is_err());
    }

    #[test]
    fn success_all_equals_min() {
        for flags in [[true, true], [true, false], [false, false]] {
            let min = *flags.iter().min().unwrap();
            assert_eq!(intent_success(&flags, InstallSemantics::All).unwrap(), min);
        }
    }

    fn fig3_intent1() -> IntentManifest {
        IntentManifest {
            priority: Priority::High,
            requests: vec![
                RequestManifest {
                    nodes: vec![
                        NodeManifest {
                            id: "v1".into(),
                            cpu: 5,
                            ram: 4,
                            pin: Some(LocationConstraint::Mobile("V1".into())),
                        },
                        NodeManifest { id: "v2".into(), cpu: 2, ram: 2, pin: None },
                    ],
                    links: vec![LinkManifest {
                        a: "v1".into(),
                        b: "v2".into(),
                        bw_mbps: 1,
                        delay_ms: 10.0,
                    }],
                },
                RequestManifest {
                    nodes: vec![
                        NodeManifest {
                            id: "v4".into(),
                            cpu: 1,
                            ram: 1,
                            pin: Some(LocationConstraint::Mobile("V1".into())),
                        },
                        NodeManifest { id: "v5".into(), cpu: 1, ram: 1, pin: None },
                    ],
                    links: vec![LinkManifest {
                        a: "v4".into(),
                        b: "v5".into(),
                        bw_mbps: 1,
                        delay_ms: 10.0,
                    }],
                },
            ],
        }
    }

    #[test]
    fn compile_two_requests() {
        let intent = compile("intent1", &fig3_intent1(), 0).unwrap();
        assert_eq!(intent.requests.len(), 2);
        assert_eq!(intent.state, LifecycleState::Ready);
        let r1 = &intent.requests[0];
        assert_eq!(r1.node("v1").unwrap().cpu_demand, 5);
        assert_eq!(r1.links[0].bw_demand, 1);
        assert_eq!(r1.links[0].delay_budget_ms, 10.0);
        assert_eq!(
            r1.node("v1").unwrap().location_constraint,
            Some(LocationConstraint::Mobile("V1".into()))
        );
    }

    #[test]
    fn compile_prototype_intent1() {
        // one request, 3 nodes each 2 vCPU / 4 GB, links 20 Mbps / 30 ms,
        // first node pinned to user1
        let m = IntentManifest {
            priority: Priority::Low,
            requests: vec![RequestManifest {
                nodes: (1..=3)
                    .map(|i| NodeManifest {
                        id: format!("v{i}"),
                        cpu: 2,
                        ram: 4,
                        pin: (i == 1).then(|| LocationConstraint::Mobile("user1".into())),
                    })
                    .collect(),
                links: vec![
                    LinkManifest { a: "v1".into(), b: "v2".into(), bw_mbps: 20, delay_ms: 30.0 },
                    LinkManifest { a: "v1".into(), b: "v3".into(), bw_mbps: 20, delay_ms: 30.0 },
                ],
            }],
        };
        let intent = compile("intent1", &m, 0).unwrap();
        assert_eq!(intent.requests.len(), 1);
        assert_eq!(intent.requests[0].nodes.len(), 3);
        assert!(intent.requests[0].is_connected());
    }

    #[test]
    fn compile_dangling_link_fails() {
        let mut m = fig3_intent1();
        m.requests[0].links[0].b = "ghost".into();
        assert!(compile("x", &m, 0).is_err());
    }

    #[test]
    fn transition_examples() {
        let mut i = compile("x", &fig3_intent1(), 0).unwrap();
        i.state = LifecycleState::Active;
        assert_eq!(i.transition(LifecycleEvent::TopologyUpdate, 3).unwrap(), LifecycleState::Suspending);
        i.state = LifecycleState::Failed;
        assert_eq!(i.transition(LifecycleEvent::Withdraw, 3).unwrap(), LifecycleState::Withdrawn);
        i.state = LifecycleState::Terminated;
        assert!(i.transition(LifecycleEvent::Resubmit, 3).is_err());
        assert_eq!(i.state, LifecycleState::Terminated);
    }

    #[test]
    fn retry_bound() {
        let mut i = compile("x", &fig3_intent1(), 0).unwrap();
        for _ in 0..3 {
            assert_eq!(i.transition(LifecycleEvent::InstallFail, 3).unwrap(), LifecycleState::Ready);
        }
        assert_eq!(i.transition(LifecycleEvent::InstallFail, 3).unwrap(), LifecycleState::Failed);
        assert!(i.retry_count <= 3);
    }
}
