//! Fleet information exchange and the sequential planning protocol.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, TargetEstimate};
use crate::planner::{Plan, PlanningProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum Payload {
    Plan(Plan),
    EstimateSnapshot(Vec<TargetEstimate>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetMessage {
    pub sender: usize,
    pub step: usize,
    #[serde(flatten)]
    pub payload: Payload,
}

/// Transport between agents. Implementations must accept concurrent
/// publishers and deliver each sender's messages in publication order.
pub trait MessageBus: Send + Sync {
    fn publish(&self, msg: FleetMessage) -> Result<()>;
    /// Removes and returns every pending message.
    fn drain(&self) -> Vec<FleetMessage>;
}

/// Lossless FIFO bus with an optional line-delimited JSON trace.
#[derive(Default)]
pub struct InProcessBus {
    queue: Mutex<VecDeque<FleetMessage>>,
    trace: Option<Mutex<Box<dyn Write + Send>>>,
}

impl InProcessBus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_trace(sink: Box<dyn Write + Send>) -> Self {
        Self {
            queue: Mutex::default(),
            trace: Some(Mutex::new(sink)),
        }
    }

    pub fn flush_trace(&self) -> std::io::Result<()> {
        match &self.trace {
            Some(t) => t.lock().unwrap_or_else(|e| e.into_inner()).flush(),
            None => Ok(()),
        }
    }
}

impl MessageBus for InProcessBus {
    fn publish(&self, msg: FleetMessage) -> Result<()> {
        if let Some(trace) = &self.trace {
            let line = serde_json::to_string(&msg)?;
            let mut sink = trace.lock().unwrap_or_else(|e| e.into_inner());
            writeln!(sink, "{line}").map_err(|e| Error::io("<bus trace>", e))?;
        }
        self.queue.lock().unwrap_or_else(|e| e.into_inner()).push_back(msg);
        Ok(())
    }

    fn drain(&self) -> Vec<FleetMessage> {
        self.queue.lock().unwrap_or_else(|e| e.into_inner()).drain(..).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoordinationConfig {
    /// Start each round one agent later than the previous round instead of
    /// always at the lowest id.
    pub rotate_order: bool,
}

/// Planning order for the round at `step`.
pub fn planning_order(n: usize, step: usize, cfg: &CoordinationConfig) -> Vec<usize> {
    let shift = if cfg.rotate_order && n > 0 { step % n } else { 0 };
    (0..n).map(|i| (i + shift) % n).collect()
}

/// Gathers every agent's bank, fuses per target and returns the fused bank
/// (ascending target id) that every agent should adopt.
///
/// Exact duplicates enter the fusion once. Agents that did not observe a
/// target since the last exchange all hold the same copy of the shared
/// estimate; counting it once per agent would shrink the covariance by the
/// fleet size every step without any new information.
pub fn exchange_and_fuse(bus: &dyn MessageBus, banks: &[Vec<TargetEstimate>], step: usize) -> Result<Vec<TargetEstimate>> {
    for (sender, bank) in banks.iter().enumerate() {
        bus.publish(FleetMessage {
            sender,
            step,
            payload: Payload::EstimateSnapshot(bank.clone()),
        })?;
    }
    let mut per_target: BTreeMap<usize, Vec<TargetEstimate>> = BTreeMap::new();
    for msg in bus.drain() {
        if let Payload::EstimateSnapshot(bank) = msg.payload {
            for est in bank {
                let set = per_target.entry(est.target_id).or_default();
                if !set.contains(&est) {
                    set.push(est);
                }
            }
        }
    }
    per_target.values().map(|ests| estimation::fuse(ests)).collect()
}

/// Installs `fused` as every agent's bank.
pub fn install(banks: &mut [Vec<TargetEstimate>], fused: &[TargetEstimate]) {
    for bank in banks {
        bank.clear();
        bank.extend_from_slice(fused);
    }
}

/// One sequential planning round.
///
/// `problems[i]` is agent `i`'s problem with an empty `others` list;
/// `previous` holds last round's plans indexed by agent id. Each solve sees
/// this round's plans for agents already processed and `previous` for the
/// rest. Every plan is broadcast on the bus. Returns plans indexed by agent id.
pub fn planning_round<F>(
    bus: &dyn MessageBus,
    problems: &[PlanningProblem<'_>],
    previous: &[Plan],
    order: &[usize],
    mut solver: F,
) -> Result<Vec<Plan>>
where
    F: FnMut(&PlanningProblem<'_>) -> Plan,
{
    let mut latest: Vec<Plan> = previous.to_vec();
    for &i in order {
        let others: Vec<Plan> = latest.iter().filter(|p| p.agent_id != i).cloned().collect();
        let problem = PlanningProblem {
            others: &others,
            ..problems[i]
        };
        let plan = solver(&problem);
        bus.publish(FleetMessage {
            sender: i,
            step: problem.step,
            payload: Payload::Plan(plan),
        })?;
        for msg in bus.drain() {
            if let Payload::Plan(p) = msg.payload {
                let slot = latest
                    .get_mut(p.agent_id)
                    .ok_or_else(|| Error::param("plans", format!("unknown agent {}", p.agent_id)))?;
                *slot = p;
            }
        }
    }
    Ok(latest)
}
