//! Predictive target grouping and greedy agent-to-group assignment.
//!
//! Each target's mean is extrapolated over the planning horizon. A pair of
//! targets is split only when their end-of-horizon positions are farther apart
//! than the split distance *and* their headings differ by more than the angle
//! threshold; every other pair is merged, and groups are the transitive
//! closure of the merge relation. Agents then claim groups nearest-first, and once
//! every group is claimed the remaining agents reinforce the largest one.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::estimation::{FilterParams, TargetEstimate};
use crate::vehicle::AgentState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterParams {
    /// Split distance `d_g` (m).
    pub split_distance: f64,
    /// Largest heading difference still considered "similar" (rad).
    pub angle_threshold: f64,
    /// Prediction horizon (steps).
    pub horizon: usize,
    /// Targets predicted to move less than this over the horizon (m) have no
    /// meaningful heading and match any other heading.
    pub min_heading_displacement: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            split_distance: 40.0,
            angle_threshold: 30f64.to_radians(),
            horizon: 3,
            min_heading_displacement: 1.0,
        }
    }
}

impl ClusterParams {
    pub fn check(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        if !(self.split_distance > 0.0) {
            errs.push(FieldError::new("clustering.split_distance", "must be > 0"));
        }
        if !(self.angle_threshold > 0.0 && self.angle_threshold < std::f64::consts::PI) {
            errs.push(FieldError::new("clustering.angle_threshold", "must lie in (0, pi)"));
        }
        if self.horizon == 0 {
            errs.push(FieldError::new("clustering.horizon", "must be >= 1"));
        }
        if !(self.min_heading_displacement >= 0.0) {
            errs.push(FieldError::new("clustering.min_heading_displacement", "must be >= 0"));
        }
        errs
    }
}

/// Open-loop extrapolation of one target's planar position.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedPath {
    pub target_id: usize,
    pub start: Vector2<f64>,
    /// Positions after 1..=K steps.
    pub positions: Vec<Vector2<f64>>,
}

impl PredictedPath {
    pub fn end(&self) -> Vector2<f64> {
        self.positions.last().copied().unwrap_or(self.start)
    }

    pub fn displacement(&self) -> Vector2<f64> {
        self.end() - self.start
    }
}

pub fn predict_paths(estimates: &[TargetEstimate], params: &FilterParams, horizon: usize) -> Vec<PredictedPath> {
    estimates
        .iter()
        .map(|e| {
            let mut mean = e.mean;
            let positions = (0..horizon)
                .map(|_| {
                    mean = params.transition * mean;
                    Vector2::new(mean[0], mean[1])
                })
                .collect();
            PredictedPath {
                target_id: e.target_id,
                start: e.position(),
                positions,
            }
        })
        .collect()
}

fn heading_gap(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let diff = (a.y.atan2(a.x) - b.y.atan2(b.x)).abs();
    if diff > std::f64::consts::PI {
        2.0 * std::f64::consts::PI - diff
    } else {
        diff
    }
}

fn similar_heading(a: &PredictedPath, b: &PredictedPath, params: &ClusterParams) -> bool {
    let (da, db) = (a.displacement(), b.displacement());
    if da.norm() < params.min_heading_displacement || db.norm() < params.min_heading_displacement {
        return true;
    }
    heading_gap(&da, &db) <= params.angle_threshold
}

/// Whether the pair is merged directly (before transitive closure).
pub fn should_merge(a: &PredictedPath, b: &PredictedPath, params: &ClusterParams) -> bool {
    (a.end() - b.end()).norm() <= params.split_distance || similar_heading(a, b, params)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Partitions targets into groups of target ids. Groups are ordered by their
/// smallest member and members are ascending, independent of input order.
pub fn cluster_targets(paths: &[PredictedPath], params: &ClusterParams) -> Vec<Vec<usize>> {
    let mut sorted: Vec<&PredictedPath> = paths.iter().collect();
    sorted.sort_by_key(|p| p.target_id);
    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if should_merge(sorted[i], sorted[j], params) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    // keep the smaller index as root
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for (i, path) in sorted.iter().enumerate() {
        let r = find(&mut parent, i);
        let slot = *root_slot[r].get_or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(path.target_id);
    }
    groups
}

/// Mean of the current positions of each group's members.
pub fn group_centroids(groups: &[Vec<usize>], paths: &[PredictedPath]) -> Vec<Vector2<f64>> {
    groups
        .iter()
        .map(|g| {
            let sum = g.iter().fold(Vector2::zeros(), |acc, id| {
                let p = paths.iter().find(|p| p.target_id == *id).expect("group member has a path");
                acc + p.start
            });
            sum / g.len() as f64
        })
        .collect()
}

/// Greedy assignment in ascending agent order. Returns the group index of
/// every agent.
pub fn assign_agents(agents: &[AgentState], group_sizes: &[usize], centroids: &[Vector2<f64>]) -> Vec<usize> {
    assert_eq!(group_sizes.len(), centroids.len());
    assert!(!centroids.is_empty(), "at least one group is required");
    let mut claimed = vec![false; centroids.len()];
    let largest = group_sizes
        .iter()
        .enumerate()
        .fold(0, |best, (g, &s)| if s > group_sizes[best] { g } else { best });
    agents
        .iter()
        .map(|a| {
            let here = a.position.xy();
            let nearest = centroids
                .iter()
                .enumerate()
                .filter(|(g, _)| !claimed[*g])
                .map(|(g, c)| (g, (c - here).norm()))
                .fold(None, |best: Option<(usize, f64)>, cand| match best {
                    Some(b) if b.1 <= cand.1 => Some(b),
                    _ => Some(cand),
                });
            match nearest {
                Some((g, _)) => {
                    claimed[g] = true;
                    g
                }
                None => largest,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub groups: Vec<Vec<usize>>,
    pub centroids: Vec<Vector2<f64>>,
    pub agent_to_group: Vec<usize>,
}

impl ClusterAssignment {
    /// Target ids tracked by `agent`.
    pub fn targets_of(&self, agent: usize) -> &[usize] {
        &self.groups[self.agent_to_group[agent]]
    }
}

/// Full clustering pass over a fused estimate bank.
pub fn cluster_and_assign(
    estimates: &[TargetEstimate],
    filter: &FilterParams,
    agents: &[AgentState],
    params: &ClusterParams,
) -> ClusterAssignment {
    let paths = predict_paths(estimates, filter, params.horizon);
    let groups = cluster_targets(&paths, params);
    let centroids = group_centroids(&groups, &paths);
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let agent_to_group = assign_agents(agents, &sizes, &centroids);
    ClusterAssignment {
        groups,
        centroids,
        agent_to_group,
    }
}
