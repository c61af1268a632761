//! From partition to experiment: cluster-id perturbation, salted hashing
//! of clusters into buckets, arm assignment, and the within-group share
//! ratio (WGSR) spillover metric.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::clustering::Partition;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::{mix2, mix64, seeded_rng};

/// Reserved namespace offset for singleton cluster ids created by
/// [`perturb_cids`], so they cannot collide with algorithm-assigned ids.
pub const SINGLETON_NAMESPACE: u64 = 1 << 48;

/// Experiment arm of a bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Treatment,
    Control,
    /// Buckets in neither configured arm.
    Holdout,
}

/// Cluster-to-bucket-to-arm mapping for one randomization.
///
/// `bucket = mix64(cluster_id ^ mix64(salt)) mod B`: a fixed public
/// avalanche hash, stable across platforms and versions, so assignments
/// are a pure function of (cluster id, salt, B).
#[derive(Debug, Clone)]
pub struct Assignment {
    bucket_of_node: Vec<u32>,
    arm_of_bucket: Vec<Arm>,
    buckets: u32,
    salt: u64,
    treat_buckets: Vec<u32>,
    ctrl_buckets: Vec<u32>,
}

/// Hash a cluster id into a bucket.
#[inline]
pub fn bucket_of_cluster(cluster_id: u64, salt: u64, buckets: u32) -> u32 {
    (mix64(cluster_id ^ mix64(salt)) % buckets as u64) as u32
}

/// Hash clusters into `buckets` buckets and mark the given bucket lists
/// as treatment and control arms. Nodes inherit their cluster's bucket.
pub fn assign(
    p: &Partition,
    buckets: u32,
    treat_buckets: &[u32],
    ctrl_buckets: &[u32],
    salt: u64,
) -> Result<Assignment> {
    if buckets == 0 {
        return Err(Error::InvalidParameter("bucket count must be >= 1".to_string()));
    }
    for &b in treat_buckets.iter().chain(ctrl_buckets) {
        if b >= buckets {
            return Err(Error::InvalidParameter(format!(
                "bucket {b} out of range 0..{buckets}"
            )));
        }
    }
    for &b in treat_buckets {
        if ctrl_buckets.contains(&b) {
            return Err(Error::InvalidParameter(format!(
                "bucket {b} appears in both treatment and control lists"
            )));
        }
    }

    let mut arm_of_bucket = vec![Arm::Holdout; buckets as usize];
    for &b in treat_buckets {
        arm_of_bucket[b as usize] = Arm::Treatment;
    }
    for &b in ctrl_buckets {
        arm_of_bucket[b as usize] = Arm::Control;
    }

    let bucket_of_node = p
        .assignments()
        .iter()
        .map(|&c| bucket_of_cluster(c, salt, buckets))
        .collect();

    Ok(Assignment {
        bucket_of_node,
        arm_of_bucket,
        buckets,
        salt,
        treat_buckets: treat_buckets.to_vec(),
        ctrl_buckets: ctrl_buckets.to_vec(),
    })
}

impl Assignment {
    pub fn bucket_of(&self, node: usize) -> u32 {
        self.bucket_of_node[node]
    }

    pub fn arm_of_node(&self, node: usize) -> Arm {
        self.arm_of_bucket[self.bucket_of_node[node] as usize]
    }

    pub fn arm_of_bucket(&self, bucket: u32) -> Arm {
        self.arm_of_bucket[bucket as usize]
    }

    pub fn buckets(&self) -> u32 {
        self.buckets
    }

    pub fn salt(&self) -> u64 {
        self.salt
    }

    pub fn n(&self) -> usize {
        self.bucket_of_node.len()
    }

    /// Node indices in the given arm.
    pub fn nodes_in(&self, arm: Arm) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.arm_of_node(i) == arm).collect()
    }

    /// Serializable manifest: bucket count, salt, arm bucket lists, and a
    /// reference to the partition file the assignment was derived from.
    pub fn manifest(&self, partition_file: &str) -> AssignmentManifest {
        AssignmentManifest {
            buckets: self.buckets,
            salt: self.salt,
            treat_buckets: self.treat_buckets.clone(),
            ctrl_buckets: self.ctrl_buckets.clone(),
            partition_file: partition_file.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentManifest {
    pub buckets: u32,
    pub salt: u64,
    pub treat_buckets: Vec<u32>,
    pub ctrl_buckets: Vec<u32>,
    pub partition_file: String,
}

/// Reset a seeded uniform sample of ⌊r·n⌋ nodes to singleton clusters
/// (cluster id = external node id plus the reserved namespace offset);
/// all other assignments are unchanged.
pub fn perturb_cids(g: &WeightedGraph, p: &Partition, r: f64, seed: u64) -> Result<Partition> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "perturbation ratio must be in [0, 1], got {r}"
        )));
    }
    let n = p.n();
    let count = (r * n as f64).floor() as usize;
    let mut cluster_of = p.assignments().to_vec();
    if count > 0 {
        let mut rng = seeded_rng(mix2(seed, 0x7065_7274)); // "pert"
        let mut nodes: Vec<usize> = (0..n).collect();
        let (chosen, _) = nodes.partial_shuffle(&mut rng, count);
        for &i in chosen.iter() {
            cluster_of[i] = SINGLETON_NAMESPACE + g.node_id(i);
        }
    }
    Partition::new(g, cluster_of)
}

/// Where a share event log came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventSource {
    GraphDerived,
    FileLoaded,
}

/// Directed share events.
#[derive(Debug, Clone)]
pub struct ShareEventLog {
    /// (source, destination) internal node indices.
    events: Vec<(u32, u32)>,
    source: EventSource,
}

impl ShareEventLog {
    pub fn new(events: Vec<(u32, u32)>) -> Self {
        ShareEventLog {
            events,
            source: EventSource::GraphDerived,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[(u32, u32)] {
        &self.events
    }

    pub fn source(&self) -> EventSource {
        self.source
    }
}

/// Emit both directions of every edge as share events, matching the
/// bidirectional-friendship reading of the interaction graph.
pub fn graph_events(g: &WeightedGraph) -> ShareEventLog {
    let mut events = Vec::with_capacity(2 * g.edge_count());
    for (i, j, _) in g.edges() {
        events.push((i as u32, j as u32));
        events.push((j as u32, i as u32));
    }
    ShareEventLog::new(events)
}

/// Load directed share events from a text file of `src dst [count]`
/// lines (`#` comments allowed); `count` repeats the event. Endpoints
/// must exist in the graph and differ.
pub fn load_event_log(path: &std::path::Path, g: &WeightedGraph) -> Result<ShareEventLog> {
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected `src dst [count]`, got {} fields", fields.len()),
            ));
        }
        let parse_node = |s: &str| -> Result<u32> {
            let id: u64 = s
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("invalid node id `{s}`")))?;
            let idx = g.index_of(id).ok_or_else(|| {
                Error::parse(path, lineno, format!("node {id} not present in graph"))
            })?;
            Ok(idx as u32)
        };
        let src = parse_node(fields[0])?;
        let dst = parse_node(fields[1])?;
        if src == dst {
            return Err(Error::parse(path, lineno, "share event with src == dst"));
        }
        let count: u64 = if fields.len() == 3 {
            fields[2]
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("invalid count `{}`", fields[2])))?
        } else {
            1
        };
        for _ in 0..count {
            events.push((src, dst));
        }
    }
    Ok(ShareEventLog {
        events,
        source: EventSource::FileLoaded,
    })
}

/// Within-group share ratio for group `g_arm` against `g_prime_arm`:
/// the fraction of events from `g_arm` landing back inside `g_arm`,
/// counted over events landing in either group. `None` when no event
/// qualifies for the denominator.
pub fn wgsr(events: &ShareEventLog, a: &Assignment, g_arm: Arm, g_prime_arm: Arm) -> Option<f64> {
    let mut num = 0u64;
    let mut den = 0u64;
    for &(u, v) in events.events() {
        if a.arm_of_node(u as usize) != g_arm {
            continue;
        }
        let dst = a.arm_of_node(v as usize);
        if dst == g_arm {
            num += 1;
            den += 1;
        } else if dst == g_prime_arm {
            den += 1;
        }
    }
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}
