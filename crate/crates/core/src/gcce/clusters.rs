use serde::{Deserialize, Serialize};

use crate::bathgen::BathConfiguration;
use crate::spinham::pair_coupling_dnm;

/// Rule deciding which nuclear pairs are connected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PairCriterion {
    /// Inter-nuclear distance at most this many Å.
    Distance(f64),
    /// Secular coupling `|d_nm|` at least this many Hz.
    Coupling(f64),
}

impl Default for PairCriterion {
    fn default() -> Self {
        PairCriterion::Distance(8.0)
    }
}

impl PairCriterion {
    pub fn connects(&self, bath: &BathConfiguration, n: usize, m: usize) -> bool {
        let a = &bath.sites[n];
        let b = &bath.sites[m];
        let r = a.position - b.position;
        match *self {
            PairCriterion::Distance(cutoff) => r.norm_squared() <= cutoff * cutoff,
            PairCriterion::Coupling(threshold) => pair_coupling_dnm(&r, a.gamma, b.gamma)
                .map(|d| d.abs() >= threshold)
                .unwrap_or(false),
        }
    }
}

/// Clusters up to a given size, each a sorted list of site indices.
///
/// Singletons are all sites; larger clusters are the connected sub-graphs of
/// the pair graph. The empty cluster is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub order: usize,
    pub criterion: PairCriterion,
    /// Clusters grouped by size: `by_size[s - 1]` holds all clusters of size `s`,
    /// sorted lexicographically.
    pub by_size: Vec<Vec<Vec<usize>>>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.by_size.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn of_size(&self, size: usize) -> &[Vec<usize>] {
        if size == 0 || size > self.by_size.len() {
            &[]
        } else {
            &self.by_size[size - 1]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.by_size.iter().flatten()
    }

    pub fn contains(&self, cluster: &[usize]) -> bool {
        self.of_size(cluster.len()).binary_search_by(|c| c.as_slice().cmp(cluster)).is_ok()
    }
}

/// Enumerates all clusters of size `1..=order` in deterministic order.
pub fn enumerate_clusters(bath: &BathConfiguration, order: usize, criterion: PairCriterion) -> ClusterSet {
    let n = bath.sites.len();
    let mut by_size: Vec<Vec<Vec<usize>>> = Vec::new();
    if order == 0 {
        return ClusterSet {
            order,
            criterion,
            by_size,
        };
    }
    by_size.push((0..n).map(|i| vec![i]).collect());
    if order == 1 {
        return ClusterSet {
            order,
            criterion,
            by_size,
        };
    }

    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if criterion.connects(bath, a, b) {
                neighbours[a].push(b);
                neighbours[b].push(a);
                pairs.push(vec![a, b]);
            }
        }
    }
    by_size.push(pairs);

    for _size in 3..=order {
        let mut grown: Vec<Vec<usize>> = Vec::new();
        for cluster in by_size.last().unwrap() {
            for &member in cluster {
                for &next in &neighbours[member] {
                    if cluster.binary_search(&next).is_ok() {
                        continue;
                    }
                    let mut c = cluster.clone();
                    let pos = c.binary_search(&next).unwrap_err();
                    c.insert(pos, next);
                    grown.push(c);
                }
            }
        }
        grown.sort_unstable();
        grown.dedup();
        by_size.push(grown);
    }
    ClusterSet {
        order,
        criterion,
        by_size,
    }
}
