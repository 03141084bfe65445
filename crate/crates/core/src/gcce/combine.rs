//! Inclusion–exclusion product over clusters.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::clusters::{enumerate_clusters, ClusterSet, PairCriterion};
use super::evolve::{ClusterCoherence, ClusterPropagator};
use super::{CoherenceSeries, InitialState, PulseSequence};
use crate::bathgen::BathConfiguration;
use crate::spinham::{electron_eigenbasis, ElectronSystem};
use crate::Result;

/// Subcluster contributions smaller than this in modulus are treated as
/// non-convergent: the enclosing contribution is set to one and the time
/// point flagged.
pub const DENOMINATOR_FLOOR: f64 = 1e-6;

/// Clusters evaluated per parallel batch. Batches are reduced in a fixed
/// order, so results do not depend on the number of worker threads.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcceOptions {
    /// Largest cluster size kept in the expansion.
    pub order: usize,
    pub criterion: PairCriterion,
    /// Initial electron amplitudes on `|E_S⟩, |E_-1⟩, |E_0⟩, |E_1⟩`; the equal
    /// superposition when `None`.
    pub amplitudes: Option<[C64; 4]>,
}

impl Default for GcceOptions {
    fn default() -> Self {
        GcceOptions {
            order: 2,
            criterion: PairCriterion::default(),
            amplitudes: None,
        }
    }
}

impl GcceOptions {
    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }
}

#[derive(Debug, Clone)]
pub struct GcceResult {
    /// `by_order[k]` is the expansion truncated at cluster size `k`.
    pub by_order: Vec<CoherenceSeries>,
    /// Number of non-empty clusters evaluated.
    pub cluster_count: usize,
}

impl GcceResult {
    /// The highest-order result.
    pub fn series(&self) -> &CoherenceSeries {
        self.by_order.last().expect("order 0 is always present")
    }

    pub fn into_series(mut self) -> CoherenceSeries {
        self.by_order.pop().expect("order 0 is always present")
    }
}

struct Tilde {
    values: ClusterCoherence,
    flagged: Vec<bool>,
}

/// `L̃_C = L_C / (L̃_∅ Π L̃_C')` over proper non-empty subsets `C'` present
/// in `stored`.
fn tilde(
    cluster: &[usize],
    full: ClusterCoherence,
    empty: &ClusterCoherence,
    stored: &HashMap<Vec<usize>, ClusterCoherence>,
) -> Tilde {
    let n = full[0].len();
    let s = cluster.len();
    let mut subsets: Vec<&ClusterCoherence> = Vec::new();
    for mask in 1..(1u32 << s) - 1 {
        let sub: Vec<usize> = (0..s).filter(|b| mask >> b & 1 == 1).map(|b| cluster[b]).collect();
        if let Some(v) = stored.get(&sub) {
            subsets.push(v);
        }
    }
    let mut values = full;
    let mut flagged = vec![false; n];
    for i in 0..n {
        for p in 0..6 {
            let mut denom = empty[p][i];
            let mut bad = denom.norm() < DENOMINATOR_FLOOR;
            for sub in &subsets {
                let z = sub[p][i];
                bad |= z.norm() < DENOMINATOR_FLOOR;
                denom *= z;
            }
            if bad || denom.norm() == 0.0 {
                values[p][i] = C64::from(1.0);
                flagged[i] = true;
            } else {
                values[p][i] /= denom;
            }
        }
    }
    Tilde { values, flagged }
}

/// Runs the expansion, pulling each cluster's full coherence from `evaluate`.
fn expand<F>(set: &ClusterSet, times: &[f64], empty: ClusterCoherence, evaluate: F) -> Result<GcceResult>
where
    F: Fn(&[usize]) -> Result<ClusterCoherence> + Sync,
{
    let n = times.len();
    let mut acc = empty.clone();
    let mut flagged = vec![false; n];
    let mut by_order = vec![CoherenceSeries::from_complex(times.to_vec(), acc.clone(), flagged.clone())];
    let mut stored: HashMap<Vec<usize>, ClusterCoherence> = HashMap::new();
    let mut count = 0;

    for size in 1..=set.order {
        let keep = size < set.order;
        let mut level_store: Vec<(Vec<usize>, ClusterCoherence)> = Vec::new();
        for chunk in set.of_size(size).chunks(CHUNK) {
            let results: Vec<Result<Tilde>> = chunk
                .par_iter()
                .map(|c| Ok(tilde(c, evaluate(c)?, &empty, &stored)))
                .collect();
            for (cluster, result) in chunk.iter().zip(results) {
                let t = result?;
                for p in 0..6 {
                    for i in 0..n {
                        acc[p][i] *= t.values[p][i];
                    }
                }
                for (f, g) in flagged.iter_mut().zip(&t.flagged) {
                    *f |= *g;
                }
                if keep {
                    level_store.push((cluster.clone(), t.values));
                }
                count += 1;
            }
        }
        stored.extend(level_store);
        by_order.push(CoherenceSeries::from_complex(times.to_vec(), acc.clone(), flagged.clone()));
    }
    Ok(GcceResult {
        by_order,
        cluster_count: count,
    })
}

/// Combines precomputed cluster coherences. `contributions` must hold the
/// full coherence `L_C` of every cluster in `set`; `empty` is `L_∅`.
pub fn cce_combine(
    contributions: &HashMap<Vec<usize>, ClusterCoherence>,
    empty: &ClusterCoherence,
    set: &ClusterSet,
    times: &[f64],
) -> Result<CoherenceSeries> {
    let result = expand(set, times, empty.clone(), |c| {
        contributions
            .get(c)
            .cloned()
            .ok_or_else(|| crate::Error::InvalidParameter(format!("missing contribution for cluster {c:?}")))
    })?;
    Ok(result.into_series())
}

/// Full gCCE evaluation for one bath configuration.
pub fn gcce_coherence(
    sys: &ElectronSystem,
    bath: &BathConfiguration,
    seq: PulseSequence,
    times: &[f64],
    opts: &GcceOptions,
) -> Result<GcceResult> {
    let basis = electron_eigenbasis(sys)?;
    let psi = match opts.amplitudes {
        Some(a) => InitialState::from_amplitudes(&basis, a),
        None => InitialState::equal_superposition(&basis),
    };
    psi.normalizations(&basis)?;
    let set = enumerate_clusters(bath, opts.order, opts.criterion);
    let empty = ClusterPropagator::new(sys, bath, &[], &basis, &psi)?.coherences(seq, times);
    expand(&set, times, empty, |c| {
        Ok(ClusterPropagator::new(sys, bath, c, &basis, &psi)?.coherences(seq, times))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathgen::{BathSpec, NuclearSite};
    use crate::gcce::{evolve_cluster_coherence, linear_times};
    use crate::Vec3;

    fn bath_of(positions: &[[f64; 3]], sys: &ElectronSystem) -> BathConfiguration {
        let sites = positions
            .iter()
            .map(|p| NuclearSite::proton(Vec3::new(p[0], p[1], p[2])))
            .collect();
        BathConfiguration::from_sites(sites, BathSpec::default(), sys.electron_positions)
    }

    #[test]
    fn single_proton_order_one_is_that_cluster() {
        let sys = ElectronSystem::new(5.0, 0.0, 10e9, 1.0);
        let bath = bath_of(&[[6.0, 2.0, 1.0]], &sys);
        let times = linear_times(2e-5, 21);
        let opts = GcceOptions::default().with_order(1);
        for seq in [PulseSequence::Fid, PulseSequence::Hahn] {
            let l = gcce_coherence(&sys, &bath, seq, &times, &opts).unwrap().into_series();
            let direct = evolve_cluster_coherence(&sys, &bath, &[0], seq, &times, None).unwrap();
            for p in 0..6 {
                for i in 0..times.len() {
                    assert!((l.complex.as_ref().unwrap()[p][i] - direct[p][i]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn distant_pair_factorizes() {
        let sys = ElectronSystem::new(5.0, 0.0, 10e9, 1.0);
        let bath = bath_of(&[[6.0, 2.0, 1.0], [-30.0, 45.0, 10.0]], &sys);
        let times = linear_times(5e-5, 11);
        let opts = GcceOptions {
            order: 2,
            criterion: PairCriterion::Distance(100.0),
            amplitudes: None,
        };
        for seq in [PulseSequence::Fid, PulseSequence::Hahn] {
            let r = gcce_coherence(&sys, &bath, seq, &times, &opts).unwrap();
            assert_eq!(r.cluster_count, 3);
            let o1 = r.by_order[1].complex.as_ref().unwrap();
            let o2 = r.by_order[2].complex.as_ref().unwrap();
            for p in 0..6 {
                for i in 0..times.len() {
                    assert!((o1[p][i] - o2[p][i]).norm() < 1e-6, "{seq:?} pair {p} t {i}");
                }
            }
        }
    }

    #[test]
    fn precomputed_combine_matches_streaming() {
        let sys = ElectronSystem::new(5.0, 0.4, 10e9, 1.0);
        let bath = bath_of(&[[6.0, 2.0, 1.0], [7.5, 0.0, 3.0], [4.0, 4.0, 4.0]], &sys);
        let times = linear_times(5e-5, 11);
        let opts = GcceOptions::default().with_order(3);
        let seq = PulseSequence::Hahn;
        let streaming = gcce_coherence(&sys, &bath, seq, &times, &opts).unwrap().into_series();
        let set = enumerate_clusters(&bath, 3, opts.criterion);
        let mut map = HashMap::new();
        for c in set.iter() {
            map.insert(c.clone(), evolve_cluster_coherence(&sys, &bath, c, seq, &times, None).unwrap());
        }
        let empty = evolve_cluster_coherence(&sys, &bath, &[], seq, &times, None).unwrap();
        let combined = cce_combine(&map, &empty, &set, &times).unwrap();
        assert_eq!(combined.complex, streaming.complex);
    }
}
