//! Differential checks of the reductions against naive search, plus the
//! budget calibration they need.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Drds, DrdsError, DrdsFromGcds, LprdsFromGcds, NaiveDrds, Vertex};
use crate::gcds::Gcds;

/// Safety factor applied to the largest observed call cost.
pub const BUDGET_FACTOR: u64 = 4;

/// Builds a fresh collector; one per graph.
pub type GcdsFactory<'a> = &'a (dyn Fn() -> Box<dyn Gcds> + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrdsOp {
    Insert(Vertex, Vertex),
    Delete(Vertex, Vertex),
    Query(Vertex, Vertex),
}

/// Mixed update/query sequence over `n` vertices. Deletes always name an
/// existing edge and queries never ask `v ->+ v`.
pub fn random_workload(n: usize, ops: usize, insert_weight: f64, seed: u64) -> Vec<DrdsOp> {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(Vertex, Vertex)> = Vec::new();
    let mut out = Vec::with_capacity(ops);
    let n = n as Vertex;
    for _ in 0..ops {
        let r: f64 = rng.gen();
        let pair = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        };
        if r < insert_weight || (edges.is_empty() && r < insert_weight + 0.2) {
            let (a, b) = if rng.gen_bool(0.05) {
                let a = rng.gen_range(0..n);
                (a, a)
            } else {
                pair(&mut rng)
            };
            edges.push((a, b));
            out.push(DrdsOp::Insert(a, b));
        } else if r < insert_weight + 0.2 {
            let (a, b) = edges.swap_remove(rng.gen_range(0..edges.len()));
            out.push(DrdsOp::Delete(a, b));
        } else {
            let (a, b) = pair(&mut rng);
            out.push(DrdsOp::Query(a, b));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Agreement {
    pub graphs: usize,
    pub queries: u64,
    pub agreed: u64,
    /// Queries after which the structure's state hash differed.
    pub impure: u64,
    pub reaches: u64,
}

impl Agreement {
    pub fn is_perfect(&self) -> bool {
        self.agreed == self.queries && self.impure == 0
    }

    fn merge(mut self, o: Agreement) -> Agreement {
        self.graphs += o.graphs;
        self.queries += o.queries;
        self.agreed += o.agreed;
        self.impure += o.impure;
        self.reaches += o.reaches;
        self
    }
}

/// Replay `ops` on `d` and a naive structure side by side.
pub fn compare<D: Drds + ?Sized>(d: &mut D, ops: &[DrdsOp]) -> Result<Agreement, DrdsError> {
    let mut naive = NaiveDrds::new(d.vertex_count());
    let mut rep = Agreement {
        graphs: 1,
        ..Default::default()
    };
    for &op in ops {
        match op {
            DrdsOp::Insert(a, b) => {
                d.insert(a, b)?;
                naive.insert(a, b)?;
            }
            DrdsOp::Delete(a, b) => {
                d.delete(a, b)?;
                naive.delete(a, b)?;
            }
            DrdsOp::Query(a, b) => {
                let h = d.state_hash();
                let got = d.connected(a, b)?;
                let want = naive.connected(a, b)?;
                rep.queries += 1;
                rep.agreed += (got == want) as u64;
                rep.reaches += want as u64;
                rep.impure += (d.state_hash() != h) as u64;
            }
        }
    }
    Ok(rep)
}

/// Budget for [`DrdsFromGcds`]: the largest timed call seen in queries that
/// keep everything reachable, on dense graphs from `seed`, times
/// [`BUDGET_FACTOR`].
pub fn calibrate_drds(make: GcdsFactory, n: usize, seed: u64) -> u64 {
    let mut worst = 0;
    for g in 0..20 {
        let ops = random_workload(n, 10 * n, 0.6, seed.wrapping_add(g));
        let mut r = DrdsFromGcds::new(make(), n, u64::MAX / 4, 1);
        compare(&mut r, &ops).expect("calibration run failed");
        worst = worst.max(r.max_reaches_call());
    }
    BUDGET_FACTOR * worst.max(16)
}

/// Check [`DrdsFromGcds`] over `graphs` random workloads.
pub fn drds_agreement(
    make: GcdsFactory,
    n: usize,
    graphs: usize,
    ops: usize,
    seed: u64,
) -> Result<Agreement, DrdsError> {
    use rayon::prelude::*;
    let budget = calibrate_drds(make, n, seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..graphs)
        .into_par_iter()
        .map(|g| {
            let w = random_workload(n, ops, 0.55, seed.wrapping_add(g as u64));
            let mut r = DrdsFromGcds::new(make(), n, budget, 1);
            compare(&mut r, &w)
        })
        .try_reduce(Agreement::default, |a, b| Ok(a.merge(b)))
}

/// Layered permutation graph: `layers` layers of `width` vertices, vertex
/// `l * width + k`, with a perfect matching between consecutive layers.
#[derive(Debug, Clone)]
pub struct PermutationGraph {
    pub layers: usize,
    pub width: usize,
    /// `perm[l][k]` is the index in layer `l + 1` hit by `(l, k)`.
    pub perm: Vec<Vec<usize>>,
}

impl PermutationGraph {
    pub fn random(layers: usize, width: usize, rng: &mut impl Rng) -> Self {
        use rand::seq::SliceRandom;
        let perm = (0..layers.saturating_sub(1))
            .map(|_| {
                let mut p: Vec<usize> = (0..width).collect();
                p.shuffle(rng);
                p
            })
            .collect();
        Self {
            layers,
            width,
            perm,
        }
    }

    pub fn vertex(&self, layer: usize, k: usize) -> Vertex {
        (layer * self.width + k) as Vertex
    }

    pub fn layer_of(&self) -> Vec<u32> {
        (0..self.layers * self.width)
            .map(|v| (v / self.width) as u32)
            .collect()
    }

    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut e = Vec::new();
        for (l, p) in self.perm.iter().enumerate() {
            for (k, &t) in p.iter().enumerate() {
                e.push((self.vertex(l, k), self.vertex(l + 1, t)));
            }
        }
        e
    }

    /// Swap the targets of two vertices in one layer; returns the deletes
    /// and inserts that carry it out.
    pub fn swap(&mut self, rng: &mut impl Rng) -> Vec<DrdsOp> {
        if self.perm.is_empty() || self.width < 2 {
            return Vec::new();
        }
        let l = rng.gen_range(0..self.perm.len());
        let i = rng.gen_range(0..self.width);
        let mut j = rng.gen_range(0..self.width - 1);
        if j >= i {
            j += 1;
        }
        let (ti, tj) = (self.perm[l][i], self.perm[l][j]);
        let (vi, vj) = (self.vertex(l, i), self.vertex(l, j));
        let (wi, wj) = (self.vertex(l + 1, ti), self.vertex(l + 1, tj));
        self.perm[l].swap(i, j);
        vec![
            DrdsOp::Delete(vi, wi),
            DrdsOp::Delete(vj, wj),
            DrdsOp::Insert(vi, wj),
            DrdsOp::Insert(vj, wi),
        ]
    }

    /// Every query with a first-layer source.
    pub fn all_queries(&self) -> Vec<DrdsOp> {
        let mut q = Vec::new();
        for k in 0..self.width {
            for t in 0..self.layers * self.width {
                q.push(DrdsOp::Query(k as Vertex, t as Vertex));
            }
        }
        q
    }
}

/// Initial build, then `updates` swaps, querying every pair each time.
pub fn permutation_churn(layers: usize, width: usize, updates: usize, seed: u64) -> (Vec<u32>, Vec<DrdsOp>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = PermutationGraph::random(layers, width, &mut rng);
    let mut ops: Vec<DrdsOp> = g.edges().into_iter().map(|(a, b)| DrdsOp::Insert(a, b)).collect();
    ops.extend(g.all_queries());
    for _ in 0..updates {
        ops.extend(g.swap(&mut rng));
        ops.extend(g.all_queries());
    }
    (g.layer_of(), ops)
}

/// Budget for [`LprdsFromGcds`] from clean (non-reaching) queries.
pub fn calibrate_lprds(make: GcdsFactory, layers: usize, width: usize, seed: u64) -> u64 {
    let mut worst = 0;
    for g in 0..5 {
        let (lay, ops) = permutation_churn(layers, width, 10, seed.wrapping_add(g));
        let mut r = LprdsFromGcds::new(make(), lay, u64::MAX / 4, 1);
        compare(&mut r, &ops).expect("calibration run failed");
        worst = worst.max(r.max_clean_call());
    }
    BUDGET_FACTOR * worst.max(16)
}

/// Check [`LprdsFromGcds`] exhaustively on each `(layers, width, updates)`.
pub fn lprds_agreement(
    make: GcdsFactory,
    sizes: &[(usize, usize, usize)],
    seed: u64,
) -> Result<Agreement, DrdsError> {
    use rayon::prelude::*;
    sizes
        .par_iter()
        .map(|&(l, w, updates)| {
            let budget = calibrate_lprds(make, l, w, seed ^ 0x5851_f42d_4c95_7f2d);
            let (lay, ops) = permutation_churn(l, w, updates, seed.wrapping_add((l * 64 + w) as u64));
            let mut r = LprdsFromGcds::new(make(), lay, budget, 1);
            compare(&mut r, &ops)
        })
        .try_reduce(Agreement::default, |a, b| Ok(a.merge(b)))
}

/// Every size up to `max x max` with a few updates, plus `max x max` under
/// `updates` swaps.
pub fn layered_sizes(max: usize, updates: usize) -> Vec<(usize, usize, usize)> {
    let mut v: Vec<_> = (1..=max)
        .flat_map(|l| (1..=max).map(move |w| (l, w, 10)))
        .filter(|&(l, w, _)| (l, w) != (max, max))
        .collect();
    v.push((max, max, updates));
    v
}
