//! Cross-action nearest-neighbor pairing.
//!
//! For every example `i`, find the example with the opposite action whose
//! context minimizes the Euclidean distance. Distances are compared as exact
//! sums of squares (no square root, no epsilon); bitwise-equal squared
//! distances count as ties and one partner is drawn uniformly at random from
//! the tied set.
//!
//! Tie-break randomness is keyed per row: row `i` uses `rng.child(i)`, so a
//! parallel and a serial sweep produce the same pairing, and so do the brute
//! force and kd-tree paths (both tie-break over the candidate set sorted by
//! index).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{BinaryAction, Dataset};
use crate::rng::SeededRng;

/// The map `i -> partner(i)` of cross-action nearest neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedIndex {
    partner: Vec<usize>,
}

impl PairedIndex {
    pub fn partner(&self, i: usize) -> usize {
        self.partner[i]
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.partner
    }

    pub fn from_partners(partner: Vec<usize>) -> Self {
        Self { partner }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairingError {
    /// One of the action classes has no examples, so no example there can be
    /// matched.
    EmptyActionClass { action: BinaryAction },
}

impl fmt::Display for PairingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairingError::EmptyActionClass { action } => {
                write!(f, "cannot pair: action class {action} is empty")
            }
        }
    }
}

impl core::error::Error for PairingError {}

fn check_classes(ds: &Dataset) -> Result<(), PairingError> {
    let counts = ds.action_counts();
    for a in [BinaryAction::Zero, BinaryAction::One] {
        if counts[a.index()] == 0 {
            return Err(PairingError::EmptyActionClass { action: a });
        }
    }
    Ok(())
}

/// Pick one partner from `ties` (ascending candidate indices) for row `i`.
fn break_tie(ties: &[usize], rng: &SeededRng, i: usize) -> usize {
    if ties.len() == 1 {
        ties[0]
    } else {
        let mut row_rng = rng.child(i as u64);
        ties[row_rng.below(ties.len())]
    }
}

/// Exhaustive O(n^2) pairing; the reference the accelerated path must match.
pub fn pair_brute_force(ds: &Dataset, rng: &SeededRng) -> Result<PairedIndex, PairingError> {
    check_classes(ds)?;
    let n = ds.len();
    let mut partner = Vec::with_capacity(n);
    let mut ties: Vec<usize> = Vec::new();
    for i in 0..n {
        let ex = &ds.examples[i];
        let mut best = f64::INFINITY;
        ties.clear();
        for (j, other) in ds.examples.iter().enumerate() {
            if other.action == ex.action {
                continue;
            }
            let d2 = ex.context.dist2(&other.context);
            if d2 < best {
                best = d2;
                ties.clear();
                ties.push(j);
            } else if d2 == best {
                ties.push(j);
            }
        }
        partner.push(break_tie(&ties, rng, i));
    }
    Ok(PairedIndex { partner })
}

/// A kd-tree over a fixed set of dataset rows, for exact nearest-neighbor
/// queries that also report every exact tie.
struct KdTree<'a> {
    ds: &'a Dataset,
    nodes: Vec<KdNode>,
    root: Option<usize>,
}

struct KdNode {
    /// Dataset row index of the point stored at this node.
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

impl<'a> KdTree<'a> {
    fn build(ds: &'a Dataset, mut rows: Vec<usize>) -> Self {
        let mut tree = KdTree {
            ds,
            nodes: Vec::with_capacity(rows.len()),
            root: None,
        };
        let len = rows.len();
        tree.root = tree.build_rec(&mut rows, 0, len, 0);
        tree
    }

    fn build_rec(&mut self, rows: &mut [usize], lo: usize, hi: usize, depth: usize) -> Option<usize> {
        if lo >= hi {
            return None;
        }
        let dim = self.ds.dim.max(1);
        let axis = depth % dim;
        let mid = (lo + hi) / 2;
        rows[lo..hi].sort_unstable_by(|&a, &b| {
            let va = self.ds.examples[a].context.features[axis];
            let vb = self.ds.examples[b].context.features[axis];
            va.partial_cmp(&vb).unwrap().then(a.cmp(&b))
        });
        let point = rows[mid];
        let id = self.nodes.len();
        self.nodes.push(KdNode {
            point,
            axis,
            left: None,
            right: None,
        });
        let left = self.build_rec(rows, lo, mid, depth + 1);
        let right = self.build_rec(rows, mid + 1, hi, depth + 1);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        Some(id)
    }

    /// All stored rows at the minimum squared distance from `query`.
    /// `best` starts at infinity; `ties` comes back unsorted.
    fn nearest_ties(&self, query: &[f64], ties: &mut Vec<usize>) {
        ties.clear();
        let mut best = f64::INFINITY;
        if let Some(root) = self.root {
            self.search(root, query, &mut best, ties);
        }
    }

    fn search(&self, node_id: usize, query: &[f64], best: &mut f64, ties: &mut Vec<usize>) {
        let node = &self.nodes[node_id];
        let point = self.ds.examples[node.point].context.as_slice();
        let d2: f64 = query
            .iter()
            .zip(point)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d2 < *best {
            *best = d2;
            ties.clear();
            ties.push(node.point);
        } else if d2 == *best {
            ties.push(node.point);
        }
        let diff = query[node.axis] - point[node.axis];
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.search(n, query, best, ties);
        }
        // The far side can still hold an exact tie, so prune on strict >.
        if let Some(f) = far {
            if diff * diff <= *best {
                self.search(f, query, best, ties);
            }
        }
    }
}

/// Same contract and same seeded results as [`pair_brute_force`], via one
/// kd-tree per action class.
pub fn pair_accelerated(ds: &Dataset, rng: &SeededRng) -> Result<PairedIndex, PairingError> {
    check_classes(ds)?;
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, ex) in ds.examples.iter().enumerate() {
        by_class[ex.action.index()].push(i);
    }
    let trees = [
        KdTree::build(ds, by_class[0].clone()),
        KdTree::build(ds, by_class[1].clone()),
    ];
    let n = ds.len();
    let mut partner = vec![0usize; n];
    let mut ties: Vec<usize> = Vec::new();
    for i in 0..n {
        let ex = &ds.examples[i];
        let tree = &trees[ex.action.other().index()];
        tree.nearest_ties(ex.context.as_slice(), &mut ties);
        ties.sort_unstable();
        partner[i] = break_tie(&ties, rng, i);
    }
    Ok(PairedIndex { partner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Context, LabeledExample};
    use alloc::vec;

    fn ds_1d(points: &[(f64, usize)]) -> Dataset {
        Dataset::from_examples(
            1,
            points
                .iter()
                .map(|&(w, a)| LabeledExample {
                    context: Context::new(vec![w]),
                    action: BinaryAction::from_index(a).unwrap(),
                    outcome: 0.0,
                })
                .collect(),
        )
    }

    #[test]
    fn closer_opposite_point_wins() {
        let ds = ds_1d(&[(0.0, 1), (1.0, 0), (3.0, 0)]);
        let pairs = pair_brute_force(&ds, &SeededRng::new(0)).unwrap();
        assert_eq!(pairs.partner(0), 1);
    }

    #[test]
    fn two_points_pair_each_other() {
        let ds = ds_1d(&[(0.0, 0), (5.0, 1)]);
        for pairs in [
            pair_brute_force(&ds, &SeededRng::new(0)).unwrap(),
            pair_accelerated(&ds, &SeededRng::new(0)).unwrap(),
        ] {
            assert_eq!(pairs.as_slice(), &[1, 0]);
        }
    }

    #[test]
    fn empty_class_is_an_error() {
        let ds = ds_1d(&[(0.0, 1), (1.0, 1)]);
        assert_eq!(
            pair_brute_force(&ds, &SeededRng::new(0)).unwrap_err(),
            PairingError::EmptyActionClass {
                action: BinaryAction::Zero
            }
        );
    }

    #[test]
    fn exact_ties_split_evenly_across_seeds() {
        let ds = ds_1d(&[(0.0, 1), (1.0, 0), (-1.0, 0)]);
        let mut hits = [0usize; 2];
        for seed in 0..1000 {
            let pairs = pair_brute_force(&ds, &SeededRng::new(seed)).unwrap();
            match pairs.partner(0) {
                1 => hits[0] += 1,
                2 => hits[1] += 1,
                other => panic!("unexpected partner {other}"),
            }
        }
        let freq = hits[0] as f64 / 1000.0;
        assert!((freq - 0.5).abs() <= 0.05, "freq {freq}");
    }

    #[test]
    fn duplicate_contexts_pair_at_distance_zero() {
        let ds = ds_1d(&[(2.0, 0), (2.0, 1), (9.0, 0)]);
        let pairs = pair_accelerated(&ds, &SeededRng::new(4)).unwrap();
        assert_eq!(pairs.partner(0), 1);
        assert_eq!(pairs.partner(1), 0);
        let d = ds.examples[0].context.dist2(&ds.examples[pairs.partner(0)].context);
        assert_eq!(d, 0.0);
    }

    fn random_ds(rng: &mut SeededRng, n: usize, d: usize, grid: bool) -> Dataset {
        // `grid` quantizes coordinates so exact ties actually occur.
        let examples = (0..n)
            .map(|i| {
                let features = (0..d)
                    .map(|_| {
                        if grid {
                            (rng.below(4) as f64) * 0.5
                        } else {
                            rng.uniform(-1.0, 1.0)
                        }
                    })
                    .collect();
                LabeledExample {
                    context: Context::new(features),
                    action: BinaryAction::from_index(if i < 2 { i } else { rng.below(2) })
                        .unwrap(),
                    outcome: 0.0,
                }
            })
            .collect();
        Dataset::from_examples(d, examples)
    }

    #[test]
    fn accelerated_matches_brute_force_including_ties() {
        let meta = SeededRng::new(77);
        for case in 0..100u64 {
            let mut rng = meta.child(case);
            let n = 3 + rng.below(60);
            let d = 1 + rng.below(5);
            let grid = case % 2 == 0;
            let ds = random_ds(&mut rng, n, d, grid);
            let seed_rng = SeededRng::new(case);
            let bf = pair_brute_force(&ds, &seed_rng).unwrap();
            let acc = pair_accelerated(&ds, &seed_rng).unwrap();
            assert_eq!(bf, acc, "case {case} n={n} d={d} grid={grid}");
        }
    }

    #[test]
    fn pairing_respects_invariants() {
        let mut rng = SeededRng::new(5);
        let ds = random_ds(&mut rng, 200, 5, false);
        let pairs = pair_brute_force(&ds, &SeededRng::new(1)).unwrap();
        for i in 0..ds.len() {
            let p = pairs.partner(i);
            assert_ne!(p, i);
            assert_ne!(ds.examples[p].action, ds.examples[i].action);
            // partner attains the minimum over the opposite class
            let best = ds
                .examples
                .iter()
                .filter(|e| e.action != ds.examples[i].action)
                .map(|e| ds.examples[i].context.dist2(&e.context))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(ds.examples[i].context.dist2(&ds.examples[p].context), best);
        }
    }
}
