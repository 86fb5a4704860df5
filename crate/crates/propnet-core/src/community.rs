//! Modularity clustering and partition comparison.
//!
//! Louvain here is the standard two-phase greedy scheme: local moving until
//! no gain, then aggregation, repeated to a fixpoint. Node visit order is
//! shuffled by a seeded PRNG because the result is order-dependent; with a
//! fixed seed every run is identical. Directed graphs are symmetrized
//! (`w'(u,v) = w(u,v) + w(v,u)`) by the caller before clustering.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node-to-community assignment with community ids dense in `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub modularity: f64,
    pub sizes: Vec<usize>,
}

impl Partition {
    pub fn community_count(&self) -> usize {
        self.sizes.len()
    }

    /// Community member index sets, by community id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.sizes.len()];
        for (node, &c) in self.assignment.iter().enumerate() {
            members[c].push(node);
        }
        members
    }

    /// Community ids ranked by size descending, ties to the smaller id.
    pub fn communities_by_size(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.sizes.len()).collect();
        order.sort_by_key(|&c| (std::cmp::Reverse(self.sizes[c]), c));
        order
    }
}

/// Renumber labels to dense 0..k by first occurrence in node order.
fn canonicalize(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut dense = Vec::with_capacity(labels.len());
    for &label in labels {
        let next = remap.len();
        let id = *remap.entry(label).or_insert(next);
        dense.push(id);
    }
    let mut sizes = vec![0usize; remap.len()];
    for &c in &dense {
        sizes[c] += 1;
    }
    (dense, sizes)
}

fn total_weight(adj: &[Vec<(usize, f64)>]) -> f64 {
    adj.iter().flatten().map(|&(_, w)| w).sum::<f64>() / 2.0
}

/// Newman-Girvan weighted modularity of an assignment over a symmetric
/// adjacency (both edge directions listed, no self-loops).
///
/// Errors on zero total weight, where the null model is undefined.
pub fn modularity(adj: &[Vec<(usize, f64)>], assignment: &[usize]) -> Result<f64> {
    assert_eq!(adj.len(), assignment.len(), "assignment must cover every node");
    let m = total_weight(adj);
    if m <= 0.0 {
        return Err(Error::UndefinedModularity);
    }
    let k = assignment.iter().max().map_or(0, |&c| c + 1);
    let mut internal = 0.0; // sum of A_ij over ordered pairs in the same community
    let mut comm_degree = vec![0.0; k];
    for (u, edges) in adj.iter().enumerate() {
        for &(v, w) in edges {
            comm_degree[assignment[u]] += w;
            if assignment[u] == assignment[v] {
                internal += w;
            }
        }
    }
    let two_m = 2.0 * m;
    let expected: f64 = comm_degree.iter().map(|&d| (d / two_m) * (d / two_m)).sum();
    Ok(internal / two_m - expected)
}

// Aggregated graph at one Louvain level. Self weights hold community-
// internal edge mass (counted once); they shift every move's gain equally
// and only matter for degrees and the modularity bookkeeping.
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
}

impl LevelGraph {
    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn degrees(&self) -> Vec<f64> {
        self.adj
            .iter()
            .zip(&self.self_w)
            .map(|(edges, &s)| edges.iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * s)
            .collect()
    }

    fn total_weight(&self) -> f64 {
        total_weight(&self.adj) + self.self_w.iter().sum::<f64>()
    }
}

// One local-moving phase. Returns the (non-canonical) community labels and
// whether any node moved.
fn local_moving(level: &LevelGraph, order: &[usize]) -> (Vec<usize>, bool) {
    let n = level.node_count();
    let m = level.total_weight();
    let degrees = level.degrees();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut comm_total = degrees.clone();
    let mut moved_any = false;

    loop {
        let mut moved = false;
        for &node in order {
            let old = comm[node];
            let k_i = degrees[node];
            comm_total[old] -= k_i;

            // Weight from `node` into each neighboring community.
            let mut weight_to: BTreeMap<usize, f64> = BTreeMap::new();
            weight_to.insert(old, 0.0);
            for &(v, w) in &level.adj[node] {
                *weight_to.entry(comm[v]).or_insert(0.0) += w;
            }

            let gain = |c: usize, k_in: f64| k_in - comm_total[c] * k_i / (2.0 * m);
            let mut best = old;
            let mut best_gain = gain(old, weight_to[&old]);
            for (&c, &k_in) in &weight_to {
                let g = gain(c, k_in);
                if g > best_gain {
                    best = c;
                    best_gain = g;
                }
            }

            comm_total[best] += k_i;
            if best != old {
                comm[node] = best;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    (comm, moved_any)
}

// Contract communities into single nodes; returns the aggregated graph and
// the dense community labels used as new node indices.
fn aggregate(level: &LevelGraph, comm: &[usize]) -> (LevelGraph, Vec<usize>) {
    let (dense, sizes) = canonicalize(comm);
    let k = sizes.len();
    let mut self_w = vec![0.0; k];
    let mut between: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (node, &s) in level.self_w.iter().enumerate() {
        self_w[dense[node]] += s;
    }
    for (u, edges) in level.adj.iter().enumerate() {
        for &(v, w) in edges {
            if u >= v {
                continue; // each undirected edge once
            }
            let (cu, cv) = (dense[u], dense[v]);
            if cu == cv {
                self_w[cu] += w;
            } else {
                let key = (cu.min(cv), cu.max(cv));
                *between.entry(key).or_insert(0.0) += w;
            }
        }
    }
    let mut adj = vec![Vec::new(); k];
    for (&(a, b), &w) in &between {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    for list in &mut adj {
        list.sort_by_key(|&(j, _)| j);
    }
    (LevelGraph { adj, self_w }, dense)
}

/// Louvain clustering over a symmetric adjacency. The returned modularity
/// is recomputed from the final assignment (0 for a zero-weight graph,
/// where every node stays in its own community).
pub fn louvain(adj: &[Vec<(usize, f64)>], seed: u64) -> Partition {
    louvain_with_trace(adj, seed).0
}

/// Louvain plus the modularity of the expanded assignment after each level,
/// for monotonicity checks.
pub fn louvain_with_trace(adj: &[Vec<(usize, f64)>], seed: u64) -> (Partition, Vec<f64>) {
    let n = adj.len();
    if n == 0 || total_weight(adj) <= 0.0 {
        return (
            Partition {
                assignment: (0..n).collect(),
                modularity: 0.0,
                sizes: vec![1; n],
            },
            Vec::new(),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = LevelGraph {
        adj: adj.to_vec(),
        self_w: vec![0.0; n],
    };
    // original node -> current level node
    let mut node_to_level: Vec<usize> = (0..n).collect();
    let mut trace = Vec::new();

    loop {
        let mut order: Vec<usize> = (0..level.node_count()).collect();
        order.shuffle(&mut rng);
        let (comm, moved) = local_moving(&level, &order);
        let (next, dense) = aggregate(&level, &comm);
        for slot in node_to_level.iter_mut() {
            *slot = dense[*slot];
        }
        trace.push(
            modularity(adj, &node_to_level).expect("non-zero weight checked above"),
        );
        let compressed = next.node_count() < level.node_count();
        level = next;
        if !moved || !compressed {
            break;
        }
    }

    let (assignment, sizes) = canonicalize(&node_to_level);
    let q = modularity(adj, &assignment).expect("non-zero weight checked above");
    (
        Partition {
            assignment,
            modularity: q,
            sizes,
        },
        trace,
    )
}

/// YES/NO/UNK stance of a user, from the sign of `p_u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserClass {
    Yes,
    No,
    Unk,
}

impl UserClass {
    pub fn from_polarization(p: Option<f64>) -> UserClass {
        match p {
            Some(p) if p > 0.0 => UserClass::Yes,
            Some(p) if p < 0.0 => UserClass::No,
            _ => UserClass::Unk,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            UserClass::Yes => "YES",
            UserClass::No => "NO",
            UserClass::Unk => "UNK",
        }
    }
}

/// Per-community YES/NO counts and the imbalance score
/// `p_c = (Y_c - N_c) / (Y_c + N_c)`, unset when the community has no
/// classified users.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityPolarity {
    pub yes: usize,
    pub no: usize,
    pub p_c: Option<f64>,
}

pub fn cluster_polarization(partition: &Partition, classes: &[UserClass]) -> Vec<CommunityPolarity> {
    assert_eq!(partition.assignment.len(), classes.len());
    let mut out = vec![
        CommunityPolarity {
            yes: 0,
            no: 0,
            p_c: None
        };
        partition.community_count()
    ];
    for (&c, &class) in partition.assignment.iter().zip(classes) {
        match class {
            UserClass::Yes => out[c].yes += 1,
            UserClass::No => out[c].no += 1,
            UserClass::Unk => {}
        }
    }
    for entry in &mut out {
        let total = entry.yes + entry.no;
        if total > 0 {
            entry.p_c = Some((entry.yes as f64 - entry.no as f64) / total as f64);
        }
    }
    out
}

/// Community sizes sorted descending.
pub fn size_distribution(partition: &Partition) -> Vec<usize> {
    let mut sizes = partition.sizes.clone();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

// ln(x!) table for the hypergeometric terms.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    for i in 1..=n {
        table[i] = table[i - 1] + (i as f64).ln();
    }
    table
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Adjusted Mutual Information of two label vectors over the same nodes,
/// with the expected MI taken under the permutation (hypergeometric) model:
/// `AMI = (MI - E[MI]) / (mean(H1, H2) - E[MI])`.
///
/// 1 for identical partitions, 0 in expectation for unrelated ones, may be
/// negative. When both partitions have zero entropy the ratio degenerates;
/// by convention that case scores 1 if the partitions are equal, else 0.
pub fn ami(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Data(format!(
            "ami: partitions cover {} vs {} nodes",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Data(format!("ami: need at least 2 common nodes, got {n}")));
    }

    let mut contingency: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *contingency.entry((x, y)).or_insert(0) += 1;
    }
    let mut row_sums: BTreeMap<usize, usize> = BTreeMap::new();
    let mut col_sums: BTreeMap<usize, usize> = BTreeMap::new();
    for (&(x, y), &c) in &contingency {
        *row_sums.entry(x).or_insert(0) += c;
        *col_sums.entry(y).or_insert(0) += c;
    }
    let rows: Vec<usize> = row_sums.values().copied().collect();
    let cols: Vec<usize> = col_sums.values().copied().collect();
    let nf = n as f64;

    let mut mi = 0.0;
    for (&(x, y), &nij) in &contingency {
        let pij = nij as f64 / nf;
        let pi = row_sums[&x] as f64 / nf;
        let pj = col_sums[&y] as f64 / nf;
        mi += pij * (pij / (pi * pj)).ln();
    }

    let h_a = entropy(&rows, nf);
    let h_b = entropy(&cols, nf);
    let emi = expected_mi(&rows, &cols, n);

    let denom = 0.5 * (h_a + h_b) - emi;
    if denom.abs() < 1e-15 {
        // Zero entropy on both sides: a single block each, so the
        // partitions are equal exactly when the block structure matches.
        let equal = contingency.len() == rows.len() && contingency.len() == cols.len();
        return Ok(if equal { 1.0 } else { 0.0 });
    }
    Ok((mi - emi) / denom)
}

/// Exact expected mutual information under random permutations: for each
/// row/column margin pair `(a_i, b_j)` the cell count follows a
/// hypergeometric law over `n` draws.
fn expected_mi(rows: &[usize], cols: &[usize], n: usize) -> f64 {
    let lnf = ln_factorials(n);
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in rows {
        for &b in cols {
            let lo = 1.max(a + b - n.min(a + b)); // max(1, a + b - n)
            let lo = if a + b > n { (a + b - n).max(1) } else { 1 };
            let _ = lo;
            let start = if a + b > n { (a + b - n).max(1) } else { 1 };
            let end = a.min(b);
            for nij in start..=end {
                let term = (nij as f64 / nf) * ((nf * nij as f64) / (a as f64 * b as f64)).ln();
                // P(N_ij = nij) = a! b! (n-a)! (n-b)! / (n! nij! (a-nij)! (b-nij)! (n-a-b+nij)!)
                let ln_p = lnf[a] + lnf[b] + lnf[n - a] + lnf[n - b]
                    - lnf[n]
                    - lnf[nij]
                    - lnf[a - nij]
                    - lnf[b - nij]
                    - lnf[n - a - b + nij];
                emi += ln_p.exp() * term;
            }
        }
    }
    emi
}

/// AMI over the keys common to two user-to-community maps. Returns the
/// score together with the common-node count.
pub fn ami_over_common(
    a: &BTreeMap<String, usize>,
    b: &BTreeMap<String, usize>,
) -> Result<(f64, usize)> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (user, &ca) in a {
        if let Some(&cb) = b.get(user) {
            left.push(ca);
            right.push(cb);
        }
    }
    let count = left.len();
    ami(&left, &right).map(|score| (score, count))
}

/// Row-normalized intersection sizes: `cell(i, j) = |A_i ∩ B_j| / |A_i|`.
/// Rows sum to at most 1; the shortfall is membership outside `top_b`. An
/// empty row cluster yields a zero row plus a warning.
#[derive(Debug, Clone, Serialize)]
pub struct IntersectionMatrix {
    pub cells: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

pub fn intersection_matrix(
    top_a: &[BTreeSet<String>],
    top_b: &[BTreeSet<String>],
) -> IntersectionMatrix {
    let mut cells = Vec::with_capacity(top_a.len());
    let mut warnings = Vec::new();
    for (i, a) in top_a.iter().enumerate() {
        if a.is_empty() {
            warnings.push(format!("row cluster {i} is empty"));
            cells.push(vec![0.0; top_b.len()]);
            continue;
        }
        let size = a.len() as f64;
        cells.push(
            top_b
                .iter()
                .map(|b| a.intersection(b).count() as f64 / size)
                .collect(),
        );
    }
    IntersectionMatrix { cells, warnings }
}
