//! Parity-check matrix design: column-weight distribution search and
//! progressive edge growth with a fixed row weight.
//!
//! The distribution search enumerates mixtures of two or three column
//! weights in `2..=8` whose mean is `m * row_weight / n`, keeps those whose
//! density-evolution estimate converges at the target QBER, and picks the
//! one with the lowest decoding complexity `sum_j w_j (w_j - 1)` (the
//! number of leave-one-out products in the variable nodes).

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LdpcError, ParityCheckMatrix};
use crate::binary_entropy;

pub const MIN_COLUMN_WEIGHT: u32 = 2;
pub const MAX_COLUMN_WEIGHT: u32 = 8;

/// Population density-evolution settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityEvolution {
    pub population: usize,
    pub iterations: usize,
    /// Converged once the fraction of negative posteriors drops below this.
    pub target_error: f64,
}

impl Default for DensityEvolution {
    fn default() -> Self {
        DensityEvolution { population: 4000, iterations: 100, target_error: 1e-4 }
    }
}

/// Column weights as `(weight, count)` pairs.
pub type WeightDistribution = Vec<(u32, usize)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n: usize,
    pub target_qber: f64,
    pub row_weight: usize,
    /// `m = round(n H2(target_qber) rate_margin)` unless `m` is given.
    pub rate_margin: f64,
    pub m: Option<usize>,
    /// Skips the search.
    pub column_weights: Option<WeightDistribution>,
    pub density_evolution: DensityEvolution,
}

impl DesignSpec {
    pub fn new(n: usize, m: usize, row_weight: usize, target_qber: f64) -> Self {
        DesignSpec {
            n,
            target_qber,
            row_weight,
            rate_margin: 1.0,
            m: Some(m),
            column_weights: None,
            density_evolution: DensityEvolution::default(),
        }
    }

    pub fn rows(&self) -> usize {
        self.m.unwrap_or_else(|| (self.n as f64 * binary_entropy(self.target_qber) * self.rate_margin).round() as usize)
    }
}

#[derive(Debug, Clone)]
pub struct DesignReport {
    pub matrix: ParityCheckMatrix,
    pub distribution: WeightDistribution,
    pub complexity: u64,
    pub four_cycles: u64,
    /// Minimum rows allowed by the noisy-channel coding bound.
    pub shannon_rows: f64,
    /// Density evolution converged at the target QBER.
    pub converges_at_target: bool,
    /// Estimated decoding threshold, computed when no candidate converges.
    pub threshold: Option<f64>,
}

/// `sum w (w - 1)` over all columns.
pub fn complexity(d: &[(u32, usize)]) -> u64 {
    d.iter().map(|&(w, c)| (w as u64) * (w as u64 - 1) * c as u64).sum()
}

/// All mixtures of up to three weights in `lo..=hi` with `n` columns and
/// `edges` ones, ordered by complexity.
pub fn candidate_distributions(n: usize, edges: usize, lo: u32, hi: u32) -> Vec<WeightDistribution> {
    let mut out: Vec<WeightDistribution> = Vec::new();
    let n_i = n as i64;
    let e_i = edges as i64;
    for a in lo..=hi {
        if a as i64 * n_i == e_i {
            out.push(vec![(a, n)]);
        }
        for b in a + 1..=hi {
            // n_a + n_b = n, a n_a + b n_b = edges
            let num = e_i - a as i64 * n_i;
            let den = (b - a) as i64;
            if num > 0 && num % den == 0 && num / den < n_i {
                let nb = (num / den) as usize;
                out.push(vec![(a, n - nb), (b, nb)]);
            }
            for c in b + 1..=hi {
                // middle count on a coarse grid, outer counts solved
                for tenth in 1..10 {
                    let nb = n as i64 * tenth / 10;
                    let rest_n = n_i - nb;
                    let rest_e = e_i - b as i64 * nb;
                    let num = rest_e - a as i64 * rest_n;
                    let den = (c - a) as i64;
                    if num > 0 && num % den == 0 && num / den < rest_n {
                        let nc = num / den;
                        out.push(vec![(a, (rest_n - nc) as usize), (b, nb as usize), (c, nc as usize)]);
                    }
                }
            }
        }
    }
    out.sort_by_key(|d| (complexity(d), d.len()));
    out.dedup();
    out
}

/// Monte-Carlo density evolution of sum-product decoding on a binary
/// symmetric channel with crossover `p`, regular check degree and the
/// given column-weight mixture. Returns whether the error fraction falls
/// below the target.
pub fn density_evolution_converges<R: Rng + ?Sized>(
    dist: &[(u32, usize)],
    row_weight: usize,
    p: f64,
    de: &DensityEvolution,
    rng: &mut R,
) -> bool {
    const LLR_CLIP: f64 = 40.0;
    let l0 = ((1.0 - p) / p).ln();
    let channel = |rng: &mut R| if rng.random::<f64>() < p { -l0 } else { l0 };
    // edge-perspective degree distribution
    let total: f64 = dist.iter().map(|&(w, c)| w as f64 * c as f64).sum();
    let mut cum = Vec::new();
    let mut acc = 0.0;
    for &(w, c) in dist {
        acc += w as f64 * c as f64 / total;
        cum.push((acc, w));
    }
    let edge_degree = |rng: &mut R| {
        let u: f64 = rng.random();
        cum.iter().find(|(c, _)| u < *c).map(|&(_, w)| w).unwrap_or(cum.last().unwrap().1)
    };
    let n = de.population;
    let mut v2c: Vec<f64> = (0..n).map(|_| channel(rng)).collect();
    let mut c2v = vec![0.0; n];
    for _ in 0..de.iterations {
        for slot in c2v.iter_mut() {
            let mut prod = 1.0;
            for _ in 0..row_weight - 1 {
                prod *= (v2c[rng.random_range(0..n)] / 2.0).tanh();
            }
            *slot = (2.0 * prod.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()).clamp(-LLR_CLIP, LLR_CLIP);
        }
        let mut errors = 0usize;
        for slot in v2c.iter_mut() {
            let w = edge_degree(rng);
            let mut l = channel(rng);
            for _ in 0..w - 1 {
                l += c2v[rng.random_range(0..n)];
            }
            // the full posterior adds one more check message
            if l + c2v[rng.random_range(0..n)] < 0.0 {
                errors += 1;
            }
            *slot = l.clamp(-LLR_CLIP, LLR_CLIP);
        }
        if (errors as f64) / (n as f64) < de.target_error {
            return true;
        }
    }
    false
}

/// Largest crossover probability at which density evolution converges,
/// by bisection on `[0.001, 0.25]`.
pub fn density_evolution_threshold<R: Rng + ?Sized>(dist: &[(u32, usize)], row_weight: usize, de: &DensityEvolution, rng: &mut R) -> f64 {
    let (mut lo, mut hi) = (0.001, 0.25);
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        if density_evolution_converges(dist, row_weight, mid, de, rng) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Builds the matrix.
pub fn design_matrix<R: Rng + ?Sized>(spec: &DesignSpec, rng: &mut R) -> Result<DesignReport, LdpcError> {
    let n = spec.n;
    if !(spec.target_qber > 0.0 && spec.target_qber < 0.5) {
        return Err(LdpcError::Qber(spec.target_qber));
    }
    let m = spec.rows();
    let shannon_rows = n as f64 * binary_entropy(spec.target_qber);
    if (m as f64) < shannon_rows {
        return Err(LdpcError::ShannonBound { m, n, qber: spec.target_qber, bound: shannon_rows });
    }
    if m >= n {
        return Err(LdpcError::Infeasible(format!("m = {m} must be below n = {n}")));
    }
    let rw = spec.row_weight;
    if rw < 2 || rw > n {
        return Err(LdpcError::Infeasible(format!("row weight {rw} outside 2..={n}")));
    }
    let edges = m * rw;
    let de = spec.density_evolution;

    let (distribution, converges_at_target, threshold) = match &spec.column_weights {
        Some(d) => {
            let cols: usize = d.iter().map(|&(_, c)| c).sum();
            let ones: usize = d.iter().map(|&(w, c)| w as usize * c).sum();
            if cols != n || ones != edges || d.iter().any(|&(w, c)| c > 0 && (w == 0 || w as usize > m)) {
                return Err(LdpcError::Infeasible(format!("column weights cover {cols} columns and {ones} ones, need {n} and {edges}")));
            }
            let ok = density_evolution_converges(d, rw, spec.target_qber, &de, rng);
            (d.clone(), ok, None)
        }
        None => {
            let candidates = candidate_distributions(n, edges, MIN_COLUMN_WEIGHT, MAX_COLUMN_WEIGHT.min(m as u32));
            if candidates.is_empty() {
                return Err(LdpcError::Infeasible(format!(
                    "mean column weight {:.3} not reachable with weights {MIN_COLUMN_WEIGHT}..={MAX_COLUMN_WEIGHT}",
                    edges as f64 / n as f64
                )));
            }
            match candidates.iter().find(|d| density_evolution_converges(d, rw, spec.target_qber, &de, rng)) {
                Some(d) => (d.clone(), true, None),
                None => {
                    let mut best = (candidates[0].clone(), f64::NEG_INFINITY);
                    for d in &candidates {
                        let t = density_evolution_threshold(d, rw, &de, rng);
                        if t > best.1 {
                            best = (d.clone(), t);
                        }
                    }
                    (best.0, false, Some(best.1))
                }
            }
        }
    };

    let mut weights: Vec<u32> = Vec::with_capacity(n);
    for &(w, c) in &distribution {
        weights.extend(std::iter::repeat(w).take(c));
    }
    weights.sort_unstable();
    let matrix = progressive_edge_growth(m, rw, &weights, rng)?;
    Ok(DesignReport {
        four_cycles: matrix.four_cycles(),
        complexity: complexity(&distribution),
        matrix,
        distribution,
        shannon_rows,
        converges_at_target,
        threshold,
    })
}

/// Progressive edge growth: each new edge of a column goes to a check
/// outside the column's current neighbourhood at the largest reachable
/// depth, preferring the lowest check degree; checks never exceed
/// `row_weight`. A column left without any admissible check borrows one by
/// moving an edge of a full check to an unfilled one.
pub fn progressive_edge_growth<R: Rng + ?Sized>(
    m: usize,
    row_weight: usize,
    col_weights: &[u32],
    rng: &mut R,
) -> Result<ParityCheckMatrix, LdpcError> {
    let n = col_weights.len();
    let total: usize = col_weights.iter().map(|&w| w as usize).sum();
    if total != m * row_weight {
        return Err(LdpcError::Infeasible(format!("{total} ones cannot fill {m} rows of weight {row_weight}")));
    }
    let mut rows: Vec<Vec<u32>> = vec![Vec::with_capacity(row_weight); m];
    let mut cols: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut row_seen = vec![u32::MAX; m];
    let mut col_seen = vec![u32::MAX; n];
    let mut stamp = 0u32;
    let mut candidates: Vec<u32> = Vec::new();

    for j in 0..n {
        for _ in 0..col_weights[j] {
            stamp += 1;
            // rows reachable from column j
            for &r in &cols[j] {
                row_seen[r as usize] = stamp;
            }
            let admissible = |r: usize, rows: &Vec<Vec<u32>>, row_seen: &Vec<u32>| rows[r].len() < row_weight && row_seen[r] != stamp;
            let mut frontier: Vec<u32> = cols[j].clone();
            col_seen[j] = stamp;
            loop {
                let mut next = Vec::new();
                for &r in &frontier {
                    for &c in &rows[r as usize] {
                        if col_seen[c as usize] != stamp {
                            col_seen[c as usize] = stamp;
                            for &r2 in &cols[c as usize] {
                                if row_seen[r2 as usize] != stamp {
                                    next.push(r2);
                                }
                            }
                        }
                    }
                }
                next.sort_unstable();
                next.dedup();
                let remaining = (0..m).any(|r| admissible(r, &rows, &row_seen) && !next.binary_search(&(r as u32)).is_ok());
                if next.is_empty() || !remaining {
                    break;
                }
                for &r in &next {
                    row_seen[r as usize] = stamp;
                }
                frontier = next;
            }
            candidates.clear();
            let mut best_deg = usize::MAX;
            for r in 0..m {
                if admissible(r, &rows, &row_seen) {
                    let d = rows[r].len();
                    if d < best_deg {
                        best_deg = d;
                        candidates.clear();
                    }
                    if d == best_deg {
                        candidates.push(r as u32);
                    }
                }
            }
            if candidates.is_empty() {
                // any unfilled row not yet in this column
                for r in 0..m {
                    if rows[r].len() < row_weight && !cols[j].contains(&(r as u32)) {
                        let d = rows[r].len();
                        if d < best_deg {
                            best_deg = d;
                            candidates.clear();
                        }
                        if d == best_deg {
                            candidates.push(r as u32);
                        }
                    }
                }
            }
            let r = match candidates.choose(rng) {
                Some(&r) => r,
                None => swap_repair(j, row_weight, &mut rows, &mut cols)?,
            };
            rows[r as usize].push(j as u32);
            cols[j].push(r);
        }
    }
    ParityCheckMatrix::from_rows(n, rows)
}

/// Frees a slot for column `j` in a full row not yet containing `j` by
/// moving one of that row's other columns to an unfilled row.
fn swap_repair(j: usize, row_weight: usize, rows: &mut [Vec<u32>], cols: &mut [Vec<u32>]) -> Result<u32, LdpcError> {
    let m = rows.len();
    let free: Vec<usize> = (0..m).filter(|&r| rows[r].len() < row_weight).collect();
    for r_full in 0..m {
        if rows[r_full].len() != row_weight || cols[j].contains(&(r_full as u32)) {
            continue;
        }
        for &r_free in &free {
            if let Some(pos) = rows[r_full].iter().position(|&c| c as usize != j && !rows[r_free].contains(&c)) {
                let c = rows[r_full].swap_remove(pos);
                rows[r_free].push(c);
                let cp = cols[c as usize].iter().position(|&r| r as usize == r_full).expect("edge present");
                cols[c as usize][cp] = r_free as u32;
                return Ok(r_full as u32);
            }
        }
    }
    Err(LdpcError::Infeasible(format!("no admissible check for column {j}")))
}
