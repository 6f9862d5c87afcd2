//! SMOTE: synthetic minority samples interpolated toward same-class
//! nearest neighbors.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k: usize,
    /// Desired minority/majority count ratio after oversampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self { k: 5, target_ratio: 1.0, seed: 42 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Exact k-NN lists, one per point, nearest first; equal distances are
/// ordered by index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    pub k: usize,
    pub neighbors: Vec<Vec<Neighbor>>,
}

impl NeighborTable {
    pub fn indices(&self, point: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[point].iter().map(|n| n.index)
    }
}

pub fn k_nearest_neighbors(points: ArrayView2<f64>, k: usize) -> Result<NeighborTable> {
    k_nearest_neighbors_with(points, k, Execution::default())
}

pub fn k_nearest_neighbors_with(
    points: ArrayView2<f64>,
    k: usize,
    exec: Execution,
) -> Result<NeighborTable> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::TooFewPoints { k, points: n });
    }
    check_finite(points)?;

    let neighbors = exec.map_indices(n, |i| {
        let anchor = points.row(i);
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d2: f64 = anchor
                    .iter()
                    .zip(points.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, j)
            })
            .collect();
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        candidates.select_nth_unstable_by(k - 1, by_distance);
        candidates.truncate(k);
        candidates.sort_unstable_by(by_distance);
        candidates
            .into_iter()
            .map(|(d2, index)| Neighbor { index, distance: d2.sqrt() })
            .collect()
    });
    Ok(NeighborTable { k, neighbors })
}

fn check_finite(points: ArrayView2<f64>) -> Result<()> {
    for ((row, column), &value) in points.indexed_iter() {
        if !value.is_finite() {
            return Err(Error::NonFinite { row, column, value });
        }
    }
    Ok(())
}

/// `base + gap × (neighbor − base)`, componentwise.
pub fn synthesize_sample(base: &[f64], neighbor: &[f64], gap: f64) -> Result<Vec<f64>> {
    if base.len() != neighbor.len() {
        return Err(Error::ArityMismatch { expected: base.len(), found: neighbor.len() });
    }
    if !(0.0..=1.0).contains(&gap) {
        return Err(Error::GapOutOfRange(gap));
    }
    Ok(base.iter().zip(neighbor).map(|(b, m)| b + gap * (m - b)).collect())
}

/// Where a synthetic row came from. `base` and `neighbor` index rows of the
/// original input matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    /// Original rows first, then synthetic rows.
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub minority_label: u8,
    /// One entry per synthetic row, in output order.
    pub provenance: Vec<SyntheticOrigin>,
}

impl SmoteOutput {
    pub fn n_synthetic(&self) -> usize {
        self.provenance.len()
    }
}

/// Number of minority rows after oversampling to `target_ratio`.
pub fn target_minority_count(majority: usize, target_ratio: f64) -> usize {
    (target_ratio * majority as f64).round() as usize
}

/// Appends synthetic minority rows until the minority count reaches
/// `round(target_ratio × majority)`. Base rows are taken round-robin over the
/// minority class; for each synthetic row the generator draws the neighbor
/// slot, then the gap.
pub fn smote_oversample(
    features: ArrayView2<f64>,
    labels: &[u8],
    config: &SmoteConfig,
) -> Result<SmoteOutput> {
    if features.nrows() != labels.len() {
        return Err(Error::LengthMismatch { left: features.nrows(), right: labels.len() });
    }
    crate::check_binary_labels(labels)?;
    if !(config.target_ratio > 0.0 && config.target_ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "SMOTE target ratio {} outside (0, 1]",
            config.target_ratio
        )));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let minority_label = u8::from(positives < negatives);
    let (minority, majority) = if minority_label == 1 { (positives, negatives) } else { (negatives, positives) };
    if config.k == 0 || config.k >= minority {
        return Err(Error::InvalidConfig(format!(
            "SMOTE k={} must be in 1..{} (minority class size)",
            config.k, minority
        )));
    }

    let target = target_minority_count(majority, config.target_ratio);
    let unchanged = || SmoteOutput {
        features: features.to_owned(),
        labels: labels.to_vec(),
        minority_label,
        provenance: Vec::new(),
    };
    if target <= minority {
        return Ok(unchanged());
    }

    let minority_rows: Vec<usize> =
        labels.iter().enumerate().filter(|(_, &l)| l == minority_label).map(|(i, _)| i).collect();
    let minority_points = features.select(Axis(0), &minority_rows);
    let table = k_nearest_neighbors(minority_points.view(), config.k)?;

    let n_new = target - minority;
    let mut rng = SplitMix64::new(config.seed);
    let mut out = Array2::zeros((features.nrows() + n_new, features.ncols()));
    out.slice_mut(ndarray::s![..features.nrows(), ..]).assign(&features);
    let mut out_labels = labels.to_vec();
    let mut provenance = Vec::with_capacity(n_new);

    for s in 0..n_new {
        let local_base = s % minority_rows.len();
        let slot = rng.below(config.k);
        let gap = rng.next_f64();
        let local_neighbor = table.neighbors[local_base][slot].index;
        let base = minority_rows[local_base];
        let neighbor = minority_rows[local_neighbor];

        let row_index = features.nrows() + s;
        let base_row = features.row(base);
        let neighbor_row = features.row(neighbor);
        for (j, v) in out.row_mut(row_index).iter_mut().enumerate() {
            *v = base_row[j] + gap * (neighbor_row[j] - base_row[j]);
        }
        out_labels.push(minority_label);
        provenance.push(SyntheticOrigin { base, neighbor, gap });
    }

    Ok(SmoteOutput { features: out, labels: out_labels, minority_label, provenance })
}
