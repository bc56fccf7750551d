//! Windowed hybrid clustering that separates outlier readings from the
//! signal and re-interpolates them away.
//!
//! Each window of the trace is clustered into two groups, either spectrally
//! (normalized-Laplacian embedding + k-means) or agglomeratively (bottom-up
//! single-linkage merging), selected by comparing the window's standard
//! deviation against a threshold. The cluster whose centroid sits farther
//! from the window median is treated as noise and its points removed, with
//! one structural guard: contiguous noise runs touching a window boundary are
//! kept, because a level shift that continues into the neighboring window is
//! signal (a refill edge), not noise.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{PipelineConfig, Trace};
use crate::preprocess;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("bandwidth must be > 0, got {0}")]
    DegenerateBandwidth(f64),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("cluster count {k} invalid for {n} points")]
    BadClusterCount { k: usize, n: usize },
    #[error("point {0} has non-positive affinity degree")]
    SingularDegree(usize),
    #[error("trace has missing samples; fill it before clustering")]
    NotFilled,
    #[error(transparent)]
    Refill(#[from] preprocess::PreprocessError),
}

/// Symmetric Gaussian affinity matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    entries: Vec<f64>,
    n: usize,
    pub bandwidth: f64,
}

impl AffinityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

/// Builds the affinity matrix, `entry(i,j) = exp(-(v_i-v_j)^2 / (2 b^2))`.
pub fn build_affinity(values: &[f64], bandwidth: f64) -> Result<AffinityMatrix, ClusterError> {
    if values.len() < 2 {
        return Err(ClusterError::TooFewPoints {
            got: values.len(),
            need: 2,
        });
    }
    if bandwidth.is_nan() || bandwidth <= 0.0 {
        return Err(ClusterError::DegenerateBandwidth(bandwidth));
    }
    let n = values.len();
    let denom = 2.0 * bandwidth * bandwidth;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
        for j in i + 1..n {
            let d = values[i] - values[j];
            let a = (-(d * d) / denom).exp();
            entries[i * n + j] = a;
            entries[j * n + i] = a;
        }
    }
    Ok(AffinityMatrix {
        entries,
        n,
        bandwidth,
    })
}

/// Median absolute pairwise difference, the default kernel bandwidth.
/// Falls back to 1.0 when the differences are degenerate.
pub fn median_pairwise_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    let mut diffs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            diffs.push((values[i] - values[j]).abs());
        }
    }
    if diffs.is_empty() {
        return 1.0;
    }
    diffs.sort_by(|a, b| a.partial_cmp(b).expect("levels are finite"));
    let mid = diffs.len() / 2;
    let med = if diffs.len() % 2 == 0 {
        (diffs[mid - 1] + diffs[mid]) / 2.0
    } else {
        diffs[mid]
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// Cluster labels for one window; `noise_label` is filled by the hybrid
/// denoiser once a cluster has been designated as noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub noise_label: Option<usize>,
}

/// Symmetric normalized Laplacian, `L = I - D^{-1/2} A D^{-1/2}`.
pub fn normalized_laplacian(affinity: &AffinityMatrix) -> Result<DMatrix<f64>, ClusterError> {
    let n = affinity.n;
    let mut inv_sqrt_deg = vec![0.0; n];
    for (i, slot) in inv_sqrt_deg.iter_mut().enumerate() {
        let d: f64 = (0..n).map(|j| affinity.get(i, j)).sum();
        if d.is_nan() || d <= 0.0 {
            return Err(ClusterError::SingularDegree(i));
        }
        *slot = 1.0 / d.sqrt();
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let norm = inv_sqrt_deg[i] * affinity.get(i, j) * inv_sqrt_deg[j];
            l[(i, j)] = if i == j { 1.0 - norm } else { -norm };
        }
    }
    // Exact symmetry despite rounding in the products.
    for i in 0..n {
        for j in i + 1..n {
            let avg = (l[(i, j)] + l[(j, i)]) / 2.0;
            l[(i, j)] = avg;
            l[(j, i)] = avg;
        }
    }
    Ok(l)
}

/// Spectral clustering: k smallest Laplacian eigenvectors, row-normalized,
/// partitioned by deterministically seeded k-means.
pub fn spectral_cluster(values: &[f64], k: usize) -> Result<ClusterAssignment, ClusterError> {
    let n = values.len();
    if k < 2 || k > n {
        return Err(ClusterError::BadClusterCount { k, n });
    }
    let bandwidth = median_pairwise_bandwidth(values);
    let affinity = build_affinity(values, bandwidth)?;
    let laplacian = normalized_laplacian(&affinity)?;
    let eigen = SymmetricEigen::new(laplacian);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[a]
            .partial_cmp(&eigen.eigenvalues[b])
            .expect("eigenvalues are finite")
    });

    // Row-normalized embedding from the k smallest eigenvectors.
    let mut embedding = vec![vec![0.0f64; k]; n];
    for (dim, &col) in order.iter().take(k).enumerate() {
        for (i, row) in embedding.iter_mut().enumerate() {
            row[dim] = eigen.eigenvectors[(i, col)];
        }
    }
    for row in &mut embedding {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
    }

    let labels = kmeans(&embedding, k);
    Ok(ClusterAssignment {
        labels,
        noise_label: None,
    })
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with deterministic farthest-point initialization from
/// row 0 and lowest-index tie-breaking, so results are reproducible.
fn kmeans(rows: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = rows.len();
    let dims = rows[0].len();

    // Farthest-point seeding: start at row 0, then repeatedly take the row
    // farthest from all chosen centers.
    let mut centers: Vec<Vec<f64>> = vec![rows[0].clone()];
    while centers.len() < k {
        let mut far = 0;
        let mut far_d = -1.0;
        for (i, r) in rows.iter().enumerate() {
            let d = centers
                .iter()
                .map(|c| dist2(c, r))
                .fold(f64::INFINITY, f64::min);
            if d > far_d + 1e-15 {
                far_d = d;
                far = i;
            }
        }
        centers.push(rows[far].clone());
    }

    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, r) in rows.iter().enumerate() {
            let mut best = (f64::INFINITY, 0usize);
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(center, r);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if labels[i] != best.1 {
                labels[i] = best.1;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0f64; dims]; k];
        let mut counts = vec![0usize; k];
        for (i, r) in rows.iter().enumerate() {
            for (s, x) in sums[labels[i]].iter_mut().zip(r) {
                *s += x;
            }
            counts[labels[i]] += 1;
        }
        // An emptied cluster restarts at the row farthest from all others.
        for c in 0..k {
            if counts[c] == 0 {
                let mut far = 0;
                let mut far_d = -1.0;
                for (i, r) in rows.iter().enumerate() {
                    let d = (0..k)
                        .filter(|&o| o != c && counts[o] > 0)
                        .map(|o| dist2(&centers[o], r))
                        .fold(f64::INFINITY, f64::min);
                    if d.is_finite() && d > far_d + 1e-15 {
                        far_d = d;
                        far = i;
                    }
                }
                sums[c] = rows[far].clone();
                counts[c] = 1;
            }
        }
        for (center, (sum, count)) in centers.iter_mut().zip(sums.iter().zip(&counts)) {
            for (cx, sx) in center.iter_mut().zip(sum) {
                *cx = sx / *count as f64;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Bottom-up single-linkage clustering: every point starts alone and the two
/// closest clusters merge (lowest-index pair on ties) until `k` remain.
///
/// In one dimension the closest pair of single-linkage clusters is always
/// adjacent in sorted order, so merging walks sorted blocks.
pub fn agglomerative_cluster(values: &[f64], k: usize) -> Result<ClusterAssignment, ClusterError> {
    let n = values.len();
    if k < 1 || k > n {
        return Err(ClusterError::BadClusterCount { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Stable by original index for deterministic ties.
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("levels are finite")
            .then(a.cmp(&b))
    });

    // Blocks of sorted positions; each block is one cluster.
    let mut blocks: Vec<Vec<usize>> = order.iter().map(|&i| vec![i]).collect();
    while blocks.len() > k {
        let mut best_gap = f64::INFINITY;
        let mut best_pos = 0;
        let mut best_key = (usize::MAX, usize::MAX);
        for pos in 0..blocks.len() - 1 {
            let left_max = *blocks[pos].last().unwrap();
            let right_min = blocks[pos + 1][0];
            let gap = (values[right_min] - values[left_max]).abs();
            let left_id = *blocks[pos].iter().min().unwrap();
            let right_id = *blocks[pos + 1].iter().min().unwrap();
            let key = (left_id.min(right_id), left_id.max(right_id));
            if gap < best_gap - 1e-18 || (gap <= best_gap && key < best_key) {
                best_gap = gap;
                best_pos = pos;
                best_key = key;
            }
        }
        let right = blocks.remove(best_pos + 1);
        blocks[best_pos].extend(right);
    }

    // Renumber clusters by first appearance in original point order.
    let mut label_of_point = vec![usize::MAX; n];
    for (block_id, block) in blocks.iter().enumerate() {
        for &p in block {
            label_of_point[p] = block_id;
        }
    }
    let mut remap = vec![usize::MAX; blocks.len()];
    let mut next = 0;
    let mut labels = vec![0usize; n];
    for (p, slot) in labels.iter_mut().enumerate() {
        let b = label_of_point[p];
        if remap[b] == usize::MAX {
            remap[b] = next;
            next += 1;
        }
        *slot = remap[b];
    }
    Ok(ClusterAssignment {
        labels,
        noise_label: None,
    })
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("levels are finite"));
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Window positions whose samples should be removed as noise, or empty when
/// the window is kept intact.
fn window_noise_positions(window: &[f64], threshold_t: f64) -> Vec<usize> {
    let n = window.len();
    if n < 4 {
        return Vec::new();
    }
    let first = window[0];
    if window.iter().all(|&v| v == first) {
        return Vec::new();
    }
    let sigma = population_std(window);
    let assignment = if sigma > threshold_t {
        spectral_cluster(window, 2)
    } else {
        agglomerative_cluster(window, 2)
    };
    let assignment = match assignment {
        Ok(a) => a,
        Err(_) => return Vec::new(),
    };

    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (i, &label) in assignment.labels.iter().enumerate() {
        sums[label] += window[i];
        counts[label] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Vec::new();
    }
    let median = median_of(window);
    let dist = [
        (sums[0] / counts[0] as f64 - median).abs(),
        (sums[1] / counts[1] as f64 - median).abs(),
    ];
    // Noise must sit strictly farther from the median and hold a minority of
    // the window; otherwise nothing is removed.
    let noise = if dist[0] > dist[1] { 0 } else { 1 };
    if dist[noise] <= dist[1 - noise] || 2 * counts[noise] >= n {
        return Vec::new();
    }

    let mut positions = Vec::new();
    let mut pos = 0;
    while pos < n {
        if assignment.labels[pos] != noise {
            pos += 1;
            continue;
        }
        let run_start = pos;
        while pos < n && assignment.labels[pos] == noise {
            pos += 1;
        }
        let touches_boundary = run_start == 0 || pos == n;
        if !touches_boundary {
            positions.extend(run_start..pos);
        }
    }
    positions
}

/// Removes per-window noise clusters and refills the gaps by interpolation
/// and extrapolation. Window size and step come from the config; the final
/// partial window is processed as-is. Constant windows pass through
/// untouched.
pub fn hybrid_cluster_denoise(
    trace: &Trace,
    config: &PipelineConfig,
) -> Result<Trace, ClusterError> {
    if !trace.is_fully_filled() {
        return Err(ClusterError::NotFilled);
    }
    let values = trace.filled_levels().expect("checked filled");
    let n = values.len();
    let size = config.cluster_window_size;
    let step = config.cluster_window_step.max(1);

    let starts: Vec<usize> = (0..n).step_by(step).collect();
    let removals: Vec<Vec<usize>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + size).min(n);
            let window = &values[start..end];
            window_noise_positions(window, config.cluster_threshold_t)
                .into_iter()
                .map(|p| start + p)
                .collect()
        })
        .collect();

    let mut out = trace.clone();
    for removal in removals {
        for pos in removal {
            out.samples[pos].level = None;
        }
    }
    let out = preprocess::interpolate_linear(&out)?;
    let out = preprocess::extrapolate_midpoint(&out)?;
    Ok(out)
}
