//! Spectral grouping of VUE-pairs by the midpoints of their two vehicles.
//!
//! Pairs whose midpoints lie within `zeta_m` of each other get a Gaussian
//! similarity with length scale `varrho_m`; the rows of the smallest
//! eigenvectors of the normalized Laplacian are then split by k-means.

pub mod jacobi;
pub mod kmeans;

use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::Point;

pub use jacobi::symmetric_eigen;
pub use kmeans::{lloyd, KMeansResult};

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    /// Symmetric, entries in `[0, 1]`, unit diagonal.
    pub entries: Array2<f64>,
    pub neighborhood_m: f64,
    pub scale_m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub zeta_m: f64,
    pub varrho_m: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            zeta_m: 150.0,
            varrho_m: 30.0,
        }
    }
}

/// Partition of VUE-pairs into groups. Group ids are `0..num_groups`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAssignment {
    pub group_of: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
}

impl GroupAssignment {
    /// Builds the partition from per-pair labels. Members of each group are
    /// listed in ascending pair index.
    pub fn from_labels(labels: Vec<usize>, num_groups: usize) -> Result<Self> {
        let mut groups = vec![Vec::new(); num_groups];
        for (k, &g) in labels.iter().enumerate() {
            if g >= num_groups {
                return Err(Error::Precondition(format!(
                    "pair {k} labelled with group {g} but only {num_groups} groups exist"
                )));
            }
            groups[g].push(k);
        }
        Ok(Self {
            group_of: labels,
            groups,
        })
    }

    /// Everyone in a single group.
    pub fn single(num_pairs: usize) -> Self {
        Self {
            group_of: vec![0; num_pairs],
            groups: vec![(0..num_pairs).collect()],
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.group_of.len()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }
}

pub fn similarity_matrix(midpoints: &[Point], zeta_m: f64, varrho_m: f64) -> Result<SimilarityMatrix> {
    if !(zeta_m > 0.0 && varrho_m > 0.0) {
        return Err(Error::Precondition(format!(
            "similarity needs positive radius and scale, got {zeta_m} and {varrho_m}"
        )));
    }
    let k = midpoints.len();
    let mut entries = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        entries[[i, i]] = 1.0;
        for j in i + 1..k {
            let d = midpoints[i].distance(midpoints[j]);
            let s = if d <= zeta_m {
                (-(d * d) / (varrho_m * varrho_m)).exp()
            } else {
                0.0
            };
            entries[[i, j]] = s;
            entries[[j, i]] = s;
        }
    }
    Ok(SimilarityMatrix {
        entries,
        neighborhood_m: zeta_m,
        scale_m: varrho_m,
    })
}

/// `I - W^{-1/2} D W^{-1/2}` with `W` the diagonal of row sums.
pub fn normalized_laplacian(d: &SimilarityMatrix) -> Result<Array2<f64>> {
    let k = d.entries.nrows();
    let sums = d.entries.sum_axis(Axis(1));
    if let Some(row) = sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroRowSum(row));
    }
    let inv_sqrt: Vec<f64> = sums.iter().map(|s| 1.0 / s.sqrt()).collect();
    let mut l = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            let identity = if i == j { 1.0 } else { 0.0 };
            l[[i, j]] = identity - inv_sqrt[i] * d.entries[[i, j]] * inv_sqrt[j];
        }
    }
    Ok(l)
}

/// Orthonormal eigenvectors of the `g` smallest eigenvalues, as columns.
pub fn smallest_eigenvectors(l_sym: &Array2<f64>, g: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    if g > l_sym.nrows() {
        return Err(Error::Precondition(format!(
            "asked for {g} eigenvectors of a {0}x{0} matrix",
            l_sym.nrows()
        )));
    }
    let (values, vectors) = symmetric_eigen(l_sym)?;
    let cols = vectors.slice(ndarray::s![.., ..g]).to_owned();
    Ok((values[..g].to_vec(), cols))
}

fn normalize_rows(phi: &mut Array2<f64>) {
    for mut row in phi.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
}

pub fn cluster_groups<R: Rng + ?Sized>(
    midpoints: &[Point],
    g: usize,
    cfg: &ClusterConfig,
    rng: &mut R,
) -> Result<GroupAssignment> {
    let k = midpoints.len();
    if g < 1 || g > k {
        return Err(Error::Precondition(format!(
            "cannot split {k} pairs into {g} groups"
        )));
    }
    if g == 1 {
        return Ok(GroupAssignment::single(k));
    }
    let d = similarity_matrix(midpoints, cfg.zeta_m, cfg.varrho_m)?;
    let l = normalized_laplacian(&d)?;
    let (_, mut phi) = smallest_eigenvectors(&l, g)?;
    normalize_rows(&mut phi);
    let result = lloyd(phi.view(), g, rng);
    GroupAssignment::from_labels(result.labels, g)
}
