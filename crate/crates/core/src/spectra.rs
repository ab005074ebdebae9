//! Eigenvalue multisets and their optimal matching.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials). Returns `assignment[row] = column`.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Result of pairing computed eigenvalues with predicted ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMatch {
    #[serde(with = "complex_list")]
    pub computed: Vec<Complex64>,
    /// `predicted[i]` is the partner of `computed[i]`.
    #[serde(with = "complex_list")]
    pub predicted: Vec<Complex64>,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
}

/// Pairs two multisets minimizing the summed relative distance
/// `|a − b| / max(|b|, floor)`.
pub fn match_multisets(computed: &[Complex64], predicted: &[Complex64], floor: f64) -> Result<SpectrumMatch> {
    if computed.len() != predicted.len() {
        return Err(LabError::DimensionMismatch { expected: predicted.len(), got: computed.len() });
    }
    let n = computed.len();
    let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm().max(floor);
    let cost = DMatrix::from_fn(n, n, |i, j| rel(computed[i], predicted[j]));
    let assignment = hungarian(&cost);
    let paired: Vec<Complex64> = assignment.iter().map(|&j| predicted[j]).collect();
    let mut max_abs_err = 0.0_f64;
    let mut max_rel_err = 0.0_f64;
    for (a, b) in computed.iter().zip(&paired) {
        max_abs_err = max_abs_err.max((a - b).norm());
        max_rel_err = max_rel_err.max(rel(*a, *b));
    }
    Ok(SpectrumMatch { computed: computed.to_vec(), predicted: paired, max_abs_err, max_rel_err })
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(LabError::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LabError::EigenFailure);
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(LabError::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Complex numbers as `[re, im]` pairs.
pub mod complex_list {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}
