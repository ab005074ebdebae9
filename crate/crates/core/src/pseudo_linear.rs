//! Pseudo-Euclidean linear algebra.
//!
//! Constructors never reject degenerate input; validity is checked by explicit
//! operations so that failure modes stay testable.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{max_abs, numerical_rank, RANK_REL_TOL};

/// Below this `|det|` a Gram matrix is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// A vector space `ℝ^m` with a symmetric bilinear form given by its Gram matrix
/// in a fixed reference basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoEuclideanSpace {
    gram: DMatrix<f64>,
    signature: (usize, usize),
}

impl PseudoEuclideanSpace {
    pub fn new(gram: DMatrix<f64>) -> Self {
        let sym = (&gram + gram.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let scale = max_abs(&gram).max(1.0);
        let plus = eig.eigenvalues.iter().filter(|&&l| l > 1e-12 * scale).count();
        let minus = eig.eigenvalues.iter().filter(|&&l| l < -1e-12 * scale).count();
        Self { gram, signature: (plus, minus) }
    }

    pub fn euclidean(m: usize) -> Self {
        Self::new(DMatrix::identity(m, m))
    }

    /// Diagonal Gram matrix with the given entries.
    pub fn diagonal(entries: &[f64]) -> Self {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// Gram matrix `ε` on the anti-diagonal, the shape of a fit basis.
    pub fn antidiagonal(m: usize, epsilon: f64) -> Self {
        Self::new(DMatrix::from_fn(m, m, |i, j| if i + j + 1 == m { epsilon } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn inner(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (v.transpose() * &self.gram * w)[(0, 0)]
    }

    /// Checks symmetry, nondegeneracy and that the signature covers all of `ℝ^m`.
    pub fn validate(&self) -> Result<()> {
        let m = self.dim();
        if self.gram.ncols() != m {
            return Err(LabError::DimensionMismatch { expected: m, got: self.gram.ncols() });
        }
        if max_abs(&(&self.gram - self.gram.transpose())) > 1e-12 * max_abs(&self.gram).max(1.0) {
            return Err(LabError::InvalidParameter("Gram matrix is not symmetric".into()));
        }
        if self.gram.determinant().abs() <= DEGENERACY_THRESHOLD {
            return Err(LabError::InvalidParameter("Gram matrix is degenerate".into()));
        }
        if self.signature.0 + self.signature.1 != m {
            return Err(LabError::InvalidParameter("signature does not cover the space".into()));
        }
        Ok(())
    }

    pub fn gram_inverse(&self) -> DMatrix<f64> {
        self.gram.clone().try_inverse().expect("nondegenerate Gram matrix")
    }

    /// Basis of `so(V)`: `G⁻¹(E_ij − E_ji)` for `i < j`.
    pub fn so_basis(&self) -> Vec<DMatrix<f64>> {
        let m = self.dim();
        let ginv = self.gram_inverse();
        let mut out = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                let mut s = DMatrix::zeros(m, m);
                s[(i, j)] = 1.0;
                s[(j, i)] = -1.0;
                out.push(&ginv * s);
            }
        }
        out
    }

    /// Isometry-defect `max |CᵀGC − G|`.
    pub fn isometry_residual(&self, c: &DMatrix<f64>) -> f64 {
        max_abs(&(c.transpose() * &self.gram * c - &self.gram))
    }

    /// Cayley transform `(I − B)⁻¹(I + B)` of `B ∈ so(V)`, an isometry.
    pub fn cayley(&self, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let m = self.dim();
        let id = DMatrix::<f64>::identity(m, m);
        (&id - b).try_inverse().map(|inv| inv * (&id + b))
    }

    pub fn random_so<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> DMatrix<f64> {
        let m = self.dim();
        let mut b = DMatrix::zeros(m, m);
        for basis in self.so_basis() {
            b += basis * rng.gen_range(-scale..scale);
        }
        b
    }

    pub fn random_isometry<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> DMatrix<f64> {
        loop {
            let b = self.random_so(rng, scale);
            if let Some(c) = self.cayley(&b) {
                return c;
            }
        }
    }

    /// Uniformly scaled random traceless self-adjoint endomorphism with
    /// Frobenius norm `norm`.
    pub fn random_traceless_selfadjoint<R: Rng + ?Sized>(&self, rng: &mut R, norm: f64) -> DMatrix<f64> {
        let m = self.dim();
        let mut s = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let x: f64 = rng.gen_range(-1.0..1.0);
                s[(i, j)] = x;
                s[(j, i)] = x;
            }
        }
        let mut a = self.gram_inverse() * s;
        let tr = a.trace() / m as f64;
        for i in 0..m {
            a[(i, i)] -= tr;
        }
        let fro = a.norm();
        if fro == 0.0 {
            return a;
        }
        a * (norm / fro)
    }
}

/// An endomorphism of a pseudo-Euclidean space, in the reference basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Endo {
    pub space: PseudoEuclideanSpace,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AValidation {
    pub selfadjoint_residual: f64,
    pub trace: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genericity {
    pub generic: bool,
    pub isotropy_algebra_dim: usize,
    pub rank: usize,
}

impl Endo {
    pub fn new(space: PseudoEuclideanSpace, matrix: DMatrix<f64>) -> Self {
        Self { space, matrix }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn identity(space: PseudoEuclideanSpace) -> Self {
        let m = space.dim();
        Self::new(space, DMatrix::identity(m, m))
    }

    pub fn zero(space: PseudoEuclideanSpace) -> Self {
        let m = space.dim();
        Self::new(space, DMatrix::zeros(m, m))
    }

    pub fn validate_a(&self) -> Result<AValidation> {
        let m = self.dim();
        if self.matrix.nrows() != m || self.matrix.ncols() != m {
            return Err(LabError::DimensionMismatch { expected: m, got: self.matrix.nrows() });
        }
        let g = self.space.gram();
        // ⟨Av, w⟩ − ⟨v, Aw⟩ on basis pairs is the (v, w) entry of AᵀG − GA
        let r = self.matrix.transpose() * g - g * &self.matrix;
        Ok(AValidation { selfadjoint_residual: max_abs(&r), trace: self.matrix.trace() })
    }

    /// Rank test of `B ↦ [A, B]` on `so(V)`.
    pub fn genericity_test(&self) -> Result<Genericity> {
        let v = self.validate_a()?;
        let scale = max_abs(&self.matrix).max(1.0);
        if v.selfadjoint_residual > 1e-8 * scale {
            return Err(LabError::NotSelfAdjoint { residual: v.selfadjoint_residual });
        }
        let m = self.dim();
        let basis = self.space.so_basis();
        let r = basis.len();
        if r == 0 {
            return Ok(Genericity { generic: true, isotropy_algebra_dim: 0, rank: 0 });
        }
        let mut map = DMatrix::zeros(m * m, r);
        for (k, b) in basis.iter().enumerate() {
            let c = &self.matrix * b - b * &self.matrix;
            for (idx, x) in c.iter().enumerate() {
                map[(idx, k)] = *x;
            }
        }
        let rank = numerical_rank(&map, RANK_REL_TOL);
        Ok(Genericity { generic: rank == r, isotropy_algebra_dim: r - rank, rank })
    }

    /// Smallest `k ≥ 1` with `Aᵏ` numerically zero, or `None` when `Aᵐ ≠ 0`.
    pub fn nilpotent_order(&self) -> Option<usize> {
        let m = self.dim();
        let scale = max_abs(&self.matrix).max(1.0);
        let mut p = self.matrix.clone();
        for k in 1..=m.max(1) {
            if max_abs(&p) <= 1e-10 * scale.powi(k as i32) {
                return Some(k);
            }
            p = &p * &self.matrix;
        }
        None
    }

    pub fn power(&self, k: usize) -> DMatrix<f64> {
        let m = self.dim();
        let mut p = DMatrix::identity(m, m);
        for _ in 0..k {
            p = &p * &self.matrix;
        }
        p
    }

    /// The basis `v₁..v_m` with `Av_j = v_{j−1}` and anti-diagonal Gram matrix `ε`.
    ///
    /// `w` is the reference vector maximizing `|⟨A^{m−1}w, w⟩|`, scaled so that
    /// this pairing equals `ε`. Then `v_m = Σ c_k A^k w` with `c₀ = 1`, the
    /// coefficients being fixed one at a time by `⟨A^p v_m, v_m⟩ = 0` for
    /// `p = m−2, …, 0`.
    pub fn fit_basis(&self) -> Result<FitBasis> {
        let m = self.dim();
        if m == 0 || self.nilpotent_order() != Some(m) {
            return Err(LabError::NotGenericNilpotent);
        }
        let g = self.space.gram();
        let top = g * self.power(m - 1);
        let (best, val) = (0..m)
            .map(|i| (i, top[(i, i)]))
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        if val.abs() < 1e-300 {
            return Err(LabError::NotGenericNilpotent);
        }
        let epsilon = val.signum();
        let mut w = DVector::zeros(m);
        w[best] = 1.0 / val.abs().sqrt();

        let mut powers_w = Vec::with_capacity(m);
        powers_w.push(w.clone());
        for k in 1..m {
            let next = &self.matrix * &powers_w[k - 1];
            powers_w.push(next);
        }
        let beta: Vec<f64> = (0..m).map(|j| self.space.inner(&powers_w[j], &w)).collect();
        let mut c = vec![0.0; m];
        c[0] = 1.0;
        for d in 1..m {
            let p = m - 1 - d;
            let mut sum = 0.0;
            for k in 0..d {
                for l in 0..d {
                    if k + l <= d {
                        sum += c[k] * c[l] * beta[p + k + l];
                    }
                }
            }
            c[d] = -sum / (2.0 * beta[m - 1]);
        }
        let mut vm = DVector::zeros(m);
        for (k, ck) in c.iter().enumerate() {
            vm += &powers_w[k] * *ck;
        }
        let mut vectors = vec![DVector::zeros(m); m];
        vectors[m - 1] = vm;
        for j in (0..m - 1).rev() {
            vectors[j] = &self.matrix * &vectors[j + 1];
        }
        Ok(FitBasis { space: self.space.clone(), vectors, epsilon })
    }
}

/// A basis adapted to a generic nilpotent endomorphism.
#[derive(Debug, Clone, PartialEq)]
pub struct FitBasis {
    pub space: PseudoEuclideanSpace,
    pub vectors: Vec<DVector<f64>>,
    pub epsilon: f64,
}

impl FitBasis {
    /// Columns `v₁..v_m`.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.vectors)
    }

    /// The nilpotent shift `v_j ↦ v_{j−1}` expressed in the reference basis.
    pub fn shift(&self) -> DMatrix<f64> {
        let m = self.vectors.len();
        let p = self.matrix();
        let s = DMatrix::from_fn(m, m, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        &p * s * p.try_inverse().expect("basis is invertible")
    }

    /// Max violation of `Av_j = v_{j−1}` and of the anti-diagonal Gram pattern.
    pub fn invariants_residual(&self, a: &Endo) -> f64 {
        let m = self.vectors.len();
        let mut res = 0.0_f64;
        for j in 0..m {
            let av = &a.matrix * &self.vectors[j];
            let target = if j == 0 { DVector::zeros(m) } else { self.vectors[j - 1].clone() };
            res = res.max((av - target).amax());
            for k in 0..m {
                let want = if j + k + 1 == m { self.epsilon } else { 0.0 };
                res = res.max((self.space.inner(&self.vectors[j], &self.vectors[k]) - want).abs());
            }
        }
        res
    }

    /// `C v_j = δ q^{m+1−2j} v_j` in the reference basis.
    pub fn scaling_isometry(&self, q: f64, delta: f64) -> Result<Endo> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(LabError::InvalidParameter(format!("scaling factor q = {q} must be positive")));
        }
        if delta != 1.0 && delta != -1.0 {
            return Err(LabError::InvalidParameter(format!("sign δ = {delta} must be ±1")));
        }
        let m = self.vectors.len();
        let p = self.matrix();
        let d = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                let jj = (i + 1) as i32;
                delta * q.powi(m as i32 + 1 - 2 * jj)
            } else {
                0.0
            }
        });
        let c = &p * d * p.try_inverse().expect("basis is invertible");
        Ok(Endo::new(self.space.clone(), c))
    }

    /// Expresses a reference-basis endomorphism in this basis.
    pub fn in_basis(&self, e: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.matrix();
        p.clone().try_inverse().expect("basis is invertible") * e * p
    }
}

/// Relative residuals of `CᵀGC = G` and `CA = q²AC`, each scaled by the
/// magnitudes of the products involved.
pub fn scaling_residuals(a: &Endo, c: &Endo, q: f64) -> (f64, f64) {
    let g = a.space.gram();
    let cn = max_abs(&c.matrix).max(1.0);
    let iso = a.space.isometry_residual(&c.matrix) / (cn * cn * max_abs(g));
    let lhs = &c.matrix * &a.matrix;
    let rhs = &a.matrix * &c.matrix * (q * q);
    let equi = max_abs(&(&lhs - &rhs)) / (max_abs(&lhs).max(max_abs(&rhs)).max(f64::MIN_POSITIVE));
    (iso, equi)
}

/// Fraction of random traceless self-adjoint perturbations of norm `≤ scale`
/// that pass the genericity test; `None` for an empty sample.
pub fn density_experiment<R: Rng + ?Sized>(
    a: &Endo,
    n_trials: usize,
    scale: f64,
    rng: &mut R,
) -> Option<f64> {
    if n_trials == 0 {
        return None;
    }
    let mut hits = 0usize;
    for _ in 0..n_trials {
        let radius = scale * rng.gen_range(f64::EPSILON..=1.0);
        let delta = a.space.random_traceless_selfadjoint(rng, radius);
        let trial = Endo::new(a.space.clone(), &a.matrix + delta);
        if matches!(trial.genericity_test(), Ok(g) if g.generic) {
            hits += 1;
        }
    }
    Some(hits as f64 / n_trials as f64)
}

/// Canonical generic nilpotent data: anti-diagonal Gram `ε` and the shift
/// `e_j ↦ e_{j−1}`.
pub fn canonical_nilpotent(m: usize, epsilon: f64) -> Endo {
    let space = PseudoEuclideanSpace::antidiagonal(m, epsilon);
    let a = DMatrix::from_fn(m, m, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
    Endo::new(space, a)
}
