//! Solutions of `ü = f u + A u`, the symplectic form `Ω(u, w) = ⟨u̇, w⟩ − ⟨u, ẇ⟩`
//! and the Heisenberg group `ℝ × 𝓔`.
//!
//! A solution is stored as Cauchy data `(u(t₀), u̇(t₀))` at a base point `t₀`.
//! Flattened Cauchy vectors are `(u, u̇) ∈ ℝ^{2m}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::model_geometry::{Interval, ModelManifold};
use crate::ode::Dopri5;

/// Closest distance to a finite endpoint of `I` that propagation accepts.
pub const BOUNDARY_GAP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionE {
    pub t0: f64,
    #[serde(with = "crate::linalg::serde_dvector")]
    pub value: DVector<f64>,
    #[serde(with = "crate::linalg::serde_dvector")]
    pub deriv: DVector<f64>,
}

impl SolutionE {
    pub fn new(t0: f64, value: DVector<f64>, deriv: DVector<f64>) -> Self {
        Self { t0, value, deriv }
    }

    pub fn zero(m: usize, t0: f64) -> Self {
        Self::new(t0, DVector::zeros(m), DVector::zeros(m))
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    /// `(u(t₀), u̇(t₀))` as one vector.
    pub fn cauchy(&self) -> DVector<f64> {
        let m = self.dim();
        DVector::from_fn(2 * m, |i, _| if i < m { self.value[i] } else { self.deriv[i - m] })
    }

    pub fn from_cauchy(t0: f64, x: &DVector<f64>) -> Self {
        let m = x.len() / 2;
        Self::new(t0, x.rows(0, m).into_owned(), x.rows(m, m).into_owned())
    }

    pub fn check_base(&self, other: &SolutionE) -> Result<()> {
        if (self.t0 - other.t0).abs() > 1e-12 * self.t0.abs().max(1.0) {
            return Err(LabError::BaseMismatch(self.t0, other.t0));
        }
        if self.dim() != other.dim() {
            return Err(LabError::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &SolutionE) -> Result<SolutionE> {
        self.check_base(other)?;
        Ok(Self::new(self.t0, &self.value + &other.value, &self.deriv + &other.deriv))
    }

    pub fn scale(&self, k: f64) -> SolutionE {
        Self::new(self.t0, &self.value * k, &self.deriv * k)
    }

    pub fn neg(&self) -> SolutionE {
        self.scale(-1.0)
    }

    /// Same solution with Cauchy data re-based at `t1`.
    pub fn rebase(&self, model: &ModelManifold, t1: f64) -> Result<SolutionE> {
        let (value, deriv) = propagate(model, self, t1)?;
        Ok(Self::new(t1, value, deriv))
    }
}

/// How [`propagate`] integrates the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Exact reduction for homogeneous profiles with generic nilpotent `A`,
    /// numeric integration otherwise.
    #[default]
    Auto,
    Numeric,
}

fn check_target(interval: Interval, t: f64) -> Result<()> {
    interval.check(t)?;
    let near_lo = interval.lo.is_some_and(|a| t - a < BOUNDARY_GAP);
    let near_hi = interval.hi.is_some_and(|b| b - t < BOUNDARY_GAP);
    if near_lo || near_hi {
        return Err(LabError::StepUnderflow { t });
    }
    Ok(())
}

/// The `2m × 2m` matrix mapping Cauchy data at `t0` to Cauchy data at `t1`.
pub fn fundamental_matrix(model: &ModelManifold, t0: f64, t1: f64) -> Result<DMatrix<f64>> {
    fundamental_matrix_with(model, t0, t1, Propagation::Auto)
}

pub fn fundamental_matrix_with(
    model: &ModelManifold,
    t0: f64,
    t1: f64,
    method: Propagation,
) -> Result<DMatrix<f64>> {
    let interval = model.interval();
    check_target(interval, t0)?;
    check_target(interval, t1)?;
    let m = model.m();
    if t0 == t1 {
        return Ok(DMatrix::identity(2 * m, 2 * m));
    }
    if method == Propagation::Auto {
        if let Some(exact) = HomogeneousFlow::for_model(model) {
            return Ok(exact.fundamental(t0, t1));
        }
    }
    numeric_fundamental(model, t0, t1)
}

fn numeric_fundamental(model: &ModelManifold, t0: f64, t1: f64) -> Result<DMatrix<f64>> {
    let m = model.m();
    let k = 2 * m;
    let a = model.a().matrix.clone();
    let f = model.f().clone();
    // column-major 2m × 2m state
    let y0 = DMatrix::<f64>::identity(k, k);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let ft = f.value(t);
        for col in 0..k {
            let base = col * k;
            for i in 0..m {
                dy[base + i] = y[base + m + i];
                let mut acc = ft * y[base + i];
                for j in 0..m {
                    acc += a[(i, j)] * y[base + j];
                }
                dy[base + m + i] = acc;
            }
        }
    };
    let out = Dopri5::default().integrate(rhs, t0, y0.as_slice(), t1)?;
    Ok(DMatrix::from_column_slice(k, k, &out))
}

/// `(u(t1), u̇(t1))` for the solution with the given Cauchy data.
pub fn propagate(model: &ModelManifold, sol: &SolutionE, t1: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    propagate_with(model, sol, t1, Propagation::Auto)
}

pub fn propagate_with(
    model: &ModelManifold,
    sol: &SolutionE,
    t1: f64,
    method: Propagation,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let m = model.m();
    if sol.dim() != m {
        return Err(LabError::DimensionMismatch { expected: m, got: sol.dim() });
    }
    let phi = fundamental_matrix_with(model, sol.t0, t1, method)?;
    let x = phi * sol.cauchy();
    Ok((x.rows(0, m).into_owned(), x.rows(m, m).into_owned()))
}

/// Exact flow for `f = h/t²` and `A` a generic nilpotent.
///
/// In the fit basis `u = Py` the system reads `ÿ_j = h y_j/t² + y_{j+1}`.
/// With `y_j = t^{p_j} Z_j(ln t)` and `p_{j+1} = p_j − 2` it becomes the
/// constant-coefficient system
/// `Z_j″ = −(2p_j − 1)Z_j′ − (p_j(p_j − 1) − h)Z_j + Z_{j+1}`,
/// solved by one matrix exponential.
#[derive(Debug, Clone)]
pub struct HomogeneousFlow {
    p_basis: DMatrix<f64>,
    p_inv: DMatrix<f64>,
    exponents: Vec<f64>,
    generator: DMatrix<f64>,
}

impl HomogeneousFlow {
    pub fn for_model(model: &ModelManifold) -> Option<Self> {
        let c = model.f().homogeneous_c()?;
        let basis = model.a().fit_basis().ok()?;
        let h = (c * c).re - 0.25;
        let m = model.m();
        let p_basis = basis.matrix();
        let p_inv = p_basis.clone().try_inverse()?;
        // centered exponents keep t^{p_j} moderate on both sides of t = 1
        let exponents: Vec<f64> = (0..m).map(|j| 0.5 + (m as f64 - 1.0) - 2.0 * j as f64).collect();
        let mut generator = DMatrix::zeros(2 * m, 2 * m);
        for j in 0..m {
            let p = exponents[j];
            generator[(j, m + j)] = 1.0;
            generator[(m + j, j)] = -(p * (p - 1.0) - h);
            generator[(m + j, m + j)] = -(2.0 * p - 1.0);
            if j + 1 < m {
                generator[(m + j, j + 1)] = 1.0;
            }
        }
        Some(Self { p_basis, p_inv, exponents, generator })
    }

    /// Cauchy data `(u, u̇)` at `t` to `(Z, Z′)`.
    fn to_z(&self, t: f64) -> DMatrix<f64> {
        let m = self.exponents.len();
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        for j in 0..m {
            let p = self.exponents[j];
            let d = t.powf(-p);
            for k in 0..m {
                let row = self.p_inv[(j, k)];
                out[(j, k)] = d * row;
                // Z′ = t^{1−p} ẏ − p Z
                out[(m + j, m + k)] = t * d * row;
                out[(m + j, k)] = -p * d * row;
            }
        }
        out
    }

    fn from_z(&self, t: f64) -> DMatrix<f64> {
        let m = self.exponents.len();
        let mut y = DMatrix::zeros(2 * m, 2 * m);
        for j in 0..m {
            let p = self.exponents[j];
            let d = t.powf(p);
            // y = t^p Z, ẏ = t^{p−1}(Z′ + pZ)
            y[(j, j)] = d;
            y[(m + j, m + j)] = d / t;
            y[(m + j, j)] = p * d / t;
        }
        let mut lift = DMatrix::zeros(2 * m, 2 * m);
        lift.view_mut((0, 0), (m, m)).copy_from(&self.p_basis);
        lift.view_mut((m, m), (m, m)).copy_from(&self.p_basis);
        lift * y
    }

    pub fn fundamental(&self, t0: f64, t1: f64) -> DMatrix<f64> {
        let flow = (&self.generator * (t1 / t0).ln()).exp();
        self.from_z(t1) * flow * self.to_z(t0)
    }
}

/// `Ω` in flattened Cauchy coordinates: `Ω(x, y) = xᵀ W y` with
/// `W = [[0, −G], [G, 0]]`.
pub fn omega_matrix(gram: &DMatrix<f64>) -> DMatrix<f64> {
    let m = gram.nrows();
    let mut w = DMatrix::zeros(2 * m, 2 * m);
    w.view_mut((0, m), (m, m)).copy_from(&(-gram));
    w.view_mut((m, 0), (m, m)).copy_from(gram);
    w
}

/// `Ω(u, w) = ⟨u̇, w⟩ − ⟨u, ẇ⟩` at the common base point.
pub fn omega(gram: &DMatrix<f64>, u: &SolutionE, w: &SolutionE) -> Result<f64> {
    u.check_base(w)?;
    Ok((u.deriv.transpose() * gram * &w.value)[(0, 0)] - (u.value.transpose() * gram * &w.deriv)[(0, 0)])
}

/// The `2m` solutions with data `(e_i, 0)` followed by `(0, e_i)`.
pub fn basis_e(model: &ModelManifold, t0: f64) -> Result<Vec<SolutionE>> {
    model.interval().check(t0)?;
    let m = model.m();
    let mut out = Vec::with_capacity(2 * m);
    for k in 0..2 * m {
        let mut x = DVector::zeros(2 * m);
        x[k] = 1.0;
        out.push(SolutionE::from_cauchy(t0, &x));
    }
    Ok(out)
}

/// All pairwise `Ω` vanish to `1e−10`.
pub fn isotropic_span_check(gram: &DMatrix<f64>, sols: &[SolutionE]) -> Result<bool> {
    for (i, u) in sols.iter().enumerate() {
        for w in &sols[i + 1..] {
            if omega(gram, u, w)?.abs() > 1e-10 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergElement {
    pub r: f64,
    pub u: SolutionE,
}

impl HeisenbergElement {
    pub fn new(r: f64, u: SolutionE) -> Self {
        Self { r, u }
    }

    pub fn identity(m: usize, t0: f64) -> Self {
        Self::new(0.0, SolutionE::zero(m, t0))
    }

    /// `(r, u)(r̂, û) = (r + r̂ − Ω(u, û), u + û)`.
    pub fn mul(&self, gram: &DMatrix<f64>, other: &HeisenbergElement) -> Result<HeisenbergElement> {
        let w = omega(gram, &self.u, &other.u)?;
        Ok(Self::new(self.r + other.r - w, self.u.add(&other.u)?))
    }

    pub fn inverse(&self) -> HeisenbergElement {
        Self::new(-self.r, self.u.neg())
    }
}
