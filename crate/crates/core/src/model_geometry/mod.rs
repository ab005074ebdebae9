//! The model manifolds `I × ℝ × V` with metric `κ dt² + dt ds + ⟨·,·⟩`,
//! `κ = f(t)⟨v,v⟩ + ⟨Av,v⟩`, in chart order `(t, s, v¹..v^m)`.
//!
//! `dt ds` is the symmetric product, so `g_ts = 1/2`.

pub mod curvature;
pub mod profile;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use curvature::{apply_riemann, christoffel, christoffel_and_riemann, CurvaturePack, MetricJet};
pub use profile::{Interval, ProfileF, ProfileKind};

use crate::error::{LabError, Result};
use crate::linalg::{max_abs, max_abs_slice};
use crate::pseudo_linear::{Endo, PseudoEuclideanSpace};

/// Chart index of `t`.
pub const T: usize = 0;
/// Chart index of `s`.
pub const S: usize = 1;
/// Chart index of `v¹`.
pub const V0: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub t: f64,
    pub s: f64,
    #[serde(with = "crate::linalg::serde_dvector")]
    pub v: DVector<f64>,
}

impl ChartPoint {
    pub fn new(t: f64, s: f64, v: DVector<f64>) -> Self {
        Self { t, s, v }
    }

    pub fn coords(&self) -> DVector<f64> {
        let m = self.v.len();
        DVector::from_fn(m + 2, |i, _| match i {
            T => self.t,
            S => self.s,
            _ => self.v[i - V0],
        })
    }

    pub fn from_coords(x: &[f64]) -> Self {
        Self { t: x[T], s: x[S], v: DVector::from_column_slice(&x[V0..]) }
    }
}

/// Residuals of the null parallel field `∂_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlszakResiduals {
    /// `|g(∂_s, ∂_s)|`
    pub null_residual: f64,
    /// `max |Γ^a_{bs}|`, the components of `∇∂_s`
    pub parallel_residual: f64,
    /// `max |g(2∂_s, ·) − dt|`
    pub dt_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifold {
    a: Endo,
    f: ProfileF,
    ecs: bool,
}

impl ModelManifold {
    /// Validated model: nondegenerate Gram form, `A` traceless self-adjoint and
    /// nonzero, `f` nonconstant.
    pub fn new(a: Endo, f: ProfileF) -> Result<Self> {
        a.space.validate()?;
        let m = a.dim();
        if m < 2 {
            return Err(LabError::InvalidParameter("the model needs n ≥ 4, i.e. dim V ≥ 2".into()));
        }
        let v = a.validate_a()?;
        let scale = max_abs(&a.matrix).max(1.0);
        if v.selfadjoint_residual > 1e-10 * scale {
            return Err(LabError::NotSelfAdjoint { residual: v.selfadjoint_residual });
        }
        if v.trace.abs() > 1e-10 * scale {
            return Err(LabError::InvalidParameter(format!("A has trace {:e}", v.trace)));
        }
        if max_abs(&a.matrix) == 0.0 {
            return Err(LabError::InvalidParameter("A must be nonzero".into()));
        }
        if !f.is_nonconstant() {
            return Err(LabError::InvalidParameter("profile f must be nonconstant".into()));
        }
        Ok(Self { a, f, ecs: true })
    }

    /// Unvalidated model, e.g. the flat `A = 0, f = 0` case.
    pub fn raw(a: Endo, f: ProfileF) -> Self {
        Self { a, f, ecs: false }
    }

    pub fn is_ecs(&self) -> bool {
        self.ecs
    }

    pub fn m(&self) -> usize {
        self.a.dim()
    }

    pub fn n(&self) -> usize {
        self.m() + 2
    }

    pub fn space(&self) -> &PseudoEuclideanSpace {
        &self.a.space
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        self.a.space.gram()
    }

    pub fn a(&self) -> &Endo {
        &self.a
    }

    pub fn f(&self) -> &ProfileF {
        &self.f
    }

    pub fn interval(&self) -> Interval {
        self.f.interval()
    }

    /// Same geometry with `A` replaced by `λA`.
    pub fn with_scaled_a(&self, lambda: f64) -> Self {
        Self { a: Endo::new(self.a.space.clone(), &self.a.matrix * lambda), f: self.f.clone(), ecs: self.ecs }
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.v.len() != self.m() {
            return Err(LabError::DimensionMismatch { expected: self.m(), got: p.v.len() });
        }
        self.interval().check(p.t)
    }

    /// Symmetric part of `GA`, the form `v ↦ ⟨Av, v⟩`.
    fn k_form(&self) -> DMatrix<f64> {
        let k = self.gram() * &self.a.matrix;
        (&k + k.transpose()) * 0.5
    }

    pub fn kappa(&self, p: &ChartPoint) -> Result<f64> {
        self.check_point(p)?;
        let f = self.f.value(p.t);
        let g = self.gram();
        Ok(f * (p.v.transpose() * g * &p.v)[(0, 0)] + (p.v.transpose() * self.k_form() * &p.v)[(0, 0)])
    }

    pub fn metric_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let kappa = self.kappa(p)?;
        let m = self.m();
        let mut g = DMatrix::zeros(m + 2, m + 2);
        g[(T, T)] = kappa;
        g[(T, S)] = 0.5;
        g[(S, T)] = 0.5;
        g.view_mut((V0, V0), (m, m)).copy_from(self.gram());
        Ok(g)
    }

    pub fn metric_inverse_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let kappa = self.kappa(p)?;
        let m = self.m();
        let mut h = DMatrix::zeros(m + 2, m + 2);
        h[(T, S)] = 2.0;
        h[(S, T)] = 2.0;
        h[(S, S)] = -4.0 * kappa;
        h.view_mut((V0, V0), (m, m)).copy_from(&self.a.space.gram_inverse());
        Ok(h)
    }

    /// Closed-form 3-jet of the metric; only `g_tt = κ` varies.
    pub fn jet(&self, p: &ChartPoint) -> Result<MetricJet> {
        let g = self.metric_at(p)?;
        let n = self.n();
        let m = self.m();
        let [f0, f1, f2, f3] = self.f.derivs(p.t);
        let gram = self.gram();
        let gv = gram * &p.v;
        let vv = p.v.dot(&gv);
        let k = self.k_form();
        let kv = &k * &p.v;

        let i3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let i4 = |a: usize, b: usize, c: usize, d: usize| i3(a, b, c) * n + d;
        let i5 = |a: usize, b: usize, c: usize, d: usize, e: usize| i4(a, b, c, d) * n + e;

        let mut jet = MetricJet::zeros(n);
        jet.g = g;
        jet.dg[i3(T, T, T)] = f1 * vv;
        for i in 0..m {
            jet.dg[i3(V0 + i, T, T)] = 2.0 * (f0 * gv[i] + kv[i]);
        }
        jet.d2g[i4(T, T, T, T)] = f2 * vv;
        for i in 0..m {
            let x = 2.0 * f1 * gv[i];
            jet.d2g[i4(T, V0 + i, T, T)] = x;
            jet.d2g[i4(V0 + i, T, T, T)] = x;
            for j in 0..m {
                jet.d2g[i4(V0 + i, V0 + j, T, T)] = 2.0 * (f0 * gram[(i, j)] + k[(i, j)]);
            }
        }
        jet.d3g[i5(T, T, T, T, T)] = f3 * vv;
        for i in 0..m {
            let x = 2.0 * f2 * gv[i];
            let vi = V0 + i;
            jet.d3g[i5(T, T, vi, T, T)] = x;
            jet.d3g[i5(T, vi, T, T, T)] = x;
            jet.d3g[i5(vi, T, T, T, T)] = x;
            for j in 0..m {
                let vj = V0 + j;
                let y = 2.0 * f1 * gram[(i, j)];
                jet.d3g[i5(T, vi, vj, T, T)] = y;
                jet.d3g[i5(vi, T, vj, T, T)] = y;
                jet.d3g[i5(vi, vj, T, T, T)] = y;
            }
        }
        Ok(jet)
    }

    /// `Γ^a_{bc}` in the layout of [`CurvaturePack::christoffel`].
    pub fn christoffel_at(&self, p: &ChartPoint) -> Result<Vec<f64>> {
        let jet = self.jet(p)?;
        let ginv = self.metric_inverse_at(p)?;
        Ok(christoffel(&ginv, &jet.dg))
    }

    pub fn curvature_at(&self, p: &ChartPoint) -> Result<CurvaturePack> {
        Ok(CurvaturePack::from_jet(&self.jet(p)?))
    }

    /// Closed-form `−Γ^a_{bc} ẋ^b ẋ^c`: with `ẋ = (τ, σ, ν)` this is
    /// `(0, −f′⟨v,v⟩τ² − 2τ ∂_νκ, τ²(f + A)v)`.
    pub fn geodesic_acceleration(&self, x: &[f64], xdot: &[f64]) -> Vec<f64> {
        let m = self.m();
        let t = x[T];
        let tau = xdot[T];
        let v = DVector::from_column_slice(&x[V0..]);
        let nu = DVector::from_column_slice(&xdot[V0..]);
        let [f0, f1, _, _] = self.f.derivs(t);
        let gram = self.gram();
        let gv = gram * &v;
        let fv_av = &v * f0 + &self.a.matrix * &v;
        // ∂_ν κ = 2⟨(f + A)v, ν⟩
        let dk = 2.0 * (gram * &fv_av).dot(&nu);
        let mut out = vec![0.0; m + 2];
        out[S] = -f1 * v.dot(&gv) * tau * tau - 2.0 * tau * dk;
        for i in 0..m {
            out[V0 + i] = tau * tau * fv_av[i];
        }
        out
    }

    /// Max `|Γ^•_{ab}|` over leaf indices `a, b ∈ {s, v¹..v^m}`. Rescaling
    /// `s ↦ s/2` does not change which symbols vanish.
    pub fn christoffel_pattern_check(&self, p: &ChartPoint) -> Result<f64> {
        let gamma = self.christoffel_at(p)?;
        Ok(leaf_christoffel_max(self.n(), &gamma))
    }

    /// `v ↦ V-block of W(u, v)u` with `u = ∂_t`, the partner of `w = 2∂_s`
    /// under `g(u, w) = 1`.
    pub fn weyl_tidal_operator(&self, p: &ChartPoint) -> Result<Endo> {
        let pack = self.curvature_at(p)?;
        Ok(Endo::new(self.space().clone(), weyl_tidal_from_pack(&pack, self.m(), 1.0)))
    }

    pub fn olszak_span_check(&self, p: &ChartPoint) -> Result<OlszakResiduals> {
        let g = self.metric_at(p)?;
        let gamma = self.christoffel_at(p)?;
        let n = self.n();
        let mut parallel = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                parallel = parallel.max(gamma[(a * n + b) * n + S].abs());
            }
        }
        let mut dt = 0.0_f64;
        for b in 0..n {
            let want = if b == T { 1.0 } else { 0.0 };
            dt = dt.max((2.0 * g[(S, b)] - want).abs());
        }
        Ok(OlszakResiduals { null_residual: g[(S, S)].abs(), parallel_residual: parallel, dt_residual: dt })
    }

    /// Random chart point with `t` in the core of `I` and `s, v` uniform in `[−1, 1]`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ChartPoint {
        let t = self.interval().sample(rng);
        let s = rng.gen_range(-1.0..1.0);
        let v = DVector::from_fn(self.m(), |_, _| rng.gen_range(-1.0..1.0));
        ChartPoint { t, s, v }
    }

    /// `⟨v, w⟩` for chart tangent vectors.
    pub fn inner_at(&self, p: &ChartPoint, x: &[f64], y: &[f64]) -> Result<f64> {
        let g = self.metric_at(p)?;
        let xv = DVector::from_column_slice(x);
        let yv = DVector::from_column_slice(y);
        Ok((xv.transpose() * g * yv)[(0, 0)])
    }
}

/// Max `|Γ^•_{ab}|` with both lower indices tangent to the leaves `t = const`.
pub fn leaf_christoffel_max(n: usize, gamma: &[f64]) -> f64 {
    let mut res = 0.0_f64;
    for a in 0..n {
        for b in 1..n {
            for c in 1..n {
                res = res.max(gamma[(a * n + b) * n + c].abs());
            }
        }
    }
    res
}

/// V-block of `v ↦ W(u, v)u` for `u = λ∂_t`.
pub fn weyl_tidal_from_pack(pack: &CurvaturePack, m: usize, lambda: f64) -> DMatrix<f64> {
    let n = m + 2;
    let mut u = vec![0.0; n];
    u[T] = lambda;
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut y = vec![0.0; n];
        y[V0 + j] = 1.0;
        let w = pack.weyl_apply(&u, &y, &u);
        for i in 0..m {
            out[(i, j)] = w[V0 + i];
        }
    }
    out
}

/// Relative `|∇W|` against `|W|`, or absolute when `W = 0`.
pub fn relative_nabla_weyl(pack: &CurvaturePack) -> f64 {
    let w = pack.max_weyl();
    pack.max_nabla_weyl() / if w > 0.0 { w } else { 1.0 }
}

/// Relative `|∇R|` against `|R|`.
pub fn relative_nabla_riemann(pack: &CurvaturePack) -> f64 {
    let r = pack.max_riemann();
    pack.max_nabla_riemann() / if r > 0.0 { r } else { 1.0 }
}

/// `max |Ric − (2 − n) f(t) dt⊗dt|`.
pub fn ricci_profile_residual(model: &ModelManifold, p: &ChartPoint, pack: &CurvaturePack) -> f64 {
    let n = model.n();
    let mut expected = vec![0.0; n * n];
    expected[T * n + T] = (2.0 - n as f64) * model.f().value(p.t);
    let diff: Vec<f64> = pack.ricci.iter().zip(&expected).map(|(a, b)| a - b).collect();
    max_abs_slice(&diff)
}
