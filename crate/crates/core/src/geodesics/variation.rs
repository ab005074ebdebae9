//! Variations of a `t`-parametrized transverse curve `y` by sections `z` of
//! the leaf distribution, chosen so that `t ↦ exp_{y(t)} z(t)` is a geodesic.
//!
//! The section solves
//! `∇_ẏ∇_ẏ z + R(z,ẏ)ẏ + ∇_ẏẏ = −Q(z) w/4` with `w = 2∂_s` and
//! `Q(z) = a (⟨Aη,η⟩)˙ + b f (⟨η,η⟩)˙ + c ḟ ⟨η,η⟩`, `η` the V-block of `z`.
//! Leaves are flat and totally geodesic with vanishing chart Christoffels, so
//! `exp_{y(t)} z(t) = y(t) + z(t)` in the chart.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::exp_map;
use super::geodesic;
use super::transport::{gamma_contract, poly_deriv, poly_eval};
use crate::error::{LabError, Result};
use crate::model_geometry::{apply_riemann, christoffel_and_riemann, ChartPoint, ModelManifold, S, T, V0};
use crate::ode::Dopri5;

/// Coefficients `(a, b, c)` of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QVariant {
    /// `(4, 4, 2)`: the coefficients for which `y + z` is a geodesic.
    Geodesic,
    /// `(3, 3, 2)` as written in the source formula.
    Literal,
    Zero,
}

impl QVariant {
    pub fn coefficients(self) -> (f64, f64, f64) {
        match self {
            QVariant::Geodesic => (4.0, 4.0, 2.0),
            QVariant::Literal => (3.0, 3.0, 2.0),
            QVariant::Zero => (0.0, 0.0, 0.0),
        }
    }
}

/// `y(t) = (t, a(t), b(t))` with polynomial `a` and V-valued polynomial `b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransverseCurve {
    pub s_coeffs: Vec<f64>,
    pub v_coeffs: Vec<Vec<f64>>,
}

impl TransverseCurve {
    /// `v_coeffs[i]` are the ascending coefficients of `vⁱ(t)`.
    pub fn new(s_coeffs: Vec<f64>, v_coeffs: Vec<Vec<f64>>) -> Self {
        Self { s_coeffs, v_coeffs }
    }

    /// `(t, s0 + σ t, 0)`, a geodesic of every model.
    pub fn s_line(m: usize, s0: f64, sigma: f64) -> Self {
        Self { s_coeffs: vec![s0, sigma], v_coeffs: vec![vec![0.0]; m] }
    }

    /// Coefficients uniform in `[−scale, scale]`, expanded about `center`.
    pub fn random<R: Rng + ?Sized>(m: usize, degree: usize, center: f64, scale: f64, rng: &mut R) -> Self {
        let mut draw = || -> Vec<f64> {
            let local: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-scale..scale)).collect();
            shift_poly(&local, center)
        };
        let s_coeffs = draw();
        let v_coeffs = (0..m).map(|_| draw()).collect();
        Self { s_coeffs, v_coeffs }
    }

    pub fn m(&self) -> usize {
        self.v_coeffs.len()
    }

    fn eval(&self, t: f64, order: usize) -> Vec<f64> {
        let d = |c: &[f64]| {
            let mut c = c.to_vec();
            for _ in 0..order {
                c = poly_deriv(&c);
            }
            poly_eval(&c, t)
        };
        let mut out = vec![0.0; self.m() + 2];
        out[T] = match order {
            0 => t,
            1 => 1.0,
            _ => 0.0,
        };
        out[S] = d(&self.s_coeffs);
        for (i, c) in self.v_coeffs.iter().enumerate() {
            out[V0 + i] = d(c);
        }
        out
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        self.eval(t, 0)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        self.eval(t, 1)
    }

    pub fn acceleration(&self, t: f64) -> Vec<f64> {
        self.eval(t, 2)
    }
}

/// Coefficients of `p(t − center)` in powers of `t`.
fn shift_poly(local: &[f64], center: f64) -> Vec<f64> {
    let mut out = vec![0.0; local.len()];
    // (t − c)^k expanded by repeated multiplication
    let mut power = vec![1.0];
    for &a in local {
        for (i, p) in power.iter().enumerate() {
            out[i] += a * p;
        }
        let mut next = vec![0.0; power.len() + 1];
        for (i, p) in power.iter().enumerate() {
            next[i + 1] += p;
            next[i] -= center * p;
        }
        power = next;
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationSample {
    pub t: f64,
    #[serde(with = "crate::linalg::serde_dvector")]
    pub z: DVector<f64>,
    /// Chart derivative `ż`.
    #[serde(with = "crate::linalg::serde_dvector")]
    pub zdot: DVector<f64>,
    #[serde(with = "crate::linalg::serde_dvector")]
    pub nabla_z: DVector<f64>,
    pub q: f64,
    /// Solves `μ̈ = Q_geo(z)/4`, `μ = μ̇ = 0` at the start: when `z` solves the
    /// equation with `Q = 0`, `z − μw` solves it with the geodesic `Q`.
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationField {
    pub variant: QVariant,
    pub samples: Vec<VariationSample>,
}

impl VariationField {
    pub fn q_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.q).collect()
    }
}

struct Frame {
    yd: Vec<f64>,
    gamma: Vec<f64>,
    riemann: Vec<f64>,
    nabla_yy: Vec<f64>,
    f: f64,
    fd: f64,
}

fn frame(model: &ModelManifold, y: &TransverseCurve, t: f64) -> Result<Frame> {
    let n = model.n();
    let p = ChartPoint::from_coords(&y.point(t));
    let (gamma, riemann) = christoffel_and_riemann(&model.jet(&p)?);
    let yd = y.velocity(t);
    let ydd = y.acceleration(t);
    let g = gamma_contract(&gamma, n, &yd, &yd);
    let nabla_yy = (0..n).map(|a| ydd[a] + g[a]).collect();
    let [f, fd, _, _] = model.f().derivs(t);
    Ok(Frame { yd, gamma, riemann, nabla_yy, f, fd })
}

fn q_of(model: &ModelManifold, (a, b, c): (f64, f64, f64), fr: &Frame, eta: &[f64], eta_dot: &[f64]) -> f64 {
    let eta = DVector::from_column_slice(eta);
    let eta_dot = DVector::from_column_slice(eta_dot);
    let gram = model.gram();
    let geta = gram * &eta;
    let aeta = gram * (&model.a().matrix * &eta);
    let d_aa = 2.0 * aeta.dot(&eta_dot);
    let d_ee = 2.0 * geta.dot(&eta_dot);
    a * d_aa + b * fr.f * d_ee + c * fr.fd * eta.dot(&geta)
}

/// Chart derivative of the state `(Z, P = ∇_ẏZ, μ, μ̇)` and the value of `Q`.
fn variation_rhs(model: &ModelManifold, variant: QVariant, fr: &Frame, y: &[f64], dy: &mut [f64]) -> f64 {
    let n = model.n();
    let (z, p) = (&y[..n], &y[n..2 * n]);
    let gz = gamma_contract(&fr.gamma, n, &fr.yd, z);
    let gp = gamma_contract(&fr.gamma, n, &fr.yd, p);
    let rz = apply_riemann(n, &fr.riemann, z, &fr.yd, &fr.yd);
    for a in 0..n {
        dy[a] = p[a] - gz[a];
    }
    let eta = &z[V0..];
    let eta_dot: Vec<f64> = dy[V0..n].to_vec();
    let q = q_of(model, variant.coefficients(), fr, eta, &eta_dot);
    let q_geo = q_of(model, QVariant::Geodesic.coefficients(), fr, eta, &eta_dot);
    for a in 0..n {
        dy[n + a] = -gp[a] - rz[a] - fr.nabla_yy[a];
    }
    // −Q w/4 with w = 2∂_s
    dy[n + S] -= 0.5 * q;
    dy[2 * n] = y[2 * n + 1];
    dy[2 * n + 1] = 0.25 * q_geo;
    q
}

/// Solves the variation equation on `[t0, t1]` from `z(t0) = z0`,
/// `ż(t0) = zdot0` (chart derivative), sampling `n_samples` equally spaced
/// times. Both vectors must have zero `t`-component.
pub fn solve_variation(
    model: &ModelManifold,
    y: &TransverseCurve,
    (t0, t1): (f64, f64),
    z0: &DVector<f64>,
    zdot0: &DVector<f64>,
    variant: QVariant,
    n_samples: usize,
) -> Result<VariationField> {
    let n = model.n();
    if y.m() != model.m() {
        return Err(LabError::DimensionMismatch { expected: model.m(), got: y.m() });
    }
    for v in [z0, zdot0] {
        if v.len() != n {
            return Err(LabError::DimensionMismatch { expected: n, got: v.len() });
        }
        if v[T] != 0.0 {
            return Err(LabError::InvalidParameter("variation vectors must be tangent to the leaves (zero dt-component)".into()));
        }
    }
    if n_samples < 2 {
        return Err(LabError::InvalidParameter("variation needs at least 2 samples".into()));
    }
    let interval = model.interval();
    interval.check(t0)?;
    interval.check(t1)?;

    let fr0 = frame(model, y, t0)?;
    let g0 = gamma_contract(&fr0.gamma, n, &fr0.yd, z0.as_slice());
    let mut state: Vec<f64> = z0.iter().copied().collect();
    state.extend((0..n).map(|a| zdot0[a] + g0[a]));
    state.extend([0.0, 0.0]);

    let mut failure = None;
    let rhs = |t: f64, s: &[f64], ds: &mut [f64]| match frame(model, y, t) {
        Ok(fr) => {
            variation_rhs(model, variant, &fr, s, ds);
        }
        Err(e) => {
            failure.get_or_insert(e);
            ds.fill(f64::NAN);
        }
    };
    let times: Vec<f64> = (0..n_samples).map(|k| t0 + (t1 - t0) * k as f64 / (n_samples - 1) as f64).collect();
    let states = Dopri5::default().integrate_to_times(rhs, t0, &state, &times);
    if let Some(e) = failure {
        return Err(e);
    }
    let mut samples = Vec::with_capacity(n_samples);
    let mut ds = vec![0.0; 2 * n + 2];
    for (s, &t) in states?.iter().zip(&times) {
        let fr = frame(model, y, t)?;
        let q = variation_rhs(model, variant, &fr, s, &mut ds);
        samples.push(VariationSample {
            t,
            z: DVector::from_column_slice(&s[..n]),
            zdot: DVector::from_column_slice(&ds[..n]),
            nabla_z: DVector::from_column_slice(&s[n..2 * n]),
            q,
            mu: s[2 * n],
        });
    }
    Ok(VariationField { variant, samples })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationOutcome {
    pub field: VariationField,
    /// Max over samples of `|x − x_geo|, |ẋ − ẋ_geo|` (relative to
    /// `max(1, |ẋ|)`), with `x_geo` the geodesic through `x(t0), ẋ(t0)`.
    pub geodesic_residual: f64,
    /// Max `|exp_{y(t)} z(t) − (y(t) + z(t))|` over a few samples.
    pub exp_residual: f64,
    #[serde(with = "crate::linalg::serde_dvector")]
    pub realized_velocity: DVector<f64>,
}

/// Forms `x(t) = y(t) + z(t)` from a solved field and compares it with an
/// independently integrated geodesic.
pub fn variation_outcome(model: &ModelManifold, y: &TransverseCurve, field: VariationField) -> Result<VariationOutcome> {
    let first = &field.samples[0];
    let last = field.samples.last().expect("at least two samples");
    let x_of = |s: &VariationSample| DVector::from_vec(y.point(s.t)) + &s.z;
    let xd_of = |s: &VariationSample| DVector::from_vec(y.velocity(s.t)) + &s.zdot;
    let x0 = x_of(first);
    let xd0 = xd_of(first);
    // ẋ^t = 1, so the affine parameter is t itself
    let geo = geodesic(model, &ChartPoint::from_coords(x0.as_slice()), &xd0, (first.t, last.t), field.samples.len())?;
    if geo.samples.len() != field.samples.len() {
        return Err(LabError::OutsideInterval {
            t: geo.last().point.t,
            lo: model.interval().lo.unwrap_or(f64::NEG_INFINITY),
            hi: model.interval().hi.unwrap_or(f64::INFINITY),
        });
    }
    let mut residual = 0.0_f64;
    for (s, g) in field.samples.iter().zip(&geo.samples) {
        let dx = (x_of(s) - g.point.coords()).amax();
        let xd = xd_of(s);
        let dv = (&xd - &g.velocity).amax();
        residual = residual.max(dx.max(dv) / xd.amax().max(1.0));
    }
    let mut exp_residual = 0.0_f64;
    let k = field.samples.len();
    for s in [&field.samples[0], &field.samples[k / 2], &field.samples[k - 1]] {
        let base = ChartPoint::from_coords(&y.point(s.t));
        let (p, _) = exp_map(model, &base, &s.z)?;
        exp_residual = exp_residual.max((p.coords() - x_of(s)).amax());
    }
    Ok(VariationOutcome { field, geodesic_residual: residual, exp_residual, realized_velocity: xd0 })
}

/// Solves with `z(t0) = 0`, `ż(t0) = X − ẏ(t0)` so that `x = y + z` leaves
/// `y(t0)` with velocity `X`; needs `X^t = 1`.
pub fn realize_velocity(
    model: &ModelManifold,
    y: &TransverseCurve,
    span: (f64, f64),
    target: &DVector<f64>,
    n_samples: usize,
) -> Result<VariationOutcome> {
    let n = model.n();
    if target.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: target.len() });
    }
    if (target[T] - 1.0).abs() > 1e-12 {
        return Err(LabError::InvalidParameter(format!("target velocity must have dt-component 1, got {}", target[T])));
    }
    let mut zdot0 = target - DVector::from_vec(y.velocity(span.0));
    zdot0[T] = 0.0;
    let field = solve_variation(model, y, span, &DVector::zeros(n), &zdot0, QVariant::Geodesic, n_samples)?;
    variation_outcome(model, y, field)
}
