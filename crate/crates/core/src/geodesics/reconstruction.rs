//! The map `F(t, s, v) = exp_{x(t)}(v̂(t) + s ∂_s)` built along a
//! `t`-parametrized null geodesic `x`, where `v̂(t)` is the parallel field
//! along `x` orthogonal to `ẋ` with V-block `v`. In the chart
//! `v̂(t) = (0, −2⟨v, ẋ_V(t)⟩, v)` and the exponential is a straight line.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::geodesic_rhs;
use crate::error::{LabError, Result};
use crate::model_geometry::{ChartPoint, ModelManifold, S, T, V0};
use crate::ode::Dopri5;

/// Step of the four-point `t`-stencil.
const T_STEP: f64 = 1e-3;
const V_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReconstructionReport {
    /// `max |F*g − g|` over the evaluation points.
    pub pullback_residual: f64,
    /// `max |t(F(t,s,v)) − t|`.
    pub leaf_residual: f64,
    /// `|g(ẋ,ẋ)|` at the start.
    pub null_residual: f64,
    /// `g(ẋ, w)` with `w = 2∂_s`; must stay away from 0.
    pub transversality: f64,
    pub points: usize,
}

/// `(1, −κ − ⟨X_V, X_V⟩, X_V)`, the null vector with `dt`-component 1 and
/// V-block `xv`.
pub fn null_velocity(model: &ModelManifold, p: &ChartPoint, xv: &DVector<f64>) -> Result<DVector<f64>> {
    if xv.len() != model.m() {
        return Err(LabError::DimensionMismatch { expected: model.m(), got: xv.len() });
    }
    let kappa = model.kappa(p)?;
    let mut out = DVector::zeros(model.n());
    out[T] = 1.0;
    out[S] = -kappa - model.space().inner(xv, xv);
    out.rows_mut(V0, model.m()).copy_from(xv);
    Ok(out)
}

/// Geodesic states `(x, ẋ)` at each of `times`, integrating from `t0` in
/// both directions (the parameter equals `t` because `ẋ^t = 1`).
fn states_at(model: &ModelManifold, x0: &ChartPoint, v0: &DVector<f64>, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let y0: Vec<f64> = x0.coords().iter().chain(v0.iter()).copied().collect();
    let mut idx: Vec<usize> = (0..times.len()).collect();
    idx.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let (back, fwd): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| times[i] < x0.t);
    let solver = Dopri5::default();
    let mut out = vec![Vec::new(); times.len()];
    let fwd_times: Vec<f64> = fwd.iter().map(|&i| times[i]).collect();
    for (i, y) in fwd.iter().zip(solver.integrate_to_times(geodesic_rhs(model), x0.t, &y0, &fwd_times)?) {
        out[*i] = y;
    }
    let back_rev: Vec<usize> = back.into_iter().rev().collect();
    let back_times: Vec<f64> = back_rev.iter().map(|&i| times[i]).collect();
    for (i, y) in back_rev.iter().zip(solver.integrate_to_times(geodesic_rhs(model), x0.t, &y0, &back_times)?) {
        out[*i] = y;
    }
    Ok(out)
}

fn f_map(state: &[f64], n: usize, s: f64, v: &[f64], gram: &DMatrix<f64>) -> DVector<f64> {
    let m = n - 2;
    let xv_dot = DVector::from_column_slice(&state[n + V0..2 * n]);
    let vv = DVector::from_column_slice(v);
    let mut out = DVector::from_column_slice(&state[..n]);
    out[S] += s - 2.0 * (gram * vv).dot(&xv_dot);
    for i in 0..m {
        out[V0 + i] += v[i];
    }
    out
}

/// Evaluates the pullback of the metric under `F` at each `(t, s, v)` of
/// `points`, along the null geodesic leaving `x0` with V-velocity `xv0`.
/// `∂_s F` is exact; `∂_t F` uses a four-point central stencil and `∂_v F`
/// central differences.
pub fn reconstruction_residual(
    model: &ModelManifold,
    x0: &ChartPoint,
    xv0: &DVector<f64>,
    points: &[ChartPoint],
) -> Result<ReconstructionReport> {
    let n = model.n();
    let m = model.m();
    let gram = model.gram().clone();
    let v0 = null_velocity(model, x0, xv0)?;
    let null_residual = model.inner_at(x0, v0.as_slice(), v0.as_slice())?.abs();
    let mut w = DVector::zeros(n);
    w[S] = 2.0;
    let transversality = model.inner_at(x0, v0.as_slice(), w.as_slice())?;
    if transversality.abs() < 1e-12 {
        return Err(LabError::Degenerate("null geodesic tangent to the leaves".into()));
    }
    let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut times = Vec::with_capacity(points.len() * offsets.len());
    for p in points {
        if p.v.len() != m {
            return Err(LabError::DimensionMismatch { expected: m, got: p.v.len() });
        }
        for o in offsets {
            let t = p.t + o * T_STEP;
            model.interval().check(t)?;
            times.push(t);
        }
    }
    let states = states_at(model, x0, &v0, &times)?;

    let mut pullback_residual = 0.0_f64;
    let mut leaf_residual = 0.0_f64;
    for (k, p) in points.iter().enumerate() {
        let st = |j: usize| &states[k * offsets.len() + j];
        let v = p.v.as_slice();
        let image = f_map(st(2), n, p.s, v, &gram);
        leaf_residual = leaf_residual.max((image[T] - p.t).abs());

        let mut jac = DMatrix::zeros(n, n);
        let ft = (f_map(st(0), n, p.s, v, &gram) - f_map(st(1), n, p.s, v, &gram) * 8.0
            + f_map(st(3), n, p.s, v, &gram) * 8.0
            - f_map(st(4), n, p.s, v, &gram))
            / (12.0 * T_STEP);
        jac.set_column(T, &ft);
        jac[(S, S)] = 1.0;
        for j in 0..m {
            let mut vp = v.to_vec();
            let mut vm = v.to_vec();
            vp[j] += V_STEP;
            vm[j] -= V_STEP;
            let col = (f_map(st(2), n, p.s, &vp, &gram) - f_map(st(2), n, p.s, &vm, &gram)) / (2.0 * V_STEP);
            jac.set_column(V0 + j, &col);
        }
        let g_image = model.metric_at(&ChartPoint::from_coords(image.as_slice()))?;
        let pulled = jac.transpose() * g_image * &jac;
        let target = model.metric_at(p)?;
        pullback_residual = pullback_residual.max((pulled - target).amax());
    }
    Ok(ReconstructionReport { pullback_residual, leaf_residual, null_residual, transversality, points: points.len() })
}
