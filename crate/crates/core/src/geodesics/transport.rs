//! Parallel transport along chart curves and the affine-field property of
//! leaf curves.

use std::f64::consts::TAU;

use nalgebra::DVector;

use super::{geodesic_rhs, sample_from_state, GeodesicSample};
use crate::error::{LabError, Result};
use crate::model_geometry::{ChartPoint, ModelManifold, T};
use crate::ode::Dopri5;

/// A differentiable curve in chart coordinates.
pub trait Curve {
    fn point(&self, tau: f64) -> Vec<f64>;
    fn velocity(&self, tau: f64) -> Vec<f64>;
}

/// Each chart coordinate a polynomial in `τ` (ascending coefficients).
#[derive(Debug, Clone)]
pub struct PolyCurve {
    pub coeffs: Vec<Vec<f64>>,
}

impl PolyCurve {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Self {
        Self { coeffs }
    }

    /// `x0 + τ v`.
    pub fn line(x0: &[f64], v: &[f64]) -> Self {
        Self { coeffs: x0.iter().zip(v).map(|(a, b)| vec![*a, *b]).collect() }
    }
}

pub(crate) fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

pub(crate) fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect()
}

impl Curve for PolyCurve {
    fn point(&self, tau: f64) -> Vec<f64> {
        self.coeffs.iter().map(|c| poly_eval(c, tau)).collect()
    }

    fn velocity(&self, tau: f64) -> Vec<f64> {
        self.coeffs.iter().map(|c| poly_eval(&poly_deriv(c), tau)).collect()
    }
}

/// `center + cos(2πτ) a + sin(2πτ) b`, closed over `τ ∈ [0, 1]`. Lies in the
/// leaf through `center` when `a` and `b` have zero `t`-component.
#[derive(Debug, Clone)]
pub struct LeafLoop {
    pub center: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl LeafLoop {
    pub fn new(center: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a[T] != 0.0 || b[T] != 0.0 {
            return Err(LabError::InvalidParameter("leaf loop directions must have zero dt-component".into()));
        }
        Ok(Self { center, a, b })
    }
}

impl Curve for LeafLoop {
    fn point(&self, tau: f64) -> Vec<f64> {
        let (s, c) = (TAU * tau).sin_cos();
        (0..self.center.len()).map(|i| self.center[i] + c * self.a[i] + s * self.b[i]).collect()
    }

    fn velocity(&self, tau: f64) -> Vec<f64> {
        let (s, c) = (TAU * tau).sin_cos();
        (0..self.center.len()).map(|i| TAU * (-s * self.a[i] + c * self.b[i])).collect()
    }
}

/// `Γ^a_{bc} u^b w^c`.
pub(crate) fn gamma_contract(gamma: &[f64], n: usize, u: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (a, o) in out.iter_mut().enumerate() {
        for b in 0..n {
            if u[b] == 0.0 {
                continue;
            }
            for c in 0..n {
                *o += gamma[(a * n + b) * n + c] * u[b] * w[c];
            }
        }
    }
    out
}

fn christoffel_on_curve(model: &ModelManifold, curve: &dyn Curve, tau: f64) -> std::result::Result<Vec<f64>, LabError> {
    model.christoffel_at(&ChartPoint::from_coords(&curve.point(tau)))
}

/// Solves `∇_τ X = 0` along `curve` from `X(taus[0]) = x0`; returns `X` at
/// each of `taus`.
pub fn parallel_transport(
    model: &ModelManifold,
    curve: &dyn Curve,
    x0: &DVector<f64>,
    taus: &[f64],
) -> Result<Vec<DVector<f64>>> {
    let n = model.n();
    if x0.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: x0.len() });
    }
    let Some(&tau0) = taus.first() else { return Ok(vec![]) };
    let mut failure = None;
    let rhs = |tau: f64, y: &[f64], dy: &mut [f64]| match christoffel_on_curve(model, curve, tau) {
        Ok(gamma) => {
            let g = gamma_contract(&gamma, n, &curve.velocity(tau), y);
            for a in 0..n {
                dy[a] = -g[a];
            }
        }
        Err(e) => {
            failure.get_or_insert(e);
            dy.fill(f64::NAN);
        }
    };
    let states = Dopri5::default().integrate_to_times(rhs, tau0, x0.as_slice(), taus);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(states?.into_iter().map(DVector::from_vec).collect())
}

/// Integrates the geodesic `(x0, v0)` jointly with parallel transport of
/// each of `vectors`; returns the geodesic sample and transported vectors
/// at each of `taus` (the first entry is the initial parameter).
pub fn parallel_transport_geodesic(
    model: &ModelManifold,
    x0: &ChartPoint,
    v0: &DVector<f64>,
    vectors: &[DVector<f64>],
    taus: &[f64],
) -> Result<Vec<(GeodesicSample, Vec<DVector<f64>>)>> {
    let n = model.n();
    model.kappa(x0)?;
    let Some(&tau0) = taus.first() else { return Ok(vec![]) };
    let k = vectors.len();
    let mut y0: Vec<f64> = x0.coords().iter().chain(v0.iter()).copied().collect();
    for w in vectors {
        y0.extend(w.iter());
    }
    let geo = geodesic_rhs(model);
    let mut failure = None;
    let rhs = |tau: f64, y: &[f64], dy: &mut [f64]| {
        geo(tau, &y[..2 * n], &mut dy[..2 * n]);
        match model.christoffel_at(&ChartPoint::from_coords(&y[..n])) {
            Ok(gamma) => {
                for j in 0..k {
                    let off = 2 * n + j * n;
                    let g = gamma_contract(&gamma, n, &y[n..2 * n], &y[off..off + n]);
                    for a in 0..n {
                        dy[off + a] = -g[a];
                    }
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
                dy.fill(f64::NAN);
            }
        }
    };
    let states = Dopri5::default().integrate_to_times(rhs, tau0, &y0, taus);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(states?
        .into_iter()
        .zip(taus)
        .map(|(y, &tau)| {
            let vs = (0..k).map(|j| DVector::from_column_slice(&y[2 * n + j * n..2 * n + (j + 1) * n])).collect();
            (sample_from_state(tau, &y[..2 * n], n), vs)
        })
        .collect())
}

/// For a curve `c(s)`, `s ∈ [0, 1]`, inside one leaf: transports `Z0` to a
/// parallel field `Z`, solves `∇_s∇_s X = 0` with `X(0) = Z0`,
/// `∇_s X(0) = −Z0`, and returns `max_s |X(s) − (1 − s)Z(s)|`.
pub fn affine_field_check(model: &ModelManifold, curve: &dyn Curve, z0: &DVector<f64>, n_samples: usize) -> Result<f64> {
    let n = model.n();
    if z0.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: z0.len() });
    }
    let ss: Vec<f64> = (0..n_samples.max(2)).map(|k| k as f64 / (n_samples.max(2) - 1) as f64).collect();
    let t_leaf = curve.point(0.0)[T];
    for &s in &ss {
        let dt = (curve.point(s)[T] - t_leaf).abs();
        if dt > 1e-14 * t_leaf.abs().max(1.0) {
            return Err(LabError::InvalidParameter(format!("curve leaves the leaf t = {t_leaf}: |Δt| = {dt:e}")));
        }
    }
    let mut failure = None;
    // state: Z, X, P = ∇X
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| match christoffel_on_curve(model, curve, s) {
        Ok(gamma) => {
            let cd = curve.velocity(s);
            let gz = gamma_contract(&gamma, n, &cd, &y[..n]);
            let gx = gamma_contract(&gamma, n, &cd, &y[n..2 * n]);
            let gp = gamma_contract(&gamma, n, &cd, &y[2 * n..]);
            for a in 0..n {
                dy[a] = -gz[a];
                dy[n + a] = y[2 * n + a] - gx[a];
                dy[2 * n + a] = -gp[a];
            }
        }
        Err(e) => {
            failure.get_or_insert(e);
            dy.fill(f64::NAN);
        }
    };
    let y0: Vec<f64> = z0.iter().chain(z0.iter()).copied().chain(z0.iter().map(|a| -a)).collect();
    let states = Dopri5::default().integrate_to_times(rhs, 0.0, &y0, &ss);
    if let Some(e) = failure {
        return Err(e);
    }
    let mut worst = 0.0_f64;
    for (y, &s) in states?.iter().zip(&ss) {
        for a in 0..n {
            worst = worst.max((y[n + a] - (1.0 - s) * y[a]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::geodesic;
    use crate::model_geometry::{ProfileF, S, V0};
    use crate::pseudo_linear::{canonical_nilpotent, Endo, PseudoEuclideanSpace};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use nalgebra::DMatrix;

    fn homogeneous_m2() -> ModelManifold {
        ModelManifold::new(canonical_nilpotent(2, 1.0), ProfileF::homogeneous(Complex64::new(0.3, 0.0)).unwrap()).unwrap()
    }

    fn diagonal_m3() -> ModelManifold {
        let space = PseudoEuclideanSpace::diagonal(&[1.0, 1.0, -1.0]);
        let a = Endo::new(space, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, -3.0])));
        let f = ProfileF::polynomial(vec![0.2, -0.5, 0.3], crate::Interval::REAL_LINE).unwrap();
        ModelManifold::new(a, f).unwrap()
    }

    #[test]
    fn transporting_velocity_along_geodesic_returns_velocity() {
        let model = homogeneous_m2();
        let x0 = ChartPoint::new(1.0, 0.2, DVector::from_vec(vec![0.3, -0.4]));
        let v0 = DVector::from_vec(vec![0.5, 0.1, -0.2, 0.7]);
        let taus: Vec<f64> = (0..6).map(|k| 0.2 * k as f64).collect();
        let out = parallel_transport_geodesic(&model, &x0, &v0, &[v0.clone()], &taus).unwrap();
        for (s, vs) in &out {
            assert!((&vs[0] - &s.velocity).amax() < 1e-10);
        }
    }

    #[test]
    fn d_s_is_parallel_along_any_curve() {
        let model = diagonal_m3();
        let curve = PolyCurve::new(vec![
            vec![0.1, 1.0, 0.3],
            vec![0.0, -0.5, 0.0, 0.2],
            vec![0.2, 0.3],
            vec![-0.1, 0.0, 0.7],
            vec![0.0, 1.0, -1.0],
        ]);
        let mut ds = DVector::zeros(5);
        ds[S] = 1.0;
        let taus: Vec<f64> = (0..5).map(|k| 0.25 * k as f64).collect();
        for x in parallel_transport(&model, &curve, &ds, &taus).unwrap() {
            assert!((&x - &ds).amax() < 1e-12);
        }
    }

    #[test]
    fn transport_preserves_inner_products() {
        let model = diagonal_m3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let curve = PolyCurve::new((0..5).map(|_| (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect());
        let x0 = DVector::from_fn(5, |_, _| rng.gen_range(-1.0..1.0));
        let y0 = DVector::from_fn(5, |_, _| rng.gen_range(-1.0..1.0));
        let taus: Vec<f64> = (0..5).map(|k| 0.25 * k as f64).collect();
        let xs = parallel_transport(&model, &curve, &x0, &taus).unwrap();
        let ys = parallel_transport(&model, &curve, &y0, &taus).unwrap();
        let p0 = ChartPoint::from_coords(&curve.point(0.0));
        let want = model.inner_at(&p0, x0.as_slice(), y0.as_slice()).unwrap();
        for ((x, y), &tau) in xs.iter().zip(&ys).zip(&taus) {
            let p = ChartPoint::from_coords(&curve.point(tau));
            let got = model.inner_at(&p, x.as_slice(), y.as_slice()).unwrap();
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn leaf_loop_has_trivial_holonomy() {
        let model = diagonal_m3();
        let mut a = vec![0.0; 5];
        let mut b = vec![0.0; 5];
        a[S] = 0.7;
        a[V0] = 0.4;
        b[V0 + 1] = 1.1;
        b[V0 + 2] = -0.3;
        let curve = LeafLoop::new(vec![0.4, 0.1, 0.2, -0.3, 0.5], a, b).unwrap();
        let x0 = DVector::from_vec(vec![1.0, -0.3, 0.5, 0.2, 0.8]);
        let out = parallel_transport(&model, &curve, &x0, &[0.0, 0.5, 1.0]).unwrap();
        assert!((&out[2] - &x0).amax() < 1e-10);
        // the t-component feeds the leaf components halfway round
        assert!((&out[1] - &x0).amax() > 1e-3);
    }

    #[test]
    fn affine_field_along_leaf_curves() {
        let model = homogeneous_m2();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let t = rng.gen_range(0.5..3.0);
            let mut coeffs: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            coeffs[T] = vec![t];
            let curve = PolyCurve::new(coeffs);
            let z0 = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            assert!(affine_field_check(&model, &curve, &z0, 21).unwrap() < 1e-9);
        }
    }

    #[test]
    fn affine_field_rejects_transverse_curve() {
        let model = homogeneous_m2();
        let curve = PolyCurve::line(&[1.0, 0.0, 0.0, 0.0], &[0.5, 0.0, 0.0, 0.0]);
        assert!(affine_field_check(&model, &curve, &DVector::zeros(4), 5).is_err());
    }

    #[test]
    fn joint_transport_matches_transport_along_sampled_geodesic() {
        let model = diagonal_m3();
        let x0 = ChartPoint::new(0.3, 0.0, DVector::from_vec(vec![0.2, 0.1, -0.2]));
        let v0 = DVector::from_vec(vec![1.0, 0.2, -0.3, 0.4, 0.1]);
        let r = geodesic(&model, &x0, &v0, (0.0, 1.0), 2).unwrap();
        let w = DVector::from_vec(vec![0.5, 1.0, 0.0, -1.0, 0.3]);
        let out = parallel_transport_geodesic(&model, &x0, &v0, &[w.clone()], &[0.0, 1.0]).unwrap();
        assert!((&out[1].0.velocity - &r.last().velocity).amax() < 1e-10);
        let p1 = &out[1].0.point;
        let g0 = model.inner_at(&x0, w.as_slice(), v0.as_slice()).unwrap();
        let g1 = model.inner_at(p1, out[1].1[0].as_slice(), out[1].0.velocity.as_slice()).unwrap();
        assert!((g0 - g1).abs() < 1e-9);
    }
}
