//! Geodesics of a model: integration with a boundary barrier, the exponential
//! map, the affinity of `t`, parallel transport and the two constructions
//! built on top of them (variations of transverse curves and the
//! reconstruction map along a null geodesic).

mod reconstruction;
mod transport;
mod variation;

pub use reconstruction::{null_velocity, reconstruction_residual, ReconstructionReport};
pub use transport::{
    affine_field_check, parallel_transport, parallel_transport_geodesic, Curve, LeafLoop, PolyCurve,
};
pub use variation::{
    realize_velocity, solve_variation, variation_outcome, QVariant, TransverseCurve, VariationField,
    VariationOutcome, VariationSample,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::model_geometry::{ChartPoint, ModelManifold, T};
use crate::ode::{Dopri5, Monitor};
use crate::solution_space::BOUNDARY_GAP;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub tau: f64,
    pub point: ChartPoint,
    #[serde(with = "crate::linalg::serde_dvector")]
    pub velocity: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    HitBoundary { tau: f64, endpoint: f64 },
    ToleranceFailure { reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicResult {
    pub samples: Vec<GeodesicSample>,
    pub terminated: Termination,
}

/// Deviation of `t(τ)` from its least-squares line.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TAffinity {
    pub max_deviation: f64,
    pub t_range: f64,
    pub slope: f64,
    /// `max_deviation / t_range`, or `max_deviation` when `t` is constant.
    pub relative: f64,
}

impl GeodesicResult {
    pub fn hit_boundary(&self) -> bool {
        matches!(self.terminated, Termination::HitBoundary { .. })
    }

    pub fn last(&self) -> &GeodesicSample {
        self.samples.last().expect("geodesic results carry at least the initial sample")
    }

    /// `max |g(ẋ,ẋ) − g(ẋ₀,ẋ₀)| / max(1, |g(ẋ₀,ẋ₀)|)`.
    pub fn energy_drift(&self, model: &ModelManifold) -> Result<f64> {
        let e0 = energy(model, &self.samples[0])?;
        let mut drift = 0.0_f64;
        for s in &self.samples {
            drift = drift.max((energy(model, s)? - e0).abs());
        }
        Ok(drift / e0.abs().max(1.0))
    }

    pub fn t_affinity(&self) -> Result<TAffinity> {
        t_affinity(&self.samples.iter().map(|s| (s.tau, s.point.t)).collect::<Vec<_>>())
    }

    /// `max |ẍ + Γ(ẋ,ẋ)| / max(1, |ẋ|²)` over the samples, with `ẍ` taken
    /// from the closed-form acceleration and `Γ` from the generic jet.
    pub fn equation_residual(&self, model: &ModelManifold) -> Result<f64> {
        let n = model.n();
        let mut worst = 0.0_f64;
        for s in &self.samples {
            let x = s.point.coords();
            let xd = s.velocity.as_slice();
            let acc = model.geodesic_acceleration(x.as_slice(), xd);
            let gamma = model.christoffel_at(&s.point)?;
            let speed2 = xd.iter().map(|a| a * a).sum::<f64>().max(1.0);
            for a in 0..n {
                let mut g = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        g += gamma[(a * n + b) * n + c] * xd[b] * xd[c];
                    }
                }
                worst = worst.max((acc[a] + g).abs() / speed2);
            }
        }
        Ok(worst)
    }
}

fn energy(model: &ModelManifold, s: &GeodesicSample) -> Result<f64> {
    let v = s.velocity.as_slice();
    model.inner_at(&s.point, v, v)
}

/// Least-squares line through `(τ, t)` pairs.
pub fn t_affinity(pairs: &[(f64, f64)]) -> Result<TAffinity> {
    if pairs.len() < 3 {
        return Err(LabError::InvalidParameter(format!("t_affinity needs ≥ 3 samples, got {}", pairs.len())));
    }
    let k = pairs.len() as f64;
    let mt = pairs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let max_deviation = pairs
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mt))).abs())
        .fold(0.0, f64::max);
    let lo = pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let t_range = hi - lo;
    let relative = if t_range > 0.0 { max_deviation / t_range } else { max_deviation };
    Ok(TAffinity { max_deviation, t_range, slope, relative })
}

/// Stops the integration `BOUNDARY_GAP` away from a finite endpoint of `I`.
/// Steps are capped so `t` covers at most half the remaining distance.
struct Barrier {
    lo: Option<f64>,
    hi: Option<f64>,
    hit: Option<f64>,
}

impl Barrier {
    fn distance(&self, y: &[f64], n: usize) -> Option<(f64, f64)> {
        let t = y[T];
        let rate = y[n + T];
        if rate < 0.0 {
            self.lo.map(|lo| (t - lo, rate))
        } else if rate > 0.0 {
            self.hi.map(|hi| (hi - t, rate))
        } else {
            None
        }
    }
}

struct BarrierMonitor {
    barrier: Barrier,
    n: usize,
}

impl Monitor for BarrierMonitor {
    fn max_step(&self, _t: f64, y: &[f64]) -> f64 {
        match self.barrier.distance(y, self.n) {
            Some((d, rate)) => 0.5 * d.max(0.0) / rate.abs(),
            None => f64::INFINITY,
        }
    }

    fn accept(&mut self, _t: f64, y: &[f64]) -> bool {
        if let Some((d, rate)) = self.barrier.distance(y, self.n) {
            if d < BOUNDARY_GAP {
                self.barrier.hit = Some(if rate < 0.0 { self.barrier.lo.unwrap() } else { self.barrier.hi.unwrap() });
                return false;
            }
        }
        true
    }
}

/// Right-hand side of the first-order geodesic system on `(x, ẋ)`.
pub(crate) fn geodesic_rhs(model: &ModelManifold) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    let n = model.n();
    move |_tau, y, dy| {
        dy[..n].copy_from_slice(&y[n..]);
        let acc = model.geodesic_acceleration(&y[..n], &y[n..]);
        dy[n..].copy_from_slice(&acc);
    }
}

fn sample_from_state(tau: f64, y: &[f64], n: usize) -> GeodesicSample {
    GeodesicSample {
        tau,
        point: ChartPoint::from_coords(&y[..n]),
        velocity: DVector::from_column_slice(&y[n..]),
    }
}

/// Integrates the geodesic through `x0` with velocity `v0` over
/// `tau_span = (0, τ₁)` (or any `(τ₀, τ₁)` with `x0` at `τ₀`), recording
/// `n_samples` equally spaced samples including both ends. Integration stops
/// at the barrier of a finite endpoint of `I`.
pub fn geodesic(
    model: &ModelManifold,
    x0: &ChartPoint,
    v0: &DVector<f64>,
    tau_span: (f64, f64),
    n_samples: usize,
) -> Result<GeodesicResult> {
    geodesic_with(model, x0, v0, tau_span, n_samples, &Dopri5::default())
}

pub fn geodesic_with(
    model: &ModelManifold,
    x0: &ChartPoint,
    v0: &DVector<f64>,
    tau_span: (f64, f64),
    n_samples: usize,
    solver: &Dopri5,
) -> Result<GeodesicResult> {
    let n = model.n();
    model.kappa(x0)?;
    if v0.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: v0.len() });
    }
    if n_samples < 2 {
        return Err(LabError::InvalidParameter("geodesic needs at least 2 samples".into()));
    }
    let interval = model.interval();
    let mut monitor = BarrierMonitor { barrier: Barrier { lo: interval.lo, hi: interval.hi, hit: None }, n };
    let rhs = geodesic_rhs(model);
    let mut y: Vec<f64> = x0.coords().iter().chain(v0.iter()).copied().collect();
    let (tau0, tau1) = tau_span;
    let mut samples = vec![sample_from_state(tau0, &y, n)];
    let mut tau = tau0;
    let mut h = None;
    for k in 1..n_samples {
        let target = tau0 + (tau1 - tau0) * k as f64 / (n_samples - 1) as f64;
        let seg = Dopri5 { h_init: h, ..solver.clone() };
        match seg.integrate_monitored(&rhs, tau, &y, target, &mut monitor) {
            Ok(o) => {
                if o.last_h.is_finite() && o.last_h != 0.0 {
                    h = Some(o.last_h.abs());
                }
                tau = o.t;
                y = o.y;
                samples.push(sample_from_state(tau, &y, n));
                if o.stopped_early {
                    let endpoint = monitor.barrier.hit.unwrap_or(f64::NAN);
                    return Ok(GeodesicResult { samples, terminated: Termination::HitBoundary { tau, endpoint } });
                }
            }
            Err(e @ (LabError::StepUnderflow { .. } | LabError::TooManySteps { .. })) => {
                return Ok(GeodesicResult { samples, terminated: Termination::ToleranceFailure { reason: e.to_string() } });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(GeodesicResult { samples, terminated: Termination::Completed })
}

/// `exp_x(v)` and the velocity at parameter 1.
pub fn exp_map(model: &ModelManifold, x: &ChartPoint, v: &DVector<f64>) -> Result<(ChartPoint, DVector<f64>)> {
    let r = geodesic(model, x, v, (0.0, 1.0), 2)?;
    match &r.terminated {
        Termination::Completed => {
            let s = r.last();
            Ok((s.point.clone(), s.velocity.clone()))
        }
        Termination::HitBoundary { .. } => {
            let iv = model.interval();
            Err(LabError::OutsideInterval {
                t: r.last().point.t,
                lo: iv.lo.unwrap_or(f64::NEG_INFINITY),
                hi: iv.hi.unwrap_or(f64::INFINITY),
            })
        }
        Termination::ToleranceFailure { reason } => Err(LabError::Degenerate(reason.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_geometry::{ProfileF, S};
    use crate::pseudo_linear::{canonical_nilpotent, Endo, PseudoEuclideanSpace};
    use crate::Interval;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn homogeneous_m2() -> ModelManifold {
        ModelManifold::new(canonical_nilpotent(2, 1.0), ProfileF::homogeneous(Complex64::new(0.3, 0.0)).unwrap()).unwrap()
    }

    fn polynomial_m3() -> ModelManifold {
        let space = PseudoEuclideanSpace::diagonal(&[1.0, -1.0, 1.0]);
        let a = Endo::new(space, DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, -1.5])));
        ModelManifold::new(a, ProfileF::polynomial(vec![0.1, 0.4, -0.2], Interval::REAL_LINE).unwrap()).unwrap()
    }

    #[test]
    fn d_s_geodesic_is_a_straight_line() {
        let model = homogeneous_m2();
        let x0 = ChartPoint::new(1.5, 0.2, DVector::from_vec(vec![0.3, -0.1]));
        let mut v0 = DVector::zeros(4);
        v0[S] = 0.8;
        let r = geodesic(&model, &x0, &v0, (0.0, 5.0), 11).unwrap();
        assert_eq!(r.terminated, Termination::Completed);
        for s in &r.samples {
            let mut want = x0.coords();
            want[S] += 0.8 * s.tau;
            assert!((s.point.coords() - want).amax() < 1e-13);
            assert!((&s.velocity - &v0).amax() < 1e-15);
        }
    }

    #[test]
    fn flat_raw_model_has_straight_geodesics() {
        let space = PseudoEuclideanSpace::euclidean(2);
        let model = ModelManifold::raw(Endo::zero(space), ProfileF::zero(Interval::REAL_LINE));
        let x0 = ChartPoint::new(0.3, -0.2, DVector::from_vec(vec![1.0, 2.0]));
        let v0 = DVector::from_vec(vec![0.7, -0.3, 0.2, 0.5]);
        let r = geodesic(&model, &x0, &v0, (0.0, 3.0), 7).unwrap();
        for s in &r.samples {
            assert!((s.point.coords() - (x0.coords() + &v0 * s.tau)).amax() < 1e-13);
        }
    }

    #[test]
    fn energy_and_t_affinity_are_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for model in [homogeneous_m2(), polynomial_m3()] {
            for _ in 0..5 {
                let x0 = model.random_point(&mut rng);
                let v0 = DVector::from_fn(model.n(), |_, _| rng.gen_range(-1.0..1.0));
                let span = match model.interval().lo {
                    Some(lo) if v0[T] < 0.0 => (0.5 * (x0.t - lo) / -v0[T]).min(1.0),
                    _ => 1.0,
                };
                let r = geodesic(&model, &x0, &v0, (0.0, span), 21).unwrap();
                assert_eq!(r.terminated, Termination::Completed);
                assert!(r.energy_drift(&model).unwrap() < 1e-8);
                assert!(r.t_affinity().unwrap().relative < 1e-8);
                assert!(r.equation_residual(&model).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn inward_geodesics_hit_the_boundary_of_the_half_line() {
        let model = homogeneous_m2();
        let x0 = ChartPoint::new(1.0, 0.0, DVector::from_vec(vec![0.2, 0.4]));
        let v0 = DVector::from_vec(vec![-0.5, 0.3, 0.1, -0.2]);
        let r = geodesic(&model, &x0, &v0, (0.0, 100.0), 5).unwrap();
        match r.terminated {
            Termination::HitBoundary { tau, endpoint } => {
                assert_eq!(endpoint, 0.0);
                assert!((tau - 2.0).abs() < 1e-7);
                assert!(r.last().point.t < 1e-6 && r.last().point.t > 0.0);
            }
            ref other => panic!("expected boundary hit, got {other:?}"),
        }
    }

    #[test]
    fn leaf_geodesics_stay_in_their_leaf() {
        let model = homogeneous_m2();
        let x0 = ChartPoint::new(2.0, 0.0, DVector::from_vec(vec![0.2, 0.4]));
        let v0 = DVector::from_vec(vec![0.0, 0.3, 0.1, -0.2]);
        let r = geodesic(&model, &x0, &v0, (0.0, -1000.0), 11).unwrap();
        assert_eq!(r.terminated, Termination::Completed);
        let aff = r.t_affinity().unwrap();
        assert_eq!(aff.t_range, 0.0);
        assert_eq!(aff.relative, 0.0);
        assert_eq!(aff.slope, 0.0);
    }

    #[test]
    fn t_affinity_flags_non_geodesic_curves() {
        // a transverse closed curve: t = 1 + cos τ
        let pairs: Vec<(f64, f64)> = (0..50).map(|k| {
            let tau = 2.0 * std::f64::consts::PI * k as f64 / 49.0;
            (tau, 1.5 + 0.5 * tau.cos())
        }).collect();
        assert!(t_affinity(&pairs).unwrap().relative > 0.1);
        assert!(t_affinity(&pairs[..2]).is_err());
    }

    #[test]
    fn exp_map_round_trip_and_boundary_error() {
        let model = homogeneous_m2();
        let x = ChartPoint::new(1.0, 0.0, DVector::from_vec(vec![0.1, 0.2]));
        let v = DVector::from_vec(vec![0.3, 0.1, -0.2, 0.05]);
        let (p, vel) = exp_map(&model, &x, &v).unwrap();
        assert!((p.t - 1.3).abs() < 1e-14);
        let (back, _) = exp_map(&model, &p, &(-vel)).unwrap();
        assert!((back.coords() - x.coords()).amax() < 1e-10);
        let mut far = v.clone();
        far[T] = -2.0;
        assert!(matches!(exp_map(&model, &x, &far), Err(LabError::OutsideInterval { .. })));
    }
}
