//! The isometry group `S ⋉ H` of a model.
//!
//! `S` consists of triples `(q, p, C)` with `CAC⁻¹ = q²A`, `qI + p ⊆ I` and
//! `f(t) = q²f(qt + p)`; only `q > 0` is implemented. An isometry
//! `(σ, r, u)` acts by
//! `Φ(t, s, v) = (qt + p, −⟨u̇(T), 2Cv + u(T)⟩ + s/q + r, Cv + u(T))`, `T = qt + p`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::max_abs;
use crate::model_geometry::{ChartPoint, ModelManifold, S, T, V0};
use crate::pseudo_linear::Endo;
use crate::solution_space::{fundamental_matrix, omega, propagate, SolutionE};

/// Grid size of the `f`-equivariance check.
pub const F_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SElement {
    pub q: f64,
    pub p: f64,
    #[serde(with = "crate::linalg::serde_dmatrix")]
    pub c: DMatrix<f64>,
}

impl SElement {
    pub fn new(q: f64, p: f64, c: DMatrix<f64>) -> Self {
        Self { q, p, c }
    }

    pub fn identity(m: usize) -> Self {
        Self::new(1.0, 0.0, DMatrix::identity(m, m))
    }

    /// `t ↦ qt + p`.
    pub fn act_t(&self, t: f64) -> f64 {
        self.q * t + self.p
    }

    pub fn compose(&self, other: &SElement) -> SElement {
        Self::new(self.q * other.q, self.q * other.p + self.p, &self.c * &other.c)
    }

    pub fn inverse(&self) -> SElement {
        let cinv = self.c.clone().try_inverse().expect("C is an isometry");
        Self::new(1.0 / self.q, -self.p / self.q, cinv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SMembership {
    pub ok: bool,
    /// relative `|CA − q²AC|`
    pub equivariance: f64,
    /// relative `|CᵀGC − G|`
    pub isometry: f64,
    /// max over the grid of `|f(t) − q²f(qt + p)| / max(1, |f(t)|)`
    pub f_equivariance: f64,
    pub interval_ok: bool,
}

/// Evaluates every defining condition of `S`.
pub fn s_membership(model: &ModelManifold, q: f64, p: f64, c: &DMatrix<f64>) -> SMembership {
    let m = model.m();
    if !(q > 0.0) || c.shape() != (m, m) {
        return SMembership {
            ok: false,
            equivariance: f64::INFINITY,
            isometry: f64::INFINITY,
            f_equivariance: f64::INFINITY,
            interval_ok: false,
        };
    }
    let a = &model.a().matrix;
    let lhs = c * a;
    let rhs = a * c * (q * q);
    let equivariance = max_abs(&(&lhs - &rhs)) / max_abs(&lhs).max(max_abs(&rhs)).max(f64::MIN_POSITIVE);
    let g = model.gram();
    let cn = max_abs(c).max(1.0);
    let isometry = max_abs(&(c.transpose() * g * c - g)) / (cn * cn * max_abs(g));

    let interval = model.interval();
    let tol = 1e-12;
    let lo_ok = interval.lo.is_none_or(|a| q * a + p >= a - tol * a.abs().max(1.0));
    let hi_ok = interval.hi.is_none_or(|b| q * b + p <= b + tol * b.abs().max(1.0));
    let interval_ok = lo_ok && hi_ok;

    let f = model.f();
    let mut f_equivariance = 0.0_f64;
    for t in interval.chebyshev_grid(F_GRID) {
        let tt = q * t + p;
        if !interval.contains(tt) {
            f_equivariance = f64::INFINITY;
            break;
        }
        let ft = f.value(t);
        f_equivariance = f_equivariance.max((ft - q * q * f.value(tt)).abs() / ft.abs().max(1.0));
    }
    let ok = equivariance < 1e-9 && isometry < 1e-10 && f_equivariance < 1e-9 && interval_ok;
    SMembership { ok, equivariance, isometry, f_equivariance, interval_ok }
}

/// `σu`: the solution `t ↦ C u(q⁻¹(t − p))`, re-based at `u.t0`.
pub fn sigma_act(model: &ModelManifold, sigma: &SElement, u: &SolutionE) -> Result<SolutionE> {
    let tau = (u.t0 - sigma.p) / sigma.q;
    let (val, der) = propagate(model, u, tau)?;
    Ok(SolutionE::new(u.t0, &sigma.c * val, &sigma.c * der / sigma.q))
}

/// Matrix of `u ↦ σu` on Cauchy data at `t0`.
pub fn sigma_matrix(model: &ModelManifold, sigma: &SElement, t0: f64) -> Result<DMatrix<f64>> {
    let m = model.m();
    let tau = (t0 - sigma.p) / sigma.q;
    let phi = fundamental_matrix(model, t0, tau)?;
    let mut lin = DMatrix::zeros(2 * m, 2 * m);
    lin.view_mut((0, 0), (m, m)).copy_from(&sigma.c);
    lin.view_mut((m, m), (m, m)).copy_from(&(&sigma.c / sigma.q));
    Ok(lin * phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoElement {
    pub sigma: SElement,
    pub r: f64,
    pub u: SolutionE,
}

impl IsoElement {
    pub fn new(sigma: SElement, r: f64, u: SolutionE) -> Self {
        Self { sigma, r, u }
    }

    pub fn identity(m: usize, t0: f64) -> Self {
        Self::new(SElement::identity(m), 0.0, SolutionE::zero(m, t0))
    }

    /// Pure Heisenberg element `(1, 0, Id, r, u)`.
    pub fn heisenberg(r: f64, u: SolutionE) -> Self {
        let m = u.dim();
        Self::new(SElement::identity(m), r, u)
    }
}

/// `u(T), u̇(T), ü(T)`.
fn solution_jet(model: &ModelManifold, u: &SolutionE, t: f64) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let (val, der) = propagate(model, u, t)?;
    let acc = &val * model.f().value(t) + &model.a().matrix * &val;
    Ok((val, der, acc))
}

pub fn iso_apply(model: &ModelManifold, phi: &IsoElement, x: &ChartPoint) -> Result<ChartPoint> {
    model.interval().check(x.t)?;
    let sig = &phi.sigma;
    let tt = sig.act_t(x.t);
    model.interval().check(tt)?;
    let (u, du) = propagate(model, &phi.u, tt)?;
    let g = model.gram();
    let cv = &sig.c * &x.v;
    let s = -(du.transpose() * g * (&cv * 2.0 + &u))[(0, 0)] + x.s / sig.q + phi.r;
    Ok(ChartPoint::new(tt, s, cv + u))
}

/// Analytic Jacobian of [`iso_apply`] at `x`, columns indexed by chart directions.
pub fn iso_jacobian(model: &ModelManifold, phi: &IsoElement, x: &ChartPoint) -> Result<DMatrix<f64>> {
    let m = model.m();
    let sig = &phi.sigma;
    let q = sig.q;
    let tt = sig.act_t(x.t);
    let (u, du, ddu) = solution_jet(model, &phi.u, tt)?;
    let g = model.gram();
    let cv2u = &sig.c * &x.v * 2.0 + &u;
    let mut jac = DMatrix::zeros(m + 2, m + 2);
    jac[(T, T)] = q;
    jac[(S, T)] = -q * ((ddu.transpose() * g * &cv2u)[(0, 0)] + (du.transpose() * g * &du)[(0, 0)]);
    for i in 0..m {
        jac[(V0 + i, T)] = q * du[i];
    }
    jac[(S, S)] = 1.0 / q;
    let gdu = g * &du;
    for j in 0..m {
        let cej = sig.c.column(j);
        jac[(S, V0 + j)] = -2.0 * gdu.dot(&cej);
        for i in 0..m {
            jac[(V0 + i, V0 + j)] = cej[i];
        }
    }
    Ok(jac)
}

/// `max |Φ*g − g|` at `x`, i.e. over all pairs of chart basis vectors.
pub fn pullback_residual(model: &ModelManifold, phi: &IsoElement, x: &ChartPoint) -> Result<f64> {
    let y = iso_apply(model, phi, x)?;
    let jac = iso_jacobian(model, phi, x)?;
    let pulled = jac.transpose() * model.metric_at(&y)? * &jac;
    Ok(max_abs(&(pulled - model.metric_at(x)?)))
}

/// `(σ, r, u)(σ̂, r̂, û) = (σσ̂, r + q⁻¹r̂ − Ω(u, σû), u + σû)`.
pub fn iso_compose(model: &ModelManifold, phi: &IsoElement, psi: &IsoElement) -> Result<IsoElement> {
    let su = sigma_act(model, &phi.sigma, &psi.u)?;
    let w = omega(model.gram(), &phi.u, &su)?;
    Ok(IsoElement::new(phi.sigma.compose(&psi.sigma), phi.r + psi.r / phi.sigma.q - w, phi.u.add(&su)?))
}

/// `(σ, r, u)⁻¹ = (σ⁻¹, −qr, −σ⁻¹u)`.
pub fn iso_inverse(model: &ModelManifold, phi: &IsoElement) -> Result<IsoElement> {
    let inv = phi.sigma.inverse();
    let su = sigma_act(model, &inv, &phi.u)?;
    Ok(IsoElement::new(inv, -phi.sigma.q * phi.r, su.neg()))
}

/// Max componentwise distance between two elements with a common base point.
pub fn iso_distance(a: &IsoElement, b: &IsoElement) -> f64 {
    let ds = (a.sigma.q - b.sigma.q)
        .abs()
        .max((a.sigma.p - b.sigma.p).abs())
        .max(max_abs(&(&a.sigma.c - &b.sigma.c)));
    ds.max((a.r - b.r).abs()).max((a.u.cauchy() - b.u.cauchy()).amax())
}

pub fn hom_q(phi: &IsoElement) -> f64 {
    phi.sigma.q
}

pub fn hom_qp(phi: &IsoElement) -> (f64, f64) {
    (phi.sigma.q, phi.sigma.p)
}

pub fn hom_c(model: &ModelManifold, phi: &IsoElement) -> Endo {
    Endo::new(model.space().clone(), phi.sigma.c.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holonomy {
    Translational,
    Dilational,
}

/// Translational iff every generator has `q = 1`.
pub fn classify_holonomy(qs: &[f64]) -> Result<Holonomy> {
    if let Some(&q) = qs.iter().find(|&&q| !(q > 0.0) || !q.is_finite()) {
        return Err(LabError::InvalidParameter(format!("generator with q = {q}; only q > 0 is supported")));
    }
    if qs.iter().all(|&q| (q - 1.0).abs() <= 1e-12) {
        Ok(Holonomy::Translational)
    } else {
        Ok(Holonomy::Dilational)
    }
}

/// Sign patterns on the eigenspaces of `A` that commute with `A` and preserve
/// `⟨·,·⟩`, or `±Id` when the eigenspaces do not split off cleanly.
fn commutant_isometries(model: &ModelManifold) -> Vec<DMatrix<f64>> {
    let m = model.m();
    let id = DMatrix::<f64>::identity(m, m);
    let mut out = vec![id.clone(), -&id];
    let a = &model.a().matrix;
    let eig = a.clone().complex_eigenvalues();
    if eig.iter().any(|z| z.im.abs() > 1e-12) || m > 8 {
        return out;
    }
    let lambdas: Vec<f64> = eig.iter().map(|z| z.re).collect();
    let distinct = (0..m).all(|i| (0..i).all(|j| (lambdas[i] - lambdas[j]).abs() > 1e-8));
    if !distinct {
        return out;
    }
    // eigenprojector Π_k = Π_{l≠k} (A − λ_l)/(λ_k − λ_l)
    let proj: Vec<DMatrix<f64>> = (0..m)
        .map(|k| {
            let mut p = id.clone();
            for l in 0..m {
                if l != k {
                    p = p * (a - &id * lambdas[l]) / (lambdas[k] - lambdas[l]);
                }
            }
            p
        })
        .collect();
    for mask in 1..(1u32 << m) - 1 {
        let mut c = DMatrix::zeros(m, m);
        for (k, pk) in proj.iter().enumerate() {
            let sign = if mask & (1 << k) != 0 { -1.0 } else { 1.0 };
            c += pk * sign;
        }
        if s_membership(model, 1.0, 0.0, &c).ok {
            out.push(c);
        }
    }
    out
}

/// Random element of `S`: dilations `(q, 0, ±C_q)` for homogeneous models with
/// generic nilpotent `A`, otherwise `(1, 0, C)` with `C` from the finite
/// commutant of `A`.
pub fn random_s_element<R: Rng + ?Sized>(model: &ModelManifold, rng: &mut R) -> SElement {
    if model.f().homogeneous_c().is_some() {
        if let Ok(basis) = model.a().fit_basis() {
            let q = (rng.gen_range(-0.7_f64..0.7)).exp();
            let delta = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let c = basis.scaling_isometry(q, delta).expect("q > 0").matrix;
            return SElement::new(q, 0.0, c);
        }
    }
    let cands = commutant_isometries(model);
    let c = cands[rng.gen_range(0..cands.len())].clone();
    SElement::new(1.0, 0.0, c)
}

/// Random Cauchy data in `[−1, 1]^{2m}` at `t0`.
pub fn random_solution<R: Rng + ?Sized>(m: usize, t0: f64, rng: &mut R) -> SolutionE {
    SolutionE::new(
        t0,
        DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)),
        DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)),
    )
}

pub fn random_iso_element<R: Rng + ?Sized>(model: &ModelManifold, rng: &mut R) -> IsoElement {
    let sigma = random_s_element(model, rng);
    let r = rng.gen_range(-1.0..1.0);
    let u = random_solution(model.m(), model.interval().base_point(), rng);
    IsoElement::new(sigma, r, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_geometry::{Interval, ProfileF};
    use crate::pseudo_linear::{canonical_nilpotent, PseudoEuclideanSpace};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn homogeneous() -> ModelManifold {
        ModelManifold::new(canonical_nilpotent(2, 1.0), ProfileF::homogeneous(Complex64::new(0.3, 0.0)).unwrap())
            .unwrap()
    }

    fn polynomial() -> ModelManifold {
        let space = PseudoEuclideanSpace::diagonal(&[1.0, -1.0, 1.0]);
        let a = Endo::new(space, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, -3.0])));
        ModelManifold::new(a, ProfileF::polynomial(vec![0.5, 1.0, -0.3], Interval::REAL_LINE).unwrap()).unwrap()
    }

    #[test]
    fn membership_examples() {
        let hm = homogeneous();
        assert!(s_membership(&hm, 1.0, 0.0, &DMatrix::identity(2, 2)).ok);
        let basis = hm.a().fit_basis().unwrap();
        for q in [0.5, 2.0, 3.3] {
            let c = basis.scaling_isometry(q, 1.0).unwrap().matrix;
            assert!(s_membership(&hm, q, 0.0, &c).ok);
        }
        let pm = polynomial();
        let r = s_membership(&pm, 2.0, 0.0, &DMatrix::identity(3, 3));
        assert!(!r.ok && r.f_equivariance > 1e-3);
    }

    #[test]
    fn commutant_of_diagonal_a() {
        let pm = polynomial();
        // all 8 sign patterns
        assert_eq!(commutant_isometries(&pm).len(), 8);
    }

    #[test]
    fn action_examples() {
        let pm = polynomial();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = pm.random_point(&mut rng);
        let id = IsoElement::identity(3, 0.0);
        assert_eq!(iso_apply(&pm, &id, &x).unwrap(), x);
        let h = IsoElement::heisenberg(0.7, SolutionE::zero(3, 0.0));
        let y = iso_apply(&pm, &h, &x).unwrap();
        assert_eq!((y.t, y.s, &y.v), (x.t, x.s + 0.7, &x.v));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let hm = homogeneous();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = random_iso_element(&hm, &mut rng);
        let x = hm.random_point(&mut rng);
        let jac = iso_jacobian(&hm, &phi, &x).unwrap();
        let h = 1e-5;
        for k in 0..4 {
            let mut xp = x.coords();
            let mut xm = x.coords();
            xp[k] += h;
            xm[k] -= h;
            let yp = iso_apply(&hm, &phi, &ChartPoint::from_coords(xp.as_slice())).unwrap().coords();
            let ym = iso_apply(&hm, &phi, &ChartPoint::from_coords(xm.as_slice())).unwrap().coords();
            let col = (yp - ym) / (2.0 * h);
            assert!((col - jac.column(k)).amax() < 1e-6);
        }
    }

    #[test]
    fn pullback_is_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for model in [homogeneous(), polynomial()] {
            for _ in 0..5 {
                let phi = random_iso_element(&model, &mut rng);
                let x = model.random_point(&mut rng);
                assert!(pullback_residual(&model, &phi, &x).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn compose_and_inverse() {
        let hm = homogeneous();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = random_iso_element(&hm, &mut rng);
        let psi = random_iso_element(&hm, &mut rng);
        let x = hm.random_point(&mut rng);
        let lhs = iso_apply(&hm, &iso_compose(&hm, &phi, &psi).unwrap(), &x).unwrap();
        let rhs = iso_apply(&hm, &phi, &iso_apply(&hm, &psi, &x).unwrap()).unwrap();
        assert!((lhs.coords() - rhs.coords()).amax() < 1e-9);

        let inv = iso_inverse(&hm, &phi).unwrap();
        let e = iso_compose(&hm, &phi, &inv).unwrap();
        assert!(iso_distance(&e, &IsoElement::identity(2, 1.0)) < 1e-10);
        assert_eq!(hom_q(&iso_compose(&hm, &phi, &psi).unwrap()), phi.sigma.q * psi.sigma.q);
    }

    #[test]
    fn determinant_of_sigma() {
        // det σ = q^{2−n} on 𝓔; n = 4, q = 2
        let hm = homogeneous();
        let c = hm.a().fit_basis().unwrap().scaling_isometry(2.0, 1.0).unwrap().matrix;
        let mat = sigma_matrix(&hm, &SElement::new(2.0, 0.0, c), 1.0).unwrap();
        assert!((mat.determinant() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn holonomy_classes() {
        assert_eq!(classify_holonomy(&[]).unwrap(), Holonomy::Translational);
        assert_eq!(classify_holonomy(&[1.0, 1.0]).unwrap(), Holonomy::Translational);
        assert_eq!(classify_holonomy(&[1.0, 2.0]).unwrap(), Holonomy::Dilational);
        assert!(classify_holonomy(&[0.0]).is_err());
        assert!(classify_holonomy(&[-1.0]).is_err());
    }
}
