//! Standard homogeneous models: `I = (0, ∞)`, `f(t) = (c² − 1/4)/t²` and `A` a
//! generic nilpotent. Solutions are based at `t₀ = 1`.
//!
//! `σ_q` is the action of the dilation `(q, 0, C_q)` on 𝓔, `C_q` the scaling
//! isometry with `δ = +1`. Its generator `B` splits 𝓔 into `𝓔₀ = ker B` and
//! `𝓔₊ = B(𝓔)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::isometry_group::{iso_apply, random_solution, IsoElement, SElement};
use crate::linalg::{image_and_kernel, singular_values};
use crate::model_geometry::{ChartPoint, ModelManifold, ProfileF};
use crate::pseudo_linear::{canonical_nilpotent, FitBasis};
use crate::solution_space::{fundamental_matrix, omega_matrix, SolutionE};
use crate::spectra::{eigenvalues, match_multisets, SpectrumMatch};

/// Base point of the Cauchy representation.
pub const BASE_T0: f64 = 1.0;

/// Step sizes of the Richardson-extrapolated central difference for `B`.
pub const B_STEPS: (f64, f64) = (1e-3, 5e-4);

/// Relative singular-value threshold separating `ker B` from `B(𝓔)`.
pub const SPLIT_REL_TOL: f64 = 1e-7;

/// Tolerance of the commutation tests.
pub const COMMUTE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousModel {
    base: ModelManifold,
    basis: FitBasis,
    c: Complex64,
}

impl HomogeneousModel {
    pub fn new(base: ModelManifold) -> Result<Self> {
        let c = base
            .f()
            .homogeneous_c()
            .ok_or_else(|| LabError::InvalidParameter("profile is not homogeneous".into()))?;
        if base.a().nilpotent_order() != Some(base.m()) || !base.a().genericity_test()?.generic {
            return Err(LabError::NotGenericNilpotent);
        }
        let basis = base.a().fit_basis()?;
        Ok(Self { base, basis, c })
    }

    /// Model on the anti-diagonal Gram form `ε` with the reference shift as `A`.
    pub fn canonical(m: usize, epsilon: f64, c: Complex64) -> Result<Self> {
        Self::new(ModelManifold::new(canonical_nilpotent(m, epsilon), ProfileF::homogeneous(c)?)?)
    }

    pub fn base(&self) -> &ModelManifold {
        &self.base
    }

    pub fn basis(&self) -> &FitBasis {
        &self.basis
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    pub fn m(&self) -> usize {
        self.base.m()
    }

    fn check_q(q: f64) -> Result<()> {
        if q > 0.0 && q.is_finite() {
            Ok(())
        } else {
            Err(LabError::InvalidParameter(format!("q = {q} must be positive")))
        }
    }

    pub fn c_q(&self, q: f64) -> Result<DMatrix<f64>> {
        Ok(self.basis.scaling_isometry(q, 1.0)?.matrix)
    }

    pub fn dilation(&self, q: f64) -> Result<SElement> {
        Ok(SElement::new(q, 0.0, self.c_q(q)?))
    }

    /// `σ_q` on Cauchy data at `t₀ = 1`: `u ↦ (C_q u(1/q), q⁻¹C_q u̇(1/q))`.
    pub fn sigma_q_matrix(&self, q: f64) -> Result<DMatrix<f64>> {
        Self::check_q(q)?;
        let m = self.m();
        let cq = self.c_q(q)?;
        let phi = fundamental_matrix(&self.base, BASE_T0, BASE_T0 / q)?;
        let mut lin = DMatrix::zeros(2 * m, 2 * m);
        lin.view_mut((0, 0), (m, m)).copy_from(&cq);
        lin.view_mut((m, m), (m, m)).copy_from(&(&cq / q));
        Ok(lin * phi)
    }

    /// Exponents `m + 1/2 − 2j ∓ c`, `j = 1..m`.
    pub fn predicted_b_spectrum(&self) -> Vec<Complex64> {
        let m = self.m() as f64;
        let mut out = Vec::new();
        for j in 1..=self.m() {
            let k = Complex64::new(m + 0.5 - 2.0 * j as f64, 0.0);
            out.push(k - self.c);
            out.push(k + self.c);
        }
        out
    }

    /// `q^{m + 1/2 − 2j ∓ c}`.
    pub fn predicted_sigma_spectrum(&self, q: f64) -> Vec<Complex64> {
        let lq = q.ln();
        self.predicted_b_spectrum().into_iter().map(|k| (k * lq).exp()).collect()
    }

    pub fn spectrum_sigma_q(&self, q: f64) -> Result<SpectrumMatch> {
        let ev = eigenvalues(&self.sigma_q_matrix(q)?)?;
        match_multisets(&ev, &self.predicted_sigma_spectrum(q), 1e-300)
    }

    /// `dim 𝓔₀` predicted from the exponents: `1` iff some `m + 1/2 − 2j = ±c`,
    /// i.e. `2c = ±(2m − 4j + 1)`.
    pub fn predicted_e0_dim(&self) -> usize {
        usize::from(self.predicted_b_spectrum().iter().any(|k| k.norm() < 1e-12))
    }

    /// `B = d/dq σ_q` at `q = 1` together with its spectral splitting.
    pub fn generator_b(&self) -> Result<SpectralSplit> {
        let (h1, h2) = B_STEPS;
        let d = |h: f64| -> Result<DMatrix<f64>> {
            Ok((self.sigma_q_matrix(1.0 + h)? - self.sigma_q_matrix(1.0 - h)?) / (2.0 * h))
        };
        // error of the central difference is c₂h² + O(h⁴); h1 = 2h2
        let ratio = (h1 / h2).powi(2);
        let b = (d(h2)? * ratio - d(h1)?) / (ratio - 1.0);
        let ev = eigenvalues(&b)?;
        let spectrum = match_multisets(&ev, &self.predicted_b_spectrum(), 1.0)?;
        if spectrum.max_abs_err > 1e-6 {
            return Err(LabError::SpectrumMismatch { max_err: spectrum.max_abs_err, tol: 1e-6 });
        }
        let (eplus, e0) = image_and_kernel(&b, SPLIT_REL_TOL);
        Ok(SpectralSplit { b, e0, eplus, spectrum })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    pub b: DMatrix<f64>,
    /// orthonormal columns spanning `ker B`
    pub e0: DMatrix<f64>,
    /// orthonormal columns spanning `B(𝓔)`
    pub eplus: DMatrix<f64>,
    pub spectrum: SpectrumMatch,
}

impl SpectralSplit {
    pub fn dim_e0(&self) -> usize {
        self.e0.ncols()
    }

    /// `exp((log q) B)`.
    pub fn exp_b(&self, q: f64) -> DMatrix<f64> {
        (&self.b * q.ln()).exp()
    }

    /// Distance of `x` from `span(basis)` for orthonormal `basis`.
    fn off_span(basis: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
        if basis.ncols() == 0 {
            return x.amax();
        }
        (x - basis * (basis.transpose() * x)).amax()
    }

    /// Coordinates of `x = Pα + Kβ` in the (non-orthogonal) splitting.
    fn split(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let k = self.eplus.ncols();
        let basis = DMatrix::from_columns(
            &self.eplus.column_iter().chain(self.e0.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>(),
        );
        let coef = basis
            .lu()
            .solve(x)
            .ok_or_else(|| LabError::Degenerate("𝓔₀ and 𝓔₊ are not complementary".into()))?;
        let plus = &self.eplus * coef.rows(0, k);
        let zero = &self.e0 * coef.rows(k, self.e0.ncols());
        Ok((plus, zero))
    }

    /// Spectrum of `B` on the subspace spanned by the columns of `basis`,
    /// with the invariance residual `|BL − LM|`, `M = L⁺BL`.
    pub fn restricted_spectrum(&self, basis: &DMatrix<f64>) -> Result<(Vec<Complex64>, f64)> {
        if basis.nrows() != self.b.nrows() {
            return Err(LabError::DimensionMismatch { expected: self.b.nrows(), got: basis.nrows() });
        }
        let bl = &self.b * basis;
        let m = basis
            .clone()
            .svd(true, true)
            .solve(&bl, 1e-12)
            .map_err(|e| LabError::Degenerate(e.to_string()))?;
        let residual = (bl - basis * &m).amax();
        Ok((eigenvalues(&m)?, residual))
    }

    /// `(σ_q − 1)` restricted to `𝓔₊` in the orthonormal basis of `𝓔₊`.
    pub fn restricted(&self, sigma_q: &DMatrix<f64>) -> DMatrix<f64> {
        let id = DMatrix::<f64>::identity(sigma_q.nrows(), sigma_q.nrows());
        self.eplus.transpose() * (sigma_q - id) * &self.eplus
    }
}

/// Smallest singular value of `(σ_q − 1)|𝓔₊` and `‖(σ_q − 1)|𝓔₀‖`.
pub fn sigma_minus_one_invertibility(model: &HomogeneousModel, split: &SpectralSplit, q: f64) -> Result<(f64, f64)> {
    let sq = model.sigma_q_matrix(q)?;
    let sv = singular_values(&split.restricted(&sq));
    let min_sv = sv.last().copied().unwrap_or(f64::INFINITY);
    let id = DMatrix::<f64>::identity(sq.nrows(), sq.nrows());
    let on_e0 = if split.dim_e0() == 0 { 0.0 } else { ((&sq - id) * &split.e0).amax() };
    Ok((min_sv, on_e0))
}

/// Element `(q, 0, C_q, r, u)` of the identity component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G0Element {
    pub q: f64,
    pub r: f64,
    pub u: SolutionE,
}

impl G0Element {
    pub fn new(q: f64, r: f64, u: SolutionE) -> Self {
        Self { q, r, u }
    }

    pub fn identity(m: usize) -> Self {
        Self::new(1.0, 0.0, SolutionE::zero(m, BASE_T0))
    }

    pub fn to_iso(&self, model: &HomogeneousModel) -> Result<IsoElement> {
        Ok(IsoElement::new(model.dilation(self.q)?, self.r, self.u.clone()))
    }

    /// Max componentwise distance.
    pub fn distance(&self, other: &G0Element) -> f64 {
        (self.q - other.q).abs().max((self.r - other.r).abs()).max((self.u.cauchy() - other.u.cauchy()).amax())
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.q - 1.0).abs() <= tol && self.r.abs() <= tol && self.u.cauchy().amax() <= tol
    }
}

/// Group operations of `G₀ ≅ (0, ∞) × H` for one model, with `Ω` cached.
pub struct G0Ops<'a> {
    model: &'a HomogeneousModel,
    w: DMatrix<f64>,
}

impl<'a> G0Ops<'a> {
    pub fn new(model: &'a HomogeneousModel) -> Self {
        Self { model, w: omega_matrix(model.base().gram()) }
    }

    pub fn omega(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.w * y)[(0, 0)]
    }

    fn sigma(&self, q: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.model.sigma_q_matrix(q)? * x)
    }

    fn element(&self, q: f64, r: f64, x: DVector<f64>) -> G0Element {
        G0Element::new(q, r, SolutionE::from_cauchy(BASE_T0, &x))
    }

    /// `(qq̂, r + q⁻¹r̂ − Ω(u, σ_q û), u + σ_q û)`.
    pub fn compose(&self, a: &G0Element, b: &G0Element) -> Result<G0Element> {
        let ua = a.u.cauchy();
        let sb = self.sigma(a.q, &b.u.cauchy())?;
        let r = a.r + b.r / a.q - self.omega(&ua, &sb);
        Ok(self.element(a.q * b.q, r, ua + sb))
    }

    /// `(q⁻¹, −qr, −σ_q⁻¹u)`.
    pub fn inverse(&self, a: &G0Element) -> Result<G0Element> {
        let back = self.sigma(1.0 / a.q, &a.u.cauchy())?;
        Ok(self.element(1.0 / a.q, -a.q * a.r, -back))
    }

    /// `aba⁻¹b⁻¹`.
    pub fn commutator(&self, a: &G0Element, b: &G0Element) -> Result<G0Element> {
        let ab = self.compose(a, b)?;
        let ab_ainv = self.compose(&ab, &self.inverse(a)?)?;
        self.compose(&ab_ainv, &self.inverse(b)?)
    }

    /// 𝓔-component of the commutator as predicted: `(σ_q − 1)û − (σ_q̂ − 1)u`.
    pub fn commutator_e_component(&self, a: &G0Element, b: &G0Element) -> Result<DVector<f64>> {
        let ua = a.u.cauchy();
        let ub = b.u.cauchy();
        Ok(self.sigma(a.q, &ub)? - &ub - (self.sigma(b.q, &ua)? - &ua))
    }

    pub fn apply(&self, a: &G0Element, x: &ChartPoint) -> Result<ChartPoint> {
        iso_apply(self.model.base(), &a.to_iso(self.model)?, x)
    }

    /// Matrix of `(r̂, û) ↦ (q⁻¹r̂ − 2Ω(u, σ_q û), σ_q û)` in `(r, Cauchy)`
    /// coordinates.
    pub fn conjugation_matrix(&self, a: &G0Element) -> Result<DMatrix<f64>> {
        let k = 2 * self.model.m();
        let sq = self.model.sigma_q_matrix(a.q)?;
        let row = (a.u.cauchy().transpose() * &self.w * &sq) * -2.0;
        let mut out = DMatrix::zeros(k + 1, k + 1);
        out[(0, 0)] = 1.0 / a.q;
        out.view_mut((0, 1), (1, k)).copy_from(&row);
        out.view_mut((1, 1), (k, k)).copy_from(&sq);
        Ok(out)
    }

    /// `J(a, z, q, w) = (q, a(1 − q⁻¹) + Ω(z, σ_q z + (1 + q⁻¹)w), (σ_q − 1)z + w)`.
    pub fn j(&self, split: &SpectralSplit, a: f64, z: &DVector<f64>, q: f64, w: &DVector<f64>) -> Result<G0Element> {
        let rz = SpectralSplit::off_span(&split.eplus, z);
        if rz > 1e-8 {
            return Err(LabError::NotInSubspace { residual: rz });
        }
        let rw = SpectralSplit::off_span(&split.e0, w);
        if rw > 1e-8 {
            return Err(LabError::NotInSubspace { residual: rw });
        }
        let sz = self.sigma(q, z)?;
        let r = a * (1.0 - 1.0 / q) + self.omega(z, &(&sz + w * (1.0 + 1.0 / q)));
        Ok(self.element(q, r, &sz - z + w))
    }

    /// Inverse of `J` on elements with `q ≠ 1`: returns `(a, z, w)`.
    pub fn j_inverse(&self, split: &SpectralSplit, g: &G0Element) -> Result<(f64, DVector<f64>, DVector<f64>)> {
        if (g.q - 1.0).abs() < 1e-12 {
            return Err(LabError::InvalidParameter("J is only invertible off H (q ≠ 1)".into()));
        }
        let x = g.u.cauchy();
        let (plus, w) = split.split(&x)?;
        let sq = self.model.sigma_q_matrix(g.q)?;
        let restricted = split.restricted(&sq);
        let coords = restricted
            .lu()
            .solve(&(split.eplus.transpose() * &plus))
            .ok_or_else(|| LabError::Degenerate("σ_q − 1 is singular on 𝓔₊".into()))?;
        let z = &split.eplus * coords;
        let sz = &sq * &z;
        let a = (g.r - self.omega(&z, &(&sz + &w * (1.0 + 1.0 / g.q)))) / (1.0 - 1.0 / g.q);
        Ok((a, z, w))
    }

    pub fn commute_test(&self, a: &G0Element, b: &G0Element) -> Result<CommuteTest> {
        let direct = self.commutator(a, b)?.is_identity(COMMUTE_TOL);
        let ua = a.u.cauchy();
        let ub = b.u.cauchy();
        let sa_ub = self.sigma(a.q, &ub)?;
        let sb_ua = self.sigma(b.q, &ua)?;
        let e_res = ((&sa_ub - &ub) - (&sb_ua - &ua)).amax();
        let lhs = a.r + b.r / a.q - self.omega(&ua, &sa_ub);
        let rhs = b.r + a.r / b.q - self.omega(&ub, &sb_ua);
        let criterion = e_res <= COMMUTE_TOL && (lhs - rhs).abs() <= COMMUTE_TOL;
        Ok(CommuteTest { direct, criterion })
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> G0Element {
        let q = rng.gen_range(-0.7_f64..0.7).exp();
        G0Element::new(q, rng.gen_range(-1.0..1.0), random_solution(self.model.m(), BASE_T0, rng))
    }

    /// Random `q` bounded away from `1`.
    pub(crate) fn random_q<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let l: f64 = rng.gen_range(0.2..0.7);
        if rng.gen_bool(0.5) {
            l.exp()
        } else {
            (-l).exp()
        }
    }

    pub(crate) fn random_in<R: Rng + ?Sized>(basis: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
        let coef = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        basis * coef
    }

    /// Samples triples from single classes `K_{a,z}` and checks transitivity of
    /// commutation; also checks that elements of different classes never commute.
    pub fn tcp_sample_test<R: Rng + ?Sized>(&self, split: &SpectralSplit, n_triples: usize, rng: &mut R) -> Result<TcpReport> {
        let mut report = TcpReport::default();
        for _ in 0..n_triples {
            let a = rng.gen_range(-1.0..1.0);
            let z = Self::random_in(&split.eplus, rng);
            let mut xs = Vec::with_capacity(3);
            for _ in 0..3 {
                let w = Self::random_in(&split.e0, rng);
                xs.push(self.j(split, a, &z, Self::random_q(rng), &w)?);
            }
            let xy = self.commute_test(&xs[0], &xs[1])?;
            let yz = self.commute_test(&xs[1], &xs[2])?;
            let xz = self.commute_test(&xs[0], &xs[2])?;
            report.triples += 1;
            if xy.direct && yz.direct {
                report.premises_held += 1;
                if !xz.direct {
                    report.counterexamples += 1;
                }
            }
            // a partner from a different class must fail to commute with xs[0]
            let a2 = a + rng.gen_range(0.5..1.5);
            let z2 = Self::random_in(&split.eplus, rng);
            let other = self.j(split, a2, &z2, Self::random_q(rng), &Self::random_in(&split.e0, rng))?;
            if self.commute_test(&xs[0], &other)?.direct {
                report.cross_class_commuting += 1;
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommuteTest {
    pub direct: bool,
    pub criterion: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcpReport {
    pub triples: usize,
    pub premises_held: usize,
    pub counterexamples: usize,
    pub cross_class_commuting: usize,
}

impl TcpReport {
    pub fn pass(&self) -> bool {
        self.counterexamples == 0 && self.cross_class_commuting == 0 && self.premises_held == self.triples
    }
}

/// Affine change `t ↦ t − t₀` taking `f(t) = h(t − t₀)⁻²` on `(t₀, ∞)` to the
/// standard form; returns `(q, p, c)` with `c = √(h + 1/4)` (principal branch).
pub fn normalize_to_standard(h: f64, t0: f64) -> Result<(f64, f64, Complex64)> {
    if h == 0.0 || !h.is_finite() {
        return Err(LabError::InvalidParameter(format!("h = {h} must be nonzero")));
    }
    let c = Complex64::new(h + 0.25, 0.0).sqrt();
    // the principal root of a negative real is purely imaginary
    let c = Complex64::new(c.re.abs(), c.im.abs());
    Ok((1.0, -t0, c))
}
