//! Curvature of a coordinate metric from its 3-jet.
//!
//! Tensors are flat row-major arrays. Index orders:
//! * `christoffel[a,b,c]` = `Γ^a_{bc}`
//! * `riemann[a,b,c,d]` = `R^a_{bcd}`, with
//!   `R^a_{bcd} = ∂_cΓ^a_{db} − ∂_dΓ^a_{cb} + Γ^a_{ce}Γ^e_{db} − Γ^a_{de}Γ^e_{cb}`,
//!   so that `(R(X,Y)Z)^a = R^a_{bcd} Z^b X^c Y^d`
//! * `riemann_lower[a,b,c,d]` = `g_{ae}R^e_{bcd}`, likewise `weyl`
//! * `nabla_*[f,a,b,c,d]` = `∇_f` of the lowered tensor

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Metric components and their coordinate partials up to order three.
///
/// `dg[c,a,b] = ∂_c g_{ab}`, `d2g[c,d,a,b] = ∂_c∂_d g_{ab}`,
/// `d3g[c,d,e,a,b] = ∂_c∂_d∂_e g_{ab}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    pub n: usize,
    pub g: DMatrix<f64>,
    pub dg: Vec<f64>,
    pub d2g: Vec<f64>,
    pub d3g: Vec<f64>,
}

impl MetricJet {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            g: DMatrix::zeros(n, n),
            dg: vec![0.0; n.pow(3)],
            d2g: vec![0.0; n.pow(4)],
            d3g: vec![0.0; n.pow(5)],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Ix(usize);

impl Ix {
    #[inline]
    fn i3(self, a: usize, b: usize, c: usize) -> usize {
        (a * self.0 + b) * self.0 + c
    }
    #[inline]
    fn i4(self, a: usize, b: usize, c: usize, d: usize) -> usize {
        self.i3(a, b, c) * self.0 + d
    }
    #[inline]
    fn i5(self, a: usize, b: usize, c: usize, d: usize, e: usize) -> usize {
        self.i4(a, b, c, d) * self.0 + e
    }
}

/// Christoffel symbols `Γ^a_{bc}` from `g⁻¹` and `∂g` alone.
pub fn christoffel(ginv: &DMatrix<f64>, dg: &[f64]) -> Vec<f64> {
    let n = ginv.nrows();
    let ix = Ix(n);
    let mut first = vec![0.0; n.pow(3)];
    for e in 0..n {
        for b in 0..n {
            for c in b..n {
                let v = 0.5 * (dg[ix.i3(b, e, c)] + dg[ix.i3(c, e, b)] - dg[ix.i3(e, b, c)]);
                first[ix.i3(e, b, c)] = v;
                first[ix.i3(e, c, b)] = v;
            }
        }
    }
    let mut gamma = vec![0.0; n.pow(3)];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for e in 0..n {
                    acc += ginv[(a, e)] * first[ix.i3(e, b, c)];
                }
                gamma[ix.i3(a, b, c)] = acc;
            }
        }
    }
    gamma
}

type ConnectionJet = (DMatrix<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

/// `g⁻¹`, `∂g⁻¹`, `Γ_{e,bc}`, `∂_dΓ_{e,bc}`, `Γ^a_{bc}`, `∂_dΓ^a_{bc}`.
fn connection_jet(jet: &MetricJet) -> ConnectionJet {
    let n = jet.n;
    let ix = Ix(n);
    let ginv = jet.g.clone().try_inverse().expect("metric must be invertible");
    let (dg, d2g) = (&jet.dg, &jet.d2g);
    let mut dginv = vec![0.0; n.pow(3)];
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for e in 0..n {
                    for f in 0..n {
                        acc += ginv[(a, e)] * dg[ix.i3(c, e, f)] * ginv[(f, b)];
                    }
                }
                dginv[ix.i3(c, a, b)] = -acc;
            }
        }
    }
    let mut g1 = vec![0.0; n.pow(3)];
    let mut dg1 = vec![0.0; n.pow(4)];
    for e in 0..n {
        for b in 0..n {
            for c in 0..n {
                g1[ix.i3(e, b, c)] = 0.5 * (dg[ix.i3(b, e, c)] + dg[ix.i3(c, e, b)] - dg[ix.i3(e, b, c)]);
                for d in 0..n {
                    dg1[ix.i4(d, e, b, c)] =
                        0.5 * (d2g[ix.i4(d, b, e, c)] + d2g[ix.i4(d, c, e, b)] - d2g[ix.i4(d, e, b, c)]);
                }
            }
        }
    }
    let mut gam = vec![0.0; n.pow(3)];
    let mut dgam = vec![0.0; n.pow(4)];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for e in 0..n {
                    acc += ginv[(a, e)] * g1[ix.i3(e, b, c)];
                }
                gam[ix.i3(a, b, c)] = acc;
                for d in 0..n {
                    let mut acc = 0.0;
                    for e in 0..n {
                        acc += dginv[ix.i3(d, a, e)] * g1[ix.i3(e, b, c)] + ginv[(a, e)] * dg1[ix.i4(d, e, b, c)];
                    }
                    dgam[ix.i4(d, a, b, c)] = acc;
                }
            }
        }
    }
    (ginv, dginv, g1, dg1, gam, dgam)
}

fn riemann_from(n: usize, gam: &[f64], dgam: &[f64]) -> Vec<f64> {
    let ix = Ix(n);
    let mut riem = vec![0.0; n.pow(4)];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut acc = dgam[ix.i4(c, a, d, b)] - dgam[ix.i4(d, a, c, b)];
                    for e in 0..n {
                        acc += gam[ix.i3(a, c, e)] * gam[ix.i3(e, d, b)] - gam[ix.i3(a, d, e)] * gam[ix.i3(e, c, b)];
                    }
                    riem[ix.i4(a, b, c, d)] = acc;
                }
            }
        }
    }
    riem
}

/// `Γ^a_{bc}` and `R^a_{bcd}` only; needs the jet through second order.
pub fn christoffel_and_riemann(jet: &MetricJet) -> (Vec<f64>, Vec<f64>) {
    let (_, _, _, _, gam, dgam) = connection_jet(jet);
    let riem = riemann_from(jet.n, &gam, &dgam);
    (gam, riem)
}

/// `(R(X,Y)Z)^a = R^a_{bcd} Z^b X^c Y^d` for a bare `R^a_{bcd}` array.
pub fn apply_riemann(n: usize, riemann: &[f64], x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    let ix = Ix(n);
    let mut out = vec![0.0; n];
    for (a, o) in out.iter_mut().enumerate() {
        for b in 0..n {
            if z[b] == 0.0 {
                continue;
            }
            for c in 0..n {
                for d in 0..n {
                    *o += riemann[ix.i4(a, b, c, d)] * z[b] * x[c] * y[d];
                }
            }
        }
    }
    out
}

/// All curvature data at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvaturePack {
    pub n: usize,
    pub metric: Vec<f64>,
    pub metric_inv: Vec<f64>,
    pub christoffel: Vec<f64>,
    pub riemann: Vec<f64>,
    pub riemann_lower: Vec<f64>,
    pub ricci: Vec<f64>,
    pub scalar: f64,
    pub weyl: Vec<f64>,
    pub nabla_weyl: Vec<f64>,
    pub nabla_riemann: Vec<f64>,
}

impl CurvaturePack {
    pub fn from_jet(jet: &MetricJet) -> Self {
        let n = jet.n;
        let ix = Ix(n);
        let g = &jet.g;
        let (ginv, dginv, g1, dg1, gam, dgam) = connection_jet(jet);
        let (dg, d2g, d3g) = (&jet.dg, &jet.d2g, &jet.d3g);

        let mut d2ginv = vec![0.0; n.pow(4)];
        for d in 0..n {
            for c in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let mut acc = 0.0;
                        for e in 0..n {
                            for f in 0..n {
                                acc += dginv[ix.i3(d, a, e)] * dg[ix.i3(c, e, f)] * ginv[(f, b)]
                                    + ginv[(a, e)] * d2g[ix.i4(d, c, e, f)] * ginv[(f, b)]
                                    + ginv[(a, e)] * dg[ix.i3(c, e, f)] * dginv[ix.i3(d, f, b)];
                            }
                        }
                        d2ginv[ix.i4(d, c, a, b)] = -acc;
                    }
                }
            }
        }
        let mut d2g1 = vec![0.0; n.pow(5)];
        for f in 0..n {
            for d in 0..n {
                for e in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            d2g1[ix.i5(f, d, e, b, c)] = 0.5
                                * (d3g[ix.i5(f, d, b, e, c)] + d3g[ix.i5(f, d, c, e, b)] - d3g[ix.i5(f, d, e, b, c)]);
                        }
                    }
                }
            }
        }
        // ∂∂Γ (f,d,a,b,c)
        let mut d2gam = vec![0.0; n.pow(5)];
        for f in 0..n {
            for d in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let mut acc = 0.0;
                            for e in 0..n {
                                acc += d2ginv[ix.i4(f, d, a, e)] * g1[ix.i3(e, b, c)]
                                    + dginv[ix.i3(d, a, e)] * dg1[ix.i4(f, e, b, c)]
                                    + dginv[ix.i3(f, a, e)] * dg1[ix.i4(d, e, b, c)]
                                    + ginv[(a, e)] * d2g1[ix.i5(f, d, e, b, c)];
                            }
                            d2gam[ix.i5(f, d, a, b, c)] = acc;
                        }
                    }
                }
            }
        }

        let riem = riemann_from(n, &gam, &dgam);
        let mut driem = vec![0.0; n.pow(5)];
        for f in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let mut acc = d2gam[ix.i5(f, c, a, d, b)] - d2gam[ix.i5(f, d, a, c, b)];
                            for e in 0..n {
                                acc += dgam[ix.i4(f, a, c, e)] * gam[ix.i3(e, d, b)]
                                    + gam[ix.i3(a, c, e)] * dgam[ix.i4(f, e, d, b)]
                                    - dgam[ix.i4(f, a, d, e)] * gam[ix.i3(e, c, b)]
                                    - gam[ix.i3(a, d, e)] * dgam[ix.i4(f, e, c, b)];
                            }
                            driem[ix.i5(f, a, b, c, d)] = acc;
                        }
                    }
                }
            }
        }

        // covariant derivative of the (1,3) tensor
        let mut nriem_up = vec![0.0; n.pow(5)];
        for f in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let mut acc = driem[ix.i5(f, a, b, c, d)];
                            for e in 0..n {
                                acc += gam[ix.i3(a, f, e)] * riem[ix.i4(e, b, c, d)]
                                    - gam[ix.i3(e, f, b)] * riem[ix.i4(a, e, c, d)]
                                    - gam[ix.i3(e, f, c)] * riem[ix.i4(a, b, e, d)]
                                    - gam[ix.i3(e, f, d)] * riem[ix.i4(a, b, c, e)];
                            }
                            nriem_up[ix.i5(f, a, b, c, d)] = acc;
                        }
                    }
                }
            }
        }

        let mut riem_low = vec![0.0; n.pow(4)];
        let mut nriem = vec![0.0; n.pow(5)];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut acc = 0.0;
                        for e in 0..n {
                            acc += g[(a, e)] * riem[ix.i4(e, b, c, d)];
                        }
                        riem_low[ix.i4(a, b, c, d)] = acc;
                        for f in 0..n {
                            let mut acc = 0.0;
                            for e in 0..n {
                                acc += g[(a, e)] * nriem_up[ix.i5(f, e, b, c, d)];
                            }
                            nriem[ix.i5(f, a, b, c, d)] = acc;
                        }
                    }
                }
            }
        }

        // Ricci R_{bd} = R^a_{bad}, its covariant derivative, scalar
        let mut ric = vec![0.0; n * n];
        let mut nric = vec![0.0; n.pow(3)];
        for b in 0..n {
            for d in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    acc += riem[ix.i4(a, b, a, d)];
                }
                ric[b * n + d] = acc;
                for f in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        acc += nriem_up[ix.i5(f, a, b, a, d)];
                    }
                    nric[ix.i3(f, b, d)] = acc;
                }
            }
        }
        let mut scalar = 0.0;
        let mut nscalar = vec![0.0; n];
        for b in 0..n {
            for d in 0..n {
                scalar += ginv[(b, d)] * ric[b * n + d];
                for f in 0..n {
                    nscalar[f] += ginv[(b, d)] * nric[ix.i3(f, b, d)];
                }
            }
        }

        let weyl = weyl_from(n, g, &riem_low, &ric, scalar);
        let mut nweyl = vec![0.0; n.pow(5)];
        for f in 0..n {
            let slice = &nriem[f * n.pow(4)..(f + 1) * n.pow(4)];
            let w = weyl_from(n, g, slice, &nric[f * n * n..(f + 1) * n * n], nscalar[f]);
            nweyl[f * n.pow(4)..(f + 1) * n.pow(4)].copy_from_slice(&w);
        }

        Self {
            n,
            metric: g.transpose().as_slice().to_vec(),
            metric_inv: ginv.transpose().as_slice().to_vec(),
            christoffel: gam,
            riemann: riem,
            riemann_lower: riem_low,
            ricci: ric,
            scalar,
            weyl,
            nabla_weyl: nweyl,
            nabla_riemann: nriem,
        }
    }

    fn ix(&self) -> Ix {
        Ix(self.n)
    }

    pub fn g(&self, a: usize, b: usize) -> f64 {
        self.metric[a * self.n + b]
    }

    pub fn ginv(&self, a: usize, b: usize) -> f64 {
        self.metric_inv[a * self.n + b]
    }

    pub fn gamma(&self, a: usize, b: usize, c: usize) -> f64 {
        self.christoffel[self.ix().i3(a, b, c)]
    }

    pub fn riemann_up(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.riemann[self.ix().i4(a, b, c, d)]
    }

    pub fn ricci_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.ricci)
    }

    /// `W^a_{bcd}`.
    pub fn weyl_up(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let ix = self.ix();
        (0..self.n).map(|e| self.ginv(a, e) * self.weyl[ix.i4(e, b, c, d)]).sum()
    }

    /// `(R(X,Y)Z)^a = R^a_{bcd} Z^b X^c Y^d`.
    pub fn riemann_apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        apply_riemann(self.n, &self.riemann, x, y, z)
    }

    /// `(W(X,Y)Z)^a = W^a_{bcd} Z^b X^c Y^d`.
    pub fn weyl_apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ix = self.ix();
        let mut low = vec![0.0; n];
        for (e, o) in low.iter_mut().enumerate() {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        *o += self.weyl[ix.i4(e, b, c, d)] * z[b] * x[c] * y[d];
                    }
                }
            }
        }
        (0..n).map(|a| (0..n).map(|e| self.ginv(a, e) * low[e]).sum()).collect()
    }

    /// Max violation of antisymmetry in each pair, pair symmetry and the first
    /// Bianchi identity of the lowered Riemann tensor.
    pub fn riemann_symmetry_residual(&self) -> f64 {
        let n = self.n;
        let ix = self.ix();
        let r = |a, b, c, d| self.riemann_lower[ix.i4(a, b, c, d)];
        let mut res = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let x = r(a, b, c, d);
                        res = res
                            .max((x + r(b, a, c, d)).abs())
                            .max((x + r(a, b, d, c)).abs())
                            .max((x - r(c, d, a, b)).abs())
                            .max((x + r(a, c, d, b) + r(a, d, b, c)).abs());
                    }
                }
            }
        }
        res
    }

    /// Max over all metric contractions of the Weyl tensor.
    pub fn weyl_trace_residual(&self) -> f64 {
        let n = self.n;
        let ix = self.ix();
        let w = |a, b, c, d| self.weyl[ix.i4(a, b, c, d)];
        let mut res = 0.0_f64;
        for x in 0..n {
            for y in 0..n {
                let mut t = [0.0; 6];
                for p in 0..n {
                    for q in 0..n {
                        let h = self.ginv(p, q);
                        if h == 0.0 {
                            continue;
                        }
                        t[0] += h * w(p, q, x, y);
                        t[1] += h * w(p, x, q, y);
                        t[2] += h * w(p, x, y, q);
                        t[3] += h * w(x, p, q, y);
                        t[4] += h * w(x, p, y, q);
                        t[5] += h * w(x, y, p, q);
                    }
                }
                res = t.iter().fold(res, |m, v| m.max(v.abs()));
            }
        }
        res
    }

    /// `∇_e R_{abcd} + ∇_c R_{abde} + ∇_d R_{abec}`.
    pub fn second_bianchi_residual(&self) -> f64 {
        let n = self.n;
        let ix = self.ix();
        let nr = |f, a, b, c, d| self.nabla_riemann[ix.i5(f, a, b, c, d)];
        let mut res = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        for e in 0..n {
                            res = res.max((nr(e, a, b, c, d) + nr(c, a, b, d, e) + nr(d, a, b, e, c)).abs());
                        }
                    }
                }
            }
        }
        res
    }

    pub fn max_weyl(&self) -> f64 {
        crate::linalg::max_abs_slice(&self.weyl)
    }

    pub fn max_nabla_weyl(&self) -> f64 {
        crate::linalg::max_abs_slice(&self.nabla_weyl)
    }

    pub fn max_riemann(&self) -> f64 {
        crate::linalg::max_abs_slice(&self.riemann_lower)
    }

    pub fn max_nabla_riemann(&self) -> f64 {
        crate::linalg::max_abs_slice(&self.nabla_riemann)
    }
}

/// Weyl part of a lowered curvature-type tensor given its Ricci contraction and
/// trace. Linear in its inputs, so it also maps `∇R` to `∇W`.
fn weyl_from(n: usize, g: &DMatrix<f64>, r: &[f64], ric: &[f64], scalar: f64) -> Vec<f64> {
    let ix = Ix(n);
    let nf = n as f64;
    let k1 = 1.0 / (nf - 2.0);
    let k2 = scalar / ((nf - 1.0) * (nf - 2.0));
    let rc = |a: usize, b: usize| ric[a * n + b];
    let mut w = vec![0.0; n.pow(4)];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let kn = rc(a, c) * g[(b, d)] - rc(a, d) * g[(b, c)] - rc(b, c) * g[(a, d)]
                        + rc(b, d) * g[(a, c)];
                    let gg = g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)];
                    w[ix.i4(a, b, c, d)] = r[ix.i4(a, b, c, d)] - k1 * kn + k2 * gg;
                }
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Round 2-sphere of radius ρ in coordinates (θ, φ).
    fn sphere_jet(rho: f64, theta: f64) -> MetricJet {
        let n = 2;
        let ix = Ix(n);
        let mut j = MetricJet::zeros(n);
        let (s, c) = theta.sin_cos();
        let r2 = rho * rho;
        j.g[(0, 0)] = r2;
        j.g[(1, 1)] = r2 * s * s;
        // g_φφ = ρ² sin²θ and its θ-derivatives
        j.dg[ix.i3(0, 1, 1)] = r2 * 2.0 * s * c;
        j.d2g[ix.i4(0, 0, 1, 1)] = r2 * 2.0 * (c * c - s * s);
        j.d3g[ix.i5(0, 0, 0, 1, 1)] = r2 * -8.0 * s * c;
        j
    }

    #[test]
    fn sphere_christoffels() {
        let rho = 1.7;
        let theta = 0.9;
        let jet = sphere_jet(rho, theta);
        let n = 2;
        let ginv = jet.g.clone().try_inverse().unwrap();
        let gamma = christoffel(&ginv, &jet.dg);
        let ix = Ix(n);
        // Γ^θ_φφ = −sinθ cosθ, Γ^φ_θφ = cotθ
        assert!((gamma[ix.i3(0, 1, 1)] + theta.sin() * theta.cos()).abs() < 1e-14);
        assert!((gamma[ix.i3(1, 0, 1)] - theta.cos() / theta.sin()).abs() < 1e-14);

    }

    #[test]
    fn product_of_spheres_matches_known_curvature() {
        // S²(ρ) × ℝ² with a flat factor: Ric = diag(1, sin²θ, 0, 0), S = 2/ρ²
        let rho = 1.3;
        let theta = 0.7;
        let s2 = sphere_jet(rho, theta);
        let n = 4;
        let ix = Ix(n);
        let ix2 = Ix(2);
        let mut jet = MetricJet::zeros(n);
        for a in 0..2 {
            for b in 0..2 {
                jet.g[(a, b)] = s2.g[(a, b)];
                jet.dg[ix.i3(0, a, b)] = s2.dg[ix2.i3(0, a, b)];
                jet.d2g[ix.i4(0, 0, a, b)] = s2.d2g[ix2.i4(0, 0, a, b)];
                jet.d3g[ix.i5(0, 0, 0, a, b)] = s2.d3g[ix2.i5(0, 0, 0, a, b)];
            }
        }
        jet.g[(2, 2)] = 1.0;
        jet.g[(3, 3)] = 1.0;
        let pack = CurvaturePack::from_jet(&jet);
        assert!((pack.scalar - 2.0 / (rho * rho)).abs() < 1e-12);
        let ric = pack.ricci_matrix();
        assert!((ric[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((ric[(1, 1)] - theta.sin().powi(2)).abs() < 1e-12);
        assert!(pack.riemann_symmetry_residual() < 1e-12);
        assert!(pack.weyl_trace_residual() < 1e-12);
        assert!(pack.second_bianchi_residual() < 1e-12);
        // the sphere factor is locally symmetric
        assert!(pack.max_nabla_riemann() < 1e-12);
    }
}
