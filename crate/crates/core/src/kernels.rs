//! Candidate reconstructions from combined satellite and ground data.
//!
//! A candidate is
//!
//! ```text
//! u(x) = ∫_{Ω_R} Φ(x,y) f2(y) dΩ_R(y) + ∫_{Γ_r} Ψ̃(x,y) f1(y) dΓ_r(y),   x ∈ Γ_r
//! ```
//!
//! with zonal kernels
//!
//! ```text
//! Φ(x,y) = Σ_{n ≤ N} Φ^(n) (2n+1)/(4π r R) P_n(x̂·ŷ)
//! Ψ̃(x,y) = Σ_{n ≤ M} Ψ̃^(n) (2n+1)/(4π r²)  P_n(x̂·ŷ),   Ψ̃^(n) = Φ̃^(n) − Φ^(n)(r/R)^n
//! ```
//!
//! The symbols minimize the quadratic functional
//!
//! ```text
//! F = α̃ Σ_{n≤M} (1 − Φ̃^(n))² + α Σ_{n≤N} (1 − Φ^(n) s_n)² + β Σ_{n≤N} Φ^(n)²
//!     + ‖Ψ̃(x_c, ·)‖²_{L²(Ω_r∖Γ_r)},        s_n = (r/R)^n,
//! ```
//!
//! where the localization penalty anchors the kernel at the cap center
//! `x_c = (0, 0, r)`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{project, sample, DiscreteField};
use crate::linalg::DenseMatrix;
use crate::quadrature::{gauss_legendre_on, CapGeometry, Domain, QuadratureRule};
use crate::scalar::Real;
use crate::sphharm::{flat_index, legendre_all, SphCoeffs};

/// Regularization weights and truncation degrees of one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateParams<T> {
    pub alpha: T,
    pub alpha_tilde: T,
    pub beta: T,
    /// Truncation degree `N_k` of the satellite kernel.
    pub deg_sat: usize,
    /// Truncation degree `M_k ≥ N_k` of the ground kernel.
    pub deg_ground: usize,
    /// Satellite sphere radius `R`.
    pub sat_radius: T,
    /// Ground cap; its radius is `r`.
    pub cap: CapGeometry<T>,
}

impl<T: Real> CandidateParams<T> {
    pub fn ground_radius(&self) -> T {
        self.cap.radius()
    }

    /// Continuation ratio `r / R`.
    pub fn ratio(&self) -> T {
        self.cap.radius() / self.sat_radius
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.alpha > T::zero()) || !(self.alpha_tilde > T::zero()) {
            return bad("alpha and alpha_tilde must be positive");
        }
        if !(self.beta >= T::zero()) {
            return bad("beta must be non-negative");
        }
        if self.deg_sat > self.deg_ground {
            return bad("satellite degree must not exceed ground degree");
        }
        if !(self.cap.radius() < self.sat_radius) {
            return bad("ground radius must be below the satellite radius");
        }
        Ok(())
    }

    /// `s_n = (r/R)^n` for `n ≤ N_k`.
    pub fn damping(&self) -> Vec<T> {
        powers(self.ratio(), self.deg_sat)
    }
}

fn powers<T: Real>(x: T, n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = T::one();
    for _ in 0..=n {
        out.push(p);
        p = p * x;
    }
    out
}

/// Degree symbols of one candidate's kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSymbols<T> {
    phi: Vec<T>,
    phi_tilde: Vec<T>,
    psi_tilde: Vec<T>,
}

impl<T: Real> KernelSymbols<T> {
    /// Builds the symbols and derives `Ψ̃^`; `ratio = r/R`.
    pub fn new(phi: Vec<T>, phi_tilde: Vec<T>, ratio: T) -> Result<Self> {
        if phi.len() > phi_tilde.len() || phi_tilde.is_empty() {
            return Err(Error::InvalidArgument(
                "need 1 ≤ len(phi) ≤ len(phi_tilde)".into(),
            ));
        }
        let s = powers(ratio, phi.len().saturating_sub(1));
        let psi_tilde = phi_tilde
            .iter()
            .enumerate()
            .map(|(n, &pt)| match phi.get(n) {
                Some(&p) => pt - p * s[n],
                None => pt,
            })
            .collect();
        Ok(Self {
            phi,
            phi_tilde,
            psi_tilde,
        })
    }

    pub fn deg_sat(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn deg_ground(&self) -> usize {
        self.phi_tilde.len() - 1
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn phi_tilde(&self) -> &[T] {
        &self.phi_tilde
    }

    pub fn psi_tilde(&self) -> &[T] {
        &self.psi_tilde
    }

    /// Writes `n,phi,phi_tilde,psi_tilde`; `phi` is blank above `N_k`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,phi,phi_tilde,psi_tilde")?;
        for n in 0..self.phi_tilde.len() {
            let phi = self
                .phi
                .get(n)
                .map(|v| format!("{:.16e}", v.as_f64()))
                .unwrap_or_default();
            writeln!(
                out,
                "{n},{phi},{:.16e},{:.16e}",
                self.phi_tilde[n].as_f64(),
                self.psi_tilde[n].as_f64()
            )?;
        }
        Ok(())
    }
}

/// `G_{nm} = (2n+1)(2m+1)/(8π r²) ∫_{-1}^{t_min} P_n P_m dt`, so that the
/// squared `L²(Ω_r∖Γ_r)` norm of a zonal kernel anchored at the cap center
/// with symbols `ψ` is `ψᵀ G ψ`.
pub fn localization_gram<T: Real>(deg: usize, cap: &CapGeometry<T>) -> DenseMatrix<T> {
    let mut g = DenseMatrix::zeros(deg + 1);
    let lo = -T::one();
    let hi = cap.t_min();
    if !(hi > lo) {
        return g;
    }
    // deg + 1 nodes are exact through degree 2·deg + 1
    let (t, w) = gauss_legendre_on(deg + 1, lo, hi);
    let r = cap.radius();
    let scale = T::one() / (T::lit(8.0) * T::PI() * r * r);
    let mut p = vec![T::zero(); deg + 1];
    for (&ti, &wi) in t.iter().zip(&w) {
        legendre_all(ti, &mut p);
        for n in 0..=deg {
            let a = wi * T::of(2 * n + 1) * p[n];
            for m in 0..=n {
                g.add_to(n, m, a * T::of(2 * m + 1) * p[m]);
            }
        }
    }
    for n in 0..=deg {
        for m in 0..=n {
            let v = g.get(n, m) * scale;
            g.set(n, m, v);
            g.set(m, n, v);
        }
    }
    g
}

/// Quadratic form of `F`: `F(v) = vᵀ A v − 2 bᵀ v + c` over the stacked
/// unknown `v = [Φ^(0..=N), Φ̃^(0..=M)]`.
#[derive(Debug, Clone)]
pub struct NormalSystem<T> {
    pub matrix: DenseMatrix<T>,
    pub rhs: Vec<T>,
    pub constant: T,
}

impl<T: Real> NormalSystem<T> {
    pub fn new(p: &CandidateParams<T>) -> Result<Self> {
        p.validate()?;
        let (nn, mm) = (p.deg_sat, p.deg_ground);
        let dim = nn + mm + 2;
        let off = nn + 1;
        let s = p.damping();
        let g = localization_gram(mm, &p.cap);
        let mut a = DenseMatrix::zeros(dim);
        let mut b = vec![T::zero(); dim];
        for n in 0..=nn {
            a.add_to(n, n, p.alpha * s[n] * s[n] + p.beta);
            b[n] = p.alpha * s[n];
        }
        for n in 0..=mm {
            a.add_to(off + n, off + n, p.alpha_tilde);
            b[off + n] = p.alpha_tilde;
        }
        // ψ_n = Φ̃_n − s_n Φ_n (n ≤ N), ψ_n = Φ̃_n otherwise
        let terms = |n: usize| -> Vec<(usize, T)> {
            let mut t = vec![(off + n, T::one())];
            if n <= nn {
                t.push((n, -s[n]));
            }
            t
        };
        for n in 0..=mm {
            let tn = terms(n);
            for m in 0..=mm {
                let gnm = g.get(n, m);
                if gnm == T::zero() {
                    continue;
                }
                for &(i, ci) in &tn {
                    for (j, cj) in terms(m) {
                        a.add_to(i, j, gnm * ci * cj);
                    }
                }
            }
        }
        let constant = p.alpha_tilde * T::of(mm + 1) + p.alpha * T::of(nn + 1);
        Ok(Self {
            matrix: a,
            rhs: b,
            constant,
        })
    }

    pub fn value(&self, v: &[T]) -> T {
        let av = self.matrix.mul_vec(v);
        let quad = crate::scalar::dot(v, &av);
        quad - T::lit(2.0) * crate::scalar::dot(&self.rhs, v) + self.constant
    }

    /// `∇F(v) = 2 (A v − b)`.
    pub fn gradient(&self, v: &[T]) -> Vec<T> {
        self.matrix
            .mul_vec(v)
            .iter()
            .zip(&self.rhs)
            .map(|(&x, &y)| T::lit(2.0) * (x - y))
            .collect()
    }
}

/// Evaluates `F` term by term from its definition.
pub fn functional_value<T: Real>(p: &CandidateParams<T>, phi: &[T], phi_tilde: &[T]) -> Result<T> {
    p.validate()?;
    if phi.len() != p.deg_sat + 1 || phi_tilde.len() != p.deg_ground + 1 {
        return Err(Error::InvalidArgument("symbol vector length mismatch".into()));
    }
    let sym = KernelSymbols::new(phi.to_vec(), phi_tilde.to_vec(), p.ratio())?;
    let s = p.damping();
    let mut f = T::zero();
    for &pt in phi_tilde {
        f = f + p.alpha_tilde * (T::one() - pt) * (T::one() - pt);
    }
    for (n, &ph) in phi.iter().enumerate() {
        let d = T::one() - ph * s[n];
        f = f + p.alpha * d * d + p.beta * ph * ph;
    }
    let g = localization_gram(p.deg_ground, &p.cap);
    let psi = sym.psi_tilde();
    Ok(f + crate::scalar::dot(psi, &g.mul_vec(psi)))
}

/// Minimizes `F` by one dense symmetric positive definite solve.
pub fn solve_symbols<T: Real>(p: &CandidateParams<T>) -> Result<KernelSymbols<T>> {
    let sys = NormalSystem::new(p)?;
    let v = sys.matrix.solve_spd(&sys.rhs)?;
    // componentwise residual check: |A v − b|_i ≤ tol (|A||v| + |b|)_i
    let tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3));
    let n = v.len();
    for i in 0..n {
        let mut r = -sys.rhs[i];
        let mut scale = sys.rhs[i].abs();
        for (j, &vj) in v.iter().enumerate() {
            let aij = sys.matrix.get(i, j);
            r = r + aij * vj;
            scale = scale + (aij * vj).abs();
        }
        if r.abs() > tol * scale {
            return Err(Error::Numerical(format!(
                "symbol solve residual {r:e} exceeds tolerance at row {i}"
            )));
        }
    }
    let off = p.deg_sat + 1;
    KernelSymbols::new(v[..off].to_vec(), v[off..].to_vec(), p.ratio())
}

fn same_radius<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-12) * a.abs().max(b.abs())
}

/// Data-dependent moments shared by all candidates:
/// `Σ_i w_i (1/R) Y_{n,j}(ŷ_i) f2_i` and `Σ_i w_i (1/r) Y_{n,j}(ẑ_i) f1_i`.
#[derive(Debug, Clone)]
pub struct DataMoments<T> {
    sat: SphCoeffs<T>,
    ground: SphCoeffs<T>,
}

impl<T: Real> DataMoments<T> {
    pub fn new(
        sphere_rule: &QuadratureRule<T>,
        f2: &DiscreteField<T>,
        cap_rule: &QuadratureRule<T>,
        f1: &DiscreteField<T>,
        deg_sat: usize,
        deg_ground: usize,
    ) -> Result<Self> {
        if !matches!(sphere_rule.domain(), Domain::Sphere { .. }) {
            return Err(Error::InvalidArgument("satellite data must live on a sphere rule".into()));
        }
        if !matches!(cap_rule.domain(), Domain::Cap(_)) {
            return Err(Error::InvalidArgument("ground data must live on a cap rule".into()));
        }
        if !(cap_rule.radius() < sphere_rule.radius()) {
            return Err(Error::InvalidArgument("ground radius must be below satellite radius".into()));
        }
        if deg_sat > deg_ground {
            return Err(Error::InvalidArgument("satellite degree exceeds ground degree".into()));
        }
        Ok(Self {
            sat: project(f2, sphere_rule, deg_sat)?,
            ground: project(f1, cap_rule, deg_ground)?,
        })
    }

    pub fn ground_radius(&self) -> T {
        self.ground.anchor_radius()
    }

    pub fn sat_radius(&self) -> T {
        self.sat.anchor_radius()
    }

    /// Coefficients of the candidate at anchor radius `r`.
    pub fn candidate_coeffs(&self, sym: &KernelSymbols<T>) -> Result<SphCoeffs<T>> {
        let nn = sym.deg_sat();
        let mm = sym.deg_ground();
        if nn > self.sat.degree_max() || mm > self.ground.degree_max() {
            return Err(Error::InvalidArgument(
                "symbols exceed the degree of the precomputed moments".into(),
            ));
        }
        let mut c = SphCoeffs::zeros(mm, self.ground_radius());
        let out = c.as_mut_slice();
        for n in 0..=mm {
            let k = flat_index(n, 1)..flat_index(n, 1) + 2 * n + 1;
            let psi = sym.psi_tilde()[n];
            for i in k {
                let mut v = psi * self.ground.as_slice()[i];
                if n <= nn {
                    v = v + sym.phi()[n] * self.sat.as_slice()[i];
                }
                out[i] = v;
            }
        }
        Ok(c)
    }
}

/// Evaluates a candidate at the nodes of `eval_rule` (a rule on `Ω_r` or a cap of it).
pub fn apply_candidate<T: Real>(
    sym: &KernelSymbols<T>,
    moments: &DataMoments<T>,
    eval_rule: &QuadratureRule<T>,
) -> Result<DiscreteField<T>> {
    if !same_radius(eval_rule.radius(), moments.ground_radius()) {
        return Err(Error::InvalidArgument(
            "evaluation rule must lie on the ground sphere".into(),
        ));
    }
    sample(&moments.candidate_coeffs(sym)?, eval_rule)
}

/// Zonal kernel `Σ_n σ(n) (2n+1)/(4π ρ1 ρ2) P_n(t)`.
pub fn zonal_kernel<T: Real>(symbols: &[T], rho1: T, rho2: T, t: T, scratch: &mut Vec<T>) -> T {
    scratch.resize(symbols.len(), T::zero());
    legendre_all(t.max(-T::one()).min(T::one()), scratch);
    let k = T::lit(4.0) * T::PI() * rho1 * rho2;
    symbols
        .iter()
        .zip(scratch.iter())
        .enumerate()
        .fold(T::zero(), |acc, (n, (&s, &p))| acc + s * T::of(2 * n + 1) * p)
        / k
}

/// Kernel matrices `K_sat[e][i] = w_i Φ(x_e, y_i)` and
/// `K_cap[e][i] = w_i Ψ̃(x_e, z_i)` for evaluating candidates by direct
/// quadrature of the defining integrals.
#[derive(Debug, Clone)]
pub struct KernelMatrices<T> {
    sat: Vec<Vec<T>>,
    cap: Vec<Vec<T>>,
}

impl<T: Real> KernelMatrices<T> {
    pub fn new(
        sym: &KernelSymbols<T>,
        sphere_rule: &QuadratureRule<T>,
        cap_rule: &QuadratureRule<T>,
        eval_rule: &QuadratureRule<T>,
    ) -> Result<Self> {
        let (r, big_r) = (cap_rule.radius(), sphere_rule.radius());
        if !same_radius(eval_rule.radius(), r) {
            return Err(Error::InvalidArgument(
                "evaluation rule must lie on the ground sphere".into(),
            ));
        }
        let ys = sphere_rule.nodes();
        let zs = cap_rule.nodes();
        let wy = sphere_rule.weights();
        let wz = cap_rule.weights();
        let mut scratch = Vec::new();
        let mut sat = Vec::with_capacity(eval_rule.len());
        let mut cap = Vec::with_capacity(eval_rule.len());
        for x in eval_rule.nodes() {
            sat.push(
                ys.iter()
                    .zip(&wy)
                    .map(|(y, &w)| w * zonal_kernel(sym.phi(), r, big_r, x.dot(y), &mut scratch))
                    .collect(),
            );
            cap.push(
                zs.iter()
                    .zip(&wz)
                    .map(|(z, &w)| w * zonal_kernel(sym.psi_tilde(), r, r, x.dot(z), &mut scratch))
                    .collect(),
            );
        }
        Ok(Self { sat, cap })
    }

    pub fn apply(
        &self,
        eval_rule: &QuadratureRule<T>,
        f2: &DiscreteField<T>,
        f1: &DiscreteField<T>,
    ) -> Result<DiscreteField<T>> {
        let values = self
            .sat
            .iter()
            .zip(&self.cap)
            .map(|(ks, kc)| {
                crate::scalar::dot(ks, f2.values()) + crate::scalar::dot(kc, f1.values())
            })
            .collect();
        DiscreteField::new(eval_rule, values)
    }
}

/// Lowest rule exactness for which the candidate integrals are computed
/// exactly, given data content of degree `content_degree`.
pub fn required_exactness(deg_kernel: usize, content_degree: usize) -> usize {
    deg_kernel + content_degree
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rho: f64, beta: f64, n: usize) -> CandidateParams<f64> {
        CandidateParams {
            alpha: 1e4,
            alpha_tilde: 1e4,
            beta,
            deg_sat: n,
            deg_ground: n,
            sat_radius: 12371.0,
            cap: CapGeometry::new(6371.0, rho).unwrap(),
        }
    }

    #[test]
    fn gram_corner_entry() {
        let cap = CapGeometry::new(6371.0, 1.0).unwrap();
        let g = localization_gram(4, &cap);
        let expect = (2.0 - 1.0) / (8.0 * std::f64::consts::PI * 6371.0 * 6371.0);
        assert!((g.get(0, 0) / expect - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gram_vanishes_for_whole_sphere() {
        let cap = CapGeometry::new(6371.0, 2.0).unwrap();
        assert_eq!(localization_gram(6, &cap).max_abs(), 0.0);
    }

    #[test]
    fn psi_is_derived_from_phi() {
        let sym = KernelSymbols::new(vec![1.0, 2.0], vec![1.0, 1.0, 0.5], 0.5).unwrap();
        assert_eq!(sym.psi_tilde(), &[0.0, 0.0, 0.5]);
        assert!(KernelSymbols::new(vec![1.0; 3], vec![1.0; 2], 0.5).is_err());
    }

    #[test]
    fn decoupled_closed_form_without_localization() {
        let p = params(2.0, 0.7, 20);
        let sym = solve_symbols(&p).unwrap();
        let s = p.damping();
        for n in 0..=20 {
            assert!((sym.phi_tilde()[n] - 1.0).abs() < 1e-12);
            let expect = p.alpha * s[n] / (p.alpha * s[n] * s[n] + p.beta);
            assert!((sym.phi()[n] / expect - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn normal_system_value_matches_definition() {
        let p = params(0.8, 3.0, 6);
        let sys = NormalSystem::new(&p).unwrap();
        let v: Vec<f64> = (0..sys.rhs.len()).map(|i| 0.3 + 0.1 * i as f64).collect();
        let direct = functional_value(&p, &v[..7], &v[7..]).unwrap();
        assert!((sys.value(&v) / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = params(1.0, 1.0, 5);
        p.deg_sat = 6;
        assert!(solve_symbols(&p).is_err());
        let mut p = params(1.0, 1.0, 5);
        p.alpha = 0.0;
        assert!(solve_symbols(&p).is_err());
        let mut p = params(1.0, 1.0, 5);
        p.sat_radius = 6000.0;
        assert!(solve_symbols(&p).is_err());
    }

    #[test]
    fn zero_symbols_give_zero_field() {
        use crate::field::sample;
        use crate::quadrature::SphereStyle;
        let cap = CapGeometry::new(1.0, 1.0).unwrap();
        let cap_rule = QuadratureRule::cap(cap, 8);
        let sphere = QuadratureRule::full_sphere(5, 2.0, SphereStyle::Equiangular).unwrap();
        let mut c = SphCoeffs::zeros(3, 1.0);
        c.set(2, 3, 1.0);
        let f1 = sample(&c, &cap_rule).unwrap();
        let f2 = sample(&c, &sphere).unwrap();
        let m = DataMoments::new(&sphere, &f2, &cap_rule, &f1, 4, 4).unwrap();
        let sym = KernelSymbols::new(vec![0.0; 5], vec![0.0; 5], 0.5).unwrap();
        let u = apply_candidate(&sym, &m, &cap_rule).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }
}
