//! Real orthonormal spherical harmonics and exterior harmonic expansions.
//!
//! # Order layout
//!
//! Within degree `n` the order index `j = 1..=2n+1` is laid out as
//!
//! | `j`      | harmonic                         |
//! |----------|----------------------------------|
//! | 1        | zonal, `m = 0`                   |
//! | `2m`     | `q_n^m(cos θ) cos(mφ)`, `m ≥ 1`  |
//! | `2m + 1` | `q_n^m(cos θ) sin(mφ)`, `m ≥ 1`  |
//!
//! and the flat storage index of `(n, j)` is `n² + j - 1`. The functions are
//! orthonormal on the unit sphere and carry no Condon–Shortley phase.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cosine or sine branch of a real harmonic of order `m ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trig {
    Cos,
    Sin,
}

/// Maps `(n, j)` to its order `m` and trigonometric branch.
#[inline]
pub fn order_of(j: usize) -> (usize, Trig) {
    if j.is_multiple_of(2) {
        (j / 2, Trig::Cos)
    } else {
        ((j - 1) / 2, if j == 1 { Trig::Cos } else { Trig::Sin })
    }
}

/// Inverse of [`order_of`].
#[inline]
pub fn order_index(m: usize, trig: Trig) -> usize {
    match (m, trig) {
        (0, _) => 1,
        (m, Trig::Cos) => 2 * m,
        (m, Trig::Sin) => 2 * m + 1,
    }
}

/// Flat storage index of `(n, j)`.
#[inline]
pub fn flat_index(n: usize, j: usize) -> usize {
    n * n + j - 1
}

/// Number of coefficients through degree `l`.
#[inline]
pub fn coeff_count(l: usize) -> usize {
    (l + 1) * (l + 1)
}

/// Legendre polynomial `P_n(t)` by the three-term recurrence.
pub fn legendre_p<T: Real>(n: usize, t: T) -> Result<T> {
    check_unit_interval(t)?;
    let t = t.max(-T::one()).min(T::one());
    let mut p = vec![T::zero(); n + 1];
    legendre_all(t, &mut p);
    Ok(p[n])
}

/// Fills `out[k] = P_k(t)` for `k < out.len()`. No domain check.
pub fn legendre_all<T: Real>(t: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    out[0] = T::one();
    if out.len() == 1 {
        return;
    }
    out[1] = t;
    for k in 2..out.len() {
        let kf = T::of(k);
        out[k] = ((T::of(2 * k - 1)) * t * out[k - 1] - (kf - T::one()) * out[k - 2]) / kf;
    }
}

fn check_unit_interval<T: Real>(t: T) -> Result<()> {
    if !(t.abs() <= T::one() + T::lit(1e-12)) {
        return Err(Error::Domain { value: t.as_f64() });
    }
    Ok(())
}

/// Recurrence coefficients for the normalized associated Legendre functions
/// `q_n^m`, the colatitude factors of the orthonormal real harmonics.
///
/// Columns of fixed order are built upward from the sectoral term, so no
/// factorials appear and nothing overflows for degrees in the hundreds.
#[derive(Debug, Clone)]
pub struct AssocLegendre<T> {
    lmax: usize,
    a: Vec<T>,
    b: Vec<T>,
    sectoral: Vec<T>,
    subdiag: Vec<T>,
}

/// Triangular index of `(n, m)`, `m ≤ n`.
#[inline]
pub fn tri_index(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

impl<T: Real> AssocLegendre<T> {
    pub fn new(lmax: usize) -> Self {
        let len = tri_index(lmax, lmax) + 1;
        let mut a = vec![T::zero(); len];
        let mut b = vec![T::zero(); len];
        for n in 2..=lmax {
            for m in 0..=n.saturating_sub(2) {
                let (nf, mf) = (n as f64, m as f64);
                let aa = ((2.0 * nf - 1.0) * (2.0 * nf + 1.0) / ((nf - mf) * (nf + mf))).sqrt();
                let bb = ((2.0 * nf + 1.0) * (nf + mf - 1.0) * (nf - mf - 1.0)
                    / ((nf - mf) * (nf + mf) * (2.0 * nf - 3.0)))
                    .sqrt();
                a[tri_index(n, m)] = T::lit(aa);
                b[tri_index(n, m)] = T::lit(bb);
            }
        }
        let sectoral = (0..=lmax)
            .map(|m| match m {
                0 => T::zero(),
                1 => T::lit(3f64.sqrt()),
                m => T::lit(((2 * m + 1) as f64 / (2 * m) as f64).sqrt()),
            })
            .collect();
        let subdiag = (0..=lmax)
            .map(|m| T::lit(((2 * m + 3) as f64).sqrt()))
            .collect();
        Self {
            lmax,
            a,
            b,
            sectoral,
            subdiag,
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Length of the triangular output buffer.
    pub fn len(&self) -> usize {
        tri_index(self.lmax, self.lmax) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fills `out[tri_index(n, m)] = q_n^m(t)` for all `m ≤ n ≤ lmax`.
    ///
    /// `q_n^0 = sqrt((2n+1)/4π) P_n` and for `m ≥ 1` the factor includes the
    /// `sqrt(2)` that makes `q_n^m cos(mφ)` and `q_n^m sin(mφ)` unit-norm.
    pub fn fill(&self, t: T, out: &mut [T]) {
        assert!(out.len() >= self.len());
        let t = t.max(-T::one()).min(T::one());
        let s = (T::one() - t * t).max(T::zero()).sqrt();
        // geodesy (4π) normalization first, rescaled at the end
        let mut diag = T::one();
        for m in 0..=self.lmax {
            if m > 0 {
                diag = diag * self.sectoral[m] * s;
            }
            out[tri_index(m, m)] = diag;
            if m < self.lmax {
                out[tri_index(m + 1, m)] = self.subdiag[m] * t * diag;
            }
            for n in m + 2..=self.lmax {
                let k = tri_index(n, m);
                out[k] = self.a[k] * t * out[tri_index(n - 1, m)]
                    - self.b[k] * out[tri_index(n - 2, m)];
            }
        }
        let norm = T::one() / (T::lit(4.0) * T::PI()).sqrt();
        for v in out[..self.len()].iter_mut() {
            *v = *v * norm;
        }
    }

    pub fn values(&self, t: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.len()];
        self.fill(t, &mut out);
        out
    }
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDirection<T> {
    xyz: [T; 3],
}

impl<T: Real> UnitDirection<T> {
    /// From colatitude `theta ∈ [0, π]` and longitude `phi`.
    pub fn from_angles(theta: T, phi: T) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            xyz: [st * cp, st * sp, ct],
        }
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn from_vector(v: [T; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::ZeroNorm("direction vector"));
        }
        Ok(Self {
            xyz: [v[0] / norm, v[1] / norm, v[2] / norm],
        })
    }

    pub fn north_pole() -> Self {
        Self {
            xyz: [T::zero(), T::zero(), T::one()],
        }
    }

    pub fn xyz(&self) -> [T; 3] {
        self.xyz
    }

    /// Cosine of the colatitude.
    pub fn cos_theta(&self) -> T {
        self.xyz[2].max(-T::one()).min(T::one())
    }

    pub fn theta(&self) -> T {
        self.cos_theta().acos()
    }

    /// Longitude in `[0, 2π)`.
    pub fn phi(&self) -> T {
        let p = self.xyz[1].atan2(self.xyz[0]);
        if p < T::zero() {
            p + T::TAU()
        } else {
            p
        }
    }

    pub fn dot(&self, other: &Self) -> T {
        self.xyz[0] * other.xyz[0] + self.xyz[1] * other.xyz[1] + self.xyz[2] * other.xyz[2]
    }
}

/// Evaluates every harmonic through degree `lmax` at `dir`, in flat layout.
pub fn eval_all_y<T: Real>(table: &AssocLegendre<T>, dir: &UnitDirection<T>, out: &mut [T]) {
    let lmax = table.lmax();
    assert!(out.len() >= coeff_count(lmax));
    let mut q = vec![T::zero(); table.len()];
    table.fill(dir.cos_theta(), &mut q);
    let [x, y, _] = dir.xyz();
    let rho = (x * x + y * y).sqrt();
    // cos(mφ), sin(mφ) by angle addition; at the poles the sectoral
    // factors vanish anyway so any unit vector will do
    let (c1, s1) = if rho > T::zero() {
        (x / rho, y / rho)
    } else {
        (T::one(), T::zero())
    };
    let (mut cm, mut sm) = (T::one(), T::zero());
    for m in 0..=lmax {
        if m > 0 {
            let c = cm * c1 - sm * s1;
            sm = sm * c1 + cm * s1;
            cm = c;
        }
        for n in m..=lmax {
            let qv = q[tri_index(n, m)];
            if m == 0 {
                out[flat_index(n, 1)] = qv;
            } else {
                out[flat_index(n, 2 * m)] = qv * cm;
                out[flat_index(n, 2 * m + 1)] = qv * sm;
            }
        }
    }
}

/// The real orthonormal harmonic `Y_{n,j}` at `dir`.
pub fn eval_y<T: Real>(n: usize, j: usize, dir: &UnitDirection<T>) -> Result<T> {
    if j == 0 || j > 2 * n + 1 {
        return Err(Error::Index {
            degree: n,
            order: j,
        });
    }
    let (m, trig) = order_of(j);
    let table = AssocLegendre::new(n);
    let q = table.values(dir.cos_theta())[tri_index(n, m)];
    let phi = dir.phi() * T::of(m);
    Ok(match trig {
        Trig::Cos => q * phi.cos(),
        Trig::Sin => q * phi.sin(),
    })
}

/// Coefficients of an exterior harmonic function, in the orthonormal basis
/// `{(1/s) Y_{n,j}}` of `L²(Ω_s)` at the anchor radius `s`.
///
/// At radius `ρ ≥ s` the function is `Σ c_{n,j} (s/ρ)^{n+1} (1/s) Y_{n,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphCoeffs<T> {
    degree_max: usize,
    anchor_radius: T,
    coeffs: Vec<T>,
}

impl<T: Real> SphCoeffs<T> {
    pub fn zeros(degree_max: usize, anchor_radius: T) -> Self {
        Self {
            degree_max,
            anchor_radius,
            coeffs: vec![T::zero(); coeff_count(degree_max)],
        }
    }

    pub fn from_vec(degree_max: usize, anchor_radius: T, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != coeff_count(degree_max) {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients for degree {degree_max}, got {}",
                coeff_count(degree_max),
                coeffs.len()
            )));
        }
        if !(anchor_radius > T::zero()) {
            return Err(Error::InvalidArgument("anchor radius must be positive".into()));
        }
        Ok(Self {
            degree_max,
            anchor_radius,
            coeffs,
        })
    }

    pub fn degree_max(&self) -> usize {
        self.degree_max
    }

    pub fn anchor_radius(&self) -> T {
        self.anchor_radius
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.coeffs
    }

    pub fn get(&self, n: usize, j: usize) -> T {
        self.coeffs[flat_index(n, j)]
    }

    pub fn set(&mut self, n: usize, j: usize, v: T) {
        self.coeffs[flat_index(n, j)] = v;
    }

    /// Euclidean norm of the coefficient vector, i.e. the `L²(Ω_s)` norm.
    pub fn norm(&self) -> T {
        crate::scalar::dot(&self.coeffs, &self.coeffs).sqrt()
    }

    /// Iterates `(n, j, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..=self.degree_max)
            .flat_map(|n| (1..=2 * n + 1).map(move |j| (n, j)))
            .map(|(n, j)| (n, j, self.get(n, j)))
    }

    /// `a·self + b·other`; both must share degree and anchor radius.
    pub fn lincomb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.degree_max != other.degree_max || self.anchor_radius != other.anchor_radius {
            return Err(Error::InvalidArgument(
                "coefficient sets differ in degree or anchor radius".into(),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(Self {
            coeffs,
            ..self.clone()
        })
    }

    /// Per-degree factor `(s/ρ)^{n+1} / s` mapping coefficients to values of
    /// the plain harmonics at radius `ρ`.
    pub fn radial_factors(&self, eval_radius: T) -> Result<Vec<T>> {
        let s = self.anchor_radius;
        if eval_radius < s * (T::one() - T::lit(1e-14)) {
            return Err(Error::Radius {
                target: eval_radius.as_f64(),
                anchor: s.as_f64(),
            });
        }
        let ratio = (s / eval_radius).min(T::one());
        let mut f = Vec::with_capacity(self.degree_max + 1);
        let mut p = ratio / s;
        for _ in 0..=self.degree_max {
            f.push(p);
            p = p * ratio;
        }
        Ok(f)
    }

    /// Values of the exterior harmonic function at `eval_radius · dir`.
    pub fn synthesize(&self, dirs: &[UnitDirection<T>], eval_radius: T) -> Result<Vec<T>> {
        let radial = self.radial_factors(eval_radius)?;
        let table = AssocLegendre::new(self.degree_max);
        let mut y = vec![T::zero(); coeff_count(self.degree_max)];
        Ok(dirs
            .iter()
            .map(|d| {
                eval_all_y(&table, d, &mut y);
                let mut acc = T::zero();
                for n in 0..=self.degree_max {
                    let base = n * n;
                    let mut part = T::zero();
                    for k in base..base + 2 * n + 1 {
                        part = part + self.coeffs[k] * y[k];
                    }
                    acc = acc + radial[n] * part;
                }
                acc
            })
            .collect())
    }

    /// Re-anchors the expansion at `target_radius ≥ s`: `c'_{n,j} = c_{n,j} (s/R)^n`.
    pub fn upward_continue(&self, target_radius: T) -> Result<Self> {
        let s = self.anchor_radius;
        if target_radius < s {
            return Err(Error::Radius {
                target: target_radius.as_f64(),
                anchor: s.as_f64(),
            });
        }
        let ratio = s / target_radius;
        let mut out = Self::zeros(self.degree_max, target_radius);
        let mut damp = T::one();
        for n in 0..=self.degree_max {
            for k in n * n..(n + 1) * (n + 1) {
                out.coeffs[k] = self.coeffs[k] * damp;
            }
            damp = damp * ratio;
        }
        Ok(out)
    }

    /// Truncates or zero-pads to another maximum degree.
    pub fn with_degree(&self, degree_max: usize) -> Self {
        let mut out = Self::zeros(degree_max, self.anchor_radius);
        let keep = coeff_count(degree_max.min(self.degree_max));
        out.coeffs[..keep].copy_from_slice(&self.coeffs[..keep]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dir(rng: &mut ChaCha8Rng) -> UnitDirection<f64> {
        let t: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        UnitDirection::from_angles(t.acos(), phi)
    }

    #[test]
    fn legendre_low_orders() {
        assert_eq!(legendre_p(0, 0.3).unwrap(), 1.0);
        assert_eq!(legendre_p(1, -0.5).unwrap(), -0.5);
        assert!((legendre_p(2, 0.5f64).unwrap() + 0.125).abs() < 1e-15);
        assert!((legendre_p(7, 1.0f64).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_rejects_outside_interval() {
        assert!(matches!(legendre_p(3, 1.1), Err(Error::Domain { .. })));
        assert!(legendre_p(3, 1.0 + 1e-13).is_ok());
    }

    #[test]
    fn order_layout_round_trips() {
        for n in 0..6 {
            for j in 1..=2 * n + 1 {
                let (m, trig) = order_of(j);
                assert!(m <= n);
                assert_eq!(order_index(m, trig), j);
            }
        }
    }

    #[test]
    fn constant_harmonic() {
        let d = UnitDirection::from_angles(0.7, 2.1);
        let v = eval_y(0, 1, &d).unwrap();
        assert!((v - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn non_zonal_vanishes_at_pole() {
        let d = UnitDirection::<f64>::north_pole();
        for n in 1..12 {
            for j in 2..=2 * n + 1 {
                assert_eq!(eval_y(n, j, &d).unwrap().abs(), 0.0);
            }
        }
    }

    #[test]
    fn bad_order_index() {
        let d = UnitDirection::<f64>::north_pole();
        assert!(matches!(eval_y(2, 0, &d), Err(Error::Index { .. })));
        assert!(matches!(eval_y(2, 6, &d), Err(Error::Index { .. })));
    }

    #[test]
    fn addition_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lmax = 15;
        let table = AssocLegendre::new(lmax);
        let mut yx = vec![0.0; coeff_count(lmax)];
        let mut yy = vec![0.0; coeff_count(lmax)];
        let mut p = vec![0.0; lmax + 1];
        for _ in 0..100 {
            let (x, y) = (random_dir(&mut rng), random_dir(&mut rng));
            eval_all_y(&table, &x, &mut yx);
            eval_all_y(&table, &y, &mut yy);
            legendre_all(x.dot(&y), &mut p);
            for n in 0..=lmax {
                let sum: f64 = (n * n..(n + 1) * (n + 1)).map(|k| yx[k] * yy[k]).sum();
                let expect = (2 * n + 1) as f64 / (4.0 * std::f64::consts::PI) * p[n];
                assert!((sum - expect).abs() <= 1e-10, "n={n}: {sum} vs {expect}");
            }
        }
    }

    #[test]
    fn addition_theorem_single_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lmax = 8;
        let table = AssocLegendre::<f32>::new(lmax);
        let mut yx = vec![0.0f32; coeff_count(lmax)];
        let mut yy = vec![0.0f32; coeff_count(lmax)];
        for _ in 0..20 {
            let (a, b) = (random_dir(&mut rng), random_dir(&mut rng));
            let cvt = |d: UnitDirection<f64>| {
                let [x, y, z] = d.xyz();
                UnitDirection::from_vector([x as f32, y as f32, z as f32]).unwrap()
            };
            let (x, y) = (cvt(a), cvt(b));
            eval_all_y(&table, &x, &mut yx);
            eval_all_y(&table, &y, &mut yy);
            for n in 0..=lmax {
                let sum: f32 = (n * n..(n + 1) * (n + 1)).map(|k| yx[k] * yy[k]).sum();
                let expect =
                    (2 * n + 1) as f32 / (4.0 * std::f32::consts::PI) * legendre_p(n, x.dot(&y)).unwrap();
                assert!((sum - expect).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn eval_y_matches_table_path() {
        let d = UnitDirection::from_angles(1.1f64, 4.0);
        let table = AssocLegendre::new(6);
        let mut y = vec![0.0; coeff_count(6)];
        eval_all_y(&table, &d, &mut y);
        for n in 0..=6 {
            for j in 1..=2 * n + 1 {
                assert!((eval_y(n, j, &d).unwrap() - y[flat_index(n, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn high_degree_is_finite_and_bounded() {
        let lmax = 300;
        let table = AssocLegendre::<f64>::new(lmax);
        let bound = |n: usize| ((2 * n + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt();
        for &t in &[-1.0, -0.999, -0.3, 0.0, 0.42, 0.9999, 1.0] {
            let q = table.values(t);
            assert!(q.iter().all(|v| v.is_finite()));
            for n in 0..=lmax {
                assert!(q[tri_index(n, 0)].abs() <= bound(n) * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn upward_continuation_factors() {
        let mut c = SphCoeffs::zeros(30, 6371.0);
        c.set(0, 1, 2.0);
        c.set(30, 5, 1.0);
        assert_eq!(c.upward_continue(6371.0).unwrap(), c);
        let up = c.upward_continue(12371.0).unwrap();
        assert_eq!(up.get(0, 1), 2.0);
        let expect = (6371.0f64 / 12371.0).powi(30);
        assert!((up.get(30, 5) / expect - 1.0).abs() < 1e-13);
        assert!(matches!(c.upward_continue(6000.0), Err(Error::Radius { .. })));
    }

    #[test]
    fn continuation_two_path_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dirs: Vec<_> = (0..40).map(|_| random_dir(&mut rng)).collect();
        for &(n, j) in &[(0, 1), (3, 4), (12, 25), (20, 1)] {
            let mut c = SphCoeffs::zeros(20, 6371.0);
            c.set(n, j, 1.0);
            let direct = c.synthesize(&dirs, 12371.0).unwrap();
            let via = c.upward_continue(12371.0).unwrap().synthesize(&dirs, 12371.0).unwrap();
            for (a, b) in direct.iter().zip(&via) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn constant_field_value() {
        let r = 6371.0;
        let mut c = SphCoeffs::zeros(0, r);
        c.set(0, 1, 1.0);
        let v = c.synthesize(&[UnitDirection::from_angles(0.3, 0.2)], r).unwrap();
        assert!((v[0] - 1.0 / (r * (4.0 * std::f64::consts::PI).sqrt())).abs() < 1e-18);
    }
}
