//! Positive-weight product quadrature on the sphere and on polar caps.
//!
//! Every rule here is a product of a colatitude rule ("rings") with
//! `n_lon` equispaced longitudes `φ_l = 2πl / n_lon`. Nodes are ordered
//! colatitude-major, longitude-minor: node `i` sits on ring `i / n_lon` at
//! longitude index `i % n_lon`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sphharm::{tri_index, AssocLegendre, Trig, UnitDirection};

/// The polar cap `{x ∈ Ω_r : 1 - x̂·e_z < ρ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapGeometry<T> {
    radius: T,
    rho: T,
    t_min: T,
    area: T,
}

impl<T: Real> CapGeometry<T> {
    /// `rho` may equal 2, which describes the whole sphere.
    pub fn new(radius: T, rho: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument("cap radius must be positive".into()));
        }
        if !(rho > T::zero() && rho <= T::lit(2.0)) {
            return Err(Error::InvalidArgument(format!(
                "cap parameter rho = {rho} outside (0, 2]"
            )));
        }
        Ok(Self {
            radius,
            rho,
            t_min: T::one() - rho,
            area: T::TAU() * radius * radius * rho,
        })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    /// Cosine of the cap half-angle.
    pub fn t_min(&self) -> T {
        self.t_min
    }

    /// Surface measure of the cap, `2π r² ρ`.
    pub fn area(&self) -> T {
        self.area
    }

    /// Square root of the cap area, the constant `c_{M,N}` is bounded by.
    pub fn sqrt_area(&self) -> T {
        self.area.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SphereStyle {
    /// Offset equiangular colatitudes with Fejér-type closed-form weights.
    Equiangular,
    /// Gauss–Legendre nodes in `cos θ`.
    GaussLegendre,
}

impl std::str::FromStr for SphereStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equiangular" => Ok(Self::Equiangular),
            "gauss_legendre" | "gauss-legendre" => Ok(Self::GaussLegendre),
            other => Err(Error::Config(format!("unknown sphere style `{other}`"))),
        }
    }
}

impl std::fmt::Display for SphereStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Equiangular => "equiangular",
            Self::GaussLegendre => "gauss_legendre",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain<T> {
    Sphere { radius: T, style: SphereStyle },
    Cap(CapGeometry<T>),
}

/// Opaque identity of a rule, used to keep fields from different rules apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleId(u64);

#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    id: RuleId,
    domain: Domain<T>,
    colatitudes: Vec<T>,
    cos_colat: Vec<T>,
    /// weight of every node on a ring
    ring_weights: Vec<T>,
    n_lon: usize,
    exactness_degree: usize,
    cos_table: Vec<T>,
    sin_table: Vec<T>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let half = n.div_ceil(2);
    let nf = T::of(n);
    for i in 0..half {
        // Tricomi-style initial guess for the i-th largest root
        let mut z = (T::PI() * (T::of(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z = z - dz;
            if dz.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let wi = T::lit(2.0) / ((T::one() - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = T::zero();
    }
    (x, w)
}

fn legendre_with_derivative<T: Real>(n: usize, t: T) -> (T, T) {
    let (mut p0, mut p1) = (T::one(), t);
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::of(k);
        let p2 = (T::of(2 * k - 1) * t * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = T::of(n) * (t * p1 - p0) / (t * t - T::one());
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) / T::lit(2.0);
    let mid = (b + a) / T::lit(2.0);
    (
        x.into_iter().map(|xi| mid + half * xi).collect(),
        w.into_iter().map(|wi| wi * half).collect(),
    )
}

/// Fejér first-rule weights for `n` offset equiangular colatitudes
/// `θ_j = (2j+1)π / 2n`; exact in `t = cos θ` through degree `n - 1`.
fn fejer_weights<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let nf = T::of(n);
    let theta: Vec<T> = (0..n)
        .map(|j| T::PI() * T::of(2 * j + 1) / (T::lit(2.0) * nf))
        .collect();
    let w = theta
        .iter()
        .map(|&th| {
            let mut s = T::zero();
            for k in 1..=n / 2 {
                let kf = T::of(k);
                s = s + (T::lit(2.0) * kf * th).cos() / (T::lit(4.0) * kf * kf - T::one());
            }
            T::lit(2.0) / nf * (T::one() - T::lit(2.0) * s)
        })
        .collect();
    (theta, w)
}

impl<T: Real> QuadratureRule<T> {
    /// Rule on the sphere of radius `radius`, exact through degree `2B - 1`.
    ///
    /// Equiangular style uses `2B` colatitudes `π(2j+1)/4B`; Gauss–Legendre
    /// style uses `B` nodes in `cos θ`. Both use `2B` longitudes.
    pub fn full_sphere(bandwidth: usize, radius: T, style: SphereStyle) -> Result<Self> {
        if bandwidth == 0 {
            return Err(Error::InvalidArgument("bandwidth must be at least 1".into()));
        }
        if !(radius > T::zero()) {
            return Err(Error::InvalidArgument("sphere radius must be positive".into()));
        }
        let n_lon = 2 * bandwidth;
        let lon_w = T::TAU() / T::of(n_lon) * radius * radius;
        let (colatitudes, t_weights) = match style {
            SphereStyle::Equiangular => fejer_weights::<T>(2 * bandwidth),
            SphereStyle::GaussLegendre => {
                let (t, w) = gauss_legendre::<T>(bandwidth);
                // colatitude ascending means cos θ descending
                let th = t.iter().rev().map(|&ti| ti.acos()).collect();
                (th, w.into_iter().rev().collect())
            }
        };
        let ring_weights = t_weights.into_iter().map(|w| w * lon_w).collect();
        Ok(Self::assemble(
            Domain::Sphere { radius, style },
            colatitudes,
            ring_weights,
            n_lon,
            2 * bandwidth - 1,
        ))
    }

    /// Product rule on a cap: `⌈(d+1)/2⌉` Gauss–Legendre nodes in `cos θ` on
    /// `[t_min, 1]` times `d + 1` longitudes; exact through degree `d`.
    pub fn cap(cap: CapGeometry<T>, exactness: usize) -> Self {
        let n_t = (exactness + 2) / 2;
        let n_lon = exactness + 1;
        let (t, w) = gauss_legendre_on(n_t, cap.t_min(), T::one());
        let lon_w = T::TAU() / T::of(n_lon) * cap.radius() * cap.radius();
        let colatitudes = t.iter().rev().map(|&ti| ti.min(T::one()).acos()).collect();
        let ring_weights = w.into_iter().rev().map(|wi| wi * lon_w).collect();
        Self::assemble(Domain::Cap(cap), colatitudes, ring_weights, n_lon, exactness)
    }

    fn assemble(
        domain: Domain<T>,
        colatitudes: Vec<T>,
        ring_weights: Vec<T>,
        n_lon: usize,
        exactness_degree: usize,
    ) -> Self {
        let mut h = DefaultHasher::new();
        match &domain {
            Domain::Sphere { radius, style } => {
                0u8.hash(&mut h);
                radius.as_f64().to_bits().hash(&mut h);
                style.hash(&mut h);
            }
            Domain::Cap(c) => {
                1u8.hash(&mut h);
                c.radius.as_f64().to_bits().hash(&mut h);
                c.rho.as_f64().to_bits().hash(&mut h);
            }
        }
        (colatitudes.len(), n_lon, exactness_degree, std::mem::size_of::<T>()).hash(&mut h);
        let cos_colat = colatitudes.iter().map(|t: &T| t.cos()).collect();
        let step = T::TAU() / T::of(n_lon);
        let cos_table = (0..n_lon).map(|k| (step * T::of(k)).cos()).collect();
        let sin_table = (0..n_lon).map(|k| (step * T::of(k)).sin()).collect();
        Self {
            id: RuleId(h.finish()),
            domain,
            colatitudes,
            cos_colat,
            ring_weights,
            n_lon,
            exactness_degree,
            cos_table,
            sin_table,
        }
    }

    pub fn id(&self) -> RuleId {
        self.id
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn radius(&self) -> T {
        match &self.domain {
            Domain::Sphere { radius, .. } => *radius,
            Domain::Cap(c) => c.radius(),
        }
    }

    /// Surface measure of the domain.
    pub fn area(&self) -> T {
        match &self.domain {
            Domain::Sphere { radius, .. } => T::lit(4.0) * T::PI() * *radius * *radius,
            Domain::Cap(c) => c.area(),
        }
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    /// Node count `M`.
    pub fn len(&self) -> usize {
        self.colatitudes.len() * self.n_lon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_rings(&self) -> usize {
        self.colatitudes.len()
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn colatitudes(&self) -> &[T] {
        &self.colatitudes
    }

    pub fn cos_colatitudes(&self) -> &[T] {
        &self.cos_colat
    }

    pub fn ring_weights(&self) -> &[T] {
        &self.ring_weights
    }

    pub fn longitude(&self, l: usize) -> T {
        T::TAU() * T::of(l) / T::of(self.n_lon)
    }

    /// `cos(m φ_l)` from the exact residue `m·l mod n_lon`.
    #[inline]
    pub fn cos_m_phi(&self, m: usize, l: usize) -> T {
        self.cos_table[(m * l) % self.n_lon]
    }

    #[inline]
    pub fn sin_m_phi(&self, m: usize, l: usize) -> T {
        self.sin_table[(m * l) % self.n_lon]
    }

    pub fn weight(&self, i: usize) -> T {
        self.ring_weights[i / self.n_lon]
    }

    pub fn weights(&self) -> Vec<T> {
        self.ring_weights
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w, self.n_lon))
            .collect()
    }

    pub fn node(&self, i: usize) -> UnitDirection<T> {
        UnitDirection::from_angles(self.colatitudes[i / self.n_lon], self.longitude(i % self.n_lon))
    }

    pub fn nodes(&self) -> Vec<UnitDirection<T>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Same-family rule of higher exactness, used as a reference.
    pub fn refined(&self, exactness: usize) -> Self {
        match self.domain {
            Domain::Sphere { radius, style } => {
                Self::full_sphere(exactness / 2 + 1, radius, style).expect("valid sphere rule")
            }
            Domain::Cap(cap) => Self::cap(cap, exactness),
        }
    }

    /// Writes `theta,phi,weight`, one row per node, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "theta,phi,weight")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                self.colatitudes[i / self.n_lon].as_f64(),
                self.longitude(i % self.n_lon).as_f64(),
                self.weight(i).as_f64()
            )?;
        }
        Ok(())
    }
}

/// `Σ_l trig_a(m φ_l) trig_b(m' φ_l)` over `n` equispaced longitudes, exactly.
fn longitude_sum(n: usize, m: usize, a: Trig, m2: usize, b: Trig) -> f64 {
    let hit = |k: i64| k.rem_euclid(n as i64) == 0;
    let (mi, mj) = (m as i64, m2 as i64);
    let half = n as f64 / 2.0;
    match (a, b) {
        (Trig::Cos, Trig::Cos) => {
            half * (hit(mi - mj) as u8 as f64 + hit(mi + mj) as u8 as f64)
        }
        (Trig::Sin, Trig::Sin) => {
            half * (hit(mi - mj) as u8 as f64 - hit(mi + mj) as u8 as f64)
        }
        _ => 0.0,
    }
}

/// Gram matrix of the sampled basis `{(1/s) Y_{n,j}}` under a product rule,
/// evaluated block by block `(m, trig) × (m', trig')`.
struct RingGram<T> {
    lmax: usize,
    n_lon: usize,
    weights: Vec<T>,
    q: Vec<Vec<T>>,
}

impl<T: Real> RingGram<T> {
    fn new(rule: &QuadratureRule<T>, lmax: usize) -> Self {
        let table = AssocLegendre::new(lmax);
        let s2 = rule.radius() * rule.radius();
        Self {
            lmax,
            n_lon: rule.n_lon(),
            weights: rule.ring_weights().iter().map(|&w| w / s2).collect(),
            q: rule.cos_colatitudes().iter().map(|&t| table.values(t)).collect(),
        }
    }

    /// Entries for `n ∈ m..=L`, `n' ∈ m2..=L`, row-major; `None` when the
    /// longitude sum kills the whole block.
    fn block(&self, m: usize, a: Trig, m2: usize, b: Trig) -> Option<Vec<T>> {
        let lon = longitude_sum(self.n_lon, m, a, m2, b);
        if lon == 0.0 {
            return None;
        }
        let lon = T::lit(lon);
        let mut out = Vec::with_capacity((self.lmax + 1 - m) * (self.lmax + 1 - m2));
        for n in m..=self.lmax {
            for n2 in m2..=self.lmax {
                let mut s = T::zero();
                for (w, q) in self.weights.iter().zip(&self.q) {
                    s = s + *w * q[tri_index(n, m)] * q[tri_index(n2, m2)];
                }
                out.push(s * lon);
            }
        }
        Some(out)
    }
}

fn trig_branches(m: usize) -> &'static [Trig] {
    if m == 0 {
        &[Trig::Cos]
    } else {
        &[Trig::Cos, Trig::Sin]
    }
}

/// Largest absolute entry difference between the Gram matrices of the
/// sampled basis `{(1/s) Y_{n,j}}_{n ≤ L}` under `rule` and under a
/// same-family reference rule of exactness `4L`.
///
/// Zero (up to rounding) exactly when the rule reproduces the `L²` inner
/// product on spherical polynomials of degree `L`.
pub fn check_exactness<T: Real>(rule: &QuadratureRule<T>, degree: usize) -> T {
    let oracle = rule.refined((4 * degree).max(rule.exactness_degree() + 1));
    let g = RingGram::new(rule, degree);
    let h = RingGram::new(&oracle, degree);
    let mut defect = T::zero();
    for m in 0..=degree {
        for &a in trig_branches(m) {
            for m2 in 0..=degree {
                for &b in trig_branches(m2) {
                    let (x, y) = (g.block(m, a, m2, b), h.block(m, a, m2, b));
                    let d = match (x, y) {
                        (None, None) => continue,
                        (Some(x), None) | (None, Some(x)) => {
                            x.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
                        }
                        (Some(x), Some(y)) => x
                            .iter()
                            .zip(&y)
                            .fold(T::zero(), |acc, (u, v)| acc.max((*u - *v).abs())),
                    };
                    defect = defect.max(d);
                }
            }
        }
    }
    defect
}
