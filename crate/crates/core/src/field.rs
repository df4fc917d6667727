//! Discrete fields: the discretization operator `D`, measurement noise and
//! the weighted discrete inner product.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureRule, RuleId};
use crate::scalar::{dot, Real};
use crate::sphharm::{flat_index, tri_index, AssocLegendre, SphCoeffs};

/// Samples at the nodes of one quadrature rule, in node order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField<T> {
    rule_id: RuleId,
    values: Vec<T>,
}

impl<T: Real> DiscreteField<T> {
    pub fn new(rule: &QuadratureRule<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but rule has {} nodes",
                values.len(),
                rule.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite field value".into()));
        }
        Ok(Self {
            rule_id: rule.id(),
            values,
        })
    }

    pub fn zeros(rule: &QuadratureRule<T>) -> Self {
        Self {
            rule_id: rule.id(),
            values: vec![T::zero(); rule.len()],
        }
    }

    pub fn rule_id(&self) -> RuleId {
        self.rule_id
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.rule_id != other.rule_id {
            return Err(Error::RuleMismatch);
        }
        Ok(Self {
            rule_id: self.rule_id,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            rule_id: self.rule_id,
            values: self.values.iter().map(|&v| a * v).collect(),
        }
    }

    /// Writes `index,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i},{:.16e}", v.as_f64())?;
        }
        Ok(())
    }

    /// Reads the format written by [`DiscreteField::write_csv`].
    pub fn read_csv<R: BufRead>(rule: &QuadratureRule<T>, input: R) -> Result<Self> {
        let mut values = vec![None; rule.len()];
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse {
                path: "<field>".into(),
                line: lineno + 1,
                msg: msg.into(),
            };
            let (i, v) = line.split_once(',').ok_or_else(|| bad("expected `index,value`"))?;
            let i: usize = i.trim().parse().map_err(|_| bad("bad node index"))?;
            let v: f64 = v.trim().parse().map_err(|_| bad("bad value"))?;
            let slot = values.get_mut(i).ok_or_else(|| bad("node index out of range"))?;
            *slot = Some(T::lit(v));
        }
        let values = values
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidArgument("field file misses some nodes".into()))?;
        Self::new(rule, values)
    }
}

fn ensure_same<T: Real>(rule: &QuadratureRule<T>, fields: &[&DiscreteField<T>]) -> Result<()> {
    if fields.iter().any(|f| f.rule_id != rule.id()) {
        return Err(Error::RuleMismatch);
    }
    Ok(())
}

/// `⟨v, w⟩ = Σ_i w_i v_i w_i` under the rule's weights.
pub fn discrete_inner<T: Real>(
    rule: &QuadratureRule<T>,
    v: &DiscreteField<T>,
    w: &DiscreteField<T>,
) -> Result<T> {
    ensure_same(rule, &[v, w])?;
    Ok(weighted_dot(rule, &v.values, &w.values))
}

pub(crate) fn weighted_dot<T: Real>(rule: &QuadratureRule<T>, a: &[T], b: &[T]) -> T {
    let n_lon = rule.n_lon();
    rule.ring_weights()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (ring, &w)| {
            let r = ring * n_lon..(ring + 1) * n_lon;
            acc + w * dot(&a[r.clone()], &b[r])
        })
}

pub fn discrete_norm<T: Real>(rule: &QuadratureRule<T>, v: &DiscreteField<T>) -> Result<T> {
    Ok(discrete_inner(rule, v, v)?.max(T::zero()).sqrt())
}

/// `‖approx − truth‖ / ‖truth‖` in the discrete norm.
pub fn relative_error<T: Real>(
    rule: &QuadratureRule<T>,
    approx: &DiscreteField<T>,
    truth: &DiscreteField<T>,
) -> Result<T> {
    ensure_same(rule, &[approx, truth])?;
    let denom = discrete_norm(rule, truth)?;
    if !(denom > T::zero()) {
        return Err(Error::ZeroNorm("reference field of relative error"));
    }
    let diff = approx.lincomb(T::one(), truth, -T::one())?;
    Ok(discrete_norm(rule, &diff)? / denom)
}

/// Evaluates the expansion at every node of `rule`, continuing it upward to
/// the rule radius. This is `D u` for a cap rule.
pub fn sample<T: Real>(c: &SphCoeffs<T>, rule: &QuadratureRule<T>) -> Result<DiscreteField<T>> {
    let radial = c.radial_factors(rule.radius())?;
    let lmax = c.degree_max();
    let table = AssocLegendre::new(lmax);
    let n_lon = rule.n_lon();
    let mut values = vec![T::zero(); rule.len()];
    let mut q = vec![T::zero(); table.len()];
    let mut a = vec![T::zero(); lmax + 1];
    let mut b = vec![T::zero(); lmax + 1];
    for (ring, &t) in rule.cos_colatitudes().iter().enumerate() {
        table.fill(t, &mut q);
        for m in 0..=lmax {
            let (mut sa, mut sb) = (T::zero(), T::zero());
            for n in m..=lmax {
                let f = radial[n] * q[tri_index(n, m)];
                if m == 0 {
                    sa = sa + f * c.as_slice()[flat_index(n, 1)];
                } else {
                    sa = sa + f * c.as_slice()[flat_index(n, 2 * m)];
                    sb = sb + f * c.as_slice()[flat_index(n, 2 * m + 1)];
                }
            }
            a[m] = sa;
            b[m] = sb;
        }
        let out = &mut values[ring * n_lon..(ring + 1) * n_lon];
        for (l, slot) in out.iter_mut().enumerate() {
            let mut v = a[0];
            for m in 1..=lmax {
                v = v + a[m] * rule.cos_m_phi(m, l) + b[m] * rule.sin_m_phi(m, l);
            }
            *slot = v;
        }
    }
    DiscreteField::new(rule, values)
}

/// Discrete moments `Σ_i w_i (1/s) Y_{n,j}(x_i) f_i` for `n ≤ lmax`, where
/// `s` is the rule radius. For an exact rule and `f` of degree `≤ lmax`
/// these are the expansion coefficients of `f` at anchor radius `s`.
pub fn project<T: Real>(
    f: &DiscreteField<T>,
    rule: &QuadratureRule<T>,
    lmax: usize,
) -> Result<SphCoeffs<T>> {
    ensure_same(rule, &[f])?;
    let s = rule.radius();
    let table = AssocLegendre::new(lmax);
    let n_lon = rule.n_lon();
    let mut out = SphCoeffs::zeros(lmax, s);
    let mut q = vec![T::zero(); table.len()];
    let mut fc = vec![T::zero(); lmax + 1];
    let mut fs = vec![T::zero(); lmax + 1];
    for (ring, (&t, &w)) in rule
        .cos_colatitudes()
        .iter()
        .zip(rule.ring_weights())
        .enumerate()
    {
        let vals = &f.values[ring * n_lon..(ring + 1) * n_lon];
        for m in 0..=lmax {
            let (mut sc, mut ss) = (T::zero(), T::zero());
            for (l, &v) in vals.iter().enumerate() {
                sc = sc + v * rule.cos_m_phi(m, l);
                ss = ss + v * rule.sin_m_phi(m, l);
            }
            fc[m] = sc * w / s;
            fs[m] = ss * w / s;
        }
        table.fill(t, &mut q);
        let c = out.as_mut_slice();
        for n in 0..=lmax {
            let k0 = flat_index(n, 1);
            c[k0] = c[k0] + q[tri_index(n, 0)] * fc[0];
            for m in 1..=n {
                let qv = q[tri_index(n, m)];
                let kc = flat_index(n, 2 * m);
                c[kc] = c[kc] + qv * fc[m];
                c[kc + 1] = c[kc + 1] + qv * fs[m];
            }
        }
    }
    Ok(out)
}

/// Relative noise level and generator seed for [`add_noise`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub epsilon_rel: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(epsilon_rel: f64, seed: u64) -> Result<Self> {
        if !(epsilon_rel >= 0.0) || !epsilon_rel.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "relative noise level {epsilon_rel} must be finite and non-negative"
            )));
        }
        Ok(Self { epsilon_rel, seed })
    }
}

/// Adds iid Gaussian noise rescaled so that `‖ξ‖ = ε_rel · ‖f‖` exactly in
/// the weighted discrete norm. The generator is ChaCha8 seeded from
/// `spec.seed`.
pub fn add_noise<T: Real>(
    rule: &QuadratureRule<T>,
    f: &DiscreteField<T>,
    spec: &NoiseSpec,
) -> Result<DiscreteField<T>> {
    ensure_same(rule, &[f])?;
    if spec.epsilon_rel == 0.0 {
        return Ok(f.clone());
    }
    let target = T::lit(spec.epsilon_rel) * discrete_norm(rule, f)?;
    if !(target > T::zero()) {
        return Err(Error::ZeroNorm("noise requested on a zero field"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw: Vec<T> = (0..f.len())
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            T::lit(x)
        })
        .collect();
    let raw_norm = weighted_dot(rule, &raw, &raw).sqrt();
    let k = target / raw_norm;
    let values = f
        .values
        .iter()
        .zip(&raw)
        .map(|(&v, &x)| v + k * x)
        .collect();
    DiscreteField::new(rule, values)
}
