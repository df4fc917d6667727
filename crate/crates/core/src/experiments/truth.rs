//! Reference potentials: a geopotential coefficient file or a seeded random
//! expansion.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sphharm::{coeff_count, order_index, SphCoeffs, Trig};

/// Factor between fully normalized geodetic harmonics and the orthonormal
/// ones used here.
fn norm_factor() -> f64 {
    (4.0 * std::f64::consts::PI).sqrt()
}

fn parse_float(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "e").parse().ok()
}

/// Reads an EGM2008-style table `n m C S [sigmaC sigmaS]` with fully
/// normalized coefficients, keeping degrees `≤ degree_max`.
///
/// Leading lines that do not parse as data are treated as a header. Rows for
/// degrees 0 and 1 may be absent (`C00 = 1`, degree 1 zero); any other
/// missing `(n, m)` is an error. Coefficients are returned at anchor radius
/// `anchor_radius`, so `u(anchor_radius x̂) = Σ C̄ P̄ cos + S̄ P̄ sin`.
pub fn load_egm2008(path: &Path, degree_max: usize, anchor_radius: f64) -> Result<SphCoeffs<f64>> {
    let file = std::fs::File::open(path)?;
    read_egm2008(BufReader::new(file), &path.display().to_string(), degree_max, anchor_radius)
}

pub fn read_egm2008<R: BufRead>(
    input: R,
    name: &str,
    degree_max: usize,
    anchor_radius: f64,
) -> Result<SphCoeffs<f64>> {
    let mut coeffs = SphCoeffs::zeros(degree_max, anchor_radius);
    let mut seen = vec![false; coeffs.as_slice().len()];
    let scale = norm_factor() * anchor_radius;
    let mut in_data = false;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: name.to_string(),
            line: lineno + 1,
            msg,
        };
        let row = (|| {
            if toks.len() < 4 {
                return None;
            }
            let n: usize = toks[0].parse().ok()?;
            let m: usize = toks[1].parse().ok()?;
            Some((n, m, parse_float(toks[2])?, parse_float(toks[3])?))
        })();
        let (n, m, c, s) = match row {
            Some(r) => r,
            None if !in_data => continue,
            None => return Err(err(format!("malformed row `{}`", line.trim()))),
        };
        in_data = true;
        if m > n {
            return Err(err(format!("order {m} exceeds degree {n}")));
        }
        if !c.is_finite() || !s.is_finite() {
            return Err(err("non-finite coefficient".into()));
        }
        if n > degree_max {
            continue;
        }
        let jc = order_index(m, Trig::Cos);
        let ic = n * n + jc - 1;
        coeffs.as_mut_slice()[ic] = scale * c;
        seen[ic] = true;
        if m > 0 {
            let is = ic + 1;
            coeffs.as_mut_slice()[is] = scale * s;
            seen[is] = true;
        }
    }
    if !seen[0] {
        coeffs.as_mut_slice()[0] = scale;
    }
    for (i, &ok) in seen.iter().enumerate().skip(coeff_count(1)) {
        if !ok {
            let n = (i as f64).sqrt().floor() as usize;
            let j = i - n * n + 1;
            return Err(Error::Parse {
                path: name.to_string(),
                line: 0,
                msg: format!("missing coefficient for degree {n}, order {}", j / 2),
            });
        }
    }
    Ok(coeffs)
}

/// Writes coefficients in the same table format (inverse of [`read_egm2008`]).
pub fn write_egm2008<W: Write>(c: &SphCoeffs<f64>, mut out: W) -> Result<()> {
    let scale = norm_factor() * c.anchor_radius();
    for n in 0..=c.degree_max() {
        for m in 0..=n {
            let cc = c.get(n, order_index(m, Trig::Cos)) / scale;
            let ss = if m == 0 {
                0.0
            } else {
                c.get(n, order_index(m, Trig::Sin)) / scale
            };
            writeln!(out, "{n} {m} {cc:.16e} {ss:.16e} 0 0")?;
        }
    }
    Ok(())
}

/// Coefficients `N(0,1) · (n+1)^(-decay)` drawn from ChaCha8 seeded by `seed`,
/// in flat index order.
pub fn random_potential(degree_max: usize, decay: f64, seed: u64, anchor_radius: f64) -> SphCoeffs<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = SphCoeffs::zeros(degree_max, anchor_radius);
    for n in 0..=degree_max {
        let f = ((n + 1) as f64).powf(-decay);
        for j in 1..=2 * n + 1 {
            let z: f64 = StandardNormal.sample(&mut rng);
            c.set(n, j, z * f);
        }
    }
    c
}

/// Writes `n,j,value` rows.
pub fn write_coeffs_csv<W: Write>(c: &SphCoeffs<f64>, mut out: W) -> Result<()> {
    writeln!(out, "n,j,value")?;
    for (n, j, v) in c.iter() {
        writeln!(out, "{n},{j},{v:.16e}")?;
    }
    Ok(())
}
