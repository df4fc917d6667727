//! One end-to-end experiment: truth, synthetic data, candidates, selection.

use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;

use super::config::{ExperimentConfig, TruthSource};
use super::truth::{load_egm2008, random_potential};
use crate::chooser::{select, verify_theorem, SelectionReport, TheoremCheck};
use crate::error::{Error, Result};
use crate::field::{add_noise, discrete_norm, relative_error, sample, DiscreteField, NoiseSpec};
use crate::kernels::{solve_symbols, CandidateParams, DataMoments, KernelSymbols};
use crate::quadrature::{check_exactness, CapGeometry, QuadratureRule};
use crate::sphharm::SphCoeffs;

/// Wall-clock time per stage; kept out of the CSV artifacts.
#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub data: Duration,
    pub candidates: Duration,
    pub selection: Duration,
    pub exactness: Duration,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub params: CandidateParams<f64>,
    pub symbols: KernelSymbols<f64>,
    /// `D u_k` on the data cap rule.
    pub on_cap: DiscreteField<f64>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: ExperimentConfig,
    pub truth: SphCoeffs<f64>,
    pub sphere_rule: QuadratureRule<f64>,
    pub cap_rule: QuadratureRule<f64>,
    /// High-exactness cap rule on which true errors are measured.
    pub error_rule: QuadratureRule<f64>,
    /// `D u†` on the data cap rule.
    pub truth_on_cap: DiscreteField<f64>,
    pub f1: DiscreteField<f64>,
    pub f2: DiscreteField<f64>,
    pub candidates: Vec<Candidate>,
    pub report: SelectionReport<f64>,
    pub theorem: TheoremCheck<f64>,
    pub required_exactness: usize,
    /// Gram defect of the data cap rule at half the required exactness.
    pub exactness_defect: f64,
    pub timings: Timings,
}

/// Independent stream per (seed, purpose).
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn build_truth(cfg: &ExperimentConfig) -> Result<SphCoeffs<f64>> {
    match &cfg.truth_source {
        TruthSource::Egm2008 { path, degree } => load_egm2008(path, *degree, cfg.r),
        TruthSource::Random {
            degree,
            decay_exponent,
            seed,
        } => Ok(random_potential(*degree, *decay_exponent, *seed, cfg.r)),
    }
}

/// Candidate parameters in grid order: `alpha` outermost, `beta` innermost.
pub fn candidate_grid(cfg: &ExperimentConfig) -> Result<Vec<CandidateParams<f64>>> {
    let cap = CapGeometry::new(cfg.r, cfg.rho)?;
    let mut out = Vec::with_capacity(cfg.n_candidates());
    for &alpha in &cfg.alpha_grid {
        for &alpha_tilde in &cfg.alpha_tilde_grid {
            for &beta in &cfg.beta_grid {
                let p = CandidateParams {
                    alpha,
                    alpha_tilde,
                    beta,
                    deg_sat: cfg.deg_sat,
                    deg_ground: cfg.deg_ground,
                    sat_radius: cfg.big_r,
                    cap,
                };
                p.validate()?;
                out.push(p);
            }
        }
    }
    Ok(out)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let t0 = Instant::now();
    let truth = build_truth(cfg)?;
    let truth_deg = truth.degree_max();
    let cap = CapGeometry::new(cfg.r, cfg.rho)?;
    let sphere_rule = QuadratureRule::full_sphere(cfg.sphere_bandwidth, cfg.big_r, cfg.sphere_style)?;
    let cap_rule = QuadratureRule::cap(cap, cfg.cap_exactness);
    let error_rule = QuadratureRule::cap(cap, 2 * cfg.deg_ground.max(truth_deg));
    let required = cfg.required_cap_exactness();
    if cfg.cap_exactness < required {
        warn!(
            "cap rule exactness {} below required {}; selection runs on a degraded rule",
            cfg.cap_exactness, required
        );
    }
    if sphere_rule.exactness_degree() < cfg.required_sphere_exactness() {
        warn!(
            "sphere rule exactness {} below required {}",
            sphere_rule.exactness_degree(),
            cfg.required_sphere_exactness()
        );
    }

    let truth_on_cap = sample(&truth, &cap_rule)?;
    let truth_on_sphere = sample(&truth, &sphere_rule)?;
    let truth_on_err = sample(&truth, &error_rule)?;
    let f1 = add_noise(&cap_rule, &truth_on_cap, &NoiseSpec::new(cfg.eps1, derive_seed(cfg.noise_seed, 1))?)?;
    let f2 = add_noise(&sphere_rule, &truth_on_sphere, &NoiseSpec::new(cfg.eps2, derive_seed(cfg.noise_seed, 2))?)?;
    let moments = DataMoments::new(&sphere_rule, &f2, &cap_rule, &f1, cfg.deg_sat, cfg.deg_ground)?;
    let t_data = t0.elapsed();

    let t1 = Instant::now();
    let params = candidate_grid(cfg)?;
    let built: Vec<(Candidate, f64)> = params
        .par_iter()
        .map(|p| -> Result<(Candidate, f64)> {
            let symbols = solve_symbols(p)?;
            let coeffs = moments.candidate_coeffs(&symbols)?;
            let on_cap = sample(&coeffs, &cap_rule)?;
            let on_err = sample(&coeffs, &error_rule)?;
            let err = relative_error(&error_rule, &on_err, &truth_on_err)?;
            Ok((
                Candidate {
                    params: *p,
                    symbols,
                    on_cap,
                },
                err,
            ))
        })
        .collect::<Result<_>>()?;
    let (candidates, err_k): (Vec<Candidate>, Vec<f64>) = built.into_iter().unzip();
    let t_cand = t1.elapsed();

    let t2 = Instant::now();
    let fields: Vec<DiscreteField<f64>> = candidates.iter().map(|c| c.on_cap.clone()).collect();
    let mut report = select(&cap_rule, &fields, &f1, cfg.pair_tolerance)?.with_errors(err_k)?;
    let noise = f1.lincomb(1.0, &truth_on_cap, -1.0)?;
    let epsilon = discrete_norm(&cap_rule, &noise)?;
    let theorem = verify_theorem(&cap_rule, &mut report, &fields, &truth_on_cap, epsilon)?;
    if !report.h.iter().all(|h| h.is_finite()) {
        return Err(Error::Numerical("non-finite selection score".into()));
    }
    let t_sel = t2.elapsed();

    let t3 = Instant::now();
    let exactness_defect = check_exactness(&cap_rule, required / 2);
    let t_ex = t3.elapsed();

    info!(
        "k* = {} (err {:.3e}), k_opt = {:?} (err {:.3e}), bound {}",
        report.k_star + 1,
        report.err_star.unwrap_or(f64::NAN),
        report.k_opt.map(|k| k + 1),
        report.err_opt.unwrap_or(f64::NAN),
        if theorem.holds { "holds" } else { "VIOLATED" }
    );

    Ok(RunArtifacts {
        config: cfg.clone(),
        truth,
        sphere_rule,
        cap_rule,
        error_rule,
        truth_on_cap,
        f1,
        f2,
        candidates,
        report,
        theorem,
        required_exactness: required,
        exactness_defect,
        timings: Timings {
            data: t_data,
            candidates: t_cand,
            selection: t_sel,
            exactness: t_ex,
        },
    })
}

/// Runs `repeats` experiments with noise seeds `noise_seed, noise_seed+1, …`.
pub fn run_series(cfg: &ExperimentConfig, repeats: usize) -> Result<Vec<RunArtifacts>> {
    (0..repeats as u64)
        .map(|i| {
            let mut c = cfg.clone();
            c.noise_seed = cfg.noise_seed.wrapping_add(i);
            run_experiment(&c)
        })
        .collect()
}
