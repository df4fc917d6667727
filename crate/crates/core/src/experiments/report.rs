//! CSV artifacts of experiment runs.
//!
//! Floats are written with 17 significant digits. Candidate indices in the
//! files are 1-based. Timings go to a separate text file so that the CSVs
//! are identical between reruns with the same configuration.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::run::RunArtifacts;
use super::truth::write_coeffs_csv;
use crate::error::{Error, Result};

pub const CANDIDATES_HEADER: &str = "k,alpha,alpha_tilde,beta,H_k,err_k,is_k_star,is_k_opt";
pub const SUMMARY_HEADER: &str = "err_star,err_opt,err_max,err_av,eps1,eps2,k_star,k_opt,bound_lhs,bound_rhs,bound_holds,cap_exactness,required_exactness,exactness_defect";
pub const PLOT_HEADER: &str = "run,err_star,err_opt,err_max,err_av";

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn e(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_candidates<W: Write>(run: &RunArtifacts, mut out: W) -> Result<()> {
    let rep = &run.report;
    let errs = rep.err_k.as_deref().unwrap_or(&[]);
    writeln!(out, "{CANDIDATES_HEADER}")?;
    for (k, c) in run.candidates.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            k + 1,
            e(c.params.alpha),
            e(c.params.alpha_tilde),
            e(c.params.beta),
            e(rep.h[k]),
            e(errs.get(k).copied().unwrap_or(f64::NAN)),
            u8::from(k == rep.k_star),
            u8::from(rep.k_opt == Some(k)),
        )?;
    }
    Ok(())
}

pub fn summary_row(run: &RunArtifacts) -> String {
    let r = &run.report;
    let nan = f64::NAN;
    [
        e(r.err_star.unwrap_or(nan)),
        e(r.err_opt.unwrap_or(nan)),
        e(r.err_max.unwrap_or(nan)),
        e(r.err_av.unwrap_or(nan)),
        e(run.config.eps1),
        e(run.config.eps2),
        (r.k_star + 1).to_string(),
        r.k_opt.map_or("".into(), |k| (k + 1).to_string()),
        e(run.theorem.lhs),
        e(run.theorem.rhs),
        u8::from(run.theorem.holds).to_string(),
        run.config.cap_exactness.to_string(),
        run.required_exactness.to_string(),
        e(run.exactness_defect),
    ]
    .join(",")
}

pub fn plot_row(index: usize, run: &RunArtifacts) -> String {
    let r = &run.report;
    let nan = f64::NAN;
    format!(
        "{index},{},{},{},{}",
        e(r.err_star.unwrap_or(nan)),
        e(r.err_opt.unwrap_or(nan)),
        e(r.err_max.unwrap_or(nan)),
        e(r.err_av.unwrap_or(nan))
    )
}

/// Writes `config.txt`, `truth.csv`, `candidates.csv`, `summary.csv`,
/// `plot_data.csv` and `timings.txt` into `dir`.
pub fn report_csv(run: &RunArtifacts, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), run.config.to_text())?;
    let mut w = create(&dir.join("truth.csv"))?;
    write_coeffs_csv(&run.truth, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("candidates.csv"))?;
    write_candidates(run, &mut w)?;
    w.flush()?;
    fs::write(dir.join("summary.csv"), format!("{SUMMARY_HEADER}\n{}\n", summary_row(run)))?;
    fs::write(dir.join("plot_data.csv"), format!("{PLOT_HEADER}\n{}\n", plot_row(1, run)))?;
    let t = &run.timings;
    fs::write(
        dir.join("timings.txt"),
        format!(
            "data_s = {:.3}\ncandidates_s = {:.3}\nselection_s = {:.3}\nexactness_s = {:.3}\n",
            t.data.as_secs_f64(),
            t.candidates.as_secs_f64(),
            t.selection.as_secs_f64(),
            t.exactness.as_secs_f64()
        ),
    )?;
    Ok(())
}

/// Writes each run into `dir/run_NNN` and a combined `plot_data.csv`.
pub fn report_series(runs: &[RunArtifacts], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut dirs = Vec::with_capacity(runs.len());
    let mut plot = format!("{PLOT_HEADER}\n");
    for (i, run) in runs.iter().enumerate() {
        let sub = dir.join(format!("run_{:03}", i + 1));
        report_csv(run, &sub)?;
        plot.push_str(&plot_row(i + 1, run));
        plot.push('\n');
        dirs.push(sub);
    }
    fs::write(dir.join("plot_data.csv"), plot)?;
    Ok(dirs)
}

/// One parsed `summary.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub err_star: f64,
    pub err_opt: f64,
    pub err_max: f64,
    pub err_av: f64,
    pub k_star: usize,
    pub k_opt: usize,
    pub bound_holds: bool,
    pub cap_exactness: usize,
    pub required_exactness: usize,
    pub exactness_defect: f64,
}

pub fn read_summary(path: &Path) -> Result<SummaryRow> {
    let text = fs::read_to_string(path)?;
    let name = path.display().to_string();
    let perr = |line: usize, msg: &str| Error::Parse {
        path: name.clone(),
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(perr(1, "unexpected header"));
    }
    let row = lines.next().ok_or_else(|| perr(2, "missing data row"))?;
    let f: Vec<&str> = row.split(',').collect();
    if f.len() != 14 {
        return Err(perr(2, "expected 14 fields"));
    }
    let fl = |i: usize| f[i].parse::<f64>().map_err(|_| perr(2, "bad float"));
    let us = |i: usize| f[i].parse::<usize>().map_err(|_| perr(2, "bad integer"));
    Ok(SummaryRow {
        err_star: fl(0)?,
        err_opt: fl(1)?,
        err_max: fl(2)?,
        err_av: fl(3)?,
        k_star: us(6)?,
        k_opt: us(7)?,
        bound_holds: us(10)? == 1,
        cap_exactness: us(11)?,
        required_exactness: us(12)?,
        exactness_defect: fl(13)?,
    })
}

/// Finds `summary.csv` in `dir` and its immediate subdirectories, sorted.
pub fn collect_summaries(dir: &Path) -> Result<Vec<(PathBuf, SummaryRow)>> {
    let mut paths = Vec::new();
    let top = dir.join("summary.csv");
    if top.is_file() {
        paths.push(top);
    }
    let mut subs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("summary.csv").is_file())
        .collect();
    subs.sort();
    paths.extend(subs.into_iter().map(|p| p.join("summary.csv")));
    paths
        .into_iter()
        .map(|p| read_summary(&p).map(|s| (p, s)))
        .collect()
}
