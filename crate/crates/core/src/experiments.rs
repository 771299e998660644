//! Monte Carlo experiments over random channels.
//!
//! Each sample draws its own RNG stream, so samples run in parallel and the
//! output is identical for a given seed regardless of scheduling. Rows are
//! always written in sample order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::ChoiMatrix;
use crate::error::{Error, Result};
use crate::fidelity::{fidelity, fidelity_spectrum, sub_fidelity, super_fidelity, TruncatedBounds};
use crate::randchan::{random_choi, RngState};

pub const DEFAULT_SAMPLES: usize = 1_000;

/// How the two Choi matrices of each sample are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Both devices are drawn fresh for every sample.
    IndependentPairs,
    /// One standard per rank is drawn first; each sample draws a candidate.
    FixedStandard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Input dimension `n` of the channels; Choi matrices are `n^2 x n^2`.
    pub channel_dim: usize,
    pub ranks: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub pairing: Pairing,
}

impl ExperimentConfig {
    pub fn new(channel_dim: usize, ranks: Vec<usize>, samples: usize, seed: u64) -> Self {
        Self {
            channel_dim,
            ranks,
            samples,
            seed,
            pairing: Pairing::IndependentPairs,
        }
    }

    /// Choi matrix dimension `n^2`.
    pub fn dim(&self) -> usize {
        self.channel_dim * self.channel_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel_dim < 2 {
            return Err(Error::Config(format!(
                "channel dimension must be at least 2, got {}",
                self.channel_dim
            )));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.ranks.is_empty() {
            return Err(Error::Config("at least one rank is required".into()));
        }
        let dim = self.dim();
        if let Some(&bad) = self.ranks.iter().find(|&&r| r == 0 || r > dim) {
            return Err(Error::Config(format!("rank {bad} outside 1..={dim}")));
        }
        Ok(())
    }
}

/// All quantities computed for one sampled pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub seed_index: usize,
    pub rank: usize,
    pub sub: f64,
    pub sup: f64,
    pub f_root: f64,
    pub f_sq: f64,
    pub spectrum: Vec<TruncatedBounds>,
}

fn stream_id(rank_index: usize, sample: usize) -> u64 {
    ((rank_index as u64) << 40) | sample as u64
}

fn fixed_standard_stream(rank_index: usize) -> u64 {
    ((rank_index as u64) << 40) | ((1 << 40) - 1)
}

fn evaluate(seed_index: usize, rank: usize, j0: &ChoiMatrix, j1: &ChoiMatrix) -> Result<PairRecord> {
    let f_root = fidelity(j0, j1)?;
    Ok(PairRecord {
        seed_index,
        rank,
        sub: sub_fidelity(j0, j1)?,
        sup: super_fidelity(j0, j1)?,
        f_root,
        f_sq: f_root * f_root,
        spectrum: fidelity_spectrum(j0, j1)?,
    })
}

/// Draws and evaluates every pair, ordered by rank then sample index.
pub fn sample_pairs(cfg: &ExperimentConfig) -> Result<Vec<PairRecord>> {
    cfg.validate()?;
    let n = cfg.channel_dim;
    let mut out = Vec::with_capacity(cfg.ranks.len() * cfg.samples);
    for (ri, &rank) in cfg.ranks.iter().enumerate() {
        let standard = match cfg.pairing {
            Pairing::FixedStandard => Some(random_choi(
                n,
                rank,
                &mut RngState::with_stream(cfg.seed, fixed_standard_stream(ri)),
            )?),
            Pairing::IndependentPairs => None,
        };
        let records: Vec<PairRecord> = (0..cfg.samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = RngState::with_stream(cfg.seed, stream_id(ri, s));
                let j0 = match &standard {
                    Some(j) => j.clone(),
                    None => random_choi(n, rank, &mut rng)?,
                };
                let j1 = random_choi(n, rank, &mut rng)?;
                evaluate(s, rank, &j0, &j1)
            })
            .collect::<Result<_>>()?;
        out.extend(records);
    }
    Ok(out)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-pair CSV: `seed_index,rank,E,G,F_root,F_sq,lower_1,upper_1,...`.
pub fn write_bounds_csv<W: Write>(records: &[PairRecord], dim: usize, mut w: W) -> Result<()> {
    let mut header = vec!["seed_index", "rank", "E", "G", "F_root", "F_sq"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    for m in 1..=dim {
        header.push(format!("lower_{m}"));
        header.push(format!("upper_{m}"));
    }
    writeln!(w, "{}", header.join(","))?;
    for r in records {
        let mut row = vec![
            r.seed_index.to_string(),
            r.rank.to_string(),
            num(r.sub),
            num(r.sup),
            num(r.f_root),
            num(r.f_sq),
        ];
        for b in &r.spectrum {
            row.push(num(b.lower));
            row.push(num(b.upper));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Samples pairs and writes the per-pair bounds CSV.
pub fn run_bounds_distribution<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<Vec<PairRecord>> {
    let records = sample_pairs(cfg)?;
    write_bounds_csv(&records, cfg.dim(), w)?;
    Ok(records)
}

pub fn run_bounds_distribution_to_path(cfg: &ExperimentConfig, path: &Path) -> Result<Vec<PairRecord>> {
    run_bounds_distribution(cfg, BufWriter::new(File::create(path)?))
}

/// Mean truncation error `F - lower(m)` for one rank and one `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub rank: usize,
    pub m: usize,
    pub mean_error: f64,
    /// Standard error of the mean.
    pub std_error: f64,
}

/// Aggregates pair records into per-(rank, m) error statistics.
pub fn truncation_errors(records: &[PairRecord], ranks: &[usize], dim: usize) -> Vec<ErrorRow> {
    let mut rows = Vec::with_capacity(ranks.len() * dim);
    for &rank in ranks {
        let group: Vec<&PairRecord> = records.iter().filter(|r| r.rank == rank).collect();
        let count = group.len() as f64;
        for m in 1..=dim {
            let errors: Vec<f64> = group.iter().map(|r| r.f_root - r.spectrum[m - 1].lower).collect();
            let mean = errors.iter().sum::<f64>() / count;
            let var = if group.len() > 1 {
                errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
            rows.push(ErrorRow {
                rank,
                m,
                mean_error: mean,
                std_error: (var / count).sqrt(),
            });
        }
    }
    rows
}

pub fn write_error_csv<W: Write>(rows: &[ErrorRow], mut w: W) -> Result<()> {
    writeln!(w, "rank,m,mean_error,std_error")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.rank, r.m, num(r.mean_error), num(r.std_error))?;
    }
    w.flush()?;
    Ok(())
}

/// Samples pairs for every configured rank and writes the error curve CSV.
pub fn run_truncation_error<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<Vec<ErrorRow>> {
    let records = sample_pairs(cfg)?;
    let rows = truncation_errors(&records, &cfg.ranks, cfg.dim());
    write_error_csv(&rows, w)?;
    Ok(rows)
}

pub fn run_truncation_error_to_path(cfg: &ExperimentConfig, path: &Path) -> Result<Vec<ErrorRow>> {
    run_truncation_error(cfg, BufWriter::new(File::create(path)?))
}
