//! Monte Carlo campaigns over (matrix, N, estimator) grids.
//!
//! Each realization draws its own ensemble on a stream derived from
//! `(matrix index, N index, realization index)`, and every requested
//! estimator runs on that same ensemble. Results are gathered in realization
//! order before reduction, so the report does not depend on the worker count.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{DopError, Result};
use crate::estimators::{estimate_p2, EstimatorKind};
use crate::polcore::{paper_matrices, CoherencyMatrix};
use crate::rng::{mix64, SamplerConfig};
use crate::speckle::sample_records;

const INDEX_BITS: u32 = 21;
const INDEX_LIMIT: usize = 1 << INDEX_BITS;

/// Sample counts of the supplementary N sweep.
pub const SWEEP_N: [usize; 5] = [100, 500, 1000, 5000, 10_000];

#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: CoherencyMatrix,
}

impl NamedMatrix {
    pub fn new(name: impl Into<String>, matrix: CoherencyMatrix) -> Self {
        Self { name: name.into(), matrix }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub matrices: Vec<NamedMatrix>,
    pub n_values: Vec<usize>,
    pub realizations: usize,
    pub master_seed: u64,
    pub estimators: Vec<EstimatorKind>,
}

impl CampaignSpec {
    /// G1..G6 at N = 10⁴, all three estimators.
    pub fn paper_default(realizations: usize, master_seed: u64) -> Self {
        Self {
            matrices: paper_matrices().into_iter().map(|(n, m)| NamedMatrix::new(n, m)).collect(),
            n_values: vec![10_000],
            realizations,
            master_seed,
            estimators: EstimatorKind::ALL.to_vec(),
        }
    }

    /// G1 and G5 over the N sweep.
    pub fn paper_sweep(realizations: usize, master_seed: u64) -> Self {
        let all = paper_matrices();
        Self {
            matrices: [0, 4]
                .iter()
                .map(|&i| NamedMatrix::new(all[i].0.clone(), all[i].1))
                .collect(),
            n_values: SWEEP_N.to_vec(),
            realizations,
            master_seed,
            estimators: EstimatorKind::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DopError::InvalidArgument(m));
        if self.matrices.is_empty() || self.n_values.is_empty() || self.estimators.is_empty() {
            return bad("campaign needs at least one matrix, one N and one estimator".into());
        }
        if self.realizations < 2 {
            return bad(format!("realizations must be >= 2, got {}", self.realizations));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return bad(format!("every N must be >= 2, got {n}"));
        }
        if self.matrices.len() >= INDEX_LIMIT
            || self.n_values.len() >= INDEX_LIMIT
            || self.realizations >= INDEX_LIMIT
        {
            return bad(format!("grid dimensions must stay below {INDEX_LIMIT}"));
        }
        let mut names = HashSet::new();
        for m in &self.matrices {
            if !names.insert(m.name.as_str()) {
                return bad(format!("duplicate matrix name {:?}", m.name));
            }
            m.matrix.degree_of_polarization_squared()?;
        }
        let mut kinds = HashSet::new();
        if !self.estimators.iter().all(|k| kinds.insert(*k)) {
            return bad("duplicate estimator".into());
        }
        Ok(())
    }
}

/// Stream for one realization; injective while every index is below 2²¹.
pub fn stream_id(matrix_index: usize, n_index: usize, realization_index: usize) -> u64 {
    let packed = ((matrix_index as u64) << (2 * INDEX_BITS))
        | ((n_index as u64) << INDEX_BITS)
        | realization_index as u64;
    mix64(packed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceStats {
    pub mean: f64,
    /// Unbiased, 1/(R − 1).
    pub variance: f64,
    pub n_times_variance: f64,
}

/// Mean, unbiased variance and `n`·variance of a set of P² estimates.
pub fn variance_statistics(samples: &[f64], n: usize) -> Result<VarianceStats> {
    if samples.len() < 2 {
        return Err(DopError::TooFewSamples { needed: 2, got: samples.len() });
    }
    let r = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / r;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let variance = ss / (r - 1.0);
    Ok(VarianceStats { mean, variance, n_times_variance: n as f64 * variance })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub matrix: String,
    pub n: usize,
    pub estimator: EstimatorKind,
    pub true_p2: f64,
    /// `None` when fewer than two realizations succeeded.
    pub stats: Option<VarianceStats>,
    pub realization_count: usize,
    pub failures: usize,
    pub diagnostic: Option<String>,
}

impl CellReport {
    pub fn mean_p2(&self) -> Option<f64> {
        self.stats.map(|s| s.mean)
    }

    pub fn var_p2(&self) -> Option<f64> {
        self.stats.map(|s| s.variance)
    }

    pub fn n_times_var(&self) -> Option<f64> {
        self.stats.map(|s| s.n_times_variance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    /// Ordered by matrix, then N, then estimator as listed in the spec.
    pub cells: Vec<CellReport>,
}

impl CampaignReport {
    pub fn cell(&self, matrix: &str, n: usize, kind: EstimatorKind) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.matrix == matrix && c.n == n && c.estimator == kind)
    }

    pub fn matrices(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.matrix.as_str()) {
                out.push(&c.matrix);
            }
        }
        out
    }
}

type RealizationOutcome = Vec<Result<f64>>;

fn run_realization(
    spec: &CampaignSpec,
    keep_cross: bool,
    (mi, ni, ri): (usize, usize, usize),
) -> RealizationOutcome {
    let cfg = SamplerConfig::new(spec.master_seed, stream_id(mi, ni, ri));
    let n = spec.n_values[ni];
    match sample_records(&spec.matrices[mi].matrix, n, cfg, keep_cross) {
        Ok(records) => spec
            .estimators
            .iter()
            .map(|&k| estimate_p2(&records, k).map(|r| r.p2_hat))
            .collect(),
        Err(e) => spec.estimators.iter().map(|_| Err(e.clone())).collect(),
    }
}

/// Runs every grid cell. `workers` sizes the thread pool and never affects output.
pub fn run_campaign(spec: &CampaignSpec, workers: usize) -> Result<CampaignReport> {
    spec.validate()?;
    let keep_cross = spec.estimators.iter().any(|k| k.needs_cross());
    let r = spec.realizations;
    let tasks: Vec<(usize, usize, usize)> = (0..spec.matrices.len())
        .flat_map(|mi| (0..spec.n_values.len()).flat_map(move |ni| (0..r).map(move |ri| (mi, ni, ri))))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| DopError::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<RealizationOutcome> =
        pool.install(|| tasks.par_iter().map(|&t| run_realization(spec, keep_cross, t)).collect());

    let mut cells = Vec::new();
    for (cell_idx, chunk) in outcomes.chunks(r).enumerate() {
        let mi = cell_idx / spec.n_values.len();
        let ni = cell_idx % spec.n_values.len();
        let named = &spec.matrices[mi];
        let n = spec.n_values[ni];
        let true_p2 = named.matrix.degree_of_polarization_squared()?;
        for (ki, &kind) in spec.estimators.iter().enumerate() {
            let mut values = Vec::with_capacity(r);
            let mut first_error = None;
            for outcome in chunk {
                match &outcome[ki] {
                    Ok(v) => values.push(*v),
                    Err(e) => {
                        first_error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            let failures = r - values.len();
            let stats = variance_statistics(&values, n).ok();
            let diagnostic = match (&stats, first_error) {
                (_, Some(e)) => Some(format!("{failures} of {r} realizations failed: {e}")),
                (None, None) => Some("fewer than two realizations".into()),
                _ => None,
            };
            cells.push(CellReport {
                matrix: named.name.clone(),
                n,
                estimator: kind,
                true_p2,
                stats,
                realization_count: values.len(),
                failures,
                diagnostic,
            });
        }
    }
    Ok(CampaignReport { cells })
}
