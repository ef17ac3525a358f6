//! Approximate-queue error measurements.
//!
//! Each trial draws a fresh random occupancy pattern over `[i0, imax]` and
//! performs a single maximum lookup, so errors do not compound across pops.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gradient_pq::{presets, ApproxRange, GradientIndex, Rounding};

use super::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alpha: u32,
    pub occupancies: Vec<f64>,
    pub seeds: u64,
    pub trials: usize,
}

impl SweepConfig {
    /// Occupancy 0.3 to 1.0 in steps of 0.1.
    pub fn standard(alpha: u32) -> Self {
        Self {
            alpha,
            occupancies: (3..=10).map(|k| k as f64 / 10.0).collect(),
            seeds: 10,
            trials: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: u32,
    pub occupancy: f64,
    pub seed: u64,
    pub trials: usize,
    pub mean_abs_err: f64,
    pub p99_abs_err: f64,
    pub max_abs_err: u32,
    pub mean_search_len: f64,
    /// Mean of `estimate − true max`.
    pub mean_signed_err: f64,
    pub hit_rate: f64,
}

pub fn run_error_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, BenchError> {
    if cfg.trials == 0 || cfg.seeds == 0 {
        return Err(BenchError::Config("trials and seeds must be positive".into()));
    }
    if let Some(o) = cfg.occupancies.iter().find(|o| !(**o > 0.0 && **o <= 1.0)) {
        return Err(BenchError::Config(format!("occupancy {o} must lie in (0, 1]")));
    }
    let range = ApproxRange::for_alpha(cfg.alpha)?;
    let span = range.span();
    let mut rows = Vec::new();
    for &occ in &cfg.occupancies {
        let k = ((occ * span as f64).round() as usize).clamp(1, span);
        for seed in 0..cfg.seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ occ.to_bits());
            let mut idx = GradientIndex::approximate(range);
            idx.set_tracking(true);
            for _ in 0..cfg.trials {
                idx.clear();
                for off in rand::seq::index::sample(&mut rng, span, k) {
                    idx.mark(range.i0 + off, true)?;
                }
                idx.locate_max();
            }
            let st = idx.stats();
            rows.push(SweepRow {
                alpha: cfg.alpha,
                occupancy: occ,
                seed,
                trials: cfg.trials,
                mean_abs_err: st.mean_abs_error(),
                p99_abs_err: st.p99_abs_error(),
                max_abs_err: st.abs_errors.iter().copied().max().unwrap_or(0),
                mean_search_len: st.mean_search_len(),
                mean_signed_err: st.signed_estimate_error_total as f64 / st.lookups as f64,
                hit_rate: st.hits as f64 / st.lookups as f64,
            });
        }
    }
    Ok(rows)
}

/// Lookup outcome on one named occupancy pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRow {
    pub name: String,
    pub alpha: u32,
    pub true_max: usize,
    pub estimate: usize,
    pub found: usize,
    /// `estimate − true max`.
    pub signed_err: i64,
    pub abs_err: usize,
}

/// Single lookups on the all-full, even-spacing and half-plus-outlier patterns.
pub fn preset_errors(alpha: u32, rounding: Rounding) -> Result<Vec<PresetRow>, BenchError> {
    let range = ApproxRange::for_alpha(alpha)?;
    let patterns = [
        ("all_full", presets::all_full(&range)),
        ("even_spacing", presets::even_spacing(&range)),
        (
            "half_plus_outlier",
            presets::half_plus_outlier(&range, presets::OUTLIER_SPAN),
        ),
    ];
    let mut rows = Vec::new();
    for (name, pat) in patterns {
        let mut idx = GradientIndex::approximate(range);
        idx.set_rounding(rounding);
        for i in pat {
            idx.mark(i, true)?;
        }
        let truth = idx.true_max().expect("nonempty pattern");
        let loc = idx.locate_max().expect("nonempty pattern");
        rows.push(PresetRow {
            name: name.into(),
            alpha,
            true_max: truth,
            estimate: loc.estimate,
            found: loc.found,
            signed_err: loc.estimate as i64 - truth as i64,
            abs_err: loc.found.abs_diff(truth),
        });
    }
    Ok(rows)
}
