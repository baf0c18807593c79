//! Reproducible SNR-sweep simulation engine.
//!
//! Every random draw is keyed by `(master_seed, stream)` where the stream
//! index encodes the purpose, the SNR point, and the trial number. Trials
//! are therefore independent work items: the engine can run them fully
//! serial or on a thread pool and produce bit-identical output, because
//! aggregation is an ordered fold over the trial index either way.
//!
//! Within an SNR point all schemes are evaluated against the same
//! eavesdropper realizations (common random numbers), so scheme
//! comparisons are paired. The greedy search uses its own stream,
//! distinct from the evaluation trials, to keep candidate selection from
//! biasing the reported means.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{draw_eve_channel, ChannelMatrix, MdlProfile};
use crate::error::{Error, Result};
use crate::precoding::{
    evaluate_candidate, freeze_eve_draws, greedy_an_search, svd_covariance, waterfilling,
};
use crate::rates::{
    eve_rate_bounds, jensen_secrecy_lower_bound, rate, Covariance, NoiseModel,
};
use crate::rng::SeededRng;

/// Matches the tie margin of the greedy search.
const TIE_EPS: f64 = 1e-12;

/// Transmit strategies and bound curves the sweep can compare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Waterfilling on the legitimate channel, no artificial noise.
    Waterfilling,
    /// Equal power on every singular mode, no artificial noise.
    SvdUniform,
    /// Greedy threshold / power-split search with artificial noise.
    GreedyAn,
    /// Jensen lower bound on the ergodic secrecy rate (deterministic).
    JensenBound,
    /// Spectral bounds on the secrecy rate of the greedy-an covariances,
    /// reported as the `lemma-lower` and `lemma-upper` curves.
    LemmaBounds,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Waterfilling,
        Scheme::SvdUniform,
        Scheme::GreedyAn,
        Scheme::JensenBound,
        Scheme::LemmaBounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Waterfilling => "waterfilling",
            Scheme::SvdUniform => "svd-uniform",
            Scheme::GreedyAn => "greedy-an",
            Scheme::JensenBound => "jensen-bound",
            Scheme::LemmaBounds => "lemma-bounds",
        }
    }

    pub fn parse(name: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sweep description. The output is a pure function of this struct and
/// the channel; parallelism never changes the bytes.
#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    /// SNR grid in dB, `SNR = P / sigma^2` with `P` fixed per sweep.
    pub snr_db_points: Vec<f64>,
    /// Eavesdropper realizations per SNR point.
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    /// Total transmit power `P` (linear).
    pub power: f64,
    pub mdl_db: f64,
    /// Rescale every eavesdropper draw to the legitimate channel's power.
    pub normalize_trace: bool,
    pub master_seed: u64,
    /// Grid step of the greedy search's power-split loop.
    pub tau_grid_step: f64,
    /// Frozen realizations used inside the greedy search.
    pub eve_draws: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_db_points: vec![0.0],
            trials: 20_000,
            schemes: Scheme::ALL.to_vec(),
            power: 1.0,
            mdl_db: 20.0,
            normalize_trace: true,
            master_seed: 0,
            tau_grid_step: 0.05,
            eve_draws: 500,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db_points.is_empty() {
            return Err(Error::Config("at least one SNR point is required".into()));
        }
        if self.snr_db_points.len() >= (1 << 20) {
            return Err(Error::Config("too many SNR points".into()));
        }
        if self.snr_db_points.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR points must be finite".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.trials >= (1 << 40) {
            return Err(Error::Config("too many trials".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        if !crate::error::positive_finite(self.power) {
            return Err(Error::Config(format!("power must be positive, got {}", self.power)));
        }
        if !crate::error::nonneg_finite(self.mdl_db) {
            return Err(Error::Config(format!("mdl_db must be >= 0, got {}", self.mdl_db)));
        }
        if !crate::error::positive_finite(self.tau_grid_step) || self.tau_grid_step > 0.5 {
            return Err(Error::Config(format!(
                "tau_grid_step must lie in (0, 0.5], got {}",
                self.tau_grid_step
            )));
        }
        if self.eve_draws == 0 {
            return Err(Error::Config("eve_draws must be at least 1".into()));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<MdlProfile> {
        MdlProfile::new(self.mdl_db, self.normalize_trace)
    }
}

/// Aggregate secrecy-rate statistics for one `(SNR point, curve)` pair.
#[derive(Clone, Debug)]
pub struct TrialStats {
    pub snr_db: f64,
    /// Curve id: a scheme name, `lemma-lower`, or `lemma-upper`.
    pub scheme: String,
    pub mean_rs: f64,
    pub min_rs: f64,
    pub std_rs: f64,
    /// Realizations aggregated; 0 for deterministic curves.
    pub trials: usize,
    /// Wall time from the start of the SNR point to this row.
    pub wall_time: Duration,
}

/// One realization's secrecy rate, for the optional per-trial dump.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub scheme: String,
    pub trial: usize,
    pub rs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub stats: Vec<TrialStats>,
    /// Present when requested; ordered by (point, scheme, trial).
    pub trial_dump: Option<Vec<TrialRecord>>,
}

// Stream index layout: two tag bits, then the point index, then the
// trial index. Evaluation trials and the per-point search never collide.
fn trial_stream(point: usize, trial: usize) -> u64 {
    ((point as u64) << 40) | trial as u64
}

fn search_stream(point: usize) -> u64 {
    (1u64 << 62) | point as u64
}

/// Runs the sweep on the rayon thread pool.
pub fn run_sweep(h: &ChannelMatrix, config: &SweepConfig) -> Result<Vec<TrialStats>> {
    Ok(run_sweep_full(h, config, true, false)?.stats)
}

/// Reference single-threaded run; byte-identical to [`run_sweep`].
pub fn run_sweep_serial(h: &ChannelMatrix, config: &SweepConfig) -> Result<Vec<TrialStats>> {
    Ok(run_sweep_full(h, config, false, false)?.stats)
}

/// Per-trial curve values, laid out per the scheme list.
enum Curve {
    /// Secrecy rate of fixed covariances against each realization.
    Evaluated {
        scheme: Scheme,
        q_s: Covariance,
        q_a: Covariance,
        r_bob: f64,
    },
    /// Deterministic value, one row, no trials.
    Deterministic { name: &'static str, value: f64 },
    /// Secrecy-rate bounds of the greedy covariances, two rows.
    LemmaPair {
        q_s: Covariance,
        q_a: Covariance,
        r_bob: f64,
    },
}

impl Curve {
    fn width(&self) -> usize {
        match self {
            Curve::Evaluated { .. } => 1,
            Curve::Deterministic { .. } => 0,
            Curve::LemmaPair { .. } => 2,
        }
    }
}

/// Full-control entry point: choice of thread pool and per-trial dump.
pub fn run_sweep_full(
    h: &ChannelMatrix,
    config: &SweepConfig,
    parallel: bool,
    collect_trials: bool,
) -> Result<SweepOutput> {
    config.validate()?;
    let profile = config.profile()?;
    let gains = h.gains_squared();
    let n = h.n();
    let mut stats = Vec::new();
    let mut dump = if collect_trials { Some(Vec::new()) } else { None };

    for (point, &snr_db) in config.snr_db_points.iter().enumerate() {
        let started = Instant::now();
        let noise = NoiseModel::from_snr_db(config.power, snr_db)
            .map_err(|e| Error::Config(format!("SNR point {snr_db} dB: {e}")))?;

        // The greedy solution serves both greedy-an and lemma-bounds; its
        // stream depends only on the point, so the curve is identical
        // regardless of which schemes are selected.
        let mut greedy: Option<(Covariance, Covariance)> = None;
        let greedy_solution = |greedy: &mut Option<(Covariance, Covariance)>| -> Result<(Covariance, Covariance)> {
            if greedy.is_none() {
                let mut rng = SeededRng::new(config.master_seed, search_stream(point));
                let out = greedy_an_search(
                    h,
                    &profile,
                    config.power,
                    &noise,
                    config.eve_draws,
                    config.tau_grid_step,
                    &mut rng,
                )?;
                *greedy = Some((out.solution.q_s, out.solution.q_a));
            }
            Ok(greedy.clone().expect("just constructed"))
        };

        let mut curves = Vec::with_capacity(config.schemes.len());
        for &scheme in &config.schemes {
            let curve = match scheme {
                Scheme::Waterfilling => {
                    let powers = waterfilling(&gains, config.power, &noise)?;
                    let q_s = svd_covariance(h, &powers)?;
                    let q_a = Covariance::zero(n);
                    let r_bob = rate(h, &q_s, &q_a, &noise)?;
                    Curve::Evaluated { scheme, q_s, q_a, r_bob }
                }
                Scheme::SvdUniform => {
                    let powers = vec![config.power / n as f64; n];
                    let q_s = svd_covariance(h, &powers)?;
                    let q_a = Covariance::zero(n);
                    let r_bob = rate(h, &q_s, &q_a, &noise)?;
                    Curve::Evaluated { scheme, q_s, q_a, r_bob }
                }
                Scheme::GreedyAn => {
                    let (q_s, q_a) = greedy_solution(&mut greedy)?;
                    let r_bob = rate(h, &q_s, &q_a, &noise)?;
                    Curve::Evaluated { scheme, q_s, q_a, r_bob }
                }
                Scheme::JensenBound => {
                    let jb = jensen_secrecy_lower_bound(
                        h,
                        &profile,
                        config.power,
                        &noise,
                        0,
                        &mut SeededRng::new(config.master_seed, search_stream(point)),
                    )?;
                    Curve::Deterministic { name: Scheme::JensenBound.name(), value: jb.value }
                }
                Scheme::LemmaBounds => {
                    let (q_s, q_a) = greedy_solution(&mut greedy)?;
                    let r_bob = rate(h, &q_s, &q_a, &noise)?;
                    Curve::LemmaPair { q_s, q_a, r_bob }
                }
            };
            curves.push(curve);
        }

        let width: usize = curves.iter().map(Curve::width).sum();
        let per_trial = |trial: usize| -> Result<Vec<f64>> {
            let mut rng = SeededRng::new(config.master_seed, trial_stream(point, trial));
            let g = draw_eve_channel(h, &profile, &mut rng)?;
            let mut row = Vec::with_capacity(width);
            for curve in &curves {
                match curve {
                    Curve::Evaluated { q_s, q_a, r_bob, .. } => {
                        let r_eve = rate(&g, q_s, q_a, &noise)?;
                        row.push((r_bob - r_eve).max(0.0));
                    }
                    Curve::Deterministic { .. } => {}
                    Curve::LemmaPair { q_s, q_a, r_bob } => {
                        let bounds = eve_rate_bounds(&g, q_s, q_a, &noise)?;
                        // Pessimistic eavesdropper bound first.
                        row.push((r_bob - bounds.upper).max(0.0));
                        row.push((r_bob - bounds.lower).max(0.0));
                    }
                }
            }
            Ok(row)
        };

        let rows: Vec<Vec<f64>> = if width == 0 {
            Vec::new()
        } else if parallel {
            (0..config.trials)
                .into_par_iter()
                .map(per_trial)
                .collect::<Result<_>>()?
        } else {
            (0..config.trials).map(per_trial).collect::<Result<_>>()?
        };

        let mut column = 0usize;
        for curve in &curves {
            match curve {
                Curve::Evaluated { scheme, .. } => {
                    push_aggregate(
                        &mut stats,
                        &mut dump,
                        &rows,
                        column,
                        snr_db,
                        scheme.name(),
                        started,
                    );
                    column += 1;
                }
                Curve::Deterministic { name, value } => {
                    stats.push(TrialStats {
                        snr_db,
                        scheme: (*name).to_string(),
                        mean_rs: *value,
                        min_rs: *value,
                        std_rs: 0.0,
                        trials: 0,
                        wall_time: started.elapsed(),
                    });
                }
                Curve::LemmaPair { .. } => {
                    push_aggregate(
                        &mut stats,
                        &mut dump,
                        &rows,
                        column,
                        snr_db,
                        "lemma-lower",
                        started,
                    );
                    push_aggregate(
                        &mut stats,
                        &mut dump,
                        &rows,
                        column + 1,
                        snr_db,
                        "lemma-upper",
                        started,
                    );
                    column += 2;
                }
            }
        }
    }

    Ok(SweepOutput { stats, trial_dump: dump })
}

/// Ordered fold over the trial index: mean, min, and sample standard
/// deviation are computed in ascending trial order so the result does not
/// depend on the execution schedule.
fn push_aggregate(
    stats: &mut Vec<TrialStats>,
    dump: &mut Option<Vec<TrialRecord>>,
    rows: &[Vec<f64>],
    column: usize,
    snr_db: f64,
    scheme: &str,
    started: Instant,
) {
    let count = rows.len();
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for row in rows {
        sum += row[column];
        min = min.min(row[column]);
    }
    let mean = sum / count as f64;
    let std = if count > 1 {
        let ss: f64 = rows.iter().map(|r| (r[column] - mean).powi(2)).sum();
        (ss / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    if let Some(records) = dump.as_mut() {
        for (trial, row) in rows.iter().enumerate() {
            records.push(TrialRecord {
                snr_db,
                scheme: scheme.to_string(),
                trial,
                rs: row[column],
            });
        }
    }
    stats.push(TrialStats {
        snr_db,
        scheme: scheme.to_string(),
        mean_rs: mean,
        min_rs: min,
        std_rs: std,
        trials: count,
        wall_time: started.elapsed(),
    });
}

/// Mean frozen-draw secrecy rate on a full `(S, tau)` grid.
#[derive(Clone, Debug)]
pub struct SurfaceGrid {
    pub s_values: Vec<usize>,
    pub tau_values: Vec<f64>,
    /// `mean_rs[si][ti]` for `s_values[si]` and `tau_values[ti]`.
    pub mean_rs: Vec<Vec<f64>>,
}

impl SurfaceGrid {
    /// Cell indices of the maximum, scanning in storage order and
    /// requiring strict improvement — the same tie-breaking as the greedy
    /// search.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = f64::MIN;
        let mut arg = (0, 0);
        for (si, row) in self.mean_rs.iter().enumerate() {
            for (ti, &v) in row.iter().enumerate() {
                if v > best + TIE_EPS {
                    best = v;
                    arg = (si, ti);
                }
            }
        }
        arg
    }

    pub fn max_value(&self) -> f64 {
        let (si, ti) = self.argmax();
        self.mean_rs[si][ti]
    }

    /// Number of strict local maxima along the tau axis for one `S` row.
    pub fn tau_peak_count(&self, s_index: usize) -> usize {
        let row = &self.mean_rs[s_index];
        let n = row.len();
        (0..n)
            .filter(|&i| {
                (i == 0 || row[i] > row[i - 1]) && (i == n - 1 || row[i] > row[i + 1])
            })
            .count()
    }
}

/// Evaluates the mean frozen-draw secrecy rate over the full grid, for
/// surface plots and unimodality checks. Drawing the frozen set as the
/// first action from `rng` matches the greedy search, so passing a
/// generator with the same key reproduces its surface exactly.
#[allow(clippy::too_many_arguments)]
pub fn unimodality_surface(
    h: &ChannelMatrix,
    power: f64,
    noise: &NoiseModel,
    profile: &MdlProfile,
    s_values: &[usize],
    tau_values: &[f64],
    eve_draws: usize,
    rng: &mut SeededRng,
) -> Result<SurfaceGrid> {
    if s_values.is_empty() || tau_values.is_empty() {
        return Err(Error::Config("surface grids must be non-empty".into()));
    }
    if eve_draws == 0 {
        return Err(Error::Config("eve_draws must be at least 1".into()));
    }
    if s_values.iter().any(|&s| s == 0 || s > h.n()) {
        return Err(Error::Config(format!(
            "signal mode counts must lie in 1..={}",
            h.n()
        )));
    }
    if tau_values.iter().any(|&t| !crate::error::positive_finite(t) || t > 1.0) {
        return Err(Error::Config("tau values must lie in (0, 1]".into()));
    }
    let eves = freeze_eve_draws(h, profile, eve_draws, rng)?;
    let mut mean_rs = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let mut row = Vec::with_capacity(tau_values.len());
        for &tau in tau_values {
            row.push(evaluate_candidate(h, s, tau, power, noise, &eves)?);
        }
        mean_rs.push(row);
    }
    Ok(SurfaceGrid {
        s_values: s_values.to_vec(),
        tau_values: tau_values.to_vec(),
        mean_rs,
    })
}
