//! CSV rendering with shortest round-trip float formatting.

use mmfsec::{TrialRecord, TrialStats};

/// Header: `snr_db,scheme,mean_rs,min_rs,std_rs,trials,seed`; one row per
/// `(SNR point, curve)`. Floats use Rust's shortest round-trip `Display`.
pub fn render_stats(stats: &[TrialStats], seed: u64) -> String {
    let mut out = String::from("snr_db,scheme,mean_rs,min_rs,std_rs,trials,seed\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.snr_db, s.scheme, s.mean_rs, s.min_rs, s.std_rs, s.trials, seed
        ));
    }
    out
}

/// Header: `snr_db,scheme,trial,rs`; one row per realization.
pub fn render_trials(records: &[TrialRecord]) -> String {
    let mut out = String::from("snr_db,scheme,trial,rs\n");
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.snr_db, r.scheme, r.trial, r.rs));
    }
    out
}
