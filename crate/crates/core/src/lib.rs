//! Secrecy-rate simulation for multi-mode fiber MIMO wiretap channels.
//!
//! An `N`-mode fiber link is modeled as a square complex MIMO channel. The
//! legitimate receiver sees `y = H x + n_b`; an eavesdropper who couples
//! light out of the fiber sees `z = G x + n_e` with `G = L^{1/2} H U_e`,
//! where `L` is a random mode-dependent-loss matrix and `U_e` a Haar random
//! unitary. The transmitter knows `H` exactly but only the statistics of
//! `G`, so it can superimpose artificial noise (AN) on the weak modes of
//! `H` to jam the eavesdropper without disturbing the legitimate link.
//!
//! The crate provides:
//!
//! * [`channel`] — channel construction, file I/O, and the random draws
//!   (Haar unitaries, MDL loss vectors, eavesdropper realizations),
//! * [`rates`] — information rates, secrecy rates, eavesdropper-rate
//!   bounds, and the Jensen lower bound on the ergodic secrecy rate,
//! * [`precoding`] — waterfilling, threshold power allocations, SVD
//!   precoders with AN in the signal null space, and the greedy
//!   threshold/power-split search,
//! * [`montecarlo`] — a reproducible, seedable SNR-sweep engine,
//! * [`rng`] — the deterministic stream-splittable generator used
//!   throughout.
//!
//! All rates are in bits per channel use (base-2 logarithms).

pub mod channel;
pub mod error;
mod linalg;
pub mod montecarlo;
pub mod precoding;
pub mod rates;
pub mod rng;

pub use channel::{
    draw_eve_channel, draw_haar_unitary, draw_mdl_matrix, eve_channel_from_parts,
    gen_synthetic_channel, load_channel, save_channel, ChannelMatrix, DrawRule, MdlProfile,
    SingularSystem,
};
pub use error::{Error, Result};
pub use montecarlo::{
    run_sweep, run_sweep_full, run_sweep_serial, unimodality_surface, Scheme, SurfaceGrid,
    SweepConfig, SweepOutput, TrialRecord, TrialStats,
};
pub use precoding::{
    build_precoder, greedy_an_search, svd_covariance, threshold_allocation, waterfilling,
    GreedySearch, GreedySearchOutcome, PowerAllocation, PrecoderSolution, SearchPoint,
};
pub use rates::{
    ergodic_secrecy_rate_mc, ergodic_secrecy_rate_over, estimated_secrecy_rate, eve_rate_bounds,
    jensen_secrecy_lower_bound, rate, rate_pair, secrecy_rate, secrecy_waterfill, Covariance,
    EveRateBounds, JensenBound, NoiseModel, RatePair,
};
pub use rng::SeededRng;
