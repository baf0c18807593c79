//! Channel construction, file I/O, and the random channel draws.
//!
//! The legitimate channel `H` is either loaded from a JSON file or
//! generated synthetically with a controlled singular-value spread. The
//! eavesdropper channel is drawn per realization as `G = L^{1/2} H U_e`
//! with a fresh mode-dependent-loss vector `L` and a fresh Haar random
//! unitary `U_e`, optionally rescaled so that `tr(G G†) = tr(H H†)`
//! exactly (the eavesdropper then captures the same total power as the
//! legitimate receiver and any advantage is structural).

use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_row_major_pairs, to_row_major_pairs, C64, CMat};
use crate::rng::SeededRng;

/// Cached singular value decomposition `M = left · diag(values) · right†`.
///
/// `values` are real, non-negative, and sorted descending; the columns of
/// `left` and `right` are the corresponding singular vectors.
#[derive(Clone, Debug)]
pub struct SingularSystem {
    pub left: DMatrix<C64>,
    pub values: DVector<f64>,
    pub right: DMatrix<C64>,
}

/// Square complex channel matrix with a lazily cached singular system.
///
/// Entries are linear field-amplitude gains and are stored exactly as
/// constructed; any power normalization is explicit and opt-in.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    n: usize,
    entries: CMat,
    label: Option<String>,
    singular: OnceLock<SingularSystem>,
}

impl PartialEq for ChannelMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.entries == other.entries && self.label == other.label
    }
}

impl ChannelMatrix {
    /// Wraps a square matrix with finite entries.
    pub fn from_entries(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension(format!(
                "channel matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let n = entries.nrows();
        if n == 0 {
            return Err(Error::Domain("mode count must be at least 1".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("channel entries must be finite".into()));
        }
        Ok(Self {
            n,
            entries,
            label: None,
            singular: OnceLock::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// `tr(M M†)`, the total power gain of the channel.
    pub fn gram_trace(&self) -> f64 {
        self.entries.norm_squared()
    }

    /// The cached singular system, computed on first use.
    pub fn singular_system(&self) -> &SingularSystem {
        self.singular.get_or_init(|| {
            let svd = self.entries.clone().svd(true, true);
            let u = svd.u.expect("svd with vectors");
            let v = svd.v_t.expect("svd with vectors").adjoint();
            let s = svd.singular_values;

            let mut order: Vec<usize> = (0..self.n).collect();
            order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
            let values = DVector::from_iterator(self.n, order.iter().map(|&i| s[i]));
            let left = DMatrix::from_columns(
                &order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>(),
            );
            let right = DMatrix::from_columns(
                &order.iter().map(|&i| v.column(i).into_owned()).collect::<Vec<_>>(),
            );
            SingularSystem { left, values, right }
        })
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_system().values
    }

    /// Squared singular values (per-mode power gains), descending.
    pub fn gains_squared(&self) -> Vec<f64> {
        self.singular_values().iter().map(|d| d * d).collect()
    }

    /// `10 log10(d_1^2 / d_N^2)`, the spread between the strongest and
    /// weakest mode power gains.
    pub fn dynamic_range_db(&self) -> f64 {
        let sv = self.singular_values();
        let hi = sv[0];
        let lo = sv[self.n - 1];
        10.0 * (hi * hi / (lo * lo)).log10()
    }

    /// Canonical JSON serialization; this is exactly what
    /// [`save_channel`] writes and what the digest is computed over.
    pub fn canonical_json(&self) -> String {
        let file = ChannelFile {
            n: self.n,
            entries: to_row_major_pairs(&self.entries),
            label: self.label.clone(),
        };
        let mut text = serde_json::to_string(&file).expect("channel serialization");
        text.push('\n');
        text
    }

    /// 64-bit FNV-1a digest of the canonical serialization.
    pub fn digest(&self) -> u64 {
        fnv1a64(self.canonical_json().as_bytes())
    }
}

/// 64-bit FNV-1a hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    n: usize,
    entries: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

/// Loads a channel from the canonical JSON format.
///
/// The file holds `n` and a row-major list of `n*n` `[re, im]` pairs; no
/// normalization is applied on load.
pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelMatrix> {
    let text = std::fs::read_to_string(path)?;
    let file: ChannelFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.n == 0 {
        return Err(Error::Domain("field `n`: mode count must be at least 1".into()));
    }
    if file.entries.len() != file.n * file.n {
        return Err(Error::Dimension(format!(
            "field `entries`: expected {} pairs for n = {}, got {}",
            file.n * file.n,
            file.n,
            file.entries.len()
        )));
    }
    let mut m = ChannelMatrix::from_entries(from_row_major_pairs(file.n, &file.entries))?;
    m.label = file.label;
    Ok(m)
}

/// Writes the canonical JSON form (full double precision).
pub fn save_channel(channel: &ChannelMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, channel.canonical_json())?;
    Ok(())
}

/// How the interior mode losses are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DrawRule {
    /// Uniform on `[l_min, l_max]` in linear scale.
    UniformLinear,
}

/// Mode-dependent-loss specification.
///
/// A drawn loss vector always contains `l_max = 1` and
/// `l_min = 10^(-mdl_db/10)` on two distinct uniformly chosen modes, so
/// the ratio `max(l)/min(l)` matches the configured MDL exactly; the
/// remaining modes follow the draw rule.
#[derive(Clone, Debug)]
pub struct MdlProfile {
    mdl_db: f64,
    draw_rule: DrawRule,
    normalize_trace: bool,
    min_loss: f64,
    loss_ratio: f64,
}

impl MdlProfile {
    pub fn new(mdl_db: f64, normalize_trace: bool) -> Result<Self> {
        if !mdl_db.is_finite() || mdl_db < 0.0 {
            return Err(Error::Domain(format!("mdl_db must be finite and >= 0, got {mdl_db}")));
        }
        let loss_ratio = 10f64.powf(mdl_db / 10.0);
        // Pick min_loss so that 1.0 / min_loss reproduces the ratio
        // bit-exactly despite the double rounding in 1/(1/r).
        let mut min_loss = 1.0 / loss_ratio;
        if 1.0 / min_loss != loss_ratio {
            for candidate in [min_loss.next_up(), min_loss.next_down()] {
                if 1.0 / candidate == loss_ratio {
                    min_loss = candidate;
                    break;
                }
            }
        }
        Ok(Self {
            mdl_db,
            draw_rule: DrawRule::UniformLinear,
            normalize_trace,
            min_loss,
            loss_ratio,
        })
    }

    pub fn mdl_db(&self) -> f64 {
        self.mdl_db
    }

    pub fn draw_rule(&self) -> DrawRule {
        self.draw_rule
    }

    pub fn normalize_trace(&self) -> bool {
        self.normalize_trace
    }

    /// `l_max / l_min = 10^(mdl_db/10)`.
    pub fn loss_ratio(&self) -> f64 {
        self.loss_ratio
    }

    /// `l_min`, with `l_max` fixed at 1.
    pub fn min_loss(&self) -> f64 {
        if self.mdl_db == 0.0 {
            1.0
        } else {
            self.min_loss
        }
    }

    /// Marginal mean of a single mode loss under the draw rule.
    pub fn mean_loss(&self) -> f64 {
        match self.draw_rule {
            DrawRule::UniformLinear => 0.5 * (1.0 + self.min_loss()),
        }
    }
}

/// Draws an `n x n` Haar (uniformly distributed) unitary.
///
/// A complex Gaussian matrix is orthonormalized by QR and each column is
/// rotated by the unit-modulus factor that makes the triangular factor's
/// diagonal real positive; without that phase fix the result is not Haar.
pub fn draw_haar_unitary(n: usize, rng: &mut SeededRng) -> Result<ChannelMatrix> {
    if n == 0 {
        return Err(Error::Domain("mode count must be at least 1".into()));
    }
    ChannelMatrix::from_entries(haar_matrix(n, rng))
}

pub(crate) fn haar_matrix(n: usize, rng: &mut SeededRng) -> CMat {
    let mut g = CMat::zeros(n, n);
    // Row-major fill pins the draw order independent of matrix layout.
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = rng.complex_standard_normal();
        }
    }
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Generates a synthetic legitimate channel `H = U_1 diag(d) U_2†` with
/// power gains `d_i^2` log-spaced over `spread_db` decibels and the total
/// power normalized to `tr(H H†) = n`.
pub fn gen_synthetic_channel(n: usize, spread_db: f64, rng: &mut SeededRng) -> Result<ChannelMatrix> {
    if n == 0 {
        return Err(Error::Domain("mode count must be at least 1".into()));
    }
    if !spread_db.is_finite() || spread_db < 0.0 {
        return Err(Error::Domain(format!("spread_db must be finite and >= 0, got {spread_db}")));
    }
    let gains_sq: Vec<f64> = if n == 1 {
        vec![1.0]
    } else {
        (0..n)
            .map(|i| 10f64.powf(-spread_db / 10.0 * i as f64 / (n - 1) as f64))
            .collect()
    };
    let total: f64 = gains_sq.iter().sum();
    let scale = (n as f64 / total).sqrt();
    let u1 = haar_matrix(n, rng);
    let u2 = haar_matrix(n, rng);
    let d = DVector::from_iterator(n, gains_sq.iter().map(|g| C64::new(g.sqrt() * scale, 0.0)));
    ChannelMatrix::from_entries(&u1 * DMatrix::from_diagonal(&d) * u2.adjoint())
}

/// Draws a per-mode loss vector for the given profile.
///
/// `l_max = 1` and `l_min` are assigned to two distinct uniformly chosen
/// modes; the remaining `n - 2` losses are drawn by the profile's rule.
pub fn draw_mdl_matrix(n: usize, profile: &MdlProfile, rng: &mut SeededRng) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("mode count must be at least 1".into()));
    }
    if profile.mdl_db() == 0.0 {
        return Ok(vec![1.0; n]);
    }
    if n == 1 {
        return Err(Error::InfeasibleProfile(format!(
            "cannot realize {} dB of MDL on a single mode",
            profile.mdl_db()
        )));
    }
    let lo = profile.min_loss();
    let idx_max = rng.next_index(n);
    let mut idx_min = rng.next_index(n - 1);
    if idx_min >= idx_max {
        idx_min += 1;
    }
    let mut losses = vec![0.0; n];
    for (i, loss) in losses.iter_mut().enumerate() {
        if i == idx_max {
            *loss = 1.0;
        } else if i == idx_min {
            *loss = lo;
        } else {
            *loss = match profile.draw_rule() {
                DrawRule::UniformLinear => rng.uniform_in(lo, 1.0),
            };
        }
    }
    Ok(losses)
}

/// Forms `G = diag(sqrt(l)) · H · U` from explicit parts.
///
/// With `normalize_trace`, `G` is rescaled by the positive scalar making
/// `tr(G G†) = tr(H H†)`. Exposed so that specific realizations can be
/// reproduced or pinned in tests.
pub fn eve_channel_from_parts(
    h: &ChannelMatrix,
    losses: &[f64],
    unitary: &ChannelMatrix,
    normalize_trace: bool,
) -> Result<ChannelMatrix> {
    let n = h.n();
    if losses.len() != n {
        return Err(Error::Dimension(format!(
            "loss vector length {} does not match mode count {n}",
            losses.len()
        )));
    }
    if unitary.n() != n {
        return Err(Error::Dimension(format!(
            "unitary size {} does not match mode count {n}",
            unitary.n()
        )));
    }
    if losses.iter().any(|&l| !crate::error::positive_finite(l)) {
        return Err(Error::Domain("losses must be positive and finite".into()));
    }
    let mut g = h.entries() * unitary.entries();
    for i in 0..n {
        let amp = losses[i].sqrt();
        for j in 0..n {
            g[(i, j)] *= amp;
        }
    }
    if normalize_trace {
        let scale = (h.gram_trace() / g.norm_squared()).sqrt();
        g *= C64::new(scale, 0.0);
    }
    ChannelMatrix::from_entries(g)
}

/// Draws one eavesdropper realization `G = L^{1/2} H U_e` with a fresh
/// loss vector and a fresh Haar unitary.
pub fn draw_eve_channel(
    h: &ChannelMatrix,
    profile: &MdlProfile,
    rng: &mut SeededRng,
) -> Result<ChannelMatrix> {
    let losses = draw_mdl_matrix(h.n(), profile, rng)?;
    let unitary = ChannelMatrix::from_entries(haar_matrix(h.n(), rng))?;
    eve_channel_from_parts(h, &losses, &unitary, profile.normalize_trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn load_scalar_one() {
        let dir = tempdir();
        let path = dir.join("one.json");
        std::fs::write(&path, r#"{"n":1,"entries":[[1.0,0.0]]}"#).unwrap();
        let m = load_channel(&path).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.entries()[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn load_identity_two() {
        let dir = tempdir();
        let path = dir.join("eye2.json");
        std::fs::write(&path, r#"{"n":2,"entries":[[1,0],[0,0],[0,0],[1,0]]}"#).unwrap();
        let m = load_channel(&path).unwrap();
        assert_eq!(m.entries(), &identity(2));
    }

    #[test]
    fn load_rejects_non_square_entry_list() {
        let dir = tempdir();
        let path = dir.join("bad.json");
        std::fs::write(&path, r#"{"n":2,"entries":[[1,0],[0,0],[0,0]]}"#).unwrap();
        match load_channel(&path) {
            Err(Error::Dimension(msg)) => assert!(msg.contains("entries"), "{msg}"),
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn load_names_offending_field() {
        let dir = tempdir();
        let path = dir.join("missing.json");
        std::fs::write(&path, r#"{"entries":[[1,0]]}"#).unwrap();
        match load_channel(&path) {
            Err(Error::Parse(msg)) => assert!(msg.contains('n'), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip_is_byte_identical() {
        let dir = tempdir();
        for k in 0..50 {
            let mut rng = SeededRng::new(900, k);
            let n = 1 + rng.next_index(6);
            let m = ChannelMatrix::from_entries(CMat::from_fn(n, n, |_, _| {
                rng.complex_standard_normal()
            }))
            .unwrap()
            .with_label(format!("trial-{k}"));
            let p1 = dir.join(format!("a{k}.json"));
            let p2 = dir.join(format!("b{k}.json"));
            save_channel(&m, &p1).unwrap();
            let back = load_channel(&p1).unwrap();
            save_channel(&back, &p2).unwrap();
            assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
            assert_eq!(m, back);
        }
    }

    #[test]
    fn synthetic_scalar_has_unit_gain() {
        let mut rng = SeededRng::new(1, 0);
        let m = gen_synthetic_channel(1, 35.0, &mut rng).unwrap();
        assert!((m.entries()[(0, 0)].norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_zero_spread_is_flat() {
        let mut rng = SeededRng::new(2, 0);
        let m = gen_synthetic_channel(4, 0.0, &mut rng).unwrap();
        for d in m.singular_values().iter() {
            assert!((d - 1.0).abs() < 1e-9, "singular value {d}");
        }
    }

    #[test]
    fn synthetic_spread_ratio() {
        let mut rng = SeededRng::new(3, 0);
        let m = gen_synthetic_channel(8, 20.0, &mut rng).unwrap();
        let sv = m.singular_values();
        let ratio = (sv[0] / sv[7]).powi(2);
        assert!((ratio - 100.0).abs() < 1e-9 * 100.0, "ratio {ratio}");
        assert!((m.gram_trace() - 8.0).abs() < 1e-9 * 8.0);
    }

    #[test]
    fn svd_cache_reconstructs() {
        for k in 0..20 {
            let mut rng = SeededRng::new(4, k);
            let n = 1 + rng.next_index(9);
            let m = ChannelMatrix::from_entries(CMat::from_fn(n, n, |_, _| {
                rng.complex_standard_normal()
            }))
            .unwrap();
            let s = m.singular_system();
            for i in 1..n {
                assert!(s.values[i - 1] >= s.values[i]);
            }
            let rec = &s.left
                * DMatrix::from_diagonal(&s.values.map(|v| c(v, 0.0)))
                * s.right.adjoint();
            let err = (&rec - m.entries()).norm() / m.entries().norm();
            assert!(err <= 1e-9, "reconstruction error {err}");
        }
    }

    #[test]
    fn haar_scalar_is_unit_modulus() {
        let mut rng = SeededRng::new(5, 0);
        let u = draw_haar_unitary(1, &mut rng).unwrap();
        assert!((u.entries()[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_is_unitary() {
        for k in 0..20 {
            let mut rng = SeededRng::new(6, k);
            let n = 1 + rng.next_index(12);
            let u = draw_haar_unitary(n, &mut rng).unwrap();
            let dev = (u.entries().adjoint() * u.entries() - identity(n)).camax();
            assert!(dev < 1e-10, "unitarity deviation {dev} at n = {n}");
        }
    }

    #[test]
    fn haar_first_entry_moment() {
        // E|u_11|^2 = 1/n for Haar; Monte Carlo check at n = 4.
        let n = 4;
        let draws = 20_000;
        let mut sum = 0.0;
        for k in 0..draws {
            let mut rng = SeededRng::new(7, k);
            let u = haar_matrix(n, &mut rng);
            sum += u[(0, 0)].norm_sqr();
        }
        let mean = sum / draws as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean |u11|^2 = {mean}");
    }

    #[test]
    fn haar_left_invariance_moments() {
        // V·U should match U in first and second entry moments.
        let n = 3;
        let draws = 10_000;
        let mut rot = SeededRng::new(8, 0);
        let v = haar_matrix(n, &mut rot);
        let mut mean_plain = CMat::zeros(n, n);
        let mut mean_rot = CMat::zeros(n, n);
        let mut pow_plain = DMatrix::<f64>::zeros(n, n);
        let mut pow_rot = DMatrix::<f64>::zeros(n, n);
        for k in 0..draws {
            let mut rng = SeededRng::new(9, k);
            let u = haar_matrix(n, &mut rng);
            let vu = &v * &u;
            mean_plain += &u;
            mean_rot += &vu;
            pow_plain.zip_apply(&u.map(|z| z.norm_sqr()), |a, b| *a += b);
            pow_rot.zip_apply(&vu.map(|z| z.norm_sqr()), |a, b| *a += b);
        }
        let inv = 1.0 / draws as f64;
        for i in 0..n {
            for j in 0..n {
                assert!((mean_plain[(i, j)].norm() * inv) < 0.02);
                assert!((mean_rot[(i, j)].norm() * inv) < 0.02);
                let d = (pow_plain[(i, j)] - pow_rot[(i, j)]).abs() * inv;
                assert!(d < 0.02, "second-moment deviation {d}");
            }
        }
    }

    #[test]
    fn mdl_zero_is_flat() {
        let profile = MdlProfile::new(0.0, true).unwrap();
        let mut rng = SeededRng::new(10, 0);
        let l = draw_mdl_matrix(5, &profile, &mut rng).unwrap();
        assert!(l.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn mdl_ratio_is_exact() {
        let profile = MdlProfile::new(20.0, true).unwrap();
        let expected = 10f64.powf(2.0);
        for k in 0..200 {
            let mut rng = SeededRng::new(11, k);
            let l = draw_mdl_matrix(6, &profile, &mut rng).unwrap();
            let max = l.iter().copied().fold(f64::MIN, f64::max);
            let min = l.iter().copied().fold(f64::MAX, f64::min);
            assert_eq!(max / min, expected);
        }
    }

    #[test]
    fn mdl_endpoints_present() {
        let profile = MdlProfile::new(10.0, true).unwrap();
        let lo = profile.min_loss();
        for k in 0..1000 {
            let mut rng = SeededRng::new(12, k);
            let l = draw_mdl_matrix(3, &profile, &mut rng).unwrap();
            assert!(l.contains(&1.0));
            assert!(l.contains(&lo));
            assert!(l.iter().all(|&x| (lo..=1.0).contains(&x)));
        }
    }

    #[test]
    fn mdl_single_mode_is_infeasible() {
        let profile = MdlProfile::new(1.0, true).unwrap();
        let mut rng = SeededRng::new(13, 0);
        assert!(matches!(
            draw_mdl_matrix(1, &profile, &mut rng),
            Err(Error::InfeasibleProfile(_))
        ));
    }

    #[test]
    fn eve_zero_mdl_preserves_singular_values() {
        let mut rng = SeededRng::new(14, 0);
        let h = gen_synthetic_channel(5, 12.0, &mut rng).unwrap();
        let profile = MdlProfile::new(0.0, true).unwrap();
        let g = draw_eve_channel(&h, &profile, &mut rng).unwrap();
        for (a, b) in h.singular_values().iter().zip(g.singular_values().iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn eve_trace_preserved_per_draw() {
        let mut rng = SeededRng::new(15, 0);
        let h = gen_synthetic_channel(6, 20.0, &mut rng).unwrap();
        let profile = MdlProfile::new(20.0, true).unwrap();
        let tr_h = h.gram_trace();
        for _ in 0..200 {
            let g = draw_eve_channel(&h, &profile, &mut rng).unwrap();
            assert!((g.gram_trace() - tr_h).abs() <= 1e-9 * tr_h);
        }
    }

    #[test]
    fn eve_gram_isotropy() {
        // Haar isotropy: E[U† A U] = tr(A)/n · I, applied to A = H†LH.
        let n = 4;
        let mut setup = SeededRng::new(16, 0);
        let h = gen_synthetic_channel(n, 20.0, &mut setup).unwrap();
        let profile = MdlProfile::new(20.0, false).unwrap();
        let draws = 5000;
        let mut mean = CMat::zeros(n, n);
        let mut mean_trace = 0.0;
        for k in 0..draws {
            let mut rng = SeededRng::new(17, k);
            let g = draw_eve_channel(&h, &profile, &mut rng).unwrap();
            let gram = g.entries().adjoint() * g.entries();
            mean_trace += gram.diagonal().iter().map(|z| z.re).sum::<f64>();
            mean += gram;
        }
        mean /= C64::new(draws as f64, 0.0);
        mean_trace /= draws as f64;
        let target = mean_trace / n as f64;
        let tol = 0.02 * h.gram_trace() / n as f64;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { target } else { 0.0 };
                let dev = (mean[(i, j)] - c(expect, 0.0)).norm();
                assert!(dev < tol, "entry ({i},{j}) deviates by {dev}");
            }
        }
    }

    #[test]
    fn draws_are_deterministic() {
        let profile = MdlProfile::new(20.0, true).unwrap();
        let l1 = draw_mdl_matrix(8, &profile, &mut SeededRng::new(18, 5)).unwrap();
        let l2 = draw_mdl_matrix(8, &profile, &mut SeededRng::new(18, 5)).unwrap();
        assert_eq!(l1, l2);
        let u1 = draw_haar_unitary(8, &mut SeededRng::new(18, 6)).unwrap();
        let u2 = draw_haar_unitary(8, &mut SeededRng::new(18, 6)).unwrap();
        assert_eq!(u1.entries(), u2.entries());
    }

    fn tempdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "mmfsec-channel-{}-{}",
            std::process::id(),
            std::thread::current().name().unwrap_or("t").replace("::", "-")
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }
}
