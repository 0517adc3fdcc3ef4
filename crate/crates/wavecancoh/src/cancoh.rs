//! Scale-specific canonical coherence between two channel groups.
//!
//! For spectral blocks S_XX, S_XY, S_YY the coherence is the largest
//! eigenvalue of S_XX⁻¹ S_XY S_YY⁻¹ S_YX (equivalently of the matrix with
//! the roles of X and Y swapped — the two share their spectrum). The
//! production path never forms those products: it whitens with Cholesky
//! factors, K = L_X⁻¹ S_XY L_Y⁻ᵀ, and reads the largest singular value σ of
//! K, giving rho_raw = σ² and direction vectors that satisfy the unit
//! quadratic-form constraints by construction. [`direct_eigenvalue`] keeps
//! the explicit eigenproblem available as an independent cross-check.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lws::{self, LwsEstimate};
use crate::panel::TimeSeriesPanel;
use crate::wavelets::{self, WaveletFamily, WaveletSystem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative gap under which the top two singular values are treated as tied
/// and the returned directions flagged as not identifiable.
const TIE_TOL: f64 = 1e-10;

/// Diagnostics attached to each evaluated point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConditionFlags {
    /// An eigenvalue of the joint spectral matrix was raised to the floor.
    pub floored: bool,
    /// Top singular values tied (or the cross block vanished); the
    /// direction vectors are a deterministic but arbitrary choice.
    pub degenerate: bool,
    /// Eigenvalue floor applied at this point.
    pub epsilon: f64,
}

/// Coherence and canonical directions at one (scale, time) point.
#[derive(Debug, Clone)]
pub struct CancohPoint {
    /// Clamped coherence in [0, 1].
    pub rho: f64,
    /// Largest eigenvalue before clamping, kept for diagnostics.
    pub rho_raw: f64,
    /// Direction vector for group X, aᵀ S_XX a = 1.
    pub a: Vec<f64>,
    /// Direction vector for group Y, bᵀ S_YY b = 1.
    pub b: Vec<f64>,
    pub flags: ConditionFlags,
}

/// Estimation parameters. `None` fields fall back to length-driven
/// defaults; see the field notes.
#[derive(Debug, Clone)]
pub struct CancohConfig {
    pub family: WaveletFamily,
    /// Scales in the wavelet system; default floor(log2 T) capped at 14.
    pub num_scales: Option<usize>,
    /// Rectangular smoothing half-width; default ⌈T^0.7 / 2⌉.
    pub half_width: Option<usize>,
    /// Eigenvalue floor relative to the mean diagonal at each point.
    pub epsilon_rel: f64,
    /// Scales to evaluate; default all j with 2^j ≤ T/8.
    pub scales: Option<Vec<usize>>,
    /// Sampling rate in Hz, used only for time labelling downstream.
    pub fs: f64,
    /// Time of sample 0 in seconds (may be negative).
    pub origin: f64,
}

impl Default for CancohConfig {
    fn default() -> Self {
        CancohConfig {
            family: WaveletFamily::Haar,
            num_scales: None,
            half_width: None,
            epsilon_rel: 1e-8,
            scales: None,
            fs: 1.0,
            origin: 0.0,
        }
    }
}

/// floor(log2 T) capped at 14.
pub fn default_num_scales(len: usize) -> usize {
    assert!(len >= 2);
    let j = (usize::BITS - 1 - len.leading_zeros()) as usize;
    j.min(14)
}

/// ⌈T^0.7 / 2⌉, with a tiny slack so that exact powers of two do not land
/// on the wrong side of the ceiling through floating rounding.
pub fn default_half_width(len: usize) -> usize {
    ((len as f64).powf(0.7) / 2.0 - 1e-9).ceil() as usize
}

/// All scales with 2^j ≤ T/8, within the system's range.
pub fn default_scales(len: usize, num_scales: usize) -> Vec<usize> {
    (1..=num_scales)
        .filter(|&j| (1usize << j) <= len / 8)
        .collect()
}

/// Resolved parameters and provenance for an estimated field.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldMeta {
    pub family: String,
    pub num_scales: usize,
    pub half_width: usize,
    pub epsilon_rel: f64,
    pub scales: Vec<usize>,
    pub lag: usize,
    /// "xy" scores X leading Y by `lag`; "yx" the swapped call.
    pub direction: String,
    pub p: usize,
    pub q: usize,
    /// Number of evaluated shifts (T - lag).
    pub len: usize,
    /// Length T of the X stream; rescaled time is u = k / source_len.
    pub source_len: usize,
    pub fs: f64,
    pub origin: f64,
    pub config_hash: String,
}

impl FieldMeta {
    pub fn rescaled_time(&self, k: usize) -> f64 {
        k as f64 / self.source_len as f64
    }

    pub fn time_seconds(&self, k: usize) -> f64 {
        self.origin + k as f64 / self.fs
    }
}

/// Coherence point per evaluated scale and shift.
#[derive(Debug, Clone)]
pub struct CancohField {
    pub meta: FieldMeta,
    points: Vec<CancohPoint>,
}

impl CancohField {
    pub fn new(meta: FieldMeta, points: Vec<CancohPoint>) -> Self {
        assert_eq!(points.len(), meta.scales.len() * meta.len);
        CancohField { meta, points }
    }

    fn scale_pos(&self, scale: usize) -> usize {
        self.meta
            .scales
            .iter()
            .position(|&s| s == scale)
            .unwrap_or_else(|| panic!("scale {scale} not evaluated"))
    }

    pub fn point(&self, scale: usize, k: usize) -> &CancohPoint {
        &self.points[self.scale_pos(scale) * self.meta.len + k]
    }

    pub fn scale_points(&self, scale: usize) -> &[CancohPoint] {
        let base = self.scale_pos(scale) * self.meta.len;
        &self.points[base..base + self.meta.len]
    }

    pub fn points(&self) -> &[CancohPoint] {
        &self.points
    }

    /// rho curve at one scale.
    pub fn rho_curve(&self, scale: usize) -> Vec<f64> {
        self.scale_points(scale).iter().map(|p| p.rho).collect()
    }
}

/// Parameter-set fingerprint; equal hashes mean equal parameter sets.
fn config_hash(meta: &FieldMeta) -> String {
    crate::rng::fnv64_hex(&format!(
        "family={};J={};M={};eps={:e};scales={:?};lag={};dir={};p={};q={};T={};fs={:e};origin={:e}",
        meta.family,
        meta.num_scales,
        meta.half_width,
        meta.epsilon_rel,
        meta.scales,
        meta.lag,
        meta.direction,
        meta.p,
        meta.q,
        meta.source_len,
        meta.fs,
        meta.origin
    ))
}

/// Relabel the direction of an already estimated field (used when the
/// caller swapped the groups for the reverse direction) and refresh the
/// parameter fingerprint.
pub fn relabel_direction(field: &mut CancohField, direction: &str) {
    field.meta.direction = direction.to_string();
    field.meta.config_hash = config_hash(&field.meta);
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn normalize(v: &mut [f64]) {
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Canonical coherence of one partitioned spectral matrix.
///
/// `sxx` and `syy` must be symmetric positive definite (regularize first);
/// `syx` is accepted for interface symmetry and checked for shape only —
/// the computation uses `sxy`.
pub fn cancoh_at(sxx: &Mat, sxy: &Mat, syx: &Mat, syy: &Mat) -> Result<CancohPoint> {
    let p = sxx.rows();
    let q = syy.rows();
    if sxy.rows() != p || sxy.cols() != q || syx.rows() != q || syx.cols() != p {
        return Err(Error::InvalidParameter(format!(
            "block shapes inconsistent: sxx {p}x{p}, sxy {}x{}, syx {}x{}, syy {q}x{q}",
            sxy.rows(),
            sxy.cols(),
            syx.rows(),
            syx.cols()
        )));
    }
    let lx = linalg::cholesky(sxx)?;
    let ly = linalg::cholesky(syy)?;
    // K = L_X⁻¹ S_XY L_Y⁻ᵀ
    let w = linalg::solve_lower_mat(&lx, sxy);
    let k = linalg::solve_lower_mat(&ly, &w.transpose()).transpose();

    // eigensystem of the smaller Gram side
    let (mut u, mut v, lam1, lam2) = if p <= q {
        let mut g = k.matmul(&k.transpose());
        g.symmetrize();
        let (vals, vecs) = linalg::sym_eigen(&g);
        let lam1 = vals[p - 1];
        let lam2 = if p >= 2 { vals[p - 2] } else { f64::NEG_INFINITY };
        let u: Vec<f64> = (0..p).map(|i| vecs[(i, p - 1)]).collect();
        let sigma = lam1.max(0.0).sqrt();
        let v = if sigma > 1e-150 {
            let kt_u = k.transpose().matvec(&u);
            kt_u.iter().map(|x| x / sigma).collect()
        } else {
            let mut e = vec![0.0; q];
            e[0] = 1.0;
            e
        };
        (u, v, lam1, lam2)
    } else {
        let mut g = k.transpose().matmul(&k);
        g.symmetrize();
        let (vals, vecs) = linalg::sym_eigen(&g);
        let lam1 = vals[q - 1];
        let lam2 = if q >= 2 { vals[q - 2] } else { f64::NEG_INFINITY };
        let v: Vec<f64> = (0..q).map(|i| vecs[(i, q - 1)]).collect();
        let sigma = lam1.max(0.0).sqrt();
        let u = if sigma > 1e-150 {
            let k_v = k.matvec(&v);
            k_v.iter().map(|x| x / sigma).collect()
        } else {
            let mut e = vec![0.0; p];
            e[0] = 1.0;
            e
        };
        (u, v, lam1, lam2)
    };

    let sigma1 = lam1.max(0.0).sqrt();
    let sigma2 = if lam2.is_finite() { lam2.max(0.0).sqrt() } else { f64::NEG_INFINITY };
    let degenerate = sigma1 <= 1e-150
        || (sigma2.is_finite() && (sigma1 - sigma2).abs() < TIE_TOL * sigma1.max(1e-300));

    normalize(&mut u);
    normalize(&mut v);
    let mut a = linalg::solve_lower_transposed(&lx, &u);
    let mut b = linalg::solve_lower_transposed(&ly, &v);
    fix_sign(&mut a);
    fix_sign(&mut b);

    let rho_raw = lam1;
    Ok(CancohPoint {
        rho: rho_raw.clamp(0.0, 1.0),
        rho_raw,
        a,
        b,
        flags: ConditionFlags {
            floored: false,
            degenerate,
            epsilon: 0.0,
        },
    })
}

/// Reference route for the same eigenvalue: symmetric inverse square root
/// of S_XX, explicit inverse of S_YY, then a dense symmetric eigensolve of
/// S_XX^(-1/2) S_XY S_YY⁻¹ S_YX S_XX^(-1/2). Slower than [`cancoh_at`], no
/// shared intermediates; used as the population oracle and in tests.
pub fn direct_eigenvalue(sxx: &Mat, sxy: &Mat, syy: &Mat) -> Result<f64> {
    let wx = linalg::sym_power(sxx, -0.5)?;
    let syy_inv = linalg::sym_inverse(syy)?;
    let mut m = wx
        .matmul(sxy)
        .matmul(&syy_inv)
        .matmul(&sxy.transpose())
        .matmul(&wx);
    m.symmetrize();
    let (vals, _) = linalg::sym_eigen(&m);
    Ok(*vals.last().unwrap())
}

struct Resolved {
    system: WaveletSystem,
    half_width: usize,
    scales: Vec<usize>,
}

fn resolve_config(config: &CancohConfig, len: usize) -> Result<Resolved> {
    if len < 2 {
        return Err(Error::InsufficientLength { len, needed: 2 });
    }
    if config.epsilon_rel < 0.0 {
        return Err(Error::InvalidParameter(
            "epsilon_rel must be nonnegative".into(),
        ));
    }
    if config.fs <= 0.0 {
        return Err(Error::InvalidParameter(
            "sampling rate must be positive".into(),
        ));
    }
    let num_scales = config.num_scales.unwrap_or_else(|| default_num_scales(len));
    let system = WaveletSystem::new(config.family, num_scales)?;
    let half_width = config.half_width.unwrap_or_else(|| default_half_width(len));
    let scales = match &config.scales {
        Some(s) => s.clone(),
        None => default_scales(len, num_scales),
    };
    if scales.is_empty() {
        return Err(Error::InvalidParameter(
            "no scales to evaluate (series too short for the default subset)".into(),
        ));
    }
    for &j in &scales {
        if j == 0 || j > num_scales {
            return Err(Error::InvalidParameter(format!(
                "requested scale {j} outside the system range 1..={num_scales}"
            )));
        }
    }
    Ok(Resolved {
        system,
        half_width,
        scales,
    })
}

/// Coherence of one joint spectral matrix: regularize, partition, solve.
fn point_from_joint(
    joint: &Mat,
    p: usize,
    epsilon_rel: f64,
    scale: usize,
    k: usize,
) -> Result<CancohPoint> {
    let d = joint.rows();
    // mean |diagonal| rather than mean diagonal: the cross-scale correction
    // can leave individual matrices indefinite with a negative trace, and
    // the floor must stay positive there for the block inversions to work
    let mean_diag = (0..d).map(|i| joint[(i, i)].abs()).sum::<f64>() / d as f64;
    let eps = epsilon_rel * mean_diag;
    let (reg, floored) = lws::regularize_matrix(joint, eps);
    let (sxx, sxy, syx, syy) = lws::partition(&reg, p)?;
    let mut point = cancoh_at(&sxx, &sxy, &syx, &syy).map_err(|e| Error::Conditioning {
        scale,
        k,
        detail: e.to_string(),
    })?;
    point.flags.floored = floored;
    point.flags.epsilon = eps;
    Ok(point)
}

fn estimate_field(
    joint: &TimeSeriesPanel,
    config: &CancohConfig,
    source_len: usize,
    lag: usize,
    direction: &str,
) -> Result<CancohField> {
    let resolved = resolve_config(config, joint.len())?;
    let coefs = wavelets::ndwt(joint, &resolved.system)?;
    let smoothed = lws::smooth(&lws::raw_periodogram(&coefs), resolved.half_width)?;
    let estimate: LwsEstimate = lws::correct(&smoothed, &resolved.system)?;

    let p = joint.split();
    let len = joint.len();
    let mut points: Vec<CancohPoint> = Vec::with_capacity(resolved.scales.len() * len);
    for &scale in &resolved.scales {
        let mut scale_points: Vec<Result<CancohPoint>> = Vec::with_capacity(len);
        (0..len)
            .into_par_iter()
            .map(|k| {
                let joint_mat = estimate.field.to_mat(scale, k);
                point_from_joint(&joint_mat, p, config.epsilon_rel, scale, k)
            })
            .collect_into_vec(&mut scale_points);
        for r in scale_points {
            points.push(r?);
        }
    }

    let mut meta = FieldMeta {
        family: config.family.as_str().to_string(),
        num_scales: resolved.system.num_scales(),
        half_width: resolved.half_width,
        epsilon_rel: config.epsilon_rel,
        scales: resolved.scales,
        lag,
        direction: direction.to_string(),
        p,
        q: joint.channels() - p,
        len,
        source_len,
        fs: config.fs,
        origin: config.origin,
        config_hash: String::new(),
    };
    meta.config_hash = config_hash(&meta);
    Ok(CancohField::new(meta, points))
}

/// Contemporaneous coherence field between two equally long panels.
pub fn wavecancoh(
    x: &TimeSeriesPanel,
    y: &TimeSeriesPanel,
    config: &CancohConfig,
) -> Result<CancohField> {
    causal_wavecancoh(x, y, 0, config)
}

/// Directed coherence between X at t and Y at t+h. At h = 0 this is
/// exactly [`wavecancoh`]. Swap the arguments for the reverse direction.
pub fn causal_wavecancoh(
    x: &TimeSeriesPanel,
    y: &TimeSeriesPanel,
    h: usize,
    config: &CancohConfig,
) -> Result<CancohField> {
    let joint = lws::lagged_joint(x, y, h)?;
    estimate_field(&joint, config, x.len(), h, "xy")
}

/// Run the estimation on an already fused panel (split taken from the
/// panel). Used by the file-based front end where only the joint CSV
/// exists.
pub fn wavecancoh_joint(joint: &TimeSeriesPanel, config: &CancohConfig) -> Result<CancohField> {
    estimate_field(joint, config, joint.len(), 0, "xy")
}
