//! Synthetic multivariate series with known population coherence.
//!
//! Two generators are provided. The wavelet-domain generator draws
//! Z_t = Σ_j Σ_k V_j(k/T) ψ_{j,k}(t) z_{j,k} from a piecewise-constant
//! spectral specification, so the coherence implied by the spec matrices is
//! exactly recoverable via [`true_cancoh_from_spec`]. The second mixes
//! latent AR(2) sources tuned to narrow frequency bands into two observed
//! groups, with a shared band in the first half of the record only — a
//! nonstationary construction with no wavelet structure at all.

use crate::cancoh;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::panel::TimeSeriesPanel;
use crate::rng::CounterRng;
use crate::wavelets::WaveletSystem;

const TAG_MVLSW: u64 = 0x01;
const TAG_AR2: u64 = 0x02;
const TAG_MIX: u64 = 0x03;

/// Samples discarded before an AR(2) series is recorded.
const AR2_BURN_IN: usize = 500;

/// A matrix-valued step function of rescaled time u ∈ [0, 1).
#[derive(Debug, Clone)]
pub struct PiecewiseMatrix {
    /// Piece i starts at `breaks[i]` and runs to the next break (the last
    /// piece runs to 1). `breaks[0]` must be 0; strictly increasing.
    breaks: Vec<f64>,
    values: Vec<Mat>,
}

impl PiecewiseMatrix {
    pub fn new(breaks: Vec<f64>, values: Vec<Mat>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::InvalidParameter(
                "piecewise spec needs one value per break".into(),
            ));
        }
        if breaks[0] != 0.0 {
            return Err(Error::InvalidParameter("first break must be 0".into()));
        }
        for w in breaks.windows(2) {
            if w[1] <= w[0] || w[1] >= 1.0 {
                return Err(Error::InvalidParameter(
                    "breaks must be strictly increasing inside (0, 1)".into(),
                ));
            }
        }
        Ok(PiecewiseMatrix { breaks, values })
    }

    pub fn constant(value: Mat) -> Self {
        PiecewiseMatrix {
            breaks: vec![0.0],
            values: vec![value],
        }
    }

    /// Value on the piece containing u; a break point belongs to the piece
    /// it starts.
    pub fn value_at(&self, u: f64) -> &Mat {
        let mut idx = 0;
        for (i, &b) in self.breaks.iter().enumerate() {
            if u >= b {
                idx = i;
            } else {
                break;
            }
        }
        &self.values[idx]
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, &Mat)> {
        self.breaks.iter().copied().zip(self.values.iter())
    }

    fn is_zero(&self) -> bool {
        self.values.iter().all(|m| m.max_abs() == 0.0)
    }
}

/// Piecewise-constant joint spectral specification: for each scale j a
/// (P+Q)×(P+Q) symmetric PSD matrix-valued step function of u.
#[derive(Debug, Clone)]
pub struct LwsSpec {
    p: usize,
    q: usize,
    scales: Vec<PiecewiseMatrix>,
}

impl LwsSpec {
    pub fn new(p: usize, q: usize, scales: Vec<PiecewiseMatrix>) -> Result<Self> {
        let d = p + q;
        if p == 0 || q == 0 {
            return Err(Error::InvalidParameter("both groups need channels".into()));
        }
        if scales.is_empty() {
            return Err(Error::InvalidParameter("spec needs at least one scale".into()));
        }
        for (j, pw) in scales.iter().enumerate() {
            for m in &pw.values {
                if m.rows() != d || m.cols() != d {
                    return Err(Error::InvalidParameter(format!(
                        "scale {} matrix is {}x{}, expected {d}x{d}",
                        j + 1,
                        m.rows(),
                        m.cols()
                    )));
                }
                if m.max_asymmetry() > 1e-12 {
                    return Err(Error::InvalidData(format!(
                        "scale {} matrix asymmetric by {:.3e}",
                        j + 1,
                        m.max_asymmetry()
                    )));
                }
                let (vals, _) = linalg::sym_eigen(m);
                if vals[0] < -1e-10 {
                    return Err(Error::NotPsd(vals[0]));
                }
            }
        }
        Ok(LwsSpec { p, q, scales })
    }

    pub fn group_sizes(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn num_scales(&self) -> usize {
        self.scales.len()
    }

    /// Joint spectral matrix at scale j (1-based) and rescaled time u.
    pub fn joint_at(&self, scale: usize, u: f64) -> Result<&Mat> {
        if scale == 0 || scale > self.scales.len() {
            return Err(Error::InvalidParameter(format!(
                "scale {scale} out of range 1..={}",
                self.scales.len()
            )));
        }
        Ok(self.scales[scale - 1].value_at(u))
    }

    pub fn scale_pieces(&self, scale: usize) -> &PiecewiseMatrix {
        &self.scales[scale - 1]
    }

    /// Built-in 6+4-channel specification: constant auto blocks, five
    /// active cross pairs whose level steps from 1 to 2 at u = 0.5, all
    /// concentrated at scale 2. Identifier `c1` on the command line.
    pub fn builtin_c1() -> LwsSpec {
        Self::c1_with_cross_levels(1.0, 2.0)
    }

    /// The same block layout as [`LwsSpec::builtin_c1`] with custom cross
    /// levels per regime; useful for injecting known effects.
    pub fn c1_with_cross_levels(c_first: f64, c_second: f64) -> LwsSpec {
        let joint = |c: f64| -> Mat {
            let mut m = Mat::zeros(10, 10);
            // X auto block: diagonal 8, ones on the listed sibling pairs
            for i in 0..6 {
                m[(i, i)] = 8.0;
            }
            for &(a, b) in &[(0usize, 1usize), (0, 2), (1, 5), (3, 4)] {
                m[(a, b)] = 1.0;
                m[(b, a)] = 1.0;
            }
            // Y auto block: diagonal 6, ones on the listed pairs
            for i in 6..10 {
                m[(i, i)] = 6.0;
            }
            for &(a, b) in &[(6usize, 8usize), (7, 8), (7, 9)] {
                m[(a, b)] = 1.0;
                m[(b, a)] = 1.0;
            }
            // cross pairs (X row, Y col), level c
            for &(x, y) in &[(0usize, 0usize), (0, 3), (1, 1), (2, 3), (3, 0)] {
                m[(x, 6 + y)] = c;
                m[(6 + y, x)] = c;
            }
            m
        };
        let zero = PiecewiseMatrix::constant(Mat::zeros(10, 10));
        let active = PiecewiseMatrix::new(
            vec![0.0, 0.5],
            vec![joint(c_first), joint(c_second)],
        )
        .unwrap();
        LwsSpec::new(6, 4, vec![zero, active]).unwrap()
    }
}

/// One simulated draw.
#[derive(Debug, Clone)]
pub struct MvlswRealization {
    pub panel: TimeSeriesPanel,
    pub seed: u64,
}

/// Lower-triangular V with V·Vᵀ = S.
///
/// Plain Cholesky is tried first; when S is only positive semi-definite the
/// factor is rebuilt from the eigendecomposition with negative eigenvalues
/// floored at zero, re-triangularized through a QR factorization. Rejects
/// matrices with an eigenvalue below -1e-10.
pub fn transfer_from_spectrum(s: &Mat) -> Result<Mat> {
    if s.rows() != s.cols() {
        return Err(Error::InvalidParameter("matrix must be square".into()));
    }
    if s.max_asymmetry() > 1e-10 {
        return Err(Error::InvalidData(format!(
            "matrix asymmetric by {:.3e}",
            s.max_asymmetry()
        )));
    }
    if let Ok(l) = linalg::cholesky(s) {
        return Ok(l);
    }
    let (vals, vecs) = linalg::sym_eigen(s);
    if vals[0] < -1e-10 {
        return Err(Error::NotPsd(vals[0]));
    }
    let n = s.rows();
    // B = U √Λ₊, then B = Rᵀ Qᵀ gives V = Rᵀ with V Vᵀ = B Bᵀ = S
    let mut b = Mat::zeros(n, n);
    for k in 0..n {
        let f = vals[k].max(0.0).sqrt();
        for i in 0..n {
            b[(i, k)] = f * vecs[(i, k)];
        }
    }
    Ok(linalg::qr_r(&b.transpose()).transpose())
}

/// Draw one realization of the wavelet-domain process implied by `spec`.
/// Deterministic in `seed`; scales whose spectrum is identically zero are
/// skipped without consuming randomness from other scales' sub-streams.
pub fn simulate_mvlsw(
    spec: &LwsSpec,
    len: usize,
    system: &WaveletSystem,
    seed: u64,
) -> Result<MvlswRealization> {
    if spec.num_scales() > system.num_scales() {
        return Err(Error::ScaleMismatch {
            field: spec.num_scales(),
            system: system.num_scales(),
        });
    }
    let needed = 1usize << system.num_scales();
    if len < needed {
        return Err(Error::InsufficientLength { len, needed });
    }
    let (p, q) = spec.group_sizes();
    let dim = p + q;
    let mut panel = TimeSeriesPanel::zeros(len, dim, p);
    let mut innovations = vec![0.0; dim];

    for scale in 1..=spec.num_scales() {
        let pieces = spec.scale_pieces(scale);
        if pieces.is_zero() {
            continue;
        }
        let psi = system.wavelet(scale)?;
        // one transfer factor per piece
        let factors: Vec<(f64, Mat)> = pieces
            .pieces()
            .map(|(start, m)| Ok((start, transfer_from_spectrum(m)?)))
            .collect::<Result<Vec<_>>>()?;
        let factor_at = |u: f64| -> &Mat {
            let mut idx = 0;
            for (i, (start, _)) in factors.iter().enumerate() {
                if u >= *start {
                    idx = i;
                }
            }
            &factors[idx].1
        };
        for k in 0..len {
            let u = k as f64 / len as f64;
            let v = factor_at(u);
            let mut rng = CounterRng::substream(seed, &[TAG_MVLSW, scale as u64, k as u64]);
            rng.fill_standard_normal(&mut innovations);
            let w = v.matvec(&innovations);
            for (off, &amp) in psi.iter().enumerate() {
                if amp == 0.0 {
                    continue;
                }
                let t = (k + off) % len;
                let row = panel.sample_mut(t);
                for (r, &wv) in row.iter_mut().zip(&w) {
                    *r += amp * wv;
                }
            }
        }
    }
    Ok(MvlswRealization { panel, seed })
}

/// Population coherence implied by the exact spec matrices at (scale, u):
/// the largest eigenvalue of S_XX⁻¹ S_XY S_YY⁻¹ S_YX.
pub fn true_cancoh_from_spec(spec: &LwsSpec, scale: usize, u: f64) -> Result<f64> {
    let joint = spec.joint_at(scale, u)?;
    let (p, _) = spec.group_sizes();
    let (sxx, sxy, _, syy) = crate::lws::partition(joint, p)?;
    cancoh::direct_eigenvalue(&sxx, &sxy, &syy)
}

/// AR(2) coefficients for a peak at `eta` cycles/sample with sharpness `s`:
/// φ₁ = 2 cos(2πη) e⁻ˢ, φ₂ = -e⁻²ˢ.
pub fn ar2_coefficients(eta: f64, s: f64) -> Result<(f64, f64)> {
    if !(0.0 < eta && eta < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "peak frequency {eta} outside (0, 0.5) cycles/sample"
        )));
    }
    if s <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sharpness {s} must be positive"
        )));
    }
    let phi1 = 2.0 * (2.0 * std::f64::consts::PI * eta).cos() * (-s).exp();
    let phi2 = -(-2.0 * s).exp();
    Ok((phi1, phi2))
}

/// Non-zero loadings of one observed channel: which latent components it
/// mixes and the total weight they are rescaled to sum to.
#[derive(Debug, Clone)]
pub struct MixRow {
    pub components: Vec<usize>,
    pub total: f64,
}

/// Per-regime mixing layout for one observed group.
#[derive(Debug, Clone)]
pub struct MixingPattern {
    pub rows: Vec<MixRow>,
}

/// Two-group AR(2)-mixture specification. Latent sources are independent
/// AR(2) processes, one per (group, component); the last component of each
/// group is blended with a common shared source during the first regime.
#[derive(Debug, Clone)]
pub struct Ar2MixtureSpec {
    /// Peak frequencies in cycles/sample, one per latent component.
    pub eta: Vec<f64>,
    /// Sharpness per component; smaller values give narrower peaks.
    pub sharp: Vec<f64>,
    /// Mixing per regime for group X (index 0 before the change point).
    pub x_mix: [MixingPattern; 2],
    /// Mixing per regime for group Y.
    pub y_mix: [MixingPattern; 2],
    /// Shared-source weight in the blended X component.
    pub alpha: f64,
    /// Shared-source weight in the blended Y component.
    pub beta: f64,
    /// Regime switch as a fraction of the record, second regime inclusive.
    pub change_point: f64,
    pub fs: f64,
}

impl Ar2MixtureSpec {
    /// Five latent bands (2, 6, 10, 17.5, 37.5 Hz at fs = 100), four X and
    /// three Y channels, shared top band in the first half with weights
    /// α = 0.7, β = 0.6. Rows with several loadings draw random weights
    /// summing to 1; single-loading rows use the listed totals.
    pub fn builtin() -> Self {
        let rows = |spec: &[(&[usize], f64)]| MixingPattern {
            rows: spec
                .iter()
                .map(|(c, t)| MixRow {
                    components: c.to_vec(),
                    total: *t,
                })
                .collect(),
        };
        Ar2MixtureSpec {
            eta: vec![0.02, 0.06, 0.10, 0.175, 0.375],
            sharp: vec![0.03, 0.03, 0.03, 0.05, 0.05],
            x_mix: [
                rows(&[
                    (&[4], 0.95),
                    (&[4], 0.90),
                    (&[0, 1], 1.0),
                    (&[0, 1, 2], 1.0),
                ]),
                rows(&[(&[1, 2], 1.0), (&[2], 0.80), (&[0], 0.90), (&[1, 2], 1.0)]),
            ],
            y_mix: [
                rows(&[(&[4], 0.95), (&[4], 0.90), (&[1, 2], 1.0)]),
                rows(&[(&[3], 0.90), (&[2], 1.0), (&[0], 1.0)]),
            ],
            alpha: 0.7,
            beta: 0.6,
            change_point: 0.5,
            fs: 100.0,
        }
    }

    pub fn num_components(&self) -> usize {
        self.eta.len()
    }

    pub fn group_sizes(&self) -> (usize, usize) {
        (self.x_mix[0].rows.len(), self.y_mix[0].rows.len())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.eta.len();
        if k == 0 || self.sharp.len() != k {
            return Err(Error::InvalidParameter(
                "frequency and sharpness vectors must match and be non-empty".into(),
            ));
        }
        for (&eta, &s) in self.eta.iter().zip(&self.sharp) {
            let (phi1, phi2) = ar2_coefficients(eta, s)?;
            if phi2.abs() >= 1.0 || phi2 + phi1 >= 1.0 || phi2 - phi1 >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "AR(2) with eta={eta}, s={s} is not stationary"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(
                "blend weights must lie in [0, 1]".into(),
            ));
        }
        if !(0.0 < self.change_point && self.change_point < 1.0) {
            return Err(Error::InvalidParameter(
                "change point must lie strictly inside (0, 1)".into(),
            ));
        }
        if self.fs <= 0.0 {
            return Err(Error::InvalidParameter("sampling rate must be positive".into()));
        }
        for pattern in self.x_mix.iter().chain(self.y_mix.iter()) {
            for (r, row) in pattern.rows.iter().enumerate() {
                if row.components.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "mixing row {r} selects no components"
                    )));
                }
                if row.components.iter().any(|&c| c >= k) {
                    return Err(Error::InvalidParameter(format!(
                        "mixing row {r} references a component beyond {k}"
                    )));
                }
                if row.total <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "mixing row {r} total must be positive"
                    )));
                }
            }
        }
        if self.x_mix[0].rows.len() != self.x_mix[1].rows.len()
            || self.y_mix[0].rows.len() != self.y_mix[1].rows.len()
        {
            return Err(Error::InvalidParameter(
                "regimes must declare the same channel counts".into(),
            ));
        }
        Ok(())
    }
}

fn ar2_series(phi1: f64, phi2: f64, len: usize, rng: &mut CounterRng) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let (mut z1, mut z2) = (0.0, 0.0);
    for _ in 0..AR2_BURN_IN {
        let z = phi1 * z1 + phi2 * z2 + rng.standard_normal();
        z2 = z1;
        z1 = z;
    }
    for v in out.iter_mut() {
        let z = phi1 * z1 + phi2 * z2 + rng.standard_normal();
        z2 = z1;
        z1 = z;
        *v = z;
    }
    out
}

/// Realize one mixing matrix: single-loading rows take their total, rows
/// with several loadings split the total by rescaled uniforms.
fn draw_mixing(pattern: &MixingPattern, k: usize, seed: u64, matrix_id: u64) -> Mat {
    let mut m = Mat::zeros(pattern.rows.len(), k);
    for (r, row) in pattern.rows.iter().enumerate() {
        if row.components.len() == 1 {
            m[(r, row.components[0])] = row.total;
            continue;
        }
        let mut rng = CounterRng::substream(seed, &[TAG_MIX, matrix_id, r as u64]);
        let draws: Vec<f64> = row.components.iter().map(|_| rng.uniform_oc()).collect();
        let sum: f64 = draws.iter().sum();
        for (&c, &d) in row.components.iter().zip(&draws) {
            m[(r, c)] = row.total * d / sum;
        }
    }
    m
}

/// Simulate the AR(2) mixture: latent sources per group plus one shared
/// source blended into the last component before the change point.
/// Returns the observed (X, Y) panels.
pub fn simulate_ar2_mixture(
    spec: &Ar2MixtureSpec,
    len: usize,
    seed: u64,
) -> Result<(TimeSeriesPanel, TimeSeriesPanel)> {
    spec.validate()?;
    let switch = spec.change_point * len as f64;
    if switch.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "change point {} does not fall on a sample boundary of length {len}",
            spec.change_point
        )));
    }
    let switch = switch as usize;
    let k = spec.num_components();
    let (p, q) = spec.group_sizes();

    let coeffs: Vec<(f64, f64)> = spec
        .eta
        .iter()
        .zip(&spec.sharp)
        .map(|(&eta, &s)| ar2_coefficients(eta, s))
        .collect::<Result<Vec<_>>>()?;

    // latent sources: group 0 = shared (last component only), 1 = X, 2 = Y
    let series = |group: u64, comp: usize| -> Vec<f64> {
        let (phi1, phi2) = coeffs[comp];
        let mut rng = CounterRng::substream(seed, &[TAG_AR2, group, comp as u64]);
        ar2_series(phi1, phi2, len, &mut rng)
    };
    let shared = series(0, k - 1);
    let x_latent: Vec<Vec<f64>> = (0..k).map(|c| series(1, c)).collect();
    let y_latent: Vec<Vec<f64>> = (0..k).map(|c| series(2, c)).collect();

    let bx = [
        draw_mixing(&spec.x_mix[0], k, seed, 0),
        draw_mixing(&spec.x_mix[1], k, seed, 1),
    ];
    let cy = [
        draw_mixing(&spec.y_mix[0], k, seed, 2),
        draw_mixing(&spec.y_mix[1], k, seed, 3),
    ];

    let mut x = TimeSeriesPanel::zeros(len, p, p);
    let mut y = TimeSeriesPanel::zeros(len, q, q);
    let mut zx = vec![0.0; k];
    let mut zy = vec![0.0; k];
    for t in 0..len {
        let regime = usize::from(t >= switch);
        for c in 0..k {
            zx[c] = x_latent[c][t];
            zy[c] = y_latent[c][t];
        }
        if t < switch {
            zx[k - 1] = spec.alpha * shared[t] + (1.0 - spec.alpha) * x_latent[k - 1][t];
            zy[k - 1] = spec.beta * shared[t] + (1.0 - spec.beta) * y_latent[k - 1][t];
        }
        let xt = bx[regime].matvec(&zx);
        let yt = cy[regime].matvec(&zy);
        x.sample_mut(t).copy_from_slice(&xt);
        y.sample_mut(t).copy_from_slice(&yt);
    }
    Ok((x, y))
}
