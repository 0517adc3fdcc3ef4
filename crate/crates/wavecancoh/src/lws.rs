//! Local wavelet spectral estimation.
//!
//! The estimator sequence is: raw wavelet periodogram I_{l,k} (outer
//! products of coefficient vectors), rectangular smoothing over time,
//! Gram-inverse correction across scales, and an eigenvalue-floor
//! regularization before any block is inverted. All matrices are symmetric
//! and stored packed (upper triangle), so a full field costs
//! `8 · J · T · D(D+1)/2` bytes for J scales, T shifts and D channels.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::panel::TimeSeriesPanel;
use crate::wavelets::{CoefficientField, WaveletSystem};
use rayon::prelude::*;

#[inline]
fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Index of entry (i, j), i ≤ j, in the packed upper triangle.
#[inline]
fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < dim);
    i * dim - i * (i - 1) / 2 + (j - i)
}

/// A scale × time field of packed symmetric D×D matrices.
#[derive(Debug, Clone)]
pub struct MatrixField {
    num_scales: usize,
    len: usize,
    dim: usize,
    /// Layout: [scale][shift][packed upper triangle].
    data: Vec<f64>,
}

impl MatrixField {
    pub fn zeros(num_scales: usize, len: usize, dim: usize) -> Self {
        MatrixField {
            num_scales,
            len,
            dim,
            data: vec![0.0; num_scales * len * packed_len(dim)],
        }
    }

    pub fn num_scales(&self) -> usize {
        self.num_scales
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self) -> usize {
        packed_len(self.dim)
    }

    /// Packed entries of the matrix at (scale, k); 1-based scale.
    #[inline]
    pub fn packed(&self, scale: usize, k: usize) -> &[f64] {
        let s = self.stride();
        let base = ((scale - 1) * self.len + k) * s;
        &self.data[base..base + s]
    }

    #[inline]
    pub fn packed_mut(&mut self, scale: usize, k: usize) -> &mut [f64] {
        let s = self.stride();
        let base = ((scale - 1) * self.len + k) * s;
        &mut self.data[base..base + s]
    }

    pub fn get(&self, scale: usize, k: usize, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.packed(scale, k)[packed_index(self.dim, i, j)]
    }

    /// Dense symmetric matrix at (scale, k).
    pub fn to_mat(&self, scale: usize, k: usize) -> Mat {
        let mut m = Mat::zeros(self.dim, self.dim);
        let p = self.packed(scale, k);
        let mut idx = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                m[(i, j)] = p[idx];
                m[(j, i)] = p[idx];
                idx += 1;
            }
        }
        m
    }

    pub fn set_from_mat(&mut self, scale: usize, k: usize, m: &Mat) {
        let dim = self.dim;
        let p = self.packed_mut(scale, k);
        let mut idx = 0;
        for i in 0..dim {
            for j in i..dim {
                p[idx] = 0.5 * (m[(i, j)] + m[(j, i)]);
                idx += 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodogramKind {
    Raw,
    Smoothed,
}

/// Wavelet periodogram field, raw or smoothed.
#[derive(Debug, Clone)]
pub struct PeriodogramField {
    pub field: MatrixField,
    pub kind: PeriodogramKind,
    /// Rectangular half-width used for smoothing (0 for raw).
    pub half_width: usize,
}

/// Corrected local wavelet spectral estimate Ŝ_{j,k}.
#[derive(Debug, Clone)]
pub struct LwsEstimate {
    pub field: MatrixField,
    pub half_width: usize,
    /// Absolute eigenvalue floor applied, 0 when none has been applied yet.
    pub epsilon: f64,
}

/// Raw periodogram I_{l,k} = d_{l,k} d_{l,k}ᵀ.
pub fn raw_periodogram(coefs: &CoefficientField) -> PeriodogramField {
    let (num_scales, len, dim) = (coefs.num_scales(), coefs.len(), coefs.dim());
    let mut field = MatrixField::zeros(num_scales, len, dim);
    for scale in 1..=num_scales {
        for k in 0..len {
            let d = coefs.coef(scale, k);
            let p = field.packed_mut(scale, k);
            let mut idx = 0;
            for i in 0..dim {
                for j in i..dim {
                    p[idx] = d[i] * d[j];
                    idx += 1;
                }
            }
        }
    }
    PeriodogramField {
        field,
        kind: PeriodogramKind::Raw,
        half_width: 0,
    }
}

/// Rectangular smoothing with periodic index wrapping:
/// Ĩ_{l,k} = (2M+1)⁻¹ Σ_{m=-M..M} I_{l,k+m}.
pub fn smooth(input: &PeriodogramField, half_width: usize) -> Result<PeriodogramField> {
    let len = input.field.len();
    if 2 * half_width + 1 > len {
        return Err(Error::WindowTooLong {
            m: half_width,
            len,
        });
    }
    if half_width == 0 {
        return Ok(PeriodogramField {
            field: input.field.clone(),
            kind: PeriodogramKind::Smoothed,
            half_width: 0,
        });
    }
    let f = &input.field;
    let stride = f.stride();
    let norm = 1.0 / (2.0 * half_width as f64 + 1.0);
    let mut out = MatrixField::zeros(f.num_scales(), len, f.dim());
    for scale in 1..=f.num_scales() {
        let base = (scale - 1) * len * stride;
        let src = &f.data[base..base + len * stride];
        let dst = &mut out.data[base..base + len * stride];
        dst.par_chunks_mut(stride).enumerate().for_each(|(k, win)| {
            // fixed ascending summation order per output element
            for m in 0..=(2 * half_width) {
                let kk = (k + len + m - half_width) % len;
                let row = &src[kk * stride..(kk + 1) * stride];
                for (w, &v) in win.iter_mut().zip(row) {
                    *w += v;
                }
            }
            for w in win.iter_mut() {
                *w *= norm;
            }
        });
    }
    Ok(PeriodogramField {
        field: out,
        kind: PeriodogramKind::Smoothed,
        half_width,
    })
}

/// Gram-inverse correction across scales: Ŝ_{j,k} = Σ_l (A⁻¹)_{jl} Ĩ_{l,k}.
/// The output is not yet guaranteed positive semi-definite.
pub fn correct(smoothed: &PeriodogramField, system: &WaveletSystem) -> Result<LwsEstimate> {
    let f = &smoothed.field;
    if f.num_scales() != system.num_scales() {
        return Err(Error::ScaleMismatch {
            field: f.num_scales(),
            system: system.num_scales(),
        });
    }
    let num_scales = f.num_scales();
    let stride = f.stride();
    let len = f.len();
    let inv = system.gram_inv();
    let mut out = MatrixField::zeros(num_scales, len, f.dim());
    for j in 1..=num_scales {
        let base = (j - 1) * len * stride;
        let dst = &mut out.data[base..base + len * stride];
        dst.par_chunks_mut(stride).enumerate().for_each(|(k, row)| {
            for l in 1..=num_scales {
                let w = inv[(j - 1, l - 1)];
                let src = f.packed(l, k);
                for (r, &v) in row.iter_mut().zip(src) {
                    *r += w * v;
                }
            }
        });
    }
    Ok(LwsEstimate {
        field: out,
        half_width: smoothed.half_width,
        epsilon: 0.0,
    })
}

/// Floor the eigenvalues of one symmetric matrix at `epsilon`. Returns the
/// reconstructed matrix and whether any eigenvalue was below the floor.
pub fn regularize_matrix(m: &Mat, epsilon: f64) -> (Mat, bool) {
    let n = m.rows();
    // a Cholesky of m - epsilon·I proves the floor is a no-op, skipping the
    // eigensolve on the (typical) well-conditioned point
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= epsilon;
    }
    if linalg::cholesky(&shifted).is_ok() {
        return (m.clone(), false);
    }
    let (vals, vecs) = linalg::sym_eigen(m);
    let floored = vals.iter().any(|&v| v < epsilon);
    let mut out = Mat::zeros(n, n);
    for (idx, &lam) in vals.iter().enumerate() {
        let f = lam.max(epsilon);
        if f == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = vecs[(i, idx)];
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[(i, j)] += f * vik * vecs[(j, idx)];
            }
        }
    }
    out.symmetrize();
    (out, floored)
}

/// Regularize every matrix of the estimate with a fixed eigenvalue floor.
pub fn regularize(estimate: &LwsEstimate, epsilon: f64) -> LwsEstimate {
    assert!(epsilon >= 0.0, "epsilon must be nonnegative");
    let f = &estimate.field;
    let mut out = f.clone();
    for scale in 1..=f.num_scales() {
        let fixed: Vec<Mat> = (0..f.len())
            .into_par_iter()
            .map(|k| regularize_matrix(&f.to_mat(scale, k), epsilon).0)
            .collect();
        for (k, m) in fixed.iter().enumerate() {
            out.set_from_mat(scale, k, m);
        }
    }
    LwsEstimate {
        field: out,
        half_width: estimate.half_width,
        epsilon,
    }
}

/// Split a D×D matrix into contiguous blocks at row/column `p`:
/// (S_XX, S_XY, S_YX, S_YY).
pub fn partition(s: &Mat, p: usize) -> Result<(Mat, Mat, Mat, Mat)> {
    let d = s.rows();
    if p == 0 || p >= d {
        return Err(Error::InvalidParameter(format!(
            "group size {p} out of range for {d} channels"
        )));
    }
    let q = d - p;
    Ok((
        s.block(0, 0, p, p),
        s.block(0, p, p, q),
        s.block(p, 0, q, p),
        s.block(p, p, q, q),
    ))
}

/// Joint panel of (X_t, Y_{t+h}) for t = 0..T-h-1. At h = 0 this is the
/// plain concatenation.
pub fn lagged_joint(
    x: &TimeSeriesPanel,
    y: &TimeSeriesPanel,
    h: usize,
) -> Result<TimeSeriesPanel> {
    if x.len() != y.len() {
        return Err(Error::InvalidData(format!(
            "group lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if h >= x.len() {
        return Err(Error::LagTooLarge {
            lag: h,
            len: x.len(),
        });
    }
    let out_len = x.len() - h;
    let channels = x.channels() + y.channels();
    let mut data = Vec::with_capacity(out_len * channels);
    for t in 0..out_len {
        data.extend_from_slice(x.sample(t));
        data.extend_from_slice(y.sample(t + h));
    }
    Ok(TimeSeriesPanel::from_data(
        data,
        out_len,
        channels,
        x.channels(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::wavelets::{ndwt, WaveletFamily, WaveletSystem};

    /// Build a 1-channel field directly from scalar values per (scale, k).
    fn scalar_field(values: Vec<Vec<f64>>) -> MatrixField {
        let num_scales = values.len();
        let len = values[0].len();
        let mut f = MatrixField::zeros(num_scales, len, 1);
        for (j, scale_vals) in values.iter().enumerate() {
            for (k, &v) in scale_vals.iter().enumerate() {
                f.packed_mut(j + 1, k)[0] = v;
            }
        }
        f
    }

    fn random_panel(rng: &mut CounterRng, len: usize, dim: usize, split: usize) -> TimeSeriesPanel {
        let mut p = TimeSeriesPanel::zeros(len, dim, split);
        for t in 0..len {
            for ch in 0..dim {
                p.set(t, ch, rng.standard_normal());
            }
        }
        p
    }

    #[test]
    fn raw_periodogram_outer_product() {
        let sys = WaveletSystem::new(WaveletFamily::Haar, 1).unwrap();
        let mut panel = TimeSeriesPanel::zeros(8, 2, 1);
        // craft d_{1,0} = (1, 2): only sample 0 is nonzero
        panel.set(0, 0, std::f64::consts::SQRT_2);
        panel.set(0, 1, 2.0 * std::f64::consts::SQRT_2);
        let d = ndwt(&panel, &sys).unwrap();
        let c0 = d.coef(1, 0);
        assert!((c0[0] - 1.0).abs() < 1e-12 && (c0[1] - 2.0).abs() < 1e-12);
        let i = raw_periodogram(&d);
        let m = i.field.to_mat(1, 0);
        let expect = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(m.max_abs_diff(&expect) < 1e-12);
        // trace equals squared norm everywhere
        for k in 0..8 {
            let dk = d.coef(1, k);
            let norm2: f64 = dk.iter().map(|v| v * v).sum();
            let mk = i.field.to_mat(1, k);
            assert!((mk[(0, 0)] + mk[(1, 1)] - norm2).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_zero_width_is_identity() {
        let raw = PeriodogramField {
            field: scalar_field(vec![vec![1.0, -2.0, 3.0, 0.5]]),
            kind: PeriodogramKind::Raw,
            half_width: 0,
        };
        let s = smooth(&raw, 0).unwrap();
        for k in 0..4 {
            assert_eq!(s.field.packed(1, k)[0], raw.field.packed(1, k)[0]);
        }
        assert_eq!(s.kind, PeriodogramKind::Smoothed);
    }

    #[test]
    fn smooth_constant_field() {
        let raw = PeriodogramField {
            field: scalar_field(vec![vec![2.5; 16]]),
            kind: PeriodogramKind::Raw,
            half_width: 0,
        };
        let s = smooth(&raw, 3).unwrap();
        for k in 0..16 {
            assert!((s.field.packed(1, k)[0] - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_alternating_field() {
        // three-point mean of (+1, -1, +1, ...) with wraparound flips the
        // sign and scales by 1/3
        let len = 8;
        let vals: Vec<f64> = (0..len)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let raw = PeriodogramField {
            field: scalar_field(vec![vals]),
            kind: PeriodogramKind::Raw,
            half_width: 0,
        };
        let s = smooth(&raw, 1).unwrap();
        for k in 0..len {
            let expect = if k % 2 == 0 { -1.0 / 3.0 } else { 1.0 / 3.0 };
            let got = s.field.packed(1, k)[0];
            assert!((got - expect).abs() < 1e-15, "k={k}: {got}");
        }
    }

    #[test]
    fn smooth_window_too_long() {
        let raw = PeriodogramField {
            field: MatrixField::zeros(1, 8, 1),
            kind: PeriodogramKind::Raw,
            half_width: 0,
        };
        assert!(matches!(smooth(&raw, 4), Err(Error::WindowTooLong { .. })));
    }

    #[test]
    fn smooth_preserves_symmetric_psd() {
        let mut rng = CounterRng::new(31);
        let sys = WaveletSystem::new(WaveletFamily::Haar, 2).unwrap();
        let panel = random_panel(&mut rng, 64, 3, 1);
        let d = ndwt(&panel, &sys).unwrap();
        let s = smooth(&raw_periodogram(&d), 5).unwrap();
        for scale in 1..=2 {
            for k in 0..64 {
                let m = s.field.to_mat(scale, k);
                let (vals, _) = linalg::sym_eigen(&m);
                assert!(vals[0] >= -1e-10, "min eig {:.3e}", vals[0]);
            }
        }
    }

    #[test]
    fn correct_single_scale_haar() {
        // with J = 1 the correction is division by A[0][0] = 1.5
        let sys = WaveletSystem::new(WaveletFamily::Haar, 1).unwrap();
        let sm = PeriodogramField {
            field: scalar_field(vec![vec![3.0; 8]]),
            kind: PeriodogramKind::Smoothed,
            half_width: 0,
        };
        let est = correct(&sm, &sys).unwrap();
        for k in 0..8 {
            assert!((est.field.packed(1, k)[0] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn correct_zero_is_zero() {
        let sys = WaveletSystem::new(WaveletFamily::Haar, 3).unwrap();
        let sm = PeriodogramField {
            field: MatrixField::zeros(3, 16, 2),
            kind: PeriodogramKind::Smoothed,
            half_width: 0,
        };
        let est = correct(&sm, &sys).unwrap();
        assert!(est.field.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn correct_inverts_gram_mixing() {
        // feed Ĩ_l = A[j*][l] · s; the correction must return s at j* and
        // zero at every other scale
        let sys = WaveletSystem::new(WaveletFamily::Haar, 3).unwrap();
        let target = 2usize;
        let s_val = 0.7;
        let mut field = MatrixField::zeros(3, 8, 1);
        for l in 1..=3 {
            let a = sys.gram()[(target - 1, l - 1)];
            for k in 0..8 {
                field.packed_mut(l, k)[0] = a * s_val;
            }
        }
        let est = correct(
            &PeriodogramField {
                field,
                kind: PeriodogramKind::Smoothed,
                half_width: 0,
            },
            &sys,
        )
        .unwrap();
        for j in 1..=3 {
            for k in 0..8 {
                let got = est.field.packed(j, k)[0];
                let expect = if j == target { s_val } else { 0.0 };
                assert!((got - expect).abs() < 1e-10, "scale {j}: {got}");
            }
        }
    }

    #[test]
    fn correct_scale_mismatch() {
        let sys = WaveletSystem::new(WaveletFamily::Haar, 3).unwrap();
        let sm = PeriodogramField {
            field: MatrixField::zeros(2, 8, 1),
            kind: PeriodogramKind::Smoothed,
            half_width: 0,
        };
        assert!(matches!(
            correct(&sm, &sys),
            Err(Error::ScaleMismatch { .. })
        ));
    }

    #[test]
    fn regularize_psd_unchanged_at_zero() {
        let m = Mat::from_rows(&[&[2.0, 0.3], &[0.3, 1.0]]);
        let (out, floored) = regularize_matrix(&m, 0.0);
        assert!(!floored);
        assert!(out.max_abs_diff(&m) < 1e-10);
    }

    #[test]
    fn regularize_floors_diagonal() {
        let m = Mat::from_rows(&[&[1.0, 0.0], &[0.0, -0.2]]);
        let (out, floored) = regularize_matrix(&m, 1e-6);
        assert!(floored);
        let expect = Mat::from_rows(&[&[1.0, 0.0], &[0.0, 1e-6]]);
        assert!(out.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn regularize_random_indefinite() {
        let mut rng = CounterRng::new(47);
        for _ in 0..20 {
            let mut m = Mat::zeros(5, 5);
            for i in 0..5 {
                for j in 0..5 {
                    m[(i, j)] = rng.standard_normal();
                }
            }
            m.symmetrize();
            let eps = 1e-6;
            let (out, _) = regularize_matrix(&m, eps);
            let (vals, _) = linalg::sym_eigen(&out);
            assert!(vals[0] >= eps - 1e-12, "min eig {:.3e}", vals[0]);
        }
    }

    #[test]
    fn regularize_field_records_epsilon() {
        let est = LwsEstimate {
            field: MatrixField::zeros(1, 4, 2),
            half_width: 3,
            epsilon: 0.0,
        };
        let reg = regularize(&est, 1e-5);
        assert_eq!(reg.epsilon, 1e-5);
        assert_eq!(reg.half_width, 3);
        for k in 0..4 {
            let m = reg.field.to_mat(1, k);
            assert!((m[(0, 0)] - 1e-5).abs() < 1e-18);
        }
    }

    #[test]
    fn partition_two_by_two() {
        let s = Mat::from_rows(&[&[1.0, 3.0], &[3.0, 2.0]]);
        let (xx, xy, yx, yy) = partition(&s, 1).unwrap();
        assert_eq!(xx[(0, 0)], 1.0);
        assert_eq!(xy[(0, 0)], 3.0);
        assert_eq!(yx[(0, 0)], 3.0);
        assert_eq!(yy[(0, 0)], 2.0);
    }

    #[test]
    fn partition_transpose_consistency() {
        let mut rng = CounterRng::new(3);
        let mut s = Mat::zeros(7, 7);
        for i in 0..7 {
            for j in 0..7 {
                s[(i, j)] = rng.standard_normal();
            }
        }
        s.symmetrize();
        let (_, xy, yx, _) = partition(&s, 3).unwrap();
        assert_eq!(xy.transpose(), yx);
        assert!(partition(&s, 0).is_err());
        assert!(partition(&s, 7).is_err());
    }

    #[test]
    fn lagged_joint_basics() {
        let mut rng = CounterRng::new(8);
        let x = random_panel(&mut rng, 4, 2, 2);
        let y = random_panel(&mut rng, 4, 1, 1);
        let j0 = lagged_joint(&x, &y, 0).unwrap();
        let fused = TimeSeriesPanel::fuse(&x, &y).unwrap();
        assert_eq!(j0, fused);

        let j1 = lagged_joint(&x, &y, 1).unwrap();
        assert_eq!(j1.len(), 3);
        assert_eq!(j1.sample(0)[0], x.get(0, 0));
        assert_eq!(j1.sample(0)[2], y.get(1, 0));

        assert!(matches!(
            lagged_joint(&x, &y, 4),
            Err(Error::LagTooLarge { .. })
        ));
    }

    #[test]
    fn lagged_cross_block_dominates_at_true_lag() {
        // Y a delayed copy of X: the estimated cross block at the matching
        // lead carries a much larger leading singular value than at lead 0
        let true_lag = 10usize;
        let len = 256usize;
        let sys = WaveletSystem::new(WaveletFamily::Haar, 5).unwrap();
        let sigma1 = |m: &Mat| -> f64 {
            let mut g = m.transpose().matmul(m);
            g.symmetrize();
            let (vals, _) = linalg::sym_eigen(&g);
            vals.last().unwrap().max(0.0).sqrt()
        };
        let mut hits = 0;
        let seeds = 20;
        for seed in 0..seeds {
            let mut rng = CounterRng::substream(515, &[seed]);
            let long = random_panel(&mut rng, len + true_lag, 2, 2);
            let mut x = TimeSeriesPanel::zeros(len, 2, 2);
            let mut y = TimeSeriesPanel::zeros(len, 2, 2);
            for t in 0..len {
                for ch in 0..2 {
                    x.set(t, ch, long.get(t + true_lag, ch));
                    y.set(t, ch, long.get(t, ch));
                }
            }
            let cross_strength = |h: usize| -> f64 {
                let joint = lagged_joint(&x, &y, h).unwrap();
                let d = ndwt(&joint, &sys).unwrap();
                let est = correct(&smooth(&raw_periodogram(&d), 12).unwrap(), &sys).unwrap();
                let n = joint.len();
                let trim = n / 10;
                let mut acc = 0.0;
                for k in trim..n - trim {
                    let (_, sxy, _, _) = partition(&est.field.to_mat(2, k), 2).unwrap();
                    acc += sigma1(&sxy);
                }
                acc / (n - 2 * trim) as f64
            };
            if cross_strength(true_lag) > cross_strength(0) {
                hits += 1;
            }
        }
        assert_eq!(hits, seeds, "cross block dominated in only {hits}/{seeds} seeds");
    }

    #[test]
    fn pipeline_scales_quadratically() {
        // multiplying the panel by c multiplies every estimate by c²
        let mut rng = CounterRng::new(101);
        let sys = WaveletSystem::new(WaveletFamily::Haar, 3).unwrap();
        let panel = random_panel(&mut rng, 128, 2, 1);
        let c = 3.5;
        let mut scaled = panel.clone();
        for t in 0..128 {
            for ch in 0..2 {
                scaled.set(t, ch, c * panel.get(t, ch));
            }
        }
        let est = |p: &TimeSeriesPanel| {
            correct(
                &smooth(&raw_periodogram(&ndwt(p, &sys).unwrap()), 4).unwrap(),
                &sys,
            )
            .unwrap()
        };
        let a = est(&panel);
        let b = est(&scaled);
        for scale in 1..=3 {
            for k in 0..128 {
                let pa = a.field.packed(scale, k);
                let pb = b.field.packed(scale, k);
                for (va, vb) in pa.iter().zip(pb) {
                    let expect = c * c * va;
                    let tol = 1e-9 * expect.abs().max(1e-12);
                    assert!((vb - expect).abs() <= tol);
                }
            }
        }
    }
}
