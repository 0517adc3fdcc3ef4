//! Discrete non-decimated wavelet systems.
//!
//! A [`WaveletSystem`] bundles, for a quadrature-mirror filter pair at `J`
//! dyadic scales: the discrete non-decimated wavelets ψ_j, their
//! autocorrelation sequences Ψ_j(τ), and the Gram matrix A with
//! `A[j][l] = Σ_τ Ψ_j(τ)Ψ_l(τ)` together with its inverse. The Gram inverse
//! is what turns smoothed wavelet periodograms into unbiased spectral
//! estimates downstream.
//!
//! Everything here is constructed by direct tabulation from the filter
//! taps; no closed forms are assumed beyond the filters themselves.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::panel::TimeSeriesPanel;
use rayon::prelude::*;

/// Hard cap on the discrete wavelet support length, and with it on the
/// number of scales a system may hold.
pub const MAX_SUPPORT: usize = 1 << 20;

/// Supported filter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WaveletFamily {
    /// Orthonormal Haar pair, length 2.
    Haar,
    /// Daubechies extremal-phase filter with four taps.
    D4,
}

impl WaveletFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "haar" => Ok(WaveletFamily::Haar),
            "d4" | "daub4" => Ok(WaveletFamily::D4),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::D4 => "d4",
        }
    }
}

impl std::fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A quadrature-mirror filter pair in the orthonormal scaling convention:
/// the low-pass taps sum to √2 and both filters have unit energy.
#[derive(Debug, Clone)]
pub struct WaveletFilter {
    pub family: WaveletFamily,
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
}

impl WaveletFilter {
    pub fn new(family: WaveletFamily) -> Self {
        let lowpass: Vec<f64> = match family {
            WaveletFamily::Haar => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                vec![r, r]
            }
            WaveletFamily::D4 => {
                let s3 = 3.0_f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
        };
        // quadrature mirror relation g[n] = (-1)^n h[L-1-n]
        let l = lowpass.len();
        let highpass: Vec<f64> = (0..l)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[l - 1 - n]
            })
            .collect();
        WaveletFilter {
            family,
            lowpass,
            highpass,
        }
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

/// A non-decimated wavelet system at `num_scales` dyadic scales.
#[derive(Debug, Clone)]
pub struct WaveletSystem {
    filter: WaveletFilter,
    num_scales: usize,
    /// psi[j-1]: the discrete wavelet at scale j, support (2^j-1)(L-1)+1.
    psi: Vec<Vec<f64>>,
    /// acw[j-1][t]: Ψ_j(τ) for τ = t ≥ 0; Ψ_j(-τ) = Ψ_j(τ).
    acw: Vec<Vec<f64>>,
    gram: Mat,
    gram_inv: Mat,
}

/// Build a wavelet system from a family name. Fails on an unknown name, on
/// `num_scales` = 0, and when the coarsest wavelet support would exceed
/// [`MAX_SUPPORT`].
pub fn build_system(filter_name: &str, num_scales: usize) -> Result<WaveletSystem> {
    WaveletSystem::new(WaveletFamily::parse(filter_name)?, num_scales)
}

impl WaveletSystem {
    pub fn new(family: WaveletFamily, num_scales: usize) -> Result<Self> {
        if num_scales == 0 {
            return Err(Error::InvalidParameter(
                "number of scales must be at least 1".into(),
            ));
        }
        let filter = WaveletFilter::new(family);
        let filt_len = filter.len();
        let coarsest = (1usize << num_scales)
            .saturating_sub(1)
            .saturating_mul(filt_len - 1)
            .saturating_add(1);
        if num_scales >= 63 || coarsest > MAX_SUPPORT {
            return Err(Error::ScaleOverflow(num_scales, MAX_SUPPORT));
        }

        let mut psi: Vec<Vec<f64>> = Vec::with_capacity(num_scales);
        psi.push(filter.highpass.clone());
        for _ in 1..num_scales {
            let prev = psi.last().unwrap();
            psi.push(convolve(&upsample2(prev), &filter.lowpass));
        }

        let acw: Vec<Vec<f64>> = psi.iter().map(|p| autocorrelation(p)).collect();

        let mut gram = Mat::zeros(num_scales, num_scales);
        for j in 0..num_scales {
            for l in j..num_scales {
                let a = gram_entry(&acw[j], &acw[l]);
                gram[(j, l)] = a;
                gram[(l, j)] = a;
            }
        }
        let gram_inv = spd_inverse(&gram)?;

        Ok(WaveletSystem {
            filter,
            num_scales,
            psi,
            acw,
            gram,
            gram_inv,
        })
    }

    pub fn family(&self) -> WaveletFamily {
        self.filter.family
    }

    pub fn filter(&self) -> &WaveletFilter {
        &self.filter
    }

    pub fn num_scales(&self) -> usize {
        self.num_scales
    }

    /// Discrete wavelet ψ_j (1-based scale).
    pub fn wavelet(&self, scale: usize) -> Result<&[f64]> {
        self.check_scale(scale)?;
        Ok(&self.psi[scale - 1])
    }

    /// Autocorrelation wavelet Ψ_j as its τ ≥ 0 half; the sequence is
    /// symmetric in τ. `half[0]` is Ψ_j(0) = 1.
    pub fn autocorrelation(&self, scale: usize) -> Result<&[f64]> {
        self.check_scale(scale)?;
        Ok(&self.acw[scale - 1])
    }

    pub fn gram(&self) -> &Mat {
        &self.gram
    }

    pub fn gram_inv(&self) -> &Mat {
        &self.gram_inv
    }

    fn check_scale(&self, scale: usize) -> Result<()> {
        if scale == 0 || scale > self.num_scales {
            return Err(Error::InvalidParameter(format!(
                "scale {scale} out of range 1..={}",
                self.num_scales
            )));
        }
        Ok(())
    }
}

/// Full autocorrelation sequence of a wavelet, τ ≥ 0 half.
pub fn autocorrelation_wavelet(system: &WaveletSystem, scale: usize) -> Result<Vec<f64>> {
    Ok(system.autocorrelation(scale)?.to_vec())
}

fn upsample2(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * x.len() - 1];
    for (i, &v) in x.iter().enumerate() {
        out[2 * i] = v;
    }
    out
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn autocorrelation(psi: &[f64]) -> Vec<f64> {
    let n = psi.len();
    let mut acw = vec![0.0; n];
    for tau in 0..n {
        let mut acc = 0.0;
        for i in 0..n - tau {
            acc += psi[i] * psi[i + tau];
        }
        acw[tau] = acc;
    }
    acw
}

/// A[j][l] = Σ_τ Ψ_j(τ) Ψ_l(τ) over the full symmetric τ range.
fn gram_entry(a: &[f64], b: &[f64]) -> f64 {
    let overlap = a.len().min(b.len());
    let mut acc = a[0] * b[0];
    for tau in 1..overlap {
        acc += 2.0 * a[tau] * b[tau];
    }
    acc
}

fn spd_inverse(a: &Mat) -> Result<Mat> {
    let n = a.rows();
    let l = linalg::cholesky(a)?;
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let y = linalg::solve_lower(&l, &e);
        let x = linalg::solve_lower_transposed(&l, &y);
        for i in 0..n {
            inv[(i, j)] = x[i];
        }
    }
    inv.symmetrize();
    Ok(inv)
}

/// Non-decimated wavelet coefficients: one D-vector per (scale, shift).
#[derive(Debug, Clone)]
pub struct CoefficientField {
    num_scales: usize,
    len: usize,
    dim: usize,
    /// Layout: [scale][shift][channel].
    data: Vec<f64>,
}

impl CoefficientField {
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

    /// Coefficient vector d_{j,k} (1-based scale).
    #[inline]
    pub fn coef(&self, scale: usize, k: usize) -> &[f64] {
        let base = ((scale - 1) * self.len + k) * self.dim;
        &self.data[base..base + self.dim]
    }
}

/// Non-decimated wavelet transform of a panel with periodic boundary
/// treatment: d_{j,k} = Σ_t Z_t ψ_j((t - k) mod T).
pub fn ndwt(panel: &TimeSeriesPanel, system: &WaveletSystem) -> Result<CoefficientField> {
    let t_len = panel.len();
    let dim = panel.channels();
    let needed = 1usize << system.num_scales();
    if t_len < needed {
        return Err(Error::InsufficientLength {
            len: t_len,
            needed,
        });
    }
    if !panel.is_finite() {
        return Err(Error::InvalidData("panel contains non-finite values".into()));
    }

    let num_scales = system.num_scales();
    let mut data = vec![0.0; num_scales * t_len * dim];
    data.par_chunks_mut(t_len * dim)
        .enumerate()
        .for_each(|(j, block)| {
            let psi = &system.psi[j];
            for k in 0..t_len {
                let out = &mut block[k * dim..(k + 1) * dim];
                for (off, &w) in psi.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let src = panel.sample((k + off) % t_len);
                    for (o, &z) in out.iter_mut().zip(src) {
                        *o += w * z;
                    }
                }
            }
        });

    Ok(CoefficientField {
        num_scales,
        len: t_len,
        dim,
        data,
    })
}

/// Frequency band (Hz) approximately analysed by scale `j` at sampling
/// rate `fs`: [fs/2^(j+1), fs/2^j].
pub fn scale_to_band(scale: usize, fs: f64) -> (f64, f64) {
    assert!(scale >= 1, "scale must be at least 1");
    assert!(fs > 0.0, "sampling rate must be positive");
    let hi = fs * (2.0_f64).powi(-(scale as i32));
    (hi * 0.5, hi)
}

/// Decimated analysis pyramid: approximation at the coarsest level plus
/// detail coefficients per level, periodic boundary.
#[derive(Debug, Clone)]
pub struct Pyramid {
    /// a_J, length T / 2^J.
    pub approx: Vec<f64>,
    /// details[j-1] = d_j, length T / 2^j.
    pub details: Vec<Vec<f64>>,
}

/// Classic two-channel filter-bank recursion with downsampling by two:
/// `a_j[n] = Σ_k h[k] a_{j-1}[2n-k]`, `d_j[n] = Σ_k g[k] a_{j-1}[2n-k]`.
pub fn dwt_pyramid(signal: &[f64], system: &WaveletSystem) -> Result<Pyramid> {
    let levels = system.num_scales();
    let block = 1usize << levels;
    if signal.is_empty() || !signal.len().is_multiple_of(block) {
        return Err(Error::InvalidParameter(format!(
            "signal length {} is not a positive multiple of 2^{levels}",
            signal.len()
        )));
    }
    let h = &system.filter.lowpass;
    let g = &system.filter.highpass;
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let n = approx.len() / 2;
        let mut a = vec![0.0; n];
        let mut d = vec![0.0; n];
        let m = approx.len() as isize;
        for (out_idx, (av, dv)) in a.iter_mut().zip(d.iter_mut()).enumerate() {
            let mut sa = 0.0;
            let mut sd = 0.0;
            for (k, (&hk, &gk)) in h.iter().zip(g).enumerate() {
                let idx = (2 * out_idx as isize - k as isize).rem_euclid(m) as usize;
                let x = approx[idx];
                sa += hk * x;
                sd += gk * x;
            }
            *av = sa;
            *dv = sd;
        }
        details.push(d);
        approx = a;
    }
    Ok(Pyramid { approx, details })
}
