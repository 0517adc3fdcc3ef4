//! Comparison methods: classical time-domain canonical correlation at a
//! fixed lag, and a short-time Fourier estimate of band-averaged canonical
//! coherence for locally stationary signals.
//!
//! The Fourier path estimates a local spectral matrix per window center by
//! a detrended DFT outer product, smooths across neighboring centers with a
//! Gaussian kernel, averages the requested frequency band, and solves the
//! same whitened canonical problem as the wavelet path on the real part of
//! the band average.

use crate::cancoh::{self, CancohPoint};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::lws;
use crate::panel::TimeSeriesPanel;
use rayon::prelude::*;

/// Result of the time-domain canonical correlation at one lag.
#[derive(Debug, Clone)]
pub struct ClassicalCca {
    /// Unsquared canonical correlation, ρ = √λ.
    pub rho: f64,
    /// Largest eigenvalue λ of the canonical eigenproblem.
    pub lambda: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Sample covariance blocks at lag `tau`: auto blocks over the full record,
/// cross block the sample mean of x_t y_{t-tau}ᵀ after centering.
pub fn lagged_covariance_blocks(
    x: &TimeSeriesPanel,
    y: &TimeSeriesPanel,
    tau: i64,
) -> Result<(Mat, Mat, Mat)> {
    if x.len() != y.len() {
        return Err(Error::InvalidData(format!(
            "group lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let t_len = x.len();
    let (p, q) = (x.channels(), y.channels());
    let overlap = t_len as i64 - tau.abs();
    if overlap <= (p + q) as i64 {
        return Err(Error::InsufficientLength {
            len: t_len,
            needed: (p + q) + tau.unsigned_abs() as usize + 1,
        });
    }

    let mean = |panel: &TimeSeriesPanel| -> Vec<f64> {
        let mut m = vec![0.0; panel.channels()];
        for t in 0..panel.len() {
            for (acc, &v) in m.iter_mut().zip(panel.sample(t)) {
                *acc += v;
            }
        }
        m.iter().map(|v| v / panel.len() as f64).collect()
    };
    let mx = mean(x);
    let my = mean(y);

    let mut sxx = Mat::zeros(p, p);
    let mut syy = Mat::zeros(q, q);
    for t in 0..t_len {
        let xs = x.sample(t);
        let ys = y.sample(t);
        for i in 0..p {
            let xi = xs[i] - mx[i];
            for j in i..p {
                sxx[(i, j)] += xi * (xs[j] - mx[j]);
            }
        }
        for i in 0..q {
            let yi = ys[i] - my[i];
            for j in i..q {
                syy[(i, j)] += yi * (ys[j] - my[j]);
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            let v = sxx[(i, j)] / t_len as f64;
            sxx[(i, j)] = v;
            sxx[(j, i)] = v;
        }
    }
    for i in 0..q {
        for j in i..q {
            let v = syy[(i, j)] / t_len as f64;
            syy[(i, j)] = v;
            syy[(j, i)] = v;
        }
    }

    let mut sxy = Mat::zeros(p, q);
    let (t_lo, t_hi) = if tau >= 0 {
        (tau as usize, t_len)
    } else {
        (0, (t_len as i64 + tau) as usize)
    };
    for t in t_lo..t_hi {
        let xs = x.sample(t);
        let ys = y.sample((t as i64 - tau) as usize);
        for i in 0..p {
            let xi = xs[i] - mx[i];
            for j in 0..q {
                sxy[(i, j)] += xi * (ys[j] - my[j]);
            }
        }
    }
    let n = (t_hi - t_lo) as f64;
    for v in 0..p {
        for w in 0..q {
            sxy[(v, w)] /= n;
        }
    }
    Ok((sxx, sxy, syy))
}

/// Classical canonical correlation between X_t and Y_{t-tau}; ρ = √λ with
/// λ the largest canonical eigenvalue of the sample covariance blocks.
pub fn classical_cca(x: &TimeSeriesPanel, y: &TimeSeriesPanel, tau: i64) -> Result<ClassicalCca> {
    let (sxx, sxy, syy) = lagged_covariance_blocks(x, y, tau)?;
    let floor = |m: &Mat| -> Mat {
        let d = m.rows();
        let scale = (0..d).map(|i| m[(i, i)].abs()).sum::<f64>() / d as f64;
        lws::regularize_matrix(m, 1e-8 * scale).0
    };
    let sxx = floor(&sxx);
    let syy = floor(&syy);
    let point = cancoh::cancoh_at(&sxx, &sxy, &sxy.transpose(), &syy)?;
    let lambda = point.rho_raw.clamp(0.0, 1.0);
    Ok(ClassicalCca {
        rho: lambda.sqrt(),
        lambda: point.rho_raw,
        a: point.a,
        b: point.b,
    })
}

/// Short-time Fourier parameters. `gaussian_sigma` is the width, in
/// samples, of the kernel that smooths spectra across window centers.
#[derive(Debug, Clone)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub gaussian_sigma: f64,
    pub fs: f64,
    /// Time of sample 0 in seconds.
    pub origin: f64,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_len: 128,
            hop: 8,
            gaussian_sigma: 128.0 / 6.0,
            fs: 1.0,
            origin: 0.0,
        }
    }
}

impl StftConfig {
    pub fn validate(&self, panel_len: usize) -> Result<()> {
        if self.window_len < 2 || self.window_len > panel_len {
            return Err(Error::InvalidParameter(format!(
                "window length {} invalid for series of length {panel_len}",
                self.window_len
            )));
        }
        if self.hop == 0 {
            return Err(Error::InvalidParameter("hop must be at least 1".into()));
        }
        if self.gaussian_sigma <= 0.0 {
            return Err(Error::InvalidParameter("kernel width must be positive".into()));
        }
        if self.fs <= 0.0 {
            return Err(Error::InvalidParameter("sampling rate must be positive".into()));
        }
        Ok(())
    }
}

/// Local spectral matrix field on a (window center) × (frequency bin) grid.
/// Each matrix is Hermitian: real part symmetric, imaginary antisymmetric.
#[derive(Debug, Clone)]
pub struct LocalSpectrum {
    pub centers: Vec<usize>,
    /// One-sided bin centers in Hz, 0..=fs/2.
    pub freqs: Vec<f64>,
    pub dim: usize,
    pub config: StftConfig,
    /// Layout: [center][bin][i*dim + j].
    re: Vec<f64>,
    im: Vec<f64>,
}

impl LocalSpectrum {
    fn idx(&self, c: usize, b: usize) -> usize {
        (c * self.freqs.len() + b) * self.dim * self.dim
    }

    /// Real part of f̂(center, bin) as a dense matrix.
    pub fn real_part(&self, c: usize, b: usize) -> Mat {
        let base = self.idx(c, b);
        Mat::from_vec(
            self.dim,
            self.dim,
            self.re[base..base + self.dim * self.dim].to_vec(),
        )
    }

    pub fn imag_part(&self, c: usize, b: usize) -> Mat {
        let base = self.idx(c, b);
        Mat::from_vec(
            self.dim,
            self.dim,
            self.im[base..base + self.dim * self.dim].to_vec(),
        )
    }

    /// Power of one channel at (center, bin).
    pub fn power(&self, c: usize, b: usize, ch: usize) -> f64 {
        self.re[self.idx(c, b) + ch * self.dim + ch]
    }
}

/// Estimate the local spectral matrix field: per center a detrended DFT
/// outer product scaled to one-sided density (integrating over Hz and
/// averaging centers returns the sample variance), then Gaussian smoothing
/// across centers.
pub fn stft_spectrum(panel: &TimeSeriesPanel, config: &StftConfig) -> Result<LocalSpectrum> {
    config.validate(panel.len())?;
    if !panel.is_finite() {
        return Err(Error::InvalidData("panel contains non-finite values".into()));
    }
    let w = config.window_len;
    let t_len = panel.len();
    let dim = panel.channels();
    let centers: Vec<usize> = (0..)
        .map(|i| i * config.hop)
        .take_while(|s| s + w <= t_len)
        .map(|s| s + w / 2)
        .collect();
    if centers.is_empty() {
        return Err(Error::InvalidParameter(
            "window does not fit in the series".into(),
        ));
    }
    let bins = w / 2 + 1;
    let freqs: Vec<f64> = (0..bins).map(|b| b as f64 * config.fs / w as f64).collect();

    // twiddle table for the direct DFT: e^{-2πi n b / w} indexed by (n b) mod w
    let table: Vec<(f64, f64)> = (0..w)
        .map(|r| {
            let ang = -2.0 * std::f64::consts::PI * r as f64 / w as f64;
            (ang.cos(), ang.sin())
        })
        .collect();

    let nmat = dim * dim;
    let raw: Vec<(Vec<f64>, Vec<f64>)> = centers
        .par_iter()
        .map(|&center| {
            let start = center - w / 2;
            // detrended windowed channels
            let mut seg = vec![0.0; dim * w];
            for ch in 0..dim {
                let mut mean = 0.0;
                for n in 0..w {
                    mean += panel.get(start + n, ch);
                }
                mean /= w as f64;
                for n in 0..w {
                    seg[ch * w + n] = panel.get(start + n, ch) - mean;
                }
            }
            // DFT per channel, one-sided bins
            let mut coef_re = vec![0.0; dim * bins];
            let mut coef_im = vec![0.0; dim * bins];
            for ch in 0..dim {
                for b in 0..bins {
                    let (mut re, mut im) = (0.0, 0.0);
                    for n in 0..w {
                        let (c, s) = table[(n * b) % w];
                        let v = seg[ch * w + n];
                        re += v * c;
                        im += v * s;
                    }
                    coef_re[ch * bins + b] = re;
                    coef_im[ch * bins + b] = im;
                }
            }
            // cross outer products scaled to one-sided density
            let mut re = vec![0.0; bins * nmat];
            let mut im = vec![0.0; bins * nmat];
            for b in 0..bins {
                let sided = if b == 0 || (w.is_multiple_of(2) && b == bins - 1) {
                    1.0
                } else {
                    2.0
                };
                let norm = sided / (w as f64 * config.fs);
                for i in 0..dim {
                    let (ri, ii) = (coef_re[i * bins + b], coef_im[i * bins + b]);
                    for j in 0..dim {
                        let (rj, ij) = (coef_re[j * bins + b], coef_im[j * bins + b]);
                        // X_i * conj(X_j)
                        re[b * nmat + i * dim + j] = norm * (ri * rj + ii * ij);
                        im[b * nmat + i * dim + j] = norm * (ii * rj - ri * ij);
                    }
                }
            }
            (re, im)
        })
        .collect();

    // Gaussian smoothing across centers, truncated at 4 sigma
    let sigma = config.gaussian_sigma;
    let reach = ((4.0 * sigma / config.hop as f64).ceil() as usize).max(1);
    let n_centers = centers.len();
    let mut re = vec![0.0; n_centers * bins * nmat];
    let mut im = vec![0.0; n_centers * bins * nmat];
    re.par_chunks_mut(bins * nmat)
        .zip(im.par_chunks_mut(bins * nmat))
        .enumerate()
        .for_each(|(c, (re_out, im_out))| {
            let lo = c.saturating_sub(reach);
            let hi = (c + reach).min(n_centers - 1);
            let mut wsum = 0.0;
            for other in lo..=hi {
                let d = (other as f64 - c as f64) * config.hop as f64;
                let wgt = (-0.5 * d * d / (sigma * sigma)).exp();
                wsum += wgt;
                for (o, &v) in re_out.iter_mut().zip(&raw[other].0) {
                    *o += wgt * v;
                }
                for (o, &v) in im_out.iter_mut().zip(&raw[other].1) {
                    *o += wgt * v;
                }
            }
            for v in re_out.iter_mut() {
                *v /= wsum;
            }
            for v in im_out.iter_mut() {
                *v /= wsum;
            }
        });

    Ok(LocalSpectrum {
        centers,
        freqs,
        dim,
        config: config.clone(),
        re,
        im,
    })
}

/// Band-averaged canonical coherence curve from the Fourier path.
#[derive(Debug, Clone)]
pub struct BandCohCurve {
    pub band: (f64, f64),
    /// Window-center sample indices.
    pub centers: Vec<usize>,
    /// Length of the analysed record (u = center / source_len).
    pub source_len: usize,
    pub p: usize,
    pub q: usize,
    pub points: Vec<CancohPoint>,
    pub stft: StftConfig,
    pub config_hash: String,
}

impl BandCohCurve {
    pub fn rho_curve(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rho).collect()
    }

    pub fn rescaled_time(&self, idx: usize) -> f64 {
        self.centers[idx] as f64 / self.source_len as f64
    }
}

/// Canonical coherence of the band-averaged local spectrum: average the
/// Hermitian matrices over bins inside [lo, hi] Hz, keep the real part, and
/// solve the whitened canonical problem per center.
pub fn lsp_cancoh(
    x: &TimeSeriesPanel,
    y: &TimeSeriesPanel,
    band: (f64, f64),
    config: &StftConfig,
) -> Result<BandCohCurve> {
    let (lo, hi) = band;
    if !(0.0 < lo && lo < hi && hi <= config.fs / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "band [{lo}, {hi}] Hz invalid for fs = {}",
            config.fs
        )));
    }
    let joint = TimeSeriesPanel::fuse(x, y)?;
    let spectrum = stft_spectrum(&joint, config)?;
    let band_bins: Vec<usize> = spectrum
        .freqs
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= lo && f <= hi)
        .map(|(b, _)| b)
        .collect();
    if band_bins.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no frequency bins inside [{lo}, {hi}] Hz"
        )));
    }
    let p = x.channels();
    let dim = joint.channels();
    let points: Vec<CancohPoint> = (0..spectrum.centers.len())
        .into_par_iter()
        .map(|c| {
            let mut avg = Mat::zeros(dim, dim);
            for &b in &band_bins {
                let m = spectrum.real_part(c, b);
                for i in 0..dim {
                    for j in 0..dim {
                        avg[(i, j)] += m[(i, j)] / band_bins.len() as f64;
                    }
                }
            }
            avg.symmetrize();
            let scale = (0..dim).map(|i| avg[(i, i)].abs()).sum::<f64>() / dim as f64;
            let (reg, floored) = lws::regularize_matrix(&avg, 1e-8 * scale);
            let (sxx, sxy, syx, syy) = lws::partition(&reg, p)?;
            let mut point = cancoh::cancoh_at(&sxx, &sxy, &syx, &syy).map_err(|e| {
                Error::Conditioning {
                    scale: 0,
                    k: spectrum.centers[c],
                    detail: e.to_string(),
                }
            })?;
            point.flags.floored = floored;
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;

    let config_hash = crate::rng::fnv64_hex(&format!(
        "lsp;band={lo:e}:{hi:e};w={};hop={};sigma={:e};fs={:e};p={p};q={};T={}",
        config.window_len,
        config.hop,
        config.gaussian_sigma,
        config.fs,
        dim - p,
        joint.len()
    ));

    Ok(BandCohCurve {
        band,
        centers: spectrum.centers.clone(),
        source_len: joint.len(),
        p,
        q: dim - p,
        points,
        stft: config.clone(),
        config_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn random_panel(rng: &mut CounterRng, len: usize, dim: usize) -> TimeSeriesPanel {
        let mut p = TimeSeriesPanel::zeros(len, dim, dim);
        for t in 0..len {
            for ch in 0..dim {
                p.set(t, ch, rng.standard_normal());
            }
        }
        p
    }

    #[test]
    fn classical_identical_groups() {
        let mut rng = CounterRng::new(1);
        let x = random_panel(&mut rng, 512, 3);
        let r = classical_cca(&x, &x, 0).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-8, "rho {}", r.rho);
    }

    #[test]
    fn classical_matches_block_solver() {
        // the time-domain path must agree with the canonical solver applied
        // to the same covariance blocks: λ within 1e-10, ρ = √λ
        let mut rng = CounterRng::new(5);
        let x = random_panel(&mut rng, 600, 3);
        let y = random_panel(&mut rng, 600, 2);
        let r = classical_cca(&x, &y, 3).unwrap();
        let (sxx, sxy, syy) = lagged_covariance_blocks(&x, &y, 3).unwrap();
        let direct = cancoh::direct_eigenvalue(&sxx, &sxy, &syy).unwrap();
        assert!((r.lambda - direct).abs() < 1e-10);
        assert!((r.rho - direct.max(0.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn classical_null_level() {
        let seeds = 50;
        let mut mean = 0.0;
        for seed in 0..seeds {
            let mut rng = CounterRng::substream(2211, &[seed]);
            let x = random_panel(&mut rng, 4096, 3);
            let y = random_panel(&mut rng, 4096, 2);
            mean += classical_cca(&x, &y, 0).unwrap().rho;
        }
        mean /= seeds as f64;
        assert!(mean < 0.3, "null rho {mean}");
    }

    #[test]
    fn classical_scalar_correlation() {
        let r_true = 0.6;
        let len = 8192;
        let mut rng = CounterRng::new(99);
        let mut x = TimeSeriesPanel::zeros(len, 1, 1);
        let mut y = TimeSeriesPanel::zeros(len, 1, 1);
        for t in 0..len {
            let u = rng.standard_normal();
            let e = rng.standard_normal();
            x.set(t, 0, u);
            y.set(t, 0, r_true * u + (1.0 - r_true * r_true).sqrt() * e);
        }
        let r = classical_cca(&x, &y, 0).unwrap();
        assert!((r.rho - r_true).abs() < 0.05, "rho {}", r.rho);
    }

    #[test]
    fn classical_too_short() {
        let x = TimeSeriesPanel::zeros(8, 4, 4);
        let y = TimeSeriesPanel::zeros(8, 4, 4);
        assert!(matches!(
            classical_cca(&x, &y, 2),
            Err(Error::InsufficientLength { .. })
        ));
    }

    #[test]
    fn stft_sinusoid_peaks_at_bin() {
        let len = 1024;
        let fs = 128.0;
        let f0 = 24.0;
        let mut panel = TimeSeriesPanel::zeros(len, 2, 1);
        for t in 0..len {
            let ph = 2.0 * std::f64::consts::PI * f0 * t as f64 / fs;
            panel.set(t, 0, ph.sin());
            panel.set(t, 1, 0.3 * (0.5 * ph).cos());
        }
        let config = StftConfig {
            fs,
            ..StftConfig::default()
        };
        let spec = stft_spectrum(&panel, &config).unwrap();
        let c = spec.centers.len() / 2;
        let best = (0..spec.freqs.len())
            .max_by(|&a, &b| {
                spec.power(c, a, 0)
                    .partial_cmp(&spec.power(c, b, 0))
                    .unwrap()
            })
            .unwrap();
        let df = fs / config.window_len as f64;
        assert!(
            (spec.freqs[best] - f0).abs() <= df / 2.0 + 1e-12,
            "peak at {} Hz",
            spec.freqs[best]
        );
    }

    #[test]
    fn stft_zero_panel_is_zero() {
        let panel = TimeSeriesPanel::zeros(512, 2, 1);
        let spec = stft_spectrum(&panel, &StftConfig::default()).unwrap();
        assert!(spec.re.iter().all(|&v| v == 0.0));
        assert!(spec.im.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stft_white_noise_is_flat() {
        let seeds = 20;
        let len = 8192;
        let config = StftConfig::default();
        let bins = config.window_len / 2 + 1;
        let mut band_power = vec![0.0; bins];
        for seed in 0..seeds {
            let mut rng = CounterRng::substream(414, &[seed]);
            let panel = random_panel(&mut rng, len, 1);
            let spec = stft_spectrum(&panel, &config).unwrap();
            for b in 0..bins {
                let mut acc = 0.0;
                for c in 0..spec.centers.len() {
                    acc += spec.power(c, b, 0);
                }
                band_power[b] += acc / spec.centers.len() as f64;
            }
        }
        // skip DC and Nyquist: detrending empties DC
        let interior = &band_power[1..bins - 1];
        let max = interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = interior.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 2.0, "flatness ratio {}", max / min);
    }

    #[test]
    fn stft_parseval() {
        let mut rng = CounterRng::new(7);
        let len = 8192;
        let panel = random_panel(&mut rng, len, 2);
        let config = StftConfig::default();
        let spec = stft_spectrum(&panel, &config).unwrap();
        let df = config.fs / config.window_len as f64;
        for ch in 0..2 {
            let mut total = 0.0;
            for c in 0..spec.centers.len() {
                for b in 0..spec.freqs.len() {
                    total += spec.power(c, b, ch) * df;
                }
            }
            total /= spec.centers.len() as f64;
            let series = panel.channel(ch);
            let mean = series.iter().sum::<f64>() / len as f64;
            let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64;
            assert!(
                (total - var).abs() / var < 0.10,
                "ch {ch}: integrated {total} vs variance {var}"
            );
        }
    }

    #[test]
    fn stft_invalid_parameters() {
        let panel = TimeSeriesPanel::zeros(64, 1, 1);
        let bad = StftConfig {
            window_len: 128,
            ..StftConfig::default()
        };
        assert!(stft_spectrum(&panel, &bad).is_err());
        let bad = StftConfig {
            hop: 0,
            window_len: 32,
            ..StftConfig::default()
        };
        assert!(stft_spectrum(&panel, &bad).is_err());
    }

    #[test]
    fn lsp_copy_is_coherent() {
        let mut rng = CounterRng::new(31);
        let x = random_panel(&mut rng, 2048, 2);
        let config = StftConfig {
            fs: 100.0,
            ..StftConfig::default()
        };
        let curve = lsp_cancoh(&x, &x, (25.0, 50.0), &config).unwrap();
        let n = curve.points.len();
        for pt in &curve.points[n / 10..n - n / 10] {
            assert!(pt.rho >= 0.99, "rho {}", pt.rho);
        }
    }

    #[test]
    fn lsp_null_below_envelope() {
        let config = StftConfig {
            fs: 100.0,
            ..StftConfig::default()
        };
        let band = (25.0, 50.0);
        let len = 2048;
        let null_means: Vec<f64> = (0..50u64)
            .map(|seed| {
                let mut rng = CounterRng::substream(660, &[seed]);
                let x = random_panel(&mut rng, len, 2);
                let y = random_panel(&mut rng, len, 2);
                let curve = lsp_cancoh(&x, &y, band, &config).unwrap();
                let rho = curve.rho_curve();
                rho.iter().sum::<f64>() / rho.len() as f64
            })
            .collect();
        let mut sorted = null_means.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let envelope = sorted[(0.95 * sorted.len() as f64) as usize];
        let mut rng = CounterRng::substream(661, &[0]);
        let x = random_panel(&mut rng, len, 2);
        let y = random_panel(&mut rng, len, 2);
        let curve = lsp_cancoh(&x, &y, band, &config).unwrap();
        let fresh = curve.rho_curve().iter().sum::<f64>() / curve.points.len() as f64;
        assert!(
            fresh <= envelope,
            "fresh null mean {fresh} above envelope {envelope}"
        );
    }

    #[test]
    fn lsp_rejects_bad_band() {
        let x = TimeSeriesPanel::zeros(512, 1, 1);
        let y = TimeSeriesPanel::zeros(512, 1, 1);
        let config = StftConfig {
            fs: 100.0,
            ..StftConfig::default()
        };
        assert!(lsp_cancoh(&x, &y, (60.0, 40.0), &config).is_err());
        assert!(lsp_cancoh(&x, &y, (0.0, 10.0), &config).is_err());
        assert!(lsp_cancoh(&x, &y, (10.0, 80.0), &config).is_err());
    }
}
