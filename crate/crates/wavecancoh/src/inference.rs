//! Inference across replicate or trial collections: Wald confidence bands
//! for averaged coherence curves, and a windowed permutation test that
//! compares across-trial medians between two conditions at chosen probe
//! times, relabelling whole trials to preserve within-trial dependence.

use crate::cancoh::CancohField;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Inverse standard normal CDF (Acklam's rational approximation, absolute
/// error below 1.2e-9 on (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument must be in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Lower median: for an even count the smaller of the two central order
/// statistics, so the result is always an observed value.
pub fn lower_median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[(values.len() - 1) / 2]
}

/// Trials of one experimental condition sharing grid and configuration.
#[derive(Debug, Clone)]
pub struct TrialCollection {
    trials: Vec<CancohField>,
    pub label: String,
}

impl TrialCollection {
    pub fn new(trials: Vec<CancohField>, label: impl Into<String>) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::InvalidParameter("empty trial collection".into()));
        }
        let first = &trials[0].meta;
        for (i, t) in trials.iter().enumerate().skip(1) {
            if t.meta.config_hash != first.config_hash
                || t.meta.len != first.len
                || t.meta.scales != first.scales
            {
                return Err(Error::InvalidParameter(format!(
                    "trial {i} has a different grid or configuration"
                )));
            }
        }
        Ok(TrialCollection {
            trials,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn trials(&self) -> &[CancohField] {
        &self.trials
    }

    pub fn grid_len(&self) -> usize {
        self.trials[0].meta.len
    }

    pub fn time_seconds(&self, k: usize) -> f64 {
        self.trials[0].meta.time_seconds(k)
    }

    /// rho values per trial (rows) at one scale.
    fn rho_rows(&self, scale: usize) -> Vec<Vec<f64>> {
        self.trials.iter().map(|t| t.rho_curve(scale)).collect()
    }
}

/// One point of a Wald band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaldPoint {
    pub k: usize,
    pub u: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Pointwise mean ± z · (empirical sd / √R) across trials at one scale.
pub fn wald_band(collection: &TrialCollection, scale: usize, level: f64) -> Result<Vec<WaldPoint>> {
    if collection.len() < 2 {
        return Err(Error::InvalidParameter(
            "Wald band needs at least two trials".into(),
        ));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let rows = collection.rho_rows(scale);
    let r = rows.len() as f64;
    let z = normal_quantile(0.5 + level / 2.0);
    let len = collection.grid_len();
    let meta = &collection.trials[0].meta;
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let mean = rows.iter().map(|row| row[k]).sum::<f64>() / r;
        let ss = rows
            .iter()
            .map(|row| (row[k] - mean) * (row[k] - mean))
            .sum::<f64>();
        let sd = (ss / (r - 1.0)).sqrt();
        let half = z * sd / r.sqrt();
        out.push(WaldPoint {
            k,
            u: meta.rescaled_time(k),
            mean,
            lo: mean - half,
            hi: mean + half,
        });
    }
    Ok(out)
}

/// Windowed permutation test report at one (scale, probe time).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermTestReport {
    pub scale: usize,
    /// Probe time in seconds, relative to the declared time origin.
    pub t_star: f64,
    /// Window width in seconds, centered on `t_star`, endpoints inclusive.
    pub window: f64,
    pub n_perm: usize,
    pub t_obs: f64,
    /// Difference of across-trial medians at the grid point nearest
    /// `t_star` (first group minus second).
    pub median_diff: f64,
    pub perm_stats: Vec<f64>,
    /// Proportion of permuted statistics at least as large as `t_obs`.
    pub p_value: f64,
    pub seed: u64,
}

impl PermTestReport {
    /// Finite-sample corrected variant (count+1)/(n_perm+1); the default
    /// `p_value` follows the plain counting formula.
    pub fn p_value_corrected(&self) -> f64 {
        let count = self
            .perm_stats
            .iter()
            .filter(|&&t| t >= self.t_obs)
            .count();
        (count + 1) as f64 / (self.n_perm + 1) as f64
    }
}

fn window_indices(collection: &TrialCollection, t_star: f64, window: f64) -> Result<Vec<usize>> {
    let len = collection.grid_len();
    let t_start = t_star - window / 2.0;
    let t_end = t_star + window / 2.0;
    if t_start < collection.time_seconds(0) - 1e-12
        || t_end > collection.time_seconds(len - 1) + 1e-12
    {
        return Err(Error::InvalidParameter(format!(
            "window [{t_start}, {t_end}] s falls outside the grid [{}, {}] s",
            collection.time_seconds(0),
            collection.time_seconds(len - 1)
        )));
    }
    let idx: Vec<usize> = (0..len)
        .filter(|&k| {
            let t = collection.time_seconds(k);
            t >= t_start - 1e-12 && t <= t_end + 1e-12
        })
        .collect();
    if idx.is_empty() {
        return Err(Error::InvalidParameter(
            "no grid points inside the probe window".into(),
        ));
    }
    Ok(idx)
}

fn median_curve(rows: &[&[f64]], cols: &[usize]) -> Vec<f64> {
    let mut buf = vec![0.0; rows.len()];
    cols.iter()
        .map(|&k| {
            for (b, row) in buf.iter_mut().zip(rows) {
                *b = row[k];
            }
            lower_median(&mut buf)
        })
        .collect()
}

fn stat_from(rows_a: &[&[f64]], rows_b: &[&[f64]], cols: &[usize]) -> f64 {
    let ma = median_curve(rows_a, cols);
    let mb = median_curve(rows_b, cols);
    ma.iter().zip(&mb).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Squared difference of across-trial medians summed over the probe
/// window, referenced against `n_perm` whole-trial relabelings of the
/// original group sizes. Deterministic in `seed` under any parallelism.
pub fn perm_test(
    group_a: &TrialCollection,
    group_b: &TrialCollection,
    scale: usize,
    t_star: f64,
    window: f64,
    n_perm: usize,
    seed: u64,
) -> Result<PermTestReport> {
    if n_perm == 0 {
        return Err(Error::InvalidParameter("n_perm must be at least 1".into()));
    }
    if group_a.trials[0].meta.config_hash != group_b.trials[0].meta.config_hash
        || group_a.grid_len() != group_b.grid_len()
    {
        return Err(Error::InvalidParameter(
            "conditions were estimated on different grids or configurations".into(),
        ));
    }
    let cols = window_indices(group_a, t_star, window)?;

    let rows_a_own = group_a.rho_rows(scale);
    let rows_b_own = group_b.rho_rows(scale);
    let rows_a: Vec<&[f64]> = rows_a_own.iter().map(|r| r.as_slice()).collect();
    let rows_b: Vec<&[f64]> = rows_b_own.iter().map(|r| r.as_slice()).collect();
    let t_obs = stat_from(&rows_a, &rows_b, &cols);

    // median difference at the grid point nearest the probe itself
    let probe_k = (0..group_a.grid_len())
        .min_by(|&i, &j| {
            let di = (group_a.time_seconds(i) - t_star).abs();
            let dj = (group_a.time_seconds(j) - t_star).abs();
            di.partial_cmp(&dj).unwrap()
        })
        .unwrap();
    let median_diff = median_curve(&rows_a, &[probe_k])[0] - median_curve(&rows_b, &[probe_k])[0];

    let pool: Vec<&[f64]> = rows_a.iter().chain(rows_b.iter()).copied().collect();
    let n_a = rows_a.len();
    let perm_stats: Vec<f64> = (0..n_perm)
        .into_par_iter()
        .map(|i| {
            let mut order: Vec<usize> = (0..pool.len()).collect();
            let mut rng = CounterRng::substream(seed, &[i as u64]);
            rng.shuffle(&mut order);
            let ga: Vec<&[f64]> = order[..n_a].iter().map(|&idx| pool[idx]).collect();
            let gb: Vec<&[f64]> = order[n_a..].iter().map(|&idx| pool[idx]).collect();
            stat_from(&ga, &gb, &cols)
        })
        .collect();

    let count = perm_stats.iter().filter(|&&t| t >= t_obs).count();
    Ok(PermTestReport {
        scale,
        t_star,
        window,
        n_perm,
        t_obs,
        median_diff,
        p_value: count as f64 / n_perm as f64,
        perm_stats,
        seed,
    })
}
