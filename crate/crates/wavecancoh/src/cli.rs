//! Command-line front end: simulation, estimation, permutation testing and
//! built-in replication experiments, all file based and reproducible from
//! an explicit seed.
//!
//! Exit codes: 0 success, 2 usage, 3 input parse, 4 validation,
//! 5 numerical, 6 i/o. Worker count can be fixed with the
//! `WAVECANCOH_WORKERS` environment variable.

use crate::baseline::{lsp_cancoh, StftConfig};
use crate::cancoh::{self, causal_wavecancoh, CancohConfig, CancohField};
use crate::error::{Error, Result};
use crate::inference::{perm_test, wald_band, TrialCollection};
use crate::io;
use crate::lws;
use crate::panel::TimeSeriesPanel;
use crate::rng;
use crate::simulate::{self, Ar2MixtureSpec, LwsSpec};
use crate::wavelets::{self, WaveletFamily, WaveletSystem};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const TAG_REPLICATE: u64 = 0x10;
const TAG_CELL: u64 = 0x11;

#[derive(Parser, Debug)]
#[command(
    name = "wavecancoh",
    version,
    about = "Time-varying, scale-specific canonical coherence between two groups of multivariate time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic panels with known population coherence
    Simulate {
        #[command(subcommand)]
        generator: Generator,
    },
    /// Estimate a coherence field from a panel CSV
    Estimate(EstimateArgs),
    /// Windowed trial-permutation test between two conditions
    Permtest(PermtestArgs),
    /// Run a built-in simulate-estimate-aggregate experiment
    Replicate(ReplicateArgs),
}

#[derive(Subcommand, Debug)]
enum Generator {
    /// Wavelet-domain process with piecewise-constant spectra
    Mvlsw(MvlswArgs),
    /// Two-group AR(2) mixture with a shared band in the first half
    Ar2mix(Ar2Args),
}

#[derive(Args, Debug)]
struct MvlswArgs {
    /// Built-in specification identifier (`c1`)
    #[arg(long, conflicts_with = "spec")]
    builtin: Option<String>,
    /// User specification JSON
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Record length
    #[arg(long = "T")]
    len: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Sampling rate recorded in the manifest (Hz)
    #[arg(long, default_value_t = 1.0)]
    fs: f64,
    /// Time of sample 0 in seconds
    #[arg(long, default_value_t = 0.0)]
    origin: f64,
}

#[derive(Args, Debug)]
struct Ar2Args {
    /// User specification JSON (defaults to the built-in mixture)
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "T")]
    len: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Override the spec's sampling rate in the manifest (Hz)
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    origin: f64,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Panel CSV (`t,ch_1,..,ch_D`)
    #[arg(long)]
    input: PathBuf,
    /// Manifest JSON supplying split/fs/origin
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Channels in group X; required unless a manifest is given
    #[arg(long)]
    split: Option<usize>,
    #[arg(long, default_value = "haar")]
    family: String,
    /// Scales in the wavelet system (default floor(log2 T), max 14)
    #[arg(long)]
    levels: Option<usize>,
    /// Rectangular smoothing half-width (default ceil(T^0.7 / 2))
    #[arg(long = "half-width")]
    half_width: Option<usize>,
    #[arg(long = "epsilon-rel", default_value_t = 1e-8)]
    epsilon_rel: f64,
    /// Scales to evaluate, comma separated (default: all with 2^j <= T/8)
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<usize>>,
    /// Lead of group Y over group X in samples
    #[arg(long, default_value_t = 0)]
    lag: usize,
    /// `xy` scores X leading Y; `yx` swaps the groups
    #[arg(long, default_value = "xy")]
    direction: String,
    /// `wavecancoh` or `lsp`
    #[arg(long, default_value = "wavecancoh")]
    method: String,
    /// Frequency band `lo:hi` in Hz (lsp only)
    #[arg(long)]
    band: Option<String>,
    /// STFT window length (lsp only)
    #[arg(long, default_value_t = 128)]
    window: usize,
    /// STFT hop in samples (lsp only)
    #[arg(long, default_value_t = 8)]
    hop: usize,
    /// Gaussian smoothing width in samples (lsp only; default window/6)
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long)]
    origin: Option<f64>,
    /// Output CSV path (metadata sidecar written next to it)
    #[arg(long)]
    out: PathBuf,
    /// Also dump the corrected spectral field to this CSV
    #[arg(long = "dump-lws")]
    dump_lws: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PermtestArgs {
    /// Directory of condition-A coherence fields
    #[arg(long = "group-a")]
    group_a: PathBuf,
    /// Directory of condition-B coherence fields
    #[arg(long = "group-b")]
    group_b: PathBuf,
    /// Scales to test (default: every scale present in the fields)
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<usize>>,
    /// Probe times in seconds, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    probes: Vec<f64>,
    /// Window width in seconds
    #[arg(long)]
    window: f64,
    #[arg(long = "n-perm", default_value_t = 1000)]
    n_perm: usize,
    #[arg(long)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Include the full permutation distribution in each report
    #[arg(long = "full-dist")]
    full_dist: bool,
    /// Use the (count+1)/(n+1) p-value in the summary table
    #[arg(long)]
    corrected: bool,
}

#[derive(Args, Debug)]
struct ReplicateArgs {
    /// `fig2-left`, `fig2-right` or `causal-sweep`
    experiment: String,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "T")]
    len: Option<usize>,
    /// Smoothing half-width override
    #[arg(long = "half-width")]
    half_width: Option<usize>,
    /// Lags for the causal sweep, comma separated
    #[arg(long, value_delimiter = ',')]
    lags: Option<Vec<usize>>,
    #[arg(long)]
    out: PathBuf,
}

/// Parse and run; returns the process exit code.
pub fn main_entry<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    init_workers();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (including --help/--version)
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_workers() {
    if let Ok(v) = std::env::var("WAVECANCOH_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { generator } => match generator {
            Generator::Mvlsw(args) => cmd_simulate_mvlsw(args),
            Generator::Ar2mix(args) => cmd_simulate_ar2(args),
        },
        Command::Estimate(args) => cmd_estimate(args),
        Command::Permtest(args) => cmd_permtest(args),
        Command::Replicate(args) => cmd_replicate(args),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn parse_band(spec: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "band must be `lo:hi` in Hz, got `{spec}`"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad band edge `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad band edge `{}`", parts[1])))?;
    Ok((lo, hi))
}

fn replicate_seed(master: u64, index: usize) -> u64 {
    rng::derive(master, &[TAG_REPLICATE, index as u64])
}

fn cmd_simulate_mvlsw(args: MvlswArgs) -> Result<()> {
    let (spec, spec_id) = match (&args.builtin, &args.spec) {
        (Some(name), None) => match name.as_str() {
            "c1" => (LwsSpec::builtin_c1(), "c1".to_string()),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown builtin spec `{other}` (available: c1)"
                )))
            }
        },
        (None, Some(path)) => {
            let file: io::LwsSpecFile = io::read_json(path)?;
            (file.into_spec()?, format!("file:{}", path.display()))
        }
        (None, None) => (LwsSpec::builtin_c1(), "c1".to_string()),
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    };
    if args.reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    ensure_dir(&args.out)?;
    let system = WaveletSystem::new(WaveletFamily::Haar, spec.num_scales())?;
    let (p, q) = spec.group_sizes();

    let mut change_points: Vec<f64> = (1..=spec.num_scales())
        .flat_map(|j| {
            spec.scale_pieces(j)
                .pieces()
                .map(|(start, _)| start)
                .filter(|&s| s > 0.0)
                .collect::<Vec<_>>()
        })
        .collect();
    change_points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    change_points.dedup();

    let panels: Vec<(String, u64, TimeSeriesPanel)> = (0..args.reps)
        .into_par_iter()
        .map(|i| {
            let seed = replicate_seed(args.seed, i);
            let r = simulate::simulate_mvlsw(&spec, args.len, &system, seed)?;
            Ok((format!("panel_{i:04}.csv"), seed, r.panel))
        })
        .collect::<Result<Vec<_>>>()?;
    for (file, _, panel) in &panels {
        io::write_panel_csv(&args.out.join(file), panel)?;
    }

    let manifest = io::PanelManifest {
        kind: "panel-batch".into(),
        spec: spec_id.clone(),
        p,
        q,
        len: args.len,
        fs: args.fs,
        origin: args.origin,
        master_seed: args.seed,
        change_points,
        config_hash: rng::fnv64_hex(&format!(
            "simulate-mvlsw;spec={spec_id};T={};fs={:e};origin={:e};seed={};reps={}",
            args.len, args.fs, args.origin, args.seed, args.reps
        )),
        replicates: panels
            .iter()
            .map(|(file, seed, _)| io::ReplicateEntry {
                file: file.clone(),
                seed: *seed,
            })
            .collect(),
    };
    io::write_json(&args.out.join("manifest.json"), &manifest)?;
    println!(
        "wrote {} panel(s) of {} channels x {} samples to {}",
        args.reps,
        p + q,
        args.len,
        args.out.display()
    );
    Ok(())
}

fn cmd_simulate_ar2(args: Ar2Args) -> Result<()> {
    let (spec, spec_id) = match &args.spec {
        Some(path) => {
            let file: io::Ar2SpecFile = io::read_json(path)?;
            (file.into_spec()?, format!("file:{}", path.display()))
        }
        None => (Ar2MixtureSpec::builtin(), "ar2mix".to_string()),
    };
    if args.reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    ensure_dir(&args.out)?;
    let fs = args.fs.unwrap_or(spec.fs);
    let (p, q) = spec.group_sizes();

    let panels: Vec<(String, u64, TimeSeriesPanel)> = (0..args.reps)
        .into_par_iter()
        .map(|i| {
            let seed = replicate_seed(args.seed, i);
            let (x, y) = simulate::simulate_ar2_mixture(&spec, args.len, seed)?;
            let joint = TimeSeriesPanel::fuse(&x, &y)?;
            Ok((format!("panel_{i:04}.csv"), seed, joint))
        })
        .collect::<Result<Vec<_>>>()?;
    for (file, _, panel) in &panels {
        io::write_panel_csv(&args.out.join(file), panel)?;
    }

    let manifest = io::PanelManifest {
        kind: "panel-batch".into(),
        spec: spec_id.clone(),
        p,
        q,
        len: args.len,
        fs,
        origin: args.origin,
        master_seed: args.seed,
        change_points: vec![spec.change_point],
        config_hash: rng::fnv64_hex(&format!(
            "simulate-ar2mix;spec={spec_id};T={};fs={fs:e};origin={:e};seed={};reps={}",
            args.len, args.origin, args.seed, args.reps
        )),
        replicates: panels
            .iter()
            .map(|(file, seed, _)| io::ReplicateEntry {
                file: file.clone(),
                seed: *seed,
            })
            .collect(),
    };
    io::write_json(&args.out.join("manifest.json"), &manifest)?;
    println!(
        "wrote {} panel(s): {} X + {} Y channels x {} samples to {}",
        args.reps,
        p,
        q,
        args.len,
        args.out.display()
    );
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let manifest: Option<io::PanelManifest> = match &args.manifest {
        Some(path) => Some(io::read_json(path)?),
        None => None,
    };
    let split = args
        .split
        .or_else(|| manifest.as_ref().map(|m| m.p))
        .ok_or_else(|| {
            Error::InvalidParameter("group split required: pass --split or --manifest".into())
        })?;
    let fs = args
        .fs
        .or_else(|| manifest.as_ref().map(|m| m.fs))
        .unwrap_or(1.0);
    let origin = args
        .origin
        .or_else(|| manifest.as_ref().map(|m| m.origin))
        .unwrap_or(0.0);

    let panel = io::read_panel_csv(&args.input, split)?;
    let x = panel.group_x();
    let y = panel.group_y();
    let (lead, follow, direction) = match args.direction.as_str() {
        "xy" => (&x, &y, "xy"),
        "yx" => (&y, &x, "yx"),
        other => {
            return Err(Error::InvalidParameter(format!(
                "direction must be `xy` or `yx`, got `{other}`"
            )))
        }
    };

    match args.method.as_str() {
        "wavecancoh" => {
            let family = WaveletFamily::parse(&args.family)?;
            let config = CancohConfig {
                family,
                num_scales: args.levels,
                half_width: args.half_width,
                epsilon_rel: args.epsilon_rel,
                scales: args.scales.clone(),
                fs,
                origin,
            };
            let mut field = causal_wavecancoh(lead, follow, args.lag, &config)?;
            if direction == "yx" {
                cancoh::relabel_direction(&mut field, "yx");
            }
            io::write_cancoh_field(&args.out, &field)?;
            if let Some(dump) = &args.dump_lws {
                let joint = lws::lagged_joint(lead, follow, args.lag)?;
                let system =
                    WaveletSystem::new(family, field.meta.num_scales)?;
                let coefs = wavelets::ndwt(&joint, &system)?;
                let smoothed =
                    lws::smooth(&lws::raw_periodogram(&coefs), field.meta.half_width)?;
                let estimate = lws::correct(&smoothed, &system)?;
                io::write_lws_csv(dump, &estimate)?;
            }
            println!(
                "wrote coherence field ({} scales x {} shifts) to {}",
                field.meta.scales.len(),
                field.meta.len,
                args.out.display()
            );
        }
        "lsp" => {
            let band = parse_band(args.band.as_deref().ok_or_else(|| {
                Error::InvalidParameter("--band lo:hi is required with --method lsp".into())
            })?)?;
            let config = StftConfig {
                window_len: args.window,
                hop: args.hop,
                gaussian_sigma: args.sigma.unwrap_or(args.window as f64 / 6.0),
                fs,
                origin,
            };
            let curve = lsp_cancoh(lead, follow, band, &config)?;
            io::write_band_curve(&args.out, &curve)?;
            println!(
                "wrote band curve ({} centers, {}-{} Hz) to {}",
                curve.centers.len(),
                band.0,
                band.1,
                args.out.display()
            );
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "method must be `wavecancoh` or `lsp`, got `{other}`"
            )))
        }
    }
    Ok(())
}

fn cmd_permtest(args: PermtestArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let label = |p: &Path| {
        p.file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("condition")
            .to_string()
    };
    let group_a = TrialCollection::new(io::read_field_dir(&args.group_a)?, label(&args.group_a))?;
    let group_b = TrialCollection::new(io::read_field_dir(&args.group_b)?, label(&args.group_b))?;
    let scales = match &args.scales {
        Some(s) => s.clone(),
        None => group_a.trials()[0].meta.scales.clone(),
    };

    let mut reports = Vec::new();
    for &scale in &scales {
        for (pi, &t_star) in args.probes.iter().enumerate() {
            let cell_seed = rng::derive(args.seed, &[TAG_CELL, scale as u64, pi as u64]);
            let report = perm_test(
                &group_a,
                &group_b,
                scale,
                t_star,
                args.window,
                args.n_perm,
                cell_seed,
            )?;
            let file = args.out.join(format!("report_s{scale}_t{t_star}.json"));
            io::write_perm_report(&file, &report, args.full_dist)?;
            reports.push(report);
        }
    }
    if args.corrected {
        let mut corrected = reports.clone();
        for r in &mut corrected {
            r.p_value = r.p_value_corrected();
        }
        io::write_permtest_summary(&args.out.join("summary.csv"), &corrected)?;
    } else {
        io::write_permtest_summary(&args.out.join("summary.csv"), &reports)?;
    }
    println!(
        "wrote {} report(s) and summary.csv to {}",
        reports.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ExperimentMeta {
    experiment: String,
    reps: usize,
    seed: u64,
    len: usize,
    half_width: usize,
    detail: serde_json::Value,
    config_hash: String,
}

fn write_wald_csv(path: &Path, band: &[crate::inference::WaldPoint]) -> Result<()> {
    let mut out = String::from("k,u,mean,lo,hi\n");
    for pt in band {
        writeln!(out, "{},{},{},{},{}", pt.k, pt.u, pt.mean, pt.lo, pt.hi).unwrap();
    }
    io::atomic_write(path, out.as_bytes())
}

fn cmd_replicate(args: ReplicateArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    match args.experiment.as_str() {
        "fig2-left" => replicate_two_level(args),
        "fig2-right" => replicate_method_contrast(args),
        "causal-sweep" => replicate_causal_sweep(args),
        other => Err(Error::InvalidParameter(format!(
            "unknown experiment `{other}` (fig2-left, fig2-right, causal-sweep)"
        ))),
    }
}

/// Mean coherence with a Wald band at the active scale of the built-in
/// two-level spectral spec.
fn replicate_two_level(args: ReplicateArgs) -> Result<()> {
    let reps = args.reps.unwrap_or(200);
    let len = args.len.unwrap_or(1024);
    let spec = LwsSpec::builtin_c1();
    let system = WaveletSystem::new(WaveletFamily::Haar, spec.num_scales())?;
    let config = CancohConfig {
        half_width: args.half_width,
        scales: Some(vec![2]),
        ..CancohConfig::default()
    };
    let trials: Vec<CancohField> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let r = simulate::simulate_mvlsw(&spec, len, &system, replicate_seed(args.seed, i))?;
            cancoh::wavecancoh(&r.panel.group_x(), &r.panel.group_y(), &config)
        })
        .collect::<Result<Vec<_>>>()?;
    let half_width = trials[0].meta.half_width;
    let config_hash = trials[0].meta.config_hash.clone();
    let collection = TrialCollection::new(trials, "two-level")?;
    let band = wald_band(&collection, 2, 0.95)?;
    write_wald_csv(&args.out.join("mean_band.csv"), &band)?;

    let rho_lo = simulate::true_cancoh_from_spec(&spec, 2, 0.25)?;
    let rho_hi = simulate::true_cancoh_from_spec(&spec, 2, 0.75)?;
    let meta = ExperimentMeta {
        experiment: "fig2-left".into(),
        reps,
        seed: args.seed,
        len,
        half_width,
        detail: serde_json::json!({
            "scale": 2,
            "family": "haar",
            "population": { "first_half": rho_lo, "second_half": rho_hi },
        }),
        config_hash,
    };
    io::write_json(&args.out.join("experiment.json"), &meta)?;
    println!(
        "wrote mean_band.csv ({} reps, T={len}) to {}",
        reps,
        args.out.display()
    );
    Ok(())
}

/// Wavelet vs Fourier band coherence on the AR(2) mixture.
fn replicate_method_contrast(args: ReplicateArgs) -> Result<()> {
    let reps = args.reps.unwrap_or(50);
    let len = args.len.unwrap_or(1024);
    let spec = Ar2MixtureSpec::builtin();
    let band = (25.0, 50.0);
    let config = CancohConfig {
        half_width: args.half_width,
        scales: Some(vec![1]),
        fs: spec.fs,
        ..CancohConfig::default()
    };
    let stft = StftConfig {
        fs: spec.fs,
        ..StftConfig::default()
    };

    let results: Vec<(CancohField, crate::baseline::BandCohCurve)> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let seed = replicate_seed(args.seed, i);
            let (x, y) = simulate::simulate_ar2_mixture(&spec, len, seed)?;
            let field = cancoh::wavecancoh(&x, &y, &config)?;
            let curve = lsp_cancoh(&x, &y, band, &stft)?;
            Ok((field, curve))
        })
        .collect::<Result<Vec<_>>>()?;

    let fields: Vec<CancohField> = results.iter().map(|(f, _)| f.clone()).collect();
    let half_width = fields[0].meta.half_width;
    let config_hash = fields[0].meta.config_hash.clone();
    let collection = TrialCollection::new(fields, "wavelet")?;
    let wave_band = wald_band(&collection, 1, 0.95)?;
    write_wald_csv(&args.out.join("wavecancoh_scale1.csv"), &wave_band)?;

    // Wald band over the Fourier curves on their own center grid
    let curves: Vec<&crate::baseline::BandCohCurve> = results.iter().map(|(_, c)| c).collect();
    let centers = curves[0].centers.clone();
    let z = crate::inference::normal_quantile(0.975);
    let mut out = String::from("k,u,mean,lo,hi\n");
    for (idx, &center) in centers.iter().enumerate() {
        let vals: Vec<f64> = curves.iter().map(|c| c.points[idx].rho).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (vals.len() as f64 - 1.0))
            .sqrt();
        let half = z * sd / (vals.len() as f64).sqrt();
        writeln!(
            out,
            "{center},{},{mean},{},{}",
            center as f64 / len as f64,
            mean - half,
            mean + half
        )
        .unwrap();
    }
    io::atomic_write(&args.out.join("lsp_25_50hz.csv"), out.as_bytes())?;

    let meta = ExperimentMeta {
        experiment: "fig2-right".into(),
        reps,
        seed: args.seed,
        len,
        half_width,
        detail: serde_json::json!({
            "scale": 1,
            "band_hz": [band.0, band.1],
            "fs": spec.fs,
            "stft": { "window": stft.window_len, "hop": stft.hop, "sigma": stft.gaussian_sigma },
        }),
        config_hash,
    };
    io::write_json(&args.out.join("experiment.json"), &meta)?;
    println!(
        "wrote wavecancoh_scale1.csv and lsp_25_50hz.csv ({} reps) to {}",
        reps,
        args.out.display()
    );
    Ok(())
}

/// Directed coherence of AR(2)-mixture surrogates over a lag sweep:
/// interior-time mean per (direction, scale, lag).
fn replicate_causal_sweep(args: ReplicateArgs) -> Result<()> {
    let reps = args.reps.unwrap_or(10);
    let len = args.len.unwrap_or(1024);
    let lags = args.lags.clone().unwrap_or_else(|| vec![0, 10, 20, 30, 40, 50]);
    let scales = vec![1usize, 2, 3];
    let spec = Ar2MixtureSpec::builtin();
    let config = CancohConfig {
        half_width: args.half_width,
        scales: Some(scales.clone()),
        fs: spec.fs,
        ..CancohConfig::default()
    };

    let mut rows: Vec<(String, usize, usize, f64)> = Vec::new();
    for direction in ["xy", "yx"] {
        for &lag in &lags {
            let means: Vec<Vec<f64>> = (0..reps)
                .into_par_iter()
                .map(|i| {
                    let seed = replicate_seed(args.seed, i);
                    let (x, y) = simulate::simulate_ar2_mixture(&spec, len, seed)?;
                    let field = if direction == "xy" {
                        causal_wavecancoh(&x, &y, lag, &config)?
                    } else {
                        causal_wavecancoh(&y, &x, lag, &config)?
                    };
                    let per_scale: Vec<f64> = scales
                        .iter()
                        .map(|&s| {
                            let pts = field.scale_points(s);
                            let trim = pts.len() / 10;
                            let inner = &pts[trim..pts.len() - trim];
                            inner.iter().map(|p| p.rho).sum::<f64>() / inner.len() as f64
                        })
                        .collect();
                    Ok(per_scale)
                })
                .collect::<Result<Vec<_>>>()?;
            for (si, &scale) in scales.iter().enumerate() {
                let mean = means.iter().map(|m| m[si]).sum::<f64>() / reps as f64;
                rows.push((direction.to_string(), scale, lag, mean));
            }
        }
    }

    let mut out = String::from("direction,scale,lag,mean_rho\n");
    for (direction, scale, lag, mean) in &rows {
        writeln!(out, "{direction},{scale},{lag},{mean}").unwrap();
    }
    io::atomic_write(&args.out.join("lag_sweep.csv"), out.as_bytes())?;

    let meta = ExperimentMeta {
        experiment: "causal-sweep".into(),
        reps,
        seed: args.seed,
        len,
        half_width: args.half_width.unwrap_or_else(|| cancoh::default_half_width(len)),
        detail: serde_json::json!({ "lags": lags, "scales": scales, "fs": spec.fs }),
        config_hash: rng::fnv64_hex(&format!(
            "causal-sweep;T={len};reps={reps};seed={};lags={lags:?}",
            args.seed
        )),
    };
    io::write_json(&args.out.join("experiment.json"), &meta)?;
    println!(
        "wrote lag_sweep.csv ({} direction x scale x lag rows) to {}",
        rows.len(),
        args.out.display()
    );
    Ok(())
}
