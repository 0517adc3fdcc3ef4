//! File formats: panel CSV with JSON manifest, coherence-field CSV with
//! JSON metadata sidecar, band-curve CSV, spectral-field debug dump,
//! permutation reports and the scale × probe summary table.
//!
//! All numeric CSV cells use the shortest representation that parses back
//! to the identical `f64`, so read → write reproduces a file byte for
//! byte. Every write goes through a temp-file rename.

use crate::baseline::BandCohCurve;
use crate::cancoh::{CancohField, CancohPoint, ConditionFlags, FieldMeta};
use crate::error::{Error, Result};
use crate::inference::PermTestReport;
use crate::lws::LwsEstimate;
use crate::panel::TimeSeriesPanel;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Write with a temp-file rename so readers never observe partial files.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    atomic_write(path, body.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}

/// Batch manifest written next to simulated panels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelManifest {
    pub kind: String,
    /// Spec identifier: `c1`, `ar2mix`, or `file:<path>`.
    pub spec: String,
    pub p: usize,
    pub q: usize,
    pub len: usize,
    pub fs: f64,
    /// Time of sample 0 in seconds.
    pub origin: f64,
    pub master_seed: u64,
    pub change_points: Vec<f64>,
    pub config_hash: String,
    pub replicates: Vec<ReplicateEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateEntry {
    pub file: String,
    pub seed: u64,
}

/// Panel CSV: header `t,ch_1,..,ch_D`, one row per sample.
pub fn write_panel_csv(path: &Path, panel: &TimeSeriesPanel) -> Result<()> {
    let mut out = String::with_capacity(panel.len() * panel.channels() * 20);
    out.push('t');
    for ch in 1..=panel.channels() {
        write!(out, ",ch_{ch}").unwrap();
    }
    out.push('\n');
    for t in 0..panel.len() {
        write!(out, "{t}").unwrap();
        for &v in panel.sample(t) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Parse a panel CSV; the group split is supplied by the caller, never
/// inferred from the file.
pub fn read_panel_csv(path: &Path, split: usize) -> Result<TimeSeriesPanel> {
    let body = read_to_string(path)?;
    let mut lines = body.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        detail: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            detail: format!("expected header `t,ch_1,..`, found `{header}`"),
        });
    }
    let channels = cols.len() - 1;
    if split > channels {
        return Err(Error::InvalidParameter(format!(
            "split {split} exceeds {channels} channels"
        )));
    }
    let mut data: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != channels + 1 {
            return Err(Error::Parse {
                line: idx + 1,
                detail: format!("expected {} columns, found {}", channels + 1, fields.len()),
            });
        }
        for cell in &fields[1..] {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                detail: format!("non-numeric cell `{cell}`"),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            line: 2,
            detail: "no data rows".into(),
        });
    }
    Ok(TimeSeriesPanel::from_data(data, rows, channels, split))
}

/// Coherence field CSV: `scale,k,u,rho,rho_raw,degenerate,a_1..a_P,b_1..b_Q`.
pub fn write_cancoh_csv(path: &Path, field: &CancohField) -> Result<()> {
    let meta = &field.meta;
    let mut out = String::new();
    out.push_str("scale,k,u,rho,rho_raw,degenerate");
    for i in 1..=meta.p {
        write!(out, ",a_{i}").unwrap();
    }
    for i in 1..=meta.q {
        write!(out, ",b_{i}").unwrap();
    }
    out.push('\n');
    for &scale in &meta.scales {
        for k in 0..meta.len {
            let pt = field.point(scale, k);
            write!(
                out,
                "{scale},{k},{},{},{},{}",
                meta.rescaled_time(k),
                pt.rho,
                pt.rho_raw,
                u8::from(pt.flags.degenerate)
            )
            .unwrap();
            for v in pt.a.iter().chain(pt.b.iter()) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
    }
    atomic_write(path, out.as_bytes())
}

/// Metadata sidecar path convention: `<stem>.meta.json` next to the CSV.
pub fn meta_path_for(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    csv.with_file_name(format!("{stem}.meta.json"))
}

/// Write the field CSV plus its metadata sidecar.
pub fn write_cancoh_field(csv: &Path, field: &CancohField) -> Result<()> {
    write_cancoh_csv(csv, field)?;
    write_json(&meta_path_for(csv), &field.meta)
}

/// Read a field back from its CSV and metadata sidecar.
pub fn read_cancoh_field(csv: &Path) -> Result<CancohField> {
    let meta: FieldMeta = read_json(&meta_path_for(csv))?;
    let body = read_to_string(csv)?;
    let expected_cols = 6 + meta.p + meta.q;
    let mut points: Vec<CancohPoint> = Vec::with_capacity(meta.scales.len() * meta.len);
    for (idx, line) in body.lines().enumerate() {
        if idx == 0 {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_cols {
            return Err(Error::Parse {
                line: idx + 1,
                detail: format!("expected {expected_cols} columns, found {}", fields.len()),
            });
        }
        let num = |cell: &str| -> Result<f64> {
            cell.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                detail: format!("non-numeric cell `{cell}`"),
            })
        };
        let rho = num(fields[3])?;
        let rho_raw = num(fields[4])?;
        let degenerate = fields[5] == "1";
        let mut a = Vec::with_capacity(meta.p);
        for cell in &fields[6..6 + meta.p] {
            a.push(num(cell)?);
        }
        let mut b = Vec::with_capacity(meta.q);
        for cell in &fields[6 + meta.p..] {
            b.push(num(cell)?);
        }
        points.push(CancohPoint {
            rho,
            rho_raw,
            a,
            b,
            flags: ConditionFlags {
                floored: false,
                degenerate,
                epsilon: 0.0,
            },
        });
    }
    if points.len() != meta.scales.len() * meta.len {
        return Err(Error::Parse {
            line: body.lines().count(),
            detail: format!(
                "expected {} rows, found {}",
                meta.scales.len() * meta.len,
                points.len()
            ),
        });
    }
    Ok(CancohField::new(meta, points))
}

/// Band curve CSV: the field schema with `scale` replaced by the band
/// edges in Hz; `k` is the window-center sample index.
pub fn write_band_csv(path: &Path, curve: &BandCohCurve) -> Result<()> {
    let mut out = String::new();
    out.push_str("band_lo_hz,band_hi_hz,k,u,rho,rho_raw,degenerate");
    for i in 1..=curve.p {
        write!(out, ",a_{i}").unwrap();
    }
    for i in 1..=curve.q {
        write!(out, ",b_{i}").unwrap();
    }
    out.push('\n');
    for (idx, pt) in curve.points.iter().enumerate() {
        write!(
            out,
            "{},{},{},{},{},{},{}",
            curve.band.0,
            curve.band.1,
            curve.centers[idx],
            curve.rescaled_time(idx),
            pt.rho,
            pt.rho_raw,
            u8::from(pt.flags.degenerate)
        )
        .unwrap();
        for v in pt.a.iter().chain(pt.b.iter()) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Metadata sidecar for a band curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandMeta {
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub window_len: usize,
    pub hop: usize,
    pub gaussian_sigma: f64,
    pub fs: f64,
    pub origin: f64,
    pub p: usize,
    pub q: usize,
    pub source_len: usize,
    pub config_hash: String,
}

pub fn write_band_curve(csv: &Path, curve: &BandCohCurve) -> Result<()> {
    write_band_csv(csv, curve)?;
    let meta = BandMeta {
        band_lo_hz: curve.band.0,
        band_hi_hz: curve.band.1,
        window_len: curve.stft.window_len,
        hop: curve.stft.hop,
        gaussian_sigma: curve.stft.gaussian_sigma,
        fs: curve.stft.fs,
        origin: curve.stft.origin,
        p: curve.p,
        q: curve.q,
        source_len: curve.source_len,
        config_hash: curve.config_hash.clone(),
    };
    write_json(&meta_path_for(csv), &meta)
}

/// Debug dump of a spectral field: `scale,k` then the row-major upper
/// triangle of each matrix.
pub fn write_lws_csv(path: &Path, estimate: &LwsEstimate) -> Result<()> {
    let f = &estimate.field;
    let dim = f.dim();
    let mut out = String::new();
    out.push_str("scale,k");
    for i in 1..=dim {
        for j in i..=dim {
            write!(out, ",s_{i}_{j}").unwrap();
        }
    }
    out.push('\n');
    for scale in 1..=f.num_scales() {
        for k in 0..f.len() {
            write!(out, "{scale},{k}").unwrap();
            for &v in f.packed(scale, k) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
    }
    atomic_write(path, out.as_bytes())
}

/// Write one permutation report; the full permutation distribution is
/// included only on request.
pub fn write_perm_report(path: &Path, report: &PermTestReport, include_stats: bool) -> Result<()> {
    if include_stats {
        write_json(path, report)
    } else {
        let mut slim = report.clone();
        slim.perm_stats = Vec::new();
        write_json(path, &slim)
    }
}

/// Summary table: one row per scale, one column per probe time, each cell
/// `median-difference (p-value)`.
pub fn write_permtest_summary(path: &Path, reports: &[PermTestReport]) -> Result<()> {
    let mut scales: Vec<usize> = reports.iter().map(|r| r.scale).collect();
    scales.sort_unstable();
    scales.dedup();
    let mut probes: Vec<f64> = reports.iter().map(|r| r.t_star).collect();
    probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probes.dedup();

    let mut out = String::new();
    out.push_str("scale");
    for t in &probes {
        write!(out, ",t_{t}").unwrap();
    }
    out.push('\n');
    for &scale in &scales {
        write!(out, "{scale}").unwrap();
        for &t in &probes {
            match reports
                .iter()
                .find(|r| r.scale == scale && r.t_star == t)
            {
                Some(r) => write!(out, ",{:.3} ({:.3})", r.median_diff, r.p_value).unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// On-disk form of a wavelet-domain spectral specification: per scale a
/// list of pieces, each a start in rescaled time and a full symmetric
/// (p+q)×(p+q) matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LwsSpecFile {
    pub p: usize,
    pub q: usize,
    pub scales: Vec<ScaleSpecFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleSpecFile {
    pub pieces: Vec<PieceFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceFile {
    pub start: f64,
    pub matrix: Vec<Vec<f64>>,
}

impl LwsSpecFile {
    pub fn into_spec(self) -> Result<crate::simulate::LwsSpec> {
        let d = self.p + self.q;
        let mut scales = Vec::with_capacity(self.scales.len());
        for sc in self.scales {
            let mut breaks = Vec::with_capacity(sc.pieces.len());
            let mut values = Vec::with_capacity(sc.pieces.len());
            for piece in sc.pieces {
                breaks.push(piece.start);
                if piece.matrix.len() != d || piece.matrix.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidParameter(format!(
                        "spec matrix must be {d}x{d}"
                    )));
                }
                let rows: Vec<&[f64]> = piece.matrix.iter().map(|r| r.as_slice()).collect();
                values.push(crate::linalg::Mat::from_rows(&rows));
            }
            scales.push(crate::simulate::PiecewiseMatrix::new(breaks, values)?);
        }
        crate::simulate::LwsSpec::new(self.p, self.q, scales)
    }
}

/// On-disk form of the AR(2) mixture specification. Component indices are
/// 1-based in the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ar2SpecFile {
    pub eta: Vec<f64>,
    pub sharp: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub change_point: f64,
    pub fs: f64,
    pub x_mix_first: Vec<MixRowFile>,
    pub x_mix_second: Vec<MixRowFile>,
    pub y_mix_first: Vec<MixRowFile>,
    pub y_mix_second: Vec<MixRowFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixRowFile {
    /// 1-based latent component indices.
    pub components: Vec<usize>,
    pub total: f64,
}

impl Ar2SpecFile {
    pub fn into_spec(self) -> Result<crate::simulate::Ar2MixtureSpec> {
        let pattern = |rows: Vec<MixRowFile>| -> Result<crate::simulate::MixingPattern> {
            let rows = rows
                .into_iter()
                .map(|r| {
                    if r.components.contains(&0) {
                        return Err(Error::InvalidParameter(
                            "component indices are 1-based in spec files".into(),
                        ));
                    }
                    Ok(crate::simulate::MixRow {
                        components: r.components.iter().map(|&c| c - 1).collect(),
                        total: r.total,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(crate::simulate::MixingPattern { rows })
        };
        let spec = crate::simulate::Ar2MixtureSpec {
            eta: self.eta,
            sharp: self.sharp,
            x_mix: [pattern(self.x_mix_first)?, pattern(self.x_mix_second)?],
            y_mix: [pattern(self.y_mix_first)?, pattern(self.y_mix_second)?],
            alpha: self.alpha,
            beta: self.beta,
            change_point: self.change_point,
            fs: self.fs,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Coherence-field CSVs in a directory, sorted by file name; each must
/// have its metadata sidecar.
pub fn read_field_dir(dir: &Path) -> Result<Vec<CancohField>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut csvs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()) == Some("csv")
                && !p
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(".meta.csv"))
        })
        .collect();
    csvs.sort();
    if csvs.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no field CSVs found in {}",
            dir.display()
        )));
    }
    csvs.iter().map(|p| read_cancoh_field(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cancoh::{wavecancoh, CancohConfig};
    use crate::rng::CounterRng;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
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
    fn panel_csv_roundtrip_bytes() {
        let dir = tmpdir();
        let mut rng = CounterRng::new(3);
        let panel = random_panel(&mut rng, 37, 3, 2);
        let path = dir.path().join("panel.csv");
        write_panel_csv(&path, &panel).unwrap();
        let back = read_panel_csv(&path, 2).unwrap();
        assert_eq!(back, panel);
        // re-serialization reproduces the bytes
        let again = dir.path().join("again.csv");
        write_panel_csv(&again, &back).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }

    #[test]
    fn panel_csv_parse_errors_carry_line_numbers() {
        let dir = tmpdir();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,ch_1,ch_2\n0,1.0,2.0\n1,3.0\n").unwrap();
        match read_panel_csv(&path, 1) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "t,ch_1\n0,abc\n").unwrap();
        match read_panel_csv(&path, 1) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "time,ch_1\n0,1.0\n").unwrap();
        assert!(matches!(
            read_panel_csv(&path, 1),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn cancoh_field_roundtrip_bytes() {
        let dir = tmpdir();
        let mut rng = CounterRng::new(11);
        let x = random_panel(&mut rng, 128, 2, 2);
        let y = random_panel(&mut rng, 128, 2, 2);
        let config = CancohConfig {
            num_scales: Some(4),
            scales: Some(vec![1, 2]),
            half_width: Some(8),
            ..CancohConfig::default()
        };
        let field = wavecancoh(&x, &y, &config).unwrap();
        let csv = dir.path().join("field.csv");
        write_cancoh_field(&csv, &field).unwrap();
        let back = read_cancoh_field(&csv).unwrap();
        assert_eq!(back.meta, field.meta);
        let csv2 = dir.path().join("field2.csv");
        write_cancoh_field(&csv2, &back).unwrap();
        assert_eq!(
            std::fs::read(&csv).unwrap(),
            std::fs::read(&csv2).unwrap()
        );
        // numeric content survives
        for &scale in &[1usize, 2] {
            for k in 0..128 {
                assert_eq!(back.point(scale, k).rho, field.point(scale, k).rho);
            }
        }
    }

    #[test]
    fn permtest_summary_layout() {
        let dir = tmpdir();
        let report = |scale: usize, t: f64, diff: f64, p: f64| PermTestReport {
            scale,
            t_star: t,
            window: 0.2,
            n_perm: 100,
            t_obs: 1.0,
            median_diff: diff,
            perm_stats: vec![],
            p_value: p,
            seed: 0,
        };
        let reports = vec![
            report(4, -0.5, -0.021, 0.506),
            report(4, 0.5, 0.023, 0.001),
            report(5, -0.5, 0.229, 0.999),
            report(5, 0.5, 0.334, 0.002),
        ];
        let path = dir.path().join("summary.csv");
        write_permtest_summary(&path, &reports).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "scale,t_-0.5,t_0.5");
        assert_eq!(lines[1], "4,-0.021 (0.506),0.023 (0.001)");
        assert_eq!(lines[2], "5,0.229 (0.999),0.334 (0.002)");
    }

    #[test]
    fn field_dir_reading_sorted() {
        let dir = tmpdir();
        let mut rng = CounterRng::new(21);
        let config = CancohConfig {
            num_scales: Some(3),
            scales: Some(vec![1]),
            half_width: Some(4),
            ..CancohConfig::default()
        };
        for name in ["b.csv", "a.csv"] {
            let x = random_panel(&mut rng, 64, 1, 1);
            let y = random_panel(&mut rng, 64, 1, 1);
            let field = wavecancoh(&x, &y, &config).unwrap();
            write_cancoh_field(&dir.path().join(name), &field).unwrap();
        }
        let fields = read_field_dir(dir.path()).unwrap();
        assert_eq!(fields.len(), 2);
        assert!(read_field_dir(&dir.path().join("missing")).is_err());
    }

    #[test]
    fn perm_report_stats_flag() {
        let dir = tmpdir();
        let report = PermTestReport {
            scale: 2,
            t_star: 0.5,
            window: 0.2,
            n_perm: 3,
            t_obs: 0.5,
            median_diff: 0.1,
            perm_stats: vec![0.1, 0.7, 0.2],
            p_value: 1.0 / 3.0,
            seed: 4,
        };
        let with = dir.path().join("full.json");
        let without = dir.path().join("slim.json");
        write_perm_report(&with, &report, true).unwrap();
        write_perm_report(&without, &report, false).unwrap();
        let full: PermTestReport = read_json(&with).unwrap();
        let slim: PermTestReport = read_json(&without).unwrap();
        assert_eq!(full.perm_stats.len(), 3);
        assert!(slim.perm_stats.is_empty());
        assert_eq!(slim.p_value, report.p_value);
    }
}
