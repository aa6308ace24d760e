//! Self-contained SVG charts: error heatmaps and MDL versus ratio.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::report::format_sig6;
use super::run::{median, CellStatus, RowKind, SweepResult};
use super::SweepError;
use crate::channel::Placement;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorVariant {
    Corrected,
    Uncorrected,
}

impl ErrorVariant {
    pub fn name(self) -> &'static str {
        match self {
            ErrorVariant::Corrected => "corrected",
            ErrorVariant::Uncorrected => "uncorrected",
        }
    }
}

pub const MDL_VS_RATIO_CSV: &str = "mdl_vs_ratio.csv";
pub const MDL_VS_RATIO_SVG: &str = "mdl_vs_ratio.svg";

pub fn heatmap_file_name(placement: &Placement, variant: ErrorVariant) -> String {
    format!("heatmap_{}_{}.svg", placement.label(), variant.name())
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, SweepError> {
    std::fs::write(&path, text)
        .map_err(|e| SweepError::Output(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Diverging blue–white–red scale; `t` in `[-1, 1]`.
fn diverging(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let white = [247.0, 247.0, 247.0];
    let end = if t < 0.0 {
        [33.0, 102.0, 172.0]
    } else {
        [178.0, 24.0, 43.0]
    };
    let a = t.abs();
    let c: Vec<u8> = (0..3)
        .map(|i| (white[i] + (end[i] - white[i]) * a).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Median error per (ratio, SNR) cell of one placement; `None` for
/// skipped cells.
fn error_grid(
    result: &SweepResult,
    placement: &Placement,
    variant: ErrorVariant,
) -> Vec<Vec<Option<f64>>> {
    let cfg = &result.config;
    cfg.ratio_grid_db
        .iter()
        .map(|&ratio| {
            cfg.snr_grid_db
                .iter()
                .map(|&snr| {
                    result
                        .cells(placement)
                        .find(|c| c.kind == RowKind::Grid && c.ratio_db == ratio && c.snr_db == snr)
                        .and_then(|c| match variant {
                            ErrorVariant::Corrected => c.median_error_corrected_db,
                            ErrorVariant::Uncorrected => c.median_error_uncorrected_db,
                        })
                })
                .collect()
        })
        .collect()
}

fn row_true_mdl(result: &SweepResult, placement: &Placement, ratio: f64) -> Option<f64> {
    result
        .cells(placement)
        .find(|c| c.kind == RowKind::Reference && c.ratio_db == ratio)
        .and_then(|c| c.median_true_mdl_db)
}

/// One heatmap per placement: x = SNR, y = true MDL of each ratio row,
/// colour and printed value = median error. The colour limit is shared by
/// both variants of a placement so the two maps are directly comparable.
pub fn emit_heatmap(
    result: &SweepResult,
    variant: ErrorVariant,
    dir: &Path,
) -> Result<Vec<PathBuf>, SweepError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| SweepError::Output(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for placement in &result.config.placements {
        let svg = heatmap_svg(result, placement, variant);
        out.push(write(
            dir.join(heatmap_file_name(placement, variant)),
            &svg,
        )?);
    }
    Ok(out)
}

pub fn heatmap_svg(result: &SweepResult, placement: &Placement, variant: ErrorVariant) -> String {
    let cfg = &result.config;
    let grid = error_grid(result, placement, variant);
    let peak = [ErrorVariant::Corrected, ErrorVariant::Uncorrected]
        .into_iter()
        .flat_map(|v| {
            error_grid(result, placement, v)
                .into_iter()
                .flatten()
                .flatten()
        })
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // round up to half a dB so small surfaces still get a readable scale
    let limit = ((peak / 0.5).ceil() * 0.5).max(0.5);

    let (cw, ch) = (64.0, 36.0);
    let (left, top) = (96.0, 48.0);
    let cols = cfg.snr_grid_db.len() as f64;
    let rows = cfg.ratio_grid_db.len() as f64;
    let legend_x = left + cols * cw + 32.0;
    let width = legend_x + 80.0;
    let height = top + rows * ch + 64.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{} MDL estimation error, {} (dB)</text>"#,
        left + cols * cw / 2.0,
        escape(&placement.label()),
        variant.name()
    );
    // highest ratio (largest MDL) on top
    for (ri, ratio) in cfg.ratio_grid_db.iter().enumerate() {
        let y = top + (rows - 1.0 - ri as f64) * ch;
        let label = row_true_mdl(result, placement, *ratio)
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" dominant-baseline="middle" data-ratio-db="{}">{label}</text>"#,
            left - 8.0,
            y + ch / 2.0,
            format_sig6(*ratio)
        );
        for (si, value) in grid[ri].iter().enumerate() {
            let x = left + si as f64 * cw;
            match value {
                Some(v) => {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{}" stroke="white" data-value="{}"/>"#,
                        diverging(v / limit),
                        format_sig6(*v)
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle">{v:.2}</text>"#,
                        x + cw / 2.0,
                        y + ch / 2.0
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="#d9d9d9" stroke="white" data-value=""/>"##
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle">n/a</text>"#,
                        x + cw / 2.0,
                        y + ch / 2.0
                    );
                }
            }
        }
    }
    let axis_y = top + rows * ch;
    for (si, snr) in cfg.snr_grid_db.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            left + si as f64 * cw + cw / 2.0,
            axis_y + 18.0,
            format_sig6(*snr)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">SNR (dB)</text>"#,
        left + cols * cw / 2.0,
        axis_y + 42.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">true MDL (dB)</text>"#,
        top + rows * ch / 2.0,
        top + rows * ch / 2.0
    );

    // legend: discrete steps from +limit (top) to -limit (bottom)
    let steps = 20;
    let bar_h = rows * ch;
    for k in 0..steps {
        let t = 1.0 - 2.0 * (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{legend_x}" y="{}" width="16" height="{}" fill="{}"/>"#,
            top + k as f64 * bar_h / steps as f64,
            bar_h / steps as f64,
            diverging(t)
        );
    }
    for (frac, v) in [(0.0, limit), (0.5, 0.0), (1.0, -limit)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" dominant-baseline="middle">{v:.2}</text>"#,
            legend_x + 22.0,
            top + frac * bar_h
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}

/// Reference-run MDL against attenuation ratio per placement: CSV of
/// per-seed values and medians, plus a line chart with the seeds scattered.
pub fn emit_mdl_vs_ratio(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| SweepError::Output(format!("{}: {e}", dir.display())))?;
    let cfg = &result.config;

    struct Series {
        placement: Placement,
        points: Vec<(f64, Vec<f64>, Option<f64>)>,
    }
    let series: Vec<Series> = cfg
        .placements
        .iter()
        .map(|&placement| Series {
            placement,
            points: cfg
                .ratio_grid_db
                .iter()
                .map(|&ratio| {
                    let seeds: Vec<f64> = result
                        .records
                        .iter()
                        .filter(|r| {
                            r.placement == placement
                                && r.kind == RowKind::Reference
                                && r.ratio_db == ratio
                                && r.status == CellStatus::Ok
                        })
                        .filter_map(|r| r.true_mdl_db)
                        .collect();
                    let med = median(&seeds);
                    (ratio, seeds, med)
                })
                .collect(),
        })
        .collect();

    let csv_path = dir.join(MDL_VS_RATIO_CSV);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&csv_path)
        .map_err(|e| SweepError::Output(format!("{}: {e}", csv_path.display())))?;
    let err = |e: csv::Error| SweepError::Output(e.to_string());
    w.write_record([
        "placement",
        "ratio_db",
        "statistic",
        "replicate",
        "true_mdl_db",
        "channel_mdl_db",
    ])
    .map_err(err)?;
    for sr in &series {
        for (ratio, _, med) in &sr.points {
            let refs = result.records.iter().filter(|r| {
                r.placement == sr.placement && r.kind == RowKind::Reference && r.ratio_db == *ratio
            });
            let mut channel = Vec::new();
            for r in refs {
                if r.status != CellStatus::Ok {
                    continue;
                }
                channel.extend(r.channel_mdl_db);
                w.write_record([
                    sr.placement.label(),
                    format_sig6(*ratio),
                    "seed".into(),
                    r.replicate.to_string(),
                    r.true_mdl_db.map(format_sig6).unwrap_or_default(),
                    r.channel_mdl_db.map(format_sig6).unwrap_or_default(),
                ])
                .map_err(err)?;
            }
            w.write_record([
                sr.placement.label(),
                format_sig6(*ratio),
                "median".into(),
                String::new(),
                med.map(format_sig6).unwrap_or_default(),
                median(&channel).map(format_sig6).unwrap_or_default(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| SweepError::Output(e.to_string()))?;

    // chart
    let (left, top, pw, ph) = (64.0, 40.0, 480.0, 320.0);
    let (width, height) = (left + pw + 150.0, top + ph + 56.0);
    let xs = &cfg.ratio_grid_db;
    let xmin = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let ymax = series
        .iter()
        .flat_map(|sr| sr.points.iter().flat_map(|p| p.1.iter().copied()))
        .fold(1.0f64, f64::max);
    let ymax = (ymax * 1.1 / 2.0).ceil() * 2.0;
    let px = |x: f64| left + (x - xmin) / xspan * pw;
    let py = |y: f64| top + ph - y.max(0.0) / ymax * ph;
    let colors = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    ];

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">MDL versus attenuation ratio</text>"#,
        left + pw / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for &x in xs {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(x),
            top + ph + 18.0,
            format_sig6(x)
        );
    }
    let yticks = 5;
    for k in 0..=yticks {
        let y = ymax * k as f64 / yticks as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            left - 6.0,
            py(y),
            format_sig6(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">attenuation ratio LP01:LP11 (dB)</text>"#,
        left + pw / 2.0,
        top + ph + 42.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">MDL (dB)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, sr) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let label = escape(&sr.placement.label());
        let _ = writeln!(s, r#"<g data-placement="{label}">"#);
        for (x, seeds, _) in &sr.points {
            for v in seeds {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{}" cy="{}" r="2.5" fill="{color}" fill-opacity="0.35" data-value="{}"/>"#,
                    px(*x),
                    py(*v),
                    format_sig6(*v)
                );
            }
        }
        let pts: Vec<String> = sr
            .points
            .iter()
            .filter_map(|(x, _, m)| m.map(|m| format!("{},{}", px(*x), py(m))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for (x, _, m) in &sr.points {
            if let Some(m) = m {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{}" cy="{}" r="4" fill="{color}" data-median="{}"/>"#,
                    px(*x),
                    py(*m),
                    format_sig6(*m)
                );
            }
        }
        let _ = writeln!(s, "</g>");
        let ly = top + 16.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{ly}" dominant-baseline="middle">{label}</text>"#,
            left + pw + 16.0,
            left + pw + 40.0,
            left + pw + 46.0
        );
    }
    let _ = writeln!(s, "</svg>");
    let svg_path = write(dir.join(MDL_VS_RATIO_SVG), &s)?;
    Ok(vec![csv_path, svg_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkSpec;
    use crate::sweep::{run_sweep, SweepConfig, SweepMode};

    fn tiny(ratios: Vec<f64>, snrs: Vec<f64>, seeds: usize) -> SweepConfig {
        SweepConfig {
            placements: vec![Placement::TxSide],
            ratio_grid_db: ratios,
            snr_grid_db: snrs,
            seeds,
            training_length: 2048,
            link: LinkSpec {
                sections: 2,
                bins: 8,
                ..LinkSpec::default()
            },
            ..SweepConfig::default()
        }
    }

    fn data_values(svg: &str) -> Vec<String> {
        svg.split("data-value=\"")
            .skip(1)
            .map(|p| p.split('"').next().unwrap().to_string())
            .collect()
    }

    #[test]
    fn colour_scale_is_symmetric() {
        assert_eq!(diverging(0.0), "#f7f7f7");
        assert_eq!(diverging(1.0), "#b2182b");
        assert_eq!(diverging(-1.0), "#2166ac");
        assert_eq!(diverging(5.0), diverging(1.0));
    }

    #[test]
    fn single_cell_heatmap_prints_its_value() {
        let r = run_sweep(&tiny(vec![4.0], vec![10.0], 1), 1, SweepMode::Full).unwrap();
        let svg = heatmap_svg(&r, &Placement::TxSide, ErrorVariant::Uncorrected);
        let v = r.summary[1].median_error_uncorrected_db.unwrap();
        assert_eq!(data_values(&svg), vec![format_sig6(v)]);
        assert!(svg.contains(&format!(">{v:.2}</text>")));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn variants_share_axes() {
        let r = run_sweep(
            &tiny(vec![0.0, 6.0], vec![8.0, 16.0], 1),
            1,
            SweepMode::Full,
        )
        .unwrap();
        let a = heatmap_svg(&r, &Placement::TxSide, ErrorVariant::Corrected);
        let b = heatmap_svg(&r, &Placement::TxSide, ErrorVariant::Uncorrected);
        // drop cell fills, cell labels and the title, which names the variant
        let strip = |s: &str| -> Vec<String> {
            s.lines()
                .filter(|l| !l.contains("data-value"))
                .filter(|l| !l.contains(r#"text-anchor="middle" dominant-baseline="middle""#))
                .filter(|l| !l.contains("estimation error"))
                .map(str::to_string)
                .collect()
        };
        assert_eq!(strip(&a), strip(&b));
        // rendered values agree with the summary table
        let cells: Vec<String> = r
            .summary
            .iter()
            .filter(|c| c.kind == RowKind::Grid)
            .map(|c| format_sig6(c.median_error_corrected_db.unwrap()))
            .collect();
        assert_eq!(data_values(&a), cells);
    }

    #[test]
    fn scatter_has_a_marker_per_seed() {
        let r = run_sweep(
            &tiny(vec![0.0, 4.0], vec![10.0], 2),
            1,
            SweepMode::ReferenceOnly,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_mdl_vs_ratio(&r, dir.path()).unwrap();
        let svg = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(data_values(&svg).len(), 4);
        assert_eq!(svg.matches("data-median").count(), 2);
        let csv = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
    }

    #[test]
    fn unitary_tx_curve_equals_ratio() {
        let mut cfg = tiny(vec![0.0, 2.0, 4.0, 8.0], vec![10.0], 1);
        cfg.link.insertion_mdl_spread_db = 0.0;
        let r = run_sweep(&cfg, 1, SweepMode::ReferenceOnly).unwrap();
        for rec in &r.records {
            assert!((rec.channel_mdl_db.unwrap() - rec.ratio_db).abs() < 1e-9);
            assert!((rec.true_mdl_db.unwrap() - rec.ratio_db).abs() < 0.3);
        }
    }
}
