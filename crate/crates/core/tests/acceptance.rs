//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any of them failed.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use modeloss::channel::{ChannelSpectrum, ModeLayout, Placement};
use modeloss::dsp::{estimate_mdl, wiener_equalizer};
use modeloss::linalg::{haar_unitary, real_diagonal, squared_singular_values};
use modeloss::mdl::{correct_eigenvalue, mmse_forward, Snr};
use modeloss::sweep::{
    emit_all, run_sweep, CellSummary, RowKind, SweepConfig, SweepMode, SweepResult,
};
use modeloss::{AggregationRule, ClampPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid_cells<'a>(
    r: &'a SweepResult,
    p: &'a Placement,
) -> impl Iterator<Item = &'a CellSummary> + 'a {
    r.cells(p).filter(|c| c.kind == RowKind::Grid)
}

fn row_truth(r: &SweepResult, p: &Placement, ratio: f64) -> f64 {
    r.cells(p)
        .find(|c| c.kind == RowKind::Reference && c.ratio_db == ratio)
        .and_then(|c| c.median_true_mdl_db)
        .expect("reference cell present")
}

fn ac1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let snr = Snr::from_db(rng.random_range(-10.0..40.0)).unwrap();
        let lambda = 10f64.powf(rng.random_range(0.0..6.0)) / snr.linear();
        let back = correct_eigenvalue(mmse_forward(lambda, snr).unwrap(), snr).unwrap();
        worst = worst.max(((back - lambda) / lambda).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-9 && elapsed < Duration::from_secs(1),
        format!(
            "1e5 round trips, worst relative error {worst:.2e}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let layout = ModeLayout::default();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for _ in 0..50 {
        let bins: Vec<_> = (0..4)
            .map(|_| {
                let gains: Vec<f64> = (0..6)
                    .map(|_| 10f64.powf(-rng.random_range(0.0..1.0) / 2.0))
                    .collect();
                let u = haar_unitary(6, &mut rng);
                let v = haar_unitary(6, &mut rng);
                u * real_diagonal(&gains) * v.adjoint()
            })
            .collect();
        let ch = ChannelSpectrum::new(layout.clone(), 1e9, bins).unwrap();
        for db in (5..=30).step_by(5) {
            let snr = Snr::from_db(db as f64).unwrap();
            let eq = wiener_equalizer(&ch, snr).unwrap();
            let est = estimate_mdl(
                &eq,
                snr,
                false,
                AggregationRule::MeanGram,
                ClampPolicy::Strict,
            )
            .unwrap();
            for p in &est.per_bin_profiles {
                // the map is not monotone below 1/SNR, so compare sorted sets
                let mut want: Vec<f64> =
                    squared_singular_values(&ch.bins()[p.bin_index().unwrap()])
                        .into_iter()
                        .map(|t| mmse_forward(t, snr).unwrap())
                        .collect();
                want.sort_by(|a, b| b.total_cmp(a));
                for (got, want) in p.values().iter().zip(want) {
                    worst = worst.max(((got - want) / want).abs());
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "{checked} eigenvalues from 50 channels, worst relative error {worst:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn ac3(r: &SweepResult) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for p in &r.config.placements {
        let ratio = *r
            .config
            .ratio_grid_db
            .iter()
            .min_by(|a, b| {
                (row_truth(r, p, **a) - 10.0)
                    .abs()
                    .total_cmp(&(row_truth(r, p, **b) - 10.0).abs())
            })
            .unwrap();
        let cell = grid_cells(r, p)
            .find(|c| c.ratio_db == ratio && c.snr_db == 8.0)
            .unwrap();
        let err = cell.median_error_uncorrected_db.unwrap();
        let ok = cell.seeds.len() >= 10 && (2.5..=5.5).contains(&err);
        pass &= ok;
        notes.push(format!(
            "{}: true {:.2} dB, error {err:.2} dB",
            p.label(),
            row_truth(r, p, ratio)
        ));
        for &ratio in &r.config.ratio_grid_db {
            let row: Vec<f64> = r
                .config
                .snr_grid_db
                .iter()
                .map(|&s| {
                    grid_cells(r, p)
                        .find(|c| c.ratio_db == ratio && c.snr_db == s)
                        .unwrap()
                        .median_error_uncorrected_db
                        .unwrap()
                })
                .collect();
            if row.windows(2).any(|w| w[1] > w[0]) {
                pass = false;
                notes.push(format!(
                    "{} ratio {ratio} not monotone: {row:.3?}",
                    p.label()
                ));
            }
        }
    }
    outcome(
        pass,
        format!("{} at SNR 8 dB; rows monotone in SNR", notes.join("; ")),
    )
}

fn ac4(r: &SweepResult) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for p in &r.config.placements {
        let bound = match p {
            Placement::TxSide => 0.5,
            Placement::InSpan { .. } => 0.65,
        };
        let mut worst = 0.0f64;
        let mut rows = 0;
        for &ratio in &r.config.ratio_grid_db {
            if row_truth(r, p, ratio) > 10.0 {
                continue;
            }
            rows += 1;
            for c in grid_cells(r, p).filter(|c| c.ratio_db == ratio && c.snr_db >= 14.0) {
                worst = worst.max(c.median_error_corrected_db.unwrap().abs());
            }
        }
        pass &= worst <= bound && rows > 0;
        notes.push(format!(
            "{}: worst {worst:.3} dB over {rows} rows (bound {bound})",
            p.label()
        ));
    }
    outcome(
        pass,
        format!("training 2^16, SNR >= 14 dB; {}", notes.join("; ")),
    )
}

fn ac5(r: &SweepResult) -> Outcome {
    let low = r
        .summary
        .iter()
        .filter(|c| c.kind == RowKind::Grid && c.snr_db < 14.0)
        .filter_map(|c| c.median_error_corrected_db)
        .fold(f64::INFINITY, f64::min);
    outcome(
        low >= -0.7,
        format!("lowest median corrected error below 14 dB SNR: {low:.3} dB"),
    )
}

fn ac6(r: &SweepResult) -> Outcome {
    let mut worst = 0.0f64;
    for rec in r.records.iter().filter(|x| x.kind == RowKind::Reference) {
        let truth = rec.channel_mdl_db.unwrap();
        worst = worst.max((rec.uncorrected_db.unwrap() - truth).abs());
        worst = worst.max((rec.corrected_db.unwrap() - truth).abs());
    }
    outcome(
        worst <= 0.15 && r.config.reference_snr_db == 37.0,
        format!("every replicate at 37 dB, worst deviation from the channel MDL {worst:.4} dB"),
    )
}

fn ac7() -> Outcome {
    let cfg = SweepConfig {
        seeds: 20,
        ..SweepConfig::default()
    };
    let r = run_sweep(&cfg, 0, SweepMode::ReferenceOnly).unwrap();
    let mut pass = true;
    let mut curves = BTreeMap::new();
    for p in &cfg.placements {
        let curve: Vec<f64> = cfg
            .ratio_grid_db
            .iter()
            .map(|&x| row_truth(&r, p, x))
            .collect();
        pass &= curve.windows(2).all(|w| w[1] >= w[0]);
        curves.insert(p.label(), curve);
    }
    let offset = curves["in-span-7"][0] - curves["tx-side"][0];
    pass &= offset > 0.0 && (offset - 2.5).abs() <= 1.5;
    outcome(
        pass,
        format!(
            "20 seeds; tx {:.2?}; in-span {:.2?}; baseline offset {offset:.2} dB",
            curves["tx-side"], curves["in-span-7"]
        ),
    )
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn ac8(default: &SweepResult) -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("all-cores");
    emit_all(default, &a).unwrap();
    let mut pass = true;
    let mut compared = 0;
    for threads in [1, 3] {
        let again = run_sweep(&default.config, threads, SweepMode::Full).unwrap();
        let b = tmp.path().join(format!("threads-{threads}"));
        emit_all(&again, &b).unwrap();
        let (fa, fb) = (read_dir(&a), read_dir(&b));
        pass &= fa == fb;
        compared = fa.len();
    }
    outcome(
        pass,
        format!("default sweep at all cores, 1 and 3 threads: {compared} files byte-identical"),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("AC1", ac1()));
    results.push(("AC2", ac2()));

    let start = Instant::now();
    let default = run_sweep(&SweepConfig::default(), 0, SweepMode::Full).expect("default sweep");
    let default_time = start.elapsed();

    results.push(("AC3", ac3(&default)));
    let precise = run_sweep(
        &SweepConfig {
            training_length: 1 << 16,
            snr_grid_db: vec![14.0, 16.0, 18.0, 20.0],
            ..SweepConfig::default()
        },
        0,
        SweepMode::Full,
    )
    .expect("2^16 sweep");
    results.push(("AC4", ac4(&precise)));
    results.push(("AC5", ac5(&default)));
    results.push(("AC6", ac6(&default)));
    results.push(("AC7", ac7()));
    results.push(("AC8", ac8(&default)));
    results.push((
        "AC9",
        outcome(
            default_time < Duration::from_secs(600),
            format!(
                "default sweep ({} records) in {:.1} s on {} thread(s)",
                default.records.len(),
                default_time.as_secs_f64(),
                rayon::current_num_threads()
            ),
        ),
    ));

    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{name} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
