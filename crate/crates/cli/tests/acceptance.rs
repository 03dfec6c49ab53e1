//! Acceptance run: one PASS/FAIL line per criterion.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use formu_core::design::{design_psd, lognormal_target, DesignSpec, Parameterization};
use formu_core::dissolution::{SherwoodModel, Simulator};
use formu_core::eval::{align_profiles, mse, r_squared, simulate_record, AlignedPair, MetricError};
use formu_core::prompt::{build_prompt, parse_profile_response, Constraints, PromptError, PromptStrategy};
use formu_core::rag::RecordStore;
use formu_core::record::FormulationInput;
use formu_core::{
    psd_from_lognormal, records_from_json, simulate_dissolution, DissolutionConditions, DissolutionProfile,
    DrugSubstance, Feature, FormulationRecord, ParticleMorphology, Provenance, SizeDistribution,
};
use formu_core::profile::{from_csv, standard_grid};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn reference_input() -> FormulationInput {
    let value: serde_json::Value = serde_json::from_str(&read(root().join("fixtures/reference_input.json"))).unwrap();
    FormulationInput::from_json_map(value.as_object().unwrap()).unwrap()
}

fn exemplar_records() -> Vec<FormulationRecord> {
    records_from_json(&read(root().join("fixtures/exemplar_records.json"))).unwrap()
}

fn hctz() -> DrugSubstance {
    DrugSubstance::hydrochlorothiazide()
}

fn formu(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_formu"))
        .current_dir(dir)
        .args(args)
        .args(["--output-dir", "out"])
        .env_remove("FORMU_API_KEY")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "formu {args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn within_time(start: Instant, limit: Duration) -> Result<String, String> {
    let elapsed = start.elapsed();
    ensure(elapsed < limit, format!("took {elapsed:?}, limit {limit:?}"))?;
    Ok(format!("{:.3} s", elapsed.as_secs_f64()))
}

/// Monodisperse sphere, sink, Sh = 2: x² falls linearly to zero.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let drug = hctz();
    let x0 = 50e-6;
    let rho = drug.true_density * 1000.0;
    let t_d = x0 * x0 * rho / (24.0 * drug.diffusivity * drug.c_sat);
    let closed = |t_s: f64| {
        if t_s >= t_d {
            100.0
        } else {
            100.0 * (1.0 - (1.0 - t_s / t_d).powf(1.5))
        }
    };
    let mut grid: Vec<f64> = (0..=30).map(|i| i as f64 * 20.0 / 3600.0).collect();
    grid.extend(standard_grid().into_iter().filter(|&t| t > 600.0 / 3600.0));
    let cond = DissolutionConditions {
        sink_override: true,
        ..DissolutionConditions::default()
    };
    let out = Simulator::with_sherwood(SherwoodModel::Fixed(2.0))
        .run(
            &drug,
            &ParticleMorphology::sphere(),
            &SizeDistribution::monodisperse(50.0).unwrap(),
            &cond,
            &grid,
        )
        .map_err(|e| e.to_string())?;
    let t_num = out.complete_dissolution_time().ok_or("particle never dissolved")?;
    ensure(
        ((t_num - t_d) / t_d).abs() < 0.01,
        format!("dissolution time {t_num} s vs closed form {t_d} s"),
    )?;
    let worst = out
        .profile
        .points()
        .iter()
        .map(|p| (p.released - closed(p.time * 3600.0)).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 0.5, format!("max deviation {worst} pp"))?;
    let time = within_time(start, Duration::from_secs(1))?;
    Ok(format!("t_d {t_num:.2} s vs {t_d:.2} s, max deviation {worst:.2e} pp, {time}"))
}

fn criterion_2() -> Outcome {
    let grid = vec![0.0, 1.0, 2.0];
    let pair = AlignedPair::new(grid.clone(), vec![0.0, 50.0, 100.0], vec![0.0, 40.0, 100.0]).unwrap();
    let m = mse(&pair);
    let r2 = r_squared(&pair).unwrap();
    ensure((m - 100.0 / 3.0).abs() <= f64::EPSILON * 100.0 / 3.0, format!("mse {m}"))?;
    ensure((r2 - 0.98).abs() <= 2.0 * f64::EPSILON, format!("r2 {r2}"))?;
    let same = AlignedPair::new(grid.clone(), vec![0.0, 50.0, 100.0], vec![0.0, 50.0, 100.0]).unwrap();
    ensure(mse(&same) == 0.0 && r_squared(&same).unwrap() == 1.0, "identity case not exact")?;
    let flat = AlignedPair::new(grid, vec![5.0; 3], vec![0.0, 5.0, 10.0]).unwrap();
    ensure(
        r_squared(&flat) == Err(MetricError::DegenerateReference),
        "constant reference accepted",
    )?;
    Ok(format!("mse {m}, r2 {r2}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let grid = standard_grid();
    let curves: Vec<DissolutionProfile> = [45.0, 97.5, 200.0]
        .iter()
        .map(|&d50| {
            simulate_dissolution(
                &hctz(),
                &ParticleMorphology::sphere(),
                &psd_from_lognormal(d50, 1.5, 50).unwrap(),
                &DissolutionConditions::default(),
                &grid,
            )
            .unwrap()
        })
        .collect();
    for pair in curves.windows(2) {
        let (fast, slow) = (&pair[0], &pair[1]);
        for (a, b) in fast.points().iter().zip(slow.points()).skip(1) {
            // two fully dissolved powders cannot be told apart
            let both_done = a.released >= 100.0 - 1e-9 && b.released >= 100.0 - 1e-9;
            ensure(
                a.released > b.released || both_done,
                format!("t = {} hr: {} vs {}", a.time, a.released, b.released),
            )?;
        }
    }
    let time = within_time(start, Duration::from_secs(5))?;
    let at = |i: usize| curves.iter().map(|c| format!("{:.1}", c.released()[i])).collect::<Vec<_>>().join(" > ");
    Ok(format!("at 0.25 hr: {}, {time}", at(1)))
}

fn criterion_4() -> Outcome {
    let input = reference_input();
    let records = exemplar_records();
    let c = Constraints::default();
    let zs = build_prompt(PromptStrategy::Zs, &input, &[], &c).unwrap().rendered;
    let golden = read(root().join("fixtures/prompts/zs_reference.txt"));
    ensure(zs == golden, "ZS rendering differs from the golden file")?;
    ensure(zs.contains("Final dissolution ≥85% within 60 min"), "USP rule missing")?;
    ensure(zs.contains("no examples provided"), "empty-examples marker missing")?;
    let fs = build_prompt(PromptStrategy::Fs, &input, &records, &c).unwrap().rendered;
    let blocks = read(root().join("fixtures/prompts/exemplar_blocks.txt"));
    ensure(fs.contains(blocks.trim_end()), "FS rendering lacks the stored example blocks")?;
    ensure(fs == read(root().join("fixtures/prompts/fs_reference.txt")), "FS rendering differs from the golden file")?;
    for (base, cot) in [(PromptStrategy::Zs, PromptStrategy::ZsCot), (PromptStrategy::Fs, PromptStrategy::FsCot)] {
        let b = build_prompt(base, &input, &records, &c).unwrap().rendered;
        let t = build_prompt(cot, &input, &records, &c).unwrap().rendered;
        let bl: Vec<&str> = b.lines().collect();
        let tl: Vec<&str> = t.lines().collect();
        ensure(
            tl.len() == bl.len() + 1 && tl.starts_with(&bl),
            format!("{cot} does not add exactly one line to {base}"),
        )?;
    }
    Ok(format!("ZS {} bytes, FS {} bytes", zs.len(), fs.len()))
}

const REFERENCE_TABLE: &str = r#"{
  "columns": ["Time (hr)", "Drug Released (%)"],
  "data": [
    [0, 0],
    [0.25, 85],
    [0.5, 87],
    [0.75, 88],
    [1, 89],
    [2, 89],
    [3, 89],
    [4, 88],
    [5, 87],
    [6, 87]
  ]
}"#;

fn criterion_5() -> Outcome {
    let expected = [
        (0.0, 0.0),
        (0.25, 85.0),
        (0.5, 87.0),
        (0.75, 88.0),
        (1.0, 89.0),
        (2.0, 89.0),
        (3.0, 89.0),
        (4.0, 88.0),
        (5.0, 87.0),
        (6.0, 87.0),
    ];
    let expected = DissolutionProfile::from_pairs(&expected).unwrap();
    let variants = [
        REFERENCE_TABLE.to_string(),
        format!("```json\n{REFERENCE_TABLE}\n```"),
        format!("Based on the film model the release is fast.\n\n```json\n{REFERENCE_TABLE}\n```\nThe curve meets the USP rule."),
        format!("Here is the table: {REFERENCE_TABLE} Let me know if you need more."),
    ];
    for v in &variants {
        let parsed = parse_profile_response(v).map_err(|e| e.to_string())?;
        ensure(parsed.profile == expected, format!("parsed {:?}", parsed.profile))?;
    }
    let empty = parse_profile_response(r#"{"columns": ["Time (hr)", "Drug Released (%)"], "data": []}"#);
    ensure(matches!(empty, Err(PromptError::EmptyProfile)), format!("empty data gave {empty:?}"))?;
    Ok(format!("{} variants, 10 points each", variants.len()))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let morph = ParticleMorphology::sphere();
    let cond = DissolutionConditions::default();
    let target = lognormal_target(120.0, 1.6, 50, &hctz(), &morph, &cond, &standard_grid()).unwrap();
    let spec = DesignSpec::new(
        target,
        hctz(),
        morph,
        cond,
        Parameterization::LogNormal { d50: 300.0, geo_sigma: 1.2 },
    );
    let result = design_psd(&spec).map_err(|e| e.to_string())?;
    let fit = result.lognormal.ok_or("no log-normal fit")?;
    ensure(result.residual_mse < 1.0, format!("residual MSE {}", result.residual_mse))?;
    ensure((fit.d50 / 120.0 - 1.0).abs() < 0.15, format!("d50 {}", fit.d50))?;
    ensure(
        result.history.windows(2).all(|w| w[1] <= w[0]),
        "objective history increases",
    )?;
    let time = within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "d50 {:.2} um, sigma {:.3}, MSE {:.2e}, {time}",
        fit.d50, fit.geo_sigma, result.residual_mse
    ))
}

fn synthetic_store(seed: u64) -> RecordStore {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut store = RecordStore::in_memory();
    let profile = DissolutionProfile::from_pairs(&[(0.0, 0.0), (1.0, 50.0), (2.0, 90.0)]).unwrap();
    for i in 0..100 {
        let features = FormulationInput {
            d50: rng.random_range(5.0..500.0),
            aspect_ratio: rng.random_range(1.0..4.0),
            roundness: rng.random_range(0.2..1.0),
            solubility: rng.random_range(0.01..5.0),
            diffusivity: rng.random_range(1e-10..1e-9),
            true_density: rng.random_range(1.1..1.8),
            ssa: rng.random_range(0.05..3.0),
            vol_eq_size: rng.random_range(1.0..20.0),
        };
        let record = FormulationRecord {
            id: format!("syn-{i:03}"),
            features,
            profile: profile.clone(),
            provenance: Provenance::Simulated,
            source: String::new(),
        };
        store.ingest(record, false).unwrap();
    }
    store
}

fn rankings(store: &mut RecordStore) -> Vec<Vec<String>> {
    let w = store.weights().unwrap();
    store
        .records()
        .iter()
        .map(|r| {
            store
                .retrieve(&r.features, 5, &w)
                .unwrap()
                .iter()
                .map(|h| h.record.id.clone())
                .collect()
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let mut exemplars = RecordStore::in_memory();
    for r in exemplar_records() {
        exemplars.ingest(r, false).unwrap();
    }
    let w = exemplars.weights().unwrap();
    let order: Vec<f64> = exemplars
        .retrieve_features(&[(Feature::D50, 50.0)], 3, &w)
        .unwrap()
        .iter()
        .map(|h| h.record.features.d50)
        .collect();
    ensure(order == [45.0, 97.5, 200.0], format!("order {order:?}"))?;

    let mut a = synthetic_store(7);
    let mut b = synthetic_store(7);
    let ra = rankings(&mut a);
    let rb = rankings(&mut b);
    for (record, ranking) in a.records().iter().zip(&ra) {
        ensure(ranking[0] == record.id, format!("{} ranked {:?}", record.id, ranking))?;
    }
    ensure(ra == rb, "rankings differ between runs")?;
    Ok(format!("exemplar order {order:?}; 100/100 self-hits"))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let input = root().join("fixtures/reference_input.json");
    let input = input.to_str().unwrap();
    formu(d, &["simulate", "--input", input, "--run-name", "sim"])?;
    formu(d, &["predict", "--strategy", "zs", "--backend", "mock", "--input", input, "--run-name", "pred"])?;
    let sim = from_csv(&read(d.join("out/sim/profile.csv"))).map_err(|e| e.to_string())?;
    let pred = from_csv(&read(d.join("out/pred/profile.csv"))).map_err(|e| e.to_string())?;
    let pair = align_profiles(&sim, &pred).map_err(|e| e.to_string())?;
    let (m, r2) = (mse(&pair), r_squared(&pair).map_err(|e| e.to_string())?);
    ensure(m == 0.0 && r2 == 1.0, format!("predict vs simulate: mse {m}, r2 {r2}"))?;

    let records: Vec<FormulationRecord> = [30.0, 60.0, 97.5, 150.0, 250.0]
        .iter()
        .enumerate()
        .map(|(i, &d50)| {
            let mut f = reference_input();
            f.d50 = d50;
            simulate_record(format!("sim-{i}"), f, &DissolutionConditions::default(), 1.5, 50, &standard_grid()).unwrap()
        })
        .collect();
    fs::write(d.join("dataset.json"), serde_json::to_string(&records).unwrap()).map_err(|e| e.to_string())?;
    formu(d, &["bench", "--backend", "mock", "--dataset", "dataset.json", "--run-name", "bench"])?;
    let report: serde_json::Value = serde_json::from_str(&read(d.join("out/bench/report.json"))).unwrap();
    let rows = report["rows"].as_array().ok_or("no rows")?;
    ensure(rows.len() == 5, format!("{} rows", rows.len()))?;
    let mut worst = (0.0f64, 1.0f64);
    for row in rows {
        let (m, r2) = (row["mse"].as_f64().ok_or("missing mse")?, row["r2"].as_f64().ok_or("missing r2")?);
        ensure(m <= 1e-6 && r2 >= 0.999999, format!("{}: mse {m}, r2 {r2}", row["strategy"]))?;
        worst = (worst.0.max(m), worst.1.min(r2));
    }
    Ok(format!("predict == simulate; bench worst mse {:e}, r2 {}", worst.0, worst.1))
}

fn criterion_9() -> String {
    if std::env::var_os("FORMU_API_KEY").is_none() || std::env::var_os("FORMU_RUN_LIVE").is_none() {
        return "skipped (set FORMU_API_KEY and FORMU_RUN_LIVE=1 to run the live benchmark)".into();
    }
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return format!("could not create a temp dir: {e}"),
    };
    let out = Command::new(env!("CARGO_BIN_EXE_formu"))
        .current_dir(dir.path())
        .args(["bench", "--backend", "live", "--fixtures"])
        .arg(root().join("fixtures/exemplar_records.json"))
        .args(["--output-dir", "out", "--run-name", "live"])
        .output();
    match out {
        Ok(o) => format!(
            "exit {:?}\n{}",
            o.status.code(),
            String::from_utf8_lossy(&o.stdout).trim_end()
        ),
        Err(e) => format!("could not run: {e}"),
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "analytic ODE oracle", criterion_1),
        (2, "metric exactness", criterion_2),
        (3, "size ordering", criterion_3),
        (4, "prompt goldens", criterion_4),
        (5, "parser fidelity", criterion_5),
        (6, "inverse round trip", criterion_6),
        (7, "retrieval determinism", criterion_7),
        (8, "offline end-to-end closure", criterion_8),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {why}");
            }
        }
    }
    println!("INFO criterion 9 (live reference): {}", criterion_9());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
