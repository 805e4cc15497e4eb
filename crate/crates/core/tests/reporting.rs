use std::fs;
use std::path::Path;
use std::process::Command;

use lattice_opro::objective::{score, ScoreConfig};
use lattice_opro::optimize::{StepOutcome, TrialReport};
use lattice_opro::trials::{
    emit_markdown_tables, progression_csv, progression_svg, regenerate_reports, run_trials, summarize, Engine,
    RunConfig, TrialOutcome,
};

fn quick_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        output_dir: out.to_path_buf(),
        ..Default::default()
    };
    cfg.loop_cfg.max_steps = 8;
    cfg
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

fn synthetic(trial: usize, progression: &[f64]) -> TrialReport {
    let steps: Vec<StepOutcome> = progression[1..]
        .iter()
        .enumerate()
        .map(|(i, &b)| StepOutcome {
            step: i,
            candidates: vec![],
            best_so_far: b,
            rejects: 0,
        })
        .collect();
    TrialReport {
        trial,
        seed: trial as u64,
        engine: "ga".into(),
        strategy: None,
        backend: None,
        best_solution: "1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0,0.0,1.0,0.0,1.0,0.0,1.0,0.0".into(),
        best_kinf: 1.0,
        best_ppf: 1.2,
        best_score: *progression.last().unwrap(),
        steps_to_best: lattice_opro::optimize::steps_to_best(progression),
        total_steps: steps.len(),
        total_evaluations: 0,
        progression: progression.to_vec(),
        reject_counts: vec![0; steps.len()],
        steps,
    }
}

#[test]
fn ten_trial_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let run = run_trials(&cfg).unwrap();
    assert_eq!(run.dir, cfg.run_dir());
    assert!(run.dir.file_name().unwrap().to_string_lossy().starts_with("opro-"));
    for name in ["config.json", "runlog.jsonl", "progression.csv", "progression.svg", "summary.md"] {
        assert!(run.dir.join(name).is_file(), "{name}");
    }
    let trial_files = fs::read_dir(run.dir.join("trials")).unwrap().count();
    assert_eq!(trial_files, 10);
    assert!(run.dir.join("trials/trial_009.json").is_file());
    assert_eq!(run.outcomes.len(), 10);
    for (i, o) in run.outcomes.iter().enumerate() {
        let r = o.report().unwrap();
        assert_eq!((r.trial, r.seed), (i, i as u64));
    }

    let summary = read(&run.dir.join("summary.md"));
    assert!(summary.contains("## Best Scores for 10 Optimization Trials"));
    assert!(summary.contains("## Steps to Achieve Best Score"));
    assert!(summary.contains("| opro (mock_mutator, detailed_context) |"));
    let cells: Vec<&str> = summary.lines().filter(|l| l.starts_with("| opro")).collect();
    assert_eq!(cells.len(), 2);
    for line in cells {
        let cell = line.rsplit('|').nth(1).unwrap().trim();
        let (m, s) = cell.split_once(" ± ").unwrap();
        for part in [m, s] {
            let (_, decimals) = part.split_once('.').unwrap();
            assert_eq!(decimals.len(), 2, "{cell}");
            part.parse::<f64>().unwrap();
        }
    }

    // One log line per model call, in trial order.
    let log = read(&run.dir.join("runlog.jsonl"));
    let records: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let calls: usize = run.outcomes.iter().map(|o| o.report().unwrap().total_steps).sum();
    assert_eq!(records.len(), calls);
    let trials: Vec<u64> = records.iter().map(|r| r["trial"].as_u64().unwrap()).collect();
    assert!(trials.windows(2).all(|w| w[0] <= w[1]));

    let stored: RunConfig = serde_json::from_str(&read(&run.dir.join("config.json"))).unwrap();
    assert_eq!(stored, cfg);
}

#[test]
fn reruns_and_parallelism_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let first = run_trials(&cfg).unwrap();
    let names = ["summary.md", "progression.csv", "progression.svg", "runlog.jsonl", "trials/trial_003.json"];
    let before: Vec<String> = names.iter().map(|n| read(&first.dir.join(n))).collect();
    let parallel = RunConfig { jobs: 4, ..cfg.clone() };
    let second = run_trials(&parallel).unwrap();
    assert_eq!(first.dir, second.dir);
    for (n, b) in names.iter().zip(&before) {
        let after = read(&second.dir.join(n));
        // Latency fields in the run log are wall-clock measurements.
        if *n == "runlog.jsonl" {
            assert_eq!(after.lines().count(), b.lines().count());
        } else {
            assert_eq!(&after, b, "{n}");
        }
    }
}

#[test]
fn report_regeneration_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        engine: Engine::Ga,
        trials: 4,
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let run = run_trials(&cfg).unwrap();
    let names = ["summary.md", "progression.csv", "progression.svg"];
    let before: Vec<String> = names.iter().map(|n| read(&run.dir.join(n))).collect();
    for n in names {
        fs::remove_file(run.dir.join(n)).unwrap();
    }
    let summary = regenerate_reports(&run.dir).unwrap();
    assert_eq!(summary, before[0]);
    for (n, b) in names.iter().zip(&before) {
        assert_eq!(&read(&run.dir.join(n)), b, "{n}");
    }
}

#[test]
fn summary_matches_brute_force_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        engine: Engine::Random,
        random_budget: 40,
        trials: 7,
        base_seed: 100,
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let run = run_trials(&cfg).unwrap();
    let mut best = Vec::new();
    let mut steps = Vec::new();
    for i in 0..7 {
        let v: serde_json::Value = serde_json::from_str(&read(&run.dir.join(format!("trials/trial_{i:03}.json")))).unwrap();
        assert_eq!(v["status"], "ok");
        assert_eq!(v["seed"], 100 + i);
        best.push(v["best_score"].as_f64().unwrap());
        steps.push(v["steps_to_best"].as_f64().unwrap());
    }
    // Sum-of-squares form, independent of the two-pass implementation.
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let sum: f64 = xs.iter().sum();
        let sq: f64 = xs.iter().map(|x| x * x).sum();
        (sum / n, ((sq - sum * sum / n) / (n - 1.0)).sqrt())
    };
    let (mb, sb) = stats(&best);
    let (ms, ss) = stats(&steps);
    let s = &run.stats[0];
    assert_eq!(s.trials, 7);
    assert!((s.mean_best - mb).abs() < 1e-9 && (s.std_best - sb).abs() < 1e-6);
    assert!((s.mean_steps - ms).abs() < 1e-9 && (s.std_steps - ss).abs() < 1e-6);
    assert!(run.summary.contains(&format!("| random | {mb:.2} ± {sb:.2} |")));
    assert!(run.summary.contains(&format!("| random | {ms:.2} ± {ss:.2} |")));
}

#[test]
fn single_trial_reports_zero_std_with_note() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        engine: Engine::Ga,
        trials: 1,
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let run = run_trials(&cfg).unwrap();
    assert!(run.summary.contains("## Best Scores for 1 Optimization Trials"));
    let row = run.summary.lines().find(|l| l.starts_with("| ga †")).unwrap();
    assert!(row.ends_with("± 0.00 |"), "{row}");
    assert!(run.summary.contains("† Single trial"));
}

#[test]
fn failed_trials_are_recorded_and_excluded() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("short.jsonl");
    fs::write(
        &transcript,
        r#"{"step":0,"prompt":"p","response":"<sol> 1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0,0.0,1.0,0.0,1.0,0.0,1.0,0.0 <\\sol>","latency_secs":0.0}"#
            .to_string()
            + "\n",
    )
    .unwrap();
    let mut cfg = RunConfig {
        trials: 2,
        output_dir: dir.path().join("out"),
        ..Default::default()
    };
    cfg.generator.backend = lattice_opro::llm::Backend::Replay;
    cfg.generator.transcript = Some(transcript);
    cfg.loop_cfg.max_steps = 3;
    let run = run_trials(&cfg).unwrap();
    assert!(run.outcomes.iter().all(|o| matches!(o, TrialOutcome::Failed { .. })));
    let stored: serde_json::Value = serde_json::from_str(&read(&run.dir.join("trials/trial_001.json"))).unwrap();
    assert_eq!(stored["status"], "failed");
    assert!(stored["error"].as_str().unwrap().contains("exhausted"));
    assert!(run.summary.contains("2 failed trial(s) excluded (trial 0, 1)"));
    assert!(run.summary.contains("| n/a |"));
}

#[test]
fn mixed_outcomes_only_count_successes() {
    let outcomes = vec![
        TrialOutcome::Ok(synthetic(0, &[10.0, 20.0, 30.0])),
        TrialOutcome::Failed {
            trial: 1,
            seed: 1,
            label: "ga".into(),
            error: "boom".into(),
        },
        TrialOutcome::Ok(synthetic(2, &[50.0, 50.0, 50.0])),
    ];
    let stats = summarize(&outcomes);
    assert_eq!(stats.len(), 1);
    assert_eq!(stats[0].trials, 2);
    assert_eq!(stats[0].failed, vec![1]);
    assert_eq!(stats[0].mean_best, 40.0);
    assert!((stats[0].std_best - 200f64.sqrt()).abs() < 1e-12);
    assert_eq!(stats[0].mean_steps, 1.0);
    let md = emit_markdown_tables(&stats);
    assert!(md.contains("| ga | 40.00 ± 14.14 |"));
    assert!(md.contains("| ga | 1.00 ± 1.41 |"));
}

#[test]
fn perfect_scores_format_like_the_reference_table() {
    let outcomes: Vec<_> = (0..3).map(|i| TrialOutcome::Ok(synthetic(i, &[90.0, 100.0]))).collect();
    let md = emit_markdown_tables(&summarize(&outcomes));
    assert!(md.contains("| ga | 100.00 ± 0.00 |"));
}

#[test]
fn progression_csv_and_chart() {
    let r = synthetic(0, &[1.0, 2.0, 2.5, 4.0]);
    let csv = progression_csv(std::slice::from_ref(&r));
    assert_eq!(csv, "step,trial,best_so_far\n1,0,2\n2,0,2.5\n3,0,4\n");

    let svg = progression_svg(&[r, synthetic(1, &[0.0, 3.0, 3.0, 3.5])]);
    assert_eq!(svg.matches("<polyline").count(), 2);
    for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
        let pts = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        let ys: Vec<f64> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
        // Higher scores plot higher, i.e. at smaller y.
        assert!(ys.windows(2).all(|w| w[1] <= w[0]), "{ys:?}");
    }
    assert!(svg.contains("Optimization step") && svg.contains("Best score"));

    let empty = synthetic(0, &[5.0]);
    assert_eq!(progression_csv(std::slice::from_ref(&empty)), "step,trial,best_so_far\n");
    let svg = progression_svg(&[empty]);
    assert!(svg.contains("<line") && !svg.contains("<polyline"));
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lattice-opro")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn cli_evaluate_reports_consistent_score() {
    let (code, out, _) = cli(&["evaluate", "--solution", "1.4,2.2,2.6,4.2,5.0,4.7,3.7,4.1,8.0,4.9,7.0,5.0,6.0,5.0,8.0"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let (k, p, s) = (v["kinf"].as_f64().unwrap(), v["ppf"].as_f64().unwrap(), v["score"].as_f64().unwrap());
    assert!((score(k, p, &ScoreConfig::default()).unwrap() - s).abs() < 1e-12);
}

#[test]
fn cli_prompt_and_usage_errors() {
    let (code, out, _) = cli(&["prompt", "--strategy", "detailed"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("You are an optimization agent"));
    let (code, out, _) = cli(&["prompt", "--strategy", "no_context", "--batch-size", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("Generate exactly 4 new solutions"));

    let (code, out, err) = cli(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("Usage") && err.contains("evaluate"));

    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("trials"));

    let (code, _, err) = cli(&["evaluate", "--solution", "1,2,3"]);
    assert_eq!(code, 2);
    assert!(err.contains("15"));
    let (code, _, _) = cli(&["trials", "--config", "/nonexistent/run.json"]);
    assert_eq!(code, 2);
}

#[test]
fn cli_trials_with_config_file_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(&cfg_path, r#"{"engine": "ga", "trials": 5, "ga": {"generations": 5}}"#).unwrap();
    let out_dir = dir.path().join("runs");
    let (code, out, err) = cli(&[
        "trials",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trials",
        "3",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("Best Scores for 3 Optimization Trials"));
    let run_dir = fs::read_dir(&out_dir).unwrap().next().unwrap().unwrap().path();
    assert!(run_dir.file_name().unwrap().to_string_lossy().starts_with("ga-"));
    let stored: RunConfig = serde_json::from_str(&read(&run_dir.join("config.json"))).unwrap();
    assert_eq!((stored.trials, stored.ga.generations), (3, 5));

    let summary = read(&run_dir.join("summary.md"));
    let csv = read(&run_dir.join("progression.csv"));
    let (code, out, _) = cli(&["report", "--run-dir", run_dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out, summary);
    assert_eq!(read(&run_dir.join("progression.csv")), csv);
}

#[test]
fn cli_optimize_writes_report_and_runlog() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let runlog = dir.path().join("runlog.jsonl");
    let (code, out, err) = cli(&[
        "optimize",
        "--max-steps",
        "4",
        "--seed",
        "3",
        "--output",
        report.to_str().unwrap(),
        "--runlog",
        runlog.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let summary: serde_json::Value = serde_json::from_str(&out).unwrap();
    let full: TrialReport = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(summary["best_score"].as_f64().unwrap(), full.best_score);
    assert_eq!(full.seed, 3);
    assert_eq!(read(&runlog).lines().count(), full.total_steps);
}
