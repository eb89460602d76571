use anyhow::{ensure, Context, Result};
use cutlearn::graphdata::{save_dataset, Dataset, GraphInstance};
use cutlearn::infer::Predictions;
use cutlearn::model::Checkpoint;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cutlearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutlearn")).args(args).output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two-node graphs whose class is given by the first feature.
fn separable(dir: &Path) -> Result<PathBuf> {
    let node = |c: usize| if c == 0 { vec![-1.0, 1.0] } else { vec![1.0, 1.0] };
    let instances = (0..4)
        .map(|i| {
            let labels = vec![i % 2, (i / 2) % 2];
            let nodes = labels.iter().map(|&c| node(c)).collect();
            let edges = vec![cutlearn::Edge { u: 0, v: 1, features: vec![1.0] }];
            GraphInstance::new(nodes, edges, labels, 2)
        })
        .collect::<cutlearn::Result<Vec<_>>>()?;
    let path = dir.join("sep.jsonl");
    save_dataset(&Dataset::new(2, 1, 2, instances)?, &path)?;
    Ok(path)
}

#[test]
fn generate_is_reproducible() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for p in [&a, &b] {
        let o = cutlearn(&["generate", "--out", arg(p), "--seed", "7", "--instances", "3"]);
        ensure!(o.status.code() == Some(0), "generate failed: {}", text(&o.stderr));
    }
    ensure!(std::fs::read(&a)? == std::fs::read(&b)?);
    let o = cutlearn(&["generate", "--out", arg(&a), "--instances", "0"]);
    ensure!(o.status.code() == Some(1), "zero instances gave {:?}", o.status.code());
    Ok(())
}

#[test]
fn separable_data_trains_and_predicts_perfectly() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let data = separable(dir.path())?;
    let model = dir.path().join("m.json");
    let o = cutlearn(&["train", "--data", arg(&data), "--model", arg(&model)]);
    ensure!(o.status.code() == Some(0), "train: {}", text(&o.stderr));
    let log = std::fs::read_to_string(dir.path().join("m.log.jsonl")).context("default log path")?;
    ensure!(!log.trim().is_empty());
    let pred = dir.path().join("p.json");
    let o = cutlearn(&["predict", "--data", arg(&data), "--model", arg(&model), "--out", arg(&pred), "--strategy", "exact"]);
    ensure!(o.status.code() == Some(0), "predict: {}", text(&o.stderr));
    let preds = Predictions::load(&pred)?;
    ensure!(preds.instances.iter().all(|r| r.exact));
    let metrics = dir.path().join("metrics.json");
    let o = cutlearn(&["evaluate", "--data", arg(&data), "--predictions", arg(&pred), "--out", arg(&metrics)]);
    ensure!(o.status.code() == Some(0), "evaluate: {}", text(&o.stderr));
    ensure!(text(&o.stdout).contains("accuracy"), "stdout: {}", text(&o.stdout));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&metrics)?)?;
    ensure!(report["accuracy"] == 1.0, "report: {report}");
    Ok(())
}

#[test]
fn relaxed_oracle_without_rounding_exits_with_warning() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("d.jsonl");
    ensure!(cutlearn(&["generate", "--out", arg(&data)]).status.success());
    let model = dir.path().join("m.json");
    let o = cutlearn(&["train", "--data", arg(&data), "--model", arg(&model), "--oracle", "qpbo-r", "--no-heuristic"]);
    ensure!(o.status.code() == Some(3), "exit {:?}", o.status.code());
    ensure!(text(&o.stderr).contains("early termination"), "stderr: {}", text(&o.stderr));
    Ok(())
}

#[test]
fn bad_inputs_map_to_exit_codes() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let missing = dir.path().join("nope.jsonl");
    let model = dir.path().join("m.json");
    let o = cutlearn(&["train", "--data", arg(&missing), "--model", arg(&model)]);
    ensure!(o.status.code() == Some(1), "missing data gave {:?}", o.status.code());
    ensure!(cutlearn(&["frobnicate"]).status.code() == Some(1));

    // a checkpoint trained on K = 2 cannot label a K = 4 dataset
    let data = separable(dir.path())?;
    ensure!(cutlearn(&["train", "--data", arg(&data), "--model", arg(&model)]).status.success());
    let other = dir.path().join("k4.jsonl");
    ensure!(cutlearn(&["generate", "--out", arg(&other), "--instances", "1"]).status.success());
    let o = cutlearn(&["predict", "--data", arg(&other), "--model", arg(&model), "--out", arg(&dir.path().join("p.json"))]);
    ensure!(o.status.code() == Some(2), "mismatch gave {:?}", o.status.code());
    ensure!(text(&o.stderr).contains("label count K"), "stderr: {}", text(&o.stderr));
    Ok(())
}

#[test]
fn inspect_dumps_one_matrix_per_edge_feature() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let data = separable(dir.path())?;
    let model = dir.path().join("m.json");
    ensure!(cutlearn(&["train", "--data", arg(&data), "--model", arg(&model)]).status.success());
    let out = dir.path().join("dump");
    std::fs::create_dir(&out)?;
    let o = cutlearn(&["inspect", "--model", arg(&model), "--out", arg(&out)]);
    ensure!(o.status.success(), "inspect: {}", text(&o.stderr));
    let csv = std::fs::read_to_string(out.join("pairwise_0.csv"))?;
    let mut lines = csv.lines();
    ensure!(lines.next() == Some("class,0,1"));
    let values: Vec<f64> = lines.flat_map(|l| l.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>()).collect();
    ensure!(values.len() == 4 && values.iter().all(|&v| v >= 0.0), "{values:?}");

    // an all-zero checkpoint prints zero matrices
    let mut zero = Checkpoint::load(&model)?;
    zero.unary.iter_mut().chain(zero.pairwise.iter_mut()).for_each(|v| *v = 0.0);
    zero.save(&model)?;
    let o = cutlearn(&["inspect", "--model", arg(&model)]);
    ensure!(o.status.success());
    let stdout = text(&o.stdout);
    ensure!(stdout.contains("0.0000") && !stdout.contains('-'), "stdout: {stdout}");
    Ok(())
}
