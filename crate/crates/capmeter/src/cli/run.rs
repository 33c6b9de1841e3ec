use serde_json::json;

use super::data::{build_learner, load_dataset};
use super::manifest::RunManifest;
use super::{sibling, write_file, CliError, RunArgs};
use crate::protocol::{
    estimate_avg_energy, parse_grid, run_protocol, write_records, EnergyScale, ProtocolConfig, ProtocolError,
    RecordFile,
};

pub(crate) fn cmd_run(args: &RunArgs, jobs: usize, command_line: &[String]) -> Result<(), CliError> {
    let n_grid = parse_grid(&args.n_grid).map_err(|e| CliError::config(e.to_string()))?;
    let config = ProtocolConfig {
        n_boots: args.boots,
        k_folds: args.folds,
        m_seeds: args.seeds,
        n_grid,
        master_seed: args.seed,
    };
    let max_n = config.n_grid.last().copied().unwrap_or(0);
    let (dataset, dataset_id, input) = load_dataset(&args.data, 2 * max_n)?;
    let learner = build_learner(args.learner, &args.hyper)?;
    config.validate(dataset.len()).map_err(|e| CliError::config(e.to_string()))?;

    let run = run_protocol(&dataset, &dataset_id, learner.as_ref(), &config, jobs).map_err(|e| match e {
        ProtocolError::TrainingFailure { .. } => CliError::training(e.to_string()),
        other => CliError::config(other.to_string()),
    })?;
    let curve = estimate_avg_energy(&run.records).map_err(|e| CliError::training(e.to_string()))?;

    let manifest_path = sibling(&args.out, ".manifest.json");
    let curve_path = sibling(&args.out, ".curve.csv");
    let mut manifest = RunManifest::new(
        command_line,
        json!({
            "command": "run",
            "dataset_id": dataset_id,
            "dataset_rows": dataset.len(),
            "learner": learner.name(),
            "n_grid": config.n_grid,
            "boots": config.n_boots,
            "folds": config.k_folds,
            "seeds": config.m_seeds,
            "synthetic": args.data.synthetic,
        }),
        config.master_seed,
    );
    if let Some(path) = input {
        manifest.add_input(path)?;
    }
    manifest.write(&manifest_path)?;

    let manifest_name = manifest_path.file_name().unwrap_or_default().to_string_lossy().into_owned();
    let mut file = RecordFile::new(run.records, EnergyScale::Nll);
    file.metadata.push(("manifest".into(), manifest_name.clone()));
    file.metadata.push(("timestamp".into(), manifest.timestamp.clone()));
    write_records(&args.out, &file).map_err(|e| CliError::config(e.to_string()))?;
    write_file(&curve_path, &format!("# manifest={manifest_name}\n{curve}"))?;

    if run.clamp_events > 0 {
        eprintln!("warning: {} held-out losses were clamped", run.clamp_events);
    }
    println!("dataset={dataset_id} learner={} records={}", learner.name(), file.records.len());
    println!("{:>8} {:>12} {:>12}", "N", "U", "stderr");
    for p in &curve.points {
        println!("{:>8} {:>12.6} {:>12.6}", p.n, p.u_mean, p.u_stderr);
    }
    println!("records: {}", args.out.display());
    println!("curve: {}", curve_path.display());
    Ok(())
}
