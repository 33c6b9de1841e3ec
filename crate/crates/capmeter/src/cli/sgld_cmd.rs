use std::fmt::Write as _;

use serde_json::json;

use super::data::load_dataset;
use super::manifest::RunManifest;
use super::{sibling, with_threads, write_file, CliError, LearnerKind, SgldArgs};
use crate::learners::{LogisticEnergy, MlpEnergy, Standardizer};
use crate::oracle::{HessianSpectrum, PriorKind};
use crate::protocol::{write_records, EnergyScale, RecordFile};
use crate::sgld::{
    oracle_capacity_fd, oracle_probability_complement, run_incremental_protocol, DifferentiableEnergy,
    QuadraticTestEnergy, SgldConfig, SgldError,
};

fn sgld_error(e: SgldError) -> CliError {
    match e {
        SgldError::MajorityChainFailure { .. } | SgldError::NonFiniteState { .. } => CliError::training(e.to_string()),
        other => CliError::config(other.to_string()),
    }
}

pub(crate) fn cmd_sgld(args: &SgldArgs, jobs: usize, command_line: &[String]) -> Result<(), CliError> {
    let config = SgldConfig {
        step_size: args.step,
        chains: args.chains,
        equilibration_epochs: args.equilibration,
        samples_per_window: args.samples,
        n_schedule: args.schedule.clone(),
        seed: args.seed,
        prior: PriorKind::GaussianIsotropic(args.prior_eps),
        batch_size: args.batch,
        min_steps_per_epoch: args.min_steps,
    };
    let max_n = config.n_schedule.iter().copied().max().unwrap_or(0);

    let mut quadratic_spec = None;
    let mut input = None;
    let (energy, dataset_id): (Box<dyn DifferentiableEnergy>, String) = match args.learner {
        LearnerKind::Knn | LearnerKind::Ridge => {
            return Err(CliError::config(format!(
                "learner not differentiable: `{}` has no weight-space gradient; use quadratic, logistic or mlp",
                if args.learner == LearnerKind::Knn { "knn" } else { "ridge" }
            )))
        }
        LearnerKind::Quadratic => {
            let spec = HessianSpectrum::new(args.lambda.clone(), args.prior_eps, None)
                .map_err(|e| CliError::config(format!("malformed spectrum: {e}")))?;
            let energy = QuadraticTestEnergy::new(&spec).map_err(|e| CliError::config(e.to_string()))?;
            quadratic_spec = Some(spec);
            (Box::new(energy), args.data.dataset_id.clone().unwrap_or_else(|| "quadratic".into()))
        }
        LearnerKind::Logistic | LearnerKind::Mlp => {
            let (data, id, path) = load_dataset(&args.data, 2 * max_n)?;
            input = path.map(|p| p.to_path_buf());
            let all: Vec<usize> = (0..data.len()).collect();
            let data = data.standardized(&Standardizer::fit(&data, &all));
            let energy: Box<dyn DifferentiableEnergy> = if args.learner == LearnerKind::Logistic {
                Box::new(LogisticEnergy::new(data).map_err(|e| CliError::config(e.to_string()))?)
            } else {
                Box::new(MlpEnergy::new(data, args.hidden).map_err(|e| CliError::config(e.to_string()))?)
            };
            (energy, id)
        }
    };

    let run =
        with_threads(jobs, || run_incremental_protocol(energy.as_ref(), &dataset_id, &config))?.map_err(sgld_error)?;
    for (c, e) in &run.failed_chains {
        eprintln!("warning: chain {c} dropped: {e}");
    }

    let manifest_path = sibling(&args.out, ".manifest.json");
    let caps_path = sibling(&args.out, ".capacities.csv");
    let mut manifest = RunManifest::new(
        command_line,
        json!({
            "command": "sgld",
            "dataset_id": dataset_id,
            "learner": format!("{:?}", args.learner).to_lowercase(),
            "hidden": args.hidden,
            "lambda": args.lambda,
            "schedule": config.n_schedule,
            "chains": config.chains,
            "step": config.step_size,
            "equilibration": config.equilibration_epochs,
            "samples": config.samples_per_window,
            "batch": config.batch_size,
            "min_steps": config.min_steps_per_epoch,
            "prior_eps": args.prior_eps,
            "synthetic": args.data.synthetic,
        }),
        config.seed,
    );
    if let Some(path) = &input {
        manifest.add_input(path)?;
    }
    manifest.write(&manifest_path)?;
    let manifest_name = manifest_path.file_name().unwrap_or_default().to_string_lossy().into_owned();

    let mut file = RecordFile::new(run.records, EnergyScale::ProbabilityComplement);
    file.metadata.push(("manifest".into(), manifest_name.clone()));
    file.metadata.push(("timestamp".into(), manifest.timestamp.clone()));
    write_records(&args.out, &file).map_err(|e| CliError::config(e.to_string()))?;

    let mut csv = format!("# manifest={manifest_name}\nn,capacity,stderr\n");
    for c in &run.capacities {
        let _ = writeln!(csv, "{},{:e},{:e}", c.at_n, c.value, c.stderr);
    }
    write_file(&caps_path, &csv)?;

    println!("dataset={dataset_id} chains={} survived={}", config.chains, config.chains - run.failed_chains.len());
    println!("{:>8} {:>12} {:>12} {:>12}", "N", "U", "stderr", "oracle");
    for p in &run.curve.points {
        let oracle = quadratic_spec
            .as_ref()
            .and_then(|s| oracle_probability_complement(s, config.prior, p.n as u64).ok())
            .map_or("-".into(), |v| format!("{v:.6}"));
        println!("{:>8} {:>12.6} {:>12.6} {:>12}", p.n, p.u_mean, p.u_stderr, oracle);
    }
    println!("{:>8} {:>12} {:>12} {:>12}", "N", "C", "stderr", "oracle");
    for (c, pair) in run.capacities.iter().zip(config.n_schedule.windows(2)) {
        let oracle = quadratic_spec
            .as_ref()
            .and_then(|s| oracle_capacity_fd(s, config.prior, pair[0] as u64, (pair[1] - pair[0]) as u64).ok())
            .map_or("-".into(), |v| format!("{v:.6}"));
        println!("{:>8} {:>12.6} {:>12.6} {:>12}", c.at_n, c.value, c.stderr, oracle);
    }
    println!("records: {}", args.out.display());
    println!("capacities: {}", caps_path.display());
    Ok(())
}
