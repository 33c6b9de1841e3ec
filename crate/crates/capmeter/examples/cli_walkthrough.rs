//! Drives the `capmeter` command-line front end in-process: generate a
//! curve with `run`, fit it with `fit`, and query the oracle.
//!
//! `cargo run --release --example cli_walkthrough`

fn main() {
    let dir = std::env::temp_dir().join("capmeter-cli-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let out = dir.join("knn.records");
    let report = dir.join("knn.txt");
    let steps: Vec<Vec<String>> = vec![
        vec![
            "run",
            "--synthetic",
            "d=10,kappa=1",
            "--learner",
            "knn",
            "--n-grid",
            "30:2000:10log",
            "--boots",
            "2",
            "--seeds",
            "1",
            "--seed",
            "4",
            "--out",
        ]
        .into_iter()
        .map(String::from)
        .chain([out.display().to_string()])
        .collect(),
        ["fit", "--records", &out.display().to_string(), "--params", "100", "--out", &report.display().to_string()]
            .map(String::from)
            .to_vec(),
        ["oracle", "--lambda", "1,0.1,0.001", "--eps", "0.2", "--n", "101,1000000"].map(String::from).to_vec(),
    ];
    for args in steps {
        println!("$ capmeter {}", args.join(" "));
        if let Err(e) = capmeter::cli::run(std::iter::once("capmeter".to_string()).chain(args)) {
            eprintln!("error: {e}");
            std::process::exit(e.code);
        }
        println!();
    }
}
