//! Record files and tabular data: writes a record file, reads it back,
//! aggregates per dataset, and loads a small CSV with string labels.
//!
//! `cargo run --release --example records_io`

use capmeter::learners::{parse_tabular, LabelKind};
use capmeter::protocol::{estimate_avg_energy_by_dataset, ingest_records, write_records, EnergyScale, RecordFile};
use capmeter::EnergyRecord;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records: Vec<EnergyRecord> = ["alpha", "beta"]
        .iter()
        .flat_map(|id| {
            (0..2).flat_map(move |boot| {
                (0..5).map(move |fold| EnergyRecord {
                    dataset_id: id.to_string(),
                    sample_size: 100,
                    boot_index: boot,
                    fold_index: fold,
                    seed_index: 0,
                    nll_sum: if *id == "alpha" { 13.0 } else { 7.0 } + boot as f64,
                    heldout_count: 20,
                })
            })
        })
        .collect();
    let dir = std::env::temp_dir().join("capmeter-records-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("demo.records");
    let mut file = RecordFile::new(records, EnergyScale::Nll);
    file.metadata.push(("note".into(), "written by the records_io example".into()));
    write_records(&path, &file)?;

    let back = ingest_records(&path)?;
    println!("read {} records, note = {:?}", back.records.len(), back.meta("note"));
    for (id, curve) in estimate_avg_energy_by_dataset(&back.records)? {
        let p = &curve.points[0];
        println!("{id}: U(100) = {:.4} ± {:.4}", p.u_mean, p.u_stderr);
    }

    let data = parse_tabular("# x1,x2,label\n0.1,1.0,cat\n0.3,0.2,dog\n0.9,0.5,cat\n", LabelKind::Auto)?;
    println!("tabular: {} rows, {} features, {:?} classes", data.len(), data.dim(), data.m_classes());
    Ok(())
}
