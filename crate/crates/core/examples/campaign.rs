//! A small configured campaign written to disk, then aggregated the way
//! `dqml report` does.

use dqml::campaign::{aggregate, cmd_dnn, DnnCampaign, RunsTable};
use dqml::train::TrainConfig;

fn main() -> dqml::Result<()> {
    let out = std::env::temp_dir().join("dqml-campaign-example");
    let campaign = DnnCampaign {
        repeats: 3,
        train: TrainConfig { iterations: 300, log_every: 100, ..Default::default() },
        ..Default::default()
    };
    let manifest = cmd_dnn(&campaign, &out)?;
    println!("manifest: {}", manifest.display());
    let summary = aggregate(&[RunsTable::read(&out.join("dnn_runs.csv"))?])?;
    println!("{}", summary.header.join(","));
    for row in &summary.rows {
        println!("{}", row.join(","));
    }
    Ok(())
}
