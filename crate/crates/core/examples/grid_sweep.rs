//! The ten-row solver x width grid on the Gaussian toy task, with a short
//! iteration budget, rendered as a CSV report and SVG charts.

use debris_edge::experiments::{lagged_correlation, loss_stats, render_report, run_grid, SweepConfig, ToyTask};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut grid = SweepConfig::reference_grid(42);
    grid.axes.iters = vec![300];
    grid.workers = 2;
    let records = run_grid(&grid, &ToyTask::default())?;

    let test: Vec<f64> = records.iter().filter_map(|r| r.test_loss).collect();
    let train: Vec<f64> = records.iter().filter_map(|r| r.train_loss).collect();
    let stats = loss_stats(&test)?;
    let lags = lagged_correlation(&train, &test, 3)?;
    let bundle = render_report(&records, Some(&stats), &lags)?;
    print!("{}", bundle.csv);

    let out = std::env::temp_dir().join("debris_edge_sweep");
    bundle.write_to(&out)?;
    println!("report written to {}", out.display());
    Ok(())
}
