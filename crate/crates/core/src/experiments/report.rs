use std::fmt::Write;
use std::path::Path;

use super::svg::{line_chart, Series};
use super::{io_err, ExperimentError, LagCorrelation, LossStats, Result, RunRecord, RunStatus};

/// Rendered sweep report. Charts are `None` when there was nothing to plot;
/// `notes` says why.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub csv: String,
    pub loss_chart_svg: Option<String>,
    pub correlation_svg: Option<String>,
    pub notes: Vec<String>,
}

impl ReportBundle {
    /// Writes `report.csv`, the SVG charts that exist and `notes.txt`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let put = |name: &str, text: &str| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| io_err(&p, e))
        };
        put("report.csv", &self.csv)?;
        if let Some(svg) = &self.loss_chart_svg {
            put("loss_curves.svg", svg)?;
        }
        if let Some(svg) = &self.correlation_svg {
            put("lag_correlation.svg", svg)?;
        }
        let mut notes = self.notes.join("\n");
        notes.push('\n');
        put("notes.txt", &notes)
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

/// One CSV row per record (config numbers start at 1), a blank line, then
/// seven statistics lines.
pub fn render_report(
    records: &[RunRecord],
    stats: Option<&LossStats>,
    correlations: &[LagCorrelation],
) -> Result<ReportBundle> {
    if records.is_empty() {
        return Err(ExperimentError::TooFew { needed: 1, found: 0 });
    }
    let mut notes = Vec::new();
    let mut csv = String::from("config,test_loss,input_size,iters,solver_type,nn_size,trial,train_loss,status\n");
    for r in records {
        let status = match &r.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Diverged(why) => format!("diverged: {}", why.replace([',', '\n'], " ")),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.config_id + 1,
            num(r.test_loss),
            r.point.input_size,
            r.point.iters,
            r.point.solver,
            r.point.nn_size,
            r.trial,
            num(r.train_loss),
            status
        );
    }
    match stats {
        Some(s) => {
            csv.push('\n');
            for (name, v) in [
                ("Mean", Some(s.mean)),
                ("Median", Some(s.median)),
                ("SD", Some(s.sd)),
                ("Min", Some(s.min)),
                ("Max", Some(s.max)),
                ("Range", Some(s.range)),
                ("(Mean-Min)/SD", s.spread),
            ] {
                let _ = writeln!(csv, "{name},{}", num(v));
            }
        }
        None => notes.push("test-loss statistics omitted: fewer than two successful runs".into()),
    }

    let mut series = Vec::new();
    for r in records {
        if let Some(h) = &r.history {
            let label = format!("#{} {} {}", r.config_id + 1, r.point.solver, r.point.nn_size);
            series.push(Series {
                name: format!("{label} test"),
                points: h.records.iter().map(|e| (e.iteration as f64, e.test_loss)).collect(),
                dashed: false,
            });
            series.push(Series {
                name: format!("{label} train"),
                points: h.records.iter().map(|e| (e.iteration as f64, e.train_loss)).collect(),
                dashed: true,
            });
        }
    }
    let loss_chart_svg = if series.iter().any(|s| !s.points.is_empty()) {
        Some(line_chart("Train and test loss", "iteration", "loss", &series))
    } else {
        notes.push("loss chart omitted: no training histories".into());
        None
    };

    let defined: Vec<(f64, f64)> = correlations
        .iter()
        .filter_map(|c| c.correlation.map(|v| (c.lag as f64, v)))
        .collect();
    let correlation_svg = if defined.is_empty() {
        notes.push("lag correlation chart omitted: empty correlation table".into());
        None
    } else {
        Some(line_chart(
            "Lagged train/test correlation",
            "lag",
            "correlation",
            &[Series {
                name: "pearson r".into(),
                points: defined,
                dashed: false,
            }],
        ))
    };
    Ok(ReportBundle {
        csv,
        loss_chart_svg,
        correlation_svg,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{loss_stats, GridPoint};
    use crate::neuralnet::SolverKind;

    fn records(losses: &[f64]) -> Vec<RunRecord> {
        losses
            .iter()
            .enumerate()
            .map(|(i, &l)| RunRecord {
                config_id: i,
                trial: 0,
                seed: i as u64,
                point: GridPoint {
                    input_size: 2,
                    iters: 2000,
                    solver: if i < 5 { SolverKind::Adam } else { SolverKind::Sgd },
                    nn_size: 16,
                },
                train_loss: Some(l),
                test_loss: Some(l),
                status: RunStatus::Ok,
                history: None,
            })
            .collect()
    }

    #[test]
    fn ten_rows_and_seven_stats() {
        let losses: Vec<f64> = (0..10).map(|i| 0.17 + i as f64 * 0.001).collect();
        let stats = loss_stats(&losses).unwrap();
        let b = render_report(&records(&losses), Some(&stats), &[]).unwrap();
        let mut parts = b.csv.split("\n\n");
        let table = parts.next().unwrap();
        let block = parts.next().unwrap();
        assert_eq!(table.lines().count(), 11);
        assert!(table.lines().nth(1).unwrap().starts_with("1,0.170000,2,2000,Adam,16"));
        assert_eq!(block.lines().count(), 7);
        assert!(block.lines().last().unwrap().starts_with("(Mean-Min)/SD,"));
        assert!(b.correlation_svg.is_none());
        assert!(b.notes.iter().any(|n| n.contains("correlation")));
        assert_eq!(b, render_report(&records(&losses), Some(&stats), &[]).unwrap());
    }
}
