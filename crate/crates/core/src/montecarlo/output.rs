use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{OrderFit, WeakErrorReport};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "scheme",
    "n",
    "paths",
    "estimate",
    "stderr",
    "reference",
    "error",
    "seed",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    scheme: &'a str,
    n: usize,
    paths: usize,
    estimate: f64,
    stderr: f64,
    reference: f64,
    error: f64,
    seed: u64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("writing {}: {e}", path.display()))
}

/// Appends the rows of all reports to one CSV file with a single header.
pub fn write_csv(reports: &[WeakErrorReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in reports {
        for row in &r.rows {
            w.serialize(CsvRow {
                scheme: &r.scheme,
                n: row.n,
                paths: row.paths,
                estimate: row.estimate,
                stderr: row.stderr,
                reference: row.reference,
                error: row.error,
                seed: r.seed,
            })
            .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Gnuplot script drawing `error` against `n` on log-log axes, one series per
/// scheme, with the fitted power law where one exists.
pub fn plot_script(reports: &[WeakErrorReport], csv_name: &str, image_name: &str) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale xy\nset key left bottom\n");
    s.push_str("set xlabel 'n'\nset ylabel 'weak error'\n");
    s.push_str(&format!(
        "set terminal pngcairo size 900,600\nset output '{image_name}'\n"
    ));
    let mut plots = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let label = format!("{} f={}", r.scheme, r.function);
        plots.push(format!(
            "'{csv_name}' every ::{}::{} using 2:7 with linespoints title '{label}'",
            1 + reports[..i].iter().map(|r| r.rows.len()).sum::<usize>(),
            reports[..=i].iter().map(|r| r.rows.len()).sum::<usize>(),
        ));
        if let OrderFit::Fitted { slope, intercept, .. } = r.fit {
            s.push_str(&format!("f{i}(x) = exp({intercept}) * x**(-{slope})\n"));
            plots.push(format!(
                "f{i}(x) with lines dashtype 2 title 'fit {label}: slope {slope:.3}'"
            ));
        }
    }
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

pub fn write_plot_script(reports: &[WeakErrorReport], csv_name: &str, path: &Path) -> Result<()> {
    let image = path.with_extension("png");
    let image = image.file_name().and_then(|n| n.to_str()).unwrap_or("weak_error.png");
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(plot_script(reports, csv_name, image).as_bytes())
        .map_err(|e| io_err(path, e))
}
