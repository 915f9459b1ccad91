//! CSV, summary and plot-script writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::scheme::{DiagnosticSample, FieldState};

use super::HarnessError;

/// 17 significant digits, which round-trips every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_owned(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<PathBuf, HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(path.to_owned())
}

/// `q,u,v` rows for every node.
pub fn snapshot_csv(field: &FieldState) -> String {
    let mut out = String::from("q,u,v\n");
    for (k, (u, v)) in field.u.iter().zip(&field.v).enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(field.grid.node(k)),
            fmt_f64(*u),
            fmt_f64(*v)
        );
    }
    out
}

pub const DIAGNOSTICS_HEADER: &str = "step,t,max_du,max_dv,l2_du,l2_dv,centroid,picard_iterations";

pub fn diagnostics_csv(samples: &[DiagnosticSample]) -> String {
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for d in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            d.step,
            fmt_f64(d.t),
            fmt_f64(d.max_du),
            fmt_f64(d.max_dv),
            fmt_f64(d.l2_du),
            fmt_f64(d.l2_dv),
            fmt_f64(d.centroid),
            d.picard_iterations
        );
    }
    out
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

/// Gnuplot script plotting `u` and `v` for each snapshot file.
pub fn relaxation_plot_script(snapshots: &[(String, f64)]) -> String {
    let mut out = String::from(
        "# gnuplot -p plot.gp\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set multiplot layout 2,1\n\
         set ylabel 'u'\n",
    );
    let series = |col: usize| {
        snapshots
            .iter()
            .map(|(file, t)| format!("'{file}' using 1:{col} with lines title 't = {t:.4}'"))
            .collect::<Vec<_>>()
            .join(", \\\n     ")
    };
    let _ = writeln!(out, "plot {}", series(2));
    out.push_str("set ylabel 'v'\nset xlabel 'q'\n");
    let _ = writeln!(out, "plot {}", series(3));
    out.push_str("unset multiplot\n");
    out
}

pub fn stability_plot_script() -> String {
    "# gnuplot -p plot.gp\n\
     set datafile separator ','\n\
     set multiplot layout 1,2\n\
     set title 'stability boundary'\n\
     set xlabel 'Re mu'\n\
     set ylabel 'Im mu'\n\
     set size ratio -1\n\
     plot 'gamma_curve.csv' using 2:3 with lines title 'Gamma', \\\n     \
     'gamma_curve.csv' using (3):3 with lines dashtype 2 title 'mu = 3 + is'\n\
     set size noratio\n\
     set title 'max |eta|'\n\
     set xlabel 'a gamma'\n\
     set ylabel 'theta'\n\
     set logscale x\n\
     plot 'stability_map.csv' using 1:2:3 with points palette pointtype 5 title ''\n\
     unset multiplot\n"
        .to_owned()
}
