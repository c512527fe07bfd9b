//! Standalone matplotlib scripts generated from output CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::output::write_atomic;
use crate::CliError;

pub const SWEEP_HEADER: &str = "epsilon,h_far,dofs,defect,delta_eps,lambda1_re,lambda1_im,status,seconds";
pub const SPECTRUM_HEADER: &str = "re,im,residual,status";
pub const NUMRANGE_HEADER: &str = "re,im,theta,excess,status";
pub const DECAY_HEADER: &str = "t,norm,bound,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Sweep,
    Spectrum,
    NumRange,
    Decay,
}

impl PlotKind {
    pub fn header(&self) -> &'static str {
        match self {
            PlotKind::Sweep => SWEEP_HEADER,
            PlotKind::Spectrum => SPECTRUM_HEADER,
            PlotKind::NumRange => NUMRANGE_HEADER,
            PlotKind::Decay => DECAY_HEADER,
        }
    }

    pub fn from_header(header: &str) -> Option<Self> {
        [PlotKind::Sweep, PlotKind::Spectrum, PlotKind::NumRange, PlotKind::Decay]
            .into_iter()
            .find(|k| k.header() == header)
    }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn column(&self, name: &str) -> Vec<f64> {
        let k = self.header.iter().position(|h| h == name).expect("column checked against header");
        self.rows.iter().map(|r| r[k].parse().unwrap_or(f64::NAN)).collect()
    }
}

fn read_csv(path: &Path, kind: PlotKind) -> Result<Csv, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header_line = lines.next().unwrap_or("");
    if header_line != kind.header() {
        return Err(CliError::Validation(format!(
            "{}: header {header_line:?} does not match the {kind:?} layout",
            path.display()
        )));
    }
    let header: Vec<String> = header_line.split(',').map(String::from).collect();
    let status = header.iter().position(|h| h == "status").unwrap();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect::<Vec<_>>())
        .filter(|r| r.len() == header.len() && r[status] == "ok")
        .collect();
    Ok(Csv { header, rows })
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| if x.is_finite() { format!("{x:e}") } else { "float('nan')".into() }).collect();
    format!("[{}]", items.join(", "))
}

/// Writes `<csv stem>.plot.py` next to the CSV and returns its path.
pub fn emit_plotscript(csv: &Path, kind: PlotKind) -> Result<PathBuf, CliError> {
    let data = read_csv(csv, kind)?;
    let mut s = String::from("import math\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\nfig, ax = plt.subplots()\n");
    let stem = csv.file_stem().and_then(|n| n.to_str()).unwrap_or("plot");
    if data.rows.is_empty() {
        s.push_str("ax.text(0.5, 0.5, \"no data\", ha=\"center\", va=\"center\", transform=ax.transAxes)\n");
    } else {
        match kind {
            PlotKind::Sweep => {
                let _ = writeln!(s, "eps = {}", list(&data.column("epsilon")));
                let _ = writeln!(s, "defect = {}", list(&data.column("defect")));
                let _ = writeln!(s, "delta = {}", list(&data.column("delta_eps")));
                s.push_str(
                    "ax.loglog(eps, defect, \"o-\", label=\"defect\")\n\
                     if not all(math.isnan(d) for d in delta):\n    ax.loglog(eps, delta, \"s--\", label=\"delta_eps\")\n\
                     ax.set_xlabel(\"epsilon\")\nax.set_ylabel(\"L2 defect\")\nax.legend()\n",
                );
            }
            PlotKind::Spectrum => {
                let _ = writeln!(s, "re = {}", list(&data.column("re")));
                let _ = writeln!(s, "im = {}", list(&data.column("im")));
                s.push_str("ax.scatter(re, im, s=12)\nax.set_xlabel(\"Re\")\nax.set_ylabel(\"Im\")\n");
            }
            PlotKind::NumRange => {
                let re = data.column("re");
                let _ = writeln!(s, "re = {}", list(&re));
                let _ = writeln!(s, "im = {}", list(&data.column("im")));
                let theta = data.column("theta")[0];
                let _ = writeln!(s, "slope = {:e}", theta.tan());
                s.push_str(
                    "xmax = max(re) * 1.1\n\
                     ax.scatter(re, im, s=8, label=\"samples\")\n\
                     ax.plot([0, xmax], [0, slope * xmax], \"k--\", label=\"sector\")\n\
                     ax.plot([0, xmax], [0, -slope * xmax], \"k--\")\n\
                     ax.set_xlabel(\"Re\")\nax.set_ylabel(\"Im\")\nax.legend()\n",
                );
            }
            PlotKind::Decay => {
                let _ = writeln!(s, "t = {}", list(&data.column("t")));
                let _ = writeln!(s, "norm = {}", list(&data.column("norm")));
                let _ = writeln!(s, "bound = {}", list(&data.column("bound")));
                s.push_str(
                    "ax.semilogy(t, norm, \"o-\", label=\"norm\")\n\
                     ax.semilogy(t, bound, \"k--\", label=\"bound\")\n\
                     ax.set_xlabel(\"t\")\nax.legend()\n",
                );
            }
        }
    }
    let _ = writeln!(s, "fig.savefig(\"{stem}.png\", dpi=150)");
    let out = csv.with_file_name(format!("{stem}.plot.py"));
    write_atomic(&out, s.as_bytes())?;
    Ok(out)
}
