//! Flat-file output: per-frame field CSVs, diagnostics, interfaces, Barenblatt
//! error curves and a gnuplot script that plots them.

use std::fs;
use std::path::{Path, PathBuf};

use crate::elliptic;
use crate::error::Result;
use crate::interface::{interior_max, InterfacePair, VACUUM_MARGIN_CELLS};
use crate::model::Trajectory;
use crate::numeric::pow;
use crate::pme::PmeErrorRow;

pub const FIELDS_HEADER: [&str; 6] = ["t", "x", "u", "v", "dxv", "w"];
pub const DIAGNOSTICS_HEADER: [&str; 6] = ["t", "mass", "max_u", "lip_w", "sup_dxv", "linf_ok"];
pub const INTERFACES_HEADER: [&str; 5] = ["t", "xi", "Xi", "cone_mass", "interior_max_u"];
pub const PME_HEADER: [&str; 4] = [
    "t",
    "l1_error",
    "support_edge_numeric",
    "support_edge_exact",
];

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

/// `fields_0000.csv`, `fields_0001.csv`, ... one per frame.
pub fn write_fields(traj: &Trajectory, dir: &Path) -> Result<Vec<PathBuf>> {
    let s = &traj.scenario;
    let coef = s.m / (s.m - 1.0);
    let mut paths = Vec::with_capacity(traj.len());
    for (k, frame) in traj.frames.iter().enumerate() {
        let path = dir.join(format!("fields_{k:04}.csv"));
        let mut w = writer(&path, &FIELDS_HEADER)?;
        let dxv = elliptic::gradient(&frame.u, &frame.v, s.gamma)?;
        let g = frame.u.grid();
        for i in 0..g.n_cells() {
            let u = frame.u.values()[i];
            w.write_record([
                num(frame.t),
                num(g.center(i)),
                num(u),
                num(frame.v.values()[i]),
                num(dxv.values()[i]),
                num(coef * pow(u + s.epsilon, s.m - 1.0)),
            ])?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn write_diagnostics(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = writer(path, &DIAGNOSTICS_HEADER)?;
    for d in &traj.diagnostics {
        w.write_record([
            num(d.t),
            num(d.mass),
            num(d.max_u),
            num(d.lip_w),
            num(d.sup_dxv),
            d.linf.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_interfaces(
    traj: &Trajectory,
    pair: Option<&InterfacePair>,
    path: &Path,
) -> Result<()> {
    let mut w = writer(path, &INTERFACES_HEADER)?;
    if let Some(pair) = pair {
        let margin = VACUUM_MARGIN_CELLS * traj.scenario.grid.dx();
        let n = pair.len().min(traj.len());
        for k in 0..n {
            let u = &traj.frames[k].u;
            let (l, r) = (pair.left[k], pair.right[k]);
            w.write_record([
                num(pair.times[k]),
                num(l),
                num(r),
                num(crate::interface::cone_mass(traj, pair, k)?),
                num(interior_max(u, l + margin, r - margin)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_pme_errors(rows: &[PmeErrorRow], path: &Path) -> Result<()> {
    let mut w = writer(path, &PME_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.t),
            num(r.l1_error),
            num(r.support_edge_numeric),
            num(r.support_edge_exact),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const GNUPLOT_STUB: &str = r#"# gnuplot -persist plot.gp
set datafile separator ","
set key autotitle columnhead

set multiplot layout 2,2
set title "density, first and last frame"
plot first_frame using 2:3 with lines, last_frame using 2:3 with lines
set title "mass and max u"
plot "diagnostics.csv" using 1:2 with lines, "" using 1:3 with lines
set title "pressure slope and sup |dv/dx|"
plot "diagnostics.csv" using 1:4 with lines, "" using 1:5 with lines
set title "interfaces"
plot "interfaces.csv" using 1:2 with lines, "" using 1:3 with lines
unset multiplot
"#;

/// Writes every CSV plus `plot.gp` into `dir`, creating it if needed.
pub fn emit_plots(
    traj: &Trajectory,
    pair: Option<&InterfacePair>,
    pme: Option<&[PmeErrorRow]>,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = write_fields(traj, dir)?;
    let diag = dir.join("diagnostics.csv");
    write_diagnostics(traj, &diag)?;
    files.push(diag);
    let inter = dir.join("interfaces.csv");
    write_interfaces(traj, pair, &inter)?;
    files.push(inter);
    let pme_path = dir.join("pme_error.csv");
    write_pme_errors(pme.unwrap_or(&[]), &pme_path)?;
    files.push(pme_path);
    let last = traj.len().saturating_sub(1);
    let script = format!(
        "first_frame = \"fields_0000.csv\"\nlast_frame = \"fields_{last:04}.csv\"\n{GNUPLOT_STUB}"
    );
    let gp = dir.join("plot.gp");
    fs::write(&gp, script)?;
    files.push(gp);
    Ok(files)
}
