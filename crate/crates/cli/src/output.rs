use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use tidal_dunes::cell_solver::PeriodicProfile;
use tidal_dunes::grid::{h1_seminorm, l2_norm, write_field_csv, ScalarField};

use crate::CliError;

pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn field(dir: &Path, name: &str, z: &ScalarField<f64>) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    write_field_csv(z, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn residual_history(dir: &Path, history: &[f64]) -> Result<(), CliError> {
    let mut w = create(dir, "residual_history.csv")?;
    writeln!(w, "iteration,residual")?;
    for (k, r) in history.iter().enumerate() {
        writeln!(w, "{},{:e}", k + 1, r)?;
    }
    w.flush()?;
    Ok(())
}

/// One field per node plus `profile_meta.csv`. The residual column is the
/// periodic residual for marched profiles and the stationary residual of
/// the node for threshold-constrained ones.
pub fn profile(dir: &Path, p: &PeriodicProfile<f64>) -> Result<(), CliError> {
    let mut meta = create(dir, "profile_meta.csv")?;
    writeln!(meta, "theta,residual,threshold_flag,l2,h1")?;
    for (k, (theta, s)) in p.thetas.iter().zip(&p.states).enumerate() {
        field(dir, &format!("profile_{k:04}.csv"), s)?;
        let residual = p.node_residuals.get(k).copied().unwrap_or(0.0).max(p.periodic_residual);
        let flag = p.threshold_flags.get(k).copied().unwrap_or(false);
        writeln!(
            meta,
            "{theta:e},{residual:e},{},{:e},{:e}",
            u8::from(flag),
            l2_norm(s),
            h1_seminorm(s)
        )?;
    }
    meta.flush()?;
    residual_history(dir, &p.residual_history)
}

pub fn profile_norms_json(p: &PeriodicProfile<f64>) -> serde_json::Value {
    let n = &p.norms;
    serde_json::json!({
        "l2_sharp": n.l2,
        "l2_h1_sharp": n.l2_h1,
        "linf_l2": n.linf_l2,
        "linf_h1": n.linf_h1,
        "dtheta_l2_sharp": n.dtheta_l2,
        "laplacian_l2_sharp": n.laplacian_l2,
        "sup_abs_mass": n.sup_abs_mass,
        "dt_l2": n.dt_l2,
        "periodic_residual": p.periodic_residual,
        "wrap_residual": p.wrap_residual,
        "periods": p.periods,
        "max_node_residual": p.node_residuals.iter().fold(0.0f64, |m, &r| m.max(r)),
        "masked_nodes": p.threshold_flags.iter().filter(|&&b| b).count(),
    })
}

pub fn summary(dir: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = create(dir, "summary.json")?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Output(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
