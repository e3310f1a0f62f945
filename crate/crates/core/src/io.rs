//! Plot-ready output: CSV tables and JSON summaries.
//!
//! Every artifact carries the run configuration: CSV files open with a
//! `# config: {...}` line, JSON summaries hold it under `"config"`.
//! Floats are written as `{:.16e}` (17 significant digits).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::error::Result;
use crate::scalar::{to_f64, Real};
use crate::solver::Trajectory;

pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn header_line<W: Write>(out: &mut W, echo: &serde_json::Value) -> Result<()> {
    writeln!(out, "# config: {}", serde_json::to_string(echo)?)?;
    Ok(())
}

/// `t, |c|_V, |c|_W, Q` per stored time, then the coefficients when `coefficients` is set.
pub fn write_trajectory_csv<T: Real, W: Write>(
    out: &mut W,
    traj: &Trajectory<T>,
    lambdas: &DVector<T>,
    echo: &serde_json::Value,
    coefficients: bool,
) -> Result<()> {
    header_line(out, echo)?;
    let mut cols = vec!["t".to_string(), "norm_v".into(), "norm_w".into(), "q".into()];
    if coefficients {
        cols.extend((0..lambdas.len()).map(|i| format!("c{i}")));
    }
    writeln!(out, "{}", cols.join(","))?;
    for ((t, c), q) in traj.times.iter().zip(&traj.states).zip(&traj.q) {
        let w2 = c.dot(c);
        let v2 = c.iter().zip(lambdas.iter()).fold(T::zero(), |s, (x, l)| s + *x * *x / *l);
        let mut row = vec![sci(to_f64(*t)), sci(to_f64(v2.sqrt())), sci(to_f64(w2.sqrt())), sci(to_f64(*q))];
        if coefficients {
            row.extend(c.iter().map(|x| sci(to_f64(*x))));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// One row per point: index, W-norm, coefficients.
pub fn write_cloud_csv<T: Real, W: Write>(out: &mut W, points: &[DVector<T>], echo: &serde_json::Value) -> Result<()> {
    header_line(out, echo)?;
    let n = points.first().map_or(0, |p| p.len());
    let mut cols = vec!["point".to_string(), "norm_w".into()];
    cols.extend((0..n).map(|i| format!("c{i}")));
    writeln!(out, "{}", cols.join(","))?;
    for (k, p) in points.iter().enumerate() {
        let mut row = vec![k.to_string(), sci(to_f64(p.norm()))];
        row.extend(p.iter().map(|x| sci(to_f64(*x))));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Frame, Integrator, SolverConfig};

    #[test]
    fn csv_rows_round_trip() {
        let cfg = SolverConfig {
            nu: 0.1,
            alpha: 0.1,
            epsilon: 0.5,
            n: 2,
            grid_n: 4,
            dt: 0.1,
            t_start: 0.0,
            t_end: 0.1,
            integrator: Integrator::Rk4,
            nonlinear: true,
        };
        let traj = Trajectory {
            frame: Frame::V,
            times: vec![0.0, 0.1],
            states: vec![DVector::from_vec(vec![3.0, 4.0]), DVector::from_vec(vec![1.0 / 3.0, 0.0])],
            q: vec![1.0, 1.25],
            datum_w_norm_sq: 25.0,
            config: cfg.clone(),
            path_seed: 7,
        };
        let lambdas = DVector::from_vec(vec![1.0, 4.0]);
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj, &lambdas, &cfg.echo(), true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# config: {"));
        assert_eq!(lines[1], "t,norm_v,norm_w,q,c0,c1");
        let row: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 13f64.sqrt(), 5.0, 1.0, 3.0, 4.0]);
        let third: f64 = lines[3].split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
    }
}
