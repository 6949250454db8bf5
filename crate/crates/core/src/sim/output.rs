//! CSV writers for campaign, sweep and estimate dumps. Plain decimal values,
//! header row first, UTF-8.

use std::io::{self, Write};

use crate::dwlse::DwlseNode;
use crate::linalg::Vector;
use crate::sim::campaign::{CampaignResult, Estimator, MetricSeries, SweepResult};

fn write_mse<W: Write>(out: &mut W, estimator: Estimator, series: &MetricSeries) -> io::Result<()> {
    for (k, row) in series.mse.iter().enumerate() {
        for (s, v) in row.iter().enumerate() {
            writeln!(out, "{},{},{},{}", k + 1, s, estimator.label(), v)?;
        }
    }
    Ok(())
}

/// `step,node,estimator,value`
pub fn write_mse_csv<W: Write>(mut out: W, result: &CampaignResult) -> io::Result<()> {
    writeln!(out, "step,node,estimator,value")?;
    write_mse(&mut out, Estimator::Cif, &result.cif)?;
    write_mse(&mut out, Estimator::Dwlse, &result.dwlse)
}

/// `step,estimator,value`
pub fn write_acee_csv<W: Write>(mut out: W, result: &CampaignResult) -> io::Result<()> {
    writeln!(out, "step,estimator,value")?;
    for (estimator, series) in [(Estimator::Cif, &result.cif), (Estimator::Dwlse, &result.dwlse)] {
        for (k, v) in series.acee.iter().enumerate() {
            writeln!(out, "{},{},{}", k + 1, estimator.label(), v)?;
        }
    }
    Ok(())
}

/// `L,estimator,avg_mse,avg_acee`
pub fn write_sweep_csv<W: Write>(mut out: W, result: &SweepResult) -> io::Result<()> {
    writeln!(out, "L,estimator,avg_mse,avg_acee")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.admm_iters,
            r.estimator.label(),
            r.avg_mse,
            r.avg_acee
        )?;
    }
    Ok(())
}

/// `step,px,py,vx,vy` for `x_0 .. x_K`.
pub fn write_truth_csv<W: Write>(mut out: W, truth: &[Vector]) -> io::Result<()> {
    writeln!(out, "step,px,py,vx,vy")?;
    for (k, x) in truth.iter().enumerate() {
        writeln!(out, "{},{},{},{},{}", k, x[0], x[1], x[2], x[3])?;
    }
    Ok(())
}

/// `step,node,x0..x{m-1},info_trace`, one row per scan and node.
pub fn write_estimates_csv<W: Write>(mut out: W, steps: &[Vec<DwlseNode>]) -> io::Result<()> {
    let m = steps
        .first()
        .and_then(|nodes| nodes.first())
        .map_or(0, |n| n.estimate.dim());
    let cols: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    writeln!(out, "step,node,{},info_trace", cols.join(","))?;
    for (k, nodes) in steps.iter().enumerate() {
        for n in nodes {
            write!(out, "{},{}", k + 1, n.id)?;
            for v in n.estimate.mean().iter() {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{}", n.estimate.info().trace())?;
        }
    }
    Ok(())
}
