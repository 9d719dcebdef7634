//! On-disk formats: versioned loop JSON, ensemble sample JSON, trajectory
//! CSV, and run metadata. Formats are plain enough for any external oracle
//! script to read.

use crate::error::Error;
use crate::euler::EulerSample;
use crate::integrate::Trajectory;
use crate::loops::{MomentumLoop, SpatialLoop};
use crate::vec3::{CVec3, Rotation, Vec3};
use crate::Result;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::io::Write;
use std::path::Path;

pub const LOOP_FORMAT: &str = "mloop-loop/1";
pub const SAMPLE_FORMAT: &str = "mloop-sample/1";

#[derive(Serialize, Deserialize)]
struct LoopFile {
    format: String,
    #[serde(rename = "N")]
    n: usize,
    complex: bool,
    vertices: serde_json::Value,
}

/// Either kind of polygon, as read from a loop file.
#[derive(Debug)]
pub enum AnyLoop {
    Spatial(SpatialLoop),
    Momentum(MomentumLoop),
}

pub fn spatial_loop_to_json(c: &SpatialLoop) -> serde_json::Value {
    json!({
        "format": LOOP_FORMAT,
        "N": c.n(),
        "complex": false,
        "vertices": c.vertices().iter().map(|v| v.0).collect::<Vec<_>>(),
    })
}

pub fn momentum_loop_to_json(p: &MomentumLoop) -> serde_json::Value {
    json!({
        "format": LOOP_FORMAT,
        "N": p.n(),
        "complex": true,
        "dimensionless": p.dimensionless,
        "vertices": p
            .vertices()
            .iter()
            .map(|v| [[v.0[0].re, v.0[0].im], [v.0[1].re, v.0[1].im], [v.0[2].re, v.0[2].im]])
            .collect::<Vec<_>>(),
    })
}

pub fn loop_from_json(value: &serde_json::Value) -> Result<AnyLoop> {
    let file: LoopFile = serde_json::from_value(value.clone())?;
    if file.format != LOOP_FORMAT {
        return Err(Error::invalid(format!(
            "format: expected \"{LOOP_FORMAT}\", got \"{}\"",
            file.format
        )));
    }
    if file.complex {
        let raw: Vec<[[f64; 2]; 3]> = serde_json::from_value(file.vertices)
            .map_err(|e| Error::invalid(format!("vertices: {e}")))?;
        if raw.len() != file.n {
            return Err(Error::invalid(format!(
                "N: header says {} but vertices holds {}",
                file.n,
                raw.len()
            )));
        }
        let dimensionless = value
            .get("dimensionless")
            .and_then(|v| v.as_bool())
            .unwrap_or(true);
        let vertices = raw
            .iter()
            .map(|v| {
                CVec3::new(
                    Complex64::new(v[0][0], v[0][1]),
                    Complex64::new(v[1][0], v[1][1]),
                    Complex64::new(v[2][0], v[2][1]),
                )
            })
            .collect();
        Ok(AnyLoop::Momentum(MomentumLoop::new(vertices, dimensionless)?))
    } else {
        let raw: Vec<[f64; 3]> = serde_json::from_value(file.vertices)
            .map_err(|e| Error::invalid(format!("vertices: {e}")))?;
        if raw.len() != file.n {
            return Err(Error::invalid(format!(
                "N: header says {} but vertices holds {}",
                file.n,
                raw.len()
            )));
        }
        Ok(AnyLoop::Spatial(SpatialLoop::new(
            raw.iter().map(|&v| Vec3(v)).collect(),
        )?))
    }
}

pub fn read_loop(path: &Path) -> Result<AnyLoop> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    loop_from_json(&value)
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}

pub fn sample_to_json(s: &EulerSample) -> serde_json::Value {
    let f = s.momentum_loop();
    json!({
        "format": SAMPLE_FORMAT,
        "p": s.p,
        "q": s.q,
        "r": s.r,
        "sigma": s.sigma,
        "omega": s.omega.0,
        "F": momentum_loop_to_json(&f),
    })
}

pub fn sample_from_json(value: &serde_json::Value) -> Result<EulerSample> {
    let get = |k: &str| {
        value
            .get(k)
            .ok_or_else(|| Error::invalid(format!("{k}: missing field")))
    };
    let p = get("p")?
        .as_u64()
        .ok_or_else(|| Error::invalid("p: must be a positive integer"))?;
    let q = get("q")?
        .as_u64()
        .ok_or_else(|| Error::invalid("q: must be a positive integer"))?;
    let r = get("r")?
        .as_i64()
        .ok_or_else(|| Error::invalid("r: must be an integer"))?;
    let sigma: Vec<i8> = serde_json::from_value(get("sigma")?.clone())
        .map_err(|e| Error::invalid(format!("sigma: {e}")))?;
    let omega: [[f64; 3]; 3] = serde_json::from_value(get("omega")?.clone())
        .map_err(|e| Error::invalid(format!("omega: {e}")))?;
    crate::euler::build_sample(p, q, r, sigma, Rotation(omega))
}

pub fn read_sample(path: &Path) -> Result<EulerSample> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    sample_from_json(&value)
}

/// CSV with a header row; fields formatted with full precision.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Trajectory export: one row per (time, vertex) with Re/Im of the three
/// components.
pub fn trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "t,k,re_x,im_x,re_y,im_y,re_z,im_z")?;
    for (t, state) in traj.iter() {
        for (k, v) in state.vertices().iter().enumerate() {
            writeln!(
                w,
                "{t:.17e},{k},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                v.0[0].re, v.0[0].im, v.0[1].re, v.0[1].im, v.0[2].re, v.0[2].im
            )?;
        }
    }
    Ok(())
}

/// Metadata sidecar: enough to reproduce the run bit-exactly.
#[derive(Serialize)]
pub struct RunMeta<'a> {
    pub tool: &'a str,
    pub version: &'a str,
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    pub config: serde_json::Value,
}

pub fn write_meta(path: &Path, meta: &RunMeta) -> Result<()> {
    let mut out = serde_json::to_string_pretty(meta)?;
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}
