//! Line format: `VERTEX id qw qx qy qz tx ty tz` and
//! `EDGE i j qw qx qy qz tx ty tz`, `#` starts a comment. Translations are
//! body-frame, as in [`Pose`].

use std::fmt::Write;

use crate::algebra::Quaternion;
use crate::error::{Error, Result};
use crate::pose::Pose;

use super::{Edge, PoseGraph};

/// Largest `||q| − 1|` accepted for a rotation in a file.
pub const TOL_MEASUREMENT: f64 = 1e-6;

/// Rotations this close to unit are kept bit-for-bit, so that canonical
/// output parses back to the same numbers.
const KEEP_AS_UNIT: f64 = 4.0 * f64::EPSILON;

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { line, reason: reason.into() }
}

fn id(token: &str, line: usize) -> Result<usize> {
    match token.parse::<usize>() {
        Ok(0) => Err(parse_err(line, "vertex ids start at 1")),
        Ok(v) => Ok(v),
        Err(_) => Err(parse_err(line, format!("bad vertex id {token:?}"))),
    }
}

fn pose(tokens: &[&str], line: usize) -> Result<Pose> {
    let mut v = [0.0; 7];
    for (slot, t) in v.iter_mut().zip(tokens) {
        *slot = t.parse::<f64>().map_err(|_| parse_err(line, format!("bad number {t:?}")))?;
        if !slot.is_finite() {
            return Err(parse_err(line, format!("non-finite number {t:?}")));
        }
    }
    let q = Quaternion::new(v[0], v[1], v[2], v[3]);
    let norm = q.norm();
    if (norm - 1.0).abs() > TOL_MEASUREMENT {
        return Err(Error::NonUnitMeasurement { line, norm });
    }
    let rotation = if (norm - 1.0).abs() <= KEEP_AS_UNIT { q } else { q.scale(1.0 / norm) };
    Ok(Pose { rotation, translation: [v[4], v[5], v[6]] })
}

/// Parse a graph. The vertex count is the largest id mentioned.
pub fn parse_graph(text: &str) -> Result<PoseGraph> {
    let mut vertices: Vec<(usize, Pose, usize)> = Vec::new();
    let mut edges = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let Some(&kind) = tokens.first() else {
            continue;
        };
        match kind {
            "VERTEX" => {
                if tokens.len() != 9 {
                    return Err(parse_err(line, format!("VERTEX needs 8 fields, got {}", tokens.len() - 1)));
                }
                vertices.push((id(tokens[1], line)?, pose(&tokens[2..], line)?, line));
            }
            "EDGE" => {
                if tokens.len() != 10 {
                    return Err(parse_err(line, format!("EDGE needs 9 fields, got {}", tokens.len() - 1)));
                }
                let (i, j) = (id(tokens[1], line)?, id(tokens[2], line)?);
                if i == j {
                    return Err(parse_err(line, format!("self-loop at vertex {i}")));
                }
                edges.push(Edge { i, j, measurement: pose(&tokens[3..], line)? });
            }
            other => return Err(parse_err(line, format!("unknown record {other:?}"))),
        }
    }
    let n = vertices.iter().map(|v| v.0).chain(edges.iter().flat_map(|e| [e.i, e.j])).max().unwrap_or(0);
    let mut initial = vec![None; n];
    for (v, p, line) in vertices {
        if initial[v - 1].replace(p).is_some() {
            return Err(parse_err(line, format!("duplicate vertex {v}")));
        }
    }
    PoseGraph::new(n, initial, edges)
}

fn push_pose(out: &mut String, p: &Pose) {
    let q = p.rotation;
    let t = p.translation;
    let _ = write!(out, " {} {} {} {} {} {} {}", q.w, q.x, q.y, q.z, t[0], t[1], t[2]);
}

/// Canonical text: vertices with initial guesses by id, then edges in
/// graph order. Parsing it back gives the same graph and text.
pub fn serialize_graph(g: &PoseGraph) -> String {
    let mut out = String::new();
    for (k, p) in g.initial.iter().enumerate() {
        if let Some(p) = p {
            let _ = write!(out, "VERTEX {}", k + 1);
            push_pose(&mut out, p);
            out.push('\n');
        }
    }
    for e in &g.edges {
        let _ = write!(out, "EDGE {} {}", e.i, e.j);
        push_pose(&mut out, &e.measurement);
        out.push('\n');
    }
    out
}

/// Poses of vertices `1..=n` as `VERTEX` records.
pub fn serialize_poses(poses: &[Pose]) -> String {
    let mut out = String::new();
    for (k, p) in poses.iter().enumerate() {
        let _ = write!(out, "VERTEX {}", k + 1);
        push_pose(&mut out, p);
        out.push('\n');
    }
    out
}

/// Parse a pose list written by [`serialize_poses`]; every id from 1 to the
/// largest must be present and edges are rejected.
pub fn parse_poses(text: &str) -> Result<Vec<Pose>> {
    let g = parse_graph(text)?;
    if !g.edges.is_empty() {
        return Err(Error::InvalidGraph("pose list contains EDGE records".into()));
    }
    g.initial
        .iter()
        .enumerate()
        .map(|(k, p)| p.ok_or_else(|| Error::InvalidGraph(format!("pose list misses vertex {}", k + 1))))
        .collect()
}
