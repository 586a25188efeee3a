//! Line-based circuit text format.
//!
//! ```text
//! circuit v1 qubits=4
//! #meta {"q_label":"gamma",...}
//! rx 0 0.9424777960769379
//! cz 0 1
//! --
//! barrier
//! ```
//! One gate per line (kind, qubits, angles), `--` closes a moment and
//! `barrier` marks a barrier before the next moment.

use std::fmt::Write as _;

use crate::{Error, Result};

use super::gate::{Basis, Gate};
use super::{Circuit, CircuitMetadata};

const HEADER: &str = "circuit v1";

fn gate_line(g: &Gate) -> String {
    match *g {
        Gate::Rx { q, theta } | Gate::Ry { q, theta } | Gate::Rz { q, theta } => {
            format!("{} {q} {theta:?}", g.kind())
        }
        Gate::U { q, theta, phi, lambda } => format!("u {q} {theta:?} {phi:?} {lambda:?}"),
        Gate::Cz { a, b } => format!("cz {a} {b}"),
        Gate::Measure { q, .. } | Gate::XFlip { q } => format!("{} {q}", g.kind()),
    }
}

pub fn write_circuit(c: &Circuit) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER} qubits={}", c.n_qubits);
    let _ = writeln!(s, "#meta {}", serde_json::to_string(&c.metadata)?);
    let mut bars = c.barriers.iter().peekable();
    for (k, m) in c.moments.iter().enumerate() {
        while bars.next_if(|&&b| b == k).is_some() {
            s.push_str("barrier\n");
        }
        for g in m {
            s.push_str(&gate_line(g));
            s.push('\n');
        }
        s.push_str("--\n");
    }
    for _ in bars {
        s.push_str("barrier\n");
    }
    Ok(s)
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_gate(line: usize, text: &str) -> Result<Gate> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let idx = |k: usize| -> Result<usize> {
        parts.get(k).ok_or_else(|| perr(line, "missing qubit"))?.parse().map_err(|_| perr(line, "bad qubit index"))
    };
    let ang = |k: usize| -> Result<f64> {
        parts.get(k).ok_or_else(|| perr(line, "missing angle"))?.parse().map_err(|_| perr(line, "bad angle"))
    };
    let expect = |n: usize| -> Result<()> {
        if parts.len() == n {
            Ok(())
        } else {
            Err(perr(line, format!("expected {n} fields, got {}", parts.len())))
        }
    };
    let g = match parts[0] {
        "rx" => Gate::Rx { q: idx(1)?, theta: ang(2)? },
        "ry" => Gate::Ry { q: idx(1)?, theta: ang(2)? },
        "rz" => Gate::Rz { q: idx(1)?, theta: ang(2)? },
        "u" => Gate::U { q: idx(1)?, theta: ang(2)?, phi: ang(3)?, lambda: ang(4)? },
        "cz" => Gate::Cz { a: idx(1)?, b: idx(2)? },
        "measure_x" => Gate::Measure { q: idx(1)?, basis: Basis::X },
        "measure_y" => Gate::Measure { q: idx(1)?, basis: Basis::Y },
        "measure_z" => Gate::Measure { q: idx(1)?, basis: Basis::Z },
        "xflip" => Gate::XFlip { q: idx(1)? },
        other => return Err(perr(line, format!("unknown gate {other:?}"))),
    };
    let n = match g {
        Gate::U { .. } => 5,
        Gate::Rx { .. } | Gate::Ry { .. } | Gate::Rz { .. } | Gate::Cz { .. } => 3,
        _ => 2,
    };
    expect(n)?;
    Ok(g)
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let n_qubits: usize = header
        .strip_prefix(HEADER)
        .and_then(|r| r.trim().strip_prefix("qubits="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(ln, "expected `circuit v1 qubits=N`"))?;
    let mut metadata = CircuitMetadata::default();
    let mut moments = Vec::new();
    let mut barriers = Vec::new();
    let mut current = Vec::new();
    for (ln, l) in lines {
        if let Some(json) = l.strip_prefix("#meta") {
            metadata = serde_json::from_str(json.trim()).map_err(|e| perr(ln, e.to_string()))?;
        } else if l.starts_with('#') {
            continue;
        } else if l == "--" {
            moments.push(std::mem::take(&mut current));
        } else if l == "barrier" {
            if !current.is_empty() {
                return Err(perr(ln, "barrier inside an open moment"));
            }
            barriers.push(moments.len());
        } else {
            let g = parse_gate(ln, l)?;
            let (a, b) = g.qubits();
            if a >= n_qubits || b.is_some_and(|b| b >= n_qubits) {
                return Err(perr(ln, "qubit index out of range"));
            }
            current.push(g);
        }
    }
    if !current.is_empty() {
        moments.push(current);
    }
    let c = Circuit { n_qubits, moments, barriers, metadata };
    if !c.check_moments() {
        return Err(perr(0, "a moment uses some qubit twice"));
    }
    Ok(c)
}
