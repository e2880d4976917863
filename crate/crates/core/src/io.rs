//! File formats and report serialization.
//!
//! Graphon JSON: `{"gamma": [["1","3"],["2","3"]], "values": [[...], ...]}`
//! with widths as numerator/denominator string pairs. Graph files: a `v e`
//! header line followed by `e` lines `a b` with 1-indexed endpoints.
//! Report floats are printed with 17 significant digits so any reader
//! recovers the exact bits.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::Value;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::FiniteGraph;
use crate::graphon::StepGraphon;
use crate::sampler::{ConcentrationSummary, SampledGraph, TailEstimate, TailMode};
use crate::solver::{ConstraintKind, PhaseScanRow, Regime, VariationalSolution};
use crate::witness::{PlantedCase, Witness, WitnessTag};

/// 17 significant digits; round-trips every finite f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON fragment for a float: non-finite values become null.
pub fn json_f64(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".into()
    }
}

fn parse_bigint(v: &Value, what: &str) -> Result<BigInt> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => {
            return Err(Error::GraphonFormat(format!(
                "{what}: expected a string or integer, got {v}"
            )))
        }
    };
    BigInt::from_str(text.trim())
        .map_err(|e| Error::GraphonFormat(format!("{what}: bad integer {text:?} ({e})")))
}

/// Parses a graphon from its JSON text.
pub fn graphon_from_json(text: &str) -> Result<StepGraphon> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::GraphonFormat(format!("invalid JSON: {e}")))?;
    let gamma = root
        .get("gamma")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::GraphonFormat("missing \"gamma\" array".into()))?;
    let mut widths = Vec::with_capacity(gamma.len());
    for (i, entry) in gamma.iter().enumerate() {
        let pair = entry.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
            Error::GraphonFormat(format!("gamma[{i}]: expected [numerator, denominator]"))
        })?;
        let numer = parse_bigint(&pair[0], &format!("gamma[{i}] numerator"))?;
        let denom = parse_bigint(&pair[1], &format!("gamma[{i}] denominator"))?;
        if denom == BigInt::from(0) {
            return Err(Error::GraphonFormat(format!("gamma[{i}]: zero denominator")));
        }
        widths.push(BigRational::new(numer, denom));
    }
    let values_json = root
        .get("values")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::GraphonFormat("missing \"values\" matrix".into()))?;
    let mut values = Vec::with_capacity(values_json.len());
    for (i, row) in values_json.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::GraphonFormat(format!("values[{i}] is not an array")))?;
        let mut out = Vec::with_capacity(row.len());
        for (j, cell) in row.iter().enumerate() {
            let x = cell.as_f64().ok_or_else(|| {
                Error::GraphonFormat(format!("values[{i}][{j}] is not a number"))
            })?;
            out.push(x);
        }
        values.push(out);
    }
    StepGraphon::new(widths, values)
        .map_err(|e| Error::GraphonFormat(format!("invalid graphon: {e}")))
}

/// Serializes a graphon; loading the output reproduces the input bit for bit.
pub fn graphon_to_json(f: &StepGraphon) -> String {
    let mut out = String::from("{\"gamma\": [");
    for (k, w) in f.widths().iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("[\"{}\", \"{}\"]", w.numer(), w.denom()));
    }
    out.push_str("], \"values\": [");
    let m = f.block_count();
    for i in 0..m {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for j in 0..m {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&fmt_f64(f.value(i, j)));
        }
        out.push(']');
    }
    out.push_str("]}");
    out
}

/// Parses the `v e` / edge-list graph format (1-indexed vertices).
pub fn graph_from_text(text: &str) -> Result<FiniteGraph> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::GraphFormat("empty file".into()))?;
    let mut parts = header.split_whitespace();
    let v: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::GraphFormat(format!("bad header line {header:?}")))?;
    let e: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::GraphFormat(format!("bad header line {header:?}")))?;
    let mut edges = Vec::with_capacity(e);
    for (lineno, line) in lines.enumerate() {
        let mut nums = line.split_whitespace();
        let a: usize = nums
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::GraphFormat(format!("line {}: bad edge {line:?}", lineno + 2)))?;
        let b: usize = nums
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::GraphFormat(format!("line {}: bad edge {line:?}", lineno + 2)))?;
        if a == 0 || b == 0 || a > v || b > v {
            return Err(Error::GraphFormat(format!(
                "line {}: vertex out of range 1..={v}",
                lineno + 2
            )));
        }
        edges.push((a - 1, b - 1));
    }
    if edges.len() != e {
        return Err(Error::GraphFormat(format!(
            "header announced {e} edges but {} found",
            edges.len()
        )));
    }
    FiniteGraph::new(v, &edges)
}

/// Serializes a finite graph in the `v e` / edge-list format.
pub fn graph_to_text(g: &FiniteGraph) -> String {
    let mut out = format!("{} {}\n", g.vertex_count(), g.edge_count());
    for &(a, b) in g.edges() {
        out.push_str(&format!("{} {}\n", a + 1, b + 1));
    }
    out
}

/// Edge-list dump of a sampled graph, compatible with [`graph_from_text`].
pub fn sampled_graph_to_text(g: &SampledGraph) -> String {
    let edges = g.edges();
    let mut out = format!("{} {}\n", g.vertex_count(), edges.len());
    for (a, b) in edges {
        out.push_str(&format!("{} {}\n", a + 1, b + 1));
    }
    out
}

fn regime_str(r: Regime) -> &'static str {
    match r {
        Regime::SymmetricCertified => "symmetric-certified",
        Regime::BrokenCertified => "broken-certified",
        Regime::BracketOnly => "bracket-only",
    }
}

fn constraint_json(kind: &ConstraintKind) -> String {
    match kind {
        ConstraintKind::HomDensity(h) => format!(
            "{{\"kind\": \"hom-density\", \"vertices\": {}, \"edges\": {}}}",
            h.vertex_count(),
            h.edge_count()
        ),
        ConstraintKind::OperatorNorm => "{\"kind\": \"operator-norm\"}".into(),
    }
}

pub fn solution_to_json(s: &VariationalSolution) -> String {
    format!(
        "{{\"optimizer\": {}, \"objective\": {}, \"target\": {}, \"t_max\": {}, \
         \"constraint\": {}, \"residual\": {}, \"regime\": \"{}\", \
         \"bracket\": [{}, {}], \"restart_spread\": {}}}",
        graphon_to_json(&s.optimizer),
        json_f64(s.objective),
        json_f64(s.target),
        json_f64(s.t_max),
        constraint_json(&s.constraint),
        json_f64(s.residual),
        regime_str(s.regime),
        json_f64(s.bracket.0),
        json_f64(s.bracket.1),
        json_f64(s.restart_spread),
    )
}

fn tag_json(tag: &WitnessTag) -> String {
    match tag {
        WitnessTag::GEps { eps, r1, r2, s } => format!(
            "{{\"construction\": \"g-eps\", \"eps\": {}, \"r1\": {}, \"r2\": {}, \"s\": {}}}",
            json_f64(*eps),
            json_f64(*r1),
            json_f64(*r2),
            json_f64(*s)
        ),
        WitnessTag::Clique {
            case,
            target,
            side,
            ratio_witness,
            ratio_symmetric,
        } => format!(
            "{{\"construction\": \"{}\", \"target\": {}, \"side\": {}, \
             \"ratio_witness\": {}, \"ratio_symmetric\": {}}}",
            match case {
                PlantedCase::Independent => "clique-planted-independent",
                PlantedCase::Clique => "clique-planted-clique",
            },
            json_f64(*target),
            json_f64(*side),
            json_f64(*ratio_witness),
            json_f64(*ratio_symmetric)
        ),
        WitnessTag::PlantedAlpha {
            alpha,
            side,
            ratio_witness,
            ratio_symmetric,
        } => format!(
            "{{\"construction\": \"planted-alpha\", \"alpha\": {}, \"side\": {}, \
             \"ratio_witness\": {}, \"ratio_symmetric\": {}}}",
            json_f64(*alpha),
            json_f64(*side),
            json_f64(*ratio_witness),
            json_f64(*ratio_symmetric)
        ),
    }
}

pub fn witness_to_json(w: &Witness) -> String {
    format!(
        "{{\"graphon\": {}, \"constraint_witness\": {}, \"constraint_symmetric\": {}, \
         \"entropy_witness\": {}, \"entropy_symmetric\": {}, \
         \"constraint_margin\": {}, \"entropy_margin\": {}, \"tag\": {}}}",
        graphon_to_json(&w.graphon),
        json_f64(w.constraint_witness),
        json_f64(w.constraint_symmetric),
        json_f64(w.entropy_witness),
        json_f64(w.entropy_symmetric),
        json_f64(w.constraint_margin),
        json_f64(w.entropy_margin),
        tag_json(&w.tag),
    )
}

pub fn tail_to_json(t: &TailEstimate) -> String {
    format!(
        "{{\"target\": {}, \"kn\": {}, \"samples\": {}, \"p_hat\": {}, \
         \"ci\": [{}, {}], \"rate\": {}, \"rate_lower_bound\": {}, \"mode\": \"{}\", \
         \"seed\": {}}}",
        json_f64(t.target),
        t.kn,
        t.samples,
        json_f64(t.p_hat),
        json_f64(t.ci.0),
        json_f64(t.ci.1),
        t.rate.map(json_f64).unwrap_or_else(|| "null".into()),
        t.rate_lower_bound
            .map(json_f64)
            .unwrap_or_else(|| "null".into()),
        match t.mode {
            TailMode::MonteCarlo => "monte-carlo",
            TailMode::ExactEnumeration => "exact-enumeration",
        },
        t.seed.map(|s| s.to_string()).unwrap_or_else(|| "null".into()),
    )
}

pub fn concentration_to_json(c: &ConcentrationSummary) -> String {
    format!(
        "{{\"kn\": {}, \"samples\": {}, \"accepted\": {}, \"acceptance_rate\": {}, \
         \"mean\": {}, \"q10\": {}, \"median\": {}, \"q90\": {}, \"seed\": {}}}",
        c.kn,
        c.samples,
        c.accepted,
        json_f64(c.acceptance_rate),
        json_f64(c.mean),
        json_f64(c.q10),
        json_f64(c.median),
        json_f64(c.q90),
        c.seed,
    )
}

/// CSV for a phase scan (header `r,t_target,on_minorant,symmetric_I,witness_I`).
pub fn scan_to_csv(rows: &[PhaseScanRow]) -> String {
    let mut out = String::from("r,t_target,on_minorant,symmetric_I,witness_I\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(row.r),
            fmt_f64(row.t_target),
            row.on_minorant,
            fmt_f64(row.symmetric_entropy),
            row.witness_entropy.map(fmt_f64).unwrap_or_default(),
        ));
    }
    out
}
