//! Plain-text tables for the CLI.
//!
//! CSV files start with `# key=value` metadata lines, followed by a header
//! row and data rows. Floats use 17 significant digits so that they read
//! back to the same bits. Nothing here depends on the clock or on the
//! environment, so identical inputs render to identical bytes.

use serde::Serialize;

use crate::dynamics::{EventKind, Orbit, SolutionCurve};
use crate::params::{ConeType, LomseParams};
use crate::stability::ConjugatePointList;
use crate::surd::fmt_rational;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.push(key, value);
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub meta: Metadata,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            meta: Metadata::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.meta.entries() {
            out.push_str("# ");
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Exact parameters with rationals as `num/den` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamsRecord {
    pub n: u32,
    pub p: u32,
    pub k: u32,
    pub lambda_sq: String,
    pub tan_theta_sq: String,
    pub a: String,
    pub delta: String,
    pub dyn_disc: String,
    #[serde(rename = "type")]
    pub cone_type: String,
}

impl From<&LomseParams> for ParamsRecord {
    fn from(p: &LomseParams) -> Self {
        Self {
            n: p.n(),
            p: p.p(),
            k: p.k(),
            lambda_sq: fmt_rational(&p.lambda_sq),
            tan_theta_sq: fmt_rational(&p.tan_theta_sq),
            a: fmt_rational(&p.a_coeff),
            delta: fmt_rational(&p.jacobi_disc),
            dyn_disc: fmt_rational(&p.dyn_disc),
            cone_type: type_label(p.cone_type).into(),
        }
    }
}

pub fn type_label(t: ConeType) -> &'static str {
    match t {
        ConeType::TypeI => "I",
        ConeType::TypeII => "II",
    }
}

pub fn classification_table(params: &[LomseParams]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "n",
        "p",
        "k",
        "lambda_sq",
        "tan_theta_sq",
        "a",
        "delta",
        "type",
    ]);
    for p in params {
        let r = ParamsRecord::from(p);
        t.push_row(vec![
            r.n.to_string(),
            r.p.to_string(),
            r.k.to_string(),
            r.lambda_sq,
            r.tan_theta_sq,
            r.a,
            r.delta,
            r.cone_type,
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitRow {
    pub t: f64,
    pub phi: f64,
    pub psi: f64,
    pub r: f64,
    pub rho: f64,
}

pub fn orbit_rows(orbit: &Orbit) -> Vec<OrbitRow> {
    orbit
        .states
        .iter()
        .map(|s| OrbitRow {
            t: s.t,
            phi: s.phi,
            psi: s.psi,
            r: s.r(),
            rho: s.rho(),
        })
        .collect()
}

pub fn orbit_table(orbit: &Orbit) -> CsvTable {
    rows_table(&orbit_rows(orbit))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRow {
    pub kind: String,
    pub t: f64,
    pub phi: f64,
    pub psi: f64,
    pub offset: f64,
}

pub fn event_rows(orbit: &Orbit) -> Vec<EventRow> {
    orbit
        .events
        .iter()
        .map(|e| EventRow {
            kind: match e.kind {
                EventKind::LocCrossing => "loc_crossing",
                EventKind::AxisCrossing => "axis_crossing",
                EventKind::FixedPointEntry => "fixed_point_entry",
            }
            .into(),
            t: e.state.t,
            phi: e.state.phi,
            psi: e.state.psi,
            offset: e.state.offset,
        })
        .collect()
}

pub fn events_table(orbit: &Orbit) -> CsvTable {
    let mut t = CsvTable::new(&["kind", "t", "phi", "psi", "offset"]);
    for e in event_rows(orbit) {
        t.push_row(vec![
            e.kind,
            fmt_f64(e.t),
            fmt_f64(e.phi),
            fmt_f64(e.psi),
            fmt_f64(e.offset),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionRow {
    pub m: usize,
    pub crossing_t: f64,
    pub rescale_factor: f64,
    pub length: f64,
    pub loc_length: f64,
    pub deficit: f64,
}

impl From<&SolutionCurve> for SolutionRow {
    fn from(s: &SolutionCurve) -> Self {
        Self {
            m: s.crossing_index,
            crossing_t: s.crossing_t,
            rescale_factor: s.rescale_factor,
            length: s.length,
            loc_length: s.loc_length,
            deficit: s.deficit,
        }
    }
}

pub fn solution_table(family: &[SolutionCurve]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "m",
        "crossing_t",
        "rescale_factor",
        "length",
        "loc_length",
        "deficit",
    ]);
    for s in family {
        let r = SolutionRow::from(s);
        t.push_row(vec![
            r.m.to_string(),
            fmt_f64(r.crossing_t),
            fmt_f64(r.rescale_factor),
            fmt_f64(r.length),
            fmt_f64(r.loc_length),
            fmt_f64(r.deficit),
        ]);
    }
    t
}

/// Samples of one rescaled solution curve in the orbit columns. At the
/// origin `t` is `-inf`, `phi` is the limiting slope and `psi` is zero.
pub fn curve_rows(curve: &SolutionCurve) -> Vec<OrbitRow> {
    curve
        .curve
        .samples()
        .iter()
        .map(|s| {
            let slope = s.drho / s.dr;
            let (phi, psi) = if s.r > 0.0 {
                (s.rho / s.r, slope - s.rho / s.r)
            } else {
                (slope, 0.0)
            };
            OrbitRow {
                t: s.r.ln(),
                phi,
                psi,
                r: s.r,
                rho: s.rho,
            }
        })
        .collect()
}

fn rows_table(rows: &[OrbitRow]) -> CsvTable {
    let mut t = CsvTable::new(&["t", "phi", "psi", "r", "rho"]);
    for r in rows {
        t.push_row(
            [r.t, r.phi, r.psi, r.r, r.rho]
                .iter()
                .map(|v| fmt_f64(*v))
                .collect(),
        );
    }
    t
}

pub fn curve_table(curve: &SolutionCurve) -> CsvTable {
    rows_table(&curve_rows(curve))
}

pub fn conjugate_table(list: &ConjugatePointList) -> CsvTable {
    let mut t = CsvTable::new(&["index", "s", "closed_form", "ratio_to_previous"]);
    for (i, (z, c)) in list.zeros.iter().zip(&list.closed_form).enumerate() {
        let prev = if i == 0 {
            list.s_anchor
        } else {
            list.zeros[i - 1]
        };
        t.push_row(vec![
            (i + 1).to_string(),
            fmt_f64(*z),
            fmt_f64(*c),
            fmt_f64(prev / z),
        ]);
    }
    t
}
