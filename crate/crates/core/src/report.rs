//! Report emission: a JSON array of reports and a flat CSV table.
//!
//! Every float is written with 17 significant digits so reports reproduce
//! bit-for-bit.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::verification::VerificationReport;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 11] = [
    "check",
    "manifold",
    "p",
    "N",
    "kappa",
    "lambda",
    "D",
    "hypothesis_margin",
    "conclusion_margin",
    "status",
    "pass",
];

/// Top-level keys of every JSON report object, in emission order.
pub const JSON_KEYS: [&str; 14] = [
    "check_name",
    "manifold",
    "params",
    "hypothesis_margin",
    "conclusion_margin",
    "status",
    "pass",
    "tolerance",
    "gate_tolerance",
    "samples",
    "equality",
    "seed",
    "values",
    "notes",
];

/// Formats `x` with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty-printing formatter that writes floats with 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes any value as pretty JSON with full-precision floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("reports serialize to JSON");
    String::from_utf8(out).expect("JSON output is UTF-8")
}

pub fn reports_to_json(reports: &[VerificationReport]) -> String {
    to_json_string(reports)
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

pub fn reports_to_csv(reports: &[VerificationReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory CSV write");
    for r in reports {
        let p = &r.params;
        let big_n = p.big_n.map(|n| match n.finite() {
            Some(v) => format_f64(v),
            None => "inf".to_string(),
        });
        w.write_record([
            r.check_name.clone(),
            r.manifold.clone().unwrap_or_default(),
            opt(p.p),
            big_n.unwrap_or_default(),
            opt(p.kappa),
            opt(p.lambda),
            opt(p.d),
            opt(r.hypothesis_margin),
            opt(r.conclusion_margin),
            r.status.to_string(),
            r.pass.to_string(),
        ])
        .expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
}
