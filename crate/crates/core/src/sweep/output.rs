//! CSV and JSON emission. Floats are written with 17 significant digits so
//! that parsing the output reproduces the in-memory values bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{EvolveReport, SweepRow};
use crate::error::{Error, Result};

pub const CSV_VERSION_LINE: &str = "# holonomy-lab v1";

pub const CSV_COLUMNS: [&str; 11] = [
    "eta",
    "theta",
    "alpha",
    "geom_phase_plus",
    "geom_phase_minus",
    "geom_phase_exact_plus",
    "berry_limit_plus",
    "deviation_from_exact",
    "endpoint_fidelity",
    "steps_used",
    "status",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{CSV_VERSION_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            num(r.eta),
            num(r.theta),
            num(r.alpha),
            num(r.geom_phase_plus),
            num(r.geom_phase_minus),
            num(r.geom_phase_exact_plus),
            num(r.berry_limit_plus),
            num(r.deviation_from_exact),
            num(r.endpoint_fidelity),
            r.steps_used.to_string(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let float = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        rec[i].parse::<f64>().map_err(|_| {
            Error::Config(format!(
                "column {}: bad number {:?}",
                CSV_COLUMNS[i], &rec[i]
            ))
        })
    };
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(SweepRow {
                eta: float(&rec, 0)?,
                theta: float(&rec, 1)?,
                alpha: float(&rec, 2)?,
                geom_phase_plus: float(&rec, 3)?,
                geom_phase_minus: float(&rec, 4)?,
                geom_phase_exact_plus: float(&rec, 5)?,
                berry_limit_plus: float(&rec, 6)?,
                deviation_from_exact: float(&rec, 7)?,
                endpoint_fidelity: float(&rec, 8)?,
                steps_used: rec[9]
                    .parse()
                    .map_err(|_| Error::Config(format!("steps_used: bad count {:?}", &rec[9])))?,
                status: rec[10].to_string(),
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    format: String,
    columns: Vec<String>,
    rows: Vec<SweepRow>,
}

pub fn write_json<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    let table = JsonTable {
        format: CSV_VERSION_LINE.trim_start_matches("# ").to_string(),
        columns: CSV_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows: rows.to_vec(),
    };
    serde_json::to_writer_pretty(&mut out, &table)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let table: JsonTable = serde_json::from_reader(input)?;
    Ok(table.rows)
}

/// One row per branch of a single run.
pub fn write_evolve_csv<W: Write>(mut out: W, report: &EvolveReport) -> Result<()> {
    writeln!(out, "{CSV_VERSION_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "branch",
        "eta",
        "theta",
        "alpha",
        "total",
        "dynamical",
        "geometric",
        "geometric_unwrapped",
        "geometric_by_connection",
        "geometric_exact",
        "deviation_from_exact",
        "endpoint_fidelity",
        "norm_drift",
        "cyclic",
        "steps_used",
        "alpha_denominator_negative",
    ])?;
    for b in &report.branches {
        let ph = &b.phases;
        w.write_record([
            b.branch.clone(),
            num(report.eta),
            num(report.params.theta),
            num(report.alpha),
            num(ph.total),
            num(ph.dynamical),
            num(ph.geometric),
            num(ph.geometric_unwrapped),
            ph.geometric_by_connection.map(num).unwrap_or_default(),
            num(b.geometric_exact),
            num(b.deviation_from_exact),
            num(b.endpoint_fidelity),
            num(b.norm_drift),
            ph.cyclic.to_string(),
            report.steps_used.to_string(),
            report.alpha_denominator_negative.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON has no NaN; failed rows carry `null` instead.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<SweepRow> {
        vec![
            SweepRow {
                eta: 1e-3,
                theta: std::f64::consts::FRAC_PI_3,
                alpha: 0.1 + 0.2,
                geom_phase_plus: 4.712_388_980_384_69,
                geom_phase_minus: 1.0 / 3.0,
                geom_phase_exact_plus: 4.7123,
                berry_limit_plus: 3.0 * std::f64::consts::FRAC_PI_2,
                deviation_from_exact: 5e-324,
                endpoint_fidelity: 0.999_999_999_9,
                steps_used: 62832,
                status: "ok".into(),
            },
            SweepRow {
                eta: 2.0,
                theta: 0.5,
                alpha: f64::NAN,
                geom_phase_plus: f64::NAN,
                geom_phase_minus: f64::NAN,
                geom_phase_exact_plus: f64::NAN,
                berry_limit_plus: 1.0,
                deviation_from_exact: f64::NAN,
                endpoint_fidelity: f64::NAN,
                steps_used: 0,
                status: "error: not cyclic, \"quoted\"".into(),
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# holonomy-lab v1\neta,theta,alpha,"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_json(&mut buf, &rows()).unwrap();
        assert_eq!(read_json(buf.as_slice()).unwrap(), rows());
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
