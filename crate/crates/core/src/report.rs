//! Serialized report documents.
//!
//! JSON output is canonical: object keys sorted, every float printed in
//! scientific notation with 17 significant digits, non-finite floats as `null`.

use std::io;

use serde_json::{json, Map, Value};

use crate::ckv::CkvReport;
use crate::jet::{JetDimensionRecord, JetScan};
use crate::perturb::{TrialOutcome, TrialRecord};

pub const SCHEMA: &str = "ckv-lab/1";

struct CanonicalFloats;

impl serde_json::ser::Formatter for CanonicalFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Compact canonical JSON followed by a newline.
pub fn to_canonical_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFloats);
    serde::Serialize::serialize(value, &mut ser).expect("serializing a Value into memory");
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    s
}

fn float(v: f64) -> Value {
    // serde_json maps non-finite floats to null
    Value::from(v)
}

pub fn ckv_report_json(r: &CkvReport) -> Value {
    json!({
        "metric": r.metric,
        "mode": r.config.mode.as_str(),
        "n": r.n,
        "d": r.config.degree,
        "m": r.config.grid,
        "rel_tol": float(r.config.rel_tol),
        "gap_min": float(r.config.gap_min),
        "nullity": r.nullity,
        "gap_ratio": float(r.gap_ratio),
        "ambiguous": r.ambiguous,
        "sigma_max": float(r.sigma_max()),
        "singular_value_count": r.singular_values.len(),
        "singular_values": r.reported_tail().iter().map(|&s| float(s)).collect::<Vec<_>>(),
    })
}

pub fn trial_json(r: &TrialRecord) -> Value {
    let n = r.spec.direction.nrows();
    let direction: Vec<Vec<Value>> = (0..n)
        .map(|i| (0..n).map(|j| float(r.spec.direction[(i, j)])).collect())
        .collect();
    json!({
        "valid": true,
        "seed": r.spec.seed,
        "eps": float(r.spec.epsilon),
        "base": r.base,
        "bump": {
            "center": r.spec.bump.center().iter().map(|&c| float(c)).collect::<Vec<_>>(),
            "radius": float(r.spec.bump.radius()),
        },
        "direction": direction,
        "before": ckv_report_json(&r.before),
        "after": ckv_report_json(&r.after),
        "error": Value::Null,
    })
}

pub fn trial_outcome_json(t: &TrialOutcome) -> Value {
    match t {
        TrialOutcome::Valid(r) => trial_json(r),
        TrialOutcome::Invalid {
            seed,
            epsilon,
            error,
        } => json!({
            "valid": false,
            "seed": seed,
            "eps": float(*epsilon),
            "before": Value::Null,
            "after": Value::Null,
            "error": error.to_string(),
        }),
    }
}

pub fn jet_record_json(r: &JetDimensionRecord) -> Value {
    // exact integers as decimal strings
    json!({
        "n": r.n,
        "k": r.k,
        "dim_metric_jets": r.dim_metric_jets.to_string(),
        "dim_factor_jets": r.dim_factor_jets.to_string(),
        "dim_diffeo_jets": r.dim_diffeo_jets.to_string(),
        "dim_diffeo_jets_k_plus_1": r.dim_diffeo_jets_next.to_string(),
        "dim_domain": r.dim_domain.to_string(),
        "holds": r.holds,
    })
}

pub fn jet_scan_json(scan: &JetScan) -> Value {
    let frontier: Map<String, Value> = scan
        .frontier
        .iter()
        .map(|(n, k)| (n.to_string(), Value::from(*k)))
        .collect();
    json!({
        "rows": scan.rows.iter().map(jet_record_json).collect::<Vec<_>>(),
        "frontier": frontier,
        "frontier_within_scan_bounds": true,
    })
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).expect("writing CSV into memory");
    String::from_utf8(w.into_inner().expect("flush in-memory CSV")).expect("CSV is UTF-8")
}

pub fn jet_scan_csv(scan: &JetScan) -> String {
    csv_string(|w| {
        w.write_record([
            "n",
            "k",
            "dim_metric_jets",
            "dim_factor_jets",
            "dim_diffeo_jets_k_plus_1",
            "dim_domain",
            "holds",
        ])?;
        for r in &scan.rows {
            w.write_record([
                r.n.to_string(),
                r.k.to_string(),
                r.dim_metric_jets.to_string(),
                r.dim_factor_jets.to_string(),
                r.dim_diffeo_jets_next.to_string(),
                r.dim_domain.to_string(),
                r.holds.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn trials_csv(trials: &[TrialOutcome]) -> String {
    csv_string(|w| {
        w.write_record(["seed", "eps", "before", "after", "ambiguous", "valid"])?;
        for t in trials {
            match t {
                TrialOutcome::Valid(r) => w.write_record([
                    r.spec.seed.to_string(),
                    r.spec.epsilon.to_string(),
                    r.before.nullity.to_string(),
                    r.after.nullity.to_string(),
                    (r.before.ambiguous || r.after.ambiguous).to_string(),
                    "true".to_string(),
                ])?,
                TrialOutcome::Invalid { seed, epsilon, .. } => w.write_record([
                    seed.to_string(),
                    epsilon.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "false".to_string(),
                ])?,
            }
        }
        Ok(())
    })
}

pub fn ckv_reports_csv(reports: &[(&str, &CkvReport)]) -> String {
    csv_string(|w| {
        w.write_record([
            "role",
            "metric",
            "mode",
            "n",
            "d",
            "m",
            "rel_tol",
            "nullity",
            "gap_ratio",
            "ambiguous",
        ])?;
        for (role, r) in reports {
            w.write_record([
                role.to_string(),
                r.metric.clone(),
                r.config.mode.as_str().to_string(),
                r.n.to_string(),
                r.config.degree.to_string(),
                r.config.grid.to_string(),
                r.config.rel_tol.to_string(),
                r.nullity.to_string(),
                r.gap_ratio.to_string(),
                r.ambiguous.to_string(),
            ])?;
        }
        Ok(())
    })
}
