//! `index`: both sides of the index formula for a connection profile.

use std::collections::BTreeMap;
use std::path::Path;

use bhl_core::hyperbolic::ConnectionProfile;
use bhl_core::index::{index_report, IndexSettings};
use serde::Deserialize;
use serde_json::json;

use crate::config::params;
use crate::error::Failure;
use crate::report::{Checks, Outcome};

params! {
    /// Index of the Dirac operator on the cylinder with APS conditions,
    /// against the boundary formula.
    "index", IndexArgs => IndexConfig {
        /// Time extent of the cylinder.
        t_extent as "T": f64,
        /// Modes |k| <= kmax are examined.
        kmax: i64,
        /// ramp:A0:A1, or a JSON file holding a ramp or sampled a(t).
        profile: String,
        /// Relative width of the constant collars at both ends.
        collar: f64,
        quad_panels: usize,
        ode_steps: usize,
        /// Bound on the distance of the right-hand side from an integer.
        integrality_tol: f64,
    }
    optional {}
    defaults {
        "T": 10.0, "kmax": 32, "collar": bhl_core::hyperbolic::DEFAULT_COLLAR, "quad_panels": 64,
        "ode_steps": 2000, "integrality_tol": 1e-9
    }
}

/// Contents of a `--profile` JSON file.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ProfileFile {
    Ramp { a0: f64, a1: f64 },
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

fn parse_ramp(spec: &str) -> Option<Result<(f64, f64), Failure>> {
    let rest = spec.strip_prefix("ramp:")?;
    let bad = || Failure::Input(format!("profile {spec:?} is not of the form ramp:A0:A1"));
    let mut parts = rest.split(':');
    let (Some(a0), Some(a1), None) = (parts.next(), parts.next(), parts.next()) else {
        return Some(Err(bad()));
    };
    Some(match (a0.trim().parse(), a1.trim().parse()) {
        (Ok(a0), Ok(a1)) => Ok((a0, a1)),
        _ => Err(bad()),
    })
}

pub fn build_profile(spec: &str, t_extent: f64, collar: f64) -> Result<ConnectionProfile, Failure> {
    if let Some(r) = parse_ramp(spec) {
        let (a0, a1) = r?;
        return Ok(ConnectionProfile::ramp(t_extent, a0, a1, collar)?);
    }
    let path = Path::new(spec);
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Unreadable { path: path.to_path_buf(), source: e })?;
    let file: ProfileFile =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("profile {}: {e}", path.display())))?;
    Ok(match file {
        ProfileFile::Ramp { a0, a1 } => ConnectionProfile::ramp(t_extent, a0, a1, collar)?,
        ProfileFile::Sampled { times, values } => ConnectionProfile::tabulated(t_extent, times, values, collar)?,
    })
}

pub fn index(c: &IndexConfig) -> Result<Outcome, Failure> {
    let prof = build_profile(&c.profile, c.t_extent, c.collar)?;
    let settings = IndexSettings { k_max: c.kmax, quad_panels: c.quad_panels, ode_steps: c.ode_steps };
    let rep = index_report(&prof, &settings)?;
    let mut checks = Checks::default();
    checks.at_most("distance of the right-hand side from an integer", rep.integrality_defect(), c.integrality_tol);
    checks.at_most("|index_lhs - index_rhs|", (rep.lhs as f64 - rep.rhs.value).abs(), c.integrality_tol);
    checks.at_most("|q_left + q_right|", (rep.q_left + rep.q_right).abs(), 1e-12);
    Ok(Outcome {
        observed_orders: BTreeMap::new(),
        checks,
        results: json!({
            "index_lhs": rep.lhs,
            "index_rhs": rep.rhs.value,
            "profile": prof,
            "report": rep,
        }),
    })
}
