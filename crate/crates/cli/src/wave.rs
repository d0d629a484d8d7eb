//! `wave-evolve` and `morawetz`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use bhl_core::kerr::KerrParams;
use bhl_core::wave::{
    evolve, steps_to, trapping_cutoff, EnergyReport, EvolveOptions, GridSpec, InitialData, WaveGrid,
};
use serde_json::json;

use crate::config::params;
use crate::error::Failure;
use crate::report::{Cell, Checks, Csv, Outcome};

params! {
    /// Evolve one azimuthal mode of the scalar wave equation and record the
    /// model energy and the Morawetz bulk.
    "wave-evolve", WaveArgs => WaveConfig {
        m: f64,
        a: f64,
        /// Azimuthal number.
        m_phi: i32,
        nr: usize,
        ntheta: usize,
        rstar_min: f64,
        rstar_max: f64,
        t_final: f64,
        /// Fraction of the largest stable time step.
        cfl: f64,
        /// time_symmetric, ingoing or mixed.
        family: String,
    }
    optional {
        /// Pulse centre in r* (family default otherwise).
        center: f64,
        width: f64,
        /// Angular degree for time_symmetric and ingoing.
        ell: u32,
        /// Frequency for mixed.
        omega: f64,
        amplitude: f64,
        /// CSV output with the energy series.
        csv: PathBuf,
    }
    defaults {
        "m": 1.0, "m_phi": 0, "nr": 400, "ntheta": 32, "rstar_min": -80.0, "rstar_max": 200.0,
        "t_final": 150.0, "cfl": 0.5, "family": "time_symmetric"
    }
}

params! {
    /// Ratio of the time-integrated Morawetz bulk to the initial model energy,
    /// with scaling and grid-refinement checks.
    "morawetz", MorawetzArgs => MorawetzConfig {
        m: f64,
        a: f64,
        m_phi: i32,
        /// Radial nodes, at least 64.
        nr: usize,
        /// Polar nodes, at least 8.
        ntheta: usize,
        rstar_min: f64,
        rstar_max: f64,
        t_final: f64,
        cfl: f64,
        family: String,
        /// Bound on the relative change of the ratio under doubling both
        /// resolutions.
        drift_tol: f64,
        /// Bound on the relative change of the ratio when the data are scaled.
        scale_tol: f64,
    }
    optional {
        center: f64,
        width: f64,
        ell: u32,
        omega: f64,
        amplitude: f64,
        csv: PathBuf,
    }
    defaults {
        "m": 1.0, "m_phi": 0, "nr": 400, "ntheta": 32, "rstar_min": -80.0, "rstar_max": 200.0,
        "t_final": 150.0, "cfl": 0.5, "family": "time_symmetric", "drift_tol": 0.1, "scale_tol": 1e-12
    }
}

pub const MORAWETZ_MIN_NR: usize = 64;
pub const MORAWETZ_MIN_NTHETA: usize = 8;

/// Parameters shared by both subcommands.
struct Setup {
    params: KerrParams,
    m_phi: i32,
    spec: GridSpec,
    t_final: f64,
    cfl: f64,
    data: InitialData,
}

struct PulseOverrides {
    center: Option<f64>,
    width: Option<f64>,
    ell: Option<u32>,
    omega: Option<f64>,
    amplitude: Option<f64>,
}

fn initial_data(family: &str, m_phi: i32, o: &PulseOverrides) -> Result<InitialData, Failure> {
    let [ts, ing, mixed] = InitialData::standard_families(m_phi);
    let base = match family {
        "time_symmetric" => ts,
        "ingoing" => ing,
        "mixed" => mixed,
        other => return Err(Failure::Input(format!("unknown initial data family {other:?}"))),
    };
    if o.omega.is_some() && family != "mixed" {
        return Err(Failure::Input("omega only applies to the mixed family".into()));
    }
    if o.ell.is_some() && family == "mixed" {
        return Err(Failure::Input("ell does not apply to the mixed family".into()));
    }
    Ok(match base {
        InitialData::TimeSymmetric { center, width, ell, amplitude } => InitialData::TimeSymmetric {
            center: o.center.unwrap_or(center),
            width: o.width.unwrap_or(width),
            ell: o.ell.unwrap_or(ell),
            amplitude: o.amplitude.unwrap_or(amplitude),
        },
        InitialData::Ingoing { center, width, ell, amplitude } => InitialData::Ingoing {
            center: o.center.unwrap_or(center),
            width: o.width.unwrap_or(width),
            ell: o.ell.unwrap_or(ell),
            amplitude: o.amplitude.unwrap_or(amplitude),
        },
        InitialData::Mixed { center, width, omega, amplitude } => InitialData::Mixed {
            center: o.center.unwrap_or(center),
            width: o.width.unwrap_or(width),
            omega: o.omega.unwrap_or(omega),
            amplitude: o.amplitude.unwrap_or(amplitude),
        },
    })
}

struct Run {
    reports: Vec<EnergyReport>,
    steps: usize,
    dt: f64,
    axis_regularity: f64,
}

impl Setup {
    fn run(&self, spec: GridSpec, scale: f64) -> Result<Run, Failure> {
        let grid = Arc::new(WaveGrid::new(self.params, self.m_phi, spec)?);
        let field = self.data.sample(grid.clone())?.scaled(scale);
        let (steps, dt) = steps_to(&grid, self.t_final, self.cfl)?;
        let opts = EvolveOptions { cfl: self.cfl, dt: Some(dt), diagnostics: true };
        let (last, reports) = evolve(&field, steps, &opts)?;
        Ok(Run { reports, steps, dt, axis_regularity: last.axis_regularity() })
    }

    fn refined(&self, factor: f64) -> GridSpec {
        let s = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        GridSpec { nr: s(self.spec.nr), ntheta: s(self.spec.ntheta), ..self.spec }
    }
}

fn write_series(path: &PathBuf, reports: &[EnergyReport]) -> Result<(), Failure> {
    let mut csv = Csv::new(&["step", "time", "e_model3", "bulk_increment", "bulk_cumulative", "ratio"]);
    for r in reports {
        csv.row(&[
            Cell::Int(r.step as i64),
            Cell::Float(r.time),
            Cell::Float(r.e_model3),
            Cell::Float(r.bulk_increment),
            Cell::Float(r.bulk_cumulative),
            Cell::Float(r.ratio),
        ]);
    }
    csv.write(path)
}

fn summary(run: &Run, spec: &GridSpec) -> serde_json::Value {
    let first = run.reports.first();
    let last = run.reports.last();
    json!({
        "nr": spec.nr,
        "ntheta": spec.ntheta,
        "steps": run.steps,
        "dt": run.dt,
        "initial_energy": first.map(|r| r.e_model3),
        "final_energy": last.map(|r| r.e_model3),
        "final_time": last.map(|r| r.time),
        "bulk": last.map(|r| r.bulk_cumulative),
        "ratio": last.map(|r| r.ratio),
        "axis_regularity": run.axis_regularity,
    })
}

fn final_ratio(run: &Run) -> f64 {
    run.reports.last().map_or(f64::NAN, |r| r.ratio)
}

fn check_series(checks: &mut Checks, run: &Run, t_final: f64) {
    let finite = run.reports.iter().all(|r| {
        r.e_model3.is_finite() && r.bulk_cumulative.is_finite() && r.ratio.is_finite() && r.e_model3 > 0.0
    });
    checks.holds("energies finite and positive", finite && !run.reports.is_empty());
    let end = run.reports.last().map_or(f64::NAN, |r| (r.time - t_final).abs());
    checks.at_most("final time matches t_final", end, 1e-9 * t_final.max(1.0));
}

pub fn wave_evolve(c: &WaveConfig) -> Result<Outcome, Failure> {
    let o = PulseOverrides { center: c.center, width: c.width, ell: c.ell, omega: c.omega, amplitude: c.amplitude };
    let setup = Setup {
        params: KerrParams::new(c.m, c.a)?,
        m_phi: c.m_phi,
        spec: GridSpec { nr: c.nr, ntheta: c.ntheta, rstar_min: c.rstar_min, rstar_max: c.rstar_max },
        t_final: c.t_final,
        cfl: c.cfl,
        data: initial_data(&c.family, c.m_phi, &o)?,
    };
    let run = setup.run(setup.spec, 1.0)?;
    if let Some(path) = &c.csv {
        write_series(path, &run.reports)?;
    }
    let mut checks = Checks::default();
    check_series(&mut checks, &run, c.t_final);
    Ok(Outcome {
        observed_orders: BTreeMap::new(),
        checks,
        results: json!({ "initial_data": setup.data, "run": summary(&run, &setup.spec) }),
    })
}

pub fn morawetz(c: &MorawetzConfig) -> Result<Outcome, Failure> {
    if c.nr < MORAWETZ_MIN_NR || c.ntheta < MORAWETZ_MIN_NTHETA {
        return Err(Failure::Input(format!(
            "grid {}x{} is below the minimum {MORAWETZ_MIN_NR}x{MORAWETZ_MIN_NTHETA}",
            c.nr, c.ntheta
        )));
    }
    let o = PulseOverrides { center: c.center, width: c.width, ell: c.ell, omega: c.omega, amplitude: c.amplitude };
    let setup = Setup {
        params: KerrParams::new(c.m, c.a)?,
        m_phi: c.m_phi,
        spec: GridSpec { nr: c.nr, ntheta: c.ntheta, rstar_min: c.rstar_min, rstar_max: c.rstar_max },
        t_final: c.t_final,
        cfl: c.cfl,
        data: initial_data(&c.family, c.m_phi, &o)?,
    };
    let grid = WaveGrid::new(setup.params, setup.m_phi, setup.spec)?;
    let trapped = grid.r.iter().any(|&r| trapping_cutoff(r, setup.params.m) == 0.0);

    let base = setup.run(setup.spec, 1.0)?;
    let doubled = setup.run(setup.spec, 2.0)?;
    let odd = setup.run(setup.spec, 3.7)?;
    let half = setup.run(setup.refined(0.5), 1.0)?;
    let fine = setup.run(setup.refined(2.0), 1.0)?;
    if let Some(path) = &c.csv {
        write_series(path, &base.reports)?;
    }

    let (r_half, r0, r_fine) = (final_ratio(&half), final_ratio(&base), final_ratio(&fine));
    let drift = (r_fine - r0).abs() / r_fine.abs();
    let scale_defect = (final_ratio(&odd) - r0).abs() / r0.abs();
    let mut checks = Checks::default();
    check_series(&mut checks, &base, c.t_final);
    checks.holds("trapping cutoff vanishes on the grid", trapped);
    checks.holds("ratio unchanged bit for bit when the data are doubled", final_ratio(&doubled) == r0);
    checks.at_most("relative ratio change when the data are scaled by 3.7", scale_defect, c.scale_tol);
    checks.at_most("relative ratio change under refinement", drift, c.drift_tol);

    let mut observed_orders = BTreeMap::new();
    observed_orders.insert("ratio".to_string(), ((r_half - r0).abs() / (r0 - r_fine).abs()).log2());
    Ok(Outcome {
        observed_orders,
        checks,
        results: json!({
            "initial_data": setup.data,
            "ratio": r0,
            "grid_drift": drift,
            "scale_defect": scale_defect,
            "runs": {
                "base": summary(&base, &setup.spec),
                "half": summary(&half, &setup.refined(0.5)),
                "double": summary(&fine, &setup.refined(2.0)),
            },
        }),
    })
}
