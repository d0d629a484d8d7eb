//! `kerr-check`, `geodesic` and `maxwell-currents`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use bhl_core::geodesic::{
    integrate_geodesic, photon_orbit_radius, Causal, GeodesicState, IntegratorOptions, OrbitSense,
};
use bhl_core::kerr::{
    boosted_observer, cky_residual, killing_tensor_residual, ky_residual, sample_exterior_points, tetrad_residual,
    xi_residual, Derivatives, KerrParams,
};
use bhl_core::maxwell::{evaluate_on, MaxwellSetup};
use bhl_core::tensor::{FdOptions, FdScheme};
use serde_json::json;

use crate::config::params;
use crate::error::Failure;
use crate::report::{observed_order, Cell, Checks, Csv, Outcome};

params! {
    /// Residuals of the Killing-Yano, conformal Killing-Yano, Killing tensor,
    /// tetrad and ξ identities at sampled exterior points.
    "kerr-check", KerrCheckArgs => KerrCheckConfig {
        /// Black hole mass.
        m: f64,
        /// Spin parameter, |a| < m.
        a: f64,
        /// Number of sample points.
        points: usize,
        seed: u64,
        r_min: f64,
        r_max: f64,
        /// Bound on every analytic residual.
        residual_tol: f64,
        /// Points used for the finite-difference order study.
        fd_points: usize,
        /// Coarse finite-difference step (the fine step is half of it).
        fd_step: f64,
        /// Smallest acceptable observed order.
        min_order: f64,
    }
    optional {}
    defaults {
        "points": 50, "seed": 1, "r_min": 1.0, "r_max": 20.0, "residual_tol": 1e-8,
        "fd_points": 5, "fd_step": 2e-2, "min_order": 1.9
    }
}

fn residuals(k: &KerrParams, p: &[f64; 4], how: Derivatives) -> Result<[f64; 4], Failure> {
    Ok([ky_residual(k, p, how)?, cky_residual(k, p, how)?, killing_tensor_residual(k, p, how)?, xi_residual(k, p, how)?])
}

const FD_NAMES: [&str; 4] = ["killing_yano", "conformal_killing_yano", "killing_tensor", "xi"];

pub fn kerr_check(c: &KerrCheckConfig) -> Result<Outcome, Failure> {
    let k = KerrParams::new(c.m, c.a)?;
    if !(c.r_max > c.r_min) || c.points == 0 {
        return Err(Failure::Input("need r_max > r_min and at least one point".into()));
    }
    if !(c.fd_step > 0.0) {
        return Err(Failure::Input("fd_step must be positive".into()));
    }
    let mut worst = [0.0f64; 5];
    let mut rows = Vec::new();
    for p in sample_exterior_points(&k, c.points, c.seed, c.r_min, c.r_max) {
        let r = residuals(&k, &p, Derivatives::Analytic)?;
        let t = tetrad_residual(&k, &p)?;
        let all = [r[0], r[1], r[2], r[3], t];
        for (w, v) in worst.iter_mut().zip(all) {
            *w = w.max(v);
        }
        rows.push(json!({
            "point": p, "killing_yano": r[0], "conformal_killing_yano": r[1],
            "killing_tensor": r[2], "xi": r[3], "tetrad": t,
        }));
    }
    let mut checks = Checks::default();
    for (name, w) in FD_NAMES.iter().chain(&["tetrad"]).zip(worst) {
        checks.at_most(format!("max {name} residual"), w, c.residual_tol);
    }

    // the order study stays away from the horizon, where the truncation error
    // is not yet asymptotic at these steps
    let lo = c.r_min.max(3.0 * k.m);
    let hi = c.r_max.max(lo + k.m);
    let fd = |h: f64| Derivatives::FiniteDifference(FdOptions::new(h, FdScheme::Central2));
    let mut orders = [f64::INFINITY; 4];
    let mut fd_rows = Vec::new();
    for p in sample_exterior_points(&k, c.fd_points, c.seed.wrapping_add(1), lo, hi) {
        let coarse = residuals(&k, &p, fd(c.fd_step))?;
        let fine = residuals(&k, &p, fd(0.5 * c.fd_step))?;
        let q: Vec<f64> = coarse.iter().zip(&fine).map(|(a, b)| observed_order(*a, *b)).collect();
        for (o, v) in orders.iter_mut().zip(&q) {
            *o = o.min(*v);
        }
        fd_rows.push(json!({ "point": p, "coarse": coarse, "fine": fine, "orders": q }));
    }
    let mut observed_orders = BTreeMap::new();
    if c.fd_points > 0 {
        for (name, q) in FD_NAMES.iter().zip(orders) {
            checks.at_least(format!("{name} finite-difference order"), q, c.min_order);
            observed_orders.insert(name.to_string(), q);
        }
    }
    Ok(Outcome {
        observed_orders,
        checks,
        results: json!({
            "r_plus": k.r_plus(), "r_minus": k.r_minus(), "omega_horizon": k.omega_horizon(),
            "max_residuals": {
                "killing_yano": worst[0], "conformal_killing_yano": worst[1],
                "killing_tensor": worst[2], "xi": worst[3], "tetrad": worst[4],
            },
            "points": rows,
            "finite_difference": { "steps": [c.fd_step, 0.5 * c.fd_step], "points": fd_rows },
        }),
    })
}

params! {
    /// Integrate one geodesic and track E, L_z, the Carter constant and the
    /// normalisation.
    "geodesic", GeodesicArgs => GeodesicConfig {
        m: f64,
        a: f64,
        theta: f64,
        phi: f64,
        /// Contravariant u^r, u^θ, u^φ; u^t is solved for.
        ur: f64,
        utheta: f64,
        uphi: f64,
        /// timelike or null.
        causal: String,
        /// free, circular-prograde, circular-retrograde, photon-prograde or
        /// photon-retrograde.
        orbit: String,
        /// Final Boyer-Lindquist time.
        t_max: f64,
        /// Relative and absolute tolerance of the integrator.
        integrator_tol: f64,
        /// Bound on the relative drift of every conserved quantity.
        drift_tol: f64,
        /// Keep every n-th sample in the CSV.
        every: usize,
    }
    optional {
        /// Initial radius; required except for photon orbits.
        r: f64,
        /// CSV output with the sampled trajectory.
        csv: PathBuf,
    }
    defaults {
        "theta": std::f64::consts::FRAC_PI_2, "phi": 0.0, "ur": 0.0, "utheta": 0.0, "uphi": 0.0,
        "causal": "timelike", "orbit": "free", "t_max": 200.0, "integrator_tol": 1e-12,
        "drift_tol": 1e-9, "every": 1
    }
}

/// Equatorial circular photon orbit radius in closed form; the sense is
/// relative to the rotation of the hole.
pub fn photon_radius_closed_form(m: f64, a: f64, sense: OrbitSense) -> f64 {
    let s = match sense {
        OrbitSense::Prograde => -1.0,
        OrbitSense::Retrograde => 1.0,
    };
    2.0 * m * (1.0 + ((2.0 / 3.0) * (s * a.abs() / m).acos()).cos())
}

pub fn geodesic(c: &GeodesicConfig) -> Result<Outcome, Failure> {
    let k = KerrParams::new(c.m, c.a)?;
    let causal = match c.causal.as_str() {
        "timelike" => Causal::Timelike,
        "null" => Causal::Null,
        other => return Err(Failure::Input(format!("causal must be timelike or null, got {other:?}"))),
    };
    if c.every == 0 {
        return Err(Failure::Input("every must be at least 1".into()));
    }
    let mut photon = None;
    let r = || c.r.ok_or_else(|| Failure::MissingKey(format!("r for geodesic with orbit {}", c.orbit)));
    let state = match c.orbit.as_str() {
        "free" => GeodesicState::from_spatial(&k, [0.0, r()?, c.theta, c.phi], [c.ur, c.utheta, c.uphi], causal)?,
        "circular-prograde" => GeodesicState::circular_equatorial(&k, r()?, true)?,
        "circular-retrograde" => GeodesicState::circular_equatorial(&k, r()?, false)?,
        "photon-prograde" | "photon-retrograde" => {
            let sense = if c.orbit == "photon-prograde" { OrbitSense::Prograde } else { OrbitSense::Retrograde };
            let exact = photon_radius_closed_form(k.m, k.a, sense);
            let lo = (exact - 0.1 * k.m).max(k.r_plus() + 1e-6 * k.m);
            let r = photon_orbit_radius(&k, (lo, exact + 0.1 * k.m), sense, 1e-14)?;
            photon = Some((r, exact));
            bhl_core::geodesic::photon_orbit_state(&k, r, sense)?
        }
        other => return Err(Failure::Input(format!("unknown orbit kind {other:?}"))),
    };
    let opts = IntegratorOptions::with_tolerance(c.integrator_tol);
    let tr = integrate_geodesic(&k, &state, c.t_max, &opts)?;
    let drift = tr.max_drift();

    if let Some(path) = &c.csv {
        let mut csv = Csv::new(&["tau", "t", "r", "theta", "phi", "ut", "ur", "utheta", "uphi", "e", "lz", "k", "norm"]);
        let n = tr.samples.len();
        for (i, s) in tr.samples.iter().enumerate() {
            if i % c.every != 0 && i + 1 != n {
                continue;
            }
            let mut cells = vec![Cell::Float(s.tau)];
            cells.extend(s.x.iter().chain(&s.u).map(|v| Cell::Float(*v)));
            cells.extend([s.conserved.e, s.conserved.lz, s.conserved.k, s.norm].map(Cell::Float));
            csv.row(&cells);
        }
        csv.write(path)?;
    }

    let mut checks = Checks::default();
    checks.at_most("relative drift of E", drift.e, c.drift_tol);
    checks.at_most("relative drift of L_z", drift.lz, c.drift_tol);
    checks.at_most("relative drift of K", drift.k, c.drift_tol);
    checks.at_most("drift of g(u, u)", drift.norm, c.drift_tol);
    let mut results = json!({
        "initial": state,
        "final": tr.last(),
        "samples": tr.samples.len(),
        "plunged": tr.plunged,
        "drift": drift,
    });
    if let Some((r, exact)) = photon {
        checks.at_most("photon orbit radius against closed form", (r - exact).abs(), 1e-6 * k.m);
        results["photon_orbit"] = json!({ "radius": r, "closed_form": exact });
    }
    Ok(Outcome { observed_orders: BTreeMap::new(), checks, results })
}

params! {
    /// The conserved tensor V built from a Maxwell field and the Killing-Yano
    /// form, with its divergence at two finite-difference steps.
    "maxwell-currents", MaxwellArgs => MaxwellConfig {
        m: f64,
        a: f64,
        /// coulomb or wald.
        field: String,
        /// Charge (coulomb) or asymptotic field strength (wald).
        strength: f64,
        points: usize,
        seed: u64,
        r_min: f64,
        r_max: f64,
        /// Fine finite-difference step; the coarse step is twice this.
        step: f64,
        /// Bound on |∇·V| at the fine step.
        div_tol: f64,
        /// Slack allowed below zero in the dominant energy test.
        dec_tol: f64,
        min_order: f64,
    }
    optional {}
    defaults {
        "m": 1.0, "a": 0.5, "field": "coulomb", "strength": 1.0, "points": 20, "seed": 55,
        "r_min": 2.5, "r_max": 12.0, "step": 1e-3, "div_tol": 1e-5, "dec_tol": 1e-12, "min_order": 1.5
    }
}

/// Boosts used to probe `V(t₁, t₂) ≥ 0` for future timelike pairs.
const BOOSTS: [[f64; 3]; 6] =
    [[0.0; 3], [0.6, 0.1, -0.2], [-0.5, 0.3, 0.7], [0.0, 0.0, 0.95], [0.0, 0.9, 0.0], [-0.7, -0.6, 0.1]];

/// Below this size V counts as vanishing and no order is defined.
const V_FLOOR: f64 = 1e-20;

pub fn maxwell_currents(c: &MaxwellConfig) -> Result<Outcome, Failure> {
    let k = KerrParams::new(c.m, c.a)?;
    let setup = match c.field.as_str() {
        "coulomb" => MaxwellSetup::coulomb(k, c.strength),
        "wald" => MaxwellSetup::wald(k, c.strength),
        other => return Err(Failure::Input(format!("field must be coulomb or wald, got {other:?}"))),
    };
    if !(c.step > 0.0) || !(c.r_max > c.r_min) || c.points == 0 {
        return Err(Failure::Input("need step > 0, r_max > r_min and at least one point".into()));
    }
    let mut checks = Checks::default();
    let mut rows = Vec::new();
    let (mut worst_div, mut least_dec, mut min_q, mut vmax) = (0.0f64, f64::INFINITY, f64::INFINITY, 0.0f64);
    for p in sample_exterior_points(&k, c.points, c.seed, c.r_min, c.r_max) {
        let fine = setup.current_report(&p, c.step)?;
        let coarse = setup.current_report(&p, 2.0 * c.step)?;
        let lead = setup.with_step(c.step).v_leading(&p)?;
        let mut dec = f64::INFINITY;
        for u in BOOSTS {
            for w in BOOSTS {
                let t1 = boosted_observer(&k, &p, u)?;
                let t2 = boosted_observer(&k, &p, w)?;
                dec = dec.min(evaluate_on(&lead, &t1, &t2));
            }
        }
        let v = fine.v.max_abs();
        let q = (v > V_FLOOR).then(|| observed_order(coarse.div_v_residual, fine.div_v_residual));
        worst_div = worst_div.max(fine.div_v_residual);
        least_dec = least_dec.min(dec);
        vmax = vmax.max(v);
        if let Some(q) = q {
            min_q = min_q.min(q);
        }
        rows.push(json!({
            "report": fine,
            "div_v_residual_coarse": coarse.div_v_residual,
            "observed_order": q,
            "dominant_energy_min": dec,
        }));
    }
    checks.at_most("max div V residual", worst_div, c.div_tol);
    checks.at_least("min V(t1, t2) over boosted observers", least_dec, -c.dec_tol);
    let mut observed_orders = BTreeMap::new();
    if min_q.is_finite() {
        checks.at_least("div V order", min_q, c.min_order);
        observed_orders.insert("div_v".to_string(), min_q);
    }
    Ok(Outcome {
        observed_orders,
        checks,
        results: json!({
            "max_div_v_residual": worst_div,
            "max_abs_v": vmax,
            "v_vanishes": vmax <= V_FLOOR,
            "steps": [c.step, 2.0 * c.step],
            "points": rows,
        }),
    })
}
