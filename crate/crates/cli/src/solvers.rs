//! `green`, `goursat` and `dirac` on the 1+1 cylinder.

use std::collections::BTreeMap;

use bhl_core::hyperbolic::{
    dirac_solve_by_squaring, dirac_solve_direct, formal_dual_residual, goursat_solve, green_clauses, BumpFunction,
    ConnectionProfile, DiracData, GoursatData, GreenKind, Grid1p1, WaveOperator1d,
};
use bhl_core::C64;
use serde_json::json;

use crate::config::params;
use crate::error::Failure;
use crate::report::{observed_order, Checks, Outcome};

params! {
    /// Green operator clauses G P φ = φ, P G φ = φ and support containment at
    /// three resolutions, plus the formal dual identity.
    "green", GreenArgs => GreenConfig {
        /// Coarsest number of spatial cells; two refinements follow.
        nx: usize,
        /// Time extent T of the slab.
        t_extent: f64,
        cfl: f64,
        /// forward, backward or both.
        kind: String,
        /// Potential v0 + v1 cos(x) sin(v_omega t).
        v0: f64,
        v1: f64,
        v_omega: f64,
        /// Test function centre and half widths.
        bump_t0: f64,
        bump_wt: f64,
        bump_x0: f64,
        bump_wx: f64,
        min_order: f64,
        /// Bound on the formal dual residual at the coarsest grid.
        dual_tol: f64,
        /// Largest relative value tolerated outside the light cone.
        support_tol: f64,
    }
    optional {}
    defaults {
        "nx": 256, "t_extent": 6.0, "cfl": 0.5, "kind": "both", "v0": 0.0, "v1": 0.0, "v_omega": 0.5,
        "bump_t0": 3.0, "bump_wt": 1.0, "bump_x0": 3.0, "bump_wx": 0.8, "min_order": 1.8,
        "dual_tol": 1e-6, "support_tol": bhl_core::hyperbolic::SUPPORT_THRESHOLD
    }
}

const LEVELS: [usize; 3] = [1, 2, 4];

pub fn green(c: &GreenConfig) -> Result<Outcome, Failure> {
    let kinds = match c.kind.as_str() {
        "forward" => vec![GreenKind::Forward],
        "backward" => vec![GreenKind::Backward],
        "both" => vec![GreenKind::Forward, GreenKind::Backward],
        other => return Err(Failure::Input(format!("kind must be forward, backward or both, got {other:?}"))),
    };
    let (v0, v1, w) = (c.v0, c.v1, c.v_omega);
    let op = WaveOperator1d::with_potential(move |t, x| v0 + v1 * x.cos() * (w * t).sin());
    let phi = BumpFunction::new(c.bump_t0, c.bump_wt, c.bump_x0, c.bump_wx);
    let mut checks = Checks::default();
    let mut observed_orders = BTreeMap::new();
    let mut per_kind = serde_json::Map::new();
    for kind in kinds {
        let tag = match kind {
            GreenKind::Forward => "forward",
            GreenKind::Backward => "backward",
        };
        let mut reps = Vec::new();
        for f in LEVELS {
            let g = Grid1p1::new(c.nx * f, c.t_extent, c.cfl)?;
            let r = green_clauses(&op, &g, kind, &phi)?;
            checks.at_most(format!("{tag} support leak at nx = {}", g.nx), r.support_leak, c.support_tol);
            reps.push((g.nx, r));
        }
        let mut orders = Vec::new();
        for w in reps.windows(2) {
            let ql = observed_order(w[0].1.left_inverse, w[1].1.left_inverse);
            let qr = observed_order(w[0].1.right_inverse, w[1].1.right_inverse);
            checks.at_least(format!("{tag} left inverse order {} -> {}", w[0].0, w[1].0), ql, c.min_order);
            checks.at_least(format!("{tag} right inverse order {} -> {}", w[0].0, w[1].0), qr, c.min_order);
            orders.push(json!({ "nx": [w[0].0, w[1].0], "left_inverse": ql, "right_inverse": qr }));
        }
        let last = reps.len() - 1;
        observed_orders.insert(
            format!("{tag}_left_inverse"),
            observed_order(reps[last - 1].1.left_inverse, reps[last].1.left_inverse),
        );
        observed_orders.insert(
            format!("{tag}_right_inverse"),
            observed_order(reps[last - 1].1.right_inverse, reps[last].1.right_inverse),
        );
        let levels: Vec<_> = reps
            .iter()
            .map(|(nx, r)| json!({ "nx": nx, "report": r, "support_contained": r.support_leak <= c.support_tol }))
            .collect();
        per_kind.insert(tag.to_string(), json!({ "levels": levels, "orders": orders }));
    }

    // two further test functions centred in the slab
    let t = c.t_extent;
    let g = Grid1p1::new(c.nx, t, c.cfl)?;
    let f = BumpFunction::new(0.5 * t, 0.2 * t, 2.5, 1.0);
    let mut psi = BumpFunction::new(0.5 * t + 0.2, 0.25 * t, 3.0, 1.3);
    psi.amplitude = C64::new(0.3, 0.7);
    let dual = formal_dual_residual(&op, &g, &f, &psi)?;
    checks.at_most("formal dual residual", dual, c.dual_tol);
    Ok(Outcome {
        observed_orders,
        checks,
        results: json!({ "green": per_kind, "formal_dual_residual": dual }),
    })
}

params! {
    /// Characteristic initial value problem with a manufactured solution
    /// exp(i(ku u + kv v)) + u v^2, solved at three resolutions.
    "goursat", GoursatArgs => GoursatConfig {
        u_extent: f64,
        v_extent: f64,
        /// Coarsest number of cells per side.
        cells: usize,
        ku: f64,
        kv: f64,
        min_order: f64,
        max_order: f64,
    }
    optional {}
    defaults {
        "u_extent": 2.0, "v_extent": 3.0, "cells": 32, "ku": 1.0, "kv": 2.0, "min_order": 1.8, "max_order": 2.2
    }
}

pub fn goursat(c: &GoursatConfig) -> Result<Outcome, Failure> {
    let (ku, kv) = (c.ku, c.kv);
    let exact = move |u: f64, v: f64| C64::from_polar(1.0, ku * u + kv * v) + u * v * v;
    let on_u = move |u: f64| exact(u, 0.0);
    let on_v = move |v: f64| exact(0.0, v);
    // □ = 4 ∂_u ∂_v
    let src = move |u: f64, v: f64| C64::from_polar(1.0, ku * u + kv * v) * (-4.0 * ku * kv) + 8.0 * v;
    let data = GoursatData { on_u_ray: &on_u, on_v_ray: &on_v, source: &src };
    let mut errors = Vec::new();
    for f in LEVELS {
        let n = c.cells * f;
        let g = goursat_solve(&data, (c.u_extent, c.v_extent), (n, n))?;
        let mut e: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                e = e.max((g.get(i, j) - exact(i as f64 * g.hu, j as f64 * g.hv)).norm());
            }
        }
        errors.push((n, e));
    }
    order_band("goursat", &errors, c.min_order, c.max_order)
}

/// Checks every successive pair of `(resolution, error)` for an observed order
/// inside `[lo, hi]`.
fn order_band(name: &str, errors: &[(usize, f64)], lo: f64, hi: f64) -> Result<Outcome, Failure> {
    let mut checks = Checks::default();
    let mut orders = Vec::new();
    for w in errors.windows(2) {
        let q = observed_order(w[0].1, w[1].1);
        let label = format!("{name} order {} -> {}", w[0].0, w[1].0);
        checks.at_least(format!("{label} (lower bound)"), q, lo);
        checks.at_most(format!("{label} (upper bound)"), q, hi);
        orders.push(q);
    }
    let mut observed_orders = BTreeMap::new();
    if let Some(q) = orders.last() {
        observed_orders.insert(name.to_string(), *q);
    }
    let levels: Vec<_> = errors.iter().map(|(n, e)| json!({ "resolution": n, "max_error": e })).collect();
    Ok(Outcome { observed_orders, checks, results: json!({ "levels": levels, "orders": orders }) })
}

params! {
    /// Dirac equation with a time-dependent connection, solved by squaring to
    /// a wave equation and compared with a fine direct solve.
    "dirac", DiracArgs => DiracConfig {
        /// Coarsest number of spatial cells; two refinements follow.
        nx: usize,
        t_extent: f64,
        cfl: f64,
        /// Connection ramp a(0) and a(T).
        a0: f64,
        a1: f64,
        collar: f64,
        /// The direct reference solve uses this many times the finest nx.
        reference_factor: usize,
        min_order: f64,
        max_order: f64,
    }
    optional {}
    defaults {
        "nx": 128, "t_extent": 2.0, "cfl": 0.4, "a0": 0.3, "a1": 1.3, "collar": 0.05,
        "reference_factor": 2, "min_order": 1.8, "max_order": 2.2
    }
}

pub fn dirac(c: &DiracConfig) -> Result<Outcome, Failure> {
    if c.reference_factor < 2 {
        return Err(Failure::Input("reference_factor must be at least 2".into()));
    }
    let prof = ConnectionProfile::ramp(c.t_extent, c.a0, c.a1, c.collar)?;
    let u0 = |x: f64| [C64::new(x.sin().exp(), 0.0), C64::from_polar(0.5, 2.0 * x)];
    let src = |t: f64, x: f64| [C64::new(0.0, 0.2 * (t * x.cos()).sin()), C64::new(0.1 * (x - t).cos(), 0.0)];
    let data = DiracData { u0: &u0, source: Some(&src), connection: Some(prof) };
    let finest = c.nx * LEVELS[LEVELS.len() - 1];
    let gref = Grid1p1::new(finest * c.reference_factor, c.t_extent, c.cfl)?;
    let reference = dirac_solve_direct(&data, &gref)?;
    let mut errors = Vec::new();
    for f in LEVELS {
        let g = Grid1p1::new(c.nx * f, c.t_extent, c.cfl)?;
        let u = dirac_solve_by_squaring(&data, &g)?;
        let stride = gref.nx / g.nx;
        let mut err: f64 = 0.0;
        for i in 0..g.nx {
            for k in 0..2 {
                err = err.max((u.get(g.nt, i, k) - reference.get(gref.nt, i * stride, k)).norm());
            }
        }
        errors.push((g.nx, err));
    }
    order_band("dirac_by_squaring", &errors, c.min_order, c.max_order)
}
