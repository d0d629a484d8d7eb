//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;
use std::time::Instant;

use bhl_core::geodesic::{
    circular_angular_velocity, integrate_geodesic, photon_orbit_radius, Causal, GeodesicState, IntegratorOptions,
    OrbitSense,
};
use bhl_core::hyperbolic::{
    cauchy_solve, dirac_solve_by_squaring, dirac_solve_direct, formal_dual_residual, goursat_solve, green_clauses,
    BumpFunction, ConnectionProfile, DiracData, GoursatData, GreenKind, Grid1p1, WaveOperator1d, DEFAULT_COLLAR,
};
use bhl_core::index::{index_report, IndexSettings};
use bhl_core::kerr::{
    boosted_observer, cky_residual, killing_tensor_residual, ky_residual, metric_cov, sample_exterior_points,
    tetrad_residual, xi_residual, zamo_frame, Derivatives, KerrParams,
};
use bhl_core::maxwell::{evaluate_on, MaxwellSetup};
use bhl_core::slice::{constraint_residual, SliceData, VACUUM_TOLERANCE};
use bhl_core::tensor::{FdOptions, FdScheme};
use bhl_core::wave::{
    commutator_residual, evolve, steps_to, trapping_cutoff, EvolveOptions, GridSpec, InitialData, WaveGrid,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

trait Ctx<T> {
    fn ctx(self, what: &str) -> std::result::Result<T, String>;
}

impl<T, E: std::fmt::Display> Ctx<T> for std::result::Result<T, E> {
    fn ctx(self, what: &str) -> std::result::Result<T, String> {
        self.map_err(|e| format!("{what}: {e}"))
    }
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn kp(a: f64) -> KerrParams {
    KerrParams::new(1.0, a).expect("subextremal parameters")
}

fn geometry() -> Check {
    let mut worst: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    for (i, a) in [0.0, 0.5, 0.9].into_iter().enumerate() {
        let k = kp(a);
        for p in sample_exterior_points(&k, 50, 100 + i as u64, 1.0, 20.0) {
            let r = [
                ky_residual(&k, &p, Derivatives::Analytic).ctx("KY")?,
                cky_residual(&k, &p, Derivatives::Analytic).ctx("CKY")?,
                killing_tensor_residual(&k, &p, Derivatives::Analytic).ctx("Killing tensor")?,
                tetrad_residual(&k, &p).ctx("tetrad")?,
                xi_residual(&k, &p, Derivatives::Analytic).ctx("xi")?,
            ];
            let m = r.iter().copied().fold(0.0, f64::max);
            ensure(m <= 1e-8, || format!("a = {a}, point {p:?}: residuals {r:?} exceed 1e-8"))?;
            worst = worst.max(m);
        }
        for p in sample_exterior_points(&k, 5, 200 + i as u64, 3.0, 12.0) {
            let fd = |h: f64| Derivatives::FiniteDifference(FdOptions::new(h, FdScheme::Central2));
            let pairs = [
                (ky_residual(&k, &p, fd(2e-2)), ky_residual(&k, &p, fd(1e-2)), "KY"),
                (cky_residual(&k, &p, fd(2e-2)), cky_residual(&k, &p, fd(1e-2)), "CKY"),
                (killing_tensor_residual(&k, &p, fd(2e-2)), killing_tensor_residual(&k, &p, fd(1e-2)), "Killing tensor"),
                (xi_residual(&k, &p, fd(2e-2)), xi_residual(&k, &p, fd(1e-2)), "xi"),
            ];
            for (c, f, name) in pairs {
                let q = order(c.ctx(name)?, f.ctx(name)?);
                ensure(q >= 1.9, || format!("{name} FD order {q:.3} at a = {a}, {p:?}"))?;
                min_order = min_order.min(q);
            }
        }
    }
    Ok(format!("max analytic residual {worst:.2e} over 150 points; min FD order {min_order:.3}"))
}

/// Local circular speed seen by the zero angular momentum observer.
fn zamo_circular_speed(k: &KerrParams, r: f64, sense: OrbitSense) -> std::result::Result<f64, String> {
    let w = circular_angular_velocity(k, r, sense).ctx("circular orbit")?;
    let g = metric_cov(k.m, k.a, r, FRAC_PI_2);
    let omega = -g[0][3] / g[3][3];
    let alpha = (g[0][3] * g[0][3] / g[3][3] - g[0][0]).sqrt();
    Ok((g[3][3].sqrt() * (w - omega) / alpha).abs())
}

fn geodesics() -> Check {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let opts = IntegratorOptions::default();
    let mut worst: f64 = 0.0;
    for n in 0..20 {
        let a = [0.0, 0.5, 0.9][n % 3];
        let k = kp(a);
        let x = [0.0, rng.random_range(10.0..16.0), rng.random_range(0.7..2.4), 0.0];
        let sgn = if n % 2 == 0 { 1.0 } else { -1.0 };
        let state = if n % 4 == 3 {
            let e = zamo_frame(&k, &x).ctx("frame")?;
            let d: [f64; 3] = [rng.random_range(0.0..0.3), rng.random_range(-0.3..0.3), sgn];
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u = std::array::from_fn(|c| e[0][c] + (0..3).map(|i| d[i] / norm * e[i + 1][c]).sum::<f64>());
            GeodesicState::new(&k, x, u, Causal::Null)
        } else {
            let sense = if sgn > 0.0 { OrbitSense::Prograde } else { OrbitSense::Retrograde };
            let vc = zamo_circular_speed(&k, x[1], sense)?;
            let v = [
                rng.random_range(-0.1..0.1) * vc,
                rng.random_range(-0.2..0.2) * vc,
                sgn * vc * rng.random_range(0.95..1.1),
            ];
            GeodesicState::new(&k, x, boosted_observer(&k, &x, v).ctx("boost")?, Causal::Timelike)
        }
        .ctx("initial state")?;
        let tr = integrate_geodesic(&k, &state, 200.0, &opts).ctx("integration")?;
        ensure(!tr.plunged, || format!("orbit {n} plunged before t = 200"))?;
        let d = tr.max_drift();
        ensure(d.max() <= 1e-9, || format!("orbit {n} drift {d:?}"))?;
        worst = worst.max(d.max());
    }
    let r = photon_orbit_radius(&kp(0.0), (2.5, 4.0), OrbitSense::Prograde, 1e-14).ctx("photon orbit")?;
    ensure((r - 3.0).abs() <= 1e-6, || format!("photon orbit at r = {r}"))?;
    Ok(format!("max relative drift {worst:.2e} over 20 orbits to t = 200; photon orbit r = {r:.12}"))
}

fn commutator() -> Check {
    let k = kp(0.5);
    type Field = Box<dyn Fn(f64, f64, f64) -> C64 + Sync>;
    let fields: Vec<(i32, Field)> = vec![
        (0, Box::new(|t, r, th| C64::new((-(r - 6.0) * (r - 6.0) / 4.0).exp() * th.cos() * (0.3 * t).cos(), 0.0))),
        (1, Box::new(|t, r, th| C64::new(th.sin() * (-0.1 * r).exp() * (1.0 + 0.2 * t), 0.0))),
        (2, Box::new(|t, r, th| C64::from_polar(th.sin().powi(2) * th.cos() / (r * r), 0.4 * t))),
        (0, Box::new(|t, r, th| C64::new(r.sin() * th.cos().exp() * (-0.05 * t * t).exp(), 0.0))),
        (1, Box::new(|t, r, th| C64::new(th.sin() * (r * r + th.cos()) / r.powi(3) * (0.7 * t + r).cos(), 0.0))),
    ];
    let mut rng = rand::rngs::StdRng::seed_from_u64(33);
    let pts: Vec<[f64; 3]> =
        (0..6).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(2.3..4.5), rng.random_range(0.5..2.6)]).collect();
    let (h0, h1) = (0.025, 0.0125);
    let mut min_order = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for (n, (m, f)) in fields.iter().enumerate() {
        let sup = |h: f64| -> std::result::Result<(f64, f64), String> {
            let (mut s, mut p, mut u) = (0.0f64, 0.0f64, 0.0f64);
            for x in &pts {
                let c = commutator_residual(&k, *m, f.as_ref(), *x, h).ctx("commutator")?;
                s = s.max(c.sigma_box);
                p = p.max(c.plain_box);
                u = u.max(c.field);
            }
            Ok((s / u, p / u))
        };
        let (s0, _) = sup(h0)?;
        let (s1, p1) = sup(h1)?;
        let q = order(s0, s1);
        ensure(q >= 1.8, || format!("field {n}: order {q:.3} ({s0:.3e} -> {s1:.3e})"))?;
        ensure(p1 > 100.0 * s1, || format!("field {n}: [Q, box] = {p1:.3e} not 100x [Q, Sigma box] = {s1:.3e}"))?;
        min_order = min_order.min(q);
        min_gap = min_gap.min(p1 / s1);
    }
    Ok(format!("5 fields at a = 0.5: min order {min_order:.3}; [Q, box] / [Q, Sigma box] >= {min_gap:.2e}"))
}

fn morawetz_ratio(k: KerrParams, m: i32, data: &InitialData, nr: usize, nth: usize, scale: f64) -> std::result::Result<f64, String> {
    let grid = Arc::new(WaveGrid::new(k, m, GridSpec::with_size(nr, nth)).ctx("grid")?);
    let field = data.sample(grid.clone()).ctx("initial data")?.scaled(scale);
    let (steps, dt) = steps_to(&grid, 150.0, 0.5).ctx("steps")?;
    let opts = EvolveOptions { dt: Some(dt), ..Default::default() };
    let (_, reports) = evolve(&field, steps, &opts).ctx("evolution")?;
    let last = reports.last().ok_or("no reports")?;
    ensure((last.time - 150.0).abs() < 1e-9, || format!("final time {}", last.time))?;
    Ok(last.ratio)
}

fn morawetz() -> Check {
    let mut worst_drift: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    let mut range = (f64::INFINITY, 0.0f64);
    for a in [0.0, 0.1] {
        let k = kp(a);
        for m in [0, 1] {
            let probe = WaveGrid::new(k, m, GridSpec::with_size(400, 32)).ctx("grid")?;
            ensure(probe.r.iter().any(|&r| trapping_cutoff(r, k.m) == 0.0), || "cutoff never vanishes on the grid".into())?;
            for data in InitialData::standard_families(m) {
                let coarse = morawetz_ratio(k, m, &data, 400, 32, 1.0)?;
                let doubled = morawetz_ratio(k, m, &data, 400, 32, 2.0)?;
                let odd = morawetz_ratio(k, m, &data, 400, 32, 3.7)?;
                let fine = morawetz_ratio(k, m, &data, 800, 64, 1.0)?;
                let tag = format!("a = {a}, m = {m}, {}", data.family_name());
                ensure(coarse.is_finite() && fine.is_finite() && coarse > 0.0, || format!("{tag}: ratio {coarse} / {fine}"))?;
                ensure(doubled == coarse, || format!("{tag}: doubling the data changed the ratio {coarse} -> {doubled}"))?;
                let s = (odd - coarse).abs() / coarse;
                ensure(s <= 1e-12, || format!("{tag}: scaling by 3.7 changed the ratio by {s:.2e}"))?;
                let drift = (fine - coarse).abs() / fine.abs();
                ensure(drift <= 0.1, || format!("{tag}: grid drift {drift:.3} ({coarse} vs {fine})"))?;
                worst_drift = worst_drift.max(drift);
                worst_scale = worst_scale.max(s);
                range = (range.0.min(coarse), range.1.max(coarse));
            }
        }
    }
    Ok(format!(
        "12 runs: ratios in [{:.3}, {:.3}], max grid drift {:.2}%, scaling defect {worst_scale:.1e}",
        range.0,
        range.1,
        100.0 * worst_drift
    ))
}

fn dominant_energy(s: &MaxwellSetup, k: &KerrParams, p: &[f64; 4]) -> std::result::Result<f64, String> {
    let v = s.v_leading(p).ctx("leading part")?;
    let boosts = [[0.0; 3], [0.6, 0.1, -0.2], [-0.5, 0.3, 0.7], [0.0, 0.0, 0.95], [0.0, 0.9, 0.0], [-0.7, -0.6, 0.1]];
    let mut least = f64::INFINITY;
    for u in boosts {
        for w in boosts {
            let t1 = boosted_observer(k, p, u).ctx("observer")?;
            let t2 = boosted_observer(k, p, w).ctx("observer")?;
            least = least.min(evaluate_on(&v, &t1, &t2));
        }
    }
    Ok(least)
}

fn currents_coulomb() -> Check {
    let k = kp(0.5);
    let s = MaxwellSetup::coulomb(k, 1.0);
    let mut worst: f64 = 0.0;
    let mut vmax: f64 = 0.0;
    for p in sample_exterior_points(&k, 20, 55, 2.5, 12.0) {
        let rep = s.current_report(&p, 1e-3).ctx("current report")?;
        ensure(rep.div_v_residual <= 1e-5, || format!("div V = {:.3e} at {p:?}", rep.div_v_residual))?;
        ensure(dominant_energy(&s, &k, &p)? >= -1e-12, || format!("dominant energy fails at {p:?}"))?;
        worst = worst.max(rep.div_v_residual);
        vmax = vmax.max(rep.v.max_abs());
    }
    ensure(vmax <= 1e-20, || format!("Coulomb V not identically zero: {vmax:.3e}"))?;
    Ok(format!("Coulomb q = 1 on (1, 0.5), 20 points: max div V {worst:.2e}, max |V| {vmax:.1e} (V vanishes, order undefined)"))
}

fn currents_wald() -> Check {
    let k = kp(0.5);
    let s = MaxwellSetup::wald(k, 1.0);
    let mut worst: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    for p in sample_exterior_points(&k, 20, 55, 2.5, 12.0) {
        let fine = s.current_report(&p, 1e-3).ctx("current report")?;
        let coarse = s.current_report(&p, 2e-3).ctx("current report")?;
        ensure(fine.div_v_residual <= 1e-5, || format!("div V = {:.3e} at {p:?}", fine.div_v_residual))?;
        let q = order(coarse.div_v_residual, fine.div_v_residual);
        ensure(q >= 1.5, || format!("order {q:.3} at {p:?}"))?;
        let least = dominant_energy(&s.with_step(1e-3), &k, &p)?;
        ensure(least >= -1e-12, || format!("dominant energy fails at {p:?}: {least:e}"))?;
        worst = worst.max(fine.div_v_residual);
        min_order = min_order.min(q);
    }
    Ok(format!("Wald B = 1 on (1, 0.5), 20 points: max div V {worst:.2e} at step 1e-3, min order {min_order:.3}, DEC holds"))
}

fn in_band(q: f64) -> bool {
    (1.8..=2.2).contains(&q)
}

fn cauchy_error(nx: usize, mu: f64) -> std::result::Result<f64, String> {
    // u = cos(ω t) sin x with ω² = 1 + μ² solves u_tt − u_xx + μ² u = 0
    let g = Grid1p1::new(nx, 3.0, 0.5).ctx("grid")?;
    let op = WaveOperator1d::with_potential(move |_, _| mu * mu);
    let u = cauchy_solve(&op, &g, &|x, _| C64::new(x.sin(), 0.0), &|_, _| C64::new(0.0, 0.0), None).ctx("cauchy")?;
    let w = (1.0 + mu * mu).sqrt();
    let mut e: f64 = 0.0;
    for n in 0..=g.nt {
        for i in 0..nx {
            e = e.max((u.get(n, i, 0) - (w * g.t(n)).cos() * g.x(i).sin()).norm());
        }
    }
    Ok(e)
}

fn goursat_error(n: usize) -> std::result::Result<f64, String> {
    let exact = |u: f64, v: f64| C64::from_polar(1.0, u + 2.0 * v) + u * v * v;
    let on_u = |u: f64| exact(u, 0.0);
    let on_v = |v: f64| exact(0.0, v);
    let src = |u: f64, v: f64| C64::from_polar(1.0, u + 2.0 * v) * -8.0 + 8.0 * v;
    let d = GoursatData { on_u_ray: &on_u, on_v_ray: &on_v, source: &src };
    let g = goursat_solve(&d, (2.0, 3.0), (n, n)).ctx("goursat")?;
    let mut e: f64 = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            e = e.max((g.get(i, j) - exact(i as f64 * g.hu, j as f64 * g.hv)).norm());
        }
    }
    Ok(e)
}

fn solution_theory() -> Check {
    let mut notes = Vec::new();
    for mu in [0.0, 0.7] {
        let e: Vec<f64> = [64, 128, 256].iter().map(|&n| cauchy_error(n, mu)).collect::<std::result::Result<_, _>>()?;
        for w in e.windows(2) {
            let q = order(w[0], w[1]);
            ensure(in_band(q), || format!("cauchy order {q:.3} for mu = {mu}"))?;
        }
        notes.push(format!("cauchy {:.2}", order(e[1], e[2])));
    }
    let e: Vec<f64> = [32, 64, 128].iter().map(|&n| goursat_error(n)).collect::<std::result::Result<_, _>>()?;
    for w in e.windows(2) {
        let q = order(w[0], w[1]);
        ensure(in_band(q), || format!("goursat order {q:.3}"))?;
    }
    notes.push(format!("goursat {:.2}", order(e[1], e[2])));

    let prof = ConnectionProfile::ramp(2.0, 0.3, 1.3, DEFAULT_COLLAR).ctx("profile")?;
    let u0 = |x: f64| [C64::new(x.sin().exp(), 0.0), C64::from_polar(0.5, 2.0 * x)];
    let src = |t: f64, x: f64| [C64::new(0.0, 0.2 * (t * x.cos()).sin()), C64::new(0.1 * (x - t).cos(), 0.0)];
    let data = DiracData { u0: &u0, source: Some(&src), connection: Some(prof) };
    let gref = Grid1p1::new(1024, 2.0, 0.4).ctx("grid")?;
    let reference = dirac_solve_direct(&data, &gref).ctx("direct dirac")?;
    let mut e = Vec::new();
    for nx in [128usize, 256, 512] {
        let g = Grid1p1::new(nx, 2.0, 0.4).ctx("grid")?;
        let u = dirac_solve_by_squaring(&data, &g).ctx("dirac by squaring")?;
        let stride = gref.nx / nx;
        let mut err: f64 = 0.0;
        for i in 0..nx {
            for c in 0..2 {
                err = err.max((u.get(g.nt, i, c) - reference.get(gref.nt, i * stride, c)).norm());
            }
        }
        e.push(err);
    }
    for w in e.windows(2) {
        let q = order(w[0], w[1]);
        ensure(in_band(q), || format!("dirac squaring order {q:.3}"))?;
    }
    notes.push(format!("dirac {:.2}", order(e[1], e[2])));

    let ops = [
        ("flat", WaveOperator1d::flat()),
        ("potential", WaveOperator1d::with_potential(|t, x| 0.3 + 0.2 * x.cos() * (0.5 * t).sin())),
    ];
    let phi = BumpFunction::new(3.0, 1.0, 3.0, 0.8);
    let mut leak: f64 = 0.0;
    let mut min_q = f64::INFINITY;
    for (name, op) in &ops {
        for kind in [GreenKind::Forward, GreenKind::Backward] {
            let mut reps = Vec::new();
            for nx in [256usize, 512, 1024] {
                let g = Grid1p1::new(nx, 6.0, 0.5).ctx("grid")?;
                let r = green_clauses(op, &g, kind, &phi).ctx("green")?;
                ensure(r.collar_cells <= 2 && r.support_ok(), || format!("{name} {kind:?}: support leak {:.2e}", r.support_leak))?;
                leak = leak.max(r.support_leak);
                reps.push(r);
            }
            for w in reps.windows(2) {
                let ql = order(w[0].left_inverse, w[1].left_inverse);
                let qr = order(w[0].right_inverse, w[1].right_inverse);
                ensure(ql >= 1.8 && qr >= 1.8, || format!("{name} {kind:?}: clause orders {ql:.3}, {qr:.3}"))?;
                min_q = min_q.min(ql).min(qr);
            }
        }
    }
    notes.push(format!("green clause order >= {min_q:.2}, leak {leak:.1e}"));

    let g = Grid1p1::new(256, 6.0, 0.5).ctx("grid")?;
    let f = BumpFunction::new(3.0, 1.2, 2.5, 1.0);
    let mut psi = BumpFunction::new(3.2, 1.5, 3.0, 1.3);
    psi.amplitude = C64::new(0.3, 0.7);
    let mut dual: f64 = 0.0;
    for (_, op) in &ops {
        dual = dual.max(formal_dual_residual(op, &g, &f, &psi).ctx("formal dual")?);
    }
    ensure(dual <= 1e-6, || format!("formal dual residual {dual:.3e} at N_x = 256"))?;
    notes.push(format!("formal dual {dual:.1e}"));
    Ok(notes.join("; "))
}

fn index_theorem() -> Check {
    let settings = IndexSettings::default();
    let mut count = 0;
    for frac in [0.0, 0.3] {
        for flux in -3..=3 {
            let (a0, a1) = (frac, frac + flux as f64);
            let prof = ConnectionProfile::ramp(10.0, a0, a1, DEFAULT_COLLAR).ctx("profile")?;
            let rep = index_report(&prof, &settings).ctx("index")?;
            let rhs = rep.rhs.value;
            ensure(rep.lhs == rhs.round() as i64, || format!("{a0} -> {a1}: lhs {} vs rhs {rhs}", rep.lhs))?;
            ensure(rep.integrality_defect() <= 1e-9, || format!("{a0} -> {a1}: rhs {rhs} not integral"))?;
            ensure((rep.q_left + rep.q_right).abs() <= 1e-12, || format!("{a0} -> {a1}: charges do not cancel"))?;
            ensure((rep.q_chiral + 2.0 * flux as f64).abs() <= 1e-9, || format!("{a0} -> {a1}: q_chiral {}", rep.q_chiral))?;
            for (amp, harmonic) in [(0.8, 1), (-1.5, 2), (2.5, 3)] {
                let bent = index_report(&prof.deformed(amp, harmonic), &settings).ctx("deformed index")?;
                ensure(bent.lhs == rep.lhs && (bent.rhs.value - rhs).abs() <= 1e-9, || {
                    format!("{a0} -> {a1}: deformation changed the index to {} / {}", bent.lhs, bent.rhs.value)
                })?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} profiles: lhs = rhs, integral to 1e-9, homotopy invariant, q_L + q_R = 0, q_chir = -2 flux"))
}

fn constraints() -> Check {
    let data = SliceData::schwarzschild(1.0);
    let pts = [[5.0, 1.0, 0.0], [3.5, 0.6, 1.0], [8.0, 2.0, 4.0]];
    let mut min_order = f64::INFINITY;
    for x in pts {
        let e = |h: f64| -> std::result::Result<f64, String> {
            let s = constraint_residual(&data, &[x], h).ctx("constraints")?;
            Ok(s[0].hamiltonian.abs().max(s[0].momentum_norm()))
        };
        let q = order(e(0.04)?, e(0.02)?);
        ensure(q >= 1.9, || format!("Schwarzschild order {q:.3} at {x:?}"))?;
        min_order = min_order.min(q);
    }
    let s = constraint_residual(&SliceData::round_three_sphere(1.0), &[[1.1, 0.8, 0.0], [0.4, 2.0, 1.0]], 1e-3)
        .ctx("three-sphere")?;
    for c in &s {
        ensure((c.hamiltonian - 6.0).abs() <= 1e-3, || format!("S3 hamiltonian {}", c.hamiltonian))?;
        ensure(!c.is_vacuum(VACUUM_TOLERANCE), || "S3 slice accepted as vacuum".into())?;
    }
    Ok(format!("Schwarzschild min order {min_order:.3}; unit S3 hamiltonian {:.6}, flagged non-vacuum", s[0].hamiltonian))
}

fn main() {
    let checks: [(&str, fn() -> Check); 9] = [
        ("1 geometry residuals", geometry),
        ("2 geodesic integrability", geodesics),
        ("3 Carter commutation", commutator),
        ("4 Morawetz surrogate", morawetz),
        ("5a V conservation (Coulomb)", currents_coulomb),
        ("5b V conservation (Wald order study)", currents_wald),
        ("6 1+1 solution theory", solution_theory),
        ("7 index theorem", index_theorem),
        ("8 constraint residuals", constraints),
    ];
    // optional name filters, e.g. `cargo test --test acceptance -- Morawetz`
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in checks {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
