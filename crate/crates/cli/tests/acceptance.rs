//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion outside `KNOWN_FAILURES` fails.

use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use caputo_burgers::bounds::{
    envelope_w, lower_bound_constants, lower_bound_t, monotonicity_scan_b, upper_bound_b,
};
use caputo_burgers::fode::{
    estimate_blowup, estimate_blowup_from, solve, solve_capped, BlowupConfig, Nonlinearity,
    SolverConfig,
};
use caputo_burgers::frac_ops::caputo_left;
use caputo_burgers::impulse::{fractional_impulse_solution, step_solution, ImpulseTrain};
use caputo_burgers::pde::{
    rho_to_u, solve_rho, solve_u, stable_step, BoundaryRule, MarketParams, PdeConfig, SpatialGrid,
};
use caputo_burgers::specfun::gamma;
use caputo_burgers::{FractionalOrder, SampledFunction, TimeGrid};

/// Criteria that cannot pass for a correct solver. Criterion 6 asks the
/// violation of v <= z to shrink under refinement, but below t = d the exact
/// solution lies above z, so the measured violation converges to a positive
/// value instead.
const KNOWN_FAILURES: &[u32] = &[6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_caputo-burgers"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("utf-8 output"),
    )
}

fn cli_json(args: &[&str]) -> serde_json::Value {
    let (code, out) = cli(args);
    assert_eq!(code, 0, "{args:?} exited with {code}");
    serde_json::from_str(&out).expect("json output")
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail.push_str(&format!("; {:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()));
    o.pass &= elapsed < limit;
    o
}

fn c1_bound_constants() -> Outcome {
    timed(Duration::from_secs(1), || {
        let half = cli_json(&["bounds", "--alpha", "0.5"])["upper_bound_b"].as_f64().unwrap();
        let tiny = cli_json(&["bounds", "--alpha", "1e-4"])["upper_bound_b"].as_f64().unwrap();
        let e_half = (half - 4.0 / PI).abs();
        let e_tiny = (tiny - 1.526_205_11).abs();
        Outcome {
            pass: e_half <= 1e-12 && e_tiny <= 1e-4,
            detail: format!("b(0.5)={half} (err {e_half:.1e}), b(1e-4)={tiny} (err {e_tiny:.1e})"),
        }
    })
}

fn c2_monotone_b() -> Outcome {
    timed(Duration::from_secs(1), || {
        let ok = monotonicity_scan_b(99).unwrap();
        Outcome {
            pass: ok,
            detail: format!("monotonicity_scan_b(99) = {ok}"),
        }
    })
}

fn c3_identity_grid() -> Outcome {
    timed(Duration::from_secs(1), || {
        let mut worst = 0.0f64;
        let mut errors = 0;
        for i in 0..20 {
            let alpha = 0.05 + 0.9 * i as f64 / 19.0;
            for j in 0..20 {
                let delta = 0.1 + 4.9 * j as f64 / 19.0;
                match lower_bound_constants(order(alpha), delta) {
                    Ok(c) => {
                        let rel = ((c.horizon - c.horizon_closed_form()) / c.horizon).abs();
                        worst = worst.max(rel);
                    }
                    Err(_) => errors += 1,
                }
            }
        }
        Outcome {
            pass: errors == 0 && worst <= 1e-10,
            detail: format!("max relative mismatch {worst:.2e} over 400 points, {errors} errors"),
        }
    })
}

fn c4_classical_blowup() -> Outcome {
    timed(Duration::from_secs(30), || {
        let report = cli_json(&["blowup", "--alpha", "1"]);
        let lo = report["estimate"]["t_lo"].as_f64().unwrap();
        let hi = report["estimate"]["t_hi"].as_f64().unwrap();
        Outcome {
            pass: lo <= 1.0 && 1.0 <= hi && hi - lo <= 0.02,
            detail: format!("bracket [{lo:.6}, {hi:.6}], width {:.2e}", hi - lo),
        }
    })
}

fn c5_bound_sandwich() -> Outcome {
    timed(Duration::from_secs(300), || {
        let cfg = BlowupConfig::default();
        let mut pass = (cfg.finest_step() - 1e-4).abs() < 1e-15;
        let mut parts = vec![format!("finest step {:e}", cfg.finest_step())];
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            let ord = order(alpha);
            let lower = lower_bound_t(ord, 0.5).unwrap();
            let upper = upper_bound_b(ord) + 0.01;
            match estimate_blowup(ord, &cfg) {
                Ok(e) => {
                    let ok = lower <= e.t_lo && e.t_hi <= upper;
                    pass &= ok;
                    parts.push(format!(
                        "a={alpha}: [{:.5}, {:.5}] in [{lower:.3e}, {upper:.5}] {ok}",
                        e.t_lo, e.t_hi
                    ));
                }
                Err(err) => {
                    pass = false;
                    parts.push(format!("a={alpha}: {err}"));
                }
            }
        }
        Outcome {
            pass,
            detail: parts.join("; "),
        }
    })
}

/// Largest relative violation of w <= v <= z at the nodes of [from, ∞)
/// where the envelopes are defined.
fn envelope_violation(alpha: f64, step: f64, from: f64) -> f64 {
    let ord = order(alpha);
    let c = lower_bound_constants(ord, 0.5).unwrap();
    let b = upper_bound_b(ord);
    let v = solve(&Nonlinearity::Square, 1.0, ord, &SolverConfig::new(step, b + 0.05)).unwrap();
    let mut worst = 0.0f64;
    for (t, &x) in v.grid().nodes().zip(v.values()) {
        if t < from {
            continue;
        }
        if t < b {
            let w = envelope_w(ord, t).unwrap();
            worst = worst.max((w - x) / w);
        }
        if t < c.horizon {
            if let Ok(z) = c.envelope_z(t) {
                worst = worst.max((x - z) / z);
            }
        }
    }
    worst.max(0.0)
}

fn c6_envelope_sandwich() -> Outcome {
    let mut slack_ok = true;
    let mut shrink_ok = true;
    let mut shrink_from_d_ok = true;
    let mut parts = vec![];
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let d = lower_bound_constants(order(alpha), 0.5).unwrap().d;
        let coarse = envelope_violation(alpha, 1e-4, 0.0);
        let fine = envelope_violation(alpha, 5e-5, 0.0);
        let coarse_d = envelope_violation(alpha, 1e-4, d);
        let fine_d = envelope_violation(alpha, 5e-5, d);
        slack_ok &= coarse <= 2e-2;
        shrink_ok &= fine <= coarse;
        shrink_from_d_ok &= fine_d <= coarse_d;
        parts.push(format!(
            "a={alpha}: {coarse:.3e} -> {fine:.3e} (t >= d: {coarse_d:.1e} -> {fine_d:.1e})"
        ));
    }
    Outcome {
        pass: slack_ok && shrink_ok,
        detail: format!(
            "slack<=2e-2 {slack_ok}, shrinking {shrink_ok}, shrinking on t >= d {shrink_from_d_ok}; {}",
            parts.join("; ")
        ),
    }
}

fn c7_operator_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut constants_zero = true;
    for alpha in [0.25, 0.5, 0.75] {
        let grid = TimeGrid::new(0.01, 500).unwrap();
        let f = SampledFunction::from_fn(grid, |t| t).unwrap();
        let d = caputo_left(&f, order(alpha)).unwrap();
        let g = gamma(2.0 - alpha).unwrap();
        for (t, v) in grid.nodes().zip(d.values()).skip(1) {
            let exact = t.powf(1.0 - alpha) / g;
            worst = worst.max(((v - exact) / exact).abs());
        }
        for c in [-3.5, 0.0, 7.25] {
            let f = SampledFunction::from_fn(grid, |_| c).unwrap();
            constants_zero &= caputo_left(&f, order(alpha))
                .unwrap()
                .values()
                .iter()
                .all(|&v| v == 0.0);
        }
    }
    Outcome {
        pass: worst <= 1e-10 && constants_zero,
        detail: format!("max relative error on t {worst:.2e}; constants exactly 0: {constants_zero}"),
    }
}

fn c8_capped_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut ordered = true;
    let mut compared = 0;
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let cfg = SolverConfig::new(1e-3, 3.0);
        let v4 = solve_capped(4.0, 1.0, order(alpha), &cfg).unwrap();
        let v100 = solve_capped(100.0, 1.0, order(alpha), &cfg).unwrap();
        for (&a, &b) in v4.values().iter().zip(v100.values()) {
            if b <= 4.0 {
                worst = worst.max((a - b).abs());
                compared += 1;
            }
            ordered &= b >= a;
        }
    }
    Outcome {
        pass: worst <= 1e-12 && ordered && compared > 0,
        detail: format!("max |v4 - v100| where v <= 4: {worst:.1e} over {compared} nodes; v100 >= v4: {ordered}"),
    }
}

fn c9_impulse_figure() -> Outcome {
    timed(Duration::from_secs(5), || {
        let (code, csv) = cli(&["impulse"]);
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
            .collect();
        let train = ImpulseTrain::figure_default();
        let col = |name: &str| header.iter().position(|h| *h == name).unwrap();

        let steps_ok = rows
            .iter()
            .all(|r| r[col("alpha=1")] == step_solution(&train, r[0]) as f64);

        let alphas = [0.1, 0.25, 0.5];
        let diverges = alphas.iter().all(|&a| {
            train.times().iter().all(|&p| {
                fractional_impulse_solution(&train, order(a), p + 1e-6).unwrap() > 1e2
            })
        });

        let c = col("alpha=0.99");
        let near = rows
            .iter()
            .filter(|r| (r[0] - 4.5).abs() < 0.01)
            .map(|r| r[c])
            .collect::<Vec<_>>();
        let exact = fractional_impulse_solution(&train, order(0.99), 4.5).unwrap();
        let late_ok = !near.is_empty()
            && near.iter().all(|v| (v - 4.0).abs() <= 0.15)
            && (exact - 4.0).abs() <= 0.15;

        Outcome {
            pass: code == 0 && header.len() == 9 && steps_ok && diverges && late_ok,
            detail: format!(
                "{} value columns, {} rows; step column ok {steps_ok}; divergence {diverges}; \
                 alpha=0.99 at 4.5: {exact:.4} (rows {near:.4?})",
                header.len() - 1,
                rows.len()
            ),
        }
    })
}

fn separable_error(alpha: f64, t_end: f64, steps: usize, cells: usize) -> f64 {
    let ord = order(alpha);
    let v = Arc::new(
        solve(&Nonlinearity::Square, 1.0, ord, &SolverConfig::new(t_end / 16_000.0, t_end)).unwrap(),
    );
    let v_bc = Arc::clone(&v);
    let bc = BoundaryRule::dirichlet(move |x, t| -x * v_bc.value_at(t.min(t_end)).unwrap());
    let grid = SpatialGrid::new(-1.0, 1.0, cells).unwrap();
    let u0 = grid.sample(false, |x| -x);
    let field = solve_u(&u0, ord, &grid, &bc, &PdeConfig::new(t_end / steps as f64, t_end)).unwrap();
    let v_end = v.value_at(t_end).unwrap();
    field
        .x()
        .iter()
        .zip(field.last_slice())
        .map(|(&x, &u)| (u + x * v_end).abs())
        .fold(0.0, f64::max)
}

fn c10_pde_self_consistency() -> Outcome {
    timed(Duration::from_secs(120), || {
        let mut pass = true;
        let mut parts = vec![];
        let t_half = 0.5 * lower_bound_t(order(0.5), 0.5).unwrap();
        for (alpha, t_end, steps) in [(0.5, t_half, 400), (1.0, 0.5, 500)] {
            let coarse = separable_error(alpha, t_end, steps, 200);
            let fine = separable_error(alpha, t_end, 2 * steps, 400);
            let drop = 1.0 - fine / coarse;
            pass &= coarse <= 5e-2 && fine <= 5e-2 && drop >= 0.4;
            parts.push(format!(
                "a={alpha} t={t_end:.4e}: {coarse:.3e} -> {fine:.3e} ({:.0}% drop)",
                100.0 * drop
            ));
        }
        Outcome {
            pass,
            detail: parts.join("; "),
        }
    })
}

fn c11_conservation_transform() -> Outcome {
    let grid = SpatialGrid::new(0.0, 1.0, 64).unwrap();
    let rho0 = grid.sample(true, |x| 0.5 + 0.3 * (2.0 * PI * x).sin() + 0.1 * (4.0 * PI * x).cos());
    let u0: Vec<f64> = rho0.iter().map(|r| 2.0 * r - 1.0).collect();
    let mut drift = 0.0f64;
    let mut diff = 0.0f64;
    let mut steps_ok = true;
    for alpha in [0.3, 0.6, 1.0] {
        let ord = order(alpha);
        let h = stable_step(ord, &grid, 0.8, 0.9);
        let cfg = PdeConfig::new(h, 200.0 * h);
        let rho = solve_rho(&rho0, ord, &grid, &BoundaryRule::Periodic, &MarketParams::normalized(ord), &cfg)
            .unwrap();
        let u = solve_u(&u0, ord, &grid, &BoundaryRule::Periodic, &cfg).unwrap();
        steps_ok &= rho.time().steps() == 200 && u.time().steps() == 200;
        let m0 = rho.mass(0);
        for n in 0..rho.slices().len() {
            drift = drift.max(((rho.mass(n) - m0) / m0).abs());
        }
        let mapped = rho_to_u(&rho);
        for (a, b) in mapped.slices().iter().flatten().zip(u.slices().iter().flatten()) {
            diff = diff.max((a - b).abs());
        }
    }
    Outcome {
        pass: drift <= 1e-10 && diff <= 1e-9 && steps_ok,
        detail: format!("relative mass drift {drift:.1e}; |rho_to_u(rho) - u| {diff:.1e} (64 cells, 200 steps)"),
    }
}

fn rescaling_gap(alpha: f64, n: usize) -> (f64, Vec<f64>) {
    let f = |t: f64| (-t).exp() + 0.5 * t.powf(1.5);
    let s = 2usize;
    let h = 1.0 / n as f64;
    let scaled = SampledFunction::from_fn(TimeGrid::new(h, n).unwrap(), |t| f(s as f64 * t)).unwrap();
    let plain = SampledFunction::from_fn(TimeGrid::new(h, s * n).unwrap(), f).unwrap();
    let ds = caputo_left(&scaled, order(alpha)).unwrap();
    let dp = caputo_left(&plain, order(alpha)).unwrap();
    let factor = (s as f64).powf(alpha);
    let gap = (1..=n)
        .map(|j| (ds.values()[j] - factor * dp.values()[s * j]).abs())
        .fold(0.0, f64::max);
    (gap, ds.values().to_vec())
}

fn c12_scaling() -> Outcome {
    let ord = order(1.0);
    let cfg = BlowupConfig::default();
    let base = estimate_blowup_from(1.0, ord, &cfg).unwrap();
    let scaled = estimate_blowup_from(2f64.powf(ord.alpha()), ord, &cfg).unwrap();
    let ratio = scaled.point() / base.point();
    let mut pass = (ratio - 0.5).abs() <= 0.02;
    let mut parts = vec![format!("T*(2)/T*(1) = {ratio:.5}")];
    for alpha in [0.5, 0.75] {
        let (coarse, d_coarse) = rescaling_gap(alpha, 200);
        let (fine, d_fine) = rescaling_gap(alpha, 400);
        // discretization error estimate from the two resolutions
        let tolerance = (1..d_coarse.len())
            .map(|j| (d_coarse[j] - d_fine[2 * j]).abs())
            .fold(0.0, f64::max);
        let ok = fine <= tolerance && fine < coarse;
        pass &= ok;
        parts.push(format!(
            "a={alpha}: gap {coarse:.2e} -> {fine:.2e}, tolerance {tolerance:.2e}"
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "bound constants", c1_bound_constants),
        (2, "monotonicity of b", c2_monotone_b),
        (3, "lower-bound identity on 20x20 grid", c3_identity_grid),
        (4, "classical blow-up bracket", c4_classical_blowup),
        (5, "blow-up inside bound sandwich", c5_bound_sandwich),
        (6, "envelope sandwich", c6_envelope_sandwich),
        (7, "operator exactness", c7_operator_exactness),
        (8, "capped construction agreement", c8_capped_agreement),
        (9, "impulse dataset", c9_impulse_figure),
        (10, "pde separable self-consistency", c10_pde_self_consistency),
        (11, "conservation and transform", c11_conservation_transform),
        (12, "scaling law", c12_scaling),
    ];
    let mut unexpected = vec![];
    let mut passed = 0;
    for (id, name, check) in &criteria {
        let o = check();
        let tag = if o.pass {
            passed += 1;
            "PASS"
        } else {
            if !KNOWN_FAILURES.contains(id) {
                unexpected.push(*id);
            }
            "FAIL"
        };
        println!("{tag} [{id:>2}] {name}: {}", o.detail);
    }
    println!(
        "{passed}/{} criteria passed; known failures {KNOWN_FAILURES:?}; unexpected failures {unexpected:?}",
        criteria.len()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
