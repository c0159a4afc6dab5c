//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{close, random_game, random_tensor, Costs};
use switchcost::bounds::{check_s_hat_condition, BoundLedger};
use switchcost::curve::PiecewiseLinearCurve;
use switchcost::fixtures;
use switchcost::generalgamma::{quarter_bound, quarter_tight, static_minimax_g, stationary_value_g};
use switchcost::staticsolve::{grid_oracle, sampled_shape_issues, static_minimax, trace_static_curve, StaticCurve};
use switchcost::stationary::{acoe_solve, stationary_value_oracle, trace_value_curve};
use switchcost::verify::evaluate_pair_exact;
use switchcost::SwitchGame;

type Outcome = Result<String, String>;

fn check(cond: bool, failures: &mut Vec<String>, msg: impl FnOnce() -> String) {
    if !cond {
        failures.push(msg());
    }
}

fn finish(failures: Vec<String>, detail: String) -> Outcome {
    if failures.is_empty() {
        Ok(detail)
    } else {
        let shown: Vec<_> = failures.iter().take(5).cloned().collect();
        Err(format!("{} failure(s): {}", failures.len(), shown.join(" | ")))
    }
}

fn breakpoints(curve: &PiecewiseLinearCurve) -> Vec<f64> {
    curve.interior_breakpoints().iter().map(|b| b.raw).collect()
}

fn same_breakpoints(got: &[f64], want: &[f64], tol: f64) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| close(*g, *w, tol))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let curve = trace_value_curve(&fixtures::evasion(), 1.5).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    let got = breakpoints(&curve);
    check(same_breakpoints(&got, &[22.0 / 31.0, 121.0 / 156.0], 1e-6), &mut failures, || {
        format!("breakpoints {got:?}")
    });
    let v = |c: f64| {
        if c <= 22.0 / 31.0 {
            6.0 / 11.0 + 72.0 / 121.0 * c
        } else if c <= 121.0 / 156.0 {
            (156.0 * c + 198.0) / 319.0
        } else {
            1.0
        }
    };
    for k in 0..=150 {
        let c = k as f64 / 100.0;
        check(close(curve.eval(c), v(c), 1e-7), &mut failures, || {
            format!("v({c}) = {} vs {}", curve.eval(c), v(c))
        });
    }
    check(elapsed.as_secs_f64() < 5.0, &mut failures, || format!("took {elapsed:?}"));
    finish(failures, format!("breakpoints {got:?}, 151 values, {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let game = fixtures::evasion();
    let mut failures = Vec::new();
    for c in [0.1, 0.3, 0.6] {
        let h = acoe_solve(&game, c).map_err(|e| e.to_string())?.continuation;
        let want = [0.0, 3.0 * c / 11.0, 4.0 * c / 11.0];
        check(h.iter().zip(&want).all(|(a, b)| close(*a, *b, 1e-7)), &mut failures, || {
            format!("c = {c}: h = {h:?}, want {want:?}")
        });
    }
    finish(failures, "h = (0, 3c/11, 4c/11) at c = 0.1, 0.3, 0.6".into())
}

fn criterion_3() -> Outcome {
    let game = fixtures::evasion();
    let curve = trace_static_curve(&game, 1.5, 64).map_err(|e| e.to_string())?;
    let StaticCurve::PiecewiseLinear { curve } = curve else {
        return Err("uniform costs should give an exact static curve".into());
    };
    let got = breakpoints(&curve);
    let mut failures = Vec::new();
    check(same_breakpoints(&got, &[55.0 / 72.0], 1e-6), &mut failures, || {
        format!("static breakpoints {got:?}")
    });
    // The gap at the cutoff, from the two piecewise formulas.
    let c = 55.0 / 72.0;
    let v = trace_value_curve(&game, 1.5).map_err(|e| e.to_string())?.eval(c);
    let gap = curve.eval(c) - v;
    check(close(gap, 11.0 / 1914.0, 1e-9), &mut failures, || format!("gap at cutoff {gap}"));
    finish(failures, format!("cutoff {:?}, gap there {gap:.9} = 11/1914", got))
}

fn criterion_4() -> Outcome {
    let game = fixtures::curved_static();
    let mut failures = Vec::new();
    let (lo, hi) = (1.0 / 98.0, 0.5);
    for k in 0..20 {
        let c = lo + (hi - lo) * k as f64 / 19.0;
        let res = static_minimax(&game, c).map_err(|e| e.to_string())?;
        let want = 1.0 - (1.0 - 2.0 * c).powi(2) / (192.0 * c);
        let p = (1.0 - 2.0 * c) / (192.0 * c);
        let y = res.y_star.probs();
        check(close(res.value, want, 1e-6), &mut failures, || {
            format!("c = {c}: ṽ = {} vs {want}", res.value)
        });
        check(close(y[0], p, 1e-6) && close(y[2], p, 1e-6), &mut failures, || {
            format!("c = {c}: y = {y:?}, want first entry {p}")
        });
    }
    finish(failures, "20 values of c in [1/98, 1/2]".into())
}

fn criterion_5() -> Outcome {
    let game = fixtures::cyclic();
    let mut failures = Vec::new();
    let mut gaps = Vec::new();
    for c in [0.1, 1.0, 10.0] {
        let v = acoe_solve(&game, c).map_err(|e| e.to_string())?.gamma;
        let vt = static_minimax(&game, c).map_err(|e| e.to_string())?.value;
        check(close(v, 0.5, 1e-7), &mut failures, || format!("v({c}) = {v}"));
        check(vt - v > 1e-3, &mut failures, || format!("ṽ({c}) - v({c}) = {}", vt - v));
        gaps.push(vt - v);
    }
    finish(failures, format!("v = 0.5, gaps {gaps:?}"))
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let cases: [(f64, &[f64], (f64, f64)); 2] = [
        (0.0, &[1.0, 2.0], (1.0, 2.0 / 3.0)),
        (1.0 / 3.0, &[9.0 / 8.0, 9.0 / 5.0], (9.0 / 8.0, 0.75)),
    ];
    for (delta, want, (c, value)) in cases {
        let curve = trace_value_curve(&fixtures::rps(delta), 3.0).map_err(|e| e.to_string())?;
        let got = breakpoints(&curve);
        check(same_breakpoints(&got, want, 1e-6), &mut failures, || {
            format!("Δ = {delta}: breakpoints {got:?}")
        });
        check(close(curve.eval(c), value, 1e-6), &mut failures, || {
            format!("Δ = {delta}: v({c}) = {}", curve.eval(c))
        });
    }
    let game = fixtures::rps(1.0);
    let stat = trace_value_curve(&game, 3.0).map_err(|e| e.to_string())?;
    let stc = trace_static_curve(&game, 3.0, 64).map_err(|e| e.to_string())?;
    for k in 0..=300 {
        let c = k as f64 / 100.0;
        let vt = stc.eval(c).ok_or("static curve not exact")?;
        check(close(stat.eval(c), vt, 1e-6), &mut failures, || {
            format!("Δ = 1, c = {c}: v = {} ṽ = {vt}", stat.eval(c))
        });
    }
    finish(failures, "Δ = 0: {1, 2}; Δ = 1/3: {9/8, 9/5}; Δ = 1: v = ṽ on [0, 3]".into())
}

fn criterion_7() -> Outcome {
    let game = fixtures::identity_costs();
    let curve = trace_value_curve(&game, 1.5).map_err(|e| e.to_string())?;
    let got = breakpoints(&curve);
    let mut failures = Vec::new();
    check(
        got.len() >= 2 && close(got[0], 1.0 / 6.0, 1e-6) && close(got[1], 3.0 / 13.0, 1e-6),
        &mut failures,
        || format!("breakpoints {got:?}"),
    );
    // Pure regime: the curve is flat from its last breakpoint on.
    let pure_from = *got.last().unwrap_or(&0.0);
    let mut c = 3.0 / 13.0;
    while c <= pure_from + 0.25 {
        let vt = static_minimax(&game, c).map_err(|e| e.to_string())?.value;
        check(close(vt, curve.eval(c), 1e-6), &mut failures, || {
            format!("c = {c}: ṽ = {vt} v = {}", curve.eval(c))
        });
        c += 0.02;
    }
    finish(failures, format!("breakpoints {got:?}; ṽ = v on [3/13, {:.3}]", pure_from + 0.25))
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut failures = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for g in 0..200 {
        let kind = [Costs::Uniform, Costs::Symmetric, Costs::Asymmetric][g % 3];
        let game = random_game(&mut rng, 2, 2, kind);
        for _ in 0..5 {
            let c = rng.gen_range(0.0..3.0);
            let v = acoe_solve(&game, c).map_err(|e| e.to_string())?.gamma;
            let vt = static_minimax(&game, c).map_err(|e| e.to_string())?.value;
            worst = worst.max(vt - v);
            check(vt - v <= 1e-6, &mut failures, || {
                format!("game {g} {:?} c = {c}: gap {}", game.payoffs().to_rows(), vt - v)
            });
        }
    }
    finish(failures, format!("1000 cases, largest gap {worst:.2e}"))
}

fn criterion_9() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let mut failures = Vec::new();
    let mut evaluated = 0;
    let mut ratio_rows = 0;
    let (mut loss_active, mut mixture_active) = (0, 0);
    let kinds = [Costs::Uniform, Costs::Symmetric, Costs::Asymmetric, Costs::Hub];
    let mut games = Vec::new();
    for g in 0..100 {
        let kind = kinds[g % 4];
        let (m, n) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
        let (game, _) = random_game(&mut rng, m, n, kind).normalize().map_err(|e| e.to_string())?;
        let mut cs = vec![0.05, 0.2, 0.5, 1.0];
        cs.extend((0..4).map(|_| rng.gen_range(0.0..1.5)));
        games.push((format!("random {g} ({kind:?})"), game, cs));
    }
    // A game whose mixture window is known: normalized c in (1/39200, 1/800).
    let (curved, _) = fixtures::curved_static().normalize().map_err(|e| e.to_string())?;
    games.push(("curved".into(), curved, (1..=8).map(|k| k as f64 / 7000.0).collect()));
    for (g, game, cs) in games {
        let ledger = BoundLedger::build(&game).map_err(|e| format!("game {g}: {e}"))?;
        for c in cs {
            let v = acoe_solve(&game, c).map_err(|e| e.to_string())?.gamma;
            let vt = static_minimax(&game, c).map_err(|e| e.to_string())?.value;
            let row = ledger.evaluate(&game, c, v, vt);
            loss_active += row.bounds.get("loss").is_some_and(|&d| d > 0.0) as usize;
            mixture_active += row.bounds.contains_key("mixture") as usize;
            for (name, ok) in &row.dominates {
                evaluated += 1;
                check(*ok, &mut failures, || {
                    format!("game {g} c = {c}: {name} = {} < gap {}", row.bounds[name], row.gap)
                });
            }
            if let Some(ok) = row.symmetric_ratio_ok {
                ratio_rows += 1;
                check(ok, &mut failures, || format!("game {g} c = {c}: symmetric ratio below 1/2"));
            }
        }
    }
    let mut tensors = vec![quarter_tight(5)];
    for _ in 0..40 {
        let (states, rows) = (rng.gen_range(2..=4), rng.gen_range(1..=3));
        tensors.push(random_tensor(&mut rng, states, rows));
    }
    for (k, t) in tensors.iter().enumerate() {
        let v = stationary_value_g(t).map_err(|e| e.to_string())?.value;
        let vt = static_minimax_g(t).map_err(|e| e.to_string())?.value;
        let q = quarter_bound(t, v, vt).map_err(|e| e.to_string())?;
        check(q.ratio_ok, &mut failures, || format!("tensor {k}: ratio {:?}", q.ratio));
        check(q.filter_payoff <= 0.25 * v + 0.75 + 1e-9, &mut failures, || {
            format!("tensor {k}: filter payoff {} > v/4 + 3/4", q.filter_payoff)
        });
    }
    finish(
        failures,
        format!(
            "{evaluated} bound evaluations over 808 (game, c) pairs ({loss_active} with a positive piecewise bound, \
             {mixture_active} with the mixture bound), {ratio_rows} symmetric ratios, {} tensors",
            tensors.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let t = quarter_tight(5);
    let v = stationary_value_g(&t).map_err(|e| e.to_string())?.value;
    let vt = static_minimax_g(&t).map_err(|e| e.to_string())?.value;
    let q = quarter_bound(&t, v, vt).map_err(|e| e.to_string())?;
    let ratio = q.ratio.unwrap_or(f64::NAN);
    let mut failures = Vec::new();
    check(close(v, 0.0, 1e-9), &mut failures, || format!("v_Γ = {v}"));
    check(close(vt, 0.75, 1e-9), &mut failures, || format!("ṽ_Γ = {vt}"));
    check(close(ratio, 0.25, 1e-9), &mut failures, || format!("ratio {ratio}"));
    finish(failures, format!("v_Γ = {v}, ṽ_Γ = {vt}, ratio {ratio}"))
}

fn criterion_11() -> Outcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    for (name, game) in fixtures::regression_games() {
        for c in [0.05, 0.3, 0.8, 2.0] {
            cases += 1;
            let sol = acoe_solve(&game, c).map_err(|e| e.to_string())?;
            let aux = stationary_value_oracle(&game, c).map_err(|e| e.to_string())?;
            let pair = evaluate_pair_exact(&game, c, &sol.p1_strategy, &sol.p2_strategy)
                .map_err(|e| e.to_string())?
                .value;
            let scale = 1.0 + sol.gamma.abs();
            check(
                close(sol.gamma, aux, 1e-6 * scale) && close(sol.gamma, pair, 1e-6 * scale),
                &mut failures,
                || format!("{name} c = {c}: acoe {} aux {aux} pair {pair}", sol.gamma),
            );
            let st = static_minimax(&game, c).map_err(|e| e.to_string())?.value;
            let grid = grid_oracle(&game, c, 200).map_err(|e| e.to_string())?.value;
            check(grid >= st - 1e-9 * scale && st >= grid - 5e-3, &mut failures, || {
                format!("{name} c = {c}: static {st} grid {grid}")
            });
        }
    }
    finish(failures, format!("{cases} (game, c) cases"))
}

fn criterion_12() -> Outcome {
    let mut rng = StdRng::seed_from_u64(12);
    let mut failures = Vec::new();
    for g in 0..100 {
        let (m, n) = (rng.gen_range(2..=5), rng.gen_range(2..=5));
        let game = random_game(&mut rng, m, n, Costs::Uniform);
        let holds = check_s_hat_condition(&game).map_err(|e| e.to_string())?;
        check(!holds, &mut failures, || format!("game {g}: {:?}", game.payoffs().to_rows()));
    }
    finish(failures, "100 games".into())
}

fn criterion_13() -> Outcome {
    let mut rng = StdRng::seed_from_u64(13);
    let mut games: Vec<(String, SwitchGame)> = fixtures::regression_games()
        .into_iter()
        .map(|(n, g)| (n.to_string(), g))
        .collect();
    for g in 0..30 {
        let kind = [Costs::Uniform, Costs::Symmetric, Costs::Asymmetric][g % 3];
        let (m, n) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
        games.push((format!("random-{g}"), random_game(&mut rng, m, n, kind)));
    }
    let mut failures = Vec::new();
    for (name, game) in &games {
        let curve = trace_value_curve(game, 3.0).map_err(|e| format!("{name}: {e}"))?;
        for issue in curve.check_shape(1e-7) {
            failures.push(format!("{name} stationary: {issue}"));
        }
        let issues = match trace_static_curve(game, 3.0, 32).map_err(|e| format!("{name}: {e}"))? {
            StaticCurve::PiecewiseLinear { curve } => curve.check_shape(1e-7),
            StaticCurve::SemiAlgebraic { samples } => sampled_shape_issues(&samples, 1e-7),
        };
        for issue in issues {
            failures.push(format!("{name} static: {issue}"));
        }
    }
    finish(failures, format!("{} games", games.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("evasion stationary curve", criterion_1),
        ("evasion continuation payoffs", criterion_2),
        ("evasion static cutoff", criterion_3),
        ("non-piecewise static value", criterion_4),
        ("cyclic-cost separation", criterion_5),
        ("rock-paper-scissors sweep", criterion_6),
        ("identity-game breakpoints", criterion_7),
        ("2x2 games have no gap", criterion_8),
        ("bound domination", criterion_9),
        ("quarter-bound tightness", criterion_10),
        ("oracle triangulation", criterion_11),
        ("uniform-cost s-hat condition", criterion_12),
        ("curve-shape invariants", criterion_13),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] criterion {:>2} {name}: {detail} ({secs:.2}s)", k + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {:>2} {name}: {why} ({secs:.2}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
