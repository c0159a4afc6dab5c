use std::fs;
use std::path::PathBuf;

use serde_json::{json, Value};

use switchcost::bounds::{check_s_hat_condition, ubar_c, bar_c_upper, BoundLedger};
use switchcost::curve::Breakpoint;
use switchcost::generalgamma::{membership_g_s, quarter_bound, stationary_value_g, static_minimax_g};
use switchcost::io::{GameFile, TensorFile};
use switchcost::staticsolve::{
    grid_oracle, sampled_shape_issues, static_minimax, static_minimax_with, trace_static_curve, StaticCurve,
};
use switchcost::stationary::{acoe_solve, stationary_value_oracle, strategy_line, trace_value_curve};
use switchcost::verify::{best_reply_to_static, evaluate_pair_exact, simulate_play};
use switchcost::{Error, Player, StationaryStrategy, SwitchGame};

use crate::output::{emit, io_err, write_atomic};
use crate::{CliError, Config};

const DEFAULT_SAMPLES: usize = 101;
const DEFAULT_HORIZON: usize = 100_000;

fn read(cfg: &Config) -> Result<String, CliError> {
    fs::read_to_string(&cfg.input).map_err(|e| io_err(&cfg.input, e))
}

fn in_file(cfg: &Config, e: Error) -> CliError {
    match e {
        Error::Parse(msg) | Error::Structural(msg) => {
            CliError::Input(format!("{}: {msg}", cfg.input.display()))
        }
        other => other.into(),
    }
}

fn load_game(cfg: &Config) -> Result<(GameFile, SwitchGame), CliError> {
    let file = GameFile::parse(&read(cfg)?).map_err(|e| in_file(cfg, e))?;
    let game = file.game().map_err(|e| in_file(cfg, e))?;
    Ok((file, game))
}

fn single_c(cfg: &Config, file: &GameFile) -> Result<f64, CliError> {
    let c = cfg
        .c
        .or(file.c)
        .ok_or_else(|| CliError::Input("this command needs a cost weight: pass --c or set \"c\" in the file".into()))?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(CliError::Input(format!("c must be finite and >= 0, got {c}")));
    }
    Ok(c)
}

fn range(cfg: &Config, file: &GameFile) -> Option<(f64, f64)> {
    cfg.c_range.or(file.c_range.map(|[lo, hi]| (lo, hi)))
}

fn samples(cfg: &Config) -> Result<usize, CliError> {
    let k = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    if k < 2 {
        return Err(CliError::Input(format!("--samples must be at least 2, got {k}")));
    }
    Ok(k)
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable report")
}

/// A finite number, or `null` (JSON has no infinity).
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn solve(cfg: &Config) -> Result<(), CliError> {
    let (file, game) = load_game(cfg)?;
    let c = single_c(cfg, &file)?;
    let sol = acoe_solve(&game, c)?;
    let line = strategy_line(&game, &sol.p2_strategy)?;
    let oracle = match stationary_value_oracle(&game, c) {
        Ok(v) => json!({ "value": v, "gap": (v - sol.gamma).abs() }),
        Err(e @ Error::Resource { .. }) => json!({ "skipped": e.to_string() }),
        Err(e) => return Err(e.into()),
    };
    let report = json!({
        "name": file.name,
        "c": c,
        "value": sol.gamma,
        "value_snapped": Breakpoint::new(sol.gamma).snapped.map(|r| r.to_string()),
        "p1_strategy": sol.p1_strategy,
        "p2_strategy": sol.p2_strategy,
        "continuation": sol.continuation,
        "support_signature": sol.support_signature,
        "method": sol.method,
        "rounds": sol.rounds,
        "residual": sol.residual,
        "strategy_line": line,
        "oracle": oracle,
    });
    emit(cfg, "solve", &report)?;
    if let Some(gap) = report["oracle"]["gap"].as_f64() {
        if gap > cfg.tolerance {
            return Err(CliError::Solver(format!(
                "auxiliary-game value differs from the ACOE value by {gap:e}"
            )));
        }
    }
    Ok(())
}

pub fn static_value(cfg: &Config) -> Result<(), CliError> {
    let (file, game) = load_game(cfg)?;
    let c = single_c(cfg, &file)?;
    let res = static_minimax(&game, c)?;
    let mut report = to_value(&res);
    report["name"] = json!(file.name);
    report["c"] = json!(c);
    emit(cfg, "static", &report)
}

/// Thresholds for the curve summary, in the file's own units.
fn thresholds(game: &SwitchGame) -> Result<Value, CliError> {
    let mut out = json!({});
    match ubar_c(game) {
        Ok(u) => {
            out["ubar_c"] = num(u.ubar_c);
            out["y_star"] = to_value(&u.y_star);
        }
        Err(Error::TrivialPure { column }) => {
            out["ubar_c"] = Value::Null;
            out["ubar_c_reason"] = json!(format!("column {column} is optimal without switching; v is constant"));
        }
        Err(e) => return Err(e.into()),
    }
    match game.normalize() {
        Ok((norm, map)) => match bar_c_upper(&norm) {
            Ok(b) => {
                out["bar_c_upper"] = num(map.c_from_normalized(b.c_hat));
                out["bar_c_empirical"] = b.empirical.map_or(Value::Null, |c| num(map.c_from_normalized(c)));
            }
            Err(Error::Precondition(msg)) => out["bar_c_reason"] = json!(msg),
            Err(e) => return Err(e.into()),
        },
        Err(Error::Degenerate(msg)) => out["bar_c_reason"] = json!(msg),
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

pub fn curve(cfg: &Config) -> Result<(), CliError> {
    let (file, game) = load_game(cfg)?;
    let (lo, hi) = range(cfg, &file).ok_or_else(|| {
        CliError::Input("this command needs a range: pass --c-range LO:HI or set \"c_range\" in the file".into())
    })?;
    let k = samples(cfg)?;
    let stationary = trace_value_curve(&game, hi)?;
    let static_curve = trace_static_curve(&game, hi, k.max(16))?;

    let static_breaks: Vec<Breakpoint> = match &static_curve {
        StaticCurve::PiecewiseLinear { curve } => curve.interior_breakpoints(),
        StaticCurve::SemiAlgebraic { .. } => Vec::new(),
    };
    let stat_breaks = stationary.interior_breakpoints();
    let mut cs = linspace(lo, hi, k);
    cs.extend(
        stat_breaks
            .iter()
            .chain(&static_breaks)
            .map(|b| b.raw)
            .filter(|&c| c > lo && c < hi),
    );
    cs.sort_by(f64::total_cmp);
    cs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let method = static_curve.method();
    let mut vt = Vec::with_capacity(cs.len());
    for &c in &cs {
        vt.push(match &static_curve {
            StaticCurve::PiecewiseLinear { curve } => curve.eval(c),
            StaticCurve::SemiAlgebraic { .. } => static_minimax_with(&game, c, false)?.value,
        });
    }

    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;
    let csv_err = |e: csv::Error| CliError::Solver(e.to_string());

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["c", "v", "segment_id", "slope"]).map_err(csv_err)?;
    for &c in &cs {
        let seg = stationary.segment_index(c);
        w.write_record([
            c.to_string(),
            stationary.eval(c).to_string(),
            seg.to_string(),
            stationary.pieces[seg].slope.to_string(),
        ])
        .map_err(csv_err)?;
    }
    write_atomic(&out_dir.join("stationary.csv"), &w.into_inner().map_err(|e| CliError::Solver(e.to_string()))?)?;

    let method_name = to_value(&method);
    let method_name = method_name.as_str().unwrap_or("unknown");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["c", "vtilde", "method"]).map_err(csv_err)?;
    for (&c, &v) in cs.iter().zip(&vt) {
        w.write_record([c.to_string(), v.to_string(), method_name.to_string()])
            .map_err(csv_err)?;
    }
    write_atomic(&out_dir.join("static.csv"), &w.into_inner().map_err(|e| CliError::Solver(e.to_string()))?)?;

    let (mut max_gap, mut arg) = (f64::NEG_INFINITY, lo);
    for (&c, &v) in cs.iter().zip(&vt) {
        let gap = v - stationary.eval(c);
        if gap > max_gap {
            (max_gap, arg) = (gap, c);
        }
    }
    let static_issues = match &static_curve {
        StaticCurve::PiecewiseLinear { curve } => curve.check_shape(1e-7),
        StaticCurve::SemiAlgebraic { samples } => sampled_shape_issues(samples, 1e-7),
    };
    let summary = json!({
        "name": file.name,
        "c_range": [lo, hi],
        "stationary": {
            "breakpoints": stat_breaks,
            "pieces": stationary.pieces,
            "shape_issues": stationary.check_shape(1e-7),
        },
        "static": {
            "method": method,
            "breakpoints": static_breaks,
            "cutoff": static_breaks.last(),
            "shape_issues": static_issues,
        },
        "thresholds": thresholds(&game)?,
        "max_gap": { "gap": max_gap, "c": arg },
    });
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Solver(e.to_string()))?;
    text.push('\n');
    write_atomic(&out_dir.join("summary.json"), text.as_bytes())
}

pub fn bounds(cfg: &Config) -> Result<(), CliError> {
    let (file, game) = load_game(cfg)?;
    let (norm, map) = game.normalize()?;
    let ledger = BoundLedger::build(&norm)?;
    let cs = match (cfg.c, range(cfg, &file), file.c) {
        (Some(c), _, _) => vec![c],
        (None, Some((lo, hi)), _) => linspace(lo, hi, cfg.samples.unwrap_or(9).max(2)),
        (None, None, Some(c)) => vec![c],
        _ => Vec::new(),
    };
    let mut rows = Vec::new();
    for c in cs {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(CliError::Input(format!("c must be finite and >= 0, got {c}")));
        }
        let cn = map.c_to_normalized(c);
        let v = acoe_solve(&norm, cn)?.gamma;
        let vt = static_minimax(&norm, cn)?.value;
        rows.push(json!({ "c": c, "c_normalized": cn, "row": ledger.evaluate(&norm, cn, v, vt) }));
    }
    let s_hat_condition = if norm.has_uniform_switching() {
        Some(check_s_hat_condition(&norm)?)
    } else {
        None
    };
    let report = json!({
        "name": file.name,
        "units": "normalized: payoffs in [0, 1], smallest nonzero switching cost 1",
        "normalization": map,
        "ledger": ledger,
        "s_hat_condition": s_hat_condition,
        "rows": rows,
    });
    emit(cfg, "bounds", &report)
}

pub fn classify(cfg: &Config) -> Result<(), CliError> {
    let file = TensorFile::parse(&read(cfg)?).map_err(|e| in_file(cfg, e))?;
    let game = file.game().map_err(|e| in_file(cfg, e))?;
    let decomposition = membership_g_s(&game);
    let applies = decomposition.as_ref().is_some_and(|d| !d.outside_cost_model);
    let mut report = json!({
        "name": file.name,
        "states": game.states(),
        "rows": game.rows(),
        "member": decomposition.is_some(),
        "decomposition": decomposition,
        "switch_solver_applies": applies,
    });
    let v = match stationary_value_g(&game) {
        Ok(v) => Some(v),
        Err(e @ Error::Resource { .. }) => {
            report["values_skipped"] = json!(e.to_string());
            None
        }
        Err(e) => return Err(e.into()),
    };
    let st = match static_minimax_g(&game) {
        Ok(s) => Some(s),
        Err(e @ Error::Resource { .. }) => {
            report["values_skipped"] = json!(e.to_string());
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let (Some(v), Some(st)) = (v, st) {
        report["stationary_value"] = json!(v.value);
        report["stationary_strategy"] = to_value(&v.acoe.p2_strategy);
        report["static_value"] = json!(st.value);
        report["static_action"] = to_value(&st.y);
        report["static_best_reply"] = json!(st.best_reply);
        match game.normalize() {
            Some((norm, scale, shift)) => {
                let q = quarter_bound(&norm, (v.value - shift) / scale, (st.value - shift) / scale)?;
                report["quarter_bound"] = to_value(&q);
                if scale != 1.0 || shift != 0.0 {
                    report["quarter_bound_units"] = json!("normalized tensor (entries rescaled to [0, 1])");
                }
            }
            None => report["quarter_bound"] = json!({ "skipped": "constant tensor" }),
        }
    }
    emit(cfg, "classify", &report)
}

pub fn simulate(cfg: &Config) -> Result<(), CliError> {
    let (file, game) = load_game(cfg)?;
    let c = single_c(cfg, &file)?;
    let horizon = cfg.samples.unwrap_or(DEFAULT_HORIZON);
    if horizon == 0 {
        return Err(CliError::Input("--samples (the horizon) must be at least 1".into()));
    }
    let sol = acoe_solve(&game, c)?;
    let exact = evaluate_pair_exact(&game, c, &sol.p1_strategy, &sol.p2_strategy)?;
    let sim = simulate_play(&game, c, &sol.p1_strategy, &sol.p2_strategy, horizon as u64, cfg.seed)?;

    let y = static_minimax_with(&game, c, false)?.y_star;
    let tau = StationaryStrategy::static_strategy(Player::Player2, game.n(), y.clone());
    let sigma = best_reply_to_static(&game, &y);
    let exact_static = evaluate_pair_exact(&game, c, &sigma, &tau)?;
    let sim_static = simulate_play(&game, c, &sigma, &tau, horizon as u64, cfg.seed)?;

    let block = |exact: f64, sim: &switchcost::verify::SimulationResult| {
        json!({
            "exact": exact,
            "simulation": sim,
            "error": (sim.empirical_mean - exact).abs(),
            "within_three_sigma": (sim.empirical_mean - exact).abs() <= sim.three_sigma(),
        })
    };
    let report = json!({
        "name": file.name,
        "c": c,
        "horizon": horizon,
        "seed": cfg.seed,
        "stationary": block(exact.from_start, &sim),
        "static": block(exact_static.from_start, &sim_static),
        "static_action": y,
    });
    emit(cfg, "simulate", &report)
}

pub fn oracle(cfg: &Config) -> Result<(), CliError> {
    let (file, game) = load_game(cfg)?;
    let c = single_c(cfg, &file)?;
    let tol = cfg.tolerance;
    let sol = acoe_solve(&game, c)?;
    let aux = stationary_value_oracle(&game, c)?;
    let exact = evaluate_pair_exact(&game, c, &sol.p1_strategy, &sol.p2_strategy)?;
    let st = static_minimax_with(&game, c, false)?;
    let grid = if game.n() <= 5 {
        Some(grid_oracle(&game, c, 200)?)
    } else {
        None
    };
    let mut failures = Vec::new();
    if (sol.gamma - aux).abs() > tol {
        failures.push(format!("ACOE {} vs auxiliary game {aux}", sol.gamma));
    }
    if (sol.gamma - exact.value).abs() > tol {
        failures.push(format!("ACOE {} vs exact pair evaluation {}", sol.gamma, exact.value));
    }
    if let Some(g) = &grid {
        if g.value < st.value - tol || st.value < g.value - 5e-3 {
            failures.push(format!("static {} vs grid {}", st.value, g.value));
        }
    }
    let report = json!({
        "name": file.name,
        "c": c,
        "tolerance": tol,
        "acoe": sol.gamma,
        "auxiliary_lp": aux,
        "pair_exact": exact.value,
        "static": st.value,
        "static_action": st.y_star,
        "grid": grid,
        "failures": failures,
    });
    emit(cfg, "oracle", &report)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!("cross-check failed: {}", failures.join("; "))))
    }
}
