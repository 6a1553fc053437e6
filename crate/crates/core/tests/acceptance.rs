//! Acceptance suite. Runs every criterion at full scale (500 trials per
//! condition) and prints one PASS/FAIL line per criterion.

mod common;

use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{naive_lateral, pearson};
use vot_field::experiments::{condition_inputs, replicate_named, run_batch, run_trials, Condition, Experiment};
use vot_field::field::{build_kernel, evolve, field_step, kernel_value, lateral_input, sigmoid_gate};
use vot_field::noise::ZeroNoise;
use vot_field::readout::{above_threshold_regions, readout_argmax};
use vot_field::report::SWEEP_COLUMNS;
use vot_field::{load_config, FieldParams, FieldState, ReadoutMethod, RunConfig, SweepResult};

const TRIALS: usize = 500;
const SEED: u64 = 1;
const ARGMAX: ReadoutMethod = ReadoutMethod::Argmax;

struct Outcome {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn check(id: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { id, passed, detail }
}

fn in_band(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn cell(sweep: &SweepResult, a_mp: f64) -> &vot_field::ConditionStats {
    sweep.cell(6.0, a_mp).expect("grid cell")
}

fn noiseless_final(base: &RunConfig, condition: Condition) -> FieldState {
    let params = FieldParams { q: 0.0, ..base.field.clone() };
    let inputs = condition_inputs(base, condition).unwrap();
    evolve(FieldState::initial(&params), &inputs, &params, &mut ZeroNoise)
        .unwrap()
        .pop()
        .unwrap()
}

fn property_suite(base: &RunConfig) -> Vec<(String, bool)> {
    let p = &base.field;
    let mut out = Vec::new();

    let table = build_kernel(p);
    let n = p.field_size as isize;
    let table_sym = (-(n - 1)..n).all(|d| table.at(d) == table.at(-d) && table.at(d) == kernel_value(d as f64, p));
    let real_sym = (0..2000).all(|i| {
        let d = i as f64 * 0.137;
        kernel_value(d, p) == kernel_value(-d, p)
    });
    out.push(("kernel symmetry".into(), table_sym && real_sym));

    let sig_ok = (0..=6000).all(|i| {
        let u = -3.0 + i as f64 * 1e-3;
        let g = sigmoid_gate(u, p.beta);
        g > 0.0 && g < 1.0 && (g + sigmoid_gate(-u, p.beta) - 1.0).abs() <= 1e-12
    });
    out.push(("sigmoid bounds and symmetry".into(), sig_ok));

    let quiet = FieldParams { q: 0.0, ..p.clone() };
    let zeros = vec![0.0; p.field_size];
    let rest = FieldState::initial(&quiet);
    let next = field_step(&rest, &zeros, &table, &quiet, &zeros).unwrap();
    let change = next.u.iter().zip(&rest.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push((format!("resting fixed point (max change {change:.2e})"), change < 1e-6));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u: Vec<f64> = (0..p.field_size).map(|_| rng.random_range(-8.0..4.0)).collect();
        let fast = lateral_input(&FieldState { u: u.clone(), step: 0 }, &table, p.beta).unwrap();
        let slow = naive_lateral(&u, p);
        worst = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    out.push((format!("convolution fast vs naive (max diff {worst:.2e})"), worst <= 1e-10));

    let mut multi = Vec::new();
    let mut grid = Vec::new();
    for t in base.sweep.two_d.a_target.values() {
        for mp in base.sweep.two_d.a_mp.values() {
            grid.push(Condition::new(t, mp));
        }
    }
    for mp in base.sweep.one_d.a_mp.values() {
        grid.push(Condition::new(base.target.a, mp));
    }
    let mut all_finite = true;
    for c in &grid {
        let last = noiseless_final(base, *c);
        all_finite &= last.is_finite();
        if above_threshold_regions(&last).len() > 1 {
            multi.push(*c);
        }
    }
    out.push((
        format!("single above-threshold region at {} noiseless grid points ({} violations)", grid.len(), multi.len()),
        multi.is_empty(),
    ));

    let cond = Condition::new(6.0, -3.0);
    let reference = run_trials(base, cond, 64, 77, ARGMAX).unwrap();
    let mut identical = true;
    for workers in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        let again = pool.install(|| run_trials(base, cond, 64, 77, ARGMAX).unwrap());
        identical &= again == reference;
    }
    out.push(("bit-identical reruns at 1/2/4 workers".into(), identical));

    all_finite &= reference.iter().all(|t| t.final_state.is_finite());
    out.push(("no NaN/Inf in any state".into(), all_finite));
    out
}

fn cli_checks(base: &RunConfig) -> Vec<(String, bool)> {
    let exe = env!("CARGO_BIN_EXE_vot-field");
    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    let run = |out_dir: &Path| {
        Command::new(exe)
            .args(["replicate", "fig6", "--seed", "1", "--trials", "20", "--quiet", "--out"])
            .arg(out_dir)
            .status()
            .unwrap()
            .success()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ok = run(&a) && run(&b);
    let csv = std::fs::read_to_string(a.join("sweep.csv")).unwrap_or_default();
    let mut lines = csv.lines();
    let header_ok = lines.next() == Some(SWEEP_COLUMNS.join(",").as_str());
    let rows = lines.count();
    out.push((format!("replicate fig6 CSV: {rows} rows, fixed schema"), ok && header_ok && rows == 21));

    let identical = ["sweep.svg", "trajectory_context.svg", "sweep.csv"].iter().all(|f| {
        let x = std::fs::read(a.join(f));
        let y = std::fs::read(b.join(f));
        matches!((x, y), (Ok(x), Ok(y)) if x == y)
    });
    out.push(("byte-identical SVG/CSV on rerun".into(), identical));

    let written = load_config(&a.join("config.toml"));
    let again = written.as_ref().ok().map(|c| {
        let path = dir.path().join("again.toml");
        std::fs::write(&path, c.to_toml_string()).unwrap();
        load_config(&path).unwrap()
    });
    let expected = RunConfig { n_trials: 20, ..base.clone() };
    let round_trip = matches!((&written, &again), (Ok(w), Some(g)) if *w == expected && w == g);
    out.push(("config round-trip".into(), round_trip));
    out
}

fn main() {
    let base = RunConfig::default();
    let mut outcomes = Vec::new();

    eprintln!("running fig6 replication ({} conditions x {TRIALS} trials)...", base.sweep.one_d.a_mp.values().len());
    let fig6 = replicate_named(Experiment::Fig6, &base, TRIALS, SEED, ARGMAX).expect("fig6 replication");
    let sweep = &fig6.sweep;

    let c0 = cell(sweep, 0.0);
    outcomes.push(check(
        "1 baseline |mean_vot - 70| <= 1.0",
        (c0.mean_vot - 70.0).abs() <= 1.0,
        format!("mean_vot {:.3}", c0.mean_vot),
    ));

    let c3 = cell(sweep, -3.0);
    outcomes.push(check(
        "2 no-context CH in [3.5, 6.5]",
        in_band(c3.ch_ms, 3.5, 6.5),
        format!("ch_ms {:.3}", c3.ch_ms),
    ));

    let c6 = cell(sweep, -6.0);
    outcomes.push(check(
        "3 context CH in [8, 12], frac_stabilized < 1",
        in_band(c6.ch_ms, 8.0, 12.0) && c6.frac_stabilized < 1.0,
        format!("ch_ms {:.3}, frac_stabilized {:.3}", c6.ch_ms, c6.frac_stabilized),
    ));

    let pseudo = run_batch(&base, Condition::new(6.0, -1.5), TRIALS, SEED, ARGMAX).unwrap();
    outcomes.push(check(
        "4 pseudoword CH in [1.5, 3.5]",
        in_band(pseudo.ch_ms, 1.5, 3.5),
        format!("ch_ms {:.3}", pseudo.ch_ms),
    ));

    let trace: Vec<_> = sweep.cells.iter().filter(|c| c.condition.a_mp >= 1.0).collect();
    outcomes.push(check(
        "5 trace regime: CH < 0 for a_mp >= 1",
        !trace.is_empty() && trace.iter().all(|c| c.ch_ms < 0.0),
        trace
            .iter()
            .map(|c| format!("{}:{:.2}", c.condition.a_mp, c.ch_ms))
            .collect::<Vec<_>>()
            .join(" "),
    ));

    let xs: Vec<f64> = sweep.cells.iter().map(|c| c.condition.a_mp).collect();
    let ys: Vec<f64> = sweep.cells.iter().map(|c| c.mean_vot).collect();
    let r = pearson(&xs, &ys);
    outcomes.push(check(
        "6 linearity: Pearson r <= -0.95 over 21 points",
        xs.len() == 21 && r <= -0.95,
        format!("r {r:.4} over {} points", xs.len()),
    ));

    let corners = [(-6.0, 10.0, 4.6, 7.6), (-6.0, 5.0, 8.9, 11.9), (5.0, 10.0, -9.9, -6.9), (5.0, 5.0, -26.9, -22.9)];
    let mut corner_ok = true;
    let mut detail = Vec::new();
    for (mp, t, lo, hi) in corners {
        let s = run_batch(&base, Condition::new(t, mp), TRIALS, SEED, ARGMAX).unwrap();
        corner_ok &= in_band(s.ch_ms, lo, hi);
        detail.push(format!("({mp},{t})={:.2}", s.ch_ms));
    }
    outcomes.push(check("7 2-D extremes within bands", corner_ok, detail.join(" ")));

    let m0 = c0.median_time_to_threshold.unwrap_or(f64::NAN);
    let m3 = c3.median_time_to_threshold.unwrap_or(f64::NAN);
    outcomes.push(check(
        "8 time-to-threshold medians and non-crossing",
        in_band(m0, 30.0, 50.0) && in_band(m3, 50.0, 75.0) && c6.n_never_crossed > 0,
        format!("median {m0} (a_mp=0), {m3} (a_mp=-3); never crossed at -6: {}/{TRIALS}", c6.n_never_crossed),
    ));

    let peaks: Vec<f64> = [0.0, -3.0, -6.0]
        .iter()
        .map(|&mp| readout_argmax(&noiseless_final(&base, Condition::new(6.0, mp))))
        .collect();
    let peaks_ok = peaks.iter().zip([70.0, 75.0, 80.0]).all(|(p, e)| (p - e).abs() <= 2.0);
    outcomes.push(check(
        "9 noiseless peaks 70/75/80 +/- 2",
        peaks_ok,
        format!("argmax {:?}", peaks),
    ));

    let props = property_suite(&base);
    outcomes.push(check(
        "10 property suite",
        props.iter().all(|(_, ok)| *ok),
        props
            .iter()
            .map(|(name, ok)| format!("[{}] {name}", if *ok { "ok" } else { "FAIL" }))
            .collect::<Vec<_>>()
            .join("; "),
    ));

    let cli = cli_checks(&base);
    outcomes.push(check(
        "11 CLI golden checks",
        cli.iter().all(|(_, ok)| *ok),
        cli.iter()
            .map(|(name, ok)| format!("[{}] {name}", if *ok { "ok" } else { "FAIL" }))
            .collect::<Vec<_>>()
            .join("; "),
    ));

    println!();
    for o in &outcomes {
        println!("{} {} :: {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("\nacceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
