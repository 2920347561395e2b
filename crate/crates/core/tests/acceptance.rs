//! Acceptance suite: one PASS/FAIL line per criterion, then a single assert.
//!
//! Run with `cargo test -p plastic-ellipsoid --test acceptance -- --nocapture`
//! to see the lines.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::Command;
use std::time::Instant;

use plastic_ellipsoid::measures::{pushforward_check, MeasureSpec, TransportMap};
use plastic_ellipsoid::plasticity::{classify, violating_subset, Rule};
use plastic_ellipsoid::spectrum::{parse_descriptor, ContinuousPart, EigenSequence, SpectralDescriptor};
use plastic_ellipsoid::verify::{
    check_extremal_invariance, check_finite_dim_plasticity, check_form_preservation,
    check_min_attained, check_nonexpansive, check_rayleigh_bounds, check_strict_contraction,
    check_transport_isometry, operator_norm, rotation_conjugate, Budget, TruncatedQuadraticSpace,
};
use plastic_ellipsoid::witness::{build_transport_witness, partition_level, Witness};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn record(out: &mut Vec<Outcome>, id: u8, title: &'static str, pass: bool, detail: String) {
    println!(
        "criterion {id} [{title}]: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    out.push(Outcome { id, title, pass, detail });
}

// ------------------------------------------------------------ criterion 1

struct Case {
    json: &'static str,
    plastic: bool,
    rule: Option<Rule>,
    tau: Option<f64>,
}

fn corpus() -> Vec<Case> {
    let case = |json, plastic, rule, tau| Case { json, plastic, rule, tau };
    vec![
        case(
            r#"{"atoms":[{"value":1,"multiplicity":"inf"},{"value":2,"multiplicity":"inf"}]}"#,
            false,
            Some(Rule::TwoInfiniteAtoms),
            None,
        ),
        case(r#"{"atoms":[{"value":1,"multiplicity":"inf"}]}"#, true, None, Some(1.0)),
        case(
            r#"{"sequences":[{"limit":1,"direction":"dec","offset":1,"ratio":0.5,"multiplicity":1}]}"#,
            true,
            None,
            Some(1.0),
        ),
        case(
            r#"{"sequences":[{"limit":1,"direction":"dec","offset":1,"ratio":0.5,"multiplicity":1},
                             {"limit":2,"direction":"inc","offset":1,"ratio":0.5,"multiplicity":1}]}"#,
            false,
            Some(Rule::NoMinNoMax),
            None,
        ),
        case(
            r#"{"continuous":[{"kind":"density","support":[1,2],"coeffs":[1]}]}"#,
            false,
            Some(Rule::Continuous),
            None,
        ),
        case(
            r#"{"atoms":[{"value":3,"multiplicity":"inf"}],
                "sequences":[{"limit":2,"direction":"inc","offset":1,"ratio":0.5,"multiplicity":1}]}"#,
            true,
            None,
            Some(3.0),
        ),
        // Boundary variants.
        case(
            r#"{"sequences":[{"limit":1.5,"direction":"dec","offset":1,"ratio":0.5,"multiplicity":1},
                             {"limit":1.5,"direction":"inc","offset":1,"ratio":0.5,"multiplicity":1}]}"#,
            true,
            None,
            Some(1.5),
        ),
        case(
            r#"{"atoms":[{"value":3,"multiplicity":"inf"}],
                "sequences":[{"limit":3,"direction":"inc","offset":1,"ratio":0.5,"multiplicity":2}]}"#,
            true,
            None,
            Some(3.0),
        ),
        case(r#"{"atoms":[{"value":2,"multiplicity":1}]}"#, true, None, Some(2.0)),
        case(
            r#"{"atoms":[{"value":1,"multiplicity":1},{"value":2,"multiplicity":1}]}"#,
            true,
            None,
            Some(1.0),
        ),
        case(
            r#"{"sequences":[{"limit":2,"direction":"dec","offset":0.5,"ratio":0.25,"multiplicity":3}]}"#,
            true,
            None,
            Some(2.0),
        ),
        case(
            r#"{"atoms":[{"value":1,"multiplicity":4},{"value":2.5,"multiplicity":"inf"}],
                "sequences":[{"limit":2,"direction":"inc","offset":0.5,"ratio":0.5,"multiplicity":1}]}"#,
            true,
            None,
            Some(2.5),
        ),
    ]
}

fn criterion_1(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let cases = corpus();
    let mut matched = 0;
    let mut misses = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let d = parse_descriptor(c.json).expect("corpus descriptor parses");
        let v = classify(&d);
        let ok = v.plastic == c.plastic
            && v.certificate.as_ref().map(|x| x.rule) == c.rule
            && v.tau == c.tau;
        if ok {
            matched += 1;
        } else {
            misses.push(i);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    record(
        out,
        1,
        "classification corpus",
        matched == cases.len() && elapsed < 1.0,
        format!("{matched}/{} verdicts match, {elapsed:.3}s, misses {misses:?}", cases.len()),
    );
}

// ------------------------------------------------------------ criterion 2

fn shift_case(d: &SpectralDescriptor, expected_delta: f64) -> (bool, String) {
    let cert = violating_subset(d).expect("non-plastic");
    let w = Witness::build(d, &cert, 50).expect("shift witness at K = 50");
    let Witness::Shift(shift) = &w else {
        return (false, "expected a shift witness".into());
    };
    let budget = Budget { samples: 1000, nodes: 0, seed: 2 };
    let form = check_form_preservation(&w, budget).unwrap();
    let nonexp = check_nonexpansive(&w, budget).unwrap();
    let strict = check_strict_contraction(&w, budget).unwrap();
    let delta = strict.delta.unwrap();
    let from_chain = 1.0 - (shift.lambda(1) / shift.lambda(0)).sqrt();
    let factors_ok = shift.factors.iter().all(|&f| f <= 1.0);
    let ok = form.pass
        && form.worst_residual <= 1e-12
        && form.samples == 1000
        && nonexp.pass
        && factors_ok
        && (delta - from_chain).abs() <= 1e-12
        && (delta - expected_delta).abs() <= 1e-12;
    (
        ok,
        format!(
            "{:?}: form residual {:.1e}, delta {delta:.12}",
            cert.rule, form.worst_residual
        ),
    )
}

fn criterion_2(out: &mut Vec<Outcome>) {
    let atoms = parse_descriptor(corpus()[0].json).unwrap();
    let seqs = SpectralDescriptor::new(
        vec![],
        vec![
            EigenSequence::decreasing(1.0, 1.0, 0.5),
            EigenSequence::increasing(2.0, 1.0, 0.5),
        ],
        vec![],
    )
    .unwrap();
    let (a, da) = shift_case(&atoms, 1.0 - 0.5f64.sqrt());
    let (b, db) = shift_case(&seqs, 1.0 - (5.0f64 / 6.0).sqrt());
    record(out, 2, "shift witness exactness", a && b, format!("{da}; {db}"));
}

// ------------------------------------------------------------ criterion 3

/// Cell endpoints of the quantile partition of Lebesgue measure on [1, 2].
fn lebesgue_endpoint(k: i64) -> f64 {
    if k <= 0 {
        1.0 + 2f64.powi(k as i32 - 1)
    } else {
        2.0 - 2f64.powi(-(k as i32) - 1)
    }
}

fn criterion_3(out: &mut Vec<Outcome>) {
    let w = build_transport_witness(&ContinuousPart::lebesgue(1.0, 2.0), 16).unwrap();
    let mut interior: f64 = 0.0;
    let mut ends: f64 = 0.0;
    for k in -10..=10i64 {
        let (a0, a1, a2) = (lebesgue_endpoint(k), lebesgue_endpoint(k + 1), lebesgue_endpoint(k + 2));
        assert_eq!(partition_level(k) + 1.0, a0);
        let closed = |s: f64| s * (a1 - a0) / (s * (a2 - a1) + a1 * a1 - a0 * a2);
        for s in w.grid(k, 100).unwrap().nodes {
            interior = interior.max((w.multiplier_sq(k, s).unwrap() - closed(s)).abs());
        }
        ends = ends
            .max((w.multiplier_sq(k, a0).unwrap() - a0 / a1).abs())
            .max((w.multiplier_sq(k, a1).unwrap() - a1 / a2).abs());
    }
    record(
        out,
        3,
        "closed-form transport multiplier",
        interior <= 1e-9 && ends <= 1e-10,
        format!("interior max error {interior:.2e}, endpoint max error {ends:.2e}"),
    );
}

// ------------------------------------------------------------ criterion 4

fn criterion_4(out: &mut Vec<Outcome>) {
    let budget = Budget { samples: 0, nodes: 4096, seed: 4 };
    let parts = [
        ("lebesgue", ContinuousPart::lebesgue(1.0, 2.0)),
        ("ramp", ContinuousPart::density(1.0, 3.0, vec![0.0, 1.0])),
        ("cantor", ContinuousPart::cantor(1.0, 2.0, 1.0)),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, part) in parts {
        let w = build_transport_witness(&part, 16).unwrap();
        let r = check_transport_isometry(&w, 20, budget).unwrap();
        let limit = if name == "cantor" { 1e-3 } else { 1e-5 };
        ok &= r.pass && r.worst_residual <= limit && r.samples == 20 * w.map_range().count();
        detail.push(format!("{name} {:.1e} over {}", r.worst_residual, r.samples));
    }
    record(out, 4, "transport isometry", ok, detail.join(", "));
}

// ------------------------------------------------------------ criterion 5

fn random_intervals(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let (s, t) = (rng.random_range(lo..=hi), rng.random_range(lo..=hi));
            [s.min(t), s.max(t)]
        })
        .collect()
}

fn criterion_5(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let measure = |p: ContinuousPart| MeasureSpec::from_part(p).unwrap();
    let ramp = measure(ContinuousPart::density(1.0, 2.0, vec![-1.0, 1.0]));
    let quad = measure(ContinuousPart::density(3.0, 5.0, vec![0.5, 0.0, 0.25]));
    let cantor = measure(ContinuousPart::cantor(1.0, 2.0, 1.0));
    let leb = MeasureSpec::lebesgue(3.0, 4.0);

    let mut run = |src: &MeasureSpec, dst: &MeasureSpec| {
        let map = TransportMap::new(src.clone(), dst.clone());
        let (lo, hi) = dst.support();
        let iv = random_intervals(&mut rng, lo, hi, 100);
        pushforward_check(src, dst, &map, &iv).max_residual
    };
    let dd = run(&ramp, &quad);
    let cd = run(&cantor, &leb);
    let dc = run(&leb, &cantor);
    let half = MeasureSpec::from_part(ContinuousPart::cantor(0.0, 1.0, 1.0))
        .unwrap()
        .quantile(0.5)
        .unwrap();
    let q_err = (half - 2.0 / 3.0).abs();
    record(
        out,
        5,
        "pushforward identity",
        dd <= 1e-9 && cd <= 1e-6 && dc <= 1e-6 && q_err <= 2f64.powi(-20),
        format!("density {dd:.1e}, cantor source {cd:.1e}, cantor target {dc:.1e}, F^-1(1/2) error {q_err:.1e}"),
    );
}

// ------------------------------------------------------------ criterion 6

fn random_spectrum(rng: &mut ChaCha8Rng, max_dim: usize) -> TruncatedQuadraticSpace {
    let n = rng.random_range(2..=max_dim);
    let distinct: Vec<f64> = (0..rng.random_range(1..=n))
        .map(|_| rng.random_range(0.1..10.0))
        .collect();
    let lambdas = (0..n).map(|i| distinct[if i < distinct.len() { i } else { rng.random_range(0..distinct.len()) }]).collect();
    TruncatedQuadraticSpace::from_diagonal(lambdas).unwrap()
}

fn criterion_6(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut escape, mut gap): (f64, f64) = (0.0, 0.0);
    let mut ok = true;
    for i in 0..50 {
        let space = random_spectrum(&mut rng, 64);
        let r = check_rayleigh_bounds(&space, 1000, i);
        let m = check_min_attained(&space, 1000, i).unwrap();
        escape = escape.max(r.worst_residual);
        gap = gap.max(m.worst_residual);
        ok &= r.pass && m.pass;
    }
    record(
        out,
        6,
        "rayleigh and minimizer suite",
        ok,
        format!("50 spectra, worst escape {escape:.1e}, worst gap-bound violation {gap:.1e}"),
    );
}

// ------------------------------------------------------------ criterion 7

fn criterion_7(out: &mut Vec<Outcome>) {
    let min_norm = (0..360)
        .map(|i| operator_norm(&rotation_conjugate(1.0, 2.0, 2.0 * PI * i as f64 / 360.0)))
        .fold(f64::INFINITY, f64::min);
    let quarter = operator_norm(&rotation_conjugate(1.0, 2.0, FRAC_PI_4));
    let ends = [0.0, PI]
        .iter()
        .map(|&t| (operator_norm(&rotation_conjugate(1.0, 2.0, t)) - 1.0).abs())
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut spaces: Vec<TruncatedQuadraticSpace> = (0..20).map(|_| random_spectrum(&mut rng, 8)).collect();
    spaces.push(TruncatedQuadraticSpace::from_diagonal(vec![1.0, 1.0, 2.0, 2.0, 2.0, 3.0]).unwrap());
    let mut worst: f64 = 0.0;
    let mut all_pass = true;
    let mut accepted_min = usize::MAX;
    for (i, s) in spaces.iter().enumerate() {
        let mut reports = check_finite_dim_plasticity(s, 200, i as u64).unwrap();
        let extremal = check_extremal_invariance(s, 300, i as u64).unwrap();
        accepted_min = accepted_min.min(extremal[0].samples);
        reports.extend(extremal);
        for r in &reports {
            all_pass &= r.pass;
            if r.name.starts_with("finite_dim_contraction") || r.name.starts_with("extremal") {
                worst = worst.max(r.worst_residual);
            }
        }
    }
    let ok = min_norm >= 1.0 - 1e-12
        && (quarter - 1.28078).abs() <= 1e-4
        && ends <= 1e-9
        && all_pass
        && worst <= 1e-8
        && accepted_min >= 200;
    record(
        out,
        7,
        "finite-dimensional plasticity surrogate",
        ok,
        format!(
            "min norm {min_norm:.15}, norm at pi/4 {quarter:.6}, end error {ends:.1e}, worst accepted residual {worst:.1e}"
        ),
    );
}

// ------------------------------------------------------------ criterion 8

fn criterion_8(out: &mut Vec<Outcome>) {
    let dir = std::env::temp_dir().join(format!("lecp-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("lebesgue.json");
    std::fs::write(&input, corpus()[4].json).unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_lecp"))
            .args(["all", "--seed", "11", "--input"])
            .arg(&input)
            .output()
            .expect("lecp runs")
    };
    let first = run();
    let second = run();
    let report: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap_or_default();
    let checks = report["checks"].as_array().cloned().unwrap_or_default();
    let all_pass = !checks.is_empty() && checks.iter().all(|c| c["pass"] == true);
    let identical = first.stdout == second.stdout;
    let code = first.status.code();
    let _ = std::fs::remove_dir_all(&dir);
    record(
        out,
        8,
        "end-to-end cli",
        code == Some(3) && all_pass && identical,
        format!("exit {code:?}, {} checks all pass = {all_pass}, identical reruns = {identical}", checks.len()),
    );
}

#[test]
fn acceptance_criteria() {
    let mut out = Vec::new();
    criterion_1(&mut out);
    criterion_2(&mut out);
    criterion_3(&mut out);
    criterion_4(&mut out);
    criterion_5(&mut out);
    criterion_6(&mut out);
    criterion_7(&mut out);
    criterion_8(&mut out);
    let failed: Vec<String> = out
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{} ({}): {}", o.id, o.title, o.detail))
        .collect();
    println!("{}/{} criteria pass", out.len() - failed.len(), out.len());
    assert!(failed.is_empty(), "failing criteria: {failed:#?}");
}
