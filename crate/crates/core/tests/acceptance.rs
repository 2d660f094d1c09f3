//! One test per acceptance criterion. Each prints a PASS/FAIL line with the
//! measured value and its pinned tolerance.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use vessel_intent::bn::{joint_enumerate_oracle, BnError, Network, VarId};
use vessel_intent::extract::{build_prior_config, find_cpa, Encounter, EncounterLabel, ExtractThresholds};
use vessel_intent::geometry::{segment_cpa, GeometryParams, PolygonMap, ShipState, Situation, Waypoint};
use vessel_intent::intention::{build_intention_dbn, discretize_truncnorm, model_node_truth, Discretization, IntentionPriors};
use vessel_intent::runtime::{init_session, interpolate_track, replay, ReplayOptions, SessionConfig};
use vessel_intent::trajgen::{los_candidates, los_trajectory, TrajGenParams};

/// Writes past the test harness's output capture so every run shows the line.
fn report(criterion: &str, pass: bool, detail: String) {
    let line = format!("[{}] {criterion}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

fn land(rects: Vec<Vec<[f64; 2]>>) -> PolygonMap {
    PolygonMap::new(rects, "local").unwrap().densified(10.0)
}

// ---------------------------------------------------------------- inference

/// Random network: up to 12 variables, cardinality up to 5, table and
/// deterministic CPTs, hard and virtual evidence. The joint state space is
/// kept small enough to enumerate.
fn random_network(rng: &mut ChaCha8Rng) -> Network {
    const LABELS: [&str; 5] = ["s0", "s1", "s2", "s3", "s4"];
    let mut net = Network::new();
    let n = rng.random_range(1..=12);
    let mut joint = 1usize;
    for v in 0..n {
        let mut card = rng.random_range(2..=5);
        while card > 2 && joint * card > 40_000 {
            card -= 1;
        }
        joint *= card;
        let k = rng.random_range(0..=v.min(3));
        let mut parents: Vec<VarId> = Vec::new();
        while parents.len() < k {
            let p = VarId(rng.random_range(0..v));
            if !parents.contains(&p) {
                parents.push(p);
            }
        }
        let name = format!("v{v}");
        if !parents.is_empty() && rng.random_bool(0.25) {
            let (a, b) = (rng.random_range(1..5usize), rng.random_range(0..5usize));
            let rule = Arc::new(move |s: &[usize]| (s.iter().sum::<usize>() * a + b) % card);
            net.add_deterministic(&name, &LABELS[..card], &parents, rule).unwrap();
            continue;
        }
        let rows: usize = parents.iter().map(|&p| net.cardinality(p)).product();
        let mut values = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            let mut row: Vec<f64> =
                (0..card).map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() }).collect();
            if row.iter().all(|&x| x == 0.0) {
                row[rng.random_range(0..card)] = 1.0;
            }
            let s: f64 = row.iter().sum();
            values.extend(row.into_iter().map(|x| x / s));
        }
        net.add_table(&name, &LABELS[..card], &parents, values).unwrap();
    }
    for v in 0..n {
        let id = VarId(v);
        let card = net.cardinality(id);
        match rng.random_range(0..8) {
            0 => net.set_evidence(id, rng.random_range(0..card)).unwrap(),
            1 | 2 => {
                let l: Vec<f64> = (0..card).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() }).collect();
                if l.iter().any(|&x| x > 0.0) {
                    net.set_virtual_evidence(id, l).unwrap();
                }
            }
            _ => {}
        }
    }
    net
}

/// Every marginal by summing the weighted joint, or `None` when the
/// evidence has zero mass.
fn enumerate_marginals(net: &Network) -> Option<Vec<Vec<f64>>> {
    use vessel_intent::bn::Evidence;
    let ids: Vec<VarId> = net.ids().collect();
    let cards: Vec<usize> = ids.iter().map(|&v| net.cardinality(v)).collect();
    let mut acc: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
    let mut x = vec![0usize; ids.len()];
    loop {
        let mut w = 1.0;
        for &v in &ids {
            let ps: Vec<usize> = net.cpt(v).parents().iter().map(|p| x[p.0]).collect();
            w *= net.conditional(v, &ps, x[v.0]);
            match net.evidence().get(&v) {
                Some(Evidence::Hard(s)) if *s != x[v.0] => w = 0.0,
                Some(Evidence::Likelihood(l)) => w *= l[x[v.0]],
                _ => {}
            }
        }
        for (v, a) in acc.iter_mut().enumerate() {
            a[x[v]] += w;
        }
        let Some(d) = (0..x.len()).rev().find(|&d| x[d] + 1 < cards[d]) else { break };
        x[d] += 1;
        x[d + 1..].iter_mut().for_each(|s| *s = 0);
    }
    let z: f64 = acc[0].iter().sum();
    if z <= 0.0 {
        return None;
    }
    Some(acc.into_iter().map(|a| a.into_iter().map(|p| p / z).collect()).collect())
}

#[test]
fn inference_matches_enumeration() {
    const NETWORKS: usize = 1000;
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let start = Instant::now();
    let (mut worst, mut contradictions, mut failures) = (0.0f64, 0, Vec::new());
    for case in 0..NETWORKS {
        let net = random_network(&mut rng);
        let want = enumerate_marginals(&net);
        let probe = VarId(rng.random_range(0..net.len()));
        let lib_oracle = joint_enumerate_oracle(&net, probe, 1e7);
        match want {
            None => {
                contradictions += 1;
                let engine_says = matches!(net.posterior(probe), Err(BnError::Contradiction(_)));
                if !engine_says || lib_oracle.is_ok() {
                    failures.push(format!("case {case}: zero-mass evidence not reported"));
                }
            }
            Some(want) => {
                let lib = lib_oracle.unwrap();
                for (a, b) in lib.probabilities.iter().zip(&want[probe.0]) {
                    worst = worst.max((a - b).abs());
                }
                for v in net.ids() {
                    let got = net.posterior(v).unwrap();
                    for (a, b) in got.probabilities.iter().zip(&want[v.0]) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= TOL && failures.is_empty() && secs < 60.0;
    report(
        "inference oracle",
        pass,
        format!(
            "{NETWORKS} networks ({contradictions} zero-mass), max |err| = {worst:.2e} (tol {TOL:.0e}), {secs:.1} s (limit 60 s)"
        ),
    );
    assert!(failures.is_empty(), "{failures:?}");
    assert!(worst <= TOL);
    assert!(secs < 60.0);
}

// -------------------------------------------------------- equation fidelity

/// The model equations written against state labels, independent of the
/// index constants used by the library.
fn equation(kind: &str, net: &Network, parents: &[VarId], s: &[usize]) -> bool {
    let lab = |i: usize| net.variable(parents[i]).labels[s[i]].as_str();
    let b = |i: usize| lab(i) == "true";
    let gt = |i: usize, j: usize| s[i] > s[j];
    match kind {
        "SD" => gt(0, 1) && gt(2, 3),
        "P" => b(0) && b(1),
        "C_OTen" | "C_OTing" => b(0),
        "C_HO" => gt(0, 1) && lab(2) == "port",
        "C_CR_SS" => b(0) && lab(1) == "port",
        "C_CR_PS" => b(0) && lab(1) != "port",
        "NAV_M" => lab(0) == "decreasing" && (lab(1) == "decreasing" || b(2)),
        "C_NAV_M" => {
            let ho = lab(2) == "HO";
            b(0) && ((b(1) && !ho) || b(3) || (gt(4, 5) && ho))
        }
        "R" => lab(0) == "lower" || (lab(0) == "similar" && matches!(lab(1), "HO" | "CR_SS" | "OT_ing")),
        "GS" => !(b(0) && b(1)) && lab(2) != lab(3),
        "CEM" => {
            let ok = match lab(3) {
                "OT_ing" => b(4),
                "OT_en" => b(5),
                "HO" => b(6),
                "CR_SS" => b(7),
                "CR_PS" => b(8),
                other => panic!("unknown situation {other}"),
            };
            (!b(0) || b(1)) && (!b(2) || ok)
        }
        "SOC" => {
            let steady = lab(0) == "straight" && lab(1) == "none";
            steady || (2..s.len()).step_by(3).any(|j| lab(j) == "GW" && b(j + 1) && !b(j + 2))
        }
        "SDG_S" => (gt(0, 2) && lab(3) == "starboard") || (gt(1, 2) && lab(3) == "port") || lab(3) == "straight",
        "SDG_F" => gt(0, 1) || lab(2) != "straight",
        "SDG" => b(0) && b(1),
        "GWC" => b(0) || b(1) || (gt(2, 3) && b(4)),
        "C_COLAV_M" => !b(0) && ((lab(1) == "SO" && b(2)) || (lab(1) == "GW" && b(3))),
        "C_i" => (b(0) || b(1)) && (b(2) || b(3)),
        "C" => s[..s.len() - 1].iter().enumerate().all(|(i, _)| b(i)) || b(s.len() - 1),
        "SA" => b(0) || lab(1) == "starboard",
        "PA" => b(0) || lab(1) == "port",
        other => panic!("no equation for {other}"),
    }
}

#[test]
fn compiled_factors_match_equations() {
    const SAMPLES: usize = 10_000;
    let dbn = build_intention_dbn(3, &IntentionPriors::default(), &Discretization::default(), 2).unwrap();
    let net = dbn.network();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut by_kind: HashMap<&'static str, Vec<_>> = HashMap::new();
    for spec in dbn.model_specs() {
        by_kind.entry(spec.kind.label()).or_default().push(spec);
    }
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for (kind, specs) in &by_kind {
        for n in 0..SAMPLES {
            let spec = specs[n % specs.len()];
            let s: Vec<usize> = spec.parents.iter().map(|&p| rng.random_range(0..net.cardinality(p))).collect();
            let want = equation(kind, net, &spec.parents, &s);
            let known: HashMap<VarId, usize> = spec.parents.iter().copied().zip(s.iter().copied()).collect();
            let factor = net.cpt_factor(spec.var, &known);
            let compiled = factor.values();
            let truth = model_node_truth(spec.kind, &s).unwrap();
            let expect = if want { [0.0, 1.0] } else { [1.0, 0.0] };
            if compiled != expect || truth != want {
                mismatches.push(format!("{} at {s:?}", spec.name));
            }
            checked += 1;
        }
    }
    let kinds = by_kind.len();
    report(
        "equation fidelity",
        mismatches.is_empty(),
        format!("{kinds} node equations x {SAMPLES} assignments ({checked} total), {} mismatches (tol 0)", mismatches.len()),
    );
    assert_eq!(kinds, 22, "every model node kind is wired into the network");
    assert!(mismatches.is_empty(), "{:?}", &mismatches[..mismatches.len().min(10)]);
}

// ------------------------------------------------------------------ figures

#[test]
fn front_ground_probability_falls_on_approach() {
    // Wall across the course 1500 m ahead; the obstacle is far away.
    let map = land(vec![rect(-3000.0, 1500.0, 3000.0, 2000.0)]);
    let r0 = ShipState::from_compass(0.0, 0.0, 0.0, 5.0, 0.0);
    let far = ShipState::from_compass(0.0, 20000.0, 0.0, 5.0, 90.0);
    let mut s = init_session(SessionConfig::default(), 0.0, &[r0, far]).unwrap();
    let mut series = Vec::new();
    for k in 0..=30 {
        let t = k as f64 * 10.0;
        s.step_update(&[r0.propagate(t), far.propagate(t)], &map, None).unwrap();
        series.push((1500.0 - 5.0 * t, s.nodes().unwrap().sdg_f));
    }
    let rises = series.windows(2).filter(|w| w[1].1 > w[0].1 + 1e-12).count();
    let min_far = series.iter().filter(|p| p.0 > 800.0).map(|p| p.1).fold(1.0, f64::min);
    let (d_end, p_end) = *series.last().unwrap();
    let pass = rises == 0 && min_far > 0.95 && d_end == 0.0 && p_end < 0.05;
    report(
        "front grounding (approach)",
        pass,
        format!("rises = {rises} (tol 0), min P(SDG_F) beyond 800 m = {min_far:.4} (> 0.95), P(SDG_F) at 0 m = {p_end:.4} (< 0.05)"),
    );
    assert!(pass, "{series:?}");
}

#[test]
fn side_ground_probability_falls_while_turning_in() {
    // Land to starboard; the reference turns 30 degrees towards it at t = 60.
    let map = land(vec![rect(800.0, -1000.0, 3000.0, 6000.0)]);
    let r0 = ShipState::from_compass(0.0, 0.0, 0.0, 5.0, 0.0);
    let far = ShipState::from_compass(0.0, -20000.0, 0.0, 5.0, 270.0);
    let params = TrajGenParams { deviation_m: 1e6, horizon_s: 2000.0, ..TrajGenParams::default() };
    let turn = los_trajectory(&r0.propagate(60.0), -30f64.to_radians(), &params);
    let track: Vec<ShipState> = (0..12).map(|k| r0.propagate(k as f64 * 5.0)).chain(turn.states.iter().copied()).collect();
    let geom = GeometryParams::default();

    let run = |straight: bool| {
        let mut s = init_session(SessionConfig::default(), 0.0, &[r0, far]).unwrap();
        let mut out = Vec::new();
        for k in 1..=60 {
            let t = k as f64 * 5.0;
            let me = if straight { r0.propagate(t) } else { interpolate_track(&track, t).unwrap() };
            s.step_update(&[me, far.propagate(t)], &map, None).unwrap();
            let stbd = vessel_intent::geometry::grounding_measurements(&me, &map, &geom).starboard;
            let cic = s.measurements().last().unwrap().as_ref().unwrap().cic;
            out.push((stbd, cic, s.nodes().unwrap().sdg_s));
        }
        out
    };
    let turning = run(false);
    let mut pairs = 0;
    let mut rises = 0;
    for w in turning.windows(2) {
        let ((d0, c0, p0), (d1, c1, p1)) = (w[0], w[1]);
        let changing = c0 != vessel_intent::geometry::CourseChange::Straight
            && c1 != vessel_intent::geometry::CourseChange::Straight;
        if changing && d1 < d0 {
            pairs += 1;
            if p1 > p0 + 1e-12 {
                rises += 1;
            }
        }
    }
    let last = turning.last().unwrap().2;
    let control = run(true);
    let off = control.iter().map(|c| (c.2 - 1.0).abs()).fold(0.0, f64::max);
    let pass = rises == 0 && pairs >= 10 && last < 0.5 && off < 1e-12;
    report(
        "side grounding (turn in)",
        pass,
        format!(
            "rises = {rises} over {pairs} shrinking steps (tol 0), final P(SDG_S) = {last:.4}, straight control max |P - 1| = {off:.1e} (tol 1e-12)"
        ),
    );
    assert!(pass, "{turning:?}");
}

#[test]
fn port_turn_to_waypoint_reads_as_navigation() {
    // Head-on, then a 30 degree turn to port at t = 200 towards a waypoint.
    let map = PolygonMap::empty();
    let r0 = ShipState::from_compass(0.0, 0.0, 0.0, 5.0, 0.0);
    let o0 = ShipState::from_compass(0.0, -1500.0, 4000.0, 5.0, 180.0);
    let (turn_t, turn_deg) = (200.0, 30.0);
    let p = TrajGenParams::default();
    let turn = los_trajectory(
        &r0.propagate(turn_t),
        f64::to_radians(turn_deg),
        &TrajGenParams { deviation_m: 1e6, horizon_s: 1500.0, ..p.clone() },
    );
    let end = turn.states.last().unwrap();
    let wp = Some(Waypoint { x: end.x, y: end.y });
    let rtrack: Vec<ShipState> =
        (0..(turn_t / 5.0) as usize).map(|k| r0.propagate(k as f64 * 5.0)).chain(turn.states.iter().copied()).collect();

    let mut s = init_session(SessionConfig::default(), 0.0, &[r0, o0]).unwrap();
    let situation = s.situations()[0];
    let (mut colav_max, mut nav_min, mut top, mut steps) = (0.0f64, 1.0f64, 0, 0);
    let mut wrong = Vec::new();
    for k in 0..=90 {
        let t = k as f64 * 10.0;
        let states = [interpolate_track(&rtrack, t).unwrap(), o0.propagate(t)];
        s.step_update(&states, &map, wp).unwrap();
        let nodes = s.nodes().unwrap().clone();
        let scores = s.score_candidates(&los_candidates(&states[0], &p), &map, wp).unwrap();
        let passed = s.measurements().last().unwrap().as_ref().unwrap().ships[0].passed;
        // After the turn has settled and before the vessels pass.
        if t >= turn_t + turn_deg / 2.0 + 70.0 && !passed {
            steps += 1;
            colav_max = colav_max.max(nodes.c_colav_m[0]);
            nav_min = nav_min.min(nodes.c_nav_m[0]);
            let best = scores.scores.iter().max_by(|a, b| a.confidence.total_cmp(&b.confidence)).unwrap();
            if best.id == "N0" {
                top += 1;
            } else {
                wrong.push((t, best.id.clone()));
            }
        }
    }
    let pass = situation == Situation::HeadOn && steps >= 5 && colav_max < 0.01 && nav_min > 0.5 && top == steps;
    report(
        "port turn to waypoint",
        pass,
        format!(
            "situation {situation}, {steps} steps after the turn: max P(C_COLAV_M) = {colav_max:.4} (< 0.01), min P(C_NAV_M) = {nav_min:.3} (> 0.5), waypoint candidate on top {top}/{steps}"
        ),
    );
    assert!(pass, "{wrong:?}");
}

/// Even-odd ray casting.
fn inside(poly: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut c = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a[1] > y) != (b[1] > y) && x < (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0] {
            c = !c;
        }
    }
    c
}

#[test]
fn hazard_crossing_candidates_get_no_confidence() {
    // Land along the port side; a head-on vessel just to starboard ahead; the
    // reference has started a 10 degree turn to starboard.
    let port_land = rect(-2075.0, 0.0, -75.0, 8000.0);
    let map = land(vec![port_land.clone()]);
    let r0 = ShipState::from_compass(0.0, 0.0, 0.0, 5.0, 0.0);
    let o0 = ShipState::from_compass(0.0, 300.0, 3000.0, 5.0, 180.0);
    let wp = Some(Waypoint { x: 3000.0, y: 6000.0 });
    let turn = los_trajectory(
        &r0,
        -10f64.to_radians(),
        &TrajGenParams { deviation_m: 1e6, horizon_s: 2000.0, ..TrajGenParams::default() },
    );
    let mut s = init_session(SessionConfig::default(), 0.0, &[r0, o0]).unwrap();
    for t in [10.0, 20.0, 30.0] {
        s.step_update(&[interpolate_track(&turn.states, t).unwrap(), o0.propagate(t)], &map, wp).unwrap();
    }
    let now = interpolate_track(&turn.states, 30.0).unwrap();
    let candidates = los_candidates(&now, &TrajGenParams::default());
    let scores = s.score_candidates(&candidates, &map, wp).unwrap();
    let conf: HashMap<&str, f64> = scores.scores.iter().map(|c| (c.id.as_str(), c.confidence)).collect();
    let crossing: Vec<&str> = candidates
        .iter()
        .filter(|c| c.states.iter().any(|p| inside(&port_land, p.x, p.y)))
        .map(|c| c.id.as_str())
        .collect();
    let worst_crossing = crossing.iter().map(|id| conf[id]).fold(0.0, f64::max);
    let best_safe_starboard = candidates
        .iter()
        .filter(|c| c.id.starts_with('S') && !crossing.contains(&c.id.as_str()))
        .map(|c| conf[c.id.as_str()])
        .fold(0.0, f64::max);
    let pass = !crossing.is_empty() && worst_crossing < 0.02 && best_safe_starboard > 0.5;
    let all: Vec<String> = scores.scores.iter().map(|c| format!("{}={:.3}", c.id, c.confidence)).collect();
    report(
        "hazard-crossing candidates",
        pass,
        format!(
            "crossing {crossing:?} max confidence = {worst_crossing:.4} (< 0.02), best safe starboard = {best_safe_starboard:.3} (> 0.5) [{}]",
            all.join(" ")
        ),
    );
    assert!(pass);
}

// -------------------------------------------------------------- geometry

/// Minimum of a unimodal function on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) <= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

#[test]
fn segment_cpa_matches_numeric_minimum() {
    const PAIRS: usize = 1000;
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst: f64 = 0.0;
    for _ in 0..PAIRS {
        let t0 = rng.random_range(0.0..1000.0);
        let dt = rng.random_range(0.5..120.0);
        let mut ship = || {
            let x = rng.random_range(-5000.0..5000.0);
            let y = rng.random_range(-5000.0..5000.0);
            let sog = rng.random_range(0.1..15.0);
            let course: f64 = rng.random_range(0.0..360.0);
            let (vx, vy) = (sog * course.to_radians().sin(), sog * course.to_radians().cos());
            let a = ShipState::from_compass(t0, x, y, sog, course);
            let b = ShipState::from_compass(t0 + dt, x + vx * dt, y + vy * dt, sog, course);
            (a, b, [x, y], [vx, vy])
        };
        let (a0, a1, pa, va) = ship();
        let (b0, b1, pb, vb) = ship();
        let dist = |t: f64| ((pb[0] + vb[0] * t - pa[0] - va[0] * t).powi(2) + (pb[1] + vb[1] * t - pa[1] - va[1] * t).powi(2)).sqrt();
        let want = golden_min(dist, 0.0, dt);
        let got = segment_cpa(&a0, &a1, &b0, &b1).unwrap().d_opt;
        worst = worst.max((got - want).abs());
    }
    report(
        "segment CPA",
        worst <= TOL,
        format!("{PAIRS} segment pairs, max |d_closed - d_search| = {worst:.2e} m (tol {TOL:.0e} m)"),
    );
    assert!(worst <= TOL);
}

// ------------------------------------------------------------- extraction

#[test]
fn cpa_extraction_recovers_planted_cpa() {
    const N: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut encounters = Vec::new();
    let mut planted = Vec::new();
    for i in 0..N {
        let dt = rng.random_range(2.0..15.0);
        let t0 = rng.random_range(0.0..100.0);
        let t_cpa = t0 + rng.random_range(200.0..900.0);
        let d_cpa = rng.random_range(0.0..2000.0);
        let (sa, ca) = (rng.random_range(2.0..10.0), rng.random_range(0.0..360.0f64));
        let (sb, cb) = (rng.random_range(2.0..10.0), rng.random_range(0.0..360.0f64));
        let va = [sa * ca.to_radians().sin(), sa * ca.to_radians().cos()];
        let vb = [sb * cb.to_radians().sin(), sb * cb.to_radians().cos()];
        let vr = [vb[0] - va[0], vb[1] - va[1]];
        let rel = vr[0].hypot(vr[1]);
        if rel < 1.0 {
            continue;
        }
        // At t_cpa the obstacle sits d_cpa off the reference, square to the
        // relative velocity.
        let pa = [0.0, 0.0];
        let pb = [pa[0] - vr[1] / rel * d_cpa, pa[1] + vr[0] / rel * d_cpa];
        let state = |p: [f64; 2], v: [f64; 2], sog: f64, c: f64, t: f64| {
            ShipState::from_compass(t, p[0] + v[0] * (t - t_cpa), p[1] + v[1] * (t - t_cpa), sog, c)
        };
        let n = ((t_cpa - t0) * 2.0 / dt) as usize;
        let reference: Vec<ShipState> = (0..n).map(|k| state(pa, va, sa, ca, t0 + k as f64 * dt)).collect();
        let phase = rng.random_range(0.0..dt);
        let obstacle: Vec<ShipState> = (0..n + 1).map(|k| state(pb, vb, sb, cb, t0 - phase + k as f64 * dt)).collect();
        encounters.push(Encounter {
            id: format!("e{i}"),
            reference,
            obstacle,
            label: Some(EncounterLabel::Crossing),
            origin: None,
        });
        planted.push((d_cpa, t_cpa - t0, rel * dt, dt));
    }
    let (dcpa, tcpa) = find_cpa(&encounters);
    let mut bad = Vec::new();
    let (mut worst_d, mut worst_t) = (0.0f64, 0.0f64);
    for (k, ((d, t), (pd, pt, dtol, ttol))) in dcpa.iter().zip(&tcpa).zip(&planted).enumerate() {
        worst_d = worst_d.max((d - pd).abs() / dtol);
        worst_t = worst_t.max((t - pt).abs() / ttol);
        if (d - pd).abs() > *dtol || (t - pt).abs() > *ttol {
            bad.push(k);
        }
    }
    let pass = dcpa.len() == planted.len() && planted.len() >= 90 && bad.is_empty();
    report(
        "CPA extraction",
        pass,
        format!(
            "{} encounters, worst dcpa error = {worst_d:.3} x (rel speed x dt), worst tcpa error = {worst_t:.3} x dt (tol 1 each)",
            planted.len()
        ),
    );
    assert!(pass, "{bad:?}");
}

#[test]
fn safe_distance_prior_is_recovered() {
    const N: usize = 258;
    let (mu, sigma, lo, hi) = (808.0, 430.0, 0.0, 1500.0);
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let normal = Normal::new(mu, sigma).unwrap();
    let mut encounters = Vec::new();
    for i in 0..N {
        let d = loop {
            let x: f64 = normal.sample(&mut rng);
            if (lo..=hi).contains(&x) {
                break x;
            }
        };
        // Faster reference overtakes on a parallel track `d` to port.
        let r0 = ShipState::from_compass(0.0, 0.0, 0.0, 8.0, 0.0);
        let o0 = ShipState::from_compass(0.0, -d, 1500.0, 4.0, 0.0);
        let track = |s: ShipState| (0..=80).map(|k| s.propagate(k as f64 * 10.0)).collect::<Vec<_>>();
        encounters.push(Encounter {
            id: format!("ot{i}"),
            reference: track(r0),
            obstacle: track(o0),
            label: Some(EncounterLabel::Overtaking),
            origin: None,
        });
    }
    let (priors, _, vals) =
        build_prior_config(&encounters, &PolygonMap::empty(), &ExtractThresholds::default(), &IntentionPriors::default());
    let sd = priors.safe_distance;
    let (em, es) = ((sd.mean - mu).abs(), (sd.sd - sigma).abs());
    let pass = vals.sd_vals.len() == N && em <= 60.0 && es <= 60.0;
    report(
        "prior recovery",
        pass,
        format!(
            "{N} overtakings: mean {:.1} (planted {mu}, |err| {em:.1} <= 60), sd {:.1} (planted {sigma}, |err| {es:.1} <= 60)",
            sd.mean, sd.sd
        ),
    );
    assert!(pass);
}

// --------------------------------------------------------- discretization

fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let left = (m - a) / 6.0 * (f(a) + 4.0 * f(lm) + f(m));
    let right = (b - m) / 6.0 * (f(m) + 4.0 * f(rm) + f(b));
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_adaptive(f, a, m, tol / 2.0, depth - 1) + simpson_adaptive(f, m, b, tol / 2.0, depth - 1)
    }
}

#[test]
fn discretized_priors_match_quadrature() {
    const SUM_TOL: f64 = 1e-12;
    const MASS_TOL: f64 = 1e-9;
    // Threshold intention priors: (mean, sd, lo, hi).
    let nodes = [
        ("I_AT", 2527.0, 1120.0, 0.0, 5000.0),
        ("I_SD", 808.0, 430.0, 0.0, 1500.0),
        ("I_SDF", 1411.0, 472.0, 0.0, 2000.0),
        ("I_SDM", 249.0, 148.0, 0.0, 600.0),
        ("I_SDGS", 436.0, 124.0, 0.0, 700.0),
        ("I_SDGF", 535.0, 120.0, 0.0, 800.0),
    ];
    let p = IntentionPriors::default();
    let lib = [
        p.ample_time,
        p.safe_distance,
        p.safe_distance_front,
        p.safe_distance_midpoint,
        p.safe_distance_ground_side,
        p.safe_distance_ground_front,
    ];
    let bins = Discretization::default().bins;
    let (mut worst_sum, mut worst_mass) = (0.0f64, 0.0f64);
    for ((name, mean, sd, lo, hi), l) in nodes.iter().zip(lib) {
        assert_eq!((l.mean, l.sd, l.lo, l.hi), (*mean, *sd, *lo, *hi), "default prior for {name}");
        let got = discretize_truncnorm(*mean, *sd, *lo, *hi, bins).unwrap();
        worst_sum = worst_sum.max((got.iter().sum::<f64>() - 1.0).abs());
        let pdf = |x: f64| (-0.5 * ((x - mean) / sd).powi(2)).exp();
        let w = (hi - lo) / bins as f64;
        let raw: Vec<f64> =
            (0..bins).map(|k| simpson_adaptive(&pdf, lo + k as f64 * w, lo + (k + 1) as f64 * w, 1e-13 * w, 40)).collect();
        let z: f64 = raw.iter().sum();
        for (g, r) in got.iter().zip(&raw) {
            worst_mass = worst_mass.max((g - r / z).abs());
        }
    }
    let pass = worst_sum <= SUM_TOL && worst_mass <= MASS_TOL;
    report(
        "discretization",
        pass,
        format!(
            "6 priors x {bins} bins: max |sum - 1| = {worst_sum:.1e} (tol {SUM_TOL:.0e}), max |mass - quadrature| = {worst_mass:.1e} (tol {MASS_TOL:.0e})"
        ),
    );
    assert!(pass);
}

// ------------------------------------------------------------ performance

#[test]
fn steps_and_replays_are_fast_enough() {
    // Head-on with a port turn at 120 s, 600 s long.
    let r0 = ShipState::from_compass(0.0, 0.0, 0.0, 5.0, 0.0);
    let o0 = ShipState::from_compass(0.0, 200.0, 5000.0, 5.0, 180.0);
    let turn = los_trajectory(
        &r0.propagate(120.0),
        -20f64.to_radians(),
        &TrajGenParams { deviation_m: 400.0, horizon_s: 480.0, ..TrajGenParams::default() },
    );
    let reference: Vec<ShipState> = (0..24).map(|k| r0.propagate(k as f64 * 5.0)).chain(turn.states.iter().copied()).collect();
    let obstacle: Vec<ShipState> = (0..=120).map(|k| o0.propagate(k as f64 * 5.0)).collect();
    let map = land(vec![rect(-2500.0, 1000.0, -600.0, 4000.0)]);
    let wp = Some(Waypoint { x: 1000.0, y: 6000.0 });
    let config = SessionConfig::default();
    let params = TrajGenParams::default();

    let mut s = init_session(config.clone(), 0.0, &[reference[0], obstacle[0]]).unwrap();
    let mut slowest = Duration::ZERO;
    let mut t = 0.0;
    while t <= 600.0 {
        let states = [interpolate_track(&reference, t).unwrap(), interpolate_track(&obstacle, t).unwrap()];
        let start = Instant::now();
        s.step_update(&states, &map, wp).unwrap();
        let scores = s.score_candidates(&los_candidates(&states[0], &params), &map, wp).unwrap();
        slowest = slowest.max(start.elapsed());
        assert_eq!(scores.scores.len(), 6);
        t += 5.0;
    }
    let start = Instant::now();
    let records = replay(&config, &[reference, obstacle], &map, wp, &ReplayOptions::default()).unwrap();
    let total = start.elapsed();
    let pass = slowest < Duration::from_secs(1) && total < Duration::from_secs(120) && records.len() == 121;
    report(
        "performance",
        pass,
        format!(
            "slowest step + 6 candidates = {:.1} ms (< 1000 ms), 600 s replay at 5 s steps ({} steps) = {:.2} s (< 120 s)",
            slowest.as_secs_f64() * 1e3,
            records.len(),
            total.as_secs_f64()
        ),
    );
    assert!(pass);
}

// ------------------------------------------------------------- retraction

#[test]
fn scoring_leaves_the_session_untouched() {
    const FIXTURES: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut changed = Vec::new();
    for f in 0..FIXTURES {
        let n_obs = rng.random_range(1..=2);
        let ship = |rng: &mut ChaCha8Rng, spread: f64| {
            ShipState::from_compass(
                0.0,
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
                rng.random_range(1.0..10.0),
                rng.random_range(0.0..360.0),
            )
        };
        let r0 = ship(&mut rng, 100.0);
        let obstacles: Vec<ShipState> = (0..n_obs).map(|_| ship(&mut rng, 4000.0)).collect();
        let map = if rng.random_bool(0.5) {
            let (x, y) = (rng.random_range(-3000.0..3000.0), rng.random_range(-3000.0..3000.0));
            land(vec![rect(x, y, x + rng.random_range(100.0..1500.0), y + rng.random_range(100.0..1500.0))])
        } else {
            PolygonMap::empty()
        };
        let wp = rng.random_bool(0.7).then(|| Waypoint { x: rng.random_range(-5000.0..5000.0), y: rng.random_range(-5000.0..5000.0) });
        let turn_rate: f64 = rng.random_range(-1.0..1.0);
        let states_at = |t: f64| {
            let r = ShipState::new(t, r0.x + r0.sog * t * r0.cog.cos(), r0.y + r0.sog * t * r0.cog.sin(), r0.sog, r0.cog + turn_rate.to_radians() * t);
            std::iter::once(r).chain(obstacles.iter().map(|o| o.propagate(t))).collect::<Vec<_>>()
        };
        let mut s = init_session(SessionConfig::default(), 0.0, &states_at(0.0)).unwrap();
        let steps = rng.random_range(1..=15);
        for k in 0..steps {
            s.step_update(&states_at(k as f64 * 10.0), &map, wp).unwrap();
        }
        let now = states_at((steps - 1) as f64 * 10.0)[0];
        let before = s.digest();
        let posterior = s.posterior().clone();
        s.score_candidates(&los_candidates(&now, &TrajGenParams::default()), &map, wp).unwrap();
        if s.digest() != before || s.posterior() != &posterior {
            changed.push(f);
        }
    }
    report(
        "retraction",
        changed.is_empty(),
        format!("{FIXTURES} fixtures, {} with a changed session hash (tol 0)", changed.len()),
    );
    assert!(changed.is_empty(), "{changed:?}");
}
