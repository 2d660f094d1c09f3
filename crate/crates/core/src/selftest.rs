//! Built-in consistency checks: the inference engine against joint
//! enumeration, model CPTs against their predicates, segment CPA against a
//! golden-section search and prior discretization against quadrature.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bn::{joint_enumerate_oracle, BnError, Network, VarId};
use crate::geometry::{segment_cpa, ShipState};
use crate::intention::{
    build_intention_dbn, discretize_truncnorm, model_node_truth, states::TRUE, Discretization, IntentionPriors,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} cases={:<5} max_err={:.3e} tol={:.0e} ({:.2} s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_error,
            self.tolerance,
            self.seconds
        )
    }
}

fn timed(name: &'static str, tolerance: f64, f: impl FnOnce() -> (usize, f64)) -> CheckResult {
    let start = Instant::now();
    let (cases, max_error) = f();
    CheckResult { name, cases, max_error, tolerance, seconds: start.elapsed().as_secs_f64() }
}

/// Runs every check with the given seed.
pub fn run_selftest(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        timed("inference vs enumeration", 1e-9, || inference_vs_enumeration(&mut rng, 200)),
        timed("model CPTs vs predicates", 0.0, model_cpts_vs_predicates),
        timed("segment CPA vs search", 1e-6, || segment_cpa_vs_search(&mut rng, 1000)),
        timed("discretization vs quadrature", 1e-9, discretization_vs_quadrature),
    ]
}

fn random_network(rng: &mut ChaCha8Rng) -> Network {
    let labels = ["a", "b", "c", "d", "e"];
    let mut net = Network::new();
    let n = rng.random_range(2..=9);
    for v in 0..n {
        let card = rng.random_range(2..=4);
        let k = rng.random_range(0..=v.min(3));
        let mut parents: Vec<VarId> = Vec::new();
        while parents.len() < k {
            let p = VarId(rng.random_range(0..v));
            if !parents.contains(&p) {
                parents.push(p);
            }
        }
        let rows: usize = parents.iter().map(|&p| net.cardinality(p)).product();
        let mut values = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            let mut row: Vec<f64> =
                (0..card).map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random::<f64>() }).collect();
            if row.iter().all(|&x| x == 0.0) {
                row[0] = 1.0;
            }
            let s: f64 = row.iter().sum();
            values.extend(row.into_iter().map(|x| x / s));
        }
        net.add_table(&format!("v{v}"), &labels[..card], &parents, values).expect("valid random table");
    }
    for v in 0..n {
        let id = VarId(v);
        let card = net.cardinality(id);
        match rng.random_range(0..6) {
            0 => net.set_evidence(id, rng.random_range(0..card)).expect("in range"),
            1 => {
                let l: Vec<f64> = (0..card).map(|_| rng.random::<f64>() + 0.01).collect();
                net.set_virtual_evidence(id, l).expect("positive likelihood")
            }
            _ => {}
        }
    }
    net
}

fn inference_vs_enumeration(rng: &mut ChaCha8Rng, cases: usize) -> (usize, f64) {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let net = random_network(rng);
        let all: Vec<VarId> = net.ids().collect();
        match net.posteriors(&all) {
            Ok(got) => {
                for d in got {
                    let want = joint_enumerate_oracle(&net, d.var, 1e7).expect("small network");
                    for (a, b) in d.probabilities.iter().zip(&want.probabilities) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
            Err(BnError::Contradiction(_)) => {
                if joint_enumerate_oracle(&net, VarId(0), 1e7).is_ok() {
                    worst = f64::INFINITY;
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    (cases, worst)
}

fn model_cpts_vs_predicates() -> (usize, f64) {
    let dbn = build_intention_dbn(2, &IntentionPriors::default(), &Discretization::default(), 1)
        .expect("default network builds");
    let net = dbn.network();
    let mut checked = 0;
    let mut mismatches = 0usize;
    for spec in dbn.model_specs() {
        let cards: Vec<usize> = spec.parents.iter().map(|&p| net.cardinality(p)).collect();
        let mut s = vec![0usize; cards.len()];
        loop {
            let want = model_node_truth(spec.kind, &s).expect("arity matches");
            let got = net.conditional(spec.var, &s, TRUE);
            if got != if want { 1.0 } else { 0.0 } {
                mismatches += 1;
            }
            checked += 1;
            let Some(d) = (0..s.len()).rev().find(|&d| s[d] + 1 < cards[d]) else { break };
            s[d] += 1;
            s[d + 1..].iter_mut().for_each(|x| *x = 0);
        }
    }
    (checked, mismatches as f64)
}

/// Minimum of a unimodal function on `[a, b]`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    while b - a > 1e-10 * (1.0 + b.abs()) {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    f(0.5 * (a + b))
}

fn segment_cpa_vs_search(rng: &mut ChaCha8Rng, cases: usize) -> (usize, f64) {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let dt = rng.random_range(1.0..60.0);
        let ship = |rng: &mut ChaCha8Rng| {
            let s = ShipState::new(
                0.0,
                rng.random_range(-3000.0..3000.0),
                rng.random_range(-3000.0..3000.0),
                rng.random_range(0.5..12.0),
                rng.random_range(-3.2..3.2),
            );
            (s, s.propagate(dt))
        };
        let (a0, a1) = ship(rng);
        let (b0, b1) = ship(rng);
        let got = segment_cpa(&a0, &a1, &b0, &b1).expect("increasing times");
        let dist = |t: f64| a0.propagate(t).distance_to(&b0.propagate(t));
        let want = golden_section(dist, 0.0, dt);
        worst = worst.max((got.d_opt - want).abs());
    }
    (cases, worst)
}

/// Adaptive Simpson integration to absolute tolerance `eps`.
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, eps, 50)
}

fn discretization_vs_quadrature() -> (usize, f64) {
    let p = IntentionPriors::default();
    let nodes = [
        p.ample_time,
        p.safe_distance,
        p.safe_distance_front,
        p.safe_distance_midpoint,
        p.safe_distance_ground_side,
        p.safe_distance_ground_front,
    ];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in nodes {
        for bins in [5, 10, 20] {
            let got = discretize_truncnorm(n.mean, n.sd, n.lo, n.hi, bins).expect("valid prior");
            let pdf = |x: f64| (-0.5 * ((x - n.mean) / n.sd).powi(2)).exp();
            let w = (n.hi - n.lo) / bins as f64;
            let masses: Vec<f64> =
                (0..bins).map(|k| simpson(&pdf, n.lo + k as f64 * w, n.lo + (k + 1) as f64 * w, 1e-14 * n.sd)).collect();
            let total: f64 = masses.iter().sum();
            worst = worst.max((got.iter().sum::<f64>() - 1.0).abs());
            for (g, m) in got.iter().zip(&masses) {
                worst = worst.max((g - m / total).abs());
            }
            cases += 1;
        }
    }
    (cases, worst)
}
