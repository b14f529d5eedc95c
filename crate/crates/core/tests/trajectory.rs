//! End-to-end checks of harness runs against straight-line recomputations.

use netresv::harness::{execute, simulate, ExperimentConfig, PolicyKind, PolicySpec};
use netresv::model::{NetworkConfig, Reservation, ReservationSpace};
use netresv::transfer::brute_force_transfer;
use netresv::Instance;
use std::path::Path;

fn shipped_config() -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/two_server.json");
    ExperimentConfig::from_json_file(path).unwrap()
}

/// Projection by sorting, written out longhand.
fn project(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[test]
fn saddle_trajectory_matches_longhand_updates() {
    let cfg = NetworkConfig::two_server_example();
    let inst = Instance::new(cfg.clone()).unwrap();
    let space = ReservationSpace::new(&cfg).unwrap();
    let all: Vec<Reservation> = space.iter().collect();
    let c_r: Vec<f64> = all.iter().map(|a| cfg.reservation_cost(a)).collect();
    let cost = |a: &Reservation, b: &Reservation| {
        let plan = brute_force_transfer(&cfg, a, b).unwrap();
        plan.c_v + plan.c_t
    };

    let requests: Vec<usize> = [(3, 5), (7, 1), (2, 8)]
        .iter()
        .map(|&(x, y)| space.index_of(&Reservation::new(vec![x, y])).unwrap())
        .collect();
    let b0 = space.index_of(&Reservation::new(vec![1, 1])).unwrap();
    let (alpha, mu, v) = (0.001, 0.1, 2.0);

    let spec = PolicySpec {
        name: "alg1".into(),
        kind: PolicyKind::SaddlePoint {
            alpha,
            mu,
            lambda_init: 0.0,
            init: Default::default(),
        },
    };
    let mut policy = spec.build(&inst, b0).unwrap();
    let ledger = simulate(&inst, policy.as_mut(), &requests, b0, 0).unwrap();

    let mut p = vec![1.0 / 56.0; 56];
    let mut lambda: f64 = 0.0;
    let mut b_prev = b0;
    for (t, &b) in requests.iter().enumerate() {
        let costs: Vec<f64> = all.iter().map(|a| cost(a, &all[b_prev])).collect();
        let y: Vec<f64> = (0..56).map(|a| p[a] - alpha * (c_r[a] + lambda * costs[a])).collect();
        let next = project(&y);
        let expected: f64 = next.iter().zip(&costs).map(|(x, c)| x * c).sum();
        let slot = &ledger.slots[t];
        assert_eq!(slot.lambda, Some(lambda), "t={}", t + 1);
        for a in 0..56 {
            assert!((slot.distribution.probs()[a] - next[a]).abs() < 1e-12, "t={} a={a}", t + 1);
        }
        assert!((slot.expected_cost_prev - expected).abs() < 1e-12);
        lambda = (lambda + mu * (expected - v)).max(0.0);
        p = next;
        b_prev = b;
    }
    assert!((ledger.final_lambda.unwrap() - lambda).abs() < 1e-12);
}

#[test]
fn realized_regret_matches_recount_from_ledger() {
    let mut cfg = shipped_config();
    cfg.select_policies(&["alg1".into(), "naive".into()]).unwrap();
    cfg.seeds = vec![0];
    let out = execute(&cfg).unwrap();
    let inst = Instance::new(cfg.network.clone()).unwrap();
    let requests = &out.requests[0];

    // best static reservation meeting the budget in every slot
    let v = cfg.network.v;
    let best = (0..inst.len())
        .filter(|&a| requests.iter().all(|&b| inst.oracle.total(a, b) <= v + 1e-9))
        .map(|a| inst.reservation_costs[a])
        .fold(f64::INFINITY, f64::min);

    for (run, summary) in out.runs.iter().zip(&out.summary.runs) {
        let recount: f64 = run
            .ledger
            .slots
            .iter()
            .map(|s| inst.reservation_costs[s.sampled] - best)
            .sum();
        let k1 = summary.regret.iter().find(|r| r.k == 1).unwrap();
        assert!((k1.realized - recount).abs() < 1e-9 * (1.0 + recount.abs()), "{}", summary.policy);
    }

    // point-mass policies: deterministic regret is Σ C_R(a_t) - T E_{P*}[C_R]
    let naive = out.run("naive", 0).unwrap();
    let bench = out.summary.benchmarks[0].windows.iter().find(|w| w.k == 1).unwrap();
    let t = requests.len() as f64;
    let direct: f64 =
        naive.ledger.slots.iter().map(|s| inst.reservation_costs[s.sampled]).sum::<f64>() - t * bench.distribution_objective;
    let summary = out.summary.runs.iter().find(|r| r.policy == "naive").unwrap();
    let k1 = summary.regret.iter().find(|r| r.k == 1).unwrap();
    assert!((k1.deterministic - direct).abs() < 1e-9 * (1.0 + direct.abs()));
}

#[test]
fn lazy_and_naive_track_the_workload() {
    let mut cfg = shipped_config();
    cfg.select_policies(&["lazy".into(), "naive".into()]).unwrap();
    cfg.seeds = vec![0];
    let out = execute(&cfg).unwrap();
    let inst = Instance::new(cfg.network.clone()).unwrap();
    let requests = &out.requests[0];
    let naive = out.run("naive", 0).unwrap();
    for (t, s) in naive.ledger.slots.iter().enumerate() {
        let prev = if t == 0 { s.prev_request } else { requests[t - 1] };
        assert!(inst.oracle.total(s.sampled, prev) <= cfg.network.v);
    }
    let lazy = out.run("lazy", 0).unwrap();
    assert!(lazy.ledger.slots.iter().skip(1).zip(requests).all(|(s, &b)| s.sampled == b));
}
