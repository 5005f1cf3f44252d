mod common;

use compact_opf::linalg::SymMatrix;
use compact_opf::network::OpfQcqp;
use compact_opf::qcqp::{solve_convex, NodeStatus, NodeTols};
use compact_opf::reform::{build_relaxation, root_bounds, ConvexRelaxation, ParamObjective, ReformParams, ReformTemplate};
use compact_opf::sdp::{build_rank_relaxation, solve_sdp, SdpSettings};
use rand::{Rng, SeedableRng};

fn template(opf: &OpfQcqp) -> ReformTemplate {
    let sol = solve_sdp(&build_rank_relaxation(opf), &SdpSettings::default()).unwrap();
    ReformTemplate::new(opf, &ReformParams::from_sdp(opf, &sol).unwrap(), 1e-7).unwrap()
}

#[test]
fn collapsed_box_at_search_optimum() {
    let (_, opf) = common::load("caseWB2");
    let best = &common::two_bus_search()[0];
    let rel = template(&opf).at(&opf, &best.x, &best.x).unwrap();
    let tight = NodeTols { feas: 1e-10, gap: 1e-10, ..NodeTols::default() };
    let sol = solve_convex(&rel, &tight).unwrap();
    assert_eq!(sol.status, NodeStatus::Optimal);
    assert!((sol.value - best.cost).abs() <= 1e-6, "{} vs {}", sol.value, best.cost);
}

#[test]
fn five_bus_root_value() {
    let (_, opf) = common::load("pglib_opf_case5_pjm");
    let (l, u) = root_bounds(&opf);
    let sol = solve_convex(&template(&opf).at(&opf, &l, &u).unwrap(), &NodeTols::default()).unwrap();
    assert!(((sol.value - 14997.0431) / 14997.0431).abs() <= 1e-4, "{}", sol.value);
}

#[test]
fn injection_norm_objective() {
    let (_, opf) = common::load("caseWB2");
    let (l, u) = root_bounds(&opf);
    let rel = ConvexRelaxation {
        n: opf.n,
        m: opf.m,
        objective: ParamObjective { q: SymMatrix::zeros(4), quad_y: vec![1.0; 2], lin_y: vec![0.0; 2], lin_z: vec![0.0; 4], constant: 0.0 },
        shifted: vec![],
        mccormick: compact_opf::reform::mccormick_rows(&l, &u).unwrap(),
        lower: l,
        upper: u,
        vmin_sq: opf.vmin_sq.clone(),
        vmax_sq: opf.vmax_sq.clone(),
        y_lo: vec![-1.0; 2],
        y_hi: vec![1.0; 2],
    };
    let sol = solve_convex(&rel, &NodeTols::default()).unwrap();
    assert_eq!(sol.status, NodeStatus::Optimal);
    assert!(sol.value.abs() < 1e-7, "{}", sol.value);
    assert!(sol.y.iter().all(|v| v.abs() < 1e-4));
}

fn sampled_feasible(n: usize, seed: u64) -> Vec<common::OraclePoint> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        out.extend(common::two_bus_points(rng.gen_range(0.95..0.955)));
    }
    out.truncate(n);
    out
}

#[test]
fn node_value_is_a_lower_bound() {
    let (_, opf) = common::load("caseWB2");
    let tpl = template(&opf);
    let pts = sampled_feasible(20, 17);
    let (l, u) = root_bounds(&opf);
    // the root box and a sub-box around the sampled points
    let mut l2 = l.clone();
    let mut u2 = u.clone();
    l2[0] = 0.9;
    u2[1] = 0.5;
    u2[3] = -0.5;
    for (lo, hi) in [(l, u), (l2, u2)] {
        let rel = tpl.at(&opf, &lo, &hi).unwrap();
        let sol = solve_convex(&rel, &NodeTols::default()).unwrap();
        assert_eq!(sol.status, NodeStatus::Optimal);
        let scale = 1.0f64.max(sol.value.abs());
        for p in &pts {
            assert!((0..4).all(|i| p.x[i] >= lo[i] && p.x[i] <= hi[i]));
            let z: Vec<f64> = p.x.iter().map(|v| v * v).collect();
            let h = rel.objective.eval(&p.x, &p.y, &z);
            assert!(h >= sol.value - 1e-6 * scale, "{h} < {}", sol.value);
        }
    }
}

#[test]
fn repeated_solves_agree() {
    let (_, opf) = common::load("case6ww");
    let (l, u) = root_bounds(&opf);
    let rel = template(&opf).at(&opf, &l, &u).unwrap();
    let a = solve_convex(&rel, &NodeTols::default()).unwrap();
    let b = solve_convex(&rel, &NodeTols::default()).unwrap();
    assert!((a.value - b.value).abs() <= 1e-9);
}

#[test]
fn shrinking_boxes_never_lower_the_value() {
    let (_, opf) = common::load("caseWB2");
    let tpl = template(&opf);
    let best = &common::two_bus_search()[0];
    let (mut l, mut u) = root_bounds(&opf);
    let mut last = f64::NEG_INFINITY;
    for _ in 0..8 {
        let sol = solve_convex(&tpl.at(&opf, &l, &u).unwrap(), &NodeTols::default()).unwrap();
        assert_eq!(sol.status, NodeStatus::Optimal);
        assert!(sol.value >= last - 1e-7 * sol.value.abs(), "{} after {last}", sol.value);
        assert!(sol.value <= best.cost + 1e-6 * best.cost);
        last = sol.value;
        for i in 0..4 {
            l[i] = 0.5 * (l[i] + best.x[i]);
            u[i] = 0.5 * (u[i] + best.x[i]);
        }
    }
    // the tightest box is close to the optimum itself
    assert!(last > 900.0, "{last}");
}

#[test]
fn empty_box_is_infeasible() {
    let (_, opf) = common::load("caseWB2");
    let (mut l, mut u) = root_bounds(&opf);
    // bus-2 voltage pinned far below its magnitude limit
    l[1] = 0.0;
    u[1] = 0.1;
    l[3] = 0.0;
    u[3] = 0.1;
    let rel = build_relaxation(&opf, &ReformParams::zero(&opf).unwrap(), &l, &u, 1e-7).unwrap();
    let sol = solve_convex(&rel, &NodeTols::default()).unwrap();
    assert_eq!(sol.status, NodeStatus::Infeasible);
    assert!(sol.value.is_infinite());
}

#[test]
fn collapsed_box_off_the_network_equations() {
    let (_, opf) = common::load("caseWB2");
    let x = [0.95, 1.0, 0.0, 0.0];
    let rel = template(&opf).at(&opf, &x, &x).unwrap();
    let sol = solve_convex(&rel, &NodeTols::default()).unwrap();
    assert_eq!(sol.status, NodeStatus::Infeasible);
}
