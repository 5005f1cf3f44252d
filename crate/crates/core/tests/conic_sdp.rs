mod common;

use compact_opf::linalg::is_psd;
use compact_opf::matpower::to_per_unit;
use compact_opf::network::{assemble_opf, OpfQcqp};
use compact_opf::sdp::{build_rank_relaxation, certify, dual_matrix, dual_objective, root_gap, solve_sdp, voltage_block, SdpSettings, SdpSolution};
use proptest::prelude::*;

fn solve(opf: &OpfQcqp) -> SdpSolution {
    solve_sdp(&build_rank_relaxation(opf), &SdpSettings::default()).unwrap()
}

#[test]
fn block_dimensions() {
    for (name, nx, arrow) in [("caseWB2", 4, 3), ("pglib_opf_case14_ieee", 28, 11)] {
        let (_, opf) = common::load(name);
        let sol = solve(&opf);
        assert_eq!(sol.x.dim(), nx);
        assert_eq!(dual_matrix(&opf, &sol).dim() - nx, arrow);
    }
}

#[test]
fn primal_objective_is_cost_of_relaxed_injections() {
    let (_, opf) = common::load("pglib_opf_case5_pjm");
    let sol = solve(&opf);
    let mut v = opf.cost_const;
    for j in 0..opf.m {
        v += opf.cost_quad[j] * sol.y_sq[j] + opf.cost_lin[j] * sol.y[j];
        if opf.cost_quad[j] > 0.0 {
            assert!(sol.y_sq[j] >= sol.y[j] * sol.y[j] - 1e-7);
        }
    }
    assert!((v - sol.primal_value).abs() <= 1e-6 * (1.0 + v.abs()));
}

#[test]
fn three_bus_value() {
    let (_, opf) = common::load("pglib_opf_case3_lmbd");
    let sol = solve(&opf);
    assert!(((sol.primal_value - 5694.5249) / 5694.5249).abs() <= 1e-4);
}

#[test]
fn zero_demand_costs_nothing() {
    let mut raw = common::raw("pglib_opf_case5_pjm");
    for b in raw.bus.iter_mut() {
        b[2] = 0.0;
        b[3] = 0.0;
        b[4] = 0.0;
        b[5] = 0.0;
    }
    for g in raw.gen.iter_mut() {
        g[9] = 0.0;
    }
    for c in raw.gencost.iter_mut() {
        *c.last_mut().unwrap() = 0.0;
    }
    let opf = assemble_opf(&to_per_unit(&raw).unwrap()).unwrap();
    let sol = solve(&opf);
    // cost of running every unit at its upper limit sets the scale
    let range: f64 = (0..opf.m).map(|j| opf.cost_quad[j] * opf.y_hi[j].powi(2) + opf.cost_lin[j] * opf.y_hi[j]).sum();
    assert!(sol.primal_value.abs() <= 1e-6 * (1.0 + range), "{} vs scale {range}", sol.primal_value);
    assert!(sol.dual_value <= sol.primal_value + 1e-12);
    assert!(sol.y[..opf.m].iter().all(|p| p.abs() < 1e-5));
}

#[test]
fn gap_formula_examples() {
    assert_eq!(root_gap(10.0, 10.0).unwrap(), 0.0);
    assert!((root_gap(10.0, 5.0).unwrap() - 50.0).abs() < 1e-12);
    assert!(root_gap(0.0, 1.0).is_err());
    let (_, opf) = common::load("caseWB2");
    let sol = solve(&opf);
    let gap = root_gap(905.67, sol.primal_value).unwrap();
    assert!((gap - 1.947).abs() <= 0.1, "gap {gap}");
}

#[test]
fn certificates_on_fixtures() {
    for name in common::SMALL_CASES {
        let (_, opf) = common::load(name);
        let sol = solve(&opf);
        let cert = certify(&opf, &sol, 1e-7).unwrap();
        assert!(sol.certified() && cert.passes(1e-6, 1e-7), "{name}: {cert:?}");
        // weak duality from the returned multipliers
        let d = dual_objective(&opf, &sol);
        assert!(d <= sol.primal_value + 1e-7 * (1.0 + sol.primal_value.abs()), "{name}");
        // the block consumed by the reformulation
        assert!(is_psd(&voltage_block(&opf, &sol.phi, &sol.gamma_net()), 1e-7), "{name}");
        for v in sol.gamma_up.iter().chain(&sol.gamma_lo).chain(&sol.theta_up).chain(&sol.theta_lo) {
            assert!(*v >= 0.0, "{name}: negative sign-constrained multiplier {v}");
        }
    }
}

#[test]
fn duals_scale_with_costs() {
    for name in ["pglib_opf_case3_lmbd", "case6ww"] {
        let (_, opf) = common::load(name);
        let mut scaled = opf.clone();
        for v in scaled.cost_quad.iter_mut().chain(scaled.cost_lin.iter_mut()) {
            *v *= 10.0;
        }
        scaled.cost_const *= 10.0;
        let a = solve(&opf);
        let b = solve(&scaled);
        let xa = a.x.as_matrix();
        let xb = b.x.as_matrix();
        assert!((xa - xb).amax() < 1e-5, "{name}: X moved by {}", (xa - xb).amax());
        for j in 0..opf.dim_y() {
            assert!((a.y[j] - b.y[j]).abs() < 1e-5, "{name}: y[{j}] {} vs {}", a.y[j], b.y[j]);
        }
        let scale = a.phi.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for r in 0..a.phi.len() {
            assert!((10.0 * a.phi[r] - b.phi[r]).abs() < 1e-4 * scale * 10.0, "{name}: phi[{r}]");
        }
        let (ga, gb) = (a.gamma_net(), b.gamma_net());
        for i in 0..ga.len() {
            assert!((10.0 * ga[i] - gb[i]).abs() < 1e-4 * scale * 10.0, "{name}: gamma[{i}]");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn perturbed_loads_keep_certificate(load in 0.7f64..1.1, name in prop::sample::select(vec!["caseWB2", "pglib_opf_case3_lmbd", "pglib_opf_case5_pjm"])) {
        let mut raw = common::raw(name);
        for b in raw.bus.iter_mut() {
            b[2] *= load;
            b[3] *= load;
        }
        let opf = assemble_opf(&to_per_unit(&raw).unwrap()).unwrap();
        let sol = solve(&opf);
        let cert = certify(&opf, &sol, 1e-7).unwrap();
        prop_assert!(cert.min_eig_x >= -1e-7, "X not PSD: {}", cert.min_eig_x);
        prop_assert!(dual_objective(&opf, &sol) <= sol.primal_value + 1e-6 * (1.0 + sol.primal_value.abs()));
        prop_assert!(cert.w_psd);
    }
}
