//! The quadratic balance rows against complex power injections computed
//! independently from the raw branch data, and a Newton power flow on top.

mod common;

use common::{injections, ybus, C, SMALL_CASES};
use compact_opf::network::Point;
use rand::{Rng, SeedableRng};

#[test]
fn balance_rows_match_complex_injections() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for name in SMALL_CASES {
        let raw = common::raw(name);
        let (_, opf) = common::load(name);
        let y = ybus(&raw);
        let n = opf.n;
        for _ in 0..50 {
            let v: Vec<C> = (0..n).map(|_| C(rng.gen_range(-1.1..1.1), rng.gen_range(-1.1..1.1))).collect();
            let s = injections(&y, &v);
            let x: Vec<f64> = v.iter().map(|c| c.0).chain(v.iter().map(|c| c.1)).collect();
            for i in 0..n {
                let p = opf.constraints[i].a.quad(&x);
                let q = opf.constraints[i + n].a.quad(&x);
                assert!((p - s[i].0).abs() < 1e-9 * (1.0 + p.abs()), "{name} bus {i}: P {p} vs {}", s[i].0);
                assert!((q - s[i].1).abs() < 1e-9 * (1.0 + q.abs()), "{name} bus {i}: Q {q} vs {}", s[i].1);
            }
        }
    }
}

#[test]
fn demand_enters_with_negative_sign() {
    for name in SMALL_CASES {
        let raw = common::raw(name);
        let (net, opf) = common::load(name);
        let n = opf.n;
        // zero voltages and injections leave exactly the demand
        let pt = Point { x: vec![0.0; 2 * n], y: vec![0.0; 2 * opf.m] };
        let res = opf.residual(&pt).unwrap();
        for (i, b) in raw.bus.iter().enumerate() {
            assert!((res[i] - b[2] / net.base_mva).abs() < 1e-12, "{name} P demand bus {i}");
            assert!((res[i + n] - b[3] / net.base_mva).abs() < 1e-12, "{name} Q demand bus {i}");
        }
    }
}

/// Solves the load-bus equations of a case by Newton's method with the
/// generator buses held at fixed voltages, then checks that the model
/// reproduces the implied generator injections.
#[test]
fn newton_power_flow_point_is_feasible() {
    let name = "case6ww";
    let raw = common::raw(name);
    let (net, opf) = common::load(name);
    let y = ybus(&raw);
    let n = opf.n;
    let base = net.base_mva;
    let gen_bus: Vec<usize> = net.generator_buses();
    let load: Vec<usize> = (0..n).filter(|i| !gen_bus.contains(i)).collect();
    let mut v: Vec<C> = (0..n).map(|i| C(raw.bus[i][7], 0.0)).collect();
    for (k, &b) in gen_bus.iter().enumerate() {
        v[b] = C::polar(1.05, -2.0 * k as f64);
    }
    // unknowns: (e, f) of each load bus; equations: P and Q balance there
    for _ in 0..30 {
        let s = injections(&y, &v);
        let f: Vec<f64> = load.iter().flat_map(|&i| [s[i].0 + raw.bus[i][2] / base, s[i].1 + raw.bus[i][3] / base]).collect();
        if f.iter().all(|r| r.abs() < 1e-13) {
            break;
        }
        let m = f.len();
        let mut jac = nalgebra::DMatrix::zeros(m, m);
        let h = 1e-7;
        for (c, &bus) in load.iter().enumerate() {
            for part in 0..2 {
                let mut vp = v.clone();
                if part == 0 { vp[bus].0 += h } else { vp[bus].1 += h }
                let sp = injections(&y, &vp);
                for (r, &i) in load.iter().enumerate() {
                    jac[(2 * r, 2 * c + part)] = (sp[i].0 - s[i].0) / h;
                    jac[(2 * r + 1, 2 * c + part)] = (sp[i].1 - s[i].1) / h;
                }
            }
        }
        let dx = jac.lu().solve(&nalgebra::DVector::from_vec(f)).unwrap();
        for (c, &bus) in load.iter().enumerate() {
            v[bus].0 -= dx[2 * c];
            v[bus].1 -= dx[2 * c + 1];
        }
    }
    let s = injections(&y, &v);
    // generator injections: one unit per generator bus in this case
    let mut yv = vec![0.0; 2 * opf.m];
    for (j, u) in net.units.iter().enumerate() {
        yv[j] = s[u.bus].0 + raw.bus[u.bus][2] / base;
        yv[opf.m + j] = s[u.bus].1 + raw.bus[u.bus][3] / base;
    }
    let x: Vec<f64> = v.iter().map(|c| c.0).chain(v.iter().map(|c| c.1)).collect();
    let res = opf.residual(&Point { x, y: yv }).unwrap();
    let worst = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    assert!(worst < 1e-9, "power-flow point residual {worst}");
}
