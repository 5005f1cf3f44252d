mod common;

use compact_opf::matpower::{emit, parse_case, to_per_unit, RawCase};
use proptest::prelude::*;

#[test]
fn case14_counts() {
    let raw = common::raw("pglib_opf_case14_ieee");
    assert_eq!((raw.bus.len(), raw.gen.len(), raw.branch.len()), (14, 5, 20));
}

#[test]
fn single_bus_no_branches() {
    let text = "function mpc = one\nmpc.baseMVA = 100;\nmpc.bus = [\n1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;\n];\nmpc.gen = [\n1 0 0 100 -100 1 100 1 200 0;\n];\nmpc.branch = [\n];\nmpc.gencost = [\n2 0 0 3 0.01 1 0;\n];\n";
    let raw = parse_case(text).unwrap();
    assert_eq!(raw.bus.len(), 1);
    assert_eq!(raw.branch.len(), 0);
    let net = to_per_unit(&raw).unwrap();
    assert_eq!(net.n_bus(), 1);
    assert!(net.branches.is_empty());
}

/// Field values typed in by hand from the two-bus fixture.
#[test]
fn two_bus_fixture_field_for_field() {
    let raw = common::raw("caseWB2");
    let expect = RawCase {
        name: "caseWB2".into(),
        base_mva: 100.0,
        bus: vec![
            vec![1., 3., 0., 0., 0., 0., 1., 0.964, 0., 345., 1., 1.05, 0.95],
            vec![2., 1., 350., -350., 0., 0., 1., 0.86, -8.84, 345., 1., 1.022, 0.95],
        ],
        gen: vec![vec![1., 0., 0., 400., -400., 0.964, 100., 1., 600., 0.]],
        branch: vec![vec![1., 2., 0.04, 0.2, 0., 990000., 0., 0., 0., 0., 1., -360., 360.]],
        gencost: vec![vec![2., 0., 0., 3., 0., 2., 0.]],
    };
    assert_eq!(raw, expect);
}

#[test]
fn per_unit_examples() {
    let raw = common::raw("case6ww");
    let net = to_per_unit(&raw).unwrap();
    for (b, row) in net.buses.iter().zip(&raw.bus) {
        assert!((b.pd - row[2] / 100.0).abs() < 1e-15);
    }
    let (_, opf) = common::load("case6ww");
    let gens = net.generator_buses();
    assert_eq!(gens.len(), 3);
    assert_eq!(net.n_bus() - gens.len(), 3);

    // 50 MW on a 100 MVA base, squared magnitude limits
    let mut raw = common::raw("caseWB2");
    raw.bus[1][2] = 50.0;
    raw.bus[1][11] = 1.06;
    raw.bus[1][12] = 0.94;
    let net = to_per_unit(&raw).unwrap();
    let opf2 = compact_opf::network::assemble_opf(&net).unwrap();
    assert_eq!(net.buses[1].pd, 0.5);
    assert!((opf2.vmin_sq[1] - 0.8836).abs() < 1e-15);
    assert!((opf2.vmax_sq[1] - 1.1236).abs() < 1e-15);
    assert_eq!(opf.n, 6);
}

#[test]
fn fixtures_round_trip_through_emit() {
    for name in common::SMALL_CASES {
        let raw = common::raw(name);
        let again = parse_case(&emit(&raw)).unwrap();
        assert_eq!(again, raw, "{name}");
        assert_eq!(parse_case(&emit(&again)).unwrap(), again, "{name}");
    }
}

#[test]
fn per_unit_is_invertible() {
    for name in common::SMALL_CASES {
        let raw = common::raw(name);
        let net = to_per_unit(&raw).unwrap();
        let back = net.to_raw();
        let live: Vec<&Vec<f64>> = raw.gen.iter().filter(|g| g[7] > 0.0).collect();
        for (a, b) in raw.bus.iter().zip(&back.bus) {
            for c in [2, 3, 4, 5] {
                assert!((a[c] - b[c]).abs() <= 1e-12 * a[c].abs().max(1.0), "{name} bus col {c}");
            }
        }
        for (a, b) in live.iter().zip(&back.gen) {
            for c in [3, 4, 8, 9] {
                assert!((a[c] - b[c]).abs() <= 1e-12 * a[c].abs().max(1.0), "{name} gen col {c}");
            }
        }
    }
}

#[test]
fn generator_and_load_buses_partition() {
    for name in common::SMALL_CASES {
        let net = to_per_unit(&common::raw(name)).unwrap();
        let gens = net.generator_buses();
        let loads: Vec<usize> = (0..net.n_bus()).filter(|i| !gens.contains(i)).collect();
        let mut all: Vec<usize> = gens.iter().chain(&loads).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..net.n_bus()).collect::<Vec<_>>(), "{name}");
    }
}

fn arb_case() -> impl Strategy<Value = RawCase> {
    let num = || prop_oneof![(-1000i32..1000).prop_map(|v| v as f64), (-1e4f64..1e4), Just(0.0), (1e-9f64..1e-3)];
    (1usize..6, 0usize..4, 0usize..6, 1.0f64..1000.0).prop_flat_map(move |(nb, ng, nl, base)| {
        (
            prop::collection::vec(prop::collection::vec(num(), 13), nb),
            prop::collection::vec(prop::collection::vec(num(), 10), ng),
            prop::collection::vec(prop::collection::vec(num(), 13), nl),
            prop::collection::vec(prop::collection::vec(num(), 7), ng),
            Just(base),
        )
            .prop_map(|(bus, gen, branch, gencost, base_mva)| RawCase { name: "rand".into(), base_mva, bus, gen, branch, gencost })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn emit_parse_is_idempotent(case in arb_case()) {
        let once = parse_case(&emit(&case)).unwrap();
        prop_assert_eq!(&once, &case);
        prop_assert_eq!(parse_case(&emit(&once)).unwrap(), once);
    }
}
