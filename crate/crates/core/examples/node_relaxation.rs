//! Follow one path down the branch-and-bound tree: each child box is solved
//! again and its bound can only go up.

use compact_opf::bnb::{branch, select_branch_variable, BnbNode};
use compact_opf::matpower::{read_case, to_per_unit};
use compact_opf::network::assemble_opf;
use compact_opf::qcqp::{solve_convex, NodeStatus, NodeTols};
use compact_opf::reform::{root_bounds, ReformParams, ReformTemplate};
use compact_opf::sdp::{build_rank_relaxation, solve_sdp, SdpSettings};

mod common;

fn main() -> compact_opf::Result<()> {
    let opf = assemble_opf(&to_per_unit(&read_case(common::case_path("caseWB2"))?)?)?;
    let sdp = solve_sdp(&build_rank_relaxation(&opf), &SdpSettings::default())?;
    let template = ReformTemplate::new(&opf, &ReformParams::from_sdp(&opf, &sdp)?, 1e-7)?;
    let (lower, upper) = root_bounds(&opf);
    let mut node = BnbNode { lower, upper, bound: f64::NEG_INFINITY, depth: 0 };
    for _ in 0..12 {
        let sol = solve_convex(&template.at(&opf, &node.lower, &node.upper)?, &NodeTols::default())?;
        if sol.status != NodeStatus::Optimal {
            println!("depth {}: {:?}", node.depth, sol.status);
            break;
        }
        node.bound = node.bound.max(sol.value);
        let Some(i) = select_branch_variable(&sol, &node, 1e-6) else {
            println!("depth {}: bound {:.4}, z = x² holds", node.depth, node.bound);
            break;
        };
        println!("depth {}: bound {:.4}, split x{i} = {:+.4} in [{:+.4}, {:+.4}]", node.depth, node.bound, sol.x[i], node.lower[i], node.upper[i]);
        // keep the child with the smaller bound
        let (l, r) = branch(&node, i, sol.x[i])?;
        let value = |n: &BnbNode| -> compact_opf::Result<f64> {
            let s = solve_convex(&template.at(&opf, &n.lower, &n.upper)?, &NodeTols::default())?;
            Ok(if s.status == NodeStatus::Optimal { s.value } else { f64::INFINITY })
        };
        node = if value(&l)? <= value(&r)? { l } else { r };
    }
    Ok(())
}
