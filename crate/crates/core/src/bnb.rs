//! Spatial branch-and-bound on `z_i = x_i²`.
//!
//! The SDP is solved once and its multipliers fix the compact relaxation for
//! the whole tree; nodes only differ in their `[ℓ, u]` boxes. Search is
//! best-first over a shared queue served by a pool of worker threads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::local::{local_feasible, rotate_to_reference, LocalSettings};
use crate::network::{OpfQcqp, Point};
use crate::qcqp::{solve_convex, NodeSolution, NodeStatus, NodeTols};
use crate::reform::{root_bounds, ReformParams, ReformTemplate};
use crate::sdp::{build_rank_relaxation, solve_sdp, SdpSettings, SdpSolution};

#[derive(Clone, Debug)]
pub struct Config {
    pub rel_gap: f64,
    pub node_limit: usize,
    pub time_limit: Duration,
    /// Clamp `f` at the reference bus to zero.
    pub fix_reference: bool,
    pub workers: usize,
    /// Largest `z_i − x_i²` treated as satisfied.
    pub force_tol: f64,
    /// Run the local solver on every this-many-th node.
    pub incumbent_every: usize,
    pub log_interval: usize,
    pub psd_tol: f64,
    pub sdp: SdpSettings,
    pub node: NodeTols,
    pub local: LocalSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            rel_gap: 1e-4,
            node_limit: 100_000,
            time_limit: Duration::from_secs(3 * 3600),
            fix_reference: true,
            workers: 1,
            force_tol: 1e-6,
            incumbent_every: 50,
            log_interval: 1000,
            psd_tol: 1e-7,
            sdp: SdpSettings::default(),
            node: NodeTols::default(),
            local: LocalSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnbNode {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Bound inherited from the parent, raised by this node's own solve.
    pub bound: f64,
    pub depth: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    GapClosed,
    NodeLimit,
    TimeLimit,
    /// Queue emptied without meeting the gap target.
    Exhausted,
    /// Every node was proven infeasible.
    Infeasible,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GapClosed => "gap_closed",
            Self::NodeLimit => "node_limit",
            Self::TimeLimit => "time_limit",
            Self::Exhausted => "exhausted",
            Self::Infeasible => "infeasible",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::GapClosed, Self::NodeLimit, Self::TimeLimit, Self::Exhausted, Self::Infeasible].into_iter().find(|t| t.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeRecord {
    pub id: usize,
    pub depth: usize,
    pub bound: f64,
    pub status: NodeStatus,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timings {
    pub sdp_seconds: f64,
    pub ub_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct GlobalResult {
    pub incumbent: Option<Point>,
    pub incumbent_z: Option<Vec<f64>>,
    pub ub: f64,
    pub lb: f64,
    pub sdp_value: f64,
    pub root_value: f64,
    /// Nodes solved below the root.
    pub nodes: usize,
    pub termination: Termination,
    pub timings: Timings,
    pub node_log: Vec<NodeRecord>,
    pub lb_history: Vec<f64>,
    pub ub_history: Vec<f64>,
}

impl GlobalResult {
    pub fn gap(&self) -> f64 {
        relative_gap(self.ub, self.lb)
    }
}

/// `(UB − LB) / max(1, |UB|)`.
pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    if !ub.is_finite() {
        return f64::INFINITY;
    }
    ((ub - lb) / ub.abs().max(1.0)).max(0.0)
}

/// Index of the largest `z_i − x_i²` above `force_tol` among coordinates with
/// a non-degenerate interval; ties go to the lowest index.
pub fn select_branch_variable(sol: &NodeSolution, node: &BnbNode, force_tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in sol.square_violation().into_iter().enumerate() {
        if node.upper[i] <= node.lower[i] || v <= force_tol {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Splits `node` on coordinate `i` at `point`, clamped to the middle 80% of the interval.
pub fn branch(node: &BnbNode, i: usize, point: f64) -> Result<(BnbNode, BnbNode)> {
    let (l, u) = (node.lower[i], node.upper[i]);
    if !(l < u) {
        return Err(Error::Branch(format!("degenerate interval [{l}, {u}] on x_{i}")));
    }
    let w = u - l;
    let p = point.clamp(l + 0.1 * w, u - 0.1 * w);
    let mut left = node.clone();
    left.upper[i] = p;
    left.depth += 1;
    let mut right = node.clone();
    right.lower[i] = p;
    right.depth += 1;
    Ok((left, right))
}

struct Queued {
    node: BnbNode,
    id: usize,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    // reversed so that the max-heap yields the lowest bound, then the oldest id
    fn cmp(&self, o: &Self) -> Ordering {
        o.node.bound.total_cmp(&self.node.bound).then(o.id.cmp(&self.id))
    }
}

struct State {
    heap: BinaryHeap<Queued>,
    in_flight: Vec<f64>,
    next_id: usize,
    processed: usize,
    closed_lb: f64,
    ub: f64,
    incumbent: Option<Point>,
    node_log: Vec<NodeRecord>,
    lb_history: Vec<f64>,
    ub_history: Vec<f64>,
    ub_seconds: f64,
    done: Option<Termination>,
    /// Nodes whose solve failed twice; they keep their parent's bound.
    failed: usize,
}

impl State {
    fn lb(&self) -> f64 {
        let mut lb = self.closed_lb;
        if let Some(top) = self.heap.peek() {
            lb = lb.min(top.node.bound);
        }
        for &b in &self.in_flight {
            lb = lb.min(b);
        }
        lb.min(self.ub)
    }

    fn prune_threshold(&self, rel_gap: f64) -> f64 {
        self.ub - rel_gap * self.ub.abs().max(1.0)
    }

    fn push(&mut self, node: BnbNode) {
        let id = self.next_id;
        self.next_id += 1;
        self.heap.push(Queued { node, id });
    }

    fn offer(&mut self, opf: &OpfQcqp, pt: Point) -> bool {
        let v = opf.objective(&pt.y);
        if v < self.ub {
            self.ub = v;
            self.incumbent = Some(pt);
            self.ub_history.push(v);
            true
        } else {
            false
        }
    }
}

struct Shared<'a> {
    opf: &'a OpfQcqp,
    template: ReformTemplate,
    cfg: &'a Config,
    start: Instant,
    state: Mutex<State>,
    cv: Condvar,
}

impl Shared<'_> {
    fn solve_node(&self, node: &BnbNode) -> Result<NodeSolution> {
        let rel = self.template.at(self.opf, &node.lower, &node.upper)?;
        let sol = solve_convex(&rel, &self.cfg.node)?;
        if sol.status != NodeStatus::MaxIter {
            return Ok(sol);
        }
        log::debug!("node at depth {} hit the iteration cap, retrying with relaxed tolerances", node.depth);
        solve_convex(&rel, &self.cfg.node.relaxed())
    }

    fn try_local(&self, start: &Point) -> Option<Point> {
        let t = Instant::now();
        let res = local_feasible(self.opf, start, &self.cfg.local);
        let dt = t.elapsed().as_secs_f64();
        self.state.lock().unwrap().ub_seconds += dt;
        match res {
            Ok(p) => Some(p),
            Err(e) => {
                log::trace!("local search failed: {e}");
                None
            }
        }
    }

    fn check_gap(&self, st: &mut State) {
        if st.done.is_none() && st.ub.is_finite() && relative_gap(st.ub, st.lb()) <= self.cfg.rel_gap {
            st.done = Some(Termination::GapClosed);
        }
    }

    fn worker(&self) -> Result<()> {
        loop {
            let (node, count) = {
                let mut st = self.state.lock().unwrap();
                loop {
                    if st.done.is_some() {
                        return Ok(());
                    }
                    if st.heap.is_empty() && st.in_flight.is_empty() {
                        let lb = st.lb();
                        st.done = Some(if st.ub.is_finite() && relative_gap(st.ub, lb) <= self.cfg.rel_gap {
                            Termination::GapClosed
                        } else if st.ub.is_finite() || lb.is_finite() {
                            Termination::Exhausted
                        } else {
                            Termination::Infeasible
                        });
                        self.cv.notify_all();
                        return Ok(());
                    }
                    if !st.heap.is_empty() {
                        break;
                    }
                    st = self.cv.wait(st).unwrap();
                }
                let q = st.heap.pop().expect("heap checked non-empty");
                if q.node.bound >= st.prune_threshold(self.cfg.rel_gap) {
                    st.closed_lb = st.closed_lb.min(q.node.bound);
                    continue;
                }
                if st.processed >= self.cfg.node_limit {
                    st.heap.push(q);
                    st.done = Some(Termination::NodeLimit);
                    self.cv.notify_all();
                    return Ok(());
                }
                if self.start.elapsed() >= self.cfg.time_limit {
                    st.heap.push(q);
                    st.done = Some(Termination::TimeLimit);
                    self.cv.notify_all();
                    return Ok(());
                }
                st.processed += 1;
                st.in_flight.push(q.node.bound);
                (q.node, st.processed)
            };

            let outcome = self.process(&node, count);

            let mut st = self.state.lock().unwrap();
            if let Some(k) = st.in_flight.iter().position(|&b| b == node.bound) {
                st.in_flight.swap_remove(k);
            }
            let (record, children, fathomed_bound) = match outcome {
                Ok(v) => v,
                Err(e) => {
                    st.done = Some(Termination::Exhausted);
                    self.cv.notify_all();
                    return Err(e);
                }
            };
            st.node_log.push(NodeRecord { id: count, ..record });
            if let Some(b) = fathomed_bound {
                st.closed_lb = st.closed_lb.min(b);
            }
            for (child, point) in children {
                if let Some(pt) = point {
                    st.offer(self.opf, pt);
                }
                if let Some(c) = child {
                    st.push(c);
                }
            }
            let lb = st.lb();
            if st.lb_history.last().is_none_or(|&l| lb > l) {
                st.lb_history.push(lb);
            }
            self.check_gap(&mut st);
            if self.cfg.log_interval > 0 && count % self.cfg.log_interval == 0 {
                log::info!("nodes {count} lb {lb:.6} ub {:.6} gap {:.3e} queue {}", st.ub, relative_gap(st.ub, lb), st.heap.len());
            }
            self.cv.notify_all();
        }
    }

    /// Solves one node and returns its log record, the children to queue
    /// (each paired with an optional incumbent) and the bound to close with.
    #[allow(clippy::type_complexity)]
    fn process(&self, node: &BnbNode, count: usize) -> Result<(NodeRecord, Vec<(Option<BnbNode>, Option<Point>)>, Option<f64>)> {
        let sol = self.solve_node(node)?;
        let bound = match sol.status {
            NodeStatus::Optimal => node.bound.max(sol.value),
            _ => node.bound,
        };
        let record = NodeRecord { id: count, depth: node.depth, bound, status: sol.status };
        if sol.status == NodeStatus::Infeasible {
            return Ok((record, vec![], None));
        }
        let mut out = Vec::new();
        let start = Point { x: sol.x.clone(), y: sol.y.clone() };
        let periodic = self.cfg.incumbent_every > 0 && count.is_multiple_of(self.cfg.incumbent_every);

        if sol.status == NodeStatus::MaxIter {
            // bound inherited; split the widest interval at its midpoint
            log::warn!("node solve failed at depth {}; keeping parent bound {bound}", node.depth);
            self.state.lock().unwrap().failed += 1;
            let i = (0..node.lower.len())
                .max_by(|&a, &b| (node.upper[a] - node.lower[a]).total_cmp(&(node.upper[b] - node.lower[b])))
                .filter(|&i| node.upper[i] > node.lower[i]);
            let Some(i) = i else {
                return Err(Error::Solver("node relaxation failed on a fully collapsed box".into()));
            };
            let (l, r) = branch(node, i, 0.5 * (node.lower[i] + node.upper[i]))?;
            return Ok((record, vec![(Some(BnbNode { bound, ..l }), None), (Some(BnbNode { bound, ..r }), None)], None));
        }

        let threshold = self.state.lock().unwrap().prune_threshold(self.cfg.rel_gap);
        match select_branch_variable(&sol, node, self.cfg.force_tol) {
            None => {
                let pt = self.try_local(&start);
                out.push((None, pt));
                Ok((record, out, Some(bound)))
            }
            Some(_) if bound >= threshold => Ok((record, out, Some(bound))),
            Some(i) => {
                let pt = if periodic { self.try_local(&start) } else { None };
                log::trace!("node {count} depth {} bound {bound:.6} branches on x{i} = {:.6}", node.depth, sol.x[i]);
                let (l, r) = branch(node, i, sol.x[i])?;
                out.push((Some(BnbNode { bound, ..l }), pt));
                out.push((Some(BnbNode { bound, ..r }), None));
                Ok((record, out, None))
            }
        }
    }
}

/// Unit voltages at zero angle, injections at the middle of their boxes.
fn flat_start(opf: &OpfQcqp) -> Point {
    let mid = |lo: f64, hi: f64| if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else if lo.is_finite() { lo } else if hi.is_finite() { hi } else { 0.0 };
    let mut x = vec![0.0; 2 * opf.n];
    for (i, v) in x.iter_mut().take(opf.n).enumerate() {
        *v = 0.5 * (opf.vmin_sq[i].sqrt() + opf.vmax_sq[i].sqrt());
    }
    let y = opf.y_lo.iter().zip(&opf.y_hi).map(|(&l, &h)| mid(l, h)).collect();
    Point { x, y }
}

/// Runs the whole pipeline: SDP, multipliers, root relaxation, tree search.
pub fn solve_global(opf: &OpfQcqp, cfg: &Config) -> Result<GlobalResult> {
    let start = Instant::now();
    let sdp = solve_sdp(&build_rank_relaxation(opf), &cfg.sdp)?;
    let sdp_seconds = start.elapsed().as_secs_f64();
    let params = ReformParams::from_sdp(opf, &sdp)?;
    solve_with_params(opf, cfg, &params, Some(&sdp), start, sdp_seconds)
}

/// Tree search with fixed multipliers. `sdp` seeds the root incumbent attempt
/// and is reported as the SDP value.
pub fn solve_with_params(opf: &OpfQcqp, cfg: &Config, params: &ReformParams, sdp: Option<&SdpSolution>, start: Instant, sdp_seconds: f64) -> Result<GlobalResult> {
    let template = ReformTemplate::new(opf, params, cfg.psd_tol)?;
    let (mut lower, mut upper) = root_bounds(opf);
    if cfg.fix_reference {
        // f_ref = 0 leaves the rotation by π, removed by e_ref ≥ 0
        lower[opf.n + opf.reference] = 0.0;
        upper[opf.n + opf.reference] = 0.0;
        lower[opf.reference] = 0.0;
    }
    let root = BnbNode { lower, upper, bound: f64::NEG_INFINITY, depth: 0 };
    let shared = Shared {
        opf,
        template,
        cfg,
        start,
        state: Mutex::new(State {
            heap: BinaryHeap::new(),
            in_flight: Vec::new(),
            next_id: 0,
            processed: 0,
            closed_lb: f64::INFINITY,
            ub: f64::INFINITY,
            incumbent: None,
            node_log: Vec::new(),
            lb_history: Vec::new(),
            ub_history: Vec::new(),
            ub_seconds: 0.0,
            done: None,
            failed: 0,
        }),
        cv: Condvar::new(),
    };

    // root: solved here so that the incumbent attempts see its point
    let root_sol = shared.solve_node(&root)?;
    let root_value = match root_sol.status {
        NodeStatus::Optimal => root_sol.value,
        NodeStatus::Infeasible => f64::INFINITY,
        NodeStatus::MaxIter => return Err(Error::Solver("root relaxation did not converge".into())),
    };
    log::info!("root relaxation {root_value:.6}");
    {
        let mut starts = Vec::new();
        if let Some(s) = sdp {
            let mut p = s.rounded()?;
            rotate_to_reference(opf, &mut p.x);
            starts.push(p);
        }
        if root_sol.status == NodeStatus::Optimal {
            starts.push(Point { x: root_sol.x.clone(), y: root_sol.y.clone() });
        }
        starts.push(flat_start(opf));
        for s in starts {
            if let Some(pt) = shared.try_local(&s) {
                shared.state.lock().unwrap().offer(opf, pt);
            }
        }
    }
    {
        let mut st = shared.state.lock().unwrap();
        st.node_log.push(NodeRecord { id: 0, depth: 0, bound: root_value, status: root_sol.status });
        if root_sol.status != NodeStatus::Infeasible {
            let first = root_value.min(st.ub);
            st.lb_history.push(first);
            let threshold = st.prune_threshold(cfg.rel_gap);
            let root_node = BnbNode { bound: root_value, ..root };
            match select_branch_variable(&root_sol, &root_node, cfg.force_tol) {
                _ if root_value >= threshold => st.closed_lb = root_value,
                None => st.closed_lb = root_value,
                Some(i) => {
                    let (l, r) = branch(&root_node, i, root_sol.x[i])?;
                    st.push(l);
                    st.push(r);
                }
            }
        }
        shared.check_gap(&mut st);
    }

    let workers = cfg.workers.max(1);
    let results: Vec<Result<()>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers).map(|_| s.spawn(|| shared.worker())).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::Solver("worker panicked".into())))).collect()
    });
    for r in results {
        r?;
    }

    let st = shared.state.into_inner().unwrap();
    let lb = st.lb();
    let termination = st.done.unwrap_or(Termination::Exhausted);
    if st.failed > 0 {
        log::warn!("{} node solves failed and kept their parent bound", st.failed);
    }
    let incumbent_z = st.incumbent.as_ref().map(|p| p.x.iter().map(|v| v * v).collect());
    Ok(GlobalResult {
        ub: st.ub,
        lb: if st.ub.is_finite() { lb.min(st.ub) } else { lb },
        incumbent: st.incumbent,
        incumbent_z,
        sdp_value: sdp.map_or(f64::NAN, |s| s.dual_value),
        root_value,
        nodes: st.processed,
        termination,
        timings: Timings { sdp_seconds, ub_seconds: st.ub_seconds, total_seconds: start.elapsed().as_secs_f64() },
        node_log: st.node_log,
        lb_history: st.lb_history,
        ub_history: st.ub_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sol(x: Vec<f64>, z: Vec<f64>) -> NodeSolution {
        NodeSolution { status: NodeStatus::Optimal, value: 0.0, x, y: vec![], z, primal_residual: 0.0, dual_residual: 0.0, iterations: 0 }
    }

    fn unit_node(d: usize) -> BnbNode {
        BnbNode { lower: vec![-1.0; d], upper: vec![1.0; d], bound: 0.0, depth: 0 }
    }

    #[test]
    fn selection_rule() {
        let node = unit_node(4);
        assert_eq!(select_branch_variable(&sol(vec![0.0; 4], vec![0.0, 0.3, 0.1, 0.0]), &node, 1e-6), Some(1));
        assert_eq!(select_branch_variable(&sol(vec![0.0; 4], vec![0.0; 4]), &node, 1e-6), None);
        let node = unit_node(2);
        assert_eq!(select_branch_variable(&sol(vec![0.0; 2], vec![0.2, 0.2]), &node, 1e-6), Some(0));
    }

    #[test]
    fn selection_skips_collapsed() {
        let mut node = unit_node(2);
        node.lower[1] = 0.5;
        node.upper[1] = 0.5;
        assert_eq!(select_branch_variable(&sol(vec![0.0; 2], vec![0.1, 0.3]), &node, 1e-6), Some(0));
    }

    #[test]
    fn branching_and_clamp() {
        let node = unit_node(1);
        let (l, r) = branch(&node, 0, 0.0).unwrap();
        assert_eq!((l.lower[0], l.upper[0], r.lower[0], r.upper[0]), (-1.0, 0.0, 0.0, 1.0));
        assert_eq!((l.depth, r.depth), (1, 1));
        let (l, _) = branch(&node, 0, 0.99).unwrap();
        assert!((l.upper[0] - 0.8).abs() < 1e-15);
        let mut flat = unit_node(1);
        flat.lower[0] = 1.0;
        assert!(branch(&flat, 0, 1.0).is_err());
    }

    #[test]
    fn queue_is_best_first() {
        let mut h = BinaryHeap::new();
        for (id, b) in [(0, 3.0), (1, 1.0), (2, 2.0), (3, 1.0)] {
            h.push(Queued { node: BnbNode { bound: b, ..unit_node(1) }, id });
        }
        let order: Vec<usize> = std::iter::from_fn(|| h.pop().map(|q| q.id)).collect();
        assert_eq!(order, vec![1, 3, 2, 0]);
    }

    #[test]
    fn gap_formula() {
        assert_eq!(relative_gap(100.0, 99.0), 0.01);
        assert_eq!(relative_gap(0.5, 0.0), 0.5);
        assert!(relative_gap(f64::INFINITY, 0.0).is_infinite());
    }
}
