//! Revealed-preference relations, the GARP and cyclical-monotonicity
//! checks, and enumeration of GARP-violating cycles.
//!
//! All relations are read off the expenditure matrix with a tolerance
//! band: an inequality within `tol` of equality is treated as a tie, so
//! exact ties in fixture data never flip a strict relation.

use serde::Serialize;

use crate::dataset::{dot, Dataset, ExpenditureMatrix};
use crate::shortest_path::{cycle_weight, label_correct, LabelCorrectOutcome};

/// Default bound on enumerated violating cycles; their number can grow
/// exponentially with T.
pub const DEFAULT_CYCLE_CAP: usize = 100_000;

/// Directed revealed-preference relations between observations.
///
/// `weak[t][s]` holds when bundle `x^s` was affordable at observation `t`
/// (`p^t . x^t >= p^t . x^s` up to `tol`); `strict[t][s]` when it was
/// strictly cheaper. `weights[t][s] = p^t . (x^s - x^t)` is the cost to
/// the arbitrageur of swapping bundle `t` for bundle `s` in period `t`.
#[derive(Debug, Clone)]
pub struct RevealedPreferenceGraph {
    pub weak: Vec<Vec<bool>>,
    pub strict: Vec<Vec<bool>>,
    pub weights: Vec<Vec<f64>>,
    pub tol: f64,
}

impl RevealedPreferenceGraph {
    pub fn len(&self) -> usize {
        self.weak.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weak.is_empty()
    }
}

/// A directed simple cycle of observations, stored in canonical rotation
/// (smallest 1-based index first); the closing edge back to the first node
/// is implicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cycle {
    /// 1-based observation indices in trade order.
    pub nodes: Vec<usize>,
    /// Money extracted by trading around the cycle once.
    #[serde(rename = "mp")]
    pub mp_value: f64,
    #[serde(rename = "strict")]
    pub has_strict_edge: bool,
}

impl Cycle {
    /// Builds a cycle from 0-based nodes, rotating to canonical form and
    /// reading the pump value and strictness off the graph.
    pub(crate) fn from_graph(g: &RevealedPreferenceGraph, nodes_0: &[usize]) -> Cycle {
        let nodes_0 = canonical_rotation(nodes_0);
        let k = nodes_0.len();
        let mp_value = -cycle_weight(&g.weights, &nodes_0);
        let has_strict_edge = (0..k).any(|i| g.strict[nodes_0[i]][nodes_0[(i + 1) % k]]);
        Cycle {
            nodes: nodes_0.iter().map(|&v| v + 1).collect(),
            mp_value,
            has_strict_edge,
        }
    }
}

fn canonical_rotation(nodes: &[usize]) -> Vec<usize> {
    let min_pos = nodes
        .iter()
        .enumerate()
        .min_by_key(|(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut rotated = Vec::with_capacity(nodes.len());
    rotated.extend_from_slice(&nodes[min_pos..]);
    rotated.extend_from_slice(&nodes[..min_pos]);
    rotated
}

/// Recomputes a cycle's pump value straight from the dataset.
///
/// `nodes` are 1-based observation indices; the value is
/// `sum_k p^{t_k} . (x^{t_k} - x^{t_{k+1}})` with the sequence closed.
pub fn money_pump_value(d: &Dataset, nodes: &[usize]) -> f64 {
    let k = nodes.len();
    (0..k)
        .map(|i| {
            let a = nodes[i] - 1;
            let b = nodes[(i + 1) % k] - 1;
            dot(d.price(a), d.bundle(a)) - dot(d.price(a), d.bundle(b))
        })
        .sum()
}

/// Outcome of the GARP test.
#[derive(Debug, Clone, Serialize)]
pub struct GarpResult {
    pub satisfied: bool,
    pub witness: Option<Cycle>,
}

/// Outcome of the cyclical-monotonicity (no money pump) test.
#[derive(Debug, Clone, Serialize)]
pub struct CmResult {
    pub satisfied: bool,
    pub witness: Option<Cycle>,
}

/// GARP-violating cycles found by [`enumerate_garp_violations`], in
/// lexicographic order of their canonical node sequences.
#[derive(Debug, Clone, Serialize)]
pub struct CycleEnumeration {
    pub cycles: Vec<Cycle>,
    /// Set when enumeration stopped at the cap; capped aggregates must not
    /// be presented as exact.
    pub truncated: bool,
}

/// Populates the weak/strict relations and trade weights from the
/// expenditure matrix.
pub fn build_graph(e: &ExpenditureMatrix, tol: f64) -> RevealedPreferenceGraph {
    let n = e.len();
    let mut weak = vec![vec![false; n]; n];
    let mut strict = vec![vec![false; n]; n];
    let mut weights = vec![vec![0.0; n]; n];
    for t in 0..n {
        let own = e.diag(t);
        for s in 0..n {
            weak[t][s] = own >= e.at(t, s) - tol;
            strict[t][s] = t != s && own > e.at(t, s) + tol;
            weights[t][s] = e.at(t, s) - own;
        }
        weak[t][t] = true;
    }
    RevealedPreferenceGraph {
        weak,
        strict,
        weights,
        tol,
    }
}

/// Tests GARP: no directed cycle of weak relations may contain a strict
/// relation.
///
/// Uses the transitive closure of the weak relation; a violation is the
/// pair `(t, s)` with `t` weakly reaching `s` and `strict[s][t]`, from
/// which a witness cycle is reconstructed by breadth-first search.
pub fn check_garp(g: &RevealedPreferenceGraph) -> GarpResult {
    let n = g.len();
    let mut reach: Vec<Vec<bool>> = g.weak.clone();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    for s in 0..n {
        for t in 0..n {
            if s != t && g.strict[s][t] && reach[t][s] {
                // cycle: strict edge s -> t, then a weak path back to s
                let path = weak_path(g, t, s).expect("reachability guarantees a path");
                let mut nodes = vec![s];
                nodes.extend(&path[..path.len() - 1]);
                return GarpResult {
                    satisfied: false,
                    witness: Some(Cycle::from_graph(g, &nodes)),
                };
            }
        }
    }
    GarpResult {
        satisfied: true,
        witness: None,
    }
}

/// Shortest weak-edge path from `from` to `to` (inclusive), by BFS.
fn weak_path(g: &RevealedPreferenceGraph, from: usize, to: usize) -> Option<Vec<usize>> {
    let n = g.len();
    let mut prev = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = vec![false; n];
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut u = to;
            while u != from {
                u = prev[u];
                path.push(u);
            }
            path.reverse();
            return Some(path);
        }
        for w in 0..n {
            if w != v && g.weak[v][w] && !seen[w] {
                seen[w] = true;
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Tests cyclical monotonicity: the complete digraph on observations with
/// edge weights `p^t . (x^s - x^t)` must have no negative cycle.
///
/// Detection is a label-correcting pass from a virtual source with
/// zero-weight edges to every node; a detected cycle is reported with
/// `mp_value` equal to minus its weight.
pub fn check_cyclical_monotonicity(g: &RevealedPreferenceGraph) -> CmResult {
    match label_correct(&g.weights, g.tol) {
        LabelCorrectOutcome::Potentials(_) => CmResult {
            satisfied: true,
            witness: None,
        },
        LabelCorrectOutcome::NegativeCycle { nodes, weight } => {
            let witness = Cycle::from_graph(g, &nodes);
            debug_assert!((witness.mp_value + weight).abs() <= 1e-9 * weight.abs().max(1.0));
            CmResult {
                satisfied: false,
                witness: Some(witness),
            }
        }
    }
}

/// Enumerates simple directed cycles of weak relations containing at
/// least one strict relation, each reported once in canonical rotation.
///
/// Enumeration roots each cycle at its smallest node and explores larger
/// nodes only, with the usual blocked-set bookkeeping; it stops once `cap`
/// violating cycles have been collected and flags the truncation.
pub fn enumerate_garp_violations(g: &RevealedPreferenceGraph, cap: usize) -> CycleEnumeration {
    assert!(cap >= 1, "cap must be positive");
    let n = g.len();
    let mut found: Vec<Cycle> = Vec::new();
    let mut truncated = false;

    'roots: for root in 0..n {
        let mut blocked = vec![false; n];
        let mut block_list: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut stack: Vec<usize> = Vec::new();
        if circuit(
            g,
            root,
            root,
            &mut stack,
            &mut blocked,
            &mut block_list,
            cap,
            &mut found,
        ) == SearchFlow::CapHit
        {
            truncated = true;
            break 'roots;
        }
    }
    found.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    CycleEnumeration {
        cycles: found,
        truncated,
    }
}

#[derive(PartialEq)]
enum SearchFlow {
    FoundCycle,
    NoCycle,
    CapHit,
}

#[allow(clippy::too_many_arguments)]
fn circuit(
    g: &RevealedPreferenceGraph,
    v: usize,
    root: usize,
    stack: &mut Vec<usize>,
    blocked: &mut [bool],
    block_list: &mut [Vec<usize>],
    cap: usize,
    found: &mut Vec<Cycle>,
) -> SearchFlow {
    let n = g.len();
    let mut any_cycle = false;
    stack.push(v);
    blocked[v] = true;

    for w in 0..n {
        if w < root || w == v || !g.weak[v][w] {
            continue;
        }
        if w == root {
            // self-loops never reach here: w == v is skipped above
            if stack.len() >= 2 {
                let cycle = Cycle::from_graph(g, stack);
                if cycle.has_strict_edge {
                    found.push(cycle);
                    if found.len() >= cap {
                        stack.pop();
                        return SearchFlow::CapHit;
                    }
                }
                any_cycle = true;
            }
        } else if !blocked[w] {
            match circuit(g, w, root, stack, blocked, block_list, cap, found) {
                SearchFlow::CapHit => {
                    stack.pop();
                    return SearchFlow::CapHit;
                }
                SearchFlow::FoundCycle => any_cycle = true,
                SearchFlow::NoCycle => {}
            }
        }
    }

    if any_cycle {
        unblock(v, blocked, block_list);
    } else {
        for w in 0..n {
            if w >= root && w != v && g.weak[v][w] && !block_list[w].contains(&v) {
                block_list[w].push(v);
            }
        }
    }
    stack.pop();
    if any_cycle {
        SearchFlow::FoundCycle
    } else {
        SearchFlow::NoCycle
    }
}

fn unblock(v: usize, blocked: &mut [bool], block_list: &mut [Vec<usize>]) {
    let mut queue = vec![v];
    while let Some(u) = queue.pop() {
        blocked[u] = false;
        for w in std::mem::take(&mut block_list[u]) {
            if blocked[w] {
                queue.push(w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{expenditure_matrix, DEFAULT_TOL};
    use crate::fixtures;

    fn graph_of(d: &Dataset) -> RevealedPreferenceGraph {
        build_graph(&expenditure_matrix(d), DEFAULT_TOL)
    }

    /// Independent oracle: every rotation-distinct ordered subset.
    fn bruteforce_violations(g: &RevealedPreferenceGraph) -> Vec<Vec<usize>> {
        let n = g.len();
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut nodes: Vec<usize> = Vec::new();
        fn extend(
            g: &RevealedPreferenceGraph,
            nodes: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
            n: usize,
        ) {
            let first = nodes[0];
            let last = *nodes.last().unwrap();
            if nodes.len() >= 2 && g.weak[last][first] {
                let k = nodes.len();
                let strict = (0..k).any(|i| g.strict[nodes[i]][nodes[(i + 1) % k]]);
                if strict {
                    out.push(nodes.iter().map(|&v| v + 1).collect());
                }
            }
            for w in (first + 1)..n {
                if !nodes.contains(&w) && g.weak[last][w] {
                    nodes.push(w);
                    extend(g, nodes, out, n);
                    nodes.pop();
                }
            }
        }
        for start in 0..n {
            nodes.push(start);
            extend(g, &mut nodes, &mut out, n);
            nodes.pop();
        }
        out.sort();
        out
    }

    #[test]
    fn graph_relations_fig1a() {
        let g = graph_of(&fixtures::fig1a());
        assert!(g.strict[0][1] && g.strict[1][0]);
        assert!(g.weak[0][1] && g.weak[1][0]);
        assert!(g.weak[0][0] && !g.strict[0][0]);
    }

    #[test]
    fn graph_relations_fig1b() {
        let g = graph_of(&fixtures::fig1b());
        assert!(!g.weak[0][1]);
        assert!(g.weak[1][0] && g.strict[1][0]);
    }

    #[test]
    fn graph_single_observation() {
        let d = Dataset::from_rows(&[(vec![1.0], vec![1.0])]).unwrap();
        let g = graph_of(&d);
        assert_eq!(g.weak, vec![vec![true]]);
        assert_eq!(g.strict, vec![vec![false]]);
    }

    #[test]
    fn garp_verdicts_on_fixtures() {
        let r = check_garp(&graph_of(&fixtures::fig1a()));
        assert!(!r.satisfied);
        let w = r.witness.unwrap();
        assert_eq!(w.nodes, vec![1, 2]);
        assert!(w.has_strict_edge);
        assert!((w.mp_value - 2.0).abs() < 1e-12);

        assert!(check_garp(&graph_of(&fixtures::fig1b())).satisfied);
        assert!(!check_garp(&graph_of(&fixtures::example1())).satisfied);
        assert!(!check_garp(&graph_of(&fixtures::example2())).satisfied);
    }

    #[test]
    fn garp_trivial_single_observation() {
        let d = Dataset::from_rows(&[(vec![1.0, 1.0], vec![1.0, 1.0])]).unwrap();
        let r = check_garp(&graph_of(&d));
        assert!(r.satisfied);
        assert!(r.witness.is_none());
    }

    #[test]
    fn cm_verdicts_on_fixtures() {
        let r = check_cyclical_monotonicity(&graph_of(&fixtures::fig1b()));
        assert!(!r.satisfied);
        let w = r.witness.unwrap();
        assert_eq!(w.nodes, vec![1, 2]);
        assert!((w.mp_value - 2.0).abs() < 1e-12);

        assert!(!check_cyclical_monotonicity(&graph_of(&fixtures::fig1a())).satisfied);

        let single = Dataset::from_rows(&[(vec![1.0], vec![2.0])]).unwrap();
        assert!(check_cyclical_monotonicity(&graph_of(&single)).satisfied);
    }

    #[test]
    fn enumeration_example1() {
        let d = fixtures::example1();
        let found = enumerate_garp_violations(&graph_of(&d), 100_000);
        assert!(!found.truncated);
        let got: Vec<(Vec<usize>, f64)> = found
            .cycles
            .iter()
            .map(|c| (c.nodes.clone(), c.mp_value))
            .collect();
        assert_eq!(got.len(), 4);
        assert_eq!(got[0].0, vec![1, 2]);
        assert!((got[0].1 - 2.0).abs() < 1e-9);
        assert_eq!(got[1].0, vec![1, 2, 3]);
        assert!((got[1].1 - 2.0).abs() < 1e-9);
        assert_eq!(got[2].0, vec![1, 3]);
        assert!((got[2].1 - 1.0).abs() < 1e-9);
        assert_eq!(got[3].0, vec![1, 3, 2]);
        assert!((got[3].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn enumeration_example2() {
        let d = fixtures::example2();
        let found = enumerate_garp_violations(&graph_of(&d), 100_000);
        assert!(!found.truncated);
        let got: Vec<(Vec<usize>, f64)> = found
            .cycles
            .iter()
            .map(|c| (c.nodes.clone(), c.mp_value))
            .collect();
        assert_eq!(
            got,
            vec![(vec![1, 2], 4.0), (vec![1, 4], 5.0), (vec![3, 4], 4.0),]
        );
    }

    #[test]
    fn enumeration_empty_when_garp_holds() {
        let found = enumerate_garp_violations(&graph_of(&fixtures::fig1b()), 100_000);
        assert!(found.cycles.is_empty());
        assert!(!found.truncated);
    }

    #[test]
    fn enumeration_cap_truncates() {
        let found = enumerate_garp_violations(&graph_of(&fixtures::example1()), 2);
        assert_eq!(found.cycles.len(), 2);
        assert!(found.truncated);
    }

    #[test]
    fn enumeration_matches_bruteforce_on_random_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let t = rng.gen_range(1..=7);
            let l = rng.gen_range(1..=3);
            let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..t)
                .map(|_| {
                    (
                        (0..l).map(|_| rng.gen_range(0.1..10.0)).collect(),
                        (0..l).map(|_| rng.gen_range(0.1..10.0)).collect(),
                    )
                })
                .collect();
            let d = Dataset::from_rows(&rows).unwrap();
            let g = graph_of(&d);
            let found = enumerate_garp_violations(&g, 1_000_000);
            assert!(!found.truncated);
            let got: Vec<Vec<usize>> = found.cycles.iter().map(|c| c.nodes.clone()).collect();
            assert_eq!(got, bruteforce_violations(&g));

            // every reported value matches a direct dataset recompute
            for c in &found.cycles {
                assert!((c.mp_value - money_pump_value(&d, &c.nodes)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn cm_implies_garp_on_random_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut cm_count = 0;
        for _ in 0..500 {
            let t = rng.gen_range(1..=5);
            let l = rng.gen_range(1..=3);
            let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..t)
                .map(|_| {
                    (
                        (0..l).map(|_| rng.gen_range(0.1..4.0)).collect(),
                        (0..l).map(|_| rng.gen_range(0.0..4.0)).collect(),
                    )
                })
                .collect();
            let d = Dataset::from_rows(&rows).unwrap();
            let g = graph_of(&d);
            if check_cyclical_monotonicity(&g).satisfied {
                cm_count += 1;
                assert!(
                    check_garp(&g).satisfied,
                    "cyclical monotonicity must imply GARP"
                );
            }
        }
        assert!(cm_count > 0, "suite never produced a CM instance");
    }

    #[test]
    fn cycle_serializes_with_short_keys() {
        let g = graph_of(&fixtures::fig1a());
        let r = check_garp(&g);
        let json = serde_json::to_string(&r.witness.unwrap()).unwrap();
        assert_eq!(json, r#"{"nodes":[1,2],"mp":2.0,"strict":true}"#);
    }
}
