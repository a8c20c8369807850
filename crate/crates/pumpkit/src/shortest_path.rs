//! Label-correcting shortest paths on a dense digraph from a virtual
//! source connected to every node by a zero-weight edge.
//!
//! The outcome is either a vector of node potentials (the shortest-path
//! distances, all <= 0) or a directed cycle whose weight is below `-tol`.

/// Result of a label-correcting pass.
#[derive(Debug, Clone)]
pub(crate) enum LabelCorrectOutcome {
    /// Stable distances; satisfy `dist[b] <= dist[a] + w[a][b]` up to
    /// floating-point residue.
    Potentials(Vec<f64>),
    /// A cycle (0-based nodes in edge order) with recomputed weight < -tol.
    NegativeCycle { nodes: Vec<usize>, weight: f64 },
}

/// Runs up to `n` relaxation rounds over all ordered pairs.
///
/// Cycles whose recomputed weight is within `-tol` of zero are treated as
/// numerical noise rather than genuine negative cycles; in that case the
/// current distances are returned.
pub(crate) fn label_correct(weights: &[Vec<f64>], tol: f64) -> LabelCorrectOutcome {
    let n = weights.len();
    let mut dist = vec![0.0_f64; n];
    let mut parent = vec![usize::MAX; n];

    for round in 0..n {
        let mut relaxed: Vec<usize> = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let cand = dist[a] + weights[a][b];
                if cand < dist[b] {
                    dist[b] = cand;
                    parent[b] = a;
                    if round + 1 == n {
                        relaxed.push(b);
                    }
                }
            }
        }
        if round + 1 == n {
            if relaxed.is_empty() {
                break;
            }
            // Still relaxing after n rounds: the parent graph contains a
            // cycle. Inspect every candidate and keep the most negative.
            let mut best: Option<(Vec<usize>, f64)> = None;
            for &start in &relaxed {
                if let Some(nodes) = trace_parent_cycle(&parent, start, n) {
                    let weight = cycle_weight(weights, &nodes);
                    if best.as_ref().is_none_or(|(_, w)| weight < *w) {
                        best = Some((nodes, weight));
                    }
                }
            }
            if let Some((nodes, weight)) = best {
                if weight < -tol {
                    return LabelCorrectOutcome::NegativeCycle { nodes, weight };
                }
            }
        } else if !any_relaxable(weights, &dist) {
            break;
        }
    }
    LabelCorrectOutcome::Potentials(dist)
}

fn any_relaxable(weights: &[Vec<f64>], dist: &[f64]) -> bool {
    let n = weights.len();
    for a in 0..n {
        for b in 0..n {
            if a != b && dist[a] + weights[a][b] < dist[b] {
                return true;
            }
        }
    }
    false
}

/// Total weight of a closed walk given as nodes in edge order.
pub(crate) fn cycle_weight(weights: &[Vec<f64>], nodes: &[usize]) -> f64 {
    let k = nodes.len();
    (0..k).map(|i| weights[nodes[i]][nodes[(i + 1) % k]]).sum()
}

/// Walks parent pointers from `start` until a repeat, returning the cycle
/// in forward edge order.
fn trace_parent_cycle(parent: &[usize], start: usize, n: usize) -> Option<Vec<usize>> {
    // Step n times to make sure we are inside a parent-graph cycle.
    let mut v = start;
    for _ in 0..n {
        if parent[v] == usize::MAX {
            return None;
        }
        v = parent[v];
    }
    let anchor = v;
    let mut nodes = vec![anchor];
    let mut u = parent[anchor];
    while u != anchor {
        nodes.push(u);
        u = parent[u];
    }
    // Parent pointers run backwards along edges.
    nodes.reverse();
    Some(nodes)
}
