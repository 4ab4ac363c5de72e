//! Pareto dominance, fast non-dominated sorting and crowding distance.

use serde::{Deserialize, Serialize};

use super::EvolutionError;

/// A point in objective space; every objective is minimized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint(pub Vec<f64>);

impl ObjectivePoint {
    /// `(E_s, E_p)`.
    pub fn errors(e_s: f64, e_p: f64) -> Self {
        ObjectivePoint(vec![e_s, e_p])
    }

    /// `(+∞, +∞)`, dominated by every evaluated model.
    pub fn sentinel() -> Self {
        ObjectivePoint(vec![f64::INFINITY, f64::INFINITY])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn e_s(&self) -> f64 {
        self.0[0]
    }

    pub fn e_p(&self) -> f64 {
        self.0[1]
    }

    pub fn is_sentinel(&self) -> bool {
        self.0.iter().all(|v| *v == f64::INFINITY)
    }
}

/// True iff `a` is nowhere worse than `b` and strictly better somewhere.
pub fn dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> Result<bool, EvolutionError> {
    if a.0.len() != b.0.len() {
        return Err(EvolutionError::Dimension(a.0.len(), b.0.len()));
    }
    Ok(dominates_unchecked(&a.0, &b.0))
}

fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// Non-dominated fronts, best first. Each front is ordered by decreasing
/// crowding distance, ties by index.
pub fn nondominated_sort(points: &[ObjectivePoint]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dom_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates_unchecked(&points[i].0, &points[j].0) {
                dominated_by_me[i].push(j);
                dom_count[j] += 1;
            } else if dominates_unchecked(&points[j].0, &points[i].0) {
                dominated_by_me[j].push(i);
                dom_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dom_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                dom_count[j] -= 1;
                if dom_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(order_by_crowding(points, current));
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front`, in the given order.
pub fn crowding_distance(points: &[ObjectivePoint], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    let mut dist = vec![0.0; len];
    if len == 0 {
        return dist;
    }
    let m = points[front[0]].0.len();
    for obj in 0..m {
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by(|&a, &b| {
            points[front[a]].0[obj]
                .total_cmp(&points[front[b]].0[obj])
                .then(front[a].cmp(&front[b]))
        });
        let lo = points[front[order[0]]].0[obj];
        let hi = points[front[order[len - 1]]].0[obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[len - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range > 0.0 && range.is_finite()) {
            continue;
        }
        for w in 1..len.saturating_sub(1) {
            let prev = points[front[order[w - 1]]].0[obj];
            let next = points[front[order[w + 1]]].0[obj];
            dist[order[w]] += (next - prev) / range;
        }
    }
    dist
}

fn order_by_crowding(points: &[ObjectivePoint], mut front: Vec<usize>) -> Vec<usize> {
    front.sort_unstable();
    let dist = crowding_distance(points, &front);
    let mut idx: Vec<usize> = (0..front.len()).collect();
    idx.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(front[a].cmp(&front[b])));
    idx.into_iter().map(|i| front[i]).collect()
}
