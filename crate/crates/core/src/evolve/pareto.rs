//! Dominance, Pareto-front extraction, ranking, crowding, scalarization.

use super::{Candidate, FitnessVector, ObjectiveSpec, Orientation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaError {
    /// The two vectors carry different objectives or orientations.
    Mismatch,
    /// The vector lacks an objective the spec requires.
    MissingObjective(&'static str),
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemaError::Mismatch => write!(f, "fitness vectors have different objective schemas"),
            SchemaError::MissingObjective(name) => {
                write!(f, "fitness vector lacks objective `{}`", name)
            }
        }
    }
}

impl std::error::Error for SchemaError {}

/// Orient a value so that larger is always better.
fn oriented(value: f64, orientation: Orientation) -> f64 {
    match orientation {
        Orientation::Maximize => value,
        Orientation::Minimize => -value,
    }
}

/// Strict Pareto dominance: a is no worse than b on every objective and
/// strictly better on at least one. Failed vectors neither dominate nor
/// are compared; they simply never win.
pub fn dominates(a: &FitnessVector, b: &FitnessVector) -> Result<bool, SchemaError> {
    if !a.same_schema(b) {
        return Err(SchemaError::Mismatch);
    }
    if !a.status.is_ok() || !b.status.is_ok() {
        return Ok(false);
    }
    let mut strictly_better = false;
    for (va, vb) in a.values.iter().zip(&b.values) {
        let x = oriented(va.value, va.orientation);
        let y = oriented(vb.value, vb.orientation);
        if x < y {
            return Ok(false);
        }
        if x > y {
            strictly_better = true;
        }
    }
    Ok(strictly_better)
}

/// The mutually non-dominated subset of an archive.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub members: Vec<(Candidate, FitnessVector)>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Extract the non-dominated subset by incremental front maintenance:
/// each point is tested against the running front, evicting members it
/// dominates. Failed evaluations never enter the front. All ok vectors
/// must share one schema.
pub fn pareto_front(archive: &[(Candidate, FitnessVector)]) -> ParetoFront {
    let mut front: Vec<(Candidate, FitnessVector)> = Vec::new();
    for (candidate, fitness) in archive {
        if !fitness.status.is_ok() {
            continue;
        }
        let mut dominated = false;
        for (_, member) in &front {
            if dominates(member, fitness).expect("archive shares one schema") {
                dominated = true;
                break;
            }
        }
        if dominated {
            continue;
        }
        front.retain(|(_, member)| {
            !dominates(fitness, member).expect("archive shares one schema")
        });
        front.push((candidate.clone(), fitness.clone()));
    }
    ParetoFront { members: front }
}

/// Non-dominated sorting ranks: rank 0 is the front, rank 1 the front of
/// the rest, and so on. Failed vectors rank strictly below every ok one.
pub fn nondominated_ranks(points: &[&FitnessVector]) -> Vec<usize> {
    let n = points.len();
    let mut rank = vec![usize::MAX; n];
    let mut assigned = 0usize;
    let mut current = 0usize;
    // Failed points take the worst rank up front.
    let failed_rank = n; // strictly below any peel rank
    for (i, p) in points.iter().enumerate() {
        if !p.status.is_ok() {
            rank[i] = failed_rank;
            assigned += 1;
        }
    }
    while assigned < n {
        let mut this_layer = Vec::new();
        for i in 0..n {
            if rank[i] != usize::MAX {
                continue;
            }
            let mut dominated = false;
            for j in 0..n {
                if i == j || rank[j] != usize::MAX {
                    continue;
                }
                if dominates(points[j], points[i]).expect("population shares one schema") {
                    dominated = true;
                    break;
                }
            }
            if !dominated {
                this_layer.push(i);
            }
        }
        for i in this_layer {
            rank[i] = current;
            assigned += 1;
        }
        current += 1;
    }
    rank
}

/// NSGA-style crowding distance, computed within each rank class.
/// Boundary points are infinitely uncrowded; interior points sum their
/// normalized neighbor gaps per objective. Failed points get distance 0.
pub fn crowding_distances(points: &[&FitnessVector], ranks: &[usize]) -> Vec<f64> {
    let n = points.len();
    assert_eq!(ranks.len(), n);
    let mut distance = vec![0.0f64; n];
    if n == 0 {
        return distance;
    }
    let max_rank = *ranks.iter().max().expect("non-empty");
    for r in 0..=max_rank {
        let class: Vec<usize> =
            (0..n).filter(|&i| ranks[i] == r && points[i].status.is_ok()).collect();
        if class.is_empty() {
            continue;
        }
        if class.len() <= 2 {
            for &i in &class {
                distance[i] = f64::INFINITY;
            }
            continue;
        }
        let n_objectives = points[class[0]].values.len();
        for obj in 0..n_objectives {
            let mut order = class.clone();
            order.sort_by(|&a, &b| {
                points[a].values[obj]
                    .value
                    .partial_cmp(&points[b].values[obj].value)
                    .expect("ok fitness values are finite")
            });
            let lo = points[order[0]].values[obj].value;
            let hi = points[*order.last().expect("non-empty")].values[obj].value;
            let span = hi - lo;
            distance[order[0]] = f64::INFINITY;
            distance[*order.last().expect("non-empty")] = f64::INFINITY;
            if span == 0.0 {
                continue;
            }
            for w in order.windows(3) {
                let gap =
                    points[w[2]].values[obj].value - points[w[0]].values[obj].value;
                distance[w[1]] += gap / span;
            }
        }
    }
    distance
}

/// Weighted sum of orientation-adjusted objective values. Failed vectors
/// scalarize to negative infinity so they lose every comparison.
pub fn scalarize(fv: &FitnessVector, spec: &ObjectiveSpec) -> Result<f64, SchemaError> {
    if !fv.status.is_ok() {
        return Ok(f64::NEG_INFINITY);
    }
    let mut total = 0.0;
    for term in &spec.terms {
        let value = fv
            .get(term.objective)
            .ok_or(SchemaError::MissingObjective(term.objective.name()))?;
        total += term.weight * oriented(value, term.orientation);
    }
    Ok(total)
}
