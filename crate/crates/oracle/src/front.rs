//! Exhaustive Pareto-front enumeration over toy spaces.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One candidate in a toy space: an id and its raw objective vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub id: u64,
    pub values: Vec<f64>,
}

/// An exhaustively enumerable space. `maximize[j]` gives objective j's
/// direction; every point carries exactly one value per objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySearchSpace {
    pub maximize: Vec<bool>,
    pub points: Vec<OraclePoint>,
}

impl ToySearchSpace {
    /// Panics if ids repeat or widths disagree: the enumeration must
    /// cover every candidate exactly once.
    pub fn new(maximize: Vec<bool>, points: Vec<OraclePoint>) -> Self {
        let mut ids: Vec<u64> = points.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), points.len(), "candidate ids must be unique");
        for p in &points {
            assert_eq!(p.values.len(), maximize.len(), "point width must match objectives");
        }
        ToySearchSpace { maximize, points }
    }
}

/// Strict dominance from first principles: `a` dominates `b` when it is
/// at least as good everywhere and better somewhere.
fn beats(a: &[f64], b: &[f64], maximize: &[bool]) -> bool {
    let mut strictly = false;
    for ((&x, &y), &max) in a.iter().zip(b).zip(maximize) {
        let (x, y) = if max { (x, y) } else { (-x, -y) };
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Ids of all non-dominated points, by checking every point against
/// every other. Quadratic on purpose; this is the reference.
pub fn enumerate_front(space: &ToySearchSpace) -> Vec<u64> {
    space
        .points
        .iter()
        .filter(|p| {
            !space.points.iter().any(|q| beats(&q.values, &p.values, &space.maximize))
        })
        .map(|p| p.id)
        .collect()
}

/// A random space on a coarse lattice, so ties and duplicates occur
/// often. Directions alternate maximize/minimize.
pub fn random_space(n_points: usize, n_objectives: usize, seed: u64) -> ToySearchSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maximize: Vec<bool> = (0..n_objectives).map(|j| j % 2 == 0).collect();
    let points = (0..n_points)
        .map(|i| OraclePoint {
            id: i as u64,
            values: (0..n_objectives)
                .map(|_| f64::from(rng.random_range(0..16u32)) / 4.0)
                .collect(),
        })
        .collect();
    ToySearchSpace::new(maximize, points)
}

/// One frozen fixture entry: a generated space and its exact front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontCase {
    pub seed: u64,
    pub space: ToySearchSpace,
    pub front_ids: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_space_hand_checked() {
        // maximize both; (2,1) and (1,2) trade off, (0,0) loses to both
        let space = ToySearchSpace::new(
            vec![true, true],
            vec![
                OraclePoint { id: 0, values: vec![2.0, 1.0] },
                OraclePoint { id: 1, values: vec![1.0, 2.0] },
                OraclePoint { id: 2, values: vec![0.0, 0.0] },
            ],
        );
        assert_eq!(enumerate_front(&space), vec![0, 1]);
    }

    #[test]
    fn identical_points_all_survive() {
        let space = ToySearchSpace::new(
            vec![true, false],
            (0..5).map(|i| OraclePoint { id: i, values: vec![3.0, 1.5] }).collect(),
        );
        assert_eq!(enumerate_front(&space), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn minimize_direction_respected() {
        let space = ToySearchSpace::new(
            vec![false],
            vec![
                OraclePoint { id: 7, values: vec![10.0] },
                OraclePoint { id: 8, values: vec![2.0] },
            ],
        );
        assert_eq!(enumerate_front(&space), vec![8]);
    }

    #[test]
    fn front_members_never_beat_each_other() {
        let space = random_space(400, 3, 99);
        let front = enumerate_front(&space);
        assert!(!front.is_empty());
        let members: Vec<&OraclePoint> =
            space.points.iter().filter(|p| front.contains(&p.id)).collect();
        for a in &members {
            for b in &members {
                assert!(!beats(&a.values, &b.values, &space.maximize));
            }
        }
    }

    #[test]
    #[should_panic(expected = "unique")]
    fn duplicate_ids_rejected() {
        ToySearchSpace::new(
            vec![true],
            vec![
                OraclePoint { id: 1, values: vec![0.0] },
                OraclePoint { id: 1, values: vec![1.0] },
            ],
        );
    }
}
