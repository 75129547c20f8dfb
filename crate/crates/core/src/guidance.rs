//! Single-integrator guidance: the velocity an agent would follow toward the
//! neighbors it selected this round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::neighbors::NeighborView;

/// Coupling weights `a_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Weights {
    /// Same weight for every selected neighbor.
    Uniform(f64),
    /// Weight by rank in the neighbor list (index 0 = highest priority).
    PerRank(Vec<f64>),
}

impl Weights {
    fn at(&self, rank: usize) -> f64 {
        match self {
            Weights::Uniform(a) => *a,
            Weights::PerRank(w) => w[rank],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidanceParams {
    pub weights: Weights,
    /// Constant velocity added to every agent's guidance. Zero for pure
    /// rendezvous; a fixed-wing group needs a nonzero cruise to stay airborne.
    pub cruise: Option<Point>,
}

impl Default for GuidanceParams {
    fn default() -> Self {
        Self {
            weights: Weights::Uniform(1.0),
            cruise: None,
        }
    }
}

impl GuidanceParams {
    pub fn uniform(a: f64) -> Self {
        Self {
            weights: Weights::Uniform(a),
            cruise: None,
        }
    }

    /// Checks the weights can serve neighbor lists up to `max_neighbors` long.
    pub fn validate(&self, max_neighbors: usize) -> Result<()> {
        let ok = |a: f64| a.is_finite() && a > 0.0;
        match &self.weights {
            Weights::Uniform(a) if !ok(*a) => {
                return Err(Error::config("[guidance].weights", format!("must be > 0, got {a}")))
            }
            Weights::PerRank(w) => {
                if let Some(a) = w.iter().find(|a| !ok(**a)) {
                    return Err(Error::config(
                        "[guidance].weights",
                        format!("must all be > 0, got {a}"),
                    ));
                }
                if w.len() < max_neighbors {
                    return Err(Error::config(
                        "[guidance].weights",
                        format!("{} weights given, up to {max_neighbors} neighbors used", w.len()),
                    ));
                }
            }
            _ => {}
        }
        if let Some(c) = &self.cruise {
            if !c.is_finite() {
                return Err(Error::config("[guidance].cruise", "must be finite"));
            }
        }
        Ok(())
    }
}

/// `sum_j a_j (X_j - X_i)` over the selected neighbors `ids`, reading neighbor
/// positions from `seen` (which may be delayed copies). Empty `ids` gives zero.
pub fn guidance_velocity(
    own: &Point,
    seen: &[Point],
    ids: &[usize],
    params: &GuidanceParams,
) -> Point {
    let mut uc = ids
        .iter()
        .enumerate()
        .fold(Point::zero(own.dim()), |acc, (rank, &j)| {
            acc + (seen[j] - *own) * params.weights.at(rank)
        });
    if let Some(c) = &params.cruise {
        uc += *c;
    }
    uc
}

/// Guidance of every agent for one round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GuidanceField {
    pub uc: Vec<Point>,
    /// False where the agent had no neighbors.
    pub valid: Vec<bool>,
}

/// Guidance for all agents from one snapshot: `own[i]` is agent i's true
/// position, `seen` the positions others are known at.
pub fn guidance_field(
    own: &[Point],
    seen: &[Point],
    view: &NeighborView,
    params: &GuidanceParams,
) -> GuidanceField {
    let uc = own
        .iter()
        .enumerate()
        .map(|(i, p)| guidance_velocity(p, seen, view.of(i), params))
        .collect();
    let valid = view.lists.iter().map(|l| !l.is_empty()).collect();
    GuidanceField { uc, valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o() -> Point {
        Point::xy(0.0, 0.0)
    }

    #[test]
    fn hand_examples() {
        let seen = [o(), Point::xy(2.0, 0.0), Point::xy(0.0, 4.0)];
        let one = GuidanceParams::uniform(1.0);
        assert_eq!(guidance_velocity(&o(), &seen, &[1], &one), Point::xy(2.0, 0.0));
        assert_eq!(guidance_velocity(&o(), &seen, &[1, 2], &one), Point::xy(2.0, 4.0));
        assert_eq!(
            guidance_velocity(&o(), &seen, &[1], &GuidanceParams::uniform(0.5)),
            Point::xy(1.0, 0.0)
        );
        assert_eq!(guidance_velocity(&o(), &seen, &[], &one), o());
    }

    #[test]
    fn per_rank_weights() {
        let seen = [o(), Point::xy(2.0, 0.0), Point::xy(0.0, 4.0)];
        let p = GuidanceParams {
            weights: Weights::PerRank(vec![1.0, 0.25]),
            cruise: None,
        };
        assert_eq!(guidance_velocity(&o(), &seen, &[1, 2], &p), Point::xy(2.0, 1.0));
        assert!(p.validate(3).is_err());
        assert!(p.validate(2).is_ok());
        assert!(GuidanceParams::uniform(0.0).validate(1).is_err());
    }

    #[test]
    fn empty_view_flagged_invalid() {
        let view = NeighborView {
            lists: vec![vec![1], vec![]],
        };
        let pos = [o(), Point::xy(1.0, 0.0)];
        let f = guidance_field(&pos, &pos, &view, &GuidanceParams::default());
        assert_eq!(f.valid, vec![true, false]);
        assert_eq!(f.uc[1], o());
    }

    fn pts() -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64), 2..8)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point::xy(x, y)).collect())
    }

    proptest! {
        #[test]
        fn linear_in_weight(p in pts(), c in 0.1..10.0f64) {
            let ids: Vec<usize> = (1..p.len()).collect();
            let base = guidance_velocity(&p[0], &p, &ids, &GuidanceParams::uniform(1.0));
            let scaled = guidance_velocity(&p[0], &p, &ids, &GuidanceParams::uniform(c));
            prop_assert!((scaled - base * c).norm() <= 1e-12 * (1.0 + base.norm() * c));
        }

        #[test]
        fn translation_invariant(p in pts(), dx in -100.0..100.0f64, dy in -100.0..100.0f64) {
            let ids: Vec<usize> = (1..p.len()).collect();
            let shift = Point::xy(dx, dy);
            let moved: Vec<Point> = p.iter().map(|q| *q + shift).collect();
            let g = GuidanceParams::default();
            let a = guidance_velocity(&p[0], &p, &ids, &g);
            let b = guidance_velocity(&moved[0], &moved, &ids, &g);
            prop_assert!((a - b).norm() <= 1e-9);
        }

        #[test]
        fn two_agents_antisymmetric(x in -20.0..20.0f64, y in -20.0..20.0f64) {
            let p = [o(), Point::xy(x, y)];
            let g = GuidanceParams::default();
            let u0 = guidance_velocity(&p[0], &p, &[1], &g);
            let u1 = guidance_velocity(&p[1], &p, &[0], &g);
            prop_assert_eq!(u0, -u1);
        }
    }
}
