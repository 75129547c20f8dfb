//! Dimension-generic points and the per-step distance computations every
//! other module builds on.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two positions closer than this are treated as coincident.
pub const COINCIDENT_TOLERANCE: f64 = 1e-12;

/// Largest supported space dimension.
pub const MAX_DIM: usize = 3;

/// A point (or free vector) in 1, 2 or 3 dimensions.
///
/// Storage is a fixed `[f64; 3]`; coordinates beyond `dim` are kept at zero so
/// that arithmetic never needs to branch on the dimension.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    /// Builds a point from a coordinate slice of length 1..=3.
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::invalid(format!(
                "point dimension must be 1, 2 or 3, got {}",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {c}")));
        }
        let mut p = Self::zero(coords.len());
        p.coords[..coords.len()].copy_from_slice(coords);
        Ok(p)
    }

    /// The origin of an `dim`-dimensional space.
    ///
    /// Panics if `dim` is not 1, 2 or 3.
    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Self {
            coords: [0.0; MAX_DIM],
            dim: dim as u8,
        }
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self {
            coords: [x, y, 0.0],
            dim: 2,
        }
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self {
            coords: [x, y, z],
            dim: 3,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Applies `f` to every active coordinate.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = *self;
        for c in &mut out.coords[..self.dim()] {
            *c = f(*c);
        }
        out
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        let d = self.dim();
        &mut self.coords[..d][i]
    }
}

impl Add for Point {
    type Output = Point;

    fn add(mut self, rhs: Point) -> Point {
        self += rhs;
        self
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, rhs: Point) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.coords.iter_mut().zip(rhs.coords) {
            *a += b;
        }
    }
}

impl Sub for Point {
    type Output = Point;

    fn sub(mut self, rhs: Point) -> Point {
        self -= rhs;
        self
    }
}

impl SubAssign for Point {
    fn sub_assign(&mut self, rhs: Point) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.coords.iter_mut().zip(rhs.coords) {
            *a -= b;
        }
    }
}

impl Mul<f64> for Point {
    type Output = Point;

    fn mul(self, s: f64) -> Point {
        Point {
            coords: self.coords.map(|c| c * s),
            dim: self.dim,
        }
    }
}

impl Neg for Point {
    type Output = Point;

    fn neg(self) -> Point {
        self * -1.0
    }
}

/// Symmetric N×N matrix of Euclidean distances, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest entry, i.e. the group diameter.
    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

fn check_same_dim(positions: &[Point]) -> Result<usize> {
    let first = positions
        .first()
        .ok_or_else(|| Error::invalid("at least one position is required"))?;
    let dim = first.dim();
    if let Some((i, p)) = positions.iter().enumerate().find(|(_, p)| p.dim() != dim) {
        return Err(Error::invalid(format!(
            "dimension mismatch: agent {i} has dimension {}, expected {dim}",
            p.dim()
        )));
    }
    Ok(dim)
}

pub fn pairwise_distances(positions: &[Point]) -> Result<DistanceMatrix> {
    check_same_dim(positions)?;
    let n = positions.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = positions[i].distance(&positions[j]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Distances from `own` to every entry of `others`; used when an agent sees
/// delayed copies of its neighbors.
pub fn distance_row(own: &Point, others: &[Point]) -> Vec<f64> {
    others.iter().map(|p| own.distance(p)).collect()
}

/// Maximum pairwise distance; zero for a single agent.
pub fn group_diameter(positions: &[Point]) -> Result<f64> {
    check_same_dim(positions)?;
    let mut best = 0.0_f64;
    for (i, a) in positions.iter().enumerate() {
        for b in &positions[i + 1..] {
            best = best.max(a.distance(b));
        }
    }
    Ok(best)
}

pub fn centroid(positions: &[Point]) -> Result<Point> {
    let dim = check_same_dim(positions)?;
    let sum = positions
        .iter()
        .fold(Point::zero(dim), |acc, p| acc + *p);
    Ok(sum * (1.0 / positions.len() as f64))
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1(x: f64) -> Point {
        Point::new(&[x]).unwrap()
    }

    #[test]
    fn three_four_five() {
        let d = pairwise_distances(&[Point::xy(0.0, 0.0), Point::xy(3.0, 4.0)]).unwrap();
        assert_eq!(d.to_rows(), vec![vec![0.0, 5.0], vec![5.0, 0.0]]);
        assert_eq!(
            group_diameter(&[Point::xy(0.0, 0.0), Point::xy(3.0, 4.0)]).unwrap(),
            5.0
        );
    }

    #[test]
    fn single_agent_matrix() {
        let d = pairwise_distances(&[Point::xy(1.0, 1.0)]).unwrap();
        assert_eq!(d.to_rows(), vec![vec![0.0]]);
        assert_eq!(group_diameter(&[Point::xy(1.0, 1.0)]).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_line() {
        let pts = [p1(0.0), p1(2.0), p1(5.0)];
        let d = pairwise_distances(&pts).unwrap();
        assert_eq!(
            d.to_rows(),
            vec![
                vec![0.0, 2.0, 5.0],
                vec![2.0, 0.0, 3.0],
                vec![5.0, 3.0, 0.0]
            ]
        );
        assert_eq!(group_diameter(&pts).unwrap(), 5.0);
    }

    #[test]
    fn coincident_agents_have_zero_diameter() {
        let pts = vec![Point::xy(7.5, -2.0); 6];
        assert_eq!(group_diameter(&pts).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = pairwise_distances(&[Point::xy(0.0, 0.0), p1(1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(group_diameter(&[]).is_err());
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(
            centroid(&[Point::xy(0.0, 0.0), Point::xy(2.0, 0.0)]).unwrap(),
            Point::xy(1.0, 0.0)
        );
        assert_eq!(
            centroid(&[Point::xy(0.0, 0.0), Point::xy(2.0, 0.0), Point::xy(1.0, 3.0)]).unwrap(),
            Point::xy(1.0, 1.0)
        );
        let p = Point::xyz(1.5, -2.0, 9.0);
        assert_eq!(centroid(&[p]).unwrap(), p);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(0.25)).abs() - 0.25 < 1e-15);
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        assert!(Point::new(&[f64::NAN, 0.0]).is_err());
        assert!(Point::new(&[]).is_err());
        assert!(Point::new(&[0.0; 4]).is_err());
    }

    fn cloud() -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 1..25)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point::xy(x, y)).collect())
    }

    proptest! {
        #[test]
        fn matrix_symmetric_zero_diagonal(pts in cloud()) {
            let d = pairwise_distances(&pts).unwrap();
            for i in 0..pts.len() {
                prop_assert_eq!(d.get(i, i), 0.0);
                for j in 0..pts.len() {
                    prop_assert_eq!(d.get(i, j), d.get(j, i));
                    prop_assert!(d.get(i, j) >= 0.0);
                    for k in 0..pts.len() {
                        prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn diameter_is_max_entry(pts in cloud()) {
            let d = pairwise_distances(&pts).unwrap();
            prop_assert_eq!(group_diameter(&pts).unwrap(), d.max_entry());
        }
    }
}
