//! Exact half-space polytope arithmetic and the convex set programs the
//! terminal-ingredient synthesis needs.
//!
//! All sets are carried in H-representation `{x | A x ≤ b}`. Vertex
//! enumeration exists as an internal tool for low dimensions only; images
//! of boxes are computed through exact zonotope facet enumeration instead
//! of hulls.

mod image;
mod vertices;
mod volume;

pub use image::{linear_image, zonotope_hrep};
pub use vertices::{polygon_area, vertices};
pub use volume::{maximize_box_ball_product, BoxBallProduct};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{solve_lp, SolverError};

/// Tolerance for dropping redundant half-spaces.
pub const REDUNDANCY_TOL: f64 = 1e-9;

/// Tolerance for membership / containment certificates.
pub const CONTAINMENT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("input polytope is unbounded")]
    UnboundedInput,
    #[error("map is rank deficient")]
    RankDeficient,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("program infeasible: {0}")]
    Infeasible(String),
    #[error("image is not full-dimensional")]
    DegenerateImage,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl From<SolverError> for GeometryError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Infeasible => GeometryError::EmptyPolytope,
            SolverError::Unbounded => GeometryError::UnboundedInput,
            other => GeometryError::Numerical(other.to_string()),
        }
    }
}

/// Convex polytope `{x ∈ ℝᵈ | A x ≤ b}` in half-space representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HPolytope {
    #[serde(
        rename = "A",
        serialize_with = "ser_matrix",
        deserialize_with = "de_matrix"
    )]
    a: DMatrix<f64>,
    #[serde(
        rename = "b",
        serialize_with = "ser_vector",
        deserialize_with = "de_vector"
    )]
    b: DVector<f64>,
    normalized: bool,
}

impl HPolytope {
    /// Build from raw rows. Vacuous rows (zero normal, non-negative offset)
    /// are dropped; a zero row with negative offset is kept so emptiness is
    /// decided by LP, not silently.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, GeometryError> {
        if a.nrows() != b.len() {
            return Err(GeometryError::DimMismatch(format!(
                "{} rows vs {} offsets",
                a.nrows(),
                b.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Numerical("non-finite entry".into()));
        }
        let keep: Vec<usize> = (0..a.nrows())
            .filter(|&i| a.row(i).norm() > 1e-14 || b[i] < 0.0)
            .collect();
        let (a, b) = select_rows(&a, &b, &keep);
        Ok(HPolytope {
            a,
            b,
            normalized: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Rescale every row to unit Euclidean normal.
    pub fn normalize(&mut self) {
        if self.normalized {
            return;
        }
        for i in 0..self.a.nrows() {
            let n = self.a.row(i).norm();
            if n > 0.0 {
                let mut row = self.a.row_mut(i);
                row /= n;
                self.b[i] /= n;
            }
        }
        self.normalized = true;
    }

    pub fn normalized(&self) -> Self {
        let mut p = self.clone();
        p.normalize();
        p
    }

    /// Membership with the crate-wide containment tolerance.
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.contains_with_tol(x, CONTAINMENT_TOL)
    }

    pub fn contains_with_tol(&self, x: &DVector<f64>, tol: f64) -> bool {
        let r = &self.a * x - &self.b;
        r.iter().all(|&v| v <= tol)
    }

    /// Largest half-space residual `max_i (aᵢᵀx - bᵢ)`; negative inside.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        if self.num_rows() == 0 {
            return f64::NEG_INFINITY;
        }
        (&self.a * x - &self.b).max()
    }

    /// Support function `h(d) = max_{x∈P} dᵀx` with a maximizer.
    pub fn support(&self, dir: &DVector<f64>) -> Result<(f64, DVector<f64>), GeometryError> {
        let sol = solve_lp(dir, &self.a, &self.b, None)?;
        Ok((sol.value, sol.x))
    }

    /// Chebyshev center and radius (largest inscribed ball).
    pub fn chebyshev_center(&self) -> Result<(DVector<f64>, f64), GeometryError> {
        let d = self.dim();
        let m = self.num_rows();
        if m == 0 {
            return Err(GeometryError::UnboundedInput);
        }
        // max r  s.t.  aᵢᵀc + ‖aᵢ‖ r ≤ bᵢ
        let mut a_lp = DMatrix::zeros(m, d + 1);
        for i in 0..m {
            let n = self.a.row(i).norm();
            for j in 0..d {
                a_lp[(i, j)] = self.a[(i, j)];
            }
            a_lp[(i, d)] = n;
        }
        let mut c = DVector::zeros(d + 1);
        c[d] = 1.0;
        let sol = solve_lp(&c, &a_lp, &self.b, None).map_err(|e| match e {
            SolverError::Infeasible => GeometryError::EmptyPolytope,
            SolverError::Unbounded => GeometryError::UnboundedInput,
            other => GeometryError::Numerical(other.to_string()),
        })?;
        Ok((sol.x.rows(0, d).clone_owned(), sol.x[d]))
    }

    /// Emptiness decided by LP.
    pub fn is_empty(&self) -> bool {
        match self.chebyshev_center() {
            Ok((_, r)) => r < -CONTAINMENT_TOL,
            Err(GeometryError::EmptyPolytope) => true,
            _ => false,
        }
    }

    /// Boundedness: finite support in all ±eᵢ directions.
    pub fn is_bounded(&self) -> bool {
        let d = self.dim();
        for i in 0..d {
            for sgn in [1.0, -1.0] {
                let mut dir = DVector::zeros(d);
                dir[i] = sgn;
                match solve_lp(&dir, &self.a, &self.b, None) {
                    Ok(_) => {}
                    Err(SolverError::Unbounded) => return false,
                    Err(_) => return true, // empty counts as bounded
                }
            }
        }
        true
    }

    /// Axis-aligned bounding box via support LPs.
    pub fn bounding_box(&self) -> Result<AxisBox, GeometryError> {
        let d = self.dim();
        let mut lo = DVector::zeros(d);
        let mut hi = DVector::zeros(d);
        for i in 0..d {
            let mut dir = DVector::zeros(d);
            dir[i] = 1.0;
            hi[i] = self.support(&dir)?.0;
            dir[i] = -1.0;
            lo[i] = -self.support(&dir)?.0;
        }
        AxisBox::new(lo, hi)
    }

    /// Drop every redundant half-space (per-row LP test, sequential).
    pub fn reduce(&self) -> Self {
        let mut p = self.normalized();
        p.dedup_rows();
        let mut keep: Vec<bool> = vec![true; p.num_rows()];
        for i in 0..p.num_rows() {
            let rows: Vec<usize> = (0..p.num_rows())
                .filter(|&j| keep[j] && j != i)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let (mut a_sub, mut b_sub) = select_rows(&p.a, &p.b, &rows);
            // Bound the test LP in the objective direction.
            let nr = a_sub.nrows();
            a_sub = a_sub.insert_row(nr, 0.0);
            for j in 0..p.dim() {
                a_sub[(nr, j)] = p.a[(i, j)];
            }
            b_sub = b_sub.insert_row(nr, p.b[i] + 1.0);
            let obj = p.a.row(i).transpose();
            match solve_lp(&obj, &a_sub, &b_sub, None) {
                Ok(sol) if sol.value <= p.b[i] + REDUNDANCY_TOL => keep[i] = false,
                Ok(_) => {}
                Err(_) => {}
            }
        }
        let rows: Vec<usize> = (0..p.num_rows()).filter(|&i| keep[i]).collect();
        let (a, b) = select_rows(&p.a, &p.b, &rows);
        HPolytope {
            a,
            b,
            normalized: true,
        }
    }

    /// Merge duplicate (parallel, same offset) rows; for parallel rows the
    /// tighter offset wins. Assumes normalized rows.
    fn dedup_rows(&mut self) {
        let m = self.num_rows();
        let mut keep: Vec<bool> = vec![true; m];
        for i in 0..m {
            if !keep[i] {
                continue;
            }
            for j in (i + 1)..m {
                if !keep[j] {
                    continue;
                }
                let diff = (self.a.row(i) - self.a.row(j)).norm();
                if diff < 1e-12 {
                    if self.b[j] < self.b[i] {
                        self.b[i] = self.b[j];
                    }
                    keep[j] = false;
                }
            }
        }
        let rows: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
        let (a, b) = select_rows(&self.a, &self.b, &rows);
        self.a = a;
        self.b = b;
    }

    /// Minkowski sum, exact via projection of the lifted system.
    pub fn minkowski_sum(&self, other: &HPolytope) -> Result<HPolytope, GeometryError> {
        let d = self.dim();
        if other.dim() != d {
            return Err(GeometryError::DimMismatch(format!(
                "sum of dim {} and {}",
                d,
                other.dim()
            )));
        }
        // {z | ∃y: A_P (z - y) ≤ b_P, A_Q y ≤ b_Q}, eliminate y.
        let mp = self.num_rows();
        let mq = other.num_rows();
        let mut c = DMatrix::zeros(mp + mq, 2 * d);
        let mut e = DVector::zeros(mp + mq);
        for i in 0..mp {
            for j in 0..d {
                c[(i, j)] = self.a[(i, j)];
                c[(i, d + j)] = -self.a[(i, j)];
            }
            e[i] = self.b[i];
        }
        for i in 0..mq {
            for j in 0..d {
                c[(mp + i, d + j)] = other.a[(i, j)];
            }
            e[mp + i] = other.b[i];
        }
        let projected = image::project_out(&c, &e, d)?;
        Ok(projected.reduce())
    }

    /// Pontryagin (Minkowski) difference. Rows are unit-normalized first;
    /// the result may be empty — callers check with [`HPolytope::is_empty`].
    pub fn pontryagin_diff(&self, rhs: &MinkowskiTerm<'_>) -> Result<HPolytope, GeometryError> {
        let mut p = self.normalized();
        match rhs {
            MinkowskiTerm::Point(v) => {
                if v.len() != p.dim() {
                    return Err(GeometryError::DimMismatch("translation dim".into()));
                }
                for i in 0..p.num_rows() {
                    p.b[i] -= p.a.row(i).transpose().dot(v);
                }
            }
            MinkowskiTerm::Ball(rho) => {
                for i in 0..p.num_rows() {
                    p.b[i] -= rho;
                }
            }
            MinkowskiTerm::Polytope(q) => {
                if q.dim() != p.dim() {
                    return Err(GeometryError::DimMismatch("difference dim".into()));
                }
                for i in 0..p.num_rows() {
                    let dir = p.a.row(i).transpose();
                    let (h, _) = q.support(&dir)?;
                    p.b[i] -= h;
                }
            }
        }
        Ok(p)
    }

    /// Translated copy `P + v`.
    pub fn translate(&self, v: &DVector<f64>) -> HPolytope {
        let mut p = self.clone();
        for i in 0..p.num_rows() {
            p.b[i] += p.a.row(i).transpose().dot(v);
        }
        p
    }

    /// Row-wise intersection of two polytopes over the same space.
    pub fn intersect(&self, other: &HPolytope) -> Result<HPolytope, GeometryError> {
        if self.dim() != other.dim() {
            return Err(GeometryError::DimMismatch("intersection".into()));
        }
        let a = DMatrix::from_fn(self.num_rows() + other.num_rows(), self.dim(), |i, j| {
            if i < self.num_rows() {
                self.a[(i, j)]
            } else {
                other.a[(i - self.num_rows(), j)]
            }
        });
        let mut b = DVector::zeros(self.num_rows() + other.num_rows());
        b.rows_mut(0, self.num_rows()).copy_from(&self.b);
        b.rows_mut(self.num_rows(), other.num_rows())
            .copy_from(&other.b);
        HPolytope::new(a, b)
    }

    /// Restrict to an axis-aligned slice: coordinates in `fixed` are pinned
    /// to the given values and removed from the representation.
    pub fn slice(&self, fixed: &[(usize, f64)]) -> Result<HPolytope, GeometryError> {
        let d = self.dim();
        let fixed_idx: Vec<usize> = fixed.iter().map(|&(i, _)| i).collect();
        let free: Vec<usize> = (0..d).filter(|i| !fixed_idx.contains(i)).collect();
        let mut a = DMatrix::zeros(self.num_rows(), free.len());
        let mut b = self.b.clone();
        for r in 0..self.num_rows() {
            for (c_new, &c_old) in free.iter().enumerate() {
                a[(r, c_new)] = self.a[(r, c_old)];
            }
            for &(i, v) in fixed {
                b[r] -= self.a[(r, i)] * v;
            }
        }
        HPolytope::new(a, b)
    }

    /// Largest `t` such that `center + t·h ⊙ [-1,1]ᵈ ⊆ P` (closed form),
    /// returned as the box itself. `center` must lie in `P`.
    pub fn inscribed_box(&self, center: &DVector<f64>, h: &DVector<f64>) -> Option<AxisBox> {
        let mut t = f64::INFINITY;
        for i in 0..self.num_rows() {
            let row = self.a.row(i);
            let slack = self.b[i] - row.transpose().dot(center);
            if slack < 0.0 {
                return None;
            }
            let spread: f64 = (0..self.dim()).map(|j| row[j].abs() * h[j]).sum();
            if spread > 1e-15 {
                t = t.min(slack / spread);
            }
        }
        if !t.is_finite() {
            return None;
        }
        AxisBox::new(center - h * t, center + h * t).ok()
    }
}

/// Right-hand side of a Pontryagin difference.
pub enum MinkowskiTerm<'a> {
    Polytope(&'a HPolytope),
    Ball(f64),
    Point(&'a DVector<f64>),
}

/// Axis-aligned box `{x | lower ≤ x ≤ upper}`, losslessly convertible to
/// [`HPolytope`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisBox {
    #[serde(serialize_with = "ser_vector", deserialize_with = "de_vector")]
    lower: DVector<f64>,
    #[serde(serialize_with = "ser_vector", deserialize_with = "de_vector")]
    upper: DVector<f64>,
}

impl AxisBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimMismatch("box bounds".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(GeometryError::Infeasible("box lower > upper".into()));
        }
        Ok(AxisBox { lower, upper })
    }

    pub fn symmetric(half_widths: DVector<f64>) -> Result<Self, GeometryError> {
        AxisBox::new(-&half_widths, half_widths)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn half_widths(&self) -> DVector<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    pub fn to_polytope(&self) -> HPolytope {
        let d = self.dim();
        let mut a = DMatrix::zeros(2 * d, d);
        let mut b = DVector::zeros(2 * d);
        for i in 0..d {
            a[(2 * i, i)] = 1.0;
            b[2 * i] = self.upper[i];
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i + 1] = -self.lower[i];
        }
        HPolytope {
            a,
            b,
            normalized: true,
        }
    }

    /// All `2^d` corner points.
    pub fn corners(&self) -> Vec<DVector<f64>> {
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for mask in 0..(1usize << d) {
            let v = DVector::from_fn(d, |i, _| {
                if mask >> i & 1 == 1 {
                    self.upper[i]
                } else {
                    self.lower[i]
                }
            });
            out.push(v);
        }
        out
    }

    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            rng.gen_range(self.lower[i]..=self.upper[i])
        })
    }
}

pub(crate) fn select_rows(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rows: &[usize],
) -> (DMatrix<f64>, DVector<f64>) {
    let d = a.ncols();
    let mut a_out = DMatrix::zeros(rows.len(), d);
    let mut b_out = DVector::zeros(rows.len());
    for (k, &i) in rows.iter().enumerate() {
        a_out.row_mut(k).copy_from(&a.row(i));
        b_out[k] = b[i];
    }
    (a_out, b_out)
}

/// Serde adapters for nalgebra dynamic types, shared across the crate.
pub(crate) mod serde_helpers {
    pub(crate) use super::{de_matrix, de_vector, ser_matrix, ser_vector};
}

pub(crate) fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect();
    rows.serialize(s)
}

pub(crate) fn de_matrix<'de, D: serde::Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
    let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(serde::de::Error::custom("ragged matrix"));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub(crate) fn ser_vector<S: serde::Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    let vals: Vec<f64> = v.iter().cloned().collect();
    vals.serialize(s)
}

pub(crate) fn de_vector<'de, D: serde::Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
    let vals: Vec<f64> = Vec::deserialize(d)?;
    Ok(DVector::from_vec(vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_box(d: usize) -> HPolytope {
        AxisBox::new(DVector::zeros(d), DVector::from_element(d, 1.0))
            .unwrap()
            .to_polytope()
    }

    #[test]
    fn chebyshev_unit_box() {
        for d in 1..=4 {
            let (c, r) = unit_box(d).chebyshev_center().unwrap();
            assert_relative_eq!(r, 0.5, epsilon = 1e-8);
            for i in 0..d {
                assert_relative_eq!(c[i], 0.5, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn chebyshev_triangle_incircle() {
        // x >= 0, y >= 0, x + y <= 1: incircle radius (2 - √2)/2 scaled by
        // the analytic formula r = A/s with area 1/2, semiperimeter (2+√2)/2.
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let p = HPolytope::new(a, b).unwrap();
        let (c, r) = p.chebyshev_center().unwrap();
        let r_expect = 0.5 / ((2.0 + 2.0_f64.sqrt()) / 2.0);
        assert_relative_eq!(r, r_expect, epsilon = 1e-8);
        assert_relative_eq!(c[0], r_expect, epsilon = 1e-6);
        assert_relative_eq!(c[1], r_expect, epsilon = 1e-6);
    }

    #[test]
    fn chebyshev_degenerate_segment() {
        // Line segment in 2D: 0 <= x <= 1, y = 0.
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let p = HPolytope::new(a, b).unwrap();
        let (_, r) = p.chebyshev_center().unwrap();
        assert!(r.abs() < 1e-8);
    }

    #[test]
    fn minkowski_interval_sum() {
        let p = unit_box(1);
        let sum = p.minkowski_sum(&p).unwrap();
        let dir = DVector::from_vec(vec![1.0]);
        assert_relative_eq!(sum.support(&dir).unwrap().0, 2.0, epsilon = 1e-8);
        assert_relative_eq!(sum.support(&(-dir)).unwrap().0, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn minkowski_singleton_identity() {
        let p = unit_box(2);
        let zero = HPolytope::new(
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            DVector::zeros(4),
        )
        .unwrap();
        let sum = p.minkowski_sum(&zero).unwrap();
        for _ in 0..1 {
            for dir in [
                DVector::from_vec(vec![1.0, 0.3]),
                DVector::from_vec(vec![-0.7, 1.0]),
            ] {
                assert_relative_eq!(
                    sum.support(&dir).unwrap().0,
                    p.support(&dir).unwrap().0,
                    epsilon = 1e-7
                );
            }
        }
    }

    #[test]
    fn pontryagin_translation() {
        // [0,2]² ⊖ {(1,1)} = [-1,1]²
        let bx = AxisBox::new(DVector::zeros(2), DVector::from_element(2, 2.0)).unwrap();
        let v = DVector::from_element(2, 1.0);
        let p = bx
            .to_polytope()
            .pontryagin_diff(&MinkowskiTerm::Point(&v))
            .unwrap();
        let bb = p.bounding_box().unwrap();
        assert_relative_eq!(bb.lower()[0], -1.0, epsilon = 1e-8);
        assert_relative_eq!(bb.upper()[1], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn pontryagin_ball_shrink() {
        let bx = AxisBox::symmetric(DVector::from_element(2, 1.0)).unwrap();
        let p = bx
            .to_polytope()
            .pontryagin_diff(&MinkowskiTerm::Ball(0.5))
            .unwrap();
        let bb = p.bounding_box().unwrap();
        assert_relative_eq!(bb.upper()[0], 0.5, epsilon = 1e-8);
        assert_relative_eq!(bb.lower()[1], -0.5, epsilon = 1e-8);
    }

    #[test]
    fn reduce_drops_redundant() {
        // Unit box plus a slack row x0 <= 5.
        let a = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0, 5.0]);
        let p = HPolytope::new(a, b).unwrap().reduce();
        assert_eq!(p.num_rows(), 4);
    }

    #[test]
    fn json_round_trip() {
        let p = unit_box(3);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"A\""));
        let q: HPolytope = serde_json::from_str(&s).unwrap();
        assert_eq!(q.num_rows(), p.num_rows());
        assert_eq!(q.dim(), 3);
    }

    #[test]
    fn empty_flagged_not_error() {
        let bx = AxisBox::symmetric(DVector::from_element(2, 0.3)).unwrap();
        let p = bx
            .to_polytope()
            .pontryagin_diff(&MinkowskiTerm::Ball(1.0))
            .unwrap();
        assert!(p.is_empty());
    }
}
