//! Combinatorial vertex enumeration for low-dimensional polytopes.
//!
//! Internal tool only: every basic solution of `d` active rows is checked
//! for feasibility. Intended for the dimensions the synthesis actually
//! visits (≤ 6) and modest row counts.

use nalgebra::{DMatrix, DVector};

use super::{GeometryError, HPolytope};

const COMBO_CAP: u128 = 2_000_000;

pub fn vertices(p: &HPolytope) -> Result<Vec<DVector<f64>>, GeometryError> {
    let d = p.dim();
    let m = p.num_rows();
    if m < d {
        return Err(GeometryError::UnboundedInput);
    }
    if combos(m, d) > COMBO_CAP {
        return Err(GeometryError::Numerical(format!(
            "vertex enumeration too large: C({m},{d})"
        )));
    }
    let scale = 1.0 + p.b().amax();
    let mut verts: Vec<DVector<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let sub = DMatrix::from_fn(d, d, |r, c| p.a()[(idx[r], c)]);
        let rhs = DVector::from_fn(d, |r, _| p.b()[idx[r]]);
        if let Some(x) = sub.lu().solve(&rhs) {
            if x.iter().all(|v| v.is_finite() && v.abs() < 1e12)
                && p.contains_with_tol(&x, 1e-7 * scale)
                && !verts.iter().any(|v| (v - &x).norm() < 1e-7 * scale)
            {
                verts.push(x);
            }
        }
        if !advance(&mut idx, m) {
            break;
        }
    }
    if verts.is_empty() {
        return Err(GeometryError::EmptyPolytope);
    }
    Ok(verts)
}

/// Area of a 2-D polytope (shoelace over angularly sorted vertices).
pub fn polygon_area(p: &HPolytope) -> Result<f64, GeometryError> {
    if p.dim() != 2 {
        return Err(GeometryError::DimMismatch("polygon_area needs 2-D".into()));
    }
    let vs = match vertices(p) {
        Ok(v) => v,
        Err(GeometryError::EmptyPolytope) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    if vs.len() < 3 {
        return Ok(0.0);
    }
    let cx: f64 = vs.iter().map(|v| v[0]).sum::<f64>() / vs.len() as f64;
    let cy: f64 = vs.iter().map(|v| v[1]).sum::<f64>() / vs.len() as f64;
    let mut order: Vec<usize> = (0..vs.len()).collect();
    order.sort_by(|&i, &j| {
        let ai = (vs[i][1] - cy).atan2(vs[i][0] - cx);
        let aj = (vs[j][1] - cy).atan2(vs[j][0] - cx);
        ai.partial_cmp(&aj).unwrap()
    });
    let mut area = 0.0;
    for k in 0..order.len() {
        let a = &vs[order[k]];
        let b = &vs[order[(k + 1) % order.len()]];
        area += a[0] * b[1] - b[0] * a[1];
    }
    Ok(0.5 * area.abs())
}

fn combos(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if r > COMBO_CAP {
            return r;
        }
    }
    r
}

fn advance(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AxisBox;
    use approx::assert_relative_eq;

    #[test]
    fn box_vertices() {
        let bx = AxisBox::symmetric(nalgebra::dvector![1.0, 2.0]).unwrap();
        let vs = vertices(&bx.to_polytope()).unwrap();
        assert_eq!(vs.len(), 4);
    }

    #[test]
    fn triangle_area() {
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        let b = nalgebra::dvector![0.0, 0.0, 1.0];
        let p = HPolytope::new(a, b).unwrap();
        assert_relative_eq!(polygon_area(&p).unwrap(), 0.5, epsilon = 1e-9);
    }
}
