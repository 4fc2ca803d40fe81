//! Exact linear images of polytopes.
//!
//! Three paths, in order of preference: invertible maps transform the
//! constraint matrix directly, images of axis boxes are zonotopes whose
//! facets are enumerated combinatorially, and everything else goes through
//! Fourier–Motzkin projection with redundancy elimination per eliminated
//! variable.

use nalgebra::{DMatrix, DVector};

use super::{AxisBox, GeometryError, HPolytope};

/// Exact H-representation of `{D x | x ∈ P}` for full-row-rank `D`.
pub fn linear_image(p: &HPolytope, d: &DMatrix<f64>) -> Result<HPolytope, GeometryError> {
    let (n_out, n_in) = d.shape();
    if n_in != p.dim() {
        return Err(GeometryError::DimMismatch(format!(
            "map expects dim {}, polytope has {}",
            n_in,
            p.dim()
        )));
    }
    if n_out > n_in {
        return Err(GeometryError::RankDeficient);
    }
    let svd = d.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values[n_out - 1];
    if smin <= 1e-10 * smax.max(1.0) {
        return Err(GeometryError::RankDeficient);
    }

    if n_out == n_in {
        let d_inv = d
            .clone()
            .try_inverse()
            .ok_or(GeometryError::RankDeficient)?;
        if !p.is_bounded() {
            return Err(GeometryError::UnboundedInput);
        }
        return HPolytope::new(p.a() * d_inv, p.b().clone());
    }

    if let Some(bx) = as_axis_box(p) {
        let center = d * bx.center();
        let hw = bx.half_widths();
        let gens: Vec<DVector<f64>> = (0..n_in)
            .filter(|&i| hw[i] > 1e-14)
            .map(|i| d.column(i) * hw[i])
            .collect();
        return zonotope_hrep(&center, &gens);
    }

    if !p.is_bounded() {
        return Err(GeometryError::UnboundedInput);
    }

    // General path: substitute a basic block of x using y = Dx, then
    // project out the remaining free coordinates.
    image_by_substitution(p, d)
}

/// Detect an axis-aligned box given as one-nonzero-per-row constraints.
fn as_axis_box(p: &HPolytope) -> Option<AxisBox> {
    let d = p.dim();
    let mut lo = DVector::from_element(d, f64::NEG_INFINITY);
    let mut hi = DVector::from_element(d, f64::INFINITY);
    for i in 0..p.num_rows() {
        let row = p.a().row(i);
        let mut nz = None;
        for j in 0..d {
            if row[j].abs() > 1e-14 {
                if nz.is_some() {
                    return None;
                }
                nz = Some(j);
            }
        }
        let j = nz?;
        let bound = p.b()[i] / row[j];
        if row[j] > 0.0 {
            hi[j] = hi[j].min(bound);
        } else {
            lo[j] = lo[j].max(bound);
        }
    }
    if lo.iter().any(|v| !v.is_finite()) || hi.iter().any(|v| !v.is_finite()) {
        return None;
    }
    AxisBox::new(lo, hi).ok()
}

/// Facet enumeration for a zonotope with the given center and generators.
///
/// A direction is a facet normal iff the generators orthogonal to it span a
/// `(n-1)`-dimensional space, so no LP-based redundancy pass is needed; the
/// output rows are exactly the facets.
pub fn zonotope_hrep(
    center: &DVector<f64>,
    gens: &[DVector<f64>],
) -> Result<HPolytope, GeometryError> {
    let n = center.len();
    let live: Vec<&DVector<f64>> = gens.iter().filter(|g| g.norm() > 1e-14).collect();

    // Rank check: a flat zonotope has no full-dimensional H-representation.
    let gmat = DMatrix::from_fn(n, live.len(), |i, j| live[j][i]);
    let rank = gmat.clone().svd(false, false).rank(1e-10);
    if n == 0 || rank < n {
        if n == 1 && !live.is_empty() {
            // 1-D interval.
            let half: f64 = live.iter().map(|g| g[0].abs()).sum();
            let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
            let b = DVector::from_vec(vec![center[0] + half, -(center[0] - half)]);
            return HPolytope::new(a, b);
        }
        return Err(GeometryError::DegenerateImage);
    }
    if n == 1 {
        let half: f64 = live.iter().map(|g| g[0].abs()).sum();
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![center[0] + half, -(center[0] - half)]);
        return HPolytope::new(a, b);
    }

    let m = live.len();
    let k = n - 1;
    if binomial(m, k) > 2_000_000 {
        return Err(GeometryError::Numerical(format!(
            "zonotope facet enumeration too large: C({m},{k})"
        )));
    }

    let mut normals: Vec<DVector<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        // Candidate normal: null direction of the selected generators.
        // Padding to a square matrix makes the SVD return the full V, whose
        // last row spans the (one-dimensional) null space when rank = n-1.
        let sub = DMatrix::from_fn(n, n, |r, c| if r < k { live[subset[r]][c] } else { 0.0 });
        let svd = sub.svd(false, true);
        let v_t = svd.v_t.as_ref().unwrap();
        let sv = &svd.singular_values;
        let rank_sub = sv.iter().filter(|&&s| s > 1e-10 * sv.max().max(1.0)).count();
        if rank_sub == k {
            let normal = v_t.row(n - 1).transpose();
            // Facet test: generators orthogonal to the normal span n-1 dims.
            let orth: Vec<usize> = (0..m)
                .filter(|&i| normal.dot(live[i]).abs() < 1e-9 * live[i].norm().max(1.0))
                .collect();
            if orth.len() >= k {
                let omat = DMatrix::from_fn(n, orth.len(), |r, c| live[orth[c]][r]);
                if omat.svd(false, false).rank(1e-9) == k {
                    push_unique_normal(&mut normals, normal);
                }
            }
        }
        if !next_combination(&mut subset, m) {
            break;
        }
    }

    let mut a = DMatrix::zeros(2 * normals.len(), n);
    let mut b = DVector::zeros(2 * normals.len());
    for (idx, nrm) in normals.iter().enumerate() {
        let spread: f64 = live.iter().map(|g| nrm.dot(g).abs()).sum();
        let c0 = nrm.dot(center);
        a.row_mut(2 * idx).copy_from(&nrm.transpose());
        b[2 * idx] = c0 + spread;
        a.row_mut(2 * idx + 1).copy_from(&(-nrm).transpose());
        b[2 * idx + 1] = -c0 + spread;
    }
    let mut p = HPolytope::new(a, b)?;
    p.normalize();
    Ok(p)
}

fn push_unique_normal(normals: &mut Vec<DVector<f64>>, mut n: DVector<f64>) {
    n /= n.norm();
    // Canonical orientation: first significant entry positive.
    if let Some(i) = n.iter().position(|v| v.abs() > 1e-9) {
        if n[i] < 0.0 {
            n = -n;
        }
    }
    for seen in normals.iter() {
        if (seen - &n).norm() < 1e-9 {
            return;
        }
    }
    normals.push(n);
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > 1 << 100 {
            return r;
        }
    }
    r
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    if k == 0 {
        return false;
    }
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

/// Image via substitution: with `y = Dx` and a basis split `x = (x_B, x_N)`
/// such that `D_B` is invertible, rewrite constraints over `(y, x_N)` and
/// Fourier–Motzkin eliminate `x_N`.
fn image_by_substitution(p: &HPolytope, d: &DMatrix<f64>) -> Result<HPolytope, GeometryError> {
    let (n_out, n_in) = d.shape();
    let free = n_in - n_out;

    // Pick a well-conditioned basic column set via column-pivoted greedy QR.
    let basis = pick_basis(d).ok_or(GeometryError::RankDeficient)?;
    let nonbasis: Vec<usize> = (0..n_in).filter(|i| !basis.contains(i)).collect();
    let d_b = DMatrix::from_fn(n_out, n_out, |r, c| d[(r, basis[c])]);
    let d_n = DMatrix::from_fn(n_out, free, |r, c| d[(r, nonbasis[c])]);
    let d_b_inv = d_b.try_inverse().ok_or(GeometryError::RankDeficient)?;

    // x_B = D_B⁻¹ (y − D_N x_N); constraints A x ≤ b become rows over (y, x_N).
    let a = p.a();
    let m = p.num_rows();
    let a_b = DMatrix::from_fn(m, n_out, |r, c| a[(r, basis[c])]);
    let a_n = DMatrix::from_fn(m, free, |r, c| a[(r, nonbasis[c])]);
    let t = &a_b * &d_b_inv; // m × n_out, multiplies y
    let w = &a_n - &t * &d_n; // m × free, multiplies x_N
    let mut c = DMatrix::zeros(m, n_out + free);
    c.view_mut((0, 0), (m, n_out)).copy_from(&t);
    c.view_mut((0, n_out), (m, free)).copy_from(&w);
    let e = p.b().clone();

    let projected = project_out(&c, &e, n_out)?;
    Ok(projected.reduce())
}

fn pick_basis(d: &DMatrix<f64>) -> Option<Vec<usize>> {
    let (n_out, n_in) = d.shape();
    let mut chosen: Vec<usize> = Vec::new();
    let mut work = DMatrix::zeros(n_out, 0);
    for _ in 0..n_out {
        let mut best = None;
        let mut best_score = 1e-9;
        for j in 0..n_in {
            if chosen.contains(&j) {
                continue;
            }
            let cand = work.clone().insert_column(work.ncols(), 0.0);
            let mut cand = cand;
            cand.column_mut(work.ncols()).copy_from(&d.column(j));
            let sv = cand.svd(false, false).singular_values;
            let score = sv[sv.len() - 1];
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        let j = best?;
        chosen.push(j);
        let mut w = DMatrix::zeros(n_out, chosen.len());
        for (k, &jj) in chosen.iter().enumerate() {
            w.column_mut(k).copy_from(&d.column(jj));
        }
        work = w;
    }
    chosen.sort_unstable();
    Some(chosen)
}

/// Fourier–Motzkin: eliminate all coordinates past the first `keep`,
/// reducing redundancy after each elimination to contain row growth.
pub(super) fn project_out(
    c: &DMatrix<f64>,
    e: &DVector<f64>,
    keep: usize,
) -> Result<HPolytope, GeometryError> {
    let mut cur_a = c.clone();
    let mut cur_b = e.clone();
    while cur_a.ncols() > keep {
        let col = cur_a.ncols() - 1;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut zero = Vec::new();
        for i in 0..cur_a.nrows() {
            let v = cur_a[(i, col)];
            if v > 1e-12 {
                pos.push(i);
            } else if v < -1e-12 {
                neg.push(i);
            } else {
                zero.push(i);
            }
        }
        let n_new = zero.len() + pos.len() * neg.len();
        if n_new > 200_000 {
            return Err(GeometryError::Numerical(
                "Fourier-Motzkin blow-up".to_string(),
            ));
        }
        let mut a_next = DMatrix::zeros(n_new, col);
        let mut b_next = DVector::zeros(n_new);
        let mut r = 0;
        for &i in &zero {
            for j in 0..col {
                a_next[(r, j)] = cur_a[(i, j)];
            }
            b_next[r] = cur_b[i];
            r += 1;
        }
        for &ip in &pos {
            for &im in &neg {
                let cp = cur_a[(ip, col)];
                let cm = -cur_a[(im, col)];
                for j in 0..col {
                    a_next[(r, j)] = cm * cur_a[(ip, j)] + cp * cur_a[(im, j)];
                }
                b_next[r] = cm * cur_b[ip] + cp * cur_b[im];
                r += 1;
            }
        }
        let p = HPolytope::new(a_next, b_next)?.reduce();
        cur_a = p.a().clone();
        cur_b = p.b().clone();
    }
    HPolytope::new(cur_a, cur_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_image_of_box() {
        let bx = AxisBox::new(nalgebra::dvector![0.0, 0.0], nalgebra::dvector![1.0, 1.0]).unwrap();
        let img = linear_image(&bx.to_polytope(), &DMatrix::identity(2, 2)).unwrap();
        let bb = img.bounding_box().unwrap();
        assert_relative_eq!(bb.lower()[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(bb.upper()[1], 1.0, epsilon = 1e-9);
        assert!(bb.contains(&nalgebra::dvector![0.5, 0.5], 0.0));
    }

    #[test]
    fn projection_of_square_to_line() {
        // Project the rotated square onto x: D = [1 1].
        let bx = AxisBox::symmetric(nalgebra::dvector![1.0, 1.0]).unwrap();
        let d = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let img = linear_image(&bx.to_polytope(), &d).unwrap();
        let hi = img.support(&nalgebra::dvector![1.0]).unwrap().0;
        assert_relative_eq!(hi, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn zonotope_square_rotated() {
        // Generators (1,1) and (1,-1): a square rotated 45°.
        let c = nalgebra::dvector![0.0, 0.0];
        let g = vec![nalgebra::dvector![1.0, 1.0], nalgebra::dvector![1.0, -1.0]];
        let p = zonotope_hrep(&c, &g).unwrap();
        assert_eq!(p.num_rows(), 4);
        assert!(p.contains(&nalgebra::dvector![2.0, 0.0]));
        assert!(!p.contains(&nalgebra::dvector![2.0, 0.5]));
    }

    #[test]
    fn degenerate_zonotope_rejected() {
        let c = nalgebra::dvector![0.0, 0.0];
        let g = vec![nalgebra::dvector![1.0, 0.0]];
        assert!(matches!(
            zonotope_hrep(&c, &g),
            Err(GeometryError::DegenerateImage)
        ));
    }

    #[test]
    fn rank_deficient_map_rejected() {
        let bx = AxisBox::symmetric(nalgebra::dvector![1.0, 1.0]).unwrap();
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(matches!(
            linear_image(&bx.to_polytope(), &d),
            Err(GeometryError::RankDeficient)
        ));
    }

    #[test]
    fn general_path_matches_zonotope_path() {
        // Non-box hexagon in 3D mapped to 2D: compare substitution result
        // with supports sampled directly.
        let bx = AxisBox::symmetric(nalgebra::dvector![1.0, 2.0, 0.5]).unwrap();
        // Chop a corner so the box detection fails.
        let cut = HPolytope::new(
            DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            nalgebra::dvector![3.0],
        )
        .unwrap();
        let p = bx.to_polytope().intersect(&cut).unwrap();
        let d = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, -1.0]);
        let img = linear_image(&p, &d).unwrap();
        for dir in [
            nalgebra::dvector![1.0, 0.0],
            nalgebra::dvector![0.3, -1.0],
            nalgebra::dvector![-0.8, 0.6],
        ] {
            // Support of the image equals support of P in Dᵀdir.
            let lifted = d.transpose() * &dir;
            let expect = p.support(&lifted).unwrap().0;
            let got = img.support(&dir).unwrap().0;
            assert_relative_eq!(got, expect, epsilon = 1e-7);
        }
    }
}
