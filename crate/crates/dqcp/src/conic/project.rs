//! Euclidean projections onto the supported cones.

use super::Cone;
use crate::linalg::{jacobi_eigen, Mat};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Project each block of `v` onto its cone, in place.
pub fn project_product(blocks: &[Cone], v: &mut [f64]) {
    let mut at = 0;
    for c in blocks {
        let d = c.dim();
        project_cone(c, &mut v[at..at + d]);
        at += d;
    }
}

pub fn project_cone(cone: &Cone, v: &mut [f64]) {
    assert_eq!(v.len(), cone.dim(), "projection dimension mismatch");
    match *cone {
        Cone::Zero(_) => v.fill(0.0),
        Cone::NonNeg(_) => {
            for x in v.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
        Cone::Soc(_) => project_soc(v),
        Cone::Rsoc(_) => project_rsoc(v),
        Cone::Psd(n) => project_psd(n, v),
        Cone::Exp(k) => {
            for i in 0..k {
                let p = project_exp([v[3 * i], v[3 * i + 1], v[3 * i + 2]]);
                v[3 * i..3 * i + 3].copy_from_slice(&p);
            }
        }
    }
}

/// Second-order cone {(t, x) : |x| <= t}; the standard three-case formula.
fn project_soc(v: &mut [f64]) {
    let t = v[0];
    let nx = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if nx <= t {
        return;
    }
    if nx <= -t {
        v.fill(0.0);
        return;
    }
    let tau = 0.5 * (t + nx);
    let scale = tau / nx;
    v[0] = tau;
    for x in v[1..].iter_mut() {
        *x *= scale;
    }
}

/// Rotated second-order cone {(u, w, z) : 2 u w >= |z|^2, u, w >= 0},
/// projected by rotating into the standard cone.
fn project_rsoc(v: &mut [f64]) {
    let (u, w) = (v[0], v[1]);
    v[0] = (u + w) / SQRT2;
    v[1] = (u - w) / SQRT2;
    // Rotated coordinates (t, x1, z...) form a standard second-order cone
    // with x1 in the vector part.
    let mut soc: Vec<f64> = Vec::with_capacity(v.len());
    soc.push(v[0]);
    soc.push(v[1]);
    soc.extend_from_slice(&v[2..]);
    project_soc(&mut soc);
    let (t, x1) = (soc[0], soc[1]);
    v[0] = (t + x1) / SQRT2;
    v[1] = (t - x1) / SQRT2;
    v[2..].copy_from_slice(&soc[2..]);
}

/// Pack a symmetric matrix into scaled lower-triangle coordinates
/// (column order, off-diagonals times sqrt 2). Preserves norms.
pub fn svec(m: &Mat) -> Vec<f64> {
    let n = m.rows;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            if i == j {
                out.push(m.get(i, i));
            } else {
                out.push(SQRT2 * m.get(i, j));
            }
        }
    }
    out
}

pub fn smat(n: usize, v: &[f64]) -> Mat {
    let mut m = Mat::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            if i == j {
                m.set(i, i, v[k]);
            } else {
                let x = v[k] / SQRT2;
                m.set(i, j, x);
                m.set(j, i, x);
            }
            k += 1;
        }
    }
    m
}

fn project_psd(n: usize, v: &mut [f64]) {
    let m = smat(n, v);
    let (eig, q) = jacobi_eigen(&m);
    let mut out = Mat::zeros(n, n);
    for (k, &lam) in eig.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            let qik = q.get(i, k);
            if qik == 0.0 {
                continue;
            }
            for j in 0..n {
                let add = lam * qik * q.get(j, k);
                out.set(i, j, out.get(i, j) + add);
            }
        }
    }
    v.copy_from_slice(&svec(&out));
}

// --- exponential cone ---------------------------------------------------
//
// Kexp = cl{(x, y, z) : y > 0, y e^{x/y} <= z}
//      = {y > 0, y e^{x/y} <= z} ∪ {y = 0, x <= 0, z >= 0}
// Kexp* = cl{(u, v, w) : u < 0, -u e^{v/u} <= e w} ∪ {u = 0, v >= 0, w >= 0}

pub fn in_exp_primal(x: f64, y: f64, z: f64, tol: f64) -> bool {
    if y > 0.0 {
        let a = x / y;
        if a > 709.0 {
            return false;
        }
        y * a.exp() <= z + tol
    } else if y >= -tol {
        x <= tol && z >= -tol
    } else {
        false
    }
}

pub fn in_exp_dual(u: f64, v: f64, w: f64, tol: f64) -> bool {
    if u < 0.0 {
        let a = v / u;
        if a > 709.0 {
            return false;
        }
        -u * a.exp() <= std::f64::consts::E * w + tol
    } else if u <= tol {
        v >= -tol && w >= -tol
    } else {
        false
    }
}

/// Optimal y for a fixed boundary slope a = x/y, from the quadratic
/// minimization of the squared distance along the ray.
fn y_for_slope(a: f64, r: f64, s: f64, t: f64) -> f64 {
    let ea = a.exp();
    (a * r + s + t * ea) / (a * a + 1.0 + ea * ea)
}

fn dist2_at(a: f64, r: f64, s: f64, t: f64) -> f64 {
    let y = y_for_slope(a, r, s, t);
    if !(y > 0.0) || !y.is_finite() {
        return f64::INFINITY;
    }
    let ea = a.exp();
    let dx = a * y - r;
    let dy = y - s;
    let dz = y * ea - t;
    dx * dx + dy * dy + dz * dz
}

/// Stationarity residual along the boundary curve (y already optimal).
fn stationarity(a: f64, r: f64, s: f64, t: f64) -> f64 {
    let y = y_for_slope(a, r, s, t);
    let ea = a.exp();
    (a * y - r) + (y * ea - t) * ea
}

/// Projection onto the exponential cone. Shortcut regions first, then a
/// safeguarded scan/bisection/Newton hybrid on the scalar stationarity
/// condition of the curved boundary.
pub fn project_exp(v: [f64; 3]) -> [f64; 3] {
    let (r, s, t) = (v[0], v[1], v[2]);
    let scale = 1.0 + (r * r + s * s + t * t).sqrt();
    let tol = 1e-12 * scale;

    if in_exp_primal(r, s, t, tol) {
        return [r, s, t];
    }
    // v in the polar cone: projection is the origin.
    if in_exp_dual(-r, -s, -t, tol) {
        return [0.0, 0.0, 0.0];
    }
    // Projection onto the y = 0 face {x <= 0, z >= 0}.
    if r <= 0.0 && s <= 0.0 {
        return [r, 0.0, t.max(0.0)];
    }

    // Scan the boundary slope for the distance minimizer.
    let mut lo = -48.0;
    let mut hi = 48.0;
    let mut best_a = 0.0;
    let mut best_d = f64::INFINITY;
    for round in 0..3 {
        let steps = 96;
        let h = (hi - lo) / steps as f64;
        for k in 0..=steps {
            let a = lo + h * k as f64;
            let d = dist2_at(a, r, s, t);
            if d < best_d {
                best_d = d;
                best_a = a;
            }
        }
        let at_edge = (best_a - lo).abs() < 1.5 * h || (hi - best_a).abs() < 1.5 * h;
        if !at_edge || round == 2 {
            // Golden-section refine around the best grid point.
            let (mut a1, mut a2) = (best_a - h, best_a + h);
            let phi = 0.5 * (3.0 - 5.0f64.sqrt());
            for _ in 0..64 {
                let m1 = a1 + phi * (a2 - a1);
                let m2 = a2 - phi * (a2 - a1);
                if dist2_at(m1, r, s, t) < dist2_at(m2, r, s, t) {
                    a2 = m2;
                } else {
                    a1 = m1;
                }
            }
            best_a = 0.5 * (a1 + a2);
            break;
        }
        lo *= 4.0;
        hi *= 4.0;
        lo = lo.max(-340.0);
        hi = hi.min(340.0);
    }

    // Polish the stationarity root with safeguarded Newton (secant slope),
    // falling back to bisection when a sign bracket exists.
    let mut a = best_a;
    let mut blo = a - 1e-3;
    let mut bhi = a + 1e-3;
    let (glo, ghi) = (stationarity(blo, r, s, t), stationarity(bhi, r, s, t));
    let bracketed = glo.is_finite() && ghi.is_finite() && glo * ghi <= 0.0;
    for _ in 0..40 {
        let g = stationarity(a, r, s, t);
        if !g.is_finite() {
            break;
        }
        let h = 1e-7 * (1.0 + a.abs());
        let gp = (stationarity(a + h, r, s, t) - stationarity(a - h, r, s, t)) / (2.0 * h);
        let mut step = if gp.abs() > 1e-300 { -g / gp } else { 0.0 };
        if bracketed {
            if g * glo < 0.0 {
                bhi = a;
            } else {
                blo = a;
            }
            if !(a + step > blo && a + step < bhi) {
                step = 0.5 * (blo + bhi) - a;
            }
        }
        if step.abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        // Reject steps that worsen the distance.
        let cand = a + step;
        if dist2_at(cand, r, s, t) <= dist2_at(a, r, s, t) + 1e-18 * scale * scale {
            a = cand;
        } else {
            a += 0.5 * step;
        }
    }

    let y = y_for_slope(a, r, s, t);
    if !(y > 0.0) || !y.is_finite() {
        // Degenerate: fall back to the flat face.
        return [r.min(0.0), 0.0, t.max(0.0)];
    }
    [a * y, y, y * a.exp()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn nonneg_clamps() {
        let mut v = vec![-1.0, 2.0];
        project_cone(&Cone::NonNeg(2), &mut v);
        assert_eq!(v, vec![0.0, 2.0]);
    }

    #[test]
    fn soc_interior_unchanged() {
        let mut v = vec![2.0, 1.0, 1.0];
        let orig = v.clone();
        project_cone(&Cone::Soc(3), &mut v);
        assert_eq!(v, orig);
    }

    #[test]
    fn soc_polar_maps_to_zero() {
        // (-|x|, x) is in the polar cone.
        let mut v = vec![-(2.0f64.sqrt()), 1.0, 1.0];
        project_cone(&Cone::Soc(3), &mut v);
        assert!(norm(&v) < 1e-12);
    }

    #[test]
    fn psd_clamps_negative_eigenvalue() {
        // diag(-1, 3) in svec coordinates.
        let m = Mat::from_rows(&[vec![-1.0, 0.0], vec![0.0, 3.0]]);
        let mut v = svec(&m);
        project_cone(&Cone::Psd(2), &mut v);
        let out = smat(2, &v);
        assert!((out.get(0, 0) - 0.0).abs() < 1e-12);
        assert!((out.get(1, 1) - 3.0).abs() < 1e-12);
        assert!(out.get(0, 1).abs() < 1e-12);
    }

    #[test]
    fn svec_preserves_norm() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, -3.0]]);
        let v = svec(&m);
        let frob: f64 = m.data.iter().map(|x| x * x).sum::<f64>();
        assert!((norm(&v).powi(2) - frob).abs() < 1e-12);
        let back = smat(2, &v);
        assert_eq!(back, m);
    }

    #[test]
    fn rsoc_matches_definition() {
        // A point already in the cone stays put.
        let mut v = vec![1.0, 2.0, 1.5]; // 2*1*2 = 4 >= 2.25
        let orig = v.clone();
        project_cone(&Cone::Rsoc(3), &mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-12);
        }
        // Outside point lands on the boundary.
        let mut v = vec![0.1, 0.1, 2.0];
        project_cone(&Cone::Rsoc(3), &mut v);
        let (u, w, z) = (v[0], v[1], v[2]);
        assert!(u >= 0.0 && w >= 0.0);
        assert!((2.0 * u * w - z * z).abs() < 1e-8);
    }

    #[test]
    fn exp_interior_unchanged() {
        let p = project_exp([0.0, 1.0, 2.0]); // 1*e^0 = 1 <= 2
        assert_eq!(p, [0.0, 1.0, 2.0]);
    }

    #[test]
    fn exp_polar_to_zero() {
        // -(u,v,w) with (u,v,w) in the dual cone: take u=-1, v=0, w=1/e
        // (boundary of dual) and step inside.
        let p = project_exp([1.0, -1.0, -1.0]);
        assert!(norm(&p) < 1e-9, "{p:?}");
    }

    #[test]
    fn exp_flat_face() {
        let p = project_exp([-1.0, -2.0, 3.0]);
        assert_eq!(p, [-1.0, 0.0, 3.0]);
        let p = project_exp([-1.0, -2.0, -3.0]);
        assert_eq!(p, [-1.0, 0.0, 0.0]);
    }

    #[test]
    fn exp_projection_kkt() {
        // For points needing the root-find, check p in K, q = p - v in K*,
        // and orthogonality.
        let cases = [
            [1.0, 1.0, 1.0],
            [2.0, 0.5, 0.3],
            [0.7, -0.2, 1.4],
            [5.0, 1.0, 2.0],
            [-0.3, 2.0, -1.0],
            [10.0, 0.1, 50.0],
        ];
        for v in cases {
            let p = project_exp(v);
            let scale = 1.0 + norm(&v);
            assert!(
                in_exp_primal(p[0], p[1], p[2], 1e-8 * scale),
                "p not in cone for {v:?}: {p:?}"
            );
            let q = [p[0] - v[0], p[1] - v[1], p[2] - v[2]];
            assert!(
                in_exp_dual(q[0], q[1], q[2], 1e-7 * scale),
                "q not in dual for {v:?}: {q:?}"
            );
            let ip: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
            assert!(ip.abs() < 1e-6 * scale * scale, "not orthogonal for {v:?}: {ip}");
        }
    }

    #[test]
    fn exp_projection_idempotent() {
        for v in [[1.0, 1.0, 1.0], [3.0, -1.0, 0.5], [-2.0, 4.0, -3.0]] {
            let p = project_exp(v);
            let pp = project_exp(p);
            let d = norm(&[pp[0] - p[0], pp[1] - p[1], pp[2] - p[2]]);
            assert!(d <= 1e-10, "{v:?}: moved {d}");
        }
    }
}
