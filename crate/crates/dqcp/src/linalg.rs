//! Small dense linear algebra: just what the solver and atom evaluators need.
//! Row-major storage, desk-scale sizes.

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Mat {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// y = Aᵀ x
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += a * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// AᵀA as a symmetric cols×cols matrix.
    pub fn gram(&self) -> Mat {
        let n = self.cols;
        let mut g = Mat::zeros(n, n);
        for k in 0..self.rows {
            let row = &self.data[k * n..(k + 1) * n];
            for i in 0..n {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..n {
                    let v = g.get(i, j) + ri * row[j];
                    g.set(i, j, v);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                let v = g.get(j, i);
                g.set(i, j, v);
            }
        }
        g
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
/// Stores the lower factor L with A = L Lᵀ.
pub struct Cholesky {
    l: Mat,
}

impl Cholesky {
    pub fn new(a: &Mat) -> Result<Cholesky, &'static str> {
        let n = a.rows;
        if a.cols != n {
            return Err("cholesky: matrix must be square");
        }
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err("cholesky: matrix is not positive definite");
                    }
                    l.set(i, i, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Ok(Cholesky { l })
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = self.forward(b);
        self.backward_in_place(&mut y);
        y
    }

    /// Solve L y = b.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.get(i, k) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        y
    }

    /// Solve Lᵀ x = y in place.
    pub fn backward_in_place(&self, y: &mut [f64]) {
        let n = self.l.rows;
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l.get(k, i) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
    }

    pub fn lower(&self) -> &Mat {
        &self.l
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors); column j of the returned matrix is
/// the eigenvector for eigenvalue j. Unsorted.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.rows;
    assert_eq!(a.cols, n, "jacobi: matrix must be square");
    let mut a = a.clone();
    let mut v = Mat::identity(n);
    if n <= 1 {
        return (a.data.clone(), v);
    }
    let scale = a.max_abs().max(1e-300);
    let tol = 1e-14 * scale;
    const MAX_SWEEPS: usize = 60;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e150 {
                    // Avoid overflow in theta*theta.
                    0.5 / theta
                } else {
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Update A = Jᵀ A J on rows/cols p, q.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eig = (0..n).map(|i| a.get(i, i)).collect();
    (eig, v)
}

/// Largest generalized eigenvalue of the symmetric pair (A, B) with B ≻ 0,
/// computed as the largest eigenvalue of L⁻¹ A L⁻ᵀ where B = L Lᵀ.
pub fn gen_eig_max(a: &Mat, b: &Mat) -> Result<f64, &'static str> {
    let n = a.rows;
    if a.cols != n || b.rows != n || b.cols != n {
        return Err("gen_eig_max: dimension mismatch");
    }
    let chol = Cholesky::new(b)?;
    // C = L⁻¹ A L⁻ᵀ, built column by column.
    let mut c = Mat::zeros(n, n);
    for j in 0..n {
        // Solve L w = A e_j', where we first need (A L⁻ᵀ) e_j.
        // Compute M = A L⁻ᵀ column j: solve Lᵀ z = e_j, then M_j = A z.
        let mut z = vec![0.0; n];
        z[j] = 1.0;
        chol.backward_in_place(&mut z);
        let col = a.matvec(&z);
        let w = chol.forward(&col);
        for i in 0..n {
            c.set(i, j, w[i]);
        }
    }
    // Symmetrize against roundoff.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (c.get(i, j) + c.get(j, i));
            c.set(i, j, m);
            c.set(j, i, m);
        }
    }
    let (eig, _) = jacobi_eigen(&c);
    Ok(eig.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let a = Mat::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -0.2],
            vec![0.5, -0.2, 2.0],
        ]);
        let chol = Cholesky::new(&a).unwrap();
        let x_true = vec![1.0, -2.0, 0.25];
        let b = a.matvec(&x_true);
        let x = chol.solve(&b);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(Cholesky::new(&a).is_err());
    }

    #[test]
    fn jacobi_2x2_matches_characteristic_roots() {
        // Closed form: eigenvalues of [[a,b],[b,c]] are
        // (a+c)/2 ± sqrt(((a-c)/2)^2 + b^2).
        let cases = [
            (2.0, 1.0, 2.0),
            (3.0, -4.0, 1.0),
            (-1.0, 0.3, 5.0),
            (0.0, 2.0, 0.0),
        ];
        for (a, b, c) in cases {
            let m = Mat::from_rows(&[vec![a, b], vec![b, c]]);
            let (eig, v) = jacobi_eigen(&m);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let expect = sorted(vec![mid - rad, mid + rad]);
            let got = sorted(eig.clone());
            for (g, e) in got.iter().zip(&expect) {
                assert!((g - e).abs() < 1e-8, "case {a},{b},{c}: {g} vs {e}");
            }
            // A v = lambda v
            for j in 0..2 {
                let col = vec![v.get(0, j), v.get(1, j)];
                let av = m.matvec(&col);
                for i in 0..2 {
                    assert!((av[i] - eig[j] * col[i]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn jacobi_3x3_matches_characteristic_roots() {
        // Cubic roots via the trigonometric method, as an independent check.
        let m = Mat::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 0.5],
            vec![0.0, 0.5, 1.0],
        ]);
        let (eig, _) = jacobi_eigen(&m);
        // Characteristic polynomial x^3 + a x^2 + b x + c with
        // a = -trace, b = sum of principal 2x2 minors, c = -det.
        let trace: f64 = 6.0;
        let sum_minors = (2.0 * 3.0 - 1.0) + (2.0 * 1.0 - 0.0) + (3.0 * 1.0 - 0.25);
        let det = 2.0 * (3.0 - 0.25) - 1.0 * (1.0 - 0.0);
        let a = -trace;
        let b = sum_minors;
        let c = -det;
        let pp = b - a * a / 3.0;
        let qp = 2.0 * a.powi(3) / 27.0 - a * b / 3.0 + c;
        let r = (-pp / 3.0f64).sqrt();
        let phi = (3.0 * qp / (2.0 * pp * r)).clamp(-1.0, 1.0).acos() / 3.0;
        let shift = -a / 3.0;
        let roots = sorted(vec![
            shift + 2.0 * r * phi.cos(),
            shift + 2.0 * r * (phi - 2.0 * std::f64::consts::PI / 3.0).cos(),
            shift + 2.0 * r * (phi - 4.0 * std::f64::consts::PI / 3.0).cos(),
        ]);
        let got = sorted(eig);
        for (g, e) in got.iter().zip(&roots) {
            assert!((g - e).abs() < 1e-8, "{g} vs {e}");
        }
    }

    #[test]
    fn gen_eig_of_identity_pair_is_max_eigenvalue() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let b = Mat::identity(2);
        let lam = gen_eig_max(&a, &b).unwrap();
        assert!((lam - 3.0).abs() < 1e-10);
    }

    #[test]
    fn gen_eig_scales_with_b() {
        let a = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 6.0]]);
        let b = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        // Generalized eigenvalues are 2/1 and 6/2.
        let lam = gen_eig_max(&a, &b).unwrap();
        assert!((lam - 3.0).abs() < 1e-10);
    }
}
