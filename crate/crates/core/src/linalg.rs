//! Small dense linear algebra: LU with partial pivoting and a Jacobi
//! eigensolver for symmetric matrices. Problem sizes here are tiny
//! (Gel'fand-Levitan rows and Darboux workspaces), so no structure
//! exploitation is attempted.

/// Row-major square matrix stored as nested vectors.
pub type Mat = Vec<Vec<f64>>;

pub fn zeros(n: usize) -> Mat {
    vec![vec![0.0; n]; n]
}

pub struct LuFactors {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
}

/// LU factorization with partial pivoting. Returns `None` when a pivot
/// is exactly zero (structurally singular input).
pub fn lu_factor(a: &Mat) -> Option<LuFactors> {
    let n = a.len();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[k][k].abs();
        for i in k + 1..n {
            if lu[i][k].abs() > best {
                best = lu[i][k].abs();
                p = i;
            }
        }
        if best == 0.0 {
            return None;
        }
        if p != k {
            lu.swap(p, k);
            perm.swap(p, k);
            sign = -sign;
        }
        let pivot = lu[k][k];
        for i in k + 1..n {
            let m = lu[i][k] / pivot;
            lu[i][k] = m;
            for j in k + 1..n {
                lu[i][j] -= m * lu[k][j];
            }
        }
    }
    Some(LuFactors { lu, perm, sign })
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] = x[i] - self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    pub fn determinant(&self) -> f64 {
        let mut d = self.sign;
        for i in 0..self.lu.len() {
            d *= self.lu[i][i];
        }
        d
    }

    /// Crude condition estimate: ratio of extreme pivot magnitudes.
    pub fn pivot_ratio(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..self.lu.len() {
            let p = self.lu[i][i].abs();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

pub fn determinant(a: &Mat) -> f64 {
    match lu_factor(a) {
        Some(f) => f.determinant(),
        None => 0.0,
    }
}

pub fn mat_vec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compensated dot product (Ogita–Rump–Oishi dot2): the result carries
/// roughly twice the working precision, which lets iterative refinement
/// converge past the condition-number floor of a plain solve.
pub fn dot_compensated(a: &[f64], b: &[f64]) -> f64 {
    let mut main = 0.0f64;
    let mut comp = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let prod = x * y;
        let prod_err = x.mul_add(y, -prod);
        let sum = main + prod;
        let sum_err = if main.abs() >= prod.abs() {
            (main - sum) + prod
        } else {
            (prod - sum) + main
        };
        main = sum;
        comp += prod_err + sum_err;
    }
    main + comp
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order. Classic Numerical Recipes scheme;
/// adequate for the small workspace matrices used here.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[0][0]];
    }
    let mut m = a.clone();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off += m[p][q].abs();
            }
        }
        if off < 1e-300 {
            break;
        }
        let scale: f64 = (0..n).map(|i| m[i][i].abs()).fold(off, f64::max);
        if off <= 1e-15 * scale.max(1e-300) {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = m[i][p];
                    let aiq = m[i][q];
                    m[i][p] = c * aip - s * aiq;
                    m[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = m[p][j];
                    let aqj = m[q][j];
                    m[p][j] = c * apj - s * aqj;
                    m[q][j] = s * apj + c * aqj;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}
