//! Small dense linear algebra: real/complex 3-vectors, complex 3x3 tensors,
//! and a Hermitian eigensolver for the modest dense matrices that show up in
//! spectral diagnostics (at most a few hundred rows).

use num_complex::Complex64;

pub type C64 = Complex64;
/// Real 3-vector (directions, sampling points).
pub type Vec3 = [f64; 3];
/// Complex 3-vector (field values).
pub type CVec3 = [C64; 3];
/// Complex 3x3 tensor, row major.
pub type CMat3 = [[C64; 3]; 3];

pub const ZERO_CVEC3: CVec3 = [C64::new(0.0, 0.0); 3];

// ---------------------------------------------------------------------------
// Real 3-vector helpers
// ---------------------------------------------------------------------------

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

// ---------------------------------------------------------------------------
// Complex 3-vector helpers
// ---------------------------------------------------------------------------

pub fn to_complex(a: Vec3) -> CVec3 {
    [a[0].into(), a[1].into(), a[2].into()]
}

pub fn cdot_rc(a: Vec3, b: CVec3) -> C64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

/// Hermitian inner product `sum_i a_i conj(b_i)`.
pub fn cdot(a: CVec3, b: CVec3) -> C64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

pub fn cnorm_sq(a: CVec3) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()
}

pub fn cnorm(a: CVec3) -> f64 {
    cnorm_sq(a).sqrt()
}

pub fn cadd(a: CVec3, b: CVec3) -> CVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn csub(a: CVec3, b: CVec3) -> CVec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cscale(a: CVec3, s: C64) -> CVec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn ccross_rc(a: Vec3, b: CVec3) -> CVec3 {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

pub fn ccross_cr(a: CVec3, b: Vec3) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

// ---------------------------------------------------------------------------
// Complex 3x3 tensors
// ---------------------------------------------------------------------------

pub const CMAT3_ZERO: CMat3 = [[C64::new(0.0, 0.0); 3]; 3];

pub fn cmat3_identity() -> CMat3 {
    let mut m = CMAT3_ZERO;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

pub fn cmat3_diag(d: [C64; 3]) -> CMat3 {
    let mut m = CMAT3_ZERO;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = d[i];
    }
    m
}

pub fn cmat3_scale(m: &CMat3, s: C64) -> CMat3 {
    let mut out = CMAT3_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[i][j] * s;
        }
    }
    out
}

pub fn cmat3_add(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = CMAT3_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] + b[i][j];
        }
    }
    out
}

pub fn cmat3_sub(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = CMAT3_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

pub fn cmat3_mul(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = CMAT3_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let mut s = C64::new(0.0, 0.0);
            for (l, brow) in b.iter().enumerate() {
                s += a[i][l] * brow[j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn cmat3_matvec(m: &CMat3, v: CVec3) -> CVec3 {
    let mut out = ZERO_CVEC3;
    for (i, row) in m.iter().enumerate() {
        out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

pub fn cmat3_frobenius(m: &CMat3) -> f64 {
    m.iter()
        .flatten()
        .map(|e| e.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Largest absolute entry of `m - m^T` (plain transpose, no conjugation).
pub fn cmat3_asymmetry(m: &CMat3) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((m[i][j] - m[j][i]).norm());
        }
    }
    worst
}

/// Hermitian part `(m + m^H) / 2`.
pub fn cmat3_hermitian_part(m: &CMat3) -> CMat3 {
    let mut out = CMAT3_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (m[i][j] + m[j][i].conj()) * 0.5;
        }
    }
    out
}

/// Skew part `(m - m^H) / (2i)`, itself Hermitian.
pub fn cmat3_skew_part(m: &CMat3) -> CMat3 {
    let half_over_i = C64::new(0.0, -0.5);
    let mut out = CMAT3_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (m[i][j] - m[j][i].conj()) * half_over_i;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Dense complex matrices
// ---------------------------------------------------------------------------

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// `A^H x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![C64::new(0.0, 0.0); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (j, &aij) in row.iter().enumerate() {
                y[j] += aij.conj() * xi;
            }
        }
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of `A - A^H` (square matrices).
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Spectral norm via the Hermitian eigendecomposition of `A^H A`.
    pub fn operator_norm(&self) -> f64 {
        let n = self.cols;
        let mut gram = CMatrix::zeros(n, n);
        for i in 0..self.rows {
            let row = &self.data[i * n..(i + 1) * n];
            for a in 0..n {
                let ra = row[a].conj();
                for b in 0..n {
                    gram[(a, b)] += ra * row[b];
                }
            }
        }
        let eig = hermitian_eigen(&gram);
        eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// `vectors[k]` is the orthonormal eigenvector for `values[k]`.
    pub vectors: Vec<Vec<C64>>,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Deterministic and accurate to machine-precision level for the moderate
/// sizes used here (3x3 material tensors up to a few hundred rows of
/// far-field operators). The input must be Hermitian; only the given entries
/// are read, no symmetrisation is applied.
pub fn hermitian_eigen(a: &CMatrix) -> HermitianEigen {
    assert!(a.is_square(), "hermitian_eigen needs a square matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);

    let off = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let scale: f64 = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    let max_sweeps = 60;

    for _ in 0..max_sweeps {
        if off(&m) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= tol / (n as f64) {
                    continue;
                }
                // Unitary rotation U = [[c, s e^{i phi}], [-s e^{-i phi}, c]]
                // acting on the (p, q) plane, with phi the phase of a_pq and
                // theta chosen to zero the rotated off-diagonal entry:
                //   (a_pp - a_qq) c s + |a_pq| (c^2 - s^2) = 0.
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let abs = apq.norm();
                let phase = apq / abs; // e^{i phi}
                let theta = 0.5 * (2.0 * abs).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                let sp = phase * s; // s e^{i phi}
                for i in 0..n {
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = aip * c - aiq * sp.conj();
                    m[(i, q)] = aip * sp + aiq * c;
                }
                for j in 0..n {
                    let apj = m[(p, j)];
                    let aqj = m[(q, j)];
                    m[(p, j)] = apj * c - aqj * sp;
                    m[(q, j)] = apj * sp.conj() + aqj * c;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * sp.conj();
                    v[(i, q)] = vip * sp + viq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|row| v[(row, col)]).collect())
        .collect();
    HermitianEigen { values, vectors }
}

/// Smallest and largest eigenvalue of the Hermitian part of a 3x3 tensor.
pub fn cmat3_hermitian_eigen_bounds(m: &CMat3) -> (f64, f64) {
    let mut a = CMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            a[(i, j)] = m[i][j];
        }
    }
    let eig = hermitian_eigen(&a);
    (eig.values[0], eig.values[2])
}
