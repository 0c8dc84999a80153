//! Restarted GMRES for the complex non-Hermitian volume-integral system.
//!
//! Modified Gram-Schmidt Arnoldi with Givens rotations on the Hessenberg
//! matrix; the residual is tracked through the rotated right-hand side, so
//! each iteration costs one operator application.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    /// Relative residual target.
    pub tol: f64,
    /// Krylov dimension before restart.
    pub restart: usize,
    /// Total iteration budget across restarts.
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-6,
            restart: 50,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `A x = b` with `apply` computing `A x`.
pub fn gmres<F>(mut apply: F, b: &[C64], x0: Option<&[C64]>, cfg: &GmresConfig) -> GmresOutcome
where
    F: FnMut(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let b_norm = norm(b);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![C64::new(0.0, 0.0); n],
    };
    if b_norm == 0.0 {
        return GmresOutcome {
            x: vec![C64::new(0.0, 0.0); n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }

    let mut total_iter = 0usize;
    let mut last_residual;

    loop {
        let ax = apply(&x);
        let mut r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let r_norm = norm(&r);
        last_residual = r_norm / b_norm;
        if last_residual <= cfg.tol {
            return GmresOutcome {
                x,
                iterations: total_iter,
                residual: last_residual,
                converged: true,
            };
        }
        if total_iter >= cfg.max_iter {
            break;
        }

        let m = cfg.restart.min(n).max(1);
        let inv = 1.0 / r_norm;
        for v in r.iter_mut() {
            *v *= inv;
        }
        let mut basis: Vec<Vec<C64>> = vec![r];
        // column j of the Hessenberg matrix, rows 0..=j+1
        let mut hcols: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(r_norm, 0.0);
        let mut cs: Vec<C64> = Vec::with_capacity(m);
        let mut sn: Vec<C64> = Vec::with_capacity(m);
        let mut k = 0usize;

        while k < m && total_iter < cfg.max_iter {
            total_iter += 1;
            let mut w = apply(&basis[k]);
            let mut h = vec![C64::new(0.0, 0.0); k + 2];
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(vj, &w);
                h[j] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let w_norm = norm(&w);
            h[k + 1] = C64::new(w_norm, 0.0);

            // previously accumulated rotations
            for j in 0..k {
                let t = cs[j].conj() * h[j] + sn[j].conj() * h[j + 1];
                h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            // new rotation eliminating h[k+1]
            let (c, s) = {
                let a = h[k];
                let bb = h[k + 1];
                let scale = (a.norm_sqr() + bb.norm_sqr()).sqrt();
                if scale == 0.0 {
                    (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
                } else {
                    (a / scale, bb / scale)
                }
            };
            let t = c.conj() * h[k] + s.conj() * h[k + 1];
            h[k] = t;
            h[k + 1] = C64::new(0.0, 0.0);
            let tg = c.conj() * g[k] + s.conj() * g[k + 1];
            g[k + 1] = -s * g[k] + c * g[k + 1];
            g[k] = tg;
            cs.push(c);
            sn.push(s);
            hcols.push(h);

            let implied = g[k + 1].norm() / b_norm;
            if w_norm <= 1e-14 * b_norm {
                // exact breakdown: solution lies in the current subspace
                k += 1;
                break;
            }
            let invw = 1.0 / w_norm;
            basis.push(w.into_iter().map(|z| z * invw).collect());
            k += 1;
            if implied <= cfg.tol {
                break;
            }
        }

        // back-substitute the k x k triangular system
        let mut y = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in (i + 1)..k {
                s -= hcols[j][i] * y[j];
            }
            let hii = hcols[i][i];
            if hii.norm() > 0.0 {
                y[i] = s / hii;
            }
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }

    GmresOutcome {
        x,
        iterations: total_iter,
        residual: last_residual,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply_dense(a: &[Vec<C64>]) -> impl FnMut(&[C64]) -> Vec<C64> + '_ {
        move |x: &[C64]| {
            a.iter()
                .map(|row| row.iter().zip(x).map(|(r, xi)| r * xi).sum())
                .collect()
        }
    }

    #[test]
    fn diagonal_system() {
        let n = 12;
        let diag: Vec<C64> = (1..=n)
            .map(|i| C64::new(i as f64, 0.3 * i as f64))
            .collect();
        let b: Vec<C64> = diag.iter().map(|d| d * C64::new(2.0, -1.0)).collect();
        let out = gmres(
            |x| x.iter().zip(&diag).map(|(xi, d)| xi * d).collect(),
            &b,
            None,
            &GmresConfig::default(),
        );
        assert!(out.converged);
        for xi in &out.x {
            assert!((xi - C64::new(2.0, -1.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let b = vec![C64::new(0.0, 0.0); 5];
        let out = gmres(|x| x.to_vec(), &b, None, &GmresConfig::default());
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn identity_with_matching_guess_converges_instantly() {
        let b: Vec<C64> = (0..8).map(|i| C64::new(i as f64, -0.5)).collect();
        let out = gmres(|x| x.to_vec(), &b, Some(&b), &GmresConfig::default());
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert!(out.residual == 0.0);
    }

    #[test]
    fn dense_nonhermitian_with_restart() {
        // A = I + N with a strictly lower-triangular complex N: well
        // conditioned, non-Hermitian.
        let n = 20;
        let mut a = vec![vec![C64::new(0.0, 0.0); n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = C64::new(1.0, 0.0);
            for (j, e) in row.iter_mut().enumerate().take(i) {
                *e += C64::new(
                    0.2 * ((i * 7 + j * 3) as f64).sin(),
                    0.1 * ((i + 2 * j) as f64).cos(),
                );
            }
        }
        let xtrue: Vec<C64> = (0..n).map(|i| C64::new((i as f64).cos(), 0.5)).collect();
        let b = apply_dense(&a)(&xtrue);
        let cfg = GmresConfig {
            tol: 1e-10,
            restart: 7,
            max_iter: 400,
        };
        let out = gmres(apply_dense(&a), &b, None, &cfg);
        assert!(out.converged, "residual {}", out.residual);
        for (xi, ti) in out.x.iter().zip(&xtrue) {
            assert!((xi - ti).norm() < 1e-8);
        }
    }

    #[test]
    fn iteration_budget_reported_on_failure() {
        // rotation-like system that GMRES(2) cannot solve in 4 iterations
        let a = vec![
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ];
        let b = vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        let cfg = GmresConfig {
            tol: 1e-14,
            restart: 2,
            max_iter: 3,
        };
        let out = gmres(apply_dense(&a), &b, None, &cfg);
        assert!(!out.converged);
        assert!(out.iterations <= 3);
        assert!(out.residual > 0.0);
    }
}
