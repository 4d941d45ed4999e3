//! Symmetric positive (semi-)definite helpers for information matrices.
//!
//! All routines work on the diagonally scaled ("correlation") form
//! `D F D` with `D = diag(F)^(-1/2)`, so that condition numbers and rank
//! decisions do not depend on the units of the parameters.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CrbError, Result};

/// Inversion is refused above this scaled condition number.
pub const MAX_CONDITION: f64 = 1e14;

/// Largest overlap between a null vector of the scaled FIM and the wanted
/// parameters for which they still count as identifiable.
pub const IDENTIFIABILITY_TOL: f64 = 1e-6;

/// Inverse of a symmetric positive definite matrix and its scaled
/// condition number.
#[derive(Debug, Clone)]
pub struct SymmetricInverse {
    pub inverse: DMatrix<f64>,
    pub condition: f64,
}

fn diag_scaling(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = m.nrows();
    let mut s = DVector::zeros(n);
    for i in 0..n {
        let d = m[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            let mut null_direction = vec![0.0; n];
            null_direction[i] = 1.0;
            return Err(CrbError::Singular {
                condition: f64::INFINITY,
                null_direction,
            });
        }
        s[i] = 1.0 / d.sqrt();
    }
    Ok(s)
}

fn scaled(m: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let mut c = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            c[(i, j)] *= s[i] * s[j];
        }
    }
    (&c + c.transpose()) * 0.5
}

/// Scaled condition number `lambda_max / lambda_min` (infinite when the
/// smallest eigenvalue is not positive).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    match diag_scaling(m) {
        Ok(s) => {
            let eig = SymmetricEigen::new(scaled(m, &s));
            let max = eig.eigenvalues.max();
            let min = eig.eigenvalues.min();
            if min > 0.0 {
                max / min
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Inverts a symmetric positive definite matrix through the eigen-decomposition
/// of its scaled form. Fails with the least-informative direction when the
/// scaled condition number exceeds [`MAX_CONDITION`].
pub fn invert_spd(m: &DMatrix<f64>) -> Result<SymmetricInverse> {
    let s = diag_scaling(m)?;
    let eig = SymmetricEigen::new(scaled(m, &s));
    let max = eig.eigenvalues.max();
    let (imin, min) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty matrix");
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        let v = eig.eigenvectors.column(imin).component_mul(&s);
        let v = &v / v.norm();
        return Err(CrbError::Singular {
            condition,
            null_direction: v.iter().copied().collect(),
        });
    }
    let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
    let inner = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    Ok(SymmetricInverse {
        inverse: scaled(&inner, &s),
        condition,
    })
}

/// Cramér-Rao bound on the parameters `wanted` with every other parameter
/// treated as an unknown nuisance.
///
/// The scaled FIM is split into its numerical null space (eigenvalues at or
/// below `lambda_max / MAX_CONDITION`) and the rest. The wanted parameters
/// are identifiable when every null vector is orthogonal to them, within
/// [`IDENTIFIABILITY_TOL`]; the bound is then the wanted block of the
/// pseudo-inverse, which equals the block of `F^-1` whenever `F` is
/// invertible. Otherwise the offending null vector is reported.
pub fn marginal_crb(fim: &DMatrix<f64>, wanted: &[usize]) -> Result<SymmetricInverse> {
    let n = fim.nrows();
    let s = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let d = fim[(i, i)];
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        }),
    );
    let eig = SymmetricEigen::new(scaled(fim, &s));
    let max = eig.eigenvalues.max();
    let cutoff = max / MAX_CONDITION;
    let mut kept_min = f64::INFINITY;
    let mut inv_vals = DVector::zeros(n);
    let mut worst: Option<(f64, usize)> = None;
    for k in 0..n {
        let l = eig.eigenvalues[k];
        if max > 0.0 && l > cutoff {
            inv_vals[k] = 1.0 / l;
            kept_min = kept_min.min(l);
            continue;
        }
        let overlap = wanted
            .iter()
            .map(|&w| eig.eigenvectors[(w, k)].powi(2))
            .sum::<f64>()
            .sqrt();
        if overlap > IDENTIFIABILITY_TOL && worst.is_none_or(|(o, _)| overlap > o) {
            worst = Some((overlap, k));
        }
    }
    if let Some((_, k)) = worst {
        // Back to unscaled coordinates; parameters without information
        // keep their raw direction.
        let v = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let u = eig.eigenvectors[(i, k)];
                if s[i] > 0.0 {
                    u * s[i]
                } else {
                    u
                }
            }),
        );
        let norm = v.norm();
        return Err(CrbError::Singular {
            condition: if eig.eigenvalues[k] > 0.0 { max / eig.eigenvalues[k] } else { f64::INFINITY },
            null_direction: v.iter().map(|x| x / norm).collect(),
        });
    }
    let inner = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    let full = scaled(&inner, &s);
    let inverse = DMatrix::from_fn(wanted.len(), wanted.len(), |i, j| full[(wanted[i], wanted[j])]);
    Ok(SymmetricInverse {
        inverse,
        condition: max / kept_min,
    })
}

/// Smallest and largest eigenvalue of a symmetric matrix (unscaled).
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd(n: usize, seed: f64) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) as f64 * seed).sin() * 10f64.powi(i as i32 - 2));
        &a * a.transpose() + DMatrix::identity(n, n) * 1e-3
    }

    #[test]
    fn inverse_matches_lu() {
        let m = spd(6, 0.77);
        let inv = invert_spd(&m).unwrap();
        let lu = m.clone().try_inverse().unwrap();
        assert!((&inv.inverse - &lu).norm() < 1e-9 * lu.norm());
        assert!(inv.condition >= 1.0);
    }

    #[test]
    fn identity_scaled() {
        let m = DMatrix::<f64>::identity(6, 6) * 4.0;
        let inv = invert_spd(&m).unwrap();
        assert_relative_eq!(inv.inverse[(3, 3)], 0.25, max_relative = 1e-15);
        assert_relative_eq!(inv.condition, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn singular_reports_null_direction() {
        // Rank-deficient: x1 and x2 only seen through their sum.
        let v = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let m = &v * v.transpose() + DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0]));
        match invert_spd(&m) {
            Err(CrbError::Singular { null_direction, .. }) => {
                assert_relative_eq!(null_direction[0].abs(), 0.5f64.sqrt(), max_relative = 1e-9);
                assert_relative_eq!(null_direction[0], -null_direction[1], max_relative = 1e-9);
                assert!(null_direction[2].abs() < 1e-9);
            }
            other => panic!("expected singular, got {other:?}"),
        }
        let zero_row = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(invert_spd(&zero_row), Err(CrbError::Singular { .. })));
    }

    #[test]
    fn marginal_equals_full_inverse_block() {
        let m = spd(6, 0.31);
        let full = invert_spd(&m).unwrap().inverse;
        let x = marginal_crb(&m, &[0, 1, 2]).unwrap().inverse;
        let block = full.view((0, 0), (3, 3)).into_owned();
        // Scaled condition ~3e6 bounds the agreement of two inversion routes.
        assert!((&x - &block).norm() < 1e-6 * block.norm(), "{x} {block}");
        let y = marginal_crb(&m, &[4]).unwrap().inverse;
        assert_relative_eq!(y[(0, 0)], full[(4, 4)], max_relative = 1e-6);
    }

    #[test]
    fn marginal_ignores_invisible_nuisance() {
        // Parameter 2 is a nuisance that enters nowhere.
        let mut m = DMatrix::<f64>::zeros(3, 3);
        m[(0, 0)] = 2.0;
        m[(1, 1)] = 3.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let x = marginal_crb(&m, &[0, 1]).unwrap().inverse;
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]).try_inverse().unwrap();
        assert!((x - expect).norm() < 1e-14);
        assert!(matches!(marginal_crb(&m, &[2]), Err(CrbError::Singular { .. })));
    }
}
