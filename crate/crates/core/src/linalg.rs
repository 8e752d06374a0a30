//! Small dense kernels shared by the model modules.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const JITTER: f64 = 1e-12;

/// Solves `g x = rhs` for symmetric positive (semi)definite `g`.
///
/// Cholesky first. When that fails: if `allow_pinv` the Moore-Penrose
/// pseudoinverse is used directly, otherwise a relative `1e-12` diagonal
/// jitter is tried before falling back to the pseudoinverse.
pub(crate) fn solve_spd(g: &DMatrix<f64>, rhs: &DVector<f64>, allow_pinv: bool) -> Result<DVector<f64>> {
    if let Some(ch) = g.clone().cholesky() {
        let x = ch.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    if !allow_pinv {
        let scale = (g.trace() / g.nrows().max(1) as f64).abs().max(1.0);
        let mut jittered = g.clone();
        for i in 0..g.nrows() {
            jittered[(i, i)] += JITTER * scale;
        }
        if let Some(ch) = jittered.cholesky() {
            let x = ch.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                return Ok(x);
            }
        }
    }
    let pinv = g
        .clone()
        .pseudo_inverse(1e-12 * g.amax().max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let x = pinv * rhs;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Numerical("non-finite linear solve".into()))
    }
}

/// Top-`rank` left singular vectors of `data` by randomized subspace iteration.
///
/// The sketch width is `rank + oversample` (capped by the column count) and
/// the range finder is re-orthonormalized after every power step. Column signs
/// are fixed so the largest-magnitude entry of each vector is positive.
pub(crate) fn randomized_left_singular(
    data: &DMatrix<f64>,
    rank: usize,
    power_iters: usize,
    oversample: usize,
    seed: u64,
) -> DMatrix<f64> {
    let (m, n) = data.shape();
    let k = (rank + oversample).min(n).max(rank).min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormalize(&(data * omega));
    for _ in 0..power_iters {
        let z = orthonormalize(&(data.transpose() * &q));
        q = orthonormalize(&(data * z));
    }
    let small = q.transpose() * data;
    let svd = small.svd(true, false);
    let u_small = svd.u.expect("requested U");

    // nalgebra does not sort singular values.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| {
        svd.singular_values[*b]
            .partial_cmp(&svd.singular_values[*a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    });

    let mut basis = DMatrix::zeros(m, rank);
    for (out_col, &src) in order.iter().take(rank).enumerate() {
        let col = &q * u_small.column(src);
        basis.set_column(out_col, &col);
    }
    // Short sketches (rank > available directions) leave zero columns; fill
    // them with an orthonormal completion so the basis keeps full column rank.
    complete_orthonormal(&mut basis, order.len().min(rank));
    for mut col in basis.column_iter_mut() {
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    basis
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

fn complete_orthonormal(basis: &mut DMatrix<f64>, filled: usize) {
    let (m, r) = basis.shape();
    let mut next_axis = 0;
    for j in filled..r {
        while next_axis < m {
            let mut v = DVector::zeros(m);
            v[next_axis] = 1.0;
            next_axis += 1;
            for k in 0..j {
                let proj = basis.column(k).dot(&v);
                v -= basis.column(k) * proj;
            }
            let norm = v.norm();
            if norm > 1e-6 {
                basis.set_column(j, &(v / norm));
                break;
            }
        }
    }
}

/// Median of a slice (average of the middle pair for even lengths). 0 for empty input.
pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear-interpolated percentile, `q` in `[0, 100]`.
pub(crate) fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + (v[hi] - v[lo]) * frac
}

/// Gaussian-consistent robust scale, `1.4826 * MAD`.
pub(crate) fn robust_sigma(values: &[f64]) -> f64 {
    let med = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    1.4826 * median(&dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_matches_inverse() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let x = solve_spd(&g, &b, false).unwrap();
        let r = &g * &x - &b;
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn singular_system_uses_pseudoinverse() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, 2.0]);
        let x = solve_spd(&g, &b, true).unwrap();
        // minimum-norm solution
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stats() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(percentile(&[0.0, 10.0], 50.0), 5.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0], 100.0), 3.0);
        assert!((robust_sigma(&[1.0, 2.0, 3.0, 4.0, 100.0]) - 1.4826).abs() < 1e-12);
    }

    #[test]
    fn randomized_basis_is_orthonormal() {
        let data = DMatrix::from_fn(40, 6, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let u = randomized_left_singular(&data, 3, 3, 8, 1);
        let gram = u.transpose() * &u;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-10);
    }
}
