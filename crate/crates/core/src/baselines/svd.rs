//! Truncated SVD by randomized subspace iteration.
//!
//! A Gaussian sketch of the range of `A` (rank `r` plus oversampling) is
//! refined by alternating products with `Aᵀ` and `A`, re-orthonormalised
//! after every product. The small projected matrix `QᵀA` is decomposed
//! densely; iteration continues past the minimum number of power steps until
//! the leading `r` singular values stop moving.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::FactorModel;
use crate::interactions::InteractionMatrix;
use crate::{Error, Result};

/// Products with a matrix and its transpose on dense blocks.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A · x` for `x` of shape `ncols × l`.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ · y` for `y` of shape `nrows × l`.
    fn apply_t(&self, y: &DMatrix<f64>) -> DMatrix<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        DMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        DMatrix::ncols(self)
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn apply_t(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(y)
    }
}

impl LinearOperator for InteractionMatrix {
    fn nrows(&self) -> usize {
        self.n_users()
    }

    fn ncols(&self) -> usize {
        self.n_venues()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let l = x.ncols();
        let mut y = DMatrix::zeros(self.n_users(), l);
        for c in 0..l {
            let xc = x.column(c);
            let mut yc = y.column_mut(c);
            for u in 0..self.n_users() {
                yc[u] = self.row(u).map(|(v, a)| a * xc[v]).sum();
            }
        }
        y
    }

    fn apply_t(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let l = y.ncols();
        let mut z = DMatrix::zeros(self.n_venues(), l);
        for c in 0..l {
            let yc = y.column(c);
            let mut zc = z.column_mut(c);
            for u in 0..self.n_users() {
                let w = yc[u];
                if w != 0.0 {
                    for (v, a) in self.row(u) {
                        zc[v] += a * w;
                    }
                }
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    /// Minimum number of power (subspace) iterations.
    pub power_iterations: usize,
    /// Stop once the leading singular values move less than this, relative to σ₁.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            power_iterations: 2,
            tolerance: 1e-12,
            max_iterations: 300,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `m × r`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `n × r`, orthonormal columns.
    pub v: DMatrix<f64>,
    pub iterations: usize,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.singular_values.clone()));
        &self.u * s * self.v.transpose()
    }
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Singular triplets of the small projected matrix, sorted descending.
fn small_svd(b: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = b.svd(true, true);
    let ub = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let ub = DMatrix::from_columns(&order.iter().map(|&i| ub.column(i)).collect::<Vec<_>>());
    let v = DMatrix::from_columns(&order.iter().map(|&i| vt.row(i).transpose()).collect::<Vec<_>>());
    (ub, sigma, v)
}

pub fn truncated_svd<A: LinearOperator + ?Sized>(a: &A, rank: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (m, n) = (a.nrows(), a.ncols());
    if rank == 0 {
        return Err(Error::Config("SVD rank must be at least 1".into()));
    }
    if m == 0 || n == 0 {
        return Err(Error::Config("cannot factorize an empty matrix".into()));
    }
    let mut r = rank;
    if r > m.min(n) {
        log::warn!("rank {r} exceeds min({m}, {n}); truncating");
        r = m.min(n);
    }
    let l = (r + opts.oversample).min(m.min(n));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = DMatrix::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(a.apply(&omega));

    let mut previous: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let (ub, sigma, v) = loop {
        let z = a.apply_t(&q);
        let (ub, sigma, v) = small_svd(z.transpose());
        let converged = previous.as_ref().is_some_and(|p| {
            let scale = sigma[0].max(f64::MIN_POSITIVE);
            p.iter().zip(&sigma).take(r).all(|(a, b)| (a - b).abs() <= opts.tolerance * scale)
        });
        if (iterations >= opts.power_iterations && converged) || iterations >= opts.max_iterations {
            break (ub, sigma, v);
        }
        previous = Some(sigma);
        q = orthonormalize(a.apply(&orthonormalize(z)));
        iterations += 1;
    };

    let u = &q * ub;
    let floor = sigma[0] * 1e-10;
    let achieved = sigma.iter().take(r).filter(|&&s| s > floor).count().max(1);
    if achieved < r {
        log::warn!("requested rank {r} but matrix has numerical rank {achieved}");
    }
    Ok(TruncatedSvd {
        u: u.columns(0, achieved).into_owned(),
        singular_values: sigma[..achieved].to_vec(),
        v: v.columns(0, achieved).into_owned(),
        iterations,
    })
}

/// Rank-`r` latent factors: users `U_r·diag(√σ)`, venues `V_r·diag(√σ)`.
pub fn svd_factorize(matrix: &InteractionMatrix, rank: usize, opts: &SvdOptions) -> Result<FactorModel> {
    let svd = truncated_svd(matrix, rank, opts)?;
    let r = svd.rank();
    let root: Vec<f64> = svd.singular_values.iter().map(|s| s.sqrt()).collect();
    let scaled = |m: &DMatrix<f64>| -> Vec<f64> {
        (0..m.nrows())
            .flat_map(|i| (0..r).map(move |t| (i, t)))
            .map(|(i, t)| m[(i, t)] * root[t])
            .collect()
    };
    FactorModel::new(matrix, r, 0.0, scaled(&svd.u), scaled(&svd.v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_recovered() {
        let x = [1.0, 2.0, 0.5, 3.0];
        let y = [2.0, 1.0, 4.0];
        let a = DMatrix::from_fn(4, 3, |i, j| x[i] * y[j]);
        let s = truncated_svd(&a, 1, &SvdOptions::default()).unwrap();
        let err = (&a - s.reconstruct()).norm() / a.norm();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn sparse_and_dense_operators_agree() {
        let dense = vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0], vec![4.0, 0.0, 5.0], vec![0.0, 0.0, 1.0]];
        let m = InteractionMatrix::from_dense(&dense);
        let d = DMatrix::from_fn(4, 3, |i, j| dense[i][j]);
        let x = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        assert!((m.apply(&x) - d.apply(&x)).norm() < 1e-12);
        let y = DMatrix::from_fn(4, 2, |i, j| (i * j) as f64 + 0.5);
        assert!((m.apply_t(&y) - d.apply_t(&y)).norm() < 1e-12);
    }

    #[test]
    fn factors_reproduce_low_rank_matrix() {
        let dense: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..5).map(|j| ((i % 2) * 2 + (j % 3) + 1) as f64).collect())
            .collect();
        let m = InteractionMatrix::from_dense(&dense);
        let f = svd_factorize(&m, 5, &SvdOptions::default()).unwrap();
        assert!(f.rank <= 2, "numerical rank should be detected, got {}", f.rank);
        for i in 0..6 {
            for j in 0..5 {
                assert!((f.predict(i, j) - dense[i][j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn oversized_rank_is_clamped() {
        let a = DMatrix::from_fn(3, 2, |i, j| (i * 2 + j + 1) as f64 * if (i + j) % 2 == 0 { 1.0 } else { -0.7 });
        let s = truncated_svd(&a, 10, &SvdOptions::default()).unwrap();
        assert!(s.rank() <= 2);
    }
}
