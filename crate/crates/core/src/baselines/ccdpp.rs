//! CCD++: cyclic coordinate descent with rank-one updates.
//!
//! Minimises `Σ_(i,j)∈Ω (A_ij − u_i·v_j)² + λ(‖U‖² + ‖V‖²)` over the observed
//! entries `Ω`. For each latent index `t` the rank-one term `u_t v_tᵀ` is added
//! back into the residual, `u_t` and `v_t` are refitted in closed form, and
//! the term is subtracted again.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FactorModel;
use crate::interactions::InteractionMatrix;
use crate::parallel::{map_range, Execution};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CcdOptions {
    pub rank: usize,
    pub lambda: f64,
    pub outer_iterations: usize,
    /// Alternating refits of one (u_t, v_t) pair per outer sweep.
    pub inner_iterations: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for CcdOptions {
    fn default() -> Self {
        CcdOptions {
            rank: 100,
            lambda: 0.1,
            outer_iterations: 15,
            inner_iterations: 1,
            seed: 23,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CcdResult {
    pub factors: FactorModel,
    /// Objective after each outer iteration.
    pub objective: Vec<f64>,
}

pub fn ccdpp_objective(matrix: &InteractionMatrix, u: &[f64], v: &[f64], rank: usize, lambda: f64) -> f64 {
    let fit: f64 = matrix
        .triplets()
        .map(|(i, j, a)| {
            let p: f64 = (0..rank).map(|t| u[i * rank + t] * v[j * rank + t]).sum();
            (a - p) * (a - p)
        })
        .sum();
    let reg: f64 = u.iter().chain(v).map(|x| x * x).sum();
    fit + lambda * reg
}

/// CCD++ from `U = 0` and a seeded uniform `V`.
pub fn ccdpp_factorize(matrix: &InteractionMatrix, opts: &CcdOptions) -> Result<CcdResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let scale = 1.0 / (opts.rank.max(1) as f64).sqrt();
    let v0 = (0..matrix.n_venues() * opts.rank)
        .map(|_| rng.random_range(0.0..scale))
        .collect();
    ccdpp_factorize_from(matrix, opts, v0)
}

/// CCD++ from `U = 0` and the given row-major `V`.
pub fn ccdpp_factorize_from(matrix: &InteractionMatrix, opts: &CcdOptions, initial_v: Vec<f64>) -> Result<CcdResult> {
    let r = opts.rank;
    if r == 0 {
        return Err(Error::Config("latent rank must be at least 1".into()));
    }
    if !(opts.lambda > 0.0) {
        return Err(Error::Config("lambda must be positive".into()));
    }
    if opts.outer_iterations == 0 || opts.inner_iterations == 0 {
        return Err(Error::Config("iteration counts must be at least 1".into()));
    }
    if initial_v.len() != matrix.n_venues() * r {
        return Err(Error::Config("initial V has the wrong shape".into()));
    }
    let (m, n) = (matrix.n_users(), matrix.n_venues());
    let lambda = opts.lambda;

    // Entries in CSR order; `by_col[j]` lists (row, entry position).
    let entries: Vec<(usize, usize, f64)> = matrix.triplets().collect();
    let mut row_start = vec![0usize; m + 1];
    for &(i, _, _) in &entries {
        row_start[i + 1] += 1;
    }
    for i in 0..m {
        row_start[i + 1] += row_start[i];
    }
    let mut by_col: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (pos, &(i, j, _)) in entries.iter().enumerate() {
        by_col[j].push((i, pos));
    }

    let mut u = vec![0.0; m * r];
    let mut v = initial_v;
    let mut residual: Vec<f64> = entries.iter().map(|&(_, _, a)| a).collect();
    let mut ut = vec![0.0; m];
    let mut vt = vec![0.0; n];
    let mut objective = Vec::with_capacity(opts.outer_iterations);

    for _ in 0..opts.outer_iterations {
        for t in 0..r {
            for i in 0..m {
                ut[i] = u[i * r + t];
            }
            for j in 0..n {
                vt[j] = v[j * r + t];
            }
            for (res, &(i, j, _)) in residual.iter_mut().zip(&entries) {
                *res += ut[i] * vt[j];
            }
            for _ in 0..opts.inner_iterations {
                let new_u = map_range(opts.execution, m, |i| {
                    let (mut num, mut den) = (0.0, lambda);
                    for pos in row_start[i]..row_start[i + 1] {
                        let vj = vt[entries[pos].1];
                        num += residual[pos] * vj;
                        den += vj * vj;
                    }
                    num / den
                });
                ut.copy_from_slice(&new_u);
                let new_v = map_range(opts.execution, n, |j| {
                    let (mut num, mut den) = (0.0, lambda);
                    for &(i, pos) in &by_col[j] {
                        num += residual[pos] * ut[i];
                        den += ut[i] * ut[i];
                    }
                    num / den
                });
                vt.copy_from_slice(&new_v);
            }
            for (res, &(i, j, _)) in residual.iter_mut().zip(&entries) {
                *res -= ut[i] * vt[j];
            }
            for i in 0..m {
                u[i * r + t] = ut[i];
            }
            for j in 0..n {
                v[j * r + t] = vt[j];
            }
        }
        objective.push(ccdpp_objective(matrix, &u, &v, r, lambda));
    }
    let factors = FactorModel::new(matrix, r, lambda, u, v)?;
    Ok(CcdResult { factors, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(m: usize, n: usize) -> (InteractionMatrix, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<[f64; 2]> = (0..m).map(|_| [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)]).collect();
        let b: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)]).collect();
        let dense: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if rng.random_bool(0.8) {
                            a[i][0] * b[j][0] + a[i][1] * b[j][1]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        (InteractionMatrix::from_dense(&dense), dense)
    }

    #[test]
    fn objective_never_increases() {
        let (m, _) = planted(15, 12);
        let opts = CcdOptions {
            rank: 3,
            outer_iterations: 30,
            ..CcdOptions::default()
        };
        let res = ccdpp_factorize(&m, &opts).unwrap();
        assert_eq!(res.objective.len(), 30);
        for w in res.objective.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn planted_rank_two_is_recovered() {
        let (m, dense) = planted(20, 15);
        let opts = CcdOptions {
            rank: 2,
            lambda: 1e-8,
            outer_iterations: 400,
            ..CcdOptions::default()
        };
        let res = ccdpp_factorize(&m, &opts).unwrap();
        let (mut err, mut norm) = (0.0, 0.0);
        for (i, j, a) in m.triplets() {
            err += (res.factors.predict(i, j) - a).powi(2);
            norm += a * a;
            assert_eq!(dense[i][j], a);
        }
        let rel = (err / norm).sqrt();
        assert!(rel < 1e-3, "relative error {rel}");
    }

    #[test]
    fn parallel_matches_sequential() {
        let (m, _) = planted(30, 20);
        let seq = ccdpp_factorize(&m, &CcdOptions { rank: 4, ..CcdOptions::default() }).unwrap();
        let par = ccdpp_factorize(
            &m,
            &CcdOptions {
                rank: 4,
                execution: Execution::Parallel,
                ..CcdOptions::default()
            },
        )
        .unwrap();
        assert_eq!(seq.objective, par.objective);
    }

    #[test]
    fn bad_options() {
        let (m, _) = planted(4, 4);
        let o = CcdOptions { lambda: 0.0, ..CcdOptions::default() };
        assert!(ccdpp_factorize(&m, &o).is_err());
        let o = CcdOptions { rank: 0, ..CcdOptions::default() };
        assert!(ccdpp_factorize(&m, &o).is_err());
    }
}
