//! Banded precision-matrix algebra for Gaussian path sampling.
//!
//! Random-walk coefficient paths (and log-volatility paths) have
//! block-tridiagonal posterior *precision* matrices. Exploiting that band
//! structure gives O(T) Cholesky factorization and solves, and a joint path
//! draw without any forward-backward recursion:
//!
//! 1. factor `Omega = L L'`,
//! 2. solve `L a = c` for the mean part,
//! 3. solve `L' x = a + e` with `e ~ N(0, I)`.
//!
//! The result is exactly `x ~ N(Omega^{-1} c, Omega^{-1})`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dist::standard_normal_vec;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Symmetric band storage
// ---------------------------------------------------------------------------

/// Symmetric matrix stored in lower band form: only `A[i, i-k]` for
/// `k = 0..=bandwidth` is kept.
#[derive(Debug, Clone)]
pub struct SymBandMatrix {
    n: usize,
    bandwidth: usize,
    /// Row-major: `data[i * (bandwidth + 1) + k] = A[i, i - k]`.
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        SymBandMatrix {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Entry (i, j); zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bandwidth {
            0.0
        } else {
            self.data[hi * (self.bandwidth + 1) + k]
        }
    }

    /// Add `x` to entry (i, j) (and by symmetry (j, i)).
    pub fn add(&mut self, i: usize, j: usize, x: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= self.bandwidth, "entry ({i},{j}) outside bandwidth {}", self.bandwidth);
        self.data[hi * (self.bandwidth + 1) + k] += x;
    }

    /// Dense copy (tests and small-system fallbacks).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in 0..=self.bandwidth.min(i) {
                let v = self.data[i * (self.bandwidth + 1) + k];
                m[(i, i - k)] = v;
                m[(i - k, i)] = v;
            }
        }
        m
    }

    /// Banded Cholesky factor `L` with `A = L L'`; `O(n * bandwidth^2)`.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let w = self.bandwidth;
        let mut l = vec![0.0; self.n * (w + 1)];
        for i in 0..self.n {
            let j_lo = i.saturating_sub(w);
            for j in j_lo..=i {
                let mut s = self.get(i, j);
                let k_lo = j.saturating_sub(w).max(j_lo);
                for k in k_lo..j {
                    s -= l[i * (w + 1) + (i - k)] * l[j * (w + 1) + (j - k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Numerical(format!(
                            "band Cholesky failed at row {i}: pivot {s:.3e} not positive"
                        )));
                    }
                    l[i * (w + 1)] = s.sqrt();
                } else {
                    l[i * (w + 1) + (i - j)] = s / l[j * (w + 1)];
                }
            }
        }
        Ok(BandCholesky {
            n: self.n,
            bandwidth: w,
            data: l,
        })
    }
}

/// Lower-triangular banded Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bandwidth: usize,
    /// Same layout as [`SymBandMatrix`]: `data[i * (bw + 1) + k] = L[i, i - k]`.
    data: Vec<f64>,
}

impl BandCholesky {
    fn l(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        let k = i - j;
        if k > self.bandwidth {
            0.0
        } else {
            self.data[i * (self.bandwidth + 1) + k]
        }
    }

    /// Forward substitution: solve `L x = b`.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let w = self.bandwidth;
        let mut x = b.clone();
        for i in 0..self.n {
            let j_lo = i.saturating_sub(w);
            let mut s = x[i];
            for j in j_lo..i {
                s -= self.l(i, j) * x[j];
            }
            x[i] = s / self.l(i, i);
        }
        x
    }

    /// Back substitution: solve `L' x = b`.
    pub fn solve_upper(&self, b: &DVector<f64>) -> DVector<f64> {
        let w = self.bandwidth;
        let mut x = b.clone();
        for i in (0..self.n).rev() {
            let j_hi = (i + w).min(self.n - 1);
            let mut s = x[i];
            for j in (i + 1)..=j_hi {
                s -= self.l(j, i) * x[j];
            }
            x[i] = s / self.l(i, i);
        }
        x
    }

    /// Solve `L L' x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `log det(L L')`.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| self.l(i, i).ln()).sum::<f64>() * 2.0
    }
}

// ---------------------------------------------------------------------------
// Precision system
// ---------------------------------------------------------------------------

/// A Gaussian in canonical form: `x ~ N(Omega^{-1} c, Omega^{-1})` with a
/// banded precision matrix.
#[derive(Debug, Clone)]
pub struct BandSystem {
    pub omega: SymBandMatrix,
    pub covector: DVector<f64>,
}

impl BandSystem {
    /// Posterior mean `Omega^{-1} c`.
    pub fn mean(&self) -> Result<DVector<f64>> {
        Ok(self.omega.cholesky()?.solve(&self.covector))
    }
}

/// Solve `Omega x = b` through the banded Cholesky factor.
pub fn band_cholesky_solve(omega: &SymBandMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(omega.cholesky()?.solve(b))
}

/// Joint draw from the canonical Gaussian without any sequential smoother:
/// factor once, solve twice.
pub fn precision_draw<R: Rng + ?Sized>(system: &BandSystem, rng: &mut R) -> Result<DVector<f64>> {
    let chol = system.omega.cholesky()?;
    let a = chol.solve_lower(&system.covector);
    let e = standard_normal_vec(system.covector.len(), rng);
    Ok(chol.solve_upper(&(a + e)))
}

/// Build the block-tridiagonal posterior precision system for a random-walk
/// coefficient path.
///
/// Model per period `t = 0..n-1` (block size `m`):
///   observation  `y_t = z_t' x_t + noise`, noise precision `obs_prec[t]`
///   transition   `x_{t+1} = x_t + u_t`,    `u_t ~ N(0, inv(state_prec))`
///   initial      `x_0 ~ N(init_mean, init_cov)`
///
/// A period with no observation is encoded by `obs_prec[t] = 0`. Diagonal
/// blocks are `z_t obs_prec z_t'` plus one `state_prec` per adjacent
/// transition (two in the interior, one at each end) plus `inv(init_cov)` at
/// `t = 0`; off-diagonal blocks are `-state_prec`.
pub fn build_tvp_precision_system(
    obs: &[f64],
    loadings: &[DVector<f64>],
    obs_prec: &[f64],
    state_prec: &DMatrix<f64>,
    init_mean: &DVector<f64>,
    init_cov: &DMatrix<f64>,
) -> Result<BandSystem> {
    let n = obs.len();
    if n == 0 {
        return Err(Error::Validation("precision system needs at least one period".into()));
    }
    if loadings.len() != n || obs_prec.len() != n {
        return Err(Error::Validation(
            "obs, loadings and obs_prec must have equal length".into(),
        ));
    }
    let m = loadings[0].len();
    if state_prec.nrows() != m || state_prec.ncols() != m {
        return Err(Error::Validation("state_prec dimension mismatch".into()));
    }
    if init_mean.len() != m || init_cov.nrows() != m || init_cov.ncols() != m {
        return Err(Error::Validation("initial moments dimension mismatch".into()));
    }
    let init_prec = init_cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("initial covariance not positive definite".into()))?
        .inverse();

    // Block tridiagonal => scalar bandwidth 2m - 1.
    let mut omega = SymBandMatrix::zeros(n * m, 2 * m - 1);
    let mut covector = DVector::zeros(n * m);

    for t in 0..n {
        let z = &loadings[t];
        if z.len() != m {
            return Err(Error::Validation(format!("loading at {t} has wrong length")));
        }
        let p = obs_prec[t];
        if p < 0.0 || !p.is_finite() {
            return Err(Error::Validation(format!(
                "observation precision at {t} must be finite and non-negative"
            )));
        }
        if p > 0.0 {
            for a in 0..m {
                for b in 0..=a {
                    omega.add(t * m + a, t * m + b, p * z[a] * z[b]);
                }
                covector[t * m + a] += p * z[a] * obs[t];
            }
        }
    }
    // Transitions t -> t+1 contribute state_prec to both diagonal blocks and
    // -state_prec off the diagonal.
    for t in 0..n.saturating_sub(1) {
        for a in 0..m {
            for b in 0..=a {
                omega.add(t * m + a, t * m + b, state_prec[(a, b)]);
                omega.add((t + 1) * m + a, (t + 1) * m + b, state_prec[(a, b)]);
            }
            for b in 0..m {
                omega.add((t + 1) * m + a, t * m + b, -state_prec[(a, b)]);
            }
        }
    }
    // Initial condition ties down the first block.
    for a in 0..m {
        for b in 0..=a {
            omega.add(a, b, init_prec[(a, b)]);
        }
        covector[a] += (init_prec.row(a) * init_mean)[(0, 0)];
    }
    Ok(BandSystem { omega, covector })
}
