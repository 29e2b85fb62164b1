//! Bayesian vector autoregressions for quantifying the impact of
//! uncertainty shocks.
//!
//! Estimation is conditional on the first `p` observations under the diffuse
//! prior `p(B, Sigma) ∝ |Sigma|^-(n+1)/2`, giving the standard
//! normal/inverse-Wishart posterior centered on least squares. Shocks are
//! identified recursively (lower-triangular Cholesky of the innovation
//! covariance), so the shock to the *last* variable in the ordering is the
//! one whose innovations are allowed to react to everything else on impact —
//! the conservative placement for an uncertainty measure.
//!
//! Impulse responses use the moving-average recursion; draws whose companion
//! matrix has spectral radius above a threshold are flagged as explosive but
//! retained, and the flag share is reported alongside the response bands.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dist::draw_inverse_wishart;
use crate::error::{Error, Result};
use crate::stats;

/// Minimum number of index draws required by the measurement-uncertainty
/// variant of the VAR.
pub const MIN_UNCERTAINTY_DRAWS: usize = 100;

/// Sampling configuration for posterior impulse responses.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VarConfig {
    /// Lag order.
    pub lags: usize,
    /// Largest impulse-response horizon (responses run 0..=horizons).
    pub horizons: usize,
    /// Number of posterior draws.
    pub n_draws: usize,
    /// Lower band quantile.
    pub band_low: f64,
    /// Upper band quantile.
    pub band_high: f64,
    /// Companion spectral radius above which a draw is flagged explosive.
    pub explosive_threshold: f64,
    pub seed: u64,
}

impl Default for VarConfig {
    fn default() -> Self {
        VarConfig {
            lags: 2,
            horizons: 20,
            n_draws: 1000,
            band_low: 0.16,
            band_high: 0.84,
            explosive_threshold: 1.2,
            seed: 1,
        }
    }
}

// ---------------------------------------------------------------------------
// Posterior for (B, Sigma)
// ---------------------------------------------------------------------------

/// Sufficient statistics of the diffuse posterior.
#[derive(Debug, Clone)]
pub struct BvarFit {
    pub n_vars: usize,
    pub lags: usize,
    /// Effective sample size (rows after conditioning on the first p).
    pub t_eff: usize,
    /// Regressors per equation (intercept + n * p lags).
    pub k: usize,
    /// Least-squares coefficients, k x n (intercept row first, then lag 1
    /// block, lag 2 block, ...).
    pub b_hat: DMatrix<f64>,
    /// Lower Cholesky factor of X'X.
    xtx_chol_l: DMatrix<f64>,
    /// Residual cross-product matrix.
    pub resid_scale: DMatrix<f64>,
}

/// Fit the least-squares step of a VAR(p) with intercept on a T x n data
/// matrix ordered oldest row first.
pub fn fit_bvar(data: &DMatrix<f64>, lags: usize) -> Result<BvarFit> {
    let t = data.nrows();
    let n = data.ncols();
    if lags == 0 {
        return Err(Error::Validation("VAR lag order must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::Validation("VAR needs at least one variable".into()));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("VAR data contains non-finite values".into()));
    }
    let k = 1 + n * lags;
    let t_eff = t.saturating_sub(lags);
    // Posterior propriety: the inverse-Wishart needs t_eff - k > n - 1.
    if t_eff < k + n + 1 {
        return Err(Error::Validation(format!(
            "sample too short for a {n}-variable VAR({lags}): {t} rows give {t_eff} effective \
             observations but at least {} are needed",
            k + n + 1
        )));
    }
    let mut x = DMatrix::zeros(t_eff, k);
    let mut y = DMatrix::zeros(t_eff, n);
    for row in 0..t_eff {
        let tt = row + lags;
        x[(row, 0)] = 1.0;
        for lag in 1..=lags {
            for v in 0..n {
                x[(row, 1 + (lag - 1) * n + v)] = data[(tt - lag, v)];
            }
        }
        for v in 0..n {
            y[(row, v)] = data[(tt, v)];
        }
    }
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("X'X singular; check for collinear VAR columns".into()))?;
    let b_hat = chol.solve(&xty);
    let resid = &y - &x * &b_hat;
    let mut s = resid.transpose() * &resid;
    // Guard against a zero-residual fit (e.g. deterministic data).
    if s.diagonal().iter().any(|&d| d <= 0.0) {
        return Err(Error::Numerical("degenerate VAR residual covariance".into()));
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    Ok(BvarFit {
        n_vars: n,
        lags,
        t_eff,
        k,
        b_hat,
        xtx_chol_l: chol.l(),
        resid_scale: s,
    })
}

impl BvarFit {
    /// One joint posterior draw of (B, Sigma).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let df = (self.t_eff - self.k) as f64;
        let sigma = draw_inverse_wishart(df, &self.resid_scale, rng)?;
        let sig_l = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("drawn Sigma not positive definite".into()))?
            .l();
        // B | Sigma is matrix normal with row covariance (X'X)^-1 and column
        // covariance Sigma: B = B_hat + L^-T Z L_sigma' with L L' = X'X.
        let z = DMatrix::from_fn(self.k, self.n_vars, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let w = self
            .xtx_chol_l
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numerical("triangular solve failed in VAR draw".into()))?;
        let b = &self.b_hat + w * sig_l.transpose();
        Ok((b, sigma))
    }
}

/// Split a stacked coefficient matrix into per-lag n x n matrices
/// (`y_t = c + A_1 y_{t-1} + ... + A_p y_{t-p} + u_t`).
pub fn lag_matrices(b: &DMatrix<f64>, n_vars: usize, lags: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(lags);
    for lag in 0..lags {
        let block = b.rows(1 + lag * n_vars, n_vars);
        out.push(block.transpose());
    }
    out
}

/// Companion matrix of the lag polynomial.
pub fn companion(a_lags: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = a_lags.len();
    let n = a_lags[0].nrows();
    let mut f = DMatrix::zeros(n * p, n * p);
    for (lag, a) in a_lags.iter().enumerate() {
        f.view_mut((0, lag * n), (n, n)).copy_from(a);
    }
    for i in 0..n * (p - 1) {
        f[(n + i, i)] = 1.0;
    }
    f
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Lower-triangular impact matrix `A` with `A A' = Sigma`.
///
/// Fails if the covariance is not positive definite or the factorization does
/// not reproduce it to near machine precision.
pub fn identify_recursive(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let a = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance not positive definite".into()))?
        .l();
    let recon = &a * a.transpose();
    let scale = sigma.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let err = (&recon - sigma).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if err > 1e-12 * scale {
        return Err(Error::Numerical(format!(
            "recursive identification failed to reproduce the covariance (error {err:.3e})"
        )));
    }
    Ok(a)
}

/// Impulse responses of every variable to the `shock`-th orthogonalized
/// one-standard-deviation shock, horizons 0..=horizons.
///
/// Returns an (horizons + 1) x n matrix; row h, column i is the response of
/// variable i at horizon h.
pub fn irf_one_draw(
    a_lags: &[DMatrix<f64>],
    impact: &DMatrix<f64>,
    shock: usize,
    horizons: usize,
) -> DMatrix<f64> {
    let n = impact.nrows();
    let p = a_lags.len();
    // Moving-average recursion: Psi_0 = I, Psi_h = sum_j A_j Psi_{h-j}.
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(horizons + 1);
    psi.push(DMatrix::identity(n, n));
    for h in 1..=horizons {
        let mut m = DMatrix::zeros(n, n);
        for j in 1..=p.min(h) {
            m += &a_lags[j - 1] * &psi[h - j];
        }
        psi.push(m);
    }
    let shock_col = impact.column(shock);
    let mut out = DMatrix::zeros(horizons + 1, n);
    for h in 0..=horizons {
        let resp = &psi[h] * shock_col;
        for v in 0..n {
            out[(h, v)] = resp[v];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Posterior impulse-response sets
// ---------------------------------------------------------------------------

/// Per-draw impulse responses to a single identified shock.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfDraws {
    pub variables: Vec<String>,
    pub shock_variable: String,
    pub horizons: usize,
    /// One (horizons + 1) x n matrix per posterior draw.
    pub draws: Vec<DMatrix<f64>>,
    /// Explosive-companion flag per draw (draws are retained either way).
    pub explosive: Vec<bool>,
    pub explosive_threshold: f64,
}

/// Pointwise posterior summary of impulse responses.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfSummary {
    pub variables: Vec<String>,
    pub shock_variable: String,
    pub horizons: usize,
    pub mean: DMatrix<f64>,
    pub q_low: DMatrix<f64>,
    pub q_high: DMatrix<f64>,
    pub band_low: f64,
    pub band_high: f64,
    pub explosive_share: f64,
}

impl IrfDraws {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn explosive_share(&self) -> f64 {
        if self.explosive.is_empty() {
            return 0.0;
        }
        self.explosive.iter().filter(|&&e| e).count() as f64 / self.explosive.len() as f64
    }

    /// Pointwise mean and quantile bands across draws.
    pub fn summarize(&self, band_low: f64, band_high: f64) -> Result<IrfSummary> {
        if self.draws.is_empty() {
            return Err(Error::Validation("no impulse-response draws to summarize".into()));
        }
        if !(0.0 < band_low && band_low < band_high && band_high < 1.0) {
            return Err(Error::Validation("band quantiles must satisfy 0 < low < high < 1".into()));
        }
        let n = self.variables.len();
        let rows = self.horizons + 1;
        let mut mean = DMatrix::zeros(rows, n);
        let mut q_low = DMatrix::zeros(rows, n);
        let mut q_high = DMatrix::zeros(rows, n);
        let mut column = vec![0.0; self.draws.len()];
        for h in 0..rows {
            for v in 0..n {
                for (d, m) in self.draws.iter().enumerate() {
                    column[d] = m[(h, v)];
                }
                column.sort_by(|a, b| a.partial_cmp(b).expect("non-finite impulse response"));
                mean[(h, v)] = stats::mean(&column);
                q_low[(h, v)] = stats::quantile_sorted(&column, band_low);
                q_high[(h, v)] = stats::quantile_sorted(&column, band_high);
            }
        }
        Ok(IrfSummary {
            variables: self.variables.clone(),
            shock_variable: self.shock_variable.clone(),
            horizons: self.horizons,
            mean,
            q_low,
            q_high,
            band_low,
            band_high,
            explosive_share: self.explosive_share(),
        })
    }
}

/// Draw posterior impulse responses to the orthogonalized shock of the
/// variable at `shock_index`.
pub fn posterior_irf(
    data: &DMatrix<f64>,
    variables: &[String],
    shock_index: usize,
    cfg: &VarConfig,
) -> Result<IrfDraws> {
    if variables.len() != data.ncols() {
        return Err(Error::Validation(format!(
            "{} variable names for {} data columns",
            variables.len(),
            data.ncols()
        )));
    }
    if shock_index >= variables.len() {
        return Err(Error::Validation("shock index out of range".into()));
    }
    let fit = fit_bvar(data, cfg.lags)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = IrfDraws {
        variables: variables.to_vec(),
        shock_variable: variables[shock_index].clone(),
        horizons: cfg.horizons,
        draws: Vec::with_capacity(cfg.n_draws),
        explosive: Vec::with_capacity(cfg.n_draws),
        explosive_threshold: cfg.explosive_threshold,
    };
    for _ in 0..cfg.n_draws {
        let (b, sigma) = fit.draw(&mut rng)?;
        let a_lags = lag_matrices(&b, fit.n_vars, fit.lags);
        let impact = identify_recursive(&sigma)?;
        out.draws.push(irf_one_draw(&a_lags, &impact, shock_index, cfg.horizons));
        out.explosive
            .push(spectral_radius(&companion(&a_lags)) > cfg.explosive_threshold);
    }
    Ok(out)
}

/// Posterior impulse responses where the shocked column is itself uncertain:
/// each VAR draw uses one retained draw of the uncertainty index in place of
/// its posterior-mean column, cycling through the supplied draws.
///
/// Requires at least [`MIN_UNCERTAINTY_DRAWS`] index draws so that the
/// measurement layer is actually integrated over rather than token-sampled.
pub fn posterior_irf_with_uncertainty(
    data: &DMatrix<f64>,
    variables: &[String],
    uncertainty_index: usize,
    uncertainty_draws: &[Vec<f64>],
    cfg: &VarConfig,
) -> Result<IrfDraws> {
    if variables.len() != data.ncols() {
        return Err(Error::Validation("variable names and data columns mismatch".into()));
    }
    if uncertainty_index >= variables.len() {
        return Err(Error::Validation("uncertainty column index out of range".into()));
    }
    if uncertainty_draws.len() < MIN_UNCERTAINTY_DRAWS {
        return Err(Error::Validation(format!(
            "need at least {MIN_UNCERTAINTY_DRAWS} uncertainty draws, got {}",
            uncertainty_draws.len()
        )));
    }
    if uncertainty_draws.iter().any(|d| d.len() != data.nrows()) {
        return Err(Error::Validation(
            "uncertainty draws must match the VAR sample length".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = IrfDraws {
        variables: variables.to_vec(),
        shock_variable: variables[uncertainty_index].clone(),
        horizons: cfg.horizons,
        draws: Vec::with_capacity(cfg.n_draws),
        explosive: Vec::with_capacity(cfg.n_draws),
        explosive_threshold: cfg.explosive_threshold,
    };
    let mut working = data.clone();
    for d in 0..cfg.n_draws {
        let u = &uncertainty_draws[d % uncertainty_draws.len()];
        for (row, &val) in u.iter().enumerate() {
            working[(row, uncertainty_index)] = val;
        }
        let fit = fit_bvar(&working, cfg.lags)?;
        let (b, sigma) = fit.draw(&mut rng)?;
        let a_lags = lag_matrices(&b, fit.n_vars, fit.lags);
        let impact = identify_recursive(&sigma)?;
        out.draws
            .push(irf_one_draw(&a_lags, &impact, uncertainty_index, cfg.horizons));
        out.explosive
            .push(spectral_radius(&companion(&a_lags)) > cfg.explosive_threshold);
    }
    Ok(out)
}

/// Average impulse-response draws across countries, pairing draws by index.
///
/// All sets must share variables, shock, horizons and draw count; the
/// averaged draw is flagged explosive if any constituent draw was.
pub fn panel_average(sets: &[IrfDraws]) -> Result<IrfDraws> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Validation("no impulse-response sets to average".into()))?;
    for s in sets {
        if s.variables != first.variables
            || s.shock_variable != first.shock_variable
            || s.horizons != first.horizons
        {
            return Err(Error::Validation(
                "impulse-response sets disagree on variables, shock or horizons".into(),
            ));
        }
        if s.n_draws() != first.n_draws() {
            return Err(Error::Validation(format!(
                "draw counts differ across countries ({} vs {}); pairing by index requires equal counts",
                s.n_draws(),
                first.n_draws()
            )));
        }
    }
    let mut out = IrfDraws {
        variables: first.variables.clone(),
        shock_variable: first.shock_variable.clone(),
        horizons: first.horizons,
        draws: Vec::with_capacity(first.n_draws()),
        explosive: Vec::with_capacity(first.n_draws()),
        explosive_threshold: first.explosive_threshold,
    };
    let weight = 1.0 / sets.len() as f64;
    for d in 0..first.n_draws() {
        let mut acc = DMatrix::zeros(first.horizons + 1, first.variables.len());
        let mut any_explosive = false;
        for s in sets {
            acc += &s.draws[d] * weight;
            any_explosive |= s.explosive[d];
        }
        out.draws.push(acc);
        out.explosive.push(any_explosive);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

impl IrfSummary {
    /// CSV with columns `variable,horizon,mean,q16,q84` (column names carry
    /// whatever band levels were used).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let lo = format!("q{:02.0}", self.band_low * 100.0);
        let hi = format!("q{:02.0}", self.band_high * 100.0);
        w.write_record(["variable", "horizon", "mean", &lo, &hi])?;
        for (v, name) in self.variables.iter().enumerate() {
            for h in 0..=self.horizons {
                w.write_record(&[
                    name.clone(),
                    h.to_string(),
                    self.mean[(h, v)].to_string(),
                    self.q_low[(h, v)].to_string(),
                    self.q_high[(h, v)].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Read a summary written by [`IrfSummary::write_csv`]. The shock
    /// variable and explosive share are not stored in the CSV; the caller
    /// supplies the former and the latter is set to zero.
    pub fn read_csv(path: &Path, shock_variable: &str) -> Result<IrfSummary> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
        let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
        if headers.len() != 5 {
            return Err(Error::Parse("impulse-response CSV must have five columns".into()));
        }
        let parse_band = |name: &str| -> Result<f64> {
            name.strip_prefix('q')
                .and_then(|s| s.parse::<f64>().ok())
                .map(|p| p / 100.0)
                .ok_or_else(|| Error::Parse(format!("band column '{name}' is not a quantile label")))
        };
        let band_low = parse_band(&headers[3])?;
        let band_high = parse_band(&headers[4])?;
        let mut variables: Vec<String> = Vec::new();
        let mut rows: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
        let mut horizons = 0usize;
        for rec in rdr.records() {
            let rec = rec?;
            let var = rec[0].to_string();
            let v = match variables.iter().position(|x| *x == var) {
                Some(i) => i,
                None => {
                    variables.push(var);
                    variables.len() - 1
                }
            };
            let parse = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse(format!("bad number '{s}' in {}", path.display())))
            };
            let h: usize = rec[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad horizon '{}'", &rec[1])))?;
            horizons = horizons.max(h);
            rows.push((v, h, parse(&rec[2])?, parse(&rec[3])?, parse(&rec[4])?));
        }
        if variables.is_empty() {
            return Err(Error::Parse("impulse-response CSV has no rows".into()));
        }
        let mut out = IrfSummary {
            variables: variables.clone(),
            shock_variable: shock_variable.to_string(),
            horizons,
            mean: DMatrix::zeros(horizons + 1, variables.len()),
            q_low: DMatrix::zeros(horizons + 1, variables.len()),
            q_high: DMatrix::zeros(horizons + 1, variables.len()),
            band_low,
            band_high,
            explosive_share: 0.0,
        };
        for (v, h, m, lo, hi) in rows {
            out.mean[(h, v)] = m;
            out.q_low[(h, v)] = lo;
            out.q_high[(h, v)] = hi;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::Rng;

    /// Simulate a stable VAR(p) with intercept.
    fn simulate_var(
        c: &DVector<f64>,
        a_lags: &[DMatrix<f64>],
        sigma_chol: &DMatrix<f64>,
        t: usize,
        seed: u64,
    ) -> DMatrix<f64> {
        let n = c.len();
        let p = a_lags.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let burn = 100;
        let mut hist: Vec<DVector<f64>> = vec![DVector::zeros(n); p];
        let mut rows = Vec::with_capacity(t);
        for i in 0..burn + t {
            let mut y = c.clone();
            for (j, a) in a_lags.iter().enumerate() {
                y += a * &hist[j];
            }
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            y += sigma_chol * z;
            hist.rotate_right(1);
            hist[0] = y.clone();
            if i >= burn {
                rows.push(y);
            }
        }
        let mut out = DMatrix::zeros(t, n);
        for (i, r) in rows.iter().enumerate() {
            out.set_row(i, &r.transpose());
        }
        out
    }

    #[test]
    fn least_squares_recovers_var_coefficients() {
        let c = DVector::from_vec(vec![0.5, -0.2]);
        let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.3]);
        let sig_l = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.1, 0.4]);
        let data = simulate_var(&c, std::slice::from_ref(&a1), &sig_l, 4000, 1);
        let fit = fit_bvar(&data, 1).unwrap();
        assert_abs_diff_eq!(fit.b_hat[(0, 0)], 0.5, epsilon = 0.08);
        assert_abs_diff_eq!(fit.b_hat[(0, 1)], -0.2, epsilon = 0.08);
        let a_est = lag_matrices(&fit.b_hat, 2, 1);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(a_est[0][(i, j)], a1[(i, j)], epsilon = 0.05);
            }
        }
        // Residual scale close to T * Sigma.
        let sigma = &sig_l * sig_l.transpose();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(
                    fit.resid_scale[(i, j)] / fit.t_eff as f64,
                    sigma[(i, j)],
                    epsilon = 0.04
                );
            }
        }
    }

    #[test]
    fn recursive_identification_reproduces_covariance() {
        let sig_l = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.4, 0.8, 0.0, -0.3, 0.2, 0.6]);
        let sigma = &sig_l * sig_l.transpose();
        let a = identify_recursive(&sigma).unwrap();
        // Lower triangular with positive diagonal, reproducing Sigma.
        for i in 0..3 {
            assert!(a[(i, i)] > 0.0);
            for j in (i + 1)..3 {
                assert_eq!(a[(i, j)], 0.0);
            }
        }
        let recon = &a * a.transpose();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(recon[(i, j)], sigma[(i, j)], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn ar1_impulse_response_is_geometric() {
        // Univariate AR(1) with rho = 0.8, sigma = 0.7: response at horizon h
        // is sigma * rho^h exactly.
        let a = vec![DMatrix::from_element(1, 1, 0.8)];
        let impact = DMatrix::from_element(1, 1, 0.7);
        let irf = irf_one_draw(&a, &impact, 0, 20);
        for h in 0..=20 {
            assert_abs_diff_eq!(irf[(h, 0)], 0.7 * 0.8f64.powi(h as i32), epsilon = 1e-12);
        }
    }

    #[test]
    fn companion_and_ma_recursion_agree() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.3]);
        let a2 = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, -0.1]);
        let impact = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.9]);
        let lags = vec![a1, a2];
        let irf = irf_one_draw(&lags, &impact, 1, 12);
        // Independent oracle: powers of the companion matrix.
        let f = companion(&lags);
        let mut fh = DMatrix::<f64>::identity(4, 4);
        for h in 0..=12 {
            let psi = fh.view((0, 0), (2, 2)).clone_owned();
            let resp = &psi * impact.column(1);
            assert_abs_diff_eq!(irf[(h, 0)], resp[0], epsilon = 1e-12);
            assert_abs_diff_eq!(irf[(h, 1)], resp[1], epsilon = 1e-12);
            fh = &fh * &f;
        }
    }

    #[test]
    fn explosive_draws_are_flagged_and_retained() {
        let stable = vec![DMatrix::from_element(1, 1, 0.9)];
        let explosive = vec![DMatrix::from_element(1, 1, 1.3)];
        assert!(spectral_radius(&companion(&stable)) < 1.2);
        assert!(spectral_radius(&companion(&explosive)) > 1.2);

        // End to end: near-unit-root data keeps every draw in the output.
        let c = DVector::from_vec(vec![0.0]);
        let a = vec![DMatrix::from_element(1, 1, 0.98)];
        let sig = DMatrix::from_element(1, 1, 1.0);
        let data = simulate_var(&c, &a, &sig, 60, 2);
        let cfg = VarConfig { lags: 1, horizons: 8, n_draws: 400, seed: 3, ..VarConfig::default() };
        let irf = posterior_irf(&data, &["y".to_string()], 0, &cfg).unwrap();
        assert_eq!(irf.n_draws(), 400);
        assert_eq!(irf.explosive.len(), 400);
        let share = irf.explosive_share();
        assert!((0.0..1.0).contains(&share));
    }

    #[test]
    fn posterior_irf_tracks_analytic_ar1() {
        // The acceptance-level check in miniature: posterior mean response of
        // an AR(1) with rho = 0.8 stays within a few percent of sigma rho^h.
        let c = DVector::from_vec(vec![0.0]);
        let rho = 0.8;
        let sigma = 1.0;
        // Posterior concentration: estimation error in rho compounds as
        // roughly h * d_rho / rho at horizon h, so pinning horizon 10 to 5%
        // needs a long sample.
        let a = vec![DMatrix::from_element(1, 1, rho)];
        let sig = DMatrix::from_element(1, 1, sigma);
        let data = simulate_var(&c, &a, &sig, 60_000, 4);
        let cfg = VarConfig { lags: 1, horizons: 10, n_draws: 800, seed: 5, ..VarConfig::default() };
        let irf = posterior_irf(&data, &["y".to_string()], 0, &cfg).unwrap();
        let summary = irf.summarize(0.16, 0.84).unwrap();
        for h in 0..=10 {
            let expected = sigma * rho.powi(h as i32);
            assert_abs_diff_eq!(summary.mean[(h, 0)], expected, epsilon = 0.05 * expected.max(0.1));
            assert!(summary.q_low[(h, 0)] <= summary.mean[(h, 0)]);
            assert!(summary.q_high[(h, 0)] >= summary.mean[(h, 0)]);
        }
    }

    #[test]
    fn panel_average_pairs_draws_by_index() {
        let mk = |val: f64, expl: bool| IrfDraws {
            variables: vec!["a".into(), "b".into()],
            shock_variable: "b".into(),
            horizons: 2,
            draws: vec![DMatrix::from_element(3, 2, val), DMatrix::from_element(3, 2, 2.0 * val)],
            explosive: vec![expl, false],
            explosive_threshold: 1.2,
        };
        let avg = panel_average(&[mk(1.0, false), mk(3.0, true)]).unwrap();
        assert_eq!(avg.n_draws(), 2);
        assert_abs_diff_eq!(avg.draws[0][(0, 0)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(avg.draws[1][(1, 1)], 4.0, epsilon = 1e-14);
        // Explosive flag ORed across countries per draw index.
        assert_eq!(avg.explosive, vec![true, false]);

        // Unequal draw counts are rejected.
        let mut short = mk(1.0, false);
        short.draws.pop();
        short.explosive.pop();
        assert!(panel_average(&[mk(1.0, false), short]).is_err());
    }

    #[test]
    fn uncertainty_draw_variant_requires_enough_draws_and_varies() {
        let c = DVector::from_vec(vec![0.1, 0.0]);
        let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.1, 0.6]);
        let sig = DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.1, 0.5]);
        let data = simulate_var(&c, &[a1], &sig, 220, 6);
        let vars = vec!["activity".to_string(), "uncertainty".to_string()];

        // Too few index draws: rejected.
        let few: Vec<Vec<f64>> = (0..50).map(|_| data.column(1).iter().copied().collect()).collect();
        let cfg = VarConfig { lags: 1, horizons: 6, n_draws: 200, seed: 7, ..VarConfig::default() };
        assert!(posterior_irf_with_uncertainty(&data, &vars, 1, &few, &cfg).is_err());

        // Enough draws: runs, and perturbed index draws shift the responses.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let many: Vec<Vec<f64>> = (0..120)
            .map(|_| {
                data.column(1)
                    .iter()
                    .map(|v| v + 0.3 * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let irf = posterior_irf_with_uncertainty(&data, &vars, 1, &many, &cfg).unwrap();
        assert_eq!(irf.n_draws(), 200);
        assert_eq!(irf.shock_variable, "uncertainty");
        // Draws differ across uncertainty draws.
        assert_ne!(irf.draws[0], irf.draws[1]);
        // Deterministic given seed.
        let again = posterior_irf_with_uncertainty(&data, &vars, 1, &many, &cfg).unwrap();
        assert_eq!(irf, again);
    }

    #[test]
    fn summary_csv_written_with_band_headers() {
        let irf = IrfDraws {
            variables: vec!["gdp".into(), "unc".into()],
            shock_variable: "unc".into(),
            horizons: 3,
            draws: vec![DMatrix::from_element(4, 2, 1.0), DMatrix::from_element(4, 2, 3.0)],
            explosive: vec![false, false],
            explosive_threshold: 1.2,
        };
        let summary = irf.summarize(0.16, 0.84).unwrap();
        assert_abs_diff_eq!(summary.mean[(0, 0)], 2.0, epsilon = 1e-14);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("irf.csv");
        summary.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("variable,horizon,mean,q16,q84"));
        assert_eq!(text.lines().count(), 1 + 2 * 4);
        assert!(text.lines().any(|l| l.starts_with("unc,3,")));
        // Round trip restores values and band levels.
        let back = IrfSummary::read_csv(&path, "unc").unwrap();
        assert_eq!(back.variables, summary.variables);
        assert_eq!(back.horizons, 3);
        assert_eq!(back.band_low, 0.16);
        assert_eq!(back.band_high, 0.84);
        assert_eq!(back.mean, summary.mean);
        assert_eq!(back.q_high, summary.q_high);
    }

    proptest! {
        /// Scaling the innovation covariance by  c^2  scales every response
        /// by  c : identification and the MA recursion are both homogeneous.
        #[test]
        fn irf_scales_linearly_with_shock_size(scale in 0.1f64..3.0, seed in 0u64..64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut l = DMatrix::<f64>::zeros(2, 2);
            for i in 0..2 {
                for j in 0..=i {
                    l[(i, j)] = rng.sample::<f64, _>(StandardNormal);
                }
                l[(i, i)] = l[(i, i)].abs() + 0.2;
            }
            let sigma = &l * l.transpose();
            let a = vec![DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.2, 0.5])];
            let base = irf_one_draw(&a, &identify_recursive(&sigma).unwrap(), 1, 8);
            let scaled_sigma = &sigma * (scale * scale);
            let scaled = irf_one_draw(&a, &identify_recursive(&scaled_sigma).unwrap(), 1, 8);
            for h in 0..=8 {
                for v in 0..2 {
                    prop_assert!((scaled[(h, v)] - scale * base[(h, v)]).abs() < 1e-9 * (1.0 + base[(h, v)].abs()));
                }
            }
        }
    }
}
