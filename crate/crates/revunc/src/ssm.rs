//! Linear-Gaussian state-space machinery: Kalman filter, RTS smoother and a
//! forward-filter backward-sampling (FFBS) draw of the joint state path.
//!
//! Two non-standard requirements shape this module:
//!
//! * observations may hold the state *exactly* (zero measurement noise), and
//! * the state innovation covariance `Q_t` may be rank deficient — some state
//!   coordinates receive no shock at all.
//!
//! Filtered and conditional covariances are therefore only positive
//! *semi*-definite. All conditioning steps use a symmetric pseudo-inverse and
//! degenerate-normal draws restricted to the stochastic subspace, and every
//! covariance update uses the Joseph form followed by re-symmetrization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dist::{mvn_draw_psd, sym_pseudo_inverse};
use crate::error::{Error, Result};

/// Time-varying linear-Gaussian state-space model.
///
/// Conventions for `t = 0..n-1` (all sequences have length `n`):
///
/// ```text
/// y_t     = obs_intercept[t] + obs_loading[t] * x_t + e_t,   e_t ~ N(0, obs_cov[t])
/// x_t     = state_intercept[t] + transition[t] * x_{t-1} + u_t,  u_t ~ N(0, state_cov[t])   (t >= 1)
/// x_0     ~ N(init_mean, init_cov)
/// ```
///
/// Index 0 of `transition`, `state_intercept` and `state_cov` is ignored; it
/// is kept so that every sequence is indexed by the same `t`.
#[derive(Debug, Clone)]
pub struct LinearGaussianSsm {
    pub obs_loading: Vec<DMatrix<f64>>,
    pub obs_intercept: Vec<DVector<f64>>,
    pub obs_cov: Vec<DMatrix<f64>>,
    pub transition: Vec<DMatrix<f64>>,
    pub state_intercept: Vec<DVector<f64>>,
    pub state_cov: Vec<DMatrix<f64>>,
    pub init_mean: DVector<f64>,
    pub init_cov: DMatrix<f64>,
}

impl LinearGaussianSsm {
    /// Model with time-invariant system matrices repeated over `n` periods.
    pub fn time_invariant(
        n: usize,
        z: DMatrix<f64>,
        h: DMatrix<f64>,
        t: DMatrix<f64>,
        q: DMatrix<f64>,
        init_mean: DVector<f64>,
        init_cov: DMatrix<f64>,
    ) -> Self {
        let m = t.nrows();
        LinearGaussianSsm {
            obs_loading: vec![z.clone(); n],
            obs_intercept: vec![DVector::zeros(z.nrows()); n],
            obs_cov: vec![h; n],
            transition: vec![t; n],
            state_intercept: vec![DVector::zeros(m); n],
            state_cov: vec![q; n],
            init_mean,
            init_cov,
        }
    }

    pub fn n_periods(&self) -> usize {
        self.obs_loading.len()
    }

    pub fn state_dim(&self) -> usize {
        self.init_mean.len()
    }

    fn validate(&self, y: &[DVector<f64>]) -> Result<()> {
        let n = self.n_periods();
        if n == 0 {
            return Err(Error::Validation("state-space model has no periods".into()));
        }
        if y.len() != n {
            return Err(Error::Validation(format!(
                "observation sequence length {} does not match model periods {n}",
                y.len()
            )));
        }
        let m = self.state_dim();
        for (name, len) in [
            ("obs_intercept", self.obs_intercept.len()),
            ("obs_cov", self.obs_cov.len()),
            ("transition", self.transition.len()),
            ("state_intercept", self.state_intercept.len()),
            ("state_cov", self.state_cov.len()),
        ] {
            if len != n {
                return Err(Error::Validation(format!("{name} has length {len}, expected {n}")));
            }
        }
        for (t, y_t) in y.iter().enumerate() {
            let p = self.obs_loading[t].nrows();
            if self.obs_loading[t].ncols() != m
                || self.obs_intercept[t].len() != p
                || self.obs_cov[t].nrows() != p
                || y_t.len() != p
            {
                return Err(Error::Validation(format!("dimension mismatch at period {t}")));
            }
            if t >= 1
                && (self.transition[t].nrows() != m
                    || self.transition[t].ncols() != m
                    || self.state_cov[t].nrows() != m)
            {
                return Err(Error::Validation(format!("state dimension mismatch at period {t}")));
            }
        }
        Ok(())
    }
}

/// Output of [`kalman_filter`]: one entry per period.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub pred_mean: Vec<DVector<f64>>,
    pub pred_cov: Vec<DMatrix<f64>>,
    pub filt_mean: Vec<DVector<f64>>,
    pub filt_cov: Vec<DMatrix<f64>>,
    /// Per-period log-likelihood contribution; 0 for fully missing periods.
    pub loglik: Vec<f64>,
}

impl FilterOutput {
    pub fn total_loglik(&self) -> f64 {
        self.loglik.iter().sum()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let mt = m.transpose();
    *m += mt;
    *m *= 0.5;
}

/// Indices of observed (non-NaN) components at one period.
fn present_rows(y: &DVector<f64>) -> Vec<usize> {
    (0..y.len()).filter(|&i| y[i].is_finite()).collect()
}

/// Kalman filter with row-deletion handling of missing observations
/// (missing components are encoded as NaN).
pub fn kalman_filter(model: &LinearGaussianSsm, y: &[DVector<f64>]) -> Result<FilterOutput> {
    model.validate(y)?;
    let n = model.n_periods();
    let m = model.state_dim();
    let mut out = FilterOutput {
        pred_mean: Vec::with_capacity(n),
        pred_cov: Vec::with_capacity(n),
        filt_mean: Vec::with_capacity(n),
        filt_cov: Vec::with_capacity(n),
        loglik: Vec::with_capacity(n),
    };

    let mut a = model.init_mean.clone();
    let mut p = model.init_cov.clone();
    for (t, y_t) in y.iter().enumerate() {
        if t > 0 {
            a = &model.state_intercept[t] + &model.transition[t] * &a;
            p = &model.transition[t] * &p * model.transition[t].transpose() + &model.state_cov[t];
            symmetrize(&mut p);
        }
        out.pred_mean.push(a.clone());
        out.pred_cov.push(p.clone());

        let rows = present_rows(y_t);
        if rows.is_empty() {
            out.filt_mean.push(a.clone());
            out.filt_cov.push(p.clone());
            out.loglik.push(0.0);
            continue;
        }
        let k = rows.len();
        let z_full = &model.obs_loading[t];
        let z = DMatrix::from_fn(k, m, |r, c| z_full[(rows[r], c)]);
        let d = DVector::from_fn(k, |r, _| model.obs_intercept[t][rows[r]]);
        let h = DMatrix::from_fn(k, k, |r, c| model.obs_cov[t][(rows[r], rows[c])]);
        let y_obs = DVector::from_fn(k, |r, _| y_t[rows[r]]);

        let v = &y_obs - (&d + &z * &a);
        let mut f = &z * &p * z.transpose() + &h;
        symmetrize(&mut f);
        let chol = f.clone().cholesky().ok_or_else(|| {
            Error::Numerical(format!("innovation covariance singular at period {t}"))
        })?;
        let log_det = 2.0 * (0..k).map(|i| chol.l()[(i, i)].ln()).sum::<f64>();
        let f_inv_v = chol.solve(&v);
        let gain = &p * z.transpose() * chol.inverse();

        let a_new = &a + &gain * &v;
        // Joseph-form update keeps the covariance PSD even with zero
        // measurement noise.
        let i_kz = DMatrix::<f64>::identity(m, m) - &gain * &z;
        let mut p_new = &i_kz * &p * i_kz.transpose() + &gain * &h * gain.transpose();
        symmetrize(&mut p_new);

        let ll = -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + v.dot(&f_inv_v));
        a = a_new;
        p = p_new;
        out.filt_mean.push(a.clone());
        out.filt_cov.push(p.clone());
        out.loglik.push(ll);
    }
    Ok(out)
}

/// Output of [`kalman_smoother`].
#[derive(Debug, Clone)]
pub struct SmootherOutput {
    pub mean: Vec<DVector<f64>>,
    pub cov: Vec<DMatrix<f64>>,
}

/// Rauch-Tung-Striebel smoother on top of the filter; uses a pseudo-inverse
/// of the one-step-ahead covariance so degenerate models are handled.
pub fn kalman_smoother(model: &LinearGaussianSsm, y: &[DVector<f64>]) -> Result<SmootherOutput> {
    let filt = kalman_filter(model, y)?;
    let n = model.n_periods();
    let mut mean = filt.filt_mean.clone();
    let mut cov = filt.filt_cov.clone();
    for t in (0..n.saturating_sub(1)).rev() {
        let tr = &model.transition[t + 1];
        let gain = &filt.filt_cov[t] * tr.transpose() * sym_pseudo_inverse(&filt.pred_cov[t + 1]);
        mean[t] = &filt.filt_mean[t] + &gain * (&mean[t + 1] - &filt.pred_mean[t + 1]);
        let mut c =
            &filt.filt_cov[t] + &gain * (&cov[t + 1] - &filt.pred_cov[t + 1]) * gain.transpose();
        symmetrize(&mut c);
        cov[t] = c;
    }
    Ok(SmootherOutput { mean, cov })
}

/// Exact joint draw of the state path given all observations
/// (forward filter, backward sampler).
///
/// Degenerate conditionals — produced by exact observation identities or by
/// zero rows in `Q_t` — are sampled on their stochastic subspace only: the
/// one-step covariance is pseudo-inverted and the conditional covariance's
/// null directions get zero innovation.
pub fn ffbs_draw<R: Rng + ?Sized>(
    model: &LinearGaussianSsm,
    y: &[DVector<f64>],
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let filt = kalman_filter(model, y)?;
    let n = model.n_periods();
    let mut path = vec![DVector::<f64>::zeros(model.state_dim()); n];
    path[n - 1] = mvn_draw_psd(&filt.filt_mean[n - 1], &filt.filt_cov[n - 1], rng)?;
    for t in (0..n - 1).rev() {
        let tr = &model.transition[t + 1];
        // One-step covariance of x_{t+1} given data up to t.
        let mut s = tr * &filt.filt_cov[t] * tr.transpose() + &model.state_cov[t + 1];
        symmetrize(&mut s);
        let s_pinv = sym_pseudo_inverse(&s);
        let cross = &filt.filt_cov[t] * tr.transpose(); // Cov(x_t, x_{t+1} | data_t)
        let gain = &cross * &s_pinv;
        let resid = &path[t + 1] - (&model.state_intercept[t + 1] + tr * &filt.filt_mean[t]);
        let mean = &filt.filt_mean[t] + &gain * resid;
        // Joseph form of the conditional covariance: algebraically equal to
        // P - G S G' but free of catastrophic cancellation when the
        // conditional is (nearly) degenerate.
        let i_gt = DMatrix::<f64>::identity(model.state_dim(), model.state_dim()) - &gain * tr;
        let mut cov = &i_gt * &filt.filt_cov[t] * i_gt.transpose()
            + &gain * &model.state_cov[t + 1] * gain.transpose();
        symmetrize(&mut cov);
        path[t] = mvn_draw_psd(&mean, &cov, rng)?;
    }
    Ok(path)
}
