use super::features::SampleSet;
use crate::{linalg, Error, Result, Scalar};

/// Ridge regression without intercept: `argmin ‖Xw − y‖² + λ‖w‖²`, solved
/// from the normal equations `(XᵀX + λI) w = Xᵀy` by Cholesky.
pub fn fit_ridge<T: Scalar>(samples: &SampleSet<T>, lambda: T) -> Result<Vec<T>> {
    let d = samples.dim;
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge penalty must be positive, got {lambda}"
        )));
    }
    if samples.len() < d + 1 {
        return Err(Error::InsufficientData(format!(
            "ridge needs at least {} samples, got {}",
            d + 1,
            samples.len()
        )));
    }
    if samples.x.iter().chain(&samples.y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite ridge inputs".into()));
    }
    let mut gram = vec![T::zero(); d * d];
    let mut rhs = vec![T::zero(); d];
    for k in 0..samples.len() {
        let row = samples.row(k);
        let y = samples.y[k];
        for a in 0..d {
            let xa = row[a];
            rhs[a] += xa * y;
            for b in a..d {
                gram[a * d + b] += xa * row[b];
            }
        }
    }
    for a in 0..d {
        gram[a * d + a] += lambda;
        for b in 0..a {
            gram[a * d + b] = gram[b * d + a];
        }
    }
    linalg::cholesky_solve(&gram, d, &rhs)
}

/// Gradient of the ridge objective, `2Xᵀ(Xw − y) + 2λw`.
pub fn ridge_gradient<T: Scalar>(samples: &SampleSet<T>, w: &[T], lambda: T) -> Vec<T> {
    let two = T::lit(2.0);
    let pred = samples.predict(w);
    let mut g: Vec<T> = w.iter().map(|&wi| two * lambda * wi).collect();
    for k in 0..samples.len() {
        let e = two * (pred[k] - samples.y[k]);
        for (gj, &xj) in g.iter_mut().zip(samples.row(k)) {
            *gj += e * xj;
        }
    }
    g
}
