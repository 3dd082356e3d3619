use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::SampleSet;
use crate::{stats, Error, Result, Scalar};

/// One day's composite loss
/// `Σ_i (Y_i − r_i)² + η Σ_i Σ_j max(0, −(Y_i − Y_j)(r_i − r_j))`
/// over all ordered pairs.
pub fn composite_loss<T: Scalar>(y: &[T], r: &[T], eta: T) -> Result<T> {
    check_inputs(y, r, eta)?;
    Ok(composite_loss_grad(y, r, eta, None).0)
}

fn check_inputs<T: Scalar>(y: &[T], r: &[T], eta: T) -> Result<()> {
    if y.len() != r.len() {
        return Err(Error::InvalidArgument(format!(
            "score and return vectors differ in length: {} vs {}",
            y.len(),
            r.len()
        )));
    }
    if !(eta >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "pairwise weight must be non-negative, got {eta}"
        )));
    }
    Ok(())
}

/// Loss and its gradient with respect to `y`. The hinge subgradient is 0 at
/// its kink.
///
/// With `partners`, the pairwise term only visits `(i, j)` for `j` in
/// `partners[i]` and is rescaled by `(N − 1) / k` to estimate the full sum.
pub fn composite_loss_grad<T: Scalar>(y: &[T], r: &[T], eta: T, partners: Option<&[Vec<usize>]>) -> (T, Vec<T>) {
    scaled_loss_grad(y, r, eta, partners, T::one(), T::one())
}

/// Per-day training loss: mean squared error over the stocks plus `eta`
/// times the mean hinge over the `N(N − 1)` ordered pairs.
pub fn mean_composite_loss_grad<T: Scalar>(y: &[T], r: &[T], eta: T, partners: Option<&[Vec<usize>]>) -> (T, Vec<T>) {
    let n = y.len();
    if n == 0 {
        return (T::zero(), Vec::new());
    }
    let pairs = T::count((n * n.saturating_sub(1)).max(1));
    scaled_loss_grad(y, r, eta, partners, T::one() / T::count(n), T::one() / pairs)
}

fn scaled_loss_grad<T: Scalar>(
    y: &[T],
    r: &[T],
    eta: T,
    partners: Option<&[Vec<usize>]>,
    point_scale: T,
    pair_scale: T,
) -> (T, Vec<T>) {
    let n = y.len();
    let two = T::lit(2.0);
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); n];
    for i in 0..n {
        let e = y[i] - r[i];
        loss += point_scale * e * e;
        grad[i] = point_scale * two * e;
    }
    if eta == T::zero() || n < 2 {
        return (loss, grad);
    }
    let mut pair_loss = T::zero();
    let mut pair_grad = vec![T::zero(); n];
    let mut visit = |i: usize, j: usize| {
        let dr = r[i] - r[j];
        let h = -(y[i] - y[j]) * dr;
        if h > T::zero() {
            pair_loss += h;
            pair_grad[i] -= dr;
            pair_grad[j] += dr;
        }
    };
    let scale = match partners {
        None => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        visit(i, j);
                    }
                }
            }
            T::one()
        }
        Some(p) => {
            let mut k = 0;
            for (i, js) in p.iter().enumerate() {
                k = k.max(js.len());
                for &j in js {
                    visit(i, j);
                }
            }
            if k == 0 {
                T::zero()
            } else {
                T::count(n - 1) / T::count(k)
            }
        }
    };
    let w = eta * scale * pair_scale;
    loss += w * pair_loss;
    for (g, pg) in grad.iter_mut().zip(pair_grad) {
        *g += w * pg;
    }
    (loss, grad)
}

/// Fixed random partner lists, `k` per stock, for every day group.
pub fn sample_partners<T: Scalar>(samples: &SampleSet<T>, k: usize, seed: u64) -> Vec<Vec<Vec<usize>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples
        .groups
        .iter()
        .map(|g| {
            let n = g.len();
            let k = k.min(n.saturating_sub(1));
            (0..n)
                .map(|i| {
                    sample(&mut rng, n - 1, k)
                        .into_iter()
                        .map(|j| if j >= i { j + 1 } else { j })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Mean over days of [`mean_composite_loss_grad`] for the linear scorer
/// `Y = Xw`, and its gradient with respect to `w`.
pub fn ranker_objective<T: Scalar>(
    samples: &SampleSet<T>,
    w: &[T],
    eta: T,
    partners: Option<&[Vec<Vec<usize>>]>,
) -> (T, Vec<T>) {
    let pred = samples.predict(w);
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); samples.dim];
    for (g, rows) in samples.groups.iter().enumerate() {
        let p = partners.map(|p| p[g].as_slice());
        let (l, dy) = mean_composite_loss_grad(&pred[rows.clone()], &samples.y[rows.clone()], eta, p);
        loss += l;
        for (k, d) in rows.clone().zip(dy) {
            for (gj, &xj) in grad.iter_mut().zip(samples.row(k)) {
                *gj += d * xj;
            }
        }
    }
    let days = T::count(samples.groups.len().max(1));
    grad.iter_mut().for_each(|g| *g /= days);
    (loss / days, grad)
}

/// Mean over day groups of the Pearson correlation between `Xw` and `y`;
/// days with zero dispersion are skipped.
pub fn mean_daily_ic<T: Scalar>(samples: &SampleSet<T>, w: &[T]) -> Option<T> {
    let pred = samples.predict(w);
    let ics: Vec<T> = samples
        .groups
        .iter()
        .filter_map(|g| stats::pearson(&pred[g.clone()], &samples.y[g.clone()]))
        .collect();
    stats::mean(&ics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog<T = f64> {
    pub epoch: usize,
    pub train_loss: T,
    pub valid_ic: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankerOptions<T> {
    pub learning_rate: T,
    pub epochs: usize,
    pub patience: usize,
    pub eta: T,
    pub sampled_pairs: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankerFit<T> {
    pub weights: Vec<T>,
    pub log: Vec<EpochLog<T>>,
    pub best_epoch: Option<usize>,
}

/// Full-batch gradient descent on the mean daily composite loss, starting
/// from zero weights.
///
/// Log entry `e` describes the weights after `e` steps. The returned weights
/// are those with the best validation IC; training stops once `patience`
/// steps pass without improvement. Without any defined validation IC the
/// final weights are returned.
pub fn train_linear_ranker<T: Scalar>(
    train: &SampleSet<T>,
    valid: &SampleSet<T>,
    opts: &RankerOptions<T>,
) -> Result<RankerFit<T>> {
    if train.is_empty() {
        return Err(Error::InsufficientData("ranker training split has no samples".into()));
    }
    if valid.dim != train.dim {
        return Err(Error::InvalidArgument("train and valid feature widths differ".into()));
    }
    if !(opts.learning_rate > T::zero()) {
        return Err(Error::InvalidArgument("learning rate must be positive".into()));
    }
    check_inputs(&[], &[], opts.eta)?;
    let partners = opts.sampled_pairs.map(|k| sample_partners(train, k, opts.seed));
    let mut w = vec![T::zero(); train.dim];
    let mut log = Vec::with_capacity(opts.epochs + 1);
    let mut best: Option<(usize, T, Vec<T>)> = None;
    for epoch in 0..=opts.epochs {
        let (loss, grad) = ranker_objective(train, &w, opts.eta, partners.as_deref());
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: loss.as_f64(),
            });
        }
        let valid_ic = if valid.is_empty() {
            None
        } else {
            mean_daily_ic(valid, &w)
        };
        log.push(EpochLog {
            epoch,
            train_loss: loss,
            valid_ic,
        });
        if let Some(ic) = valid_ic {
            if best.as_ref().is_none_or(|(_, b, _)| ic > *b) {
                best = Some((epoch, ic, w.clone()));
            }
        }
        if let Some((b, _, _)) = &best {
            if epoch - b >= opts.patience {
                break;
            }
        }
        if epoch < opts.epochs {
            for (wj, gj) in w.iter_mut().zip(&grad) {
                *wj -= opts.learning_rate * *gj;
            }
        }
    }
    Ok(match best {
        Some((epoch, _, weights)) => RankerFit {
            weights,
            log,
            best_epoch: Some(epoch),
        },
        None => RankerFit {
            weights: w,
            log,
            best_epoch: None,
        },
    })
}
