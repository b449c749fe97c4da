use ndarray::Array2;

use super::network::DrqnParams;
use super::replay::{batch_steps, Experience};
use crate::error::{Error, Result};

/// Squared temporal-difference loss and its gradient.
///
/// Each experience contributes one residual, summed over its pairs:
/// `sum_k (1-gamma) U_k + gamma Q(n'_k, a'_k; target) - Q(n_k, a_k; theta)`.
/// The loss is the batch mean of the squared residuals. The target branch
/// is held constant.
pub fn loss_and_grad(
    theta: &DrqnParams,
    target: &DrqnParams,
    batch: &[&Experience],
    gamma: f64,
) -> Result<(f64, DrqnParams)> {
    let first = batch
        .first()
        .ok_or_else(|| Error::Precondition("empty minibatch".into()))?;
    let (steps, features) = (first.steps, first.features);
    let actions = theta.shape().actions;
    let mut current: Vec<&[f64]> = Vec::new();
    let mut next: Vec<&[f64]> = Vec::new();
    for e in batch {
        if e.steps != steps || e.features != features {
            return Err(Error::ShapeMismatch("minibatch mixes window shapes".into()));
        }
        for k in 0..e.num_pairs {
            if e.actions[k] >= actions || e.next_actions[k] >= actions {
                return Err(Error::ShapeMismatch(format!(
                    "action index beyond the {actions}-wide head"
                )));
            }
            current.push(e.window(k));
            next.push(e.next_window(k));
        }
    }
    let cache = theta.forward_cached(&batch_steps(&current, steps, features))?;
    let q_next = target.forward(&batch_steps(&next, steps, features))?;

    let n = batch.len() as f64;
    let mut dq = Array2::<f64>::zeros(cache.q.raw_dim());
    let mut loss = 0.0;
    let mut row = 0;
    for e in batch {
        let mut residual = 0.0;
        for k in 0..e.num_pairs {
            residual += (1.0 - gamma) * e.utilities[k] + gamma * q_next[[row + k, e.next_actions[k]]]
                - cache.q[[row + k, e.actions[k]]];
        }
        loss += residual * residual;
        for k in 0..e.num_pairs {
            dq[[row + k, e.actions[k]]] -= 2.0 * residual / n;
        }
        row += e.num_pairs;
    }
    let grad = theta.backward(&cache, dq.view());
    Ok((loss / n, grad))
}
