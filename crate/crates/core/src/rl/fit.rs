//! Actor-fit value: the batch-mean actor loss without any entropy term.
//! Very negative values mean the actor sits on high critic values.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};

use crate::nn::{GaussianBatch, Mlp};
use crate::Result;

/// Critic input rows `[state | action]`.
pub fn critic_input(states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[states, actions]).expect("row counts match")
}

/// Deterministic-actor fit: `-mean_s Q(s, actor(s))`.
pub fn deterministic_fit_value(critic: &Mlp, actor: &Mlp, states: ArrayView2<f64>) -> Result<f64> {
    let actions = actor.forward(states)?;
    let q = critic.forward(critic_input(states, actions.view()).view())?;
    Ok(-q.column(0).mean().unwrap_or(0.0))
}

/// Stochastic-actor fit: `-mean_s min_i Q_i(s, a~)` with `a~` drawn from the
/// squashed Gaussian using the given standard-normal `noise`.
pub fn stochastic_fit_value(
    critics: [&Mlp; 2],
    actor: &Mlp,
    states: ArrayView2<f64>,
    noise: Array2<f64>,
) -> Result<f64> {
    let out = actor.forward(states)?;
    let sample = GaussianBatch::from_output(out.view(), noise)?;
    let x = critic_input(states, sample.action.view());
    let q1 = critics[0].forward(x.view())?;
    let q2 = critics[1].forward(x.view())?;
    let qmin: Array1<f64> = q1
        .column(0)
        .iter()
        .zip(q2.column(0))
        .map(|(a, b)| a.min(*b))
        .collect();
    Ok(-qmin.mean().unwrap_or(0.0))
}
