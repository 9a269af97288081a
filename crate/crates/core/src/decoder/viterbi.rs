use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::scalar::Score;
use crate::transitions::TransitionModel;

/// Best label sequence and its total score.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded<S> {
    pub states: Vec<usize>,
    pub score: S,
}

/// Maximizes `start[y1] + sum_t U[t, y_t] + sum_t trans[y_{t-1}, y_t]`.
///
/// Ties go to the lowest label index, both at each backpointer and at the
/// final step. Fails with `NoValidPath` when every sequence scores -inf.
pub fn viterbi<S: Score>(emissions: ArrayView2<'_, S>, model: &TransitionModel<S>) -> Result<Decoded<S>> {
    let (steps, n) = emissions.dim();
    if n != model.num_labels() {
        return Err(Error::Dimension(format!(
            "emissions have {n} columns but the model has {} labels",
            model.num_labels()
        )));
    }
    if steps == 0 {
        return Err(Error::Dimension("emissions have no steps".into()));
    }

    let mut delta: Vec<S> = (0..n).map(|y| model.start(y) + emissions[[0, y]]).collect();
    let mut back = vec![0usize; steps * n];
    let mut next = vec![S::neg_infinity(); n];
    for t in 1..steps {
        for y in 0..n {
            let mut best = S::neg_infinity();
            let mut arg = 0;
            for (p, &d) in delta.iter().enumerate() {
                let cand = d + model.trans(p, y);
                if cand > best {
                    best = cand;
                    arg = p;
                }
            }
            back[t * n + y] = arg;
            next[y] = best + emissions[[t, y]];
        }
        std::mem::swap(&mut delta, &mut next);
    }

    let mut last = 0;
    let mut score = S::neg_infinity();
    for (y, &d) in delta.iter().enumerate() {
        if d > score {
            score = d;
            last = y;
        }
    }
    if score == S::neg_infinity() {
        return Err(Error::NoValidPath { steps });
    }

    let mut states = vec![0usize; steps];
    states[steps - 1] = last;
    for t in (1..steps).rev() {
        states[t - 1] = back[t * n + states[t]];
    }
    Ok(Decoded { states, score })
}

/// Per-step argmax of the raw emissions (lowest index on ties).
pub fn argmax_states<S: Score>(emissions: ArrayView2<'_, S>) -> Vec<usize> {
    emissions
        .rows()
        .into_iter()
        .map(|row| {
            let mut arg = 0;
            for (y, &v) in row.iter().enumerate() {
                if v > row[arg] {
                    arg = y;
                }
            }
            arg
        })
        .collect()
}

/// Total score of a fixed sequence under the model.
pub fn sequence_score<S: Score>(emissions: ArrayView2<'_, S>, model: &TransitionModel<S>, states: &[usize]) -> S {
    let mut score = model.start(states[0]) + emissions[[0, states[0]]];
    for t in 1..states.len() {
        score = score + model.trans(states[t - 1], states[t]) + emissions[[t, states[t]]];
    }
    score
}
