//! Exact event-by-event simulation of the Markov jump process.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::sim::reactions::ReactionSet;
use crate::state::StateVector;

/// Simulates the waiting time to the next event and applies the chosen
/// reaction. Returns the updated state and the event time `t + wait`; if the
/// total rate is zero the state is absorbed and the returned time is
/// `+inf` (the input state is returned unchanged, with `t` untouched).
pub fn gillespie_step(
    state: &StateVector,
    reactions: &ReactionSet,
    params: &[f64],
    t: f64,
    noise: f64,
    rng: &mut StreamRng,
) -> Result<(StateVector, f64)> {
    let mut rates = [0.0f64; MAX_REACTIONS];
    let k = reactions.len();
    assert!(k <= MAX_REACTIONS, "reaction set too large");
    let mut total = 0.0;
    for i in 0..k {
        let r = reactions.rate(i, state, params, t, noise)?;
        rates[i] = r;
        total += r;
    }
    if total == 0.0 {
        return Ok((state.clone(), f64::INFINITY));
    }

    let wait = -rng.random::<f64>().ln() / total;
    let mut u = rng.random::<f64>() * total;
    let mut chosen = k - 1;
    for i in 0..k {
        if u < rates[i] {
            chosen = i;
            break;
        }
        u -= rates[i];
    }

    let mut next = state.clone();
    apply_reaction(&mut next, reactions, chosen)?;
    next.t = t + wait;
    Ok((next, t + wait))
}

/// Runs the event loop from `state.t` to `t_end`, leaving the state at
/// `t_end` (the last event drawn past `t_end` is discarded, which is exact
/// for time-homogeneous rates).
pub fn gillespie_advance(
    state: &mut StateVector,
    reactions: &ReactionSet,
    params: &[f64],
    t_end: f64,
    noise: f64,
    rng: &mut StreamRng,
) -> Result<()> {
    loop {
        let (next, t_event) = gillespie_step(state, reactions, params, state.t, noise, rng)?;
        if t_event > t_end {
            state.t = t_end;
            return Ok(());
        }
        *state = next;
    }
}

pub(crate) const MAX_REACTIONS: usize = 32;

fn apply_reaction(state: &mut StateVector, reactions: &ReactionSet, i: usize) -> Result<()> {
    let r = reactions.reaction(i);
    if let Some(src) = r.source {
        if state.counts[src] < 1.0 {
            return Err(Error::Model(format!(
                "reaction `{}` fired with empty source compartment",
                r.name
            )));
        }
        state.counts[src] -= 1.0;
    }
    if let Some(dst) = r.dest {
        state.counts[dst] += 1.0;
    }
    if r.adds_incidence {
        state.incidence += 1.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sim::reactions::Reaction;

    const S: usize = 0;
    const I: usize = 1;
    const R: usize = 2;

    fn sir_set(beta: f64, gamma: f64, n: f64) -> ReactionSet {
        ReactionSet::new(
            vec![
                Reaction::new("infection", Some(S), Some(I), move |x, _p, _t| {
                    beta * x.counts[I] * x.counts[S] / n
                })
                .with_incidence(),
                Reaction::new("recovery", Some(I), Some(R), move |x, _p, _t| {
                    gamma * x.counts[I]
                }),
            ],
            3,
        )
    }

    #[test]
    fn absorbed_when_no_infectives() {
        let set = sir_set(1.0, 0.5, 10_000.0);
        let state = StateVector::new(vec![10_000.0, 0.0, 0.0], 0.0);
        let mut rng = rng::stream(1, &[1]);
        let (next, t) = gillespie_step(&state, &set, &[], 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(t, f64::INFINITY);
        assert_eq!(next.counts, state.counts);
    }

    #[test]
    fn event_choice_and_waiting_time_match_rates() {
        // S=9999, I=1: infection rate 0.9999, recovery rate 0.5.
        let set = sir_set(1.0, 0.5, 10_000.0);
        let state = StateVector::new(vec![9999.0, 1.0, 0.0], 0.0);
        let mut rng = rng::stream(7, &[2]);
        let reps = 100_000usize;
        let mut infections = 0usize;
        let mut wait_sum = 0.0;
        for _ in 0..reps {
            let (next, t) = gillespie_step(&state, &set, &[], 0.0, 1.0, &mut rng).unwrap();
            if next.counts[I] == 2.0 {
                infections += 1;
            }
            wait_sum += t;
        }
        let p_inf = 0.9999f64 / 1.4999;
        let se_p = (p_inf * (1.0 - p_inf) / reps as f64).sqrt();
        let freq = infections as f64 / reps as f64;
        assert!(
            (freq - p_inf).abs() < 3.0 * se_p,
            "infection frequency {freq} vs {p_inf} (3se = {})",
            3.0 * se_p
        );
        // waiting time ~ Exp(1.4999): mean 1/1.4999, sd = mean
        let mean_wait = 1.0 / 1.4999;
        let se_wait = mean_wait / (reps as f64).sqrt();
        let avg = wait_sum / reps as f64;
        assert!(
            (avg - mean_wait).abs() < 3.0 * se_wait,
            "mean wait {avg} vs {mean_wait}"
        );
    }

    #[test]
    fn negative_rate_is_a_model_error_naming_the_reaction() {
        let set = ReactionSet::new(
            vec![Reaction::new("broken", Some(S), Some(I), |_x, _p, _t| -1.0)],
            3,
        );
        let state = StateVector::new(vec![10.0, 1.0, 0.0], 0.0);
        let mut rng = rng::stream(1, &[3]);
        let err = gillespie_step(&state, &set, &[], 0.0, 1.0, &mut rng).unwrap_err();
        assert!(err.to_string().contains("broken"), "{err}");
    }
}
