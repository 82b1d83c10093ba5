//! Approximate stepping: rates held constant over an interval tau, exit
//! counts drawn per source compartment from the Euler-multinomial.

use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::sim::gillespie::MAX_REACTIONS;
use crate::sim::reactions::ReactionSet;
use crate::state::StateVector;

/// Draws how many of `n` individuals leave by each of `rates.len()` routes
/// during `tau`, where `rates` are per-capita exit rates. Exit probabilities
/// are `p_k = (1 - exp(-R tau)) r_k / R` with `R = sum(r_k)`; the returned
/// vector has one count per route followed by the number staying, and always
/// sums to `n`.
pub fn euler_multinomial_exits(
    n: u64,
    rates: &[f64],
    tau: f64,
    rng: &mut StreamRng,
) -> Vec<u64> {
    let mut out = vec![0u64; rates.len() + 1];
    draw_exits(n, rates, tau, rng, &mut out);
    out
}

/// Allocation-free core of [`euler_multinomial_exits`]; `out` must have
/// `rates.len() + 1` slots. Routes with zero rate never consume randomness,
/// so degenerate models stay draw-for-draw identical to their reduced forms.
fn draw_exits(n: u64, rates: &[f64], tau: f64, rng: &mut StreamRng, out: &mut [u64]) {
    debug_assert_eq!(out.len(), rates.len() + 1);
    debug_assert!(rates.iter().all(|r| r.is_finite() && *r >= 0.0));
    let total_rate: f64 = rates.iter().sum();
    if n == 0 || total_rate == 0.0 || tau <= 0.0 {
        out.fill(0);
        out[rates.len()] = n;
        return;
    }
    let p_exit = -(-total_rate * tau).exp_m1(); // 1 - exp(-R tau)
    let mut remaining = n;
    let mut prob_left = 1.0f64;
    for (k, &r) in rates.iter().enumerate() {
        if r == 0.0 || remaining == 0 {
            out[k] = 0;
            continue;
        }
        let p_k = p_exit * r / total_rate;
        let cond = (p_k / prob_left).clamp(0.0, 1.0);
        let d = Binomial::new(remaining, cond)
            .expect("conditional probability in [0,1]")
            .sample(rng);
        out[k] = d;
        remaining -= d;
        prob_left = (prob_left - p_k).max(0.0);
    }
    out[rates.len()] = remaining;
}

/// One tau-leap: every exit count is drawn from the pre-step state (so the
/// update is synchronous), influx reactions draw Poisson counts, and the
/// incidence accumulator collects flagged transitions. `noise` multiplies
/// the rates of noise-scaled reactions.
pub fn tau_leap_step(
    state: &mut StateVector,
    reactions: &ReactionSet,
    params: &[f64],
    t: f64,
    tau: f64,
    noise: f64,
    rng: &mut StreamRng,
) -> Result<()> {
    assert!(reactions.len() <= MAX_REACTIONS, "reaction set too large");
    let n_comp = reactions.n_compartments();
    assert!(n_comp <= MAX_REACTIONS, "too many compartments");
    let mut delta = [0.0f64; MAX_REACTIONS];
    let mut d_incidence = 0.0f64;

    let mut rates = [0.0f64; MAX_REACTIONS];
    let mut exits = [0u64; MAX_REACTIONS + 1];

    for c in 0..n_comp {
        let routes = reactions.exit_routes(c);
        if routes.is_empty() {
            continue;
        }
        let occupancy = state.counts[c];
        debug_assert!(occupancy.fract() == 0.0, "stochastic step on non-integer state");
        let n_here = occupancy as u64;
        let mut per_capita_sum = 0.0;
        for (k, &ri) in routes.iter().enumerate() {
            let abs = reactions.rate(ri, state, params, t, noise)?;
            let pc = if occupancy > 0.0 { abs / occupancy } else { 0.0 };
            rates[k] = pc;
            per_capita_sum += pc;
        }
        if n_here == 0 || per_capita_sum == 0.0 {
            continue;
        }
        draw_exits(n_here, &rates[..routes.len()], tau, rng, &mut exits[..routes.len() + 1]);
        for (k, &ri) in routes.iter().enumerate() {
            let d = exits[k] as f64;
            if d == 0.0 {
                continue;
            }
            let r = reactions.reaction(ri);
            delta[c] -= d;
            if let Some(dst) = r.dest {
                delta[dst] += d;
            }
            if r.adds_incidence {
                d_incidence += d;
            }
        }
    }

    for &ri in reactions.birth_reactions() {
        let abs = reactions.rate(ri, state, params, t, noise)?;
        if abs == 0.0 {
            continue;
        }
        let d = Poisson::new(abs * tau)
            .map_err(|e| Error::Model(format!("influx rate: {e}")))?
            .sample(rng);
        let r = reactions.reaction(ri);
        if let Some(dst) = r.dest {
            delta[dst] += d;
        }
        if r.adds_incidence {
            d_incidence += d;
        }
    }

    for c in 0..n_comp {
        state.counts[c] += delta[c];
    }
    state.incidence += d_incidence;
    Ok(())
}
