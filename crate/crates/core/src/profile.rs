//! Profile likelihood over a parameter grid.

use rayon::prelude::*;

use crate::data::TimeSeries;
use crate::error::{Error, Result};
use crate::mcap::{mcap, McapResult, McapSettings};
use crate::mif2::{evaluate_candidates, mif2, Hypercube, Mif2Settings, ParamSwarm};
use crate::model::PompModel;
use crate::params::ParamVector;
use crate::rng::{self, tag};

/// One evaluated grid point of a profile.
#[derive(Debug, Clone)]
pub struct ProfilePoint {
    /// Value of the profiled parameter.
    pub value: f64,
    /// Maximized log-likelihood over the nuisance parameters (replicated
    /// unperturbed filters at the best candidate).
    pub loglik: f64,
    /// Monte Carlo standard error of `loglik`.
    pub se: f64,
    /// The maximizing parameter vector (target pinned at `value`).
    pub nuisance: Option<ParamVector>,
    pub n_failures: usize,
}

#[derive(Debug, Clone)]
pub struct ProfileSettings {
    /// Independent searches per grid point.
    pub starts: usize,
    /// Search settings for the nuisance maximization (the target's
    /// random-walk sd is forced to zero).
    pub search: Mif2Settings,
    /// Replicated-filter evaluation of each search's candidate.
    pub eval_replicates: usize,
    pub eval_particles: usize,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self {
            starts: 3,
            search: Mif2Settings::default(),
            eval_replicates: 5,
            eval_particles: 1000,
        }
    }
}

/// Profiles `target` over `grid`: at each grid value the target is pinned
/// (random-walk sd zero), the nuisance parameters are maximized by
/// iterated filtering from `starts` hypercube draws, and the best candidate
/// is evaluated with replicated particle filters. Grid points are
/// independent parallel jobs; the returned points are sorted ascending.
pub fn profile_likelihood(
    model: &PompModel,
    data: &TimeSeries,
    target: &str,
    grid: &[f64],
    base: &ParamVector,
    hypercube: &Hypercube,
    settings: &ProfileSettings,
    seed: u64,
) -> Result<Vec<ProfilePoint>> {
    if grid.is_empty() {
        return Err(Error::Config("profile grid is empty".into()));
    }
    let space = model.space();
    let t_idx = space.require(target)?;
    if !space.def(t_idx).estimated {
        return Err(Error::Config(format!(
            "profile target `{target}` is not an estimated parameter"
        )));
    }
    hypercube.validate(space)?;
    let mut search = settings.search.clone();
    search.rw_sd_overrides.push((target.to_string(), 0.0));

    let mut points: Vec<ProfilePoint> = grid
        .par_iter()
        .enumerate()
        .map(|(g, &value)| -> Result<ProfilePoint> {
            if !space.def(t_idx).scale.contains_open(value) {
                return Err(Error::Config(format!(
                    "grid value {value} outside the domain of `{target}`"
                )));
            }
            let point_seed = rng::derive_seed(seed, &[tag::GRID, g as u64]);
            let candidates: Result<Vec<ParamVector>> = (0..settings.starts)
                .into_par_iter()
                .map(|s| {
                    let mut start_rng = rng::stream(point_seed, &[tag::START, s as u64]);
                    let start = hypercube
                        .sample(base, &mut start_rng)?
                        .with_value(target, value)?;
                    let swarm0 = ParamSwarm::replicate(&start, search.particles)?;
                    let run = mif2(
                        model,
                        data,
                        &swarm0,
                        &search,
                        rng::derive_seed(point_seed, &[tag::SEARCH, s as u64]),
                    )?;
                    // pin the target exactly (swarm means can wobble at the
                    // last floating-point digit through the transforms)
                    run.estimate.with_value(target, value)
                })
                .collect();
            let evals = evaluate_candidates(
                &candidates?,
                model,
                data,
                settings.eval_replicates,
                settings.eval_particles,
                search.tol,
                point_seed,
            )?;
            let best = &evals[0];
            Ok(ProfilePoint {
                value,
                loglik: best.mean_loglik,
                se: best.se,
                nuisance: Some(best.params.clone()),
                n_failures: best.total_failures,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(points)
}

/// Output of [`profile_with_mcap`].
#[derive(Debug, Clone)]
pub struct ProfileMcap {
    pub points: Vec<ProfilePoint>,
    pub mcap: McapResult,
}

/// Default-grid profile: a coarse pilot pass over the hypercube range of
/// the target estimates the profile curvature, the main grid spans the
/// maximum +- 4 implied sd (20 points), and the grid is refined once with
/// extra points bracketing each interval bound before the final MCAP.
#[allow(clippy::too_many_arguments)]
pub fn profile_auto(
    model: &PompModel,
    data: &TimeSeries,
    target: &str,
    center: f64,
    base: &ParamVector,
    hypercube: &Hypercube,
    settings: &ProfileSettings,
    mcap_settings: &McapSettings,
    seed: u64,
) -> Result<ProfileMcap> {
    let (lo, hi) = hypercube
        .bounds_for(target)
        .ok_or_else(|| Error::Config(format!("no hypercube bounds for `{target}`")))?;

    // pilot: 5 points across the hypercube range of the target
    let pilot_grid: Vec<f64> = (0..5).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / 5.0).collect();
    let mut pilot = settings.clone();
    pilot.starts = 1.max(settings.starts / 2);
    let pilot_points = profile_likelihood(
        model, data, target, &pilot_grid, base, hypercube, &pilot,
        rng::derive_seed(seed, &[tag::GRID, 0xA11]),
    )?;
    let sd = quadratic_sd(&pilot_points).unwrap_or((hi - lo) / 8.0);

    let space = model.space();
    let scale = space.def(space.require(target)?).scale;
    let g_lo = (center - 4.0 * sd).max(lo);
    let g_hi = (center + 4.0 * sd).min(hi);
    let mut grid: Vec<f64> = (0..20)
        .map(|i| g_lo + (g_hi - g_lo) * i as f64 / 19.0)
        .filter(|v| scale.contains_open(*v))
        .collect();

    let mut points = profile_likelihood(
        model, data, target, &grid, base, hypercube, settings, seed,
    )?;
    let first = mcap(
        &points,
        mcap_settings,
        &mut rng::stream(seed, &[tag::BOOT, 1]),
    )?;

    // refine once around each crossing
    let mut extra = Vec::new();
    for bound in [first.ci.0, first.ci.1].into_iter().flatten() {
        if let Some(w) = grid.windows(2).find(|w| w[0] < bound && bound <= w[1]) {
            for k in 1..4 {
                extra.push(w[0] + (w[1] - w[0]) * k as f64 / 4.0);
            }
        }
    }
    extra.retain(|v| grid.iter().all(|g| (g - v).abs() > 1e-12));
    if !extra.is_empty() {
        let refined = profile_likelihood(
            model, data, target, &extra, base, hypercube, settings,
            rng::derive_seed(seed, &[tag::GRID, 0xB22]),
        )?;
        points.extend(refined);
        points.sort_by(|a, b| a.value.total_cmp(&b.value));
        grid = points.iter().map(|p| p.value).collect();
        let _ = grid;
    }
    let final_mcap = mcap(
        &points,
        mcap_settings,
        &mut rng::stream(seed, &[tag::BOOT, 2]),
    )?;
    Ok(ProfileMcap {
        points,
        mcap: final_mcap,
    })
}

/// Implied sd from an unweighted quadratic fit of pilot points:
/// `1 / sqrt(2 a)` where `a` is the fitted concavity.
fn quadratic_sd(points: &[ProfilePoint]) -> Option<f64> {
    let n = points.len();
    if n < 3 {
        return None;
    }
    let x0 = points.iter().map(|p| p.value).sum::<f64>() / n as f64;
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut b = nalgebra::Vector3::<f64>::zeros();
    for p in points {
        let u = p.value - x0;
        let row = [1.0, u, u * u];
        for r in 0..3 {
            for c in 0..3 {
                a[(r, c)] += row[r] * row[c];
            }
            b[r] += row[r] * p.loglik;
        }
    }
    let coef = a.lu().solve(&b)?;
    let curvature = -coef[2];
    if curvature > 0.0 {
        Some((1.0 / (2.0 * curvature)).sqrt())
    } else {
        None
    }
}
