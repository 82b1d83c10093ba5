//! Monte-Carlo-adjusted profile (MCAP) confidence intervals.
//!
//! Profile points carry Monte Carlo error, so the raw likelihood-ratio
//! cutoff is too tight. The procedure here: (i) smooth the profile with a
//! local-quadratic regression (tricube weights, fractional span); (ii) fit a
//! quadratic near the smoothed maximum; (iii) estimate the Monte Carlo error
//! of the implied maximizer by residual bootstrap over the profile points;
//! (iv) inflate the chi-square cutoff by the ratio of Monte Carlo to
//! statistical variance and cut the smoothed curve there.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::profile::ProfilePoint;
use crate::rng::StreamRng;

#[derive(Debug, Clone)]
pub struct McapSettings {
    /// Confidence level of the interval.
    pub level: f64,
    /// Fraction of points in each local regression window.
    pub span: f64,
    /// Evaluation mesh size for the smoothed curve (crossings are located by
    /// linear interpolation between adjacent mesh evaluations).
    pub mesh: usize,
    /// Residual bootstrap resamples for the Monte Carlo error.
    pub bootstrap: usize,
}

impl Default for McapSettings {
    fn default() -> Self {
        Self {
            level: 0.95,
            span: 0.75,
            mesh: 10_001,
            bootstrap: 200,
        }
    }
}

/// Quadratic `q(x) = value + slope (x - center) - curvature (x - center)^2`
/// fitted around the smoothed maximum.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticFit {
    pub center: f64,
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

impl QuadraticFit {
    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.center;
        self.value + self.slope * u - self.curvature * u * u
    }
}

#[derive(Debug, Clone)]
pub struct McapResult {
    /// Smoothed profile evaluated on the mesh.
    pub curve: Vec<(f64, f64)>,
    pub quadratic: QuadraticFit,
    /// Location and height of the smoothed maximum.
    pub argmax: f64,
    pub max_loglik: f64,
    /// Statistical sd of the maximizer implied by the curvature.
    pub se_stat: f64,
    /// Bootstrap Monte Carlo sd of the maximizer.
    pub se_mc: f64,
    /// Log-likelihood drop defining the interval; at least the Wilks cutoff
    /// `chi2_1(level) / 2`.
    pub cutoff: f64,
    /// Interval bounds; a side is `None` when the smoothed curve never drops
    /// below the cutoff before the grid boundary.
    pub ci: (Option<f64>, Option<f64>),
    pub level: f64,
    /// The smoothed maximum sits on the grid boundary (one-sided interval).
    pub at_boundary: bool,
}

/// Computes the MCAP interval from profile points. The bootstrap draws come
/// from `rng`; with zero-residual input the interval reduces exactly to the
/// Wilks interval.
pub fn mcap(
    points: &[ProfilePoint],
    settings: &McapSettings,
    rng: &mut StreamRng,
) -> Result<McapResult> {
    if points.len() < 5 {
        return Err(Error::Config(format!(
            "MCAP needs at least 5 profile points, got {}",
            points.len()
        )));
    }
    if !(settings.level > 0.0 && settings.level < 1.0) {
        return Err(Error::Config(format!("level must be in (0,1), got {}", settings.level)));
    }
    if !(settings.span > 0.0 && settings.span <= 1.0) {
        return Err(Error::Config(format!("span must be in (0,1], got {}", settings.span)));
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].value.total_cmp(&points[b].value));
    let xs: Vec<f64> = order.iter().map(|&i| points[i].value).collect();
    let ys: Vec<f64> = order.iter().map(|&i| points[i].loglik).collect();
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate profile grid values".into()));
    }

    // (i) smoothed curve on the mesh
    let mesh_n = settings.mesh.max(101);
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let mut curve = Vec::with_capacity(mesh_n);
    for i in 0..mesh_n {
        let x = lo + (hi - lo) * i as f64 / (mesh_n - 1) as f64;
        curve.push((x, loess_quadratic(&xs, &ys, settings.span, x)));
    }
    let (imax, max_loglik) = curve
        .iter()
        .enumerate()
        .map(|(i, &(_, s))| (i, s))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty mesh");
    let argmax = curve[imax].0;
    let at_boundary = imax == 0 || imax == mesh_n - 1;

    // (ii) quadratic fit around the maximum
    let (coef, weights) = weighted_quadratic(&xs, &ys, settings.span, argmax)?;
    let curvature = -coef[2];
    if !(curvature > 0.0) {
        return Err(Error::Data(format!(
            "profile is not locally concave at its maximum (curvature {curvature:.3e})"
        )));
    }
    let quadratic = QuadraticFit {
        center: argmax,
        value: coef[0],
        slope: coef[1],
        curvature,
    };
    let se_stat_sq = 1.0 / (2.0 * curvature);

    // (iii) bootstrap of the implied maximizer b/(2a): every point gets a
    // resampled smoothing residual plus a parametric draw at its stated
    // Monte Carlo SE, so the cutoff responds both to scatter around the fit
    // and to the declared evaluation error (conservative when the residuals
    // already carry that error)
    let fitted: Vec<f64> = xs
        .iter()
        .map(|&x| coef[0] + coef[1] * (x - argmax) + coef[2] * (x - argmax) * (x - argmax))
        .collect();
    let ses: Vec<f64> = order.iter().map(|&i| points[i].se).collect();
    if ses.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Config("profile point SEs must be finite and >= 0".into()));
    }
    let residual_pool: Vec<f64> = (0..xs.len())
        .filter(|&i| weights[i] > 0.0)
        .map(|i| ys[i] - fitted[i])
        .collect();
    let normal = rand_distr::Normal::new(0.0, 1.0).expect("unit normal");
    use rand_distr::Distribution;
    let mut boot_offsets = Vec::with_capacity(settings.bootstrap);
    let mut boot_ys = ys.clone();
    for _ in 0..settings.bootstrap {
        for i in 0..xs.len() {
            let r = residual_pool[rng.random_range(0..residual_pool.len())];
            let e = if ses[i] > 0.0 {
                ses[i] * normal.sample(rng)
            } else {
                0.0
            };
            boot_ys[i] = fitted[i] + r + e;
        }
        if let Ok((c, _)) = weighted_quadratic(&xs, &boot_ys, settings.span, argmax) {
            // refits that are not concave, or whose implied maximizer falls
            // outside the profiled span, carry no curvature information
            if c[2] < 0.0 {
                let offset = -c[1] / (2.0 * c[2]);
                if offset.abs() <= hi - lo {
                    boot_offsets.push(offset);
                }
            }
        }
    }
    let se_mc_sq = if boot_offsets.len() >= 2 {
        let n = boot_offsets.len() as f64;
        let m = boot_offsets.iter().sum::<f64>() / n;
        boot_offsets.iter().map(|o| (o - m) * (o - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };

    // (iv) inflated cutoff and crossings
    let chi_sq = ChiSquared::new(1.0)
        .expect("df 1")
        .inverse_cdf(settings.level);
    let cutoff = 0.5 * chi_sq * (1.0 + se_mc_sq / se_stat_sq);
    let target = max_loglik - cutoff;

    let mut ci_lo = None;
    for k in (1..=imax).rev() {
        let (x0, s0) = curve[k - 1];
        let (x1, s1) = curve[k];
        if s0 < target && s1 >= target {
            ci_lo = Some(x0 + (target - s0) / (s1 - s0) * (x1 - x0));
            break;
        }
    }
    let mut ci_hi = None;
    for k in imax..mesh_n - 1 {
        let (x0, s0) = curve[k];
        let (x1, s1) = curve[k + 1];
        if s0 >= target && s1 < target {
            ci_hi = Some(x0 + (s0 - target) / (s0 - s1) * (x1 - x0));
            break;
        }
    }

    Ok(McapResult {
        curve,
        quadratic,
        argmax,
        max_loglik,
        se_stat: se_stat_sq.sqrt(),
        se_mc: se_mc_sq.sqrt(),
        cutoff,
        ci: (ci_lo, ci_hi),
        level: settings.level,
        at_boundary,
    })
}

/// Local quadratic regression value at `x0`: the nearest `ceil(span n)`
/// points enter a tricube-weighted least-squares quadratic.
fn loess_quadratic(xs: &[f64], ys: &[f64], span: f64, x0: f64) -> f64 {
    match weighted_quadratic(xs, ys, span, x0) {
        Ok((coef, _)) => coef[0],
        Err(_) => {
            // degenerate window: fall back to the nearest point
            let i = (0..xs.len())
                .min_by(|&a, &b| (xs[a] - x0).abs().total_cmp(&(xs[b] - x0).abs()))
                .unwrap();
            ys[i]
        }
    }
}

/// Tricube-weighted quadratic fit centered at `x0`. Returns the
/// coefficients of `c0 + c1 u + c2 u^2` (u = x - x0) and the weights used.
fn weighted_quadratic(xs: &[f64], ys: &[f64], span: f64, x0: f64) -> Result<(Vector3<f64>, Vec<f64>)> {
    let n = xs.len();
    let q = ((span * n as f64).ceil() as usize).clamp(5.min(n), n);
    let mut dist: Vec<f64> = xs.iter().map(|&x| (x - x0).abs()).collect();
    let mut sorted = dist.clone();
    sorted.sort_by(f64::total_cmp);
    let maxdist = sorted[q - 1].max(f64::MIN_POSITIVE);

    let mut weights = vec![0.0; n];
    for i in 0..n {
        let d = dist[i] / maxdist;
        if d < 1.0 {
            let c = 1.0 - d * d * d;
            weights[i] = c * c * c;
        }
    }
    dist.clear();

    let mut a = Matrix3::<f64>::zeros();
    let mut b = Vector3::<f64>::zeros();
    for i in 0..n {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        let u = xs[i] - x0;
        let row = [1.0, u, u * u];
        for r in 0..3 {
            for c in 0..3 {
                a[(r, c)] += w * row[r] * row[c];
            }
            b[r] += w * row[r] * ys[i];
        }
    }
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::Data("singular local regression window".into()))
        .map(|coef| (coef, weights))
}
