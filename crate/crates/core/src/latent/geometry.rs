//! Failure geometry: validity of the support segment and the two polar
//! angles whose difference controls how much class signal the leading
//! eigenvector carries.

use super::{srt_transform, BetaShape, LatentModel, SrtParams};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Mass allowed outside the effective support, per class and per tail.
pub const SUPPORT_TAIL: f64 = 1e-9;

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn endpoints_valid(p: [f64; 2], q: [f64; 2]) -> bool {
    // (z, z') -> srt(z) . srt(z') is bilinear, so its extremes over the
    // segment are attained at endpoint pairs.
    [dot(p, p), dot(p, q), dot(q, q)]
        .iter()
        .all(|v| (0.0..=1.0).contains(v))
}

/// True iff every pair of points on the full segment `srt([0, 1])` has inner
/// product in `[0, 1]`.
pub fn validate_latent(params: &SrtParams) -> bool {
    validate_support(params, 0.0, 1.0)
}

/// Same check restricted to `srt([z_lo, z_hi])`.
pub fn validate_support(params: &SrtParams, z_lo: f64, z_hi: f64) -> bool {
    endpoints_valid(srt_transform(z_lo, params), srt_transform(z_hi, params))
}

/// Central interval of `Z` outside which each class law puts at most
/// `tail` mass on each side. Tails whose density does not vanish at the
/// endpoint (shape <= 1) are not trimmed.
pub fn support_interval(model: &LatentModel, tail: f64) -> Result<(f64, f64)> {
    let mut lo = 1.0f64;
    let mut hi = 0.0f64;
    for shape in [model.class0, model.class1] {
        lo = lo.min(lower_quantile(&shape, tail)?);
        let mirrored = BetaShape { a: shape.b, b: shape.a };
        hi = hi.max(1.0 - lower_quantile(&mirrored, tail)?);
    }
    Ok((lo, hi))
}

fn lower_quantile(shape: &BetaShape, tail: f64) -> Result<f64> {
    if shape.a <= 1.0 || tail <= 0.0 {
        return Ok(0.0);
    }
    let cdf = |z: f64| adaptive_simpson(|x| shape.pdf(x), 0.0, z, tail * 1e-4);
    let (mut lo, mut hi) = (0.0, shape.mean());
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? > tail {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// Polar angle of the foot of the perpendicular from the origin to the
/// line through `t` with direction `(cos r, sin r)`.
pub fn theta_perp(params: &SrtParams) -> Result<f64> {
    let u = params.direction();
    let t = params.translation;
    let along = dot(t, u);
    let foot = [t[0] - along * u[0], t[1] - along * u[1]];
    if foot[0].hypot(foot[1]) < 1e-12 {
        return Err(Error::UndefinedGeometry(
            "support line passes through the origin".into(),
        ));
    }
    Ok(foot[1].atan2(foot[0]))
}

/// Polar angle of `E[X]`.
pub fn theta_e(model: &LatentModel) -> Result<f64> {
    let e = model.mean_position();
    if e[0].hypot(e[1]) < 1e-12 {
        return Err(Error::UndefinedGeometry("E[X] is the origin".into()));
    }
    Ok(e[1].atan2(e[0]))
}

/// `|theta_E - theta_perp|`.
pub fn angle_gap(model: &LatentModel) -> Result<f64> {
    Ok((theta_e(model)? - theta_perp(&model.srt)?).abs())
}

/// Translation `(t1, t2)` with the given `t2` at which `theta_E - theta_perp`
/// equals `gap` (scale and rotation taken from the model).
pub fn translation_for_gap(model: &LatentModel, t2: f64, gap: f64) -> Result<[f64; 2]> {
    let u = model.srt.direction();
    let mut normal = [-u[1], u[0]];
    if normal[1] < 0.0 || (normal[1] == 0.0 && normal[0] < 0.0) {
        normal = [-normal[0], -normal[1]];
    }
    let perp = normal[1].atan2(normal[0]);
    let target = perp + gap;
    if !(target > 0.0 && target < std::f64::consts::PI) {
        return Err(Error::UndefinedGeometry(format!(
            "target angle {target} of E[X] leaves the upper half-plane"
        )));
    }
    let shift = model.srt.scale * model.mean_z();
    let e2 = t2 + shift * u[1];
    if e2 <= 0.0 {
        return Err(Error::UndefinedGeometry(format!(
            "E[X] has non-positive second coordinate {e2} for t2 = {t2}"
        )));
    }
    let e1 = e2 * target.cos() / target.sin();
    let t = [e1 - shift * u[0], t2];
    let solved = model.with_srt(model.srt.with_translation(t));
    let check = theta_perp(&solved.srt)?;
    if (check - perp).abs() > 1e-9 {
        return Err(Error::UndefinedGeometry(format!(
            "no translation on t2 = {t2} realises gap {gap} (perpendicular foot flips side)"
        )));
    }
    Ok(t)
}

/// One point of a translation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub params: SrtParams,
    /// `|theta_E - theta_perp|` in radians.
    pub gap: f64,
}

/// `k` parameter sets with the translation linearly interpolated between
/// `t_start` and `t_end` (scale and rotation from the model).
///
/// Each point must keep every realisable pair inside `[0, 1]`; realisable
/// means `z` within [`support_interval`] at level [`SUPPORT_TAIL`].
pub fn t_path(model: &LatentModel, t_start: [f64; 2], t_end: [f64; 2], k: usize) -> Result<Vec<PathPoint>> {
    if k < 2 {
        return Err(Error::Parameter(format!("path needs at least 2 points, got {k}")));
    }
    let (z_lo, z_hi) = support_interval(model, SUPPORT_TAIL)?;
    (0..k)
        .map(|i| {
            let frac = i as f64 / (k - 1) as f64;
            let t = [
                t_start[0] + frac * (t_end[0] - t_start[0]),
                t_start[1] + frac * (t_end[1] - t_start[1]),
            ];
            let params = model.srt.with_translation(t);
            params.validate()?;
            if !validate_support(&params, z_lo, z_hi) {
                return Err(Error::InvalidProbability {
                    context: format!(
                        "path point {i} with t = ({}, {}) has inner products outside [0, 1] on z in [{z_lo:.3e}, {z_hi}]",
                        t[0], t[1]
                    ),
                    value: dot(srt_transform(z_lo, &params), srt_transform(z_lo, &params)),
                });
            }
            let gap = angle_gap(&model.with_srt(params))?;
            Ok(PathPoint { params, gap })
        })
        .collect()
}
