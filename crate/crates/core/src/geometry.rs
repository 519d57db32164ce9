//! Coordinate frame, hop distances and Poisson field sampling.
//!
//! The frame is Cartesian with the origin at the source–destination midpoint
//! and the source on the positive x-axis, so the source sits at
//! `(d_sd / 2, 0)` and the destination at `(-d_sd / 2, 0)`. Polar inputs
//! `(r, θ)` are measured in the same frame; the best relay under the
//! midpoint-distance criterion is then simply the point of smallest norm.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{check, Result};

/// A position in the midpoint-origin frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const ORIGIN: PlanarPoint = PlanarPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        check(x.is_finite(), "x", x, "coordinate must be finite")?;
        check(y.is_finite(), "y", y, "coordinate must be finite")?;
        Ok(Self { x, y })
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance_sq(&self, other: &PlanarPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Polar angle normalized to `[0, 2π)`; zero at the origin.
    pub fn angle(&self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }

    pub fn to_polar(&self) -> PolarPoint {
        PolarPoint {
            r: self.norm(),
            theta: self.angle(),
        }
    }
}

/// A position `(r, θ)` with `r ≥ 0` and `θ ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    r: f64,
    theta: f64,
}

impl PolarPoint {
    /// Builds a polar point, wrapping `theta` into `[0, 2π)`.
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        check(
            r.is_finite() && r >= 0.0,
            "r",
            r,
            "radius must be finite and non-negative",
        )?;
        check(theta.is_finite(), "theta", theta, "angle must be finite")?;
        Ok(Self {
            r,
            theta: normalize_angle(theta),
        })
    }

    pub const fn origin() -> Self {
        Self { r: 0.0, theta: 0.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn to_planar(&self) -> PlanarPoint {
        PlanarPoint {
            x: self.r * self.theta.cos(),
            y: self.r * self.theta.sin(),
        }
    }
}

fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Source and destination placed symmetrically about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub source: PlanarPoint,
    pub destination: PlanarPoint,
    pub d_sd: f64,
}

impl Endpoints {
    pub fn new(d_sd: f64) -> Result<Self> {
        check(
            d_sd.is_finite() && d_sd > 0.0,
            "d_sd",
            d_sd,
            "distance must be finite and positive",
        )?;
        let half = 0.5 * d_sd;
        Ok(Self {
            source: PlanarPoint { x: half, y: 0.0 },
            destination: PlanarPoint { x: -half, y: 0.0 },
            d_sd,
        })
    }
}

/// Disc on which an infinite Poisson field is truncated for simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationWindow {
    pub center: PlanarPoint,
    pub radius: f64,
}

impl SimulationWindow {
    pub fn new(center: PlanarPoint, radius: f64) -> Result<Self> {
        check(
            radius.is_finite() && radius > 0.0,
            "window_radius",
            radius,
            "radius must be finite and positive",
        )?;
        Ok(Self { center, radius })
    }

    /// Window centered at the midpoint with the given radius.
    pub fn centered(radius: f64) -> Result<Self> {
        Self::new(PlanarPoint::ORIGIN, radius)
    }

    /// Default window for a link of length `d_sd` in an eavesdropper field of
    /// density `lambda_e`: radius `max(5 d_sd, 4 / √λ_E)`, or `5 d_sd` when the
    /// field is empty.
    pub fn around_link(d_sd: f64, lambda_e: f64) -> Result<Self> {
        check(
            d_sd.is_finite() && d_sd > 0.0,
            "d_sd",
            d_sd,
            "distance must be finite and positive",
        )?;
        check(
            lambda_e.is_finite() && lambda_e >= 0.0,
            "lambda_e",
            lambda_e,
            "density must be non-negative",
        )?;
        let mut radius = 5.0 * d_sd;
        if lambda_e > 0.0 {
            radius = radius.max(4.0 / lambda_e.sqrt());
        }
        Self::centered(radius)
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, p: &PlanarPoint) -> bool {
        self.center.distance(p) <= self.radius
    }
}

/// Expected colluding aggregate lost by truncating a density-`lambda_e` field
/// at distance `radius` from a transmitter, in units of the signal received
/// over a hop of length `hop`: `2πλ_E hop^α R^{2−α} / (α − 2)`.
///
/// This is also the deficit in the log of the secure connection probability
/// to first order, for both eavesdropper models.
pub fn truncation_tail(lambda_e: f64, alpha: f64, hop: f64, radius: f64) -> f64 {
    2.0 * PI * lambda_e * hop.powf(alpha) * radius.powf(2.0 - alpha) / (alpha - 2.0)
}

/// Smallest radius whose [`truncation_tail`] does not exceed `tail`.
pub fn tail_radius(lambda_e: f64, alpha: f64, hop: f64, tail: f64) -> f64 {
    if lambda_e <= 0.0 || hop <= 0.0 {
        return 0.0;
    }
    let scale = 2.0 * PI * lambda_e * hop.powf(alpha) / ((alpha - 2.0) * tail);
    scale.powf(1.0 / (alpha - 2.0))
}

/// Distances from a relay at `relay` to the source and to the destination.
pub fn hop_distances(relay: PolarPoint, d_sd: f64) -> Result<(f64, f64)> {
    check(
        d_sd.is_finite() && d_sd > 0.0,
        "d_sd",
        d_sd,
        "distance must be finite and positive",
    )?;
    let base = relay.r * relay.r + 0.25 * d_sd * d_sd;
    let cross = relay.r * d_sd * relay.theta.cos();
    // clamp: rounding can leave a tiny negative when the relay sits on an endpoint
    let d_sr = (base - cross).max(0.0).sqrt();
    let d_rd = (base + cross).max(0.0).sqrt();
    Ok((d_sr, d_rd))
}

/// Homogeneous Poisson field of intensity `density` on `window`.
///
/// The count is Poisson with mean `density · area` and points are i.i.d.
/// uniform on the disc. The output depends only on the state of `rng`.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, window: &SimulationWindow, rng: &mut R) -> Vec<PlanarPoint> {
    let mut out = Vec::new();
    sample_ppp_into(density, window, rng, &mut out);
    out
}

/// Like [`sample_ppp`] but reuses `out`, which is cleared first.
pub fn sample_ppp_into<R: Rng + ?Sized>(
    density: f64,
    window: &SimulationWindow,
    rng: &mut R,
    out: &mut Vec<PlanarPoint>,
) {
    out.clear();
    let count = poisson_count(density * window.area(), rng);
    out.reserve(count);
    for _ in 0..count {
        out.push(uniform_in_annulus(window, 0.0, rng));
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 || !mean.is_finite() {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(dist) => dist.sample(rng) as usize,
        Err(_) => 0,
    }
}

fn uniform_in_annulus<R: Rng + ?Sized>(window: &SimulationWindow, inner: f64, rng: &mut R) -> PlanarPoint {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let r2 = inner * inner + u * (window.radius * window.radius - inner * inner);
    let r = r2.sqrt();
    let phi = TAU * v;
    PlanarPoint {
        x: window.center.x + r * phi.cos(),
        y: window.center.y + r * phi.sin(),
    }
}

/// The point closest to the midpoint. Ties go to the smaller polar angle,
/// then to the earlier entry.
pub fn nearest_to_origin(points: &[PlanarPoint]) -> Option<PlanarPoint> {
    points
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            let by_norm = a.norm().partial_cmp(&b.norm()).unwrap_or(Ordering::Equal);
            by_norm
                .then_with(|| a.angle().partial_cmp(&b.angle()).unwrap_or(Ordering::Equal))
                .then_with(|| i.cmp(j))
        })
        .map(|(_, p)| *p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hop_distance_examples() {
        let (a, b) = hop_distances(PolarPoint::new(0.0, 1.234).unwrap(), 20.0).unwrap();
        assert_eq!((a, b), (10.0, 10.0));

        let (a, b) = hop_distances(PolarPoint::new(10.0, 0.0).unwrap(), 20.0).unwrap();
        assert_eq!((a, b), (0.0, 20.0));

        let (a, b) = hop_distances(PolarPoint::new(5.0, PI / 2.0).unwrap(), 20.0).unwrap();
        let expected = 125f64.sqrt();
        assert!((a - expected).abs() < 1e-12 && (b - expected).abs() < 1e-12);
        assert!((a - 11.1803).abs() < 1e-4);
    }

    #[test]
    fn hop_distances_match_cartesian_geometry() {
        let ends = Endpoints::new(20.0).unwrap();
        assert_eq!(ends.source.distance(&ends.destination), 20.0);
        let relay = PolarPoint::new(7.0, 2.2).unwrap();
        let (d_sr, d_rd) = hop_distances(relay, 20.0).unwrap();
        let p = relay.to_planar();
        assert!((d_sr - p.distance(&ends.source)).abs() < 1e-12);
        assert!((d_rd - p.distance(&ends.destination)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PolarPoint::new(-1.0, 0.0).is_err());
        assert!(PolarPoint::new(f64::NAN, 0.0).is_err());
        assert!(PolarPoint::new(1.0, f64::INFINITY).is_err());
        assert!(hop_distances(PolarPoint::origin(), 0.0).is_err());
        assert!(hop_distances(PolarPoint::origin(), f64::NAN).is_err());
        assert!(PlanarPoint::new(f64::INFINITY, 0.0).is_err());
        assert!(SimulationWindow::centered(0.0).is_err());
    }

    #[test]
    fn angles_are_normalized() {
        let p = PolarPoint::new(1.0, -PI / 2.0).unwrap();
        assert!((p.theta() - 1.5 * PI).abs() < 1e-12);
        let q = PolarPoint::new(1.0, 5.0 * TAU + 0.25).unwrap();
        assert!((q.theta() - 0.25).abs() < 1e-9);
        assert!(PolarPoint::new(1.0, -1e-300).unwrap().theta() < TAU);
    }

    #[test]
    fn empty_field_for_zero_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = SimulationWindow::centered(500.0).unwrap();
        assert!(sample_ppp(0.0, &w, &mut rng).is_empty());
    }

    #[test]
    fn ppp_is_deterministic_for_a_seed() {
        let w = SimulationWindow::centered(100.0).unwrap();
        let a = sample_ppp(1e-2, &w, &mut ChaCha8Rng::seed_from_u64(42));
        let b = sample_ppp(1e-2, &w, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
        assert!(a.iter().all(|p| w.contains(p)));
    }

    #[test]
    fn ppp_mean_count() {
        // λπR² = 1e-3 · π · 500² ≈ 785.398
        let w = SimulationWindow::centered(500.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000;
        let total: usize = (0..draws).map(|_| sample_ppp(1e-3, &w, &mut rng).len()).sum();
        let mean = total as f64 / draws as f64;
        let expected = 1e-3 * PI * 500.0 * 500.0;
        let se = (expected / draws as f64).sqrt();
        assert!((expected - 785.398).abs() < 1e-3);
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} vs {expected}");
    }

    #[test]
    fn ppp_intensity_within_three_standard_errors() {
        let w = SimulationWindow::new(PlanarPoint::new(30.0, -10.0).unwrap(), 50.0).unwrap();
        let density = 0.02;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 2_000;
        let counts: Vec<f64> = (0..draws)
            .map(|_| sample_ppp(density, &w, &mut rng).len() as f64 / w.area())
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        let se = (density / w.area() / draws as f64).sqrt();
        assert!((mean - density).abs() < 3.0 * se);
    }

    #[test]
    fn nearest_examples() {
        assert_eq!(nearest_to_origin(&[]), None);
        let pts = [PlanarPoint::new(3.0, 4.0).unwrap(), PlanarPoint::new(1.0, 0.0).unwrap()];
        assert_eq!(nearest_to_origin(&pts), Some(pts[1]));
    }

    #[test]
    fn nearest_tie_breaks_by_angle_then_order() {
        let a = PlanarPoint::new(0.0, 1.0).unwrap(); // angle π/2
        let b = PlanarPoint::new(1.0, 0.0).unwrap(); // angle 0
        assert_eq!(nearest_to_origin(&[a, b]), Some(b));
        let c = PlanarPoint::new(1.0, 0.0).unwrap();
        let picked = nearest_to_origin(&[b, c, a]).unwrap();
        assert_eq!(picked, b);
    }

    #[test]
    fn nearest_distance_mean_is_rayleigh() {
        // E‖x_J‖ = 1 / (2√λ_R) for a planar PPP
        let lambda_r = 1e-3;
        let w = SimulationWindow::centered(150.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let d = nearest_to_origin(&sample_ppp(lambda_r, &w, &mut rng)).unwrap().norm();
            sum += d;
            sum_sq += d * d;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let expected = 1.0 / (2.0 * lambda_r.sqrt());
        assert!((expected - 15.811).abs() < 1e-3);
        assert!((mean - expected).abs() < 3.0 * (var / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn nearest_distance_cdf_kolmogorov() {
        let lambda_r = 1e-3;
        let w = SimulationWindow::centered(150.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut d: Vec<f64> = (0..n)
            .map(|_| nearest_to_origin(&sample_ppp(lambda_r, &w, &mut rng)).unwrap().norm())
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = d
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let cdf = 1.0 - (-lambda_r * PI * r * r).exp();
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                (cdf - lo).abs().max((hi - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn window_defaults() {
        let w = SimulationWindow::around_link(20.0, 1e-5).unwrap();
        assert!((w.radius - 4.0 / 1e-5f64.sqrt()).abs() < 1e-9);
        let w = SimulationWindow::around_link(20.0, 0.0).unwrap();
        assert_eq!(w.radius, 100.0);
        let r = tail_radius(1e-4, 4.0, 20.0, 1e-3);
        assert!((truncation_tail(1e-4, 4.0, 20.0, r) - 1e-3).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn hop_identity(r in 0.0..500.0f64, theta in 0.0..TAU, d_sd in 0.1..300.0f64) {
            let relay = PolarPoint::new(r, theta).unwrap();
            let (a, b) = hop_distances(relay, d_sd).unwrap();
            let lhs = a * a + b * b;
            let rhs = 2.0 * r * r + 0.5 * d_sd * d_sd;
            prop_assert!((lhs - rhs).abs() <= 8.0 * f64::EPSILON * rhs);
        }

        #[test]
        fn hop_reflections(r in 0.0..500.0f64, theta in 0.0..TAU, d_sd in 0.1..300.0f64) {
            let (a, b) = hop_distances(PolarPoint::new(r, theta).unwrap(), d_sd).unwrap();
            let (a2, b2) = hop_distances(PolarPoint::new(r, -theta).unwrap(), d_sd).unwrap();
            let (a3, b3) = hop_distances(PolarPoint::new(r, PI - theta).unwrap(), d_sd).unwrap();
            // sqrt near an endpoint amplifies rounding in cos θ
            let tol = 1e-7 * (r + d_sd);
            prop_assert!((a - a2).abs() <= tol && (b - b2).abs() <= tol);
            prop_assert!((a - b3).abs() <= tol && (b - a3).abs() <= tol);
        }
    }
}
