//! Plane integrals coupling the two hops of a relay link.
//!
//! Both integrals live in a frame centered on the midpoint of the
//! source–relay segment, with the source at `(+d_sr/2, 0)` and the relay at
//! `(−d_sr/2, 0)`. The integrands are symmetric in `y`, so only the upper
//! half-plane is integrated, in polar coordinates, and the result doubled.

use std::f64::consts::PI;

use super::integrate::{integrate, integrate_to_infinity, Tolerance};
use crate::error::Result;

/// Polar integral of `integrand(x, y)` over the plane, assuming symmetry in `y`.
///
/// The radial axis starts from panels split at `breakpoints`; everything past
/// the largest one is either mapped to a finite interval (`tail = true`) or
/// treated as negligible.
fn integrate_plane<F>(
    integrand: F,
    breakpoints: &[f64],
    tail: bool,
    rel_tol: f64,
    max_panels: usize,
    what: &'static str,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let mut edges: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && b.is_finite())
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let outer = *edges.last().expect("at least one positive breakpoint");

    let inner_tol = Tolerance::relative(0.1 * rel_tol, max_panels).with_abs(1e-300);
    let ring = |rho: f64| -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        // a failed ring leaves a NaN behind, which the outer integral reports
        integrate(
            |theta: f64| integrand(rho * theta.cos(), rho * theta.sin()),
            0.0,
            PI,
            &[0.5 * PI],
            inner_tol,
            what,
        )
        .map(|r| 2.0 * rho * r.value)
        .unwrap_or(f64::NAN)
    };

    let body = integrate(ring, 0.0, outer, &edges, Tolerance::relative(rel_tol, max_panels), what)?.value;
    if !tail {
        return Ok(body);
    }
    let tail_tol = Tolerance::relative(rel_tol, max_panels).with_abs(0.1 * rel_tol * body.abs());
    let rest = integrate_to_infinity(ring, outer, outer, tail_tol, what)?.value;
    Ok(body + rest)
}

/// Correlation integral of the colluding two-hop event,
///
/// ```text
/// f = ∫ dx / [(1 + (‖x_S − x‖/d_sr)^α)(1 + (‖x_R − x‖/d_rd)^α)]
/// ```
///
/// It depends on the relay position only through the two hop lengths (the
/// source–relay separation is `d_sr`). Zero when either hop has length zero.
pub fn colluding_correlation(d_sr: f64, d_rd: f64, alpha: f64, rel_tol: f64, max_panels: usize) -> Result<f64> {
    if d_sr == 0.0 || d_rd == 0.0 {
        return Ok(0.0);
    }
    let half = 0.5 * d_sr;
    let half_alpha = 0.5 * alpha;
    let inv_sr2 = 1.0 / (d_sr * d_sr);
    let inv_rd2 = 1.0 / (d_rd * d_rd);
    let integrand = |x: f64, y: f64| {
        let y2 = y * y;
        let to_s = ((x - half) * (x - half) + y2) * inv_sr2;
        let to_r = ((x + half) * (x + half) + y2) * inv_rd2;
        1.0 / ((1.0 + to_s.powf(half_alpha)) * (1.0 + to_r.powf(half_alpha)))
    };
    let span = d_sr + d_rd;
    integrate_plane(
        integrand,
        &[half, d_sr, d_rd, span, 2.0 * span],
        true,
        rel_tol,
        max_panels,
        "colluding correlation integral",
    )
}

/// Correlation integral of the non-colluding two-hop event for fading
/// `h_sr`, `h_rd` on the legitimate hops,
///
/// ```text
/// g = ∫ exp(−h_sr (‖x_S − x‖/d_sr)^α − h_rd (‖x_R − x‖/d_rd)^α) dx
/// ```
///
/// Zero when either hop has length zero.
pub fn noncolluding_correlation(
    d_sr: f64,
    d_rd: f64,
    h_sr: f64,
    h_rd: f64,
    alpha: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    if d_sr == 0.0 || d_rd == 0.0 {
        return Ok(0.0);
    }
    let half = 0.5 * d_sr;
    let half_alpha = 0.5 * alpha;
    // e^{-(ρ/s)^α} length scales around each center
    let s_sr = d_sr * h_sr.powf(-1.0 / alpha);
    let s_rd = d_rd * h_rd.powf(-1.0 / alpha);
    let k_sr = h_sr / d_sr.powf(alpha);
    let k_rd = h_rd / d_rd.powf(alpha);
    let integrand = |x: f64, y: f64| {
        let y2 = y * y;
        let to_s = (x - half) * (x - half) + y2;
        let to_r = (x + half) * (x + half) + y2;
        (-k_sr * to_s.powf(half_alpha) - k_rd * to_r.powf(half_alpha)).exp()
    };
    // beyond `cut` the factor of the narrower center is below e^{-41.5} ≈ 1e-18
    let narrow = s_sr.min(s_rd);
    let reach = 41.5_f64.powf(1.0 / alpha);
    let cut = half + reach * narrow;
    integrate_plane(
        integrand,
        &[half, narrow, half + narrow, half + 0.5 * reach * narrow, cut],
        false,
        rel_tol,
        max_panels,
        "non-colluding correlation integral",
    )
}
