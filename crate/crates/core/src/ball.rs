//! Euclidean ball geometry: volumes, second moments, effective radii, and
//! exact grid-point counts inside balls.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Volume of the n-dimensional unit ball, V_n = pi^{n/2} / Gamma(n/2 + 1).
///
/// Evaluated through log-gamma so it stays finite and accurate for large n
/// even though V_n itself underflows.
pub fn volume_unit_ball(n: usize) -> f64 {
    ln_volume_unit_ball(n).exp()
}

pub fn ln_volume_unit_ball(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    half * std::f64::consts::PI.ln() - ln_gamma(half + 1.0)
}

/// nV_n^{2/n}, the normalized ball-volume term that approaches 2*pi*e.
pub fn n_vn_2n(n: usize) -> f64 {
    n as f64 * (2.0 * ln_volume_unit_ball(n) / n as f64).exp()
}

/// Second moment per dimension of a ball of radius r: r^2 / (n + 2).
///
/// This is the smallest per-dimension second moment of any set with the same
/// volume.
pub fn ball_second_moment(r: f64, n: usize) -> f64 {
    r * r / (n as f64 + 2.0)
}

/// Radius of the ball whose volume matches `volume`.
pub fn effective_radius(volume: f64, n: usize) -> f64 {
    ((volume.ln() - ln_volume_unit_ball(n)) / n as f64).exp()
}

/// Exact |Z^n intersect B(s, r)| by enumerating the axis-aligned bounding
/// box. The box has prod_i (floor(s_i + r) - ceil(s_i - r) + 1) candidates;
/// callers bound that through `budget`.
pub fn count_integer_points_in_ball(s: &[f64], r: f64, budget: u64) -> Result<u64> {
    assert!(r >= 0.0 && r.is_finite());
    let n = s.len();
    let lo: Vec<i64> = s.iter().map(|&si| (si - r).ceil() as i64).collect();
    let hi: Vec<i64> = s.iter().map(|&si| (si + r).floor() as i64).collect();
    let mut box_points: u128 = 1;
    for i in 0..n {
        if hi[i] < lo[i] {
            return Ok(0);
        }
        box_points = box_points.saturating_mul((hi[i] - lo[i] + 1) as u128);
    }
    if box_points > budget as u128 {
        return Err(Error::BudgetExceeded {
            needed: box_points,
            budget,
        });
    }

    let r2 = r * r;
    let mut count = 0u64;
    let mut a = lo.clone();
    'outer: loop {
        let d2: f64 = a
            .iter()
            .zip(s)
            .map(|(&ai, &si)| {
                let d = ai as f64 - si;
                d * d
            })
            .sum();
        if d2 <= r2 {
            count += 1;
        }
        let mut idx = n;
        loop {
            if idx == 0 {
                break 'outer;
            }
            idx -= 1;
            if a[idx] < hi[idx] {
                a[idx] += 1;
                break;
            }
            a[idx] = lo[idx];
        }
    }
    Ok(count)
}

/// The two-sided grid/sphere count bounds:
/// (max{r - sqrt(n)/2, 0})^n V_n <= count <= (r + sqrt(n)/2)^n V_n.
pub fn grid_sphere_bounds(n: usize, r: f64) -> (f64, f64) {
    let vn = volume_unit_ball(n);
    let half_diag = (n as f64).sqrt() / 2.0;
    let lower = (r - half_diag).max(0.0).powi(n as i32) * vn;
    let upper = (r + half_diag).powi(n as i32) * vn;
    (lower, upper)
}
