//! Adaptive quadrature with forced refinement around declared singularities.
//!
//! Orbit integrands spike where a short lattice vector crosses the light
//! cone; callers pass those root locations as singularities and the driver
//! carves geometric annuli around each before the error-driven subdivision
//! starts. Evaluations returning +∞ on an interval of positive width mark
//! the integral as divergent instead of looping.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae (positive half) with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

#[derive(Clone, Debug)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_bound: f64,
    pub node_count: usize,
    pub singularity_nodes: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { tol: 1e-6, max_nodes: 200_000 }
    }
}

struct Gk15 {
    kronrod: f64,
    gauss: f64,
    saw_inf: bool,
}

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Gk15 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    let mut saw_inf = false;
    for (i, &x) in XGK.iter().enumerate() {
        let (lo, hi) = (center - half * x, center + half * x);
        let (flo, fhi) = if i == 7 {
            let v = f(center);
            (v, 0.0)
        } else {
            (f(lo), f(hi))
        };
        if !flo.is_finite() || !fhi.is_finite() {
            saw_inf = true;
        }
        let pair = if i == 7 { flo } else { flo + fhi };
        kronrod += WGK[i] * pair;
        // Odd-index Kronrod abscissae are the Gauss-7 nodes (index 7 is the
        // center, carrying the last Gauss weight).
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Gk15 { kronrod: kronrod * half, gauss: gauss * half, saw_inf }
}

/// ∫_a^b f, with forced refinement around `singularities`.
pub fn orbit_integral(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    singularities: &[f64],
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    if !(a < b) {
        return Err(Error::Precondition(format!("empty interval [{a}, {b}]")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let mut sings: Vec<f64> = singularities
        .iter()
        .copied()
        .filter(|s| s.is_finite() && *s > a && *s < b)
        .collect();
    sings.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sings.dedup_by(|x, y| (*x - *y).abs() < 1e-14 * (b - a));

    // Breakpoints: the endpoints, the singular points, and geometric annuli
    // shrinking into each singular point from both sides.
    let mut points = vec![a, b];
    for &s in &sings {
        points.push(s);
        let reach_l = s - a;
        let reach_r = b - s;
        let mut w = 1.0;
        for _ in 0..50 {
            w *= 0.5;
            let dl = reach_l * w;
            let dr = reach_r * w;
            if dl > 1e-16 * (b - a) {
                points.push(s - dl);
            }
            if dr > 1e-16 * (b - a) {
                points.push(s + dr);
            }
        }
    }
    points.retain(|x| *x >= a && *x <= b);
    points.sort_by(|x, y| x.partial_cmp(y).unwrap());
    points.dedup_by(|x, y| (*x - *y).abs() < 1e-17 * (b - a).max(1.0));

    let mut stack: Vec<(f64, f64)> = points
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|(lo, hi)| hi > lo)
        .collect();
    stack.reverse();

    let mut value = 0.0;
    let mut error = 0.0;
    let mut nodes = 0usize;
    let min_width = 1e-15 * (b - a);
    // Per-interval acceptance gets a floor so that singularity annuli (tiny
    // width, honest error) do not trigger endless subdivision; the reported
    // error_bound stays the certified sum of local errors either way.
    let local_tol = |width: f64| opts.tol * (width / (b - a)).max(1.0 / 1024.0);

    while let Some((lo, hi)) = stack.pop() {
        nodes += 15;
        if nodes > opts.max_nodes {
            return Err(Error::Resource(format!(
                "quadrature node budget exhausted (partial value {:.6e}, error {:.3e})",
                value, error
            )));
        }
        let est = gk15(f, lo, hi);
        if est.saw_inf {
            if hi - lo <= min_width {
                // Persistent infinite values on a shrunken interval: the
                // integrand is divergent here.
                return Ok(QuadratureResult {
                    value: f64::INFINITY,
                    error_bound: f64::INFINITY,
                    node_count: nodes,
                    singularity_nodes: sings,
                });
            }
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
            continue;
        }
        let err = (est.kronrod - est.gauss).abs();
        if err <= local_tol(hi - lo) || hi - lo <= min_width {
            value += est.kronrod;
            error += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }

    Ok(QuadratureResult { value, error_bound: error, node_count: nodes, singularity_nodes: sings })
}

/// Monte Carlo cross-check: (estimate, half-width of a 95% CI).
pub fn mc_integral(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    samples: u64,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0u64;
    for _ in 0..samples {
        let r = rng.gen_range(a..b);
        let v = f(r);
        if v.is_finite() {
            sum += v;
            sum_sq += v * v;
        } else {
            return (f64::INFINITY, f64::INFINITY);
        }
        n += 1;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    let half = 1.96 * (var / n as f64).sqrt() * (b - a);
    (mean * (b - a), half)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand() {
        let r = orbit_integral(&|_| 1.0, -1.0, 1.0, &[], &QuadratureOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn integrable_singularity_with_declared_node() {
        // ∫_{−1}^{1} |r|^{−1/2} dr = 4.
        let opts = QuadratureOptions { tol: 1e-8, max_nodes: 400_000 };
        let r = orbit_integral(&|x: f64| x.abs().powf(-0.5), -1.0, 1.0, &[0.0], &opts).unwrap();
        assert!((r.value - 4.0).abs() < 1e-5, "value {}", r.value);
    }

    #[test]
    fn smooth_integrand_matches_closed_form() {
        let r = orbit_integral(&|x: f64| x.cos(), 0.0, 1.0, &[], &QuadratureOptions::default())
            .unwrap();
        assert!((r.value - 1f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn divergent_integrand_reports_infinity() {
        // 1/|r| is not integrable through 0: the annuli shrink onto the
        // declared node and the partial sums grow like the depth, so the
        // result is either +∞, a huge value, or a resource error carrying
        // the partial estimate.
        let opts = QuadratureOptions { tol: 1e-6, max_nodes: 2_000_000 };
        let f = |x: f64| if x == 0.0 { f64::INFINITY } else { 1.0 / x.abs() };
        match orbit_integral(&f, -1.0, 1.0, &[0.0], &opts) {
            Ok(r) => assert!(r.value.is_infinite() || r.value > 30.0, "value {}", r.value),
            Err(crate::error::Error::Resource(msg)) => assert!(msg.contains("partial")),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn reproducible_node_counts() {
        let f = |x: f64| (x * 37.0).sin().abs().powf(1.5) + 0.3;
        let opts = QuadratureOptions { tol: 1e-9, max_nodes: 500_000 };
        let r1 = orbit_integral(&f, -1.0, 1.0, &[0.25], &opts).unwrap();
        let r2 = orbit_integral(&f, -1.0, 1.0, &[0.25], &opts).unwrap();
        assert_eq!(r1.value.to_bits(), r2.value.to_bits());
        assert_eq!(r1.node_count, r2.node_count);
    }

    #[test]
    fn mc_matches_quadrature() {
        let f = |x: f64| x * x + 0.5;
        let q = orbit_integral(&f, -1.0, 1.0, &[], &QuadratureOptions::default()).unwrap();
        let (mc, ci) = mc_integral(&f, -1.0, 1.0, 200_000, 9);
        assert!((q.value - mc).abs() < 3.0 * ci.max(1e-3));
    }
}
