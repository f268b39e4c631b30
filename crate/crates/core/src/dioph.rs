//! Constructive Diophantine machinery: building an integral form from five
//! almost-isotropic integer points, estimating the Diophantine type by
//! exhaustive search over integral forms, and clustering checks for the
//! quasi-null shell of a lattice.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::QForm;
use crate::geom;
use crate::heights::{lattice_vector_quasi_null, HeightParams};
use crate::lattice::{lattice_from_form, LatticeVector};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct ConstructedForm {
    /// The integral form Q'.
    pub q_prime: QForm,
    /// Rescaling with det(ρQ') matching det(Q), real cube root.
    pub rho: f64,
    /// ‖Q − ρQ'‖ (exactly zero when Q' is exactly proportional to Q).
    pub dist: f64,
    /// ‖Q'‖ and the guaranteed bound 10⁶·R¹⁴.
    pub norm: f64,
    pub norm_bound: f64,
}

fn det3_i128(m: &[[i64; 3]; 3]) -> i128 {
    let c = |i: usize, j: usize| m[i][j] as i128;
    c(0, 0) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1))
        - c(0, 1) * (c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0))
        + c(0, 2) * (c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0))
}

/// Sign-preserving real cube root of det(A_Q)/det(A_Q'), which rescales Q'
/// onto the |det| = 1 normalization with the correct orientation.
pub fn rho_for(q: &QForm, q_prime: &QForm) -> Result<f64> {
    let dq = q.det()?.to_f64();
    let dqp = q_prime.det()?.to_f64();
    if dqp == 0.0 {
        return Err(Error::Degenerate("candidate form is degenerate".into()));
    }
    Ok((dq / dqp).cbrt())
}

/// Runs the five-point construction: γ = [m₁ m₂ m₃], a = adj(γ)m₄,
/// b = adj(γ)m₅, 𝐚 = (a₃a₁, a₁a₂, a₂a₃), 𝐛 likewise, (c₁,c₂,c₃) = 𝐚×𝐛,
/// Q₁' = c₁v₂v₃ + c₂v₁v₃ + c₃v₁v₂, and Q' = Q₁' ∘ adj(γ).
pub fn construct_integral_form(
    q: &QForm,
    points: &[[i64; 3]; 5],
    radius: f64,
    eps: f64,
) -> Result<ConstructedForm> {
    for m in points {
        if *m == [0, 0, 0] {
            return Err(Error::Precondition("zero point in the quintuple".into()));
        }
        let norm = m.iter().map(|x| x.abs()).max().unwrap() as f64;
        if norm >= radius {
            return Err(Error::Precondition(format!("point {m:?} has norm ≥ R = {radius}")));
        }
        let value = q.evaluate_int(m);
        let ok = if eps == 0.0 { value.is_zero() } else { value.to_f64().abs() <= eps * (1.0 + 1e-9) };
        if !ok {
            return Err(Error::Precondition(format!(
                "|Q({m:?})| = {} exceeds eps = {eps}",
                value.to_f64().abs()
            )));
        }
    }
    // No three on one plane through the origin: all 3-subsets have nonzero
    // triple product, exactly.
    for i in 0..5 {
        for j in (i + 1)..5 {
            for k in (j + 1)..5 {
                let d = det3_i128(&columns(&points[i], &points[j], &points[k]));
                if d == 0 {
                    return Err(Error::Precondition(format!(
                        "points {i}, {j}, {k} are coplanar with the origin"
                    )));
                }
            }
        }
    }

    let gamma = columns(&points[0], &points[1], &points[2]);
    let adj = adjugate_i64(&gamma);
    let a = mat_vec_big(&adj, &points[3]);
    let b = mat_vec_big(&adj, &points[4]);
    // Cyclic products (a₂a₃, a₃a₁, a₁a₂): the dot with the polarization
    // vector (Q(m₂,m₃), Q(m₃,m₁), Q(m₁,m₂)) is then Σ_{i<j} Q(mᵢ,mⱼ)aᵢaⱼ,
    // which the five-point identities make small.
    let aa = [&a[1] * &a[2], &a[2] * &a[0], &a[0] * &a[1]];
    let bb = [&b[1] * &b[2], &b[2] * &b[0], &b[0] * &b[1]];
    let c = [
        &aa[1] * &bb[2] - &aa[2] * &bb[1],
        &aa[2] * &bb[0] - &aa[0] * &bb[2],
        &aa[0] * &bb[1] - &aa[1] * &bb[0],
    ];
    if c.iter().all(|x| x.is_zero()) {
        return Err(Error::Precondition(
            "degenerate cross product; the quintuple violates the no-three-coplanar hypothesis"
                .into(),
        ));
    }
    // Q₁' has monomials (0, 0, 0, c₃, c₂, c₁) in (c11,c22,c33,c12,c13,c23) order.
    let q1 = QForm::new([
        Scalar::zero(),
        Scalar::zero(),
        Scalar::zero(),
        Scalar::rational(BigRational::from_integer(c[2].clone())),
        Scalar::rational(BigRational::from_integer(c[1].clone())),
        Scalar::rational(BigRational::from_integer(c[0].clone())),
    ])?;
    let adj_exact = big_mat_to_exact(&adj);
    let q_prime = q1.transform(&adj_exact)?;
    debug_assert!(q_prime.is_integral());

    let norm = q_prime.sup_norm();
    let norm_bound = 1e6 * radius.powi(14);
    if norm > norm_bound {
        return Err(Error::Domain(format!(
            "construction escaped its norm bound: ‖Q'‖ = {norm:.3e} > {norm_bound:.3e}"
        )));
    }

    // Exact proportionality short-circuits the float distance.
    if let Some(ratio) = q_prime.proportional_ratio(q) {
        return Ok(ConstructedForm {
            q_prime,
            rho: ratio.to_f64(),
            dist: 0.0,
            norm,
            norm_bound,
        });
    }
    let rho = rho_for(q, &q_prime)?;
    let scaled = q_prime.to_f64().map(|x| x * rho);
    let dist = crate::forms::sup_distance_f64(&q.to_f64(), &scaled);
    Ok(ConstructedForm { q_prime, rho, dist, norm, norm_bound })
}

fn columns(c0: &[i64; 3], c1: &[i64; 3], c2: &[i64; 3]) -> [[i64; 3]; 3] {
    [
        [c0[0], c1[0], c2[0]],
        [c0[1], c1[1], c2[1]],
        [c0[2], c1[2], c2[2]],
    ]
}

fn adjugate_i64(m: &[[i64; 3]; 3]) -> [[BigInt; 3]; 3] {
    let c = |i: usize, j: usize| BigInt::from(m[i][j]);
    let cof = |i1: usize, j1: usize, i2: usize, j2: usize| c(i1, j1) * c(i2, j2) - c(i1, j2) * c(i2, j1);
    [
        [cof(1, 1, 2, 2), cof(0, 2, 2, 1), cof(0, 1, 1, 2)],
        [cof(1, 2, 2, 0), cof(0, 0, 2, 2), cof(0, 2, 1, 0)],
        [cof(1, 0, 2, 1), cof(0, 1, 2, 0), cof(0, 0, 1, 1)],
    ]
}

fn mat_vec_big(m: &[[BigInt; 3]; 3], v: &[i64; 3]) -> [BigInt; 3] {
    let mut out = [BigInt::zero(), BigInt::zero(), BigInt::zero()];
    for i in 0..3 {
        for (j, x) in v.iter().enumerate() {
            out[i] += &m[i][j] * BigInt::from(*x);
        }
    }
    out
}

fn big_mat_to_exact(m: &[[BigInt; 3]; 3]) -> crate::mat3::Mat3E {
    let mut out = crate::mat3::identity();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = Scalar::rational(BigRational::from_integer(m[i][j].clone()));
        }
    }
    out
}

/// Result of the cap-limited type search: the minimum of
/// ‖Q − ρQ'‖·‖Q'‖^M over nonzero integral forms with ‖Q'‖ ≤ cap.
#[derive(Clone, Debug)]
pub struct DiophEstimate {
    pub c_min: f64,
    /// Monomial coefficients of the minimizer.
    pub argmin: [i64; 6],
    pub cap: i64,
}

pub fn estimate_dioph_type(q: &QForm, m_exp: f64, cap: i64) -> Result<DiophEstimate> {
    if !(m_exp > 1.0) {
        return Err(Error::Precondition("M must exceed 1".into()));
    }
    if cap < 1 {
        return Err(Error::Precondition("cap must be at least 1".into()));
    }
    let candidates = ((2 * cap + 1) as f64).powi(6) / 2.0;
    if candidates > 3.0e9 {
        return Err(Error::Resource(format!(
            "cap = {cap} gives ~{candidates:.1e} candidate forms, over the search budget"
        )));
    }
    let dq = q.det()?.to_f64();
    if (dq.abs() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("|det A| = {} must be 1", dq.abs())));
    }
    let qf = q.to_f64();

    // Candidates are scanned by leading coefficient in parallel; the global
    // minimum is an associative reduction with a lexicographic tie-break.
    let best = (-cap..=cap)
        .into_par_iter()
        .map(|c11| scan_leading(q, &qf, dq, m_exp, cap, c11))
        .reduce(
            || (f64::INFINITY, [0i64; 6]),
            |x, y| {
                if (y.0, y.1) < (x.0, x.1) {
                    y
                } else {
                    x
                }
            },
        );
    if best.0.is_infinite() {
        return Err(Error::Domain("no nondegenerate candidate form found".into()));
    }
    Ok(DiophEstimate { c_min: best.0, argmin: best.1, cap })
}

fn scan_leading(
    q: &QForm,
    qf: &[f64; 6],
    dq: f64,
    m_exp: f64,
    cap: i64,
    c11: i64,
) -> (f64, [i64; 6]) {
    let mut best = (f64::INFINITY, [0i64; 6]);
    let mut coeffs = [c11, 0, 0, 0, 0, 0];
    scan_rest(q, qf, dq, m_exp, cap, &mut coeffs, 1, &mut best);
    best
}

fn scan_rest(
    q: &QForm,
    qf: &[f64; 6],
    dq: f64,
    m_exp: f64,
    cap: i64,
    coeffs: &mut [i64; 6],
    idx: usize,
    best: &mut (f64, [i64; 6]),
) {
    if idx == 6 {
        consider(q, qf, dq, m_exp, coeffs, best);
        return;
    }
    for c in -cap..=cap {
        coeffs[idx] = c;
        scan_rest(q, qf, dq, m_exp, cap, coeffs, idx + 1, best);
    }
}

fn consider(
    q: &QForm,
    qf: &[f64; 6],
    dq: f64,
    m_exp: f64,
    coeffs: &[i64; 6],
    best: &mut (f64, [i64; 6]),
) {
    // One representative per ± pair: first nonzero coefficient positive.
    let mut lead = 0i64;
    for &c in coeffs {
        if c != 0 {
            lead = c;
            break;
        }
    }
    if lead <= 0 {
        return;
    }
    // det(2A') is integral: 2A' = [[2c11,c12,c13],[c12,2c22,c23],[c13,c23,2c33]].
    let c = coeffs;
    let m = [
        [2 * c[0], c[3], c[4]],
        [c[3], 2 * c[1], c[5]],
        [c[4], c[5], 2 * c[2]],
    ];
    let det8 = det3_i128(&m);
    if det8 == 0 {
        return;
    }
    let dqp = det8 as f64 / 8.0;
    let rho = (dq / dqp).cbrt();
    let norm = coeffs.iter().map(|x| x.abs()).max().unwrap() as f64;
    let weight = norm.powf(m_exp);
    // Coarse lower bound on the distance via the largest coefficient.
    let mut dist = 0f64;
    for i in 0..6 {
        dist = dist.max((qf[i] - rho * c[i] as f64).abs());
        if dist * weight >= best.0 {
            return;
        }
    }
    let mut obj = dist * weight;
    if dist < 1e-9 {
        // Snap exact proportionality to zero.
        if let Ok(qp) = int_form(coeffs) {
            if qp.proportional_ratio(q).is_some() {
                obj = 0.0;
            }
        }
    }
    if (obj, *coeffs) < (best.0, best.1) || best.0.is_infinite() {
        *best = (obj, *coeffs);
    }
}

pub fn int_form(coeffs: &[i64; 6]) -> Result<QForm> {
    QForm::new([
        Scalar::from_int(coeffs[0]),
        Scalar::from_int(coeffs[1]),
        Scalar::from_int(coeffs[2]),
        Scalar::from_int(coeffs[3]),
        Scalar::from_int(coeffs[4]),
        Scalar::from_int(coeffs[5]),
    ])
}

/// Quasi-null shell census: the (η,M)-quasi-null lattice vectors of Δ_Q with
/// R ≤ ‖v‖ < R², covered by lines and planes through the origin.
#[derive(Clone, Debug)]
pub struct ShellReport {
    pub vectors: Vec<LatticeVector>,
    pub line_cover: Vec<[i64; 3]>,
    pub plane_cover: Vec<[i64; 3]>,
    pub pass: bool,
}

pub fn quasi_null_shell(
    q: &QForm,
    p: &HeightParams,
    radius: f64,
    max_box: u64,
) -> Result<ShellReport> {
    if !(radius > 10.0) {
        return Err(Error::Precondition("shell radius must exceed 10".into()));
    }
    let lat = lattice_from_form(q)?;
    let outer = radius * radius;
    let mut vectors: Vec<LatticeVector> = Vec::new();
    lat.for_each_vector(outer, false, max_box, &mut |lv| {
        let n = geom::norm_sup(&lv.v);
        if n >= radius && n < outer && lattice_vector_quasi_null(&lat, lv, p) {
            vectors.push(*lv);
        }
        std::ops::ControlFlow::Continue(())
    })?;

    // Each vector lies on the line of its primitive coefficient direction.
    let mut directions: Vec<[i64; 3]> = Vec::new();
    for v in &vectors {
        let g = gcd3(&v.m);
        let dir = [v.m[0] / g, v.m[1] / g, v.m[2] / g];
        let dir = canonical_sign(&dir);
        if !directions.contains(&dir) {
            directions.push(dir);
        }
    }
    directions.sort();

    // Greedy plane cover of the direction set.
    let mut uncovered: Vec<[i64; 3]> = directions.clone();
    let mut plane_cover: Vec<[i64; 3]> = Vec::new();
    while !uncovered.is_empty() && plane_cover.len() < 64 {
        let mut best_normal: Option<[i64; 3]> = None;
        let mut best_count = 0usize;
        for i in 0..uncovered.len() {
            for j in (i + 1)..uncovered.len() {
                if let Some(n) = plane_normal(&uncovered[i], &uncovered[j]) {
                    let count = uncovered.iter().filter(|d| dot3(d, &n) == 0).count();
                    if count > best_count {
                        best_count = count;
                        best_normal = Some(n);
                    }
                }
            }
        }
        match best_normal {
            Some(n) => {
                uncovered.retain(|d| dot3(d, &n) != 0);
                plane_cover.push(n);
            }
            None => {
                // A single leftover direction: any plane through it works.
                let d = uncovered.remove(0);
                let probe = if d[0] == 0 { [1, 0, 0] } else { [0, 1, 0] };
                let n = plane_normal(&d, &probe).unwrap_or([0, 0, 1]);
                plane_cover.push(n);
            }
        }
    }

    let pass = directions.len() <= 12 && plane_cover.len() <= 6;
    Ok(ShellReport { vectors, line_cover: directions, plane_cover, pass })
}

fn gcd3(m: &[i64; 3]) -> i64 {
    use num_integer::Integer;
    let g = m[0].unsigned_abs().gcd(&m[1].unsigned_abs()).gcd(&m[2].unsigned_abs());
    (g as i64).max(1)
}

fn canonical_sign(m: &[i64; 3]) -> [i64; 3] {
    for &x in m {
        if x > 0 {
            return *m;
        }
        if x < 0 {
            return [-m[0], -m[1], -m[2]];
        }
    }
    *m
}

fn dot3(a: &[i64; 3], b: &[i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn plane_normal(a: &[i64; 3], b: &[i64; 3]) -> Option<[i64; 3]> {
    let n = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    if n == [0, 0, 0] {
        return None;
    }
    let g = gcd3(&n);
    Some(canonical_sign(&[n[0] / g, n[1] / g, n[2] / g]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q0_QUINTUPLE: [[i64; 3]; 5] =
        [[1, 0, 0], [0, 0, 1], [1, 2, 2], [2, 2, 1], [1, -2, 2]];

    #[test]
    fn exact_quintuple_reconstructs_q0() {
        let q = QForm::q0();
        let out = construct_integral_form(&q, &Q0_QUINTUPLE, 3.0, 0.0).unwrap();
        assert_eq!(out.dist, 0.0);
        assert!(out.q_prime.is_integral());
        assert!(out.q_prime.proportional_ratio(&q).is_some());
        assert!(out.norm <= out.norm_bound);
    }

    #[test]
    fn scaled_quintuple_keeps_its_bound() {
        let q = QForm::q0();
        let doubled: [[i64; 3]; 5] = {
            let mut d = Q0_QUINTUPLE;
            for m in &mut d {
                for x in m.iter_mut() {
                    *x *= 2;
                }
            }
            d
        };
        let out = construct_integral_form(&q, &doubled, 6.0, 0.0).unwrap();
        assert!(out.norm <= 1e6 * 6f64.powi(14));
        assert_eq!(out.dist, 0.0);
    }

    #[test]
    fn coplanar_quintuple_rejected() {
        let q = QForm::q0();
        // First three points in the plane v2 = 0.
        let pts = [[1, 0, 0], [0, 0, 1], [1, 0, 1], [2, 2, 1], [1, -2, 2]];
        let err = construct_integral_form(&q, &pts, 3.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn rational_form_reaches_zero() {
        let est = estimate_dioph_type(&QForm::q0(), 2.0, 2).unwrap();
        assert_eq!(est.c_min, 0.0);
        // The minimizer is an integral multiple of the form itself.
        let qp = int_form(&est.argmin).unwrap();
        assert!(qp.proportional_ratio(&QForm::q0()).is_some());
    }

    #[test]
    fn irrational_form_stays_positive() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let est = estimate_dioph_type(&q, 2.0, 4).unwrap();
        assert!(est.c_min > 0.0, "c_min = {}", est.c_min);
    }

    #[test]
    fn type_estimate_is_monotone_in_cap() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let e2 = estimate_dioph_type(&q, 2.0, 2).unwrap();
        let e4 = estimate_dioph_type(&q, 2.0, 4).unwrap();
        assert!(e4.c_min <= e2.c_min + 1e-15);
    }

    #[test]
    fn shell_of_irrational_form_clusters_on_isotropic_lines() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let p = HeightParams::new(0.01, 0.5, 2.0, 1024.0).unwrap();
        let rep = quasi_null_shell(&q, &p, 12.0, 1 << 34).unwrap();
        assert!(rep.pass, "lines: {:?}, planes: {:?}", rep.line_cover, rep.plane_cover);
        // Quasi-null vectors at these norms are exactly isotropic, so every
        // direction must be one of the two isotropic coefficient lines.
        for dir in &rep.line_cover {
            assert!(
                dir == &[1, 0, 0] || dir == &[0, 0, 1],
                "unexpected direction {dir:?}"
            );
        }
    }
}
