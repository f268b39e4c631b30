//! The one-parameter groups a_t, u_r, the compact circle K ⊂ H, orbit
//! integrals of heights, contraction/subharmonic verifiers, sojourn
//! fractions, anchor points on near-cone planes, and walk schedules.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{self, M3, V3};
use crate::heights::{
    alpha_hat, alpha_tilde, in_exceptional_set, phi_delta, profile, AlphaHatVariant,
    ExceptionalWitness, HeightParams,
};
use crate::lattice::{plane_lattice_basis, Lattice3};
use crate::quad::{orbit_integral, QuadratureOptions, QuadratureResult};

pub fn a_t(t: f64) -> M3 {
    [[t.exp(), 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, (-t).exp()]]
}

pub fn u_r(r: f64) -> M3 {
    [[1.0, r, r * r / 2.0], [0.0, 1.0, r], [0.0, 0.0, 1.0]]
}

/// a_t · u_r.
pub fn flow_matrix(t: f64, r: f64) -> M3 {
    let et = t.exp();
    let emt = (-t).exp();
    [[et, et * r, et * r * r / 2.0], [0.0, 1.0, r], [0.0, 0.0, emt]]
}

/// a_t* · u_r* = J (a_t u_r) J.
pub fn flow_matrix_starred(t: f64, r: f64) -> M3 {
    let m = flow_matrix(t, r);
    geom::mat_mul(&geom::J_MAT, &geom::mat_mul(&m, &geom::J_MAT))
}

/// The rotation subgroup of H, parameterized by angle. W conjugates the
/// coordinate rotation R(θ) into the Q_0 frame: W diagonalizes Q_0 to
/// diag(1,1,−1), and K(θ) = W·R(θ)·Wᵀ fixes the timelike axis.
pub fn k_rot(theta: f64) -> M3 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let w: M3 = [[r, 0.0, r], [0.0, 1.0, 0.0], [-r, 0.0, r]];
    let (s, c) = theta.sin_cos();
    let rot: M3 = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    geom::mat_mul(&w, &geom::mat_mul(&rot, &geom::transpose(&w)))
}

/// Group point a_t·u_r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowPoint {
    pub t: f64,
    pub r: f64,
}

impl FlowPoint {
    pub fn new(t: f64, r: f64) -> Self {
        FlowPoint { t, r }
    }

    pub fn matrix(&self) -> M3 {
        flow_matrix(self.t, self.r)
    }
}

/// a_t u_r w, by the closed form; with `starred`, a_t* u_r* w.
pub fn apply_flow(fp: &FlowPoint, w: &V3, starred: bool) -> V3 {
    if starred {
        return geom::j_apply(&apply_flow(fp, &geom::j_apply(w), false));
    }
    let et = fp.t.exp();
    [
        et * (w[0] + fp.r * w[1] + 0.5 * fp.r * fp.r * w[2]),
        w[1] + fp.r * w[2],
        (-fp.t).exp() * w[2],
    ]
}

/// Quadrature singularity hints for a vector: the real roots of
/// (r − ρ)² = κ₀ together with ρ itself, clipped to the integration range.
fn vector_seeds(w: &V3, lo: f64, hi: f64, out: &mut Vec<f64>) {
    if let Ok(p) = profile(w) {
        if p.rho.is_finite() {
            if p.rho > lo && p.rho < hi {
                out.push(p.rho);
            }
            if p.kappa0.is_finite() && p.kappa0 >= 0.0 {
                let half = p.kappa0.sqrt();
                for root in [p.rho - half, p.rho + half] {
                    if root > lo && root < hi {
                        out.push(root);
                    }
                }
            }
        }
    }
}

/// Hints from the short vectors of a lattice.
fn lattice_seeds(lat: &Lattice3, hint_radius: f64, lo: f64, hi: f64, max_box: u64) -> Vec<f64> {
    let mut out = Vec::new();
    if let Ok(cands) = lat.enumerate_vectors(hint_radius, true, max_box) {
        for c in &cands {
            vector_seeds(&c.v, lo, hi, &mut out);
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub enum LinearWhich {
    /// ∫‖a_t u_r w‖^{−λ} dr ≤ 100 e^{−(1−λ)t/3} ‖w‖^{−λ}, λ ∈ [1/2, 1].
    NormLambda(f64),
    /// ∫‖a_t u_r w‖^{−1−δ} dr ≤ 40 δ⁻¹ e^{δt} ‖w‖^{−1−δ}.
    Expansion,
    /// ∫φ_δ(a_t u_r w) dr ≤ 80 δ⁻¹ e^{−δt} φ_δ(w), t ≥ 1.
    Phi,
    /// Starred twin of `Phi` along a_t* u_r*.
    PhiStar,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub vacuous: bool,
    pub quad: Option<QuadratureResult>,
}

pub fn verify_linear_contraction(
    w: &V3,
    t: f64,
    p: &HeightParams,
    which: LinearWhich,
    opts: &QuadratureOptions,
) -> Result<VerifyReport> {
    if w == &[0.0, 0.0, 0.0] {
        return Err(Error::Precondition("zero vector".into()));
    }
    let norm = geom::norm_sup(w);
    let delta = p.delta;
    let (integrand, rhs, seeds_from): (Box<dyn Fn(f64) -> f64>, f64, V3) = match which {
        LinearWhich::NormLambda(lambda) => {
            if !(0.5..=1.0).contains(&lambda) {
                return Err(Error::Precondition(format!("lambda = {lambda} outside [1/2, 1]")));
            }
            if !(t > 0.0) {
                return Err(Error::Precondition("t must be positive".into()));
            }
            let wv = *w;
            (
                Box::new(move |r| {
                    geom::norm_sup(&apply_flow(&FlowPoint::new(t, r), &wv, false)).powf(-lambda)
                }),
                100.0 * (-(1.0 - lambda) * t / 3.0).exp() * norm.powf(-lambda),
                *w,
            )
        }
        LinearWhich::Expansion => {
            if !(t > 0.0) {
                return Err(Error::Precondition("t must be positive".into()));
            }
            let wv = *w;
            (
                Box::new(move |r| {
                    geom::norm_sup(&apply_flow(&FlowPoint::new(t, r), &wv, false))
                        .powf(-1.0 - delta)
                }),
                40.0 / delta * (delta * t).exp() * norm.powf(-1.0 - delta),
                *w,
            )
        }
        LinearWhich::Phi => {
            if !(t >= 1.0) {
                return Err(Error::Precondition("phi contraction needs t ≥ 1".into()));
            }
            let wv = *w;
            (
                Box::new(move |r| {
                    phi_delta(&apply_flow(&FlowPoint::new(t, r), &wv, false), delta, false)
                        .unwrap_or(f64::INFINITY)
                }),
                80.0 / delta * (-delta * t).exp() * phi_delta(w, delta, false)?,
                *w,
            )
        }
        LinearWhich::PhiStar => {
            if !(t >= 1.0) {
                return Err(Error::Precondition("phi* contraction needs t ≥ 1".into()));
            }
            // φ*_δ(a_t* u_r* w) = φ_δ(a_t u_r (Jw)).
            let jw = geom::j_apply(w);
            (
                Box::new(move |r| {
                    phi_delta(&apply_flow(&FlowPoint::new(t, r), &jw, false), delta, false)
                        .unwrap_or(f64::INFINITY)
                }),
                80.0 / delta * (-delta * t).exp() * phi_delta(w, delta, true)?,
                geom::j_apply(w),
            )
        }
    };
    if rhs.is_infinite() {
        return Ok(VerifyReport { lhs: f64::NAN, rhs, pass: true, vacuous: true, quad: None });
    }
    let mut seeds = Vec::new();
    vector_seeds(&seeds_from, -1.0, 1.0, &mut seeds);
    let quad = orbit_integral(&*integrand, -1.0, 1.0, &seeds, opts)?;
    let pass = quad.value <= rhs + quad.error_bound + 1e-12 * rhs.abs();
    Ok(VerifyReport { lhs: quad.value, rhs, pass, vacuous: false, quad: Some(quad) })
}

#[derive(Clone, Copy, Debug)]
pub enum SubharmonicWhich {
    /// ∫α(a_s u_r gΔ)^λ ≤ 100 e^{−(1−λ)s/3} α(gΔ)^λ + e^{4s}, λ ∈ [1/2, 1).
    AlphaLambda(f64),
    /// ∫α^{1+δ} ≤ 400 δ⁻¹ e^{δs} α(gΔ)^{1+δ} + e^{4s}.
    AlphaSuper,
    /// ∫α̂_{η,M}^{1+δ} ≤ 80 δ⁻¹ e^{δs} α̂^{1+δ} + 80 δ⁻¹ α(gΔ)^{0.9} + ½e^{6s}.
    AlphaHatExpansion,
    /// ∫α̂'^{1+δ} ≤ 400 δ⁻¹ e^{δs} α̂'^{1+δ} + e^{6s}, s > 10.
    AlphaHatPrime,
    /// ∫α̃(a_s u_r g) ≤ δ^{−10} η^{−4δ} e^{−δs} α̃(g) + e^{9s}, off the
    /// exceptional set.
    AlphaTilde,
}

#[derive(Clone, Debug)]
pub struct SubharmonicReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub skipped: Option<ExceptionalWitness>,
    pub quad: Option<QuadratureResult>,
}

pub fn verify_subharmonic(
    g: &M3,
    lat: &Lattice3,
    p: &HeightParams,
    s: f64,
    which: SubharmonicWhich,
    opts: &QuadratureOptions,
    hint_radius: f64,
    max_box: u64,
) -> Result<SubharmonicReport> {
    let delta = p.delta;
    let base = lat.translated(g);
    let seeds = lattice_seeds(&base, hint_radius, -1.0, 1.0, max_box);
    let run = |integrand: &dyn Fn(f64) -> f64, rhs: f64| -> Result<SubharmonicReport> {
        let quad = orbit_integral(integrand, -1.0, 1.0, &seeds, opts)?;
        let pass = quad.value <= rhs + quad.error_bound + 1e-12 * rhs.abs();
        Ok(SubharmonicReport { lhs: quad.value, rhs, pass, skipped: None, quad: Some(quad) })
    };
    match which {
        SubharmonicWhich::AlphaLambda(lambda) => {
            if !(0.5..1.0).contains(&lambda) {
                return Err(Error::Precondition(format!("lambda = {lambda} outside [1/2, 1)")));
            }
            if !(s > 0.0) {
                return Err(Error::Precondition("s must be positive".into()));
            }
            let a0 = base.alpha(max_box)?;
            let rhs = 100.0 * (-(1.0 - lambda) * s / 3.0).exp() * a0.powf(lambda) + (4.0 * s).exp();
            let f = |r: f64| {
                base.translated(&flow_matrix(s, r))
                    .alpha(max_box)
                    .map(|a| a.powf(lambda))
                    .unwrap_or(f64::INFINITY)
            };
            run(&f, rhs)
        }
        SubharmonicWhich::AlphaSuper => {
            if !(s > 0.0) {
                return Err(Error::Precondition("s must be positive".into()));
            }
            let a0 = base.alpha(max_box)?;
            let rhs = 400.0 / delta * (delta * s).exp() * a0.powf(1.0 + delta) + (4.0 * s).exp();
            let f = |r: f64| {
                base.translated(&flow_matrix(s, r))
                    .alpha(max_box)
                    .map(|a| a.powf(1.0 + delta))
                    .unwrap_or(f64::INFINITY)
            };
            run(&f, rhs)
        }
        SubharmonicWhich::AlphaHatExpansion => {
            if !(s > 0.0) {
                return Err(Error::Precondition("s must be positive".into()));
            }
            let ah = alpha_hat(g, lat, p, AlphaHatVariant::EtaM, max_box)?;
            let a0 = base.alpha(max_box)?;
            let rhs = 80.0 / delta * (delta * s).exp() * ah.powf(1.0 + delta)
                + 80.0 / delta * a0.powf(0.9)
                + 0.5 * (6.0 * s).exp();
            let f = |r: f64| {
                let gg = geom::mat_mul(&flow_matrix(s, r), g);
                alpha_hat(&gg, lat, p, AlphaHatVariant::EtaM, max_box)
                    .map(|a| a.powf(1.0 + delta))
                    .unwrap_or(f64::INFINITY)
            };
            run(&f, rhs)
        }
        SubharmonicWhich::AlphaHatPrime => {
            if !(s > 10.0) {
                return Err(Error::Precondition("the α̂' superharmonic bound needs s > 10".into()));
            }
            let ah = alpha_hat(g, lat, p, AlphaHatVariant::Prime, max_box)?;
            let rhs = 400.0 / delta * (delta * s).exp() * ah.powf(1.0 + delta) + (6.0 * s).exp();
            let f = |r: f64| {
                let gg = geom::mat_mul(&flow_matrix(s, r), g);
                alpha_hat(&gg, lat, p, AlphaHatVariant::Prime, max_box)
                    .map(|a| a.powf(1.0 + delta))
                    .unwrap_or(f64::INFINITY)
            };
            run(&f, rhs)
        }
        SubharmonicWhich::AlphaTilde => {
            if !(s >= 1.0) {
                return Err(Error::Precondition("the modified-height bound needs s ≥ 1".into()));
            }
            let cap = p.subharmonic_delta_cap();
            if delta > cap {
                return Err(Error::Precondition(format!(
                    "delta = {delta} exceeds the admissible cap {cap:.3e} for (D, M)"
                )));
            }
            let chk = in_exceptional_set(g, lat, p, s, max_box)?;
            if chk.member {
                return Ok(SubharmonicReport {
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    pass: true,
                    skipped: chk.witness,
                    quad: None,
                });
            }
            let at0 = alpha_tilde(g, lat, p, max_box)?;
            let rhs = delta.powi(-10) * p.eta.powf(-4.0 * delta) * (-delta * s).exp() * at0
                + (9.0 * s).exp();
            let f = |r: f64| {
                let gg = geom::mat_mul(&flow_matrix(s, r), g);
                alpha_tilde(&gg, lat, p, max_box).unwrap_or(f64::INFINITY)
            };
            run(&f, rhs)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentHeight {
    Alpha,
    AlphaHatEtaM,
    AlphaHatPrime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentDomain {
    /// u_r over [−1, 1].
    Unipotent,
    /// K with normalized angle measure.
    Compact,
}

/// ∫ h(a_t·u_r; Δ)^λ dr (or the normalized K average).
pub fn moment(
    lat: &Lattice3,
    t: f64,
    exponent: f64,
    p: &HeightParams,
    height: MomentHeight,
    over: MomentDomain,
    opts: &QuadratureOptions,
    hint_radius: f64,
    max_box: u64,
) -> Result<QuadratureResult> {
    if !(t >= 0.0) {
        return Err(Error::Precondition("t must be nonnegative".into()));
    }
    let eval = |g: &M3| -> f64 {
        let value = match height {
            MomentHeight::Alpha => lat.translated(g).alpha(max_box),
            MomentHeight::AlphaHatEtaM => alpha_hat(g, lat, p, AlphaHatVariant::EtaM, max_box),
            MomentHeight::AlphaHatPrime => alpha_hat(g, lat, p, AlphaHatVariant::Prime, max_box),
        };
        value.map(|a| a.powf(exponent)).unwrap_or(f64::INFINITY)
    };
    match over {
        MomentDomain::Unipotent => {
            let seeds = lattice_seeds(lat, hint_radius.min(3.0 * t.exp()), -1.0, 1.0, max_box);
            let f = |r: f64| eval(&flow_matrix(t, r));
            orbit_integral(&f, -1.0, 1.0, &seeds, opts)
        }
        MomentDomain::Compact => {
            let f = |theta: f64| eval(&geom::mat_mul(&a_t(t), &k_rot(theta)));
            let mut res = orbit_integral(&f, 0.0, 2.0 * std::f64::consts::PI, &[], opts)?;
            let norm = 2.0 * std::f64::consts::PI;
            res.value /= norm;
            res.error_bound /= norm;
            Ok(res)
        }
    }
}

/// Monte Carlo measure of {r ∈ [−1,1] : predicate(a_t u_r Δ)} with a Wilson
/// 95% interval, both scaled to the total measure 2.
pub fn sojourn_fraction(
    lat: &Lattice3,
    t: f64,
    predicate: &dyn Fn(&Lattice3) -> bool,
    samples: u64,
    seed: u64,
) -> Result<(f64, (f64, f64))> {
    if samples < 100 {
        return Err(Error::Precondition("need at least 100 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let r = rng.gen_range(-1.0..1.0);
        if predicate(&lat.translated(&flow_matrix(t, r))) {
            hits += 1;
        }
    }
    let n = samples as f64;
    let phat = hits as f64 / n;
    let z = 1.959963984540054f64;
    let denom = 1.0 + z * z / n;
    let center = (phat + z * z / (2.0 * n)) / denom;
    let half = z * ((phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt()) / denom;
    let lo = (center - half).max(0.0) * 2.0;
    let hi = (center + half).min(1.0) * 2.0;
    Ok((2.0 * phat, (lo, hi)))
}

/// Anchor set on a rational plane: near-cone members cluster around at most
/// two ρ values; returns those anchors (constructively: the extreme pair
/// when it is 5e^{−s}-separated, else a single representative).
pub fn anchor_points(
    lat: &Lattice3,
    plane_normal: &[i64; 3],
    s: f64,
    radius: f64,
    max_box: u64,
) -> Result<Vec<f64>> {
    if !(s >= 1.0) {
        return Err(Error::Precondition("anchor points need s ≥ 1".into()));
    }
    if !crate::lattice::is_primitive(plane_normal) {
        return Err(Error::Precondition("plane normal must be primitive".into()));
    }
    let (k1, k2) = plane_lattice_basis(plane_normal);
    let b = lat.basis();
    let bf = |k: &[i64; 3]| geom::mat_vec(b, &[k[0] as f64, k[1] as f64, k[2] as f64]);
    let (u1, u2) = reduce_pair(bf(&k1), bf(&k2));
    // Coefficient bounds from the Euclidean Gram inverse.
    let g11 = geom::dot(&u1, &u1);
    let g12 = geom::dot(&u1, &u2);
    let g22 = geom::dot(&u2, &u2);
    let det = g11 * g22 - g12 * g12;
    if det <= 0.0 {
        return Err(Error::Precondition("plane basis is degenerate".into()));
    }
    // |a| ≤ (g22·√g11 + |g12|·√g22)·√3·R / det, symmetrically for |b|.
    let r2 = 3f64.sqrt() * radius;
    let c1 = (((g22 * g11.sqrt() + g12.abs() * g22.sqrt()) * r2 / det).ceil() as i64)
        .max(1)
        .min(5_000_000);
    let c2 = (((g11 * g22.sqrt() + g12.abs() * g11.sqrt()) * r2 / det).ceil() as i64)
        .max(1)
        .min(5_000_000);
    if (2 * c1 + 1) as u64 * (2 * c2 + 1) as u64 > max_box {
        return Err(Error::Resource("anchor enumeration box exceeds cap".into()));
    }
    let cutoff = (-3.0 * s).exp();
    let mut rhos: Vec<f64> = Vec::new();
    for a in 0..=c1 {
        let b_range: Box<dyn Iterator<Item = i64>> =
            if a == 0 { Box::new(1..=c2) } else { Box::new(-c2..=c2) };
        for bb in b_range {
            let v = geom::add(&geom::scale(&u1, a as f64), &geom::scale(&u2, bb as f64));
            if geom::norm_sup(&v) > radius {
                continue;
            }
            if let Ok(pr) = profile(&v) {
                if pr.kappa0.abs() < cutoff && pr.rho.is_finite() {
                    rhos.push(pr.rho);
                }
            }
        }
    }
    if rhos.is_empty() {
        return Ok(Vec::new());
    }
    rhos.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let spread = rhos[rhos.len() - 1] - rhos[0];
    let gap = 5.0 * (-s).exp();
    let anchors = if spread <= gap {
        vec![rhos[0]]
    } else {
        vec![rhos[0], rhos[rhos.len() - 1]]
    };
    let tol = gap * (1.0 + 1e-9);
    for &r in &rhos {
        if !anchors.iter().any(|a| (a - r).abs() <= tol) {
            return Err(Error::Domain(format!(
                "anchor coverage violated at rho = {r}; members do not form two clusters"
            )));
        }
    }
    Ok(anchors)
}

fn reduce_pair(mut a: V3, mut b: V3) -> (V3, V3) {
    for _ in 0..64 {
        if geom::dot(&a, &a) > geom::dot(&b, &b) {
            std::mem::swap(&mut a, &mut b);
        }
        let denom = geom::dot(&a, &a);
        if denom == 0.0 {
            break;
        }
        let mu = (geom::dot(&a, &b) / denom).round();
        if mu == 0.0 {
            break;
        }
        b = geom::sub(&b, &geom::scale(&a, mu));
    }
    (a, b)
}

/// Geometric walk schedule: s₁ = B·s₂, sᵢ = (1+δ)·sᵢ₊₁ in the middle,
/// T ≤ s_N ≤ 2T, and Σ sᵢ = t.
#[derive(Clone, Debug)]
pub struct WalkSchedule {
    pub s: Vec<f64>,
    pub b: f64,
    pub delta: f64,
    pub t_tail: f64,
    pub t_total: f64,
}

impl WalkSchedule {
    /// The four defining invariants, at relative tolerance 1e−9.
    pub fn validate(&self) -> bool {
        let n = self.s.len();
        if n < 2 {
            return false;
        }
        let sum: f64 = self.s.iter().sum();
        let tol = |x: f64| 1e-9 * x.abs().max(1.0);
        if (sum - self.t_total).abs() > tol(self.t_total) {
            return false;
        }
        if (self.s[0] - self.b * self.s[1]).abs() > tol(self.s[0]) {
            return false;
        }
        for i in 1..n.saturating_sub(1) {
            if (self.s[i] - (1.0 + self.delta) * self.s[i + 1]).abs() > tol(self.s[i]) {
                return false;
            }
        }
        let last = self.s[n - 1];
        last >= self.t_tail * (1.0 - 1e-9) && last <= 2.0 * self.t_tail * (1.0 + 1e-9)
    }
}

/// Builds the schedule: find k and τ ∈ [T, 2T] with t = b_k·τ where
/// b_k = B(1+δ)^k + Σ_{i=0}^{k} (1+δ)^i, then s₁ = B(1+δ)^k τ and
/// s_i = (1+δ)^{N−i} τ.
pub fn walk_schedule(b: f64, delta: f64, t_tail: f64, t_total: f64) -> Result<WalkSchedule> {
    if !(b > 1.0) {
        return Err(Error::Precondition("B must exceed 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0 / (1.0 + b)) {
        return Err(Error::Precondition(format!("delta must lie in (0, 1/(1+B)) = (0, {})", 1.0 / (1.0 + b))));
    }
    if !(t_tail > 0.0) {
        return Err(Error::Precondition("T must be positive".into()));
    }
    // Existence threshold: the k = 0 schedule needs t ≥ (B+1)·T, and the
    // ratios b_{k+1}/b_k stay below 2 from there on, so every larger t is
    // reachable. (t ≥ T/δ is the sufficient condition quoted with the
    // construction; the gap below it is still constructible.)
    if t_total < (b + 1.0) * t_tail * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "t = {t_total} below the constructible threshold (B+1)·T = {}",
            (b + 1.0) * t_tail
        )));
    }
    let q = 1.0 + delta;
    let bk = |k: i64| -> f64 {
        let x = q.powi(k as i32);
        b * x + (x * q - 1.0) / delta
    };
    // Smallest k with t/b_k ≤ 2T; b_k grows by the factor (1+δ) + O(1), so
    // solve in closed form and adjust by a couple of steps for safety.
    let target = t_total / (2.0 * t_tail);
    let x0 = ((target + 1.0 / delta) / (b + q / delta)).max(1.0);
    let mut k = (x0.ln() / q.ln()).floor() as i64 - 2;
    if k < 0 {
        k = 0;
    }
    while bk(k) < target && k < 100_000_000 {
        k += 1;
    }
    while k > 0 && bk(k - 1) >= target {
        k -= 1;
    }
    let tau = t_total / bk(k);
    if !(tau >= t_tail * (1.0 - 1e-9) && tau <= 2.0 * t_tail * (1.0 + 1e-9)) {
        return Err(Error::Precondition(format!(
            "no admissible tau: got {tau} for T = {t_tail} (k = {k})"
        )));
    }
    let n = (k + 2) as usize;
    let mut s = Vec::with_capacity(n);
    s.push(b * q.powi(k as i32) * tau);
    for i in 2..=n {
        s.push(q.powi((n - i) as i32) * tau);
    }
    Ok(WalkSchedule { s, b, delta, t_tail, t_total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heights;
    use crate::lattice::DEFAULT_MAX_BOX;

    fn params() -> HeightParams {
        HeightParams::new(0.01, 0.5, 2.0, 1024.0).unwrap()
    }

    #[test]
    fn flow_group_laws() {
        let m1 = geom::mat_mul(&a_t(0.7), &a_t(0.3));
        let m2 = a_t(1.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((m1[i][j] - m2[i][j]).abs() < 1e-12);
            }
        }
        let m1 = geom::mat_mul(&u_r(0.25), &u_r(0.5));
        let m2 = u_r(0.75);
        for i in 0..3 {
            for j in 0..3 {
                assert!((m1[i][j] - m2[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn j_conjugation_gives_starred_matrices() {
        let t = 0.8;
        let r = -0.4;
        // a_t* u_r* must equal the transpose-inverse of a_t u_r.
        let starred = flow_matrix_starred(t, r);
        let inv_t = geom::transpose(&geom::inverse(&flow_matrix(t, r)).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert!((starred[i][j] - inv_t[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_flow_examples() {
        let w = [0.3, -0.7, 1.1];
        let id = FlowPoint::new(0.0, 0.0);
        assert_eq!(apply_flow(&id, &w, false), w);

        let fp = FlowPoint::new(1.0, 0.0);
        let out = apply_flow(&fp, &[0.0, 1.0, 1.0], false);
        assert!((out[0] - 0.0).abs() < 1e-15);
        assert!((out[1] - 1.0).abs() < 1e-15);
        assert!((out[2] - (-1f64).exp()).abs() < 1e-15);

        // Q_0 is preserved along the flow.
        let w = [1.0, 2.0, 2.0];
        for (t, r) in [(0.5, 0.3), (2.0, -0.9), (4.0, 0.77)] {
            let out = apply_flow(&FlowPoint::new(t, r), &w, false);
            assert!(geom::q0(&out).abs() < 1e-9, "Q_0 drifted: {}", geom::q0(&out));
        }
    }

    #[test]
    fn flow_matrices_stabilize_q0_and_k_too() {
        assert!(heights::in_h(&flow_matrix(1.3, -0.6)));
        assert!(heights::in_h(&flow_matrix_starred(1.3, -0.6)));
        for theta in [0.0, 0.4, 1.9, 3.6, 5.5] {
            let k = k_rot(theta);
            assert!(heights::in_h(&k), "K({theta}) must stabilize Q_0");
            assert!((geom::det(&k) - 1.0).abs() < 1e-12);
        }
        // Angle addition.
        let k1 = geom::mat_mul(&k_rot(0.3), &k_rot(0.5));
        let k2 = k_rot(0.8);
        for i in 0..3 {
            for j in 0..3 {
                assert!((k1[i][j] - k2[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flow_covariance_of_profile() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let w = [
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0f64),
            ];
            if w[2].abs() < 1e-3 {
                continue;
            }
            let t = rng.gen_range(0.0..3.0);
            let r = rng.gen_range(-1.0..1.0);
            let before = profile(&w).unwrap();
            let after = profile(&apply_flow(&FlowPoint::new(t, r), &w, false)).unwrap();
            let expect_rho = t.exp() * (before.rho - r);
            let expect_k0 = (2.0 * t).exp() * before.kappa0;
            assert!(
                (after.rho - expect_rho).abs() <= 1e-10 * expect_rho.abs().max(1.0),
                "rho covariance failed"
            );
            assert!(
                (after.kappa0 - expect_k0).abs() <= 1e-10 * expect_k0.abs().max(1.0),
                "kappa0 covariance failed"
            );
        }
    }

    #[test]
    fn kappa_growth_under_expansion() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let w = [
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0f64),
            ];
            if geom::norm_sup(&w) < 1e-6 {
                continue;
            }
            let t = rng.gen_range(1.0..4.0);
            let r = rng.gen_range(-1.0..1.0);
            let k_before = profile(&w).unwrap().kappa;
            let k_after = profile(&apply_flow(&FlowPoint::new(t, r), &w, false)).unwrap().kappa;
            let e2t = (2.0 * t).exp();
            if k_before >= 1.0 / e2t {
                assert!(k_after >= 1.0 - 1e-9);
            } else {
                assert!(k_after >= e2t * k_before * (1.0 - 1e-9));
            }
            if k_after < 1.0 {
                assert!((k_after - e2t * k_before).abs() <= 1e-9 * k_after.max(1e-300));
            }
        }
    }

    #[test]
    fn log_lipschitz_bounds() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10_000 {
            let w = [
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0f64),
            ];
            if geom::norm_sup(&w) < 1e-9 {
                continue;
            }
            let t = rng.gen_range(0.0..4.0);
            let r = rng.gen_range(-1.0..1.0);
            let out = apply_flow(&FlowPoint::new(t, r), &w, false);
            let factor = 3.0 * t.exp();
            let n0 = geom::norm_sup(&w);
            let n1 = geom::norm_sup(&out);
            assert!(n1 <= factor * n0 * (1.0 + 1e-12));
            assert!(n1 >= n0 / factor * (1.0 - 1e-12));
        }
    }

    #[test]
    fn norm_lambda_closed_form_case() {
        // w = e₁: a_t u_r w = e^t·e₁ for every r, so the integral is exactly
        // 2e^{−λt}‖w‖^{−λ} and the bound holds with slack.
        let p = params();
        let rep = verify_linear_contraction(
            &[1.0, 0.0, 0.0],
            2.0,
            &p,
            LinearWhich::NormLambda(0.9),
            &QuadratureOptions::default(),
        )
        .unwrap();
        let expect = 2.0 * (-0.9 * 2.0f64).exp();
        assert!((rep.lhs - expect).abs() < 1e-9);
        assert!(rep.pass);
    }

    #[test]
    fn phi_contraction_spot_checks() {
        let p = params();
        let rep = verify_linear_contraction(
            &[0.0, 1.0, 2.0],
            2.0,
            &p,
            LinearWhich::Phi,
            &QuadratureOptions::default(),
        )
        .unwrap();
        assert!(rep.pass, "lhs {} rhs {}", rep.lhs, rep.rhs);

        // On the cone inside the gate the bound is vacuous.
        let rep = verify_linear_contraction(
            &[1.0, 2.0, 2.0],
            2.0,
            &p,
            LinearWhich::Phi,
            &QuadratureOptions::default(),
        )
        .unwrap();
        assert!(rep.vacuous && rep.pass);
    }

    #[test]
    fn subharmonic_alpha_on_standard_lattice() {
        let p = params();
        let rep = verify_subharmonic(
            &geom::IDENTITY,
            &Lattice3::standard(),
            &p,
            2.0,
            SubharmonicWhich::AlphaLambda(0.9),
            &QuadratureOptions { tol: 1e-4, max_nodes: 100_000 },
            3.0,
            DEFAULT_MAX_BOX,
        )
        .unwrap();
        assert!(rep.pass, "lhs {} rhs {}", rep.lhs, rep.rhs);
    }

    #[test]
    fn alpha_tilde_subharmonic_identity_not_skipped() {
        // The identity pair is never exceptional, so the verifier must not skip.
        let p = HeightParams::new(1e-9, 0.5, 2.0, 1024.0);
        // Need δ below the admissible cap for (D, M).
        let p = p.unwrap();
        let rep = verify_subharmonic(
            &geom::IDENTITY,
            &Lattice3::standard(),
            &p,
            2.0,
            SubharmonicWhich::AlphaTilde,
            &QuadratureOptions { tol: 1e-3, max_nodes: 400_000 },
            3.0,
            DEFAULT_MAX_BOX,
        )
        .unwrap();
        assert!(rep.skipped.is_none());
        assert!(rep.pass, "lhs {} rhs {}", rep.lhs, rep.rhs);
    }

    #[test]
    fn walk_schedule_example() {
        // B = 3, δ = 0.2, T = 1, t = 4: k = 0, τ = 1, schedule [3, 1].
        let ws = walk_schedule(3.0, 0.2, 1.0, 4.0).unwrap();
        assert_eq!(ws.s.len(), 2);
        assert!((ws.s[0] - 3.0).abs() < 1e-12);
        assert!((ws.s[1] - 1.0).abs() < 1e-12);
        assert!(ws.validate());
    }

    #[test]
    fn walk_schedule_boundary() {
        let ws = walk_schedule(2.0, 0.1, 1.0, 10.0).unwrap();
        assert!(ws.validate());
        // Below (B+1)·T no k gives τ ≥ T.
        assert!(walk_schedule(2.0, 0.1, 1.0, 2.9).is_err());
        assert!(walk_schedule(2.0, 0.5, 1.0, 100.0).is_err()); // δ ≥ 1/(1+B)
    }

    #[test]
    fn sojourn_trivial_predicates() {
        let lat = Lattice3::standard();
        let (frac, _) = sojourn_fraction(&lat, 1.0, &|_| true, 200, 5).unwrap();
        assert_eq!(frac, 2.0);
        let (frac, ci) = sojourn_fraction(&lat, 1.0, &|_| false, 200, 5).unwrap();
        assert_eq!(frac, 0.0);
        assert!(ci.0 <= 1e-12);
    }

    #[test]
    fn anchor_points_on_plane_without_cone_vectors() {
        // The plane v₃ = 0 in Z³ holds (x, y, 0): κ₀ infinite unless y = 0;
        // (x, 0, 0) has w₂ = w₃ = 0, also excluded. No members, no anchors.
        let anchors =
            anchor_points(&Lattice3::standard(), &[0, 0, 1], 1.0, 30.0, DEFAULT_MAX_BOX).unwrap();
        assert!(anchors.is_empty());
    }

    #[test]
    fn anchor_points_two_cluster_plane() {
        // Plane normal (0,1,0): members (x, 0, z), κ₀ = −2x/z² and
        // ρ = 0, so everything near the cone clusters at ρ = 0.
        let anchors =
            anchor_points(&Lattice3::standard(), &[0, 1, 0], 1.0, 30.0, DEFAULT_MAX_BOX).unwrap();
        assert_eq!(anchors.len(), 1);
        assert!((anchors[0] - 0.0).abs() < 1e-12);
    }
}
