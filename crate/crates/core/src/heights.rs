//! Scalar height functions: the ρ/κ₀/κ profile, φ_δ, quasi-null membership,
//! the modified α family, ε thresholds, and exceptional-set membership.
//!
//! Quantities mixing η‖v‖^{−50M} with e^{−100Mt} scales are handled in
//! log-space throughout; ‖v‖^{−50M} underflows f64 already for ‖v‖ ≥ 2 and
//! moderate M, log-space does not.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geom::{self, M3, V3};
use crate::lattice::{Lattice3, LatticeVector};

const H_STABILIZER_TOL: f64 = 1e-9;

/// (δ, η, M) plus the absolute constant D.
#[derive(Clone, Copy, Debug)]
pub struct HeightParams {
    pub delta: f64,
    pub eta: f64,
    pub m: f64,
    pub d: f64,
}

impl HeightParams {
    pub fn new(delta: f64, eta: f64, m: f64, d: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.01) {
            return Err(Error::Precondition(format!("delta = {delta} outside (0, 0.01]")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Precondition(format!("eta = {eta} outside (0, 1]")));
        }
        if !(m > 1.0) {
            return Err(Error::Precondition(format!("M = {m} must exceed 1")));
        }
        if !(d > 1.0) {
            return Err(Error::Precondition(format!("D = {d} must exceed 1")));
        }
        Ok(HeightParams { delta, eta, m, d })
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        HeightParams::new(cfg.delta, cfg.eta, cfg.m_type, cfg.d_const)
    }

    /// δ admissible for the subharmonic estimate of the modified height.
    pub fn subharmonic_delta_cap(&self) -> f64 {
        1.0 / (400.0 * self.d * self.m * (self.m + 7.0))
    }
}

/// (ρ, κ₀, κ) of a nonzero vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VectorProfile {
    pub rho: f64,
    pub kappa0: f64,
    pub kappa: f64,
}

/// ρ = −w₂/w₃, κ₀ = Q_0(w)/w₃², and κ = |κ₀| when |κ₀| < 1 and |ρ| < 2,
/// else 1. The degenerate direction w₂ = w₃ = 0 maps to (∞, ∞, 1).
pub fn profile(w: &V3) -> Result<VectorProfile> {
    if w == &[0.0, 0.0, 0.0] {
        return Err(Error::Precondition("profile of the zero vector".into()));
    }
    if w[1] == 0.0 && w[2] == 0.0 {
        return Ok(VectorProfile { rho: f64::INFINITY, kappa0: f64::INFINITY, kappa: 1.0 });
    }
    let rho = -w[1] / w[2];
    let kappa0 = geom::q0(w) / (w[2] * w[2]);
    let kappa = if kappa0.abs() < 1.0 && rho.abs() < 2.0 { kappa0.abs() } else { 1.0 };
    Ok(VectorProfile { rho, kappa0, kappa })
}

/// κ in log-space, with the exact Q_0 value injected when available.
/// Returns 0.0 (= ln 1) outside the gate; −∞ on the cone inside the gate.
pub fn log_kappa(w: &V3, exact_log_abs_q0: Option<f64>) -> f64 {
    if w[1] == 0.0 && w[2] == 0.0 {
        return 0.0;
    }
    let rho = -w[1] / w[2];
    if !(rho.abs() < 2.0) {
        return 0.0;
    }
    let log_q0 = exact_log_abs_q0.unwrap_or_else(|| {
        let q = geom::q0(w);
        if q == 0.0 { f64::NEG_INFINITY } else { q.abs().ln() }
    });
    let log_k0 = log_q0 - 2.0 * w[2].abs().ln();
    if log_k0 < 0.0 {
        log_k0
    } else {
        0.0
    }
}

/// φ_δ(w) = κ(w)^{−2δ}·‖w‖^{−1−δ}; +∞ on the cone inside the κ gate.
/// With `starred`, evaluates φ_δ(Jw) (same norm, J-twisted profile).
pub fn phi_delta(w: &V3, delta: f64, starred: bool) -> Result<f64> {
    if w == &[0.0, 0.0, 0.0] {
        return Err(Error::Precondition("phi of the zero vector".into()));
    }
    let u = if starred { geom::j_apply(w) } else { *w };
    let p = profile(&u)?;
    let norm = geom::norm_sup(w);
    Ok(p.kappa.powf(-2.0 * delta) * norm.powf(-1.0 - delta))
}

/// Quasi-null test |Q_0(v)| < η‖v‖^{−50M}, decided in log-space.
pub fn is_quasi_null(v: &V3, p: &HeightParams) -> Result<bool> {
    if v == &[0.0, 0.0, 0.0] {
        return Err(Error::Precondition("quasi-null test on the zero vector".into()));
    }
    let q = geom::q0(v);
    let log_q = if q == 0.0 { f64::NEG_INFINITY } else { q.abs().ln() };
    Ok(quasi_null_from_logs(log_q, geom::norm_sup(v).ln(), p))
}

pub fn quasi_null_from_logs(log_abs_q0: f64, log_norm: f64, p: &HeightParams) -> bool {
    log_abs_q0 < p.eta.ln() - 50.0 * p.m * log_norm
}

/// A float lower bound on |Q_0(B·m)|: the f64 evaluation minus a rigorous
/// rounding margin. Positive means the vector is certainly off the cone.
fn q0_float_floor(v: &V3) -> f64 {
    let scale = geom::norm_sup(v);
    geom::q0(v).abs() - 3e-13 * (scale * scale).max(f64::MIN_POSITIVE)
}

/// Quasi-null test for a lattice vector. A float prefilter settles the
/// common case; only near-cone candidates fall through to the exact Q_0
/// hook of the lattice (defining form or exact basis).
pub fn lattice_vector_quasi_null(lat: &Lattice3, lv: &LatticeVector, p: &HeightParams) -> bool {
    let log_norm = geom::norm_sup(&lv.v).ln();
    let floor = q0_float_floor(&lv.v);
    if floor > 0.0 && !quasi_null_from_logs(floor.ln(), log_norm, p) {
        return false;
    }
    let log_q = match lat.q0_exact(&lv.m) {
        Some(s) => {
            if s.is_zero() {
                return true;
            }
            s.log_abs()
        }
        None => {
            let q = geom::q0(&lv.v);
            if q == 0.0 {
                return true;
            }
            q.abs().ln()
        }
    };
    quasi_null_from_logs(log_q, log_norm, p)
}

/// Exact-cone test for a lattice vector (the η-free exclusion).
pub fn lattice_vector_isotropic(lat: &Lattice3, lv: &LatticeVector) -> bool {
    if q0_float_floor(&lv.v) > 0.0 {
        return false;
    }
    match lat.q0_exact(&lv.m) {
        Some(s) => s.is_zero(),
        None => {
            let q = geom::q0(&lv.v);
            let scale = geom::norm_sup(&lv.v).powi(2).max(1e-300);
            q.abs() <= 1e-12 * scale
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaHatVariant {
    /// Exclude exact cone vectors.
    Isotropic,
    /// Exclude (η, M)-quasi-null vectors.
    EtaM,
    /// max(α̂_{η,M}, α(gΔ)^{0.9}).
    Prime,
}

pub fn in_h(g: &M3) -> bool {
    // gᵀ A₀ g = A₀ with A₀ the matrix of Q_0.
    let a0 = [[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]];
    let prod = geom::mat_mul(&geom::transpose(g), &geom::mat_mul(&a0, g));
    let mut err = 0f64;
    for i in 0..3 {
        for j in 0..3 {
            err = err.max((prod[i][j] - a0[i][j]).abs());
        }
    }
    err <= H_STABILIZER_TOL * geom::mat_norm_sup(g).powi(2).max(1.0)
}

fn require_h(g: &M3) -> Result<()> {
    if in_h(g) {
        Ok(())
    } else {
        Err(Error::Precondition("group element does not stabilize Q_0".into()))
    }
}

/// One-sided sup of ‖gv‖^{−1} over non-excluded lattice vectors, by
/// radius-doubling enumeration: once a candidate of norm n ≤ R exists, no
/// vector outside B(R) can beat it, so the search is certified complete.
fn alpha_hat_one_sided<F>(g: &M3, lat: &Lattice3, exclude: F, max_box: u64) -> Result<f64>
where
    F: Fn(&LatticeVector) -> bool,
{
    let moved = lat.translated(g);
    let mut radius = moved.shortest_norm(max_box)?;
    for _ in 0..64 {
        let cands = moved.enumerate_vectors(radius, false, max_box)?;
        let mut best: Option<f64> = None;
        for c in &cands {
            // Exclusion tests run on the original lattice vector.
            let orig = LatticeVector {
                m: c.m,
                v: geom::mat_vec(lat.basis(), &[c.m[0] as f64, c.m[1] as f64, c.m[2] as f64]),
            };
            if exclude(&orig) {
                continue;
            }
            let n = geom::norm_sup(&c.v);
            best = Some(best.map_or(n, |b: f64| b.min(n)));
        }
        if let Some(n) = best {
            if n <= radius {
                return Ok(1.0 / n);
            }
        }
        radius *= 2.0;
    }
    Err(Error::Resource("no admissible vector found within the radius budget".into()))
}

/// α̂ family. The sup over Δ runs through the g-image of the non-excluded
/// vectors; the dual side uses g* = transpose-inverse on Δ*, and the max of
/// the two sides is returned.
pub fn alpha_hat(
    g: &M3,
    lat: &Lattice3,
    p: &HeightParams,
    variant: AlphaHatVariant,
    max_box: u64,
) -> Result<f64> {
    require_h(g)?;
    let gstar = geom::transpose(&geom::inverse(g).ok_or_else(|| {
        Error::Degenerate("group element is singular".into())
    })?);
    let dual = lat.dual();
    let side = |gg: &M3, ll: &Lattice3| -> Result<f64> {
        match variant {
            AlphaHatVariant::Isotropic => {
                alpha_hat_one_sided(gg, ll, |lv| lattice_vector_isotropic(ll, lv), max_box)
            }
            _ => alpha_hat_one_sided(gg, ll, |lv| lattice_vector_quasi_null(ll, lv, p), max_box),
        }
    };
    let a1 = side(g, lat)?;
    let a2 = side(&gstar, &dual)?;
    let base = a1.max(a2);
    if variant == AlphaHatVariant::Prime {
        let full = lat.translated(g).alpha(max_box)?;
        Ok(base.max(full.powf(0.9)))
    } else {
        Ok(base)
    }
}

/// Modified height: max over both sides of the sup of the branch heights
/// over lattice vectors with g-image in the closed unit ball; 1 when the
/// ball holds no nonzero vector.
pub fn alpha_tilde(g: &M3, lat: &Lattice3, p: &HeightParams, max_box: u64) -> Result<f64> {
    require_h(g)?;
    let gstar = geom::transpose(&geom::inverse(g).ok_or_else(|| {
        Error::Degenerate("group element is singular".into())
    })?);
    let dual = lat.dual();
    let s1 = alpha_tilde_side(g, lat, p, false, max_box)?;
    let s2 = alpha_tilde_side(&gstar, &dual, p, true, max_box)?;
    Ok(s1.max(s2))
}

fn alpha_tilde_side(
    g: &M3,
    lat: &Lattice3,
    p: &HeightParams,
    starred: bool,
    max_box: u64,
) -> Result<f64> {
    let moved = lat.translated(g);
    let cands = moved.enumerate_vectors(1.0, false, max_box)?;
    let mut sup = 1.0f64;
    for c in &cands {
        let orig = LatticeVector {
            m: c.m,
            v: geom::mat_vec(lat.basis(), &[c.m[0] as f64, c.m[1] as f64, c.m[2] as f64]),
        };
        let value = if lattice_vector_quasi_null(lat, &orig, p) {
            geom::norm_sup(&c.v).powf(-(1.0 - 3.0 * p.delta))
        } else {
            phi_delta(&c.v, p.delta, starred)?
        };
        sup = sup.max(value);
    }
    Ok(sup)
}

/// ln of the ε threshold, plus the α̂_{η,M} value that selected the branch.
pub fn log_epsilon_threshold(
    g: &M3,
    lat: &Lattice3,
    p: &HeightParams,
    s: f64,
    max_box: u64,
) -> Result<(f64, f64)> {
    if !(s >= 1.0) {
        return Err(Error::Precondition("epsilon threshold needs s ≥ 1".into()));
    }
    let ah = alpha_hat(g, lat, p, AlphaHatVariant::EtaM, max_box)?;
    let log_eps = if ah <= 1e4 * (4.0 * s).exp() {
        p.eta.ln() - 60.0 * p.m * (3f64.ln() + s)
    } else {
        p.eta.ln() - 100.0 * p.d * p.m * p.m * ah.ln()
    };
    Ok((log_eps, ah))
}

/// ε threshold as a float; underflows to 0 honestly for large M, use the
/// log form for comparisons.
pub fn epsilon_threshold(
    g: &M3,
    lat: &Lattice3,
    p: &HeightParams,
    s: f64,
    max_box: u64,
) -> Result<f64> {
    Ok(log_epsilon_threshold(g, lat, p, s, max_box)?.0.exp())
}

/// Exceptional-set membership witness.
#[derive(Clone, Debug)]
pub struct ExceptionalWitness {
    /// 1 = primal side, 2 = dual side.
    pub side: u8,
    pub m: [i64; 3],
    /// The untranslated lattice vector.
    pub v: V3,
}

#[derive(Clone, Debug)]
pub struct ExceptionalCheck {
    pub member: bool,
    pub witness: Option<ExceptionalWitness>,
    pub log_eps: f64,
    pub alpha_hat: f64,
}

/// Membership of (g, Δ) in the exceptional set: some non-quasi-null lattice
/// vector (either side) lands in the shell 1 ≤ ‖·‖ ≤ 3e^s with κ < ε.
pub fn in_exceptional_set(
    g: &M3,
    lat: &Lattice3,
    p: &HeightParams,
    s: f64,
    max_box: u64,
) -> Result<ExceptionalCheck> {
    require_h(g)?;
    let (log_eps, ah) = log_epsilon_threshold(g, lat, p, s, max_box)?;
    let gstar = geom::transpose(&geom::inverse(g).ok_or_else(|| {
        Error::Degenerate("group element is singular".into())
    })?);
    let dual = lat.dual();
    if let Some(w) = exceptional_side(g, lat, p, s, log_eps, false, max_box)? {
        return Ok(ExceptionalCheck {
            member: true,
            witness: Some(ExceptionalWitness { side: 1, m: w.m, v: w.v }),
            log_eps,
            alpha_hat: ah,
        });
    }
    if let Some(w) = exceptional_side(&gstar, &dual, p, s, log_eps, true, max_box)? {
        return Ok(ExceptionalCheck {
            member: true,
            witness: Some(ExceptionalWitness { side: 2, m: w.m, v: w.v }),
            log_eps,
            alpha_hat: ah,
        });
    }
    Ok(ExceptionalCheck { member: false, witness: None, log_eps, alpha_hat: ah })
}

fn exceptional_side(
    g: &M3,
    lat: &Lattice3,
    p: &HeightParams,
    s: f64,
    log_eps: f64,
    starred: bool,
    max_box: u64,
) -> Result<Option<LatticeVector>> {
    let shell = 3.0 * s.exp();
    // Every shell vector with κ < ε is itself quasi-null (hence excluded)
    // whenever ln(9e^{2s}·ε) ≤ ln η − 50M·ln(max original norm); in that
    // case membership is impossible without enumerating anything.
    let ginv = geom::inverse(g)
        .ok_or_else(|| Error::Degenerate("group element is singular".into()))?;
    let op_bound = ginv
        .iter()
        .map(|row| row[0].abs() + row[1].abs() + row[2].abs())
        .fold(0f64, f64::max)
        .max(1e-300);
    let max_orig_norm_log = op_bound.ln() + shell.ln();
    let lhs = 9f64.ln() + 2.0 * s + log_eps;
    let rhs = p.eta.ln() - 50.0 * p.m * max_orig_norm_log;
    if lhs <= rhs {
        return Ok(None);
    }

    let moved = lat.translated(g);
    let mut witness = None;
    moved.for_each_vector(shell, false, max_box, &mut |c| {
        let norm = geom::norm_sup(&c.v);
        if norm < 1.0 {
            return std::ops::ControlFlow::Continue(());
        }
        let orig = LatticeVector {
            m: c.m,
            v: geom::mat_vec(lat.basis(), &[c.m[0] as f64, c.m[1] as f64, c.m[2] as f64]),
        };
        if lattice_vector_quasi_null(lat, &orig, p) {
            return std::ops::ControlFlow::Continue(());
        }
        let image = if starred { geom::j_apply(&c.v) } else { c.v };
        let exact_log = lat.q0_exact(&c.m).map(|q| q.log_abs());
        if log_kappa(&image, exact_log) < log_eps {
            witness = Some(orig);
            return std::ops::ControlFlow::Break(());
        }
        std::ops::ControlFlow::Continue(())
    })?;
    Ok(witness)
}

/// Ξ₁-membership of a lattice itself (the compact-avoidance predicate):
/// some nonzero vector with 1 ≤ ‖v‖ ≤ 3e^s and κ(v) < ε.
pub fn meets_thin_shell(lat: &Lattice3, s: f64, log_eps: f64, max_box: u64) -> Result<bool> {
    let shell = 3.0 * s.exp();
    let mut found = false;
    lat.for_each_vector(shell, false, max_box, &mut |c| {
        if geom::norm_sup(&c.v) < 1.0 {
            return std::ops::ControlFlow::Continue(());
        }
        let exact_log = lat.q0_exact(&c.m).map(|q| q.log_abs());
        if log_kappa(&c.v, exact_log) < log_eps {
            found = true;
            return std::ops::ControlFlow::Break(());
        }
        std::ops::ControlFlow::Continue(())
    })?;
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DEFAULT_MAX_BOX;

    fn params(delta: f64, eta: f64, m: f64) -> HeightParams {
        HeightParams::new(delta, eta, m, 1024.0).unwrap()
    }

    #[test]
    fn profile_examples() {
        let p = profile(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.rho, -0.5);
        assert_eq!(p.kappa0, 0.25);
        assert_eq!(p.kappa, 0.25);

        let p = profile(&[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(p.rho, -1.0);
        assert_eq!(p.kappa0, 1.0);
        assert_eq!(p.kappa, 1.0); // |κ₀| = 1 fails the strict gate

        let p = profile(&[1.0, 0.0, 0.0]).unwrap();
        assert!(p.rho.is_infinite() && p.kappa0.is_infinite());
        assert_eq!(p.kappa, 1.0);

        assert!(profile(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn phi_examples() {
        let d = 0.01;
        let expect = 4f64.powf(0.02) * 2f64.powf(-1.01);
        let got = phi_delta(&[0.0, 1.0, 2.0], d, false).unwrap();
        assert!((got - expect).abs() < 1e-14, "{got} vs {expect}");

        // On the cone inside the gate: κ = 0, φ = +∞.
        let got = phi_delta(&[1.0, 2.0, 2.0], d, false).unwrap();
        assert!(got.is_infinite());

        // Starred: J(0,1,2) = (2,−1,0) has w₃ = 0, κ = 1.
        let got = phi_delta(&[0.0, 1.0, 2.0], d, true).unwrap();
        assert!((got - 2f64.powf(-1.01)).abs() < 1e-14);
    }

    #[test]
    fn quasi_null_examples() {
        let p = params(0.01, 0.5, 2.0);
        assert!(is_quasi_null(&[1.0, 2.0, 2.0], &p).unwrap()); // Q_0 = 0
        assert!(!is_quasi_null(&[0.0, 1.0, 2.0], &p).unwrap());
        // Deep below the f64 underflow line the log-space test still decides:
        // ‖v‖ = 1e6, threshold η·1e6^{-100} = 1e-600.
        let v = [1.0, 0.0, 1e6];
        assert!(!is_quasi_null(&v, &p).unwrap()); // |Q_0| = 2e6, huge vs threshold
    }

    #[test]
    fn alpha_hat_on_standard_lattice() {
        let p = params(0.01, 0.5, 2.0);
        let z3 = Lattice3::standard();
        let id = geom::IDENTITY;
        let a = alpha_hat(&id, &z3, &p, AlphaHatVariant::EtaM, DEFAULT_MAX_BOX).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        let ap = alpha_hat(&id, &z3, &p, AlphaHatVariant::Prime, DEFAULT_MAX_BOX).unwrap();
        assert!((ap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_hat_rejects_non_stabilizer() {
        let p = params(0.01, 0.5, 2.0);
        let z3 = Lattice3::standard();
        let g = [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(alpha_hat(&g, &z3, &p, AlphaHatVariant::EtaM, DEFAULT_MAX_BOX).is_err());
    }

    #[test]
    fn alpha_tilde_examples() {
        let p = params(0.01, 0.9, 2.0);
        let z3 = Lattice3::standard();
        let id = geom::IDENTITY;
        let a = alpha_tilde(&id, &z3, &p, DEFAULT_MAX_BOX).unwrap();
        assert!((a - 1.0).abs() < 1e-12, "unit vectors all sit on the ball boundary: {a}");

        // a_t Z³ with e^t = 10 contains (0,0,1/10), exactly on the cone.
        let b = [[10.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.1]];
        let lat = Lattice3::from_float(b).unwrap();
        let a = alpha_tilde(&id, &lat, &p, DEFAULT_MAX_BOX).unwrap();
        let expect = 10f64.powf(1.0 - 3.0 * p.delta);
        assert!((a - expect).abs() < 1e-9 * expect, "{a} vs {expect}");
    }

    #[test]
    fn epsilon_threshold_branches() {
        let z3 = Lattice3::standard();
        let id = geom::IDENTITY;
        // α̂ = 1 on Z³: first branch; η = 1, M = 2, s = 1 gives (3e)^{-120}.
        let p = params(0.01, 1.0, 2.0);
        let (log_eps, ah) = log_epsilon_threshold(&id, &z3, &p, 1.0, DEFAULT_MAX_BOX).unwrap();
        assert!((ah - 1.0).abs() < 1e-12);
        let expect = -120.0 * (3.0f64 * std::f64::consts::E).ln();
        assert!((log_eps - expect).abs() < 1e-9, "{log_eps} vs {expect}");
    }

    #[test]
    fn identity_never_exceptional() {
        let p = params(0.01, 0.5, 2.0);
        let id = geom::IDENTITY;
        for s in [1.0, 5.0] {
            let chk = in_exceptional_set(&id, &Lattice3::standard(), &p, s, DEFAULT_MAX_BOX).unwrap();
            assert!(!chk.member);
        }
    }
}
