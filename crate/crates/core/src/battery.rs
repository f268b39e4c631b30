//! The canned experiment battery. Each criterion is a self-contained
//! experiment with pinned parameters and tolerances; the acceptance test
//! suite and the CLI `battery` subcommand both run these.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;

use crate::config::Config;
use crate::count::{
    compute_cq_surface, compute_cq_volume, convergence_study, count_points,
    cube_count_oracle,
};
use crate::dioph::construct_integral_form;
use crate::error::{Error, Result};
use crate::flows::{
    moment, verify_linear_contraction, walk_schedule, LinearWhich, MomentDomain, MomentHeight,
};
use crate::forms::QForm;
use crate::geom;
use crate::heights::{in_exceptional_set, HeightParams};
use crate::lattice::{random_unimodular, Lattice3};
use crate::mat3;
use crate::quad::QuadratureOptions;
use crate::scalar::Scalar;
use crate::siegel::{equidistribution_experiment, SupportedFn};

/// Frozen calibration constant for the five-point constructor bound
/// dist ≤ C·eps·R¹⁰. Calibrated once on the seeded batch (worst observed
/// ratio 2.05e-11) and frozen with a wide margin; every run must stay under.
pub const CONSTRUCTOR_BOUND_C: f64 = 1.0e-8;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

pub fn run_criterion(id: usize, cfg: &Config) -> Result<CriterionResult> {
    let start = Instant::now();
    let (name, outcome) = match id {
        1 => ("contraction battery", criterion_1(cfg)?),
        2 => ("moment divergence floor", criterion_2(cfg)?),
        3 => ("moment boundedness proxy", criterion_3(cfg)?),
        4 => ("counting convergence", criterion_4(cfg)?),
        5 => ("C_Q cross-validation", criterion_5(cfg)?),
        6 => ("duality identity", criterion_6(cfg)?),
        7 => ("five-point constructor", criterion_7(cfg)?),
        8 => ("walk schedules", criterion_8(cfg)?),
        9 => ("exceptional-set sanity", criterion_9(cfg)?),
        10 => ("equidistribution trend", criterion_10(cfg)?),
        _ => return Err(Error::Precondition(format!("no criterion {id}"))),
    };
    Ok(CriterionResult {
        id,
        name: name.to_string(),
        pass: outcome.0,
        detail: outcome.1,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_all(cfg: &Config) -> Result<Vec<CriterionResult>> {
    (1..=10).map(|id| run_criterion(id, cfg)).collect()
}

/// 1000 random vectors × t ∈ {1,2,4,8} × δ ∈ {0.002, 0.01} × four variants:
/// quadrature lhs ≤ bound + certified error in every finite case.
fn criterion_1(cfg: &Config) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let opts = QuadratureOptions { tol: 1e-7, max_nodes: cfg.quad_max_nodes };
    let mut checked = 0usize;
    let mut vacuous = 0usize;
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let w = loop {
            let w = [
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0f64),
            ];
            if geom::norm_sup(&w) > 1e-3 {
                break w;
            }
        };
        let lambda = rng.gen_range(0.5..1.0);
        for &t in &[1.0, 2.0, 4.0, 8.0] {
            for &delta in &[0.002, 0.01] {
                let p = HeightParams::new(delta, cfg.eta, cfg.m_type, cfg.d_const)?;
                for which in [
                    LinearWhich::NormLambda(lambda),
                    LinearWhich::Expansion,
                    LinearWhich::Phi,
                    LinearWhich::PhiStar,
                ] {
                    let rep = verify_linear_contraction(&w, t, &p, which, &opts)?;
                    checked += 1;
                    if rep.vacuous {
                        vacuous += 1;
                    } else if !rep.pass {
                        failures.push(format!(
                            "trial {trial} w={w:?} t={t} delta={delta} {which:?}: \
                             lhs {} > rhs {}",
                            rep.lhs, rep.rhs
                        ));
                    }
                }
            }
        }
    }
    let pass = failures.is_empty();
    let detail = format!(
        "{checked} cases, {vacuous} vacuous, {} failures{}",
        failures.len(),
        failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
    );
    Ok((pass, detail))
}

/// On Z³ the plain α-moment at λ = 1.05 grows at least like e^{0.05t}: the
/// cone vector (0,0,1) forces divergence.
fn criterion_2(cfg: &Config) -> Result<(bool, String)> {
    let p = HeightParams::new(0.01, cfg.eta, cfg.m_type, cfg.d_const)?;
    let z3 = Lattice3::standard();
    // The α-spike at r = 0 needs deep forced refinement at t = 12.
    let opts = QuadratureOptions { tol: 1e-3, max_nodes: 4_000_000 };
    let mut detail = String::new();
    let mut pass = true;
    for &t in &[4.0, 8.0, 12.0] {
        let q = moment(
            &z3,
            t,
            1.05,
            &p,
            MomentHeight::Alpha,
            MomentDomain::Unipotent,
            &opts,
            cfg.hint_radius,
            cfg.enum_max_box,
        )?;
        let floor = (0.05 * t).exp();
        let ok = q.value + q.error_bound >= floor;
        pass &= ok;
        detail.push_str(&format!(
            "t={t}: moment {:.4} vs floor {:.4} ({}); ",
            q.value,
            floor,
            if ok { "ok" } else { "FAIL" }
        ));
    }
    Ok((pass, detail))
}

/// Boundedness proxy: the filtered moment of the stock irrational form
/// varies by less than 2× across the t-grid, while the plain Z³ moment
/// grows by more than e^{0.05·11}/2 from t = 1 to t = 12.
fn criterion_3(cfg: &Config) -> Result<(bool, String)> {
    let p = HeightParams::new(0.01, cfg.eta, cfg.m_type, cfg.d_const)?;
    let q = QForm::q0_plus_sqrt2_v2v3();
    let lat = crate::lattice::lattice_from_form(&q)?;
    let opts = QuadratureOptions { tol: 1e-3, max_nodes: 4_000_000 };
    let grid = [1.0, 2.0, 4.0, 8.0, 12.0];
    let mut filtered = Vec::new();
    for &t in &grid {
        let m = moment(
            &lat,
            t,
            1.01,
            &p,
            MomentHeight::AlphaHatEtaM,
            MomentDomain::Unipotent,
            &opts,
            cfg.hint_radius,
            cfg.enum_max_box,
        )?;
        filtered.push(m.value);
    }
    let fmin = filtered.iter().copied().fold(f64::INFINITY, f64::min);
    let fmax = filtered.iter().copied().fold(0.0, f64::max);
    let flat_ok = fmax / fmin < 2.0;

    let z3 = Lattice3::standard();
    let mut plain = Vec::new();
    for &t in &[1.0, 12.0] {
        let m = moment(
            &z3,
            t,
            1.05,
            &p,
            MomentHeight::Alpha,
            MomentDomain::Unipotent,
            &opts,
            cfg.hint_radius,
            cfg.enum_max_box,
        )?;
        plain.push(m.value);
    }
    let growth = plain[1] / plain[0];
    let growth_floor = (0.05 * 11.0f64).exp() / 2.0;
    let growth_ok = growth > growth_floor;
    let pass = flat_ok && growth_ok;
    let detail = format!(
        "filtered moments {:?} (max/min {:.3}, need < 2); plain growth {:.3} (need > {:.3})",
        filtered.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        fmax / fmin,
        growth,
        growth_floor
    );
    Ok((pass, detail))
}

/// Counting convergence for the stock irrational form on (−1, 1), plus exact
/// agreement with the cube oracle at T = 30.
fn criterion_4(cfg: &Config) -> Result<(bool, String)> {
    let q = QForm::q0_plus_sqrt2_v2v3();
    let a = -1.0;
    let b = 1.0;
    let fast = count_points(&q, a, b, 30.0, cfg)?;
    let slow = cube_count_oracle(&q, a, b, 30.0)?;
    let oracle_ok = fast.raw_count == slow;

    let study = convergence_study(&q, a, b, &[500.0, 1000.0, 2000.0, 4000.0], cfg)?;
    let devs: Vec<f64> = study.rows.iter().map(|r| r.rel_deviation).collect();
    let mut monotone = true;
    for i in 1..devs.len() {
        if devs[i] > devs[i - 1] * (1.0 + 1e-9) {
            monotone = false;
        }
    }
    let final_ok = *devs.last().unwrap() < 0.10;
    let pass = oracle_ok && monotone && final_ok;
    let detail = format!(
        "oracle {} (fast {} vs cube {}); deviations {:?}; final < 10%: {}",
        if oracle_ok { "ok" } else { "FAIL" },
        fast.raw_count,
        slow,
        devs.iter().map(|d| (d * 1e4).round() / 1e4).collect::<Vec<_>>(),
        final_ok
    );
    Ok((pass, detail))
}

/// Surface vs volume-slope C_Q on five test forms, within 1%.
fn criterion_5(cfg: &Config) -> Result<(bool, String)> {
    let mut cfg5 = cfg.clone();
    cfg5.mc_samples = 1_500_000_000;
    let shear = {
        let i = Scalar::from_int(1);
        let z = Scalar::zero();
        [
            [i.clone(), i.clone(), z.clone()],
            [z.clone(), i.clone(), i.clone()],
            [z.clone(), z.clone(), i.clone()],
        ]
    };
    let forms = vec![
        QForm::q0(),
        QForm::q0_plus_sqrt2_v2v3(),
        QForm::diagonal(1, 1, -1),
        q0_plus_irrational_v1v2(),
        QForm::q0().transform(&shear)?,
    ];
    let mut pass = true;
    let mut detail = String::new();
    for q in &forms {
        let (s, serr) = compute_cq_surface(q, &cfg5)?;
        let (v, verr) = compute_cq_volume(q, &cfg5)?;
        let rel = (s - v).abs() / s.abs().max(v.abs());
        let ok = rel < 0.01;
        pass &= ok;
        detail.push_str(&format!(
            "surface {s:.4}±{serr:.1e} vs volume {v:.4}±{verr:.1e} ({:.3}%); ",
            rel * 100.0
        ));
    }
    Ok((pass, detail))
}

fn q0_plus_irrational_v1v2() -> QForm {
    // Q_0 + √3·v1v2: the v1v2 coefficient does not move det(A) off −1.
    let mut c = QForm::q0().c;
    c[3] = Scalar::quad(0, 1, 1, 1, 3).unwrap();
    QForm::new(c).unwrap()
}

/// Gram-determinant duality: Q(v)Q(w) − Q(v,w)² = det(A)·Q*(v×w), exactly in
/// exact arithmetic and to 1e−9 relative in floats. (The sign factor det(A)
/// is −1 for every signature (2,1) form under the |det| = 1 normalization.)
fn criterion_6(cfg: &Config) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(6));
    let forms = [QForm::q0(), QForm::diagonal(1, 1, -1), QForm::q0_plus_sqrt2_v2v3()];
    let mut exact_fail = 0usize;
    let mut float_fail = 0usize;
    let trials = 10_000usize;
    for i in 0..trials {
        let q = &forms[i % forms.len()];
        let det = q.det()?;
        let dual = q.dual()?;
        let rand_vec = |rng: &mut ChaCha8Rng| {
            [rng.gen_range(-20i64..=20), rng.gen_range(-20..=20), rng.gen_range(-20..=20)]
        };
        let v = rand_vec(&mut rng);
        let w = rand_vec(&mut rng);
        let ve = mat3::vec_from_int(&v);
        let we = mat3::vec_from_int(&w);
        let lhs = q.gram_det(&ve, &we)?;
        let cr = mat3::vec_cross(&ve, &we)?;
        let rhs = det.mul(&dual.evaluate(&cr)?)?;
        if lhs.sub(&rhs)?.signum() != 0 {
            exact_fail += 1;
        }
        // Float mode.
        let qf = q.to_f64();
        let vf = [v[0] as f64, v[1] as f64, v[2] as f64];
        let wf = [w[0] as f64, w[1] as f64, w[2] as f64];
        let qv = crate::forms::eval_f64(&qf, &vf);
        let qw = crate::forms::eval_f64(&qf, &wf);
        let sum = [vf[0] + wf[0], vf[1] + wf[1], vf[2] + wf[2]];
        let qvw = 0.5 * (crate::forms::eval_f64(&qf, &sum) - qv - qw);
        let lhs_f = qv * qw - qvw * qvw;
        let rhs_f =
            det.to_f64() * crate::forms::eval_f64(&dual.to_f64(), &geom::cross(&vf, &wf));
        if (lhs_f - rhs_f).abs() > 1e-9 * lhs_f.abs().max(rhs_f.abs()).max(1.0) {
            float_fail += 1;
        }
    }
    let pass = exact_fail == 0 && float_fail == 0;
    Ok((
        pass,
        format!("{trials} triples: {exact_fail} exact failures, {float_fail} float failures"),
    ))
}

/// The exact quintuple reconstructs the standard form with dist = 0; 100
/// perturbed runs stay under the frozen bound C·eps·R¹⁰.
fn criterion_7(cfg: &Config) -> Result<(bool, String)> {
    let q0 = QForm::q0();
    let quintuple = [[1i64, 0, 0], [0, 0, 1], [1, 2, 2], [2, 2, 1], [1, -2, 2]];
    let exact = construct_integral_form(&q0, &quintuple, 3.0, 0.0)?;
    let exact_ok = exact.dist == 0.0 && exact.q_prime.proportional_ratio(&q0).is_some();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(7));
    let mut worst_ratio = 0f64;
    let mut runs = 0usize;
    let mut all_bounded = true;
    while runs < 100 {
        let Some((points, radius)) = random_cone_quintuple(&mut rng) else {
            continue;
        };
        // Perturb the form by small rationals; eps follows from evaluating
        // the perturbed form on the quintuple, keeping eps ≤ 1e−6.
        let scale = 1_000_000_000i64;
        let amp = rng.gen_range(1..=1000);
        let mut coeffs = q0.c.clone();
        for c in coeffs.iter_mut() {
            let jitter = Scalar::from_ratio(rng.gen_range(-amp..=amp), scale);
            *c = c.add(&jitter)?;
        }
        let qp = QForm::new(coeffs)?;
        let eps = points
            .iter()
            .map(|m| qp.evaluate_int(m).to_f64().abs())
            .fold(0f64, f64::max)
            * (1.0 + 1e-12);
        if eps == 0.0 || eps > 1e-6 {
            continue;
        }
        let out = construct_integral_form(&qp, &points, radius, eps)?;
        let bound = CONSTRUCTOR_BOUND_C * eps * radius.powi(10);
        worst_ratio = worst_ratio.max(out.dist / (eps * radius.powi(10)));
        if out.dist > bound {
            all_bounded = false;
        }
        runs += 1;
    }
    let pass = exact_ok && all_bounded;
    Ok((
        pass,
        format!(
            "exact quintuple dist {}, proportional {}; {} perturbed runs, worst dist/(eps·R^10) \
             = {:.3e} vs frozen C = {:.3e}",
            exact.dist,
            exact_ok,
            runs,
            worst_ratio,
            CONSTRUCTOR_BOUND_C
        ),
    ))
}

/// Integer points on the standard cone via (2u², 2uw, w²), gcd-reduced, with
/// random signs; retries until the no-three-coplanar condition holds.
fn random_cone_quintuple(rng: &mut ChaCha8Rng) -> Option<([[i64; 3]; 5], f64)> {
    let mut points = [[0i64; 3]; 5];
    let mut radius = 10.0f64;
    for slot in &mut points {
        let u = rng.gen_range(1..=5i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let w = rng.gen_range(1..=5i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let mut m = [2 * u * u, 2 * u * w, w * w];
        use num_integer::Integer;
        let g = (m[0].unsigned_abs().gcd(&m[1].unsigned_abs()).gcd(&m[2].unsigned_abs()) as i64)
            .max(1);
        for x in &mut m {
            *x /= g;
        }
        *slot = m;
        radius = radius.max(m.iter().map(|x| x.abs()).max().unwrap() as f64 + 1.0);
    }
    // Reject coplanar triples (the constructor would error out anyway).
    for i in 0..5 {
        for j in (i + 1)..5 {
            for k in (j + 1)..5 {
                let det = det3(&points[i], &points[j], &points[k]);
                if det == 0 {
                    return None;
                }
            }
        }
    }
    if radius > 50.0 {
        return None;
    }
    Some((points, radius))
}

fn det3(a: &[i64; 3], b: &[i64; 3], c: &[i64; 3]) -> i128 {
    let (a, b, c) = (
        [a[0] as i128, a[1] as i128, a[2] as i128],
        [b[0] as i128, b[1] as i128, b[2] as i128],
        [c[0] as i128, c[1] as i128, c[2] as i128],
    );
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// 1000 random admissible (B, δ, T, t): all four schedule invariants hold.
fn criterion_8(cfg: &Config) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(8));
    let mut failures = 0usize;
    let mut max_len = 0usize;
    for _ in 0..1000 {
        let b = rng.gen_range(1.5..8.0);
        let delta_cap = 1.0 / (1.0 + b);
        let delta = (rng.gen_range(0.05..0.95f64) * delta_cap).max(2e-3);
        let t_tail = rng.gen_range(0.5..5.0);
        let factor = rng.gen_range(1.0..20.0);
        let t_total = t_tail / delta * factor;
        let ws = walk_schedule(b, delta, t_tail, t_total)?;
        max_len = max_len.max(ws.s.len());
        if !ws.validate() {
            failures += 1;
        }
    }
    // Boundary case t = T/δ exactly.
    let ws = walk_schedule(3.0, 0.05, 1.0, 20.0)?;
    let boundary_ok = ws.validate();
    let pass = failures == 0 && boundary_ok;
    Ok((
        pass,
        format!("1000 schedules, {failures} invariant failures, longest {max_len} terms; boundary ok: {boundary_ok}"),
    ))
}

/// The identity pair is never exceptional; a planted compression is, with
/// the planted witness.
fn criterion_9(cfg: &Config) -> Result<(bool, String)> {
    let p = HeightParams::new(cfg.delta, cfg.eta, cfg.m_type, cfg.d_const)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(9));
    let mut id_violations = 0usize;
    for _ in 0..100 {
        let lat = random_unimodular(&mut rng);
        for s in [1.0, 3.0, 5.0] {
            let chk = in_exceptional_set(&geom::IDENTITY, &lat, &p, s, cfg.enum_max_box)?;
            if chk.member {
                id_violations += 1;
            }
        }
    }

    let (planted_lat, g) = planted_exceptional_instance()?;
    let pp = HeightParams::new(0.01, 1.0, 2.0, 1024.0)?;
    let chk = in_exceptional_set(&g, &planted_lat, &pp, 1.0, cfg.enum_max_box)?;
    // Any shell multiple of the planted vector is a valid witness: κ is
    // scale-invariant, so the whole line crosses the thin shell.
    let witness_ok = match &chk.witness {
        Some(w) => w.side == 1 && w.m[0] != 0 && w.m[1] == 0 && w.m[2] == 0,
        None => false,
    };
    let pass = id_violations == 0 && chk.member && witness_ok;
    Ok((
        pass,
        format!(
            "identity violations {id_violations}/300; planted member {} with witness {:?}",
            chk.member,
            chk.witness.as_ref().map(|w| (w.side, w.m))
        ),
    ))
}

/// Lattice with first basis vector v = ((1−q)/256, 1, 128) for q = 2⁻⁵⁰⁰,
/// compressed by g = diag(2⁷, 1, 2⁻⁷): the image w = ((1−q)/2, 1, 1) sits on
/// the unit shell with κ(w) = q below the ε threshold, while v itself is not
/// quasi-null (|Q_0(v)| = q ≥ ‖v‖⁻¹⁰⁰ = 2⁻⁷⁰⁰).
pub fn planted_exceptional_instance() -> Result<(Lattice3, geom::M3)> {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    let q = BigRational::new(BigInt::from(1), BigInt::from(1) << 500);
    let one = BigRational::from_integer(BigInt::from(1));
    let v1 = Scalar::rational((&one - &q) / BigRational::from_integer(BigInt::from(256)));
    let basis = [
        [v1, Scalar::from_int(1), Scalar::zero()],
        [Scalar::from_int(1), Scalar::zero(), Scalar::zero()],
        [Scalar::from_int(128), Scalar::zero(), Scalar::from_int(-1)],
    ];
    let lat = Lattice3::from_exact(basis)?;
    let g: geom::M3 = [[128.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0 / 128.0]];
    Ok((lat, g))
}

/// Wedge-region equidistribution trend for the stock irrational form.
fn criterion_10(cfg: &Config) -> Result<(bool, String)> {
    let p = HeightParams::new(cfg.delta, cfg.eta, cfg.m_type, cfg.d_const)?;
    let q = QForm::q0_plus_sqrt2_v2v3();
    let f = SupportedFn::wedge_region(-1.0, 1.0)?;
    let rep = equidistribution_experiment(
        &f,
        &q,
        &[4.0, 6.0, 8.0, 10.0],
        &|_| 1.0,
        cfg.k_nodes.max(2048),
        20_000_000,
        cfg.seed.wrapping_add(10),
        &p,
        cfg.cross_radius,
        cfg.enum_max_box,
    )?;
    let devs: Vec<f64> = rep.rows.iter().map(|r| r.abs_deviation).collect();
    let mut pass = true;
    for i in 1..devs.len() {
        if devs[i] > devs[i - 1] * (1.0 + 1e-9) {
            pass = false;
        }
    }
    Ok((
        pass,
        format!(
            "limit {:.5}; K-averages {:?}; |deviation| {:?}",
            rep.limit,
            rep.rows.iter().map(|r| (r.k_average * 1e4).round() / 1e4).collect::<Vec<_>>(),
            devs.iter().map(|d| (d * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    ))
}
