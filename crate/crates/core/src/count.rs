//! Lattice-point counting: N_Q(a,b,T) by slice enumeration, the censuses of
//! rational isotropic lines and degenerate planes, the secondary constant
//! I_Q, and the volume constant C_Q by two independent routes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::cmp::Ordering;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::forms::{eval_f64, ClearedForm, QForm};
use crate::geom::{self};
use crate::lattice::{is_primitive, lattice_from_form, plane_lattice_basis};
use crate::mat3::vec_from_int;
use crate::quad::{orbit_integral, QuadratureOptions};

/// Exact strict-comparison of L·Q(m) = P + I·√d against L·bound.
struct ExactThreshold {
    l_num: Option<i128>,
    den: Option<i128>,
    big_l_num: BigInt,
    big_den: BigInt,
    d: u64,
}

impl ExactThreshold {
    fn new(bound: f64, scale: &BigInt, d: u64) -> Result<Self> {
        let r = BigRational::from_float(bound)
            .ok_or_else(|| Error::Precondition(format!("bound {bound} is not finite")))?;
        let big_l_num = r.numer() * scale;
        let big_den = r.denom().clone();
        Ok(ExactThreshold {
            l_num: big_l_num.to_i128(),
            den: big_den.to_i128(),
            big_l_num,
            big_den,
            d,
        })
    }

    /// Ordering of (P + I√d) versus the scaled bound.
    fn cmp(&self, p: i128, i_part: i128) -> Ordering {
        if let (Some(ln), Some(den)) = (self.l_num, self.den) {
            if let Some(ord) = cmp_i128(p, i_part, ln, den, self.d) {
                return ord;
            }
        }
        // Arbitrary-precision fallback.
        let u = BigInt::from(p) * &self.big_den - &self.big_l_num;
        let w = BigInt::from(i_part) * &self.big_den;
        sign_plus_root_big(&u, &w, self.d)
    }
}

fn cmp_i128(p: i128, i_part: i128, l_num: i128, den: i128, d: u64) -> Option<Ordering> {
    let u = p.checked_mul(den)?.checked_sub(l_num)?;
    let w = i_part.checked_mul(den)?;
    if w == 0 {
        return Some(u.cmp(&0));
    }
    if u == 0 {
        return Some(w.cmp(&0));
    }
    if u > 0 && w > 0 {
        return Some(Ordering::Greater);
    }
    if u < 0 && w < 0 {
        return Some(Ordering::Less);
    }
    let u2 = u.checked_mul(u)?;
    let w2 = w.checked_mul(w)?.checked_mul(d as i128)?;
    // u and w√d have opposite signs: the larger square wins the sign fight.
    Some(if u2 > w2 { u.cmp(&0) } else { w.cmp(&0) })
}

fn sign_plus_root_big(u: &BigInt, w: &BigInt, d: u64) -> Ordering {
    if w.is_zero() {
        return u.cmp(&BigInt::zero());
    }
    if u.is_zero() {
        return w.cmp(&BigInt::zero());
    }
    if u.is_positive() == w.is_positive() {
        return u.cmp(&BigInt::zero());
    }
    let u2 = u * u;
    let w2 = w * w * BigInt::from(d);
    if u2 > w2 {
        u.cmp(&BigInt::zero())
    } else {
        w.cmp(&BigInt::zero())
    }
}

/// Strict membership a < Q(m) < b, exact.
struct RangeTest {
    cleared: ClearedForm,
    lo: ExactThreshold,
    hi: ExactThreshold,
    form: QForm,
    a: f64,
    b: f64,
}

impl RangeTest {
    fn new(q: &QForm, a: f64, b: f64) -> Result<Self> {
        let cleared = q
            .cleared_i128()
            .ok_or_else(|| Error::Resource("form coefficients overflow the fast path".into()))?;
        Ok(RangeTest {
            lo: ExactThreshold::new(a, &cleared.scale, q.d)?,
            hi: ExactThreshold::new(b, &cleared.scale, q.d)?,
            cleared,
            form: q.clone(),
            a,
            b,
        })
    }

    fn contains(&self, m: &[i64; 3]) -> bool {
        match self.cleared.eval(m) {
            Some((p, i)) => {
                self.lo.cmp(p, i) == Ordering::Greater && self.hi.cmp(p, i) == Ordering::Less
            }
            None => {
                // i128 overflow: evaluate in full precision.
                let v = self.form.evaluate_int(m).to_f64();
                v > self.a && v < self.b
            }
        }
    }
}

/// Census of primitive integral isotropic directions, one per ± pair.
#[derive(Clone, Debug)]
pub struct LineCensus {
    pub reps: Vec<[i64; 3]>,
    pub search_radius: i64,
    /// Set for rational forms, whose census grows without bound.
    pub truncated: bool,
}

/// All primitive m with Q(m) = 0 exactly and ‖m‖ ≤ search_radius, ± deduped.
/// Irrational forms admit at most four line classes; more aborts with a
/// rationality diagnostic.
pub fn isotropic_lines(q: &QForm, search_radius: i64) -> Result<LineCensus> {
    if search_radius < 1 {
        return Err(Error::Precondition("census radius must be positive".into()));
    }
    let cleared = q
        .cleared_i128()
        .ok_or_else(|| Error::Resource("form coefficients overflow the census path".into()))?;
    let rational = q.is_rational();
    let r = search_radius;
    let reps: Vec<[i64; 3]> = (0..=r)
        .into_par_iter()
        .flat_map_iter(|x| {
            let cleared = cleared.clone();
            let mut local = Vec::new();
            let y_range = if x == 0 { 0..=r } else { -r..=r };
            for y in y_range {
                let z_range = if x == 0 && y == 0 { 1..=r } else { -r..=r };
                for z in z_range {
                    let m = [x, y, z];
                    if !canonical(&m) || !is_primitive(&m) {
                        continue;
                    }
                    let iso = match cleared.is_isotropic(&m) {
                        Some(t) => t,
                        None => q.evaluate_int(&m).is_zero(),
                    };
                    if iso {
                        local.push(m);
                    }
                }
            }
            local.into_iter()
        })
        .collect();
    let mut reps = reps;
    reps.sort();
    if !rational && reps.len() > 4 {
        return Err(Error::Domain(format!(
            "{} isotropic line classes found; at most four are possible for an \
             irrational form — rationality suspected",
            reps.len()
        )));
    }
    Ok(LineCensus { reps, search_radius, truncated: rational })
}

fn canonical(m: &[i64; 3]) -> bool {
    for &x in m {
        if x > 0 {
            return true;
        }
        if x < 0 {
            return false;
        }
    }
    false
}

/// A degenerate plane: primitive integral normal plus an integral basis of
/// the plane lattice, normalized so that Q(n₁) > 0, Q(n₂) > 0, and
/// Q(n₁, n₂) ≥ 0.
#[derive(Clone, Debug)]
pub struct PlaneData {
    pub normal: [i64; 3],
    pub basis: ([i64; 3], [i64; 3]),
}

#[derive(Clone, Debug)]
pub struct PlaneCensus {
    pub planes: Vec<PlaneData>,
    pub search_radius: i64,
    pub truncated: bool,
}

/// Degenerate rational planes = isotropic lines of the dual form.
pub fn degenerate_planes(q: &QForm, search_radius: i64) -> Result<PlaneCensus> {
    let dual = q.dual()?;
    let lines = isotropic_lines(&dual, search_radius)?;
    let mut planes = Vec::new();
    for normal in &lines.reps {
        planes.push(plane_data(q, normal)?);
    }
    Ok(PlaneCensus { planes, search_radius, truncated: lines.truncated })
}

fn plane_data(q: &QForm, normal: &[i64; 3]) -> Result<PlaneData> {
    let (mut n1, mut n2) = plane_lattice_basis(normal);
    // The restriction of Q to the plane is ℓ² for a linear form ℓ; a basis
    // vector on the kernel line of ℓ has Q = 0 and must be moved off it.
    let qv = |m: &[i64; 3]| q.evaluate_int(m);
    if qv(&n1).is_zero() {
        n1 = [n1[0] + n2[0], n1[1] + n2[1], n1[2] + n2[2]];
    }
    if qv(&n2).is_zero() {
        n2 = [n1[0] + n2[0], n1[1] + n2[1], n1[2] + n2[2]];
    }
    let q1 = qv(&n1);
    let q2 = qv(&n2);
    if q1.signum() <= 0 || q2.signum() <= 0 {
        return Err(Error::Signature(
            "degenerate-plane basis has a nonpositive value; signature is not (2,1)".into(),
        ));
    }
    // Orient n₂ so the polarization is nonnegative: then Q(k₁n₁ + k₂n₂)
    // = (√Q(n₁)k₁ + √Q(n₂)k₂)² with the plus sign.
    let pol = q.polarize(&vec_from_int(&n1), &vec_from_int(&n2))?;
    if pol.signum() < 0 {
        n2 = [-n2[0], -n2[1], -n2[2]];
    }
    // Exact rank-one identity on the plane.
    let pol = q.polarize(&vec_from_int(&n1), &vec_from_int(&n2))?;
    let gram = q1.mul(&q2)?.sub(&pol.mul(&pol)?)?;
    if !gram.is_zero() {
        return Err(Error::Domain("plane basis fails the rank-one identity".into()));
    }
    Ok(PlaneData { normal: *normal, basis: (n1, n2) })
}

#[derive(Clone, Debug, Default)]
pub struct CountReport {
    pub t_radius: f64,
    pub a: f64,
    pub b: f64,
    /// N_Q: integral points v ≠ 0 with ‖v‖ ≤ T and a < Q(v) < b.
    pub raw_count: u64,
    /// Points not on any rational isotropic line or degenerate plane.
    pub modified_count: u64,
    pub excluded_line_points: u64,
    pub excluded_plane_points: u64,
    pub per_line: Vec<([i64; 3], u64)>,
    pub per_plane: Vec<([i64; 3], u64)>,
    /// Censuses may be incomplete for rational forms.
    pub census_truncated: bool,
}

/// Exact count by slice enumeration: for each (v₁, v₂) the condition
/// a < Q(v) < b is a quadratic (or linear) condition on v₃ whose solution
/// intervals are intersected with [−T, T]; boundary-adjacent integers are
/// settled in exact arithmetic.
pub fn count_points(q: &QForm, a: f64, b: f64, t_radius: f64, cfg: &Config) -> Result<CountReport> {
    if !(a < b) {
        return Err(Error::Precondition(format!("empty value window ({a}, {b})")));
    }
    if !(t_radius > 0.0) {
        return Err(Error::Precondition("T must be positive".into()));
    }
    let t_int = t_radius.floor() as i64;
    if t_int > 200_000 {
        return Err(Error::Resource(format!("T = {t_radius} beyond the slice budget")));
    }
    let lines = isotropic_lines(q, cfg.census_radius)?;
    // Degenerate planes only make sense for signature (2,1); counting other
    // signatures proceeds with the line census alone.
    let planes = if q.signature()? == (2, 1) {
        degenerate_planes(q, cfg.census_radius)?
    } else {
        PlaneCensus { planes: Vec::new(), search_radius: cfg.census_radius, truncated: false }
    };
    let range = RangeTest::new(q, a, b)?;
    let qf = q.to_f64();
    let c33_zero = q.c[2].is_zero();

    let per_slice: Vec<SliceCount> = (-t_int..=t_int)
        .into_par_iter()
        .map(|x| {
            let mut acc = SliceCount::new(lines.reps.len(), planes.planes.len());
            for y in -t_int..=t_int {
                count_slice(&qf, c33_zero, &range, x, y, t_int, a, b, &lines, &planes, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = SliceCount::new(lines.reps.len(), planes.planes.len());
    for s in &per_slice {
        total.merge(s);
    }
    let per_line = lines.reps.iter().copied().zip(total.per_line.iter().copied()).collect();
    let per_plane = planes
        .planes
        .iter()
        .map(|p| p.normal)
        .zip(total.per_plane.iter().copied())
        .collect();
    Ok(CountReport {
        t_radius,
        a,
        b,
        raw_count: total.raw,
        modified_count: total.raw - total.line - total.plane,
        excluded_line_points: total.line,
        excluded_plane_points: total.plane,
        per_line,
        per_plane,
        census_truncated: lines.truncated || planes.truncated,
    })
}

struct SliceCount {
    raw: u64,
    line: u64,
    plane: u64,
    per_line: Vec<u64>,
    per_plane: Vec<u64>,
}

impl SliceCount {
    fn new(n_lines: usize, n_planes: usize) -> Self {
        SliceCount {
            raw: 0,
            line: 0,
            plane: 0,
            per_line: vec![0; n_lines],
            per_plane: vec![0; n_planes],
        }
    }

    fn merge(&mut self, other: &SliceCount) {
        self.raw += other.raw;
        self.line += other.line;
        self.plane += other.plane;
        for (a, b) in self.per_line.iter_mut().zip(&other.per_line) {
            *a += b;
        }
        for (a, b) in self.per_plane.iter_mut().zip(&other.per_plane) {
            *a += b;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn count_slice(
    qf: &[f64; 6],
    c33_zero: bool,
    range: &RangeTest,
    x: i64,
    y: i64,
    t_int: i64,
    a: f64,
    b: f64,
    lines: &LineCensus,
    planes: &PlaneCensus,
    acc: &mut SliceCount,
) {
    let xf = x as f64;
    let yf = y as f64;
    let alpha = qf[2];
    let beta = qf[4] * xf + qf[5] * yf;
    let gamma = qf[0] * xf * xf + qf[1] * yf * yf + qf[3] * xf * yf;

    // Solution set of a < αz² + βz + γ < b as up to two z-intervals.
    let mut intervals: IntervalSet = IntervalSet::empty();
    if !c33_zero && alpha != 0.0 {
        // Upward parabola: {Q < b} \ {Q < a}; downward: {Q > a} \ {Q > b}.
        // Both are between-roots sets, so the difference has ≤ 2 pieces.
        let (base_c, cut_c) = if alpha > 0.0 { (b, a) } else { (a, b) };
        let base = between_roots(alpha, beta, gamma, base_c);
        let cut = between_roots(alpha, beta, gamma, cut_c);
        intervals = base.subtract(&cut);
    } else {
        // Linear (or constant) in z.
        if beta != 0.0 {
            let lo = (a - gamma) / beta;
            let hi = (b - gamma) / beta;
            intervals.push(lo.min(hi), lo.max(hi));
        } else if gamma > a && gamma < b {
            intervals.push(f64::NEG_INFINITY, f64::INFINITY);
        }
    }

    visit_intervals(&intervals, t_int, |z, trusted| {
        if x == 0 && y == 0 && z == 0 {
            return;
        }
        let m = [x, y, z];
        if trusted || range.contains(&m) {
            classify(&m, lines, planes, acc);
        }
    });
}

/// Walks the integers of each interval plus a ±2 fuzz window, exactness
/// delegated to the callback when `trusted` is false. Intervals come sorted
/// and disjoint; the monotone cursor prevents revisiting integers when fuzz
/// windows of adjacent pieces overlap.
fn visit_intervals(set: &IntervalSet, t_int: i64, mut cb: impl FnMut(i64, bool)) {
    let tf = t_int as f64;
    let clamp = |v: f64| -> i64 { v.max(-tf - 8.0).min(tf + 8.0) as i64 };
    let mut cursor = i64::MIN;
    for k in 0..set.len {
        let (lo, hi) = set.items[k];
        if hi <= lo {
            continue;
        }
        let z_lo = clamp(lo.ceil());
        let z_hi = clamp(hi.floor());
        let start = (z_lo - 2).max(-t_int).max(cursor);
        let end = (z_hi + 2).min(t_int);
        let mut z = start;
        while z <= end {
            let trusted = z >= z_lo + 2 && z <= z_hi - 2;
            cb(z, trusted);
            z += 1;
        }
        cursor = cursor.max(end + 1);
    }
}

#[derive(Clone, Copy)]
struct IntervalSet {
    items: [(f64, f64); 2],
    len: usize,
}

impl IntervalSet {
    fn empty() -> Self {
        IntervalSet { items: [(0.0, 0.0); 2], len: 0 }
    }

    fn push(&mut self, lo: f64, hi: f64) {
        if self.len < 2 && hi > lo {
            self.items[self.len] = (lo, hi);
            self.len += 1;
        }
    }

    /// Difference of two single intervals, ≤ 2 ordered disjoint pieces.
    fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = IntervalSet::empty();
        for i in 0..self.len {
            let (lo, hi) = self.items[i];
            if other.len == 0 {
                out.push(lo, hi);
                continue;
            }
            let (olo, ohi) = other.items[0];
            if ohi <= lo || olo >= hi {
                out.push(lo, hi);
            } else {
                if olo > lo {
                    out.push(lo, olo);
                }
                if ohi < hi {
                    out.push(ohi, hi);
                }
            }
        }
        out
    }
}

/// The between-roots interval of αz² + βz + γ = c (where the parabola lies
/// below c when α > 0, above when α < 0); empty when there are no roots.
fn between_roots(alpha: f64, beta: f64, gamma: f64, c: f64) -> IntervalSet {
    let mut out = IntervalSet::empty();
    let disc = beta * beta - 4.0 * alpha * (gamma - c);
    if disc > 0.0 {
        let sq = disc.sqrt();
        let r1 = (-beta - sq) / (2.0 * alpha);
        let r2 = (-beta + sq) / (2.0 * alpha);
        out.push(r1.min(r2), r1.max(r2));
    }
    out
}

fn classify(m: &[i64; 3], lines: &LineCensus, planes: &PlaneCensus, acc: &mut SliceCount) {
    acc.raw += 1;
    let g = {
        use num_integer::Integer;
        (m[0].unsigned_abs().gcd(&m[1].unsigned_abs()).gcd(&m[2].unsigned_abs()) as i64).max(1)
    };
    let prim = canonical_rep(&[m[0] / g, m[1] / g, m[2] / g]);
    for (idx, rep) in lines.reps.iter().enumerate() {
        if *rep == prim {
            acc.line += 1;
            acc.per_line[idx] += 1;
            return;
        }
    }
    for (idx, p) in planes.planes.iter().enumerate() {
        let n = p.normal;
        if m[0] * n[0] + m[1] * n[1] + m[2] * n[2] == 0 {
            acc.plane += 1;
            acc.per_plane[idx] += 1;
            return;
        }
    }
}

fn canonical_rep(m: &[i64; 3]) -> [i64; 3] {
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

/// Brute-force O(T³) oracle for the raw count; exact arithmetic per point.
pub fn cube_count_oracle(q: &QForm, a: f64, b: f64, t_radius: f64) -> Result<u64> {
    let t_int = t_radius.floor() as i64;
    if t_int > 120 {
        return Err(Error::Resource("cube oracle is O(T³); T too large".into()));
    }
    let range = RangeTest::new(q, a, b)?;
    let mut count = 0u64;
    for x in -t_int..=t_int {
        for y in -t_int..=t_int {
            for z in -t_int..=t_int {
                if x == 0 && y == 0 && z == 0 {
                    continue;
                }
                if range.contains(&[x, y, z]) {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

#[derive(Clone, Debug)]
pub struct PlaneContribution {
    pub normal: [i64; 3],
    pub density: f64,
    /// True when the slope came from direct 2D counting (rational ratio).
    pub empirical: bool,
}

#[derive(Clone, Debug)]
pub struct IqBreakdown {
    pub line_sum: f64,
    pub line_term: f64,
    pub planes: Vec<PlaneContribution>,
}

/// I_Q(a, b) = L_Q·1_{(a,b)}(0) + Σ per-plane linear densities. Plane bases
/// with irrational √Q(n₂)/√Q(n₁) use the closed-form density; rational
/// ratios fall back to a direct 2D count at T_probe.
pub fn compute_iq(
    q: &QForm,
    a: f64,
    b: f64,
    t_probe: f64,
    cfg: &Config,
) -> Result<(f64, IqBreakdown)> {
    if !(a < b) {
        return Err(Error::Precondition("empty value window".into()));
    }
    let lines = isotropic_lines(q, cfg.census_radius)?;
    if lines.truncated {
        return Err(Error::Precondition(
            "rational form: the isotropic census is unbounded, I_Q undefined".into(),
        ));
    }
    let planes = degenerate_planes(q, cfg.census_radius)?;
    let line_sum: f64 = lines
        .reps
        .iter()
        .map(|m| 2.0 / (m.iter().map(|x| x.abs()).max().unwrap() as f64))
        .sum();
    let line_term = if a < 0.0 && b > 0.0 { line_sum } else { 0.0 };
    let mut contribs = Vec::new();
    for p in &planes.planes {
        let (n1, n2) = p.basis;
        let q1 = q.evaluate_int(&n1);
        let q2 = q.evaluate_int(&n2);
        let pol = q.polarize(&vec_from_int(&n1), &vec_from_int(&n2))?;
        // √Q(n₂)/√Q(n₁) = Q(n₁,n₂)/Q(n₁); rational iff that scalar is.
        let ratio = pol.div(&q1)?;
        if ratio.is_rational() {
            let count = plane_count_2d(q, &n1, &n2, a, b, t_probe)?;
            contribs.push(PlaneContribution {
                normal: p.normal,
                density: count as f64 / t_probe,
                empirical: true,
            });
        } else {
            let s1 = q1.to_f64().sqrt();
            let s2 = q2.to_f64().sqrt();
            let dir = [
                s1 * n2[0] as f64 - s2 * n1[0] as f64,
                s1 * n2[1] as f64 - s2 * n1[1] as f64,
                s1 * n2[2] as f64 - s2 * n1[2] as f64,
            ];
            let bp = b.max(0.0).sqrt();
            let ap = a.max(0.0).sqrt();
            // Full-count density over both ±ℓ strips: the strip area is
            // 4(√b⁺−√a⁺)T/‖w₀‖, matching the direct 2D count (and the same
            // ±-inclusive convention as the line term).
            contribs.push(PlaneContribution {
                normal: p.normal,
                density: 4.0 * (bp - ap) / geom::norm_sup(&dir),
                empirical: false,
            });
        }
    }
    let iq = line_term + contribs.iter().map(|c| c.density).sum::<f64>();
    Ok((iq, IqBreakdown { line_sum, line_term, planes: contribs }))
}

/// Count of nonzero plane-lattice points k₁n₁ + k₂n₂ with sup norm < T and
/// Q strictly inside (max(a,0), b); the kernel line Q = 0 stays excluded.
pub fn plane_count_2d(
    q: &QForm,
    n1: &[i64; 3],
    n2: &[i64; 3],
    a: f64,
    b: f64,
    t_probe: f64,
) -> Result<u64> {
    let lo_bound = a.max(0.0);
    if !(b > lo_bound) {
        return Ok(0);
    }
    let range = RangeTest::new(q, lo_bound, b)?;
    let qf = q.to_f64();
    let n1f = [n1[0] as f64, n1[1] as f64, n1[2] as f64];
    let n2f = [n2[0] as f64, n2[1] as f64, n2[2] as f64];
    // Binary form A k₁² + B k₁k₂ + C k₂² with A = Q(n₁) > 0.
    let av = eval_f64(&qf, &n1f);
    let cv = eval_f64(&qf, &n2f);
    let bv = {
        let s = [n1f[0] + n2f[0], n1f[1] + n2f[1], n1f[2] + n2f[2]];
        eval_f64(&qf, &s) - av - cv
    };
    // k₂ bound from the sup-norm condition via a 2×2 subsystem.
    let mut k2_bound = 0i64;
    for i in 0..3 {
        for j in 0..3 {
            let det = n1f[i] * n2f[j] - n1f[j] * n2f[i];
            if det.abs() > 1e-9 {
                let bnd = ((n1f[i].abs() + n1f[j].abs()) * t_probe / det.abs()).ceil() as i64 + 2;
                k2_bound = if k2_bound == 0 { bnd } else { k2_bound.min(bnd) };
            }
        }
    }
    if k2_bound == 0 {
        return Err(Error::Precondition("plane basis is degenerate".into()));
    }
    let count: u64 = (-k2_bound..=k2_bound)
        .into_par_iter()
        .map(|k2| {
            let mut local = 0u64;
            // k₁ window from the three |coordinate| < T conditions.
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for i in 0..3 {
                let c0 = n2f[i] * k2 as f64;
                if n1f[i].abs() < 1e-12 {
                    if c0.abs() >= t_probe {
                        return 0;
                    }
                    continue;
                }
                let l = (-t_probe - c0) / n1f[i];
                let h = (t_probe - c0) / n1f[i];
                lo = lo.max(l.min(h));
                hi = hi.min(l.max(h));
            }
            if hi <= lo {
                return 0;
            }
            // Value window on the quadratic in k₁ (A > 0: upward parabola).
            let k2f = k2 as f64;
            let alpha = av;
            let beta = bv * k2f;
            let gamma = cv * k2f * k2f;
            let base = between_roots(alpha, beta, gamma, b);
            let cut = between_roots(alpha, beta, gamma, lo_bound);
            let mut intervals = base.subtract(&cut);
            for item in intervals.items.iter_mut().take(intervals.len) {
                item.0 = item.0.max(lo);
                item.1 = item.1.min(hi);
            }
            let k1_cap = (hi.abs().max(lo.abs()) + 8.0) as i64;
            visit_intervals(&intervals, k1_cap, |k1, trusted| {
                if k1 == 0 && k2 == 0 {
                    return;
                }
                let k1f = k1 as f64;
                if k1f < lo || k1f > hi {
                    return;
                }
                let inside = if trusted {
                    true
                } else {
                    let m = [
                        k1 * n1[0] + k2 * n2[0],
                        k1 * n1[1] + k2 * n2[1],
                        k1 * n1[2] + k2 * n2[2],
                    ];
                    range.contains(&m)
                };
                if inside {
                    local += 1;
                }
            });
            local
        })
        .sum();
    Ok(count)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CqMethod {
    Surface,
    VolumeSlope,
}

/// C_Q by the surface route: the cone of Q pulled back through g with
/// Q = Q_0^g reduces, after the Jacobian cancellations, to two smooth 1D
/// integrals of 1/‖g⁻¹·p(u)‖ over cone charts.
pub fn compute_cq_surface(q: &QForm, cfg: &Config) -> Result<(f64, f64)> {
    let lat = lattice_from_form(q)?;
    let ginv = geom::inverse(lat.basis())
        .ok_or_else(|| Error::Degenerate("singular basis".into()))?;
    let opts = QuadratureOptions { tol: 1e-9, max_nodes: cfg.quad_max_nodes };
    let f1 = |u: f64| {
        let p = [u * u / 2.0, u, 1.0];
        1.0 / geom::norm_sup(&geom::mat_vec(&ginv, &p))
    };
    let f2 = |w: f64| {
        let p = [0.5, w, w * w];
        1.0 / geom::norm_sup(&geom::mat_vec(&ginv, &p))
    };
    let i1 = orbit_integral(&f1, -2.0, 2.0, &[], &opts)?;
    let i2 = orbit_integral(&f2, -0.5, 0.5, &[], &opts)?;
    Ok((i1.value + i2.value, i1.error_bound + i2.error_bound))
}

/// C_Q by the volume route: Monte Carlo of Vol{a<Q<b, ‖v‖<T}/((b−a)T) at two
/// radii with a 1/T Richardson extrapolation. Sampling is chunked with
/// per-chunk seeds, so the total is independent of the thread schedule.
pub fn compute_cq_volume(q: &QForm, cfg: &Config) -> Result<(f64, f64)> {
    let qf = q.to_f64();
    let window = 1.0;
    let est = |t: f64, seed: u64| -> (f64, f64) {
        let n = cfg.mc_samples;
        let chunk: u64 = 1 << 20;
        let chunks = n.div_ceil(chunk);
        let hits: u64 = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c));
                let todo = chunk.min(n - c * chunk);
                let mut local = 0u64;
                for _ in 0..todo {
                    let v = [
                        rng.gen_range(-t..t),
                        rng.gen_range(-t..t),
                        rng.gen_range(-t..t),
                    ];
                    let val = eval_f64(&qf, &v);
                    if val > -window && val < window {
                        local += 1;
                    }
                }
                local
            })
            .sum();
        let p = hits as f64 / n as f64;
        let vol = p * (2.0 * t).powi(3);
        let sigma = (p * (1.0 - p) / n as f64).sqrt() * (2.0 * t).powi(3);
        (vol / (2.0 * window * t), sigma / (2.0 * window * t))
    };
    let t1 = 24.0;
    let t2 = 48.0;
    let (e1, s1) = est(t1, cfg.seed.wrapping_add(101));
    let (e2, s2) = est(t2, cfg.seed.wrapping_add(202));
    let c = (t2 * e2 - t1 * e1) / (t2 - t1);
    let sigma = ((t2 * s2 / (t2 - t1)).powi(2) + (t1 * s1 / (t2 - t1)).powi(2)).sqrt();
    Ok((c, 3.0 * sigma))
}

#[derive(Clone, Debug)]
pub struct CqReport {
    pub surface: Option<(f64, f64)>,
    pub volume: Option<(f64, f64)>,
    pub agree_within: Option<f64>,
}

pub fn compute_cq(q: &QForm, methods: &[CqMethod], cfg: &Config) -> Result<CqReport> {
    let sig = q.signature()?;
    if sig != (2, 1) {
        return Err(Error::Signature(format!("C_Q needs signature (2,1), got {sig:?}")));
    }
    let det = q.det()?.abs().to_f64();
    if (det - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("|det A| = {det} must be 1 for C_Q")));
    }
    let mut rep = CqReport { surface: None, volume: None, agree_within: None };
    for m in methods {
        match m {
            CqMethod::Surface => rep.surface = Some(compute_cq_surface(q, cfg)?),
            CqMethod::VolumeSlope => rep.volume = Some(compute_cq_volume(q, cfg)?),
        }
    }
    if let (Some((s, _)), Some((v, _))) = (rep.surface, rep.volume) {
        rep.agree_within = Some((s - v).abs() / s.abs().max(v.abs()));
    }
    Ok(rep)
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub t_radius: f64,
    pub raw_over_t: f64,
    pub modified_over_t: f64,
    pub predicted: f64,
    pub rel_deviation: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub c_q: f64,
    pub i_q: f64,
    /// Deviations of Ñ/T from C_Q(b−a) non-increasing over the last half.
    pub trend_ok: bool,
}

pub fn convergence_study(
    q: &QForm,
    a: f64,
    b: f64,
    t_grid: &[f64],
    cfg: &Config,
) -> Result<ConvergenceReport> {
    let (c_q, _) = compute_cq_surface(q, cfg)?;
    let (i_q, _) = compute_iq(q, a, b, 10_000.0, cfg)?;
    let main_term = c_q * (b - a);
    let mut rows = Vec::new();
    for &t in t_grid {
        let rep = count_points(q, a, b, t, cfg)?;
        let raw_over_t = rep.raw_count as f64 / t;
        let modified_over_t = rep.modified_count as f64 / t;
        rows.push(ConvergenceRow {
            t_radius: t,
            raw_over_t,
            modified_over_t,
            predicted: main_term + i_q,
            rel_deviation: (modified_over_t - main_term).abs() / main_term,
        });
    }
    let half = rows.len() / 2;
    let mut trend_ok = true;
    for i in half.max(1)..rows.len() {
        if rows[i].rel_deviation > rows[i - 1].rel_deviation * (1.0 + 1e-9) {
            trend_ok = false;
        }
    }
    Ok(ConvergenceReport { rows, c_q, i_q, trend_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    #[test]
    fn census_of_the_stock_irrational_form() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let lines = isotropic_lines(&q, 30).unwrap();
        assert!(!lines.truncated);
        assert_eq!(lines.reps, vec![[0, 0, 1], [1, 0, 0]]);
        let planes = degenerate_planes(&q, 30).unwrap();
        let normals: Vec<[i64; 3]> = planes.planes.iter().map(|p| p.normal).collect();
        assert_eq!(normals, vec![[0, 0, 1], [4, 0, 1]]);
    }

    #[test]
    fn census_flags_rational_forms() {
        let lines = isotropic_lines(&QForm::q0(), 10).unwrap();
        assert!(lines.truncated);
        assert!(lines.reps.len() > 4);
        assert!(lines.reps.contains(&[1, 0, 0]));
        assert!(lines.reps.contains(&[1, 2, 2]));
    }

    #[test]
    fn anisotropic_form_has_empty_census() {
        // x² + y² − (1+√2)·z² has no rational isotropic lines: x² + y² = (1+√2)z²
        // forces both rational and irrational parts to vanish, so z = 0 and
        // then x = y = 0.
        let mut c = [
            Scalar::from_int(1),
            Scalar::from_int(1),
            Scalar::quad(-1, 1, -1, 1, 2).unwrap(),
            Scalar::zero(),
            Scalar::zero(),
            Scalar::zero(),
        ];
        c.swap(2, 2);
        let q = QForm::new(c).unwrap();
        let lines = isotropic_lines(&q, 100).unwrap();
        assert!(lines.reps.is_empty());
    }

    #[test]
    fn plane_bases_satisfy_the_square_identity() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let planes = degenerate_planes(&q, 30).unwrap();
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for p in &planes.planes {
            let (n1, n2) = p.basis;
            let q1 = q.evaluate_int(&n1).to_f64().sqrt();
            let q2 = q.evaluate_int(&n2).to_f64().sqrt();
            for _ in 0..100 {
                let k1: i64 = rng.gen_range(-50..50);
                let k2: i64 = rng.gen_range(-50..50);
                let v = [
                    k1 * n1[0] + k2 * n2[0],
                    k1 * n1[1] + k2 * n2[1],
                    k1 * n1[2] + k2 * n2[2],
                ];
                let lhs = q.evaluate_int(&v).to_f64();
                let rhs = (q1 * k1 as f64 + q2 * k2 as f64).powi(2);
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0),
                    "plane {:?}: {lhs} vs {rhs}",
                    p.normal
                );
            }
        }
    }

    #[test]
    fn small_count_against_cube_oracle() {
        let cfg = Config::default();
        for (q, a, b) in [
            (QForm::q0(), -0.5, 0.5),
            (QForm::q0_plus_sqrt2_v2v3(), -1.0, 1.0),
            (QForm::diagonal(1, 1, -2), 1.0, 2.0),
        ] {
            for t in [2.0, 3.0, 7.0] {
                let fast = count_points(&q, a, b, t, &cfg).unwrap();
                let slow = cube_count_oracle(&q, a, b, t).unwrap();
                assert_eq!(fast.raw_count, slow, "form {:?} T={t}", q.to_f64());
            }
        }
    }

    #[test]
    fn tiny_radius_counts_nothing() {
        let cfg = Config::default();
        let rep = count_points(&QForm::q0(), -0.5, 0.5, 0.5, &cfg).unwrap();
        assert_eq!(rep.raw_count, 0);
    }

    #[test]
    fn partition_identity_holds() {
        let cfg = Config::default();
        let q = QForm::q0_plus_sqrt2_v2v3();
        let rep = count_points(&q, -1.0, 1.0, 50.0, &cfg).unwrap();
        assert_eq!(
            rep.raw_count,
            rep.modified_count + rep.excluded_line_points + rep.excluded_plane_points
        );
        assert!(rep.excluded_line_points > 0); // the two isotropic lines
    }

    #[test]
    fn iq_of_the_stock_form() {
        let cfg = Config::default();
        let q = QForm::q0_plus_sqrt2_v2v3();
        let (iq, breakdown) = compute_iq(&q, -1.0, 1.0, 10_000.0, &cfg).unwrap();
        // Lines e₁ and e₃ contribute 2 + 2; the rational-ratio plane z = 0
        // contributes 0 on (−1,1); the (4,0,1) plane has the closed form
        // 4/max(1, 2√2, 4) = 1.
        assert!((breakdown.line_term - 4.0).abs() < 1e-12);
        assert_eq!(breakdown.planes.len(), 2);
        assert!((iq - 5.0).abs() < 1e-2, "I_Q = {iq}");
    }

    #[test]
    fn iq_line_term_respects_the_window() {
        let cfg = Config::default();
        let q = QForm::q0_plus_sqrt2_v2v3();
        let (_, breakdown) = compute_iq(&q, 0.5, 1.0, 1_000.0, &cfg).unwrap();
        assert_eq!(breakdown.line_term, 0.0);
    }

    #[test]
    fn cq_of_q0_matches_the_closed_form() {
        // For the standard form the surface route evaluates to 4 + 2·ln 2.
        let cfg = Config::default();
        let (c, err) = compute_cq_surface(&QForm::q0(), &cfg).unwrap();
        let expect = 4.0 + 2.0 * 2f64.ln();
        assert!((c - expect).abs() <= 1e-6 + err, "C = {c}, expect {expect}");
    }

    #[test]
    fn cq_invariant_under_rotation_stabilizer() {
        // K(θ) stabilizes Q_0, so the transformed form is Q_0 itself and
        // C is unchanged.
        let q = QForm::q0();
        let k = crate::flows::k_rot(0.7);
        let qk = q.transform_f64(&k);
        let qf = q.to_f64();
        for i in 0..6 {
            assert!((qk[i] - qf[i]).abs() < 1e-12);
        }
    }
}
