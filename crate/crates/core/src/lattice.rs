//! Unimodular lattices in R³: duals, vector enumeration, shortest vectors,
//! and the classical α height.
//!
//! A lattice is `B·Z³` for a basis matrix `B` with |det B| = 1, stored in
//! float with an optional exact mirror. Enumeration size-reduces the basis
//! first, so flow-translated bases with a wide dynamic range still give a
//! small coefficient box.

use num_integer::Integer;
use rand::Rng;

use crate::error::{Error, Result};
use crate::forms::QForm;
use crate::geom::{self, M3, V3};
use crate::mat3::{self, Mat3E, Vec3E};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_BOX: u64 = 1 << 32;

#[derive(Clone, Debug)]
pub enum Provenance {
    Explicit,
    /// Basis g satisfies Q = Q_0^g, so Q_0(B·m) = Q(m) exactly through the form.
    FromForm { form: QForm },
}

#[derive(Clone, Debug)]
pub struct Lattice3 {
    basis: M3,
    basis_exact: Option<Mat3E>,
    pub provenance: Provenance,
}

/// One enumerated lattice vector: integer coordinates in the original basis
/// plus the float embedding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeVector {
    pub m: [i64; 3],
    pub v: V3,
}

impl Lattice3 {
    pub fn from_float(basis: M3) -> Result<Self> {
        let d = geom::det(&basis).abs();
        if !d.is_finite() || (d - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "basis determinant {d} is not ±1"
            )));
        }
        Ok(Lattice3 { basis, basis_exact: None, provenance: Provenance::Explicit })
    }

    pub fn from_exact(basis: Mat3E) -> Result<Self> {
        let det = mat3::det(&basis)?;
        if det.abs().sub(&Scalar::one()).map(|s| !s.is_zero()).unwrap_or(true) {
            return Err(Error::Precondition("exact basis determinant is not ±1".into()));
        }
        let f = mat3::mat_to_f64(&basis);
        Ok(Lattice3 { basis: f, basis_exact: Some(basis), provenance: Provenance::Explicit })
    }

    pub fn standard() -> Self {
        Lattice3 {
            basis: geom::IDENTITY,
            basis_exact: Some(mat3::identity()),
            provenance: Provenance::Explicit,
        }
    }

    pub fn basis(&self) -> &M3 {
        &self.basis
    }

    pub fn basis_exact(&self) -> Option<&Mat3E> {
        self.basis_exact.as_ref()
    }

    /// Lattice with basis g·B (the translated lattice gΔ), float only.
    pub fn translated(&self, g: &M3) -> Lattice3 {
        Lattice3 {
            basis: geom::mat_mul(g, &self.basis),
            basis_exact: None,
            provenance: Provenance::Explicit,
        }
    }

    /// Dual lattice Δ* with basis the transpose-inverse.
    pub fn dual(&self) -> Lattice3 {
        let exact = self.basis_exact.as_ref().and_then(|b| {
            mat3::inverse(b).ok().map(|inv| mat3::transpose(&inv))
        });
        let f = match &exact {
            Some(e) => mat3::mat_to_f64(e),
            None => geom::transpose(&geom::inverse(&self.basis).expect("unimodular basis")),
        };
        let provenance = match &self.provenance {
            Provenance::FromForm { form } => match form.dual() {
                Ok(dual) => Provenance::FromForm { form: dual },
                Err(_) => Provenance::Explicit,
            },
            Provenance::Explicit => Provenance::Explicit,
        };
        Lattice3 { basis: f, basis_exact: exact, provenance }
    }

    pub fn exact_vector(&self, m: &[i64; 3]) -> Option<Vec3E> {
        let b = self.basis_exact.as_ref()?;
        mat3::mat_vec(b, &mat3::vec_from_int(m)).ok()
    }

    /// Exact Q_0 value of the lattice vector `B·m` when exactness is
    /// available, either through an exact basis or the defining form.
    pub fn q0_exact(&self, m: &[i64; 3]) -> Option<Scalar> {
        if let Provenance::FromForm { form } = &self.provenance {
            return Some(form.evaluate_int(m));
        }
        let v = self.exact_vector(m)?;
        // Q_0(v) = v2² − 2 v1 v3
        let two = Scalar::from_int(2);
        v[1].mul(&v[1])
            .and_then(|a| v[0].mul(&v[2])?.mul(&two).and_then(|b| a.sub(&b)))
            .ok()
    }

    /// Streams the nonzero lattice vectors with sup norm ≤ R, one
    /// representative per ± pair, in a deterministic box order.
    /// `primitive_only` keeps gcd-1 coefficient vectors. Returns false when
    /// the callback stopped the walk early.
    pub fn for_each_vector(
        &self,
        radius: f64,
        primitive_only: bool,
        max_box: u64,
        cb: &mut dyn FnMut(&LatticeVector) -> std::ops::ControlFlow<()>,
    ) -> Result<bool> {
        if !(radius > 0.0) {
            return Err(Error::Precondition("enumeration radius must be positive".into()));
        }
        let red = reduce_basis(&self.basis);
        let inv = geom::inverse(&red.basis)
            .ok_or_else(|| Error::Degenerate("reduced basis is singular".into()))?;
        let mut bound = [0i64; 3];
        let mut total: u64 = 1;
        for i in 0..3 {
            let row_l1 = inv[i][0].abs() + inv[i][1].abs() + inv[i][2].abs();
            let b = (row_l1 * radius * (1.0 + 1e-12)).floor() as i64;
            bound[i] = b;
            total = total.saturating_mul((2 * b + 1) as u64);
        }
        if total > max_box {
            return Err(Error::Resource(format!(
                "enumeration box of {total} coefficient vectors exceeds cap {max_box}"
            )));
        }
        let tol = radius * (1.0 + 1e-12);
        for a in -bound[0]..=bound[0] {
            for b in -bound[1]..=bound[1] {
                for c in -bound[2]..=bound[2] {
                    if a == 0 && b == 0 && c == 0 {
                        continue;
                    }
                    let mp = [a, b, c];
                    // Original-basis coefficients via the recorded transform.
                    let m = red.to_original(&mp);
                    if !sign_canonical(&m) {
                        continue;
                    }
                    let v = geom::mat_vec(&self.basis, &[m[0] as f64, m[1] as f64, m[2] as f64]);
                    if geom::norm_sup(&v) > tol {
                        continue;
                    }
                    if primitive_only && !is_primitive(&m) {
                        continue;
                    }
                    if cb(&LatticeVector { m, v }).is_break() {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// All nonzero lattice vectors with sup norm ≤ R, one representative per
    /// ± pair, sorted by coefficient vector.
    pub fn enumerate_vectors(
        &self,
        radius: f64,
        primitive_only: bool,
        max_box: u64,
    ) -> Result<Vec<LatticeVector>> {
        let mut out = Vec::new();
        self.for_each_vector(radius, primitive_only, max_box, &mut |lv| {
            out.push(*lv);
            std::ops::ControlFlow::Continue(())
        })?;
        out.sort_by(|x, y| x.m.cmp(&y.m));
        Ok(out)
    }

    /// Sup norm of a shortest nonzero vector.
    pub fn shortest_norm(&self, max_box: u64) -> Result<f64> {
        let red = reduce_basis(&self.basis);
        let mut r = f64::INFINITY;
        for j in 0..3 {
            r = r.min(geom::norm_sup(&geom::column(&red.basis, j)));
        }
        let candidates = self.enumerate_vectors(r, false, max_box)?;
        let mut best = r;
        for c in &candidates {
            best = best.min(geom::norm_sup(&c.v));
        }
        // Exact confirmation of near-ties when an exact basis exists.
        if let Some(be) = &self.basis_exact {
            let mut near: Vec<&LatticeVector> = candidates
                .iter()
                .filter(|c| geom::norm_sup(&c.v) <= best * (1.0 + 1e-9))
                .collect();
            if near.len() > 1 {
                near.sort_by(|x, y| x.m.cmp(&y.m));
                let mut best_exact: Option<Scalar> = None;
                for c in near {
                    if let Ok(v) = mat3::mat_vec(be, &mat3::vec_from_int(&c.m)) {
                        let n = exact_sup_norm(&v);
                        match &best_exact {
                            None => best_exact = Some(n),
                            Some(cur) => {
                                if n.cmp_exact(cur).map(|o| o.is_lt()).unwrap_or(false) {
                                    best_exact = Some(n);
                                }
                            }
                        }
                    }
                }
                if let Some(n) = best_exact {
                    best = n.to_f64();
                }
            }
        }
        Ok(best)
    }

    /// α₁(Δ) = 1 / (shortest nonzero sup norm).
    pub fn alpha1(&self, max_box: u64) -> Result<f64> {
        Ok(1.0 / self.shortest_norm(max_box)?)
    }

    /// α(Δ) = max(α₁(Δ), α₁(Δ*)).
    pub fn alpha(&self, max_box: u64) -> Result<f64> {
        let a1 = self.alpha1(max_box)?;
        let a2 = self.dual().alpha1(max_box)?;
        Ok(a1.max(a2))
    }
}

fn exact_sup_norm(v: &Vec3E) -> Scalar {
    let mut best = v[0].abs();
    for x in &v[1..] {
        let a = x.abs();
        if a.cmp_exact(&best).map(|o| o.is_gt()).unwrap_or(false) {
            best = a;
        }
    }
    best
}

fn sign_canonical(m: &[i64; 3]) -> bool {
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

pub fn is_primitive(m: &[i64; 3]) -> bool {
    let g = m[0].unsigned_abs().gcd(&m[1].unsigned_abs()).gcd(&m[2].unsigned_abs());
    g == 1
}

/// A size-reduced basis together with the integer change of coordinates
/// back to the original basis: `original_m = U · reduced_m`.
struct ReducedBasis {
    basis: M3,
    u: [[i64; 3]; 3],
}

impl ReducedBasis {
    fn to_original(&self, mp: &[i64; 3]) -> [i64; 3] {
        [
            self.u[0][0] * mp[0] + self.u[0][1] * mp[1] + self.u[0][2] * mp[2],
            self.u[1][0] * mp[0] + self.u[1][1] * mp[1] + self.u[1][2] * mp[2],
            self.u[2][0] * mp[0] + self.u[2][1] * mp[1] + self.u[2][2] * mp[2],
        ]
    }
}

/// LLL reduction (δ = 0.99) of the three basis columns in f64. Flow
/// translates a_t·u_r stretch the basis by e^t, and without Lovász swaps
/// the enumeration box grows like e^t; with them it stays O(1).
fn reduce_basis(basis: &M3) -> ReducedBasis {
    let mut b = [geom::column(basis, 0), geom::column(basis, 1), geom::column(basis, 2)];
    let mut u = [[0i64; 3]; 3];
    for (i, row) in u.iter_mut().enumerate() {
        row[i] = 1;
    }
    let delta = 0.99;
    let mut steps = 0;
    let mut k = 1usize;
    while k < 3 && steps < 10_000 {
        steps += 1;
        // Size-reduce b_k against b_{k-1}, ..., b_0.
        for j in (0..k).rev() {
            let (bs, _) = gram_schmidt(&b);
            let denom = geom::dot(&bs[j], &bs[j]);
            if denom == 0.0 {
                continue;
            }
            let mu = geom::dot(&b[k], &bs[j]) / denom;
            let r = mu.round();
            if r != 0.0 && r.abs() < 9e15 {
                let ri = r as i64;
                b[k] = geom::sub(&b[k], &geom::scale(&b[j], r));
                for row in u.iter_mut() {
                    row[k] -= ri * row[j];
                }
            }
        }
        let (bs, mu) = gram_schmidt(&b);
        let lhs = geom::dot(&bs[k], &bs[k]);
        let rhs = (delta - mu[k][k - 1] * mu[k][k - 1]) * geom::dot(&bs[k - 1], &bs[k - 1]);
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            for row in u.iter_mut() {
                row.swap(k, k - 1);
            }
            k = k.max(2) - 1;
        }
    }
    ReducedBasis { basis: geom::from_columns(&b[0], &b[1], &b[2]), u }
}

/// Gram-Schmidt vectors and μ coefficients of the three columns.
fn gram_schmidt(b: &[V3; 3]) -> ([V3; 3], [[f64; 3]; 3]) {
    let mut bs = *b;
    let mut mu = [[0f64; 3]; 3];
    for i in 0..3 {
        bs[i] = b[i];
        for j in 0..i {
            let denom = geom::dot(&bs[j], &bs[j]);
            let m = if denom == 0.0 { 0.0 } else { geom::dot(&b[i], &bs[j]) / denom };
            mu[i][j] = m;
            bs[i] = geom::sub(&bs[i], &geom::scale(&bs[j], m));
        }
    }
    (bs, mu)
}

/// Constructs Δ_Q = g·Z³ with Q = Q_0^g by congruence diagonalization of the
/// Gram matrix, with a fixed pivot order for reproducibility.
pub fn lattice_from_form(q: &QForm) -> Result<Lattice3> {
    let sig = q.signature()?;
    if sig != (2, 1) {
        return Err(Error::Signature(format!(
            "lattice_from_form needs signature (2,1), got {:?}",
            sig
        )));
    }
    let det = q.det()?.abs().to_f64();
    if (det - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("|det A| = {det}, expected 1")));
    }

    // Q_0 itself maps to the identity basis.
    if q == &QForm::q0() {
        let mut lat = Lattice3::standard();
        lat.provenance = Provenance::FromForm { form: q.clone() };
        return Ok(lat);
    }

    // Exact symmetric elimination: columns of S satisfy SᵀAS = diag(d1,d2,d3).
    let a = q.matrix();
    let mut work = a.clone();
    let mut s = mat3::identity();
    for k in 0..3 {
        if work[k][k].is_zero() {
            // Fixed repair order: first try swapping in a later diagonal
            // pivot, then fall back to adding a column with a nonzero
            // off-diagonal entry against column k.
            let mut fixed = false;
            for j in (k + 1)..3 {
                if !work[j][j].is_zero() {
                    swap_cols(&mut work, &mut s, k, j);
                    fixed = true;
                    break;
                }
            }
            if !fixed {
                for j in (k + 1)..3 {
                    if !work[k][j].is_zero() {
                        add_col(&mut work, &mut s, k, j, &Scalar::one())?;
                        fixed = true;
                        break;
                    }
                }
            }
            if !fixed {
                return Err(Error::Degenerate("elimination found a zero block".into()));
            }
        }
        for j in (k + 1)..3 {
            if !work[k][j].is_zero() {
                let coeff = work[k][j].div(&work[k][k])?.neg();
                add_col(&mut work, &mut s, j, k, &coeff)?;
            }
        }
    }
    let diag = [work[0][0].clone(), work[1][1].clone(), work[2][2].clone()];
    let signs: Vec<i32> = diag.iter().map(|x| x.signum()).collect();
    if signs.iter().any(|&s| s == 0) {
        return Err(Error::Degenerate("zero diagonal entry after elimination".into()));
    }

    // Permute columns to sign pattern (+, +, −).
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by_key(|&i| if signs[i] > 0 { 0 } else { 1 });
    let sf = mat3::mat_to_f64(&s);
    let mut cols: Vec<V3> = Vec::with_capacity(3);
    for &i in &order {
        let col = geom::column(&sf, i);
        let scale = 1.0 / diag[i].to_f64().abs().sqrt();
        cols.push(geom::scale(&col, scale));
    }
    let s_scaled = geom::from_columns(&cols[0], &cols[1], &cols[2]);

    // W maps the diag(1,1,−1) frame back to the Q_0 frame: WᵀA₀W = diag(1,1,−1).
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let w: M3 = [[r, 0.0, r], [0.0, 1.0, 0.0], [-r, 0.0, r]];
    let s_inv = geom::inverse(&s_scaled)
        .ok_or_else(|| Error::Degenerate("scaled elimination matrix is singular".into()))?;
    let mut g = geom::mat_mul(&w, &s_inv);
    if geom::det(&g) < 0.0 {
        for row in &mut g {
            for x in row.iter_mut() {
                *x = -*x;
            }
        }
    }
    let mut lat = Lattice3::from_float(g)?;
    lat.provenance = Provenance::FromForm { form: q.clone() };
    Ok(lat)
}

fn swap_cols(work: &mut Mat3E, s: &mut Mat3E, i: usize, j: usize) {
    for r in 0..3 {
        s[r].swap(i, j);
    }
    for r in 0..3 {
        work[r].swap(i, j);
    }
    work.swap(i, j);
}

/// Column operation v_i ← v_i + c·v_j on both the transform and the Gram matrix.
fn add_col(work: &mut Mat3E, s: &mut Mat3E, i: usize, j: usize, c: &Scalar) -> Result<()> {
    for r in 0..3 {
        s[r][i] = s[r][i].add(&s[r][j].mul(c)?)?;
    }
    // Gram update: row/col i gain c times row/col j.
    for r in 0..3 {
        work[r][i] = work[r][i].add(&work[r][j].mul(c)?)?;
    }
    for r in 0..3 {
        work[i][r] = work[i][r].add(&work[j][r].mul(c)?)?;
    }
    Ok(())
}

/// Rational subspace of dimension 1 (integral direction) or 2 (integral
/// normal), primitive coefficients in the lattice frame.
#[derive(Clone, Copy, Debug)]
pub enum RationalSubspace {
    Line([i64; 3]),
    Plane([i64; 3]),
}

impl RationalSubspace {
    pub fn line(m: [i64; 3]) -> Result<Self> {
        if m == [0, 0, 0] || !is_primitive(&m) {
            return Err(Error::Precondition("line direction must be primitive".into()));
        }
        Ok(RationalSubspace::Line(m))
    }

    pub fn plane(n: [i64; 3]) -> Result<Self> {
        if n == [0, 0, 0] || !is_primitive(&n) {
            return Err(Error::Precondition("plane normal must be primitive".into()));
        }
        Ok(RationalSubspace::Plane(n))
    }
}

/// d(L): Euclidean covolume of L ∩ Δ inside L.
pub fn rational_subspace_covolume(lat: &Lattice3, sub: &RationalSubspace) -> f64 {
    match sub {
        RationalSubspace::Line(m) => {
            let v = geom::mat_vec(lat.basis(), &[m[0] as f64, m[1] as f64, m[2] as f64]);
            geom::norm_eucl(&v)
        }
        RationalSubspace::Plane(n) => {
            let (m1, m2) = plane_lattice_basis(n);
            let v1 = geom::mat_vec(lat.basis(), &[m1[0] as f64, m1[1] as f64, m1[2] as f64]);
            let v2 = geom::mat_vec(lat.basis(), &[m2[0] as f64, m2[1] as f64, m2[2] as f64]);
            geom::norm_eucl(&geom::cross(&v1, &v2))
        }
    }
}

/// Integral basis of {m ∈ Z³ : m·n = 0} for primitive n. Deterministic, and
/// the two vectors span the full kernel lattice: k1 × k2 = −n.
pub fn plane_lattice_basis(n: &[i64; 3]) -> ([i64; 3], [i64; 3]) {
    if n[0] == 0 && n[1] == 0 {
        return ([1, 0, 0], [0, 1, 0]);
    }
    let (g, a, b) = ext_gcd(n[0], n[1]);
    let k1 = [n[1] / g, -n[0] / g, 0];
    // a·n0 + b·n1 = g, so k2·n = −a·n2·n0 − b·n2·n1 + g·n2 = 0.
    let k2 = [-a * n[2], -b * n[2], g];
    debug_assert_eq!(k1[0] * n[0] + k1[1] * n[1] + k1[2] * n[2], 0);
    debug_assert_eq!(k2[0] * n[0] + k2[1] * n[1] + k2[2] * n[2], 0);
    (k1, k2)
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a == 0 {
            return (0, 0, 0);
        }
        return (a.abs(), a.signum(), 0);
    }
    let (g, x, y) = ext_gcd(b, a % b);
    (g, y, x - (a / b) * y)
}

impl Lattice3 {
    /// Lattice literal {"basis": [[...],[...],[...]], "exact": bool}; exact
    /// entries are integers or [p, q] rational pairs.
    pub fn from_json(v: &serde_json::Value) -> Result<Lattice3> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("lattice literal must be an object".into()))?;
        let exact = obj.get("exact").and_then(serde_json::Value::as_bool).unwrap_or(false);
        let rows = obj
            .get("basis")
            .and_then(serde_json::Value::as_array)
            .ok_or_else(|| Error::Parse("missing 'basis' array".into()))?;
        if rows.len() != 3 {
            return Err(Error::Parse("basis needs three rows".into()));
        }
        if exact {
            let mut basis = mat3::identity();
            for (i, row) in rows.iter().enumerate() {
                let cells = row
                    .as_array()
                    .ok_or_else(|| Error::Parse("basis rows must be arrays".into()))?;
                if cells.len() != 3 {
                    return Err(Error::Parse("basis rows need three entries".into()));
                }
                for (j, cell) in cells.iter().enumerate() {
                    basis[i][j] = parse_exact_entry(cell)?;
                }
            }
            Lattice3::from_exact(basis)
        } else {
            let mut basis = [[0f64; 3]; 3];
            for (i, row) in rows.iter().enumerate() {
                let cells = row
                    .as_array()
                    .ok_or_else(|| Error::Parse("basis rows must be arrays".into()))?;
                if cells.len() != 3 {
                    return Err(Error::Parse("basis rows need three entries".into()));
                }
                for (j, cell) in cells.iter().enumerate() {
                    basis[i][j] = cell
                        .as_f64()
                        .ok_or_else(|| Error::Parse("basis entries must be numbers".into()))?;
                }
            }
            Lattice3::from_float(basis)
        }
    }
}

fn parse_exact_entry(v: &serde_json::Value) -> Result<Scalar> {
    if let Some(n) = v.as_i64() {
        return Ok(Scalar::from_int(n));
    }
    if let Some(arr) = v.as_array() {
        if arr.len() == 2 {
            let p = arr[0].as_i64().ok_or_else(|| Error::Parse("bad rational".into()))?;
            let q = arr[1].as_i64().ok_or_else(|| Error::Parse("bad rational".into()))?;
            if q == 0 {
                return Err(Error::Parse("zero denominator".into()));
            }
            return Ok(Scalar::from_ratio(p, q));
        }
    }
    Err(Error::Parse("exact basis entries are integers or [p, q] pairs".into()))
}

/// Random unimodular basis for battery runs; rejection-samples a well
/// conditioned matrix and scales the determinant to 1.
pub fn random_unimodular<R: Rng>(rng: &mut R) -> Lattice3 {
    loop {
        let mut m = [[0f64; 3]; 3];
        for row in &mut m {
            for x in row.iter_mut() {
                *x = rng.gen_range(-1.5..1.5);
            }
        }
        let d = geom::det(&m);
        if d.abs() < 0.15 {
            continue;
        }
        let scale = d.abs().powf(-1.0 / 3.0);
        for row in &mut m {
            for x in row.iter_mut() {
                *x *= scale;
            }
        }
        if geom::det(&m) < 0.0 {
            for row in &mut m {
                row[0] = -row[0];
            }
        }
        if let Ok(l) = Lattice3::from_float(m) {
            return l;
        }
    }
}
