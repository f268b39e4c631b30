//! Ternary quadratic forms with exact coefficients in Q(√d).
//!
//! A form is stored by its six monomial coefficients, so
//! `Q(v) = c11·v1² + c22·v2² + c33·v3² + c12·v1v2 + c13·v1v3 + c23·v2v3`.
//! The associated symmetric matrix A has `A_ii = c_ii` and `A_ij = c_ij/2`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geom::{self, M3, V3};
use crate::mat3::{self, Mat3E, Vec3E};
use crate::scalar::Scalar;

pub const MONOMIALS: [&str; 6] = ["c11", "c22", "c33", "c12", "c13", "c23"];

/// Exact ternary quadratic form. Coefficient order: c11, c22, c33, c12, c13, c23.
#[derive(Clone, Debug, PartialEq)]
pub struct QForm {
    pub c: [Scalar; 6],
    pub d: u64,
}

/// Float mirror of a form, same coefficient order.
pub type F64Form = [f64; 6];

pub fn eval_f64(c: &F64Form, v: &V3) -> f64 {
    c[0] * v[0] * v[0]
        + c[1] * v[1] * v[1]
        + c[2] * v[2] * v[2]
        + c[3] * v[0] * v[1]
        + c[4] * v[0] * v[2]
        + c[5] * v[1] * v[2]
}

pub fn sup_distance_f64(a: &F64Form, b: &F64Form) -> f64 {
    let mut m = 0f64;
    for i in 0..6 {
        m = m.max((a[i] - b[i]).abs());
    }
    m
}

impl QForm {
    pub fn new(c: [Scalar; 6]) -> Result<Self> {
        let mut d = 1u64;
        for x in &c {
            if !x.is_rational() {
                if d == 1 {
                    d = x.d;
                } else if d != x.d {
                    return Err(Error::Domain(format!(
                        "mixed radicands {d} and {} in one form",
                        x.d
                    )));
                }
            }
        }
        Ok(QForm { c, d })
    }

    /// The standard form Q_0(v) = v2² − 2·v1v3.
    pub fn q0() -> Self {
        let mut c = zero_coeffs();
        c[1] = Scalar::from_int(1);
        c[4] = Scalar::from_int(-2);
        QForm::new(c).unwrap()
    }

    /// Q_0 + √2·v2v3, the stock irrational test form (|det A| = 1 already).
    pub fn q0_plus_sqrt2_v2v3() -> Self {
        let mut c = zero_coeffs();
        c[1] = Scalar::from_int(1);
        c[4] = Scalar::from_int(-2);
        c[5] = Scalar::quad(0, 1, 1, 1, 2).unwrap();
        QForm::new(c).unwrap()
    }

    pub fn diagonal(d1: i64, d2: i64, d3: i64) -> Self {
        let mut c = zero_coeffs();
        c[0] = Scalar::from_int(d1);
        c[1] = Scalar::from_int(d2);
        c[2] = Scalar::from_int(d3);
        QForm::new(c).unwrap()
    }

    pub fn evaluate(&self, v: &Vec3E) -> Result<Scalar> {
        let mut acc = self.c[0].mul(&v[0].mul(&v[0])?)?;
        acc = acc.add(&self.c[1].mul(&v[1].mul(&v[1])?)?)?;
        acc = acc.add(&self.c[2].mul(&v[2].mul(&v[2])?)?)?;
        acc = acc.add(&self.c[3].mul(&v[0].mul(&v[1])?)?)?;
        acc = acc.add(&self.c[4].mul(&v[0].mul(&v[2])?)?)?;
        acc.add(&self.c[5].mul(&v[1].mul(&v[2])?)?)
    }

    pub fn evaluate_int(&self, m: &[i64; 3]) -> Scalar {
        self.evaluate(&mat3::vec_from_int(m)).expect("radicands already joined")
    }

    /// Bilinear polarization Q(v, w) = (Q(v+w) − Q(v) − Q(w)) / 2.
    pub fn polarize(&self, v: &Vec3E, w: &Vec3E) -> Result<Scalar> {
        let s = mat3::vec_add(v, w)?;
        let half = Scalar::from_ratio(1, 2);
        self.evaluate(&s)?
            .sub(&self.evaluate(v)?)?
            .sub(&self.evaluate(w)?)?
            .mul(&half)
    }

    /// Symmetric matrix A with Q(v) = vᵀAv.
    pub fn matrix(&self) -> Mat3E {
        let half = Scalar::from_ratio(1, 2);
        let h = |i: usize| self.c[i].mul(&half).unwrap();
        [
            [self.c[0].clone(), h(3), h(4)],
            [h(3), self.c[1].clone(), h(5)],
            [h(4), h(5), self.c[2].clone()],
        ]
    }

    pub fn from_matrix(a: &Mat3E) -> Result<Self> {
        let two = Scalar::from_int(2);
        QForm::new([
            a[0][0].clone(),
            a[1][1].clone(),
            a[2][2].clone(),
            a[0][1].mul(&two)?,
            a[0][2].mul(&two)?,
            a[1][2].mul(&two)?,
        ])
    }

    /// Determinant of the associated matrix A (negative for signature (2,1)).
    pub fn det(&self) -> Result<Scalar> {
        mat3::det(&self.matrix())
    }

    /// Dual form Q*(v) = vᵀA⁻¹v.
    pub fn dual(&self) -> Result<QForm> {
        let a = self.matrix();
        let inv = mat3::inverse(&a).map_err(|_| {
            Error::Degenerate("dual of a degenerate form".into())
        })?;
        QForm::from_matrix(&inv)
    }

    /// Q^g(v) = Q(gv); matrix gᵀAg.
    pub fn transform(&self, g: &Mat3E) -> Result<QForm> {
        let a = self.matrix();
        let gt = mat3::transpose(g);
        let m = mat3::mat_mul(&gt, &mat3::mat_mul(&a, g)?)?;
        QForm::from_matrix(&m)
    }

    pub fn scale(&self, s: &Scalar) -> Result<QForm> {
        let mut c = self.c.clone();
        for x in &mut c {
            *x = x.mul(s)?;
        }
        QForm::new(c)
    }

    pub fn to_f64(&self) -> F64Form {
        [
            self.c[0].to_f64(),
            self.c[1].to_f64(),
            self.c[2].to_f64(),
            self.c[3].to_f64(),
            self.c[4].to_f64(),
            self.c[5].to_f64(),
        ]
    }

    /// Float transform for group elements that are not exactly representable.
    pub fn transform_f64(&self, g: &M3) -> F64Form {
        // A' = gᵀ A g on the float mirror.
        let a = mat3::mat_to_f64(&self.matrix());
        let gt = geom::transpose(g);
        let ap = geom::mat_mul(&gt, &geom::mat_mul(&a, g));
        [
            ap[0][0],
            ap[1][1],
            ap[2][2],
            2.0 * ap[0][1],
            2.0 * ap[0][2],
            2.0 * ap[1][2],
        ]
    }

    /// Sup distance over the six monomial coefficients, as a float.
    pub fn distance(&self, other: &QForm) -> f64 {
        let mut m = 0f64;
        for i in 0..6 {
            let diff = match self.c[i].sub(&other.c[i]) {
                Ok(x) => x.to_f64().abs(),
                Err(_) => f64::INFINITY,
            };
            m = m.max(diff);
        }
        m
    }

    pub fn sup_norm(&self) -> f64 {
        self.c.iter().map(|x| x.to_f64().abs()).fold(0f64, f64::max)
    }

    pub fn is_integral(&self) -> bool {
        self.c.iter().all(|x| {
            x.is_rational() && x.a.denom().abs() == BigInt::from(1)
        })
    }

    pub fn is_rational(&self) -> bool {
        self.c.iter().all(|x| x.is_rational())
    }

    /// Exact ratio r with `other = r·self`, if the forms are proportional.
    pub fn proportional_ratio(&self, other: &QForm) -> Option<Scalar> {
        let mut ratio: Option<Scalar> = None;
        for i in 0..6 {
            let zs = self.c[i].is_zero();
            let zo = other.c[i].is_zero();
            if zs != zo {
                return None;
            }
            if zs {
                continue;
            }
            let r = other.c[i].div(&self.c[i]).ok()?;
            match &ratio {
                None => ratio = Some(r),
                Some(prev) => {
                    if *prev != r {
                        return None;
                    }
                }
            }
        }
        ratio
    }

    /// Signature (p, q) by Descartes' rule on the characteristic polynomial
    /// of A; exact because A is symmetric (all roots real) and det ≠ 0.
    pub fn signature(&self) -> Result<(u8, u8)> {
        let a = self.matrix();
        let d = mat3::det(&a)?;
        if d.is_zero() {
            return Err(Error::Degenerate("signature of a degenerate form".into()));
        }
        let tr = a[0][0].add(&a[1][1])?.add(&a[2][2])?;
        let minor = |i: usize, j: usize| -> Result<Scalar> {
            a[i][i].mul(&a[j][j])?.sub(&a[i][j].mul(&a[j][i])?)
        };
        let s2 = minor(0, 1)?.add(&minor(0, 2)?)?.add(&minor(1, 2)?)?;
        // χ(λ) = λ³ − tr·λ² + s2·λ − det; positive roots = sign variations.
        let signs = [1, -tr.signum(), s2.signum(), -d.signum()];
        let mut p = 0u8;
        let mut last = signs[0];
        for &s in &signs[1..] {
            if s == 0 {
                continue;
            }
            if s != last {
                p += 1;
            }
            last = s;
        }
        Ok((p, 3 - p))
    }

    /// Scale to |det A| = 1. Exact when the cube root stays in the field,
    /// otherwise a float-scaled mirror flagged inexact.
    pub fn normalize_det(&self) -> Result<NormalizedForm> {
        let det = self.det()?;
        if det.is_zero() {
            return Err(Error::Degenerate("cannot normalize a degenerate form".into()));
        }
        let abs = det.abs();
        if abs.is_rational() {
            if let Some(lam) = rational_inv_cbrt(&abs.a) {
                let s = Scalar::rational(lam.clone());
                return Ok(NormalizedForm::Exact(self.scale(&s)?, s));
            }
        }
        let lam = abs.to_f64().powf(-1.0 / 3.0);
        let mut c = self.to_f64();
        for x in &mut c {
            *x *= lam;
        }
        Ok(NormalizedForm::Float(c, lam))
    }

    /// Gram determinant Q(v)Q(w) − Q(v,w)²; equals det(A)·Q*(v×w).
    pub fn gram_det(&self, v: &Vec3E, w: &Vec3E) -> Result<Scalar> {
        let qv = self.evaluate(v)?;
        let qw = self.evaluate(w)?;
        let qvw = self.polarize(v, w)?;
        qv.mul(&qw)?.sub(&qvw.mul(&qvw)?)
    }

    /// Integer coefficients with denominators cleared:
    /// `L·Q(m) = P(m) + I(m)·√d` with P, I integral. None on i128 overflow.
    pub fn cleared_i128(&self) -> Option<ClearedForm> {
        let mut l = BigInt::from(1);
        for x in &self.c {
            l = num_integer::lcm(l.clone(), x.a.denom().abs());
            l = num_integer::lcm(l, x.b.denom().abs());
        }
        let lr = BigRational::from_integer(l.clone());
        let mut p = [0i128; 6];
        let mut q = [0i128; 6];
        for i in 0..6 {
            let pa = (&self.c[i].a * &lr).to_integer();
            let pb = (&self.c[i].b * &lr).to_integer();
            p[i] = pa.to_i128()?;
            q[i] = pb.to_i128()?;
        }
        Some(ClearedForm { p, q, d: self.d, scale: l })
    }

    pub fn to_json(&self) -> Value {
        let mut coeffs = serde_json::Map::new();
        for (i, name) in MONOMIALS.iter().enumerate() {
            let x = &self.c[i];
            coeffs.insert(
                name.to_string(),
                json!([
                    x.a.numer().to_string(),
                    x.a.denom().to_string(),
                    x.b.numer().to_string(),
                    x.b.denom().to_string()
                ]),
            );
        }
        json!({ "radicand": self.d, "coeffs": Value::Object(coeffs) })
    }

    pub fn from_json(v: &Value) -> Result<QForm> {
        let obj = v.as_object().ok_or_else(|| Error::Parse("form literal must be an object".into()))?;
        let d = obj
            .get("radicand")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("missing integer field 'radicand'".into()))?;
        let coeffs = obj
            .get("coeffs")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Parse("missing object field 'coeffs'".into()))?;
        let mut c = zero_coeffs();
        for (i, name) in MONOMIALS.iter().enumerate() {
            if let Some(entry) = coeffs.get(*name) {
                c[i] = parse_coeff(entry, d)?;
            }
        }
        for (name, _) in coeffs {
            if !MONOMIALS.contains(&name.as_str()) {
                return Err(Error::Parse(format!("unknown coefficient '{name}'")));
            }
        }
        QForm::new(c)
    }
}

#[derive(Clone, Debug)]
pub enum NormalizedForm {
    /// (λQ, λ) with the cube root exact in the field.
    Exact(QForm, Scalar),
    /// Float-scaled mirror; flagged inexact.
    Float(F64Form, f64),
}

impl NormalizedForm {
    pub fn lambda_f64(&self) -> f64 {
        match self {
            NormalizedForm::Exact(_, s) => s.to_f64(),
            NormalizedForm::Float(_, l) => *l,
        }
    }

    pub fn coeffs_f64(&self) -> F64Form {
        match self {
            NormalizedForm::Exact(q, _) => q.to_f64(),
            NormalizedForm::Float(c, _) => *c,
        }
    }
}

/// Denominator-cleared integer mirror of a form.
#[derive(Clone, Debug)]
pub struct ClearedForm {
    pub p: [i128; 6],
    pub q: [i128; 6],
    pub d: u64,
    pub scale: BigInt,
}

impl ClearedForm {
    /// (rational, irrational) integer parts of `scale·Q(m)`; None on overflow.
    pub fn eval(&self, m: &[i64; 3]) -> Option<(i128, i128)> {
        let x = m[0] as i128;
        let y = m[1] as i128;
        let z = m[2] as i128;
        let mono = [
            x.checked_mul(x)?,
            y.checked_mul(y)?,
            z.checked_mul(z)?,
            x.checked_mul(y)?,
            x.checked_mul(z)?,
            y.checked_mul(z)?,
        ];
        let mut p = 0i128;
        let mut q = 0i128;
        for i in 0..6 {
            p = p.checked_add(self.p[i].checked_mul(mono[i])?)?;
            q = q.checked_add(self.q[i].checked_mul(mono[i])?)?;
        }
        Some((p, q))
    }

    /// Exact test Q(m) = 0.
    pub fn is_isotropic(&self, m: &[i64; 3]) -> Option<bool> {
        let (p, q) = self.eval(m)?;
        if self.d == 1 {
            Some(p + q == 0)
        } else {
            Some(p == 0 && q == 0)
        }
    }
}

fn zero_coeffs() -> [Scalar; 6] {
    [
        Scalar::zero(),
        Scalar::zero(),
        Scalar::zero(),
        Scalar::zero(),
        Scalar::zero(),
        Scalar::zero(),
    ]
}

fn parse_coeff(v: &Value, d: u64) -> Result<Scalar> {
    let arr = v.as_array().ok_or_else(|| Error::Parse("coefficient must be an array".into()))?;
    let part = |i: usize| -> Result<BigInt> {
        let item = &arr[i];
        if let Some(n) = item.as_i64() {
            return Ok(BigInt::from(n));
        }
        if let Some(s) = item.as_str() {
            return s.parse::<BigInt>().map_err(|e| Error::Parse(format!("bad integer '{s}': {e}")));
        }
        Err(Error::Parse("coefficient entries must be integers".into()))
    };
    match arr.len() {
        2 => {
            let p = part(0)?;
            let q = part(1)?;
            if q.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            Scalar::new(BigRational::new(p, q), BigRational::zero(), d)
        }
        4 => {
            let p = part(0)?;
            let q = part(1)?;
            let pp = part(2)?;
            let qq = part(3)?;
            if q.is_zero() || qq.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            Scalar::new(BigRational::new(p, q), BigRational::new(pp, qq), d)
        }
        _ => Err(Error::Parse("coefficient must be [p,q] or [p,q,p',q']".into())),
    }
}

/// Exact 1/cbrt of a positive rational, when it exists in Q.
fn rational_inv_cbrt(x: &BigRational) -> Option<BigRational> {
    if !x.is_positive() {
        return None;
    }
    let num = icbrt(&x.numer().abs())?;
    let den = icbrt(&x.denom().abs())?;
    Some(BigRational::new(den, num))
}

fn icbrt(n: &BigInt) -> Option<BigInt> {
    if n.is_zero() {
        return Some(BigInt::zero());
    }
    let mut lo = BigInt::from(0);
    let mut hi = BigInt::from(1) << (n.bits() / 3 + 2);
    while &lo < &hi {
        let mid: BigInt = (&lo + &hi + 1) / 2;
        if &(&mid * &mid * &mid) <= n {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    if &(&lo * &lo * &lo) == n {
        Some(lo)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat3::vec_from_int;

    #[test]
    fn q0_point_values() {
        let q = QForm::q0();
        assert_eq!(q.evaluate_int(&[1, 0, 0]).signum(), 0);
        assert_eq!(q.evaluate_int(&[1, 2, 2]).signum(), 0);
        assert_eq!(q.evaluate_int(&[0, 1, 2]), Scalar::from_int(1));
    }

    #[test]
    fn dual_of_q0_is_q0() {
        let q = QForm::q0();
        assert_eq!(q.dual().unwrap(), q);
        let qq = q.dual().unwrap().dual().unwrap();
        assert_eq!(qq, q);
    }

    #[test]
    fn dual_of_diagonal() {
        let q = QForm::diagonal(1, 1, -1);
        assert_eq!(q.dual().unwrap(), q);
        let q2 = QForm::diagonal(2, 1, -1);
        let dual = q2.dual().unwrap();
        let mut expect = zero_coeffs();
        expect[0] = Scalar::from_ratio(1, 2);
        expect[1] = Scalar::from_int(1);
        expect[2] = Scalar::from_int(-1);
        assert_eq!(dual, QForm::new(expect).unwrap());
    }

    #[test]
    fn dual_of_degenerate_errors() {
        let mut c = zero_coeffs();
        c[0] = Scalar::from_int(1);
        let q = QForm::new(c).unwrap();
        assert!(q.dual().is_err());
    }

    #[test]
    fn transform_by_stabilizer_fixes_q0() {
        let q = QForm::q0();
        // diag(2, 1, 1/2) is a_t with e^t = 2.
        let g = [
            [Scalar::from_int(2), Scalar::zero(), Scalar::zero()],
            [Scalar::zero(), Scalar::from_int(1), Scalar::zero()],
            [Scalar::zero(), Scalar::zero(), Scalar::from_ratio(1, 2)],
        ];
        assert_eq!(q.transform(&g).unwrap(), q);
        assert_eq!(q.transform(&mat3::identity()).unwrap(), q);
    }

    #[test]
    fn transform_is_right_action() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let g = [
            [Scalar::from_int(1), Scalar::from_int(2), Scalar::from_int(0)],
            [Scalar::from_int(0), Scalar::from_int(1), Scalar::from_int(-1)],
            [Scalar::from_int(1), Scalar::from_int(0), Scalar::from_int(3)],
        ];
        let h = [
            [Scalar::from_int(0), Scalar::from_int(1), Scalar::from_int(1)],
            [Scalar::from_int(1), Scalar::from_int(1), Scalar::from_int(0)],
            [Scalar::from_int(2), Scalar::from_int(0), Scalar::from_int(1)],
        ];
        let lhs = q.transform(&g).unwrap().transform(&h).unwrap();
        let rhs = q.transform(&mat3::mat_mul(&g, &h).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn dual_commutes_with_transform() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let g = [
            [Scalar::from_int(1), Scalar::from_int(1), Scalar::from_int(0)],
            [Scalar::from_int(0), Scalar::from_int(1), Scalar::from_int(2)],
            [Scalar::from_int(0), Scalar::from_int(0), Scalar::from_int(1)],
        ];
        let gstar = mat3::transpose(&mat3::inverse(&g).unwrap());
        let lhs = q.transform(&g).unwrap().dual().unwrap();
        let rhs = q.dual().unwrap().transform(&gstar).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn normalize_det_examples() {
        // Q_0 already has |det A| = 1.
        match QForm::q0().normalize_det().unwrap() {
            NormalizedForm::Exact(q, lam) => {
                assert_eq!(q, QForm::q0());
                assert_eq!(lam, Scalar::from_int(1));
            }
            _ => panic!("expected exact normalization"),
        }
        // 2·Q_0 scales back by 1/2.
        let two = Scalar::from_int(2);
        let q2 = QForm::q0().scale(&two).unwrap();
        match q2.normalize_det().unwrap() {
            NormalizedForm::Exact(q, lam) => {
                assert_eq!(q, QForm::q0());
                assert_eq!(lam, Scalar::from_ratio(1, 2));
            }
            _ => panic!("expected exact normalization"),
        }
        let mut c = zero_coeffs();
        c[0] = Scalar::from_int(1);
        assert!(QForm::new(c).unwrap().normalize_det().is_err());
    }

    #[test]
    fn signature_examples() {
        assert_eq!(QForm::q0().signature().unwrap(), (2, 1));
        assert_eq!(QForm::diagonal(1, 1, 1).signature().unwrap(), (3, 0));
        assert_eq!(QForm::diagonal(1, 1, -1).signature().unwrap(), (2, 1));
        assert_eq!(QForm::q0_plus_sqrt2_v2v3().signature().unwrap(), (2, 1));
    }

    #[test]
    fn distance_examples() {
        let q = QForm::q0();
        assert_eq!(q.distance(&q), 0.0);
        let q2 = q.scale(&Scalar::from_int(2)).unwrap();
        assert_eq!(q.distance(&q2), 2.0);
        let irr = QForm::q0_plus_sqrt2_v2v3();
        assert!((q.distance(&irr) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn polarization_matches_matrix() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let v = vec_from_int(&[1, -2, 3]);
        let w = vec_from_int(&[0, 5, -1]);
        // Q(v,w) computed from the matrix: vᵀAw.
        let a = q.matrix();
        let av = mat3::mat_vec(&a, &w).unwrap();
        let expect = mat3::vec_dot(&v, &av).unwrap();
        assert_eq!(q.polarize(&v, &w).unwrap(), expect);
    }

    #[test]
    fn gram_identity_with_det_factor() {
        // Q(v)Q(w) − Q(v,w)² = det(A)·Q*(v×w)
        for q in [QForm::q0(), QForm::diagonal(1, 1, -1), QForm::q0_plus_sqrt2_v2v3()] {
            let det = q.det().unwrap();
            let dual = q.dual().unwrap();
            let v = vec_from_int(&[1, 0, 0]);
            let w = vec_from_int(&[0, 0, 1]);
            let lhs = q.gram_det(&v, &w).unwrap();
            let cr = mat3::vec_cross(&v, &w).unwrap();
            let rhs = det.mul(&dual.evaluate(&cr).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn json_round_trip() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let v = q.to_json();
        let back = QForm::from_json(&v).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn cleared_form_isotropy() {
        let q = QForm::q0_plus_sqrt2_v2v3();
        let c = q.cleared_i128().unwrap();
        assert_eq!(c.is_isotropic(&[1, 0, 0]), Some(true));
        assert_eq!(c.is_isotropic(&[0, 0, 1]), Some(true));
        assert_eq!(c.is_isotropic(&[1, 2, 2]), Some(false)); // √2·4 ≠ 0
        assert_eq!(c.is_isotropic(&[0, 1, 2]), Some(false));
    }
}
