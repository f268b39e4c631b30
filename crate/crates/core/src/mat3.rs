//! Exact 3×3 matrices and vectors over [`Scalar`].

use crate::error::{Error, Result};
use crate::geom::{M3, V3};
use crate::scalar::Scalar;

pub type Vec3E = [Scalar; 3];
pub type Mat3E = [[Scalar; 3]; 3];

pub fn vec_from_int(m: &[i64; 3]) -> Vec3E {
    [Scalar::from_int(m[0]), Scalar::from_int(m[1]), Scalar::from_int(m[2])]
}

pub fn vec_to_f64(v: &Vec3E) -> V3 {
    [v[0].to_f64(), v[1].to_f64(), v[2].to_f64()]
}

pub fn vec_add(v: &Vec3E, w: &Vec3E) -> Result<Vec3E> {
    Ok([v[0].add(&w[0])?, v[1].add(&w[1])?, v[2].add(&w[2])?])
}

pub fn vec_neg(v: &Vec3E) -> Vec3E {
    [v[0].neg(), v[1].neg(), v[2].neg()]
}

pub fn vec_cross(v: &Vec3E, w: &Vec3E) -> Result<Vec3E> {
    Ok([
        v[1].mul(&w[2])?.sub(&v[2].mul(&w[1])?)?,
        v[2].mul(&w[0])?.sub(&v[0].mul(&w[2])?)?,
        v[0].mul(&w[1])?.sub(&v[1].mul(&w[0])?)?,
    ])
}

pub fn vec_dot(v: &Vec3E, w: &Vec3E) -> Result<Scalar> {
    v[0].mul(&w[0])?.add(&v[1].mul(&w[1])?)?.add(&v[2].mul(&w[2])?)
}

pub fn identity() -> Mat3E {
    let z = Scalar::zero;
    let o = Scalar::one;
    [[o(), z(), z()], [z(), o(), z()], [z(), z(), o()]]
}

pub fn mat_from_f64_int(m: &M3) -> Option<Mat3E> {
    let mut out = identity();
    for i in 0..3 {
        for j in 0..3 {
            let x = m[i][j];
            if x.fract() != 0.0 || x.abs() > 1e15 {
                return None;
            }
            out[i][j] = Scalar::from_int(x as i64);
        }
    }
    Some(out)
}

pub fn mat_to_f64(m: &Mat3E) -> M3 {
    let mut out = [[0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[i][j].to_f64();
        }
    }
    out
}

pub fn mat_vec(m: &Mat3E, v: &Vec3E) -> Result<Vec3E> {
    let mut out = [Scalar::zero(), Scalar::zero(), Scalar::zero()];
    for i in 0..3 {
        let mut acc = Scalar::zero();
        for j in 0..3 {
            acc = acc.add(&m[i][j].mul(&v[j])?)?;
        }
        out[i] = acc;
    }
    Ok(out)
}

pub fn mat_mul(a: &Mat3E, b: &Mat3E) -> Result<Mat3E> {
    let mut out = identity();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = Scalar::zero();
            for k in 0..3 {
                acc = acc.add(&a[i][k].mul(&b[k][j])?)?;
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

pub fn transpose(m: &Mat3E) -> Mat3E {
    let mut out = identity();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i].clone();
        }
    }
    out
}

pub fn det(m: &Mat3E) -> Result<Scalar> {
    let m00 = m[1][1].mul(&m[2][2])?.sub(&m[1][2].mul(&m[2][1])?)?;
    let m01 = m[1][0].mul(&m[2][2])?.sub(&m[1][2].mul(&m[2][0])?)?;
    let m02 = m[1][0].mul(&m[2][1])?.sub(&m[1][1].mul(&m[2][0])?)?;
    m[0][0]
        .mul(&m00)?
        .sub(&m[0][1].mul(&m01)?)?
        .add(&m[0][2].mul(&m02)?)
}

pub fn adjugate(m: &Mat3E) -> Result<Mat3E> {
    let c = |i1: usize, j1: usize, i2: usize, j2: usize| -> Result<Scalar> {
        m[i1][j1].mul(&m[i2][j2])?.sub(&m[i1][j2].mul(&m[i2][j1])?)
    };
    Ok([
        [c(1, 1, 2, 2)?, c(0, 2, 2, 1)?, c(0, 1, 1, 2)?],
        [c(1, 2, 2, 0)?, c(0, 0, 2, 2)?, c(0, 2, 1, 0)?],
        [c(1, 0, 2, 1)?, c(0, 1, 2, 0)?, c(0, 0, 1, 1)?],
    ])
}

pub fn inverse(m: &Mat3E) -> Result<Mat3E> {
    let d = det(m)?;
    if d.is_zero() {
        return Err(Error::Degenerate("singular matrix".into()));
    }
    let adj = adjugate(m)?;
    let mut out = identity();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j].div(&d)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_integer_matrix() {
        let m = [
            [Scalar::from_int(1), Scalar::from_int(2), Scalar::from_int(0)],
            [Scalar::from_int(0), Scalar::from_int(1), Scalar::from_int(3)],
            [Scalar::from_int(0), Scalar::from_int(0), Scalar::from_int(1)],
        ];
        let inv = inverse(&m).unwrap();
        let prod = mat_mul(&m, &inv).unwrap();
        assert_eq!(prod, identity());
    }

    #[test]
    fn adjugate_times_matrix_is_det_identity() {
        let m = [
            [Scalar::from_int(2), Scalar::from_int(-1), Scalar::from_int(0)],
            [Scalar::from_int(1), Scalar::from_int(3), Scalar::from_int(1)],
            [Scalar::from_int(0), Scalar::from_int(1), Scalar::from_int(1)],
        ];
        let d = det(&m).unwrap();
        let adj = adjugate(&m).unwrap();
        let prod = mat_mul(&adj, &m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { d.clone() } else { Scalar::zero() };
                assert_eq!(prod[i][j], expect);
            }
        }
    }
}
