//! Small fixed-size vector/matrix helpers over f64.
//!
//! Everything is sup-norm based: `norm` of a vector is the max absolute
//! component, of a matrix the max absolute entry.

pub type V3 = [f64; 3];
pub type M3 = [[f64; 3]; 3];

pub fn norm_sup(v: &V3) -> f64 {
    v[0].abs().max(v[1].abs()).max(v[2].abs())
}

pub fn norm_eucl(v: &V3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn mat_norm_sup(m: &M3) -> f64 {
    let mut n = 0f64;
    for row in m {
        for x in row {
            n = n.max(x.abs());
        }
    }
    n
}

pub fn dot(v: &V3, w: &V3) -> f64 {
    v[0] * w[0] + v[1] * w[1] + v[2] * w[2]
}

pub fn cross(v: &V3, w: &V3) -> V3 {
    [
        v[1] * w[2] - v[2] * w[1],
        v[2] * w[0] - v[0] * w[2],
        v[0] * w[1] - v[1] * w[0],
    ]
}

pub fn scale(v: &V3, s: f64) -> V3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

pub fn add(v: &V3, w: &V3) -> V3 {
    [v[0] + w[0], v[1] + w[1], v[2] + w[2]]
}

pub fn sub(v: &V3, w: &V3) -> V3 {
    [v[0] - w[0], v[1] - w[1], v[2] - w[2]]
}

pub fn neg(v: &V3) -> V3 {
    [-v[0], -v[1], -v[2]]
}

pub fn mat_vec(m: &M3, v: &V3) -> V3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat_mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn transpose(m: &M3) -> M3 {
    let mut t = [[0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn det(m: &M3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn inverse(m: &M3) -> Option<M3> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let inv_d = 1.0 / d;
    let mut adj = [[0f64; 3]; 3];
    adj[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    adj[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    adj[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    adj[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    adj[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    adj[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    adj[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    adj[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    adj[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let mut out = [[0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] * inv_d;
        }
    }
    Some(out)
}

pub const IDENTITY: M3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn column(m: &M3, j: usize) -> V3 {
    [m[0][j], m[1][j], m[2][j]]
}

pub fn from_columns(c0: &V3, c1: &V3, c2: &V3) -> M3 {
    [
        [c0[0], c1[0], c2[0]],
        [c0[1], c1[1], c2[1]],
        [c0[2], c1[2], c2[2]],
    ]
}

/// Q_0(v) = v₂² − 2·v₁·v₃ for float vectors.
pub fn q0(v: &V3) -> f64 {
    v[1] * v[1] - 2.0 * v[0] * v[2]
}

/// Jv = (v₃, −v₂, v₁); an involution preserving the sup norm and Q_0.
pub fn j_apply(v: &V3) -> V3 {
    [v[2], -v[1], v[0]]
}

pub const J_MAT: M3 = [[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_orthogonal() {
        let v = [1.0, 2.0, 3.0];
        let w = [-4.0, 0.5, 2.0];
        let c = cross(&v, &w);
        assert!(dot(&c, &v).abs() < 1e-12);
        assert!(dot(&c, &w).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let m = [[2.0, 1.0, 0.0], [0.5, 1.0, -1.0], [0.0, 3.0, 1.0]];
        let inv = inverse(&m).unwrap();
        let prod = mat_mul(&m, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn j_preserves_q0_and_norm() {
        let v = [1.5, -2.0, 0.25];
        let jv = j_apply(&v);
        assert_eq!(q0(&v), q0(&jv));
        assert_eq!(norm_sup(&v), norm_sup(&jv));
        assert_eq!(j_apply(&jv), v);
    }
}
