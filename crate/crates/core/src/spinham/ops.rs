//! Spin-1/2 operators on tensor-product spaces.
//!
//! Site 0 is the most significant bit of a basis index; bit value 0 is spin
//! up and 1 is spin down, so `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` are indices 0..4 for two
//! sites.

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix4};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `[S_x, S_y, S_z]` in the `(↑, ↓)` basis.
pub fn spin_matrices() -> [Matrix2<C64>; 3] {
    let h = 0.5;
    [
        Matrix2::new(ZERO, C64::new(h, 0.0), C64::new(h, 0.0), ZERO),
        Matrix2::new(ZERO, C64::new(0.0, -h), C64::new(0.0, h), ZERO),
        Matrix2::new(C64::new(h, 0.0), ZERO, ZERO, C64::new(-h, 0.0)),
    ]
}

/// `Σ_ab v_a S_a` for a real 3-vector `v`.
pub fn linear_operator(v: [f64; 3]) -> Matrix2<C64> {
    let s = spin_matrices();
    s[0] * C64::from(v[0]) + s[1] * C64::from(v[1]) + s[2] * C64::from(v[2])
}

/// `Σ_ab T_ab S_a ⊗ S_b` as a 4×4 matrix (first spin most significant).
pub fn bilinear_operator(t: &Matrix3<f64>) -> Matrix4<C64> {
    let s = spin_matrices();
    let mut out = Matrix4::<C64>::zeros();
    for a in 0..3 {
        for b in 0..3 {
            let c = t[(a, b)];
            if c == 0.0 {
                continue;
            }
            out += s[a].kronecker(&s[b]) * C64::from(c);
        }
    }
    out
}

fn bit(state: usize, nsites: usize, site: usize) -> usize {
    (state >> (nsites - 1 - site)) & 1
}

fn with_bit(state: usize, nsites: usize, site: usize, value: usize) -> usize {
    let shift = nsites - 1 - site;
    (state & !(1 << shift)) | (value << shift)
}

/// Adds a single-site operator acting on `site` to `h`.
pub fn add_one_site(h: &mut DMatrix<C64>, nsites: usize, site: usize, op: &Matrix2<C64>) {
    let dim = 1usize << nsites;
    debug_assert_eq!(h.nrows(), dim);
    for s in 0..dim {
        let b = bit(s, nsites, site);
        for b2 in 0..2 {
            let amp = op[(b2, b)];
            if amp != ZERO {
                h[(with_bit(s, nsites, site, b2), s)] += amp;
            }
        }
    }
}

/// Adds a two-site operator acting on `(p, q)` to `h`; `op` is indexed as
/// `2 b_p + b_q`.
pub fn add_two_site(h: &mut DMatrix<C64>, nsites: usize, p: usize, q: usize, op: &Matrix4<C64>) {
    debug_assert_ne!(p, q);
    let dim = 1usize << nsites;
    debug_assert_eq!(h.nrows(), dim);
    for s in 0..dim {
        let col = 2 * bit(s, nsites, p) + bit(s, nsites, q);
        for row in 0..4 {
            let amp = op[(row, col)];
            if amp != ZERO {
                let s2 = with_bit(with_bit(s, nsites, p, row >> 1), nsites, q, row & 1);
                h[(s2, s)] += amp;
            }
        }
    }
}

/// Replaces `h` by its Hermitian part, removing rounding asymmetry.
pub fn hermitize(h: &mut DMatrix<C64>) {
    let n = h.nrows();
    for i in 0..n {
        h[(i, i)].im = 0.0;
        for j in 0..i {
            let v = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
}
