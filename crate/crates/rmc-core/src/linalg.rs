//! Exact integer and rational matrix helpers.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;

/// ℤ-basis of {x ∈ ℤⁿ : A·x = 0}, as column operations on A tracked in a
/// unimodular U; the trailing columns of U span the kernel and are saturated.
pub fn integer_kernel(a: &[Vec<BigInt>], n: usize) -> Vec<Vec<BigInt>> {
    let e = ColumnEchelon::new(a, n);
    (e.rank..n)
        .map(|c| (0..n).map(|row| e.u[row][c].clone()).collect())
        .collect()
}

/// A·U = H in column echelon form with U unimodular; solves A·x = b over ℤ.
#[derive(Debug, Clone)]
pub struct ColumnEchelon {
    pub h: IntMatrix,
    pub u: IntMatrix,
    pub rank: usize,
    pivots: Vec<Option<usize>>,
}

impl ColumnEchelon {
    pub fn new(a: &[Vec<BigInt>], n: usize) -> Self {
        let mut a: IntMatrix = a.to_vec();
        let mut u: IntMatrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            BigInt::one()
                        } else {
                            BigInt::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut r = 0usize;
        let mut pivots = vec![None; a.len()];
        for i in 0..a.len() {
            if r >= n {
                break;
            }
            for j in (r + 1)..n {
                if a[i][j].is_zero() {
                    continue;
                }
                // Combine columns r and j so that a[i][j] becomes 0.
                let x = a[i][r].clone();
                let y = a[i][j].clone();
                let g = x.extended_gcd(&y);
                let (s, t) = (g.x, g.y);
                let (xg, yg) = (&x / &g.gcd, &y / &g.gcd);
                col_combine(&mut a, r, j, &s, &t, &xg, &yg);
                col_combine(&mut u, r, j, &s, &t, &xg, &yg);
            }
            if !a[i][r].is_zero() {
                pivots[i] = Some(r);
                r += 1;
            }
        }
        ColumnEchelon {
            h: a,
            u,
            rank: r,
            pivots,
        }
    }

    /// Some integer x with A·x = b, if one exists.
    pub fn solve(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        let mut y = vec![BigInt::zero(); self.rank];
        for (i, bi) in b.iter().enumerate() {
            let mut rest = bi.clone();
            for (c, yc) in y.iter().enumerate() {
                if !yc.is_zero() {
                    rest -= &self.h[i][c] * yc;
                }
            }
            match self.pivots[i] {
                Some(c) => {
                    let (q, rem) = rest.div_rem(&self.h[i][c]);
                    if !rem.is_zero() {
                        return None;
                    }
                    y[c] = q;
                }
                None if !rest.is_zero() => return None,
                None => {}
            }
        }
        let n = self.u.len();
        Some(
            (0..n)
                .map(|row| (0..self.rank).map(|c| &self.u[row][c] * &y[c]).sum())
                .collect(),
        )
    }
}

// (col_r, col_j) ← (s·col_r + t·col_j, −yg·col_r + xg·col_j); determinant s·xg + t·yg = 1.
fn col_combine(
    m: &mut IntMatrix,
    r: usize,
    j: usize,
    s: &BigInt,
    t: &BigInt,
    xg: &BigInt,
    yg: &BigInt,
) {
    for row in m.iter_mut() {
        let cr = row[r].clone();
        let cj = row[j].clone();
        row[r] = s * &cr + t * &cj;
        row[j] = xg * &cj - yg * &cr;
    }
}

pub fn mat_vec(a: &[Vec<BigInt>], x: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(u, v)| u * v).sum())
        .collect()
}

/// Coordinates of v in the given basis vectors (rows), if v lies in their ℚ-span.
pub fn solve_in_span(basis: &[Vec<BigInt>], v: &[BigInt]) -> Option<Vec<BigRational>> {
    let k = basis.len();
    let n = v.len();
    // Columns are basis vectors; augmented with v.
    let mut m: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..k)
                .map(|j| BigRational::from_integer(basis[j][i].clone()))
                .collect();
            row.push(BigRational::from_integer(v[i].clone()));
            row
        })
        .collect();
    let mut piv = vec![usize::MAX; k];
    let mut r = 0;
    for c in 0..k {
        let Some(pr) = (r..n).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..n {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..=k {
                    let t = &m[r][j] * &f;
                    m[i][j] = &m[i][j] - t;
                }
            }
        }
        piv[c] = r;
        r += 1;
    }
    if (r..n).any(|i| !m[i][k].is_zero()) {
        return None;
    }
    Some(
        (0..k)
            .map(|c| {
                if piv[c] == usize::MAX {
                    BigRational::zero()
                } else {
                    m[piv[c]][k].clone()
                }
            })
            .collect(),
    )
}

/// Whether v is an integer combination of the given rows.
pub fn in_integer_span(basis: &[Vec<BigInt>], v: &[BigInt]) -> bool {
    solve_in_span(basis, v).is_some_and(|c| c.iter().all(|x| x.is_integer()))
}

/// Determinant by fraction-free Bareiss elimination.
pub fn det(a: &[Vec<BigInt>]) -> BigInt {
    let n = a.len();
    let mut m = a.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

pub fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[BigInt]) -> BigInt {
    dot(a, a)
}

pub fn max_abs(a: &[BigInt]) -> BigInt {
    a.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn kernel_is_saturated() {
        // 2x + 4y = 0 has kernel generated by (−2, 1), not (−4, 2).
        let k = integer_kernel(&[bi(&[2, 4])], 2);
        assert_eq!(k.len(), 1);
        assert!(in_integer_span(&k, &bi(&[-2, 1])));
        let k = integer_kernel(&[bi(&[3, 6, 3, 6, 12, 12])], 6);
        assert_eq!(k.len(), 5);
        for v in [
            [-2, 1, 0, 0, 0, 0],
            [-1, 0, 1, 0, 0, 0],
            [0, -1, 0, 1, 0, 0],
            [0, 0, 0, 0, 1, -1],
        ] {
            assert!(in_integer_span(&k, &bi(&v)));
        }
        let a = [bi(&[3, 6, 3, 6, 12, 12])];
        for v in &k {
            assert!(mat_vec(&a, v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn echelon_solve() {
        let a = [bi(&[2, 4, 6]), bi(&[1, 0, 1])];
        let e = ColumnEchelon::new(&a, 3);
        let x = e.solve(&bi(&[10, 3])).unwrap();
        assert_eq!(mat_vec(&a, &x), bi(&[10, 3]));
        assert!(e.solve(&bi(&[1, 0])).is_none());
    }

    #[test]
    fn determinant() {
        let m = vec![bi(&[2, 1, 0]), bi(&[1, 3, 1]), bi(&[0, 1, 4])];
        assert_eq!(det(&m), BigInt::from(18));
    }
}
