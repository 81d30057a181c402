//! Small-integer number theory shared by the lattice, series and recognition code.

use alloc::vec::Vec;

pub fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Returns (g, x, y) with a·x + b·y = g = gcd(a, b) ≥ 0.
pub fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: i128, m: i128) -> Option<i128> {
    let (g, x, _) = egcd(a.rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m))
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = num_traits::Float::sqrt(n as f64) as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: i64) -> bool {
    n >= 0 && {
        let r = isqrt(n as u64);
        r * r == n as u64
    }
}

/// The odd character of conductor 4.
pub fn chi4(a: i64) -> i64 {
    match a.rem_euclid(4) {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Trial-division factorization of |n|, primes ascending.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut n = n;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn divisors_from(fac: &[(u64, u32)]) -> Vec<u64> {
    let mut ds = alloc::vec![1u64];
    for &(p, e) in fac {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

pub fn divisors(n: u64) -> Vec<u64> {
    divisors_from(&factor(n))
}

/// Σ t over divisors t of n with 4 ∤ t.
pub fn sigma_4nmid(n: u64) -> u64 {
    divisors(n).into_iter().filter(|t| t % 4 != 0).sum()
}

/// Σ χ₄(t) over divisors t of n.
pub fn r2_quarter(n: u64) -> i64 {
    divisors(n).into_iter().map(|t| chi4(t as i64)).sum()
}

/// Legendre symbol (a/p) for an odd prime p.
pub fn legendre(a: i64, p: u64) -> i64 {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Kronecker symbol (d/n) for n ≥ 1.
pub fn kronecker(d: i64, n: u64) -> i64 {
    let mut res = 1;
    for (q, e) in factor(n) {
        let s = if q == 2 {
            if d % 2 == 0 {
                0
            } else if matches!(d.rem_euclid(8), 1 | 7) {
                1
            } else {
                -1
            }
        } else {
            legendre(d, q)
        };
        if e % 2 == 1 {
            res *= s;
        } else if s == 0 {
            res = 0;
        }
    }
    res
}

/// Smallest positive quadratic non-residue modulo the odd prime p.
pub fn smallest_nonresidue(p: u64) -> u64 {
    (2..p).find(|&a| legendre(a as i64, p) == -1).unwrap_or(0)
}

/// p-adic valuation of a nonzero integer.
pub fn val_p(mut n: i128, p: u64) -> u32 {
    let p = p as i128;
    let mut v = 0;
    if n == 0 {
        return u32::MAX;
    }
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Smallest-prime-factor table for fast divisor listing.
#[derive(Debug, Clone)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub fn new(limit: u64) -> Self {
        let n = limit as usize + 1;
        let mut spf = alloc::vec![0u32; n.max(2)];
        for i in 2..n {
            if spf[i] == 0 {
                let mut j = i;
                while j < n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        SpfSieve { spf }
    }

    pub fn limit(&self) -> u64 {
        self.spf.len() as u64 - 1
    }

    /// Writes the divisors of n (unsorted) into `out`.
    pub fn divisors_into(&self, n: u64, out: &mut Vec<u64>) {
        out.clear();
        out.push(1);
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            let len = out.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p as u64;
                for i in 0..len {
                    out.push(out[i] * pk);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tables() {
        assert_eq!(sigma_4nmid(3), 4);
        assert_eq!(sigma_4nmid(6), 12);
        assert_eq!(sigma_4nmid(7), 8);
        assert_eq!(sigma_4nmid(4), 3);
        assert_eq!(smallest_nonresidue(3), 2);
        assert_eq!(smallest_nonresidue(5), 2);
        assert_eq!(smallest_nonresidue(7), 3);
        assert_eq!(kronecker(44, 17), -1);
        assert_eq!(kronecker(44, 11), 0);
        assert_eq!(divisors(12), alloc::vec![1, 2, 3, 4, 6, 12]);
    }

    #[test]
    fn sieve_matches_trial_division() {
        let s = SpfSieve::new(5000);
        let mut buf = Vec::new();
        for n in 1..5000u64 {
            s.divisors_into(n, &mut buf);
            buf.sort_unstable();
            assert_eq!(buf, divisors(n));
        }
    }
}
