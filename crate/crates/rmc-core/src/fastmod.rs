//! Montgomery arithmetic modulo p^W < 2^62 and in the unramified extension over it.

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::padic::{pow_big, ExtKind, PadicApprox, QuadExtApprox};

/// ℤ/p^W in Montgomery form with R = 2^64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Zpw {
    pub p: u64,
    pub w: u32,
    pub m: u64,
    ninv: u64,
    r2: u64,
}

impl Zpw {
    /// Largest W with p^W < 2^62.
    pub fn max_digits(p: u64) -> u32 {
        let mut w = 0;
        let mut m: u128 = 1;
        while m * (p as u128) < (1u128 << 62) {
            m *= p as u128;
            w += 1;
        }
        w
    }

    pub fn new(p: u64, w: u32) -> Result<Self> {
        if w == 0 || w > Self::max_digits(p) {
            return Err(Error::Invalid(alloc::format!(
                "{w} digits exceed the fast kernel capacity {} at p = {p}",
                Self::max_digits(p)
            )));
        }
        let m = p.pow(w);
        // Newton iteration for m⁻¹ mod 2^64.
        let mut inv: u64 = 1;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(m.wrapping_mul(inv)));
        }
        let ninv = inv.wrapping_neg();
        let r = ((1u128 << 64) % m as u128) as u64;
        let r2 = ((r as u128 * r as u128) % m as u128) as u64;
        Ok(Zpw { p, w, m, ninv, r2 })
    }

    #[inline(always)]
    pub fn redc(&self, t: u128) -> u64 {
        let k = (t as u64).wrapping_mul(self.ninv);
        let u = ((t + k as u128 * self.m as u128) >> 64) as u64;
        if u >= self.m {
            u - self.m
        } else {
            u
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.m {
            s - self.m
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.m - b
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.m - a
        }
    }

    #[inline(always)]
    pub fn to_mont(&self, x: u64) -> u64 {
        self.mul(x % self.m, self.r2)
    }

    #[inline(always)]
    pub fn from_i64(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.m as i64) as u64;
        self.mul(r, self.r2)
    }

    #[inline(always)]
    pub fn from_mont(&self, x: u64) -> u64 {
        self.redc(x as u128)
    }

    pub fn one(&self) -> u64 {
        self.to_mont(1)
    }

    pub fn pow(&self, mut b: u64, mut e: u64) -> u64 {
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    /// Inverse of a unit via Euler's theorem.
    pub fn inv(&self, a: u64) -> u64 {
        let phi = self.m / self.p * (self.p - 1);
        self.pow(a, phi - 1)
    }
}

/// a + bω with ω² = u, both components in Montgomery form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct E2 {
    pub a: u64,
    pub b: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fp2 {
    pub z: Zpw,
    pub u: u64,
    u_mont: u64,
}

impl Fp2 {
    pub fn new(p: u64, w: u32, u: u64) -> Result<Self> {
        let z = Zpw::new(p, w)?;
        Ok(Fp2 {
            z,
            u,
            u_mont: z.to_mont(u),
        })
    }

    pub fn one(&self) -> E2 {
        E2 {
            a: self.z.one(),
            b: 0,
        }
    }

    #[inline(always)]
    pub fn mul(&self, x: E2, y: E2) -> E2 {
        let z = &self.z;
        let bb = z.mul(z.mul(x.b, y.b), self.u_mont);
        E2 {
            a: z.add(z.mul(x.a, y.a), bb),
            b: z.add(z.mul(x.a, y.b), z.mul(x.b, y.a)),
        }
    }

    #[inline(always)]
    pub fn add(&self, x: E2, y: E2) -> E2 {
        E2 {
            a: self.z.add(x.a, y.a),
            b: self.z.add(x.b, y.b),
        }
    }

    #[inline(always)]
    pub fn scale(&self, x: E2, s: u64) -> E2 {
        E2 {
            a: self.z.mul(x.a, s),
            b: self.z.mul(x.b, s),
        }
    }

    pub fn neg(&self, x: E2) -> E2 {
        E2 {
            a: self.z.neg(x.a),
            b: self.z.neg(x.b),
        }
    }

    /// Inverse of a unit: conj / norm.
    pub fn inv(&self, x: E2) -> E2 {
        let z = &self.z;
        let n = z.sub(z.mul(x.a, x.a), z.mul(z.mul(x.b, x.b), self.u_mont));
        let ni = z.inv(n);
        E2 {
            a: z.mul(x.a, ni),
            b: z.mul(z.neg(x.b), ni),
        }
    }

    pub fn pow(&self, x: E2, e: i64) -> E2 {
        let mut b = if e < 0 { self.inv(x) } else { x };
        let mut e = e.unsigned_abs();
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    #[inline(always)]
    pub fn divisible_by_p(&self, x: E2) -> bool {
        x.a % self.z.p == 0 && x.b % self.z.p == 0
    }

    /// x/p for x ≡ 0 mod p; the top digit of the result is unknown.
    #[inline(always)]
    pub fn div_p(&self, x: E2) -> E2 {
        E2 {
            a: x.a / self.z.p,
            b: x.b / self.z.p,
        }
    }

    pub fn from_quad(&self, x: &QuadExtApprox) -> Result<E2> {
        let comp = |c: &PadicApprox| -> Result<u64> {
            if c.is_zero() {
                return Ok(0);
            }
            if c.valuation().unwrap() < 0 {
                return Err(Error::Invalid("fast kernel needs integral inputs".into()));
            }
            let r: BigUint = c.residue(self.z.w)?;
            Ok(self.z.to_mont(r.to_u64().unwrap()))
        };
        Ok(E2 {
            a: comp(x.a())?,
            b: comp(x.b())?,
        })
    }

    /// Back to an exact approximation with `digits` significant digits.
    pub fn to_quad(&self, x: E2, digits: u32) -> QuadExtApprox {
        let p = self.z.p;
        let c = |v: u64| {
            PadicApprox::from_bigint(
                p,
                digits,
                &BigInt::from(self.z.from_mont(v) % pow_big(p, digits).to_u64().unwrap()),
            )
        };
        let qa = c(x.a);
        let qb = c(x.b);
        QuadExtApprox::new(ExtKind::Unramified, qa, qb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn montgomery_roundtrip() {
        let z = Zpw::new(5, 26).unwrap();
        for x in [0u64, 1, 2, 57, 123456789, z.m - 1] {
            assert_eq!(z.from_mont(z.to_mont(x)), x);
        }
        let a = z.from_i64(-1);
        assert_eq!(z.from_mont(z.mul(a, a)), 1);
        let x = z.from_i64(7);
        assert_eq!(z.from_mont(z.mul(x, z.inv(x))), 1);
        assert!(Zpw::new(5, 27).is_err());
        assert_eq!(Zpw::max_digits(3), 39);
    }

    #[test]
    fn fp2_inverse() {
        let f = Fp2::new(5, 20, 2).unwrap();
        let x = E2 {
            a: f.z.from_i64(3),
            b: f.z.from_i64(4),
        };
        let y = f.mul(x, f.inv(x));
        assert_eq!(y, f.one());
        assert_eq!(f.mul(f.pow(x, 5), f.pow(x, -5)), f.one());
    }
}
