//! Prime-field and polynomial arithmetic.
//!
//! Elements are plain [`Fe`] residues; the modulus travels separately in a
//! [`PrimeField`] value so that a share vector costs eight bytes per entry.
//! Moduli below 2³² use a Barrett reduction on 64-bit products, larger ones
//! (up to 2⁶³) fall back to 128-bit intermediates.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A residue in `[0, p)` for the modulus of the [`PrimeField`] that produced it.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fe(u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Largest modulus accepted: residues stay in 63 bits.
pub const MAX_MODULUS: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
    // floor((2^64 - 1) / p) when p < 2^32, otherwise 0 (u128 path).
    barrett: u64,
    bits: u32,
}

impl PrimeField {
    /// Builds the field `Z_p`. Rejects composites and moduli at or above 2⁶³.
    pub fn new(p: u64) -> Result<Self> {
        if p >= MAX_MODULUS {
            return Err(Error::invalid(format!("modulus {p} is not below 2^63")));
        }
        if !is_prime(p) {
            return Err(Error::invalid(format!("modulus {p} is not prime")));
        }
        let barrett = if p < (1 << 32) { u64::MAX / p } else { 0 };
        Ok(PrimeField { p, barrett, bits: 64 - (p - 1).leading_zeros() })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// ⌈log₂ p⌉, the wire size of one element.
    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn elem(&self, v: u64) -> Fe {
        Fe(v % self.p)
    }

    pub fn elem_i64(&self, v: i64) -> Fe {
        Fe(v.rem_euclid(self.p as i64) as u64)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let s = a.0 + b.0;
        Fe(if s >= self.p { s - self.p } else { s })
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        Fe(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 })
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        Fe(if a.0 == 0 { 0 } else { self.p - a.0 })
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if self.barrett != 0 {
            let x = a.0 * b.0;
            let q = ((x as u128 * self.barrett as u128) >> 64) as u64;
            let mut r = x - q * self.p;
            if r >= self.p {
                r -= self.p;
            }
            if r >= self.p {
                r -= self.p;
            }
            Fe(r)
        } else {
            Fe(((a.0 as u128 * b.0 as u128) % self.p as u128) as u64)
        }
    }

    /// `a·b + c`
    #[inline]
    pub fn mul_add(&self, a: Fe, b: Fe, c: Fe) -> Fe {
        self.add(self.mul(a, b), c)
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut base = a;
        let mut acc = Fe(1 % self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.0 == 0 {
            return Err(Error::invalid("zero has no multiplicative inverse"));
        }
        let (mut r0, mut r1) = (self.p as i128, a.0 as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(Fe(t0.rem_euclid(self.p as i128) as u64))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Canonical square root: the root `r` with `r ≤ (p-1)/2`, or `None` for
    /// non-residues. Tonelli–Shanks.
    pub fn sqrt(&self, a: Fe) -> Option<Fe> {
        let p = self.p;
        if a.0 == 0 {
            return Some(Fe(0));
        }
        if p == 2 {
            return Some(a);
        }
        if self.pow(a, (p - 1) / 2) != Fe(1) {
            return None;
        }
        let root = if p % 4 == 3 {
            self.pow(a, (p + 1) / 4)
        } else {
            let mut q = p - 1;
            let mut s = 0u32;
            while q.is_multiple_of(2) {
                q /= 2;
                s += 1;
            }
            let mut z = Fe(2);
            while self.pow(z, (p - 1) / 2) == Fe(1) {
                z = Fe(z.0 + 1);
            }
            let mut m = s;
            let mut c = self.pow(z, q);
            let mut t = self.pow(a, q);
            let mut r = self.pow(a, q.div_ceil(2));
            while t != Fe(1) {
                let mut i = 0u32;
                let mut t2 = t;
                while t2 != Fe(1) {
                    t2 = self.mul(t2, t2);
                    i += 1;
                }
                let b = self.pow(c, 1u64 << (m - i - 1));
                m = i;
                c = self.mul(b, b);
                t = self.mul(t, c);
                r = self.mul(r, b);
            }
            r
        };
        Some(if root.0 <= (p - 1) / 2 { root } else { self.neg(root) })
    }

    /// Uniform element of `Z_p`.
    #[inline]
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.random_range(0..self.p))
    }

    /// The evaluation point assigned to quorum position `i` (0-based), i.e. `x = i + 1`.
    #[inline]
    pub fn point(&self, i: usize) -> Fe {
        self.elem(i as u64 + 1)
    }
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `≥ from`.
pub fn next_prime(from: u64) -> Option<u64> {
    (from.max(2)..MAX_MODULUS).find(|&c| is_prime(c))
}

/// Largest prime `< below`.
pub fn prev_prime(below: u64) -> Option<u64> {
    (2..below).rev().find(|&c| is_prime(c))
}

/// `⌈(3/2)·k·n²·log₂ n⌉`, the key-domain size above which key collisions
/// among `n` uniform keys become unlikely.
pub fn collision_bound(n: usize, k: f64) -> u64 {
    let n = n as f64;
    (1.5 * k * n * n * n.log2()).ceil().max(1.0) as u64
}

/// Key domain `M = 2^⌊log₂(p/2)⌋` for a prime `p`: the largest power of two
/// strictly below `p/2`, so differences of two keys never wrap modulo `p`.
pub fn key_domain_bits(p: u64) -> u32 {
    // floor(log2(p / 2)) for odd p equals floor(log2(p)) - 1.
    63 - p.leading_zeros() - 1
}

/// Prime and key-domain exponent for a run with `n` parties and collision
/// parameter `k`.
///
/// The key domain must be a power of two `M = 2^m ≥ collision_bound(n, k)`.
/// The prime is the largest one below `2^(m+2)`, which puts it in
/// `(2^(m+1), 2^(m+2))`: keys stay under `p/2` and `p` sits just below a power
/// of two, so uniform bit-composed masks fall in `[0, p)` almost always.
pub fn run_prime(n: usize, k: f64) -> Result<(u64, u32)> {
    let bound = collision_bound(n, k);
    let m = 64 - (bound - 1).leading_zeros().min(63);
    let m = m.max(1);
    if m + 2 >= 63 {
        return Err(Error::config(format!("collision bound {bound} needs a prime above 2^63")));
    }
    let p = prev_prime(1u64 << (m + 2)).expect("Bertrand's postulate");
    debug_assert!(p > (1u64 << (m + 1)));
    Ok((p, m))
}

/// Dense polynomial over `Z_p`, lowest-degree coefficient first. Trailing zero
/// coefficients are trimmed; the zero polynomial is `[0]` with degree 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<Fe>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Fe>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&Fe::ZERO) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Fe::ZERO);
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![Fe::ZERO] }
    }

    pub fn constant(c: Fe) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    /// Horner evaluation.
    #[inline]
    pub fn eval(&self, f: &PrimeField, x: Fe) -> Fe {
        self.coeffs.iter().rev().fold(Fe::ZERO, |acc, &c| f.mul_add(acc, x, c))
    }

    /// Evaluations at the quorum points `1..=count`.
    pub fn eval_points(&self, f: &PrimeField, count: usize) -> Vec<Fe> {
        (0..count).map(|i| self.eval(f, f.point(i))).collect()
    }

    pub fn add(&self, f: &PrimeField, other: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[Fe], i: usize| v.get(i).copied().unwrap_or(Fe::ZERO);
        Polynomial::new(
            (0..len).map(|i| f.add(get(&self.coeffs, i), get(&other.coeffs, i))).collect(),
        )
    }

    pub fn mul(&self, f: &PrimeField, other: &Polynomial) -> Polynomial {
        let mut out = vec![Fe::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = f.mul_add(a, b, out[i + j]);
            }
        }
        Polynomial::new(out)
    }

    /// Long division; errors on a zero divisor.
    pub fn div_rem(&self, f: &PrimeField, divisor: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        if divisor.is_zero() {
            return Err(Error::invalid("division by the zero polynomial"));
        }
        let dd = divisor.degree();
        if self.degree() < dd {
            return Ok((Polynomial::zero(), self.clone()));
        }
        let lead_inv = f.inv(divisor.coeffs[dd])?;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Fe::ZERO; self.degree() - dd + 1];
        for i in (0..quot.len()).rev() {
            let c = f.mul(rem[i + dd], lead_inv);
            quot[i] = c;
            if c.is_zero() {
                continue;
            }
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[i + j] = f.sub(rem[i + j], f.mul(c, dc));
            }
        }
        rem.truncate(dd.max(1));
        Ok((Polynomial::new(quot), Polynomial::new(rem)))
    }
}

/// The unique polynomial of degree `≤ d` through the first `d + 1` points.
pub fn lagrange_interpolate(f: &PrimeField, points: &[(Fe, Fe)], d: usize) -> Result<Polynomial> {
    if points.len() < d + 1 {
        return Err(Error::invalid(format!(
            "need {} points for degree {d}, got {}",
            d + 1,
            points.len()
        )));
    }
    let pts = &points[..d + 1];
    for (i, a) in pts.iter().enumerate() {
        if pts[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::invalid(format!("duplicate evaluation point {}", a.0)));
        }
    }
    // master(x) = prod (x - x_j), lowest degree first.
    let mut master = vec![Fe::ONE];
    for &(xj, _) in pts {
        let mut next = vec![Fe::ZERO; master.len() + 1];
        for (k, &c) in master.iter().enumerate() {
            next[k + 1] = f.add(next[k + 1], c);
            next[k] = f.sub(next[k], f.mul(c, xj));
        }
        master = next;
    }
    let mut out = vec![Fe::ZERO; d + 1];
    for (i, &(xi, yi)) in pts.iter().enumerate() {
        if yi.is_zero() {
            continue;
        }
        let denom = pts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(Fe::ONE, |acc, (_, &(xj, _))| f.mul(acc, f.sub(xi, xj)));
        let scale = f.mul(yi, f.inv(denom)?);
        // master / (x - xi) by synthetic division, highest degree down.
        let mut carry = Fe::ZERO;
        for k in (1..master.len()).rev() {
            carry = f.add(master[k], f.mul(carry, xi));
            out[k - 1] = f.mul_add(carry, scale, out[k - 1]);
        }
    }
    Ok(Polynomial::new(out))
}

/// Random polynomial of the given degree. Coefficients `1..=degree` are
/// uniform; the constant term is `constant` when given, uniform otherwise.
pub fn random_poly<R: Rng + ?Sized>(
    f: &PrimeField,
    degree: usize,
    constant: Option<Fe>,
    rng: &mut R,
) -> Polynomial {
    let mut coeffs = Vec::with_capacity(degree + 1);
    coeffs.push(match constant {
        Some(c) => c,
        None => f.random(rng),
    });
    for _ in 0..degree {
        coeffs.push(f.random(rng));
    }
    Polynomial::new(coeffs)
}
