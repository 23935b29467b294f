//! Exact arithmetic in Z[zeta_r] for r in {3, 4, 5, 7}.
//!
//! Elements are stored in the power basis `1, zeta, ..., zeta^(phi(r)-1)` and
//! kept reduced modulo the r-th cyclotomic polynomial. For r = 3 the ring is
//! the Eisenstein integers `a + b*omega`, which has class number one; prime
//! ideals and general ideals are represented by normalized generators.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{factor, is_prime, mult_order, pow_mod};
use crate::error::{Error, Result};

pub const SUPPORTED_ORDERS: [u32; 4] = [3, 4, 5, 7];

fn cyclotomic_poly(r: u32) -> &'static [i128] {
    match r {
        3 => &[1, 1, 1],
        4 => &[1, 0, 1],
        5 => &[1, 1, 1, 1, 1],
        7 => &[1, 1, 1, 1, 1, 1, 1],
        _ => unreachable!("unsupported cyclotomic order"),
    }
}

pub fn euler_phi(r: u32) -> usize {
    cyclotomic_poly(r).len() - 1
}

pub fn check_order(r: u32) -> Result<()> {
    if SUPPORTED_ORDERS.contains(&r) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(r))
    }
}

fn ck_add(a: i128, b: i128) -> i128 {
    a.checked_add(b).expect("CycInt coefficient overflow")
}

fn ck_mul(a: i128, b: i128) -> i128 {
    a.checked_mul(b).expect("CycInt coefficient overflow")
}

/// An element of Z[zeta_r].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycInt {
    r: u32,
    coeffs: Vec<i128>,
}

impl CycInt {
    /// Builds `sum c_k zeta^k` from coefficients of arbitrary length; exponents
    /// are taken mod r and the result is reduced.
    pub fn from_powers(r: u32, powers: &[i128]) -> Result<Self> {
        check_order(r)?;
        let mut acc = vec![0i128; r as usize];
        for (k, &c) in powers.iter().enumerate() {
            let slot = k % r as usize;
            acc[slot] = ck_add(acc[slot], c);
        }
        Ok(Self::reduce(r, acc))
    }

    fn reduce(r: u32, mut v: Vec<i128>) -> Self {
        let phi = cyclotomic_poly(r);
        let d = phi.len() - 1;
        while v.len() > d {
            let top = v.pop().unwrap();
            if top != 0 {
                let shift = v.len() - d;
                for (i, &c) in phi[..d].iter().enumerate() {
                    v[shift + i] = ck_add(v[shift + i], -ck_mul(top, c));
                }
            }
        }
        v.resize(d, 0);
        CycInt { r, coeffs: v }
    }

    pub fn from_int(r: u32, n: i128) -> Self {
        let mut coeffs = vec![0; euler_phi(r)];
        coeffs[0] = n;
        CycInt { r, coeffs }
    }

    pub fn zero(r: u32) -> Self {
        Self::from_int(r, 0)
    }

    pub fn one(r: u32) -> Self {
        Self::from_int(r, 1)
    }

    /// zeta_r^k.
    pub fn zeta_pow(r: u32, k: i64) -> Self {
        let k = k.rem_euclid(r as i64) as usize;
        let mut v = vec![0i128; k + 1];
        v[k] = 1;
        Self::reduce(r, v)
    }

    /// `a + b*omega` in Z[omega].
    pub fn eis(a: i128, b: i128) -> Self {
        CycInt { r: 3, coeffs: vec![a, b] }
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// The rational integer this element equals, if any.
    pub fn as_rational(&self) -> Option<i128> {
        self.coeffs[1..].iter().all(|&c| c == 0).then(|| self.coeffs[0])
    }

    fn same_order(&self, other: &Self) -> Result<()> {
        if self.r == other.r {
            Ok(())
        } else {
            Err(Error::OrderMismatch(self.r, other.r))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| ck_add(a, b))
            .collect();
        Ok(CycInt { r: self.r, coeffs })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_order(other)?;
        let d = self.coeffs.len();
        let mut prod = vec![0i128; 2 * d - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                prod[i + j] = ck_add(prod[i + j], ck_mul(a, b));
            }
        }
        Ok(Self::reduce(self.r, prod))
    }

    pub fn scale(&self, k: i128) -> Self {
        CycInt {
            r: self.r,
            coeffs: self.coeffs.iter().map(|&c| ck_mul(c, k)).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.r);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// The Galois automorphism zeta -> zeta^i.
    pub fn galois_apply(&self, i: u32) -> Result<Self> {
        if crate::arith::gcd(i as u64, self.r as u64) != 1 {
            return Err(Error::NotAUnit(i));
        }
        let r = self.r as usize;
        let mut v = vec![0i128; r];
        for (k, &c) in self.coeffs.iter().enumerate() {
            let t = (k * i as usize) % r;
            v[t] = ck_add(v[t], c);
        }
        Ok(Self::reduce(self.r, v))
    }

    /// Complex conjugation, i.e. sigma_{-1}.
    pub fn conj(&self) -> Self {
        self.galois_apply(self.r - 1).expect("r - 1 is a unit")
    }

    fn galois_units(&self) -> impl Iterator<Item = u32> + '_ {
        (1..self.r).filter(|&i| crate::arith::gcd(i as u64, self.r as u64) == 1)
    }

    /// Absolute norm: product of all Galois conjugates.
    pub fn norm(&self) -> i128 {
        let mut acc = Self::one(self.r);
        for i in self.galois_units() {
            acc = &acc * &self.galois_apply(i).unwrap();
        }
        acc.as_rational().expect("norm is rational")
    }

    /// Value under the embedding zeta -> exp(2 pi i j / r).
    pub fn embed(&self, j: u32) -> Complex64 {
        let r = self.r as f64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| Complex64::from_polar(c as f64, 2.0 * PI * (j as f64) * (k as f64) / r))
            .sum()
    }

    /// The principal embedding (j = 1).
    pub fn to_complex(&self) -> Complex64 {
        self.embed(1)
    }

    /// `self / d` when the quotient is integral.
    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() || self.r != d.r {
            return None;
        }
        let mut cofactor = Self::one(self.r);
        for i in self.galois_units().skip(1) {
            cofactor = &cofactor * &d.galois_apply(i).unwrap();
        }
        let n = d.norm();
        let num = self * &cofactor;
        if num.coeffs.iter().all(|c| c % n == 0) {
            Some(CycInt {
                r: self.r,
                coeffs: num.coeffs.iter().map(|c| c / n).collect(),
            })
        } else {
            None
        }
    }

    pub fn divides(&self, other: &Self) -> bool {
        other.exact_div(self).is_some()
    }

    /// True when self - other lies in m * Z[zeta].
    pub fn congruent_mod_int(&self, other: &Self, m: i128) -> bool {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .all(|(a, b)| (a - b).rem_euclid(m) == 0)
    }

    pub fn is_unit(&self) -> bool {
        self.norm() == 1
    }

    /// Valuation at the prime above r (r prime), i.e. at 1 - zeta.
    pub fn lambda_valuation(&self) -> Option<u32> {
        if self.is_zero() {
            return None;
        }
        let lambda = Self::lambda(self.r);
        let mut x = self.clone();
        let mut v = 0;
        while let Some(q) = x.exact_div(&lambda) {
            x = q;
            v += 1;
        }
        Some(v)
    }

    pub fn lambda(r: u32) -> Self {
        &Self::one(r) - &Self::zeta_pow(r, 1)
    }
}

impl Add for &CycInt {
    type Output = CycInt;
    fn add(self, rhs: &CycInt) -> CycInt {
        self.try_add(rhs).expect("order mismatch")
    }
}

impl Sub for &CycInt {
    type Output = CycInt;
    fn sub(self, rhs: &CycInt) -> CycInt {
        self.try_add(&-rhs).expect("order mismatch")
    }
}

impl Mul for &CycInt {
    type Output = CycInt;
    fn mul(self, rhs: &CycInt) -> CycInt {
        self.try_mul(rhs).expect("order mismatch")
    }
}

impl Neg for &CycInt {
    type Output = CycInt;
    fn neg(self) -> CycInt {
        self.scale(-1)
    }
}

impl PartialOrd for CycInt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CycInt {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.r, &self.coeffs).cmp(&(other.r, &other.coeffs))
    }
}

impl fmt::Display for CycInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "{}", if c < 0 { " - " } else { " + " })?;
            } else if c < 0 {
                write!(f, "-")?;
            }
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 if a == 1 => write!(f, "z")?,
                1 => write!(f, "{a}*z")?,
                _ if a == 1 => write!(f, "z^{k}")?,
                _ => write!(f, "{a}*z^{k}")?,
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// The six units of Z[omega]: 1, -omega^2, omega, -1, omega^2, -omega
/// (the powers of -omega^2, a primitive sixth root of unity).
pub fn eisenstein_units() -> [CycInt; 6] {
    let u = CycInt::eis(1, 1); // 1 + omega = -omega^2
    let mut out: [CycInt; 6] = std::array::from_fn(|_| CycInt::one(3));
    for k in 1..6 {
        out[k] = &out[k - 1] * &u;
    }
    out
}

/// The unique associate congruent to 2 mod 3.
pub fn primary_associate(a: &CycInt) -> Result<CycInt> {
    if a.r() != 3 {
        return Err(Error::UnsupportedOrder(a.r()));
    }
    if a.is_unit() {
        return Err(Error::UnitInput);
    }
    if (a.coeffs[0] + a.coeffs[1]).rem_euclid(3) == 0 {
        return Err(Error::NotCoprimeToLambda);
    }
    let two = CycInt::from_int(3, 2);
    eisenstein_units()
        .iter()
        .map(|u| u * a)
        .find(|x| x.congruent_mod_int(&two, 3))
        .ok_or(Error::NotCoprimeToLambda)
}

/// Whether `a` is congruent to 2 mod 3.
pub fn is_primary(a: &CycInt) -> bool {
    a.r() == 3 && a.congruent_mod_int(&CycInt::from_int(3, 2), 3)
}

/// A prime ideal of Z[zeta_r] in the class-number-one regime.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeIdeal {
    pub ell: u64,
    pub f: u32,
    pub generator: CycInt,
    pub ramified: bool,
}

impl PrimeIdeal {
    pub fn norm(&self) -> u64 {
        self.ell.pow(self.f)
    }

    pub fn is_split(&self) -> bool {
        !self.ramified && self.f == 1
    }

    pub fn conj(&self) -> PrimeIdeal {
        if !self.is_split() {
            return self.clone();
        }
        let g = self.generator.conj();
        PrimeIdeal { generator: g, ..self.clone() }
    }

    /// The ramified prime (1 - omega) above 3.
    pub fn lambda() -> PrimeIdeal {
        PrimeIdeal { ell: 3, f: 1, generator: CycInt::lambda(3), ramified: true }
    }
}

impl PartialOrd for PrimeIdeal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PrimeIdeal {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.norm(), &self.generator).cmp(&(other.norm(), &other.generator))
    }
}

fn isqrt(n: u64) -> u64 {
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Both primary generators of norm ell for a split prime ell = 1 mod 3,
/// sorted lexicographically. Cornacchia on ell = x^2 + 3 y^2, then
/// x^2 + 3 y^2 = N(x + y + 2 y omega).
fn split_generators(ell: u64) -> Result<[CycInt; 2]> {
    let root = (2..ell)
        .map(|g| pow_mod(g, (ell - 1) / 3, ell))
        .find(|&w| w != 1)
        .ok_or(Error::SearchExhausted(ell))?;
    // 2 omega + 1 is a square root of -3
    let r0 = (2 * root as u128 + 1) as u64 % ell;
    let r0 = r0.max(ell - r0);
    let (mut a, mut b) = (ell, r0);
    while (b as u128) * (b as u128) >= ell as u128 {
        (a, b) = (b, a % b);
    }
    let rest = ell - b * b;
    if rest % 3 != 0 {
        return Err(Error::SearchExhausted(ell));
    }
    let y = isqrt(rest / 3);
    if 3 * y * y != rest {
        return Err(Error::SearchExhausted(ell));
    }
    let (x, y) = (b as i128, y as i128);
    let pi = primary_associate(&CycInt::eis(x + y, 2 * y))?;
    let mut gens = [pi.clone(), pi.conj()];
    gens.sort();
    Ok(gens)
}

/// All prime ideals of Z[omega] above ell, sorted by the fixed tie-break.
pub fn primes_above(ell: u64) -> Result<Vec<PrimeIdeal>> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    Ok(match ell % 3 {
        0 => vec![PrimeIdeal::lambda()],
        1 => split_generators(ell)?
            .into_iter()
            .map(|g| PrimeIdeal { ell, f: 1, generator: g, ramified: false })
            .collect(),
        _ => vec![PrimeIdeal { ell, f: 2, generator: CycInt::from_int(3, ell as i128), ramified: false }],
    })
}

/// The distinguished prime above ell (the lexicographically least generator).
pub fn prime_above(ell: u64, r: u32) -> Result<PrimeIdeal> {
    if r != 3 {
        return Err(Error::UnsupportedOrder(r));
    }
    Ok(primes_above(ell)?.swap_remove(0))
}

/// Inertial degree of ell in Q(zeta_r) for ell not dividing r.
pub fn inertial_degree(ell: u64, r: u32) -> u32 {
    mult_order(ell % r as u64, r as u64) as u32
}

/// An ideal of Z[omega], stored by its factorization and a normalized
/// generator: lambda^k times the primary generator of the part prime to 3.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ideal {
    pub generator: CycInt,
    pub norm: u64,
    pub factors: Vec<(PrimeIdeal, u32)>,
}

impl Ideal {
    pub fn unit() -> Ideal {
        Ideal { generator: CycInt::one(3), norm: 1, factors: Vec::new() }
    }

    pub fn from_prime(p: &PrimeIdeal) -> Ideal {
        Ideal::from_factors(vec![(p.clone(), 1)])
    }

    /// Builds the ideal from a factorization (merged and sorted internally).
    pub fn from_factors(mut fs: Vec<(PrimeIdeal, u32)>) -> Ideal {
        fs.retain(|(_, e)| *e > 0);
        fs.sort();
        let mut merged: Vec<(PrimeIdeal, u32)> = Vec::new();
        for (p, e) in fs {
            match merged.last_mut() {
                Some((q, k)) if *q == p => *k += e,
                _ => merged.push((p, e)),
            }
        }
        let mut unit_part = CycInt::one(3);
        let mut lam = 0;
        let mut norm = 1u64;
        for (p, e) in &merged {
            norm = p
                .norm()
                .checked_pow(*e)
                .and_then(|x| norm.checked_mul(x))
                .expect("ideal norm overflow");
            if p.ramified {
                lam += e;
            } else {
                unit_part = &unit_part * &p.generator.pow(*e);
            }
        }
        let prim = if unit_part.is_unit() {
            CycInt::one(3)
        } else {
            primary_associate(&unit_part).expect("coprime to lambda")
        };
        Ideal {
            generator: &CycInt::lambda(3).pow(lam) * &prim,
            norm,
            factors: merged,
        }
    }

    /// The ideal generated by a nonzero element.
    pub fn principal(a: &CycInt) -> Result<Ideal> {
        if a.r() != 3 {
            return Err(Error::UnsupportedOrder(a.r()));
        }
        if a.is_zero() {
            return Err(Error::InvalidInput("zero ideal".into()));
        }
        let n = a.norm() as u64;
        let mut fs = Vec::new();
        let mut rest = a.clone();
        for (ell, _) in factor(n) {
            for p in primes_above(ell)? {
                let mut e = 0;
                while let Some(q) = rest.exact_div(&p.generator) {
                    rest = q;
                    e += 1;
                }
                if e > 0 {
                    fs.push((p, e));
                }
            }
        }
        debug_assert!(rest.is_unit());
        Ok(Ideal::from_factors(fs))
    }

    /// The ideal generated by a rational integer.
    pub fn rational(n: u64) -> Result<Ideal> {
        Ideal::principal(&CycInt::from_int(3, n as i128))
    }

    pub fn mul(&self, other: &Ideal) -> Ideal {
        let mut fs = self.factors.clone();
        fs.extend(other.factors.iter().cloned());
        Ideal::from_factors(fs)
    }

    pub fn pow(&self, e: u32) -> Ideal {
        Ideal::from_factors(self.factors.iter().map(|(p, k)| (p.clone(), k * e)).collect())
    }

    pub fn conj(&self) -> Ideal {
        Ideal::from_factors(self.factors.iter().map(|(p, k)| (p.conj(), *k)).collect())
    }

    pub fn valuation(&self, p: &PrimeIdeal) -> u32 {
        self.factors.iter().find(|(q, _)| q == p).map_or(0, |(_, e)| *e)
    }

    pub fn is_coprime(&self, other: &Ideal) -> bool {
        self.factors.iter().all(|(p, _)| other.valuation(p) == 0)
    }

    pub fn is_coprime_to_3(&self) -> bool {
        self.factors.iter().all(|(p, _)| !p.ramified)
    }
}

impl PartialOrd for Ideal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ideal {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.norm, &self.generator).cmp(&(other.norm, &other.generator))
    }
}

/// The residue ring Z[omega]/(alpha), with canonical representatives
/// `x + y*omega`, 0 <= x < n1, 0 <= y < g, from a Hermite basis of the
/// lattice alpha*Z[omega].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EisQuotient {
    pub alpha: CycInt,
    n1: i128,
    g: i128,
    w1: (i128, i128),
}

impl EisQuotient {
    pub fn new(alpha: &CycInt) -> Result<Self> {
        if alpha.r() != 3 || alpha.is_zero() {
            return Err(Error::InvalidInput("modulus must be a nonzero Eisenstein integer".into()));
        }
        let (a, b) = (alpha.coeffs[0], alpha.coeffs[1]);
        // alpha = (a, b), alpha*omega = (-b, a - b)
        let v1 = (a, b);
        let v2 = (-b, a - b);
        let (g, s, t) = crate::arith::ext_gcd(v1.1, v2.1);
        let (w1, n1) = if g == 0 {
            ((0, 0), crate::arith::gcd_i(v1.0, v2.0))
        } else {
            let w1 = (s * v1.0 + t * v2.0, g);
            let z1 = v1.0 - (v1.1 / g) * w1.0;
            let z2 = v2.0 - (v2.1 / g) * w1.0;
            (w1, crate::arith::gcd_i(z1, z2))
        };
        let g = g.max(1);
        debug_assert_eq!(n1 * g, alpha.norm());
        Ok(EisQuotient { alpha: alpha.clone(), n1, g, w1 })
    }

    pub fn size(&self) -> u64 {
        (self.n1 * self.g) as u64
    }

    pub fn reduce(&self, x: &CycInt) -> (i128, i128) {
        self.reduce_pair(x.coeffs[0], x.coeffs[1])
    }

    pub fn reduce_pair(&self, mut x: i128, mut y: i128) -> (i128, i128) {
        let k = y.div_euclid(self.g);
        x -= k * self.w1.0;
        y -= k * self.w1.1;
        (x.rem_euclid(self.n1), y)
    }

    pub fn index(&self, x: &CycInt) -> usize {
        let (a, b) = self.reduce(x);
        (b * self.n1 + a) as usize
    }

    pub fn element(&self, idx: usize) -> CycInt {
        let idx = idx as i128;
        CycInt::eis(idx % self.n1, idx / self.n1)
    }

    pub fn mul_idx(&self, i: usize, j: usize) -> usize {
        self.index(&(&self.element(i) * &self.element(j)))
    }
}
