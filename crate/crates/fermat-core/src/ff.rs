//! Finite fields F_{ell^f}, their cyclic characters, and Gauss/Jacobi sums.
//!
//! Elements are coefficient vectors over F_ell modulo a fixed monic
//! irreducible polynomial. Every element also has an integer index
//! `sum c_i ell^i`, which the point-counting code uses for table lookups.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{factor, inv_mod, is_prime, mul_mod, pow_mod};
use crate::cyclotomic::CycInt;
use crate::error::{Error, Result};

/// Largest field size handled (q <= 2^40).
pub const MAX_FIELD_BITS: u32 = 40;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FFElem {
    pub coeffs: Vec<u64>,
}

/// F_{ell^f} with a deterministic modulus.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub ell: u64,
    pub f: u32,
    /// Monic modulus, low degree first (length f + 1).
    pub modulus: Vec<u64>,
    q: u64,
}

// Polynomials over F_ell, low degree first, trimmed.
fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(mut a: Vec<u64>, m: &[u64], ell: u64) -> Vec<u64> {
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], ell).expect("nonzero leading coefficient");
    a = trim(a);
    while a.len() > dm {
        let top = mul_mod(*a.last().unwrap(), lead_inv, ell);
        let shift = a.len() - 1 - dm;
        for (i, &c) in m.iter().enumerate() {
            let sub = mul_mod(top, c, ell);
            a[shift + i] = (a[shift + i] + ell - sub) % ell;
        }
        a = trim(a);
    }
    a
}

fn poly_mul(a: &[u64], b: &[u64], ell: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, ell)) % ell;
        }
    }
    out
}

fn poly_gcd(a: Vec<u64>, b: Vec<u64>, ell: u64) -> Vec<u64> {
    let (mut a, mut b) = (trim(a), trim(b));
    while !b.is_empty() {
        let r = poly_rem(a, &b, ell);
        a = b;
        b = r;
    }
    a
}

fn poly_pow_mod(base: &[u64], mut e: u64, m: &[u64], ell: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = poly_rem(base.to_vec(), m, ell);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_rem(poly_mul(&acc, &b, ell), m, ell);
        }
        b = poly_rem(poly_mul(&b, &b, ell), m, ell);
        e >>= 1;
    }
    acc
}

/// Irreducibility: g of degree f has no factor of degree k <= f/2 iff
/// gcd(g, x^(ell^k) - x) = 1 for every such k.
fn is_irreducible(g: &[u64], ell: u64) -> bool {
    let f = g.len() - 1;
    let mut xp = vec![0, 1];
    for _ in 1..=f / 2 {
        xp = poly_pow_mod(&xp, ell, g, ell);
        let mut h = xp.clone();
        h.resize(h.len().max(2), 0);
        h[1] = (h[1] + ell - 1) % ell;
        let d = poly_gcd(g.to_vec(), h, ell);
        if d.len() > 1 {
            return false;
        }
    }
    true
}

/// F_{ell^f} with the lowest monic irreducible modulus, ordering candidates by
/// the integer `sum c_i ell^i` of their non-leading coefficients.
pub fn make_field(ell: u64, f: u32) -> Result<FieldSpec> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    if f == 0 {
        return Err(Error::InvalidInput("extension degree must be at least 1".into()));
    }
    let q = ell
        .checked_pow(f)
        .filter(|&q| q <= 1u64 << MAX_FIELD_BITS)
        .ok_or(Error::FieldTooLarge { ell, f })?;
    let count = q;
    for k in 0..count {
        let mut m = Vec::with_capacity(f as usize + 1);
        let mut t = k;
        for _ in 0..f {
            m.push(t % ell);
            t /= ell;
        }
        m.push(1);
        if f == 1 || (m[0] != 0 && is_irreducible(&m, ell)) {
            return Ok(FieldSpec { ell, f, modulus: m, q });
        }
    }
    Err(Error::NoIrreducibleFound { ell, f })
}

impl FieldSpec {
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn zero(&self) -> FFElem {
        FFElem { coeffs: vec![0; self.f as usize] }
    }

    pub fn one(&self) -> FFElem {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> FFElem {
        let mut e = self.zero();
        e.coeffs[0] = n.rem_euclid(self.ell as i64) as u64;
        e
    }

    pub fn from_index(&self, mut idx: u64) -> FFElem {
        let mut e = self.zero();
        for c in e.coeffs.iter_mut() {
            *c = idx % self.ell;
            idx /= self.ell;
        }
        e
    }

    pub fn index(&self, x: &FFElem) -> u64 {
        x.coeffs.iter().rev().fold(0, |acc, &c| acc * self.ell + c)
    }

    pub fn is_zero(&self, x: &FFElem) -> bool {
        x.coeffs.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &FFElem, b: &FFElem) -> FFElem {
        FFElem {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x + y) % self.ell).collect(),
        }
    }

    pub fn sub(&self, a: &FFElem, b: &FFElem) -> FFElem {
        FFElem {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| (x + self.ell - y) % self.ell)
                .collect(),
        }
    }

    pub fn neg(&self, a: &FFElem) -> FFElem {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &FFElem, b: &FFElem) -> FFElem {
        if self.f == 1 {
            return FFElem { coeffs: vec![mul_mod(a.coeffs[0], b.coeffs[0], self.ell)] };
        }
        let mut r = poly_rem(poly_mul(&a.coeffs, &b.coeffs, self.ell), &self.modulus, self.ell);
        r.resize(self.f as usize, 0);
        FFElem { coeffs: r }
    }

    pub fn pow(&self, a: &FFElem, mut e: u64) -> FFElem {
        let mut acc = self.one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: &FFElem) -> Option<FFElem> {
        (!self.is_zero(a)).then(|| self.pow(a, self.q - 2))
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: &FFElem) -> u64 {
        let mut ord = self.q - 1;
        for (p, _) in factor(self.q - 1) {
            while ord % p == 0 && self.pow(a, ord / p) == self.one() {
                ord /= p;
            }
        }
        ord
    }

    /// The generator of F_q^x with the smallest index.
    pub fn least_generator(&self) -> FFElem {
        let fac = factor(self.q - 1);
        (1..self.q)
            .map(|i| self.from_index(i))
            .find(|g| fac.iter().all(|&(p, _)| self.pow(g, (self.q - 1) / p) != self.one()))
            .expect("F_q^x is cyclic")
    }

    /// Elements of order dividing r, as powers of a fixed element of exact order r.
    pub fn roots_of_unity(&self, r: u32) -> Result<Vec<FFElem>> {
        if (self.q - 1) % r as u64 != 0 {
            return Err(Error::OrderDoesNotDivide { r, q_minus_1: self.q - 1 });
        }
        let h = self.pow(&self.least_generator(), (self.q - 1) / r as u64);
        Ok((0..r as u64).map(|k| self.pow(&h, k)).collect())
    }
}

/// Baby-step giant-step discrete logarithm in a cyclic group of known order.
#[derive(Debug, Clone)]
pub struct Bsgs {
    m: u64,
    order: u64,
    baby: HashMap<u64, u64>,
    giant: FFElem,
}

impl Bsgs {
    pub fn new(field: &FieldSpec, base: &FFElem, order: u64) -> Bsgs {
        let m = (order as f64).sqrt().ceil().max(1.0) as u64;
        let mut baby = HashMap::with_capacity(m as usize);
        let mut cur = field.one();
        for j in 0..m {
            baby.entry(field.index(&cur)).or_insert(j);
            cur = field.mul(&cur, base);
        }
        let giant = field.inv(&field.pow(base, m)).expect("base is nonzero");
        Bsgs { m, order, baby, giant }
    }

    /// k in [0, order) with base^k = y, if y lies in the subgroup.
    pub fn log(&self, field: &FieldSpec, y: &FFElem) -> Option<u64> {
        let mut gamma = y.clone();
        for i in 0..=self.m {
            if let Some(&j) = self.baby.get(&field.index(&gamma)) {
                return Some((i * self.m + j) % self.order);
            }
            gamma = field.mul(&gamma, &self.giant);
        }
        None
    }
}

/// A character of F_q^x of exact order r, valued as exponents of zeta_r.
///
/// `chi(g) = zeta_r^gen_exp` for the least generator g. The canonical
/// character has `gen_exp = 1`; residue-symbol characters pin `gen_exp` so
/// that zeta_r matches a chosen root of unity of the residue field.
#[derive(Debug, Clone)]
pub struct MultCharacter {
    pub field: Arc<FieldSpec>,
    pub generator: FFElem,
    pub order: u32,
    pub gen_exp: u32,
    h: FFElem,
    table: Arc<OnceLock<Bsgs>>,
}

impl MultCharacter {
    fn build(field: Arc<FieldSpec>, r: u32, gen_exp: u32) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidOrder(r));
        }
        let q = field.q();
        if (q - 1) % r as u64 != 0 {
            return Err(Error::OrderDoesNotDivide { r, q_minus_1: q - 1 });
        }
        let generator = field.least_generator();
        let h = field.pow(&generator, (q - 1) / r as u64);
        Ok(MultCharacter {
            field,
            generator,
            order: r,
            gen_exp: gen_exp % r,
            h,
            table: Arc::new(OnceLock::new()),
        })
    }

    /// The k-th power character (possibly of smaller exact order).
    pub fn power(&self, k: u32) -> MultCharacter {
        MultCharacter {
            gen_exp: (self.gen_exp as u64 * k as u64 % self.order as u64) as u32,
            ..self.clone()
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.gen_exp == 0
    }

    pub fn conj(&self) -> MultCharacter {
        self.power(self.order - 1)
    }

    /// chi(x) as an exponent in Z/r; `None` at x = 0.
    pub fn eval(&self, x: &FFElem) -> Option<u32> {
        if self.field.is_zero(x) {
            return None;
        }
        let f = &self.field;
        let y = f.pow(x, (f.q() - 1) / self.order as u64);
        let bsgs = self.table.get_or_init(|| Bsgs::new(f, &self.h, self.order as u64));
        let k = bsgs.log(f, &y).expect("power lies in the order-r subgroup");
        Some(((k * self.gen_exp as u64) % self.order as u64) as u32)
    }

    pub fn eval_complex(&self, x: &FFElem) -> Complex64 {
        match self.eval(x) {
            None => Complex64::new(0.0, 0.0),
            Some(e) => Complex64::from_polar(1.0, 2.0 * PI * e as f64 / self.order as f64),
        }
    }
}

/// The canonical character of order r: chi(g) = zeta_r for the least generator g.
pub fn char_of_order(field: &FieldSpec, r: u32) -> Result<MultCharacter> {
    MultCharacter::build(Arc::new(field.clone()), r, 1)
}

/// The character of order r sending `z` (an element of exact order r) to zeta_r,
/// i.e. chi(x) = k where x^((q-1)/r) = z^k.
pub fn char_pinned_to(field: &FieldSpec, r: u32, z: &FFElem) -> Result<MultCharacter> {
    let base = MultCharacter::build(Arc::new(field.clone()), r, 1)?;
    if field.order(z) != r as u64 {
        return Err(Error::InvalidInput("pinning element must have exact order r".into()));
    }
    // chi(g) = e where h = g^((q-1)/r) = z^e.
    let bsgs = Bsgs::new(field, z, r as u64);
    let e = bsgs.log(field, &base.h).expect("h lies in <z>") as u32;
    Ok(MultCharacter { gen_exp: e, ..base })
}

/// j(chi1, chi2) = -sum_{a != 0, 1} chi1(a) chi2(1 - a), exactly in Z[zeta_r].
pub fn jacobi_sum(chi1: &MultCharacter, chi2: &MultCharacter) -> Result<CycInt> {
    if chi1.field != chi2.field {
        return Err(Error::FieldMismatch);
    }
    if chi1.order != chi2.order {
        return Err(Error::OrderMismatch(chi1.order, chi2.order));
    }
    let f = &chi1.field;
    let r = chi1.order as usize;
    let one = f.one();
    let mut counts = vec![0i128; r];
    for i in 2..f.q() {
        let a = f.from_index(i);
        let b = f.sub(&one, &a);
        if f.is_zero(&b) {
            continue;
        }
        let e = (chi1.eval(&a).unwrap() + chi2.eval(&b).unwrap()) as usize % r;
        counts[e] -= 1;
    }
    // Index 1 is the element 1 itself only when f >= 1; index 0 is zero.
    CycInt::from_powers(chi1.order, &counts)
}

/// g(chi) = sum_t chi(t) exp(2 pi i t / ell) over a prime field.
pub fn gauss_sum(chi: &MultCharacter) -> Result<Complex64> {
    if chi.field.f != 1 {
        return Err(Error::ExtensionFieldUnsupported);
    }
    if chi.is_trivial() {
        return Err(Error::TrivialCharacter);
    }
    let ell = chi.field.ell;
    let log_table = dlog_table_prime(ell, chi.generator.coeffs[0]);
    let r = chi.order as u64;
    Ok((1..ell)
        .map(|t| {
            let e = (log_table[t as usize] * chi.gen_exp as u64) % r;
            Complex64::from_polar(1.0, 2.0 * PI * (e as f64 / r as f64 + t as f64 / ell as f64))
        })
        .sum())
}

/// Full discrete-log table base g for a prime field.
fn dlog_table_prime(ell: u64, g: u64) -> Vec<u64> {
    let mut table = vec![0u64; ell as usize];
    let mut x = 1u64;
    for k in 0..ell - 1 {
        table[x as usize] = k;
        x = mul_mod(x, g, ell);
    }
    table
}

/// Whether `x` is an r-th power in F_ell (prime field shortcut).
pub fn is_rth_power_mod(x: u64, r: u64, ell: u64) -> bool {
    let x = x % ell;
    if x == 0 {
        return true;
    }
    let d = crate::arith::gcd(r, ell - 1);
    pow_mod(x, (ell - 1) / d, ell) == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn field_moduli() {
        assert_eq!(make_field(7, 1).unwrap().modulus, vec![0, 1]);
        assert_eq!(make_field(2, 2).unwrap().modulus, vec![1, 1, 1]);
        let f = make_field(5, 2).unwrap();
        // root oracle: no root in F_5
        let m = &f.modulus;
        assert!((0..5u64).all(|x| (m[0] + m[1] * x + x * x) % 5 != 0));
        assert_eq!(make_field(5, 2).unwrap(), f);
        assert_eq!(make_field(9, 1), Err(Error::NotPrime(9)));
        assert!(make_field(2, 41).is_err());
        for (ell, deg) in [(3, 3), (2, 4), (7, 3), (11, 4)] {
            let f = make_field(ell, deg).unwrap();
            assert_eq!(f.order(&f.least_generator()), f.q() - 1);
        }
    }

    #[test]
    fn character_examples() {
        let f7 = make_field(7, 1).unwrap();
        let chi = char_of_order(&f7, 3).unwrap();
        assert_eq!(chi.generator.coeffs, vec![3]);
        assert_eq!(chi.eval(&f7.one()), Some(0));
        assert_eq!(chi.eval(&f7.zero()), None);
        // 2 = 3^2 in F_7, so chi(2) = 2.
        let brute = (0..6).find(|&k| pow_mod(3, k, 7) == 2).unwrap() % 3;
        assert_eq!(chi.eval(&f7.from_int(2)), Some(brute as u32));
        let f4 = make_field(2, 2).unwrap();
        let chi4 = char_of_order(&f4, 3).unwrap();
        let mut vals: Vec<u32> = (1..4).map(|i| chi4.eval(&f4.from_index(i)).unwrap()).collect();
        vals.sort();
        assert_eq!(vals, vec![0, 1, 2]);
        assert_eq!(char_of_order(&f7, 4).unwrap_err(), Error::OrderDoesNotDivide { r: 4, q_minus_1: 6 });
        assert_eq!(char_of_order(&f7, 1).unwrap_err(), Error::InvalidOrder(1));
    }

    #[test]
    fn jacobi_examples() {
        let f7 = make_field(7, 1).unwrap();
        let chi = char_of_order(&f7, 3).unwrap();
        let j = jacobi_sum(&chi, &chi).unwrap();
        assert_eq!(j.norm(), 7);
        // j = 1 mod (1 - omega)^2 = (3) up to a unit; (1-w)^2 = -3w.
        assert!(j.congruent_mod_int(&CycInt::one(3), 3));
        let f4 = make_field(2, 2).unwrap();
        let chi4 = char_of_order(&f4, 3).unwrap();
        assert_eq!(jacobi_sum(&chi4, &chi4).unwrap(), CycInt::from_int(3, -2));
        let f13 = make_field(13, 1).unwrap();
        let c13 = char_of_order(&f13, 3).unwrap();
        assert_eq!(jacobi_sum(&chi, &c13).unwrap_err(), Error::FieldMismatch);
        let c2 = char_of_order(&f7, 2).unwrap();
        assert_eq!(jacobi_sum(&chi, &c2).unwrap_err(), Error::OrderMismatch(3, 2));
    }

    #[test]
    fn jacobi_norms_other_orders() {
        for (ell, r) in [(13u64, 4u32), (11, 5), (29, 7), (41, 5)] {
            let f = make_field(ell, 1).unwrap();
            let chi = char_of_order(&f, r).unwrap();
            let j = jacobi_sum(&chi, &chi).unwrap();
            for e in 1..r {
                if crate::arith::gcd(e as u64, r as u64) == 1 {
                    assert!((j.embed(e).norm_sqr() - ell as f64).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn gauss_sum_identities() {
        let f7 = make_field(7, 1).unwrap();
        let chi = char_of_order(&f7, 3).unwrap();
        let g = gauss_sum(&chi).unwrap();
        assert!((g.norm() - 7f64.sqrt()).abs() < 1e-10);
        // g(chi)^2 = g(chi^2) * J(chi, chi), with J = -j.
        let j = jacobi_sum(&chi, &chi).unwrap().to_complex();
        let rhs = gauss_sum(&chi.power(2)).unwrap() * (-j);
        assert!((g * g - rhs).norm() < 1e-9);
        let f13 = make_field(13, 1).unwrap();
        let c = char_of_order(&f13, 3).unwrap();
        let prod = gauss_sum(&c).unwrap() * gauss_sum(&c.conj()).unwrap();
        assert!((prod - Complex64::new(13.0, 0.0)).norm() < 1e-9);
        assert_eq!(gauss_sum(&c.power(3)).unwrap_err(), Error::TrivialCharacter);
        let f4 = make_field(2, 2).unwrap();
        assert_eq!(gauss_sum(&char_of_order(&f4, 3).unwrap()).unwrap_err(), Error::ExtensionFieldUnsupported);
    }

    #[test]
    fn bsgs_full_group() {
        let f = make_field(3, 5).unwrap();
        let g = f.least_generator();
        let bsgs = Bsgs::new(&f, &g, f.q() - 1);
        for k in [0u64, 1, 17, 100, 241] {
            assert_eq!(bsgs.log(&f, &f.pow(&g, k)), Some(k));
        }
    }

    proptest! {
        #[test]
        fn character_multiplicative(a in 1u64..121, b in 1u64..121) {
            let f = make_field(11, 2).unwrap();
            let chi = char_of_order(&f, 3).unwrap();
            let (x, y) = (f.from_index(a), f.from_index(b));
            let lhs = chi.eval(&f.mul(&x, &y)).unwrap();
            prop_assert_eq!(lhs, (chi.eval(&x).unwrap() + chi.eval(&y).unwrap()) % 3);
        }
    }
}
