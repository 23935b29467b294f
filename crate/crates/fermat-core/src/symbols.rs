//! Cubic residue symbols in Z[omega] and their extension to all ideals
//! prime to a finite set S' via ray-class representatives.
//!
//! For a prime w not above 3, `chi_w(a)` is the exponent e with
//! `a^((Nw - 1)/3) = omega^e (mod w)`. The extension to an ideal m prime to
//! S' writes `m = (m0) e g^3` with `m0 = 1 (mod c)` and a fixed representative
//! e of the class of m in `R_c = H_c / H_c^3`, then evaluates the classical
//! symbol of `m0 * m_e`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, mul_mod, pow_mod, primes_up_to};
use crate::cyclotomic::{eisenstein_units, primes_above, CycInt, EisQuotient, Ideal, PrimeIdeal};
use crate::error::{Error, Result};
use crate::ff::{make_field, FFElem, FieldSpec};

pub const CONTEXT_FORMAT: &str = "fermat-symbol-context v1";

/// A symbol value: an exponent of omega, or undefined when the supports meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolValue {
    Exponent(u32),
    Undefined,
}

impl From<Result<u32>> for SymbolValue {
    fn from(r: Result<u32>) -> Self {
        match r {
            Ok(e) => SymbolValue::Exponent(e),
            Err(_) => SymbolValue::Undefined,
        }
    }
}

/// Reduction map Z[omega] -> O/w = F_{Nw}, with the image of omega recorded.
#[derive(Clone, Debug)]
pub struct ResidueField {
    pub field: FieldSpec,
    pub omega: FFElem,
}

impl ResidueField {
    pub fn new(w: &PrimeIdeal) -> Result<ResidueField> {
        if w.ramified {
            return Err(Error::RamifiedPlace);
        }
        if w.f == 1 {
            let field = make_field(w.ell, 1)?;
            let omega = field.from_int(split_omega(w) as i64);
            Ok(ResidueField { field, omega })
        } else {
            let field = make_field(w.ell, 2)?;
            // omega is the root of x^2 + x + 1 with the smallest index.
            let omega = (0..field.q())
                .map(|i| field.from_index(i))
                .find(|x| {
                    let v = field.add(&field.add(&field.mul(x, x), x), &field.one());
                    field.is_zero(&v)
                })
                .expect("F_{ell^2} contains the cube roots of unity");
            Ok(ResidueField { field, omega })
        }
    }

    pub fn reduce(&self, a: &CycInt) -> FFElem {
        let f = &self.field;
        let x = f.from_int((a.coeffs()[0] % f.ell as i128) as i64);
        let y = f.from_int((a.coeffs()[1] % f.ell as i128) as i64);
        f.add(&x, &f.mul(&y, &self.omega))
    }

    /// Exponent e with x^((q-1)/3) = omega^e; `None` when x = 0.
    pub fn cubic_exponent(&self, x: &FFElem) -> Option<u32> {
        let f = &self.field;
        if f.is_zero(x) {
            return None;
        }
        let y = f.pow(x, (f.q() - 1) / 3);
        let mut t = f.one();
        for e in 0..3 {
            if t == y {
                return Some(e);
            }
            t = f.mul(&t, &self.omega);
        }
        unreachable!("a cube root of unity")
    }
}

/// The image of omega in F_ell for a split prime w = (a + b omega): -a/b.
pub fn split_omega(w: &PrimeIdeal) -> u64 {
    let ell = w.ell as i128;
    let a = w.generator.coeffs()[0].rem_euclid(ell) as u64;
    let b = w.generator.coeffs()[1].rem_euclid(ell) as u64;
    let binv = crate::arith::inv_mod(b, w.ell).expect("b is a unit mod ell");
    (w.ell - mul_mod(a, binv, w.ell)) % w.ell
}

/// chi_w(n) for a rational integer n and split w, given omega's image.
pub fn cubic_symbol_rational_split(n: i64, ell: u64, omega0: u64) -> Option<u32> {
    let x = n.rem_euclid(ell as i64) as u64;
    if x == 0 {
        return None;
    }
    let y = pow_mod(x, (ell - 1) / 3, ell);
    if y == 1 {
        Some(0)
    } else if y == omega0 {
        Some(1)
    } else {
        Some(2)
    }
}

/// The classical cubic residue symbol chi_w(a), as an exponent of omega.
pub fn classical_symbol(w: &PrimeIdeal, a: &CycInt) -> Result<u32> {
    if w.ramified {
        return Err(Error::RamifiedPlace);
    }
    let rf = ResidueField::new(w)?;
    rf.cubic_exponent(&rf.reduce(a)).ok_or(Error::NotCoprime)
}

/// <a / n> for an element a and an ideal n prime to 3.
pub fn residue_symbol(a: &CycInt, n: &Ideal) -> Result<u32> {
    let mut acc = 0;
    for (w, e) in &n.factors {
        acc += e * classical_symbol(w, a)?;
    }
    Ok(acc % 3)
}

/// One entry of the representative set: a prime-to-S' ideal and its generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct E0Entry {
    pub ideal: Ideal,
    pub m: CycInt,
    pub rational: bool,
}

/// Structure of R_c = H_c (x) Z/3 as an F_3-vector space.
#[derive(Clone, Debug)]
pub struct RayClass {
    pub quotient: EisQuotient,
    /// Residue index -> coordinates in the chosen basis (units of O/c only).
    coords: HashMap<usize, Vec<u8>>,
    /// Residue indices of elements of U * (O/c)^x^3.
    kernel: BTreeSet<usize>,
    /// Residue indices of cubes of units of O/c.
    cubes: BTreeSet<usize>,
    pub dim: usize,
    pub unit_group_order: usize,
}

impl RayClass {
    /// |U (O/c)^x^3|, the subgroup killed in R_c.
    pub fn kernel_order(&self) -> usize {
        self.kernel.len()
    }

    pub fn order(&self) -> usize {
        3usize.pow(self.dim as u32)
    }
}

/// Fixed data for the extended symbol: S', the modulus c, and E0.
#[derive(Clone, Debug)]
pub struct SymbolContext {
    pub r: u32,
    pub seed: u64,
    pub s_prime: Vec<PrimeIdeal>,
    pub c_modulus: Vec<(PrimeIdeal, u32)>,
    pub e0: Vec<E0Entry>,
    pub rayclass: RayClass,
}

/// Residues of O/lambda^m as canonical indices, for the cube test below.
fn lambda_power_cubes_cover(k: u32, precision: u32) -> bool {
    let lam = CycInt::lambda(3);
    let modulus = lam.pow(precision);
    let q = EisQuotient::new(&modulus).unwrap();
    let n = q.size() as usize;
    let mut cubes = vec![false; n];
    for i in 0..n {
        let x = q.element(i);
        if (x.coeffs()[0] + x.coeffs()[1]).rem_euclid(3) == 0 {
            continue;
        }
        cubes[q.index(&x.pow(3))] = true;
    }
    let step = lam.pow(k);
    let sub = EisQuotient::new(&lam.pow(precision - k)).unwrap();
    (0..sub.size() as usize).all(|i| {
        let y = &CycInt::one(3) + &(&step * &sub.element(i));
        cubes[q.index(&y)]
    })
}

/// Least k such that every element of 1 + lambda^k O is a cube modulo
/// lambda^(k+6).
pub fn lambda_exponent() -> u32 {
    (1..=8)
        .find(|&k| lambda_power_cubes_cover(k, k + 6))
        .expect("some power of lambda lies in the cubes")
}

fn coprime_to_s(x: &CycInt, s_prime: &[PrimeIdeal]) -> bool {
    s_prime.iter().all(|w| !w.generator.divides(x))
}

impl SymbolContext {
    /// Builds the context for r = 3 with the given S' (must contain the prime
    /// above 3; conjugates are added).
    pub fn build(s_prime: &[PrimeIdeal], seed: u64) -> Result<SymbolContext> {
        if !s_prime.iter().any(|w| w.ramified) {
            return Err(Error::InvalidInput("S' must contain the prime above 3".into()));
        }
        let mut sp: Vec<PrimeIdeal> = s_prime.to_vec();
        for w in s_prime {
            if !sp.contains(&w.conj()) {
                sp.push(w.conj());
            }
        }
        sp.sort();
        sp.dedup();
        let r_lambda = lambda_exponent();
        let c_modulus: Vec<(PrimeIdeal, u32)> =
            sp.iter().map(|w| (w.clone(), if w.ramified { r_lambda } else { 1 })).collect();
        let c_gen = c_modulus.iter().fold(CycInt::one(3), |acc, (w, e)| &acc * &w.generator.pow(*e));
        let quotient = EisQuotient::new(&c_gen)?;
        if quotient.size() > 1 << 20 {
            return Err(Error::ContextTooLarge);
        }
        let n = quotient.size() as usize;
        let units_mod_c: Vec<usize> =
            (0..n).filter(|&i| coprime_to_s(&quotient.element(i), &sp)).collect();
        let cubes: BTreeSet<usize> = units_mod_c
            .iter()
            .map(|&i| quotient.index(&quotient.element(i).pow(3)))
            .collect();
        let mut kernel = BTreeSet::new();
        for u in eisenstein_units() {
            let ui = quotient.index(&u);
            for &c in &cubes {
                kernel.insert(quotient.mul_idx(ui, c));
            }
        }
        let quotient_order = units_mod_c.len() / kernel.len();
        let dim = (quotient_order as f64).log(3.0).round() as usize;
        if 3usize.pow(dim as u32) != quotient_order {
            return Err(Error::InvalidInput("R_c is not an elementary 3-group".into()));
        }

        // Span bookkeeping: coset index of each residue class of the current span.
        let class_of = |i: usize, span: &HashMap<usize, Vec<u8>>| span.get(&i).cloned();
        let mut span: HashMap<usize, Vec<u8>> = kernel.iter().map(|&k| (k, Vec::new())).collect();
        let mut basis: Vec<usize> = Vec::new();
        let mut e0 = Vec::new();

        let try_add = |idx: usize,
                           entry: E0Entry,
                           span: &mut HashMap<usize, Vec<u8>>,
                           basis: &mut Vec<usize>,
                           e0: &mut Vec<E0Entry>| {
            if class_of(idx, span).is_some() {
                return;
            }
            let old: Vec<(usize, Vec<u8>)> = span.drain().collect();
            let mut p = 1usize; // index of x^0
            p = quotient.index(&quotient.element(p).pow(0));
            for k in 0..3u8 {
                for (i, v) in &old {
                    let mut v = v.clone();
                    v.push(k);
                    span.insert(quotient.mul_idx(*i, p), v);
                }
                p = quotient.mul_idx(p, idx);
            }
            basis.push(idx);
            e0.push(entry);
        };

        // Rational primes first, so ideals from F decompose with m rational.
        for ell in primes_up_to(500) {
            if ell == 3 || sp.iter().any(|w| w.ell == ell) {
                continue;
            }
            let x = CycInt::from_int(3, ell as i128);
            let idx = quotient.index(&x);
            try_add(
                idx,
                E0Entry { ideal: Ideal::rational(ell)?, m: x, rational: true },
                &mut span,
                &mut basis,
                &mut e0,
            );
        }
        // Then prime ideals of L by norm, lexicographic within a norm, with the
        // seed rotating among equal-norm candidates.
        let mut candidates: Vec<PrimeIdeal> = Vec::new();
        for ell in primes_up_to(5000) {
            if sp.iter().any(|w| w.ell == ell) {
                continue;
            }
            candidates.extend(primes_above(ell)?);
        }
        candidates.sort();
        let mut i = 0;
        while i < candidates.len() && basis.len() < dim {
            let nrm = candidates[i].norm();
            let mut group: Vec<&PrimeIdeal> = candidates[i..].iter().take_while(|w| w.norm() == nrm).collect();
            let rot = (seed as usize) % group.len();
            group.rotate_left(rot);
            for w in &group {
                let idx = quotient.index(&w.generator);
                try_add(
                    idx,
                    E0Entry { ideal: Ideal::from_prime(w), m: w.generator.clone(), rational: false },
                    &mut span,
                    &mut basis,
                    &mut e0,
                );
            }
            i += group.len();
        }
        if basis.len() != dim {
            return Err(Error::ContextTooLarge);
        }
        let coords: HashMap<usize, Vec<u8>> = span;
        Ok(SymbolContext {
            r: 3,
            seed,
            s_prime: sp,
            c_modulus,
            e0,
            rayclass: RayClass {
                quotient,
                coords,
                kernel,
                cubes,
                dim,
                unit_group_order: units_mod_c.len(),
            },
        })
    }

    /// The standard context S' = {lambda}.
    pub fn standard() -> SymbolContext {
        SymbolContext::build(&[PrimeIdeal::lambda()], 0).expect("standard context")
    }

    pub fn lambda_exponent(&self) -> u32 {
        self.c_modulus.iter().find(|(w, _)| w.ramified).map(|(_, e)| *e).unwrap()
    }

    fn check_in_is(&self, m: &Ideal) -> Result<()> {
        if m.factors.iter().any(|(p, _)| self.s_prime.contains(p)) {
            Err(Error::NotInIS)
        } else {
            Ok(())
        }
    }

    /// Class of a generator in R_c as coordinates over E0.
    pub fn class_of_element(&self, x: &CycInt) -> Result<Vec<u8>> {
        let idx = self.rayclass.quotient.index(x);
        self.rayclass.coords.get(&idx).cloned().ok_or(Error::NotInIS)
    }

    pub fn class_of(&self, m: &Ideal) -> Result<Vec<u8>> {
        self.check_in_is(m)?;
        self.class_of_element(&m.generator)
    }

    /// m_e for the representative of the class with the given coordinates.
    pub fn representative(&self, coords: &[u8]) -> (Ideal, CycInt) {
        let mut ideal = Ideal::unit();
        let mut m = CycInt::one(3);
        for (entry, &k) in self.e0.iter().zip(coords) {
            ideal = ideal.mul(&entry.ideal.pow(k as u32));
            m = &m * &entry.m.pow(k as u32);
        }
        (ideal, m)
    }

    /// The units u with u * mu / m_e a cube modulo c (a coset of {+1, -1}).
    fn normalizing_units(&self, mu: &CycInt, m_e: &CycInt) -> Vec<CycInt> {
        let q = &self.rayclass.quotient;
        let me_inv = (0..q.size() as usize)
            .find(|&i| q.mul_idx(i, q.index(m_e)) == q.index(&CycInt::one(3)))
            .expect("m_e is a unit mod c");
        eisenstein_units()
            .into_iter()
            .filter(|u| {
                let t = q.mul_idx(q.index(&(u * mu)), me_inv);
                self.rayclass.cubes.contains(&t)
            })
            .collect()
    }

    /// A decomposition m = (m0) e g^3 with m0 = 1 mod c for a chosen g.
    pub fn decompose(&self, m: &Ideal, g: &CycInt) -> Result<Decomposition> {
        self.check_in_is(m)?;
        if !coprime_to_s(g, &self.s_prime) {
            return Err(Error::NotInIS);
        }
        let coords = self.class_of(m)?;
        let (_, m_e) = self.representative(&coords);
        let u = self.normalizing_units(&m.generator, &m_e);
        let u = u.first().ok_or(Error::InvalidInput("class bookkeeping failed".into()))?;
        let numerator = u * &m.generator;
        Ok(Decomposition { numerator, m_e, coords, g: g.clone() })
    }

    /// <m / n> = <m0 * m_e / n>, the extended cubic symbol chi_m(n).
    pub fn extended_symbol(&self, m: &Ideal, n: &Ideal) -> Result<u32> {
        self.check_in_is(m)?;
        self.check_in_is(n)?;
        if !m.is_coprime(n) {
            return Err(Error::NotCoprime);
        }
        let coords = self.class_of(m)?;
        let (_, m_e) = self.representative(&coords);
        let u = self.normalizing_units(&m.generator, &m_e);
        residue_symbol(&(&u[0] * &m.generator), n)
    }

    /// Symbol value read off a given decomposition: <m0 m_e / n> with
    /// m0 m_e = numerator / g^3.
    pub fn symbol_from_decomposition(&self, d: &Decomposition, n: &Ideal) -> Result<u32> {
        let num = residue_symbol(&d.numerator, n)?;
        let den = residue_symbol(&d.g, n)? * 3;
        Ok((num + 3 - den % 3) % 3)
    }

    /// alpha(m, n) = chi_m(n) - chi_n(m), as an exponent.
    pub fn reciprocity_alpha(&self, m: &Ideal, n: &Ideal) -> Result<u32> {
        let a = self.extended_symbol(m, n)?;
        let b = self.extended_symbol(n, m)?;
        Ok((a + 3 - b) % 3)
    }

    /// Classes of rational ideals (n), n <= bound prime to S', in R_c.
    pub fn rational_image(&self, bound: u64) -> BTreeSet<Vec<u8>> {
        (1..=bound)
            .filter(|&n| self.s_prime.iter().all(|w| n % w.ell != 0))
            .filter_map(|n| self.class_of_element(&CycInt::from_int(3, n as i128)).ok())
            .collect()
    }

    /// Number of characters of R_c trivial on the image of the rational ideals
    /// (for F = Q the class group of F is trivial).
    pub fn kappa_c(&self) -> usize {
        self.rayclass.order() / self.rational_image(1000).len()
    }

    /// Kernel of I_F(S)/P_F(c) -> R_c-level classes, by enumeration of rational
    /// ideals up to `bound`: returns (order of source group, kernel order).
    pub fn rational_kernel(&self, bound: u64) -> (usize, usize) {
        let c_rat = self.rational_conductor();
        let mut source: BTreeSet<i64> = BTreeSet::new();
        let mut kernel: BTreeSet<i64> = BTreeSet::new();
        let q = &self.rayclass.quotient;
        let one = q.index(&CycInt::one(3));
        for n in 1..=bound {
            if self.s_prime.iter().any(|w| n % w.ell == 0) {
                continue;
            }
            // Class in F: n mod c_rat up to sign.
            let a = (n % c_rat) as i64;
            let cls = a.min(c_rat as i64 - a);
            source.insert(cls);
            let x = CycInt::from_int(3, n as i128);
            let principal = eisenstein_units().iter().any(|u| q.index(&(u * &x)) == one);
            if principal {
                kernel.insert(cls);
            }
        }
        (source.len(), kernel.len())
    }

    /// c intersected with Z.
    pub fn rational_conductor(&self) -> u64 {
        let q = &self.rayclass.quotient;
        (1..=q.size())
            .find(|&k| q.index(&CycInt::from_int(3, k as i128)) == q.index(&CycInt::zero(3)))
            .unwrap()
    }

    /// True when the ideal is trivial in R_c.
    pub fn is_trivial_class(&self, m: &Ideal) -> Result<bool> {
        Ok(self.class_of(m)?.iter().all(|&k| k == 0))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fmt = |x: &CycInt| format!("{} {}", x.coeffs()[0], x.coeffs()[1]);
        writeln!(out, "{CONTEXT_FORMAT}").unwrap();
        writeln!(out, "r {}", self.r).unwrap();
        writeln!(out, "seed {}", self.seed).unwrap();
        for (w, e) in &self.c_modulus {
            writeln!(out, "c_modulus {} {}", fmt(&w.generator), e).unwrap();
        }
        writeln!(out, "rayclass_dim {}", self.rayclass.dim).unwrap();
        for e in &self.e0 {
            writeln!(out, "e0 {} {}", fmt(&e.ideal.generator), fmt(&e.m)).unwrap();
        }
        out
    }

    /// Parses a serialized context; the context is rebuilt from S' and the
    /// seed and must reproduce every recorded line.
    pub fn from_text(text: &str) -> Result<SymbolContext> {
        let mut lines = text.lines();
        if lines.next() != Some(CONTEXT_FORMAT) {
            return Err(Error::Parse("unknown context format".into()));
        }
        let mut seed = 0;
        let mut sp = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<i128> {
                parts.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse(line.to_string()))
            };
            match parts.first() {
                Some(&"seed") => seed = num(1)? as u64,
                Some(&"c_modulus") => {
                    let g = CycInt::eis(num(1)?, num(2)?);
                    let ideal = Ideal::principal(&g)?;
                    sp.extend(ideal.factors.into_iter().map(|(p, _)| p));
                }
                Some(&"r") if num(1)? != 3 => return Err(Error::UnsupportedOrder(num(1)? as u32)),
                _ => {}
            }
        }
        let ctx = SymbolContext::build(&sp, seed)?;
        if ctx.to_text() != text {
            return Err(Error::Parse("context does not reproduce from its S' and seed".into()));
        }
        Ok(ctx)
    }
}

/// m = (m0) e g^3 with m0 = numerator / (m_e g^3) = 1 mod c.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub numerator: CycInt,
    pub m_e: CycInt,
    pub coords: Vec<u8>,
    pub g: CycInt,
}

/// Cubic symbol chi_n(w) = <n / w> for a rational n and prime w prime to 3n,
/// via the fast prime-field route.
pub fn rational_symbol_at(n: i64, w: &PrimeIdeal) -> Option<u32> {
    if w.ramified {
        return None;
    }
    if w.f == 2 {
        // n is a cube in F_{ell^2} whenever it is rational: n^((ell^2-1)/3) = 1.
        return (n.rem_euclid(w.ell as i64) != 0).then_some(0);
    }
    cubic_symbol_rational_split(n, w.ell, split_omega(w))
}

pub fn is_admissible_prime(ell: u64) -> bool {
    is_prime(ell) && ell != 3
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> &'static SymbolContext {
        static CTX: std::sync::OnceLock<SymbolContext> = std::sync::OnceLock::new();
        CTX.get_or_init(SymbolContext::standard)
    }

    fn small_primes() -> Vec<PrimeIdeal> {
        let mut v = Vec::new();
        for ell in primes_up_to(200) {
            if ell != 3 {
                v.extend(primes_above(ell).unwrap());
            }
        }
        v
    }

    #[test]
    fn classical_examples() {
        let w7 = crate::cyclotomic::prime_above(7, 3).unwrap();
        assert_eq!(classical_symbol(&w7, &CycInt::one(3)).unwrap(), 0);
        let rf = ResidueField::new(&w7).unwrap();
        // 2^2 = 4 compared against the images of 1, omega, omega^2 mod w.
        let om = split_omega(&w7);
        let expect = [1, om, om * om % 7].iter().position(|&x| x == 4).unwrap() as u32;
        assert_eq!(classical_symbol(&w7, &CycInt::from_int(3, 2)).unwrap(), expect);
        assert_eq!(rf.cubic_exponent(&rf.reduce(&CycInt::from_int(3, 2))), Some(expect));
        let w13 = crate::cyclotomic::prime_above(13, 3).unwrap();
        assert_eq!(
            classical_symbol(&w7, &w13.generator).unwrap(),
            classical_symbol(&w13, &w7.generator).unwrap()
        );
        assert_eq!(classical_symbol(&PrimeIdeal::lambda(), &CycInt::one(3)), Err(Error::RamifiedPlace));
        assert_eq!(classical_symbol(&w7, &w7.generator), Err(Error::NotCoprime));
    }

    #[test]
    fn cubic_reciprocity_for_primaries() {
        let ps: Vec<_> = small_primes().into_iter().filter(|p| p.is_split()).take(20).collect();
        for a in &ps {
            for b in &ps {
                if a.ell != b.ell {
                    assert_eq!(
                        classical_symbol(a, &b.generator).unwrap(),
                        classical_symbol(b, &a.generator).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn lambda_exponent_is_four() {
        assert_eq!(lambda_exponent(), 4);
        assert!(!lambda_power_cubes_cover(3, 9));
    }

    #[test]
    fn standard_context_structure() {
        let c = ctx();
        assert_eq!(c.lambda_exponent(), 4);
        assert_eq!(c.rayclass.unit_group_order, 54);
        assert_eq!(c.rayclass.order(), 9);
        assert_eq!(c.rational_conductor(), 9);
        assert_eq!(c.kappa_c(), 3);
        assert!(c.e0[0].rational);
        assert_eq!(c.e0[0].m, CycInt::from_int(3, 2));
        assert!(!c.e0[1].rational);
        // trivial rational classes are exactly n = +-1 mod 9
        for n in 1..200u64 {
            if n % 3 != 0 {
                let t = c.is_trivial_class(&Ideal::rational(n).unwrap()).unwrap();
                assert_eq!(t, n % 9 == 1 || n % 9 == 8, "n = {n}");
            }
        }
        assert_eq!(SymbolContext::standard().to_text(), c.to_text());
    }

    #[test]
    fn rational_kernel_is_trivial() {
        let (source, kernel) = ctx().rational_kernel(500);
        assert_eq!(source, 3);
        assert_eq!(kernel, 1);
        assert!(kernel.is_power_of_two());
    }

    #[test]
    fn context_roundtrip() {
        let text = ctx().to_text();
        let back = SymbolContext::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert!(SymbolContext::from_text("garbage").is_err());
        let w7 = crate::cyclotomic::prime_above(7, 3).unwrap();
        let bigger = SymbolContext::build(&[PrimeIdeal::lambda(), w7], 0).unwrap();
        assert_eq!(bigger.s_prime.len(), 3);
        assert!(bigger.rayclass.order().is_power_of_two() || bigger.rayclass.order() % 3 == 0);
    }

    #[test]
    fn extended_symbol_examples() {
        let c = ctx();
        let ps = small_primes();
        let n = Ideal::from_prime(&ps[5]);
        let cube = Ideal::from_prime(&ps[2]).pow(3);
        assert_eq!(c.extended_symbol(&cube, &n).unwrap(), 0);
        let w7 = Ideal::from_prime(&crate::cyclotomic::prime_above(7, 3).unwrap());
        let w13 = Ideal::from_prime(&crate::cyclotomic::prime_above(13, 3).unwrap());
        let coords = c.class_of(&w7).unwrap();
        let (_, m_e) = c.representative(&coords);
        let u = c.normalizing_units(&w7.generator, &m_e);
        let via_classical = classical_symbol(&w13.factors[0].0, &(&u[0] * &w7.generator)).unwrap();
        assert_eq!(c.extended_symbol(&w7, &w13).unwrap(), via_classical);
        assert_eq!(c.extended_symbol(&w7, &w7), Err(Error::NotCoprime));
        let lam = Ideal::from_prime(&PrimeIdeal::lambda());
        assert_eq!(c.extended_symbol(&lam, &w7), Err(Error::NotInIS));
    }

    #[test]
    fn rational_twists_reduce_to_classical() {
        let c = ctx();
        for n in [2u64, 4, 5, 7, 10, 17, 19, 28] {
            let ni = Ideal::rational(n).unwrap();
            for w in small_primes().iter().filter(|w| n % w.ell != 0).take(30) {
                let wi = Ideal::from_prime(w);
                assert_eq!(
                    c.extended_symbol(&ni, &wi).unwrap(),
                    classical_symbol(w, &CycInt::from_int(3, n as i128)).unwrap()
                );
                assert_eq!(rational_symbol_at(n as i64, w), Some(classical_symbol(w, &CycInt::from_int(3, n as i128)).unwrap()));
            }
        }
    }

    fn coprime_ideal_strategy() -> impl Strategy<Value = Ideal> {
        let ps: Vec<PrimeIdeal> = small_primes().into_iter().filter(|p| p.norm() <= 200).collect();
        let k = ps.len();
        prop::collection::vec((0..k, 1u32..3), 1..3).prop_map(move |v| {
            Ideal::from_factors(v.into_iter().map(|(i, e)| (ps[i].clone(), e)).collect())
        })
    }

    #[test]
    fn alpha_constant_on_class_representatives() {
        let c = ctx();
        let mut by_class: std::collections::BTreeMap<Vec<u8>, Vec<Ideal>> = Default::default();
        for ell in primes_up_to(1500) {
            if ell == 3 {
                continue;
            }
            for w in primes_above(ell).unwrap() {
                let i = Ideal::from_prime(&w);
                by_class.entry(c.class_of(&i).unwrap()).or_default().push(i);
            }
        }
        assert_eq!(by_class.len(), 9);
        for (cm, ms) in &by_class {
            for (cn, ns) in &by_class {
                let mut values = BTreeSet::new();
                let mut pairs = 0;
                for m in ms.iter().take(8) {
                    for n in ns.iter().take(8) {
                        if m.is_coprime(n) && pairs < 5 {
                            values.insert(c.reciprocity_alpha(m, n).unwrap());
                            pairs += 1;
                        }
                    }
                }
                assert_eq!(values.len(), 1, "classes {cm:?} {cn:?}");
            }
        }
        let trivial = &by_class[&vec![0, 0]];
        for m in trivial.iter().take(6) {
            for n in trivial.iter().take(6) {
                if m.is_coprime(n) {
                    assert_eq!(c.reciprocity_alpha(m, n).unwrap(), 0);
                }
            }
        }
    }

    fn prime_strategy() -> impl Strategy<Value = Ideal> {
        let ps: Vec<PrimeIdeal> = small_primes().into_iter().filter(|p| p.norm() <= 200).collect();
        let k = ps.len();
        (0..k).prop_map(move |i| Ideal::from_prime(&ps[i]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn multiplicativity(m in coprime_ideal_strategy(), n1 in coprime_ideal_strategy(), n2 in coprime_ideal_strategy()) {
            let c = ctx();
            prop_assume!(m.norm <= 10_000 && n1.norm <= 10_000 && n2.norm <= 10_000);
            prop_assume!(m.is_coprime(&n1) && m.is_coprime(&n2) && n1.is_coprime(&n2));
            let lhs = c.extended_symbol(&m, &n1.mul(&n2)).unwrap();
            let rhs = (c.extended_symbol(&m, &n1).unwrap() + c.extended_symbol(&m, &n2).unwrap()) % 3;
            prop_assert_eq!(lhs, rhs);
            let lhs = c.extended_symbol(&n1.mul(&n2), &m).unwrap();
            let rhs = (c.extended_symbol(&n1, &m).unwrap() + c.extended_symbol(&n2, &m).unwrap()) % 3;
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn invariant_under_cubes(m in coprime_ideal_strategy(), a in prime_strategy(), n in coprime_ideal_strategy()) {
            let c = ctx();
            prop_assume!(m.is_coprime(&n) && a.is_coprime(&n));
            let ma = m.mul(&a.pow(3));
            prop_assert_eq!(c.extended_symbol(&ma, &n).unwrap(), c.extended_symbol(&m, &n).unwrap());
        }

        #[test]
        fn decomposition_independence(m in coprime_ideal_strategy(), n in coprime_ideal_strategy(), g1 in prime_strategy(), g2 in prime_strategy()) {
            let c = ctx();
            prop_assume!(m.is_coprime(&n) && g1.is_coprime(&n) && g2.is_coprime(&n));
            let d1 = c.decompose(&m, &g1.generator).unwrap();
            let d2 = c.decompose(&m, &g2.generator).unwrap();
            // second decomposition also flips the unit by -1 (a cube)
            let d2 = Decomposition { numerator: -&d2.numerator, ..d2 };
            let v1 = c.symbol_from_decomposition(&d1, &n).unwrap();
            prop_assert_eq!(v1, c.symbol_from_decomposition(&d2, &n).unwrap());
            prop_assert_eq!(v1, c.extended_symbol(&m, &n).unwrap());
        }

        #[test]
        fn alpha_is_class_function(m in coprime_ideal_strategy(), n in coprime_ideal_strategy(), a in prime_strategy(), b in prime_strategy()) {
            // m' = m * (x) with x = 1 mod c lies in the same class; build x from
            // the products a^9 b^9 which are trivial in R_c (exponent 3 group)
            // together with the cube ideals that R_c kills.
            let c = ctx();
            let m2 = m.mul(&a.pow(3));
            let n2 = n.mul(&b.pow(3));
            prop_assume!(m.is_coprime(&n) && m2.is_coprime(&n2));
            prop_assert_eq!(c.class_of(&m).unwrap(), c.class_of(&m2).unwrap());
            prop_assert_eq!(c.reciprocity_alpha(&m, &n).unwrap(), c.reciprocity_alpha(&m2, &n2).unwrap());
        }
    }
}
