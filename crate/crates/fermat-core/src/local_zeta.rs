//! Local data of the twisted Fermat curve `W: x^p + y^p = delta` and its
//! quotient `C: v^p = u (delta - u)`: point counts by enumeration, the
//! Jacobi-sum numerator `P_v(T)` of the zeta function of C, and the torsion
//! witnesses built from `P_v(1)`.
//!
//! Projective bookkeeping: C has exactly one point at infinity (the pole of
//! `u` is totally ramified since p is odd), so `#C~ = #C_affine + 1`. W has
//! `#{t : t^p = -1}` points on the line at infinity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factor, gcd, is_prime, mult_order, power_free_part, primes_up_to};
use crate::cyclotomic::{check_order, primes_above, CycInt};
use crate::error::{Error, Result};
use crate::ff::{char_pinned_to, jacobi_sum, make_field, FieldSpec};
use crate::symbols::ResidueField;

/// The class of delta modulo p-th powers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistClass {
    pub p: u32,
    pub delta: i64,
    pub delta_free: i64,
    pub supp: Vec<u64>,
}

impl TwistClass {
    pub fn new(p: u32, delta: i64) -> Result<TwistClass> {
        if p < 3 || !is_prime(p as u64) {
            return Err(Error::InvalidInput(format!("p = {p} must be an odd prime")));
        }
        if delta == 0 {
            return Err(Error::InvalidInput("delta must be nonzero".into()));
        }
        let (delta_free, supp) = power_free_part(delta, p);
        Ok(TwistClass { p, delta, delta_free, supp })
    }

    pub fn has_good_reduction_at(&self, ell: u64) -> bool {
        ell != self.p as u64 && self.delta.unsigned_abs() % ell != 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curve {
    /// x^p + y^p = delta
    W,
    /// v^p = u (delta - u)
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    JacobiSum,
    PointCount,
}

/// The numerator P_v(T) of the zeta function of C at v = ell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalLPolynomial {
    pub ell: u64,
    pub f_v: u32,
    pub coeffs: Vec<i128>,
    pub provenance: Provenance,
    /// The Jacobi-sum eigenvalues chi_w(delta^2) j(chi_w, chi_w), one per w | v.
    #[serde(skip)]
    pub alphas: Vec<CycInt>,
}

impl LocalLPolynomial {
    pub fn eval(&self, t: i128) -> i128 {
        self.coeffs.iter().rev().fold(0, |acc, &c| acc * t + c)
    }

    pub fn at_one(&self) -> i128 {
        self.eval(1)
    }

    /// Power sums s_k of the reciprocal roots, from Newton's identities.
    pub fn power_sums(&self, kmax: usize) -> Vec<i128> {
        let c = |j: usize| self.coeffs.get(j).copied().unwrap_or(0);
        let mut s = vec![0i128; kmax + 1];
        for k in 1..=kmax {
            let mut v = -(k as i128) * c(k);
            for j in 1..k {
                v -= c(j) * s[k - j];
            }
            s[k] = v;
        }
        s
    }

    /// Projective count of C over F_{ell^k} predicted by P.
    pub fn predicted_count(&self, k: u32) -> i128 {
        let s = self.power_sums(k as usize);
        (self.ell as i128).pow(k) + 1 - s[k as usize]
    }

    /// Every reciprocal root has absolute value sqrt(ell) (checked through the
    /// eigenvalues: |alpha|^2 = ell^f_v at every embedding).
    pub fn weil_ok(&self, tol: f64) -> bool {
        let target = (self.ell as f64).powi(self.f_v as i32);
        self.alphas.iter().all(|a| {
            (1..a.r())
                .filter(|&j| gcd(j as u64, a.r() as u64) == 1)
                .all(|j| (a.embed(j).norm_sqr() / target - 1.0).abs() < tol)
        })
    }
}

/// Counts affine points of W or C over the given field, and checks that
/// (x, y) -> (x^p, xy) maps every W-point onto C.
pub fn count_points(curve: Curve, tc: &TwistClass, field: &FieldSpec) -> Result<u64> {
    Ok(count_points_detailed(curve, tc, field)?.0)
}

/// (affine count, points at infinity).
pub fn count_points_detailed(curve: Curve, tc: &TwistClass, field: &FieldSpec) -> Result<(u64, u64)> {
    let ell = field.ell;
    if !tc.has_good_reduction_at(ell) {
        return Err(Error::BadReduction(ell));
    }
    let q = field.q() as usize;
    let p = tc.p as u64;
    // p-th power map as an index table, plus preimage counts.
    let mut pow_idx = vec![0u32; q];
    let mut preimages = vec![0u32; q];
    for i in 0..q {
        let x = field.from_index(i as u64);
        let y = field.index(&field.pow(&x, p)) as usize;
        pow_idx[i] = y as u32;
        preimages[y] += 1;
    }
    let delta = field.from_int(tc.delta);
    let minus_one = field.index(&field.from_int(-1)) as usize;
    match curve {
        Curve::C => {
            let mut count = 0u64;
            for i in 0..q {
                let u = field.from_index(i as u64);
                let rhs = field.mul(&u, &field.sub(&delta, &u));
                count += preimages[field.index(&rhs) as usize] as u64;
            }
            Ok((count, 1))
        }
        Curve::W => {
            // roots[y] lists the x with x^p = y, for the morphism check.
            let mut roots: Vec<Vec<u32>> = vec![Vec::new(); q];
            for (i, &y) in pow_idx.iter().enumerate() {
                roots[y as usize].push(i as u32);
            }
            let mut count = 0u64;
            for i in 0..q {
                let xp = field.from_index(pow_idx[i] as u64);
                let target = field.sub(&delta, &xp);
                let x = field.from_index(i as u64);
                for &j in &roots[field.index(&target) as usize] {
                    count += 1;
                    let y = field.from_index(j as u64);
                    let v = field.mul(&x, &y);
                    let lhs = field.pow(&v, p);
                    let rhs = field.mul(&xp, &field.sub(&delta, &xp));
                    if lhs != rhs {
                        return Err(Error::InvalidInput("twisting morphism left the quotient curve".into()));
                    }
                }
            }
            Ok((count, preimages[minus_one] as u64))
        }
    }
}

/// Projective point count of the smooth model.
pub fn projective_count(curve: Curve, tc: &TwistClass, field: &FieldSpec) -> Result<u64> {
    let (a, inf) = count_points_detailed(curve, tc, field)?;
    Ok(a + inf)
}

fn cyc_poly_mul(a: &[CycInt], b: &[CycInt]) -> Vec<CycInt> {
    let r = a[0].r();
    let mut out = vec![CycInt::zero(r); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

/// The Jacobi-sum eigenvalues at v = ell: for p = 3 one per prime w | ell of
/// Z[omega], using the residue-symbol pinning omega -> omega mod w; for other
/// p one per Frobenius orbit of primitive p-th roots in F_{ell^f}.
fn eigenvalues(tc: &TwistClass, ell: u64) -> Result<(u32, Vec<CycInt>)> {
    let p = tc.p;
    check_order(p)?;
    let f = mult_order(ell % p as u64, p as u64) as u32;
    let d2 = tc.delta.checked_mul(tc.delta).ok_or(Error::InvalidInput("delta too large".into()))?;
    let mut alphas = Vec::new();
    if p == 3 {
        for w in primes_above(ell)? {
            let rf = ResidueField::new(&w)?;
            let chi = char_pinned_to(&rf.field, 3, &rf.omega)?;
            let j = jacobi_sum(&chi, &chi)?;
            let e = chi.eval(&rf.field.from_int(d2)).ok_or(Error::BadReduction(ell))?;
            alphas.push(&CycInt::zeta_pow(3, e as i64) * &j);
        }
    } else {
        let field = make_field(ell, f)?;
        let h = field.pow(&field.least_generator(), (field.q() - 1) / p as u64);
        let mut seen = vec![false; p as usize];
        for k in 1..p as u64 {
            if seen[k as usize] {
                continue;
            }
            let mut t = k;
            loop {
                seen[t as usize] = true;
                t = t * ell % p as u64;
                if t == k {
                    break;
                }
            }
            let chi = char_pinned_to(&field, p, &field.pow(&h, k))?;
            let j = jacobi_sum(&chi, &chi)?;
            let e = chi.eval(&field.from_int(d2)).ok_or(Error::BadReduction(ell))?;
            alphas.push(&CycInt::zeta_pow(p, e as i64) * &j);
        }
    }
    Ok((f, alphas))
}

/// P_v(T) = prod_{w | v} (1 - chi_w(delta^2) j(chi_w, chi_w) T^f_v).
pub fn local_l_polynomial(tc: &TwistClass, ell: u64) -> Result<LocalLPolynomial> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    if !tc.has_good_reduction_at(ell) {
        return Err(Error::BadReduction(ell));
    }
    let (f, alphas) = eigenvalues(tc, ell)?;
    let r = tc.p;
    let mut poly = vec![CycInt::one(r)];
    for a in &alphas {
        let mut factor = vec![CycInt::zero(r); f as usize + 1];
        factor[0] = CycInt::one(r);
        factor[f as usize] = -a;
        poly = cyc_poly_mul(&poly, &factor);
    }
    let coeffs = poly
        .iter()
        .map(|c| c.as_rational().ok_or(Error::InvalidInput("P_v(T) is not rational".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalLPolynomial { ell, f_v: f, coeffs, provenance: Provenance::JacobiSum, alphas })
}

/// P_v(T) for p = 3 recovered from a point count over F_ell alone
/// (degree 2: 1 - a T + ell T^2 with a = ell + 1 - #C~(F_ell)).
pub fn local_l_polynomial_from_counts(tc: &TwistClass, ell: u64) -> Result<LocalLPolynomial> {
    if tc.p != 3 {
        return Err(Error::UnsupportedOrder(tc.p));
    }
    let field = make_field(ell, 1)?;
    let n = projective_count(Curve::C, tc, &field)? as i128;
    let a = ell as i128 + 1 - n;
    Ok(LocalLPolynomial {
        ell,
        f_v: 0,
        coeffs: vec![1, -a, ell as i128],
        provenance: Provenance::PointCount,
        alphas: Vec::new(),
    })
}

/// Outcome of comparing P_v against enumeration over F_{ell^k}, k = 1..2g.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZetaReport {
    pub ell: u64,
    pub coeffs: Vec<i128>,
    /// (k, predicted, counted)
    pub checks: Vec<(u32, i128, i128)>,
}

pub fn verify_zeta(tc: &TwistClass, ell: u64) -> Result<ZetaReport> {
    verify_zeta_upto(tc, ell, tc.p - 1)
}

/// As `verify_zeta` but only for k = 1..=kmax.
pub fn verify_zeta_upto(tc: &TwistClass, ell: u64, kmax: u32) -> Result<ZetaReport> {
    let poly = local_l_polynomial(tc, ell)?;
    let mut checks = Vec::new();
    for k in 1..=kmax {
        let field = make_field(ell, k)?;
        let counted = projective_count(Curve::C, tc, &field)? as i128;
        let expected = poly.predicted_count(k);
        if counted != expected {
            return Err(Error::Mismatch { k, expected, counted });
        }
        checks.push((k, expected, counted));
    }
    Ok(ZetaReport { ell, coeffs: poly.coeffs, checks })
}

/// Local polynomials for all good primes up to `ell_max`, ascending.
pub fn zeta_table(tc: &TwistClass, ell_max: u64) -> Result<Vec<LocalLPolynomial>> {
    primes_up_to(ell_max as usize)
        .into_par_iter()
        .filter(|&ell| tc.has_good_reduction_at(ell))
        .map(|ell| local_l_polynomial(tc, ell))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionWitness {
    pub q: u64,
    pub ell: u64,
    pub pv_at_one: i128,
    pub residue: i128,
}

/// A prime ell = 2 mod 3, ell = 1 mod q, ell not dividing delta, at which
/// P_v(1) is prime to q, which rules out rational q-torsion.
pub fn torsion_exclude(tc: &TwistClass, q: u64) -> Result<TorsionWitness> {
    if tc.p != 3 {
        return Err(Error::UnsupportedOrder(tc.p));
    }
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if q == 2 || q == 3 {
        return Err(Error::RoutedToTorsionBound(q));
    }
    const BOUND: u64 = 1_000_000;
    let mut ell = q + 1;
    while ell < BOUND {
        if ell % 3 == 2 && is_prime(ell) && tc.has_good_reduction_at(ell) {
            let pv1 = local_l_polynomial(tc, ell)?.at_one();
            let residue = pv1.rem_euclid(q as i128);
            if residue != 0 {
                return Ok(TorsionWitness { q, ell, pv_at_one: pv1, residue });
            }
        }
        ell += q;
    }
    Err(Error::NoWitnessBelow(BOUND))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CqCertificate {
    pub q: u64,
    pub c: u32,
    /// sigma as a residue mod lcm(3, q^c) in Gal(Q(zeta_N)/Q) = (Z/N)^x.
    pub sigma: u64,
    pub level: u64,
    pub restricted_order: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionBound {
    pub m: u64,
    pub certificates: Vec<CqCertificate>,
}

/// M = prod_{q | 2 D} q^{c_q} for F = Q, p = 3, where c_q is the least c
/// such that some sigma in Gal(Q(omega, mu_{q^c})/Q) acts nontrivially on
/// omega while its restriction to Q(mu_{q^c}) has order > f = 1.
pub fn torsion_bound_m(tc: &TwistClass) -> Result<TorsionBound> {
    if tc.p != 3 {
        return Err(Error::UnsupportedOrder(tc.p));
    }
    let f = 1u64;
    let disc: u64 = 3;
    let mut primes: Vec<u64> = factor(2 * disc).into_iter().map(|(q, _)| q).collect();
    primes.sort();
    let mut m = 1u64;
    let mut certificates = Vec::new();
    for q in primes {
        let mut found = None;
        'levels: for c in 1..=6u32 {
            let qc = q.pow(c);
            let n = 3 * qc / gcd(3, qc);
            for sigma in 1..n {
                if gcd(sigma, n) != 1 || sigma % 3 != 2 {
                    continue;
                }
                let ord = if qc <= 2 { 1 } else { mult_order(sigma % qc, qc) };
                if ord > f {
                    found = Some(CqCertificate { q, c, sigma, level: n, restricted_order: ord });
                    break 'levels;
                }
            }
        }
        let cert = found.ok_or(Error::NoWitnessBelow(q.pow(6)))?;
        m *= q.pow(cert.c);
        certificates.push(cert);
    }
    Ok(TorsionBound { m, certificates })
}
