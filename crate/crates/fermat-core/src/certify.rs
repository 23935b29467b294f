//! Certificates that `x^3 + y^3 = delta` has no rational points, from a
//! nonvanishing central value, cross-checked by a bounded point search.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{exact_cbrt, factor, gcd, power_free_part};
use crate::error::{Error, Result};
use crate::hecke::{central_value, nonvanishing_decide, NonvanishingVerdict, DEFAULT_MARGIN};

pub const SCHEMA_VERSION: u32 = 1;

/// Conventions that change certificate contents when altered.
pub const NORMALIZATION: &str = "r=3;primary=2mod3;psi(pi)=-pi/sqrt(N);center=1/2;margin-test=|L|>M*err";

pub const CACHE_ENV: &str = "FERMAT_CACHE_DIR";
pub const TIMESTAMP_ENV: &str = "FERMAT_TIMESTAMP";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NotCertifiedReason {
    PreconditionFails,
    LValueZeroConsistent,
    LValueIndeterminate,
    PointFound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Certified,
    NotCertified(NotCertifiedReason),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Certified => "Certified",
            Verdict::NotCertified(NotCertifiedReason::PreconditionFails) => "NotCertified(PreconditionFails)",
            Verdict::NotCertified(NotCertifiedReason::LValueZeroConsistent) => "NotCertified(LValueZeroConsistent)",
            Verdict::NotCertified(NotCertifiedReason::LValueIndeterminate) => "NotCertified(LValueIndeterminate)",
            Verdict::NotCertified(NotCertifiedReason::PointFound) => "NotCertified(PointFound)",
        }
    }
}

/// A primitive solution of a^3 + b^3 = delta c^3, i.e. the point (a/c, b/c).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RationalPoint {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl RationalPoint {
    pub fn verify(&self, delta: i64) -> bool {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        a * a * a + b * b * b == delta as i128 * c * c * c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchCrosscheck {
    pub height_bound: u64,
    pub points_found: Vec<RationalPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Toolchain {
    pub version: String,
    pub normalization_fingerprint: String,
}

impl Toolchain {
    pub fn current() -> Self {
        Toolchain { version: env!("CARGO_PKG_VERSION").to_string(), normalization_fingerprint: fingerprint() }
    }
}

/// FNV-1a of the normalization string, hex encoded.
pub fn fingerprint() -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in NORMALIZATION.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: u32,
    pub p: u32,
    pub delta: i64,
    pub delta_free: i64,
    pub supp: Vec<u64>,
    pub s: Vec<u64>,
    pub precondition_pass: bool,
    /// Numerical value of L(1/2) in the unitary normalization; None when the
    /// precondition already fails and no value was requested.
    pub l_value: Option<Complex64>,
    pub error_estimate: Option<f64>,
    /// The analytic part is a heuristic truncation estimate, not a proof.
    pub analytic_status: String,
    pub margin: f64,
    pub truncation: Option<usize>,
    pub conductor: Option<u64>,
    pub root_number: Option<i8>,
    pub nonvanishing: Option<NonvanishingVerdict>,
    pub verdict: Verdict,
    pub search_crosscheck: SearchCrosscheck,
    pub toolchain: Toolchain,
    pub timestamp: String,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Certificate> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub height: u64,
    pub margin: f64,
    pub x_min: Option<usize>,
    pub timestamp: Option<String>,
    /// Evaluate the L-value even when the precondition fails.
    pub always_evaluate: bool,
    pub cache_dir: Option<PathBuf>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            height: 1000,
            margin: DEFAULT_MARGIN,
            x_min: None,
            timestamp: None,
            always_evaluate: true,
            cache_dir: std::env::var_os(CACHE_ENV).map(PathBuf::from),
        }
    }
}

/// Rational primes above 2 * disc(Q(omega)).
pub fn exceptional_primes() -> Vec<u64> {
    let disc: i64 = -3;
    let mut s: Vec<u64> = factor(2 * disc.unsigned_abs()).into_iter().map(|(q, _)| q).collect();
    s.sort();
    s
}

/// Primes at which the valuation of delta is not a multiple of 3.
pub fn support(delta: i64) -> Vec<u64> {
    factor(delta.unsigned_abs()).into_iter().filter(|&(_, e)| e % 3 != 0).map(|(q, _)| q).collect()
}

fn cube_sieve_modulus() -> (u64, Vec<Vec<bool>>) {
    let moduli = [7usize, 9, 13];
    let m: usize = moduli.iter().product();
    let cubes: Vec<Vec<bool>> = moduli
        .iter()
        .map(|&q| {
            let mut t = vec![false; q];
            for x in 0..q {
                t[x * x * x % q] = true;
            }
            t
        })
        .collect();
    // allowed[r][a]: r - a^3 is a cube modulo 7, 9 and 13
    let allowed = (0..m)
        .map(|r| {
            (0..m)
                .map(|a| {
                    let d = (r + m - a * a % m * a % m) % m;
                    moduli.iter().zip(&cubes).all(|(&q, t)| t[d % q])
                })
                .collect()
        })
        .collect();
    (m as u64, allowed)
}

/// All primitive (a, b, c) with a^3 + b^3 = delta c^3, 0 < c <= height and
/// |a|, |b| <= height * ceil(|delta|^(1/3) + 1), sorted; (a, b) and (b, a)
/// are both listed.
pub fn point_search(delta: i64, height: u64) -> Result<Vec<RationalPoint>> {
    if delta == 0 {
        return Err(Error::InvalidInput("delta must be nonzero".into()));
    }
    if height > 1_000_000 {
        return Err(Error::BudgetExceeded(format!("height {height}")));
    }
    let d = delta.unsigned_abs() as i128;
    let sign: i64 = delta.signum();
    let bound = height as i128 * ((d as f64).cbrt() + 1.0).ceil() as i128;
    let (m, allowed) = cube_sieve_modulus();
    let m = m as i128;
    let mut found: Vec<RationalPoint> = (1..=height as i128)
        .into_par_iter()
        .flat_map_iter(|c| {
            let target = d * c * c * c;
            let r = target.rem_euclid(m) as usize;
            let row = &allowed[r];
            // a >= b forces 2 a^3 >= target
            let a_min = (((target as f64) / 2.0).cbrt().floor() as i128 - 1).max(0);
            let mut out = Vec::new();
            for a in a_min..=bound {
                if !row[a.rem_euclid(m) as usize] {
                    continue;
                }
                let rest = target - a * a * a;
                if let Some(b) = exact_cbrt(rest) {
                    if b > a || b.abs() > bound {
                        continue;
                    }
                    if gcd(gcd(a.unsigned_abs() as u64, b.unsigned_abs() as u64), c as u64) != 1 {
                        continue;
                    }
                    let (a, b) = (sign * a as i64, sign * b as i64);
                    out.push(RationalPoint { a, b, c: c as i64 });
                    if a != b {
                        out.push(RationalPoint { a: b, b: a, c: c as i64 });
                    }
                }
            }
            out.into_iter()
        })
        .collect();
    found.sort();
    Ok(found)
}

fn cache_path(dir: &Path, delta: i64, opts: &CertifyOptions) -> PathBuf {
    let x = opts.x_min.map_or("auto".to_string(), |x| x.to_string());
    dir.join(format!("p3-{}", fingerprint())).join(format!("delta{delta}_h{}_m{}_x{x}.json", opts.height, opts.margin))
}

/// Writes through a temporary file and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn timestamp(opts: &CertifyOptions) -> String {
    if let Some(t) = &opts.timestamp {
        return t.clone();
    }
    if let Ok(t) = std::env::var(TIMESTAMP_ENV) {
        return t;
    }
    let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("unix:{secs}")
}

pub fn certify(delta: i64) -> Result<Certificate> {
    certify_with(delta, &CertifyOptions::default())
}

pub fn certify_with(delta: i64, opts: &CertifyOptions) -> Result<Certificate> {
    if delta == 0 {
        return Err(Error::InvalidInput("delta must be nonzero".into()));
    }
    if let Some(dir) = &opts.cache_dir {
        let path = cache_path(dir, delta, opts);
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(cert) = Certificate::from_json(&text) {
                return Ok(cert);
            }
        }
        let cert = compute_certificate(delta, opts)?;
        write_atomic(&path, &cert.to_json()?)?;
        return Ok(cert);
    }
    compute_certificate(delta, opts)
}

fn compute_certificate(delta: i64, opts: &CertifyOptions) -> Result<Certificate> {
    let (delta_free, _) = power_free_part(delta, 3);
    let supp = support(delta_free);
    let s = exceptional_primes();
    let precondition_pass = supp.iter().any(|q| !s.contains(q));

    let analytic = if precondition_pass || opts.always_evaluate {
        let cv = central_value(delta_free.abs(), opts.x_min)?;
        let value = Complex64::new(cv.value, 0.0);
        Some((value, cv.error, cv.x, cv.conductor, cv.root_number, nonvanishing_decide(value, cv.error, opts.margin)))
    } else {
        None
    };
    let points = point_search(delta_free, opts.height)?;
    for p in &points {
        if !p.verify(delta_free) {
            return Err(Error::InvalidInput(format!("search returned a non-solution {p:?}")));
        }
    }

    let verdict = if !precondition_pass {
        Verdict::NotCertified(NotCertifiedReason::PreconditionFails)
    } else {
        match analytic.as_ref().map(|a| a.5) {
            Some(NonvanishingVerdict::NonZero) if points.is_empty() => Verdict::Certified,
            Some(NonvanishingVerdict::NonZero) => Verdict::NotCertified(NotCertifiedReason::PointFound),
            Some(NonvanishingVerdict::ZeroConsistent) => Verdict::NotCertified(NotCertifiedReason::LValueZeroConsistent),
            _ => Verdict::NotCertified(NotCertifiedReason::LValueIndeterminate),
        }
    };

    Ok(Certificate {
        schema: SCHEMA_VERSION,
        p: 3,
        delta,
        delta_free,
        supp,
        s,
        precondition_pass,
        l_value: analytic.as_ref().map(|a| a.0),
        error_estimate: analytic.as_ref().map(|a| a.1),
        analytic_status: "heuristic-analytic".into(),
        margin: opts.margin,
        truncation: analytic.as_ref().map(|a| a.2),
        conductor: analytic.as_ref().map(|a| a.3),
        root_number: analytic.as_ref().map(|a| a.4),
        nonvanishing: analytic.as_ref().map(|a| a.5),
        verdict,
        search_crosscheck: SearchCrosscheck { height_bound: opts.height, points_found: points },
        toolchain: Toolchain::current(),
        timestamp: timestamp(opts),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub delta: i64,
    pub verdict: Verdict,
    pub l_value: Option<f64>,
    pub error_estimate: Option<f64>,
    pub points_found: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub total: usize,
    pub certified: usize,
    pub precondition_fails: usize,
    pub zero_consistent: usize,
    pub indeterminate: usize,
    pub point_found: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema: u32,
    pub range: (i64, i64),
    pub entries: Vec<ScanEntry>,
    pub summary: ScanSummary,
}

/// Certifies every positive cube-free delta in [delta_min, delta_max].
pub fn scan(delta_min: i64, delta_max: i64, opts: &CertifyOptions) -> Result<ScanReport> {
    if delta_max >= delta_min && delta_max - delta_min > 10_000 {
        return Err(Error::BudgetExceeded(format!("range width {}", delta_max - delta_min)));
    }
    let deltas: Vec<i64> =
        (delta_min.max(1)..=delta_max).filter(|&d| power_free_part(d, 3).0 == d).collect();
    let entries: Vec<ScanEntry> = deltas
        .par_iter()
        .map(|&d| {
            certify_with(d, opts).map(|c| ScanEntry {
                delta: d,
                verdict: c.verdict,
                l_value: c.l_value.map(|v| v.re),
                error_estimate: c.error_estimate,
                points_found: c.search_crosscheck.points_found.len(),
            })
        })
        .collect::<Result<_>>()?;
    let mut summary = ScanSummary { total: entries.len(), ..Default::default() };
    for e in &entries {
        match e.verdict {
            Verdict::Certified => summary.certified += 1,
            Verdict::NotCertified(NotCertifiedReason::PreconditionFails) => summary.precondition_fails += 1,
            Verdict::NotCertified(NotCertifiedReason::LValueZeroConsistent) => summary.zero_consistent += 1,
            Verdict::NotCertified(NotCertifiedReason::LValueIndeterminate) => summary.indeterminate += 1,
            Verdict::NotCertified(NotCertifiedReason::PointFound) => summary.point_found += 1,
        }
    }
    Ok(ScanReport { schema: SCHEMA_VERSION, range: (delta_min, delta_max), entries, summary })
}

impl ScanReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<ScanReport> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["delta", "verdict", "l_value", "error_estimate", "points_found"])
            .map_err(|e| Error::Io(e.to_string()))?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
        for e in &self.entries {
            w.write_record([
                e.delta.to_string(),
                e.verdict.label().to_string(),
                fmt(e.l_value),
                fmt(e.error_estimate),
                e.points_found.to_string(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(range: (i64, i64), text: &str) -> Result<ScanReport> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut entries = Vec::new();
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| Error::Parse(s.to_string()))
            }
        };
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let verdict = parse_verdict(&rec[1])?;
            entries.push(ScanEntry {
                delta: rec[0].parse().map_err(|_| Error::Parse(rec[0].to_string()))?,
                verdict,
                l_value: opt(&rec[2])?,
                error_estimate: opt(&rec[3])?,
                points_found: rec[4].parse().map_err(|_| Error::Parse(rec[4].to_string()))?,
            });
        }
        let mut report = ScanReport { schema: SCHEMA_VERSION, range, entries, summary: ScanSummary::default() };
        report.summary.total = report.entries.len();
        for e in &report.entries {
            match e.verdict {
                Verdict::Certified => report.summary.certified += 1,
                Verdict::NotCertified(NotCertifiedReason::PreconditionFails) => report.summary.precondition_fails += 1,
                Verdict::NotCertified(NotCertifiedReason::LValueZeroConsistent) => report.summary.zero_consistent += 1,
                Verdict::NotCertified(NotCertifiedReason::LValueIndeterminate) => report.summary.indeterminate += 1,
                Verdict::NotCertified(NotCertifiedReason::PointFound) => report.summary.point_found += 1,
            }
        }
        Ok(report)
    }
}

fn parse_verdict(s: &str) -> Result<Verdict> {
    [
        Verdict::Certified,
        Verdict::NotCertified(NotCertifiedReason::PreconditionFails),
        Verdict::NotCertified(NotCertifiedReason::LValueZeroConsistent),
        Verdict::NotCertified(NotCertifiedReason::LValueIndeterminate),
        Verdict::NotCertified(NotCertifiedReason::PointFound),
    ]
    .into_iter()
    .find(|v| v.label() == s)
    .ok_or_else(|| Error::Parse(format!("unknown verdict {s}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CertifyOptions {
        CertifyOptions { height: 200, timestamp: Some("fixed".into()), cache_dir: None, ..Default::default() }
    }

    #[test]
    fn exceptional_set() {
        assert_eq!(exceptional_primes(), vec![2, 3]);
        assert_eq!(support(12), vec![2, 3]);
        assert_eq!(support(5 * 8), vec![5]);
    }

    #[test]
    fn search_examples() {
        let p = |a, b, c| RationalPoint { a, b, c };
        assert_eq!(point_search(1, 10).unwrap(), vec![p(0, 1, 1), p(1, 0, 1)]);
        assert_eq!(point_search(2, 10).unwrap(), vec![p(1, 1, 1)]);
        assert!(point_search(7, 10).unwrap().contains(&p(2, -1, 1)));
        assert!(point_search(6, 30).unwrap().contains(&p(37, 17, 21)));
        assert!(point_search(-7, 10).unwrap().contains(&p(-2, 1, 1)));
        assert!(point_search(5, 300).unwrap().is_empty());
    }

    #[test]
    fn search_against_brute_force() {
        for delta in [1i64, 2, 6, 7, 9, 12, 13, 19, 20] {
            let h = 25i64;
            let bound = h * ((delta as f64).cbrt() + 1.0).ceil() as i64;
            let mut want = Vec::new();
            for c in 1..=h {
                for a in -bound..=bound {
                    for b in -bound..=bound {
                        let pt = RationalPoint { a, b, c };
                        if pt.verify(delta) && gcd(gcd(a.unsigned_abs(), b.unsigned_abs()), c as u64) == 1 {
                            want.push(pt);
                        }
                    }
                }
            }
            want.sort();
            assert_eq!(point_search(delta, h as u64).unwrap(), want, "delta = {delta}");
        }
    }

    #[test]
    fn certificates() {
        let c5 = certify_with(5, &quick()).unwrap();
        assert_eq!(c5.verdict, Verdict::Certified);
        assert_eq!(c5.supp, vec![5]);
        let c3 = certify_with(3, &quick()).unwrap();
        assert_eq!(c3.verdict, Verdict::NotCertified(NotCertifiedReason::PreconditionFails));
        let c7 = certify_with(7, &quick()).unwrap();
        assert_eq!(c7.verdict, Verdict::NotCertified(NotCertifiedReason::LValueZeroConsistent));
        assert!(!c7.search_crosscheck.points_found.is_empty());
        let c6 = certify_with(6, &quick()).unwrap();
        assert!(!c6.is_certified());
        assert_eq!(c6.nonvanishing, Some(NonvanishingVerdict::ZeroConsistent));
        assert!(c6.search_crosscheck.points_found.contains(&RationalPoint { a: 17, b: 37, c: 21 }));
    }

    #[test]
    fn cube_class_invariance() {
        for delta in [5i64, 7, 10] {
            let base = certify_with(delta, &quick()).unwrap().verdict;
            for k in [2i64, 3, 5] {
                let c = certify_with(delta * k * k * k, &quick()).unwrap();
                assert_eq!(c.delta_free, delta);
                assert_eq!(c.verdict, base, "delta = {delta}, k = {k}");
            }
        }
    }

    #[test]
    fn json_round_trip_and_cache() {
        let dir = tempfile::tempdir().unwrap();
        let opts = CertifyOptions { cache_dir: Some(dir.path().to_path_buf()), ..quick() };
        let first = certify_with(11, &opts).unwrap();
        let text = first.to_json().unwrap();
        assert_eq!(Certificate::from_json(&text).unwrap(), first);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], 1);
        for key in ["p", "delta", "delta_free", "supp", "s", "precondition_pass", "l_value", "error_estimate", "verdict", "search_crosscheck", "toolchain", "timestamp"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let again = certify_with(11, &CertifyOptions { timestamp: Some("other".into()), ..opts }).unwrap();
        assert_eq!(again.to_json().unwrap(), text);
    }

    #[test]
    fn scan_small_range() {
        let dir = tempfile::tempdir().unwrap();
        let opts = CertifyOptions { cache_dir: Some(dir.path().to_path_buf()), ..quick() };
        let report = scan(1, 20, &opts).unwrap();
        let verdict = |d: i64| report.entries.iter().find(|e| e.delta == d).unwrap().verdict;
        assert_eq!(verdict(5), Verdict::Certified);
        assert_eq!(verdict(11), Verdict::Certified);
        for d in [6, 7, 9] {
            assert_ne!(verdict(d), Verdict::Certified);
        }
        assert!(report.entries.iter().all(|e| e.delta != 8 && e.delta != 16));
        assert!(report.entries.windows(2).all(|w| w[0].delta < w[1].delta));
        let csv = report.to_csv().unwrap();
        assert_eq!(ScanReport::from_csv((1, 20), &csv).unwrap().to_csv().unwrap(), csv);
        assert_eq!(ScanReport::from_json(&report.to_json().unwrap()).unwrap(), report);
        let warm = scan(1, 20, &opts).unwrap();
        assert_eq!(warm.to_csv().unwrap(), csv);
        assert_eq!(warm.to_json().unwrap(), report.to_json().unwrap());
        assert!(scan(20, 1, &opts).unwrap().entries.is_empty());
    }
}
