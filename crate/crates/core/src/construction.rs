//! Construction of the rapidly growing integer sequences that define the
//! target vectors, together with exact partial sums and certified tail
//! bounds.
//!
//! A sequence is built in blocks of `n` terms. The first block is
//! `a_j = 8 * j!`. Block `k >= 1` raises the previous block's last term to
//! the schedule exponent, fills the middle of the block with powers, and
//! closes with a multiplier chosen either from the prescribed constant `c`
//! (`ceil(a/c) * previous`) or from a decay target `phi`
//! (smallest integer multiplier pushing the reciprocal strictly below
//! `phi`). The component `xi_j` of the target vector is the sum of the
//! reciprocals of the terms with index congruent to `j` mod `n`; it is never
//! materialized. All downstream evaluations work at a finite truncation
//! level `k` and return enclosures valid for every admissible continuation
//! of the schedule (all exponents at least 2).

use crate::error::{Error, Result};
use crate::numerics::{ceil_div, format_rational, parse_integer, parse_rational, Enclosure, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Hard cap on term size, in bits. Deep ramp schedules grow the terms
/// doubly-exponentially; refusing early beats exhausting memory.
const TERM_BIT_CAP: u64 = 1 << 25;

/// Exponent schedule `k -> M_k` for the power step of each block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// `M_k = m` for every block.
    Const(u32),
    /// `M_k = m0 + k`, the divergent shape used for the Liouville property.
    Ramp { m0: u32 },
    /// Explicit exponents `M_1, M_2, ...`.
    List(Vec<u32>),
}

impl Schedule {
    /// Exponent for block `k >= 1`.
    pub fn exponent(&self, k: usize) -> Result<u32> {
        match self {
            Schedule::Const(m) => Ok(*m),
            Schedule::Ramp { m0 } => u32::try_from(*m0 as u64 + k as u64)
                .map_err(|_| Error::InvalidArgument("ramp exponent overflows".into())),
            Schedule::List(v) => v.get(k - 1).copied().ok_or(Error::Range {
                what: format!("schedule exponent for block {}", k),
                needed: k,
            }),
        }
    }
}

/// Decay targets that can be evaluated to a decisive enclosure at integer
/// arguments. This is a closed set: the minimal-multiplier rule needs a
/// strict inequality decided exactly, so arbitrary user expressions are out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhiFamily {
    /// `coeff * t^(-exp)`, `exp` a positive integer or half-integer.
    Power { coeff: Rational, exp: Rational },
    /// `coeff * t^(-exp) * (log2 ceil(t))^(-log_exp)`.
    PowerLog {
        coeff: Rational,
        exp: Rational,
        log_exp: Rational,
    },
}

impl PhiFamily {
    pub fn validate(&self) -> Result<()> {
        let check_halfint = |x: &Rational, what: &str| -> Result<()> {
            let den = x.denom();
            if !x.is_positive() || (*den != BigInt::one() && *den != BigInt::from(2)) {
                return Err(Error::InvalidArgument(format!(
                    "{} must be a positive integer or half-integer, got {}",
                    what,
                    format_rational(x)
                )));
            }
            Ok(())
        };
        match self {
            PhiFamily::Power { coeff, exp } => {
                if !coeff.is_positive() {
                    return Err(Error::InvalidArgument("phi coefficient must be positive".into()));
                }
                check_halfint(exp, "phi exponent")
            }
            PhiFamily::PowerLog { coeff, exp, log_exp } => {
                if !coeff.is_positive() {
                    return Err(Error::InvalidArgument("phi coefficient must be positive".into()));
                }
                check_halfint(exp, "phi exponent")?;
                check_halfint(log_exp, "phi log exponent")
            }
        }
    }

    /// Enclosure of `phi(t)` at an integer argument `t >= 2`. Larger `bits`
    /// tighten the square-root and logarithm enclosures; exact cases (integer
    /// exponents, perfect squares, powers of two) give point intervals.
    pub fn eval(&self, t: &BigInt, bits: u32) -> Result<Enclosure> {
        self.validate()?;
        if *t < BigInt::from(2) {
            return Err(Error::InvalidArgument(
                "decay targets are evaluated at integer arguments >= 2".into(),
            ));
        }
        match self {
            PhiFamily::Power { coeff, exp } => {
                let tp = pow_halfint_int(t, exp, bits);
                Ok(inv_pos(&tp)?.scale(coeff))
            }
            PhiFamily::PowerLog { coeff, exp, log_exp } => {
                let tp = pow_halfint_int(t, exp, bits);
                let lg = log2_enclosure(t, bits.max(8));
                let lgp = pow_halfint_interval(&lg, log_exp, bits);
                Ok(inv_pos(&tp)?.mul_nonneg(&inv_pos(&lgp)?).scale(coeff))
            }
        }
    }

    /// Compact textual form, `power:1/2:2` style (the CLI syntax).
    pub fn descriptor(&self) -> String {
        match self {
            PhiFamily::Power { coeff, exp } => {
                format!("power:{}:{}", format_rational(coeff), format_rational(exp))
            }
            PhiFamily::PowerLog { coeff, exp, log_exp } => format!(
                "powerlog:{}:{}:{}",
                format_rational(coeff),
                format_rational(exp),
                format_rational(log_exp)
            ),
        }
    }
}

const PHI_REFINEMENT_BITS: [u32; 4] = [16, 64, 256, 1024];

/// Decide `phi(t) < t^(-n)` exactly, refining until decisive.
pub fn phi_decays_strictly(phi: &PhiFamily, t: &BigInt, n: usize) -> Result<bool> {
    let target = Rational::new(BigInt::one(), t.pow(n as u32));
    for bits in PHI_REFINEMENT_BITS {
        let enc = phi.eval(t, bits)?;
        if enc.hi < target {
            return Ok(true);
        }
        if enc.lo >= target {
            return Ok(false);
        }
    }
    Err(Error::IndecisiveEnclosure {
        context: format!("the decay comparison at t = {}", t),
    })
}

/// Smallest integer `z` with `1/(z * base) < phi(t)`, i.e. `floor(B) + 1`
/// for `B = 1 / (base * phi(t))`, decided on an exact enclosure of `B`.
fn minimal_multiplier(phi: &PhiFamily, t: &BigInt, base: &BigInt, block: usize) -> Result<BigInt> {
    for bits in PHI_REFINEMENT_BITS {
        let enc = phi.eval(t, bits)?;
        debug_assert!(enc.lo.is_positive());
        let b_lo = (Rational::from_integer(1.into()) / (Rational::from_integer(base.clone()) * &enc.hi)).floor();
        let b_hi = (Rational::from_integer(1.into()) / (Rational::from_integer(base.clone()) * &enc.lo)).floor();
        if b_lo == b_hi {
            return Ok(b_lo.to_integer() + 1);
        }
    }
    Err(Error::IndecisiveEnclosure {
        context: format!("the minimal multiplier at block {}", block),
    })
}

/// `t^exp` for a nonnegative half-integer `exp`, as a positive enclosure.
fn pow_halfint_int(t: &BigInt, exp: &Rational, bits: u32) -> Enclosure {
    let twice = (exp * Rational::from_integer(2.into())).to_integer();
    let twice: u32 = u32::try_from(&twice).expect("validated exponent");
    let whole = t.pow(twice / 2);
    if twice.is_multiple_of(2) {
        Enclosure::point(Rational::from_integer(whole))
    } else {
        sqrt_enclosure_int(t, bits).scale(&Rational::from_integer(whole))
    }
}

/// `e^exp` for a positive interval `e` and nonnegative half-integer `exp`.
fn pow_halfint_interval(e: &Enclosure, exp: &Rational, bits: u32) -> Enclosure {
    let twice = (exp * Rational::from_integer(2.into())).to_integer();
    let twice: u32 = u32::try_from(&twice).expect("validated exponent");
    let whole = Enclosure {
        lo: pow_rational(&e.lo, twice / 2),
        hi: pow_rational(&e.hi, twice / 2),
    };
    if twice.is_multiple_of(2) {
        whole
    } else {
        let root = Enclosure {
            lo: sqrt_enclosure_rat(&e.lo, bits).lo,
            hi: sqrt_enclosure_rat(&e.hi, bits).hi,
        };
        whole.mul_nonneg(&root)
    }
}

fn pow_rational(r: &Rational, e: u32) -> Rational {
    Rational::new(r.numer().pow(e), r.denom().pow(e))
}

/// Enclosure of `sqrt(x)` for integer `x >= 0`, width `2^-bits`; exact
/// squares give a point.
fn sqrt_enclosure_int(x: &BigInt, bits: u32) -> Enclosure {
    let scaled = x << (2 * bits as usize);
    let s = scaled.sqrt();
    let den = BigInt::one() << (bits as usize);
    if &s * &s == scaled {
        Enclosure::point(Rational::new(s, den))
    } else {
        Enclosure {
            lo: Rational::new(s.clone(), den.clone()),
            hi: Rational::new(s + 1, den),
        }
    }
}

/// Enclosure of `sqrt(r)` for rational `r >= 0`.
fn sqrt_enclosure_rat(r: &Rational, bits: u32) -> Enclosure {
    debug_assert!(!r.is_negative());
    let scaled = (r.numer() << (2 * bits as usize)).div_floor(r.denom());
    let s = scaled.sqrt();
    let den = BigInt::one() << (bits as usize);
    // the floor division loses at most one unit, so pad the upper bound
    Enclosure {
        lo: Rational::new(s.clone(), den.clone()),
        hi: Rational::new(s + 2, den),
    }
}

/// Enclosure of `log2 x` for integer `x >= 2` with roughly `bits` correct
/// fractional bits. Fraction digits are extracted by squaring a dyadic
/// mantissa interval with outward rounding, so every decided digit is exact
/// and the result is sound; powers of two give a point.
fn log2_enclosure(x: &BigInt, bits: u32) -> Enclosure {
    debug_assert!(*x >= BigInt::from(2));
    let e = x.bits() - 1;
    let xm1: BigInt = x - 1;
    if (&xm1 & x).is_zero() {
        return Enclosure::point(Rational::from_integer(BigInt::from(e)));
    }
    // mantissa interval for x / 2^e at scale 2^p
    let p = (2 * bits + 16) as usize;
    let one = BigInt::one();
    let (mut lo, mut hi) = if e as usize >= p {
        let shifted = x >> (e as usize - p);
        (shifted.clone(), shifted + &one)
    } else {
        let exact = x << (p - e as usize);
        (exact.clone(), exact)
    };
    let doubled = &one << (p + 1);
    let round_up = (&one << p) - &one;
    let mut acc = BigInt::zero();
    let mut steps = 0u32;
    for _ in 0..bits {
        lo = (&lo * &lo) >> p;
        hi = ((&hi * &hi) + &round_up) >> p;
        steps += 1;
        if lo >= doubled {
            lo >>= 1;
            hi = (hi + &one) >> 1;
            acc = (acc << 1) + &one;
        } else if hi < doubled {
            acc <<= 1;
        } else {
            // the interval straddles 2; the digits gathered so far stay exact
            acc <<= 1;
            break;
        }
    }
    let denom = &one << steps as usize;
    Enclosure {
        lo: Rational::from_integer(BigInt::from(e)) + Rational::new(acc.clone(), denom.clone()),
        hi: Rational::from_integer(BigInt::from(e)) + Rational::new(acc + 2, denom),
    }
}

fn inv_pos(e: &Enclosure) -> Result<Enclosure> {
    Enclosure::point(Rational::from_integer(1.into())).div_pos(e)
}

/// Which rule closes each block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Last term of each block is `ceil(a/c) * previous`, pinning the
    /// Dirichlet constant to `c`.
    PrescribedConstant,
    /// Last term is `previous * L_k` with `L_k` the minimal multiplier for
    /// the decay target.
    DecayTarget(PhiFamily),
}

/// Build parameters: dimension, target constant, schedule and block depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    pub n: usize,
    pub c: Rational,
    pub schedule: Schedule,
    pub depth: usize,
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(
                "dimension n must be at least 2".into(),
            ));
        }
        if !self.c.is_positive() || self.c >= Rational::one() {
            return Err(Error::InvalidArgument(
                "the target constant c must lie strictly between 0 and 1; the endpoint values are outside this tool's scope".into(),
            ));
        }
        if self.depth < 1 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        for k in 1..=self.depth {
            let m = self.schedule.exponent(k)?;
            if m < 2 {
                return Err(Error::InvalidArgument(format!(
                    "schedule exponent M_{} = {} rejected; every exponent must be at least 2",
                    k, m
                )));
            }
        }
        Ok(())
    }
}

/// A fully built sequence `a_1 .. a_(n*(depth+1))` with its parameters.
/// Immutable after construction; `a_0 = 1` by convention so interval
/// endpoints are defined from the first block onward.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    params: Params,
    variant: Variant,
    a: Vec<BigInt>,
}

impl Sequence {
    pub fn n(&self) -> usize {
        self.params.n
    }

    /// Number of built blocks `K`; terms run up to index `n * (K + 1)`.
    pub fn depth(&self) -> usize {
        self.params.depth
    }

    pub fn c(&self) -> &Rational {
        &self.params.c
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn schedule(&self) -> &Schedule {
        &self.params.schedule
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn term_count(&self) -> usize {
        self.a.len()
    }

    pub fn has_term(&self, i: usize) -> bool {
        i <= self.a.len()
    }

    /// `a_i` with 1-based indexing; `a_0 = 1`.
    pub fn term(&self, i: usize) -> BigInt {
        if i == 0 {
            BigInt::one()
        } else {
            self.a[i - 1].clone()
        }
    }

    /// Deepest truncation level whose tail bounds are fully inside the
    /// built range for every coordinate.
    pub fn max_truncation(&self) -> usize {
        self.depth() - 1
    }

    /// Escape hatch for adversarial tests: builds the value without any
    /// validation. Not part of the supported API.
    #[doc(hidden)]
    pub fn from_unchecked_parts(params: Params, variant: Variant, a: Vec<BigInt>) -> Sequence {
        Sequence { params, variant, a }
    }

    /// Re-verify every structural invariant of the built terms.
    pub fn verify_invariants(&self) -> Result<()> {
        let n = self.n();
        let k_max = self.depth();
        if self.a.len() != n * (k_max + 1) {
            return Err(Error::ConstructionIntegrity(format!(
                "expected {} terms, found {}",
                n * (k_max + 1),
                self.a.len()
            )));
        }
        let mut fact = BigInt::one();
        for j in 1..=n {
            fact *= BigInt::from(j);
            if self.term(j) != &fact * BigInt::from(8) {
                return Err(Error::ConstructionIntegrity(format!(
                    "initial term a_{} must be 8*{}!",
                    j, j
                )));
            }
        }
        for i in 1..self.a.len() {
            let prev = &self.a[i - 1];
            let next = &self.a[i];
            if !prev.is_positive() || !next.is_multiple_of(prev) {
                return Err(Error::ConstructionIntegrity(format!(
                    "divisibility fails at a_{} | a_{}",
                    i,
                    i + 1
                )));
            }
            if next < &(prev * BigInt::from(2)) {
                return Err(Error::ConstructionIntegrity(format!(
                    "growth fails: a_{} < 2 * a_{}",
                    i + 1,
                    i
                )));
            }
        }
        for k in 1..=k_max {
            let m = self.params.schedule.exponent(k)?;
            let head = self.term(n * k + 1);
            if head != self.term(n * k).pow(m) {
                return Err(Error::ConstructionIntegrity(format!(
                    "power step fails at block {}",
                    k
                )));
            }
            for i in 2..n {
                if self.term(n * k + i) != head.pow(i as u32) {
                    return Err(Error::ConstructionIntegrity(format!(
                        "interior power fails at a_{}",
                        n * k + i
                    )));
                }
            }
            let base = self.term(n * k + n - 1);
            let last = self.term(n * (k + 1));
            let mult = match &self.variant {
                Variant::PrescribedConstant => {
                    ceil_div(&(self.params.c.denom() * &head), self.params.c.numer())
                }
                Variant::DecayTarget(phi) => {
                    if !phi_decays_strictly(phi, &head, n)? {
                        return Err(Error::DecayPrecondition { t: head.to_string() });
                    }
                    minimal_multiplier(phi, &head, &base, k)?
                }
            };
            if last != &base * &mult {
                return Err(Error::ConstructionIntegrity(format!(
                    "block closing rule fails at block {}",
                    k
                )));
            }
            if last <= head.pow(n as u32) {
                return Err(Error::ConstructionIntegrity(format!(
                    "block {} closing term does not exceed the n-th power of the block head",
                    k
                )));
            }
        }
        Ok(())
    }
}

fn build_common(params: Params, variant: Variant) -> Result<Sequence> {
    params.validate()?;
    if let Variant::DecayTarget(phi) = &variant {
        phi.validate()?;
    }
    let n = params.n;
    let mut a: Vec<BigInt> = Vec::with_capacity(n * (params.depth + 1));
    let mut fact = BigInt::one();
    for j in 1..=n {
        fact *= BigInt::from(j);
        a.push(&fact * BigInt::from(8));
    }
    for k in 1..=params.depth {
        let m = params.schedule.exponent(k)?;
        let prev = a.last().unwrap();
        if prev.bits() * m as u64 > TERM_BIT_CAP {
            return Err(Error::InvalidArgument(format!(
                "block {} would exceed the term size cap; reduce the depth or the schedule",
                k
            )));
        }
        let head = prev.pow(m);
        a.push(head.clone());
        for i in 2..n {
            a.push(head.pow(i as u32));
        }
        let base = a.last().unwrap().clone();
        let mult = match &variant {
            Variant::PrescribedConstant => {
                ceil_div(&(params.c.denom() * &head), params.c.numer())
            }
            Variant::DecayTarget(phi) => {
                if !phi_decays_strictly(phi, &head, n)? {
                    return Err(Error::DecayPrecondition { t: head.to_string() });
                }
                minimal_multiplier(phi, &head, &base, k)?
            }
        };
        a.push(base * mult);
    }
    let seq = Sequence { params, variant, a };
    seq.verify_invariants()?;
    Ok(seq)
}

/// Build the sequence for the prescribed-constant rule.
pub fn build_sequence(params: Params) -> Result<Sequence> {
    build_common(params, Variant::PrescribedConstant)
}

/// Build the sequence variant driven by a decay target. The strict decay
/// precondition `phi(t) < t^(-n)` is checked at every block head.
pub fn build_sequence_phi(params: Params, phi: PhiFamily) -> Result<Sequence> {
    build_common(params, Variant::DecayTarget(phi))
}

/// Exact partial sums `S_(j,h) = sum_(i=0..h) 1/a_(n*i+j)` for `0 <= j <= n`
/// and `0 <= h <= tail_depth`, with the convention `S_(0,h) = 1`.
#[derive(Clone, Debug)]
pub struct TruncVector {
    n: usize,
    tail_depth: usize,
    sums: Vec<Vec<Rational>>,
}

impl TruncVector {
    pub fn tail_depth(&self) -> usize {
        self.tail_depth
    }

    /// `S_(j,h)`.
    pub fn sum(&self, j: usize, h: usize) -> &Rational {
        assert!(j <= self.n && h <= self.tail_depth);
        &self.sums[j][h]
    }
}

/// Compute the exact partial-sum table down to truncation level `k`.
/// The reduced denominator of `S_(j,k)` always divides `a_(n*k+j)`.
pub fn partial_sums(seq: &Sequence, k: usize) -> Result<TruncVector> {
    let n = seq.n();
    if k > seq.depth() - 1 {
        return Err(Error::Range {
            what: format!("truncation level {}", k),
            needed: k + 1,
        });
    }
    let mut sums = Vec::with_capacity(n + 1);
    sums.push(vec![Rational::one(); k + 1]);
    for j in 1..=n {
        let mut row = Vec::with_capacity(k + 1);
        let mut acc = Rational::zero();
        for h in 0..=k {
            acc += Rational::new(BigInt::one(), seq.term(n * h + j));
            if !seq.term(n * h + j).is_multiple_of(acc.denom()) {
                return Err(Error::ConstructionIntegrity(format!(
                    "partial sum S_({},{}) has a denominator not dividing a_{}",
                    j,
                    h,
                    n * h + j
                )));
            }
            row.push(acc.clone());
        }
        sums.push(row);
    }
    Ok(TruncVector {
        n,
        tail_depth: k,
        sums,
    })
}

/// Certified enclosure of the tail `R_(j,k) = sum_(h>k) 1/a_(n*h+j)`:
/// `[1/f, 2/f]` with `f` the first tail term. Soundness needs every built
/// term to at least double its predecessor (a verified invariant) and every
/// unbuilt continuation to use exponents at least 2, which any admissible
/// schedule does. `R_(0,k) = 0`.
pub fn tail_enclosure(seq: &Sequence, j: usize, k: usize) -> Result<Enclosure> {
    if j == 0 {
        return Ok(Enclosure::zero());
    }
    let n = seq.n();
    if j > n {
        return Err(Error::InvalidArgument(format!(
            "coordinate {} exceeds dimension {}",
            j, n
        )));
    }
    let first = n * (k + 1) + j;
    if !seq.has_term(first) {
        return Err(Error::Depth { k, needed: k + 1 });
    }
    let f = seq.term(first);
    Ok(Enclosure {
        lo: Rational::new(BigInt::one(), f.clone()),
        hi: Rational::new(BigInt::from(2), f),
    })
}

// --- persistence -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SequenceFile {
    version: u32,
    variant: String,
    n: usize,
    c: String,
    schedule: ScheduleFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<PhiFile>,
    a: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ScheduleFile {
    Const { m: u32 },
    Ramp { m0: u32 },
    List { values: Vec<u32> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum PhiFile {
    Power { coeff: String, exp: String },
    PowerLog { coeff: String, exp: String, log_exp: String },
}

impl Sequence {
    /// Canonical JSON rendering; all big integers are decimal strings.
    pub fn to_json_string(&self) -> String {
        let schedule = match &self.params.schedule {
            Schedule::Const(m) => ScheduleFile::Const { m: *m },
            Schedule::Ramp { m0 } => ScheduleFile::Ramp { m0: *m0 },
            Schedule::List(v) => ScheduleFile::List { values: v.clone() },
        };
        let (variant, phi) = match &self.variant {
            Variant::PrescribedConstant => ("theorem1".to_string(), None),
            Variant::DecayTarget(p) => (
                "theorem2".to_string(),
                Some(match p {
                    PhiFamily::Power { coeff, exp } => PhiFile::Power {
                        coeff: format_rational(coeff),
                        exp: format_rational(exp),
                    },
                    PhiFamily::PowerLog { coeff, exp, log_exp } => PhiFile::PowerLog {
                        coeff: format_rational(coeff),
                        exp: format_rational(exp),
                        log_exp: format_rational(log_exp),
                    },
                }),
            ),
        };
        let file = SequenceFile {
            version: 1,
            variant,
            n: self.params.n,
            c: format_rational(&self.params.c),
            schedule,
            phi,
            a: self.a.iter().map(|t| t.to_string()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serialization cannot fail");
        s.push('\n');
        s
    }

    /// Parse and fully re-verify a sequence file. Files failing any
    /// structural invariant are rejected.
    pub fn from_json_str(s: &str) -> Result<Sequence> {
        let file: SequenceFile =
            serde_json::from_str(s).map_err(|e| Error::InvalidFile(e.to_string()))?;
        let inner = || -> Result<Sequence> {
            if file.version != 1 {
                return Err(Error::InvalidArgument(format!(
                    "unsupported file version {}",
                    file.version
                )));
            }
            let schedule = match file.schedule {
                ScheduleFile::Const { m } => Schedule::Const(m),
                ScheduleFile::Ramp { m0 } => Schedule::Ramp { m0 },
                ScheduleFile::List { values } => Schedule::List(values),
            };
            let phi = match file.phi {
                None => None,
                Some(PhiFile::Power { coeff, exp }) => Some(PhiFamily::Power {
                    coeff: parse_rational(&coeff)?,
                    exp: parse_rational(&exp)?,
                }),
                Some(PhiFile::PowerLog { coeff, exp, log_exp }) => Some(PhiFamily::PowerLog {
                    coeff: parse_rational(&coeff)?,
                    exp: parse_rational(&exp)?,
                    log_exp: parse_rational(&log_exp)?,
                }),
            };
            let variant = match (file.variant.as_str(), phi) {
                ("theorem1", None) => Variant::PrescribedConstant,
                ("theorem2", Some(p)) => {
                    p.validate()?;
                    Variant::DecayTarget(p)
                }
                ("theorem1", Some(_)) => {
                    return Err(Error::InvalidArgument(
                        "variant theorem1 must not carry a phi descriptor".into(),
                    ))
                }
                ("theorem2", None) => {
                    return Err(Error::InvalidArgument(
                        "variant theorem2 requires a phi descriptor".into(),
                    ))
                }
                (v, _) => {
                    return Err(Error::InvalidArgument(format!("unknown variant '{}'", v)))
                }
            };
            if file.n == 0 || file.a.is_empty() || !file.a.len().is_multiple_of(file.n) {
                return Err(Error::InvalidArgument(
                    "term list length must be a positive multiple of n".into(),
                ));
            }
            let depth = file.a.len() / file.n - 1;
            if depth < 1 {
                return Err(Error::InvalidArgument(
                    "file must contain at least one built block".into(),
                ));
            }
            let mut a = Vec::with_capacity(file.a.len());
            for s in &file.a {
                let t = parse_integer(s)?;
                if !t.is_positive() {
                    return Err(Error::InvalidArgument("terms must be positive".into()));
                }
                a.push(t);
            }
            let params = Params {
                n: file.n,
                c: parse_rational(&file.c)?,
                schedule,
                depth,
            };
            params.validate()?;
            let seq = Sequence { params, variant, a };
            seq.verify_invariants()?;
            Ok(seq)
        };
        inner().map_err(|e| Error::InvalidFile(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Sequence> {
        let s = std::fs::read_to_string(path)?;
        Sequence::from_json_str(&s)
    }
}
