//! The approximation minimum `psi(Q)`: exhaustively for small heights, and
//! as a certified enclosure at arbitrary built heights by combining witness
//! forms with lower-bound certificates.
//!
//! The exhaustive search eliminates the constant coefficient (for fixed
//! `b_1..b_n` the optimal `b_0` is a nearest integer), halves the space
//! through the symmetry `L(-b) = L(b)`, and evaluates candidates as integer
//! numerators over one common denominator, so the hot loop is pure
//! big-integer arithmetic with no rational reduction.
//!
//! Concurrency model: the candidate space is partitioned by the leading
//! nonzero coordinate; workers fold local states and the merge is an
//! associative, commutative minimum under a strict total candidate order, so
//! results are byte-identical for every worker count and partitioning.

use crate::certificates::lower_bound_certificate;
use crate::construction::{partial_sums, tail_enclosure, Sequence};
use crate::error::{Error, Result};
use crate::numerics::{decimal_lower, decimal_upper, format_rational, Enclosure, Rational};
use crate::witnesses::{build_witness, classify_q};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;

/// How a [`PsiResult`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    WitnessOnly,
    WitnessPlusCert,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::WitnessOnly => "witness_only",
            Method::WitnessPlusCert => "witness_plus_cert",
        }
    }
}

/// Limits for the exhaustive search.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Maximum number of candidate forms `(2Q+1)^n`.
    pub budget: u64,
    /// Worker count; `Some(1)` forces the sequential path, `None` uses the
    /// default pool (or the sequential fallback without the `parallel`
    /// feature).
    pub threads: Option<usize>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { budget: 100_000_000, threads: None }
    }
}

/// What the search evaluates against: an exact rational point, or a built
/// sequence at a truncation level (every coordinate then carries a certified
/// tail enclosure).
pub enum SearchTarget<'a> {
    Rational(&'a [Rational]),
    Truncated { seq: &'a Sequence, depth: usize },
}

/// The minimum of `|b_0 + b_1 xi_1 + ... + b_n xi_n|` at height `Q`, as an
/// enclosure, together with the minimizing form when one is identified.
#[derive(Clone, Debug)]
pub struct PsiResult {
    pub q: BigInt,
    pub value: Enclosure,
    /// `Q^n * value`.
    pub normalized: Enclosure,
    /// Minimizing (or witnessing) form `b_0, b_1, ..., b_n`.
    pub argmin: Option<Vec<BigInt>>,
    pub method: Method,
    /// Set when overlapping candidate enclosures made the minimum ambiguous;
    /// the result is then the hull of the overlapping candidates.
    pub widened: bool,
}

#[derive(Serialize)]
struct PsiJson {
    #[serde(rename = "Q")]
    q: String,
    method: String,
    widened: bool,
    value_lo: String,
    value_hi: String,
    normalized_lo: String,
    normalized_hi: String,
    normalized_lo_dec: String,
    normalized_hi_dec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    argmin: Option<Vec<String>>,
}

impl PsiResult {
    pub fn to_json_string(&self) -> String {
        let file = PsiJson {
            q: self.q.to_string(),
            method: self.method.as_str().to_string(),
            widened: self.widened,
            value_lo: format_rational(&self.value.lo),
            value_hi: format_rational(&self.value.hi),
            normalized_lo: format_rational(&self.normalized.lo),
            normalized_hi: format_rational(&self.normalized.hi),
            normalized_lo_dec: decimal_lower(&self.normalized.lo, 30),
            normalized_hi_dec: decimal_upper(&self.normalized.hi, 30),
            argmin: self
                .argmin
                .as_ref()
                .map(|b| b.iter().map(|x| x.to_string()).collect()),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serialization cannot fail");
        s.push('\n');
        s
    }
}

/// Run `f` on a pool with the requested worker count. Without the
/// `parallel` feature this is a plain call.
#[cfg(feature = "parallel")]
pub fn with_worker_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None | Some(0) => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {}", e)))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_worker_pool<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    Ok(f())
}

// --- search internals -------------------------------------------------------

/// Target coordinates as numerator intervals over one common denominator.
struct ScaledTarget {
    denom: BigInt,
    comps: Vec<(BigInt, BigInt)>,
}

fn scale_target(target: &SearchTarget) -> Result<ScaledTarget> {
    match target {
        SearchTarget::Rational(xs) => {
            if xs.is_empty() {
                return Err(Error::InvalidArgument("empty target vector".into()));
            }
            let denom = xs
                .iter()
                .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            let comps = xs
                .iter()
                .map(|x| {
                    let u = x.numer() * (&denom / x.denom());
                    (u.clone(), u)
                })
                .collect();
            Ok(ScaledTarget { denom, comps })
        }
        SearchTarget::Truncated { seq, depth } => {
            let n = seq.n();
            if *depth > seq.max_truncation() {
                return Err(Error::Depth { k: *depth, needed: depth + 1 });
            }
            // every denominator in sight divides this term
            let denom = seq.term(n * (depth + 2));
            let sums = partial_sums(seq, *depth)?;
            let mut comps = Vec::with_capacity(n);
            for j in 1..=n {
                let tail = tail_enclosure(seq, j, *depth)?;
                let to_num = |r: &Rational| -> BigInt {
                    let scaled = r * Rational::from_integer(denom.clone());
                    debug_assert!(scaled.is_integer());
                    scaled.to_integer()
                };
                let s = sums.sum(j, *depth);
                comps.push((to_num(&(s + &tail.lo)), to_num(&(s + &tail.hi))));
            }
            Ok(ScaledTarget { denom, comps })
        }
    }
}

#[derive(Clone, Debug)]
struct Candidate {
    hi: BigInt,
    lo: BigInt,
    height: i64,
    coords: Vec<i64>,
    b0: BigInt,
}

impl Candidate {
    /// Strict total order: smaller upper bound first, then smaller height,
    /// then lexicographic coordinates.
    fn better_than(&self, other: &Candidate) -> bool {
        cmp_key(&self.hi, self.height, &self.coords, &self.b0, other) == Ordering::Less
    }
}

fn cmp_key(hi: &BigInt, height: i64, coords: &[i64], b0: &BigInt, other: &Candidate) -> Ordering {
    hi.cmp(&other.hi)
        .then_with(|| height.cmp(&other.height))
        .then_with(|| coords.cmp(other.coords.as_slice()))
        .then_with(|| b0.cmp(&other.b0))
}

/// Per-worker fold state. `min_lo_other` tracks the least lower bound among
/// candidates other than the current best; it decides the ambiguity flag.
#[derive(Default)]
struct SearchState {
    best: Option<Candidate>,
    min_lo: Option<BigInt>,
    min_lo_other: Option<BigInt>,
}

fn opt_min(a: Option<BigInt>, b: Option<BigInt>) -> Option<BigInt> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl SearchState {
    fn consider(&mut self, lo: BigInt, hi: BigInt, height: i64, coords: &[i64], b0: BigInt) {
        self.min_lo = opt_min(self.min_lo.take(), Some(lo.clone()));
        match &mut self.best {
            None => {
                self.best = Some(Candidate { hi, lo, height, coords: coords.to_vec(), b0 });
            }
            Some(best) => {
                if cmp_key(&hi, height, coords, &b0, best) == Ordering::Less {
                    let old = std::mem::replace(
                        best,
                        Candidate { hi, lo, height, coords: coords.to_vec(), b0 },
                    );
                    self.min_lo_other = opt_min(self.min_lo_other.take(), Some(old.lo));
                } else {
                    self.min_lo_other = opt_min(self.min_lo_other.take(), Some(lo));
                }
            }
        }
    }

    fn merge(a: SearchState, b: SearchState) -> SearchState {
        let min_lo = opt_min(a.min_lo.clone(), b.min_lo.clone());
        match (a.best, b.best) {
            (None, None) => SearchState { best: None, min_lo, min_lo_other: None },
            (Some(x), None) => SearchState {
                best: Some(x),
                min_lo,
                min_lo_other: a.min_lo_other,
            },
            (None, Some(y)) => SearchState {
                best: Some(y),
                min_lo,
                min_lo_other: b.min_lo_other,
            },
            (Some(x), Some(y)) => {
                if x.better_than(&y) {
                    SearchState {
                        best: Some(x),
                        min_lo,
                        min_lo_other: opt_min(a.min_lo_other, b.min_lo),
                    }
                } else {
                    SearchState {
                        best: Some(y),
                        min_lo,
                        min_lo_other: opt_min(b.min_lo_other, a.min_lo),
                    }
                }
            }
        }
    }
}

/// Nearest integers to `n/d`; an exact half yields both neighbours so no
/// rounding choice is ever guessed.
fn rounds_to(n: &BigInt, d: &BigInt, out: &mut Vec<BigInt>) {
    let (q, r) = n.div_mod_floor(d);
    match (r * BigInt::from(2)).cmp(d) {
        Ordering::Less => out.push(q),
        Ordering::Greater => out.push(q + 1),
        Ordering::Equal => {
            out.push(q.clone());
            out.push(q + 1);
        }
    }
}

fn eval_coords(state: &mut SearchState, coords: &[i64], t: &ScaledTarget) {
    let mut t_lo = BigInt::zero();
    let mut t_hi = BigInt::zero();
    for (b, (u, v)) in coords.iter().zip(&t.comps) {
        if *b == 0 {
            continue;
        }
        let bb = BigInt::from(*b);
        if *b > 0 {
            t_lo += u * &bb;
            t_hi += v * &bb;
        } else {
            t_lo += v * &bb;
            t_hi += u * &bb;
        }
    }
    let height = coords.iter().map(|b| b.abs()).max().unwrap_or(0);
    let mut ms = Vec::with_capacity(4);
    rounds_to(&t_lo, &t.denom, &mut ms);
    rounds_to(&t_hi, &t.denom, &mut ms);
    ms.sort();
    let first = ms.first().unwrap().clone();
    let last = ms.last().unwrap().clone();
    // every integer between the endpoint roundings is optimal for some point
    // of the enclosure; past a few denominators of width only the trivial
    // bounds survive, and the hull forces the ambiguity flag
    if &last - &first > BigInt::from(8) {
        let mid: BigInt = (&first + &last) / 2;
        let half: BigInt = (&t.denom + BigInt::one()) / 2;
        state.consider(BigInt::zero(), half, height, coords, -mid);
        return;
    }
    let mut m = first;
    while m <= last {
        let shift = &m * &t.denom;
        let lo_n = &t_lo - &shift;
        let hi_n = &t_hi - &shift;
        let (alo, ahi) = if !lo_n.is_negative() {
            (lo_n, hi_n)
        } else if !hi_n.is_positive() {
            (-hi_n, -lo_n)
        } else {
            (BigInt::zero(), std::cmp::max(-lo_n, hi_n))
        };
        state.consider(alo, ahi, height, coords, -m.clone());
        m += 1;
    }
}

/// Representatives with leading coordinate `lead_val > 0` at `lead_pos`
/// (1-based) and free coordinates after it.
fn scan_item(t: &ScaledTarget, n: usize, q: i64, lead_pos: usize, lead_val: i64) -> SearchState {
    let mut state = SearchState::default();
    let mut coords = vec![0i64; n];
    coords[lead_pos - 1] = lead_val;
    let free = n - lead_pos;
    if free == 0 {
        eval_coords(&mut state, &coords, t);
        return state;
    }
    let mut idx = vec![-q; free];
    loop {
        for (i, v) in idx.iter().enumerate() {
            coords[lead_pos + i] = *v;
        }
        eval_coords(&mut state, &coords, t);
        let mut i = free;
        loop {
            if i == 0 {
                return state;
            }
            i -= 1;
            if idx[i] < q {
                idx[i] += 1;
                for j in (i + 1)..free {
                    idx[j] = -q;
                }
                break;
            }
        }
    }
}

fn constant_form_state(denom: &BigInt, n: usize) -> SearchState {
    // b = (1, 0, ..., 0): the only forms left out by the leading-coordinate
    // enumeration; their minimum is exactly 1
    let mut state = SearchState::default();
    state.consider(
        denom.clone(),
        denom.clone(),
        0,
        &vec![0i64; n],
        BigInt::one(),
    );
    state
}

fn run_search(t: &ScaledTarget, n: usize, q: i64, threads: Option<usize>) -> Result<SearchState> {
    let items: Vec<(usize, i64)> = (1..=n)
        .flat_map(|p| (1..=q).map(move |v| (p, v)))
        .collect();

    #[cfg(feature = "parallel")]
    let folded = if threads == Some(1) {
        items
            .iter()
            .fold(SearchState::default(), |acc, (p, v)| {
                SearchState::merge(acc, scan_item(t, n, q, *p, *v))
            })
    } else {
        with_worker_pool(threads, || {
            items
                .par_iter()
                .map(|(p, v)| scan_item(t, n, q, *p, *v))
                .reduce(SearchState::default, SearchState::merge)
        })?
    };

    #[cfg(not(feature = "parallel"))]
    let folded = items
        .iter()
        .fold(SearchState::default(), |acc, (p, v)| {
            SearchState::merge(acc, scan_item(t, n, q, *p, *v))
        });

    Ok(SearchState::merge(folded, constant_form_state(&t.denom, n)))
}

/// Exhaustive minimum over all nonzero forms of height at most `Q`.
///
/// For a rational target the result is exact. For a truncated sequence
/// target the result is the tightest enclosure the candidate tails allow,
/// guaranteed to contain the true minimum for every admissible continuation;
/// if overlapping candidates make the minimizer ambiguous the result is
/// their hull and the `widened` flag is set, never a guess.
pub fn psi_star_exhaustive(
    target: &SearchTarget,
    q: &BigInt,
    opts: &SearchOptions,
) -> Result<PsiResult> {
    let n = match target {
        SearchTarget::Rational(xs) => xs.len(),
        SearchTarget::Truncated { seq, .. } => seq.n(),
    };
    if !q.is_positive() {
        return Err(Error::InvalidArgument("height Q must be positive".into()));
    }
    let count = (BigInt::from(2) * q + BigInt::one()).pow(n as u32);
    if count > BigInt::from(opts.budget) {
        return Err(Error::BudgetExceeded {
            required: count.to_string(),
            budget: opts.budget,
        });
    }
    let qi = i64::try_from(q).map_err(|_| Error::InvalidArgument("height too large".into()))?;
    let scaled = scale_target(target)?;
    let state = run_search(&scaled, n, qi, opts.threads)?;
    let best = state.best.expect("search space is nonempty");
    let min_lo = state.min_lo.expect("search space is nonempty");
    let widened = state
        .min_lo_other
        .as_ref()
        .is_some_and(|l| *l < best.hi);
    let value = Enclosure {
        lo: Rational::new(min_lo, scaled.denom.clone()),
        hi: Rational::new(best.hi.clone(), scaled.denom.clone()),
    };
    let scale = Rational::from_integer(q.pow(n as u32));
    let normalized = value.scale(&scale);
    let mut argmin = Vec::with_capacity(n + 1);
    argmin.push(best.b0.clone());
    argmin.extend(best.coords.iter().map(|c| BigInt::from(*c)));
    Ok(PsiResult {
        q: q.clone(),
        value,
        normalized,
        argmin: Some(argmin),
        method: Method::Exhaustive,
        widened,
    })
}

/// Certified enclosure of the minimum at height `Q` without search: the
/// upper endpoint comes from the witness form, the lower endpoint from the
/// critical-scale certificate when `Q = a_(nk+1) - 1`, and zero otherwise.
pub fn psi_star_enclosure(seq: &Sequence, q: &BigInt) -> Result<PsiResult> {
    let tag = classify_q(seq, q)?;
    let witness = build_witness(seq, q)?;
    let n = seq.n();
    let critical = *q == seq.term(n * tag.k + 1) - 1;
    let (value, method) = if critical {
        let cert = lower_bound_certificate(seq, tag.k)?;
        if cert.lower > witness.value.hi {
            return Err(Error::ConstructionIntegrity(format!(
                "certificate lower bound {} exceeds the witness upper bound {}",
                format_rational(&cert.lower),
                format_rational(&witness.value.hi)
            )));
        }
        (
            Enclosure { lo: cert.lower, hi: witness.value.hi.clone() },
            Method::WitnessPlusCert,
        )
    } else {
        (
            Enclosure { lo: Rational::zero(), hi: witness.value.hi.clone() },
            Method::WitnessOnly,
        )
    };
    let scale = Rational::from_integer(q.pow(n as u32));
    let normalized = value.scale(&scale);
    Ok(PsiResult {
        q: q.clone(),
        value,
        normalized,
        argmin: Some(witness.b),
        method,
        widened: false,
    })
}

/// Default truncation level for an exhaustive run at height `Q`: one block
/// past the classification block, clipped to the built range. One extra
/// block tightens the enclosure enough that sandwich comparisons are not
/// borderline.
pub fn default_exhaustive_depth(seq: &Sequence, q: &BigInt) -> Result<usize> {
    let tag = classify_q(seq, q)?;
    Ok((tag.k + 1).min(seq.max_truncation()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_sequence, Params, Schedule};
    use crate::numerics::make_rational;

    fn rat(n: i64, d: i64) -> Rational {
        make_rational(BigInt::from(n), BigInt::from(d)).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|x| BigInt::from(*x)).collect()
    }

    fn seq_n2_m2(depth: usize) -> Sequence {
        build_sequence(Params {
            n: 2,
            c: rat(1, 2),
            schedule: Schedule::Const(2),
            depth,
        })
        .unwrap()
    }

    #[test]
    fn exact_zero_at_rational_point() {
        let target = [rat(1, 2), rat(1, 3)];
        let r = psi_star_exhaustive(
            &SearchTarget::Rational(&target),
            &BigInt::from(3),
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(r.value, Enclosure::point(rat(0, 1)));
        assert_eq!(r.argmin, Some(ints(&[-1, 2, 0])));
        assert!(!r.widened);
    }

    #[test]
    fn equal_components_are_annihilated() {
        // (1/4, 1/4) is annihilated by b = (0, 1, -1) already at height 1
        let target = [rat(1, 4), rat(1, 4)];
        let r = psi_star_exhaustive(
            &SearchTarget::Rational(&target),
            &BigInt::one(),
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(r.value, Enclosure::point(rat(0, 1)));
        assert_eq!(r.argmin, Some(ints(&[0, 1, -1])));
    }

    #[test]
    fn small_distinct_components() {
        let target = [rat(1, 4), rat(1, 3)];
        let r = psi_star_exhaustive(
            &SearchTarget::Rational(&target),
            &BigInt::one(),
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(r.value, Enclosure::point(rat(1, 12)));
        assert_eq!(r.argmin, Some(ints(&[0, 1, -1])));
    }

    #[test]
    fn minimum_is_nonincreasing_in_height() {
        let target = [rat(3, 7), rat(5, 11)];
        let mut prev: Option<Rational> = None;
        for q in 1..=8i64 {
            let r = psi_star_exhaustive(
                &SearchTarget::Rational(&target),
                &BigInt::from(q),
                &SearchOptions::default(),
            )
            .unwrap();
            assert!(r.value.is_point());
            if let Some(p) = prev {
                assert!(r.value.hi <= p, "q = {}", q);
            }
            prev = Some(r.value.hi);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let target = [rat(1, 2), rat(1, 3)];
        let err = psi_star_exhaustive(
            &SearchTarget::Rational(&target),
            &BigInt::from(100),
            &SearchOptions { budget: 100, threads: None },
        );
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn critical_height_search_lands_in_certified_range() {
        let seq = seq_n2_m2(3);
        let q = BigInt::from(255);
        let search = psi_star_exhaustive(
            &SearchTarget::Truncated { seq: &seq, depth: 2 },
            &q,
            &SearchOptions::default(),
        )
        .unwrap();
        let certified = psi_star_enclosure(&seq, &q).unwrap();
        assert_eq!(certified.method, Method::WitnessPlusCert);
        assert!(search.value.inside(&certified.value));
        // 255^2 * psi(255) certified within [0.49, 0.497]
        assert!(search.normalized.lo > rat(49, 100));
        assert!(search.normalized.hi < rat(497, 1000));
        assert!(!search.widened);
    }

    #[test]
    fn witness_only_enclosure_at_top_range_height() {
        let seq = seq_n2_m2(3);
        let r = psi_star_enclosure(&seq, &BigInt::from(300)).unwrap();
        assert_eq!(r.method, Method::WitnessOnly);
        assert!(r.value.lo.is_zero());
        let base = Rational::new(BigInt::one(), BigInt::one() << 26);
        assert!(r.value.hi >= base);
        assert!(r.value.hi < base * rat(2, 1));
    }

    #[test]
    fn shallow_truncation_widens_instead_of_lying() {
        // at truncation level 0 the tails are wider than the rounding grid
        // for most candidates, so the result must widen to a sound hull that
        // still contains the deep search's enclosure
        let seq = seq_n2_m2(3);
        let q = BigInt::from(300);
        let shallow = psi_star_exhaustive(
            &SearchTarget::Truncated { seq: &seq, depth: 0 },
            &q,
            &SearchOptions::default(),
        )
        .unwrap();
        let deep = psi_star_exhaustive(
            &SearchTarget::Truncated { seq: &seq, depth: 2 },
            &q,
            &SearchOptions::default(),
        )
        .unwrap();
        assert!(shallow.widened);
        assert!(shallow.value.lo.is_zero());
        assert!(deep.value.inside(&shallow.value));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn results_are_identical_across_worker_counts() {
        let seq = seq_n2_m2(3);
        let q = BigInt::from(255);
        let runs: Vec<String> = [Some(1), Some(2), Some(8)]
            .into_iter()
            .map(|threads| {
                psi_star_exhaustive(
                    &SearchTarget::Truncated { seq: &seq, depth: 2 },
                    &q,
                    &SearchOptions { budget: 100_000_000, threads },
                )
                .unwrap()
                .to_json_string()
            })
            .collect();
        assert_eq!(runs[0], runs[1]);
        assert_eq!(runs[0], runs[2]);
    }
}
