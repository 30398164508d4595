//! Headline quantities assembled from per-height results: the normalized
//! minimum `Q^n psi(Q)` along the critical scales `Q = a_(nk+1) - 1` (whose
//! limit superior is the Dirichlet constant of the target vector), the
//! polynomial-order approximation check, and the ratio scan against a decay
//! target.
//!
//! A finite computation cannot certify a limit superior, so the estimate is
//! always reported as an enclosure with a fixed interpretation: every built
//! scale certifies the lower endpoint, and all witnessed scales respect the
//! upper one.

use crate::construction::{phi_decays_strictly, PhiFamily, Sequence, Variant};
use crate::error::{Error, Result};
use crate::numerics::{
    ceil_div, decimal_lower, decimal_upper, format_rational, Enclosure, Rational,
};
use crate::oracle::{psi_star_enclosure, Method};
use crate::witnesses::{build_witness, Case};
use num_bigint::BigInt;
use num_traits::One;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use std::io;

/// Slack absorbed into the upper bound at small block indices; the witness
/// bound carries a `(1 + o(1))` factor in the middle range.
pub fn upper_tolerance() -> Rational {
    Rational::new(BigInt::from(10001), BigInt::from(10000))
}

/// One critical-scale record: `Q = a_(nk+1) - 1` with the certified
/// enclosure of `Q^n psi(Q)`.
#[derive(Clone, Debug)]
pub struct SpectrumRecord {
    pub k: usize,
    pub q: BigInt,
    pub value: Enclosure,
    pub normalized: Enclosure,
    pub method: Method,
}

fn record_at(seq: &Sequence, k: usize) -> Result<SpectrumRecord> {
    let q = seq.term(seq.n() * k + 1) - 1;
    let psi = psi_star_enclosure(seq, &q)?;
    let bound = seq.c() * upper_tolerance();
    if psi.normalized.hi > bound {
        return Err(Error::ConstructionIntegrity(format!(
            "upper discipline violated at block {}: {} > {}",
            k,
            format_rational(&psi.normalized.hi),
            format_rational(&bound)
        )));
    }
    Ok(SpectrumRecord {
        k,
        q,
        value: psi.value,
        normalized: psi.normalized,
        method: psi.method,
    })
}

/// Certified enclosures of `Q^n psi(Q)` at every critical scale in
/// `k_min ..= k_max`, sorted by block. Each record must respect the
/// tolerance-widened upper bound `c (1 + 1/10^4)`.
pub fn theta_scan(seq: &Sequence, k_min: usize, k_max: usize) -> Result<Vec<SpectrumRecord>> {
    if k_min < 1 || k_min > k_max {
        return Err(Error::InvalidArgument(
            "scan range must satisfy 1 <= k_min <= k_max".into(),
        ));
    }
    if k_max > seq.max_truncation() {
        return Err(Error::Depth { k: k_max, needed: k_max + 1 });
    }
    let ks: Vec<usize> = (k_min..=k_max).collect();

    #[cfg(feature = "parallel")]
    let results: Vec<Result<SpectrumRecord>> =
        ks.par_iter().map(|k| record_at(seq, *k)).collect();

    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<SpectrumRecord>> =
        ks.iter().map(|k| record_at(seq, *k)).collect();

    results.into_iter().collect()
}

/// Fold scan records into the enclosure
/// `[max_k normalized.lo, c (1 + 1/10^4)]`: every built scale certifies the
/// lower endpoint, and every witnessed scale respects the upper one.
pub fn theta_estimate(seq: &Sequence, records: &[SpectrumRecord]) -> Result<Enclosure> {
    let lo = records
        .iter()
        .map(|r| r.normalized.lo.clone())
        .max()
        .ok_or_else(|| Error::InvalidArgument("no scan records".into()))?;
    Enclosure::new(lo, seq.c() * upper_tolerance())
}

/// True when the top-range witness at `Q = a_(nk+1)` has value at most
/// `Q^-n_exp`: the sequence approximates to polynomial order `n_exp` at
/// scale `k`. Divergent schedules make this pass for every order at some
/// scale; constant schedules do not.
pub fn liouville_check(seq: &Sequence, n_exp: u32, k: usize) -> Result<bool> {
    let q = seq.term(seq.n() * k + 1);
    let w = build_witness(seq, &q)?;
    debug_assert_eq!(w.tag.case, Case::One);
    debug_assert_eq!(w.tag.k, k);
    let threshold = Rational::new(BigInt::one(), q.pow(n_exp));
    Ok(w.value.hi <= threshold)
}

/// Critical-scale ratio `psi(Q) / phi(Q)` for a sequence built against a
/// decay target.
#[derive(Clone, Debug)]
pub struct RatioRecord {
    pub k: usize,
    pub q: BigInt,
    pub ratio: Enclosure,
}

/// Enclosures of `psi(Q) / phi(Q)` at the critical scales of a
/// decay-target sequence.
pub fn phi_ratio_scan(seq: &Sequence, k_min: usize, k_max: usize) -> Result<Vec<RatioRecord>> {
    let phi = match seq.variant() {
        Variant::DecayTarget(phi) => phi.clone(),
        Variant::PrescribedConstant => {
            return Err(Error::InvalidArgument(
                "ratio scans require a sequence built against a decay target".into(),
            ))
        }
    };
    if k_min < 1 || k_min > k_max {
        return Err(Error::InvalidArgument(
            "scan range must satisfy 1 <= k_min <= k_max".into(),
        ));
    }
    if k_max > seq.max_truncation() {
        return Err(Error::Depth { k: k_max, needed: k_max + 1 });
    }
    let mut out = Vec::with_capacity(k_max - k_min + 1);
    for k in k_min..=k_max {
        let q = seq.term(seq.n() * k + 1) - 1;
        let psi = psi_star_enclosure(seq, &q)?;
        let phi_enc = phi.eval(&q, 128)?;
        out.push(RatioRecord {
            k,
            q,
            ratio: psi.value.div_pos(&phi_enc)?,
        });
    }
    Ok(out)
}

/// One ratio probe of the slow-variation heuristic.
#[derive(Clone, Debug)]
pub struct RatioProbe {
    pub alpha: Rational,
    pub min_ratio: Enclosure,
}

/// Heuristic admissibility report for a decay target: the strict decay
/// bound `phi(t) < t^-n` is decided exactly at each sample, while the
/// slow-variation requirement is only probed at `alpha = 1 + 2^-j` and the
/// minimum observed ratio reported. The latter is an asymptotic property no
/// finite computation can decide, hence the explicit heuristic label.
#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub phi: String,
    pub n: usize,
    pub decay: Vec<(BigInt, bool, String)>,
    pub ratio_probes: Vec<RatioProbe>,
    pub heuristic: bool,
}

impl AdmissibilityReport {
    pub fn decay_all_pass(&self) -> bool {
        self.decay.iter().all(|(_, pass, _)| *pass)
    }
}

pub fn check_phi_admissible(
    phi: &PhiFamily,
    n: usize,
    samples: &[BigInt],
) -> Result<AdmissibilityReport> {
    if samples.is_empty() || samples.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "sample points must be strictly increasing".into(),
        ));
    }
    if samples[0] < BigInt::from(2) {
        return Err(Error::InvalidArgument("sample points must be >= 2".into()));
    }
    let mut decay = Vec::with_capacity(samples.len());
    for t in samples {
        match phi_decays_strictly(phi, t, n) {
            Ok(pass) => {
                let detail = if pass {
                    format!("phi({}) < t^-{}", t, n)
                } else {
                    format!("phi({}) does not lie strictly below t^-{}", t, n)
                };
                decay.push((t.clone(), pass, detail));
            }
            Err(e) => decay.push((t.clone(), false, e.to_string())),
        }
    }
    let mut ratio_probes = Vec::with_capacity(6);
    for j in 1..=6u32 {
        let pow = BigInt::one() << j;
        let alpha = Rational::new(&pow + 1, pow.clone());
        let mut min_ratio: Option<Enclosure> = None;
        for t in samples {
            let t_up = t + ceil_div(t, &pow);
            let num = phi.eval(&t_up, 128)?;
            let den = phi.eval(t, 128)?;
            let ratio = num.div_pos(&den)?;
            min_ratio = Some(match min_ratio {
                None => ratio,
                Some(m) if ratio.lo < m.lo => ratio,
                Some(m) => m,
            });
        }
        ratio_probes.push(RatioProbe {
            alpha,
            min_ratio: min_ratio.expect("samples nonempty"),
        });
    }
    Ok(AdmissibilityReport {
        phi: phi.descriptor(),
        n,
        decay,
        ratio_probes,
        heuristic: true,
    })
}

// --- emission ----------------------------------------------------------------

/// CSV of a critical-scale scan; exact `p/q` columns plus 30-digit
/// outward-rounded decimals for the normalized endpoints.
pub fn write_theta_csv<W: io::Write>(records: &[SpectrumRecord], w: &mut W) -> io::Result<()> {
    writeln!(
        w,
        "k,Q,psi_lo,psi_hi,norm_lo,norm_hi,method,norm_lo_dec,norm_hi_dec"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            r.q,
            format_rational(&r.value.lo),
            format_rational(&r.value.hi),
            format_rational(&r.normalized.lo),
            format_rational(&r.normalized.hi),
            r.method.as_str(),
            decimal_lower(&r.normalized.lo, 30),
            decimal_upper(&r.normalized.hi, 30),
        )?;
    }
    Ok(())
}

pub fn write_ratio_csv<W: io::Write>(records: &[RatioRecord], w: &mut W) -> io::Result<()> {
    writeln!(w, "k,Q,ratio_lo,ratio_hi,ratio_lo_dec,ratio_hi_dec")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.k,
            r.q,
            format_rational(&r.ratio.lo),
            format_rational(&r.ratio.hi),
            decimal_lower(&r.ratio.lo, 30),
            decimal_upper(&r.ratio.hi, 30),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AdmissibilityJson {
    phi: String,
    n: usize,
    heuristic: bool,
    decay: Vec<DecayJson>,
    ratio_probes: Vec<ProbeJson>,
}

#[derive(Serialize)]
struct DecayJson {
    t: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct ProbeJson {
    alpha: String,
    min_ratio_lo: String,
    min_ratio_hi: String,
    min_ratio_lo_dec: String,
    min_ratio_hi_dec: String,
}

impl AdmissibilityReport {
    pub fn to_json_string(&self) -> String {
        let file = AdmissibilityJson {
            phi: self.phi.clone(),
            n: self.n,
            heuristic: self.heuristic,
            decay: self
                .decay
                .iter()
                .map(|(t, pass, detail)| DecayJson {
                    t: t.to_string(),
                    pass: *pass,
                    detail: detail.clone(),
                })
                .collect(),
            ratio_probes: self
                .ratio_probes
                .iter()
                .map(|p| ProbeJson {
                    alpha: format_rational(&p.alpha),
                    min_ratio_lo: format_rational(&p.min_ratio.lo),
                    min_ratio_hi: format_rational(&p.min_ratio.hi),
                    min_ratio_lo_dec: decimal_lower(&p.min_ratio.lo, 30),
                    min_ratio_hi_dec: decimal_upper(&p.min_ratio.hi, 30),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serialization cannot fail");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_sequence, build_sequence_phi, Params, Schedule};
    use crate::numerics::make_rational;

    fn rat(n: i64, d: i64) -> Rational {
        make_rational(BigInt::from(n), BigInt::from(d)).unwrap()
    }

    fn seq_n2(c: Rational, schedule: Schedule, depth: usize) -> Sequence {
        build_sequence(Params { n: 2, c, schedule, depth }).unwrap()
    }

    #[test]
    fn theta_scan_converges_to_the_target_constant() {
        let seq = seq_n2(rat(1, 2), Schedule::Const(2), 5);
        let records = theta_scan(&seq, 1, 3).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.method == Method::WitnessPlusCert));

        assert!(records[0].normalized.lo > rat(492, 1000));
        assert!(records[0].normalized.hi < rat(497, 1000));

        assert!(records[1].normalized.lo > rat(4999, 10000));
        assert!(records[1].normalized.hi < rat(50001, 100000));

        let eps = rat(1, 100_000_000);
        assert!(records[2].normalized.lo > rat(1, 2) - &eps);
        assert!(records[2].normalized.hi < rat(1, 2) + &eps);
    }

    #[test]
    fn theta_estimate_folds_records() {
        let seq = seq_n2(rat(1, 2), Schedule::Const(2), 5);
        let records = theta_scan(&seq, 1, 3).unwrap();
        let est = theta_estimate(&seq, &records).unwrap();
        assert_eq!(est.hi, rat(10001, 20000));
        assert!(est.lo > rat(4999, 10000));

        let single = theta_estimate(&seq, &records[..1]).unwrap();
        assert!(single.lo > rat(4922, 10000) && single.lo < rat(4923, 10000));

        assert!(theta_estimate(&seq, &[]).is_err());
    }

    #[test]
    fn liouville_divergent_schedule_reaches_high_orders() {
        let seq = seq_n2(rat(1, 2), Schedule::Ramp { m0: 1 }, 4);
        // with exponents 2, 3, 4, 5 the top-range witness at block 3 beats Q^-5
        assert!(liouville_check(&seq, 5, 3).unwrap());
        assert!((1..=3).any(|k| liouville_check(&seq, 5, k).unwrap()));
    }

    #[test]
    fn liouville_constant_schedule_stalls_at_low_order() {
        let seq = seq_n2(rat(1, 2), Schedule::Const(2), 4);
        assert!(liouville_check(&seq, 3, 1).unwrap());
        for k in 1..=3 {
            assert!(!liouville_check(&seq, 4, k).unwrap(), "k = {}", k);
        }
    }

    #[test]
    fn ratio_scan_against_matching_decay_target() {
        let phi = PhiFamily::Power { coeff: rat(1, 2), exp: rat(2, 1) };
        let seq = build_sequence_phi(
            Params { n: 2, c: rat(1, 2), schedule: Schedule::Const(2), depth: 4 },
            phi,
        )
        .unwrap();
        let records = phi_ratio_scan(&seq, 1, 2).unwrap();
        assert!(records[0].ratio.lo > rat(98, 100));
        assert!(records[0].ratio.hi < rat(1001, 1000));
        assert!(records[1].ratio.lo > rat(9999, 10000));
        assert!(records[1].ratio.hi < rat(10001, 10000));
    }

    #[test]
    fn ratio_scan_against_cubic_decay_target() {
        let phi = PhiFamily::Power { coeff: rat(1, 1), exp: rat(3, 1) };
        let seq = build_sequence_phi(
            Params { n: 2, c: rat(1, 2), schedule: Schedule::Const(2), depth: 4 },
            phi,
        )
        .unwrap();
        let records = phi_ratio_scan(&seq, 2, 2).unwrap();
        assert!(records[0].ratio.lo > rat(999, 1000));
        assert!(records[0].ratio.hi < rat(1001, 1000));
    }

    #[test]
    fn ratio_scan_requires_decay_variant() {
        let seq = seq_n2(rat(1, 2), Schedule::Const(2), 3);
        assert!(phi_ratio_scan(&seq, 1, 1).is_err());
    }

    #[test]
    fn admissibility_passes_for_strict_decay() {
        let phi = PhiFamily::Power { coeff: rat(1, 2), exp: rat(2, 1) };
        let samples: Vec<BigInt> = [10u64, 100, 1000, 100000]
            .iter()
            .map(|x| BigInt::from(*x))
            .collect();
        let report = check_phi_admissible(&phi, 2, &samples).unwrap();
        assert!(report.decay_all_pass());
        assert!(report.heuristic);
        // ratios approach 1 from below as alpha shrinks toward 1
        for probe in &report.ratio_probes {
            assert!(probe.min_ratio.hi <= rat(1, 1));
        }
        let first = &report.ratio_probes.first().unwrap().min_ratio.lo;
        let last = &report.ratio_probes.last().unwrap().min_ratio.lo;
        assert!(last > first);
    }

    #[test]
    fn admissibility_fails_without_strict_decay() {
        let phi = PhiFamily::Power { coeff: rat(1, 1), exp: rat(2, 1) };
        let samples: Vec<BigInt> = [10u64, 100, 1000].iter().map(|x| BigInt::from(*x)).collect();
        let report = check_phi_admissible(&phi, 2, &samples).unwrap();
        assert!(report.decay.iter().all(|(_, pass, _)| !pass));
    }

    #[test]
    fn admissibility_of_log_damped_decay_starts_at_three() {
        let phi = PhiFamily::PowerLog { coeff: rat(1, 1), exp: rat(2, 1), log_exp: rat(1, 1) };
        let samples: Vec<BigInt> = [2u64, 3, 10, 1000].iter().map(|x| BigInt::from(*x)).collect();
        let report = check_phi_admissible(&phi, 2, &samples).unwrap();
        // at t = 2 the log factor is exactly 1 and the bound is not strict
        assert!(!report.decay[0].1);
        assert!(report.decay[1..].iter().all(|(_, pass, _)| *pass));
    }

    #[test]
    fn csv_emission_shapes() {
        let seq = seq_n2(rat(1, 2), Schedule::Const(2), 4);
        let records = theta_scan(&seq, 1, 2).unwrap();
        let mut buf = Vec::new();
        write_theta_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,Q,psi_lo,psi_hi,norm_lo,norm_hi,method,norm_lo_dec,norm_hi_dec"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 9);
        assert_eq!(row[0], "1");
        assert_eq!(row[1], "255");
        assert_eq!(row[6], "witness_plus_cert");
        assert!(row[7].starts_with("4.9224"));
    }
}
