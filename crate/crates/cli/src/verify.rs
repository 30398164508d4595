//! The composite verification behind `dirspec verify`: schedule
//! inequalities, reduced denominators for every built partial sum,
//! integrality of sampled middle-range witnesses, and sandwich checks
//! between the exhaustive search and the certified enclosures.

use dirspec_core::certificates::{check_schedule, integrality_checks, verify_reducedness, CheckItem};
use dirspec_core::construction::Sequence;
use dirspec_core::oracle::{
    default_exhaustive_depth, psi_star_enclosure, psi_star_exhaustive, SearchOptions, SearchTarget,
};
use dirspec_core::witnesses::{build_witness, case3_thresholds, Case};
use dirspec_core::Result;
use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

#[derive(Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<CheckItem>,
}

impl VerifyReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serialization cannot fail");
        s.push('\n');
        s
    }
}

fn item(name: String, pass: bool, detail: String) -> CheckItem {
    CheckItem { name, pass, detail }
}

/// Run every check; failures become report entries, not errors. The budget
/// caps the exhaustive sandwich searches, which are skipped (and marked so)
/// when the candidate count exceeds it.
pub fn run_verification(seq: &Sequence, budget: u64) -> Result<VerifyReport> {
    let n = seq.n();
    let mut checks = Vec::new();

    for it in check_schedule(seq).items {
        checks.push(item(format!("schedule/{}", it.name), it.pass, it.detail));
    }

    for k in 0..seq.depth() {
        for i in 1..=n {
            match verify_reducedness(seq, i, k) {
                Ok(cert) => checks.push(item(
                    format!("reducedness/S({},{})", i, k),
                    true,
                    format!("denominator {}", cert.denominator),
                )),
                Err(e) => checks.push(item(
                    format!("reducedness/S({},{})", i, k),
                    false,
                    e.to_string(),
                )),
            }
        }
    }

    // one middle-range witness per threshold index of every block
    for k in 1..seq.depth() {
        let thresholds = match case3_thresholds(seq, k) {
            Ok(t) => t,
            Err(e) => {
                checks.push(item(format!("integrality/block{}", k), false, e.to_string()));
                continue;
            }
        };
        for (e_idx, q) in thresholds.iter().enumerate() {
            let name = format!("integrality/k={},e={}", k, e_idx);
            match build_witness(seq, q) {
                Ok(w) if w.tag.case == Case::Three && w.tag.e == Some(e_idx) => {
                    match integrality_checks(seq, &w) {
                        Ok(rec) => {
                            let pass = rec.checks.iter().all(|c| c.pass);
                            checks.push(item(name, pass, format!("{} assertions", rec.checks.len())));
                        }
                        Err(e) => checks.push(item(name, false, e.to_string())),
                    }
                }
                Ok(w) => checks.push(item(
                    name,
                    false,
                    format!("unexpected classification {:?}", w.tag),
                )),
                Err(e) => checks.push(item(name, false, e.to_string())),
            }
        }
    }

    for k in 1..seq.depth() {
        let q: BigInt = seq.term(n * k + 1) - BigInt::one();
        let certified = match psi_star_enclosure(seq, &q) {
            Ok(r) => {
                checks.push(item(
                    format!("sandwich/chain[{}]", k),
                    true,
                    "certificate lower bound below witness upper bound".into(),
                ));
                r
            }
            Err(e) => {
                checks.push(item(format!("sandwich/chain[{}]", k), false, e.to_string()));
                continue;
            }
        };
        let count = (BigInt::from(2) * &q + BigInt::one()).pow(n as u32);
        let name = format!("sandwich/exhaustive[{}]", k);
        if count > BigInt::from(budget) {
            checks.push(item(
                name,
                true,
                format!("skipped: {} candidates exceed the budget {}", count, budget),
            ));
            continue;
        }
        let outcome = default_exhaustive_depth(seq, &q).and_then(|depth| {
            psi_star_exhaustive(
                &SearchTarget::Truncated { seq, depth },
                &q,
                &SearchOptions { budget, threads: None },
            )
        });
        match outcome {
            Ok(search) => {
                let inside = search.value.inside(&certified.value);
                checks.push(item(
                    name,
                    inside && !search.widened,
                    format!(
                        "search range [{}, {}] vs certified [{}, {}]",
                        search.value.lo, search.value.hi, certified.value.lo, certified.value.hi
                    ),
                ));
            }
            Err(e) => checks.push(item(name, false, e.to_string())),
        }
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { pass, checks })
}
