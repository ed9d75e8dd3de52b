//! Report schema shared by all verification suites: one row per check,
//! an overall verdict, and content-based certificate digests so that
//! equal evidence hashes equally no matter how the work was scheduled.

use serde::Serialize;
use sha2::{Digest, Sha256};

use qrank_core::ring::RingElement;
use qrank_core::RingContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn word(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Process exit code: pass 0, fail 1, inconclusive 2.
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub claim: String,
    pub instance: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub verdict: Verdict,
    #[serde(rename = "certificate-digest")]
    pub certificate_digest: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub quiver: String,
    pub suite: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub checks: Vec<CheckRow>,
    pub verdict: Verdict,
}

impl Report {
    pub fn overall(checks: &[CheckRow]) -> Verdict {
        let mut worst = Verdict::Pass;
        for c in checks {
            // Fail dominates inconclusive dominates pass.
            worst = match (worst, c.verdict) {
                (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
                (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
                _ => Verdict::Pass,
            };
        }
        worst
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Fixed-width table; identical evidence renders identical bytes.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<30} {:<44} {:<13} {}\n",
            "claim", "instance", "verdict", "digest"
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<30} {:<44} {:<13} {}\n",
                c.claim,
                c.instance,
                c.verdict.word(),
                &c.certificate_digest[..12],
            ));
        }
        let (mut pass, mut fail, mut inc) = (0, 0, 0);
        for c in &self.checks {
            match c.verdict {
                Verdict::Pass => pass += 1,
                Verdict::Fail => fail += 1,
                Verdict::Inconclusive => inc += 1,
            }
        }
        out.push_str(&format!(
            "summary: {pass} pass, {fail} fail, {inc} inconclusive\n"
        ));
        out
    }
}

/// Hex SHA-256 of the canonical evidence string for a check.
pub fn digest(evidence: &str) -> String {
    let mut h = Sha256::new();
    h.update(evidence.as_bytes());
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Canonical string for a ring element: one line per class, sorted, each
/// identified by its invariants (dimension vector and rank vector) rather
/// than by interner position, so concurrent schedules produce the same text.
pub fn element_signature(ring: &RingContext, elem: &RingElement) -> String {
    let mut lines: Vec<String> = elem
        .iter()
        .map(|(id, c)| {
            let l = ring.label(id);
            format!("{:?}|{:?}x{}", l.dims, l.rank_vector, c)
        })
        .collect();
    lines.sort();
    lines.join("\n")
}

/// Canonical string for a decomposition multiset, content-based like
/// [`element_signature`].
pub fn summands_signature(ring: &RingContext, summands: &[(usize, usize)]) -> String {
    let mut lines: Vec<String> = summands
        .iter()
        .map(|&(id, m)| {
            let l = ring.label(id);
            format!("{:?}|{:?}x{}", l.dims, l.rank_vector, m)
        })
        .collect();
    lines.sort();
    lines.join("\n")
}
