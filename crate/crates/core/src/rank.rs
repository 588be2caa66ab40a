//! Comparing groups of authors against a reference sample.
//!
//! A reference distribution maps percentile to score, interpolating linearly
//! in percentile and log score. An organization's factor is the geometric
//! mean, over its members above a percentile cut, of each member's score
//! divided by the reference score at the member's percentile within the
//! organization: the vertical shift that best aligns the two curves on a log
//! plot.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::metrics::rank_percentiles;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("{label}: {got} positive scores, at least {needed} are required")]
    TooSparse { label: String, needed: usize, got: usize },
    #[error("no member above the {cut}th percentile has a positive score")]
    NoUsableMembers { cut: f64 },
    #[error("score {0} is negative or not a number")]
    BadScore(f64),
}

pub const DEFAULT_CUT_PERCENTILE: f64 = 20.0;
pub const MIN_REFERENCE: usize = 5;
pub const MIN_THIRDS_REFERENCE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDistribution {
    pub label: String,
    /// `(percentile, ln score)`, percentiles strictly increasing.
    knots: Vec<(f64, f64)>,
    /// Zero scores left out of the knots.
    pub zeros_excluded: usize,
}

fn check(scores: &[f64]) -> Result<(), RankError> {
    match scores.iter().find(|s| !(**s >= 0.0) || s.is_infinite()) {
        Some(&bad) => Err(RankError::BadScore(bad)),
        None => Ok(()),
    }
}

impl ReferenceDistribution {
    /// At least [`MIN_REFERENCE`] positive scores are required.
    pub fn build(label: impl Into<String>, scores: &[f64]) -> Result<Self, RankError> {
        Self::build_with_min(label, scores, MIN_REFERENCE)
    }

    pub fn build_with_min(label: impl Into<String>, scores: &[f64], min_positive: usize) -> Result<Self, RankError> {
        let label = label.into();
        check(scores)?;
        let positive: Vec<f64> = scores.iter().copied().filter(|&s| s > 0.0).collect();
        if positive.len() < min_positive.max(1) {
            return Err(RankError::TooSparse { label, needed: min_positive.max(1), got: positive.len() });
        }
        let pct = rank_percentiles(&positive);
        let mut knots: Vec<(f64, f64)> = pct.into_iter().zip(positive.iter().map(|s| s.ln())).collect();
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        // tied scores share a percentile; keep one knot per tie
        knots.dedup_by(|a, b| a.0 == b.0);
        Ok(Self { label, knots, zeros_excluded: scores.len() - positive.len() })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Reference score at percentile `p`, clamped to the end knots.
    pub fn eval(&self, p: f64) -> f64 {
        let k = &self.knots;
        let (first, last) = (k[0], k[k.len() - 1]);
        if p <= first.0 {
            return first.1.exp();
        }
        if p >= last.0 {
            return last.1.exp();
        }
        let i = k.partition_point(|&(q, _)| q <= p);
        let (p0, s0) = k[i - 1];
        let (p1, s1) = k[i];
        (s0 + (s1 - s0) * (p - p0) / (p1 - p0)).exp()
    }

    /// Scores at the one-third and two-thirds percentiles.
    pub fn third_thresholds(&self) -> (f64, f64) {
        (self.eval(100.0 / 3.0), self.eval(200.0 / 3.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrgFactor {
    pub factor: f64,
    pub n_members: usize,
    pub n_used: usize,
    /// Members above the cut left out for a zero score.
    pub zeros_excluded: usize,
}

/// Geometric mean of `score / reference(percentile)` over members ranked
/// above `cut_percentile` within the organization.
pub fn org_factor(reference: &ReferenceDistribution, scores: &[f64], cut_percentile: f64) -> Result<OrgFactor, RankError> {
    check(scores)?;
    let pct = rank_percentiles(scores);
    let (mut log_sum, mut used, mut zeros) = (0.0, 0usize, 0usize);
    for (&s, &p) in scores.iter().zip(&pct) {
        if p <= cut_percentile {
            continue;
        }
        if s == 0.0 {
            zeros += 1;
            continue;
        }
        log_sum += s.ln() - reference.eval(p).ln();
        used += 1;
    }
    if used == 0 {
        return Err(RankError::NoUsableMembers { cut: cut_percentile });
    }
    Ok(OrgFactor { factor: (log_sum / used as f64).exp(), n_members: scores.len(), n_used: used, zeros_excluded: zeros })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Third {
    Low,
    Mid,
    High,
}

impl Third {
    pub fn of(score: f64, thresholds: (f64, f64)) -> Self {
        if score >= thresholds.1 {
            Third::High
        } else if score >= thresholds.0 {
            Third::Mid
        } else {
            Third::Low
        }
    }
}

impl fmt::Display for Third {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Third::Low => "low",
            Third::Mid => "mid",
            Third::High => "high",
        })
    }
}

/// Reference distributions for an activity and a prestige measure, each built
/// from at least [`MIN_THIRDS_REFERENCE`] positive scores.
pub fn thirds_references(
    activity: &[f64],
    prestige: &[f64],
) -> Result<(ReferenceDistribution, ReferenceDistribution), RankError> {
    Ok((
        ReferenceDistribution::build_with_min("activity", activity, MIN_THIRDS_REFERENCE)?,
        ReferenceDistribution::build_with_min("prestige", prestige, MIN_THIRDS_REFERENCE)?,
    ))
}

/// `(activity third, prestige third)` for each author.
pub fn thirds_split(
    activity_scores: &[f64],
    prestige_scores: &[f64],
    activity_ref: &ReferenceDistribution,
    prestige_ref: &ReferenceDistribution,
) -> Vec<(Third, Third)> {
    let (ta, tp) = (activity_ref.third_thresholds(), prestige_ref.third_thresholds());
    activity_scores.iter().zip(prestige_scores).map(|(&a, &p)| (Third::of(a, ta), Third::of(p, tp))).collect()
}

/// Members at or above the reference two-thirds threshold, per measure.
pub fn integrated_counts(
    activity_ref: &ReferenceDistribution,
    prestige_ref: &ReferenceDistribution,
    org_activity: &[f64],
    org_prestige: &[f64],
) -> (usize, usize) {
    let upper_a = activity_ref.third_thresholds().1;
    let upper_p = prestige_ref.third_thresholds().1;
    (org_activity.iter().filter(|&&s| s >= upper_a).count(), org_prestige.iter().filter(|&&s| s >= upper_p).count())
}

/// One organization's scores on the ranked metric and the two count measures.
#[derive(Debug, Clone, PartialEq)]
pub struct OrgScores {
    pub org_id: String,
    pub scores: Vec<f64>,
    pub activity: Vec<f64>,
    pub prestige: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub org_id: String,
    pub metric: String,
    pub factor: f64,
    pub rank: usize,
    pub n_members: usize,
    pub n_used: usize,
    pub n_active: usize,
    pub n_prestigious: usize,
}

pub const RANK_HEADER: &str = "org_id\tmetric\tfactor\trank\tn_members\tn_used\tn_active\tn_prestigious";

/// Factor and integrated counts for each organization, ranked by factor
/// (highest first, ties by org id). Organizations without a usable member
/// are reported in the second list.
pub fn rank_organizations(
    reference: &ReferenceDistribution,
    activity_ref: &ReferenceDistribution,
    prestige_ref: &ReferenceDistribution,
    orgs: &[OrgScores],
    cut_percentile: f64,
) -> Result<(Vec<RankRow>, Vec<(String, RankError)>), RankError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for org in orgs {
        match org_factor(reference, &org.scores, cut_percentile) {
            Ok(f) => {
                let (n_active, n_prestigious) = integrated_counts(activity_ref, prestige_ref, &org.activity, &org.prestige);
                rows.push(RankRow {
                    org_id: org.org_id.clone(),
                    metric: reference.label.clone(),
                    factor: f.factor,
                    rank: 0,
                    n_members: f.n_members,
                    n_used: f.n_used,
                    n_active,
                    n_prestigious,
                });
            }
            Err(e @ RankError::NoUsableMembers { .. }) => skipped.push((org.org_id.clone(), e)),
            Err(e) => return Err(e),
        }
    }
    rows.sort_by(|a, b| b.factor.total_cmp(&a.factor).then_with(|| a.org_id.cmp(&b.org_id)));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok((rows, skipped))
}

pub fn rank_tsv(rows: &[RankRow]) -> String {
    let mut out = String::from(RANK_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.2}\t{}\t{}\t{}\t{}\t{}",
            r.org_id, r.metric, r.factor, r.rank, r.n_members, r.n_used, r.n_active, r.n_prestigious
        );
    }
    out
}

/// Percentile curve of a score sample for plotting.
pub fn percentile_curve_tsv(reference: &ReferenceDistribution) -> String {
    let mut out = String::from("percentile\tscore\n");
    for &(p, ls) in reference.knots() {
        let _ = writeln!(out, "{p}\t{}", ls.exp());
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn decades() -> ReferenceDistribution {
        ReferenceDistribution::build("x", &[1.0, 10.0, 100.0, 1000.0, 10000.0]).unwrap()
    }

    #[test]
    fn reference_examples() {
        let r = decades();
        let ps: Vec<f64> = r.knots().iter().map(|k| k.0).collect();
        assert_eq!(ps, vec![10.0, 30.0, 50.0, 70.0, 90.0]);
        assert!((r.eval(20.0) - 10f64.sqrt()).abs() < 1e-12);
        assert!((r.eval(99.0) - 10000.0).abs() < 1e-9);
        assert!((r.eval(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_reference_rejected() {
        let e = ReferenceDistribution::build("x", &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap_err();
        assert!(matches!(e, RankError::TooSparse { got: 4, .. }));
        let r = ReferenceDistribution::build("x", &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(r.zeros_excluded, 1);
        assert!(ReferenceDistribution::build("x", &[f64::NAN; 6]).is_err());
    }

    #[test]
    fn ties_collapse_to_one_knot() {
        let r = ReferenceDistribution::build("x", &[1.0, 2.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.knots().len(), 4);
        assert_eq!(r.knots()[1].0, 40.0);
    }

    #[test]
    fn reference_against_itself() {
        let scores = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0, 3.5];
        let r = ReferenceDistribution::build("x", &scores).unwrap();
        let f = org_factor(&r, &scores, DEFAULT_CUT_PERCENTILE).unwrap();
        assert!((f.factor - 1.0).abs() < 1e-12);
        let doubled: Vec<f64> = scores.iter().map(|s| 2.0 * s).collect();
        assert!((org_factor(&r, &doubled, DEFAULT_CUT_PERCENTILE).unwrap().factor - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nobody_above_the_cut() {
        let r = decades();
        assert!(matches!(org_factor(&r, &[0.0, 0.0], 20.0), Err(RankError::NoUsableMembers { .. })));
        let f = org_factor(&r, &[0.0, 0.0, 5.0], 20.0).unwrap();
        // the tied zeros share percentile 33.3, above the cut
        assert_eq!((f.n_used, f.zeros_excluded), (1, 2));
    }

    #[test]
    fn thirds_and_counts() {
        let uniform: Vec<f64> = (1..=9).map(f64::from).collect();
        let r = ReferenceDistribution::build_with_min("u", &uniform, 3).unwrap();
        let (lo, hi) = r.third_thresholds();
        // percentiles 61.1 (score 6) and 72.2 (score 7) bracket 66.67
        let brute = (6f64.ln() + (7f64.ln() - 6f64.ln()) * (200.0 / 3.0 - 550.0 / 9.0) / (100.0 / 9.0)).exp();
        assert!((hi - brute).abs() < 1e-12);
        assert_eq!(Third::of(7.0, (lo, hi)), if 7.0 >= brute { Third::High } else { Third::Mid });
        let split = thirds_split(&[9.0, 1.0], &[9.0, 5.0], &r, &r);
        assert_eq!(split, vec![(Third::High, Third::High), (Third::Low, Third::Mid)]);
        assert_eq!(integrated_counts(&r, &r, &[0.5, 1.0], &[0.1, 0.2]), (0, 0));
    }

    #[test]
    fn ranking_rows() {
        let base = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = ReferenceDistribution::build("sumprod", &base).unwrap();
        let org = |id: &str, k: f64| OrgScores {
            org_id: id.into(),
            scores: base.iter().map(|s| s * k).collect(),
            activity: base.to_vec(),
            prestige: base.to_vec(),
        };
        let empty = OrgScores { org_id: "z".into(), scores: vec![0.0], activity: vec![], prestige: vec![] };
        let (rows, skipped) = rank_organizations(&r, &r, &r, &[org("a", 1.0), org("b", 1.7), empty], 20.0).unwrap();
        assert_eq!(rows[0].org_id, "b");
        assert_eq!(rows[1].rank, 2);
        assert_eq!(skipped.len(), 1);
        let tsv = rank_tsv(&rows);
        assert!(tsv.lines().nth(2).unwrap().starts_with("a\tsumprod\t1.00\t2\t6\t"));
    }

    proptest! {
        #[test]
        fn factor_is_scale_equivariant_and_order_free(
            scores in proptest::collection::vec(0.01f64..1e3, 5..30),
            org in proptest::collection::vec(0.01f64..1e3, 2..15),
            lambda in 0.01f64..100.0,
        ) {
            let r = ReferenceDistribution::build("x", &scores).unwrap();
            let f = org_factor(&r, &org, 20.0).unwrap().factor;
            let scaled: Vec<f64> = org.iter().map(|s| s * lambda).collect();
            let g = org_factor(&r, &scaled, 20.0).unwrap().factor;
            prop_assert!((g / (lambda * f) - 1.0).abs() < 1e-12);
            let mut rev = org.clone();
            rev.reverse();
            let h = org_factor(&r, &rev, 20.0).unwrap().factor;
            prop_assert!((h / f - 1.0).abs() < 1e-12);
        }

        #[test]
        fn knots_reproduce_scores(scores in proptest::collection::vec(0.01f64..1e6, 5..40)) {
            let r = ReferenceDistribution::build("x", &scores).unwrap();
            for &(p, ls) in r.knots() {
                prop_assert!((r.eval(p) / ls.exp() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn adding_members_never_lowers_counts(
            base in proptest::collection::vec(0.0f64..100.0, 0..20),
            extra in 0.0f64..100.0,
        ) {
            let r = ReferenceDistribution::build("x", &[5.0, 10.0, 20.0, 40.0, 80.0]).unwrap();
            let before = integrated_counts(&r, &r, &base, &base);
            let mut more = base.clone();
            more.push(extra);
            let after = integrated_counts(&r, &r, &more, &more);
            prop_assert!(after.0 >= before.0 && after.1 >= before.1);
        }
    }
}
