use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;

use super::CrosstabError;
use crate::corpus::{AccessKind, Corpus};

pub const DEFAULT_LAG_SECONDS: i64 = 120;

/// Half-open age buckets `[b_i, b_{i+1})` with an unbounded last bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeBuckets {
    lowers: Vec<f64>,
}

impl Default for AgeBuckets {
    fn default() -> Self {
        Self { lowers: vec![0.0, 1.0, 5.0, 15.0, 25.0] }
    }
}

impl AgeBuckets {
    /// Lower edges; the first must be 0 and they must strictly increase.
    pub fn new(lowers: Vec<f64>) -> Result<Self, CrosstabError> {
        if lowers.first() != Some(&0.0) {
            return Err(CrosstabError::Buckets("first edge must be 0".into()));
        }
        if lowers.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(CrosstabError::Buckets("edges must be finite and strictly increasing".into()));
        }
        Ok(Self { lowers })
    }

    pub fn len(&self) -> usize {
        self.lowers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowers.is_empty()
    }

    /// Bucket of `age`; negative ages fall in the first bucket.
    pub fn index(&self, age: f64) -> usize {
        self.lowers.partition_point(|&l| l <= age).saturating_sub(1)
    }

    pub fn bounds(&self, i: usize) -> (f64, Option<f64>) {
        (self.lowers[i], self.lowers.get(i + 1).copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketStats {
    pub lower: f64,
    pub upper: Option<f64>,
    pub reads: u64,
    pub attributed: u64,
}

impl BucketStats {
    pub fn fraction(&self) -> f64 {
        if self.reads == 0 {
            0.0
        } else {
            self.attributed as f64 / self.reads as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLinkStats {
    pub lag_seconds: i64,
    pub buckets: Vec<BucketStats>,
    /// Events without a reader token, excluded from every bucket.
    pub tokenless_events: u64,
}

impl SessionLinkStats {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("age_lower\tage_upper\treads\tattributed\tfraction\n");
        for b in &self.buckets {
            let upper = b.upper.map_or_else(|| "inf".to_string(), |u| u.to_string());
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{:.6}", b.lower, upper, b.reads, b.attributed, b.fraction());
        }
        out
    }
}

/// Count reads reached from a reference list: a read of paper Q is attributed
/// when the same reader opened the citation list of a different paper at most
/// `lag_seconds` earlier. Each read is attributed at most once. Every event
/// with a token counts as a read, bucketed by Q's age at read time.
pub fn link_follow_stats(corpus: &Corpus, lag_seconds: i64, buckets: &AgeBuckets) -> SessionLinkStats {
    let reads = corpus.reads();
    let mut by_token: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut tokenless = 0u64;
    for (i, r) in reads.iter().enumerate() {
        match r.reader_token.as_deref() {
            Some(t) => by_token.entry(t).or_default().push(i),
            None => tokenless += 1,
        }
    }
    let mut sessions: Vec<Vec<usize>> = by_token.into_values().collect();
    sessions.sort_unstable_by_key(|s| s[0]);

    let nb = buckets.len();
    let counts = sessions
        .par_iter_mut()
        .map(|events| {
            // reads are stored in timestamp order already; keep the sort for safety
            events.sort_by_key(|&i| (reads[i].timestamp, i));
            let mut total = vec![0u64; nb];
            let mut hit = vec![0u64; nb];
            let mut recent: VecDeque<(i64, usize)> = VecDeque::new();
            let mut start = 0;
            while start < events.len() {
                let t = reads[events[start]].timestamp.timestamp();
                let mut end = start;
                while end < events.len() && reads[events[end]].timestamp.timestamp() == t {
                    end += 1;
                }
                let group = &events[start..end];
                for &i in group {
                    if reads[i].access_kind == AccessKind::Citations {
                        recent.push_back((t, corpus.read_paper(i)));
                    }
                }
                while recent.front().is_some_and(|&(tc, _)| t - tc > lag_seconds) {
                    recent.pop_front();
                }
                for &i in group {
                    let paper = corpus.read_paper(i);
                    let b = buckets.index(corpus.read_age(i));
                    total[b] += 1;
                    if recent.iter().any(|&(_, p)| p != paper) {
                        hit[b] += 1;
                    }
                }
                start = end;
            }
            (total, hit)
        })
        .reduce(
            || (vec![0; nb], vec![0; nb]),
            |mut a, b| {
                for k in 0..nb {
                    a.0[k] += b.0[k];
                    a.1[k] += b.1[k];
                }
                a
            },
        );

    SessionLinkStats {
        lag_seconds,
        buckets: (0..nb)
            .map(|k| {
                let (lower, upper) = buckets.bounds(k);
                BucketStats { lower, upper, reads: counts.0[k], attributed: counts.1[k] }
            })
            .collect(),
        tokenless_events: tokenless,
    }
}

#[cfg(test)]
mod tests {
    use chrono::{Duration, NaiveDate, TimeZone, Utc};

    use super::*;
    use crate::corpus::{CorpusBuilder, IngestOptions, PaperKind, PaperRecord, ReadEvent};

    fn corpus(events: &[(i64, Option<&str>, &str, AccessKind)]) -> Corpus {
        let mut b = CorpusBuilder::new();
        for (id, year) in [("P", 1990), ("Q", 1995), ("R", 2000)] {
            b.add_paper(PaperRecord {
                paper_id: id.into(),
                venue: "ApJ".into(),
                pub_date: NaiveDate::from_ymd_opt(year, 7, 1).unwrap(),
                kind: PaperKind::RefereedArticle,
                author_ids: vec!["a".into()],
            });
        }
        let t0 = Utc.with_ymd_and_hms(2001, 3, 1, 12, 0, 0).unwrap();
        for &(dt, tok, paper, kind) in events {
            b.add_read(ReadEvent {
                timestamp: t0 + Duration::seconds(dt),
                reader_token: tok.map(String::from),
                paper_id: paper.into(),
                access_kind: kind,
            });
        }
        b.build(&IngestOptions::default()).unwrap().0
    }

    fn attributed(s: &SessionLinkStats) -> u64 {
        s.buckets.iter().map(|b| b.attributed).sum()
    }

    #[test]
    fn follow_inside_threshold() {
        let c = corpus(&[(0, Some("X"), "P", AccessKind::Citations), (60, Some("X"), "Q", AccessKind::Fulltext)]);
        let s = link_follow_stats(&c, 120, &AgeBuckets::default());
        assert_eq!(attributed(&s), 1);
        // P (age 10.7) and Q (age 5.7) share the [5, 15) bucket
        let q = &s.buckets[AgeBuckets::default().index(5.67)];
        assert_eq!((q.reads, q.attributed), (2, 1));
    }

    #[test]
    fn follow_outside_threshold() {
        let c = corpus(&[(0, Some("X"), "P", AccessKind::Citations), (600, Some("X"), "Q", AccessKind::Fulltext)]);
        assert_eq!(attributed(&link_follow_stats(&c, 120, &AgeBuckets::default())), 0);
    }

    #[test]
    fn other_tokens_same_paper_and_tokenless_do_not_count() {
        let c = corpus(&[
            (0, Some("X"), "P", AccessKind::Citations),
            (10, Some("Y"), "Q", AccessKind::Abstract),
            (20, Some("X"), "P", AccessKind::Abstract),
            (30, None, "Q", AccessKind::Abstract),
        ]);
        let s = link_follow_stats(&c, 120, &AgeBuckets::default());
        assert_eq!(attributed(&s), 0);
        assert_eq!(s.tokenless_events, 1);
        assert_eq!(s.buckets.iter().map(|b| b.reads).sum::<u64>(), 3);
    }

    #[test]
    fn multiple_sources_attribute_once() {
        let c = corpus(&[
            (0, Some("X"), "P", AccessKind::Citations),
            (5, Some("X"), "R", AccessKind::Citations),
            (50, Some("X"), "Q", AccessKind::Fulltext),
        ]);
        let s = link_follow_stats(&c, 120, &AgeBuckets::default());
        // the second citation view itself follows the first
        assert_eq!(attributed(&s), 2);
    }

    #[test]
    fn bucket_lookup() {
        let b = AgeBuckets::default();
        assert_eq!(b.index(-0.1), 0);
        assert_eq!(b.index(0.99), 0);
        assert_eq!(b.index(1.0), 1);
        assert_eq!(b.index(100.0), 4);
        assert!(AgeBuckets::new(vec![1.0, 2.0]).is_err());
        assert!(AgeBuckets::new(vec![0.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn fraction_grows_with_threshold() {
        let c = corpus(&[
            (0, Some("X"), "P", AccessKind::Citations),
            (60, Some("X"), "Q", AccessKind::Fulltext),
            (400, Some("X"), "R", AccessKind::Fulltext),
            (1000, Some("Y"), "R", AccessKind::Citations),
            (1100, Some("Y"), "Q", AccessKind::Abstract),
        ]);
        let mut last = 0;
        for lag in [0, 30, 60, 100, 120, 400, 1000] {
            let n = attributed(&link_follow_stats(&c, lag, &AgeBuckets::default()));
            assert!(n >= last);
            last = n;
        }
        assert_eq!(last, 3);
    }
}
