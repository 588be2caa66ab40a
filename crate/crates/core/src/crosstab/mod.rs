//! Read-versus-cite contingency tables with power-of-two bins, and session
//! analysis of reads reached through reference lists.
//!
//! Rows are citation bins and columns are read bins. Bin `0` holds only the
//! count zero; bin `b ≥ 1` holds `[b, 2b)`.

mod links;

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, PaperFilter};
use crate::dates::DateWindow;

pub use links::{link_follow_stats, AgeBuckets, BucketStats, SessionLinkStats, DEFAULT_LAG_SECONDS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrosstabError {
    #[error("no papers match the filter ({0})")]
    EmptySelection(String),
    #[error("table has no cells")]
    EmptyTable,
    #[error("malformed table: {0}")]
    Shape(String),
    #[error("invalid age buckets: {0}")]
    Buckets(String),
}

/// Which citations a paper's row is keyed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiteSource {
    /// Citations from papers published inside the read window.
    WindowRate,
    /// Every citation the paper ever received.
    LifetimeTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFormat {
    Raw,
    Log2,
}

/// Marker printed for empty cells in log2 mode.
pub const EMPTY_CELL: &str = "…";

/// Lower bound of the power-of-two bin holding `count`.
pub fn bin_lower(count: u64) -> u64 {
    if count == 0 {
        0
    } else {
        1 << (63 - count.leading_zeros())
    }
}

/// Position of a bin in the sequence 0, 1, 2, 4, 8, …
pub fn bin_index(lower: u64) -> usize {
    if lower == 0 {
        0
    } else {
        lower.trailing_zeros() as usize + 1
    }
}

fn bins_up_to(max_lower: u64) -> Vec<u64> {
    (0..=bin_index(max_lower)).map(|i| if i == 0 { 0 } else { 1 << (i - 1) }).collect()
}

/// `log2(count)`; `None` for zero.
pub fn log2_value(count: u64) -> Option<f64> {
    (count > 0).then(|| (count as f64).log2())
}

/// Two-decimal log2 text: `…` for 0, `0.00` for 1.
pub fn format_log2(count: u64) -> String {
    match log2_value(count) {
        None => EMPTY_CELL.to_string(),
        Some(v) => format!("{v:.2}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossTab {
    row_bins: Vec<u64>,
    col_bins: Vec<u64>,
    cells: Vec<Vec<u64>>,
}

impl CrossTab {
    /// Tabulate `(cites, reads)` pairs, one per paper.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let pairs: Vec<(u64, u64)> = pairs.into_iter().collect();
        let max_row = pairs.iter().map(|p| bin_lower(p.0)).max().unwrap_or(0);
        let max_col = pairs.iter().map(|p| bin_lower(p.1)).max().unwrap_or(0);
        let row_bins = bins_up_to(max_row);
        let col_bins = bins_up_to(max_col);
        let mut cells = vec![vec![0; col_bins.len()]; row_bins.len()];
        for (c, r) in pairs {
            cells[bin_index(bin_lower(c))][bin_index(bin_lower(r))] += 1;
        }
        Self { row_bins, col_bins, cells }
    }

    /// A table from explicit cells over the contiguous bins 0, 1, 2, 4, …
    pub fn from_cells(cells: Vec<Vec<u64>>) -> Result<Self, CrosstabError> {
        let rows = cells.len();
        let cols = cells.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(CrosstabError::EmptyTable);
        }
        if cells.iter().any(|r| r.len() != cols) {
            return Err(CrosstabError::Shape("rows differ in length".into()));
        }
        Ok(Self {
            row_bins: bins_up_to(if rows == 1 { 0 } else { 1 << (rows - 2) }),
            col_bins: bins_up_to(if cols == 1 { 0 } else { 1 << (cols - 2) }),
            cells,
        })
    }

    /// Citation-bin lower bounds.
    pub fn row_bins(&self) -> &[u64] {
        &self.row_bins
    }

    /// Read-bin lower bounds.
    pub fn col_bins(&self) -> &[u64] {
        &self.col_bins
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    /// Count in the cell holding `cites` and `reads`; 0 outside the table.
    pub fn count(&self, cites: u64, reads: u64) -> u64 {
        self.cells
            .get(bin_index(bin_lower(cites)))
            .and_then(|r| r.get(bin_index(bin_lower(reads))))
            .copied()
            .unwrap_or(0)
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.cells.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.col_bins.len()).map(|j| self.cells.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.row_totals().iter().sum()
    }

    /// Tab-separated table: header row of read bins, one row per cite bin,
    /// then a totals row and column. Totals are always raw counts.
    pub fn to_tsv(&self, format: CellFormat) -> String {
        let mut out = String::from("NC\\NR");
        for b in &self.col_bins {
            let _ = write!(out, "\t{b}");
        }
        out.push_str("\ttotal\n");
        let cell = |n: u64| match format {
            CellFormat::Raw => n.to_string(),
            CellFormat::Log2 => format_log2(n),
        };
        for (b, row) in self.row_bins.iter().zip(&self.cells) {
            let _ = write!(out, "{b}");
            for &n in row {
                let _ = write!(out, "\t{}", cell(n));
            }
            let _ = writeln!(out, "\t{}", row.iter().sum::<u64>());
        }
        out.push_str("total");
        for n in self.col_totals() {
            let _ = write!(out, "\t{n}");
        }
        let _ = writeln!(out, "\t{}", self.total());
        out
    }
}

/// Tabulate the papers matching `filter`: reads counted inside `read_window`,
/// cites per `source`.
pub fn build_crosstab(
    corpus: &Corpus,
    filter: &PaperFilter,
    read_window: &DateWindow,
    source: CiteSource,
) -> Result<CrossTab, CrosstabError> {
    let pairs: Vec<(u64, u64)> = (0..corpus.papers().len())
        .into_par_iter()
        .filter(|&i| filter.matches(corpus.paper(i)))
        .map(|i| {
            let cites = match source {
                CiteSource::WindowRate => corpus.cites_in_window(i, read_window),
                CiteSource::LifetimeTotal => corpus.citing_papers(i).len(),
            };
            (cites as u64, corpus.reads_in_window(i, read_window) as u64)
        })
        .collect();
    if pairs.is_empty() {
        return Err(CrosstabError::EmptySelection(filter.to_string()));
    }
    Ok(CrossTab::from_pairs(pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// For each cite bin, the distribution over read bins.
    ReadsGivenCites,
    /// For each read bin, the distribution over cite bins.
    CitesGivenReads,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub conditioning_bin: u64,
    pub papers: u64,
    /// Most frequent bin; ties go to the lower bin. `None` for an empty row.
    pub mode_bin: Option<u64>,
    /// Count-weighted standard deviation in bin positions (one position is a
    /// factor of two). `None` for an empty row.
    pub spread: Option<f64>,
}

/// The most likely bin of one variable given the other, with its spread.
pub fn predictor_profile(tab: &CrossTab, direction: Direction) -> Result<Vec<ProfileEntry>, CrosstabError> {
    if tab.total() == 0 {
        return Err(CrosstabError::EmptyTable);
    }
    let (conditioning, outcome): (&[u64], &[u64]) = match direction {
        Direction::ReadsGivenCites => (&tab.row_bins, &tab.col_bins),
        Direction::CitesGivenReads => (&tab.col_bins, &tab.row_bins),
    };
    let count = |c: usize, o: usize| match direction {
        Direction::ReadsGivenCites => tab.cells[c][o],
        Direction::CitesGivenReads => tab.cells[o][c],
    };
    Ok(conditioning
        .iter()
        .enumerate()
        .map(|(c, &bin)| {
            let counts: Vec<u64> = (0..outcome.len()).map(|o| count(c, o)).collect();
            let n: u64 = counts.iter().sum();
            if n == 0 {
                return ProfileEntry { conditioning_bin: bin, papers: 0, mode_bin: None, spread: None };
            }
            let mut mode = 0;
            for (o, &k) in counts.iter().enumerate() {
                if k > counts[mode] {
                    mode = o;
                }
            }
            let nf = n as f64;
            let mean = counts.iter().enumerate().map(|(o, &k)| o as f64 * k as f64).sum::<f64>() / nf;
            let var = counts.iter().enumerate().map(|(o, &k)| k as f64 * (o as f64 - mean).powi(2)).sum::<f64>() / nf;
            ProfileEntry { conditioning_bin: bin, papers: n, mode_bin: Some(outcome[mode]), spread: Some(var.sqrt()) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn bins() {
        assert_eq!(bin_lower(0), 0);
        assert_eq!(bin_lower(1), 1);
        assert_eq!(bin_lower(17), 16);
        assert_eq!(bin_lower(9), 8);
        assert_eq!(bin_lower(31), 16);
        assert_eq!(bin_index(16), 5);
        assert_eq!(bins_up_to(16), vec![0, 1, 2, 4, 8, 16]);
    }

    #[test]
    fn read_17_cited_9_lands_in_sixth_column() {
        let t = CrossTab::from_pairs([(9, 17)]);
        assert_eq!(t.col_bins()[5], 16);
        assert_eq!(t.cells()[bin_index(8)][5], 1);
        assert_eq!(t.count(9, 17), 1);
    }

    #[test]
    fn log2_rendering() {
        assert_eq!(format_log2(227), "7.83");
        assert_eq!(format_log2(1), "0.00");
        assert_eq!(format_log2(0), EMPTY_CELL);
    }

    #[test]
    fn tsv_layout() {
        let t = CrossTab::from_pairs([(0, 0), (0, 3), (1, 2)]);
        let tsv = t.to_tsv(CellFormat::Log2);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "NC\\NR\t0\t1\t2\ttotal");
        assert_eq!(lines[1], "0\t0.00\t…\t0.00\t2");
        assert_eq!(lines[2], "1\t…\t…\t0.00\t1");
        assert_eq!(lines[3], "total\t1\t0\t2\t3");
    }

    #[test]
    fn scaled_diagonal_has_ratio_eight() {
        let pairs: Vec<(u64, u64)> = (0..200u64).map(|i| (i % 40, 8 * (i % 40))).collect();
        let t = CrossTab::from_pairs(pairs);
        for e in predictor_profile(&t, Direction::ReadsGivenCites).unwrap() {
            if e.conditioning_bin > 0 {
                assert_eq!(e.mode_bin, Some(8 * e.conditioning_bin));
                assert_eq!(e.spread, Some(0.0));
            }
        }
    }

    #[test]
    fn single_paper_has_zero_spread() {
        let t = CrossTab::from_pairs([(3, 5)]);
        let p = predictor_profile(&t, Direction::ReadsGivenCites).unwrap();
        assert_eq!(p[bin_index(2)].spread, Some(0.0));
        assert_eq!(p[0].mode_bin, None);
    }

    #[test]
    fn ties_go_to_the_lower_bin() {
        let t = CrossTab::from_cells(vec![vec![3, 3, 1]]).unwrap();
        let p = predictor_profile(&t, Direction::ReadsGivenCites).unwrap();
        assert_eq!(p[0].mode_bin, Some(0));
        let c = predictor_profile(&t, Direction::CitesGivenReads).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[1].mode_bin, Some(0));
    }

    #[test]
    fn empty_table_rejected() {
        let t = CrossTab::from_cells(vec![vec![0]]).unwrap();
        assert_eq!(predictor_profile(&t, Direction::ReadsGivenCites), Err(CrosstabError::EmptyTable));
        assert!(CrossTab::from_cells(vec![vec![1], vec![1, 2]]).is_err());
    }

    proptest! {
        #[test]
        fn log2_round_trips_counts(n in 1u64..100_000_000) {
            prop_assert_eq!(2f64.powf(log2_value(n).unwrap()).round() as u64, n);
        }

        #[test]
        fn margins_agree(pairs in proptest::collection::vec((0u64..5000, 0u64..5000), 1..200)) {
            let t = CrossTab::from_pairs(pairs.iter().copied());
            let rows: u64 = t.row_totals().iter().sum();
            let cols: u64 = t.col_totals().iter().sum();
            prop_assert_eq!(rows, pairs.len() as u64);
            prop_assert_eq!(cols, pairs.len() as u64);
            let mut rev = pairs.clone();
            rev.reverse();
            prop_assert_eq!(CrossTab::from_pairs(rev), t);
        }
    }
}
