//! Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use readcite_core::agemodel::{generate, AgeProductivityModel, CareerModel, CareerPath, SynthConfig};
use readcite_core::citemodel::CitationLinkModel;
use readcite_core::corpus::{
    AccessKind, CitationEdge, Corpus, CorpusBuilder, IngestOptions, PaperFilter, PaperKind,
    PaperRecord, ReadEvent,
};
use readcite_core::crosstab::{build_crosstab, format_log2, link_follow_stats, AgeBuckets, CiteSource, CrossTab};
use readcite_core::dates::{fractional_year, DateWindow};
use readcite_core::metrics::{calibrate_f, normalized_counts, read10, AuthorCounts, MetricConfig};
use readcite_core::obsolescence::{
    fit, half_life, BinnedReadCurve, CurvePoint, FitConfig, Mode, ModeSet, ObsolescenceModel,
};
use readcite_core::rank::{org_factor, ReferenceDistribution};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol
}

// 1
fn half_lives() -> Outcome {
    let years = |k: f64| half_life(k).unwrap().unwrap();
    let (i, c, n) = (years(0.065), years(0.4), years(16.0) * 365.25);
    let ok = close(i, 10.66, 0.005)
        && close(c, 1.733, 0.0005)
        && close(n, 15.8, 0.05)
        && close(i, 10.7, 0.05)
        && close(c, 1.7, 0.05)
        && close(n, 16.0, 0.5);
    check(ok, format!("I {i:.3} yr, C {c:.4} yr, N {n:.2} days"))
}

// 2
fn mode_integrals() -> Outcome {
    let m = ObsolescenceModel::default();
    let get = |mode| m.mode_integral(mode, 0.0).unwrap();
    let (h, i, c, n) = (get(Mode::Historical), get(Mode::Interesting), get(Mode::Current), get(Mode::New));
    let ok = h.is_infinite() && close(i, 692.3, 0.05) && c == 275.0 && n == 100.0;
    check(ok, format!("H {h}, I {i:.1}, C {c}, N {n}"))
}

// 3
fn fit_recovery() -> Outcome {
    let truth = ObsolescenceModel::default();
    let ages: Vec<f64> = (0..60).map(|i| i as f64 + 0.5).collect();
    let articles = 1000.0;
    let key = |m: &ObsolescenceModel| {
        let p = m.params();
        [p[0], p[2], p[3], p[4], p[5]]
    };
    let want = key(&truth);
    let within = |m: &ObsolescenceModel, tol: f64| key(m).iter().zip(&want).all(|(g, w)| (g / w - 1.0).abs() <= tol);

    let exact: Vec<CurvePoint> = ages
        .iter()
        .map(|&age| CurvePoint { age, rate: truth.eval(age, ModeSet::ALL).unwrap(), articles })
        .collect();
    let noiseless = fit(&BinnedReadCurve::new(exact).unwrap(), &FitConfig::default()).unwrap();
    let noiseless_ok = within(&noiseless.model, 1e-3);

    let mut good = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let points: Vec<CurvePoint> = ages
            .iter()
            .map(|&age| {
                let mean = articles * truth.eval(age, ModeSet::ALL).unwrap();
                let count: f64 = Poisson::new(mean).unwrap().sample(&mut rng);
                CurvePoint { age, rate: count / articles, articles }
            })
            .collect();
        let r = fit(&BinnedReadCurve::new(points).unwrap(), &FitConfig::default()).unwrap();
        if within(&r.model, 0.10) {
            good += 1;
        }
    }
    check(good >= 18 && noiseless_ok, format!("{good}/20 noisy fits within 10%; noiseless within 0.1%: {noiseless_ok}"))
}

// 4
fn citation_consistency() -> Outcome {
    let (link, m) = (CitationLinkModel::default(), ObsolescenceModel::default());
    let curve = link.cites_diachronous_curve(&m, 1976, 25, 0.037, true).unwrap();
    let first5 = curve[..5].iter().map(|p| p.value).sum::<f64>() / 5.0;
    let diff = link.cites_synchronous(&m, 80.0, false).unwrap() - link.cites_synchronous(&m, 80.0, true).unwrap();
    let expected = link.cites_per_read() * m.component(Mode::Historical).amplitude;
    let ratio = link.implied_read_cite_ratio(&m, 15.0).unwrap();
    let ok = close(first5, 1.0, 1e-12) && close(diff, expected, 1e-9) && (ratio / 20.0 - 1.0).abs() <= 0.10;
    check(ok, format!("first-five mean {first5}, T=80 difference {diff:.12} vs {expected}, reads/cite at 15 {ratio:.2}"))
}

fn naive_bin(x: u64) -> u64 {
    if x == 0 {
        return 0;
    }
    let mut b = 1;
    while b * 2 <= x {
        b *= 2;
    }
    b
}

/// Tabulate by scanning the raw event lists, keyed by bin lower bounds.
fn naive_table(c: &Corpus, w: &DateWindow) -> BTreeMap<(u64, u64), u64> {
    let mut reads: HashMap<&str, u64> = HashMap::new();
    for r in c.reads() {
        if r.timestamp >= w.start_instant() && r.timestamp < w.end_instant() {
            *reads.entry(&r.paper_id).or_default() += 1;
        }
    }
    let mut cites: HashMap<&str, u64> = HashMap::new();
    for &(citing, cited) in c.citations() {
        let d = c.paper(citing).pub_date;
        if d >= w.start() && d < w.end() {
            *cites.entry(&c.paper(cited).paper_id).or_default() += 1;
        }
    }
    let mut t = BTreeMap::new();
    for p in c.papers() {
        let key = (naive_bin(cites.get(p.paper_id.as_str()).copied().unwrap_or(0)), naive_bin(reads.get(p.paper_id.as_str()).copied().unwrap_or(0)));
        *t.entry(key).or_default() += 1;
    }
    t
}

fn same_table(tab: &CrossTab, naive: &BTreeMap<(u64, u64), u64>) -> bool {
    let mut seen = 0;
    for (i, &rb) in tab.row_bins().iter().enumerate() {
        for (j, &cb) in tab.col_bins().iter().enumerate() {
            let want = naive.get(&(rb, cb)).copied().unwrap_or(0);
            if tab.cells()[i][j] != want {
                return false;
            }
            seen += want;
        }
    }
    seen == naive.values().sum::<u64>()
}

fn hand_corpus(seed: u64, n: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CorpusBuilder::new();
    for i in 0..n {
        b.add_paper(PaperRecord {
            paper_id: format!("h{i}"),
            venue: "ApJ".into(),
            pub_date: NaiveDate::from_ymd_opt(rng.random_range(1988..2001), rng.random_range(1..13), 15).unwrap(),
            kind: PaperKind::RefereedArticle,
            author_ids: vec!["a".into()],
        });
    }
    let t0 = Utc.with_ymd_and_hms(1999, 7, 1, 0, 0, 0).unwrap();
    for _ in 0..rng.random_range(20..300) {
        b.add_read(ReadEvent {
            timestamp: t0 + Duration::seconds(rng.random_range(0..2 * 365 * 86_400)),
            reader_token: None,
            paper_id: format!("h{}", rng.random_range(0..n)),
            access_kind: AccessKind::Fulltext,
        });
    }
    for _ in 0..rng.random_range(5..50) {
        let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
        if x != y {
            b.add_citation(CitationEdge { citing_id: format!("h{x}"), cited_id: format!("h{y}") });
        }
    }
    b.build(&IngestOptions { ingestion_date: NaiveDate::from_ymd_opt(2002, 1, 1).unwrap() }).unwrap().0
}

// 5
fn crosstab_oracle() -> Outcome {
    let w = DateWindow::calendar_years(2000, 2001).unwrap();
    let mut corpora: Vec<Corpus> = [(1, 6), (2, 14), (3, 20)].iter().map(|&(s, n)| hand_corpus(s, n)).collect();
    let synth = generate(&SynthConfig { authors: 220, seed: 5, ..SynthConfig::default() }).unwrap().corpus().unwrap();
    let synth_papers = synth.papers().len();
    corpora.push(synth);
    let all_equal = corpora.iter().all(|c| {
        let tab = build_crosstab(c, &PaperFilter::all(), &w, CiteSource::WindowRate).unwrap();
        same_table(&tab, &naive_table(c, &w))
    });
    let rendered = format_log2(227);
    check(
        all_equal && synth_papers >= 5000 && rendered == "7.83",
        format!("3 hand-built + 1 synthetic ({synth_papers} papers) match cell-for-cell: {all_equal}; 227 renders as {rendered}"),
    )
}

// 6
fn link_follow_recovery() -> Outcome {
    let planted = [0.0, 0.01, 0.03];
    let buckets = AgeBuckets::new(vec![0.0, 5.0, 15.0]).unwrap();
    let cfg = SynthConfig {
        authors: 200,
        seed: 7,
        read_scale: 0.6,
        follow_buckets: buckets.clone(),
        follow_fractions: planted.to_vec(),
        ..SynthConfig::default()
    };
    let c = generate(&cfg).unwrap().corpus().unwrap();
    let stats = link_follow_stats(&c, 120, &buckets);
    let mut ok = true;
    let mut parts = Vec::new();
    for (b, want) in stats.buckets.iter().zip(planted) {
        ok &= b.reads >= 10_000 && close(b.fraction(), want, 0.005);
        parts.push(format!("{:.4} of {} (planted {want})", b.fraction(), b.reads));
    }
    check(ok, parts.join(", "))
}

// 7
fn metrics_checks() -> Outcome {
    let sample = [
        AuthorCounts { norm_cites: 500.0, norm_reads: 400.0, papers: 3 },
        AuthorCounts { norm_cites: 300.0, norm_reads: 600.0, papers: 2 },
    ];
    let f = calibrate_f(&sample).unwrap();
    let mut conserved = true;
    let mut young_ok = true;
    let mut young = 0;
    for seed in [1u64, 2, 3] {
        let s = generate(&SynthConfig { authors: 80, seed, ..SynthConfig::default() }).unwrap();
        let c = s.corpus().unwrap();
        let w = s.config.window;
        let mc = MetricConfig::new(w, w.end().pred_opt().unwrap());
        let (mut nr, mut nc) = (0.0, 0.0);
        for a in 0..c.authors().len() {
            let n = normalized_counts(&c, a, &mc);
            nr += n.norm_reads * w.years();
            nc += n.norm_cites;
        }
        // every paper's reads and cites, shared or whole
        let raw_r: f64 = (0..c.papers().len()).map(|p| c.reads_in_window(p, &w) as f64).sum();
        let raw_c: f64 = (0..c.papers().len()).map(|p| c.cites_until(p, mc.cite_cutoff) as f64).sum();
        conserved &= close(nr, raw_r, 1e-9 * raw_r) && close(nc, raw_c, 1e-9 * raw_c);
        let now = fractional_year(mc.as_of());
        for a in 0..c.authors().len() {
            let papers = c.papers_of_author(a);
            if !papers.is_empty() && papers.iter().all(|&p| now - c.paper(p).pub_year_fraction() < 10.0) {
                young += 1;
                young_ok &= read10(&c, a, &mc, mc.as_of()).unwrap() == normalized_counts(&c, a, &mc).norm_reads;
            }
        }
    }
    check(
        f == 0.8 && conserved && young_ok && young > 0,
        format!("f = {f}; shares conserve raw counts: {conserved}; Read10 = norm_reads for {young} young authors: {young_ok}"),
    )
}

fn naive_percentiles(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    xs.iter()
        .map(|&x| {
            let below = xs.iter().filter(|&&y| y < x).count() as f64;
            let ties = xs.iter().filter(|&&y| y == x).count() as f64;
            100.0 * (below + (ties + 1.0) / 2.0 - 0.5) / n
        })
        .collect()
}

fn naive_factor(reference: &[f64], org: &[f64], cut: f64) -> f64 {
    let mut knots: Vec<(f64, f64)> = naive_percentiles(reference).into_iter().zip(reference.iter().map(|s| s.ln())).collect();
    knots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let at = |p: f64| -> f64 {
        if p <= knots[0].0 {
            return knots[0].1;
        }
        for w in knots.windows(2) {
            if p <= w[1].0 {
                return w[0].1 + (w[1].1 - w[0].1) * (p - w[0].0) / (w[1].0 - w[0].0);
            }
        }
        knots[knots.len() - 1].1
    };
    let logs: Vec<f64> =
        org.iter().zip(naive_percentiles(org)).filter(|(_, p)| *p > cut).map(|(s, p)| s.ln() - at(p)).collect();
    (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

// 8
fn ranking_checks() -> Outcome {
    let reference = [0.7, 1.9, 2.4, 3.3, 5.1, 8.0, 12.5, 20.0, 41.0, 90.0];
    let r = ReferenceDistribution::build("sumprod", &reference).unwrap();
    let itself = org_factor(&r, &reference, 20.0).unwrap().factor;
    let lambda = 3.7;
    let org = [2.0, 6.5, 11.0, 30.0, 0.9, 14.0];
    let base = org_factor(&r, &org, 20.0).unwrap().factor;
    let scaled: Vec<f64> = org.iter().map(|s| s * lambda).collect();
    let equivariant = close(org_factor(&r, &scaled, 20.0).unwrap().factor, lambda * base, 1e-12 * lambda * base);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let reference: Vec<f64> = (0..rng.random_range(5..15)).map(|_| (rng.random::<f64>() * 6.0).exp()).collect();
        let org: Vec<f64> = (0..rng.random_range(2..9)).map(|_| (rng.random::<f64>() * 6.0).exp()).collect();
        let got = org_factor(&ReferenceDistribution::build("x", &reference).unwrap(), &org, 20.0).unwrap().factor;
        worst = worst.max((got - naive_factor(&reference, &org, 20.0)).abs());
    }
    check(
        close(itself, 1.0, 1e-12) && equivariant && worst <= 1e-9,
        format!("self factor {itself:.2}; scale-equivariant: {equivariant}; worst brute-force gap {worst:.1e}"),
    )
}

// 9
fn age_model_checks() -> Outcome {
    let p = AgeProductivityModel::default();
    let full = CareerPath::full(1.0);
    let at = |a: f64| p.latent_productivity(&full, a).unwrap();
    let doubling = at(7.0) / at(0.0);
    let flat = (0..=23).all(|i| close(at(7.0 + f64::from(i)), at(7.0), 1e-12));
    let retired = at(42.5) == 0.0 && at(50.0) == 0.0;

    let cm = CareerModel::default();
    let old = cm.career_trajectory(&full, 80.0).unwrap();
    let retired_ratio = old.read_rate / old.cites;
    let stop = CareerPath::stopping(1.0, 10.0);
    let (f15, s15) = (cm.career_trajectory(&full, 15.0).unwrap(), cm.career_trajectory(&stop, 15.0).unwrap());
    let hook = s15.read_rate < f15.read_rate && s15.cites >= 0.75 * f15.cites;
    let ok = close(doubling, 2.0, 1e-12) && flat && retired && (retired_ratio / 0.5 - 1.0).abs() <= 0.05 && hook;
    check(
        ok,
        format!(
            "p(7)/p(0) {doubling}; plateau flat {flat}; zero past 42 {retired}; retired reads/cite {retired_ratio:.3}; \
             at 15 stop/full reads {:.2}, cites {:.2}",
            s15.read_rate / f15.read_rate,
            s15.cites / f15.cites
        ),
    )
}

fn run_pipeline(root: &Path) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_readcite");
    let steps: [&[&str]; 5] = [
        &["--out", "sim", "--seed", "42", "simulate"],
        &["--out", "ingest", "ingest", "--data", "sim", "--as-of", "2001-12-31"],
        &["--out", "fit", "fit", "--data", "sim", "--as-of", "2001-12-31"],
        &["--out", "metrics", "metrics", "--data", "sim", "--as-of", "2001-12-31"],
        &["--out", "rank", "rank", "--metrics", "metrics/metrics.tsv", "--reference-org", "O001"],
    ];
    for args in steps {
        let out = Command::new(bin)
            .args(args)
            .current_dir(root)
            .env("SOURCE_DATE_EPOCH", "1000000000")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

// 10
fn end_to_end_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    let converged = String::from_utf8_lossy(&ta["fit/fit.tsv"]).trim_end().ends_with("true");
    let factor_one = String::from_utf8_lossy(&ta["rank/rank.tsv"]).lines().any(|l| l.starts_with("O001\t") && l.contains("\t1.00\t"));
    check(
        ta == tb && ta.len() >= 20 && converged && factor_one,
        format!("{} files byte-identical: {}; fit converged: {converged}; reference org factor 1.00: {factor_one}", ta.len(), ta == tb),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("half-lives", half_lives),
        ("mode integrals", mode_integrals),
        ("fit recovery", fit_recovery),
        ("citation-model consistency", citation_consistency),
        ("cross-tab oracle", crosstab_oracle),
        ("link-follow recovery", link_follow_recovery),
        ("metrics", metrics_checks),
        ("ranking", ranking_checks),
        ("age model", age_model_checks),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
