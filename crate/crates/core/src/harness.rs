//! Ratio sweeps, win scoring and CSV persistence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::EngineSettings;
use crate::engine::{run_session_sequential, run_session_threaded};
use crate::market::ScheduleConfig;
use crate::seed;
use crate::session::{EngineError, EngineMode, RosterEntry, SessionResult};
use crate::traders::TraderParams;
use crate::types::{Algo, Side, TraderId};

pub const DETAIL_HEADER: [&str; 10] = [
    "mode", "algoA", "algoB", "ratio_a", "ratio_b", "trial", "seed", "appt_a", "appt_b", "winner",
];
pub const SUMMARY_HEADER: [&str; 6] = ["ratio_a", "ratio_b", "wins_a", "wins_b", "ties", "delta"];

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("no {0} trader in session")]
    NoSuchAlgoInSession(Algo),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed summary: {0}")]
    MalformedSummary(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    #[serde(rename = "TIE")]
    Tie,
}

impl Winner {
    pub fn swapped(self) -> Winner {
        match self {
            Winner::A => Winner::B,
            Winner::B => Winner::A,
            Winner::Tie => Winner::Tie,
        }
    }
}

/// Average profit per trader over every trader (both sides) running `algo`.
pub fn appt(result: &SessionResult, algo: Algo) -> Result<f64, HarnessError> {
    let (sum, n) = result
        .traders
        .iter()
        .filter(|t| t.algo == algo)
        .fold((0i64, 0usize), |(s, n), t| (s + t.profit, n + 1));
    if n == 0 {
        return Err(HarnessError::NoSuchAlgoInSession(algo));
    }
    Ok(sum as f64 / n as f64)
}

/// Strict comparison of APPTs; exact equality is a tie.
pub fn score_session(result: &SessionResult, a: Algo, b: Algo) -> Result<Winner, HarnessError> {
    let (pa, pb) = (appt(result, a)?, appt(result, b)?);
    Ok(if pa > pb {
        Winner::A
    } else if pb > pa {
        Winner::B
    } else {
        Winner::Tie
    })
}

/// Builds the roster for `count_a` A-traders and `per_side - count_a`
/// B-traders on each side. Buyers take ids `0..per_side`, sellers the rest;
/// within a side the algorithms appear in their canonical order, so the
/// sweeps (A, B) at a:b and (B, A) at b:a produce identical rosters.
pub fn build_roster(a: Algo, b: Algo, count_a: usize, per_side: usize) -> Vec<RosterEntry> {
    let mut slots = [(a, count_a), (b, per_side - count_a)];
    slots.sort_by_key(|s| s.0);
    let mut roster = Vec::with_capacity(2 * per_side);
    let mut id = 0u32;
    for side in [Side::Bid, Side::Ask] {
        for &(algo, count) in &slots {
            for _ in 0..count {
                roster.push(RosterEntry {
                    id: TraderId(id),
                    algo,
                    side,
                });
                id += 1;
            }
        }
    }
    roster
}

/// Seed for one session of a sweep. The ratio is identified by the count of
/// the canonically smaller algorithm, keeping mirrored sweeps aligned.
pub fn session_seed(master: u64, a: Algo, b: Algo, count_a: usize, per_side: usize, trial: usize) -> u64 {
    let canonical = if a <= b { count_a } else { per_side - count_a };
    seed::derive(master, &[canonical as u64, trial as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub algo_a: Algo,
    pub algo_b: Algo,
    pub n_per_ratio: usize,
    pub per_side: usize,
    pub master_seed: u64,
    pub schedule: ScheduleConfig,
    pub traders: TraderParams,
    pub engine: EngineSettings,
    /// Worker count. Defaults to all cores for sequential sweeps and one for
    /// threaded sweeps, whose timing would be distorted by co-scheduling.
    pub jobs: Option<usize>,
}

impl SweepConfig {
    pub fn new(algo_a: Algo, algo_b: Algo, n_per_ratio: usize, master_seed: u64) -> Self {
        SweepConfig {
            algo_a,
            algo_b,
            n_per_ratio,
            per_side: 20,
            master_seed,
            schedule: ScheduleConfig::default(),
            traders: TraderParams::default(),
            engine: EngineSettings::default(),
            jobs: None,
        }
    }

    pub fn ratios(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.per_side).map(|a| (a, self.per_side - a))
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.algo_a == self.algo_b {
            return Err(HarnessError::InvalidSweep("the two algorithms must differ".into()));
        }
        if self.per_side < 2 {
            return Err(HarnessError::InvalidSweep("per_side must be at least 2".into()));
        }
        Ok(())
    }

    /// Runs one session of the sweep.
    pub fn run_one(&self, count_a: usize, trial: usize) -> Result<(u64, SessionResult), EngineError> {
        let seed = session_seed(self.master_seed, self.algo_a, self.algo_b, count_a, self.per_side, trial);
        let roster = build_roster(self.algo_a, self.algo_b, count_a, self.per_side);
        let schedule = ScheduleConfig {
            n_per_side: self.per_side,
            ..self.schedule.clone()
        };
        let session = self.engine.session_config(roster, seed, &schedule, &self.traders);
        let result = match self.engine.mode {
            EngineMode::Sequential => run_session_sequential(&session)?,
            EngineMode::Threaded => run_session_threaded(&self.engine.threaded_config(session))?,
        };
        Ok((seed, result))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    pub mode: String,
    #[serde(rename = "algoA")]
    pub algo_a: Algo,
    #[serde(rename = "algoB")]
    pub algo_b: Algo,
    pub ratio_a: usize,
    pub ratio_b: usize,
    pub trial: usize,
    pub seed: u64,
    pub appt_a: f64,
    pub appt_b: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioResult {
    pub ratio_a: usize,
    pub ratio_b: usize,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    #[serde(skip)]
    pub excluded: usize,
}

impl RatioResult {
    pub fn delta(&self) -> i64 {
        self.wins_a as i64 - self.wins_b as i64
    }

    pub fn scored(&self) -> usize {
        self.wins_a + self.wins_b + self.ties
    }

    fn add(&mut self, w: Winner) {
        match w {
            Winner::A => self.wins_a += 1,
            Winner::B => self.wins_b += 1,
            Winner::Tie => self.ties += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub ratio_a: usize,
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepProvenance {
    pub mode: EngineMode,
    pub master_seed: u64,
    pub delay_profile_ms: BTreeMap<Algo, f64>,
    pub parallelism: String,
    pub unix_time: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub algo_a: Algo,
    pub algo_b: Algo,
    pub n_per_ratio: usize,
    pub ratios: Vec<RatioResult>,
    /// Sorted by (ratio, trial).
    pub rows: Vec<DetailRow>,
    pub exclusions: Vec<Exclusion>,
    /// Sessions whose tape failed the surplus-conservation check.
    pub conservation_failures: Vec<(usize, usize, String)>,
    pub provenance: SweepProvenance,
}

impl SweepResult {
    /// Column sums `(wins_a, wins_b, ties)`.
    pub fn totals(&self) -> (usize, usize, usize) {
        totals(&self.ratios)
    }
}

pub fn totals(ratios: &[RatioResult]) -> (usize, usize, usize) {
    ratios.iter().fold((0, 0, 0), |(a, b, t), r| {
        (a + r.wins_a, b + r.wins_b, t + r.ties)
    })
}

/// Runs every ratio `1:(per_side-1)` through `(per_side-1):1`, `n_per_ratio`
/// sessions each. Failed sessions are excluded and reported, not fatal.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, HarnessError> {
    run_sweep_with(cfg, &|_, _| {})
}

/// As [`run_sweep`], calling `progress(done, total)` after each session.
pub fn run_sweep_with(
    cfg: &SweepConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let jobs = cfg.jobs.unwrap_or(match cfg.engine.mode {
        EngineMode::Sequential => rayon::current_num_threads(),
        EngineMode::Threaded => 1,
    });
    let tasks: Vec<(usize, usize)> = cfg
        .ratios()
        .flat_map(|(a, _)| (0..cfg.n_per_ratio).map(move |t| (a, t)))
        .collect();
    let total = tasks.len();
    let done = std::sync::atomic::AtomicUsize::new(0);

    type Outcome = (usize, usize, Result<(u64, SessionResult), EngineError>);
    let work = |&(a, t): &(usize, usize)| -> Outcome {
        let out = cfg.run_one(a, t);
        let d = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        progress(d, total);
        (a, t, out)
    };
    let outcomes: Vec<Outcome> = if jobs <= 1 {
        tasks.iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::InvalidSweep(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(work).collect())
    };

    let mode = cfg.engine.mode.tag().to_string();
    let mut ratios: BTreeMap<usize, RatioResult> = cfg
        .ratios()
        .map(|(a, b)| {
            (
                a,
                RatioResult {
                    ratio_a: a,
                    ratio_b: b,
                    ..Default::default()
                },
            )
        })
        .collect();
    let mut rows = Vec::with_capacity(total);
    let mut exclusions = Vec::new();
    let mut conservation_failures = Vec::new();
    for (a, t, out) in outcomes {
        let ratio = ratios.get_mut(&a).expect("ratio exists");
        let (seed, result) = match out {
            Ok(x) => x,
            Err(e) => {
                ratio.excluded += 1;
                exclusions.push(Exclusion {
                    ratio_a: a,
                    trial: t,
                    seed: session_seed(cfg.master_seed, cfg.algo_a, cfg.algo_b, a, cfg.per_side, t),
                    error: e.to_string(),
                });
                continue;
            }
        };
        if let Err(e) = result.check_surplus_conservation() {
            conservation_failures.push((a, t, e));
        }
        let winner = score_session(&result, cfg.algo_a, cfg.algo_b)?;
        ratio.add(winner);
        rows.push(DetailRow {
            mode: mode.clone(),
            algo_a: cfg.algo_a,
            algo_b: cfg.algo_b,
            ratio_a: a,
            ratio_b: ratio.ratio_b,
            trial: t,
            seed,
            appt_a: appt(&result, cfg.algo_a)?,
            appt_b: appt(&result, cfg.algo_b)?,
            winner,
        });
    }
    rows.sort_by_key(|r| (r.ratio_a, r.trial));

    Ok(SweepResult {
        algo_a: cfg.algo_a,
        algo_b: cfg.algo_b,
        n_per_ratio: cfg.n_per_ratio,
        ratios: ratios.into_values().collect(),
        rows,
        exclusions,
        conservation_failures,
        provenance: SweepProvenance {
            mode: cfg.engine.mode,
            master_seed: cfg.master_seed,
            delay_profile_ms: cfg.engine.delay.clone(),
            parallelism: format!("{:?}", cfg.engine.parallelism).to_lowercase(),
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        },
    })
}

pub fn write_detail_csv<W: io::Write>(rows: &[DetailRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(DETAIL_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_detail_csv<R: io::Read>(input: R) -> Result<Vec<DetailRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != DETAIL_HEADER {
        return Err(HarnessError::MalformedSummary(format!(
            "unexpected detail header {header:?}"
        )));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Writes per-ratio rows followed by a `TOTAL` row. Ratios with no scored
/// session are omitted, so an empty sweep yields a header-only file.
pub fn write_summary_csv<W: io::Write>(ratios: &[RatioResult], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    let shown: Vec<&RatioResult> = ratios.iter().filter(|r| r.scored() > 0).collect();
    for r in &shown {
        w.write_record([
            r.ratio_a.to_string(),
            r.ratio_b.to_string(),
            r.wins_a.to_string(),
            r.wins_b.to_string(),
            r.ties.to_string(),
            r.delta().to_string(),
        ])?;
    }
    if !shown.is_empty() {
        let (a, b, t) = totals(ratios);
        w.write_record([
            "TOTAL".to_string(),
            String::new(),
            a.to_string(),
            b.to_string(),
            t.to_string(),
            (a as i64 - b as i64).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a summary CSV, checking deltas and the `TOTAL` row.
pub fn read_summary_csv<R: io::Read>(input: R) -> Result<Vec<RatioResult>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SUMMARY_HEADER {
        return Err(HarnessError::MalformedSummary(format!("unexpected header {header:?}")));
    }
    let bad = |m: String| HarnessError::MalformedSummary(m);
    let num = |s: &str| -> Result<i64, HarnessError> {
        s.parse().map_err(|_| bad(format!("not a number: {s:?}")))
    };
    let mut ratios = Vec::new();
    let mut total = None;
    for rec in r.records() {
        let rec = rec?;
        if total.is_some() {
            return Err(bad("rows after TOTAL".into()));
        }
        let f: Vec<&str> = rec.iter().collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {}", f.len())));
        }
        let (wa, wb, t, d) = (num(f[2])?, num(f[3])?, num(f[4])?, num(f[5])?);
        if wa < 0 || wb < 0 || t < 0 || d != wa - wb {
            return Err(bad(format!("inconsistent row {f:?}")));
        }
        if f[0] == "TOTAL" {
            total = Some((wa as usize, wb as usize, t as usize));
            continue;
        }
        ratios.push(RatioResult {
            ratio_a: num(f[0])? as usize,
            ratio_b: num(f[1])? as usize,
            wins_a: wa as usize,
            wins_b: wb as usize,
            ties: t as usize,
            excluded: 0,
        });
    }
    match total {
        Some(t) if t == totals(&ratios) => Ok(ratios),
        Some(_) => Err(bad("TOTAL row disagrees with column sums".into())),
        None if ratios.is_empty() => Ok(ratios),
        None => Err(bad("missing TOTAL row".into())),
    }
}

/// Re-aggregates detail rows into per-ratio counts, ordered by ratio.
pub fn summarize_rows(rows: &[DetailRow]) -> Vec<RatioResult> {
    let mut by_ratio: BTreeMap<usize, RatioResult> = BTreeMap::new();
    for row in rows {
        by_ratio
            .entry(row.ratio_a)
            .or_insert_with(|| RatioResult {
                ratio_a: row.ratio_a,
                ratio_b: row.ratio_b,
                ..Default::default()
            })
            .add(row.winner);
    }
    by_ratio.into_values().collect()
}

/// File paths `<dir>/<mode>_<A>_vs_<B>_{detail,summary}.csv`.
pub fn output_paths(dir: &Path, mode: EngineMode, a: Algo, b: Algo) -> (PathBuf, PathBuf) {
    let stem = format!("{}_{}_vs_{}", mode.tag(), a, b);
    (
        dir.join(format!("{stem}_detail.csv")),
        dir.join(format!("{stem}_summary.csv")),
    )
}

/// Writes both CSVs for `sweep` into `dir` and returns their paths.
pub fn write_sweep_csv(sweep: &SweepResult, dir: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let (detail, summary) = output_paths(dir, sweep.provenance.mode, sweep.algo_a, sweep.algo_b);
    write_detail_csv(&sweep.rows, std::fs::File::create(&detail)?)?;
    write_summary_csv(&sweep.ratios, std::fs::File::create(&summary)?)?;
    Ok((detail, summary))
}

/// A one-line aggregate in the style `AA 7095 / ZIC 2405 (ties 0)`.
pub fn format_totals(a: Algo, b: Algo, ratios: &[RatioResult]) -> String {
    let (wa, wb, t) = totals(ratios);
    format!("{a} {wa} / {b} {wb} (ties {t})")
}

/// A per-ratio table followed by the totals line.
pub fn format_table(a: Algo, b: Algo, ratios: &[RatioResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>7} {:>7} {:>7} {:>6} {:>6}", "R_o", a.name(), b.name(), "ties", "delta");
    for r in ratios {
        let _ = writeln!(
            s,
            "{:>7} {:>7} {:>7} {:>6} {:>6}",
            format!("{}:{}", r.ratio_a, r.ratio_b),
            r.wins_a,
            r.wins_b,
            r.ties,
            r.delta()
        );
    }
    let _ = writeln!(s, "{}", format_totals(a, b, ratios));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::TraderOutcome;

    fn result_with(profits: &[(Algo, Side, i64)]) -> SessionResult {
        let traders = profits
            .iter()
            .enumerate()
            .map(|(i, &(algo, side, profit))| TraderOutcome {
                id: TraderId(i as u32),
                algo,
                side,
                profit,
                blotter: vec![],
                quote_calls: 0,
                respond_calls: 0,
                iterations: 0,
            })
            .collect();
        SessionResult {
            traders,
            ..Default::default()
        }
    }

    #[test]
    fn appt_examples() {
        let r = result_with(&[(Algo::Aa, Side::Bid, 10), (Algo::Aa, Side::Ask, 20)]);
        assert_eq!(appt(&r, Algo::Aa).unwrap(), 15.0);
        let r = result_with(&[(Algo::Aa, Side::Bid, 9), (Algo::Aa, Side::Ask, 0)]);
        assert_eq!(appt(&r, Algo::Aa).unwrap(), 4.5);
        let r = result_with(&[(Algo::Aa, Side::Bid, 4), (Algo::Aa, Side::Ask, 6)]);
        assert_eq!(appt(&r, Algo::Aa).unwrap(), 5.0);
        assert!(matches!(
            appt(&r, Algo::Gdx),
            Err(HarnessError::NoSuchAlgoInSession(Algo::Gdx))
        ));
    }

    #[test]
    fn scoring() {
        let r = result_with(&[(Algo::Aa, Side::Bid, 15), (Algo::Zic, Side::Bid, 12)]);
        assert_eq!(score_session(&r, Algo::Aa, Algo::Zic).unwrap(), Winner::A);
        assert_eq!(score_session(&r, Algo::Zic, Algo::Aa).unwrap(), Winner::B);
        let r = result_with(&[(Algo::Aa, Side::Bid, 12), (Algo::Zic, Side::Ask, 12)]);
        assert_eq!(score_session(&r, Algo::Aa, Algo::Zic).unwrap(), Winner::Tie);
    }

    #[test]
    fn rosters_mirror_under_label_swap() {
        for a in 1..20 {
            let x = build_roster(Algo::Aa, Algo::Zic, a, 20);
            let y = build_roster(Algo::Zic, Algo::Aa, 20 - a, 20);
            assert_eq!(x, y);
            assert_eq!(x.iter().filter(|r| r.algo == Algo::Aa && r.side == Side::Bid).count(), a);
            assert_eq!(x.iter().filter(|r| r.algo == Algo::Aa && r.side == Side::Ask).count(), a);
            assert_eq!(
                session_seed(9, Algo::Aa, Algo::Zic, a, 20, 3),
                session_seed(9, Algo::Zic, Algo::Aa, 20 - a, 20, 3)
            );
        }
    }

    #[test]
    fn delta_from_published_row() {
        let r = RatioResult {
            ratio_a: 1,
            ratio_b: 19,
            wins_a: 279,
            wins_b: 221,
            ties: 0,
            excluded: 0,
        };
        assert_eq!(r.delta(), 58);
        let mut buf = Vec::new();
        write_summary_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "ratio_a,ratio_b,wins_a,wins_b,ties,delta\n1,19,279,221,0,58\nTOTAL,,279,221,0,58\n"
        );
        assert_eq!(read_summary_csv(text.as_bytes()).unwrap(), vec![r]);
    }

    #[test]
    fn empty_sweep_writes_headers_only() {
        let mut cfg = SweepConfig::new(Algo::Aa, Algo::Zic, 0, 1);
        cfg.jobs = Some(1);
        let s = run_sweep(&cfg).unwrap();
        assert_eq!(s.ratios.len(), 19);
        let dir = tempfile::tempdir().unwrap();
        let (d, m) = write_sweep_csv(&s, dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(d).unwrap(), DETAIL_HEADER.join(",") + "\n");
        assert_eq!(std::fs::read_to_string(m).unwrap(), SUMMARY_HEADER.join(",") + "\n");
    }

    #[test]
    fn malformed_summaries_are_rejected() {
        let bad_delta = "ratio_a,ratio_b,wins_a,wins_b,ties,delta\n1,19,5,3,0,1\nTOTAL,,5,3,0,2\n";
        assert!(read_summary_csv(bad_delta.as_bytes()).is_err());
        let bad_total = "ratio_a,ratio_b,wins_a,wins_b,ties,delta\n1,19,5,3,0,2\nTOTAL,,6,3,0,3\n";
        assert!(read_summary_csv(bad_total.as_bytes()).is_err());
        let no_total = "ratio_a,ratio_b,wins_a,wins_b,ties,delta\n1,19,5,3,0,2\n";
        assert!(read_summary_csv(no_total.as_bytes()).is_err());
    }
}
