//! End-to-end verification pipeline and machine-readable reporting.
//!
//! `verify` runs linearize → decompose → per-query region enumeration →
//! per-region filtering. Fail-fast mode stops at the first concrete
//! counterexample (queries processed in stream order, regions of the
//! deciding query all checked so the reported region is deterministic);
//! exhaustive mode visits every region of every query.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::VerifyError;
use crate::filter::{check, FilterBudget, FilterOutcome};
use crate::formula::QuerySpec;
use crate::linearize::{augment, ApproxConfig};
use crate::mosaic::{decompose, query_to_json, MosaicConfig, NormalizedQuery};
use crate::network::Network;
use crate::rat;
use crate::reach::{
    enumerate_by_exclusion, enumerate_regions, first_counterexample, CexRegion,
};
use crate::stats::Counters;
use crate::theory::LinSystem;

/// Which region enumeration engine to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Native,
    /// Instrumented one-counterexample solver with region exclusion.
    Exclusion,
}

/// Verification options.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub approx: ApproxConfig,
    pub mosaic: MosaicConfig,
    pub engine: Engine,
    pub filter: FilterBudget,
    /// Visit every region of every query instead of stopping at the first
    /// concrete counterexample.
    pub exhaustive: bool,
    /// Worker pool size; 0 uses the available parallelism.
    pub jobs: usize,
    /// Write each normalized query as JSON into this directory.
    pub dump_queries: Option<PathBuf>,
}

/// Final verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Unsafe,
    Unknown,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::Unsafe => "unsafe",
            Verdict::Unknown => "unknown",
        }
    }

    /// Process exit code: 0 safe, 1 unsafe, 2 unknown.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Safe => 0,
            Verdict::Unsafe => 1,
            Verdict::Unknown => 2,
        }
    }
}

/// One checked region with its outcome.
#[derive(Clone, Debug)]
pub struct CheckedRegion {
    pub query_index: usize,
    pub region: CexRegion,
    pub outcome: FilterOutcome,
}

/// Full verification result (library view).
#[derive(Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub regions: Vec<CheckedRegion>,
    pub queries: Vec<NormalizedQuery>,
    pub stats: RunStats,
}

/// Aggregated run statistics.
#[derive(Clone, Debug, Default)]
pub struct RunStats {
    pub azulejos: u64,
    pub queries: u64,
    pub stars: u64,
    pub lp_calls: u64,
    pub icp_calls: u64,
    pub spurious: u64,
    pub unknown: u64,
    pub first_ce_seconds: Option<f64>,
    pub phase_seconds: BTreeMap<String, f64>,
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    builder.build().expect("thread pool")
}

/// Run the full pipeline. The verdict contract: `Safe` implies every
/// enumerated region was proven spurious and no check was inconclusive;
/// `Unsafe` implies at least one concrete region with an exactly verified
/// witness.
pub fn verify(
    spec: &QuerySpec,
    net: &Network,
    opts: &VerifyOptions,
) -> Result<Outcome, VerifyError> {
    if spec.inputs.len() != net.input_dim() {
        return Err(VerifyError::Arity(format!(
            "query has {} inputs, network expects {}",
            spec.inputs.len(),
            net.input_dim()
        )));
    }
    if spec.outputs.len() != net.output_dim() {
        return Err(VerifyError::Arity(format!(
            "query has {} outputs, network emits {}",
            spec.outputs.len(),
            net.output_dim()
        )));
    }
    let counters = Counters::new();
    let start = Instant::now();
    let mut phase_seconds = BTreeMap::new();

    // Linearize.
    let goal = spec.goal_formula();
    let t = Instant::now();
    let augmented = augment(&goal, &spec.ranges, &opts.approx);
    phase_seconds.insert("linearize".to_string(), t.elapsed().as_secs_f64());

    // Decompose.
    let t = Instant::now();
    let decomposition = decompose(
        &augmented.formula,
        spec,
        &augmented.approx_atoms,
        &opts.mosaic,
        &counters,
    );
    phase_seconds.insert("mosaic".to_string(), t.elapsed().as_secs_f64());

    if let Some(dir) = &opts.dump_queries {
        std::fs::create_dir_all(dir).map_err(|e| VerifyError::Io(e.to_string()))?;
        for q in &decomposition.queries {
            let path = dir.join(format!("query_{:04}.json", q.index));
            let json = serde_json::to_string_pretty(&query_to_json(q))
                .map_err(|e| VerifyError::Io(e.to_string()))?;
            std::fs::write(path, json).map_err(|e| VerifyError::Io(e.to_string()))?;
        }
    }

    // Enumerate and filter.
    let t = Instant::now();
    let pool = pool(opts.jobs);
    let enumerate = |q: &NormalizedQuery| -> Result<Vec<CexRegion>, VerifyError> {
        match opts.engine {
            Engine::Native => Ok(enumerate_regions(net, q, &counters).0),
            Engine::Exclusion => {
                enumerate_by_exclusion(net, q, &first_counterexample, &counters)
            }
        }
    };
    let check_region = |q: &NormalizedQuery, region: &CexRegion| -> FilterOutcome {
        check(net, q, region, spec, &opts.filter, &counters)
    };

    let mut checked: Vec<CheckedRegion> = Vec::new();
    let mut first_ce_seconds = None;
    if opts.exhaustive {
        let results: Result<Vec<Vec<CheckedRegion>>, VerifyError> = pool.install(|| {
            decomposition
                .queries
                .par_iter()
                .map(|q| {
                    let regions = enumerate(q)?;
                    Ok(regions
                        .into_par_iter()
                        .map(|region| {
                            let outcome = check_region(q, &region);
                            CheckedRegion { query_index: q.index, region, outcome }
                        })
                        .collect::<Vec<_>>())
                })
                .collect()
        });
        for group in results? {
            for r in &group {
                if matches!(r.outcome, FilterOutcome::Concrete { .. })
                    && first_ce_seconds.is_none()
                {
                    first_ce_seconds = Some(start.elapsed().as_secs_f64());
                }
            }
            checked.extend(group);
        }
    } else {
        // Stream order over queries; regions of one query are checked in
        // parallel and fully, so the reported region is deterministic.
        let found = AtomicBool::new(false);
        for q in &decomposition.queries {
            if found.load(Ordering::Relaxed) {
                break;
            }
            let regions = enumerate(q)?;
            let outcomes: Vec<CheckedRegion> = pool.install(|| {
                regions
                    .into_par_iter()
                    .map(|region| {
                        let outcome = check_region(q, &region);
                        if matches!(outcome, FilterOutcome::Concrete { .. }) {
                            found.store(true, Ordering::Relaxed);
                        }
                        CheckedRegion { query_index: q.index, region, outcome }
                    })
                    .collect()
            });
            let hit = found.load(Ordering::Relaxed);
            checked.extend(outcomes);
            if hit {
                first_ce_seconds = Some(start.elapsed().as_secs_f64());
                break;
            }
        }
        if first_ce_seconds.is_some() {
            // Report exactly the first concrete region in canonical order.
            let best = checked
                .iter()
                .enumerate()
                .filter(|(_, r)| matches!(r.outcome, FilterOutcome::Concrete { .. }))
                .map(|(i, _)| i)
                .next()
                .expect("a concrete region was found");
            checked = vec![checked.swap_remove(best)];
        }
    }
    phase_seconds.insert("reach_filter".to_string(), t.elapsed().as_secs_f64());
    phase_seconds.insert("total".to_string(), start.elapsed().as_secs_f64());

    let mut spurious = 0;
    let mut unknown = 0;
    let mut concrete = 0;
    for r in &checked {
        match r.outcome {
            FilterOutcome::Concrete { .. } => concrete += 1,
            FilterOutcome::Spurious => spurious += 1,
            FilterOutcome::Unknown(_) => unknown += 1,
        }
    }
    let verdict = if concrete > 0 {
        Verdict::Unsafe
    } else if unknown > 0 {
        Verdict::Unknown
    } else {
        Verdict::Safe
    };
    let snapshot = counters.snapshot();
    let stats = RunStats {
        azulejos: decomposition.azulejo_patterns as u64,
        queries: decomposition.queries.len() as u64,
        stars: snapshot.stars,
        lp_calls: snapshot.lp_calls,
        icp_calls: snapshot.icp_calls,
        spurious,
        unknown,
        first_ce_seconds,
        phase_seconds,
    };
    Ok(Outcome { verdict, regions: checked, queries: decomposition.queries, stats })
}

// ---------------------------------------------------------------------------
// Machine-readable report.
// ---------------------------------------------------------------------------

/// H-representation of a polytope with exact rational entries as strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeRep {
    #[serde(rename = "A")]
    pub a: Vec<Vec<String>>,
    pub relations: Vec<String>,
    pub b: Vec<String>,
}

/// Affine map with exact rational entries as strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineRep {
    #[serde(rename = "A")]
    pub a: Vec<Vec<String>>,
    pub b: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub iota: PolytopeRep,
    pub omega: AffineRep,
    pub witness: Vec<String>,
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub azulejos: u64,
    pub queries: u64,
    pub stars: u64,
    pub lp_calls: u64,
    pub icp_calls: u64,
    pub spurious: u64,
    pub unknown: u64,
    pub first_ce_seconds: Option<f64>,
    pub phase_seconds: BTreeMap<String, f64>,
}

/// The serializable verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub verdict: String,
    pub regions: Vec<RegionReport>,
    pub stats: StatsReport,
}

fn polytope_rep(sys: &LinSystem) -> PolytopeRep {
    PolytopeRep {
        a: sys
            .rows
            .iter()
            .map(|r| r.coeffs.iter().map(rat::display).collect())
            .collect(),
        relations: sys.rows.iter().map(|r| r.rel.symbol().to_string()).collect(),
        b: sys.rows.iter().map(|r| rat::display(&r.rhs)).collect(),
    }
}

impl Report {
    pub fn from_outcome(outcome: &Outcome) -> Report {
        let regions = outcome
            .regions
            .iter()
            .map(|r| RegionReport {
                iota: polytope_rep(&r.region.iota),
                omega: AffineRep {
                    a: r.region
                        .omega
                        .matrix
                        .iter()
                        .map(|row| row.iter().map(rat::display).collect())
                        .collect(),
                    b: r.region.omega.bias.iter().map(rat::display).collect(),
                },
                witness: r.region.witness.iter().map(rat::display).collect(),
                outcome: match &r.outcome {
                    FilterOutcome::Concrete { .. } => "concrete".to_string(),
                    FilterOutcome::Spurious => "spurious".to_string(),
                    FilterOutcome::Unknown(reason) => format!("unknown: {}", reason),
                },
            })
            .collect();
        Report {
            verdict: outcome.verdict.as_str().to_string(),
            regions,
            stats: StatsReport {
                azulejos: outcome.stats.azulejos,
                queries: outcome.stats.queries,
                stars: outcome.stats.stars,
                lp_calls: outcome.stats.lp_calls,
                icp_calls: outcome.stats.icp_calls,
                spurious: outcome.stats.spurious,
                unknown: outcome.stats.unknown,
                first_ce_seconds: outcome.stats.first_ce_seconds,
                phase_seconds: outcome.stats.phase_seconds.clone(),
            },
        }
    }
}

/// Output format of [`emit_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

/// Render a report. JSON is schema-stable; text is a human summary.
pub fn emit_report(report: &Report, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Text => {
            use std::fmt::Write;
            let mut out = String::new();
            writeln!(out, "verdict: {}", report.verdict).unwrap();
            writeln!(
                out,
                "azulejos: {}  queries: {}  stars: {}  lp calls: {}  icp calls: {}",
                report.stats.azulejos,
                report.stats.queries,
                report.stats.stars,
                report.stats.lp_calls,
                report.stats.icp_calls
            )
            .unwrap();
            writeln!(
                out,
                "regions: {} ({} spurious, {} unknown)",
                report.regions.len(),
                report.stats.spurious,
                report.stats.unknown
            )
            .unwrap();
            if let Some(s) = report.stats.first_ce_seconds {
                writeln!(out, "first counterexample after {:.3}s", s).unwrap();
            }
            for (phase, secs) in &report.stats.phase_seconds {
                writeln!(out, "  {}: {:.3}s", phase, secs).unwrap();
            }
            for (i, r) in report.regions.iter().enumerate() {
                writeln!(
                    out,
                    "region {}: {} witness [{}]",
                    i,
                    r.outcome,
                    r.witness.join(", ")
                )
                .unwrap();
            }
            out.into_bytes()
        }
    }
}
