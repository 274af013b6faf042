use std::time::Instant;
use mosaic_core::formula::parse;
use mosaic_core::linearize::{augment, ApproxConfig};
use mosaic_core::mosaic::{decompose, MosaicConfig};
use mosaic_core::stats::Counters;

fn main() {
    let text = std::fs::read_to_string("crates/core/tests/fixtures/acc_monitor.txt").unwrap();
    let spec = parse(&text).unwrap();
    let goal = spec.goal_formula();
    let counters = Counters::new();
    let t = Instant::now();
    let aug = augment(&goal, &spec.ranges, &ApproxConfig::default());
    println!("augment: {:?}", t.elapsed());
    println!("approx atoms: {}", aug.approx_atoms.len());
    println!("augmented atoms: {}", aug.formula.atoms().len());
    if std::env::var("SKIP_DECOMP").is_ok() { return; }
    let t = Instant::now();
    let d = decompose(&aug.formula, &spec, &aug.approx_atoms, &MosaicConfig::default(), &counters);
    println!("decompose: {:?}", t.elapsed());
    println!("queries: {}, patterns: {}, theory calls: {}", d.queries.len(), d.azulejo_patterns, d.theory_calls);
    let snap = counters.snapshot();
    println!("lp_calls: {}, icp_calls: {}, icp_boxes: {}, sat_solves: {}, pivots: {}", snap.lp_calls, snap.icp_calls, snap.icp_boxes, snap.sat_solves, snap.lp_pivots);
    for q in d.queries.iter().take(3) {
        println!("q{}: outconjs={}, nl={}", q.index, q.output_dnf.len(), q.nonlinear_dnf.len());
    }
}
