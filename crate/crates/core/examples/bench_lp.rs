use std::time::Instant;
use mosaic_core::rat::{frac, int, Rat};
use mosaic_core::stats::Counters;
use mosaic_core::theory::{lp_feasible, lp_extremum, Direction, LinRel, LinSystem};

fn main() {
    let c = Counters::new();
    // Representative ACC-size system: 3 vars, ranges + 8 constraint rows.
    let vars: Vec<String> = ["r", "rv", "a"].iter().map(|s| s.to_string()).collect();
    let mut sys = LinSystem::new(vars);
    let rows: Vec<(Vec<Rat>, LinRel, Rat)> = vec![
        (vec![int(1), int(0), int(0)], LinRel::Le, int(100)),
        (vec![int(-1), int(0), int(0)], LinRel::Le, int(0)),
        (vec![int(0), int(1), int(0)], LinRel::Le, int(200)),
        (vec![int(0), int(-1), int(0)], LinRel::Le, int(200)),
        (vec![int(0), int(0), int(1)], LinRel::Le, int(100)),
        (vec![int(0), int(0), int(-1)], LinRel::Le, int(100)),
        (vec![int(-200), int(1), int(0)], LinRel::Lt, int(0)),
        (vec![int(1), frac(1, 10), frac(1, 200)], LinRel::Lt, int(50)),
        (vec![frac(3, 7), frac(-2, 9), int(1)], LinRel::Le, frac(22, 3)),
        (vec![frac(-3, 11), frac(5, 13), int(-1)], LinRel::Lt, frac(1, 3)),
    ];
    for (c2, r, b) in rows { sys.push(c2, r, b); }
    let t = Instant::now();
    let n = 200;
    for _ in 0..n {
        let v = lp_feasible(&sys, &c);
        assert!(v.is_sat());
    }
    println!("lp_feasible (with lex witness): {:?}/call", t.elapsed() / n);
    let t = Instant::now();
    for _ in 0..n {
        let _ = lp_extremum(&[int(1), frac(1,3), int(-2)], &sys, Direction::Max, &c).unwrap();
    }
    println!("lp_extremum: {:?}/call", t.elapsed() / n);
    let snap = c.snapshot();
    println!("pivots/call: {}", snap.lp_pivots / (snap.lp_calls.max(1)));
}
