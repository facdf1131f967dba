//! Scaling probe: chains of k diamonds, each splitting and re-joining
//! control flow with fresh computations on both sides.
//!
//! Partition sizes at any single point must grow linearly in k — the join
//! intersects away everything branch-local, so each diamond contributes a
//! bounded number of surviving classes. A blow-up here would point at
//! value numbers or annotations leaking across joins.
//!
//! Run with: cargo run --example stress_diamonds

use std::time::Instant;

use vphi::generator::diamond_stress_program;
use vphi::{lower_phis, Analysis};

fn main() {
    println!("{:>4} {:>7} {:>6} {:>12} {:>12} {:>10}", "k", "blocks", "sweeps", "max classes", "per diamond", "wall");
    let mut per_diamond_first = None;
    for k in [4usize, 8, 16, 32] {
        let lowered = lower_phis(&diamond_stress_program(k));
        let started = Instant::now();
        let analysis = Analysis::run(&lowered).expect("converges");
        let wall = started.elapsed();
        let max_classes = analysis
            .block_in
            .values()
            .chain(analysis.block_out.values())
            .map(|p| p.classes().len())
            .max()
            .unwrap();
        let per_diamond = max_classes as f64 / k as f64;
        println!(
            "{k:>4} {:>7} {:>6} {max_classes:>12} {per_diamond:>12.2} {:>9.2?}",
            lowered.blocks.len(),
            analysis.iterations,
            wall
        );
        let baseline = *per_diamond_first.get_or_insert(per_diamond);
        assert!(
            per_diamond <= 1.5 * baseline,
            "super-linear growth: {per_diamond:.2} classes per diamond vs baseline {baseline:.2}"
        );
    }
    println!("growth is linear in k");
}
