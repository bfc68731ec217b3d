//! `gradcheck`: run the finite-difference battery and report per group.

use clap::Args;

use lyricgen_core::error::Result;
use lyricgen_core::gradcheck::{run_all, GRADCHECK_TOL};

use crate::config::RunConfig;

#[derive(Args)]
pub struct GradcheckArgs {}

pub fn run(cfg: &RunConfig, _args: GradcheckArgs) -> Result<u8> {
    let report = run_all(cfg.seed_for("gradcheck"))?;
    println!("{:<42} {:>12}  result", "group", "max rel err");
    for g in &report.groups {
        println!(
            "{:<42} {:>12.3e}  {}",
            g.name,
            g.max_rel_err,
            if g.pass() { "pass" } else { "FAIL" }
        );
    }
    println!(
        "worst {:.3e} against tolerance {GRADCHECK_TOL:.0e} over {} groups",
        report.worst(),
        report.groups.len()
    );
    if report.all_pass() {
        Ok(0)
    } else {
        Ok(3)
    }
}
