//! Release curves for a range of median particle sizes.
//!
//! `cargo run -p formu-core --example size_sweep`

use formu_core::profile::standard_grid;
use formu_core::{psd_from_lognormal, simulate_dissolution, DissolutionConditions, DrugSubstance, ParticleMorphology};

fn main() {
    let drug = DrugSubstance::hydrochlorothiazide();
    let grid = standard_grid();
    print!("{:>8}", "d50 um");
    for t in &grid {
        print!("{:>8}", format!("{t}h"));
    }
    println!();
    for d50 in [10.0, 45.0, 97.5, 200.0, 400.0] {
        let psd = psd_from_lognormal(d50, 1.5, 50).expect("valid PSD");
        let profile = simulate_dissolution(
            &drug,
            &ParticleMorphology::sphere(),
            &psd,
            &DissolutionConditions::default(),
            &grid,
        )
        .expect("simulation");
        print!("{d50:>8}");
        for r in profile.released() {
            print!("{r:>8.1}");
        }
        println!();
    }
}
