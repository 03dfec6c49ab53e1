use super::{DesignResult, DesignSpec};
use crate::dissolution::derived_metrics;
use crate::profile::fmt_num;

/// Plain-text summary of a design run.
pub fn design_report(result: &DesignResult, spec: &DesignSpec) -> String {
    let metrics = derived_metrics(&result.psd, &spec.morph, &spec.drug);
    let mut out = String::from("Inverse design report\n");
    out.push_str(&format!("designed d50 (um): {:.4}\n", result.psd.d50()));
    match result.lognormal {
        Some(fit) => {
            out.push_str(&format!("lognormal d50 (um): {:.4}\n", fit.d50));
            out.push_str(&format!("geo_sigma: {:.4}\n", fit.geo_sigma));
        }
        None => {
            out.push_str("bins:\n  size_um    mass_fraction\n");
            for bin in result.psd.bins() {
                out.push_str(&format!("  {:<10.4} {:.6}\n", bin.size, bin.mass_fraction));
            }
        }
    }
    out.push_str(&format!("SSA (m2/g): {:.6}\n", metrics.ssa));
    out.push_str(&format!("volume-equivalent size (um): {:.4}\n", metrics.vol_eq_size));
    out.push_str(&format!("residual MSE (%^2): {}\n", fmt_num(result.residual_mse)));
    out.push_str(&format!(
        "iterations: {}  converged: {}  start: {}\n",
        result.iterations, result.converged, result.start_index
    ));
    out.push_str("time_hr  target_pct  achieved_pct\n");
    for p in spec.target.points() {
        let achieved = result.achieved.interpolate(p.time).unwrap_or(f64::NAN);
        out.push_str(&format!("{:<8} {:<11.4} {:.4}\n", fmt_num(p.time), p.released, achieved));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::profile::standard_grid;

    #[test]
    fn perfect_fit_report() {
        let drug = DrugSubstance::hydrochlorothiazide();
        let morph = ParticleMorphology::sphere();
        let cond = DissolutionConditions::default();
        let target = lognormal_target(150.0, 1.4, 50, &drug, &morph, &cond, &standard_grid()).unwrap();
        let spec = DesignSpec::new(
            target,
            drug.clone(),
            morph,
            cond,
            Parameterization::LogNormal { d50: 150.0, geo_sigma: 1.4 },
        );
        let result = design_psd(&spec).unwrap();
        let text = design_report(&result, &spec);
        assert!(text.contains("residual MSE (%^2): 0\n"));
        let ssa = derived_metrics(&result.psd, &morph, &drug).ssa;
        assert!(text.contains(&format!("SSA (m2/g): {ssa:.6}")));
        let rows = text.lines().skip_while(|l| !l.starts_with("time_hr")).skip(1).count();
        assert_eq!(rows, spec.target.len());
    }
}
