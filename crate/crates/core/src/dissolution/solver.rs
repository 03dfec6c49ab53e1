//! Adaptive Runge-Kutta integration of the shrinking-particle population.
//!
//! The state of bin `i` is `u_i = (x_i / x0_i)²`. Under the film model
//! `du_i/dt = -2 · Sh(x_i) · D · (psi_a/psi_v) · (c_sat - c_b) / (rho_s · x0_i²)`,
//! which stays finite as the particle vanishes even though `k ∝ 1/x` does not.
//! A bin whose update crosses zero has dissolved within the step: it is frozen
//! at zero, removed from the active set, and its extinction time is placed at
//! the secant crossing inside the step.

use serde::{Deserialize, Serialize};

use super::kinetics::{mass_transfer_coefficient, reynolds_schmidt, sherwood, shrink_rate};
use super::{
    DissolutionConditions, DissolutionError, DrugSubstance, ParticleMorphology, SizeDistribution,
};
use crate::profile::{DissolutionProfile, ProfilePoint};

/// Bins with normalised squared size at or below this are considered dissolved.
const EXTINCTION_U: f64 = 1e-12;
const MAX_GROWTH: f64 = 2.0;

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// How the Sherwood number is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SherwoodModel {
    /// Re/Sc correlation evaluated at the current particle size.
    Correlation,
    /// Fixed value for every particle (2.0 is the stagnant-film limit).
    Fixed(f64),
}

/// Step-size control works on the dissolved mass: the local error of each bin
/// is converted to a fraction of the dose and summed over bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Allowed local error in dissolved mass per step, as a fraction of dose.
    pub mass_tol: f64,
    /// Seconds.
    pub max_step: f64,
    /// Seconds.
    pub initial_step: f64,
    /// Seconds; steps rejected below this abort the run.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mass_tol: 1e-8,
            max_step: 300.0,
            initial_step: 1.0,
            min_step: 1e-10,
            max_steps: 200_000,
        }
    }
}

/// Snapshot handed to observers after every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    /// Seconds since the start of the test.
    pub time: f64,
    /// Current size of each bin, µm.
    pub sizes: Vec<f64>,
    /// mg
    pub dissolved_mass: f64,
    /// mg
    pub remaining_mass: f64,
    /// mg/mL
    pub bulk_concentration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub profile: DissolutionProfile,
    /// Time (s) at which each bin fully dissolved, if it did.
    pub extinction_times: Vec<Option<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl SimulationOutput {
    /// Time (s) at which the last bin dissolved, `None` if solid remains.
    pub fn complete_dissolution_time(&self) -> Option<f64> {
        self.extinction_times
            .iter()
            .try_fold(0.0f64, |acc, t| t.map(|t| acc.max(t)))
    }
}

/// Configured forward simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulator {
    pub options: SolverOptions,
    pub sherwood: SherwoodModel,
}

impl Default for Simulator {
    fn default() -> Self {
        Self {
            options: SolverOptions::default(),
            sherwood: SherwoodModel::Correlation,
        }
    }
}

/// Simulates with the default solver settings and returns the profile on
/// `output_grid` (hours).
pub fn simulate_dissolution(
    drug: &DrugSubstance,
    morph: &ParticleMorphology,
    psd: &SizeDistribution,
    conditions: &DissolutionConditions,
    output_grid: &[f64],
) -> Result<DissolutionProfile, DissolutionError> {
    Simulator::default()
        .run(drug, morph, psd, conditions, output_grid)
        .map(|out| out.profile)
}

struct Problem<'a> {
    drug: &'a DrugSubstance,
    conditions: &'a DissolutionConditions,
    /// Initial sizes, m.
    x0: Vec<f64>,
    /// Initial bin masses, mg.
    m0: Vec<f64>,
    dose: f64,
    /// Per bin: `Sh(x) = sh_const + sh_coef_i · u^0.26`.
    sh_const: f64,
    sh_coef: Vec<f64>,
    /// Per bin: `du/dt = -rate_i · Sh · (c_sat - c_b)`.
    rate: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(
        drug: &'a DrugSubstance,
        morph: &'a ParticleMorphology,
        psd: &SizeDistribution,
        conditions: &'a DissolutionConditions,
        model: SherwoodModel,
    ) -> Result<Self, DissolutionError> {
        let x0: Vec<f64> = psd.bins().iter().map(|b| b.size * 1e-6).collect();
        let (sh_const, sh_coef) = match model {
            SherwoodModel::Fixed(sh) => (sh, vec![0.0; x0.len()]),
            SherwoodModel::Correlation => {
                // Sh - 2 scales as x^0.52 = x0^0.52 · u^0.26
                let mut coef = Vec::with_capacity(x0.len());
                for &x in &x0 {
                    let (re, sc) = reynolds_schmidt(conditions, x, drug.diffusivity)?;
                    coef.push(sherwood(re, sc)? - 2.0);
                }
                (2.0, coef)
            }
        };
        // du/dt = 2 x dx/dt / x0² with k = Sh D / x, evaluated through the
        // kinetics functions at unit Sh and zero bulk concentration.
        let mut rate = Vec::with_capacity(x0.len());
        for &x in &x0 {
            let k = mass_transfer_coefficient(1.0, drug.diffusivity, x)?;
            let dxdt = shrink_rate(x, k, morph, drug, 0.0)?;
            rate.push(-2.0 * x * dxdt / (x * x) / drug.c_sat);
        }
        Ok(Self {
            drug,
            conditions,
            m0: psd.bins().iter().map(|b| b.mass_fraction * conditions.dose).collect(),
            x0,
            dose: conditions.dose,
            sh_const,
            sh_coef,
            rate,
        })
    }

    fn remaining_mass(&self, u: &[f64]) -> f64 {
        self.m0
            .iter()
            .zip(u)
            .map(|(&m, &ui)| {
                let ui = ui.max(0.0);
                m * ui * ui.sqrt()
            })
            .sum()
    }

    fn bulk_concentration(&self, u: &[f64]) -> f64 {
        if self.conditions.sink_override {
            return 0.0;
        }
        let dissolved = (self.dose - self.remaining_mass(u)).max(0.0);
        (dissolved / self.conditions.medium_volume).min(self.drug.c_sat)
    }

    fn derivative(&self, u: &[f64], active: &[bool], du: &mut [f64]) {
        let driving_force = self.drug.c_sat - self.bulk_concentration(u);
        for i in 0..u.len() {
            du[i] = if active[i] && u[i] > 0.0 {
                let sh = if self.sh_coef[i] == 0.0 {
                    self.sh_const
                } else {
                    self.sh_const + self.sh_coef[i] * u[i].powf(0.26)
                };
                -self.rate[i] * sh * driving_force
            } else {
                0.0
            };
        }
    }

    fn state(&self, time: f64, u: &[f64]) -> SimulationState {
        let remaining = self.remaining_mass(u);
        SimulationState {
            time,
            sizes: self
                .x0
                .iter()
                .zip(u)
                .map(|(&x0, &ui)| x0 * ui.max(0.0).sqrt() * 1e6)
                .collect(),
            dissolved_mass: self.dose - remaining,
            remaining_mass: remaining,
            bulk_concentration: self.bulk_concentration(u),
        }
    }

    fn released_percent(&self, u: &[f64]) -> f64 {
        let dissolved = (self.dose - self.remaining_mass(u)).max(0.0);
        let cap = (self.conditions.saturation_capacity(self.drug) / self.dose).min(1.0);
        (100.0 * dissolved / self.dose).min(100.0 * cap)
    }
}

fn validate_grid(grid: &[f64]) -> Result<(), DissolutionError> {
    match grid.first() {
        None => return Err(DissolutionError::InvalidGrid("empty grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(DissolutionError::InvalidGrid(format!("grid must start at 0, got {t0}")))
        }
        _ => {}
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(DissolutionError::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

impl Simulator {
    pub fn with_sherwood(sherwood: SherwoodModel) -> Self {
        Self {
            sherwood,
            ..Self::default()
        }
    }

    pub fn run(
        &self,
        drug: &DrugSubstance,
        morph: &ParticleMorphology,
        psd: &SizeDistribution,
        conditions: &DissolutionConditions,
        output_grid: &[f64],
    ) -> Result<SimulationOutput, DissolutionError> {
        self.run_observed(drug, morph, psd, conditions, output_grid, &mut |_| {})
    }

    /// Like [`run`](Self::run), calling `observer` at `t = 0` and after every
    /// accepted step.
    pub fn run_observed(
        &self,
        drug: &DrugSubstance,
        morph: &ParticleMorphology,
        psd: &SizeDistribution,
        conditions: &DissolutionConditions,
        output_grid: &[f64],
        observer: &mut dyn FnMut(&SimulationState),
    ) -> Result<SimulationOutput, DissolutionError> {
        drug.validate()?;
        morph.validate()?;
        conditions.validate()?;
        validate_grid(output_grid)?;
        if let SherwoodModel::Fixed(sh) = self.sherwood {
            if !(sh > 0.0) {
                return Err(DissolutionError::Domain(format!("fixed Sherwood must be > 0, got {sh}")));
            }
        }

        let problem = Problem::new(drug, morph, psd, conditions, self.sherwood)?;
        let n = problem.x0.len();
        let opts = &self.options;

        let mut u = vec![1.0; n];
        // Bins without mass are never simulated.
        let mut active: Vec<bool> = problem.m0.iter().map(|&m| m > 0.0).collect();
        let mut extinction: Vec<Option<f64>> = vec![None; n];
        let mut points = vec![ProfilePoint::new(0.0, 0.0)];
        observer(&problem.state(0.0, &u));

        let mut t = 0.0f64;
        let mut h = opts.initial_step.min(opts.max_step);
        let mut accepted = 0usize;
        let mut rejected = 0usize;
        let mut k = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        let mut u5 = vec![0.0; n];
        let mut err = vec![0.0; n];
        let mut crossing = vec![0.0; n];
        let mut just_rejected = false;

        for &t_out_hr in &output_grid[1..] {
            let t_out = t_out_hr * 3600.0;
            while t < t_out {
                if !active.iter().any(|&a| a) {
                    t = t_out;
                    break;
                }
                if accepted + rejected >= opts.max_steps {
                    return Err(DissolutionError::Integration {
                        step: accepted,
                        bin: worst_bin(&err),
                        time_s: t,
                        reason: format!("step budget of {} exhausted", opts.max_steps),
                    });
                }
                h = h.min(opts.max_step);
                let mut landing = false;
                if t + h >= t_out * (1.0 - 1e-14) {
                    h = t_out - t;
                    landing = true;
                }

                let outcome = {
                    problem.derivative(&u, &active, &mut k[0]);
                    for s in 1..7 {
                        for i in 0..n {
                            stage[i] = u[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                        }
                        problem.derivative(&stage, &active, &mut k[s]);
                    }
                    let mut norm = 0.0;
                    for i in 0..n {
                        if !active[i] {
                            err[i] = 0.0;
                            u5[i] = u[i];
                            continue;
                        }
                        let y5 = u[i] + h * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>();
                        let y4 = u[i] + h * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
                        // sizes never grow
                        u5[i] = y5.min(u[i]);
                        crossing[i] = y5;
                        // d(mass fraction)/du = 1.5 · f · √u
                        let sensitivity = 1.5 * problem.m0[i] / problem.dose * u[i].max(0.0).sqrt();
                        err[i] = (y5 - y4) * sensitivity / opts.mass_tol;
                        norm += err[i].abs();
                    }
                    if norm > 1.0 {
                        StepOutcome::Reject(norm)
                    } else {
                        StepOutcome::Accept(norm)
                    }
                };

                match outcome {
                    StepOutcome::Reject(norm) => {
                        rejected += 1;
                        just_rejected = true;
                        h *= (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0);
                        if h < opts.min_step {
                            return Err(DissolutionError::Integration {
                                step: accepted,
                                bin: worst_bin(&err),
                                time_s: t,
                                reason: format!("step size {h:e} s below minimum"),
                            });
                        }
                    }
                    StepOutcome::Accept(norm) => {
                        accepted += 1;
                        t = if landing { t_out } else { t + h };
                        let t_start = t - h;
                        for i in 0..n {
                            if !active[i] {
                                continue;
                            }
                            if u5[i] <= EXTINCTION_U {
                                // secant estimate of the crossing inside the step
                                let theta = (u[i] / (u[i] - crossing[i])).clamp(0.0, 1.0);
                                extinction[i] = Some(t_start + theta * h);
                                u[i] = 0.0;
                                active[i] = false;
                            } else {
                                u[i] = u5[i];
                            }
                        }
                        observer(&problem.state(t, &u));
                        let max_grow = if just_rejected { 1.0 } else { MAX_GROWTH };
                        let grow = if norm == 0.0 { max_grow } else { (0.9 * norm.powf(-0.2)).clamp(0.2, max_grow) };
                        h *= grow;
                        just_rejected = false;
                    }
                }
            }
            points.push(ProfilePoint::new(t_out_hr, problem.released_percent(&u)));
        }

        let profile = DissolutionProfile::new(points)
            .map_err(|e| DissolutionError::InvalidGrid(e.to_string()))?;
        Ok(SimulationOutput {
            profile,
            extinction_times: extinction,
            accepted_steps: accepted,
            rejected_steps: rejected,
        })
    }
}

enum StepOutcome {
    Accept(f64),
    Reject(f64),
}

fn worst_bin(err: &[f64]) -> usize {
    err.iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissolution::psd_from_lognormal;
    use crate::profile::standard_grid;

    fn reference_drug() -> DrugSubstance {
        DrugSubstance::hydrochlorothiazide()
    }

    fn sink() -> DissolutionConditions {
        DissolutionConditions {
            sink_override: true,
            ..DissolutionConditions::default()
        }
    }

    /// Closed-form shrinking-sphere solution with constant Sh = 2 under sink
    /// conditions: x² falls linearly, `t_d = x0² ρ ψv / (4 D ψa C_sat)`.
    fn analytic_released(x0_m: f64, drug: &DrugSubstance, t_s: f64) -> (f64, f64) {
        let rho = drug.true_density * 1000.0;
        let t_d = x0_m * x0_m * rho / (24.0 * drug.diffusivity * drug.c_sat);
        let frac = if t_s >= t_d { 0.0 } else { (1.0 - t_s / t_d).powf(1.5) };
        (t_d, 100.0 * (1.0 - frac))
    }

    #[test]
    fn first_row_is_origin() {
        let psd = psd_from_lognormal(97.5, 1.5, 20).unwrap();
        let p = simulate_dissolution(
            &reference_drug(),
            &ParticleMorphology::sphere(),
            &psd,
            &DissolutionConditions::default(),
            &standard_grid(),
        )
        .unwrap();
        assert_eq!(p.points()[0], ProfilePoint::new(0.0, 0.0));
        assert_eq!(p.len(), 10);
        assert_eq!(p.times(), standard_grid());
        assert!(p.check_well_formed().is_ok());
    }

    #[test]
    fn monodisperse_matches_closed_form() {
        let drug = reference_drug();
        let x0 = 50e-6;
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 30.0 / 3600.0).collect();
        let sim = Simulator::with_sherwood(SherwoodModel::Fixed(2.0));
        let out = sim
            .run(
                &drug,
                &ParticleMorphology::sphere(),
                &SizeDistribution::monodisperse(50.0).unwrap(),
                &sink(),
                &grid,
            )
            .unwrap();
        let (t_d, _) = analytic_released(x0, &drug, 0.0);
        assert!((t_d - 466.67).abs() < 0.01);
        let t_num = out.complete_dissolution_time().unwrap();
        assert!((t_num - t_d).abs() / t_d < 0.01, "{t_num} vs {t_d}");
        for p in out.profile.points() {
            let (_, expect) = analytic_released(x0, &drug, p.time * 3600.0);
            assert!((p.released - expect).abs() < 0.5, "t={} {} vs {}", p.time, p.released, expect);
        }
    }

    #[test]
    fn mass_conservation_and_saturation_bound() {
        let drug = reference_drug();
        // a dose large enough to approach saturation: 0.45 mg/mL · 50 mL = 22.5 mg
        let cond = DissolutionConditions {
            medium_volume: 50.0,
            dose: 30.0,
            ..DissolutionConditions::default()
        };
        let psd = psd_from_lognormal(60.0, 1.5, 25).unwrap();
        let mut worst_mass = 0.0f64;
        let mut max_cb = 0.0f64;
        let out = Simulator::default()
            .run_observed(&drug, &ParticleMorphology::sphere(), &psd, &cond, &standard_grid(), &mut |s| {
                let rel = ((s.dissolved_mass + s.remaining_mass) - cond.dose).abs() / cond.dose;
                worst_mass = worst_mass.max(rel);
                max_cb = max_cb.max(s.bulk_concentration);
                assert!(s.bulk_concentration >= 0.0);
            })
            .unwrap();
        assert!(worst_mass <= 1e-6);
        assert!(max_cb <= drug.c_sat);
        let cap = 100.0 * 22.5 / 30.0;
        let last = out.profile.points().last().unwrap().released;
        assert!(last <= cap + 1e-9 && last > 0.9 * cap, "{last}");
        assert!(out.complete_dissolution_time().is_none());
    }

    #[test]
    fn sink_override_keeps_bulk_at_zero() {
        let psd = psd_from_lognormal(80.0, 1.4, 10).unwrap();
        Simulator::default()
            .run_observed(&reference_drug(), &ParticleMorphology::sphere(), &psd, &sink(), &standard_grid(), &mut |s| {
                assert_eq!(s.bulk_concentration, 0.0)
            })
            .unwrap();
    }

    #[test]
    fn step_halving_changes_little() {
        let psd = psd_from_lognormal(200.0, 1.5, 50).unwrap();
        let mut sim = Simulator::default();
        let a = sim
            .run(&reference_drug(), &ParticleMorphology::sphere(), &psd, &DissolutionConditions::default(), &standard_grid())
            .unwrap();
        sim.options.max_step /= 2.0;
        let b = sim
            .run(&reference_drug(), &ParticleMorphology::sphere(), &psd, &DissolutionConditions::default(), &standard_grid())
            .unwrap();
        for (p, q) in a.profile.points().iter().zip(b.profile.points()) {
            assert!((p.released - q.released).abs() <= 0.1);
        }
    }

    #[test]
    fn grid_validation() {
        let psd = SizeDistribution::monodisperse(50.0).unwrap();
        let run = |grid: &[f64]| {
            simulate_dissolution(&reference_drug(), &ParticleMorphology::sphere(), &psd, &sink(), grid)
        };
        assert!(matches!(run(&[]), Err(DissolutionError::InvalidGrid(_))));
        assert!(matches!(run(&[0.5, 1.0]), Err(DissolutionError::InvalidGrid(_))));
        assert!(matches!(run(&[0.0, 1.0, 1.0]), Err(DissolutionError::InvalidGrid(_))));
        assert_eq!(run(&[0.0, 0.5, 1.0]).unwrap().len(), 3);
    }

    #[test]
    fn step_budget_reports_diagnostic() {
        let mut sim = Simulator::default();
        sim.options.max_steps = 3;
        let err = sim
            .run(
                &reference_drug(),
                &ParticleMorphology::sphere(),
                &psd_from_lognormal(100.0, 1.5, 10).unwrap(),
                &DissolutionConditions::default(),
                &standard_grid(),
            )
            .unwrap_err();
        assert!(matches!(err, DissolutionError::Integration { .. }));
    }
}
