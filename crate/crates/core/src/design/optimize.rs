//! Optimizer internals shared by both parameterizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{objective, DesignError, DesignSpec, Parameterization};
use crate::dissolution::{psd_from_lognormal, SizeDistribution};

const TARGET_OBJECTIVE: f64 = 1e-3;
const STALL_WINDOW: usize = 5;
const STALL_REL: f64 = 1e-6;
/// Simplex diameter (log units) below which a stalled Nelder-Mead stops.
const SIMPLEX_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-4;

pub(super) struct Run {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    pub start_index: usize,
}

/// Maps optimizer coordinates to a distribution.
/// Log-normal: `x = [ln d50, ln geo_sigma]`. Free bins: `x` are fractions.
pub(super) fn decode(spec: &DesignSpec, x: &[f64]) -> Result<SizeDistribution, DesignError> {
    Ok(match spec.parameterization {
        Parameterization::LogNormal { .. } => {
            let (d50, geo_sigma) = lognormal_params(spec, x);
            psd_from_lognormal(d50, geo_sigma, spec.n_bins)?
        }
        Parameterization::FreeBins { n } => SizeDistribution::normalized(&spec.free_bin_sizes(n), x)?,
    })
}

/// Log coordinates back to (d50, geo_sigma), clamped so round-off never
/// leaves the box.
pub(super) fn lognormal_params(spec: &DesignSpec, x: &[f64]) -> (f64, f64) {
    let (d_lo, d_hi) = spec.bounds.d50;
    let (s_lo, s_hi) = spec.bounds.geo_sigma;
    (x[0].exp().clamp(d_lo, d_hi), x[1].exp().clamp(s_lo, s_hi))
}

fn eval(spec: &DesignSpec, x: &[f64]) -> Result<f64, DesignError> {
    objective(&decode(spec, x)?, spec)
}

fn stalled(history: &[f64]) -> bool {
    if history.len() <= STALL_WINDOW {
        return false;
    }
    let now = history[history.len() - 1];
    let then = history[history.len() - 1 - STALL_WINDOW];
    then - now <= STALL_REL * then.abs().max(f64::MIN_POSITIVE)
}

fn start_points(spec: &DesignSpec) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.parameterization {
        Parameterization::LogNormal { d50, geo_sigma } => {
            let (d_lo, d_hi) = spec.bounds.d50;
            let (s_lo, s_hi) = spec.bounds.geo_sigma;
            let mut starts = vec![vec![d50.ln(), geo_sigma.ln()]];
            for _ in 1..spec.starts {
                starts.push(vec![
                    rng.random_range(d_lo.ln()..=d_hi.ln()),
                    rng.random_range(s_lo.ln()..=s_hi.ln()),
                ]);
            }
            starts
        }
        Parameterization::FreeBins { n } => {
            let mut starts = vec![vec![1.0 / n as f64; n]];
            for _ in 1..spec.starts {
                let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = w.iter().sum();
                starts.push(w.into_iter().map(|v| v / total).collect());
            }
            starts
        }
    }
}

/// Runs every start, concurrently, and returns them in start order.
pub(super) fn run_starts(spec: &DesignSpec) -> Result<Vec<Run>, DesignError> {
    let starts = start_points(spec);
    std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .into_iter()
            .enumerate()
            .map(|(index, x0)| {
                scope.spawn(move || match spec.parameterization {
                    Parameterization::LogNormal { .. } => nelder_mead(spec, x0, index),
                    Parameterization::FreeBins { .. } => projected_descent(spec, x0, index),
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("optimizer thread panicked"))
            .collect()
    })
}

fn clamp_box(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn nelder_mead(spec: &DesignSpec, x0: Vec<f64>, start_index: usize) -> Result<Run, DesignError> {
    let lo = [spec.bounds.d50.0.ln(), spec.bounds.geo_sigma.0.ln()];
    let hi = [spec.bounds.d50.1.ln(), spec.bounds.geo_sigma.1.ln()];
    let dim = x0.len();

    let f0 = eval(spec, &x0)?;
    let mut history = vec![f0];
    if f0 < TARGET_OBJECTIVE {
        return Ok(Run {
            x: x0,
            value: f0,
            iterations: 0,
            converged: true,
            history,
            start_index,
        });
    }

    let mut simplex = vec![(x0.clone(), f0)];
    for i in 0..dim {
        let step = 0.1 * (hi[i] - lo[i]).max(1e-3);
        let mut x = x0.clone();
        x[i] = if x[i] + step <= hi[i] { x[i] + step } else { x[i] - step };
        clamp_box(&mut x, &lo, &hi);
        let f = eval(spec, &x)?;
        simplex.push((x, f));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < spec.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let along = |t: f64| {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp_box(&mut x, &lo, &hi);
            x
        };

        let xr = along(1.0);
        let fr = eval(spec, &xr)?;
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(spec, &xe)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(0.5);
                let f = eval(spec, &x)?;
                (x, f)
            } else {
                let x = along(-0.5);
                let f = eval(spec, &x)?;
                (x, f)
            };
            if fc < worst.1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let f = eval(spec, &x)?;
                    *vertex = (x, f);
                }
            }
        }
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        history.push(simplex[0].1);

        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if simplex[0].1 < TARGET_OBJECTIVE || (stalled(&history) && diameter < SIMPLEX_TOL) {
            converged = true;
            break;
        }
    }
    let (x, value) = simplex.swap_remove(0);
    Ok(Run {
        x,
        value,
        iterations,
        converged,
        history,
        start_index,
    })
}

/// Euclidean projection onto the probability simplex.
pub(super) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let total: f64 = out.iter().sum();
    for x in &mut out {
        *x /= total;
    }
    out
}

fn projected_descent(spec: &DesignSpec, x0: Vec<f64>, start_index: usize) -> Result<Run, DesignError> {
    let mut x = project_simplex(&x0);
    let mut f = eval(spec, &x)?;
    let mut history = vec![f];
    let mut iterations = 0;
    let mut converged = f < TARGET_OBJECTIVE;
    let mut alpha = 1e-3;

    while !converged && iterations < spec.max_iterations {
        let grad: Vec<f64> = (0..x.len())
            .map(|i| {
                let mut xp = x.clone();
                xp[i] += FD_STEP;
                eval(spec, &xp).map(|fp| (fp - f) / FD_STEP)
            })
            .collect::<Result<_, _>>()?;

        // Armijo backtracking along the projection arc
        let mut accepted = None;
        let mut trial = alpha * 4.0;
        for _ in 0..30 {
            let candidate: Vec<f64> = project_simplex(
                &x.iter().zip(&grad).map(|(xi, gi)| xi - trial * gi).collect::<Vec<_>>(),
            );
            let predicted: f64 = grad.iter().zip(candidate.iter().zip(&x)).map(|(g, (c, xi))| g * (c - xi)).sum();
            if predicted < 0.0 {
                let fc = eval(spec, &candidate)?;
                if fc <= f + 1e-4 * predicted {
                    accepted = Some((candidate, fc));
                    break;
                }
            }
            trial *= 0.5;
        }
        let Some((xn, fnew)) = accepted else { break };
        alpha = trial;
        x = xn;
        f = fnew;
        iterations += 1;
        history.push(f);
        converged = f < TARGET_OBJECTIVE || stalled(&history);
    }
    Ok(Run {
        x,
        value: f,
        iterations,
        converged,
        history,
        start_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_keeps_simplex_points() {
        let p = vec![0.2, 0.3, 0.5];
        let q = project_simplex(&p);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn projection_lands_on_simplex(v in prop::collection::vec(-2.0f64..2.0, 2..20)) {
            let p = project_simplex(&v);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
