//! Phase-transition sweeps over the measurement count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use srip_core::recovery::{alt_min_recover, sign_enum_oracle, MAX_ORACLE_ROWS};

use crate::config::{PhaseParams, Solver};
use crate::error::{HarnessError, Result};
use crate::experiments::{trial_seed, Instance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionCell {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    /// `successes / trials`, zero when the cell did not run.
    pub success_rate: f64,
    /// Mean up-to-sign relative error; NaN when the cell did not run.
    pub mean_error: f64,
    pub solver: Solver,
    /// Why the cell did not run (budget or parameter problem).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Sweep with default solver settings and the solver's default threshold.
pub fn sweep_phase_transition(
    n: usize,
    k: usize,
    m_grid: &[usize],
    trials: usize,
    solver: Solver,
    master_seed: u64,
) -> Vec<PhaseTransitionCell> {
    let p = PhaseParams { n, k, m_grid: m_grid.to_vec(), trials, solver, ..PhaseParams::default() };
    sweep_phase_transition_with(&p, master_seed)
}

fn trial_error(p: &PhaseParams, m: usize, t: usize, master: u64) -> Result<f64> {
    let inst = Instance::seeded(p.n, p.k, m, p.ensemble, p.value_dist, trial_seed(master, m, t))?;
    let x_hat = match p.solver {
        Solver::Oracle => sign_enum_oracle(&inst.a, &inst.b, &p.basis_pursuit.options())?.result.x_hat,
        Solver::AltMin => {
            let opts = p.alt_min.options(&p.basis_pursuit, inst.solver_seed);
            alt_min_recover(&inst.a, &inst.b, p.restarts, &opts)?.x_hat
        }
    };
    Ok(inst.error(&x_hat)?.expect("seeded instances know x0"))
}

fn cell_problem(p: &PhaseParams, m: usize) -> Option<String> {
    if p.solver == Solver::Oracle && m > MAX_ORACLE_ROWS {
        return Some(format!("budget exceeded: oracle needs m <= {MAX_ORACLE_ROWS}"));
    }
    if m == 0 || p.n == 0 || p.k == 0 || p.k > p.n {
        return Some(format!("invalid instance n={}, k={}, m={m}", p.n, p.k));
    }
    None
}

/// One cell per grid entry, in grid order. All `(m, trial)` pairs are
/// scheduled together and reduced per cell in trial order, so the output
/// does not depend on the thread count.
pub fn sweep_phase_transition_with(p: &PhaseParams, master_seed: u64) -> Vec<PhaseTransitionCell> {
    let jobs: Vec<(usize, usize)> = p
        .m_grid
        .iter()
        .enumerate()
        .filter(|(_, &m)| cell_problem(p, m).is_none())
        .flat_map(|(c, _)| (0..p.trials).map(move |t| (c, t)))
        .collect();
    let errors: Vec<Result<f64>> = jobs.par_iter().map(|&(c, t)| trial_error(p, p.m_grid[c], t, master_seed)).collect();
    let threshold = p.threshold();
    p.m_grid
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            let mut cell = PhaseTransitionCell {
                n: p.n,
                k: p.k,
                m,
                trials: 0,
                successes: 0,
                success_rate: 0.0,
                mean_error: f64::NAN,
                solver: p.solver,
                error: cell_problem(p, m),
            };
            if cell.error.is_some() {
                return cell;
            }
            let mine: Result<Vec<f64>> =
                jobs.iter().zip(&errors).filter(|((jc, _), _)| *jc == c).map(|(_, e)| clone_result(e)).collect();
            match mine {
                Ok(errs) => {
                    cell.trials = errs.len();
                    cell.successes = errs.iter().filter(|&&e| e <= threshold).count();
                    cell.success_rate = cell.successes as f64 / cell.trials as f64;
                    cell.mean_error = errs.iter().sum::<f64>() / errs.len() as f64;
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect()
}

fn clone_result(r: &Result<f64>) -> Result<f64> {
    match r {
        Ok(v) => Ok(*v),
        Err(e) => Err(HarnessError::config(e.to_string())),
    }
}
