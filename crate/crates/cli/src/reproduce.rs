//! Figure data and headline numbers.

use clap::ValueEnum;
use fockbench::cond::subtract_ideal;
use fockbench::config::{DEFAULT_SINGLE_DIM, DEFAULT_TWO_MODE_DIM};
use fockbench::engineer::{kitten_fidelity, kitten_scan};
use fockbench::entangle::{entanglement_report, subtracted_states, von_neumann, Subtraction};
use fockbench::fock::partial_trace;
use fockbench::format::sig17;
use fockbench::linalg::c;
use fockbench::phasespace::{p_analytic_thermal, PhaseGrid, ThermalSequence, Window};
use fockbench::stats::{cat, pnd, squeezed_vacuum, tmsv};
use fockbench::Mode;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Even-cat photon statistics at β = 2 and 3.
    Fig3,
    /// Squeezed vacuum (ζ = 1) and its one- (ζ = 0.5) and two-photon (ζ = 1) subtracted versions.
    Fig4,
    /// Mode-a photon statistics of the two-mode squeezed vacuum (ζ = 1) before and after subtracting from both modes.
    Fig8,
    /// P functions of a thermal state (n̄ = 0.5) after subtract-add and add-subtract.
    Fig9,
    /// Entropies and kitten fidelity as JSON.
    TableNumbers,
}

pub fn thermal_p_window() -> Window {
    Window::square(2.0, 201).expect("valid window")
}

fn columns(header: &str, cols: &[Vec<f64>]) -> String {
    let mut s = format!("n,{header}\n");
    let rows = cols.iter().map(Vec::len).max().unwrap_or(0);
    for n in 0..rows {
        s.push_str(&n.to_string());
        for col in cols {
            s.push(',');
            s.push_str(&sig17(col.get(n).copied().unwrap_or(0.0)));
        }
        s.push('\n');
    }
    s
}

pub fn run(target: Target, dim: Option<usize>, window: Option<Window>) -> Result<String, CliError> {
    let d1 = dim.unwrap_or(DEFAULT_SINGLE_DIM);
    let d2 = dim.unwrap_or(DEFAULT_TWO_MODE_DIM);
    Ok(match target {
        Target::Fig3 => {
            let a = pnd(&cat(c(2.0, 0.0), 0.0, d1)?)?.probs;
            let b = pnd(&cat(c(3.0, 0.0), 0.0, d1)?)?.probs;
            columns("beta_2,beta_3", &[a, b])
        }
        Target::Fig4 => {
            let sq1 = squeezed_vacuum(1.0, d1)?;
            let once = subtract_ideal(&squeezed_vacuum(0.5, d1)?)?.state;
            let twice = subtract_ideal(&subtract_ideal(&sq1)?.state)?.state;
            columns(
                "squeezed_zeta_1,subtracted_once_zeta_0.5,subtracted_twice_zeta_1",
                &[pnd(&sq1)?.probs, pnd(&once)?.probs, pnd(&twice)?.probs],
            )
        }
        Target::Fig8 => {
            let before = partial_trace(&tmsv(1.0, (d2, d2))?, Mode::A)?;
            let after = partial_trace(&subtracted_states(1.0, Subtraction::BothModes, (d2, d2))?, Mode::A)?;
            columns("before,after", &[pnd(&before)?.probs, pnd(&after)?.probs])
        }
        Target::Fig9 => {
            let w = window.unwrap_or_else(thermal_p_window);
            let p = |seq| PhaseGrid::evaluate(w, 1.0, |a| p_analytic_thermal(seq, 0.5, a));
            let (pa, ps) = (p(ThermalSequence::SubtractThenAdd)?, p(ThermalSequence::AddThenSubtract)?);
            let mut s = String::from("alpha_re,alpha_im,p_as,p_sa\n");
            for i in 0..w.nx {
                for j in 0..w.ny {
                    let a = w.point(i, j);
                    s.push_str(&format!("{},{},{},{}\n", sig17(a.re), sig17(a.im), sig17(pa.values[i][j]), sig17(ps.values[i][j])));
                }
            }
            s
        }
        Target::TableNumbers => {
            let dims = (d2, d2);
            let sub = subtracted_states(1.0, Subtraction::BothModes, dims)?;
            let peak = pnd(&partial_trace(&sub, Mode::A)?)?.peak();
            let betas: Vec<f64> = (0..=125).map(|k| 0.5 + 0.02 * k as f64).collect();
            let scan = kitten_scan(&[0.43], &betas, d1)?;
            let best = scan.iter().max_by(|a, b| a.fidelity.total_cmp(&b.fidelity)).expect("non-empty scan");
            let v = serde_json::json!({
                "dim_two_mode": d2,
                "dim_single_mode": d1,
                "tmsv_zeta_1": {
                    "von_neumann": von_neumann(&tmsv(1.0, dims)?)?,
                },
                "both_modes_subtracted_zeta_1": {
                    "von_neumann": von_neumann(&sub)?,
                    "marginal_peak_n": peak,
                },
                "one_mode_subtracted_zeta_1": entanglement_report(&subtracted_states(1.0, Subtraction::OneMode, dims)?)?,
                "kitten": {
                    "zeta": 0.43,
                    "beta": 1.16,
                    "fidelity": kitten_fidelity(0.43, 1.16, d1)?,
                    "scan_best_beta": best.beta,
                    "scan_best_fidelity": best.fidelity,
                },
            });
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
    })
}
