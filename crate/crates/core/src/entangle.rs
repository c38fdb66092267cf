//! Entanglement of two-mode states and the photon-subtracted two-mode
//! squeezed vacua. Entropies are in bits.

use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{Error, Result};
use crate::fock::{partial_trace, partial_transpose, FockVector, Mode, StateRef, StateView};
use crate::linalg::{self, c, CMat};
use crate::ops;
use crate::stats;

/// Purity below which a state counts as mixed for the entropy of entanglement.
const PURE_TOL: f64 = 1e-8;
/// Marginal eigenvalues below this contribute nothing to the entropy.
const EIG_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    /// Entropy of entanglement; absent for mixed input.
    pub von_neumann: Option<f64>,
    pub linear_entropy_m: f64,
    pub log_negativity: f64,
    pub min_pt_eigenvalue: f64,
    pub purity: f64,
}

fn marginal_a<S: StateRef + ?Sized>(state: &S) -> Result<crate::fock::DensityMatrix> {
    let w = state.weight();
    if !(w > config::zero_threshold()) {
        return Err(Error::ZeroState { norm: w });
    }
    partial_trace(state, Mode::A)?.normalized()
}

fn purity<S: StateRef + ?Sized>(state: &S) -> Result<f64> {
    Ok(match state.view() {
        StateView::Pure(_) => 1.0,
        StateView::Mixed(r) => r.normalized()?.purity(),
    })
}

/// −Tr ρ_a log₂ ρ_a of a pure two-mode state.
pub fn von_neumann<S: StateRef + ?Sized>(state2: &S) -> Result<f64> {
    state2.dims().pair()?;
    let p = purity(state2)?;
    if p < 1.0 - PURE_TOL {
        return Err(Error::NotPure { purity: p });
    }
    let ev = marginal_a(state2)?.eigenvalues();
    Ok(ev.iter().filter(|l| **l > EIG_FLOOR).map(|l| -l * l.log2()).sum())
}

/// 1 − Tr ρ_a².
pub fn linear_entropy_m<S: StateRef + ?Sized>(rho2: &S) -> Result<f64> {
    rho2.dims().pair()?;
    Ok(1.0 - marginal_a(rho2)?.purity())
}

/// log₂‖ρ^{T_b}‖₁ and the smallest eigenvalue of ρ^{T_b}.
pub fn log_negativity<S: StateRef + ?Sized>(rho2: &S) -> Result<(f64, f64)> {
    rho2.dims().pair()?;
    let w = rho2.weight();
    if !(w > config::zero_threshold()) {
        return Err(Error::ZeroState { norm: w });
    }
    match rho2.view() {
        StateView::Pure(v) => {
            // PT spectrum of a pure state: s_i² and ±s_i s_j (i < j) in the Schmidt coefficients
            let mut s: Vec<f64> = v.coeff_matrix()?.singular_values().iter().map(|x| x / w.sqrt()).collect();
            s.sort_by(|a, b| b.total_cmp(a));
            let sum: f64 = s.iter().sum();
            let min = if s.len() > 1 && s[1] > 0.0 { -s[0] * s[1] } else { 0.0 };
            Ok(((sum * sum).log2().max(0.0), min))
        }
        StateView::Mixed(_) => {
            let pt = partial_transpose(rho2, Mode::B)? / c(w, 0.0);
            let ev = linalg::hermitian_eigenvalues_blocked(&pt);
            let norm1: f64 = ev.iter().map(|x| x.abs()).sum();
            Ok((norm1.log2().max(0.0), ev.first().copied().unwrap_or(0.0)))
        }
    }
}

pub fn entanglement_report<S: StateRef + ?Sized>(state2: &S) -> Result<EntanglementReport> {
    let purity = purity(state2)?;
    let von_neumann = match von_neumann(state2) {
        Ok(v) => Some(v),
        Err(Error::NotPure { .. }) => None,
        Err(e) => return Err(e),
    };
    let (log_negativity, min_pt_eigenvalue) = log_negativity(state2)?;
    Ok(EntanglementReport {
        von_neumann,
        linear_entropy_m: linear_entropy_m(state2)?,
        log_negativity,
        min_pt_eigenvalue,
        purity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtraction {
    /// a b |S₂⟩
    BothModes,
    /// a |S₂⟩
    OneMode,
    /// (a + b)/√2 |S₂⟩, path information erased
    Delocalized,
}

/// Photon-subtracted two-mode squeezed vacuum, normalized. Built one level
/// larger and cropped, so every kept coefficient is exact.
pub fn subtracted_states(zeta: f64, which: Subtraction, dims: (usize, usize)) -> Result<FockVector> {
    let psi = stats::tmsv(zeta, (dims.0 + 1, dims.1 + 1))?.coeff_matrix()?;
    let (a, b) = (ops::annihilation(dims.0 + 1).mat, ops::annihilation(dims.1 + 1).mat);
    let out: CMat = match which {
        Subtraction::BothModes => &a * &psi * b.transpose(),
        Subtraction::OneMode => &a * &psi,
        Subtraction::Delocalized => (&a * &psi + &psi * b.transpose()) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    };
    crate::fock::normalize(&FockVector::from_coeff_matrix(&out.view((0, 0), dims).into_owned()))
}
