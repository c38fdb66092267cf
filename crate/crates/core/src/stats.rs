//! Closed-form state builders and photon-number statistics.
//!
//! The builders evaluate Fock expansions directly and never touch the
//! exponentials in `ops`; tests use each side as the other's oracle.

use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Dims, FockVector, StateRef};
use crate::format::sig17;
use crate::linalg::{c, CVec, C64};

/// Coherent state e^{−|β|²/2} Σ βⁿ/√n! |n⟩.
pub fn coherent(beta: C64, dim: usize) -> Result<FockVector> {
    let mut v = CVec::zeros(dim);
    let mut amp = c((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            amp = amp * beta / (n as f64).sqrt();
        }
        v[n] = amp;
    }
    let s = FockVector::new(v);
    config::check_tail("coherent", s.tail_mass())?;
    Ok(s)
}

/// Thermal state with mean photon number n̄: ρ(n,n) = n̄ⁿ/(1+n̄)ⁿ⁺¹.
pub fn thermal(n_bar: f64, dim: usize) -> Result<DensityMatrix> {
    if !(n_bar >= 0.0) {
        return Err(Error::InvalidParameter(format!("thermal n_bar {n_bar} must be >= 0")));
    }
    let x = n_bar / (1.0 + n_bar);
    let mut p = Vec::with_capacity(dim);
    let mut pn = 1.0 / (1.0 + n_bar);
    for _ in 0..dim {
        p.push(pn);
        pn *= x;
    }
    let r = DensityMatrix::diagonal(&p);
    config::check_tail("thermal", r.tail_mass())?;
    Ok(r)
}

/// S₁(ζ)|0⟩ = √sech ζ Σ √((2n)!)/n! (−tanh ζ / 2)ⁿ |2n⟩.
pub fn squeezed_vacuum(zeta: f64, dim: usize) -> Result<FockVector> {
    let mut v = CVec::zeros(dim);
    let x = -zeta.tanh() / 2.0;
    let mut amp = (1.0 / zeta.cosh()).sqrt();
    let mut k = 0;
    while 2 * k < dim {
        v[2 * k] = c(amp, 0.0);
        amp *= x * (((2 * k + 1) * (2 * k + 2)) as f64).sqrt() / (k + 1) as f64;
        k += 1;
    }
    let s = FockVector::new(v);
    config::check_tail("squeezed_vacuum", s.tail_mass() + s.amps[dim.saturating_sub(2)].norm_sqr())?;
    Ok(s)
}

/// S₂(ζ)|0,0⟩ = sech ζ Σ (−tanh ζ)ⁿ |n,n⟩.
pub fn tmsv(zeta: f64, dims: (usize, usize)) -> Result<FockVector> {
    let (da, db) = dims;
    let mut v = CVec::zeros(da * db);
    let mut amp = 1.0 / zeta.cosh();
    for n in 0..da.min(db) {
        v[n * db + n] = c(amp, 0.0);
        amp *= -zeta.tanh();
    }
    let s = FockVector { dims: Dims::Two(da, db), amps: v };
    config::check_tail("tmsv", s.tail_mass())?;
    Ok(s)
}

/// (|β⟩ + e^{iφ}|−β⟩) / √(2(1 + cos φ e^{−2|β|²})).
///
/// φ = 0 gives the even cat (even photon numbers only), φ = π the odd cat.
pub fn cat(beta: C64, phi_sch: f64, dim: usize) -> Result<FockVector> {
    let cross = phi_sch.cos() * (-2.0 * beta.norm_sqr()).exp();
    let norm = 1.0 / (2.0 * (1.0 + cross)).sqrt();
    if !norm.is_finite() {
        return Err(Error::ZeroState { norm: 0.0 });
    }
    let ph = C64::from_polar(1.0, phi_sch);
    let mut v = CVec::zeros(dim);
    let mut amp = c((-0.5 * beta.norm_sqr()).exp() * norm, 0.0);
    for n in 0..dim {
        if n > 0 {
            amp = amp * beta / (n as f64).sqrt();
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        v[n] = amp * (c(1.0, 0.0) + ph * sign);
    }
    let s = FockVector::new(v);
    config::check_tail("cat", s.tail_mass())?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumberDistribution {
    pub probs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl PhotonNumberDistribution {
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn moments(&self) -> Moments {
        let mean = self.mean();
        let second: f64 = self.probs.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
        Moments { mean, variance: second - mean * mean }
    }

    /// Index of the largest probability.
    pub fn peak(&self) -> usize {
        let mut best = 0;
        for (n, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = n;
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,probability\n");
        for (n, p) in self.probs.iter().enumerate() {
            s.push_str(&format!("{n},{}\n", sig17(*p)));
        }
        s
    }
}

/// Photon-number distribution of a single-mode state, normalized by its weight.
pub fn pnd<S: StateRef + ?Sized>(state: &S) -> Result<PhotonNumberDistribution> {
    state.dims().single()?;
    let pops = state.populations();
    let total: f64 = pops.iter().sum();
    if total.abs() < config::zero_threshold() {
        return Err(Error::ZeroState { norm: total });
    }
    Ok(PhotonNumberDistribution { probs: pops.into_iter().map(|p| p / total).collect() })
}

pub fn moments<S: StateRef + ?Sized>(state: &S) -> Result<Moments> {
    Ok(pnd(state)?.moments())
}

/// Q = (Δn)² − n̄; negative means sub-Poissonian.
pub fn mandel_q<S: StateRef + ?Sized>(state: &S) -> Result<f64> {
    let m = moments(state)?;
    if m.mean < config::zero_threshold() {
        return Err(Error::ZeroMean);
    }
    Ok(m.variance - m.mean)
}
