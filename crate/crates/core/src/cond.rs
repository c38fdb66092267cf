//! Conditional (heralded) maps: photon subtraction and addition in their
//! physical realizations, quantum scissors, homodyne conditioning.
//!
//! Every map is a set of Kraus operators applied to the input; the
//! returned probability is the weight Σ Tr(KρK†) before normalization.
//! For `subtract_ideal`, `add_ideal` and the Jaynes–Cummings maps this is a
//! relative weight (constant prefactors are dropped); for beam-splitter,
//! parametric and homodyne heralds it is the probability of the herald.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{Error, Result};
use crate::fock::{ConditionResult, DensityMatrix, FockVector, Mode, State, StateRef, StateView};
use crate::linalg::{c, CMat, CVec, C64, ZERO};
use crate::ops::{self, OperatorMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    IdealFock,
    OnOff,
    Inefficient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub kind: DetectorKind,
    /// Amplitude transmissivity of the loss splitter in front of an ideal
    /// single-photon detector; only read by `Inefficient`.
    pub efficiency: f64,
}

impl DetectorModel {
    pub fn ideal() -> Self {
        Self { kind: DetectorKind::IdealFock, efficiency: 1.0 }
    }

    pub fn on_off() -> Self {
        Self { kind: DetectorKind::OnOff, efficiency: 1.0 }
    }

    pub fn inefficient(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("detector efficiency {eta} not in (0, 1]")));
        }
        Ok(Self { kind: DetectorKind::Inefficient, efficiency: eta })
    }
}

/// Σ_k K_k ρ K_k†, kept pure when there is a single Kraus operator and a pure input.
fn apply_kraus<S: StateRef + ?Sized>(state: &S, ks: &[CMat]) -> Result<State> {
    let d = state.dims().single()?;
    for k in ks {
        if k.ncols() != d {
            return Err(Error::DimensionMismatch { expected: k.ncols(), got: d });
        }
    }
    Ok(match (state.view(), ks) {
        (StateView::Pure(v), [k]) => State::Pure(FockVector::new(k * &v.amps)),
        _ => {
            let r = state.to_density().mat;
            let n = ks.first().map_or(d, |k| k.nrows());
            let mut out = CMat::zeros(n, n);
            for k in ks {
                out += k * &r * k.adjoint();
            }
            State::Mixed(DensityMatrix::single(out))
        }
    })
}

fn finish(unnorm: State) -> Result<ConditionResult> {
    let w = unnorm.weight();
    if !(w > config::zero_threshold()) {
        return Err(Error::ZeroState { norm: w });
    }
    Ok(ConditionResult { state: unnorm.normalized()?, probability: w })
}

fn input_weight<S: StateRef + ?Sized>(state: &S) -> Result<f64> {
    let w = state.weight();
    if !(w > config::zero_threshold()) {
        return Err(Error::ZeroState { norm: w });
    }
    Ok(w)
}

fn check_top_level(what: &str, s: &State) -> Result<()> {
    let pops = s.populations();
    let w: f64 = pops.iter().sum();
    config::check_tail(what, pops[pops.len() - 1] / w)
}

/// a ρ a†.
pub fn subtract_ideal<S: StateRef + ?Sized>(rho: &S) -> Result<ConditionResult> {
    let d = rho.dims().single()?;
    let w = input_weight(rho)?;
    let mut r = finish(apply_kraus(rho, &[ops::annihilation(d).mat])?)?;
    r.probability /= w;
    Ok(r)
}

/// a† ρ a; the top level of the truncated space is checked for leakage.
pub fn add_ideal<S: StateRef + ?Sized>(rho: &S) -> Result<ConditionResult> {
    let d = rho.dims().single()?;
    let w = input_weight(rho)?;
    let out = apply_kraus(rho, &[ops::creation(d).mat])?;
    let mut r = finish(out)?;
    check_top_level("add_ideal", &r.state)?;
    r.probability /= w;
    Ok(r)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::InvalidParameter(format!("beam splitter angle {theta} not in (0, pi)")));
    }
    Ok(())
}

/// Subtraction on a beam splitter B(θ, 0) with vacuum in the ancilla port,
/// heralded by `detector` on the ancilla output. Evaluated exactly.
pub fn subtract_bs<S: StateRef + ?Sized>(rho: &S, theta: f64, detector: DetectorModel) -> Result<ConditionResult> {
    check_theta(theta)?;
    let d = rho.dims().single()?;
    let w = input_weight(rho)?;
    let ks: Vec<CMat> = match detector.kind {
        DetectorKind::IdealFock => vec![ops::bs_kraus(theta, 0.0, d, 0, 1).mat],
        DetectorKind::OnOff => (1..d).map(|k| ops::bs_kraus(theta, 0.0, d, 0, k).mat).collect(),
        DetectorKind::Inefficient => inefficient_kraus(theta, detector.efficiency, d)?,
    };
    let mut r = finish(apply_kraus(rho, &ks)?)?;
    r.probability /= w;
    Ok(r)
}

/// Kraus operators of subtraction seen through a loss splitter of amplitude
/// transmissivity η: branch m has m photons lost into the loss mode and one
/// detected, E_m = ⟨1, m|B_bv|m+1, 0⟩ · ⟨m+1|_b B_ab |0⟩_b.
pub fn inefficient_kraus(theta: f64, eta: f64, dim: usize) -> Result<Vec<CMat>> {
    DetectorModel::inefficient(eta)?;
    let theta_v = 2.0 * eta.acos();
    Ok((0..dim.saturating_sub(1))
        .map(|m| {
            let amp = ops::beamsplitter_block(theta_v, 0.0, m + 1)[(m, 0)];
            ops::bs_kraus(theta, 0.0, dim, 0, m + 1).mat * amp
        })
        .collect())
}

/// Per-branch unnormalized outputs of the inefficient-detector map, indexed by
/// the number of photons lost before the detector.
pub fn inefficient_branches<S: StateRef + ?Sized>(rho: &S, theta: f64, eta: f64) -> Result<Vec<DensityMatrix>> {
    check_theta(theta)?;
    let d = rho.dims().single()?;
    inefficient_kraus(theta, eta, d)?
        .into_iter()
        .map(|k| Ok(apply_kraus(rho, &[k])?.to_density()))
        .collect()
}

/// Addition: single photon into the ancilla port, vacuum detected at its output.
pub fn add_bs<S: StateRef + ?Sized>(rho: &S, theta: f64) -> Result<ConditionResult> {
    check_theta(theta)?;
    let d = rho.dims().single()?;
    let w = input_weight(rho)?;
    let k = ops::bs_kraus(theta, 0.0, d, 1, 0).mat;
    let mut r = finish(apply_kraus(rho, &[k])?)?;
    check_top_level("add_bs", &r.state)?;
    r.probability /= w;
    Ok(r)
}

/// M = a† (cosh ζ)^{−n̂}, the idler-heralded output of a parametric amplifier.
pub fn pdc_operator(zeta: f64, dim: usize) -> OperatorMatrix {
    let f = ops::diag_fn(dim, |n| c(zeta.cosh().powi(-(n as i32)), 0.0));
    OperatorMatrix::single(ops::creation(dim).mat * f.mat)
}

/// Addition by parametric down-conversion heralded by one idler photon.
/// The probability includes the (sinh ζ / cosh² ζ)² prefactor.
pub fn add_pdc<S: StateRef + ?Sized>(rho: &S, zeta: f64) -> Result<ConditionResult> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidParameter(format!("pdc squeezing {zeta} must be > 0")));
    }
    let d = rho.dims().single()?;
    let w = input_weight(rho)?;
    let mut r = finish(apply_kraus(rho, &[pdc_operator(zeta, d).mat])?)?;
    check_top_level("add_pdc", &r.state)?;
    let pre = zeta.sinh() / zeta.cosh().powi(2);
    r.probability *= pre * pre / w;
    Ok(r)
}

/// sin(λt√n)/√n, with the n = 0 limit λt.
fn jc_factor(lt: f64, n: usize) -> f64 {
    if n == 0 {
        lt
    } else {
        let s = (n as f64).sqrt();
        (lt * s).sin() / s
    }
}

fn check_lt(lt: f64) -> Result<()> {
    if !(lt >= 0.0) {
        return Err(Error::InvalidParameter(format!("coupling lambda*t {lt} must be >= 0")));
    }
    Ok(())
}

/// Atom in |e⟩ through the cavity, detected in |g⟩: M = sin(λt√n̂)/√n̂ · a†.
pub fn jc_add<S: StateRef + ?Sized>(rho: &S, lambda_t: f64) -> Result<ConditionResult> {
    check_lt(lambda_t)?;
    let d = rho.dims().single()?;
    let w = input_weight(rho)?;
    let m = ops::diag_fn(d, |n| c(jc_factor(lambda_t, n), 0.0)).mat * ops::creation(d).mat;
    let mut r = finish(apply_kraus(rho, &[m])?)?;
    check_top_level("jc_add", &r.state)?;
    r.probability /= w;
    Ok(r)
}

/// Atom in |g⟩, detected in |e⟩: M = a · sin(λt√n̂)/√n̂.
pub fn jc_subtract<S: StateRef + ?Sized>(rho: &S, lambda_t: f64) -> Result<ConditionResult> {
    check_lt(lambda_t)?;
    let d = rho.dims().single()?;
    let w = input_weight(rho)?;
    let m = ops::annihilation(d).mat * ops::diag_fn(d, |n| c(jc_factor(lambda_t, n), 0.0)).mat;
    let mut r = finish(apply_kraus(rho, &[m])?)?;
    r.probability /= w;
    Ok(r)
}

/// Quantum scissors: keeps (γ₀|0⟩ + γ₁|1⟩)/2 of the input, success probability
/// (|γ₀|² + |γ₁|²)/4 for a normalized input.
pub fn scissors(psi_in: &FockVector) -> Result<ConditionResult> {
    let d = psi_in.dims.single()?;
    if d < 2 {
        return Err(Error::InvalidParameter("scissors need dim >= 2".into()));
    }
    let psi = psi_in.normalized()?;
    let mut v = CVec::zeros(d);
    v[0] = psi.amps[0] * 0.5;
    v[1] = psi.amps[1] * 0.5;
    finish(State::Pure(FockVector::new(v)))
}

/// Eigenvector of q̂ = a + a† with eigenvalue x, truncated to `dim` levels and
/// renormalized. Amplitudes are the oscillator functions π^{−1/4} e^{−y²/2}
/// Hₙ(y)/√(2ⁿn!) at y = x/√2.
pub fn quadrature_eigenvector(x: f64, dim: usize) -> FockVector {
    let y = x / 2f64.sqrt();
    let mut v = vec![0.0; dim];
    v[0] = PI.powf(-0.25) * (-0.5 * y * y).exp();
    if dim > 1 {
        v[1] = 2f64.sqrt() * y * v[0];
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        v[n + 1] = (2.0 / (nf + 1.0)).sqrt() * y * v[n] - (nf / (nf + 1.0)).sqrt() * v[n - 1];
    }
    let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    FockVector::from_real(&v.iter().map(|a| a / norm).collect::<Vec<_>>())
}

/// Eigenvector of q_φ = a e^{−iφ} + a† e^{iφ}: ⟨n|q_φ = x⟩ = e^{inφ}⟨n|q = x⟩.
pub fn rotated_quadrature_eigenvector(x: f64, phi: f64, dim: usize) -> FockVector {
    let mut v = quadrature_eigenvector(x, dim);
    for n in 0..dim {
        v.amps[n] *= C64::from_polar(1.0, n as f64 * phi);
    }
    v
}

/// Project one mode of a pure two-mode state on the truncated |q(x)⟩ and
/// return the normalized state of the other mode.
pub fn homodyne_condition(state2: &FockVector, mode: Mode, x: f64) -> Result<ConditionResult> {
    let (da, db) = state2.dims.pair()?;
    let psi = state2.coeff_matrix()?;
    let out = match mode {
        Mode::B => {
            let q = quadrature_eigenvector(x, db);
            &psi * q.amps.conjugate()
        }
        Mode::A => {
            let q = quadrature_eigenvector(x, da);
            psi.transpose() * q.amps.conjugate()
        }
    };
    finish(State::Pure(FockVector::new(out)))
}

/// Heralded |2⟩: TMSV(ζ) on (a, b₁), b₁ split on B(−π/2, 0) with vacuum b₂,
/// one photon counted on each output.
pub fn herald_fock2(zeta: f64, dim: usize) -> Result<ConditionResult> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidParameter(format!("squeezing {zeta} must be > 0")));
    }
    let mut v = CVec::zeros(dim);
    let mut cn = 1.0 / zeta.cosh();
    for n in 0..dim {
        // ⟨1,1|B|n,0⟩ vanishes unless n = 2 (photon number conservation)
        if n == 2 {
            let amp = ops::beamsplitter_block(-FRAC_PI_2, 0.0, 2)[(1, 0)];
            v[n] = amp * cn;
        }
        cn *= -zeta.tanh();
    }
    if v.iter().all(|z| *z == ZERO) {
        return Err(Error::ZeroState { norm: 0.0 });
    }
    finish(State::Pure(FockVector::new(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::trace_distance;
    use crate::stats::{coherent, squeezed_vacuum, thermal};
    use approx::assert_relative_eq;

    fn fid(a: &State, b: &State) -> f64 {
        let (x, y) = (a.as_pure().unwrap(), b.as_pure().unwrap());
        x.amps.dotc(&y.amps).norm_sqr()
    }

    #[test]
    fn subtract_one_photon() {
        let r = subtract_ideal(&FockVector::fock(1, 5).to_density()).unwrap();
        let m = r.state.to_density();
        assert_relative_eq!(m.mat[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.probability, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn subtract_from_vacuum_fails() {
        assert!(matches!(subtract_ideal(&FockVector::vacuum(5)), Err(Error::ZeroState { .. })));
    }

    #[test]
    fn subtract_leaves_coherent_state_unchanged() {
        let b = coherent(c(1.0, 0.0), 40).unwrap();
        let r = subtract_ideal(&b).unwrap();
        assert!((1.0 - fid(&r.state, &State::Pure(b))).abs() < 1e-10);
    }

    #[test]
    fn subtracted_squeezed_vacuum_is_squeezed_single_photon() {
        let d = 65;
        let sq = squeezed_vacuum(0.5, d).unwrap();
        let r = subtract_ideal(&sq).unwrap();
        let s1 = ops::squeeze1(0.5, d).unwrap().column(1);
        assert!((1.0 - fid(&r.state, &State::Pure(s1))).abs() < 1e-9);
        let a = add_ideal(&sq).unwrap();
        assert!(fid(&r.state, &a.state) >= 1.0 - 1e-9);
    }

    #[test]
    fn add_to_vacuum_and_thermal() {
        let r = add_ideal(&FockVector::vacuum(4)).unwrap();
        assert_relative_eq!(r.state.populations()[1], 1.0, epsilon = 1e-15);
        let t = add_ideal(&thermal(2.0, 120).unwrap()).unwrap();
        assert_eq!(t.state.populations()[0], 0.0);
    }

    #[test]
    fn small_angle_bs_subtraction_approaches_ideal() {
        let sq = squeezed_vacuum(0.5, 65).unwrap();
        let ideal = subtract_ideal(&sq).unwrap();
        let bs = subtract_bs(&sq, 0.05, DetectorModel::ideal()).unwrap();
        assert!(fid(&ideal.state, &bs.state) >= 0.999);
        // exact herald probability of ⟨1|B|0⟩: tan²(θ/2) Tr(a t^n ρ t^n a†)
        let t = 0.025f64.cos();
        let tn = ops::diag_fn(65, |n| c(t.powi(n as i32), 0.0));
        let k = ops::annihilation(65).mat * tn.mat * c(-(0.025f64).tan(), 0.0);
        let want = (k * &sq.amps).norm_squared();
        assert_relative_eq!(bs.probability, want, epsilon = 1e-14);
    }

    #[test]
    fn on_off_matches_trace_minus_vacuum_projection() {
        let d = 10;
        let rho = thermal(0.4, d).unwrap().normalized().unwrap();
        let theta = 0.7;
        let on = subtract_bs(&rho, theta, DetectorModel::on_off()).unwrap();
        let on_un = on.state.to_density().mat * c(on.probability, 0.0);
        // dense two-mode construction with the ancilla in vacuum
        let b = ops::beamsplitter(theta, 0.0, (d, d));
        let vac = FockVector::vacuum(d).to_density();
        let joint = crate::fock::tensor(&rho, &vac).unwrap().to_density();
        let out = ops::conjugate(&b, &joint).unwrap();
        let full = crate::fock::partial_trace(&out, Mode::A).unwrap().mat;
        let p0 = CMat::from_fn(d, d, |i, k| out.mat[(i * d, k * d)]);
        assert!(crate::linalg::max_abs_diff(&on_un, &(full - p0)) < 1e-12);
    }

    #[test]
    fn inefficient_two_photon_branch_ratio() {
        let (theta, eta): (f64, f64) = (0.4, 0.5);
        let rho = coherent(c(1.0, 0.0), 40).unwrap();
        let br = inefficient_branches(&rho, theta, eta).unwrap();
        let ratio = br[1].trace() / br[0].trace();
        let a = ops::annihilation(40).mat;
        let one = (&a * &rho.amps).norm_squared();
        let two = (&a * &a * &rho.amps).norm_squared();
        let approx = (theta / 2.0).powi(2) * (1.0 - eta * eta) * two / one;
        assert!((ratio / approx - 1.0).abs() < 0.1, "ratio {ratio} approx {approx}");
        let r = subtract_bs(&rho, theta, DetectorModel::inefficient(eta).unwrap()).unwrap();
        let total: f64 = br.iter().map(|m| m.trace()).sum();
        assert_relative_eq!(r.probability, total, epsilon = 1e-14);
    }

    #[test]
    fn efficiency_is_validated() {
        assert!(DetectorModel::inefficient(0.0).is_err());
        assert!(DetectorModel::inefficient(1.2).is_err());
        assert!(subtract_bs(&FockVector::fock(1, 3), 0.0, DetectorModel::ideal()).is_err());
    }

    #[test]
    fn bs_addition_to_vacuum() {
        let r = add_bs(&FockVector::vacuum(6), 0.05).unwrap();
        assert!(r.state.populations()[1] >= 1.0 - 1e-6);
    }

    #[test]
    fn bs_addition_matches_t_weighting() {
        let d = 40;
        let theta: f64 = 0.6;
        let rho = coherent(c(1.0, 0.0), d).unwrap();
        let r = add_bs(&rho, theta).unwrap();
        let t = (theta / 2.0).cos();
        let m = ops::diag_fn(d, |n| c(t.powi(n as i32), 0.0)).mat * ops::creation(d).mat;
        let want = crate::fock::normalize(&FockVector::new(m * &rho.amps)).unwrap();
        assert!(fid(&r.state, &State::Pure(want)) >= 1.0 - 1e-12);
    }

    #[test]
    fn pdc_operator_matches_projected_two_mode_squeezer() {
        let (zeta, d) = (0.3f64, 20);
        let s2 = ops::squeeze2(zeta, (d, d)).unwrap();
        // ⟨1|_b S₂ |0⟩_b restricted to mode-a levels that stay in the space
        let proj = CMat::from_fn(d, d, |i, j| s2.mat[(i * d + 1, j * d)]);
        let m = pdc_operator(zeta, d).mat * c(-zeta.sinh() / zeta.cosh().powi(2), 0.0);
        for j in 0..d - 1 {
            for i in 0..d {
                assert!((proj[(i, j)] - m[(i, j)]).norm() < 1e-9, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn pdc_addition_limits() {
        let b = coherent(c(1.0, 0.0), 40).unwrap();
        let r = add_pdc(&b, 0.05).unwrap();
        let ideal = add_ideal(&b).unwrap();
        assert!(fid(&r.state, &ideal.state) >= 0.9999);
        let t = add_pdc(&thermal(1.0, 60).unwrap(), 0.05).unwrap();
        assert_eq!(t.state.populations()[0], 0.0);
    }

    #[test]
    fn jc_maps() {
        let r = jc_add(&FockVector::vacuum(5), 0.05).unwrap();
        assert!(r.state.populations()[1] >= 1.0 - 1e-6);
        let sq = squeezed_vacuum(0.4, 65).unwrap();
        let a = jc_subtract(&sq, 0.05).unwrap();
        let b = subtract_ideal(&sq).unwrap();
        assert!(fid(&a.state, &b.state) >= 0.999);
        assert!(matches!(jc_add(&FockVector::vacuum(5), PI), Err(Error::ZeroState { .. })));
        assert_relative_eq!(jc_factor(0.3, 0), 0.3);
    }

    #[test]
    fn scissors_examples() {
        let r = scissors(&FockVector::vacuum(4)).unwrap();
        assert_relative_eq!(r.probability, 0.25, epsilon = 1e-15);
        assert_relative_eq!(r.state.populations()[0], 1.0, epsilon = 1e-15);
        let b = coherent(c(1.0, 0.0), 40).unwrap();
        let r = scissors(&b).unwrap();
        let v = r.state.as_pure().unwrap();
        assert_relative_eq!((v.amps[1] / v.amps[0]).re, 1.0, epsilon = 1e-12);
        assert!(matches!(scissors(&FockVector::fock(2, 4)), Err(Error::ZeroState { .. })));
    }

    #[test]
    fn quadrature_eigenvector_properties() {
        let q0 = quadrature_eigenvector(0.0, 40);
        for n in (1..40).step_by(2) {
            assert_eq!(q0.amps[n].norm(), 0.0);
        }
        // q̂|q(x)⟩ ≈ x|q(x)⟩ away from the truncation edge
        let x = 0.8;
        let v = quadrature_eigenvector(x, 200);
        let (q, _) = ops::quadratures(200);
        let qv = &q.mat * &v.amps;
        for n in 0..40 {
            assert!((qv[n] - v.amps[n] * x).norm() < 1e-10);
        }
    }

    #[test]
    fn homodyne_parity_selection() {
        let d = 6;
        let b = ops::beamsplitter(FRAC_PI_2, 0.0, (d, d));
        let input = FockVector::fock2(2, 0, d, d);
        let out = ops::apply(&b, &input).unwrap();
        let r = homodyne_condition(out.as_pure().unwrap(), Mode::B, 0.0).unwrap();
        let p = r.state.populations();
        assert!(p[1] < 1e-20 && p[3] < 1e-20);
        assert!(p[0] > 0.1 && p[2] > 0.1);
        let input = FockVector::fock2(1, 0, d, d);
        let out = ops::apply(&b, &input).unwrap();
        let r = homodyne_condition(out.as_pure().unwrap(), Mode::B, 0.0).unwrap();
        assert_relative_eq!(r.state.populations()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn heralded_two_photon_state() {
        let r = herald_fock2(0.3, 10).unwrap();
        assert!(r.state.populations()[2] >= 1.0 - 1e-9);
        let p = |z: f64| herald_fock2(z, 10).unwrap().probability;
        let ratio = p(0.01) / p(0.02);
        let want = (0.01f64.tanh() / 0.02f64.tanh()).powi(4);
        assert!((ratio / want - 1.0).abs() < 0.05);
        // projecting b₁ on (|2,0⟩ + |0,2⟩)/√2 with b₂ in vacuum picks ⟨2| with weight 1/2
        let zeta: f64 = 0.3;
        let c2 = zeta.tanh().powi(2) / zeta.cosh();
        assert_relative_eq!(p(zeta), c2 * c2 / 2.0, epsilon = 1e-14);
    }
    #[test]
    fn on_off_small_angle_close_to_ideal_fock() {
        let sq = squeezed_vacuum(0.5, 65).unwrap();
        let a = subtract_bs(&sq, 0.05, DetectorModel::on_off()).unwrap();
        let b = subtract_bs(&sq, 0.05, DetectorModel::ideal()).unwrap();
        assert!(trace_distance(&a.state, &b.state).unwrap() <= 1e-3);
    }

    #[test]
    fn bs_maps_converge_monotonically() {
        let sq = squeezed_vacuum(0.5, 65).unwrap();
        let b = coherent(c(1.0, 0.0), 40).unwrap();
        let sub_ideal = subtract_ideal(&sq).unwrap().state;
        let add_id = add_ideal(&b).unwrap().state;
        let mut last = (0.0, 0.0);
        for theta in [0.4, 0.2, 0.1, 0.05] {
            let fs = fid(&subtract_bs(&sq, theta, DetectorModel::ideal()).unwrap().state, &sub_ideal);
            let fa = fid(&add_bs(&b, theta).unwrap().state, &add_id);
            assert!(fs > last.0 && fa > last.1, "theta {theta}: {fs} {fa}");
            last = (fs, fa);
        }
        assert!(last.1 >= 0.999);
    }

    #[test]
    fn subtraction_and_addition_do_not_commute() {
        let b = coherent(c(1.0, 0.0), 40).unwrap();
        let sa = subtract_ideal(&add_ideal(&b).unwrap().state).unwrap().state;
        let as_ = add_ideal(&subtract_ideal(&b).unwrap().state).unwrap().state;
        assert!(trace_distance(&sa, &as_).unwrap() > 0.01);
    }

    #[test]
    fn outputs_are_valid_density_matrices() {
        let rho = thermal(0.7, 30).unwrap();
        let outs = [
            subtract_ideal(&rho).unwrap(),
            add_ideal(&rho).unwrap(),
            subtract_bs(&rho, 0.5, DetectorModel::on_off()).unwrap(),
            subtract_bs(&rho, 0.5, DetectorModel::inefficient(0.6).unwrap()).unwrap(),
            add_pdc(&rho, 0.2).unwrap(),
            jc_subtract(&rho, 0.7).unwrap(),
        ];
        for r in outs {
            r.state.to_density().check_invariants().unwrap();
        }
    }
}
