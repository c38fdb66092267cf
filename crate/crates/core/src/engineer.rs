//! State engineering: synthesis of finite Fock superpositions by displaced
//! photon addition, subtract-and-displace, and the subtracted-squeezed-vacuum
//! and homodyne-conditioned routes to cat-like states.

use std::f64::consts::FRAC_PI_2;

use nalgebra::linalg::Schur;
use serde::{Deserialize, Serialize};

use crate::cond::{homodyne_condition, subtract_ideal};
use crate::config;
use crate::error::{Error, Result};
use crate::fock::{ConditionResult, DensityMatrix, FockVector, Mode};
use crate::linalg::{c, CMat, CVec, C64, ONE, ZERO};
use crate::ops;
use crate::phasespace::{displaced_len, displacement_block, fidelity};
use crate::stats::{cat, squeezed_vacuum};

/// Π D†(αₙ) a† D(αₙ) |0⟩ up to `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaknaPlan {
    pub alphas: Vec<C64>,
    pub scale: C64,
}

fn poly_eval(p: &[C64], z: C64) -> (C64, C64) {
    let mut v = ZERO;
    let mut dv = ZERO;
    for &a in p.iter().rev() {
        dv = dv * z + v;
        v = v * z + a;
    }
    (v, dv)
}

/// Roots of Σ pₙ zⁿ from the companion matrix, each polished by Newton steps.
pub fn poly_roots(p: &[C64]) -> Result<Vec<C64>> {
    let zeros = p.iter().take_while(|z| **z == ZERO).count();
    let q = &p[zeros..];
    let n = q.len() - 1;
    let mut roots = vec![ZERO; zeros];
    if n == 0 {
        return Ok(roots);
    }
    let lead = q[n];
    let mut comp = CMat::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = ONE;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -q[i] / lead;
    }
    let ev = Schur::try_new(comp, f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::InvalidParameter("companion eigenvalues did not converge".into()))?;
    roots.extend(ev.iter().map(|&r0| {
        let mut r = r0;
        for _ in 0..50 {
            let (v, dv) = poly_eval(q, r);
            if dv.norm() == 0.0 {
                break;
            }
            // repeated roots converge slowly; stop once a step no longer lowers the residual
            let cand = r - v / dv;
            if poly_eval(q, cand).0.norm() >= v.norm() {
                break;
            }
            r = cand;
        }
        r
    }));
    Ok(roots)
}

/// Displacements that build Σ cₙ|n⟩ from the vacuum: with
/// Σ cₙ/√n! a†ⁿ = κ Π (a† − rₙ), each factor is D†(αₙ) a† D(αₙ) for αₙ* = −rₙ.
pub fn dakna_plan(coeffs: &[C64]) -> Result<DaknaPlan> {
    if coeffs.len() < 2 {
        return Err(Error::InvalidParameter("target needs degree >= 1".into()));
    }
    let n = coeffs.len() - 1;
    let big = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(coeffs[n].norm() > 1e-12 * big) {
        return Err(Error::DegenerateLeading(coeffs[n].norm()));
    }
    let mut fact = 1.0;
    let p: Vec<C64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, z)| {
            if k > 0 {
                fact *= k as f64;
            }
            z / fact.sqrt()
        })
        .collect();
    let mut roots = poly_roots(&p)?;
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
    Ok(DaknaPlan { alphas: roots.iter().map(|r| -r.conj()).collect(), scale: p[n] })
}

/// Runs the plan with exact displacements. Each D†(α) a† D(α) step passes
/// through a padded space wide enough for the displaced state; only the
/// rectangular blocks of D(±α) that touch the `dim` kept levels are formed.
/// Normalized output.
pub fn dakna_run(plan: &DaknaPlan, dim: usize) -> Result<FockVector> {
    let mut v = FockVector::vacuum(dim).amps;
    for &a in &plan.alphas {
        let wd = displaced_len(dim, a.norm());
        let u = displacement_block(a, wd, dim) * &v;
        let mut up = CVec::zeros(wd + 1);
        for n in 0..wd {
            up[n + 1] = u[n] * ((n + 1) as f64).sqrt();
        }
        let w = displacement_block(-a, dim, wd + 1) * &up;
        let total = up.norm_squared();
        config::check_tail("dakna_run", (total - w.norm_squared()).max(0.0) / total)?;
        v = w;
    }
    crate::fock::normalize(&FockVector::new(v * plan.scale))
}

/// Displacement realized by mixing with a strong coherent state on a beam
/// splitter of amplitude transmissivity t and tracing out the ancilla.
pub struct BsDisplacer {
    theta: f64,
    r: f64,
    dim: usize,
    anc_dim: usize,
    blocks: Vec<CMat>,
}

impl BsDisplacer {
    /// `max_alpha` bounds the displacements to be applied.
    pub fn new(t: f64, dim: usize, max_alpha: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!("transmissivity {t} not in (0, 1)")));
        }
        let r = (1.0 - t * t).sqrt();
        let g = max_alpha / r;
        let anc_dim = (g * g + 10.0 * g).ceil() as usize + 20;
        if anc_dim > 4096 {
            return Err(Error::InvalidParameter(format!("coherent ancilla needs {anc_dim} levels")));
        }
        let theta = 2.0 * t.acos();
        let blocks = (0..dim + anc_dim - 1).map(|n| ops::beamsplitter_block(theta, 0.0, n)).collect();
        Ok(Self { theta, r, dim, anc_dim, blocks })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Tr_b[B (ρ ⊗ |α/r⟩⟨α/r|) B†], renormalized on the truncated space.
    pub fn apply(&self, rho: &DensityMatrix, alpha: C64) -> Result<DensityMatrix> {
        let (d, m) = (self.dim, self.anc_dim);
        if rho.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rho.dim() });
        }
        let g = alpha / self.r;
        let mut gam = vec![ZERO; m];
        gam[0] = c((-0.5 * g.norm_sqr()).exp(), 0.0);
        for k in 1..m {
            gam[k] = gam[k - 1] * g / (k as f64).sqrt();
        }
        let mut out = CMat::zeros(d, d);
        for k in 0..d + m - 1 {
            // ⟨k|_b B |γ⟩_b on mode a: input |j, k+i−j⟩ feeds output |i, k⟩
            let mk = CMat::from_fn(d, d, |i, j| {
                let Some(mb) = (i + k).checked_sub(j) else { return ZERO };
                if mb >= m {
                    return ZERO;
                }
                gam[mb] * self.blocks[j + mb][(k, mb)]
            });
            if mk.iter().all(|z| *z == ZERO) {
                continue;
            }
            out += &mk * &rho.mat * mk.adjoint();
        }
        DensityMatrix::single(out).normalized()
    }
}

/// The plan with every displacement replaced by its beam-splitter version.
pub fn dakna_run_bs(plan: &DaknaPlan, dim: usize, t: f64) -> Result<DensityMatrix> {
    let amax = plan.alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let bs = BsDisplacer::new(t, dim, amax)?;
    let adag = ops::creation(dim).mat;
    let mut rho = FockVector::vacuum(dim).to_density();
    for &a in &plan.alphas {
        rho = bs.apply(&rho, a)?;
        config::check_tail("dakna_run_bs", rho.populations()[dim - 1])?;
        rho = DensityMatrix::single(&adag * &rho.mat * adag.adjoint()).normalized()?;
        rho = bs.apply(&rho, -a)?;
    }
    Ok(rho)
}

/// S₁†(ζ₂) D†(α₂) a D(α₁) S₁(ζ₁)|0⟩, normalized. Equal parameters give
/// ∝ −sinh ζ |1⟩ + α |0⟩.
pub fn fiurasek_step(zeta1: f64, alpha1: C64, zeta2: f64, alpha2: C64, dim: usize) -> Result<FockVector> {
    let mut v = ops::squeeze1(zeta1, dim)?.column(0).amps;
    v = ops::displacement(alpha1, dim)?.mat * v;
    v = ops::annihilation(dim).mat * v;
    v = ops::displacement(-alpha2, dim)?.mat * v;
    v = ops::squeeze1(-zeta2, dim)?.mat * v;
    let n = v.norm_squared();
    if !(n > config::zero_threshold()) {
        return Err(Error::ZeroState { norm: n });
    }
    crate::fock::normalize(&FockVector::new(v))
}

/// Cat amplitude along the long axis of S₁(ζ)|0⟩: imaginary for ζ > 0.
fn kitten_axis(zeta: f64, beta: f64) -> C64 {
    if zeta >= 0.0 {
        c(0.0, beta)
    } else {
        c(beta, 0.0)
    }
}

/// Fidelity of the once-subtracted squeezed vacuum with the odd cat of
/// amplitude β laid along the anti-squeezed axis.
pub fn kitten_fidelity(zeta: f64, beta: f64, dim: usize) -> Result<f64> {
    Ok(kitten_fidelities(zeta, beta, dim)?.odd)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KittenFidelities {
    pub odd: f64,
    pub even: f64,
}

/// Both cat parities; the even one vanishes by parity but is reported.
pub fn kitten_fidelities(zeta: f64, beta: f64, dim: usize) -> Result<KittenFidelities> {
    if !(zeta != 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter("kitten needs zeta != 0 and beta > 0".into()));
    }
    let sub = subtract_ideal(&squeezed_vacuum(zeta, dim)?)?.state;
    let axis = kitten_axis(zeta, beta);
    Ok(KittenFidelities {
        odd: fidelity(&sub, &cat(axis, std::f64::consts::PI, dim)?)?,
        even: fidelity(&sub, &cat(axis, 0.0, dim)?)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KittenPoint {
    pub zeta: f64,
    pub beta: f64,
    pub fidelity: f64,
}

pub fn kitten_scan(zetas: &[f64], betas: &[f64], dim: usize) -> Result<Vec<KittenPoint>> {
    let mut out = Vec::with_capacity(zetas.len() * betas.len());
    for &zeta in zetas {
        let sub = subtract_ideal(&squeezed_vacuum(zeta, dim)?)?.state;
        for &beta in betas {
            let f = fidelity(&sub, &cat(kitten_axis(zeta, beta), std::f64::consts::PI, dim)?)?;
            out.push(KittenPoint { zeta, beta, fidelity: f });
        }
    }
    Ok(out)
}

/// |n, 0⟩ through a 50:50 beam splitter, mode b conditioned on q = 0.
pub fn squeezed_cat_from_fock(n: usize, dim: usize) -> Result<ConditionResult> {
    if n >= dim {
        return Err(Error::DimensionMismatch { expected: n + 1, got: dim });
    }
    let blk = ops::beamsplitter_block(FRAC_PI_2, 0.0, n);
    let db = n + 1;
    let mut amps = CVec::zeros(dim * db);
    for k in 0..=n {
        amps[(n - k) * db + k] = blk[(k, 0)];
    }
    homodyne_condition(&FockVector::two_mode(dim, db, amps)?, Mode::B, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Real,
    Imag,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezedCatFit {
    pub beta: f64,
    pub zeta: f64,
    pub axis: Axis,
    pub fidelity: f64,
}

/// Best S₁(ζ)·cat(β, parity) over β ∈ [0.5, 3] step 0.05, ζ ∈ [−0.6, 0.6]
/// step 0.02, with the cat on either axis.
pub fn best_fit_squeezed_cat(state: &FockVector, even: bool) -> Result<SqueezedCatFit> {
    let dim = state.dims.single()?;
    let phi = if even { 0.0 } else { std::f64::consts::PI };
    let betas: Vec<f64> = (0..=50).map(|k| 0.5 + 0.05 * k as f64).collect();
    let mut cats = Vec::new();
    for axis in [Axis::Real, Axis::Imag] {
        for &b in &betas {
            let amp = match axis {
                Axis::Real => c(b, 0.0),
                Axis::Imag => c(0.0, b),
            };
            cats.push((axis, b, cat(amp, phi, dim)?.amps));
        }
    }
    let psi = crate::fock::normalize(state)?.amps;
    let mut best = SqueezedCatFit { beta: 0.0, zeta: 0.0, axis: Axis::Real, fidelity: -1.0 };
    for k in -30..=30 {
        let zeta = 0.02 * k as f64;
        // ⟨S(ζ) cat|ψ⟩ = ⟨cat|S(−ζ)ψ⟩
        let back = ops::squeeze1(-zeta, dim)?.mat * &psi;
        for (axis, beta, cv) in &cats {
            let f = cv.dotc(&back).norm_sqr() / cv.norm_squared();
            if f > best.fidelity {
                best = SqueezedCatFit { beta: *beta, zeta, axis: *axis, fidelity: f };
            }
        }
    }
    Ok(best)
}
