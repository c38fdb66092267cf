//! Characteristic functions and s-parameterized quasiprobabilities.
//!
//! Phase-space points are α = α_r + iα_i with q = 2α_r, p = 2α_i. The
//! Wigner function of the vacuum is (2/π)e^{−2|α|²} and every
//! quasiprobability integrates to one over d²α = dα_r dα_i.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockVector, StateRef, StateView};
use crate::format::sig17;
use crate::linalg::{c, CMat, CVec, C64, ZERO};
use crate::ops;

/// Largest s accepted by the numerical series.
pub const S_MAX_NUMERIC: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SParameter(f64);

impl SParameter {
    pub const Q: SParameter = SParameter(-1.0);
    pub const WIGNER: SParameter = SParameter(0.0);

    pub fn new(s: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("s = {s} outside [-1, 1]")));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SParameter {
    type Error = Error;
    fn try_from(s: f64) -> Result<Self> {
        Self::new(s)
    }
}

impl From<SParameter> for f64 {
    fn from(s: SParameter) -> f64 {
        s.0
    }
}

/// C(ξ, s) = Tr[ρ D(ξ)] e^{s|ξ|²/2}.
pub fn char_fn<S: StateRef + ?Sized>(rho: &S, xi: C64, s: SParameter) -> Result<C64> {
    let d = rho.dims().single()?;
    let w = nonzero_weight(rho)?;
    let dm = ops::displacement(xi, d)?;
    let tr = ops::expectation(&dm, rho)? / w;
    let v = tr * (0.5 * s.0 * xi.norm_sqr()).exp();
    if !(v.norm() <= 1e12) {
        return Err(Error::DivergentSeries(format!("|C(xi, s)| = {:e}", v.norm())));
    }
    Ok(v)
}

fn nonzero_weight<S: StateRef + ?Sized>(rho: &S) -> Result<f64> {
    let w = rho.weight();
    if !(w > config::zero_threshold()) {
        return Err(Error::ZeroState { norm: w });
    }
    Ok(w)
}

/// Coherent-state amplitudes e^{−|γ|²/2} γⁿ/√n! on `len` levels, no tail check.
fn coherent_amps(gamma: C64, len: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(len);
    let mut a = c((-0.5 * gamma.norm_sqr()).exp(), 0.0);
    for n in 0..len {
        v.push(a);
        a *= gamma / ((n + 1) as f64).sqrt();
    }
    v
}

/// ⟨m|D(β)|n⟩ for m < rows, n < cols. Along each diagonal n − m = ±a the
/// elements are normalized Laguerre functions
/// g_k = √(k!/(k+a)!) x^{a/2} e^{−x/2} L_k^{(a)}(x), x = |β|², times (−β*/|β|)^a
/// above the diagonal and (β/|β|)^a below it; g_k is run forward in k, which is
/// stable, and carried with a separate log scale so that g_0 may underflow.
pub(crate) fn displacement_block(beta: C64, rows: usize, cols: usize) -> CMat {
    let x = beta.norm_sqr();
    let ph = if x > 0.0 { beta / beta.norm() } else { c(1.0, 0.0) };
    let (up, down) = (-ph.conj(), ph);
    let mut out = CMat::zeros(rows, cols);
    let mut ln_fact = 0.0;
    let (mut pu, mut pd) = (c(1.0, 0.0), c(1.0, 0.0));
    for a in 0..rows.max(cols) {
        if a > 0 {
            ln_fact += (a as f64).ln();
            pu *= up;
            pd *= down;
        }
        let kmax = if a < cols { rows.min(cols - a) } else { 0 }.max(if a < rows { cols.min(rows - a) } else { 0 });
        if kmax == 0 {
            continue;
        }
        let af = a as f64;
        let mut scale = if a == 0 {
            -0.5 * x
        } else if x > 0.0 {
            0.5 * af * x.ln() - 0.5 * x - 0.5 * ln_fact
        } else {
            f64::NEG_INFINITY
        };
        if scale == f64::NEG_INFINITY {
            continue;
        }
        let (mut gprev, mut g) = (0.0, 1.0);
        let mut es = scale.exp();
        for k in 0..kmax {
            let v = g * es;
            if k < rows && k + a < cols {
                out[(k, k + a)] = pu * v;
            }
            if a > 0 && k + a < rows && k < cols {
                out[(k + a, k)] = pd * v;
            }
            let kf = k as f64;
            let gn = ((2.0 * kf + 1.0 + af - x) * g - (kf * (kf + af)).sqrt() * gprev) / ((kf + 1.0) * (kf + 1.0 + af)).sqrt();
            gprev = g;
            g = gn;
            if g.abs() > 1e100 {
                g *= 1e-100;
                gprev *= 1e-100;
                scale += 100.0 * std::f64::consts::LN_10;
                es = scale.exp();
            }
        }
    }
    out
}

/// D(γ)|n⟩ for n < d lives below (|γ| + √d)² plus a few widths of the same size.
pub(crate) fn displaced_len(d: usize, r: f64) -> usize {
    let e = r + (d as f64).sqrt();
    (e * e + 8.0 * e).ceil() as usize + 40
}

/// A single-mode state prepared for repeated phase-space evaluation.
/// Levels whose population is negligible are dropped from the top.
#[derive(Debug)]
pub struct Prepared {
    dim: usize,
    /// Normalized amplitudes, or None for a mixed state.
    psi: Option<Vec<C64>>,
    /// Normalized density matrix with row n scaled by (−1)ⁿ, for the Wigner sum.
    rho_par: Option<CMat>,
    rho: Option<CMat>,
}

impl Prepared {
    pub fn new<S: StateRef + ?Sized>(rho: &S) -> Result<Self> {
        let full = rho.dims().single()?;
        let w = nonzero_weight(rho)?;
        let pops = rho.populations();
        let dim = pops.iter().rposition(|p| *p > 1e-30 * w).map_or(1, |k| k + 1).min(full);
        let sign = |n: usize| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let (psi, rho_par, rho) = match rho.view() {
            StateView::Pure(v) => {
                let a = 1.0 / w.sqrt();
                (Some(v.amps.iter().take(dim).map(|z| z * a).collect()), None, None)
            }
            StateView::Mixed(r) => {
                let m = r.mat.view((0, 0), (dim, dim)).into_owned() / c(w, 0.0);
                let par = CMat::from_fn(dim, dim, |i, j| m[(i, j)] * sign(i));
                (None, Some(par), Some(m))
            }
        };
        Ok(Self { dim, psi, rho_par, rho })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// ⟨k|D†(α)ρD(α)|k⟩ for k < len.
    fn displaced_populations(&self, alpha: C64, len: usize) -> Vec<f64> {
        let f = displacement_block(-alpha, len, self.dim);
        match (&self.psi, &self.rho) {
            (Some(v), _) => (&f * CVec::from_column_slice(v)).iter().map(|z| z.norm_sqr()).collect(),
            (None, Some(r)) => {
                let g = &f * r;
                (0..len).map(|k| g.row(k).iter().zip(f.row(k).iter()).map(|(a, b)| (a * b.conj()).re).sum()).collect()
            }
            (None, None) => unreachable!("a prepared state is pure or mixed"),
        }
    }

    /// P(α, s) = 2/(π(1−s)) Σ_k ((s+1)/(s−1))^k ⟨k|D†(α)ρD(α)|k⟩.
    pub fn quasi(&self, alpha: C64, s: SParameter) -> Result<f64> {
        let s = s.0;
        if s > S_MAX_NUMERIC {
            return Err(Error::InvalidParameter(format!(
                "s = {s} above {S_MAX_NUMERIC}; use the analytic P function"
            )));
        }
        let pops = self.displaced_populations(alpha, displaced_len(self.dim, alpha.norm()));
        let r = (s + 1.0) / (s - 1.0);
        let mut sum = 0.0;
        let mut rk = 1.0;
        let mut terms = Vec::with_capacity(pops.len());
        for p in pops {
            let t = rk * p;
            sum += t;
            terms.push(t.abs());
            rk *= r;
        }
        let tail = &terms[terms.len().saturating_sub(10)..];
        let rising = tail.windows(2).all(|w| w[1] >= w[0]) && tail.last().copied().unwrap_or(0.0) > 0.0;
        if !sum.is_finite() || rising {
            return Err(Error::DivergentSeries(format!("s = {s}, alpha = {alpha}")));
        }
        Ok(2.0 / (PI * (1.0 - s)) * sum)
    }

    /// W(α) = (2/π) Tr[ρ D(2α) Π].
    pub fn wigner(&self, alpha: C64) -> f64 {
        let f = displacement_block(alpha * 2.0, self.dim, self.dim);
        let t = match (&self.psi, &self.rho_par) {
            (Some(v), _) => {
                let par = CVec::from_iterator(v.len(), v.iter().enumerate().map(|(n, z)| if n % 2 == 0 { *z } else { -z }));
                CVec::from_column_slice(v).dotc(&(&f * par))
            }
            (None, Some(r)) => f.iter().zip(r.transpose().iter()).map(|(a, b)| a * b).sum(),
            (None, None) => unreachable!("a prepared state is pure or mixed"),
        };
        2.0 / PI * t.re
    }

    /// ⟨α|ρ|α⟩/π.
    pub fn qfunc(&self, alpha: C64) -> f64 {
        let coh = coherent_amps(alpha, self.dim);
        let q = match (&self.psi, &self.rho) {
            (Some(v), _) => coh.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr(),
            (None, Some(r)) => {
                let cv = CVec::from_vec(coh);
                cv.dotc(&(r * &cv)).re
            }
            (None, None) => unreachable!("a prepared state is pure or mixed"),
        };
        q / PI
    }
}

pub fn quasi<S: StateRef + ?Sized>(rho: &S, alpha: C64, s: SParameter) -> Result<f64> {
    Prepared::new(rho)?.quasi(alpha, s)
}

pub fn wigner<S: StateRef + ?Sized>(rho: &S, alpha: C64) -> Result<f64> {
    Ok(Prepared::new(rho)?.wigner(alpha))
}

pub fn qfunc<S: StateRef + ?Sized>(rho: &S, alpha: C64) -> Result<f64> {
    Ok(Prepared::new(rho)?.qfunc(alpha))
}

/// Rectangle in the α-plane sampled on an nx × ny lattice including the edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for Window {
    fn default() -> Self {
        Self { x_min: -5.0, x_max: 5.0, y_min: -5.0, y_max: 5.0, nx: 201, ny: 201 }
    }
}

impl Window {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if !(x.0 < x.1 && y.0 < y.1) || nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter("empty phase-space window".into()));
        }
        Ok(Self { x_min: x.0, x_max: x.1, y_min: y.0, y_max: y.1, nx, ny })
    }

    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new((-half, half), (-half, half), n, n)
    }

    /// The default window, widened to six standard deviations around the
    /// mean in each direction at unchanged lattice spacing.
    pub fn covering<S: StateRef + ?Sized>(rho: &S) -> Result<Self> {
        let d = rho.dims().single()?;
        let w = nonzero_weight(rho)?;
        let (q, p) = ops::quadratures(d);
        let mut bounds = [(0.0, 0.0); 2];
        for (b, op) in bounds.iter_mut().zip([q, p]) {
            let m = ops::expectation(&op, rho)?.re / w;
            let op2 = op.compose(&op)?;
            let var = (ops::expectation(&op2, rho)?.re / w - m * m).max(0.0);
            let (mean, sd) = (0.5 * m, 0.5 * var.sqrt());
            *b = ((mean - 6.0 * sd).min(-5.0), (mean + 6.0 * sd).max(5.0));
        }
        let h = 0.05;
        let n = |(lo, hi): (f64, f64)| ((hi - lo) / h).round() as usize + 1;
        Self::new(bounds[0], bounds[1], n(bounds[0]), n(bounds[1]))
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        c(self.x_min + i as f64 * self.dx(), self.y_min + j as f64 * self.dy())
    }
}

/// Quasiprobability sampled on a window; `values[i][j]` sits at
/// α = x_i + i·y_j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub window: Window,
    pub s: f64,
    pub values: Vec<Vec<f64>>,
}

impl PhaseGrid {
    pub fn evaluate(window: Window, s: f64, f: impl Fn(C64) -> Result<f64> + Sync) -> Result<Self> {
        let values = (0..window.nx)
            .into_par_iter()
            .map(|i| (0..window.ny).map(|j| f(window.point(i, j))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { window, s, values })
    }

    /// Riemann sum Σ values · Δα_r Δα_i.
    pub fn integral(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.window.dx() * self.window.dy()
    }

    pub fn min(&self) -> (f64, C64) {
        let mut best = (f64::INFINITY, ZERO);
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v < best.0 {
                    best = (*v, self.window.point(i, j));
                }
            }
        }
        best
    }

    /// ∫|values| over the outer band, one twentieth of the window wide on each side.
    pub fn boundary_mass(&self) -> f64 {
        let (nx, ny) = (self.window.nx, self.window.ny);
        let (bx, by) = ((nx / 20).max(1), (ny / 20).max(1));
        let mut m = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i < bx || i >= nx - bx || j < by || j >= ny - by {
                    m += v.abs();
                }
            }
        }
        m * self.window.dx() * self.window.dy()
    }

    fn check_window(&self) -> Result<()> {
        let mass = self.boundary_mass();
        if mass >= 1e-6 {
            return Err(Error::WindowTooSmall { mass });
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha_re,alpha_im,value\n");
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let a = self.window.point(i, j);
                out.push_str(&format!("{},{},{}\n", sig17(a.re), sig17(a.im), sig17(*v)));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "window": {
                "x_min": self.window.x_min,
                "x_max": self.window.x_max,
                "y_min": self.window.y_min,
                "y_max": self.window.y_max,
            },
            "nx": self.window.nx,
            "ny": self.window.ny,
            "s": self.s,
            "values": self.values,
        })
        .to_string()
    }
}

pub fn quasi_grid<S: StateRef + ?Sized>(rho: &S, window: Window, s: SParameter) -> Result<PhaseGrid> {
    let p = Prepared::new(rho)?;
    PhaseGrid::evaluate(window, s.0, |a| p.quasi(a, s))
}

pub fn wigner_grid<S: StateRef + ?Sized>(rho: &S, window: Window) -> Result<PhaseGrid> {
    let p = Prepared::new(rho)?;
    PhaseGrid::evaluate(window, 0.0, |a| Ok(p.wigner(a)))
}

pub fn qfunc_grid<S: StateRef + ?Sized>(rho: &S, window: Window) -> Result<PhaseGrid> {
    let p = Prepared::new(rho)?;
    PhaseGrid::evaluate(window, -1.0, |a| Ok(p.qfunc(a)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThermalSequence {
    /// a†a ρ_th a†a: subtract, then add.
    #[serde(rename = "as")]
    SubtractThenAdd,
    /// a a† ρ_th a a†: add, then subtract.
    #[serde(rename = "sa")]
    AddThenSubtract,
}

/// Normalized Glauber P function of a thermal state after one subtraction and
/// one addition, with c = (n̄+1)/n̄ and u = |α|².
pub fn p_analytic_thermal(seq: ThermalSequence, n_bar: f64, alpha: C64) -> Result<f64> {
    if !(n_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("n_bar = {n_bar} must be > 0")));
    }
    let u = alpha.norm_sqr();
    let cc = (n_bar + 1.0) / n_bar;
    let g = (-u / n_bar).exp() / (PI * n_bar);
    Ok(match seq {
        ThermalSequence::AddThenSubtract => g * cc * u * (cc * u - 1.0) / ((n_bar + 1.0) * (2.0 * n_bar + 1.0)),
        ThermalSequence::SubtractThenAdd => {
            g * ((cc * u - 1.0).powi(2) - cc * u) / (n_bar * (2.0 * n_bar + 1.0))
        }
    })
}

/// Gaussian smoothing from s to s' < s:
/// P(α, s') = 2/(π(s−s')) ∫ P(β, s) e^{−2|α−β|²/(s−s')} d²β,
/// with a discrete kernel normalized to unit sum on the grid.
pub fn convolve_s(grid: &PhaseGrid, s_prime: f64) -> Result<PhaseGrid> {
    let ds = grid.s - s_prime;
    if !(ds > 0.0) {
        return Err(Error::InvalidParameter(format!("s' = {s_prime} must be below s = {}", grid.s)));
    }
    SParameter::new(s_prime)?;
    grid.check_window()?;
    let w = grid.window;
    let kernel = |h: f64, n: usize| {
        let half = ((3.0 * ds.sqrt() / h).ceil() as usize).min(n);
        let k: Vec<f64> = (0..=2 * half)
            .map(|j| {
                let x = (j as f64 - half as f64) * h;
                (-2.0 * x * x / ds).exp()
            })
            .collect();
        let tot: f64 = k.iter().sum();
        (half, k.into_iter().map(|v| v / tot).collect::<Vec<_>>())
    };
    let (hx, kx) = kernel(w.dx(), w.nx);
    let (hy, ky) = kernel(w.dy(), w.ny);
    let smooth = |line: &[f64], half: usize, k: &[f64]| -> Vec<f64> {
        let n = line.len() as isize;
        (0..n)
            .map(|i| {
                k.iter()
                    .enumerate()
                    .map(|(j, kv)| {
                        let src = i + j as isize - half as isize;
                        if (0..n).contains(&src) {
                            kv * line[src as usize]
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    };
    let along_y: Vec<Vec<f64>> = grid.values.par_iter().map(|row| smooth(row, hy, &ky)).collect();
    let cols: Vec<Vec<f64>> = (0..w.ny)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = along_y.iter().map(|r| r[j]).collect();
            smooth(&col, hx, &kx)
        })
        .collect();
    let values = (0..w.nx).map(|i| (0..w.ny).map(|j| cols[j][i]).collect()).collect();
    Ok(PhaseGrid { window: w, s: s_prime, values })
}

/// |⟨ψ|φ⟩|² or ⟨ψ|ρ|ψ⟩ for normalized arguments.
pub fn fidelity<A: StateRef + ?Sized, B: StateRef + ?Sized>(a: &A, b: &B) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch { expected: a.dims().total(), got: b.dims().total() });
    }
    let (wa, wb) = (nonzero_weight(a)?, nonzero_weight(b)?);
    let f = match (a.view(), b.view()) {
        (StateView::Pure(x), StateView::Pure(y)) => x.amps.dotc(&y.amps).norm_sqr(),
        (StateView::Pure(x), StateView::Mixed(r)) | (StateView::Mixed(r), StateView::Pure(x)) => {
            x.amps.dotc(&(&r.mat * &x.amps)).re
        }
        (StateView::Mixed(_), StateView::Mixed(_)) => return Err(Error::BothMixed),
    };
    Ok(f / (wa * wb))
}

/// Density of the rotated quadrature q_φ = a e^{−iφ} + a† e^{iφ} at x, as the
/// Wigner function integrated along the orthogonal direction:
/// α = (x/2 + iy)e^{iφ}, p(x) = ½∫W dy.
pub fn homodyne_marginal<S: StateRef + ?Sized>(rho: &S, phi_l: f64, x: f64) -> Result<f64> {
    marginal_with(&Prepared::new(rho)?, phi_l, x)
}

pub fn homodyne_marginal_curve<S: StateRef + ?Sized>(rho: &S, phi_l: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let p = Prepared::new(rho)?;
    xs.par_iter().map(|&x| marginal_with(&p, phi_l, x)).collect()
}

fn marginal_with(p: &Prepared, phi_l: f64, x: f64) -> Result<f64> {
    let rot = C64::from_polar(1.0, phi_l);
    let w = |y: f64| p.wigner(c(0.5 * x, y) * rot);
    // fine enough for the fastest Fock-state oscillations, whose scale is ~1/√dim
    let h = (0.25 / (p.dim() as f64).sqrt()).min(0.05);
    let mut half = 6.0;
    loop {
        let edge = w(-half).abs().max(w(half).abs());
        if edge <= 1e-10 {
            break;
        }
        if half >= 48.0 {
            return Err(Error::WindowTooSmall { mass: edge * half });
        }
        half *= 2.0;
    }
    let n = (2.0 * half / h).round() as usize;
    let mut sum = 0.5 * (w(-half) + w(half));
    for k in 1..n {
        sum += w(-half + k as f64 * h);
    }
    Ok(0.5 * sum * h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for PhasePoint {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonclassicalReport {
    pub wigner_min: f64,
    pub wigner_min_at: PhasePoint,
    pub q_zero_found: bool,
    pub vacuum_prob_zero: bool,
}

/// Q is searched for zeros from every interior local minimum of the grid,
/// refined by a shrinking pattern search; Q < 1e-9 there counts as a zero.
pub fn nonclassical_indicators<S: StateRef + ?Sized>(rho: &S, window: Window) -> Result<NonclassicalReport> {
    let p = Prepared::new(rho)?;
    let wg = PhaseGrid::evaluate(window, 0.0, |a| Ok(p.wigner(a)))?;
    wg.check_window()?;
    let (wigner_min, at) = wg.min();
    let qg = PhaseGrid::evaluate(window, -1.0, |a| Ok(p.qfunc(a)))?;
    let q_zero_found = local_minima(&qg).into_iter().any(|a| refine_min(|z| p.qfunc(z), a, window.dx()) < 1e-9);
    let rho0 = rho.populations()[0] / rho.weight();
    Ok(NonclassicalReport { wigner_min, wigner_min_at: at.into(), q_zero_found, vacuum_prob_zero: rho0 < 1e-12 })
}

fn local_minima(g: &PhaseGrid) -> Vec<C64> {
    let (nx, ny) = (g.window.nx, g.window.ny);
    let v = &g.values;
    let mut out = Vec::new();
    for i in 1..nx.saturating_sub(1) {
        for j in 1..ny.saturating_sub(1) {
            let x = v[i][j];
            let is_min = (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| (a, b) == (i, j) || v[a][b] > x));
            if is_min {
                out.push(g.window.point(i, j));
            }
        }
    }
    out
}

fn refine_min(f: impl Fn(C64) -> f64, start: C64, step0: f64) -> f64 {
    let (mut z, mut fz, mut step) = (start, f(start), step0);
    let dirs = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
    while step > 1e-9 && fz >= 1e-9 {
        let best = dirs.iter().map(|d| z + d * step).map(|y| (f(y), y)).min_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((fy, y)) if fy < fz => (z, fz) = (y, fy),
            _ => step *= 0.5,
        }
    }
    fz
}

/// Reference density ⟨x|ρ|x⟩ of the rotated quadrature, from the position
/// representation of the Fock states.
pub fn quadrature_density<S: StateRef + ?Sized>(rho: &S, phi_l: f64, x: f64) -> Result<f64> {
    let d = rho.dims().single()?;
    let w = nonzero_weight(rho)?;
    // ⟨n|x⟩ for q = a + a†: oscillator functions at y = x/√2, scaled so ∫dx = 1
    let y = x / 2f64.sqrt();
    let mut v = vec![0.0; d];
    v[0] = PI.powf(-0.25) * (-0.5 * y * y).exp() / 2f64.sqrt().sqrt();
    if d > 1 {
        v[1] = 2f64.sqrt() * y * v[0];
    }
    for n in 1..d.saturating_sub(1) {
        let nf = n as f64;
        v[n + 1] = (2.0 / (nf + 1.0)).sqrt() * y * v[n] - (nf / (nf + 1.0)).sqrt() * v[n - 1];
    }
    let ket = FockVector::new(CVec::from_iterator(
        d,
        v.iter().enumerate().map(|(n, a)| C64::from_polar(*a, n as f64 * phi_l)),
    ));
    let r: DensityMatrix = rho.to_density();
    Ok(ket.amps.dotc(&(&r.mat * &ket.amps)).re / w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cond::{add_ideal, subtract_ideal};
    use crate::fock::{FockVector, State};
    use crate::stats::{cat, coherent, squeezed_vacuum, thermal};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn w_vac(a: C64) -> f64 {
        2.0 / PI * (-2.0 * a.norm_sqr()).exp()
    }

    #[test]
    fn displacement_block_matches_matrix_exponential() {
        for g in [c(1.3, -0.7), c(-4.0, 5.0), ZERO] {
            let dm = ops::displacement(g, 260).unwrap();
            let f = displacement_block(g, 120, 40);
            let worst = (0..120).flat_map(|m| (0..40).map(move |n| (m, n))).map(|(m, n)| (f[(m, n)] - dm.mat[(m, n)]).norm()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "{g}: {worst:e}");
        }
        // columns stay orthonormal far from the origin
        let f = displacement_block(C64::from_polar(14.0, 0.7), displaced_len(65, 14.0), 65);
        let gram = f.adjoint() * &f;
        assert!(crate::linalg::max_abs_diff(&gram, &CMat::identity(65, 65)) < 1e-11);
    }

    #[test]
    fn wigner_recurrence_matches_series() {
        let pure = State::Pure(cat(c(1.2, -0.4), 0.3, 50).unwrap());
        let mixed = State::Mixed(thermal(0.8, 50).unwrap());
        for st in [pure, mixed] {
            let p = Prepared::new(&st).unwrap();
            for a in [ZERO, c(0.4, 0.1), c(-1.5, 2.0), c(3.0, -2.5), c(-5.0, -5.0), c(0.05, 4.9)] {
                let s = p.quasi(a, SParameter::WIGNER).unwrap();
                assert!((p.wigner(a) - s).abs() < 1e-12, "{a}: {} vs {s}", p.wigner(a));
            }
        }
    }

    #[test]
    fn char_fn_basics() {
        let vac = FockVector::vacuum(40);
        assert_relative_eq!(char_fn(&vac, ZERO, SParameter::new(0.3).unwrap()).unwrap().re, 1.0, epsilon = 1e-14);
        for xi in [c(0.5, 0.0), c(1.0, 1.0), c(-1.2, 1.6), c(0.0, 2.0)] {
            let v = char_fn(&vac, xi, SParameter::WIGNER).unwrap();
            assert!((v - c((-0.5 * xi.norm_sqr()).exp(), 0.0)).norm() < 1e-9);
        }
        // rotating β and ξ together leaves |C| unchanged
        let rot = C64::from_polar(1.0, 0.8);
        let b1 = coherent(c(1.0, 0.5), 40).unwrap();
        let b2 = coherent(c(1.0, 0.5) * rot, 40).unwrap();
        let xi = c(0.7, -0.2);
        let c1 = char_fn(&b1, xi, SParameter::WIGNER).unwrap().norm();
        let c2 = char_fn(&b2, xi * rot, SParameter::WIGNER).unwrap().norm();
        assert_relative_eq!(c1, c2, epsilon = 1e-10);
    }

    #[test]
    fn quasi_point_values() {
        assert_relative_eq!(wigner(&FockVector::vacuum(10), ZERO).unwrap(), 2.0 / PI, epsilon = 1e-14);
        assert_relative_eq!(wigner(&FockVector::fock(1, 10), ZERO).unwrap(), -2.0 / PI, epsilon = 1e-14);
        let th = thermal(1.0, 80).unwrap();
        assert_relative_eq!(quasi(&th, ZERO, SParameter::Q).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-9);
        assert!(quasi(&th, ZERO, SParameter::new(0.95).unwrap()).is_err());
        assert!(SParameter::new(1.2).is_err());
    }

    #[test]
    fn cat_wigner_at_origin() {
        // even cat: W(0) = (2/π)(e^{−2β²} + 1)/(1 + e^{−2β²})·… evaluated directly
        let beta: f64 = 1.5;
        let st = cat(c(beta, 0.0), 0.0, 65).unwrap();
        // W(0) = (2/π)⟨Π⟩ and the even cat has parity +1
        let want = 2.0 / PI;
        assert!((wigner(&st, ZERO).unwrap() - want).abs() < 1e-8);
        // closed form off the origin on the imaginary axis:
        // W(iy) = (2/π) N² [2e^{−2(β²+y²)}... ] checked through the displaced-parity sum instead
        let n2 = 1.0 / (2.0 * (1.0 + (-2.0 * beta * beta).exp()));
        for y in [0.3f64, 0.8] {
            let a = c(0.0, y);
            let gauss = 2.0 * (-2.0 * (beta * beta + y * y)).exp();
            let interf = 2.0 * (-2.0 * y * y).exp() * (4.0 * beta * y).cos();
            let want = 2.0 / PI * n2 * (gauss + interf);
            assert!((wigner(&st, a).unwrap() - want).abs() < 1e-8, "y={y}");
        }
    }

    #[test]
    fn coherent_and_squeezed_wigner() {
        let beta = c(1.0, -0.5);
        let st = coherent(beta, 50).unwrap();
        for a in [ZERO, c(1.0, -0.5), c(0.3, 0.2), c(-1.0, 1.0), c(2.0, 0.0)] {
            let want = 2.0 / PI * (-2.0 * (a - beta).norm_sqr()).exp();
            assert!((wigner(&st, a).unwrap() - want).abs() < 1e-8);
        }
        let z: f64 = 0.5;
        let sq = squeezed_vacuum(z, 65).unwrap();
        for a in [c(0.2, 0.1), c(-0.4, 0.7), c(0.0, -1.1), c(0.5, 0.5)] {
            let want = w_vac(c(a.re * z.exp(), a.im * (-z).exp()));
            assert!((wigner(&sq, a).unwrap() - want).abs() < 1e-8);
        }
    }

    #[test]
    fn qfunc_examples() {
        assert_relative_eq!(qfunc(&FockVector::vacuum(5), ZERO).unwrap(), 1.0 / PI, epsilon = 1e-15);
        let b = coherent(c(1.0, 0.0), 50).unwrap();
        let aab = add_ideal(&subtract_ideal(&b).unwrap().state).unwrap().state;
        assert_eq!(qfunc(&aab, ZERO).unwrap(), 0.0);
        let aab2 = subtract_ideal(&add_ideal(&b).unwrap().state).unwrap().state;
        assert!(qfunc(&aab2, c(-1.0, 0.0)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn parity_identity_and_q_agreement() {
        let th = thermal(0.6, 60).unwrap();
        let p = th.populations();
        let par: f64 = p.iter().enumerate().map(|(n, x)| if n % 2 == 0 { *x } else { -*x }).sum();
        assert!((wigner(&th, ZERO).unwrap() * PI / 2.0 - par).abs() < 1e-10);
        let st = State::Pure(cat(c(0.8, 0.4), 0.7, 40).unwrap());
        for a in [c(0.1, 0.2), c(-0.7, 0.9), c(1.5, -0.3)] {
            let s1 = quasi(&st, a, SParameter::Q).unwrap();
            assert!((s1 - qfunc(&st, a).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn thermal_p_functions() {
        let n: f64 = 0.5;
        let u = n / (n + 1.0) * 0.5;
        assert!(p_analytic_thermal(ThermalSequence::AddThenSubtract, n, c(u.sqrt(), 0.0)).unwrap() < 0.0);
        assert_eq!(p_analytic_thermal(ThermalSequence::AddThenSubtract, n, ZERO).unwrap(), 0.0);
        // radial moments against the Fock-space states
        let th = thermal(n, 80).unwrap();
        let as_ = add_ideal(&subtract_ideal(&th).unwrap().state).unwrap().state;
        let sa = subtract_ideal(&add_ideal(&th).unwrap().state).unwrap().state;
        for (seq, st) in [(ThermalSequence::SubtractThenAdd, as_), (ThermalSequence::AddThenSubtract, sa)] {
            let (mut norm, mut mean) = (0.0, 0.0);
            let h = 1e-3;
            for k in 0..20000 {
                let r = (k as f64 + 0.5) * h;
                let pv = p_analytic_thermal(seq, n, c(r, 0.0)).unwrap() * 2.0 * PI * r * h;
                norm += pv;
                mean += pv * r * r;
            }
            let want = crate::stats::moments(&st).unwrap().mean;
            assert!((norm - 1.0).abs() < 1e-6, "{seq:?} norm {norm}");
            assert!((mean - want).abs() < 1e-3, "{seq:?} {mean} vs {want}");
        }
    }

    #[test]
    fn grid_normalization_and_csv() {
        let w = Window::square(4.0, 81).unwrap();
        let g = wigner_grid(&FockVector::fock(1, 20), w).unwrap();
        assert!((g.integral() - 1.0).abs() < 0.01);
        let csv = g.to_csv();
        assert!(csv.starts_with("alpha_re,alpha_im,value\n"));
        assert_eq!(csv.lines().count(), 81 * 81 + 1);
        let j: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(j["nx"], 81);
        assert_eq!(j["values"].as_array().unwrap().len(), 81);
    }

    #[test]
    fn convolution_to_q() {
        let w = Window::default();
        let vac = FockVector::vacuum(20);
        let wg = wigner_grid(&vac, w).unwrap();
        let q = convolve_s(&wg, -1.0).unwrap();
        let direct = qfunc_grid(&vac, w).unwrap();
        let err = q.values.iter().flatten().zip(direct.values.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-3, "err {err}");
        let one = convolve_s(&wigner_grid(&FockVector::fock(1, 20), w).unwrap(), -1.0).unwrap();
        assert!(one.values.iter().flatten().all(|v| *v >= -1e-12));
        let same = convolve_s(&wg, -1e-9).unwrap();
        let d = same.values.iter().flatten().zip(wg.values.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-6);
        let tight = wigner_grid(&coherent(c(3.0, 0.0), 40).unwrap(), Window::square(3.0, 61).unwrap()).unwrap();
        assert!(matches!(convolve_s(&tight, -1.0), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn fidelity_cases() {
        let a = cat(c(1.0, 0.0), 0.0, 40).unwrap();
        assert_relative_eq!(fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(fidelity(&FockVector::fock(1, 5), &FockVector::fock(2, 5)).unwrap(), 0.0);
        let t = thermal(0.5, 40).unwrap();
        assert!(matches!(fidelity(&t, &t), Err(Error::BothMixed)));
        assert_relative_eq!(fidelity(&FockVector::vacuum(40), &t).unwrap(), t.mat[(0, 0)].re / t.trace(), epsilon = 1e-14);
    }

    #[test]
    fn wigner_overlap_equals_fidelity() {
        let a = cat(c(1.0, 0.0), 0.0, 40).unwrap();
        let b = squeezed_vacuum(0.43, 40).unwrap();
        let w = Window::square(5.0, 201).unwrap();
        let (ga, gb) = (wigner_grid(&a, w).unwrap(), wigner_grid(&b, w).unwrap());
        let ov: f64 = ga.values.iter().flatten().zip(gb.values.iter().flatten()).map(|(x, y)| x * y).sum::<f64>()
            * w.dx()
            * w.dy()
            * PI;
        assert!((ov - fidelity(&a, &b).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn homodyne_marginals() {
        let vac = FockVector::vacuum(20);
        for phi in [0.0, 1.0] {
            let p0 = homodyne_marginal(&vac, phi, 0.0).unwrap();
            assert!((p0 - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-4);
        }
        assert!(homodyne_marginal(&FockVector::fock(1, 10), 0.3, 0.0).unwrap().abs() < 1e-12);
        let z: f64 = 0.5;
        let sq = squeezed_vacuum(z, 65).unwrap();
        let xs: Vec<f64> = (-80..=80).map(|k| k as f64 * 0.1).collect();
        let var = |phi: f64| {
            let p = homodyne_marginal_curve(&sq, phi, &xs).unwrap();
            let norm: f64 = p.iter().sum::<f64>() * 0.1;
            let m2: f64 = p.iter().zip(&xs).map(|(v, x)| v * x * x).sum::<f64>() * 0.1;
            assert!((norm - 1.0).abs() < 1e-3);
            m2
        };
        assert!((var(0.0) - (-2.0 * z).exp()).abs() < 1e-3);
        assert!((var(FRAC_PI_2) - (2.0 * z).exp()).abs() < 1e-3);
    }

    #[test]
    fn marginal_matches_quadrature_projection() {
        let st = cat(c(0.9, 0.3), 0.4, 40).unwrap();
        for (phi, x) in [(0.0, 0.3), (0.7, -1.2), (2.0, 2.1)] {
            let a = homodyne_marginal(&st, phi, x).unwrap();
            let b = quadrature_density(&st, phi, x).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn indicators() {
        let w = Window::default();
        let b = coherent(c(1.0, 0.0), 50).unwrap();
        let r = nonclassical_indicators(&b, w).unwrap();
        assert!(r.wigner_min >= -1e-9 && !r.q_zero_found && !r.vacuum_prob_zero);
        let aab = add_ideal(&subtract_ideal(&b).unwrap().state).unwrap().state;
        let r = nonclassical_indicators(&aab, w).unwrap();
        assert!(r.q_zero_found && r.wigner_min < 0.0);
        let t = add_ideal(&thermal(1.0, 80).unwrap()).unwrap().state;
        assert!(matches!(nonclassical_indicators(&t, w), Err(Error::WindowTooSmall { .. })));
        let wide = Window::square(8.0, 161).unwrap();
        assert!(nonclassical_indicators(&t, wide).unwrap().vacuum_prob_zero);
    }

    #[test]
    fn covering_window_grows_with_displacement() {
        let w = Window::covering(&coherent(c(4.5, 0.0), 80).unwrap()).unwrap();
        assert!(w.x_max >= 7.5 && w.x_min == -5.0);
        assert_relative_eq!(w.dx(), 0.05, epsilon = 1e-12);
    }
}
