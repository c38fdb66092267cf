//! Truncated Fock-space containers.
//!
//! Two-mode objects use the mode-a-major basis: index = n_a * dim_b + n_b.

use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dims {
    One(usize),
    Two(usize, usize),
}

impl Dims {
    pub fn total(&self) -> usize {
        match *self {
            Dims::One(d) => d,
            Dims::Two(a, b) => a * b,
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            Dims::One(_) => 1,
            Dims::Two(..) => 2,
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        match *self {
            Dims::One(d) => vec![d],
            Dims::Two(a, b) => vec![a, b],
        }
    }

    pub fn from_slice(d: &[usize]) -> Result<Self> {
        let ok = |x: usize| if x >= 1 { Ok(x) } else { Err(Error::InvalidParameter("dimension must be >= 1".into())) };
        match d {
            [a] => Ok(Dims::One(ok(*a)?)),
            [a, b] => Ok(Dims::Two(ok(*a)?, ok(*b)?)),
            _ => Err(Error::ModeCount { expected: 2, got: d.len() }),
        }
    }

    pub fn single(&self) -> Result<usize> {
        match *self {
            Dims::One(d) => Ok(d),
            Dims::Two(..) => Err(Error::ModeCount { expected: 1, got: 2 }),
        }
    }

    pub fn pair(&self) -> Result<(usize, usize)> {
        match *self {
            Dims::Two(a, b) => Ok((a, b)),
            Dims::One(_) => Err(Error::ModeCount { expected: 2, got: 1 }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub dims: Dims,
    pub amps: CVec,
}

impl FockVector {
    pub fn new(amps: CVec) -> Self {
        assert!(!amps.is_empty(), "FockVector needs dim >= 1");
        Self { dims: Dims::One(amps.len()), amps }
    }

    pub fn from_amps(amps: &[C64]) -> Self {
        Self::new(CVec::from_column_slice(amps))
    }

    pub fn from_real(amps: &[f64]) -> Self {
        Self::new(CVec::from_iterator(amps.len(), amps.iter().map(|&x| c(x, 0.0))))
    }

    pub fn two_mode(da: usize, db: usize, amps: CVec) -> Result<Self> {
        if amps.len() != da * db {
            return Err(Error::DimensionMismatch { expected: da * db, got: amps.len() });
        }
        Ok(Self { dims: Dims::Two(da, db), amps })
    }

    pub fn fock(n: usize, dim: usize) -> Self {
        assert!(n < dim, "|{n}> does not fit in dim {dim}");
        let mut v = CVec::zeros(dim);
        v[n] = c(1.0, 0.0);
        Self::new(v)
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim)
    }

    pub fn fock2(na: usize, nb: usize, da: usize, db: usize) -> Self {
        assert!(na < da && nb < db);
        let mut v = CVec::zeros(da * db);
        v[na * db + nb] = c(1.0, 0.0);
        Self { dims: Dims::Two(da, db), amps: v }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn normalized(&self) -> Result<Self> {
        normalize(self)
    }

    pub fn amp2(&self, na: usize, nb: usize) -> C64 {
        let (_, db) = self.dims.pair().expect("two-mode vector");
        self.amps[na * db + nb]
    }

    /// Coefficient matrix Ψ[n_a, n_b] of a two-mode vector.
    pub fn coeff_matrix(&self) -> Result<CMat> {
        let (da, db) = self.dims.pair()?;
        Ok(CMat::from_fn(da, db, |i, j| self.amps[i * db + j]))
    }

    pub fn from_coeff_matrix(psi: &CMat) -> Self {
        let (da, db) = psi.shape();
        let amps = CVec::from_fn(da * db, |k, _| psi[(k / db, k % db)]);
        Self { dims: Dims::Two(da, db), amps }
    }

    /// Weight on the highest level of each mode.
    pub fn tail_mass(&self) -> f64 {
        match self.dims {
            Dims::One(d) => self.amps[d - 1].norm_sqr(),
            Dims::Two(da, db) => {
                let mut t = 0.0;
                for i in 0..da {
                    for j in 0..db {
                        if i == da - 1 || j == db - 1 {
                            t += self.amps[i * db + j].norm_sqr();
                        }
                    }
                }
                t
            }
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { dims: self.dims, mat: &self.amps * self.amps.adjoint() }
    }

    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Copy into a different single-mode dimension, dropping or zero-padding levels.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        let d = self.dims.single()?;
        let mut v = CVec::zeros(dim);
        for n in 0..d.min(dim) {
            v[n] = self.amps[n];
        }
        Ok(Self::new(v))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub dims: Dims,
    pub mat: CMat,
}

impl DensityMatrix {
    pub fn new(dims: Dims, mat: CMat) -> Result<Self> {
        let n = dims.total();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: mat.nrows() });
        }
        Ok(Self { dims, mat })
    }

    pub fn single(mat: CMat) -> Self {
        assert_eq!(mat.nrows(), mat.ncols());
        Self { dims: Dims::One(mat.nrows()), mat }
    }

    pub fn diagonal(p: &[f64]) -> Self {
        Self::single(CMat::from_diagonal(&CVec::from_iterator(p.len(), p.iter().map(|&x| c(x, 0.0)))))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t.abs() < config::zero_threshold() {
            return Err(Error::ZeroState { norm: t });
        }
        Ok(Self { dims: self.dims, mat: &self.mat / c(t, 0.0) })
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.mat)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues_blocked(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn tail_mass(&self) -> f64 {
        match self.dims {
            Dims::One(d) => self.mat[(d - 1, d - 1)].re,
            Dims::Two(da, db) => {
                let mut t = 0.0;
                for i in 0..da {
                    for j in 0..db {
                        if i == da - 1 || j == db - 1 {
                            let k = i * db + j;
                            t += self.mat[(k, k)].re;
                        }
                    }
                }
                t
            }
        }
    }

    /// Hermitian, unit trace and positive, within the container tolerances.
    pub fn check_invariants(&self) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > 1e-10 {
            return Err(Error::InvalidParameter(format!("not Hermitian: defect {h:e}")));
        }
        let t = self.trace();
        if (t - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("trace {t} != 1")));
        }
        let m = self.min_eigenvalue();
        if m < -1e-9 {
            return Err(Error::InvalidParameter(format!("negative eigenvalue {m:e}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateJson", try_from = "StateJson")]
pub enum State {
    Pure(FockVector),
    Mixed(DensityMatrix),
}

#[derive(Clone, Copy, Debug)]
pub enum StateView<'a> {
    Pure(&'a FockVector),
    Mixed(&'a DensityMatrix),
}

/// Anything that can be read as a pure or mixed state.
pub trait StateRef {
    fn view(&self) -> StateView<'_>;

    fn dims(&self) -> Dims {
        match self.view() {
            StateView::Pure(v) => v.dims,
            StateView::Mixed(r) => r.dims,
        }
    }

    fn to_density(&self) -> DensityMatrix {
        match self.view() {
            StateView::Pure(v) => v.to_density(),
            StateView::Mixed(r) => r.clone(),
        }
    }

    fn to_state(&self) -> State {
        match self.view() {
            StateView::Pure(v) => State::Pure(v.clone()),
            StateView::Mixed(r) => State::Mixed(r.clone()),
        }
    }

    /// ‖v‖² for a vector, Tr ρ for a matrix.
    fn weight(&self) -> f64 {
        match self.view() {
            StateView::Pure(v) => v.norm_sqr(),
            StateView::Mixed(r) => r.trace(),
        }
    }

    /// Diagonal ρ(i,i) in the (joint) Fock basis.
    fn populations(&self) -> Vec<f64> {
        match self.view() {
            StateView::Pure(v) => v.amps.iter().map(|z| z.norm_sqr()).collect(),
            StateView::Mixed(r) => r.populations(),
        }
    }
}

impl StateRef for FockVector {
    fn view(&self) -> StateView<'_> {
        StateView::Pure(self)
    }
}

impl StateRef for DensityMatrix {
    fn view(&self) -> StateView<'_> {
        StateView::Mixed(self)
    }
}

impl StateRef for State {
    fn view(&self) -> StateView<'_> {
        match self {
            State::Pure(v) => StateView::Pure(v),
            State::Mixed(r) => StateView::Mixed(r),
        }
    }
}

impl<T: StateRef + ?Sized> StateRef for &T {
    fn view(&self) -> StateView<'_> {
        (**self).view()
    }
}

impl From<FockVector> for State {
    fn from(v: FockVector) -> Self {
        State::Pure(v)
    }
}

impl From<DensityMatrix> for State {
    fn from(r: DensityMatrix) -> Self {
        State::Mixed(r)
    }
}

impl State {
    pub fn normalized(&self) -> Result<State> {
        Ok(match self {
            State::Pure(v) => State::Pure(normalize(v)?),
            State::Mixed(r) => State::Mixed(r.normalized()?),
        })
    }

    pub fn as_pure(&self) -> Option<&FockVector> {
        match self {
            State::Pure(v) => Some(v),
            State::Mixed(_) => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<State> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("state JSON: {e}")))
    }
}

/// Post-measurement state with the weight of the conditioning event.
#[derive(Clone, Debug)]
pub struct ConditionResult {
    pub state: State,
    pub probability: f64,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    modes: usize,
    dims: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<State> for StateJson {
    fn from(s: State) -> Self {
        let dims = s.dims();
        let vals: Vec<C64> = match &s {
            State::Pure(v) => v.amps.iter().copied().collect(),
            // row-major
            State::Mixed(r) => {
                let n = r.dim();
                (0..n * n).map(|k| r.mat[(k / n, k % n)]).collect()
            }
        };
        StateJson {
            modes: dims.modes(),
            dims: dims.to_vec(),
            re: vals.iter().map(|z| z.re).collect(),
            im: vals.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<StateJson> for State {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<State> {
        let dims = Dims::from_slice(&j.dims)?;
        if dims.modes() != j.modes {
            return Err(Error::ModeCount { expected: j.modes, got: dims.modes() });
        }
        if j.re.len() != j.im.len() {
            return Err(Error::DimensionMismatch { expected: j.re.len(), got: j.im.len() });
        }
        let n = dims.total();
        let vals: Vec<C64> = j.re.iter().zip(&j.im).map(|(&a, &b)| c(a, b)).collect();
        if vals.len() == n {
            Ok(State::Pure(FockVector { dims, amps: CVec::from_vec(vals) }))
        } else if vals.len() == n * n {
            Ok(State::Mixed(DensityMatrix { dims, mat: CMat::from_row_slice(n, n, &vals) }))
        } else {
            Err(Error::DimensionMismatch { expected: n, got: vals.len() })
        }
    }
}

pub fn normalize(v: &FockVector) -> Result<FockVector> {
    let n = v.amps.norm();
    if n < config::zero_threshold() {
        return Err(Error::ZeroState { norm: n });
    }
    Ok(FockVector { dims: v.dims, amps: &v.amps / c(n, 0.0) })
}

pub fn tensor<A: StateRef + ?Sized, B: StateRef + ?Sized>(a: &A, b: &B) -> Result<State> {
    let da = a.dims().single()?;
    let db = b.dims().single()?;
    let dims = Dims::Two(da, db);
    Ok(match (a.view(), b.view()) {
        (StateView::Pure(x), StateView::Pure(y)) => {
            State::Pure(FockVector { dims, amps: linalg::kron_vec(&x.amps, &y.amps) })
        }
        _ => State::Mixed(DensityMatrix { dims, mat: linalg::kron(&a.to_density().mat, &b.to_density().mat) }),
    })
}

/// Reduced state of the kept mode.
pub fn partial_trace<S: StateRef + ?Sized>(rho: &S, keep: Mode) -> Result<DensityMatrix> {
    let (da, db) = rho.dims().pair()?;
    match rho.view() {
        StateView::Pure(v) => {
            let psi = v.coeff_matrix()?;
            let m = match keep {
                Mode::A => &psi * psi.adjoint(),
                Mode::B => psi.transpose() * psi.conjugate(),
            };
            Ok(DensityMatrix::single(m))
        }
        StateView::Mixed(r) => {
            let m = match keep {
                Mode::A => CMat::from_fn(da, da, |i, k| {
                    (0..db).fold(ZERO, |acc, j| acc + r.mat[(i * db + j, k * db + j)])
                }),
                Mode::B => CMat::from_fn(db, db, |j, l| {
                    (0..da).fold(ZERO, |acc, i| acc + r.mat[(i * db + j, i * db + l)])
                }),
            };
            Ok(DensityMatrix::single(m))
        }
    }
}

/// Transpose on one mode: ρ^{T_b}[(i,j),(k,l)] = ρ[(i,l),(k,j)].
pub fn partial_transpose<S: StateRef + ?Sized>(rho: &S, mode: Mode) -> Result<CMat> {
    let (da, db) = rho.dims().pair()?;
    let r = rho.to_density().mat;
    let n = da * db;
    Ok(CMat::from_fn(n, n, |row, col| {
        let (i, j) = (row / db, row % db);
        let (k, l) = (col / db, col % db);
        match mode {
            Mode::B => r[(i * db + l, k * db + j)],
            Mode::A => r[(k * db + j, i * db + l)],
        }
    }))
}

/// ½‖ρ − σ‖₁ between the normalized states.
pub fn trace_distance<A: StateRef + ?Sized, B: StateRef + ?Sized>(a: &A, b: &B) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch { expected: a.dims().total(), got: b.dims().total() });
    }
    let ra = a.to_density().normalized()?.mat;
    let rb = b.to_density().normalized()?.mat;
    let ev = linalg::hermitian_eigenvalues_blocked(&(ra - rb));
    Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn normalize_symmetric_pair() {
        let v = FockVector::from_real(&[1.0, 1.0, 0.0]);
        let n = normalize(&v).unwrap();
        assert_relative_eq!(n.amps[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(n.amps[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn normalize_keeps_phase() {
        let v = FockVector::from_amps(&[ZERO, c(0.0, 3.0), ZERO]);
        let n = normalize(&v).unwrap();
        assert_eq!(n.amps[1], c(0.0, 1.0));
    }

    #[test]
    fn normalize_zero_vector_fails() {
        let v = FockVector::from_real(&[0.0, 1e-16]);
        assert!(matches!(normalize(&v), Err(Error::ZeroState { .. })));
    }

    #[test]
    fn tensor_index_is_mode_a_major() {
        let s = tensor(&FockVector::fock(1, 3), &FockVector::vacuum(2)).unwrap();
        let v = s.as_pure().unwrap();
        assert_eq!(v.amps[2], c(1.0, 0.0));
        assert_eq!(v.amp2(1, 0), c(1.0, 0.0));
    }

    #[test]
    fn tensor_rejects_two_mode_operand() {
        let two = FockVector::fock2(0, 0, 2, 2);
        assert!(matches!(tensor(&two, &FockVector::vacuum(2)), Err(Error::ModeCount { .. })));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let mut v = CVec::zeros(4);
        v[0] = c(FRAC_1_SQRT_2, 0.0);
        v[3] = c(FRAC_1_SQRT_2, 0.0);
        let s = FockVector::two_mode(2, 2, v).unwrap();
        for keep in [Mode::A, Mode::B] {
            for r in [partial_trace(&s, keep).unwrap(), partial_trace(&s.to_density(), keep).unwrap()] {
                assert_relative_eq!(r.mat[(0, 0)].re, 0.5, epsilon = 1e-15);
                assert_relative_eq!(r.mat[(1, 1)].re, 0.5, epsilon = 1e-15);
                assert!(r.mat[(0, 1)].norm() < 1e-15);
            }
        }
    }

    #[test]
    fn singlet_partial_transpose_spectrum() {
        let mut v = CVec::zeros(4);
        v[1] = c(FRAC_1_SQRT_2, 0.0);
        v[2] = c(-FRAC_1_SQRT_2, 0.0);
        let s = FockVector::two_mode(2, 2, v).unwrap();
        let pt = partial_transpose(&s, Mode::B).unwrap();
        let ev = linalg::hermitian_eigenvalues(&pt);
        assert_relative_eq!(ev[0], -0.5, epsilon = 1e-12);
        assert_relative_eq!(pt.trace().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn product_state_partial_transpose_is_positive() {
        let s = tensor(&FockVector::vacuum(3), &FockVector::fock(1, 3)).unwrap();
        let pt = partial_transpose(&s, Mode::B).unwrap();
        assert!(linalg::hermitian_eigenvalues(&pt)[0] >= -1e-14);
    }

    #[test]
    fn json_round_trip_pure_and_mixed() {
        let v = FockVector::from_amps(&[c(0.6, 0.0), c(0.0, 0.8)]);
        let s = State::Pure(v.clone());
        assert_eq!(State::from_json(&s.to_json()).unwrap(), s);
        let m = State::Mixed(v.to_density());
        let back = State::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        // row-major layout: element (0,1) = 0.6 * conj(0.8i) = -0.48i
        let j: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_relative_eq!(j["im"][1].as_f64().unwrap(), -0.48, epsilon = 1e-15);
    }

    #[test]
    fn json_rejects_bad_length() {
        let bad = r#"{"modes":1,"dims":[3],"re":[1,0],"im":[0,0]}"#;
        assert!(State::from_json(bad).is_err());
    }
}
