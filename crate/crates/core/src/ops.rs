//! Operator matrices on the truncated space.
//!
//! Conventions: q = a + a†, p = i(a† − a), D(ξ) = exp(ξa† − ξ*a),
//! S₁(ζ) = exp(ζ/2 (a² − a†²)), S₂(ζ) = exp(ζ(ab − a†b†)),
//! B(θ, φ) = exp(θ/2 (a†b e^{iφ} − ab† e^{−iφ})), so t = cos(θ/2).

use crate::config;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Dims, FockVector, Mode, State, StateRef, StateView};
use crate::linalg::{self, block_exp_kept, c, Block, CMat, CVec, C64};

/// How a generator is cut before exponentiation.
///
/// `Hard` exponentiates the generator truncated at the target dimension: the result is
/// exactly unitary but its top levels (and, for large parameters, the vacuum column)
/// carry truncation error. `Padded(p)` works in a space `p` levels larger per mode and
/// crops. `Auto` grows the padding until the cropped elements stop changing; the result
/// then agrees with the infinite-dimensional matrix elements but is no longer unitary
/// near the top of the ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Truncation {
    Hard,
    Padded(usize),
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub dims: Dims,
    pub mat: CMat,
}

impl OperatorMatrix {
    pub fn new(dims: Dims, mat: CMat) -> Self {
        assert_eq!(mat.nrows(), dims.total());
        assert_eq!(mat.ncols(), dims.total());
        Self { dims, mat }
    }

    pub fn single(mat: CMat) -> Self {
        let d = mat.nrows();
        Self::new(Dims::One(d), mat)
    }

    pub fn adjoint(&self) -> Self {
        Self { dims: self.dims, mat: self.mat.adjoint() }
    }

    pub fn compose(&self, rhs: &OperatorMatrix) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(Error::DimensionMismatch { expected: self.dims.total(), got: rhs.dims.total() });
        }
        Ok(Self { dims: self.dims, mat: &self.mat * &rhs.mat })
    }

    pub fn column(&self, j: usize) -> FockVector {
        FockVector { dims: self.dims, amps: self.mat.column(j).into_owned() }
    }
}

pub fn identity(dims: Dims) -> OperatorMatrix {
    let n = dims.total();
    OperatorMatrix::new(dims, CMat::identity(n, n))
}

pub fn annihilation(dim: usize) -> OperatorMatrix {
    let mut m = CMat::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix::single(m)
}

pub fn creation(dim: usize) -> OperatorMatrix {
    annihilation(dim).adjoint()
}

pub fn number(dim: usize) -> OperatorMatrix {
    let a = annihilation(dim);
    OperatorMatrix::single(a.mat.adjoint() * &a.mat)
}

/// Diagonal operator f(n̂).
pub fn diag_fn(dim: usize, f: impl Fn(usize) -> C64) -> OperatorMatrix {
    OperatorMatrix::single(CMat::from_diagonal(&CVec::from_fn(dim, |n, _| f(n))))
}

pub fn quadratures(dim: usize) -> (OperatorMatrix, OperatorMatrix) {
    let a = annihilation(dim).mat;
    let ad = a.adjoint();
    let q = &a + &ad;
    let p = (&ad - &a) * c(0.0, 1.0);
    (OperatorMatrix::single(q), OperatorMatrix::single(p))
}

/// Rotated quadrature q_φ = a e^{−iφ} + a† e^{iφ}.
pub fn rotated_quadrature(dim: usize, phi: f64) -> OperatorMatrix {
    let a = annihilation(dim).mat * C64::from_polar(1.0, -phi);
    OperatorMatrix::single(&a + a.adjoint())
}

type Triplets = Vec<(usize, usize, C64)>;

fn pad(d: Dims, p: usize) -> Dims {
    match d {
        Dims::One(n) => Dims::One(n + p),
        Dims::Two(a, b) => Dims::Two(a + p, b + p),
    }
}

fn crop_index(work: Dims, target: Dims, w: usize) -> Option<usize> {
    match (work, target) {
        (Dims::One(_), Dims::One(d)) => (w < d).then_some(w),
        (Dims::Two(_, wb), Dims::Two(da, db)) => {
            let (i, j) = (w / wb, w % wb);
            (i < da && j < db).then(|| i * db + j)
        }
        _ => unreachable!("work and target dims share mode count"),
    }
}

fn assemble(work: Dims, target: Dims, blocks: &[Block]) -> CMat {
    let n = target.total();
    let mut out = CMat::zeros(n, n);
    for b in blocks {
        let mapped: Vec<Option<usize>> = b.idx.iter().map(|&w| crop_index(work, target, w)).collect();
        for (bi, ti) in mapped.iter().enumerate() {
            let Some(ti) = ti else { continue };
            for (bj, tj) in mapped.iter().enumerate() {
                if let Some(tj) = tj {
                    out[(*ti, *tj)] = b.mat[(bi, bj)];
                }
            }
        }
    }
    out
}

const AUTO_TOL: f64 = 1e-12;

fn exp_generator(target: Dims, trunc: Truncation, gen: &dyn Fn(Dims) -> Triplets) -> CMat {
    let once = |work: Dims| {
        let trip = gen(work);
        let blocks = block_exp_kept(work.total(), &trip, |w| crop_index(work, target, w).is_some());
        assemble(work, target, &blocks)
    };
    match trunc {
        Truncation::Hard => once(target),
        Truncation::Padded(p) => once(pad(target, p)),
        Truncation::Auto => {
            let big = target.to_vec().into_iter().max().unwrap_or(1);
            let cap = match target {
                Dims::One(d) => 16 * d + 512,
                Dims::Two(a, b) => 4 * a.max(b) + 32,
            };
            let mut p = (big / 2).max(8);
            let mut prev = once(pad(target, p));
            loop {
                p *= 2;
                let cur = once(pad(target, p));
                let diff = linalg::max_abs_diff(&prev, &cur);
                if diff < AUTO_TOL {
                    return cur;
                }
                if p >= cap {
                    log::warn!("padded exponential did not settle: last change {diff:e} at padding {p}");
                    return cur;
                }
                prev = cur;
            }
        }
    }
}

fn displacement_gen(xi: C64) -> impl Fn(Dims) -> Triplets {
    move |work| {
        let d = work.total();
        let mut t = Vec::with_capacity(2 * d);
        for n in 0..d.saturating_sub(1) {
            let s = ((n + 1) as f64).sqrt();
            t.push((n + 1, n, xi * s));
            t.push((n, n + 1, -xi.conj() * s));
        }
        t
    }
}

fn squeeze1_gen(zeta: f64) -> impl Fn(Dims) -> Triplets {
    move |work| {
        let d = work.total();
        let mut t = Vec::with_capacity(2 * d);
        for n in 0..d.saturating_sub(2) {
            let s = 0.5 * zeta * (((n + 1) * (n + 2)) as f64).sqrt();
            t.push((n, n + 2, c(s, 0.0)));
            t.push((n + 2, n, c(-s, 0.0)));
        }
        t
    }
}

fn squeeze2_gen(zeta: f64) -> impl Fn(Dims) -> Triplets {
    move |work| {
        let (da, db) = work.pair().expect("two-mode work dims");
        let mut t = Vec::new();
        for na in 1..da {
            for nb in 1..db {
                let s = zeta * ((na * nb) as f64).sqrt();
                let hi = na * db + nb;
                let lo = (na - 1) * db + (nb - 1);
                t.push((lo, hi, c(s, 0.0)));
                t.push((hi, lo, c(-s, 0.0)));
            }
        }
        t
    }
}

fn beamsplitter_gen(theta: f64, phi: f64) -> impl Fn(Dims) -> Triplets {
    move |work| {
        let (da, db) = work.pair().expect("two-mode work dims");
        let e = C64::from_polar(0.5 * theta, phi);
        let mut t = Vec::new();
        // a†b |na, nb⟩ = √((na+1) nb) |na+1, nb−1⟩
        for na in 0..da.saturating_sub(1) {
            for nb in 1..db {
                let s = (((na + 1) * nb) as f64).sqrt();
                let from = na * db + nb;
                let to = (na + 1) * db + (nb - 1);
                t.push((to, from, e * s));
                t.push((from, to, -e.conj() * s));
            }
        }
        t
    }
}

fn vacuum_tail(m: &CMat, dims: Dims) -> f64 {
    FockVector { dims, amps: m.column(0).into_owned() }.tail_mass()
}

pub fn displacement(xi: C64, dim: usize) -> Result<OperatorMatrix> {
    displacement_with(xi, dim, Truncation::Auto)
}

pub fn displacement_with(xi: C64, dim: usize, trunc: Truncation) -> Result<OperatorMatrix> {
    let dims = Dims::One(dim);
    let m = exp_generator(dims, trunc, &displacement_gen(xi));
    config::check_tail("displacement", vacuum_tail(&m, dims))?;
    Ok(OperatorMatrix::new(dims, m))
}

pub fn squeeze1(zeta: f64, dim: usize) -> Result<OperatorMatrix> {
    squeeze1_with(zeta, dim, Truncation::Auto)
}

pub fn squeeze1_with(zeta: f64, dim: usize, trunc: Truncation) -> Result<OperatorMatrix> {
    let dims = Dims::One(dim);
    let m = exp_generator(dims, trunc, &squeeze1_gen(zeta));
    let tail = if dim >= 2 { m[(dim - 1, 0)].norm_sqr() + m[(dim - 2, 0)].norm_sqr() } else { 0.0 };
    config::check_tail("squeeze1", tail)?;
    Ok(OperatorMatrix::new(dims, m))
}

pub fn squeeze2(zeta: f64, dims: (usize, usize)) -> Result<OperatorMatrix> {
    squeeze2_with(zeta, dims, Truncation::Auto)
}

pub fn squeeze2_with(zeta: f64, dims: (usize, usize), trunc: Truncation) -> Result<OperatorMatrix> {
    let dims = Dims::Two(dims.0, dims.1);
    let m = exp_generator(dims, trunc, &squeeze2_gen(zeta));
    config::check_tail("squeeze2", vacuum_tail(&m, dims))?;
    Ok(OperatorMatrix::new(dims, m))
}

pub fn beamsplitter(theta: f64, phi: f64, dims: (usize, usize)) -> OperatorMatrix {
    beamsplitter_with(theta, phi, dims, Truncation::Auto)
}

pub fn beamsplitter_with(theta: f64, phi: f64, dims: (usize, usize), trunc: Truncation) -> OperatorMatrix {
    let dims = Dims::Two(dims.0, dims.1);
    // Total photon number is conserved; blocks with N ≤ d_a + d_b − 2 are complete
    // once each mode has d_a + d_b − 1 levels, so a fixed padding is already exact.
    let trunc = match trunc {
        Truncation::Auto => {
            let (a, b) = dims.pair().expect("two-mode");
            Truncation::Padded(a.max(b))
        }
        t => t,
    };
    OperatorMatrix::new(dims, exp_generator(dims, trunc, &beamsplitter_gen(theta, phi)))
}

/// The beam splitter restricted to total photon number `n_total`, in the basis
/// |n_total − k, k⟩ indexed by k = n_b. Exact: the block is closed under B.
pub fn beamsplitter_block(theta: f64, phi: f64, n_total: usize) -> CMat {
    let m = n_total + 1;
    let e = C64::from_polar(0.5 * theta, phi);
    let mut t = Vec::with_capacity(2 * m);
    // a†b takes k → k−1 with √((N−k+1) k)
    for k in 1..m {
        let s = (((n_total - k + 1) * k) as f64).sqrt();
        t.push((k - 1, k, e * s));
        t.push((k, k - 1, -e.conj() * s));
    }
    let blocks = block_exp_kept(m, &t, |_| true);
    assemble(Dims::One(m), Dims::One(m), &blocks)
}

/// ⟨out|_b B(θ, φ) |in⟩_b as an operator on mode a, truncated to `dim` levels.
/// Exact for every input level below `dim`.
pub fn bs_kraus(theta: f64, phi: f64, dim: usize, b_in: usize, b_out: usize) -> OperatorMatrix {
    let mut k = CMat::zeros(dim, dim);
    for j in 0..dim {
        let n = j + b_in;
        if b_out > n {
            continue;
        }
        let i = n - b_out;
        if i >= dim {
            continue;
        }
        let blk = beamsplitter_block(theta, phi, n);
        k[(i, j)] = blk[(b_out, b_in)];
    }
    OperatorMatrix::single(k)
}

/// Single-mode operator acting on one mode of a two-mode space.
pub fn embed(op: &OperatorMatrix, mode: Mode, dims: (usize, usize)) -> Result<OperatorMatrix> {
    let d = op.dims.single()?;
    let (da, db) = dims;
    let (want, eye) = match mode {
        Mode::A => (da, CMat::identity(db, db)),
        Mode::B => (db, CMat::identity(da, da)),
    };
    if d != want {
        return Err(Error::DimensionMismatch { expected: want, got: d });
    }
    let mat = match mode {
        Mode::A => linalg::kron(&op.mat, &eye),
        Mode::B => linalg::kron(&eye, &op.mat),
    };
    Ok(OperatorMatrix::new(Dims::Two(da, db), mat))
}

fn check_dims(u: &OperatorMatrix, d: Dims) -> Result<()> {
    if u.dims != d {
        return Err(Error::DimensionMismatch { expected: u.dims.total(), got: d.total() });
    }
    Ok(())
}

/// U·v for vectors, U·ρ·U† for density matrices. No normalization.
pub fn apply<S: StateRef + ?Sized>(u: &OperatorMatrix, state: &S) -> Result<State> {
    check_dims(u, state.dims())?;
    Ok(match state.view() {
        StateView::Pure(v) => State::Pure(FockVector { dims: v.dims, amps: &u.mat * &v.amps }),
        StateView::Mixed(r) => State::Mixed(DensityMatrix { dims: r.dims, mat: &u.mat * &r.mat * u.mat.adjoint() }),
    })
}

pub fn conjugate<S: StateRef + ?Sized>(u: &OperatorMatrix, rho: &S) -> Result<DensityMatrix> {
    check_dims(u, rho.dims())?;
    let r = rho.to_density();
    Ok(DensityMatrix { dims: r.dims, mat: &u.mat * &r.mat * u.mat.adjoint() })
}

/// Apply a single-mode operator to one mode of a two-mode state (or to a single-mode state).
pub fn apply_local<S: StateRef + ?Sized>(op: &OperatorMatrix, mode: Mode, state: &S) -> Result<State> {
    match state.dims() {
        Dims::One(_) => apply(op, state),
        Dims::Two(da, db) => match state.view() {
            StateView::Pure(v) => {
                let d = op.dims.single()?;
                let want = if mode == Mode::A { da } else { db };
                if d != want {
                    return Err(Error::DimensionMismatch { expected: want, got: d });
                }
                let psi = v.coeff_matrix()?;
                let out = match mode {
                    Mode::A => &op.mat * psi,
                    Mode::B => psi * op.mat.transpose(),
                };
                Ok(State::Pure(FockVector::from_coeff_matrix(&out)))
            }
            StateView::Mixed(_) => apply(&embed(op, mode, (da, db))?, state),
        },
    }
}

/// ⟨O⟩ = Tr(ρ O) (not divided by the state weight).
pub fn expectation<S: StateRef + ?Sized>(op: &OperatorMatrix, state: &S) -> Result<C64> {
    check_dims(op, state.dims())?;
    Ok(match state.view() {
        StateView::Pure(v) => v.amps.dotc(&(&op.mat * &v.amps)),
        StateView::Mixed(r) => (&r.mat * &op.mat).trace(),
    })
}

fn interior(dims: Dims, guard: usize) -> Vec<usize> {
    match dims {
        Dims::One(d) => (0..d.saturating_sub(guard)).collect(),
        Dims::Two(da, db) => {
            let mut v = Vec::new();
            for i in 0..da.saturating_sub(guard) {
                for j in 0..db.saturating_sub(guard) {
                    v.push(i * db + j);
                }
            }
            v
        }
    }
}

/// max |A − B| over rows and columns below `dim − guard` (per mode).
pub fn interior_max_diff(a: &OperatorMatrix, b: &OperatorMatrix, guard: usize) -> f64 {
    assert_eq!(a.dims, b.dims);
    let idx = interior(a.dims, guard);
    let mut m: f64 = 0.0;
    for &i in &idx {
        for &j in &idx {
            m = m.max((a.mat[(i, j)] - b.mat[(i, j)]).norm());
        }
    }
    m
}

/// ‖U†U − I‖_max on the interior block.
pub fn interior_unitarity_defect(u: &OperatorMatrix, guard: usize) -> f64 {
    let g = OperatorMatrix::new(u.dims, u.mat.adjoint() * &u.mat);
    interior_max_diff(&g, &identity(u.dims), guard)
}

/// Largest element outside the total-photon-number blocks of a two-mode operator.
pub fn off_block_max(u: &OperatorMatrix) -> f64 {
    let (_, db) = u.dims.pair().expect("two-mode operator");
    let n = u.dims.total();
    let tot = |k: usize| k / db + k % db;
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if tot(i) != tot(j) {
                m = m.max(u.mat[(i, j)].norm());
            }
        }
    }
    m
}
