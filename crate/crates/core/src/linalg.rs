//! Dense complex helpers shared by the operator and measure modules.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for k in 0..b.len() {
            out[i * b.len() + k] = a[i] * b[k];
        }
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigen-decomposition of a Hermitian matrix: (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let se = SymmetricEigen::new(h);
    (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the graph with an edge for every (i, j) pair.
/// Each component is returned as a sorted index list; singletons included.
pub fn components(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    for (i, j) in edges {
        uf.union(i, j);
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf.find(i);
        groups[r].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

/// A dense block of a block-diagonal matrix, living on `idx`.
pub struct Block {
    pub idx: Vec<usize>,
    pub mat: CMat,
}

/// exp(G) for a sparse generator given as (row, col, value) triplets on an n-dim space.
/// The generator is split into its connected components and each block is
/// exponentiated densely; indices untouched by any triplet get identity.
pub fn block_exp(n: usize, triplets: &[(usize, usize, C64)]) -> Vec<Block> {
    block_exp_kept(n, triplets, |_| true)
}

/// Like [`block_exp`] but each returned block only holds rows and columns whose
/// index passes `keep`.
///
/// Anti-Hermitian blocks that are tridiagonal in index order (every generator
/// built in `ops`) are rotated by a diagonal phase into i·S with S real symmetric
/// tridiagonal; only the kept rows of the eigenvectors of S are accumulated.
/// Other blocks fall back to a dense Padé exponential.
pub fn block_exp_kept(n: usize, triplets: &[(usize, usize, C64)], keep: impl Fn(usize) -> bool) -> Vec<Block> {
    let comps = components(n, triplets.iter().map(|&(i, j, _)| (i, j)));
    let mut where_: Vec<(usize, usize)> = vec![(0, 0); n];
    for (b, comp) in comps.iter().enumerate() {
        for (k, &i) in comp.iter().enumerate() {
            where_[i] = (b, k);
        }
    }
    let mut gens: Vec<CMat> = comps.iter().map(|c| CMat::zeros(c.len(), c.len())).collect();
    let mut tridiagonal = vec![true; comps.len()];
    for &(i, j, v) in triplets {
        let (b, ki) = where_[i];
        let (_, kj) = where_[j];
        gens[b][(ki, kj)] += v;
        if ki.abs_diff(kj) > 1 {
            tridiagonal[b] = false;
        }
    }
    let mut out = Vec::new();
    for ((idx, g), tri) in comps.into_iter().zip(gens).zip(tridiagonal) {
        let kept: Vec<usize> = (0..idx.len()).filter(|&k| keep(idx[k])).collect();
        if kept.is_empty() {
            continue;
        }
        let anti = hermiticity_defect(&(&g * C64::new(0.0, 1.0))) <= 1e-14 * max_abs(&g).max(1.0);
        let mat = if g.nrows() == 1 {
            CMat::from_element(1, 1, g[(0, 0)].exp())
        } else if tri && anti {
            exp_antihermitian_tridiagonal(&g, &kept)
        } else {
            let full = g.exp();
            CMat::from_fn(kept.len(), kept.len(), |a, b| full[(kept[a], kept[b])])
        };
        out.push(Block { idx: kept.iter().map(|&k| idx[k]).collect(), mat });
    }
    out
}

/// Rows/cols `kept` of exp(G) for anti-Hermitian tridiagonal G.
fn exp_antihermitian_tridiagonal(g: &CMat, kept: &[usize]) -> CMat {
    let m = g.nrows();
    // U†GU = iS with U = diag(u), u_{k+1} = i|z_k| u_k / z_k, z_k = G[k, k+1]
    let mut u = vec![ONE; m];
    let mut off = vec![0.0; m];
    let mut diag = vec![0.0; m];
    for k in 0..m {
        diag[k] = g[(k, k)].im;
        if k + 1 < m {
            let z = g[(k, k + 1)];
            let r = z.norm();
            off[k] = r;
            u[k + 1] = if r > 0.0 { C64::new(0.0, r) * u[k] / z } else { u[k] };
        }
    }
    let (lam, z) = symmetric_tridiagonal_eigen(&mut diag, &mut off, kept);
    let phase: Vec<C64> = lam.iter().map(|&l| C64::from_polar(1.0, l)).collect();
    CMat::from_fn(kept.len(), kept.len(), |a, b| {
        let mut acc = ZERO;
        for (j, ph) in phase.iter().enumerate() {
            acc += ph * (z[a][j] * z[b][j]);
        }
        u[kept[a]] * acc * u[kept[b]].conj()
    })
}

/// Implicit QL with Wilkinson shifts for a real symmetric tridiagonal matrix
/// (`diag`, `off[k]` = element (k, k+1), last entry ignored). Returns the
/// eigenvalues and, for each requested row position, that row of the
/// eigenvector matrix. Both input slices are overwritten.
pub fn symmetric_tridiagonal_eigen(diag: &mut [f64], off: &mut [f64], rows: &[usize]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = diag.len();
    assert_eq!(off.len(), n);
    let d = diag;
    let e = off;
    e[n - 1] = 0.0;
    let mut z: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| {
            let mut row = vec![0.0; n];
            row[r] = 1.0;
            row
        })
        .collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 200, "tridiagonal QL did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    (d.to_vec(), z)
}

/// Eigenvalues of a Hermitian matrix, computed block by block along the
/// exact-zero pattern of its entries.
pub fn hermitian_eigenvalues_blocked(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != ZERO {
                edges.push((i, j));
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for comp in components(n, edges) {
        if comp.len() == 1 {
            out.push(m[(comp[0], comp[0])].re);
            continue;
        }
        let sub = CMat::from_fn(comp.len(), comp.len(), |a, b| m[(comp[a], comp[b])]);
        out.extend(hermitian_eigenvalues(&sub));
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

pub fn factorial_sqrt_table(n: usize) -> Vec<f64> {
    let mut t = vec![1.0; n.max(1)];
    for k in 1..n {
        t[k] = t[k - 1] * (k as f64).sqrt();
    }
    t
}
