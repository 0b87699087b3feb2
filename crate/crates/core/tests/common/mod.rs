//! Dense `2^N` Fock-space reference implementation used as a test oracle.
//!
//! Operators are built from the Jordan-Wigner definition
//! `c_i |s> = (-1)^(occupied modes before i) |s - e_i>` and multiplied as
//! plain matrices, independent of the sector-restricted code paths.

#![allow(dead_code)]

use locpred::Complex64;
use nalgebra::{DMatrix, DVector};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Annihilation operator of 1-based site `i` on `n` sites.
pub fn annihilator(n: usize, i: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        if s >> (i - 1) & 1 == 1 {
            let before = (s & ((1 << (i - 1)) - 1)).count_ones();
            let sign = if before.is_multiple_of(2) { 1.0 } else { -1.0 };
            m[(s ^ (1 << (i - 1)), s)] = c(sign, 0.0);
        }
    }
    m
}

pub struct Chain {
    pub n: usize,
    pub hopping: f64,
    pub disorder: f64,
    pub interaction: f64,
    pub periodic: bool,
    pub epsilon: Vec<f64>,
}

impl Chain {
    /// `J sum (c+_{i+1} c_i + h.c.) + g sum n_i n_{i+1} + W sum eps_i n_i`.
    pub fn hamiltonian(&self) -> DMatrix<Complex64> {
        let n = self.n;
        let cs: Vec<_> = (1..=n).map(|i| annihilator(n, i)).collect();
        let ns: Vec<_> = cs.iter().map(|ci| ci.adjoint() * ci).collect();
        let dim = 1 << n;
        let mut h = DMatrix::zeros(dim, dim);
        let mut bonds: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if self.periodic {
            bonds.push((n - 1, 0));
        }
        for &(i, j) in &bonds {
            let hop = cs[j].adjoint() * &cs[i] + cs[i].adjoint() * &cs[j];
            h += hop * c(self.hopping, 0.0);
            h += &ns[i] * &ns[j] * c(self.interaction, 0.0);
        }
        for (ni, eps) in ns.iter().zip(&self.epsilon) {
            h += ni * c(self.disorder * eps, 0.0);
        }
        h
    }
}

/// Exact propagator from a complex Hermitian eigendecomposition.
pub struct DenseEvolution {
    values: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl DenseEvolution {
    pub fn new(h: &DMatrix<Complex64>) -> Self {
        let eig = h.clone().symmetric_eigen();
        DenseEvolution {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn evolve(&self, psi0: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let mut coeffs = self.vectors.adjoint() * psi0;
        for (k, z) in coeffs.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, -self.values[k] * t);
        }
        &self.vectors * coeffs
    }
}

pub fn projector(psi: &DVector<Complex64>) -> DMatrix<Complex64> {
    psi * psi.adjoint()
}

/// `rho_A[a, a'] = sum_b rho[(a, b), (a', b)]` for sites `offset+1 ..= offset+width`.
pub fn trace_out(rho: &DMatrix<Complex64>, n: usize, offset: usize, width: usize) -> DMatrix<Complex64> {
    let d = 1usize << width;
    let mask = (d - 1) << offset;
    let mut out = DMatrix::zeros(d, d);
    for rest in 0..(1usize << n) {
        if rest & mask != 0 {
            continue;
        }
        for a in 0..d {
            for a2 in 0..d {
                out[(a, a2)] += rho[(rest | a << offset, rest | a2 << offset)];
            }
        }
    }
    out
}

/// Raw `(C, P, E)` by the defining double sums.
pub fn raw_quantifiers(rho: &DMatrix<Complex64>) -> (f64, f64, f64) {
    let d = rho.nrows();
    let (mut coh, mut overlap) = (0.0, 0.0);
    for j in 0..d {
        for k in 0..d {
            if j != k {
                coh += rho[(j, k)].norm();
                overlap += (rho[(j, j)].re.max(0.0) * rho[(k, k)].re.max(0.0)).sqrt();
            }
        }
    }
    (coh, (d - 1) as f64 - overlap, overlap - coh)
}

/// Normalized global `(C, P)` of a pure state via its explicit projector.
pub fn global_cp(psi: &DVector<Complex64>) -> (f64, f64) {
    let (cc, pp, _) = raw_quantifiers(&projector(psi));
    let scale = (psi.len() - 1) as f64;
    (cc / scale, pp / scale)
}

/// Normalized window-averaged `(C, P, E)` via explicit partial traces.
pub fn local_cpe(psi: &DVector<Complex64>, n: usize, width: usize) -> (f64, f64, f64) {
    let rho = projector(psi);
    let windows = n - width + 1;
    let scale = ((1 << width) - 1) as f64;
    let mut acc = (0.0, 0.0, 0.0);
    for offset in 0..windows {
        let (cc, pp, ee) = raw_quantifiers(&trace_out(&rho, n, offset, width));
        acc.0 += cc / scale;
        acc.1 += pp / scale;
        acc.2 += ee / scale;
    }
    let w = windows as f64;
    (acc.0 / w, acc.1 / w, acc.2 / w)
}

/// Restricts a dense operator to the basis states listed (by bit pattern).
pub fn restrict(m: &DMatrix<Complex64>, basis: &[u64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(basis.len(), basis.len(), |r, col| {
        m[(basis[r] as usize, basis[col] as usize)]
    })
}

pub fn dense_vector(amps: Vec<Complex64>) -> DVector<Complex64> {
    DVector::from_vec(amps)
}
