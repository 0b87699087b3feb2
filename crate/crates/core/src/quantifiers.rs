//! l1-norm coherence, predictability and entanglement of (reduced) density
//! matrices in the occupation basis.
//!
//! For a `d`-dimensional state the raw quantities satisfy
//! `C + P + E = d - 1`; reported triples are divided by `d - 1` so they sum
//! to one. Reduced states are taken in the qubit (Jordan-Wigner, site-ordered)
//! representation and only for contiguous site windows.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::PureState;
use crate::Complex64;

const TRACE_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const STATE_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    /// 1-based sites the matrix describes; empty for abstract `d`-level states.
    sites: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::validate(&matrix)?;
        Ok(DensityMatrix {
            sites: Vec::new(),
            matrix,
        })
    }

    pub fn with_sites(sites: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if sites.len() >= usize::BITS as usize || matrix.nrows() != 1 << sites.len() {
            return Err(Error::arg(format!(
                "{} sites need a {}-dimensional matrix, got {}",
                sites.len(),
                1u64 << sites.len().min(63),
                matrix.nrows()
            )));
        }
        Self::validate(&matrix)?;
        Ok(DensityMatrix { sites, matrix })
    }

    fn validate(m: &DMatrix<Complex64>) -> Result<()> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::arg(format!(
                "density matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::arg(format!("trace is {trace}, expected 1")));
        }
        let skew = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if skew > HERMITIAN_TOL {
            return Err(Error::arg(format!("not Hermitian (max |rho - rho^+| = {skew:e})")));
        }
        let min_eig = m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &x| a.min(x));
        if min_eig < -PSD_TOL {
            return Err(Error::arg(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// Normalized `(C, P, E)` of this state, each divided by `d - 1`.
    pub fn quantifiers(&self) -> QuantifierTriple {
        QuantifierTriple::from_raw(
            coherence_of(&self.matrix),
            predictability_of(&self.matrix),
            entanglement_of(&self.matrix),
            self.dim(),
        )
    }
}

/// `sum_{j != k} |rho_jk|`.
pub fn coherence_l1(rho: &DensityMatrix) -> f64 {
    coherence_of(&rho.matrix)
}

/// `d - 1 - sum_{j != k} sqrt(rho_jj rho_kk)`; depends only on the diagonal.
pub fn predictability_l1(rho: &DensityMatrix) -> f64 {
    predictability_of(&rho.matrix)
}

/// `sum_{j != k} (sqrt(rho_jj rho_kk) - |rho_jk|)` for the reduced state of
/// one half of a bipartite pure state.
pub fn entanglement_l1(rho: &DensityMatrix) -> f64 {
    entanglement_of(&rho.matrix)
}

fn populations(m: &DMatrix<Complex64>) -> Vec<f64> {
    (0..m.nrows()).map(|j| m[(j, j)].re.max(0.0)).collect()
}

fn coherence_of(m: &DMatrix<Complex64>) -> f64 {
    let d = m.nrows();
    let mut sum = 0.0;
    for k in 0..d {
        for j in 0..d {
            if j != k {
                sum += m[(j, k)].norm();
            }
        }
    }
    sum
}

fn predictability_of(m: &DMatrix<Complex64>) -> f64 {
    let p = populations(m);
    let d = p.len();
    let mut overlap = 0.0;
    for k in 0..d {
        for j in 0..d {
            if j != k {
                overlap += (p[j] * p[k]).sqrt();
            }
        }
    }
    (d - 1) as f64 - overlap
}

fn entanglement_of(m: &DMatrix<Complex64>) -> f64 {
    let p = populations(m);
    let d = p.len();
    let mut sum = 0.0;
    for k in 0..d {
        for j in 0..d {
            if j != k {
                sum += (p[j] * p[k]).sqrt() - m[(j, k)].norm();
            }
        }
    }
    sum
}

/// Normalized coherence, predictability and entanglement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantifierTriple {
    pub coherence: f64,
    pub predictability: f64,
    pub entanglement: f64,
}

impl QuantifierTriple {
    /// Divides raw values by `d - 1`.
    pub fn from_raw(coherence: f64, predictability: f64, entanglement: f64, dim: usize) -> Self {
        let scale = (dim - 1) as f64;
        QuantifierTriple {
            coherence: coherence / scale,
            predictability: predictability / scale,
            entanglement: entanglement / scale,
        }
    }

    pub fn sum(&self) -> f64 {
        self.coherence + self.predictability + self.entanglement
    }

    pub fn get(&self, quantity: Quantity) -> f64 {
        match quantity {
            Quantity::Coherence => self.coherence,
            Quantity::Predictability => self.predictability,
            Quantity::Entanglement => self.entanglement,
        }
    }
}

fn check_state(psi: &impl PureState) -> Result<()> {
    let norm_sqr = psi.norm_sqr();
    if (norm_sqr - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::arg(format!("state norm^2 is {norm_sqr}, expected 1")));
    }
    Ok(())
}

/// Quantifiers of the whole chain (no bipartition, so `E = 0`) in the full
/// `2^N`-dimensional occupation basis.
///
/// For a pure state `C = S^2 - 1` and `P = 2^N - S^2` with `S = sum_j |psi_j|`,
/// so the density matrix is never formed.
pub fn global_quantifiers(psi: &impl PureState) -> Result<QuantifierTriple> {
    check_state(psi)?;
    let n = psi.n_sites();
    if n == 0 || n > 62 {
        return Err(Error::arg(format!("cannot evaluate a {n}-site chain")));
    }
    let l1: f64 = psi.components().map(|(_, a)| a.norm()).sum();
    let s2 = l1 * l1;
    let full = (1u64 << n) as f64;
    Ok(QuantifierTriple::from_raw(s2 - 1.0, full - s2, 0.0, 1 << n))
}

/// `rho_A = Tr_B |psi><psi|` for a contiguous block of 1-based sites.
///
/// Basis index `a` of the result has bit `m` set when site `keep_sites[m]`
/// is occupied.
pub fn partial_trace(psi: &impl PureState, keep_sites: &[usize]) -> Result<DensityMatrix> {
    check_state(psi)?;
    let n = psi.n_sites();
    let (start, width) = window_of(keep_sites, n)?;
    let dense = psi.to_dense();
    let matrix = reduce_window(&dense, n, start - 1, width);
    Ok(DensityMatrix {
        sites: keep_sites.to_vec(),
        matrix,
    })
}

fn window_of(keep_sites: &[usize], n_sites: usize) -> Result<(usize, usize)> {
    let first = *keep_sites
        .first()
        .ok_or_else(|| Error::arg("no sites to keep"))?;
    if first == 0 || keep_sites.iter().any(|&s| s > n_sites) {
        return Err(Error::arg(format!(
            "sites {keep_sites:?} outside the chain 1..={n_sites}"
        )));
    }
    if keep_sites.len() > 16 {
        return Err(Error::arg(format!(
            "reduced state of {} sites is too large",
            keep_sites.len()
        )));
    }
    if keep_sites.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::Unsupported(format!(
            "partial trace needs a contiguous increasing block of sites, got {keep_sites:?}"
        )));
    }
    Ok((first, keep_sites.len()))
}

/// Reduced state of bits `offset .. offset + width` from a dense `2^N`
/// amplitude vector.
fn reduce_window(dense: &[Complex64], n_sites: usize, offset: usize, width: usize) -> DMatrix<Complex64> {
    let d = 1usize << width;
    let mask = (d - 1) << offset;
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    let mut local = vec![Complex64::new(0.0, 0.0); d];
    for rest in (0..1usize << n_sites).filter(|r| r & mask == 0) {
        let mut any = false;
        for (a, slot) in local.iter_mut().enumerate() {
            *slot = dense[rest | a << offset];
            any |= *slot != Complex64::new(0.0, 0.0);
        }
        if !any {
            continue;
        }
        for a2 in 0..d {
            let c = local[a2].conj();
            for a in 0..d {
                rho[(a, a2)] += local[a] * c;
            }
        }
    }
    rho
}

/// Window-averaged normalized quantifiers over all `N - n + 1` contiguous
/// windows of `n` sites, summed in window order.
pub fn local_quantifiers(psi: &impl PureState, window: usize) -> Result<QuantifierTriple> {
    check_state(psi)?;
    let n = psi.n_sites();
    if window == 0 || window > n {
        return Err(Error::arg(format!(
            "window of {window} sites does not fit a {n}-site chain"
        )));
    }
    if window > 16 {
        return Err(Error::arg(format!("window of {window} sites is too large")));
    }
    let dense = psi.to_dense();
    let count = n - window + 1;
    let mut acc = QuantifierTriple::default();
    for offset in 0..count {
        let rho = reduce_window(&dense, n, offset, window);
        let q = QuantifierTriple::from_raw(
            coherence_of(&rho),
            predictability_of(&rho),
            entanglement_of(&rho),
            1 << window,
        );
        acc.coherence += q.coherence;
        acc.predictability += q.predictability;
        acc.entanglement += q.entanglement;
    }
    let c = count as f64;
    Ok(QuantifierTriple {
        coherence: acc.coherence / c,
        predictability: acc.predictability / c,
        entanglement: acc.entanglement / c,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "C")]
    Coherence,
    #[serde(rename = "P")]
    Predictability,
    #[serde(rename = "E")]
    Entanglement,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [
        Quantity::Coherence,
        Quantity::Predictability,
        Quantity::Entanglement,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Quantity::Coherence => "C",
            Quantity::Predictability => "P",
            Quantity::Entanglement => "E",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c" | "coherence" => Ok(Quantity::Coherence),
            "p" | "predictability" => Ok(Quantity::Predictability),
            "e" | "entanglement" => Ok(Quantity::Entanglement),
            _ => Err(Error::arg(format!("unknown quantity {s:?}, expected C, P or E"))),
        }
    }
}

/// Number of observables needed to estimate a quantifier on `n_sites`
/// qubits: the `N` populations-only settings for predictability, the full
/// `4^N` Pauli-string tomography for coherence and entanglement.
pub fn measurement_cost(n_sites: usize, quantity: Quantity) -> Result<u128> {
    if n_sites == 0 {
        return Err(Error::arg("measurement cost needs at least one site"));
    }
    match quantity {
        Quantity::Predictability => Ok(n_sites as u128),
        Quantity::Coherence | Quantity::Entanglement => 4u128
            .checked_pow(n_sites as u32)
            .ok_or_else(|| Error::arg(format!("4^{n_sites} overflows"))),
    }
}
