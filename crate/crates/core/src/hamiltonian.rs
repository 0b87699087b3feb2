//! Disordered chain Hamiltonians in a fixed particle-number sector.
//!
//! `H = J sum_i (c+_{i+1} c_i + h.c.) + g sum_i n_i n_{i+1} + W sum_i eps_i n_i`
//! with `eps_i` uniform on `[-1, 1]`. `g = 0` is the Anderson model. Energies
//! are in units where `hbar = 1`.

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{hop_sign, Sector};
use crate::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Bond and interaction sums stop at `i = N - 1`.
    #[default]
    Open,
    /// Adds the `N -> 1` bond, with the full fermionic string sign.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n_sites: usize,
    #[serde(rename = "J")]
    pub hopping: f64,
    #[serde(rename = "W")]
    pub disorder: f64,
    #[serde(rename = "g")]
    pub interaction: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ChainParams {
    pub fn new(n_sites: usize, hopping: f64, disorder: f64, interaction: f64) -> Self {
        ChainParams {
            n_sites,
            hopping,
            disorder,
            interaction,
            boundary: Boundary::Open,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::arg(format!(
                "n_sites must be at least 2, got {}",
                self.n_sites
            )));
        }
        if self.n_sites > crate::hilbert::MAX_SITES {
            return Err(Error::arg(format!("n_sites {} is too large", self.n_sites)));
        }
        for (name, v) in [
            ("J", self.hopping),
            ("W", self.disorder),
            ("g", self.interaction),
        ] {
            if !v.is_finite() {
                return Err(Error::arg(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Nearest-neighbour bonds `(i, i + 1)`, 1-based, including the wrap
    /// bond `(N, 1)` for periodic chains.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        let mut bonds: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic {
            bonds.push((n, 1));
        }
        bonds
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisorderRealization {
    pub epsilon: Vec<f64>,
    pub seed: u64,
}

/// Seed of realization `index` under `master_seed`.
///
/// Word 0 of the ChaCha8 keystream keyed by `master_seed` on stream `index`,
/// so every realization is reproducible on its own regardless of execution
/// order.
pub fn realization_seed(master_seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng.next_u64()
}

pub fn sample_disorder(n_sites: usize, seed: u64) -> DisorderRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let epsilon = (0..n_sites).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DisorderRealization { epsilon, seed }
}

/// Real symmetric Hamiltonian restricted to one particle-number sector, in
/// the sector's basis order.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    matrix: DMatrix<f64>,
    n_sites: usize,
    n_particles: usize,
}

impl HamiltonianMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>, n_sites: usize, n_particles: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::arg(format!(
                "Hamiltonian must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(HamiltonianMatrix {
            matrix,
            n_sites,
            n_particles,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix == self.matrix.transpose()
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `<psi|H|psi>` for amplitudes in this sector's basis order.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let re = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z.re));
        let im = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z.im));
        let h_re = &self.matrix * &re;
        let h_im = &self.matrix * &im;
        re.dot(&h_re) + im.dot(&h_im)
    }
}

pub fn build_hamiltonian(
    params: &ChainParams,
    eps: &DisorderRealization,
    sector: &Sector,
) -> Result<HamiltonianMatrix> {
    params.validate()?;
    if eps.epsilon.len() != params.n_sites || sector.n_sites() != params.n_sites {
        return Err(Error::arg(format!(
            "size mismatch: chain has {} sites, disorder {}, sector {}",
            params.n_sites,
            eps.epsilon.len(),
            sector.n_sites()
        )));
    }
    let bonds = params.bonds();
    let dim = sector.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (m, &state) in sector.states().iter().enumerate() {
        let onsite: f64 = eps
            .epsilon
            .iter()
            .enumerate()
            .map(|(i, e)| e * state.occupation(i + 1))
            .sum();
        let mut diag = params.disorder * onsite;
        for &(i, j) in &bonds {
            diag += params.interaction * state.occupation(i) * state.occupation(j);
        }
        h[(m, m)] = diag;

        for &(i, j) in &bonds {
            for (from, to) in [(i, j), (j, i)] {
                if state.is_occupied(from) && !state.is_occupied(to) {
                    let target = state.hopped(from, to);
                    let m2 = sector
                        .index_of(target)
                        .expect("hopping conserves particle number");
                    let sign = hop_sign(state, from, to)?;
                    h[(m2, m)] += params.hopping * f64::from(sign);
                }
            }
        }
    }
    HamiltonianMatrix::from_matrix(h, params.n_sites, sector.n_particles())
}
