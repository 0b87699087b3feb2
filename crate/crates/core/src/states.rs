//! Initial states as sector-resolved amplitude vectors.
//!
//! Kets `|b1 b2 ... bN>` are read left to right as sites `1..=N`.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{enumerate_sector, BasisState, Sector};
use crate::Complex64;

const NORM_TOL: f64 = 1e-12;

/// A pure state known through its computational-basis components.
pub trait PureState {
    fn n_sites(&self) -> usize;

    /// Nonzero-support components as `(basis state, amplitude)` pairs.
    fn components(&self) -> Box<dyn Iterator<Item = (BasisState, Complex64)> + '_>;

    fn norm_sqr(&self) -> f64 {
        self.components().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Amplitudes over all `2^N` basis states, indexed by bit pattern.
    fn to_dense(&self) -> Vec<Complex64> {
        let mut dense = vec![Complex64::new(0.0, 0.0); 1 << self.n_sites()];
        for (s, a) in self.components() {
            dense[s.bits() as usize] = a;
        }
        dense
    }
}

#[derive(Clone, Debug)]
pub struct StateVector {
    sector: Arc<Sector>,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes without a normalization check; evolved states carry
    /// rounding drift that callers inspect via [`PureState::norm_sqr`].
    pub fn from_amplitudes(sector: Arc<Sector>, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::arg(format!(
                "{} amplitudes for a sector of dimension {}",
                amplitudes.len(),
                sector.dim()
            )));
        }
        Ok(StateVector { sector, amplitudes })
    }

    /// Like [`StateVector::from_amplitudes`] but requires unit norm.
    pub fn normalized(sector: Arc<Sector>, amplitudes: DVector<Complex64>) -> Result<Self> {
        let v = Self::from_amplitudes(sector, amplitudes)?;
        check_unit_norm(v.norm_sqr())?;
        Ok(v)
    }

    pub fn basis(sector: Arc<Sector>, state: BasisState) -> Result<Self> {
        let index = sector.index_of(state).ok_or_else(|| {
            Error::arg(format!(
                "{} is not in the {}-particle sector",
                state.ket(sector.n_sites()),
                sector.n_particles()
            ))
        })?;
        let mut amplitudes = DVector::zeros(sector.dim());
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { sector, amplitudes })
    }

    pub fn sector(&self) -> &Arc<Sector> {
        &self.sector
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, state: BasisState) -> Complex64 {
        self.sector
            .index_of(state)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amplitudes[i])
    }
}

impl PureState for StateVector {
    fn n_sites(&self) -> usize {
        self.sector.n_sites()
    }

    fn components(&self) -> Box<dyn Iterator<Item = (BasisState, Complex64)> + '_> {
        Box::new(self.sector.states().iter().copied().zip(self.amplitudes.iter().copied()))
    }
}

/// A state spread over several particle-number sectors, at most one block per
/// particle count, ordered by particle count.
#[derive(Clone, Debug)]
pub struct MultiSectorState {
    n_sites: usize,
    blocks: Vec<StateVector>,
}

impl MultiSectorState {
    pub fn new(n_sites: usize, mut blocks: Vec<StateVector>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::arg("a state needs at least one sector block"));
        }
        blocks.sort_by_key(|b| b.sector.n_particles());
        for w in blocks.windows(2) {
            if w[0].sector.n_particles() == w[1].sector.n_particles() {
                return Err(Error::arg(format!(
                    "two blocks for the {}-particle sector",
                    w[0].sector.n_particles()
                )));
            }
        }
        if let Some(b) = blocks.iter().find(|b| b.sector.n_sites() != n_sites) {
            return Err(Error::arg(format!(
                "block on {} sites in a {n_sites}-site state",
                b.sector.n_sites()
            )));
        }
        Ok(MultiSectorState { n_sites, blocks })
    }

    pub fn blocks(&self) -> &[StateVector] {
        &self.blocks
    }

    /// Squared norm carried by each block, in block order.
    pub fn block_weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.norm_sqr()).collect()
    }
}

impl From<StateVector> for MultiSectorState {
    fn from(v: StateVector) -> Self {
        MultiSectorState {
            n_sites: v.n_sites(),
            blocks: vec![v],
        }
    }
}

impl PureState for MultiSectorState {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn components(&self) -> Box<dyn Iterator<Item = (BasisState, Complex64)> + '_> {
        Box::new(self.blocks.iter().flat_map(|b| b.components()))
    }
}

pub(crate) fn check_unit_norm(norm_sqr: f64) -> Result<()> {
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::arg(format!("state norm^2 is {norm_sqr}, expected 1")));
    }
    Ok(())
}

fn require_even(n_sites: usize, what: &str) -> Result<()> {
    if n_sites == 0 || n_sites % 2 == 1 {
        return Err(Error::arg(format!(
            "{what} needs an even, nonzero number of sites, got {n_sites}"
        )));
    }
    Ok(())
}

/// `|1010...10>`: odd sites occupied, half filling.
pub fn neel(n_sites: usize) -> Result<StateVector> {
    require_even(n_sites, "the Neel state")?;
    let sites: Vec<usize> = (1..=n_sites).step_by(2).collect();
    let sector = Arc::new(enumerate_sector(n_sites, n_sites / 2)?);
    StateVector::basis(sector, BasisState::from_sites(&sites))
}

/// `|11..100..0>`: the left half of the chain filled.
pub fn max_incoherent(n_sites: usize) -> Result<StateVector> {
    require_even(n_sites, "the maximally incoherent state")?;
    let sites: Vec<usize> = (1..=n_sites / 2).collect();
    let sector = Arc::new(enumerate_sector(n_sites, n_sites / 2)?);
    StateVector::basis(sector, BasisState::from_sites(&sites))
}

/// Uniform superposition of all `2^N` occupation states. It mixes fermion
/// parities, so it is a formal state that parity superselection forbids.
pub fn max_coherent(n_sites: usize) -> Result<MultiSectorState> {
    if n_sites == 0 {
        return Err(Error::arg("the maximally coherent state needs at least one site"));
    }
    let amp = Complex64::new((0.5f64).powf(n_sites as f64 / 2.0), 0.0);
    let blocks = (0..=n_sites)
        .map(|k| {
            let sector = Arc::new(enumerate_sector(n_sites, k)?);
            let amplitudes = DVector::from_element(sector.dim(), amp);
            StateVector::from_amplitudes(sector, amplitudes)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiSectorState::new(n_sites, blocks)
}

/// `(|100..0> + |010..0> + ... + |00..01>) / sqrt(N)`.
pub fn w_state(n_sites: usize) -> Result<StateVector> {
    if n_sites == 0 {
        return Err(Error::arg("the W state needs at least one site"));
    }
    let sector = Arc::new(enumerate_sector(n_sites, 1)?);
    let amp = Complex64::new(1.0 / (n_sites as f64).sqrt(), 0.0);
    let amplitudes = DVector::from_element(n_sites, amp);
    StateVector::from_amplitudes(sector, amplitudes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Neel,
    MaxIncoherent,
    MaxCoherent,
    WState,
}

impl InitialState {
    pub fn prepare(self, n_sites: usize) -> Result<MultiSectorState> {
        Ok(match self {
            InitialState::Neel => neel(n_sites)?.into(),
            InitialState::MaxIncoherent => max_incoherent(n_sites)?.into(),
            InitialState::MaxCoherent => max_coherent(n_sites)?,
            InitialState::WState => w_state(n_sites)?.into(),
        })
    }

    /// Checks feasibility without building anything.
    pub fn validate(self, n_sites: usize) -> Result<()> {
        match self {
            InitialState::Neel => require_even(n_sites, "the Neel state"),
            InitialState::MaxIncoherent => require_even(n_sites, "the maximally incoherent state"),
            InitialState::MaxCoherent | InitialState::WState if n_sites == 0 => {
                Err(Error::arg("initial state needs at least one site"))
            }
            _ => Ok(()),
        }
    }

    pub fn violates_parity_superselection(self) -> bool {
        self == InitialState::MaxCoherent
    }
}
