//! Occupation-number basis states and particle-number sectors.
//!
//! Site `i` (1-based, left to right) is stored in bit `i - 1`, so site 1 is
//! the least significant bit. The fermionic mode ordering used for all sign
//! conventions is the site order `1..=N`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest chain length representable by the bit encoding.
pub const MAX_SITES: usize = 62;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState(pub u64);

impl BasisState {
    /// Basis state with the given 1-based sites occupied.
    pub fn from_sites(sites: &[usize]) -> Self {
        BasisState(sites.iter().fold(0u64, |acc, &s| acc | 1 << (s - 1)))
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_occupied(self, site: usize) -> bool {
        self.0 >> (site - 1) & 1 == 1
    }

    #[inline]
    pub fn occupation(self, site: usize) -> f64 {
        (self.0 >> (site - 1) & 1) as f64
    }

    #[inline]
    pub fn particle_count(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Moves the particle on `from` to `to` without any sign bookkeeping.
    #[inline]
    pub fn hopped(self, from: usize, to: usize) -> Self {
        BasisState(self.0 ^ (1 << (from - 1)) ^ (1 << (to - 1)))
    }

    /// Ket label `b1 b2 ... bN`, site 1 first.
    pub fn ket(self, n_sites: usize) -> String {
        (1..=n_sites)
            .map(|s| if self.is_occupied(s) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// All basis states of `n_sites` with exactly `n_particles` particles, in
/// ascending integer order.
#[derive(Clone, Debug)]
pub struct Sector {
    n_sites: usize,
    n_particles: usize,
    states: Vec<BasisState>,
    index_of: HashMap<BasisState, usize>,
}

impl Sector {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> BasisState {
        self.states[index]
    }

    pub fn index_of(&self, state: BasisState) -> Option<usize> {
        self.index_of.get(&state).copied()
    }
}

impl PartialEq for Sector {
    fn eq(&self, other: &Self) -> bool {
        self.n_sites == other.n_sites && self.n_particles == other.n_particles
    }
}

/// Enumerates a fixed-particle-number sector with Gosper's hack.
pub fn enumerate_sector(n_sites: usize, n_particles: usize) -> Result<Sector> {
    if n_sites > MAX_SITES {
        return Err(Error::arg(format!(
            "chain of {n_sites} sites exceeds the {MAX_SITES}-site limit"
        )));
    }
    if n_particles > n_sites {
        return Err(Error::arg(format!(
            "{n_particles} particles do not fit on {n_sites} sites"
        )));
    }
    let limit = 1u64 << n_sites;
    let mut states = Vec::with_capacity(binomial(n_sites, n_particles) as usize);
    if n_particles == 0 {
        states.push(BasisState(0));
    } else {
        let mut v = (1u64 << n_particles) - 1;
        while v < limit {
            states.push(BasisState(v));
            let t = v | (v - 1);
            v = (t + 1) | (((!t & t.wrapping_add(1)) - 1) >> (v.trailing_zeros() + 1));
        }
    }
    let index_of = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    Ok(Sector {
        n_sites,
        n_particles,
        states,
        index_of,
    })
}

/// Every particle-number sector of a chain; together they span the full
/// `2^N`-dimensional Fock space.
#[derive(Clone, Debug)]
pub struct FullSpace {
    n_sites: usize,
    sectors: Vec<Sector>,
}

impl FullSpace {
    pub fn new(n_sites: usize) -> Result<Self> {
        let sectors = (0..=n_sites)
            .map(|k| enumerate_sector(n_sites, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(FullSpace { n_sites, sectors })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn dim(&self) -> usize {
        self.sectors.iter().map(Sector::dim).sum()
    }
}

/// Fermionic sign of moving a particle from site `from` to the empty site
/// `to`: `(-1)^(occupied sites strictly between them)`.
pub fn hop_sign(state: BasisState, from: usize, to: usize) -> Result<i8> {
    if from == 0 || to == 0 || from > MAX_SITES || to > MAX_SITES {
        return Err(Error::arg(format!("sites {from} and {to} must be 1-based")));
    }
    if from == to {
        return Err(Error::Logic(format!("hop from site {from} onto itself")));
    }
    if !state.is_occupied(from) {
        return Err(Error::Logic(format!("site {from} is empty in {state}")));
    }
    if state.is_occupied(to) {
        return Err(Error::Logic(format!("site {to} is occupied in {state}")));
    }
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    // bits lo .. hi-2 hold sites lo+1 .. hi-1
    let between = ((1u64 << (hi - 1)) - 1) & !((1u64 << lo) - 1);
    Ok(if (state.0 & between).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    })
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}
