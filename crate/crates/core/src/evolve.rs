//! Exact time evolution `|psi(t)> = V exp(-i diag(lambda) t) V^T |psi(0)>`
//! from a full eigendecomposition of each sector Hamiltonian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianMatrix;
use crate::states::{MultiSectorState, PureState, StateVector};
use crate::Complex64;

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    n_particles: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Decomposes a real symmetric matrix; eigenvalues come out ascending and
    /// eigenvector columns follow the same order.
    pub fn from_symmetric(matrix: DMatrix<f64>, n_particles: usize) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() {
            return Err(Error::arg(format!(
                "cannot decompose a {}x{} matrix",
                dim,
                matrix.ncols()
            )));
        }
        let max_abs = matrix.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let asymmetry = (&matrix - matrix.transpose()).amax();
        if !max_abs.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite entries in {dim}x{dim} Hamiltonian"
            )));
        }
        if asymmetry > 0.0 {
            return Err(Error::arg(format!(
                "matrix is not symmetric (max |H - H^T| = {asymmetry:e})"
            )));
        }
        let eig = SymmetricEigen::try_new(matrix, f64::EPSILON, 64 * dim + 1000).ok_or_else(
            || {
                Error::Numeric(format!(
                    "eigensolver did not converge on {dim}x{dim} matrix (max |H_ij| = {max_abs:e})"
                ))
            },
        )?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&i| eig.eigenvalues[i]));
        let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        if eigenvalues.iter().chain(eigenvectors.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "eigensolver produced non-finite output for {dim}x{dim} matrix (max |H_ij| = {max_abs:e})"
            )));
        }
        Ok(SpectralDecomposition {
            n_particles,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            self.eigenvectors[(r, c)] * self.eigenvalues[c]
        });
        scaled * self.eigenvectors.transpose()
    }

    /// `max |V^T V - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        (gram - DMatrix::identity(self.dim(), self.dim())).amax()
    }
}

pub fn decompose(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    SpectralDecomposition::from_symmetric(h.matrix().clone(), h.n_particles())
}

/// Evolution of one fixed initial block, with the eigenbasis overlaps
/// `V^T psi0` computed once and reused for every time.
pub struct Propagator<'a> {
    spectrum: &'a SpectralDecomposition,
    initial: StateVector,
    overlap_re: DVector<f64>,
    overlap_im: DVector<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(spectrum: &'a SpectralDecomposition, psi0: &StateVector) -> Result<Self> {
        if spectrum.dim() != psi0.amplitudes().len() {
            return Err(Error::arg(format!(
                "state of dimension {} cannot evolve under a {}-dimensional spectrum",
                psi0.amplitudes().len(),
                spectrum.dim()
            )));
        }
        if spectrum.n_particles() != psi0.sector().n_particles() {
            return Err(Error::arg(format!(
                "{}-particle state paired with a {}-particle spectrum",
                psi0.sector().n_particles(),
                spectrum.n_particles()
            )));
        }
        let v_t = spectrum.eigenvectors.transpose();
        let overlap_re = &v_t * psi0.amplitudes().map(|z| z.re);
        let overlap_im = &v_t * psi0.amplitudes().map(|z| z.im);
        Ok(Propagator {
            spectrum,
            initial: psi0.clone(),
            overlap_re,
            overlap_im,
        })
    }

    pub fn at(&self, t: f64) -> Result<StateVector> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::arg(format!("evolution time must be finite and >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(self.initial.clone());
        }
        let dim = self.spectrum.dim();
        let mut c_re = DVector::zeros(dim);
        let mut c_im = DVector::zeros(dim);
        for k in 0..dim {
            let (sin, cos) = (self.spectrum.eigenvalues[k] * t).sin_cos();
            let (a, b) = (self.overlap_re[k], self.overlap_im[k]);
            // (a + ib)(cos - i sin)
            c_re[k] = a * cos + b * sin;
            c_im[k] = b * cos - a * sin;
        }
        let v = &self.spectrum.eigenvectors;
        let re = v * c_re;
        let im = v * c_im;
        let amplitudes = DVector::from_iterator(
            dim,
            re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)),
        );
        StateVector::from_amplitudes(self.initial.sector().clone(), amplitudes)
    }
}

pub fn evolve_state(
    spectrum: &SpectralDecomposition,
    psi0: &StateVector,
    t: f64,
) -> Result<StateVector> {
    Propagator::new(spectrum, psi0)?.at(t)
}

/// Evolves every block with the decomposition of its own particle-number
/// sector.
pub fn evolve_multisector(
    spectra: &[SpectralDecomposition],
    psi0: &MultiSectorState,
    t: f64,
) -> Result<MultiSectorState> {
    let blocks = psi0
        .blocks()
        .iter()
        .map(|block| {
            let k = block.sector().n_particles();
            let spectrum = spectra
                .iter()
                .find(|s| s.n_particles() == k)
                .ok_or_else(|| Error::arg(format!("no decomposition for the {k}-particle block")))?;
            evolve_state(spectrum, block, t)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiSectorState::new(psi0.n_sites(), blocks)
}

/// Strictly increasing positive evolution times, in units of `1/J`.
///
/// Serialized as a plain list of times; deserializes from either such a list
/// or `{"t_min": .., "t_max": .., "n_points": ..}` (log spacing).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "Vec<f64>")]
pub struct TimeGrid {
    times: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Log {
        t_min: f64,
        t_max: f64,
        n_points: usize,
    },
    Explicit(Vec<f64>),
}

impl TryFrom<GridSpec> for TimeGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        match spec {
            GridSpec::Log {
                t_min,
                t_max,
                n_points,
            } => default_time_grid(t_min, t_max, n_points),
            GridSpec::Explicit(times) => TimeGrid::new(times),
        }
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(grid: TimeGrid) -> Self {
        grid.times
    }
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::arg("time grid is empty"));
        }
        if times.iter().any(|t| !t.is_finite()) || times[0] <= 0.0 {
            return Err(Error::arg("grid times must be finite and positive"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("grid times must be strictly increasing"));
        }
        Ok(TimeGrid { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

impl Default for TimeGrid {
    /// 61 log-spaced points on `[0.1, 1000]`.
    fn default() -> Self {
        default_time_grid(0.1, 1000.0, 61).expect("valid default grid")
    }
}

/// `n_points` logarithmically spaced times including both endpoints exactly.
pub fn default_time_grid(t_min: f64, t_max: f64, n_points: usize) -> Result<TimeGrid> {
    if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) {
        return Err(Error::arg(format!(
            "time range must satisfy 0 < t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::arg(format!("need at least 2 grid points, got {n_points}")));
    }
    let (lo, hi) = (t_min.log10(), t_max.log10());
    let step = (hi - lo) / (n_points - 1) as f64;
    let mut times: Vec<f64> = (0..n_points)
        .map(|k| 10f64.powf(lo + step * k as f64))
        .collect();
    times[0] = t_min;
    times[n_points - 1] = t_max;
    TimeGrid::new(times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hamiltonian, sample_disorder, ChainParams};
    use crate::hilbert::{enumerate_sector, BasisState};
    use crate::states::{max_coherent, neel};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_symmetric(dim: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn chain_h(n: usize, k: usize, seed: u64) -> HamiltonianMatrix {
        let sector = enumerate_sector(n, k).unwrap();
        build_hamiltonian(&ChainParams::new(n, 1.0, 2.0, 1.0), &sample_disorder(n, seed), &sector)
            .unwrap()
    }

    #[test]
    fn pauli_x_spectrum() {
        let d = SpectralDecomposition::from_symmetric(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            1,
        )
        .unwrap();
        assert_abs_diff_eq!(d.eigenvalues()[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigenvalues()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_matrix_sorts_eigenvalues() {
        let d = SpectralDecomposition::from_symmetric(
            DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0])),
            0,
        )
        .unwrap();
        assert_eq!(d.eigenvalues().as_slice(), &[-1.0, 2.0, 3.0]);
        // each column is a signed unit vector
        for c in 0..3 {
            let col = d.eigenvectors().column(c);
            assert_eq!(col.iter().filter(|x| x.abs() == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|x| **x == 0.0).count(), 2);
        }
        assert_eq!(d.eigenvectors()[(1, 0)].abs(), 1.0);
        assert_eq!(d.eigenvectors()[(2, 1)].abs(), 1.0);
        assert_eq!(d.eigenvectors()[(0, 2)].abs(), 1.0);
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..5 {
            let m = random_symmetric(6, seed);
            let d = SpectralDecomposition::from_symmetric(m.clone(), 0).unwrap();
            assert!((d.reconstruct() - m).amax() < 1e-10);
            assert!(d.orthogonality_error() < 1e-10);
            assert!(d.eigenvalues().as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let nan = DMatrix::from_element(2, 2, f64::NAN);
        assert!(matches!(
            SpectralDecomposition::from_symmetric(nan, 0),
            Err(Error::Numeric(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(SpectralDecomposition::from_symmetric(asym, 0).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let h = chain_h(6, 3, 1);
        let d = decompose(&h).unwrap();
        let psi0 = neel(6).unwrap();
        let psi = evolve_state(&d, &psi0, 0.0).unwrap();
        assert_eq!(psi.amplitudes(), psi0.amplitudes());
        assert!(evolve_state(&d, &psi0, -1.0).is_err());
    }

    #[test]
    fn two_level_rabi() {
        let j = 0.7;
        let sector = Arc::new(enumerate_sector(2, 1).unwrap());
        let d = SpectralDecomposition::from_symmetric(
            DMatrix::from_row_slice(2, 2, &[0.0, j, j, 0.0]),
            1,
        )
        .unwrap();
        let psi0 = StateVector::basis(sector, BasisState::from_sites(&[1])).unwrap();
        for &t in &[0.1, 1.3, 7.9, 250.0] {
            let psi = evolve_state(&d, &psi0, t).unwrap();
            let a = psi.amplitudes();
            assert_abs_diff_eq!(a[0].re, (j * t).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(a[0].im, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a[1].re, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a[1].im, -(j * t).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_energy_and_composition() {
        let h = chain_h(8, 4, 5);
        let d = decompose(&h).unwrap();
        assert!((d.reconstruct() - h.matrix()).amax() < 1e-10);
        let psi0 = neel(8).unwrap();
        let e0 = h.expectation(psi0.amplitudes().as_slice());
        for &t in &[0.5, 10.0, 100.0] {
            let psi = evolve_state(&d, &psi0, t).unwrap();
            assert!((psi.norm_sqr().sqrt() - 1.0).abs() < 1e-10);
            let e = h.expectation(psi.amplitudes().as_slice());
            assert!((e - e0).abs() < 1e-8 * h.norm_inf());
        }
        let (t1, t2) = (3.7, 41.2);
        let direct = evolve_state(&d, &psi0, t1 + t2).unwrap();
        let step = evolve_state(&d, &evolve_state(&d, &psi0, t1).unwrap(), t2).unwrap();
        assert!((direct.amplitudes() - step.amplitudes()).camax() < 1e-9);
    }

    #[test]
    fn multisector_matches_blockwise_and_conserves_weights() {
        let n = 5;
        let eps = sample_disorder(n, 9);
        let params = ChainParams::new(n, 1.0, 2.0, 1.0);
        let spectra: Vec<_> = (0..=n)
            .map(|k| {
                let sector = enumerate_sector(n, k).unwrap();
                decompose(&build_hamiltonian(&params, &eps, &sector).unwrap()).unwrap()
            })
            .collect();
        let psi0 = max_coherent(n).unwrap();
        let w0 = psi0.block_weights();
        let psi = evolve_multisector(&spectra, &psi0, 12.5).unwrap();
        for (w, w_t) in w0.iter().zip(psi.block_weights()) {
            assert!((w - w_t).abs() < 1e-10);
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        let single = evolve_state(&spectra[2], &psi0.blocks()[2], 12.5).unwrap();
        assert_eq!(psi.blocks()[2].amplitudes(), single.amplitudes());

        let unchanged = evolve_multisector(&spectra, &psi0, 0.0).unwrap();
        assert_eq!(unchanged.to_dense(), psi0.to_dense());
        assert!(matches!(
            evolve_multisector(&spectra[..3], &psi0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn log_grid() {
        let g = default_time_grid(0.1, 1000.0, 5).unwrap();
        let want = [0.1, 1.0, 10.0, 100.0, 1000.0];
        for (t, w) in g.times().iter().zip(want) {
            assert!((t - w).abs() <= 1e-12 * w);
        }
        assert_eq!(g.times()[0], 0.1);
        assert_eq!(g.times()[4], 1000.0);
        assert!(default_time_grid(1.0, 1.0, 2).is_err());
        assert!(default_time_grid(0.0, 1.0, 2).is_err());
        assert!(default_time_grid(0.1, 1.0, 1).is_err());
        let d = TimeGrid::default();
        assert_eq!(d.len(), 61);
        assert_eq!((d.times()[0], d.times()[60]), (0.1, 1000.0));
    }

    #[test]
    fn grid_serde_accepts_spec_or_list() {
        let g: TimeGrid = serde_json::from_str(r#"{"t_min":0.1,"t_max":10,"n_points":3}"#).unwrap();
        assert_eq!(g.len(), 3);
        let g2: TimeGrid = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(g, g2);
        assert!(serde_json::from_str::<TimeGrid>("[1.0, 0.5]").is_err());
    }
}
