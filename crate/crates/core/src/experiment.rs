//! Disorder-averaged quench protocol: per realization build the sector
//! Hamiltonians, decompose them, evolve the initial state over the time grid
//! and evaluate quantifiers; then fold the realizations in index order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{decompose, Propagator, SpectralDecomposition, TimeGrid};
use crate::hamiltonian::{
    build_hamiltonian, realization_seed, sample_disorder, ChainParams, HamiltonianMatrix,
};
use crate::quantifiers::{global_quantifiers, local_quantifiers, Quantity, QuantifierTriple};
use crate::states::{InitialState, MultiSectorState, PureState};

/// Largest chain the experiment driver accepts; sector dimensions grow as
/// `binomial(N, N/2)` and every sector is diagonalized densely.
pub const MAX_EXPERIMENT_SITES: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Whole chain, no bipartition.
    #[default]
    Global,
    /// Averages over contiguous windows of this many sites.
    Local(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub chain: ChainParams,
    pub initial_state: InitialState,
    pub mode: Mode,
    pub grid: TimeGrid,
    pub realizations: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        let n = self.chain.n_sites;
        if n > MAX_EXPERIMENT_SITES {
            return Err(Error::arg(format!(
                "n_sites {n} exceeds the supported maximum of {MAX_EXPERIMENT_SITES}"
            )));
        }
        self.initial_state.validate(n)?;
        if let Mode::Local(w) = self.mode {
            if w == 0 || w > n {
                return Err(Error::arg(format!(
                    "local window {w} must lie in 1..={n}"
                )));
            }
        }
        if self.realizations == 0 {
            return Err(Error::arg("need at least one disorder realization"));
        }
        Ok(())
    }
}

/// How realizations are scheduled. Results are bit-identical either way.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// rayon's current thread pool; falls back to sequential without the
    /// `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSem {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(r)`; zero when `r = 1`.
    pub sem: f64,
}

/// Worst deviations seen over all realizations and grid times.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `| ||psi(t)|| - 1 |`.
    pub max_norm_error: f64,
    /// `| <H>(t) - <H>(0) |`.
    pub max_energy_error: f64,
    /// Largest change of any particle-number block weight.
    pub max_sector_weight_error: f64,
}

impl ConservationReport {
    fn merge(self, other: ConservationReport) -> ConservationReport {
        ConservationReport {
            max_norm_error: self.max_norm_error.max(other.max_norm_error),
            max_energy_error: self.max_energy_error.max(other.max_energy_error),
            max_sector_weight_error: self.max_sector_weight_error.max(other.max_sector_weight_error),
        }
    }

    pub fn max_error(&self) -> f64 {
        self.max_norm_error
            .max(self.max_energy_error)
            .max(self.max_sector_weight_error)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub config: ExperimentConfig,
    pub times: Vec<f64>,
    pub coherence: Vec<MeanSem>,
    pub predictability: Vec<MeanSem>,
    pub entanglement: Vec<MeanSem>,
    pub seeds: Vec<u64>,
    pub conservation: ConservationReport,
    pub warnings: Vec<String>,
}

impl TrajectoryRecord {
    pub fn series(&self, quantity: Quantity) -> &[MeanSem] {
        match quantity {
            Quantity::Coherence => &self.coherence,
            Quantity::Predictability => &self.predictability,
            Quantity::Entanglement => &self.entanglement,
        }
    }

    pub fn means(&self, quantity: Quantity) -> Vec<f64> {
        self.series(quantity).iter().map(|m| m.mean).collect()
    }
}

/// Quantifier time series of one disorder realization.
#[derive(Clone, Debug)]
pub struct RealizationOutcome {
    pub seed: u64,
    pub triples: Vec<QuantifierTriple>,
    pub conservation: ConservationReport,
}

struct Block {
    hamiltonian: HamiltonianMatrix,
    spectrum: SpectralDecomposition,
}

pub fn simulate_realization(
    config: &ExperimentConfig,
    psi0: &MultiSectorState,
    index: usize,
) -> Result<RealizationOutcome> {
    let seed = realization_seed(config.master_seed, index as u64);
    let disorder = sample_disorder(config.chain.n_sites, seed);

    let blocks = psi0
        .blocks()
        .iter()
        .map(|b| {
            let hamiltonian = build_hamiltonian(&config.chain, &disorder, b.sector())?;
            let spectrum = decompose(&hamiltonian)?;
            Ok(Block {
                hamiltonian,
                spectrum,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let propagators = blocks
        .iter()
        .zip(psi0.blocks())
        .map(|(b, psi)| Propagator::new(&b.spectrum, psi))
        .collect::<Result<Vec<_>>>()?;

    let energy = |state: &MultiSectorState| -> f64 {
        blocks
            .iter()
            .zip(state.blocks())
            .map(|(b, psi)| b.hamiltonian.expectation(psi.amplitudes().as_slice()))
            .sum()
    };
    let energy0 = energy(psi0);
    let weights0 = psi0.block_weights();

    let mut conservation = ConservationReport::default();
    let mut triples = Vec::with_capacity(config.grid.len());
    for &t in config.grid.times() {
        let evolved = propagators
            .iter()
            .map(|p| p.at(t))
            .collect::<Result<Vec<_>>>()?;
        let state = MultiSectorState::new(psi0.n_sites(), evolved)?;

        let weight_error = state
            .block_weights()
            .iter()
            .zip(&weights0)
            .map(|(w, w0)| (w - w0).abs())
            .fold(0.0, f64::max);
        conservation = conservation.merge(ConservationReport {
            max_norm_error: (state.norm_sqr().sqrt() - 1.0).abs(),
            max_energy_error: (energy(&state) - energy0).abs(),
            max_sector_weight_error: weight_error,
        });
        if conservation.max_error().is_nan() || conservation.max_error() >= 1e-6 {
            return Err(Error::Numeric(format!(
                "evolution lost conservation at t = {t} in realization {index}: {conservation:?}"
            )));
        }

        triples.push(match config.mode {
            Mode::Global => global_quantifiers(&state)?,
            Mode::Local(w) => local_quantifiers(&state, w)?,
        });
    }
    Ok(RealizationOutcome {
        seed,
        triples,
        conservation,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<TrajectoryRecord> {
    run_experiment_with(config, Execution::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, execution: Execution) -> Result<TrajectoryRecord> {
    config.validate()?;
    let psi0 = config.initial_state.prepare(config.chain.n_sites)?;
    let outcomes = run_realizations(config, &psi0, execution)?;
    Ok(aggregate(config, &outcomes))
}

#[cfg(feature = "parallel")]
fn run_realizations(
    config: &ExperimentConfig,
    psi0: &MultiSectorState,
    execution: Execution,
) -> Result<Vec<RealizationOutcome>> {
    use rayon::prelude::*;
    match execution {
        Execution::Parallel => (0..config.realizations)
            .into_par_iter()
            .map(|k| simulate_realization(config, psi0, k))
            .collect(),
        Execution::Sequential => (0..config.realizations)
            .map(|k| simulate_realization(config, psi0, k))
            .collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_realizations(
    config: &ExperimentConfig,
    psi0: &MultiSectorState,
    _execution: Execution,
) -> Result<Vec<RealizationOutcome>> {
    (0..config.realizations)
        .map(|k| simulate_realization(config, psi0, k))
        .collect()
}

fn mean_sem(values: impl Iterator<Item = f64> + Clone, r: usize) -> MeanSem {
    let mean = values.clone().sum::<f64>() / r as f64;
    let sem = if r > 1 {
        let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1) as f64;
        (var / r as f64).sqrt()
    } else {
        0.0
    };
    MeanSem { mean, sem }
}

/// Folds realizations in index order, so the result does not depend on how
/// they were scheduled.
pub fn aggregate(config: &ExperimentConfig, outcomes: &[RealizationOutcome]) -> TrajectoryRecord {
    let r = outcomes.len();
    let n_times = config.grid.len();
    let series = |q: Quantity| -> Vec<MeanSem> {
        (0..n_times)
            .map(|i| mean_sem(outcomes.iter().map(move |o| o.triples[i].get(q)), r))
            .collect()
    };
    let mut warnings = Vec::new();
    if config.initial_state.violates_parity_superselection() {
        warnings.push(
            "initial state superposes even and odd fermion parity; it violates parity \
             superselection and is evolved as a formal state vector"
                .to_string(),
        );
    }
    TrajectoryRecord {
        config: config.clone(),
        times: config.grid.times().to_vec(),
        coherence: series(Quantity::Coherence),
        predictability: series(Quantity::Predictability),
        entanglement: series(Quantity::Entanglement),
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        conservation: outcomes
            .iter()
            .fold(ConservationReport::default(), |acc, o| acc.merge(o.conservation)),
        warnings,
    }
}

/// One run per `(W, g)` cell, `W` outer and `g` inner. All cells share the
/// master seed, so realization `k` sees the same `eps_i` for every `g` at a
/// fixed `W`.
pub fn run_sweep(
    base: &ExperimentConfig,
    disorder_values: &[f64],
    interaction_values: &[f64],
) -> Result<Vec<TrajectoryRecord>> {
    run_sweep_with(base, disorder_values, interaction_values, Execution::default())
}

pub fn run_sweep_with(
    base: &ExperimentConfig,
    disorder_values: &[f64],
    interaction_values: &[f64],
    execution: Execution,
) -> Result<Vec<TrajectoryRecord>> {
    let cells = sweep_cells(base, disorder_values, interaction_values)?;
    cells
        .iter()
        .map(|c| run_experiment_with(c, execution))
        .collect()
}

/// The validated per-cell configurations of a sweep, in run order.
pub fn sweep_cells(
    base: &ExperimentConfig,
    disorder_values: &[f64],
    interaction_values: &[f64],
) -> Result<Vec<ExperimentConfig>> {
    if disorder_values.is_empty() {
        return Err(Error::arg("sweep needs at least one W value"));
    }
    if interaction_values.is_empty() {
        return Err(Error::arg("sweep needs at least one g value"));
    }
    let mut cells = Vec::with_capacity(disorder_values.len() * interaction_values.len());
    for &w in disorder_values {
        for &g in interaction_values {
            let mut cell = base.clone();
            cell.chain.disorder = w;
            cell.chain.interaction = g;
            cell.validate()?;
            cells.push(cell);
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::default_time_grid;

    fn config(n: usize, state: InitialState, mode: Mode, r: usize) -> ExperimentConfig {
        ExperimentConfig {
            chain: ChainParams::new(n, 1.0, 2.0, 1.0),
            initial_state: state,
            mode,
            grid: default_time_grid(0.1, 100.0, 9).unwrap(),
            realizations: r,
            master_seed: 17,
        }
    }

    #[test]
    fn single_realization_has_zero_sem() {
        let cfg = config(6, InitialState::Neel, Mode::Global, 1);
        let rec = run_experiment(&cfg).unwrap();
        let psi0 = cfg.initial_state.prepare(6).unwrap();
        let single = simulate_realization(&cfg, &psi0, 0).unwrap();
        for (i, m) in rec.predictability.iter().enumerate() {
            assert_eq!(m.mean, single.triples[i].predictability);
            assert_eq!(m.sem, 0.0);
        }
        assert_eq!(rec.seeds, vec![single.seed]);
    }

    #[test]
    fn averaged_ccr_and_conservation() {
        for mode in [Mode::Global, Mode::Local(2), Mode::Local(3)] {
            let rec = run_experiment(&config(8, InitialState::Neel, mode, 4)).unwrap();
            for i in 0..rec.times.len() {
                let s = rec.coherence[i].mean + rec.predictability[i].mean + rec.entanglement[i].mean;
                assert!((s - 1.0).abs() < 1e-8, "sum {s} at {}", rec.times[i]);
                if mode == Mode::Global {
                    assert_eq!(rec.entanglement[i].mean, 0.0);
                }
            }
            assert!(rec.conservation.max_error() < 1e-8, "{:?}", rec.conservation);
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let cfg = config(6, InitialState::MaxCoherent, Mode::Local(2), 5);
        let a = run_experiment_with(&cfg, Execution::Sequential).unwrap();
        let b = run_experiment_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.warnings.len(), 1);
    }

    #[test]
    fn infeasible_configs_fail_early() {
        let mut cfg = config(7, InitialState::Neel, Mode::Global, 2);
        assert!(matches!(run_experiment(&cfg), Err(Error::InvalidArgument(_))));
        cfg.chain.n_sites = 6;
        cfg.mode = Mode::Local(7);
        assert!(run_experiment(&cfg).is_err());
        cfg.mode = Mode::Global;
        cfg.realizations = 0;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn sweep_pairs_disorder_across_g() {
        let base = config(6, InitialState::Neel, Mode::Global, 3);
        let recs = run_sweep(&base, &[2.0], &[0.0, 1.0]).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].seeds, recs[1].seeds);
        assert_eq!(recs[0].config.chain.interaction, 0.0);
        assert_eq!(recs[1].config.chain.interaction, 1.0);
        assert!(run_sweep(&base, &[], &[0.0]).is_err());
        assert!(run_sweep(&base, &[1.0], &[]).is_err());
        assert_eq!(sweep_cells(&base, &[2.0, 6.0, 10.0], &[0.0, 1.0]).unwrap().len(), 6);
    }

    #[test]
    fn w_state_ignores_interaction() {
        let base = config(8, InitialState::WState, Mode::Local(2), 3);
        let recs = run_sweep(&base, &[10.0], &[0.0, 1.0]).unwrap();
        for q in Quantity::ALL {
            for (a, b) in recs[0].series(q).iter().zip(recs[1].series(q)) {
                assert!((a.mean - b.mean).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mode_serde_shapes() {
        assert_eq!(serde_json::to_string(&Mode::Global).unwrap(), r#""global""#);
        assert_eq!(serde_json::to_string(&Mode::Local(2)).unwrap(), r#"{"local":2}"#);
        let m: Mode = serde_json::from_str(r#"{"local":3}"#).unwrap();
        assert_eq!(m, Mode::Local(3));
    }
}
