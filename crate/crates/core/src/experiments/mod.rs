//! Scenario orchestration: fidelity traces, zeta sweeps, cat maps and thermal sweeps.
//!
//! Points of a sweep are independent jobs on a worker pool; results come back in
//! input order and every number is written with 17 significant digits.

pub mod csv;

use log::{info, warn};
use rayon::prelude::*;

use crate::conditioning::{self, CatResult};
use crate::config::{CavityStart, Engine, Scenario, SweepAxis};
use crate::dynamics::{
    self, effective_spec, evolve_observed, frame_transform, full_spec, mechanical_charge, EvolveOptions, EvolveStats,
    Sector, SourceFrame, SteadyOptions,
};
use crate::fock::{self, DensityMatrix, HilbertSpace, PureState, LEAKAGE_WARN};
use crate::metrics::{self, FisherGrid, MetricsRecord, WignerSearch};
use crate::model::{self, DerivedParams, ModelParams, TransferParams};
use crate::states::{self, PcsSpec};
use crate::{Error, Result, C64};

/// Default zeta grid: 0 to 2 in steps of 0.1.
pub fn default_zeta_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 10.0).collect()
}

pub const DEFAULT_NBAR: [f64; 8] = [0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0];

/// Relaxation time of the cavity-mediated pair pumping, `gamma_a / (4 |g|^2)`.
pub fn pump_time(p: &ModelParams, d: &DerivedParams) -> f64 {
    p.gamma_a / (4.0 * d.g.norm_sqr())
}

/// Drift time of the phonon-number difference under zero-temperature damping.
pub fn damping_time(p: &ModelParams) -> f64 {
    1.0 / (p.gamma_b1 + p.gamma_b2)
}

/// Horizon at which the quasi-stationary mechanical state is read off: the geometric
/// mean of the pump and damping times. `None` without mechanical damping, where the
/// dark state is an exact null vector.
pub fn steady_horizon(p: &ModelParams, d: &DerivedParams) -> Option<f64> {
    (p.gamma_b1 + p.gamma_b2 > 0.0).then(|| (pump_time(p, d) * damping_time(p)).sqrt())
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Two-mode mechanical state with its provenance.
#[derive(Clone, Debug)]
pub struct MechanicalState {
    pub rho: DensityMatrix,
    /// Largest top-two-level population of any mode of the underlying solve.
    pub leakage: f64,
    /// Readout time; `None` for a null-space solution.
    pub horizon: Option<f64>,
}

/// Full-model initial state in `frame` with mechanical vacuum.
fn initial_state(space: &HilbertSpace, d: &DerivedParams, frame: SourceFrame, start: CavityStart) -> Result<DensityMatrix> {
    // Cavity amplitude in the frame: the mean field sits at alpha in the rotating
    // frame and at 0 in the displaced frames.
    let amp = match (frame, start) {
        (SourceFrame::Rotating, CavityStart::MeanField) => d.alpha,
        (SourceFrame::Rotating, CavityStart::Empty) => C64::new(0.0, 0.0),
        (_, CavityStart::MeanField) => C64::new(0.0, 0.0),
        (_, CavityStart::Empty) => -d.alpha,
    };
    let cav = states::coherent(amp, &space.subspace(&[0])?)?;
    Ok(cav.tensor(&states::vacuum(&space.subspace(&[1, 2])?)).to_density())
}

fn cavity_space(cutoffs: [usize; 3]) -> Result<HilbertSpace> {
    HilbertSpace::new(cutoffs.to_vec())
}

/// Solver options from the scenario settings.
pub fn evolve_options(sc: &Scenario) -> EvolveOptions {
    EvolveOptions { tol: sc.solver.tol, ..Default::default() }
}

/// Full-model runs beyond this horizon need `--long`.
pub const SHORT_FULL_HORIZON: f64 = 5.0 / 2.5e-3;

/// Quasi-stationary mechanical state of `model`.
///
/// Effective engine, or full engine without `long`: effective model from the vacuum
/// to `steady_horizon`, or its dark-state null vector in the zero-charge block when
/// the mechanics is undamped. Full engine with `long`: full model to the same horizon
/// and back through `frame_transform`.
pub fn steady_mechanics(sc: &Scenario, model: &ModelParams) -> Result<MechanicalState> {
    let d = model::derive(model)?;
    let space = cavity_space(sc.cutoffs)?;
    let use_full = sc.engine == Engine::Full && sc.solver.long;
    let horizon = steady_horizon(model, &d);
    let (rho3, horizon) = match (horizon, use_full) {
        (None, false) => {
            let spec = effective_spec(model, &d, &space)?;
            let sector = Sector::Block(mechanical_charge(&space)?, 0);
            let report = dynamics::steady_state_with(&spec, &SteadyOptions { sector, ..Default::default() })?;
            (report.rho, None)
        }
        (h, full) => {
            let t_end = h.unwrap_or(1e3 * pump_time(model, &d));
            let opts = evolve_options(sc);
            let (spec, rho0, frame) = if full {
                let frame = sc.solver.frame;
                (full_spec(model, &d, &space, frame)?, initial_state(&space, &d, frame, sc.solver.cavity_start)?, Some(frame))
            } else {
                (effective_spec(model, &d, &space)?, states::vacuum(&space).to_density(), None)
            };
            let mut last = None;
            evolve_observed(&spec, &rho0, &[0.0, t_end], &opts, |t, rho, _| {
                if t == t_end {
                    last = Some(rho.clone());
                }
                Ok(())
            })?;
            let mut rho = last.ok_or_else(|| Error::Precondition("no state at the horizon".into()))?;
            if let Some(frame) = frame {
                rho = frame_transform(&rho, t_end, model, &d, frame)?;
            }
            (rho, Some(t_end))
        }
    };
    let leakage = max_of(&rho3.leakage());
    let rho = fock::partial_trace(&rho3, &[1, 2])?;
    Ok(MechanicalState { rho, leakage, horizon })
}

/// Analytic pair-coherent state on the mechanical cutoffs.
pub fn pure_mechanics(sc: &Scenario, zeta: C64) -> Result<MechanicalState> {
    let space = HilbertSpace::new(vec![sc.cutoffs[1], sc.cutoffs[2]])?;
    let psi = states::pcs(PcsSpec::new(zeta), &space)?;
    let rho = psi.to_density();
    let leakage = max_of(&rho.leakage());
    Ok(MechanicalState { rho, leakage, horizon: None })
}

fn pcs_target(rho: &DensityMatrix, zeta: C64) -> Result<PureState> {
    states::pcs(PcsSpec::new(zeta), rho.space())
}

/// All two-mode metrics of a mechanical state against `PCS(zeta)`.
pub fn two_mode_metrics(rho: &DensityMatrix, zeta: C64) -> Result<MetricsRecord> {
    let grid = metrics::steering::default_outcome_grid();
    let reid = [(1, 1), (2, 2)]
        .into_iter()
        .map(|(m, n)| Ok((m, n, metrics::reid(rho, m, n, &grid)?)))
        .collect::<Result<Vec<_>>>()?;
    let record = MetricsRecord {
        params: Vec::new(),
        fidelity: Some(states::fidelity_pure(rho, &pcs_target(rho, zeta)?)?),
        nongaussianity: Some(metrics::nongaussianity(rho)?),
        w_min: Some(metrics::wigner_min(rho, &WignerSearch::default())?.0),
        negativity: Some(metrics::negativity(rho)?),
        reid,
        fisher: Some(metrics::fisher_steering(rho, &FisherGrid::default())?.e_f),
        cat_fidelity: None,
        cat_w_min: None,
    };
    record.validate()?;
    Ok(record)
}

/// Metrics plus the leakage of the solve behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub metrics: MetricsRecord,
    pub leakage: f64,
}

impl SweepRecord {
    pub fn leakage_warning(&self) -> bool {
        self.leakage > LEAKAGE_WARN
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Precondition(format!("worker pool: {e}")))
}

/// Runs `job` over `items` on `workers` threads; output order follows input order.
pub fn run_parallel<T, R, F>(items: &[T], workers: usize, job: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    pool(workers)?.install(|| items.par_iter().map(&job).collect())
}

/// One row of a fidelity trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub fidelity: f64,
    pub leakage: f64,
    pub trace_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityTrace {
    pub engine: Engine,
    pub zeta: C64,
    pub points: Vec<TracePoint>,
    pub stats: EvolveStats,
}

fn time_grid(t_end: f64, step: f64) -> Vec<f64> {
    let n = (t_end / step).round().max(1.0) as usize;
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

/// Fidelity of the mechanical state to `PCS(zeta)` along an evolution from the vacuum.
///
/// The effective engine integrates the effective model; the full engine integrates the
/// full model in the configured frame and maps each output through `frame_transform`.
pub fn run_fidelity_trace(sc: &Scenario) -> Result<FidelityTrace> {
    let engine = match sc.engine {
        Engine::Pure => return Err(Error::Precondition("a fidelity trace needs the effective or full engine".into())),
        e => e,
    };
    if engine == Engine::Full && sc.solver.t_end > SHORT_FULL_HORIZON && !sc.solver.long {
        return Err(Error::Precondition(format!(
            "full-model horizon {} exceeds {SHORT_FULL_HORIZON}; pass --long",
            sc.solver.t_end
        )));
    }
    let m = &sc.model;
    let d = model::derive(m)?;
    let space = cavity_space(sc.cutoffs)?;
    let mech = space.subspace(&[1, 2])?;
    let target = states::pcs(PcsSpec::new(d.zeta), &mech)?;
    let frame = sc.solver.frame;
    let (spec, rho0) = match engine {
        Engine::Full => (full_spec(m, &d, &space, frame)?, initial_state(&space, &d, frame, sc.solver.cavity_start)?),
        _ => (effective_spec(m, &d, &space)?, states::vacuum(&space).to_density()),
    };
    let grid = time_grid(sc.solver.t_end, sc.solver.t_step);
    let mut points = Vec::with_capacity(grid.len());
    let stats = evolve_observed(&spec, &rho0, &grid, &evolve_options(sc), |t, rho, diag| {
        let in_frame = if engine == Engine::Full { frame_transform(rho, t, m, &d, frame)? } else { rho.clone() };
        let rb = fock::partial_trace(&in_frame, &[1, 2])?;
        let fidelity = states::fidelity_pure(&rb, &target)?;
        info!("t = {t:.1}: F = {fidelity:.6}");
        points.push(TracePoint { t, fidelity, leakage: max_of(&diag.leakage), trace_drift: diag.trace_drift });
        Ok(())
    })?;
    Ok(FidelityTrace { engine, zeta: d.zeta, points, stats })
}

fn zeta_values(sc: &Scenario) -> Result<Vec<f64>> {
    match &sc.sweep {
        Some(s) if s.axis == SweepAxis::Zeta => Ok(s.values.clone()),
        Some(s) => Err(Error::Config(format!("sweep axis '{}' where zeta was expected", s.axis.name()))),
        None => Ok(default_zeta_grid()),
    }
}

/// Model with the drive rescaled so that `-eps_d / g = zeta` at fixed `g`.
pub fn model_at_zeta(m: &ModelParams, zeta: f64) -> Result<ModelParams> {
    let d = model::derive(m)?;
    Ok(ModelParams { eps_d: model::eps_d_for_zeta(C64::new(zeta, 0.0), &d), ..m.clone() })
}

/// Mechanical state of the scenario's engine at `zeta`.
pub fn mechanics_at_zeta(sc: &Scenario, zeta: f64) -> Result<MechanicalState> {
    match sc.engine {
        Engine::Pure => pure_mechanics(sc, C64::new(zeta, 0.0)),
        _ => steady_mechanics(sc, &model_at_zeta(&sc.model, zeta)?),
    }
}

/// Per zeta: fidelity, non-Gaussianity, Wigner minimum, negativity, Reid (1,1) and
/// (2,2), Fisher steering.
pub fn run_zeta_sweep(sc: &Scenario, workers: usize) -> Result<Vec<SweepRecord>> {
    let zetas = zeta_values(sc)?;
    run_parallel(&zetas, workers, |&zeta| {
        let state = mechanics_at_zeta(sc, zeta)?;
        let mut metrics = two_mode_metrics(&state.rho, C64::new(zeta, 0.0))?;
        metrics.params = vec![("zeta".into(), zeta)];
        info!("zeta = {zeta}: F = {:?}", metrics.fidelity);
        if state.leakage > LEAKAGE_WARN {
            warn!("zeta = {zeta}: leakage {:.3e}", state.leakage);
        }
        Ok(SweepRecord { metrics, leakage: state.leakage })
    })
}

/// Transfer parameters of the scenario, or the defaults.
pub fn transfer_params(sc: &Scenario) -> TransferParams {
    sc.transfer.clone().unwrap_or_else(TransferParams::reference)
}

/// Sampled single-mode Wigner function on the square grid `x + i p`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerMap {
    pub axis: Vec<f64>,
    /// Row-major in `(x, p)`.
    pub values: Vec<f64>,
}

pub fn wigner_map(rho: &DensityMatrix, half_width: f64, points: usize) -> Result<WignerMap> {
    let axis: Vec<f64> = (0..points).map(|k| -half_width + 2.0 * half_width * k as f64 / (points - 1) as f64).collect();
    let grid: Vec<Vec<C64>> = axis.iter().flat_map(|&x| axis.iter().map(move |&p| vec![C64::new(x, p)])).collect();
    let values = metrics::wigner(rho, &grid)?;
    Ok(WignerMap { axis, values })
}

#[derive(Clone, Debug)]
pub struct CatMap {
    pub engine: Engine,
    pub zeta: f64,
    pub cat: CatResult,
    pub map: WignerMap,
    pub leakage: f64,
}

/// Cat pipeline on the pure and steady states for every zeta of the scenario.
pub fn run_cat_maps(sc: &Scenario, workers: usize) -> Result<Vec<CatMap>> {
    let zetas = zeta_values(sc)?;
    let steady = if sc.engine == Engine::Pure { Engine::Full } else { sc.engine };
    let jobs: Vec<(Engine, f64)> =
        [Engine::Pure, steady].into_iter().flat_map(|e| zetas.iter().map(move |&z| (e, z))).collect();
    let tp = transfer_params(sc);
    run_parallel(&jobs, workers, |&(engine, zeta)| {
        let state = mechanics_at_zeta(&Scenario { engine, ..sc.clone() }, zeta)?;
        let cat = conditioning::prepare_cat(&state.rho, &tp, sc.cat.x, C64::new(zeta, 0.0))?;
        info!("{} zeta = {zeta}: F_cat = {:.6}", engine.name(), cat.fidelity);
        let map = wigner_map(&cat.rho, sc.cat.wigner_half_width, sc.cat.wigner_points)?;
        Ok(CatMap { engine, zeta, cat, map, leakage: state.leakage })
    })
}

fn nbar_values(sc: &Scenario) -> Result<Vec<f64>> {
    match &sc.sweep {
        Some(s) if s.axis == SweepAxis::Nbar => Ok(s.values.clone()),
        Some(s) => Err(Error::Config(format!("sweep axis '{}' where nbar was expected", s.axis.name()))),
        None => Ok(DEFAULT_NBAR.to_vec()),
    }
}

/// Per thermal occupation: the two-mode metrics of the steady state and its cat.
pub fn run_thermal_sweep(sc: &Scenario, workers: usize) -> Result<Vec<SweepRecord>> {
    let nbars = nbar_values(sc)?;
    let zeta = model::derive(&sc.model)?.zeta;
    let tp = transfer_params(sc);
    run_parallel(&nbars, workers, |&nbar| {
        let m = sc.model.clone().with_nbar(nbar);
        let state = steady_mechanics(sc, &m)?;
        let mut metrics = two_mode_metrics(&state.rho, zeta)?;
        let cat = conditioning::prepare_cat(&state.rho, &tp, sc.cat.x, zeta)?;
        metrics.cat_fidelity = Some(cat.fidelity);
        metrics.cat_w_min = Some(cat.w_min);
        metrics.params = vec![("nbar".into(), nbar)];
        metrics.validate()?;
        info!("nbar = {nbar}: F = {:?}, F_cat = {:.6}", metrics.fidelity, cat.fidelity);
        Ok(SweepRecord { metrics, leakage: state.leakage })
    })
}
