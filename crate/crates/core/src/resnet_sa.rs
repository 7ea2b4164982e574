//! Model-mismatch experiments: training data from theoretical-pattern
//! annealing, and annealing on the true pattern where each candidate is
//! judged by `G + ΔG̃`, the theoretical gain plus the predicted residual.

use std::cell::RefCell;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::po_field::{FarFieldDirection, FeedModel, FieldVector, PatternModel, QuadratureSettings, ReflectorGeometry};
use crate::residual_net::{GainSample, ResidualPredictor};
use crate::weights::{anneal_stream, chain_rng, AnnealOutcome, SaConfig, Trajectory, WeightVector};

/// Annealing objectives clamp gains here so an exact null stays finite.
pub const GAIN_FLOOR_DB: f64 = -300.0;

/// Theoretical and true patterns on one geometry, evaluated at one target.
#[derive(Debug, Clone)]
pub struct MismatchScenario {
    geometry: Arc<ReflectorGeometry>,
    theoretical: PatternModel,
    true_model: PatternModel,
    target: FarFieldDirection,
    m_levels: usize,
    theoretical_field: FieldVector,
    true_field: FieldVector,
}

/// Gains of one weight vector at the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullDepth {
    pub theoretical_db: f64,
    pub true_db: f64,
}

impl MismatchScenario {
    pub fn new(
        geometry: Arc<ReflectorGeometry>,
        theoretical_feed: FeedModel,
        true_feed: FeedModel,
        target: FarFieldDirection,
        quadrature: QuadratureSettings,
        m_levels: usize,
    ) -> Result<Self> {
        WeightVector::uniform(0, m_levels)?;
        let theoretical = PatternModel::new(geometry.clone(), theoretical_feed, quadrature)?;
        let true_model = PatternModel::new(geometry.clone(), true_feed, quadrature)?;
        let theoretical_field = theoretical.field_vector(target);
        let true_field = true_model.field_vector(target);
        Ok(Self {
            geometry,
            theoretical,
            true_model,
            target,
            m_levels,
            theoretical_field,
            true_field,
        })
    }

    pub fn geometry(&self) -> &ReflectorGeometry {
        &self.geometry
    }

    pub fn theoretical_model(&self) -> &PatternModel {
        &self.theoretical
    }

    pub fn true_model(&self) -> &PatternModel {
        &self.true_model
    }

    pub fn target(&self) -> FarFieldDirection {
        self.target
    }

    pub fn m_levels(&self) -> usize {
        self.m_levels
    }

    pub fn n_elements(&self) -> usize {
        self.geometry.element_count()
    }

    pub fn theoretical_field(&self) -> &FieldVector {
        &self.theoretical_field
    }

    pub fn true_field(&self) -> &FieldVector {
        &self.true_field
    }

    fn check(&self, w: &WeightVector) -> Result<()> {
        if w.m_levels() != self.m_levels {
            return Err(Error::InvalidWeights(format!(
                "scenario uses M = {}, weights use M = {}",
                self.m_levels,
                w.m_levels()
            )));
        }
        Ok(())
    }

    pub fn theoretical_gain(&self, w: &WeightVector) -> Result<f64> {
        self.check(w)?;
        let f = &self.theoretical_field;
        Ok(f.gain_of_field(f.total_field(w)?))
    }

    /// The gain a measurement of the distorted antenna would report.
    pub fn true_gain(&self, w: &WeightVector) -> Result<f64> {
        self.check(w)?;
        let f = &self.true_field;
        Ok(f.gain_of_field(f.total_field(w)?))
    }

    pub fn evaluate_null_depth(&self, w: &WeightVector) -> Result<NullDepth> {
        Ok(NullDepth {
            theoretical_db: self.theoretical_gain(w)?,
            true_db: self.true_gain(w)?,
        })
    }
}

pub fn evaluate_null_depth(scenario: &MismatchScenario, w: &WeightVector) -> Result<NullDepth> {
    scenario.evaluate_null_depth(w)
}

/// Predicts the exact residual, turning ResNet-SA into annealing on the true pattern.
#[derive(Debug, Clone, Copy)]
pub struct OracleResidual<'a>(pub &'a MismatchScenario);

impl ResidualPredictor for OracleResidual<'_> {
    fn predict_residual(&self, w: &WeightVector, theoretical_gain_db: f64) -> Result<f64> {
        Ok(self.0.true_gain(w)? - theoretical_gain_db)
    }
}

/// Predicts no mismatch, turning ResNet-SA into theoretical annealing.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroResidual;

impl ResidualPredictor for ZeroResidual {
    fn predict_residual(&self, _: &WeightVector, _: f64) -> Result<f64> {
        Ok(0.0)
    }
}

/// Additive Gaussian error on the "measured" true gains.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementNoise {
    pub sigma_db: f64,
    pub seed: u64,
}

/// Stream offset separating dataset chains from evaluation chains, which
/// run on stream 0 of their seed.
const DATASET_STREAM_BASE: u64 = 1;

fn floored(g: f64) -> f64 {
    g.max(GAIN_FLOOR_DB)
}

/// Anneals the theoretical gain at the target.
pub fn theoretical_sa(scenario: &MismatchScenario, config: &SaConfig) -> Result<AnnealOutcome> {
    theoretical_sa_stream(scenario, config, 0)
}

fn theoretical_sa_stream(scenario: &MismatchScenario, config: &SaConfig, stream: u64) -> Result<AnnealOutcome> {
    let field = scenario.theoretical_field();
    anneal_stream(scenario.n_elements(), scenario.m_levels(), config, stream, |w| {
        field
            .total_field(w)
            .map(|e| floored(field.gain_of_field(e)))
            .unwrap_or(f64::NAN)
    })
}

/// Anneals the true gain directly, as if every candidate could be measured.
pub fn true_pattern_sa(scenario: &MismatchScenario, config: &SaConfig) -> Result<AnnealOutcome> {
    let field = scenario.true_field();
    anneal_stream(scenario.n_elements(), scenario.m_levels(), config, 0, |w| {
        field
            .total_field(w)
            .map(|e| floored(field.gain_of_field(e)))
            .unwrap_or(f64::NAN)
    })
}

/// Runs `n_trajectories` theoretical-gain chains and records every proposed
/// weight vector with its theoretical and (optionally noisy) true gain.
/// Chains run concurrently; the output order is chain-major and fixed.
pub fn generate_dataset(
    scenario: &MismatchScenario,
    sa_config: &SaConfig,
    n_trajectories: usize,
    noise: &MeasurementNoise,
) -> Result<Vec<GainSample>> {
    if !(noise.sigma_db >= 0.0 && noise.sigma_db.is_finite()) {
        return Err(Error::InvalidTraining(format!(
            "noise sigma {} must be non-negative",
            noise.sigma_db
        )));
    }
    let chunks: Vec<Vec<GainSample>> = (0..n_trajectories as u64)
        .into_par_iter()
        .map(|t| {
            let outcome = theoretical_sa_stream(scenario, sa_config, DATASET_STREAM_BASE + t)?;
            let normal = Normal::new(0.0, noise.sigma_db.max(f64::MIN_POSITIVE)).expect("valid sigma");
            let mut rng = chain_rng(noise.seed, t);
            outcome
                .trajectory
                .candidates()
                .map(|(w, _)| {
                    let g = scenario.theoretical_gain(&w)?;
                    let mut measured = scenario.true_gain(&w)?;
                    if noise.sigma_db > 0.0 {
                        measured += normal.sample(&mut rng);
                    }
                    Ok(GainSample::new(w, g, measured))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Per-iteration gains of the chain state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GainTrace {
    pub theoretical_db: Vec<f64>,
    pub true_db: Vec<f64>,
    /// `G + ΔG̃` for ResNet-SA; equals `theoretical_db` for plain SA.
    pub predicted_db: Vec<f64>,
    pub accepted: Vec<bool>,
}

impl GainTrace {
    pub fn len(&self) -> usize {
        self.theoretical_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theoretical_db.is_empty()
    }

    /// `iter, G_db, Gtrue_db, Gpred_db, accepted`.
    pub fn write_csv<W: Write>(&self, out: &mut W, header_comments: &[String]) -> Result<()> {
        for line in header_comments {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "iter,G_db,Gtrue_db,Gpred_db,accepted")?;
        for k in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                k + 1,
                self.theoretical_db[k],
                self.true_db[k],
                self.predicted_db[k],
                self.accepted[k] as u8
            )?;
        }
        Ok(())
    }

    /// RMS of `predicted − true` over the last quarter of iterations.
    pub fn final_quartile_rms_db(&self) -> f64 {
        let start = self.len() - self.len() / 4;
        let tail = start..self.len();
        let n = tail.len().max(1) as f64;
        (tail
            .map(|k| (self.predicted_db[k] - self.true_db[k]).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    }
}

fn trace_states(
    scenario: &MismatchScenario,
    trajectory: &Trajectory,
    predicted: impl Fn(&WeightVector, f64) -> f64,
) -> Result<GainTrace> {
    let mut trace = GainTrace::default();
    for (w, step) in trajectory.states() {
        let g = scenario.theoretical_gain(&w)?;
        trace.theoretical_db.push(g);
        trace.true_db.push(scenario.true_gain(&w)?);
        trace.predicted_db.push(predicted(&w, step.current_objective));
        trace.accepted.push(step.accepted);
    }
    Ok(trace)
}

/// One ResNet-SA chain and its logged gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ResnetSaRun {
    pub outcome: AnnealOutcome,
    pub trace: GainTrace,
    /// Gains of the lowest-predicted weight vector.
    pub final_depth: NullDepth,
}

/// Annealing in which acceptance compares predicted true gains
/// `G̃ = G + ΔG̃`. Theoretical gains are exact; true gains are computed only
/// after the chain finishes, for the log.
pub fn resnet_sa_optimize<P: ResidualPredictor + ?Sized>(
    scenario: &MismatchScenario,
    predictor: &P,
    sa_config: &SaConfig,
) -> Result<ResnetSaRun> {
    let outcome = resnet_sa_chain(scenario, predictor, sa_config)?;
    let trace = trace_states(scenario, &outcome.trajectory, |_, objective| objective)?;
    let final_depth = scenario.evaluate_null_depth(&outcome.best)?;
    Ok(ResnetSaRun {
        outcome,
        trace,
        final_depth,
    })
}

/// The bare chain of [`resnet_sa_optimize`], without any true-gain logging.
pub fn resnet_sa_chain<P: ResidualPredictor + ?Sized>(
    scenario: &MismatchScenario,
    predictor: &P,
    sa_config: &SaConfig,
) -> Result<AnnealOutcome> {
    let field = scenario.theoretical_field();
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let outcome = anneal_stream(scenario.n_elements(), scenario.m_levels(), sa_config, 0, |w| {
        let predicted = field
            .total_field(w)
            .map(|e| floored(field.gain_of_field(e)))
            .and_then(|g| Ok(floored(g + predictor.predict_residual(w, g)?)));
        match predicted {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    })?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}

/// Theoretical SA and ResNet-SA from the same seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Theoretical gain and true gain of the theoretical-SA chain state.
    pub sa_trace: GainTrace,
    pub resnet_trace: GainTrace,
    pub sa_weights: WeightVector,
    pub resnet_weights: WeightVector,
    pub sa_depth: NullDepth,
    pub resnet_depth: NullDepth,
    pub seed: u64,
}

impl ExperimentResult {
    /// How much deeper ResNet-SA's true null is than that of the
    /// theoretically optimized weights (positive is better).
    pub fn improvement_db(&self) -> f64 {
        self.sa_depth.true_db - self.resnet_depth.true_db
    }

    /// How much shallower the theoretical-SA null is on the true pattern.
    pub fn degradation_db(&self) -> f64 {
        self.sa_depth.true_db - self.sa_depth.theoretical_db
    }
}

pub fn run_comparison<P: ResidualPredictor + ?Sized>(
    scenario: &MismatchScenario,
    predictor: &P,
    sa_config: &SaConfig,
) -> Result<ExperimentResult> {
    let sa = theoretical_sa(scenario, sa_config)?;
    let sa_trace = trace_states(scenario, &sa.trajectory, |_, objective| objective)?;
    let sa_depth = scenario.evaluate_null_depth(&sa.best)?;
    let resnet = resnet_sa_optimize(scenario, predictor, sa_config)?;
    Ok(ExperimentResult {
        sa_trace,
        resnet_trace: resnet.trace,
        sa_weights: sa.best,
        resnet_weights: resnet.outcome.best,
        sa_depth,
        resnet_depth: resnet.final_depth,
        seed: sa_config.seed,
    })
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Uniformly random weight vectors, for spot checks.
pub fn random_weights<R: Rng>(scenario: &MismatchScenario, rng: &mut R) -> Result<WeightVector> {
    WeightVector::random(scenario.n_elements(), scenario.m_levels(), rng)
}
