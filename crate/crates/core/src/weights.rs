//! Quantized RIS weight vectors and simulated annealing over them.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::po_field::{FarFieldDirection, FieldVector};

/// Largest `M` representable in the base-M text encoding (digits `0-9a-z`).
pub const MAX_LEVELS: usize = 36;

/// Generator used for every annealing chain.
pub type ChainRng = Xoshiro256PlusPlus;

/// Independent stream `stream` of the generator seeded with `seed`; streams
/// are separated by 2^128 draws.
pub fn chain_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    for _ in 0..stream {
        rng.jump();
    }
    rng
}

/// `N` phase indices over `M` levels; element `n` realizes `e^{j2πk_n/M}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVector {
    indices: Vec<u8>,
    m_levels: usize,
}

impl WeightVector {
    pub fn new(indices: Vec<u8>, m_levels: usize) -> Result<Self> {
        if !(2..=MAX_LEVELS).contains(&m_levels) {
            return Err(Error::InvalidWeights(format!(
                "M must lie in 2..={MAX_LEVELS}, got {m_levels}"
            )));
        }
        if let Some(bad) = indices.iter().find(|&&k| k as usize >= m_levels) {
            return Err(Error::InvalidWeights(format!("index {bad} not below M = {m_levels}")));
        }
        Ok(Self { indices, m_levels })
    }

    /// All weights equal to one.
    pub fn uniform(n: usize, m_levels: usize) -> Result<Self> {
        Self::new(vec![0; n], m_levels)
    }

    pub fn random<R: Rng>(n: usize, m_levels: usize, rng: &mut R) -> Result<Self> {
        let indices = (0..n).map(|_| rng.gen_range(0..m_levels) as u8).collect();
        Self::new(indices, m_levels)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn m_levels(&self) -> usize {
        self.m_levels
    }

    pub fn phase_indices(&self) -> &[u8] {
        &self.indices
    }

    pub fn level(&self, n: usize) -> usize {
        self.indices[n] as usize
    }

    pub fn set_level(&mut self, n: usize, level: usize) {
        assert!(level < self.m_levels, "level {level} out of range");
        self.indices[n] = level as u8;
    }

    /// Phase angle `2πk_n/M` of element `n`.
    pub fn phase(&self, n: usize) -> f64 {
        2.0 * PI * self.indices[n] as f64 / self.m_levels as f64
    }

    /// The `M` points of the quantization set, exact on quarter turns.
    pub fn phasor_table(&self) -> Vec<Complex64> {
        level_phasors(self.m_levels)
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        let table = self.phasor_table();
        self.indices.iter().map(|&k| table[k as usize]).collect()
    }

    pub fn hamming(&self, other: &WeightVector) -> usize {
        self.indices.iter().zip(&other.indices).filter(|(a, b)| a != b).count()
    }

    /// One base-M digit per element.
    pub fn to_base_m_string(&self) -> String {
        self.indices
            .iter()
            .map(|&k| char::from_digit(k as u32, self.m_levels as u32).unwrap())
            .collect()
    }

    pub fn from_base_m_string(s: &str, m_levels: usize) -> Result<Self> {
        if !(2..=MAX_LEVELS).contains(&m_levels) {
            return Err(Error::InvalidWeights(format!("M must lie in 2..={MAX_LEVELS}")));
        }
        let indices = s
            .chars()
            .map(|c| {
                c.to_digit(m_levels as u32)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::InvalidWeights(format!("'{c}' is not a base-{m_levels} digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices, m_levels)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_base_m_string())
    }
}

fn level_phasors(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| {
            if (4 * k) % m == 0 {
                match 4 * k / m {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, 1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, -1.0),
                }
            } else {
                Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)
            }
        })
        .collect()
}

/// `min ‖Aw − y‖²` over `w ∈ 𝒲ᴺ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullingProblem {
    rows: Vec<Vec<Complex64>>,
    rhs: Vec<Complex64>,
    m_levels: usize,
    target: Option<FarFieldDirection>,
}

impl NullingProblem {
    pub fn new(rows: Vec<Vec<Complex64>>, rhs: Vec<Complex64>, m_levels: usize) -> Result<Self> {
        if rows.is_empty() || rows.len() != rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: rhs.len(),
            });
        }
        let n = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        if !(2..=MAX_LEVELS).contains(&m_levels) {
            return Err(Error::InvalidWeights(format!("M must lie in 2..={MAX_LEVELS}")));
        }
        Ok(Self {
            rows,
            rhs,
            m_levels,
            target: None,
        })
    }

    /// Single-direction nulling: `A = e_{ψ,φ}ᵀ`, `y = −E_f^{s,co}`.
    pub fn from_field_vector(fv: &FieldVector, m_levels: usize) -> Result<Self> {
        let mut p = Self::new(vec![fv.element_copol.clone()], vec![-fv.fixed_copol], m_levels)?;
        p.target = Some(fv.direction);
        Ok(p)
    }

    pub fn n_elements(&self) -> usize {
        self.rows[0].len()
    }

    pub fn m_levels(&self) -> usize {
        self.m_levels
    }

    pub fn target(&self) -> Option<FarFieldDirection> {
        self.target
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    pub fn cost(&self, w: &WeightVector) -> Result<f64> {
        if w.len() != self.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: self.n_elements(),
                got: w.len(),
            });
        }
        if w.m_levels() != self.m_levels {
            return Err(Error::InvalidWeights(format!(
                "weights use M = {}, problem uses M = {}",
                w.m_levels(),
                self.m_levels
            )));
        }
        let table = w.phasor_table();
        Ok(self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, y)| {
                let aw = row
                    .iter()
                    .zip(w.phase_indices())
                    .fold(Complex64::new(0.0, 0.0), |acc, (a, &k)| acc + a * table[k as usize]);
                (aw - y).norm_sqr()
            })
            .sum())
    }
}

pub fn cost(problem: &NullingProblem, w: &WeightVector) -> Result<f64> {
    problem.cost(w)
}

/// Draws the (element, level) pair of one single-coordinate move.
fn propose<R: Rng>(rng: &mut R, n: usize, m: usize) -> (usize, usize) {
    let element = rng.gen_range(0..n);
    let level = rng.gen_range(0..m);
    (element, level)
}

/// Copy of `w` with one uniformly chosen element set to a uniformly chosen level.
pub fn neighbor<R: Rng>(w: &WeightVector, rng: &mut R) -> WeightVector {
    let (element, level) = propose(rng, w.len(), w.m_levels());
    let mut next = w.clone();
    next.set_level(element, level);
    next
}

/// Cooling schedule and chain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaConfig {
    pub iterations: usize,
    /// `T` in the schedule `[1, 1/2, …, 1/T]`. Long chains of tiny moves
    /// (thousands of elements) need a long schedule; small problems anneal
    /// best with a short one.
    pub schedule_len: usize,
    pub seed: u64,
    /// Random vectors sampled at startup to scale the schedule.
    pub scale_samples: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            iterations: 4000,
            schedule_len: 300,
            seed: 1,
            scale_samples: 100,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidAnnealConfig("iterations must be at least 1".into()));
        }
        if self.schedule_len == 0 {
            return Err(Error::InvalidAnnealConfig("schedule length must be at least 1".into()));
        }
        if self.scale_samples < 2 {
            return Err(Error::InvalidAnnealConfig("scale_samples must be at least 2".into()));
        }
        Ok(())
    }

    /// `[1, 1/2, …, 1/T]`.
    pub fn schedule(&self) -> Vec<f64> {
        (1..=self.schedule_len).map(|k| 1.0 / k as f64).collect()
    }

    pub fn steps_per_temperature(&self) -> usize {
        self.iterations.div_ceil(self.schedule_len)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// One iteration of a chain: the proposed move and the outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealStep {
    pub element: u32,
    pub level: u8,
    pub candidate_objective: f64,
    pub accepted: bool,
    /// Objective of the chain state after the decision.
    pub current_objective: f64,
    pub temperature: f64,
}

/// Complete record of a chain, compact enough to replay every visited vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: WeightVector,
    pub initial_objective: f64,
    pub temperature_scale: f64,
    pub steps: Vec<AnnealStep>,
}

impl Trajectory {
    /// Every proposed vector `w^(k+1)` with its step record.
    pub fn candidates(&self) -> impl Iterator<Item = (WeightVector, &AnnealStep)> + '_ {
        let mut state = self.initial.clone();
        self.steps.iter().map(move |step| {
            let mut candidate = state.clone();
            candidate.set_level(step.element as usize, step.level as usize);
            if step.accepted {
                state = candidate.clone();
            }
            (candidate, step)
        })
    }

    /// The chain state after every step.
    pub fn states(&self) -> impl Iterator<Item = (WeightVector, &AnnealStep)> + '_ {
        let mut state = self.initial.clone();
        self.steps.iter().map(move |step| {
            if step.accepted {
                state.set_level(step.element as usize, step.level as usize);
            }
            (state.clone(), step)
        })
    }

    pub fn final_state(&self) -> WeightVector {
        let mut state = self.initial.clone();
        for step in self.steps.iter().filter(|s| s.accepted) {
            state.set_level(step.element as usize, step.level as usize);
        }
        state
    }

    /// Running minimum of the objective over the initial state and all
    /// accepted states.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = self.initial_objective;
        self.steps
            .iter()
            .map(|s| {
                best = best.min(s.current_objective);
                best
            })
            .collect()
    }

    /// `iter, objective, accepted, phase_indices` for every proposed vector.
    pub fn write_csv<W: Write>(&self, out: &mut W, header_comments: &[String]) -> Result<()> {
        for line in header_comments {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "iter,objective,accepted,phase_indices")?;
        for (k, (w, step)) in self.candidates().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                k + 1,
                step.candidate_objective,
                step.accepted as u8,
                w.to_base_m_string()
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome {
    /// Lowest-objective vector the chain occupied.
    pub best: WeightVector,
    pub best_objective: f64,
    pub trajectory: Trajectory,
}

/// Metropolis chain over `𝒲ᴺ` with the schedule `T_k = σ/k`, where `σ` is the
/// objective's spread over random vectors and `k` advances every
/// `⌈iterations/T⌉` steps.
pub fn anneal<F>(n: usize, m_levels: usize, config: &SaConfig, objective: F) -> Result<AnnealOutcome>
where
    F: FnMut(&WeightVector) -> f64,
{
    anneal_stream(n, m_levels, config, 0, objective)
}

/// [`anneal`] driven by stream `stream` of the configured seed.
pub fn anneal_stream<F>(
    n: usize,
    m_levels: usize,
    config: &SaConfig,
    stream: u64,
    mut objective: F,
) -> Result<AnnealOutcome>
where
    F: FnMut(&WeightVector) -> f64,
{
    config.validate()?;
    if n == 0 {
        return Err(Error::InvalidWeights("no elements to optimize".into()));
    }
    let mut rng = chain_rng(config.seed, stream);

    let samples: Vec<f64> = (0..config.scale_samples)
        .map(|_| WeightVector::random(n, m_levels, &mut rng).map(|w| objective(&w)))
        .collect::<Result<_>>()?;
    let temperature_scale = spread(&samples);

    let mut state = WeightVector::random(n, m_levels, &mut rng)?;
    let mut current = objective(&state);
    let initial = state.clone();
    let initial_objective = current;
    let mut best = state.clone();
    let mut best_objective = current;

    let schedule = config.schedule();
    let per_temperature = config.steps_per_temperature();
    let mut steps = Vec::with_capacity(config.iterations);

    for k in 0..config.iterations {
        let temperature = temperature_scale * schedule[(k / per_temperature).min(schedule.len() - 1)];
        let (element, level) = propose(&mut rng, n, m_levels);
        let previous = state.level(element);
        state.set_level(element, level);
        let candidate = objective(&state);
        let accepted = if candidate <= current {
            true
        } else {
            let p = (-(candidate - current) / temperature).exp();
            rng.gen::<f64>() < p
        };
        if accepted {
            current = candidate;
            if current < best_objective {
                best_objective = current;
                best = state.clone();
            }
        } else {
            state.set_level(element, previous);
        }
        steps.push(AnnealStep {
            element: element as u32,
            level: level as u8,
            candidate_objective: candidate,
            accepted,
            current_objective: current,
            temperature,
        });
    }

    Ok(AnnealOutcome {
        best,
        best_objective,
        trajectory: Trajectory {
            initial,
            initial_objective,
            temperature_scale,
            steps,
        },
    })
}

/// Sample standard deviation; falls back to 1 when degenerate.
fn spread(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return 1.0;
    }
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (finite.len() - 1) as f64;
    let sd = var.sqrt();
    if sd.is_finite() && sd > 0.0 {
        sd
    } else {
        1.0
    }
}

/// Annealing over the problem's search space with a caller-supplied objective.
pub fn sa_optimize<F>(problem: &NullingProblem, config: &SaConfig, objective: F) -> Result<AnnealOutcome>
where
    F: FnMut(&WeightVector) -> f64,
{
    anneal(problem.n_elements(), problem.m_levels(), config, objective)
}

/// Upper bound on `Mᴺ` for [`brute_force_min`].
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

/// Exact minimizer by enumeration in lexicographic order; the first
/// minimizer found wins ties.
pub fn brute_force_min(problem: &NullingProblem) -> Result<(WeightVector, f64)> {
    let n = problem.n_elements();
    let m = problem.m_levels();
    let too_large = Error::SearchSpaceTooLarge { elements: n, levels: m };
    let total = (m as u64).checked_pow(n as u32).ok_or(too_large)?;
    if total > ENUMERATION_LIMIT {
        return Err(Error::SearchSpaceTooLarge { elements: n, levels: m });
    }
    let mut w = WeightVector::uniform(n, m)?;
    let mut best = w.clone();
    let mut best_cost = problem.cost(&w)?;
    for _ in 1..total {
        // odometer increment, last element fastest
        for pos in (0..n).rev() {
            let next = w.level(pos) + 1;
            if next < m {
                w.set_level(pos, next);
                break;
            }
            w.set_level(pos, 0);
        }
        let c = problem.cost(&w)?;
        if c < best_cost {
            best_cost = c;
            best = w.clone();
        }
    }
    Ok((best, best_cost))
}
