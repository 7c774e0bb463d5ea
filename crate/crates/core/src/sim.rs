//! Monte Carlo coincidence counts for the heralded one-click experiment and
//! the reduction counts → probabilities → assemblage → steering parameter.
//!
//! Each trial is heralded by one of Bob's POVM detectors. Per setting x the
//! heralded outcomes (a, b) follow p(a,b|x) ∝ ε_B[b] Tr[(E_{a|x} ⊗ E_b) ρ],
//! drawn as one multinomial over the 2·|POVM| cells. Coincidences C_b count
//! clicks of Alice together with detector b; singles S_b count detector b.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhs::mle::{exact_probabilities, mle_assemblage, ProbabilityTables};
use crate::linalg::trace_product;
use crate::quantum::{overlap_from_delta, steered_assemblage, Assemblage, MeasurementFamily, Povm, SchmidtState};
use crate::witness::{optimal_witness, closed_form};

/// Heralded counts of one run, `coincidences[x][b]` and `singles[x][b]`.
///
/// Counts are stored as reals so that expectation values can be fed through
/// the same reduction as sampled integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CountRecord", into = "CountRecord")]
pub struct CountData {
    coincidences: Vec<Vec<f64>>,
    singles: Vec<Vec<f64>>,
    heralds: u64,
    seed: Option<u64>,
    schmidt: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CountRecord {
    coincidences: Vec<Vec<f64>>,
    singles: Vec<Vec<f64>>,
    heralds: u64,
    seed: Option<u64>,
    schmidt: Vec<f64>,
}

impl TryFrom<CountRecord> for CountData {
    type Error = Error;
    fn try_from(r: CountRecord) -> Result<Self> {
        CountData::new(r.coincidences, r.singles, r.heralds, r.seed, r.schmidt)
    }
}

impl From<CountData> for CountRecord {
    fn from(c: CountData) -> Self {
        CountRecord {
            coincidences: c.coincidences,
            singles: c.singles,
            heralds: c.heralds,
            seed: c.seed,
            schmidt: c.schmidt,
        }
    }
}

impl CountData {
    /// `schmidt` records the Schmidt coefficients of the source state.
    pub fn new(
        coincidences: Vec<Vec<f64>>,
        singles: Vec<Vec<f64>>,
        heralds: u64,
        seed: Option<u64>,
        schmidt: Vec<f64>,
    ) -> Result<Self> {
        if coincidences.is_empty() || coincidences.len() != singles.len() {
            return Err(Error::DimensionMismatch("coincidences and singles need the same settings".into()));
        }
        let outcomes = singles[0].len();
        for (x, (c, s)) in coincidences.iter().zip(&singles).enumerate() {
            if c.len() != outcomes || s.len() != outcomes {
                return Err(Error::DimensionMismatch(format!("setting {x}: ragged count rows")));
            }
            for (b, (&cb, &sb)) in c.iter().zip(s).enumerate() {
                if !(cb >= 0.0 && cb.is_finite() && sb.is_finite()) {
                    return Err(Error::param("count", cb, format!("setting {x}, detector {b}: counts must be finite and >= 0")));
                }
                if cb > sb {
                    return Err(Error::param(
                        "coincidences",
                        cb,
                        format!("setting {x}, detector {b}: exceeds singles {sb}"),
                    ));
                }
            }
        }
        Ok(CountData {
            coincidences,
            singles,
            heralds,
            seed,
            schmidt,
        })
    }

    pub fn settings(&self) -> usize {
        self.singles.len()
    }

    pub fn outcomes(&self) -> usize {
        self.singles[0].len()
    }

    pub fn coincidences(&self) -> &[Vec<f64>] {
        &self.coincidences
    }

    pub fn singles(&self) -> &[Vec<f64>] {
        &self.singles
    }

    pub fn heralds(&self) -> u64 {
        self.heralds
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn schmidt(&self) -> &[f64] {
        &self.schmidt
    }

    /// ΣC / ΣS for setting x.
    pub fn click_fraction(&self, x: usize) -> Result<f64> {
        let c: f64 = self.coincidences[x].iter().sum();
        let s: f64 = self.singles[x].iter().sum();
        if s <= 0.0 {
            return Err(Error::ZeroDenominator(format!("setting {x}: no singles")));
        }
        Ok(c / s)
    }
}

/// Heralded cell probabilities `[x][a * |POVM| + b]`.
fn cell_probabilities(
    state: &SchmidtState,
    family: &MeasurementFamily,
    povm: &Povm,
    bob_efficiency: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if bob_efficiency.len() != povm.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} detector efficiencies for {} POVM outcomes",
            bob_efficiency.len(),
            povm.len()
        )));
    }
    if let Some(e) = bob_efficiency.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::param("bob_efficiency", *e, "must lie in [0, 1]"));
    }
    let asm = steered_assemblage(state, family)?;
    if asm.dim() != povm.dim() {
        return Err(Error::DimensionMismatch("POVM acts on a different space than the assemblage".into()));
    }
    asm.members()
        .iter()
        .enumerate()
        .map(|(x, m)| {
            let mut cells: Vec<f64> = m
                .iter()
                .flat_map(|sigma| {
                    povm.effects()
                        .iter()
                        .zip(bob_efficiency)
                        .map(|(e, eb)| eb * trace_product(e, sigma).re.max(0.0))
                })
                .collect();
            let total: f64 = cells.iter().sum();
            if total <= 0.0 {
                return Err(Error::ZeroDenominator(format!("setting {x}: no trial can be heralded")));
            }
            cells.iter_mut().for_each(|p| *p /= total);
            Ok(cells)
        })
        .collect()
}

fn counts_from_cells(cells: &[Vec<f64>], outcomes: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let coincidences: Vec<Vec<f64>> = cells.iter().map(|c| c[..outcomes].to_vec()).collect();
    let singles = cells
        .iter()
        .map(|c| (0..outcomes).map(|b| c[b] + c[outcomes + b]).collect())
        .collect();
    (coincidences, singles)
}

fn check_heralds(heralds: u64) -> Result<()> {
    if heralds == 0 {
        return Err(Error::param("heralds", 0.0, "at least one herald per setting"));
    }
    Ok(())
}

/// Multinomial(n, p) by sequential conditional binomials.
fn multinomial(rng: &mut ChaCha8Rng, n: u64, p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (k, &pk) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == p.len() {
            out[k] = left as f64;
            break;
        }
        let q = if mass > 0.0 { (pk / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, q).expect("q is clamped to [0, 1]").sample(rng);
        out[k] = draw as f64;
        left -= draw;
        mass -= pk;
    }
    out
}

/// Sampled counts with `heralds` trials per setting; identical for equal
/// arguments.
pub fn simulate_counts(
    state: &SchmidtState,
    family: &MeasurementFamily,
    povm: &Povm,
    bob_efficiency: &[f64],
    heralds: u64,
    seed: u64,
) -> Result<CountData> {
    check_heralds(heralds)?;
    let cells = cell_probabilities(state, family, povm, bob_efficiency)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled: Vec<Vec<f64>> = cells
        .iter()
        .enumerate()
        .map(|(x, p)| {
            rng.set_stream(x as u64);
            multinomial(&mut rng, heralds, p)
        })
        .collect();
    let (c, s) = counts_from_cells(&sampled, povm.len());
    CountData::new(c, s, heralds, Some(seed), state.coeffs().to_vec())
}

/// Expected counts, heralds × cell probability.
pub fn expected_counts(
    state: &SchmidtState,
    family: &MeasurementFamily,
    povm: &Povm,
    bob_efficiency: &[f64],
    heralds: u64,
) -> Result<CountData> {
    check_heralds(heralds)?;
    let n = heralds as f64;
    let cells: Vec<Vec<f64>> = cell_probabilities(state, family, povm, bob_efficiency)?
        .into_iter()
        .map(|p| p.into_iter().map(|v| v * n).collect())
        .collect();
    let (c, s) = counts_from_cells(&cells, povm.len());
    CountData::new(c, s, heralds, None, state.coeffs().to_vec())
}

/// P(+|x) = ΣC/ΣS, P(b|+,x) = C_b/ΣC and P(b|∅,x) = (S_b − C_b)/(ΣS − ΣC).
pub fn probabilities_from_counts(c: &CountData) -> Result<ProbabilityTables> {
    let mut p_a = Vec::with_capacity(c.settings());
    let mut p_b = Vec::with_capacity(c.settings());
    for x in 0..c.settings() {
        let cx = &c.coincidences[x];
        let sx = &c.singles[x];
        let sum_c: f64 = cx.iter().sum();
        let sum_s: f64 = sx.iter().sum();
        let sum_n = sum_s - sum_c;
        if sum_s <= 0.0 {
            return Err(Error::ZeroDenominator(format!("setting {x}: no singles")));
        }
        if sum_c <= 0.0 {
            return Err(Error::ZeroDenominator(format!("setting {x}: no coincidences")));
        }
        if sum_n <= 0.0 {
            return Err(Error::ZeroDenominator(format!("setting {x}: no null events")));
        }
        p_a.push([sum_c / sum_s, sum_n / sum_s]);
        p_b.push([
            cx.iter().map(|v| v / sum_c).collect(),
            cx.iter().zip(sx).map(|(cv, sv)| (sv - cv) / sum_n).collect(),
        ]);
    }
    Ok(ProbabilityTables {
        p_a,
        p_b_given_a: p_b,
    })
}

/// Setting average of ΣC/ΣS along the axis plus along its orthogonal
/// complement.
pub fn estimate_efficiency(axis: &CountData, orthogonal: &CountData) -> Result<f64> {
    if axis.heralds != orthogonal.heralds {
        return Err(Error::MetadataMismatch(format!(
            "heralds differ: {} vs {}",
            axis.heralds, orthogonal.heralds
        )));
    }
    if axis.schmidt != orthogonal.schmidt {
        return Err(Error::MetadataMismatch("records come from different states".into()));
    }
    if axis.settings() != orthogonal.settings() || axis.outcomes() != orthogonal.outcomes() {
        return Err(Error::MetadataMismatch("records have different shapes".into()));
    }
    let mut total = 0.0;
    for x in 0..axis.settings() {
        total += axis.click_fraction(x)? + orthogonal.click_fraction(x)?;
    }
    Ok(total / axis.settings() as f64)
}

pub const DEFAULT_HERALDS: u64 = 1_000_000;

fn default_heralds() -> u64 {
    DEFAULT_HERALDS
}

fn default_repetitions() -> usize {
    10
}

fn default_bob_efficiency() -> Vec<f64> {
    vec![1.0; 3]
}

/// Two-setting run of the maximally or partially entangled source against
/// Bob's trine measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub deltas: Vec<f64>,
    #[serde(default = "default_heralds")]
    pub heralds: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bob_efficiency")]
    pub bob_efficiency: Vec<f64>,
    /// Replace sampled counts by their expectations.
    #[serde(default)]
    pub exact: bool,
}

impl PipelineConfig {
    pub fn new(alpha: f64, epsilon: f64, deltas: Vec<f64>) -> Self {
        PipelineConfig {
            alpha,
            epsilon,
            deltas,
            heralds: DEFAULT_HERALDS,
            repetitions: default_repetitions(),
            seed: 0,
            bob_efficiency: default_bob_efficiency(),
            exact: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::param("deltas", 0.0, "at least one setting separation"));
        }
        if self.repetitions < 2 {
            return Err(Error::param(
                "repetitions",
                self.repetitions as f64,
                "standard errors need at least two repetitions",
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::param("epsilon", self.epsilon, "efficiency must lie in [0, 1]"));
        }
        check_heralds(self.heralds)?;
        SchmidtState::phi_plus_alpha(self.alpha)?;
        for &d in &self.deltas {
            MeasurementFamily::one_click(2, d, self.epsilon)?;
        }
        Ok(())
    }
}

/// Outcome of one repetition at one setting separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub parameter: f64,
    pub epsilon_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePoint {
    pub delta: f64,
    pub overlap: f64,
    /// Tables and reconstruction of the first repetition.
    pub probabilities: ProbabilityTables,
    pub assemblage: Assemblage,
    pub mean_parameter: f64,
    pub stderr: f64,
    pub epsilon_estimate: f64,
    pub epsilon_stderr: f64,
    pub repetitions: Vec<RepetitionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub points: Vec<PipelinePoint>,
}

impl PipelineReport {
    /// Point with the most negative mean parameter.
    pub fn minimum(&self) -> Option<&PipelinePoint> {
        self.points.iter().min_by(|a, b| a.mean_parameter.total_cmp(&b.mean_parameter))
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-task seed drawn from stream `task` of the master generator.
fn derived_seed(master: u64, task: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(task);
    rng.next_u64()
}

/// Witness value of a reconstructed qubit assemblage with λ₀ = ⟨0|ρ_B|0⟩.
pub fn reconstructed_parameter(asm: &Assemblage) -> Result<f64> {
    let lambda0 = asm.rho_b().entries()[0].re;
    let cf = closed_form(asm, lambda0)?;
    let w = optimal_witness(cf.gamma)?;
    Ok(crate::witness::steering_parameter(&w, asm)?.parameter)
}

struct Stage {
    probabilities: ProbabilityTables,
    assemblage: Assemblage,
    result: RepetitionResult,
}

fn run_once(config: &PipelineConfig, delta: f64, seeds: Option<(u64, u64)>) -> Result<Stage> {
    let state = SchmidtState::phi_plus_alpha(config.alpha)?;
    let family = MeasurementFamily::one_click(2, delta, config.epsilon)?;
    let orth = family.orthogonal();
    let povm = Povm::trine();
    let (axis, perp) = match seeds {
        Some((s0, s1)) => (
            simulate_counts(&state, &family, &povm, &config.bob_efficiency, config.heralds, s0)?,
            simulate_counts(&state, &orth, &povm, &config.bob_efficiency, config.heralds, s1)?,
        ),
        None => (
            expected_counts(&state, &family, &povm, &config.bob_efficiency, config.heralds)?,
            expected_counts(&state, &orth, &povm, &config.bob_efficiency, config.heralds)?,
        ),
    };
    let probabilities = probabilities_from_counts(&axis)?;
    let assemblage = mle_assemblage(&probabilities, &povm)?;
    let parameter = reconstructed_parameter(&assemblage)?;
    Ok(Stage {
        probabilities,
        assemblage,
        result: RepetitionResult {
            parameter,
            epsilon_estimate: estimate_efficiency(&axis, &perp)?,
        },
    })
}

/// Simulate → probabilities → MLE → optimal witness for every δ and
/// repetition; repetitions run in parallel with seeds derived from the
/// master seed.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    config.validate()?;
    let reps = config.repetitions;
    let tasks: Vec<(usize, usize)> = (0..config.deltas.len())
        .flat_map(|k| (0..reps).map(move |r| (k, r)))
        .collect();
    let stages: Vec<Stage> = tasks
        .par_iter()
        .map(|&(k, r)| {
            let task = 2 * (k * reps + r) as u64;
            let seeds = (!config.exact).then(|| (derived_seed(config.seed, task), derived_seed(config.seed, task + 1)));
            run_once(config, config.deltas[k], seeds)
        })
        .collect::<Result<_>>()?;
    let points = stages
        .chunks(reps)
        .zip(&config.deltas)
        .map(|(chunk, &delta)| {
            let params: Vec<f64> = chunk.iter().map(|s| s.result.parameter).collect();
            let effs: Vec<f64> = chunk.iter().map(|s| s.result.epsilon_estimate).collect();
            let (mean_parameter, stderr) = mean_stderr(&params);
            let (epsilon_estimate, epsilon_stderr) = mean_stderr(&effs);
            PipelinePoint {
                delta,
                overlap: overlap_from_delta(delta),
                probabilities: chunk[0].probabilities.clone(),
                assemblage: chunk[0].assemblage.clone(),
                mean_parameter,
                stderr,
                epsilon_estimate,
                epsilon_stderr,
                repetitions: chunk.iter().map(|s| s.result.clone()).collect(),
            }
        })
        .collect();
    Ok(PipelineReport {
        config: config.clone(),
        points,
    })
}

/// Generating probabilities of the ideal experiment, for comparison with
/// reconstructed tables.
pub fn ideal_probabilities(
    state: &SchmidtState,
    family: &MeasurementFamily,
    povm: &Povm,
) -> Result<ProbabilityTables> {
    exact_probabilities(&steered_assemblage(state, family)?, povm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn setup(eps: f64, delta: f64) -> (SchmidtState, MeasurementFamily, Povm) {
        (
            SchmidtState::phi_plus_alpha(FRAC_PI_4).unwrap(),
            MeasurementFamily::one_click(2, delta, eps).unwrap(),
            Povm::trine(),
        )
    }

    #[test]
    fn deterministic_given_seed() {
        let (s, f, p) = setup(0.6, 0.8);
        let a = simulate_counts(&s, &f, &p, &[1.0; 3], 10_000, 7).unwrap();
        let b = simulate_counts(&s, &f, &p, &[1.0; 3], 10_000, 7).unwrap();
        let c = simulate_counts(&s, &f, &p, &[1.0; 3], 10_000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for x in 0..2 {
            assert_eq!(a.singles()[x].iter().sum::<f64>(), 10_000.0);
        }
    }

    #[test]
    fn zero_efficiency_no_coincidences() {
        let (s, f, p) = setup(0.0, 0.8);
        let c = simulate_counts(&s, &f, &p, &[1.0; 3], 1000, 1).unwrap();
        assert!(c.coincidences().iter().flatten().all(|&v| v == 0.0));
        assert!(matches!(probabilities_from_counts(&c), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn symmetric_counts() {
        let c = CountData::new(vec![vec![5.0; 3]; 2], vec![vec![10.0; 3]; 2], 30, None, vec![1.0]).unwrap();
        let p = probabilities_from_counts(&c).unwrap();
        for x in 0..2 {
            assert_eq!(p.p_a[x][0], 0.5);
            for a in 0..2 {
                for b in 0..3 {
                    assert!((p.p_b_given_a[x][a][b] - 1.0 / 3.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_coincidences_above_singles() {
        assert!(CountData::new(vec![vec![2.0]], vec![vec![1.0]], 1, None, vec![]).is_err());
    }

    #[test]
    fn expected_counts_round_trip() {
        let (s, f, p) = setup(0.7, 1.2);
        let c = expected_counts(&s, &f, &p, &[1.0; 3], 1000).unwrap();
        let got = probabilities_from_counts(&c).unwrap();
        let want = ideal_probabilities(&s, &f, &p).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                assert!((got.p_a[x][a] - want.p_a[x][a]).abs() < 1e-12);
                for b in 0..3 {
                    assert!((got.joint(x, a, b) - want.joint(x, a, b)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn efficiency_metadata_checked() {
        let (s, f, p) = setup(0.6, 0.8);
        let a = expected_counts(&s, &f, &p, &[1.0; 3], 1000).unwrap();
        let b = expected_counts(&s, &f.orthogonal(), &p, &[1.0; 3], 2000).unwrap();
        assert!(matches!(estimate_efficiency(&a, &b), Err(Error::MetadataMismatch(_))));
        let b = expected_counts(&s, &f.orthogonal(), &p, &[1.0; 3], 1000).unwrap();
        assert!((estimate_efficiency(&a, &b).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn config_json_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"alpha":0.785,"epsilon":0.6,"deltas":[1.0]}"#).unwrap();
        assert_eq!(c.heralds, DEFAULT_HERALDS);
        assert_eq!(c.repetitions, 10);
        assert_eq!(c.bob_efficiency, vec![1.0; 3]);
    }

    #[test]
    fn single_repetition_rejected() {
        let mut c = PipelineConfig::new(FRAC_PI_4, 0.6, vec![1.0]);
        c.repetitions = 1;
        assert!(run_pipeline(&c).is_err());
    }
}
