//! Monte-Carlo campaigns over random positive contractions.
//!
//! Typicality in the operator-topology sense is a Baire-category notion;
//! the frequencies reported here depend on the sampler and are recorded as
//! such, not as evidence for or against any category statement.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{derive_seed, FamilyMember};
use crate::error::{Error, Result};
use crate::linalg::{CoordVector, OperatorModel, TailModel};
use crate::matrix::Matrix;
use crate::norms::{block_norm, operator_norm, verify_norming};

const CLASS_NORM_TOLERANCE: f64 = 1e-10;
const NEAR_ONE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryDistribution {
    Uniform,
    Exponential,
    Sparse { density: f64 },
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryDistribution::Uniform => f.write_str("uniform"),
            EntryDistribution::Exponential => f.write_str("exponential"),
            EntryDistribution::Sparse { density } => write!(f, "sparse:{density}"),
        }
    }
}

impl FromStr for EntryDistribution {
    type Err = Error;

    /// `uniform`, `exponential` or `sparse:<density>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(EntryDistribution::Uniform),
            "exponential" => Ok(EntryDistribution::Exponential),
            _ => {
                let density = s
                    .strip_prefix("sparse:")
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| Error::precondition(format!("unknown distribution '{s}'")))?;
                Ok(EntryDistribution::Sparse { density })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormTarget {
    /// Divide by `max(1, ||B||)`.
    Leq1,
    /// Rescale to `||B|| = 1 - eta`.
    Near1 { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub dim: usize,
    pub p: f64,
    pub distribution: EntryDistribution,
    pub norm_target: NormTarget,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        crate::linalg::check_exponent(self.p)?;
        if self.dim == 0 {
            return Err(Error::precondition("sampler dimension must be at least 1"));
        }
        if let EntryDistribution::Sparse { density } = self.distribution {
            if !(density > 0.0 && density <= 1.0) {
                return Err(Error::precondition(format!("density {density} not in (0, 1]")));
            }
        }
        if let NormTarget::Near1 { eta } = self.norm_target {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::precondition(format!("eta {eta} not in (0, 1)")));
            }
        }
        Ok(())
    }

    /// The spec used for sample `i` of a campaign.
    pub fn for_sample(&self, i: usize) -> Self {
        Self {
            seed: derive_seed(self.seed, i as u64),
            ..*self
        }
    }
}

pub fn sample_positive_contraction(spec: &SamplerSpec) -> Result<OperatorModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.dim;
    let block = Matrix::from_fn(n, n, |_, _| match spec.distribution {
        EntryDistribution::Uniform => rng.random::<f64>(),
        EntryDistribution::Exponential => Exp1.sample(&mut rng),
        EntryDistribution::Sparse { density } => {
            if rng.random_bool(density) {
                rng.random::<f64>()
            } else {
                0.0
            }
        }
    });
    let norm = block_norm(&block, spec.p)?.value;
    let block = match spec.norm_target {
        NormTarget::Leq1 => block.scaled(1.0 / norm.max(1.0)),
        NormTarget::Near1 { eta } => {
            if norm == 0.0 {
                return Err(Error::Construction(
                    "sampled block is zero; cannot rescale".into(),
                ));
            }
            let target = 1.0 - eta;
            let scaled = block.scaled(target / norm);
            let got = block_norm(&scaled, spec.p)?.value;
            if (got - target).abs() > NEAR_ONE_TOLERANCE {
                return Err(Error::Construction(format!(
                    "rescaled norm {got} misses target {target}"
                )));
            }
            scaled
        }
    };
    OperatorModel::finite(spec.p, block)
}

/// Some column has positive entries in both rows 0 and 1.
pub fn probe_not_coisometry(t: &OperatorModel) -> bool {
    let b = t.block();
    t.block_dim() >= 2 && (0..t.block_dim()).any(|j| b[(0, j)] > 0.0 && b[(1, j)] > 0.0)
}

fn reaches_all(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !seen[j] && edge(i, j) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Strong connectivity of the support digraph (`i -> j` iff `t_{j,i} > 0`),
/// i.e. absence of nontrivial invariant coordinate ideals for the block.
pub fn probe_irreducible(t: &OperatorModel) -> Result<bool> {
    if *t.tail() != TailModel::Zero {
        return Err(Error::Unsupported(format!(
            "irreducibility criterion undefined at finite scale for a {} tail",
            t.tail().kind()
        )));
    }
    let b = t.block();
    let n = t.block_dim();
    Ok(reaches_all(n, |i, j| b[(j, i)] > 0.0) && reaches_all(n, |i, j| b[(i, j)] > 0.0))
}

pub fn probe_attainment(t: &OperatorModel) -> Result<bool> {
    Ok(operator_norm(t)?.attained.is_attained())
}

/// Block norming family plus identity tail covering every coordinate.
fn class_witness(t: &OperatorModel) -> Result<Option<Vec<FamilyMember>>> {
    if *t.tail() != TailModel::Identity {
        return Ok(None);
    }
    if (operator_norm(t)?.value - 1.0).abs() > CLASS_NORM_TOLERANCE {
        return Ok(None);
    }
    let bn = block_norm(t.block(), t.p())?;
    if (bn.value - 1.0).abs() > CLASS_NORM_TOLERANCE {
        return Ok(None);
    }
    let u = CoordVector::new(bn.vector)?;
    if !(0..t.block_dim()).all(|i| u.get(i) > 0.0) {
        return Ok(None);
    }
    if !verify_norming(t, &u)?.accepted {
        return Ok(None);
    }
    Ok(Some(vec![
        FamilyMember::Vector(u),
        FamilyMember::IdentityTail {
            from: t.block_dim(),
        },
    ]))
}

/// Witness that `T^*` has a covering norming family.
pub fn probe_class_m(t: &OperatorModel) -> Result<Option<Vec<FamilyMember>>> {
    class_witness(&t.adjoint())
}

/// Witness that `T` has a covering norming family.
pub fn probe_class_m_prime(t: &OperatorModel) -> Result<Option<Vec<FamilyMember>>> {
    class_witness(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenTrace {
    /// Always true: the drift statistic is a heuristic, not a proof.
    pub heuristic: bool,
    pub indices: Vec<usize>,
    /// Eigenvalues `(re, im)` of `corner(T, N)` for each listed `N`.
    pub spectra: Vec<Vec<(f64, f64)>>,
    /// Per consecutive pair, the largest distance from an eigenvalue of the
    /// smaller corner to the nearest one of the next.
    pub drifts: Vec<f64>,
    pub max_drift: f64,
}

/// Heuristic: how far corner eigenvalues move as the corner grows.
pub fn probe_eigen_persistence(t: &OperatorModel, indices: &[usize]) -> Result<EigenTrace> {
    if t.p() != 2.0 {
        return Err(Error::Unsupported("eigenvalue persistence is an l_2 diagnostic".into()));
    }
    let spectra: Vec<Vec<(f64, f64)>> = indices
        .iter()
        .map(|&n| {
            let c = t.corner(n);
            let m = nalgebra::DMatrix::from_row_slice(n + 1, n + 1, c.as_slice());
            m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
        })
        .collect();
    let drifts: Vec<f64> = spectra
        .windows(2)
        .map(|w| {
            w[0].iter()
                .map(|a| {
                    w[1].iter()
                        .map(|b| (a.0 - b.0).hypot(a.1 - b.1))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(EigenTrace {
        heuristic: true,
        indices: indices.to_vec(),
        max_drift: drifts.iter().copied().fold(0.0, f64::max),
        spectra,
        drifts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    Attained,
    NotCoisometry,
    Irreducible,
    ClassM,
    ClassMPrime,
}

impl Probe {
    pub const ALL: [Probe; 5] = [
        Probe::Attained,
        Probe::NotCoisometry,
        Probe::Irreducible,
        Probe::ClassM,
        Probe::ClassMPrime,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Probe::Attained => "attained",
            Probe::NotCoisometry => "not_coisometry",
            Probe::Irreducible => "irreducible",
            Probe::ClassM => "class_m",
            Probe::ClassMPrime => "class_m_prime",
        }
    }
}

impl FromStr for Probe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Probe::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::precondition(format!("unknown probe '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample: usize,
    pub seed: u64,
    pub dim: usize,
    pub p: f64,
    pub norm: Option<f64>,
    pub attained: Option<bool>,
    pub not_coisometry: Option<bool>,
    pub irreducible: Option<bool>,
    pub class_m: Option<bool>,
    pub class_m_prime: Option<bool>,
    pub error: Option<String>,
}

impl SampleRow {
    fn value(&self, probe: Probe) -> Option<bool> {
        match probe {
            Probe::Attained => self.attained,
            Probe::NotCoisometry => self.not_coisometry,
            Probe::Irreducible => self.irreducible,
            Probe::ClassM => self.class_m,
            Probe::ClassMPrime => self.class_m_prime,
        }
    }

    /// Fields in campaign CSV column order; absent values are empty.
    pub fn csv_record(&self) -> [String; 11] {
        let b = |v: Option<bool>| v.map_or_else(String::new, |x| x.to_string());
        [
            self.sample.to_string(),
            self.seed.to_string(),
            self.dim.to_string(),
            self.p.to_string(),
            self.norm.map_or_else(String::new, |x| x.to_string()),
            b(self.attained),
            b(self.not_coisometry),
            b(self.irreducible),
            b(self.class_m),
            b(self.class_m_prime),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

pub const CAMPAIGN_CSV_HEADER: [&str; 11] = [
    "sample",
    "seed",
    "dim",
    "p",
    "norm",
    "attained",
    "not_coisometry",
    "irreducible",
    "class_m",
    "class_m_prime",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub probe: Probe,
    pub true_count: usize,
    pub false_count: usize,
    pub error_count: usize,
    /// `true_count / (true_count + false_count)`, or 0 when nothing ran.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub spec: SamplerSpec,
    pub count: usize,
    pub probes: Vec<Probe>,
    pub rows: Vec<SampleRow>,
    pub summaries: Vec<ProbeSummary>,
    pub wall_time_secs: f64,
    pub note: String,
}

impl CampaignReport {
    pub fn fraction(&self, probe: Probe) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.probe == probe)
            .map(|s| s.fraction)
    }
}

fn run_sample(spec: &SamplerSpec, i: usize, probes: &[Probe]) -> SampleRow {
    let sample_spec = spec.for_sample(i);
    let mut row = SampleRow {
        sample: i,
        seed: sample_spec.seed,
        dim: spec.dim,
        p: spec.p,
        norm: None,
        attained: None,
        not_coisometry: None,
        irreducible: None,
        class_m: None,
        class_m_prime: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let t = sample_positive_contraction(&sample_spec)?;
        let norm = operator_norm(&t)?;
        row.norm = Some(norm.value);
        for probe in probes {
            match probe {
                Probe::Attained => row.attained = Some(norm.attained.is_attained()),
                Probe::NotCoisometry => row.not_coisometry = Some(probe_not_coisometry(&t)),
                Probe::Irreducible => row.irreducible = Some(probe_irreducible(&t)?),
                Probe::ClassM => row.class_m = Some(probe_class_m(&t)?.is_some()),
                Probe::ClassMPrime => row.class_m_prime = Some(probe_class_m_prime(&t)?.is_some()),
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Runs `count` independent samples; rows are in sample order and depend
/// only on the spec, never on scheduling.
pub fn run_campaign(spec: &SamplerSpec, count: usize, probes: &[Probe]) -> Result<CampaignReport> {
    if count == 0 {
        return Err(Error::precondition("campaign needs at least one sample"));
    }
    spec.validate()?;
    let start = Instant::now();
    let rows: Vec<SampleRow> = (0..count)
        .into_par_iter()
        .map(|i| run_sample(spec, i, probes))
        .collect();
    let summaries = probes
        .iter()
        .map(|&probe| {
            let (mut t, mut f, mut e) = (0, 0, 0);
            for row in &rows {
                match row.value(probe) {
                    Some(true) => t += 1,
                    Some(false) => f += 1,
                    None => e += 1,
                }
            }
            ProbeSummary {
                probe,
                true_count: t,
                false_count: f,
                error_count: e,
                fraction: if t + f > 0 { t as f64 / (t + f) as f64 } else { 0.0 },
            }
        })
        .collect();
    Ok(CampaignReport {
        spec: *spec,
        count,
        probes: probes.to_vec(),
        rows,
        summaries,
        wall_time_secs: start.elapsed().as_secs_f64(),
        note: format!(
            "frequencies are relative to the sampler ({} entries, dim {}, p {}, {:?}); \
             they are not statements about category-typical operators",
            spec.distribution, spec.dim, spec.p, spec.norm_target
        ),
    })
}
