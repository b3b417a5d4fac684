// Copyright 2026 The twotier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Reproducible sampling of state margins and plug-in estimators.
//!
//! # Reproducibility contract
//!
//! Samples are generated in fixed chunks of [`CHUNK_SIZE`] rows. Chunk `c`
//! draws from a ChaCha8 generator keyed by `ChaCha8Rng::seed_from_u64(seed)`
//! and switched to stream `c` (`set_stream(c)`). Within a chunk, rows are
//! filled in order and, within a row, states in union order. A batch is
//! therefore a pure function of `(union, spec, seed, n_samples)`, whatever
//! the number of worker threads.
//!
//! Margins are drawn directly rather than voter by voter: from exact
//! inverse-CDF tables when the vote probability is fixed, and from an exact
//! binomial sampler (`rand_distr::Binomial`) when the bias is continuous.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    delegate_vote, BiasMeasure, Coupling, MeasureSpec, ValidatedUnion, WeightVector,
};
use crate::oracle::{margin_distribution, margin_distribution_conditional, MarginDistribution};

pub const CHUNK_SIZE: usize = 4096;

/// Largest state population accepted by per-voter sampling.
pub const PER_VOTER_MAX_POPULATION: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    populations: Vec<u64>,
    spec: MeasureSpec,
    seed: u64,
    n_samples: usize,
    /// Row-major `n_samples × M`.
    margins: Vec<i64>,
}

impl SampleBatch {
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_states(&self) -> usize {
        self.populations.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    pub fn populations(&self) -> &[u64] {
        &self.populations
    }

    pub fn margins(&self) -> &[i64] {
        &self.margins
    }

    pub fn row(&self, i: usize) -> &[i64] {
        let m = self.n_states();
        &self.margins[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i64]> {
        self.margins.chunks_exact(self.n_states())
    }

    pub fn column(&self, state: usize) -> impl Iterator<Item = i64> + '_ {
        self.rows().map(move |r| r[state])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplerOptions {
    /// Draw every voter separately. Debug cross-check only; populations are
    /// limited to [`PER_VOTER_MAX_POPULATION`].
    pub per_voter: bool,
}

/// Inverse-CDF table over yes-counts.
#[derive(Debug, Clone)]
struct Table {
    population: u64,
    cdf: Vec<f64>,
}

impl Table {
    fn new(dist: &MarginDistribution) -> Self {
        Self {
            population: dist.population(),
            cdf: dist.cdf(),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        let j = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        2 * j as i64 - self.population as i64
    }
}

#[derive(Debug, Clone)]
enum BiasSampler {
    /// Half-line atoms; `tables[atom][state]` holds the law at `+location`.
    Atoms {
        cumulative: Vec<f64>,
        locations: Vec<f64>,
        tables: Vec<Vec<Table>>,
    },
    Uniform,
}

impl BiasSampler {
    fn new(bias: &BiasMeasure, populations: &[u64]) -> Result<Self> {
        if bias.is_continuous() {
            return Ok(Self::Uniform);
        }
        let atoms = bias.half_line_nodes();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = atoms
            .iter()
            .map(|a| {
                acc += a.weight;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        let locations = atoms.iter().map(|a| a.location).collect();
        let tables = atoms
            .iter()
            .map(|a| {
                populations
                    .iter()
                    .map(|&n| {
                        margin_distribution_conditional(n, a.location).map(|d| Table::new(&d))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Atoms {
            cumulative,
            locations,
            tables,
        })
    }

    /// Draws `ζ`, returning `(atom index, sign, ζ)`; the index is unused for
    /// the continuous law.
    fn draw_bias<R: Rng>(&self, rng: &mut R) -> (usize, i64, f64) {
        match self {
            Self::Atoms {
                cumulative,
                locations,
                ..
            } => {
                let u: f64 = rng.random();
                let idx = cumulative
                    .partition_point(|&c| c <= u)
                    .min(cumulative.len() - 1);
                let sign = if rng.random::<bool>() { 1 } else { -1 };
                (idx, sign, sign as f64 * locations[idx])
            }
            Self::Uniform => {
                let u: f64 = rng.random();
                let zeta = 2.0 * u - 1.0;
                (0, 1, zeta)
            }
        }
    }

    fn draw_margin<R: Rng>(
        &self,
        rng: &mut R,
        state: usize,
        n: u64,
        bias: (usize, i64, f64),
    ) -> i64 {
        match self {
            Self::Atoms { tables, .. } => bias.1 * tables[bias.0][state].draw(rng),
            Self::Uniform => binomial_margin(rng, n, bias.2),
        }
    }
}

fn binomial_margin<R: Rng>(rng: &mut R, n: u64, zeta: f64) -> i64 {
    let p = (0.5 * (1.0 + zeta)).clamp(0.0, 1.0);
    let yes = Binomial::new(n, p)
        .expect("probability in [0, 1]")
        .sample(rng);
    2 * yes as i64 - n as i64
}

#[derive(Debug, Clone)]
enum Plan {
    /// Independent states with fixed per-state laws.
    Tables(Vec<Table>),
    Bias {
        sampler: BiasSampler,
        coupling: Coupling,
    },
    Unanimity,
}

struct Sampler {
    populations: Vec<u64>,
    plan: Plan,
    per_voter: bool,
    beta: Option<f64>,
}

impl Sampler {
    fn new(union: &ValidatedUnion, spec: &MeasureSpec, opts: &SamplerOptions) -> Result<Self> {
        spec.validate()?;
        let populations = union.populations();
        if opts.per_voter {
            if let Some(&n) = populations.iter().find(|&&n| n > PER_VOTER_MAX_POPULATION) {
                return Err(Error::Unsupported(format!(
                    "per-voter sampling needs populations <= {PER_VOTER_MAX_POPULATION}, got {n}"
                )));
            }
        }
        let plan = match spec {
            MeasureSpec::Independent | MeasureSpec::CurieWeiss { .. } => Plan::Tables(
                populations
                    .iter()
                    .map(|&n| margin_distribution(n, spec).map(|d| Table::new(&d)))
                    .collect::<Result<_>>()?,
            ),
            MeasureSpec::CollectiveBias { bias, coupling } => Plan::Bias {
                sampler: BiasSampler::new(bias, &populations)?,
                coupling: *coupling,
            },
            MeasureSpec::Unanimity => Plan::Unanimity,
        };
        let beta = match spec {
            MeasureSpec::CurieWeiss { beta } => Some(*beta),
            _ => None,
        };
        Ok(Self {
            populations,
            plan,
            per_voter: opts.per_voter,
            beta,
        })
    }

    fn fill_row<R: Rng>(&self, rng: &mut R, row: &mut [i64]) {
        if self.per_voter {
            return self.fill_row_per_voter(rng, row);
        }
        match &self.plan {
            Plan::Tables(tables) => {
                for (slot, t) in row.iter_mut().zip(tables) {
                    *slot = t.draw(rng);
                }
            }
            Plan::Bias { sampler, coupling } => {
                let mut shared = None;
                for (i, (slot, &n)) in row.iter_mut().zip(&self.populations).enumerate() {
                    let bias = match coupling {
                        Coupling::PerState => sampler.draw_bias(rng),
                        Coupling::Global => *shared.get_or_insert_with(|| sampler.draw_bias(rng)),
                    };
                    *slot = sampler.draw_margin(rng, i, n, bias);
                }
            }
            Plan::Unanimity => {
                let sign = if rng.random::<bool>() { 1 } else { -1 };
                for (slot, &n) in row.iter_mut().zip(&self.populations) {
                    *slot = sign * n as i64;
                }
            }
        }
    }

    fn fill_row_per_voter<R: Rng>(&self, rng: &mut R, row: &mut [i64]) {
        let spins = |rng: &mut R, n: u64, zeta: f64| -> i64 {
            let p = 0.5 * (1.0 + zeta);
            (0..n)
                .map(|_| if rng.random::<f64>() < p { 1 } else { -1 })
                .sum()
        };
        match &self.plan {
            Plan::Tables(_) => match self.beta {
                Some(beta) => {
                    for (slot, &n) in row.iter_mut().zip(&self.populations) {
                        *slot = curie_weiss_sequential(rng, n, beta);
                    }
                }
                None => {
                    for (slot, &n) in row.iter_mut().zip(&self.populations) {
                        *slot = spins(rng, n, 0.0);
                    }
                }
            },
            Plan::Bias { sampler, coupling } => {
                let mut shared = None;
                for (slot, &n) in row.iter_mut().zip(&self.populations) {
                    let (_, _, zeta) = match coupling {
                        Coupling::PerState => sampler.draw_bias(rng),
                        Coupling::Global => *shared.get_or_insert_with(|| sampler.draw_bias(rng)),
                    };
                    *slot = spins(rng, n, zeta);
                }
            }
            Plan::Unanimity => {
                let sign = if rng.random::<bool>() { 1 } else { -1 };
                for (slot, &n) in row.iter_mut().zip(&self.populations) {
                    *slot = (0..n).map(|_| sign).sum();
                }
            }
        }
    }
}

/// Draws Curie-Weiss spins one at a time from their exact conditional law
/// given the spins drawn so far.
fn curie_weiss_sequential<R: Rng>(rng: &mut R, n: u64, beta: f64) -> i64 {
    let nf = n as f64;
    // ln Σ_j C(r, j) exp(β (s + 2j - r)² / (2N)) over the r undrawn spins.
    let ln_completion = |s: i64, r: u64| -> f64 {
        let terms: Vec<f64> = (0..=r)
            .map(|j| {
                let k = (s + 2 * j as i64 - r as i64) as f64;
                ln_choose(r, j) + beta * k * k / (2.0 * nf)
            })
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    };
    let mut s = 0i64;
    for i in 0..n {
        let rest = n - i - 1;
        let up = ln_completion(s + 1, rest);
        let down = ln_completion(s - 1, rest);
        let p_up = 1.0 / (1.0 + (down - up).exp());
        s += if rng.random::<f64>() < p_up { 1 } else { -1 };
    }
    s
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

pub fn sample_margins(
    union: &ValidatedUnion,
    spec: &MeasureSpec,
    seed: u64,
    n_samples: usize,
) -> Result<SampleBatch> {
    sample_margins_with(union, spec, seed, n_samples, &SamplerOptions::default())
}

pub fn sample_margins_with(
    union: &ValidatedUnion,
    spec: &MeasureSpec,
    seed: u64,
    n_samples: usize,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    if n_samples == 0 {
        return Err(Error::InsufficientSamples(0));
    }
    let sampler = Sampler::new(union, spec, opts)?;
    let m = union.len();
    let mut margins = vec![0i64; n_samples * m];
    margins
        .par_chunks_mut(CHUNK_SIZE * m)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = chunk_rng(seed, c as u64);
            for row in chunk.chunks_exact_mut(m) {
                sampler.fill_row(&mut rng, row);
            }
        });
    Ok(SampleBatch {
        populations: union.populations(),
        spec: spec.clone(),
        seed,
        n_samples,
        margins,
    })
}

/// Generator for chunk `chunk` of the batch keyed by `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Sample mean with its standard error `s / √n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in values {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Self {
            value: mean,
            std_error: (var.max(0.0) / n.max(1) as f64).sqrt(),
            n,
        }
    }

    /// Standardized distance to `exact`. Zero-error estimates give 0 on an
    /// exact hit and infinity otherwise.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = self.value - exact;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff.abs() <= 1e-9 * exact.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimates {
    pub abs_mean: Estimate,
    pub second_moment: Estimate,
    pub abs_variance: Estimate,
}

/// Per-state estimates of `E|S|`, `E(S²)` and `𝕍(|S|)`.
///
/// The variance error uses the influence function `S² - 2·m̂·|S|` of the
/// plug-in estimator.
pub fn estimate_moments(batch: &SampleBatch) -> Result<Vec<MomentEstimates>> {
    let n = batch.n_samples();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    Ok((0..batch.n_states())
        .map(|s| {
            let abs_mean = Estimate::from_values(batch.column(s).map(|k| k.unsigned_abs() as f64));
            let second_moment =
                Estimate::from_values(batch.column(s).map(|k| (k as f64) * (k as f64)));
            let m = abs_mean.value;
            let influence = Estimate::from_values(batch.column(s).map(|k| {
                let a = k.unsigned_abs() as f64;
                a * a - 2.0 * m * a
            }));
            let abs_variance = Estimate {
                value: (second_moment.value - m * m).max(0.0),
                std_error: influence.std_error,
                n,
            };
            MomentEstimates {
                abs_mean,
                second_moment,
                abs_variance,
            }
        })
        .collect())
}

/// Mean of `Δ² = (Σ g_ν χ_ν - Σ S_ν)²` over the batch.
pub fn estimate_deficit(batch: &SampleBatch, g: &WeightVector) -> Result<Estimate> {
    if g.len() != batch.n_states() {
        return Err(Error::DimensionMismatch {
            expected: batch.n_states(),
            got: g.len(),
        });
    }
    let w = g.as_slice();
    Ok(Estimate::from_values(batch.rows().map(|row| {
        let council: f64 = row
            .iter()
            .zip(w)
            .map(|(&k, &gv)| gv * delegate_vote(k) as f64)
            .sum();
        let popular: i64 = row.iter().sum();
        let d = council - popular as f64;
        d * d
    })))
}

/// Per-state mean of `S_ν / N_ν`, which vanishes under every voting measure.
pub fn estimate_normalized_margin(batch: &SampleBatch) -> Vec<Estimate> {
    (0..batch.n_states())
        .map(|s| {
            let n = batch.populations()[s] as f64;
            Estimate::from_values(batch.column(s).map(|k| k as f64 / n))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimity_shares_one_sign() {
        let u = ValidatedUnion::from_populations(&[3, 7, 11]).unwrap();
        let b = sample_margins(&u, &MeasureSpec::Unanimity, 9, 5000).unwrap();
        let mut saw = [false; 2];
        for row in b.rows() {
            let s = row[0].signum();
            saw[(s > 0) as usize] = true;
            for (k, n) in row.iter().zip(u.populations()) {
                assert_eq!(*k, s * n as i64);
            }
        }
        assert!(saw[0] && saw[1]);
        let est = estimate_moments(&b).unwrap();
        assert_eq!(est[2].abs_mean.value, 11.0);
        assert_eq!(est[2].abs_mean.std_error, 0.0);
        let g = WeightVector::new(vec![3.0, 7.0, 11.0]).unwrap();
        let d = estimate_deficit(&b, &g).unwrap();
        assert_eq!((d.value, d.std_error), (0.0, 0.0));
    }

    #[test]
    fn single_voter_state_is_exact() {
        let u = ValidatedUnion::from_populations(&[1]).unwrap();
        let b = sample_margins(&u, &MeasureSpec::Independent, 1, 100).unwrap();
        let e = estimate_moments(&b).unwrap()[0];
        assert_eq!((e.abs_mean.value, e.abs_mean.std_error), (1.0, 0.0));
    }

    #[test]
    fn too_few_samples() {
        let u = ValidatedUnion::from_populations(&[3]).unwrap();
        let b = sample_margins(&u, &MeasureSpec::Independent, 1, 1).unwrap();
        assert_eq!(
            estimate_moments(&b).unwrap_err(),
            Error::InsufficientSamples(1)
        );
        assert!(sample_margins(&u, &MeasureSpec::Independent, 1, 0).is_err());
    }

    #[test]
    fn per_voter_rejects_large_states() {
        let u = ValidatedUnion::from_populations(&[21]).unwrap();
        let opts = SamplerOptions { per_voter: true };
        assert!(sample_margins_with(&u, &MeasureSpec::Independent, 1, 10, &opts).is_err());
    }

    #[test]
    fn estimate_standard_error() {
        let e = Estimate::from_values([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.std_error - sd / 2.0).abs() < 1e-15);
        assert_eq!(e.z_score(2.5), 0.0);
    }

    #[test]
    fn z_score_of_exact_estimate() {
        let e = Estimate {
            value: 3.0,
            std_error: 0.0,
            n: 10,
        };
        assert_eq!(e.z_score(3.0), 0.0);
        assert!(e.z_score(2.0).is_infinite());
    }

    #[test]
    fn chunk_streams_differ() {
        let mut a = chunk_rng(5, 0);
        let mut b = chunk_rng(5, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }
}
