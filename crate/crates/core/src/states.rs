//! GHZ states, white-noise mixtures, partitions and k-separable states.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, DensityOperator};
use crate::random::{self, StreamRng};

/// Partition of the sites `0..n` into nonempty disjoint blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Validate 0-based blocks covering `0..n`.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        let listed: usize = blocks.iter().map(Vec::len).sum();
        if listed < n {
            return Err(Error::invalid(
                "blocks",
                format!("blocks list {listed} sites, fewer than n = {n}"),
            ));
        }
        let mut seen = vec![false; n];
        for (i, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::invalid("blocks", format!("block {} is empty", i + 1)));
            }
            for &j in block {
                if j >= n {
                    return Err(Error::invalid(
                        "blocks",
                        format!("site {} out of range 1..={n}", j + 1),
                    ));
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(Error::invalid("blocks", format!("site {} repeated", j + 1)));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(
                "blocks",
                format!("site {} not covered by any block", missing + 1),
            ));
        }
        Ok(Partition { n, blocks })
    }

    /// Validate 1-based blocks, as used in the JSON form.
    pub fn from_one_based(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let shifted = blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&j| {
                        j.checked_sub(1)
                            .ok_or_else(|| Error::invalid("blocks", "site indices start at 1"))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, shifted)
    }

    /// The single block `{0, …, n-1}`.
    pub fn whole(n: usize) -> Result<Self> {
        Self::new(n, vec![(0..n).collect()])
    }

    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|j| vec![j]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn one_based_blocks(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|j| j + 1).collect())
            .collect()
    }

    pub fn profile(&self) -> PartitionProfile {
        partition_profile(self)
    }

    /// Every set partition of `0..n`, blocks ordered by smallest element.
    pub fn enumerate(n: usize) -> Vec<Partition> {
        // restricted growth strings: label[0] = 0, label[i] ≤ 1 + max(label[..i])
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut labels = vec![0usize; n];
        loop {
            let k = labels.iter().max().unwrap() + 1;
            let mut blocks = vec![Vec::new(); k];
            for (site, &l) in labels.iter().enumerate() {
                blocks[l].push(site);
            }
            out.push(Partition { n, blocks });

            // next restricted growth string
            let mut i = n - 1;
            loop {
                if i == 0 {
                    return out;
                }
                let prefix_max = labels[..i].iter().max().copied().unwrap_or(0);
                if labels[i] <= prefix_max {
                    labels[i] += 1;
                    for l in &mut labels[i + 1..] {
                        *l = 0;
                    }
                    break;
                }
                i -= 1;
            }
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let inner: Vec<String> = b.iter().map(|j| (j + 1).to_string()).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Block count `k` and singleton-block count `m` of a partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartitionProfile {
    pub k: usize,
    pub m: usize,
}

impl PartitionProfile {
    /// Whether some partition of `n` sites has exactly `k` blocks, `m` of
    /// them singletons: the remaining `k − m` blocks need at least two sites
    /// each, and with no such blocks the singletons must cover everything.
    pub fn is_realizable(&self, n: usize) -> bool {
        let PartitionProfile { k, m } = *self;
        if n == 0 || k == 0 || k > n || m > k {
            return false;
        }
        if m == k {
            return n == k;
        }
        n - m >= 2 * (k - m)
    }

    /// All realizable profiles for `n` sites, ordered by `(k, m)`.
    pub fn all(n: usize) -> Vec<PartitionProfile> {
        (1..=n)
            .flat_map(|k| (0..=k).map(move |m| PartitionProfile { k, m }))
            .filter(|p| p.is_realizable(n))
            .collect()
    }
}

pub fn partition_profile(partition: &Partition) -> PartitionProfile {
    PartitionProfile {
        k: partition.blocks.len(),
        m: partition.blocks.iter().filter(|b| b.len() == 1).count(),
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2` as a state vector.
pub fn ghz_vector(n: usize) -> Result<Vec<Complex64>> {
    if n == 0 || n >= usize::BITS as usize {
        return Err(Error::invalid("n", "must be between 1 and the dimension cap"));
    }
    let dim = linalg::total_dim(&vec![2; n])?;
    let mut v = vec![c(0.0, 0.0); dim];
    v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[dim - 1] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(v)
}

/// `|Φ_n⟩⟨Φ_n|` for `n ≥ 2` qubits.
pub fn ghz(n: usize) -> Result<DensityOperator> {
    if n < 2 {
        return Err(Error::invalid("n", "GHZ states need at least 2 sites"));
    }
    let dim = ghz_vector(n)?.len();
    let corner = |i: usize| i == 0 || i == dim - 1;
    let m = CMatrix::from_fn(dim, |r, s| {
        if corner(r) && corner(s) {
            c(0.5, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(DensityOperator::new_unchecked(m))
}

/// `x|Φ_n⟩⟨Φ_n| + (1 − x) I / 2^n`.
pub fn ghz_noise(n: usize, x: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid("x", format!("{x} is outside [0, 1]")));
    }
    let pure = ghz(n)?;
    let dim = pure.dim();
    let noise = CMatrix::identity(dim).scale_real((1.0 - x) / dim as f64);
    Ok(DensityOperator::new_unchecked(&pure.matrix().scale_real(x) + &noise))
}

/// `⊗_i ρ^{α_i}` with the factors re-ordered so sites appear as `0..n`.
///
/// `block_states[i]` acts on the sites of block `i` in the order listed by
/// the partition; `site_dims[j]` is the local dimension of site `j`.
pub fn product_over_partition(
    partition: &Partition,
    block_states: &[DensityOperator],
    site_dims: &[usize],
) -> Result<DensityOperator> {
    if site_dims.len() != partition.n() {
        return Err(Error::DimensionMismatch {
            expected: partition.n(),
            found: site_dims.len(),
        });
    }
    if block_states.len() != partition.blocks().len() {
        return Err(Error::invalid(
            "blocks",
            format!(
                "{} block states for {} blocks",
                block_states.len(),
                partition.blocks().len()
            ),
        ));
    }
    linalg::total_dim(site_dims)?;
    let mut factor_dims = Vec::with_capacity(partition.n());
    let mut labels = Vec::with_capacity(partition.n());
    for (block, state) in partition.blocks().iter().zip(block_states) {
        let expected: usize = block.iter().map(|&j| site_dims[j]).product();
        if state.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: state.dim(),
            });
        }
        factor_dims.extend(block.iter().map(|&j| site_dims[j]));
        labels.extend(block.iter().copied());
    }
    let product = linalg::tensor_all(block_states.iter().map(DensityOperator::matrix))?;
    let ordered = linalg::reorder_sites(&product, &factor_dims, &labels)?;
    Ok(DensityOperator::new_unchecked(ordered))
}

/// Block state rank used by [`random_k_separable_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockRank {
    /// Square Ginibre matrix, full-rank block states.
    Full,
    /// Rank-one (pure) block states.
    Pure,
}

/// `Σ_l p_l ⊗_i ρ_l^{α_i}` with Dirichlet-uniform `p` and full-rank Ginibre
/// block states.
pub fn random_k_separable(
    partition: &Partition,
    site_dims: &[usize],
    terms: usize,
    seed: u64,
) -> Result<DensityOperator> {
    let mut rng = random::stream_rng(seed, 0);
    random_k_separable_with(partition, site_dims, terms, BlockRank::Full, &mut rng)
}

pub fn random_k_separable_with(
    partition: &Partition,
    site_dims: &[usize],
    terms: usize,
    rank: BlockRank,
    rng: &mut StreamRng,
) -> Result<DensityOperator> {
    if terms == 0 {
        return Err(Error::invalid("terms", "must be at least 1"));
    }
    if site_dims.len() != partition.n() {
        return Err(Error::DimensionMismatch {
            expected: partition.n(),
            found: site_dims.len(),
        });
    }
    let dim = linalg::total_dim(site_dims)?;
    let weights = random::dirichlet_uniform(terms, rng);
    let mut acc = CMatrix::zeros(dim);
    for p in weights {
        let blocks: Vec<DensityOperator> = partition
            .blocks()
            .iter()
            .map(|block| {
                let d: usize = block.iter().map(|&j| site_dims[j]).product();
                let r = match rank {
                    BlockRank::Full => d,
                    BlockRank::Pure => 1,
                };
                random::random_density(d, r, rng)
            })
            .collect();
        let product = product_over_partition(partition, &blocks, site_dims)?;
        acc = &acc + &product.matrix().scale_real(p);
    }
    Ok(DensityOperator::new_unchecked(acc.hermitian_part()))
}
