use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DoubleSaddleSystem;
use crate::dense::{svd, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceCase {
    /// SPD `A`, full-rank dense `B` and `C`, `D = 0`.
    Symmetric,
    /// `B = [B_a; 0]`, `D = diag(D_a, D_b)` SPD, `C = [0 C_b]`, so that every
    /// `z` yields an eigenvector with vanishing first block.
    DNonzeroPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomInstanceConfig {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub case: InstanceCase,
    pub seed: u64,
}

impl Default for RandomInstanceConfig {
    fn default() -> Self {
        Self {
            n: 20,
            m: 10,
            p: 4,
            case: InstanceCase::Symmetric,
            seed: 42,
        }
    }
}

fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `G^T G + I` for a uniform random square `G`.
fn spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let g = uniform(n, n, rng);
    let mut a = g.transpose().matmul(&g).expect("square");
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    a.symmetric_part()
}

fn require_full_row_rank(name: &str, x: &DenseMatrix) -> Result<()> {
    if x.rows() == 0 {
        return Ok(());
    }
    let f = svd(&x.transpose())?;
    if f.rank_deficient {
        return Err(Error::RankDeficient(format!("random {name} lost rank")));
    }
    Ok(())
}

/// Seeded random double saddle-point instance.
pub fn random_instance(cfg: &RandomInstanceConfig) -> Result<DoubleSaddleSystem> {
    let RandomInstanceConfig { n, m, p, case, seed } = *cfg;
    if !(n >= m && m >= p && p >= 1) {
        return Err(Error::PreconditionViolation(format!(
            "random instances need n >= m >= p >= 1, got {n}, {m}, {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = spd(n, &mut rng);
    match case {
        InstanceCase::Symmetric => {
            let b = uniform(m, n, &mut rng);
            let c = uniform(p, m, &mut rng);
            require_full_row_rank("B", &b)?;
            require_full_row_rank("C", &c)?;
            DoubleSaddleSystem::from_dense(&a, &b, &c, &DenseMatrix::zeros(m, m))
        }
        InstanceCase::DNonzeroPair => {
            let mb = p.max(m.div_ceil(2));
            let ma = m - mb;
            let mut b = DenseMatrix::zeros(m, n);
            b.set_block(0, 0, &uniform(ma, n, &mut rng));
            let mut d = DenseMatrix::zeros(m, m);
            d.set_block(0, 0, &spd(ma, &mut rng));
            d.set_block(ma, ma, &spd(mb, &mut rng));
            let cb = uniform(p, mb, &mut rng);
            require_full_row_rank("C", &cb)?;
            let mut c = DenseMatrix::zeros(p, m);
            c.set_block(0, ma, &cb);
            DoubleSaddleSystem::from_dense(&a, &b, &c, &d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_instances_are_reproducible() {
        let cfg = RandomInstanceConfig::default();
        let (x, y) = (random_instance(&cfg).unwrap(), random_instance(&cfg).unwrap());
        assert_eq!(x.assemble_k(), y.assemble_k());
        let other = random_instance(&RandomInstanceConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(x.assemble_k(), other.assemble_k());
    }

    #[test]
    fn shapes_and_structure() {
        let sys = random_instance(&RandomInstanceConfig::default()).unwrap();
        assert_eq!(sys.dims(), (20, 10, 4));
        assert!(sys.d_is_zero());
        assert!(sys.is_symmetric());
        let pair = random_instance(&RandomInstanceConfig {
            case: InstanceCase::DNonzeroPair,
            ..Default::default()
        })
        .unwrap();
        assert!(!pair.d_is_zero());
        // C touches only the trailing block, B only the leading one
        let ma = 10 - 5;
        assert!(pair.c().triplets().all(|(_, j, _)| j >= ma));
        assert!(pair.b().triplets().all(|(i, _, _)| i < ma));
    }

    #[test]
    fn bad_dimensions_rejected() {
        let cfg = RandomInstanceConfig { n: 3, m: 5, ..Default::default() };
        assert!(matches!(random_instance(&cfg), Err(Error::PreconditionViolation(_))));
    }
}
