//! Observation process: per-entry DMC noise followed by i.i.d. erasures.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::source_models::MatrixSample;

const ROW_TOL: f64 = 1e-9;

/// Discrete memoryless channel `W(y | x)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    q_in: usize,
    q_out: usize,
    w: Vec<f64>,
}

impl Dmc {
    pub fn new(q_in: usize, q_out: usize, w: Vec<f64>) -> Result<Self> {
        if q_in == 0 || q_out == 0 || w.len() != q_in * q_out {
            return Err(Error::InvalidModel(format!(
                "dmc matrix has {} entries, expected {q_in}x{q_out}",
                w.len()
            )));
        }
        if let Some(v) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidModel(format!("dmc entry {v} is not a probability")));
        }
        for x in 0..q_in {
            let sum: f64 = w[x * q_out..(x + 1) * q_out].iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidModel(format!("dmc row {x} sums to {sum}")));
            }
        }
        Ok(Self { q_in, q_out, w })
    }

    pub fn identity(q: usize) -> Self {
        let mut w = vec![0.0; q * q];
        for x in 0..q {
            w[x * q + x] = 1.0;
        }
        Self { q_in: q, q_out: q, w }
    }

    /// q-ary symmetric channel: keep with `1 - flip`, otherwise uniform on
    /// the other symbols. `bsc(0.1)` is `symmetric(2, 0.1)`.
    pub fn symmetric(q: usize, flip: f64) -> Result<Self> {
        let off = if q > 1 { flip / (q - 1) as f64 } else { 0.0 };
        let mut w = vec![off; q * q];
        for x in 0..q {
            w[x * q + x] = 1.0 - flip;
        }
        Self::new(q, q, w)
    }

    pub fn bsc(flip: f64) -> Result<Self> {
        Self::symmetric(2, flip)
    }

    pub fn q_in(&self) -> usize {
        self.q_in
    }

    pub fn q_out(&self) -> usize {
        self.q_out
    }

    pub fn matrix(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn w(&self, x: u32, y: u32) -> f64 {
        self.w[x as usize * self.q_out + y as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.q_in == self.q_out
            && (0..self.q_in).all(|x| {
                (0..self.q_out).all(|y| self.w[x * self.q_out + y] == if x == y { 1.0 } else { 0.0 })
            })
    }
}

/// Observation rate `p`: each cell is seen with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureSpec {
    p: f64,
}

impl ErasureSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Usage(format!("observation rate {p} outside [0, 1]")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Erased,
    Observed(u32),
}

impl Cell {
    pub fn symbol(self) -> Option<u32> {
        match self {
            Cell::Erased => None,
            Cell::Observed(v) => Some(v),
        }
    }
}

/// k×n grid of channel outputs, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservedMatrix {
    k: usize,
    n: usize,
    q_out: usize,
    cells: Vec<Cell>,
}

impl ObservedMatrix {
    pub fn new(k: usize, n: usize, q_out: usize, cells: Vec<Cell>) -> Result<Self> {
        if cells.len() != k * n {
            return Err(Error::Usage(format!(
                "observation has {} cells, expected {k}x{n}",
                cells.len()
            )));
        }
        if cells
            .iter()
            .any(|c| matches!(c, Cell::Observed(v) if *v as usize >= q_out))
        {
            return Err(Error::Usage(format!("observed symbol outside alphabet of size {q_out}")));
        }
        Ok(Self { k, n, q_out, cells })
    }

    /// Every cell observed.
    pub fn fully_observed(sample: &MatrixSample) -> Self {
        Self {
            k: sample.k(),
            n: sample.n(),
            q_out: sample.q(),
            cells: sample.cells().iter().map(|&v| Cell::Observed(v)).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q_out(&self) -> usize {
        self.q_out
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        &self.cells[row * self.n..(row + 1) * self.n]
    }

    pub fn observed_count(&self) -> usize {
        self.cells.iter().filter(|c| matches!(c, Cell::Observed(_))).count()
    }

    pub fn erased_count(&self) -> usize {
        self.cells.len() - self.observed_count()
    }

    pub fn set(&mut self, row: usize, col: usize, cell: Cell) {
        self.cells[row * self.n + col] = cell;
    }
}

/// Passes every entry through the DMC independently.
pub fn apply_dmc(sample: &MatrixSample, dmc: &Dmc, seed: u64) -> Result<MatrixSample> {
    if dmc.q_in != sample.q() {
        return Err(Error::Usage(format!(
            "dmc input alphabet {} does not match source alphabet {}",
            dmc.q_in,
            sample.q()
        )));
    }
    let rows: Vec<WeightedIndex<f64>> = (0..dmc.q_in)
        .map(|x| WeightedIndex::new(&dmc.w[x * dmc.q_out..(x + 1) * dmc.q_out]).expect("validated dmc"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = sample.clone();
    for cell in out.cells_mut() {
        *cell = rows[*cell as usize].sample(&mut rng) as u32;
    }
    out.set_alphabet(dmc.q_out);
    Ok(out)
}

/// Erases each cell independently with probability `1 - p`.
///
/// One uniform draw per cell is compared against `p`, so for a fixed seed the
/// observed set grows monotonically with `p`.
pub fn apply_erasure(sample: &MatrixSample, spec: ErasureSpec, seed: u64) -> ObservedMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = sample
        .cells()
        .iter()
        .map(|&v| {
            let u: f64 = rng.gen();
            if u < spec.p {
                Cell::Observed(v)
            } else {
                Cell::Erased
            }
        })
        .collect();
    ObservedMatrix {
        k: sample.k(),
        n: sample.n(),
        q_out: sample.q(),
        cells,
    }
}

impl std::fmt::Display for ObservedMatrix {
    /// One line per row; erased cells print as `?`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.k {
            let line: Vec<String> = self
                .row(r)
                .iter()
                .map(|c| c.symbol().map_or_else(|| "?".to_string(), |s| s.to_string()))
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// log2 of the probability of one cell's output given its source symbol.
#[inline]
pub fn cell_log_likelihood(x: u32, z: Cell, dmc: &Dmc, p: f64) -> f64 {
    match z {
        Cell::Erased => (1.0 - p).log2(),
        Cell::Observed(y) => (p * dmc.w(x, y)).log2(),
    }
}

/// log2 P(z_row | x_row) for the DMC-then-erasure pipeline.
pub fn observation_log_likelihood(x_row: &[u32], z_row: &[Cell], dmc: &Dmc, p: f64) -> Result<f64> {
    if x_row.len() != z_row.len() {
        return Err(Error::Usage(format!(
            "row lengths differ: {} source symbols vs {} observations",
            x_row.len(),
            z_row.len()
        )));
    }
    Ok(x_row
        .iter()
        .zip(z_row)
        .map(|(&x, &z)| cell_log_likelihood(x, z, dmc, p))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_models::{sample_matrix, ColumnPmf, SourceModel};

    fn three_sigma(n: f64, p: f64) -> f64 {
        3.0 * (p * (1.0 - p) / n).sqrt()
    }

    #[test]
    fn identity_dmc_is_noop() {
        let model = SourceModel::Iid(ColumnPmf::new(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap());
        let m = sample_matrix(&model, 64, 5);
        assert_eq!(apply_dmc(&m, &Dmc::identity(2), 11).unwrap(), m);
    }

    #[test]
    fn constant_output_channel_ignores_input() {
        let dmc = Dmc::new(2, 2, vec![0.3, 0.7, 0.3, 0.7]).unwrap();
        let n = 100_000;
        for input in [0u32, 1] {
            let m = MatrixSample::new(1, n, 2, vec![input; n]).unwrap();
            let out = apply_dmc(&m, &dmc, 2).unwrap();
            let ones = out.cells().iter().filter(|&&c| c == 1).count() as f64 / n as f64;
            assert!((ones - 0.7).abs() < three_sigma(n as f64, 0.7));
        }
    }

    #[test]
    fn bsc_flip_rate() {
        let n = 100_000;
        let m = MatrixSample::new(1, n, 2, vec![0; n]).unwrap();
        let out = apply_dmc(&m, &Dmc::bsc(0.1).unwrap(), 17).unwrap();
        let ones = out.cells().iter().filter(|&&c| c == 1).count() as f64 / n as f64;
        assert!((ones - 0.1).abs() < three_sigma(n as f64, 0.1));
    }

    #[test]
    fn dmc_alphabet_mismatch_is_error() {
        let m = MatrixSample::new(1, 2, 3, vec![0, 2]).unwrap();
        assert!(apply_dmc(&m, &Dmc::identity(2), 0).is_err());
    }

    #[test]
    fn erasure_extremes_and_rate() {
        let n = 100_000;
        let m = MatrixSample::new(1, n, 2, vec![1; n]).unwrap();
        let all = apply_erasure(&m, ErasureSpec::new(1.0).unwrap(), 3);
        assert_eq!(all.observed_count(), n);
        let none = apply_erasure(&m, ErasureSpec::new(0.0).unwrap(), 3);
        assert_eq!(none.observed_count(), 0);
        let half = apply_erasure(&m, ErasureSpec::new(0.5).unwrap(), 3);
        let frac = half.observed_count() as f64 / n as f64;
        assert!((frac - 0.5).abs() < three_sigma(n as f64, 0.5));
        assert!(ErasureSpec::new(1.5).is_err());
    }

    #[test]
    fn erasure_independent_of_symbol() {
        let model = SourceModel::Iid(ColumnPmf::uniform(1, 2));
        let m = sample_matrix(&model, 100_000, 8);
        let obs = apply_erasure(&m, ErasureSpec::new(0.3).unwrap(), 9);
        for v in [0u32, 1] {
            let idx: Vec<usize> = (0..m.n()).filter(|&i| m.get(0, i) == v).collect();
            let seen = idx.iter().filter(|&&i| obs.get(0, i) != Cell::Erased).count() as f64;
            let rate = seen / idx.len() as f64;
            assert!((rate - 0.3).abs() < three_sigma(idx.len() as f64, 0.3));
        }
    }

    #[test]
    fn likelihood_examples() {
        let id = Dmc::identity(2);
        let x = [0u32, 1, 1];
        let z: Vec<Cell> = x.iter().map(|&v| Cell::Observed(v)).collect();
        assert_eq!(observation_log_likelihood(&x, &z, &id, 1.0).unwrap(), 0.0);

        let bad = [Cell::Observed(1), Cell::Observed(1), Cell::Observed(1)];
        assert_eq!(observation_log_likelihood(&x, &bad, &id, 1.0).unwrap(), f64::NEG_INFINITY);

        let ll = observation_log_likelihood(&[0, 1], &[Cell::Observed(0), Cell::Erased], &id, 0.5).unwrap();
        assert!((ll + 2.0).abs() < 1e-12);

        assert!(observation_log_likelihood(&[0], &[], &id, 0.5).is_err());
    }

    /// Sums the likelihood over every possible output row, erasures included.
    #[test]
    fn likelihood_normalizes_over_outputs() {
        let dmc = Dmc::bsc(0.2).unwrap();
        for n in 1..=6usize {
            for p in [0.0, 0.35, 1.0] {
                let x: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
                let total: f64 = (0..3usize.pow(n as u32))
                    .map(|code| {
                        let mut c = code;
                        let z: Vec<Cell> = (0..n)
                            .map(|_| {
                                let d = c % 3;
                                c /= 3;
                                if d == 2 { Cell::Erased } else { Cell::Observed(d as u32) }
                            })
                            .collect();
                        observation_log_likelihood(&x, &z, &dmc, p).unwrap().exp2()
                    })
                    .sum();
                assert!((total - 1.0).abs() < 1e-9, "n={n} p={p} total={total}");
            }
        }
    }
}
