//! Stochastic models for the unknown k×n matrix.
//!
//! A column of the matrix is a tuple `(x_1, …, x_k)` of symbols in `0..q`.
//! Every pmf and transition matrix in this crate indexes column tuples the
//! same way: row 1 is the most significant digit, so the tuple maps to
//! `Σ_ℓ x_ℓ · q^(k-ℓ)`.
//!
//! Two column processes are supported: columns drawn i.i.d. from a
//! [`ColumnPmf`], and a first-order [`MarkovColumnSource`] over column states
//! whose first column is drawn from the stationary law.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::ipow;

const PMF_TOL: f64 = 1e-9;
const STATIONARY_CHECK_TOL: f64 = 1e-10;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 1_000_000;

/// Maps a column tuple to its state index (row 1 most significant).
pub fn column_index(symbols: &[u32], q: usize) -> usize {
    symbols
        .iter()
        .fold(0usize, |acc, &x| acc * q + x as usize)
}

/// Inverse of [`column_index`].
pub fn column_symbols(index: usize, k: usize, q: usize) -> Vec<u32> {
    let mut out = vec![0u32; k];
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = (rest % q) as u32;
        rest /= q;
    }
    out
}

/// Symbol of row `row` (0-based) inside column state `index`.
#[inline]
pub fn row_symbol(index: usize, row: usize, k: usize, q: usize) -> u32 {
    let mut rest = index;
    for _ in 0..(k - 1 - row) {
        rest /= q;
    }
    (rest % q) as u32
}

/// Joint law of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnPmf {
    k: usize,
    q: usize,
    probs: Vec<f64>,
}

impl ColumnPmf {
    /// Builds a pmf and rejects it if any invariant fails.
    pub fn new(k: usize, q: usize, probs: Vec<f64>) -> Result<Self> {
        let pmf = Self::new_unchecked(k, q, probs);
        let report = validate_model(&SourceModel::Iid(pmf.clone()));
        report.into_result()?;
        Ok(pmf)
    }

    /// Builds a pmf without checks; use [`validate_model`] to inspect it.
    pub fn new_unchecked(k: usize, q: usize, probs: Vec<f64>) -> Self {
        Self { k, q, probs }
    }

    /// Product pmf from one marginal per row.
    pub fn product(q: usize, marginals: &[Vec<f64>]) -> Result<Self> {
        let k = marginals.len();
        let states = ipow(q, k);
        let probs = (0..states)
            .map(|s| {
                column_symbols(s, k, q)
                    .iter()
                    .zip(marginals)
                    .map(|(&x, m)| m[x as usize])
                    .product()
            })
            .collect();
        Self::new(k, q, probs)
    }

    /// Uniform on the `q` constant columns `(a, a, …, a)`.
    pub fn identical_rows_uniform(k: usize, q: usize) -> Self {
        let mut probs = vec![0.0; ipow(q, k)];
        for a in 0..q {
            let col = vec![a as u32; k];
            probs[column_index(&col, q)] = 1.0 / q as f64;
        }
        Self { k, q, probs }
    }

    pub fn uniform(k: usize, q: usize) -> Self {
        let states = ipow(q, k);
        Self {
            k,
            q,
            probs: vec![1.0 / states as f64; states],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_states(&self) -> usize {
        ipow(self.q, self.k)
    }
}

/// First-order Markov chain over column states.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovColumnSource {
    k: usize,
    q: usize,
    /// Row-major `states × states`, `transition[s * states + t] = T(t | s)`.
    transition: Vec<f64>,
    stationary: Vec<f64>,
    states: usize,
}

impl MarkovColumnSource {
    /// Validates the chain and derives its stationary law.
    pub fn new(k: usize, q: usize, transition: Vec<f64>) -> Result<Self> {
        let mut chain = Self::new_unchecked(k, q, transition);
        validate_model(&SourceModel::Markov(chain.clone())).into_result()?;
        chain.stationary = stationary_distribution(&chain.transition, chain.num_states())?;
        Ok(chain)
    }

    /// Chain without validation or stationary law; for [`validate_model`].
    pub fn new_unchecked(k: usize, q: usize, transition: Vec<f64>) -> Self {
        Self {
            k,
            q,
            transition,
            stationary: Vec::new(),
            states: q.checked_pow(k as u32).unwrap_or(0),
        }
    }

    /// Chain that stays in its state with probability `stay` and otherwise
    /// jumps uniformly to one of the other states.
    pub fn sticky(k: usize, q: usize, stay: f64) -> Result<Self> {
        let states = ipow(q, k);
        let off = if states > 1 {
            (1.0 - stay) / (states - 1) as f64
        } else {
            0.0
        };
        let mut t = vec![off; states * states];
        for s in 0..states {
            t[s * states + s] = if states > 1 { stay } else { 1.0 };
        }
        Self::new(k, q, t)
    }

    /// Chain whose every transition row equals `pmf`: an i.i.d. column
    /// process written as a Markov chain.
    pub fn iid_equivalent(pmf: &ColumnPmf) -> Result<Self> {
        let states = pmf.num_states();
        let t = (0..states).flat_map(|_| pmf.probs().iter().copied()).collect();
        Self::new(pmf.k(), pmf.q(), t)
    }

    /// k identical rows driven by one q-ary sticky chain. States whose rows
    /// disagree are transient and fall back uniformly onto the constant
    /// columns.
    pub fn identical_rows_sticky(k: usize, q: usize, stay: f64) -> Result<Self> {
        let states = ipow(q, k);
        let constant = |a: usize| column_index(&vec![a as u32; k], q);
        let mut t = vec![0.0; states * states];
        for s in 0..states {
            let syms = column_symbols(s, k, q);
            if syms.iter().all(|&x| x == syms[0]) {
                let a = syms[0] as usize;
                for b in 0..q {
                    t[s * states + constant(b)] = if a == b {
                        stay
                    } else {
                        (1.0 - stay) / (q - 1) as f64
                    };
                }
            } else {
                for b in 0..q {
                    t[s * states + constant(b)] = 1.0 / q as f64;
                }
            }
        }
        Self::new(k, q, t)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn num_states(&self) -> usize {
        ipow(self.q, self.k)
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    #[inline]
    pub fn t(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.states + to]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }
}

/// Law of the unknown matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    Iid(ColumnPmf),
    Markov(MarkovColumnSource),
}

impl SourceModel {
    pub fn k(&self) -> usize {
        match self {
            SourceModel::Iid(p) => p.k,
            SourceModel::Markov(m) => m.k,
        }
    }

    pub fn q(&self) -> usize {
        match self {
            SourceModel::Iid(p) => p.q,
            SourceModel::Markov(m) => m.q,
        }
    }

    pub fn num_states(&self) -> usize {
        ipow(self.q(), self.k())
    }

    /// Law of a single column (the pmf, or π for a chain).
    pub fn column_law(&self) -> &[f64] {
        match self {
            SourceModel::Iid(p) => &p.probs,
            SourceModel::Markov(m) => &m.stationary,
        }
    }

    /// Single-column law as a [`ColumnPmf`].
    pub fn column_pmf(&self) -> ColumnPmf {
        ColumnPmf::new_unchecked(self.k(), self.q(), self.column_law().to_vec())
    }

    /// log2 of the transition from `from` to `to`; for i.i.d. models this is
    /// the column pmf of `to`.
    #[inline]
    pub fn log2_transition(&self, from: usize, to: usize) -> f64 {
        match self {
            SourceModel::Iid(p) => p.probs[to].log2(),
            SourceModel::Markov(m) => m.t(from, to).log2(),
        }
    }

    /// `P(next column = to | current = from)`; for i.i.d. models this is the
    /// column pmf of `to`.
    #[inline]
    pub fn transition_prob(&self, from: usize, to: usize) -> f64 {
        match self {
            SourceModel::Iid(p) => p.probs[to],
            SourceModel::Markov(m) => m.t(from, to),
        }
    }

    /// Same model with rows reordered: new row `j` is old row `perm[j]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let (k, q) = (self.k(), self.q());
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&r| r >= k || std::mem::replace(&mut seen[r], true)) {
            return Err(Error::Usage(format!("{perm:?} is not a permutation of 0..{k}")));
        }
        let states = self.num_states();
        let map: Vec<usize> = (0..states)
            .map(|s| {
                let old = column_symbols(s, k, q);
                let new: Vec<u32> = perm.iter().map(|&r| old[r]).collect();
                column_index(&new, q)
            })
            .collect();
        Ok(match self {
            SourceModel::Iid(p) => {
                let mut probs = vec![0.0; states];
                for (s, &ns) in map.iter().enumerate() {
                    probs[ns] = p.probs[s];
                }
                SourceModel::Iid(ColumnPmf::new_unchecked(k, q, probs))
            }
            SourceModel::Markov(m) => {
                let mut t = vec![0.0; states * states];
                let mut pi = vec![0.0; states];
                for s in 0..states {
                    pi[map[s]] = m.stationary.get(s).copied().unwrap_or(0.0);
                    for u in 0..states {
                        t[map[s] * states + map[u]] = m.t(s, u);
                    }
                }
                let mut chain = MarkovColumnSource::new_unchecked(k, q, t);
                chain.stationary = pi;
                SourceModel::Markov(chain)
            }
        })
    }
}

/// One draw of the k×n matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatrixSample {
    k: usize,
    n: usize,
    q: usize,
    cells: Vec<u32>,
}

impl MatrixSample {
    pub fn new(k: usize, n: usize, q: usize, cells: Vec<u32>) -> Result<Self> {
        if cells.len() != k * n {
            return Err(Error::Usage(format!(
                "matrix has {} cells, expected {k}x{n}",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c as usize >= q) {
            return Err(Error::Usage(format!("symbol {bad} outside alphabet of size {q}")));
        }
        Ok(Self { k, n, q, cells })
    }

    /// Builds a matrix from its sequence of column states.
    pub fn from_column_states(k: usize, q: usize, states: &[usize]) -> Self {
        let n = states.len();
        let mut cells = vec![0u32; k * n];
        for (i, &s) in states.iter().enumerate() {
            for (row, x) in column_symbols(s, k, q).into_iter().enumerate() {
                cells[row * n + i] = x;
            }
        }
        Self { k, n, q, cells }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.cells[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.cells[row * self.n..(row + 1) * self.n]
    }

    pub fn column_state(&self, col: usize) -> usize {
        (0..self.k).fold(0, |acc, r| acc * self.q + self.get(r, col) as usize)
    }

    pub fn column_states(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.column_state(i)).collect()
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [u32] {
        &mut self.cells
    }

    pub(crate) fn set_alphabet(&mut self, q: usize) {
        self.q = q;
    }
}

impl std::fmt::Display for MatrixSample {
    /// One line per row, symbols separated by spaces.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.k {
            let line: Vec<String> = self.row(r).iter().map(u32::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// What [`validate_model`] can complain about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Shape,
    NegativeEntry,
    PmfSum,
    RowSum,
    NotIrreducible,
    Periodic,
    StationaryMismatch,
}

impl ViolationKind {
    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::Shape => "shape",
            ViolationKind::NegativeEntry => "negative entry",
            ViolationKind::PmfSum => "pmf sum",
            ViolationKind::RowSum => "row sum",
            ViolationKind::NotIrreducible => "not irreducible",
            ViolationKind::Periodic => "periodic",
            ViolationKind::StationaryMismatch => "stationary mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, detail: String) {
        self.violations.push(Violation { kind, detail });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let msg = self
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.kind.label(), v.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidModel(msg))
    }
}

/// Collects every invariant violation of a model.
///
/// Chains must have exactly one closed communicating class, and that class
/// must be aperiodic. Transient states are allowed (they carry zero
/// stationary mass), which is what lets correlated-row chains live on a
/// subset of the column states.
pub fn validate_model(model: &SourceModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (k, q) = (model.k(), model.q());
    if k == 0 || q == 0 {
        report.push(ViolationKind::Shape, format!("k={k}, q={q} must be positive"));
        return report;
    }
    let states = match q.checked_pow(k as u32) {
        Some(s) => s,
        None => {
            report.push(ViolationKind::Shape, format!("q^k overflows for q={q}, k={k}"));
            return report;
        }
    };
    match model {
        SourceModel::Iid(pmf) => {
            if pmf.probs.len() != states {
                report.push(
                    ViolationKind::Shape,
                    format!("pmf has {} entries, expected q^k = {states}", pmf.probs.len()),
                );
                return report;
            }
            check_entries(&pmf.probs, &mut report);
            let sum: f64 = pmf.probs.iter().sum();
            if (sum - 1.0).abs() > PMF_TOL {
                report.push(ViolationKind::PmfSum, format!("entries sum to {sum}"));
            }
        }
        SourceModel::Markov(chain) => {
            if chain.transition.len() != states * states {
                report.push(
                    ViolationKind::Shape,
                    format!(
                        "transition has {} entries, expected {}",
                        chain.transition.len(),
                        states * states
                    ),
                );
                return report;
            }
            check_entries(&chain.transition, &mut report);
            for s in 0..states {
                let row_sum: f64 = chain.transition[s * states..(s + 1) * states].iter().sum();
                if (row_sum - 1.0).abs() > PMF_TOL {
                    report.push(ViolationKind::RowSum, format!("row {s} sums to {row_sum}"));
                }
            }
            check_ergodic(&chain.transition, states, &mut report);
            if !chain.stationary.is_empty() {
                let residual = stationary_residual(&chain.transition, &chain.stationary, states);
                if residual > STATIONARY_CHECK_TOL {
                    report.push(
                        ViolationKind::StationaryMismatch,
                        format!("|πT - π|_1 = {residual:e}"),
                    );
                }
            }
        }
    }
    report
}

fn check_entries(values: &[f64], report: &mut ValidationReport) {
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        report.push(ViolationKind::NegativeEntry, format!("entry {i} is {v}"));
    }
}

fn check_ergodic(t: &[f64], states: usize, report: &mut ValidationReport) {
    let succ: Vec<Vec<usize>> = (0..states)
        .map(|s| (0..states).filter(|&u| t[s * states + u] > 0.0).collect())
        .collect();
    let reach: Vec<Vec<bool>> = (0..states).map(|s| reachable(&succ, s)).collect();
    // A state is recurrent iff everything it reaches reaches it back.
    let recurrent: Vec<usize> = (0..states)
        .filter(|&s| (0..states).all(|u| !reach[s][u] || reach[u][s]))
        .collect();
    let mut classes: Vec<usize> = Vec::new();
    for &s in &recurrent {
        if !classes.iter().any(|&c| reach[c][s]) {
            classes.push(s);
        }
    }
    if classes.len() != 1 {
        report.push(
            ViolationKind::NotIrreducible,
            format!("{} closed communicating classes", classes.len()),
        );
        return;
    }
    let root = classes[0];
    let period = class_period(&succ, root, &reach[root]);
    if period != 1 {
        report.push(ViolationKind::Periodic, format!("closed class has period {period}"));
    }
}

fn reachable(succ: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(s) = stack.pop() {
        for &u in &succ[s] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}

/// gcd over edges of `level(u) + 1 - level(v)` inside the class.
fn class_period(succ: &[Vec<usize>], root: usize, in_class: &[bool]) -> usize {
    let mut level = vec![usize::MAX; succ.len()];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut g = 0usize;
    while let Some(s) = queue.pop_front() {
        for &u in &succ[s] {
            if !in_class[u] {
                continue;
            }
            if level[u] == usize::MAX {
                level[u] = level[s] + 1;
                queue.push_back(u);
            } else {
                let diff = (level[s] + 1).abs_diff(level[u]);
                g = gcd(g, diff);
            }
        }
    }
    g
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn stationary_residual(t: &[f64], pi: &[f64], states: usize) -> f64 {
    step(t, pi, states)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .sum()
}

fn step(t: &[f64], pi: &[f64], states: usize) -> Vec<f64> {
    let mut next = vec![0.0; states];
    for (s, &mass) in pi.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for (u, slot) in next.iter_mut().enumerate() {
            *slot += mass * t[s * states + u];
        }
    }
    next
}

/// Stationary law of a validated chain by power iteration from uniform.
pub fn stationary_distribution(transition: &[f64], states: usize) -> Result<Vec<f64>> {
    let mut pi = vec![1.0 / states as f64; states];
    let mut residual = f64::INFINITY;
    for _ in 0..STATIONARY_MAX_ITERS {
        let mut next = step(transition, &pi, states);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if residual <= STATIONARY_TOL {
            return Ok(pi);
        }
    }
    Err(Error::StationaryFailed {
        residual,
        iterations: STATIONARY_MAX_ITERS,
    })
}

/// Marginal of a column pmf on a subset of rows (0-based, any order).
/// The output is indexed with the first listed row most significant.
pub fn row_marginal_pmf(pmf: &ColumnPmf, rows: &[usize]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::Usage("row subset must be nonempty".into()));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= pmf.k) {
        return Err(Error::Usage(format!("row {r} out of range for k={}", pmf.k)));
    }
    let mut out = vec![0.0; ipow(pmf.q, rows.len())];
    for (s, &p) in pmf.probs.iter().enumerate() {
        let idx = rows
            .iter()
            .fold(0, |acc, &r| acc * pmf.q + row_symbol(s, r, pmf.k, pmf.q) as usize);
        out[idx] += p;
    }
    Ok(out)
}

/// Draws a k×n matrix. Deterministic given `seed`.
pub fn sample_matrix(model: &SourceModel, n: usize, seed: u64) -> MatrixSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = match model {
        SourceModel::Iid(pmf) => {
            let dist = WeightedIndex::new(&pmf.probs).expect("validated pmf");
            (0..n).map(|_| dist.sample(&mut rng)).collect::<Vec<_>>()
        }
        SourceModel::Markov(chain) => {
            let s = chain.num_states();
            let rows: Vec<WeightedIndex<f64>> = (0..s)
                .map(|i| WeightedIndex::new(&chain.transition[i * s..(i + 1) * s]).expect("validated chain"))
                .collect();
            let init = WeightedIndex::new(&chain.stationary).expect("stationary law");
            let mut out = Vec::with_capacity(n);
            let mut cur = init.sample(&mut rng);
            for i in 0..n {
                if i > 0 {
                    cur = rows[cur].sample(&mut rng);
                }
                out.push(cur);
            }
            out
        }
    };
    MatrixSample::from_column_states(model.k(), model.q(), &states)
}

/// log2-probability of one row sequence, marginalizing the other rows.
/// Returns `-inf` for impossible sequences.
pub fn row_sequence_log_prob(model: &SourceModel, row: usize, x: &[u32]) -> f64 {
    let (k, q) = (model.k(), model.q());
    let states = model.num_states();
    match model {
        SourceModel::Iid(pmf) => {
            let marg = row_marginal_pmf(pmf, &[row]).expect("row in range");
            x.iter().map(|&v| marg[v as usize].log2()).sum()
        }
        SourceModel::Markov(chain) => {
            let matches = |s: usize, v: u32| row_symbol(s, row, k, q) == v;
            let mut log_norm = 0.0;
            let mut alpha = vec![0.0; states];
            for (i, &v) in x.iter().enumerate() {
                let next: Vec<f64> = if i == 0 {
                    (0..states)
                        .map(|s| if matches(s, v) { chain.stationary[s] } else { 0.0 })
                        .collect()
                } else {
                    (0..states)
                        .map(|u| {
                            if !matches(u, v) {
                                return 0.0;
                            }
                            alpha
                                .iter()
                                .enumerate()
                                .map(|(s, a)| a * chain.t(s, u))
                                .sum()
                        })
                        .collect()
                };
                let total: f64 = next.iter().sum();
                if total == 0.0 {
                    return f64::NEG_INFINITY;
                }
                log_norm += total.log2();
                alpha = next.into_iter().map(|a| a / total).collect();
            }
            log_norm
        }
    }
}

/// log2-probability of a whole matrix. Returns `-inf` for impossible ones.
pub fn sequence_log_prob(model: &SourceModel, sample: &MatrixSample) -> f64 {
    let cols = sample.column_states();
    match model {
        SourceModel::Iid(pmf) => cols.iter().map(|&s| pmf.probs[s].log2()).sum(),
        SourceModel::Markov(chain) => {
            let Some(&first) = cols.first() else {
                return 0.0;
            };
            let mut lp = chain.stationary[first].log2();
            for w in cols.windows(2) {
                lp += chain.t(w[0], w[1]).log2();
            }
            lp
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic_pmf() -> ColumnPmf {
        ColumnPmf::new(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap()
    }

    #[test]
    fn index_convention_row_one_most_significant() {
        assert_eq!(column_index(&[1, 0], 2), 2);
        assert_eq!(column_symbols(2, 2, 2), vec![1, 0]);
        assert_eq!(row_symbol(2, 0, 2, 2), 1);
        assert_eq!(row_symbol(2, 1, 2, 2), 0);
        assert_eq!(column_index(&[2, 1, 0], 3), 21);
    }

    #[test]
    fn uniform_pmf_is_valid() {
        let report = validate_model(&SourceModel::Iid(ColumnPmf::uniform(2, 2)));
        assert!(report.is_valid());
    }

    #[test]
    fn pmf_sum_violation_reported() {
        let pmf = ColumnPmf::new_unchecked(2, 2, vec![0.5, 0.5, 0.1, 0.0]);
        let report = validate_model(&SourceModel::Iid(pmf));
        assert!(report.has(ViolationKind::PmfSum));
        assert_eq!(report.violations[0].kind.label(), "pmf sum");
    }

    #[test]
    fn identity_chain_is_not_irreducible() {
        let chain = MarkovColumnSource::new_unchecked(1, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let report = validate_model(&SourceModel::Markov(chain));
        assert!(report.has(ViolationKind::NotIrreducible));
    }

    #[test]
    fn flip_chain_is_periodic() {
        let chain = MarkovColumnSource::new_unchecked(1, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let report = validate_model(&SourceModel::Markov(chain));
        assert!(report.has(ViolationKind::Periodic));
        assert!(!report.has(ViolationKind::NotIrreducible));
    }

    #[test]
    fn row_sum_and_negative_entries_reported() {
        let chain = MarkovColumnSource::new_unchecked(1, 2, vec![0.7, 0.2, -0.1, 1.1]);
        let report = validate_model(&SourceModel::Markov(chain));
        assert!(report.has(ViolationKind::RowSum));
        assert!(report.has(ViolationKind::NegativeEntry));
    }

    #[test]
    fn shape_mismatch_reported() {
        let pmf = ColumnPmf::new_unchecked(2, 2, vec![0.5, 0.5]);
        assert!(validate_model(&SourceModel::Iid(pmf)).has(ViolationKind::Shape));
    }

    #[test]
    fn stationary_of_doubly_stochastic_is_uniform() {
        let chain = MarkovColumnSource::sticky(2, 2, 0.8).unwrap();
        for &p in chain.stationary() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_symmetric_two_state() {
        let pi = stationary_distribution(&[0.9, 0.1, 0.1, 0.9], 2).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_asymmetric_two_state() {
        // π T = π with T = [[.5,.5],[.25,.75]]: 0.5 π0 = 0.25 π1 → π = (1/3, 2/3).
        let pi = stationary_distribution(&[0.5, 0.5, 0.25, 0.75], 2).unwrap();
        assert!((pi[0] - 1.0 / 3.0).abs() < 1e-11);
        assert!((pi[1] - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn identical_rows_chain_has_transient_states() {
        let chain = MarkovColumnSource::identical_rows_sticky(2, 2, 0.9).unwrap();
        let pi = chain.stationary();
        assert!(pi[1] < 1e-12 && pi[2] < 1e-12);
        assert!((pi[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_pmf_samples_zero_matrix() {
        let mut probs = vec![0.0; 4];
        probs[0] = 1.0;
        let model = SourceModel::Iid(ColumnPmf::new(2, 2, probs).unwrap());
        let m = sample_matrix(&model, 17, 3);
        assert!(m.cells().iter().all(|&c| c == 0));
    }

    #[test]
    fn identical_rows_pmf_samples_equal_rows() {
        let model = SourceModel::Iid(ColumnPmf::identical_rows_uniform(2, 2));
        for seed in 0..20 {
            let m = sample_matrix(&model, 4, seed);
            assert_eq!(m.row(0), m.row(1));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = SourceModel::Markov(MarkovColumnSource::sticky(2, 2, 0.8).unwrap());
        assert_eq!(sample_matrix(&model, 50, 99), sample_matrix(&model, 50, 99));
        assert_ne!(sample_matrix(&model, 50, 99), sample_matrix(&model, 50, 100));
    }

    #[test]
    fn row_marginals() {
        let m = row_marginal_pmf(&generic_pmf(), &[0]).unwrap();
        assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12);
        let all = row_marginal_pmf(&generic_pmf(), &[0, 1]).unwrap();
        assert_eq!(all, generic_pmf().probs().to_vec());
        let prod = ColumnPmf::product(2, &[vec![0.7, 0.3], vec![0.6, 0.4]]).unwrap();
        let m2 = row_marginal_pmf(&prod, &[1]).unwrap();
        assert!((m2[0] - 0.6).abs() < 1e-12 && (m2[1] - 0.4).abs() < 1e-12);
        assert!(row_marginal_pmf(&prod, &[]).is_err());
    }

    #[test]
    fn row_log_probs() {
        let uniform = SourceModel::Iid(ColumnPmf::uniform(1, 2));
        assert_eq!(row_sequence_log_prob(&uniform, 0, &[0, 1, 1, 0, 1, 0, 0, 1]), -8.0);

        let ident = SourceModel::Iid(ColumnPmf::identical_rows_uniform(2, 2));
        assert!((row_sequence_log_prob(&ident, 0, &[0, 1, 0]) + 3.0).abs() < 1e-12);

        let chain = SourceModel::Markov(MarkovColumnSource::sticky(1, 2, 0.9).unwrap());
        let expected = (0.5f64 * 0.9 * 0.1).log2();
        assert!((row_sequence_log_prob(&chain, 0, &[0, 0, 1]) - expected).abs() < 1e-9);
        assert!((expected + 4.4739).abs() < 1e-4);
    }

    #[test]
    fn matrix_log_probs() {
        let mut probs = vec![0.0; 4];
        probs[0] = 1.0;
        let det = SourceModel::Iid(ColumnPmf::new(2, 2, probs).unwrap());
        let zero = MatrixSample::new(2, 3, 2, vec![0; 6]).unwrap();
        assert_eq!(sequence_log_prob(&det, &zero), 0.0);

        let model = SourceModel::Iid(generic_pmf());
        let m = MatrixSample::from_column_states(2, 2, &[0, 3]);
        assert!((sequence_log_prob(&model, &m) - 0.16f64.log2()).abs() < 1e-12);

        let chain = SourceModel::Markov(MarkovColumnSource::sticky(2, 2, 0.8).unwrap());
        let c = MatrixSample::from_column_states(2, 2, &[2, 2, 2]);
        assert!((sequence_log_prob(&chain, &c) - (0.25f64 * 0.8 * 0.8).log2()).abs() < 1e-9);
    }

    #[test]
    fn impossible_sequence_is_negative_infinity() {
        let model = SourceModel::Iid(ColumnPmf::identical_rows_uniform(2, 2));
        let m = MatrixSample::from_column_states(2, 2, &[1]);
        assert_eq!(sequence_log_prob(&model, &m), f64::NEG_INFINITY);
    }

    #[test]
    fn permute_rows_swaps_marginals() {
        let prod = ColumnPmf::product(2, &[vec![0.7, 0.3], vec![0.6, 0.4]]).unwrap();
        let swapped = SourceModel::Iid(prod).permute_rows(&[1, 0]).unwrap();
        let SourceModel::Iid(p) = swapped else { unreachable!() };
        let m = row_marginal_pmf(&p, &[0]).unwrap();
        assert!((m[0] - 0.6).abs() < 1e-12);
        assert!(SourceModel::Iid(generic_pmf()).permute_rows(&[0, 0]).is_err());
    }
}
