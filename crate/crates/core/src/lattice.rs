//! Binomial trees: risk-neutral measure, European and American backward
//! induction, the replicating portfolio, path-dependent claims on the full
//! filtration tree, and pricing against an alternative numeraire.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{domain, ensure, Error, Result};

/// Deepest non-recombining tree allowed for path claims (`2^24` leaves).
pub const MAX_FILTRATION_DEPTH: usize = 24;

/// Recombining binomial tree. Node `(i, j)` is step `i` after `j` up-moves.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialTree {
    pub rate: f64,
    pub dt: f64,
    pub n: usize,
    levels: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
}

/// `(S e^{rδt} - S_down) / (S_up - S_down)`, refusing any node where the
/// strict band `S_down < S e^{rδt} < S_up` fails.
pub fn risk_neutral_q(s_now: f64, s_up: f64, s_down: f64, r: f64, dt: f64) -> Result<f64> {
    if s_up == s_down {
        return Err(Error::Arbitrage(format!("S_up = S_down = {s_up}: claim payoffs cannot be spanned")));
    }
    let grown = s_now * (r * dt).exp();
    if !(s_down < grown) {
        return Err(Error::Arbitrage(format!(
            "S_down < S e^(r dt) violated: S_down = {s_down}, S e^(r dt) = {grown}"
        )));
    }
    if !(grown < s_up) {
        return Err(Error::Arbitrage(format!(
            "S e^(r dt) < S_up violated: S e^(r dt) = {grown}, S_up = {s_up}"
        )));
    }
    Ok((grown - s_down) / (s_up - s_down))
}

impl BinomialTree {
    /// Constant multipliers: `S_up = up · S`, `S_down = down · S`.
    pub fn from_multipliers(s0: f64, up: f64, down: f64, rate: f64, dt: f64, n: usize) -> Result<Self> {
        ensure(s0 > 0.0 && up > 0.0 && down > 0.0, || "tree prices must be positive".into())?;
        let levels = (0..=n)
            .map(|i| (0..=i).map(|j| s0 * up.powi(j as i32) * down.powi((i - j) as i32)).collect())
            .collect();
        Self::from_levels(levels, rate, dt)
    }

    /// Cox-Ross-Rubinstein parametrization `up = 1/down = e^{σ√δt}`.
    pub fn crr(s0: f64, sigma: f64, rate: f64, maturity: f64, n: usize) -> Result<Self> {
        ensure(sigma > 0.0 && maturity > 0.0 && n > 0, || {
            "CRR tree needs sigma > 0, maturity > 0 and n > 0".into()
        })?;
        let dt = maturity / n as f64;
        let up = (sigma * dt.sqrt()).exp();
        Self::from_multipliers(s0, up, 1.0 / up, rate, dt, n)
    }

    /// Arbitrary per-node prices; `levels[i]` must hold `i + 1` prices.
    pub fn from_levels(levels: Vec<Vec<f64>>, rate: f64, dt: f64) -> Result<Self> {
        ensure(!levels.is_empty(), || "tree needs at least the root level".into())?;
        ensure(dt > 0.0 && dt.is_finite() && rate.is_finite(), || "tree needs dt > 0 and finite r".into())?;
        for (i, level) in levels.iter().enumerate() {
            if level.len() != i + 1 {
                return domain(format!("level {i} has {} nodes, expected {}", level.len(), i + 1));
            }
        }
        let n = levels.len() - 1;
        let mut q = Vec::with_capacity(n);
        for i in 0..n {
            let row = (0..=i)
                .map(|j| {
                    risk_neutral_q(levels[i][j], levels[i + 1][j + 1], levels[i + 1][j], rate, dt)
                        .map_err(|e| match e {
                            Error::Arbitrage(m) => Error::Arbitrage(format!("node ({i}, {j}): {m}")),
                            other => other,
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            q.push(row);
        }
        Ok(Self { rate, dt, n, levels, q })
    }

    pub fn s0(&self) -> f64 {
        self.levels[0][0]
    }

    pub fn price(&self, i: usize, j: usize) -> f64 {
        self.levels[i][j]
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i][j]
    }

    /// Cash bond `B_i = e^{r i δt}`, `B_0 = 1`.
    pub fn bond(&self, i: usize) -> f64 {
        (self.rate * self.dt * i as f64).exp()
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.dt).exp()
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exercise {
    European,
    American,
}

/// Claim on a tree: a function of the terminal price, or of the whole path
/// (`ups[k]` is the k-th move, `prices` the prices visited, root first).
#[derive(Clone, Copy)]
pub enum TreeClaim<'a> {
    Terminal(&'a dyn Fn(f64) -> f64),
    Path(&'a dyn Fn(&[bool], &[f64]) -> f64),
}

/// How ledger nodes are indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeIndexing {
    /// `(i, j)`, `j` = number of up-moves; children `(i+1, j+1)` and `(i+1, j)`.
    Recombining,
    /// `(i, p)`, bits of `p` = moves so far (most significant first);
    /// children `(i+1, 2p+1)` and `(i+1, 2p)`.
    Filtration,
}

/// Replicating strategy: at each non-terminal node hold `phi` units of stock
/// and `psi` units of the cash bond over the following step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationLedger {
    pub indexing: NodeIndexing,
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub value: Vec<Vec<f64>>,
}

impl ReplicationLedger {
    pub fn children(&self, j: usize) -> (usize, usize) {
        match self.indexing {
            NodeIndexing::Recombining => (j + 1, j),
            NodeIndexing::Filtration => (2 * j + 1, 2 * j),
        }
    }

    fn stock(&self, tree: &BinomialTree, i: usize, j: usize) -> f64 {
        match self.indexing {
            NodeIndexing::Recombining => tree.price(i, j),
            NodeIndexing::Filtration => tree.price(i, j.count_ones() as usize),
        }
    }

    /// Largest `|Δφ S + Δψ B|` over all rebalancing nodes.
    pub fn self_financing_residual(&self, tree: &BinomialTree) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.phi.len().saturating_sub(1) {
            for j in 0..self.phi[i].len() {
                let (u, d) = self.children(j);
                for c in [u, d] {
                    let s = self.stock(tree, i + 1, c);
                    let b = tree.bond(i + 1);
                    let r = (self.phi[i + 1][c] - self.phi[i][j]) * s + (self.psi[i + 1][c] - self.psi[i][j]) * b;
                    worst = worst.max(r.abs() / (1.0 + self.value[i + 1][c].abs()));
                }
            }
        }
        worst
    }

    /// Largest mismatch between the strategy's value and the claim one step on.
    pub fn replication_residual(&self, tree: &BinomialTree) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.phi.len() {
            for j in 0..self.phi[i].len() {
                let (u, d) = self.children(j);
                for c in [u, d] {
                    let held = self.phi[i][j] * self.stock(tree, i + 1, c) + self.psi[i][j] * tree.bond(i + 1);
                    worst = worst.max((held - self.value[i + 1][c]).abs());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreePrice {
    pub value: f64,
    pub ledger: ReplicationLedger,
}

fn hedge(v_up: f64, v_down: f64, s_up: f64, s_down: f64, v_now: f64, s_now: f64, bond: f64) -> (f64, f64) {
    let phi = (v_up - v_down) / (s_up - s_down);
    (phi, (v_now - phi * s_now) / bond)
}

/// Backward induction under the tree's risk-neutral measure, with the
/// replicating portfolio at every node.
pub fn price_european(tree: &BinomialTree, claim: TreeClaim<'_>) -> Result<TreePrice> {
    match claim {
        TreeClaim::Terminal(f) => Ok(price_recombining(tree, f)),
        TreeClaim::Path(f) => price_filtration(tree, f),
    }
}

fn price_recombining(tree: &BinomialTree, payoff: &dyn Fn(f64) -> f64) -> TreePrice {
    let n = tree.n;
    let disc = tree.discount();
    let mut value = vec![Vec::new(); n + 1];
    value[n] = tree.levels[n].iter().map(|&s| payoff(s)).collect();
    let mut phi = vec![Vec::new(); n];
    let mut psi = vec![Vec::new(); n];
    for i in (0..n).rev() {
        let mut vi = Vec::with_capacity(i + 1);
        let mut fi = Vec::with_capacity(i + 1);
        let mut pi = Vec::with_capacity(i + 1);
        for j in 0..=i {
            let q = tree.q[i][j];
            let (vu, vd) = (value[i + 1][j + 1], value[i + 1][j]);
            let v = disc * (q * vu + (1.0 - q) * vd);
            let (a, b) = hedge(vu, vd, tree.levels[i + 1][j + 1], tree.levels[i + 1][j], v, tree.levels[i][j], tree.bond(i));
            vi.push(v);
            fi.push(a);
            pi.push(b);
        }
        value[i] = vi;
        phi[i] = fi;
        psi[i] = pi;
    }
    TreePrice {
        value: value[0][0],
        ledger: ReplicationLedger { indexing: NodeIndexing::Recombining, phi, psi, value },
    }
}

fn price_filtration(tree: &BinomialTree, payoff: &dyn Fn(&[bool], &[f64]) -> f64) -> Result<TreePrice> {
    let n = tree.n;
    if n > MAX_FILTRATION_DEPTH {
        return domain(format!("path claims need depth <= {MAX_FILTRATION_DEPTH}, tree has {n} steps"));
    }
    let disc = tree.discount();
    let mut value = vec![Vec::new(); n + 1];
    let mut ups = vec![false; n];
    let mut prices = vec![0.0; n + 1];
    value[n] = (0..1usize << n)
        .map(|p| {
            prices[0] = tree.s0();
            let mut count = 0;
            for k in 0..n {
                ups[k] = (p >> (n - 1 - k)) & 1 == 1;
                count += ups[k] as usize;
                prices[k + 1] = tree.levels[k + 1][count];
            }
            payoff(&ups, &prices)
        })
        .collect();
    let mut phi = vec![Vec::new(); n];
    let mut psi = vec![Vec::new(); n];
    for i in (0..n).rev() {
        let width = 1usize << i;
        let mut vi = Vec::with_capacity(width);
        let mut fi = Vec::with_capacity(width);
        let mut pi = Vec::with_capacity(width);
        for p in 0..width {
            let j = p.count_ones() as usize;
            let q = tree.q[i][j];
            let (vu, vd) = (value[i + 1][2 * p + 1], value[i + 1][2 * p]);
            let v = disc * (q * vu + (1.0 - q) * vd);
            let (a, b) = hedge(vu, vd, tree.levels[i + 1][j + 1], tree.levels[i + 1][j], v, tree.levels[i][j], tree.bond(i));
            vi.push(v);
            fi.push(a);
            pi.push(b);
        }
        value[i] = vi;
        phi[i] = fi;
        psi[i] = pi;
    }
    Ok(TreePrice {
        value: value[0][0],
        ledger: ReplicationLedger { indexing: NodeIndexing::Filtration, phi, psi, value },
    })
}

/// American value: the larger of immediate exercise and continuation at
/// every node, including the root.
pub fn price_american(tree: &BinomialTree, payoff: &dyn Fn(f64) -> f64) -> f64 {
    let n = tree.n;
    let disc = tree.discount();
    let mut v: Vec<f64> = tree.levels[n].iter().map(|&s| payoff(s)).collect();
    for i in (0..n).rev() {
        for j in 0..=i {
            let q = tree.q[i][j];
            let cont = disc * (q * v[j + 1] + (1.0 - q) * v[j]);
            v[j] = cont.max(payoff(tree.levels[i][j]));
        }
        v.truncate(i + 1);
    }
    v[0]
}

/// Prices either way and reports the gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumeraireCheck {
    pub bank_price: f64,
    pub alt_price: f64,
    pub discrepancy: f64,
}

/// Value process of a terminal claim, usable as a numeraire when positive.
pub fn tradable_process(tree: &BinomialTree, terminal: &[f64]) -> Result<Vec<Vec<f64>>> {
    if terminal.len() != tree.n + 1 {
        return domain(format!("terminal values need {} entries", tree.n + 1));
    }
    let values = terminal.to_vec();
    let priced = price_recombining(tree, &|_| 0.0);
    let mut value = priced.ledger.value;
    value[tree.n] = values;
    let disc = tree.discount();
    for i in (0..tree.n).rev() {
        for j in 0..=i {
            let q = tree.q[i][j];
            value[i][j] = disc * (q * value[i + 1][j + 1] + (1.0 - q) * value[i + 1][j]);
        }
    }
    Ok(value)
}

/// Prices a terminal claim with the cash bond and again with `numeraire`
/// (one strictly positive value per node), under the measure that makes
/// `S/C` a martingale.
pub fn verify_numeraire_invariance(
    tree: &BinomialTree,
    payoff: &dyn Fn(f64) -> f64,
    numeraire: &[Vec<f64>],
) -> Result<NumeraireCheck> {
    let n = tree.n;
    if numeraire.len() != n + 1 || numeraire.iter().enumerate().any(|(i, l)| l.len() != i + 1) {
        return domain("numeraire must give one value per tree node");
    }
    if let Some((i, j)) = numeraire
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().enumerate().map(move |(j, &c)| (i, j, c)))
        .find(|&(_, _, c)| !(c > 0.0))
        .map(|(i, j, _)| (i, j))
    {
        return domain(format!("numeraire must be strictly positive; node ({i}, {j}) is not"));
    }
    let bank_price = price_recombining(tree, payoff).value;
    let mut x: Vec<f64> = (0..=n).map(|j| payoff(tree.levels[n][j]) / numeraire[n][j]).collect();
    for i in (0..n).rev() {
        for j in 0..=i {
            let su = tree.levels[i + 1][j + 1] / numeraire[i + 1][j + 1];
            let sd = tree.levels[i + 1][j] / numeraire[i + 1][j];
            let s = tree.levels[i][j] / numeraire[i][j];
            let qc = (s - sd) / (su - sd);
            x[j] = qc * x[j + 1] + (1.0 - qc) * x[j];
        }
        x.truncate(i + 1);
    }
    let alt_price = numeraire[0][0] * x[0];
    Ok(NumeraireCheck { bank_price, alt_price, discrepancy: (bank_price - alt_price).abs() })
}

/// Stake on game one of a best-of-`2n+1` series that replicates a ±100 bet on
/// the series: `(2n)! / (2^{2n} (n!)²) · 100`.
pub fn world_series_bet(n: u32) -> BigRational {
    let mut ratio = BigRational::one();
    // (2n)!/(n!)² / 4^n = Π_{k=1..n} (2k-1)/(2k)
    for k in 1..=n as i64 {
        ratio *= BigRational::new(BigInt::from(2 * k - 1), BigInt::from(2 * k));
    }
    ratio * BigRational::from_integer(BigInt::from(100))
}

/// Backward induction with exact rationals on the full filtration tree of
/// `depth` fair coin flips. Returns node values per level.
pub fn price_filtration_exact(
    depth: usize,
    q: &BigRational,
    claim: &dyn Fn(&[bool]) -> BigRational,
) -> Result<Vec<Vec<BigRational>>> {
    if depth > MAX_FILTRATION_DEPTH {
        return domain(format!("path claims need depth <= {MAX_FILTRATION_DEPTH}"));
    }
    let one_minus_q = BigRational::one() - q;
    let mut values = vec![Vec::new(); depth + 1];
    let mut ups = vec![false; depth];
    values[depth] = (0..1usize << depth)
        .map(|p| {
            for (k, u) in ups.iter_mut().enumerate() {
                *u = (p >> (depth - 1 - k)) & 1 == 1;
            }
            claim(&ups)
        })
        .collect();
    for i in (0..depth).rev() {
        values[i] = (0..1usize << i)
            .map(|p| q * &values[i + 1][2 * p + 1] + &one_minus_q * &values[i + 1][2 * p])
            .collect();
    }
    Ok(values)
}

/// The series bet priced on the tree: value after winning game one of the
/// claim paying +100 if the series is won and -100 otherwise, with `q = 1/2`.
pub fn world_series_tree_price(n: u32) -> Result<BigRational> {
    let games = 2 * n as usize + 1;
    let need = n as usize + 1;
    let hundred = BigRational::from_integer(BigInt::from(100));
    let claim = |ups: &[bool]| {
        let mut wins = 0;
        let mut losses = 0;
        for &u in ups {
            if u {
                wins += 1;
            } else {
                losses += 1;
            }
            if wins == need {
                return hundred.clone();
            }
            if losses == need {
                return -hundred.clone();
            }
        }
        BigRational::zero()
    };
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let values = price_filtration_exact(games, &half, &claim)?;
    Ok(values[1][1].clone())
}
