//! Transcript diagnostics computed from `(policy, recommendation, action, state)` counts.

use std::collections::BTreeMap;

use serde::Serialize;

use super::stream::PolicyBook;
use crate::error::{Error, Result};
use crate::game::TIE_TOL;

/// `n[(policy id, r)][a * |Y| + y]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    n_actions: usize,
    n_states: usize,
    cells: BTreeMap<(usize, usize), Vec<u64>>,
    rounds: u64,
}

impl CountTable {
    pub fn new(n_actions: usize, n_states: usize) -> Self {
        CountTable {
            n_actions,
            n_states,
            cells: BTreeMap::new(),
            rounds: 0,
        }
    }

    pub fn record(&mut self, pid: usize, r: usize, a: usize, y: usize) {
        let (na, ny) = (self.n_actions, self.n_states);
        self.cells.entry((pid, r)).or_insert_with(|| vec![0; na * ny])[a * ny + y] += 1;
        self.rounds += 1;
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn get(&self, pid: usize, r: usize, a: usize, y: usize) -> u64 {
        self.cells.get(&(pid, r)).map_or(0, |c| c[a * self.n_states + y])
    }

    pub fn contexts(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.cells.keys()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecretInfoRow {
    pub policy: String,
    pub recommendation: usize,
    pub n: u64,
    pub dev_u: f64,
    pub dev_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// all normalized by `T`
    pub swap_reg: f64,
    pub neg_reg: f64,
    pub ugap: f64,
    /// unnormalized swap regret
    pub swap_reg_sum: f64,
    pub secret_info: Vec<SecretInfoRow>,
    /// rounds with `a_t != r_t`
    pub disagreements: u64,
}

pub fn assumption_diagnostics(counts: &CountTable, book: &PolicyBook) -> Diagnostics {
    let (na, ny) = (counts.n_actions, counts.n_states);
    let t = counts.rounds.max(1) as f64;
    let mut swap = 0.0;
    let mut realized_u = 0.0;
    let mut best_fixed = 0.0;
    let mut secret = Vec::new();
    let mut disagreements = 0;
    for (&(pid, r), n) in &counts.cells {
        let tab = book.table(pid);
        let cell = |a: usize, y: usize| n[a * ny + y] as f64;
        for a in 0..na {
            let gain = (0..na)
                .map(|b| (0..ny).map(|y| cell(a, y) * (tab.u(b, y) - tab.u(a, y))).sum::<f64>())
                .fold(0.0, f64::max);
            swap += gain;
            if a != r {
                disagreements += n[a * ny..(a + 1) * ny].iter().sum::<u64>();
            }
        }
        let col: Vec<f64> = (0..ny).map(|y| (0..na).map(|a| cell(a, y)).sum()).collect();
        let row: Vec<f64> = (0..na).map(|a| (0..ny).map(|y| cell(a, y)).sum()).collect();
        let total: f64 = col.iter().sum();
        let mut own_u = 0.0;
        let mut own_v = 0.0;
        for a in 0..na {
            for y in 0..ny {
                own_u += cell(a, y) * tab.u(a, y);
                own_v += cell(a, y) * tab.v(a, y);
            }
        }
        realized_u += own_u;
        best_fixed += (0..na)
            .map(|b| (0..ny).map(|y| col[y] * tab.u(b, y)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        // replace a_t by an independent draw from the context's empirical action mix
        let mut mix_u = 0.0;
        let mut mix_v = 0.0;
        for y in 0..ny {
            for a in 0..na {
                let w = row[a] / total;
                mix_u += col[y] * w * tab.u(a, y);
                mix_v += col[y] * w * tab.v(a, y);
            }
        }
        secret.push(SecretInfoRow {
            policy: book.policy(pid).label(),
            recommendation: r,
            n: total as u64,
            dev_u: (own_u - mix_u).abs() / total,
            dev_v: (own_v - mix_v).abs() / total,
        });
    }
    let neg = (realized_u - best_fixed) / t;
    Diagnostics {
        swap_reg: swap / t,
        neg_reg: neg,
        ugap: swap / t + neg,
        swap_reg_sum: swap,
        secret_info: secret,
        disagreements,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisagreementBound {
    pub count: u64,
    pub bound: f64,
    pub delta: f64,
    pub violated: bool,
}

/// Two-action bound `(SwapReg + (1+d) sum sqrt(n_{p,r,y}) / d) / d` on rounds with `a_t != r_t`,
/// with `d` the smallest per-state utility gap over the policies and states that occurred.
pub fn disagreement_diagnostic(counts: &CountTable, book: &PolicyBook, swap_reg_sum: f64) -> Result<DisagreementBound> {
    if counts.n_actions != 2 {
        return Err(Error::domain("disagreement diagnostic needs exactly two actions"));
    }
    let ny = counts.n_states;
    let mut delta = f64::INFINITY;
    let mut root_sum = 0.0;
    let mut count = 0;
    for (&(pid, r), n) in &counts.cells {
        let tab = book.table(pid);
        for y in 0..ny {
            let ny_count = n[y] + n[ny + y];
            if ny_count > 0 {
                delta = delta.min((tab.u(0, y) - tab.u(1, y)).abs());
                root_sum += (ny_count as f64).sqrt();
            }
        }
        count += n[(1 - r) * ny..(2 - r) * ny].iter().sum::<u64>();
    }
    if !(delta > TIE_TOL) {
        return Err(Error::domain(format!("per-state utility gap {delta} is a tie")));
    }
    let bound = (swap_reg_sum + (1.0 + delta) * root_sum / delta) / delta;
    Ok(DisagreementBound {
        count,
        bound,
        delta,
        violated: count as f64 > bound,
    })
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares `(slope, intercept)` of `ys` on `xs`; `None` for fewer than two distinct `xs`.
pub fn affine_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `ln y` against `ln x`; `None` unless every value is positive.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    affine_fit(&lx, &ly).map(|f| f.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameKind, GameSpec, Policy, StateSpace, TabularSpec};

    fn one_policy_book(u: Vec<Vec<f64>>) -> PolicyBook {
        // u[a][y]; principal value mirrors the agent's
        let tab = TabularSpec {
            actions: (0..u.len()).map(|a| format!("a{a}")).collect(),
            policies: vec!["p".into()],
            u: u.iter().map(|r| vec![r.clone()]).collect(),
            v: u.iter().map(|r| vec![r.clone()]).collect(),
        };
        let ny = u[0].len();
        let g = GameSpec::new(
            StateSpace::new((0..ny).map(|y| format!("y{y}")).collect()).unwrap(),
            GameKind::Tabular(tab),
            vec![Policy::Table(0)],
        )
        .unwrap();
        let mut book = PolicyBook::default();
        book.intern(&g, &Policy::Table(0)).unwrap();
        book
    }

    #[test]
    fn hand_transcript_swap_regret() {
        // a1 earns 0 and a2 earns 1 in both states; the agent plays a1 twice
        let book = one_policy_book(vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
        let mut c = CountTable::new(2, 2);
        for (a, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            c.record(0, 1, a, y);
        }
        let d = assumption_diagnostics(&c, &book);
        assert!((d.swap_reg - 2.0 / 4.0).abs() < 1e-12);
        assert!((d.neg_reg + 2.0 / 4.0).abs() < 1e-12);
        assert!(d.ugap.abs() < 1e-12);
        assert_eq!(d.disagreements, 2);
    }

    #[test]
    fn follower_has_no_secret_information() {
        let book = one_policy_book(vec![vec![0.2, 0.9], vec![0.7, 0.1]]);
        let mut c = CountTable::new(2, 2);
        for y in [0, 1, 1, 0, 1] {
            c.record(0, 1, 1, y);
        }
        let d = assumption_diagnostics(&c, &book);
        assert_eq!(d.disagreements, 0);
        assert!(d.secret_info.iter().all(|r| r.dev_u == 0.0 && r.dev_v == 0.0));
    }

    #[test]
    fn clairvoyant_play_shows_secret_information() {
        let book = one_policy_book(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mut c = CountTable::new(2, 2);
        for y in [0, 1, 0, 1] {
            c.record(0, 0, y, y);
        }
        let d = assumption_diagnostics(&c, &book);
        assert!((d.secret_info[0].dev_u - 0.5).abs() < 1e-12);
        assert!(d.neg_reg > 0.0);
    }

    #[test]
    fn disagreement_bound_holds_for_follower() {
        let book = one_policy_book(vec![vec![0.2, 0.9], vec![0.7, 0.1]]);
        let mut c = CountTable::new(2, 2);
        for y in [0, 1, 1] {
            c.record(0, 1, 1, y);
        }
        let b = disagreement_diagnostic(&c, &book, 0.0).unwrap();
        assert_eq!(b.count, 0);
        assert!(!b.violated);
        assert!((b.delta - 0.5).abs() < 1e-12);
        let tie = one_policy_book(vec![vec![0.5, 0.9], vec![0.5, 0.1]]);
        assert!(disagreement_diagnostic(&c, &tie, 0.0).is_err());
    }

    #[test]
    fn fits() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0, 1.0]).is_none());
        assert!(loglog_slope(&[2.0], &[1.0]).is_none());
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
