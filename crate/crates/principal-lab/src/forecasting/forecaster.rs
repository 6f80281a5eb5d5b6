use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::events::{BiasLedger, EventSet};
use super::grid::ForecastGrid;
use crate::error::{Error, Result};
use crate::game::Forecast;

/// Per-cell visit counts and realized outcome counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationLedger {
    n: Vec<u64>,
    outcomes: Vec<Vec<u64>>,
}

impl CalibrationLedger {
    pub fn new(cells: usize, dim: usize) -> Self {
        CalibrationLedger {
            n: vec![0; cells],
            outcomes: vec![vec![0; dim]; cells],
        }
    }

    pub fn record(&mut self, cell: usize, y: usize) {
        self.n[cell] += 1;
        self.outcomes[cell][y] += 1;
    }

    pub fn count(&self, cell: usize) -> u64 {
        self.n[cell]
    }

    pub fn total(&self) -> u64 {
        self.n.iter().sum()
    }

    /// `sum_{t: pi_t = g} (g - e_{y_t})`.
    pub fn error(&self, grid: &ForecastGrid, cell: usize) -> Vec<f64> {
        let n = self.n[cell] as f64;
        grid.cell(cell)
            .probs()
            .iter()
            .zip(&self.outcomes[cell])
            .map(|(g, &k)| n * g - k as f64)
            .collect()
    }

    /// `max_g ||error_g||_1 / T`.
    pub fn max_error(&self, grid: &ForecastGrid) -> f64 {
        let t = self.total().max(1) as f64;
        (0..self.n.len())
            .map(|g| self.error(grid, g).iter().map(|x| x.abs()).sum::<f64>() / t)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "forecast")]
pub enum ForecasterKind {
    Calibrated,
    EventUnbiased,
    Fixed(Forecast),
}

/// A forecast emitted for one round together with the mixture it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastDraw {
    /// `(cell, weight)`; empty for a fixed forecaster
    pub mixture: Vec<(usize, f64)>,
    /// mean of the mixture
    pub mean: Vec<f64>,
    pub cell: Option<usize>,
    pub forecast: Forecast,
}

struct Pending {
    cell: Option<usize>,
    forecast: Forecast,
    active: Vec<usize>,
}

/// Stateful forecaster that sees only past states.
pub struct Forecaster {
    kind: ForecasterKind,
    grid: ForecastGrid,
    events: EventSet,
    cell_events: Vec<Vec<usize>>,
    fixed_events: Vec<usize>,
    bias: BiasLedger,
    calib: CalibrationLedger,
    anchor: usize,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
}

const FP_ITERS: usize = 200;
const FP_GAP: f64 = 1e-6;

impl Forecaster {
    /// An empty event set falls back to the single always-on event.
    pub fn new(kind: ForecasterKind, grid: ForecastGrid, events: EventSet, seed: u64) -> Result<Self> {
        let events = if events.is_empty() {
            EventSet::marginal()
        } else {
            events
        };
        let dim = grid.dim();
        if let ForecasterKind::Fixed(f) = &kind {
            if f.dim() != dim {
                return Err(Error::param(
                    "forecaster.forecast",
                    "dimension does not match the state space",
                ));
            }
        }
        let mut bias = BiasLedger::with_events(dim, &events);
        let cell_events = grid
            .cells()
            .iter()
            .map(|c| events.active(c).iter().map(|id| bias.intern(id)).collect())
            .collect();
        let fixed_events = match &kind {
            ForecasterKind::Fixed(f) => events.active(f).iter().map(|id| bias.intern(id)).collect(),
            _ => Vec::new(),
        };
        Ok(Forecaster {
            calib: CalibrationLedger::new(grid.len(), dim),
            anchor: grid.uniform_index(),
            kind,
            grid,
            events,
            cell_events,
            fixed_events,
            bias,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
        })
    }

    pub fn kind(&self) -> &ForecasterKind {
        &self.kind
    }

    pub fn grid(&self) -> &ForecastGrid {
        &self.grid
    }

    pub fn events(&self) -> &EventSet {
        &self.events
    }

    pub fn bias_ledger(&self) -> &BiasLedger {
        &self.bias
    }

    pub fn calibration_ledger(&self) -> &CalibrationLedger {
        &self.calib
    }

    /// Accumulated vector whose inner product with `g - e_y` is the potential increase at cell `g`.
    fn pressure(&self, g: usize) -> Vec<f64> {
        match self.kind {
            ForecasterKind::Calibrated => self.calib.error(&self.grid, g),
            _ => {
                let mut v = vec![0.0; self.grid.dim()];
                for &i in &self.cell_events[g] {
                    for (k, x) in self.bias.vector(i).iter().enumerate() {
                        v[k] += x;
                    }
                }
                v
            }
        }
    }

    fn slope(&self, g: usize) -> f64 {
        let p = self.pressure(g);
        p[1] - p[0]
    }

    /// Mixture over at most two adjacent cells for two states.
    fn binary_mixture(&self) -> Vec<(usize, f64)> {
        let m = self.grid.len() - 1;
        let a = self.anchor;
        let ba = self.slope(a);
        if ba.abs() <= 1e-12 {
            return vec![(a, 1.0)];
        }
        let (mut lo, mut hi) = if ba < 0.0 {
            let bm = self.slope(m);
            if bm <= 0.0 {
                return vec![(m, 1.0)];
            }
            (a, m)
        } else {
            let b0 = self.slope(0);
            if b0 >= 0.0 {
                return vec![(0, 1.0)];
            }
            (0, a)
        };
        // invariant: slope(lo) < 0 < slope(hi)
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let b = self.slope(mid);
            if b.abs() <= 1e-12 {
                return vec![(mid, 1.0)];
            }
            if b < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (bl, bh) = (self.slope(lo), self.slope(hi));
        let ql = bh / (bh - bl);
        vec![(lo, ql), (hi, 1.0 - ql)]
    }

    /// Fictitious play on `L(g, y) = <B_g, g - e_y>`, then support reduction.
    fn general_mixture(&self) -> Vec<(usize, f64)> {
        let dim = self.grid.dim();
        let pressures: Vec<Vec<f64>> = (0..self.grid.len()).map(|g| self.pressure(g)).collect();
        let active: Vec<usize> = (0..self.grid.len())
            .filter(|&g| pressures[g].iter().any(|x| x.abs() > 1e-12))
            .collect();
        if active.len() < self.grid.len() {
            // a cell with no accumulated pressure has zero loss against every state
            let idle = (0..self.grid.len())
                .filter(|g| !active.contains(g))
                .min_by_key(|&g| (g as isize - self.anchor as isize).abs())
                .unwrap();
            return vec![(idle, 1.0)];
        }
        let loss: Vec<Vec<f64>> = (0..self.grid.len())
            .map(|g| {
                let b = &pressures[g];
                let dot: f64 = b.iter().zip(self.grid.cell(g).probs()).map(|(x, p)| x * p).sum();
                (0..dim).map(|y| dot - b[y]).collect()
            })
            .collect();
        let mut row_counts = vec![0u32; loss.len()];
        let mut col_counts = vec![0u32; dim];
        let mut row_sum = vec![0.0; dim]; // sum over played rows of L(g, .)
        let mut col_sum = vec![0.0; loss.len()]; // sum over played states of L(., y)
        let mut g = self.anchor;
        for it in 1..=FP_ITERS {
            row_counts[g] += 1;
            for y in 0..dim {
                row_sum[y] += loss[g][y];
            }
            let y = (0..dim).max_by(|&a, &b| row_sum[a].total_cmp(&row_sum[b])).unwrap();
            col_counts[y] += 1;
            for (r, l) in loss.iter().enumerate() {
                col_sum[r] += l[y];
            }
            g = (0..loss.len())
                .min_by(|&a, &b| col_sum[a].total_cmp(&col_sum[b]))
                .unwrap();
            let upper = row_sum[y] / it as f64;
            let lower = col_sum[g] / it as f64;
            if upper - lower < FP_GAP {
                break;
            }
        }
        let total: u32 = row_counts.iter().sum();
        let support: Vec<(usize, f64)> = row_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(g, &c)| (g, c as f64 / total as f64))
            .collect();
        reduce_support(support, |g| loss[g].clone(), dim + 1)
    }

    /// The mixture the next forecast will be drawn from.
    pub fn mixture(&self) -> Vec<(usize, f64)> {
        match self.kind {
            ForecasterKind::Fixed(_) => Vec::new(),
            _ if self.grid.dim() == 2 => self.binary_mixture(),
            _ => self.general_mixture(),
        }
    }

    /// Emits this round's forecast. Must be followed by [`Forecaster::observe`].
    pub fn propose(&mut self) -> Result<ForecastDraw> {
        if self.pending.is_some() {
            return Err(Error::domain("forecast proposed twice without observing a state"));
        }
        if let ForecasterKind::Fixed(f) = &self.kind {
            let f = f.clone();
            self.pending = Some(Pending {
                cell: None,
                forecast: f.clone(),
                active: self.fixed_events.clone(),
            });
            return Ok(ForecastDraw {
                mixture: Vec::new(),
                mean: f.probs().to_vec(),
                cell: None,
                forecast: f,
            });
        }
        let mixture = self.mixture();
        let mut mean = vec![0.0; self.grid.dim()];
        for &(g, w) in &mixture {
            for (k, p) in self.grid.cell(g).probs().iter().enumerate() {
                mean[k] += w * p;
            }
        }
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut cell = mixture[mixture.len() - 1].0;
        for &(g, w) in &mixture {
            acc += w;
            if u < acc {
                cell = g;
                break;
            }
        }
        let forecast = self.grid.cell(cell).clone();
        self.pending = Some(Pending {
            cell: Some(cell),
            forecast: forecast.clone(),
            active: self.cell_events[cell].clone(),
        });
        Ok(ForecastDraw {
            mixture,
            mean,
            cell: Some(cell),
            forecast,
        })
    }

    /// Records the realized state for the pending forecast.
    pub fn observe(&mut self, y: usize) -> Result<()> {
        if y >= self.grid.dim() {
            return Err(Error::domain(format!("state index {y} out of range")));
        }
        let p = self
            .pending
            .take()
            .ok_or_else(|| Error::domain("observe called without a pending forecast"))?;
        self.bias.record(&p.active, &p.forecast, y);
        if let Some(c) = p.cell {
            self.calib.record(c, y);
            self.anchor = c;
        }
        Ok(())
    }
}

/// Shrinks a mixture to at most `max_support` points while keeping `sum_g q_g phi(g)` fixed.
pub fn reduce_support(
    mut q: Vec<(usize, f64)>,
    phi: impl Fn(usize) -> Vec<f64>,
    max_support: usize,
) -> Vec<(usize, f64)> {
    while q.len() > max_support {
        // work on the first max_support + 1 points; a null direction always exists there
        let k = max_support + 1;
        let rows = phi(q[0].0).len() + 1;
        let mut m = DMatrix::<f64>::zeros(rows, k);
        for (j, &(g, _)) in q.iter().take(k).enumerate() {
            for (i, x) in phi(g).into_iter().enumerate() {
                m[(i, j)] = x;
            }
            m[(rows - 1, j)] = 1.0;
        }
        let gram = m.transpose() * &m;
        let eig = SymmetricEigen::new(gram);
        let (idx, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let mut z: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        if !z.iter().any(|&x| x > 1e-12) {
            z.iter_mut().for_each(|x| *x = -*x);
        }
        let theta = (0..k)
            .filter(|&j| z[j] > 1e-12)
            .map(|j| q[j].1 / z[j])
            .fold(f64::INFINITY, f64::min);
        for j in 0..k {
            q[j].1 -= theta * z[j];
        }
        let drop = (0..k)
            .filter(|&j| z[j] > 1e-12)
            .min_by(|&a, &b| q[a].1.total_cmp(&q[b].1))
            .unwrap();
        q.remove(drop);
        q.retain(|&(_, w)| w > 1e-15);
        q.iter_mut().for_each(|p| p.1 = p.1.max(0.0));
    }
    let s: f64 = q.iter().map(|p| p.1).sum();
    q.iter_mut().for_each(|p| p.1 /= s);
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecasting::events::EventFamily;

    fn run(kind: ForecasterKind, m: usize, states: impl Fn(&ForecastDraw, usize) -> usize, t: usize) -> Forecaster {
        let grid = ForecastGrid::new(m, 2).unwrap();
        let mut f = Forecaster::new(kind, grid, EventSet::marginal(), 7).unwrap();
        for s in 0..t {
            let d = f.propose().unwrap();
            let y = states(&d, s);
            f.observe(y).unwrap();
        }
        f
    }

    #[test]
    fn first_forecast_is_uniform() {
        let grid = ForecastGrid::new(32, 2).unwrap();
        let mut f = Forecaster::new(ForecasterKind::Calibrated, grid, EventSet::new(vec![]), 1).unwrap();
        let d = f.propose().unwrap();
        assert_eq!(d.forecast, Forecast::uniform(2));
        assert!(f.propose().is_err());
    }

    #[test]
    fn constant_state_is_learned() {
        let f = run(ForecasterKind::Calibrated, 32, |_, _| 0, 10_000);
        let l = f.calibration_ledger();
        let mean: f64 = (0..f.grid().len())
            .map(|g| l.count(g) as f64 * f.grid().cell(g).get(0))
            .sum::<f64>()
            / 10_000.0;
        assert!(mean >= 0.95, "{mean}");
    }

    #[test]
    fn adversarial_marginal_bias_is_small() {
        let adv = |d: &ForecastDraw, _| usize::from(d.mean[1] < 0.5);
        let f = run(ForecasterKind::EventUnbiased, 32, adv, 10_000);
        assert!(f.bias_ledger().alpha(0) <= 0.05, "{}", f.bias_ledger().alpha(0));
    }

    #[test]
    fn support_is_small_in_three_states() {
        let grid = ForecastGrid::new(6, 3).unwrap();
        let mut f = Forecaster::new(ForecasterKind::EventUnbiased, grid, EventSet::marginal(), 3).unwrap();
        for t in 0..300 {
            let d = f.propose().unwrap();
            assert!(d.mixture.len() <= 4);
            let s: f64 = d.mixture.iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-9);
            f.observe(t % 3).unwrap();
        }
        assert!(f.bias_ledger().alpha(0) < 0.2);
    }

    #[test]
    fn fixed_forecaster_tracks_events() {
        let grid = ForecastGrid::new(4, 2).unwrap();
        let fixed = Forecast::new(vec![0.3, 0.7]).unwrap();
        let ev = EventSet::new(vec![
            EventFamily::always("on"),
            EventFamily::predicate("low", |f: &Forecast| f.get(1) < 0.5),
        ]);
        let mut f = Forecaster::new(ForecasterKind::Fixed(fixed.clone()), grid, ev, 0).unwrap();
        for y in [1, 1, 0] {
            assert_eq!(f.propose().unwrap().forecast, fixed);
            f.observe(y).unwrap();
        }
        let l = f.bias_ledger();
        assert_eq!(l.count(l.index_of("on").unwrap()), 3);
        assert_eq!(l.count(l.index_of("low").unwrap()), 0);
    }

    #[test]
    fn reduction_keeps_expectation() {
        let phi = |g: usize| vec![g as f64, (g * g) as f64 % 7.0];
        let q: Vec<(usize, f64)> = (0..8).map(|g| (g, 1.0 / 8.0)).collect();
        let before: Vec<f64> = (0..2).map(|k| q.iter().map(|&(g, w)| w * phi(g)[k]).sum()).collect();
        let r = reduce_support(q, phi, 3);
        assert!(r.len() <= 3);
        assert!(r.iter().all(|p| p.1 >= 0.0));
        for k in 0..2 {
            let after: f64 = r.iter().map(|&(g, w)| w * phi(g)[k]).sum();
            assert!((after - before[k]).abs() < 1e-9);
        }
    }
}
