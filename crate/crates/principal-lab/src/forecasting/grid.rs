use crate::error::{Error, Result};
use crate::game::Forecast;

/// All forecasts whose entries are multiples of `1/m`.
///
/// For two states, cell `i` puts mass `i/m` on state 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastGrid {
    m: usize,
    dim: usize,
    cells: Vec<Forecast>,
}

fn compositions(m: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 0 {
        out.push(prefix.clone());
        return;
    }
    let used: usize = prefix.iter().sum();
    for k in 0..=(m - used) {
        prefix.push(k);
        compositions(m, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl ForecastGrid {
    pub fn new(m: usize, dim: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("grid", "resolution must be positive"));
        }
        if dim < 2 {
            return Err(Error::param("grid", "need at least two states"));
        }
        let mut tails = Vec::new();
        compositions(m, dim - 1, &mut Vec::new(), &mut tails);
        let cells = tails
            .into_iter()
            .map(|tail| {
                let rest: usize = tail.iter().sum();
                let mut probs = Vec::with_capacity(dim);
                probs.push((m - rest) as f64 / m as f64);
                probs.extend(tail.iter().map(|&k| k as f64 / m as f64));
                Forecast::new(probs).expect("grid cell is a distribution")
            })
            .collect();
        Ok(ForecastGrid { m, dim, cells })
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, i: usize) -> &Forecast {
        &self.cells[i]
    }

    pub fn cells(&self) -> &[Forecast] {
        &self.cells
    }

    /// The cell closest to uniform (exactly uniform when `dim` divides `m`).
    pub fn uniform_index(&self) -> usize {
        let u = 1.0 / self.dim as f64;
        (0..self.len())
            .min_by(|&a, &b| {
                let da: f64 = self.cells[a].probs().iter().map(|p| (p - u).abs()).sum();
                let db: f64 = self.cells[b].probs().iter().map(|p| (p - u).abs()).sum();
                da.total_cmp(&db)
            })
            .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn cell_counts() {
        for (m, d) in [(1, 2), (32, 2), (4, 3), (6, 4)] {
            let g = ForecastGrid::new(m, d).unwrap();
            assert_eq!(g.len(), binom(m + d - 1, d - 1));
        }
    }

    #[test]
    fn binary_ordering() {
        let g = ForecastGrid::new(4, 2).unwrap();
        for i in 0..=4 {
            assert_eq!(g.cell(i).get(1), i as f64 / 4.0);
        }
        assert_eq!(g.uniform_index(), 2);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ForecastGrid::new(0, 2).is_err());
        assert!(ForecastGrid::new(4, 1).is_err());
    }
}
