use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::game::Forecast;

type Classifier = Arc<dyn Fn(&Forecast) -> Option<String> + Send + Sync>;

/// A family of forecast-measurable events that partitions (part of) the simplex.
///
/// `classify` returns the key of the single active event in the family, or `None`.
/// The event id is `name:key`, or just `name` when the key is empty.
#[derive(Clone)]
pub struct EventFamily {
    name: String,
    classify: Classifier,
    declared: Vec<String>,
}

impl fmt::Debug for EventFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventFamily")
            .field("name", &self.name)
            .field("declared", &self.declared)
            .finish()
    }
}

fn event_id(name: &str, key: &str) -> String {
    if key.is_empty() {
        name.to_string()
    } else {
        format!("{name}:{key}")
    }
}

impl EventFamily {
    pub fn new(
        name: impl Into<String>,
        classify: impl Fn(&Forecast) -> Option<String> + Send + Sync + 'static,
    ) -> Self {
        EventFamily {
            name: name.into(),
            classify: Arc::new(classify),
            declared: Vec::new(),
        }
    }

    /// A single event given by a predicate.
    pub fn predicate(id: impl Into<String>, pred: impl Fn(&Forecast) -> bool + Send + Sync + 'static) -> Self {
        let id = id.into();
        EventFamily {
            declared: vec![id.clone()],
            name: id,
            classify: Arc::new(move |f| pred(f).then(String::new)),
        }
    }

    pub fn always(id: impl Into<String>) -> Self {
        EventFamily::predicate(id, |_| true)
    }

    /// Keys reported in the ledger even if never active.
    pub fn declare(mut self, keys: impl IntoIterator<Item = String>) -> Self {
        let name = self.name.clone();
        self.declared.extend(keys.into_iter().map(|k| event_id(&name, &k)));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn active(&self, f: &Forecast) -> Option<String> {
        (self.classify)(f).map(|k| event_id(&self.name, &k))
    }
}

#[derive(Debug, Clone, Default)]
pub struct EventSet {
    families: Vec<EventFamily>,
}

impl EventSet {
    pub fn new(families: Vec<EventFamily>) -> Self {
        EventSet { families }
    }

    /// The single always-on event used when no events are requested.
    pub fn marginal() -> Self {
        EventSet::new(vec![EventFamily::always("all")])
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn families(&self) -> &[EventFamily] {
        &self.families
    }

    pub fn push(&mut self, fam: EventFamily) {
        self.families.push(fam);
    }

    pub fn active(&self, f: &Forecast) -> Vec<String> {
        self.families.iter().filter_map(|fam| fam.active(f)).collect()
    }

    pub fn declared(&self) -> impl Iterator<Item = &String> {
        self.families.iter().flat_map(|f| f.declared.iter())
    }
}

/// Per-event sums `b_E = sum E(pi_t)(pi_t - y_t)` and activation counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BiasLedger {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    b: Vec<Vec<f64>>,
    n: Vec<u64>,
    rounds: u64,
}

/// One row of a bias audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub event_id: String,
    pub n_e: u64,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t: u64,
}

impl BiasLedger {
    pub fn new(dim: usize) -> Self {
        BiasLedger {
            dim,
            ..Default::default()
        }
    }

    pub fn with_events(dim: usize, events: &EventSet) -> Self {
        let mut l = BiasLedger::new(dim);
        for id in events.declared() {
            l.intern(id);
        }
        l
    }

    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        self.b.push(vec![0.0; self.dim]);
        self.n.push(0);
        i
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.b[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.n[i]
    }

    /// Adds `pi - e_y` to each listed event and advances the round counter.
    pub fn record(&mut self, active: &[usize], forecast: &Forecast, y: usize) {
        for &i in active {
            let b = &mut self.b[i];
            for (k, p) in forecast.probs().iter().enumerate() {
                b[k] += p - if k == y { 1.0 } else { 0.0 };
            }
            self.n[i] += 1;
        }
        self.rounds += 1;
    }

    /// `(1/T) ||b_E||_1` for event `i`.
    pub fn alpha(&self, i: usize) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        self.b[i].iter().map(|x| x.abs()).sum::<f64>() / self.rounds as f64
    }

    pub fn max_alpha(&self) -> f64 {
        (0..self.len()).map(|i| self.alpha(i)).fold(0.0, f64::max)
    }

    /// Rows sorted by event id.
    pub fn rows(&self) -> Vec<BiasRow> {
        let mut rows: Vec<BiasRow> = (0..self.len())
            .map(|i| BiasRow {
                event_id: self.ids[i].clone(),
                n_e: self.n[i],
                alpha: self.alpha(i),
                t: self.rounds,
            })
            .collect();
        rows.sort_by(|a, b| a.event_id.cmp(&b.event_id));
        rows
    }
}

/// Updates `ledger` with one round; returns the indices of the active events.
pub fn update_ledgers(ledger: &mut BiasLedger, events: &EventSet, forecast: &Forecast, y: usize) -> Vec<usize> {
    let active: Vec<usize> = events.active(forecast).iter().map(|id| ledger.intern(id)).collect();
    ledger.record(&active, forecast, y);
    active
}

/// Recomputes `alpha(E)` for every event from a forecast/state history.
pub fn audit_bias(forecasts: &[Forecast], states: &[usize], events: &EventSet) -> Vec<BiasRow> {
    let dim = forecasts.first().map_or(2, |f| f.dim());
    let mut ledger = BiasLedger::with_events(dim, events);
    // forecasts repeat a lot, so evaluate each distinct one once
    let mut cache: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for (f, &y) in forecasts.iter().zip(states) {
        let key: Vec<u64> = f.probs().iter().map(|p| p.to_bits()).collect();
        let active = match cache.get(&key) {
            Some(a) => a.clone(),
            None => {
                let a: Vec<usize> = events.active(f).iter().map(|id| ledger.intern(id)).collect();
                cache.insert(key, a.clone());
                a
            }
        };
        ledger.record(&active, f, y);
    }
    ledger.rows()
}

/// Writes audit rows as CSV with columns `event_id,n_E,alpha,T`.
pub fn write_bias_csv<W: std::io::Write>(rows: &[BiasRow], out: W) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["event_id", "n_E", "alpha", "T"])?;
    for r in rows {
        w.write_record([
            r.event_id.clone(),
            r.n_e.to_string(),
            r.alpha.to_string(),
            r.t.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_update() {
        let ev = EventSet::marginal();
        let mut l = BiasLedger::with_events(2, &ev);
        update_ledgers(&mut l, &ev, &Forecast::uniform(2), 0);
        assert_eq!(l.vector(0), &[-0.5, 0.5]);
    }

    #[test]
    fn inactive_event_untouched() {
        let ev = EventSet::new(vec![EventFamily::predicate("never", |_| false)]);
        let mut l = BiasLedger::with_events(2, &ev);
        for y in [0, 1, 1] {
            update_ledgers(&mut l, &ev, &Forecast::uniform(2), y);
        }
        assert_eq!(l.vector(0), &[0.0, 0.0]);
        assert_eq!(l.count(0), 0);
        assert_eq!(l.rounds(), 3);
    }

    #[test]
    fn three_round_example() {
        let f = vec![Forecast::uniform(2); 3];
        let rows = audit_bias(&f, &[0, 1, 0], &EventSet::marginal());
        assert_eq!(rows.len(), 1);
        assert!((rows[0].alpha - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rows[0].n_e, 3);
        assert_eq!(rows[0].t, 3);
    }

    #[test]
    fn prescient_forecasts_have_no_bias() {
        let states = [0, 1, 1, 0, 1];
        let f: Vec<Forecast> = states.iter().map(|&y| Forecast::point_mass(2, y)).collect();
        let fam = EventFamily::new("side", |f: &Forecast| Some(format!("{}", f.get(1) > 0.5)));
        let rows = audit_bias(&f, &states, &EventSet::new(vec![fam]));
        assert!(rows.iter().all(|r| r.alpha == 0.0));
    }

    #[test]
    fn csv_header() {
        let rows = audit_bias(&[Forecast::uniform(2)], &[1], &EventSet::marginal());
        let mut buf = Vec::new();
        write_bias_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("event_id,n_E,alpha,T\nall,1,"));
    }
}
