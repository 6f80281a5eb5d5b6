//! Binary-state persuasion: envelope, concave closure, stabilization and the discretized oracle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{PersuasionSpec, SignalScheme, TIE_TOL};

/// One maximal interval of the agent's upper envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePiece {
    pub lo: f64,
    pub hi: f64,
    pub strategy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeDecomposition {
    pub pieces: Vec<EnvelopePiece>,
    /// shortest interval length
    pub c_len: f64,
    /// smallest pairwise slope gap
    pub c1: f64,
    pub c2: f64,
}

impl EnvelopeDecomposition {
    /// Interval owned by strategy `s`.
    pub fn interval_of(&self, s: usize) -> Option<(f64, f64)> {
        self.pieces.iter().find(|p| p.strategy == s).map(|p| (p.lo, p.hi))
    }

    /// Interior breakpoints, in increasing order.
    pub fn boundaries(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }
}

fn line(spec: &PersuasionSpec, s: usize) -> (f64, f64) {
    let [u0, u1] = spec.agent_utility[s];
    (u0, u1 - u0)
}

/// Walks the upper envelope of the lines `u(s, mu)` from `mu = 0` to `mu = 1`.
///
/// Fails if some strategy never owns an interval of positive length.
pub fn build_envelope(spec: &PersuasionSpec) -> Result<EnvelopeDecomposition> {
    let n = spec.num_strategies();
    if n == 0 {
        return Err(Error::domain("persuasion spec has no strategies"));
    }
    let lines: Vec<(f64, f64)> = (0..n).map(|s| line(spec, s)).collect();
    let at0 = lines.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
    // among ties at 0, the steepest line wins just after 0
    let mut cur = (0..n)
        .filter(|&s| lines[s].0 >= at0 - TIE_TOL)
        .max_by(|&a, &b| lines[a].1.total_cmp(&lines[b].1).then(b.cmp(&a)))
        .unwrap();
    let mut pos = 0.0;
    let mut pieces = Vec::new();
    loop {
        let (a0, b0) = lines[cur];
        let mut next: Option<(f64, usize)> = None;
        for s in 0..n {
            let (a, b) = lines[s];
            if b <= b0 + TIE_TOL {
                continue;
            }
            let x = (a0 - a) / (b - b0);
            if x < pos - TIE_TOL || x >= 1.0 - TIE_TOL {
                continue;
            }
            let better = match next {
                None => true,
                Some((bx, bs)) => x < bx - TIE_TOL || (x <= bx + TIE_TOL && b > lines[bs].1),
            };
            if better {
                next = Some((x, s));
            }
        }
        match next {
            Some((x, s)) => {
                let x = x.max(pos);
                pieces.push(EnvelopePiece {
                    lo: pos,
                    hi: x,
                    strategy: cur,
                });
                pos = x;
                cur = s;
            }
            None => {
                pieces.push(EnvelopePiece {
                    lo: pos,
                    hi: 1.0,
                    strategy: cur,
                });
                break;
            }
        }
    }
    for s in 0..n {
        match pieces.iter().find(|p| p.strategy == s) {
            Some(p) if p.hi - p.lo > TIE_TOL => {}
            _ => {
                return Err(Error::domain(format!(
                    "strategy `{}` is never uniquely optimal",
                    spec.strategies[s]
                )))
            }
        }
    }
    let c_len = pieces.iter().map(|p| p.hi - p.lo).fold(f64::INFINITY, f64::min);
    let mut c1 = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            c1 = c1.min((lines[i].1 - lines[j].1).abs());
        }
    }
    let c2 = if c1.is_finite() {
        2.0 * ((1.0 / (c1 * c_len)) * (1.0 + 1.0 / c_len)).sqrt()
    } else {
        0.0
    };
    Ok(EnvelopeDecomposition { pieces, c_len, c1, c2 })
}

/// Upper concave hull through a set of `(mu, value)` points with `mu` covering 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcaveClosure {
    /// extreme points `(mu, value, strategy)` sorted by `mu`
    pub points: Vec<(f64, f64, usize)>,
}

impl ConcaveClosure {
    fn from_candidates(mut cand: Vec<(f64, f64, usize)>) -> Self {
        cand.sort_by(|a, b| a.0.total_cmp(&b.0));
        cand.dedup_by(|b, a| {
            if (a.0 - b.0).abs() <= TIE_TOL {
                if b.1 > a.1 {
                    *a = *b;
                }
                true
            } else {
                false
            }
        });
        let mut hull: Vec<(f64, f64, usize)> = Vec::new();
        for p in cand {
            while hull.len() >= 2 {
                let o = hull[hull.len() - 2];
                let a = hull[hull.len() - 1];
                // drop `a` unless it lies strictly above the chord o..p
                let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
                if cross >= -TIE_TOL {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        ConcaveClosure { points: hull }
    }

    /// Indices of the two extreme points bracketing `mu`, and the weight on the right one.
    pub fn bracket(&self, mu: f64) -> (usize, usize, f64) {
        let pts = &self.points;
        if pts.len() == 1 {
            return (0, 0, 0.0);
        }
        let k = pts.partition_point(|p| p.0 <= mu).clamp(1, pts.len() - 1);
        let (l, r) = (k - 1, k);
        let w = ((mu - pts[l].0) / (pts[r].0 - pts[l].0)).clamp(0.0, 1.0);
        (l, r, w)
    }

    pub fn value(&self, mu: f64) -> f64 {
        let (l, r, w) = self.bracket(mu);
        (1.0 - w) * self.points[l].1 + w * self.points[r].1
    }
}

/// Concave closure of `mu -> v(s*(mu))`, using envelope boundaries and the endpoints as candidates.
pub fn concave_closure(spec: &PersuasionSpec, env: &EnvelopeDecomposition) -> ConcaveClosure {
    let mut cand = vec![0.0, 1.0];
    cand.extend(env.boundaries());
    let pts = cand
        .into_iter()
        .map(|mu| {
            let s = spec.best_strategy(mu);
            (mu, spec.principal_value[s], s)
        })
        .collect();
    ConcaveClosure::from_candidates(pts)
}

/// Moves each interior extreme point `beta` into the interval of its principal-favored strategy.
pub fn stabilize_closure(env: &EnvelopeDecomposition, closure: &ConcaveClosure, beta: f64) -> Result<ConcaveClosure> {
    if !(beta >= 0.0 && beta < env.c_len / 4.0) {
        return Err(Error::param(
            "beta",
            format!("must lie in [0, C/4) with C = {}", env.c_len),
        ));
    }
    let pts = closure
        .points
        .iter()
        .map(|&(mu, v, s)| {
            if mu <= 0.0 || mu >= 1.0 {
                return (mu, v, s);
            }
            let (lo, hi) = env.interval_of(s).expect("every strategy owns an interval");
            let moved = if (mu - lo).abs() <= TIE_TOL {
                mu + beta
            } else if (mu - hi).abs() <= TIE_TOL {
                mu - beta
            } else {
                mu
            };
            (moved, v, s)
        })
        .collect();
    Ok(ConcaveClosure::from_candidates(pts))
}

/// A posterior `(weight, mean)` attached to the signal that recommends it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Posterior {
    pub weight: f64,
    pub mean: f64,
    pub signal: usize,
}

/// Inverts Bayes' rule: `p(s|1) = tau mu_s / mu`, `p(s|0) = tau (1 - mu_s)/(1 - mu)`.
///
/// Posteriors sharing a signal are merged. A prior of 0 or 1 yields the single-signal scheme.
pub fn scheme_from_posteriors(n_signals: usize, prior: f64, posteriors: &[Posterior]) -> Result<SignalScheme> {
    if posteriors.is_empty() {
        return Err(Error::domain("no posteriors given"));
    }
    if posteriors.iter().any(|p| p.signal >= n_signals) {
        return Err(Error::domain("posterior signal index out of range"));
    }
    let mass: f64 = posteriors.iter().map(|p| p.weight).sum();
    let mean: f64 = posteriors.iter().map(|p| p.weight * p.mean).sum();
    if posteriors
        .iter()
        .any(|p| p.weight < 0.0 || !(0.0..=1.0).contains(&p.mean))
        || (mass - 1.0).abs() > 1e-9
        || (mean - prior).abs() > 1e-9
    {
        return Err(Error::domain("posteriors are not Bayes-plausible for this prior"));
    }
    if prior <= 0.0 || prior >= 1.0 {
        let top = posteriors.iter().max_by(|a, b| a.weight.total_cmp(&b.weight)).unwrap();
        return Ok(SignalScheme::uninformative(n_signals, top.signal));
    }
    let mut rows = vec![[0.0, 0.0]; n_signals];
    for p in posteriors {
        rows[p.signal][0] += p.weight * (1.0 - p.mean) / (1.0 - prior);
        rows[p.signal][1] += p.weight * p.mean / prior;
    }
    // absorb rounding so columns sum to one exactly
    for y in 0..2 {
        let s: f64 = rows.iter().map(|r| r[y]).sum();
        for r in rows.iter_mut() {
            r[y] = (r[y] / s).clamp(0.0, 1.0);
        }
    }
    SignalScheme::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PersuasionOracleParams {
    pub beta: f64,
    pub x: f64,
    pub delta: f64,
}

impl PersuasionOracleParams {
    /// `x` defaults to `beta`; `delta` must satisfy `delta <= beta^2/16` and have integral inverse.
    pub fn new(beta: f64, x: f64, delta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::param("x", "must lie in [0,1]"));
        }
        if !(delta > 0.0 && delta <= beta * beta / 16.0 + 1e-15) {
            return Err(Error::param("delta", "must lie in (0, beta^2/16]"));
        }
        let inv = 1.0 / delta;
        if (inv - inv.round()).abs() > 1e-6 {
            return Err(Error::param("delta", format!("1/delta = {inv} is not an integer")));
        }
        Ok(PersuasionOracleParams { beta, x, delta })
    }

    /// `beta` with `x = beta` and `delta = beta^2/16` rounded down to the nearest `1/k`.
    pub fn from_beta(beta: f64) -> Result<Self> {
        let steps = (16.0 / (beta * beta) - 1e-9).ceil();
        PersuasionOracleParams::new(beta, beta, 1.0 / steps)
    }

    /// Horizon schedule `beta = 0.48 C T^{-1/10}`, which keeps `beta < C/4` for every `T >= 1024`.
    pub fn schedule(horizon: usize, env: &EnvelopeDecomposition) -> Result<Self> {
        let beta = 0.48 * env.c_len * (horizon.max(1) as f64).powf(-0.1);
        PersuasionOracleParams::from_beta(beta)
    }

    fn steps(&self) -> f64 {
        (1.0 / self.delta).round()
    }

    /// Agent-side stability slack `x c1 beta / 2`.
    pub fn stability_beta(&self, env: &EnvelopeDecomposition) -> f64 {
        self.x * env.c1 * self.beta / 2.0
    }

    /// Principal-side slack `max(x, sqrt(delta))`.
    pub fn stability_gamma(&self) -> f64 {
        self.x.max(self.delta.sqrt())
    }

    /// Optimality slack `3 beta / C + c2 sqrt(eps) + 2 sqrt(delta)`.
    pub fn optimality_slack(&self, env: &EnvelopeDecomposition, eps: f64) -> f64 {
        3.0 * self.beta / env.c_len + env.c2 * eps.sqrt() + 2.0 * self.delta.sqrt()
    }
}

/// Oracle output with the intermediate split it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersuasionDecision {
    pub scheme: SignalScheme,
    /// posteriors before discretization
    pub posteriors: Vec<Posterior>,
    /// value of the stabilized closure at the prior
    pub closure_value: f64,
}

/// Precomputed envelope and stabilized closure for one persuasion game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersuasionOracle {
    pub envelope: EnvelopeDecomposition,
    pub closure: ConcaveClosure,
    pub stabilized: ConcaveClosure,
    pub params: PersuasionOracleParams,
    n: usize,
}

impl PersuasionOracle {
    pub fn new(spec: &PersuasionSpec, params: PersuasionOracleParams) -> Result<Self> {
        let envelope = build_envelope(spec)?;
        let closure = concave_closure(spec, &envelope);
        let stabilized = stabilize_closure(&envelope, &closure, params.beta)?;
        Ok(PersuasionOracle {
            envelope,
            closure,
            stabilized,
            params,
            n: spec.num_strategies(),
        })
    }

    /// Splits `prior` across the bracketing stabilized extreme points, then rounds to the grid.
    pub fn decide(&self, prior: f64) -> Result<PersuasionDecision> {
        if !(0.0..=1.0).contains(&prior) {
            return Err(Error::param("prior", "must lie in [0,1]"));
        }
        let pts = &self.stabilized.points;
        let (l, r, w) = self.stabilized.bracket(prior);
        let closure_value = self.stabilized.value(prior);
        let mut posteriors = vec![Posterior {
            weight: 1.0 - w,
            mean: pts[l].0,
            signal: pts[l].2,
        }];
        if r != l {
            posteriors.push(Posterior {
                weight: w,
                mean: pts[r].0,
                signal: pts[r].2,
            });
        }
        posteriors.retain(|p| p.weight > 0.0);
        if posteriors.len() == 2 && posteriors[0].signal == posteriors[1].signal {
            let s = posteriors[0].signal;
            posteriors = vec![Posterior {
                weight: 1.0,
                mean: prior,
                signal: s,
            }];
        }
        if prior <= 0.0 || prior >= 1.0 || posteriors.len() == 1 {
            let s = posteriors[0].signal;
            return Ok(PersuasionDecision {
                scheme: SignalScheme::uninformative(self.n, s),
                posteriors,
                closure_value,
            });
        }
        let exact = scheme_from_posteriors(self.n, prior, &posteriors)?;
        let (i, j) = (posteriors[0].signal, posteriors[1].signal);
        let k = self.params.steps();
        let round = |p: f64| ((p * k).round() / k).clamp(0.0, 1.0);
        let q0 = round(exact.prob(i, 0));
        let q1 = round(exact.prob(i, 1));
        let mut rows = vec![[0.0, 0.0]; self.n];
        rows[i] = [q0, q1];
        rows[j] = [1.0 - q0, 1.0 - q1];
        Ok(PersuasionDecision {
            scheme: SignalScheme::new(rows)?,
            posteriors,
            closure_value,
        })
    }
}

/// One-shot form of [`PersuasionOracle::decide`].
pub fn persuasion_stable_oracle(
    spec: &PersuasionSpec,
    prior: f64,
    params: PersuasionOracleParams,
) -> Result<SignalScheme> {
    Ok(PersuasionOracle::new(spec, params)?.decide(prior)?.scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::prosecutor_game;
    use crate::game::{Forecast, Policy};
    use crate::oracles::stability::is_stable;

    fn prosecutor() -> PersuasionSpec {
        prosecutor_game(vec![]).as_persuasion().unwrap().clone()
    }

    #[test]
    fn prosecutor_envelope() {
        let env = build_envelope(&prosecutor()).unwrap();
        assert_eq!(env.pieces.len(), 2);
        assert_eq!(env.pieces[0].strategy, 0);
        assert!((env.pieces[0].hi - 0.5).abs() < 1e-12);
        assert!((env.c_len - 0.5).abs() < 1e-12);
        assert!((env.c1 - 2.0).abs() < 1e-12);
        assert!((env.c2 - 2.0 * 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dominated_strategy_is_named() {
        let spec = PersuasionSpec {
            strategies: vec!["a".into(), "b".into(), "never".into()],
            agent_utility: vec![[1.0, 0.0], [0.0, 1.0], [0.1, 0.1]],
            principal_value: vec![0.0, 1.0, 0.5],
        };
        let err = build_envelope(&spec).unwrap_err().to_string();
        assert!(err.contains("never"), "{err}");
    }

    #[test]
    fn three_strategy_envelope_matches_grid() {
        let spec = PersuasionSpec {
            strategies: vec!["lo".into(), "mid".into(), "hi".into()],
            agent_utility: vec![[0.9, 0.0], [0.6, 0.6], [0.0, 0.9]],
            principal_value: vec![0.0, 0.3, 1.0],
        };
        let env = build_envelope(&spec).unwrap();
        assert_eq!(env.pieces.iter().map(|p| p.strategy).collect::<Vec<_>>(), vec![0, 1, 2]);
        for k in 0..=10_000 {
            let mu = k as f64 / 10_000.0;
            let brute = (0..3)
                .max_by(|&a, &b| spec.utility_at(a, mu).total_cmp(&spec.utility_at(b, mu)))
                .unwrap();
            let piece = env.pieces.iter().find(|p| p.lo <= mu && mu <= p.hi).unwrap();
            let gap = spec.utility_at(brute, mu) - spec.utility_at(piece.strategy, mu);
            assert!(gap <= 1e-12);
        }
    }

    #[test]
    fn prosecutor_closure() {
        let spec = prosecutor();
        let env = build_envelope(&spec).unwrap();
        let cl = concave_closure(&spec, &env);
        let mus: Vec<f64> = cl.points.iter().map(|p| p.0).collect();
        assert_eq!(mus, vec![0.0, 0.5, 1.0]);
        assert!((cl.value(0.3) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn constant_value_gives_flat_closure() {
        let spec = PersuasionSpec {
            principal_value: vec![0.4, 0.4],
            ..prosecutor()
        };
        let env = build_envelope(&spec).unwrap();
        let cl = concave_closure(&spec, &env);
        for mu in [0.0, 0.2, 0.7, 1.0] {
            assert!((cl.value(mu) - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn stabilize_moves_boundary_point() {
        let spec = prosecutor();
        let env = build_envelope(&spec).unwrap();
        let cl = concave_closure(&spec, &env);
        let st = stabilize_closure(&env, &cl, 0.05).unwrap();
        assert!(st.points.iter().any(|p| (p.0 - 0.55).abs() < 1e-12 && p.1 == 1.0));
        let v = st.value(0.3);
        assert!((v - 0.3 / 0.55).abs() < 1e-12);
        assert!(cl.value(0.3) - v <= 3.0 * 0.05 / env.c_len);
        assert_eq!(stabilize_closure(&env, &cl, 0.0).unwrap(), cl);
        assert!(stabilize_closure(&env, &cl, 0.125).is_err());
    }

    #[test]
    fn scheme_inversion_example() {
        let post = [
            Posterior {
                weight: 0.4,
                mean: 0.0,
                signal: 0,
            },
            Posterior {
                weight: 0.6,
                mean: 0.5,
                signal: 1,
            },
        ];
        let s = scheme_from_posteriors(2, 0.3, &post).unwrap();
        assert!((s.prob(1, 1) - 1.0).abs() < 1e-12);
        assert!((s.prob(1, 0) - 3.0 / 7.0).abs() < 1e-12);
        assert!((s.prob(0, 0) - 4.0 / 7.0).abs() < 1e-12);
        let single = [Posterior {
            weight: 1.0,
            mean: 0.3,
            signal: 1,
        }];
        assert_eq!(
            scheme_from_posteriors(2, 0.3, &single).unwrap(),
            SignalScheme::uninformative(2, 1)
        );
    }

    #[test]
    fn oracle_output_on_prosecutor() {
        let spec = prosecutor();
        let params = PersuasionOracleParams::from_beta(0.05).unwrap();
        let oracle = PersuasionOracle::new(&spec, params).unwrap();
        let d = oracle.decide(0.3).unwrap();
        let post = d.scheme.posteriors(0.3);
        assert!(post.plausibility_residual() < 1e-9);
        let means: Vec<f64> = post.parts.iter().filter_map(|p| p.1).collect();
        assert!((means[0] - 0.0).abs() <= 2.0 * params.delta.sqrt());
        assert!((means[1] - 0.55).abs() <= 2.0 * params.delta.sqrt());

        let g = prosecutor_game(vec![]);
        let cert = is_stable(
            &g,
            &Policy::Scheme(d.scheme.clone()),
            &Forecast::binary(0.3).unwrap(),
            params.stability_beta(&oracle.envelope),
            params.stability_gamma(),
        )
        .unwrap();
        assert!(cert.is_valid());
        assert_eq!(cert.reference_action, spec.encode_map(&[0, 1]));
    }

    #[test]
    fn no_split_inside_top_interval() {
        let spec = prosecutor();
        let oracle = PersuasionOracle::new(&spec, PersuasionOracleParams::from_beta(0.05).unwrap()).unwrap();
        let d = oracle.decide(0.7).unwrap();
        assert_eq!(d.scheme, SignalScheme::uninformative(2, 1));
        let d = oracle.decide(0.0).unwrap();
        assert_eq!(d.scheme, SignalScheme::uninformative(2, 0));
    }

    #[test]
    fn schedule_respects_quarter_interval() {
        let env = build_envelope(&prosecutor()).unwrap();
        for k in [10, 12, 14, 16] {
            let p = PersuasionOracleParams::schedule(1 << k, &env).unwrap();
            assert!(p.beta < env.c_len / 4.0);
            assert!(p.delta <= p.beta * p.beta / 16.0);
        }
    }
}
